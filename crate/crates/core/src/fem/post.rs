//! Stress recovery and surface life fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::element_point;
use super::element::QuadratureOptions;
use super::mesh::{Mesh, SurfaceQp};
use crate::error::Result;
use crate::field::{SurfaceField, SurfacePoint};
use crate::material::{von_mises, ElasticParams, Lifing};
use crate::scalar::Real;
use crate::tensor::{Mat3, StressTensor};

/// `(∇u)_ij = ∂u_i/∂x_j` at reference point `xi` of `element`.
pub fn displacement_gradient<T: Real>(mesh: &Mesh<T>, u: &[[T; 3]], element: usize, xi: &[T; 3]) -> Result<Mat3<T>> {
    let el = &mesh.elements[element];
    let p = element_point(el.kind, &mesh.element_coords(element), xi, element)?;
    let mut g = Mat3::zeros();
    for (a, &n) in el.nodes.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                g.0[i][j] = g.0[i][j] + u[n][i] * p.grad[a][j];
            }
        }
    }
    Ok(g)
}

/// Hooke's law `λ tr(ε) I + 2μ ε` with `ε = sym ∇u`.
pub fn stress_from_gradient<T: Real>(elastic: &ElasticParams<T>, grad: &Mat3<T>) -> StressTensor<T> {
    let eps = grad.sym();
    let tr = eps.trace();
    let two_mu = T::lit(2.0) * elastic.mu;
    StressTensor::from_matrix(&Mat3::from_fn(|i, j| {
        let d = if i == j { elastic.lambda * tr } else { T::zero() };
        d + two_mu * eps.0[i][j]
    }))
}

/// Surface quadrature points with the recovered stress at each.
#[derive(Debug, Clone)]
pub struct SurfaceStress<T> {
    pub points: Vec<SurfaceQp<T>>,
    pub grad_u: Vec<Mat3<T>>,
    pub stress: Vec<StressTensor<T>>,
}

pub fn stress_at_surface<T: Real>(
    mesh: &Mesh<T>,
    u: &[[T; 3]],
    elastic: &ElasticParams<T>,
    opts: &QuadratureOptions,
) -> Result<SurfaceStress<T>> {
    let points = mesh.surface_quadrature(opts);
    let grad_u: Vec<Mat3<T>> =
        points.par_iter().map(|q| displacement_gradient(mesh, u, q.element, &q.xi)).collect::<Result<_>>()?;
    let stress = grad_u.iter().map(|g| stress_from_gradient(elastic, g)).collect();
    Ok(SurfaceStress { points, grad_u, stress })
}

/// Per-point von Mises amplitude and life on the surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifeField<T> {
    /// `N_det` at each surface quadrature point.
    pub ndet: SurfaceField<T>,
    /// Elastic von Mises amplitude `vM(σ/2)` at the same points.
    pub amplitude: SurfaceField<T>,
    /// Points whose life hit the runout cap.
    pub runout: Vec<bool>,
}

impl<T: Real> LifeField<T> {
    pub fn runout_count(&self) -> usize {
        self.runout.iter().filter(|&&r| r).count()
    }
}

/// Amplitude stress: half the stress of the load-range solution.
pub fn amplitude<T: Real>(s: &StressTensor<T>) -> StressTensor<T> {
    s.scaled(T::lit(0.5))
}

/// Applies the lifing chain to the amplitude stress at every point.
pub fn life_field<T: Real>(stress: &SurfaceStress<T>, lifing: &Lifing<T>) -> Result<LifeField<T>> {
    let lives: Vec<(T, T, bool)> = stress
        .stress
        .par_iter()
        .map(|s| {
            let vm = von_mises(&amplitude(s));
            let life = lifing.ndet(vm)?;
            Ok((vm, life.cycles, life.runout))
        })
        .collect::<Result<_>>()?;
    let mk = |pick: &dyn Fn(&(T, T, bool)) -> T| {
        SurfaceField::new(
            stress
                .points
                .iter()
                .zip(&lives)
                .map(|(q, l)| SurfacePoint { face: q.face, weight: q.weight, value: pick(l) })
                .collect(),
        )
    };
    Ok(LifeField { ndet: mk(&|l| l.1)?, amplitude: mk(&|l| l.0)?, runout: lives.iter().map(|l| l.2).collect() })
}

/// Stress recovery followed by the lifing chain.
pub fn ndet_surface_field<T: Real>(
    mesh: &Mesh<T>,
    u: &[[T; 3]],
    elastic: &ElasticParams<T>,
    lifing: &Lifing<T>,
    opts: &QuadratureOptions,
) -> Result<LifeField<T>> {
    life_field(&stress_at_surface(mesh, u, elastic, opts)?, lifing)
}

/// Scalar surface field from a closure over quadrature points.
pub fn surface_field<T: Real>(
    mesh: &Mesh<T>,
    opts: &QuadratureOptions,
    f: impl Fn(&SurfaceQp<T>) -> T,
) -> Result<SurfaceField<T>> {
    SurfaceField::new(
        mesh.surface_quadrature(opts)
            .iter()
            .map(|q| SurfacePoint { face: q.face, weight: q.weight, value: f(q) })
            .collect(),
    )
}

/// Quadrature sum `Σ_F Σ_l ω_lF f_lF` in face order.
pub fn surface_integral<T: Real>(field: &SurfaceField<T>) -> T {
    field.integral()
}
