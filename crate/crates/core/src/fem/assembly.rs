//! Linear-elasticity assembly and solve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::element::{interpolate, jacobian, ElementKind, QuadratureOptions};
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::material::ElasticParams;
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;
use crate::sparse::{self, CsrMatrix, LinearSolver, SolveStats};
use crate::tensor::{dot, norm, Vec3};

/// Volume force density.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodyForce<T> {
    #[default]
    None,
    Uniform {
        f: [T; 3],
    },
    /// `ρ ω² r_⊥` about the axis through `origin` along `axis`.
    Centrifugal {
        density: T,
        omega: T,
        origin: [T; 3],
        axis: [T; 3],
    },
}

impl<T: Real> BodyForce<T> {
    pub fn at(&self, x: &[T; 3]) -> [T; 3] {
        match *self {
            Self::None => [T::zero(); 3],
            Self::Uniform { f } => f,
            Self::Centrifugal { density, omega, origin, axis } => {
                let a = crate::tensor::normalize(&axis);
                let r = [x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]];
                let along = dot(&r, &a);
                let s = density * omega * omega;
                std::array::from_fn(|k| s * (r[k] - along * a[k]))
            }
        }
    }

    /// Centrifugal load from a rotation speed in revolutions per minute.
    pub fn from_rpm(density: T, rpm: T, origin: [T; 3], axis: [T; 3]) -> Self {
        let omega = rpm * T::lit(2.0) * T::PI() / T::lit(60.0);
        Self::Centrifugal { density, omega, origin, axis }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// One load case: constant tractions per face tag plus a body force.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadCase<T> {
    pub tractions: Vec<(String, [T; 3])>,
    pub body: BodyForce<T>,
}

impl<T: Real> LoadCase<T> {
    pub fn traction(&self, tag: &str) -> [T; 3] {
        let mut g = [T::zero(); 3];
        for (t, v) in &self.tractions {
            if t == tag {
                for k in 0..3 {
                    g[k] = g[k] + v[k];
                }
            }
        }
        g
    }

    pub fn with_traction(mut self, tag: impl Into<String>, g: [T; 3]) -> Self {
        self.tractions.push((tag.into(), g));
        self
    }

    pub fn with_body(mut self, body: BodyForce<T>) -> Self {
        self.body = body;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    pub method: LinearSolver,
    /// Relative residual target of the iterative solver.
    pub tol: T,
    pub quadrature: QuadratureOptions,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { method: LinearSolver::Direct, tol: T::lit(1e-10), quadrature: QuadratureOptions::default() }
    }
}

/// Free-DOF numbering; constrained components are eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    index: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &Mesh<T>) -> Self {
        let constrained = mesh.constrained();
        let mut index = Vec::with_capacity(3 * mesh.nodes.len());
        let mut n_free = 0;
        for c in &constrained {
            for &fixed in c {
                if fixed {
                    index.push(None);
                } else {
                    index.push(Some(n_free));
                    n_free += 1;
                }
            }
        }
        Self { index, n_free }
    }

    pub fn free(&self, node: usize, comp: usize) -> Option<usize> {
        self.index[3 * node + comp]
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Full nodal field from free values (constrained entries are zero).
    pub fn expand<T: Real>(&self, x: &[T]) -> Vec<[T; 3]> {
        self.index.chunks(3).map(|c| std::array::from_fn(|k| c[k].map_or(T::zero(), |i| x[i]))).collect()
    }

    /// Free values of a full nodal field.
    pub fn restrict<T: Real>(&self, v: &[[T; 3]]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_free];
        for (n, vals) in v.iter().enumerate() {
            for k in 0..3 {
                if let Some(i) = self.free(n, k) {
                    out[i] = vals[k];
                }
            }
        }
        out
    }
}

/// Shape values, physical gradients and `det J` at a reference point.
pub struct ElementPoint<T> {
    pub n: Vec<T>,
    pub grad: Vec<Vec3<T>>,
    pub det: T,
    pub x: [T; 3],
}

pub fn element_point<T: Real>(
    kind: ElementKind,
    coords: &[[T; 3]],
    xi: &[T; 3],
    element: usize,
) -> Result<ElementPoint<T>> {
    let (n, dn) = kind.shape_vec(xi);
    let j = jacobian(coords, &dn);
    let det = j.det();
    let jinv =
        j.inverse().filter(|_| det > T::zero()).ok_or(Error::InvertedElement { element, det: det.to_f64_lossy() })?;
    // ∇N = J^{-T} ∇̂N
    let grad = dn.iter().map(|d| jinv.tr_mul_vec(d)).collect();
    Ok(ElementPoint { x: interpolate(coords, &n), n, grad, det })
}

/// Dense element stiffness, row-major `3a+i, 3b+j`.
pub fn element_stiffness<T: Real>(
    kind: ElementKind,
    coords: &[[T; 3]],
    elastic: &ElasticParams<T>,
    rule: &QuadratureRule<T>,
    element: usize,
) -> Result<Vec<T>> {
    let nn = kind.node_count();
    let nd = 3 * nn;
    let mut ke = vec![T::zero(); nd * nd];
    let (lam, mu) = (elastic.lambda, elastic.mu);
    for (xi, w) in rule.iter() {
        let p = element_point(kind, coords, xi, element)?;
        let wd = w * p.det;
        for a in 0..nn {
            let ga = p.grad[a];
            for b in 0..nn {
                let gb = p.grad[b];
                let gg = dot(&ga, &gb);
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = lam * ga[i] * gb[j] + mu * ga[j] * gb[i];
                        if i == j {
                            v = v + mu * gg;
                        }
                        let idx = (3 * a + i) * nd + 3 * b + j;
                        ke[idx] = ke[idx] + wd * v;
                    }
                }
            }
        }
    }
    Ok(ke)
}

/// Assembled stiffness on the free DOFs.
#[derive(Debug, Clone)]
pub struct System<T> {
    pub k: CsrMatrix<T>,
    pub dofs: DofMap,
    /// Messages about automatic fallbacks taken during assembly or solve.
    pub notes: Vec<String>,
    pub reduced_hex20: bool,
}

fn sparsity<T: Real>(mesh: &Mesh<T>, dofs: &DofMap) -> CsrMatrix<T> {
    let mut node_nb: Vec<Vec<usize>> = vec![Vec::new(); mesh.nodes.len()];
    for el in &mesh.elements {
        for &a in &el.nodes {
            node_nb[a].extend_from_slice(&el.nodes);
        }
    }
    let mut rows = vec![Vec::new(); dofs.n_free()];
    for (a, nb) in node_nb.iter_mut().enumerate() {
        nb.sort_unstable();
        nb.dedup();
        for i in 0..3 {
            let Some(r) = dofs.free(a, i) else { continue };
            for &b in nb.iter() {
                for j in 0..3 {
                    if let Some(c) = dofs.free(b, j) {
                        rows[r].push(c);
                    }
                }
            }
        }
    }
    CsrMatrix::from_pattern(rows)
}

pub fn assemble_stiffness<T: Real>(
    mesh: &Mesh<T>,
    elastic: &ElasticParams<T>,
    opts: &QuadratureOptions,
) -> Result<System<T>> {
    let dofs = DofMap::new(mesh);
    let mut k = sparsity(mesh, &dofs);
    let kes: Vec<Vec<T>> = mesh
        .elements
        .par_iter()
        .enumerate()
        .map(|(e, el)| element_stiffness(el.kind, &mesh.element_coords(e), elastic, &el.kind.volume_rule(opts), e))
        .collect::<Result<_>>()?;
    for (el, ke) in mesh.elements.iter().zip(&kes) {
        let nd = 3 * el.nodes.len();
        for (a, &na) in el.nodes.iter().enumerate() {
            for i in 0..3 {
                let Some(r) = dofs.free(na, i) else { continue };
                for (b, &nb) in el.nodes.iter().enumerate() {
                    for j in 0..3 {
                        if let Some(c) = dofs.free(nb, j) {
                            k.add(r, c, ke[(3 * a + i) * nd + 3 * b + j]);
                        }
                    }
                }
            }
        }
    }
    let reduced = opts.hex20_reduced && mesh.elements.iter().any(|e| e.kind == ElementKind::Hex20);
    Ok(System { k, dofs, notes: Vec::new(), reduced_hex20: reduced })
}

/// Consistent nodal load vector on the free DOFs.
pub fn load_vector<T: Real>(
    mesh: &Mesh<T>,
    dofs: &DofMap,
    loads: &LoadCase<T>,
    opts: &QuadratureOptions,
) -> Result<Vec<T>> {
    let mut full = vec![[T::zero(); 3]; mesh.nodes.len()];
    if !loads.body.is_zero() {
        let parts: Vec<Vec<[T; 3]>> = mesh
            .elements
            .par_iter()
            .enumerate()
            .map(|(e, el)| {
                let coords = mesh.element_coords(e);
                let mut fe = vec![[T::zero(); 3]; el.nodes.len()];
                for (xi, w) in el.kind.volume_rule::<T>(opts).iter() {
                    let p = element_point(el.kind, &coords, xi, e)?;
                    let f = loads.body.at(&p.x);
                    for a in 0..el.nodes.len() {
                        for k in 0..3 {
                            fe[a][k] = fe[a][k] + w * p.det * p.n[a] * f[k];
                        }
                    }
                }
                Ok(fe)
            })
            .collect::<Result<_>>()?;
        for (el, fe) in mesh.elements.iter().zip(&parts) {
            for (a, &n) in el.nodes.iter().enumerate() {
                for k in 0..3 {
                    full[n][k] = full[n][k] + fe[a][k];
                }
            }
        }
    }
    for (f, bf) in mesh.faces.iter().enumerate() {
        let g = loads.traction(&bf.tag);
        if g.iter().all(|v| *v == T::zero()) {
            continue;
        }
        let el = &mesh.elements[bf.element];
        for q in mesh.face_quadrature(f, opts) {
            let (n, _) = el.kind.shape_vec(&q.xi);
            for (a, &node) in el.nodes.iter().enumerate() {
                for k in 0..3 {
                    full[node][k] = full[node][k] + q.weight * n[a] * g[k];
                }
            }
        }
    }
    Ok(dofs.restrict(&full))
}

impl<T: Real> System<T> {
    /// Solves `K x = b` on the free DOFs.
    pub fn solve(&self, b: &[T], opts: &SolverOptions<T>) -> Result<(Vec<T>, SolveStats)> {
        let (x, stats) = sparse::solve(&self.k, b, opts.method, opts.tol)?;
        let limit = opts.tol.max(T::lit(1e-9)).to_f64_lossy();
        if !(stats.relative_residual <= limit) {
            return Err(Error::NoConvergence {
                solver: "linear solve",
                iterations: stats.iterations,
                residual: stats.relative_residual,
            });
        }
        Ok((x, stats))
    }
}

/// Solved displacement with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub u: Vec<[T; 3]>,
    pub stats: SolveStats,
    /// `½ uᵀ K u`.
    pub energy: T,
    pub notes: Vec<String>,
}

/// Assembles stiffness and loads and solves for the displacement. A
/// singular hex20 system under reduced integration is retried with the
/// full 3×3×3 rule.
pub fn assemble_and_solve<T: Real>(
    mesh: &Mesh<T>,
    elastic: &ElasticParams<T>,
    loads: &LoadCase<T>,
    opts: &SolverOptions<T>,
) -> Result<(Solution<T>, System<T>)> {
    let mut opts = *opts;
    let mut system = assemble_stiffness(mesh, elastic, &opts.quadrature)?;
    let mut b = load_vector(mesh, &system.dofs, loads, &opts.quadrature)?;
    let solved = match system.solve(&b, &opts) {
        Err(Error::Assembly(msg)) if system.reduced_hex20 => {
            opts.quadrature.hex20_reduced = false;
            let note = format!("reduced hex20 integration gave a singular system ({msg}); re-assembled with 3x3x3");
            system = assemble_stiffness(mesh, elastic, &opts.quadrature)?;
            system.notes.push(note);
            b = load_vector(mesh, &system.dofs, loads, &opts.quadrature)?;
            system.solve(&b, &opts)?
        }
        other => other?,
    };
    let (x, stats) = solved;
    let kx = system.k.mul_vec(&x);
    let energy = T::lit(0.5) * x.iter().zip(&kx).map(|(&a, &b)| a * b).sum::<T>();
    let u = system.dofs.expand(&x);
    Ok((Solution { u, stats, energy, notes: system.notes.clone() }, system))
}

/// Area-weighted outward normal and area of a face (diagnostics).
pub fn face_normal_area<T: Real>(mesh: &Mesh<T>, f: usize, opts: &QuadratureOptions) -> (Vec3<T>, T) {
    let mut n = [T::zero(); 3];
    let mut area = T::zero();
    for q in mesh.face_quadrature(f, opts) {
        for k in 0..3 {
            n[k] = n[k] + q.weight * q.normal[k];
        }
        area = area + q.weight;
    }
    let len = norm(&n);
    (n.map(|v| v / len), area)
}
