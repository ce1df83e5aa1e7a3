//! Adjoint shape sensitivity of the surface life functional
//! `J(Ω) = ∫_∂Ω (t / N_det(∇u))^m dA`.
//!
//! The Eulerian derivative is evaluated in Hadamard form,
//! `dJ[V] = ∫_∂Ω_N ψ (V·ν) dA`, with
//!
//! `ψ = f·p + κ g·p − σ(u):∇_Γ p + ∇F(∇u) : (∂_ν ∇u) + κ F(∇u)`
//!
//! where `p` solves the adjoint problem `B(v, p) = ∫_∂Ω ∇F(∇u):∇v dA`,
//! `κ` is the sum of the principal curvatures (outward normal) and
//! `∂_ν ∇u` is recovered by a least-squares fit over each owning element. The central
//! finite-difference derivative of `J` under node perturbations is the
//! reference it is checked against.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_and_solve, element_point, stress_at_surface, LoadCase, Mesh, SolverOptions, SurfaceQp, SurfaceStress,
    System,
};
use crate::material::{von_mises, ElasticParams, Lifing};
use crate::scalar::{KahanSum, Real};
use crate::sparse::SolveStats;
use crate::tensor::{dot, norm, sub, Mat3, StressTensor, Vec3};

/// Integrand `F(∇u) = (t / N_det)^m` of the life functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcfObjective<T> {
    pub lifing: Lifing<T>,
    pub elastic: ElasticParams<T>,
    /// Weibull shape exponent.
    pub m: T,
    /// Load cycles at which the functional is evaluated.
    pub t: T,
}

/// Value and `∂F/∂(∇u)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePoint<T> {
    pub value: T,
    pub gradient: Mat3<T>,
    pub runout: bool,
}

impl<T: Real> LcfObjective<T> {
    pub fn new(lifing: Lifing<T>, elastic: ElasticParams<T>, m: T, t: T) -> Result<Self> {
        if !(m >= T::one()) {
            return Err(Error::param("m", format!("must be >= 1, got {m}")));
        }
        if !(t > T::zero() && t.is_finite()) {
            return Err(Error::param("t", format!("must be > 0, got {t}")));
        }
        Ok(Self { lifing, elastic, m, t })
    }

    fn stress(&self, g: &Mat3<T>) -> StressTensor<T> {
        crate::fem::stress_from_gradient(&self.elastic, g)
    }

    /// `F` alone.
    pub fn value(&self, grad_u: &Mat3<T>) -> Result<T> {
        let s = self.stress(grad_u);
        let life = self.lifing.ndet(T::lit(0.5) * von_mises(&s))?;
        Ok((self.t / life.cycles).powf(self.m))
    }

    /// `F` and its gradient through the chain `vM → SD → RO → CMB⁻¹`.
    /// Runout points have a zero gradient.
    pub fn evaluate(&self, grad_u: &Mat3<T>) -> Result<ObjectivePoint<T>> {
        let s = self.stress(grad_u);
        let vm = von_mises(&s);
        let (life, slope) = self.lifing.ndet_with_slope(T::lit(0.5) * vm)?;
        let value = (self.t / life.cycles).powf(self.m);
        if life.runout || vm == T::zero() {
            return Ok(ObjectivePoint { value, gradient: Mat3::zeros(), runout: life.runout });
        }
        // ∂vM(σ/2)/∂(∇u) = (3μ / 2vM) dev σ since the deviator is trace-free.
        let d_f_d_vm = -self.m * value / life.cycles * slope;
        let dev = s.deviator().to_matrix();
        let c = d_f_d_vm * T::lit(1.5) * self.elastic.mu / vm;
        Ok(ObjectivePoint { value, gradient: dev.scaled(c), runout: false })
    }
}

/// `F` and `∇F` at every surface quadrature point.
#[derive(Debug, Clone)]
pub struct ObjectiveField<T> {
    pub stress: SurfaceStress<T>,
    pub points: Vec<ObjectivePoint<T>>,
}

impl<T: Real> ObjectiveField<T> {
    /// `J = Σ ω F`.
    pub fn integral(&self) -> T {
        self.stress.points.iter().zip(&self.points).map(|(q, p)| q.weight * p.value).collect::<KahanSum<T>>().value()
    }

    pub fn runout_count(&self) -> usize {
        self.points.iter().filter(|p| p.runout).count()
    }
}

pub fn surface_gradient_of_objective<T: Real>(
    mesh: &Mesh<T>,
    u: &[[T; 3]],
    objective: &LcfObjective<T>,
    opts: &SolverOptions<T>,
) -> Result<ObjectiveField<T>> {
    let stress = stress_at_surface(mesh, u, &objective.elastic, &opts.quadrature)?;
    let points = stress.grad_u.par_iter().map(|g| objective.evaluate(g)).collect::<Result<_>>()?;
    Ok(ObjectiveField { stress, points })
}

/// State solve followed by `J`.
pub fn objective_value<T: Real>(
    mesh: &Mesh<T>,
    loads: &LoadCase<T>,
    objective: &LcfObjective<T>,
    opts: &SolverOptions<T>,
) -> Result<T> {
    let (sol, _) = assemble_and_solve(mesh, &objective.elastic, loads, opts)?;
    let stress = stress_at_surface(mesh, &sol.u, &objective.elastic, &opts.quadrature)?;
    let mut acc = KahanSum::new();
    for (q, g) in stress.points.iter().zip(&stress.grad_u) {
        acc.add(q.weight * objective.value(g)?);
    }
    Ok(acc.value())
}

/// Right-hand side `∫_∂Ω ∇F:∇v dA` on the free DOFs.
pub fn adjoint_rhs<T: Real>(mesh: &Mesh<T>, system: &System<T>, field: &ObjectiveField<T>) -> Result<Vec<T>> {
    let mut full = vec![[T::zero(); 3]; mesh.nodes.len()];
    for (q, p) in field.stress.points.iter().zip(&field.points) {
        if p.runout {
            continue;
        }
        let el = &mesh.elements[q.element];
        let ep = element_point(el.kind, &mesh.element_coords(q.element), &q.xi, q.element)?;
        for (a, &node) in el.nodes.iter().enumerate() {
            for i in 0..3 {
                let g: T = (0..3).map(|l| p.gradient.0[i][l] * ep.grad[a][l]).sum();
                full[node][i] = full[node][i] + q.weight * g;
            }
        }
    }
    Ok(system.dofs.restrict(&full))
}

/// Adjoint state on the mesh nodes, zero on constrained components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjointField<T> {
    pub p: Vec<[T; 3]>,
    pub stats: SolveStats,
}

/// Solves `K p = r` with the state stiffness (symmetric, so `B(v, p) = vᵀ K p`).
pub fn solve_adjoint<T: Real>(
    mesh: &Mesh<T>,
    system: &System<T>,
    field: &ObjectiveField<T>,
    opts: &SolverOptions<T>,
) -> Result<AdjointField<T>> {
    let r = adjoint_rhs(mesh, system, field)?;
    if r.iter().all(|v| *v == T::zero()) {
        return Ok(AdjointField {
            p: vec![[T::zero(); 3]; mesh.nodes.len()],
            stats: SolveStats { iterations: 0, relative_residual: 0.0 },
        });
    }
    let (x, stats) = system.solve(&r, opts)?;
    Ok(AdjointField { p: system.dofs.expand(&x), stats })
}

/// `∂_ν (∇u)` at each point from a least-squares cubic fit of `∇u` over the
/// owning element, sampled at a 4-point-per-direction rule.
///
/// Fitting over the owner alone keeps the fit inside one polynomial piece;
/// node-patch fits straddle the inter-element jumps of `∇u` and converge
/// with a much larger constant.
pub fn recover_normal_gradient_derivative<T: Real>(
    mesh: &Mesh<T>,
    u: &[[T; 3]],
    points: &[SurfaceQp<T>],
) -> Result<Vec<Mat3<T>>> {
    let mut owners: Vec<usize> = points.iter().map(|q| q.element).collect();
    owners.sort_unstable();
    owners.dedup();
    let fits: Vec<(usize, PatchFit<T>)> = owners
        .par_iter()
        .map(|&e| Ok((e, PatchFit::new(mesh, u, e, FIT_DEGREE, FIT_POINTS)?)))
        .collect::<Result<_>>()?;
    let fits: HashMap<usize, PatchFit<T>> = fits.into_iter().collect();
    Ok(points.iter().map(|q| fits[&q.element].normal_derivative(&q.x, &q.normal)).collect())
}

const FIT_DEGREE: usize = 3;
const FIT_POINTS: usize = 4;

/// Polynomial fit of the nine components of `∇u` over one element.
#[derive(Debug, Clone)]
struct PatchFit<T> {
    centre: [T; 3],
    scale: T,
    degree: usize,
    /// Coefficients `[component][monomial]`.
    coef: Vec<Vec<T>>,
}

const EXPONENTS: [[i32; 3]; 20] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
    [0, 1, 1],
    [1, 0, 1],
    [1, 1, 0],
    [3, 0, 0],
    [0, 3, 0],
    [0, 0, 3],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [0, 2, 1],
    [1, 0, 2],
    [0, 1, 2],
    [1, 1, 1],
];

fn monomial_count(degree: usize) -> usize {
    [1, 4, 10, 20][degree]
}

fn monomials<T: Real>(y: &[T; 3], n: usize) -> Vec<T> {
    EXPONENTS[..n].iter().map(|e| y[0].powi(e[0]) * y[1].powi(e[1]) * y[2].powi(e[2])).collect()
}

/// Directional derivative of each monomial along `d`.
fn monomial_derivatives<T: Real>(y: &[T; 3], d: &Vec3<T>, n: usize) -> Vec<T> {
    EXPONENTS[..n]
        .iter()
        .map(|e| {
            let mut s = T::zero();
            for k in 0..3 {
                if e[k] == 0 {
                    continue;
                }
                let mut term = T::lit(e[k] as f64) * d[k];
                for j in 0..3 {
                    let p = if j == k { e[j] - 1 } else { e[j] };
                    term = term * y[j].powi(p);
                }
                s = s + term;
            }
            s
        })
        .collect()
}

impl<T: Real> PatchFit<T> {
    fn new(mesh: &Mesh<T>, u: &[[T; 3]], owner: usize, degree: usize, points: usize) -> Result<Self> {
        let nm = monomial_count(degree);
        let el = &mesh.elements[owner];
        let coords = mesh.element_coords(owner);
        let nc = T::from_usize_lossy(coords.len());
        let centre: [T; 3] = std::array::from_fn(|k| coords.iter().map(|p| p[k]).sum::<T>() / nc);
        let scale = coords.iter().map(|p| norm(&sub(p, &centre))).fold(T::zero(), T::max);
        let rule =
            if el.kind.is_simplex() { crate::quadrature::tetrahedron(points) } else { crate::quadrature::hex(points) };
        let mut samples: Vec<(Vec<T>, Mat3<T>)> = Vec::with_capacity(rule.points.len());
        for (xi, _) in rule.iter() {
            let p = element_point(el.kind, &coords, xi, owner)?;
            let mut g = Mat3::zeros();
            for (a, &n) in el.nodes.iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        g.0[i][j] = g.0[i][j] + u[n][i] * p.grad[a][j];
                    }
                }
            }
            let y = sub(&p.x, &centre).map(|v| v / scale);
            samples.push((monomials(&y, nm), g));
        }
        if samples.len() < nm {
            return Err(Error::Quadrature(format!(
                "element {owner}: patch has only {} samples for the fit",
                samples.len()
            )));
        }
        let mut ata = vec![T::zero(); nm * nm];
        let mut atb = vec![[T::zero(); 9]; nm];
        for (m, g) in &samples {
            for r in 0..nm {
                for c in 0..nm {
                    ata[r * nm + c] = ata[r * nm + c] + m[r] * m[c];
                }
                for k in 0..9 {
                    atb[r][k] = atb[r][k] + m[r] * g.0[k / 3][k % 3];
                }
            }
        }
        let mut coef = Vec::with_capacity(9);
        for k in 0..9 {
            let b: Vec<T> = atb.iter().map(|row| row[k]).collect();
            coef.push(
                solve_dense(&ata, &b, nm)
                    .ok_or_else(|| Error::Quadrature(format!("element {owner}: singular patch fit")))?,
            );
        }
        Ok(Self { centre, scale, degree, coef })
    }

    fn normal_derivative(&self, x: &[T; 3], nu: &Vec3<T>) -> Mat3<T> {
        let y = sub(x, &self.centre).map(|v| v / self.scale);
        let dm = monomial_derivatives(&y, nu, monomial_count(self.degree));
        Mat3::from_fn(|i, j| self.coef[3 * i + j].iter().zip(&dm).map(|(&c, &d)| c * d).sum::<T>() / self.scale)
    }
}

/// Gaussian elimination with partial pivoting on a dense `n × n` system.
fn solve_dense<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let big = m.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())?;
        if !(m[piv * n + col].abs() > big * T::epsilon() * T::lit(16.0)) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            for k in col..n {
                m[r * n + k] = m[r * n + k] - f * m[col * n + k];
            }
            x[r] = x[r] - f * x[col];
        }
    }
    for col in (0..n).rev() {
        let s: T = (col + 1..n).map(|k| m[col * n + k] * x[k]).sum();
        x[col] = (x[col] - s) / m[col * n + col];
    }
    Some(x)
}

/// Dihedral angle above which an edge is treated as a geometric feature and
/// contributes no curvature.
pub const FEATURE_ANGLE: f64 = 30.0;

/// Sum of principal curvatures at each surface point: the tangential
/// divergence of the face normal inside the face, plus the normal jumps
/// across non-feature edges spread evenly over the adjacent faces.
pub fn mean_curvature<T: Real>(mesh: &Mesh<T>, points: &[SurfaceQp<T>]) -> Vec<T> {
    let edge = edge_curvature(mesh);
    points
        .iter()
        .map(|q| {
            let rs = face_parameters(mesh, q);
            within_face_curvature(mesh, q.face, &rs) + edge[q.face]
        })
        .collect()
}

/// Face parameters of a surface point, recovered from its reference coordinates.
fn face_parameters<T: Real>(mesh: &Mesh<T>, q: &SurfaceQp<T>) -> [T; 2] {
    let bf = &mesh.faces[q.face];
    let kind = mesh.elements[bf.element].kind;
    let (x0, [tr, ts]) = kind.face_map::<T>(bf.local, &[T::zero(), T::zero()]);
    // Reference faces are flat parallelograms, so the face map is affine.
    let d = sub(&q.xi, &x0);
    let (a, b, c) = (dot(&tr, &tr), dot(&tr, &ts), dot(&ts, &ts));
    let (e, f) = (dot(&d, &tr), dot(&d, &ts));
    let det = a * c - b * b;
    [(c * e - b * f) / det, (a * f - b * e) / det]
}

fn within_face_curvature<T: Real>(mesh: &Mesh<T>, f: usize, rs: &[T; 2]) -> T {
    let h = T::lit(1e-5);
    let g0 = mesh.face_geometry(f, rs);
    let dn = |k: usize| {
        let mut p = *rs;
        let mut m = *rs;
        p[k] = p[k] + h;
        m[k] = m[k] - h;
        let (np, nm) = (mesh.face_geometry(f, &p).normal, mesh.face_geometry(f, &m).normal);
        std::array::from_fn::<T, 3, _>(|i| (np[i] - nm[i]) / (h + h))
    };
    let [xr, xs] = g0.tangents;
    let (nr, ns) = (dn(0), dn(1));
    // div_Γ ν = g^{αβ} (∂_α ν · ∂_β x).
    let (grr, grs, gss) = (dot(&xr, &xr), dot(&xr, &xs), dot(&xs, &xs));
    let det = grr * gss - grs * grs;
    (gss * dot(&nr, &xr) - grs * (dot(&nr, &xs) + dot(&ns, &xr)) + grr * dot(&ns, &xs)) / det
}

/// Curvature concentrated on boundary edges, per face: `Σ ½ θ_e ℓ_e / A_F`.
fn edge_curvature<T: Real>(mesh: &Mesh<T>) -> Vec<T> {
    let feature = T::lit(FEATURE_ANGLE).to_radians();
    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for f in 0..mesh.faces.len() {
        let bf = &mesh.faces[f];
        let el = &mesh.elements[bf.element];
        let corners = el.kind.faces()[bf.local];
        for k in 0..corners.len() {
            let (a, b) = (el.nodes[corners[k]], el.nodes[corners[(k + 1) % corners.len()]]);
            edges.entry((a.min(b), a.max(b))).or_default().push((f, k));
        }
    }
    let areas: Vec<T> = (0..mesh.faces.len()).map(|f| face_area(mesh, f)).collect();
    let mut out = vec![T::zero(); mesh.faces.len()];
    for (&(a, b), faces) in &edges {
        let [(f1, k1), (f2, k2)] = faces[..] else { continue };
        let (x1, n1) = edge_midpoint_normal(mesh, f1, k1);
        let (_, n2) = edge_midpoint_normal(mesh, f2, k2);
        let theta = dot(&n1, &n2).max(-T::one()).min(T::one()).acos();
        if theta >= feature {
            continue;
        }
        let c1 = face_centroid(mesh, f1);
        let c2 = face_centroid(mesh, f2);
        let sign = if dot(&sub(&c2, &c1), &sub(&n2, &n1)) >= T::zero() { T::one() } else { -T::one() };
        let len = edge_length(mesh, a, b, &x1);
        let half = T::lit(0.5) * sign * theta * len;
        out[f1] = out[f1] + half / areas[f1];
        out[f2] = out[f2] + half / areas[f2];
    }
    out
}

fn face_corner_params<T: Real>(mesh: &Mesh<T>, f: usize) -> Vec<[T; 2]> {
    let kind = mesh.elements[mesh.faces[f].element].kind;
    if kind.is_simplex() {
        vec![[T::zero(), T::zero()], [T::one(), T::zero()], [T::zero(), T::one()]]
    } else {
        let o = T::one();
        vec![[-o, -o], [o, -o], [o, o], [-o, o]]
    }
}

fn edge_midpoint_normal<T: Real>(mesh: &Mesh<T>, f: usize, k: usize) -> ([T; 3], Vec3<T>) {
    let c = face_corner_params(mesh, f);
    let (p, q) = (c[k], c[(k + 1) % c.len()]);
    let half = T::lit(0.5);
    let g = mesh.face_geometry(f, &[half * (p[0] + q[0]), half * (p[1] + q[1])]);
    (g.x, g.normal)
}

fn face_centroid<T: Real>(mesh: &Mesh<T>, f: usize) -> [T; 3] {
    let kind = mesh.elements[mesh.faces[f].element].kind;
    let rs = if kind.is_simplex() { [T::one() / T::lit(3.0); 2] } else { [T::zero(); 2] };
    mesh.face_geometry(f, &rs).x
}

fn face_area<T: Real>(mesh: &Mesh<T>, f: usize) -> T {
    mesh.face_quadrature(f, &Default::default()).iter().map(|q| q.weight).sum()
}

/// Edge length through its midpoint (exact for straight edges, a chord
/// polyline for curved ones).
fn edge_length<T: Real>(mesh: &Mesh<T>, a: usize, b: usize, mid: &[T; 3]) -> T {
    norm(&sub(&mesh.nodes[a], mid)) + norm(&sub(mid, &mesh.nodes[b]))
}

/// Hadamard density on the Neumann part of the boundary.
#[derive(Debug, Clone)]
pub struct HadamardDensity<T> {
    pub points: Vec<SurfaceQp<T>>,
    pub psi: Vec<T>,
    pub curvature: Vec<T>,
    /// Runout points, where the density is set to zero.
    pub runout: Vec<bool>,
    /// Per-point contributions: load, tangential stress, normal derivative, curvature.
    pub terms: Vec<[T; 4]>,
}

impl<T: Real> HadamardDensity<T> {
    /// `∫ ψ (V·ν) dA` for a perturbation field `V`.
    pub fn directional_derivative(&self, v: impl Fn(&[T; 3]) -> [T; 3]) -> T {
        self.points
            .iter()
            .zip(&self.psi)
            .map(|(q, &psi)| q.weight * psi * dot(&v(&q.x), &q.normal))
            .collect::<KahanSum<T>>()
            .value()
    }

    pub fn area(&self) -> T {
        self.points.iter().map(|q| q.weight).collect::<KahanSum<T>>().value()
    }

    /// Area-weighted root mean square of `ψ`.
    pub fn rms(&self) -> T {
        let s = self.points.iter().zip(&self.psi).map(|(q, &p)| q.weight * p * p).collect::<KahanSum<T>>().value();
        (s / self.area()).sqrt()
    }

    /// Area-weighted mean of `ψ` on each face that carries density.
    pub fn per_face(&self) -> Vec<(usize, T)> {
        let mut out: Vec<(usize, T, T)> = Vec::new();
        for (q, &p) in self.points.iter().zip(&self.psi) {
            match out.last_mut() {
                Some(last) if last.0 == q.face => {
                    last.1 = last.1 + q.weight * p;
                    last.2 = last.2 + q.weight;
                }
                _ => out.push((q.face, q.weight * p, q.weight)),
            }
        }
        out.into_iter().map(|(f, s, a)| (f, s / a)).collect()
    }
}

/// Evaluates `ψ` at the surface quadrature points of the Neumann faces.
pub fn hadamard_density<T: Real>(
    mesh: &Mesh<T>,
    u: &[[T; 3]],
    adjoint: &AdjointField<T>,
    field: &ObjectiveField<T>,
    loads: &LoadCase<T>,
) -> Result<HadamardDensity<T>> {
    let keep: Vec<usize> = (0..field.stress.points.len())
        .filter(|&i| !mesh.is_dirichlet_tag(&mesh.faces[field.stress.points[i].face].tag))
        .collect();
    let points: Vec<SurfaceQp<T>> = keep.iter().map(|&i| field.stress.points[i]).collect();
    let curvature = mean_curvature(mesh, &points);
    let d_grad = recover_normal_gradient_derivative(mesh, u, &points)?;
    let mut psi = Vec::with_capacity(points.len());
    let mut terms = Vec::with_capacity(points.len());
    let mut runout = Vec::with_capacity(points.len());
    for (k, &i) in keep.iter().enumerate() {
        let q = &points[k];
        let obj = &field.points[i];
        runout.push(obj.runout);
        if obj.runout {
            psi.push(T::zero());
            terms.push([T::zero(); 4]);
            continue;
        }
        let el = &mesh.elements[q.element];
        let ep = element_point(el.kind, &mesh.element_coords(q.element), &q.xi, q.element)?;
        let mut p_val = [T::zero(); 3];
        let mut grad_p = Mat3::zeros();
        for (a, &n) in el.nodes.iter().enumerate() {
            for i in 0..3 {
                p_val[i] = p_val[i] + ep.n[a] * adjoint.p[n][i];
                for j in 0..3 {
                    grad_p.0[i][j] = grad_p.0[i][j] + adjoint.p[n][i] * ep.grad[a][j];
                }
            }
        }
        let kappa = curvature[k];
        let f = loads.body.at(&q.x);
        let g = loads.traction(&mesh.faces[q.face].tag);
        let load = dot(&f, &p_val) + kappa * dot(&g, &p_val);
        // σ : ∇_Γ p with ∇_Γ p = ∇p (I − ν⊗ν).
        let sigma = field.stress.stress[i].to_matrix();
        let gp_n = grad_p.mul_vec(&q.normal);
        let s_n = sigma.mul_vec(&q.normal);
        let tangential = -(sigma.ddot(&grad_p) - dot(&s_n, &gp_n));
        let normal = obj.gradient.ddot(&d_grad[k]);
        let curv = kappa * obj.value;
        terms.push([load, tangential, normal, curv]);
        psi.push(load + tangential + normal + curv);
    }
    Ok(HadamardDensity { points, psi, curvature, runout, terms })
}

/// Everything the adjoint evaluation produces for one configuration.
#[derive(Debug, Clone)]
pub struct ShapeSensitivity<T> {
    pub objective: T,
    pub field: ObjectiveField<T>,
    pub adjoint: AdjointField<T>,
    pub density: HadamardDensity<T>,
    pub notes: Vec<String>,
}

/// State solve, adjoint solve and density in one call.
pub fn shape_sensitivity<T: Real>(
    mesh: &Mesh<T>,
    loads: &LoadCase<T>,
    objective: &LcfObjective<T>,
    opts: &SolverOptions<T>,
) -> Result<ShapeSensitivity<T>> {
    let (sol, system) = assemble_and_solve(mesh, &objective.elastic, loads, opts)?;
    let field = surface_gradient_of_objective(mesh, &sol.u, objective, opts)?;
    let adjoint = solve_adjoint(mesh, &system, &field, opts)?;
    let density = hadamard_density(mesh, &sol.u, &adjoint, &field, loads)?;
    let mut notes = sol.notes;
    let n_runout = density.runout.iter().filter(|&&r| r).count();
    if n_runout > 0 {
        notes.push(format!("{n_runout} surface points at the runout cap carry zero density"));
    }
    Ok(ShapeSensitivity { objective: field.integral(), field, adjoint, density, notes })
}

/// Central difference `(J(Ω + hV) − J(Ω − hV)) / 2h` with the state
/// re-solved on both perturbed meshes.
pub fn fd_shape_gradient<T: Real>(
    mesh: &Mesh<T>,
    loads: &LoadCase<T>,
    objective: &LcfObjective<T>,
    opts: &SolverOptions<T>,
    v: impl Fn(&[T; 3]) -> [T; 3] + Sync,
    h: T,
) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::param("h", format!("step must be > 0, got {h}")));
    }
    let shifted = |s: T| {
        mesh.perturbed(|_, x| v(x).map(|c| s * c)).map_err(|e| match e {
            Error::InvertedElement { element, det } => Error::Domain {
                what: "fd_shape_gradient",
                detail: format!("step {h} inverts element {element} (det J = {det:e}); use a smaller step"),
            },
            other => other,
        })
    };
    let (plus, minus) = (shifted(h)?, shifted(-h)?);
    let (jp, jm) = rayon::join(
        || objective_value(&plus, loads, objective, opts),
        || objective_value(&minus, loads, objective, opts),
    );
    Ok((jp? - jm?) / (h + h))
}

/// One adjoint-versus-finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    #[serde(rename = "dJ_adjoint")]
    pub dj_adjoint: f64,
    #[serde(rename = "dJ_fd")]
    pub dj_fd: f64,
    pub relative_gap: f64,
}

impl GradientCheck {
    /// Gap relative to the finite-difference value.
    pub fn new(dj_adjoint: f64, dj_fd: f64) -> Self {
        let diff = (dj_adjoint - dj_fd).abs();
        let relative_gap = if diff == 0.0 { 0.0 } else { diff / dj_fd.abs() };
        Self { dj_adjoint, dj_fd, relative_gap }
    }
}

/// Area-weighted standard deviation of `ψ`: zero when the density is
/// constant, i.e. when the first-order optimality condition holds.
pub fn optimality_residual<T: Real>(density: &HadamardDensity<T>) -> T {
    let area = density.area();
    if area == T::zero() {
        return T::zero();
    }
    let w = || density.points.iter().map(|q| q.weight).zip(density.psi.iter().copied());
    let mean = w().map(|(a, p)| a * p).collect::<KahanSum<T>>().value() / area;
    let var = w().map(|(a, p)| a * (p - mean) * (p - mean)).collect::<KahanSum<T>>().value() / area;
    var.sqrt()
}
