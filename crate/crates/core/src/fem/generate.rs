//! Structured test geometries: boxes, a notched bar and a tetrahedral ball.
//!
//! Meshes are built on a parameter box and pushed through a smooth map, so
//! quadratic elements get curved faces wherever the map bends.

use std::collections::HashMap;

use super::element::{jacobian, ElementKind};
use super::mesh::{DirichletBc, Element, Mesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Face tags of a parameter box, in the order `xmin, xmax, ymin, ymax, zmin, zmax`.
pub const BOX_TAGS: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

/// Notched bar proportions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchSpec {
    pub length: f64,
    pub height: f64,
    pub width: f64,
    /// Groove depth at the centre of the top face.
    pub depth: f64,
    /// Gaussian half-width of the groove along x.
    pub radius: f64,
}

impl Default for NotchSpec {
    fn default() -> Self {
        Self { length: 4.0, height: 1.0, width: 0.5, depth: 0.3, radius: 0.35 }
    }
}

impl NotchSpec {
    fn profile(&self, x: f64) -> (f64, f64) {
        let u = (x - 0.5 * self.length) / self.radius;
        let g = (-u * u).exp();
        (self.height - self.depth * g, 2.0 * self.depth * u / self.radius * g)
    }

    /// Height of the top surface at `x`.
    pub fn top(&self, x: f64) -> f64 {
        self.profile(x).0
    }

    /// Slope of the top surface at `x`.
    pub fn top_slope(&self, x: f64) -> f64 {
        self.profile(x).1
    }

    pub fn map(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0], p[1] * self.top(p[0]) / self.height, p[2]]
    }
}

/// Kuhn split of the unit cube into six positively oriented tetrahedra
/// around the main diagonal; corner ids use bits `(x, y, z)`.
fn kuhn_tets() -> [[usize; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = [[0usize; 4]; 6];
    for (t, p) in PERMS.iter().enumerate() {
        let mut v = 0usize;
        out[t][0] = v;
        for (k, &axis) in p.iter().enumerate() {
            v |= 1 << axis;
            out[t][k + 1] = v;
        }
        // Odd permutations come out left-handed.
        let odd = matches!(t, 1 | 2 | 5);
        if odd {
            out[t].swap(1, 2);
        }
    }
    out
}

/// Structured mesh of the box `[0, size]` with `n` cells per axis, mapped
/// through `map`. Boundary faces are tagged with [`BOX_TAGS`].
pub fn structured<T: Real>(
    kind: ElementKind,
    n: [usize; 3],
    size: [f64; 3],
    map: impl Fn([f64; 3]) -> [f64; 3],
    dirichlet: Vec<DirichletBc>,
) -> Result<Mesh<T>> {
    if n.contains(&0) {
        return Err(Error::Mesh("structured mesh needs at least one cell per axis".into()));
    }
    let id = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);
    let mut params = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                params.push([
                    size[0] * i as f64 / n[0] as f64,
                    size[1] * j as f64 / n[1] as f64,
                    size[2] * k as f64 / n[2] as f64,
                ]);
            }
        }
    }

    let mut elements = Vec::new();
    let kuhn = kuhn_tets();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let corner = |b: usize| id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                if kind.is_simplex() {
                    for t in &kuhn {
                        elements
                            .push(Element { kind: ElementKind::Tet4, nodes: t.iter().map(|&b| corner(b)).collect() });
                    }
                } else {
                    let hex = [0b000, 0b001, 0b011, 0b010, 0b100, 0b101, 0b111, 0b110];
                    elements.push(Element { kind: ElementKind::Hex8, nodes: hex.iter().map(|&b| corner(b)).collect() });
                }
            }
        }
    }
    if kind.is_quadratic() {
        add_midside_nodes(&mut params, &mut elements);
    }

    let eps = 1e-12 * size.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut tags = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for f in 0..el.kind.face_count() {
            let corners: Vec<[f64; 3]> = el.kind.faces()[f].iter().map(|&c| params[el.nodes[c]]).collect();
            for axis in 0..3 {
                for (side, target) in [(0, 0.0), (1, size[axis])] {
                    if corners.iter().all(|p| (p[axis] - target).abs() <= eps) {
                        tags.push((e, f, BOX_TAGS[2 * axis + side].to_string()));
                    }
                }
            }
        }
    }

    let nodes: Vec<[T; 3]> = params.into_iter().map(|p| map(p).map(T::lit)).collect();
    Mesh::new(nodes, elements, &tags, dirichlet)
}

/// Appends one node per element edge at the parameter midpoint and turns
/// linear elements into their quadratic counterparts.
fn add_midside_nodes(params: &mut Vec<[f64; 3]>, elements: &mut [Element]) {
    let mut edge_node: HashMap<(usize, usize), usize> = HashMap::new();
    for el in elements.iter_mut() {
        let q = el.kind.quadratic();
        for &(a, b) in q.edges() {
            let (na, nb) = (el.nodes[a], el.nodes[b]);
            let key = (na.min(nb), na.max(nb));
            let id = *edge_node.entry(key).or_insert_with(|| {
                let (p, r) = (params[na], params[nb]);
                params.push([0.5 * (p[0] + r[0]), 0.5 * (p[1] + r[1]), 0.5 * (p[2] + r[2])]);
                params.len() - 1
            });
            el.nodes.push(id);
        }
        el.kind = q;
    }
}

/// Bar `[0, length] × [0, 1] × [0, 1]` with symmetry rollers on the three
/// minimum faces, ready for a uniform traction on `xmax`.
pub fn patch_bar<T: Real>(kind: ElementKind, n: [usize; 3], length: f64) -> Result<Mesh<T>> {
    structured(
        kind,
        n,
        [length, 1.0, 1.0],
        |p| p,
        vec![DirichletBc::roller("xmin", 0), DirichletBc::roller("ymin", 1), DirichletBc::roller("zmin", 2)],
    )
}

/// Unit cube clamped on `zmin`.
pub fn unit_cube<T: Real>(kind: ElementKind, n: usize) -> Result<Mesh<T>> {
    structured(kind, [n; 3], [1.0; 3], |p| p, vec![DirichletBc::clamped("zmin")])
}

/// Bar with a smooth groove across the full width of its top face (`ymax`),
/// rollers on the minimum faces and `xmax` free for loading.
pub fn notched_bar<T: Real>(kind: ElementKind, n: [usize; 3], spec: &NotchSpec) -> Result<Mesh<T>> {
    let s = *spec;
    structured(
        kind,
        n,
        [s.length, s.height, s.width],
        move |p| s.map(p),
        vec![DirichletBc::roller("xmin", 0), DirichletBc::roller("ymin", 1), DirichletBc::roller("zmin", 2)],
    )
}

/// Tetrahedral ball of radius `radius` obtained by pulling a `2n`-cell cube
/// radially onto the sphere; clamped on the former `zmin` cap.
pub fn ball<T: Real>(n: usize, radius: f64) -> Result<Mesh<T>> {
    let m = structured::<T>(
        ElementKind::Tet4,
        [2 * n; 3],
        [2.0; 3],
        |p| {
            let q = [p[0] - 1.0, p[1] - 1.0, p[2] - 1.0];
            let inf = q.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let two = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
            if two == 0.0 {
                [0.0; 3]
            } else {
                q.map(|c| radius * c * inf / two)
            }
        },
        vec![DirichletBc::clamped("zmin")],
    )?;
    m.check_jacobians(&Default::default())?;
    Ok(m)
}

/// Sum of flat boundary facet areas of a linear tetrahedral mesh, computed
/// from corner coordinates alone.
pub fn facet_area<T: Real>(mesh: &Mesh<T>) -> f64 {
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        let c: Vec<[f64; 3]> =
            mesh.face_nodes(f).iter().take(3).map(|&n| mesh.nodes[n].map(|v| v.to_f64_lossy())).collect();
        let a = [c[1][0] - c[0][0], c[1][1] - c[0][1], c[1][2] - c[0][2]];
        let b = [c[2][0] - c[0][0], c[2][1] - c[0][1], c[2][2] - c[0][2]];
        let x = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        total += 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    }
    total
}

/// True when every Kuhn tetrahedron has positive volume (used by tests).
pub fn kuhn_is_positive() -> bool {
    kuhn_tets().iter().all(|t| {
        let coords: Vec<[f64; 3]> =
            t.iter().map(|&b| [(b & 1) as f64, ((b >> 1) & 1) as f64, ((b >> 2) & 1) as f64]).collect();
        let (_, dn) = ElementKind::Tet4.shape_vec(&[0.0; 3]);
        jacobian(&coords, &dn).det() > 0.0
    })
}
