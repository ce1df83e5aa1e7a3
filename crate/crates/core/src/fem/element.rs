//! Lagrange elements on reference tetrahedra and hexahedra.
//!
//! Node numbering follows the usual Abaqus/CalculiX convention. The
//! reference tetrahedron is the unit simplex; the reference hexahedron is
//! `[-1, 1]³`. Local faces are listed counter-clockwise seen from outside.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quadrature::{self, QuadratureRule};
use crate::scalar::Real;
use crate::tensor::{cross, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Tet4,
    Tet10,
    Hex8,
    Hex20,
}

pub const ALL_KINDS: [ElementKind; 4] = [ElementKind::Tet4, ElementKind::Tet10, ElementKind::Hex8, ElementKind::Hex20];

const TET_CORNERS: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const TET_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)];
const TET_FACES: [&[usize]; 4] = [&[0, 2, 1], &[0, 1, 3], &[1, 2, 3], &[0, 3, 2]];

const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];
const HEX_EDGES: [(usize, usize); 12] =
    [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)];
const HEX_FACES: [&[usize]; 6] =
    [&[0, 3, 2, 1], &[4, 5, 6, 7], &[0, 1, 5, 4], &[1, 2, 6, 5], &[2, 3, 7, 6], &[3, 0, 4, 7]];

/// Surface and volume rule choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Gauss points per direction on quadrilateral faces.
    pub quad_face_points: usize,
    /// Exactness degree on triangular faces.
    pub tri_face_degree: usize,
    /// Use the reduced 2×2×2 volume rule for hex20.
    pub hex20_reduced: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { quad_face_points: 4, tri_face_degree: 8, hex20_reduced: true }
    }
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tet4 => "tet4",
            Self::Tet10 => "tet10",
            Self::Hex8 => "hex8",
            Self::Hex20 => "hex20",
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            Self::Tet4 => 4,
            Self::Tet10 => 10,
            Self::Hex8 => 8,
            Self::Hex20 => 20,
        }
    }

    pub fn corner_count(self) -> usize {
        if self.is_simplex() {
            4
        } else {
            8
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(self, Self::Tet4 | Self::Tet10)
    }

    pub fn is_quadratic(self) -> bool {
        matches!(self, Self::Tet10 | Self::Hex20)
    }

    /// The linear element with the same corners.
    pub fn linear(self) -> Self {
        if self.is_simplex() {
            Self::Tet4
        } else {
            Self::Hex8
        }
    }

    /// The quadratic element with the same corners.
    pub fn quadratic(self) -> Self {
        if self.is_simplex() {
            Self::Tet10
        } else {
            Self::Hex20
        }
    }

    /// Corner pairs carrying the mid-side nodes, in node order.
    pub fn edges(self) -> &'static [(usize, usize)] {
        if self.is_simplex() {
            &TET_EDGES
        } else {
            &HEX_EDGES
        }
    }

    /// Corner lists of the local faces.
    pub fn faces(self) -> &'static [&'static [usize]] {
        if self.is_simplex() {
            &TET_FACES
        } else {
            &HEX_FACES
        }
    }

    pub fn face_count(self) -> usize {
        self.faces().len()
    }

    /// All local nodes on face `f`: its corners, then (quadratic elements)
    /// the mid-side nodes of its edges in corner-cycle order.
    pub fn face_nodes(self, f: usize) -> Vec<usize> {
        let corners = self.faces()[f];
        let mut nodes = corners.to_vec();
        if self.is_quadratic() {
            let nc = self.corner_count();
            for k in 0..corners.len() {
                let (a, b) = (corners[k], corners[(k + 1) % corners.len()]);
                let e = self
                    .edges()
                    .iter()
                    .position(|&(p, q)| (p, q) == (a, b) || (p, q) == (b, a))
                    .expect("face edge is an element edge");
                nodes.push(nc + e);
            }
        }
        nodes
    }

    /// Reference coordinates of every node.
    pub fn reference_nodes<T: Real>(self) -> Vec<[T; 3]> {
        let corners: &[[f64; 3]] = if self.is_simplex() { &TET_CORNERS } else { &HEX_CORNERS };
        let mut out: Vec<[f64; 3]> = corners.to_vec();
        if self.is_quadratic() {
            for &(a, b) in self.edges() {
                let (p, q) = (corners[a], corners[b]);
                out.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
            }
        }
        out.into_iter().map(|p| p.map(T::lit)).collect()
    }

    pub fn reference_centroid<T: Real>(self) -> [T; 3] {
        if self.is_simplex() {
            [T::lit(0.25); 3]
        } else {
            [T::zero(); 3]
        }
    }

    /// Shape values and reference gradients at `xi`.
    pub fn shape<T: Real>(self, xi: &[T; 3], n: &mut [T], dn: &mut [[T; 3]]) {
        debug_assert!(n.len() >= self.node_count() && dn.len() >= self.node_count());
        match self {
            Self::Tet4 => tet4(xi, n, dn),
            Self::Tet10 => tet10(xi, n, dn),
            Self::Hex8 => hex8(xi, n, dn),
            Self::Hex20 => hex20(xi, n, dn),
        }
    }

    /// Shape values and gradients as fresh vectors.
    pub fn shape_vec<T: Real>(self, xi: &[T; 3]) -> (Vec<T>, Vec<[T; 3]>) {
        let mut n = vec![T::zero(); self.node_count()];
        let mut dn = vec![[T::zero(); 3]; self.node_count()];
        self.shape(xi, &mut n, &mut dn);
        (n, dn)
    }

    /// Default volume rule.
    pub fn volume_rule<T: Real>(self, opts: &QuadratureOptions) -> QuadratureRule<T> {
        match self {
            Self::Tet4 => quadrature::tetrahedron_for_degree(2),
            Self::Tet10 => quadrature::tetrahedron_for_degree(4),
            Self::Hex8 => quadrature::hex(2),
            Self::Hex20 => quadrature::hex(if opts.hex20_reduced { 2 } else { 3 }),
        }
    }

    /// Full-integration volume rule (used when the reduced one is singular).
    pub fn full_volume_rule<T: Real>(self) -> QuadratureRule<T> {
        match self {
            Self::Hex20 => quadrature::hex(3),
            k => k.volume_rule(&QuadratureOptions::default()),
        }
    }

    /// Surface rule on the reference parameter domain of a local face:
    /// `[-1, 1]²` for quadrilaterals, the unit triangle otherwise.
    pub fn face_rule<T: Real>(self, opts: &QuadratureOptions) -> QuadratureRule<T> {
        if self.is_simplex() {
            quadrature::triangle_for_degree(opts.tri_face_degree)
        } else {
            quadrature::quad(opts.quad_face_points)
        }
    }

    /// Maps face parameters `(r, s)` into element reference coordinates and
    /// returns the two tangent columns `∂ξ/∂r`, `∂ξ/∂s`. Their cross product
    /// points out of the reference element.
    pub fn face_map<T: Real>(self, f: usize, rs: &[T; 2]) -> ([T; 3], [Vec3<T>; 2]) {
        let corners = self.faces()[f];
        let c = |i: usize| -> [T; 3] {
            let p = if self.is_simplex() { TET_CORNERS[corners[i]] } else { HEX_CORNERS[corners[i]] };
            p.map(T::lit)
        };
        let (r, s) = (rs[0], rs[1]);
        if self.is_simplex() {
            let (c0, c1, c2) = (c(0), c(1), c(2));
            let tr = std::array::from_fn(|k| c1[k] - c0[k]);
            let ts = std::array::from_fn(|k| c2[k] - c0[k]);
            let x = std::array::from_fn(|k| c0[k] + r * tr[k] + s * ts[k]);
            (x, [tr, ts])
        } else {
            let q = T::lit(0.25);
            let one = T::one();
            let w = [(one - r) * (one - s), (one + r) * (one - s), (one + r) * (one + s), (one - r) * (one + s)];
            let dr = [-(one - s), one - s, one + s, -(one + s)];
            let ds = [-(one - r), -(one + r), one + r, one - r];
            let mut x = [T::zero(); 3];
            let mut tr = [T::zero(); 3];
            let mut ts = [T::zero(); 3];
            for i in 0..4 {
                let ci = c(i);
                for k in 0..3 {
                    x[k] = x[k] + q * w[i] * ci[k];
                    tr[k] = tr[k] + q * dr[i] * ci[k];
                    ts[k] = ts[k] + q * ds[i] * ci[k];
                }
            }
            (x, [tr, ts])
        }
    }

    /// Outward unit normal of a face in reference coordinates.
    pub fn reference_face_normal<T: Real>(self, f: usize) -> Vec3<T> {
        let (_, [tr, ts]) = self.face_map(f, &[T::zero(), T::zero()]);
        crate::tensor::normalize(&cross(&tr, &ts))
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tet4" => Ok(Self::Tet4),
            "tet10" => Ok(Self::Tet10),
            "hex8" => Ok(Self::Hex8),
            "hex20" => Ok(Self::Hex20),
            other => Err(format!("unknown element kind `{other}` (expected tet4, tet10, hex8 or hex20)")),
        }
    }
}

fn tet4<T: Real>(xi: &[T; 3], n: &mut [T], dn: &mut [[T; 3]]) {
    let (o, z) = (T::one(), T::zero());
    n[0] = o - xi[0] - xi[1] - xi[2];
    n[1] = xi[0];
    n[2] = xi[1];
    n[3] = xi[2];
    dn[0] = [-o, -o, -o];
    dn[1] = [o, z, z];
    dn[2] = [z, o, z];
    dn[3] = [z, z, o];
}

fn tet10<T: Real>(xi: &[T; 3], n: &mut [T], dn: &mut [[T; 3]]) {
    let mut l = [T::zero(); 4];
    let mut dl = [[T::zero(); 3]; 4];
    tet4(xi, &mut l, &mut dl);
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    for i in 0..4 {
        n[i] = l[i] * (two * l[i] - T::one());
        let f = four * l[i] - T::one();
        dn[i] = dl[i].map(|d| f * d);
    }
    for (e, &(a, b)) in TET_EDGES.iter().enumerate() {
        n[4 + e] = four * l[a] * l[b];
        dn[4 + e] = std::array::from_fn(|k| four * (dl[a][k] * l[b] + l[a] * dl[b][k]));
    }
}

fn hex8<T: Real>(xi: &[T; 3], n: &mut [T], dn: &mut [[T; 3]]) {
    let e = T::lit(0.125);
    let one = T::one();
    for (i, c) in HEX_CORNERS.iter().enumerate() {
        let c = c.map(T::lit);
        let a = one + c[0] * xi[0];
        let b = one + c[1] * xi[1];
        let d = one + c[2] * xi[2];
        n[i] = e * a * b * d;
        dn[i] = [e * c[0] * b * d, e * a * c[1] * d, e * a * b * c[2]];
    }
}

fn hex20<T: Real>(xi: &[T; 3], n: &mut [T], dn: &mut [[T; 3]]) {
    let one = T::one();
    let two = T::lit(2.0);
    let e = T::lit(0.125);
    let q = T::lit(0.25);
    for (i, c) in HEX_CORNERS.iter().enumerate() {
        let c = c.map(T::lit);
        let a = one + c[0] * xi[0];
        let b = one + c[1] * xi[1];
        let d = one + c[2] * xi[2];
        let s = c[0] * xi[0] + c[1] * xi[1] + c[2] * xi[2] - two;
        n[i] = e * a * b * d * s;
        dn[i] = [e * c[0] * b * d * (s + a), e * a * c[1] * d * (s + b), e * a * b * c[2] * (s + d)];
    }
    for (k, &(p, r)) in HEX_EDGES.iter().enumerate() {
        // The mid-side node sits at zero in the coordinate along its edge.
        let (cp, cr) = (HEX_CORNERS[p], HEX_CORNERS[r]);
        let axis = (0..3).find(|&j| cp[j] != cr[j]).expect("edge spans one axis");
        let c = std::array::from_fn::<T, 3, _>(|j| T::lit(0.5 * (cp[j] + cr[j])));
        let mut f = [T::zero(); 3];
        let mut df = [T::zero(); 3];
        for j in 0..3 {
            if j == axis {
                f[j] = one - xi[j] * xi[j];
                df[j] = -two * xi[j];
            } else {
                f[j] = one + c[j] * xi[j];
                df[j] = c[j];
            }
        }
        n[8 + k] = q * f[0] * f[1] * f[2];
        dn[8 + k] = [q * df[0] * f[1] * f[2], q * f[0] * df[1] * f[2], q * f[0] * f[1] * df[2]];
    }
}

/// Jacobian `∂x/∂ξ` of the isoparametric map (columns are `∂x/∂ξ_j`).
pub fn jacobian<T: Real>(coords: &[[T; 3]], dn: &[[T; 3]]) -> Mat3<T> {
    let mut j = Mat3::zeros();
    for (x, d) in coords.iter().zip(dn) {
        for r in 0..3 {
            for c in 0..3 {
                j.0[r][c] = j.0[r][c] + x[r] * d[c];
            }
        }
    }
    j
}

/// Physical point `Σ N_a x_a`.
pub fn interpolate<T: Real>(coords: &[[T; 3]], n: &[T]) -> [T; 3] {
    let mut x = [T::zero(); 3];
    for (p, &w) in coords.iter().zip(n) {
        for k in 0..3 {
            x[k] = x[k] + w * p[k];
        }
    }
    x
}
