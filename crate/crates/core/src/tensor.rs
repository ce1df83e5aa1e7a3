//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices and symmetric
//! stress tensors.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Unit vector along `a`; the zero vector is returned unchanged.
pub fn normalize<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    let n = norm(a);
    if n > T::zero() {
        scale(a, T::one() / n)
    } else {
        *a
    }
}

/// Dense 3×3 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn zeros() -> Self {
        Mat3([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one(), T::one())
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Mat3([[a, z, z], [z, b, z], [z, z, c]])
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    /// `a ⊗ b`, i.e. `m_ij = a_i b_j`.
    pub fn outer(a: &Vec3<T>, b: &Vec3<T>) -> Self {
        Self::from_fn(|i, j| a[i] * b[j])
    }

    pub fn from_columns(c0: &Vec3<T>, c1: &Vec3<T>, c2: &Vec3<T>) -> Self {
        Mat3([[c0[0], c1[0], c2[0]], [c0[1], c1[1], c2[1]], [c0[2], c1[2], c2[2]]])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> T {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        let inv_d = T::one() / d;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Some(Self::from_fn(|i, j| adj[i][j] * inv_d))
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// `Mᵀ v`.
    pub fn tr_mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    /// Double contraction `A : B = Σ a_ij b_ij`.
    pub fn ddot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                s = s + self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn frobenius(&self) -> T {
        self.ddot(self).sqrt()
    }

    pub fn sym(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(|i, j| (self.0[i][j] + self.0[j][i]) * half)
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |a, &b| a.max(b.abs()))
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        Mat3::from_fn(|i, j| U::lit(self.0[i][j].to_f64_lossy()))
    }
}

impl<T> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Mat3<T>;
    fn mul(self, rhs: Self) -> Self {
        Mat3::from_fn(|i, j| self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j] + self.0[i][2] * rhs.0[2][j])
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Mat3<T>;
    fn add(self, rhs: Self) -> Self {
        Mat3::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<T: Real> AddAssign for Mat3<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Mat3<T>;
    fn sub(self, rhs: Self) -> Self {
        Mat3::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Mat3<T>;
    fn neg(self) -> Self {
        self.scaled(-T::one())
    }
}

/// Symmetric stress tensor stored as `[xx, yy, zz, yz, xz, xy]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StressTensor<T>(pub [T; 6]);

impl<T: Real> StressTensor<T> {
    pub fn new(xx: T, yy: T, zz: T, yz: T, xz: T, xy: T) -> Self {
        StressTensor([xx, yy, zz, yz, xz, xy])
    }

    pub fn zero() -> Self {
        StressTensor([T::zero(); 6])
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        Self::new(a, b, c, T::zero(), T::zero(), T::zero())
    }

    pub fn hydrostatic(p: T) -> Self {
        Self::diag(p, p, p)
    }

    /// Uniaxial `s · e_k ⊗ e_k`.
    pub fn uniaxial(s: T, axis: usize) -> Self {
        let mut d = [T::zero(); 3];
        d[axis] = s;
        Self::diag(d[0], d[1], d[2])
    }

    /// Symmetric part of a general matrix.
    pub fn from_matrix(m: &Mat3<T>) -> Self {
        let s = m.sym();
        Self::new(s.0[0][0], s.0[1][1], s.0[2][2], s.0[1][2], s.0[0][2], s.0[0][1])
    }

    pub fn to_matrix(&self) -> Mat3<T> {
        let [xx, yy, zz, yz, xz, xy] = self.0;
        Mat3([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    }

    pub fn trace(&self) -> T {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn scaled(&self, s: T) -> Self {
        StressTensor(self.0.map(|c| c * s))
    }

    pub fn plus_hydrostatic(&self, p: T) -> Self {
        let mut out = *self;
        for c in out.0.iter_mut().take(3) {
            *c = *c + p;
        }
        out
    }

    /// Trace-free part `s - tr(s)/3 I`.
    pub fn deviator(&self) -> Self {
        self.plus_hydrostatic(-self.trace() / T::lit(3.0))
    }

    /// `A : A` for the symmetric tensor (off-diagonals counted twice).
    pub fn self_contraction(&self) -> T {
        let [xx, yy, zz, yz, xz, xy] = self.0;
        xx * xx + yy * yy + zz * zz + T::lit(2.0) * (yz * yz + xz * xz + xy * xy)
    }

    /// `R s Rᵀ`.
    pub fn rotated(&self, r: &Mat3<T>) -> Self {
        Self::from_matrix(&(*r * self.to_matrix() * r.transpose()))
    }

    /// `a · s · b`.
    pub fn bilinear(&self, a: &Vec3<T>, b: &Vec3<T>) -> T {
        dot(a, &self.to_matrix().mul_vec(b))
    }

    /// Principal values in descending order.
    pub fn principal(&self) -> [T; 3] {
        symmetric_eigenvalues(self)
    }
}

/// Closed-form eigenvalues of a symmetric 3×3 tensor (trigonometric method),
/// sorted descending. Repeated eigenvalues are returned as such.
pub fn symmetric_eigenvalues<T: Real>(s: &StressTensor<T>) -> [T; 3] {
    let [xx, yy, zz, yz, xz, xy] = s.0;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let p1 = xy * xy + xz * xz + yz * yz;
    let mut ev = if p1 == T::zero() {
        [xx, yy, zz]
    } else {
        let q = s.trace() / three;
        let p2 = (xx - q).powi(2) + (yy - q).powi(2) + (zz - q).powi(2) + two * p1;
        let p = (p2 / T::lit(6.0)).sqrt();
        let b = s.plus_hydrostatic(-q).scaled(T::one() / p).to_matrix();
        let r = (b.det() / two).max(-T::one()).min(T::one());
        let phi = r.acos() / three;
        let e1 = q + two * p * phi.cos();
        let e3 = q + two * p * (phi + two * T::PI() / three).cos();
        let e2 = three * q - e1 - e3;
        [e1, e2, e3]
    };
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Rotation about a unit axis by `angle` (Rodrigues).
pub fn axis_angle<T: Real>(axis: &Vec3<T>, angle: T) -> Mat3<T> {
    let a = normalize(axis);
    let (s, c) = angle.sin_cos();
    let k = Mat3([[T::zero(), -a[2], a[1]], [a[2], T::zero(), -a[0]], [-a[1], a[0], T::zero()]]);
    Mat3::identity() + k.scaled(s) + (k * k).scaled(T::one() - c)
}
