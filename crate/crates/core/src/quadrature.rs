//! Gauss rules on the reference line, square, cube, triangle and tetrahedron.
//!
//! Simplex rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules, so every weight is positive and the exactness degree follows
//! directly from the 1D point count.

use crate::scalar::Real;

/// Points and weights on a reference domain.
///
/// Points always carry three coordinates; unused trailing ones are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T; 3], T)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Sum of weights, i.e. the measure of the reference domain.
    pub fn measure(&self) -> T {
        crate::scalar::kahan_sum(self.weights.iter().copied())
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
///
/// Nodes are Newton-refined roots of `P_n` starting from the Chebyshev-like
/// guess; the arithmetic runs in `f64` and is cast once at the end.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one point");
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre on `[0, 1]`.
fn unit_interval<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let h = T::lit(0.5);
    (x.into_iter().map(|x| h * (x + T::one())).collect(), w.into_iter().map(|w| h * w).collect())
}

/// Number of 1D points for exactness `degree` on a tensor rule.
fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

pub fn line<T: Real>(n: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre::<T>(n);
    QuadratureRule { points: x.into_iter().map(|x| [x, T::zero(), T::zero()]).collect(), weights: w, degree: 2 * n - 1 }
}

/// `n × n` tensor rule on `[-1, 1]²`.
pub fn quad<T: Real>(n: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre::<T>(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([x[i], x[j], T::zero()]);
            weights.push(w[i] * w[j]);
        }
    }
    QuadratureRule { points, weights, degree: 2 * n - 1 }
}

/// `n × n × n` tensor rule on `[-1, 1]³`.
pub fn hex<T: Real>(n: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre::<T>(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                points.push([x[i], x[j], x[k]]);
                weights.push(w[i] * w[j] * w[k]);
            }
        }
    }
    QuadratureRule { points, weights, degree: 2 * n - 1 }
}

/// Collapsed rule on the triangle `{r, s ≥ 0, r + s ≤ 1}` (area 1/2) with
/// `n` points per direction, exact to degree `2n - 2`.
pub fn triangle<T: Real>(n: usize) -> QuadratureRule<T> {
    let (u, wu) = unit_interval::<T>(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let one_minus = T::one() - u[i];
        for j in 0..n {
            points.push([u[i], u[j] * one_minus, T::zero()]);
            weights.push(wu[i] * wu[j] * one_minus);
        }
    }
    QuadratureRule { points, weights, degree: 2 * n - 2 }
}

/// Collapsed rule on the unit tetrahedron (volume 1/6), `n` points per
/// direction, exact to degree `2n - 3`.
pub fn tetrahedron<T: Real>(n: usize) -> QuadratureRule<T> {
    assert!(n >= 2, "collapsed tetrahedron rule needs n >= 2");
    let (u, wu) = unit_interval::<T>(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let a = T::one() - u[i];
        for j in 0..n {
            let b = T::one() - u[j];
            for k in 0..n {
                points.push([u[i], u[j] * a, u[k] * a * b]);
                weights.push(wu[i] * wu[j] * wu[k] * a * a * b);
            }
        }
    }
    QuadratureRule { points, weights, degree: 2 * n - 3 }
}

pub fn triangle_for_degree<T: Real>(degree: usize) -> QuadratureRule<T> {
    triangle((degree + 3) / 2)
}

pub fn tetrahedron_for_degree<T: Real>(degree: usize) -> QuadratureRule<T> {
    tetrahedron(((degree + 4) / 2).max(2))
}

pub fn quad_for_degree<T: Real>(degree: usize) -> QuadratureRule<T> {
    quad(points_for_degree(degree))
}

pub fn hex_for_degree<T: Real>(degree: usize) -> QuadratureRule<T> {
    hex(points_for_degree(degree))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// `∫_T r^a s^b = a! b! / (a+b+2)!` on the unit triangle.
    fn tri_monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn tet_monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre::<f64>(n);
            assert!(w.iter().all(|&w| w > 0.0));
            for p in 0..(2 * n) as i32 {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-14, "n={n} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn triangle_rule_exactness() {
        for n in 1..=6 {
            let rule = triangle::<f64>(n);
            assert!((rule.measure() - 0.5).abs() < 1e-15);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=rule.degree as u32 {
                for b in 0..=(rule.degree as u32 - a) {
                    let got: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                    assert!((got - tri_monomial(a, b)).abs() < 1e-15, "n={n} a={a} b={b}");
                }
            }
        }
        assert_eq!(triangle::<f64>(5).degree, 8);
        assert_eq!(triangle::<f64>(5).len(), 25);
    }

    #[test]
    fn tetrahedron_rule_exactness() {
        for n in 2..=5 {
            let rule = tetrahedron::<f64>(n);
            assert!((rule.measure() - 1.0 / 6.0).abs() < 1e-15);
            let d = rule.degree as u32;
            for a in 0..=d {
                for b in 0..=(d - a) {
                    for c in 0..=(d - a - b) {
                        let got: f64 = rule
                            .iter()
                            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                            .sum();
                        assert!((got - tet_monomial(a, b, c)).abs() < 1e-15, "n={n} {a} {b} {c}");
                    }
                }
            }
        }
        assert!(tetrahedron_for_degree::<f64>(2).degree >= 2);
        assert!(tetrahedron_for_degree::<f64>(4).degree >= 4);
    }

    #[test]
    fn tensor_rules() {
        let q = quad::<f64>(4);
        assert_eq!(q.len(), 16);
        assert!((q.measure() - 4.0).abs() < 1e-14);
        let h = hex::<f64>(2);
        assert!((h.measure() - 8.0).abs() < 1e-14);
        let got: f64 = q.iter().map(|(p, w)| w * p[0].powi(6) * p[1].powi(4)).sum();
        assert!((got - 2.0 / 7.0 * 2.0 / 5.0).abs() < 1e-14);
        assert!(quad_for_degree::<f64>(7).degree >= 7);
        assert!(hex_for_degree::<f64>(3).degree >= 3);
        assert!(triangle_for_degree::<f64>(8).degree >= 8);
    }

    #[test]
    fn single_precision_rules() {
        let r = triangle::<f32>(5);
        assert!((r.measure() - 0.5).abs() < 1e-6);
    }
}
