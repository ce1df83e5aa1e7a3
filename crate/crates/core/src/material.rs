//! Deterministic lifing chain: von Mises amplitude, Ramberg-Osgood cyclic
//! stress-strain curve, Neuber shakedown and the Coffin-Manson-Basquin
//! strain-life curve.
//!
//! Notch factors are fixed to one: stresses come straight from the
//! elasticity solution. Stress units are whatever the caller uses
//! consistently; nothing here converts them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::newton_bisect;
use crate::scalar::Real;
use crate::tensor::StressTensor;

/// Default runout cap on the deterministic life, in cycles.
pub const DEFAULT_N_MAX: f64 = 1e12;

fn positive<T: Real>(name: &'static str, v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Isotropic elastic constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams<T> {
    pub lambda: T,
    pub mu: T,
    pub youngs: T,
}

impl<T: Real> ElasticParams<T> {
    pub fn from_lame(lambda: T, mu: T) -> Result<Self> {
        let lambda = positive("lambda", lambda)?;
        let mu = positive("mu", mu)?;
        let youngs = mu * (T::lit(3.0) * lambda + T::lit(2.0) * mu) / (lambda + mu);
        Ok(Self { lambda, mu, youngs })
    }

    /// From Young's modulus and Poisson's ratio, `0 < nu < 1/2`.
    pub fn from_youngs_poisson(youngs: T, nu: T) -> Result<Self> {
        let youngs = positive("E", youngs)?;
        if !(nu > T::zero() && nu < T::lit(0.5)) {
            return Err(Error::param("nu", format!("must lie in (0, 0.5), got {nu}")));
        }
        let one = T::one();
        let two = T::lit(2.0);
        let lambda = youngs * nu / ((one + nu) * (one - two * nu));
        let mu = youngs / (two * (one + nu));
        Ok(Self { lambda, mu, youngs })
    }

    /// All three constants given; they must agree to 1e-9 relative.
    pub fn new(lambda: T, mu: T, youngs: T) -> Result<Self> {
        let p = Self::from_lame(lambda, mu)?;
        let youngs = positive("E", youngs)?;
        if ((p.youngs - youngs) / youngs).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(8.0)) {
            return Err(Error::param("E", format!("inconsistent with lambda/mu: expected {}, got {youngs}", p.youngs)));
        }
        Ok(p)
    }

    pub fn poisson(&self) -> T {
        self.lambda / (T::lit(2.0) * (self.lambda + self.mu))
    }
}

/// Ramberg-Osgood cyclic stress-strain parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RambergOsgood<T> {
    pub youngs: T,
    /// Cyclic hardening coefficient K'.
    pub k: T,
    /// Cyclic hardening exponent n'.
    pub n_prime: T,
}

impl<T: Real> RambergOsgood<T> {
    pub fn new(youngs: T, k: T, n_prime: T) -> Result<Self> {
        let youngs = positive("E", youngs)?;
        let k = positive("K", k)?;
        if !(n_prime > T::zero() && n_prime < T::one()) {
            return Err(Error::param("n_prime", format!("must lie in (0, 1), got {n_prime}")));
        }
        Ok(Self { youngs, k, n_prime })
    }

    #[inline]
    fn plastic(&self, sigma: T) -> T {
        (sigma / self.k).powf(T::one() / self.n_prime)
    }
}

/// Coffin-Manson-Basquin strain-life parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoffinMansonBasquin<T> {
    pub sigma_f: T,
    pub eps_f: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> CoffinMansonBasquin<T> {
    pub fn new(sigma_f: T, eps_f: T, b: T, c: T) -> Result<Self> {
        let sigma_f = positive("sigma_f_prime", sigma_f)?;
        let eps_f = positive("eps_f_prime", eps_f)?;
        if !(b < T::zero()) {
            return Err(Error::param("b", format!("must be < 0, got {b}")));
        }
        if !(c < T::zero()) {
            return Err(Error::param("c", format!("must be < 0, got {c}")));
        }
        Ok(Self { sigma_f, eps_f, b, c })
    }
}

/// Elastic von Mises stress `sqrt(3/2 s':s')`.
pub fn von_mises<T: Real>(s: &StressTensor<T>) -> T {
    (T::lit(1.5) * s.deviator().self_contraction()).sqrt()
}

/// Ramberg-Osgood strain `σ/E + (σ/K)^(1/n')`.
pub fn ro_strain<T: Real>(sigma: T, p: &RambergOsgood<T>) -> Result<T> {
    if !(sigma >= T::zero()) {
        return Err(Error::domain("ro_strain", format!("stress must be >= 0, got {sigma}")));
    }
    Ok(sigma / p.youngs + p.plastic(sigma))
}

/// `dε/dσ` of the Ramberg-Osgood curve.
pub fn ro_slope<T: Real>(sigma: T, p: &RambergOsgood<T>) -> T {
    let inv_n = T::one() / p.n_prime;
    T::one() / p.youngs + inv_n / p.k * (sigma / p.k).powf(inv_n - T::one())
}

/// Inverts the Ramberg-Osgood curve: `σ` with `ro_strain(σ) = eps`.
pub fn ro_inverse<T: Real>(eps: T, p: &RambergOsgood<T>, tol: T) -> Result<T> {
    if !(eps >= T::zero()) {
        return Err(Error::domain("ro_inverse", format!("strain must be >= 0, got {eps}")));
    }
    if eps == T::zero() {
        return Ok(T::zero());
    }
    // Each term alone is at most eps.
    let hi = (p.youngs * eps).min(p.k * eps.powf(p.n_prime));
    let scale = eps.max(T::lit(1e-12));
    newton_bisect(
        "ro_inverse",
        |s| ((s / p.youngs + p.plastic(s) - eps) / scale, ro_slope(s, p) / scale),
        T::zero(),
        hi,
        hi,
        tol,
    )
}

/// Neuber shakedown: solves `σ_el²/E = σ²/E + σ (σ/K)^(1/n')` for the
/// elastic-plastic amplitude `σ ∈ [0, σ_el]`.
pub fn neuber_shakedown<T: Real>(sigma_el: T, p: &RambergOsgood<T>, tol: T) -> Result<T> {
    if !(sigma_el >= T::zero()) {
        return Err(Error::domain("neuber_shakedown", format!("stress must be >= 0, got {sigma_el}")));
    }
    if sigma_el == T::zero() {
        return Ok(T::zero());
    }
    let energy = sigma_el * sigma_el / p.youngs;
    newton_bisect(
        "neuber_shakedown",
        |s| (neuber_balance(s, sigma_el, p) / energy, neuber_balance_slope(s, p) / energy),
        T::zero(),
        sigma_el,
        sigma_el,
        tol,
    )
}

/// Signed Neuber balance `σ²/E + σ(σ/K)^(1/n') - σ_el²/E`.
pub fn neuber_balance<T: Real>(sigma: T, sigma_el: T, p: &RambergOsgood<T>) -> T {
    (sigma * sigma - sigma_el * sigma_el) / p.youngs + sigma * p.plastic(sigma)
}

fn neuber_balance_slope<T: Real>(sigma: T, p: &RambergOsgood<T>) -> T {
    T::lit(2.0) * sigma / p.youngs + (T::one() + T::one() / p.n_prime) * p.plastic(sigma)
}

/// `dσ/dσ_el` along the Neuber solution, given the solved `σ`.
pub fn neuber_slope<T: Real>(sigma: T, sigma_el: T, p: &RambergOsgood<T>) -> T {
    T::lit(2.0) * sigma_el / p.youngs / neuber_balance_slope(sigma, p)
}

/// Coffin-Manson-Basquin strain `(σ_f'/E)(2N)^b + ε_f'(2N)^c`.
pub fn cmb_strain<T: Real>(n: T, p: &CoffinMansonBasquin<T>, youngs: T) -> Result<T> {
    if !(n > T::zero()) {
        return Err(Error::domain("cmb_strain", format!("cycles must be > 0, got {n}")));
    }
    let two_n = T::lit(2.0) * n;
    Ok(p.sigma_f / youngs * two_n.powf(p.b) + p.eps_f * two_n.powf(p.c))
}

/// `dε/dN` of the strain-life curve.
pub fn cmb_slope<T: Real>(n: T, p: &CoffinMansonBasquin<T>, youngs: T) -> T {
    let two = T::lit(2.0);
    let two_n = two * n;
    two * (p.b * p.sigma_f / youngs * two_n.powf(p.b - T::one()) + p.c * p.eps_f * two_n.powf(p.c - T::one()))
}

/// Inverts the strain-life curve for `N` with `cmb_strain(N) = eps`.
///
/// Solved in `y = ln(2N)`, where both terms are exponentials; the bracket
/// follows from each term being at most `eps` and at least one of them at
/// least `eps/2` at the root.
pub fn cmb_inverse<T: Real>(eps: T, p: &CoffinMansonBasquin<T>, youngs: T, tol: T) -> Result<T> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::domain("cmb_inverse", format!("strain must be finite and > 0, got {eps}")));
    }
    let a = p.sigma_f / youngs;
    let bcoef = p.eps_f;
    let two = T::lit(2.0);
    let lo = ((eps / a).ln() / p.b).max((eps / bcoef).ln() / p.c);
    let hi = ((eps / (two * a)).ln() / p.b).max((eps / (two * bcoef)).ln() / p.c);
    let y = newton_bisect(
        "cmb_inverse",
        |y| {
            let ea = a * (p.b * y).exp();
            let eb = bcoef * (p.c * y).exp();
            ((ea + eb - eps) / eps, (p.b * ea + p.c * eb) / eps)
        },
        lo,
        hi,
        (lo + hi) * T::lit(0.5),
        tol,
    )?;
    Ok(y.exp() / two)
}

/// Deterministic life at a point, with a flag for lives clamped at the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Life<T> {
    pub cycles: T,
    pub runout: bool,
}

/// The composed map from elastic von Mises amplitude to crack-initiation life.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifing<T> {
    pub ro: RambergOsgood<T>,
    pub cmb: CoffinMansonBasquin<T>,
    /// Runout cap on `N_det`, cycles.
    pub n_max: T,
    /// Relative tolerance of the inner root finders.
    pub tol: T,
}

impl<T: Real> Lifing<T> {
    pub fn new(ro: RambergOsgood<T>, cmb: CoffinMansonBasquin<T>) -> Self {
        Self { ro, cmb, n_max: T::lit(DEFAULT_N_MAX), tol: T::default_tol() }
    }

    pub fn with_n_max(mut self, n_max: T) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    /// Strain below which the life is reported as runout.
    pub fn runout_strain(&self) -> T {
        let two_n = T::lit(2.0) * self.n_max;
        self.cmb.sigma_f / self.ro.youngs * two_n.powf(self.cmb.b) + self.cmb.eps_f * two_n.powf(self.cmb.c)
    }

    /// Elastic-plastic strain amplitude `RO(SD(σ_el))`.
    pub fn strain_amplitude(&self, sigma_el: T) -> Result<T> {
        let s = neuber_shakedown(sigma_el, &self.ro, self.tol)?;
        ro_strain(s, &self.ro)
    }

    /// `CMB⁻¹(eps)`, clamped at the runout cap.
    pub fn life_from_strain(&self, eps: T) -> Result<Life<T>> {
        if !(eps >= T::zero()) {
            return Err(Error::domain("life_from_strain", format!("strain must be >= 0, got {eps}")));
        }
        if eps <= self.runout_strain() {
            return Ok(Life { cycles: self.n_max, runout: true });
        }
        let n = cmb_inverse(eps, &self.cmb, self.ro.youngs, self.tol)?;
        Ok(if n >= self.n_max { Life { cycles: self.n_max, runout: true } } else { Life { cycles: n, runout: false } })
    }

    /// `N_det = CMB⁻¹(RO(SD(σ_el)))`.
    pub fn ndet(&self, sigma_el: T) -> Result<Life<T>> {
        self.life_from_strain(self.strain_amplitude(sigma_el)?)
    }

    /// Life together with `dN_det/dσ_el` (zero at runout).
    pub fn ndet_with_slope(&self, sigma_el: T) -> Result<(Life<T>, T)> {
        let s = neuber_shakedown(sigma_el, &self.ro, self.tol)?;
        let eps = ro_strain(s, &self.ro)?;
        let life = self.life_from_strain(eps)?;
        if life.runout {
            return Ok((life, T::zero()));
        }
        let slope = neuber_slope(s, sigma_el, &self.ro) * ro_slope(s, &self.ro)
            / cmb_slope(life.cycles, &self.cmb, self.ro.youngs);
        Ok((life, slope))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::axis_angle;

    fn ro() -> RambergOsgood<f64> {
        RambergOsgood::new(70_000.0, 450.0, 0.09).unwrap()
    }

    fn cmb() -> CoffinMansonBasquin<f64> {
        CoffinMansonBasquin::new(900.0, 0.35, -0.095, -0.69).unwrap()
    }

    /// Plain bisection on a monotone function; test oracle.
    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let fa = f(a);
        for _ in 0..400 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn elastic_constants_round_trip() {
        let p = ElasticParams::from_youngs_poisson(210e3_f64, 0.3).unwrap();
        assert!((p.poisson() - 0.3).abs() < 1e-14);
        let q = ElasticParams::new(p.lambda, p.mu, 210e3).unwrap();
        assert!((q.youngs - 210e3).abs() < 1e-8);
        assert!(ElasticParams::new(p.lambda, p.mu, 200e3).is_err());
        assert!(ElasticParams::from_lame(-1.0, 1.0).is_err());
    }

    #[test]
    fn von_mises_examples() {
        assert_eq!(von_mises(&StressTensor::hydrostatic(7.0_f64)), 0.0);
        assert!((von_mises(&StressTensor::diag(5.0_f64, 0.0, 0.0)) - 5.0).abs() < 1e-14);
        let t = 2.0_f64;
        let shear = StressTensor::new(0.0, 0.0, 0.0, 0.0, 0.0, t);
        assert!((von_mises(&shear) - 3f64.sqrt() * t).abs() < 1e-14);
        let s = StressTensor::new(1.0_f64, -2.0, 0.5, 0.3, -0.7, 1.1);
        let r = axis_angle(&[0.2, 0.4, -1.0], 0.83);
        assert!((von_mises(&s.rotated(&r)) - von_mises(&s)).abs() < 1e-12);
    }

    #[test]
    fn ro_examples() {
        let p = ro();
        assert_eq!(ro_strain(0.0, &p).unwrap(), 0.0);
        let k = p.k;
        assert!((ro_strain(k, &p).unwrap() - (1.0 + k / p.youngs)).abs() < 1e-15);
        let stiff = RambergOsgood::new(70_000.0_f64, 70_000.0 * 1e30, 0.09).unwrap();
        assert!((ro_strain(70_000.0, &stiff).unwrap() - 1.0).abs() < 1e-15);
        assert!(ro_strain(-1.0, &p).is_err());

        assert_eq!(ro_inverse(0.0, &p, 1e-12).unwrap(), 0.0);
        let s = ro_inverse(1.0 + k / p.youngs, &p, 1e-12).unwrap();
        assert!((s - k).abs() / k < 1e-11);
        for sigma in [1.0, 100.0, 300.0, 600.0] {
            let e = ro_strain(sigma, &p).unwrap();
            let back = ro_inverse(e, &p, 1e-12).unwrap();
            assert!((back - sigma).abs() / sigma < 1e-10);
        }
    }

    #[test]
    fn neuber_examples() {
        let p = ro();
        assert_eq!(neuber_shakedown(0.0, &p, 1e-12).unwrap(), 0.0);
        let small = 1e-3;
        assert!((neuber_shakedown(small, &p, 1e-12).unwrap() - small).abs() / small < 1e-6);

        let sigma_el = 2.0 * p.k;
        let got = neuber_shakedown(sigma_el, &p, 1e-14).unwrap();
        let oracle = bisect(|s| neuber_balance(s, sigma_el, &p), 0.0, sigma_el);
        assert!((got - oracle).abs() / oracle < 1e-10, "{got} vs {oracle}");
        assert!(got > 0.0 && got < sigma_el);
    }

    #[test]
    fn cmb_examples() {
        let (c, e) = (cmb(), 70_000.0);
        let top = c.sigma_f / e + c.eps_f;
        assert!((cmb_strain(0.5, &c, e).unwrap() - top).abs() < 1e-15);
        assert!(cmb_strain(1e12, &c, e).unwrap() < cmb_strain(1e6, &c, e).unwrap());
        let direct = c.sigma_f / e * 2000f64.powf(c.b) + c.eps_f * 2000f64.powf(c.c);
        assert!((cmb_strain(1000.0, &c, e).unwrap() - direct).abs() < 1e-16);
        assert!(cmb_strain(0.0, &c, e).is_err());

        assert!((cmb_inverse(top, &c, e, 1e-13).unwrap() - 0.5).abs() < 1e-11);
        // Above the N = 1/2 strain: unique root below one half.
        let eps = 1.7 * top;
        let got = cmb_inverse(eps, &c, e, 1e-14).unwrap();
        let oracle = bisect(|n| cmb_strain(n, &c, e).unwrap() - eps, 1e-12, 0.5);
        assert!(got < 0.5);
        assert!((got - oracle).abs() / oracle < 1e-9, "{got} vs {oracle}");
    }

    #[test]
    fn lifing_chain() {
        let chain = Lifing::new(ro(), cmb());
        let zero = chain.ndet(0.0).unwrap();
        assert!(zero.runout && zero.cycles == 1e12);

        // σ_el whose chain yields the N = 1/2 strain: invert RO then Neuber by hand.
        let c = cmb();
        let top = c.sigma_f / 70_000.0 + c.eps_f;
        let s = ro_inverse(top, &ro(), 1e-14).unwrap();
        let sigma_el = (70_000.0 * (s * s / 70_000.0 + s * (s / 450.0f64).powf(1.0 / 0.09))).sqrt();
        let life = chain.ndet(sigma_el).unwrap();
        assert!((life.cycles - 0.5).abs() < 1e-9, "{life:?}");

        // Mid-range: compose independent bisection oracles.
        let sigma_el = 420.0;
        let p = ro();
        let s = bisect(|s| neuber_balance(s, sigma_el, &p), 0.0, sigma_el);
        let eps = s / p.youngs + (s / p.k).powf(1.0 / p.n_prime);
        let n = bisect(|n: f64| cmb_strain(n, &c, 70_000.0).unwrap() - eps, 1e-3, 1e12);
        let got = chain.ndet(sigma_el).unwrap();
        assert!(!got.runout);
        assert!((got.cycles - n).abs() / n < 1e-9, "{} vs {n}", got.cycles);
    }

    #[test]
    fn ndet_slope_matches_central_difference() {
        let chain = Lifing::new(ro(), cmb()).with_tol(1e-15);
        for sigma_el in [150.0, 300.0, 700.0] {
            let (_, slope) = chain.ndet_with_slope(sigma_el).unwrap();
            let h = 1e-4 * sigma_el;
            let fd = (chain.ndet(sigma_el + h).unwrap().cycles - chain.ndet(sigma_el - h).unwrap().cycles) / (2.0 * h);
            assert!(((slope - fd) / fd).abs() < 1e-6, "{slope} vs {fd}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let p = RambergOsgood::new(70_000.0f32, 450.0, 0.09).unwrap();
        let c = CoffinMansonBasquin::new(900.0f32, 0.35, -0.095, -0.69).unwrap();
        let chain = Lifing::new(p, c);
        let n32 = chain.ndet(300.0).unwrap().cycles;
        let n64 = Lifing::new(ro(), cmb()).ndet(300.0).unwrap().cycles;
        assert!(((n32 as f64 - n64) / n64).abs() < 1e-3);
    }

    #[test]
    fn parameter_validation() {
        assert!(RambergOsgood::new(1.0, 1.0, 1.0).is_err());
        assert!(CoffinMansonBasquin::new(1.0, 1.0, 0.1, -0.5).is_err());
        assert!(CoffinMansonBasquin::new(1.0, 0.0, -0.1, -0.5).is_err());
    }
}
