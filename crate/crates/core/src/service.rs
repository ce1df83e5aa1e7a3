//! Renewal-reward model for periodic as-new servicing.
//!
//! A component runs for `Δ` cycles, is serviced for `W` cycles (no hazard,
//! no income) and restarts as new. Income `I` accrues per surviving cycle,
//! a failure costs `C_R` and every service `C_M`; cash flows are discounted
//! continuously at rate `i_eff` per cycle. Summing the renewal cycles as a
//! geometric series gives
//!
//! `EPV(Δ) = [∫₀^Δ e^{-iτ} S(τ)(I - C_R h(τ)) dτ - C_M e^{-iΔ} S(Δ)] / [1 - e^{-i(Δ+W)} S(Δ)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::failure::FailureDistribution;
use crate::scalar::Real;

/// Cash-flow and schedule parameters; all times in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams<T> {
    /// Income per operating cycle.
    pub income: T,
    pub service_cost: T,
    pub failure_cost: T,
    /// Continuous discount rate per cycle, in `(0, 1]`.
    pub discount: T,
    /// Outage length of a service.
    pub outage: T,
}

impl<T: Real> EconomicParams<T> {
    pub fn new(income: T, service_cost: T, failure_cost: T, discount: T, outage: T) -> Result<Self> {
        for (name, v) in
            [("income", income), ("service_cost", service_cost), ("failure_cost", failure_cost), ("outage", outage)]
        {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(discount > T::zero() && discount <= T::one()) {
            return Err(Error::param("discount", format!("must lie in (0, 1], got {discount}")));
        }
        Ok(Self { income, service_cost, failure_cost, discount, outage })
    }

    /// Same schedule with every currency amount multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            income: self.income * s,
            service_cost: self.service_cost * s,
            failure_cost: self.failure_cost * s,
            ..*self
        }
    }
}

fn check_interval<T: Real>(delta: T) -> Result<()> {
    if delta > T::zero() && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::param("delta", format!("service interval must be > 0, got {delta}")))
    }
}

/// Hazard under periodic servicing: the age restarts every `Δ + W` cycles
/// and the hazard is zero during the outage `[Δ, Δ + W)` of each period.
pub fn periodic_hazard<T: Real>(d: &FailureDistribution<T>, delta: T, outage: T, tau: T) -> Result<T> {
    check_interval(delta)?;
    let age = tau % (delta + outage);
    if age >= delta {
        return Ok(T::zero());
    }
    d.hazard(age)
}

/// `∫₀^τ` of [`periodic_hazard`]: `k H(Δ) + H(min(r, Δ))` with
/// `τ = k (Δ + W) + r`.
pub fn periodic_cumulative_hazard<T: Real>(d: &FailureDistribution<T>, delta: T, outage: T, tau: T) -> Result<T> {
    check_interval(delta)?;
    let period = delta + outage;
    let k = (tau / period).floor();
    let r = tau - k * period;
    Ok(k * d.cumulative_hazard(delta)? + d.cumulative_hazard(r.min(delta).max(T::zero()))?)
}

/// Tolerances of the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTol {
    pub relative: f64,
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self { relative: 1e-9, absolute: 1e-12, max_intervals: 2000 }
    }
}

// 15-point Kronrod nodes on [0, 1] (symmetric half) with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One G7-K15 panel: `(kronrod, |kronrod - gauss|)`.
fn gk15<T: Real>(f: &mut impl FnMut(T) -> Result<T>, a: T, b: T) -> Result<(T, T)> {
    let half = T::lit(0.5) * (b - a);
    let mid = T::lit(0.5) * (a + b);
    let fc = f(mid)?;
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx)? + f(mid + dx)?;
        k = k + T::lit(WGK[j]) * s;
        if j % 2 == 1 {
            g = g + T::lit(WG[j / 2]) * s;
        }
    }
    Ok((k * half, ((k - g) * half).abs()))
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`: the
/// panel with the largest error estimate is bisected until the summed
/// estimate meets `max(absolute, relative · |I|)`.
pub fn integrate<T: Real>(mut f: impl FnMut(T) -> Result<T>, a: T, b: T, tol: &QuadTol) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let mut panels = vec![(a, b, gk15(&mut f, a, b)?)];
    loop {
        let total: T = panels.iter().map(|p| p.2 .0).sum();
        let err: T = panels.iter().map(|p| p.2 .1).sum();
        if !(total.is_finite() && err.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= T::lit(tol.absolute).max(T::lit(tol.relative) * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NoConvergence {
                solver: "adaptive quadrature",
                iterations: panels.len(),
                residual: err.to_f64_lossy(),
            });
        }
        let worst = (0..panels.len()).max_by(|&i, &j| panels[i].2 .1.partial_cmp(&panels[j].2 .1).unwrap()).unwrap();
        let (lo, hi, _) = panels.swap_remove(worst);
        let m = T::lit(0.5) * (lo + hi);
        if !(m > lo && m < hi) {
            return Err(Error::Quadrature(format!("panel [{lo}, {hi}] cannot be split further")));
        }
        panels.push((lo, m, gk15(&mut f, lo, m)?));
        panels.push((m, hi, gk15(&mut f, m, hi)?));
    }
}

/// Expected discounted cash flow of one operating period,
/// `∫₀^Δ e^{-iτ} S(τ)(I - C_R h(τ)) dτ`.
pub fn cycle_value<T: Real>(
    d: &FailureDistribution<T>,
    econ: &EconomicParams<T>,
    delta: T,
    tol: &QuadTol,
) -> Result<T> {
    check_interval(delta)?;
    integrate(
        |tau| {
            let s = d.survival(tau)?;
            let v = (-econ.discount * tau).exp() * s * (econ.income - econ.failure_cost * d.hazard(tau)?);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Quadrature(format!("integrand is not finite at tau = {tau}")))
            }
        },
        T::zero(),
        delta,
        tol,
    )
}

/// Closed-form expected present value of the periodic schedule.
pub fn epv<T: Real>(d: &FailureDistribution<T>, econ: &EconomicParams<T>, delta: T) -> Result<T> {
    epv_with(d, econ, delta, &QuadTol::default())
}

pub fn epv_with<T: Real>(d: &FailureDistribution<T>, econ: &EconomicParams<T>, delta: T, tol: &QuadTol) -> Result<T> {
    let s = d.survival(delta)?;
    let denom = -((-econ.discount * (delta + econ.outage)).exp() * s - T::one());
    if !(denom > T::zero()) {
        return Err(Error::domain("epv", format!("renewal series does not converge at delta = {delta}")));
    }
    let num = cycle_value(d, econ, delta, tol)? - econ.service_cost * (-econ.discount * delta).exp() * s;
    Ok(num / denom)
}

/// Which end of the search bracket the optimum sits on, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Lower,
    Upper,
}

/// Optimal interval with the sampled EPV curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceResult<T> {
    pub delta_star: T,
    pub epv_star: T,
    /// `(Δ, EPV)` on the log-spaced scan grid.
    pub epv_curve: Vec<(T, T)>,
    /// Set when the optimum lies on the bracket boundary.
    pub boundary: Option<Boundary>,
    /// Set when even the best interval has a negative EPV.
    pub never_profitable: bool,
}

/// Number of log-spaced scan points.
pub const GRID_POINTS: usize = 64;

/// Optimizer settings: search bracket and relative interval tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions<T> {
    pub bracket: (T, T),
    /// Golden-section stops once the bracket is below `tol · Δ`.
    pub tol: T,
}

impl<T: Real> OptimizeOptions<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo > T::zero() && hi > lo && hi.is_finite()) {
            return Err(Error::param("bracket", format!("need 0 < lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self { bracket: (lo, hi), tol: T::lit(1e-3) })
    }

    pub fn with_tol(mut self, tol: T) -> Result<Self> {
        if !(tol > T::zero() && tol < T::one()) {
            return Err(Error::param("tol", format!("must lie in (0, 1), got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }
}

/// `n` points spaced evenly in `ln Δ` from `lo` to `hi`, both included.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "log grid needs at least two points");
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize_lossy(n - 1);
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * T::from_usize_lossy(k) / last).exp(),
        })
        .collect()
}

/// Maximizes [`epv`]: a log-grid scan picks the best cell, golden-section
/// search refines inside its two neighbouring cells.
pub fn optimize_interval<T: Real>(
    d: &FailureDistribution<T>,
    econ: &EconomicParams<T>,
    opts: &OptimizeOptions<T>,
) -> Result<ServiceResult<T>> {
    let (lo, hi) = opts.bracket;
    let grid = log_grid(lo, hi, GRID_POINTS);
    let values: Vec<T> = grid.par_iter().map(|&x| epv(d, econ, x)).collect::<Result<_>>()?;
    let best = (0..grid.len()).fold(0, |b, k| if values[k] > values[b] { k } else { b });
    let (mut a, mut c) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let f = |x: T| epv(d, econ, x);
    let inv_phi = T::lit(0.5) * (T::lit(5.0).sqrt() - T::one());
    let mut x1 = c - inv_phi * (c - a);
    let mut x2 = a + inv_phi * (c - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while c - a > opts.tol * T::lit(0.5) * (a + c) {
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - inv_phi * (c - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (c - a);
            f2 = f(x2)?;
        }
    }
    let (mut delta_star, mut epv_star) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // The refined point must not be worse than the grid point it started from.
    if values[best] > epv_star {
        delta_star = grid[best];
        epv_star = values[best];
    }
    let near = |x: T, edge: T| (x - edge).abs() <= opts.tol * edge;
    let boundary = if near(delta_star, lo) {
        Some(Boundary::Lower)
    } else if near(delta_star, hi) {
        Some(Boundary::Upper)
    } else {
        None
    };
    Ok(ServiceResult {
        delta_star,
        epv_star,
        epv_curve: grid.into_iter().zip(values).collect(),
        boundary,
        never_profitable: epv_star < T::zero(),
    })
}

/// Optimization result for one income level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve<T> {
    pub income: T,
    pub result: ServiceResult<T>,
}

/// [`optimize_interval`] for every income in `incomes`, in parallel. All
/// curves share the same scan grid.
pub fn epv_sweep<T: Real>(
    d: &FailureDistribution<T>,
    econ: &EconomicParams<T>,
    incomes: &[T],
    opts: &OptimizeOptions<T>,
) -> Result<Vec<SweepCurve<T>>> {
    if incomes.is_empty() {
        return Err(Error::param("incomes", "sweep needs at least one income value"));
    }
    incomes
        .par_iter()
        .map(|&income| {
            let e = EconomicParams::new(income, econ.service_cost, econ.failure_cost, econ.discount, econ.outage)?;
            Ok(SweepCurve { income, result: optimize_interval(d, &e, opts)? })
        })
        .collect()
}
