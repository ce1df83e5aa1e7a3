//! Component failure-time distributions from a surface field of
//! deterministic lives.
//!
//! Crack initiations form a Poisson point process on the surface whose
//! intensity is built from the local life `N_det(x)`. Integrating the local
//! Weibull intensity gives a Weibull law with scale
//! `η = (∫ N_det^-m dA)^(-1/m)`; integrating the local Gompertz intensity
//! gives a Gompertz law with `J = (C/α) ∫ exp(-α N_det) dA`.
//!
//! Both integrals are formed in log space so that `N^-m` and `exp(-αN)`
//! never overflow or flush to zero before they are combined.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::scalar::{log_sum_exp, Real};

/// Probabilities below this are reported as zero with a flag.
pub const POF_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullModel<T> {
    pub m_bar: T,
}

impl<T: Real> WeibullModel<T> {
    pub fn new(m_bar: T) -> Result<Self> {
        if !(m_bar >= T::one() && m_bar.is_finite()) {
            return Err(Error::param("m_bar", format!("must be >= 1, got {m_bar}")));
        }
        Ok(Self { m_bar })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzModel<T> {
    /// Base intensity per unit area.
    pub c: T,
    /// Exponential rate per cycle.
    pub alpha: T,
}

impl<T: Real> GompertzModel<T> {
    pub fn new(c: T, alpha: T) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(Error::param("C", format!("must be > 0, got {c}")));
        }
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
        }
        Ok(Self { c, alpha })
    }
}

/// `ln ∫ N^-m dA`, with every value checked to be positive.
fn log_weibull_integral<T: Real>(field: &SurfaceField<T>, m_bar: T) -> Result<T> {
    if field.is_empty() {
        return Err(Error::domain("weibull integral", "empty surface field"));
    }
    if let Some(bad) = field.points().iter().find(|p| !(p.value > T::zero()) || p.value.is_nan()) {
        return Err(Error::domain(
            "weibull integral",
            format!("face {}: life {} is not positive", bad.face, bad.value),
        ));
    }
    let terms: Vec<T> = field.points().par_iter().map(|p| p.weight.ln() - m_bar * p.value.ln()).collect();
    Ok(log_sum_exp(&terms))
}

/// `J = ∫ N_det^-m dA`, the proportional-hazard constant of the local
/// Weibull model.
pub fn proportional_hazard_j<T: Real>(field: &SurfaceField<T>, model: &WeibullModel<T>) -> Result<T> {
    let j = log_weibull_integral(field, model.m_bar)?.exp();
    if !j.is_finite() {
        return Err(Error::domain("proportional_hazard_j", format!("integral overflowed ({j})")));
    }
    Ok(j)
}

/// Scale `η = (∫ N_det^-m dA)^(-1/m)` of the component Weibull law.
pub fn weibull_eta<T: Real>(field: &SurfaceField<T>, model: &WeibullModel<T>) -> Result<T> {
    let log_j = log_weibull_integral(field, model.m_bar)?;
    let eta = (-log_j / model.m_bar).exp();
    if !(eta > T::zero() && eta.is_finite()) {
        return Err(Error::domain("weibull_eta", format!("scale is not representable ({eta})")));
    }
    Ok(eta)
}

/// `J = (C/α) ∫ exp(-α N_det) dA` of the component Gompertz law.
///
/// Infinite lives contribute nothing; a field of runouts gives `J = 0`.
pub fn gompertz_j<T: Real>(field: &SurfaceField<T>, model: &GompertzModel<T>) -> Result<T> {
    if field.points().iter().any(|p| p.value.is_nan()) {
        return Err(Error::domain("gompertz_j", "life field contains NaN"));
    }
    let terms: Vec<T> = field.points().par_iter().map(|p| p.weight.ln() - model.alpha * p.value).collect();
    let j = ((model.c / model.alpha).ln() + log_sum_exp(&terms)).exp();
    if !j.is_finite() {
        return Err(Error::domain("gompertz_j", format!("integral overflowed ({j})")));
    }
    Ok(j)
}

/// Component deterministic life: the smallest life over all surface points.
pub fn ndet_component<T: Real>(field: &SurfaceField<T>) -> Result<T> {
    field.min().map(|p| p.value).ok_or_else(|| Error::domain("ndet_component", "empty surface field"))
}

/// Failure-time law of a component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FailureDistribution<T> {
    Weibull { eta: T, m_bar: T },
    Gompertz { j: T, alpha: T },
}

/// A probability of failure; tiny values are clamped to zero and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pof<T> {
    pub value: T,
    pub underflow: bool,
}

impl<T: Real> FailureDistribution<T> {
    pub fn weibull(eta: T, m_bar: T) -> Result<Self> {
        if !(eta > T::zero() && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be > 0, got {eta}")));
        }
        WeibullModel::new(m_bar)?;
        Ok(Self::Weibull { eta, m_bar })
    }

    /// `J = 0` is allowed: it is what a field of runouts produces and
    /// describes a component that never fails.
    pub fn gompertz(j: T, alpha: T) -> Result<Self> {
        if !(j >= T::zero() && j.is_finite()) {
            return Err(Error::param("J", format!("must be >= 0, got {j}")));
        }
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {alpha}")));
        }
        Ok(Self::Gompertz { j, alpha })
    }

    fn check_time(t: T) -> Result<()> {
        if t >= T::zero() {
            Ok(())
        } else {
            Err(Error::domain("failure time", format!("must be >= 0, got {t}")))
        }
    }

    /// `H(t) = -ln S(t)`.
    pub fn cumulative_hazard(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        Ok(match *self {
            Self::Weibull { eta, m_bar } => (t / eta).powf(m_bar),
            Self::Gompertz { j, alpha } => j * (alpha * t).exp_m1(),
        })
    }

    pub fn survival(&self, t: T) -> Result<T> {
        Ok((-self.cumulative_hazard(t)?).exp())
    }

    /// `F(t) = 1 - exp(-H(t))`, accurate for small `H`.
    pub fn pof(&self, t: T) -> Result<Pof<T>> {
        let value = -(-self.cumulative_hazard(t)?).exp_m1();
        let floor = T::lit(POF_FLOOR).max(T::min_positive_value());
        Ok(if value > T::zero() && value < floor {
            Pof { value: T::zero(), underflow: true }
        } else {
            Pof { value, underflow: false }
        })
    }

    /// `h(t) = H'(t)`.
    pub fn hazard(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        Ok(match *self {
            Self::Weibull { eta, m_bar } => {
                if m_bar == T::one() {
                    T::one() / eta
                } else {
                    m_bar / eta * (t / eta).powf(m_bar - T::one())
                }
            }
            Self::Gompertz { j, alpha } => j * alpha * (alpha * t).exp(),
        })
    }
}

/// Result record of a failure-distribution evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport<T> {
    pub distribution: FailureDistribution<T>,
    /// Smallest life over the surface.
    pub ndet_component: T,
    pub times: Vec<T>,
    pub pof: Vec<T>,
    pub pof_underflow: Vec<bool>,
    pub hazard: Vec<T>,
}

impl<T: Real> FailureReport<T> {
    pub fn evaluate(distribution: FailureDistribution<T>, ndet_component: T, times: &[T]) -> Result<Self> {
        let mut pof = Vec::with_capacity(times.len());
        let mut pof_underflow = Vec::with_capacity(times.len());
        let mut hazard = Vec::with_capacity(times.len());
        for &t in times {
            let p = distribution.pof(t)?;
            pof.push(p.value);
            pof_underflow.push(p.underflow);
            hazard.push(distribution.hazard(t)?);
        }
        Ok(Self { distribution, ndet_component, times: times.to_vec(), pof, pof_underflow, hazard })
    }
}
