//! Scalar and tensor values sampled at surface quadrature points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};

/// One surface quadrature point: the boundary face it belongs to, its
/// physical weight (reference weight times the surface Gram factor) and the
/// sampled value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint<T> {
    pub face: usize,
    pub weight: T,
    pub value: T,
}

/// A scalar field on surface quadrature points, kept sorted by face id so
/// every reduction over it runs in the same order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceField<T> {
    points: Vec<SurfacePoint<T>>,
}

impl<T: Real> SurfaceField<T> {
    /// Builds a field, sorting points by face (stable, so the point order
    /// inside a face is kept). Weights must be finite and positive.
    pub fn new(mut points: Vec<SurfacePoint<T>>) -> Result<Self> {
        for p in &points {
            if !(p.weight > T::zero() && p.weight.is_finite()) {
                return Err(Error::domain(
                    "surface field",
                    format!("face {}: quadrature weight {} is not positive", p.face, p.weight),
                ));
            }
        }
        points.sort_by_key(|p| p.face);
        Ok(Self { points })
    }

    /// Same weights, new values.
    pub fn map(&self, f: impl Fn(&SurfacePoint<T>) -> T) -> Self {
        let points = self.points.iter().map(|p| SurfacePoint { value: f(p), ..*p }).collect();
        Self { points }
    }

    /// Constant field on a single patch of the given area.
    pub fn constant(area: T, value: T) -> Result<Self> {
        Self::new(vec![SurfacePoint { face: 0, weight: area, value }])
    }

    pub fn points(&self) -> &[SurfacePoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points restricted to faces accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        Self { points: self.points.iter().filter(|p| keep(p.face)).copied().collect() }
    }

    /// Disjoint union of two fields (face ids are assumed distinct).
    pub fn union(&self, other: &Self) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        points.sort_by_key(|p| p.face);
        Self { points }
    }

    /// `Σ ω_l f_l` in face order with compensated summation.
    pub fn integral(&self) -> T {
        self.points.iter().map(|p| p.weight * p.value).collect::<KahanSum<T>>().value()
    }

    /// Total weight, i.e. the surface area covered by the field.
    pub fn area(&self) -> T {
        self.points.iter().map(|p| p.weight).collect::<KahanSum<T>>().value()
    }

    pub fn min(&self) -> Option<&SurfacePoint<T>> {
        self.points.iter().min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn max(&self) -> Option<&SurfacePoint<T>> {
        self.points.iter().max_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    }
}
