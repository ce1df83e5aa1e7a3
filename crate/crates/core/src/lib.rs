//! Probabilistic low-cycle-fatigue analysis: deterministic lifing, Poisson
//! failure models over FE surface fields, adjoint shape sensitivities,
//! microstructural life scatter and service-interval economics.
//!
//! Numerics are generic over [`scalar::Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

// Index loops mirror the tensor notation; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod failure;
pub mod fem;
pub mod field;
pub mod material;
pub mod microstructure;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod sensitivity;
pub mod service;
pub mod sparse;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh = fem::Mesh<f64>;
pub type LoadCase = fem::LoadCase<f64>;
pub type SolverOptions = fem::SolverOptions<f64>;
pub type Solution = fem::Solution<f64>;
pub type LifeField = fem::LifeField<f64>;
pub type SurfaceField = field::SurfaceField<f64>;
pub type ElasticParams = material::ElasticParams<f64>;
pub type RambergOsgood = material::RambergOsgood<f64>;
pub type CoffinMansonBasquin = material::CoffinMansonBasquin<f64>;
pub type Lifing = material::Lifing<f64>;
pub type StressTensor = tensor::StressTensor<f64>;
pub type FailureDistribution = failure::FailureDistribution<f64>;
pub type FailureReport = failure::FailureReport<f64>;
pub type MultiscaleParams = microstructure::MultiscaleParams<f64>;
pub type LifeSample = microstructure::LifeSample<f64>;
pub type LcfObjective = sensitivity::LcfObjective<f64>;
pub type ShapeSensitivity = sensitivity::ShapeSensitivity<f64>;
pub type HadamardDensity = sensitivity::HadamardDensity<f64>;
pub type EconomicParams = service::EconomicParams<f64>;
pub type ServiceResult = service::ServiceResult<f64>;
