//! Numerics for non-symmetric strictly α-stable Lévy processes: projected
//! positivity exponents, the pointwise nonlocal generator, exit Monte Carlo
//! and boundary-decay experiments for harmonic functions.

pub mod error;
pub mod experiments;
pub mod generator;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod sphere;
pub mod projection;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use quadrature::Estimate;
pub use spectral::{SphericalDensity, StableSpec, Theta, ValidationReport};
pub use experiments::{DecayConfig, DecayReport, ReductionConfig, ReductionReport};
pub use generator::{GeneratorQuad, GeneratorValue, TestFunction};
pub use geometry::{DomainGeometry, Shape};
pub use montecarlo::{Compensation, PathConfig, PathSampler};
pub use projection::{DirectionalLaw, HemisphereQuad};
