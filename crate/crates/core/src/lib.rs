//! Tagged-particle dynamics in a Rayleigh gas on the unit torus, the linear
//! Boltzmann equation it converges to, and the tools that compare the two.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod histogram;
pub mod laws;
pub mod quadrature;
pub mod sampling;
pub mod solver;
pub mod trees;

pub use dynamics::{SimConfig, SimOutcome};
pub use error::{Error, Result};
pub use geometry::{ContactEvent, TorusPoint, Vec3};
pub use harness::{run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport, ExperimentRow};
pub use histogram::{bootstrap_tv, estimate_tv, Histogram};
pub use laws::{BackgroundLaw, InitialLaw, SpatialLaw, TailDecay, VelocityLaw};
pub use sampling::ParticleState;
pub use solver::{DensityMode, KineticDensity, VelocityGrid};
pub use trees::{CollisionMarker, CollisionTree, GoodTreeParams, GoodTreeReport, SimStatus, TreeRecord};
