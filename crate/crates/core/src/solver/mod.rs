//! The linear Boltzmann equation for the tagged particle.

pub mod density;
pub mod duhamel;
pub mod gain;
pub mod jump;
pub mod operator;
pub mod rates;
pub mod tree_density;

pub use density::{DensityMode, KineticDensity, VelocityDensity, VelocityGrid};
pub use duhamel::{duhamel_solve, semigroup_t, DuhamelSolution, DuhamelSolver};
pub use gain::{carleman_k, gain_carleman, gain_sphere};
pub use jump::{jump_sample, JumpEvent, JumpSampler, JumpTrajectory};
pub use operator::DiscreteGain;
pub use rates::{loss_rate, RateCache};
pub use tree_density::tree_density_p;
