//! Rotational cooling of trapped polar molecules by Stark-tuning each
//! rotational transition into resonance with a lossy microwave cavity.
//!
//! The physics modules are generic over the float type through [`Real`];
//! the aliases below fix it to `f64`, which is what the CLI uses.

pub mod cavity;
pub mod config;
pub mod dynamics;
mod error;
pub mod num;
pub mod planner;
pub mod spectroscopy;
pub mod units;

pub use error::{Error, Result};
pub use num::{Rational, Real};

pub use cavity::{CavityConfig, CavityGeometry};
pub use config::{parse_config, RunConfig};
pub use dynamics::{NbarMode, SimOptions, SimulationResult};
pub use planner::{CavityChoice, CavityRole, CoolingPlan, PlanOptions, Scheme, TuningStep};
pub use spectroscopy::{LineStrengthMode, PopulationState, RoState, Transition};
pub use units::{MolecularSpecies, PhysicalConstants, RawSpecies};

pub type Species = MolecularSpecies<f64>;
pub type Constants = PhysicalConstants<f64>;
pub type Cavity = CavityConfig<f64>;
pub type Geometry = CavityGeometry<f64>;
pub type Population = PopulationState<f64>;
pub type Plan = CoolingPlan<f64>;
pub type Step = TuningStep<f64>;
pub type Simulation = SimulationResult<f64>;
