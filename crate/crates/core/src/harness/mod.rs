//! Monte Carlo checks of the representation results, built-in examples and random model generators.

pub mod diagnostics;
pub mod fixtures;
pub mod mc;
pub mod random;
pub mod stats;

pub use diagnostics::{residual_check, Equilibrium, ResidualReport};
pub use fixtures::{build_example, fixtures, params, ExampleFixture, Params};
pub use mc::{growth_diagnostics, limit_path, run_mc, ExpectedCase, Functional, GrowthRow, McReport, McSpec};
