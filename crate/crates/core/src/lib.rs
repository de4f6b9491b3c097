//! Moran process with mutation on finite populations.
//!
//! Builds the birth-death transition kernel over the simplex of population
//! states, solves for its stationary distribution, and computes the entropy
//! rate and the random trajectory entropy (RTE) `H(X) / s(v)` of every state.
//! The RTE serves as a stability measure for comparing the stationary extrema
//! of a process, and of families of processes across sweeps in the selection
//! strength, the mutation rate and the population size.
//!
//! ```
//! use moran_rte::{analyze, GameMatrix, MutationSpec, ProcessSpec, SelectionSpec, SolverOptions};
//!
//! let spec = ProcessSpec::new(
//!     10,
//!     GameMatrix::hawk_dove(),
//!     MutationSpec::uniform(0.1),
//!     SelectionSpec::fermi(1.0),
//! )
//! .unwrap();
//! let report = analyze(&spec, &SolverOptions::default()).unwrap();
//! let center = report.record_for(&[5, 5]).unwrap();
//! assert!(center.classification.is_local_max());
//! ```

pub mod analytic;
pub mod config;
pub mod entropy;
pub mod error;
pub mod export;
pub mod game;
pub mod kernel;
pub mod montecarlo;
pub mod process;
pub mod solver;
pub mod state;
pub mod sweep;

pub use entropy::{
    analyze, analyze_kernel, classify_extrema, entropy_rate, entropy_rate_bound, rte, rte_ratio, AnalysisReport,
    Classification, Extrema, LogBase, StateRecord,
};
pub use error::{Error, Result};
pub use game::GameMatrix;
pub use kernel::{build_kernel, TransitionKernel};
pub use process::{reproduction_probabilities, MutationSpec, ProcessSpec, SelectionKind, SelectionSpec};
pub use solver::{
    solve, solve_birth_death, solve_dense, solve_power, Method, MethodChoice, SolverOptions, StationaryDistribution,
};
pub use state::{enumerate_states, state_count, PopulationState, StateCountDivisor, StateSpace};
pub use sweep::{PointFailure, sweep, sweep_beta, sweep_mu, sweep_population, Grid, SweepOptions, SweepResult, SweptParameter, TrackedState};
pub use analytic::{fixation_absorbing, fixation_neutral, fixation_r_game, small_mutation_limit_ratio, FixationMethod, FixationResult, LimitRatio};
pub use montecarlo::{sample_return_trajectories, AliasSampler, SampleOptions, TrajectoryStats};
pub use config::{RunConfig, SweepConfig};
