//! Multi-sensor disorder detection as a non-cooperative stopping game.
//!
//! Each sensor watches a finite-alphabet Markov chain whose transition law
//! switches once, at a geometric disorder time. Sensors filter that time
//! exactly ([`belief`]), declare stop or continue, and a simple game
//! ([`games`]) fuses the declarations into one alarm. [`detect`] turns the
//! sensors into a finite game instance, [`equilibrium`] computes and
//! certifies equilibrium stopping sets, and [`sim`] replays them on sampled
//! trajectories.

pub mod belief;
pub mod chain;
pub mod detect;
pub mod equilibrium;
pub mod error;
pub mod games;
pub mod sim;

pub use belief::WindowedPosterior;
pub use chain::{ObservationAlphabet, SensorModel, Trajectory, TransitionKernel};
pub use detect::{DetectionInstance, GameInstance, Horizon};
pub use equilibrium::{EquilibriumSolution, StrategyProfile};
pub use error::{Error, Result};
pub use games::{SimpleGame, VoteVector};
