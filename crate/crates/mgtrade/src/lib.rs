//! Energy-trading toolkit for small smart grids.
//!
//! A set of interconnected microgrids (MGs) and a central power plant trade
//! energy in discrete time slots. Each MG announces a vector of trading
//! intents, a bilateral negotiation rule settles them into realized trades,
//! and every MG collects a utility combining a logarithmic storage gain with
//! the cash flow of its trades.
//!
//! The crate has three layers:
//!
//! * game mechanics and closed-form equilibrium analysis for the three-MG
//!   game ([`game`], [`equilibrium`]),
//! * trace ingestion and synthesis for generation, demand, and price data
//!   ([`traces`]),
//! * trading policies behind a common agent contract, including a deep
//!   Q-network trained with the built-in network engine, plus the simulation
//!   engine that runs them ([`neural`], [`agents`], [`sim`]).

pub mod agents;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod neural;
pub mod sim;
pub mod traces;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
