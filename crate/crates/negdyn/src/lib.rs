//! Entanglement dynamics of two qubit ensembles A and B (N qubits each)
//! dissipating collectively into environments that share n common qubits C.
//!
//! The open-system evolution is purely dissipative with two collective
//! lowering channels, one for A together with C and one for B together
//! with C. Starting from a single excitation the state stays inside the
//! span of eleven symmetric operators, so the full master equation
//! reduces to an 11-dimensional linear ODE with a closed-form solution.
//! From those coefficients the A:B entanglement negativity follows
//! analytically via the block structure of the partial transpose.
//!
//! The crate provides three layers:
//!
//! * analytic: closed-form coefficient trajectories, reduced two-ensemble
//!   states, partial-transpose block spectra, negativity curves and their
//!   stationary values ([`dynamics`], [`negativity`]);
//! * oracle: a brute-force integrator of the full master equation on the
//!   complete 2^(2N+n)-dimensional Hilbert space, used to validate every
//!   analytic formula ([`oracle`]);
//! * front end: the `negdyn` command-line tool with `curve`, `stationary`
//!   and `verify` subcommands emitting CSV or JSON ([`cli`], [`table`]).

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod negativity;
pub mod numerics;
pub mod oracle;
pub mod table;

pub use config::{validate_config, EnsembleConfig, ExcitationCase, QubitLayout};
pub use error::Error;
