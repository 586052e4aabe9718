//! Coherent randomized benchmarking toolkit: qudit linear algebra, Pauli and
//! Clifford gate sets, noise channels, protocol simulators and decay fitting.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fitstat;
pub mod gatesets;
pub mod io;
pub mod noise;
pub mod paulis;
pub mod qlinalg;
pub mod rbsim;
pub mod specs;
pub mod tolerance;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/gate-sets.md")]
    struct GateSets;
    #[doc = include_str!("../../../book/src/noise.md")]
    struct Noise;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/fitting.md")]
    struct Fitting;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
