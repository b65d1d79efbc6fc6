//! Full-field photoacoustic tomography in two dimensions.
//!
//! The measured data is the acoustic pressure at a single time `T`, restricted
//! to the exterior of the imaging region. This crate simulates that data for
//! variable sound speed with a k-space pseudospectral solver and inverts it
//! with an iterative time-reversal (Neumann series) scheme built from three
//! blocks: harmonic extension of the exterior data into the imaging disc,
//! time reversal of the wave equation, and orthogonal projection onto the
//! space of fields vanishing on the disc boundary.
//!
//! Modules follow the pipeline: [`grid`] and [`phantoms`] set up discrete
//! domains and inputs, [`wave`] propagates, [`elliptic`] solves the Dirichlet
//! problems, [`operators`] composes the forward/inverse maps, and
//! [`inversion`] runs the reconstruction loop. [`runner`] drives complete,
//! manifest-tracked runs for the CLI.

pub mod analysis;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod operators;
pub mod phantoms;
pub mod runner;
pub mod wave;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use grid::{discretize_domain, DiscreteDomain, DomainShape, Grid};
pub use operators::PipelineConfig;
pub use wave::{ScalarField, SolverConfig, SoundSpeed, WaveSnapshot};
