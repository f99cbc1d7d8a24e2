//! Steady-state simulation of one or two trapped-ion phonon lasers and the
//! observables used to quantify their synchronization.

pub mod error;
pub mod hilbert;
pub mod labcalc;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod phase;
pub mod sparse;
pub mod sweeps;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
