//! Floquet harmonic-balance simulation of rf-dressed optically pumped
//! magnetometers: first and second spin moments under periodic pumping,
//! pump-probe demodulation, and the lock-in quadratures `h_x, h_y, h_z`.

pub mod algebra;
pub mod config;
pub mod error;
pub mod floquet;
pub mod generators;
pub mod linalg;
pub mod observables;
pub mod output;
pub mod pump;
pub mod rotframe;
pub mod sim;

pub use error::{Error, Result};
