pub mod adaptive;
pub mod cli;
pub mod combiner;
pub mod eeg;
pub mod error;
pub mod expansion;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod signals;
pub mod types;

pub use error::{Error, Result};
