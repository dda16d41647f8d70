//! Command-line front end for `ergolab`: experiment configs, the system
//! catalog, ad-hoc diagnostics, external spectral classification and the
//! acceptance checks.

pub mod app;
pub mod catalog;
pub mod config;
pub mod error;
pub mod runner;
pub mod settings;
pub mod verify;

pub use app::main_with;
pub use error::{exit, CliError};
pub use settings::Settings;
