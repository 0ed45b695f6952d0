pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod map_io;
pub mod report;
pub mod sim_config;

pub use commands::run;
pub use error::CliError;
