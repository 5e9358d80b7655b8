//! Link-level CSI prediction workbench.

pub mod channel;
pub mod commands;
pub mod config;
pub mod eesm;
pub mod error;
pub mod neural;
pub mod predictor;
pub mod sim;
pub mod sweep;
pub mod verify;
pub mod wiener;

pub use error::{Error, Result};
