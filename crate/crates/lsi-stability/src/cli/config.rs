//! Run configuration shared by all subcommands.

use crate::error::{Error, Result};
use crate::measures;
use serde::Serialize;
use std::path::PathBuf;

/// Output encoding for the data stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

/// Global knobs resolved from the command line.
///
/// `quad_order` of `None` means "per-dimension default" (which is always at
/// least 8); an explicit order must itself be at least 8. `tol` is the
/// acceptance tolerance used by `--check`-style verifications, `kappa` the
/// stability rate constant handed to the moment-bound chain, and `seed` the
/// stream seed for every randomized ensemble.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub quad_order: Option<usize>,
    pub tol: f64,
    pub kappa: f64,
    pub seed: u64,
    pub out_format: OutFormat,
    pub out_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(order) = self.quad_order {
            if order < 8 {
                return Err(Error::Parameter(format!(
                    "quadrature order must be at least 8, got {order}"
                )));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Parameter(format!(
                "kappa must be positive and finite, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// The per-axis quadrature order for fields of dimension `dim`.
    pub fn order_for(&self, dim: usize) -> usize {
        self.quad_order
            .unwrap_or_else(|| measures::default_order(dim))
    }
}
