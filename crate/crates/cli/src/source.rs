use std::fs;
use std::path::PathBuf;

use clap::Args;

use cksvar::harness::{build_example, Params};
use cksvar::model::CksvarModel;

use crate::CliError;

/// Where the model comes from: a built-in example with optional parameter overrides, or a JSON file.
#[derive(Debug, Args)]
pub struct ModelSource {
    /// Built-in example name (see `examples`)
    #[arg(long, conflicts_with = "model")]
    pub example: Option<String>,
    /// Model file in the JSON layout written by `examples --dump`
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub chi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long = "phi-plus", allow_hyphen_values = true)]
    pub phi_plus: Option<f64>,
    #[arg(long = "phi-minus", allow_hyphen_values = true)]
    pub phi_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
}

impl ModelSource {
    fn params(&self) -> Params {
        [
            ("chi", self.chi),
            ("psi", self.psi),
            ("gamma", self.gamma),
            ("theta", self.theta),
            ("mu", self.mu),
            ("delta", self.delta),
            ("phi_plus", self.phi_plus),
            ("phi_minus", self.phi_minus),
            ("c", self.c),
            ("sigma", self.sigma),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }

    pub fn load(&self) -> Result<CksvarModel, CliError> {
        let params = self.params();
        match (&self.example, &self.model) {
            (Some(name), None) => Ok(build_example(name, &params)?),
            (None, Some(path)) => {
                if !params.is_empty() {
                    return Err(CliError::validation("usage", "parameter flags apply only to --example"));
                }
                let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Ok(CksvarModel::from_json(&text)?)
            }
            _ => Err(CliError::validation("usage", "exactly one of --example or --model is required")),
        }
    }
}
