use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::paths::{mz_distance, StepPath, TimeGrid};

use super::{Command, CommonArgs};
use crate::config::Format;
use crate::output;

/// Distance between two step paths given by their grid values.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MzDistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Values `f_0..f_n` of the first path.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub f: Option<Vec<f64>>,
    /// Values `g_0..g_m` of the second path; one value means a constant.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g: Option<Vec<f64>>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MzDistConfig {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub horizon: f64,
}

impl Default for MzDistConfig {
    fn default() -> Self {
        Self {
            f: vec![0.0, 0.0],
            g: vec![0.0, 0.0],
            horizon: 1.0,
        }
    }
}

#[derive(Serialize)]
struct MzRow {
    #[serde(rename = "T")]
    horizon: f64,
    n_f: usize,
    n_g: usize,
    mz_distance: f64,
}

/// A single value is read as a constant path.
fn path(values: &[f64], horizon: f64) -> Result<StepPath> {
    let values = match values {
        [v] => vec![*v, *v],
        _ => values.to_vec(),
    };
    let steps = values.len().saturating_sub(1);
    Ok(StepPath::new(TimeGrid::new(steps, horizon)?, values)?)
}

impl Command for MzDistConfig {
    const NAME: &'static str = "mz-dist";
    const FORMATS: &'static [Format] = &[Format::Json, Format::Csv];

    fn run(&self, format: Format) -> Result<String> {
        let f = path(&self.f, self.horizon)?;
        let g = path(&self.g, self.horizon)?;
        let row = MzRow {
            horizon: self.horizon,
            n_f: f.grid().steps(),
            n_g: g.grid().steps(),
            mz_distance: mz_distance(&f, &g)?,
        };
        match format {
            Format::Json => output::json(row),
            Format::Csv => output::csv(&[row]),
        }
    }
}
