use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::diagnostics::{catalog, prediction_process, CylinderFunction};
use tclab::market::enumerate_tree;

use super::{Command, CommonArgs};
use crate::config::Format;
use crate::output;

/// Prediction processes `E[ψ | F_k]` of the built-in test functions.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    /// Test function name, or `all`.
    #[arg(long)]
    pub psi: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub n: usize,
    pub horizon: f64,
    pub psi: String,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            n: 4,
            horizon: 1.0,
            psi: "all".into(),
        }
    }
}

#[derive(Serialize)]
struct PredictRow<'a> {
    psi: &'a str,
    t: f64,
    node_id: usize,
    y_value: f64,
}

#[derive(Serialize)]
struct ProcessRecord {
    psi: String,
    bound: f64,
    y0: f64,
    martingale_defect: f64,
    levels: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct PredictDoc {
    n: usize,
    #[serde(rename = "T")]
    horizon: f64,
    processes: Vec<ProcessRecord>,
}

impl PredictConfig {
    fn functions(&self) -> Result<Vec<CylinderFunction>> {
        let all = catalog(self.n, self.horizon);
        if self.psi == "all" {
            return Ok(all);
        }
        let names: Vec<String> = all.iter().map(|f| f.name.clone()).collect();
        match all.into_iter().find(|f| f.name == self.psi) {
            Some(f) => Ok(vec![f]),
            None => bail!("unknown test function `{}`; known: all, {}", self.psi, names.join(", ")),
        }
    }
}

impl Command for PredictConfig {
    const NAME: &'static str = "predict";
    const FORMATS: &'static [Format] = &[Format::Csv, Format::Json];

    fn run(&self, format: Format) -> Result<String> {
        let functions = self.functions()?;
        let tree = enumerate_tree(self.n, self.horizon)?;
        let processes = functions
            .iter()
            .map(|f| Ok((f, prediction_process(&tree, f)?)))
            .collect::<Result<Vec<_>>>()?;
        match format {
            Format::Csv => {
                let mut rows = Vec::new();
                for (f, y) in &processes {
                    for (k, level) in y.levels.iter().enumerate() {
                        for (j, &v) in level.iter().enumerate() {
                            rows.push(PredictRow {
                                psi: &f.name,
                                t: y.grid.time(k),
                                node_id: j,
                                y_value: v,
                            });
                        }
                    }
                }
                output::csv(&rows)
            }
            Format::Json => output::json(PredictDoc {
                n: self.n,
                horizon: self.horizon,
                processes: processes
                    .into_iter()
                    .map(|(f, y)| ProcessRecord {
                        psi: f.name.clone(),
                        bound: f.bound,
                        y0: y.initial(),
                        martingale_defect: y.martingale_defect(),
                        levels: y.levels,
                    })
                    .collect(),
            }),
        }
    }
}
