//! Curve data for external plotting: one TSV per (event, adverbial) pair.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::log_grid;
use crate::error::{Error, Result};
use crate::model::{composite_at_minutes, FactorizedModel};

pub const POINTS_PER_CURVE: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub event: String,
    pub adverbial: String,
    /// `(t_minutes, probability)`
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn file_name(&self) -> String {
        format!("{}__{}.tsv", sanitize(&self.event), sanitize(&self.adverbial))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("t_minutes\tprobability\n");
        for (t, p) in &self.points {
            out.push_str(&format!("{t}\t{p}\n"));
        }
        out
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if matches!(c, '/' | '\\' | '\0') { '_' } else { c }).collect()
}

/// Composite probability over `POINTS_PER_CURVE` log-spaced times in
/// `[sigma_e/100, 100 sigma_e]` for every pair in the model.
pub fn curves(model: &FactorizedModel) -> Vec<Curve> {
    let mut out = Vec::with_capacity(model.n_events() * model.n_adverbials());
    for ev in model.events() {
        let grid = log_grid(ev.sigma_e / 100.0, ev.sigma_e * 100.0, POINTS_PER_CURVE);
        for adv in model.adverbials() {
            out.push(Curve {
                event: ev.id.clone(),
                adverbial: adv.id.clone(),
                points: grid.iter().map(|&t| (t, composite_at_minutes(t, ev, adv))).collect(),
            });
        }
    }
    out
}

/// Writes every curve into `dir`, creating it if needed. Returns the written paths.
pub fn write_curves(model: &FactorizedModel, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    curves(model)
        .into_iter()
        .map(|c| {
            let path = dir.join(c.file_name());
            fs::write(&path, c.to_tsv()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
