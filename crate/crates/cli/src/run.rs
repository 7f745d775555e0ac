//! Single runs and Cartesian sweeps.

use rayon::prelude::*;

use crate::commands::{columns, execute, RunError};
use crate::config::ExperimentConfig;
use crate::table::{Cell, Metadata, ResultTable};

#[derive(Debug)]
pub struct Outcome {
    pub table: ResultTable,
    /// Sweep points that produced an error row.
    pub failed_points: usize,
}

/// Every combination of sweep values, first axis slowest.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    cfg.sweep.iter().fold(vec![Vec::new()], |acc, axis| {
        let values = axis.values();
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Run the configured subcommand. Without sweep axes any error is returned
/// directly; with axes, failing points become error rows.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let meta = Metadata::for_config(cfg);
    let base_cols = columns(cfg.subcommand);
    if cfg.sweep.is_empty() {
        let mut table = ResultTable::new(meta, base_cols.iter().map(|s| s.to_string()).collect());
        for row in execute(cfg)? {
            table.push(row);
        }
        return Ok(Outcome { table, failed_points: 0 });
    }

    let names: Vec<&str> = cfg.sweep.iter().map(|a| a.name.as_str()).collect();
    let mut cols: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    cols.extend(base_cols.iter().map(|s| s.to_string()));
    cols.push("error".into());
    let mut table = ResultTable::new(meta, cols);

    let points = sweep_points(cfg);
    // Evaluated in any order, collected in axis order.
    let results: Vec<Result<Vec<Vec<Cell>>, RunError>> = points
        .par_iter()
        .map(|p| {
            let overrides: Vec<(&str, f64)> = names.iter().copied().zip(p.iter().copied()).collect();
            let point = cfg.with_overrides(&overrides)?;
            execute(&point)
        })
        .collect();

    let mut failed = 0;
    for (p, res) in points.iter().zip(results) {
        let prefix = p.iter().map(|&v| Cell::Float(v));
        match res {
            Ok(rows) => {
                for row in rows {
                    let mut r: Vec<Cell> = prefix.clone().collect();
                    r.extend(row);
                    r.push(Cell::Empty);
                    table.push(r);
                }
            }
            Err(e) => {
                failed += 1;
                let mut r: Vec<Cell> = prefix.collect();
                r.extend(std::iter::repeat_n(Cell::Empty, base_cols.len()));
                r.push(Cell::Text(e.to_string()));
                table.push(r);
            }
        }
    }
    Ok(Outcome { table, failed_points: failed })
}
