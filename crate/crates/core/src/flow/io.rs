//! CSV trajectories and JSON event sidecars.

use std::io::Write;

use serde_json::json;

use super::{orthonormal_bracket, Trajectory};
use crate::curvature::{nilsoliton_solve, riemann_of};
use crate::error::Result;
use crate::exterior::basis;
use crate::liealg::LieAlgebra;
use crate::Metric;

/// Optional derived columns after the 35 coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsvColumns {
    pub riem_sup: bool,
    pub lambda: bool,
}

impl CsvColumns {
    pub const ALL: CsvColumns = CsvColumns {
        riem_sup: true,
        lambda: true,
    };
    pub const NONE: CsvColumns = CsvColumns {
        riem_sup: false,
        lambda: false,
    };
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names and numeric rows shared by the CSV and JSON writers.
fn table(traj: &Trajectory, alg: &LieAlgebra, cols: CsvColumns) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header = vec!["t".to_string()];
    header.extend(
        basis(3)
            .iter()
            .map(|idx| format!("c_{}", idx.axes().map(|a| a.to_string()).collect::<String>())),
    );
    if cols.riem_sup {
        header.push("riem_sup".into());
    }
    if cols.lambda {
        header.push("lambda".into());
    }
    let mut rows = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let mut row = vec![s.t];
        row.extend_from_slice(&s.c);
        if cols.riem_sup || cols.lambda {
            let on = orthonormal_bracket(alg, &s.form())?;
            if cols.riem_sup {
                row.push(riemann_of(&on, &Metric::identity())?.sup_norm());
            }
            if cols.lambda {
                row.push(nilsoliton_solve(&on, &Metric::identity())?.lambda);
            }
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes `t,c_123,…,c_567[,riem_sup][,lambda]`, one row per sample, every
/// number with 17 significant digits.
pub fn write_csv<W: Write>(
    mut w: W,
    traj: &Trajectory,
    alg: &LieAlgebra,
    cols: CsvColumns,
) -> Result<()> {
    let (header, rows) = table(traj, alg, cols)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().map(num).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// The same table as [`write_csv`] as `{"columns", "rows", "events"}`.
pub fn write_json<W: Write>(
    mut w: W,
    traj: &Trajectory,
    alg: &LieAlgebra,
    cols: CsvColumns,
) -> Result<()> {
    let (header, rows) = table(traj, alg, cols)?;
    let doc = json!({"columns": header, "rows": rows, "events": events(traj)});
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

fn events(traj: &Trajectory) -> Vec<serde_json::Value> {
    traj.events
        .iter()
        .map(|e| json!({"type": e.kind, "t": e.t, "reason": e.reason}))
        .collect()
}

/// The events as a JSON array of `{"type", "t", "reason"}`.
pub fn write_events_json<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &events(traj))?;
    writeln!(w)?;
    Ok(())
}
