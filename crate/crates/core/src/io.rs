//! Deterministic CSV export.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that identical inputs give byte-identical files and values round-trip.

use std::io::Write;

use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::sweep::SweepResult;

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// One `t` column followed by one column per observable.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(traj.labels.iter().cloned());
    w.write_record(&header)?;
    for (i, t) in traj.times.iter().enumerate() {
        let mut row = vec![fmt_float(*t)];
        row.extend(traj.series.iter().map(|s| fmt_float(s[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header names of the per-mode frequency columns, e.g. `pert_plus`, `exact_zero_1`.
pub fn sweep_header(result: &SweepResult) -> Vec<String> {
    let mut header = vec!["g".to_string()];
    header.extend(result.labels.iter().map(|l| format!("pert_{l}")));
    header.extend(result.labels.iter().map(|l| format!("exact_{l}")));
    header.extend(["spread_pert", "spread_exact", "g_av", "xi"].map(String::from));
    header
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(result))?;
    for r in &result.rows {
        let mut row = vec![fmt_float(r.g)];
        row.extend(r.perturbative.iter().map(|x| fmt_float(*x)));
        row.extend(r.exact.iter().map(|x| fmt_float(*x)));
        row.push(fmt_float(r.spread_perturbative));
        row.push(fmt_float(r.spread_exact));
        row.push(fmt_float(r.g_av));
        row.push(r.xi.map_or("NaN".to_string(), fmt_float));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
