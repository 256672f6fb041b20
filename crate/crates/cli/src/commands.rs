//! The four subcommands. Each writes its CSV artifact and returns the
//! `results` object of the JSON report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use starsync::dynamics::fock::{fock_oracle_evolve, FockConfig};
use starsync::dynamics::metrics::sync_metrics_for;
use starsync::dynamics::{
    all_positions, init_state, make_dissipation, parse_observables, position_trajectory, time_grid,
    DissipationSpec, Frame, Observable,
};
use starsync::io::{fmt_float, write_sweep_csv, write_trajectory_csv};
use starsync::modes::{analyze, squeezing_estimate, NormalModes};
use starsync::sweep::{frequency_sweep, scaling_fit, SpreadSource};
use starsync::{build_canonical_transform, build_potential, exact_diagonalize, ModeLabel, NetworkParams};

use crate::config::{section_error, Basis, Format, RunConfig};
use crate::report::Failure;

fn tag(label: ModeLabel) -> &'static str {
    match label {
        ModeLabel::Plus => "leaking+",
        ModeLabel::Minus => "leaking-",
        ModeLabel::Zero(_) => "protected",
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_rows(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = create(dir, name)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn modes(cfg: &RunConfig, out: &Path) -> Result<Value, Failure> {
    let params = cfg.network_params()?;
    let decomp = build_potential(&params)?;
    let pert = analyze(&decomp)?;
    let exact = exact_diagonalize(&decomp)?;
    let residual = exact.max_residual(&decomp.v);
    let aligned = exact.aligned_to(&pert);
    let squeeze = squeezing_estimate(&pert, &decomp)?;

    let mut order: Vec<usize> = (0..aligned.dim()).collect();
    order.sort_by(|&a, &b| aligned.freqs[a].total_cmp(&aligned.freqs[b]));
    let entries: Vec<Value> = order
        .iter()
        .map(|&i| {
            let label = aligned.labels[i];
            json!({
                "label": label.to_string(),
                "tag": tag(label),
                "perturbative_hooke": pert.k_corr[i],
                "perturbative_freq": pert.freqs[i],
                "exact_hooke": aligned.hooke[i],
                "exact_freq": aligned.freqs[i],
            })
        })
        .collect();

    if cfg.wants(Format::Csv) {
        let header = ["label", "tag", "pert_hooke", "pert_freq", "exact_hooke", "exact_freq"].map(String::from);
        let rows: Vec<Vec<String>> = order
            .iter()
            .map(|&i| {
                let label = aligned.labels[i];
                vec![
                    label.to_string(),
                    tag(label).to_string(),
                    fmt_float(pert.k_corr[i]),
                    fmt_float(pert.freqs[i]),
                    fmt_float(aligned.hooke[i]),
                    fmt_float(aligned.freqs[i]),
                ]
            })
            .collect();
        write_rows(out, "modes.csv", &header, &rows)?;
    }

    Ok(json!({
        "xi": decomp.xi,
        "regime_warning": pert.regime_warning,
        "k_av": decomp.k_av,
        "g_av": decomp.g_av,
        "g_plus": pert.g_plus,
        "g_minus": pert.g_minus,
        "theta_mix": pert.theta_mix,
        "exact_residual": residual,
        "modes": entries,
        "squeezing": {
            "centre": squeeze.centre,
            "spread": squeeze.spread,
            "exact_spread": squeeze.exact_spread,
            "no_protected_pair": squeeze.no_protected_pair,
        },
    }))
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Value, Failure> {
    let section = cfg.section(&cfg.sweep, "sweep")?;
    let params = cfg.network_params()?;
    let result = frequency_sweep(&params, &section.spec()).map_err(|e| section_error("sweep", e))?;
    if cfg.wants(Format::Csv) {
        let mut w = create(out, "sweep.csv")?;
        write_sweep_csv(&result, &mut w)?;
        w.flush()?;
    }
    let threshold = section.fit_min_g.unwrap_or(section.g_min);
    let fit = |source| match scaling_fit(&result, threshold, source) {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": { "code": e.code(), "message": e.to_string() } }),
    };
    Ok(json!({
        "k_av": result.k_av,
        "points": result.rows.len(),
        "labels": result.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "fit_min_g": threshold,
        "fit_exact": fit(SpreadSource::Exact),
        "fit_perturbative": fit(SpreadSource::Perturbative),
    }))
}

/// Normal modes in the configured basis, rejected if any frequency is not real.
fn frame_modes(cfg: &RunConfig, params: &NetworkParams) -> Result<NormalModes, Failure> {
    let decomp = build_potential(params)?;
    let pert = analyze(&decomp)?;
    let modes = match cfg.dynamics.basis {
        Basis::Perturbative => pert.normal_modes()?,
        Basis::Exact => exact_diagonalize(&decomp)?.aligned_to(&pert),
    };
    modes.check_stable()?;
    Ok(modes)
}

fn dissipation(cfg: &RunConfig, modes: &NormalModes, params: &NetworkParams) -> Result<DissipationSpec, Failure> {
    let mut diss = make_dissipation(modes, params)?;
    if let Some(g) = cfg.dissipation.gamma_plus {
        diss.gamma_plus = g;
    }
    if let Some(g) = cfg.dissipation.gamma_minus {
        diss.gamma_minus = g;
    }
    Ok(diss)
}

fn observables(cfg: &RunConfig, dim: usize) -> Result<Vec<Observable>, Failure> {
    let time = cfg.section(&cfg.time, "time")?;
    if time.observables.is_empty() {
        Ok(all_positions(dim))
    } else {
        parse_observables(&time.observables).map_err(|e| section_error("time", e))
    }
}

pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<Value, Failure> {
    let time = cfg.section(&cfg.time, "time")?;
    let init = cfg.section(&cfg.initial_state, "initial_state")?;
    let params = cfg.network_params()?;
    let modes = frame_modes(cfg, &params)?;
    let diss = dissipation(cfg, &modes, &params)?;
    let transform = build_canonical_transform(&modes, &params)?;
    let state0 = init_state(&init.modes, init.frame).map_err(|e| section_error("initial_state", e))?;
    let times = time_grid(time.t_max, time.samples);
    let obs = observables(cfg, params.dim())?;
    let traj = position_trajectory(&state0, &transform, &diss, &modes, &times, &obs)?;
    if cfg.wants(Format::Csv) {
        let mut w = create(out, "trajectory.csv")?;
        write_trajectory_csv(&traj, &mut w)?;
        w.flush()?;
    }

    // Outer oscillators only: the hub carries no protected component.
    let outer: Vec<String> = obs
        .iter()
        .filter(|o| matches!(o, Observable::Position(l) if *l < params.n()))
        .map(|o| o.to_string())
        .collect();
    let metrics = if outer.len() < 2 {
        Value::Null
    } else {
        match sync_metrics_for(&traj, &outer, time.window) {
            Ok(m) => json!(m),
            Err(e) => json!({ "error": { "code": e.code(), "message": e.to_string() } }),
        }
    };
    Ok(json!({
        "basis": cfg.dynamics.basis,
        "labels": modes.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "normal_freqs": modes.freqs,
        "dissipation": diss,
        "samples": times.len(),
        "metrics": metrics,
    }))
}

pub fn oracle(cfg: &RunConfig, out: &Path) -> Result<Value, Failure> {
    let time = cfg.section(&cfg.time, "time")?;
    let init = cfg.section(&cfg.initial_state, "initial_state")?;
    let section = cfg.section(&cfg.oracle, "oracle")?;
    if init.frame != Frame::Normal {
        return Err(Failure::Core(starsync::Error::parameter(
            "initial_state.frame",
            "the Fock oracle takes per-mode preparations in the normal frame",
        )));
    }
    let params = cfg.network_params()?;
    let modes = frame_modes(cfg, &params)?;
    let diss = dissipation(cfg, &modes, &params)?;
    let transform = build_canonical_transform(&modes, &params)?;
    let times = time_grid(time.t_max, time.samples);
    let obs = observables(cfg, params.dim())?;

    let state0 = init_state(&init.modes, Frame::Normal).map_err(|e| section_error("initial_state", e))?;
    let gauss = position_trajectory(&state0, &transform, &diss, &modes, &times, &obs)?;
    let mut fock_cfg = FockConfig::with_cutoff(section.cutoff);
    fock_cfg.max_dim = section.max_dim;
    let run = fock_oracle_evolve(&params, &modes, &diss, &init.modes, &times, &obs, &fock_cfg)
        .map_err(|e| section_error("oracle", e))?;

    let mut deviations = serde_json::Map::new();
    let mut worst = 0.0f64;
    for o in &obs {
        let label = o.to_string();
        let a = gauss.get(&label).expect("gaussian series");
        let b = run.trajectory.get(&label).expect("oracle series");
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
        deviations.insert(label, d.into());
    }

    if cfg.wants(Format::Csv) {
        let mut header = vec!["t".to_string()];
        for o in &obs {
            header.push(format!("gauss_{o}"));
            header.push(format!("fock_{o}"));
        }
        header.push("fock_purity_protected".into());
        let purity = run.trajectory.get("purity_protected").expect("purity series");
        let rows: Vec<Vec<String>> = times
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut row = vec![fmt_float(*t)];
                for o in &obs {
                    let label = o.to_string();
                    row.push(fmt_float(gauss.get(&label).unwrap()[i]));
                    row.push(fmt_float(run.trajectory.get(&label).unwrap()[i]));
                }
                row.push(fmt_float(purity[i]));
                row
            })
            .collect();
        write_rows(out, "oracle.csv", &header, &rows)?;
    }

    Ok(json!({
        "basis": cfg.dynamics.basis,
        "dissipation": diss,
        "cutoff": section.cutoff,
        "dim": run.dim,
        "max_abs_difference": worst,
        "per_observable": deviations,
        "max_trace_deviation": run.max_trace_deviation,
        "min_eigenvalue": run.min_eigenvalue,
        "dt": run.dt,
        "step_change": run.step_change,
    }))
}
