//! CSV outputs. Column layouts are described in `docs/formats.md`.
//!
//! `summary.csv`, `timeseries.csv`, `metadata.csv` and `runs.csv` depend
//! only on the matrix and seed. Wall-clock data goes to `timing.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use vbtrack_core::metrics::{anees, mean_error_norm, relative_execution_time, rmse, AneesSeries};
use vbtrack_core::pipeline::{AdaptationMode, FilterFamily};
use vbtrack_core::STATE_DIM;

use crate::campaign::{CampaignResult, CellResult, VariantResult};
use crate::config::case_number;
use crate::error::{Error, Result};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "VBTRACK_OUT";

/// `--out` if given, else `$VBTRACK_OUT`, else `results`.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("results"),
    }
}

/// Per-step ensemble statistics of one variant over its metric runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub rmse_position: Vec<f64>,
    pub rmse_velocity: Vec<f64>,
    pub bias_norm: Vec<f64>,
    pub anees: Option<AneesSeries>,
    /// Metric runs that survived the divergence mask.
    pub survivors: usize,
}

pub fn series(v: &VariantResult, bound: f64) -> Option<Series> {
    // masked metrics equal metrics on the surviving subset
    let mask = v.ensemble.trace_mask(bound);
    let kept: Vec<_> = v.ensemble.traces.iter().zip(&mask).filter(|(_, m)| !**m).map(|(t, _)| t).collect();
    if kept.is_empty() {
        return None;
    }
    let all = vec![false; kept.len()];
    let pos: Vec<Vec<f64>> = kept.iter().map(|t| (0..t.errors.len()).map(|k| t.position_error(k)).collect()).collect();
    let vel: Vec<Vec<f64>> = kept.iter().map(|t| (0..t.errors.len()).map(|k| t.velocity_error(k)).collect()).collect();
    let errors: Vec<_> = kept.iter().map(|t| t.errors.clone()).collect();
    let nees: Vec<_> = kept.iter().map(|t| t.nees.clone()).collect();
    Some(Series {
        rmse_position: rmse(&pos, &all).ok()?,
        rmse_velocity: rmse(&vel, &all).ok()?,
        bias_norm: mean_error_norm(&errors, &all).ok()?,
        anees: anees(&nees, STATE_DIM, &all).ok(),
        survivors: kept.len(),
    })
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn create(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::Io(path.display().to_string(), e))?;
    Ok(csv::Writer::from_writer(file))
}

pub const SUMMARY_HEADER: [&str; 20] = [
    "scenario",
    "case",
    "filter",
    "mode",
    "runs",
    "metric_runs",
    "track_loss_pct",
    "numerical_failures",
    "rmse_pos_km",
    "rmse_vel_km_min",
    "bias_norm_km",
    "anees",
    "anees_lower",
    "anees_upper",
    "surviving_metric_runs",
    "median_iterations",
    "nonconverged_pct",
    "nonpositive_r_steps",
    "median_terminal_mu_deg",
    "median_terminal_sigma_deg",
];

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn summary_row(cell: &CellResult, v: &VariantResult, bound: f64) -> Vec<String> {
    let s = series(v, bound);
    let last = |x: &Vec<f64>| x.last().copied();
    let anees = s.as_ref().and_then(|s| s.anees.as_ref());
    vec![
        cell.scenario.clone(),
        case_number(cell.case).to_string(),
        v.filter.to_string(),
        v.mode.to_string(),
        v.ensemble.len().to_string(),
        v.ensemble.traces.len().to_string(),
        num(v.ensemble.track_loss_pct(bound)),
        v.ensemble.numerical_failure.iter().filter(|f| **f).count().to_string(),
        opt(s.as_ref().and_then(|s| last(&s.rmse_position))),
        opt(s.as_ref().and_then(|s| last(&s.rmse_velocity))),
        opt(s.as_ref().and_then(|s| last(&s.bias_norm))),
        opt(anees.and_then(|a| last(&a.values))),
        opt(anees.map(|a| a.lower)),
        opt(anees.map(|a| a.upper)),
        s.as_ref().map_or(0, |s| s.survivors).to_string(),
        v.median_iterations().map_or_else(String::new, |m| m.to_string()),
        if v.mode.is_vb() { num(100.0 * v.nonconverged_fraction()) } else { String::new() },
        v.nonpositive_r_steps.to_string(),
        opt(median(v.terminal_mu_hat.iter().map(|m| m.to_degrees()).collect())),
        opt(median(v.terminal_r_hat.iter().map(|r| r.sqrt().to_degrees()).collect())),
    ]
}

pub fn write_summary(dir: &Path, result: &CampaignResult) -> Result<()> {
    let mut w = create(dir, "summary.csv")?;
    w.write_record(SUMMARY_HEADER)?;
    for cell in &result.cells {
        for v in &cell.variants {
            w.write_record(summary_row(cell, v, result.matrix.track_loss_bound))?;
        }
    }
    w.flush().map_err(|e| Error::Io("summary.csv".into(), e))?;
    Ok(())
}

pub fn write_timeseries(dir: &Path, result: &CampaignResult) -> Result<()> {
    let mut w = create(dir, "timeseries.csv")?;
    w.write_record([
        "scenario",
        "case",
        "filter",
        "mode",
        "step",
        "time_min",
        "rmse_pos_km",
        "rmse_vel_km_min",
        "bias_norm_km",
        "anees",
        "anees_lower",
        "anees_upper",
    ])?;
    for cell in &result.cells {
        for v in &cell.variants {
            let Some(s) = series(v, result.matrix.track_loss_bound) else {
                continue;
            };
            for k in 0..s.rmse_position.len() {
                let a = s.anees.as_ref();
                w.write_record([
                    cell.scenario.clone(),
                    case_number(cell.case).to_string(),
                    v.filter.to_string(),
                    v.mode.to_string(),
                    k.to_string(),
                    num(cell.config.time_at(k)),
                    num(s.rmse_position[k]),
                    num(s.rmse_velocity[k]),
                    num(s.bias_norm[k]),
                    opt(a.map(|a| a.values[k])),
                    opt(a.map(|a| a.lower)),
                    opt(a.map(|a| a.upper)),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io("timeseries.csv".into(), e))?;
    Ok(())
}

/// Mean wall time of each variant and its ratio to the nonadaptive EKF in
/// the same cell.
pub fn relative_times(cell: &CellResult) -> Vec<(FilterFamily, AdaptationMode, f64, Option<f64>)> {
    let times: Vec<_> = cell.variants.iter().map(|v| ((v.filter, v.mode), v.ensemble.wall_time.clone())).collect();
    let rel = relative_execution_time(&times, &(FilterFamily::Ekf, AdaptationMode::NonAdaptive)).ok();
    cell.variants
        .iter()
        .enumerate()
        .map(|(i, v)| (v.filter, v.mode, v.ensemble.mean_wall_time(), rel.as_ref().map(|r| r[i].1)))
        .collect()
}

pub fn write_timing(dir: &Path, result: &CampaignResult) -> Result<()> {
    let mut w = create(dir, "timing.csv")?;
    w.write_record(["scenario", "case", "filter", "mode", "mean_time_ms", "rel_time"])?;
    for cell in &result.cells {
        for (f, m, t, rel) in relative_times(cell) {
            w.write_record([
                cell.scenario.clone(),
                case_number(cell.case).to_string(),
                f.to_string(),
                m.to_string(),
                format!("{:.4}", t * 1e3),
                rel.map_or_else(String::new, |r| format!("{r:.3}")),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Io("timing.csv".into(), e))?;
    Ok(())
}

pub fn write_metadata(dir: &Path, result: &CampaignResult) -> Result<()> {
    let m = &result.matrix;
    let o = &m.options;
    let mut w = create(dir, "metadata.csv")?;
    w.write_record(["key", "value"])?;
    let rows: Vec<(&str, String)> = vec![
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("base_seed", m.base_seed.to_string()),
        ("runs", m.runs.to_string()),
        ("metric_runs", m.metric_runs().to_string()),
        ("track_loss_bound_km", num(m.track_loss_bound)),
        ("ghf_order", o.ghf_order.to_string()),
        ("ukf_kappa", num(o.ukf_kappa)),
        ("zeta", num(o.vb.zeta)),
        ("max_iter", o.vb.max_iter.to_string()),
        ("denominator", format!("{:?}", o.vb.denominator).to_lowercase()),
        ("vb_alpha", num(o.vb_alpha)),
        ("vb_dof", num(o.vb_dof)),
        ("vb_mean", format!("{:?}", o.vb_mean).to_lowercase()),
        ("dof_grid", format!("{}..={}", o.tuning.dof_min, o.tuning.dof_max)),
        ("alpha_grid", format!("{}..={}", o.tuning.alpha_min, o.tuning.alpha_max)),
        ("mapmle_window", o.mapmle.window.to_string()),
        ("mapmle_mean_removed", o.mapmle.mean_removed.to_string()),
        ("guess_fraction", num(o.guess_fraction)),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush().map_err(|e| Error::Io("metadata.csv".into(), e))?;
    Ok(())
}

/// One row per run and variant.
pub fn write_runs(dir: &Path, result: &CampaignResult) -> Result<()> {
    let mut w = create(dir, "runs.csv")?;
    w.write_record([
        "scenario",
        "case",
        "filter",
        "mode",
        "run",
        "seed",
        "terminal_pos_err_km",
        "numerical_failure",
        "lost",
        "terminal_mu_deg",
        "terminal_sigma_deg",
    ])?;
    let bound = result.matrix.track_loss_bound;
    for cell in &result.cells {
        for v in &cell.variants {
            let e = &v.ensemble;
            for i in 0..e.len() {
                let lost = e.numerical_failure[i] || !(e.terminal_position_error[i] <= bound);
                w.write_record([
                    cell.scenario.clone(),
                    case_number(cell.case).to_string(),
                    v.filter.to_string(),
                    v.mode.to_string(),
                    i.to_string(),
                    v.seeds[i].to_string(),
                    num(e.terminal_position_error[i]),
                    u8::from(e.numerical_failure[i]).to_string(),
                    u8::from(lost).to_string(),
                    num(v.terminal_mu_hat[i].to_degrees()),
                    num(v.terminal_r_hat[i].sqrt().to_degrees()),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io("runs.csv".into(), e))?;
    Ok(())
}

/// Per-step record of the traced run for every variant.
pub fn write_trace(dir: &Path, result: &CampaignResult) -> Result<()> {
    let mut w = create(dir, "trace.csv")?;
    w.write_record([
        "scenario", "case", "filter", "mode", "step", "x", "y", "vx", "vy", "p_xx", "p_yy", "p_vxvx", "p_vyvy",
        "true_x", "true_y", "true_vx", "true_vy", "r_hat_rad2", "mu_hat_rad", "iterations", "converged", "alpha_prime",
    ])?;
    for cell in &result.cells {
        for v in &cell.variants {
            let Some(t) = &v.traced else {
                continue;
            };
            for (k, (s, x)) in t.trace.steps.iter().zip(&t.truth).enumerate() {
                let mut row = vec![
                    cell.scenario.clone(),
                    case_number(cell.case).to_string(),
                    v.filter.to_string(),
                    v.mode.to_string(),
                    k.to_string(),
                ];
                row.extend(s.belief.mean.iter().map(|m| num(*m)));
                row.extend((0..4).map(|i| num(s.belief.cov[(i, i)])));
                row.extend(x.iter().map(|m| num(*m)));
                row.push(num(s.r_hat));
                row.push(num(s.mu_hat));
                row.push(s.iterations.to_string());
                row.push(u8::from(s.converged).to_string());
                row.push(if v.mode.is_vb() { num(s.alpha_prime) } else { String::new() });
                w.write_record(row)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io("trace.csv".into(), e))?;
    Ok(())
}

/// Writes the standard files, plus `runs.csv` and `trace.csv` on request.
pub fn write_all(dir: &Path, result: &CampaignResult, per_run: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(dir.display().to_string(), e))?;
    write_summary(dir, result)?;
    write_timeseries(dir, result)?;
    write_timing(dir, result)?;
    write_metadata(dir, result)?;
    if per_run {
        write_runs(dir, result)?;
    }
    if result.matrix.trace_run.is_some() {
        write_trace(dir, result)?;
    }
    Ok(())
}
