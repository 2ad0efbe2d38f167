//! Independent reference checks, run by the `oracle` subcommand.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::RowVector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vbtrack_core::filter::measurement_update_known;
use vbtrack_core::measurement::{bearing, BearingModel, LinearModel, MeasurementModel};
use vbtrack_core::metrics::anees_bounds;
use vbtrack_core::moments::{cholesky, propagate};
use vbtrack_core::pipeline::{run_filter, AdaptationMode, FilterFamily, FilterOptions, KnownNoise};
use vbtrack_core::scenario::{deg, initial_belief, polar_prior, simulate_truth, CaseKind};
use vbtrack_core::vbniw::{iw_density, niw_density, vb_measurement_update, NiwBelief, VbOptions};
use vbtrack_core::{GaussianBelief, Matrix4, MomentRule, Vector4};

use crate::config::Config;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: &'static str,
    /// How the reference value is obtained.
    pub source: &'static str,
    /// Observed discrepancy (or statistic) compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub pass: bool,
}

fn timed(
    name: &'static str,
    source: &'static str,
    tolerance: f64,
    f: impl FnOnce() -> Option<f64>,
) -> OracleResult {
    let start = Instant::now();
    let value = f().unwrap_or(f64::NAN);
    OracleResult { name, source, value, tolerance, seconds: start.elapsed().as_secs_f64(), pass: value <= tolerance }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Largest violation of `Σw = 1`, `Σwξ = 0`, `Σwξξᵀ = I` over the bundled rules.
pub fn moment_rule_identities() -> Option<f64> {
    let mut rules = vec![MomentRule::cubature(), MomentRule::unscented(-1.0).ok()?, MomentRule::unscented(0.0).ok()?];
    for order in 2..=5 {
        rules.push(MomentRule::gauss_hermite(order).ok()?);
    }
    let mut worst: f64 = 0.0;
    for r in &rules {
        let mut sw = 0.0;
        let mut m1 = Vector4::zeros();
        let mut m2 = Matrix4::zeros();
        for (xi, w) in r.points().iter().zip(r.weights()) {
            sw += w;
            m1 += xi * *w;
            m2 += xi * xi.transpose() * *w;
        }
        worst = worst.max((sw - 1.0).abs()).max(m1.amax()).max((m2 - Matrix4::identity()).amax());
    }
    Some(worst)
}

fn linear_belief() -> GaussianBelief {
    let cov = Matrix4::new(
        0.5, 0.1, 0.02, 0.0, //
        0.1, 0.4, 0.0, 0.01, //
        0.02, 0.0, 0.05, 0.005, //
        0.0, 0.01, 0.005, 0.03,
    );
    GaussianBelief::new(Vector4::new(1.0, -2.0, 0.3, 0.1), cov)
}

/// Largest error of sample-point propagation through `h(x) = a·x`.
pub fn linear_surrogate_exactness() -> Option<f64> {
    let belief = linear_belief();
    let model = LinearModel::new(RowVector4::new(0.7, -1.3, 2.0, 0.4));
    let exact_y = (model.a * belief.mean)[0];
    let exact_pxy = belief.cov * model.a.transpose();
    let exact_s = (model.a * belief.cov * model.a.transpose())[0];
    let mut worst: f64 = 0.0;
    for r in MomentRule::all_default() {
        let m = propagate(&belief, &r, &model).ok()?;
        worst = worst.max((m.y_hat - exact_y).abs()).max((m.spread - exact_s).abs()).max((m.p_xy - exact_pxy).amax());
    }
    Some(worst)
}

/// VB with a concentrated noise prior at the truth against the Kalman update;
/// largest relative difference in mean and covariance.
pub fn kalman_degeneracy() -> Option<f64> {
    let prior = linear_belief();
    let model = LinearModel::first_component();
    let (r_true, r_m) = (0.04, 0.1);
    let u = 1e6;
    let niw = NiwBelief::new(r_m, 1e-6, u, (u - 2.0) * r_true).ok()?;
    let opts = VbOptions { zeta: 1e-12, ..Default::default() };
    let mut worst: f64 = 0.0;
    for rule in MomentRule::all_default() {
        let vb = vb_measurement_update(&prior, 1.7, &niw, &model, &rule, &opts).ok()?;
        let kf = measurement_update_known(&prior, 1.7, r_m, r_true, &model, &rule).ok()?;
        let scale = kf.cov.amax();
        for i in 0..4 {
            worst = worst.max(rel(vb.posterior.mean[i], kf.mean[i]));
        }
        worst = worst.max((vb.posterior.cov - kf.cov).amax() / scale);
    }
    Some(worst)
}

fn normal_density(residual: f64, variance: f64) -> f64 {
    (-0.5 * residual * residual / variance).exp() / (2.0 * PI * variance).sqrt()
}

/// Converged VB noise parameters against the exact NIW posterior on a grid,
/// for `y = x₁ + v` with a nearly known `x₁`. Returns the larger relative
/// error of `E[R]` and `E[r]`.
pub fn conjugacy() -> Option<f64> {
    let model = LinearModel::first_component();
    let p = 1e-6;
    let mut cov = Matrix4::identity() * 0.01;
    cov[(0, 0)] = p;
    let prior = GaussianBelief::new(Vector4::zeros(), cov);
    let niw = NiwBelief::from_guess(0.02, 0.02, 50.0, 0.01).ok()?;
    let y = 0.25;
    let opts = VbOptions { zeta: 1e-12, max_iter: 200, ..Default::default() };
    let vb = vb_measurement_update(&prior, y, &niw, &model, &MomentRule::cubature(), &opts).ok()?;
    if !vb.converged {
        return None;
    }

    let r_half = 8.0 * (niw.alpha_prime * niw.u_scale / (niw.u_prime - 2.0)).sqrt() + 0.5;
    let b_max = 6.0 * niw.u_scale / (niw.u_prime - 2.0);
    let (nr, nb) = (801, 4000);
    let (mut z, mut er, mut eb) = (0.0, 0.0, 0.0);
    for ib in 0..nb {
        let b = b_max * (ib as f64 + 0.5) / nb as f64;
        for ir in 0..nr {
            let r = niw.mu_prime - r_half + 2.0 * r_half * ir as f64 / (nr - 1) as f64;
            let w = niw_density(r, b, &niw).ok()? * normal_density(y - r, p + b);
            z += w;
            er += w * r;
            eb += w * b;
        }
    }
    let q_r = vb.niw.u_scale / (vb.niw.u_prime - 2.0);
    Some(rel(q_r, eb / z).max(rel(vb.mu_hat, er / z)))
}

/// `|∫ IW(b) db - 1|` by composite Simpson on a log grid.
pub fn iw_normalization() -> Option<f64> {
    let (lambda, psi) = (7.0, 0.03);
    let (lo, hi) = ((1e-6f64).ln(), (10.0f64).ln());
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let t = lo + h * i as f64;
        let b = t.exp();
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * iw_density(b, lambda, psi).ok()? * b;
    }
    Some((sum * h / 3.0 - 1.0).abs())
}

/// Largest deviation of the 95% ANEES bounds at n = 4, M = 500 from the
/// reference quantiles.
pub fn chi2_bounds() -> Option<f64> {
    let (b1, b2) = anees_bounds(4, 500).ok()?;
    // chi-square quantiles at 2000 dof, divided by 2000
    Some((b1 - 0.938_973_018_407_695).abs().max((b2 - 1.062_921_151_224_888).abs()))
}

/// `|ŷ_GH - E[h(X)]|` (rad) on the Scenario I prior, against 10⁶ samples.
pub fn hermite_bearing_mean() -> Option<f64> {
    let cfg = Config::resolve("1").ok()?.scenario_config(CaseKind::Static).ok()?;
    let own = vbtrack_core::scenario::build_ownship_trajectory(&cfg).ok()?;
    let polar = Vector4::new(cfg.initial_range, cfg.initial_bearing, cfg.target_speed, cfg.target_course);
    let sigmas = Vector4::new(cfg.sigma_r, cfg.initial_sigma_theta(), cfg.sigma_s, cfg.sigma_c);
    let prior = polar_prior(&polar, &sigmas, &own[0]).ok()?;
    let gh = propagate(&prior, &MomentRule::gauss_hermite(3).ok()?, &BearingModel).ok()?;
    let root = cholesky(&prior.cov).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
        sum += BearingModel.residual(bearing(&(prior.mean + root * z)).ok()?, gh.y_hat);
    }
    Some((sum / n as f64).abs())
}

/// Terminal position error (km) of a nonadaptive GHF on noise-free bearings.
pub fn noise_free_run() -> Option<f64> {
    let preset = Config::resolve("1").ok()?;
    let mut quiet = preset.clone();
    quiet.noise.static_sigma_deg = 0.0;
    quiet.noise.mean_deg = 0.0;
    quiet.scenario.process_intensity = 0.0;
    let sc = quiet.scenario_config(CaseKind::Static).ok()?;
    let filter_cfg = preset.scenario_config(CaseKind::Static).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = simulate_truth(&sc, &mut rng).ok()?;
    let init = initial_belief(truth.measured[0], &filter_cfg, &truth.ownship[0], &mut rng).ok()?;
    // small noise floor keeps the known-noise update regular
    let sigma = [deg(0.1)];
    let noise = KnownNoise { mean: 0.0, sigma: &sigma };
    let trace = run_filter(
        &init,
        &filter_cfg.process_model(&truth.ownship),
        &truth.measured,
        &noise,
        &BearingModel,
        FilterFamily::Ghf,
        AdaptationMode::NonAdaptive,
        &FilterOptions::default(),
    )
    .ok()?;
    Some(trace.terminal_position_error(&truth.relative))
}

pub fn run_all() -> Vec<OracleResult> {
    vec![
        timed("moment rule identities", "closed form", 1e-10, moment_rule_identities),
        timed("linear surrogate exactness", "closed form", 1e-12, linear_surrogate_exactness),
        timed("kalman degeneracy", "Kalman update", 1e-6, kalman_degeneracy),
        timed("NIW conjugacy", "grid posterior", 1e-3, conjugacy),
        timed("IW normalization", "quadrature", 1e-6, iw_normalization),
        timed("ANEES chi-square bounds", "incomplete gamma", 1e-9, chi2_bounds),
        timed("GH bearing mean", "Monte Carlo 1e6", 3e-3, hermite_bearing_mean),
        timed("noise-free GHF run", "simulation", 0.2, noise_free_run),
    ]
}

pub fn format_table(results: &[OracleResult]) -> String {
    let mut out = format!("{:<28} {:<18} {:>12} {:>10} {:>9}  status\n", "check", "reference", "value", "tol", "time_s");
    for r in results {
        out.push_str(&format!(
            "{:<28} {:<18} {:>12.3e} {:>10.1e} {:>9.3}  {}\n",
            r.name,
            r.source,
            r.value,
            r.tolerance,
            r.seconds,
            if r.pass { "ok" } else { "FAIL" }
        ));
    }
    out
}
