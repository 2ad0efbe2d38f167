//! One filter run over a measurement sequence: time update followed by the
//! measurement update of the selected family and adaptation mode.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::filter::{measurement_update_known, time_update, GaussianBelief, ProcessModel};
use crate::mapmle::{mapmle_measurement_update, MapMleConfig, MapMleState};
use crate::measurement::{BearingModel, MeasurementModel};
use crate::metrics::{nees, RunErrors};
use crate::moments::{MomentRule, RuleKind};
use crate::scenario::{ScenarioConfig, TruthRecord};
use crate::vbniw::{tune_parameters, vb_measurement_update, NiwBelief, TuningGrid, VbOptions};
use crate::Vector4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterFamily {
    Ekf,
    Ckf,
    Ukf,
    Ghf,
}

impl FilterFamily {
    pub const ALL: [FilterFamily; 4] = [Self::Ekf, Self::Ckf, Self::Ukf, Self::Ghf];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ekf => "ekf",
            Self::Ckf => "ckf",
            Self::Ukf => "ukf",
            Self::Ghf => "ghf",
        }
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or(Error::InvalidConfig("filter must be one of ekf, ckf, ukf, ghf"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdaptationMode {
    /// True noise statistics.
    NonAdaptive,
    /// VB update with fixed confidence parameter and initial dof.
    Vb,
    /// VB update with likelihood-tuned dof (first step) and confidence
    /// parameter (every step).
    VbTuned,
    MapMle,
}

impl AdaptationMode {
    pub const ALL: [AdaptationMode; 4] = [Self::NonAdaptive, Self::Vb, Self::VbTuned, Self::MapMle];

    pub fn name(self) -> &'static str {
        match self {
            Self::NonAdaptive => "nonadaptive",
            Self::Vb => "vb",
            Self::VbTuned => "vb-tuned",
            Self::MapMle => "mapmle",
        }
    }

    pub fn is_vb(self) -> bool {
        matches!(self, Self::Vb | Self::VbTuned)
    }
}

impl fmt::Display for AdaptationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdaptationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "nonadaptive" | "none" => Ok(Self::NonAdaptive),
            "vb" => Ok(Self::Vb),
            "vb-tuned" | "vbtuned" => Ok(Self::VbTuned),
            "mapmle" => Ok(Self::MapMle),
            _ => Err(Error::InvalidConfig("mode must be one of nonadaptive, vb, vb-tuned, mapmle")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    pub ghf_order: usize,
    pub ukf_kappa: f64,
    pub vb: VbOptions,
    pub tuning: TuningGrid,
    /// Confidence parameter for the untuned VB mode.
    pub vb_alpha: f64,
    /// Initial degrees of freedom for the untuned VB mode.
    pub vb_dof: f64,
    pub mapmle: MapMleConfig,
    /// How the VB noise-mean prior moves between steps.
    pub vb_mean: MeanCarry,
    /// Adaptive filters start from this fraction of the true noise mean
    /// and variance.
    pub guess_fraction: f64,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            ghf_order: 3,
            ukf_kappa: -1.0,
            vb: VbOptions::default(),
            tuning: TuningGrid::default(),
            vb_alpha: 1.0,
            vb_dof: 5.0,
            mapmle: MapMleConfig::default(),
            vb_mean: MeanCarry::Fixed,
            guess_fraction: 0.5,
        }
    }
}

impl FilterOptions {
    pub fn rule(&self, family: FilterFamily) -> Result<MomentRule> {
        match family {
            FilterFamily::Ekf => Ok(MomentRule::linearized()),
            FilterFamily::Ckf => Ok(MomentRule::cubature()),
            FilterFamily::Ukf => MomentRule::unscented(self.ukf_kappa),
            FilterFamily::Ghf => MomentRule::gauss_hermite(self.ghf_order),
        }
    }
}

/// Step-to-step handling of the VB noise-mean prior `(μ', α')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanCarry {
    /// `μ'` becomes the last converged `μ`; `α'` is held (or re-tuned).
    Propagate,
    /// `μ'` stays at the initial guess every step.
    Fixed,
    /// `μ' ← μ` and `α' ← α'/(α'+1)`, the sequential conjugate recursion.
    Recursive,
}

/// True noise statistics: mean, and deviation per step.
#[derive(Debug, Clone, Copy)]
pub struct KnownNoise<'a> {
    pub mean: f64,
    pub sigma: &'a [f64],
}

impl KnownNoise<'_> {
    fn variance(&self, k: usize) -> f64 {
        let s = self.sigma[k.min(self.sigma.len() - 1)];
        s * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub belief: GaussianBelief,
    /// Noise variance used (or estimated) at this step (rad²).
    pub r_hat: f64,
    pub mu_hat: f64,
    /// Fixed-point iterations; 0 outside the VB modes.
    pub iterations: u32,
    pub converged: bool,
    /// Confidence parameter in use (VB modes).
    pub alpha_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// One record per step, `k = 0..=K`.
    pub steps: Vec<StepRecord>,
    /// First step whose measurement update failed; the run is predict-only
    /// from there on.
    pub failed_at: Option<usize>,
    /// The unscented rule was rerun with κ = 0.
    pub kappa_fallback: bool,
    pub tuned_dof: Option<f64>,
    /// VB steps where an iterate failed and the previous one was kept.
    pub vb_faults: usize,
}

impl RunTrace {
    pub fn failed(&self) -> bool {
        self.failed_at.is_some()
    }

    /// Estimation errors and NEES against the true relative states.
    pub fn errors(&self, truth: &[Vector4]) -> RunErrors {
        let mut out = RunErrors { errors: Vec::with_capacity(truth.len()), nees: Vec::with_capacity(truth.len()) };
        for (s, x) in self.steps.iter().zip(truth) {
            out.errors.push(s.belief.mean - x);
            out.nees.push(nees(x, &s.belief).unwrap_or(f64::NAN));
        }
        out
    }

    pub fn terminal_position_error(&self, truth: &[Vector4]) -> f64 {
        match (self.steps.last(), truth.get(self.steps.len().wrapping_sub(1))) {
            (Some(s), Some(x)) => libm::hypot(s.belief.mean[0] - x[0], s.belief.mean[1] - x[1]),
            _ => f64::NAN,
        }
    }
}

fn carry(mut niw: NiwBelief, alpha: f64, mu_guess: f64, how: MeanCarry) -> NiwBelief {
    match how {
        MeanCarry::Propagate => {}
        MeanCarry::Fixed => niw.mu_prime = mu_guess,
        MeanCarry::Recursive => niw.alpha_prime = alpha,
    }
    niw
}

enum Adaptive {
    Known,
    Vb(NiwBelief),
    VbTuned(Option<NiwBelief>),
    MapMle(MapMleState),
}

fn run_with_rule<M: MeasurementModel>(
    init: &GaussianBelief,
    process: &ProcessModel,
    measurements: &[f64],
    noise: &KnownNoise,
    model: &M,
    rule: &MomentRule,
    mode: AdaptationMode,
    opts: &FilterOptions,
) -> Result<RunTrace> {
    if noise.sigma.is_empty() {
        return Err(Error::InvalidArgument("noise deviations must not be empty"));
    }
    let mu_guess = opts.guess_fraction * noise.mean;
    let r_guess = opts.guess_fraction * noise.variance(0);
    let mut state = match mode {
        AdaptationMode::NonAdaptive => Adaptive::Known,
        AdaptationMode::Vb => Adaptive::Vb(NiwBelief::from_guess(mu_guess, opts.vb_alpha, opts.vb_dof, r_guess)?),
        AdaptationMode::VbTuned => Adaptive::VbTuned(None),
        AdaptationMode::MapMle => Adaptive::MapMle(MapMleState::new(mu_guess, r_guess, opts.mapmle)?),
    };
    let (r0, mu0, alpha0) = match mode {
        AdaptationMode::NonAdaptive => (noise.variance(0), noise.mean, 0.0),
        AdaptationMode::Vb => (r_guess, mu_guess, opts.vb_alpha),
        _ => (r_guess, mu_guess, 0.0),
    };

    let mut trace = RunTrace {
        steps: Vec::with_capacity(measurements.len()),
        failed_at: None,
        kappa_fallback: false,
        tuned_dof: None,
        vb_faults: 0,
    };
    trace.steps.push(StepRecord {
        belief: *init,
        r_hat: r0,
        mu_hat: mu0,
        iterations: 0,
        converged: true,
        alpha_prime: alpha0,
    });

    let mut belief = *init;
    for (k, &y) in measurements.iter().enumerate().skip(1) {
        let prior = time_update(&belief, process, k);
        let last = *trace.steps.last().expect("initial record");
        let mut record = StepRecord { belief: prior, iterations: 0, converged: true, ..last };
        if trace.failed_at.is_none() {
            let outcome: Result<()> = (|| {
                match &mut state {
                    Adaptive::Known => {
                        let r = noise.variance(k);
                        record.belief = measurement_update_known(&prior, y, noise.mean, r, model, rule)?;
                        record.r_hat = r;
                        record.mu_hat = noise.mean;
                    }
                    Adaptive::Vb(niw) => {
                        let res = vb_measurement_update(&prior, y, niw, model, rule, &opts.vb)?;
                        trace.vb_faults += usize::from(res.fault.is_some());
                        record.belief = res.posterior;
                        record.r_hat = res.r_hat;
                        record.mu_hat = res.mu_hat;
                        record.iterations = res.iterations as u32;
                        record.converged = res.converged;
                        record.alpha_prime = niw.alpha_prime;
                        *niw = carry(res.niw, res.alpha_hat, mu_guess, opts.vb_mean);
                    }
                    Adaptive::VbTuned(niw) => {
                        let tuned = tune_parameters(
                            &prior,
                            y,
                            niw.as_ref(),
                            mu_guess,
                            r_guess,
                            &opts.tuning,
                            model,
                            rule,
                            &opts.vb,
                        )?;
                        if tuned.dof.is_some() {
                            trace.tuned_dof = tuned.dof;
                        }
                        let res = tuned.result;
                        trace.vb_faults += usize::from(res.fault.is_some());
                        record.belief = res.posterior;
                        record.r_hat = res.r_hat;
                        record.mu_hat = res.mu_hat;
                        record.iterations = res.iterations as u32;
                        record.converged = res.converged;
                        record.alpha_prime = tuned.alpha_prime;
                        *niw = Some(carry(res.niw, res.alpha_hat, mu_guess, opts.vb_mean));
                    }
                    Adaptive::MapMle(s) => {
                        // the update uses the estimates carried from the last step
                        record.r_hat = s.r_cov;
                        record.mu_hat = s.r_hat;
                        let (post, next) = mapmle_measurement_update(&prior, y, s, model, rule)?;
                        record.belief = post;
                        *s = next;
                    }
                }
                Ok(())
            })();
            if outcome.is_err() {
                trace.failed_at = Some(k);
                record = StepRecord { belief: prior, iterations: 0, converged: false, ..last };
            }
        }
        belief = record.belief;
        trace.steps.push(record);
    }
    Ok(trace)
}

/// Runs one filter over `measurements[1..]`; `measurements[0]` is assumed
/// to have been consumed by the initial belief.
///
/// For the unscented family, a run whose updates fail with the configured
/// κ is repeated with κ = 0 and marked.
#[allow(clippy::too_many_arguments)]
pub fn run_filter<M: MeasurementModel>(
    init: &GaussianBelief,
    process: &ProcessModel,
    measurements: &[f64],
    noise: &KnownNoise,
    model: &M,
    family: FilterFamily,
    mode: AdaptationMode,
    opts: &FilterOptions,
) -> Result<RunTrace> {
    let rule = opts.rule(family)?;
    let trace = run_with_rule(init, process, measurements, noise, model, &rule, mode, opts)?;
    let retry = family == FilterFamily::Ukf
        && (trace.failed() || trace.vb_faults > 0)
        && !matches!(rule.kind(), RuleKind::Unscented { kappa } if kappa == 0.0);
    if !retry {
        return Ok(trace);
    }
    log::warn!(
        "unscented update failed at step {:?} with kappa {}; rerunning with kappa 0",
        trace.failed_at,
        opts.ukf_kappa
    );
    let fallback = MomentRule::unscented(0.0)?;
    let mut trace = run_with_rule(init, process, measurements, noise, model, &fallback, mode, opts)?;
    trace.kappa_fallback = true;
    Ok(trace)
}

/// [`run_filter`] on a simulated bearings-only record.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    truth: &TruthRecord,
    init: &GaussianBelief,
    family: FilterFamily,
    mode: AdaptationMode,
    opts: &FilterOptions,
) -> Result<RunTrace> {
    let process = cfg.process_model(&truth.ownship);
    let noise = KnownNoise { mean: cfg.r_m_true, sigma: &truth.sigma_theta };
    run_filter(init, &process, &truth.measured, &noise, &BearingModel, family, mode, opts)
}
