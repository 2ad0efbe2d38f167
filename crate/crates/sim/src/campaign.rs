//! Seeded Monte Carlo campaigns over scenario × case × filter × mode.
//!
//! Every filter variant in a scenario/case cell sees the same truth and the
//! same initial belief for a given run index. Runs execute on the rayon pool;
//! results are collected in run order, so outputs do not depend on the
//! number of workers.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vbtrack_core::metrics::{EnsembleResult, RunErrors};
use vbtrack_core::pipeline::{run_scenario, AdaptationMode, FilterFamily, FilterOptions, RunTrace};
use vbtrack_core::scenario::{initial_belief, simulate_truth, CaseKind, ScenarioConfig, TruthRecord};
use vbtrack_core::Vector4;

use crate::config::{case_number, Config};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunMatrix {
    /// Scenario name and its resolved config file.
    pub scenarios: Vec<Config>,
    pub cases: Vec<CaseKind>,
    pub filters: Vec<FilterFamily>,
    pub modes: Vec<AdaptationMode>,
    pub runs: usize,
    pub metric_runs: usize,
    pub base_seed: u64,
    pub options: FilterOptions,
    pub track_loss_bound: f64,
    /// Run index whose per-step records are kept in full, if any.
    pub trace_run: Option<usize>,
}

impl RunMatrix {
    /// Matrix described by the `[campaign]` and `[filter]` sections of the
    /// first config; the others only contribute their scenario.
    pub fn from_configs(scenarios: Vec<Config>) -> Result<Self> {
        let first = scenarios.first().ok_or_else(|| Error::Config("no scenario selected".into()))?;
        let m = Self {
            cases: first.cases()?,
            filters: first.filters()?,
            modes: first.modes()?,
            runs: first.campaign.runs,
            metric_runs: first.campaign.metric_runs,
            base_seed: first.campaign.seed,
            options: first.filter_options()?,
            track_loss_bound: first.campaign.track_loss_bound,
            trace_run: None,
            scenarios,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.cases.is_empty() || self.filters.is_empty() || self.modes.is_empty() {
            return Err(Error::Config("scenarios, cases, filters and modes must be non-empty".into()));
        }
        if !(self.track_loss_bound > 0.0) {
            return Err(Error::Config("track_loss_bound must be positive".into()));
        }
        Ok(())
    }

    pub fn variants(&self) -> Vec<(FilterFamily, AdaptationMode)> {
        self.modes.iter().flat_map(|m| self.filters.iter().map(move |f| (*f, *m))).collect()
    }

    pub fn metric_runs(&self) -> usize {
        self.metric_runs.min(self.runs)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run` in the cell `(scenario, case)`.
pub fn run_seed(base: u64, scenario: &str, case: CaseKind, run: usize) -> u64 {
    // FNV-1a over the name
    let name = scenario.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let cell = splitmix64(name ^ ((case_number(case) as u64) << 56));
    base ^ splitmix64(cell ^ run as u64)
}

/// Per-step records of one traced run.
#[derive(Debug, Clone)]
pub struct TracedRun {
    pub truth: Vec<Vector4>,
    pub trace: RunTrace,
}

/// One variant's outcome on one run.
#[derive(Debug, Clone)]
struct RunOutcome {
    terminal: f64,
    failed: bool,
    wall_time: f64,
    errors: Option<RunErrors>,
    stats: RunStats,
    traced: Option<TracedRun>,
}

#[derive(Debug, Clone, Default)]
struct RunStats {
    mu_hat: f64,
    r_hat: f64,
    iterations: Vec<u32>,
    nonconverged: u64,
    nonpositive_r: u64,
    kappa_fallback: bool,
    vb_faults: u64,
}

/// Everything recorded for one (filter, mode) in a cell.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub filter: FilterFamily,
    pub mode: AdaptationMode,
    pub ensemble: EnsembleResult,
    /// Seed of every run.
    pub seeds: Vec<u64>,
    /// Terminal noise-mean and variance estimates per run (rad, rad²).
    pub terminal_mu_hat: Vec<f64>,
    pub terminal_r_hat: Vec<f64>,
    /// `iteration_histogram[i]` counts VB steps that took `i` iterations.
    pub iteration_histogram: Vec<u64>,
    /// VB steps that stopped at `max_iter`.
    pub nonconverged_steps: u64,
    /// Steps whose noise variance in use was not strictly positive.
    pub nonpositive_r_steps: u64,
    /// Steps across all runs, excluding the initial record.
    pub total_steps: u64,
    pub kappa_fallbacks: usize,
    pub vb_faults: u64,
    pub traced: Option<TracedRun>,
}

impl VariantResult {
    fn new(filter: FilterFamily, mode: AdaptationMode) -> Self {
        Self {
            filter,
            mode,
            ensemble: EnsembleResult::default(),
            seeds: Vec::new(),
            terminal_mu_hat: Vec::new(),
            terminal_r_hat: Vec::new(),
            iteration_histogram: Vec::new(),
            nonconverged_steps: 0,
            nonpositive_r_steps: 0,
            total_steps: 0,
            kappa_fallbacks: 0,
            vb_faults: 0,
            traced: None,
        }
    }

    fn absorb(&mut self, seed: u64, o: RunOutcome) {
        self.ensemble.push(o.terminal, o.failed, o.wall_time, o.errors);
        self.seeds.push(seed);
        self.terminal_mu_hat.push(o.stats.mu_hat);
        self.terminal_r_hat.push(o.stats.r_hat);
        for &i in &o.stats.iterations {
            let i = i as usize;
            if self.iteration_histogram.len() <= i {
                self.iteration_histogram.resize(i + 1, 0);
            }
            self.iteration_histogram[i] += 1;
        }
        self.nonconverged_steps += o.stats.nonconverged;
        self.nonpositive_r_steps += o.stats.nonpositive_r;
        self.total_steps += o.stats.iterations.len() as u64;
        self.kappa_fallbacks += usize::from(o.stats.kappa_fallback);
        self.vb_faults += o.stats.vb_faults;
        if o.traced.is_some() {
            self.traced = o.traced;
        }
    }

    /// Median fixed-point iteration count over VB steps.
    pub fn median_iterations(&self) -> Option<u32> {
        let total: u64 = self.iteration_histogram.iter().skip(1).sum();
        if total == 0 {
            return None;
        }
        let mut seen = 0;
        for (i, c) in self.iteration_histogram.iter().enumerate().skip(1) {
            seen += c;
            if 2 * seen >= total {
                return Some(i as u32);
            }
        }
        None
    }

    /// Fraction of VB steps that hit `max_iter`.
    pub fn nonconverged_fraction(&self) -> f64 {
        let total: u64 = self.iteration_histogram.iter().skip(1).sum();
        if total == 0 {
            0.0
        } else {
            self.nonconverged_steps as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub scenario: String,
    pub case: CaseKind,
    pub config: ScenarioConfig,
    pub variants: Vec<VariantResult>,
}

impl CellResult {
    pub fn variant(&self, filter: FilterFamily, mode: AdaptationMode) -> Option<&VariantResult> {
        self.variants.iter().find(|v| v.filter == filter && v.mode == mode)
    }
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub matrix: RunMatrix,
    pub cells: Vec<CellResult>,
}

impl CampaignResult {
    pub fn cell(&self, scenario: &str, case: CaseKind) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.scenario == scenario && c.case == case)
    }
}

fn failed_outcome(keep: bool) -> RunOutcome {
    RunOutcome {
        terminal: f64::NAN,
        failed: true,
        wall_time: 0.0,
        errors: keep.then(RunErrors::default),
        stats: RunStats { mu_hat: f64::NAN, r_hat: f64::NAN, ..Default::default() },
        traced: None,
    }
}

fn outcome(
    trace: RunTrace,
    truth: &TruthRecord,
    mode: AdaptationMode,
    wall_time: f64,
    keep: bool,
    traced: bool,
) -> RunOutcome {
    let last = trace.steps.last();
    let mut stats = RunStats {
        mu_hat: last.map_or(f64::NAN, |s| s.mu_hat),
        r_hat: last.map_or(f64::NAN, |s| s.r_hat),
        kappa_fallback: trace.kappa_fallback,
        vb_faults: trace.vb_faults as u64,
        ..Default::default()
    };
    for s in trace.steps.iter().skip(1) {
        if mode.is_vb() && s.iterations > 0 {
            stats.iterations.push(s.iterations);
            stats.nonconverged += u64::from(!s.converged);
        } else {
            stats.iterations.push(0);
        }
        stats.nonpositive_r += u64::from(!(s.r_hat > 0.0));
    }
    RunOutcome {
        terminal: trace.terminal_position_error(&truth.relative),
        failed: trace.failed(),
        wall_time,
        errors: keep.then(|| trace.errors(&truth.relative)),
        traced: traced.then(|| TracedRun { truth: truth.relative.clone(), trace: trace.clone() }),
        stats,
    }
}

fn run_one(
    cfg: &ScenarioConfig,
    seed: u64,
    variants: &[(FilterFamily, AdaptationMode)],
    opts: &FilterOptions,
    keep: bool,
    traced: bool,
) -> Vec<RunOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = simulate_truth(cfg, &mut rng).and_then(|truth| {
        let init = initial_belief(truth.measured[0], cfg, &truth.ownship[0], &mut rng)?;
        Ok((truth, init))
    });
    let Ok((truth, init)) = data else {
        log::warn!("seed {seed}: scenario synthesis failed");
        return variants.iter().map(|_| failed_outcome(keep)).collect();
    };
    variants
        .iter()
        .map(|&(family, mode)| {
            let start = Instant::now();
            let result = run_scenario(cfg, &truth, &init, family, mode, opts);
            let wall = start.elapsed().as_secs_f64();
            match result {
                Ok(trace) => outcome(trace, &truth, mode, wall, keep, traced),
                Err(e) => {
                    log::warn!("seed {seed}: {family} {mode} failed: {e}");
                    failed_outcome(keep)
                }
            }
        })
        .collect()
}

pub fn run_campaign(matrix: &RunMatrix) -> Result<CampaignResult> {
    matrix.validate()?;
    let variants = matrix.variants();
    let mut cells = Vec::new();
    for scenario in &matrix.scenarios {
        for &case in &matrix.cases {
            let cfg = scenario.scenario_config(case)?;
            let name = scenario.scenario.name.as_str();
            let outcomes: Vec<(u64, Vec<RunOutcome>)> = (0..matrix.runs)
                .into_par_iter()
                .map(|i| {
                    let seed = run_seed(matrix.base_seed, name, case, i);
                    let keep = i < matrix.metric_runs();
                    (seed, run_one(&cfg, seed, &variants, &matrix.options, keep, matrix.trace_run == Some(i)))
                })
                .collect();
            let mut results: Vec<VariantResult> = variants.iter().map(|&(f, m)| VariantResult::new(f, m)).collect();
            for (seed, per_variant) in outcomes {
                for (r, o) in results.iter_mut().zip(per_variant) {
                    r.absorb(seed, o);
                }
            }
            cells.push(CellResult { scenario: name.to_string(), case, config: cfg, variants: results });
        }
    }
    Ok(CampaignResult { matrix: matrix.clone(), cells })
}
