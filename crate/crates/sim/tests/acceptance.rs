//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is always
//! printed. Criteria that the current implementation misses are reported
//! as FAIL with the measured values; the process still exits 0 so the
//! report can sit in the regular test run. Regressions in the exact
//! checks (oracles, linear harness) are caught by the asserting tests.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vbtrack::campaign::{run_campaign, CampaignResult, RunMatrix, VariantResult};
use vbtrack::config::Config;
use vbtrack::oracles::{self, OracleResult};
use vbtrack_core::linear::{LinearSample, LinearSetup};
use vbtrack_core::metrics::anees;
use vbtrack_core::pipeline::{run_filter, AdaptationMode, FilterFamily, FilterOptions, KnownNoise, RunTrace};
use vbtrack_core::scenario::CaseKind;
use vbtrack_core::special::normal_quantile;
use vbtrack_core::Vector4;

use AdaptationMode::{MapMle, NonAdaptive, VbTuned};
use FilterFamily::{Ckf, Ekf, Ghf, Ukf};

const BOUND: f64 = 0.2;
const ALL: [FilterFamily; 4] = [Ekf, Ckf, Ukf, Ghf];

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        self.total += 1;
        self.passed += usize::from(pass);
        println!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn campaign(scenarios: &[&str], cases: &[CaseKind], modes: &[AdaptationMode], runs: usize) -> CampaignResult {
    let configs = scenarios.iter().map(|s| Config::resolve(s).unwrap()).collect();
    let mut m = RunMatrix::from_configs(configs).unwrap();
    m.cases = cases.to_vec();
    m.filters = ALL.to_vec();
    m.modes = modes.to_vec();
    m.runs = runs;
    m.metric_runs = 50;
    m.track_loss_bound = BOUND;
    run_campaign(&m).unwrap()
}

fn variant<'a>(r: &'a CampaignResult, scenario: &str, case: CaseKind, f: FilterFamily, m: AdaptationMode) -> &'a VariantResult {
    r.cell(scenario, case).and_then(|c| c.variant(f, m)).unwrap()
}

fn loss(v: &VariantResult) -> f64 {
    v.ensemble.track_loss_pct(BOUND)
}

fn oracle<'a>(all: &'a [OracleResult], name: &str) -> &'a OracleResult {
    all.iter().find(|o| o.name == name).unwrap()
}

fn linear_run(setup: &LinearSetup, s: &LinearSample, mode: AdaptationMode, opts: &FilterOptions) -> RunTrace {
    let sigma = [setup.r.sqrt()];
    let noise = KnownNoise { mean: setup.r_m, sigma: &sigma };
    run_filter(&setup.prior, &setup.process, &s.measurements, &noise, &setup.model, Ckf, mode, opts).unwrap()
}

fn terminal_errors(setup: &LinearSetup, mode: AdaptationMode, opts: &FilterOptions, seed0: u64) -> Vec<Vector4> {
    (0..2000)
        .map(|i| {
            let s = setup.simulate(&mut ChaCha8Rng::seed_from_u64(seed0 + i)).unwrap();
            let t = linear_run(setup, &s, mode, opts);
            t.steps.last().unwrap().belief.mean - s.states.last().unwrap()
        })
        .collect()
}

/// Largest |mean| / (99% half-width) over the four components.
fn worst_bias_ratio(errors: &[Vector4]) -> f64 {
    let n = errors.len() as f64;
    let mean = errors.iter().fold(Vector4::zeros(), |a, e| a + e) / n;
    let z = normal_quantile(0.995);
    (0..4)
        .map(|i| {
            let var = errors.iter().map(|e| (e[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0);
            mean[i].abs() / (z * (var / n).sqrt())
        })
        .fold(0.0, f64::max)
}

fn median_of_histogram(h: &[u64]) -> Option<usize> {
    let total: u64 = h.iter().skip(1).sum();
    let mut seen = 0;
    for (i, c) in h.iter().enumerate().skip(1) {
        seen += c;
        if total > 0 && 2 * seen >= total {
            return Some(i);
        }
    }
    None
}

fn main() {
    let start = Instant::now();
    let mut report = Report { passed: 0, total: 0 };

    let s1c1 = campaign(&["scenario1"], &[CaseKind::Static], &[NonAdaptive, VbTuned, MapMle], 2000);
    let adaptive = campaign(&["scenario1", "scenario2"], &[CaseKind::Static, CaseKind::Varying], &[VbTuned, MapMle], 1000);
    let c1 = |f, m| variant(&s1c1, "scenario1", CaseKind::Static, f, m);

    // 1
    let mut ordered = true;
    let mut parts = Vec::new();
    for f in [Ckf, Ukf, Ghf] {
        let (n, v, m) = (loss(c1(f, NonAdaptive)), loss(c1(f, VbTuned)), loss(c1(f, MapMle)));
        ordered &= n < v && v < m;
        parts.push(format!("{f} {n:.2}/{v:.2}/{m:.2}"));
    }
    let ghf_vb = loss(c1(Ghf, VbTuned));
    let ghf_map = loss(c1(Ghf, MapMle));
    let pass = ordered && (ghf_vb - 7.43).abs() <= 6.0 && ghf_map > 25.0;
    report.line(
        1,
        "S1C1 ordering nonadaptive < vb < mapmle (2000 runs)",
        pass,
        format!("{} %; GHF-VB {ghf_vb:.2} (7.43 ± 6), GHF-MAPMLE {ghf_map:.2} (> 25)", parts.join(", ")),
    );

    // 2
    let base: Vec<f64> = [Ekf, Ckf, Ukf, Ghf].iter().map(|&f| loss(c1(f, NonAdaptive))).collect();
    let pass = base[1..].iter().all(|&l| l <= 5.0) && base[0] >= 3.0 * base[3];
    report.line(
        2,
        "S1C1 nonadaptive baselines",
        pass,
        format!(
            "EKF {:.2} CKF {:.2} UKF {:.2} GHF {:.2} % (sigma-point <= 5, EKF >= 3x GHF)",
            base[0], base[1], base[2], base[3]
        ),
    );

    // 3
    let mut pass = true;
    let mut parts = Vec::new();
    for s in ["scenario1", "scenario2"] {
        for f in ALL {
            let v = loss(variant(&adaptive, s, CaseKind::Varying, f, VbTuned));
            let m = loss(variant(&adaptive, s, CaseKind::Varying, f, MapMle));
            pass &= m - v >= 10.0;
            parts.push(format!("{}{f} {:+.1}", &s[8..], m - v));
        }
    }
    report.line(3, "Case II mapmle - vb gap >= 10 points (1000 runs)", pass, parts.join(", "));

    // 4
    let mut pass = true;
    let mut parts = Vec::new();
    for f in ALL {
        let v = c1(f, VbTuned).ensemble.mean_wall_time();
        let m = c1(f, MapMle).ensemble.mean_wall_time();
        pass &= v > m;
        parts.push(format!("{f} {:.2}/{:.2} ms", v * 1e3, m * 1e3));
    }
    report.line(4, "vb slower than mapmle", pass, parts.join(", "));

    // 5, 6, 11
    let checks = oracles::run_all();
    let conj = oracle(&checks, "NIW conjugacy");
    report.line(
        5,
        "conjugacy oracle",
        conj.pass && conj.seconds < 1.0,
        format!("rel err {:.2e} (< 1e-3), {:.3} s", conj.value, conj.seconds),
    );
    let kal = oracle(&checks, "kalman degeneracy");
    report.line(
        6,
        "Kalman degeneracy oracle",
        kal.pass && kal.seconds < 1.0,
        format!("rel err {:.2e} (< 1e-6), {:.3} s", kal.value, kal.seconds),
    );

    // 7
    let setup = LinearSetup::standard(40);
    let vb = worst_bias_ratio(&terminal_errors(
        &setup,
        AdaptationMode::Vb,
        &FilterOptions { guess_fraction: 1.0, ..Default::default() },
        20_000,
    ));
    let map = worst_bias_ratio(&terminal_errors(&LinearSetup::standard(300), MapMle, &FilterOptions::default(), 30_000));
    report.line(
        7,
        "terminal bias inside 99% CI (2000 runs)",
        vb <= 1.0 && map <= 1.0,
        format!("worst |mean|/half-width: vb {vb:.3}, mapmle {map:.3}"),
    );

    // 8
    let setup = LinearSetup::standard(60);
    let nees: Vec<Vec<f64>> = (0..500)
        .map(|i| {
            let s = setup.simulate(&mut ChaCha8Rng::seed_from_u64(10_000 + i)).unwrap();
            linear_run(&setup, &s, NonAdaptive, &FilterOptions::default()).errors(&s.states).nees
        })
        .collect();
    let mut series = anees(&nees, 4, &vec![false; 500]).unwrap();
    series.lower = 0.9394;
    series.upper = 1.0623;
    let inside = series.fraction_inside();
    report.line(8, "exact Kalman ANEES in [0.9394, 1.0623]", inside >= 0.9, format!("{:.1}% of steps (>= 90%)", 100.0 * inside));

    // 9
    let v = c1(Ghf, VbTuned);
    let deg = std::f64::consts::PI / 180.0;
    let hits = v.terminal_mu_hat[..200]
        .iter()
        .zip(&v.terminal_r_hat[..200])
        .filter(|(&mu, &r)| (mu - 0.1 * deg).abs() <= 0.05 * deg && (r.sqrt() / (1.5 * deg) - 1.0).abs() <= 0.3)
        .count();
    let mu_hits = v.terminal_mu_hat[..200].iter().filter(|&&mu| (mu - 0.1 * deg).abs() <= 0.05 * deg).count();
    let sigma_hits = v.terminal_r_hat[..200].iter().filter(|&&r| (r.sqrt() / (1.5 * deg) - 1.0).abs() <= 0.3).count();
    report.line(
        9,
        "S1C1 GHF-VB terminal noise statistics",
        hits >= 140,
        format!("{hits}/200 joint (>= 140); mean alone {mu_hits}, sigma alone {sigma_hits}"),
    );

    // 10
    let mut hist: Vec<u64> = Vec::new();
    let mut nonconverged = 0;
    let vb_s1 = ALL
        .iter()
        .map(|&f| c1(f, VbTuned))
        .chain(ALL.iter().map(|&f| variant(&adaptive, "scenario1", CaseKind::Varying, f, VbTuned)));
    for v in vb_s1 {
        if hist.len() < v.iteration_histogram.len() {
            hist.resize(v.iteration_histogram.len(), 0);
        }
        for (h, c) in hist.iter_mut().zip(&v.iteration_histogram) {
            *h += c;
        }
        nonconverged += v.nonconverged_steps;
    }
    let steps: u64 = hist.iter().skip(1).sum();
    let median = median_of_histogram(&hist).unwrap_or(0);
    let frac = nonconverged as f64 / steps.max(1) as f64;
    report.line(
        10,
        "fixed-point iterations",
        (3..=10).contains(&median) && frac < 0.01,
        format!("median {median} (in [3, 10]), max_iter hits {:.3}% (< 1%) over {steps} steps", 100.0 * frac),
    );

    // 11
    let rules = oracle(&checks, "moment rule identities");
    let linear = oracle(&checks, "linear surrogate exactness");
    report.line(
        11,
        "moment rule identities and linear exactness",
        rules.pass && linear.pass,
        format!("identities {:.1e} (1e-10), linear {:.1e} (1e-12)", rules.value, linear.value),
    );

    // 12
    let mut bad = 0;
    let mut checked = 0;
    for r in [&s1c1, &adaptive] {
        for cell in &r.cells {
            for v in cell.variants.iter().filter(|v| v.mode != NonAdaptive) {
                bad += v.nonpositive_r_steps;
                checked += v.total_steps;
            }
        }
    }
    report.line(12, "positive noise variance", bad == 0, format!("{bad} violations in {checked} adaptive steps"));

    println!(
        "acceptance: {}/{} PASS in {:.0} s",
        report.passed,
        report.total,
        start.elapsed().as_secs_f64()
    );
}
