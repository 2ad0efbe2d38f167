//! Ownship trajectories, ground-truth target motion and noisy bearings.
//!
//! Units are km, minutes and radians throughout; knots and degrees only
//! appear in the preset constructors and at the config-file boundary.

use alloc::vec::Vec;

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filter::{process_noise, transition_matrix, wrap_angle, GaussianBelief, ProcessModel};
use crate::measurement::bearing;
use crate::moments::{cholesky, MomentRule};
use crate::{Matrix4, Vector4};

pub fn knots_to_km_per_min(v: f64) -> f64 {
    v * 1.852 / 60.0
}

pub fn deg(v: f64) -> f64 {
    v.to_radians()
}

/// Measurement-noise standard deviation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseCase {
    /// Constant `sigma` (rad) at every step.
    Static { sigma: f64 },
    /// Affine in the target range, from `sigma_min` at `d_min` to
    /// `sigma_max` at `d_max`; clamped outside that interval.
    Varying { sigma_min: f64, sigma_max: f64, d_min: f64, d_max: f64 },
}

/// Which of the two bundled geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    One,
    Two,
}

/// Static (case 1) or range-dependent (case 2) bearing noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    Static,
    Varying,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    /// km
    pub initial_range: f64,
    /// Bearing of the target from the ownship at `k = 0` (rad).
    pub initial_bearing: f64,
    /// km/min
    pub target_speed: f64,
    pub target_course: f64,
    pub ownship_speed: f64,
    pub ownship_initial_course: f64,
    pub ownship_final_course: f64,
    /// min
    pub maneuver_start: f64,
    pub maneuver_end: f64,
    pub sigma_r: f64,
    pub sigma_s: f64,
    pub sigma_c: f64,
    /// True measurement-noise mean (rad).
    pub r_m_true: f64,
    pub noise_case: NoiseCase,
    /// Process-noise intensity (km²/min³).
    pub q_bar: f64,
    /// Sample time in seconds; kept in seconds so `k·Δ` is exact.
    pub sample_time_s: f64,
    /// min
    pub total_time: f64,
}

impl ScenarioConfig {
    /// Moderately nonlinear geometry with a constant-rate ownship turn.
    pub fn scenario1(case: CaseKind) -> Self {
        let mut cfg = Self {
            initial_range: 5.0,
            initial_bearing: deg(45.0),
            target_speed: knots_to_km_per_min(4.0),
            target_course: deg(-140.0),
            ownship_speed: knots_to_km_per_min(5.0),
            ownship_initial_course: deg(140.0),
            ownship_final_course: deg(20.0),
            maneuver_start: 13.0,
            maneuver_end: 17.0,
            sigma_r: 2.0,
            sigma_s: knots_to_km_per_min(2.0),
            sigma_c: core::f64::consts::PI / libm::sqrt(12.0),
            r_m_true: deg(0.1),
            noise_case: NoiseCase::Static { sigma: deg(1.5) },
            q_bar: 1.944e-6,
            sample_time_s: 5.0,
            total_time: 30.0,
        };
        if case == CaseKind::Varying {
            cfg = cfg.with_varying_noise(deg(1.5), deg(4.0));
        }
        cfg
    }

    /// Highly nonlinear geometry with an instantaneous ownship course change.
    pub fn scenario2(case: CaseKind) -> Self {
        let mut cfg = Self {
            initial_range: 10.0,
            target_speed: knots_to_km_per_min(15.0),
            target_course: deg(-135.4),
            ownship_initial_course: deg(-80.0),
            ownship_final_course: deg(146.0),
            maneuver_start: 15.0,
            maneuver_end: 15.0,
            sigma_r: 4.0,
            noise_case: NoiseCase::Static { sigma: deg(2.0) },
            ..Self::scenario1(CaseKind::Static)
        };
        if case == CaseKind::Varying {
            cfg = cfg.with_varying_noise(deg(1.5), deg(4.0));
        }
        cfg
    }

    pub fn preset(scenario: Scenario, case: CaseKind) -> Self {
        match scenario {
            Scenario::One => Self::scenario1(case),
            Scenario::Two => Self::scenario2(case),
        }
    }

    /// Switches to range-dependent noise, taking `d_min`/`d_max` from the
    /// noise-free geometry.
    pub fn with_varying_noise(mut self, sigma_min: f64, sigma_max: f64) -> Self {
        let (d_min, d_max) = self.range_extremes();
        self.noise_case = NoiseCase::Varying { sigma_min, sigma_max, d_min, d_max };
        self
    }

    /// Minimum and maximum target range along the noise-free trajectory.
    pub fn range_extremes(&self) -> (f64, f64) {
        let noise_free = Self { q_bar: 0.0, ..*self };
        let Ok(ownship) = build_ownship_trajectory(&noise_free) else {
            return (self.initial_range, self.initial_range);
        };
        let f = transition_matrix(self.delta());
        let mut target = noise_free.target_initial(&ownship[0]);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (k, own) in ownship.iter().enumerate() {
            if k > 0 {
                target = f * target;
            }
            let rel = target - own.to_vector();
            let d = libm::hypot(rel[0], rel[1]);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.initial_range, "initial range must be positive"),
            (self.sample_time_s, "sample time must be positive"),
            (self.total_time, "total time must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(msg));
            }
        }
        let nonnegative = [
            (self.target_speed, "target speed must be nonnegative"),
            (self.ownship_speed, "ownship speed must be nonnegative"),
            (self.sigma_r, "range deviation must be nonnegative"),
            (self.sigma_s, "speed deviation must be nonnegative"),
            (self.sigma_c, "course deviation must be nonnegative"),
            (self.q_bar, "process intensity must be nonnegative"),
        ];
        for (v, msg) in nonnegative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(msg));
            }
        }
        if self.maneuver_end < self.maneuver_start {
            return Err(Error::InvalidConfig("maneuver ends before it starts"));
        }
        if self.maneuver_start < 0.0 || self.maneuver_end > self.total_time {
            return Err(Error::InvalidConfig("maneuver window outside the run"));
        }
        match self.noise_case {
            NoiseCase::Static { sigma } if !(sigma >= 0.0) => {
                Err(Error::InvalidConfig("bearing deviation must be nonnegative"))
            }
            NoiseCase::Varying { sigma_min, sigma_max, d_min, d_max }
                if !(sigma_max > sigma_min) || !(d_max > d_min) || sigma_min < 0.0 =>
            {
                Err(Error::InvalidConfig("varying noise needs sigma_max > sigma_min and d_max > d_min"))
            }
            _ => Ok(()),
        }
    }

    /// Sample time in minutes.
    pub fn delta(&self) -> f64 {
        self.sample_time_s / 60.0
    }

    /// Number of filter steps; the record holds `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        libm::round(self.total_time * 60.0 / self.sample_time_s) as usize
    }

    /// Elapsed minutes at step `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        k as f64 * self.sample_time_s / 60.0
    }

    fn course_at(&self, t: f64) -> f64 {
        if t >= self.maneuver_end {
            self.ownship_final_course
        } else if t <= self.maneuver_start {
            self.ownship_initial_course
        } else {
            let turn = wrap_angle(self.ownship_final_course - self.ownship_initial_course);
            let frac = (t - self.maneuver_start) / (self.maneuver_end - self.maneuver_start);
            self.ownship_initial_course + turn * frac
        }
    }

    fn target_initial(&self, ownship0: &PlatformState) -> Vector4 {
        Vector4::new(
            ownship0.x + self.initial_range * libm::sin(self.initial_bearing),
            ownship0.y + self.initial_range * libm::cos(self.initial_bearing),
            self.target_speed * libm::sin(self.target_course),
            self.target_speed * libm::cos(self.target_course),
        )
    }

    /// Bearing-noise deviation at step 0 along the nominal geometry.
    pub fn initial_sigma_theta(&self) -> f64 {
        sigma_theta_at(self.initial_range, &self.noise_case)
    }

    pub fn process_model(&self, ownship: &[PlatformState]) -> ProcessModel {
        ProcessModel::new(self.delta(), self.q_bar).with_inputs(ownship_inputs(ownship, self.delta()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlatformState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl PlatformState {
    pub fn to_vector(&self) -> Vector4 {
        Vector4::new(self.x, self.y, self.vx, self.vy)
    }

    pub fn from_vector(v: &Vector4) -> Self {
        Self { x: v[0], y: v[1], vx: v[2], vy: v[3] }
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }
}

/// Ground truth and measurements for one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub target: Vec<PlatformState>,
    pub ownship: Vec<PlatformState>,
    pub relative: Vec<Vector4>,
    pub true_bearing: Vec<f64>,
    pub measured: Vec<f64>,
    pub sigma_theta: Vec<f64>,
}

impl TruthRecord {
    pub fn len(&self) -> usize {
        self.relative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relative.is_empty()
    }
}

/// Ownship states at every step, starting at the origin.
pub fn build_ownship_trajectory(cfg: &ScenarioConfig) -> Result<Vec<PlatformState>> {
    if cfg.maneuver_end < cfg.maneuver_start {
        return Err(Error::InvalidConfig("maneuver ends before it starts"));
    }
    let n = cfg.steps();
    let delta = cfg.delta();
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = PlatformState::default();
    for k in 0..=n {
        let course = cfg.course_at(cfg.time_at(k));
        let vx = cfg.ownship_speed * libm::sin(course);
        let vy = cfg.ownship_speed * libm::cos(course);
        let state = if k == 0 {
            PlatformState { x: 0.0, y: 0.0, vx, vy }
        } else {
            // trapezoidal position integration
            PlatformState {
                x: prev.x + 0.5 * delta * (prev.vx + vx),
                y: prev.y + 0.5 * delta * (prev.vy + vy),
                vx,
                vy,
            }
        };
        out.push(state);
        prev = state;
    }
    Ok(out)
}

/// The input sequence `℧_{k-1,k}` so that ownship `X_k = F X_{k-1} + ℧`.
pub fn ownship_inputs(ownship: &[PlatformState], delta: f64) -> Vec<Vector4> {
    let mut out = Vec::with_capacity(ownship.len());
    out.push(Vector4::zeros());
    for w in ownship.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        out.push(Vector4::new(
            b.x - a.x - delta * a.vx,
            b.y - a.y - delta * a.vy,
            b.vx - a.vx,
            b.vy - a.vy,
        ));
    }
    out
}

pub fn sigma_theta_at(d: f64, case: &NoiseCase) -> f64 {
    match *case {
        NoiseCase::Static { sigma } => sigma,
        NoiseCase::Varying { sigma_min, sigma_max, d_min, d_max } => {
            let d = d.clamp(d_min, d_max);
            ((sigma_max - sigma_min) * d - sigma_max * d_min + sigma_min * d_max) / (d_max - d_min)
        }
    }
}

/// Noisy bearing `wrap(atan2(x, y) + ν)` with `ν ~ N(r_m, σ²)`.
pub fn generate_measurement<R: Rng + ?Sized>(
    rel: &Vector4,
    sigma: f64,
    r_m: f64,
    rng: &mut R,
) -> Result<f64> {
    let theta = bearing(rel)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(wrap_angle(theta + r_m + sigma * z))
}

/// Simulates the target against the (deterministic) ownship trajectory and
/// draws one bearing per step, `k = 0..=steps`.
pub fn simulate_truth<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<TruthRecord> {
    cfg.validate()?;
    let ownship = build_ownship_trajectory(cfg)?;
    let n = ownship.len();
    let f = transition_matrix(cfg.delta());
    let noise_root = if cfg.q_bar > 0.0 {
        Some(cholesky(&process_noise(cfg.delta(), cfg.q_bar))?)
    } else {
        None
    };

    let mut rec = TruthRecord {
        target: Vec::with_capacity(n),
        ownship: Vec::with_capacity(n),
        relative: Vec::with_capacity(n),
        true_bearing: Vec::with_capacity(n),
        measured: Vec::with_capacity(n),
        sigma_theta: Vec::with_capacity(n),
    };
    let mut target = cfg.target_initial(&ownship[0]);
    for (k, own) in ownship.iter().enumerate() {
        if k > 0 {
            target = f * target;
            if let Some(s) = &noise_root {
                let z = Vector4::from_fn(|_, _| rng.sample(StandardNormal));
                target += s * z;
            }
        }
        let rel = target - own.to_vector();
        let sigma = sigma_theta_at(libm::hypot(rel[0], rel[1]), &cfg.noise_case);
        rec.true_bearing.push(bearing(&rel)?);
        rec.measured.push(generate_measurement(&rel, sigma, cfg.r_m_true, rng)?);
        rec.sigma_theta.push(sigma);
        rec.target.push(PlatformState::from_vector(&target));
        rec.ownship.push(*own);
        rec.relative.push(rel);
    }
    Ok(rec)
}

/// Polar prior around the first bearing, mapped to Cartesian relative
/// coordinates with an unscented transform.
///
/// Prior range, speed and course means are drawn around the scenario values
/// with the configured deviations, so each run starts from a different
/// (but unbiased) guess. The covariance is the transform taken at the
/// nominal values, which is the spread of those guesses about the truth;
/// taking it at the drawn values collapses it whenever a draw lands near
/// zero range or speed.
pub fn initial_belief<R: Rng + ?Sized>(
    first_bearing: f64,
    cfg: &ScenarioConfig,
    ownship0: &PlatformState,
    rng: &mut R,
) -> Result<GaussianBelief> {
    let mut range = cfg.initial_range;
    if cfg.sigma_r > 0.0 {
        for _ in 0..64 {
            let z: f64 = rng.sample(StandardNormal);
            range = cfg.initial_range + cfg.sigma_r * z;
            if range > 0.0 {
                break;
            }
        }
        if !(range > 0.0) {
            range = cfg.initial_range;
        }
    }
    let z_s: f64 = rng.sample(StandardNormal);
    let z_c: f64 = rng.sample(StandardNormal);
    let speed = cfg.target_speed + cfg.sigma_s * z_s;
    let course = cfg.target_course + cfg.sigma_c * z_c;
    let drawn = Vector4::new(range, first_bearing, speed, course);
    let nominal = Vector4::new(cfg.initial_range, first_bearing, cfg.target_speed, cfg.target_course);
    let sigmas = Vector4::new(cfg.sigma_r, cfg.initial_sigma_theta(), cfg.sigma_s, cfg.sigma_c);
    let spread = polar_prior(&nominal, &sigmas, ownship0)?;
    Ok(GaussianBelief::new(polar_to_relative(&drawn, ownship0), spread.cov))
}

fn polar_to_relative(p: &Vector4, ownship0: &PlatformState) -> Vector4 {
    Vector4::new(
        p[0] * libm::sin(p[1]),
        p[0] * libm::cos(p[1]),
        p[2] * libm::sin(p[3]) - ownship0.vx,
        p[2] * libm::cos(p[3]) - ownship0.vy,
    )
}

/// Unscented transform of independent `(range, bearing, speed, course)`
/// uncertainties into the relative Cartesian state.
pub fn polar_prior(polar: &Vector4, sigmas: &Vector4, ownship0: &PlatformState) -> Result<GaussianBelief> {
    let to_cartesian = |p: &Vector4| polar_to_relative(p, ownship0);
    let mean = to_cartesian(polar);
    let rule = MomentRule::unscented(1.0)?;
    let scale = Matrix4::from_diagonal(sigmas);
    let mut deviations = Vec::with_capacity(rule.len());
    let mut center = Vector4::zeros();
    for (xi, w) in rule.points().iter().zip(rule.weights()) {
        let d = to_cartesian(&(polar + scale * xi)) - mean;
        center += d * *w;
        deviations.push(d);
    }
    let mut cov = Matrix4::zeros();
    for (d, w) in deviations.iter().zip(rule.weights()) {
        let d = d - center;
        cov += d * d.transpose() * *w;
    }
    cov = (cov + cov.transpose()) * 0.5;
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prior covariance"));
    }
    if cov.iter().any(|&v| v != 0.0) {
        cholesky(&cov)?;
    }
    Ok(GaussianBelief::new(mean + center, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn knots_conversion() {
        assert_eq!(knots_to_km_per_min(0.0), 0.0);
        assert!((knots_to_km_per_min(1.0) - 0.0308667).abs() < 1e-7);
        assert!((knots_to_km_per_min(5.0) - 0.1543333).abs() < 1e-7);
    }

    #[test]
    fn ownship_initial_velocity_and_final_course() {
        let cfg = ScenarioConfig::scenario1(CaseKind::Static);
        let own = build_ownship_trajectory(&cfg).unwrap();
        assert_eq!(own.len(), 361);
        assert!((own[0].vx - 0.09921).abs() < 1e-5);
        assert!((own[0].vy + 0.11822).abs() < 1e-5);
        let last = own.last().unwrap();
        assert_eq!(libm::atan2(last.vx, last.vy), deg(20.0));
        assert_eq!(cfg.course_at(30.0), deg(20.0));
    }

    #[test]
    fn ownship_speed_is_constant_through_the_turn() {
        for cfg in [ScenarioConfig::scenario1(CaseKind::Static), ScenarioConfig::scenario2(CaseKind::Static)] {
            for s in build_ownship_trajectory(&cfg).unwrap() {
                assert!((s.velocity().norm() - cfg.ownship_speed).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scenario_two_turns_at_one_instant() {
        let cfg = ScenarioConfig::scenario2(CaseKind::Static);
        let own = build_ownship_trajectory(&cfg).unwrap();
        let course = |s: &PlatformState| libm::atan2(s.vx, s.vy);
        assert!((course(&own[179]) - deg(-80.0)).abs() < 1e-12);
        assert!((course(&own[180]) - deg(146.0)).abs() < 1e-12);
    }

    #[test]
    fn stationary_ownship_stays_home() {
        let cfg = ScenarioConfig { ownship_speed: 0.0, ..ScenarioConfig::scenario1(CaseKind::Static) };
        assert!(build_ownship_trajectory(&cfg).unwrap().iter().all(|s| s.x == 0.0 && s.y == 0.0));
    }

    #[test]
    fn rejects_reversed_maneuver() {
        let cfg = ScenarioConfig { maneuver_end: 10.0, ..ScenarioConfig::scenario1(CaseKind::Static) };
        assert!(build_ownship_trajectory(&cfg).is_err());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noise_free_truth_is_straight_and_exact() {
        let cfg = ScenarioConfig {
            q_bar: 0.0,
            r_m_true: 0.0,
            noise_case: NoiseCase::Static { sigma: 0.0 },
            ..ScenarioConfig::scenario1(CaseKind::Static)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rec = simulate_truth(&cfg, &mut rng).unwrap();
        assert_eq!(rec.len(), 361);
        let start = rec.target[0];
        for (k, t) in rec.target.iter().enumerate() {
            let tk = cfg.time_at(k);
            assert!((t.x - (start.x + start.vx * tk)).abs() < 1e-12);
            assert!((t.y - (start.y + start.vy * tk)).abs() < 1e-12);
        }
        for k in 0..rec.len() {
            let diff = rec.target[k].to_vector() - rec.ownship[k].to_vector();
            assert!((rec.relative[k] - diff).amax() < 1e-12);
            assert_eq!(rec.measured[k], bearing(&rec.relative[k]).unwrap());
        }
        let r0 = rec.relative[0];
        assert!((libm::hypot(r0[0], r0[1]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn truth_is_reproducible() {
        let cfg = ScenarioConfig::scenario2(CaseKind::Varying);
        let a = simulate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = simulate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relative_state_obeys_process_model() {
        let cfg = ScenarioConfig::scenario1(CaseKind::Static);
        let rec = simulate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let model = cfg.process_model(&rec.ownship);
        let f = model.transition;
        for k in 1..rec.len() {
            let predicted = f * rec.relative[k - 1] - model.input(k);
            let target_noise = rec.target[k].to_vector() - f * rec.target[k - 1].to_vector();
            assert!((rec.relative[k] - (predicted + target_noise)).amax() < 1e-12);
        }
    }

    #[test]
    fn varying_sigma_is_affine_in_range() {
        let case = NoiseCase::Varying { sigma_min: deg(1.5), sigma_max: deg(4.0), d_min: 2.0, d_max: 6.0 };
        assert!((sigma_theta_at(2.0, &case) - deg(1.5)).abs() < 1e-15);
        assert!((sigma_theta_at(6.0, &case) - deg(4.0)).abs() < 1e-15);
        assert!((sigma_theta_at(4.0, &case) - deg(2.75)).abs() < 1e-15);
        assert_eq!(sigma_theta_at(1.0, &case), sigma_theta_at(2.0, &case));
        assert_eq!(sigma_theta_at(9.0, &case), sigma_theta_at(6.0, &case));
        let a = sigma_theta_at(2.5, &case);
        let b = sigma_theta_at(3.5, &case);
        let c = sigma_theta_at(4.5, &case);
        assert!(((b - a) - (c - b)).abs() < 1e-15);
        assert_eq!(sigma_theta_at(100.0, &NoiseCase::Static { sigma: 0.3 }), 0.3);
    }

    #[test]
    fn range_extremes_bracket_initial_range() {
        let cfg = ScenarioConfig::scenario1(CaseKind::Varying);
        let NoiseCase::Varying { d_min, d_max, .. } = cfg.noise_case else { panic!() };
        assert!(d_min < 5.0 && d_max >= 5.0 - 1e-12);
    }

    #[test]
    fn measurement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = generate_measurement(&Vector4::new(1.0, 1.0, 0.0, 0.0), 0.0, 0.0, &mut rng).unwrap();
        assert!((m - deg(45.0)).abs() < 1e-15);
        let m = generate_measurement(&Vector4::new(3.0, 4.0, 0.0, 0.0), 0.0, deg(0.1), &mut rng).unwrap();
        assert!((m - deg(36.869_897_645_844_02 + 0.1)).abs() < 1e-12);
        let m = generate_measurement(&Vector4::new(0.0, -1.0, 0.0, 0.0), 0.0, 0.0, &mut rng).unwrap();
        assert!((m - deg(180.0)).abs() < 1e-15);
        assert!(generate_measurement(&Vector4::zeros(), 0.1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn degenerate_prior_is_deterministic_map() {
        let cfg = ScenarioConfig {
            sigma_r: 0.0,
            sigma_s: 0.0,
            sigma_c: 0.0,
            noise_case: NoiseCase::Static { sigma: 0.0 },
            ..ScenarioConfig::scenario1(CaseKind::Static)
        };
        let own = build_ownship_trajectory(&cfg).unwrap();
        let b = initial_belief(0.3, &cfg, &own[0], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(b.cov, Matrix4::zeros());
        let expected = Vector4::new(
            5.0 * libm::sin(0.3),
            5.0 * libm::cos(0.3),
            cfg.target_speed * libm::sin(cfg.target_course) - own[0].vx,
            cfg.target_speed * libm::cos(cfg.target_course) - own[0].vy,
        );
        assert!((b.mean - expected).amax() < 1e-15);
    }

    #[test]
    fn prior_covariance_is_symmetric_and_spd() {
        let cfg = ScenarioConfig::scenario1(CaseKind::Static);
        let own = build_ownship_trajectory(&cfg).unwrap();
        let b = initial_belief(cfg.initial_bearing, &cfg, &own[0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!((b.cov - b.cov.transpose()).amax(), 0.0);
        assert!(cholesky(&b.cov).is_ok());
    }

    #[test]
    fn prior_position_within_one_sigma_about_two_thirds_of_the_time() {
        let cfg = ScenarioConfig::scenario1(CaseKind::Static);
        let own = build_ownship_trajectory(&cfg).unwrap();
        let truth = cfg.target_initial(&own[0]) - own[0].to_vector();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let hits = (0..1000)
            .filter(|_| {
                let b = initial_belief(cfg.initial_bearing, &cfg, &own[0], &mut rng).unwrap();
                libm::hypot(b.mean[0] - truth[0], b.mean[1] - truth[1]) <= cfg.sigma_r
            })
            .count();
        assert!(hits >= 680, "{hits} of 1000 within one sigma");
    }
}
