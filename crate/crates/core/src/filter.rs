//! Nonadaptive Gaussian filter: linear time update and a moment-based
//! measurement update with known noise statistics.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measurement::MeasurementModel;
use crate::moments::{cholesky, propagate, MomentResult, MomentRule};
use crate::{Matrix4, Vector4};

/// Running Gaussian estimate of the relative state `(x, y, vx, vy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector4,
    pub cov: Matrix4,
}

impl GaussianBelief {
    pub fn new(mean: Vector4, cov: Matrix4) -> Self {
        Self { mean, cov }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.cov.iter().all(|v| v.is_finite())
    }

    pub(crate) fn symmetrize(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
    }
}

/// Nearly-constant-velocity model with the ownship input sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    pub transition: Matrix4,
    pub noise: Matrix4,
    /// `inputs[k]` is the ownship correction applied when predicting from
    /// step `k - 1` to step `k`; `inputs[0]` is unused.
    pub inputs: Vec<Vector4>,
}

impl ProcessModel {
    /// Transition and noise matrices for sample time `delta` (min) and
    /// process-noise intensity `q_bar` (km²/min³), with no inputs.
    pub fn new(delta: f64, q_bar: f64) -> Self {
        Self {
            transition: transition_matrix(delta),
            noise: process_noise(delta, q_bar),
            inputs: Vec::new(),
        }
    }

    pub fn with_inputs(mut self, inputs: Vec<Vector4>) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn input(&self, k: usize) -> Vector4 {
        self.inputs.get(k).copied().unwrap_or_else(Vector4::zeros)
    }
}

pub fn transition_matrix(delta: f64) -> Matrix4 {
    Matrix4::new(
        1.0, 0.0, delta, 0.0, //
        0.0, 1.0, 0.0, delta, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

pub fn process_noise(delta: f64, q_bar: f64) -> Matrix4 {
    let d3 = delta * delta * delta / 3.0;
    let d2 = delta * delta / 2.0;
    Matrix4::new(
        d3, 0.0, d2, 0.0, //
        0.0, d3, 0.0, d2, //
        d2, 0.0, delta, 0.0, //
        0.0, d2, 0.0, delta,
    ) * q_bar
}

/// Predicts step `k` from the posterior at `k - 1`.
pub fn time_update(belief: &GaussianBelief, model: &ProcessModel, k: usize) -> GaussianBelief {
    let f = &model.transition;
    let mut out = GaussianBelief {
        mean: f * belief.mean - model.input(k),
        cov: f * belief.cov * f.transpose() + model.noise,
    };
    out.symmetrize();
    out
}

/// Maps an angle onto `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * libm::floor((a + PI) / two_pi);
    // floor puts -π at -π; the half-open convention wants +π.
    if w <= -PI {
        w += two_pi;
    }
    if w > PI {
        w -= two_pi;
    }
    w
}

/// Kalman correction with a scalar measurement given the prior moments.
///
/// `residual` is the (already wrapped) innovation with the noise-mean
/// estimate removed. Fails if the posterior covariance is not positive
/// definite.
pub(crate) fn correct(
    prior: &GaussianBelief,
    moments: &MomentResult,
    residual: f64,
    r: f64,
) -> Result<(GaussianBelief, f64)> {
    let p_yy = moments.spread + r;
    if !(p_yy > 0.0) || !p_yy.is_finite() {
        return Err(Error::NonFinite("innovation variance"));
    }
    let gain = moments.p_xy / p_yy;
    let mut post = GaussianBelief {
        mean: prior.mean + gain * residual,
        cov: prior.cov - gain * gain.transpose() * p_yy,
    };
    post.symmetrize();
    if !post.is_finite() {
        return Err(Error::NonFinite("posterior"));
    }
    cholesky(&post.cov)?;
    Ok((post, p_yy))
}

/// Measurement update when the noise mean `r_m` and variance `r` are known.
pub fn measurement_update_known<M: MeasurementModel>(
    prior: &GaussianBelief,
    y: f64,
    r_m: f64,
    r: f64,
    model: &M,
    rule: &MomentRule,
) -> Result<GaussianBelief> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("measurement variance must be positive"));
    }
    let moments = propagate(prior, rule, model)?;
    let residual = model.residual(y, moments.y_hat + r_m);
    correct(prior, &moments, residual, r).map(|(b, _)| b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{BearingModel, LinearModel};
    use nalgebra::RowVector4;

    fn spd() -> Matrix4 {
        let a = Matrix4::new(
            1.0, 0.2, 0.0, 0.1, //
            0.0, 0.8, 0.3, 0.0, //
            0.1, 0.0, 0.5, 0.05, //
            0.0, 0.1, 0.0, 0.4,
        );
        a * a.transpose() + Matrix4::identity() * 0.01
    }

    #[test]
    fn stationary_time_update() {
        let model = ProcessModel::new(1.0 / 12.0, 0.0);
        let b = GaussianBelief::new(Vector4::new(1.0, 2.0, 0.0, 0.0), spd());
        let out = time_update(&b, &model, 1);
        assert_eq!(out.mean, b.mean);
    }

    #[test]
    fn constant_velocity_step() {
        let model = ProcessModel::new(1.0 / 12.0, 0.0);
        let b = GaussianBelief::new(Vector4::new(1.0, 1.0, 0.1, -0.1), spd());
        let out = time_update(&b, &model, 1);
        assert!((out.mean[0] - (1.0 + 0.1 / 12.0)).abs() < 1e-15);
        assert!((out.mean[1] - (1.0 - 0.1 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn process_noise_grows_trace() {
        let mut model = ProcessModel::new(1.0 / 12.0, 1.944e-6);
        model.transition = Matrix4::identity();
        let b = GaussianBelief::new(Vector4::zeros(), spd());
        let out = time_update(&b, &model, 1);
        assert!(out.cov.trace() > b.cov.trace());
    }

    #[test]
    fn input_is_subtracted() {
        let model = ProcessModel::new(1.0, 0.0)
            .with_inputs(alloc::vec![Vector4::zeros(), Vector4::new(0.5, 0.0, 0.1, 0.0)]);
        let b = GaussianBelief::new(Vector4::zeros(), spd());
        let out = time_update(&b, &model, 1);
        assert_eq!(out.mean, Vector4::new(-0.5, 0.0, -0.1, 0.0));
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(0.1), 0.1);
        assert!((wrap_angle(7.0 * PI) - PI).abs() < 1e-12);
    }

    fn textbook_kalman(prior: &GaussianBelief, a: RowVector4<f64>, y: f64, r: f64) -> GaussianBelief {
        let s = (a * prior.cov * a.transpose())[0] + r;
        let k = prior.cov * a.transpose() / s;
        let innov = y - (a * prior.mean)[0];
        let i_kh = Matrix4::identity() - k * a;
        GaussianBelief {
            mean: prior.mean + k * innov,
            // Joseph form
            cov: i_kh * prior.cov * i_kh.transpose() + k * k.transpose() * r,
        }
    }

    #[test]
    fn linear_update_matches_textbook_kalman() {
        let a = RowVector4::new(0.7, -0.2, 0.3, 0.1);
        let model = LinearModel::new(a);
        let prior = GaussianBelief::new(Vector4::new(0.3, -1.0, 0.2, 0.05), spd());
        let oracle = textbook_kalman(&prior, a, 0.9, 0.04);
        for rule in MomentRule::all_default() {
            let post = measurement_update_known(&prior, 0.9, 0.0, 0.04, &model, &rule).unwrap();
            assert!((post.mean - oracle.mean).amax() < 1e-12, "{rule:?}");
            assert!((post.cov - oracle.cov).amax() < 1e-12, "{rule:?}");
        }
    }

    #[test]
    fn huge_noise_leaves_prior() {
        let prior = GaussianBelief::new(Vector4::new(1.0, 2.0, 0.01, -0.02), spd() * 0.01);
        let post =
            measurement_update_known(&prior, 0.3, 0.0, 1e12, &BearingModel, &MomentRule::cubature())
                .unwrap();
        assert!((post.mean - prior.mean).amax() < 1e-9);
        assert!((post.cov - prior.cov).amax() < 1e-9);
    }

    #[test]
    fn zero_innovation_keeps_mean_and_shrinks_cov() {
        let prior = GaussianBelief::new(Vector4::new(1.0, 2.0, 0.01, -0.02), spd() * 0.01);
        let rule = MomentRule::cubature();
        let m = propagate(&prior, &rule, &BearingModel).unwrap();
        let r_m = 0.001;
        let post =
            measurement_update_known(&prior, m.y_hat + r_m, r_m, 1e-4, &BearingModel, &rule).unwrap();
        assert!((post.mean - prior.mean).amax() < 1e-14);
        assert!(post.cov.trace() < prior.cov.trace());
    }

    #[test]
    fn innovation_wraps() {
        let prior = GaussianBelief::new(Vector4::new(-0.1, -2.0, 0.0, 0.0), spd() * 0.001);
        let rule = MomentRule::gauss_hermite(3).unwrap();
        let a = measurement_update_known(&prior, 3.0, 0.0, 1e-3, &BearingModel, &rule).unwrap();
        let b = measurement_update_known(&prior, 3.0 + 2.0 * PI, 0.0, 1e-3, &BearingModel, &rule)
            .unwrap();
        // 3 + 2π is not exact in floating point
        assert!((a.mean - b.mean).amax() < 1e-12);
        assert!((a.cov - b.cov).amax() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_variance() {
        let prior = GaussianBelief::new(Vector4::new(1.0, 1.0, 0.0, 0.0), spd());
        let r = measurement_update_known(&prior, 0.0, 0.0, 0.0, &BearingModel, &MomentRule::linearized());
        assert!(r.is_err());
    }

    mod props {
        use super::*;
        use nalgebra::SymmetricEigen;
        use proptest::prelude::*;

        fn arb_spd() -> impl Strategy<Value = Matrix4> {
            proptest::collection::vec(-1.0f64..1.0, 16).prop_map(|v| {
                let a = Matrix4::from_iterator(v);
                a * a.transpose() + Matrix4::identity() * 0.05
            })
        }

        proptest! {
            #[test]
            fn update_never_inflates_covariance(
                cov in arb_spd(),
                x in 0.5f64..5.0, y in 0.5f64..5.0,
                meas in -3.0f64..3.0, r in 1e-4f64..1.0,
            ) {
                let prior = GaussianBelief::new(Vector4::new(x, y, 0.01, 0.02), cov * 0.1);
                let rule = MomentRule::cubature();
                let post = measurement_update_known(&prior, meas, 0.0, r, &BearingModel, &rule).unwrap();
                let eig = SymmetricEigen::new(prior.cov - post.cov).eigenvalues;
                prop_assert!(eig.iter().all(|&e| e >= -1e-10));
            }

            #[test]
            fn matches_joseph_form(
                cov in arb_spd(),
                a in proptest::collection::vec(-1.0f64..1.0, 4),
                meas in -3.0f64..3.0, r in 1e-3f64..1.0,
            ) {
                let a = RowVector4::from_iterator(a);
                let prior = GaussianBelief::new(Vector4::new(0.1, 0.2, 0.3, 0.4), cov);
                let joseph = textbook_kalman(&prior, a, meas, r);
                let post = measurement_update_known(&prior, meas, 0.0, r, &LinearModel::new(a), &MomentRule::linearized()).unwrap();
                prop_assert!((post.cov - joseph.cov).amax() < 1e-9);
            }
        }
    }
}
