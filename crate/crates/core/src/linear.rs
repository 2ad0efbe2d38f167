//! Linear-Gaussian simulator: CV dynamics and a scalar linear measurement
//! with biased noise. Used for the consistency and bias checks, where the
//! exact Kalman filter is the reference.

use alloc::vec::Vec;

use nalgebra::RowVector4;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filter::{GaussianBelief, ProcessModel};
use crate::measurement::{LinearModel, MeasurementModel};
use crate::moments::cholesky;
use crate::{Matrix4, Vector4};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSetup {
    pub process: ProcessModel,
    pub model: LinearModel,
    /// True noise mean.
    pub r_m: f64,
    /// True noise variance.
    pub r: f64,
    /// Distribution of the initial state; also the filter's initial belief.
    pub prior: GaussianBelief,
    /// Number of transitions; records hold `steps + 1` entries.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSample {
    pub states: Vec<Vector4>,
    /// `measurements[0]` is drawn but the filters start from `prior`.
    pub measurements: Vec<f64>,
}

impl LinearSetup {
    /// Slow CV target observed through `x + 0.5 y`, 5 s sampling.
    pub fn standard(steps: usize) -> Self {
        let delta = 5.0 / 60.0;
        Self {
            process: ProcessModel::new(delta, 1e-3),
            model: LinearModel::new(RowVector4::new(1.0, 0.5, 0.0, 0.0)),
            r_m: 0.05,
            r: 0.01,
            prior: GaussianBelief::new(
                Vector4::new(1.0, 2.0, 0.1, -0.05),
                Matrix4::from_diagonal(&Vector4::new(0.25, 0.25, 0.01, 0.01)),
            ),
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r_m.is_finite() {
            return Err(Error::InvalidConfig("noise variance must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("at least one step"));
        }
        Ok(())
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LinearSample> {
        self.validate()?;
        let prior_root = cholesky(&self.prior.cov)?;
        let noise_root = cholesky(&self.process.noise)?;
        let sd = libm::sqrt(self.r);
        let draw = |rng: &mut R| Vector4::from_fn(|_, _| rng.sample(StandardNormal));

        let mut out = LinearSample {
            states: Vec::with_capacity(self.steps + 1),
            measurements: Vec::with_capacity(self.steps + 1),
        };
        let mut x = self.prior.mean + prior_root * draw(rng);
        for k in 0..=self.steps {
            if k > 0 {
                x = self.process.transition * x - self.process.input(k) + noise_root * draw(rng);
            }
            let z: f64 = rng.sample(StandardNormal);
            out.measurements.push(self.model.h(&x)? + self.r_m + sd * z);
            out.states.push(x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_shapes_and_determinism() {
        let setup = LinearSetup::standard(30);
        let a = setup.simulate(&mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = setup.simulate(&mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 31);
        assert_eq!(a.measurements.len(), 31);
    }

    #[test]
    fn measurement_noise_moments() {
        let mut setup = LinearSetup::standard(1);
        setup.prior.cov = Matrix4::identity() * 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let s = setup.simulate(&mut rng).unwrap();
            let e = s.measurements[0] - setup.model.h(&s.states[0]).unwrap();
            sum += e;
            sq += e * e;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean - setup.r_m).abs() < 4.0 * libm::sqrt(setup.r / n as f64));
        assert!((var / setup.r - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_setup() {
        let mut setup = LinearSetup::standard(5);
        setup.r = 0.0;
        assert!(setup.simulate(&mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
