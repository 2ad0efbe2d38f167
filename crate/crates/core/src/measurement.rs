//! Scalar measurement functions of the relative state.

use nalgebra::RowVector4;

use crate::error::{Error, Result};
use crate::filter::wrap_angle;
use crate::Vector4;

pub trait MeasurementModel {
    fn h(&self, x: &Vector4) -> Result<f64>;

    fn jacobian(&self, x: &Vector4) -> Result<RowVector4<f64>>;

    /// Whether measurements live on the circle and differences must wrap.
    fn is_angular(&self) -> bool;

    /// `y - y_hat`, wrapped onto `(-π, π]` for angular measurements.
    fn residual(&self, y: f64, y_hat: f64) -> f64 {
        if self.is_angular() {
            wrap_angle(y - y_hat)
        } else {
            y - y_hat
        }
    }

    fn normalize(&self, y: f64) -> f64 {
        if self.is_angular() {
            wrap_angle(y)
        } else {
            y
        }
    }
}

/// Bearing from true north, clockwise: `atan2(x, y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BearingModel;

pub fn bearing(x: &Vector4) -> Result<f64> {
    if x[0] == 0.0 && x[1] == 0.0 {
        return Err(Error::ZeroRange);
    }
    Ok(libm::atan2(x[0], x[1]))
}

pub fn bearing_jacobian(x: &Vector4) -> Result<RowVector4<f64>> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::ZeroRange);
    }
    Ok(RowVector4::new(x[1] / r2, -x[0] / r2, 0.0, 0.0))
}

impl MeasurementModel for BearingModel {
    fn h(&self, x: &Vector4) -> Result<f64> {
        bearing(x)
    }

    fn jacobian(&self, x: &Vector4) -> Result<RowVector4<f64>> {
        bearing_jacobian(x)
    }

    fn is_angular(&self) -> bool {
        true
    }
}

/// `h(x) = a·x`; used for oracle checks and the linear-Gaussian harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a: RowVector4<f64>,
}

impl LinearModel {
    pub fn new(a: RowVector4<f64>) -> Self {
        Self { a }
    }

    /// Observes the first state component.
    pub fn first_component() -> Self {
        Self::new(RowVector4::new(1.0, 0.0, 0.0, 0.0))
    }
}

impl MeasurementModel for LinearModel {
    fn h(&self, x: &Vector4) -> Result<f64> {
        Ok((self.a * x)[0])
    }

    fn jacobian(&self, _x: &Vector4) -> Result<RowVector4<f64>> {
        Ok(self.a)
    }

    fn is_angular(&self) -> bool {
        false
    }
}
