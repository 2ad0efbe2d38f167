//! Deterministic sample-point rules (cubature, unscented, Gauss-Hermite) and
//! first-order linearization for pushing a Gaussian belief through a scalar
//! measurement function.
//!
//! Every rule is stored as unit points `ξ_j` with weights `w_j` that match
//! the first two moments of `N(0, I)`. A belief `N(x̂, P)` maps them to
//! `X_j = S ξ_j + x̂` where `S Sᵀ = P`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::filter::GaussianBelief;
use crate::measurement::MeasurementModel;
use crate::{Matrix4, Vector4, STATE_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    /// First-order Taylor expansion about the mean (EKF).
    Linearized,
    /// Third-degree spherical-radial cubature, `2n` points.
    Cubature,
    /// Symmetric unscented set with center weight `κ/(n+κ)`.
    Unscented { kappa: f64 },
    /// Tensor-product Gauss-Hermite quadrature, `orderⁿ` points.
    GaussHermite { order: usize },
}

/// Unit sample points and weights for `kind` in dimension `n`.
///
/// The linearized kind carries no points and returns two empty vectors.
pub fn unit_points(kind: RuleKind, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1"));
    }
    match kind {
        RuleKind::Linearized => Ok((Vec::new(), Vec::new())),
        RuleKind::Cubature => {
            let scale = libm::sqrt(n as f64);
            let w = 1.0 / (2 * n) as f64;
            let mut points = Vec::with_capacity(2 * n);
            for sign in [1.0, -1.0] {
                for i in 0..n {
                    let mut p = vec![0.0; n];
                    p[i] = sign * scale;
                    points.push(p);
                }
            }
            Ok((points, vec![w; 2 * n]))
        }
        RuleKind::Unscented { kappa } => {
            let spread = n as f64 + kappa;
            if !(spread > 0.0) {
                return Err(Error::InvalidArgument("unscented rule needs n + kappa > 0"));
            }
            let scale = libm::sqrt(spread);
            let mut points = Vec::with_capacity(2 * n + 1);
            let mut weights = Vec::with_capacity(2 * n + 1);
            points.push(vec![0.0; n]);
            weights.push(kappa / spread);
            for sign in [1.0, -1.0] {
                for i in 0..n {
                    let mut p = vec![0.0; n];
                    p[i] = sign * scale;
                    points.push(p);
                    weights.push(0.5 / spread);
                }
            }
            Ok((points, weights))
        }
        RuleKind::GaussHermite { order } => {
            let (nodes, w1) = hermite_1d(order)?;
            let total = order.pow(n as u32);
            let mut points = Vec::with_capacity(total);
            let mut weights = Vec::with_capacity(total);
            let mut idx = vec![0usize; n];
            for _ in 0..total {
                points.push(idx.iter().map(|&i| nodes[i]).collect());
                weights.push(idx.iter().map(|&i| w1[i]).product());
                // odometer increment
                for d in idx.iter_mut() {
                    *d += 1;
                    if *d < order {
                        break;
                    }
                    *d = 0;
                }
            }
            Ok((points, weights))
        }
    }
}

/// Nodes and weights of the `order`-point Gauss-Hermite rule for `N(0, 1)`.
pub fn hermite_1d(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 2 {
        return Err(Error::InvalidArgument("Gauss-Hermite order must be at least 2"));
    }
    // Newton iteration on orthonormal physicists' Hermite polynomials,
    // then rescale from weight exp(-z²) to the standard normal.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let n = order;
    let nf = n as f64;
    let mut z_nodes = vec![0.0; n];
    let mut z_weights = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => libm::sqrt(2.0 * nf + 1.0) - 1.855_75 * libm::pow(2.0 * nf + 1.0, -0.166_67),
            1 => z - 1.14 * libm::pow(nf, 0.426) / z,
            2 => 1.86 * z - 0.86 * z_nodes[0],
            3 => 1.91 * z - 0.91 * z_nodes[1],
            _ => 2.0 * z - z_nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = libm::sqrt(2.0 * nf) * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if libm::fabs(z - z1) <= 1e-15 {
                break;
            }
        }
        z_nodes[i] = z;
        z_nodes[n - 1 - i] = -z;
        z_weights[i] = 2.0 / (pp * pp);
        z_weights[n - 1 - i] = z_weights[i];
    }
    let sqrt_pi = libm::sqrt(core::f64::consts::PI);
    let mut nodes: Vec<f64> = z_nodes.iter().map(|z| z * core::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = z_weights.iter().map(|w| w / sqrt_pi).collect();
    // ascending order, exact zero at the center of odd rules
    nodes.reverse();
    weights.reverse();
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// A sample-point rule (or the linearization marker) for the 4-D state.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRule {
    kind: RuleKind,
    points: Vec<Vector4>,
    weights: Vec<f64>,
}

impl MomentRule {
    pub fn new(kind: RuleKind) -> Result<Self> {
        let (raw, weights) = unit_points(kind, STATE_DIM)?;
        let points = raw.iter().map(|p| Vector4::from_column_slice(p)).collect();
        Ok(Self { kind, points, weights })
    }

    pub fn linearized() -> Self {
        Self { kind: RuleKind::Linearized, points: Vec::new(), weights: Vec::new() }
    }

    pub fn cubature() -> Self {
        Self::new(RuleKind::Cubature).expect("cubature rule is always valid")
    }

    pub fn unscented(kappa: f64) -> Result<Self> {
        Self::new(RuleKind::Unscented { kappa })
    }

    pub fn gauss_hermite(order: usize) -> Result<Self> {
        Self::new(RuleKind::GaussHermite { order })
    }

    /// One rule of each kind with default parameters.
    pub fn all_default() -> Vec<Self> {
        vec![
            Self::linearized(),
            Self::cubature(),
            Self::unscented(3.0 - STATE_DIM as f64).expect("n + kappa = 3"),
            Self::gauss_hermite(3).expect("order 3"),
        ]
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn points(&self) -> &[Vector4] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Moments of `h(X)` for `X ~ N(x̂, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResult {
    /// `E[h(X)]`, normalized onto `(-π, π]` for angular models.
    pub y_hat: f64,
    /// `Σ w_j (Y_j - ŷ)²`: the noise-free part of the innovation variance.
    pub spread: f64,
    /// Cross-covariance between state and measurement.
    pub p_xy: Vector4,
    /// Per-point predictions `Y_j`, unwrapped relative to `h(x̂)`.
    pub points_y: Vec<f64>,
}

/// Lower-triangular `S` with `S Sᵀ = P`.
pub fn cholesky<const N: usize>(p: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let mut l = SMatrix::<f64, N, N>::zeros();
    for j in 0..N {
        let mut d = p[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = djj;
        for i in (j + 1)..N {
            let mut s = p[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn square_root(cov: &Matrix4) -> Result<Matrix4> {
    if cov.iter().all(|&v| v == 0.0) {
        return Ok(Matrix4::zeros());
    }
    cholesky(cov)
}

/// Propagates `belief` through the measurement function with `rule`.
pub fn propagate<M: MeasurementModel>(
    belief: &GaussianBelief,
    rule: &MomentRule,
    model: &M,
) -> Result<MomentResult> {
    let mean = &belief.mean;
    if let RuleKind::Linearized = rule.kind {
        let h = model.jacobian(mean)?;
        let p_xy = belief.cov * h.transpose();
        let spread = (h * p_xy)[0];
        return Ok(MomentResult {
            y_hat: model.normalize(model.h(mean)?),
            spread,
            p_xy,
            points_y: Vec::new(),
        });
    }

    let s = square_root(&belief.cov)?;
    // Deviations from h(x̂) keep angular samples on one branch and make a
    // zero covariance collapse exactly.
    let reference = model.h(mean)?;
    let mut points_y = Vec::with_capacity(rule.len());
    let mut offset = 0.0;
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let x = s * xi + mean;
        let dev = model.residual(model.h(&x)?, reference);
        offset += w * dev;
        points_y.push(dev);
    }
    let y_hat = reference + offset;
    let mut spread = 0.0;
    let mut p_xy = Vector4::zeros();
    for ((xi, w), dev) in rule.points.iter().zip(&rule.weights).zip(points_y.iter_mut()) {
        let dy = *dev - offset;
        *dev += reference;
        spread += w * dy * dy;
        p_xy += (s * xi) * (w * dy);
    }
    if !spread.is_finite() || !y_hat.is_finite() {
        return Err(Error::NonFinite("propagated moments"));
    }
    Ok(MomentResult { y_hat: model.normalize(y_hat), spread, p_xy, points_y })
}
