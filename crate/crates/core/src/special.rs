//! Regularized incomplete gamma function and chi-square quantiles.

use crate::error::{Error, Result};

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::InvalidArgument("gamma_p needs a > 0 and x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let log_prefix = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                return Ok((sum * libm::exp(log_prefix)).min(1.0));
            }
        }
    } else {
        // modified Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                return Ok((1.0 - libm::exp(log_prefix) * h).max(0.0));
            }
        }
    }
    Err(Error::NonFinite("incomplete gamma did not converge"))
}

pub fn chi2_cdf(x: f64, dof: f64) -> Result<f64> {
    gamma_p(dof / 2.0, x / 2.0)
}

fn chi2_log_pdf(x: f64, dof: f64) -> f64 {
    let k = dof / 2.0;
    (k - 1.0) * libm::log(x) - x / 2.0 - k * core::f64::consts::LN_2 - libm::lgamma(k)
}

/// Quantile of the chi-square distribution: `x` with `P(χ²_dof ≤ x) = p`.
pub fn chi2_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(dof > 0.0) {
        return Err(Error::InvalidArgument("chi2_quantile needs 0 < p < 1 and dof > 0"));
    }
    // Wilson-Hilferty start, then safeguarded Newton.
    let z = normal_quantile(p);
    let c = 2.0 / (9.0 * dof);
    let mut x = dof * libm::pow((1.0 - c + z * libm::sqrt(c)).max(1e-3), 3.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..200 {
        let f = chi2_cdf(x, dof)? - p;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / libm::exp(chi2_log_pdf(x, dof));
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Standard normal quantile (Acklam's rational approximation, ~1e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let low = 0.024_25;
    if p < low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}
