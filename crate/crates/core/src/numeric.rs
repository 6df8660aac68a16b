//! Small numerical kernels shared across modules.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log(sum(exp(xs)))`, shifted by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(sum_s exp(log_w[s] + xs[s]))` for weights given in the log domain.
pub fn weighted_log_sum_exp(log_w: &[f64], xs: &[f64]) -> f64 {
    debug_assert_eq!(log_w.len(), xs.len());
    let m = log_w
        .iter()
        .zip(xs)
        .map(|(w, x)| w + x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = log_w.iter().zip(xs).map(|(w, x)| (w + x - m).exp()).sum();
    m + s.ln()
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - 0.5 * LN_2PI).exp()
}

/// Nodes and weights of the Gauss-Hermite rule for the standard normal
/// weight, i.e. `sum_k w_k g(x_k) ~ E[g(Z)]` with `Z ~ N(0,1)`.
///
/// Newton iteration on the orthonormal Hermite recurrence, seeded with the
/// usual asymptotic guesses for the roots.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Hermite order must be positive");
    let n = order;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Physicists' weight exp(-t^2) -> standard normal: x = sqrt(2) t, w / sqrt(pi).
    let scale = std::f64::consts::SQRT_2;
    let norm = std::f64::consts::PI.sqrt();
    let nodes = x.iter().rev().map(|t| t * scale).collect();
    let weights = w.iter().rev().map(|v| v / norm).collect();
    (nodes, weights)
}

/// Ordinary least squares of `y` on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope propagated from per-point standard errors
    /// of `y` (the points are independent).
    pub slope_se: f64,
    /// Classical residual-based standard error of the slope; NaN with fewer
    /// than three points.
    pub residual_se: f64,
}

pub fn ols(x: &[f64], y: &[f64], y_se: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), y_se.len());
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = x
        .iter()
        .zip(y_se)
        .map(|(xi, s)| ((xi - mx) / sxx * s).powi(2))
        .sum::<f64>()
        .sqrt();
    let residual_se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_se,
        residual_se,
    }
}
