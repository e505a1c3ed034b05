//! Estimators over raw samples of I.

use serde::{Deserialize, Serialize};

use crate::asymptotics::tail_log_asym;
use crate::error::{Error, Result};
use crate::psi::PsiEvaluator;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: u32,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub p: f64,
    /// Wilson-score 99% half-width.
    pub half_width: f64,
}

/// Sample mean of Iᵏ and its standard error.
pub fn moment(samples: &[f64], order: u32) -> Result<MomentEstimate> {
    if samples.is_empty() {
        return Err(Error::Domain("moment of an empty sample".into()));
    }
    let n = samples.len() as f64;
    let k = order as i32;
    let mean = samples.iter().map(|x| x.powi(k)).sum::<f64>() / n;
    let var = samples.iter().map(|x| (x.powi(k) - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(MomentEstimate { order, mean, std_error: (var / n).sqrt() })
}

/// Wilson-score interval for k successes in n trials: (centre, half-width).
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (centre, half)
}

fn exceedances(samples: &[f64], t: f64) -> usize {
    samples.iter().filter(|&&x| x > t).count()
}

/// Empirical P(I > t) with Wilson 99% half-widths.
pub fn tail_estimate(samples: &[f64], t_list: &[f64]) -> Result<Vec<TailPoint>> {
    if samples.is_empty() {
        return Err(Error::Domain("tail estimate of an empty sample".into()));
    }
    let n = samples.len();
    Ok(t_list
        .iter()
        .map(|&t| {
            let k = exceedances(samples, t);
            TailPoint { t, p: k as f64 / n as f64, half_width: wilson(k, n, Z99).1 }
        })
        .collect())
}

/// Two-sample Kolmogorov–Smirnov statistic and its 1% critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_1pct: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_1pct
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS test needs two non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    // c(0.01) = sqrt(−ln(0.005)/2)
    let c = (-(0.005f64).ln() / 2.0).sqrt();
    Ok(KsResult { statistic: d, critical_1pct: c * ((n + m) / (n * m)).sqrt() })
}

/// ĉ_I fitted over a window of t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CFit {
    pub c_hat: f64,
    pub std_error: f64,
    /// Trend of the residuals in t, as a z-statistic.
    pub slope_z: f64,
    pub exceedances_at_top: usize,
}

/// ln p̂(t) − tail_log_asym(t) averaged over the window. The estimates share
/// exceedances, so Cov(ln p̂ᵢ, ln p̂ⱼ) = (1 − pᵢ)/(n pᵢ) for tᵢ ≤ tⱼ; both the
/// standard error and the trend statistic use that covariance.
pub fn fit_c_i(ev: &PsiEvaluator, samples: &[f64], t_window: &[f64]) -> Result<CFit> {
    fit_constant(samples, t_window, |t| tail_log_asym(ev, t))
}

/// As [`fit_c_i`] against any log-asymptotic expression.
pub fn fit_constant<F: Fn(f64) -> Result<f64>>(samples: &[f64], t_window: &[f64], log_asym: F) -> Result<CFit> {
    if t_window.len() < 2 || t_window.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("t_window needs at least two increasing points".into()));
    }
    if samples.is_empty() {
        return Err(Error::Domain("fit_cI needs samples".into()));
    }
    let n = samples.len() as f64;
    let top = exceedances(samples, *t_window.last().expect("window"));
    if top < 100 {
        return Err(Error::StatisticalPower(format!(
            "only {top} exceedances at t = {}, need at least 100",
            t_window.last().expect("window")
        )));
    }
    let m = t_window.len();
    let mut y = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    for &t in t_window {
        let p = exceedances(samples, t) as f64 / n;
        y.push(p.ln() - log_asym(t)?);
        s.push((1.0 - p) / (n * p));
    }
    let cov = |i: usize, j: usize| s[i.min(j)];
    let mf = m as f64;
    let level = y.iter().sum::<f64>() / mf;
    let mut var_level = 0.0;
    for i in 0..m {
        for j in 0..m {
            var_level += cov(i, j);
        }
    }
    var_level /= mf * mf;
    let tbar = t_window.iter().sum::<f64>() / mf;
    let sxx: f64 = t_window.iter().map(|t| (t - tbar).powi(2)).sum();
    let w: Vec<f64> = t_window.iter().map(|t| (t - tbar) / sxx).collect();
    let slope: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
    let mut var_slope = 0.0;
    for i in 0..m {
        for j in 0..m {
            var_slope += w[i] * w[j] * cov(i, j);
        }
    }
    let c_hat = level.exp();
    Ok(CFit { c_hat, std_error: c_hat * var_level.sqrt(), slope_z: slope / var_slope.sqrt(), exceedances_at_top: top })
}

/// Finite-difference slope of −ln p̂ between t1 < t2 with its 99% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub t1: f64,
    pub t2: f64,
    pub slope: f64,
    pub half_width: f64,
}

pub fn tail_slope(samples: &[f64], t1: f64, t2: f64) -> Result<SlopeEstimate> {
    if !(t1 < t2) {
        return Err(Error::Domain("tail_slope needs t1 < t2".into()));
    }
    let n = samples.len() as f64;
    let (k1, k2) = (exceedances(samples, t1), exceedances(samples, t2));
    if k2 == 0 {
        return Err(Error::StatisticalPower(format!("no exceedances at t = {t2}")));
    }
    let (p1, p2) = (k1 as f64 / n, k2 as f64 / n);
    // Var(ln p̂₂ − ln p̂₁) = s₂ − s₁ for nested exceedance events.
    let var = ((1.0 - p2) / (n * p2) - (1.0 - p1) / (n * p1)).max(0.0);
    let dt = t2 - t1;
    Ok(SlopeEstimate { t1, t2, slope: (p1.ln() - p2.ln()) / dt, half_width: Z99 * var.sqrt() / dt })
}
