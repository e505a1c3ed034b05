//! ψ, the inverse of x ↦ x/φ(x) on (x_ψ, ∞), with ψ′, ψ″ and the exponent
//! integral ∫_{x_ψ+1}^t ψ(r)/r dr.

use std::sync::Mutex;

use crate::error::{domain, Error, Result};
use crate::levy::LevyModel;
use crate::quadrature::{integrate, Tolerance};
use crate::roots::newton_bisect;
use crate::special::lambert_w_minus1;

const MAX_DOUBLINGS: usize = 1000;
/// Checkpoints sit at (x_ψ+1)·2^{k/4}.
const CHECKPOINTS_PER_OCTAVE: f64 = 4.0;

/// ψ and its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValues {
    pub x: f64,
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Cached evaluator of ψ for one model.
#[derive(Debug)]
pub struct PsiEvaluator {
    model: LevyModel,
    x_psi: f64,
    root_tolerance: f64,
    closed_forms: bool,
    /// Cumulative exponent integral at the checkpoints, grown on demand.
    integral_cache: Mutex<Vec<f64>>,
}

impl Clone for PsiEvaluator {
    fn clone(&self) -> Self {
        let cache = self.integral_cache.lock().map(|c| c.clone()).unwrap_or_default();
        PsiEvaluator {
            model: self.model.clone(),
            x_psi: self.x_psi,
            root_tolerance: self.root_tolerance,
            closed_forms: self.closed_forms,
            integral_cache: Mutex::new(cache),
        }
    }
}

impl PsiEvaluator {
    /// Evaluator using closed forms where the model has them.
    pub fn new(model: LevyModel) -> Result<Self> {
        Self::build(model, true)
    }

    /// Evaluator that always root-finds ψ and integrates ψ(r)/r numerically.
    pub fn generic(model: LevyModel) -> Result<Self> {
        Self::build(model, false)
    }

    fn build(model: LevyModel, closed_forms: bool) -> Result<Self> {
        model.validate()?;
        let x_psi = model.x_psi()?;
        Ok(PsiEvaluator { model, x_psi, root_tolerance: 1e-12, closed_forms, integral_cache: Mutex::new(vec![0.0]) })
    }

    pub fn with_root_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1e-3) {
            return domain(format!("root tolerance must lie in (0, 1e-3), got {tol}"));
        }
        self.root_tolerance = tol;
        Ok(self)
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn x_psi(&self) -> f64 {
        self.x_psi
    }

    pub fn root_tolerance(&self) -> f64 {
        self.root_tolerance
    }

    /// Lower limit x_ψ + 1 of the exponent integral.
    pub fn integral_origin(&self) -> f64 {
        self.x_psi + 1.0
    }

    fn stable_alpha(&self) -> Option<f64> {
        match (&self.model, self.closed_forms) {
            (LevyModel::Stable { alpha }, true) => Some(*alpha),
            _ => None,
        }
    }

    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x > self.x_psi) || !x.is_finite() {
            return domain(format!("psi requires x > x_psi = {}, got {x}", self.x_psi));
        }
        if let Some(alpha) = self.stable_alpha() {
            return Ok(x.powf(1.0 / (1.0 - alpha)));
        }
        let m = &self.model;
        // g(y) = ln y − ln φ(y) − ln x is increasing with g′ = (1 − yφ′/φ)/y.
        let lnx = x.ln();
        let g = |y: f64| -> Result<f64> { Ok(y.ln() - m.phi(y)?.ln() - lnx) };
        let guess = (x * m.phi(x)?).max(f64::MIN_POSITIVE);
        let (mut lo, mut hi) = (guess, guess);
        let g0 = g(guess)?;
        if g0 == 0.0 {
            return Ok(guess);
        }
        let mut n = 0;
        if g0 < 0.0 {
            while g(hi)? < 0.0 {
                lo = hi;
                hi *= 2.0;
                n += 1;
                if n > MAX_DOUBLINGS || !hi.is_finite() {
                    return Err(Error::NumericFailure { what: "psi bracket expansion".into(), estimate: hi });
                }
            }
        } else {
            while g(lo)? > 0.0 {
                hi = lo;
                lo *= 0.5;
                n += 1;
                if n > MAX_DOUBLINGS || lo == 0.0 {
                    return Err(Error::NumericFailure { what: "psi bracket expansion".into(), estimate: lo });
                }
            }
        }
        let failed = std::cell::Cell::new(None);
        let f = |y: f64| match (m.phi(y), m.phi_derivative(y, 1)) {
            (Ok(p), Ok(d)) => (y.ln() - p.ln() - lnx, (1.0 - y * d / p) / y),
            (Err(e), _) | (_, Err(e)) => {
                failed.set(Some(e.to_string()));
                (f64::NAN, f64::NAN)
            }
        };
        let y = newton_bisect(f, lo, hi, 0.01 * self.root_tolerance, 400)?;
        if let Some(msg) = failed.take() {
            return Err(Error::NumericFailure { what: format!("psi root: {msg}"), estimate: y });
        }
        Ok(y)
    }

    /// ψ, ψ′ and ψ″ at x.
    pub fn values(&self, x: f64) -> Result<PsiValues> {
        let psi = self.psi(x)?;
        if let Some(alpha) = self.stable_alpha() {
            let q = 1.0 / (1.0 - alpha);
            let d1 = q * psi / x;
            return Ok(PsiValues { x, psi, d1, d2: (q - 1.0) * d1 / x });
        }
        let m = &self.model;
        let p = m.phi(psi)?;
        let p1 = m.phi_derivative(psi, 1)?;
        let p2 = m.phi_derivative(psi, 2)?;
        let den = 1.0 - x * p1;
        if den <= 1e-12 {
            return Err(Error::Singularity { what: "psi derivative".into(), value: x * p1 });
        }
        let d1 = p / den;
        let d2 = (2.0 * p1 * d1 + x * p2 * d1 * d1) / den;
        Ok(PsiValues { x, psi, d1, d2 })
    }

    pub fn psi_prime(&self, x: f64) -> Result<f64> {
        Ok(self.values(x)?.d1)
    }

    pub fn psi_second(&self, x: f64) -> Result<f64> {
        Ok(self.values(x)?.d2)
    }

    fn checkpoint(&self, k: usize) -> f64 {
        self.integral_origin() * (k as f64 / CHECKPOINTS_PER_OCTAVE).exp2()
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        let failed = std::cell::Cell::new(None);
        let f = |r: f64| match self.psi(r) {
            Ok(p) => p / r,
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        };
        let est = integrate(f, a, b, Tolerance::rel(1e-12).with_abs(0.0));
        if let Some(e) = failed.take() {
            return Err(e);
        }
        Ok(est?.value)
    }

    /// ∫_{x_ψ+1}^t ψ(r)/r dr.
    pub fn exponent_integral(&self, t: f64) -> Result<f64> {
        let t0 = self.integral_origin();
        if !(t >= t0) || !t.is_finite() {
            return domain(format!("exponent integral requires t >= x_psi + 1 = {t0}, got {t}"));
        }
        if t == t0 {
            return Ok(0.0);
        }
        if let Some(alpha) = self.stable_alpha() {
            // ∫₁^t r^{α/(1−α)} dr
            let q = 1.0 / (1.0 - alpha);
            return Ok((1.0 - alpha) * (t.powf(q) - 1.0));
        }
        let k = ((t / t0).log2() * CHECKPOINTS_PER_OCTAVE).floor() as usize;
        let k = if self.checkpoint(k) > t { k - 1 } else { k };
        let base = {
            let mut cache = self.integral_cache.lock().map_err(|_| Error::Config("psi cache poisoned".into()))?;
            while cache.len() <= k {
                let j = cache.len();
                let next = cache[j - 1] + self.segment(self.checkpoint(j - 1), self.checkpoint(j))?;
                cache.push(next);
            }
            cache[k]
        };
        let tk = self.checkpoint(k);
        Ok(base + if t > tk { self.segment(tk, t)? } else { 0.0 })
    }

    /// Checkpoints (t, integral) computed so far.
    pub fn cached_checkpoints(&self) -> Vec<(f64, f64)> {
        let cache = self.integral_cache.lock().map(|c| c.clone()).unwrap_or_default();
        cache.iter().enumerate().map(|(k, &v)| (self.checkpoint(k), v)).collect()
    }
}

/// ψ of the Gamma subordinator through the lower Lambert branch:
/// ψ(t) = −t W₋₁(−e^{−1/t}/t) − 1.
pub fn gamma_psi_closed(t: f64) -> Result<f64> {
    if !(t > 1.0) || !t.is_finite() {
        return domain(format!("gamma_psi_closed requires t > 1, got {t}"));
    }
    let y = -(-1.0 / t).exp() / t;
    if !(y > -(-1f64).exp() && y < 0.0) {
        return domain(format!("Lambert argument {y} outside (-1/e, 0)"));
    }
    Ok(-t * lambert_w_minus1(y)? - 1.0)
}
