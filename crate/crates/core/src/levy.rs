//! Subordinator models: Lévy measure, Laplace exponent and the quantities
//! derived from them.
//!
//! The Laplace exponent φ(x) = ∫(1 − e^{−xv}) π(dv) is evaluated in closed
//! form where one exists and by quadrature otherwise. Integrals against π
//! share one routine ([`LevyModel::pi_integral`]) that splits (0, ∞) at 1,
//! works in log-coordinates on (0, 1] and removes the neighbourhood of zero
//! analytically through the small-jump mean ∫₀^δ v π(dv).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{
    digamma_diff, exp_int_e1, gamma, gamma_p, ln_gamma_ratio, log_gamma, trigamma_diff,
};

const PHI_TOL: f64 = 1e-10;

/// Normalised jump-size law of a compound Poisson subordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { low: f64, high: f64 },
    ShiftedExponential { shift: f64, rate: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Exponential { rate } => rate > 0.0,
            JumpLaw::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
            JumpLaw::Uniform { low, high } => low >= 0.0 && high > low,
            JumpLaw::ShiftedExponential { shift, rate } => shift >= 0.0 && rate > 0.0,
        };
        if ok && self.all_finite() {
            Ok(())
        } else {
            domain(format!("invalid jump law {self:?}"))
        }
    }

    fn all_finite(&self) -> bool {
        match *self {
            JumpLaw::Exponential { rate } => rate.is_finite(),
            JumpLaw::Gamma { shape, rate } => shape.is_finite() && rate.is_finite(),
            JumpLaw::Uniform { low, high } => low.is_finite() && high.is_finite(),
            JumpLaw::ShiftedExponential { shift, rate } => shift.is_finite() && rate.is_finite(),
        }
    }

    pub fn density(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match *self {
            JumpLaw::Exponential { rate } => rate * (-rate * v).exp(),
            JumpLaw::Gamma { shape, rate } => {
                let ln = shape * rate.ln() + (shape - 1.0) * v.ln() - rate * v - log_gamma(shape).unwrap_or(f64::NAN);
                ln.exp()
            }
            JumpLaw::Uniform { low, high } => {
                if v >= low && v <= high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                if v >= shift {
                    rate * (-rate * (v - shift)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// P(J > u).
    pub fn tail(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(1.0);
        }
        Ok(match *self {
            JumpLaw::Exponential { rate } => (-rate * u).exp(),
            JumpLaw::Gamma { shape, rate } => 1.0 - gamma_p(shape, rate * u)?,
            JumpLaw::Uniform { low, high } => ((high - u) / (high - low)).clamp(0.0, 1.0),
            JumpLaw::ShiftedExponential { shift, rate } => {
                if u <= shift {
                    1.0
                } else {
                    (-rate * (u - shift)).exp()
                }
            }
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::Gamma { shape, rate } => shape / rate,
            JumpLaw::Uniform { low, high } => 0.5 * (low + high),
            JumpLaw::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
        }
    }

    /// E[e^{−xJ}].
    pub fn laplace(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            JumpLaw::Exponential { rate } => rate / (rate + x),
            JumpLaw::Gamma { shape, rate } => (-shape * (x / rate).ln_1p()).exp(),
            JumpLaw::Uniform { low, high } => {
                integrate(|v: f64| (-x * v).exp(), low, high, Tolerance::rel(1e-13))?.value / (high - low)
            }
            JumpLaw::ShiftedExponential { shift, rate } => (-x * shift).exp() * rate / (rate + x),
        })
    }

    /// E[1 − e^{−xJ}], free of cancellation at small x.
    pub fn one_minus_laplace(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            JumpLaw::Exponential { rate } => x / (rate + x),
            JumpLaw::Gamma { shape, rate } => -(-shape * (x / rate).ln_1p()).exp_m1(),
            JumpLaw::Uniform { low, high } => {
                integrate(|v: f64| -(-x * v).exp_m1(), low, high, Tolerance::rel(1e-13))?.value / (high - low)
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                -(-x * shift).exp_m1() + (-x * shift).exp() * x / (rate + x)
            }
        })
    }

    /// E[J^k e^{−xJ}] for k = 1, 2.
    pub fn laplace_moment(&self, x: f64, k: i32) -> Result<f64> {
        let kf = k as f64;
        Ok(match *self {
            JumpLaw::Exponential { rate } => {
                let f = if k == 1 { 1.0 } else { 2.0 };
                f * rate / (rate + x).powi(k + 1)
            }
            JumpLaw::Gamma { shape, rate } => {
                let rising = if k == 1 { shape } else { shape * (shape + 1.0) };
                rising * (-shape * (x / rate).ln_1p()).exp() / (rate + x).powf(kf)
            }
            JumpLaw::Uniform { low, high } => {
                integrate(|v: f64| v.powi(k) * (-x * v).exp(), low, high, Tolerance::rel(1e-13))?.value / (high - low)
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                let q = rate / (rate + x);
                let m = 1.0 / (rate + x);
                let e = (-x * shift).exp();
                if k == 1 {
                    e * q * (shift + m)
                } else {
                    e * q * (shift * shift + 2.0 * shift * m + 2.0 * m * m)
                }
            }
        })
    }

    /// E[J; J ≤ eps].
    pub fn partial_mean(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            JumpLaw::Exponential { rate } => gamma_p(2.0, rate * eps)? / rate,
            JumpLaw::Gamma { shape, rate } => shape / rate * gamma_p(shape + 1.0, rate * eps)?,
            JumpLaw::Uniform { low, high } => {
                if eps <= low {
                    0.0
                } else {
                    let top = eps.min(high);
                    (top * top - low * low) / (2.0 * (high - low))
                }
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                if eps <= shift {
                    0.0
                } else {
                    let d = eps - shift;
                    shift * -(-rate * d).exp_m1() + gamma_p(2.0, rate * d)? / rate
                }
            }
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            JumpLaw::Uniform { low, high } => [low, high].into_iter().filter(|&p| p > 0.0).collect(),
            JumpLaw::ShiftedExponential { shift, .. } if shift > 0.0 => vec![shift],
            _ => Vec::new(),
        }
    }

    /// Leading behaviour π(0, u] ≈ Σ cᵢ u^{γᵢ} of the normalised law near 0,
    /// in the form required by the finite-measure power expansion.
    fn lower_expansion(&self) -> Result<Vec<(f64, f64)>> {
        Ok(match *self {
            JumpLaw::Exponential { rate } => vec![(rate, 1.0)],
            JumpLaw::Gamma { shape, rate } => {
                if (shape - 1.0).abs() < 1e-14 {
                    vec![(rate, 1.0)]
                } else if shape < 1.0 {
                    vec![(rate.powf(shape) / gamma(shape + 1.0)?, shape), (0.0, 1.0)]
                } else {
                    vec![(0.0, 1.0)]
                }
            }
            JumpLaw::Uniform { low, high } => {
                if low == 0.0 {
                    vec![(1.0 / high, 1.0)]
                } else {
                    vec![(0.0, 1.0)]
                }
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                if shift == 0.0 {
                    vec![(rate, 1.0)]
                } else {
                    vec![(0.0, 1.0)]
                }
            }
        })
    }
}

/// A drift-free, unkilled subordinator described by its Lévy measure.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyModel {
    /// π(dv) = α/Γ(1−α) v^{−1−α} dv, φ(x) = x^α.
    Stable { alpha: f64 },
    /// π(dv) = v^{−1}e^{−v} dv, φ(x) = ln(1+x).
    GammaSub,
    /// π(dv) = c^{−1} e^{−av} (1 − e^{−v/c})^{b−1} dv.
    Abc { a: f64, b: f64, c: f64 },
    /// Finite Lévy measure `mass × law`. `lower_expansion` lists (cᵢ, γᵢ)
    /// with π(0, u] = Σ cᵢ u^{γᵢ} + o(u^{1+δ}); derived from the law when absent.
    CompoundPoisson { mass: f64, jump: JumpLaw, lower_expansion: Option<Vec<(f64, f64)>> },
    /// π(u, ∞) = e^{−u} Σ cᵢ u^{−γᵢ}: an infinite measure whose tail near 0
    /// has the power expansion c₀u^{−γ₀} + … + c_p u^{−γ_p}, γ_p = γ₀ − 1.
    InfinitePowerTail { coeffs: Vec<(f64, f64)>, remainder_order: f64 },
    /// Scaling limit of the collision count of the Beta(α, β)-coalescent.
    BetaCoalescent { alpha: f64, beta: f64 },
    /// Scaling limit of the absorption time of a walk under a barrier:
    /// the (1/c, −c, c) member of the (a,b,c) family.
    BarrierWalk { c: f64 },
}

/// Sampled diagnostic for the standing hypothesis limsup xφ′/φ < 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HDiagnostic {
    pub max: f64,
    pub at_largest: f64,
}

/// E[Iⁿ] kept in log scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Moment {
    pub order: usize,
    pub ln_value: f64,
}

impl Moment {
    /// The moment itself; `inf` when it does not fit in an f64.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

impl LevyModel {
    pub fn stable(alpha: f64) -> Result<Self> {
        let m = LevyModel::Stable { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn abc(a: f64, b: f64, c: f64) -> Result<Self> {
        let m = LevyModel::Abc { a, b, c };
        m.validate()?;
        Ok(m)
    }

    pub fn compound_poisson(mass: f64, jump: JumpLaw) -> Result<Self> {
        let m = LevyModel::CompoundPoisson { mass, jump, lower_expansion: None };
        m.validate()?;
        Ok(m)
    }

    /// π(du) = e^{−u}du, the model whose functional is Gamma(2, 1) distributed.
    pub fn unit_exponential() -> Self {
        LevyModel::CompoundPoisson { mass: 1.0, jump: JumpLaw::Exponential { rate: 1.0 }, lower_expansion: None }
    }

    pub fn infinite_power_tail(coeffs: Vec<(f64, f64)>, remainder_order: f64) -> Result<Self> {
        let m = LevyModel::InfinitePowerTail { coeffs, remainder_order };
        m.validate()?;
        Ok(m)
    }

    pub fn beta_coalescent(alpha: f64, beta: f64) -> Result<Self> {
        let m = LevyModel::BetaCoalescent { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn barrier_walk(c: f64) -> Result<Self> {
        let m = LevyModel::BarrierWalk { c };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LevyModel::Stable { .. } => "stable",
            LevyModel::GammaSub => "gamma",
            LevyModel::Abc { .. } => "abc",
            LevyModel::CompoundPoisson { .. } => "compound_poisson",
            LevyModel::InfinitePowerTail { .. } => "infinite_power_tail",
            LevyModel::BetaCoalescent { .. } => "beta_coalescent",
            LevyModel::BarrierWalk { .. } => "barrier_walk",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyModel::Stable { alpha } => check(*alpha > 0.0 && *alpha < 1.0, || format!("stable index must lie in (0,1), got {alpha}")),
            LevyModel::GammaSub => Ok(()),
            LevyModel::Abc { a, b, c } => check(
                *a > 0.0 && *b > -1.0 && *b != 0.0 && *c > 0.0 && a.is_finite() && b.is_finite() && c.is_finite(),
                || format!("(a,b,c) needs a > 0, b > -1, b != 0, c > 0; got ({a}, {b}, {c})"),
            ),
            LevyModel::CompoundPoisson { mass, jump, lower_expansion } => {
                check(*mass > 0.0 && mass.is_finite(), || format!("total mass must be positive, got {mass}"))?;
                jump.validate()?;
                if let Some(exp) = lower_expansion {
                    check(!exp.is_empty(), || "lower expansion must not be empty".into())?;
                    let last = exp.last().map(|p| p.1).unwrap_or(0.0);
                    check((last - 1.0).abs() < 1e-12, || format!("last lower-expansion exponent must be 1, got {last}"))?;
                    for w in exp.windows(2) {
                        check(w[0].1 < w[1].1, || "lower-expansion exponents must increase".into())?;
                    }
                    check(exp[0].1 > 0.0, || "lower-expansion exponents must be positive".into())?;
                    check(exp.iter().all(|p| p.0 >= 0.0), || "lower-expansion coefficients must be non-negative".into())?;
                }
                Ok(())
            }
            LevyModel::InfinitePowerTail { coeffs, remainder_order } => validate_power_tail(coeffs, *remainder_order),
            LevyModel::BetaCoalescent { alpha, beta } => check(
                *alpha > 1.0 && *alpha < 2.0 && *beta > 0.0 && beta.is_finite(),
                || format!("Beta-coalescent needs alpha in (1,2), beta > 0; got ({alpha}, {beta})"),
            ),
            LevyModel::BarrierWalk { c } => check(*c > 0.0 && *c < 1.0, || format!("barrier-walk index must lie in (0,1), got {c}")),
        }
    }

    /// (a, b, c, scale) when π is a multiple of an (a,b,c) measure.
    pub fn abc_form(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            LevyModel::Abc { a, b, c } => Some((a, b, c, 1.0)),
            LevyModel::BarrierWalk { c } => Some((1.0 / c, -c, c, 1.0)),
            LevyModel::BetaCoalescent { alpha, beta } => {
                // dv/Γ(α) e^{−βv/(2−α)} (1 − e^{−v/(2−α)})^{α−3}
                let c = 2.0 - alpha;
                let scale = c / gamma(alpha).ok()?;
                Some((beta / c, alpha - 2.0, c, scale))
            }
            _ => None,
        }
    }

    /// |π| when finite.
    pub fn total_mass(&self) -> Option<f64> {
        match self {
            LevyModel::CompoundPoisson { mass, .. } => Some(*mass),
            _ => {
                let (a, b, c, s) = self.abc_form()?;
                if b > 0.0 {
                    Some(s * (gamma(b).ok()? * gamma(a * c).ok()? * crate::special::rgamma(a * c + b)))
                } else {
                    None
                }
            }
        }
    }

    /// Lévy density π(dv)/dv.
    pub fn density(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match self {
            LevyModel::Stable { alpha } => alpha * crate::special::rgamma(1.0 - alpha) * v.powf(-1.0 - alpha),
            LevyModel::GammaSub => (-v).exp() / v,
            LevyModel::CompoundPoisson { mass, jump, .. } => mass * jump.density(v),
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                let s: f64 = coeffs.iter().map(|&(ci, gi)| ci * v.powf(-gi - 1.0) * (gi + v)).sum();
                (-v).exp() * s
            }
            _ => {
                let (a, b, c, s) = self.abc_form().expect("abc family");
                let w = -(-v / c).exp_m1();
                s / c * (-a * v).exp() * w.powf(b - 1.0)
            }
        }
    }

    /// Near-zero behaviour π(dv) ≈ C v^{−1−β} dv, returned as (C, β).
    /// C = 0 when π puts no mass near 0.
    pub fn small_jump_index(&self) -> (f64, f64) {
        match self {
            LevyModel::Stable { alpha } => (alpha * crate::special::rgamma(1.0 - alpha), *alpha),
            LevyModel::GammaSub => (1.0, 0.0),
            LevyModel::CompoundPoisson { mass, jump, .. } => match *jump {
                JumpLaw::Exponential { rate } => (mass * rate, -1.0),
                JumpLaw::Gamma { shape, rate } => {
                    (mass * (shape * rate.ln() - log_gamma(shape).unwrap_or(0.0)).exp(), -shape)
                }
                JumpLaw::Uniform { low, high } if low == 0.0 => (mass / high, -1.0),
                JumpLaw::ShiftedExponential { shift, rate } if shift == 0.0 => (mass * rate, -1.0),
                _ => (0.0, -1.0),
            },
            LevyModel::InfinitePowerTail { coeffs, .. } => (coeffs[0].0 * coeffs[0].1, coeffs[0].1),
            _ => {
                let (_, b, c, s) = self.abc_form().expect("abc family");
                (s * c.powf(-b), -b)
            }
        }
    }

    /// Points where the Lévy density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LevyModel::CompoundPoisson { jump, .. } => jump.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// ∫₀^eps v π(dv).
    pub fn small_jump_mean(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Ok(0.0);
        }
        match self {
            LevyModel::Stable { alpha } => {
                let (cst, _) = self.small_jump_index();
                Ok(cst * eps.powf(1.0 - alpha) / (1.0 - alpha))
            }
            LevyModel::GammaSub => Ok(-(-eps).exp_m1()),
            LevyModel::CompoundPoisson { mass, jump, .. } => Ok(mass * jump.partial_mean(eps)?),
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                // −eps π̄(eps) + ∫₀^eps π̄
                let mut s = 0.0;
                for &(ci, gi) in coeffs {
                    let g1 = 1.0 - gi;
                    s += ci * (gamma(g1)? * gamma_p(g1, eps)? - eps.powf(g1) * (-eps).exp());
                }
                Ok(s)
            }
            _ => {
                let (a, b, c, sc) = self.abc_form().expect("abc family");
                // π ≈ s c^{−b} v^{b−1} (1 − (a + (b−1)/(2c)) v) near 0.
                let d0 = 1e-6 * eps.min(c);
                let k1 = a + (b - 1.0) / (2.0 * c);
                let head = sc * c.powf(-b) * (d0.powf(b + 1.0) / (b + 1.0) - k1 * d0.powf(b + 2.0) / (b + 2.0));
                let body = self.log_segment(|v| v * self.density(v), d0, eps, Tolerance::rel(1e-12).with_abs(0.0))?;
                Ok(head + body)
            }
        }
    }

    /// ∫_lo^hi f(v) dv for 0 < lo < hi, in the variable w = ln(hi/v).
    fn log_segment<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
        let mut cuts: Vec<f64> = self.breakpoints().into_iter().filter(|&p| p > lo && p < hi).collect();
        cuts.insert(0, lo);
        cuts.push(hi);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (l, h) = (w[0], w[1]);
            let g = |t: f64| {
                let v = h * (-t).exp();
                f(v) * v
            };
            total += integrate(g, 0.0, (h / l).ln(), tol)?.value;
        }
        Ok(total)
    }

    /// ∫_lo^∞ f(v) dv, lo ≥ 1 or any lo > 0 with the log split below 1.
    fn upper_segment<F: Fn(f64) -> f64>(&self, f: F, lo: f64, tol: Tolerance) -> Result<f64> {
        if lo < 1.0 {
            return Ok(self.log_segment(&f, lo, 1.0, tol)? + self.upper_segment(f, 1.0, tol)?);
        }
        let cuts: Vec<f64> = self.breakpoints().into_iter().filter(|&p| p > lo).collect();
        let mut total = 0.0;
        let mut start = lo;
        for &p in &cuts {
            total += integrate(&f, start, p, tol)?.value;
            start = p;
        }
        // v = start/u copes with both exponential and power-law decay.
        let g = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let y = f(start / u);
            if y == 0.0 { 0.0 } else { y * start / (u * u) }
        };
        total += integrate(g, 0.0, 1.0, tol)?.value;
        Ok(total)
    }

    /// ∫₀^∞ h(v) π(dv) for h with h(v) ≈ slope0·v near 0. `scale` is the
    /// inverse length on which h varies near zero; it fixes how much of the
    /// neighbourhood of 0 is handled through the small-jump mean.
    pub fn pi_integral<F: Fn(f64) -> f64>(&self, h: F, slope0: f64, scale: f64, tol: Tolerance) -> Result<f64> {
        let delta = 1e-12 / scale.max(1.0);
        let head = if slope0 != 0.0 { slope0 * self.small_jump_mean(delta)? } else { 0.0 };
        let f = |v: f64| {
            let d = self.density(v);
            if d == 0.0 { 0.0 } else { h(v) * d }
        };
        Ok(head + self.upper_segment(f, delta, tol)?)
    }

    /// ∫_{(0, upper]} h(v) π(dv), same conventions as `pi_integral`.
    pub fn pi_integral_head<F: Fn(f64) -> f64>(&self, h: F, slope0: f64, scale: f64, upper: f64, tol: Tolerance) -> Result<f64> {
        let delta = (1e-12 / scale.max(1.0)).min(0.5 * upper);
        let head = if slope0 != 0.0 { slope0 * self.small_jump_mean(delta)? } else { 0.0 };
        let f = |v: f64| {
            let d = self.density(v);
            if d == 0.0 { 0.0 } else { h(v) * d }
        };
        Ok(head + self.log_segment(f, delta, upper, tol)?)
    }

    /// φ(x) by quadrature of ∫(1 − e^{−xv}) π(dv), regardless of closed forms.
    pub fn phi_by_quadrature(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        self.pi_integral(|v| -(-x * v).exp_m1(), x, x, Tolerance::rel(PHI_TOL).with_abs(0.0))
    }

    /// φ^{(k)}(x) by quadrature, k = 1, 2.
    pub fn phi_derivative_by_quadrature(&self, x: f64, order: u8) -> Result<f64> {
        let tol = Tolerance::rel(PHI_TOL).with_abs(0.0);
        match order {
            1 => self.pi_integral(|v| v * (-x * v).exp(), 1.0, x, tol),
            2 => Ok(-self.pi_integral(|v| v * v * (-x * v).exp(), 0.0, x, tol)?),
            _ => domain(format!("derivative order must be 1 or 2, got {order}")),
        }
    }

    /// Laplace exponent φ(x), x ≥ 0.
    pub fn phi(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return domain(format!("phi requires a finite x >= 0, got {x}"));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        match self {
            LevyModel::Stable { alpha } => Ok(x.powf(*alpha)),
            LevyModel::GammaSub => Ok(x.ln_1p()),
            LevyModel::CompoundPoisson { mass, jump, .. } => Ok(mass * jump.one_minus_laplace(x)?),
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                let mut s = 0.0;
                for &(ci, gi) in coeffs {
                    s += ci * gamma(1.0 - gi)? * (-(1.0 - gi) * x.ln_1p()).exp();
                }
                Ok(x * s)
            }
            _ => {
                let (a, b, c, s) = self.abc_form().expect("abc family");
                let gb = gamma(b)?;
                let y0 = a * c;
                let dy = c * x;
                if dy < 1e-6 {
                    let (_, r1, r2) = abc_r(y0, b)?;
                    return Ok(-gb * s * (r1 * dy + 0.5 * r2 * dy * dy));
                }
                let (ra, _, _) = abc_r(y0, b)?;
                let (rx, _, _) = abc_r(y0 + dy, b)?;
                Ok(gb * s * (ra - rx))
            }
        }
    }

    /// φ′ (order 1) or φ″ (order 2) at x > 0.
    pub fn phi_derivative(&self, x: f64, order: u8) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("phi_derivative requires x > 0, got {x}"));
        }
        if order != 1 && order != 2 {
            return domain(format!("derivative order must be 1 or 2, got {order}"));
        }
        let first = order == 1;
        match self {
            LevyModel::Stable { alpha } => {
                if x == 0.0 {
                    return domain("stable phi' is singular at 0");
                }
                Ok(if first { alpha * x.powf(alpha - 1.0) } else { alpha * (alpha - 1.0) * x.powf(alpha - 2.0) })
            }
            LevyModel::GammaSub => Ok(if first { 1.0 / (1.0 + x) } else { -1.0 / ((1.0 + x) * (1.0 + x)) }),
            LevyModel::CompoundPoisson { mass, jump, .. } => {
                let m = jump.laplace_moment(x, order as i32)?;
                Ok(if first { mass * m } else { -mass * m })
            }
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                // d/dx [x (1+x)^s] = (1+x)^s + s x (1+x)^{s−1}
                let mut acc = 0.0;
                for &(ci, gi) in coeffs {
                    let s = gi - 1.0;
                    let w = ci * gamma(1.0 - gi)?;
                    let p = (1.0 + x).powf(s - 1.0);
                    acc += w * if first {
                        p * (1.0 + x + s * x)
                    } else {
                        s * p * (2.0 + (s - 1.0) * x / (1.0 + x))
                    };
                }
                Ok(acc)
            }
            _ => {
                let (a, b, c, s) = self.abc_form().expect("abc family");
                let gb = gamma(b)?;
                let (_, r1, r2) = abc_r(c * (x + a), b)?;
                Ok(if first { -gb * s * c * r1 } else { -gb * s * c * c * r2 })
            }
        }
    }

    /// π(u, ∞).
    pub fn pi_tail(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return domain(format!("pi_tail requires u > 0, got {u}"));
        }
        match self {
            LevyModel::Stable { alpha } => Ok(u.powf(-alpha) * crate::special::rgamma(1.0 - alpha)),
            LevyModel::GammaSub => exp_int_e1(u),
            LevyModel::CompoundPoisson { mass, jump, .. } => Ok(mass * jump.tail(u)?),
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                Ok((-u).exp() * coeffs.iter().map(|&(ci, gi)| ci * u.powf(-gi)).sum::<f64>())
            }
            _ => self.upper_segment(|v| self.density(v), u, Tolerance::rel(1e-12).with_abs(0.0)),
        }
    }

    /// x_ψ = (∫ v π(dv))^{−1}, zero when the mean jump is infinite.
    pub fn x_psi(&self) -> Result<f64> {
        match self {
            LevyModel::Stable { .. } => Ok(0.0),
            LevyModel::GammaSub => Ok(1.0),
            LevyModel::CompoundPoisson { mass, jump, .. } => Ok(1.0 / (mass * jump.mean())),
            LevyModel::InfinitePowerTail { coeffs, .. } => {
                let mut s = 0.0;
                for &(ci, gi) in coeffs {
                    s += ci * gamma(1.0 - gi)?;
                }
                Ok(1.0 / s)
            }
            _ => Ok(1.0 / self.phi_derivative(0.0, 1)?),
        }
    }

    /// Max of xφ′(x)/φ(x) over the grid and its value at the last point.
    pub fn check_h(&self, grid: &[f64]) -> Result<HDiagnostic> {
        if grid.is_empty() {
            return domain("check_H needs a non-empty grid");
        }
        for w in grid.windows(2) {
            check(w[0] < w[1], || "check_H grid must be strictly increasing".into())?;
        }
        check(grid[0] > 0.0, || "check_H grid must be positive".into())?;
        let mut max = f64::NEG_INFINITY;
        let mut last = f64::NAN;
        for &x in grid {
            let r = x * self.phi_derivative(x, 1)? / self.phi(x)?;
            max = max.max(r);
            last = r;
        }
        Ok(HDiagnostic { max, at_largest: last })
    }

    /// E[Iⁿ] = n!/∏ φ(i), n = 1..=n_max, in log scale.
    pub fn exact_moments(&self, n_max: usize) -> Result<Vec<Moment>> {
        if n_max == 0 {
            return domain("exact_moments needs n_max >= 1");
        }
        let mut out = Vec::with_capacity(n_max);
        let mut acc = 0.0;
        for i in 1..=n_max {
            let p = self.phi(i as f64)?;
            check(p > 0.0, || format!("phi({i}) must be positive"))?;
            acc += (i as f64).ln() - p.ln();
            out.push(Moment { order: i, ln_value: acc });
        }
        Ok(out)
    }

    /// The Case-1 lower expansion π(0,u] ≈ Σ cᵢ u^{γᵢ}, if π is finite.
    pub fn lower_expansion(&self) -> Result<Option<Vec<(f64, f64)>>> {
        match self {
            LevyModel::CompoundPoisson { mass, jump, lower_expansion } => match lower_expansion {
                Some(e) => Ok(Some(e.clone())),
                None => Ok(Some(jump.lower_expansion()?.into_iter().map(|(c, g)| (c * mass, g)).collect())),
            },
            _ => Ok(None),
        }
    }

    /// Normalised Laplace transform L(k) = ∫e^{−uk}π(du)/|π| for finite π.
    pub fn normalized_laplace(&self, k: f64) -> Result<f64> {
        match self {
            LevyModel::CompoundPoisson { jump, .. } => jump.laplace(k),
            _ => {
                let m = self
                    .total_mass()
                    .ok_or_else(|| Error::Domain("normalised Laplace transform needs a finite measure".into()))?;
                Ok(1.0 - self.phi(k)? / m)
            }
        }
    }

    /// φ for the process whose jumps below eps are replaced by their mean drift:
    /// φ_eps(x) = x ∫₀^eps v π(dv) + ∫_eps^∞ (1 − e^{−xv}) π(dv) = φ(x) + Δ_eps(x).
    pub fn phi_truncated(&self, x: f64, eps: f64) -> Result<f64> {
        Ok(self.phi(x)? + self.truncation_excess(x, eps)?)
    }

    /// Δ_eps(x) = ∫₀^eps (xv − 1 + e^{−xv}) π(dv) ≥ 0.
    pub fn truncation_excess(&self, x: f64, eps: f64) -> Result<f64> {
        if eps <= 0.0 || x == 0.0 {
            return Ok(0.0);
        }
        let h = |v: f64| {
            let z = x * v;
            if z < 1e-3 {
                z * z * (0.5 - z * (1.0 / 6.0 - z * (1.0 / 24.0 - z / 120.0)))
            } else {
                z + (-z).exp_m1()
            }
        };
        let d0 = 1e-9 * eps;
        let (cst, beta) = self.small_jump_index();
        // ∫₀^{d0} x²v²/2 π(dv) from the leading power.
        let head = if cst > 0.0 { 0.5 * x * x * cst * d0.powf(2.0 - beta) / (2.0 - beta) } else { 0.0 };
        let f = |v: f64| {
            let d = self.density(v);
            if d == 0.0 { 0.0 } else { h(v) * d }
        };
        Ok(head + self.log_segment(f, d0, eps, Tolerance::rel(1e-11).with_abs(0.0))?)
    }
}

/// Returns (R, R′, R″) for R(y) = Γ(y)/Γ(y+b), through R = (y+b)·Γ(y)/Γ(y+b+1)
/// which stays finite for all y > 0 when b > −1.
fn abc_r(y: f64, b: f64) -> Result<(f64, f64, f64)> {
    let r1 = (-ln_gamma_ratio(y, b + 1.0)?).exp();
    let d = digamma_diff(y, b + 1.0)?;
    let t = trigamma_diff(y, b + 1.0)?;
    let r1p = -r1 * d;
    let r1pp = r1 * (d * d - t);
    let yb = y + b;
    Ok((yb * r1, r1 + yb * r1p, 2.0 * r1p + yb * r1pp))
}

fn validate_power_tail(coeffs: &[(f64, f64)], remainder_order: f64) -> Result<()> {
    check(!coeffs.is_empty(), || "power-tail expansion must not be empty".into())?;
    let (c0, g0) = coeffs[0];
    check(g0 > 0.0 && g0 < 1.0, || format!("leading exponent must lie in (0,1), got {g0}"))?;
    let want = crate::special::rgamma(1.0 - g0);
    check(((c0 - want) / want).abs() < 1e-9, || format!("leading coefficient must be 1/Gamma(1-gamma0) = {want}, got {c0}"))?;
    check(remainder_order > 0.0, || format!("remainder order must be positive, got {remainder_order}"))?;
    for w in coeffs.windows(2) {
        check(w[1].1 < w[0].1, || "power-tail exponents must decrease".into())?;
    }
    if coeffs.len() >= 2 {
        let gp = coeffs[coeffs.len() - 1].1;
        check((gp - (g0 - 1.0)).abs() < 1e-12, || format!("last exponent must equal gamma0 - 1 = {}, got {gp}", g0 - 1.0))?;
    }
    let m = LevyModel::InfinitePowerTail { coeffs: coeffs.to_vec(), remainder_order };
    let mut u = 1e-8;
    while u < 60.0 {
        check(m.density(u) >= 0.0, || format!("expansion gives a negative Levy density at u = {u}"))?;
        u *= 1.05;
    }
    Ok(())
}

/// One representative per model family, used by the moment checks.
pub fn catalog() -> Vec<(&'static str, LevyModel)> {
    let g0: f64 = 0.6;
    vec![
        ("stable_0.5", LevyModel::Stable { alpha: 0.5 }),
        ("gamma", LevyModel::GammaSub),
        ("abc_finite", LevyModel::Abc { a: 1.0, b: 0.5, c: 1.0 }),
        ("abc_mittag_leffler", LevyModel::Abc { a: 1.0, b: -0.5, c: 0.5 }),
        ("exponential_jumps", LevyModel::unit_exponential()),
        (
            "power_tail",
            LevyModel::InfinitePowerTail { coeffs: vec![(crate::special::rgamma(1.0 - g0), g0), (0.3, g0 - 1.0)], remainder_order: 0.5 },
        ),
        ("beta_coalescent", LevyModel::BetaCoalescent { alpha: 1.2, beta: 1.0 }),
        ("barrier_walk", LevyModel::BarrierWalk { c: 0.5 }),
    ]
}
