//! Large-t asymptotics of the tail P(I > t) and the density k(t), in log scale.
//!
//! The general expressions use ψ from [`PsiEvaluator`]; [`closed_form`] gives
//! the explicit power/exponential forms available for the parametric families.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::levy::LevyModel;
use crate::psi::{gamma_psi_closed, PsiEvaluator};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{gamma, rgamma, EULER_GAMMA};

/// ln t + ½ ln ψ′(t) − ln ψ(t) − ∫_{x_ψ+1}^t ψ(r)/r dr, i.e. ln P(I > t) − ln c_I
/// up to a vanishing error.
pub fn tail_log_asym(ev: &PsiEvaluator, t: f64) -> Result<f64> {
    let v = ev.values(t)?;
    Ok(t.ln() + 0.5 * v.d1.ln() - v.psi.ln() - ev.exponent_integral(t)?)
}

/// ½ ln ψ′(t) − ∫_{x_ψ+1}^t ψ(r)/r dr, i.e. ln k(t) − ln c_I.
pub fn density_log_asym(ev: &PsiEvaluator, t: f64) -> Result<f64> {
    let v = ev.values(t)?;
    Ok(0.5 * v.d1.ln() - ev.exponent_integral(t)?)
}

/// Four-term expansion ψ/x + ψ′/ψ − 1/x − ψ″/(2ψ′) of f′ = k/P(I > ·).
pub fn fprime_expansion(ev: &PsiEvaluator, x: f64) -> Result<f64> {
    let v = ev.values(x)?;
    Ok(v.psi / x + v.d1 / v.psi - 1.0 / x - v.d2 / (2.0 * v.d1))
}

/// (1 + a/α) ln(t/ψ(αt)) + ½ ln ψ′(αt) − (1/α) ∫_{x_ψ+1}^{αt} ψ(r)/r dr: the
/// log-moment E[X(t)^a] of the self-similar Markov process driven by ξ, up to
/// an additive constant.
pub fn ssmp_moment_log_asym(ev: &PsiEvaluator, alpha: f64, a: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(a >= 0.0) {
        return domain(format!("ssmp moments need alpha > 0 and a >= 0, got ({alpha}, {a})"));
    }
    let s = alpha * t;
    if !(s > ev.integral_origin()) {
        return domain(format!("ssmp moments need alpha*t > x_psi + 1 = {}, got {s}", ev.integral_origin()));
    }
    let v = ev.values(s)?;
    Ok((1.0 + a / alpha) * (t.ln() - v.psi.ln()) + 0.5 * v.d1.ln() - ev.exponent_integral(s)? / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Tail,
    Density,
}

/// Extra terms that are not powers of t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialTerm {
    /// ∫₂^{st} W₋₁(−e^{−1/r}/r) dr for the Gamma subordinator scaled by s.
    GammaLambert { scale: f64 },
}

/// t^p (ln t)^q exp(Σ cᵢ t^{pᵢ} + special(t)), times an optional constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticForm {
    pub kind: FormKind,
    pub prefactor_exponent: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub log_prefactor_exponent: f64,
    pub exp_terms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special: Option<SpecialTerm>,
    pub constant_known: bool,
    pub constant: Option<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl AsymptoticForm {
    fn new(prefactor_exponent: f64, exp_terms: Vec<(f64, f64)>) -> Self {
        AsymptoticForm {
            kind: FormKind::Tail,
            prefactor_exponent,
            log_prefactor_exponent: 0.0,
            exp_terms,
            special: None,
            constant_known: false,
            constant: None,
        }
    }

    /// Log of the expression with the constant set to 1.
    pub fn log_value(&self, t: f64) -> Result<f64> {
        if !(t > 1.0) {
            return domain(format!("asymptotic forms are evaluated at t > 1, got {t}"));
        }
        let mut s = self.prefactor_exponent * t.ln();
        if self.log_prefactor_exponent != 0.0 {
            s += self.log_prefactor_exponent * t.ln().ln();
        }
        for &(c, p) in &self.exp_terms {
            s += c * t.powf(p);
        }
        if let Some(SpecialTerm::GammaLambert { scale }) = self.special {
            s += gamma_lambert_integral(scale * t)?;
        }
        Ok(s)
    }

    /// Log of the full expression, adding ln(constant) when it is known.
    pub fn log_value_with_constant(&self, t: f64) -> Result<f64> {
        Ok(self.log_value(t)? + self.constant.map(f64::ln).unwrap_or(0.0))
    }

    fn check(&self) -> Result<()> {
        for w in self.exp_terms.windows(2) {
            if !(w[0].1 > w[1].1) {
                return Err(Error::NumericFailure { what: "asymptotic form exponent ordering".into(), estimate: w[1].1 });
            }
        }
        if let Some(&(c, _)) = self.exp_terms.first() {
            if !(c < 0.0) {
                return Err(Error::NumericFailure { what: "asymptotic form leading coefficient".into(), estimate: c });
            }
        }
        if let Some(c) = self.constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NumericFailure { what: "asymptotic form constant".into(), estimate: c });
            }
        }
        Ok(())
    }

    /// Form for the law of I/s, i.e. P(I > st).
    fn scaled(mut self, s: f64) -> Self {
        for term in &mut self.exp_terms {
            term.0 *= s.powf(term.1);
        }
        if let Some(SpecialTerm::GammaLambert { scale }) = self.special {
            self.special = Some(SpecialTerm::GammaLambert { scale: scale * s });
        }
        // t^p(ln st)^q ~ t^p(ln t)^q; constants are absorbed.
        self.constant = None;
        self.constant_known = false;
        self
    }
}

/// ∫₂^t W₋₁(−e^{−1/r}/r) dr, with W₋₁(−e^{−1/r}/r) = −(1 + ψ(r))/r.
pub fn gamma_lambert_integral(t: f64) -> Result<f64> {
    if t == 2.0 {
        return Ok(0.0);
    }
    let failed = std::cell::Cell::new(None);
    let f = |r: f64| match gamma_psi_closed(r) {
        Ok(p) => -(1.0 + p) / r,
        Err(e) => {
            failed.set(Some(e));
            f64::NAN
        }
    };
    let v = integrate(f, 2.0, t, Tolerance::rel(1e-13).with_abs(0.0));
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(v?.value)
}

fn unsupported<T>(what: impl std::fmt::Display) -> Result<T> {
    Err(Error::Unsupported(format!(
        "{what}: exponents in this band add further power terms in or in front of the exponential; no general closed form"
    )))
}

/// Explicit tail equivalent for the parametric families.
pub fn closed_form(model: &LevyModel) -> Result<AsymptoticForm> {
    model.validate()?;
    let form = match model {
        LevyModel::Stable { alpha } => {
            let q = 1.0 - alpha;
            AsymptoticForm::new(-alpha / (2.0 * q), vec![(-q, 1.0 / q)])
        }
        LevyModel::GammaSub => {
            let mut f = AsymptoticForm::new(1.0, Vec::new());
            f.log_prefactor_exponent = -0.5;
            f.special = Some(SpecialTerm::GammaLambert { scale: 1.0 });
            f
        }
        LevyModel::CompoundPoisson { mass, .. } => {
            let exp = model.lower_expansion()?.unwrap_or_default();
            case_one(model, *mass, &exp)?
        }
        LevyModel::InfinitePowerTail { coeffs, .. } => case_two(coeffs)?,
        _ => {
            let (a, b, c, s) = model.abc_form().expect("abc family");
            let f = abc_form(a, b, c)?;
            if s == 1.0 { f } else { f.scaled(s) }
        }
    };
    form.check()?;
    Ok(form)
}

/// The density equivalent: the tail form times ψ(t)/t, whose power part is
/// read off the regular-variation index of ψ.
pub fn closed_form_density(model: &LevyModel) -> Result<AsymptoticForm> {
    let mut f = closed_form(model)?;
    f.kind = FormKind::Density;
    match model {
        LevyModel::Stable { alpha } => f.prefactor_exponent += alpha / (1.0 - alpha),
        LevyModel::GammaSub => f.log_prefactor_exponent += 1.0,
        LevyModel::CompoundPoisson { mass, .. } => f.constant = f.constant.map(|c| c * mass),
        LevyModel::InfinitePowerTail { coeffs, .. } => {
            let g0 = coeffs[0].1;
            f.prefactor_exponent += g0 / (1.0 - g0);
        }
        _ => {
            let (_, b, _, _) = model.abc_form().expect("abc family");
            if b < 0.0 {
                f.prefactor_exponent += -b / (1.0 + b);
            }
        }
    }
    Ok(f)
}

/// Finite π with π(0,u] = Σ cᵢ u^{γᵢ} + O(u^{1+ε}), γ_p = 1. For a probability
/// measure the equivalent is t^{c_p} exp(−t + Σ cᵢΓ(1+γᵢ)/(1−γᵢ) t^{1−γᵢ});
/// mass m rescales time by m and the coefficients by 1/m.
fn case_one(model: &LevyModel, m: f64, exp: &[(f64, f64)]) -> Result<AsymptoticForm> {
    let (cp, _) = *exp.last().ok_or_else(|| Error::Domain("empty lower expansion".into()))?;
    let mut terms = vec![(-m, 1.0)];
    let mut explicit_constant = true;
    for &(ci, gi) in &exp[..exp.len() - 1] {
        if ci == 0.0 {
            continue;
        }
        if gi <= 0.5 {
            return unsupported(format!("lower-expansion exponent {gi} <= 1/2"));
        }
        explicit_constant = false;
        let k = ci / m * gamma(1.0 + gi)? / (1.0 - gi);
        terms.push((k * m.powf(1.0 - gi), 1.0 - gi));
    }
    let mut f = AsymptoticForm::new(cp / m, terms);
    if explicit_constant {
        f.constant = Some(mz_constant(model, cp, 1.0)?);
        f.constant_known = true;
    }
    Ok(f)
}

/// Infinite π with π(u,∞) = e^{−u} Σ cᵢ u^{−γᵢ}. Expanding e^{−u} moves −c₀
/// into the u^{1−γ₀} coefficient.
fn case_two(coeffs: &[(f64, f64)]) -> Result<AsymptoticForm> {
    let (c0, g0) = coeffs[0];
    let q = 1.0 - g0;
    let cp_user = if coeffs.len() >= 2 { coeffs[coeffs.len() - 1].0 } else { 0.0 };
    let cp = cp_user - c0;
    let gp = g0 - 1.0;
    let mut terms = vec![(-q, 1.0 / q)];
    let middle = if coeffs.len() >= 2 { &coeffs[1..coeffs.len() - 1] } else { &coeffs[..0] };
    for &(ci, gi) in middle {
        if ci == 0.0 {
            continue;
        }
        if gi >= g0 - 0.5 {
            return unsupported(format!("upper-expansion exponent {gi} >= gamma0 - 1/2"));
        }
        terms.push((-ci * gamma(1.0 - gi)? / (q + gi), (q + gi) / q));
    }
    let pre = -g0 / (2.0 * q) - cp * gamma(1.0 - gp)? / q;
    Ok(AsymptoticForm::new(pre, terms))
}

/// Explicit equivalents for c⁻¹e^{−ax}(1−e^{−x/c})^{b−1}dx.
fn abc_form(a: f64, b: f64, c: f64) -> Result<AsymptoticForm> {
    let ac = a * c;
    if b > -1.0 && b < -0.5 {
        let gb = gamma(b)?.abs();
        let pre = (b * a + b * (b - 1.0) / (2.0 * c) + b / 2.0) / (1.0 + b);
        let lead = -(1.0 + b) * (gb / c.powf(b)).powf(1.0 / (1.0 + b));
        let lin = gb * gamma(ac)? * rgamma(b + ac) / (1.0 + b);
        let mut terms = vec![(lead, 1.0 / (1.0 + b))];
        if lin != 0.0 {
            terms.push((lin, 1.0));
        }
        Ok(AsymptoticForm::new(pre, terms))
    } else if b > 0.5 && b < 1.0 {
        let mass = gamma(ac)? * gamma(b)? * rgamma(ac + b);
        let second = (1.0 / (mass * c)).powf(b) * gamma(b)? / (1.0 - b);
        Ok(AsymptoticForm::new(0.0, vec![(-mass, 1.0), (second, 1.0 - b)]))
    } else if b == 1.0 {
        Ok(AsymptoticForm::new(a, vec![(-1.0 / ac, 1.0)]))
    } else if b > 1.0 {
        let mass = gamma(ac)? * gamma(b)? * rgamma(ac + b);
        Ok(AsymptoticForm::new(0.0, vec![(-mass, 1.0)]))
    } else {
        unsupported(format!("(a,b,c) with b = {b} in [-1/2, 1/2]"))
    }
}

const MZ_BLOCKS: [usize; 4] = [512, 1024, 2048, 4096];

/// c_I = |π|^{b′} e^{b′γ} (∏_k (1 − L(k)) e^{b′/k})^{−1}, b′ = b/|π|, for finite π
/// with π(0,u] = bu + o(u^{1+δ}); L is the Laplace transform of π/|π|. With this
/// constant P(I > t) ~ c_I t^{b′} e^{−|π|t}.
///
/// The partial log-sums are extrapolated in 1/K.
pub fn mz_constant(model: &LevyModel, b: f64, delta: f64) -> Result<f64> {
    let m = model
        .total_mass()
        .ok_or_else(|| Error::Domain("the product constant needs a finite Levy measure".into()))?;
    if !(b >= 0.0) || !(delta > 0.0) {
        return domain(format!("need b >= 0 and delta > 0, got ({b}, {delta})"));
    }
    let bp = b / m;
    let kmax = *MZ_BLOCKS.last().expect("blocks");
    let mut partial = Vec::with_capacity(MZ_BLOCKS.len());
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 1..=kmax {
        let l = model.normalized_laplace(k as f64)?;
        if !(l < 1.0) {
            return domain(format!("product factor 1 - L({k}) = {} is not positive", 1.0 - l));
        }
        // Kahan summation: the terms are O(k⁻²) and the sum is O(1).
        let term = (-l).ln_1p() + bp / k as f64 - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        if MZ_BLOCKS.contains(&k) {
            partial.push(sum);
        }
    }
    let tail = richardson(&partial);
    Ok((bp * m.ln() + bp * EULER_GAMMA - tail).exp())
}

/// Monte Carlo estimate of c_I = E[exp(|π| e^{−X} I)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MzEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub half_width_99: f64,
    pub n: usize,
    /// Set when the running variance keeps growing or one draw dominates.
    pub warning: Option<String>,
}

/// c_I for finite π with ∫u⁻¹π(du) < ∞ and P(I > t) ~ c_I e^{−|π|t}.
pub fn mz_constant_lighttail(model: &LevyModel, n_samples: usize, seed: u64) -> Result<MzEstimate> {
    if n_samples == 0 {
        return domain("mz_constant_lighttail needs n_samples >= 1");
    }
    if model.total_mass().is_none() {
        return domain(format!("{} has an infinite Levy measure", model.name()));
    }
    let (c0, beta) = model.small_jump_index();
    if c0 > 0.0 && beta >= -1.0 {
        return domain(format!("integral of pi(du)/u diverges for {}", model.name()));
    }
    let terms = crate::monte_carlo::light_tail_terms(model, n_samples, seed)?;
    let mut prefix = Vec::new();
    let (mut mean, mut m2, mut max) = (0.0f64, 0.0f64, 0.0f64);
    let mut next = (n_samples / 16).max(2);
    for (k, &x) in terms.iter().enumerate() {
        // Welford update.
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
        max = max.max(x);
        if k + 1 == next {
            prefix.push(m2 / k as f64);
            next *= 2;
        }
    }
    let n = n_samples as f64;
    let var = if n_samples > 1 { m2 / (n - 1.0) } else { 0.0 };
    prefix.push(var);
    let growing = prefix.len() >= 4 && prefix.windows(2).all(|w| w[1] > 1.2 * w[0]);
    let warning = if !mean.is_finite() || !var.is_finite() {
        Some("non-finite moments: the estimator diverges".to_string())
    } else if growing {
        Some(format!("running variance keeps growing ({:.3e} -> {:.3e}); the estimate is unreliable", prefix[0], var))
    } else if max > 0.1 * mean * n {
        Some("a single draw carries more than 10% of the sum".to_string())
    } else {
        None
    };
    let std_error = (var / n).sqrt();
    Ok(MzEstimate {
        estimate: mean,
        std_error,
        half_width_99: crate::monte_carlo::Z99 * std_error,
        n: n_samples,
        warning,
    })
}

/// Extrapolates S(K) = S + a₁/K + a₂/K² + … from partial sums at doubling K.
fn richardson(s: &[f64]) -> f64 {
    let mut row = s.to_vec();
    let mut p = 1;
    while row.len() > 1 {
        let f = (1u64 << p) as f64;
        row = row.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        p += 1;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;

    #[test]
    fn stable_examples() {
        let ev = PsiEvaluator::new(LevyModel::Stable { alpha: 0.5 }).unwrap();
        let t: f64 = 10.0;
        let want = t.ln() + 0.5 * (2.0 * t).ln() - 2.0 * t.ln() - (t * t - 1.0) / 2.0;
        assert!((tail_log_asym(&ev, t).unwrap() - want).abs() < 1e-9);
        assert!((density_log_asym(&ev, t).unwrap() - (0.5 * 20f64.ln() - 49.5)).abs() < 1e-9);
        assert!((tail_log_asym(&ev, 1.0).unwrap() - (0.5 * 2f64.ln())).abs() < 1e-15);
        for x in [2.0, 5.0, 40.0] {
            assert!((fprime_expansion(&ev, x).unwrap() - (x + 0.5 / x)).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn density_tail_difference() {
        for m in [LevyModel::GammaSub, LevyModel::unit_exponential(), LevyModel::Abc { a: 1.0, b: -0.5, c: 0.5 }] {
            let ev = PsiEvaluator::new(m).unwrap();
            for t in [3.0, 9.0, 27.0] {
                let d = density_log_asym(&ev, t).unwrap() - tail_log_asym(&ev, t).unwrap();
                assert!((d - (ev.psi(t).unwrap() / t).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stable_display_and_regular_variation() {
        for &alpha in &[0.3, 0.5, 0.7] {
            let ev = PsiEvaluator::new(LevyModel::Stable { alpha }).unwrap();
            let form = closed_form(ev.model()).unwrap();
            let dens = closed_form_density(ev.model()).unwrap();
            let ts = [10.0, 20.0, 40.0, 80.0];
            let d0 = tail_log_asym(&ev, ts[0]).unwrap() - form.log_value(ts[0]).unwrap();
            let k0 = density_log_asym(&ev, ts[0]).unwrap() - dens.log_value(ts[0]).unwrap();
            for &t in &ts[1..] {
                let d = tail_log_asym(&ev, t).unwrap() - form.log_value(t).unwrap();
                assert!((d - d0).abs() < 1e-8, "alpha={alpha} t={t}");
                let k = density_log_asym(&ev, t).unwrap() - dens.log_value(t).unwrap();
                assert!((k - k0).abs() < 1e-8);
            }
            // The ψ′ and ψ(t)/t forms of the density prefactor differ by (1−γ)^{−1/2}.
            let t = 30.0;
            let v = ev.values(t).unwrap();
            let ratio = (0.5 * v.d1.ln() - 0.5 * (v.psi / t).ln()).exp();
            assert!((ratio - (1.0 - alpha).powf(-0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_tends_to_psi_over_t() {
        for m in [LevyModel::GammaSub, LevyModel::Abc { a: 1.0, b: 0.7, c: 2.0 }] {
            let ev = PsiEvaluator::new(m).unwrap();
            let mut last = f64::INFINITY;
            for &t in &[1e2, 1e3, 1e4] {
                let h = 1e-3 * t;
                let slope = -(tail_log_asym(&ev, t + h).unwrap() - tail_log_asym(&ev, t - h).unwrap()) / (2.0 * h);
                let target = ev.psi(t).unwrap() / t;
                let r = ((slope - target) / target).abs();
                assert!(r < last && r < 0.05, "t={t}: {r}");
                last = r;
            }
        }
    }

    #[test]
    fn abc_table() {
        let f = closed_form(&LevyModel::Abc { a: 2.0, b: 1.0, c: 0.5 }).unwrap();
        assert_eq!(f.prefactor_exponent, 2.0);
        assert_eq!(f.exp_terms, vec![(-1.0, 1.0)]);
        let f = closed_form(&LevyModel::Abc { a: 1.0, b: 2.5, c: 1.5 }).unwrap();
        let mass = gamma(1.5).unwrap() * gamma(2.5).unwrap() / gamma(4.0).unwrap();
        assert!(f.prefactor_exponent == 0.0 && (f.exp_terms[0].0 + mass).abs() < 1e-14 && f.exp_terms.len() == 1);
        let (b, c) = (-0.7f64, 0.8f64);
        let f = closed_form(&LevyModel::Abc { a: 1.0, b, c }).unwrap();
        let lead = -(1.0 + b) * (gamma(b).unwrap().abs() / c.powf(b)).powf(1.0 / (1.0 + b));
        assert!((f.exp_terms[0].0 - lead).abs() < 1e-14 && f.exp_terms[0].1 == 1.0 / (1.0 + b));
        for b in [-0.5, -0.2, 0.3, 0.5] {
            assert!(matches!(closed_form(&LevyModel::Abc { a: 1.0, b, c: 1.0 }), Err(Error::Unsupported(_))));
        }
    }

    #[test]
    fn abc_forms_track_generic_equivalent() {
        // Differences against the ψ-based expression settle to a constant.
        let models = [
            LevyModel::Abc { a: 1.0, b: -0.7, c: 0.8 },
            LevyModel::Abc { a: 1.0, b: 0.7, c: 2.0 },
            LevyModel::Abc { a: 0.5, b: 1.0, c: 1.0 },
            LevyModel::Abc { a: 1.0, b: 1.5, c: 1.0 },
            LevyModel::BetaCoalescent { alpha: 1.2, beta: 1.0 },
            LevyModel::BarrierWalk { c: 0.7 },
        ];
        for m in models {
            let ev = PsiEvaluator::new(m.clone()).unwrap();
            let f = closed_form(&m).unwrap();
            let d = |t: f64| tail_log_asym(&ev, t).unwrap() - f.log_value(t).unwrap();
            // Keep the leading exponent term below ~1e9 so the difference is not
            // swamped by rounding.
            let (c, p) = f.exp_terms[0];
            let at = |lead: f64| (lead / c.abs()).powf(1.0 / p);
            let ts = if p > 1.0 { [at(1e4), at(1e6), at(1e8)] } else { [1e3, 4e3, 1.6e4] };
            let (d1, d2, d3) = (d(ts[0]), d(ts[1]), d(ts[2]));
            assert!((d3 - d2).abs() < 0.7 * (d2 - d1).abs().max(1e-3), "{m:?}: {d1} {d2} {d3}");
            assert!((d3 - d2).abs() < 0.05, "{m:?}: {d1} {d2} {d3}");
        }
    }

    #[test]
    fn case_one_and_two() {
        let e = closed_form(&LevyModel::unit_exponential()).unwrap();
        assert_eq!(e.prefactor_exponent, 1.0);
        assert_eq!(e.exp_terms, vec![(-1.0, 1.0)]);
        assert!(e.constant_known && (e.constant.unwrap() - 1.0).abs() < 1e-8);
        // P(I > t) = (1+t)e^{−t} exactly for this model.
        for t in [20.0, 60.0] {
            let exact = (1.0 + t as f64).ln() - t;
            assert!((e.log_value_with_constant(t).unwrap() - exact).abs() < 1.1 / t);
        }
        let stable = closed_form(&LevyModel::Stable { alpha: 0.4 }).unwrap();
        let g0 = 0.4;
        let single = closed_form(&LevyModel::InfinitePowerTail { coeffs: vec![(rgamma(1.0 - g0), g0)], remainder_order: 1.0 }).unwrap();
        assert!((single.exp_terms[0].0 - stable.exp_terms[0].0).abs() < 1e-15);
        // Single term: the e^{−u} factor contributes c_p = −c₀ to the prefactor.
        let shift = rgamma(1.0 - g0) * gamma(2.0 - g0).unwrap() / (1.0 - g0);
        assert!((single.prefactor_exponent - (stable.prefactor_exponent + shift)).abs() < 1e-14);
        let cp = LevyModel::CompoundPoisson {
            mass: 1.0,
            jump: JumpLaw::Exponential { rate: 1.0 },
            lower_expansion: Some(vec![(0.3, 0.4), (1.0, 1.0)]),
        };
        assert!(matches!(closed_form(&cp), Err(Error::Unsupported(_))));
    }

    #[test]
    fn power_tail_tracks_generic_equivalent() {
        for (_, m) in crate::levy::catalog() {
            if !matches!(m, LevyModel::InfinitePowerTail { .. }) {
                continue;
            }
            let ev = PsiEvaluator::new(m.clone()).unwrap();
            let f = closed_form(&m).unwrap();
            let d = |t: f64| tail_log_asym(&ev, t).unwrap() - f.log_value(t).unwrap();
            let (d1, d2, d3) = (d(20.0), d(80.0), d(320.0));
            assert!((d3 - d2).abs() < 0.6 * (d2 - d1).abs() && (d3 - d2).abs() < 0.05, "{d1} {d2} {d3}");
        }
    }

    #[test]
    fn gamma_form_tracks_generic_equivalent() {
        let ev = PsiEvaluator::new(LevyModel::GammaSub).unwrap();
        let f = closed_form(&LevyModel::GammaSub).unwrap();
        // The two expressions differ by ½ ln(ψ′ ln t / (ψ/t)²) + const exactly,
        // and that ratio tends to 1 only like ln ln t / ln t.
        let d = |t: f64| {
            let v = ev.values(t).unwrap();
            let gap = 0.5 * (v.d1 * t.ln() / (v.psi / t).powi(2)).ln();
            tail_log_asym(&ev, t).unwrap() - f.log_value(t).unwrap() - gap
        };
        let d0 = d(3.0);
        for t in [30.0, 1e3, 1e5] {
            assert!((d(t) - d0).abs() < 1e-8 * t, "{t}: {} vs {d0}", d(t));
        }
        let json = serde_json::to_string(&f).unwrap();
        let back: AsymptoticForm = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn mz_examples() {
        let e = LevyModel::unit_exponential();
        assert!((mz_constant(&e, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
        // Telescoping: ∏(k/(k+1))e^{1/k} = e^{H_K}/(K+1) at finite K.
        for kk in [1000usize, 10000] {
            let h: f64 = (1..=kk).map(|k| 1.0 / k as f64).sum();
            let prod = (h - ((kk + 1) as f64).ln()).exp();
            assert!(((EULER_GAMMA.exp() / prod) - 1.0).abs() < 1.0 / kk as f64);
        }
        // Mass 2, rate 1: π(0,u] = 2u + …, so b′ = 1 and c_I is |π| times
        // the unit constant by scaling.
        let two = LevyModel::compound_poisson(2.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        assert!((mz_constant(&two, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-8);
        assert!(mz_constant(&LevyModel::GammaSub, 1.0, 1.0).is_err());
    }

    #[test]
    fn light_tail_constant_matches_product() {
        // Jumps ≥ 1: π(0,u] vanishes near 0, so the product formula with b = 0
        // is an independent oracle for E[exp(|π|e^{−X}I)].
        let m = LevyModel::compound_poisson(1.0, JumpLaw::ShiftedExponential { shift: 1.0, rate: 1.0 }).unwrap();
        let exact = mz_constant(&m, 0.0, 1.0).unwrap();
        let est = mz_constant_lighttail(&m, 200_000, 4).unwrap();
        assert!(est.warning.is_none(), "{:?}", est.warning);
        assert!((est.estimate - exact).abs() < 4.0 * est.std_error, "{} vs {exact}", est.estimate);
        let small = mz_constant_lighttail(&m, 50_000, 4).unwrap();
        let r = est.half_width_99 / small.half_width_99;
        assert!((r - 0.5).abs() < 0.1, "{r}");
        assert!(mz_constant_lighttail(&m, 0, 1).is_err());
        assert!(mz_constant_lighttail(&LevyModel::unit_exponential(), 10, 1).is_err());
        assert!(mz_constant_lighttail(&LevyModel::GammaSub, 10, 1).is_err());
    }

    #[test]
    fn mz_zero_slope_is_series_constant() {
        // With b = 0 the product equals E[e^{|π|e^{−X}I}] = Σₙ |π|ⁿ L(n) E[Iⁿ]/n!.
        let m = LevyModel::compound_poisson(1.0, JumpLaw::ShiftedExponential { shift: 1.0, rate: 1.0 }).unwrap();
        let prod = mz_constant(&m, 0.0, 1.0).unwrap();
        let mut series = 1.0;
        let mut ln_ratio = 0.0;
        for n in 1..200 {
            ln_ratio -= m.phi(n as f64).unwrap().ln();
            series += (ln_ratio + m.normalized_laplace(n as f64).unwrap().ln()).exp();
        }
        assert!((prod / series - 1.0).abs() < 1e-9, "{prod} vs {series}");
    }

    #[test]
    fn ssmp_reduces_to_tail() {
        let ev = PsiEvaluator::new(LevyModel::GammaSub).unwrap();
        for t in [5.0, 50.0] {
            let d = ssmp_moment_log_asym(&ev, 1.0, 0.0, t).unwrap() - tail_log_asym(&ev, t).unwrap();
            assert!(d.abs() < 1e-12);
        }
        let st = PsiEvaluator::new(LevyModel::Stable { alpha: 0.5 }).unwrap();
        let t: f64 = 10.0;
        // ψ(x) = x², α = 1, a = 2: 3 ln(t/t²) + ½ ln(2t) − (t² − 1)/2.
        let want = 3.0 * (-t.ln()) + 0.5 * (2.0 * t).ln() - (t * t - 1.0) / 2.0;
        assert!((ssmp_moment_log_asym(&st, 1.0, 2.0, t).unwrap() - want).abs() < 1e-10);
        let mut prev = f64::INFINITY;
        for t in [3.0, 6.0, 12.0, 24.0] {
            let v = ssmp_moment_log_asym(&st, 0.7, 1.5, t).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }
}
