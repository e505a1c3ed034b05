//! Simulation of I = ∫₀^∞ e^{−ξ_r} dr.
//!
//! Finite π: the affine recursion I = Σⱼ e^{−S_{j−1}} Eⱼ with Eⱼ ~ Exp(|π|).
//! Infinite π: jumps ≥ eps form a compound Poisson process, smaller jumps are
//! replaced by their mean drift b_eps, and between jumps ∫e^{−ξ} is explicit.
//! Both stop once e^{−ξ} falls below the horizon bound.
//!
//! Replicates are drawn in fixed blocks, block k using the ChaCha8 stream k of
//! the seed, so results do not depend on the number of workers.

mod discrete;
mod io;
mod samplers;
mod stats;

pub use discrete::{
    barrier_walk_absorption, barrier_walk_absorption_with, barrier_walk_scale, beta_coalescent_collisions, beta_coalescent_exact_mean,
    beta_coalescent_scale,
    pareto_tail_inverse,
};
pub use io::{read_samples, write_samples, SAMPLE_MAGIC, SAMPLE_VERSION};
pub use samplers::{MittagLeffler, SpecialCase};
pub use stats::{fit_c_i, fit_constant, ks_two_sample, moment, tail_estimate, tail_slope, wilson, CFit, KsResult, MomentEstimate, SlopeEstimate, TailPoint, Z99};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use samplers::{exp1, ExactSampler, JumpSampler};

pub const DEFAULT_HORIZON: f64 = 1e-12;
pub const DEFAULT_MAX_JUMP_RATE: f64 = 1e6;
/// Relative perturbation of E[I] and E[I²] allowed when choosing eps.
pub const DEFAULT_EPS_BIAS: f64 = 1e-3;
const BLOCK: usize = 4096;

pub(crate) fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Runs `f(rng, count)` over fixed blocks of replicates and concatenates in
/// block order.
pub(crate) fn run_blocks<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Vec<T>> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let parts: Result<Vec<Vec<T>>> = crate::parallel::install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let count = BLOCK.min(n - b * BLOCK);
                f(&mut block_rng(seed, b), count)
            })
            .collect()
    });
    Ok(parts?.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    AffineRecursion,
    CompensatedPath,
    ExactSpecial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScheme {
    pub kind: SchemeKind,
    pub eps: f64,
    pub horizon_tail_bound: f64,
    #[serde(default = "default_max_rate")]
    pub max_jump_rate: f64,
}

fn default_max_rate() -> f64 {
    DEFAULT_MAX_JUMP_RATE
}

impl SimScheme {
    pub fn affine() -> Self {
        SimScheme { kind: SchemeKind::AffineRecursion, eps: 0.0, horizon_tail_bound: DEFAULT_HORIZON, max_jump_rate: DEFAULT_MAX_JUMP_RATE }
    }

    pub fn compensated(eps: f64) -> Self {
        SimScheme { kind: SchemeKind::CompensatedPath, eps, ..Self::affine() }
    }

    pub fn exact() -> Self {
        SimScheme { kind: SchemeKind::ExactSpecial, ..Self::affine() }
    }

    /// Affine recursion for finite π, otherwise the compensated path with
    /// `default_eps`.
    pub fn for_model(model: &LevyModel) -> Result<Self> {
        if model.total_mass().is_some() {
            Ok(Self::affine())
        } else {
            Ok(Self::compensated(default_eps(model, DEFAULT_EPS_BIAS)?))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let compensated = self.kind == SchemeKind::CompensatedPath;
        if compensated != (self.eps > 0.0) || !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be > 0 exactly for the compensated path, got {} for {:?}", self.eps, self.kind)));
        }
        if !(self.horizon_tail_bound > 0.0 && self.horizon_tail_bound < 1.0) {
            return Err(Error::Config(format!("horizon_tail_bound must lie in (0,1), got {}", self.horizon_tail_bound)));
        }
        if !(self.max_jump_rate > 0.0) {
            return Err(Error::Config("max_jump_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Largest eps = 2^{−k} for which replacing jumps below eps by their mean
/// perturbs E[I] and E[I²] by at most `rel_bias`. The truncated process is a
/// subordinator with exponent φ_eps = φ + Δ_eps, so E[I_eps] = 1/φ_eps(1) and
/// E[I_eps²] = 2/(φ_eps(1)φ_eps(2)) exactly.
pub fn default_eps(model: &LevyModel, rel_bias: f64) -> Result<f64> {
    if !(rel_bias > 0.0) {
        return Err(Error::Domain("rel_bias must be positive".into()));
    }
    let (p1, p2) = (model.phi(1.0)?, model.phi(2.0)?);
    let mut eps = 1.0f64;
    for _ in 0..60 {
        let d1 = model.truncation_excess(1.0, eps)? / p1;
        let d2 = model.truncation_excess(2.0, eps)? / p2;
        if d1 <= rel_bias && d1 + d2 <= rel_bias {
            return Ok(eps);
        }
        eps /= 2.0;
    }
    Err(Error::Resource(format!("no eps >= {eps:e} meets relative bias {rel_bias:e}")))
}

/// E[Iⁿ] for the process actually simulated by `scheme` (n = 1, 2).
pub fn scheme_moments(model: &LevyModel, scheme: &SimScheme) -> Result<(f64, f64)> {
    let eps = if scheme.kind == SchemeKind::CompensatedPath { scheme.eps } else { 0.0 };
    let (p1, p2) = (model.phi_truncated(1.0, eps)?, model.phi_truncated(2.0, eps)?);
    Ok((1.0 / p1, 2.0 / (p1 * p2)))
}

struct Plan {
    rate: f64,
    drift: f64,
    horizon: f64,
    jumps: JumpSampler,
}

impl Plan {
    fn new(model: &LevyModel, scheme: &SimScheme) -> Result<Self> {
        model.validate()?;
        scheme.validate()?;
        let horizon = -scheme.horizon_tail_bound.ln();
        match scheme.kind {
            SchemeKind::AffineRecursion => {
                if model.total_mass().is_none() {
                    return Err(Error::Config(format!("{} has infinite mass; use the compensated path", model.name())));
                }
                let (jumps, rate) = JumpSampler::new(model, 0.0)?;
                Ok(Plan { rate, drift: 0.0, horizon, jumps })
            }
            SchemeKind::CompensatedPath => {
                let (jumps, rate) = JumpSampler::new(model, scheme.eps)?;
                if rate > scheme.max_jump_rate {
                    return Err(Error::Resource(format!(
                        "jump rate {rate:.3e} above eps = {} exceeds the budget {:.3e}; use a larger eps",
                        scheme.eps, scheme.max_jump_rate
                    )));
                }
                let drift = model.small_jump_mean(scheme.eps)?;
                Ok(Plan { rate, drift, horizon, jumps })
            }
            SchemeKind::ExactSpecial => Err(Error::Config("exact sampling has no path plan".into())),
        }
    }

    fn replicate(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (mut xi, mut acc) = (0.0f64, 0.0f64);
        loop {
            let w = (-xi).exp();
            if self.rate == 0.0 {
                return acc + w / self.drift;
            }
            let dt = exp1(rng) / self.rate;
            acc += if self.drift > 0.0 { w * -(-self.drift * dt).exp_m1() / self.drift } else { w * dt };
            xi += self.drift * dt + self.jumps.sample(rng);
            if xi > self.horizon {
                return acc;
            }
        }
    }
}

/// n replicates of I (or of its eps-approximation).
pub fn sample_i(model: &LevyModel, scheme: &SimScheme, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("sample_I needs n >= 1".into()));
    }
    if scheme.kind == SchemeKind::ExactSpecial {
        scheme.validate()?;
        let case = *SpecialCase::detect(model)
            .first()
            .ok_or_else(|| Error::Unsupported(format!("{} has no explicit law for I", model.name())))?;
        return exact_sampler_special(model, case, n, seed);
    }
    let plan = Plan::new(model, scheme)?;
    run_blocks(n, seed, |rng, count| Ok((0..count).map(|_| plan.replicate(rng)).collect()))
}

/// Draws of exp(|π| e^{−X} I) with X ~ π/|π| independent of I, for finite π.
pub(crate) fn light_tail_terms(model: &LevyModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    let plan = Plan::new(model, &SimScheme::affine())?;
    run_blocks(n, seed, |rng, count| {
        Ok((0..count)
            .map(|_| {
                let x = plan.jumps.sample(rng);
                let i = plan.replicate(rng);
                (plan.rate * (-x).exp() * i).exp()
            })
            .collect())
    })
}

/// Exact draws of I in one of the explicit (a,b,c) cases.
pub fn exact_sampler_special(model: &LevyModel, case: SpecialCase, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("exact sampler needs n >= 1".into()));
    }
    let s = ExactSampler::new(model, case)?;
    run_blocks(n, seed, |rng, count| Ok((0..count).map(|_| s.sample(rng)).collect()))
}

/// Scale K with I = K·Y for the unscaled special variable Y.
pub fn special_scale(model: &LevyModel, case: SpecialCase) -> Result<f64> {
    Ok(ExactSampler::new(model, case)?.scale())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub seed: u64,
    pub moment_estimates: Vec<MomentEstimate>,
    pub tail_estimates: Vec<TailPoint>,
    pub truncation_eps: f64,
}

impl SampleSummary {
    pub fn from_samples(samples: &[f64], seed: u64, truncation_eps: f64, t_list: &[f64]) -> Result<Self> {
        Ok(SampleSummary {
            n: samples.len(),
            seed,
            moment_estimates: vec![moment(samples, 1)?, moment(samples, 2)?],
            tail_estimates: tail_estimate(samples, t_list)?,
            truncation_eps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{catalog, JumpLaw};

    fn mean_se(s: &[f64]) -> (f64, f64) {
        let m = moment(s, 1).unwrap();
        (m.mean, m.std_error)
    }

    #[test]
    fn scheme_rules() {
        assert!(SimScheme::affine().validate().is_ok());
        assert!(SimScheme::compensated(0.0).validate().is_err());
        assert!(SimScheme { eps: 0.1, ..SimScheme::affine() }.validate().is_err());
        assert!(sample_i(&LevyModel::unit_exponential(), &SimScheme::affine(), 0, 1).is_err());
        assert!(sample_i(&LevyModel::Stable { alpha: 0.5 }, &SimScheme::affine(), 10, 1).is_err());
        let tiny = SimScheme { max_jump_rate: 10.0, ..SimScheme::compensated(1e-6) };
        assert!(matches!(sample_i(&LevyModel::Stable { alpha: 0.5 }, &tiny, 10, 1), Err(Error::Resource(_))));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let m = LevyModel::Stable { alpha: 0.5 };
        let s = SimScheme::compensated(0.01);
        let a = sample_i(&m, &s, 10_000, 42).unwrap();
        let b = sample_i(&m, &s, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_i(&m, &s, 10_000, 43).unwrap();
        assert_ne!(a[0], c[0]);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let d = single.install(|| sample_i(&m, &s, 10_000, 42).unwrap());
        assert_eq!(a, d);
    }

    #[test]
    fn jump_rates_match_tails() {
        for (name, m) in catalog() {
            if m.total_mass().is_some() {
                let (_, rate) = JumpSampler::new(&m, 0.0).unwrap();
                assert!((rate / m.total_mass().unwrap() - 1.0).abs() < 1e-10, "{name}");
            } else {
                for eps in [1e-3, 0.05, 0.7] {
                    let (_, rate) = JumpSampler::new(&m, eps).unwrap();
                    assert!((rate / m.pi_tail(eps).unwrap() - 1.0).abs() < 1e-8, "{name} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn jump_laws_match_tails() {
        // Empirical P(J > u | J ≥ eps) against π̄(u)/π̄(eps).
        for (name, m) in catalog() {
            let eps = if m.total_mass().is_some() { 0.0 } else { 0.02 };
            let (j, rate) = JumpSampler::new(&m, eps).unwrap();
            let mut rng = block_rng(9, 0);
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| j.sample(&mut rng)).collect();
            for u in [0.05, 0.3, 1.0, 2.5] {
                let want = m.pi_tail(u).unwrap() / rate;
                let got = draws.iter().filter(|&&v| v > u).count() as f64 / n as f64;
                let se = (want * (1.0 - want) / n as f64).sqrt();
                assert!((got - want).abs() < 5.0 * se + 1e-12, "{name} u={u}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn unit_model_moments() {
        let m = LevyModel::unit_exponential();
        let s = sample_i(&m, &SimScheme::affine(), 200_000, 5).unwrap();
        let (mean, se) = mean_se(&s);
        assert!((mean - 2.0).abs() < 4.0 * se);
        let m2 = moment(&s, 2).unwrap();
        assert!((m2.mean - 6.0).abs() < 4.0 * m2.std_error);
    }

    #[test]
    fn compensated_matches_truncated_moments() {
        for m in [LevyModel::Stable { alpha: 0.5 }, LevyModel::GammaSub] {
            let scheme = SimScheme::compensated(0.05);
            let (e1, _) = scheme_moments(&m, &scheme).unwrap();
            let s = sample_i(&m, &scheme, 200_000, 11).unwrap();
            let (mean, se) = mean_se(&s);
            assert!((mean - e1).abs() < 4.0 * se, "{}: {mean} vs {e1}", m.name());
        }
    }

    #[test]
    fn default_eps_meets_bias() {
        for (name, m) in catalog() {
            if m.total_mass().is_some() {
                continue;
            }
            let eps = default_eps(&m, 1e-3).unwrap();
            let (e1, _) = scheme_moments(&m, &SimScheme::compensated(eps)).unwrap();
            let exact = 1.0 / m.phi(1.0).unwrap();
            assert!((e1 / exact - 1.0).abs() <= 1e-3 * 1.0001, "{name}");
        }
    }

    #[test]
    fn mittag_leffler_moments() {
        for (alpha, theta) in [(0.5, 0.5), (0.3, 0.3), (0.7, 1.5)] {
            let ml = MittagLeffler::new(alpha, theta).unwrap();
            let mut rng = block_rng(3, 0);
            let n = 200_000;
            let x: Vec<f64> = (0..n).map(|_| ml.sample(&mut rng)).collect();
            for r in [1u32, 2] {
                let est = moment(&x, r).unwrap();
                let want = MittagLeffler::moment(alpha, theta, r as f64).unwrap();
                assert!((est.mean - want).abs() < 4.0 * est.std_error, "({alpha},{theta}) r={r}: {} vs {want}", est.mean);
            }
        }
    }

    #[test]
    fn special_cases_match_moment_sequence() {
        // The moments of I are n!/∏φ(i); the special laws must reproduce them
        // as Kⁿ E[Yⁿ] with the same K.
        let m = LevyModel::Abc { a: 1.0, b: -0.3, c: 0.3 };
        assert_eq!(SpecialCase::detect(&m), vec![SpecialCase::MittagLeffler { c: 0.3 }]);
        let k = special_scale(&m, SpecialCase::MittagLeffler { c: 0.3 }).unwrap();
        let mom = m.exact_moments(4).unwrap();
        for (i, mo) in mom.iter().enumerate() {
            let r = (i + 1) as f64;
            let want = k.powf(r) * MittagLeffler::moment(0.3, 0.3, r).unwrap();
            assert!((mo.value() / want - 1.0).abs() < 1e-9, "n={r}");
        }
        let a = 2.0;
        let m = LevyModel::Abc { a, b: -2.0 / 3.0, c: 1.0 / 3.0 };
        assert!(SpecialCase::detect(&m).contains(&SpecialCase::ExponentialPower { a }));
        let k = special_scale(&m, SpecialCase::ExponentialPower { a }).unwrap();
        for (i, mo) in m.exact_moments(4).unwrap().iter().enumerate() {
            let r = (i + 1) as f64;
            let want = k.powf(r) * crate::special::gamma(r / (a + 1.0) + 1.0).unwrap();
            assert!((mo.value() / want - 1.0).abs() < 1e-9, "n={r}");
        }
        // Unscaled: (a+1)ⁿΓ(n/(a+1)+1) is n!/∏φ(i) when φ is normalised so that
        // φ(i) = Γ((i+a)/(a+1))/Γ(i/(a+1)); here K = (a+1)·φ-scale.
        assert!(exact_sampler_special(&LevyModel::Abc { a: 1.0, b: -0.4, c: 0.5 }, SpecialCase::MittagLeffler { c: 0.5 }, 10, 1).is_err());
    }

    #[test]
    fn exponential_power_samples() {
        let a = 1.0;
        let m = LevyModel::Abc { a, b: -0.5, c: 0.5 };
        let case = SpecialCase::ExponentialPower { a };
        let k = special_scale(&m, case).unwrap();
        let s = exact_sampler_special(&m, case, 200_000, 8).unwrap();
        for r in [1u32, 2, 3] {
            let est = moment(&s, r).unwrap();
            let want = k.powi(r as i32) * crate::special::gamma(r as f64 / (a + 1.0) + 1.0).unwrap();
            assert!((est.mean - want).abs() < 4.0 * est.std_error, "r={r}");
        }
        assert_eq!(s, exact_sampler_special(&m, case, 200_000, 8).unwrap());
    }

    #[test]
    fn shifted_jumps_and_summary() {
        let m = LevyModel::CompoundPoisson { mass: 1.0, jump: JumpLaw::ShiftedExponential { shift: 1.0, rate: 1.0 }, lower_expansion: None };
        let s = sample_i(&m, &SimScheme::affine(), 100_000, 2).unwrap();
        let sum = SampleSummary::from_samples(&s, 2, 0.0, &[0.0, 1.0, 1e9]).unwrap();
        assert_eq!(sum.tail_estimates[0].p, 1.0);
        assert_eq!(sum.tail_estimates[2].p, 0.0);
        let (e1, _) = scheme_moments(&m, &SimScheme::affine()).unwrap();
        let me = sum.moment_estimates[0];
        assert!((me.mean - e1).abs() < 4.0 * me.std_error);
        let json = serde_json::to_string(&sum).unwrap();
        assert_eq!(serde_json::from_str::<SampleSummary>(&json).unwrap(), sum);
    }
}
