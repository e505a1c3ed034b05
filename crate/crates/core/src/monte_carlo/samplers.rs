//! Jump samplers for the simulated subordinators and exact samplers for the
//! two (a,b,c) cases with explicit laws.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, Open01};

use crate::error::{Error, Result};
use crate::levy::{JumpLaw, LevyModel};
use crate::quadrature::{integrate, integrate_left_power, Tolerance};
use crate::special::{exp_int_e1, gamma, log_gamma};

pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

fn sample_law<R: Rng + ?Sized>(law: &JumpLaw, gamma_dist: Option<&Gamma<f64>>, rng: &mut R) -> f64 {
    match *law {
        JumpLaw::Exponential { rate } => exp1(rng) / rate,
        JumpLaw::Gamma { .. } => gamma_dist.expect("gamma sampler").sample(rng),
        JumpLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        JumpLaw::ShiftedExponential { shift, rate } => shift + exp1(rng) / rate,
    }
}

/// π restricted to [eps, ∞) and normalised, for π in the (a,b,c) family:
/// with q = 1 − e^{−v/c} the law is ∝ q^{b−1}(1−q)^{ac−1} on [δ, 1).
#[derive(Debug, Clone)]
pub(crate) struct AbcTail {
    c: f64,
    b: f64,
    ac: f64,
    delta: f64,
    q_mid: f64,
    p_left: f64,
    m_left: f64,
    m_right: f64,
    /// s·∫ q^{b−1}(1−q)^{ac−1} over [δ, 1).
    pub rate: f64,
}

impl AbcTail {
    pub(crate) fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        let (a, b, c, s) = model.abc_form().ok_or_else(|| Error::Unsupported(format!("{} is not an (a,b,c) measure", model.name())))?;
        let ac = a * c;
        let delta = -(-eps / c).exp_m1();
        let q_mid = delta.max(0.5);
        let tol = Tolerance::rel(1e-12).with_abs(0.0);
        let left = if delta < q_mid {
            integrate(|t: f64| (b * t).exp() * ((-t.exp()).ln_1p() * (ac - 1.0)).exp(), delta.ln(), q_mid.ln(), tol)?.value
        } else {
            0.0
        };
        let right = integrate_left_power(|r: f64| r.powf(ac - 1.0) * ((-r).ln_1p() * (b - 1.0)).exp(), 0.0, 1.0 - q_mid, ac - 1.0, tol)?.value;
        let total = left + right;
        let m_left = if ac >= 1.0 { 1.0 } else { (1.0 - q_mid).powf(ac - 1.0) };
        let m_right = if b <= 1.0 { q_mid.powf(b - 1.0) } else { 1.0 };
        Ok(AbcTail { c, b, ac, delta, q_mid, p_left: left / total, m_left, m_right, rate: s * total })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let q = if rng.random::<f64>() < self.p_left {
            loop {
                let u = rng.random::<f64>();
                let q = if self.b.abs() < 1e-12 {
                    self.delta * (u * (self.q_mid / self.delta).ln()).exp()
                } else {
                    let (lo, hi) = (self.delta.powf(self.b), self.q_mid.powf(self.b));
                    (lo + u * (hi - lo)).powf(1.0 / self.b)
                };
                if rng.random::<f64>() * self.m_left <= (1.0 - q).powf(self.ac - 1.0) {
                    break q;
                }
            }
        } else {
            loop {
                let r = (1.0 - self.q_mid) * open01(rng).powf(1.0 / self.ac);
                let q = 1.0 - r;
                if rng.random::<f64>() * self.m_right <= q.powf(self.b - 1.0) {
                    break q;
                }
            }
        };
        -self.c * (-q).ln_1p()
    }
}

/// Inversion of a closed-form π̄ on [eps, ∞): cubic Hermite interpolation of
/// ln v against ln π̄ on a table uniform in ln π̄, then one Newton step.
#[derive(Debug, Clone)]
pub(crate) struct TailTable {
    model: LevyModel,
    ln_tail_eps: f64,
    dy: f64,
    /// ln v at ln π̄ = ln_tail_eps − k·dy.
    s: Vec<f64>,
    /// d ln v / d(−ln π̄) at the same nodes.
    slope: Vec<f64>,
}

const TABLE_DEPTH: f64 = 40.0;
const TABLE_POINTS: usize = 4097;

impl TailTable {
    pub(crate) fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        let ln_tail = |v: f64| model.pi_tail(v).map(f64::ln);
        let ln_tail_eps = ln_tail(eps)?;
        let mut hi = eps.max(1.0);
        while ln_tail(hi)? > ln_tail_eps - TABLE_DEPTH {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Unsupported("tail too heavy for table inversion".into()));
            }
        }
        let dy = TABLE_DEPTH / (TABLE_POINTS - 1) as f64;
        let mut s = Vec::with_capacity(TABLE_POINTS);
        let mut slope = Vec::with_capacity(TABLE_POINTS);
        let mut lo = eps;
        for k in 0..TABLE_POINTS {
            let target = ln_tail_eps - k as f64 * dy;
            let v = if k == 0 {
                eps
            } else {
                crate::roots::bisect(|v| ln_tail(v).unwrap_or(f64::NEG_INFINITY) - target, lo, hi, 1e-15 * hi)?
            };
            lo = v;
            let elasticity = v * model.density(v) / model.pi_tail(v)?;
            s.push(v.ln());
            slope.push(1.0 / elasticity);
        }
        Ok(TailTable { model: model.clone(), ln_tail_eps, dy, s, slope })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let depth = -open01(rng).ln();
        let p = depth / self.dy;
        let n = self.s.len();
        let x = if p >= (n - 1) as f64 {
            // Beyond the table (probability e^{−40}): extrapolate linearly.
            (self.s[n - 1] + (depth - TABLE_DEPTH) * self.slope[n - 1]).exp()
        } else {
            let k = p.floor() as usize;
            let t = p - k as f64;
            let (t2, t3) = (t * t, t * t * t);
            let ln_v = self.s[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
                + self.dy * self.slope[k] * (t3 - 2.0 * t2 + t)
                + self.s[k + 1] * (-2.0 * t3 + 3.0 * t2)
                + self.dy * self.slope[k + 1] * (t3 - t2);
            ln_v.exp()
        };
        // Newton on ln π̄(x) = ln π̄(eps) − depth.
        match (self.model.pi_tail(x), self.model.density(x)) {
            (Ok(t), d) if t > 0.0 && d > 0.0 => {
                let f = t.ln() - (self.ln_tail_eps - depth);
                let next = x + f * t / d;
                if next > 0.0 && (next - x).abs() < 1e-6 * x { next } else { x }
            }
            _ => x,
        }
    }
}

/// Law of the jumps of size ≥ eps (all jumps when eps = 0).
#[derive(Debug, Clone)]
pub(crate) enum JumpSampler {
    Law { law: JumpLaw, gamma: Option<Gamma<f64>>, eps: f64 },
    Pareto { eps: f64, inv_alpha: f64 },
    GammaSplit { eps: f64, p_low: f64, start_high: f64 },
    AbcBeta { c: f64, beta: Beta<f64> },
    AbcTail(AbcTail),
    Table(TailTable),
}

impl JumpSampler {
    /// Sampler and total rate of the jumps ≥ eps.
    pub(crate) fn new(model: &LevyModel, eps: f64) -> Result<(Self, f64)> {
        Ok(match model {
            LevyModel::CompoundPoisson { mass, jump, .. } => {
                let gamma_dist = match *jump {
                    JumpLaw::Gamma { shape, rate } => Some(Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Domain(e.to_string()))?),
                    _ => None,
                };
                let rate = if eps > 0.0 { mass * jump.tail(eps)? } else { *mass };
                (JumpSampler::Law { law: jump.clone(), gamma: gamma_dist, eps }, rate)
            }
            LevyModel::Stable { alpha } => {
                if !(eps > 0.0) {
                    return Err(Error::Config("stable subordinators need eps > 0".into()));
                }
                (JumpSampler::Pareto { eps, inv_alpha: 1.0 / alpha }, model.pi_tail(eps)?)
            }
            LevyModel::GammaSub => {
                if !(eps > 0.0) {
                    return Err(Error::Config("the Gamma subordinator needs eps > 0".into()));
                }
                let start_high = eps.max(1.0);
                let high = exp_int_e1(start_high)?;
                let total = exp_int_e1(eps)?;
                (JumpSampler::GammaSplit { eps, p_low: 1.0 - high / total, start_high }, total)
            }
            LevyModel::InfinitePowerTail { .. } => {
                if !(eps > 0.0) {
                    return Err(Error::Config("infinite measures need eps > 0".into()));
                }
                (JumpSampler::Table(TailTable::new(model, eps)?), model.pi_tail(eps)?)
            }
            _ => {
                let (a, b, c, s) = model.abc_form().expect("abc family");
                if eps == 0.0 {
                    if b <= 0.0 {
                        return Err(Error::Config("infinite (a,b,c) measures need eps > 0".into()));
                    }
                    let beta = Beta::new(a * c, b).map_err(|e| Error::Domain(e.to_string()))?;
                    let rate = s * (log_gamma(a * c)? + log_gamma(b)? - log_gamma(a * c + b)?).exp();
                    (JumpSampler::AbcBeta { c, beta }, rate)
                } else {
                    let t = AbcTail::new(model, eps)?;
                    let rate = t.rate;
                    (JumpSampler::AbcTail(t), rate)
                }
            }
        })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::Law { law, gamma, eps } => loop {
                let v = sample_law(law, gamma.as_ref(), rng);
                if v >= *eps {
                    return v;
                }
            },
            JumpSampler::Pareto { eps, inv_alpha } => eps * open01(rng).powf(-inv_alpha),
            // Rejection happens inside the chosen region so the region
            // weights stay exact.
            JumpSampler::GammaSplit { eps, p_low, start_high } => {
                if rng.random::<f64>() < *p_low {
                    loop {
                        let v = eps * (rng.random::<f64>() * (1.0 / eps).ln()).exp();
                        if rng.random::<f64>() <= (eps - v).exp() {
                            return v;
                        }
                    }
                } else {
                    loop {
                        let v = start_high + exp1(rng);
                        if rng.random::<f64>() * v <= *start_high {
                            return v;
                        }
                    }
                }
            }
            JumpSampler::AbcBeta { c, beta } => {
                let w: f64 = beta.sample(rng);
                -c * w.ln()
            }
            JumpSampler::AbcTail(t) => t.sample(rng),
            JumpSampler::Table(t) => t.sample(rng),
        }
    }
}

/// The two (a,b,c) cases where the law of I is explicit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCase {
    /// a = 1, b = −c: I ∝ generalised Mittag-Leffler(c, c).
    MittagLeffler { c: f64 },
    /// c = 1/(a+1), b = −1 + 1/(a+1): I ∝ e(1)^{1/(a+1)}.
    ExponentialPower { a: f64 },
}

impl SpecialCase {
    /// All special cases the model's parameters match to 1e−12.
    pub fn detect(model: &LevyModel) -> Vec<SpecialCase> {
        let Some((a, b, c, _)) = model.abc_form() else { return Vec::new() };
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
        let mut out = Vec::new();
        if close(a, 1.0) && close(b, -c) && c > 0.0 && c < 1.0 {
            out.push(SpecialCase::MittagLeffler { c });
        }
        if close(c, 1.0 / (a + 1.0)) && close(b, -1.0 + 1.0 / (a + 1.0)) {
            out.push(SpecialCase::ExponentialPower { a });
        }
        out
    }

    /// E[Y] for the unscaled variable Y.
    fn mean(&self) -> Result<f64> {
        match *self {
            SpecialCase::MittagLeffler { c } => Ok(gamma(c)? / gamma(2.0 * c)?),
            SpecialCase::ExponentialPower { a } => gamma(1.0 + 1.0 / (a + 1.0)),
        }
    }
}

/// Generalised Mittag-Leffler(α, θ), θ > 0: M = σ^{−α} under the law tilted
/// by σ^{−θ}. In Kanter's representation σ = (A(U)/E)^{(1−α)/α} the tilt
/// factorises, so E ~ Gamma(1 + θ(1−α)/α) and U has density ∝ B(U)^{−θ/α}
/// with B = A^{1−α} increasing on (0, π); M = E^{1−α}/B(U).
pub struct MittagLeffler {
    alpha: f64,
    ratio: f64,
    b0: f64,
    energy: Gamma<f64>,
}

impl MittagLeffler {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 && theta > 0.0) {
            return Err(Error::Domain(format!("Mittag-Leffler needs alpha in (0,1), theta > 0; got ({alpha}, {theta})")));
        }
        let energy = Gamma::new(1.0 + theta * (1.0 - alpha) / alpha, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
        let b0 = alpha.powf(alpha) * (1.0 - alpha).powf(1.0 - alpha);
        Ok(MittagLeffler { alpha, ratio: theta / alpha, b0, energy })
    }

    fn zolotarev(&self, u: f64) -> f64 {
        let a = self.alpha;
        (a * u).sin().powf(a) * ((1.0 - a) * u).sin().powf(1.0 - a) / u.sin()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = loop {
            let u = std::f64::consts::PI * open01(rng);
            let bu = self.zolotarev(u);
            if rng.random::<f64>() <= (self.b0 / bu).powf(self.ratio) {
                break bu;
            }
        };
        let e: f64 = self.energy.sample(rng);
        e.powf(1.0 - self.alpha) / u
    }

    /// E[M^r] = Γ(θ)Γ(θ/α + r)/(Γ(θ/α)Γ(θ + rα)).
    pub fn moment(alpha: f64, theta: f64, r: f64) -> Result<f64> {
        Ok((log_gamma(theta)? + log_gamma(theta / alpha + r)? - log_gamma(theta / alpha)? - log_gamma(theta + r * alpha)?).exp())
    }
}

/// Exact draws of I for a special case, scaled so that E[I] = 1/φ(1).
pub(crate) struct ExactSampler {
    case: SpecialCase,
    ml: Option<MittagLeffler>,
    scale: f64,
}

impl ExactSampler {
    pub(crate) fn new(model: &LevyModel, case: SpecialCase) -> Result<Self> {
        if !SpecialCase::detect(model).contains(&case) {
            return Err(Error::Unsupported(format!("{case:?} does not match the model's parameters")));
        }
        let ml = match case {
            SpecialCase::MittagLeffler { c } => Some(MittagLeffler::new(c, c)?),
            SpecialCase::ExponentialPower { .. } => None,
        };
        let scale = 1.0 / (model.phi(1.0)? * case.mean()?);
        Ok(ExactSampler { case, ml, scale })
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = match self.case {
            SpecialCase::MittagLeffler { .. } => self.ml.as_ref().expect("ml").sample(rng),
            SpecialCase::ExponentialPower { a } => exp1(rng).powf(1.0 / (a + 1.0)),
        };
        self.scale * y
    }
}
