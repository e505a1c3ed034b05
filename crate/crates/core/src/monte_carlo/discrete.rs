//! The discrete models whose rescaled counts converge to exponential
//! functionals: collisions of a Beta-coalescent and absorption of a
//! non-decreasing walk under a barrier.

use rand::Rng;

use super::run_blocks;
use super::samplers::open01;
use crate::error::{Error, Result};
use crate::special::log_gamma;

/// Merger-size law of the embedded chain of a Beta(α, β)-coalescent: from n
/// blocks, m ∈ {2..n} merge with weight C(n,m)·B(m−2+α, n−m+β).
struct MergerTable {
    alpha: f64,
    beta: f64,
    first: Vec<f64>,
    total: Vec<f64>,
}

impl MergerTable {
    fn new(n_max: usize, alpha: f64, beta: f64) -> Result<Self> {
        let mut first = vec![0.0; n_max + 1];
        let mut total = vec![0.0; n_max + 1];
        for n in 2..=n_max {
            let nf = n as f64;
            let ln_w2 = (nf * (nf - 1.0) / 2.0).ln() + log_gamma(alpha)? + log_gamma(nf - 2.0 + beta)? - log_gamma(nf + alpha + beta - 2.0)?;
            let mut w = ln_w2.exp();
            first[n] = w;
            let mut acc = w;
            for m in 2..n {
                w *= Self::ratio(nf, m as f64, alpha, beta);
                acc += w;
            }
            total[n] = acc;
        }
        Ok(MergerTable { alpha, beta, first, total })
    }

    /// w(m+1)/w(m).
    fn ratio(n: f64, m: f64, alpha: f64, beta: f64) -> f64 {
        (n - m) / (m + 1.0) * (m - 2.0 + alpha) / (n - m - 1.0 + beta)
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> usize {
        let target = rng.random::<f64>() * self.total[n];
        let nf = n as f64;
        let mut m = 2usize;
        let mut w = self.first[n];
        let mut acc = w;
        while acc < target && m < n {
            w *= Self::ratio(nf, m as f64, self.alpha, self.beta);
            m += 1;
            acc += w;
        }
        m
    }
}

/// Number of merger events taking n_particles blocks down to one, per run.
pub fn beta_coalescent_collisions(n_particles: usize, alpha: f64, beta: f64, n_runs: usize, seed: u64) -> Result<Vec<u64>> {
    if !(alpha > 1.0 && alpha < 2.0 && beta > 0.0) {
        return Err(Error::Domain(format!("Beta-coalescent needs alpha in (1,2), beta > 0; got ({alpha}, {beta})")));
    }
    if n_particles < 2 || n_runs == 0 {
        return Err(Error::Domain("need n_particles >= 2 and n_runs >= 1".into()));
    }
    let table = MergerTable::new(n_particles, alpha, beta)?;
    run_blocks(n_runs, seed, |rng, count| {
        Ok((0..count)
            .map(|_| {
                let (mut n, mut steps) = (n_particles, 0u64);
                while n > 1 {
                    n -= table.sample(n, rng) - 1;
                    steps += 1;
                }
                steps
            })
            .collect())
    })
}

/// Exact E[I_n] from E[I_n] = 1 + Σ_m p_n(m) E[I_{n−m+1}].
pub fn beta_coalescent_exact_mean(n_particles: usize, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0 && beta > 0.0) || n_particles < 1 {
        return Err(Error::Domain(format!("Beta-coalescent needs alpha in (1,2), beta > 0; got ({alpha}, {beta})")));
    }
    let table = MergerTable::new(n_particles, alpha, beta)?;
    let mut e = vec![0.0f64; n_particles + 1];
    for n in 2..=n_particles {
        let nf = n as f64;
        let mut w = table.first[n];
        let mut s = w * e[n - 1];
        for m in 2..n {
            w *= MergerTable::ratio(nf, m as f64, alpha, beta);
            s += w * e[n - m];
        }
        e[n] = 1.0 + s / table.total[n];
    }
    Ok(e[n_particles])
}

/// I_n / n^{2−α}.
pub fn beta_coalescent_scale(n_particles: usize, alpha: f64) -> f64 {
    (n_particles as f64).powf(2.0 - alpha)
}

/// Step law with P(ξ ≥ k) = k^{−c}, k ≥ 1, as a tail inversion u ↦ u^{−1/c}.
pub fn pareto_tail_inverse(c: f64) -> impl Fn(f64) -> f64 + Sync {
    move |u: f64| u.powf(-1.0 / c)
}

/// Steps until a walk with integer steps ⌊Q(U)⌋ ≥ 1, each conditioned to stay
/// at or below the barrier, reaches it from 0.
pub fn barrier_walk_absorption_with<Q: Fn(f64) -> f64 + Sync>(n_barrier: u64, tail_inverse: Q, n_runs: usize, seed: u64) -> Result<Vec<u64>> {
    if n_barrier == 0 || n_runs == 0 {
        return Err(Error::Domain("need n_barrier >= 1 and n_runs >= 1".into()));
    }
    run_blocks(n_runs, seed, |rng, count| {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (mut left, mut steps) = (n_barrier, 0u64);
            while left > 0 {
                let mut tries = 0u32;
                let step = loop {
                    let x = tail_inverse(open01(rng)).floor();
                    if x >= 1.0 && x <= left as f64 {
                        break x as u64;
                    }
                    tries += 1;
                    if tries > 1_000_000 {
                        return Err(Error::Resource("step law almost never fits under the barrier".into()));
                    }
                };
                left -= step;
                steps += 1;
            }
            out.push(steps);
        }
        Ok(out)
    })
}

/// Absorption counts for the step law P(ξ ≥ k) = k^{−c}.
pub fn barrier_walk_absorption(n_barrier: u64, c: f64, n_runs: usize, seed: u64) -> Result<Vec<u64>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("barrier-walk index must lie in (0,1), got {c}")));
    }
    barrier_walk_absorption_with(n_barrier, pareto_tail_inverse(c), n_runs, seed)
}

/// c·I_n / n^c.
pub fn barrier_walk_scale(n_barrier: u64, c: f64) -> f64 {
    (n_barrier as f64).powf(c) / c
}
