//! Monotone fixed-point schemes for f′ = k/P(I > ·) and ψ(x)/x:
//!
//! Θ(g)(x)   = ∫(1 − exp(−∫_x^{xe^v} g(u) du)) π(dv),
//! Θ_φ(g)(x) = φ(x g(x)),
//!
//! iterated from a constant seed, plus reconstruction of the density
//! k = f′ e^{−F} and a check of k(x) = ∫_x^∞ π̄(ln(y/x)) k(y) dy.
//!
//! Grid functions live on geometric grids. Primitives are taken in s = ln x by
//! an endpoint-corrected trapezoid rule and interpolated by cubic Hermite
//! polynomials whose slopes are the exact integrand values. Beyond the right
//! edge g is continued by the power envelope x^{κ̂/(1−κ̂)}.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::levy::LevyModel;
use crate::quadrature::{integrate, integrate_left_power, Tolerance};

/// Geometric grid description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(x_lo: f64, x_hi: f64, points: usize) -> Result<Self> {
        if !(x_lo > 0.0 && x_hi > x_lo && x_hi.is_finite()) || points < 8 {
            return Err(Error::Config(format!("grid needs 0 < x_lo < x_hi and >= 8 points, got [{x_lo}, {x_hi}] x {points}")));
        }
        Ok(GridSpec { x_lo, x_hi, points })
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let n = self.points - 1;
        let r = (self.x_hi / self.x_lo).ln();
        let mut v: Vec<f64> = (0..=n).map(|i| self.x_lo * (r * i as f64 / n as f64).exp()).collect();
        v[n] = self.x_hi;
        v
    }
}

/// Non-negative function sampled on a geometric grid, constant to the left
/// and continued by a power law x^{right_exponent} to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub right_exponent: f64,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, right_exponent: f64) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 8 {
            return Err(Error::Config("grid function needs >= 8 aligned points".into()));
        }
        if grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid must be positive and strictly increasing".into()));
        }
        let ds = (grid[1] / grid[0]).ln();
        if grid.windows(2).any(|w| ((w[1] / w[0]).ln() - ds).abs() > 1e-9 * ds.max(1.0)) {
            return Err(Error::Config("grid must be geometric".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("grid function values must be non-negative".into()));
        }
        Ok(GridFunction { grid, values, right_exponent })
    }

    pub fn constant(spec: GridSpec, a: f64, right_exponent: f64) -> Result<Self> {
        let grid = spec.abscissae();
        let values = vec![a; grid.len()];
        Self::new(grid, values, right_exponent)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn ds(&self) -> f64 {
        (self.grid[1] / self.grid[0]).ln()
    }

    pub fn x_hi(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    /// Indices of the points at most x_hi/10: the part unaffected by the
    /// right-edge continuation.
    pub fn trusted(&self) -> std::ops::Range<usize> {
        let cut = self.x_hi() / 10.0;
        0..self.grid.iter().take_while(|&&x| x <= cut * (1.0 + 1e-12)).count()
    }

    /// Point evaluation: cubic interpolation in ln x on the grid, extrapolated
    /// as described on the type.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1] * (x / self.grid[n - 1]).powf(self.right_exponent);
        }
        let s = (x / self.grid[0]).ln() / self.ds();
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let (d0, d1) = (self.fd_slope(i), self.fd_slope(i + 1));
        let v = hermite(t, self.values[i], self.values[i + 1], d0, d1);
        // The interpolant may undershoot next to a steep drop.
        v.max(0.0)
    }

    /// Finite-difference derivative with respect to the grid index.
    fn fd_slope(&self, i: usize) -> f64 {
        fd_slope(&self.values, i)
    }

    /// ∫ xⁿ g(x) dx over the grid.
    pub fn moment(&self, order: i32) -> f64 {
        let h: Vec<f64> = self.grid.iter().zip(&self.values).map(|(&x, &v)| x.powi(order + 1) * v).collect();
        let cum = corrected_cumulative(&h, self.ds());
        *cum.last().expect("non-empty")
    }

    pub fn max_abs(&self, range: std::ops::Range<usize>) -> f64 {
        self.values[range].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with `#` metadata lines, then `x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W, metadata: &[(String, String)]) -> Result<()> {
        for (k, v) in metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "# right_exponent: {:e}", self.right_exponent)?;
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x:.17e},{v:.17e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<(Self, Vec<(String, String)>)> {
        let mut meta = Vec::new();
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut right_exponent = 0.0;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    let (k, v) = (k.trim().to_string(), v.trim().to_string());
                    if k == "right_exponent" {
                        right_exponent = v.parse().map_err(|_| Error::Config(format!("bad right_exponent '{v}'")))?;
                    } else {
                        meta.push((k, v));
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("x,") {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| Error::Config(format!("bad CSV row '{line}'")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}'")));
            grid.push(parse(a)?);
            values.push(parse(b)?);
        }
        Ok((GridFunction::new(grid, values, right_exponent)?, meta))
    }
}

fn hermite(t: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + d0 * (t3 - 2.0 * t2 + t) + y1 * (-2.0 * t3 + 3.0 * t2) + d1 * (t3 - t2)
}

/// Second-order finite-difference derivative of equally spaced samples with
/// respect to the index.
fn fd_slope(h: &[f64], i: usize) -> f64 {
    let n = h.len();
    if i == 0 {
        (-3.0 * h[0] + 4.0 * h[1] - h[2]) / 2.0
    } else if i == n - 1 {
        (3.0 * h[n - 1] - 4.0 * h[n - 2] + h[n - 3]) / 2.0
    } else {
        (h[i + 1] - h[i - 1]) / 2.0
    }
}

/// Per-cell integrals of equally spaced samples h (spacing ds) by the
/// trapezoid rule with the Hermite end correction ds²(h′ᵢ − h′ᵢ₊₁)/12.
fn corrected_cells(h: &[f64], ds: f64) -> Vec<f64> {
    let d: Vec<f64> = (0..h.len()).map(|i| fd_slope(h, i)).collect();
    (0..h.len() - 1).map(|i| ds * (0.5 * (h[i] + h[i + 1]) + (d[i] - d[i + 1]) / 12.0)).collect()
}

fn corrected_cumulative(h: &[f64], ds: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(h.len());
    out.push(0.0);
    let mut acc = 0.0;
    for c in corrected_cells(h, ds) {
        acc += c;
        out.push(acc);
    }
    out
}

/// G(x) = ∫_{x₀}^x g(u) du as a function of s = ln x, with increments from a
/// grid node computed without cancellation.
struct Primitive {
    ds: f64,
    /// u·g(u) at the nodes: dG/ds.
    h: Vec<f64>,
    cum: Vec<f64>,
    x_last: f64,
    g_last: f64,
    rho: f64,
}

impl Primitive {
    fn new(g: &GridFunction) -> Self {
        let ds = g.ds();
        let h: Vec<f64> = g.grid.iter().zip(&g.values).map(|(x, v)| x * v).collect();
        let cum = corrected_cumulative(&h, ds);
        Primitive {
            ds,
            h,
            cum,
            x_last: g.x_hi(),
            g_last: *g.values.last().expect("non-empty"),
            rho: g.right_exponent,
        }
    }

    /// G(s_j + τ ds) − G(s_j) for τ ∈ [0, 1].
    fn within(&self, j: usize, tau: f64) -> f64 {
        let dg = self.cum[j + 1] - self.cum[j];
        let (t, t2, t3) = (tau, tau * tau, tau * tau * tau);
        self.ds * self.h[j] * (t3 - 2.0 * t2 + t) + dg * (-2.0 * t3 + 3.0 * t2) + self.ds * self.h[j + 1] * (t3 - t2)
    }

    /// G(x) − G(x_last) for ln(x/x_last) = w ≥ 0 under the power continuation.
    fn beyond(&self, w: f64) -> f64 {
        let r = self.rho + 1.0;
        self.g_last * self.x_last / r * (r * w.max(0.0)).exp_m1()
    }

    /// Δ(v) = G(xᵢe^v) − G(xᵢ), v ≥ 0.
    fn increment(&self, i: usize, v: f64) -> f64 {
        let n = self.h.len();
        let pos = v / self.ds;
        let last = n - 1;
        if i as f64 + pos >= last as f64 {
            let to_edge = self.cum[last] - self.cum[i];
            return to_edge + self.beyond(v - (last - i) as f64 * self.ds);
        }
        let k = (pos.floor() as usize).min(last - 1 - i);
        let tau = pos - k as f64;
        let j = i + k;
        (self.cum[j] - self.cum[i]) + self.within(j, tau)
    }
}

const THETA_TOL: f64 = 1e-12;

/// ∫(1 − e^{−Δ(v)}) π(dv) at node i. The primitive is only C¹ across cells,
/// so the v-axis is cut at the cell boundaries kΔs (and at breakpoints of π)
/// and each piece is integrated separately; once e^{−Δ} underflows, the rest is
/// π̄ of the current cut.
fn theta_at(prim: &Primitive, i: usize, model: &LevyModel, breaks: &[f64]) -> Result<f64> {
    let slope = prim.h[i];
    let h = |v: f64| -(-prim.increment(i, v)).exp_m1();
    let tol = Tolerance::rel(THETA_TOL).with_abs(0.0);
    let ds = prim.ds;
    let first = breaks.iter().copied().filter(|&b| b > 0.0 && b < ds).fold(ds, f64::min);
    let mut total = model.pi_integral_head(h, slope, slope.max(1.0), first, tol)?;
    let cells_left = prim.h.len() - 1 - i;
    let f = |v: f64| {
        let d = model.density(v);
        if d == 0.0 { 0.0 } else { h(v) * d }
    };
    let mut lo = first;
    let mut k = 1usize;
    loop {
        if prim.increment(i, lo) > 40.0 {
            return Ok(total + model.pi_tail(lo)?);
        }
        if k > cells_left {
            // Past the grid: the power continuation is smooth.
            let g = |u: f64| if u <= 0.0 { 0.0 } else { f(lo / u) * lo / (u * u) };
            return Ok(total + integrate(g, 0.0, 1.0, tol)?.value);
        }
        let cell_end = k as f64 * ds;
        let hi = breaks.iter().copied().filter(|&b| b > lo && b < cell_end).fold(cell_end, f64::min);
        total += integrate(&f, lo, hi, tol)?.value;
        if hi == cell_end {
            k += 1;
        }
        lo = hi;
    }
}

/// Θ(g) on g's grid.
pub fn theta_apply(g: &GridFunction, model: &LevyModel) -> Result<GridFunction> {
    let prim = Primitive::new(g);
    let breaks = model.breakpoints();
    let values: Result<Vec<f64>> = crate::parallel::install(|| {
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                if g.values[i..].iter().all(|&v| v == 0.0) && g.right_exponent.is_finite() {
                    return Ok(0.0);
                }
                theta_at(&prim, i, model, &breaks)
            })
            .collect()
    });
    GridFunction::new(g.grid.clone(), values?, g.right_exponent)
}

/// Θ_φ(g)(x) = φ(x g(x)).
pub fn theta_phi_apply(g: &GridFunction, model: &LevyModel) -> Result<GridFunction> {
    let values: Result<Vec<f64>> = crate::parallel::install(|| g.grid.par_iter().zip(&g.values).map(|(&x, &v)| model.phi(x * v)).collect());
    GridFunction::new(g.grid.clone(), values?, g.right_exponent)
}

/// κ̂: the sampled limsup of xφ′/φ over [x_hi, 10⁶x_hi], pushed a tenth of the
/// way towards 1 so that x^{κ̂/(1−κ̂)} is a genuine envelope.
pub fn kappa_hat(model: &LevyModel, x_hi: f64) -> Result<f64> {
    let grid: Vec<f64> = (0..=60).map(|i| x_hi * 10f64.powf(i as f64 / 10.0)).collect();
    let limsup = model.check_h(&grid)?.at_largest.clamp(0.0, 1.0 - 1e-9);
    Ok(limsup + 0.1 * (1.0 - limsup))
}

/// B(x) = π̄(1) + φ(X) + X∫₀¹ e^{−Xv}((1−κ)(e^{v/(1−κ)} − 1) − v) π(dv) with
/// X = x^{1/(1−κ)}: one Θ step maps any g ≤ x^{κ/(1−κ)} below B.
pub fn envelope_bound(model: &LevyModel, kappa: f64, x: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) || !(x > 0.0) {
        return domain(format!("envelope_bound needs kappa in (0,1) and x > 0, got ({kappa}, {x})"));
    }
    let q = 1.0 / (1.0 - kappa);
    let big_x = x.powf(q);
    let h = |v: f64| (-big_x * v).exp() * ((1.0 - kappa) * (q * v).exp_m1() - v);
    let near = model.pi_integral_head(h, 0.0, big_x, 1.0, Tolerance::rel(1e-10).with_abs(0.0))?;
    Ok(model.pi_tail(1.0)? + model.phi(big_x)? + big_x * near)
}

/// Smallest point of `xs` (increasing) from which B(x) ≤ x^{κ/(1−κ)} holds at
/// every later point of `xs`; None if it fails at the last one.
pub fn envelope_threshold(model: &LevyModel, kappa: f64, xs: &[f64]) -> Result<Option<f64>> {
    let rho = kappa / (1.0 - kappa);
    let mut start = None;
    for &x in xs.iter().rev() {
        if envelope_bound(model, kappa, x)? <= x.powf(rho) {
            start = Some(x);
        } else {
            break;
        }
    }
    Ok(start)
}

/// Which operator to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Theta,
    ThetaPhi,
}

/// Iterates g₀ ≡ a, g_{n+1} = Θ(g_n) (or Θ_φ); each item is g_n for n ≥ 1.
pub struct Iterates<'a> {
    model: &'a LevyModel,
    current: GridFunction,
    scheme: Scheme,
}

impl Iterator for Iterates<'_> {
    type Item = Result<GridFunction>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = match self.scheme {
            Scheme::Theta => theta_apply(&self.current, self.model),
            Scheme::ThetaPhi => theta_phi_apply(&self.current, self.model),
        };
        match next {
            Ok(g) => {
                self.current = g.clone();
                Some(Ok(g))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

fn check_seed(model: &LevyModel, a0: f64) -> Result<()> {
    if !(a0 > 0.0) {
        return domain(format!("seed must be positive, got {a0}"));
    }
    if let Some(m) = model.total_mass() {
        if !(a0 < m) {
            return domain(format!("seed must lie in (0, |pi|) = (0, {m}), got {a0}"));
        }
    }
    Ok(())
}

pub fn iterates(model: &LevyModel, spec: GridSpec, a0: f64, scheme: Scheme) -> Result<Iterates<'_>> {
    check_seed(model, a0)?;
    let k = kappa_hat(model, spec.x_hi)?;
    let seed = GridFunction::constant(spec, a0, k / (1.0 - k))?;
    Ok(Iterates { model, current: seed, scheme })
}

/// Outcome of a fixed-point run.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub g: GridFunction,
    pub iterations: usize,
    /// ‖Θ(g) − g‖_∞ / ‖g‖_∞ over the trusted sub-grid at the last step.
    pub residual: f64,
    pub converged: bool,
    pub kappa_hat: f64,
}

fn run(model: &LevyModel, spec: GridSpec, a0: f64, tol: f64, max_iter: usize, scheme: Scheme) -> Result<FixedPoint> {
    if !(tol > 0.0) || max_iter == 0 {
        return domain("need tol > 0 and max_iter >= 1");
    }
    let it = iterates(model, spec, a0, scheme)?;
    let kappa_hat = kappa_hat(model, spec.x_hi)?;
    let mut prev = it.current.clone();
    let range = prev.trusted();
    let mut residual = f64::INFINITY;
    for (n, g) in it.take(max_iter).enumerate() {
        let g = g?;
        let diff = range.clone().fold(0.0f64, |m, i| m.max((g.values[i] - prev.values[i]).abs()));
        residual = diff / g.max_abs(range.clone()).max(f64::MIN_POSITIVE);
        prev = g;
        if residual <= tol {
            return Ok(FixedPoint { g: prev, iterations: n + 1, residual, converged: true, kappa_hat });
        }
    }
    Ok(FixedPoint { g: prev, iterations: max_iter, residual, converged: false, kappa_hat })
}

/// Iterates Θ to its fixed point f′. Non-convergence is reported, not raised.
pub fn iterate_to_fprime(model: &LevyModel, spec: GridSpec, a0: f64, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    run(model, spec, a0, tol, max_iter, Scheme::Theta)
}

/// Iterates Θ_φ to its fixed point ψ(x)/x (0 below x_ψ).
pub fn iterate_to_psi_ratio(model: &LevyModel, spec: GridSpec, a0: f64, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    run(model, spec, a0, tol, max_iter, Scheme::ThetaPhi)
}

/// Density reconstructed from f′.
#[derive(Debug, Clone)]
pub struct Density {
    pub k: GridFunction,
    /// F(x) = ∫_{x_lo}^x f′.
    pub big_f: Vec<f64>,
    /// ∫k before renormalisation.
    pub raw_mass: f64,
    pub warning: Option<String>,
}

impl Density {
    /// P(I > x) ≈ exp(−F(x)) at the grid points; the mass below x_lo is neglected.
    pub fn survival(&self) -> Vec<f64> {
        self.big_f.iter().map(|f| (-f).exp()).collect()
    }
}

/// k = f′ e^{−F}, renormalised to unit mass on the grid.
pub fn density_from_fprime(fp: &GridFunction) -> Result<Density> {
    let h: Vec<f64> = fp.grid.iter().zip(&fp.values).map(|(x, v)| x * v).collect();
    let big_f = corrected_cumulative(&h, fp.ds());
    let raw: Vec<f64> = fp.values.iter().zip(&big_f).map(|(v, f)| v * (-f).exp()).collect();
    let k0 = GridFunction::new(fp.grid.clone(), raw, 0.0)?;
    let raw_mass = k0.moment(0);
    if !(raw_mass > 0.0) {
        return Err(Error::NumericFailure { what: "density normalisation".into(), estimate: raw_mass });
    }
    let warning = if !(0.9..=1.1).contains(&raw_mass) {
        Some(format!("density mass before normalisation is {raw_mass:.4}, outside [0.9, 1.1]"))
    } else {
        None
    };
    let values = k0.values.iter().map(|v| v / raw_mass).collect();
    // k decays faster than any power; use a steep continuation.
    let k = GridFunction::new(fp.grid.clone(), values, -50.0)?;
    Ok(Density { k, big_f, raw_mass, warning })
}

/// sup over the trusted sub-grid of |k(x) − ∫_x^∞ π̄(ln(y/x)) k(y) dy| / k(x).
pub fn verify_integral_equation(k: &GridFunction, model: &LevyModel) -> Result<f64> {
    if k.values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    // ln k interpolated in ln x is much smoother than k itself.
    let lnk: Vec<f64> = k.values.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let ds = k.ds();
    let s0 = k.grid[0].ln();
    let n = k.len();
    let interp = |s: f64| -> f64 {
        let p = (s - s0) / ds;
        if p >= (n - 1) as f64 {
            return 0.0;
        }
        let i = (p.floor() as usize).min(n - 2);
        let t = p - i as f64;
        let window = |j: usize| lnk[j];
        if !window(i).is_finite() || !window(i + 1).is_finite() {
            return 0.0;
        }
        let slope = |j: usize| {
            let ok = |a: usize| lnk[a].is_finite();
            if j > 0 && j < n - 1 && ok(j - 1) && ok(j + 1) {
                (lnk[j + 1] - lnk[j - 1]) / 2.0
            } else if j + 1 < n && ok(j + 1) {
                lnk[j + 1] - lnk[j]
            } else {
                lnk[j] - lnk[j - 1]
            }
        };
        hermite(t, lnk[i], lnk[i + 1], slope(i), slope(i + 1)).exp()
    };
    let (cst, beta) = model.small_jump_index();
    let p = if cst > 0.0 && beta > 0.0 { -beta } else { 0.0 };
    let mut worst: f64 = 0.0;
    for i in k.trusted() {
        let x = k.grid[i];
        let kx = k.values[i];
        if kx <= 0.0 {
            continue;
        }
        let si = x.ln();
        let vmax = (k.x_hi() / x).ln();
        let failed = std::cell::Cell::new(None);
        let f = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            match model.pi_tail(v) {
                Ok(t) => t * interp(si + v) * x * v.exp(),
                Err(e) => {
                    failed.set(Some(e));
                    f64::NAN
                }
            }
        };
        let tol = Tolerance::rel(1e-8).with_abs(0.0);
        let split = vmax.min(1.0);
        let mut rhs = integrate_left_power(&f, 0.0, split, p, tol)?.value;
        if vmax > split {
            rhs += integrate(&f, split, vmax, tol)?.value;
        }
        if let Some(e) = failed.take() {
            return Err(e);
        }
        worst = worst.max((kx - rhs).abs() / kx);
    }
    Ok(worst)
}
