//! Special functions: log-Gamma and friends, the exponential integral E₁,
//! the lower real branch of Lambert W, and the Beta-tail identity used to
//! cross-check the closed-form Laplace exponent of the (a,b,c) family.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_left_power, Tolerance};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_78;

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

// Bernoulli numbers B_2 .. B_16
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

const SHIFT: f64 = 10.0;

fn stirling_series(z: f64) -> f64 {
    let r = 1.0 / (z * z);
    let mut acc = 0.0;
    for &c in STIRLING.iter().rev() {
        acc = acc * r + c;
    }
    acc / z
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires a finite x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x >= SHIFT {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_series(x);
    }
    // Shift up with Γ(x) = Γ(x+n) / (x (x+1) ... (x+n-1)).
    let mut z = x;
    let mut prod = 1.0;
    while z < SHIFT {
        prod *= z;
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_series(z) - prod.ln()
}

/// Γ(x) for real x away from the poles.
pub fn gamma(x: f64) -> Result<f64> {
    if x > 0.0 {
        return Ok(ln_gamma_pos(x).exp());
    }
    if x == x.floor() {
        return domain(format!("gamma has a pole at {x}"));
    }
    if x > -1.0 {
        return Ok(ln_gamma_pos(x + 1.0).exp() / x);
    }
    // Reflection Γ(x) Γ(1 − x) = π / sin(πx).
    Ok(PI / ((PI * x).sin() * ln_gamma_pos(1.0 - x).exp()))
}

/// 1/Γ(x), an entire function (zero at the non-positive integers).
pub fn rgamma(x: f64) -> f64 {
    if x > 0.0 {
        return (-ln_gamma_pos(x)).exp();
    }
    if x == x.floor() {
        return 0.0;
    }
    if x > -1.0 {
        return x * (-ln_gamma_pos(x + 1.0)).exp();
    }
    (PI * x).sin() * ln_gamma_pos(1.0 - x).exp() / PI
}

/// ln(Γ(x+c)/Γ(x)) for x > 0, x + c > 0.
pub fn ln_gamma_ratio(x: f64, c: f64) -> Result<f64> {
    if !(x > 0.0) || !(x + c > 0.0) {
        return domain(format!("gamma_ratio requires x > 0 and x + c > 0, got x = {x}, c = {c}"));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    if x > 1e6 && c.abs() < 1e2 {
        // c ln x + c(c−1)/(2x) − c(c−1)(2c−1)/(12x²) + c²(c−1)²/(12x³)
        let cc = c * (c - 1.0);
        let r = 1.0 / x;
        return Ok(c * x.ln() + r * (cc / 2.0 - r * (cc * (2.0 * c - 1.0) / 12.0 - r * cc * cc / 12.0)));
    }
    let y = x + c;
    if x >= SHIFT && y >= SHIFT {
        // Stirling difference, arranged to avoid cancelling two large logs.
        let main = (x - 0.5) * (c / x).ln_1p() + c * y.ln() - c;
        return Ok(main + stirling_series(y) - stirling_series(x));
    }
    Ok(ln_gamma_pos(y) - ln_gamma_pos(x))
}

/// Γ(x+c)/Γ(x) for x > 0, x + c > 0; negative c is allowed.
pub fn gamma_ratio(x: f64, c: f64) -> Result<f64> {
    ln_gamma_ratio(x, c).map(f64::exp)
}

/// Digamma ψ₀(x), x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("digamma requires x > 0, got {x}"));
    }
    let mut z = x;
    let mut acc = 0.0;
    while z < SHIFT {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let r = 1.0 / (z * z);
    let mut series = 0.0;
    for (k, &b) in BERNOULLI.iter().enumerate().rev() {
        series = series * r + b / (2.0 * (k as f64 + 1.0));
    }
    Ok(acc + z.ln() - 0.5 / z - series * r)
}

/// Trigamma ψ₁(x), x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("trigamma requires x > 0, got {x}"));
    }
    let mut z = x;
    let mut acc = 0.0;
    while z < SHIFT {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let r = 1.0 / (z * z);
    let mut series = 0.0;
    for &b in BERNOULLI.iter().rev() {
        series = series * r + b;
    }
    Ok(acc + 1.0 / z + 0.5 * r + series * r / z)
}

/// ψ₀(x + c) − ψ₀(x) without cancellation at large x.
pub fn digamma_diff(x: f64, c: f64) -> Result<f64> {
    if x > 1e4 * c.abs().max(1.0) {
        let cc = c * (c - 1.0);
        let r = 1.0 / x;
        return Ok(r * (c - r * (cc / 2.0 - r * (cc * (2.0 * c - 1.0) / 6.0 - r * cc * cc / 4.0))));
    }
    Ok(digamma(x + c)? - digamma(x)?)
}

/// ψ₁(x + c) − ψ₁(x) without cancellation at large x.
pub fn trigamma_diff(x: f64, c: f64) -> Result<f64> {
    if x > 1e4 * c.abs().max(1.0) {
        let cc = c * (c - 1.0);
        let r = 1.0 / x;
        return Ok(r * r * (-c + r * (cc - r * (cc * (2.0 * c - 1.0) / 2.0 - r * cc * cc))));
    }
    Ok(trigamma(x + c)? - trigamma(x)?)
}

/// Exponential integral E₁(x) = ∫ₓ^∞ e^{−t}/t dt, x > 0.
pub fn exp_int_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("E1 requires x > 0, got {x}"));
    }
    if x <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(-EULER_GAMMA - x.ln() + sum);
    }
    // Modified Lentz on the continued fraction for e^x E₁(x).
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h * (-x).exp());
        }
    }
    Err(Error::NumericFailure { what: "E1 continued fraction".into(), estimate: f64::NAN })
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || x < 0.0 {
        return domain(format!("gamma_p requires a > 0, x >= 0, got a = {a}, x = {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let lnpre = a * x.ln() - x - ln_gamma_pos(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..1000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        return Ok((sum.ln() + lnpre).exp().min(1.0));
    }
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
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
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok((1.0 - (lnpre.exp() * h)).max(0.0))
}

/// The lower real branch W₋₁ on [−1/e, 0).
pub fn lambert_w_minus1(y: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if !(y < 0.0) || y < branch - 1e-15 {
        return domain(format!("W_-1 requires -1/e <= y < 0, got {y}"));
    }
    let q = 1.0 + std::f64::consts::E * y;
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let mut w = if y < -0.25 {
        // Series about the branch point in p = −√(2(1 + e y)).
        let p = -(2.0 * q).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    } else {
        let l1 = (-y).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).min(-1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * w.abs();
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn beta_ratio(z: f64, b: f64) -> Result<f64> {
    // Γ(z)/Γ(z+b)
    if z + b > 0.0 {
        Ok((-ln_gamma_ratio(z, b)?).exp())
    } else {
        Ok(gamma(z)? * rgamma(z + b))
    }
}

/// Both sides of the identity
/// (1/Γ(b)) ∫₀¹ (1 − uˣ) u^{a−1} (1 − u)^{b−1} du = Γ(a)/Γ(a+b) − Γ(x+a)/Γ(x+a+b).
pub fn beta_tail_identity(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(b > -1.0) || !(x >= 0.0) {
        return domain(format!("beta_tail_identity requires a > 0, b > -1, x >= 0; got ({a}, {b}, {x})"));
    }
    let rhs = beta_ratio(a, b)? - beta_ratio(x + a, b)?;
    if x == 0.0 || b == 0.0 {
        return Ok((0.0, rhs));
    }
    // With u = w^{1/a} the weight u^{a−1}du becomes dw/a; the remaining
    // endpoint behaviour at w = 1 is (1 − w)^b, removed by a power substitution.
    let tol = Tolerance::rel(1e-12).with_abs(1e-15);
    let body = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let lw = w.ln();
        let one_minus_ux = -(lw * x / a).exp_m1();
        let one_minus_u = -(lw / a).exp_m1();
        one_minus_ux * one_minus_u.powf(b - 1.0) / a
    };
    let left = integrate(body, 0.0, 0.5, tol)?.value;
    let near_one = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let lw = (-s).ln_1p();
        let one_minus_ux = -(lw * x / a).exp_m1();
        let one_minus_u = -(lw / a).exp_m1();
        one_minus_ux * one_minus_u.powf(b - 1.0) / a
    };
    let right = integrate_left_power(near_one, 0.0, 0.5, b, tol)?.value;
    Ok(((left + right) * rgamma(b), rhs))
}
