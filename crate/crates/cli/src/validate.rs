use serde::Serialize;
use subexp::asymptotics::{closed_form, tail_log_asym};
use subexp::monte_carlo::{
    exact_sampler_special, fit_c_i, fit_constant, ks_two_sample, moment, sample_i, scheme_moments, tail_slope, SimScheme, SpecialCase,
};
use subexp::psi::PsiEvaluator;
use subexp::Error;

use crate::commands::scheme_for;
use crate::output::{load, sink, write_json, VERSION};
use crate::{CliError, Common};

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: serde_json::Value,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    version: &'static str,
    model_hash: String,
    model: serde_json::Value,
    n: usize,
    seed: u64,
    scheme: SimScheme,
    t_window: Vec<f64>,
    checks: Vec<Check>,
    passed: bool,
}

/// Exceedances wanted at the top of an automatic window.
const TOP_EXCEEDANCES: usize = 400;

fn auto_window(sorted: &[f64], t_min: f64) -> Result<Vec<f64>, CliError> {
    let n = sorted.len();
    if n < 10 * TOP_EXCEEDANCES {
        return Err(Error::StatisticalPower(format!("need at least {} samples for an automatic window", 10 * TOP_EXCEEDANCES)).into());
    }
    let lo = sorted[n - n / 100].max(t_min);
    let hi = sorted[n - TOP_EXCEEDANCES];
    if !(hi > lo) {
        return Err(Error::StatisticalPower(format!("sample too small to reach past t = {t_min}")).into());
    }
    Ok((0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect())
}

pub fn validate(common: &Common, n: usize, seed: u64, eps: Option<f64>, t: Option<Vec<f64>>) -> Result<(), CliError> {
    let loaded = load(common)?;
    let model = &loaded.model;
    let scheme = scheme_for(model, eps, false)?;
    let samples = sample_i(model, &scheme, n, seed)?;
    let mut checks = Vec::new();

    // Moments against n!/∏φ(i), allowing for the small-jump truncation bias.
    let exact = model.exact_moments(2)?;
    let (s1, s2) = scheme_moments(model, &scheme)?;
    for (order, want, simulated) in [(1u32, exact[0].value(), s1), (2, exact[1].value(), s2)] {
        let est = moment(&samples, order)?;
        let bias = (simulated - want).abs();
        let band = 3.0 * est.std_error + bias;
        checks.push(Check {
            name: format!("moment_{order}"),
            passed: (est.mean - want).abs() <= band,
            detail: serde_json::json!({"estimate": est.mean, "std_error": est.std_error, "exact": want, "truncation_bias": bias}),
        });
    }

    for case in SpecialCase::detect(model) {
        let arm = n.min(100_000);
        let a = exact_sampler_special(model, case, arm, seed ^ 0x5eed)?;
        let b = if arm == n { samples.clone() } else { samples[..arm].to_vec() };
        let ks = ks_two_sample(&a, &b)?;
        checks.push(Check {
            name: format!("ks_{}", serde_json::to_value(case).ok().and_then(|v| v.as_object().and_then(|o| o.keys().next().cloned())).unwrap_or_default()),
            passed: ks.passes(),
            detail: serde_json::to_value(ks).map_err(Error::from)?,
        });
    }

    let ev = PsiEvaluator::new(model.clone())?;
    let t_min = 1.01 * ev.integral_origin();
    let window = match t {
        Some(w) => w,
        None => {
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            auto_window(&sorted, t_min)?
        }
    };
    let (t1, t2) = (window[0], *window.last().expect("window"));

    let slope = tail_slope(&samples, t1, t2)?;
    let theory = (tail_log_asym(&ev, t1)? - tail_log_asym(&ev, t2)?) / (t2 - t1);
    checks.push(Check {
        name: "tail_slope".into(),
        passed: (slope.slope - theory).abs() <= slope.half_width,
        detail: serde_json::json!({"t1": t1, "t2": t2, "estimate": slope.slope, "half_width_99": slope.half_width, "theory": theory}),
    });

    let fit = fit_c_i(&ev, &samples, &window)?;
    checks.push(Check {
        name: "c_I_fit".into(),
        passed: fit.slope_z.abs() < 3.0 && fit.c_hat.is_finite() && fit.c_hat > 0.0,
        detail: serde_json::to_value(&fit).map_err(Error::from)?,
    });

    // Where the explicit form carries a known constant, compare with it.
    if let Ok(form) = closed_form(model) {
        if let Some(c) = form.constant {
            let explicit = fit_constant(&samples, &window, |t| form.log_value(t))?;
            let rel = explicit.std_error / explicit.c_hat;
            let passed = (explicit.c_hat / c).ln().abs() <= 1.25f64.ln() + 3.0 * rel;
            eprintln!("explicit-form constant: c_I = {:.4} +- {:.4} (known {c:.6})", explicit.c_hat, explicit.std_error);
            checks.push(Check {
                name: "c_I_explicit".into(),
                passed,
                detail: serde_json::json!({"c_hat": explicit.c_hat, "std_error": explicit.std_error, "known": c, "slope_z": explicit.slope_z}),
            });
        }
    }

    for c in &checks {
        eprintln!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let report = Report {
        command: "validate",
        version: VERSION,
        model_hash: loaded.spec.hash(),
        model: serde_json::to_value(&loaded.spec).map_err(Error::from)?,
        n,
        seed,
        scheme,
        t_window: window,
        passed: failed.is_empty(),
        checks,
    };
    write_json(&mut *sink(common)?, &report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}
