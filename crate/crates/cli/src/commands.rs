use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use serde::Serialize;
use subexp::asymptotics::{closed_form, closed_form_density, density_log_asym, tail_log_asym};
use subexp::fixed_point::{density_from_fprime, iterate_to_fprime, verify_integral_equation, GridSpec};
use subexp::monte_carlo::{sample_i, write_samples, SampleSummary, SchemeKind, SimScheme};
use subexp::psi::PsiEvaluator;
use subexp::Error;

use crate::output::{geometric, load, metadata, sink, write_json, write_table};
use crate::{CliError, Common};

fn list_meta(t: &[f64]) -> String {
    t.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

pub fn phi(common: &Common, t: Option<Vec<f64>>) -> Result<(), CliError> {
    let loaded = load(common)?;
    let m = &loaded.model;
    let xs = t.unwrap_or_else(|| geometric(1e-3, 1e3, 25));
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (p, d) = (m.phi(x)?, m.phi_derivative(x, 1)?);
        rows.push(vec![Some(x), Some(p), Some(d), Some(x * d / p)]);
    }
    let meta = metadata(&loaded, "phi", &[]);
    write_table(&mut *sink(common)?, &meta, &["x", "phi", "phi_prime", "x_phi_prime_over_phi"], &rows)
}

fn evaluator(m: &subexp::levy::LevyModel, tol: Option<f64>) -> Result<PsiEvaluator, CliError> {
    let ev = PsiEvaluator::new(m.clone())?;
    Ok(match tol {
        Some(tol) => ev.with_root_tolerance(tol)?,
        None => ev,
    })
}

pub fn psi(common: &Common, t: Option<Vec<f64>>, tol: Option<f64>) -> Result<(), CliError> {
    let loaded = load(common)?;
    let ev = evaluator(&loaded.model, tol)?;
    let t0 = ev.integral_origin();
    let ts = t.unwrap_or_else(|| geometric(t0, 1e3 * t0, 25));
    let mut rows = Vec::with_capacity(ts.len());
    for &x in &ts {
        let v = ev.values(x)?;
        let integral = if x >= t0 { Some(ev.exponent_integral(x)?) } else { None };
        rows.push(vec![Some(x), Some(v.psi), Some(v.d1), Some(v.d2), integral]);
    }
    let meta = metadata(&loaded, "psi", &[("root_tolerance", format!("{:e}", ev.root_tolerance()))]);
    write_table(&mut *sink(common)?, &meta, &["t", "psi", "psi_prime", "psi_second", "exponent_integral"], &rows)
}

pub fn tail(common: &Common, t: Option<Vec<f64>>) -> Result<(), CliError> {
    let loaded = load(common)?;
    let ev = evaluator(&loaded.model, None)?;
    let t0 = ev.integral_origin();
    let ts = t.unwrap_or_else(|| geometric(2.0 * t0, 100.0 * t0, 20));
    let (form, dform) = match (closed_form(&loaded.model), closed_form_density(&loaded.model)) {
        (Ok(f), Ok(d)) => (Some(f), Some(d)),
        (Err(Error::Unsupported(_)), _) | (_, Err(Error::Unsupported(_))) => (None, None),
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    let mut rows = Vec::with_capacity(ts.len());
    for &x in &ts {
        let cf = form.as_ref().map(|f| f.log_value(x)).transpose()?;
        let cd = dform.as_ref().map(|f| f.log_value(x)).transpose()?;
        rows.push(vec![Some(x), Some(tail_log_asym(&ev, x)?), Some(density_log_asym(&ev, x)?), cf, cd]);
    }
    let json = |f: &Option<subexp::asymptotics::AsymptoticForm>| match f {
        Some(f) => serde_json::to_string(f).map_err(Error::from),
        None => Ok("unsupported".to_string()),
    };
    let meta = metadata(
        &loaded,
        "tail",
        &[
            ("root_tolerance", format!("{:e}", ev.root_tolerance())),
            ("closed_form", json(&form)?),
            ("closed_form_density", json(&dform)?),
        ],
    );
    write_table(
        &mut *sink(common)?,
        &meta,
        &["t", "tail_log_asym", "density_log_asym", "closed_form_log_tail", "closed_form_log_density"],
        &rows,
    )
}

/// Point past which the tail is below e^{−30}, from the ψ asymptotics.
fn default_x_hi(ev: &PsiEvaluator) -> Result<f64, CliError> {
    let mut t = 2.0 * ev.integral_origin();
    while tail_log_asym(ev, t)? > -30.0 {
        t *= 1.5;
        if t > 1e8 {
            return Err(Error::Config("cannot place the right grid edge; pass --x-hi".into()).into());
        }
    }
    Ok(2.0 * t)
}

pub fn density(common: &Common, grid: usize, tol: f64, x_lo: Option<f64>, x_hi: Option<f64>, max_iter: usize) -> Result<(), CliError> {
    let loaded = load(common)?;
    let m = &loaded.model;
    let x_lo = x_lo.unwrap_or(0.01);
    let x_hi = match x_hi {
        Some(x) => x,
        None => default_x_hi(&evaluator(m, None)?)?,
    };
    let spec = GridSpec::new(x_lo, x_hi, grid)?;
    let fp = iterate_to_fprime(m, spec, 0.5, tol, max_iter)?;
    let d = density_from_fprime(&fp.g)?;
    let residual = verify_integral_equation(&d.k, m)?;
    eprintln!(
        "fixed point: {} iterations, converged = {}, step residual {:.3e}; integral-equation residual {:.3e}; raw mass {:.6}",
        fp.iterations, fp.converged, fp.residual, residual, d.raw_mass
    );
    if let Some(w) = &d.warning {
        eprintln!("warning: {w}");
    }
    let surv = d.survival();
    let rows: Vec<Vec<Option<f64>>> = (0..fp.g.len())
        .map(|i| vec![Some(fp.g.grid[i]), Some(fp.g.values[i]), Some(d.k.values[i]), Some(surv[i])])
        .collect();
    let meta = metadata(
        &loaded,
        "density",
        &[
            ("grid", format!("[{x_lo}, {x_hi}] x {grid}")),
            ("tol", format!("{tol:e}")),
            ("iterations", fp.iterations.to_string()),
            ("converged", fp.converged.to_string()),
            ("kappa_hat", format!("{}", fp.kappa_hat)),
            ("integral_equation_residual", format!("{residual:e}")),
            ("raw_mass", format!("{}", d.raw_mass)),
        ],
    );
    write_table(&mut *sink(common)?, &meta, &["x", "fprime", "k", "survival"], &rows)
}

#[derive(Serialize)]
struct SimulateOutput {
    command: &'static str,
    version: &'static str,
    model_hash: String,
    model: serde_json::Value,
    scheme: SimScheme,
    summary: SampleSummary,
}

pub fn simulate(
    common: &Common,
    n: usize,
    seed: u64,
    eps: Option<f64>,
    exact: bool,
    t: Option<Vec<f64>>,
    raw: Option<PathBuf>,
) -> Result<(), CliError> {
    let loaded = load(common)?;
    let scheme = scheme_for(&loaded.model, eps, exact)?;
    let samples = sample_i(&loaded.model, &scheme, n, seed)?;
    if let Some(p) = raw {
        write_samples(BufWriter::new(File::create(p)?), &samples)?;
    }
    let t = t.unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0]);
    let summary = SampleSummary::from_samples(&samples, seed, scheme.eps, &t)?;
    let out = SimulateOutput {
        command: "simulate",
        version: crate::output::VERSION,
        model_hash: loaded.spec.hash(),
        model: serde_json::to_value(&loaded.spec).map_err(Error::from)?,
        scheme,
        summary,
    };
    eprintln!("simulated {n} replicates (t = {})", list_meta(&t));
    write_json(&mut *sink(common)?, &out)
}

pub fn scheme_for(model: &subexp::levy::LevyModel, eps: Option<f64>, exact: bool) -> Result<SimScheme, CliError> {
    if exact {
        return Ok(SimScheme::exact());
    }
    let mut s = SimScheme::for_model(model)?;
    if let Some(e) = eps {
        if s.kind != SchemeKind::CompensatedPath {
            return Err(Error::Config("--eps applies only to infinite Levy measures".into()).into());
        }
        s.eps = e;
    }
    Ok(s)
}

pub fn moments(common: &Common, n: usize) -> Result<(), CliError> {
    let loaded = load(common)?;
    let mom = loaded.model.exact_moments(n)?;
    let rows: Vec<Vec<Option<f64>>> = mom.iter().map(|m| vec![Some(m.order as f64), Some(m.value()), Some(m.ln_value)]).collect();
    let meta = metadata(&loaded, "moments", &[("n_max", n.to_string())]);
    write_table(&mut *sink(common)?, &meta, &["order", "moment", "ln_moment"], &rows)
}
