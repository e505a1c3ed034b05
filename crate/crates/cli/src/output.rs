use std::fs::File;
use std::io::{BufWriter, Write};

use subexp::levy::LevyModel;
use subexp::model_file::ModelSpec;

use crate::{CliError, Common};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Loaded {
    pub spec: ModelSpec,
    pub model: LevyModel,
}

pub fn load(common: &Common) -> Result<Loaded, CliError> {
    let spec = ModelSpec::load(&common.model)?;
    let model = spec.to_model()?;
    Ok(Loaded { spec, model })
}

pub fn sink(common: &Common) -> Result<Box<dyn Write>, CliError> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Metadata every output carries so that it can be re-run.
pub fn metadata(loaded: &Loaded, command: &str, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![
        ("command".to_string(), command.to_string()),
        ("version".to_string(), VERSION.to_string()),
        ("model_hash".to_string(), loaded.spec.hash()),
        ("model".to_string(), loaded.spec.canonical_json()),
    ];
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

pub fn write_header(w: &mut dyn Write, meta: &[(String, String)]) -> Result<(), CliError> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// CSV with `#` metadata lines; `None` cells are left empty.
pub fn write_table(w: &mut dyn Write, meta: &[(String, String)], columns: &[&str], rows: &[Vec<Option<f64>>]) -> Result<(), CliError> {
    write_header(w, meta)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(|v| format!("{v:.17e}")).unwrap_or_default()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(w: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(subexp::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n).map(|i| lo * (r * i as f64 / (n - 1) as f64).exp()).collect()
}
