//! CSV artifacts: a block of `# key=value` metadata lines, a header and
//! numeric rows.

use crate::error::{CliError, CliResult};
use sbm_core::localtime::LocalTimeProfile;
use sbm_core::rayknight::RKProfile;
use sbm_core::sim::Path;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Read, Write};

/// Ordered `key=value` pairs written as `#` comment lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// A parsed CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn write_table<W: Write>(
    mut out: W,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> CliResult<()> {
    for (k, v) in &meta.0 {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(mut input: R) -> CliResult<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut meta = Metadata::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                meta.push(k.trim(), v.trim());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Io(format!("non-numeric cell '{s}'")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { meta, header, rows })
}

/// Opens `path` for writing, or standard output when `None`.
pub fn output(path: Option<&std::path::Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

/// `t,w` rows of a path.
pub fn write_path<W: Write>(out: W, meta: &Metadata, path: &Path) -> CliResult<()> {
    let rows = path
        .times()
        .iter()
        .zip(path.values())
        .map(|(&t, &w)| vec![t, w]);
    write_table(out, meta, &["t", "w"], rows)
}

/// `x,value` rows of a local-time profile.
pub fn write_profile<W: Write>(out: W, meta: &Metadata, prof: &LocalTimeProfile) -> CliResult<()> {
    let meta = meta
        .clone()
        .with("normalization", prof.normalization.name())
        .with("epsilon", prof.epsilon)
        .with("t", prof.t);
    let rows = prof.xs.iter().zip(&prof.values).map(|(&x, &v)| vec![x, v]);
    write_table(out, &meta, &["x", "value"], rows)
}

/// A synthesized profile in the local-time profile layout, with the
/// endpoint, the drawn `ℓ(τ,0)` and the kind set added to the metadata.
pub fn write_rk_profile<W: Write>(out: W, meta: &Metadata, prof: &RKProfile) -> CliResult<()> {
    let meta = meta
        .clone()
        .with("normalization", prof.normalization.name())
        .with("lambda", prof.lambda)
        .with("dh", prof.dh)
        .with("z", prof.z)
        .with("v0", prof.v0)
        .with("kind", prof.family.name());
    let rows = prof.xs.iter().zip(&prof.values).map(|(&x, &v)| vec![x, v]);
    write_table(out, &meta, &["x", "value"], rows)
}
