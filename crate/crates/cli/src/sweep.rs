//! Grid sweeps driven by a JSON config.

use std::path::{Path, PathBuf};

use ckn_core::energy::{bounds, zhat};
use ckn_core::minimizer::estimate_cbe;
use ckn_core::params::{curve_constants, region_of, Region};
use ckn_core::spectrum::{eigenvalue_closed, spectral_gap};
use ckn_core::{make_params, CknParams, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    fn validate(&self, what: &str) -> Result<()> {
        if self.steps < 1 || !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::Config(format!("{what} range needs finite min <= max and steps >= 1")));
        }
        Ok(())
    }

    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + i as f64 * h).collect()
    }
}

/// `absolute`: `b` taken from the range; `offset`: `b = b_FS(a) + value`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BRule {
    Absolute(Range),
    Offset(Range),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Region,
    Spectrum,
    Gap,
    Bounds,
    Zhat,
    Minimize,
}

impl Task {
    fn columns(self) -> &'static [&'static str] {
        match self {
            Task::Region => &["p"],
            Task::Spectrum => &["lambda_02", "lambda_10", "lambda_11"],
            Task::Gap => &["lambda_star"],
            Task::Bounds => &["bound_two_bubble", "effective_bound"],
            Task::Zhat => &["zhat"],
            Task::Minimize => &["q_best"],
        }
    }

    fn eval(self, p: &CknParams, seed: u64, starts: usize) -> Result<Vec<f64>> {
        Ok(match self {
            Task::Region => vec![p.p],
            Task::Spectrum => vec![
                eigenvalue_closed(p, 0, 2).lambda,
                eigenvalue_closed(p, 1, 0).lambda,
                eigenvalue_closed(p, 1, 1).lambda,
            ],
            Task::Gap => vec![spectral_gap(p).lambda_star],
            Task::Bounds => {
                let b = bounds(p);
                vec![b.bound_two_bubble, b.effective_bound]
            }
            Task::Zhat => vec![zhat(p).value],
            Task::Minimize => vec![estimate_cbe(p, starts, seed)?.value],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "N")]
    pub n: u32,
    pub a: Range,
    pub b: BRule,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub seed: u64,
    /// Random starts per point for the `minimize` task.
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_starts() -> usize {
    1
}

struct Row {
    n: u32,
    a: f64,
    b: f64,
    region: Region,
    values: Vec<f64>,
}

fn points(spec: &SweepSpec) -> Result<Vec<(f64, f64)>> {
    spec.a.validate("a")?;
    let rule = match spec.b {
        BRule::Absolute(r) | BRule::Offset(r) => r,
    };
    rule.validate("b")?;
    if spec.n < 2 {
        return Err(Error::Invalid(format!("N >= 2 violated (N = {})", spec.n)));
    }
    let curves = curve_constants(spec.n);
    let mut out = Vec::new();
    for a in spec.a.values() {
        for v in rule.values() {
            let b = match spec.b {
                BRule::Absolute(_) => v,
                BRule::Offset(_) => curves.b_fs(a) + v,
            };
            out.push((a, b));
        }
    }
    Ok(out)
}

fn evaluate(spec: &SweepSpec, tasks: &[Task]) -> Result<Vec<Row>> {
    points(spec)?
        .into_par_iter()
        .map(|(a, b)| {
            let region = region_of(spec.n, a, b).region;
            let values = match make_params(spec.n, a, b) {
                Ok(p) => {
                    let mut vals = Vec::new();
                    for t in tasks {
                        vals.extend(t.eval(&p, spec.seed, spec.starts)?);
                    }
                    vals
                }
                Err(_) => Vec::new(),
            };
            Ok(Row { n: spec.n, a, b, region, values })
        })
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(columns: &[&str], rows: &[Row]) -> Result<Vec<u8>> {
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["N", "a", "b", "region"];
    header.extend_from_slice(columns);
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![r.n.to_string(), fmt(r.a), fmt(r.b), r.region.as_str().to_string()];
        rec.extend((0..columns.len()).map(|k| r.values.get(k).map(|x| fmt(*x)).unwrap_or_default()));
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

fn json_rows(columns: &[&str], rows: &[Row]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("N".into(), json!(r.n));
                m.insert("a".into(), json!(r.a));
                m.insert("b".into(), json!(r.b));
                m.insert("region".into(), json!(r.region.as_str()));
                for (k, c) in columns.iter().enumerate() {
                    m.insert((*c).into(), json!(r.values.get(k)));
                }
                Value::Object(m)
            })
            .collect(),
    )
}

pub fn load(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad sweep config: {e}")))
}

/// Runs the sweep; prints the table itself when no output path is set, else returns a summary.
pub fn run(path: &Path) -> Result<Option<Value>> {
    let spec = load(path)?;
    let mut tasks = spec.tasks.clone();
    tasks.sort();
    tasks.dedup();
    if tasks.is_empty() {
        return Err(Error::Config("sweep needs at least one task".into()));
    }
    let columns: Vec<&str> = tasks.iter().flat_map(|t| t.columns().iter().copied()).collect();
    let rows = evaluate(&spec, &tasks)?;
    let bytes = match spec.format {
        Format::Csv => csv_bytes(&columns, &rows)?,
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&json_rows(&columns, &rows)).expect("rows serialize");
            b.push(b'\n');
            b
        }
    };
    let Some(out) = &spec.output else {
        use std::io::Write;
        std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Error::Config(format!("cannot write to stdout: {e}")))?;
        return Ok(None);
    };
    std::fs::write(out, &bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?;
    let valid = rows.iter().filter(|r| !matches!(r.region, Region::Invalid | Region::DegenerateBoundary)).count();
    Ok(Some(json!({
        "output": out.display().to_string(),
        "format": spec.format,
        "columns": columns,
        "rows": rows.len(),
        "valid_rows": valid,
    })))
}
