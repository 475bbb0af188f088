//! Declarative experiments: a JSON config names a system, a size, a grid and
//! the analyses to run; results are flat tables with provenance.
//!
//! Output files carry no timings or host details, so a rerun with the same
//! seed reproduces them byte for byte at any worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{invalid, ensure, Error, Result};
use crate::estimator::{self, Def2Objective, PsiEstimate, DEF2_RANGE, DEFAULT_REPLICATES, MIN_REPLICATES};
use crate::numeric::format_sig;
use crate::reference;
use crate::systems::{build_system, SeriesSystem, SystemSpec};

/// Significant digits of every number written to a result file.
pub const DIGITS: usize = 10;
/// Seed used when neither the command line, the config nor `EXTLAB_SEED` sets one.
pub const DEFAULT_SEED: u64 = 20_160_101;
pub const SEED_ENV: &str = "EXTLAB_SEED";
pub const CSV_HEADER: [&str; 6] = ["s", "u_n", "psi_hat", "stderr", "psi_ref", "z"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Psi,
    PartialIndices,
    Def2Fit,
    TailIndices,
    Compare,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn all_analyses() -> Vec<Analysis> {
    vec![
        Analysis::Psi,
        Analysis::PartialIndices,
        Analysis::Def2Fit,
        Analysis::TailIndices,
        Analysis::Compare,
    ]
}

fn default_theta_range() -> (f64, f64) {
    DEF2_RANGE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub n: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "estimator::default_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "all_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_theta_range")]
    pub theta_range: (f64, f64),
}

impl ExperimentConfig {
    pub fn new(system: SystemSpec, n: u64) -> Self {
        Self {
            system,
            n,
            replicates: DEFAULT_REPLICATES,
            s_grid: estimator::default_grid(),
            seed: None,
            analyses: all_analyses(),
            format: OutputFormat::Csv,
            theta_range: DEF2_RANGE,
        }
    }

    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<SeriesSystem> {
        ensure(self.replicates >= MIN_REPLICATES, "replicates", || {
            format!("replicates below minimum {MIN_REPLICATES}, got {}", self.replicates)
        })?;
        estimator::validate_grid(&self.s_grid)?;
        if self.wants(Analysis::TailIndices) {
            let (lo, hi) = (self.s_grid[0], self.s_grid[self.s_grid.len() - 1]);
            ensure(lo <= 0.05 + 1e-12 && hi >= 0.95 - 1e-12, "s_grid", || {
                format!("tail_indices needs s_min <= 0.05 and s_max >= 0.95, got [{lo}, {hi}]")
            })?;
        }
        let (lo, hi) = self.theta_range;
        ensure(lo > 0.0 && lo < hi && hi.is_finite(), "theta_range", || {
            format!("must satisfy 0 < lo < hi < inf, got [{lo}, {hi}]")
        })?;
        let sys = build_system(&self.system)?;
        sys.check_n(self.n)?;
        Ok(sys)
    }

    /// SHA-256 of the canonical JSON form (with the resolved seed).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A config error with the line of the offending key, when it can be found.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub error: Error,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let quoted = format!("\"{leaf}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// Parses and validates a config, locating errors by line.
pub fn parse_config(text: &str) -> std::result::Result<(ExperimentConfig, SeriesSystem), ConfigError> {
    parse_config_with(text, |_| {})
}

/// As [`parse_config`], applying command-line overrides before validation.
pub fn parse_config_with(
    text: &str,
    overrides: impl FnOnce(&mut ExperimentConfig),
) -> std::result::Result<(ExperimentConfig, SeriesSystem), ConfigError> {
    let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
        line: Some(e.line()).filter(|l| *l > 0),
        error: Error::Json(e),
    })?;
    overrides(&mut cfg);
    let sys = cfg.validate().map_err(|error| {
        let line = match &error {
            Error::InvalidParameter { name, .. } => key_line(text, name),
            _ => key_line(text, "system"),
        };
        ConfigError { line, error }
    })?;
    Ok((cfg, sys))
}

/// `--seed`, then the config, then `EXTLAB_SEED`, then [`DEFAULT_SEED`].
pub fn resolve_seed(cli: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = cli.or(config) {
        return Ok(s);
    }
    match env.map(str::trim).filter(|v| !v.is_empty()) {
        Some(v) => v
            .parse()
            .map_err(|_| invalid("EXTLAB_SEED", format!("not an unsigned integer: {v:?}"))),
        None => Ok(DEFAULT_SEED),
    }
}

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter { .. } | Error::Unsupported(_) | Error::Budget(_) | Error::Json(_) => 2,
        Error::Solver(_) | Error::Undefined(_) => 3,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

/// A number rounded to [`DIGITS`] significant digits; infinities are written
/// as `inf`, missing values as empty (CSV) or `null` (JSON).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub Option<f64>);

impl Num {
    pub fn text(&self) -> String {
        match self.0 {
            Some(x) if !x.is_nan() => format_sig(x, DIGITS),
            _ => String::new(),
        }
    }

    fn parse(text: &str) -> Num {
        match text.trim() {
            "" | "null" => Num(None),
            "inf" => Num(Some(f64::INFINITY)),
            "-inf" => Num(Some(f64::NEG_INFINITY)),
            t => Num(t.parse().ok()),
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(x) if x.is_finite() => s.serialize_f64(format_sig(x, DIGITS).parse().expect("formatted number")),
            Some(x) if x.is_infinite() => s.serialize_str(if x > 0.0 { "inf" } else { "-inf" }),
            _ => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Value::deserialize(d)? {
            Value::Number(n) => Num(n.as_f64()),
            Value::String(s) => Num::parse(&s),
            _ => Num(None),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub s: Num,
    pub u_n: Num,
    pub psi_hat: Num,
    pub stderr: Num,
    pub psi_ref: Num,
    pub z: Num,
}

/// A summary value: a number or a short label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SummaryValue {
    Num(Num),
    Text(String),
}

impl SummaryValue {
    fn text(&self) -> String {
        match self {
            SummaryValue::Num(n) => n.text(),
            SummaryValue::Text(t) => t.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SummaryValue::Num(n) => n.0,
            SummaryValue::Text(t) => Num::parse(t).0,
        }
    }
}

/// Everything a run writes: provenance, one row per grid point, summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub provenance: Vec<(String, String)>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<(String, SummaryValue)>,
}

impl RunOutput {
    pub fn summary_value(&self, key: &str) -> Option<&SummaryValue> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary_value(key).and_then(SummaryValue::as_f64)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            writeln!(out, "# {k}={v}").expect("write to string");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([&r.s, &r.u_n, &r.psi_hat, &r.stderr, &r.psi_ref, &r.z].map(Num::text))?;
        }
        let table = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(table).expect("ascii table"));
        for (k, v) in &self.summary {
            writeln!(out, "# summary.{k}={}", v.text()).expect("write to string");
        }
        Ok(out)
    }

    fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: BTreeMap<&'a str, &'a str>,
            rows: &'a [ResultRow],
            summary: Vec<(&'a str, &'a SummaryValue)>,
        }
        let doc = Doc {
            provenance: self.provenance.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
            rows: &self.rows,
            summary: self.summary.iter().map(|(k, v)| (k.as_str(), v)).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    /// Reads either format back.
    pub fn parse(text: &str) -> Result<RunOutput> {
        if text.trim_start().starts_with('{') {
            return Self::parse_json(text);
        }
        let mut provenance = Vec::new();
        let mut summary = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once('=').unwrap_or((rest, ""));
                match k.strip_prefix("summary.") {
                    Some(key) => summary.push((key.to_string(), summary_from_text(v))),
                    None => provenance.push((k.to_string(), v.to_string())),
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        ensure(header.iter().eq(CSV_HEADER), "header", || {
            format!("expected {}, got {}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","))
        })?;
        let rows = reader
            .records()
            .map(|rec| {
                let rec = rec?;
                let f = |i: usize| Num::parse(rec.get(i).unwrap_or(""));
                Ok(ResultRow {
                    s: f(0),
                    u_n: f(1),
                    psi_hat: f(2),
                    stderr: f(3),
                    psi_ref: f(4),
                    z: f(5),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RunOutput {
            provenance,
            rows,
            summary,
        })
    }

    fn parse_json(text: &str) -> Result<RunOutput> {
        #[derive(Deserialize)]
        struct Doc {
            provenance: BTreeMap<String, String>,
            rows: Vec<ResultRow>,
            summary: Vec<(String, Value)>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        Ok(RunOutput {
            provenance: doc.provenance.into_iter().collect(),
            rows: doc.rows,
            summary: doc
                .summary
                .into_iter()
                .map(|(k, v)| {
                    let value = match v {
                        Value::String(s) if s == "inf" || s == "-inf" => SummaryValue::Num(Num::parse(&s)),
                        Value::String(s) => SummaryValue::Text(s),
                        Value::Number(n) => SummaryValue::Num(Num(n.as_f64())),
                        _ => SummaryValue::Num(Num(None)),
                    };
                    (k, value)
                })
                .collect(),
        })
    }
}

fn summary_from_text(v: &str) -> SummaryValue {
    // labels that merely look numeric (seeds, counts) stay text
    match Num::parse(v) {
        Num(Some(x)) if Num(Some(x)).text() == v => SummaryValue::Num(Num(Some(x))),
        _ if v.is_empty() => SummaryValue::Num(Num(None)),
        _ => SummaryValue::Text(v.to_string()),
    }
}

/// Result of a run plus diagnostics that stay out of the file.
pub struct RunReport {
    pub output: RunOutput,
    pub estimate: PsiEstimate,
    pub warnings: Vec<String>,
}

fn num(x: f64) -> SummaryValue {
    SummaryValue::Num(Num(Some(x)))
}

fn opt(x: Option<f64>) -> SummaryValue {
    SummaryValue::Num(Num(x))
}

/// Runs a validated config with the resolved seed.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<RunReport> {
    let sys = cfg.validate()?;
    let est = estimator::estimate_psi(&sys, cfg.n, &cfg.s_grid, cfg.replicates, seed)?;
    let effective = ExperimentConfig {
        seed: Some(seed),
        ..cfg.clone()
    };

    let model = if cfg.wants(Analysis::Compare) {
        reference::for_system(&cfg.system)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(est.s_grid.len());
    let (mut max_dev, mut max_z): (Option<f64>, Option<f64>) = (None, None);
    for k in 0..est.s_grid.len() {
        let s = est.s_grid[k];
        let psi_ref = model.as_ref().and_then(|m| reference::psi_reference(m, s));
        let z = psi_ref.filter(|_| est.stderr[k] > 0.0).map(|r| (est.psi_hat[k] - r) / est.stderr[k]);
        if let Some(r) = psi_ref {
            max_dev = Some(max_dev.unwrap_or(0.0).max((est.psi_hat[k] - r).abs()));
        }
        if let Some(z) = z {
            max_z = Some(max_z.unwrap_or(0.0).max(z.abs()));
        }
        rows.push(ResultRow {
            s: Num(Some(s)),
            u_n: Num(Some(est.u[k])),
            psi_hat: Num(Some(est.psi_hat[k])),
            stderr: Num(Some(est.stderr[k])),
            psi_ref: Num(psi_ref),
            z: Num(z),
        });
    }

    let mut summary: Vec<(String, SummaryValue)> = Vec::new();
    let mut put = |k: &str, v: SummaryValue| summary.push((k.to_string(), v));
    put("seed", SummaryValue::Text(seed.to_string()));
    put("replicates", SummaryValue::Text(cfg.replicates.to_string()));
    let method = est.curve.entries.first().map(|e| e.method);
    put(
        "normalizer_method",
        SummaryValue::Text(
            method
                .map(|m| serde_json::to_value(m).expect("enum").as_str().unwrap_or("").to_string())
                .unwrap_or_default(),
        ),
    );
    let worst_normalizer = est.curve.entries.iter().map(|e| (e.achieved - e.s).abs()).fold(0.0, f64::max);
    put("normalizer_max_abs_error", num(worst_normalizer));
    let slopes: Vec<f64> = est.log_slopes().into_iter().filter(|x| x.is_finite()).collect();
    put(
        "theta_def1_slope",
        opt((!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64)),
    );
    if cfg.wants(Analysis::PartialIndices) {
        match estimator::partial_indices(&est) {
            Ok((lo, hi)) => {
                put("theta_minus", num(lo));
                put("theta_plus", num(hi));
            }
            Err(Error::Undefined(_)) => {
                put("theta_minus", SummaryValue::Text("undefined".into()));
                put("theta_plus", SummaryValue::Text("undefined".into()));
            }
            Err(e) => return Err(e),
        }
    }
    if cfg.wants(Analysis::TailIndices) {
        let (t0, t1) = estimator::tail_indices(&est)?;
        put("theta0", num(t0));
        put("theta1", t1.map(num).unwrap_or(SummaryValue::Text("undefined".into())));
    }
    if cfg.wants(Analysis::Def2Fit) {
        let fit = Def2Objective::new(&sys, &est, seed)?.fit(cfg.theta_range)?;
        put("theta_def2", num(fit.theta));
        put("def2_discrepancy", num(fit.discrepancy));
    }
    if cfg.wants(Analysis::Compare) {
        put(
            "reference",
            SummaryValue::Text(
                model
                    .as_ref()
                    .map(|m| serde_json::to_string(m).expect("model serializes"))
                    .unwrap_or_else(|| "none".into()),
            ),
        );
        let idx = model.as_ref().map(reference::theta_reference).unwrap_or_default();
        put("ref_theta_def1", opt(idx.theta_def1));
        put("ref_theta_def2", opt(idx.theta_def2));
        put("ref_theta_minus", opt(idx.theta_minus));
        put("ref_theta_plus", opt(idx.theta_plus));
        put("ref_theta0", opt(idx.theta0));
        put("ref_theta1", opt(idx.theta1));
        put("max_abs_dev", opt(max_dev));
        put("max_abs_z", opt(max_z));
    }

    let mut provenance = vec![
        ("tool".to_string(), format!("extlab {}", env!("CARGO_PKG_VERSION"))),
        ("config_hash".to_string(), effective.hash()),
        ("seed".to_string(), seed.to_string()),
        ("system".to_string(), cfg.system.kind_name().to_string()),
        ("n".to_string(), cfg.n.to_string()),
        ("replicates".to_string(), cfg.replicates.to_string()),
    ];
    let warnings = sys.warnings().to_vec();
    for w in &warnings {
        provenance.push(("warning".to_string(), w.clone()));
    }
    Ok(RunReport {
        output: RunOutput {
            provenance,
            rows,
            summary,
        },
        estimate: est,
        warnings,
    })
}

/// Outcome of comparing two result files.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_delta: f64,
    /// `max |Δψ̂| / √(σ_a² + σ_b²)`.
    pub max_abs_z: f64,
    /// Whether `|Δψ̂| ≤ tolerance + sigmas·σ` at every grid point.
    pub within: bool,
    /// Summary keys present as numbers in both files: `(key, a, b, b − a)`.
    pub index_deltas: Vec<(String, f64, f64, f64)>,
    /// `theta_def1_slope − theta_def2` within each file.
    pub def1_def2_gap: (Option<f64>, Option<f64>),
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let g = |x: f64| format_sig(x, DIGITS);
        writeln!(out, "max_abs_delta={}", g(self.max_abs_delta)).unwrap();
        writeln!(out, "max_abs_z={}", g(self.max_abs_z)).unwrap();
        writeln!(out, "within={}", self.within).unwrap();
        for (k, a, b, d) in &self.index_deltas {
            writeln!(out, "delta.{k}={} ({} -> {})", g(*d), g(*a), g(*b)).unwrap();
        }
        let o = |x: Option<f64>| x.map(g).unwrap_or_default();
        writeln!(out, "def1_def2_gap.a={}", o(self.def1_def2_gap.0)).unwrap();
        writeln!(out, "def1_def2_gap.b={}", o(self.def1_def2_gap.1)).unwrap();
        out
    }
}

const NON_INDEX_KEYS: [&str; 3] = ["seed", "replicates", "normalizer_method"];

pub fn compare_outputs(a: &RunOutput, b: &RunOutput, tolerance: f64, sigmas: f64) -> Result<CompareReport> {
    let grid = |o: &RunOutput| o.rows.iter().map(|r| r.s.0).collect::<Vec<_>>();
    if grid(a) != grid(b) {
        return Err(invalid("s_grid", "result files have different grids"));
    }
    let (mut max_delta, mut max_z, mut within) = (0.0f64, 0.0f64, true);
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let (pa, pb) = (ra.psi_hat.0.unwrap_or(f64::NAN), rb.psi_hat.0.unwrap_or(f64::NAN));
        let d = (pa - pb).abs();
        let se = ra.stderr.0.unwrap_or(0.0).hypot(rb.stderr.0.unwrap_or(0.0));
        max_delta = max_delta.max(d);
        if se > 0.0 {
            max_z = max_z.max(d / se);
        } else if d > 0.0 {
            max_z = f64::INFINITY;
        }
        within &= d <= tolerance + sigmas * se;
    }
    let index_deltas = a
        .summary
        .iter()
        .filter(|(k, _)| !NON_INDEX_KEYS.contains(&k.as_str()))
        .filter_map(|(k, va)| {
            let x = va.as_f64()?;
            let y = b.summary_f64(k)?;
            Some((k.clone(), x, y, y - x))
        })
        .collect();
    let gap = |o: &RunOutput| Some(o.summary_f64("theta_def1_slope")? - o.summary_f64("theta_def2")?);
    Ok(CompareReport {
        max_abs_delta: max_delta,
        max_abs_z: max_z,
        within,
        index_deltas,
        def1_def2_gap: (gap(a), gap(b)),
    })
}

pub fn compare_files(a: &Path, b: &Path, tolerance: f64, sigmas: f64) -> Result<CompareReport> {
    let ra = RunOutput::parse(&std::fs::read_to_string(a)?)?;
    let rb = RunOutput::parse(&std::fs::read_to_string(b)?)?;
    compare_outputs(&ra, &rb, tolerance, sigmas)
}

/// One axis of a parameter sweep: a dotted path into the config and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    /// `path=v1,v2,…`; each value is read as JSON, falling back to a string.
    fn from_str(s: &str) -> Result<Self> {
        let (path, vals) = s
            .split_once('=')
            .ok_or_else(|| invalid("set", format!("expected path=v1,v2,..., got {s:?}")))?;
        ensure(!path.is_empty() && !vals.is_empty(), "set", || format!("empty path or values in {s:?}"))?;
        let values = vals
            .split(',')
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        Ok(SweepAxis {
            path: path.to_string(),
            values,
        })
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| invalid("set", format!("{path}: {part} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Cartesian product of the axes applied to a template; each point is
/// `(assignments, config)`, in row-major order of the axes.
pub type SweepPoint = (Vec<(String, Value)>, ExperimentConfig);

pub fn sweep_points(template: &Value, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    for idx in 0..total {
        let mut doc = template.clone();
        let mut rem = idx;
        let mut assigned = vec![(String::new(), Value::Null); axes.len()];
        for (k, axis) in axes.iter().enumerate().rev() {
            let v = &axis.values[rem % axis.values.len()];
            rem /= axis.values.len();
            set_path(&mut doc, &axis.path, v.clone())?;
            assigned[k] = (axis.path.clone(), v.clone());
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc)?;
        points.push((assigned, cfg));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::ArchimedeanGenerator;

    fn clayton_cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            SystemSpec::ExchangeableCopula {
                generator: ArchimedeanGenerator::Clayton { alpha: 1.0 },
                tilt: None,
            },
            1000,
        );
        c.replicates = 2000;
        c
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some("3")).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), DEFAULT_SEED);
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "{\n  \"system\": {\"kind\": \"clayton_thing\"},\n  \"n\": 10\n}";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(2));
        assert_eq!(exit_code(&err.error), 2);
        let text = "{\n  \"system\": {\"kind\": \"mixture_spike\", \"gamma\": 1},\n  \"n\": 10,\n  \"replicates\": 10\n}";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.to_string().contains("replicates below minimum"));
    }

    #[test]
    fn csv_roundtrip_and_layout() {
        let rep = run_experiment(&clayton_cfg(), 5).unwrap();
        let csv = rep.output.render(OutputFormat::Csv).unwrap();
        assert!(csv.lines().any(|l| l == "s,u_n,psi_hat,stderr,psi_ref,z"));
        assert!(csv.contains("# config_hash="));
        assert!(csv.contains("# seed=5"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 20);
        let back = RunOutput::parse(&csv).unwrap();
        assert_eq!(back.rows, rep.output.rows.iter().map(reparse).collect::<Vec<_>>());
        let json = rep.output.render(OutputFormat::Json).unwrap();
        let back_json = RunOutput::parse(&json).unwrap();
        assert_eq!(back_json.rows, back.rows);
        assert_eq!(back_json.summary_f64("theta_def2"), back.summary_f64("theta_def2"));
        let report = compare_outputs(&back, &back_json, 0.0, 0.0).unwrap();
        assert_eq!(report.max_abs_delta, 0.0);
        assert!(report.within);
        assert!(report.index_deltas.iter().all(|d| d.3 == 0.0));
    }

    fn reparse(r: &ResultRow) -> ResultRow {
        let f = |n: &Num| Num::parse(&n.text());
        ResultRow {
            s: f(&r.s),
            u_n: f(&r.u_n),
            psi_hat: f(&r.psi_hat),
            stderr: f(&r.stderr),
            psi_ref: f(&r.psi_ref),
            z: f(&r.z),
        }
    }

    #[test]
    fn z_matches_its_definition() {
        let rep = run_experiment(&clayton_cfg(), 6).unwrap();
        for r in &rep.output.rows {
            let (p, q, se, z) = (r.psi_hat.0.unwrap(), r.psi_ref.0.unwrap(), r.stderr.0.unwrap(), r.z.0.unwrap());
            assert!((z - (p - q) / se).abs() < 1e-12);
        }
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = clayton_cfg();
        let mut b = clayton_cfg();
        assert_eq!(a.hash(), b.hash());
        b.n = 1001;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn sweep_expands_cartesian_product() {
        let template = serde_json::to_value(clayton_cfg()).unwrap();
        let axes = vec![
            "system.generator.alpha=1,2".parse::<SweepAxis>().unwrap(),
            "n=100,200,300".parse().unwrap(),
        ];
        let points = sweep_points(&template, &axes).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[1].1.n, 200);
        assert_eq!(
            points[3].1.system,
            SystemSpec::ExchangeableCopula {
                generator: ArchimedeanGenerator::Clayton { alpha: 2.0 },
                tilt: None
            }
        );
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = run_experiment(&clayton_cfg(), 1).unwrap().output;
        let mut c = clayton_cfg();
        c.s_grid = vec![0.05, 0.5, 0.95];
        let b = run_experiment(&c, 1).unwrap().output;
        assert!(compare_outputs(&a, &b, 0.02, 3.0).is_err());
    }
}
