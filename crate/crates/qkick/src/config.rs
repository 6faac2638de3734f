//! Experiment configuration: a flat TOML key/value file.
//!
//! ```toml
//! schema_version = 1
//! delta = [1.0, 0.5, 0.25]
//! chi = 0.15
//! chi_prime = 0.1
//! beta = 0.1
//! temperature = 1.0
//! initial_state = 8            # basis label, or "maximally-mixed"
//! kick = "A:x:pi/2"            # "none", or rotations joined by ','
//! tau_k = "pi"                 # or q = 4.0 (tau_k = 4 pi / q)
//! n_kicks = 100
//! kappa_grid = "0:2pi:33"      # start:stop:count, or an explicit list
//! q_grid = [8.0, 16.0]
//! ```
//!
//! Every key is validated independently so that one pass reports all
//! problems. Values given with `--set key=value` replace file values before
//! validation.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use qkick_core::evolution::{parse_angle, Rotation};
use qkick_core::spin_chain::MAX_QUBITS;
use qkick_core::{ChainConfig, KickSpec, QssConfig};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{ConfigIssue, HarnessError, Result};

pub const SCHEMA_VERSION: i64 = 1;

/// Angle token inside a kick spec that sweeps substitute with the grid value.
pub const KAPPA_TOKEN: &str = "kappa";

const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "delta",
    "chi",
    "chi_prime",
    "coupling",
    "beta",
    "temperature",
    "initial_state",
    "kick",
    "kicks",
    "kappa",
    "tau_k",
    "q",
    "n_kicks",
    "duration",
    "kappa_grid",
    "q_grid",
    "dt",
    "sample_every",
    "qss_tol",
    "qss_window",
    "max_kicks",
    "out_dir",
    "name",
    "coherences",
    "dump_matrix",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// 1-based computational basis label.
    Basis(usize),
    MaximallyMixed,
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialState::Basis(l) => write!(f, "{l}"),
            InitialState::MaximallyMixed => write!(f, "maximally-mixed"),
        }
    }
}

/// A kick spec whose angles may be the placeholder `kappa`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KickTemplate(String);

impl KickTemplate {
    pub fn new(text: impl Into<String>) -> Self {
        KickTemplate(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn uses_kappa(&self) -> bool {
        self.0
            .split(',')
            .any(|r| r.rsplit(':').next().map(str::trim) == Some(KAPPA_TOKEN))
    }

    pub fn resolve(&self, kappa: Option<f64>) -> qkick_core::Result<KickSpec> {
        let t = self.0.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("none") {
            return Ok(KickSpec::none());
        }
        let rotations = t
            .split(',')
            .map(|part| match part.rsplit_once(':') {
                Some((head, angle)) if angle.trim() == KAPPA_TOKEN => {
                    let kappa = kappa.ok_or_else(|| {
                        qkick_core::Error::InvalidInput(format!("'{part}' needs a kappa value"))
                    })?;
                    Ok(Rotation {
                        angle: kappa,
                        ..format!("{head}:0").parse::<Rotation>()?
                    })
                }
                _ => part.parse::<Rotation>(),
            })
            .collect::<qkick_core::Result<Vec<_>>>()?;
        Ok(KickSpec::new(rotations))
    }
}

/// A validated experiment definition.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub chain: ChainConfig,
    pub initial_state: InitialState,
    pub kicks: Vec<KickTemplate>,
    pub kappa: Option<f64>,
    pub tau_k: Option<f64>,
    pub n_kicks: usize,
    /// Free-evolution length when there is nothing to kick.
    pub duration: f64,
    pub kappa_grid: Option<Vec<f64>>,
    pub q_grid: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub qss: QssConfig,
    pub out_dir: PathBuf,
    pub name: String,
    /// 1-based `(row, col)` labels whose `|rho_ij|` is written in series files.
    pub coherences: Vec<(usize, usize)>,
    pub dump_matrix: bool,
    /// Resolved key/value table (after overrides), used for the echo and hash.
    pub resolved: Table,
}

impl ExperimentConfig {
    /// SHA-256 of the canonical TOML rendering of the resolved keys.
    pub fn content_hash(&self) -> String {
        let text = toml::to_string(&self.resolved).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn kick(&self) -> &KickTemplate {
        &self.kicks[0]
    }
}

/// Parses `key=value` where the value is read as a TOML scalar/array and
/// falls back to a bare string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| HarnessError::config(text, "override must look like key=value"))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key, value))
}

pub fn load_config(
    path: &std::path::Path,
    overrides: &[(String, Value)],
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    validate_config_with(&text, overrides)
}

/// Parses and validates a config document.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig> {
    validate_config_with(raw, &[])
}

pub fn validate_config_with(raw: &str, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let mut table: Table = raw
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::config("<file>", e.to_string()))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    Checker::new(table).run()
}

struct Checker {
    table: Table,
    issues: Vec<ConfigIssue>,
}

impl Checker {
    fn new(table: Table) -> Self {
        Checker {
            table,
            issues: Vec::new(),
        }
    }

    fn issue(&mut self, key: &str, msg: impl Into<String>) {
        self.issues.push(ConfigIssue::new(key, msg));
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.table.get(key)
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                let t = other.type_str();
                self.issue(key, format!("expected a number, found {t}"));
                None
            }
        }
    }

    /// Number, or a string such as `"pi/2"`.
    fn angle(&mut self, key: &str) -> Option<f64> {
        let v = self.get(key)?.clone();
        match angle_value(&v) {
            Ok(x) => Some(x),
            Err(msg) => {
                self.issue(key, msg);
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                let i = *i;
                self.issue(key, format!("must be non-negative, got {i}"));
                None
            }
            other => {
                let t = other.type_str();
                self.issue(key, format!("expected an integer, found {t}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                let t = other.type_str();
                self.issue(key, format!("expected a string, found {t}"));
                None
            }
        }
    }

    fn numbers(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.get(key)? {
            Value::Array(items) => {
                let parsed: std::result::Result<Vec<f64>, String> =
                    items.iter().map(number_value).collect();
                match parsed {
                    Ok(v) => Some(v),
                    Err(msg) => {
                        self.issue(key, msg);
                        None
                    }
                }
            }
            other => {
                let t = other.type_str();
                self.issue(key, format!("expected an array of numbers, found {t}"));
                None
            }
        }
    }

    /// `"start:stop:count"` (inclusive, evenly spaced) or an array.
    fn grid(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?.clone();
        let parsed = match &v {
            Value::String(s) => parse_range(s),
            Value::Array(items) => items.iter().map(angle_value).collect(),
            other => Err(format!(
                "expected \"start:stop:count\" or an array, found {}",
                other.type_str()
            )),
        };
        match parsed {
            Ok(g) if g.is_empty() => {
                self.issue(key, "grid is empty");
                None
            }
            Ok(g) => Some(g),
            Err(msg) => {
                self.issue(key, msg);
                None
            }
        }
    }

    fn run(mut self) -> Result<ExperimentConfig> {
        let unknown: Vec<String> = self
            .table
            .keys()
            .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.issue(&k, "unknown key");
        }
        match self.get("schema_version") {
            None => self.issue(
                "schema_version",
                format!("missing (current version is {SCHEMA_VERSION})"),
            ),
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(other) => {
                let o = other.to_string();
                self.issue(
                    "schema_version",
                    format!("unsupported version {o} (expected {SCHEMA_VERSION})"),
                )
            }
        }

        let chain = self.chain();
        let n = chain.as_ref().map(ChainConfig::n_qubits);

        let initial_state = match self.get("initial_state").cloned() {
            None => n.map(|n| InitialState::Basis(1 << n)),
            Some(Value::String(s)) if s.eq_ignore_ascii_case("maximally-mixed") => {
                Some(InitialState::MaximallyMixed)
            }
            Some(v) => {
                let label = match &v {
                    Value::Integer(i) => Some(*i),
                    Value::String(s) => s.trim().parse::<i64>().ok(),
                    _ => None,
                };
                match (label, n) {
                    (Some(l), Some(n)) if l >= 1 && l <= (1i64 << n) => {
                        Some(InitialState::Basis(l as usize))
                    }
                    (Some(l), Some(n)) => {
                        self.issue(
                            "initial_state",
                            format!("basis label {l} outside 1..={}", 1 << n),
                        );
                        None
                    }
                    (Some(_), None) => None,
                    (None, _) => {
                        self.issue(
                            "initial_state",
                            "expected a basis label (1..2^N) or \"maximally-mixed\"",
                        );
                        None
                    }
                }
            }
        };

        let kicks = match (self.get("kick").is_some(), self.get("kicks").is_some()) {
            (true, true) => {
                self.issue("kicks", "give either 'kick' or 'kicks', not both");
                Vec::new()
            }
            (_, true) => match self.get("kicks").cloned() {
                Some(Value::Array(items)) if !items.is_empty() => items
                    .iter()
                    .filter_map(|v| match v {
                        Value::String(s) => Some(KickTemplate::new(s.clone())),
                        _ => {
                            self.issue("kicks", "entries must be kick-spec strings");
                            None
                        }
                    })
                    .collect(),
                _ => {
                    self.issue("kicks", "expected a non-empty array of kick specs");
                    Vec::new()
                }
            },
            (true, false) => self
                .string("kick")
                .map(KickTemplate::new)
                .into_iter()
                .collect(),
            (false, false) => vec![KickTemplate::new("none")],
        };

        let kappa = self.angle("kappa");
        if let Some(k) = kappa {
            if !(0.0..=2.0 * PI + 1e-12).contains(&k) {
                self.issue("kappa", format!("{k} outside [0, 2pi]"));
            }
        }
        let kappa_grid = self.grid("kappa_grid");
        if let Some(g) = &kappa_grid {
            if let Some(bad) = g.iter().find(|k| !(-1e-12..=2.0 * PI + 1e-12).contains(*k)) {
                let bad = *bad;
                self.issue("kappa_grid", format!("value {bad} outside [0, 2pi]"));
            }
        }
        for t in &kicks {
            let probe = kappa.or(Some(0.0));
            match t.resolve(probe) {
                Ok(spec) => {
                    if let Some(n) = n {
                        if let Err(e) = spec.validate(n) {
                            self.issue("kick", format!("'{}': {e}", t.as_str()));
                        }
                    }
                }
                Err(e) => self.issue("kick", format!("'{}': {e}", t.as_str())),
            }
        }
        let uses_kappa = kicks.iter().any(KickTemplate::uses_kappa);
        if kappa_grid.is_some() && !uses_kappa {
            self.issue(
                "kappa_grid",
                format!("no kick angle is '{KAPPA_TOKEN}', so the grid would change nothing"),
            );
        }

        let q = self.number("q");
        if let Some(q) = q {
            if !(q > 0.0 && q.is_finite()) {
                self.issue(
                    "q",
                    format!("q is a positive number different from zero, got {q}"),
                );
            }
        }
        let tau_direct = self.angle("tau_k");
        if let Some(t) = tau_direct {
            if !(t > 0.0 && t.is_finite()) {
                self.issue("tau_k", format!("kick period must be positive, got {t}"));
            }
        }
        let tau_k = match (tau_direct, q) {
            (Some(_), Some(_)) => {
                self.issue("tau_k", "give either 'tau_k' or 'q', not both");
                None
            }
            (Some(t), None) => Some(t),
            (None, Some(q)) => Some(4.0 * PI / q),
            (None, None) => None,
        };

        let q_grid = self.grid("q_grid");
        if let Some(g) = &q_grid {
            if let Some(bad) = g.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
                let bad = *bad;
                self.issue("q_grid", format!("q values must be positive, got {bad}"));
            }
        }

        let n_kicks = self.count("n_kicks").unwrap_or(100);
        let duration = self.number("duration").unwrap_or(500.0);
        if !(duration >= 0.0 && duration.is_finite()) {
            self.issue(
                "duration",
                format!("must be a non-negative time, got {duration}"),
            );
        }
        let dt = self.number("dt");
        if let Some(d) = dt {
            if !(d > 0.0 && d.is_finite()) {
                self.issue("dt", format!("step must be positive, got {d}"));
            }
        }
        let sample_every = self.count("sample_every").unwrap_or(10);
        if sample_every == 0 {
            self.issue("sample_every", "must be at least 1");
        }

        let defaults = QssConfig::default();
        let tol = self.number("qss_tol").unwrap_or(defaults.tol);
        if !(tol > 0.0 && tol.is_finite()) {
            self.issue("qss_tol", format!("must be positive, got {tol}"));
        }
        let window = self.count("qss_window").unwrap_or(defaults.window);
        if window == 0 {
            self.issue("qss_window", "must be at least 1");
        }
        let max_kicks = self.count("max_kicks").unwrap_or(defaults.max_kicks);
        if max_kicks <= window {
            self.issue("max_kicks", format!("must exceed qss_window ({window})"));
        }

        let out_dir = PathBuf::from(self.string("out_dir").unwrap_or_else(|| "qkick-out".into()));
        let name = self.string("name").unwrap_or_else(|| "run".into());
        if name.is_empty() || name.contains(['/', '\\']) {
            self.issue(
                "name",
                "must be a non-empty file stem without path separators",
            );
        }
        let coherences = self.coherences(n);
        let dump_matrix = match self.get("dump_matrix") {
            None => true,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.issue("dump_matrix", "expected true or false");
                true
            }
        };

        if !self.issues.is_empty() {
            return Err(HarnessError::Config(self.issues));
        }
        Ok(ExperimentConfig {
            chain: chain.expect("chain validated"),
            initial_state: initial_state.expect("initial state validated"),
            kicks,
            kappa,
            tau_k,
            n_kicks,
            duration,
            kappa_grid,
            q_grid,
            dt,
            sample_every,
            qss: QssConfig {
                tol,
                window,
                max_kicks,
            },
            out_dir,
            name,
            coherences,
            dump_matrix,
            resolved: self.table,
        })
    }

    fn chain(&mut self) -> Option<ChainConfig> {
        let before = self.issues.len();
        let delta = if self.get("delta").is_some() {
            self.numbers("delta")
        } else {
            Some(vec![1.0, 0.5, 0.25])
        };
        let n = delta.as_ref().map(Vec::len);
        if let Some(d) = &delta {
            if d.is_empty() || d.len() > MAX_QUBITS {
                self.issue(
                    "delta",
                    format!("need between 1 and {MAX_QUBITS} qubits, got {}", d.len()),
                );
            }
            for (j, x) in d.iter().enumerate() {
                if !(*x > 0.0 && *x <= 1.0) {
                    self.issue("delta", format!("entry {j} = {x} must lie in (0, 1]"));
                }
            }
            if !d.contains(&1.0) {
                self.issue(
                    "delta",
                    "one qubit must have delta = 1 (the reference frequency)",
                );
            }
        }

        let coupling = if self.get("coupling").is_some() {
            if self.get("chi").is_some() || self.get("chi_prime").is_some() {
                self.issue(
                    "coupling",
                    "give either a full 'coupling' matrix or 'chi'/'chi_prime', not both",
                );
            }
            self.matrix("coupling", n)
        } else {
            let chi = self.number("chi").unwrap_or(0.15);
            let chi_prime = self.number("chi_prime").unwrap_or(0.1);
            n.map(|n| {
                let mut c = vec![vec![0.0; n]; n];
                for j in 0..n {
                    if j + 1 < n {
                        c[j][j + 1] = chi;
                        c[j + 1][j] = chi;
                    }
                    if j + 2 < n {
                        c[j][j + 2] = chi_prime;
                        c[j + 2][j] = chi_prime;
                    }
                }
                c
            })
        };
        if let Some(c) = &coupling {
            if c.iter().flatten().any(|x| !x.is_finite()) {
                self.issue("coupling", "entries must be finite");
            }
        }

        let beta = match self.get("beta").cloned() {
            None => n.map(|n| vec![0.1; n]),
            Some(Value::Array(_)) => {
                let b = self.numbers("beta");
                if let (Some(b), Some(n)) = (&b, n) {
                    if b.len() != n {
                        self.issue("beta", format!("expected {n} entries, got {}", b.len()));
                    }
                }
                b
            }
            Some(_) => self.number("beta").and_then(|b| n.map(|n| vec![b; n])),
        };
        if let Some(b) = &beta {
            if let Some(bad) = b.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                let bad = *bad;
                self.issue("beta", format!("bath coupling must be >= 0, got {bad}"));
            }
        }

        let temperature = self.number("temperature");
        match temperature {
            None if self.get("temperature").is_none() => self.issue(
                "temperature",
                "missing (use 0 for the zero-temperature limit)",
            ),
            Some(t) if !(t >= 0.0 && t.is_finite()) => {
                self.issue("temperature", format!("must be >= 0, got {t}"))
            }
            _ => {}
        }

        if self.issues.len() != before {
            return None;
        }
        let (delta, coupling, beta, temperature) = (delta?, coupling?, beta?, temperature?);
        match ChainConfig::with_qubit_betas(delta, coupling, beta, temperature) {
            Ok(c) => Some(c),
            Err(e) => {
                self.issue("coupling", e.to_string());
                None
            }
        }
    }

    fn matrix(&mut self, key: &str, n: Option<usize>) -> Option<Vec<Vec<f64>>> {
        let rows = match self.get(key)? {
            Value::Array(rows) => rows.clone(),
            _ => {
                self.issue(key, "expected an array of rows");
                return None;
            }
        };
        let mut out = Vec::with_capacity(rows.len());
        for row in &rows {
            match row {
                Value::Array(items) => match items
                    .iter()
                    .map(number_value)
                    .collect::<std::result::Result<Vec<_>, _>>()
                {
                    Ok(r) => out.push(r),
                    Err(msg) => {
                        self.issue(key, msg);
                        return None;
                    }
                },
                _ => {
                    self.issue(key, "expected an array of rows");
                    return None;
                }
            }
        }
        if let Some(n) = n {
            if out.len() != n || out.iter().any(|r| r.len() != n) {
                self.issue(key, format!("must be {n}x{n} to match delta"));
                return None;
            }
            for j in 0..n {
                if out[j][j] != 0.0 {
                    self.issue(key, format!("diagonal entry [{j}][{j}] must be 0"));
                }
                for l in j + 1..n {
                    if out[j][l] != out[l][j] {
                        self.issue(key, format!("not symmetric at [{j}][{l}]"));
                    }
                }
            }
        }
        Some(out)
    }

    fn coherences(&mut self, n: Option<usize>) -> Vec<(usize, usize)> {
        let Some(v) = self.get("coherences").cloned() else {
            return Vec::new();
        };
        let dim = n.map(|n| 1usize << n);
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let Value::Array(items) = v else {
            self.issue("coherences", "expected an array of [row, col] label pairs");
            return out;
        };
        for item in items {
            let pair = match &item {
                Value::Array(p) if p.len() == 2 => match (&p[0], &p[1]) {
                    (Value::Integer(a), Value::Integer(b)) => Some((*a, *b)),
                    _ => None,
                },
                _ => None,
            };
            match (pair, dim) {
                (Some((a, b)), Some(d))
                    if a >= 1 && b >= 1 && a as usize <= d && b as usize <= d =>
                {
                    if seen.insert((a, b)) {
                        out.push((a as usize, b as usize));
                    }
                }
                (Some((a, b)), Some(d)) => {
                    self.issue("coherences", format!("pair [{a}, {b}] outside 1..={d}"))
                }
                (Some(_), None) => {}
                (None, _) => self.issue("coherences", "entries must be [row, col] integer pairs"),
            }
        }
        out
    }
}

fn number_value(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, found {}", other.type_str())),
    }
}

fn angle_value(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::String(s) => parse_angle(s).map_err(|e| e.to_string()),
        other => number_value(other),
    }
}

/// `"start:stop:count"` with angle-style endpoints (`"0:2pi:33"`).
pub fn parse_range(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range '{s}' must look like start:stop:count"));
    }
    let start = parse_angle(parts[0]).map_err(|e| e.to_string())?;
    let stop = parse_angle(parts[1]).map_err(|e| e.to_string())?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("range count '{}' is not an integer", parts[2]))?;
    match count {
        0 => Ok(Vec::new()),
        1 => Ok(vec![start]),
        _ if count > 100_000 => Err(format!("range count {count} is unreasonably large")),
        _ => Ok((0..count)
            .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "schema_version = 1\ntemperature = 1.0\n";

    fn issues(doc: &str) -> Vec<ConfigIssue> {
        match validate_config(doc) {
            Err(HarnessError::Config(v)) => v,
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("config accepted:\n{doc}"),
        }
    }

    #[test]
    fn defaults_give_canonical_chain() {
        let c = validate_config(BASE).unwrap();
        assert_eq!(c.chain, ChainConfig::canonical(1.0));
        assert_eq!(c.initial_state, InitialState::Basis(8));
        assert_eq!(c.kick().as_str(), "none");
        assert_eq!(c.qss, QssConfig::default());
    }

    #[test]
    fn q_sets_period() {
        let c = validate_config(&format!("{BASE}q = 8\nkick = \"A:x:pi/2\"")).unwrap();
        assert!((c.tau_k.unwrap() - PI / 2.0).abs() < 1e-15);
        let c = validate_config(&format!("{BASE}tau_k = \"pi\"")).unwrap();
        assert_eq!(c.tau_k, Some(PI));
    }

    #[test]
    fn q_zero_is_rejected() {
        let v = issues(&format!("{BASE}q = 0"));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].key, "q");
        assert!(v[0].message.contains("positive"));
    }

    #[test]
    fn negative_beta_is_rejected() {
        let v = issues(&format!("{BASE}beta = -0.1"));
        assert!(v.iter().any(|i| i.key == "beta"));
    }

    #[test]
    fn strong_coupling_names_qubit_and_state() {
        // chi_AC = 0.6 > 2 delta_C = 0.5: Omega_C = 0.25 - 0.3 + 0.05 = 0 already for |100>.
        let doc = "schema_version = 1\ntemperature = 0\ncoupling = [[0, 0.1, 0.6], [0.1, 0, 0.1], [0.6, 0.1, 0]]\n";
        let v = issues(doc);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].key, "coupling");
        assert!(v[0].message.contains("qubit C"), "{}", v[0].message);
        assert!(v[0].message.contains("|100>"), "{}", v[0].message);
    }

    #[test]
    fn all_problems_are_reported() {
        let doc = "schema_version = 2\ntemperature = -1\nbeta = -3\nq = -2\nbogus = 1\nsample_every = 0\n";
        let keys: BTreeSet<String> = issues(doc).into_iter().map(|i| i.key).collect();
        for k in [
            "schema_version",
            "temperature",
            "beta",
            "q",
            "bogus",
            "sample_every",
        ] {
            assert!(keys.contains(k), "{k} missing from {keys:?}");
        }
    }

    #[test]
    fn missing_schema_version_and_temperature() {
        let keys: Vec<String> = issues("").into_iter().map(|i| i.key).collect();
        assert!(keys.contains(&"schema_version".to_string()));
        assert!(keys.contains(&"temperature".to_string()));
    }

    #[test]
    fn initial_state_forms() {
        let c = validate_config(&format!("{BASE}initial_state = \"maximally-mixed\"")).unwrap();
        assert_eq!(c.initial_state, InitialState::MaximallyMixed);
        let c = validate_config(&format!("{BASE}initial_state = 3")).unwrap();
        assert_eq!(c.initial_state, InitialState::Basis(3));
        assert_eq!(
            issues(&format!("{BASE}initial_state = 9"))[0].key,
            "initial_state"
        );
        assert_eq!(
            issues(&format!("{BASE}initial_state = 0"))[0].key,
            "initial_state"
        );
    }

    #[test]
    fn kick_templates() {
        let t = KickTemplate::new("B:x:kappa,C:y:pi/2");
        assert!(t.uses_kappa());
        let s = t.resolve(Some(1.0)).unwrap();
        assert_eq!(s.rotations[0].angle, 1.0);
        assert!((s.rotations[1].angle - PI / 2.0).abs() < 1e-15);
        assert!(t.resolve(None).is_err());
        assert!(!KickTemplate::new("A:x:pi").uses_kappa());
        assert!(KickTemplate::new("none").resolve(None).unwrap().is_empty());
    }

    #[test]
    fn kick_problems() {
        assert_eq!(issues(&format!("{BASE}kick = \"D:x:pi\""))[0].key, "kick");
        assert_eq!(issues(&format!("{BASE}kick = \"A:w:pi\""))[0].key, "kick");
        assert_eq!(issues(&format!("{BASE}kick = \"A:x:7\""))[0].key, "kick");
        assert_eq!(
            issues(&format!("{BASE}kick = \"A:x:pi\"\nkappa_grid = \"0:pi:3\""))[0].key,
            "kappa_grid"
        );
    }

    #[test]
    fn grids() {
        let c = validate_config(&format!(
            "{BASE}kick = \"A:x:kappa\"\nkappa_grid = \"0:2pi:33\"\nq_grid = [8, 16]"
        ))
        .unwrap();
        let g = c.kappa_grid.unwrap();
        assert_eq!(g.len(), 33);
        assert_eq!(g[0], 0.0);
        assert!((g[32] - 2.0 * PI).abs() < 1e-15);
        assert!((g[16] - PI).abs() < 1e-15);
        assert_eq!(c.q_grid.unwrap(), vec![8.0, 16.0]);
        assert_eq!(issues(&format!("{BASE}q_grid = []"))[0].key, "q_grid");
        assert_eq!(issues(&format!("{BASE}q_grid = [1, 0]"))[0].key, "q_grid");
        assert_eq!(issues(&format!("{BASE}q_grid = \"1:2\""))[0].key, "q_grid");
    }

    #[test]
    fn overrides_replace_file_values() {
        let o = vec![
            parse_override("temperature=0").unwrap(),
            parse_override("kick=A:x:pi").unwrap(),
        ];
        let c = validate_config_with(BASE, &o).unwrap();
        assert_eq!(c.chain.temperature(), 0.0);
        assert_eq!(c.kick().as_str(), "A:x:pi");
        assert!(parse_override("novalue").is_err());
        assert_eq!(
            parse_override("q_grid=[1, 2]").unwrap().1,
            Value::Array(vec![Value::Integer(1), Value::Integer(2)])
        );
    }

    #[test]
    fn hash_tracks_content() {
        let a = validate_config(BASE).unwrap().content_hash();
        let b = validate_config(&format!("{BASE}beta = 0.1"))
            .unwrap()
            .content_hash();
        let c = validate_config("temperature = 1.0\nschema_version = 1\n")
            .unwrap()
            .content_hash();
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn range_parser() {
        assert_eq!(parse_range("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_range("5:9:1").unwrap(), vec![5.0]);
        assert!(parse_range("1:3").is_err());
        assert!(parse_range("1:3:x").is_err());
        assert!(parse_range("a:3:2").is_err());
    }
}
