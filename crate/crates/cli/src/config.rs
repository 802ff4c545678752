//! Experiment configuration: a small sectioned key-value grammar.
//!
//! ```text
//! # comment
//! [section]
//! key = value            # number, word, "string", or bracket list
//! list = [1, 2, 3]
//! nested = [[2, 0, 1.0], [0, 2, 1.0]]
//! ```
//!
//! Parsing is total: every key is checked against the schema of its section
//! (unknown keys are rejected with a line number), defaults are filled in,
//! and the resolved configuration can be re-serialized to canonical text
//! that parses back to the same value. Output files embed that text, so any
//! result can be reproduced from its own header.

use std::collections::BTreeMap;
use std::fmt;

/// Parse- or validation-time failure, with enough context to fix the file.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => {
                write!(f, "parse error (line {line}): {message}")
            }
            ConfigError::Validation { field, message } => {
                write!(f, "invalid config field `{field}`: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Word(String),
    List(Vec<Value>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Word(_) => "word",
            Value::List(_) => "list",
        }
    }

    fn as_number(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            Value::Number(x) => Ok(*x),
            other => Err(invalid(
                field,
                format!("expected a number, got {}", other.type_name()),
            )),
        }
    }

    fn as_word(&self, field: &str) -> Result<&str, ConfigError> {
        match self {
            Value::Word(w) => Ok(w),
            other => Err(invalid(
                field,
                format!("expected a word, got {}", other.type_name()),
            )),
        }
    }

    fn as_number_list(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            Value::List(items) => items.iter().map(|v| v.as_number(field)).collect(),
            other => Err(invalid(
                field,
                format!("expected a list, got {}", other.type_name()),
            )),
        }
    }

    fn as_rows(&self, field: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
        match self {
            Value::List(items) => items.iter().map(|v| v.as_number_list(field)).collect(),
            other => Err(invalid(
                field,
                format!("expected a nested list, got {}", other.type_name()),
            )),
        }
    }
}

fn parse_scalar(token: &str, line: usize) -> Result<Value, ConfigError> {
    if let Ok(x) = token.parse::<f64>() {
        return Ok(Value::Number(x));
    }
    if token.starts_with('"') && token.ends_with('"') && token.len() >= 2 {
        return Ok(Value::Word(token[1..token.len() - 1].to_string()));
    }
    if token
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' || c == '+')
        && !token.is_empty()
    {
        return Ok(Value::Word(token.to_string()));
    }
    Err(ConfigError::Parse {
        line,
        message: format!("cannot parse value `{token}`"),
    })
}

fn parse_value(text: &str, line: usize) -> Result<Value, ConfigError> {
    let text = text.trim();
    if !text.starts_with('[') {
        return parse_scalar(text, line);
    }
    // Bracket list, possibly nested one level.
    let mut stack: Vec<Vec<Value>> = Vec::new();
    let mut token = String::new();
    let flush = |stack: &mut Vec<Vec<Value>>, token: &mut String| -> Result<(), ConfigError> {
        let t = token.trim().to_string();
        token.clear();
        if t.is_empty() {
            return Ok(());
        }
        let v = parse_scalar(&t, line)?;
        stack
            .last_mut()
            .ok_or(ConfigError::Parse {
                line,
                message: "value outside brackets".into(),
            })?
            .push(v);
        Ok(())
    };
    let mut result: Option<Value> = None;
    for c in text.chars() {
        match c {
            '[' => {
                if result.is_some() {
                    return Err(ConfigError::Parse {
                        line,
                        message: "trailing data after list".into(),
                    });
                }
                stack.push(Vec::new());
            }
            ']' => {
                flush(&mut stack, &mut token)?;
                let done = stack.pop().ok_or(ConfigError::Parse {
                    line,
                    message: "unbalanced `]`".into(),
                })?;
                let value = Value::List(done);
                if let Some(parent) = stack.last_mut() {
                    parent.push(value);
                } else {
                    result = Some(value);
                }
            }
            ',' => flush(&mut stack, &mut token)?,
            c => token.push(c),
        }
    }
    if !stack.is_empty() {
        return Err(ConfigError::Parse {
            line,
            message: "unbalanced `[`".into(),
        });
    }
    if !token.trim().is_empty() {
        return Err(ConfigError::Parse {
            line,
            message: "trailing data after list".into(),
        });
    }
    result.ok_or(ConfigError::Parse {
        line,
        message: "empty value".into(),
    })
}

type Section = BTreeMap<String, (Value, usize)>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: "section header must be [name]".into(),
                });
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if name.is_empty() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: "empty section name".into(),
                });
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "expected `key = value` or `[section]`".into(),
            });
        };
        let section = current.clone().ok_or(ConfigError::Parse {
            line: line_no,
            message: "key appears before any [section]".into(),
        })?;
        let key = key.trim().to_string();
        let value = parse_value(value, line_no)?;
        let entry = sections.get_mut(&section).expect("section exists");
        if entry.contains_key(&key) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key `{key}` in [{section}]"),
            });
        }
        entry.insert(key, (value, line_no));
    }
    Ok(sections)
}

/// Which scalar field plays h (and the field strength B).
#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Harmonic,
    ShiftedHarmonic,
    Pendulum,
    Polynomial,
    Constant,
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Harmonic => "harmonic",
            SystemKind::ShiftedHarmonic => "shifted-harmonic",
            SystemKind::Pendulum => "pendulum",
            SystemKind::Polynomial => "polynomial",
            SystemKind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub offset: f64,
    pub strength: f64,
    /// Polynomial rows [exp_q, exp_p, coefficient].
    pub terms: Vec<(Vec<u32>, f64)>,
    pub analytic_derivatives: bool,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub h_min: f64,
    pub gamma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub position: [f64; 2],
    /// Explicit velocity wins over the oscillator integrals below.
    pub velocity: Option<[f64; 2]>,
    pub energy: f64,
    pub angular_momentum: f64,
    pub radial_sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSection {
    pub mu: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub horizon: f64,
    /// 0 = derive from mu and the local field scale.
    pub sample_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub mu_values: Vec<f64>,
    pub energy: f64,
    pub angular_momentum: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSection {
    pub hbar: f64,
    pub half_width: f64,
    pub points: usize,
    pub eigenvalues: usize,
    pub gauge: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Section {
    pub p_values: Vec<f64>,
    pub energy: f64,
    pub angular_momentum: f64,
    pub horizon: f64,
}

/// Fully resolved experiment configuration (defaults applied).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub metric: MetricConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorSection,
    pub sweep: SweepSection,
    pub spectrum: SpectrumSection,
    pub fig1: Fig1Section,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig {
                kind: SystemKind::Harmonic,
                offset: 0.0,
                strength: 1.0,
                terms: Vec::new(),
                analytic_derivatives: true,
                fd_step: 1e-4,
            },
            metric: MetricConfig {
                h_min: 1e-9,
                gamma: None,
            },
            initial: InitialConfig {
                position: [1.0, 0.0],
                velocity: None,
                energy: 1.0,
                angular_momentum: 0.25,
                radial_sign: 1.0,
            },
            integrator: IntegratorSection {
                mu: 0.03125,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                max_step: 0.0,
                horizon: 2.0 * std::f64::consts::PI,
                sample_interval: 0.0,
            },
            sweep: SweepSection {
                mu_values: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002],
                energy: 1.0,
                angular_momentum: 0.25,
                horizon: 2.0 * std::f64::consts::PI,
            },
            spectrum: SpectrumSection {
                hbar: 0.1,
                half_width: 3.0,
                points: 192,
                eigenvalues: 8,
                gauge: "symmetric".into(),
            },
            fig1: Fig1Section {
                p_values: vec![10.0, 1.0, 0.95, 0.5, 0.1, 0.01],
                energy: 1.0,
                angular_momentum: 0.25,
                horizon: 2.0 * std::f64::consts::PI,
            },
            output_dir: "out".into(),
        }
    }
}

struct SectionReader<'a> {
    name: &'a str,
    entries: Option<&'a Section>,
    known: Vec<&'static str>,
}

impl<'a> SectionReader<'a> {
    fn new(sections: &'a BTreeMap<String, Section>, name: &'a str) -> Self {
        Self {
            name,
            entries: sections.get(name),
            known: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.entries.and_then(|s| s.get(key)).map(|(v, _)| v)
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            for (key, (_, line)) in entries {
                if !self.known.contains(&key.as_str()) {
                    return Err(ConfigError::Validation {
                        field: format!("{}.{}", self.name, key),
                        message: format!("unknown key (line {line})"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn require_positive(field: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {value}"),
        ))
    }
}

/// Parse and validate; defaults are applied for everything not given.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let sections = parse_sections(text)?;
    for name in sections.keys() {
        if !matches!(
            name.as_str(),
            "system"
                | "metric"
                | "initial"
                | "integrator"
                | "sweep"
                | "spectrum"
                | "fig1"
                | "output"
        ) {
            return Err(invalid(name, "unknown section"));
        }
    }
    let mut cfg = ExperimentConfig::default();

    let mut sec = SectionReader::new(&sections, "system");
    if let Some(v) = sec.get("kind") {
        cfg.system.kind = match v.as_word("system.kind")? {
            "harmonic" => SystemKind::Harmonic,
            "shifted-harmonic" => SystemKind::ShiftedHarmonic,
            "pendulum" => SystemKind::Pendulum,
            "polynomial" => SystemKind::Polynomial,
            "constant" => SystemKind::Constant,
            other => {
                return Err(invalid("system.kind", format!("unknown system `{other}`")));
            }
        };
    }
    if let Some(v) = sec.get("offset") {
        cfg.system.offset = v.as_number("system.offset")?;
    }
    if let Some(v) = sec.get("strength") {
        cfg.system.strength = v.as_number("system.strength")?;
    }
    if let Some(v) = sec.get("terms") {
        let rows = v.as_rows("system.terms")?;
        let mut terms = Vec::new();
        for row in &rows {
            if row.len() != 3 {
                return Err(invalid(
                    "system.terms",
                    "each row must be [exp_q, exp_p, coefficient]",
                ));
            }
            let exps: Vec<u32> = row[..2]
                .iter()
                .map(|&e| {
                    if e >= 0.0 && e.fract() == 0.0 && e <= 32.0 {
                        Ok(e as u32)
                    } else {
                        Err(invalid("system.terms", format!("bad exponent {e}")))
                    }
                })
                .collect::<Result<_, _>>()?;
            terms.push((exps, row[2]));
        }
        cfg.system.terms = terms;
    }
    if let Some(v) = sec.get("derivative_mode") {
        cfg.system.analytic_derivatives = match v.as_word("system.derivative_mode")? {
            "analytic" => true,
            "finite-difference" => false,
            other => {
                return Err(invalid(
                    "system.derivative_mode",
                    format!("expected analytic | finite-difference, got `{other}`"),
                ))
            }
        };
    } else if cfg.system.kind == SystemKind::Polynomial {
        // Coefficient tables default to the finite-difference path.
        cfg.system.analytic_derivatives = false;
    }
    if let Some(v) = sec.get("fd_step") {
        cfg.system.fd_step = require_positive("system.fd_step", v.as_number("system.fd_step")?)?;
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "metric");
    if let Some(v) = sec.get("h_min") {
        cfg.metric.h_min = require_positive("metric.h_min", v.as_number("metric.h_min")?)?;
    }
    if let Some(v) = sec.get("gamma") {
        let rows = v.as_rows("metric.gamma")?;
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(invalid("metric.gamma", "expected a 2x2 matrix"));
        }
        cfg.metric.gamma = Some(rows);
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "initial");
    if let Some(v) = sec.get("position") {
        let p = v.as_number_list("initial.position")?;
        if p.len() != 2 {
            return Err(invalid("initial.position", "expected [q, p]"));
        }
        cfg.initial.position = [p[0], p[1]];
    }
    if let Some(v) = sec.get("velocity") {
        let p = v.as_number_list("initial.velocity")?;
        if p.len() != 2 {
            return Err(invalid("initial.velocity", "expected [vq, vp]"));
        }
        cfg.initial.velocity = Some([p[0], p[1]]);
    }
    if let Some(v) = sec.get("energy") {
        cfg.initial.energy = require_positive("initial.energy", v.as_number("initial.energy")?)?;
    }
    if let Some(v) = sec.get("angular_momentum") {
        let l = v.as_number("initial.angular_momentum")?;
        if l == 0.0 || !l.is_finite() {
            return Err(invalid(
                "initial.angular_momentum",
                "must be finite and nonzero",
            ));
        }
        cfg.initial.angular_momentum = l;
    }
    if let Some(v) = sec.get("radial_sign") {
        let s = v.as_number("initial.radial_sign")?;
        if s != 1.0 && s != -1.0 {
            return Err(invalid("initial.radial_sign", "must be 1 or -1"));
        }
        cfg.initial.radial_sign = s;
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "integrator");
    if let Some(v) = sec.get("mu") {
        cfg.integrator.mu = require_positive("integrator.mu", v.as_number("integrator.mu")?)?;
    }
    if let Some(v) = sec.get("rel_tol") {
        cfg.integrator.rel_tol =
            require_positive("integrator.rel_tol", v.as_number("integrator.rel_tol")?)?;
    }
    if let Some(v) = sec.get("abs_tol") {
        cfg.integrator.abs_tol =
            require_positive("integrator.abs_tol", v.as_number("integrator.abs_tol")?)?;
    }
    if let Some(v) = sec.get("max_step") {
        let m = v.as_number("integrator.max_step")?;
        if m < 0.0 {
            return Err(invalid(
                "integrator.max_step",
                "must be nonnegative (0 = unbounded)",
            ));
        }
        cfg.integrator.max_step = m;
    }
    if let Some(v) = sec.get("horizon") {
        cfg.integrator.horizon =
            require_positive("integrator.horizon", v.as_number("integrator.horizon")?)?;
    }
    if let Some(v) = sec.get("sample_interval") {
        let s = v.as_number("integrator.sample_interval")?;
        if s < 0.0 {
            return Err(invalid(
                "integrator.sample_interval",
                "must be nonnegative (0 = auto)",
            ));
        }
        cfg.integrator.sample_interval = s;
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "sweep");
    if let Some(v) = sec.get("mu_values") {
        let mu = v.as_number_list("sweep.mu_values")?;
        if mu.is_empty() {
            return Err(invalid("sweep.mu_values", "must not be empty"));
        }
        if !mu.windows(2).all(|w| w[0] > w[1]) {
            return Err(invalid("sweep.mu_values", "must be strictly decreasing"));
        }
        for &m in &mu {
            require_positive("sweep.mu_values", m)?;
        }
        cfg.sweep.mu_values = mu;
    }
    if let Some(v) = sec.get("energy") {
        cfg.sweep.energy = require_positive("sweep.energy", v.as_number("sweep.energy")?)?;
    }
    if let Some(v) = sec.get("angular_momentum") {
        cfg.sweep.angular_momentum = v.as_number("sweep.angular_momentum")?;
    }
    if let Some(v) = sec.get("horizon") {
        cfg.sweep.horizon = require_positive("sweep.horizon", v.as_number("sweep.horizon")?)?;
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "spectrum");
    if let Some(v) = sec.get("hbar") {
        cfg.spectrum.hbar = require_positive("spectrum.hbar", v.as_number("spectrum.hbar")?)?;
    }
    if let Some(v) = sec.get("half_width") {
        cfg.spectrum.half_width =
            require_positive("spectrum.half_width", v.as_number("spectrum.half_width")?)?;
    }
    if let Some(v) = sec.get("points") {
        let p = v.as_number("spectrum.points")?;
        if p.fract() != 0.0 || p < 2.0 {
            return Err(invalid("spectrum.points", "must be an integer >= 64"));
        }
        cfg.spectrum.points = p as usize;
    }
    if let Some(v) = sec.get("eigenvalues") {
        let p = v.as_number("spectrum.eigenvalues")?;
        if p.fract() != 0.0 || p < 1.0 {
            return Err(invalid(
                "spectrum.eigenvalues",
                "must be a positive integer",
            ));
        }
        cfg.spectrum.eigenvalues = p as usize;
    }
    if let Some(v) = sec.get("gauge") {
        let g = v.as_word("spectrum.gauge")?;
        if g != "symmetric" && g != "landau" {
            return Err(invalid("spectrum.gauge", "expected symmetric | landau"));
        }
        cfg.spectrum.gauge = g.to_string();
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "fig1");
    if let Some(v) = sec.get("p_values") {
        let p = v.as_number_list("fig1.p_values")?;
        if p.is_empty() {
            return Err(invalid("fig1.p_values", "must not be empty"));
        }
        for &x in &p {
            require_positive("fig1.p_values", x)?;
        }
        cfg.fig1.p_values = p;
    }
    if let Some(v) = sec.get("energy") {
        cfg.fig1.energy = require_positive("fig1.energy", v.as_number("fig1.energy")?)?;
    }
    if let Some(v) = sec.get("angular_momentum") {
        cfg.fig1.angular_momentum = v.as_number("fig1.angular_momentum")?;
    }
    if let Some(v) = sec.get("horizon") {
        cfg.fig1.horizon = require_positive("fig1.horizon", v.as_number("fig1.horizon")?)?;
    }
    sec.finish()?;

    let mut sec = SectionReader::new(&sections, "output");
    if let Some(v) = sec.get("dir") {
        cfg.output_dir = v.as_word("output.dir")?.to_string();
    }
    sec.finish()?;

    // Cross-field checks.
    if cfg.system.kind == SystemKind::Polynomial && cfg.system.terms.is_empty() {
        return Err(invalid(
            "system.terms",
            "polynomial system needs at least one term",
        ));
    }
    Ok(cfg)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

impl ExperimentConfig {
    /// Deterministic canonical text; `parse_config` of this text reproduces
    /// the configuration exactly.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[system]\n");
        s.push_str(&format!("kind = {}\n", self.system.kind.name()));
        s.push_str(&format!("offset = {}\n", fmt_f(self.system.offset)));
        s.push_str(&format!("strength = {}\n", fmt_f(self.system.strength)));
        if !self.system.terms.is_empty() {
            let rows: Vec<String> = self
                .system
                .terms
                .iter()
                .map(|(e, c)| format!("[{}, {}, {}]", e[0], e[1], fmt_f(*c)))
                .collect();
            s.push_str(&format!("terms = [{}]\n", rows.join(", ")));
        }
        s.push_str(&format!(
            "derivative_mode = {}\n",
            if self.system.analytic_derivatives {
                "analytic"
            } else {
                "finite-difference"
            }
        ));
        s.push_str(&format!("fd_step = {}\n", fmt_f(self.system.fd_step)));

        s.push_str("\n[metric]\n");
        s.push_str(&format!("h_min = {}\n", fmt_f(self.metric.h_min)));
        if let Some(g) = &self.metric.gamma {
            s.push_str(&format!(
                "gamma = [[{}, {}], [{}, {}]]\n",
                fmt_f(g[0][0]),
                fmt_f(g[0][1]),
                fmt_f(g[1][0]),
                fmt_f(g[1][1])
            ));
        }

        s.push_str("\n[initial]\n");
        s.push_str(&format!(
            "position = [{}, {}]\n",
            fmt_f(self.initial.position[0]),
            fmt_f(self.initial.position[1])
        ));
        if let Some(v) = self.initial.velocity {
            s.push_str(&format!("velocity = [{}, {}]\n", fmt_f(v[0]), fmt_f(v[1])));
        }
        s.push_str(&format!("energy = {}\n", fmt_f(self.initial.energy)));
        s.push_str(&format!(
            "angular_momentum = {}\n",
            fmt_f(self.initial.angular_momentum)
        ));
        s.push_str(&format!(
            "radial_sign = {}\n",
            fmt_f(self.initial.radial_sign)
        ));

        s.push_str("\n[integrator]\n");
        s.push_str(&format!("mu = {}\n", fmt_f(self.integrator.mu)));
        s.push_str(&format!("rel_tol = {}\n", fmt_f(self.integrator.rel_tol)));
        s.push_str(&format!("abs_tol = {}\n", fmt_f(self.integrator.abs_tol)));
        s.push_str(&format!("max_step = {}\n", fmt_f(self.integrator.max_step)));
        s.push_str(&format!("horizon = {}\n", fmt_f(self.integrator.horizon)));
        s.push_str(&format!(
            "sample_interval = {}\n",
            fmt_f(self.integrator.sample_interval)
        ));

        s.push_str("\n[sweep]\n");
        let mus: Vec<String> = self.sweep.mu_values.iter().map(|&m| fmt_f(m)).collect();
        s.push_str(&format!("mu_values = [{}]\n", mus.join(", ")));
        s.push_str(&format!("energy = {}\n", fmt_f(self.sweep.energy)));
        s.push_str(&format!(
            "angular_momentum = {}\n",
            fmt_f(self.sweep.angular_momentum)
        ));
        s.push_str(&format!("horizon = {}\n", fmt_f(self.sweep.horizon)));

        s.push_str("\n[spectrum]\n");
        s.push_str(&format!("hbar = {}\n", fmt_f(self.spectrum.hbar)));
        s.push_str(&format!(
            "half_width = {}\n",
            fmt_f(self.spectrum.half_width)
        ));
        s.push_str(&format!("points = {}\n", self.spectrum.points));
        s.push_str(&format!("eigenvalues = {}\n", self.spectrum.eigenvalues));
        s.push_str(&format!("gauge = {}\n", self.spectrum.gauge));

        s.push_str("\n[fig1]\n");
        let ps: Vec<String> = self.fig1.p_values.iter().map(|&p| fmt_f(p)).collect();
        s.push_str(&format!("p_values = [{}]\n", ps.join(", ")));
        s.push_str(&format!("energy = {}\n", fmt_f(self.fig1.energy)));
        s.push_str(&format!(
            "angular_momentum = {}\n",
            fmt_f(self.fig1.angular_momentum)
        ));
        s.push_str(&format!("horizon = {}\n", fmt_f(self.fig1.horizon)));

        s.push_str("\n[output]\n");
        s.push_str(&format!("dir = \"{}\"\n", self.output_dir));
        s
    }

    /// FNV-1a hash of the canonical text, the run's provenance fingerprint.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("fnv1a64:{h:016x}")
    }
}
