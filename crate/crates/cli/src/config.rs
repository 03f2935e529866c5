//! Run configuration: `key = value` lines grouped under `[section]` headers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use stefan_core::coeff::{Coefficient, CoefficientField, Envelope, Numerics, ProblemSpec, Profile};
use stefan_core::expr::{self, Expr, ParseError};
use stefan_core::thresholds::CriteriaKind;
use thiserror::Error;
use toml::{Table, Value};

/// Largest configuration file accepted.
pub const MAX_CONFIG_BYTES: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Command {
    Simulate,
    Eigen,
    HStar,
    Speed,
    MuStar,
    Sigma0,
    Sweep,
    Criteria,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Eigen,
        Command::HStar,
        Command::Speed,
        Command::MuStar,
        Command::Sigma0,
        Command::Sweep,
        Command::Criteria,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Eigen => "eigen",
            Command::HStar => "hstar",
            Command::Speed => "speed",
            Command::MuStar => "mu-star",
            Command::Sigma0 => "sigma0",
            Command::Sweep => "sweep",
            Command::Criteria => "criteria",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Model keys the command cannot run without.
    fn required_model_keys(self) -> &'static [&'static str] {
        match self {
            Command::Eigen | Command::HStar => &["alpha", "gamma", "d", "N", "T"],
            Command::MuStar => &["alpha", "gamma", "beta", "d", "h0", "N", "T", "u0"],
            _ => &["alpha", "gamma", "beta", "d", "mu", "h0", "N", "T", "u0"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read configuration: {0}")]
    Io(String),
    #[error("configuration exceeds {MAX_CONFIG_BYTES} bytes")]
    TooLarge,
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` expects {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("key `{key}`: {source} (offset {offset})")]
    ExpressionError {
        key: String,
        offset: usize,
        source: ParseError,
    },
}

/// Every key-level problem found while loading.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// An expression kept together with its source text.
#[derive(Debug, Clone)]
pub struct ExprValue {
    pub text: String,
    pub expr: Arc<Expr>,
}

impl PartialEq for ExprValue {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl ExprValue {
    pub fn coefficient(&self) -> Coefficient {
        Coefficient::Expr(self.expr.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeConfig {
    pub lower: ExprValue,
    pub upper: ExprValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub alpha: Option<ExprValue>,
    pub gamma: Option<ExprValue>,
    pub beta: Option<ExprValue>,
    pub d: Option<f64>,
    pub mu: Option<f64>,
    pub h0: Option<f64>,
    pub dim: Option<usize>,
    pub period: Option<f64>,
    pub u0: Option<ExprValue>,
    /// Declared envelopes for alpha, gamma and beta, functions of `t`.
    pub envelopes: [Option<EnvelopeConfig>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub n: usize,
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
    pub sample_every: Option<f64>,
    pub snapshot_every: usize,
    /// Radius up to which sampled envelopes are computed when none are
    /// declared.
    pub envelope_radius: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let n = Numerics::default();
        Self {
            n: n.n,
            dt: n.dt,
            t_max: n.t_max,
            tol: n.tol,
            sample_every: None,
            snapshot_every: 1,
            envelope_radius: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenConfig {
    pub radii: Vec<f64>,
    pub n: usize,
    pub dt_max: f64,
    pub tol: f64,
    pub d_lo: Option<f64>,
    pub d_hi: Option<f64>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        let e = stefan_core::eigen::EigenOptions::default();
        Self {
            radii: Vec::new(),
            n: e.n,
            dt_max: e.dt_max,
            tol: e.tol,
            d_lo: None,
            d_hi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedConfig {
    pub window: f64,
    pub eps: f64,
    pub far_radius: f64,
    pub relax: f64,
    pub tol: f64,
    pub semiwave_n: usize,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            window: 0.5,
            eps: 1e-3,
            far_radius: 10.0,
            relax: 0.5,
            tol: 1e-6,
            semiwave_n: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub tol: f64,
    pub base_periods: usize,
    pub cap_periods: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            lo: None,
            hi: None,
            tol: 0.01,
            base_periods: 50,
            cap_periods: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisName {
    D,
    Mu,
    H0,
    Sigma,
}

impl AxisName {
    pub fn name(self) -> &'static str {
        match self {
            AxisName::D => "d",
            AxisName::Mu => "mu",
            AxisName::H0 => "h0",
            AxisName::Sigma => "sigma",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [AxisName::D, AxisName::Mu, AxisName::H0, AxisName::Sigma]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis1: Axis,
    pub axis2: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    pub eigen: EigenConfig,
    pub speed: SpeedConfig,
    pub threshold: ThresholdConfig,
    pub sweep: Option<SweepConfig>,
    pub criteria: Vec<CriteriaKind>,
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("", &["command", "seed", "output"]),
    (
        "model",
        &[
            "alpha", "gamma", "beta", "d", "mu", "h0", "N", "T", "u0", "alpha_lower", "alpha_upper",
            "gamma_lower", "gamma_upper", "beta_lower", "beta_upper",
        ],
    ),
    (
        "numerics",
        &["n", "dt", "t_max", "tol", "sample_every", "snapshot_every", "envelope_radius"],
    ),
    ("eigen", &["radii", "n", "dt_max", "tol", "d_lo", "d_hi"]),
    ("speed", &["window", "eps", "far_radius", "relax", "tol", "semiwave_n"]),
    ("thresholds", &["lo", "hi", "tol", "base_periods", "cap_periods"]),
    ("sweep", &["axis1", "axis1_values", "axis2", "axis2_values"]),
];

const CRITERIA_SECTION: (&str, &[&str]) = ("criteria", &["kinds"]);

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Reads typed values out of one section, collecting errors.
struct Reader<'a> {
    section: &'static str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn mismatch(&mut self, key: &str, expected: &'static str) {
        self.errors.push(ConfigError::TypeMismatch {
            key: qualified(self.section, key),
            expected,
        });
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            _ => {
                self.mismatch(key, "a number");
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        match self.raw(key)? {
            Value::Integer(v) if *v >= 0 => Some(*v as usize),
            _ => {
                self.mismatch(key, "a nonnegative integer");
                None
            }
        }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.mismatch(key, "a string");
                None
            }
        }
    }

    fn reals(&mut self, key: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = self.raw(key)? else {
            self.mismatch(key, "an array of numbers");
            return None;
        };
        let parsed: Option<Vec<f64>> = items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(x) => Some(*x as f64),
                _ => None,
            })
            .collect();
        if parsed.is_none() {
            self.mismatch(key, "an array of numbers");
        }
        parsed
    }

    fn strings(&mut self, key: &str) -> Option<Vec<String>> {
        let Value::Array(items) = self.raw(key)? else {
            self.mismatch(key, "an array of strings");
            return None;
        };
        let parsed: Option<Vec<String>> = items.iter().map(|v| v.as_str().map(str::to_string)).collect();
        if parsed.is_none() {
            self.mismatch(key, "an array of strings");
        }
        parsed
    }

    /// An expression in `t` and `r`; bare numbers are accepted.
    fn expression(&mut self, key: &str) -> Option<ExprValue> {
        let text = match self.raw(key)? {
            Value::String(s) => s.clone(),
            Value::Float(v) => format!("{v:?}"),
            Value::Integer(v) => v.to_string(),
            _ => {
                self.mismatch(key, "an expression string");
                return None;
            }
        };
        match expr::parse(&text) {
            Ok(e) => Some(ExprValue {
                text,
                expr: Arc::new(e),
            }),
            Err(source) => {
                let offset = match &source {
                    ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
                    _ => 0,
                };
                self.errors.push(ConfigError::ExpressionError {
                    key: qualified(self.section, key),
                    offset,
                    source,
                });
                None
            }
        }
    }
}

/// Parse configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors(vec![ConfigError::Syntax(e.message().to_string())]))?;
    let mut errors = Vec::new();

    for (key, value) in &root {
        match value {
            Value::Table(table) => {
                let allowed = SECTIONS
                    .iter()
                    .chain(std::iter::once(&CRITERIA_SECTION))
                    .find(|(s, _)| !s.is_empty() && s == key);
                match allowed {
                    None => errors.push(ConfigError::UnknownKey(key.clone())),
                    Some((section, keys)) => {
                        for inner in table.keys() {
                            if !keys.contains(&inner.as_str()) {
                                errors.push(ConfigError::UnknownKey(qualified(section, inner)));
                            }
                        }
                    }
                }
            }
            _ if SECTIONS[0].1.contains(&key.as_str()) => {}
            _ => errors.push(ConfigError::UnknownKey(key.clone())),
        }
    }
    let section = |name: &str| root.get(name).and_then(Value::as_table);

    let mut top = Reader {
        section: "",
        table: Some(&root),
        errors: &mut errors,
    };
    let command = match top.text("command") {
        Some(name) => match Command::parse(&name) {
            Some(c) => Some(c),
            None => {
                top.mismatch("command", "one of simulate, eigen, hstar, speed, mu-star, sigma0, sweep, criteria");
                None
            }
        },
        None => {
            if top.raw("command").is_none() {
                top.errors.push(ConfigError::MissingKey("command".into()));
            }
            None
        }
    };
    let seed = top.count("seed").unwrap_or(0) as u64;
    let output = top.text("output").map(PathBuf::from);

    let mut m = Reader {
        section: "model",
        table: section("model"),
        errors: &mut errors,
    };
    let envelope = |m: &mut Reader, name: &str| {
        let lower = m.expression(&format!("{name}_lower"));
        let upper = m.expression(&format!("{name}_upper"));
        match (lower, upper) {
            (Some(lower), Some(upper)) => Some(EnvelopeConfig { lower, upper }),
            (None, None) => None,
            _ => {
                m.errors.push(ConfigError::MissingKey(format!("model.{name}_lower/{name}_upper")));
                None
            }
        }
    };
    let model = ModelConfig {
        alpha: m.expression("alpha"),
        gamma: m.expression("gamma"),
        beta: m.expression("beta"),
        d: m.real("d"),
        mu: m.real("mu"),
        h0: m.real("h0"),
        dim: m.count("N"),
        period: m.real("T"),
        u0: m.expression("u0"),
        envelopes: [envelope(&mut m, "alpha"), envelope(&mut m, "gamma"), envelope(&mut m, "beta")],
    };
    if let Some(command) = command {
        for key in command.required_model_keys() {
            if m.raw(key).is_none() {
                m.errors.push(ConfigError::MissingKey((*key).to_string()));
            }
        }
    }

    let defaults = NumericsConfig::default();
    let mut r = Reader {
        section: "numerics",
        table: section("numerics"),
        errors: &mut errors,
    };
    let numerics = NumericsConfig {
        n: r.count("n").unwrap_or(defaults.n),
        dt: r.real("dt").unwrap_or(defaults.dt),
        t_max: r.real("t_max").unwrap_or(defaults.t_max),
        tol: r.real("tol").unwrap_or(defaults.tol),
        sample_every: r.real("sample_every"),
        snapshot_every: r.count("snapshot_every").unwrap_or(defaults.snapshot_every),
        envelope_radius: r.real("envelope_radius").unwrap_or(defaults.envelope_radius),
    };

    let defaults = EigenConfig::default();
    let mut r = Reader {
        section: "eigen",
        table: section("eigen"),
        errors: &mut errors,
    };
    let eigen = EigenConfig {
        radii: r.reals("radii").unwrap_or_default(),
        n: r.count("n").unwrap_or(defaults.n),
        dt_max: r.real("dt_max").unwrap_or(defaults.dt_max),
        tol: r.real("tol").unwrap_or(defaults.tol),
        d_lo: r.real("d_lo"),
        d_hi: r.real("d_hi"),
    };
    if command == Some(Command::Eigen) && eigen.radii.is_empty() && r.raw("radii").is_none() {
        r.errors.push(ConfigError::MissingKey("eigen.radii".into()));
    }

    let defaults = SpeedConfig::default();
    let mut r = Reader {
        section: "speed",
        table: section("speed"),
        errors: &mut errors,
    };
    let speed = SpeedConfig {
        window: r.real("window").unwrap_or(defaults.window),
        eps: r.real("eps").unwrap_or(defaults.eps),
        far_radius: r.real("far_radius").unwrap_or(defaults.far_radius),
        relax: r.real("relax").unwrap_or(defaults.relax),
        tol: r.real("tol").unwrap_or(defaults.tol),
        semiwave_n: r.count("semiwave_n").unwrap_or(defaults.semiwave_n),
    };

    let defaults = ThresholdConfig::default();
    let mut r = Reader {
        section: "thresholds",
        table: section("thresholds"),
        errors: &mut errors,
    };
    let threshold = ThresholdConfig {
        lo: r.real("lo"),
        hi: r.real("hi"),
        tol: r.real("tol").unwrap_or(defaults.tol),
        base_periods: r.count("base_periods").unwrap_or(defaults.base_periods),
        cap_periods: r.count("cap_periods").unwrap_or(defaults.cap_periods),
    };
    if matches!(command, Some(Command::MuStar | Command::Sigma0)) {
        for key in ["lo", "hi"] {
            if r.raw(key).is_none() {
                r.errors.push(ConfigError::MissingKey(format!("thresholds.{key}")));
            }
        }
    }

    let mut r = Reader {
        section: "sweep",
        table: section("sweep"),
        errors: &mut errors,
    };
    let axis = |r: &mut Reader, which: &str| {
        let name = match r.text(which) {
            Some(s) => match AxisName::parse(&s) {
                Some(a) => Some(a),
                None => {
                    r.mismatch(which, "one of d, mu, h0, sigma");
                    None
                }
            },
            None => None,
        };
        let values = r.reals(&format!("{which}_values"));
        match (name, values) {
            (Some(name), Some(values)) if !values.is_empty() => Some(Axis { name, values }),
            (Some(_), Some(_)) => {
                r.mismatch(&format!("{which}_values"), "a nonempty array");
                None
            }
            _ => None,
        }
    };
    let axis1 = axis(&mut r, "axis1");
    let axis2 = axis(&mut r, "axis2");
    let sweep = match (axis1, axis2) {
        (Some(axis1), Some(axis2)) => {
            if axis1.name == axis2.name {
                r.mismatch("axis2", "an axis different from axis1");
            }
            Some(SweepConfig { axis1, axis2 })
        }
        _ => {
            if command == Some(Command::Sweep) {
                for key in ["axis1", "axis1_values", "axis2", "axis2_values"] {
                    if r.raw(key).is_none() {
                        r.errors.push(ConfigError::MissingKey(format!("sweep.{key}")));
                    }
                }
            }
            None
        }
    };

    let mut r = Reader {
        section: "criteria",
        table: section("criteria"),
        errors: &mut errors,
    };
    let criteria = match r.strings("kinds") {
        Some(names) => names
            .iter()
            .filter_map(|n| {
                let kind = CriteriaKind::ALL.into_iter().find(|k| k.name() == n);
                if kind.is_none() {
                    r.mismatch("kinds", "names among slow-diffusion, fast-diffusion, large-habitat, small-habitat");
                }
                kind
            })
            .collect(),
        None => CriteriaKind::ALL.to_vec(),
    };

    match command {
        Some(command) if errors.is_empty() => Ok(RunConfig {
            command,
            seed,
            output,
            model,
            numerics,
            eigen,
            speed,
            threshold,
            sweep,
            criteria,
        }),
        _ => Err(ConfigErrors(errors)),
    }
}

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let io = |e: std::io::Error| ConfigErrors(vec![ConfigError::Io(format!("{}: {e}", path.display()))]);
    let size = std::fs::metadata(path).map_err(io)?.len();
    if size > MAX_CONFIG_BYTES {
        return Err(ConfigErrors(vec![ConfigError::TooLarge]));
    }
    parse_config(&std::fs::read_to_string(path).map_err(io)?)
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

fn real(v: f64) -> String {
    Value::Float(v).to_string()
}

fn reals(vs: &[f64]) -> String {
    let items: Vec<String> = vs.iter().map(|v| real(*v)).collect();
    format!("[{}]", items.join(", "))
}

/// Configuration text that loads back to an equal [`RunConfig`].
pub fn print_config(c: &RunConfig) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("command = {}", quote(c.command.name())));
    line(format!("seed = {}", c.seed));
    if let Some(o) = &c.output {
        line(format!("output = {}", quote(&o.to_string_lossy())));
    }

    line(String::new());
    line("[model]".into());
    let m = &c.model;
    for (key, e) in [("alpha", &m.alpha), ("gamma", &m.gamma), ("beta", &m.beta), ("u0", &m.u0)] {
        if let Some(e) = e {
            line(format!("{key} = {}", quote(&e.text)));
        }
    }
    for (key, v) in [("d", m.d), ("mu", m.mu), ("h0", m.h0), ("T", m.period)] {
        if let Some(v) = v {
            line(format!("{key} = {}", real(v)));
        }
    }
    if let Some(n) = m.dim {
        line(format!("N = {n}"));
    }
    for (name, env) in ["alpha", "gamma", "beta"].iter().zip(&m.envelopes) {
        if let Some(env) = env {
            line(format!("{name}_lower = {}", quote(&env.lower.text)));
            line(format!("{name}_upper = {}", quote(&env.upper.text)));
        }
    }

    let n = &c.numerics;
    line(String::new());
    line("[numerics]".into());
    line(format!("n = {}", n.n));
    line(format!("dt = {}", real(n.dt)));
    line(format!("t_max = {}", real(n.t_max)));
    line(format!("tol = {}", real(n.tol)));
    if let Some(s) = n.sample_every {
        line(format!("sample_every = {}", real(s)));
    }
    line(format!("snapshot_every = {}", n.snapshot_every));
    line(format!("envelope_radius = {}", real(n.envelope_radius)));

    let e = &c.eigen;
    line(String::new());
    line("[eigen]".into());
    line(format!("radii = {}", reals(&e.radii)));
    line(format!("n = {}", e.n));
    line(format!("dt_max = {}", real(e.dt_max)));
    line(format!("tol = {}", real(e.tol)));
    for (key, v) in [("d_lo", e.d_lo), ("d_hi", e.d_hi)] {
        if let Some(v) = v {
            line(format!("{key} = {}", real(v)));
        }
    }

    let s = &c.speed;
    line(String::new());
    line("[speed]".into());
    line(format!("window = {}", real(s.window)));
    line(format!("eps = {}", real(s.eps)));
    line(format!("far_radius = {}", real(s.far_radius)));
    line(format!("relax = {}", real(s.relax)));
    line(format!("tol = {}", real(s.tol)));
    line(format!("semiwave_n = {}", s.semiwave_n));

    let t = &c.threshold;
    line(String::new());
    line("[thresholds]".into());
    for (key, v) in [("lo", t.lo), ("hi", t.hi)] {
        if let Some(v) = v {
            line(format!("{key} = {}", real(v)));
        }
    }
    line(format!("tol = {}", real(t.tol)));
    line(format!("base_periods = {}", t.base_periods));
    line(format!("cap_periods = {}", t.cap_periods));

    if let Some(sw) = &c.sweep {
        line(String::new());
        line("[sweep]".into());
        line(format!("axis1 = {}", quote(sw.axis1.name.name())));
        line(format!("axis1_values = {}", reals(&sw.axis1.values)));
        line(format!("axis2 = {}", quote(sw.axis2.name.name())));
        line(format!("axis2_values = {}", reals(&sw.axis2.values)));
    }

    line(String::new());
    line("[criteria]".into());
    let kinds: Vec<String> = c.criteria.iter().map(|k| quote(k.name())).collect();
    line(format!("kinds = [{}]", kinds.join(", ")));
    out
}

/// Builds core problem types from a loaded configuration.
impl RunConfig {
    pub fn field(&self) -> CoefficientField {
        let m = &self.model;
        let coefficient = |e: &Option<ExprValue>, fallback: f64| {
            e.as_ref().map_or(Coefficient::Constant(fallback), ExprValue::coefficient)
        };
        let alpha = coefficient(&m.alpha, 0.0);
        let gamma = coefficient(&m.gamma, 0.0);
        let beta = coefficient(&m.beta, 1.0);
        let period = m.period.unwrap_or(1.0);
        let sampled = CoefficientField::with_sampled_envelopes(
            alpha.clone(),
            gamma.clone(),
            beta.clone(),
            period,
            self.numerics.envelope_radius,
        );
        let declared = |i: usize, fallback: Envelope| match &m.envelopes[i] {
            Some(env) => Envelope {
                lower: env.lower.coefficient(),
                upper: env.upper.coefficient(),
            },
            None => fallback,
        };
        let envelopes = [
            declared(0, sampled.alpha_env),
            declared(1, sampled.gamma_env),
            declared(2, sampled.beta_env),
        ];
        CoefficientField::new(alpha, gamma, beta, period, envelopes)
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            n: self.numerics.n,
            dt: self.numerics.dt,
            t_max: self.numerics.t_max,
            tol: self.numerics.tol,
        }
    }

    pub fn problem(&self) -> ProblemSpec {
        let m = &self.model;
        ProblemSpec {
            field: Arc::new(self.field()),
            dim: m.dim.unwrap_or(2),
            diffusion: m.d.unwrap_or(1.0),
            mu: m.mu.unwrap_or(1.0),
            h0: m.h0.unwrap_or(1.0),
            u0: Profile(m.u0.as_ref().map_or(Coefficient::Constant(0.0), ExprValue::coefficient)),
            numerics: self.numerics(),
        }
    }

    pub fn sample_every(&self) -> f64 {
        self.numerics
            .sample_every
            .unwrap_or_else(|| self.model.period.unwrap_or(1.0))
    }
}
