//! Run configuration: accepted keys per subcommand, config files and flag
//! merging.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const OUTPUT_ENV: &str = "IONSYNC_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Number,
    Integer,
    Bool,
    Text,
}

#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, kind, help }
}

const CUTOFF: Key = key("cutoff", Kind::Integer, "Fock cutoff N per ion");
const WORKERS: Key = key("workers", Kind::Integer, "maximum number of parallel solves");
const GATE: Key = key("gate", Kind::Bool, "compare against cutoff N+3 (true|false)");
const OMEGA1: Key = key("omega1", Kind::Number, "sideband Rabi frequency of ion 1, Ω₁/γ");
const OMEGA2: Key = key("omega2", Kind::Number, "sideband Rabi frequency of ion 2, Ω₂/γ");
const DAMPING: Key = key("damping", Kind::Number, "phonon damping Γ/γ");
const GAMMA_RATIO: Key = key("gamma-ratio", Kind::Number, "γ/Γ, alternative to --damping");
const DELTA: Key = key("delta", Kind::Number, "trap detuning Δ/γ = (ω₂ − ω₁)/γ");
const J: Key = key("j", Kind::Number, "phonon hopping J/γ");
const MODEL: Key = key("model", Kind::Text, "rwa | validation");
const ETA: Key = key("eta", Kind::Number, "Lamb-Dicke parameter (validation model)");
const OMEGA_MEAN: Key = key("omega-mean", Kind::Number, "mean trap frequency ω̄/γ (validation model)");
const GRID: Key = key("grid-points", Kind::Integer, "Wigner grid points per axis");
const EXTENT: Key = key("extent", Kind::Number, "Wigner grid half-width in x and p");
const POINTS: Key = key("points", Kind::Integer, "number of sweep points");
const STEP: Key = key("convergence-step", Kind::Integer, "cutoff increase used by the convergence gate");
const TOL: Key = key("convergence-tol", Kind::Number, "absolute tolerance of the convergence gate");

const SINGLE: &[Key] = &[OMEGA1, DAMPING, GAMMA_RATIO, CUTOFF, GATE, GRID, EXTENT, WORKERS];
const PAIR: &[Key] = &[OMEGA1, OMEGA2, DAMPING, GAMMA_RATIO, DELTA, J, MODEL, ETA, OMEGA_MEAN, CUTOFF, GATE, WORKERS];
const SWEEP: &[Key] = &[
    key("axis", Kind::Text, "Gamma | gamma_over_Gamma | Delta | Omega1 | J"),
    key("values", Kind::Text, "comma-separated axis values"),
    key("from", Kind::Number, "first axis value (with --to and --points)"),
    key("to", Kind::Number, "last axis value"),
    POINTS,
    key("observables", Kind::Text, "comma-separated observable names"),
    key("ions", Kind::Integer, "1 or 2"),
    key("spectra", Kind::Bool, "write P(φ) for every point"),
    MODEL,
    OMEGA1,
    OMEGA2,
    DAMPING,
    GAMMA_RATIO,
    DELTA,
    J,
    ETA,
    OMEGA_MEAN,
    CUTOFF,
    GATE,
    STEP,
    TOL,
    WORKERS,
];
const FIG2: &[Key] = &[OMEGA1, CUTOFF, POINTS, GATE, GRID, EXTENT, WORKERS];
const FIG3: &[Key] = &[
    key("panel", Kind::Text, "all | a | b | c | d | e"),
    OMEGA2,
    DAMPING,
    GAMMA_RATIO,
    J,
    CUTOFF,
    GATE,
    WORKERS,
];
const FIG4: &[Key] = &[
    key("balanced", Kind::Text, "true | false | both"),
    key("validation", Kind::Bool, "overlay the lab-frame model"),
    key("validation-cutoff", Kind::Integer, "cutoff of the lab-frame model"),
    POINTS,
    CUTOFF,
    GATE,
    WORKERS,
];
const VALIDATE: &[Key] = &[
    OMEGA1,
    OMEGA2,
    DAMPING,
    GAMMA_RATIO,
    DELTA,
    J,
    ETA,
    OMEGA_MEAN,
    CUTOFF,
    key("validation-cutoff", Kind::Integer, "cutoff of the lab-frame model"),
    GATE,
    WORKERS,
];
const WIGNER: &[Key] = &[
    OMEGA1,
    DAMPING,
    GAMMA_RATIO,
    CUTOFF,
    GRID,
    EXTENT,
    key("project", Kind::Text, "none or a spin projection such as z- or x+"),
];
const LAB: &[Key] = &[
    key("omega-d", Kind::Text, "dressing Rabi frequency"),
    key("delta-d", Kind::Text, "dressing detuning"),
    key("gamma-1", Kind::Text, "decay rate to the ground state"),
    key("gamma-2", Kind::Text, "decay rate back to the spin-up state"),
    key("omega-c", Kind::Text, "cooling Rabi frequency"),
    key("delta-c", Kind::Text, "cooling detuning"),
    key("gamma-c", Kind::Text, "cooling transition linewidth"),
    key("omega-trap", Kind::Text, "trap frequency"),
    key("j", Kind::Text, "phonon hopping rate"),
    key("eta", Kind::Number, "Lamb-Dicke parameter"),
    key("wavelength", Kind::Number, "drive wavelength in metres"),
    key("ion-mass", Kind::Number, "ion mass in atomic mass units"),
    key("cooling-source", Kind::Text, "direct | quoted"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Single,
    Pair,
    Sweep,
    Fig2,
    Fig3,
    Fig4,
    Validate,
    Wigner,
    Lab,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::Single,
        Subcommand::Pair,
        Subcommand::Sweep,
        Subcommand::Fig2,
        Subcommand::Fig3,
        Subcommand::Fig4,
        Subcommand::Validate,
        Subcommand::Wigner,
        Subcommand::Lab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Single => "single",
            Subcommand::Pair => "pair",
            Subcommand::Sweep => "sweep",
            Subcommand::Fig2 => "fig2",
            Subcommand::Fig3 => "fig3",
            Subcommand::Fig4 => "fig4",
            Subcommand::Validate => "validate",
            Subcommand::Wigner => "wigner",
            Subcommand::Lab => "lab",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Subcommand::Single => "steady state of one ion",
            Subcommand::Pair => "steady state of two coupled ions",
            Subcommand::Sweep => "generic parameter sweep",
            Subcommand::Fig2 => "single-ion lasing sweep, Wigner function and spin-phonon profile",
            Subcommand::Fig3 => "phase distributions and S against detuning and drive imbalance",
            Subcommand::Fig4 => "spin correlators, phase moments and S against detuning",
            Subcommand::Validate => "rotating-wave versus lab-frame model at one point",
            Subcommand::Wigner => "Wigner function of the single-ion steady state",
            Subcommand::Lab => "laboratory rates and dimensionless ratios",
        }
    }

    pub fn keys(self) -> &'static [Key] {
        match self {
            Subcommand::Single => SINGLE,
            Subcommand::Pair => PAIR,
            Subcommand::Sweep => SWEEP,
            Subcommand::Fig2 => FIG2,
            Subcommand::Fig3 => FIG3,
            Subcommand::Fig4 => FIG4,
            Subcommand::Validate => VALIDATE,
            Subcommand::Wigner => WIGNER,
            Subcommand::Lab => LAB,
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Fully merged configuration. `parameters` holds only keys that were set
/// explicitly; defaults are applied when the run is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub output: PathBuf,
    pub format: Format,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
}

/// A configuration file before flags are merged in.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<Subcommand>,
    output: Option<PathBuf>,
    format: Option<Format>,
    #[serde(default)]
    parameters: BTreeMap<String, Value>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn command() -> Command {
    let mut cmd = Command::new("ionsync")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Steady states and synchronization observables of trapped-ion phonon lasers")
        .subcommand_required(false)
        .arg(Arg::new("config").long("config").global(true).value_name("PATH").help("JSON or TOML run configuration"))
        .arg(Arg::new("output").long("output").global(true).value_name("DIR").help("output directory"))
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_parser(["csv", "json", "both"])
                .help("output format"),
        );
    for sub in Subcommand::ALL {
        let mut c = Command::new(sub.name()).about(sub.about());
        for k in sub.keys() {
            c = c.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(k.help).action(ArgAction::Set).allow_hyphen_values(true));
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

pub fn accepted_keys(sub: Subcommand) -> String {
    sub.keys().iter().map(|k| k.name).collect::<Vec<_>>().join(", ")
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

/// Converts a flag or file value to the JSON value stored in the config.
fn typed_value(sub: Subcommand, k: &Key, raw: &Value) -> anyhow::Result<Value> {
    let bad = |what: &str| usage(format!("{sub}: value {raw} for key '{}' is not {what}", k.name));
    match k.kind {
        Kind::Number => match raw {
            Value::Number(_) => Ok(raw.clone()),
            Value::String(s) => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .ok_or_else(|| bad("a number")),
            _ => Err(bad("a number")),
        },
        Kind::Integer => match raw {
            Value::Number(n) if n.is_u64() => Ok(raw.clone()),
            Value::String(s) => s.trim().parse::<u64>().map(|v| Value::from(v)).map_err(|_| bad("a non-negative integer")),
            _ => Err(bad("a non-negative integer")),
        },
        Kind::Bool => match raw {
            Value::Bool(_) => Ok(raw.clone()),
            Value::String(s) => match s.trim() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(bad("true or false")),
            },
            _ => Err(bad("true or false")),
        },
        Kind::Text => match raw {
            Value::String(_) => Ok(raw.clone()),
            Value::Number(n) => Ok(Value::String(n.to_string())),
            Value::Bool(b) => Ok(Value::String(b.to_string())),
            _ => Err(bad("a string")),
        },
    }
}

fn check_parameters(sub: Subcommand, params: BTreeMap<String, Value>) -> anyhow::Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for (raw_key, v) in params {
        let name = normalize(&raw_key);
        let k = sub.keys().iter().find(|k| k.name == name).ok_or_else(|| {
            usage(format!(
                "{sub}: unknown key '{raw_key}'; accepted keys: {}",
                accepted_keys(sub)
            ))
        })?;
        out.insert(name, typed_value(sub, k, &v)?);
    }
    Ok(out)
}

/// Reads a JSON or TOML run configuration. A `meta.json` written by an
/// earlier run is accepted too; its `config` block is used.
fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let bad = |e: &dyn fmt::Display| usage(format!("{}: {e}", path.display()));
    let is_toml = path.extension().and_then(|e| e.to_str()) == Some("toml");
    if is_toml {
        return toml::from_str::<FileConfig>(&text).map_err(|e| bad(&e));
    }
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
    if doc.get("conventions").is_some() {
        if let Some(cfg) = doc.get_mut("config") {
            doc = cfg.take();
        }
    }
    serde_json::from_value::<FileConfig>(doc).map_err(|e| bad(&e))
}

/// Parses command-line arguments (including the program name) into a
/// validated configuration. Flags override file values.
pub fn parse_config<I, T>(args: I) -> anyhow::Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString>,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let matches = match command().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) if e.kind() == clap::error::ErrorKind::UnknownArgument => {
            let sub = args.iter().filter_map(|a| a.to_str()).find_map(Subcommand::from_name);
            let mut msg = e.render().to_string();
            if let Some(sub) = sub {
                msg.push_str(&format!("accepted keys for {sub}: {}", accepted_keys(sub)));
            }
            return Err(usage(msg.trim_end().to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let (sub_matches, sub_from_cli) = match matches.subcommand() {
        Some((name, m)) => (Some(m), Subcommand::from_name(name)),
        None => (None, None),
    };
    let global = sub_matches.unwrap_or(&matches);
    let file = match global.get_one::<String>("config") {
        Some(p) => read_file(Path::new(p))?,
        None => FileConfig::default(),
    };
    let sub = sub_from_cli
        .or(file.subcommand)
        .ok_or_else(|| usage(format!("missing subcommand; expected one of {}", names())))?;
    if let (Some(a), Some(b)) = (sub_from_cli, file.subcommand) {
        if a != b {
            return Err(usage(format!("config file is for '{b}' but the command line asks for '{a}'")));
        }
    }
    let mut params = check_parameters(sub, file.parameters)?;
    if let Some(m) = sub_matches {
        params.extend(flag_values(sub, m)?);
    }
    let output = global
        .get_one::<String>("output")
        .map(PathBuf::from)
        .or(file.output)
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(|d| PathBuf::from(d).join(sub.name())))
        .unwrap_or_else(|| PathBuf::from("ionsync-output").join(sub.name()));
    let format = match global.get_one::<String>("format").map(String::as_str) {
        Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(_) => Format::Both,
        None => file.format.unwrap_or(Format::Csv),
    };
    Ok(RunConfig { subcommand: sub, output, format, parameters: params })
}

fn names() -> String {
    Subcommand::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

fn flag_values(sub: Subcommand, m: &ArgMatches) -> anyhow::Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    for k in sub.keys() {
        if let Some(raw) = m.get_one::<String>(k.name) {
            out.insert(k.name.to_string(), typed_value(sub, k, &Value::String(raw.clone()))?);
        }
    }
    Ok(out)
}

/// Typed access to the parameter map.
pub struct Params<'a> {
    sub: Subcommand,
    map: &'a BTreeMap<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Params { sub: cfg.subcommand, map: &cfg.parameters }
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn number(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).and_then(Value::as_f64).unwrap_or(default)
    }

    pub fn opt_number(&self, key: &str) -> Option<f64> {
        self.map.get(key).and_then(Value::as_f64)
    }

    pub fn integer(&self, key: &str, default: usize) -> usize {
        self.map.get(key).and_then(Value::as_u64).map(|v| v as usize).unwrap_or(default)
    }

    pub fn flag(&self, key: &str, default: bool) -> bool {
        self.map.get(key).and_then(Value::as_bool).unwrap_or(default)
    }

    pub fn text(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).and_then(Value::as_str)
    }

    pub fn invalid(&self, msg: impl fmt::Display) -> anyhow::Error {
        usage(format!("{}: {msg}", self.sub))
    }
}
