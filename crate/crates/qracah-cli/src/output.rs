//! Output plumbing: shared flags, the config header, CSV/JSON rendering and
//! atomic file writes.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Serialize, Serializer};

use qracah::{Error, Precision, QRacahParams};

pub const BUILD: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"), "+", env!("QRACAH_BUILD_ID"));

/// Significant digits of the scientific columns.
pub const SIG_DIGITS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Working precision in decimal digits (a starting point when the command adapts it).
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    /// Seed of the random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl GlobalArgs {
    pub fn digits(&self, default: u32) -> u32 {
        self.precision.unwrap_or(default)
    }
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// A verification check failed.
    Check(String),
    /// Bad or unsupported parameters.
    Config(String),
    /// The request is too large to run.
    SizeGuard(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::SizeGuard(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::SizeGuard(m) => write!(f, "refused: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeGuard(m) => CliError::SizeGuard(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn params(q: &str, kappa: &str, digits: u32) -> CliResult<QRacahParams> {
    if digits < 10 {
        return Err(CliError::Config(format!("precision {digits} is below 10 digits")));
    }
    Ok(QRacahParams::parse(q, kappa, Precision::new(digits))?)
}

/// Inclusive integer range written `a..b`, `a..=b` or `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl IntRange {
    pub fn iter(self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let int = |v: &str| v.trim().parse::<i64>().map_err(|e| format!("{v:?}: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (int(a)?, int(b.strip_prefix('=').unwrap_or(b))?),
            None => (int(s)?, int(s)?),
        };
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        Ok(IntRange { lo, hi })
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl Serialize for IntRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Real range `a..b` for parameter grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealRange {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for RealRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s}"))?;
        let real = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        let (lo, hi) = (real(a)?, real(b)?);
        if !(lo <= hi) {
            return Err(format!("empty range {s}"));
        }
        Ok(RealRange { lo, hi })
    }
}

impl fmt::Display for RealRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl Serialize for RealRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Comma separated integers, e.g. `36,48`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntList(pub Vec<i64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntList(v))
    }
}

impl Serialize for IntList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        s.serialize_str(&parts.join(","))
    }
}

/// Semicolon separated pairs, e.g. `0,0;6,1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairList(pub Vec<(i64, i64)>);

impl FromStr for PairList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(';')
            .map(|p| {
                let l = IntList::from_str(p)?;
                match l.0.as_slice() {
                    [a, b] => Ok((*a, *b)),
                    _ => Err(format!("expected a pair, got {p:?}")),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PairList(v))
    }
}

impl Serialize for PairList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.0.iter().map(|(a, b)| format!("{a},{b}")).collect();
        s.serialize_str(&parts.join(";"))
    }
}

/// A rectangular result with free-form notes.
#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Report { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct JsonDoc<'a, C: Serialize> {
    build: &'a str,
    command: &'a str,
    config: &'a C,
    #[serde(flatten)]
    report: &'a Report,
}

/// The config line written at the top of every output.
pub fn config_json<C: Serialize>(command: &str, config: &C, global: &GlobalArgs) -> String {
    let v = serde_json::json!({ "command": command, "args": config, "global": global });
    v.to_string()
}

pub fn render<C: Serialize>(
    command: &str,
    config: &C,
    global: &GlobalArgs,
    report: &Report,
    format: Format,
) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "# {BUILD}")?;
            writeln!(buf, "# config: {}", config_json(command, config, global))?;
            for n in &report.notes {
                writeln!(buf, "# note: {n}")?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&report.columns).map_err(|e| CliError::Io(e.to_string()))?;
            for r in &report.rows {
                w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush()?;
            drop(w);
            Ok(buf)
        }
        Format::Json => {
            let cfg = serde_json::json!({ "args": config, "global": global });
            let doc = JsonDoc { build: BUILD, command, config: &cfg, report };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Svg => Err(CliError::Config(format!("{command} does not produce svg"))),
    }
}

/// Writes to `path` through a temporary file in the same directory and a
/// rename, or to standard output when `path` is `None`.
pub fn write_atomic(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| CliError::Io(e.to_string()))?;
            Ok(())
        }
    }
}

pub fn emit<C: Serialize>(
    command: &str,
    config: &C,
    global: &GlobalArgs,
    report: &Report,
    default: Format,
) -> CliResult<()> {
    let bytes = render(command, config, global, report, global.format.unwrap_or(default))?;
    write_atomic(global.out.as_deref(), &bytes)
}
