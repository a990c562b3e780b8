//! Command-line front end: potential specification files, report files and
//! the four batch commands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    fit_loglog, growth_fit, optimal_truncation, remainder_scan, truncation_terms, ExpansionSymbol, GrowthReport, LineFit,
};
use crate::error::{Error, Result};
use crate::jet::{Exponents, Jet};
use crate::kahler::{z_layout, PotentialJet};
use crate::oracles::{reproducing_test, Cutoff, KernelModel, ModelKind};
use crate::recursion::{compute_all, required_order, CoefficientTable};
use crate::scalar::{format_rational, parse_rational, Coeff, Exact, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_ORDER: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

/// Environment variable read for the worker-thread count.
pub const THREADS_ENV: &str = "BERGMAN_THREADS";

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InsufficientInputOrder { .. } => EXIT_ORDER,
        Error::Spec(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::NonHermitian(_)
        | Error::DegenerateMetric
        | Error::NotPositiveDefinite
        | Error::PreconditionViolated(_)
        | Error::LayoutMismatch(_)
        | Error::BadConstantTerm(_) => EXIT_SPEC,
        Error::QuadratureNotConverged(_)
        | Error::TailNotConverged(_)
        | Error::NonIntegrableWeight(_)
        | Error::DomainError(_)
        | Error::TruncationUnreliable(_) => EXIT_ORACLE,
        _ => EXIT_FAILURE,
    }
}

// ---------------------------------------------------------------------------
// Potential specification files

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Fock,
    FubiniStudy,
    Hyperbolic,
    /// `c_1, c_2, …` of `Σ_j c_j |z|^{2j}`.
    Radial(Vec<String>),
}

/// A number in a specification file: a rational string, or a JSON number in float mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumText {
    Text(String),
    Number(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialEntry {
    pub alpha: Vec<u16>,
    pub beta: Vec<u16>,
    pub re: NumText,
    #[serde(default = "zero_text")]
    pub im: NumText,
}

fn zero_text() -> NumText {
    NumText::Text("0".into())
}

/// On-disk form of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monomials: Vec<MonomialEntry>,
    /// Degree through which a monomial list is known; absent means the list is an exact polynomial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Rational(BigRational, BigRational),
    Float(f64, f64),
}

impl Value {
    fn conj(&self) -> Value {
        match self {
            Value::Rational(a, b) => Value::Rational(a.clone(), -b.clone()),
            Value::Float(a, b) => Value::Float(*a, -*b),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Value::Rational(a, b) => a.is_zero() && b.is_zero(),
            Value::Float(a, b) => *a == 0.0 && *b == 0.0,
        }
    }

    fn text(&self) -> (NumText, NumText) {
        match self {
            Value::Rational(a, b) => (NumText::Text(format_rational(a)), NumText::Text(format_rational(b))),
            Value::Float(a, b) => (NumText::Number(*a), NumText::Number(*b)),
        }
    }

    fn exact(&self) -> Exact {
        match self {
            Value::Rational(a, b) => Exact::from_rational(a, b),
            Value::Float(..) => unreachable!("exact potentials hold rationals"),
        }
    }

    fn float(&self) -> Complex64 {
        match self {
            Value::Rational(a, b) => Exact::from_rational(a, b).to_c64(),
            Value::Float(a, b) => Complex64::new(*a, *b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Source {
    Builtin(Builtin, KernelModel),
    Monomials { terms: BTreeMap<(Vec<u16>, Vec<u16>), Value>, order: Option<u32> },
}

/// A validated, Hermitian-completed potential specification.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub mode: Mode,
    pub n: usize,
    source: Source,
}

fn parse_num(t: &NumText, mode: Mode, what: &str) -> Result<NumValue> {
    match (t, mode) {
        (NumText::Text(s), Mode::Exact) => Ok(NumValue::R(parse_rational(s).map_err(|_| spec_err(what, s))?)),
        (NumText::Number(_), Mode::Exact) => {
            Err(Error::Spec(format!("{what}: exact mode needs rational strings such as \"1/3\"")))
        }
        (NumText::Text(s), Mode::Float) => match s.trim().parse::<f64>() {
            Ok(v) => Ok(NumValue::F(v)),
            Err(_) => Ok(NumValue::F(crate::scalar::rat_to_f64(&parse_rational(s).map_err(|_| spec_err(what, s))?))),
        },
        (NumText::Number(v), Mode::Float) => Ok(NumValue::F(*v)),
    }
}

enum NumValue {
    R(BigRational),
    F(f64),
}

fn spec_err(what: &str, s: &str) -> Error {
    Error::Spec(format!("{what}: cannot read number {s:?}"))
}

impl PotentialSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let file: PotentialSpecFile = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_file(file: &PotentialSpecFile) -> Result<Self> {
        let mode = file.mode.unwrap_or(Mode::Exact);
        if let Some(b) = &file.builtin {
            if !file.monomials.is_empty() || file.order.is_some() {
                return Err(Error::Spec("a builtin model takes no monomials or order".into()));
            }
            let n = file.dimension.unwrap_or(1);
            let model = match b {
                Builtin::Fock => KernelModel::fock(n),
                Builtin::FubiniStudy => KernelModel::fubini_study(),
                Builtin::Hyperbolic => KernelModel::hyperbolic(),
                Builtin::Radial(c) => {
                    let c = c.iter().map(|s| parse_rational(s).map_err(|_| spec_err("radial", s))).collect::<Result<_>>()?;
                    KernelModel::radial(c)
                }
            };
            if n == 0 || (model.kind != ModelKind::Fock && n != 1) {
                return Err(Error::Spec(format!("builtin {} is available for n = 1 only", model.name())));
            }
            let spec = PotentialSpec { mode, n, source: Source::Builtin(b.clone(), model) };
            match mode {
                Mode::Exact => spec.potential_exact(4).map(|_| ())?,
                Mode::Float => spec.potential_float(4).map(|_| ())?,
            }
            return Ok(spec);
        }
        let n = file.dimension.ok_or_else(|| Error::Spec("dimension is required".into()))?;
        if n == 0 {
            return Err(Error::Spec("dimension must be positive".into()));
        }
        let mut given: BTreeMap<(Vec<u16>, Vec<u16>), Value> = BTreeMap::new();
        for e in &file.monomials {
            if e.alpha.len() != n || e.beta.len() != n {
                return Err(Error::Spec(format!("monomial ({:?},{:?}) does not have {n} exponents per side", e.alpha, e.beta)));
            }
            let what = format!("coefficient of ({:?},{:?})", e.alpha, e.beta);
            let v = match (parse_num(&e.re, mode, &what)?, parse_num(&e.im, mode, &what)?) {
                (NumValue::R(a), NumValue::R(b)) => Value::Rational(a, b),
                (NumValue::F(a), NumValue::F(b)) => Value::Float(a, b),
                _ => unreachable!("one mode per file"),
            };
            let key = (e.alpha.clone(), e.beta.clone());
            if given.insert(key, v).is_some() {
                return Err(Error::Spec(format!("monomial ({:?},{:?}) is listed twice", e.alpha, e.beta)));
            }
        }
        let mut terms = BTreeMap::new();
        for ((a, b), v) in &given {
            if a.iter().chain(b).all(|&e| e == 0) && !v.is_zero() {
                return Err(Error::Spec("the constant term must be absent or zero".into()));
            }
            let mirror = v.conj();
            match given.get(&(b.clone(), a.clone())) {
                Some(w) if *w != mirror => {
                    return Err(Error::NonHermitian(format!("entry ({a:?},{b:?}) is not the conjugate of ({b:?},{a:?})")))
                }
                _ => {}
            }
            if !v.is_zero() {
                terms.insert((a.clone(), b.clone()), v.clone());
                terms.insert((b.clone(), a.clone()), mirror);
            }
        }
        if let Some(order) = file.order {
            if let Some(((a, b), _)) = terms.iter().find(|((a, b), _)| deg(a) + deg(b) > order) {
                return Err(Error::Spec(format!("monomial ({a:?},{b:?}) exceeds the declared order {order}")));
            }
        }
        let spec = PotentialSpec { mode, n, source: Source::Monomials { terms, order: file.order } };
        match mode {
            Mode::Exact => spec.potential_exact(2).map(|_| ())?,
            Mode::Float => spec.potential_float(2).map(|_| ())?,
        }
        Ok(spec)
    }

    /// Canonical on-disk form: Hermitian-completed, sorted, rationals in lowest terms.
    pub fn canonical(&self) -> PotentialSpecFile {
        match &self.source {
            Source::Builtin(b, _) => PotentialSpecFile {
                dimension: Some(self.n),
                mode: Some(self.mode),
                builtin: Some(match b {
                    Builtin::Radial(c) => Builtin::Radial(
                        c.iter().map(|s| format_rational(&parse_rational(s).expect("validated"))).collect(),
                    ),
                    other => other.clone(),
                }),
                monomials: Vec::new(),
                order: None,
            },
            Source::Monomials { terms, order } => PotentialSpecFile {
                dimension: Some(self.n),
                mode: Some(self.mode),
                builtin: None,
                monomials: terms
                    .iter()
                    .map(|((a, b), v)| {
                        let (re, im) = v.text();
                        MonomialEntry { alpha: a.clone(), beta: b.clone(), re, im }
                    })
                    .collect(),
                order: *order,
            },
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("spec files serialize")
    }

    /// SHA-256 of the canonical form.
    pub fn input_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn model(&self) -> Option<&KernelModel> {
        match &self.source {
            Source::Builtin(_, m) => Some(m),
            Source::Monomials { .. } => None,
        }
    }

    fn jet_terms<C: Coeff>(&self, f: impl Fn(&Value) -> C) -> Option<(Vec<(Exponents, C)>, u32)> {
        match &self.source {
            Source::Builtin(..) => None,
            Source::Monomials { terms, order } => {
                let top = terms.keys().map(|(a, b)| deg(a) + deg(b)).max().unwrap_or(2).max(2);
                let cap = order.unwrap_or(top);
                let t = terms.iter().map(|((a, b), v)| (a.iter().chain(b).copied().collect(), f(v))).collect();
                Some((t, cap))
            }
        }
    }

    fn build<C: Coeff>(&self, order: u32, f: impl Fn(&Value) -> C) -> Result<PotentialJet<C>> {
        match &self.source {
            Source::Builtin(_, model) => model.potential(order),
            Source::Monomials { order: declared, .. } => {
                let (t, cap) = self.jet_terms(f).expect("monomial source");
                let jet = Jet::from_terms(&z_layout(self.n), cap, t);
                if declared.is_some() {
                    PotentialJet::new(jet)
                } else {
                    PotentialJet::polynomial(jet)
                }
            }
        }
    }

    /// Exact potential; builtin series are generated through degree `order`.
    pub fn potential_exact(&self, order: u32) -> Result<PotentialJet<Exact>> {
        if self.mode != Mode::Exact {
            return Err(Error::ModeMismatch);
        }
        self.build(order, Value::exact)
    }

    pub fn potential_float(&self, order: u32) -> Result<PotentialJet<Complex64>> {
        self.build(order, Value::float)
    }
}

fn deg(e: &[u16]) -> u32 {
    e.iter().map(|&v| v as u32).sum()
}

// ---------------------------------------------------------------------------
// Report files

/// A coefficient written losslessly: `"p/q"` strings in exact mode, numbers in float mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportNum {
    Exact(String),
    Float(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub alpha: Vec<u16>,
    pub beta: Vec<u16>,
    pub re: ReportNum,
    pub im: ReportNum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub m: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    pub args: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffsReport {
    pub command: CommandEcho,
    pub input_hash: String,
    pub spec: PotentialSpecFile,
    pub mode: Mode,
    pub order: u32,
    pub cap: u32,
    pub required_input_order: u32,
    pub coefficients: Vec<CoefficientRecord>,
}

fn exact_records(t: &CoefficientTable<Exact>) -> Vec<CoefficientRecord> {
    records(t, |c| (ReportNum::Exact(format_rational(&c.re)), ReportNum::Exact(format_rational(&c.im))))
}

fn float_records(t: &CoefficientTable<Complex64>) -> Vec<CoefficientRecord> {
    records(t, |c| (ReportNum::Float(c.re), ReportNum::Float(c.im)))
}

fn records<C: Coeff>(t: &CoefficientTable<C>, f: impl Fn(&C) -> (ReportNum, ReportNum)) -> Vec<CoefficientRecord> {
    t.b.iter()
        .enumerate()
        .map(|(m, b)| {
            let n = t.n;
            let terms = b
                .terms()
                .map(|(k, c)| {
                    let (re, im) = f(c);
                    TermRecord { alpha: k[..n].to_vec(), beta: k[n..].to_vec(), re, im }
                })
                .collect();
            CoefficientRecord { m, terms }
        })
        .collect()
}

/// Rebuild an exact table from its report form.
pub fn table_from_records(n: usize, cap: u32, recs: &[CoefficientRecord]) -> Result<Vec<Jet<Exact>>> {
    recs.iter()
        .map(|r| {
            let terms = r
                .terms
                .iter()
                .map(|t| {
                    let part = |v: &ReportNum| match v {
                        ReportNum::Exact(s) => parse_rational(s),
                        ReportNum::Float(_) => Err(Error::Parse("float coefficient in an exact table".into())),
                    };
                    let key: Exponents = t.alpha.iter().chain(&t.beta).copied().collect();
                    Ok((key, Exact::new(part(&t.re)?, part(&t.im)?)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Jet::from_terms(&crate::recursion::w_layout(n), cap, terms))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub n_trunc: usize,
    pub expected_slope: f64,
    pub fit: Option<LineFit>,
    /// Every remainder is below the exactness tolerance.
    pub exact: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: CommandEcho,
    pub model: String,
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub cap: u32,
    pub k: Vec<f64>,
    pub n_trunc: Vec<usize>,
    pub remainders: Vec<Vec<f64>>,
    pub oracle_error: Vec<f64>,
    pub checks: Vec<SlopeCheck>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationChoice {
    pub k: f64,
    pub terms: Vec<f64>,
    pub n_star: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFileReport {
    pub command: CommandEcho,
    pub input_hash: String,
    pub spec: PotentialSpecFile,
    pub cap: u32,
    pub growth: GrowthReport,
    pub optimal_truncation: Vec<TruncationChoice>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproCase {
    pub degree: usize,
    pub k: Vec<f64>,
    /// Relative errors with `N` and `N+1` terms, per `k`.
    pub errors: [Vec<f64>; 2],
    pub quadrature_error: Vec<f64>,
    /// `u(x)` is reproduced to rounding for both truncations.
    pub vanishing: bool,
    /// Log–log fit of `error(N+1)/error(N)` against `k`.
    pub ratio_fit: Option<LineFit>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproReport {
    pub command: CommandEcho,
    pub model: String,
    pub x: [f64; 2],
    pub n_trunc: usize,
    pub cutoff: Cutoff,
    pub cases: Vec<ReproCase>,
    pub pass: bool,
}

/// Remainders at or below this are treated as exact zeros.
pub const EXACT_REMAINDER_TOL: f64 = 1e-12;
/// Allowed distance of a fitted log–log slope from its expected value.
pub const SLOPE_WINDOW: f64 = 0.5;
/// Jet degree of the coefficients integrated over the cutoff disc.
pub const REPRO_CAP: u32 = 16;

// ---------------------------------------------------------------------------
// Output

/// Write `contents` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn csv_field(v: impl std::fmt::Display) -> String {
    let s = v.to_string();
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn exps(e: &[u16]) -> String {
    e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn num_text(v: &ReportNum) -> String {
    match v {
        ReportNum::Exact(s) => s.clone(),
        ReportNum::Float(f) => f.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Debug, Parser)]
#[command(name = "bergman", version, about = "Bergman kernel expansion coefficients and oracle checks")]
pub struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Also write the main table as CSV to this path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute b_0..b_M for a potential specification file.
    Coeffs(CoeffsArgs),
    /// Compare the truncated expansion with a model oracle.
    Verify(VerifyArgs),
    /// Sup-norm growth of the coefficients and optimal truncation.
    Growth(GrowthArgs),
    /// Local reproducing property of the truncated kernel.
    ReproTest(ReproArgs),
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Largest m.
    #[arg(long)]
    pub order: u32,
    /// Jet degree kept in each b_m.
    #[arg(long, default_value_t = 4)]
    pub cap: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// fock, fubini_study, hyperbolic, quartic or radial.
    #[arg(long)]
    pub model: String,
    /// Dimension of the Fock model.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// λ of the quartic model |z|² + λ|z|⁴.
    #[arg(long, default_value = "1/10")]
    pub lambda: String,
    /// c_1,c_2,… of a radial model.
    #[arg(long, value_delimiter = ',')]
    pub coeffs: Vec<String>,
}

impl ModelArgs {
    pub fn model(&self) -> Result<KernelModel> {
        Ok(match self.model.as_str() {
            "fock" => KernelModel::fock(self.dim),
            "fubini_study" | "fs" => KernelModel::fubini_study(),
            "hyperbolic" => KernelModel::hyperbolic(),
            "quartic" => KernelModel::quartic(parse_rational(&self.lambda)?),
            "radial" => {
                if self.coeffs.is_empty() {
                    return Err(Error::Spec("radial model needs --coeffs".into()));
                }
                KernelModel::radial(self.coeffs.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?)
            }
            other => return Err(Error::Spec(format!("unknown model {other:?}"))),
        })
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<f64>,
    #[arg(long = "n-trunc", value_delimiter = ',', required = true)]
    pub n_trunc: Vec<usize>,
    /// First point, "re:im" per coordinate, comma separated.
    #[arg(long, default_value = "")]
    pub x: String,
    /// Second point; defaults to x.
    #[arg(long)]
    pub y: Option<String>,
    /// Jet degree of the coefficients (0 suffices at the origin).
    #[arg(long)]
    pub cap: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long = "m-max")]
    pub m_max: u32,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 4)]
    pub cap: u32,
    /// k values for the optimal-truncation readout.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
    pub k: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<f64>,
    /// N; the report compares N and N+1 terms.
    #[arg(long)]
    pub trunc: usize,
    /// Monomial degrees j of the test functions u = z^j.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub u: Vec<usize>,
    /// Centre point "re:im".
    #[arg(long, default_value = "0:0")]
    pub x: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_point(s: &str, n: usize) -> Result<Vec<Complex64>> {
    if s.trim().is_empty() {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let pts = s
        .split(',')
        .map(|c| {
            let (re, im) = c.split_once(':').unwrap_or((c, "0"));
            let p = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Spec(format!("bad coordinate {c:?}")));
            Ok(Complex64::new(p(re)?, p(im)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if pts.len() != n {
        return Err(Error::Spec(format!("point {s:?} needs {n} coordinates")));
    }
    Ok(pts)
}

fn echo(name: &str, args: &[(&str, String)]) -> CommandEcho {
    CommandEcho { name: name.into(), args: args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect() }
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Order to which a specification's potential is generated for `(M, D)`.
fn generation_order(spec: &PotentialSpec, m: u32, cap: u32) -> u32 {
    match spec.model() {
        Some(_) => required_order(m, cap),
        None => 0,
    }
}

pub fn cmd_coeffs(a: &CoeffsArgs, csv: Option<&Path>) -> Result<CoeffsReport> {
    let spec = PotentialSpec::read(&a.spec)?;
    let order = generation_order(&spec, a.order, a.cap);
    let coefficients = match spec.mode {
        Mode::Exact => exact_records(&compute_all(&spec.potential_exact(order)?, a.order, a.cap)?),
        Mode::Float => float_records(&compute_all(&spec.potential_float(order)?, a.order, a.cap)?),
    };
    let report = CoeffsReport {
        command: echo("coeffs", &[("order", a.order.to_string()), ("cap", a.cap.to_string())]),
        input_hash: spec.input_hash(),
        spec: spec.canonical(),
        mode: spec.mode,
        order: a.order,
        cap: a.cap,
        required_input_order: required_order(a.order, a.cap),
        coefficients,
    };
    write_json(&a.out, &report)?;
    if let Some(path) = csv {
        let mut s = String::from("m,alpha,beta,re,im\n");
        for r in &report.coefficients {
            for t in &r.terms {
                let _ = writeln!(s, "{},{},{},{},{}", r.m, exps(&t.alpha), exps(&t.beta), csv_field(num_text(&t.re)), csv_field(num_text(&t.im)));
            }
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(report)
}

/// Symbol for a model: coefficient table to `m_max` with jet degree `cap`.
pub fn model_symbol(model: &KernelModel, m_max: u32, cap: u32) -> Result<ExpansionSymbol> {
    let p = model.potential::<Exact>(required_order(m_max, cap).max(cap + 40))?;
    let table = compute_all(&p, m_max, cap)?;
    ExpansionSymbol::from_potential(&table, &p)
}

pub fn cmd_verify(a: &VerifyArgs, csv: Option<&Path>) -> Result<VerifyReport> {
    let model = a.model.model()?;
    let x = parse_point(&a.x, model.n)?;
    let y = match &a.y {
        Some(s) => parse_point(s, model.n)?,
        None => x.clone(),
    };
    let at_origin = x.iter().chain(&y).all(|c| c.norm() == 0.0);
    let cap = a.cap.unwrap_or(if at_origin { 0 } else { 6 });
    let m_max = a.n_trunc.iter().copied().max().unwrap_or(0) as u32;
    let symbol = model_symbol(&model, m_max, cap)?;
    let scan = remainder_scan(&model, &symbol, &a.k, &a.n_trunc, &x, &y)?;
    let checks: Vec<SlopeCheck> = a
        .n_trunc
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let exact = scan.remainders[i].iter().all(|&r| r <= EXACT_REMAINDER_TOL);
            let expected = -(n as f64 + 1.0);
            let fit = scan.slopes[i];
            let pass = exact || fit.is_some_and(|f| (f.slope - expected).abs() <= SLOPE_WINDOW);
            SlopeCheck { n_trunc: n, expected_slope: expected, fit, exact, pass }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        command: echo(
            "verify",
            &[("model", a.model.model.clone()), ("k", list(&a.k)), ("n_trunc", list(&a.n_trunc)), ("cap", cap.to_string())],
        ),
        model: model.name(),
        x: x.iter().map(|c| [c.re, c.im]).collect(),
        y: y.iter().map(|c| [c.re, c.im]).collect(),
        cap,
        k: scan.k,
        n_trunc: scan.n_trunc,
        remainders: scan.remainders,
        oracle_error: scan.oracle_error,
        checks,
        pass,
    };
    write_json(&a.out, &report)?;
    if let Some(path) = csv {
        let mut s = String::from("n_trunc,k,remainder\n");
        for (i, n) in report.n_trunc.iter().enumerate() {
            for (j, k) in report.k.iter().enumerate() {
                let _ = writeln!(s, "{n},{k},{:e}", report.remainders[i][j]);
            }
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(report)
}

pub fn cmd_growth(a: &GrowthArgs, csv: Option<&Path>) -> Result<GrowthFileReport> {
    if a.m_max < 2 {
        return Err(Error::Spec("growth needs --m-max >= 2".into()));
    }
    if !(a.radius > 0.0) {
        return Err(Error::Spec("radius must be positive".into()));
    }
    let spec = PotentialSpec::read(&a.spec)?;
    let order = generation_order(&spec, a.m_max, a.cap);
    let growth = match spec.mode {
        Mode::Exact => growth_fit(&compute_all(&spec.potential_exact(order)?, a.m_max, a.cap)?, a.radius),
        Mode::Float => growth_fit(&compute_all(&spec.potential_float(order)?, a.m_max, a.cap)?, a.radius),
    };
    let optimal_truncation = a
        .k
        .iter()
        .map(|&k| TruncationChoice { k, terms: truncation_terms(k, &growth), n_star: optimal_truncation(k, &growth) })
        .collect();
    let report = GrowthFileReport {
        command: echo(
            "growth",
            &[("m_max", a.m_max.to_string()), ("radius", a.radius.to_string()), ("cap", a.cap.to_string()), ("k", list(&a.k))],
        ),
        input_hash: spec.input_hash(),
        spec: spec.canonical(),
        cap: a.cap,
        growth,
        optimal_truncation,
    };
    write_json(&a.out, &report)?;
    if let Some(path) = csv {
        let mut s = String::from("m,sup_norm,ratio\n");
        for (m, (sn, r)) in report.growth.sup_norms.iter().zip(&report.growth.ratios).enumerate() {
            let _ = writeln!(s, "{m},{sn:e},{r:e}");
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(report)
}

/// Reproducing-test errors for `u = z^degree` with `N` and `N+1` terms.
pub fn repro_case(
    model: &KernelModel,
    symbol: &ExpansionSymbol,
    k_list: &[f64],
    n_trunc: usize,
    degree: usize,
    x: Complex64,
    cutoff: Cutoff,
) -> Result<ReproCase> {
    let mut u = vec![Complex64::new(0.0, 0.0); degree + 1];
    u[degree] = Complex64::new(1.0, 0.0);
    let mut errors = [Vec::new(), Vec::new()];
    let mut quadrature_error = Vec::new();
    for &k in k_list {
        let mut q: f64 = 0.0;
        for (slot, n) in [n_trunc, n_trunc + 1].into_iter().enumerate() {
            let r = reproducing_test(model, symbol, k, n, &u, x, cutoff, &model.quad)?;
            errors[slot].push(r.rel_error);
            q = q.max(r.quadrature_error);
        }
        quadrature_error.push(q);
    }
    let vanishing = errors.iter().flatten().all(|&e| e <= EXACT_REMAINDER_TOL);
    let ratios: Vec<f64> = errors[1].iter().zip(&errors[0]).map(|(b, a)| b / a).collect();
    let ratio_fit = if vanishing { None } else { fit_loglog(k_list, &ratios) };
    let pass = vanishing || ratio_fit.is_some_and(|f| (f.slope + 1.0).abs() <= SLOPE_WINDOW);
    Ok(ReproCase { degree, k: k_list.to_vec(), errors, quadrature_error, vanishing, ratio_fit, pass })
}

pub fn cmd_repro(a: &ReproArgs, csv: Option<&Path>) -> Result<ReproReport> {
    let model = a.model.model()?;
    if model.n != 1 {
        return Err(Error::Spec("the reproducing test is one-dimensional".into()));
    }
    let x = parse_point(&a.x, 1)?[0];
    let symbol = model_symbol(&model, a.trunc as u32 + 1, REPRO_CAP)?;
    let cutoff = Cutoff::default();
    let cases =
        a.u.iter().map(|&d| repro_case(&model, &symbol, &a.k, a.trunc, d, x, cutoff)).collect::<Result<Vec<_>>>()?;
    let pass = cases.iter().all(|c| c.pass);
    let report = ReproReport {
        command: echo("repro-test", &[("model", a.model.model.clone()), ("k", list(&a.k)), ("trunc", a.trunc.to_string()), ("u", list(&a.u))]),
        model: model.name(),
        x: [x.re, x.im],
        n_trunc: a.trunc,
        cutoff,
        cases,
        pass,
    };
    write_json(&a.out, &report)?;
    if let Some(path) = csv {
        let mut s = String::from("degree,k,n_trunc,error\n");
        for c in &report.cases {
            for (j, k) in c.k.iter().enumerate() {
                for (slot, e) in c.errors.iter().enumerate() {
                    let _ = writeln!(s, "{},{k},{},{:e}", c.degree, a.trunc + slot, e[j]);
                }
            }
        }
        write_atomic(path, s.as_bytes())?;
    }
    Ok(report)
}

/// Parse arguments, run one command, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.threads {
        // A pool can only be installed once per process; later calls keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let csv = cli.csv.as_deref();
    let result = match &cli.command {
        Command::Coeffs(a) => cmd_coeffs(a, csv).map(|_| ()),
        Command::Verify(a) => cmd_verify(a, csv).map(|_| ()),
        Command::Growth(a) => cmd_growth(a, csv).map(|_| ()),
        Command::ReproTest(a) => cmd_repro(a, csv).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_completion_and_canonical_form() {
        let text = r#"{"dimension":1,"monomials":[
            {"alpha":[1],"beta":[1],"re":"1"},
            {"alpha":[2],"beta":[1],"re":"1/4","im":"1/2"}]}"#;
        let spec = PotentialSpec::parse(text).unwrap();
        let c = spec.canonical();
        assert_eq!(c.monomials.len(), 3);
        let mirror = c.monomials.iter().find(|m| m.alpha == [1] && m.beta == [2]).unwrap();
        assert_eq!(mirror.im, NumText::Text("-1/2".into()));
        let again = PotentialSpec::parse(&spec.canonical_json()).unwrap();
        assert_eq!(again.canonical_json(), spec.canonical_json());
        assert_eq!(again.potential_exact(0).unwrap(), spec.potential_exact(0).unwrap());
    }

    #[test]
    fn conflicting_pair_is_a_spec_error() {
        let text = r#"{"dimension":1,"monomials":[
            {"alpha":[1],"beta":[1],"re":"1"},
            {"alpha":[2],"beta":[1],"re":"1"},
            {"alpha":[1],"beta":[2],"re":"2"}]}"#;
        let e = PotentialSpec::parse(text).unwrap_err();
        assert!(matches!(e, Error::NonHermitian(ref s) if s.contains("[1]") && s.contains("[2]")));
        assert_eq!(exit_code(&e), EXIT_SPEC);
    }

    #[test]
    fn constant_term_and_numbers_in_exact_mode_are_rejected() {
        let c = r#"{"dimension":1,"monomials":[{"alpha":[0],"beta":[0],"re":"1"},{"alpha":[1],"beta":[1],"re":"1"}]}"#;
        assert!(matches!(PotentialSpec::parse(c), Err(Error::Spec(_))));
        let f = r#"{"dimension":1,"monomials":[{"alpha":[1],"beta":[1],"re":1.0}]}"#;
        assert!(matches!(PotentialSpec::parse(f), Err(Error::Spec(_))));
        let ok = r#"{"dimension":1,"mode":"float","monomials":[{"alpha":[1],"beta":[1],"re":1.0}]}"#;
        assert!(PotentialSpec::parse(ok).is_ok());
    }

    #[test]
    fn builtins_parse() {
        for t in [r#"{"builtin":"fock","dimension":2}"#, r#"{"builtin":"fubini_study"}"#, r#"{"builtin":{"radial":["1","2/20"]}}"#] {
            let s = PotentialSpec::parse(t).unwrap();
            assert!(s.model().is_some());
        }
        let s = PotentialSpec::parse(r#"{"builtin":{"radial":["1","2/20"]}}"#).unwrap();
        assert!(s.canonical_json().contains("\"1/10\""));
        assert!(PotentialSpec::parse(r#"{"builtin":"hyperbolic","dimension":2}"#).is_err());
    }

    #[test]
    fn points_parse() {
        let p = parse_point("0.1:0.2,0.3", 2).unwrap();
        assert_eq!(p, vec![Complex64::new(0.1, 0.2), Complex64::new(0.3, 0.0)]);
        assert!(parse_point("0.1", 2).is_err());
    }
}
