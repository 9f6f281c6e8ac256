//! Command-line front end. `run` holds all logic so it can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::connes::{ExtendedDistance, SolverOptions, SpectralDistanceSolver, StateDistance};
use crate::error::{Error, Result};
use crate::models::{
    density_to_bloch, m2_diagonal_triple, m2_moyal_algebra, two_point_triple, BlochPoint, M2DiagonalModel,
    MoyalCostParams, MoyalModel, TwoPointModel,
};
use crate::transport::{kantorovich_dual, make_cost_space, wasserstein_primal, FiniteCostSpace, ProbabilityVector, SpaceSpec};
use crate::triple::{DensityState, FiniteSpectralTriple};
use crate::verify::verify_suite;
use crate::wd::{densities, pure_sample_costs, quotient_transport, sphere_sample, wd_distance, PureStateSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Parser, Debug, Serialize)]
#[command(name = "nckant", version, about = "Spectral and transport distances on finite spectral triples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct CommonArgs {
    /// Relative duality-gap target of the spectral-distance solver.
    #[arg(long, global = true, default_value_t = SolverOptions::default().tol)]
    pub tol: f64,
    /// Iteration cap per solver restart.
    #[arg(long = "max-iter", global = true, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, global = true, env = "NCKANT_SEED", default_value_t = SolverOptions::default().seed)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = SolverOptions::default().restarts)]
    pub restarts: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the resolved configuration and exit without computing.
    #[arg(long = "echo-config", global = true)]
    pub echo_config: bool,
}

impl CommonArgs {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_iter, restarts: self.restarts, seed: self.seed }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Spectral distance between two states.
    Distance(DistanceArgs),
    /// Wasserstein-1 distance and optimal plan on a finite cost space.
    Wasserstein(TransportArgs),
    /// Optimal Kantorovich potentials on a finite cost space.
    Dual(TransportArgs),
    /// Sampled W_D distance between two states.
    Wd(WdArgs),
    /// Transport between sphere measures with prescribed barycenters.
    Quotient(QuotientArgs),
    /// Pairwise costs of a pure-state sample or of a cost space.
    CostMatrix(CostMatrixArgs),
    /// Describe a built-in model.
    Model(ModelCmdArgs),
    /// Run the verification suite and write its report.
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Distance(_) => "distance",
            Command::Wasserstein(_) => "wasserstein",
            Command::Dual(_) => "dual",
            Command::Wd(_) => "wd",
            Command::Quotient(_) => "quotient",
            Command::CostMatrix(_) => "cost-matrix",
            Command::Model(_) => "model",
            Command::Verify => "verify",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TwoPoint,
    M2Diagonal,
    M2Moyal,
    TwoSheet,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Closed form when the model has one and no Dirac operator is available, else the solver.
    Auto,
    Solver,
    Analytic,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Triple JSON file, used instead of --model.
    #[arg(long, conflicts_with = "model")]
    pub triple: Option<PathBuf>,
    /// Off-diagonal Dirac entry of the two-point model, e.g. 2 or 1+i.
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub d1: Option<f64>,
    #[arg(long)]
    pub d2: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "inv-m")]
    pub inv_m: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// deltaK, mixed, bloch:x,y,z or a state JSON file.
    #[arg(long = "state-a")]
    pub state_a: String,
    #[arg(long = "state-b")]
    pub state_b: String,
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,
}

#[derive(Args, Debug, Serialize)]
pub struct TransportArgs {
    /// cycle:N, interval:N, two-sheet:INV_M:BASE or a cost-space JSON file.
    #[arg(long)]
    pub space: String,
    /// dirac:K, uniform, an inline JSON array, or a JSON/CSV file.
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub nu: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    /// Sphere sample such as fib:50+poles+point:1,0,0, or a sample JSON file.
    #[arg(long)]
    pub sample: Option<String>,
    /// Shorthand for --sample fib:N.
    #[arg(long = "sample-size", conflicts_with = "sample")]
    pub sample_size: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct WdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long)]
    pub phi: String,
    #[arg(long)]
    pub psi: String,
    /// How sample costs are computed.
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,
    /// Do not add the sphere endpoints of the chord through phi and psi to the sample.
    #[arg(long = "no-chord-endpoints")]
    pub no_chord_endpoints: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct QuotientArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Barycenter of the source measure, bloch:x,y,z.
    #[arg(long)]
    pub phi: String,
    #[arg(long)]
    pub psi: String,
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,
}

#[derive(Args, Debug, Serialize)]
pub struct CostMatrixArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Emit the cost matrix of this space instead of a sample.
    #[arg(long, conflicts_with_all = ["sample", "sample_size"])]
    pub space: Option<String>,
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelCmdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Base space of the two-sheet model.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long = "state-a", requires = "state_b")]
    pub state_a: Option<String>,
    #[arg(long = "state-b", requires = "state_a")]
    pub state_b: Option<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "nckant: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::IterationLimit(_) => EXIT_NOT_CONVERGED,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Serialize)]
struct EchoConfig<'a> {
    command: &'a str,
    solver: SolverOptions,
    format: Format,
    out: Option<&'a Path>,
    args: &'a Command,
}

enum Output {
    Json(serde_json::Value),
    Csv(Vec<Vec<String>>),
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let opts = cli.common.solver_options();
    opts.validate()?;
    if cli.common.echo_config {
        let cfg = EchoConfig {
            command: cli.command.name(),
            solver: opts,
            format: cli.common.format,
            out: cli.common.out.as_deref(),
            args: &cli.command,
        };
        emit(&cli.common, Output::Json(serde_json::to_value(cfg)?), out)?;
        return Ok(EXIT_OK);
    }
    let csv = cli.common.format == Format::Csv;
    let (output, code) = match &cli.command {
        Command::Distance(a) => distance(a, &opts, csv)?,
        Command::Wasserstein(a) => wasserstein(a, csv)?,
        Command::Dual(a) => dual(a, csv)?,
        Command::Wd(a) => wd(a, &opts, csv)?,
        Command::Quotient(a) => quotient(a, &opts, csv)?,
        Command::CostMatrix(a) => cost_matrix(a, &opts, csv)?,
        Command::Model(a) => model(a, csv)?,
        Command::Verify => {
            let report = verify_suite(&opts)?;
            for c in report.failures() {
                writeln!(err, "FAIL {}: expected {:?}, computed {:?} (tol {})", c.id, c.expected.0, c.computed.0, c.tolerance)?;
            }
            writeln!(err, "{} of {} checks passed", report.checks.iter().filter(|c| c.pass).count(), report.checks.len())?;
            let code = if report.overall { EXIT_OK } else { EXIT_VALIDATION };
            let output = if csv {
                let mut rows = vec![strings(&["id", "anchor", "expected", "computed", "tolerance", "pass"])];
                for c in &report.checks {
                    rows.push(vec![
                        c.id.clone(),
                        c.anchor.clone(),
                        num(c.expected.0),
                        num(c.computed.0),
                        num(c.tolerance),
                        c.pass.to_string(),
                    ]);
                }
                Output::Csv(rows)
            } else {
                Output::Json(serde_json::to_value(&report)?)
            };
            (output, code)
        }
    };
    emit(&cli.common, output, out)?;
    if code == EXIT_NOT_CONVERGED {
        writeln!(err, "nckant: solver stopped before reaching the requested gap")?;
    } else if code == EXIT_INFEASIBLE {
        writeln!(err, "nckant: no coupling with finite cost exists")?;
    }
    Ok(code)
}

fn emit(common: &CommonArgs, output: Output, out: &mut dyn Write) -> Result<()> {
    let bytes = match output {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v)?;
            s.push('\n');
            s.into_bytes()
        }
        Output::Csv(rows) => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            for r in rows {
                w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))?
        }
    };
    match &common.out {
        Some(p) => std::fs::write(p, bytes)?,
        None => out.write_all(&bytes)?,
    }
    Ok(())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// A model resolved into a triple and, when available, a closed form.
struct Resolved {
    kind: Option<ModelKind>,
    triple: FiniteSpectralTriple,
    analytic: Option<Box<dyn StateDistance>>,
}

impl Resolved {
    fn metric(&self, backend: Backend, opts: &SolverOptions, prefer_analytic: bool) -> Result<Box<dyn StateDistance + '_>> {
        let use_analytic = match backend {
            Backend::Analytic => true,
            Backend::Solver => false,
            Backend::Auto => self.analytic.is_some() && (prefer_analytic || self.kind == Some(ModelKind::M2Moyal)),
        };
        if use_analytic {
            match &self.analytic {
                Some(a) => Ok(Box::new(Borrowed(a.as_ref()))),
                None => Err(Error::NotApplicable("this model has no closed form; use --backend solver".into())),
            }
        } else {
            Ok(Box::new(SpectralDistanceSolver::new(&self.triple, opts.clone())?))
        }
    }

    fn is_qubit(&self) -> bool {
        self.triple.hilbert_dim() == 2
    }
}

struct Borrowed<'a>(&'a dyn StateDistance);

impl StateDistance for Borrowed<'_> {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        self.0.distance(rho, sigma)
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, model: &str) -> Result<T> {
    v.ok_or_else(|| Error::validation(format!("--{flag} is required for the {model} model")))
}

fn resolve(m: &ModelArgs) -> Result<Resolved> {
    if let Some(path) = &m.triple {
        let triple: FiniteSpectralTriple = serde_json::from_str(&read(path)?)?;
        return Ok(Resolved { kind: None, triple, analytic: None });
    }
    let kind = m.model.ok_or_else(|| Error::validation("either --model or --triple is required"))?;
    match kind {
        ModelKind::TwoPoint => {
            let raw = m.m.as_deref().ok_or_else(|| Error::validation("--m is required for the two-point model"))?;
            let c: Complex64 = raw.parse().map_err(|_| Error::Parse(format!("bad complex number {raw:?}")))?;
            Ok(Resolved {
                kind: Some(kind),
                triple: two_point_triple(c, false),
                analytic: Some(Box::new(TwoPointModel { m: c })),
            })
        }
        ModelKind::M2Diagonal => {
            let (d1, d2) = (need(m.d1, "d1", "m2-diagonal")?, need(m.d2, "d2", "m2-diagonal")?);
            Ok(Resolved {
                kind: Some(kind),
                triple: m2_diagonal_triple(d1, d2)?,
                analytic: Some(Box::new(M2DiagonalModel { d1, d2 })),
            })
        }
        ModelKind::M2Moyal => {
            let params = MoyalCostParams::new(need(m.theta, "theta", "m2-moyal")?)?;
            Ok(Resolved { kind: Some(kind), triple: m2_moyal_algebra(), analytic: Some(Box::new(MoyalModel { params })) })
        }
        ModelKind::TwoSheet => Err(Error::NotApplicable(
            "two-sheet is a cost-space model; use --space two-sheet:INV_M:BASE with wasserstein or dual".into(),
        )),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_bloch(s: &str) -> Result<Option<BlochPoint>> {
    let Some(rest) = s.strip_prefix("bloch:") else {
        return Ok(None);
    };
    let v: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad Bloch vector {rest:?}")))?;
    match v[..] {
        [x, y, z] => Ok(Some(BlochPoint::new(x, y, z)?)),
        _ => Err(Error::Parse(format!("Bloch vector needs 3 coordinates, got {rest:?}"))),
    }
}

/// `deltaK` (1-based), `mixed`, `bloch:x,y,z` or a JSON file.
pub fn parse_state(s: &str, dim: usize) -> Result<DensityState> {
    if let Some(k) = s.strip_prefix("delta") {
        let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad state {s:?}")))?;
        if k == 0 {
            return Err(Error::validation("delta states are numbered from 1"));
        }
        return DensityState::basis_projector(dim, k - 1);
    }
    if s == "mixed" {
        return Ok(DensityState::maximally_mixed(dim));
    }
    if let Some(p) = parse_bloch(s)? {
        if dim != 2 {
            return Err(Error::validation(format!("Bloch states need a 2-dimensional Hilbert space, not {dim}")));
        }
        return crate::models::bloch_to_density(&p);
    }
    let state: DensityState = serde_json::from_str(&read(Path::new(s))?)?;
    if state.dim() != dim {
        return Err(Error::dims(format!("state of dimension {} for a triple of dimension {dim}", state.dim())));
    }
    Ok(state)
}

/// `cycle:N`, `interval:N`, `two-sheet:INV_M:BASE` or a JSON file.
pub fn parse_space(s: &str) -> Result<FiniteCostSpace> {
    let count = |x: &str| x.parse::<usize>().map_err(|_| Error::Parse(format!("bad point count {x:?}")));
    if let Some(n) = s.strip_prefix("cycle:") {
        return make_cost_space(SpaceSpec::Cycle(count(n)?));
    }
    if let Some(n) = s.strip_prefix("interval:") {
        return make_cost_space(SpaceSpec::Interval(count(n)?));
    }
    if let Some(rest) = s.strip_prefix("two-sheet:") {
        let (inv, base) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected two-sheet:INV_M:BASE, got {s:?}")))?;
        let inv_m: f64 = inv.parse().map_err(|_| Error::Parse(format!("bad inv_m {inv:?}")))?;
        return make_cost_space(SpaceSpec::TwoSheet { base: Box::new(parse_space(base)?), inv_m });
    }
    Ok(serde_json::from_str(&read(Path::new(s))?)?)
}

/// `dirac:K` (0-based), `uniform`, an inline JSON array, or a JSON/CSV file.
pub fn parse_measure(s: &str, k: usize) -> Result<ProbabilityVector> {
    if let Some(i) = s.strip_prefix("dirac:") {
        let i: usize = i.parse().map_err(|_| Error::Parse(format!("bad index {i:?}")))?;
        return ProbabilityVector::dirac(k, i);
    }
    if s == "uniform" {
        return ProbabilityVector::uniform(k);
    }
    if s.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(s)?);
    }
    let path = Path::new(s);
    let text = read(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
        let mut w = Vec::new();
        for rec in r.records() {
            for field in rec?.iter().map(str::trim).filter(|f| !f.is_empty()) {
                w.push(field.parse::<f64>().map_err(|_| Error::Parse(format!("bad weight {field:?} in {s}")))?);
            }
        }
        return ProbabilityVector::new(w);
    }
    Ok(serde_json::from_str(&text)?)
}

fn distance(a: &DistanceArgs, opts: &SolverOptions, csv: bool) -> Result<(Output, i32)> {
    let r = resolve(&a.model)?;
    let dim = r.triple.hilbert_dim();
    let (rho, sigma) = (parse_state(&a.state_a, dim)?, parse_state(&a.state_b, dim)?);
    let d = r.metric(a.backend, opts, false)?.distance(&rho, &sigma)?;
    let code = if d.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
    let output = if csv {
        Output::Csv(vec![
            strings(&["finite", "value", "gap", "iterations", "converged"]),
            vec![d.finite.to_string(), num(d.value), num(d.gap_estimate), d.iterations.to_string(), d.converged.to_string()],
        ])
    } else {
        Output::Json(serde_json::to_value(&d)?)
    };
    Ok((output, code))
}

fn marginals(a: &TransportArgs) -> Result<(FiniteCostSpace, ProbabilityVector, ProbabilityVector)> {
    let space = parse_space(&a.space)?;
    let k = space.size();
    let (mu, nu) = (parse_measure(&a.mu, k)?, parse_measure(&a.nu, k)?);
    Ok((space, mu, nu))
}

fn plan_rows(labels: &[String], plan: &[Vec<f64>], cost: impl Fn(usize, usize) -> f64) -> Vec<Vec<String>> {
    let mut rows = vec![strings(&["source", "target", "mass", "cost"])];
    for (i, row) in plan.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                rows.push(vec![labels[i].clone(), labels[j].clone(), num(x), num(cost(i, j))]);
            }
        }
    }
    rows
}

fn wasserstein(a: &TransportArgs, csv: bool) -> Result<(Output, i32)> {
    let (space, mu, nu) = marginals(a)?;
    let plan = wasserstein_primal(&space, &mu, &nu)?;
    let code = if plan.value.is_infinite() { EXIT_INFEASIBLE } else { EXIT_OK };
    let output = if csv {
        Output::Csv(plan_rows(space.points(), &plan.plan, |i, j| space.cost(i, j)))
    } else {
        Output::Json(serde_json::to_value(&plan)?)
    };
    Ok((output, code))
}

fn dual(a: &TransportArgs, csv: bool) -> Result<(Output, i32)> {
    let (space, mu, nu) = marginals(a)?;
    let w = kantorovich_dual(&space, &mu, &nu)?;
    let code = if w.value.is_infinite() { EXIT_INFEASIBLE } else { EXIT_OK };
    let output = if csv {
        let mut rows = vec![strings(&["point", "potential"])];
        if w.target_potential.is_some() {
            rows[0].push("target_potential".into());
        }
        for (i, p) in space.points().iter().enumerate() {
            let mut r = vec![p.clone(), num(w.potential.get(i).copied().unwrap_or(0.0))];
            if let Some(t) = &w.target_potential {
                r.push(num(t[i]));
            }
            rows.push(r);
        }
        Output::Csv(rows)
    } else {
        Output::Json(serde_json::to_value(&w)?)
    };
    Ok((output, code))
}

/// Sphere points where the line through `p` and `q` leaves the ball.
fn chord_endpoints(p: &BlochPoint, q: &BlochPoint) -> Option<[BlochPoint; 2]> {
    let (p, q) = (p.coords(), q.coords());
    let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    let a: f64 = d.iter().map(|x| x * x).sum();
    if a < 1e-24 {
        return None;
    }
    let b: f64 = 2.0 * p.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>();
    let c: f64 = p.iter().map(|x| x * x).sum::<f64>() - 1.0;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let at = |t: f64| {
        let v = [p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        BlochPoint::new(v[0] / n, v[1] / n, v[2] / n).ok()
    };
    Some([at((-b - disc) / (2.0 * a))?, at((-b + disc) / (2.0 * a))?])
}

fn sample_points(s: &SampleArgs, extra: &[BlochPoint]) -> Result<Vec<BlochPoint>> {
    let spec = match (&s.sample, s.sample_size) {
        (Some(spec), _) => spec.clone(),
        (None, Some(n)) => format!("fib:{n}"),
        (None, None) => return Err(Error::validation("--sample or --sample-size is required")),
    };
    let mut pts = sphere_sample(&spec)?;
    for p in extra {
        if pts.iter().all(|q| q.distance(p) > 1e-12) {
            pts.push(*p);
        }
    }
    Ok(pts)
}

fn is_file(s: &SampleArgs) -> bool {
    s.sample.as_deref().is_some_and(|p| Path::new(p).is_file())
}

/// The sample with its costs, read from a file or built from a sphere spec.
fn build_sample(
    r: &Resolved,
    s: &SampleArgs,
    extra: &[BlochPoint],
    backend: Backend,
    opts: &SolverOptions,
) -> Result<PureStateSample> {
    if is_file(s) {
        let path = s.sample.as_deref().map(Path::new).expect("checked");
        let sample: PureStateSample = serde_json::from_str(&read(path)?)?;
        if sample.states().first().is_some_and(|st| st.dim() != r.triple.hilbert_dim()) {
            return Err(Error::dims("sample states do not match the triple dimension"));
        }
        return Ok(sample);
    }
    if !r.is_qubit() {
        return Err(Error::validation("sphere samples need a 2-dimensional Hilbert space; pass a sample file"));
    }
    let pts = sample_points(s, extra)?;
    pure_sample_costs(r.triple.label(), densities(&pts)?, r.metric(backend, opts, true)?.as_ref())
}

fn wd(a: &WdArgs, opts: &SolverOptions, csv: bool) -> Result<(Output, i32)> {
    let r = resolve(&a.model)?;
    let dim = r.triple.hilbert_dim();
    let (phi, psi) = (parse_state(&a.phi, dim)?, parse_state(&a.psi, dim)?);
    let mut extra = Vec::new();
    if !a.no_chord_endpoints && r.is_qubit() && !is_file(&a.sample) {
        if let Some(ends) = chord_endpoints(&density_to_bloch(&phi)?, &density_to_bloch(&psi)?) {
            extra.extend(ends);
        }
    }
    let sample = build_sample(&r, &a.sample, &extra, a.backend, opts)?;
    let res = wd_distance(&sample, &r.triple, &phi, &psi)?;
    let output = if csv {
        Output::Csv(vec![strings(&["finite", "value"]), vec![res.finite.to_string(), num(res.value)]])
    } else {
        Output::Json(serde_json::to_value(&res)?)
    };
    Ok((output, EXIT_OK))
}

fn quotient(a: &QuotientArgs, opts: &SolverOptions, csv: bool) -> Result<(Output, i32)> {
    let r = resolve(&a.model)?;
    if !r.is_qubit() {
        return Err(Error::validation("quotient transport needs a 2-dimensional Hilbert space"));
    }
    let bary = |s: &str| -> Result<BlochPoint> {
        match parse_bloch(s)? {
            Some(p) => Ok(p),
            None => density_to_bloch(&parse_state(s, 2)?),
        }
    };
    let (phi, psi) = (bary(&a.phi)?, bary(&a.psi)?);
    let pts = sample_points(&a.sample, &[])?;
    let sample = pure_sample_costs(r.triple.label(), densities(&pts)?, r.metric(a.backend, opts, true)?.as_ref())?;
    let plan = quotient_transport(&pts, sample.costs(), &phi, &psi)?;
    let output = if csv {
        let labels: Vec<String> = pts.iter().map(|p| format!("{} {} {}", p.x(), p.y(), p.z())).collect();
        Output::Csv(plan_rows(&labels, &plan.plan, |i, j| sample.costs()[i][j]))
    } else {
        #[derive(Serialize)]
        struct Q<'a> {
            points: Vec<[f64; 3]>,
            #[serde(flatten)]
            plan: &'a crate::transport::TransportPlan,
        }
        Output::Json(serde_json::to_value(Q { points: pts.iter().map(|p| p.coords()).collect(), plan: &plan })?)
    };
    Ok((output, EXIT_OK))
}

fn matrix_rows(labels: &[String], m: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut head = vec!["label".to_string()];
    head.extend(labels.iter().cloned());
    let mut rows = vec![head];
    for (l, row) in labels.iter().zip(m) {
        let mut r = vec![l.clone()];
        r.extend(row.iter().map(|&x| num(x)));
        rows.push(r);
    }
    rows
}

fn cost_matrix(a: &CostMatrixArgs, opts: &SolverOptions, csv: bool) -> Result<(Output, i32)> {
    if let Some(spec) = &a.space {
        let space = parse_space(spec)?;
        let output = if csv {
            Output::Csv(matrix_rows(space.points(), space.cost_matrix()))
        } else {
            Output::Json(serde_json::to_value(&space)?)
        };
        return Ok((output, EXIT_OK));
    }
    let r = resolve(&a.model)?;
    let sample = build_sample(&r, &a.sample, &[], a.backend, opts)?;
    let output = if csv {
        let labels: Vec<String> = sample
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| match density_to_bloch(s) {
                Ok(p) => format!("{} {} {}", p.x(), p.y(), p.z()),
                Err(_) => i.to_string(),
            })
            .collect();
        Output::Csv(matrix_rows(&labels, sample.costs()))
    } else {
        Output::Json(serde_json::to_value(&sample)?)
    };
    Ok((output, EXIT_OK))
}

fn model(a: &ModelCmdArgs, csv: bool) -> Result<(Output, i32)> {
    if csv {
        return Err(Error::validation("model output is JSON only"));
    }
    if a.model.model == Some(ModelKind::TwoSheet) {
        let inv_m = need(a.model.inv_m, "inv-m", "two-sheet")?;
        let base = parse_space(a.space.as_deref().ok_or_else(|| Error::validation("--space is required for the two-sheet model"))?)?;
        let space = make_cost_space(SpaceSpec::TwoSheet { base: Box::new(base), inv_m })?;
        return Ok((Output::Json(serde_json::json!({ "model": "two-sheet", "space": space })), EXIT_OK));
    }
    let r = resolve(&a.model)?;
    let mut v = serde_json::json!({
        "model": a.model.model.map(serde_json::to_value).transpose()?,
        "triple": r.triple,
        "kernel_dim": SpectralDistanceSolver::new(&r.triple, SolverOptions::default())?.kernel_dim(),
    });
    if let (Some(sa), Some(sb)) = (&a.state_a, &a.state_b) {
        let dim = r.triple.hilbert_dim();
        let analytic = r
            .analytic
            .as_ref()
            .ok_or_else(|| Error::NotApplicable("triples read from files have no closed form".into()))?;
        let d = analytic.distance(&parse_state(sa, dim)?, &parse_state(sb, dim)?)?;
        v["distance"] = serde_json::to_value(&d)?;
    }
    Ok((Output::Json(v), EXIT_OK))
}
