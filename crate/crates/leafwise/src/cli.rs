//! Command-line front end: scenario parsing, solver dispatch, CSV emission
//! and run reports.
//!
//! Every subcommand writes a CSV data file (full double precision, LF line
//! endings, byte-identical across runs for identical scenarios) plus a plain
//! text run report with one pass/fail line per headline metric. Exit codes:
//! 0 when every declared tolerance passes, 1 for solver or tolerance
//! failures, 2 for usage errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bundle::{
    circle_bundle_solve, glue_general, read_cover, verify_cocycle, BundleCover, GluedSection,
};
use crate::catalog::{LeafFunction, TrigTerm};
use crate::error::{Error, Result};
use crate::flow::{
    smoothness_order_check, solve_field, solve_field_derivative, FlowField, FlowMap, Region,
    ScalarField,
};
use crate::geometry::{AnnulusFunction, AnnulusTerm, TorusFlow, TorusFunction, TorusTerm, Wave};
use crate::operator::{ode_residual, solve_on_line, OperatorConfig, SolutionProfile};
use crate::singular::{
    circle_obstruction, singular_line_residual, singular_line_solve, CocycleWeight, DEFAULT_CUTOFFS,
};
use crate::verify::run_suite;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LEAFWISE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "leafwise",
    version,
    about = "Bounded solution operators for u + Xu = v along foliation leaves",
    after_help = "Function specs:\n  \
        leaf:    const:<c> | fourier:P=<p>[,mean=<m>][,a<k>=<c>][,b<k>=<c>] | poly:lo=<a>,hi=<b>,c0=<c0>[,c1=...]\n  \
        torus:   const:<c> | terms:<coeff>,<xwave>,<ywave>[;...]      (wave: 1 | cos<k> | sin<k>)\n  \
        annulus: const:<c> | terms:<coeff>,<r-poly c0:c1:...>,<wave>[;...]\n  \
        space:   const:<c> | coord:<axis>[,scale=<s>] | sin:<axis>[,freq=<f>][,amp=<a>][,phase=<p>]\n  \
        grid:    <min>:<max>:<count>"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Target truncation error of the weighted-integral operator.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Maximum quadrature panel width.
    #[arg(long, default_value_t = 1e-2)]
    quad_step: f64,
    /// Safety depth added to the derived truncation.
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    /// Truncation depth override (derived from the input bound when absent).
    #[arg(long)]
    truncation: Option<f64>,
}

impl ConfigArgs {
    /// Validated configuration; violations are scenario-level usage errors.
    fn to_config(&self) -> SpecResult<OperatorConfig> {
        let mut cfg = OperatorConfig::new(self.epsilon)
            .with_quad_step(self.quad_step)
            .with_margin(self.margin);
        if let Some(t) = self.truncation {
            cfg = cfg.with_truncation(t);
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    fn echo(&self) -> String {
        let mut s = format!(
            "--epsilon {:e} --quad-step {:e} --margin {}",
            self.epsilon, self.quad_step, self.margin
        );
        if let Some(t) = self.truncation {
            let _ = write!(s, " --truncation {t:e}");
        }
        s
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output CSV path (solve-annulus: output directory). Defaults to
    /// <subcommand>.csv under $LEAFWISE_OUT_DIR or the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve u + u' = v on a line grid.
    SolveLine {
        /// Leaf function spec, e.g. const:1 or fourier:P=6.2831853,a1=1
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Grid spec min:max:count, e.g. -2:2:401
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Residual tolerance for the pass/fail verdict.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve along a torus leaf of the irrational linear flow.
    SolveTorus {
        /// Torus function spec, e.g. terms:1,cos1,1
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Leaf offset C of the leaf (t, slope t + C).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Optional residual tolerance; without it the residual is
        /// informational and the periodicity defect is the verdict.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve along one spiral leaf of the annulus foliation.
    SolveSpiral {
        /// Annulus function spec, e.g. terms:1,-1:1,cos1 for (r-1)cos(theta)
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Spiral label s in [-pi, pi].
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        leaf: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Optional residual tolerance; informational when absent.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve on sampled spirals plus both boundary circles of the annulus.
    SolveAnnulus {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Leaf label sample spec min:max:count within [-pi, pi].
        #[arg(long, allow_hyphen_values = true)]
        leaves: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve U + XU = V along a flow and check its derivatives.
    SolveFlow {
        /// Field preset: unit-x:<dim> or rotation.
        #[arg(long)]
        field: String,
        /// Scalar fieldspec, e.g. const:1, coord:0, sin:0
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Evaluation point, comma separated, e.g. 0.4 or 1,0
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Axis for the derivative checks.
        #[arg(long, default_value_t = 0)]
        axis: usize,
        /// Finite-difference step for the derivative comparison.
        #[arg(long, default_value_t = 1e-4)]
        fd_step: f64,
        /// Highest derivative order in the smoothness report (1..=3).
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the weighted singular equation on the line.
    SingularLine {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value = "-2:2:401", allow_hyphen_values = true)]
        grid: String,
        /// Junction-gap tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Probe the periodicity obstruction on the circle with zeros.
    CircleObstruction {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Exponential rate of the weight family f = e^{rate theta}.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rate: f64,
        /// Comma-separated arc cutoffs.
        #[arg(long, default_value = "1e-2,1e-3,1e-4")]
        cutoffs: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify a cover's cocycle and glue per-box data into a section.
    BundleGlue {
        /// Cover: circle | torus | annulus | inconsistent3 | <path>.
        #[arg(long)]
        cover: String,
        /// Trivialized data, one leaf spec applied to every box.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Grid points per box.
        #[arg(long, default_value_t = 129)]
        points: usize,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a module's invariant battery (or all of them).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

// ---------------------------------------------------------------------------
// Spec grammars
// ---------------------------------------------------------------------------

/// Usage-level error: wrong grammar in a flag value.
#[derive(Debug)]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

type SpecResult<T> = std::result::Result<T, UsageError>;

fn parse_number(s: &str, what: &str) -> SpecResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("{what}: bad number `{s}`")))
}

pub fn parse_grid_spec(spec: &str) -> SpecResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("grid spec `{spec}` must be min:max:count")));
    }
    let lo = parse_number(parts[0], "grid min")?;
    let hi = parse_number(parts[1], "grid max")?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| usage(format!("grid count: bad integer `{}`", parts[2])))?;
    if count < 3 {
        return Err(usage("grid count must be at least 3"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(usage("grid needs finite min < max"));
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

fn split_kv(body: &str) -> SpecResult<Vec<(String, String)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got `{p}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn parse_leaf_spec(spec: &str) -> SpecResult<LeafFunction> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("function spec `{spec}` needs kind:params")))?;
    match kind {
        "const" => {
            let c = parse_number(body, "const value")?;
            LeafFunction::constant(c).map_err(|e| usage(e.to_string()))
        }
        "fourier" => {
            let mut period = None;
            let mut mean = 0.0;
            let mut terms: std::collections::BTreeMap<u32, TrigTerm> = Default::default();
            for (k, v) in split_kv(body)? {
                let value = parse_number(&v, &k)?;
                if k == "P" {
                    period = Some(value);
                } else if k == "mean" {
                    mean = value;
                } else if let Some(idx) = k.strip_prefix('a') {
                    let h: u32 = idx
                        .parse()
                        .map_err(|_| usage(format!("bad harmonic `{k}`")))?;
                    terms
                        .entry(h)
                        .or_insert(TrigTerm {
                            harmonic: h,
                            cos_coeff: 0.0,
                            sin_coeff: 0.0,
                        })
                        .cos_coeff = value;
                } else if let Some(idx) = k.strip_prefix('b') {
                    let h: u32 = idx
                        .parse()
                        .map_err(|_| usage(format!("bad harmonic `{k}`")))?;
                    terms
                        .entry(h)
                        .or_insert(TrigTerm {
                            harmonic: h,
                            cos_coeff: 0.0,
                            sin_coeff: 0.0,
                        })
                        .sin_coeff = value;
                } else {
                    return Err(usage(format!("unknown fourier key `{k}`")));
                }
            }
            let period = period.ok_or_else(|| usage("fourier spec needs P=<period>"))?;
            LeafFunction::trig(period, mean, terms.into_values().collect())
                .map_err(|e| usage(e.to_string()))
        }
        "poly" => {
            let mut lo = None;
            let mut hi = None;
            let mut coeffs: std::collections::BTreeMap<usize, f64> = Default::default();
            for (k, v) in split_kv(body)? {
                let value = parse_number(&v, &k)?;
                if k == "lo" {
                    lo = Some(value);
                } else if k == "hi" {
                    hi = Some(value);
                } else if let Some(idx) = k.strip_prefix('c') {
                    let d: usize = idx
                        .parse()
                        .map_err(|_| usage(format!("bad degree `{k}`")))?;
                    coeffs.insert(d, value);
                } else {
                    return Err(usage(format!("unknown poly key `{k}`")));
                }
            }
            let lo = lo.ok_or_else(|| usage("poly spec needs lo=<a>"))?;
            let hi = hi.ok_or_else(|| usage("poly spec needs hi=<b>"))?;
            let degree = coeffs.keys().max().copied().unwrap_or(0);
            let mut c = vec![0.0; degree + 1];
            for (d, value) in coeffs {
                c[d] = value;
            }
            LeafFunction::polynomial(c, lo, hi).map_err(|e| usage(e.to_string()))
        }
        other => Err(usage(format!("unknown function kind `{other}`"))),
    }
}

fn parse_wave(s: &str) -> SpecResult<Wave> {
    let s = s.trim();
    if s == "1" {
        return Ok(Wave::One);
    }
    if let Some(k) = s.strip_prefix("cos") {
        return Ok(Wave::Cos(
            k.parse().map_err(|_| usage(format!("bad wave `{s}`")))?,
        ));
    }
    if let Some(k) = s.strip_prefix("sin") {
        return Ok(Wave::Sin(
            k.parse().map_err(|_| usage(format!("bad wave `{s}`")))?,
        ));
    }
    Err(usage(format!(
        "bad wave `{s}`; expected 1, cos<k> or sin<k>"
    )))
}

pub fn parse_torus_spec(spec: &str) -> SpecResult<TorusFunction> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("torus spec `{spec}` needs kind:params")))?;
    match kind {
        "const" => TorusFunction::constant(parse_number(body, "const value")?)
            .map_err(|e| usage(e.to_string())),
        "terms" => {
            let mut terms = Vec::new();
            for term in body.split(';') {
                let parts: Vec<&str> = term.split(',').collect();
                if parts.len() != 3 {
                    return Err(usage(format!(
                        "torus term `{term}` must be coeff,xwave,ywave"
                    )));
                }
                terms.push(TorusTerm {
                    coeff: parse_number(parts[0], "torus coeff")?,
                    x_wave: parse_wave(parts[1])?,
                    y_wave: parse_wave(parts[2])?,
                });
            }
            TorusFunction::new(terms).map_err(|e| usage(e.to_string()))
        }
        other => Err(usage(format!("unknown torus kind `{other}`"))),
    }
}

pub fn parse_annulus_spec(spec: &str) -> SpecResult<AnnulusFunction> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("annulus spec `{spec}` needs kind:params")))?;
    match kind {
        "const" => AnnulusFunction::constant(parse_number(body, "const value")?)
            .map_err(|e| usage(e.to_string())),
        "terms" => {
            let mut terms = Vec::new();
            for term in body.split(';') {
                let parts: Vec<&str> = term.split(',').collect();
                if parts.len() != 3 {
                    return Err(usage(format!(
                        "annulus term `{term}` must be coeff,<c0:c1:...>,wave"
                    )));
                }
                let radial = parts[1]
                    .split(':')
                    .map(|c| parse_number(c, "radial coefficient"))
                    .collect::<SpecResult<Vec<f64>>>()?;
                terms.push(AnnulusTerm {
                    coeff: parse_number(parts[0], "annulus coeff")?,
                    radial,
                    angular: parse_wave(parts[2])?,
                });
            }
            AnnulusFunction::new(terms).map_err(|e| usage(e.to_string()))
        }
        other => Err(usage(format!("unknown annulus kind `{other}`"))),
    }
}

pub fn parse_space_spec(spec: &str) -> SpecResult<ScalarField> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("space spec `{spec}` needs kind:params")))?;
    match kind {
        "const" => Ok(ScalarField::Constant(parse_number(body, "const value")?)),
        "coord" => {
            let mut parts = body.split(',');
            let axis: usize = parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| usage("coord spec needs an axis index"))?;
            let mut scale = 1.0;
            for extra in parts {
                let (k, v) = extra
                    .split_once('=')
                    .ok_or_else(|| usage(format!("expected key=value, got `{extra}`")))?;
                if k.trim() == "scale" {
                    scale = parse_number(v, "scale")?;
                } else {
                    return Err(usage(format!("unknown coord key `{k}`")));
                }
            }
            Ok(ScalarField::Coordinate { axis, scale })
        }
        "sin" => {
            let mut parts = body.split(',');
            let axis: usize = parts
                .next()
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| usage("sin spec needs an axis index"))?;
            let (mut freq, mut amp, mut phase) = (1.0, 1.0, 0.0);
            for extra in parts {
                let (k, v) = extra
                    .split_once('=')
                    .ok_or_else(|| usage(format!("expected key=value, got `{extra}`")))?;
                match k.trim() {
                    "freq" => freq = parse_number(v, "freq")?,
                    "amp" => amp = parse_number(v, "amp")?,
                    "phase" => phase = parse_number(v, "phase")?,
                    other => return Err(usage(format!("unknown sin key `{other}`"))),
                }
            }
            Ok(ScalarField::Wave {
                axis,
                freq,
                amp,
                phase,
            })
        }
        other => Err(usage(format!("unknown space kind `{other}`"))),
    }
}

pub fn parse_point(spec: &str) -> SpecResult<Vec<f64>> {
    spec.split(',')
        .map(|p| parse_number(p, "point coordinate"))
        .collect()
}

fn field_preset(name: &str) -> SpecResult<FlowMap> {
    let build = |components: Vec<ScalarField>, region: Region, floor: f64| -> SpecResult<FlowMap> {
        FlowField::new(components, region, 1e-3, floor)
            .map(FlowMap::new)
            .map_err(|e| usage(e.to_string()))
    };
    if let Some(dim_str) = name.strip_prefix("unit-x:") {
        let dim: usize = dim_str
            .parse()
            .map_err(|_| usage(format!("bad dimension `{dim_str}`")))?;
        if dim == 0 || dim > 4 {
            return Err(usage("unit-x dimension must be 1..=4"));
        }
        let mut components = vec![ScalarField::Constant(1.0)];
        components.resize(dim, ScalarField::Constant(0.0));
        let mut lo = vec![-5.0; dim];
        let mut hi = vec![5.0; dim];
        lo[0] = -40.0;
        hi[0] = 10.0;
        let region = Region::new(lo, hi).map_err(|e| usage(e.to_string()))?;
        return build(components, region, 0.5);
    }
    if name == "rotation" {
        let region = Region::new(vec![-3.0, -3.0], vec![3.0, 3.0])
            .and_then(|r| r.with_hole(vec![-0.25, -0.25], vec![0.25, 0.25]))
            .map_err(|e| usage(e.to_string()))?;
        return build(
            vec![
                ScalarField::Coordinate {
                    axis: 1,
                    scale: -1.0,
                },
                ScalarField::Coordinate {
                    axis: 0,
                    scale: 1.0,
                },
            ],
            region,
            0.2,
        );
    }
    Err(usage(format!(
        "unknown field preset `{name}`; expected unit-x:<dim> or rotation"
    )))
}

// ---------------------------------------------------------------------------
// Reports and CSV
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Metric {
    fn checked(name: &str, value: f64, tolerance: f64) -> Self {
        Metric {
            name: name.to_string(),
            value,
            tolerance: Some(tolerance),
            passed: value.is_finite() && value <= tolerance,
        }
    }

    fn informational(name: &str, value: f64) -> Self {
        Metric {
            name: name.to_string(),
            value,
            tolerance: None,
            passed: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub metrics: Vec<Metric>,
    pub wall_ms: f64,
    pub passed: bool,
}

impl RunReport {
    fn new(scenario: String, metrics: Vec<Metric>, wall_ms: f64) -> Self {
        let passed = metrics.iter().all(|m| m.passed);
        RunReport {
            scenario,
            metrics,
            wall_ms,
            passed,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("scenario: {}\n", self.scenario);
        for m in &self.metrics {
            match m.tolerance {
                Some(tol) => {
                    let _ = writeln!(
                        out,
                        "metric {} = {:.6e} [{}] (tol {:.3e})",
                        m.name,
                        m.value,
                        if m.passed { "pass" } else { "fail" },
                        tol
                    );
                }
                None => {
                    let _ = writeln!(out, "metric {} = {:.6e}", m.name, m.value);
                }
            }
        }
        let _ = writeln!(out, "wall_time_ms = {:.3}", self.wall_ms);
        let _ = writeln!(out, "status: {}", if self.passed { "pass" } else { "fail" });
        out
    }
}

/// Writes a CSV file: a `# columns:` header line then comma-separated rows
/// at full double precision (17 significant digits), LF endings.
pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = format!("# columns: {}\n", columns.join(","));
    for row in rows {
        let mut first = true;
        for value in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{value:.16e}");
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(Error::Io)?;
    Ok(())
}

fn profile_rows(profile: &SolutionProfile) -> Vec<Vec<f64>> {
    profile.iter().map(|(t, u)| vec![t, u]).collect()
}

fn section_rows(section: &GluedSection) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for (k, profile) in section.profiles.iter().enumerate() {
        for (&t, &u) in profile.grid.iter().zip(&profile.values) {
            rows.push(vec![k as f64, t, u]);
        }
    }
    rows
}

fn default_out(subcommand: &str) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{subcommand}.csv"))
}

fn report_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("report.txt")
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Parses process arguments and runs; returns the process exit code.
pub fn run_from_args() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own message; exit 2 on usage errors, 0 on
            // --help/--version.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    run_parsed(cli)
}

/// Test entry: run with explicit arguments.
pub fn run_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    run_parsed(cli)
}

fn run_parsed(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(passed) => {
            if passed {
                0
            } else {
                1
            }
        }
        Err(DispatchError::Usage(UsageError(msg))) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(DispatchError::Module(err)) => {
            eprintln!("error: {err}");
            1
        }
    }
}

enum DispatchError {
    Usage(UsageError),
    Module(Error),
}

impl From<UsageError> for DispatchError {
    fn from(e: UsageError) -> Self {
        DispatchError::Usage(e)
    }
}

impl From<Error> for DispatchError {
    fn from(e: Error) -> Self {
        DispatchError::Module(e)
    }
}

type DispatchResult = std::result::Result<bool, DispatchError>;

fn finish(
    subcommand: &str,
    out: &OutputArgs,
    scenario: String,
    metrics: Vec<Metric>,
    csv: Option<(&[&str], Vec<Vec<f64>>)>,
    started: Instant,
) -> DispatchResult {
    let csv_path = out.out.clone().unwrap_or_else(|| default_out(subcommand));
    if let Some((columns, rows)) = csv {
        write_csv(&csv_path, columns, &rows).map_err(DispatchError::Module)?;
    }
    let report = RunReport::new(scenario, metrics, started.elapsed().as_secs_f64() * 1e3);
    let rendered = report.render();
    print!("{rendered}");
    std::fs::write(report_path(&csv_path), rendered)
        .map_err(Error::Io)
        .map_err(DispatchError::Module)?;
    Ok(report.passed)
}

fn dispatch(command: Command) -> DispatchResult {
    match command {
        Command::SolveLine {
            v,
            grid,
            tol,
            config,
            output,
        } => {
            let started = Instant::now();
            let leaf = parse_leaf_spec(&v)?;
            let grid_points = parse_grid_spec(&grid)?;
            let cfg = config.to_config()?;
            let profile = solve_on_line(&leaf, &grid_points, &cfg)?;
            let residual = ode_residual(&profile, &leaf)?;
            let scenario = format!("solve-line --v {v} --grid {grid} {}", config.echo());
            let metrics = vec![
                Metric::checked("residual_sup", residual, tol),
                Metric::informational("truncation_used", profile.truncation_used()),
            ];
            finish(
                "solve-line",
                &output,
                scenario,
                metrics,
                Some((&["t", "u"], profile_rows(&profile))),
                started,
            )
        }
        Command::SolveTorus {
            v,
            offset,
            grid,
            tol,
            config,
            output,
        } => {
            let started = Instant::now();
            let torus_v = parse_torus_spec(&v)?;
            let grid_points = parse_grid_spec(&grid)?;
            let cfg = config.to_config()?;
            let flow = TorusFlow::new(offset);
            let profile = crate::geometry::torus_solve(&torus_v, &flow, &grid_points, &cfg)?;
            let mut defect: f64 = 0.0;
            for &t in grid_points
                .iter()
                .step_by(grid_points.len().div_ceil(8).max(1))
            {
                defect = defect.max(crate::geometry::torus_periodicity_defect(
                    &torus_v, &flow, t, &cfg,
                )?);
            }
            let scenario = format!(
                "solve-torus --v {v} --offset {offset} --grid {grid} {}",
                config.echo()
            );
            let residual = profile.residual_sup().unwrap_or(f64::NAN);
            let metrics = vec![
                match tol {
                    Some(tol) => Metric::checked("residual_sup", residual, tol),
                    None => Metric::informational("residual_sup", residual),
                },
                Metric::checked("periodicity_defect", defect, 2.0 * cfg.epsilon),
            ];
            finish(
                "solve-torus",
                &output,
                scenario,
                metrics,
                Some((&["t", "u"], profile_rows(&profile))),
                started,
            )
        }
        Command::SolveSpiral {
            v,
            leaf,
            grid,
            tol,
            config,
            output,
        } => {
            let started = Instant::now();
            let annulus_v = parse_annulus_spec(&v)?;
            let grid_points = parse_grid_spec(&grid)?;
            let cfg = config.to_config()?;
            let profile = crate::geometry::spiral_solve(&annulus_v, leaf, &grid_points, &cfg)?;
            let theta_min = grid_points[0];
            let theta_max = grid_points[grid_points.len() - 1];
            let residual = profile.residual_sup().unwrap_or(f64::NAN);
            let mut metrics = vec![match tol {
                Some(tol) => Metric::checked("residual_sup", residual, tol),
                None => Metric::informational("residual_sup", residual),
            }];
            if theta_min < 0.0 {
                metrics.push(Metric::informational(
                    "inner_gap",
                    crate::geometry::asymptotic_gap(&annulus_v, leaf, theta_min, &cfg)?,
                ));
            }
            if theta_max > 0.0 {
                metrics.push(Metric::informational(
                    "outer_gap",
                    crate::geometry::asymptotic_gap(&annulus_v, leaf, theta_max, &cfg)?,
                ));
            }
            let scenario = format!(
                "solve-spiral --v {v} --leaf {leaf} --grid {grid} {}",
                config.echo()
            );
            finish(
                "solve-spiral",
                &output,
                scenario,
                metrics,
                Some((&["theta", "u"], profile_rows(&profile))),
                started,
            )
        }
        Command::SolveAnnulus {
            v,
            leaves,
            grid,
            config,
            output,
        } => {
            let started = Instant::now();
            let annulus_v = parse_annulus_spec(&v)?;
            let leaf_labels = parse_grid_spec(&leaves)?;
            let grid_points = parse_grid_spec(&grid)?;
            let cfg = config.to_config()?;
            let section =
                crate::bundle::annulus_bundle_solve(&annulus_v, &leaf_labels, &grid_points, &cfg)?;

            // One file per leaf plus an index file in the output directory.
            let out_dir = output
                .out
                .clone()
                .unwrap_or_else(|| default_out("solve-annulus").with_extension(""));
            std::fs::create_dir_all(&out_dir)
                .map_err(Error::Io)
                .map_err(DispatchError::Module)?;
            let mut index = String::from("# columns: leaf,s,file\n");
            for (k, (s, profile)) in section.spirals.iter().enumerate() {
                let name = format!("leaf_{k:03}.csv");
                write_csv(
                    &out_dir.join(&name),
                    &["theta", "u"],
                    &profile_rows(profile),
                )
                .map_err(DispatchError::Module)?;
                let _ = writeln!(index, "{k},{s:.16e},{name}");
            }
            for (name, profile) in [
                ("circle_inner.csv", &section.inner_circle),
                ("circle_outer.csv", &section.outer_circle),
            ] {
                write_csv(&out_dir.join(name), &["theta", "u"], &profile_rows(profile))
                    .map_err(DispatchError::Module)?;
            }
            let _ = writeln!(index, "inner,1,circle_inner.csv");
            let _ = writeln!(index, "outer,2,circle_outer.csv");
            std::fs::write(out_dir.join("index.csv"), index)
                .map_err(Error::Io)
                .map_err(DispatchError::Module)?;

            let worst_gap = section
                .inner_gaps
                .iter()
                .chain(&section.outer_gaps)
                .fold(0.0_f64, |m, g| m.max(g.2));
            let scenario = format!(
                "solve-annulus --v {v} --leaves {leaves} --grid {grid} {}",
                config.echo()
            );
            let metrics = vec![
                Metric::informational("max_leaf_delta", section.max_leaf_delta()),
                Metric::informational("max_boundary_gap", worst_gap),
            ];
            let report = RunReport::new(scenario, metrics, started.elapsed().as_secs_f64() * 1e3);
            let rendered = report.render();
            print!("{rendered}");
            std::fs::write(out_dir.join("run.report.txt"), rendered)
                .map_err(Error::Io)
                .map_err(DispatchError::Module)?;
            Ok(report.passed)
        }
        Command::SolveFlow {
            field,
            v,
            point,
            axis,
            fd_step,
            max_order,
            tol,
            config,
            output,
        } => {
            let started = Instant::now();
            let map = field_preset(&field)?;
            let space_v = parse_space_spec(&v)?;
            let x = parse_point(&point)?;
            if x.len() != map.field().dimension() {
                return Err(DispatchError::Usage(usage(format!(
                    "point dimension {} does not match field dimension {}",
                    x.len(),
                    map.field().dimension()
                ))));
            }
            let cfg = config.to_config()?;
            let u = solve_field(&space_v, &map, &x, &cfg)?;
            let direct = solve_field_derivative(&space_v, &map, &x, axis, fd_step, &cfg)?;
            let mut up_point = x.clone();
            up_point[axis] += fd_step;
            let mut down_point = x.clone();
            down_point[axis] -= fd_step;
            let fd = (solve_field(&space_v, &map, &up_point, &cfg)?
                - solve_field(&space_v, &map, &down_point, &cfg)?)
                / (2.0 * fd_step);
            let report_orders =
                smoothness_order_check(&space_v, &map, &x, axis, max_order, 1e-3, &cfg)?;

            let mut rows = vec![
                vec![0.0, u],
                vec![1.0, direct],
                vec![2.0, fd],
                vec![3.0, (direct - fd).abs()],
            ];
            let mut metrics = vec![
                Metric::informational("u_value", u),
                Metric::checked("derivative_agreement", (direct - fd).abs(), tol),
            ];
            for check in &report_orders.orders {
                rows.push(vec![10.0 + check.order as f64, check.richardson_order]);
                if !check.richardson_order.is_nan() {
                    metrics.push(Metric::informational(
                        &format!("richardson_order_{}", check.order),
                        check.richardson_order,
                    ));
                }
            }
            let scenario = format!(
                "solve-flow --field {field} --v {v} --point {point} --axis {axis} --fd-step {fd_step:e} {}",
                config.echo()
            );
            finish(
                "solve-flow",
                &output,
                scenario,
                metrics,
                Some((&["quantity", "value"], rows)),
                started,
            )
        }
        Command::SingularLine {
            v,
            grid,
            tol,
            output,
        } => {
            let started = Instant::now();
            let leaf = parse_leaf_spec(&v)?;
            let grid_points = parse_grid_spec(&grid)?;
            let solution = singular_line_solve(&leaf, &grid_points)?;
            let residual = singular_line_residual(&solution, &leaf)?;
            let mut rows = Vec::new();
            for (b, branch) in solution.branches().iter().enumerate() {
                for (&x, &u) in branch.grid.iter().zip(&branch.values) {
                    rows.push(vec![(b + 1) as f64, x, u]);
                }
            }
            let worst_gap = solution
                .junction_gaps
                .iter()
                .fold(0.0_f64, |m, g| m.max(*g));
            let scenario = format!("singular-line --v {v} --grid {grid}");
            let metrics = vec![
                Metric::checked("max_junction_gap", worst_gap, tol),
                Metric::informational("sup_abs_u", solution.sup_abs()),
                Metric::informational("weighted_residual", residual),
            ];
            finish(
                "singular-line",
                &output,
                scenario,
                metrics,
                Some((&["branch", "x", "u"], rows)),
                started,
            )
        }
        Command::CircleObstruction {
            v,
            rate,
            cutoffs,
            output,
        } => {
            let started = Instant::now();
            let leaf = parse_leaf_spec(&v)?;
            let etas: Vec<f64> = if cutoffs.trim().is_empty() {
                DEFAULT_CUTOFFS.to_vec()
            } else {
                cutoffs
                    .split(',')
                    .map(|c| parse_number(c, "cutoff"))
                    .collect::<SpecResult<Vec<f64>>>()?
            };
            let weight = CocycleWeight::exponential(rate);
            let report = circle_obstruction(&leaf, &weight, &etas)?;
            let rows: Vec<Vec<f64>> = report
                .cutoffs
                .iter()
                .zip(&report.arc_integrals)
                .map(|(&eta, &(a, b))| vec![eta, a, b])
                .collect();
            let scenario = format!("circle-obstruction --v {v} --rate {rate} --cutoffs {cutoffs}");
            let mut metrics = vec![
                Metric::informational("multiplier", report.multiplier),
                Metric::informational("arc_one_log_slope", report.log_slopes.0),
                Metric::informational("divergent", if report.divergent { 1.0 } else { 0.0 }),
            ];
            if report.divergent {
                // Divergence of csc type: slope within 20 percent of -2.
                metrics.push(Metric::checked(
                    "slope_deviation",
                    (report.log_slopes.0 - -2.0).abs(),
                    0.4,
                ));
            } else {
                metrics.push(Metric::informational("defect", report.defect));
            }
            finish(
                "circle-obstruction",
                &output,
                scenario,
                metrics,
                Some((&["eta", "arc_one", "arc_two"], rows)),
                started,
            )
        }
        Command::BundleGlue {
            cover,
            v,
            points,
            config,
            output,
        } => {
            let started = Instant::now();
            let cfg = config.to_config()?;
            let cover_value = match cover.as_str() {
                "circle" => BundleCover::circle(),
                "torus" => BundleCover::torus_leaf(),
                "annulus" => BundleCover::annulus(),
                "inconsistent3" => BundleCover::inconsistent_triple(),
                path => read_cover(Path::new(path))?,
            };
            let cocycle = verify_cocycle(&cover_value)?;
            let mut metrics = vec![Metric::checked(
                "cocycle_deviation",
                cocycle.max_deviation,
                1e-12,
            )];
            let mut csv_rows = None;
            if cocycle.consistent() {
                let leaf = parse_leaf_spec(&v)?;
                let section = if cover == "circle" {
                    circle_bundle_solve(&leaf, points, &cfg)?
                } else {
                    let locals = vec![leaf; cover_value.boxes.len()];
                    glue_general(&cover_value, &locals, points, &cfg)?
                };
                metrics.push(Metric::checked(
                    "max_overlap_mismatch",
                    section.max_mismatch(),
                    (2.0 * cfg.epsilon).max(2e-9),
                ));
                csv_rows = Some(section_rows(&section));
            } else {
                for violation in &cocycle.violations {
                    eprintln!(
                        "cocycle violation: {} (deviation {:.3e})",
                        violation.description, violation.deviation
                    );
                }
            }
            let scenario = format!(
                "bundle-glue --cover {cover} --v {v} --points {points} {}",
                config.echo()
            );
            finish(
                "bundle-glue",
                &output,
                scenario,
                metrics,
                csv_rows.map(|rows| {
                    let columns: &[&str] = &["box", "t", "u_tilde"];
                    (columns, rows)
                }),
                started,
            )
        }
        Command::Verify { suite, output } => {
            let started = Instant::now();
            let outcomes = run_suite(&suite)?;
            let mut all_passed = true;
            let mut lines = String::new();
            for outcome in &outcomes {
                let verdict = if outcome.passed { "PASS" } else { "FAIL" };
                let line = format!("check {}: {verdict} ({})", outcome.name, outcome.detail);
                println!("{line}");
                let _ = writeln!(lines, "{line}");
                all_passed &= outcome.passed;
            }
            let summary = format!(
                "suite {suite}: {}/{} checks passed in {:.1} ms",
                outcomes.iter().filter(|o| o.passed).count(),
                outcomes.len(),
                started.elapsed().as_secs_f64() * 1e3
            );
            println!("{summary}");
            let _ = writeln!(lines, "{summary}");
            if let Some(path) = &output.out {
                std::fs::write(path, lines)
                    .map_err(Error::Io)
                    .map_err(DispatchError::Module)?;
            }
            Ok(all_passed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses_negative_bounds() {
        let grid = parse_grid_spec("-2:2:401").unwrap();
        assert_eq!(grid.len(), 401);
        assert_eq!(grid[0], -2.0);
        assert_eq!(grid[400], 2.0);
        assert!(parse_grid_spec("0:1:2").is_err());
        assert!(parse_grid_spec("1:0:5").is_err());
        assert!(parse_grid_spec("nope").is_err());
    }

    #[test]
    fn leaf_specs_parse() {
        let c = parse_leaf_spec("const:1").unwrap();
        assert!(c.is_constant());
        let f = parse_leaf_spec("fourier:P=6.283185307179586,a1=1,b2=0.5").unwrap();
        assert_eq!(f.period(), Some(std::f64::consts::TAU));
        let p = parse_leaf_spec("poly:lo=-2,hi=2,c0=1,c3=0.125").unwrap();
        assert!(!p.is_constant());
        assert!(parse_leaf_spec("fourier:a1=1").is_err());
        assert!(parse_leaf_spec("mystery:1").is_err());
    }

    #[test]
    fn torus_and_annulus_specs_parse() {
        parse_torus_spec("const:1").unwrap();
        parse_torus_spec("terms:1,cos1,1;0.5,sin1,cos2").unwrap();
        assert!(parse_torus_spec("terms:1,cos1").is_err());
        parse_annulus_spec("terms:1,-1:1,cos1").unwrap();
        assert!(parse_annulus_spec("terms:1,x,cos1").is_err());
    }

    #[test]
    fn space_specs_parse() {
        parse_space_spec("const:1").unwrap();
        parse_space_spec("coord:0,scale=-1").unwrap();
        parse_space_spec("sin:0,freq=2,amp=0.5").unwrap();
        assert!(parse_space_spec("coord:x").is_err());
    }

    #[test]
    fn csv_is_deterministic_and_roundtrips() {
        let dir = std::env::temp_dir().join("leafwise-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("probe.csv");
        let rows = vec![
            vec![0.1, -2.0 / 3.0],
            vec![1.0 + 1e-15, std::f64::consts::PI],
        ];
        write_csv(&path, &["t", "u"], &rows).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        write_csv(&path, &["t", "u"], &rows).unwrap();
        assert_eq!(body, std::fs::read_to_string(&path).unwrap());
        assert!(body.starts_with("# columns: t,u\n"));
        assert!(!body.contains('\r'));
        for (line, row) in body.lines().skip(1).zip(&rows) {
            for (field, &value) in line.split(',').zip(row) {
                assert_eq!(field.parse::<f64>().unwrap(), value, "field {field}");
            }
        }
    }
}
