//! The `orbit-energy` command line front end.
//!
//! Output is CSV or JSON on stdout. Failures are reported as one JSON object
//! on stderr, `{"error": kind, "code": n, "message": ...}`, with exit codes
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | `selftest` found a violation |
//! | 2 | bad command line, unreadable or invalid input |
//! | 3 | a validity condition fails (e.g. `p` above the admissible order) |
//! | 4 | a resource cap would be exceeded |

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    f_general, f_pure, mgf_bound, moment_bound_rhs, scaling_factor_g, t_window, validity_p_max, BoundContext,
};
use crate::error::Error;
use crate::moments::{central_moment, gaussian_moment, moment_report, pure_central_moment, DEFAULT_P_CAP};
use crate::montecarlo::{
    empirical_mgf, empirical_moments, fig1, reproduce_fig1, sample_energy, Bootstrap, EmpiricalMoment, SampleRun,
};
use crate::perm_comb::{derangement_classes, CycleType};
use crate::spectral::{
    center_hamiltonian, cycle_product_bound, HamiltonianSpectrum, SpectraFile, StateSpectrum, DEFAULT_NORMALIZATION_TOL,
};
use crate::weingarten::{closed_form_small_p, weingarten_class_sum, weingarten_table, ClassAlgebra};

/// Text of `--version`: the release plus the constants the thresholds use.
pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nconstants:",
    "\n  sqrt(6)   = 2.449489742783178",
    "\n  2 sqrt(3) = 3.4641016151377544",
    "\n  6^4       = 1296 (dimension threshold)"
);

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "ORBIT_ENERGY_WORKERS";

/// Moment order cap with `--allow-large-p`.
pub const LARGE_P_CAP: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "orbit-energy",
    version,
    long_version = LONG_VERSION,
    about = "Haar-orbit energy distributions: exact moments, Gaussian error bounds, Monte Carlo"
)]
pub struct Cli {
    /// Raise the moment-order cap from 10 to 12.
    #[arg(long, global = true)]
    pub allow_large_p: bool,

    /// Tolerance on |Tr rho - 1| when reading a state spectrum.
    #[arg(long, global = true, default_value_t = DEFAULT_NORMALIZATION_TOL)]
    pub state_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact Weingarten values C_[l](d) as rationals.
    Weingarten {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        d: usize,
        /// Restrict the output to one class, e.g. `3,1`.
        #[arg(long)]
        class: Option<CycleType>,
    },
    /// Exact central moments next to the Gaussian reference and the envelope.
    Moments(MomentsArgs),
    /// Moment envelopes G_p f(d, p).
    Bounds(BoundsArgs),
    /// MGF envelope on a grid inside the admissible t-window.
    MgfBound(MgfArgs),
    /// Haar samples of E written as a JSON run.
    Sample(SampleArgs),
    /// Histogram of the seven-level example with its Gaussian overlay.
    Fig1(Fig1Args),
    /// Reduced-scale invariant checks; exits 1 on any violation.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[arg(long, required_unless_present = "from_run", conflicts_with = "from_run")]
    pub spectra: Option<PathBuf>,
    #[arg(long)]
    pub pmax: usize,
    /// Replace the state by a pure state of the same dimension.
    #[arg(long, conflicts_with = "from_run")]
    pub pure: bool,
    /// Take the spectra from a `sample` run and add its empirical moments.
    #[arg(long)]
    pub from_run: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub spectra: PathBuf,
    #[arg(long)]
    pub pmax: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct MgfArgs {
    #[arg(long)]
    pub spectra: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub tpoints: usize,
    /// Add the empirical MGF from this many Haar samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub spectra: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Fig1Args {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = fig1::SAMPLES)]
    pub n: usize,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

/// A failure together with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "input",
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": self.kind, "code": self.code, "message": self.message})
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::ResourceCap(_) => (4, "resource"),
            Error::Condition(_)
            | Error::UnsupportedRegime { .. }
            | Error::UndefinedEta
            | Error::NotDerangement(_)
            | Error::InvalidInitialEnergy { .. } => (3, "condition"),
            _ => (2, "input"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::input(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::input(format!("json: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let failure = CliError {
                code: 2,
                kind: "parse",
                message: e.to_string().trim_end().to_string(),
            };
            let _ = writeln!(err, "{}", failure.to_json());
            return 2;
        }
    };
    match run(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.code
        }
    }
}

/// Runs a parsed command. `Ok` carries the exit code (0, or 1 for a failed selftest).
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cap = if cli.allow_large_p { LARGE_P_CAP } else { DEFAULT_P_CAP };
    match &cli.command {
        Command::Weingarten { p, d, class } => weingarten_cmd(*p, *d, class.as_ref(), out),
        Command::Moments(a) => moments_cmd(a, cap, cli.state_tol, out),
        Command::Bounds(a) => bounds_cmd(a, cli.state_tol, out),
        Command::MgfBound(a) => mgf_cmd(a, cli.state_tol, out, err),
        Command::Sample(a) => sample_cmd(a, cli.state_tol, out),
        Command::Fig1(a) => fig1_cmd(a, out),
        Command::Selftest { seed } => Ok(selftest(*seed, out)?),
    }
    .map(|code| {
        let _ = out.flush();
        code
    })
}

fn read_spectra(path: &Path, tol: f64) -> CliResult<(StateSpectrum, HamiltonianSpectrum)> {
    let file = SpectraFile::read(path)?;
    Ok(file.spectra(tol)?)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn resolve_workers(workers: Option<usize>) -> CliResult<usize> {
    match workers {
        Some(0) => Err(CliError::input("workers must be at least 1")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn cell<T: Display>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Shortest round-trip text, switching to exponent form for tiny or huge values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn num_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn int_json(x: &BigInt) -> Value {
    x.to_i64().map_or_else(|| Value::String(x.to_string()), Value::from)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn weingarten_cmd(p: usize, d: usize, class: Option<&CycleType>, out: &mut dyn Write) -> CliResult<i32> {
    let table = weingarten_table(p, d)?;
    let entry = |c: &CycleType| -> CliResult<Value> {
        let v = table
            .value(c)
            .ok_or_else(|| Error::InvalidCycleType(format!("{c} is not a cycle type of order {p}")))?;
        Ok(json!({
            "class": c.to_string(),
            "numerator": int_json(v.numer()),
            "denominator": int_json(v.denom()),
            "float": table.value_f64(c),
        }))
    };
    let value = match class {
        Some(c) => entry(c)?,
        None => Value::Array(table.classes().iter().map(entry).collect::<CliResult<_>>()?),
    };
    write_json(out, &value)?;
    Ok(0)
}

#[derive(Serialize)]
struct MomentsOutput<'a> {
    #[serde(flatten)]
    report: &'a crate::moments::MomentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<&'a [EmpiricalMoment]>,
}

fn moments_cmd(a: &MomentsArgs, cap: usize, tol: f64, out: &mut dyn Write) -> CliResult<i32> {
    let (run, (mut rho, h)) = match (&a.from_run, &a.spectra) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let run: SampleRun = serde_json::from_str(&text)?;
            let pair = SpectraFile {
                hamiltonian: run.hamiltonian.clone(),
                state: run.state.clone(),
            }
            .spectra(tol)?;
            (Some(run), pair)
        }
        (None, Some(path)) => (None, read_spectra(path, tol)?),
        (None, None) => return Err(CliError::input("one of --spectra or --from-run is required")),
    };
    if a.pure {
        rho = StateSpectrum::pure(h.eigenvalues().len());
    }
    let report = moment_report(&rho, &h, a.pmax, cap)?;
    let empirical = match &run {
        Some(run) => Some(empirical_moments(run, a.pmax, &Bootstrap::default())?),
        None => None,
    };
    match a.format {
        Format::Json => write_json(
            out,
            &MomentsOutput {
                report: &report,
                empirical: empirical.as_deref(),
            },
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            let mut header = vec!["p", "exact", "gaussian", "abs_diff", "bound_rhs", "bound_holds"];
            if empirical.is_some() {
                header.extend(["empirical", "empirical_se"]);
            }
            w.write_record(&header)?;
            for (i, r) in report.rows.iter().enumerate() {
                let mut rec = vec![
                    r.p.to_string(),
                    num(r.exact),
                    num(r.gaussian),
                    num(r.abs_diff),
                    num_cell(r.bound_rhs),
                    cell(r.bound_holds),
                ];
                if let Some(emp) = &empirical {
                    rec.push(num(emp[i].value));
                    rec.push(num(emp[i].se));
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct BoundRow {
    p: usize,
    g_p: f64,
    f: Option<f64>,
    bound_rhs: Option<f64>,
}

fn bounds_cmd(a: &BoundsArgs, tol: f64, out: &mut dyn Write) -> CliResult<i32> {
    let (rho, h) = read_spectra(&a.spectra, tol)?;
    let ctx = BoundContext::from_spectra(&rho, &h)?;
    let limit = validity_p_max(ctx.d);
    if !ctx.pure && a.pmax > limit {
        return Err(Error::Condition(format!(
            "p_max = {} exceeds the admissible order {limit} at d = {} for a mixed state",
            a.pmax, ctx.d
        ))
        .into());
    }
    if a.pmax == 0 {
        return Err(Error::OutOfRange {
            what: "p_max",
            value: 0,
            min: 1,
            max: i64::MAX,
        }
        .into());
    }
    let mut rows = Vec::with_capacity(a.pmax);
    for p in 1..=a.pmax {
        let f = if ctx.pure {
            (p >= 2).then(|| f_pure(ctx.d, p, ctx.eta)).transpose()?
        } else {
            Some(f_general(ctx.d, p, ctx.eta)?)
        };
        rows.push(BoundRow {
            p,
            g_p: scaling_factor_g(p, &ctx),
            f,
            bound_rhs: moment_bound_rhs(p, &ctx)?,
        });
    }
    match a.format {
        Format::Json => write_json(
            out,
            &json!({
                "context": ctx,
                "validity_p_max": limit,
                "t_window": t_window(&ctx),
                "rows": rows,
            }),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["p", "g_p", "f", "bound_rhs"])?;
            for r in &rows {
                w.write_record([r.p.to_string(), num(r.g_p), num_cell(r.f), num_cell(r.bound_rhs)])?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct MgfRow {
    t: f64,
    bound: f64,
    gaussian_mgf: f64,
    empirical_mgf: Option<f64>,
    empirical_se: Option<f64>,
}

/// `n` evenly spaced `t` strictly inside the window. Terms (iv) and (v) of the
/// envelope diverge at the edge itself.
pub fn mgf_grid(ctx: &BoundContext, n: usize) -> Vec<f64> {
    let edge = t_window(ctx).effective();
    (1..=n).map(|i| edge * i as f64 / (n + 1) as f64).collect()
}

fn mgf_cmd(a: &MgfArgs, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let (rho, h) = read_spectra(&a.spectra, tol)?;
    let ctx = BoundContext::from_spectra(&rho, &h)?;
    let window = t_window(&ctx);
    if window.n_star == 0 {
        return Err(Error::Condition(format!("N* = 0 at d = {}: the t-window is empty", ctx.d)).into());
    }
    if a.tpoints == 0 {
        return Err(CliError::input("tpoints must be positive"));
    }
    let grid = mgf_grid(&ctx, a.tpoints);
    let mut seed_used = None;
    let empirical = match a.samples {
        Some(n) => {
            let seed = resolve_seed(a.seed);
            seed_used = Some(seed);
            writeln!(err, "{}", json!({ "seed": seed }))?;
            let run = sample_energy(&rho, &h, n, seed, resolve_workers(a.workers)?)?;
            Some(empirical_mgf(&run, h.mean(), &grid, &Bootstrap::default()))
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let b = mgf_bound(t, &ctx)?;
        let emp = empirical.as_ref().map(|e| e[i]);
        rows.push(MgfRow {
            t,
            bound: b.total,
            gaussian_mgf: (0.5 * t * t * ctx.sigma2).exp(),
            empirical_mgf: emp.map(|e| e.value),
            empirical_se: emp.map(|e| e.se),
        });
    }
    match a.format {
        Format::Json => write_json(
            out,
            &json!({"context": ctx, "t_window": window, "seed": seed_used, "rows": rows}),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["t", "bound", "gaussian_mgf", "empirical_mgf", "empirical_se"])?;
            for r in &rows {
                w.write_record([
                    num(r.t),
                    num(r.bound),
                    num(r.gaussian_mgf),
                    num_cell(r.empirical_mgf),
                    num_cell(r.empirical_se),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

fn sample_cmd(a: &SampleArgs, tol: f64, out: &mut dyn Write) -> CliResult<i32> {
    let (rho, h) = read_spectra(&a.spectra, tol)?;
    let seed = resolve_seed(a.seed);
    let run = sample_energy(&rho, &h, a.n, seed, resolve_workers(a.workers)?)?;
    let file = std::fs::File::create(&a.out)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", a.out.display())))?;
    let mut file = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut file, &run)?;
    file.flush()?;
    write_json(
        out,
        &json!({
            "seed": seed,
            "d": run.d,
            "n_samples": run.n_samples,
            "workers": run.workers,
            "out": a.out.display().to_string(),
            "meta": run.meta,
        }),
    )?;
    Ok(0)
}

fn fig1_cmd(a: &Fig1Args, out: &mut dyn Write) -> CliResult<i32> {
    let seed = resolve_seed(a.seed);
    let bundle = reproduce_fig1(seed, a.n, resolve_workers(a.workers)?)?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["bin_center", "density", "gaussian_density"])?;
    for ((c, dens), g) in bundle
        .histogram
        .centers()
        .iter()
        .zip(&bundle.histogram.density)
        .zip(&bundle.overlay)
    {
        w.write_record([num(*c), num(*dens), num(*g)])?;
    }
    w.flush()?;
    write_json(out, &bundle.meta)?;
    Ok(0)
}

/// One line of `selftest` output.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn random_pair(rng: &mut ChaCha8Rng, d: usize, pure: bool) -> (StateSpectrum, HamiltonianSpectrum) {
    let h: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rho = if pure {
        StateSpectrum::pure(d)
    } else {
        let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        StateSpectrum::new(w.into_iter().map(|x| x / s).collect()).expect("normalized by construction")
    };
    (rho, HamiltonianSpectrum::new(h).expect("finite by construction"))
}

/// Reduced-scale versions of the invariant suites.
pub fn selftest_checks(seed: u64) -> crate::error::Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mismatches = 0;
    for p in 1..=4 {
        for d in 4..=8 {
            let table = weingarten_table(p, d)?;
            for (c, v) in table.iter() {
                if closed_form_small_p(c, d)? != *v {
                    mismatches += 1;
                }
            }
        }
    }
    checks.push(Check {
        name: "weingarten_closed_forms",
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches for p <= 4, d = 4..8"),
    });

    // class-collapsed Gram relation, sum_b C_b sum_g T[a][b][g] d^c(g) = [a = id]
    let mut bad = 0;
    for p in 1..=5 {
        let alg = ClassAlgebra::get(p)?;
        let d = 6;
        let table = weingarten_table(p, d)?;
        let id = alg.classes().len() - 1;
        for a in 0..alg.classes().len() {
            let mut acc = num_rational::BigRational::from_integer(0.into());
            for (b, cb) in table.values().iter().enumerate() {
                for (g, cg) in alg.classes().iter().enumerate() {
                    let n = alg.count(a, b, g);
                    if n > 0 {
                        let w = BigInt::from(n) * BigInt::from(d).pow(cg.cycle_count() as u32);
                        acc += cb * num_rational::BigRational::from_integer(w);
                    }
                }
            }
            let want = num_rational::BigRational::from_integer(BigInt::from(u8::from(a == id)));
            if acc != want {
                bad += 1;
            }
        }
    }
    checks.push(Check {
        name: "gram_relation",
        pass: bad == 0,
        detail: format!("{bad} failing rows for p <= 5, d = 6"),
    });

    let mut bad = 0;
    for p in 1..=6 {
        for d in p..p + 4 {
            if weingarten_table(p, d)?.class_weighted_sum() != weingarten_class_sum(p, d)? {
                bad += 1;
            }
        }
    }
    checks.push(Check {
        name: "class_sum",
        pass: bad == 0,
        detail: format!("{bad} mismatches for p <= 6"),
    });

    let two = HamiltonianSpectrum::new(vec![0.0, 1.0])?;
    let s2 = central_moment(&StateSpectrum::pure(2), &two, 2)?;
    checks.push(Check {
        name: "two_level_uniform",
        pass: (s2 - 1.0 / 12.0).abs() < 1e-12,
        detail: format!("Sigma2 = {s2}"),
    });

    let (mut checked, mut violated) = (0, 0);
    for d in [9usize, 16] {
        for _ in 0..5 {
            let (rho, h) = random_pair(&mut rng, d, false);
            let report = moment_report(&rho, &h, validity_p_max(d), DEFAULT_P_CAP)?;
            for r in &report.rows {
                if let Some(ok) = r.bound_holds {
                    checked += 1;
                    violated += usize::from(!ok);
                }
            }
        }
    }
    checks.push(Check {
        name: "moment_bound_general",
        pass: violated == 0,
        detail: format!("{violated} violations in {checked} rows"),
    });

    let (mut checked, mut violated) = (0, 0);
    for d in [9usize, 16] {
        for _ in 0..5 {
            let (rho, h) = random_pair(&mut rng, d, true);
            let ctx = BoundContext::from_spectra(&rho, &h)?;
            for p in 2..=6 {
                let exact = pure_central_moment(&h, d, p)?;
                let gauss = gaussian_moment(p, ctx.sigma2);
                if let Some(rhs) = moment_bound_rhs(p, &ctx)? {
                    checked += 1;
                    violated += usize::from(!crate::bounds::bound_holds(exact, gauss, rhs));
                }
            }
        }
    }
    checks.push(Check {
        name: "moment_bound_pure",
        pass: violated == 0,
        detail: format!("{violated} violations in {checked} rows"),
    });

    let mut violated = 0;
    for _ in 0..20 {
        let d = rng.random_range(2..=12);
        let (_, h) = random_pair(&mut rng, d, false);
        let theta = center_hamiltonian(&h);
        for p in 2..=6 {
            for (c, _) in derangement_classes(p)? {
                let lhs = crate::spectral::Spectrum::theta_functional(&theta, &c).abs();
                if lhs > cycle_product_bound(&theta, &c)? * (1.0 + 1e-12) {
                    violated += 1;
                }
            }
        }
    }
    checks.push(Check {
        name: "trace_functional_bound",
        pass: violated == 0,
        detail: format!("{violated} violations"),
    });

    let (rho, h) = random_pair(&mut rng, 5, false);
    let run = sample_energy(&rho, &h, 20_000, seed, 2)?;
    let m = empirical_moments(&run, 2, &Bootstrap::default())?;
    let z = (m[1].value - run.meta.exact_sigma2) / m[1].se;
    checks.push(Check {
        name: "monte_carlo_variance",
        pass: z.abs() < 4.0,
        detail: format!("z = {z:.3}"),
    });

    let (rho, h) = random_pair(&mut rng, 25, false);
    let ctx = BoundContext::from_spectra(&rho, &h)?;
    let grid = mgf_grid(&ctx, 5);
    let run = sample_energy(&rho, &h, 20_000, seed ^ 0x9e37, 2)?;
    let emp = empirical_mgf(&run, h.mean(), &grid, &Bootstrap::default());
    let mut violated = 0;
    for (t, e) in grid.iter().zip(&emp) {
        let gap = (e.value - (0.5 * t * t * ctx.sigma2).exp()).abs();
        if gap > mgf_bound(*t, &ctx)?.total + 5.0 * e.se {
            violated += 1;
        }
    }
    checks.push(Check {
        name: "mgf_bound",
        pass: violated == 0,
        detail: format!("{violated} violations on {} points", grid.len()),
    });
    Ok(checks)
}

fn selftest(seed: u64, out: &mut dyn Write) -> CliResult<i32> {
    let checks = selftest_checks(seed)?;
    for c in &checks {
        writeln!(out, "{}", serde_json::to_string(c)?)?;
    }
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}
