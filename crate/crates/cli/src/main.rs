use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cone_fixpoint::certificate::{omega_contains, verify_certificate, witness_set, OmegaSpec};
use cone_fixpoint::engine::{run, IterationTrace, RunWarning, StopKind};
use cone_fixpoint::format::{read_trace, write_trace, CertificateDocument, ProblemFile};
use cone_fixpoint::{problems, AugmentedPoint, ContractionSpec, Error, StoppingRule, TolerancePolicy, Vector};

const TOL_ENV: &str = "CONE_FIXPOINT_TOL";
const DEFAULT_EPS: f64 = 1e-8;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "cone-fixpoint", version, about = "Certified fixed-point iteration for declared contractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the augmented iteration and write the trace CSV.
    Solve(SolveArgs),
    /// Run (or load) a trace and verify its convergence certificate.
    Certify(CertifyArgs),
    /// Check whether a point (x, t) belongs to the omega set of a problem.
    Omega(OmegaArgs),
    /// List the built-in problems.
    List,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Name of a built-in problem (see `list`).
    #[arg(long)]
    builtin: Option<String>,
    /// Path to a JSON problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Apriori,
    Aposteriori,
    Count,
}

#[derive(Args)]
struct RunArgs {
    /// Stopping rule [default: apriori].
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Target accuracy for the apriori/aposteriori rules.
    #[arg(long)]
    eps: Option<f64>,
    /// Number of steps for the count rule.
    #[arg(long)]
    count: Option<usize>,
    /// Give up (exit 3) after this many steps [default: 1000000].
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    run: RunArgs,
    /// Number of sampled omega witnesses besides the canonical one.
    #[arg(long = "omega-samples", default_value_t = cone_fixpoint::certificate::DEFAULT_OMEGA_SAMPLES)]
    omega_samples: usize,
    /// Seed for the omega witness sampler [default: the problem file's seed, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the certificate document; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the per-step residual arrays.
    #[arg(long)]
    full: bool,
    /// Verify an existing trace CSV instead of running the solver.
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Also write the trace CSV of the run.
    #[arg(long, conflicts_with = "verify")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OmegaArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated coordinates of x.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    /// The t coordinate.
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::NotAContraction { .. } | Error::SpectralNormNotConverged { .. } => EXIT_NUMERICAL,
            Error::InvalidWitness { .. } => {
                return Failure {
                    code: EXIT_NUMERICAL,
                    message: format!("internal error (please report): {err}"),
                }
            }
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

struct Loaded {
    label: String,
    file: ProblemFile,
    spec: ContractionSpec,
    x0: Vector,
}

fn load(source: &Source) -> Result<Loaded, Failure> {
    let (label, file) = match (&source.builtin, &source.problem) {
        (Some(name), _) => {
            let p = problems::builtin(name).ok_or_else(|| {
                usage(format!(
                    "unknown builtin `{name}`; expected one of {}",
                    problems::BUILTIN_NAMES.join(", ")
                ))
            })?;
            (format!("builtin:{}", p.name), ProblemFile::from_instance(&p))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let file = ProblemFile::parse(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (format!("file:{}", path.display()), file)
        }
        (None, None) => return Err(usage("one of --builtin or --problem is required")),
    };
    let (spec, x0) = file.to_problem()?;
    Ok(Loaded {
        label,
        file,
        spec,
        x0,
    })
}

fn stopping_rule(file: &ProblemFile, args: &RunArgs) -> Result<StoppingRule, Failure> {
    let mut rule = file.stopping_rule(DEFAULT_EPS)?;
    let eps = args.eps.or(file.eps).unwrap_or(DEFAULT_EPS);
    match args.rule {
        Some(Rule::Apriori) => rule.kind = StopKind::APriori { eps },
        Some(Rule::Aposteriori) => rule.kind = StopKind::APosteriori { eps },
        Some(Rule::Count) => {
            let count = args
                .count
                .or(file.count)
                .ok_or_else(|| usage("--count is required with --rule count"))?;
            rule.kind = StopKind::FixedCount { count };
        }
        None => match &mut rule.kind {
            StopKind::APriori { eps: e } | StopKind::APosteriori { eps: e } => *e = eps,
            StopKind::FixedCount { count } => *count = args.count.unwrap_or(*count),
        },
    }
    if let Some(max) = args.max_iter {
        rule.max_iterations = max;
    }
    rule.validate()?;
    Ok(rule)
}

fn tolerance() -> Result<TolerancePolicy, Failure> {
    match std::env::var(TOL_ENV) {
        Ok(raw) => {
            let value: f64 = raw
                .trim()
                .parse()
                .map_err(|_| usage(format!("{TOL_ENV}: cannot parse `{raw}`")))?;
            TolerancePolicy::uniform(value).map_err(|e| usage(format!("{TOL_ENV}: {e}")))
        }
        Err(_) => Ok(TolerancePolicy::default()),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomically(path: &Path, write: impl FnOnce(&mut fs::File) -> Result<(), Error>) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn report_warnings(trace: &IterationTrace) {
    for w in &trace.warnings {
        match w {
            RunWarning::IllConditioned { one_minus_lambda } => eprintln!(
                "warning: 1 - lambda = {one_minus_lambda:e}; d/(1 - lambda) amplifies rounding"
            ),
        }
    }
}

fn fmt_vector(v: &Vector) -> String {
    let parts: Vec<String> = v.as_slice().iter().map(|c| c.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    let loaded = load(&args.source)?;
    let rule = stopping_rule(&loaded.file, &args.run)?;
    let trace = run(&loaded.spec, &loaded.x0, &rule)?;
    report_warnings(&trace);
    if let Some(path) = &args.trace {
        write_atomically(path, |f| write_trace(&trace, f))?;
    }
    println!("problem      {}", loaded.label);
    println!("stop_reason  {}", trace.stop_reason.as_str());
    println!("iterations   {}", trace.iterations());
    println!("d            {}", trace.d);
    println!("lambda       {}", trace.lambda());
    println!("t_star       {}", trace.t_star());
    println!("final_bound  {}", trace.final_bound());
    println!("final_x      {}", fmt_vector(&trace.final_point().x));
    if trace.stop_reason.is_success() {
        Ok(0)
    } else {
        eprintln!("error: stopped after max_iterations = {} steps", rule.max_iterations);
        Ok(EXIT_NUMERICAL)
    }
}

fn certify(args: &CertifyArgs) -> Result<u8, Failure> {
    let loaded = load(&args.source)?;
    let tol = tolerance()?;
    let seed = args.seed.or(loaded.file.seed).unwrap_or(0);

    let (trace, stop_reason) = match &args.verify {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let trace = read_trace(&loaded.spec, &loaded.x0, file).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (trace, None)
        }
        None => {
            let rule = stopping_rule(&loaded.file, &args.run)?;
            let trace = run(&loaded.spec, &loaded.x0, &rule)?;
            report_warnings(&trace);
            if let Some(path) = &args.trace {
                write_atomically(path, |f| write_trace(&trace, f))?;
            }
            let reason = trace.stop_reason;
            (trace, Some(reason))
        }
    };

    let om = OmegaSpec::for_trace(&trace)?;
    let witnesses = witness_set(&om, args.omega_samples, seed)?;
    let cert = verify_certificate(&trace, &witnesses, &tol)?;
    let doc = CertificateDocument::new(&cert, loaded.file.clone(), loaded.label.clone(), stop_reason, seed, args.full);
    let json = doc.to_json()?;

    match &args.out {
        Some(path) => {
            write_atomically(path, |f| Ok(f.write_all(json.as_bytes())?))?;
            println!("problem      {}", loaded.label);
            println!("iterations   {}", cert.iterations);
            println!("t_star       {}", cert.t_star());
            println!("final_bound  {}", cert.final_bound);
            println!("limit_x      {}", fmt_vector(&cert.limit_point.x));
            println!("witnesses    {}", witnesses.len());
        }
        None => print!("{json}"),
    }

    match cert.verdict {
        cone_fixpoint::Verdict::Pass => {
            eprintln!("verdict: pass");
            Ok(0)
        }
        cone_fixpoint::Verdict::Fail { check, index, residual } => {
            eprintln!("verdict: fail ({check:?} check at index {index}, residual {residual:e})");
            Ok(EXIT_FAIL)
        }
    }
}

fn omega(args: &OmegaArgs) -> Result<u8, Failure> {
    let loaded = load(&args.source)?;
    let tol = tolerance()?;
    let x = Vector::new(args.x.clone())?;
    if x.dim() != loaded.spec.dimension() {
        return Err(usage(format!(
            "point has {} coordinates but the problem is in R^{}",
            x.dim(),
            loaded.spec.dimension()
        )));
    }
    let om = OmegaSpec::new(&loaded.spec, &loaded.x0)?;
    let (first, second) = om.bounds(&x)?;
    let point = AugmentedPoint::new(x, args.t)?;
    let member = omega_contains(&om, &point, &tol)?;
    println!("distance_bound  {first}");
    println!("residual_bound  {second}");
    println!("t               {}", args.t);
    println!("member          {}", if member { "yes" } else { "no" });
    Ok(if member { 0 } else { EXIT_FAIL })
}

fn list() -> Result<u8, Failure> {
    for p in problems::builtin_catalog() {
        let reference = p
            .reference
            .as_ref()
            .map(|(x, _)| fmt_vector(x))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<12} m={} lambda={} kind={} x*={}",
            p.name,
            p.spec.dimension(),
            p.spec.lambda(),
            p.spec.map().kind(),
            reference
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Certify(args) => certify(args),
        Command::Omega(args) => omega(args),
        Command::List => list(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
