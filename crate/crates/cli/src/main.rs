use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use threadsplit_core::cosmology::{build_metric, AlmostFlrwSpec};
use threadsplit_core::exprlang::{parse_expr, Expr, ExprKind};
use threadsplit_core::metric::load_spec;
use threadsplit_core::report::{
    emit_report, parse_box, parse_grid, parse_points, run_verification, Format, PointSource,
    RunConfig, SampleBox, DEFAULT_TOL,
};

/// Exit status for unreadable or invalid input.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "threadsplit",
    version,
    about = "Verify the threading decomposition of a spacetime metric"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a metric spec file at the selected points.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build an almost-FLRW metric in conformal-Newtonian gauge and verify it,
    /// including the closed-form cosmology checks.
    Cosmo {
        /// Scale factor a(x0).
        #[arg(long = "a")]
        a: String,
        /// Bardeen potential A.
        #[arg(long = "A", default_value = "0")]
        big_a: String,
        /// Bardeen potential B; when omitted the perfect-fluid case B = A is used.
        #[arg(long = "B")]
        big_b: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long = "newton-g", default_value_t = 1.0)]
        newton_g: f64,
        /// Explicit perfect-fluid energy density; the field equations define the matter otherwise.
        #[arg(long, requires = "p")]
        rho: Option<String>,
        /// Explicit perfect-fluid pressure.
        #[arg(long, requires = "rho")]
        p: Option<String>,
        /// Parameters as name=value, comma separated.
        #[arg(long, default_value = "")]
        params: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Parse an expression and print its syntax tree.
    Parse {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// File with one point per line.
    #[arg(long, conflicts_with_all = ["grid", "random"])]
    points: Option<PathBuf>,
    /// Grid such as "x0=1:3:5,x1=0" (start:stop:count, inclusive).
    #[arg(long, conflicts_with = "random")]
    grid: Option<String>,
    /// Number of pseudo-random points.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling box such as "x0=1:3,x1=-1:1".
    #[arg(long = "box")]
    bounds: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Jet order; 2 skips the checks that need third metric derivatives.
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Comma-separated check-name prefixes.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, env = "THREADSPLIT_THREADS")]
    threads: Option<usize>,
}

/// Marks errors that map to the input-error exit status.
#[derive(Debug)]
struct InputFailure(anyhow::Error);

fn input<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(InputFailure(e.into())))
}

impl std::fmt::Display for InputFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputFailure {}

fn point_source(run: &RunArgs) -> Result<PointSource> {
    if let Some(path) = &run.points {
        let text = input(
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())),
        )?;
        return Ok(PointSource::List(input(parse_points(&text))?));
    }
    if let Some(g) = &run.grid {
        return Ok(PointSource::Grid(input(parse_grid(g))?));
    }
    let n = run.random.unwrap_or(10);
    let bounds = match &run.bounds {
        Some(b) => input(parse_box(b))?,
        None => SampleBox::default(),
    };
    Ok(PointSource::Random {
        n,
        seed: run.seed,
        bounds,
    })
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for term in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = term
            .split_once('=')
            .ok_or_else(|| anyhow!("bad parameter '{term}': expected name=value"))?;
        let v: f64 = v
            .trim()
            .parse()
            .with_context(|| format!("bad parameter value in '{term}'"))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn expr(label: &str, text: &str) -> Result<Expr> {
    parse_expr(text).with_context(|| format!("--{label}"))
}

fn run(config: RunConfig, run: &RunArgs) -> Result<u8> {
    if let Some(0) = run.threads {
        return input(Err(anyhow!("--threads must be at least 1")));
    }
    if !(2..=3).contains(&run.order) {
        return input(Err(anyhow!("--order must be 2 or 3")));
    }
    let report = input(run_verification(&config))?;
    let format = match run.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    let bytes = emit_report(&report, format);
    match &run.out {
        Some(path) => input(
            std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display())),
        )?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    for p in report
        .points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| (p.x, e)))
    {
        eprintln!("point {:?}: {}", p.0, p.1);
    }
    let flags = report.flags();
    if !flags.is_empty() {
        eprintln!("flags: {}", flags.join(" "));
    }
    Ok(report.exit_code() as u8)
}

fn config_from(
    spec: threadsplit_core::metric::MetricSpec,
    text: String,
    args: &RunArgs,
) -> Result<RunConfig> {
    let mut c = RunConfig::new(spec, text, point_source(args)?);
    c.tol = args.tol;
    c.order = args.order;
    c.threads = args.threads;
    if let Some(list) = &args.checks {
        c.checks = list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
    }
    Ok(c)
}

fn tree(e: &Expr, depth: usize, out: &mut String) {
    let (label, kids): (String, Vec<&Expr>) = match &e.kind {
        ExprKind::Num(v) => (format!("Num {v}"), vec![]),
        ExprKind::Ident(n) => (format!("Ident {n}"), vec![]),
        ExprKind::Neg(a) => ("Neg".into(), vec![a]),
        ExprKind::Binary(op, l, r) => (format!("{op:?}"), vec![l, r]),
        ExprKind::Call(f, a) => (format!("Call {}", f.name()), vec![a]),
    };
    out.push_str(&format!("{}{label}\n", "  ".repeat(depth)));
    for k in kids {
        tree(k, depth + 1, out);
    }
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify { spec, run: args } => {
            let text = input(
                std::fs::read_to_string(&spec)
                    .with_context(|| format!("reading {}", spec.display())),
            )?;
            let parsed = input(load_spec(&text))?;
            let config = config_from(parsed, text, &args)?;
            run(config, &args)
        }
        Command::Cosmo {
            a,
            big_a,
            big_b,
            lambda,
            newton_g,
            rho,
            p,
            params,
            run: args,
        } => {
            let mut cs = input(expr("a", &a).map(AlmostFlrwSpec::new))?;
            cs.big_a = input(expr("A", &big_a))?;
            cs.perfect_fluid = big_b.is_none();
            if let Some(b) = &big_b {
                cs.big_b = input(expr("B", b))?;
            }
            cs.lambda = lambda;
            cs.newton_g = newton_g;
            cs.params = input(parse_params(&params))?;
            if let (Some(r), Some(p)) = (&rho, &p) {
                cs.matter = Some((input(expr("rho", r))?, input(expr("p", p))?));
            }
            let spec = input(build_metric(&cs))?;
            let text = spec.to_spec_text();
            let mut config = config_from(spec, text, &args)?;
            config.cosmo = Some(cs);
            run(config, &args)
        }
        Command::Parse { expr: text } => {
            let e = input(parse_expr(&text))?;
            let mut out = String::new();
            tree(&e, 0, &mut out);
            use std::io::Write;
            std::io::stdout().write_all(format!("{e}\n{out}").as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputFailure>().is_some() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
