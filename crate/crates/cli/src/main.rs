use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nccap::capacity::{capacity_sandwich_with, AscentConfig};
use nccap::sweep::{fit_expansion, sweep};
use nccap::verify::{run_all, stability_tables};
use nccap::{
    capacity_expansion, entropy_rate_sandwich, expansion_of, parry_chain, rho0, rll_constraint,
    sharpness_probe, taylor_probe, ChannelParameter, FiniteTypeConstraint, MarkovChain, RllParams,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "nccap",
    version,
    about = "Small-noise capacity of constrained binary systems over a BSC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized optimizer restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity expansion of a constraint.
    Capacity {
        #[command(flatten)]
        source: ConstraintSource,
        /// Report in bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// Only report the noiseless capacity.
        #[arg(long)]
        noiseless: bool,
    },
    /// Entropy-rate coefficients of a chain, with the length/pinning table.
    Coeffs {
        #[command(flatten)]
        source: ChainSource,
        #[arg(long)]
        bits: bool,
    },
    /// Output entropy-rate sandwich of a chain at one crossover probability.
    Entropy {
        #[command(flatten)]
        source: ChainSource,
        #[arg(long)]
        eps: f64,
        /// Conditioning length.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        bits: bool,
    },
    /// Capacity lower and upper bounds from optimized finite-length objectives.
    Bounds {
        #[command(flatten)]
        source: ConstraintSource,
        #[arg(long)]
        eps: f64,
        /// Order of the optimized chain for the lower bound.
        #[arg(short, long, default_value_t = 1)]
        m: usize,
        /// Block length for the upper bound.
        #[arg(short, long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        bits: bool,
    },
    /// Sandwich over a grid of crossover probabilities, as CSV with a fit footer.
    Sweep {
        #[command(flatten)]
        source: ChainSource,
        /// Comma-separated crossover probabilities in (0, 1/2].
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 3e-3, 1e-3, 3e-4])]
        eps: Vec<f64>,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Built-in consistency checks.
    Verify,
    /// Taylor constants of the no-11 family and the achievability probe.
    Taylor {
        /// Slope of the probe family; defaults to half the admissible bound.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
        eps: Vec<f64>,
        #[arg(short, long, default_value_t = 12)]
        n: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConstraintSource {
    /// Run-length limits `D,K`, with K an integer or `inf`.
    #[arg(long, value_name = "D,K")]
    rll: Option<RllParams>,
    /// File with one forbidden word per line.
    #[arg(long, value_name = "PATH")]
    forbidden: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ChainSource {
    /// Markov chain file (JSON).
    #[arg(long, value_name = "PATH")]
    chain: Option<PathBuf>,
    /// Use the maximum-entropy chain of these run-length limits.
    #[arg(long, value_name = "D,K")]
    rll: Option<RllParams>,
    /// Use the maximum-entropy chain of this forbidden-word file.
    #[arg(long, value_name = "PATH")]
    forbidden: Option<PathBuf>,
}

enum Failure {
    Verify,
    Input(String),
    Numerical(String),
}

impl From<nccap::Error> for Failure {
    fn from(e: nccap::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_forbidden(path: &Path) -> Outcome<FiniteTypeConstraint> {
    Ok(FiniteTypeConstraint::parse_forbidden_list(&read(path)?)?)
}

impl ConstraintSource {
    fn load(&self) -> Outcome<FiniteTypeConstraint> {
        match (&self.rll, &self.forbidden) {
            (Some(p), _) => Ok(rll_constraint(*p)),
            (_, Some(path)) => load_forbidden(path),
            _ => unreachable!("clap enforces one source"),
        }
    }
}

impl ChainSource {
    fn load(&self) -> Outcome<MarkovChain> {
        match (&self.chain, &self.rll, &self.forbidden) {
            (Some(path), _, _) => Ok(MarkovChain::from_json(&read(path)?)?),
            (_, Some(p), _) => Ok(parry_chain(&rll_constraint(*p))?),
            (_, _, Some(path)) => Ok(parry_chain(&load_forbidden(path)?)?),
            _ => unreachable!("clap enforces one source"),
        }
    }
}

fn unit(bits: bool) -> (f64, &'static str) {
    if bits {
        (std::f64::consts::LN_2, "bits")
    } else {
        (1.0, "nats")
    }
}

fn channel(e: f64) -> Outcome<ChannelParameter> {
    if !(e > 0.0 && e <= 0.5) {
        return Err(Failure::Input(format!("eps = {e} must lie in (0, 1/2]")));
    }
    Ok(ChannelParameter::new(e)?)
}

// a closed pipe (e.g. `| head`) is not an error worth a panic
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json<T: Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("report serializes") + "\n"));
}

fn capacity(source: &ConstraintSource, bits: bool, noiseless: bool) -> Outcome<()> {
    let c = source.load()?;
    let e = capacity_expansion(&c)?;
    let (s, unit) = unit(bits);
    if noiseless {
        print_json(&json!({ "unit": unit, "c0": e.c0 / s }));
        return Ok(());
    }
    let rho = match source.rll {
        Some(p) => Some(rho0(p)?),
        None => None,
    };
    print_json(&json!({
        "unit": unit,
        "c0": e.c0 / s,
        "c_log": e.c_log / s,
        "c_lin": e.c_lin / s,
        "lambda": e.lambda,
        "rho0": rho,
        "order": e.order,
    }));
    Ok(())
}

fn coeffs(source: &ChainSource, bits: bool) -> Outcome<()> {
    let x = source.load()?;
    let e = expansion_of(&x)?;
    let (fs, gs) = stability_tables(&x)?;
    let spread =
        |v: &[(usize, usize, f64)]| v.iter().map(|t| (t.2 - v[0].2).abs()).fold(0.0, f64::max);
    let table = |v: &[(usize, usize, f64)]| -> Vec<_> {
        v.iter()
            .map(|&(n, k, val)| json!({ "n": n, "k": k, "value": val }))
            .collect()
    };
    let (s, unit) = unit(bits);
    print_json(&json!({
        "unit": unit,
        "order": x.order(),
        "entropy_rate": e.h0 / s,
        "f": e.f / s,
        "g": e.g / s,
        "stability": {
            "f_spread": spread(&fs),
            "g_spread": spread(&gs),
            "f_table": table(&fs),
            "g_table": table(&gs),
        },
    }));
    Ok(())
}

fn entropy(source: &ChainSource, eps: f64, n: usize, bits: bool) -> Outcome<()> {
    let x = source.load()?;
    let s = entropy_rate_sandwich(&x, channel(eps)?, n)?;
    let a = expansion_of(&x)?.eval(eps);
    let (d, unit) = unit(bits);
    print_json(&json!({
        "unit": unit,
        "eps": eps,
        "n": n,
        "lower": s.lower / d,
        "upper": s.upper / d,
        "gap": s.gap() / d,
        "asymptotic": a / d,
    }));
    Ok(())
}

fn bounds(
    source: &ConstraintSource,
    eps: f64,
    m: usize,
    n: usize,
    seed: u64,
    bits: bool,
) -> Outcome<()> {
    let c = source.load()?;
    let cfg = AscentConfig {
        seed,
        ..AscentConfig::default()
    };
    let s = capacity_sandwich_with(&c, channel(eps)?, m, n, &cfg)?;
    let a = capacity_expansion(&c)?.eval(eps);
    let (d, unit) = unit(bits);
    print_json(&json!({
        "unit": unit,
        "eps": eps,
        "m": m,
        "n": n,
        "seed": seed,
        "lower": s.lower / d,
        "upper": s.upper / d,
        "gap": s.gap() / d,
        "expansion": a / d,
        "upper_converged": s.hn.converged,
        "lower_chain": serde_json::from_str::<serde_json::Value>(&s.hm.chain.to_json()).expect("chain json"),
    }));
    Ok(())
}

fn sweep_csv(source: &ChainSource, grid: &[f64], n: usize) -> Outcome<()> {
    let x = source.load()?;
    let grid = grid
        .iter()
        .map(|&e| channel(e))
        .collect::<Outcome<Vec<_>>>()?;
    let (e, rows) = sweep(&x, &grid, n)?;
    let mut out = String::from("eps,lower,upper,asymptotic,residual\n");
    for r in &rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.eps, r.lower, r.upper, r.asymptotic, r.residual
        )
        .unwrap();
    }
    match fit_expansion(&rows) {
        Ok(fit) => {
            let (rb, rc) = fit.relative_errors(&e);
            writeln!(
                out,
                "# fit a={:.16e} b={:.16e} c={:.16e}",
                fit.a, fit.b, fit.c
            )
            .unwrap();
            writeln!(out, "# target f={:.16e} g={:.16e}", e.f, e.g).unwrap();
            writeln!(out, "# relative error b={rb:.6e} c={rc:.6e}").unwrap();
        }
        Err(err) => writeln!(out, "# fit unavailable: {err}").unwrap(),
    }
    emit(&out);
    Ok(())
}

fn verify() -> Outcome<()> {
    let checks = run_all();
    let ok = checks.iter().all(|c| c.passed);
    print_json(&json!({ "passed": ok, "checks": checks }));
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn taylor(alpha: Option<f64>, grid: &[f64], n: usize) -> Outcome<()> {
    let t = taylor_probe();
    let alpha = alpha.unwrap_or(0.5 * t.k2 / t.k1.abs());
    let grid = grid
        .iter()
        .map(|&e| channel(e))
        .collect::<Outcome<Vec<_>>>()?;
    let rows = sharpness_probe(alpha, &grid, n)?;
    print_json(&json!({ "taylor": t, "alpha": alpha, "rows": rows }));
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Capacity {
            source,
            bits,
            noiseless,
        } => capacity(&source, bits, noiseless),
        Command::Coeffs { source, bits } => coeffs(&source, bits),
        Command::Entropy {
            source,
            eps,
            n,
            bits,
        } => entropy(&source, eps, n, bits),
        Command::Bounds {
            source,
            eps,
            m,
            n,
            bits,
        } => bounds(&source, eps, m, n, cli.seed, bits),
        Command::Sweep { source, eps, n } => sweep_csv(&source, &eps, n),
        Command::Verify => verify(),
        Command::Taylor { alpha, eps, n } => taylor(alpha, &eps, n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
