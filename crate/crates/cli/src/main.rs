//! `derivlab`: batch front end for checking, globalizing and scanning local
//! inner derivations.
//!
//! Exit codes: 0 accept / success, 1 reject / failure, 2 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use derivlab_core::campaign::{run_campaign, CampaignConfig, RANDOM_ENTRY_BOUND};
use derivlab_core::globalize::reconstruct_and_verify;
use derivlab_core::jordan::{
    check_local_inner_jordan, globalize_jordan, map_from_skew, random_jordan_patched, SkewImplementer,
};
use derivlab_core::localcheck::{
    check_local_inner, map_from_inner, random_basis_patched, AdditiveMap, Carrier, PointSet,
};
use derivlab_core::scan::exhaustive_scan;
use derivlab_core::{Error, Matrix, Ring, RingSpec};

const WORKERS_ENV: &str = "DERIVLAB_WORKERS";
const DEFAULT_SAMPLES: usize = 1000;

#[derive(Parser)]
#[command(name = "derivlab", version, about = "Check and reconstruct local inner derivations of M_n(R) and H_n(R)")]
struct Cli {
    /// Worker threads (default: available parallelism). DERIVLAB_WORKERS takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a map is a local inner derivation.
    Check {
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        points: PointArgs,
    },
    /// Reconstruct a global implementer and verify it.
    Globalize {
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        points: PointArgs,
    },
    /// Classify every linear self-map of a small algebra.
    Scan {
        #[arg(long, value_parser = parse_ring)]
        ring: RingSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "full")]
        algebra: Algebra,
    },
    /// Run a seeded campaign described by a JSON config.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a random map file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, value_parser = parse_ring)]
        ring: RingSpec,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        algebra: Algebra,
    },
}

#[derive(Args)]
struct PointArgs {
    /// Check every point (finite rings within budget only).
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Random points on top of the structured ones.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algebra {
    Full,
    Jordan,
}

impl From<Algebra> for Carrier {
    fn from(a: Algebra) -> Carrier {
        match a {
            Algebra::Full => Carrier::Full,
            Algebra::Jordan => Carrier::Jordan,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Inner,
    Patched,
}

fn parse_ring(s: &str) -> Result<RingSpec, String> {
    RingSpec::parse(s).map_err(|e| e.to_string())
}

/// Failure that maps to an exit code.
enum Failure {
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Run = Result<(Value, bool), Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<AdditiveMap, Failure> {
    AdditiveMap::from_json(&read_json(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn point_set(args: &PointArgs, f: &AdditiveMap) -> PointSet {
    if args.exhaustive {
        PointSet::exhaustive()
    } else if let Some(count) = args.samples {
        PointSet::sampled(count, args.seed)
    } else {
        PointSet::auto(f.ring(), f.n(), f.carrier(), DEFAULT_SAMPLES, args.seed)
    }
}

fn cmd_check(map: &Path, points: &PointArgs) -> Run {
    let f = load_map(map)?;
    let pts = point_set(points, &f);
    let verdict = match f.carrier() {
        Carrier::Full => check_local_inner(&f, &pts)?,
        Carrier::Jordan => check_local_inner_jordan(&f, &pts)?,
    };
    Ok((verdict.to_json(), verdict.is_accept()))
}

fn cmd_globalize(map: &Path, points: &PointArgs) -> Run {
    let f = load_map(map)?;
    match f.carrier() {
        Carrier::Full => match reconstruct_and_verify(&f, &point_set(points, &f)) {
            Ok(r) => Ok((r.to_json(), true)),
            Err(derivlab_core::globalize::GlobalizeError::Input(e)) => Err(e.into()),
            Err(e) => Ok((e.to_json(), false)),
        },
        Carrier::Jordan => match globalize_jordan(&f) {
            Ok(c) => Ok((json!({"status": "success", "implementer": c.matrix().to_json()}), true)),
            Err(derivlab_core::globalize::GlobalizeError::Input(e)) => Err(e.into()),
            Err(e) => Ok((e.to_json(), false)),
        },
    }
}

fn cmd_scan(ring: &RingSpec, n: usize, algebra: Algebra) -> Run {
    let ring = Ring::new(ring)?;
    let report = exhaustive_scan(&ring, n, algebra.into())?;
    Ok((report.to_json(), report.theorem_holds()))
}

fn cmd_campaign(config_path: &Path, output: Option<&Path>) -> Run {
    let v = read_json(config_path)?;
    let config = CampaignConfig::from_json(&v)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let report = run_campaign(&config, base)?;
    if let Some(out) = output.map(Path::to_path_buf).or_else(|| config.output.as_ref().map(|p| base.join(p))) {
        write_json(&out, &report)?;
    }
    Ok((report, true))
}

fn cmd_gen(kind: GenKind, ring: &RingSpec, n: usize, seed: u64, out: &Path, algebra: Algebra) -> Run {
    let ring = Ring::new(ring)?;
    if n == 0 {
        return Err(Failure::Input("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (map, implementer) = match (kind, algebra) {
        (GenKind::Inner, Algebra::Full) => {
            let a = Matrix::from_fn(&ring, n, n, |_, _| ring.random_bounded(&mut rng, RANDOM_ENTRY_BOUND));
            (map_from_inner(&a), Some(a))
        }
        (GenKind::Inner, Algebra::Jordan) => {
            let c = SkewImplementer::random(&ring, n, &mut rng, RANDOM_ENTRY_BOUND);
            (map_from_skew(&c), Some(c.into_matrix()))
        }
        (GenKind::Patched, Algebra::Full) => (random_basis_patched(&ring, n, seed), None),
        (GenKind::Patched, Algebra::Jordan) => (random_jordan_patched(&ring, n, seed), None),
    };
    write_json(out, &map.to_json())?;
    let mut summary = json!({"out": out.display().to_string(), "seed": seed});
    if let Some(a) = implementer {
        summary["implementer"] = a.to_json();
    }
    Ok((summary, true))
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable report");
    fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .map(Some)
            .ok_or_else(|| Failure::Input(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(flag.filter(|&w| w > 0)),
    }
}

fn run(cli: Cli) -> Run {
    if let Some(workers) = worker_count(cli.workers)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    match &cli.command {
        Command::Check { map, points } => cmd_check(map, points),
        Command::Globalize { map, points } => cmd_globalize(map, points),
        Command::Scan { ring, n, algebra } => cmd_scan(ring, *n, *algebra),
        Command::Campaign { config, output } => cmd_campaign(config, output.as_deref()),
        Command::Gen { kind, ring, n, seed, out, algebra } => cmd_gen(*kind, ring, *n, *seed, out, *algebra),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, ok)) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
