use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use hydrostrip::config::RunConfig;
use hydrostrip::Error;

mod commands;

#[derive(Parser)]
#[command(name = "hydrostrip", version, about = "Primitive-equation and hydrostatic-limit runs with analytic-norm checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the hydrostatic limit system and certify its energy estimates.
    RunLimit(ConfigArgs),
    /// Integrate the primitive equations at every configured eps.
    RunPe(ConfigArgs),
    /// Lockstep limit/PE runs over a decreasing eps list with a log-log rate fit.
    Sweep(ConfigArgs),
    /// Recompute certificates from existing run directories.
    Verify(VerifyArgs),
    /// Block and Besov norms of a snapshot file.
    Norms(NormsArgs),
}

/// A JSON config file and/or flags named after its keys; flags win.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    lx: Option<f64>,
    /// Single value or comma-separated decreasing list.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// heat, analytic-band or snapshot.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    band: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshot_u: Option<PathBuf>,
    #[arg(long)]
    snapshot_t: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    dealias: Option<bool>,
    #[arg(long)]
    hydrostatic_split: Option<bool>,
    #[arg(long)]
    order: Option<u8>,
    /// zero-mean-gradient or fixed-flux.
    #[arg(long)]
    mean_flow: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    stiffness_safety: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> hydrostrip::Result<RunConfig> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Error::config("<document>", "expected a JSON object")),
                    Err(e) => return Err(Error::config("<document>", e.to_string())),
                }
            }
            None => Map::new(),
        };
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set("nx", self.nx.map(Value::from));
        set("ny", self.ny.map(Value::from));
        set("lx", self.lx.map(Value::from));
        set(
            "eps",
            self.eps.as_ref().map(|e| match e.as_slice() {
                [one] => json!(one),
                many => json!(many),
            }),
        );
        set("dt", self.dt.map(Value::from));
        set("horizon", self.horizon.map(Value::from));
        set("family", self.family.clone().map(Value::from));
        set("amplitude", self.amplitude.map(Value::from));
        set("band", self.band.map(Value::from));
        set("modes", self.modes.map(Value::from));
        set("seed", self.seed.map(Value::from));
        set("snapshot_u", self.snapshot_u.as_ref().map(|p| json!(p)));
        set("snapshot_t", self.snapshot_t.as_ref().map(|p| json!(p)));
        set("a", self.a.map(Value::from));
        set("lambda", self.lambda.map(Value::from));
        set("mu", self.mu.map(Value::from));
        set("r", self.r.map(Value::from));
        set("output_dir", self.output_dir.as_ref().map(|p| json!(p)));
        set("sample_every", self.sample_every.map(Value::from));
        set("dealias", self.dealias.map(Value::from));
        set("hydrostatic_split", self.hydrostatic_split.map(Value::from));
        set("order", self.order.map(Value::from));
        set("mean_flow", self.mean_flow.clone().map(Value::from));
        set("c1", self.c1.map(Value::from));
        set("c0", self.c0.map(Value::from));
        set("stiffness_safety", self.stiffness_safety.map(Value::from));
        RunConfig::from_json_str(&Value::Object(map).to_string())
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run directories; defaults to every run below the output root.
    runs: Vec<PathBuf>,
    /// Output root searched when no runs are given.
    #[arg(long)]
    root: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormsArgs {
    snapshot: PathBuf,
    /// Besov index.
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Analytic radius applied before measuring.
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunLimit(args) => args.resolve().and_then(|c| commands::run_limit(&c)),
        Command::RunPe(args) => args.resolve().and_then(|c| commands::run_pe(&c)),
        Command::Sweep(args) => args.resolve().and_then(|c| commands::sweep(&c)),
        Command::Verify(args) => commands::verify(&args.runs, args.root.as_deref()),
        Command::Norms(args) => commands::norms(&args.snapshot, args.s, args.radius),
    };
    match result {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
