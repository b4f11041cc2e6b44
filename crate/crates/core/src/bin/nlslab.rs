use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlslab::error::LabError;
use nlslab::lab::{
    bifurcation_report, evolve, run_checks, sweep_classification, write_branch, write_evolution, write_spectrum,
    BranchKind, RunConfig,
};

#[derive(Parser, Debug)]
#[command(name = "nlslab", version, about = "Radial cubic NLS with a potential: solitons, evolution and classification")]
struct Cli {
    /// Config file (key = value lines with [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config entry, e.g. --set grid.n=4000. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (the NLSLAB_OUT environment variable wins over this).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound state of H on the evolution grid.
    Spectrum,
    /// Continue one soliton branch.
    Branch {
        /// ground, excited, defocusing or q
        #[arg(long, default_value = "ground")]
        kind: String,
    },
    /// Single forward (and optionally backward) run with trajectory CSV.
    Evolve(EvolveArgs),
    /// Classification sweep.
    Sweep,
    /// Bifurcation report: branches and energy curves.
    Report,
    /// Assumption and invariant self-test suite.
    Check,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    /// soliton, excited, scaled_q, gaussian or file
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Dilation parameter for excited data.
    #[arg(long = "t")]
    scale_t: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    center: Option<f64>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Also run backward in time.
    #[arg(long)]
    backward: bool,
}

impl EvolveArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(k) = &self.data {
            o.push(format!("data.kind={k}"));
        }
        let nums = [
            ("z", self.z),
            ("omega", self.omega),
            ("scale_t", self.scale_t),
            ("alpha", self.alpha),
            ("amplitude", self.amplitude),
            ("width", self.width),
            ("center", self.center),
        ];
        for (key, v) in nums {
            if let Some(v) = v {
                o.push(format!("data.{key}={v}"));
            }
        }
        if let Some(f) = &self.file {
            o.push(format!("data.file={}", f.display()));
        }
        if let Some(t) = self.t_max {
            o.push(format!("time.t_max={t}"));
        }
        o
    }
}

enum Failure {
    Usage(String),
    Domain(LabError),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Domain(other),
        }
    }
}

fn load(cli: &Cli, extra: &[String]) -> Result<RunConfig, Failure> {
    let mut overrides = cli.overrides.clone();
    overrides.extend_from_slice(extra);
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", out.display()));
    }
    match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(Failure::Usage(format!("config file {} not found", path.display())));
            }
            Ok(RunConfig::load(path, &overrides)?)
        }
        None => Ok(RunConfig::parse_with("", &overrides, None)?),
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let extra = match &cli.command {
        Command::Evolve(a) => a.overrides(),
        _ => Vec::new(),
    };
    let cfg = load(cli, &extra)?;
    let dir = cfg.output_dir();
    match &cli.command {
        Command::Spectrum => {
            let s = write_spectrum(&cfg, &dir)?;
            println!("e0 = {:.12e}  e1 = {:.6e}  bound states = {}", s.e0, s.e1, s.n_neg);
        }
        Command::Branch { kind } => {
            let kind: BranchKind = kind.parse()?;
            let (name, n) = write_branch(&cfg, kind, &dir)?;
            println!("{n} points written to {}", dir.join(name).display());
        }
        Command::Evolve(a) => {
            let out = evolve(&cfg, a.backward)?;
            write_evolution(&cfg, &out, &dir)?;
            let (rec, v) = &out.forward;
            println!(
                "forward: {} at t = {:.6e} ({} samples, mass drift {:.2e}, energy drift {:.2e})",
                v.outcome,
                v.t_detect,
                rec.samples.len(),
                rec.max_mass_drift(),
                rec.max_energy_drift()
            );
            if let Some((_, bv)) = &out.backward {
                println!("backward: {} at t = {:.6e}", bv.outcome, bv.t_detect);
            }
        }
        Command::Sweep => {
            let table = sweep_classification(&cfg)?;
            table.write(&cfg, &dir)?;
            print!("{}", table.summary_text(&cfg));
        }
        Command::Report => {
            let rep = bifurcation_report(&cfg)?;
            rep.write(&cfg, &dir)?;
            println!("report written to {}", dir.display());
            if let Some(r) = rep.smallest_mass_ratio() {
                println!("mu*E1/(M(Q)E0(Q)) at smallest mu = {r:.6}");
            }
        }
        Command::Check => {
            let results = run_checks(&cfg);
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.pass;
            }
            if !ok {
                return Err(Failure::Domain(LabError::Precondition("self-check failed".into())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
