mod args;
mod commands;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

/// Validation failure in the command line itself.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "cardylab", version, about = "Percolation on random triangulations: Cardy embedding, pivotals, fields and dynamics")]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CARDYLAB_THREADS")]
    threads: Option<usize>,
    /// Where to write the result envelope for commands whose --out is a data file.
    #[arg(long, global = true)]
    envelope: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample Boltzmann triangulations of a polygon.
    SampleMap(SampleMapArgs),
    /// Crossing-event counts on maps, or the rhombus quad crossing.
    Crossing(CrossingArgs),
    /// Monte Carlo Cardy embedding of a marked map or lattice domain.
    Embed(EmbedArgs),
    /// Embedding of the equilateral triangle against the identity.
    VerifyCardy(VerifyCardyArgs),
    /// Four-arm probabilities and their scaling exponent.
    FourArm(FourArmArgs),
    /// ε-pivotal vertices, ρ-important points and pivotal measures.
    Pivotals(PivotalsArgs),
    /// Gaussian free field samples and the circle-average variance law.
    Gff(GffArgs),
    /// Shift covariance of the chaos measures.
    Gmc(GmcArgs),
    /// Dynamical percolation driven by clock rates.
    Dynamics(DynamicsArgs),
    /// Exact generator of the ε-cutoff dynamics on small maps.
    Ctmc(CtmcArgs),
    /// Occupation-measure estimate for an interface or pivotal set.
    Occupation(OccupationArgs),
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use cardylab::Error as E;
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<E>() {
        Some(E::CapExceeded { .. } | E::TailCutoffExceeded { .. } | E::TooManyStates { .. } | E::TooManyVertices { .. } | E::NoConvergence(_)) => 3,
        Some(_) => 2,
        None if e.downcast_ref::<std::io::Error>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().expect("thread pool set once");
    }
    let ctx = run::Context { seed: cli.seed, threads: cli.threads, envelope: cli.envelope };
    let res = match cli.command {
        Command::SampleMap(a) => sample_map(ctx, a),
        Command::Crossing(a) => crossing(ctx, a),
        Command::Embed(a) => embed(ctx, a),
        Command::VerifyCardy(a) => verify_cardy(ctx, a),
        Command::FourArm(a) => four_arm(ctx, a),
        Command::Pivotals(a) => pivotals(ctx, a),
        Command::Gff(a) => gff(ctx, a),
        Command::Gmc(a) => gmc(ctx, a),
        Command::Dynamics(a) => dynamics(ctx, a),
        Command::Ctmc(a) => ctmc(ctx, a),
        Command::Occupation(a) => occupation(ctx, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
