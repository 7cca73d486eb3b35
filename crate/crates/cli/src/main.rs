use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcflow_cli::commands::{
    cmd_check_hypotheses, cmd_make_bubble, cmd_run_flow, cmd_verify, BubbleArgs, CommonOverrides,
    HypothesisArgs, EXIT_ERROR,
};

/// Prescribed-mean-curvature conformal flow on the boundary sphere of the
/// unit ball: run experiments, check realization hypotheses, build bubble
/// initial data, and verify the numerical invariants.
#[derive(Parser)]
#[command(name = "mcflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Band limit override.
    #[arg(long)]
    lmax: Option<usize>,
    /// Grid oversampling override.
    #[arg(long)]
    oversample: Option<f64>,
    /// Output directory override.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for randomized checks (echoed into manifests).
    #[arg(long)]
    seed: Option<u64>,
}

impl From<&Common> for CommonOverrides {
    fn from(c: &Common) -> Self {
        CommonOverrides {
            lmax: c.lmax,
            oversample: c.oversample,
            out_dir: c.out_dir.clone(),
            seed: c.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a flat key = value config file.
    ///
    /// Exit codes: 0 converged, 2 concentrated, 3 time limit reached,
    /// 1 aborted or invalid input.
    RunFlow {
        /// Path to the run configuration.
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check the realization hypotheses for a prescribed function.
    ///
    /// Exit codes: 0 both conditions hold, 4 otherwise, 1 invalid input.
    CheckHypotheses {
        /// Constant part of f.
        #[arg(long, default_value_t = 1.0)]
        f_const: f64,
        /// Harmonic term `l m coefficient` (repeatable, commas allowed).
        #[arg(long = "f-term")]
        f_term: Vec<String>,
        /// Symmetrize f against the declared action before checking.
        #[arg(long, default_value_t = false)]
        f_symmetrize: bool,
        /// Symmetry action: rotation:ax,ay,az,k or reflection:ex,ey,ez.
        #[arg(long)]
        symmetry: String,
        /// Defect tolerance and strictness margin.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a bubble onto a grid and write it as a SPHFIELD snapshot.
    ///
    /// Exit codes: 0 written, 1 invalid parameters.
    MakeBubble {
        /// Bubble parameters, `bubble:cx,cy,cz,lambda`.
        #[arg(long)]
        params: String,
        /// Output snapshot path.
        #[arg(long)]
        out: PathBuf,
        /// Optional constant part of f for the printed E_f.
        #[arg(long)]
        f_const: Option<f64>,
        /// Harmonic terms of f (repeatable).
        #[arg(long = "f-term")]
        f_term: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in acceptance battery (criteria 1-9).
    ///
    /// Exit codes: 0 all pass, 5 with the failing criteria named.
    Verify {
        /// Fault-injection self-test: roundtrip-perturb, dtn-eigenvalue or
        /// bubble-scale.
        #[arg(long)]
        inject_fault: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::RunFlow { config, common } => cmd_run_flow(config, &common.into()),
        Command::CheckHypotheses {
            f_const,
            f_term,
            f_symmetrize,
            symmetry,
            tol,
            common,
        } => cmd_check_hypotheses(
            &HypothesisArgs {
                f_const: *f_const,
                f_terms: f_term.clone(),
                f_symmetrize: *f_symmetrize,
                symmetry: symmetry.clone(),
                tol: *tol,
            },
            &common.into(),
        ),
        Command::MakeBubble {
            params,
            out,
            f_const,
            f_term,
            common,
        } => cmd_make_bubble(
            &BubbleArgs {
                params: params.clone(),
                out: out.clone(),
                f_const: *f_const,
                f_terms: f_term.clone(),
            },
            &common.into(),
        ),
        Command::Verify {
            inject_fault,
            common,
        } => cmd_verify(common.seed.unwrap_or(42), inject_fault.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
