//! Command implementations. Each returns the process exit code:
//! 0 converged / all checks passed, 1 aborted or bad input, 2 concentrated,
//! 3 time limit, 4 hypothesis check negative, 5 verification failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use mcflow_core::conformal::{energy, energy_report, normalized_energy, volume};
use mcflow_core::flow::{run, Outcome};
use mcflow_core::geometry::{bubble, BubbleParams};
use mcflow_core::io::{read_field, write_field, write_trajectory};
use mcflow_core::spharm::GridField;
use mcflow_core::symmetry::check_hypotheses;
use mcflow_core::verify::{run_battery, Fault};
use mcflow_core::{ConcentrationReport, EnergyReport, HypothesisReport};

use crate::config::{ConfigMap, FSpec, RunSettings, U0Spec};
use crate::manifest::{hash_file, sha256_hex, RunManifest};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONCENTRATED: i32 = 2;
pub const EXIT_MAX_TIME: i32 = 3;
pub const EXIT_HYPOTHESES_FAIL: i32 = 4;
pub const EXIT_VERIFY_FAIL: i32 = 5;

#[derive(Debug, Serialize)]
struct RunReport {
    outcome: String,
    exit_code: i32,
    steps: usize,
    t_end: f64,
    alpha_inf: Option<f64>,
    abort_reason: Option<String>,
    final_energy: EnergyReport,
    concentration: Option<ConcentrationReport>,
    l_max: usize,
    n_theta: usize,
    n_phi: usize,
    seed: u64,
}

/// Overrides shared by the subcommands.
#[derive(Debug, Default, Clone)]
pub struct CommonOverrides {
    pub lmax: Option<usize>,
    pub oversample: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn cmd_run_flow(config_path: &Path, overrides: &CommonOverrides) -> anyhow::Result<i32> {
    let started = Instant::now();
    let cfg_map = ConfigMap::load(config_path)?;
    let mut settings = RunSettings::from_config(&cfg_map, config_path)?;
    if let Some(l) = overrides.lmax {
        settings.flow.l_max = l;
    }
    if let Some(o) = overrides.oversample {
        settings.flow.oversample = o;
    }
    if let Some(dir) = &overrides.out_dir {
        settings.out_dir = dir.clone();
    }
    if let Some(seed) = overrides.seed {
        settings.seed = seed;
    }

    let spec = settings.flow.build_grid()?;
    let f = settings.fspec.build(&spec, settings.flow.symmetry.as_ref())?;

    let mut input_hashes = BTreeMap::new();
    input_hashes.insert(
        config_path.display().to_string(),
        sha256_hex(cfg_map.raw.as_bytes()),
    );
    let u0 = match &settings.u0 {
        U0Spec::Const(v) => GridField::constant(&spec, *v),
        U0Spec::Bubble(params) => bubble(params, &spec),
        U0Spec::File(path) => {
            input_hashes.insert(path.display().to_string(), hash_file(path)?);
            let loaded = read_field(path)?;
            if !loaded.spec().same_layout(&spec) {
                anyhow::bail!(
                    "snapshot {} has layout (L={}, {}x{}), run wants (L={}, {}x{})",
                    path.display(),
                    loaded.spec().l_max(),
                    loaded.spec().n_theta(),
                    loaded.spec().n_phi(),
                    spec.l_max(),
                    spec.n_theta(),
                    spec.n_phi()
                );
            }
            loaded
        }
    };

    std::fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("cannot create {}", settings.out_dir.display()))?;

    let result = run(&u0, &f, &settings.flow)?;
    let exit_code = match &result.outcome {
        Outcome::Converged { .. } => EXIT_CONVERGED,
        Outcome::Concentrated(_) => EXIT_CONCENTRATED,
        Outcome::MaxTimeReached(_) => EXIT_MAX_TIME,
        Outcome::Aborted { .. } => EXIT_ERROR,
    };

    let mut outputs = Vec::new();
    let traj_path = settings.out_dir.join("trajectory.csv");
    write_trajectory(&traj_path, &result.trajectory)?;
    outputs.push(traj_path.display().to_string());

    for (step, field) in &result.snapshots {
        let path = settings.out_dir.join(format!("snapshot_{step:06}.sphfield"));
        write_field(&path, field)?;
        outputs.push(path.display().to_string());
    }
    if let Outcome::Converged { u_inf, .. } = &result.outcome {
        let path = settings.out_dir.join("final.sphfield");
        write_field(&path, u_inf)?;
        outputs.push(path.display().to_string());
    }

    let last = result.trajectory.last().expect("trajectory never empty");
    let report = RunReport {
        outcome: result.outcome.label().to_string(),
        exit_code,
        steps: last.step,
        t_end: last.t,
        alpha_inf: match &result.outcome {
            Outcome::Converged { alpha_inf, .. } => Some(*alpha_inf),
            _ => None,
        },
        abort_reason: match &result.outcome {
            Outcome::Aborted { reason } => Some(reason.clone()),
            _ => None,
        },
        final_energy: EnergyReport {
            e: last.e,
            e_f: last.e_f,
            alpha: last.alpha,
            volume: last.volume,
            f_volume: last.e / last.alpha,
            residual_sup: last.residual_sup,
            residual_l2: last.residual_l2,
        },
        concentration: match &result.outcome {
            Outcome::Concentrated(rep) => Some(rep.clone()),
            _ => None,
        },
        l_max: settings.flow.l_max,
        n_theta: spec.n_theta(),
        n_phi: spec.n_phi(),
        seed: settings.seed,
    };
    let report_path = settings.out_dir.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    outputs.push(report_path.display().to_string());

    let manifest = RunManifest {
        command: "run-flow".to_string(),
        config_path: config_path.display().to_string(),
        config_echo: cfg_map.raw.clone(),
        input_hashes,
        outputs,
        outcome: result.outcome.label().to_string(),
        exit_code,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    std::fs::write(
        settings.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    println!(
        "{}: {} steps to t = {:.4}, residual_sup = {:.3e}, E_f = {:.8} -> {:.8}",
        result.outcome.label(),
        last.step,
        last.t,
        last.residual_sup,
        result.trajectory[0].e_f,
        last.e_f
    );
    if let Outcome::Aborted { reason } = &result.outcome {
        eprintln!("aborted: {reason}");
    }
    Ok(exit_code)
}

pub struct HypothesisArgs {
    pub f_const: f64,
    pub f_terms: Vec<String>,
    pub f_symmetrize: bool,
    pub symmetry: String,
    pub tol: f64,
}

pub fn cmd_check_hypotheses(
    args: &HypothesisArgs,
    overrides: &CommonOverrides,
) -> anyhow::Result<i32> {
    let l_max = overrides.lmax.unwrap_or(64);
    let oversample = overrides.oversample.unwrap_or(2.0);
    let action = crate::config::parse_symmetry(&args.symmetry)?
        .ok_or_else(|| anyhow::anyhow!("check-hypotheses requires a symmetry, got `none`"))?;
    let spec = mcflow_core::spharm::GridSpec::build_with_hint(l_max, oversample, Some(&action))?;
    let fspec = FSpec::from_parts(args.f_const, &args.f_terms, args.f_symmetrize)?;
    let f = fspec.build(&spec, Some(&action))?;

    let report = check_hypotheses(&f, &action, args.tol)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    print_verdict_table(&report);

    if report.symmetry_ok && report.condition8 && report.condition9 {
        Ok(EXIT_CONVERGED)
    } else {
        Ok(EXIT_HYPOTHESES_FAIL)
    }
}

fn print_verdict_table(rep: &HypothesisReport) {
    let yn = |b: bool| if b { "pass" } else { "FAIL" };
    eprintln!();
    eprintln!("  check                                 verdict   value");
    eprintln!("  symmetry(defect < tol)                {:<9} {:.3e}", yn(rep.symmetry_ok), rep.symmetry_defect);
    eprintln!("  (8) laplacian > 0 at fixed-set max    {:<9} {:?}", yn(rep.condition8), rep.laplacian_at_argmax);
    eprintln!(
        "  (9) max f < 2^(2/(n-1)) max_F f       {:<9} {:.8} < {:.8}",
        yn(rep.condition9),
        rep.global_max,
        rep.ratio_bound_thm
    );
    eprintln!(
        "  (2.7) max f < 2^(1/(n-1)) max_F f     {:<9} {:.8} < {:.8}",
        yn(rep.condition27),
        rep.global_max,
        rep.ratio_bound_lemma
    );
}

pub struct BubbleArgs {
    pub params: String,
    pub out: PathBuf,
    pub f_const: Option<f64>,
    pub f_terms: Vec<String>,
}

pub fn cmd_make_bubble(args: &BubbleArgs, overrides: &CommonOverrides) -> anyhow::Result<i32> {
    let l_max = overrides.lmax.unwrap_or(64);
    let oversample = overrides.oversample.unwrap_or(2.0);
    let params: BubbleParams = args.params.parse()?;
    let spec = mcflow_core::spharm::GridSpec::build(l_max, oversample)?;
    let u = bubble(&params, &spec);

    write_field(&args.out, &u)?;

    let e = energy(&u)?;
    let vol = volume(&u)?;
    println!("E = {e}");
    println!("volume = {vol}");
    if let Some(c) = args.f_const {
        let fspec = FSpec::from_parts(c, &args.f_terms, false)?;
        let f = fspec.build(&spec, None)?;
        let e_f = normalized_energy(&u, &f)?;
        println!("E_f = {e_f}");
    }
    println!("wrote {}", args.out.display());
    Ok(EXIT_CONVERGED)
}

pub fn cmd_verify(seed: u64, fault: Option<&str>) -> anyhow::Result<i32> {
    let fault = match fault {
        None => None,
        Some(name) => Some(name.parse::<Fault>()?),
    };
    let started = Instant::now();
    let results = run_battery(seed, fault);
    let total = started.elapsed().as_secs_f64();

    println!("{:<28} {:>6} {:>9}  detail", "criterion", "status", "time");
    let mut failed: Vec<&str> = Vec::new();
    for r in &results {
        println!(
            "{:<28} {:>6} {:>8.1}s  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    println!("total wall time: {total:.1}s");
    if failed.is_empty() {
        println!("all criteria passed");
        Ok(EXIT_CONVERGED)
    } else {
        println!("failed criteria: {}", failed.join(", "));
        Ok(EXIT_VERIFY_FAIL)
    }
}

/// Recomputes the stationary residual of a saved snapshot against a
/// prescribed function; used to sanity-check converged runs offline.
pub fn replay_residual(snapshot: &Path, fspec: &FSpec) -> anyhow::Result<f64> {
    let u = read_field(snapshot)?;
    let f = fspec.build(u.spec(), None)?;
    Ok(energy_report(&u, &f)?.residual_sup)
}
