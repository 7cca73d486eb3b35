//! Time integration of the normalized conformal flow
//! u_t = (n-1)/4 (α f - H_g) u with conservation and monotonicity
//! monitoring, convergence detection, and the cap-mass concentration
//! detector.
//!
//! The time scheme is explicit RK4 with the volume multiplier α refreshed at
//! every internal stage, a CFL cap dt <= cfl / ((L+1) max u^{-2/(n-1)})
//! matching the first-order growth of the DtN spectrum, and step acceptance
//! governed by the two laws the continuous flow guarantees: strict
//! positivity of u and monotonicity of the normalized energy E_f. The
//! volume ⨏ u^{2n/(n-1)} dμ is conserved exactly by the continuous flow and
//! watched here as a drift monitor. Blow-up is reported, never continued
//! through: two consecutive flagged concentration checks stop the run.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conformal::{energy_report, flow_rhs, mean_curvature, Dimension, EnergyReport};
use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::spharm::{
    analyze, degree_sums, eval_at_point, laplace_beltrami, legendre::legendre_p_all,
    surface_gradient_norm, synthesize, GridField, GridSpec, SpectralField,
};
use crate::symmetry::{symmetry_defect, SymmetryAction};

/// Tuning knobs of one flow run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    pub l_max: usize,
    pub oversample: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// CFL number: dt <= cfl / ((L+1) max u^{-2/(n-1)}).
    pub cfl: f64,
    pub t_max: f64,
    /// Converged when sup |αf - H| < residual_tol and E_f has plateaued.
    pub residual_tol: f64,
    /// Largest admissible per-step increase of E_f.
    pub ef_violation_tol: f64,
    /// Largest admissible relative drift of the conformal volume.
    pub vol_drift_tol: f64,
    pub snapshot_every: usize,
    /// Geodesic cap radii probed by the concentration detector.
    pub concentration_radii: Vec<f64>,
    /// Cap mass at the smallest radius that flags concentration.
    pub concentration_threshold: f64,
    /// Hard floor on min u; the discrete surrogate for the flow's uniform
    /// lower bound.
    pub u_floor: f64,
    /// Optional action whose defect is recorded along the trajectory.
    pub symmetry: Option<SymmetryAction>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            l_max: 64,
            oversample: 2.0,
            dt_init: 1e-3,
            dt_min: 1e-10,
            dt_max: 0.25,
            cfl: 0.5,
            t_max: 200.0,
            residual_tol: 1e-5,
            ef_violation_tol: 1e-8,
            vol_drift_tol: 1e-6,
            snapshot_every: 50,
            concentration_radii: vec![0.2, 0.4],
            concentration_threshold: 0.9,
            u_floor: 1e-8,
            symmetry: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("cfl", self.cfl),
            ("t_max", self.t_max),
            ("residual_tol", self.residual_tol),
            ("ef_violation_tol", self.ef_violation_tol),
            ("vol_drift_tol", self.vol_drift_tol),
            ("concentration_threshold", self.concentration_threshold),
            ("u_floor", self.u_floor),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.dt_min > self.dt_init || self.dt_init > self.dt_max {
            return Err(Error::InvalidArgument(format!(
                "need dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidArgument("snapshot_every must be >= 1".into()));
        }
        if self.concentration_radii.is_empty()
            || self.concentration_radii.iter().any(|r| *r <= 0.0)
        {
            return Err(Error::InvalidArgument(
                "concentration radii must be positive and nonempty".into(),
            ));
        }
        Ok(())
    }

    /// The grid used by runs under this config.
    pub fn build_grid(&self) -> Result<Arc<GridSpec>> {
        GridSpec::build_with_hint(self.l_max, self.oversample, self.symmetry.as_ref())
    }
}

/// One time slice of the flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub step_index: usize,
    pub u: GridField,
    pub coeffs: SpectralField,
    pub report: EnergyReport,
}

impl FlowState {
    pub fn new(step_index: usize, t: f64, u: GridField, f: &GridField) -> Result<Self> {
        let coeffs = analyze(&u);
        let report = energy_report(&u, f)?;
        Ok(FlowState {
            t,
            step_index,
            u,
            coeffs,
            report,
        })
    }
}

/// One trajectory row per accepted step (plus the initial state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub alpha: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_f")]
    pub e_f: f64,
    pub volume: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub residual_sup: f64,
    #[serde(rename = "residual_L2")]
    pub residual_l2: f64,
    pub max_cap_mass: f64,
    pub symmetry_defect: f64,
}

pub type Trajectory = Vec<TrajectoryRow>;

/// Cap-mass measurement and pointwise diagnostics at one candidate point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationCandidate {
    pub point: [f64; 3],
    pub u_value: f64,
    /// (radius, cap mass) pairs, ordered as configured.
    pub cap_masses: Vec<(f64, f64)>,
    pub grad_f_norm: f64,
    pub laplacian_f: f64,
    pub e_f_current: f64,
    /// f(Q)^{-(n-1)/n}, the bubble-limit energy at the candidate.
    pub one_over_f_power: f64,
}

/// Verdict of the cap-mass criterion: candidates sorted by cap mass at the
/// smallest radius, descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub candidates: Vec<ConcentrationCandidate>,
    pub flagged: bool,
}

impl ConcentrationReport {
    /// Largest cap mass at the smallest configured radius.
    pub fn max_cap_mass(&self) -> f64 {
        self.candidates
            .iter()
            .filter_map(|c| c.cap_masses.first().map(|(_, m)| *m))
            .fold(0.0, f64::max)
    }
}

/// How a run ended.
#[derive(Debug, Clone)]
pub enum Outcome {
    Converged { u_inf: GridField, alpha_inf: f64 },
    Concentrated(ConcentrationReport),
    MaxTimeReached(Box<FlowState>),
    Aborted { reason: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Converged { .. } => "converged",
            Outcome::Concentrated(_) => "concentrated",
            Outcome::MaxTimeReached(_) => "max-time-reached",
            Outcome::Aborted { .. } => "aborted",
        }
    }
}

/// Everything a run produces: per-step rows, periodic snapshots, and the
/// final verdict.
#[derive(Debug)]
pub struct RunResult {
    pub trajectory: Trajectory,
    pub snapshots: Vec<(usize, GridField)>,
    pub outcome: Outcome,
}

/// Result of one attempted step.
pub enum StepResult {
    Accepted(Box<FlowState>),
    /// A stage or the combined update fell below the positivity floor; the
    /// caller halves dt.
    Rejected { min_u: f64 },
}

/// One explicit RK4 step of u_t = c_F (αf - H) u, with α re-evaluated inside
/// every stage and the result re-projected to the band limit.
pub fn step(state: &FlowState, f: &GridField, dt: f64, cfg: &FlowConfig) -> Result<StepResult> {
    let u0 = &state.u;

    let guarded_rhs = |u: &GridField| -> Result<std::result::Result<GridField, f64>> {
        let min = u.min_value();
        if min < cfg.u_floor {
            return Ok(Err(min));
        }
        Ok(Ok(flow_rhs(u, f)?))
    };

    let k1 = match guarded_rhs(u0)? {
        Ok(k) => k,
        Err(min_u) => return Ok(StepResult::Rejected { min_u }),
    };
    let mid1 = u0.zip_with(&k1, |u, k| u + 0.5 * dt * k)?;
    let k2 = match guarded_rhs(&mid1)? {
        Ok(k) => k,
        Err(min_u) => return Ok(StepResult::Rejected { min_u }),
    };
    let mid2 = u0.zip_with(&k2, |u, k| u + 0.5 * dt * k)?;
    let k3 = match guarded_rhs(&mid2)? {
        Ok(k) => k,
        Err(min_u) => return Ok(StepResult::Rejected { min_u }),
    };
    let end = u0.zip_with(&k3, |u, k| u + dt * k)?;
    let k4 = match guarded_rhs(&end)? {
        Ok(k) => k,
        Err(min_u) => return Ok(StepResult::Rejected { min_u }),
    };

    let sixth = dt / 6.0;
    let combined = u0
        .zip_with(&k1, |u, k| u + sixth * k)?
        .zip_with(&k2, |u, k| u + 2.0 * sixth * k)?
        .zip_with(&k3, |u, k| u + 2.0 * sixth * k)?
        .zip_with(&k4, |u, k| u + sixth * k)?;
    // re-project to the band limit to keep the state de-aliased
    let projected = synthesize(&analyze(&combined), u0.spec())?;
    let min = projected.min_value();
    if min < cfg.u_floor {
        return Ok(StepResult::Rejected { min_u: min });
    }

    let new_state = FlowState::new(state.step_index + 1, state.t + dt, projected, f)?;
    Ok(StepResult::Accepted(Box::new(new_state)))
}

/// CFL-limited admissible step given the current conformal factor.
pub fn cfl_cap(u: &GridField, cfg: &FlowConfig) -> f64 {
    let dim = Dimension::default();
    let expo = dim.neumann_coeff(); // 2/(n-1)
    let max_inv = u
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.powf(-expo)));
    cfg.cfl / ((cfg.l_max as f64 + 1.0) * max_inv)
}

/// True when the residual is below tolerance and E_f has moved by less than
/// residual_tol · E_f over the last 50 recorded steps.
pub fn convergence_check(state: &FlowState, history: &Trajectory, cfg: &FlowConfig) -> bool {
    if state.report.residual_sup >= cfg.residual_tol {
        return false;
    }
    if history.len() <= 50 {
        return false;
    }
    let past = history[history.len() - 51].e_f;
    (state.report.e_f - past).abs() < cfg.residual_tol * state.report.e_f.abs()
}

/// Cap-mass concentration detector.
///
/// Candidates are grid local maxima of u at or above the 99th percentile.
/// For each candidate Q and configured radius r the mass
/// (ω⁻¹ ∫_{d(x,Q)<r} H² u⁴ dμ)^{1/2} is computed by pairing the analyzed
/// field w = H²u⁴ with the closed-form harmonic coefficients of the cap
/// indicator (Funk-Hecke: μ_l = 2π (P_{l-1} - P_{l+1})(cos r)/(2l+1)), which
/// is exact for band-limited w and free of boundary-cell noise.
pub fn detect_concentration(
    state: &FlowState,
    f: &GridField,
    cfg: &FlowConfig,
) -> Result<ConcentrationReport> {
    let u = &state.u;
    let spec = u.spec();
    let dim = Dimension::default();

    let h = mean_curvature(u)?;
    let p_v = dim.volume_exponent();
    let w = h.zip_with(u, |hv, uv| hv * hv * uv.powf(p_v))?;
    let w_coeffs = analyze(&w);

    let f_coeffs = analyze(f);
    let f_lap = laplace_beltrami(&f_coeffs);

    let mut radii = cfg.concentration_radii.clone();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r_min = radii[0];

    let candidates_idx = candidate_maxima(u, r_min);
    let mut candidates = Vec::with_capacity(candidates_idx.len());
    for (i, j) in candidates_idx {
        let p = spec.node(i, j);
        let q = SpherePoint::normalized(p).expect("grid nodes are unit vectors");
        let cap_masses: Vec<(f64, f64)> = radii
            .iter()
            .map(|r| (*r, cap_mass(&w_coeffs, &q, *r, spec.omega())))
            .collect();
        let f_at = eval_at_point(&f_coeffs, &q);
        candidates.push(ConcentrationCandidate {
            point: q.coords(),
            u_value: u.values()[[i, j]],
            cap_masses,
            grad_f_norm: surface_gradient_norm(&f_coeffs, &q),
            laplacian_f: eval_at_point(&f_lap, &q),
            e_f_current: state.report.e_f,
            one_over_f_power: f_at.powf(-dim.energy_exponent()),
        });
    }
    candidates.sort_by(|a, b| {
        let ma = a.cap_masses.first().map(|x| x.1).unwrap_or(0.0);
        let mb = b.cap_masses.first().map(|x| x.1).unwrap_or(0.0);
        mb.partial_cmp(&ma).unwrap()
    });

    let flagged = candidates
        .iter()
        .any(|c| c.cap_masses.first().map(|x| x.1).unwrap_or(0.0) >= cfg.concentration_threshold);

    Ok(ConcentrationReport {
        candidates,
        flagged,
    })
}

/// Grid local maxima of u at or above the 99th percentile, strongest first,
/// deduplicated within half the smallest cap radius (at most 8 kept).
fn candidate_maxima(u: &GridField, r_min: f64) -> Vec<(usize, usize)> {
    let spec = u.spec();
    let v = u.values();
    let (nt, np) = (spec.n_theta(), spec.n_phi());

    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p99 = sorted[((sorted.len() - 1) as f64 * 0.99).round() as usize];

    let mut peaks: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..nt {
        for j in 0..np {
            let val = v[[i, j]];
            if val < p99 {
                continue;
            }
            let mut is_peak = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = i as i64 + di;
                    if ni < 0 || ni >= nt as i64 {
                        continue;
                    }
                    let nj = (j as i64 + dj).rem_euclid(np as i64) as usize;
                    if v[[ni as usize, nj]] > val {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                peaks.push((i, j, val));
            }
        }
    }
    peaks.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut kept: Vec<(usize, usize)> = Vec::new();
    let dedupe = 0.5 * r_min;
    for (i, j, _) in peaks {
        let p = spec.node(i, j);
        let dominated = kept.iter().any(|(ki, kj)| {
            let q = spec.node(*ki, *kj);
            let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0);
            dot.acos() < dedupe
        });
        if !dominated {
            kept.push((i, j));
            if kept.len() >= 8 {
                break;
            }
        }
    }
    kept
}

/// (ω⁻¹ ∫_{cap(Q, r)} w dμ)^{1/2} through the spectral pairing.
fn cap_mass(w: &SpectralField, q: &SpherePoint, r: f64, omega: f64) -> f64 {
    let l_max = w.l_max();
    let c = r.cos();
    let mut p = vec![0.0; l_max + 2];
    legendre_p_all(c, l_max + 1, &mut p);

    let [x, y, z] = q.coords();
    let s = x.hypot(y);
    let phi = if s > 0.0 { y.atan2(x) } else { 0.0 };
    let sums = degree_sums(w, z, s, phi);

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut integral = two_pi * (1.0 - c) * sums[0];
    for l in 1..=l_max {
        let mu = two_pi * (p[l - 1] - p[l + 1]) / (2 * l + 1) as f64;
        integral += mu * sums[l];
    }
    (integral / omega).max(0.0).sqrt()
}

/// Runs the flow from u0 under the prescribed function f.
///
/// Adaptive loop: steps are capped by the CFL rule, rejected (dt halved) on
/// positivity loss or an E_f increase beyond tolerance, and dt grows by
/// 1.25× after ten consecutive accepts. The run ends Converged (residual
/// below tolerance with an E_f plateau), Concentrated (cap-mass flag at two
/// consecutive checks), MaxTimeReached, or Aborted.
pub fn run(u0: &GridField, f: &GridField, cfg: &FlowConfig) -> Result<RunResult> {
    cfg.validate()?;
    if !u0.spec().same_layout(f.spec()) {
        return Err(Error::ShapeMismatch(
            "initial data and prescribed function live on different grids".into(),
        ));
    }
    if u0.spec().l_max() != cfg.l_max {
        return Err(Error::ShapeMismatch(format!(
            "config band limit {} does not match the grid band limit {}",
            cfg.l_max,
            u0.spec().l_max()
        )));
    }

    let mut state = FlowState::new(0, 0.0, u0.clone(), f)?;
    let vol0 = state.report.volume;
    let mut trajectory: Trajectory = Vec::new();
    let mut snapshots: Vec<(usize, GridField)> = Vec::new();

    let detect = detect_concentration(&state, f, cfg)?;
    let mut flagged_prev = detect.flagged;
    trajectory.push(make_row(&state, 0.0, detect.max_cap_mass(), cfg));
    snapshots.push((0, state.u.clone()));

    if state.report.residual_sup < cfg.residual_tol {
        let outcome = Outcome::Converged {
            u_inf: state.u.clone(),
            alpha_inf: state.report.alpha,
        };
        return Ok(RunResult {
            trajectory,
            snapshots,
            outcome,
        });
    }
    if flagged_prev {
        // initial data already past the concentration threshold: report it
        // rather than evolving an under-resolved state
        let outcome = Outcome::Concentrated(detect);
        return Ok(RunResult {
            trajectory,
            snapshots,
            outcome,
        });
    }

    let mut dt = cfg.dt_init;
    let mut consecutive_accepts = 0usize;

    let outcome = loop {
        if state.t >= cfg.t_max {
            break Outcome::MaxTimeReached(Box::new(state.clone()));
        }
        let cap = cfl_cap(&state.u, cfg);
        let remaining = cfg.t_max - state.t;
        let dt_try = dt.min(cap).min(remaining);
        if dt_try < cfg.dt_min && remaining > cfg.dt_min {
            break Outcome::Aborted {
                reason: format!("CFL cap {dt_try:.3e} fell below dt_min {:.3e}", cfg.dt_min),
            };
        }

        let candidate = match step(&state, f, dt_try, cfg)? {
            StepResult::Accepted(s) => s,
            StepResult::Rejected { min_u } => {
                dt = 0.5 * dt_try;
                consecutive_accepts = 0;
                if dt < cfg.dt_min {
                    break Outcome::Aborted {
                        reason: format!(
                            "positivity floor {:.1e} violated (min u = {min_u:.3e}) and dt \
                             cannot be reduced further",
                            cfg.u_floor
                        ),
                    };
                }
                continue;
            }
        };

        if candidate.report.e_f > state.report.e_f + cfg.ef_violation_tol {
            dt = 0.5 * dt_try;
            consecutive_accepts = 0;
            if dt < cfg.dt_min {
                break Outcome::Aborted {
                    reason: format!(
                        "normalized energy rose by {:.3e} in one step and dt cannot be \
                         reduced further",
                        candidate.report.e_f - state.report.e_f
                    ),
                };
            }
            continue;
        }

        state = *candidate;
        consecutive_accepts += 1;
        if consecutive_accepts >= 10 {
            dt = (dt * 1.25).min(cfg.dt_max);
            consecutive_accepts = 0;
        }

        let detect = detect_concentration(&state, f, cfg)?;
        trajectory.push(make_row(&state, dt_try, detect.max_cap_mass(), cfg));
        if state.step_index % cfg.snapshot_every == 0 {
            snapshots.push((state.step_index, state.u.clone()));
        }

        let drift = ((state.report.volume - vol0) / vol0).abs();
        if drift > cfg.vol_drift_tol {
            break Outcome::Aborted {
                reason: format!(
                    "conformal volume drifted by {drift:.3e} (tolerance {:.1e})",
                    cfg.vol_drift_tol
                ),
            };
        }

        if detect.flagged && flagged_prev {
            break Outcome::Concentrated(detect);
        }
        flagged_prev = detect.flagged;

        if convergence_check(&state, &trajectory, cfg) {
            break Outcome::Converged {
                u_inf: state.u.clone(),
                alpha_inf: state.report.alpha,
            };
        }
    };

    if snapshots.last().map(|(s, _)| *s) != Some(state.step_index) {
        snapshots.push((state.step_index, state.u.clone()));
    }

    Ok(RunResult {
        trajectory,
        snapshots,
        outcome,
    })
}

fn make_row(state: &FlowState, dt: f64, max_cap_mass: f64, cfg: &FlowConfig) -> TrajectoryRow {
    let defect = cfg
        .symmetry
        .as_ref()
        .map(|a| symmetry_defect(&state.u, a))
        .unwrap_or(0.0);
    TrajectoryRow {
        step: state.step_index,
        t: state.t,
        dt,
        alpha: state.report.alpha,
        e: state.report.e,
        e_f: state.report.e_f,
        volume: state.report.volume,
        u_min: state.u.min_value(),
        u_max: state.u.max_value(),
        residual_sup: state.report.residual_sup,
        residual_l2: state.report.residual_l2,
        max_cap_mass,
        symmetry_defect: defect,
    }
}
