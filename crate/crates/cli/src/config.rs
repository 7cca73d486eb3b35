//! Flat key = value run configuration and the prescribed-function builder.
//!
//! The format is deliberately plain: one `key = value` per line, `#` starts
//! a comment, repeated `f_term` keys accumulate. No nesting, so configs diff
//! cleanly and can be assembled by shell scripts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use mcflow_core::geometry::BubbleParams;
use mcflow_core::spharm::{synthesize, GridField, GridSpec, SpectralField};
use mcflow_core::symmetry::{refine_global_min, symmetrize, symmetry_defect, SymmetryAction};
use mcflow_core::{FlowConfig, SpherePoint};

/// Parsed key/value multi-map preserving the raw text for manifests.
#[derive(Debug, Clone)]
pub struct ConfigMap {
    values: BTreeMap<String, Vec<String>>,
    pub raw: String,
}

impl ConfigMap {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            values
                .entry(key.trim().to_string())
                .or_default()
                .push(value.trim().to_string());
        }
        Ok(ConfigMap {
            values,
            raw: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    fn single(&self, key: &str) -> anyhow::Result<Option<&str>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0].as_str())),
            Some(v) => bail!("key `{key}` given {} times, expected once", v.len()),
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> anyhow::Result<f64> {
        match self.single(key)? {
            None => Ok(default),
            Some(s) => s.parse().with_context(|| format!("bad value for `{key}`: `{s}`")),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> anyhow::Result<usize> {
        match self.single(key)? {
            None => Ok(default),
            Some(s) => s.parse().with_context(|| format!("bad value for `{key}`: `{s}`")),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> anyhow::Result<bool> {
        match self.single(key)? {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => bail!("bad boolean for `{key}`: `{s}`"),
        }
    }

    pub fn get_str(&self, key: &str) -> anyhow::Result<Option<&str>> {
        self.single(key)
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn known_keys_check(&self, allowed: &[&str]) -> anyhow::Result<()> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("unknown config key `{key}`");
            }
        }
        Ok(())
    }
}

/// Prescribed function described as a constant plus real-harmonic terms,
/// optionally symmetrized against the declared action. The synthesized field
/// must be strictly positive; validation refines the grid minimum before
/// accepting.
#[derive(Debug, Clone, Serialize)]
pub struct FSpec {
    pub constant: f64,
    pub terms: Vec<(usize, i64, f64)>,
    pub symmetrize: bool,
}

impl FSpec {
    pub fn from_config(cfg: &ConfigMap) -> anyhow::Result<Self> {
        let constant = cfg.get_f64("f_const", 1.0)?;
        let mut terms = Vec::new();
        for line in cfg.get_all("f_term") {
            terms.push(parse_term(line)?);
        }
        Ok(FSpec {
            constant,
            terms,
            symmetrize: cfg.get_bool("f_symmetrize", false)?,
        })
    }

    pub fn from_parts(constant: f64, term_strings: &[String], symmetrize: bool) -> anyhow::Result<Self> {
        let mut terms = Vec::new();
        for t in term_strings {
            terms.push(parse_term(t)?);
        }
        Ok(FSpec {
            constant,
            terms,
            symmetrize,
        })
    }

    /// Synthesizes f on the grid and validates it: strictly positive
    /// everywhere (grid minimum with local refinement) and, when a symmetry
    /// is declared, defect below 1e-10.
    pub fn build(
        &self,
        spec: &Arc<GridSpec>,
        symmetry: Option<&SymmetryAction>,
    ) -> anyhow::Result<GridField> {
        let l_max = spec.l_max();
        let mut c = SpectralField::zeros(l_max);
        c.set(0, 0, self.constant * (4.0 * std::f64::consts::PI).sqrt());
        for (l, m, coeff) in &self.terms {
            if *l > l_max || m.unsigned_abs() as usize > *l {
                bail!("f term (l={l}, m={m}) outside the band limit {l_max}");
            }
            c.set(*l, *m, c.get(*l, *m) + coeff);
        }
        let mut f = synthesize(&c, spec)?;
        if self.symmetrize {
            let action = symmetry.ok_or_else(|| {
                anyhow!("f_symmetrize = true requires a symmetry declaration")
            })?;
            f = symmetrize(&f, action);
        }

        let coeffs = mcflow_core::spharm::analyze(&f);
        let (min, at) = refine_global_min(&coeffs, &f);
        let grid_min = f.min_value();
        let min = min.min(grid_min);
        if min <= 0.0 {
            let [x, y, z] = at.coords();
            bail!(
                "prescribed function is not positive: minimum {min:.6e} near \
                 ({x:.6}, {y:.6}, {z:.6})"
            );
        }
        if let Some(action) = symmetry {
            let defect = symmetry_defect(&f, action);
            if defect >= 1e-10 {
                bail!(
                    "prescribed function breaks the declared symmetry: defect {defect:.3e} \
                     (>= 1e-10); set f_symmetrize = true or fix the terms"
                );
            }
        }
        Ok(f)
    }
}

fn parse_term(s: &str) -> anyhow::Result<(usize, i64, f64)> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 3 {
        bail!("bad f_term `{s}`: expected `l m coefficient`");
    }
    Ok((
        parts[0].parse().with_context(|| format!("bad degree in `{s}`"))?,
        parts[1].parse().with_context(|| format!("bad order in `{s}`"))?,
        parts[2].parse().with_context(|| format!("bad coefficient in `{s}`"))?,
    ))
}

/// Initial data: a constant, a bubble, or a saved snapshot.
#[derive(Debug, Clone)]
pub enum U0Spec {
    Const(f64),
    Bubble(BubbleParams),
    File(PathBuf),
}

impl U0Spec {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        if let Some(v) = s.strip_prefix("const:") {
            let v: f64 = v.parse().with_context(|| format!("bad constant u0 `{s}`"))?;
            if v <= 0.0 {
                bail!("u0 constant must be positive, got {v}");
            }
            return Ok(U0Spec::Const(v));
        }
        if s.starts_with("bubble:") {
            return Ok(U0Spec::Bubble(s.parse::<BubbleParams>()?));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(U0Spec::File(PathBuf::from(p)));
        }
        bail!("bad u0 `{s}`: expected const:V, bubble:cx,cy,cz,lambda or file:PATH");
    }
}

pub fn parse_symmetry(s: &str) -> anyhow::Result<Option<SymmetryAction>> {
    if s == "none" {
        return Ok(None);
    }
    if let Some(body) = s.strip_prefix("rotation:") {
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            bail!("bad symmetry `{s}`: expected rotation:ax,ay,az,k");
        }
        let axis = SpherePoint::normalized([
            parts[0].parse()?,
            parts[1].parse()?,
            parts[2].parse()?,
        ])?;
        let order: u32 = parts[3].parse().context("bad rotation order")?;
        return Ok(Some(SymmetryAction::rotation(axis, order)?));
    }
    if let Some(body) = s.strip_prefix("reflection:") {
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            bail!("bad symmetry `{s}`: expected reflection:ex,ey,ez");
        }
        let normal = SpherePoint::normalized([
            parts[0].parse()?,
            parts[1].parse()?,
            parts[2].parse()?,
        ])?;
        return Ok(Some(SymmetryAction::reflection(normal)));
    }
    bail!("bad symmetry `{s}`: expected rotation:ax,ay,az,k, reflection:ex,ey,ez or none");
}

/// Everything a run-flow invocation needs.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub flow: FlowConfig,
    pub fspec: FSpec,
    pub u0: U0Spec,
    pub out_dir: PathBuf,
    pub seed: u64,
}

const ALLOWED_KEYS: &[&str] = &[
    "lmax",
    "oversample",
    "u0",
    "f_const",
    "f_term",
    "f_symmetrize",
    "symmetry",
    "t_max",
    "dt_init",
    "dt_min",
    "dt_max",
    "cfl",
    "residual_tol",
    "ef_violation_tol",
    "vol_drift_tol",
    "snapshot_every",
    "concentration_radii",
    "concentration_threshold",
    "u_floor",
    "out_dir",
    "seed",
];

impl RunSettings {
    pub fn from_config(cfg: &ConfigMap, config_path: &Path) -> anyhow::Result<Self> {
        cfg.known_keys_check(ALLOWED_KEYS)?;
        let defaults = FlowConfig::default();

        let symmetry = match cfg.get_str("symmetry")? {
            None => None,
            Some(s) => parse_symmetry(s)?,
        };
        let radii = match cfg.get_str("concentration_radii")? {
            None => defaults.concentration_radii.clone(),
            Some(s) => s
                .split(',')
                .map(|r| r.trim().parse::<f64>().context("bad concentration radius"))
                .collect::<anyhow::Result<Vec<f64>>>()?,
        };

        let flow = FlowConfig {
            l_max: cfg.get_usize("lmax", defaults.l_max)?,
            oversample: cfg.get_f64("oversample", defaults.oversample)?,
            dt_init: cfg.get_f64("dt_init", defaults.dt_init)?,
            dt_min: cfg.get_f64("dt_min", defaults.dt_min)?,
            dt_max: cfg.get_f64("dt_max", defaults.dt_max)?,
            cfl: cfg.get_f64("cfl", defaults.cfl)?,
            t_max: cfg.get_f64("t_max", defaults.t_max)?,
            residual_tol: cfg.get_f64("residual_tol", defaults.residual_tol)?,
            ef_violation_tol: cfg.get_f64("ef_violation_tol", defaults.ef_violation_tol)?,
            vol_drift_tol: cfg.get_f64("vol_drift_tol", defaults.vol_drift_tol)?,
            snapshot_every: cfg.get_usize("snapshot_every", defaults.snapshot_every)?,
            concentration_radii: radii,
            concentration_threshold: cfg
                .get_f64("concentration_threshold", defaults.concentration_threshold)?,
            u_floor: cfg.get_f64("u_floor", defaults.u_floor)?,
            symmetry,
        };
        flow.validate()?;

        let u0 = U0Spec::parse(cfg.get_str("u0")?.unwrap_or("const:1.0"))?;
        let fspec = FSpec::from_config(cfg)?;
        let out_dir = match cfg.get_str("out_dir")? {
            Some(d) => PathBuf::from(d),
            None => {
                let stem = config_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "run".to_string());
                PathBuf::from("runs").join(stem)
            }
        };
        let seed = cfg.get_usize("seed", 42)? as u64;

        Ok(RunSettings {
            flow,
            fspec,
            u0,
            out_dir,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys_and_comments() {
        let text = "# run\nlmax = 24\nf_const = 1.0\nf_term = 2 0 -0.5\nf_term = 2,2,0.1\n";
        let cfg = ConfigMap::parse(text).unwrap();
        assert_eq!(cfg.get_usize("lmax", 64).unwrap(), 24);
        assert_eq!(cfg.get_all("f_term").len(), 2);
        let fspec = FSpec::from_config(&cfg).unwrap();
        assert_eq!(fspec.terms, vec![(2, 0, -0.5), (2, 2, 0.1)]);
    }

    #[test]
    fn rejects_unknown_keys_and_duplicates() {
        let cfg = ConfigMap::parse("nope = 1\n").unwrap();
        assert!(cfg.known_keys_check(ALLOWED_KEYS).is_err());
        let cfg = ConfigMap::parse("lmax = 1\nlmax = 2\n").unwrap();
        assert!(cfg.get_usize("lmax", 64).is_err());
    }

    #[test]
    fn u0_forms() {
        assert!(matches!(U0Spec::parse("const:1.0").unwrap(), U0Spec::Const(_)));
        assert!(matches!(
            U0Spec::parse("bubble:0,0,1,0.5").unwrap(),
            U0Spec::Bubble(_)
        ));
        assert!(matches!(
            U0Spec::parse("file:some/path.sphfield").unwrap(),
            U0Spec::File(_)
        ));
        assert!(U0Spec::parse("const:-1").is_err());
        assert!(U0Spec::parse("bubble:0,0,1,0").is_err());
        assert!(U0Spec::parse("garbage").is_err());
    }

    #[test]
    fn symmetry_forms() {
        assert!(parse_symmetry("none").unwrap().is_none());
        let rot = parse_symmetry("rotation:0,0,1,2").unwrap().unwrap();
        assert!(matches!(rot, SymmetryAction::Rotation { order: 2, .. }));
        let refl = parse_symmetry("reflection:1,0,0").unwrap().unwrap();
        assert!(matches!(refl, SymmetryAction::Reflection { .. }));
        assert!(parse_symmetry("rotation:0,0,1").is_err());
        assert!(parse_symmetry("rotation:0,0,1,1").is_err());
    }

    #[test]
    fn fspec_positivity_gate() {
        let spec = GridSpec::build(16, 2.0).unwrap();
        let good = FSpec {
            constant: 1.0,
            terms: vec![(2, 0, -0.2)],
            symmetrize: false,
        };
        assert!(good.build(&spec, None).is_ok());

        let bad = FSpec {
            constant: 0.1,
            terms: vec![(1, 0, 1.0)],
            symmetrize: false,
        };
        let err = bad.build(&spec, None).unwrap_err().to_string();
        assert!(err.contains("not positive"), "{err}");
        assert!(err.contains("minimum"), "{err}");
    }

    #[test]
    fn fspec_symmetry_gate() {
        let spec = GridSpec::build(12, 2.0).unwrap();
        let rot = SymmetryAction::rotation(SpherePoint::north(), 2).unwrap();
        let asym = FSpec {
            constant: 1.0,
            terms: vec![(1, 1, 0.2)],
            symmetrize: false,
        };
        assert!(asym.build(&spec, Some(&rot)).is_err());

        // group averaging kills the m = 1 harmonic entirely
        let symmetrized = FSpec {
            symmetrize: true,
            ..asym
        };
        let f = symmetrized.build(&spec, Some(&rot));
        assert!(f.is_ok(), "{:?}", f.err());
    }
}
