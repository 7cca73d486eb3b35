//! The Dirichlet-to-Neumann operator of the harmonic extension into the
//! ball, the boundary mean-curvature operator, and the scalar functionals
//! that drive the flow.
//!
//! The harmonic extension of a degree-l spherical harmonic is r^l Y_{l,m},
//! so the outward normal derivative at the boundary multiplies each degree
//! by l: the DtN map is diagonal in the spectral basis. With boundary
//! dimension n the conformal metric is g = u^{4/(n-1)} g₀ and
//!
//!   H_g = u^{-(n+1)/(n-1)} (2/(n-1) ∂u/∂ν + u),
//!   E[u] = ⨏ (2/(n-1) ∂u/∂ν + u) u dμ = ⨏ H_g u^{2n/(n-1)} dμ,
//!   E_f[u] = E[u] / (⨏ f u^{2n/(n-1)} dμ)^{(n-1)/n}.
//!
//! Only n = 2 is wired to grids; the exponents stay parametric so the
//! formulas read like the general case. All pointwise nonlinear
//! combinations happen in nodal space on the oversampled grid; results are
//! re-projected to the band limit only where a spectral object is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BallPoint;
use crate::spharm::{analyze, average, degree_sums, synthesize, GridField, SpectralField};

/// Positivity guard for negative powers of the conformal factor. Falling
/// below this signals loss of the flow's uniform lower bound, and the
/// operators fail rather than amplify roundoff into huge curvatures.
pub const POSITIVITY_GUARD: f64 = 1e-10;

/// Boundary dimension and the conformal exponents derived from it.
/// Only n = 2 is accepted; grids are two-dimensional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    n: u32,
}

impl Dimension {
    pub fn new(n: u32) -> Result<Self> {
        if n != 2 {
            return Err(Error::Domain(format!(
                "only boundary dimension n = 2 is implemented, got {n}"
            )));
        }
        Ok(Dimension { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// p_H = (n+1)/(n-1), the curvature power of u.
    pub fn curvature_exponent(&self) -> f64 {
        (self.n as f64 + 1.0) / (self.n as f64 - 1.0)
    }

    /// p_V = 2n/(n-1), the conformal volume power of u.
    pub fn volume_exponent(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 1.0)
    }

    /// c_N = 2/(n-1), the Neumann-term coefficient.
    pub fn neumann_coeff(&self) -> f64 {
        2.0 / (self.n as f64 - 1.0)
    }

    /// c_F = (n-1)/4, the flow speed factor.
    pub fn flow_coeff(&self) -> f64 {
        (self.n as f64 - 1.0) / 4.0
    }

    /// e_E = (n-1)/n, the normalization exponent of E_f.
    pub fn energy_exponent(&self) -> f64 {
        (self.n as f64 - 1.0) / self.n as f64
    }
}

impl Default for Dimension {
    fn default() -> Self {
        Dimension { n: 2 }
    }
}

/// Scalar diagnostics of one conformal factor against a prescribed function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_f")]
    pub e_f: f64,
    pub alpha: f64,
    pub volume: f64,
    pub f_volume: f64,
    pub residual_sup: f64,
    #[serde(rename = "residual_L2")]
    pub residual_l2: f64,
}

/// Dirichlet-to-Neumann map: a_{l,m} -> l a_{l,m}.
pub fn dtn(c: &SpectralField) -> SpectralField {
    c.map_by_degree(|l| l as f64)
}

/// Evaluates the harmonic extension Σ a_{l,m} |p|^l Y_{l,m}(p/|p|) at an
/// interior point; the value at the origin is the mean a_{0,0} (4π)^{-1/2}.
pub fn harmonic_extend(c: &SpectralField, p: &BallPoint) -> f64 {
    let [x, y, z] = p.coords();
    let r = p.radius();
    if r == 0.0 {
        return c.get(0, 0) / (4.0 * std::f64::consts::PI).sqrt();
    }
    let (dx, dy, dz) = (x / r, y / r, z / r);
    let s = dx.hypot(dy);
    let phi = if s > 0.0 { dy.atan2(dx) } else { 0.0 };
    let sums = degree_sums(c, dz, s, phi);
    let mut rl = 1.0;
    let mut total = 0.0;
    for sum_l in sums {
        total += rl * sum_l;
        rl *= r;
    }
    total
}

fn ensure_positive(u: &GridField, what: &str) -> Result<()> {
    let (i, j) = u.argmin();
    let min = u.values()[[i, j]];
    if min < POSITIVITY_GUARD {
        if what == "u" {
            return Err(Error::PositivityLoss {
                min,
                theta: u.spec().theta_nodes()[i],
                phi: u.spec().phi(j),
            });
        }
        return Err(Error::Domain(format!(
            "{what} must be strictly positive; min {min:.6e} at (theta, phi) = ({:.6}, {:.6})",
            u.spec().theta_nodes()[i],
            u.spec().phi(j)
        )));
    }
    Ok(())
}

/// Nodal outward normal derivative of the harmonic extension,
/// synthesize(dtn(analyze(u))).
pub fn normal_derivative(u: &GridField) -> GridField {
    let c = dtn(&analyze(u));
    synthesize(&c, u.spec()).expect("band limits match by construction")
}

/// Boundary mean curvature of g = u^{4/(n-1)} g₀:
/// H = u^{-p_H} (c_N ∂u/∂ν + u), combined pointwise on the grid.
pub fn mean_curvature(u: &GridField) -> Result<GridField> {
    ensure_positive(u, "u")?;
    let dim = Dimension::default();
    let dn = normal_derivative(u);
    let p_h = dim.curvature_exponent();
    let c_n = dim.neumann_coeff();
    u.zip_with(&dn, |uv, dv| uv.powf(-p_h) * (c_n * dv + uv))
}

/// E[u] = ⨏ (c_N ∂u/∂ν + u) u dμ, the quadratic form of the energy.
pub fn energy(u: &GridField) -> Result<f64> {
    ensure_positive(u, "u")?;
    let dim = Dimension::default();
    let dn = normal_derivative(u);
    let c_n = dim.neumann_coeff();
    let integrand = u.zip_with(&dn, |uv, dv| (c_n * dv + uv) * uv)?;
    Ok(average(&integrand))
}

/// The second form of the energy, ⨏ H_g u^{p_V} dμ. Agrees with [`energy`]
/// to roundoff; kept as an independent computation path.
pub fn energy_curvature_form(u: &GridField) -> Result<f64> {
    let dim = Dimension::default();
    let h = mean_curvature(u)?;
    let p_v = dim.volume_exponent();
    let integrand = h.zip_with(u, |hv, uv| hv * uv.powf(p_v))?;
    Ok(average(&integrand))
}

/// Conformal volume ratio ⨏ u^{p_V} dμ.
pub fn volume(u: &GridField) -> Result<f64> {
    ensure_positive(u, "u")?;
    let p_v = Dimension::default().volume_exponent();
    Ok(average(&u.map(|v| v.powf(p_v))))
}

/// Weighted volume ratio ⨏ f u^{p_V} dμ.
pub fn f_weighted_volume(u: &GridField, f: &GridField) -> Result<f64> {
    ensure_positive(u, "u")?;
    ensure_positive(f, "f")?;
    let p_v = Dimension::default().volume_exponent();
    let integrand = f.zip_with(u, |fv, uv| fv * uv.powf(p_v))?;
    Ok(average(&integrand))
}

/// The volume-preserving multiplier α = ⨏ H u^{p_V} dμ / ⨏ f u^{p_V} dμ.
pub fn alpha(u: &GridField, f: &GridField) -> Result<f64> {
    Ok(energy_curvature_form(u)? / f_weighted_volume(u, f)?)
}

/// Normalized energy E_f[u] = E[u] / (⨏ f u^{p_V} dμ)^{e_E}; scale invariant
/// and nonincreasing along the flow.
pub fn normalized_energy(u: &GridField, f: &GridField) -> Result<f64> {
    let e_e = Dimension::default().energy_exponent();
    Ok(energy(u)? / f_weighted_volume(u, f)?.powf(e_e))
}

/// Right-hand side of the flow: c_F (α f - H_g) u.
pub fn flow_rhs(u: &GridField, f: &GridField) -> Result<GridField> {
    let dim = Dimension::default();
    let h = mean_curvature(u)?;
    ensure_positive(f, "f")?;
    let p_v = dim.volume_exponent();
    let u_pv = u.map(|v| v.powf(p_v));
    let e_b = average(&h.zip_with(&u_pv, |a, b| a * b)?);
    let fv = average(&f.zip_with(&u_pv, |a, b| a * b)?);
    let a = e_b / fv;
    let c_f = dim.flow_coeff();
    let af = f.map(|v| a * v);
    let speed = af.zip_with(&h, |x, y| x - y)?;
    speed.zip_with(u, |s, uv| c_f * s * uv)
}

/// Computes every scalar in one pass over shared intermediates.
pub fn energy_report(u: &GridField, f: &GridField) -> Result<EnergyReport> {
    ensure_positive(u, "u")?;
    ensure_positive(f, "f")?;
    let dim = Dimension::default();
    let dn = normal_derivative(u);
    let c_n = dim.neumann_coeff();
    let p_h = dim.curvature_exponent();
    let p_v = dim.volume_exponent();

    let h = u.zip_with(&dn, |uv, dv| uv.powf(-p_h) * (c_n * dv + uv))?;
    let u_pv = u.map(|v| v.powf(p_v));
    let e = average(&u.zip_with(&dn, |uv, dv| (c_n * dv + uv) * uv)?);
    let e_b = average(&h.zip_with(&u_pv, |a, b| a * b)?);
    let vol = average(&u_pv);
    let fv = average(&f.zip_with(&u_pv, |a, b| a * b)?);
    let a = e_b / fv;
    let e_f = e / fv.powf(dim.energy_exponent());

    let residual = f.zip_with(&h, |fv_, hv| a * fv_ - hv)?;
    let residual_sup = residual
        .values()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let residual_l2 = average(&residual.map(|v| v * v)).max(0.0).sqrt();

    Ok(EnergyReport {
        e,
        e_f,
        alpha: a,
        volume: vol,
        f_volume: fv,
        residual_sup,
        residual_l2,
    })
}
