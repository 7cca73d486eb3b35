//! Grids, quadrature, and spherical-harmonic transforms on the unit sphere.
//!
//! Fields live on a Gauss-Legendre × equispaced-longitude grid (no node at
//! either pole). The spectral basis is real orthonormal spherical harmonics
//! without the Condon-Shortley phase:
//!
//! * Y_{l,0} = q_{l,0},
//! * Y_{l,m} = √2 q_{l,m} cos(mφ) and Y_{l,-m} = √2 q_{l,m} sin(mφ) for m > 0,
//!
//! with ∫_{S²} Y_{l,m}² dμ = 1 and Y_{0,0} = (4π)^{-1/2}. Coefficients are
//! stored l-major, m running -l..=l inside each degree. Transforms are the
//! naive O(L³) quadrature sums, parallelized over latitude rows.

pub mod legendre;

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::symmetry::SymmetryAction;
use legendre::{gauss_legendre, legendre_column, tri, tri_len};

/// Hard cap on the band limit; transforms are O(L³) and the Legendre tables
/// O(L²) per row, so desk-scale work stays well below this.
pub const L_MAX_CAP: usize = 512;

/// Grid geometry and cached quadrature/trigonometric tables.
///
/// Invariants: `n_theta >= l_max + 1`, `n_phi >= 2 l_max + 1` and even,
/// colatitudes strictly inside (0, π), and the product rule integrates the
/// constant 1 to 4π within 1e-12 relative.
#[derive(Debug)]
pub struct GridSpec {
    l_max: usize,
    n_theta: usize,
    n_phi: usize,
    oversample: f64,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    weights: Vec<f64>,
    omega: f64,
    cos_m_phi: Array2<f64>,
    sin_m_phi: Array2<f64>,
}

impl GridSpec {
    /// Builds the default grid for band limit `l_max`:
    /// `n_theta = ceil(oversample (l_max+1))` Gauss nodes and the smallest
    /// even `n_phi >= ceil(oversample (2 l_max + 1))` longitudes.
    pub fn build(l_max: usize, oversample: f64) -> Result<Arc<Self>> {
        Self::build_with_hint(l_max, oversample, None)
    }

    /// Like [`GridSpec::build`], but rounds `n_phi` up so that the grid is
    /// closed under `hint` when the action admits an exact permutation
    /// (rotations about the x₃-axis need `n_phi ≡ 0 mod 2k`).
    pub fn build_with_hint(
        l_max: usize,
        oversample: f64,
        hint: Option<&SymmetryAction>,
    ) -> Result<Arc<Self>> {
        if oversample < 1.0 || !oversample.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "oversample must be >= 1, got {oversample}"
            )));
        }
        let n_theta = (oversample * (l_max + 1) as f64).ceil() as usize;
        let mut n_phi = (oversample * (2 * l_max + 1) as f64).ceil() as usize;
        if n_phi % 2 == 1 {
            n_phi += 1;
        }
        if let Some(SymmetryAction::Rotation { order, .. }) = hint {
            let period = 2 * *order as usize;
            n_phi = n_phi.div_ceil(period) * period;
        }
        Self::from_counts_with_oversample(l_max, n_theta, n_phi, oversample)
    }

    /// Reconstructs a grid from explicit node counts (e.g. a field file
    /// header). Nodes and weights are recomputed deterministically.
    pub fn from_counts(l_max: usize, n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        let oversample = n_theta as f64 / (l_max + 1) as f64;
        Self::from_counts_with_oversample(l_max, n_theta, n_phi, oversample)
    }

    fn from_counts_with_oversample(
        l_max: usize,
        n_theta: usize,
        n_phi: usize,
        oversample: f64,
    ) -> Result<Arc<Self>> {
        if l_max > L_MAX_CAP {
            return Err(Error::Resource(format!(
                "band limit {l_max} exceeds the implementation cap {L_MAX_CAP}"
            )));
        }
        if n_theta < l_max + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_theta = {n_theta} < l_max + 1 = {}",
                l_max + 1
            )));
        }
        if n_phi < 2 * l_max + 1 || n_phi % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "n_phi = {n_phi} must be even and >= 2 l_max + 1 = {}",
                2 * l_max + 1
            )));
        }
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|xi| xi.acos()).collect();
        let sin_theta: Vec<f64> = x.iter().map(|xi| (1.0 - xi * xi).sqrt()).collect();
        let omega: f64 = w.iter().sum::<f64>() * 2.0 * PI;

        let mut cos_m_phi = Array2::zeros((l_max + 1, n_phi));
        let mut sin_m_phi = Array2::zeros((l_max + 1, n_phi));
        for m in 0..=l_max {
            for j in 0..n_phi {
                // reduce m*j mod n_phi before the trig call so equal angles
                // give bit-equal table entries
                let arg = 2.0 * PI * ((m * j) % n_phi) as f64 / n_phi as f64;
                cos_m_phi[[m, j]] = arg.cos();
                sin_m_phi[[m, j]] = arg.sin();
            }
        }

        Ok(Arc::new(GridSpec {
            l_max,
            n_theta,
            n_phi,
            oversample,
            theta,
            cos_theta: x,
            sin_theta,
            weights: w,
            omega,
            cos_m_phi,
            sin_m_phi,
        }))
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn oversample(&self) -> f64 {
        self.oversample
    }

    /// Colatitude nodes, strictly increasing in (0, π).
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta
    }

    /// Gauss-Legendre weights in cos θ (sum 2).
    pub fn quad_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    /// Longitude of column `j`.
    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// The measured sphere volume ∫ dμ (equals 4π to quadrature accuracy);
    /// used as the normalization of slashed-integral averages.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Cartesian coordinates of grid node (i, j).
    pub fn node(&self, i: usize, j: usize) -> [f64; 3] {
        let s = self.sin_theta[i];
        let phi = self.phi(j);
        [s * phi.cos(), s * phi.sin(), self.cos_theta[i]]
    }

    /// Whether two grids carry the same discretization.
    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self.l_max == other.l_max && self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }
}

/// A real function sampled on the nodes of a [`GridSpec`].
#[derive(Debug, Clone)]
pub struct GridField {
    spec: Arc<GridSpec>,
    values: Array2<f64>,
}

impl GridField {
    /// Wraps raw values, checking the shape and that every value is finite.
    pub fn new(spec: Arc<GridSpec>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (spec.n_theta, spec.n_phi) {
            return Err(Error::ShapeMismatch(format!(
                "field shape {:?} does not match grid ({}, {})",
                values.dim(),
                spec.n_theta,
                spec.n_phi
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("non-finite value in grid field".into()));
        }
        Ok(GridField { spec, values })
    }

    pub(crate) fn from_parts_unchecked(spec: Arc<GridSpec>, values: Array2<f64>) -> Self {
        GridField { spec, values }
    }

    pub fn constant(spec: &Arc<GridSpec>, value: f64) -> Self {
        GridField {
            spec: Arc::clone(spec),
            values: Array2::from_elem((spec.n_theta, spec.n_phi), value),
        }
    }

    /// Samples `f(x, y, z)` at every grid node.
    pub fn from_fn(spec: &Arc<GridSpec>, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let mut values = Array2::zeros((spec.n_theta, spec.n_phi));
        for i in 0..spec.n_theta {
            let s = spec.sin_theta[i];
            let z = spec.cos_theta[i];
            for j in 0..spec.n_phi {
                let phi = spec.phi(j);
                values[[i, j]] = f([s * phi.cos(), s * phi.sin(), z]);
            }
        }
        GridField {
            spec: Arc::clone(spec),
            values,
        }
    }

    pub fn spec(&self) -> &Arc<GridSpec> {
        &self.spec
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid location of the minimum value.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut min = f64::INFINITY;
        for ((i, j), v) in self.values.indexed_iter() {
            if *v < min {
                min = *v;
                best = (i, j);
            }
        }
        best
    }

    /// Grid location of the maximum value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut max = f64::NEG_INFINITY;
        for ((i, j), v) in self.values.indexed_iter() {
            if *v > max {
                max = *v;
                best = (i, j);
            }
        }
        best
    }

    /// Pointwise map, same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> GridField {
        GridField {
            spec: Arc::clone(&self.spec),
            values: self.values.map(|v| f(*v)),
        }
    }

    /// Pointwise combination of two fields on the same grid layout.
    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        if !self.spec.same_layout(&other.spec) {
            return Err(Error::ShapeMismatch(
                "fields live on different grids".into(),
            ));
        }
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        Ok(GridField {
            spec: Arc::clone(&self.spec),
            values,
        })
    }

    pub fn sup_distance(&self, other: &GridField) -> Result<f64> {
        if !self.spec.same_layout(&other.spec) {
            return Err(Error::ShapeMismatch(
                "fields live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Spherical-harmonic coefficients up to a band limit.
///
/// Layout: degree l occupies the slice `[l², (l+1)²)`, with order m = -l..=l
/// mapped to offset l + m. Negative m indexes the sine harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    l_max: usize,
    coeffs: Vec<f64>,
}

#[inline]
fn sh_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    l * l + (l as i64 + m) as usize
}

impl SpectralField {
    pub fn zeros(l_max: usize) -> Self {
        SpectralField {
            l_max,
            coeffs: vec![0.0; (l_max + 1) * (l_max + 1)],
        }
    }

    /// A single unit coefficient at (l, m).
    pub fn unit(l_max: usize, l: usize, m: i64) -> Self {
        let mut c = Self::zeros(l_max);
        c.set(l, m, 1.0);
        c
    }

    pub fn from_coeffs(l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != (l_max + 1) * (l_max + 1) {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for l_max {l_max}, got {}",
                (l_max + 1) * (l_max + 1),
                coeffs.len()
            )));
        }
        Ok(SpectralField { l_max, coeffs })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[sh_index(l, m)] = value;
    }

    /// Rescales every degree-l coefficient by `factor(l)`; the form taken by
    /// all the diagonal operators (Laplace-Beltrami, Dirichlet-to-Neumann).
    pub fn map_by_degree(&self, factor: impl Fn(usize) -> f64) -> SpectralField {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            let f = factor(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= f;
            }
        }
        out
    }

    /// Sum of squared coefficients (equals ∫ g² dμ for band-limited g).
    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Forward transform: coefficients a_{l,m} = ∫ g Y_{l,m} dμ by grid
/// quadrature, truncated at the grid's band limit.
pub fn analyze(g: &GridField) -> SpectralField {
    let spec = g.spec();
    let l_max = spec.l_max;
    let ncoef = (l_max + 1) * (l_max + 1);
    let phi_scale = 2.0 * PI / spec.n_phi as f64;
    let sqrt2 = std::f64::consts::SQRT_2;

    let coeffs = (0..spec.n_theta)
        .into_par_iter()
        .fold(
            || (vec![0.0; ncoef], vec![0.0; tri_len(l_max)]),
            |(mut acc, mut q), i| {
                legendre_column(spec.cos_theta[i], spec.sin_theta[i], l_max, &mut q);
                let row = g.values.row(i);
                let wi = spec.weights[i];
                for m in 0..=l_max {
                    let cos_row = spec.cos_m_phi.row(m);
                    let sin_row = spec.sin_m_phi.row(m);
                    let mut gc = 0.0;
                    let mut gs = 0.0;
                    for j in 0..spec.n_phi {
                        gc += row[j] * cos_row[j];
                        gs += row[j] * sin_row[j];
                    }
                    let fac = if m == 0 { 1.0 } else { sqrt2 };
                    let wc = wi * phi_scale * fac * gc;
                    let ws = wi * phi_scale * fac * gs;
                    for l in m..=l_max {
                        let qlm = q[tri(l, m)];
                        acc[sh_index(l, m as i64)] += wc * qlm;
                        if m > 0 {
                            acc[sh_index(l, -(m as i64))] += ws * qlm;
                        }
                    }
                }
                (acc, q)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0.0; ncoef],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    SpectralField { l_max, coeffs }
}

/// Inverse transform: pointwise sum Σ a_{l,m} Y_{l,m} at the grid nodes.
/// Requires `spec.l_max >= c.l_max`.
pub fn synthesize(c: &SpectralField, spec: &Arc<GridSpec>) -> Result<GridField> {
    if spec.l_max < c.l_max {
        return Err(Error::ShapeMismatch(format!(
            "grid band limit {} below field band limit {}",
            spec.l_max, c.l_max
        )));
    }
    let l_max = c.l_max;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut values = Array2::zeros((spec.n_theta, spec.n_phi));

    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let mut q = vec![0.0; tri_len(l_max)];
            legendre_column(spec.cos_theta[i], spec.sin_theta[i], l_max, &mut q);
            for m in 0..=l_max {
                let fac = if m == 0 { 1.0 } else { sqrt2 };
                let mut sc = 0.0;
                let mut ss = 0.0;
                for l in m..=l_max {
                    let qlm = q[tri(l, m)];
                    sc += c.coeffs[sh_index(l, m as i64)] * qlm;
                    if m > 0 {
                        ss += c.coeffs[sh_index(l, -(m as i64))] * qlm;
                    }
                }
                sc *= fac;
                ss *= fac;
                let cos_row = spec.cos_m_phi.row(m);
                let sin_row = spec.sin_m_phi.row(m);
                if m == 0 {
                    for j in 0..spec.n_phi {
                        row[j] += sc * cos_row[j];
                    }
                } else {
                    for j in 0..spec.n_phi {
                        row[j] += sc * cos_row[j] + ss * sin_row[j];
                    }
                }
            }
        });

    Ok(GridField {
        spec: Arc::clone(spec),
        values,
    })
}

/// ∫_{S²} g dμ by the Gauss-Legendre × trapezoid product rule.
pub fn integrate(g: &GridField) -> f64 {
    let spec = g.spec();
    let phi_scale = 2.0 * PI / spec.n_phi as f64;
    let mut total = 0.0;
    for (i, row) in g.values.axis_iter(Axis(0)).enumerate() {
        total += spec.weights[i] * row.sum();
    }
    total * phi_scale
}

/// The slashed-integral average ⨏ g dμ = ∫ g dμ / ω.
pub fn average(g: &GridField) -> f64 {
    integrate(g) / g.spec().omega()
}

/// Laplace-Beltrami operator: a_{l,m} -> -l(l+1) a_{l,m}
/// (analyst's sign, nonpositive spectrum).
pub fn laplace_beltrami(c: &SpectralField) -> SpectralField {
    c.map_by_degree(|l| -((l * (l + 1)) as f64))
}

/// Per-degree partial sums Σ_m a_{l,m} Y_{l,m}(p) at an arbitrary direction
/// given by (cos θ, sin θ, φ). Shared by point evaluation, the harmonic
/// extension, and the cap-mass pairing.
pub(crate) fn degree_sums(c: &SpectralField, cos_t: f64, sin_t: f64, phi: f64) -> Vec<f64> {
    let l_max = c.l_max;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut q = vec![0.0; tri_len(l_max)];
    legendre_column(cos_t, sin_t, l_max, &mut q);
    let (mut cos_m, mut sin_m) = (1.0, 0.0);
    let (cp, sp) = (phi.cos(), phi.sin());
    let mut sums = vec![0.0; l_max + 1];
    for m in 0..=l_max {
        let fac = if m == 0 { 1.0 } else { sqrt2 };
        for l in m..=l_max {
            let qlm = q[tri(l, m)];
            let mut term = c.coeffs[sh_index(l, m as i64)] * cos_m;
            if m > 0 {
                term += c.coeffs[sh_index(l, -(m as i64))] * sin_m;
            }
            sums[l] += fac * qlm * term;
        }
        let next_cos = cos_m * cp - sin_m * sp;
        let next_sin = sin_m * cp + cos_m * sp;
        cos_m = next_cos;
        sin_m = next_sin;
    }
    sums
}

/// Evaluates Σ a_{l,m} Y_{l,m} at an arbitrary point of the sphere.
pub fn eval_at_point(c: &SpectralField, p: &SpherePoint) -> f64 {
    let [x, y, z] = p.coords();
    let s = x.hypot(y);
    let phi = if s > 0.0 { y.atan2(x) } else { 0.0 };
    degree_sums(c, z, s, phi).iter().sum()
}

/// Norm of the intrinsic surface gradient at a point, evaluated spectrally:
/// |∇g|² = (∂_θ g)² + ((1/sin θ) ∂_φ g)². At the poles only the m = ±1
/// harmonics contribute to the azimuthal part and the analytic limit of
/// q_{l,1}/sin θ is used.
pub fn surface_gradient_norm(c: &SpectralField, p: &SpherePoint) -> f64 {
    let l_max = c.l_max;
    let sqrt2 = std::f64::consts::SQRT_2;
    let [x, y, z] = p.coords();
    let s = x.hypot(y);
    let phi = if s > 0.0 { y.atan2(x) } else { 0.0 };

    let mut q = vec![0.0; tri_len(l_max)];
    legendre_column(z, s, l_max, &mut q);
    let mut dq = vec![0.0; tri_len(l_max)];
    legendre::legendre_column_dtheta(&q, l_max, &mut dq);

    let mut d_theta = 0.0;
    let mut d_phi = 0.0;
    let (cp, sp) = (phi.cos(), phi.sin());
    let (mut cos_m, mut sin_m) = (1.0, 0.0);
    for m in 0..=l_max {
        let fac = if m == 0 { 1.0 } else { sqrt2 };
        for l in m..=l_max {
            let ac = c.coeffs[sh_index(l, m as i64)];
            let as_ = if m > 0 {
                c.coeffs[sh_index(l, -(m as i64))]
            } else {
                0.0
            };
            d_theta += fac * (ac * cos_m + as_ * sin_m) * dq[tri(l, m)];
            if m > 0 {
                let angular = m as f64 * (-ac * sin_m + as_ * cos_m);
                if s > 1e-9 {
                    d_phi += fac * angular * q[tri(l, m)] / s;
                } else if m == 1 {
                    // q_{l,1}/sin θ -> ± sqrt((2l+1) l (l+1) / 4π) / 2 at the poles
                    let lf = l as f64;
                    let mut limit = 0.5
                        * ((2.0 * lf + 1.0) * lf * (lf + 1.0) / (4.0 * PI)).sqrt();
                    if z < 0.0 && l % 2 == 0 {
                        limit = -limit;
                    }
                    d_phi += fac * angular * limit;
                }
            }
        }
        let next_cos = cos_m * cp - sin_m * sp;
        let next_sin = sin_m * cp + cos_m * sp;
        cos_m = next_cos;
        sin_m = next_sin;
    }
    d_theta.hypot(d_phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use legendre::legendre_p_all;

    fn field_from_p6(spec: &Arc<GridSpec>) -> GridField {
        GridField::from_fn(spec, |p| {
            let mut pl = vec![0.0; 7];
            legendre_p_all(p[2], 6, &mut pl);
            pl[6]
        })
    }

    #[test]
    fn degree_zero_grid_is_single_gauss_node() {
        let spec = GridSpec::build(0, 1.0).unwrap();
        assert_eq!(spec.n_theta(), 1);
        assert_eq!(spec.n_phi(), 2);
        assert_abs_diff_eq!(spec.theta_nodes()[0], PI / 2.0, epsilon = 1e-15);
        let one = GridField::constant(&spec, 1.0);
        assert_abs_diff_eq!(integrate(&one), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn default_grid_counts_follow_the_formula() {
        let spec = GridSpec::build(32, 2.0).unwrap();
        assert_eq!(spec.n_theta(), 66);
        assert!(spec.n_phi() >= 130 && spec.n_phi() % 2 == 0);
        assert!(spec.theta_nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(spec
            .theta_nodes()
            .iter()
            .all(|t| *t > 0.0 && *t < PI));
        assert!(spec.quad_weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn band_limit_cap_is_a_resource_error() {
        match GridSpec::build(L_MAX_CAP + 1, 1.0) {
            Err(Error::Resource(_)) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn quadrature_of_legendre_p6_vanishes() {
        for l_max in [6usize, 17, 64] {
            let spec = GridSpec::build(l_max, 1.0).unwrap();
            let g = field_from_p6(&spec);
            assert_abs_diff_eq!(integrate(&g), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn integrate_monomials() {
        let spec = GridSpec::build(8, 2.0).unwrap();
        let z = GridField::from_fn(&spec, |p| p[2]);
        let z2 = GridField::from_fn(&spec, |p| p[2] * p[2]);
        assert_abs_diff_eq!(integrate(&z), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(integrate(&z2), 4.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn analyze_constant_hits_only_the_mean() {
        let spec = GridSpec::build(12, 2.0).unwrap();
        let c = analyze(&GridField::constant(&spec, 1.0));
        assert_abs_diff_eq!(c.get(0, 0), (4.0 * PI).sqrt(), epsilon = 1e-12);
        for l in 1..=12usize {
            for m in -(l as i64)..=(l as i64) {
                assert_abs_diff_eq!(c.get(l, m), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analyze_picks_out_a_sampled_harmonic() {
        let spec = GridSpec::build(8, 2.0).unwrap();
        let y21 = synthesize(&SpectralField::unit(8, 2, 1), &spec).unwrap();
        let c = analyze(&y21);
        for l in 0..=8usize {
            for m in -(l as i64)..=(l as i64) {
                let expect = if (l, m) == (2, 1) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(c.get(l, m), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn synthesize_degree_one_peaks_at_the_pole() {
        let spec = GridSpec::build(16, 2.0).unwrap();
        let g = synthesize(&SpectralField::unit(16, 1, 0), &spec).unwrap();
        // Y_{1,0} = sqrt(3/4π) cos θ: max grid value at the first node
        let expected = (3.0 / (4.0 * PI)).sqrt() * spec.cos_theta()[0];
        assert_abs_diff_eq!(g.values()[[0, 0]], expected, epsilon = 1e-13);
        let zero = synthesize(&SpectralField::zeros(16), &spec).unwrap();
        assert_eq!(zero.max_value(), 0.0);
    }

    #[test]
    fn laplace_beltrami_eigenvalues() {
        let spec = GridSpec::build(6, 2.0).unwrap();
        let c = analyze(&GridField::constant(&spec, 3.0));
        let lap = laplace_beltrami(&c);
        assert_abs_diff_eq!(lap.get(0, 0), 0.0, epsilon = 1e-14);
        for m in [-2i64, 0, 2] {
            let y2m = SpectralField::unit(6, 2, m);
            let lap = laplace_beltrami(&y2m);
            assert_abs_diff_eq!(lap.get(2, m), -6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn laplacian_of_quadratic_zonal_profile_at_the_poles() {
        // f = 4/3 - P₂(x₃)/3 has Δf = 2 P₂, so Δf(±pole) = 2
        let spec = GridSpec::build(16, 2.0).unwrap();
        let f = GridField::from_fn(&spec, |p| 4.0 / 3.0 - 0.5 * (3.0 * p[2] * p[2] - 1.0) / 3.0);
        let lap = laplace_beltrami(&analyze(&f));
        for pole in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            let p = SpherePoint::new(pole).unwrap();
            assert_abs_diff_eq!(eval_at_point(&lap, &p), 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn eval_at_point_matches_grid_nodes() {
        let spec = GridSpec::build(10, 2.0).unwrap();
        let mut c = SpectralField::zeros(10);
        let mut v: f64 = 0.3;
        for l in 0..=10usize {
            for m in -(l as i64)..=(l as i64) {
                v = (v * 1.7 + 0.13).fract() - 0.5;
                c.set(l, m, v);
            }
        }
        let g = synthesize(&c, &spec).unwrap();
        for (i, j) in [(0usize, 0usize), (3, 7), (9, 20), (spec.n_theta() - 1, 1)] {
            let s = (1.0 - spec.cos_theta()[i] * spec.cos_theta()[i]).sqrt();
            let p = SpherePoint::new([
                s * spec.phi(j).cos(),
                s * spec.phi(j).sin(),
                spec.cos_theta()[i],
            ])
            .unwrap();
            assert_abs_diff_eq!(eval_at_point(&c, &p), g.values()[[i, j]], epsilon = 1e-10);
        }
        let north = SpherePoint::new([0.0, 0.0, 1.0]).unwrap();
        let one = analyze(&GridField::constant(&spec, 1.0));
        assert_abs_diff_eq!(eval_at_point(&one, &north), 1.0, epsilon = 1e-12);
        let z = analyze(&GridField::from_fn(&spec, |p| p[2]));
        assert_abs_diff_eq!(eval_at_point(&z, &north), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_point_is_rejected() {
        assert!(SpherePoint::new([0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn symmetry_hint_rounds_longitude_count() {
        let axis = SpherePoint::new([0.0, 0.0, 1.0]).unwrap();
        let hint = SymmetryAction::rotation(axis, 3).unwrap();
        let spec = GridSpec::build_with_hint(16, 2.0, Some(&hint)).unwrap();
        assert_eq!(spec.n_phi() % 6, 0);
    }
}
