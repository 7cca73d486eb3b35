//! Stereographic-type maps between the punctured unit ball and the upper
//! half space, their boundary conformal factor, and the concentrating
//! bubble family used as low-energy initial data.
//!
//! The map Σ sends the ball minus the south pole to {z₃ >= 0}, with the
//! north pole going to the boundary origin and the ball center to (0̄, 2).
//! A half-space solution of the unit-mean-curvature problem pulls back
//! through Σ to the one-parameter family
//!
//!   u_λ(x) = (4λ / (4(1 - ⟨x,c⟩) + λ²(1 + ⟨x,c⟩)))^{(n-1)/2},
//!
//! zonal about its center c, with u_{λ=2} ≡ 1. The family keeps conformal
//! volume and energy equal to 1 for every λ and concentrates at c as λ → 0.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conformal::Dimension;
use crate::error::{Error, Result};
use crate::spharm::{analyze, degree_sums, GridField, GridSpec};

const UNIT_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn inner(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    inner(a, a).sqrt()
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A point of the unit sphere (|x| = 1 within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint([f64; 3]);

impl SpherePoint {
    pub fn new(coords: [f64; 3]) -> Result<Self> {
        let n = norm(coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!(
                "not a unit vector: |({}, {}, {})| = {n}",
                coords[0], coords[1], coords[2]
            )));
        }
        Ok(SpherePoint(coords))
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn normalized(coords: [f64; 3]) -> Result<Self> {
        let n = norm(coords);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        Ok(SpherePoint([coords[0] / n, coords[1] / n, coords[2] / n]))
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn north() -> Self {
        SpherePoint([0.0, 0.0, 1.0])
    }

    pub fn south() -> Self {
        SpherePoint([0.0, 0.0, -1.0])
    }

    pub fn antipode(&self) -> Self {
        SpherePoint([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Geodesic distance on the unit sphere.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        inner(self.0, other.0).clamp(-1.0, 1.0).acos()
    }
}

/// A point of the closed unit ball (|x| <= 1 within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPoint([f64; 3]);

impl BallPoint {
    pub fn new(coords: [f64; 3]) -> Result<Self> {
        let n = norm(coords);
        if !n.is_finite() || n > 1.0 + UNIT_TOL {
            return Err(Error::InvalidArgument(format!(
                "not inside the unit ball: |x| = {n}"
            )));
        }
        Ok(BallPoint(coords))
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn radius(&self) -> f64 {
        norm(self.0)
    }
}

impl From<SpherePoint> for BallPoint {
    fn from(p: SpherePoint) -> Self {
        BallPoint(p.0)
    }
}

/// A point of the closed upper half space: transverse part z̄ and height z₃ >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub z: [f64; 2],
    pub height: f64,
}

impl HalfSpacePoint {
    pub fn new(z: [f64; 2], height: f64) -> Result<Self> {
        if !(z[0].is_finite() && z[1].is_finite() && height.is_finite()) || height < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "half-space point needs finite coordinates and height >= 0, got height {height}"
            )));
        }
        Ok(HalfSpacePoint { z, height })
    }
}

/// The conformal equivalence Σ from the ball minus the south pole to the
/// closed upper half space. Rejects points within 1e-12 of the pole.
pub fn sigma(x: &BallPoint) -> Result<HalfSpacePoint> {
    let [x1, x2, x3] = x.coords();
    let bar2 = x1 * x1 + x2 * x2;
    let denom = bar2 + (1.0 + x3) * (1.0 + x3);
    if denom <= UNIT_TOL {
        return Err(Error::Domain(
            "the stereographic map is singular at the south pole".into(),
        ));
    }
    let z = [4.0 * x1 / denom, 4.0 * x2 / denom];
    let height = 2.0 * (1.0 - bar2 - x3 * x3) / denom;
    // boundary points land exactly on the boundary up to roundoff
    HalfSpacePoint::new(z, height.max(0.0))
}

/// Inverse map from the upper half space back into the ball.
pub fn sigma_inv(z: &HalfSpacePoint) -> BallPoint {
    let bar2 = z.z[0] * z.z[0] + z.z[1] * z.z[1];
    let denom = bar2 + (2.0 + z.height) * (2.0 + z.height);
    let p = [
        4.0 * z.z[0] / denom,
        4.0 * z.z[1] / denom,
        (4.0 - z.height * z.height - bar2) / denom,
    ];
    BallPoint(p)
}

/// Boundary trace of the conformal factor of Σ⁻¹: σ(z̄) = (4/(4+|z̄|²))^{(n-1)/2}.
/// The boundary values are related by u = σ⁻¹ · (v ∘ Σ).
pub fn boundary_conformal_factor(z: [f64; 2]) -> f64 {
    let dim = Dimension::default();
    let bar2 = z[0] * z[0] + z[1] * z[1];
    (4.0 / (4.0 + bar2)).powf(0.5 * (dim.n() as f64 - 1.0))
}

/// Center and concentration scale of a bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub center: SpherePoint,
    pub lambda: f64,
}

impl BubbleParams {
    pub fn new(center: SpherePoint, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bubble scale must be positive, got {lambda}"
            )));
        }
        Ok(BubbleParams { center, lambda })
    }
}

impl std::str::FromStr for BubbleParams {
    type Err = Error;

    /// Parses the `bubble:cx,cy,cz,lambda` form used by the CLI and config
    /// files (the `bubble:` tag is optional).
    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_prefix("bubble:").unwrap_or(s);
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!(
                "expected bubble:cx,cy,cz,lambda, got `{s}`"
            )));
        }
        let mut vals = [0.0; 4];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad bubble component `{p}`: {e}")))?;
        }
        let center = SpherePoint::normalized([vals[0], vals[1], vals[2]])?;
        BubbleParams::new(center, vals[3])
    }
}

/// Closed-form bubble profile as a function of t = ⟨x, center⟩.
pub fn bubble_profile(lambda: f64, t: f64) -> f64 {
    let dim = Dimension::default();
    let denom = 4.0 * (1.0 - t) + lambda * lambda * (1.0 + t);
    (4.0 * lambda / denom).powf(0.5 * (dim.n() as f64 - 1.0))
}

/// Samples the bubble u_λ on a grid. The field is zonal about the center and
/// strictly positive for every λ > 0.
pub fn bubble(params: &BubbleParams, spec: &Arc<GridSpec>) -> GridField {
    let c = params.center.coords();
    let lambda = params.lambda;
    GridField::from_fn(spec, |p| bubble_profile(lambda, inner(p, c)))
}

/// A proper rotation of ℝ³ (orthogonal, det +1, validated to 1e-12).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation([[f64; 3]; 3]);

impl Rotation {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        for r in 0..3 {
            for c in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += m[k][r] * m[k][c];
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                if (dot - expect).abs() > UNIT_TOL {
                    return Err(Error::InvalidArgument(
                        "matrix is not orthogonal to 1e-12".into(),
                    ));
                }
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if (det - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix determinant {det} is not +1"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rodrigues rotation about a unit axis.
    pub fn about_axis(axis: &SpherePoint, angle: f64) -> Self {
        let [ax, ay, az] = axis.coords();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation([
            [t * ax * ax + c, t * ax * ay - s * az, t * ax * az + s * ay],
            [t * ax * ay + s * az, t * ay * ay + c, t * ay * az - s * ax],
            [t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c],
        ])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Applies the inverse (transpose) rotation.
    pub fn apply_inverse(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn inverse(&self) -> Rotation {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }
}

/// Returns x ↦ g(R⁻¹ x) by analyzing g and re-evaluating the series at the
/// rotated nodes. Exact for band-limited fields up to transform accuracy.
pub fn rotate_field(g: &GridField, r: &Rotation) -> GridField {
    let c = analyze(g);
    let spec = g.spec();
    GridField::from_fn(spec, |p| {
        let [x, y, z] = r.apply_inverse(p);
        let s = x.hypot(y);
        let phi = if s > 0.0 { y.atan2(x) } else { 0.0 };
        degree_sums(&c, z, s, phi).iter().sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spharm::synthesize;
    use crate::spharm::SpectralField;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_fixed_values() {
        let north = BallPoint::new([0.0, 0.0, 1.0]).unwrap();
        let z = sigma(&north).unwrap();
        assert_eq!((z.z, z.height), ([0.0, 0.0], 0.0));

        let center = BallPoint::new([0.0, 0.0, 0.0]).unwrap();
        let z = sigma(&center).unwrap();
        assert_eq!(z.z, [0.0, 0.0]);
        assert_abs_diff_eq!(z.height, 2.0, epsilon = 1e-14);

        let eq = BallPoint::new([1.0, 0.0, 0.0]).unwrap();
        let z = sigma(&eq).unwrap();
        assert_abs_diff_eq!(z.z[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z.z[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z.height, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sigma_rejects_the_south_pole() {
        let south = BallPoint::new([0.0, 0.0, -1.0]).unwrap();
        assert!(sigma(&south).is_err());
    }

    #[test]
    fn sigma_inv_fixed_values() {
        let origin = HalfSpacePoint::new([0.0, 0.0], 0.0).unwrap();
        let x = sigma_inv(&origin);
        assert_eq!(x.coords(), [0.0, 0.0, 1.0]);
        let two = HalfSpacePoint::new([0.0, 0.0], 2.0).unwrap();
        assert_eq!(sigma_inv(&two).coords(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn stereographic_roundtrip() {
        let mut seed = 0.372_f64;
        let mut next = || {
            seed = (seed * 997.0 + 0.123).fract();
            2.0 * seed - 1.0
        };
        for _ in 0..1000 {
            let v = [next(), next(), next()];
            let n = norm(v);
            if n >= 0.999 {
                continue;
            }
            let x = BallPoint::new(v).unwrap();
            let back = sigma_inv(&sigma(&x).unwrap());
            for k in 0..3 {
                assert_abs_diff_eq!(back.coords()[k], v[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn boundary_factor_values() {
        assert_abs_diff_eq!(boundary_conformal_factor([0.0, 0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            boundary_conformal_factor([2.0, 0.0]),
            0.5_f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn bubble_lambda_two_is_the_round_factor() {
        let spec = GridSpec::build(16, 2.0).unwrap();
        let params = BubbleParams::new(SpherePoint::north(), 2.0).unwrap();
        let u = bubble(&params, &spec);
        let one = GridField::constant(&spec, 1.0);
        assert!(u.sup_distance(&one).unwrap() < 1e-12);
    }

    #[test]
    fn bubble_center_and_antipode_values() {
        // u(center) = (2/λ)^{1/2}, u(antipode) = (λ/2)^{1/2}
        assert_abs_diff_eq!(bubble_profile(0.5, 1.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bubble_profile(0.5, -1.0), 0.5, epsilon = 1e-15);
        for lambda in [0.1, 0.7, 3.0] {
            assert_abs_diff_eq!(
                bubble_profile(lambda, 1.0),
                (2.0 / lambda).sqrt(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                bubble_profile(lambda, -1.0),
                (lambda / 2.0).sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn bubble_is_positive() {
        let spec = GridSpec::build(24, 2.0).unwrap();
        for lambda in [0.05, 0.25, 1.0, 4.0, 40.0] {
            let params = BubbleParams::new(SpherePoint::north(), lambda).unwrap();
            assert!(bubble(&params, &spec).min_value() > 0.0);
        }
    }

    #[test]
    fn bubble_rejects_nonpositive_scale() {
        assert!(BubbleParams::new(SpherePoint::north(), 0.0).is_err());
        assert!(BubbleParams::new(SpherePoint::north(), -1.0).is_err());
        assert!("bubble:0,0,1,0".parse::<BubbleParams>().is_err());
    }

    #[test]
    fn bubble_params_parse() {
        let p: BubbleParams = "bubble:0,0,1,0.5".parse().unwrap();
        assert_eq!(p.center.coords(), [0.0, 0.0, 1.0]);
        assert_eq!(p.lambda, 0.5);
        let q: BubbleParams = "0, 0, 2, 1.5".parse().unwrap();
        assert_eq!(q.center.coords(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn bubble_matches_half_space_pullback() {
        // v₀(z̄) = (2λ/(|z̄|²+λ²))^{1/2} on the boundary, u = σ⁻¹ v₀ ∘ Σ
        let lambda = 0.7;
        let spec = GridSpec::build(12, 2.0).unwrap();
        let params = BubbleParams::new(SpherePoint::north(), lambda).unwrap();
        let u = bubble(&params, &spec);
        for (i, j) in [(0usize, 0usize), (5, 3), (11, 17), (23, 40)] {
            let p = spec.node(i, j);
            let z = sigma(&BallPoint::new(p).unwrap()).unwrap();
            let bar2 = z.z[0] * z.z[0] + z.z[1] * z.z[1];
            let v0 = (2.0 * lambda / (bar2 + lambda * lambda)).sqrt();
            let pulled = v0 / boundary_conformal_factor(z.z);
            assert_abs_diff_eq!(u.values()[[i, j]], pulled, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.1]]).is_err());
        // reflection has det -1
        assert!(Rotation::new([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
        let r = Rotation::about_axis(&SpherePoint::north(), 0.3);
        let v = r.apply([1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(v[0], 0.3f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.3f64.sin(), epsilon = 1e-15);
    }

    #[test]
    fn rotate_field_identity_and_roundtrip() {
        let spec = GridSpec::build(8, 2.0).unwrap();
        let mut c = SpectralField::zeros(8);
        c.set(0, 0, 1.0);
        c.set(2, 1, 0.4);
        c.set(3, -2, -0.7);
        let g = synthesize(&c, &spec).unwrap();

        let same = rotate_field(&g, &Rotation::identity());
        assert!(g.sup_distance(&same).unwrap() < 1e-10);

        let constant = GridField::constant(&spec, 2.5);
        let r = Rotation::about_axis(&SpherePoint::normalized([1.0, 1.0, 0.3]).unwrap(), 1.1);
        assert!(constant
            .sup_distance(&rotate_field(&constant, &r))
            .unwrap()
            < 1e-10);

        // band-limited zonal profile about the north pole
        let mut zc = SpectralField::zeros(8);
        for l in 0..=8usize {
            zc.set(l, 0, 0.5_f64.powi(l as i32));
        }
        let zonal = synthesize(&zc, &spec).unwrap();
        let there = rotate_field(&zonal, &r);
        let back = rotate_field(&there, &r.inverse());
        assert!(zonal.sup_distance(&back).unwrap() < 1e-9);
    }
}
