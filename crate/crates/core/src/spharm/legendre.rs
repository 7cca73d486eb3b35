//! Gauss-Legendre quadrature rules and orthonormal associated Legendre
//! functions.
//!
//! The normalization is chosen so that the real spherical harmonics built on
//! top of these columns are orthonormal on the sphere: with
//! q_{l,m} = sqrt((2l+1)/(4π) (l-m)!/(l+m)!) P_l^m and P_l^m carrying no
//! Condon-Shortley phase, ∫ (q_{l,0})² dμ = 1 and
//! ∫ (√2 q_{l,m} cos mφ)² dμ = 1.

use std::f64::consts::PI;

/// Seed rescaling for the sectoral recurrence (Holmes-Featherstone style).
/// (sin θ)^m underflows near the poles long before the recurrence has grown
/// the values back to representable size; carrying the column at this scale
/// keeps every representable value exact and lets truly subnormal ones
/// flush to zero.
const ALF_SCALE: f64 = 1e280;
const INV_ALF_SCALE: f64 = 1e-280;

/// Packed index for 0 <= m <= l.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Packed length for degrees 0..=l_max.
#[inline]
pub fn tri_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 2) / 2
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Nodes are returned descending in x = cos θ, i.e. ascending in colatitude,
/// and are exactly antisymmetric (x_i = -x_{n-1-i}) so that grids are closed
/// under the reflection θ -> π - θ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "empty quadrature rule");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                let jf = j as f64;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let step = p0 / dp;
            z -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        if n % 2 == 1 && i == half - 1 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fills `out` (packed, length `tri_len(l_max)`) with q_{l,m}(cos θ) for all
/// 0 <= m <= l <= l_max. `s` is sin θ, passed separately so callers can
/// supply it exactly (e.g. from the transverse coordinates of a unit vector).
pub fn legendre_column(x: f64, s: f64, l_max: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), tri_len(l_max));
    // Sectoral seed q_{m,m}, carried at ALF_SCALE.
    let mut seed = (0.25 / PI).sqrt() * ALF_SCALE;
    for m in 0..=l_max {
        if m > 0 {
            seed *= s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        out[tri(m, m)] = seed * INV_ALF_SCALE;
        if m + 1 <= l_max {
            let mut pm2 = seed;
            let mut pm1 = x * ((2 * m + 3) as f64).sqrt() * seed;
            out[tri(m + 1, m)] = pm1 * INV_ALF_SCALE;
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p = a * (x * pm1 - b * pm2);
                out[tri(l, m)] = p * INV_ALF_SCALE;
                pm2 = pm1;
                pm1 = p;
            }
        }
    }
}

/// Colatitude derivatives dq_{l,m}/dθ from an already computed column.
///
/// Uses d/dθ q_{l,0} = -sqrt(l(l+1)) q_{l,1} and, for m >= 1,
/// d/dθ q_{l,m} = ½ (sqrt((l+m)(l-m+1)) q_{l,m-1} - sqrt((l-m)(l+m+1)) q_{l,m+1}).
pub fn legendre_column_dtheta(q: &[f64], l_max: usize, out: &mut [f64]) {
    debug_assert_eq!(q.len(), tri_len(l_max));
    debug_assert_eq!(out.len(), tri_len(l_max));
    out[tri(0, 0)] = 0.0;
    for l in 1..=l_max {
        let lf = l as f64;
        out[tri(l, 0)] = -(lf * (lf + 1.0)).sqrt() * q[tri(l, 1)];
        for m in 1..=l {
            let mf = m as f64;
            let lo = ((lf + mf) * (lf - mf + 1.0)).sqrt() * q[tri(l, m - 1)];
            let hi = if m + 1 <= l {
                ((lf - mf) * (lf + mf + 1.0)).sqrt() * q[tri(l, m + 1)]
            } else {
                0.0
            };
            out[tri(l, m)] = 0.5 * (lo - hi);
        }
    }
}

/// Unnormalized Legendre polynomials P_0..P_{l_max} at a single point.
pub fn legendre_p_all(x: f64, l_max: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), l_max + 1);
    out[0] = 1.0;
    if l_max == 0 {
        return;
    }
    out[1] = x;
    for l in 1..l_max {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // exact through degree 11
        for k in [0usize, 2, 4, 6, 8, 10] {
            let quad: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = 2.0 / (k as f64 + 1.0);
            assert_abs_diff_eq!(quad, exact, epsilon = 1e-14);
        }
        let odd: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(7)).sum();
        assert_abs_diff_eq!(odd, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_nodes_are_antisymmetric() {
        for n in [1usize, 2, 7, 30, 131] {
            let (x, w) = gauss_legendre(n);
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
                assert_eq!(w[i], w[n - 1 - i]);
            }
            assert!(x.windows(2).all(|p| p[0] > p[1]));
        }
    }

    #[test]
    fn single_node_rule_is_midpoint() {
        let (x, w) = gauss_legendre(1);
        assert_eq!(x[0], 0.0);
        assert_abs_diff_eq!(w[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn low_degree_columns_match_closed_forms() {
        let theta: f64 = 1.234;
        let (x, s) = (theta.cos(), theta.sin());
        let mut q = vec![0.0; tri_len(3)];
        legendre_column(x, s, 3, &mut q);
        let n00 = (0.25 / PI).sqrt();
        assert_abs_diff_eq!(q[tri(0, 0)], n00, epsilon = 1e-15);
        assert_abs_diff_eq!(q[tri(1, 0)], (3.0 / (4.0 * PI)).sqrt() * x, epsilon = 1e-15);
        assert_abs_diff_eq!(q[tri(1, 1)], (3.0 / (8.0 * PI)).sqrt() * s, epsilon = 1e-15);
        assert_abs_diff_eq!(
            q[tri(2, 0)],
            (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * x * x - 1.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            q[tri(2, 2)],
            (5.0 / (96.0 * PI)).sqrt() * 3.0 * s * s,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dtheta_matches_finite_differences() {
        let l_max = 8;
        let theta: f64 = 0.9;
        let h = 1e-6;
        let col = |t: f64| {
            let mut q = vec![0.0; tri_len(l_max)];
            legendre_column(t.cos(), t.sin(), l_max, &mut q);
            q
        };
        let q = col(theta);
        let qp = col(theta + h);
        let qm = col(theta - h);
        let mut dq = vec![0.0; tri_len(l_max)];
        legendre_column_dtheta(&q, l_max, &mut dq);
        for l in 0..=l_max {
            for m in 0..=l {
                let fd = (qp[tri(l, m)] - qm[tri(l, m)]) / (2.0 * h);
                assert_abs_diff_eq!(dq[tri(l, m)], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn high_degree_column_stays_finite_and_bounded() {
        let l_max = 512;
        let mut q = vec![0.0; tri_len(l_max)];
        // node very close to the pole: the sectoral seed underflows, values
        // must flush to zero rather than produce NaN
        legendre_column(0.999_995, (1.0f64 - 0.999_995f64 * 0.999_995).sqrt(), l_max, &mut q);
        let bound = ((2.0 * l_max as f64 + 1.0) / (4.0 * PI)).sqrt();
        for v in &q {
            assert!(v.is_finite());
            assert!(v.abs() <= bound * (1.0 + 1e-12));
        }
    }
}
