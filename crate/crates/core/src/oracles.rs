//! Brute-force reference computations: moments by numerical integration of
//! the wavefunction, entropy from the symplectic eigenvalue, and small
//! scalar helpers (one-sided limits, golden-section search).

use nalgebra::{Matrix4, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::state::{ComplexCoeffs, CovarianceMatrix};

/// Refinement check threshold for [`moments_by_quadrature`].
pub const QUADRATURE_REFINEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub nodes_per_axis: usize,
    /// Half-width of the integration box, in units of the envelope width of
    /// `|Psi|` along each whitened axis.
    pub domain_scale: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { nodes_per_axis: 64, domain_scale: 8.0 }
    }
}

impl QuadratureGrid {
    pub fn new(nodes_per_axis: usize, domain_scale: f64) -> Result<Self> {
        if nodes_per_axis < 16 {
            return Err(Error::InvalidParams(format!("nodes_per_axis = {nodes_per_axis} must be >= 16")));
        }
        if !(domain_scale > 0.0) || !domain_scale.is_finite() {
            return Err(Error::InvalidParams(format!("domain_scale = {domain_scale} must be > 0")));
        }
        Ok(QuadratureGrid { nodes_per_axis, domain_scale })
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(z) and P_n'(z) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn quadrature_once(c: &ComplexCoeffs, grid: &QuadratureGrid, exec: Exec) -> Result<Matrix4<f64>> {
    let (mr, _) = c.quadratic_form();
    let chol = mr
        .cholesky()
        .ok_or_else(|| Error::NotNormalizable("Re(M) is not positive definite".into()))?;
    // q = L^-T u, so q^T Re(M) q = |u|^2
    let l_inv_t = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::NotNormalizable("Re(M) is singular".into()))?;
    let jac = l_inv_t.determinant().abs();
    let norm2 = c.normalization().powi(2);
    let m = [[c.alpha, c.gamma], [c.gamma, c.beta]];

    let (x, w) = gauss_legendre(grid.nodes_per_axis);
    let half = grid.domain_scale;
    let n = x.len();

    // ten distinct entries: qq (3), pp (3), qp (4)
    let rows = exec.map(n, |a| {
        let mut acc = [0.0f64; 10];
        for b in 0..n {
            let u = Vector2::new(half * x[a], half * x[b]);
            let q = l_inv_t * u;
            let dens = w[a] * w[b] * (-u.norm_squared()).exp();
            let mq = [
                m[0][0] * q[0] + m[0][1] * q[1],
                m[1][0] * q[0] + m[1][1] * q[1],
            ];
            // p_j Psi = i (M q)_j Psi
            let pp = |i: usize, j: usize| (mq[i].conj() * mq[j]).re;
            let qp = |i: usize, j: usize| -(mq[j] * Complex64::new(q[i], 0.0)).im;
            let vals = [
                q[0] * q[0],
                q[0] * q[1],
                q[1] * q[1],
                pp(0, 0),
                pp(0, 1),
                pp(1, 1),
                qp(0, 0),
                qp(0, 1),
                qp(1, 0),
                qp(1, 1),
            ];
            for (s, v) in acc.iter_mut().zip(vals) {
                *s += dens * v;
            }
        }
        acc
    });

    let mut tot = [0.0f64; 10];
    for row in &rows {
        for (t, v) in tot.iter_mut().zip(row) {
            *t += v;
        }
    }
    let k = norm2 * jac * half * half;
    let t: Vec<f64> = tot.iter().map(|v| v * k).collect();

    let mut out = Matrix4::zeros();
    let set = |out: &mut Matrix4<f64>, i: usize, j: usize, v: f64| {
        out[(i, j)] = v;
        out[(j, i)] = v;
    };
    set(&mut out, 0, 0, t[0]);
    set(&mut out, 0, 2, t[1]);
    set(&mut out, 2, 2, t[2]);
    set(&mut out, 1, 1, t[3]);
    set(&mut out, 1, 3, t[4]);
    set(&mut out, 3, 3, t[5]);
    set(&mut out, 0, 1, t[6]);
    set(&mut out, 0, 3, t[7]);
    set(&mut out, 2, 1, t[8]);
    set(&mut out, 2, 3, t[9]);
    Ok(out)
}

/// All second moments by tensor-product Gauss-Legendre integration of
/// `Psi* O Psi`, with momentum moments from `dPsi/dq = -(M q) Psi`.
///
/// Fails with [`Error::Precision`] if doubling the node count moves any
/// entry by more than [`QUADRATURE_REFINEMENT_TOL`].
pub fn moments_by_quadrature(c: &ComplexCoeffs, grid: &QuadratureGrid) -> Result<CovarianceMatrix> {
    moments_by_quadrature_with(c, grid, Exec::default())
}

pub fn moments_by_quadrature_with(c: &ComplexCoeffs, grid: &QuadratureGrid, exec: Exec) -> Result<CovarianceMatrix> {
    c.check()?;
    let grid = QuadratureGrid::new(grid.nodes_per_axis, grid.domain_scale)?;
    let coarse = quadrature_once(c, &grid, exec)?;
    let fine_grid = QuadratureGrid { nodes_per_axis: 2 * grid.nodes_per_axis, ..grid };
    let fine = quadrature_once(c, &fine_grid, exec)?;
    let diff = coarse - fine;
    let (row, col) = diff.iamax_full();
    let change = diff[(row, col)].abs();
    if !(change <= QUADRATURE_REFINEMENT_TOL) {
        return Err(Error::Precision { row, col, change });
    }
    Ok(CovarianceMatrix::from_matrix_unchecked(coarse))
}

fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Von Neumann entropy of the first-mode marginal of a pure state,
/// `h(nu) = (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2)` with
/// `nu = sqrt(det A)`.
pub fn entropy_from_covariance(v: &CovarianceMatrix) -> Result<f64> {
    let det = v.a().determinant();
    let nu = det.max(0.0).sqrt();
    if !(nu >= 0.5 - 1e-10) {
        return Err(Error::InvalidState(format!("symplectic eigenvalue {nu} < 1/2")));
    }
    let nu = nu.max(0.5);
    Ok(x_ln_x(nu + 0.5) - x_ln_x(nu - 0.5))
}

/// `lim f(t)` as `t -> 0+`, by one Richardson step from `f(h)` and `f(h/2)`
/// (exact for `f` linear near 0).
pub fn one_sided_limit(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    2.0 * f(h / 2.0) - f(h)
}

/// Minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::entanglement;
    use crate::state::{coeffs_from_squeezed, covariance_from_coeffs, covariance_of_squeezed, SqueezedParams};
    use crate::transform::{apply_local, LocalSymplectic};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // exact up to degree 31
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_abs_diff_eq!(i, 2.0 / 31.0, epsilon = 1e-14);
        let (x3, _) = gauss_legendre(3);
        assert_abs_diff_eq!(x3[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(x3[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_moments() {
        let v = moments_by_quadrature(&ComplexCoeffs::vacuum(), &QuadratureGrid::default()).unwrap();
        assert!(v.max_abs_diff(&CovarianceMatrix::vacuum()) < 1e-10);
    }

    #[test]
    fn squeezed_moments_match_closed_form() {
        let p = SqueezedParams::new(1.0, PI / 3.0).unwrap();
        let v = moments_by_quadrature(&coeffs_from_squeezed(p), &QuadratureGrid::default()).unwrap();
        assert!(v.max_abs_diff(&covariance_of_squeezed(p)) < 1e-8);
    }

    #[test]
    fn asymmetric_complex_coefficients() {
        let c = ComplexCoeffs::new(
            Complex64::new(1.4, 0.3),
            Complex64::new(0.8, -0.6),
            Complex64::new(0.5, 0.2),
        )
        .unwrap();
        let v = moments_by_quadrature(&c, &QuadratureGrid::default()).unwrap();
        assert!(v.max_abs_diff(&covariance_from_coeffs(&c).unwrap()) < 1e-10);
    }

    #[test]
    fn coarse_grid_fails_refinement() {
        let p = SqueezedParams::new(2.0, 0.5).unwrap();
        let grid = QuadratureGrid { nodes_per_axis: 16, domain_scale: 40.0 };
        assert!(matches!(moments_by_quadrature(&coeffs_from_squeezed(p), &grid), Err(Error::Precision { .. })));
        assert!(QuadratureGrid::new(8, 8.0).is_err());
        assert!(QuadratureGrid::new(64, 0.0).is_err());
    }

    #[test]
    fn entropy_oracle() {
        assert_eq!(entropy_from_covariance(&CovarianceMatrix::vacuum()).unwrap(), 0.0);
        for phi in [0.0, 1.0, PI] {
            let v = covariance_of_squeezed(SqueezedParams::new(1.0, phi).unwrap());
            let e = entropy_from_covariance(&v).unwrap();
            assert_abs_diff_eq!(e, entanglement(1.0).unwrap(), epsilon = 1e-10);
            let w = apply_local(&v, &LocalSymplectic::new(0.7, 0.2, -1.0), &LocalSymplectic::new(-0.3, 2.0, 0.5));
            assert_abs_diff_eq!(entropy_from_covariance(&w).unwrap(), e, epsilon = 1e-10);
        }
        assert!(entropy_from_covariance(&CovarianceMatrix::vacuum().scaled(0.5)).is_err());
    }

    #[test]
    fn scalar_helpers() {
        assert_abs_diff_eq!(one_sided_limit(|t| 3.0 + 2.0 * t, 1e-3), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(one_sided_limit(|t| 1.0 + t * t, 1e-4), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10), 0.3, epsilon = 1e-8);
    }
}
