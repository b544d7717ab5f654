//! Pure two-mode Gaussian states in both parameterizations: the complex
//! quadratic-form coefficients of the position-space wavefunction and the
//! 4x4 covariance matrix in `(q1, p1, q2, p2)` ordering.
//!
//! Units: hbar = 1, vacuum quadrature variance 1/2.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Map an angle onto `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Smallest absolute difference between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Coefficients of `Psi(q1, q2) = N exp(-(alpha q1^2 + beta q2^2 + 2 gamma q1 q2) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexCoeffs {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl ComplexCoeffs {
    /// Build and check normalizability.
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Result<Self> {
        let c = ComplexCoeffs { alpha, beta, gamma };
        c.check()?;
        Ok(c)
    }

    pub fn symmetric(alpha: Complex64, gamma: Complex64) -> Result<Self> {
        Self::new(alpha, alpha, gamma)
    }

    pub fn vacuum() -> Self {
        ComplexCoeffs {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
            gamma: Complex64::new(0.0, 0.0),
        }
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotNormalizable("non-finite coefficient".into()));
        }
        if self.alpha.re <= 0.0 {
            return Err(Error::NotNormalizable(format!("Re(alpha) = {} must be > 0", self.alpha.re)));
        }
        if self.beta.re <= 0.0 {
            return Err(Error::NotNormalizable(format!("Re(beta) = {} must be > 0", self.beta.re)));
        }
        let d2 = self.delta_squared();
        if d2 <= 0.0 {
            return Err(Error::NotNormalizable(format!(
                "Re(alpha) Re(beta) - Re(gamma)^2 = {d2:e} must be > 0"
            )));
        }
        Ok(())
    }

    /// `Re(alpha) Re(beta) - Re(gamma)^2`.
    pub fn delta_squared(&self) -> f64 {
        self.alpha.re * self.beta.re - self.gamma.re * self.gamma.re
    }

    /// Normalization constant `N` with `N^2 = Delta / pi`.
    pub fn normalization(&self) -> f64 {
        (self.delta_squared().sqrt() / PI).sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        self.alpha == self.beta
    }

    /// `alpha^2 - gamma^2`; equals 1 for an exact two-mode squeezed state.
    pub fn squeezed_defect(&self) -> Complex64 {
        self.alpha * self.alpha - self.gamma * self.gamma
    }

    /// Real and imaginary parts of `M = [[alpha, gamma], [gamma, beta]]`.
    pub fn quadratic_form(&self) -> (Matrix2<f64>, Matrix2<f64>) {
        let re = Matrix2::new(self.alpha.re, self.gamma.re, self.gamma.re, self.beta.re);
        let im = Matrix2::new(self.alpha.im, self.gamma.im, self.gamma.im, self.beta.im);
        (re, im)
    }
}

/// Two-mode squeezing strength `s >= 0` and phase `phi` in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedParams {
    pub s: f64,
    pub phi: f64,
}

impl SqueezedParams {
    pub fn new(s: f64, phi: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidParams(format!("squeezing strength {s} must be finite and >= 0")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParams(format!("phase {phi} must be finite")));
        }
        Ok(SqueezedParams { s, phi: wrap_angle(phi) })
    }

    /// `lambda = -tanh(s) exp(i phi)`.
    pub fn lambda(&self) -> Complex64 {
        -self.s.tanh() * Complex64::from_polar(1.0, self.phi)
    }
}

/// Real symmetric 4x4 second-moment matrix, `(q1, p1, q2, p2)` ordering.
///
/// ```text
/// V = | A   C |
///     | C^T B |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    /// Accepts `m` if it is symmetric to `1e-12` relative to its largest
    /// entry; the stored matrix is the symmetric part.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite covariance entry".into()));
        }
        let asym = (m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::AsymmetricMatrix(asym));
        }
        Ok(CovarianceMatrix((m + m.transpose()) * 0.5))
    }

    pub fn from_blocks(a: &Matrix2<f64>, b: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<Self> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(c);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self::from_matrix(m)
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix4<f64>) -> Self {
        CovarianceMatrix((m + m.transpose()) * 0.5)
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix(Matrix4::identity() * 0.5)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Mode-1 marginal.
    pub fn a(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Mode-2 marginal.
    pub fn b(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Cross correlations `<x1 x2>`, rows mode 1, columns mode 2.
    pub fn c(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn scaled(&self, k: f64) -> Self {
        CovarianceMatrix(self.0 * k)
    }

    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        (self.0 - other.0).amax()
    }

    /// Row-major entries.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[(i, j)];
            }
        }
        out
    }
}

/// Wavefunction coefficients of the two-mode squeezed vacuum, written
/// explicitly in `(s, phi)`.
pub fn coeffs_from_squeezed(params: SqueezedParams) -> ComplexCoeffs {
    let (ch, sh) = ((2.0 * params.s).cosh(), (2.0 * params.s).sinh());
    let (sp, cp) = params.phi.sin_cos();
    let d = 1.0 + sp * sp * sh * sh;
    let alpha = Complex64::new(ch / d, sp * cp * sh * sh / d);
    let gamma = Complex64::new(cp * sh / d, sp * sh * ch / d);
    ComplexCoeffs { alpha, beta: alpha, gamma }
}

/// Second moments of the Gaussian wavefunction.
///
/// With `M = M_R + i M_I`:
/// `<q q^T> = M_R^-1 / 2`, `<{q, p^T}> = -M_R^-1 M_I / 2`,
/// `<p p^T> = (M_R + M_I M_R^-1 M_I) / 2`.
pub fn covariance_from_coeffs(c: &ComplexCoeffs) -> Result<CovarianceMatrix> {
    c.check()?;
    let (mr, mi) = c.quadratic_form();
    let inv = mr
        .try_inverse()
        .ok_or_else(|| Error::NotNormalizable("Re(M) is singular".into()))?;
    let qq = inv * 0.5;
    let qp = -(inv * mi) * 0.5;
    let pp = (mr + mi * inv * mi) * 0.5;

    // index of q_i is 2i, of p_i is 2i + 1
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(2 * i, 2 * j)] = qq[(i, j)];
            m[(2 * i + 1, 2 * j + 1)] = pp[(i, j)];
            m[(2 * i, 2 * j + 1)] = qp[(i, j)];
            m[(2 * j + 1, 2 * i)] = qp[(i, j)];
        }
    }
    Ok(CovarianceMatrix::from_matrix_unchecked(m))
}

/// Covariance of the two-mode squeezed vacuum:
/// `A = B = cosh(2s)/2 I`, `C = -sinh(2s)/2 [[cos phi, sin phi], [sin phi, -cos phi]]`.
pub fn covariance_of_squeezed(params: SqueezedParams) -> CovarianceMatrix {
    let (ch, sh) = ((2.0 * params.s).cosh(), (2.0 * params.s).sinh());
    let (sp, cp) = params.phi.sin_cos();
    let a = Matrix2::identity() * (ch / 2.0);
    let c = Matrix2::new(cp, sp, sp, -cp) * (-sh / 2.0);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&a);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&c);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
    CovarianceMatrix(m)
}
