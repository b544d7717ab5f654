//! Entanglement, EPR dispersion and state validation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{CovarianceMatrix, SqueezedParams};

fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entanglement entropy (nats) of a two-mode squeezed state of strength `s`.
pub fn entanglement(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParams(format!("squeezing strength {s} must be finite and >= 0")));
    }
    let ch = (2.0 * s).cosh();
    Ok(x_ln_x((ch + 1.0) / 2.0) - x_ln_x((ch - 1.0) / 2.0))
}

/// `<(p1 + p2)^2> + <(q1 - q2)^2>` for a zero-mean state.
pub fn epr_dispersion(v: &CovarianceMatrix) -> f64 {
    let m = v.matrix();
    m[(1, 1)] + m[(3, 3)] + 2.0 * m[(1, 3)] + m[(0, 0)] + m[(2, 2)] - 2.0 * m[(0, 2)]
}

/// EPR dispersion of a squeezed state, `2 (cosh 2s + cos phi sinh 2s)`.
pub fn epr_dispersion_closed(params: SqueezedParams) -> f64 {
    let s2 = 2.0 * params.s;
    2.0 * (s2.cosh() + params.phi.cos() * s2.sinh())
}

/// `dF/dphi = -2 sin(phi) sinh(2s)`.
pub fn epr_phase_derivative(params: SqueezedParams) -> f64 {
    -2.0 * params.phi.sin() * (2.0 * params.s).sinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub purity: f64,
    pub symmetry: f64,
    pub det_relation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { purity: 1e-10, symmetry: 1e-10, det_relation: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|det V - 1/16|`
    pub purity_residual: f64,
    /// max entry of `|A - B|`
    pub symmetry_residual: f64,
    /// `|det A + det C - 1/4|`
    pub det_relation_residual: f64,
    /// `|det A - det B|`
    pub marginal_det_residual: f64,
    pub a_positive_definite: bool,
    pub b_positive_definite: bool,
    pub pure: bool,
    pub symmetric: bool,
    pub det_relation: bool,
}

impl ValidationReport {
    /// Pure state with positive definite marginals.
    pub fn is_valid_pure(&self) -> bool {
        self.pure && self.a_positive_definite && self.b_positive_definite
    }
}

fn positive_definite(m: &nalgebra::Matrix2<f64>) -> bool {
    m[(0, 0)] > 0.0 && m.determinant() > 0.0
}

pub fn validate(v: &CovarianceMatrix, tol: &Tolerances) -> ValidationReport {
    let (a, b, c) = (v.a(), v.b(), v.c());
    let purity_residual = (v.det() - 1.0 / 16.0).abs();
    let symmetry_residual = (a - b).amax();
    let det_relation_residual = (a.determinant() + c.determinant() - 0.25).abs();
    ValidationReport {
        purity_residual,
        symmetry_residual,
        det_relation_residual,
        marginal_det_residual: (a.determinant() - b.determinant()).abs(),
        a_positive_definite: positive_definite(&a),
        b_positive_definite: positive_definite(&b),
        pure: purity_residual < tol.purity,
        symmetric: symmetry_residual < tol.symmetry,
        det_relation: det_relation_residual < tol.det_relation,
    }
}
