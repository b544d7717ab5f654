//! Local symplectic transformations and the associated two-mode squeezed
//! state of a symmetric pure Gaussian.
//!
//! The associated squeezed state of `V` has covariance
//! `A_sq = B_sq = cosh(2s)/2 I`, `C_sq = -sinh(2s)/2 [[cos phi, sin phi], [sin phi, -cos phi]]`.
//! Its strength follows from the local invariant `det A`. Its phase is the
//! unique `phi` that balances the state against the squeezed form:
//! `C_sq - C` is proportional to `A_sq - A` (same ratio on the diagonal and
//! the off-diagonal). The per-mode squeeze `r` and rotation `theta` that
//! whiten the marginal give the sign of `phi`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{wrap_angle, CovarianceMatrix};

/// Marginals closer than this (relative to `tr A`) to a multiple of the
/// identity are treated as already in squeezed form.
pub const DEGENERACY_EPS: f64 = 1e-9;

/// Relative tolerance on `det A + det C = 1/4` and `A = B`.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Below this `sinh 2s` the phase is undefined and reported as 0.
const MIN_SINH: f64 = 1e-12;

/// Single-mode squeeze `r` with rotations `theta`, `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalSymplectic {
    pub r: f64,
    pub theta: f64,
    pub psi: f64,
}

impl LocalSymplectic {
    pub fn new(r: f64, theta: f64, psi: f64) -> Self {
        LocalSymplectic { r, theta, psi }
    }

    pub fn identity() -> Self {
        LocalSymplectic { r: 0.0, theta: 0.0, psi: 0.0 }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        symplectic_matrix(self.r, self.theta, self.psi)
    }

    /// Same transform followed by a phase-space rotation by `chi`.
    pub fn then_rotate(&self, chi: f64) -> Self {
        LocalSymplectic { r: self.r, theta: wrap_angle(self.theta + chi), psi: wrap_angle(self.psi - chi) }
    }

    /// Equivalent parameters with `r >= 0` (the matrix is unchanged).
    pub fn with_nonnegative_r(&self) -> Self {
        if self.r < 0.0 {
            LocalSymplectic { r: -self.r, theta: self.theta, psi: wrap_angle(self.psi + PI) }
        } else {
            *self
        }
    }
}

/// ```text
/// | ch cos(theta) + sh cos(psi)   -(ch sin(theta) + sh sin(psi)) |
/// | ch sin(theta) - sh sin(psi)     ch cos(theta) - sh cos(psi)  |
/// ```
/// with `ch = cosh r`, `sh = sinh r`. Unit determinant for all arguments.
pub fn symplectic_matrix(r: f64, theta: f64, psi: f64) -> Matrix2<f64> {
    let (ch, sh) = (r.cosh(), r.sinh());
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Matrix2::new(ch * ct + sh * cp, -(ch * st + sh * sp), ch * st - sh * sp, ch * ct - sh * cp)
}

pub(crate) fn block_diag(s1: &Matrix2<f64>, s2: &Matrix2<f64>) -> Matrix4<f64> {
    let mut l = Matrix4::zeros();
    l.fixed_view_mut::<2, 2>(0, 0).copy_from(s1);
    l.fixed_view_mut::<2, 2>(2, 2).copy_from(s2);
    l
}

/// `A' = S1 A S1^T`, `B' = S2 B S2^T`, `C' = S1 C S2^T`.
pub fn apply_local(v: &CovarianceMatrix, s1: &LocalSymplectic, s2: &LocalSymplectic) -> CovarianceMatrix {
    let l = block_diag(&s1.matrix(), &s2.matrix());
    CovarianceMatrix::from_matrix_unchecked(l * v.matrix() * l.transpose())
}

fn anisotropy(a: &Matrix2<f64>) -> f64 {
    let h = a.trace() / 2.0;
    (a - Matrix2::identity() * h).norm()
}

/// True when the marginal `A` is a multiple of the identity within
/// [`DEGENERACY_EPS`].
pub fn is_degenerate(v: &CovarianceMatrix) -> bool {
    let a = v.a();
    anisotropy(&a) < DEGENERACY_EPS * a.trace()
}

/// Squeezing strength of the associated squeezed state,
/// `cosh 2s = 2 sqrt(det A)`.
///
/// Requires `det C <= 0` and `det A + det C = 1/4`, i.e.
/// `sinh 2s = 2 sqrt(-det C)`.
pub fn squeezing_strength(v: &CovarianceMatrix) -> Result<f64> {
    let det_a = v.a().determinant();
    let det_c = v.c().determinant();
    let tol = CONSISTENCY_TOL * det_a.abs().max(1.0);
    if !(det_a >= 0.25 - tol) {
        return Err(Error::InvalidState(format!("det A = {det_a} is below the vacuum value 1/4")));
    }
    let residual = det_a + det_c - 0.25;
    if residual.abs() > tol {
        return Err(Error::InconsistentState { residual });
    }
    if det_c > tol {
        return Err(Error::InvalidState(format!("det C = {det_c} > 0 cannot come from a pure state")));
    }
    let x = (2.0 * det_a.max(0.25).sqrt()).max(1.0);
    Ok(0.5 * x.acosh())
}

fn check_symmetric(v: &CovarianceMatrix) -> Result<()> {
    let (a, b) = (v.a(), v.b());
    let diff = (a - b).amax();
    if diff > CONSISTENCY_TOL * a.trace().max(1.0) {
        return Err(Error::NotSymmetric(diff));
    }
    Ok(())
}

/// Closed-form local transform `(r, theta)` applied identically to both
/// modes (`psi = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricTransform {
    pub r: f64,
    pub theta: f64,
}

impl SymmetricTransform {
    pub fn local(&self) -> LocalSymplectic {
        LocalSymplectic::new(self.r, self.theta, 0.0)
    }
}

/// Per-mode whitening of a marginal with `psi = 0`:
/// `cos theta = (<p^2> - <q^2>) / sqrt((tr A)^2 - 4 det A)`,
/// `tanh r = sqrt((tr A - 2 sqrt(det A)) / (tr A + 2 sqrt(det A)))`.
///
/// Both signs of `theta` are tried; the one that brings `A` to a multiple
/// of the identity is returned.
pub(crate) fn whiten_marginal(a: &Matrix2<f64>) -> SymmetricTransform {
    let tr = a.trace();
    if anisotropy(a) < DEGENERACY_EPS * tr {
        return SymmetricTransform { r: 0.0, theta: 0.0 };
    }
    let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
    // sqrt(tr^2 - 4 det) without cancellation
    let d = ((a11 - a22).powi(2) + 4.0 * a12 * a12).sqrt();
    let sqrt_det = a.determinant().max(0.0).sqrt();
    // tanh r = sqrt((tr - 2 sqrt det)/(tr + 2 sqrt det)) = d / (tr + 2 sqrt det)
    let r = (d / (tr + 2.0 * sqrt_det)).min(1.0 - f64::EPSILON).atanh();
    let base = ((a22 - a11) / d).clamp(-1.0, 1.0).acos();

    let residual = |theta: f64| {
        let s = symplectic_matrix(r, theta, 0.0);
        anisotropy(&(s * a * s.transpose()))
    };
    let theta = if residual(-base) < residual(base) { -base } else { base };
    SymmetricTransform { r, theta }
}

/// Closed-form transform for a symmetric (`A = B`) pure state. Returns the
/// identity when `V` is already in squeezed form.
pub fn solve_symmetric(v: &CovarianceMatrix) -> Result<SymmetricTransform> {
    check_symmetric(v)?;
    Ok(whiten_marginal(&v.a()))
}

/// The balance expression for `cos phi`:
///
/// ```text
///            <p1 p2>(cosh 2s - 2<q1^2>) - <q1 q2>(cosh 2s - 2<p1^2>)
/// cos phi = ---------------------------------------------------------
///                   sinh 2s (cosh 2s - <q1^2> - <p1^2>)
/// ```
///
/// `None` when the denominator vanishes (degenerate or `s = 0`).
pub fn phase_cosine_balance(v: &CovarianceMatrix, s: f64) -> Option<f64> {
    let (ch, sh) = ((2.0 * s).cosh(), (2.0 * s).sinh());
    let m = v.matrix();
    let (q2, p2, qq, pp) = (m[(0, 0)], m[(1, 1)], m[(0, 2)], m[(1, 3)]);
    let den = sh * (ch - q2 - p2);
    if den.abs() < 1e-300 || sh < MIN_SINH || is_degenerate(v) {
        return None;
    }
    Some((pp * (ch - 2.0 * q2) - qq * (ch - 2.0 * p2)) / den)
}

/// Both routes to the associated phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseExtraction {
    pub s: f64,
    /// Associated phase in `(-pi, pi]`.
    pub phi: f64,
    /// `cos phi` from the balance expression (absent when degenerate).
    pub cos_balance: Option<f64>,
    /// `cos phi` read off the whitened correlation block.
    pub cos_block: f64,
    /// Squeezed-form phase of `S V S^T` with the closed-form `(r, theta)`;
    /// equals `pi - phi` away from degeneracy.
    pub transformed_phase: f64,
    pub transform: SymmetricTransform,
    pub degenerate: bool,
}

/// Phase of `C` for a matrix already in squeezed form, `C = -sinh(2s)/2 K(phi)`.
fn squeezed_block_phase(c: &Matrix2<f64>) -> f64 {
    let c12 = 0.5 * (c[(0, 1)] + c[(1, 0)]);
    let c11 = 0.5 * (c[(0, 0)] - c[(1, 1)]);
    if c12 == 0.0 && c11 == 0.0 {
        return 0.0;
    }
    wrap_angle((-c12).atan2(-c11))
}

pub fn phase_extraction(v: &CovarianceMatrix) -> Result<PhaseExtraction> {
    check_symmetric(v)?;
    let s = squeezing_strength(v)?;
    let sh = (2.0 * s).sinh();
    let c = v.c();

    if is_degenerate(v) {
        let scale = v.a().trace().max(1.0);
        let shape = (c[(0, 0)] + c[(1, 1)]).abs() + (c[(0, 1)] - c[(1, 0)]).abs();
        if shape > CONSISTENCY_TOL * scale {
            return Err(Error::NumericDegeneracy { anisotropy: anisotropy(&v.a()), shape });
        }
        let phi = if sh < MIN_SINH { 0.0 } else { squeezed_block_phase(&c) };
        return Ok(PhaseExtraction {
            s,
            phi,
            cos_balance: None,
            cos_block: phi.cos(),
            transformed_phase: phi,
            transform: SymmetricTransform { r: 0.0, theta: 0.0 },
            degenerate: true,
        });
    }

    let transform = whiten_marginal(&v.a());
    let m = transform.local().matrix();
    let ct = m * c * m.transpose();
    let transformed_phase = squeezed_block_phase(&ct);
    let (phi, cos_block) = if sh < MIN_SINH {
        (0.0, 1.0)
    } else {
        let cos_block = 2.0 * ct[(0, 0)] / sh;
        let sin_block = -(ct[(0, 1)] + ct[(1, 0)]) / sh;
        (wrap_angle(sin_block.atan2(cos_block)), cos_block)
    };
    Ok(PhaseExtraction {
        s,
        phi,
        cos_balance: phase_cosine_balance(v, s),
        cos_block,
        transformed_phase,
        transform,
        degenerate: false,
    })
}

/// Associated two-mode phase in `(-pi, pi]`.
pub fn phase(v: &CovarianceMatrix) -> Result<f64> {
    phase_extraction(v).map(|p| p.phi)
}

/// The pair of local transforms carrying a symmetric pure `V` exactly onto
/// the covariance of its associated squeezed state: the closed-form
/// whitening followed by an equal rotation of both modes.
pub fn associated_transform(v: &CovarianceMatrix) -> Result<(LocalSymplectic, LocalSymplectic)> {
    let p = phase_extraction(v)?;
    if p.degenerate {
        return Ok((LocalSymplectic::identity(), LocalSymplectic::identity()));
    }
    // an equal rotation chi of both modes shifts the squeezed-form phase by 2 chi
    let chi = 0.5 * wrap_angle(p.phi - p.transformed_phase);
    let s = p.transform.local().then_rotate(chi);
    Ok((s, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceResiduals {
    /// `dA11 dC22 - dA22 dC11`
    pub residual_a: f64,
    /// `dA12 tr(dC) - dC12 tr(dA)`
    pub residual_b: f64,
}

/// Cross-multiplied balance conditions between `V` and the squeezed
/// covariance at `(s, phi)`, with `dA = A_sq - A`, `dC = C_sq - C`.
pub fn balance_residuals_at(v: &CovarianceMatrix, s: f64, phi: f64) -> BalanceResiduals {
    let (ch, sh) = ((2.0 * s).cosh(), (2.0 * s).sinh());
    let (sp, cp) = phi.sin_cos();
    let a_sq = Matrix2::identity() * (ch / 2.0);
    let c_sq = Matrix2::new(cp, sp, sp, -cp) * (-sh / 2.0);
    let da = a_sq - v.a();
    let dc = c_sq - v.c();
    BalanceResiduals {
        residual_a: da[(0, 0)] * dc[(1, 1)] - da[(1, 1)] * dc[(0, 0)],
        residual_b: da[(0, 1)] * dc.trace() - dc[(0, 1)] * da.trace(),
    }
}

/// The same off-diagonal condition written with sums
/// `A_sq + A`, `C_sq + C` instead of differences.
pub fn balance_residual_sum_form(v: &CovarianceMatrix, s: f64, phi: f64) -> f64 {
    let (ch, sh) = ((2.0 * s).cosh(), (2.0 * s).sinh());
    let (sp, cp) = phi.sin_cos();
    let a = Matrix2::identity() * (ch / 2.0) + v.a();
    let c = Matrix2::new(cp, sp, sp, -cp) * (-sh / 2.0) + v.c();
    a[(0, 1)] * c.trace() - c[(0, 1)] * a.trace()
}

/// Balance residuals at the extracted `(s, phi)`.
pub fn balance_residuals(v: &CovarianceMatrix) -> Result<BalanceResiduals> {
    let p = phase_extraction(v)?;
    Ok(balance_residuals_at(v, p.s, p.phi))
}

/// Standard form: diagonal blocks `a I`, correlations `diag(c1, c2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandardForm {
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn standard_form(v: &CovarianceMatrix) -> Result<StandardForm> {
    squeezing_strength(v)?;
    let a = v.a().determinant().sqrt();
    let c1 = (-v.c().determinant()).max(0.0).sqrt();
    Ok(StandardForm { a, c1, c2: -c1 })
}

/// Rotation angle for a standard-form squeezed state.
pub const STANDARD_FORM_PHASE: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::entanglement;
    use crate::state::{covariance_of_squeezed, SqueezedParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn sq(s: f64, phi: f64) -> CovarianceMatrix {
        covariance_of_squeezed(SqueezedParams::new(s, phi).unwrap())
    }

    fn sym(v: &CovarianceMatrix, s: LocalSymplectic) -> CovarianceMatrix {
        apply_local(v, &s, &s)
    }

    #[test]
    fn symplectic_matrix_special_cases() {
        assert_eq!(symplectic_matrix(0.0, 0.0, 0.0), Matrix2::identity());
        let m = symplectic_matrix(0.3, 0.0, 0.0);
        assert_abs_diff_eq!(m, Matrix2::new(0.3f64.exp(), 0.0, 0.0, (-0.3f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(symplectic_matrix(0.7, 1.1, 0.3).determinant(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn parameter_equivalences_keep_the_matrix() {
        let s = LocalSymplectic::new(-0.4, 0.9, -2.0);
        assert_abs_diff_eq!(s.matrix(), s.with_nonnegative_r().matrix(), epsilon = 1e-14);
        let chi: f64 = 0.77;
        let rot = Matrix2::new(chi.cos(), -chi.sin(), chi.sin(), chi.cos());
        assert_abs_diff_eq!(rot * s.matrix(), s.then_rotate(chi).matrix(), epsilon = 1e-14);
    }

    #[test]
    fn apply_local_identity_and_invariants() {
        let v = sq(0.9, 0.4);
        let id = LocalSymplectic::identity();
        assert_abs_diff_eq!(apply_local(&v, &id, &id).max_abs_diff(&v), 0.0, epsilon = 1e-15);
        let s1 = LocalSymplectic::new(0.5, -1.2, 0.4);
        let s2 = LocalSymplectic::new(-0.3, 2.2, 1.0);
        let w = apply_local(&v, &s1, &s2);
        assert_abs_diff_eq!(w.a().determinant(), v.a().determinant(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.b().determinant(), v.b().determinant(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.c().determinant(), v.c().determinant(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.det(), v.det(), epsilon = 1e-10);
    }

    #[test]
    fn strength_round_trip() {
        for &phi in &[-2.0, 0.0, 1.0, PI] {
            assert_abs_diff_eq!(squeezing_strength(&sq(1.0, phi)).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(squeezing_strength(&CovarianceMatrix::vacuum()).unwrap(), 0.0);
    }

    #[test]
    fn strength_rejects_bad_states() {
        let v = CovarianceMatrix::vacuum().scaled(0.5);
        assert!(matches!(squeezing_strength(&v), Err(Error::InvalidState(_))));
        let v = sq(1.0, 0.3).scaled(1.1);
        assert!(matches!(squeezing_strength(&v), Err(Error::InconsistentState { .. })));
    }

    #[test]
    fn squeezed_input_needs_no_transform() {
        let t = solve_symmetric(&sq(1.0, 0.8)).unwrap();
        assert_eq!((t.r, t.theta), (0.0, 0.0));
    }

    #[test]
    fn solve_symmetric_reaches_squeezed_form() {
        let v = sym(&sq(0.8, 1.3), LocalSymplectic::new(0.6, 0.4, 0.0));
        let t = solve_symmetric(&v).unwrap();
        let w = sym(&v, t.local());
        let (a, b, c) = (w.a(), w.b(), w.c());
        assert!(anisotropy(&a) < 1e-10);
        assert!((a - b).amax() < 1e-10);
        assert!((c[(0, 0)] + c[(1, 1)]).abs() < 1e-10);
        assert!((c[(0, 1)] - c[(1, 0)]).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let v = apply_local(&sq(1.0, 0.5), &LocalSymplectic::new(0.4, 0.2, 0.0), &LocalSymplectic::identity());
        assert!(matches!(solve_symmetric(&v), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn phase_round_trip_signs() {
        assert_abs_diff_eq!(phase(&sq(1.0, FRAC_PI_3)).unwrap(), FRAC_PI_3, epsilon = 1e-10);
        assert_abs_diff_eq!(phase(&sq(1.0, -FRAC_PI_3)).unwrap(), -FRAC_PI_3, epsilon = 1e-10);
        assert_eq!(phase(&sq(1.0, PI)).unwrap(), PI);
        assert_eq!(phase(&CovarianceMatrix::vacuum()).unwrap(), 0.0);
    }

    #[test]
    fn phase_routes_agree_on_transformed_states() {
        for (k, &(r, theta)) in [(0.3, 0.2), (0.8, -1.0), (1.2, 2.5), (0.05, 0.7)].iter().enumerate() {
            let v = sym(&sq(0.4 + 0.3 * k as f64, -1.0 + 0.9 * k as f64), LocalSymplectic::new(r, theta, 0.0));
            let p = phase_extraction(&v).unwrap();
            assert!(!p.degenerate);
            assert_abs_diff_eq!(p.cos_balance.unwrap(), p.cos_block, epsilon = 1e-8);
            assert_abs_diff_eq!(wrap_angle(p.phi + p.transformed_phase - PI), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn associated_transform_lands_on_squeezed_form() {
        let v = sym(&sq(0.7, 0.4), LocalSymplectic::new(0.9, -0.6, 0.0));
        let p = phase_extraction(&v).unwrap();
        let (s1, s2) = associated_transform(&v).unwrap();
        let w = apply_local(&v, &s1, &s2);
        let target = covariance_of_squeezed(SqueezedParams::new(p.s, p.phi).unwrap());
        assert!(w.max_abs_diff(&target) < 1e-10);
    }

    #[test]
    fn balance_vanishes_at_extracted_phase_only() {
        let v = sym(&sq(1.0, 2.0), LocalSymplectic::new(0.5, 1.0, 0.0));
        let b = balance_residuals(&v).unwrap();
        assert!(b.residual_a.abs() < 1e-10 && b.residual_b.abs() < 1e-10);
        let p = phase_extraction(&v).unwrap();
        let off = balance_residuals_at(&v, p.s, p.phi + 0.3);
        assert!(off.residual_a.abs().max(off.residual_b.abs()) > 1e-3);
        let exact = balance_residuals(&sq(1.0, 0.5)).unwrap();
        assert!(exact.residual_a.abs() < 1e-15 && exact.residual_b.abs() < 1e-15);
    }

    #[test]
    fn standard_form_values() {
        let f = standard_form(&CovarianceMatrix::vacuum()).unwrap();
        assert_eq!((f.a, f.c1, f.c2), (0.5, 0.0, -0.0));
        let f = standard_form(&sq(1.0, FRAC_PI_4)).unwrap();
        assert_abs_diff_eq!(f.a, 2f64.cosh() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.c1, 2f64.sinh() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.a * f.a - f.c1 * f.c1, 0.25, epsilon = 1e-10);
        assert_eq!(f.c2, -f.c1);
        // standard form is the squeezed state at phase pi
        let std = sq(1.0, STANDARD_FORM_PHASE);
        assert_abs_diff_eq!(std.c()[(0, 0)], f.c1, epsilon = 1e-12);
    }

    #[test]
    fn entanglement_invariant_under_local_maps() {
        let v = sq(1.3, 0.2);
        let w = apply_local(&v, &LocalSymplectic::new(0.7, 0.3, -0.9), &LocalSymplectic::new(1.1, -2.0, 0.5));
        let e0 = entanglement(squeezing_strength(&v).unwrap()).unwrap();
        let e1 = entanglement(squeezing_strength(&w).unwrap()).unwrap();
        assert_abs_diff_eq!(e0, e1, epsilon = 1e-10);
    }

    #[test]
    fn common_rotation_shifts_phase_by_twice_the_angle() {
        // on an exact squeezed form an equal rotation chi is again squeezed, phase + 2 chi
        let v = sq(0.9, 0.3);
        let chi = 0.4;
        let w = sym(&v, LocalSymplectic::new(0.0, chi, 0.0));
        assert_abs_diff_eq!(phase(&w).unwrap(), 0.3 + 2.0 * chi, epsilon = 1e-10);
    }
}
