//! Numerical local transform for general (not necessarily symmetric) pure
//! states: damped least squares over the six per-mode parameters with
//! random restarts.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::state::{covariance_of_squeezed, wrap_angle, CovarianceMatrix, SqueezedParams};
use crate::transform::{apply_local, block_diag, LocalSymplectic, DEGENERACY_EPS};

type Params = SVector<f64, 6>;
type Residuals = SVector<f64, 7>;
type Jacobian = SMatrix<f64, 7, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Success threshold on the max-entry deviation from squeezed form.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { starts: 16, seed: 0x5eed_2f0d, max_iterations: 300, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformSolution {
    pub s1: LocalSymplectic,
    pub s2: LocalSymplectic,
    pub squeezed: SqueezedParams,
    /// Max entry of `|S V S^T - V_sq(s, phi)|`.
    pub residual: f64,
    /// Index of the winning start.
    pub start: usize,
}

fn symplectic_and_derivatives(r: f64, theta: f64, psi: f64) -> [Matrix2<f64>; 4] {
    let (ch, sh) = (r.cosh(), r.sinh());
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let rot = Matrix2::new(ct, -st, st, ct);
    let drot = Matrix2::new(-st, -ct, ct, -st);
    let refl = Matrix2::new(cp, -sp, -sp, -cp);
    let drefl = Matrix2::new(-sp, -cp, -cp, sp);
    [rot * ch + refl * sh, rot * sh + refl * ch, drot * ch, drefl * sh]
}

fn residual_vector(w: &Matrix4<f64>) -> Residuals {
    Residuals::from_column_slice(&[
        w[(0, 0)] - w[(1, 1)],
        2.0 * w[(0, 1)],
        w[(2, 2)] - w[(3, 3)],
        2.0 * w[(2, 3)],
        w[(0, 0)] - w[(2, 2)],
        w[(0, 2)] + w[(1, 3)],
        w[(0, 3)] - w[(1, 2)],
    ])
}

struct Problem<'a> {
    v: &'a Matrix4<f64>,
}

impl Problem<'_> {
    fn eval(&self, x: &Params) -> (Residuals, Jacobian) {
        let m1 = symplectic_and_derivatives(x[0], x[1], x[2]);
        let m2 = symplectic_and_derivatives(x[3], x[4], x[5]);
        let l = block_diag(&m1[0], &m2[0]);
        let w = l * self.v * l.transpose();
        let mut jac = Jacobian::zeros();
        for k in 0..6 {
            let z = Matrix2::zeros();
            let dl = if k < 3 { block_diag(&m1[k + 1], &z) } else { block_diag(&z, &m2[k - 2]) };
            let t = dl * self.v * l.transpose();
            jac.set_column(k, &residual_vector(&(t + t.transpose())));
        }
        (residual_vector(&w), jac)
    }

    fn cost(&self, x: &Params) -> f64 {
        let l = block_diag(
            &crate::transform::symplectic_matrix(x[0], x[1], x[2]),
            &crate::transform::symplectic_matrix(x[3], x[4], x[5]),
        );
        residual_vector(&(l * self.v * l.transpose())).norm_squared()
    }
}

/// Levenberg-Marquardt with Nielsen's damping update.
fn levenberg_marquardt(problem: &Problem, mut x: Params, max_iterations: usize) -> Params {
    let (mut f, mut j) = problem.eval(&x);
    let mut cost = f.norm_squared();
    let scale = problem.v.amax().max(1.0);
    let mut jtj = j.transpose() * j;
    let mut mu = 1e-3 * jtj.diagonal().max();
    let mut nu = 2.0;

    for _ in 0..max_iterations {
        if cost < (1e-15 * scale).powi(2) {
            break;
        }
        let g = j.transpose() * f;
        let mut lhs = jtj;
        for i in 0..6 {
            lhs[(i, i)] += mu;
        }
        let Some(chol) = lhs.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let step = chol.solve(&(-g));
        if step.norm() < 1e-15 * (x.norm() + 1e-15) {
            break;
        }
        let trial = x + step;
        let trial_cost = problem.cost(&trial);
        let predicted = -(step.dot(&g) * 2.0 + (j * step).norm_squared());
        let rho = if predicted > 0.0 { (cost - trial_cost) / predicted } else { -1.0 };
        if trial_cost < cost {
            x = trial;
            (f, j) = problem.eval(&x);
            cost = f.norm_squared();
            jtj = j.transpose() * j;
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
        }
        if !mu.is_finite() {
            break;
        }
    }
    x
}

fn isotropic(a: &Matrix2<f64>) -> bool {
    let h = a.trace() / 2.0;
    (a - Matrix2::identity() * h).norm() < DEGENERACY_EPS * a.trace()
}

/// Squeezed-form phase of an already-whitened matrix.
fn block_phase(w: &CovarianceMatrix) -> f64 {
    let c = w.c();
    let c12 = 0.5 * (c[(0, 1)] + c[(1, 0)]);
    let c11 = 0.5 * (c[(0, 0)] - c[(1, 1)]);
    if c12 == 0.0 && c11 == 0.0 {
        return 0.0;
    }
    wrap_angle((-c12).atan2(-c11))
}

fn strength_of(w: &CovarianceMatrix) -> f64 {
    let k = 0.25 * (w.a().trace() + w.b().trace());
    0.5 * (2.0 * k).max(1.0).acosh()
}

/// Fix the gauge of a whitening pair: `r >= 0`, `psi = 0` per mode (unique
/// for an anisotropic marginal, identity for an isotropic one), then the same
/// phase convention as the symmetric closed form.
fn canonicalize(v: &CovarianceMatrix, x: &Params) -> (LocalSymplectic, LocalSymplectic, SqueezedParams) {
    let gauge = |raw: LocalSymplectic, isotropic_marginal: bool| {
        if isotropic_marginal {
            LocalSymplectic::identity()
        } else {
            let m = raw.with_nonnegative_r();
            m.then_rotate(m.psi)
        }
    };
    let iso_a = isotropic(&v.a());
    let iso_b = isotropic(&v.b());
    let m1 = gauge(LocalSymplectic::new(x[0], x[1], x[2]), iso_a);
    let m2 = gauge(LocalSymplectic::new(x[3], x[4], x[5]), iso_b);
    let w = apply_local(v, &m1, &m2);
    let s = strength_of(&w);
    let phi_t = block_phase(&w);
    if iso_a && iso_b {
        return (m1, m2, SqueezedParams { s, phi: phi_t });
    }
    let phi = wrap_angle(PI - phi_t);
    let chi = 0.5 * wrap_angle(phi - phi_t);
    (m1.then_rotate(chi), m2.then_rotate(chi), SqueezedParams { s, phi })
}

fn squeezed_form_residual(v: &CovarianceMatrix, s1: &LocalSymplectic, s2: &LocalSymplectic) -> (f64, SqueezedParams) {
    let w = apply_local(v, s1, s2);
    let params = SqueezedParams { s: strength_of(&w), phi: block_phase(&w) };
    (w.max_abs_diff(&covariance_of_squeezed(params)), params)
}

fn random_start(rng: &mut ChaCha8Rng) -> Params {
    let mut angle = || PI - rng.random::<f64>() * 2.0 * PI;
    let (t1, p1, t2, p2) = (angle(), angle(), angle(), angle());
    Params::from_column_slice(&[rng.random::<f64>() * 2.0, t1, p1, rng.random::<f64>() * 2.0, t2, p2])
}

/// Local transforms `(S1, S2)` bringing a pure `V` to squeezed form.
pub fn solve_general(v: &CovarianceMatrix, opts: &SolverOptions, exec: Exec) -> Result<TransformSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Params> = (0..opts.starts.max(1)).map(|_| random_start(&mut rng)).collect();
    let problem = Problem { v: v.matrix() };

    let results = exec.map(starts.len(), |i| {
        let x = levenberg_marquardt(&problem, starts[i], opts.max_iterations);
        let (raw, _) = squeezed_form_residual(
            v,
            &LocalSymplectic::new(x[0], x[1], x[2]),
            &LocalSymplectic::new(x[3], x[4], x[5]),
        );
        (raw, x)
    });

    let (start, &(best, x)) = results
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.total_cmp(&b.0).then(i.cmp(j)))
        .expect("at least one start");
    if !(best < opts.tolerance) {
        return Err(Error::SolverFailure { starts: starts.len(), best_residual: best });
    }

    let (s1, s2, squeezed) = canonicalize(v, &x);
    let (residual, realized) = squeezed_form_residual(v, &s1, &s2);
    if !(residual < opts.tolerance) {
        return Err(Error::SolverFailure { starts: starts.len(), best_residual: residual });
    }
    debug_assert!(crate::state::angle_distance(realized.phi, squeezed.phi) < 1e-6 || realized.s < 1e-6);
    Ok(TransformSolution { s1, s2, squeezed, residual, start })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::angle_distance;
    use crate::transform::{phase_extraction, squeezing_strength};
    use approx::assert_abs_diff_eq;

    fn sq(s: f64, phi: f64) -> CovarianceMatrix {
        covariance_of_squeezed(SqueezedParams::new(s, phi).unwrap())
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let v = apply_local(&sq(0.8, 0.4), &LocalSymplectic::new(0.3, 0.1, 0.5), &LocalSymplectic::new(-0.2, 1.0, 0.0));
        let p = Problem { v: v.matrix() };
        let x = Params::from_column_slice(&[0.2, -0.4, 0.9, 0.5, 1.3, -2.0]);
        let (_, j) = p.eval(&x);
        let h = 1e-6;
        for k in 0..6 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (p.eval(&xp).0 - p.eval(&xm).0) / (2.0 * h);
            assert!((fd - j.column(k)).amax() < 1e-7, "column {k}");
        }
    }

    #[test]
    fn recovers_strength_of_asymmetric_state() {
        let v = apply_local(
            &sq(1.0, PI / 3.0),
            &LocalSymplectic::new(0.4, 0.2, 0.0),
            &LocalSymplectic::new(-0.1, 0.5, 0.3),
        );
        let sol = solve_general(&v, &SolverOptions::default(), Exec::Sequential).unwrap();
        assert_abs_diff_eq!(sol.squeezed.s, 1.0, epsilon = 1e-6);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn squeezed_input_is_a_solution() {
        let v = sq(0.9, -1.2);
        let sol = solve_general(&v, &SolverOptions::default(), Exec::Sequential).unwrap();
        assert!(sol.residual < 1e-10);
        assert_abs_diff_eq!(sol.squeezed.phi, -1.2, epsilon = 1e-9);
        assert_eq!(sol.s1, LocalSymplectic::identity());
    }

    #[test]
    fn agrees_with_closed_form_on_symmetric_states() {
        let m = LocalSymplectic::new(0.7, -0.9, 0.0);
        let v = apply_local(&sq(1.1, 0.6), &m, &m);
        let sol = solve_general(&v, &SolverOptions::default(), Exec::Sequential).unwrap();
        let p = phase_extraction(&v).unwrap();
        assert_abs_diff_eq!(sol.squeezed.s, squeezing_strength(&v).unwrap(), epsilon = 1e-6);
        assert!(angle_distance(sol.squeezed.phi, p.phi) < 1e-6);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let v = apply_local(&sq(0.5, 2.0), &LocalSymplectic::new(1.0, 0.3, -0.3), &LocalSymplectic::new(0.2, 0.0, 1.0));
        let a = solve_general(&v, &SolverOptions::default(), Exec::Sequential).unwrap();
        let b = solve_general(&v, &SolverOptions::default(), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failure_reports_best_residual() {
        // mixed (non-pure) input cannot be brought to squeezed form
        let v = sq(0.8, 0.2).scaled(1.3);
        let v = apply_local(&v, &LocalSymplectic::new(0.5, 0.0, 0.0), &LocalSymplectic::identity());
        let mut opts = SolverOptions::default();
        opts.starts = 2;
        match solve_general(&v, &opts, Exec::Sequential) {
            Err(Error::SolverFailure { starts, best_residual }) => {
                assert_eq!(starts, 2);
                assert!(best_residual > 1e-8);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
