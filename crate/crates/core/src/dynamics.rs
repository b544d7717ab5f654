//! Free center-of-mass evolution `q_i -> q_i + t (p1 + p2)` of an initial
//! two-mode squeezed state.
//!
//! Direct propagation of the covariance is exact for this quadratic flow and
//! is the reference for every closed form below.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::measures::{entanglement, epr_dispersion, epr_dispersion_closed};
use crate::oracles::golden_section;
use crate::state::{covariance_of_squeezed, wrap_angle, ComplexCoeffs, CovarianceMatrix, SqueezedParams};
use crate::transform::phase_extraction;

const SINGULAR_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub s0: f64,
    pub phi0: f64,
    pub t_max: f64,
    /// Number of samples, uniformly spanning `[0, t_max]` inclusive.
    pub steps: usize,
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        EvolutionSpec { s0: 1.0, phi0: PI / 2.0, t_max: 10.0, steps: 500 }
    }
}

impl EvolutionSpec {
    pub fn new(s0: f64, phi0: f64, t_max: f64, steps: usize) -> Result<Self> {
        let spec = EvolutionSpec { s0, phi0, t_max, steps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 >= 0.0) || !self.s0.is_finite() {
            return Err(Error::InvalidSpec(format!("s0 = {} must be finite and >= 0", self.s0)));
        }
        if !self.phi0.is_finite() {
            return Err(Error::InvalidSpec(format!("phi0 = {} must be finite", self.phi0)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidSpec(format!("t_max = {} must be finite and > 0", self.t_max)));
        }
        if self.steps < 2 {
            return Err(Error::InvalidSpec(format!("steps = {} must be >= 2", self.steps)));
        }
        Ok(())
    }

    pub fn initial(&self) -> SqueezedParams {
        SqueezedParams { s: self.s0, phi: wrap_angle(self.phi0) }
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.steps {
            self.t_max
        } else {
            self.t_max * k as f64 / (self.steps - 1) as f64
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub theta: f64,
    pub r: f64,
    pub s: f64,
    pub phi: f64,
    /// nats
    pub entanglement: f64,
    pub epr_dispersion: f64,
    pub q1_variance: f64,
}

impl TrajectoryRecord {
    pub const FIELDS: [&'static str; 8] =
        ["t", "theta", "r", "s", "phi", "entanglement", "epr_dispersion", "q1_variance"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub spec: EvolutionSpec,
    pub records: Vec<TrajectoryRecord>,
}

impl TimeSeries {
    pub fn column(&self, f: impl Fn(&TrajectoryRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }
}

/// Which expression to use for `dF/dphi` in the printed closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseDerivative {
    /// `-2 sin(phi) sinh(2s)`, the derivative of `F = 2(cosh 2s + cos phi sinh 2s)`.
    Exact,
    /// `-sin(phi) sinh(2s)`, as quoted alongside the closed forms.
    InText,
}

impl PhaseDerivative {
    pub fn value(self, s0: f64, phi0: f64) -> f64 {
        let k = match self {
            PhaseDerivative::Exact => 2.0,
            PhaseDerivative::InText => 1.0,
        };
        -k * phi0.sin() * (2.0 * s0).sinh()
    }
}

/// Closed-form coefficient flow, with `lambda0 = -tanh(s0) exp(i phi0)`:
///
/// ```text
/// alpha(t) = (1 + l^2 + i t (1 - l^2)) / (1 - l^2 + 2 i t (1 - l)^2)
/// gamma(t) = -(2 l + i t (1 - l^2)) / (1 - l^2 + 2 i t (1 - l)^2)
/// ```
pub fn coeffs_at_time(s0: f64, phi0: f64, t: f64) -> Result<ComplexCoeffs> {
    let params = SqueezedParams::new(s0, phi0)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidSpec(format!("t = {t} must be finite and >= 0")));
    }
    let l = params.lambda();
    let one = Complex64::new(1.0, 0.0);
    let it = Complex64::new(0.0, t);
    let den = one - l * l + it * 2.0 * (one - l) * (one - l);
    if den.norm() < SINGULAR_EPS {
        return Err(Error::SingularEvolution(den.norm()));
    }
    let alpha = (one + l * l + it * (one - l * l)) / den;
    let gamma = -(l * 2.0 + it * (one - l * l)) / den;
    ComplexCoeffs::symmetric(alpha, gamma)
}

/// `[1 + 2 i t (1 - l) / (1 + l)]^-1`, the predicted `alpha^2 - gamma^2`.
pub fn squeezed_defect_closed(s0: f64, phi0: f64, t: f64) -> Complex64 {
    let l = SqueezedParams { s: s0, phi: phi0 }.lambda();
    let one = Complex64::new(1.0, 0.0);
    (one + Complex64::new(0.0, 2.0 * t) * (one - l) / (one + l)).inv()
}

/// Symplectic matrix of the flow in `(q1, p1, q2, p2)` ordering.
pub fn com_propagator(t: f64) -> Matrix4<f64> {
    Matrix4::new(
        1.0, t, 0.0, t, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, t, 1.0, t, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// `V(t) = E(t) V0 E(t)^T`.
pub fn propagate(v0: &CovarianceMatrix, t: f64) -> CovarianceMatrix {
    let e = com_propagator(t);
    CovarianceMatrix::from_matrix_unchecked(e * v0.matrix() * e.transpose())
}

pub fn initial_covariance(s0: f64, phi0: f64) -> CovarianceMatrix {
    covariance_of_squeezed(SqueezedParams { s: s0, phi: wrap_angle(phi0) })
}

/// `<q1^2>_t = cosh(2 s0)/2 + 2 t dF/dphi + t^2 F / 2` as printed, with the
/// exact derivative.
pub fn q_variance_closed(s0: f64, phi0: f64, t: f64) -> f64 {
    q_variance_closed_with(s0, phi0, t, PhaseDerivative::Exact)
}

pub fn q_variance_closed_with(s0: f64, phi0: f64, t: f64, d: PhaseDerivative) -> f64 {
    let f = epr_dispersion_closed(SqueezedParams { s: s0, phi: phi0 });
    (2.0 * s0).cosh() / 2.0 + 2.0 * t * d.value(s0, phi0) + t * t * f / 2.0
}

/// `<q1^2>_t` from the propagated covariance.
pub fn q_variance_oracle(s0: f64, phi0: f64, t: f64) -> f64 {
    propagate(&initial_covariance(s0, phi0), t).get(0, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimumTime {
    /// `-2 (dF/dphi) / F` with the exact derivative.
    pub closed_form: f64,
    /// Same, with the in-text derivative.
    pub closed_form_in_text: f64,
    /// Argmin of the propagated `<q1^2>_t`.
    pub oracle: f64,
    pub contractive: bool,
}

/// Time of minimum `<q1^2>_t`. Outside the contractive regime
/// (`sin phi0 <= 0`) every value is 0 and `contractive` is false.
pub fn t_min(s0: f64, phi0: f64) -> MinimumTime {
    let f = epr_dispersion_closed(SqueezedParams { s: s0, phi: phi0 });
    if !(phi0.sin() > 1e-15) || s0 == 0.0 {
        return MinimumTime { closed_form: 0.0, closed_form_in_text: 0.0, oracle: 0.0, contractive: false };
    }
    let closed = |d: PhaseDerivative| -2.0 * d.value(s0, phi0) / f;

    let v0 = initial_covariance(s0, phi0);
    let var = |t: f64| propagate(&v0, t).get(0, 0);
    let q0 = var(0.0);
    let mut hi = 1.0;
    while var(hi) <= q0 && hi < 1e12 {
        hi *= 2.0;
    }
    let n = 2000;
    let k = (0..=n)
        .map(|k| (k, var(hi * k as f64 / n as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .unwrap_or(0usize);
    let lo = hi * k.saturating_sub(1) as f64 / n as f64;
    let up = hi * (k + 1).min(n) as f64 / n as f64;
    let oracle = golden_section(var, lo, up, 1e-12);
    MinimumTime {
        closed_form: closed(PhaseDerivative::Exact),
        closed_form_in_text: closed(PhaseDerivative::InText),
        oracle,
        contractive: true,
    }
}

/// `cos theta(0) = sinh(2 s0) sin(phi0) / sqrt(cosh 4 s0 + cos phi0 sinh 4 s0)`;
/// the returned angle is in `[0, pi]`.
pub fn theta_initial(s0: f64, phi0: f64) -> f64 {
    let den = ((4.0 * s0).cosh() + phi0.cos() * (4.0 * s0).sinh()).sqrt();
    ((2.0 * s0).sinh() * phi0.sin() / den).clamp(-1.0, 1.0).acos()
}

/// Associated phase just after the flow starts, `pi - phi0 - 2 theta(0)`.
pub fn phase_initial(s0: f64, phi0: f64) -> f64 {
    if s0 == 0.0 {
        return 0.0;
    }
    wrap_angle(PI - phi0 - 2.0 * theta_initial(s0, phi0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezingClosed {
    /// Value of `s(t)` from the printed relation; the oracle value when the
    /// relation leaves the `arccosh` domain.
    pub value: f64,
    /// Printed right-hand side for `cosh^2(2 s(t))`.
    pub cosh2_squared: f64,
    /// False when the right-hand side is below 1.
    pub in_domain: bool,
    /// `1/2 arccosh(2 sqrt(det A(t)))` from propagation.
    pub oracle: f64,
}

/// `cosh^2(2 s(t)) = cosh^2(2 s0) + 2 t dF/dphi cosh(2 s0) + t^2 (1 + (dF/dphi)^2 / 4)`
/// as printed, with the in-text derivative.
pub fn squeezing_closed(s0: f64, phi0: f64, t: f64) -> SqueezingClosed {
    squeezing_closed_with(s0, phi0, t, PhaseDerivative::InText)
}

pub fn squeezing_closed_with(s0: f64, phi0: f64, t: f64, d: PhaseDerivative) -> SqueezingClosed {
    let ch = (2.0 * s0).cosh();
    let df = d.value(s0, phi0);
    let rhs = ch * ch + 2.0 * t * df * ch + t * t * (1.0 + df * df / 4.0);
    let oracle = squeezing_oracle(s0, phi0, t);
    let in_domain = rhs >= 1.0;
    let value = if in_domain { 0.5 * rhs.sqrt().acosh() } else { oracle };
    SqueezingClosed { value, cosh2_squared: rhs, in_domain, oracle }
}

pub fn squeezing_oracle(s0: f64, phi0: f64, t: f64) -> f64 {
    let a = propagate(&initial_covariance(s0, phi0), t).a();
    0.5 * (2.0 * a.determinant().max(0.25).sqrt()).acosh()
}

fn unwrap_near(prev: f64, x: f64) -> f64 {
    let k = ((prev - x) / (2.0 * PI)).round();
    x + 2.0 * PI * k
}

pub fn trajectory(spec: &EvolutionSpec) -> Result<TimeSeries> {
    trajectory_with(spec, Exec::default())
}

/// Samples are computed independently (in parallel under [`Exec::Parallel`])
/// and `theta`, `phi` are then unwrapped in time order.
pub fn trajectory_with(spec: &EvolutionSpec, exec: Exec) -> Result<TimeSeries> {
    spec.validate()?;
    let params = spec.initial();
    let v0 = covariance_of_squeezed(params);

    let theta0 = theta_initial(params.s, params.phi);
    let first = TrajectoryRecord {
        t: 0.0,
        theta: theta0,
        r: 0.0,
        s: params.s,
        phi: phase_initial(params.s, params.phi),
        entanglement: entanglement(params.s)?,
        epr_dispersion: epr_dispersion(&v0),
        q1_variance: v0.get(0, 0),
    };

    let rest = exec.map(spec.steps - 1, |i| {
        let t = spec.time(i + 1);
        let v = propagate(&v0, t);
        let sample = || -> Result<TrajectoryRecord> {
            let p = phase_extraction(&v)?;
            Ok(TrajectoryRecord {
                t,
                theta: p.transform.theta,
                r: p.transform.r,
                s: p.s,
                phi: p.phi,
                entanglement: entanglement(p.s)?,
                epr_dispersion: epr_dispersion(&v),
                q1_variance: v.get(0, 0),
            })
        };
        sample().map_err(|e| e.at_time(t))
    });

    let mut records = Vec::with_capacity(spec.steps);
    records.push(first);
    for rec in rest {
        let mut rec = rec?;
        let prev = records.last().expect("non-empty");
        rec.theta = unwrap_near(prev.theta, rec.theta);
        rec.phi = unwrap_near(prev.phi, rec.phi);
        records.push(rec);
    }
    Ok(TimeSeries { spec: *spec, records })
}
