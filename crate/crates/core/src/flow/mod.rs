//! Laplacian flow `∂φ/∂t = Δφ` of closed invariant G2 forms.
//!
//! The full flow evolves all 35 coefficients of a 3-form; the two-variable
//! systems in [`reduced`] are integrated separately so the two can be
//! compared rather than one assumed from the other.

mod bracket;
mod io;
mod quadrature;
mod reduced;
pub mod rk;

use serde::Serialize;

use crate::curvature::{nilsoliton_solve, ricci, riemann_of, RicciTensor, SolitonCertificate};
use crate::error::{Error, Result};
use crate::exterior::{basis, KForm};
use crate::g2::{laplacian_with_metric, metric_from_g2, CLOSED_TOL};
use crate::liealg::{ce_differential, LieAlgebra};
use crate::Metric;

pub use bracket::{bracket_flow, bracket_flow_along, normalize_frame, BracketState, FrameAnsatz};
pub use io::{write_csv, write_events_json, write_json, CsvColumns};
pub use quadrature::{gauss_kronrod_adaptive, t_min_quadrature};
pub use reduced::{
    full_flow_matches_reduction, phi4_from_reduced, phi6_from_reduced, reduced_field,
    reduced_flow_n4, reduced_flow_n6, reduced_flow_with, reduced_from_form, ReducedModel, ReducedState,
    ReducedTrajectory,
};
pub use rk::{StepControl, StepMeta};

/// Number of coefficients of an invariant 3-form.
pub const N_COEFFS: usize = 35;

/// Default relative tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Samples per decade of `|t|` in the default output grid.
pub const SAMPLES_PER_DECADE: usize = 512;

/// `|t|` of the first logarithmic sample after `t = 0`.
pub const FIRST_LOG_SAMPLE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    /// Coefficients in lexicographic multi-index order (`c_123, c_124, …`).
    pub c: [f64; N_COEFFS],
}

impl FlowState {
    pub fn from_form(t: f64, phi: &KForm) -> Result<Self> {
        if phi.degree() != 3 {
            return Err(Error::DegreeMismatch {
                expected: 3,
                found: phi.degree(),
            });
        }
        let dense = phi.to_dense();
        let mut c = [0.0; N_COEFFS];
        c.copy_from_slice(&dense);
        Ok(FlowState { t, c })
    }

    pub fn form(&self) -> KForm {
        KForm::from_dense(3, &self.c).expect("35 coefficients")
    }

    /// Coefficient of `e^{ijk}` given as digits, e.g. `coeff(123)`.
    pub fn coeff(&self, digits: u32) -> f64 {
        self.form().coeff_digits(digits)
    }

    pub fn metric(&self) -> Result<Metric> {
        metric_from_g2(&self.form())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Blowup,
    Completed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowEvent {
    pub kind: EventKind,
    pub t: f64,
    pub reason: String,
    /// Last accepted state; for a blow-up this is the closest approach.
    pub last: FlowState,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<FlowState>,
    pub step_meta: Vec<StepMeta>,
    pub events: Vec<FlowEvent>,
}

impl Trajectory {
    pub fn blowup(&self) -> Option<&FlowEvent> {
        self.events.iter().find(|e| e.kind == EventKind::Blowup)
    }

    pub fn completed(&self) -> bool {
        self.blowup().is_none()
    }

    /// The sample at exactly time `t`, if one was requested.
    pub fn at(&self, t: f64) -> Option<&FlowState> {
        self.samples.iter().find(|s| s.t == t)
    }

    pub fn last(&self) -> Option<&FlowState> {
        self.samples.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sampling {
    /// `t = 0`, then [`SAMPLES_PER_DECADE`] logarithmically spaced times
    /// from `|t| = FIRST_LOG_SAMPLE` to `|t_end|`, then `t_end`.
    LogDense { t_end: f64 },
    /// Explicit times, strictly monotone away from 0; `0` is prepended.
    Times(Vec<f64>),
}

impl Sampling {
    pub fn times(&self) -> Result<Vec<f64>> {
        match self {
            Sampling::LogDense { t_end } => Ok(log_dense_times(*t_end)),
            Sampling::Times(ts) => {
                let mut out = vec![0.0];
                for &t in ts {
                    if !t.is_finite() {
                        return Err(Error::Invalid(format!("sample time {t} is not finite")));
                    }
                    if t == 0.0 && out.len() == 1 {
                        continue;
                    }
                    let prev = *out.last().expect("nonempty");
                    let ok = if ts.iter().any(|&s| s < 0.0) {
                        t < prev
                    } else {
                        t > prev
                    };
                    if !ok {
                        return Err(Error::Invalid(
                            "sample times must be strictly monotone and on one side of 0".into(),
                        ));
                    }
                    out.push(t);
                }
                Ok(out)
            }
        }
    }
}

fn log_dense_times(t_end: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    if t_end == 0.0 || !t_end.is_finite() {
        return out;
    }
    let dir = t_end.signum();
    let end = t_end.abs();
    if end > FIRST_LOG_SAMPLE {
        let decades = (end / FIRST_LOG_SAMPLE).log10();
        let n = (decades * SAMPLES_PER_DECADE as f64).ceil() as usize;
        for i in 0..n {
            let t = FIRST_LOG_SAMPLE * 10f64.powf(i as f64 / SAMPLES_PER_DECADE as f64);
            if t < end {
                out.push(dir * t);
            }
        }
    }
    out.push(t_end);
    out
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub sampling: Sampling,
    pub control: StepControl,
}

impl FlowOptions {
    pub fn new(t_end: f64) -> Self {
        FlowOptions {
            sampling: Sampling::LogDense { t_end },
            control: StepControl::default(),
        }
    }

    pub fn at_times(times: &[f64]) -> Self {
        FlowOptions {
            sampling: Sampling::Times(times.to_vec()),
            control: StepControl::default(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.control.rtol = tol;
        self
    }
}

/// `Δφ` for the coefficients in `state`, with the metric induced by `φ`.
pub fn flow_rhs(state: &FlowState, alg: &LieAlgebra) -> Result<[f64; N_COEFFS]> {
    let phi = state.form();
    let g = metric_from_g2(&phi)?;
    let lap = laplacian_with_metric(&phi, alg, &g);
    let mut out = [0.0; N_COEFFS];
    for (slot, idx) in out.iter_mut().zip(basis(3)) {
        *slot = lap.coeff(*idx);
    }
    Ok(out)
}

struct FullFlow<'a> {
    alg: &'a LieAlgebra,
}

impl rk::OdeSystem for FullFlow<'_> {
    fn dim(&self) -> usize {
        N_COEFFS
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> std::result::Result<(), String> {
        let mut c = [0.0; N_COEFFS];
        c.copy_from_slice(y);
        let d = flow_rhs(&FlowState { t, c }, self.alg).map_err(|e| e.to_string())?;
        dy.copy_from_slice(&d);
        Ok(())
    }
}

/// Checks the preconditions on an initial form: degree 3, closed, positive.
pub fn check_initial_form(alg: &LieAlgebra, phi0: &KForm) -> Result<()> {
    if phi0.degree() != 3 {
        return Err(Error::DegreeMismatch {
            expected: 3,
            found: phi0.degree(),
        });
    }
    let dphi = ce_differential(phi0, alg).max_abs();
    if dphi > CLOSED_TOL {
        return Err(Error::NotClosed(dphi));
    }
    metric_from_g2(phi0)?;
    Ok(())
}

/// Integrates from `t = 0` to `t_end` on the default logarithmic grid.
pub fn integrate(alg: &LieAlgebra, phi0: &KForm, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(alg, phi0, &FlowOptions::new(t_end).with_tol(tol))
}

pub fn integrate_with(alg: &LieAlgebra, phi0: &KForm, opts: &FlowOptions) -> Result<Trajectory> {
    check_initial_form(alg, phi0)?;
    if opts.control.rtol.is_nan() || opts.control.rtol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let times = opts.sampling.times()?;
    let y0 = FlowState::from_form(0.0, phi0)?.c;
    let sol = rk::integrate(&FullFlow { alg }, 0.0, &y0, &times, &opts.control)
        .map_err(|e| Error::Invalid(format!("initial state rejected: {e}")))?;
    let to_state = |t: f64, y: &[f64]| {
        let mut c = [0.0; N_COEFFS];
        c.copy_from_slice(y);
        FlowState { t, c }
    };
    let samples = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| to_state(t, y))
        .collect();
    let last = to_state(sol.last_t, &sol.last_y);
    let event = match sol.termination {
        rk::Termination::Completed => FlowEvent {
            kind: EventKind::Completed,
            t: sol.last_t,
            reason: "reached final time".into(),
            last,
        },
        rk::Termination::Blowup { t, reason } => FlowEvent {
            kind: EventKind::Blowup,
            t,
            reason,
            last,
        },
    };
    Ok(Trajectory {
        samples,
        step_meta: sol.steps,
        events: vec![event],
    })
}

/// Largest `‖dφ(t)‖∞` over the samples.
pub fn closedness_drift(traj: &Trajectory, alg: &LieAlgebra) -> f64 {
    traj.samples
        .iter()
        .map(|s| ce_differential(&s.form(), alg).max_abs())
        .fold(0.0, f64::max)
}

/// The algebra written in a coframe orthonormal for the metric of `phi`.
pub fn orthonormal_bracket(alg: &LieAlgebra, phi: &KForm) -> Result<LieAlgebra> {
    let g = metric_from_g2(phi)?;
    alg.change_coframe(&g.orthonormal_coframe())
}

/// Ricci tensor of `g(t)` in the orthonormal coframe of each sample.
pub fn ricci_along_flow(traj: &Trajectory, alg: &LieAlgebra) -> Result<Vec<RicciTensor>> {
    traj.samples
        .iter()
        .map(|s| ricci(&orthonormal_bracket(alg, &s.form())?, &Metric::identity()))
        .collect()
}

/// `(t, ‖R(g(t))‖∞)` with components taken in an orthonormal coframe.
pub fn curvature_decay(traj: &Trajectory, alg: &LieAlgebra) -> Result<Vec<(f64, f64)>> {
    traj.samples
        .iter()
        .map(|s| {
            let on = orthonormal_bracket(alg, &s.form())?;
            Ok((s.t, riemann_of(&on, &Metric::identity())?.sup_norm()))
        })
        .collect()
}

/// Nilsoliton certificates of `g(t)` in the orthonormal coframe of each sample.
pub fn soliton_along_flow(traj: &Trajectory, alg: &LieAlgebra) -> Result<Vec<SolitonCertificate>> {
    traj.samples
        .iter()
        .map(|s| nilsoliton_solve(&orthonormal_bracket(alg, &s.form())?, &Metric::identity()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::catalog::{lookup, phi12, phi2, phi_std};

    #[test]
    fn rhs_examples() {
        let n2 = &lookup("n2").unwrap().algebra;
        let d = flow_rhs(&FlowState::from_form(0.0, &phi2()).unwrap(), n2).unwrap();
        for (i, idx) in basis(3).iter().enumerate() {
            let want = if idx.mask() == 0b111 { 2.0 } else { 0.0 };
            assert!((d[i] - want).abs() < 1e-14, "{idx:?}: {}", d[i]);
        }
        let n1 = LieAlgebra::abelian("n1");
        let d = flow_rhs(&FlowState::from_form(0.0, &phi_std()).unwrap(), &n1).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
        let n12 = &lookup("n12-orthonormal").unwrap().algebra;
        let st = FlowState::from_form(0.0, &phi12()).unwrap();
        let lap = KForm::from_dense(3, &flow_rhs(&st, n12).unwrap()).unwrap();
        assert!((lap.coeff_digits(135) - 0.25).abs() < 1e-14);
        assert!((lap.coeff_digits(236) + 0.25).abs() < 1e-14);
        assert_eq!(lap.pruned(1e-14).num_terms(), 2);
    }

    #[test]
    fn log_grid() {
        let ts = log_dense_times(10.0);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[1], 1e-3);
        assert_eq!(*ts.last().unwrap(), 10.0);
        assert_eq!(ts.len(), 2 + 4 * SAMPLES_PER_DECADE);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        let back = log_dense_times(-1.0);
        assert!(back.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(log_dense_times(1e-4), vec![0.0, 1e-4]);
    }

    #[test]
    fn sampling_rejects_non_monotone() {
        assert!(Sampling::Times(vec![1.0, 0.5]).times().is_err());
        assert!(Sampling::Times(vec![-1.0, 1.0]).times().is_err());
        assert_eq!(Sampling::Times(vec![0.0, 1.0]).times().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn non_closed_initial_form_is_rejected() {
        let n2 = &lookup("n2").unwrap().algebra;
        let bad = &phi2() + &KForm::from_digits(3, &[(567, 0.5)]).unwrap();
        assert!(matches!(integrate(n2, &bad, 1.0, 1e-10), Err(Error::NotClosed(_))));
    }
}
