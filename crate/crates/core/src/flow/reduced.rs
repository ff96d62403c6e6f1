//! The two-variable system governing the flows from `φ₄` on `n4` and from
//! `φ₆` on `n6`, and the 3-forms it parametrizes.
//!
//! Both flows reduce to the same vector field on
//! `Ω = {0 < u < 2^{1/3}, v > 0}` with `u(0) = v(0) = 1`; its trajectory
//! through `(1, 1)` lies on `v = 1/√(u(2 − u³))`.

use super::rk::{self, OdeSystem, StepControl, Termination};
use super::{FlowOptions, Trajectory};
use crate::error::{Error, Result};
use crate::exterior::KForm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedState {
    pub u: f64,
    pub v: f64,
}

impl ReducedState {
    pub const INITIAL: ReducedState = ReducedState { u: 1.0, v: 1.0 };

    pub fn in_domain(&self) -> bool {
        self.u > 0.0 && self.u * self.u * self.u < 2.0 && self.v > 0.0
    }

    /// `v·√(u(2 − u³))`, equal to 1 along the trajectory through `(1, 1)`.
    pub fn first_integral(&self) -> f64 {
        self.v * (self.u * (2.0 - self.u.powi(3))).sqrt()
    }

    /// `|v − 1/√(u(2 − u³))|`.
    pub fn curve_residual(&self) -> f64 {
        (self.v - 1.0 / (self.u * (2.0 - self.u.powi(3))).sqrt()).abs()
    }
}

/// `(u', v')` at `(u, v)`.
pub fn reduced_field(s: ReducedState) -> (f64, f64) {
    let ReducedState { u, v } = s;
    let u3 = u * u * u;
    let du = (2.0 / 3.0) * (2.0 - u3) / (u3 * v * v * v);
    let dv = -(2.0 / 3.0) * (1.0 - 2.0 * u3) / (u3 * u * v * v);
    (du, dv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedModel {
    N4,
    N6,
}

impl ReducedModel {
    pub fn for_key(key: &str) -> Option<Self> {
        match key {
            "n4" => Some(ReducedModel::N4),
            "n6" => Some(ReducedModel::N6),
            _ => None,
        }
    }

    pub fn form(self, s: ReducedState) -> KForm {
        match self {
            ReducedModel::N4 => phi4_from_reduced(s),
            ReducedModel::N6 => phi6_from_reduced(s),
        }
    }
}

struct Field;

impl OdeSystem for Field {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> std::result::Result<(), String> {
        let s = ReducedState { u: y[0], v: y[1] };
        if !s.in_domain() {
            return Err(format!("left the phase domain at (u, v) = ({}, {})", s.u, s.v));
        }
        let (du, dv) = reduced_field(s);
        dy[0] = du;
        dy[1] = dv;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReducedTrajectory {
    pub points: Vec<(f64, ReducedState)>,
    /// Time and reason of an early stop, if any.
    pub blowup: Option<(f64, String)>,
    /// Last accepted state.
    pub last: (f64, ReducedState),
}

impl ReducedTrajectory {
    pub fn at(&self, t: f64) -> Option<ReducedState> {
        self.points.iter().find(|(s, _)| *s == t).map(|(_, p)| *p)
    }
}

fn integrate_reduced(s0: ReducedState, times: &[f64], ctl: &StepControl) -> Result<ReducedTrajectory> {
    if !s0.in_domain() {
        return Err(Error::Invalid(format!(
            "initial state ({}, {}) is outside the phase domain",
            s0.u, s0.v
        )));
    }
    let sol = rk::integrate(&Field, 0.0, &[s0.u, s0.v], times, ctl).map_err(Error::Invalid)?;
    let points = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| (t, ReducedState { u: y[0], v: y[1] }))
        .collect();
    let blowup = match sol.termination {
        Termination::Completed => None,
        Termination::Blowup { t, reason } => Some((t, reason)),
    };
    Ok(ReducedTrajectory {
        points,
        blowup,
        last: (
            sol.last_t,
            ReducedState {
                u: sol.last_y[0],
                v: sol.last_y[1],
            },
        ),
    })
}

/// The reduced flow for `n4`, sampled on the default logarithmic grid.
pub fn reduced_flow_n4(s0: ReducedState, t_end: f64) -> Result<ReducedTrajectory> {
    reduced_flow_with(s0, &FlowOptions::new(t_end))
}

/// The reduced flow for `n6`: the same vector field as for `n4`.
pub fn reduced_flow_n6(s0: ReducedState, t_end: f64) -> Result<ReducedTrajectory> {
    reduced_flow_with(s0, &FlowOptions::new(t_end))
}

pub fn reduced_flow_with(s0: ReducedState, opts: &FlowOptions) -> Result<ReducedTrajectory> {
    integrate_reduced(s0, &opts.sampling.times()?, &opts.control)
}

/// `φ(t)` on `n4` in terms of `(u, v)`.
pub fn phi4_from_reduced(s: ReducedState) -> KForm {
    let ReducedState { u, v } = s;
    let p = u * u * v;
    let q = u * v * v;
    let terms = [
        (124, 0.25 * (-p * p + 2.0 * p - 4.0 * q - 1.0)),
        (127, 0.5 * (p - 1.0)),
        (135, p),
        (167, 1.0),
        (236, -1.0),
        (245, 0.5 * (p - 1.0)),
        (257, 1.0),
        (347, 1.0),
        (456, -1.0),
    ];
    KForm::from_digits(3, &terms).expect("valid digits")
}

/// `φ(t)` on `n6` in terms of `(u, v)`.
pub fn phi6_from_reduced(s: ReducedState) -> KForm {
    let ReducedState { u, v } = s;
    let p = u * u * v;
    let q = u * v * v;
    let h = 0.5 * (1.0 - p);
    let terms = [
        (123, 0.25 * (1.0 + 4.0 * q - 2.0 * p + p * p)),
        (347, 1.0),
        (356, 1.0),
        (167, 1.0),
        (246, -1.0),
        (257, 1.0),
        (145, p),
        (136, h),
        (127, -h),
    ];
    KForm::from_digits(3, &terms).expect("valid digits")
}

/// Recovers `(u, v)` from two coefficients of a form in the family:
/// `u²v` is read off `e^{135}` (`n4`) or `e^{145}` (`n6`), and `uv²` from
/// `e^{124}` or `e^{123}`.
pub fn reduced_from_form(model: ReducedModel, phi: &KForm) -> Result<ReducedState> {
    let (p, q) = match model {
        ReducedModel::N4 => {
            let p = phi.coeff_digits(135);
            (p, (-(p - 1.0).powi(2) - 4.0 * phi.coeff_digits(124)) / 4.0)
        }
        ReducedModel::N6 => {
            let p = phi.coeff_digits(145);
            (p, (4.0 * phi.coeff_digits(123) - (1.0 - p).powi(2)) / 4.0)
        }
    };
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Invalid(format!(
            "form is outside the reduced family (u²v = {p}, uv² = {q})"
        )));
    }
    // u³ = (u²v)²/(uv²), v³ = (uv²)²/(u²v).
    Ok(ReducedState {
        u: (p * p / q).cbrt(),
        v: (q * q / p).cbrt(),
    })
}

/// Compares a full trajectory from `φ₄` (resp. `φ₆`) with the reduced
/// description. Returns the larger of two maxima over samples: the
/// coefficient mismatch between each sample and the family member at its
/// own extracted `(u, v)`, and the mismatch between each sample and the
/// family member at an independent reduced integration on the same times.
pub fn full_flow_matches_reduction(traj: &Trajectory, model: ReducedModel) -> Result<f64> {
    let mut times: Vec<f64> = traj.times();
    if times.first() == Some(&0.0) {
        times.remove(0);
    }
    let mut worst = 0.0f64;
    for s in &traj.samples {
        let phi = s.form();
        let uv = reduced_from_form(model, &phi)?;
        worst = worst.max((&phi - &model.form(uv)).max_abs());
    }
    if times.is_empty() {
        return Ok(worst);
    }
    let reduced = reduced_flow_with(ReducedState::INITIAL, &FlowOptions::at_times(&times))?;
    for s in &traj.samples {
        let Some(uv) = (if s.t == 0.0 {
            Some(ReducedState::INITIAL)
        } else {
            reduced.at(s.t)
        }) else {
            return Err(Error::Invalid(format!(
                "reduced integration stopped before t = {}",
                s.t
            )));
        };
        worst = worst.max((&s.form() - &model.form(uv)).max_abs());
    }
    Ok(worst)
}
