//! Dormand–Prince 5(4) with proportional-integral step-size control.
//!
//! Output is produced by landing steps exactly on the requested sample
//! times; the step proposed by the controller is kept across such clamped
//! steps so dense sampling does not throttle the integrator.

/// A right-hand side that may refuse a state (left the domain, lost
/// positivity); refusals shrink the step.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String>;
}

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than this end the integration with a blow-up event.
    pub h_min: f64,
    /// States with a component above this magnitude end the integration.
    pub max_abs: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-14,
            max_abs: 1e12,
            max_steps: 5_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            alpha: 0.17,
            beta: 0.04,
        }
    }
}

impl StepControl {
    pub fn with_rtol(rtol: f64) -> Self {
        StepControl {
            rtol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMeta {
    pub t: f64,
    pub h: f64,
    /// Scaled error norm of the accepted step (≤ 1).
    pub err: f64,
    /// Rejections before this step was accepted.
    pub rejected: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    Blowup { t: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<StepMeta>,
    pub termination: Termination,
    /// Last accepted time and state (may lie past the final sample).
    pub last_t: f64,
    pub last_y: Vec<f64>,
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Error coefficients: fifth-order weights minus embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

fn combo(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (a, k) in terms {
            s += a * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// One trial step; `st.k[0]` must hold `f(t, y)`. On success `st.y_new`
/// and `st.k[6] = f(t + h, y_new)` are filled and the scaled error norm is
/// returned.
fn try_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    ctl: &StepControl,
) -> Result<f64, String> {
    let [k1, k2, k3, k4, k5, k6, k7] = &mut st.k;
    let tmp = &mut st.tmp;
    combo(tmp, y, h, &[(A21, k1)]);
    sys.rhs(t + C2 * h, tmp, k2)?;
    combo(tmp, y, h, &[(A31, k1), (A32, k2)]);
    sys.rhs(t + C3 * h, tmp, k3)?;
    combo(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    sys.rhs(t + C4 * h, tmp, k4)?;
    combo(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    sys.rhs(t + C5 * h, tmp, k5)?;
    combo(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    sys.rhs(t + h, tmp, k6)?;
    combo(
        &mut st.y_new,
        y,
        h,
        &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
    );
    sys.rhs(t + h, &st.y_new, k7)?;
    let mut acc = 0.0;
    for i in 0..y.len() {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = ctl.atol + ctl.rtol * y[i].abs().max(st.y_new[i].abs());
        acc += (e / sc) * (e / sc);
    }
    Ok((acc / y.len() as f64).sqrt())
}

fn scaled_norm(v: &[f64], y: &[f64], ctl: &StepControl) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(x, yi)| {
            let r = x / (ctl.atol + ctl.rtol * yi.abs());
            r * r
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Initial step guess along the lines of Hairer–Wanner's `hinit`.
fn initial_step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], f0: &[f64], dir: f64, ctl: &StepControl) -> f64 {
    let d0 = scaled_norm(y, y, ctl);
    let d1 = scaled_norm(f0, y, ctl);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    if sys.rhs(t + dir * h0, &y1, &mut f1).is_err() {
        return h0 * 1e-3;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&diff, y, ctl) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates from `(t0, y0)` through `sample_times`, which must be
/// strictly monotone and all on the same side of `t0`. The initial state is
/// recorded first when `sample_times[0] == t0`.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    ctl: &StepControl,
) -> Result<OdeSolution, String> {
    let n = sys.dim();
    assert_eq!(y0.len(), n, "state dimension");
    let mut sol = OdeSolution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        steps: Vec::new(),
        termination: Termination::Completed,
        last_t: t0,
        last_y: y0.to_vec(),
    };
    let Some(&t_last) = sample_times.last() else {
        return Ok(sol);
    };
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
        y_new: vec![0.0; n],
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    sys.rhs(t, &y, &mut st.k[0])?;
    let mut targets = sample_times.iter().copied().peekable();
    while let Some(&s) = targets.peek() {
        if s == t0 {
            sol.times.push(t0);
            sol.states.push(y.clone());
            targets.next();
        } else {
            break;
        }
    }
    let mut h = initial_step(sys, t, &y, &st.k[0], dir, ctl);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut rejected = 0u32;
    let mut last_failure = String::new();
    let mut steps = 0usize;
    while let Some(&target) = targets.peek() {
        if steps >= ctl.max_steps {
            sol.termination = Termination::Blowup {
                t,
                reason: "maximum number of steps exceeded".into(),
            };
            break;
        }
        if h < ctl.h_min || t + dir * h == t {
            let mut reason = format!("step size underflow (h = {h:.3e})");
            if !last_failure.is_empty() {
                reason.push_str(&format!("; last refusal: {last_failure}"));
            }
            sol.termination = Termination::Blowup { t, reason };
            break;
        }
        let remaining = (target - t) * dir;
        let (h_try, hits) = if h >= remaining { (remaining, true) } else { (h, false) };
        steps += 1;
        match try_step(sys, t, &y, dir * h_try, &mut st, ctl) {
            Err(reason) => {
                last_failure = reason;
                h = h_try * 0.25;
                last_rejected = true;
                rejected += 1;
            }
            Ok(err) if !err.is_finite() || err > 1.0 => {
                let fac = if err.is_finite() {
                    (ctl.safety * err.powf(-0.2)).max(ctl.fac_min)
                } else {
                    ctl.fac_min
                };
                h = h_try * fac;
                last_rejected = true;
                rejected += 1;
            }
            Ok(err) => {
                let mut fac = ctl.safety * err.max(1e-10).powf(-ctl.alpha) * err_old.powf(ctl.beta);
                fac = fac.clamp(ctl.fac_min, ctl.fac_max);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                err_old = err.max(1e-4);
                let h_next = h_try * fac;
                t = if hits { target } else { t + dir * h_try };
                std::mem::swap(&mut y, &mut st.y_new);
                st.k.swap(0, 6);
                sol.steps.push(StepMeta {
                    t,
                    h: h_try,
                    err,
                    rejected,
                });
                rejected = 0;
                last_rejected = false;
                last_failure.clear();
                // Keep the unclamped proposal after landing on a sample.
                h = if hits { h_next.max(h) } else { h_next };
                if y.iter().any(|x| !x.is_finite() || x.abs() > ctl.max_abs) {
                    sol.termination = Termination::Blowup {
                        t,
                        reason: format!("coefficient magnitude above {:e}", ctl.max_abs),
                    };
                    break;
                }
                if hits {
                    sol.times.push(t);
                    sol.states.push(y.clone());
                    targets.next();
                }
            }
        }
    }
    sol.last_t = t;
    sol.last_y = y;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
            dy[0] = -y[0];
            Ok(())
        }
    }

    /// y' = 1/(2y), y(0) = 1: y = √(1 + t), singular at t = −1.
    struct Sqrt;
    impl OdeSystem for Sqrt {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
            if y[0] <= 0.0 {
                return Err("y <= 0".into());
            }
            dy[0] = 0.5 / y[0];
            Ok(())
        }
    }

    #[test]
    fn exponential_decay() {
        let times = [0.0, 0.5, 1.0, 2.0, 5.0];
        let sol = integrate(&Decay, 0.0, &[1.0], &times, &StepControl::default()).unwrap();
        assert_eq!(sol.times, times);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - (-t).exp()).abs() < 1e-10 * (-t).exp() + 1e-12);
        }
        assert_eq!(sol.termination, Termination::Completed);
    }

    #[test]
    fn backward_singularity_is_located() {
        let sol = integrate(&Sqrt, 0.0, &[1.0], &[-2.0], &StepControl::default()).unwrap();
        match sol.termination {
            Termination::Blowup { t, .. } => assert!((t + 1.0).abs() < 1e-8, "t = {t}"),
            other => panic!("{other:?}"),
        }
        assert!(sol.times.is_empty());
    }
}
