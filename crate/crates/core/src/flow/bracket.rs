//! Bracket flow: the Laplacian flow seen from a moving coframe in which
//! `φ(t)` keeps the coefficients of `φ(0)`, so that only the structure
//! constants evolve.

use nalgebra::{DMatrix, DVector};

use super::{integrate, Trajectory, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::exterior::{pullback, KForm};
use crate::liealg::{d_squared_residual, LieAlgebra};
use crate::linalg::Matrix7;

/// Which entries of the coframe change `x^i = Σ_j P_ij e^j` are solved for:
/// the diagonal and the listed `(i, j)` shears (1-based, `i ≠ j`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameAnsatz {
    pub shears: Vec<(usize, usize)>,
}

impl FrameAnsatz {
    pub fn diagonal() -> Self {
        FrameAnsatz { shears: Vec::new() }
    }

    /// `x^5 = f₅e^5 + h₁e^1, x^6 = f₆e^6 + h₂e^2, x^7 = f₇e^7 + h₃e^4` on `n4`
    /// and `x^6 = f₆e^6 + h₁e^2, x^7 = f₇e^7 + h₂e^3` on `n6`; purely diagonal
    /// otherwise.
    pub fn for_key(key: &str) -> Self {
        let shears = match key {
            "n4" => vec![(5, 1), (6, 2), (7, 4)],
            "n6" => vec![(6, 2), (7, 3)],
            _ => Vec::new(),
        };
        FrameAnsatz { shears }
    }

    fn n_params(&self) -> usize {
        7 + self.shears.len()
    }

    fn matrix(&self, x: &[f64]) -> Matrix7 {
        let mut p = Matrix7::zeros();
        for i in 0..7 {
            p[(i, i)] = x[i];
        }
        for (k, &(i, j)) in self.shears.iter().enumerate() {
            p[(i - 1, j - 1)] = x[7 + k];
        }
        p
    }

    fn params(&self, p: &Matrix7) -> Vec<f64> {
        let mut x: Vec<f64> = (0..7).map(|i| p[(i, i)]).collect();
        x.extend(self.shears.iter().map(|&(i, j)| p[(i - 1, j - 1)]));
        x
    }
}

fn residual(phi0: &KForm, target: &[f64], ansatz: &FrameAnsatz, x: &[f64]) -> DVector<f64> {
    let got = pullback(phi0, &ansatz.matrix(x)).to_dense();
    DVector::from_iterator(got.len(), got.iter().zip(target).map(|(a, b)| a - b))
}

/// Solves `pullback(phi0, P) = phi` for `P` of the given shape by
/// Gauss–Newton with a central-difference Jacobian, starting from `guess`.
pub fn normalize_frame(
    phi0: &KForm,
    phi: &KForm,
    ansatz: &FrameAnsatz,
    guess: &Matrix7,
) -> Result<Matrix7> {
    let target = phi.to_dense();
    let scale = phi.max_abs().max(1.0);
    let tol = 1e-13 * scale;
    let m = ansatz.n_params();
    let mut x = ansatz.params(guess);
    let mut r = residual(phi0, &target, ansatz, &x);
    for _ in 0..100 {
        let rn = r.amax();
        if rn <= tol {
            return Ok(ansatz.matrix(&x));
        }
        let mut jac = DMatrix::zeros(r.len(), m);
        for k in 0..m {
            let h = 1e-6 * x[k].abs().max(1e-3);
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let col = (residual(phi0, &target, ansatz, &xp) - residual(phi0, &target, ansatz, &xm)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac
            .svd(true, true)
            .solve(&(-&r), 1e-14)
            .map_err(|e| Error::FrameNormalization(e.to_string()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            let rt = residual(phi0, &target, ansatz, &trial);
            if rt.amax() < rn {
                x = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::FrameNormalization(format!(
                    "no descent from residual {rn:.3e}"
                )));
            }
        }
    }
    if r.amax() <= 1e-10 * scale {
        return Ok(ansatz.matrix(&x));
    }
    Err(Error::FrameNormalization(format!(
        "residual {:.3e} after 100 iterations",
        r.amax()
    )))
}

#[derive(Clone, Debug)]
pub struct BracketState {
    pub t: f64,
    /// The algebra written in the normalizing coframe.
    pub mu: LieAlgebra,
    /// The coframe change `x^i = Σ_j P_ij e^j` with `pullback(φ₀, P) = φ(t)`.
    pub frame: Matrix7,
}

impl BracketState {
    /// Largest absolute structure constant.
    pub fn norm(&self) -> f64 {
        self.mu.max_structure_constant()
    }

    pub fn jacobi_residual(&self) -> f64 {
        d_squared_residual(&self.mu)
    }
}

/// Integrates the Laplacian flow from `phi0` and normalizes every sample.
pub fn bracket_flow(alg: &LieAlgebra, phi0: &KForm, t_end: f64) -> Result<Vec<BracketState>> {
    let traj = integrate(alg, phi0, t_end, DEFAULT_TOL)?;
    bracket_flow_along(&traj, alg, phi0, &FrameAnsatz::for_key(alg.name()))
}

/// Normalizes each sample of an existing trajectory, warm-starting from the
/// previous frame.
pub fn bracket_flow_along(
    traj: &Trajectory,
    alg: &LieAlgebra,
    phi0: &KForm,
    ansatz: &FrameAnsatz,
) -> Result<Vec<BracketState>> {
    let mut guess = Matrix7::identity();
    let mut out = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let p = normalize_frame(phi0, &s.form(), ansatz, &guess)
            .map_err(|e| Error::FrameNormalization(format!("at t = {}: {e}", s.t)))?;
        guess = p;
        out.push(BracketState {
            t: s.t,
            mu: alg.change_coframe(&p)?,
            frame: p,
        });
    }
    Ok(out)
}
