//! Obstructions to closed G2 forms inducing a prescribed metric.
//!
//! [`obs1_check`] decides whether `(ι_X γ)³` vanishes for every closed
//! 3-form `γ` by expanding the cubic exactly over a basis of `Z³`;
//! [`su3_residual`] is the compatibility `α ∧ β = 0` of the SU(3)-structure
//! induced on `X^⊥`; [`infeasibility_search`] looks for closed forms whose
//! metric is a target metric by multi-start Levenberg–Marquardt. A search
//! that fails is evidence, never proof, that no such form exists.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{basis, contract, pullback, wedge, FrameVector, KForm, MultiIndex, DIM};
use crate::g2::{bilinear_b_dense, bilinear_b_gradient, metric_from_g2, DEGENERACY_RATIO};
use crate::liealg::{ce_differential, LieAlgebra, NULL_SPACE_TOL};
use crate::linalg::{self, Matrix7};
use crate::Metric;

/// Residual returned by [`constraint_residual`] when `B` is singular.
pub const DEGENERATE_SENTINEL: f64 = 1e6;

/// Weight of the negative-eigenvalue penalty in [`constraint_residual`].
pub const PENALTY_WEIGHT: f64 = 10.0;

/// A search point is feasible when its residual is below this.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Tolerance of the independent checks applied to a feasible point.
pub const VERIFY_TOL: f64 = 1e-9;

/// A basis of the closed 3-forms `Z³`, in reduced row-echelon form over
/// the lexicographic basis of `Λ³`: basis form `a` has coefficient 1 at
/// `pivots[a]` and 0 at every other pivot, so the coordinates of a closed
/// form are its pivot coefficients.
#[derive(Clone, Debug)]
pub struct ClosedFamily {
    pub basis: Vec<KForm>,
    pub pivots: Vec<MultiIndex>,
    dense: DMatrix<f64>,
}

impl ClosedFamily {
    pub fn new(alg: &LieAlgebra) -> Self {
        let d3 = alg.differential_matrix(3);
        let null = linalg::null_space(d3, NULL_SPACE_TOL);
        let (rows, pivots) = rref_rows(&null.transpose());
        let n = basis(3).len();
        let dense = DMatrix::from_fn(n, rows.len(), |i, a| rows[a][i]);
        let forms = rows
            .iter()
            .map(|r| KForm::from_dense(3, r).expect("35 coefficients"))
            .collect();
        ClosedFamily {
            basis: forms,
            pivots: pivots.into_iter().map(|p| basis(3)[p]).collect(),
            dense,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Dense `35 × dim` matrix whose columns are the basis forms.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// `Σ c_a β_a`.
    pub fn form(&self, c: &[f64]) -> KForm {
        KForm::from_dense(3, self.dense_form(c).as_slice()).expect("35 coefficients")
    }

    fn dense_form(&self, c: &[f64]) -> DVector<f64> {
        assert_eq!(c.len(), self.dim(), "coordinate count");
        &self.dense * DVector::from_column_slice(c)
    }

    /// Coordinates of a closed form; errors when `phi` is not in `Z³`.
    pub fn coordinates(&self, phi: &KForm) -> Result<Vec<f64>> {
        let c: Vec<f64> = self.pivots.iter().map(|&p| phi.coeff(p)).collect();
        let err = (&self.form(&c) - phi).max_abs();
        if err > 1e-9 * phi.max_abs().max(1.0) {
            return Err(Error::NotClosed(err));
        }
        Ok(c)
    }
}

/// Row-reduces `m` choosing, column by column, the largest remaining
/// entry as pivot; returns the nonzero reduced rows and pivot columns.
fn rref_rows(m: &DMatrix<f64>) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect();
    let scale = m.amax().max(1.0);
    let mut pivots = Vec::new();
    let mut done = 0;
    for col in 0..m.ncols() {
        if done == rows.len() {
            break;
        }
        let (best, val) = (done..rows.len())
            .map(|r| (r, rows[r][col].abs()))
            .fold((done, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-9 * scale {
            continue;
        }
        rows.swap(done, best);
        let p = rows[done][col];
        for x in rows[done].iter_mut() {
            *x /= p;
        }
        let pivot_row = rows[done].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != done && row[col] != 0.0 {
                let f = row[col];
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        pivots.push(col);
        done += 1;
    }
    rows.truncate(done);
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if x.abs() < 1e-13 {
                *x = 0.0;
            }
        }
    }
    (rows, pivots)
}

/// A nonzero monomial `c_a c_b c_c` of `(ι_X γ)³`, labelled by the pivot
/// indices of the three coordinates, with its 6-form coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicMonomial {
    pub vars: [MultiIndex; 3],
    pub coeff: KForm,
}

/// Expands `(ι_X γ)³` for `γ = Σ c_a β_a` over `Z³(alg)` and returns the
/// monomials whose 6-form coefficient exceeds a relative tolerance.
pub fn obs1_cubic(alg: &LieAlgebra, x: &FrameVector) -> Result<Vec<CubicMonomial>> {
    obs1_cubic_in(&ClosedFamily::new(alg), x)
}

pub fn obs1_cubic_in(family: &ClosedFamily, x: &FrameVector) -> Result<Vec<CubicMonomial>> {
    if x.is_zero() {
        return Err(Error::ZeroVector);
    }
    let alphas: Vec<KForm> = family
        .basis
        .iter()
        .map(|b| contract(x, b))
        .collect::<Result<_>>()?;
    let scale = alphas.iter().map(KForm::max_abs).fold(0.0, f64::max);
    let eps = 1e-10 * scale.powi(3);
    let squares: Vec<Vec<KForm>> = (0..alphas.len())
        .map(|a| (a..alphas.len()).map(|b| wedge(&alphas[a], &alphas[b])).collect())
        .collect();
    let mut out = Vec::new();
    for a in 0..alphas.len() {
        for b in a..alphas.len() {
            let ab = &squares[a][b - a];
            if ab.is_zero(0.0) {
                continue;
            }
            for c in b..alphas.len() {
                // Number of orderings of the multiset {a, b, c}.
                let mult = match (a == b, b == c) {
                    (true, true) => 1.0,
                    (true, false) | (false, true) => 3.0,
                    (false, false) => 6.0,
                };
                let term = wedge(ab, &alphas[c]).scaled(mult);
                if term.max_abs() > eps {
                    out.push(CubicMonomial {
                        vars: [family.pivots[a], family.pivots[b], family.pivots[c]],
                        coeff: term.pruned(eps),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// True iff `(ι_X γ)³ = 0` identically over `γ ∈ Z³(alg)`, in which case
/// `alg` has no closed G2 form at all.
pub fn obs1_check(alg: &LieAlgebra, x: &FrameVector) -> Result<bool> {
    Ok(obs1_cubic(alg, x)?.is_empty())
}

/// The 5-form `α ∧ β` with `α = ι_X φ`, `η = g(X, ·)`, `β = φ − α ∧ η`.
#[derive(Clone, Debug)]
pub struct Su3Residual {
    pub form: KForm,
    /// Components of the form on `X^⊥` in an orthonormal frame completing
    /// `X`; all other components vanish for unit `X`.
    pub components: [f64; 6],
}

impl Su3Residual {
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .fold(self.form.max_abs(), |m, x| m.max(x.abs()))
    }
}

pub fn su3_residual(phi: &KForm, x: &FrameVector, g: &Metric) -> Result<Su3Residual> {
    if x.is_zero() {
        return Err(Error::ZeroVector);
    }
    let norm2 = g.inner(&x.0, &x.0);
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit(norm2));
    }
    let alpha = contract(x, phi)?;
    let gx = g.matrix() * nalgebra::Vector::from(x.0);
    let eta = KForm::from_terms(1, (1..=DIM).map(|i| (MultiIndex::single(i), gx[i - 1])))?;
    let beta = phi - &wedge(&alpha, &eta);
    let form = wedge(&alpha, &beta);
    // Orthonormal frame v_1 = X, v_2..v_7; coefficients in the dual coframe
    // are `pullback(form, V)` with `V` holding the v_k as columns.
    let v = orthonormal_completion(x, g);
    let local = pullback(&form, &v);
    let mut components = [0.0; 6];
    for (slot, k) in components.iter_mut().zip(2..=DIM) {
        let idx = MultiIndex::from_mask(0b111_1110 & !(1 << (k - 1)));
        *slot = local.coeff(idx);
    }
    Ok(Su3Residual { form, components })
}

/// Gram–Schmidt in `g` starting from `X` and then `e_1, …, e_7`.
fn orthonormal_completion(x: &FrameVector, g: &Metric) -> Matrix7 {
    let gm = g.matrix();
    let ip = |a: &nalgebra::Vector<f64, nalgebra::Const<7>, _>, b: &nalgebra::Vector<f64, nalgebra::Const<7>, _>| {
        (a.transpose() * gm * b)[(0, 0)]
    };
    let mut vs: Vec<nalgebra::SVector<f64, 7>> = vec![nalgebra::SVector::from(x.0)];
    for i in 0..DIM {
        if vs.len() == DIM {
            break;
        }
        let mut w = nalgebra::SVector::<f64, 7>::zeros();
        w[i] = 1.0;
        for v in &vs {
            let c = ip(v, &w);
            w -= v * c;
        }
        let n = ip(&w, &w).sqrt();
        if n > 1e-8 {
            vs.push(w / n);
        }
    }
    Matrix7::from_columns(&vs)
}

/// The 42 residuals `α ∧ β` for `X = e_1, …, e_7` (six components each);
/// requires `g(e_i, e_i) = 1`.
pub fn su3_system(phi: &KForm, g: &Metric) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(42);
    for i in 1..=DIM {
        out.extend(su3_residual(phi, &FrameVector::basis(i), g)?.components);
    }
    Ok(out)
}

/// `B / (det B)^{1/9}` without the positivity test, or `None` if `B` is
/// singular.
fn normalized_b(b: &Matrix7) -> Option<(Matrix7, f64)> {
    let eig = linalg::symmetric_eigenvalues(b);
    let largest = eig[0].abs().max(eig[DIM - 1].abs());
    let smallest = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if largest.is_nan() || largest == 0.0 || smallest <= DEGENERACY_RATIO * largest {
        return None;
    }
    let det = b.determinant();
    let s = 1.0 / linalg::ninth_root(det);
    Some((b * s, s))
}

fn residual_of_dense(c35: &[f64], target: &Matrix7) -> f64 {
    let b = bilinear_b_dense(c35);
    let Some((g, _)) = normalized_b(&b) else {
        return DEGENERATE_SENTINEL;
    };
    let lmin = linalg::symmetric_eigenvalues(&g)[0];
    (g - target).norm_squared() + PENALTY_WEIGHT * (-lmin).max(0.0)
}

/// `‖G_φ − target‖²_F + w·max(0, −λ_min(G_φ))` for `φ = Σ c_a β_a`, where
/// `G_φ = B/(det B)^{1/9}`; [`DEGENERATE_SENTINEL`] when `B` is singular.
pub fn constraint_residual(family: &ClosedFamily, c: &[f64], target: &Metric) -> f64 {
    residual_of_dense(family.dense_form(c).as_slice(), target.matrix())
}

/// Upper-triangular entries of `G − T` (off-diagonal ones scaled by √2, so
/// the squared norm is the Frobenius norm) and their Jacobian in `c`.
fn residual_and_jacobian(
    family: &ClosedFamily,
    c: &[f64],
    target: &Matrix7,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let phi = family.dense_form(c);
    let b = bilinear_b_dense(phi.as_slice());
    let (g, s) = normalized_b(&b)?;
    let binv = b.try_inverse()?;
    let db = bilinear_b_gradient(phi.as_slice());
    // dG = s (dB − tr(B⁻¹ dB) B / 9)
    let dg: Vec<Matrix7> = db
        .iter()
        .map(|d| (d - b * ((binv * d).trace() / 9.0)) * s)
        .collect();
    let m = family.dim();
    let mut r = DVector::zeros(28);
    let mut jac = DMatrix::zeros(28, m);
    let fam = family.matrix();
    let mut row = 0;
    for i in 0..DIM {
        for j in i..DIM {
            let w = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            r[row] = w * (g[(i, j)] - target[(i, j)]);
            for a in 0..m {
                let mut acc = 0.0;
                for (k, dgk) in dg.iter().enumerate() {
                    let f = fam[(k, a)];
                    if f != 0.0 {
                        acc += f * dgk[(i, j)];
                    }
                }
                jac[(row, a)] = w * acc;
            }
            row += 1;
        }
    }
    Some((r, jac))
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Stop at the first verified feasible point.
    pub stop_on_feasible: bool,
    pub max_iterations: usize,
}

impl SearchOptions {
    pub fn new(restarts: usize, seed: u64) -> Self {
        SearchOptions {
            restarts,
            seed,
            stop_on_feasible: true,
            max_iterations: 200,
        }
    }
}

/// Independent checks of a reconstructed form.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verification {
    pub closedness: f64,
    pub positive: bool,
    pub metric_error: f64,
    pub passed: bool,
}

pub fn verify_candidate(alg: &LieAlgebra, phi: &KForm, target: &Metric) -> Verification {
    let closedness = ce_differential(phi, alg).max_abs();
    let (positive, metric_error) = match metric_from_g2(phi) {
        Ok(g) => (true, (g.matrix() - target.matrix()).amax()),
        Err(_) => (false, f64::INFINITY),
    };
    Verification {
        closedness,
        positive,
        metric_error,
        passed: closedness < VERIFY_TOL && positive && metric_error < VERIFY_TOL,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub algebra: String,
    pub dim_z3: usize,
    /// Restarts actually run (fewer than requested after an early stop).
    pub restarts: usize,
    pub seed: u64,
    pub best_residual: f64,
    pub best_point: Vec<f64>,
    pub feasible: bool,
    pub verification: Option<Verification>,
    pub note: String,
}

impl SearchReport {
    pub fn verdict(&self) -> &'static str {
        if self.feasible {
            "feasible"
        } else {
            "no feasible point found"
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

/// Levenberg–Marquardt from `c`; returns the final point and residual.
fn levenberg_marquardt(
    family: &ClosedFamily,
    mut c: Vec<f64>,
    target: &Matrix7,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let m = family.dim();
    let objective = |c: &[f64]| residual_of_dense(family.dense_form(c).as_slice(), target);
    let mut f = objective(&c);
    let mut mu = 1e-3;
    let mut stalled = 0;
    for _ in 0..max_iter {
        if f < 1e-28 {
            break;
        }
        let Some((r, jac)) = residual_and_jacobian(family, &c, target) else {
            break;
        };
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.amax() < 1e-18 {
            break;
        }
        let mut accepted = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += mu * (jtj[(i, i)] + 1e-12);
            }
            let Some(chol) = Cholesky::new(a) else {
                mu *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let ft = objective(&trial);
            if ft < f {
                stalled = if f - ft < 1e-10 * f { stalled + 1 } else { 0 };
                c = trial;
                f = ft;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted || stalled >= 5 {
            break;
        }
    }
    (c, f)
}

/// Multi-start search for `c` with `G_φ = target`, `φ = Σ c_a β_a ∈ Z³`.
pub fn infeasibility_search(alg: &LieAlgebra, target: &Metric, restarts: usize, seed: u64) -> SearchReport {
    infeasibility_search_with(alg, target, &SearchOptions::new(restarts, seed))
}

pub fn infeasibility_search_with(alg: &LieAlgebra, target: &Metric, opts: &SearchOptions) -> SearchReport {
    let family = ClosedFamily::new(alg);
    let m = family.dim();
    let mut best = (Vec::new(), f64::INFINITY);
    let mut verification = None;
    let mut feasible = false;
    let mut done = 0;
    if m > 0 {
        let normal = Normal::new(0.0, (7.0 / m as f64).sqrt()).expect("positive variance");
        for k in 0..opts.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let start: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();
            let (c, f) = levenberg_marquardt(&family, start, target.matrix(), opts.max_iterations);
            done = k + 1;
            if f < best.1 {
                best = (c.clone(), f);
            }
            if f < FEASIBILITY_TOL {
                let v = verify_candidate(alg, &family.form(&c), target);
                if v.passed && (!feasible || f <= best.1) {
                    feasible = true;
                    best = (c, f);
                    verification = Some(v);
                    if opts.stop_on_feasible {
                        break;
                    }
                }
            }
        }
    }
    let note = if feasible {
        "a closed G2 form inducing the target metric was found and independently verified".to_string()
    } else {
        format!(
            "no feasible point in {done} restarts; the best residual is numerical evidence, not a proof, that no closed G2 form induces the target metric"
        )
    };
    SearchReport {
        algebra: alg.name().to_string(),
        dim_z3: m,
        restarts: done,
        seed: opts.seed,
        best_residual: best.1,
        best_point: best.0,
        feasible,
        verification,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::catalog::{lookup, phi2, phi_std};

    #[test]
    fn family_is_a_basis_of_closed_forms() {
        let n2 = &lookup("n2").unwrap().algebra;
        let fam = ClosedFamily::new(n2);
        for (b, p) in fam.basis.iter().zip(&fam.pivots) {
            assert!(ce_differential(b, n2).is_zero(1e-12));
            assert_eq!(b.coeff(*p), 1.0);
        }
        let c = fam.coordinates(&phi2()).unwrap();
        assert!((fam.form(&c) - phi2()).is_zero(1e-14));
        let not_closed = KForm::from_digits(3, &[(567, 1.0)]).unwrap();
        assert!(fam.coordinates(&not_closed).is_err());
    }

    #[test]
    fn abelian_obs1_is_false() {
        let n1 = LieAlgebra::abelian("n1");
        assert!(!obs1_check(&n1, &FrameVector::basis(1)).unwrap());
        assert!(matches!(
            obs1_check(&n1, &FrameVector([0.0; 7])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn su3_examples() {
        let id = Metric::identity();
        assert!(su3_residual(&phi_std(), &FrameVector::basis(7), &id).unwrap().max_abs() < 1e-15);
        assert!(su3_residual(&phi2(), &FrameVector::basis(1), &id).unwrap().max_abs() < 1e-15);
        // Every term of e123 + e145 contains e1, so β = 0 there.
        let gamma = KForm::from_digits(3, &[(123, 1.0), (145, 1.0)]).unwrap();
        assert!(su3_residual(&gamma, &FrameVector::basis(1), &id).unwrap().max_abs() == 0.0);
        let gamma = KForm::from_digits(3, &[(123, 1.0), (456, 1.0)]).unwrap();
        let res = su3_residual(&gamma, &FrameVector::basis(1), &id).unwrap();
        assert_eq!(res.form.coeff(MultiIndex::from_digits(23456).unwrap()), 1.0);
        assert!(matches!(
            su3_residual(&phi2(), &FrameVector::basis(1).scaled(2.0), &id),
            Err(Error::NotUnit(_))
        ));
    }

    #[test]
    fn jacobian_matches_differences() {
        let n2 = &lookup("n2").unwrap().algebra;
        let fam = ClosedFamily::new(n2);
        let c: Vec<f64> = (0..fam.dim()).map(|k| 0.3 + 0.1 * k as f64).collect();
        let t = Matrix7::identity();
        let (_, jac) = residual_and_jacobian(&fam, &c, &t).unwrap();
        let h = 1e-6;
        for a in 0..fam.dim() {
            let mut cp = c.clone();
            cp[a] += h;
            let mut cm = c.clone();
            cm[a] -= h;
            let fd = (residual_and_jacobian(&fam, &cp, &t).unwrap().0
                - residual_and_jacobian(&fam, &cm, &t).unwrap().0)
                / (2.0 * h);
            assert!((&fd - jac.column(a)).amax() < 1e-6 * fd.amax().max(1.0), "column {a}");
        }
    }
}
