//! Seven-dimensional Lie algebras given by the Chevalley–Eilenberg
//! differential on 1-forms.
//!
//! The bracket is recovered from `dα(X, Y) = −α([X, Y])`, so
//! `d e^k = Σ_{i<j} c^k_{ij} e^{ij}` means `[e_i, e_j] = −Σ_k c^k_{ij} e_k`.
//! Curvature quantities are quadratic in the bracket and do not see this
//! sign.

pub mod catalog;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{basis, contraction_sign, dim_lambda, shuffle_sign, KForm, MultiIndex, DIM};
use crate::linalg::{self, Matrix7};

pub use catalog::{catalog, CatalogEntry, Presentation, SolitonStatus};

/// Relative singular-value cutoff for null spaces of the differential.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Structure tensor: `[e_i, e_j] = Σ_k bracket[i][j][k] e_k` (0-based).
pub type BracketTensor = [[[f64; DIM]; DIM]; DIM];

#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    d1: Vec<KForm>,
    bracket: BracketTensor,
    dmats: OnceLock<Vec<DMatrix<f64>>>,
}

impl PartialEq for LieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.d1 == other.d1
    }
}

impl LieAlgebra {
    /// Builds an algebra from `d e^1, …, d e^7`. Jacobi is not checked here;
    /// see [`LieAlgebra::validated`].
    pub fn new(name: impl Into<String>, d1: Vec<KForm>) -> Result<Self> {
        if d1.len() != DIM {
            return Err(Error::Invalid(format!(
                "expected {DIM} structure equations, got {}",
                d1.len()
            )));
        }
        for f in &d1 {
            if f.degree() != 2 {
                return Err(Error::DegreeMismatch {
                    expected: 2,
                    found: f.degree(),
                });
            }
        }
        let mut bracket = [[[0.0; DIM]; DIM]; DIM];
        for (k, dk) in d1.iter().enumerate() {
            for (idx, c) in dk.terms() {
                let mut ax = idx.axes();
                let i = ax.next().expect("2-form index") - 1;
                let j = ax.next().expect("2-form index") - 1;
                bracket[i][j][k] = -c;
                bracket[j][i][k] = c;
            }
        }
        Ok(LieAlgebra {
            name: name.into(),
            d1,
            bracket,
            dmats: OnceLock::new(),
        })
    }

    /// Compact constructor: `terms[k-1]` lists `(ij, c)` pairs of `d e^k`.
    pub fn from_digits(name: impl Into<String>, terms: [&[(u32, f64)]; DIM]) -> Result<Self> {
        let d1 = terms
            .iter()
            .map(|t| KForm::from_digits(2, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, d1)
    }

    /// Like [`LieAlgebra::new`] but rejects structure equations with
    /// `d² ≠ 0`, naming the worst 3-form component.
    pub fn validated(name: impl Into<String>, d1: Vec<KForm>, tol: f64) -> Result<Self> {
        let alg = Self::new(name, d1)?;
        alg.check_jacobi(tol)?;
        Ok(alg)
    }

    pub fn abelian(name: impl Into<String>) -> Self {
        Self::new(name, vec![KForm::zero(2); DIM]).expect("valid degrees")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.name = name.into();
        out
    }

    /// `d e^k` for 1-based `k`.
    pub fn d_of_basis(&self, k: usize) -> &KForm {
        &self.d1[k - 1]
    }

    pub fn structure_equations(&self) -> &[KForm] {
        &self.d1
    }

    pub fn bracket_tensor(&self) -> &BracketTensor {
        &self.bracket
    }

    /// Largest structure constant in absolute value.
    pub fn max_structure_constant(&self) -> f64 {
        self.d1.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    /// `[X, Y]` for frame-component vectors.
    pub fn bracket(&self, x: &[f64; DIM], y: &[f64; DIM]) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..DIM {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..DIM {
                    out[k] += x[i] * y[j] * self.bracket[i][j][k];
                }
            }
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        self.d1.iter().all(|f| f.num_terms() == 0)
    }

    /// Matrix of `d: Λ^k → Λ^{k+1}` in lexicographic bases.
    pub fn differential_matrix(&self, k: usize) -> &DMatrix<f64> {
        let mats = self.dmats.get_or_init(|| {
            (0..=DIM)
                .map(|deg| {
                    let rows = dim_lambda(deg + 1);
                    let cols = dim_lambda(deg);
                    let mut m = DMatrix::zeros(rows, cols);
                    if rows > 0 {
                        for (c, &idx) in basis(deg).iter().enumerate() {
                            let img = self.d_basis_form(idx);
                            for (j, v) in img.terms() {
                                m[(j.rank(), c)] = v;
                            }
                        }
                    }
                    m
                })
                .collect()
        });
        &mats[k]
    }

    fn d_basis_form(&self, idx: MultiIndex) -> KForm {
        let deg = idx.degree();
        let mut buf = [0.0f64; 128];
        // d(e^{i_1…i_k}) = Σ_p (−1)^{p-1} e^{i_1…} ∧ d e^{i_p} ∧ e^{…i_k}
        for axis in idx.axes() {
            let rest = idx.mask() & !(1u8 << (axis - 1));
            let before = rest & ((1u8 << (axis - 1)) - 1);
            let after = rest & !before;
            // (−1)^{#before} from moving d e^{i_p} past earlier factors.
            let pos_sign = contraction_sign(idx.mask(), axis);
            for (two, c) in self.d1[axis - 1].terms() {
                let t = two.mask();
                if t & rest != 0 {
                    continue;
                }
                let s = shuffle_sign(before, t) * shuffle_sign(before | t, after);
                buf[(rest | t) as usize] += pos_sign * s * c;
            }
        }
        KForm::from_mask_buffer(deg + 1, &buf)
    }

    /// Number of steps `s` after which the lower central series vanishes, or
    /// `None` if it has not terminated after `DIM` steps.
    pub fn nilpotency_step(&self) -> Option<usize> {
        let mut span: Vec<[f64; DIM]> = (0..DIM)
            .map(|i| {
                let mut v = [0.0; DIM];
                v[i] = 1.0;
                v
            })
            .collect();
        for step in 1..=DIM {
            let mut images = Vec::new();
            for i in 0..DIM {
                let mut ei = [0.0; DIM];
                ei[i] = 1.0;
                for v in &span {
                    images.push(self.bracket(&ei, v));
                }
            }
            let m = DMatrix::from_fn(DIM, images.len(), |r, c| images[c][r]);
            let svd = m.svd(true, false);
            let u = svd.u.expect("left vectors requested");
            // Absolute cutoff: roundoff in the previous span must not count.
            let cutoff = 1e-10 * self.max_structure_constant().max(1.0);
            if svd.singular_values.iter().all(|&s| s <= cutoff) {
                return Some(step);
            }
            span = (0..svd.singular_values.len())
                .filter(|&c| svd.singular_values[c] > cutoff)
                .map(|c| {
                    let mut v = [0.0; DIM];
                    for (row, x) in v.iter_mut().enumerate() {
                        *x = u[(row, c)];
                    }
                    v
                })
                .collect();
        }
        None
    }

    fn check_jacobi(&self, tol: f64) -> Result<()> {
        let (k, idx, value) = self.worst_jacobi_component();
        if value.abs() >= tol {
            return Err(Error::Jacobi {
                k,
                component: format!("e^{{{idx}}}"),
                value,
            });
        }
        Ok(())
    }

    fn worst_jacobi_component(&self) -> (usize, MultiIndex, f64) {
        let mut worst = (1, MultiIndex::EMPTY, 0.0f64);
        for k in 1..=DIM {
            let dd = ce_differential(&self.d1[k - 1], self);
            for (idx, c) in dd.terms() {
                if c.abs() > worst.2.abs() {
                    worst = (k, idx, c);
                }
            }
        }
        worst
    }

    /// The same algebra written in the coframe `x^i = Σ_j p[(i, j)] e^j`.
    pub fn change_coframe(&self, p: &Matrix7) -> Result<LieAlgebra> {
        let inv = p
            .try_inverse()
            .ok_or_else(|| Error::Invalid("coframe change is singular".into()))?;
        let d1 = (0..DIM)
            .map(|k| {
                let mut dx = KForm::zero(2);
                for j in 0..DIM {
                    let pkj = p[(k, j)];
                    if pkj != 0.0 {
                        dx += &self.d1[j].scaled(pkj);
                    }
                }
                crate::exterior::pullback(&dx, &inv)
            })
            .collect();
        LieAlgebra::new(self.name.clone(), d1)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let d = self
            .d1
            .iter()
            .enumerate()
            .filter(|(_, f)| f.num_terms() > 0)
            .map(|(k, f)| JsonEquation {
                k: k + 1,
                terms: f
                    .terms()
                    .map(|(idx, c)| {
                        let mut ax = idx.axes();
                        JsonTerm {
                            i: ax.next().expect("2-form"),
                            j: ax.next().expect("2-form"),
                            c,
                        }
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_value(JsonAlgebra {
            name: self.name.clone(),
            d,
        })
        .expect("serializable")
    }

    /// Parses `{"name", "d": [{"k", "terms": [{"i","j","c"}]}]}` and checks
    /// `d² = 0` within `tol`.
    pub fn from_json_value(v: &serde_json::Value, tol: f64) -> Result<Self> {
        let parsed: JsonAlgebra = serde_json::from_value(v.clone())?;
        let mut d1 = vec![KForm::zero(2); DIM];
        for eq in &parsed.d {
            if !(1..=DIM).contains(&eq.k) {
                return Err(Error::Invalid(format!("structure equation index k = {}", eq.k)));
            }
            for t in &eq.terms {
                let (lo, hi, sign) = match t.i.cmp(&t.j) {
                    std::cmp::Ordering::Less => (t.i, t.j, 1.0),
                    std::cmp::Ordering::Greater => (t.j, t.i, -1.0),
                    std::cmp::Ordering::Equal => {
                        return Err(Error::InvalidIndex(vec![t.i, t.j]));
                    }
                };
                let idx = MultiIndex::new(&[lo, hi])?;
                d1[eq.k - 1].add_term(idx, sign * t.c);
            }
        }
        Self::validated(parsed.name, d1, tol)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonAlgebra {
    name: String,
    d: Vec<JsonEquation>,
}

#[derive(Serialize, Deserialize)]
struct JsonEquation {
    k: usize,
    terms: Vec<JsonTerm>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    i: usize,
    j: usize,
    c: f64,
}

/// Chevalley–Eilenberg differential of a form of any degree.
pub fn ce_differential(a: &KForm, alg: &LieAlgebra) -> KForm {
    let deg = a.degree();
    if deg >= DIM {
        return KForm::zero(deg + 1);
    }
    let mut buf = [0.0f64; 128];
    for (idx, c) in a.terms() {
        for (j, v) in alg.d_basis_form(idx).terms() {
            buf[j.mask() as usize] += c * v;
        }
    }
    KForm::from_mask_buffer(deg + 1, &buf)
}

/// Applies `d` to a dense coefficient vector of degree `k`.
pub fn ce_differential_dense(coeffs: &[f64], k: usize, alg: &LieAlgebra) -> DVector<f64> {
    alg.differential_matrix(k) * DVector::from_column_slice(coeffs)
}

/// `max_k ‖d(d e^k)‖∞`; zero exactly when the Jacobi identity holds.
pub fn d_squared_residual(alg: &LieAlgebra) -> f64 {
    alg.worst_jacobi_component().2.abs()
}

/// Basis of closed `k`-forms, from the null space of `d` on `Λ^k`.
pub fn closed_forms(alg: &LieAlgebra, k: usize) -> Vec<KForm> {
    let m = alg.differential_matrix(k);
    let ns = linalg::null_space(m, NULL_SPACE_TOL);
    (0..ns.ncols())
        .map(|c| {
            let col: Vec<f64> = ns.column(c).iter().copied().collect();
            KForm::from_dense(k, &col).expect("basis length")
        })
        .collect()
}

/// Rank of `d: Λ^k → Λ^{k+1}`.
pub fn differential_rank(alg: &LieAlgebra, k: usize) -> usize {
    linalg::rank(alg.differential_matrix(k), NULL_SPACE_TOL)
}

/// A linear endomorphism of the algebra, columns are images of `e_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivationCandidate(pub Matrix7);

impl DerivationCandidate {
    pub fn diagonal(d: [f64; DIM]) -> Self {
        DerivationCandidate(Matrix7::from_diagonal(&nalgebra::SVector::from(d)))
    }

    pub fn matrix(&self) -> &Matrix7 {
        &self.0
    }

    fn apply(&self, v: &[f64; DIM]) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..DIM).map(|j| self.0[(i, j)] * v[j]).sum();
        }
        out
    }
}

/// `max_{i<j} ‖D[e_i, e_j] − [D e_i, e_j] − [e_i, D e_j]‖∞`.
pub fn is_derivation(d: &DerivationCandidate, alg: &LieAlgebra) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for j in i + 1..DIM {
            let mut ei = [0.0; DIM];
            let mut ej = [0.0; DIM];
            ei[i] = 1.0;
            ej[j] = 1.0;
            let lhs = d.apply(&alg.bracket(&ei, &ej));
            let a = alg.bracket(&d.apply(&ei), &ej);
            let b = alg.bracket(&ei, &d.apply(&ej));
            for k in 0..DIM {
                worst = worst.max((lhs[k] - a[k] - b[k]).abs());
            }
        }
    }
    worst
}
