//! Metric, volume form and Laplacian induced by a G2 3-form.
//!
//! For a 3-form `φ` the symmetric matrix `B` is defined by
//! `ι_{e_i}φ ∧ ι_{e_j}φ ∧ φ = 6 B_ij e^{1…7}`. The induced metric satisfies
//! `g_ij vol = (1/6) ι_{e_i}φ ∧ ι_{e_j}φ ∧ φ` with `vol = √det g · e^{1…7}`,
//! which gives `g = B / (det B)^{1/9}`.

use std::sync::OnceLock;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{basis, contraction_sign, hodge_star, shuffle_sign, KForm, MultiIndex, DIM};
use crate::liealg::{ce_differential, LieAlgebra};
use crate::linalg::{self, Matrix7};

/// Eigenvalue floor below which a normalized metric is not accepted.
pub const POSITIVITY_THRESHOLD: f64 = 1e-10;

/// `B` counts as singular when its smallest eigenvalue magnitude is below
/// this fraction of the largest.
pub const DEGENERACY_RATIO: f64 = 1e-13;

/// Default closedness tolerance for [`laplacian_closed`].
pub const CLOSED_TOL: f64 = 1e-9;

/// A positive-definite inner product on the frame together with an
/// orientation; the volume form is `orientation · √det G · e^{1…7}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: Matrix7,
    ginv: Matrix7,
    vol: f64,
    orientation: f64,
    diagonal: bool,
}

impl Metric {
    pub fn new(g: Matrix7) -> Result<Self> {
        Self::with_orientation(g, 1.0)
    }

    pub fn with_orientation(g: Matrix7, orientation: f64) -> Result<Self> {
        let scale = g.amax().max(1.0);
        let asym = (g - g.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let g = (g + g.transpose()) * 0.5;
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(g).ok_or(Error::NotPositiveDefinite)?;
        let det = chol.determinant();
        if det <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let ginv = chol.inverse();
        let mut diagonal = true;
        for i in 0..DIM {
            for j in 0..DIM {
                if i != j && g[(i, j)] != 0.0 {
                    diagonal = false;
                }
            }
        }
        Ok(Metric {
            g,
            ginv,
            vol: det.sqrt(),
            orientation: if orientation < 0.0 { -1.0 } else { 1.0 },
            diagonal,
        })
    }

    pub fn identity() -> Self {
        Self::new(Matrix7::identity()).expect("identity is positive definite")
    }

    pub fn diagonal(entries: [f64; DIM]) -> Result<Self> {
        Self::new(Matrix7::from_diagonal(&nalgebra::SVector::from(entries)))
    }

    pub fn matrix(&self) -> &Matrix7 {
        &self.g
    }

    pub fn inverse(&self) -> &Matrix7 {
        &self.ginv
    }

    /// `√det G`, always positive.
    pub fn vol_coeff(&self) -> f64 {
        self.vol
    }

    /// `+1` when `e^{1…7}` is positively oriented, `−1` otherwise.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn volume_form(&self) -> KForm {
        let mut v = KForm::zero(DIM);
        v.add_term(MultiIndex::TOP, self.orientation * self.vol);
        v
    }

    pub fn inner(&self, x: &[f64; DIM], y: &[f64; DIM]) -> f64 {
        let mut s = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                s += x[i] * self.g[(i, j)] * y[j];
            }
        }
        s
    }

    /// A coframe `x^i = Σ_j P_ij e^j` that is orthonormal for this metric,
    /// with `P = Lᵀ` for the Cholesky factor `G = L Lᵀ`. For diagonal `G`
    /// this is `x^i = √G_ii e^i`.
    pub fn orthonormal_coframe(&self) -> Matrix7 {
        Cholesky::new(self.g)
            .expect("validated at construction")
            .l()
            .transpose()
    }

    /// Metric of the same inner product in the coframe `x^i = Σ_j P_ij e^j`.
    pub fn in_coframe(&self, p: &Matrix7) -> Result<Metric> {
        let inv = p
            .try_inverse()
            .ok_or_else(|| Error::Invalid("coframe change is singular".into()))?;
        let orient = self.orientation * p.determinant().signum();
        Metric::with_orientation(inv.transpose() * self.g * inv, orient)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(MetricJson {
            g: self.g.transpose().iter().copied().collect(),
            vol: self.orientation * self.vol,
        })
        .expect("serializable")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let m: MetricJson = serde_json::from_value(v.clone())?;
        if m.g.len() != DIM * DIM {
            return Err(Error::Invalid(format!("metric needs 49 entries, got {}", m.g.len())));
        }
        let g = Matrix7::from_row_slice(&m.g);
        Metric::with_orientation(g, m.vol)
    }
}

#[derive(Serialize, Deserialize)]
struct MetricJson {
    #[serde(rename = "G")]
    g: Vec<f64>,
    vol: f64,
}

/// A 3-form together with its positivity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Form {
    phi: KForm,
    positive: bool,
}

impl G2Form {
    pub fn new(phi: KForm) -> Result<Self> {
        if phi.degree() != 3 {
            return Err(Error::DegreeMismatch {
                expected: 3,
                found: phi.degree(),
            });
        }
        let positive = is_positive(&phi);
        Ok(G2Form { phi, positive })
    }

    pub fn phi(&self) -> &KForm {
        &self.phi
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn metric(&self) -> Result<Metric> {
        metric_from_g2(&self.phi)
    }
}

/// The matrix `B` with `ι_{e_i}φ ∧ ι_{e_j}φ ∧ φ = 6 B_ij e^{1…7}`.
pub fn bilinear_b(phi: &KForm) -> Matrix7 {
    if phi.degree() != 3 {
        return Matrix7::zeros();
    }
    bilinear_b_dense(&phi.to_dense())
}

/// One monomial `sign · φ_{k0} φ_{k1} φ_{k2}` of the entry `B_ij`, `i ≤ j`,
/// with `k` indexing the lexicographic basis of `Λ³`.
pub(crate) struct BTerm {
    pub i: u8,
    pub j: u8,
    pub k: [u8; 3],
    pub sign: f64,
}

/// Every nonzero monomial of `6 B_ij` as a cubic in the 35 coefficients.
pub(crate) fn b_terms() -> &'static [BTerm] {
    static TERMS: OnceLock<Vec<BTerm>> = OnceLock::new();
    TERMS.get_or_init(|| {
        let top = MultiIndex::TOP.mask();
        let mut out = Vec::new();
        for i in 1..=DIM {
            for j in i..=DIM {
                for k1 in basis(3).iter().filter(|k| k.contains(i)) {
                    let a = k1.mask() & !(1 << (i - 1));
                    for k2 in basis(3).iter().filter(|k| k.contains(j)) {
                        let b = k2.mask() & !(1 << (j - 1));
                        if a & b != 0 {
                            continue;
                        }
                        let k3 = MultiIndex::from_mask(top & !(a | b));
                        let sign = contraction_sign(k1.mask(), i)
                            * contraction_sign(k2.mask(), j)
                            * shuffle_sign(a, b)
                            * shuffle_sign(a | b, k3.mask());
                        out.push(BTerm {
                            i: (i - 1) as u8,
                            j: (j - 1) as u8,
                            k: [k1.rank() as u8, k2.rank() as u8, k3.rank() as u8],
                            sign,
                        });
                    }
                }
            }
        }
        out
    })
}

/// [`bilinear_b`] on the 35 coefficients in lexicographic order.
pub fn bilinear_b_dense(c: &[f64]) -> Matrix7 {
    assert_eq!(c.len(), 35, "a 3-form has 35 coefficients");
    let mut b = Matrix7::zeros();
    for t in b_terms() {
        let [p, q, r] = t.k;
        b[(t.i as usize, t.j as usize)] += t.sign * c[p as usize] * c[q as usize] * c[r as usize];
    }
    for i in 0..DIM {
        for j in i..DIM {
            let v = b[(i, j)] / 6.0;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Derivatives `∂B/∂c_K` for the 35 coefficients.
pub fn bilinear_b_gradient(c: &[f64]) -> Vec<Matrix7> {
    assert_eq!(c.len(), 35, "a 3-form has 35 coefficients");
    let mut out = vec![Matrix7::zeros(); 35];
    for t in b_terms() {
        let [p, q, r] = t.k.map(usize::from);
        let (i, j) = (t.i as usize, t.j as usize);
        let s = t.sign / 6.0;
        out[p][(i, j)] += s * c[q] * c[r];
        out[q][(i, j)] += s * c[p] * c[r];
        out[r][(i, j)] += s * c[p] * c[q];
    }
    for m in out.iter_mut() {
        for i in 0..DIM {
            for j in i + 1..DIM {
                m[(j, i)] = m[(i, j)];
            }
        }
    }
    out
}

/// Metric induced by `φ`, with orientation flipped when `det B < 0`.
pub fn metric_from_g2(phi: &KForm) -> Result<Metric> {
    if phi.degree() != 3 {
        return Err(Error::DegreeMismatch {
            expected: 3,
            found: phi.degree(),
        });
    }
    let b = bilinear_b(phi);
    let eig = linalg::symmetric_eigenvalues(&b);
    let largest = eig[0].abs().max(eig[DIM - 1].abs());
    let smallest = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if largest == 0.0 || smallest <= DEGENERACY_RATIO * largest {
        return Err(Error::DegenerateForm);
    }
    let det = b.determinant();
    let g = b / linalg::ninth_root(det);
    let eig = linalg::symmetric_eigenvalues(&g);
    if eig[0] <= POSITIVITY_THRESHOLD {
        return Err(Error::NonPositive);
    }
    Metric::with_orientation(g, det.signum()).map_err(|_| Error::NonPositive)
}

pub fn is_positive(phi: &KForm) -> bool {
    phi.degree() == 3 && metric_from_g2(phi).is_ok()
}

/// `Δφ = −d * d * φ`, valid when `dφ = 0`.
pub fn laplacian_closed(phi: &KForm, alg: &LieAlgebra) -> Result<KForm> {
    laplacian_closed_tol(phi, alg, CLOSED_TOL)
}

pub fn laplacian_closed_tol(phi: &KForm, alg: &LieAlgebra, tol: f64) -> Result<KForm> {
    let dphi = ce_differential(phi, alg).max_abs();
    if dphi > tol {
        return Err(Error::NotClosed(dphi));
    }
    let g = metric_from_g2(phi)?;
    Ok(laplacian_with_metric(phi, alg, &g))
}

/// `−d * d * φ` with a precomputed metric; no closedness check.
pub(crate) fn laplacian_with_metric(phi: &KForm, alg: &LieAlgebra, g: &Metric) -> KForm {
    let star = hodge_star(phi, g);
    let d_star = ce_differential(&star, alg);
    let star2 = hodge_star(&d_star, g);
    -&ce_differential(&star2, alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{contract_basis, wedge};

    fn phi_std() -> KForm {
        KForm::from_digits(
            3,
            &[
                (127, 1.0),
                (347, 1.0),
                (567, 1.0),
                (135, 1.0),
                (146, -1.0),
                (236, -1.0),
                (245, -1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn standard_form_gives_identity() {
        let b = bilinear_b(&phi_std());
        assert!((b - Matrix7::identity()).amax() < 1e-15);
        let g = metric_from_g2(&phi_std()).unwrap();
        assert!((g.matrix() - Matrix7::identity()).amax() < 1e-15);
        assert_eq!(g.vol_coeff(), 1.0);
        assert_eq!(g.orientation(), 1.0);
    }

    #[test]
    fn b77_by_hand() {
        // ι_7φ = e^{12}+e^{34}+e^{56}; its square wedged with φ picks up
        // 2(e^{1234}+e^{1256}+e^{3456}) ∧ (e^{567}+e^{347}+e^{127}) = 6 e^{1…7}.
        let a = contract_basis(7, &phi_std()).unwrap();
        let top = wedge(&wedge(&a, &a), &phi_std());
        assert_eq!(top.coeff(MultiIndex::TOP), 6.0);
    }

    #[test]
    fn term_table_matches_wedge_definition() {
        let phi = KForm::from_dense(3, &(0..35).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect::<Vec<_>>()).unwrap();
        let mut by_wedge = Matrix7::zeros();
        for i in 1..=DIM {
            for j in 1..=DIM {
                let a = contract_basis(i, &phi).unwrap();
                let b = contract_basis(j, &phi).unwrap();
                by_wedge[(i - 1, j - 1)] = wedge(&wedge(&a, &b), &phi).coeff(MultiIndex::TOP) / 6.0;
            }
        }
        assert!((bilinear_b(&phi) - by_wedge).amax() < 1e-9);
        let c = phi.to_dense();
        let grad = bilinear_b_gradient(&c);
        let h = 1e-6;
        for k in [0, 17, 34] {
            let mut cp = c.clone();
            cp[k] += h;
            let mut cm = c.clone();
            cm[k] -= h;
            let fd = (bilinear_b_dense(&cp) - bilinear_b_dense(&cm)) / (2.0 * h);
            assert!((fd - grad[k]).amax() < 1e-5 * fd.amax().max(1.0));
        }
    }

    #[test]
    fn single_term_is_degenerate() {
        let e123 = KForm::from_digits(3, &[(123, 1.0)]).unwrap();
        let b = bilinear_b(&e123);
        assert!(linalg::rank(&nalgebra::DMatrix::from_column_slice(7, 7, b.as_slice()), 1e-10) < 7);
        assert!(matches!(metric_from_g2(&e123), Err(Error::DegenerateForm)));
        assert!(!is_positive(&e123));
    }

    #[test]
    fn scaling_law() {
        for c in [0.5, 2.0, 10.0] {
            let g = metric_from_g2(&phi_std().scaled(c * c * c)).unwrap();
            assert!((g.matrix() - Matrix7::identity() * (c * c)).amax() < 1e-12 * c * c);
        }
    }

    #[test]
    fn negated_form_flips_orientation() {
        let g = metric_from_g2(&-&phi_std()).unwrap();
        assert!((g.matrix() - Matrix7::identity()).amax() < 1e-15);
        assert_eq!(g.orientation(), -1.0);
    }

    #[test]
    fn metric_json_round_trip() {
        let g = Metric::diagonal([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let back = Metric::from_json_value(&g.to_json_value()).unwrap();
        assert_eq!(back, g);
        let v = g.to_json_value();
        assert_eq!(v["G"].as_array().unwrap().len(), 49);
    }

    #[test]
    fn rejects_bad_metrics() {
        let mut m = Matrix7::identity();
        m[(0, 1)] = 0.5;
        assert!(matches!(Metric::new(m), Err(Error::NotSymmetric(_))));
        let neg = Matrix7::identity() * -1.0;
        assert!(matches!(Metric::new(neg), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn orthonormal_coframe_of_diagonal_metric() {
        let g = Metric::diagonal([4.0, 1.0, 9.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let p = g.orthonormal_coframe();
        assert!((p[(0, 0)] - 2.0).abs() < 1e-15 && (p[(2, 2)] - 3.0).abs() < 1e-15);
        let h = g.in_coframe(&p).unwrap();
        assert!((h.matrix() - Matrix7::identity()).amax() < 1e-15);
    }

    #[test]
    fn abelian_laplacian_vanishes() {
        let ab = LieAlgebra::abelian("n1");
        assert!(laplacian_closed(&phi_std(), &ab).unwrap().is_zero(0.0));
    }
}
