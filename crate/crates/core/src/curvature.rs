//! Levi-Civita connection, curvature and nilsoliton certificates of a
//! left-invariant metric.
//!
//! Index conventions (0-based in storage, 1-based in accessors):
//! `∇_{e_i} e_j = Σ_k Γ[i][j][k] e_k`, and the lowered Riemann tensor is
//! `R_{ijkl} = g(R(e_i, e_j) e_l, e_k)` with
//! `R(X, Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`, so `R_{ijij}` is the sectional
//! curvature of an orthonormal pair.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exterior::DIM;
use crate::g2::Metric;
use crate::liealg::{is_derivation, DerivationCandidate, LieAlgebra};
use crate::linalg::Matrix7;

/// Residual threshold for accepting a nilsoliton certificate.
pub const SOLITON_TOL: f64 = 1e-9;

type Tensor3 = [[[f64; DIM]; DIM]; DIM];
type Tensor4 = [[[[f64; DIM]; DIM]; DIM]; DIM];

#[derive(Clone, Debug)]
pub struct Connection {
    gamma: Tensor3,
    metric: Metric,
}

impl Connection {
    /// `Γ^k_{ij}`, the `e_k` component of `∇_{e_i} e_j` (1-based).
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[i - 1][j - 1][k - 1]
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_flat_connection(&self) -> bool {
        self.gamma.iter().flatten().flatten().all(|&x| x == 0.0)
    }

    /// `max |g(∇_i e_j, e_k) + g(e_j, ∇_i e_k)|`.
    pub fn metric_compatibility_residual(&self) -> f64 {
        let g = self.metric.matrix();
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    let mut s = 0.0;
                    for m in 0..DIM {
                        s += self.gamma[i][j][m] * g[(m, k)] + self.gamma[i][k][m] * g[(j, m)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// `max ‖∇_{e_i} e_j − ∇_{e_j} e_i − [e_i, e_j]‖∞`.
    pub fn torsion_residual(&self, alg: &LieAlgebra) -> f64 {
        let c = alg.bracket_tensor();
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    let t = self.gamma[i][j][k] - self.gamma[j][i][k] - c[i][j][k];
                    worst = worst.max(t.abs());
                }
            }
        }
        worst
    }
}

/// Koszul formula for left-invariant fields:
/// `2g(∇_X Y, Z) = g([X,Y],Z) − g([Y,Z],X) + g([Z,X],Y)`.
pub fn levi_civita(alg: &LieAlgebra, g: &Metric) -> Result<Connection> {
    let c = alg.bracket_tensor();
    let gm = g.matrix();
    let ginv = g.inverse();
    let mut c_low = [[[0.0; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            for l in 0..DIM {
                c_low[i][j][l] = (0..DIM).map(|m| c[i][j][m] * gm[(m, l)]).sum();
            }
        }
    }
    let mut gamma = [[[0.0; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            let mut low = [0.0; DIM];
            for (l, x) in low.iter_mut().enumerate() {
                *x = 0.5 * (c_low[i][j][l] - c_low[j][l][i] + c_low[l][i][j]);
            }
            for k in 0..DIM {
                gamma[i][j][k] = (0..DIM).map(|l| ginv[(k, l)] * low[l]).sum();
            }
        }
    }
    Ok(Connection {
        gamma,
        metric: g.clone(),
    })
}

#[derive(Clone, Debug)]
pub struct RiemannTensor {
    r: Tensor4,
}

impl RiemannTensor {
    /// `R_{ijkl}` with 1-based indices.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.r[i - 1][j - 1][k - 1][l - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.r
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Largest violation of the pair symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let r = &self.r;
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let v = r[i][j][k][l];
                        worst = worst
                            .max((v + r[j][i][k][l]).abs())
                            .max((v + r[i][j][l][k]).abs())
                            .max((v - r[k][l][i][j]).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |R_{ijkl} + R_{jkil} + R_{kijl}|`.
    pub fn bianchi_residual(&self) -> f64 {
        let r = &self.r;
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let s = r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Components `Rv[i][j][k][n]` of `R(e_i, e_j) e_k` along `e_n`.
fn riemann_vectors(conn: &Connection, alg: &LieAlgebra) -> Tensor4 {
    let gm = &conn.gamma;
    let c = alg.bracket_tensor();
    let mut rv = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            if i == j {
                continue;
            }
            for k in 0..DIM {
                for n in 0..DIM {
                    let mut s = 0.0;
                    for m in 0..DIM {
                        s += gm[j][k][m] * gm[i][m][n] - gm[i][k][m] * gm[j][m][n]
                            - c[i][j][m] * gm[m][k][n];
                    }
                    rv[i][j][k][n] = s;
                }
            }
        }
    }
    rv
}

pub fn riemann(conn: &Connection, alg: &LieAlgebra) -> RiemannTensor {
    let rv = riemann_vectors(conn, alg);
    let g = conn.metric.matrix();
    let mut r = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    r[i][j][k][l] = (0..DIM).map(|n| rv[i][j][l][n] * g[(n, k)]).sum();
                }
            }
        }
    }
    RiemannTensor { r }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RicciTensor {
    ric: Matrix7,
    endo: Matrix7,
}

impl RicciTensor {
    /// `Ric(e_j, e_k)`.
    pub fn matrix(&self) -> &Matrix7 {
        &self.ric
    }

    /// Ricci endomorphism `g⁻¹ Ric`.
    pub fn endomorphism(&self) -> &Matrix7 {
        &self.endo
    }

    pub fn diagonal(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.ric[(i, i)])
    }

    pub fn scalar(&self) -> f64 {
        self.endo.trace()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.ric - self.ric.transpose()).amax()
    }
}

/// `Ric_{jk} = Σ_i (R(e_i, e_j) e_k)^i`, from the full Riemann tensor.
pub fn ricci(alg: &LieAlgebra, g: &Metric) -> Result<RicciTensor> {
    let conn = levi_civita(alg, g)?;
    let rv = riemann_vectors(&conn, alg);
    let mut ric = Matrix7::zeros();
    for j in 0..DIM {
        for k in 0..DIM {
            ric[(j, k)] = (0..DIM).map(|i| rv[i][j][k][i]).sum();
        }
    }
    let endo = g.inverse() * ric;
    Ok(RicciTensor { ric, endo })
}

pub fn riemann_of(alg: &LieAlgebra, g: &Metric) -> Result<RiemannTensor> {
    Ok(riemann(&levi_civita(alg, g)?, alg))
}

/// A witness for `Ric = λI + D` with `D` a derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonCertificate {
    pub lambda: f64,
    pub d: DerivationCandidate,
    pub residual: f64,
}

impl SolitonCertificate {
    pub fn is_valid(&self) -> bool {
        self.residual < SOLITON_TOL
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(CertificateJson {
            lambda: self.lambda,
            d: self.d.0.transpose().iter().copied().collect(),
            residual: self.residual,
            feasible: self.is_valid(),
        })
        .expect("serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    lambda: f64,
    #[serde(rename = "D")]
    d: Vec<f64>,
    residual: f64,
    feasible: bool,
}

/// `max(‖Ric − λI − D‖∞, derivation residual of D)` for a proposed pair.
pub fn certificate_residual(
    alg: &LieAlgebra,
    g: &Metric,
    lambda: f64,
    d: &DerivationCandidate,
) -> Result<f64> {
    let ric = ricci(alg, g)?;
    let diff = ric.endomorphism() - Matrix7::identity() * lambda - d.0;
    Ok(diff.amax().max(is_derivation(d, alg)))
}

/// Components of `M[e_a, e_b] − [M e_a, e_b] − [e_a, M e_b]` over `a < b`.
fn derivation_defect(m: &Matrix7, alg: &LieAlgebra) -> Vec<f64> {
    let c = alg.bracket_tensor();
    let mut out = Vec::with_capacity(21 * DIM);
    for a in 0..DIM {
        for b in a + 1..DIM {
            for k in 0..DIM {
                let mut s = 0.0;
                for m_ in 0..DIM {
                    s += m[(k, m_)] * c[a][b][m_];
                    s -= m[(m_, a)] * c[m_][b][k];
                    s -= m[(m_, b)] * c[a][m_][k];
                }
                out.push(s);
            }
        }
    }
    out
}

/// Best `λ` for `Ric_endo − λI` to be a derivation; the defect is affine
/// in `λ` so the least-squares minimizer is explicit. An abelian algebra
/// gets `λ = 0`.
pub fn nilsoliton_solve(alg: &LieAlgebra, g: &Metric) -> Result<SolitonCertificate> {
    let ric = ricci(alg, g)?;
    let e = *ric.endomorphism();
    let a = derivation_defect(&e, alg);
    let b = derivation_defect(&Matrix7::identity(), alg);
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let lambda = if bb == 0.0 {
        0.0
    } else {
        a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / bb
    };
    let d = DerivationCandidate(e - Matrix7::identity() * lambda);
    let residual = is_derivation(&d, alg);
    Ok(SolitonCertificate {
        lambda,
        d,
        residual,
    })
}
