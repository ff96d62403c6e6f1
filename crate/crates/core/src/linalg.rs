//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::exterior::{MultiIndex, DIM};

pub type Matrix7 = SMatrix<f64, 7, 7>;

/// Determinant of the square submatrix of `m` on `rows × cols`
/// (1-based axes of the multi-indices). Empty minors are 1.
pub fn minor_det(m: &Matrix7, rows: MultiIndex, cols: MultiIndex) -> f64 {
    let k = rows.degree();
    debug_assert_eq!(k, cols.degree());
    let mut a = [[0.0f64; DIM]; DIM];
    for (r, i) in rows.axes().enumerate() {
        for (c, j) in cols.axes().enumerate() {
            a[r][c] = m[(i - 1, j - 1)];
        }
    }
    match k {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => lu_det(&mut a, k),
    }
}

/// Determinant of the leading `n × n` block by partial-pivot elimination.
fn lu_det(a: &mut [[f64; DIM]; DIM], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for r in col + 1..n {
            let f = a[r][col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    det
}

/// Orthonormal basis of the null space of `a`, as columns. Singular values
/// below `rel_tol · σ_max` count as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let ncols = a.ncols();
    if a.nrows() == 0 || ncols == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    // Pad to at least square so the SVD exposes a full right basis.
    let padded = if a.nrows() < ncols {
        let mut p = DMatrix::zeros(ncols, ncols);
        p.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = if smax == 0.0 { 0.0 } else { rel_tol * smax };
    let null_rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= cutoff)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(ncols, null_rows.len());
    for (c, &r) in null_rows.iter().enumerate() {
        for j in 0..ncols {
            basis[(j, c)] = v_t[(r, j)];
        }
    }
    basis
}

/// Numerical rank with the same cutoff rule as [`null_space`].
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let smax = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn symmetric_eigenvalues(m: &Matrix7) -> [f64; DIM] {
    let eig = SymmetricEigen::new(*m);
    let mut vals = [0.0; DIM];
    for (v, e) in vals.iter_mut().zip(eig.eigenvalues.iter()) {
        *v = *e;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    vals
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Real ninth root, odd in its argument.
pub fn ninth_root(x: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / 9.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minors_match_full_determinant() {
        let m = Matrix7::from_fn(|i, j| ((i * 7 + j) as f64).sin() + if i == j { 3.0 } else { 0.0 });
        let full = minor_det(&m, MultiIndex::TOP, MultiIndex::TOP);
        assert!((full - m.determinant()).abs() < 1e-10 * full.abs());
        let rows = MultiIndex::from_digits(1357).unwrap();
        let cols = MultiIndex::from_digits(2345).unwrap();
        let sub = nalgebra::Matrix4::from_fn(|r, c| m[([0, 2, 4, 6][r], [1, 2, 3, 4][c])]);
        assert!((minor_det(&m, rows, cols) - sub.determinant()).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_deficient_matrix() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let n = null_space(&a, 1e-10);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).amax() < 1e-12);
        assert_eq!(rank(&a, 1e-10), 2);
    }

    #[test]
    fn ninth_root_is_odd() {
        assert!((ninth_root(512.0) - 2.0).abs() < 1e-15);
        assert!((ninth_root(-512.0) + 2.0).abs() < 1e-15);
    }
}
