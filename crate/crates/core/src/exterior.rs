//! Exterior algebra over a fixed 7-dimensional coframe `e^1, …, e^7`.
//!
//! Multi-indices are stored as 7-bit masks (bit `i-1` set when axis `i`
//! is present) but ordered lexicographically by their axes, so iteration
//! over a [`KForm`] visits `e^{123}, e^{124}, …, e^{567}` in the usual
//! order. Sign conventions: `e^I ∧ e^J = sign(I, J) e^{I∪J}` where the sign
//! is that of the shuffle permutation, and `ι_{e_i}` removes axis `i` with
//! sign `(-1)^{#axes of I below i}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::g2::Metric;
use crate::linalg::{minor_det, Matrix7};

pub const DIM: usize = 7;

const FULL_MASK: u8 = 0x7f;

/// Strictly increasing tuple of axes drawn from `1..=7`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(u8);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);
    pub const TOP: MultiIndex = MultiIndex(FULL_MASK);

    /// Builds an index from 1-based axes, rejecting unsorted or repeated axes.
    pub fn new(axes: &[usize]) -> Result<Self> {
        let mut mask = 0u8;
        let mut last = 0usize;
        for &a in axes {
            if a <= last || a > DIM {
                return Err(Error::InvalidIndex(axes.to_vec()));
            }
            mask |= 1 << (a - 1);
            last = a;
        }
        Ok(MultiIndex(mask))
    }

    /// Parses the compact digit notation used throughout the catalog, e.g.
    /// `127` for `e^{127}`.
    pub fn from_digits(digits: u32) -> Result<Self> {
        if digits == 0 {
            return Ok(Self::EMPTY);
        }
        let axes: Vec<usize> = digits
            .to_string()
            .bytes()
            .map(|b| (b - b'0') as usize)
            .collect();
        Self::new(&axes)
    }

    pub fn from_mask(mask: u8) -> Self {
        assert!(mask <= FULL_MASK, "mask {mask:#x} exceeds seven axes");
        MultiIndex(mask)
    }

    pub fn single(axis: usize) -> Self {
        assert!((1..=DIM).contains(&axis), "axis {axis} out of range");
        MultiIndex(1 << (axis - 1))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, axis: usize) -> bool {
        (1..=DIM).contains(&axis) && self.0 & (1 << (axis - 1)) != 0
    }

    /// 1-based axes in increasing order.
    pub fn axes(self) -> impl Iterator<Item = usize> {
        (0..DIM).filter(move |b| self.0 & (1 << b) != 0).map(|b| b + 1)
    }

    pub fn complement(self) -> Self {
        MultiIndex(!self.0 & FULL_MASK)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Position of this index in the lexicographic basis of its degree.
    pub fn rank(self) -> usize {
        tables().rank[self.0 as usize] as usize
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.axes().cmp(other.axes())
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.axes() {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

struct Tables {
    basis: Vec<Vec<MultiIndex>>,
    rank: [u8; 128],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut basis = vec![Vec::new(); DIM + 1];
        for mask in 0..=FULL_MASK {
            let idx = MultiIndex(mask);
            basis[idx.degree()].push(idx);
        }
        let mut rank = [0u8; 128];
        for level in basis.iter_mut() {
            level.sort();
            for (r, idx) in level.iter().enumerate() {
                rank[idx.0 as usize] = r as u8;
            }
        }
        Tables { basis, rank }
    })
}

/// Lexicographically ordered basis of `Λ^degree`.
pub fn basis(degree: usize) -> &'static [MultiIndex] {
    match tables().basis.get(degree) {
        Some(b) => b,
        None => &[],
    }
}

/// Dimension of `Λ^degree` of a 7-dimensional space.
pub fn dim_lambda(degree: usize) -> usize {
    basis(degree).len()
}

/// Sign of the shuffle taking the concatenation `(I, J)` to sorted order.
/// Callers must ensure the indices are disjoint.
pub(crate) fn shuffle_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign picked up by `ι_{e_axis}` when removing `axis` (1-based) from `mask`.
pub(crate) fn contraction_sign(mask: u8, axis: usize) -> f64 {
    let below = mask & ((1u8 << (axis - 1)) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Components of a vector in the frame `e_1, …, e_7`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameVector(pub [f64; DIM]);

impl FrameVector {
    /// The frame vector `e_axis` (1-based).
    pub fn basis(axis: usize) -> Self {
        let mut c = [0.0; DIM];
        c[axis - 1] = 1.0;
        FrameVector(c)
    }

    pub fn components(&self) -> &[f64; DIM] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        FrameVector(self.0.map(|x| x * s))
    }
}

/// An alternating form of fixed degree with sparse coefficients.
#[derive(Clone, PartialEq, Default)]
pub struct KForm {
    degree: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl KForm {
    pub fn zero(degree: usize) -> Self {
        KForm {
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(c: f64) -> Self {
        let mut f = Self::zero(0);
        f.add_term(MultiIndex::EMPTY, c);
        f
    }

    /// The basis form `e^I`.
    pub fn basis(idx: MultiIndex) -> Self {
        let mut f = Self::zero(idx.degree());
        f.add_term(idx, 1.0);
        f
    }

    pub fn from_terms<I>(degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut f = Self::zero(degree);
        for (idx, c) in terms {
            if idx.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: idx.degree(),
                });
            }
            f.add_term(idx, c);
        }
        Ok(f)
    }

    /// Builds a form from `(digits, coefficient)` pairs, e.g.
    /// `[(127, 1.0), (146, -1.0)]` for `e^{127} - e^{146}`.
    pub fn from_digits(degree: usize, terms: &[(u32, f64)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|&(d, c)| MultiIndex::from_digits(d).map(|i| (i, c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(degree, parsed)
    }

    /// Builds a form from coefficients listed in lexicographic basis order.
    pub fn from_dense(degree: usize, values: &[f64]) -> Result<Self> {
        let b = basis(degree);
        if values.len() != b.len() {
            return Err(Error::Invalid(format!(
                "expected {} coefficients for degree {degree}, got {}",
                b.len(),
                values.len()
            )));
        }
        Self::from_terms(degree, b.iter().copied().zip(values.iter().copied()))
    }

    pub(crate) fn from_mask_buffer(degree: usize, buf: &[f64; 128]) -> Self {
        let mut f = Self::zero(degree);
        for &idx in basis(degree) {
            let c = buf[idx.0 as usize];
            if c != 0.0 {
                f.coeffs.insert(idx, c);
            }
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, idx: MultiIndex) -> f64 {
        self.coeffs.get(&idx).copied().unwrap_or(0.0)
    }

    /// Coefficient of `e^{digits}`; panics on a malformed index.
    pub fn coeff_digits(&self, digits: u32) -> f64 {
        self.coeff(MultiIndex::from_digits(digits).expect("valid multi-index"))
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: f64) {
        debug_assert_eq!(idx.degree(), self.degree);
        if c == 0.0 {
            return;
        }
        let entry = self.coeffs.entry(idx).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&idx);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.coeffs.iter().map(|(&i, &c)| (i, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficients in lexicographic basis order (35 entries for 3-forms).
    pub fn to_dense(&self) -> Vec<f64> {
        basis(self.degree).iter().map(|&i| self.coeff(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self, eps: f64) -> bool {
        self.max_abs() <= eps
    }

    pub fn approx_eq(&self, other: &KForm, eps: f64) -> bool {
        self.degree == other.degree && (self - other).max_abs() < eps
    }

    /// Drops coefficients with magnitude below `eps`.
    pub fn pruned(&self, eps: f64) -> KForm {
        KForm {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, c)| c.abs() >= eps)
                .map(|(&i, &c)| (i, c))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> KForm {
        let mut out = KForm::zero(self.degree);
        for (i, c) in self.terms() {
            out.add_term(i, c * s);
        }
        out
    }

    pub fn wedge(&self, other: &KForm) -> KForm {
        wedge(self, other)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let terms: Vec<JsonTerm> = self
            .terms()
            .map(|(i, c)| JsonTerm {
                idx: i.axes().collect(),
                c,
            })
            .collect();
        serde_json::to_value(terms).expect("serializable")
    }

    /// Parses the `[{"idx": [...], "c": ...}, ...]` format. The degree is
    /// taken from the index lengths; `expected` fixes it for empty arrays.
    pub fn from_json_value(v: &serde_json::Value, expected: Option<usize>) -> Result<Self> {
        let terms: Vec<JsonTerm> = serde_json::from_value(v.clone())?;
        let degree = match (terms.first(), expected) {
            (Some(t), _) => t.idx.len(),
            (None, Some(d)) => d,
            (None, None) => 0,
        };
        if let Some(d) = expected {
            if d != degree {
                return Err(Error::DegreeMismatch {
                    expected: d,
                    found: degree,
                });
            }
        }
        let parsed = terms
            .iter()
            .map(|t| MultiIndex::new(&t.idx).map(|i| (i, t.c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(degree, parsed)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    idx: Vec<usize>,
    c: f64,
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms().enumerate() {
            let sign = if c < 0.0 { "-" } else if n > 0 { "+" } else { "" };
            if n > 0 {
                write!(f, " {sign} ")?;
            } else {
                write!(f, "{sign}")?;
            }
            let mag = c.abs();
            if (mag - 1.0).abs() > 1e-15 {
                write!(f, "{mag}·")?;
            }
            if idx.degree() == 0 {
                write!(f, "1")?;
            } else {
                write!(f, "e{idx}")?;
            }
        }
        Ok(())
    }
}

impl Index<MultiIndex> for KForm {
    type Output = f64;
    fn index(&self, idx: MultiIndex) -> &f64 {
        self.coeffs.get(&idx).unwrap_or(&0.0)
    }
}

impl Add<&KForm> for &KForm {
    type Output = KForm;
    fn add(self, rhs: &KForm) -> KForm {
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (i, c) in rhs.terms() {
            out.add_term(i, c);
        }
        out
    }
}

impl Add for KForm {
    type Output = KForm;
    fn add(self, rhs: KForm) -> KForm {
        &self + &rhs
    }
}

impl AddAssign<&KForm> for KForm {
    fn add_assign(&mut self, rhs: &KForm) {
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        for (i, c) in rhs.terms() {
            self.add_term(i, c);
        }
    }
}

impl Sub<&KForm> for &KForm {
    type Output = KForm;
    fn sub(self, rhs: &KForm) -> KForm {
        self + &(-rhs)
    }
}

impl Sub for KForm {
    type Output = KForm;
    fn sub(self, rhs: KForm) -> KForm {
        &self - &rhs
    }
}

impl Neg for &KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scaled(-1.0)
    }
}

impl Neg for KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scaled(-1.0)
    }
}

impl Mul<&KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: &KForm) -> KForm {
        rhs.scaled(self)
    }
}

impl Mul<KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: KForm) -> KForm {
        rhs.scaled(self)
    }
}

/// Exterior product. Degrees summing past 7 give the zero form of that degree.
pub fn wedge(a: &KForm, b: &KForm) -> KForm {
    let degree = a.degree + b.degree;
    if degree > DIM {
        return KForm::zero(degree);
    }
    let mut buf = [0.0f64; 128];
    for (ia, ca) in a.terms() {
        for (ib, cb) in b.terms() {
            if ia.is_disjoint(ib) {
                buf[(ia.0 | ib.0) as usize] += shuffle_sign(ia.0, ib.0) * ca * cb;
            }
        }
    }
    KForm::from_mask_buffer(degree, &buf)
}

/// Interior product `ι_X a`.
pub fn contract(x: &FrameVector, a: &KForm) -> Result<KForm> {
    if a.degree == 0 {
        return Err(Error::ContractScalar);
    }
    let mut buf = [0.0f64; 128];
    for (idx, c) in a.terms() {
        for axis in idx.axes() {
            let xi = x.0[axis - 1];
            if xi != 0.0 {
                let rest = idx.0 & !(1 << (axis - 1));
                buf[rest as usize] += contraction_sign(idx.0, axis) * xi * c;
            }
        }
    }
    Ok(KForm::from_mask_buffer(a.degree - 1, &buf))
}

/// Contraction with the basis vector `e_axis` (1-based).
pub fn contract_basis(axis: usize, a: &KForm) -> Result<KForm> {
    contract(&FrameVector::basis(axis), a)
}

/// Hodge star of `g`, with volume form `orientation · √det g · e^{1…7}`.
pub fn hodge_star(a: &KForm, g: &Metric) -> KForm {
    let k = a.degree;
    if k > DIM {
        return KForm::zero(0);
    }
    let ginv = g.inverse();
    let scale = g.orientation() * g.vol_coeff();
    let mut buf = [0.0f64; 128];
    let diagonal = g.is_diagonal();
    for (ka, c) in a.terms() {
        if diagonal {
            let raised: f64 = ka.axes().map(|i| ginv[(i - 1, i - 1)]).product();
            let comp = ka.complement();
            buf[comp.0 as usize] += scale * shuffle_sign(ka.0, comp.0) * raised * c;
            continue;
        }
        for &i in basis(k) {
            let m = minor_det(ginv, i, ka);
            if m != 0.0 {
                let comp = i.complement();
                buf[comp.0 as usize] += scale * shuffle_sign(i.0, comp.0) * m * c;
            }
        }
    }
    KForm::from_mask_buffer(DIM - k, &buf)
}

/// Pullback by the linear substitution `e^k ↦ Σ_j p[(k, j)] e^j`.
///
/// With `x^i = Σ_j P_ij e^j`, a form written in the `x` coframe has `e`-frame
/// coefficients `pullback(a_x, P)`; conversely `pullback(a_e, P⁻¹)` gives its
/// `x`-frame coefficients.
pub fn pullback(a: &KForm, p: &Matrix7) -> KForm {
    let k = a.degree;
    if k > DIM {
        return a.clone();
    }
    let mut buf = [0.0f64; 128];
    for (ka, c) in a.terms() {
        for &j in basis(k) {
            let m = minor_det(p, ka, j);
            if m != 0.0 {
                buf[j.0 as usize] += m * c;
            }
        }
    }
    KForm::from_mask_buffer(k, &buf)
}

/// Inner product `g(a, b)` induced on forms of equal degree.
pub fn form_inner(a: &KForm, b: &KForm, g: &Metric) -> f64 {
    assert_eq!(a.degree, b.degree, "inner product of different degrees");
    let ginv = g.inverse();
    let mut s = 0.0;
    for (ia, ca) in a.terms() {
        for (ib, cb) in b.terms() {
            s += ca * cb * minor_det(ginv, ia, ib);
        }
    }
    s
}
