//! The twelve 7-dimensional nilpotent Lie algebras carrying closed G2
//! forms, their alternate presentations, G2 forms and nilsoliton data.
//!
//! Irrational constants are written out to 17 significant digits.

use std::sync::OnceLock;

use crate::curvature::{certificate_residual, SolitonCertificate};
use crate::error::{Error, Result};
use crate::exterior::{KForm, DIM};
use crate::g2::Metric;
use crate::liealg::{DerivationCandidate, LieAlgebra};

const SQRT3: f64 = 1.7320508075688772;
const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT6_2: f64 = 1.224_744_871_391_589;
const SQRT13_13: f64 = 0.277_350_098_112_614_6;
const SQRT26_26: f64 = 0.19611613513818402;
const SQRT13_26: f64 = 0.138_675_049_056_307_3;
const SQRT39_26: f64 = 0.240_192_230_707_630_7;
const SQRT3_6: f64 = 0.28867513459481287;
const SQRT3_12: f64 = 0.14433756729740643;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolitonStatus {
    Yes,
    No,
    /// Admits a nilsoliton, but whether a closed G2 form induces it is open.
    OpenFormUnknown,
}

impl SolitonStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolitonStatus::Yes => "yes",
            SolitonStatus::No => "no",
            SolitonStatus::OpenFormUnknown => "open-form-unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Presentation {
    Primary,
    /// Another basis of the same algebra, used for the nilsoliton data.
    Alternate,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    /// Lookup key, e.g. `"n5"` or `"n5-nilsoliton"`.
    pub key: &'static str,
    /// Which of `n1 … n12` this is a presentation of.
    pub family: u8,
    pub presentation: Presentation,
    pub algebra: LieAlgebra,
    pub g2form: Option<KForm>,
    /// Certificate for the metric making this basis orthonormal.
    pub soliton: Option<SolitonCertificate>,
    /// Stated diagonal Ricci tensor for the orthonormal basis.
    pub ricci_table: Option<[f64; DIM]>,
    pub soliton_status: SolitonStatus,
    pub presentation_note: &'static str,
}

impl CatalogEntry {
    pub fn has_g2form(&self) -> bool {
        self.g2form.is_some()
    }
}

/// All entries, primary presentations first in order `n1 … n12`.
pub fn catalog() -> &'static [CatalogEntry] {
    static CATALOG: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

pub fn lookup(key: &str) -> Result<&'static CatalogEntry> {
    find(catalog(), key)
}

pub fn find<'a>(entries: &'a [CatalogEntry], key: &str) -> Result<&'a CatalogEntry> {
    entries
        .iter()
        .find(|e| e.key == key)
        .ok_or_else(|| Error::UnknownEntry(key.to_string()))
}

pub fn primary_entries() -> impl Iterator<Item = &'static CatalogEntry> {
    catalog()
        .iter()
        .filter(|e| e.presentation == Presentation::Primary)
}

fn alg(name: &str, terms: [&[(u32, f64)]; DIM]) -> LieAlgebra {
    LieAlgebra::from_digits(name, terms).expect("catalog structure equations")
}

fn form(terms: &[(u32, f64)]) -> KForm {
    KForm::from_digits(3, terms).expect("catalog 3-form")
}

pub fn phi_std() -> KForm {
    form(&[
        (127, 1.0),
        (347, 1.0),
        (567, 1.0),
        (135, 1.0),
        (146, -1.0),
        (236, -1.0),
        (245, -1.0),
    ])
}

pub fn phi2() -> KForm {
    form(&[
        (147, 1.0),
        (267, 1.0),
        (357, 1.0),
        (123, 1.0),
        (156, 1.0),
        (245, 1.0),
        (346, -1.0),
    ])
}

pub fn phi4() -> KForm {
    form(&[
        (124, -1.0),
        (456, -1.0),
        (347, 1.0),
        (135, 1.0),
        (167, 1.0),
        (257, 1.0),
        (236, -1.0),
    ])
}

pub fn phi6() -> KForm {
    form(&[
        (123, 1.0),
        (145, 1.0),
        (167, 1.0),
        (257, 1.0),
        (246, -1.0),
        (347, 1.0),
        (356, 1.0),
    ])
}

/// On the `n12-orthonormal` presentation.
pub fn phi12() -> KForm {
    form(&[
        (124, -1.0),
        (135, 1.0),
        (167, 1.0),
        (236, -1.0),
        (257, 1.0),
        (347, 1.0),
        (456, -1.0),
    ])
}

/// A closed G2 form on `n9`, found among small integer combinations of a
/// basis of closed 3-forms.
pub fn phi9() -> KForm {
    form(&[
        (123, 1.0),
        (125, -1.0),
        (136, -1.0),
        (145, -1.0),
        (146, -1.0),
        (147, -1.0),
        (237, -1.0),
        (246, 1.0),
        (267, -1.0),
        (345, -2.0),
        (357, 1.0),
        (456, -1.0),
    ])
}

/// Stated nilsoliton data `(λ, diag D)` for the orthonormal basis.
fn certificate(algebra: &LieAlgebra, lambda: f64, d: [f64; DIM]) -> SolitonCertificate {
    let d = DerivationCandidate::diagonal(d);
    let residual = certificate_residual(algebra, &Metric::identity(), lambda, &d)
        .expect("identity metric");
    SolitonCertificate {
        lambda,
        d,
        residual,
    }
}

fn ricci_from(lambda: f64, d: [f64; DIM]) -> [f64; DIM] {
    d.map(|x| lambda + x)
}

struct Spec {
    key: &'static str,
    family: u8,
    presentation: Presentation,
    algebra: LieAlgebra,
    g2form: Option<KForm>,
    soliton: Option<(f64, [f64; DIM])>,
    ricci_table: Option<[f64; DIM]>,
    status: SolitonStatus,
    note: &'static str,
}

fn entry(s: Spec) -> CatalogEntry {
    let soliton = s
        .soliton
        .map(|(lambda, d)| certificate(&s.algebra, lambda, d));
    CatalogEntry {
        key: s.key,
        family: s.family,
        presentation: s.presentation,
        algebra: s.algebra,
        g2form: s.g2form,
        soliton,
        ricci_table: s.ricci_table,
        soliton_status: s.status,
        presentation_note: s.note,
    }
}

fn build() -> Vec<CatalogEntry> {
    use Presentation::{Alternate, Primary};
    use SolitonStatus::{No, OpenFormUnknown, Yes};

    let n2_d = [1.0, 1.5, 1.5, 2.0, 2.5, 2.5, 2.0];
    let n4_d = [1.0, 1.5, 2.5, 2.0, 2.0, 3.5, 3.0];
    let n6_d = [0.5, 2.0, 2.0, 2.5, 2.5, 3.0, 3.0];
    let n12_d = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0].map(|x| x / 8.0);

    vec![
        entry(Spec {
            key: "n1",
            family: 1,
            presentation: Primary,
            algebra: LieAlgebra::abelian("n1"),
            g2form: Some(phi_std()),
            soliton: Some((0.0, [0.0; DIM])),
            ricci_table: Some([0.0; DIM]),
            status: Yes,
            note: "abelian; flat",
        }),
        entry(Spec {
            key: "n2",
            family: 2,
            presentation: Primary,
            algebra: alg("n2", [&[], &[], &[], &[], &[(12, 1.0)], &[(13, 1.0)], &[]]),
            g2form: Some(phi2()),
            soliton: Some((-2.0, n2_d)),
            ricci_table: Some(ricci_from(-2.0, n2_d)),
            status: Yes,
            note: "decomposable",
        }),
        entry(Spec {
            key: "n3",
            family: 3,
            presentation: Primary,
            algebra: alg(
                "n3",
                [&[], &[], &[], &[(12, 1.0)], &[(13, 1.0)], &[(23, 1.0)], &[]],
            ),
            g2form: None,
            soliton: Some((-2.5, [1.5, 1.5, 1.5, 3.0, 3.0, 3.0, 2.5])),
            ricci_table: Some([-1.0, -1.0, -1.0, 0.5, 0.5, 0.5, 0.0]),
            status: Yes,
            note: "decomposable",
        }),
        entry(Spec {
            key: "n4",
            family: 4,
            presentation: Primary,
            algebra: alg(
                "n4",
                [&[], &[], &[(12, 1.0)], &[], &[], &[(13, 1.0), (24, 1.0)], &[(15, 1.0)]],
            ),
            g2form: Some(phi4()),
            soliton: Some((-2.5, n4_d)),
            ricci_table: Some(ricci_from(-2.5, n4_d)),
            status: Yes,
            note: "isomorphic to 3.8 in the nilsoliton classification table",
        }),
        entry(Spec {
            key: "n5",
            family: 5,
            presentation: Primary,
            algebra: alg(
                "n5",
                [&[], &[], &[(12, 1.0)], &[], &[], &[(13, 1.0)], &[(14, 1.0), (25, 1.0)]],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: Yes,
            note: "isomorphic to 3.11 in the nilsoliton classification table; nilsoliton in n5-nilsoliton",
        }),
        entry(Spec {
            key: "n6",
            family: 6,
            presentation: Primary,
            algebra: alg(
                "n6",
                [&[], &[], &[], &[(12, 1.0)], &[(13, 1.0)], &[(14, 1.0)], &[(15, 1.0)]],
            ),
            g2form: Some(phi6()),
            soliton: Some((-2.5, n6_d)),
            ricci_table: Some(ricci_from(-2.5, n6_d)),
            status: Yes,
            note: "isomorphic to 3.20 in the nilsoliton classification table",
        }),
        entry(Spec {
            key: "n7",
            family: 7,
            presentation: Primary,
            algebra: alg(
                "n7",
                [
                    &[],
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(13, 1.0)],
                    &[(14, 1.0), (23, 1.0)],
                    &[(15, 1.0)],
                ],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: Yes,
            note: "isomorphic to 2.39 in the nilsoliton classification table; nilsoliton in n7-nilsoliton",
        }),
        entry(Spec {
            key: "n8",
            family: 8,
            presentation: Primary,
            algebra: alg(
                "n8",
                [
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(13, 1.0)],
                    &[(23, 1.0)],
                    &[(15, 1.0), (24, 1.0)],
                    &[(16, 1.0), (34, 1.0)],
                ],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: Yes,
            note: "isomorphic to 2.5 in the nilsoliton classification table; nilsoliton in n8-nilsoliton",
        }),
        entry(Spec {
            key: "n9",
            family: 9,
            presentation: Primary,
            algebra: alg(
                "n9",
                [
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(13, 1.0)],
                    &[(23, 1.0)],
                    &[(15, 1.0), (24, 1.0)],
                    &[(16, 1.0), (34, 1.0), (25, 1.0)],
                ],
            ),
            g2form: Some(phi9()),
            soliton: None,
            ricci_table: None,
            status: No,
            note: "isomorphic to 1.1(iv) in the nilsoliton classification table; no nilsoliton",
        }),
        entry(Spec {
            key: "n10",
            family: 10,
            presentation: Primary,
            algebra: alg(
                "n10",
                [
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[],
                    &[(13, 1.0), (24, 1.0)],
                    &[(14, 1.0)],
                    &[(46, 1.0), (34, 1.0), (15, 1.0), (23, 1.0)],
                ],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: OpenFormUnknown,
            note: "isomorphic to 1.3(i_1) in the nilsoliton classification table",
        }),
        entry(Spec {
            key: "n11",
            family: 11,
            presentation: Primary,
            algebra: alg(
                "n11",
                [
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[],
                    &[(13, 1.0)],
                    &[(24, 1.0), (23, 1.0)],
                    &[(25, 1.0), (34, 1.0), (15, 1.0), (16, 1.0), (26, -3.0)],
                ],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: Yes,
            note: "nilsoliton in n11-orthonormal",
        }),
        entry(Spec {
            key: "n12",
            family: 12,
            presentation: Primary,
            algebra: alg(
                "n12",
                [
                    &[],
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(23, 1.0)],
                    &[(13, -1.0)],
                    &[(26, 2.0), (34, -2.0), (16, -2.0), (25, 2.0)],
                ],
            ),
            g2form: None,
            soliton: None,
            ricci_table: None,
            status: Yes,
            note: "G2 form and nilsoliton in n12-orthonormal",
        }),
        entry(Spec {
            key: "n5-nilsoliton",
            family: 5,
            presentation: Alternate,
            algebra: alg(
                "n5-nilsoliton",
                [
                    &[],
                    &[],
                    &[(12, SQRT3)],
                    &[],
                    &[],
                    &[(13, 2.0)],
                    &[(14, 1.0), (25, SQRT3)],
                ],
            ),
            g2form: None,
            soliton: Some((-6.5, [2.5, 3.5, 6.0, 6.0, 5.0, 8.5, 8.5])),
            ricci_table: Some([-4.0, -3.0, -0.5, -0.5, -1.5, 2.0, 2.0]),
            status: Yes,
            note: "diagonal rescaling of n5",
        }),
        entry(Spec {
            key: "n7-nilsoliton",
            family: 7,
            presentation: Alternate,
            algebra: alg(
                "n7-nilsoliton",
                [
                    &[],
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(13, SQRT6_2)],
                    &[(14, 1.0), (23, SQRT6_2)],
                    &[(15, SQRT2)],
                ],
            ),
            g2form: None,
            soliton: Some((-4.0, [1.25, 2.75, 2.5, 4.0, 3.75, 5.25, 5.0])),
            ricci_table: Some([-2.75, -1.25, -1.5, 0.0, -0.25, 1.25, 1.0]),
            status: Yes,
            note: "diagonal rescaling of n7",
        }),
        entry(Spec {
            key: "n8-nilsoliton",
            family: 8,
            presentation: Alternate,
            algebra: alg(
                "n8-nilsoliton",
                [
                    &[],
                    &[],
                    &[(12, 1.0)],
                    &[(13, -1.0)],
                    &[(23, -1.0)],
                    &[(15, 1.0), (24, 1.0)],
                    &[(16, -1.0), (34, -1.0)],
                ],
            ),
            g2form: None,
            soliton: Some((-2.5, [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5])),
            ricci_table: Some([-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0]),
            status: Yes,
            note: "sign change of e4, e5, e6 in n8",
        }),
        entry(Spec {
            key: "n11-orthonormal",
            family: 11,
            presentation: Alternate,
            algebra: alg(
                "n11-orthonormal",
                [
                    &[],
                    &[],
                    &[(12, SQRT13_13)],
                    &[],
                    &[(13, SQRT13_13), (14, -SQRT26_26)],
                    &[(24, SQRT26_26), (23, SQRT13_13)],
                    &[
                        (25, SQRT13_26),
                        (34, SQRT26_26),
                        (15, SQRT39_26),
                        (16, SQRT13_26),
                        (26, -SQRT39_26),
                    ],
                ],
            ),
            g2form: None,
            soliton: Some((
                -11.0 / 52.0,
                [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0].map(|x| x / 13.0),
            )),
            ricci_table: Some([-7.0, -7.0, -3.0, -3.0, 1.0, 1.0, 5.0].map(|x| x / 52.0)),
            status: Yes,
            note: "linear change of basis of n11",
        }),
        entry(Spec {
            key: "n12-orthonormal",
            family: 12,
            presentation: Alternate,
            algebra: alg(
                "n12-orthonormal",
                [
                    &[],
                    &[],
                    &[],
                    &[(12, SQRT3_6)],
                    &[(23, -0.25), (13, SQRT3_12)],
                    &[(23, -SQRT3_12), (13, -0.25)],
                    &[
                        (34, -SQRT3_6),
                        (25, SQRT3_12),
                        (26, 0.25),
                        (16, SQRT3_12),
                        (15, -0.25),
                    ],
                ],
            ),
            g2form: Some(phi12()),
            soliton: Some((-0.25, n12_d)),
            ricci_table: Some(ricci_from(-0.25, n12_d)),
            status: Yes,
            note: "linear change of basis of n12",
        }),
    ]
}

/// Coframe change taking the primary `n11` to `n11-orthonormal`:
/// row `i` expresses the new `e^i` in the old coframe. The `e^6` and `e^7`
/// rows are `−f^5/39` and `−(√13/1014) f^7`; the commonly quoted
/// `−f^5/3` and `−(√3/1014) f^7` do not reproduce the structure equations.
pub fn n11_basis_change() -> crate::linalg::Matrix7 {
    let s3 = SQRT3;
    let mut p = crate::linalg::Matrix7::zeros();
    p[(0, 1)] = 1.0;
    p[(1, 0)] = -s3 / 3.0;
    p[(2, 2)] = 39f64.sqrt() / 39.0;
    p[(2, 3)] = 39f64.sqrt() / 78.0;
    p[(3, 3)] = -(78f64.sqrt()) / 78.0;
    p[(4, 5)] = s3 / 39.0;
    p[(5, 4)] = -1.0 / 39.0;
    p[(6, 6)] = -(13f64.sqrt()) / 1014.0;
    p
}

/// Coframe change taking the primary `n12` to `n12-orthonormal`.
pub fn n12_basis_change() -> crate::linalg::Matrix7 {
    let s3 = SQRT3;
    let mut p = crate::linalg::Matrix7::zeros();
    p[(0, 1)] = s3 / 2.0;
    p[(1, 0)] = 1.0;
    p[(1, 1)] = -0.5;
    p[(2, 2)] = 1.0;
    p[(3, 3)] = -0.25;
    p[(4, 4)] = 0.25;
    p[(4, 5)] = 0.25;
    p[(5, 4)] = -s3 / 12.0;
    p[(5, 5)] = s3 / 12.0;
    p[(6, 6)] = -s3 / 48.0;
    p
}
