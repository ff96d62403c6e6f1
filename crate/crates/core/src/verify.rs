//! The reproduction suite: twelve numbered criteria, each a list of
//! measurements compared against fixed bounds.
//!
//! A [`Suite`] starts from the stored catalog forms; [`Suite::with_form`]
//! replaces one of them so a corrupted form can be seen to break the
//! checks that depend on it.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curvature::{nilsoliton_solve, ricci};
use crate::error::{Error, Result};
use crate::exterior::{FrameVector, KForm, MultiIndex, DIM};
use crate::flow::{
    bracket_flow, curvature_decay, full_flow_matches_reduction, integrate, integrate_with,
    reduced_flow_n4, reduced_flow_n6, ricci_along_flow, t_min_quadrature, FlowOptions, ReducedModel,
    ReducedState, DEFAULT_TOL,
};
use crate::g2::metric_from_g2;
use crate::liealg::catalog::{catalog, lookup, primary_entries};
use crate::liealg::{ce_differential, d_squared_residual, LieAlgebra};
use crate::obstruction::{infeasibility_search_with, obs1_cubic, su3_residual, SearchOptions};
use crate::linalg::Matrix7;
use crate::Metric;

#[derive(Clone, Debug, Deserialize)]
pub struct Golden {
    pub t_min: String,
    pub search: SearchGolden,
    pub n3_contradiction_residual_min: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SearchGolden {
    pub seed: u64,
    pub restarts: usize,
    pub feasible: Vec<String>,
    pub floors: BTreeMap<String, Floor>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct Floor {
    pub observed: f64,
    pub floor: f64,
}

impl Golden {
    pub fn t_min(&self) -> f64 {
        self.t_min.parse().expect("golden t_min is a number")
    }
}

pub fn golden() -> &'static Golden {
    static GOLDEN: OnceLock<Golden> = OnceLock::new();
    GOLDEN.get_or_init(|| {
        serde_json::from_str(include_str!("../data/golden.json")).expect("golden.json parses")
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Catalog,
    Metric,
    Ricci,
    Soliton,
    Flow,
    Obstruction,
    Search,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::Catalog => "catalog",
            Section::Metric => "metric",
            Section::Ricci => "ricci",
            Section::Soliton => "soliton",
            Section::Flow => "flow",
            Section::Obstruction => "obstruction",
            Section::Search => "search",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub section: Section,
    /// Wall-clock budget in seconds, when one is part of the criterion.
    pub time_limit: Option<f64>,
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, name: "catalog-integrity", section: Section::Catalog, time_limit: Some(1.0) },
    Criterion { id: 2, name: "metric-goldens", section: Section::Metric, time_limit: None },
    Criterion { id: 3, name: "ricci-goldens", section: Section::Ricci, time_limit: Some(1.0) },
    Criterion { id: 4, name: "nilsoliton-certificates", section: Section::Soliton, time_limit: None },
    Criterion { id: 5, name: "flow-closed-form", section: Section::Flow, time_limit: Some(10.0) },
    Criterion { id: 6, name: "reduced-conservation", section: Section::Flow, time_limit: None },
    Criterion { id: 7, name: "interval-endpoints", section: Section::Flow, time_limit: None },
    Criterion { id: 8, name: "curvature-decay", section: Section::Flow, time_limit: None },
    Criterion { id: 9, name: "soliton-persistence", section: Section::Flow, time_limit: None },
    Criterion { id: 10, name: "bracket-flow", section: Section::Flow, time_limit: None },
    Criterion { id: 11, name: "obstruction-suite", section: Section::Obstruction, time_limit: None },
    Criterion { id: 12, name: "search-evidence", section: Section::Search, time_limit: Some(300.0) },
];

impl Criterion {
    /// Matches a section name, the criterion name, or its number.
    pub fn matches(&self, filter: &str) -> bool {
        filter == self.section.name() || filter == self.name || filter == self.id.to_string()
    }
}

/// True when `filter` selects at least one criterion.
pub fn is_known_filter(filter: &str) -> bool {
    CRITERIA.iter().any(|c| c.matches(filter))
}

#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub label: String,
    pub measured: f64,
    pub expected: String,
    pub passed: bool,
}

impl Measurement {
    fn below(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Measurement {
            label: label.into(),
            measured,
            expected: format!("< {bound:e}"),
            passed: measured < bound,
        }
    }

    fn above(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Measurement {
            label: label.into(),
            measured,
            expected: format!("> {bound:e}"),
            passed: measured > bound,
        }
    }

    fn failed(label: impl Into<String>, err: &Error) -> Self {
        Measurement {
            label: format!("{}: {err}", label.into()),
            measured: f64::NAN,
            expected: "no error".into(),
            passed: false,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6e}, expected {}",
            if self.passed { "ok  " } else { "FAIL" },
            self.label,
            self.measured,
            self.expected
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub section: Section,
    pub passed: bool,
    pub seconds: f64,
    pub measurements: Vec<Measurement>,
}

impl CriterionReport {
    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.passed)
    }

    /// One line: status, number, name, elapsed time.
    pub fn summary(&self) -> String {
        format!(
            "{} {:>2} {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            writeln!(f, "{}", c.summary())?;
            for m in &c.measurements {
                writeln!(f, "       {m}")?;
            }
        }
        let failed = self.failed_names();
        if failed.is_empty() {
            writeln!(f, "all {} checks passed", self.criteria.len())
        } else {
            writeln!(f, "{} of {} checks failed: {}", failed.len(), self.criteria.len(), failed.join(", "))
        }
    }
}

/// Keys of the catalog entries carrying a stored G2 form that the suite
/// checks, in order.
pub const FORM_KEYS: [&str; 4] = ["n2", "n4", "n6", "n12-orthonormal"];

#[derive(Clone, Debug)]
pub struct Suite {
    forms: BTreeMap<String, KForm>,
}

impl Default for Suite {
    fn default() -> Self {
        let forms = FORM_KEYS
            .iter()
            .map(|&k| {
                let e = lookup(k).expect("catalog key");
                (k.to_string(), e.g2form.clone().expect("stored form"))
            })
            .collect();
        Suite { forms }
    }
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the form the suite uses for `key` (`"n12"` names the
    /// orthonormal presentation).
    pub fn with_form(mut self, key: &str, phi: KForm) -> Result<Self> {
        let key = if key == "n12" { "n12-orthonormal" } else { key };
        if !self.forms.contains_key(key) {
            return Err(Error::UnknownEntry(format!(
                "{key} has no stored G2 form; expected one of {}",
                FORM_KEYS.join(", ")
            )));
        }
        if phi.degree() != 3 {
            return Err(Error::DegreeMismatch { expected: 3, found: phi.degree() });
        }
        self.forms.insert(key.to_string(), phi);
        Ok(self)
    }

    fn form(&self, key: &str) -> &KForm {
        &self.forms[key]
    }

    /// Runs the criteria selected by `filter` (all when `None`).
    pub fn run(&self, filter: Option<&str>) -> SuiteReport {
        self.run_with(filter, |_| {})
    }

    /// Like [`Suite::run`], calling `on_done` after each criterion.
    pub fn run_with(&self, filter: Option<&str>, mut on_done: impl FnMut(&CriterionReport)) -> SuiteReport {
        let mut criteria = Vec::new();
        for c in CRITERIA.iter().filter(|c| filter.is_none_or(|f| c.matches(f))) {
            let start = Instant::now();
            let mut measurements = self.measure(c.id);
            let seconds = start.elapsed().as_secs_f64();
            if let Some(limit) = c.time_limit {
                measurements.push(Measurement::below("runtime [s]", seconds, limit));
            }
            let report = CriterionReport {
                id: c.id,
                name: c.name,
                section: c.section,
                passed: !measurements.is_empty() && measurements.iter().all(|m| m.passed),
                seconds,
                measurements,
            };
            on_done(&report);
            criteria.push(report);
        }
        SuiteReport { criteria }
    }

    fn measure(&self, id: u8) -> Vec<Measurement> {
        let mut out = Vec::new();
        match id {
            1 => self.catalog_integrity(&mut out),
            2 => self.metric_goldens(&mut out),
            3 => self.ricci_goldens(&mut out),
            4 => self.nilsoliton_certificates(&mut out),
            5 => self.flow_closed_form(&mut out),
            6 => self.reduced_conservation(&mut out),
            7 => self.interval_endpoints(&mut out),
            8 => self.curvature_decay(&mut out),
            9 => self.soliton_persistence(&mut out),
            10 => self.bracket_flow(&mut out),
            11 => self.obstruction_suite(&mut out),
            12 => self.search_evidence(&mut out),
            _ => unreachable!("criterion ids are 1..=12"),
        }
        out
    }

    /// The metric a catalog entry is checked in: the one induced by its
    /// G2 form when the suite has one, the identity otherwise.
    fn entry_metric(&self, key: &str) -> Result<Metric> {
        match self.forms.get(key) {
            Some(phi) => metric_from_g2(phi),
            None => Ok(Metric::identity()),
        }
    }

    fn catalog_integrity(&self, out: &mut Vec<Measurement>) {
        for e in primary_entries() {
            out.push(Measurement::below(
                format!("{} d^2 residual", e.key),
                d_squared_residual(&e.algebra),
                1e-9,
            ));
        }
        for key in FORM_KEYS {
            let alg = &lookup(key).expect("catalog key").algebra;
            let phi = self.form(key);
            out.push(Measurement::below(format!("{key} |d phi|"), ce_differential(phi, alg).max_abs(), 1e-9));
            match metric_from_g2(phi) {
                Ok(g) => out.push(Measurement::above(
                    format!("{key} smallest metric eigenvalue"),
                    crate::linalg::symmetric_eigenvalues(g.matrix())[0],
                    0.0,
                )),
                Err(err) => out.push(Measurement::failed(format!("{key} positivity"), &err)),
            }
        }
    }

    fn metric_goldens(&self, out: &mut Vec<Measurement>) {
        for key in FORM_KEYS {
            match metric_from_g2(self.form(key)) {
                Ok(g) => out.push(Measurement::below(
                    format!("{key} max |g - I|"),
                    (g.matrix() - Matrix7::identity()).amax(),
                    1e-9,
                )),
                Err(err) => out.push(Measurement::failed(format!("{key} metric"), &err)),
            }
        }
    }

    fn ricci_goldens(&self, out: &mut Vec<Measurement>) {
        for e in catalog().iter().filter(|e| e.ricci_table.is_some() && e.family != 1) {
            let table = e.ricci_table.expect("filtered");
            let want = Matrix7::from_diagonal(&table.into());
            let got = self
                .entry_metric(e.key)
                .and_then(|g| ricci(&e.algebra, &g).map(|r| *r.matrix()));
            match got {
                Ok(m) => out.push(Measurement::below(
                    format!("{} max |Ric - table|", e.key),
                    (m - want).amax(),
                    1e-9,
                )),
                Err(err) => out.push(Measurement::failed(format!("{} Ricci", e.key), &err)),
            }
        }
    }

    fn nilsoliton_certificates(&self, out: &mut Vec<Measurement>) {
        for e in catalog().iter().filter(|e| e.soliton.is_some() && e.family != 1) {
            let stored = e.soliton.as_ref().expect("filtered");
            let cert = self
                .entry_metric(e.key)
                .and_then(|g| nilsoliton_solve(&e.algebra, &g));
            match cert {
                Ok(c) => {
                    out.push(Measurement::below(format!("{} residual", e.key), c.residual, 1e-9));
                    out.push(Measurement::below(
                        format!("{} |lambda - {}|", e.key, stored.lambda),
                        (c.lambda - stored.lambda).abs(),
                        1e-9,
                    ));
                    out.push(Measurement::below(
                        format!("{} max |D - D_stored|", e.key),
                        (c.d.matrix() - stored.d.matrix()).amax(),
                        1e-9,
                    ));
                }
                Err(err) => out.push(Measurement::failed(format!("{} certificate", e.key), &err)),
            }
        }
    }

    fn flow_closed_form(&self, out: &mut Vec<Measurement>) {
        const TIMES: [f64; 5] = [0.1, 1.0, 3.0, 10.0, 100.0];
        let cases: [(&str, u32, Law); 2] = [
            ("n2", 123, |t| (10.0 * t / 3.0 + 1.0).powf(0.6)),
            ("n12-orthonormal", 135, |t| (t / 3.0 + 1.0).powf(0.75)),
        ];
        for (key, coeff, law) in cases {
            let alg = &lookup(key).expect("catalog key").algebra;
            match integrate_with(alg, self.form(key), &FlowOptions::at_times(&TIMES)) {
                Ok(traj) => {
                    for t in TIMES {
                        let got = traj.at(t).map_or(f64::NAN, |s| s.coeff(coeff));
                        let want = law(t);
                        out.push(Measurement::below(
                            format!("{key} c_{coeff}(t = {t}) relative error"),
                            relative(got, want),
                            1e-8,
                        ));
                    }
                }
                Err(err) => out.push(Measurement::failed(format!("{key} flow"), &err)),
            }
        }
    }

    fn reduced_conservation(&self, out: &mut Vec<Measurement>) {
        for (name, tr) in [
            ("n4", reduced_flow_n4(ReducedState::INITIAL, 50.0)),
            ("n6", reduced_flow_n6(ReducedState::INITIAL, 50.0)),
        ] {
            match tr {
                Ok(tr) => {
                    let worst = tr.points.iter().map(|(_, s)| s.curve_residual()).fold(0.0, nan_max);
                    out.push(Measurement::below(
                        format!("{name} max |v - 1/sqrt(u(2 - u^3))| on [0, 50]"),
                        worst,
                        1e-8,
                    ));
                }
                Err(err) => out.push(Measurement::failed(format!("{name} reduced flow"), &err)),
            }
        }
        for (key, model) in [("n4", ReducedModel::N4), ("n6", ReducedModel::N6)] {
            let alg = &lookup(key).expect("catalog key").algebra;
            let got = integrate(alg, self.form(key), 50.0, DEFAULT_TOL)
                .and_then(|traj| full_flow_matches_reduction(&traj, model));
            match got {
                Ok(r) => out.push(Measurement::below(
                    format!("{key} full flow vs reduced family on [0, 50]"),
                    r,
                    1e-7,
                )),
                Err(err) => out.push(Measurement::failed(format!("{key} full flow"), &err)),
            }
        }
    }

    fn interval_endpoints(&self, out: &mut Vec<Measurement>) {
        let n2 = &lookup("n2").expect("catalog key").algebra;
        match integrate(n2, self.form("n2"), -1.0, DEFAULT_TOL) {
            Ok(traj) => out.push(Measurement::below(
                "n2 |t_blowup + 3/10|",
                traj.blowup().map_or(f64::INFINITY, |e| (e.t + 0.3).abs()),
                1e-6,
            )),
            Err(err) => out.push(Measurement::failed("n2 backward flow", &err)),
        }
        let t_min = t_min_quadrature();
        out.push(Measurement::below("t_min quadrature vs golden", (t_min - golden().t_min()).abs(), 1e-12));
        let n4 = &lookup("n4").expect("catalog key").algebra;
        match integrate(n4, self.form("n4"), -1.0, DEFAULT_TOL) {
            Ok(traj) => out.push(Measurement::below(
                "n4 |t_blowup - t_min|",
                traj.blowup().map_or(f64::INFINITY, |e| (e.t - t_min).abs()),
                1e-5,
            )),
            Err(err) => out.push(Measurement::failed("n4 backward flow", &err)),
        }
        match reduced_flow_n4(ReducedState::INITIAL, 100.0) {
            Ok(tr) => out.push(Measurement::below(
                "|u(100) - 2^(1/3)|",
                tr.at(100.0).map_or(f64::NAN, |s| (s.u - 2f64.cbrt()).abs()),
                1e-3,
            )),
            Err(err) => out.push(Measurement::failed("reduced flow to t = 100", &err)),
        }
    }

    fn curvature_decay(&self, out: &mut Vec<Measurement>) {
        let laws: [(&str, Law); 2] = [
            ("n2", |t| 1.0 + 10.0 * t / 3.0),
            ("n12-orthonormal", |t| (t + 3.0) / 3.0),
        ];
        for (key, scale) in laws {
            let alg = &lookup(key).expect("catalog key").algebra;
            let dec = integrate(alg, self.form(key), 100.0, DEFAULT_TOL)
                .and_then(|traj| curvature_decay(&traj, alg));
            match dec {
                Ok(dec) => {
                    let c0 = dec[0].1;
                    let worst = dec.iter().map(|&(t, r)| (r * scale(t) - c0).abs()).fold(0.0, nan_max);
                    let law = if key == "n2" { "|R|(1 + 10t/3)" } else { "|R|(t + 3)" };
                    out.push(Measurement::below(
                        format!("{key} max deviation of {law} from its initial value (|R(0)| = {c0})"),
                        worst,
                        1e-6,
                    ));
                }
                Err(err) => out.push(Measurement::failed(format!("{key} curvature"), &err)),
            }
        }
        for key in ["n4", "n6"] {
            let alg = &lookup(key).expect("catalog key").algebra;
            let dec = integrate(alg, self.form(key), 100.0, DEFAULT_TOL)
                .and_then(|traj| curvature_decay(&traj, alg));
            match dec {
                Ok(dec) => {
                    let ratio = dec
                        .last()
                        .filter(|&&(t, _)| t == 100.0)
                        .map_or(f64::INFINITY, |&(_, r)| r / dec[0].1);
                    out.push(Measurement::below(format!("{key} |R(100)| / |R(0)|"), ratio, 1e-2));
                }
                Err(err) => out.push(Measurement::failed(format!("{key} curvature"), &err)),
            }
        }
    }

    fn soliton_persistence(&self, out: &mut Vec<Measurement>) {
        let laws: [(&str, Law); 2] = [
            ("n2", |t| 3.0 / (3.0 + 10.0 * t)),
            ("n12-orthonormal", |t| 3.0 / (3.0 + t)),
        ];
        for (key, law) in laws {
            let alg = &lookup(key).expect("catalog key").algebra;
            let rics = integrate_with(alg, self.form(key), &FlowOptions::at_times(&[1.0, 10.0]))
                .and_then(|traj| Ok((traj.times(), ricci_along_flow(&traj, alg)?)));
            match rics {
                Ok((times, rics)) => {
                    for (t, ric) in times.iter().zip(&rics).skip(1) {
                        out.push(Measurement::below(
                            format!("{key} max |Ric(t) - Ric(0) {}| at t = {t}", if key == "n2" { "3/(3 + 10t)" } else { "3/(3 + t)" }),
                            (ric.matrix() - rics[0].matrix() * law(*t)).amax(),
                            1e-7,
                        ));
                    }
                }
                Err(err) => out.push(Measurement::failed(format!("{key} Ricci along flow"), &err)),
            }
        }
    }

    fn bracket_flow(&self, out: &mut Vec<Measurement>) {
        let n2 = &lookup("n2").expect("catalog key").algebra;
        match bracket_flow(n2, self.form("n2"), 1e4) {
            Ok(states) => {
                let worst = states
                    .iter()
                    .map(|s| relative(s.norm(), (10.0 * s.t / 3.0 + 1.0).powf(-0.5)))
                    .fold(0.0, nan_max);
                out.push(Measurement::below("n2 |mu(t)| relative to (10t/3 + 1)^(-1/2)", worst, 1e-6));
                let increase = states
                    .windows(2)
                    .map(|w| w[1].norm() - w[0].norm())
                    .fold(f64::NEG_INFINITY, nan_max);
                out.push(Measurement::below("n2 largest increase of |mu| between samples", increase, 1e-12));
                let last = states.last().map_or(f64::NAN, |s| if s.t == 1e4 { s.norm() } else { f64::NAN });
                out.push(Measurement::below("n2 |mu(10^4)|", last, 0.05));
            }
            Err(err) => out.push(Measurement::failed("n2 bracket flow", &err)),
        }
    }

    fn obstruction_suite(&self, out: &mut Vec<Measurement>) {
        for key in FORM_KEYS {
            let phi = self.form(key);
            let worst = metric_from_g2(phi).and_then(|g| {
                let mut worst: f64 = 0.0;
                for i in 1..=DIM {
                    worst = worst.max(su3_residual(phi, &FrameVector::basis(i), &g)?.max_abs());
                }
                Ok(worst)
            });
            match worst {
                Ok(w) => out.push(Measurement::below(format!("{key} max su3 residual over e1..e7"), w, 1e-10)),
                Err(err) => out.push(Measurement::failed(format!("{key} su3 residual"), &err)),
            }
        }
        let n5 = &lookup("n5-nilsoliton").expect("catalog key").algebra;
        match obs1_cubic(n5, &FrameVector::basis(7)) {
            Ok(monomials) => {
                let want = [167, 237, 457].map(|d| MultiIndex::from_digits(d).expect("index"));
                let matching = monomials.iter().filter(|m| m.vars == want).count();
                out.push(Measurement {
                    label: "n5 (iota_e7 gamma)^3 monomials other than c167 c237 c457".into(),
                    measured: (monomials.len() - matching) as f64,
                    expected: "= 0".into(),
                    passed: monomials.len() == matching,
                });
                let coeff = monomials.iter().find(|m| m.vars == want).map_or(0.0, |m| m.coeff.max_abs());
                out.push(Measurement::above("n5 |coefficient of c167 c237 c457|", coeff, 0.0));
            }
            Err(err) => out.push(Measurement::failed("n5 obs1 expansion", &err)),
        }
    }

    fn search_evidence(&self, out: &mut Vec<Measurement>) {
        let gold = &golden().search;
        let opts = SearchOptions::new(gold.restarts, gold.seed);
        for key in &gold.feasible {
            let alg = algebra_for_search(key);
            let rep = infeasibility_search_with(alg, &Metric::identity(), &opts);
            out.push(Measurement::below(
                format!("{key} best residual (feasible: {}, {} restarts)", rep.feasible, rep.restarts),
                if rep.feasible { rep.best_residual } else { f64::INFINITY },
                1e-9,
            ));
        }
        for (key, floor) in &gold.floors {
            let alg = algebra_for_search(key);
            let rep = infeasibility_search_with(alg, &Metric::identity(), &opts);
            out.push(Measurement::above(
                format!("{key} best residual over {} restarts (golden floor)", rep.restarts),
                if rep.feasible { 0.0 } else { rep.best_residual },
                floor.floor,
            ));
        }
    }
}

/// A closed-form law in `t`.
type Law = fn(f64) -> f64;

fn algebra_for_search(key: &str) -> &'static LieAlgebra {
    &lookup(key).expect("golden search keys are catalog keys").algebra
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `max` that propagates NaN, so a missing sample fails its check.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
