//! Finite-horizon evaluation of the inf/liminf criteria for weighted shifts.
//!
//! A criterion is `Witnessed` when some grid point brings the log-quantity to
//! or below the tolerance; otherwise it is `Undetermined` and the report
//! carries the best point seen. Nothing here is ever reported as refuted.

use std::fmt;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator_engine::{direct_sum_a_log, LpExponent};
use crate::report::Real;
use crate::weights::WeightSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionId {
    SalasHypercyclic,
    SalasSupercyclic,
    ShkarinA123,
    QuasinilpotentB123,
    FixedJC123,
    DirectSumLq,
    AagCyclic,
    ScWitness,
}

impl CriterionId {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::SalasHypercyclic => "salas_hypercyclic",
            CriterionId::SalasSupercyclic => "salas_supercyclic",
            CriterionId::ShkarinA123 => "shkarin_a123",
            CriterionId::QuasinilpotentB123 => "quasinilpotent_b123",
            CriterionId::FixedJC123 => "fixed_j_c123",
            CriterionId::DirectSumLq => "direct_sum_lq",
            CriterionId::AagCyclic => "aag_cyclic",
            CriterionId::ScWitness => "sc_witness",
        }
    }
}

impl Serialize for CriterionId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Witnessed,
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Witnessed => "witnessed",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// Ordered integer parameters, rendered as a JSON object.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params(pub Vec<(&'static str, i64)>);

impl Params {
    pub fn get(&self, key: &str) -> Option<i64> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Per-`m` outcome of a Salas scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SalasRow {
    pub m: i64,
    /// First `n` with value at or below the tolerance.
    pub n: Option<i64>,
    /// Value at that `n`, or the smallest value seen when there is none.
    pub value_log: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectSumTrace {
    pub p1: LpExponent,
    pub p2: LpExponent,
    pub q: LpExponent,
    pub m: i64,
    /// `log a_n` for `n = 1..=n_max`.
    pub a_log: Vec<Real>,
    pub sup_a_log: Real,
    /// First `n` from which `log a_n` never increases on the horizon.
    pub monotone_from: i64,
    /// `(N, log sum_{n<=N} a_n^q)` at dyadic `N` (finite `q` only).
    pub partial_sums_log: Vec<(i64, Real)>,
    /// Least-squares slope of `log a_n` against `log n` over the last
    /// dyadic block (finite `q` only).
    pub tail_exponent: Option<Real>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LqTrend {
    Diverges,
    /// The sequence looks like a member of `l_q`: the cyclicity test fails.
    Converges,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AagTrace {
    pub q: LpExponent,
    pub k: i64,
    pub rho: RhoSpec,
    /// `log rho_n / sqrt(n)` tends to 0.
    pub rho_subexponential: bool,
    /// `log alpha_{-n} - k log n` is bounded above.
    pub alpha_negative_polynomial: bool,
    /// `log alpha_n - log rho_n` is bounded above.
    pub alpha_positive_dominated: bool,
    pub lq_trend: LqTrend,
    /// `{1/alpha_n}` appears to lie in `l_q`, which rules cyclicity out.
    pub obstruction: bool,
    pub heuristic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Trace {
    Salas { rows: Vec<SalasRow> },
    Values { first_index: i64, values_log: Vec<Real> },
    Sequence { n: Vec<i64>, values_log: Vec<Real> },
    DirectSum(Box<DirectSumTrace>),
    Aag(Box<AagTrace>),
}

/// Outcome of one criterion over one horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub criterion: CriterionId,
    pub verdict: Verdict,
    /// Witness parameters, or the best parameters seen when undetermined.
    pub witness: Params,
    pub value_log: f64,
    pub tolerance_log: f64,
    pub horizon: Params,
    /// Kept out of the report object; writers place it in a trace section.
    pub trace: Option<Trace>,
}

impl CriterionReport {
    pub fn is_witnessed(&self) -> bool {
        self.verdict == Verdict::Witnessed
    }

    fn decide(
        criterion: CriterionId,
        witness: Params,
        value_log: f64,
        tolerance_log: f64,
        horizon: Params,
    ) -> CriterionReport {
        CriterionReport {
            criterion,
            verdict: if value_log <= tolerance_log {
                Verdict::Witnessed
            } else {
                Verdict::Undetermined
            },
            witness,
            value_log,
            tolerance_log,
            horizon,
            trace: None,
        }
    }

    fn with_trace(mut self, trace: Trace) -> Self {
        self.trace = Some(trace);
        self
    }
}

impl Serialize for CriterionReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(6))?;
        map.serialize_entry("criterion", self.criterion.as_str())?;
        map.serialize_entry("verdict", self.verdict.as_str())?;
        map.serialize_entry("witness", &self.witness)?;
        map.serialize_entry("value_log", &Real(self.value_log))?;
        map.serialize_entry("tolerance_log", &Real(self.tolerance_log))?;
        map.serialize_entry("horizon", &self.horizon)?;
        map.end()
    }
}

/// Search limits shared by the criteria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budgets {
    pub tol_log: f64,
    pub m_max: i64,
    pub n_max: i64,
    pub j_max: i64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            tol_log: 1e-6f64.ln(),
            m_max: 64,
            n_max: 4096,
            j_max: 64,
        }
    }
}

impl Budgets {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_log.is_finite()) {
            return Err(Error::invalid("tol", "must be a finite log-magnitude"));
        }
        for (name, v) in [("m_max", self.m_max), ("n_max", self.n_max), ("j_max", self.j_max)] {
            if v < 1 {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Every limit doubled.
    pub fn doubled(&self) -> Budgets {
        Budgets {
            m_max: 2 * self.m_max,
            n_max: 2 * self.n_max,
            j_max: 2 * self.j_max,
            ..*self
        }
    }
}

/// Values this close count as equal when breaking ties, so that rounding
/// noise between algebraically equal grid points cannot pick the witness.
pub fn tie_slack(v: f64) -> f64 {
    if v.is_finite() {
        1e-12 * (1.0 + v.abs())
    } else {
        0.0
    }
}

fn need(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(field, reason))
    }
}

/// `max(log w~(m-n+1, m), -log w~(m+1, m+n))`.
pub fn salas_hypercyclic_value(ws: &WeightSequence, m: i64, n: i64) -> Result<f64> {
    let left = ws.w_tilde_log(m - n + 1, m)?.value();
    let right = ws.w_tilde_log(m + 1, m + n)?.value();
    Ok(left.max(-right))
}

/// `log w~(m-n+1, m) - log w~(m+1, m+n)`.
pub fn salas_supercyclic_value(ws: &WeightSequence, m: i64, n: i64) -> Result<f64> {
    Ok((ws.w_tilde_log(m - n + 1, m)? - ws.w_tilde_log(m + 1, m + n)?).value())
}

fn salas_scan(
    id: CriterionId,
    ws: &WeightSequence,
    m_max: i64,
    n_max: i64,
    tol: f64,
    value: impl Fn(&WeightSequence, i64, i64) -> Result<f64> + Sync,
) -> Result<CriterionReport> {
    need(m_max >= 0, "m_max", "must be nonnegative")?;
    need(n_max >= 1, "n_max", "must be positive")?;
    ws.prepare(1 - n_max, m_max + n_max)?;
    let rows: Vec<(SalasRow, i64, f64)> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let mut best = (1, f64::INFINITY);
            for n in 1..=n_max {
                let v = value(ws, m, n)?;
                if v < best.1 - tie_slack(best.1) {
                    best = (n, v);
                }
                if v <= tol {
                    let row = SalasRow {
                        m,
                        n: Some(n),
                        value_log: Real(v),
                    };
                    return Ok((row, n, v));
                }
            }
            let row = SalasRow {
                m,
                n: None,
                value_log: Real(best.1),
            };
            Ok((row, best.0, best.1))
        })
        .collect::<Result<_>>()?;

    // hardest m: the largest crossing (or best) value, smallest m on ties
    let mut worst = &rows[0];
    for r in &rows[1..] {
        if r.2 > worst.2 + tie_slack(worst.2) {
            worst = r;
        }
    }
    let witnessed = rows.iter().all(|r| r.0.n.is_some());
    let mut report = CriterionReport::decide(
        id,
        Params(vec![("m_worst", worst.0.m), ("n", worst.1)]),
        worst.2,
        tol,
        Params(vec![("m_max", m_max), ("n_max", n_max)]),
    );
    if !witnessed {
        report.verdict = Verdict::Undetermined;
    }
    Ok(report.with_trace(Trace::Salas {
        rows: rows.into_iter().map(|r| r.0).collect(),
    }))
}

/// Every `m in [0, m_max]` needs some `n <= n_max` with
/// `max(w~(m-n+1,m), w~(m+1,m+n)^-1) <= exp(tol)`.
pub fn salas_hypercyclic(ws: &WeightSequence, m_max: i64, n_max: i64, tol_log: f64) -> Result<CriterionReport> {
    salas_scan(CriterionId::SalasHypercyclic, ws, m_max, n_max, tol_log, salas_hypercyclic_value)
}

/// Every `m in [0, m_max]` needs some `n <= n_max` with
/// `w~(m-n+1,m) / w~(m+1,m+n) <= exp(tol)`.
pub fn salas_supercyclic(ws: &WeightSequence, m_max: i64, n_max: i64, tol_log: f64) -> Result<CriterionReport> {
    salas_scan(CriterionId::SalasSupercyclic, ws, m_max, n_max, tol_log, salas_supercyclic_value)
}

/// `-log w~(1, m) + log w~(-j(m-a), 0) / j`.
pub fn a123_value(ws: &WeightSequence, a: i64, j: i64, m: i64) -> Result<f64> {
    Ok(-ws.w_tilde_log(1, m)?.value() + ws.w_tilde_log(-j * (m - a), 0)?.value() / j as f64)
}

/// Lexicographic `(value, m, j)` minimum; values within [`tie_slack`] tie.
fn better(a: (f64, i64, i64), b: (f64, i64, i64)) -> bool {
    if a.0 < b.0 - tie_slack(b.0) {
        return true;
    }
    if a.0 > b.0 + tie_slack(b.0) {
        return false;
    }
    (a.1, a.2) < (b.1, b.2)
}

pub fn shkarin_a123(ws: &WeightSequence, a: i64, j_max: i64, m_max: i64, tol_log: f64) -> Result<CriterionReport> {
    need(a >= 1, "a", "must be at least 1")?;
    need(j_max >= 1, "j_max", "must be positive")?;
    need(m_max >= a, "m_max", "must be at least a")?;
    ws.prepare(-j_max * (m_max - a), m_max)?;
    let rows: Vec<(f64, i64, i64)> = (1..=j_max)
        .into_par_iter()
        .map(|j| {
            let mut best = (f64::INFINITY, a, j);
            for m in a..=m_max {
                let cand = (a123_value(ws, a, j, m)?, m, j);
                if better(cand, best) {
                    best = cand;
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let best = rows.into_iter().reduce(|x, y| if better(y, x) { y } else { x }).expect("j_max >= 1");
    Ok(CriterionReport::decide(
        CriterionId::ShkarinA123,
        Params(vec![("j", best.2), ("m", best.1)]),
        best.0,
        tol_log,
        Params(vec![("a", a), ("j_max", j_max), ("m_max", m_max)]),
    ))
}

/// `min_n log w~(1-n, 0) / n`; the trace holds every value, i.e. the
/// spectral-radius estimates of `T^-1`'s dual side.
pub fn quasinilpotent_b123(ws: &WeightSequence, n_max: i64, tol_log: f64) -> Result<CriterionReport> {
    need(n_max >= 1, "n_max", "must be positive")?;
    ws.prepare(1 - n_max, 0)?;
    let values: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| Ok(ws.w_tilde_log(1 - n, 0)?.value() / n as f64))
        .collect::<Result<_>>()?;
    let (mut bn, mut bv) = (1, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v < bv - tie_slack(bv) {
            bn = i as i64 + 1;
            bv = v;
        }
    }
    Ok(CriterionReport::decide(
        CriterionId::QuasinilpotentB123,
        Params(vec![("n", bn)]),
        bv,
        tol_log,
        Params(vec![("n_max", n_max)]),
    )
    .with_trace(Trace::Values {
        first_index: 1,
        values_log: values.into_iter().map(Real).collect(),
    }))
}

/// `log w~(a - jm, 0) - j log w~(1, m)`.
pub fn c123_value(ws: &WeightSequence, j: i64, a: i64, m: i64) -> Result<f64> {
    Ok(ws.w_tilde_log(a - j * m, 0)?.value() - j as f64 * ws.w_tilde_log(1, m)?.value())
}

/// Minimum over `m` of [`c123_value`]. The scan starts at the first `m` for
/// which `[a - jm, 0]` is nonempty.
pub fn fixed_j_c123(ws: &WeightSequence, j: i64, a: i64, m_max: i64, tol_log: f64) -> Result<CriterionReport> {
    need(j >= 1, "j", "must be at least 1")?;
    need(a >= 1, "a", "must be at least 1")?;
    need(m_max >= 1, "m_max", "must be positive")?;
    let m0 = ((a + j - 1) / j).max(1);
    let horizon = Params(vec![("j", j), ("a", a), ("m_max", m_max)]);
    if m0 > m_max {
        return Ok(CriterionReport::decide(
            CriterionId::FixedJC123,
            Params(vec![("m", m0)]),
            f64::INFINITY,
            tol_log,
            horizon,
        ));
    }
    ws.prepare(a - j * m_max, m_max)?;
    let values: Vec<f64> = (m0..=m_max)
        .into_par_iter()
        .map(|m| c123_value(ws, j, a, m))
        .collect::<Result<_>>()?;
    let (mut bm, mut bv) = (m0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v < bv - tie_slack(bv) {
            bm = m0 + i as i64;
            bv = v;
        }
    }
    Ok(CriterionReport::decide(
        CriterionId::FixedJC123,
        Params(vec![("m", bm)]),
        bv,
        tol_log,
        horizon,
    ))
}

/// Slack for the monotonicity test of `log a_n` when `q = inf`.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Evidence that `{a_n}` lies in `l_q`, `q = q(p1, p2)`.
///
/// For `q = inf` the value is the largest step `log a_{n+1} - log a_n` over
/// the last dyadic block, compared against [`MONOTONE_SLACK`]: a bounded,
/// eventually non-increasing trace. For finite `q` the value is the log of
/// the last dyadic block's share of `sum a_n^q`, compared against `tol_log`.
pub fn direct_sum_lq(
    ws: &WeightSequence,
    p1: LpExponent,
    p2: LpExponent,
    m: i64,
    n_max: i64,
    tol_log: f64,
) -> Result<CriterionReport> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if let LpExponent::Finite(v) = p {
            need(v.is_finite() && v >= 1.0, name, "must lie in [1, inf]")?;
        }
    }
    need(m >= 0, "m", "must be nonnegative")?;
    need(n_max >= 1, "n_max", "must be positive")?;
    ws.prepare(m - n_max + 1, m + n_max)?;
    let a_log: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| Ok(direct_sum_a_log(ws, m, n)?.value()))
        .collect::<Result<_>>()?;
    let q = LpExponent::direct_sum_q(p1, p2);
    let sup = a_log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = (n_max / 2).max(1);

    let mut monotone_from = n_max;
    for n in (1..=n_max).rev() {
        if n < n_max && a_log[n as usize] - a_log[n as usize - 1] > MONOTONE_SLACK {
            break;
        }
        monotone_from = n;
    }

    let mut trace = DirectSumTrace {
        p1,
        p2,
        q,
        m,
        a_log: a_log.iter().copied().map(Real).collect(),
        sup_a_log: Real(sup),
        monotone_from,
        partial_sums_log: Vec::new(),
        tail_exponent: None,
    };
    let horizon = Params(vec![("m", m), ("n_max", n_max)]);
    let report = match q {
        LpExponent::Infinity => {
            let step = (half..n_max)
                .map(|n| a_log[n as usize] - a_log[n as usize - 1])
                .fold(f64::NEG_INFINITY, f64::max);
            let witnessed = sup.is_finite() && step <= MONOTONE_SLACK;
            let mut r = CriterionReport::decide(
                CriterionId::DirectSumLq,
                Params(vec![("m", m), ("n_monotone", monotone_from)]),
                step,
                MONOTONE_SLACK,
                horizon,
            );
            if !witnessed {
                r.verdict = Verdict::Undetermined;
            }
            r
        }
        LpExponent::Finite(qv) => {
            let mut total = f64::NEG_INFINITY;
            let mut next = 1;
            let mut at_half = f64::NEG_INFINITY;
            for n in 1..=n_max {
                total = log_add(total, qv * a_log[n as usize - 1]);
                if n == half {
                    at_half = total;
                }
                if n == next || n == n_max {
                    trace.partial_sums_log.push((n, Real(total)));
                    next *= 2;
                }
            }
            let block = if n_max == 1 { total } else { log_sub(total, at_half) };
            let value = block - total;
            trace.tail_exponent = fit_slope((half + 1..=n_max).map(|n| ((n as f64).ln(), a_log[n as usize - 1])));
            CriterionReport::decide(
                CriterionId::DirectSumLq,
                Params(vec![("m", m), ("n_block_start", half + 1)]),
                value,
                tol_log,
                horizon,
            )
        }
    };
    Ok(report.with_trace(Trace::DirectSum(Box::new(trace))))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(e^a - e^b)` for `a >= b`.
fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    a + (-d.exp()).ln_1p()
}

fn fit_slope(points: impl Iterator<Item = (f64, f64)>) -> Option<Real> {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| Real(sxy / sxx))
}

/// A positive sequence `rho_n`, `n >= 1`, whose submultiplicativity the
/// caller vouches for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSpec {
    /// `rho_n = c`.
    Constant { c: f64 },
    /// `rho_n = c n^d`.
    Polynomial { c: f64, d: f64 },
    /// `rho_n = exp(c n^beta)`.
    StretchedExp { c: f64, beta: f64 },
}

impl RhoSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoSpec::Constant { c } => c.is_finite() && c > 0.0,
            RhoSpec::Polynomial { c, d } => c.is_finite() && c > 0.0 && d.is_finite(),
            RhoSpec::StretchedExp { c, beta } => c.is_finite() && beta.is_finite() && beta >= 0.0,
        };
        need(ok, "rho", "parameters must be finite with positive scale")
    }

    pub fn log_at(&self, n: i64) -> f64 {
        let x = n as f64;
        match *self {
            RhoSpec::Constant { c } => c.ln(),
            RhoSpec::Polynomial { c, d } => c.ln() + d * x.ln(),
            RhoSpec::StretchedExp { c, beta } => c * x.powf(beta),
        }
    }
}

impl std::str::FromStr for RhoSpec {
    type Err = Error;

    /// `constant(c)`, `poly(c,d)` or `sexp(c,beta)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("rho", format!("cannot parse `{s}`"));
        let (name, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        let rho = match (name.trim(), args.as_slice()) {
            ("constant", [c]) => RhoSpec::Constant { c: *c },
            ("poly", [c, d]) => RhoSpec::Polynomial { c: *c, d: *d },
            ("sexp", [c, beta]) => RhoSpec::StretchedExp { c: *c, beta: *beta },
            _ => return Err(bad()),
        };
        rho.validate()?;
        Ok(rho)
    }
}

/// Bounded-above heuristic: the growth of the running maximum over the
/// second half is small against the growth over the second quarter.
fn looks_bounded_above(xs: &[f64]) -> bool {
    let n = xs.len();
    if n < 4 {
        return true;
    }
    let run_max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m1 = run_max(&xs[..n / 4]);
    let m2 = run_max(&xs[..n / 2]);
    let m4 = run_max(xs);
    let g_late = m4 - m2;
    let g_early = m2 - m1;
    g_late <= 1e-9 * (1.0 + m4.abs()) || g_late <= 0.8 * g_early
}

fn tends_to_zero(xs: &[f64]) -> bool {
    let n = xs.len();
    let peak = xs[..n.div_ceil(2)].iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let late = xs[n / 2..].iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    peak == 0.0 || (late <= peak && xs[n - 1].abs() < peak)
}

/// Default threshold for the divergence test: the first half of the
/// horizon carries at most three quarters of the mass.
pub fn aag_default_tol() -> f64 {
    0.75f64.ln()
}

/// Checks the hypotheses of the `alpha_n` cyclicity test on `[1, n_max]`
/// and the divergence of `sum_{|n|<=N} alpha_n^-q`, `1/p + 1/q = 1`.
///
/// The value is `log(S_{N/2} / S_N)` (for `q = inf`, the ratio of the
/// running maxima of `1/alpha_n`). It is `Witnessed` when all three
/// hypotheses look satisfied and the value is at most `tol_log`.
pub fn aag_cyclic(
    ws: &WeightSequence,
    p: LpExponent,
    k: i64,
    rho: Option<&RhoSpec>,
    n_max: i64,
    tol_log: f64,
) -> Result<CriterionReport> {
    let rho = rho.ok_or_else(|| Error::invalid("rho", "a submultiplicative sequence is required"))?;
    rho.validate()?;
    need(k >= 1, "k", "must be at least 1")?;
    need(n_max >= 2, "n_max", "must be at least 2")?;
    ws.prepare(-n_max, n_max)?;
    let q = p.conjugate();
    let rows: Vec<(f64, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| Ok((ws.alpha_log(n)?.value(), ws.alpha_log(-n)?.value())))
        .collect::<Result<_>>()?;
    let rho_trend: Vec<f64> = (1..=n_max).map(|n| rho.log_at(n) / (n as f64).sqrt()).collect();
    let neg_poly: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.1 - k as f64 * ((i + 1) as f64).ln())
        .collect();
    let pos_rho: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r.0 - rho.log_at(i as i64 + 1)).collect();
    let h1 = tends_to_zero(&rho_trend);
    let h2 = looks_bounded_above(&neg_poly);
    let h3 = looks_bounded_above(&pos_rho);

    // mass of 1/alpha_n over |n| <= N
    let half = (n_max / 2) as usize;
    let mut total: f64 = 0.0; // alpha_0 = 1
    let mut at_half: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let (x, y) = (-r.0, -r.1);
        total = match q {
            LpExponent::Infinity => total.max(x).max(y),
            LpExponent::Finite(qv) => log_add(log_add(total, qv * x), qv * y),
        };
        if i + 1 == half {
            at_half = total;
        }
    }
    let value = at_half - total;
    let lq_trend = if value <= tol_log {
        LqTrend::Diverges
    } else if value >= -1e-6 {
        LqTrend::Converges
    } else {
        LqTrend::Inconclusive
    };
    let mut report = CriterionReport::decide(
        CriterionId::AagCyclic,
        Params(vec![("k", k)]),
        value,
        tol_log,
        Params(vec![("n_max", n_max)]),
    );
    if !(h1 && h2 && h3) {
        report.verdict = Verdict::Undetermined;
    }
    Ok(report.with_trace(Trace::Aag(Box::new(AagTrace {
        q,
        k,
        rho: *rho,
        rho_subexponential: h1,
        alpha_negative_polynomial: h2,
        alpha_positive_dominated: h3,
        lq_trend,
        obstruction: lq_trend == LqTrend::Converges,
        heuristic: true,
    }))))
}

/// `max_{|s|<=R} log w~(s-n+1, s) - min_{|t|<=R} log w~(t+1, t+n)`.
pub fn sc_value(ws: &WeightSequence, radius: i64, n: i64) -> Result<f64> {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for s in -radius..=radius {
        hi = hi.max(ws.w_tilde_log(s - n + 1, s)?.value());
        lo = lo.min(ws.w_tilde_log(s + 1, s + n)?.value());
    }
    Ok(hi - lo)
}

/// Greedy search for `n_1 < n_2 < ...` with `||T^{n_k} x|| ||S^{n_k} y||`
/// small uniformly over basis vectors supported in `[-R, R]`, where `S` is
/// the inverse of `T` on finitely supported vectors. The `k`-th element must
/// reach `tol - (k-1) log 2`.
pub fn sc_witness(ws: &WeightSequence, radius: i64, n_max: i64, tol_log: f64) -> Result<CriterionReport> {
    need(radius >= 0, "support_radius", "must be nonnegative")?;
    need(n_max >= 1, "n_max", "must be positive")?;
    ws.prepare(-radius - n_max, radius + n_max)?;
    let values: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| sc_value(ws, radius, n))
        .collect::<Result<_>>()?;
    let mut seq = Vec::new();
    let mut seq_vals = Vec::new();
    let halving = 2f64.ln();
    for (i, &v) in values.iter().enumerate() {
        if v <= tol_log - seq.len() as f64 * halving {
            seq.push(i as i64 + 1);
            seq_vals.push(Real(v));
        }
    }
    let horizon = Params(vec![("support_radius", radius), ("n_max", n_max)]);
    let report = if let (Some(&first), Some(&last)) = (seq.first(), seq.last()) {
        CriterionReport {
            criterion: CriterionId::ScWitness,
            verdict: Verdict::Witnessed,
            witness: Params(vec![("n_first", first), ("n_last", last), ("length", seq.len() as i64)]),
            value_log: seq_vals[seq_vals.len() - 1].0,
            tolerance_log: tol_log,
            horizon,
            trace: None,
        }
    } else {
        let (mut bn, mut bv) = (1, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v < bv - tie_slack(bv) {
                bn = i as i64 + 1;
                bv = v;
            }
        }
        CriterionReport {
            criterion: CriterionId::ScWitness,
            verdict: Verdict::Undetermined,
            witness: Params(vec![("n_first", bn), ("n_last", bn), ("length", 0)]),
            value_log: bv,
            tolerance_log: tol_log,
            horizon,
            trace: None,
        }
    };
    Ok(report.with_trace(Trace::Sequence {
        n: seq,
        values_log: seq_vals,
    }))
}

// ---------------------------------------------------------------------------
// classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Condition {
    /// Supercyclicity Criterion.
    C1,
    /// Supercyclic.
    C2,
    /// Weakly supercyclic.
    C3,
    /// `T + T` cyclic.
    C4,
    /// Some power `T^n`, `n >= 2`, cyclic.
    C5,
    /// Every power cyclic.
    C6,
    /// `T` itself cyclic.
    Cyclic,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::C1,
        Condition::C2,
        Condition::C3,
        Condition::C4,
        Condition::C5,
        Condition::C6,
        Condition::Cyclic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::C5 => "C5",
            Condition::C6 => "C6",
            Condition::Cyclic => "cyclic",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Condition::C1 => "satisfies the Supercyclicity Criterion",
            Condition::C2 => "supercyclic",
            Condition::C3 => "weakly supercyclic",
            Condition::C4 => "T+T cyclic",
            Condition::C5 => "some power T^n with n>=2 cyclic",
            Condition::C6 => "every power T^n cyclic",
            Condition::Cyclic => "T cyclic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Undetermined,
    Conflicting,
}

/// Which implication family an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// The six conditions are equivalent when `p <= 2`.
    Dichotomy,
    /// Implications valid for every `p`.
    GeneralImplication,
    /// Some power cyclic implies `T + T` cyclic, for shifts.
    PowerToDirectSum,
    /// `C6` with `n = 1`.
    Definition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: Condition,
    pub to: Condition,
    pub rule: Rule,
}

impl Edge {
    const fn new(from: Condition, to: Condition, rule: Rule) -> Edge {
        Edge { from, to, rule }
    }
}

/// Why a status was assigned.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Justification {
    /// A witnessed criterion.
    Evidence { criterion: CriterionId, witness: String },
    /// `from` holds and `from => to`.
    Forward { edge: Edge },
    /// `to` fails and `from => to`, so `from` fails.
    Contrapositive { edge: Edge },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionStatus {
    pub condition: Condition,
    pub meaning: &'static str,
    pub status: Status,
    pub justification: Vec<Justification>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub p: LpExponent,
    pub statuses: Vec<ConditionStatus>,
    pub reports: Vec<CriterionReport>,
}

impl ClassificationReport {
    pub fn status(&self, c: Condition) -> Status {
        self.statuses.iter().find(|s| s.condition == c).map(|s| s.status).expect("all conditions present")
    }
}

const GENERAL_EDGES: [Edge; 5] = [
    Edge::new(Condition::C1, Condition::C4, Rule::GeneralImplication),
    Edge::new(Condition::C1, Condition::C2, Rule::GeneralImplication),
    Edge::new(Condition::C2, Condition::C3, Rule::GeneralImplication),
    Edge::new(Condition::C3, Condition::C6, Rule::GeneralImplication),
    Edge::new(Condition::C6, Condition::C5, Rule::GeneralImplication),
];

/// The implications a classification at exponent `p` may use.
pub fn allowed_edges(p: LpExponent) -> Vec<Edge> {
    let mut edges = Vec::new();
    if p.value() <= 2.0 {
        let six = &Condition::ALL[..6];
        for &a in six {
            for &b in six {
                if a != b {
                    edges.push(Edge::new(a, b, Rule::Dichotomy));
                }
            }
        }
    } else {
        edges.extend(GENERAL_EDGES);
        edges.push(Edge::new(Condition::C5, Condition::C4, Rule::PowerToDirectSum));
    }
    edges.push(Edge::new(Condition::C6, Condition::Cyclic, Rule::Definition));
    edges
}

/// Every edge cited in `report` belongs to [`allowed_edges`], points at the
/// condition it justifies, and the cited premise has the required status.
pub fn check_justifications(report: &ClassificationReport) -> bool {
    let allowed = allowed_edges(report.p);
    report.statuses.iter().all(|st| {
        st.justification.iter().all(|j| match j {
            Justification::Evidence { .. } => true,
            Justification::Forward { edge } => {
                allowed.contains(edge)
                    && edge.to == st.condition
                    && matches!(st.status, Status::Holds | Status::Conflicting)
                    && matches!(report.status(edge.from), Status::Holds | Status::Conflicting)
            }
            Justification::Contrapositive { edge } => {
                allowed.contains(edge)
                    && edge.from == st.condition
                    && matches!(st.status, Status::Fails | Status::Conflicting)
                    && matches!(report.status(edge.to), Status::Fails | Status::Conflicting)
            }
        })
    })
}

/// Runs the criteria and propagates their verdicts along [`allowed_edges`].
///
/// Evidence used: a witnessed Salas condition gives `C2`; a witnessed
/// `direct_sum_lq(p, p, m)` for some `m <= min(m_max, 4)` refutes `C4`;
/// `shkarin_a123` witnessed for every `a` in `1..=4`, or a witnessed
/// `quasinilpotent_b123`, gives cyclicity.
pub fn classify(ws: &WeightSequence, p: LpExponent, budgets: &Budgets) -> Result<ClassificationReport> {
    budgets.validate()?;
    let b = budgets;
    let sup = salas_supercyclic(ws, b.m_max, b.n_max, b.tol_log)?;
    let hyp = salas_hypercyclic(ws, b.m_max, b.n_max, b.tol_log)?;
    let a_max = 4.min(b.m_max);
    let a123: Vec<CriterionReport> = (1..=a_max)
        .map(|a| shkarin_a123(ws, a, b.j_max, b.m_max, b.tol_log))
        .collect::<Result<_>>()?;
    let b123 = quasinilpotent_b123(ws, b.n_max, b.tol_log)?;
    let dsl: Vec<CriterionReport> = (0..=b.m_max.min(4))
        .map(|m| direct_sum_lq(ws, p, p, m, b.n_max, b.tol_log))
        .collect::<Result<_>>()?;

    let mut holds: Vec<Vec<Justification>> = vec![Vec::new(); 7];
    let mut fails: Vec<Vec<Justification>> = vec![Vec::new(); 7];
    let idx = |c: Condition| Condition::ALL.iter().position(|x| *x == c).expect("known condition");
    let evidence = |r: &CriterionReport| Justification::Evidence {
        criterion: r.criterion,
        witness: r.witness.to_string(),
    };
    for r in [&sup, &hyp] {
        if r.is_witnessed() {
            holds[idx(Condition::C2)].push(evidence(r));
        }
    }
    if let Some(r) = dsl.iter().find(|r| r.is_witnessed()) {
        fails[idx(Condition::C4)].push(evidence(r));
    }
    if a123.iter().all(|r| r.is_witnessed()) {
        if let Some(r) = a123.last() {
            holds[idx(Condition::Cyclic)].push(evidence(r));
        }
    }
    if b123.is_witnessed() {
        holds[idx(Condition::Cyclic)].push(evidence(&b123));
    }

    let edges = allowed_edges(p);
    loop {
        let mut changed = false;
        for e in &edges {
            let (f, t) = (idx(e.from), idx(e.to));
            if !holds[f].is_empty() && holds[t].is_empty() {
                holds[t].push(Justification::Forward { edge: *e });
                changed = true;
            }
            if !fails[t].is_empty() && fails[f].is_empty() {
                fails[f].push(Justification::Contrapositive { edge: *e });
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let statuses = Condition::ALL
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let (status, justification) = match (holds[i].is_empty(), fails[i].is_empty()) {
                (true, true) => (Status::Undetermined, Vec::new()),
                (false, true) => (Status::Holds, holds[i].clone()),
                (true, false) => (Status::Fails, fails[i].clone()),
                (false, false) => (Status::Conflicting, [holds[i].clone(), fails[i].clone()].concat()),
            };
            ConditionStatus {
                condition: c,
                meaning: c.describe(),
                status,
                justification,
            }
        })
        .collect();

    let mut reports = vec![sup, hyp];
    reports.extend(a123);
    reports.push(b123);
    reports.extend(dsl);
    Ok(ClassificationReport { p, statuses, reports })
}
