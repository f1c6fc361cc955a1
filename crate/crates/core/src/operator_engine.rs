//! Functional calculus for weighted shifts on finitely supported vectors.
//!
//! Amplitudes are kept as a unit phase and a log-magnitude so that the huge
//! coefficients of transition polynomials never overflow. Sums over colliding
//! indices are anchored at the largest term; a sum that is zero up to the
//! rounding noise of its inputs collapses to an absent entry.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::report::Real;
use crate::weights::WeightSequence;

const FLUSH_FLOOR: f64 = 1e-15;

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

/// A nonzero complex number `phase * exp(log_mag)`.
#[derive(Clone, Copy, Debug)]
pub struct Amplitude {
    pub phase: Complex64,
    pub log_mag: f64,
    /// Rounding budget: the total absolute log content that went into this
    /// value. Relative error is about `EPSILON * (1 + scale)`.
    scale: f64,
}

impl Amplitude {
    pub const ONE: Amplitude = Amplitude {
        phase: Complex64::new(1.0, 0.0),
        log_mag: 0.0,
        scale: 0.0,
    };

    pub fn new(phase: Complex64, log_mag: LogMagnitude) -> Option<Amplitude> {
        if log_mag.is_zero() || phase.norm() == 0.0 {
            return None;
        }
        Some(Amplitude {
            phase: unit(phase),
            log_mag: log_mag.value(),
            scale: 0.0,
        })
    }

    pub fn from_complex(z: Complex64) -> Option<Amplitude> {
        let r = z.norm();
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        Some(Amplitude {
            phase: z / r,
            log_mag: r.ln(),
            scale: 0.0,
        })
    }

    pub fn log(&self) -> LogMagnitude {
        LogMagnitude(self.log_mag)
    }

    /// The value as a complex double (may overflow to infinity).
    pub fn to_complex(&self) -> Complex64 {
        self.phase * self.log_mag.exp()
    }

    /// Multiply by `phase * exp(log)`.
    pub fn mul(self, phase: Complex64, log: LogMagnitude) -> Amplitude {
        Amplitude {
            phase: unit(self.phase * phase),
            log_mag: self.log_mag + log.value(),
            scale: self.scale + log.value().abs() + 1.0,
        }
    }

    pub fn times(self, other: Amplitude) -> Amplitude {
        let mut out = self.mul(other.phase, other.log());
        out.scale += other.scale;
        out
    }

    pub fn conj(self) -> Amplitude {
        Amplitude {
            phase: self.phase.conj(),
            ..self
        }
    }

    /// `|self - other| / max(|self|, |other|)`.
    pub fn relative_diff(&self, other: &Amplitude) -> f64 {
        let m = self.log_mag.max(other.log_mag);
        let a = self.phase * (self.log_mag - m).exp();
        let b = other.phase * (other.log_mag - m).exp();
        (a - b).norm()
    }
}

/// Equality of values; the rounding budget is ignored.
impl std::ops::Neg for Amplitude {
    type Output = Amplitude;

    fn neg(self) -> Amplitude {
        Amplitude {
            phase: -self.phase,
            ..self
        }
    }
}

impl PartialEq for Amplitude {
    fn eq(&self, other: &Self) -> bool {
        self.phase == other.phase && self.log_mag == other.log_mag
    }
}

/// Anchored sum of amplitudes.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    terms: Vec<Amplitude>,
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator::default()
    }

    pub fn push(&mut self, a: Amplitude) {
        self.terms.push(a);
    }

    pub fn push_opt(&mut self, a: Option<Amplitude>) {
        if let Some(a) = a {
            self.terms.push(a);
        }
    }

    /// The sum, or `None` when it cancels to within the rounding noise of
    /// the summands.
    pub fn finish(self) -> Option<Amplitude> {
        match self.terms.len() {
            0 => return None,
            1 => return Some(self.terms[0]),
            _ => {}
        }
        let anchor = self.terms.iter().map(|t| t.log_mag).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        let mut noise = 0.0;
        let mut scale: f64 = 0.0;
        for t in &self.terms {
            let r = (t.log_mag - anchor).exp();
            sum += t.phase * r;
            mass += r;
            noise += r * FLUSH_FLOOR.max(64.0 * f64::EPSILON * (1.0 + t.scale));
            scale = scale.max(t.scale);
        }
        let r = sum.norm();
        if r <= noise {
            return None;
        }
        Some(Amplitude {
            phase: sum / r,
            log_mag: anchor + r.ln(),
            scale: scale * (mass / r).max(1.0),
        })
    }
}

/// A finitely supported vector over `Z`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<i64, Amplitude>,
}

impl SparseVector {
    pub fn zero() -> Self {
        SparseVector::default()
    }

    /// The basis vector `e_n`.
    pub fn basis(n: i64) -> Self {
        let mut v = SparseVector::zero();
        v.entries.insert(n, Amplitude::ONE);
        v
    }

    pub fn from_complex(entries: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut acc: BTreeMap<i64, Accumulator> = BTreeMap::new();
        for (n, z) in entries {
            if let Some(a) = Amplitude::from_complex(z) {
                acc.entry(n).or_default().push(a);
            }
        }
        SparseVector::collect(acc)
    }

    pub fn from_amplitudes(entries: impl IntoIterator<Item = (i64, Amplitude)>) -> Self {
        let mut acc: BTreeMap<i64, Accumulator> = BTreeMap::new();
        for (n, a) in entries {
            acc.entry(n).or_default().push(a);
        }
        SparseVector::collect(acc)
    }

    fn collect(acc: BTreeMap<i64, Accumulator>) -> Self {
        SparseVector {
            entries: acc.into_iter().filter_map(|(n, a)| a.finish().map(|a| (n, a))).collect(),
        }
    }

    pub fn get(&self, n: i64) -> Option<&Amplitude> {
        self.entries.get(&n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Amplitude)> + '_ {
        self.entries.iter().map(|(n, a)| (*n, a))
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiply every entry by `phase * exp(log)`.
    pub fn scaled(&self, phase: Complex64, log: LogMagnitude) -> SparseVector {
        if log.is_zero() {
            return SparseVector::zero();
        }
        SparseVector {
            entries: self.entries.iter().map(|(n, a)| (*n, a.mul(phase, log))).collect(),
        }
    }

    pub fn neg(&self) -> SparseVector {
        SparseVector {
            entries: self.entries.iter().map(|(n, a)| (*n, -*a)).collect(),
        }
    }

    pub fn add(&self, other: &SparseVector) -> SparseVector {
        SparseVector::from_amplitudes(self.iter().chain(other.iter()).map(|(n, a)| (n, *a)))
    }

    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        self.add(&other.neg())
    }

    /// `log ||v||_p`; the zero vector gives `-inf`.
    pub fn lp_norm_log(&self, p: LpExponent) -> LogMagnitude {
        let anchor = self.entries.values().map(|a| a.log_mag).fold(f64::NEG_INFINITY, f64::max);
        if anchor == f64::NEG_INFINITY {
            return LogMagnitude::ZERO;
        }
        match p {
            LpExponent::Infinity => LogMagnitude(anchor),
            LpExponent::Finite(p) => {
                if self.entries.len() == 1 {
                    return LogMagnitude(anchor);
                }
                let s: f64 = self.entries.values().map(|a| (p * (a.log_mag - anchor)).exp()).sum();
                LogMagnitude(anchor + s.ln() / p)
            }
        }
    }

    /// Largest `|a_n - b_n| / max(|a_n|, |b_n|)` over the union of supports
    /// (an index present on one side only counts as 1).
    pub fn relative_discrepancy(&self, other: &SparseVector) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, a) in &self.entries {
            worst = worst.max(match other.entries.get(n) {
                Some(b) => a.relative_diff(b),
                None => 1.0,
            });
        }
        for n in other.entries.keys() {
            if !self.entries.contains_key(n) {
                worst = 1.0;
            }
        }
        worst
    }

    /// `sum_n f_n v_n` over the common support.
    pub fn pairing(&self, v: &SparseVector) -> Option<Amplitude> {
        let mut acc = Accumulator::new();
        for (n, a) in &self.entries {
            if let Some(b) = v.entries.get(n) {
                acc.push(a.times(*b));
            }
        }
        acc.finish()
    }
}

#[derive(Serialize)]
struct SparseVectorJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(i64, Real, Real)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries_log: Option<Vec<(i64, Real, Real, Real)>>,
}

/// Writers switch to the log form once any `|log_mag|` exceeds this.
pub const LOG_FORM_THRESHOLD: f64 = 600.0;

impl Serialize for SparseVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let log_form = self.entries.values().any(|a| a.log_mag.abs() > LOG_FORM_THRESHOLD);
        let json = if log_form {
            SparseVectorJson {
                entries: None,
                entries_log: Some(
                    self.iter()
                        .map(|(n, a)| (n, Real(a.phase.re), Real(a.phase.im), Real(a.log_mag)))
                        .collect(),
                ),
            }
        } else {
            SparseVectorJson {
                entries: Some(
                    self.iter()
                        .map(|(n, a)| {
                            let z = a.to_complex();
                            (n, Real(z.re), Real(z.im))
                        })
                        .collect(),
                ),
                entries_log: None,
            }
        };
        json.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(default)]
            entries: Option<Vec<(i64, f64, f64)>>,
            #[serde(default)]
            entries_log: Option<Vec<(i64, f64, f64, f64)>>,
        }
        let raw = Raw::deserialize(d)?;
        match (raw.entries, raw.entries_log) {
            (Some(e), None) => Ok(SparseVector::from_complex(
                e.into_iter().map(|(n, re, im)| (n, Complex64::new(re, im))),
            )),
            (None, Some(e)) => Ok(SparseVector::from_amplitudes(e.into_iter().filter_map(|(n, re, im, l)| {
                Amplitude::new(Complex64::new(re, im), LogMagnitude(l)).map(|a| (n, a))
            }))),
            _ => Err(D::Error::custom("expected exactly one of `entries` or `entries_log`")),
        }
    }
}

/// A polynomial `sum_d c_d z^d` with log-domain coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogPolynomial {
    coeffs: BTreeMap<u64, Amplitude>,
}

impl LogPolynomial {
    pub fn zero() -> Self {
        LogPolynomial::default()
    }

    pub fn monomial(degree: u64, coeff: Amplitude) -> Self {
        let mut p = LogPolynomial::zero();
        p.coeffs.insert(degree, coeff);
        p
    }

    pub fn from_complex(coeffs: &[Complex64]) -> Self {
        LogPolynomial {
            coeffs: coeffs
                .iter()
                .enumerate()
                .filter_map(|(d, z)| Amplitude::from_complex(*z).map(|a| (d as u64, a)))
                .collect(),
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Amplitude)>) -> Self {
        let mut acc: BTreeMap<u64, Accumulator> = BTreeMap::new();
        for (d, a) in terms {
            acc.entry(d).or_default().push(a);
        }
        LogPolynomial {
            coeffs: acc.into_iter().filter_map(|(d, a)| a.finish().map(|a| (d, a))).collect(),
        }
    }

    pub fn add(&self, other: &LogPolynomial) -> LogPolynomial {
        LogPolynomial::from_terms(self.terms().chain(other.terms()).map(|(d, a)| (d, *a)))
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Amplitude)> + '_ {
        self.coeffs.iter().map(|(d, a)| (*d, a))
    }

    pub fn coeff(&self, d: u64) -> Option<&Amplitude> {
        self.coeffs.get(&d)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<u64> {
        self.coeffs.keys().next_back().copied()
    }

    /// `r(z^j)`.
    pub fn compose_power(&self, j: u64) -> LogPolynomial {
        LogPolynomial {
            coeffs: self.coeffs.iter().map(|(d, a)| (d * j, *a)).collect(),
        }
    }
}

impl Serialize for LogPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Json {
            terms: Vec<(u64, Real, Real, Real)>,
        }
        Json {
            terms: self
                .terms()
                .map(|(d, a)| (d, Real(a.phase.re), Real(a.phase.im), Real(a.log_mag)))
                .collect(),
        }
        .serialize(s)
    }
}

/// The exponent `p` of `l_p(Z)`; `Infinity` stands for `c_0(Z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(LpExponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(LpExponent::Finite(p))
        } else {
            Err(Error::invalid("p", format!("{p} is outside [1, inf]")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LpExponent::Finite(p) => p,
            LpExponent::Infinity => f64::INFINITY,
        }
    }

    /// The space label used in reports.
    pub fn space(self) -> String {
        match self {
            LpExponent::Finite(p) => format!("l_{p}"),
            LpExponent::Infinity => "c_0".to_string(),
        }
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> LpExponent {
        match self {
            LpExponent::Infinity => LpExponent::Finite(1.0),
            LpExponent::Finite(1.0) => LpExponent::Infinity,
            LpExponent::Finite(p) => LpExponent::Finite(p / (p - 1.0)),
        }
    }

    fn recip(self) -> f64 {
        match self {
            LpExponent::Finite(p) => 1.0 / p,
            LpExponent::Infinity => 0.0,
        }
    }

    /// `q` with `1/q = 1 - 1/p1 - 1/p2` when that is positive, otherwise `inf`.
    pub fn direct_sum_q(p1: LpExponent, p2: LpExponent) -> LpExponent {
        let r = 1.0 - p1.recip() - p2.recip();
        if r > 0.0 {
            LpExponent::Finite(1.0 / r)
        } else {
            LpExponent::Infinity
        }
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpExponent::Finite(p) => write!(f, "{p}"),
            LpExponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for LpExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "c0" | "c_0" => Ok(LpExponent::Infinity),
            t => LpExponent::new(
                t.parse::<f64>()
                    .map_err(|_| Error::invalid("p", format!("cannot parse `{t}`")))?,
            ),
        }
    }
}

impl Serialize for LpExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LpExponent::Finite(p) => Real(*p).serialize(s),
            LpExponent::Infinity => s.serialize_str("inf"),
        }
    }
}

/// `T^d v`: `e_k -> (prod_{i=k-d+1}^{k} w_i) e_{k-d}`.
pub fn apply_shift_power(ws: &WeightSequence, v: &SparseVector, d: u64) -> Result<SparseVector> {
    if d == 0 {
        return Ok(v.clone());
    }
    let d = d as i64;
    let mut out = BTreeMap::new();
    for (k, a) in v.iter() {
        let (ph, log) = ws.product(k - d + 1, k)?;
        out.insert(k - d, a.mul(ph, log));
    }
    Ok(SparseVector { entries: out })
}

/// `S^d v` for the dual shift `S e_n = w_{n+1} e_{n+1}`.
pub fn apply_dual_shift_power(ws: &WeightSequence, v: &SparseVector, d: u64) -> Result<SparseVector> {
    if d == 0 {
        return Ok(v.clone());
    }
    let d = d as i64;
    let mut out = BTreeMap::new();
    for (k, a) in v.iter() {
        let (ph, log) = ws.product(k + 1, k + d)?;
        out.insert(k + d, a.mul(ph, log));
    }
    Ok(SparseVector { entries: out })
}

/// `r(T) v`.
pub fn apply_polynomial(ws: &WeightSequence, r: &LogPolynomial, v: &SparseVector) -> Result<SparseVector> {
    let mut acc: BTreeMap<i64, Accumulator> = BTreeMap::new();
    for (d, c) in r.terms() {
        for (n, a) in apply_shift_power(ws, v, d)?.iter() {
            acc.entry(n).or_default().push(a.times(*c));
        }
    }
    Ok(SparseVector::collect(acc))
}

/// `lp_norm_log` as a free function.
pub fn lp_norm_log(v: &SparseVector, p: LpExponent) -> LogMagnitude {
    v.lp_norm_log(p)
}

/// The diagonal `D e_n = d_n e_n` with `T_w = D^-1 T_u D`.
#[derive(Clone, Debug)]
pub struct DiagonalSimilarity {
    pub d: BTreeMap<i64, Amplitude>,
    /// `max | |d_n| - 1 |`.
    pub modulus_error: f64,
    /// Largest relative mismatch of `D^-1 T_u D e_n` against `T_w e_n`.
    pub conjugation_residual: f64,
}

impl DiagonalSimilarity {
    pub fn apply(&self, v: &SparseVector, inverse: bool) -> SparseVector {
        SparseVector {
            entries: v
                .iter()
                .filter_map(|(n, a)| {
                    let d = self.d.get(&n)?;
                    let d = if inverse {
                        Amplitude {
                            phase: d.phase.conj(),
                            log_mag: -d.log_mag,
                            scale: d.scale,
                        }
                    } else {
                        *d
                    };
                    Some((n, a.times(d)))
                })
                .collect(),
        }
    }
}

fn modulus_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// `d_0 = 1`, `d_n = prod_1^n w / prod_1^n u` for `n > 0` and
/// `d_n = prod_{n+1}^0 u / prod_{n+1}^0 w` for `n < 0`, as complex products.
pub fn diagonal_similarity(
    w: &WeightSequence,
    u: &WeightSequence,
    window: RangeInclusive<i64>,
) -> Result<DiagonalSimilarity> {
    let (lo, hi) = (*window.start(), *window.end());
    for n in lo.min(0)..=hi.max(0) {
        let (lw, lu) = (w.log_abs_at(n)?, u.log_abs_at(n)?);
        if !modulus_matches(lw, lu) {
            return Err(Error::ModulusMismatch {
                index: n,
                lhs: lw.exp(),
                rhs: lu.exp(),
            });
        }
    }
    let mut d = BTreeMap::new();
    for n in lo..=hi {
        let amp = match n {
            0 => Amplitude::ONE,
            n if n > 0 => {
                let (pw, lw) = w.product(1, n)?;
                let (pu, lu) = u.product(1, n)?;
                Amplitude::ONE.mul(pw * pu.conj(), lw - lu)
            }
            n => {
                let (pw, lw) = w.product(n + 1, 0)?;
                let (pu, lu) = u.product(n + 1, 0)?;
                Amplitude::ONE.mul(pu * pw.conj(), lu - lw)
            }
        };
        d.insert(n, amp);
    }
    let mut sim = DiagonalSimilarity {
        modulus_error: d.values().map(|a: &Amplitude| a.log_mag.exp_m1().abs()).fold(0.0, f64::max),
        d,
        conjugation_residual: 0.0,
    };
    let mut worst: f64 = 0.0;
    for n in lo + 1..=hi {
        let e = SparseVector::basis(n);
        let lhs = sim.apply(&apply_shift_power(u, &sim.apply(&e, false), 1)?, true);
        let rhs = apply_shift_power(w, &e, 1)?;
        worst = worst.max(lhs.relative_discrepancy(&rhs));
    }
    sim.conjugation_residual = worst;
    Ok(sim)
}

/// Coefficients of the intertwiner `J e_n = d_n e_{2m-n}` plus its checks.
#[derive(Clone, Debug)]
pub struct IntertwinerReport {
    pub m: i64,
    pub d: BTreeMap<i64, Amplitude>,
    /// Largest relative log error of `|d_{m+n}| = |d_{m-n}| =
    /// w~(1,m)/w~(m+1,2m) a_n` over `n in (m, N]`.
    pub closed_form_residual: f64,
    /// Largest relative mismatch of `S J e_n` against `J T e_n`.
    pub intertwining_residual: f64,
    pub identity_residual: f64,
}

impl IntertwinerReport {
    /// `J v`; indices outside the window are dropped.
    pub fn apply(&self, v: &SparseVector) -> SparseVector {
        SparseVector {
            entries: v
                .iter()
                .filter_map(|(n, a)| self.d.get(&n).map(|d| (2 * self.m - n, a.times(*d))))
                .collect(),
        }
    }
}

/// `log a_n = log w~(m+1, m+n) - log w~(m-n+1, m)`.
pub fn direct_sum_a_log(ws: &WeightSequence, m: i64, n: i64) -> Result<LogMagnitude> {
    Ok(ws.w_tilde_log(m + 1, m + n)? - ws.w_tilde_log(m - n + 1, m)?)
}

fn relative_log_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Build `J` on `n in [m - big_n, m + big_n]` and check both identities.
pub fn intertwiner_j(ws: &WeightSequence, m: i64, big_n: i64) -> Result<IntertwinerReport> {
    if m < 0 {
        return Err(Error::invalid("m", "must be nonnegative"));
    }
    if big_n <= m {
        return Err(Error::invalid("N", "must exceed m"));
    }
    let (lo, hi) = (m - big_n, m + big_n);
    let mut d = BTreeMap::new();
    for n in lo..=hi {
        let amp = match n {
            0 => Amplitude::ONE,
            n if n > 0 => {
                let (p1, l1) = ws.product(1, n)?;
                let (p2, l2) = ws.product(2 * m + 1 - n, 2 * m)?;
                Amplitude::ONE.mul(p1 * p2.conj(), l1 - l2)
            }
            n => {
                let k = -n;
                let (p1, l1) = ws.product(2 * m + 1, 2 * m + k)?;
                let (p2, l2) = ws.product(1 - k, 0)?;
                Amplitude::ONE.mul(p1 * p2.conj(), l1 - l2)
            }
        };
        d.insert(n, amp);
    }
    let mut report = IntertwinerReport {
        m,
        d,
        closed_form_residual: 0.0,
        intertwining_residual: 0.0,
        identity_residual: 0.0,
    };

    let base = ws.w_tilde_log_or_empty(1, m)? - ws.w_tilde_log_or_empty(m + 1, 2 * m)?;
    let mut closed: f64 = 0.0;
    for n in m + 1..=big_n {
        let rhs = (base + direct_sum_a_log(ws, m, n)?).value();
        for idx in [m + n, m - n] {
            closed = closed.max(relative_log_error(report.d[&idx].log_mag, rhs));
        }
    }

    let mut inter: f64 = 0.0;
    for n in lo + 1..=hi {
        let e = SparseVector::basis(n);
        let lhs = apply_dual_shift_power(ws, &report.apply(&e), 1)?;
        let rhs = report.apply(&apply_shift_power(ws, &e, 1)?);
        inter = inter.max(lhs.relative_discrepancy(&rhs));
    }
    report.closed_form_residual = closed;
    report.intertwining_residual = inter;
    report.identity_residual = closed.max(inter);
    Ok(report)
}

/// Check `(T + S)(I + J) = (I + J)(T + T)` on every basis pair `(e_k, e_n)`
/// with `k, n` in `window`. Returns the largest componentwise mismatch.
pub fn intertwining_on_pairs(ws: &WeightSequence, j: &IntertwinerReport, window: RangeInclusive<i64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in window.clone() {
        let ek = SparseVector::basis(k);
        // first coordinate: I then T against T then I
        let a = apply_shift_power(ws, &ek, 1)?;
        worst = worst.max(a.relative_discrepancy(&apply_shift_power(ws, &ek, 1)?));
        for n in window.clone() {
            if !j.d.contains_key(&n) || !j.d.contains_key(&(n - 1)) {
                continue;
            }
            let en = SparseVector::basis(n);
            let lhs = apply_dual_shift_power(ws, &j.apply(&en), 1)?;
            let rhs = j.apply(&apply_shift_power(ws, &en, 1)?);
            worst = worst.max(lhs.relative_discrepancy(&rhs));
        }
    }
    Ok(worst)
}

/// `F(T^n x, S^n f) = <f, T^n x> - <S^n f, x>` over `n in [0, n_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjointCheck {
    /// `log max_n |F|`.
    pub max_abs_log: LogMagnitude,
    /// `max_n |F| / max(|<f, T^n x>|, |<S^n f, x>|)`.
    pub max_relative: f64,
}

pub fn adjoint_orbit_functional(
    ws: &WeightSequence,
    x: &SparseVector,
    f: &SparseVector,
    n_max: u64,
) -> Result<AdjointCheck> {
    let mut max_abs = f64::NEG_INFINITY;
    let mut max_rel: f64 = 0.0;
    for n in 0..=n_max {
        let left = f.pairing(&apply_shift_power(ws, x, n)?);
        let right = apply_dual_shift_power(ws, f, n)?.pairing(x);
        match (left, right) {
            (None, None) => {}
            (Some(a), None) | (None, Some(a)) => {
                max_abs = max_abs.max(a.log_mag);
                max_rel = 1.0;
            }
            (Some(a), Some(b)) => {
                let rel = a.relative_diff(&b);
                if rel > 0.0 {
                    max_abs = max_abs.max(a.log_mag.max(b.log_mag) + rel.ln());
                }
                max_rel = max_rel.max(rel);
            }
        }
    }
    Ok(AdjointCheck {
        max_abs_log: LogMagnitude(max_abs),
        max_relative: max_rel,
    })
}
