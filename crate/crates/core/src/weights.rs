//! Weight sequences `w: Z -> C` and log-domain products of their moduli.
//!
//! All range products `w~(a, b) = prod_{j=a}^{b} |w_j|` are answered from a
//! cache of compensated prefix sums of `log|w_j|`, anchored at index 0 and
//! grown outward on demand. Because the prefix values are accumulated from 0
//! outward in a fixed order, a query returns the same bits no matter how far
//! the cache has grown or in which order other queries arrived.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::sync::RwLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmag::{Dd, LogMagnitude};

/// Extension of a table beyond its explicit window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// `w_n = c` on that side.
    Constant(f64),
    /// Repeat the boundary entry on that side.
    RepeatLast,
}

/// The closed-form families plus explicit tables.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Constant { c: f64 },
    /// `w_n = a` for `n <= 0`, `w_n = b` for `n > 0`.
    Beauzamy { a: f64, b: f64 },
    /// `w_n = 1 - a n^-alpha` on the right, `1 - b |n|^-alpha` on the left,
    /// `1` in between. See [`WeightSequence::polydecay_onsets`].
    PolyDecay { a: f64, b: f64, alpha: f64, n0: i64 },
    /// `w_n = exp(-gamma |n|)`.
    SupExp { gamma: f64 },
    /// Contiguous entries `w_start, w_{start+1}, ...` with optional tail rules.
    Table {
        start: i64,
        entries: Vec<Complex64>,
        left_tail: Option<TailRule>,
        right_tail: Option<TailRule>,
    },
}

/// JSON weight-spec file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        c: f64,
    },
    Beauzamy {
        a: f64,
        b: f64,
    },
    Polydecay {
        a: f64,
        b: f64,
        alpha: f64,
        #[serde(default = "default_n0")]
        n0: i64,
    },
    Supexp {
        gamma: f64,
    },
    Table {
        entries: Vec<(i64, f64, f64)>,
        #[serde(default)]
        left_tail: Option<TailRule>,
        #[serde(default)]
        right_tail: Option<TailRule>,
    },
}

fn default_n0() -> i64 {
    1
}

impl TryFrom<WeightSpec> for Family {
    type Error = Error;

    fn try_from(spec: WeightSpec) -> Result<Family> {
        Ok(match spec {
            WeightSpec::Constant { c } => Family::Constant { c },
            WeightSpec::Beauzamy { a, b } => Family::Beauzamy { a, b },
            WeightSpec::Polydecay { a, b, alpha, n0 } => Family::PolyDecay { a, b, alpha, n0 },
            WeightSpec::Supexp { gamma } => Family::SupExp { gamma },
            WeightSpec::Table {
                mut entries,
                left_tail,
                right_tail,
            } => {
                entries.sort_by_key(|e| e.0);
                for pair in entries.windows(2) {
                    if pair[1].0 == pair[0].0 {
                        return Err(Error::invalid(
                            "entries",
                            format!("index {} listed twice", pair[0].0),
                        ));
                    }
                    if pair[1].0 != pair[0].0 + 1 {
                        return Err(Error::invalid(
                            "entries",
                            format!("indices must be contiguous; gap after {}", pair[0].0),
                        ));
                    }
                }
                for &(n, re, im) in &entries {
                    if re == 0.0 && im == 0.0 {
                        return Err(Error::ZeroWeight { index: n });
                    }
                }
                Family::Table {
                    start: entries.first().map_or(0, |e| e.0),
                    entries: entries.iter().map(|&(_, re, im)| Complex64::new(re, im)).collect(),
                    left_tail,
                    right_tail,
                }
            }
        })
    }
}

impl From<&Family> for WeightSpec {
    fn from(f: &Family) -> WeightSpec {
        match *f {
            Family::Constant { c } => WeightSpec::Constant { c },
            Family::Beauzamy { a, b } => WeightSpec::Beauzamy { a, b },
            Family::PolyDecay { a, b, alpha, n0 } => WeightSpec::Polydecay { a, b, alpha, n0 },
            Family::SupExp { gamma } => WeightSpec::Supexp { gamma },
            Family::Table {
                start,
                ref entries,
                left_tail,
                right_tail,
            } => WeightSpec::Table {
                entries: entries
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (start + i as i64, z.re, z.im))
                    .collect(),
                left_tail,
                right_tail,
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Constant { c } => write!(f, "constant({c})"),
            Family::Beauzamy { a, b } => write!(f, "beauzamy({a},{b})"),
            Family::PolyDecay { a, b, alpha, n0 } => write!(f, "polydecay({a},{b},{alpha},{n0})"),
            Family::SupExp { gamma } => write!(f, "supexp({gamma})"),
            Family::Table { start, entries, .. } => {
                write!(f, "table[{}..={}]", start, start + entries.len() as i64 - 1)
            }
        }
    }
}

/// Parses the inline form used on the command line: `constant(1)`,
/// `beauzamy(1,2)`, `polydecay(1,2,0.75[,n0])`, `supexp(1)` and the named
/// built-ins listed by [`builtin_families`].
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        let s = s.trim();
        if let Some(b) = builtin_families().into_iter().find(|b| b.name == s) {
            return Ok(b.family);
        }
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::invalid("family", format!("cannot parse `{s}`")))?;
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::invalid("family", format!("missing `)` in `{s}`")))?;
        let args = body
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid("family", format!("bad number `{}`", a.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |k: &[usize]| -> Result<()> {
            if k.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::invalid(
                    "family",
                    format!("`{name}` takes {k:?} arguments, got {}", args.len()),
                ))
            }
        };
        match name.trim() {
            "constant" => {
                want(&[1])?;
                Ok(Family::Constant { c: args[0] })
            }
            "beauzamy" => {
                want(&[2])?;
                Ok(Family::Beauzamy { a: args[0], b: args[1] })
            }
            "polydecay" => {
                want(&[3, 4])?;
                let n0 = args.get(3).copied().unwrap_or(1.0);
                if n0.fract() != 0.0 {
                    return Err(Error::invalid("n0", "must be an integer"));
                }
                Ok(Family::PolyDecay {
                    a: args[0],
                    b: args[1],
                    alpha: args[2],
                    n0: n0 as i64,
                })
            }
            "supexp" => {
                want(&[1])?;
                Ok(Family::SupExp { gamma: args[0] })
            }
            other => Err(Error::invalid("family", format!("unknown family `{other}`"))),
        }
    }
}

/// A named family shipped with the tool.
#[derive(Clone, Debug)]
pub struct BuiltinFamily {
    pub name: &'static str,
    pub description: &'static str,
    pub family: Family,
}

pub fn builtin_families() -> Vec<BuiltinFamily> {
    vec![
        BuiltinFamily {
            name: "unweighted",
            description: "w_n = 1: cyclic on l_2, not on l_1, never supercyclic",
            family: Family::Constant { c: 1.0 },
        },
        BuiltinFamily {
            name: "beauzamy-noncyclic",
            description: "w_n = 2 (n <= 0), 1 (n > 0): non-cyclic for every p",
            family: Family::Beauzamy { a: 2.0, b: 1.0 },
        },
        BuiltinFamily {
            name: "beauzamy-supercyclic",
            description: "w_n = 1 (n <= 0), 2 (n > 0): supercyclic",
            family: Family::Beauzamy { a: 1.0, b: 2.0 },
        },
        BuiltinFamily {
            name: "polydecay-supercyclic",
            description: "1 - w_n ~ n^-0.75 on the right, 2|n|^-0.75 on the left: supercyclic (b > a)",
            family: Family::PolyDecay { a: 1.0, b: 2.0, alpha: 0.75, n0: 2 },
        },
        BuiltinFamily {
            name: "polydecay-nonsupercyclic",
            description: "1 - w_n ~ 2n^-0.75 on the right, |n|^-0.75 on the left: not supercyclic (b < a)",
            family: Family::PolyDecay { a: 2.0, b: 1.0, alpha: 0.75, n0: 2 },
        },
        BuiltinFamily {
            name: "quasinilpotent",
            description: "w_n = exp(-|n|): compact, quasinilpotent, hence cyclic",
            family: Family::SupExp { gamma: 1.0 },
        },
        BuiltinFamily {
            name: "problem2",
            description: "w_n = 1 (n <= 1), 1 - n^-1/2 (n >= 2): open boundary case, no expected verdict",
            family: Family::PolyDecay { a: 1.0, b: 0.0, alpha: 0.5, n0: 2 },
        },
    ]
}

/// Behaviour of `|w_n|` far out on one side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailMonotonicity {
    /// Beyond `onset` (for `n >= onset` on the right, `n <= onset` on the
    /// left) `|w_n|` is monotone in `|n|` and tends to `exp(limit_log)`.
    /// `decaying` means non-increasing moving away from the origin.
    EventuallyMonotone { onset: i64, decaying: bool, limit_log: f64 },
    Unknown,
}

/// Lower and upper bounds for `log ||T^n||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBounds {
    pub lower: LogMagnitude,
    pub upper: LogMagnitude,
    /// Smallest `k` attaining `lower`.
    pub argmax: i64,
    /// Whether `upper` is the exact supremum rather than `n log sup|w|`.
    pub exact: bool,
}

/// Prefix sums `P(i)`, with `P(0) = 0` and `P(i+1) - P(i) = log|w_i|`.
#[derive(Clone, Debug)]
struct PrefixCache {
    /// `pos[i] = P(i)`.
    pos: Vec<Dd>,
    /// `neg[t] = P(-t)`.
    neg: Vec<Dd>,
}

impl PrefixCache {
    fn new() -> Self {
        PrefixCache {
            pos: vec![Dd::ZERO],
            neg: vec![Dd::ZERO],
        }
    }

    fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= -(self.neg.len() as i64 - 1) && hi < self.pos.len() as i64
    }

    fn get(&self, i: i64) -> Dd {
        if i >= 0 {
            self.pos[i as usize]
        } else {
            self.neg[(-i) as usize]
        }
    }
}

const MIN_CACHE_RADIUS: i64 = 64;

/// A bounded, nonvanishing bilateral weight sequence.
pub struct WeightSequence {
    family: Family,
    /// Unit phases multiplied into individual weights.
    twist: BTreeMap<i64, Complex64>,
    sup_abs: f64,
    left: TailMonotonicity,
    right: TailMonotonicity,
    /// Inclusive index range on which `w_n` is defined.
    domain: (Option<i64>, Option<i64>),
    positive: bool,
    /// Polydecay only: first index of the right formula and the last of the left.
    onsets: (i64, i64),
    cache: RwLock<PrefixCache>,
}

impl Clone for WeightSequence {
    fn clone(&self) -> Self {
        WeightSequence {
            family: self.family.clone(),
            twist: self.twist.clone(),
            sup_abs: self.sup_abs,
            left: self.left,
            right: self.right,
            domain: self.domain,
            positive: self.positive,
            onsets: self.onsets,
            cache: RwLock::new(self.cache.read().expect("prefix cache poisoned").clone()),
        }
    }
}

impl fmt::Debug for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSequence")
            .field("family", &self.family)
            .field("twist", &self.twist)
            .field("sup_abs", &self.sup_abs)
            .finish()
    }
}

fn check_finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

fn check_nonzero(field: &str, x: f64) -> Result<()> {
    check_finite(field, x)?;
    if x == 0.0 {
        Err(Error::invalid(field, "weights must be nonzero"))
    } else {
        Ok(())
    }
}

/// First `n >= n0` with `c n^-alpha < 1`.
fn polydecay_start(c: f64, alpha: f64, n0: i64) -> i64 {
    let mut n = n0;
    if c >= 1.0 {
        // c n^-alpha < 1  <=>  n > c^(1/alpha)
        let guess = c.powf(1.0 / alpha).floor();
        if guess.is_finite() && guess >= n as f64 {
            n = guess as i64;
        }
    }
    while c * (n as f64).powf(-alpha) >= 1.0 {
        n += 1;
    }
    n
}

fn sign_pow(x: f64, count: i64) -> Complex64 {
    if x < 0.0 && count % 2 != 0 {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

fn unit_pow(z: Complex64, mut k: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while k > 0 {
        if k & 1 == 1 {
            acc = unit(acc * base);
        }
        base = unit(base * base);
        k >>= 1;
    }
    acc
}

/// Number of integers in `[a, b] ∩ [lo, hi]` (open ends as `None`).
fn overlap(a: i64, b: i64, lo: Option<i64>, hi: Option<i64>) -> i64 {
    let l = lo.map_or(a, |lo| a.max(lo));
    let h = hi.map_or(b, |hi| b.min(hi));
    (h - l + 1).max(0)
}

impl WeightSequence {
    pub fn new(family: Family) -> Result<Self> {
        let mut onsets = (0, 0);
        let mut domain = (None, None);
        let (sup_abs, left, right, positive) = match &family {
            Family::Constant { c } => {
                check_nonzero("c", *c)?;
                let t = TailMonotonicity::EventuallyMonotone {
                    onset: 0,
                    decaying: true,
                    limit_log: c.abs().ln(),
                };
                (c.abs(), t, t, *c > 0.0)
            }
            Family::Beauzamy { a, b } => {
                check_nonzero("a", *a)?;
                check_nonzero("b", *b)?;
                (
                    a.abs().max(b.abs()),
                    TailMonotonicity::EventuallyMonotone {
                        onset: 0,
                        decaying: true,
                        limit_log: a.abs().ln(),
                    },
                    TailMonotonicity::EventuallyMonotone {
                        onset: 1,
                        decaying: true,
                        limit_log: b.abs().ln(),
                    },
                    *a > 0.0 && *b > 0.0,
                )
            }
            Family::PolyDecay { a, b, alpha, n0 } => {
                for (name, v) in [("a", *a), ("b", *b)] {
                    check_finite(name, v)?;
                    if v < 0.0 {
                        return Err(Error::invalid(name, "must be nonnegative"));
                    }
                }
                check_finite("alpha", *alpha)?;
                if *alpha <= 0.0 {
                    return Err(Error::invalid("alpha", "must be positive"));
                }
                if *n0 < 1 {
                    return Err(Error::invalid("n0", "must be at least 1"));
                }
                let right = polydecay_start(*a, *alpha, *n0);
                let left = polydecay_start(*b, *alpha, *n0);
                onsets = (right, -left);
                (
                    1.0,
                    TailMonotonicity::EventuallyMonotone {
                        onset: -left,
                        decaying: false,
                        limit_log: 0.0,
                    },
                    TailMonotonicity::EventuallyMonotone {
                        onset: right,
                        decaying: false,
                        limit_log: 0.0,
                    },
                    true,
                )
            }
            Family::SupExp { gamma } => {
                check_finite("gamma", *gamma)?;
                if *gamma < 0.0 {
                    return Err(Error::invalid("gamma", "must be nonnegative"));
                }
                let limit_log = if *gamma > 0.0 { f64::NEG_INFINITY } else { 0.0 };
                let t = TailMonotonicity::EventuallyMonotone {
                    onset: 0,
                    decaying: true,
                    limit_log,
                };
                (1.0, t, t, true)
            }
            Family::Table {
                start,
                entries,
                left_tail,
                right_tail,
            } => {
                let mut sup: f64 = 0.0;
                let mut positive = true;
                for (i, z) in entries.iter().enumerate() {
                    if !(z.re.is_finite() && z.im.is_finite()) {
                        return Err(Error::invalid("entries", "must be finite"));
                    }
                    if z.norm() == 0.0 {
                        return Err(Error::ZeroWeight {
                            index: start + i as i64,
                        });
                    }
                    sup = sup.max(z.norm());
                    positive &= z.im == 0.0 && z.re > 0.0;
                }
                let end = start + entries.len() as i64 - 1;
                let mut tail = |rule: &Option<TailRule>,
                                boundary: Option<&Complex64>,
                                field: &str,
                                onset: i64|
                 -> Result<TailMonotonicity> {
                    let value = match rule {
                        None => return Ok(TailMonotonicity::Unknown),
                        Some(TailRule::Constant(c)) => {
                            check_nonzero(field, *c)?;
                            positive &= *c > 0.0;
                            Complex64::new(*c, 0.0)
                        }
                        Some(TailRule::RepeatLast) => *boundary.ok_or_else(|| {
                            Error::invalid(field, "repeat_last needs at least one entry")
                        })?,
                    };
                    sup = sup.max(value.norm());
                    Ok(TailMonotonicity::EventuallyMonotone {
                        onset,
                        decaying: true,
                        limit_log: value.norm().ln(),
                    })
                };
                let left = tail(left_tail, entries.first(), "left_tail", start - 1)?;
                let right = tail(right_tail, entries.last(), "right_tail", end + 1)?;
                if entries.is_empty() && (left == TailMonotonicity::Unknown || right == TailMonotonicity::Unknown) {
                    return Err(Error::invalid("entries", "empty table needs both tails"));
                }
                if left_tail.is_none() {
                    domain.0 = Some(*start);
                }
                if right_tail.is_none() {
                    domain.1 = Some(end);
                }
                (sup, left, right, positive)
            }
        };
        Ok(WeightSequence {
            family,
            twist: BTreeMap::new(),
            sup_abs,
            left,
            right,
            domain,
            positive,
            onsets,
            cache: RwLock::new(PrefixCache::new()),
        })
    }

    pub fn from_spec(spec: WeightSpec) -> Result<Self> {
        WeightSequence::new(Family::try_from(spec)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: WeightSpec = serde_json::from_str(json)?;
        WeightSequence::from_spec(spec)
    }

    pub fn constant(c: f64) -> Result<Self> {
        WeightSequence::new(Family::Constant { c })
    }

    pub fn beauzamy(a: f64, b: f64) -> Result<Self> {
        WeightSequence::new(Family::Beauzamy { a, b })
    }

    pub fn polydecay(a: f64, b: f64, alpha: f64, n0: i64) -> Result<Self> {
        WeightSequence::new(Family::PolyDecay { a, b, alpha, n0 })
    }

    pub fn supexp(gamma: f64) -> Result<Self> {
        WeightSequence::new(Family::SupExp { gamma })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn spec(&self) -> WeightSpec {
        WeightSpec::from(&self.family)
    }

    /// Upper bound for `sup_n |w_n|`.
    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    pub fn tails(&self) -> (TailMonotonicity, TailMonotonicity) {
        (self.left, self.right)
    }

    /// Whether every weight is a positive real.
    pub fn is_positive(&self) -> bool {
        self.positive && self.twist.is_empty()
    }

    /// Polydecay only: `(first index of the right formula, last index of the
    /// left formula)`. Each side starts at `n0` or later, at the first
    /// `|n|` for which the formula is positive.
    pub fn polydecay_onsets(&self) -> Option<(i64, i64)> {
        matches!(self.family, Family::PolyDecay { .. }).then_some(self.onsets)
    }

    /// Same sequence with `w_n` multiplied by the unit complex `phase`.
    pub fn with_phase(mut self, n: i64, phase: Complex64) -> Result<Self> {
        let r = phase.norm();
        if !r.is_finite() || r == 0.0 {
            return Err(Error::invalid("phase", "must be a nonzero finite complex number"));
        }
        let slot = self.twist.entry(n).or_insert(Complex64::new(1.0, 0.0));
        *slot = unit(*slot * phase / r);
        Ok(self)
    }

    /// The sequence `|w_n|`.
    pub fn modulus(&self) -> WeightSequence {
        let family = match &self.family {
            Family::Constant { c } => Family::Constant { c: c.abs() },
            Family::Beauzamy { a, b } => Family::Beauzamy {
                a: a.abs(),
                b: b.abs(),
            },
            Family::Table {
                start,
                entries,
                left_tail,
                right_tail,
            } => {
                let abs_rule = |r: &Option<TailRule>| match r {
                    Some(TailRule::Constant(c)) => Some(TailRule::Constant(c.abs())),
                    other => *other,
                };
                Family::Table {
                    start: *start,
                    entries: entries.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect(),
                    left_tail: abs_rule(left_tail),
                    right_tail: abs_rule(right_tail),
                }
            }
            other => other.clone(),
        };
        WeightSequence::new(family).expect("modulus of a valid sequence is valid")
    }

    fn check_defined(&self, n: i64) -> Result<()> {
        let below = self.domain.0.is_some_and(|lo| n < lo);
        let above = self.domain.1.is_some_and(|hi| n > hi);
        if below || above {
            Err(Error::UndefinedWeight { index: n })
        } else {
            Ok(())
        }
    }

    fn table_value(
        start: i64,
        entries: &[Complex64],
        left_tail: &Option<TailRule>,
        right_tail: &Option<TailRule>,
        n: i64,
    ) -> Complex64 {
        let end = start + entries.len() as i64 - 1;
        if n < start {
            match left_tail {
                Some(TailRule::Constant(c)) => Complex64::new(*c, 0.0),
                Some(TailRule::RepeatLast) => entries[0],
                None => unreachable!("domain checked"),
            }
        } else if n > end {
            match right_tail {
                Some(TailRule::Constant(c)) => Complex64::new(*c, 0.0),
                Some(TailRule::RepeatLast) => entries[entries.len() - 1],
                None => unreachable!("domain checked"),
            }
        } else {
            entries[(n - start) as usize]
        }
    }

    /// `w_n`, ignoring phase twists.
    fn base_value(&self, n: i64) -> Complex64 {
        match &self.family {
            Family::Constant { c } => Complex64::new(*c, 0.0),
            Family::Beauzamy { a, b } => Complex64::new(if n <= 0 { *a } else { *b }, 0.0),
            Family::PolyDecay { a, b, alpha, .. } => {
                let v = if n >= self.onsets.0 {
                    1.0 - a * (n as f64).powf(-alpha)
                } else if n <= self.onsets.1 {
                    1.0 - b * ((-n) as f64).powf(-alpha)
                } else {
                    1.0
                };
                Complex64::new(v, 0.0)
            }
            Family::SupExp { gamma } => Complex64::new((-gamma * n.unsigned_abs() as f64).exp(), 0.0),
            Family::Table {
                start,
                entries,
                left_tail,
                right_tail,
            } => Self::table_value(*start, entries, left_tail, right_tail, n),
        }
    }

    /// `log|w_n|`, computed directly from the family parameters.
    fn base_log_abs(&self, n: i64) -> f64 {
        match &self.family {
            Family::PolyDecay { a, b, alpha, .. } => {
                if n >= self.onsets.0 {
                    (-a * (n as f64).powf(-alpha)).ln_1p()
                } else if n <= self.onsets.1 {
                    (-b * ((-n) as f64).powf(-alpha)).ln_1p()
                } else {
                    0.0
                }
            }
            Family::SupExp { gamma } => -gamma * n.unsigned_abs() as f64,
            _ => self.base_value(n).norm().ln(),
        }
    }

    /// `w_n`.
    pub fn weight_at(&self, n: i64) -> Result<Complex64> {
        self.check_defined(n)?;
        let w = self.base_value(n);
        Ok(match self.twist.get(&n) {
            Some(ph) => w * ph,
            None => w,
        })
    }

    /// `log|w_n|`.
    pub fn log_abs_at(&self, n: i64) -> Result<f64> {
        self.check_defined(n)?;
        Ok(self.base_log_abs(n))
    }

    /// `w_n / |w_n|`.
    pub fn phase_at(&self, n: i64) -> Result<Complex64> {
        Ok(unit(self.weight_at(n)?))
    }

    /// Product of the phases `w_j/|w_j|` over `[a, b]`; `1` when `a > b`.
    pub fn phase_product(&self, a: i64, b: i64) -> Result<Complex64> {
        if a > b {
            return Ok(Complex64::new(1.0, 0.0));
        }
        self.check_defined(a)?;
        self.check_defined(b)?;
        if self.is_positive() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let mut z = match &self.family {
            Family::Constant { c } => sign_pow(*c, b - a + 1),
            Family::Beauzamy { a: left, b: right } => {
                sign_pow(*left, overlap(a, b, None, Some(0))) * sign_pow(*right, overlap(a, b, Some(1), None))
            }
            Family::PolyDecay { .. } | Family::SupExp { .. } => Complex64::new(1.0, 0.0),
            Family::Table {
                start,
                entries,
                left_tail,
                right_tail,
            } => {
                let end = start + entries.len() as i64 - 1;
                let mut z = Complex64::new(1.0, 0.0);
                for n in a.max(*start)..=b.min(end) {
                    z = unit(z * entries[(n - start) as usize]);
                }
                let left_count = overlap(a, b, None, Some(start - 1));
                if left_count > 0 {
                    let ph = unit(Self::table_value(*start, entries, left_tail, right_tail, start - 1));
                    z *= unit_pow(ph, left_count as u64);
                }
                let right_count = overlap(a, b, Some(end + 1), None);
                if right_count > 0 {
                    let ph = unit(Self::table_value(*start, entries, left_tail, right_tail, end + 1));
                    z *= unit_pow(ph, right_count as u64);
                }
                z
            }
        };
        for ph in self.twist.range(a..=b).map(|(_, ph)| ph) {
            z *= ph;
        }
        Ok(unit(z))
    }

    /// Complex product `prod_{j=a}^{b} w_j` as (phase, log-modulus); empty is 1.
    pub fn product(&self, a: i64, b: i64) -> Result<(Complex64, LogMagnitude)> {
        if a > b {
            return Ok((Complex64::new(1.0, 0.0), LogMagnitude::ONE));
        }
        Ok((self.phase_product(a, b)?, self.w_tilde_log(a, b)?))
    }

    /// Make sure `P(lo)` and `P(hi)` are cached.
    fn ensure(&self, lo: i64, hi: i64) -> Result<()> {
        if self.cache.read().expect("prefix cache poisoned").covers(lo, hi) {
            return Ok(());
        }
        if let Some(dlo) = self.domain.0 {
            if lo < dlo {
                return Err(Error::UndefinedWeight { index: lo });
            }
        }
        if let Some(dhi) = self.domain.1 {
            if hi > dhi + 1 {
                return Err(Error::UndefinedWeight { index: hi - 1 });
            }
        }
        let mut cache = self.cache.write().expect("prefix cache poisoned");
        let cur_hi = cache.pos.len() as i64 - 1;
        if hi > cur_hi {
            let mut target = hi.max(2 * cur_hi).max(MIN_CACHE_RADIUS);
            if let Some(dhi) = self.domain.1 {
                target = target.min(dhi + 1);
            }
            cache.pos.reserve((target - cur_hi) as usize);
            for i in cur_hi + 1..=target {
                let prev = cache.pos[(i - 1) as usize];
                cache.pos.push(prev.add_f64(self.base_log_abs(i - 1)));
            }
        }
        let cur_lo = -(cache.neg.len() as i64 - 1);
        if lo < cur_lo {
            let mut target = lo.min(2 * cur_lo).min(-MIN_CACHE_RADIUS);
            if let Some(dlo) = self.domain.0 {
                target = target.max(dlo);
            }
            cache.neg.reserve((cur_lo - target) as usize);
            for t in -cur_lo + 1..=-target {
                let prev = cache.neg[(t - 1) as usize];
                cache.neg.push(prev.add_f64(-self.base_log_abs(-t)));
            }
        }
        Ok(())
    }

    /// Pre-extend the cache so that any range inside `[lo, hi]` is answered
    /// under the shared lock only.
    pub fn prepare(&self, lo: i64, hi: i64) -> Result<()> {
        self.ensure(lo, hi + 1)
    }

    /// `log w~(a, b) = sum_{j=a}^{b} log|w_j|`. Rejects `a > b`.
    pub fn w_tilde_log(&self, a: i64, b: i64) -> Result<LogMagnitude> {
        if a > b {
            return Err(Error::InvalidRange { a, b });
        }
        self.ensure(a, b + 1)?;
        let cache = self.cache.read().expect("prefix cache poisoned");
        Ok(LogMagnitude(cache.get(b + 1).diff(cache.get(a))))
    }

    /// Like [`w_tilde_log`](Self::w_tilde_log) but an empty range (`a = b + 1`) is the empty product 1.
    pub fn w_tilde_log_or_empty(&self, a: i64, b: i64) -> Result<LogMagnitude> {
        if a == b + 1 {
            Ok(LogMagnitude::ONE)
        } else {
            self.w_tilde_log(a, b)
        }
    }

    /// `log alpha_n`: `alpha_0 = 1`, `alpha_n = w~(1, n)^-1` for `n > 0`,
    /// `alpha_n = w~(1 + n, 0)` for `n < 0`.
    pub fn alpha_log(&self, n: i64) -> Result<LogMagnitude> {
        match n {
            0 => Ok(LogMagnitude::ONE),
            n if n > 0 => Ok(-self.w_tilde_log(1, n)?),
            n => self.w_tilde_log(1 + n, 0),
        }
    }

    /// The `k`-window `[L, R + n - 1]` outside of which every product of `n`
    /// consecutive weights lies entirely inside a monotone tail.
    pub fn monotone_window(&self, n: i64) -> Option<RangeInclusive<i64>> {
        match (self.left, self.right) {
            (
                TailMonotonicity::EventuallyMonotone { onset: l, .. },
                TailMonotonicity::EventuallyMonotone { onset: r, .. },
            ) => Some(l.min(r + n - 1)..=(r + n - 1).max(l)),
            _ => None,
        }
    }

    /// Bounds for `log ||T^n|| = log sup_k w~(k - n + 1, k)`.
    ///
    /// `lower` is the maximum over `k` in `window`. When both tails are
    /// monotone and `window` contains [`monotone_window`](Self::monotone_window),
    /// every other `k` is dominated either by a scanned window (decaying tail)
    /// or by the tail limit `n * limit_log` (tail growing toward its limit), so
    /// `upper` is the exact supremum. Otherwise `upper = n log sup|w|`.
    pub fn shift_power_norm_log(&self, n: i64, window: RangeInclusive<i64>) -> Result<NormBounds> {
        if n < 1 {
            return Err(Error::invalid("n", "power must be at least 1"));
        }
        if window.is_empty() {
            return Err(Error::invalid("window", "must be nonempty"));
        }
        let (k0, k1) = (*window.start(), *window.end());
        self.ensure(k0 - n + 1, k1 + 1)?;
        let mut best = LogMagnitude(f64::NEG_INFINITY);
        let mut argmax = k0;
        for k in k0..=k1 {
            let v = self.w_tilde_log(k - n + 1, k)?;
            if v > best {
                best = v;
                argmax = k;
            }
        }
        let fallback = LogMagnitude(n as f64 * self.sup_abs.ln());
        let covered = self
            .monotone_window(n)
            .is_some_and(|need| k0 <= *need.start() && k1 >= *need.end());
        let (upper, exact) = if covered {
            let mut upper = best;
            for tail in [self.left, self.right] {
                if let TailMonotonicity::EventuallyMonotone {
                    decaying: false,
                    limit_log,
                    ..
                } = tail
                {
                    upper = upper.max(LogMagnitude(n as f64 * limit_log));
                }
            }
            (upper, true)
        } else {
            (fallback.max(best), false)
        };
        Ok(NormBounds {
            lower: best,
            upper,
            argmax,
            exact,
        })
    }

    /// Bounds for `log ||T^n||` using [`monotone_window`](Self::monotone_window)
    /// (or `[-n, n]` when a tail is unknown).
    pub fn norm_bounds(&self, n: i64) -> Result<NormBounds> {
        let window = self.monotone_window(n).unwrap_or(-n..=n);
        self.shift_power_norm_log(n, self.clamp_window(window, n))
    }

    fn clamp_window(&self, w: RangeInclusive<i64>, n: i64) -> RangeInclusive<i64> {
        let mut lo = *w.start();
        let mut hi = *w.end();
        if let Some(dlo) = self.domain.0 {
            lo = lo.max(dlo + n - 1);
        }
        if let Some(dhi) = self.domain.1 {
            hi = hi.min(dhi);
        }
        if lo > hi {
            hi = lo;
        }
        lo..=hi
    }
}

trait MaxExt {
    fn max(self, other: Self) -> Self;
}

impl MaxExt for LogMagnitude {
    fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn weight_at_examples() {
        let one = WeightSequence::constant(1.0).unwrap();
        assert_eq!(one.weight_at(5).unwrap(), Complex64::new(1.0, 0.0));
        let bz = WeightSequence::beauzamy(2.0, 1.0).unwrap();
        assert_eq!(bz.weight_at(0).unwrap().re, 2.0);
        assert_eq!(bz.weight_at(1).unwrap().re, 1.0);
        let se = WeightSequence::supexp(1.0).unwrap();
        assert!(close(se.weight_at(-3).unwrap().re, 0.049787068367863944, 1e-15));
    }

    #[test]
    fn w_tilde_examples() {
        let one = WeightSequence::constant(1.0).unwrap();
        assert_eq!(one.w_tilde_log(-10, 10).unwrap().value(), 0.0);
        let bz = WeightSequence::beauzamy(2.0, 1.0).unwrap();
        assert!(close(bz.w_tilde_log(-1, 1).unwrap().value(), 4f64.ln(), 1e-15));
        let se = WeightSequence::supexp(1.0).unwrap();
        assert_eq!(se.w_tilde_log(-2, 0).unwrap().value(), -3.0);
        assert!(matches!(bz.w_tilde_log(3, 2), Err(Error::InvalidRange { a: 3, b: 2 })));
    }

    #[test]
    fn alpha_examples() {
        let bz = WeightSequence::beauzamy(2.0, 1.0).unwrap();
        assert_eq!(bz.alpha_log(0).unwrap(), LogMagnitude::ONE);
        assert!(close(bz.alpha_log(-2).unwrap().value(), 4f64.ln(), 1e-15));
        let one = WeightSequence::constant(1.0).unwrap();
        assert_eq!(one.alpha_log(7).unwrap().value(), 0.0);
    }

    #[test]
    fn norm_examples() {
        let one = WeightSequence::constant(1.0).unwrap();
        let b = one.shift_power_norm_log(4, -8..=8).unwrap();
        assert_eq!((b.lower.value(), b.upper.value()), (0.0, 0.0));

        let se = WeightSequence::supexp(1.0).unwrap();
        let b = se.shift_power_norm_log(2, -8..=8).unwrap();
        assert_eq!(b.lower.value(), -1.0);
        assert_eq!(b.upper.value(), -1.0);
        assert!(b.exact);
        assert_eq!(b.argmax, 0);

        let bz = WeightSequence::beauzamy(2.0, 1.0).unwrap();
        let b = bz.shift_power_norm_log(3, -8..=8).unwrap();
        assert!(close(b.lower.value(), 8f64.ln(), 1e-15));
        assert!(b.argmax <= 0);
    }

    #[test]
    fn polydecay_upper_is_tail_limit() {
        // weights increase toward 1 far out, so sup is 1 but never attained
        let pd = WeightSequence::polydecay(1.0, 1.0, 0.5, 2).unwrap();
        let b = pd.norm_bounds(3).unwrap();
        assert_eq!(b.lower.value(), 0.0); // w_{-1} w_0 w_1 = 1
        assert_eq!(b.upper.value(), 0.0);
        let b = pd.shift_power_norm_log(8, 100..=120).unwrap();
        assert!(b.lower.value() < 0.0);
        assert_eq!(b.upper.value(), 0.0); // fallback n log 1
    }

    #[test]
    fn polydecay_onsets_keep_weights_positive() {
        let pd = WeightSequence::polydecay(1.0, 2.0, 0.5, 2).unwrap();
        assert_eq!(pd.polydecay_onsets(), Some((2, -5)));
        for n in -200..=200 {
            assert!(pd.weight_at(n).unwrap().re > 0.0, "w_{n}");
        }
        let pd = WeightSequence::polydecay(1.0, 2.0, 0.75, 2).unwrap();
        assert_eq!(pd.polydecay_onsets(), Some((2, -3)));
    }

    #[test]
    fn rejects_zero_weights() {
        assert!(WeightSequence::constant(0.0).is_err());
        assert!(WeightSequence::beauzamy(1.0, 0.0).is_err());
        let json = r#"{"family":"table","entries":[[0,1,0],[1,0,0]],"left_tail":{"constant":1},"right_tail":{"constant":1}}"#;
        assert!(matches!(WeightSequence::from_json(json), Err(Error::ZeroWeight { index: 1 })));
    }

    #[test]
    fn table_without_tail_is_undefined_outside() {
        let json = r#"{"family":"table","entries":[[-1,2,0],[0,1,0],[1,0.5,0]],"right_tail":"repeat_last"}"#;
        let ws = WeightSequence::from_json(json).unwrap();
        assert_eq!(ws.weight_at(7).unwrap().re, 0.5);
        assert!(matches!(ws.weight_at(-2), Err(Error::UndefinedWeight { index: -2 })));
        assert!(ws.w_tilde_log(-3, 0).is_err());
        assert!(close(ws.w_tilde_log(-1, 40).unwrap().value(), 2f64.ln() + 40.0 * 0.5f64.ln(), 1e-14));
        assert_eq!(ws.tails().0, TailMonotonicity::Unknown);
        // unknown left tail: norm bound falls back to n log sup|w|
        let b = ws.norm_bounds(2).unwrap();
        assert!(close(b.upper.value(), 2.0 * 2f64.ln(), 1e-15));
        assert!(!b.exact);
    }

    #[test]
    fn json_spec_parsing() {
        let ws = WeightSequence::from_json(r#"{"family":"beauzamy","a":2.0,"b":1.0}"#).unwrap();
        assert_eq!(ws.family(), &Family::Beauzamy { a: 2.0, b: 1.0 });
        let ws = WeightSequence::from_json(r#"{"family":"polydecay","a":1.0,"b":2.0,"alpha":0.5,"n0":2}"#).unwrap();
        assert_eq!(ws.sup_abs(), 1.0);
        let err = WeightSequence::from_json(r#"{"family":"supexp","gama":1.0}"#).unwrap_err();
        assert!(err.to_string().contains("gama") || err.to_string().contains("gamma"), "{err}");
        let err = WeightSequence::from_json(r#"{"family":"supexp","gamma":-1.0}"#).unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn inline_family_parsing() {
        assert_eq!("beauzamy(1,2)".parse::<Family>().unwrap(), Family::Beauzamy { a: 1.0, b: 2.0 });
        assert_eq!(
            "polydecay(1, 2, 0.75, 2)".parse::<Family>().unwrap(),
            Family::PolyDecay { a: 1.0, b: 2.0, alpha: 0.75, n0: 2 }
        );
        assert_eq!("problem2".parse::<Family>().unwrap(), Family::PolyDecay { a: 1.0, b: 0.0, alpha: 0.5, n0: 2 });
        assert!("beauzamy(1)".parse::<Family>().is_err());
        assert!("nope(1)".parse::<Family>().is_err());
    }

    #[test]
    fn phases() {
        let ws = WeightSequence::beauzamy(-2.0, 1.0).unwrap();
        assert_eq!(ws.phase_product(-2, 3).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(ws.phase_product(-1, 3).unwrap(), Complex64::new(1.0, 0.0));
        let ws = WeightSequence::supexp(1.0)
            .unwrap()
            .with_phase(0, Complex64::new(-1.0, 0.0))
            .unwrap();
        assert_eq!(ws.weight_at(0).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(ws.phase_product(-3, 3).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(ws.phase_product(1, 3).unwrap(), Complex64::new(1.0, 0.0));
        assert!(ws.modulus().is_positive());
    }

    #[test]
    fn cache_growth_does_not_change_answers() {
        let ws = WeightSequence::polydecay(1.0, 2.0, 0.75, 2).unwrap();
        let before = ws.w_tilde_log(-7, 13).unwrap();
        ws.prepare(-100_000, 100_000).unwrap();
        assert_eq!(before, ws.w_tilde_log(-7, 13).unwrap());
    }
}
