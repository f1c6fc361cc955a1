//! Finite transitions between the vectors `f_n = c_n e_{-n}` and the
//! direct-sum cyclic vector check.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::operator_engine::{
    apply_polynomial, apply_shift_power, Amplitude, LogPolynomial, LpExponent, SparseVector,
};
use crate::report::Real;
use crate::weights::WeightSequence;

/// `f_n = c_n e_{-n}` with `c_0 = 1`, `c_n = prod_{1-n}^{0} w` for `n > 0`
/// and `c_n = (prod_1^{-n} w)^-1` for `n < 0`, so that `T f_n = f_{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FVector {
    pub n: i64,
    pub c: Amplitude,
    pub vector: SparseVector,
}

impl FVector {
    pub fn c_log(&self) -> LogMagnitude {
        self.c.log()
    }
}

pub fn f_vector(ws: &WeightSequence, n: i64) -> Result<FVector> {
    let c = match n {
        0 => Amplitude::ONE,
        n if n > 0 => {
            let (ph, log) = ws.product(1 - n, 0)?;
            Amplitude::ONE.mul(ph, log)
        }
        n => {
            let (ph, log) = ws.product(1, -n)?;
            Amplitude::ONE.mul(ph.conj(), -log)
        }
    };
    Ok(FVector {
        n,
        c,
        vector: SparseVector::from_amplitudes([(-n, c)]),
    })
}

/// `log |c_n|`.
pub fn c_log(ws: &WeightSequence, n: i64) -> Result<f64> {
    Ok(match n {
        0 => 0.0,
        n if n > 0 => ws.w_tilde_log(1 - n, 0)?.value(),
        n => -ws.w_tilde_log(1, -n)?.value(),
    })
}

/// The three summands of the residual bound for a grid point `(j, m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundTerms {
    /// `j (log |c_{-m}| - log eps)`.
    pub ratio: f64,
    /// `(j - 1) log ||T^n||` (upper bound).
    pub norm: f64,
    /// `log |c_{(m-a) j}|`, `a = n + k`.
    pub tail: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.ratio + self.norm + self.tail
    }
}

fn check_transition_args(k: i64, n: i64, eps: f64) -> Result<()> {
    if k < 1 || n < 1 {
        return Err(Error::invalid("k/n", "both must be at least 1"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive and finite"));
    }
    Ok(())
}

/// Upper bound for `log ||T^n||` used by the search.
pub fn norm_upper_log(ws: &WeightSequence, n: i64) -> Result<f64> {
    Ok(ws.norm_bounds(n)?.upper.value())
}

pub fn bound_terms(
    ws: &WeightSequence,
    k: i64,
    n: i64,
    eps: f64,
    j: i64,
    m: i64,
    norm_upper: f64,
) -> Result<BoundTerms> {
    let a = n + k;
    Ok(BoundTerms {
        ratio: j as f64 * (c_log(ws, -m)? - eps.ln()),
        norm: if j == 1 { 0.0 } else { (j - 1) as f64 * norm_upper },
        tail: c_log(ws, (m - a) * j)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JmSearch {
    Found {
        j: i64,
        m: i64,
        bound_log: Real,
    },
    NotFound {
        /// Grid point with the smallest bound.
        j: i64,
        m: i64,
        best_bound_log: Real,
    },
}

/// Scans `j in [1, j_max]`, `m in [n + k, m_max]` for a point whose residual
/// bound is at most `log eps`, returning the first one in `(j, m)` order.
pub fn search_jm(ws: &WeightSequence, k: i64, n: i64, eps: f64, j_max: i64, m_max: i64) -> Result<JmSearch> {
    check_transition_args(k, n, eps)?;
    if n <= k {
        return Err(Error::invalid("n", "must exceed k; use the monomial path"));
    }
    if j_max < 1 {
        return Err(Error::invalid("j_max", "must be positive"));
    }
    let a = n + k;
    if m_max < a {
        return Err(Error::invalid("m_max", format!("must be at least n + k = {a}")));
    }
    let norm_upper = norm_upper_log(ws, n)?;
    let target = eps.ln();
    ws.prepare(-m_max, (m_max - a) * j_max)?;
    // per j: first feasible (m, bound) and the row minimum (bound, m)
    type Row = (Option<(i64, f64)>, (f64, i64));
    let rows: Vec<Row> = (1..=j_max)
        .into_par_iter()
        .map(|j| {
            let mut best = (f64::INFINITY, a);
            for m in a..=m_max {
                let b = bound_terms(ws, k, n, eps, j, m, norm_upper)?.total();
                if b < best.0 {
                    best = (b, m);
                }
                if b <= target {
                    return Ok((Some((m, b)), best));
                }
            }
            Ok((None, best))
        })
        .collect::<Result<_>>()?;
    for (j, row) in rows.iter().enumerate() {
        if let Some((m, b)) = row.0 {
            return Ok(JmSearch::Found {
                j: j as i64 + 1,
                m,
                bound_log: Real(b),
            });
        }
    }
    let mut best = (f64::INFINITY, 1, a);
    for (j, row) in rows.iter().enumerate() {
        if row.1 .0 < best.0 {
            best = (row.1 .0, j as i64 + 1, row.1 .1);
        }
    }
    Ok(JmSearch::NotFound {
        j: best.1,
        m: best.2,
        best_bound_log: Real(best.0),
    })
}

/// `q_{j,m}(z) = -sum_{l<j} beta^{l+1} z^{(m-n) + l(m-k)}`, `beta = |c_{-m}| / eps`.
pub fn build_qjm(ws: &WeightSequence, j: i64, m: i64, k: i64, n: i64, eps: f64) -> Result<LogPolynomial> {
    check_transition_args(k, n, eps)?;
    if j < 1 {
        return Err(Error::invalid("j", "must be at least 1"));
    }
    if !(m >= n && n > k) {
        return Err(Error::invalid("m", "need m >= n > k"));
    }
    let beta = c_log(ws, -m)? - eps.ln();
    let minus_one = Complex64::new(-1.0, 0.0);
    Ok(LogPolynomial::from_terms((0..j).filter_map(|l| {
        let degree = ((m - n) + l * (m - k)) as u64;
        Amplitude::new(minus_one, LogMagnitude((l + 1) as f64 * beta)).map(|a| (degree, a))
    })))
}

/// Checks attached to a transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    /// `||r(T) u - f_{-n}|| <= eps`.
    pub within_eps: bool,
    /// Direct and closed-form residuals agree to `1e-9`.
    pub agreement: bool,
    /// Direct residual is at most the search bound plus `1e-9`.
    pub within_bound: bool,
    /// The residual is supported on the single predicted index.
    pub single_index: bool,
    /// `||u - f_{-k}|| = eps` in log arithmetic.
    pub perturbation_exact: bool,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.within_eps && self.agreement && self.within_bound && self.single_index && self.perturbation_exact
    }
}

/// A verified transition `f_{-k} -> f_{-n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CyclicApproxResult {
    pub k: i64,
    pub n: i64,
    /// `None` on the monomial path.
    pub j: Option<i64>,
    pub m: Option<i64>,
    pub eps: Real,
    pub poly: LogPolynomial,
    pub u: SparseVector,
    pub residual_direct_log: Real,
    pub residual_closedform_log: Real,
    pub perturbation_log: Real,
    pub bound_log: Real,
    /// Support of `r(T) u - f_{-n}`.
    pub residual_support: Vec<i64>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TransitionOutcome {
    Found(Box<CyclicApproxResult>),
    NotFound {
        k: i64,
        n: i64,
        eps: Real,
        j: i64,
        m: i64,
        best_bound_log: Real,
        j_max: i64,
        m_max: i64,
    },
}

const AGREEMENT: f64 = 1e-9;

/// Builds `u` with `||u - f_{-k}|| <= eps` and a polynomial `r` with
/// `||r(T) u - f_{-n}|| <= eps`, then verifies the residual two ways.
pub fn approximate_transition(
    ws: &WeightSequence,
    k: i64,
    n: i64,
    eps: f64,
    j_max: i64,
    m_max: i64,
) -> Result<TransitionOutcome> {
    check_transition_args(k, n, eps)?;
    let p2 = LpExponent::Finite(2.0);
    let fk = f_vector(ws, -k)?;
    let fn_ = f_vector(ws, -n)?;
    let ln_eps = eps.ln();

    if n <= k {
        let poly = LogPolynomial::monomial((k - n) as u64, Amplitude::ONE);
        let u = fk.vector.clone();
        let residual = apply_polynomial(ws, &poly, &u)?.sub(&fn_.vector);
        let direct = residual.lp_norm_log(p2).value();
        let perturbation = u.sub(&fk.vector).lp_norm_log(p2).value();
        let certificate = Certificate {
            within_eps: direct <= ln_eps,
            agreement: direct == f64::NEG_INFINITY,
            within_bound: direct == f64::NEG_INFINITY,
            single_index: residual.is_empty(),
            perturbation_exact: perturbation == f64::NEG_INFINITY,
        };
        return Ok(TransitionOutcome::Found(Box::new(CyclicApproxResult {
            k,
            n,
            j: None,
            m: None,
            eps: Real(eps),
            poly,
            u,
            residual_direct_log: Real(direct),
            residual_closedform_log: Real(f64::NEG_INFINITY),
            perturbation_log: Real(perturbation),
            bound_log: Real(f64::NEG_INFINITY),
            residual_support: residual.support().collect(),
            certificate,
        })));
    }

    let (j, m, bound) = match search_jm(ws, k, n, eps, j_max, m_max)? {
        JmSearch::Found { j, m, bound_log } => (j, m, bound_log.0),
        JmSearch::NotFound { j, m, best_bound_log } => {
            return Ok(TransitionOutcome::NotFound {
                k,
                n,
                eps: Real(eps),
                j,
                m,
                best_bound_log,
                j_max,
                m_max,
            })
        }
    };

    // x_m = f_{-k} - (eps / ||f_{-m}||) f_{-m}
    let fm = f_vector(ws, -m)?;
    let bump = Amplitude::new(-fm.c.phase, LogMagnitude(ln_eps)).expect("eps > 0");
    let u = fk.vector.add(&SparseVector::from_amplitudes([(m, bump)]));
    let perturbation = u.sub(&fk.vector).lp_norm_log(p2).value();

    let poly = build_qjm(ws, j, m, k, n, eps)?;
    let residual = apply_polynomial(ws, &poly, &u)?.sub(&fn_.vector);
    let direct = residual.lp_norm_log(p2).value();
    let tail_index = (m - k) * j - n;
    let closed = j as f64 * (c_log(ws, -m)? - ln_eps) + c_log(ws, tail_index)?;
    let support: Vec<i64> = residual.support().collect();
    let certificate = Certificate {
        within_eps: direct <= ln_eps,
        agreement: (direct - closed).abs() <= AGREEMENT,
        within_bound: direct <= bound + AGREEMENT,
        single_index: support == [-tail_index],
        perturbation_exact: perturbation == ln_eps,
    };
    Ok(TransitionOutcome::Found(Box::new(CyclicApproxResult {
        k,
        n,
        j: Some(j),
        m: Some(m),
        eps: Real(eps),
        poly,
        u,
        residual_direct_log: Real(direct),
        residual_closedform_log: Real(closed),
        perturbation_log: Real(perturbation),
        bound_log: Real(bound),
        residual_support: support,
        certificate,
    })))
}

// ---------------------------------------------------------------------------
// direct sums T + zT + ... + z^{j-1}T

/// Determinant of a square complex matrix by elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .expect("nonempty range");
        if a[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        eliminate_below(&mut a, col);
    }
    det
}

/// Clears column `col` below the pivot row; returns the row multipliers.
fn eliminate_below(a: &mut [Vec<Complex64>], col: usize) -> Vec<Complex64> {
    let (top, rest) = a.split_at_mut(col + 1);
    let pivot = &top[col];
    rest.iter_mut()
        .map(|row| {
            let f = row[col] / pivot[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            f
        })
        .collect()
}

/// Solves `a x = b` by elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))?;
        if a[pivot][col].norm() == 0.0 {
            return None;
        }
        a.swap(pivot, col);
        b.swap(pivot, col);
        let pivot_b = b[col];
        for (x, f) in b[col + 1..].iter_mut().zip(eliminate_below(&mut a, col)) {
            *x -= f * pivot_b;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// `z^e` for `z = exp(2 pi i / j)`, reduced mod `j` before evaluation.
pub fn root_power(j: usize, e: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (e % j) as f64 / j as f64)
}

pub fn vandermonde(j: usize) -> Vec<Vec<Complex64>> {
    (0..j).map(|k| (0..j).map(|l| root_power(j, k * l)).collect()).collect()
}

/// `prod_{k<l} |z^l - z^k|`.
pub fn vandermonde_product(j: usize) -> f64 {
    let mut p = 1.0;
    for k in 0..j {
        for l in k + 1..j {
            p *= (root_power(j, l) - root_power(j, k)).norm();
        }
    }
    p
}

/// The sampled polynomials: `z^t` for `t <= 8` and four degree-3
/// polynomials with coefficients drawn from the seeded generator.
pub fn sample_polynomials(seed: u64) -> Vec<LogPolynomial> {
    let mut out: Vec<LogPolynomial> = (0..=8)
        .map(|t| LogPolynomial::monomial(t, Amplitude::ONE))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let coeffs: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        out.push(LogPolynomial::from_complex(&coeffs));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectSumCheck {
    pub j: usize,
    pub z: (Real, Real),
    /// `(x, x, ..., x)`.
    pub u: Vec<SparseVector>,
    pub det_abs: Real,
    pub det_product: Real,
    pub det_relative_error: Real,
    /// Largest componentwise mismatch of `S^t r(S^j) u` against
    /// `(z^{it} T^t r(T^j) x)_i` over the sampled `r` and `t < j`.
    pub identity_residual: Real,
    /// Largest deviation of the solved inverse Vandermonde columns from
    /// `conj(V) / j`, and of `V a_i` from the unit vectors.
    pub solve_residual: Real,
    pub vandermonde_ok: bool,
    pub identity_ok: bool,
}

/// `S = T + zT + ... + z^{j-1}T` applied once to a `j`-tuple.
fn apply_sum_operator(ws: &WeightSequence, z: Complex64, tuple: &[SparseVector]) -> Result<Vec<SparseVector>> {
    let mut zi = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(tuple.len());
    for x in tuple {
        out.push(apply_shift_power(ws, x, 1)?.scaled(zi, LogMagnitude::ONE));
        zi *= z;
        zi /= zi.norm();
    }
    Ok(out)
}

fn apply_sum_power(ws: &WeightSequence, z: Complex64, tuple: &[SparseVector], d: u64) -> Result<Vec<SparseVector>> {
    let mut cur = tuple.to_vec();
    for _ in 0..d {
        cur = apply_sum_operator(ws, z, &cur)?;
    }
    Ok(cur)
}

pub fn direct_sum_cyclic_vector(ws: &WeightSequence, x: &SparseVector, j: usize, seed: u64) -> Result<DirectSumCheck> {
    if j < 1 {
        return Err(Error::invalid("j", "must be at least 1"));
    }
    let z = root_power(j, 1);
    let u = vec![x.clone(); j];

    let v = vandermonde(j);
    let det_abs = determinant(v.clone()).norm();
    let det_product = vandermonde_product(j);
    let det_relative_error = (det_abs - det_product).abs() / det_product;

    let mut solve_residual: f64 = 0.0;
    for i in 0..j {
        let mut e = vec![Complex64::new(0.0, 0.0); j];
        e[i] = Complex64::new(1.0, 0.0);
        let a = solve(v.clone(), e.clone()).ok_or_else(|| Error::invalid("j", "singular Vandermonde matrix"))?;
        for (t, at) in a.iter().enumerate() {
            solve_residual = solve_residual.max((at - v[t][i].conj() / j as f64).norm());
        }
        for (k, row) in v.iter().enumerate() {
            let s: Complex64 = row.iter().zip(&a).map(|(vk, ak)| vk * ak).sum();
            solve_residual = solve_residual.max((s - e[k]).norm());
        }
    }

    let mut identity_residual: f64 = 0.0;
    for r in sample_polynomials(seed) {
        // r(S^j) u, one power of S at a time
        let mut acc: Vec<SparseVector> = vec![SparseVector::zero(); j];
        for (d, c) in r.terms() {
            let part = apply_sum_power(ws, z, &u, d * j as u64)?;
            for (slot, p) in acc.iter_mut().zip(part) {
                *slot = slot.add(&p.scaled(c.phase, c.log()));
            }
        }
        let base = apply_polynomial(ws, &r.compose_power(j as u64), x)?;
        let mut lhs = acc;
        for t in 0..j {
            let rhs = apply_shift_power(ws, &base, t as u64)?;
            for (i, comp) in lhs.iter().enumerate() {
                let want = rhs.scaled(root_power(j, i * t), LogMagnitude::ONE);
                identity_residual = identity_residual.max(comp.relative_discrepancy(&want));
            }
            lhs = apply_sum_operator(ws, z, &lhs)?;
        }
    }

    Ok(DirectSumCheck {
        j,
        z: (Real(z.re), Real(z.im)),
        u,
        det_abs: Real(det_abs),
        det_product: Real(det_product),
        det_relative_error: Real(det_relative_error),
        identity_residual: Real(identity_residual),
        solve_residual: Real(solve_residual),
        vandermonde_ok: det_product > 0.0 && det_relative_error <= 1e-10 && solve_residual <= 1e-10,
        identity_ok: identity_residual <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_vector_examples() {
        let se = WeightSequence::supexp(1.0).unwrap();
        let f0 = f_vector(&se, 0).unwrap();
        assert_eq!(f0.vector, SparseVector::basis(0));
        let one = WeightSequence::constant(1.0).unwrap();
        let f3 = f_vector(&one, 3).unwrap();
        assert_eq!(f3.vector.support().collect::<Vec<_>>(), vec![-3]);
        assert_eq!(f3.c_log().value(), 0.0);
        let f3 = f_vector(&se, 3).unwrap();
        assert_eq!(f3.c_log().value(), -3.0);
        assert_eq!(f3.vector.get(-3).unwrap().log_mag, -3.0);
    }

    #[test]
    fn f_vectors_shift_forward_with_complex_weights() {
        let ws = WeightSequence::beauzamy(-2.0, 1.5)
            .unwrap()
            .with_phase(3, Complex64::new(0.0, 1.0))
            .unwrap();
        for n in -8..=8 {
            let shifted = apply_shift_power(&ws, &f_vector(&ws, n).unwrap().vector, 1).unwrap();
            let next = f_vector(&ws, n + 1).unwrap().vector;
            assert!(shifted.relative_discrepancy(&next) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn search_examples() {
        let se = WeightSequence::supexp(1.0).unwrap();
        let JmSearch::Found { j, m, bound_log } = search_jm(&se, 1, 2, 0.1, 64, 64).unwrap() else {
            panic!("expected a witness");
        };
        assert_eq!((j, m), (2, 13));
        assert!(bound_log.0 <= 0.1f64.ln());

        let one = WeightSequence::constant(1.0).unwrap();
        let JmSearch::NotFound { best_bound_log, .. } = search_jm(&one, 1, 2, 0.1, 64, 64).unwrap() else {
            panic!("expected no witness");
        };
        assert!((best_bound_log.0 - 10f64.ln()).abs() < 1e-12);

        let bz = WeightSequence::beauzamy(1.0, 2.0).unwrap();
        assert!(matches!(search_jm(&bz, 1, 2, 0.1, 64, 64).unwrap(), JmSearch::Found { .. }));
        assert!(search_jm(&bz, 2, 2, 0.1, 64, 64).is_err());
        assert!(search_jm(&bz, 1, 2, 0.0, 64, 64).is_err());
    }

    #[test]
    fn qjm_shape() {
        let se = WeightSequence::supexp(1.0).unwrap();
        let q = build_qjm(&se, 1, 4, 1, 2, 0.1).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.coeff(2).unwrap().phase, Complex64::new(-1.0, 0.0));
        let q = build_qjm(&se, 2, 4, 1, 2, 0.1).unwrap();
        assert_eq!(q.terms().map(|(d, _)| d).collect::<Vec<_>>(), vec![2, 5]);
        let beta = c_log(&se, -4).unwrap() - 0.1f64.ln();
        assert!((q.coeff(2).unwrap().log_mag - beta).abs() < 1e-12);
        assert!((q.coeff(5).unwrap().log_mag - 2.0 * beta).abs() < 1e-12);
        assert_eq!(build_qjm(&se, 7, 20, 1, 2, 0.1).unwrap().len(), 7);
    }

    #[test]
    fn transition_examples() {
        let se = WeightSequence::supexp(1.0).unwrap();
        let TransitionOutcome::Found(r) = approximate_transition(&se, 1, 2, 0.1, 64, 64).unwrap() else {
            panic!("expected a transition");
        };
        assert!(r.certificate.ok(), "{:?}", r.certificate);

        let TransitionOutcome::Found(r) = approximate_transition(&se, 2, 1, 0.1, 64, 64).unwrap() else {
            panic!("monomial path");
        };
        assert_eq!(r.residual_direct_log.0, f64::NEG_INFINITY);
        assert!(r.certificate.ok());

        let bz = WeightSequence::beauzamy(1.0, 2.0).unwrap();
        let TransitionOutcome::Found(r) = approximate_transition(&bz, 1, 3, 0.05, 64, 64).unwrap() else {
            panic!("expected a transition");
        };
        assert_eq!(r.perturbation_log.0, 0.05f64.ln());
        assert!(r.certificate.ok(), "{:?}", r.certificate);

        let one = WeightSequence::constant(1.0).unwrap();
        assert!(matches!(
            approximate_transition(&one, 1, 2, 0.1, 64, 64).unwrap(),
            TransitionOutcome::NotFound { .. }
        ));
    }

    #[test]
    fn vandermonde_examples() {
        let one = WeightSequence::constant(1.0).unwrap();
        let c = direct_sum_cyclic_vector(&one, &SparseVector::basis(0), 1, 0).unwrap();
        assert!(c.vandermonde_ok && c.identity_ok);
        assert_eq!(c.z.0 .0, 1.0);
        let c = direct_sum_cyclic_vector(&one, &SparseVector::basis(0), 2, 0).unwrap();
        assert!((c.det_abs.0 - 2.0).abs() < 1e-15);
        assert_eq!(c.z.0 .0, -1.0);
        let c = direct_sum_cyclic_vector(&one, &SparseVector::basis(0), 4, 0).unwrap();
        assert!(c.vandermonde_ok && c.identity_ok, "{c:?}");
    }
}
