//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Items listed in `EXPECTED_FAILURES` are evaluated like every other item
//! and print FAIL when they fail, but do not fail the process.

use std::process::ExitCode;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wbshift::constructor::{approximate_transition, direct_sum_cyclic_vector, CyclicApproxResult, TransitionOutcome};
use wbshift::criteria::{
    aag_cyclic, check_justifications, classify, direct_sum_lq, fixed_j_c123, quasinilpotent_b123,
    salas_hypercyclic, salas_supercyclic, sc_witness, shkarin_a123, tie_slack, Budgets, Condition,
    CriterionReport, Justification, RhoSpec, Status, Trace,
};
use wbshift::operator_engine::{
    adjoint_orbit_functional, diagonal_similarity, intertwiner_j, intertwining_on_pairs, LpExponent,
    SparseVector,
};
use wbshift::weights::{Family, TailRule, WeightSequence};

const EXPECTED_FAILURES: &[&str] = &["1d-c123"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn check(id: &'static str, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    match f() {
        Ok(detail) => Outcome { id, pass: true, detail },
        Err(detail) => Outcome { id, pass: false, detail },
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fam(s: &str) -> WeightSequence {
    WeightSequence::new(s.parse::<Family>().expect("family")).expect("weights")
}

fn err(e: wbshift::error::Error) -> String {
    e.to_string()
}

fn l2() -> LpExponent {
    LpExponent::Finite(2.0)
}

fn identity_families() -> Vec<(&'static str, WeightSequence)> {
    ["constant(1)", "beauzamy(2,1)", "beauzamy(1,2)", "supexp(1)", "polydecay(1,2,0.5,2)"]
        .into_iter()
        .map(|s| (s, fam(s)))
        .collect()
}

fn salas_rows(r: &CriterionReport) -> Vec<(i64, Option<i64>, f64)> {
    match &r.trace {
        Some(Trace::Salas { rows }) => rows.iter().map(|row| (row.m, row.n, row.value_log.0)).collect(),
        _ => Vec::new(),
    }
}

// 1 -------------------------------------------------------------------------

fn item_1a() -> Result<String, String> {
    let ws = fam("beauzamy(1,2)");
    let r = salas_supercyclic(&ws, 8, 64, 1e-3f64.ln()).map_err(err)?;
    ensure(r.is_witnessed(), format!("verdict {:?}", r.verdict))?;
    let rows = salas_rows(&r);
    let (_, n, v) = rows.first().copied().ok_or("no trace")?;
    ensure(n == Some(10), format!("m=0 witness n={n:?}"))?;
    let want = -10.0 * 2f64.ln();
    ensure((v - want).abs() <= 1e-12, format!("m=0 value {v} vs {want}"))?;
    Ok(format!("m=0 witness n=10, value {v:.15}"))
}

fn item_1b() -> Result<String, String> {
    let ws = fam("beauzamy(2,1)");
    let tol = 1e-3f64.ln();
    let sup = salas_supercyclic(&ws, 8, 64, tol).map_err(err)?;
    ensure(!sup.is_witnessed(), "salas_supercyclic witnessed")?;
    let dsl = direct_sum_lq(&ws, l2(), l2(), 0, 64, tol).map_err(err)?;
    ensure(dsl.is_witnessed(), "direct_sum_lq(2,2,0) undetermined")?;
    let budgets = Budgets {
        tol_log: tol,
        m_max: 8,
        n_max: 64,
        j_max: 64,
    };
    let c = classify(&ws, l2(), &budgets).map_err(err)?;
    for cond in [Condition::C2, Condition::C3, Condition::C4, Condition::C5, Condition::C6] {
        ensure(c.status(cond) == Status::Fails, format!("{} is {:?}", cond.as_str(), c.status(cond)))?;
    }
    ensure(check_justifications(&c), "justification chain rejected")?;
    Ok("C2..C6 refuted from direct_sum_lq evidence".into())
}

fn item_1c() -> Result<String, String> {
    let budgets = Budgets {
        m_max: 8,
        n_max: 4096,
        ..Budgets::default()
    };
    let yes = classify(&fam("polydecay(1,2,0.75,2)"), l2(), &budgets).map_err(err)?;
    ensure(yes.status(Condition::C2) == Status::Holds, "polydecay(1,2) not supercyclic")?;
    let evidence = yes
        .statuses
        .iter()
        .flat_map(|s| &s.justification)
        .any(|j| matches!(j, Justification::Evidence { criterion, .. } if criterion.as_str() == "salas_supercyclic"));
    ensure(evidence, "C2 not backed by salas_supercyclic")?;
    let no = salas_supercyclic(&fam("polydecay(2,1,0.75,2)"), 8, 4096, budgets.tol_log).map_err(err)?;
    ensure(!no.is_witnessed(), "polydecay(2,1) witnessed")?;
    Ok(format!("polydecay(1,2) holds, polydecay(2,1) best value {:.6}", no.value_log))
}

fn item_1d_b123() -> Result<String, String> {
    let r = quasinilpotent_b123(&fam("supexp(1)"), 4096, 1e-6f64.ln()).map_err(err)?;
    ensure(r.is_witnessed(), "undetermined")?;
    let Some(Trace::Values { first_index, values_log }) = &r.trace else {
        return Err("missing trace".into());
    };
    for (i, v) in values_log.iter().enumerate() {
        let n = *first_index + i as i64;
        let want = -((n - 1) as f64) / 2.0;
        ensure((v.0 - want).abs() <= 1e-12, format!("n={n}: {} vs {want}", v.0))?;
    }
    Ok(format!("{} values equal -(n-1)/2", values_log.len()))
}

fn item_1d_c123() -> Result<String, String> {
    let r = fixed_j_c123(&fam("supexp(1)"), 1, 1, 64, 1e-6f64.ln()).map_err(err)?;
    ensure(
        r.is_witnessed(),
        format!("fixed_j_c123(j=1,a=1) undetermined: best value {} at {}", r.value_log, r.witness),
    )?;
    Ok("witnessed".into())
}

fn item_1e() -> Result<String, String> {
    let ws = fam("constant(1)");
    let b = Budgets::default();
    let mut reports = vec![
        salas_hypercyclic(&ws, b.m_max, b.n_max, b.tol_log).map_err(err)?,
        salas_supercyclic(&ws, b.m_max, b.n_max, b.tol_log).map_err(err)?,
        quasinilpotent_b123(&ws, b.n_max, b.tol_log).map_err(err)?,
    ];
    for a in 1..=4 {
        reports.push(shkarin_a123(&ws, a, b.j_max, b.m_max, b.tol_log).map_err(err)?);
    }
    for r in &reports {
        ensure(!r.is_witnessed(), format!("{} witnessed", r.criterion))?;
        ensure(r.value_log == 0.0, format!("{} best value {}", r.criterion, r.value_log))?;
    }
    let dsl = direct_sum_lq(&ws, l2(), l2(), 0, b.n_max, b.tol_log).map_err(err)?;
    ensure(dsl.is_witnessed(), "direct_sum_lq(2,2) undetermined")?;
    let rho = RhoSpec::Constant { c: 1.0 };
    let aag2 = aag_cyclic(&ws, l2(), 1, Some(&rho), b.n_max, wbshift::criteria::aag_default_tol()).map_err(err)?;
    ensure(aag2.is_witnessed(), "aag_cyclic(p=2) undetermined")?;
    let aag1 = aag_cyclic(&ws, LpExponent::Finite(1.0), 1, Some(&rho), b.n_max, wbshift::criteria::aag_default_tol())
        .map_err(err)?;
    let Some(Trace::Aag(t)) = &aag1.trace else {
        return Err("missing aag trace".into());
    };
    ensure(t.obstruction && !aag1.is_witnessed(), "aag_cyclic(p=1) shows no obstruction")?;
    Ok("liminf criteria at 0, direct sum bounded, l_2 cyclic, l_1 obstructed".into())
}

// 2 -------------------------------------------------------------------------

fn certificate(r: &CyclicApproxResult, eps: f64) -> Result<(), String> {
    let ln_eps = eps.ln();
    ensure(r.perturbation_log.0 == ln_eps, format!("(i) perturbation {} vs {ln_eps}", r.perturbation_log.0))?;
    ensure(r.residual_direct_log.0 <= ln_eps, format!("(ii) residual {}", r.residual_direct_log.0))?;
    ensure(r.residual_support.len() == 1, format!("(iii) support {:?}", r.residual_support))?;
    let gap = (r.residual_direct_log.0 - r.residual_closedform_log.0).abs();
    ensure(gap <= 1e-9, format!("(iii) direct vs closed form gap {gap}"))?;
    ensure(
        r.residual_direct_log.0 <= r.bound_log.0 + 1e-9,
        format!("(iv) residual {} above bound {}", r.residual_direct_log.0, r.bound_log.0),
    )
}

fn item_2a() -> Result<String, String> {
    let ws = fam("supexp(1)");
    let TransitionOutcome::Found(r) = approximate_transition(&ws, 1, 2, 0.1, 64, 64).map_err(err)? else {
        return Err("not found".into());
    };
    certificate(&r, 0.1)?;
    Ok(format!("j={:?} m={:?} residual {:.6}", r.j, r.m, r.residual_direct_log.0))
}

fn item_2b() -> Result<String, String> {
    let ws = fam("supexp(1)");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut found = 0;
    for _ in 0..20 {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(k + 1..=6);
        let eps = rng.gen_range(1e-3f64.ln()..=0.5f64.ln()).exp();
        if let TransitionOutcome::Found(r) = approximate_transition(&ws, k, n, eps, 64, 64).map_err(err)? {
            certificate(&r, eps).map_err(|e| format!("k={k} n={n} eps={eps}: {e}"))?;
            found += 1;
        }
    }
    Ok(format!("{found}/20 found, all certified"))
}

// 3 -------------------------------------------------------------------------

fn item_3a() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (name, ws) in identity_families() {
        for m in 0..=3 {
            let j = intertwiner_j(&ws, m, 32).map_err(err)?;
            ensure(j.closed_form_residual <= 1e-12, format!("{name} m={m}: {}", j.closed_form_residual))?;
            worst = worst.max(j.closed_form_residual);
        }
    }
    Ok(format!("worst relative log error {worst:.3e}"))
}

fn item_3b() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (name, ws) in identity_families() {
        for m in 0..=3 {
            let j = intertwiner_j(&ws, m, 32).map_err(err)?;
            let r = intertwining_on_pairs(&ws, &j, -16..=16).map_err(err)?;
            ensure(r <= 1e-12, format!("{name} m={m}: {r}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("worst componentwise mismatch {worst:.3e}"))
}

fn random_sparse(rng: &mut ChaCha8Rng) -> SparseVector {
    let len = rng.gen_range(1..=5);
    let entries: Vec<(i64, Complex64)> = (0..len)
        .map(|_| {
            (
                rng.gen_range(-20..=20),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    SparseVector::from_complex(entries)
}

fn item_3c() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (name, ws) in identity_families() {
        for _ in 0..50 {
            let x = random_sparse(&mut rng);
            let f = random_sparse(&mut rng);
            let c = adjoint_orbit_functional(&ws, &x, &f, 50).map_err(err)?;
            ensure(c.max_relative <= 1e-10, format!("{name}: {}", c.max_relative))?;
            worst = worst.max(c.max_relative);
        }
    }
    Ok(format!("worst relative functional {worst:.3e}"))
}

fn item_3d() -> Result<String, String> {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for (name, ws) in identity_families() {
        let w = ws.with_phase(0, Complex64::new(-1.0, 0.0)).map_err(err)?;
        let u = w.modulus();
        let sim = diagonal_similarity(&w, &u, -32..=32).map_err(err)?;
        ensure(sim.modulus_error <= 1e-14, format!("{name}: |d_n| error {}", sim.modulus_error))?;
        ensure(
            sim.conjugation_residual <= 1e-12,
            format!("{name}: conjugation {}", sim.conjugation_residual),
        )?;
        worst = (worst.0.max(sim.modulus_error), worst.1.max(sim.conjugation_residual));
    }
    Ok(format!("|d_n| error {:.3e}, conjugation {:.3e}", worst.0, worst.1))
}

fn item_3e() -> Result<String, String> {
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, ws) in identity_families() {
        let x = random_sparse(&mut rng);
        for j in [2, 3, 4, 8] {
            let c = direct_sum_cyclic_vector(&ws, &x, j, 0).map_err(err)?;
            ensure(
                c.det_relative_error.0 <= 1e-10,
                format!("{name} j={j}: det error {}", c.det_relative_error.0),
            )?;
            ensure(c.identity_ok, format!("{name} j={j}: identity residual {}", c.identity_residual.0))?;
            worst = (worst.0.max(c.det_relative_error.0), worst.1.max(c.identity_residual.0));
        }
    }
    Ok(format!("det error {:.3e}, identity residual {:.3e}", worst.0, worst.1))
}

// 4 -------------------------------------------------------------------------

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    s + c
}

fn random_table(rng: &mut ChaCha8Rng) -> WeightSequence {
    let half = rng.gen_range(4..=12);
    let entries: Vec<Complex64> = (0..2 * half + 1)
        .map(|_| Complex64::new(rng.gen_range(-1.0f64..1.0).exp(), 0.0))
        .collect();
    let tail = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            TailRule::RepeatLast
        } else {
            TailRule::Constant(rng.gen_range(-0.7f64..0.7).exp())
        }
    };
    let left = tail(rng);
    let right = tail(rng);
    WeightSequence::new(Family::Table {
        start: -half,
        entries,
        left_tail: Some(left),
        right_tail: Some(right),
    })
    .expect("table")
}

fn item_4() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut families: Vec<WeightSequence> = wbshift::weights::builtin_families()
        .into_iter()
        .map(|b| WeightSequence::new(b.family).expect("builtin"))
        .collect();
    families.push(random_table(&mut rng));
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let ws = &families[i % families.len()];
        let x = rng.gen_range(-64..=64);
        let y = rng.gen_range(-64..=64);
        let (a, b) = (x.min(y), x.max(y));
        let fast = ws.w_tilde_log(a, b).map_err(err)?.value();
        let slow = compensated_sum((a..=b).map(|n| ws.log_abs_at(n).expect("weight")));
        let rel = (fast - slow).abs() / slow.abs().max(1.0);
        ensure(rel <= 1e-12, format!("{} [{a},{b}]: {fast} vs {slow}", ws.family()))?;
        worst = worst.max(rel);
    }
    Ok(format!("worst relative error {worst:.3e}"))
}

// 5 -------------------------------------------------------------------------

fn exists_reports(ws: &WeightSequence, b: &Budgets) -> wbshift::error::Result<Vec<CriterionReport>> {
    let mut out = Vec::new();
    for a in 1..=4 {
        out.push(shkarin_a123(ws, a, b.j_max, b.m_max, b.tol_log)?);
    }
    out.push(quasinilpotent_b123(ws, b.n_max, b.tol_log)?);
    out.push(fixed_j_c123(ws, 2, 1, b.m_max, b.tol_log)?);
    out.push(direct_sum_lq(ws, l2(), l2(), 0, b.n_max, b.tol_log)?);
    out.push(sc_witness(ws, 4, b.n_max, b.tol_log)?);
    Ok(out)
}

fn item_5() -> Result<String, String> {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let small = Budgets {
        tol_log: 1e-3f64.ln(),
        m_max: 8,
        n_max: 64,
        j_max: 8,
    };
    let big = small.doubled();
    let mut witnessed = 0;
    for t in 0..100 {
        let ws = random_table(&mut rng);
        for crit in [salas_supercyclic, salas_hypercyclic] {
            let a = salas_rows(&crit(&ws, small.m_max, small.n_max, small.tol_log).map_err(err)?);
            let b = salas_rows(&crit(&ws, big.m_max, big.n_max, big.tol_log).map_err(err)?);
            for (row, (m, n, v)) in a.iter().enumerate() {
                if n.is_none() {
                    continue;
                }
                witnessed += 1;
                let (m2, n2, v2) = b[row];
                ensure(
                    m2 == *m && n2.is_some() && v2 <= v + tie_slack(*v),
                    format!("table {t}: Salas m={m} n={n:?} value {v} became n={n2:?} value {v2}"),
                )?;
            }
        }
        let a = exists_reports(&ws, &small).map_err(err)?;
        let b = exists_reports(&ws, &big).map_err(err)?;
        for (ra, rb) in a.iter().zip(&b) {
            if !ra.is_witnessed() {
                continue;
            }
            witnessed += 1;
            ensure(
                rb.is_witnessed() && rb.value_log <= ra.value_log + tie_slack(ra.value_log),
                format!(
                    "table {t}: {} {} value {} became {:?} value {}",
                    ra.criterion, ra.horizon, ra.value_log, rb.verdict, rb.value_log
                ),
            )?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("{witnessed} witnesses preserved in {secs:.2} s"))
}

// 6 -------------------------------------------------------------------------

fn item_6() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let path = dir.path().join(format!("classify-{workers}.json"));
        let code = wbshift::cli::run([
            "wbshift",
            "classify",
            "--family",
            "polydecay(1,2,0.75,2)",
            "--p",
            "2",
            "--m-max",
            "8",
            "--workers",
            workers,
            "--out",
            path.to_str().expect("utf-8 path"),
        ]);
        ensure(code == 0, format!("exit code {code}"))?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(!outputs[0].is_empty() && outputs[0] == outputs[1], "outputs differ")?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let outcomes = vec![
        check("1a", item_1a),
        check("1b", item_1b),
        check("1c", item_1c),
        check("1d-b123", item_1d_b123),
        check("1d-c123", item_1d_c123),
        check("1e", item_1e),
        check("2a", item_2a),
        check("2b", item_2b),
        check("3a", item_3a),
        check("3b", item_3b),
        check("3c", item_3c),
        check("3d", item_3d),
        check("3e", item_3e),
        check("4", item_4),
        check("5", item_5),
        check("6", item_6),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let expected = EXPECTED_FAILURES.contains(&o.id);
        let tag = match (o.pass, expected) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag} {}: {}", o.id, o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} passed, {unexpected} unexpected failures", outcomes.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
