use num_complex::Complex64;
use proptest::prelude::*;

use wbshift::operator_engine::{
    apply_dual_shift_power, apply_polynomial, apply_shift_power, LogPolynomial, LpExponent, SparseVector,
};
use wbshift::logmag::LogMagnitude;
use wbshift::weights::{Family, TailRule, WeightSequence};

fn family(i: usize) -> WeightSequence {
    let fam: Family = match i {
        0 => "constant(1)".parse().unwrap(),
        1 => "beauzamy(2,1)".parse().unwrap(),
        2 => "beauzamy(1,2)".parse().unwrap(),
        3 => "supexp(1)".parse().unwrap(),
        4 => "polydecay(1,2,0.5,2)".parse().unwrap(),
        _ => Family::Table {
            start: -3,
            entries: [0.5, 1.5, -2.0, 0.75, 3.0, 1.25, -0.4]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
            left_tail: Some(TailRule::RepeatLast),
            right_tail: Some(TailRule::Constant(0.9)),
        },
    };
    WeightSequence::new(fam).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn vector() -> impl Strategy<Value = SparseVector> {
    prop::collection::vec((-30i64..=30, -1.0f64..1.0, -1.0f64..1.0), 1..6)
        .prop_map(|v| SparseVector::from_complex(v.into_iter().map(|(n, re, im)| (n, Complex64::new(re, im)))))
}

proptest! {
    #[test]
    fn range_products_add(f in 0usize..6, a in -60i64..60, len1 in 0i64..40, len2 in 1i64..40) {
        let ws = family(f);
        let b = a + len1;
        let c = b + len2;
        let whole = ws.w_tilde_log(a, c).unwrap().value();
        let split = ws.w_tilde_log(a, b).unwrap().value() + ws.w_tilde_log(b + 1, c).unwrap().value();
        prop_assert!(close(whole, split), "{whole} vs {split}");
    }

    #[test]
    fn alpha_differences_are_range_products(f in 0usize..6, a in -60i64..60, len in 1i64..60) {
        let ws = family(f);
        let b = a + len;
        let lhs = ws.alpha_log(a).unwrap().value() - ws.alpha_log(b).unwrap().value();
        let rhs = ws.w_tilde_log(a + 1, b).unwrap().value();
        prop_assert!(close(lhs, rhs), "{lhs} vs {rhs}");
    }

    #[test]
    fn shift_powers_compose(f in 0usize..6, v in vector(), s in 0u64..12, t in 0u64..12) {
        let ws = family(f);
        let two_steps = apply_shift_power(&ws, &apply_shift_power(&ws, &v, s).unwrap(), t).unwrap();
        let one_step = apply_shift_power(&ws, &v, s + t).unwrap();
        prop_assert!(two_steps.relative_discrepancy(&one_step) <= 1e-12);
        let two_steps = apply_dual_shift_power(&ws, &apply_dual_shift_power(&ws, &v, s).unwrap(), t).unwrap();
        let one_step = apply_dual_shift_power(&ws, &v, s + t).unwrap();
        prop_assert!(two_steps.relative_discrepancy(&one_step) <= 1e-12);
    }

    #[test]
    fn dual_shift_undoes_shift_up_to_weights(f in 0usize..6, n in -30i64..30, d in 0u64..10) {
        let ws = family(f);
        let e = SparseVector::basis(n);
        let back = apply_dual_shift_power(&ws, &apply_shift_power(&ws, &e, d).unwrap(), d).unwrap();
        let log = ws.w_tilde_log_or_empty(n - d as i64 + 1, n).unwrap().value();
        prop_assert!(close(back.get(n).unwrap().log_mag, 2.0 * log));
    }

    #[test]
    fn polynomials_act_linearly(f in 0usize..6, x in vector(), y in vector(),
                                coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5)) {
        let ws = family(f);
        let r = LogPolynomial::from_complex(&coeffs.iter().map(|&(a, b)| Complex64::new(a, b)).collect::<Vec<_>>());
        let lhs = apply_polynomial(&ws, &r, &x.add(&y)).unwrap();
        let rhs = apply_polynomial(&ws, &r, &x).unwrap().add(&apply_polynomial(&ws, &r, &y).unwrap());
        let scale = lhs.lp_norm_log(LpExponent::Infinity).value()
            .max(rhs.lp_norm_log(LpExponent::Infinity).value());
        for n in lhs.support().chain(rhs.support()) {
            let a = lhs.get(n).map_or(Complex64::new(0.0, 0.0), |a| a.to_complex());
            let b = rhs.get(n).map_or(Complex64::new(0.0, 0.0), |a| a.to_complex());
            prop_assert!((a - b).norm() <= 1e-12 * scale.exp().max(1e-300) * 8.0);
        }
    }

    #[test]
    fn norms_are_homogeneous(v in vector(), re in -3.0f64..3.0, im in -3.0f64..3.0, p in 1.0f64..6.0) {
        prop_assume!(re.hypot(im) > 1e-6);
        let lambda = Complex64::new(re, im);
        for p in [LpExponent::Finite(p), LpExponent::Infinity] {
            let base = v.lp_norm_log(p).value();
            let scaled = v.scaled(lambda / lambda.norm(), LogMagnitude(lambda.norm().ln())).lp_norm_log(p).value();
            prop_assert!(close(scaled, base + lambda.norm().ln()), "{scaled} vs {base}");
        }
    }
}
