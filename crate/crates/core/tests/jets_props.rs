use std::collections::BTreeMap;

use proptest::prelude::*;
use threadsplit_core::exprlang::{eval_expr, eval_f64, parse_expr};
use threadsplit_core::jets::{multi_indices, seed_point, Jet, MultiIndex, MAX_ORDER};

/// A monomial `c * x0^e0 * x1^e1 * x2^e2 * x3^e3`.
type Term = (f64, [u8; 4]);

fn term() -> impl Strategy<Value = Term> {
    (-3.0..3.0f64, prop::array::uniform4(0u8..4))
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.5..1.5f64)
}

fn falling(e: u8, k: u8) -> f64 {
    (0..k).map(|j| (e as f64) - j as f64).product()
}

/// Exact partial of a polynomial from the power rule, term by term.
fn poly_partial(terms: &[Term], alpha: MultiIndex, x: [f64; 4]) -> f64 {
    terms
        .iter()
        .map(|(c, e)| {
            (0..4).fold(*c, |acc, k| {
                let (ek, ak) = (e[k], alpha.0[k]);
                if ak > ek {
                    0.0
                } else {
                    acc * falling(ek, ak) * x[k].powi((ek - ak) as i32)
                }
            })
        })
        .sum()
}

fn poly_jet(terms: &[Term], x: [f64; 4]) -> Jet {
    let env = seed_point(x, MAX_ORDER).unwrap();
    terms
        .iter()
        .map(|(c, e)| {
            (0..4).fold(env.constant(*c), |acc, k| {
                (0..e[k]).fold(acc, |m, _| m * env.coords[k])
            })
        })
        .sum()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

proptest! {
    #[test]
    fn polynomial_partials_match_power_rule(terms in prop::collection::vec(term(), 1..6), x in point()) {
        let j = poly_jet(&terms, x);
        for alpha in multi_indices(MAX_ORDER) {
            let want = poly_partial(&terms, alpha, x);
            let got = j.partial(alpha).unwrap();
            prop_assert!(close(got, want, 1e-12), "{alpha:?}: {got} vs {want}");
        }
    }

    #[test]
    fn first_partials_match_central_differences(x in prop::array::uniform4(0.2..1.5f64)) {
        let e = parse_expr("sin(x0*x1) + exp(x2)*sqrt(x3 + 2) - ln(1 + x0^2)/cosh(x1 - x3)").unwrap();
        let params = BTreeMap::new();
        let j = eval_expr(&e, &seed_point(x, 1).unwrap(), &params).unwrap();
        let h = 1e-5;
        for k in 0..4 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let fd = (eval_f64(&e, xp, &params).unwrap() - eval_f64(&e, xm, &params).unwrap()) / (2.0 * h);
            let got = j.partial(MultiIndex::unit(k)).unwrap();
            prop_assert!(close(got, fd, 1e-7), "d{k}: {got} vs {fd}");
        }
    }

    #[test]
    fn product_is_associative(a in prop::collection::vec(term(), 1..4), b in prop::collection::vec(term(), 1..4),
                              c in prop::collection::vec(term(), 1..4), x in point()) {
        let (a, b, c) = (poly_jet(&a, x), poly_jet(&b, x), poly_jet(&c, x));
        let l = (a * b) * c;
        let r = a * (b * c);
        let scale = l.coefficients().fold(1f64, |m, (_, v)| m.max(v.abs()));
        for ((_, u), (_, v)) in l.coefficients().zip(r.coefficients()) {
            prop_assert!((u - v).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn order_zero_evaluation_is_plain_arithmetic(x in prop::array::uniform4(0.1..2.0f64),
                                                 src in prop::sample::select(vec![
        "x0*x1 - x2/x3", "2^x0 + x1^3", "tan(x0/4) * tanh(x2)", "sqrt(x0)*ln(x3) + sinh(x1)",
        "exp(-x0^2) / (1 + cos(x3))", "-x1^2 + x2^-1",
    ])) {
        let e = parse_expr(src).unwrap();
        let params = BTreeMap::new();
        let j = eval_expr(&e, &seed_point(x, 0).unwrap(), &params).unwrap();
        prop_assert_eq!(j.order(), 0);
        let want = eval_f64(&e, x, &params).unwrap();
        prop_assert!(close(j.value(), want, 1e-15), "{}: {} vs {}", src, j.value(), want);
    }
}

#[test]
fn order_drops_under_differentiation() {
    let env = seed_point([1.0, 2.0, 3.0, 4.0], 3).unwrap();
    let f = env.coords[0] * env.coords[1];
    assert_eq!(f.d(0).order(), 2);
    assert_eq!((f.d(0) * f).order(), 2);
    assert_eq!(f.d(0).d(1).value(), 1.0);
}
