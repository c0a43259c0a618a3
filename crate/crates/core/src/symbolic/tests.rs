use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn y(i: usize) -> Expression {
    Expression::state(i)
}

fn c(v: f64) -> Expression {
    Expression::constant(v)
}

fn ev(e: &Expression, t: f64, ys: &[f64]) -> f64 {
    let params = |_: &str| None;
    let helpers = |_: &str| None;
    let mut ctx = EvalContext { t, y: ys, params: &params, helpers: &helpers, past: None };
    eval_expression(e, &mut ctx).unwrap()
}

fn ev_p(e: &Expression, t: f64, ys: &[f64], ps: &[(&str, f64)]) -> f64 {
    let params = |name: &str| ps.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);
    let helpers = |_: &str| None;
    let mut ctx = EvalContext { t, y: ys, params: &params, helpers: &helpers, past: None };
    eval_expression(e, &mut ctx).unwrap()
}

#[test]
fn structural_equality_is_order_insensitive() {
    let a = &y(0) + &y(1);
    let b = &y(1) + &y(0);
    assert_eq!(a, b);
    let p = &y(0) * &(&y(1) * &y(2));
    let q = &(&y(2) * &y(0)) * &y(1);
    assert_eq!(p, q);
    assert_ne!(&y(0) + &y(1), &y(0) + &y(2));
}

#[test]
fn sums_and_products_flatten() {
    let e = &(&y(0) + &y(1)) + &(&y(2) + &y(3));
    match e.kind() {
        ExprKind::Sum(cs) => assert_eq!(cs.len(), 4),
        _ => panic!("expected a flat sum"),
    }
}

#[test]
fn differentiate_absent_variable_is_zero() {
    // d(-y1 - y2)/dy0 = 0
    let e = -&y(1) - y(2);
    let d = differentiate(&e, &y(0)).unwrap();
    assert!(d.is_constant(0.0));
}

#[test]
fn differentiate_linear_term() {
    // d(y0 + a*y1)/dy1 = a
    let a = Expression::parameter("a");
    let e = &y(0) + &(&a * &y(1));
    let d = differentiate(&e, &y(1)).unwrap();
    assert_eq!(d, a);
}

#[test]
fn differentiate_chain_rule_matches_finite_differences() {
    // d sin(y1 - y0)/dy1 = cos(y1 - y0)
    let e = (&y(1) - &y(0)).sin();
    let d = differentiate(&e, &y(1)).unwrap();
    assert_eq!(d, (&y(1) - &y(0)).cos());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let ys: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let mut up = ys.clone();
        up[1] += h;
        let mut dn = ys.clone();
        dn[1] -= h;
        let fd = (ev(&e, 0.0, &up) - ev(&e, 0.0, &dn)) / (2.0 * h);
        let dv = ev(&d, 0.0, &ys);
        assert!((dv - fd).abs() <= 1e-6 * (1.0 + dv.abs()));
    }
}

#[test]
fn differentiate_wrt_time_is_rejected() {
    let e = Expression::time().sin();
    assert_eq!(differentiate(&e, &Expression::time()), Err(SymError::DifferentiateWrtTime));
}

#[test]
fn differentiate_wrt_past_state_matches_site() {
    let tau = 1.5;
    let at = Expression::time() - c(tau);
    let site = Expression::past(0, at.clone());
    let e = &c(2.0) * &site.sin();
    let d = differentiate(&e, &site).unwrap();
    assert_eq!(d, &c(2.0) * &site.cos());
    // A different site is an independent variable.
    let other = Expression::past(0, Expression::time() - c(2.5));
    assert!(differentiate(&e, &other).unwrap().is_constant(0.0));
    // The current state likewise.
    assert!(differentiate(&e, &y(0)).unwrap().is_constant(0.0));
}

#[test]
fn differentiate_abs_uses_sign_with_sign_zero_zero() {
    let e = y(0).abs();
    let d = differentiate(&e, &y(0)).unwrap();
    assert_eq!(d, Expression::call(Func::Signum, y(0)));
    assert_eq!(ev(&d, 0.0, &[2.5]), 1.0);
    assert_eq!(ev(&d, 0.0, &[-2.5]), -1.0);
    assert_eq!(ev(&d, 0.0, &[0.0]), 0.0);
}

#[test]
fn differentiate_elementary_functions_at_safe_points() {
    let x = y(0);
    let cases: Vec<(Expression, Box<dyn Fn(f64) -> f64>)> = vec![
        (x.log(), Box::new(|v: f64| 1.0 / v)),
        (x.sqrt(), Box::new(|v: f64| 0.5 / v.sqrt())),
        (x.tan(), Box::new(|v: f64| 1.0 / (v.cos() * v.cos()))),
        (x.exp(), Box::new(|v: f64| v.exp())),
        (x.sinh(), Box::new(|v: f64| v.cosh())),
        (x.cosh(), Box::new(|v: f64| v.sinh())),
        (x.tanh(), Box::new(|v: f64| 1.0 / (v.cosh() * v.cosh()))),
    ];
    for (e, expected) in cases {
        let d = differentiate(&e, &x).unwrap();
        for v in [0.3, 0.7, 1.2] {
            let got = ev(&d, 0.0, &[v]);
            let want = expected(v);
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "derivative of {e} at {v}: got {got}, want {want}"
            );
        }
    }
}

#[test]
fn differentiate_power_with_variable_exponent() {
    // d(x^x)/dx = x^x (log x + 1)
    let x = y(0);
    let e = x.pow(x.clone());
    let d = differentiate(&e, &x).unwrap();
    for v in [0.5, 1.3, 2.0] {
        let want = v.powf(v) * (v.ln() + 1.0);
        let got = ev(&d, 0.0, &[v]);
        assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize, n: usize) -> Expression {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => c(rng.gen_range(-1.5..1.5)),
            1 => Expression::time(),
            _ => y(rng.gen_range(0..n)),
        };
    }
    match rng.gen_range(0..5) {
        0 => Expression::sum(
            (0..rng.gen_range(2..4)).map(|_| random_expr(rng, depth - 1, n)).collect(),
        ),
        1 => Expression::product(
            (0..rng.gen_range(2..4)).map(|_| random_expr(rng, depth - 1, n)).collect(),
        ),
        2 => random_expr(rng, depth - 1, n).pow(c(rng.gen_range(2..4) as f64)),
        3 => {
            let funcs = [Func::Sin, Func::Cos, Func::Tanh];
            Expression::call(funcs[rng.gen_range(0..3)], random_expr(rng, depth - 1, n))
        }
        _ => random_expr(rng, depth - 1, n) - random_expr(rng, depth - 1, n),
    }
}

#[test]
fn differentiate_agrees_with_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 3;
    for _ in 0..100 {
        let e = random_expr(&mut rng, 4, n);
        let j = rng.gen_range(0..n);
        let d = differentiate(&e, &y(j)).unwrap();
        let t = rng.gen_range(-1.0..1.0);
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let mut up = ys.clone();
        up[j] += h;
        let mut dn = ys.clone();
        dn[j] -= h;
        let fd = (ev(&e, t, &up) - ev(&e, t, &dn)) / (2.0 * h);
        let dv = ev(&d, t, &ys);
        if !fd.is_finite() || !dv.is_finite() {
            continue;
        }
        assert!(
            (dv - fd).abs() <= 1e-5 * (1.0 + dv.abs().max(fd.abs())),
            "FD mismatch for {e}: symbolic {dv}, fd {fd}"
        );
    }
}

#[test]
fn differentiate_commutes_with_simplify() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 3;
    for _ in 0..100 {
        let e = random_expr(&mut rng, 4, n);
        let j = rng.gen_range(0..n);
        let a = differentiate(&simplify_basic(&e), &y(j)).unwrap();
        let b = simplify_basic(&differentiate(&e, &y(j)).unwrap());
        let t = rng.gen_range(-1.0..1.0);
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let va = ev(&a, t, &ys);
        let vb = ev(&b, t, &ys);
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        assert!((va - vb).abs() <= 1e-12 * (1.0 + va.abs()), "{e}: {va} vs {vb}");
    }
}

#[test]
fn substitute_examples() {
    // y2 -> y0
    let m: HashMap<_, _> = [(y(2), y(0))].into();
    assert_eq!(substitute(&y(2), &m), y(0));

    // a -> 0.2 inside a*y1
    let a = Expression::parameter("a");
    let m: HashMap<_, _> = [(a.clone(), c(0.2))].into();
    assert_eq!(substitute(&(&a * &y(1)), &m), &c(0.2) * &y(1));

    // sin(y2 - y3) with {y2->y0, y3->y1}
    let e = (&y(2) - &y(3)).sin();
    let m: HashMap<_, _> = [(y(2), y(0)), (y(3), y(1))].into();
    let s = substitute(&e, &m);
    let expected = (&y(0) - &y(1)).sin();
    assert_eq!(s, expected);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let ys: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert_eq!(ev(&s, 0.0, &ys), ev(&expected, 0.0, &ys));
    }
}

#[test]
fn simplify_drops_zero_summands_and_unit_factors() {
    assert_eq!(simplify_basic(&(&c(0.0) + &y(0))), y(0));
    assert_eq!(simplify_basic(&(&c(1.0) * &(&y(0) - &c(0.0)))), y(0));
    assert_eq!(simplify_basic(&(&y(0) * &c(0.0))), c(0.0));
    assert_eq!(simplify_basic(&y(0).powf(1.0)), y(0));
    assert_eq!(simplify_basic(&y(0).powf(0.0)), c(1.0));
}

#[test]
fn simplify_folds_constants() {
    // 0.2 + 0.3*(0.1 - 5.7) = -1.48
    let e = &c(0.2) + &(&c(0.3) * &(&c(0.1) - &c(5.7)));
    let s = simplify_basic(&e);
    match s.kind() {
        ExprKind::Constant(v) => assert!((v - (-1.48)).abs() < 1e-12),
        _ => panic!("expected a constant, got {s}"),
    }
}

#[test]
fn simplify_preserves_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 3;
    for _ in 0..100 {
        let e = random_expr(&mut rng, 4, n);
        let s = simplify_basic(&e);
        let t = rng.gen_range(-1.0..1.0);
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let before = ev(&e, t, &ys);
        let after = ev(&s, t, &ys);
        if !before.is_finite() {
            continue;
        }
        assert!(
            (before - after).abs() <= 1e-12 * (1.0 + before.abs()),
            "{e}: {before} vs {after}"
        );
    }
}

#[test]
fn jacobian_of_roessler() {
    let (a, b, cc) = (0.2, 0.2, 5.7);
    let f = vec![
        -&y(1) - y(2),
        &y(0) + &(&c(a) * &y(1)),
        &c(b) + &(&y(2) * &(&y(0) - &c(cc))),
    ];
    let jac = jacobian(&f, 3).unwrap();
    assert!(jac[0][0].is_constant(0.0));
    assert!(jac[0][1].is_constant(-1.0));
    assert!(jac[0][2].is_constant(-1.0));
    // Row 2 at y = (0.1, 0.2, 0.3): (y2, 0, y0 - c) = (0.3, 0, -5.6)
    let ys = [0.1, 0.2, 0.3];
    let row2: Vec<f64> = (0..3).map(|j| ev(&jac[2][j], 0.0, &ys)).collect();
    assert!((row2[0] - 0.3).abs() < 1e-12);
    assert_eq!(row2[1], 0.0);
    assert!((row2[2] - (-5.6)).abs() < 1e-12);
    // Cross-check against finite differences.
    let h = 1e-6;
    for (k, fk) in f.iter().enumerate() {
        for j in 0..3 {
            let mut up = ys;
            up[j] += h;
            let mut dn = ys;
            dn[j] -= h;
            let fd = (ev(fk, 0.0, &up) - ev(fk, 0.0, &dn)) / (2.0 * h);
            let sym = ev(&jac[k][j], 0.0, &ys);
            assert!((sym - fd).abs() < 1e-6, "J[{k}][{j}]");
        }
    }
}

#[test]
fn jacobian_of_identity_map() {
    let f = vec![y(0), y(1), y(2)];
    let jac = jacobian(&f, 3).unwrap();
    for (k, row) in jac.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            assert!(e.is_constant(if k == j { 1.0 } else { 0.0 }));
        }
    }
}

#[test]
fn cse_hoists_single_shared_node() {
    let shared = &y(0) + &y(1);
    let exprs = vec![shared.clone(), shared.sin()];
    let (defs, rewritten) = eliminate_common_subexpressions(&exprs);
    assert_eq!(defs.len(), 1);
    assert_eq!(defs[0].value, shared);
    let h = Expression::helper_ref(&defs[0].name);
    assert_eq!(rewritten[0], h);
    assert_eq!(rewritten[1], h.sin());
}

#[test]
fn cse_leaves_unshared_inputs_alone() {
    let exprs = vec![y(0), y(1)];
    let (defs, rewritten) = eliminate_common_subexpressions(&exprs);
    assert!(defs.is_empty());
    assert_eq!(rewritten, exprs);
}

#[test]
fn cse_hoists_kuramoto_mean_field_sums_once() {
    // n = 4 complete graph in mean-field form:
    //   f_i = w_i + (c/(n-1)) * (cos(y_i)*sum_j sin(y_j) - sin(y_i)*sum_j cos(y_j))
    let n = 4;
    let sum_sin = Expression::sum((0..n).map(|j| y(j).sin()).collect());
    let sum_cos = Expression::sum((0..n).map(|j| y(j).cos()).collect());
    let coupling = 3.0 / (n as f64 - 1.0);
    let exprs: Vec<Expression> = (0..n)
        .map(|i| {
            let mean_field = &(&y(i).cos() * &sum_sin) - &(&y(i).sin() * &sum_cos);
            &c(0.1 * i as f64) + &(&c(coupling) * &mean_field)
        })
        .collect();
    let (defs, rewritten) = eliminate_common_subexpressions(&exprs);
    assert_eq!(defs.len(), 2, "exactly the two global sums are hoisted");
    let values: Vec<&Expression> = defs.iter().map(|d| &d.value).collect();
    assert!(values.contains(&&sum_sin));
    assert!(values.contains(&&sum_cos));
    // Expansion reproduces the inputs exactly.
    for (orig, rw) in exprs.iter().zip(&rewritten) {
        assert_eq!(&expand_helpers(rw, &defs).unwrap(), orig);
    }
}

fn hoistable_nodes(e: &Expression, out: &mut Vec<Expression>) {
    let compound = |x: &Expression| {
        !matches!(
            x.kind(),
            ExprKind::Constant(_)
                | ExprKind::Time
                | ExprKind::State(_)
                | ExprKind::Parameter(_)
                | ExprKind::HelperRef(_)
        )
    };
    let is_hoistable = match e.kind() {
        ExprKind::Sum(_) | ExprKind::Product(_) | ExprKind::Power { .. } => true,
        ExprKind::PastState { .. } => true,
        ExprKind::Call { arg, .. } => compound(arg),
        _ => false,
    };
    if is_hoistable {
        out.push(e.clone());
    }
    match e.kind() {
        ExprKind::Sum(cs) | ExprKind::Product(cs) => {
            for child in cs {
                hoistable_nodes(child, out);
            }
        }
        ExprKind::Power { base, exponent } => {
            hoistable_nodes(base, out);
            hoistable_nodes(exponent, out);
        }
        ExprKind::Call { arg, .. } => hoistable_nodes(arg, out),
        ExprKind::PastState { at, .. } => hoistable_nodes(at, out),
        _ => {}
    }
}

#[test]
fn cse_output_has_no_duplicated_compound_subexpression() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let shared = random_expr(&mut rng, 3, 3);
        let exprs = vec![
            &shared + &random_expr(&mut rng, 2, 3),
            shared.sin(),
            &random_expr(&mut rng, 2, 3) * &shared,
        ];
        let (defs, rewritten) = eliminate_common_subexpressions(&exprs);
        let mut nodes = Vec::new();
        for d in &defs {
            hoistable_nodes(&d.value, &mut nodes);
        }
        for r in &rewritten {
            hoistable_nodes(r, &mut nodes);
        }
        let mut seen = std::collections::HashSet::new();
        for node in &nodes {
            assert!(seen.insert(node.clone()), "duplicated subexpression {node}");
        }
        // Round trip.
        for (orig, rw) in exprs.iter().zip(&rewritten) {
            assert_eq!(&expand_helpers(rw, &defs).unwrap(), orig);
        }
    }
}

#[test]
fn cse_hoists_duplicate_delay_access() {
    let site = Expression::past(0, Expression::time() - c(40.0));
    let exprs = vec![site.sin(), &c(2.0) * &site];
    let (defs, rewritten) = eliminate_common_subexpressions(&exprs);
    assert_eq!(defs.len(), 1);
    assert_eq!(defs[0].value, site);
    for (orig, rw) in exprs.iter().zip(&rewritten) {
        assert_eq!(&expand_helpers(rw, &defs).unwrap(), orig);
    }
}

#[test]
fn parse_basic_expressions() {
    let e = parse_expression("-y(1) - y(2)", 1, 0).unwrap();
    assert_eq!(e, -&y(1) - y(2));

    let e = parse_expression("y(0) + a*y(1)", 1, 0).unwrap();
    assert_eq!(e, &y(0) + &(&Expression::parameter("a") * &y(1)));

    let e = parse_expression("b + y(2)*(y(0) - c)", 1, 0).unwrap();
    let b = Expression::parameter("b");
    let cc = Expression::parameter("c");
    assert_eq!(e, &b + &(&y(2) * &(&y(0) - &cc)));
}

#[test]
fn parse_power_is_right_associative_and_tight() {
    let e = parse_expression("2^3^2", 1, 0).unwrap();
    assert_eq!(ev(&e, 0.0, &[]), 512.0);
    let e = parse_expression("-2^2", 1, 0).unwrap();
    assert_eq!(ev(&e, 0.0, &[]), -4.0);
    let e = parse_expression("2^-2", 1, 0).unwrap();
    assert_eq!(ev(&e, 0.0, &[]), 0.25);
    let e = parse_expression("6/2/3", 1, 0).unwrap();
    assert_eq!(ev(&e, 0.0, &[]), 1.0);
}

#[test]
fn parse_delayed_state() {
    let e = parse_expression("y(0, t - tau)", 1, 0).unwrap();
    let expected = Expression::past(0, Expression::time() - Expression::parameter("tau"));
    assert_eq!(e, expected);

    // State-dependent delays parse, nested delays are rejected.
    assert!(parse_expression("y(0, t - (1 + 0.1*sin(t)))", 1, 0).is_ok());
    assert!(parse_expression("y(0, t - y(1, t - 1))", 1, 0).is_err());
}

#[test]
fn parse_errors_carry_location() {
    let err = parse_expression("y(0) + $", 3, 10).unwrap_err();
    assert_eq!(err.line, 3);
    assert_eq!(err.column, 17);

    let err = parse_expression("foo(1)", 1, 0).unwrap_err();
    assert!(err.message.contains("unknown function"));
}

#[test]
fn display_parses_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let e = random_expr(&mut rng, 4, 3);
        let text = e.to_string();
        let parsed = parse_expression(&text, 1, 0).unwrap();
        let t = rng.gen_range(-1.0..1.0);
        let ys: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = ev(&e, t, &ys);
        let b = ev(&parsed, t, &ys);
        if a.is_finite() {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{text}: {a} vs {b}");
        }
    }
    // Delay syntax round trip.
    let site = Expression::past(1, Expression::time() - c(40.0));
    let text = site.to_string();
    assert_eq!(parse_expression(&text, 1, 0).unwrap(), site);
}

#[test]
fn expand_helpers_respects_definition_order() {
    let defs = vec![
        HelperDefinition::new("u", &y(0) + &y(1)),
        HelperDefinition::new("v", &Expression::helper_ref("u") * &c(2.0)),
    ];
    let e = Expression::helper_ref("v").sin();
    let expanded = expand_helpers(&e, &defs).unwrap();
    assert_eq!(expanded, (&(&y(0) + &y(1)) * &c(2.0)).sin());
    assert!(matches!(
        expand_helpers(&Expression::helper_ref("w"), &defs),
        Err(SpecError::UnknownHelper(_))
    ));
}

#[test]
fn remap_states_renumbers_delayed_accesses() {
    let e = &y(2) + &Expression::past(3, Expression::time() - c(1.0));
    let m = remap_states(&e, &|i| i - 2);
    assert_eq!(m, &y(0) + &Expression::past(1, Expression::time() - c(1.0)));
}

#[test]
fn constant_delay_recognition() {
    let at = Expression::time() - c(40.0);
    assert_eq!(constant_delay_of(&at), Some(40.0));
    assert_eq!(constant_delay_of(&Expression::time()), Some(0.0));
    let state_dep = Expression::time() - (&c(1.0) + &(&c(0.1) * &Expression::time().sin()));
    assert_eq!(constant_delay_of(&state_dep), None);
}

#[test]
fn past_sites_deduplicate() {
    let s1 = Expression::past(0, Expression::time() - c(1.0));
    let s2 = Expression::past(1, Expression::time() - c(1.0));
    let exprs = vec![&s1.sin() + &s2, s1.clone()];
    let sites = past_sites(&exprs);
    assert_eq!(sites.len(), 2);
    assert_eq!(sites[0].0, 0);
    assert_eq!(sites[1].0, 1);
}
