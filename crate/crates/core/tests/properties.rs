use nalgebra::DMatrix;
use proptest::prelude::*;

use leviflat_core::excalc::{exterior_derivative, lie_bracket, DifferentialForm};
use leviflat_core::flows::{integrate_flow, DEFAULT_STEP};
use leviflat_core::foliation_dgla::{delta, dgla_bracket, form_diff_residual, form_residual, project_z, z_membership_residual};
use leviflat_core::leafcx::{conjugate_by_s, conjugating_s, s_from_structures, structure_from_s};
use leviflat_core::report::{run, RunConfig};
use leviflat_core::residual::{rel, Residual};
use leviflat_core::sampling::{point, random_form, random_function, random_vector_field, stream};
use leviflat_core::scenarios::builtin;
use leviflat_core::symfield::{Expr, ScalarField};

fn scenario_name(k: usize) -> &'static str {
    ["t3_flat", "t3_twisted", "t3_twisted_shifted", "t5_product"][k % 4]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relative_residual_is_symmetric_and_bounded(l in -1e6f64..1e6, r in -1e6f64..1e6) {
        prop_assert_eq!(rel(l, r), rel(r, l));
        prop_assert!(rel(l, r) >= 0.0 && rel(l, r) < 2.0);
        prop_assert_eq!(rel(l, l), 0.0);
    }

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), k in 0usize..3, sc in 0usize..4) {
        let s = builtin(scenario_name(sc)).unwrap();
        let mut r = stream(seed, "prop", "d2", 0);
        let w = random_form(&mut r, s.chart(), k);
        let p = point(&mut r, s.chart().dim());
        let dd = exterior_derivative(&exterior_derivative(&w));
        prop_assert!(form_residual(&dd, &[p]).unwrap().max_rel <= 1e-10);
    }

    #[test]
    fn symbolic_derivative_matches_central_difference(seed in any::<u64>(), i in 0usize..3) {
        let mut r = stream(seed, "prop", "diff", 0);
        let chart = builtin("t3_flat").unwrap().chart().clone();
        let f = random_function(&mut r, &chart);
        let p = point(&mut r, 3);
        let h = 1e-5;
        let (mut a, mut b) = (p.clone(), p.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (f.eval(&a).unwrap() - f.eval(&b).unwrap()) / (2.0 * h);
        prop_assert!(rel(f.diff(i).eval(&p).unwrap(), fd) <= 1e-6);
    }

    #[test]
    fn printed_expressions_parse_back(seed in any::<u64>()) {
        let mut r = stream(seed, "prop", "print", 0);
        let chart = builtin("t3_flat").unwrap().chart().clone();
        let f = random_function(&mut r, &chart).diff(2);
        let text = f.with_names(chart.names()).to_string();
        let g = ScalarField::parse(&chart, &text).unwrap();
        let p = point(&mut r, 3);
        prop_assert!(rel(f.eval(&p).unwrap(), g.evaluate(&p).unwrap()) <= 1e-12, "{}", text);
    }

    #[test]
    fn bracket_is_graded_antisymmetric(seed in any::<u64>(), sc in 0usize..4, ka in 0usize..3, kb in 0usize..2) {
        let s = builtin(scenario_name(sc)).unwrap();
        let mut r = stream(seed, "prop", "antisym", 0);
        let a = random_form(&mut r, s.chart(), ka);
        let b = random_form(&mut r, s.chart(), kb);
        let p = point(&mut r, s.chart().dim());
        let c = s.couple();
        let l = dgla_bracket(c, &a, &b).unwrap();
        let sign = if (ka * kb) % 2 == 0 { -1.0 } else { 1.0 };
        let rr = dgla_bracket(c, &b, &a).unwrap().scale_const(sign);
        prop_assert!(form_diff_residual(&l, &rr, &[p]).unwrap().max_rel <= 1e-9);
    }

    #[test]
    fn delta_and_bracket_preserve_z(seed in any::<u64>(), sc in 0usize..4) {
        let s = builtin(scenario_name(sc)).unwrap();
        let c = s.couple();
        let mut r = stream(seed, "prop", "z", 0);
        let a = project_z(c, &random_form(&mut r, s.chart(), 1)).unwrap();
        let b = project_z(c, &random_form(&mut r, s.chart(), 1)).unwrap();
        let p = vec![point(&mut r, s.chart().dim())];
        prop_assert!(z_membership_residual(c, &delta(c, &a).unwrap(), &p).unwrap().max_abs <= 1e-10);
        prop_assert!(z_membership_residual(c, &dgla_bracket(c, &a, &b).unwrap(), &p).unwrap().max_abs <= 1e-10);
    }

    #[test]
    fn lie_bracket_is_antisymmetric(seed in any::<u64>()) {
        let s = builtin("t5_product").unwrap();
        let mut r = stream(seed, "prop", "lie", 0);
        let v = random_vector_field(&mut r, s.chart());
        let w = random_vector_field(&mut r, s.chart());
        let p = point(&mut r, 5);
        let a = lie_bracket(&v, &w).unwrap().evaluate(&p).unwrap();
        let b = lie_bracket(&w, &v).unwrap().evaluate(&p).unwrap();
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        prop_assert!(Residual::of(&a, &neg).max_rel <= 1e-12);
    }

    #[test]
    fn flow_group_law(seed in any::<u64>(), s in -0.1f64..0.1, t in -0.1f64..0.1) {
        let chart = builtin("t3_flat").unwrap().chart().clone();
        let mut r = stream(seed, "prop", "flow", 0);
        let y = random_vector_field(&mut r, &chart);
        let p = point(&mut r, 3);
        let (direct, _) = integrate_flow(&y, s + t, &p, DEFAULT_STEP).unwrap();
        let (mid, _) = integrate_flow(&y, t, &p, DEFAULT_STEP).unwrap();
        let (composed, _) = integrate_flow(&y, s, &mid, DEFAULT_STEP).unwrap();
        prop_assert!(Residual::of(&direct, &composed).max_rel <= 1e-7);
    }

    #[test]
    fn s_parametrisation_round_trips(entries in prop::collection::vec(-0.25f64..0.25, 16)) {
        let j = DMatrix::from_row_slice(4, 4, &[0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0]);
        let r = DMatrix::<f64>::identity(4, 4) + DMatrix::from_row_slice(4, 4, &entries);
        let Some(rinv) = r.clone().try_inverse() else { return Ok(()) };
        let jt = &r * &j * rinv;
        let Some(s) = s_from_structures(&j, &jt) else { return Ok(()) };
        prop_assert!(Residual::of_zero((&s * &j + &j * &s).as_slice()).max_abs <= 1e-9);
        let back = structure_from_s(&j, &s).unwrap();
        prop_assert!(Residual::of(back.as_slice(), jt.as_slice()).max_rel <= 1e-9);
        let cs = conjugating_s(&j, &jt).unwrap();
        let conj = conjugate_by_s(&j, &cs).unwrap();
        prop_assert!(Residual::of(conj.as_slice(), jt.as_slice()).max_rel <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn reports_are_reproducible(seed in any::<u64>()) {
        let sc = builtin("t3_twisted").unwrap();
        let mut cfg = RunConfig::new("t3_twisted");
        cfg.suite = "dgla,hform".into();
        cfg.points = 3;
        cfg.seed = seed;
        let a = run(&sc, &cfg).unwrap().to_json();
        cfg.jobs = Some(1);
        let b = run(&sc, &cfg).unwrap().to_json();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn constant_forms_are_closed() {
    let s = builtin("t3_flat").unwrap();
    let w = DifferentialForm::one_form(s.chart(), vec![Expr::constant(0.3), Expr::constant(-2.0), Expr::zero()]).unwrap();
    assert!(exterior_derivative(&w).is_structurally_zero());
}
