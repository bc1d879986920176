//! Hand-computed values checked against the engine.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;

use leviflat_core::excalc::{
    exterior_derivative, interior_product, lie_bracket, lie_derivative_form, wedge, DifferentialForm, VectorField,
};
use leviflat_core::flows::{gauge_derivative_fd, pullback_form_numeric, richardson, s_gauge_fd};
use leviflat_core::foliation_dgla::{
    delta, dgla_bracket, form_diff_residual, frobenius_report, leafwise_d, mc_residual, z_membership_residual,
    DefiningCouple,
};
use leviflat_core::leafcx::{
    beth0, beth_conjugation_residual, change_couple_h_residual, conjugate_by_s, conjugating_s, dbar0, dbar0_at,
    deformed_bracket, h_structure, lie, proj01_scalar, s_from_structures, structure_from_s, t_apply, wedge01_at,
    Bracket, LeafPoint, ScalarForm1, XiCochain, XiForm1, DEFAULT_ORDER,
};
use leviflat_core::residual::Residual;
use leviflat_core::scenarios::builtin;
use leviflat_core::symfield::{Chart, Expr, ScalarField};

const EPS: f64 = 0.3;
const P: [f64; 3] = [0.7, 1.3, 2.1];

fn t3() -> Arc<Chart> {
    Chart::torus(&["x", "y", "t"])
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

fn x() -> Expr {
    Expr::var(0)
}

fn y() -> Expr {
    Expr::var(1)
}

fn t() -> Expr {
    Expr::var(2)
}

fn one_form(ch: &Arc<Chart>, a: [Expr; 3]) -> DifferentialForm {
    DifferentialForm::one_form(ch, a.to_vec()).unwrap()
}

fn twisted_couple(ch: &Arc<Chart>) -> DefiningCouple {
    let g = one_form(ch, [t().cos().scale(EPS), c(0.0), c(1.0)]);
    DefiningCouple::new(g, VectorField::coordinate(ch, 2)).unwrap()
}

fn flat_couple(ch: &Arc<Chart>) -> DefiningCouple {
    DefiningCouple::new(DifferentialForm::coordinate(ch, 2), VectorField::coordinate(ch, 2)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

fn close_vec(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(b) {
        close(*p, *q, tol);
    }
}

fn zero_vec(a: &[f64], tol: f64) {
    for p in a {
        close(*p, 0.0, tol);
    }
}

// ---------------------------------------------------------------- scalar fields

#[test]
fn scalar_field_values() {
    let ch = t3();
    let f = ScalarField::parse(&ch, "1/(2+cos(t))").unwrap();
    close(f.evaluate(&[0.0, 0.0, PI]).unwrap(), 1.0, 1e-14);
    let g = ScalarField::parse(&ch, "cos(t)").unwrap();
    close(g.differentiate(2).unwrap().differentiate(2).unwrap().evaluate(&[0.0, 0.0, 0.0]).unwrap(), -1.0, 1e-14);
    let h = ScalarField::parse(&ch, "sin(x)*cos(t)").unwrap();
    close(h.evaluate(&[FRAC_PI_2, 0.4, PI]).unwrap(), -1.0, 1e-14);
}

// ---------------------------------------------------------------- exterior calculus

#[test]
fn exterior_calculus_values() {
    let ch = t3();
    let cos_t_dx = one_form(&ch, [t().cos(), c(0.0), c(0.0)]);
    // d(cos t dx) = −sin t dt∧dx
    let d = exterior_derivative(&cos_t_dx);
    let (dt, dx) = (vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]);
    close(d.eval_at(&P, &[dt.clone(), dx.clone()]).unwrap(), -P[2].sin(), 1e-14);
    // (cos t dx)∧dy on (∂x, ∂y) at t = 0
    let w = wedge(&cos_t_dx, &DifferentialForm::coordinate(&ch, 1)).unwrap();
    close(w.eval_at(&[0.3, 0.2, 0.0], &[dx.clone(), vec![0.0, 1.0, 0.0]]).unwrap(), 1.0, 1e-14);
    // ι_∂t(−ε sin t dt∧dx) = −ε sin t dx
    let mut a = DifferentialForm::zero(&ch, 2);
    a.add_term(vec![2, 0], t().sin().scale(-EPS));
    let i = interior_product(&VectorField::coordinate(&ch, 2), &a).unwrap();
    close_vec(&i.dense_values(&P).unwrap(), &[-EPS * P[2].sin(), 0.0, 0.0], 1e-14);
    // [∂x, cos x ∂y] = −sin x ∂y
    let v = VectorField::new(ch.clone(), vec![c(0.0), x().cos(), c(0.0)]).unwrap();
    let b = lie_bracket(&VectorField::coordinate(&ch, 0), &v).unwrap();
    close_vec(&b.evaluate(&P).unwrap(), &[0.0, -P[0].sin(), 0.0], 1e-14);
    // L_∂t(cos t dx) = −sin t dx
    let l = lie_derivative_form(&VectorField::coordinate(&ch, 2), &cos_t_dx).unwrap();
    close_vec(&l.dense_values(&P).unwrap(), &[-P[2].sin(), 0.0, 0.0], 1e-14);
}

#[test]
fn twisted_frame_lies_in_kernel() {
    let ch = t3();
    let c = twisted_couple(&ch);
    let e1 = VectorField::new(ch.clone(), vec![Expr::one(), Expr::zero(), t().cos().scale(-EPS)]).unwrap();
    let g = c.gamma().eval_at(&P, &[e1.evaluate(&P).unwrap()]).unwrap();
    close(g, 0.0, 1e-15);
}

// ---------------------------------------------------------------- foliation DGLA

fn two_form_dxdy(ch: &Arc<Chart>, f: Expr) -> DifferentialForm {
    let mut w = DifferentialForm::zero(ch, 2);
    w.add_term(vec![0, 1], f);
    w
}

#[test]
fn brackets_and_delta_by_hand() {
    let ch = t3();
    let pts = vec![P.to_vec(), vec![2.0, -1.0, 0.4]];
    let flat = flat_couple(&ch);
    let tw = twisted_couple(&ch);
    let dx = DifferentialForm::coordinate(&ch, 0);
    let dy = DifferentialForm::coordinate(&ch, 1);
    let zero2 = DifferentialForm::zero(&ch, 2);
    let expect = two_form_dxdy(&ch, t().sin().scale(-EPS));

    let r = form_diff_residual(&dgla_bracket(&flat, &dx, &dy).unwrap(), &zero2, &pts).unwrap();
    assert!(r.max_abs < 1e-14);
    let r = form_diff_residual(&dgla_bracket(&tw, tw.gamma(), &dy).unwrap(), &expect, &pts).unwrap();
    assert!(r.max_abs < 1e-14, "{r:?}");
    let r = form_diff_residual(&delta(&tw, &dy).unwrap(), &expect, &pts).unwrap();
    assert!(r.max_abs < 1e-14, "{r:?}");

    // δf = d_b f = df − (∂_t f) dt on the flat torus
    let f = x().sin().mul(&t().cos()).add(&y().mul(&t()));
    let df = exterior_derivative(&DifferentialForm::function(&ch, f.clone()));
    let want = df.sub(&DifferentialForm::coordinate(&ch, 2).scale(&f.diff(2)));
    let fun = DifferentialForm::function(&ch, f);
    assert!(form_diff_residual(&delta(&flat, &fun).unwrap(), &want, &pts).unwrap().max_abs < 1e-14);
    assert!(form_diff_residual(&leafwise_d(&flat, &fun).unwrap(), &want, &pts).unwrap().max_abs < 1e-14);
}

#[test]
fn z_membership_and_maurer_cartan_by_hand() {
    let ch = t3();
    let pts = vec![P.to_vec()];
    let tw = twisted_couple(&ch);
    let flat = flat_couple(&ch);
    let a = one_form(&ch, [t().cos(), c(0.0), c(0.0)]);
    assert!(z_membership_residual(&tw, &a, &pts).unwrap().max_abs < 1e-15);
    let k = one_form(&ch, [c(0.4), c(-1.1), c(0.0)]);
    let r = form_diff_residual(&mc_residual(&flat, &k).unwrap(), &DifferentialForm::zero(&ch, 2), &pts).unwrap();
    assert!(r.max_abs < 1e-14);
}

#[test]
fn frobenius_by_hand() {
    let ch = t3();
    let pts = vec![P.to_vec(), vec![0.1, 2.2, 3.0]];
    for r in frobenius_report(&twisted_couple(&ch)).unwrap().residuals(&pts).unwrap() {
        assert!(r.max_rel <= 1e-10);
    }
    let g = one_form(&ch, [c(0.0), x(), c(1.0)]);
    let broken = DefiningCouple::new_unchecked(g, VectorField::coordinate(&ch, 2)).unwrap();
    let r = frobenius_report(&broken).unwrap().residuals(&pts).unwrap();
    assert!(r[0].max_abs > 0.1);
}

// ---------------------------------------------------------------- flows

#[test]
fn pullback_derivative_is_lie_derivative() {
    let ch = t3();
    let y = VectorField::coordinate(&ch, 2);
    let w = one_form(&ch, [t().cos(), c(0.0), c(0.0)]);
    let args: Vec<VectorField> = (0..3).map(|i| VectorField::coordinate(&ch, i)).collect();
    let fd = richardson(|s| args.iter().map(|a| pullback_form_numeric(&y, s, &w, &P, std::slice::from_ref(a))).collect())
        .unwrap();
    close_vec(&fd, &[-P[2].sin(), 0.0, 0.0], 1e-5);
}

#[test]
fn gauge_derivative_by_hand() {
    let ch = t3();
    let flat = flat_couple(&ch);
    let zero = DifferentialForm::zero(&ch, 1);
    // Y = cos x ∂t: −δ(cos x) = sin x dx
    let y = VectorField::new(ch.clone(), vec![c(0.0), c(0.0), x().cos()]).unwrap();
    let got: Vec<f64> = (0..3)
        .map(|i| gauge_derivative_fd(&y, &zero, &flat, &P, &VectorField::coordinate(&ch, i)).unwrap())
        .collect();
    close_vec(&got, &[P[0].sin(), 0.0, 0.0], 1e-4);
    // Y = X: −δ(1) = 0
    let got: Vec<f64> = (0..3)
        .map(|i| gauge_derivative_fd(flat.x(), &zero, &flat, &P, &VectorField::coordinate(&ch, i)).unwrap())
        .collect();
    zero_vec(&got, 1e-4);
}

#[test]
fn s_gauge_derivative_of_leaf_field() {
    // Y = sin(y)E₁ on the flat torus: −H_Y = −∂̄(sin y ∂x), with
    // ∂̄(sin y ∂x)(∂x) = ½cos y ∂y and ∂̄(sin y ∂x)(∂y) = ½cos y ∂x
    let sc = builtin("t3_flat").unwrap();
    let y = VectorField::new(sc.chart().clone(), vec![Expr::var(1).sin(), c(0.0), c(0.0)]).unwrap();
    let h = 0.5 * P[1].cos();
    close_vec(&s_gauge_fd(&sc.structure, &y, &P, 0).unwrap(), &[0.0, -h, 0.0], 1e-4);
    close_vec(&s_gauge_fd(&sc.structure, &y, &P, 1).unwrap(), &[-h, 0.0, 0.0], 1e-4);
}

// ---------------------------------------------------------------- leafwise calculus

fn lp(name: &str) -> LeafPoint {
    LeafPoint::new(&builtin(name).unwrap().structure, &P, DEFAULT_ORDER).unwrap()
}

#[test]
fn dbar_of_cos_x_e1() {
    let lp = lp("t3_flat");
    let w = lp.xi_field(&[x().cos(), c(0.0)]).unwrap();
    let v = dbar0_at(&lp, &Bracket::Lie, &lp.frame[0], &w);
    close_vec(&v.values(), &[-0.5 * P[0].sin(), 0.0, 0.0], 1e-14);
}

#[test]
fn theta_01_on_twisted_couple() {
    let lp = lp("t3_twisted");
    let th = ScalarForm1::restrict(&lp, &lp.theta);
    let (re, im) = proj01_scalar(&lp, &th, &lp.frame[0]);
    close(re.value(), -0.5 * EPS * P[2].sin(), 1e-14);
    close(im.value(), 0.0, 1e-14);
}

#[test]
fn wedge01_matches_real_expansion() {
    // generic α and a J-antilinear P on the 4-dimensional leaves
    let lp = lp_t5();
    let a = lp.lift_form(&one_form5(&lp)).unwrap();
    let af = ScalarForm1::restrict(&lp, &a);
    let p = antilinear(&lp);
    for i in 0..4 {
        for k in 0..4 {
            let (v, w) = (&lp.frame[i], &lp.frame[k]);
            let (pv, pw) = (p.eval(&lp, v), p.eval(&lp, w));
            let (jv, jw) = (lp.j(v), lp.j(w));
            let want = pw
                .scale(&af.eval(&lp, v))
                .add(&lp.j(&pw).scale(&af.eval(&lp, &jv)))
                .sub(&pv.scale(&af.eval(&lp, w)))
                .sub(&lp.j(&pv).scale(&af.eval(&lp, &jw)))
                .scale_c(0.5);
            close_vec(&wedge01_at(&lp, &af, &p, v, w).values(), &want.values(), 1e-12);
        }
    }
}

const P5: [f64; 5] = [0.4, 1.1, 2.3, 0.9, 1.7];

fn lp_t5() -> LeafPoint {
    LeafPoint::new(&builtin("t5_product").unwrap().structure, &P5, DEFAULT_ORDER).unwrap()
}

fn one_form5(lp: &LeafPoint) -> DifferentialForm {
    let ch = builtin("t5_product").unwrap().chart().clone();
    let _ = lp;
    DifferentialForm::one_form(&ch, vec![Expr::var(1).sin(), c(0.3), Expr::var(0).cos(), c(-0.7), c(0.0)]).unwrap()
}

/// `P = A + JAJ` for a fixed constant `A`, so `P(JV) = −JP(V)`.
fn antilinear(lp: &LeafPoint) -> XiForm1 {
    let a: Vec<Vec<Expr>> = (0..4).map(|r| (0..4).map(|k| c(0.1 * (r as f64 + 1.0) - 0.07 * k as f64)).collect()).collect();
    let am = lp.lift_matrix(&a).unwrap();
    let jaj = leviflat_core::leafcx::mat_mul(&leviflat_core::leafcx::mat_mul(&lp.jmat, &am), &lp.jmat);
    let s: Vec<Vec<_>> = am.iter().zip(&jaj).map(|(r, q)| r.iter().zip(q).map(|(a, b)| a + b).collect()).collect();
    XiForm1::from_matrix(lp, &s)
}

#[test]
fn t_endomorphism_by_hand() {
    let flat = lp("t3_flat");
    let v = flat.xi_field(&[t().cos(), c(0.0)]).unwrap();
    close_vec(&t_apply(&flat, &flat.x, &v).values(), &[P[2].sin(), 0.0, 0.0], 1e-14);
    let tw = lp("t3_twisted");
    zero_vec(&t_apply(&tw, &tw.x, &tw.frame[0]).values(), 1e-14);
}

#[test]
fn h_of_builtin_couples() {
    zero_vec(&h_structure(&lp("t3_flat")).values(), 1e-14);
    zero_vec(&h_structure(&lp("t3_twisted")).values(), 1e-14);
    // shifting X by U = sin(y)E₁ gives H = ∂̄U − θ^{0,1}⊗U = ℶ̄U
    let tw = lp("t3_twisted");
    let u = tw.xi_field(&[y().sin(), c(0.0)]).unwrap();
    let shifted = lp("t3_twisted_shifted");
    let want = beth0(&tw, &u);
    let r = Residual::of(&h_structure(&shifted).values(), &want.values());
    assert!(r.max_rel <= 1e-9, "{r:?}");
    // and ℶ̄U is not ∂̄U here: θ ≠ 0 on the twisted couple
    assert!(Residual::of(&want.values(), &dbar0(&tw, &Bracket::Lie, &u).values()).max_abs > 1e-3);
}

#[test]
fn change_of_couple_examples() {
    let pts = vec![P.to_vec(), vec![2.5, 0.2, 5.9]];
    let flat = builtin("t3_flat").unwrap().structure;
    let tw = builtin("t3_twisted").unwrap().structure;
    let r = change_couple_h_residual(&flat, &Expr::zero(), &[y().sin(), c(0.0)], &pts, DEFAULT_ORDER).unwrap();
    assert!(r.max_rel <= 1e-9);
    let r = change_couple_h_residual(&tw, &t().cos(), &[c(0.0), c(0.0)], &pts, DEFAULT_ORDER).unwrap();
    assert!(r.max_rel <= 1e-9);
    let p = XiCochain::Form(vec![vec![x().sin(), c(0.2)], vec![c(0.2), x().sin().neg()]]);
    let r = beth_conjugation_residual(&tw, &Expr::zero(), &[y().sin(), c(0.0)], &p, &pts, DEFAULT_ORDER).unwrap();
    assert!(r.max_rel <= 1e-9);
}

#[test]
fn deformed_bracket_of_constant_tilt_on_flat_torus() {
    let lp = lp("t3_flat");
    let a = lp.lift_form(&DifferentialForm::coordinate(&t3(), 0).scale_const(0.6)).unwrap();
    let d = deformed_bracket(&lp, &a, &lp.frame[0], &lp.frame[1]);
    zero_vec(&d.sub(&lie(&lp.frame[0], &lp.frame[1])).values(), 1e-14);
}

// ---------------------------------------------------------------- S-calculus

fn standard_j4() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0])
}

#[test]
fn rotation_round_trip_mixing_planes() {
    let j = standard_j4();
    let th = 0.2f64;
    let mut r = DMatrix::<f64>::identity(4, 4);
    r[(0, 0)] = th.cos();
    r[(0, 2)] = -th.sin();
    r[(2, 0)] = th.sin();
    r[(2, 2)] = th.cos();
    let jt = &r * &j * r.transpose();
    let s = s_from_structures(&j, &jt).unwrap();
    assert!(Residual::of_zero((&s * &j + &j * &s).as_slice()).max_abs <= 1e-10);
    let back = structure_from_s(&j, &s).unwrap();
    assert!(Residual::of(back.as_slice(), jt.as_slice()).max_rel <= 1e-9);
    let cs = conjugating_s(&j, &jt).unwrap();
    let conj = conjugate_by_s(&j, &cs).unwrap();
    assert!(Residual::of(conj.as_slice(), jt.as_slice()).max_rel <= 1e-9);
    // (J−J̃)(J+J̃)⁻¹ is the negative of the conjugating endomorphism
    assert!(Residual::of(cs.as_slice(), (-&s).as_slice()).max_abs <= 1e-12);
    assert!(Residual::of(jt.as_slice(), j.as_slice()).max_abs > 1e-2);
}

#[test]
fn opposite_structure_is_singular() {
    let j = standard_j4();
    assert!(s_from_structures(&j, &(-&j)).is_none());
    assert!(conjugating_s(&j, &(-&j)).is_none());
}
