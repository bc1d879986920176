//! Calculus of endomorphisms `S` of ξ anticommuting with `J`, which
//! parametrise nearby complex structures `J̃ = (I+S)J(I+S)⁻¹`, and of the
//! bracket deformed by a Maurer–Cartan form.

use nalgebra::DMatrix;

use super::{
    dbar1, h_structure, lie, nijenhuis, nijenhuis_endo, t_apply, wedge01, Bracket, Covec, JField,
    LeafPoint, ScalarForm1, XiForm1, XiForm2,
};
use crate::jet::{solve, Jet};

pub fn mat_mul(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Jet::zero(a[0][0].space()), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

fn identity(lp: &LeafPoint) -> Vec<Vec<Jet>> {
    let m = lp.rank();
    (0..m).map(|i| (0..m).map(|j| lp.constant(if i == j { 1.0 } else { 0.0 })).collect()).collect()
}

fn shift(lp: &LeafPoint, s: &[Vec<Jet>], sign: f64) -> Vec<Vec<Jet>> {
    let id = identity(lp);
    id.iter().zip(s).map(|(ri, rs)| ri.iter().zip(rs).map(|(a, b)| a + &b.scale(sign)).collect()).collect()
}

pub fn mat_inverse(lp: &LeafPoint, a: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    solve(a, &identity(lp))
}

/// `J̃ = (I+S) J (I+S)⁻¹` as a frame matrix.
pub fn j_tilde_from_s(lp: &LeafPoint, s: &XiForm1) -> Option<Vec<Vec<Jet>>> {
    let sm = s.matrix(lp);
    let ips = shift(lp, &sm, 1.0);
    let inv = mat_inverse(lp, &ips)?;
    Some(mat_mul(&mat_mul(&ips, &lp.jmat), &inv))
}

/// The `S` with `J̃ = (I+S)J(I+S)⁻¹` for a frame matrix of jets, that is
/// `(J + J̃)⁻¹(J − J̃)`.
pub fn conjugating_s_jet(lp: &LeafPoint, jt: &[Vec<Jet>]) -> Option<XiForm1> {
    let comb = |sign: f64| -> Vec<Vec<Jet>> {
        lp.jmat.iter().zip(jt).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + &y.scale(sign)).collect()).collect()
    };
    let inv = mat_inverse(lp, &comb(1.0))?;
    Some(XiForm1::from_matrix(lp, &mat_mul(&inv, &comb(-1.0))))
}

/// `S = (J − J̃)(J + J̃)⁻¹` for pointwise frame matrices.
///
/// This is the normalisation used for gauge-transformed structures. It is the
/// negative of [`conjugating_s`]; its inverse is [`structure_from_s`].
pub fn s_from_structures(j: &DMatrix<f64>, jt: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = (j + jt).try_inverse()?;
    Some((j - jt) * inv)
}

/// The unique `S` with `SJ + JS = 0` and `J̃ = (I+S)J(I+S)⁻¹`:
/// `(J + J̃)⁻¹(J − J̃)`.
pub fn conjugating_s(j: &DMatrix<f64>, jt: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = (j + jt).try_inverse()?;
    Some(inv * (j - jt))
}

/// `J̃ = (I+S) J (I+S)⁻¹`, the inverse of [`conjugating_s`].
pub fn conjugate_by_s(j: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let id = DMatrix::<f64>::identity(j.nrows(), j.ncols());
    let inv = (&id + s).try_inverse()?;
    Some((&id + s) * j * inv)
}

/// `J̃ = (I−S) J (I−S)⁻¹`, the inverse of [`s_from_structures`].
pub fn structure_from_s(j: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    conjugate_by_s(j, &-s)
}

/// `∂̄_J S`, the same formula as `∂̄` on ξ-valued 1-forms but with no
/// integrability assumption on `J`.
#[allow(non_snake_case)]
pub fn dbarJ_S(lp: &LeafPoint, b: &Bracket, s: &XiForm1) -> XiForm2 {
    dbar1(lp, b, s)
}

/// `[S,S](V,W)`.
pub fn square_bracket_ss_at(lp: &LeafPoint, b: &Bracket, s: &XiForm1, v: &JField, w: &JField) -> JField {
    let br = |x: &JField, y: &JField| lp.bracket(b, x, y);
    let sv = s.eval(lp, v);
    let sw = s.eval(lp, w);
    let jsv = lp.j(&sv);
    let jsw = lp.j(&sw);
    let head = br(&sv, &sw).sub(&br(&jsv, &jsw));
    let inner = br(&sv, w)
        .add(&br(v, &sw))
        .add(&lp.j(&br(v, &jsw)))
        .add(&lp.j(&br(&jsv, w)));
    let n1 = s.eval(lp, &nijenhuis(lp, b, &sv, w));
    let n2 = s.eval(lp, &nijenhuis(lp, b, v, &sw));
    let n3 = nijenhuis(lp, b, &sv, &sw);
    head.sub(&s.eval(lp, &inner)).sub(&n1.add(&n2).sub(&n3).scale_c(0.5))
}

pub fn square_bracket_ss(lp: &LeafPoint, b: &Bracket, s: &XiForm1) -> XiForm2 {
    XiForm2::tabulate(lp, |v, w| square_bracket_ss_at(lp, b, s, v, w))
}

/// `S(N_J − N_J(S,S))` with `N_J(S,S)(V,W) = N_J(SV,SW)`.
pub fn s_n_term(lp: &LeafPoint, b: &Bracket, s: &XiForm1) -> XiForm2 {
    XiForm2::tabulate(lp, |v, w| {
        let n = nijenhuis(lp, b, v, w);
        let nss = nijenhuis(lp, b, &s.eval(lp, v), &s.eval(lp, w));
        s.eval(lp, &n.sub(&nss))
    })
}

/// `[[S,S]] = [S,S] + c·S(N_J − N_J(S,S))`; the consistent coefficient is `c = −½`.
pub fn double_bracket_ss_coef(lp: &LeafPoint, b: &Bracket, s: &XiForm1, c: f64) -> XiForm2 {
    square_bracket_ss(lp, b, s).add(&s_n_term(lp, b, s).scale_c(c))
}

pub fn double_bracket_ss(lp: &LeafPoint, b: &Bracket, s: &XiForm1) -> XiForm2 {
    double_bracket_ss_coef(lp, b, s, -0.5)
}

/// Both sides of the relation between `N_{J̃}` and `N_J`:
/// `N_{J̃}((I+S)V,(I+S)W)` and
/// `(I−S)⁻¹(N + S(N − N(S,S))) − 4(I−S)⁻¹(∂̄S + ½[S,S])`.
pub struct NTildeRelation {
    pub lhs: XiForm2,
    pub rhs: XiForm2,
}

pub fn n_tilde_relation(lp: &LeafPoint, s: &XiForm1) -> Option<NTildeRelation> {
    let b = Bracket::Lie;
    let jt = j_tilde_from_s(lp, s)?;
    let sm = s.matrix(lp);
    let ips = shift(lp, &sm, 1.0);
    let ims_inv = mat_inverse(lp, &shift(lp, &sm, -1.0))?;
    let lhs = XiForm2::tabulate(lp, |v, w| {
        nijenhuis_endo(lp, &b, &jt, &lp.apply_endo(&ips, v), &lp.apply_endo(&ips, w))
    });
    let ds = dbarJ_S(lp, &b, s);
    let ss = square_bracket_ss(lp, &b, s);
    let rhs = XiForm2::tabulate(lp, |v, w| {
        let n = nijenhuis(lp, &b, v, w);
        let nss = nijenhuis(lp, &b, &s.eval(lp, v), &s.eval(lp, w));
        let first = n.add(&s.eval(lp, &n.sub(&nss)));
        let second = ds.eval(lp, v, w).add(&ss.eval(lp, v, w).scale_c(0.5)).scale_c(4.0);
        lp.apply_endo(&ims_inv, &first.sub(&second))
    });
    Some(NTildeRelation { lhs, rhs })
}

/// `N_{J̃}` on the frame for `J̃ = (I+S)J(I+S)⁻¹`.
pub fn n_tilde(lp: &LeafPoint, s: &XiForm1) -> Option<XiForm2> {
    let jt = j_tilde_from_s(lp, s)?;
    Some(XiForm2::tabulate(lp, |v, w| nijenhuis_endo(lp, &Bracket::Lie, &jt, v, w)))
}

/// `[V,W]_α = ω_α⁻¹[ω_α V, ω_α W]`.
pub fn deformed_bracket(lp: &LeafPoint, a: &Covec, v: &JField, w: &JField) -> JField {
    lp.bracket(&Bracket::Deformed(a.clone()), v, w)
}

/// The same bracket expanded into ten terms, with `a = α(V)`, `b = α(W)`:
/// `[V,W] + α([V,W])X − b[V,X] − bα([V,X])X + a[W,X] + aα([W,X])X
///  + W(a)X − V(b)X + aX(b)X − bX(a)X`.
pub fn deformed_bracket_expanded(lp: &LeafPoint, al: &Covec, v: &JField, w: &JField) -> JField {
    let x = &lp.x;
    let a = al.eval(v);
    let b = al.eval(w);
    let vw = lie(v, w);
    let vx = lie(v, x);
    let wx = lie(w, x);
    let terms = [
        vw.clone(),
        x.scale(&al.eval(&vw)),
        vx.scale(&b).neg(),
        x.scale(&(&b * &al.eval(&vx))).neg(),
        wx.scale(&a),
        x.scale(&(&a * &al.eval(&wx))),
        x.scale(&w.apply(&a)),
        x.scale(&v.apply(&b)).neg(),
        x.scale(&(&a * &x.apply(&b))),
        x.scale(&(&b * &x.apply(&a))).neg(),
    ];
    terms.iter().skip(1).fold(terms[0].clone(), |acc, t| acc.add(t))
}

/// `[V,W] + (α ∧ T)(V,W)` with `T = T_X`.
pub fn bracket_plus_alpha_t(lp: &LeafPoint, a: &Covec, v: &JField, w: &JField) -> JField {
    let tw = t_apply(lp, &lp.x, w);
    let tv = t_apply(lp, &lp.x, v);
    lie(v, w).add(&tw.scale(&a.eval(v))).sub(&tv.scale(&a.eval(w)))
}

/// `⟨W, f⟩_α = ω_α(W)(f)`.
pub fn deformed_anchor(lp: &LeafPoint, a: &Covec, w: &JField, f: &Jet) -> Jet {
    lp.omega(a, w).apply(f)
}

/// Both sides of `N^α_J = −4 α^{0,1} ∧ H`.
pub fn n_alpha_relation(lp: &LeafPoint, a: &Covec) -> (XiForm2, XiForm2) {
    let b = Bracket::Deformed(a.clone());
    let lhs = XiForm2::tabulate(lp, |v, w| nijenhuis(lp, &b, v, w));
    let h = h_structure(lp);
    let rhs = wedge01(lp, &ScalarForm1::restrict(lp, a), &h).scale_c(-4.0);
    (lhs, rhs)
}
