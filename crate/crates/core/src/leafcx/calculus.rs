use super::{lie, Bracket, Covec, JField, LeafPoint, ScalarForm1, XiForm1, XiForm2, wedge01, wedge01_field};
use crate::jet::Jet;

/// `N_K(V,W) = [KV,KW] − [V,W] − K[KV,W] − K[V,KW]` for a frame matrix `K`.
pub fn nijenhuis_endo(lp: &LeafPoint, b: &Bracket, k: &[Vec<Jet>], v: &JField, w: &JField) -> JField {
    let kv = lp.apply_endo(k, v);
    let kw = lp.apply_endo(k, w);
    let a = lp.bracket(b, &kv, &kw);
    let c = lp.bracket(b, v, w);
    let d = lp.apply_endo(k, &lp.bracket(b, &kv, w));
    let e = lp.apply_endo(k, &lp.bracket(b, v, &kw));
    a.sub(&c).sub(&d).sub(&e)
}

/// The Nijenhuis tensor of `J`.
pub fn nijenhuis(lp: &LeafPoint, b: &Bracket, v: &JField, w: &JField) -> JField {
    nijenhuis_endo(lp, b, &lp.jmat, v, w)
}

/// `∂̄W(V) = ½([V,W] + J[JV,W]) + ¼ N(V,W)`.
pub fn dbar0_at(lp: &LeafPoint, b: &Bracket, v: &JField, w: &JField) -> JField {
    let jv = lp.j(v);
    let first = lp.bracket(b, v, w).add(&lp.j(&lp.bracket(b, &jv, w))).scale_c(0.5);
    first.add(&nijenhuis(lp, b, v, w).scale_c(0.25))
}

pub fn dbar0(lp: &LeafPoint, b: &Bracket, w: &JField) -> XiForm1 {
    XiForm1 { vals: lp.frame.iter().map(|e| dbar0_at(lp, b, e, w)).collect() }
}

/// `∂̄ω(V,W) = ∂̄(ω(W))(V) − ∂̄(ω(V))(W) − ½ ω([V,W] − [JV,JW])`.
pub fn dbar1_at(lp: &LeafPoint, b: &Bracket, om: &XiForm1, v: &JField, w: &JField) -> JField {
    let a = dbar0_at(lp, b, v, &om.eval(lp, w));
    let c = dbar0_at(lp, b, w, &om.eval(lp, v));
    let br = lp.bracket(b, v, w).sub(&lp.bracket(b, &lp.j(v), &lp.j(w)));
    a.sub(&c).sub(&om.eval(lp, &br).scale_c(0.5))
}

pub fn dbar1(lp: &LeafPoint, b: &Bracket, om: &XiForm1) -> XiForm2 {
    XiForm2::tabulate(lp, |v, w| dbar1_at(lp, b, om, v, w))
}

/// `T_Y(V) = [V,Y] − γ([V,Y]) X`. Not tensorial in `V` unless `Y = X`.
pub fn t_apply(lp: &LeafPoint, y: &JField, v: &JField) -> JField {
    lp.project(&lie(v, y))
}

/// `T_Y` on the frame.
pub fn t_endo(lp: &LeafPoint, y: &JField) -> XiForm1 {
    XiForm1 { vals: lp.frame.iter().map(|e| t_apply(lp, y, e)).collect() }
}

/// `H_Y(V) = ½(T_Y V + J T_Y JV)`.
pub fn h_at(lp: &LeafPoint, y: &JField, v: &JField) -> JField {
    let a = t_apply(lp, y, v);
    let c = lp.j(&t_apply(lp, y, &lp.j(v)));
    a.add(&c).scale_c(0.5)
}

pub fn h_form(lp: &LeafPoint, y: &JField) -> XiForm1 {
    XiForm1 { vals: lp.frame.iter().map(|e| h_at(lp, y, e)).collect() }
}

/// `H = H_X`, the obstruction form of the couple.
pub fn h_structure(lp: &LeafPoint) -> XiForm1 {
    h_form(lp, &lp.x)
}

/// `ι_X dγ` restricted to ξ.
pub fn theta_xi(lp: &LeafPoint) -> ScalarForm1 {
    ScalarForm1::restrict(lp, &lp.theta)
}

/// `ℶ̄Z = ∂̄Z − (ι_X dγ)^{0,1} ⊗ Z`.
pub fn beth0(lp: &LeafPoint, z: &JField) -> XiForm1 {
    dbar0(lp, &Bracket::Lie, z).sub(&wedge01_field(lp, &theta_xi(lp), z))
}

/// `ℶ̄P = ∂̄P − (ι_X dγ)^{0,1} ∧ P`.
pub fn beth1(lp: &LeafPoint, p: &XiForm1) -> XiForm2 {
    dbar1(lp, &Bracket::Lie, p).sub(&wedge01(lp, &theta_xi(lp), p))
}

/// `dα(V,W) = V α(W) − W α(V) − α([V,W])` for a 1-form germ.
pub fn d_covec(a: &Covec, v: &JField, w: &JField) -> Jet {
    v.apply(&a.eval(w)) - w.apply(&a.eval(v)) - a.eval(&lie(v, w))
}

/// Real and imaginary parts of `∂̄(α^{0,1})(V,W) = ¼ dα(V + iJV, W + iJW)`.
pub fn dbar_scalar01_at(lp: &LeafPoint, a: &Covec, v: &JField, w: &JField) -> (Jet, Jet) {
    let jv = lp.j(v);
    let jw = lp.j(w);
    let re = d_covec(a, v, w) - d_covec(a, &jv, &jw);
    let im = d_covec(a, &jv, w) + d_covec(a, v, &jw);
    (re.scale(0.25), im.scale(0.25))
}
