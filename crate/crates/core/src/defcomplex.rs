//! The deformation complex `𝔷^p = 𝒵^p ⊕ Λ^{0,p}(ξ)⊗ξ` with
//! `𝔡^p(α, P) = (δα, ∂̄P + (−1)^{p+1} α^{0,p} ∧ H)`, the Levi-flat
//! Maurer–Cartan system, infinitesimal deformations and gauge witnesses.
//!
//! Symbolic inputs are evaluated pointwise through [`LeafPoint`]; every
//! function returns residuals accumulated over the given points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::excalc::{contract_all, lie_bracket, DifferentialForm, VectorField};
use crate::foliation_dgla::{delta, form_residual, mc_residual, z_membership_residual};
use crate::leafcx::{
    beth0, conjugating_s_jet, d_covec, dbar0, dbar1, dbarJ_S, double_bracket_ss_coef, h_form, h_structure, nijenhuis, wedge01, Bracket,
    Covec, JField, LeafPoint, LeviFlatStructure, ScalarForm1, XiCochain, XiForm1, XiForm2, DEFAULT_ORDER,
};
use crate::jet::{lift, solve, Jet};
use crate::residual::Residual;
use crate::symfield::{Expr, Numeric};

/// Tolerance for `ι_X α = 0` on cochain inputs.
pub const Z_TOL: f64 = 1e-10;

/// An element of `𝔷^p` for `p ∈ {0, 1}`: a `p`-form in `𝒵^p` and a ξ-valued
/// `(0,p)`-cochain.
#[derive(Clone, Debug)]
pub struct CochainPair {
    pub alpha: DifferentialForm,
    pub p: XiCochain,
}

impl CochainPair {
    pub fn new(s: &LeviFlatStructure, alpha: DifferentialForm, p: XiCochain) -> Result<CochainPair> {
        if alpha.degree() != p.degree() {
            return Err(Error::Dimension(format!(
                "form of degree {} paired with a ξ-cochain of degree {}",
                alpha.degree(),
                p.degree()
            )));
        }
        if alpha.degree() > 1 {
            return Err(Error::Domain("only degrees 0 and 1 are supported".into()));
        }
        let m = s.frame().len();
        let shape_ok = match &p {
            XiCochain::Field(c) => c.len() == m,
            XiCochain::Form(rows) => rows.len() == m && rows.iter().all(|r| r.len() == m),
        };
        if !shape_ok {
            return Err(Error::Dimension(format!("ξ-cochain must use {m} frame slots")));
        }
        if alpha.degree() == 1 {
            let pts = crate::foliation_dgla::check_points(s.chart());
            let r = z_membership_residual(s.couple(), &alpha, &pts)?;
            if r.max_abs > Z_TOL {
                return Err(Error::Domain(format!("α is not annihilated by ι_X ({:.3e})", r.max_abs)));
            }
        }
        Ok(CochainPair { alpha, p })
    }

    pub fn degree(&self) -> usize {
        self.alpha.degree()
    }
}

/// `(α, S)` with `α ∈ 𝒵¹` and `S` anticommuting with `J`, by frame matrix.
#[derive(Clone, Debug)]
pub struct DeformationPair {
    pub alpha: DifferentialForm,
    pub s: Vec<Vec<Expr>>,
}

/// The value of `𝔡` at a point: the symbolic form part and the pointwise
/// ξ-valued part.
pub enum DfrakValue {
    Degree1(DifferentialForm, XiForm1),
    Degree2(DifferentialForm, XiForm2),
}

fn lift_cochain1(lp: &LeafPoint, m: &[Vec<Expr>]) -> Result<XiForm1> {
    Ok(XiForm1::from_matrix(lp, &lp.lift_matrix(m)?))
}

/// `𝔡^p` at one point.
pub fn dfrak(s: &LeviFlatStructure, c: &CochainPair, lp: &LeafPoint) -> Result<DfrakValue> {
    let d = delta(s.couple(), &c.alpha)?;
    let h = h_structure(lp);
    match &c.p {
        XiCochain::Field(v) => {
            let f = lp.lift_fn(&c.alpha.as_function())?;
            let vf = lp.xi_field(v)?;
            let p = dbar0(lp, &Bracket::Lie, &vf).sub(&h.scale(&f));
            Ok(DfrakValue::Degree1(d, p))
        }
        XiCochain::Form(m) => {
            let pf = lift_cochain1(lp, m)?;
            let a = ScalarForm1::restrict(lp, &lp.lift_form(&c.alpha)?);
            let p = dbar1(lp, &Bracket::Lie, &pf).add(&wedge01(lp, &a, &h));
            Ok(DfrakValue::Degree2(d, p))
        }
    }
}

/// Residual of `𝔡¹ ∘ 𝔡⁰ = 0` on a degree-0 pair.
pub fn dfrak_squared_residual(s: &LeviFlatStructure, c: &CochainPair, points: &[Vec<f64>]) -> Result<Residual> {
    if c.degree() != 0 {
        return Err(Error::Domain("𝔡∘𝔡 is checked on degree-0 pairs".into()));
    }
    let df = delta(s.couple(), &c.alpha)?;
    let ddf = delta(s.couple(), &df)?;
    let mut r = form_residual(&ddf, points)?;
    let dfc = df.clone();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let DfrakValue::Degree1(_, p1) = dfrak(s, c, &lp)? else { unreachable!() };
        let a = ScalarForm1::restrict(&lp, &lp.lift_form(&dfc)?);
        let h = h_structure(&lp);
        let v = dbar1(&lp, &Bracket::Lie, &p1).add(&wedge01(&lp, &a, &h));
        r.push_zero(&v.values());
    }
    Ok(r)
}

/// The `(δ(γ(Y)), −(Y − γ(Y)X))` pair whose image under `𝔡⁰` is `(δγ(Y), −H_Y)`.
pub fn gauge_cochain(s: &LeviFlatStructure, y: &VectorField) -> Result<(CochainPair, Expr)> {
    let c = s.couple();
    let f = contract_all(c.gamma(), std::slice::from_ref(y))?;
    let v = y.sub(&c.x().scale(&f));
    let coeffs = xi_coeffs(s, &v)?;
    let neg: Vec<Expr> = coeffs.iter().map(|e| -e).collect();
    Ok((CochainPair::new(s, DifferentialForm::function(s.chart(), f.clone()), XiCochain::Field(neg))?, f))
}

/// Frame coefficients of a symbolic ξ-field, by the coframe dual to `(E, X)`.
/// Symbolic; only used for fields whose frame expansion is needed before lifting.
fn xi_coeffs(s: &LeviFlatStructure, v: &VectorField) -> Result<Vec<Expr>> {
    // ξ-fields are handled pointwise, so carry V as coordinate components:
    // express it as a combination of frame fields via a symbolic Cramer solve.
    let n = s.chart().dim();
    let m = s.frame().len();
    let mut cols: Vec<Vec<Expr>> = s.frame().iter().map(|e| e.comps().to_vec()).collect();
    cols.push(s.couple().x().comps().to_vec());
    let mat: Vec<Vec<Expr>> = (0..n).map(|r| (0..n).map(|c| cols[c][r].clone()).collect()).collect();
    let det = sym_det(&mat);
    (0..m)
        .map(|k| {
            let mk: Vec<Vec<Expr>> = (0..n)
                .map(|r| (0..n).map(|c| if c == k { v.comp(r).clone() } else { mat[r][c].clone() }).collect())
                .collect();
            Ok(sym_det(&mk).div(&det))
        })
        .collect()
}

fn sym_det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        n => {
            let mut s = Expr::zero();
            for col in 0..n {
                if m[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| v.clone()).collect())
                    .collect();
                let t = &m[0][col] * &sym_det(&minor);
                s = if col % 2 == 0 { s + t } else { s - t };
            }
            s
        }
    }
}

/// `H_Y` as a symbolic frame matrix (column `k` = coefficients of `H_Y(E_k)`),
/// built from Lie brackets and a Cramer solve for the coframe. Independent of
/// the jet evaluation used elsewhere.
pub fn symbolic_h_form(s: &LeviFlatStructure, y: &VectorField) -> Result<Vec<Vec<Expr>>> {
    let c = s.couple();
    let t = |v: &VectorField| -> Result<Vec<Expr>> {
        let br = lie_bracket(v, y)?;
        let g = contract_all(c.gamma(), std::slice::from_ref(&br))?;
        xi_coeffs(s, &br.sub(&c.x().scale(&g)))
    };
    let m = s.frame().len();
    let mut cols = Vec::with_capacity(m);
    for (k, e) in s.frame().iter().enumerate() {
        let a = t(e)?;
        let unit: Vec<Expr> = (0..m).map(|i| if i == k { Expr::one() } else { Expr::zero() }).collect();
        let je = s.field_from_coeffs(&s.j_coeffs(&unit));
        let b = s.j_coeffs(&t(&je)?);
        cols.push(a.iter().zip(&b).map(|(x, y)| (x + y).scale(0.5)).collect::<Vec<_>>());
    }
    Ok((0..m).map(|r| (0..m).map(|k| cols[k][r].clone()).collect()).collect())
}

/// Residuals of `𝔡⁰(γ(Y), −(Y − γ(Y)X)) = (δ(γ(Y)), −H_Y)`.
pub fn tangent_witness_residual(s: &LeviFlatStructure, y: &VectorField, points: &[Vec<f64>]) -> Result<Residual> {
    let (c, f) = gauge_cochain(s, y)?;
    let beta = delta(s.couple(), &DifferentialForm::function(s.chart(), f))?;
    let mut r = Residual::default();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let DfrakValue::Degree1(d, pv) = dfrak(s, &c, &lp)? else { unreachable!() };
        r.push_all(&d.dense_values(p)?, &beta.dense_values(p)?);
        let hy = h_form(&lp, &lp.lift_field(y)?).scale_c(-1.0);
        r.push_all(&pv.values(), &hy.values());
    }
    Ok(r)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct McResiduals {
    /// `δα + ½{α, α}`.
    pub foliation: Residual,
    /// `∂̄^α S + ½[[S,S]]_α − ¼N^α` with the `−½` coefficient in `[[·,·]]`.
    pub complex: Residual,
    /// The same with coefficient `−¼` in `[[·,·]]`, for comparison.
    pub complex_quarter: Residual,
}

/// The two equations characterising `(ker(γ+α), J_α)` as Levi-flat.
pub fn levi_flat_mc_residuals(s: &LeviFlatStructure, d: &DeformationPair, points: &[Vec<f64>]) -> Result<McResiduals> {
    let mut out = McResiduals { foliation: form_residual(&mc_residual(s.couple(), &d.alpha)?, points)?, ..Default::default() };
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let a = lp.lift_form(&d.alpha)?;
        let sf = lift_cochain1(&lp, &d.s)?;
        for (coef, slot) in [(-0.5, &mut out.complex), (-0.25, &mut out.complex_quarter)] {
            let (l, r) = mc_complex_at(&lp, &a, &sf, coef);
            slot.push_all(&l.values(), &r.values());
        }
    }
    Ok(out)
}

/// Both sides of `∂̄^α S + ½[[S,S]]_α = ¼N^α` at one point, with `coef` the
/// coefficient used inside `[[·,·]]`.
pub fn mc_complex_at(lp: &LeafPoint, alpha: &Covec, s: &XiForm1, coef: f64) -> (XiForm2, XiForm2) {
    let b = Bracket::Deformed(alpha.clone());
    let lhs = dbarJ_S(lp, &b, s).add(&double_bracket_ss_coef(lp, &b, s, coef).scale_c(0.5));
    let rhs = XiForm2::tabulate(lp, |v, w| nijenhuis(lp, &b, v, w).scale_c(0.25));
    (lhs, rhs)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InfinitesimalResiduals {
    /// `δβ = 0`.
    pub delta_beta: Residual,
    /// `∂̄P = −β^{0,1} ∧ H`.
    pub dbar_p: Residual,
}

pub fn infinitesimal_residuals(s: &LeviFlatStructure, t: &CochainPair, points: &[Vec<f64>]) -> Result<InfinitesimalResiduals> {
    let XiCochain::Form(m) = &t.p else {
        return Err(Error::Domain("infinitesimal deformations are degree-1 pairs".into()));
    };
    let mut out = InfinitesimalResiduals {
        delta_beta: form_residual(&delta(s.couple(), &t.alpha)?, points)?,
        ..Default::default()
    };
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let pf = lift_cochain1(&lp, m)?;
        let a = ScalarForm1::restrict(&lp, &lp.lift_form(&t.alpha)?);
        let lhs = dbar1(&lp, &Bracket::Lie, &pf);
        let rhs = wedge01(&lp, &a, &h_structure(&lp)).scale_c(-1.0);
        out.dbar_p.push_all(&lhs.values(), &rhs.values());
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GaugeWitnessResiduals {
    /// `β − β′ = δ(ι_Y γ)`.
    pub beta: Residual,
    /// `P − P′ = −H_Y`.
    pub p: Residual,
}

pub fn gauge_witness_residual(
    s: &LeviFlatStructure,
    t: &CochainPair,
    t2: &CochainPair,
    y: &VectorField,
    points: &[Vec<f64>],
) -> Result<GaugeWitnessResiduals> {
    let (XiCochain::Form(m1), XiCochain::Form(m2)) = (&t.p, &t2.p) else {
        return Err(Error::Domain("gauge witnesses relate degree-1 pairs".into()));
    };
    let f = contract_all(s.couple().gamma(), std::slice::from_ref(y))?;
    let df = delta(s.couple(), &DifferentialForm::function(s.chart(), f))?;
    let diff = t.alpha.sub(&t2.alpha);
    let mut out = GaugeWitnessResiduals::default();
    for p in points {
        out.beta.push_all(&diff.dense_values(p)?, &df.dense_values(p)?);
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let pd = lift_cochain1(&lp, m1)?.sub(&lift_cochain1(&lp, m2)?);
        let hy = h_form(&lp, &lp.lift_field(y)?).scale_c(-1.0);
        out.p.push_all(&pd.values(), &hy.values());
    }
    Ok(out)
}

/// `H_Y = ∂̄(Y − γ(Y)X) + γ(Y) H`.
pub fn hy_decomposition_residual(s: &LeviFlatStructure, y: &VectorField, points: &[Vec<f64>]) -> Result<Residual> {
    let mut r = Residual::default();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let yj = lp.lift_field(y)?;
        let f = lp.gamma.eval(&yj);
        let v = lp.project(&yj);
        let lhs = h_form(&lp, &yj);
        let rhs = dbar0(&lp, &Bracket::Lie, &v).add(&h_structure(&lp).scale(&f));
        r.push_all(&lhs.values(), &rhs.values());
    }
    Ok(r)
}

/// `∂̄H_Y = (δ(γ(Y)))^{0,1} ∧ H`.
pub fn dbar_hy_residual(s: &LeviFlatStructure, y: &VectorField, points: &[Vec<f64>]) -> Result<Residual> {
    let f = contract_all(s.couple().gamma(), std::slice::from_ref(y))?;
    let df = delta(s.couple(), &DifferentialForm::function(s.chart(), f))?;
    let mut r = Residual::default();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let hy = h_form(&lp, &lp.lift_field(y)?);
        let lhs = dbar1(&lp, &Bracket::Lie, &hy);
        let a = ScalarForm1::restrict(&lp, &lp.lift_form(&df)?);
        let rhs = wedge01(&lp, &a, &h_structure(&lp));
        r.push_all(&lhs.values(), &rhs.values());
    }
    Ok(r)
}

/// `(β + δφ)^{0,1} ∧ H = β^{0,1} ∧ H + ∂̄(φH)`.
pub fn phi_h_residual(s: &LeviFlatStructure, beta: &DifferentialForm, phi: &Expr, points: &[Vec<f64>]) -> Result<Residual> {
    let dphi = delta(s.couple(), &DifferentialForm::function(s.chart(), phi.clone()))?;
    let shifted = beta.add(&dphi);
    let mut r = Residual::default();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let h = h_structure(&lp);
        let a1 = ScalarForm1::restrict(&lp, &lp.lift_form(&shifted)?);
        let a0 = ScalarForm1::restrict(&lp, &lp.lift_form(beta)?);
        let lhs = wedge01(&lp, &a1, &h);
        let f = lp.lift_fn(phi)?;
        let rhs = wedge01(&lp, &a0, &h).add(&dbar1(&lp, &Bracket::Lie, &h.scale(&f)));
        r.push_all(&lhs.values(), &rhs.values());
    }
    Ok(r)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExactnessResiduals {
    /// `H = ℶ̄U`.
    pub witness: Residual,
    /// `H` of the couple `(γ, X − U)`, which vanishes for a witness.
    pub rederived: Residual,
}

impl ExactnessResiduals {
    pub fn max_rel(&self) -> f64 {
        self.witness.max_rel.max(self.rederived.max_rel)
    }
}

pub fn exactness_witness_check(s: &LeviFlatStructure, u: &[Expr], points: &[Vec<f64>]) -> Result<ExactnessResiduals> {
    let neg: Vec<Expr> = u.iter().map(|e| -e).collect();
    let shifted = crate::leafcx::changed_structure(s, &Expr::zero(), &neg)?;
    let mut out = ExactnessResiduals::default();
    for p in points {
        let lp = LeafPoint::new(s, p, DEFAULT_ORDER)?;
        let h = h_structure(&lp);
        let bu = beth0(&lp, &lp.xi_field(u)?);
        out.witness.push_all(&h.values(), &bu.values());
        let lps = LeafPoint::new(&shifted, p, DEFAULT_ORDER)?;
        out.rederived.push_zero(&h_structure(&lps).values());
    }
    Ok(out)
}

/// `α` restricted to ξ at a point, for callers that build pairs from germs.
pub fn restrict(lp: &LeafPoint, a: &Covec) -> ScalarForm1 {
    ScalarForm1::restrict(lp, a)
}

/// The pair `(α, S)` obtained by pulling the structure back along an explicit
/// diffeomorphism `Φ` (components given symbolically), as germs at `p`.
///
/// `α = Φ*γ / (Φ*γ)(X) − γ` and `S` is the conjugating endomorphism of
/// `ω_α⁻¹ (Φ*J) ω_α`. The foliation residual is `d(γ+α)` on `ker(γ+α)`.
pub struct PulledBackPair {
    pub point: LeafPoint,
    pub alpha: Covec,
    pub s: XiForm1,
    pub foliation: Residual,
}

pub fn pulled_back_pair(s: &LeviFlatStructure, phi: &[Expr], p: &[f64], order: usize) -> Result<PulledBackPair> {
    let n = s.chart().dim();
    let m = n - 1;
    if phi.len() != n {
        return Err(Error::Dimension(format!("Φ needs {n} components")));
    }
    let lp = LeafPoint::new(s, p, order)?;
    let sp = lp.space.clone();
    let map = lift(phi, &sp, &lp.point)?;
    let dphi: Vec<Vec<Jet>> =
        (0..n).map(|i| lift(&(0..n).map(|j| phi[i].diff(j)).collect::<Vec<_>>(), &sp, &lp.point)).collect::<Result<_>>()?;
    let mut vals = s.eval_composed(&sp, &map)?.into_iter();
    let mut take = |k: usize| -> Vec<Jet> { (&mut vals).take(k).collect() };
    let gq = take(n);
    let xq = take(n);
    let eq: Vec<Vec<Jet>> = (0..m).map(|_| take(n)).collect();
    let jq: Vec<Vec<Jet>> = (0..m).map(|_| take(m)).collect();
    let zero = Jet::zero(&sp);
    let one = Jet::constant(&sp, 1.0);
    let ident = |k: usize| -> Vec<Vec<Jet>> {
        (0..k).map(|r| (0..k).map(|c| if r == c { one.clone() } else { zero.clone() }).collect()).collect()
    };
    // coframe at Φ(p)
    let mq: Vec<Vec<Jet>> =
        (0..n).map(|r| (0..n).map(|c| if c < m { eq[c][r].clone() } else { xq[r].clone() }).collect()).collect();
    let mq_inv = solve(&mq, &ident(n)).ok_or_else(|| Error::Singular("frame degenerate at Φ(p)".into()))?;
    let dphi_inv = solve(&dphi, &ident(n)).ok_or_else(|| Error::Singular("Φ is not a local diffeomorphism".into()))?;
    let matvec = |a: &[Vec<Jet>], v: &[Jet]| -> Vec<Jet> {
        a.iter().map(|row| row.iter().zip(v).fold(zero.clone(), |acc, (x, y)| acc + x * y)).collect()
    };
    // J at Φ(p) on coordinate vectors tangent to ξ there
    let jq_apply = |v: &[Jet]| -> Vec<Jet> {
        let c: Vec<Jet> = matvec(&mq_inv, v).into_iter().take(m).collect();
        let jc = matvec(&jq, &c);
        (0..n).map(|r| (0..m).fold(zero.clone(), |acc, k| acc + &eq[k][r] * &jc[k])).collect()
    };
    // Φ*γ = DΦᵀ γ(Φ(p))
    let pg: Vec<Jet> = (0..n).map(|i| (0..n).fold(zero.clone(), |acc, j| acc + &dphi[j][i] * &gq[j])).collect();
    let pg = Covec(pg);
    let norm = pg.eval(&lp.x);
    let inv = Numeric::recip(&norm);
    let alpha = Covec(pg.0.iter().zip(&lp.gamma.0).map(|(a, g)| a * &inv - g).collect());
    let mut jt: Vec<Vec<Jet>> = vec![vec![zero.clone(); m]; m];
    let mut leaf = Vec::with_capacity(m);
    for k in 0..m {
        let w = lp.omega(&alpha, &lp.frame[k]);
        let jw = JField(matvec(&dphi_inv, &jq_apply(&matvec(&dphi, &w.0))));
        let back = lp.omega_inv(&alpha, &jw);
        for (r, c) in lp.coeffs(&back).into_iter().enumerate() {
            jt[r][k] = c;
        }
        leaf.push(w);
    }
    let sf = conjugating_s_jet(&lp, &jt).ok_or_else(|| Error::Singular("J + J̃ is not invertible".into()))?;
    let beta = Covec(lp.gamma.0.iter().zip(&alpha.0).map(|(a, b)| a + b).collect());
    let mut foliation = Residual::default();
    for i in 0..m {
        for j in i + 1..m {
            foliation.push_zero(&[d_covec(&beta, &leaf[i], &leaf[j]).value()]);
        }
    }
    Ok(PulledBackPair { point: lp, alpha, s: sf, foliation })
}
