//! Changing the defining couple `(γ, X) ↦ (e^λ γ, e^{−λ} X + U)`.

use super::{beth0, beth1, dbar0, dbar1, h_structure, theta_xi, wedge01_field, Bracket, LeafPoint, LeviFlatStructure, ScalarForm1, XiForm1};
use crate::error::{Error, Result};
use crate::excalc::{exterior_derivative, DifferentialForm};
use crate::foliation_dgla::DefiningCouple;
use crate::residual::Residual;
use crate::symfield::Expr;

/// The structure with couple `(e^λ γ, e^{−λ} X + U)` and the same frame and `J`.
pub fn changed_structure(s: &LeviFlatStructure, lambda: &Expr, u: &[Expr]) -> Result<LeviFlatStructure> {
    if u.len() != s.frame().len() {
        return Err(Error::Dimension(format!("U needs {} frame coefficients", s.frame().len())));
    }
    let c = s.couple();
    let gamma = c.gamma().scale(&lambda.exp());
    let x = c.x().scale(&(-lambda).exp()).add(&s.field_from_coeffs(u));
    let couple = if s.kind() == super::StructureKind::Unchecked {
        DefiningCouple::new_unchecked(gamma, x)?
    } else {
        DefiningCouple::new(gamma, x)?
    };
    s.with_couple(couple)
}

/// `Ĥ` computed on the new couple against
/// `e^{−λ}H + ∂̄U − ((ι_X dγ)^{0,1} − ∂̄λ) ⊗ U`.
pub fn change_couple_h_residual(
    s: &LeviFlatStructure,
    lambda: &Expr,
    u: &[Expr],
    points: &[Vec<f64>],
    order: usize,
) -> Result<Residual> {
    let sh = changed_structure(s, lambda, u)?;
    let dl = exterior_derivative(&DifferentialForm::function(s.chart(), lambda.clone()));
    let mut r = Residual::default();
    for p in points {
        let lp = LeafPoint::new(s, p, order)?;
        let lph = LeafPoint::new(&sh, p, order)?;
        let lhs = h_structure(&lph);
        let el = lp.lift_fn(&(-lambda).exp())?;
        let uf = lp.xi_field(u)?;
        let dlc = lp.lift_form(&dl)?;
        let coef = theta_xi(&lp).sub(&ScalarForm1::restrict(&lp, &dlc));
        let rhs = h_structure(&lp)
            .scale(&el)
            .add(&dbar0(&lp, &Bracket::Lie, &uf))
            .sub(&wedge01_field(&lp, &coef, &uf));
        r.push_all(&lhs.values(), &rhs.values());
    }
    Ok(r)
}

/// A ξ-valued cochain of degree 0 or 1 given by frame coefficients.
#[derive(Clone, Debug)]
pub enum XiCochain {
    Field(Vec<Expr>),
    /// Column `k` holds the frame coefficients of `P(E_k)`.
    Form(Vec<Vec<Expr>>),
}

impl XiCochain {
    pub fn degree(&self) -> usize {
        match self {
            XiCochain::Field(_) => 0,
            XiCochain::Form(_) => 1,
        }
    }
}

/// `ℶ̄_{γ̂,X̂}(e^{−λ}P) = e^{−λ} ℶ̄_{γ,X} P`.
pub fn beth_conjugation_residual(
    s: &LeviFlatStructure,
    lambda: &Expr,
    u: &[Expr],
    p: &XiCochain,
    points: &[Vec<f64>],
    order: usize,
) -> Result<Residual> {
    let sh = changed_structure(s, lambda, u)?;
    let mut r = Residual::default();
    for pt in points {
        let lp = LeafPoint::new(s, pt, order)?;
        let lph = LeafPoint::new(&sh, pt, order)?;
        let el = lp.lift_fn(&(-lambda).exp())?;
        let (l, rr) = match p {
            XiCochain::Field(c) => {
                let v = lp.xi_field(c)?;
                let l = beth0(&lph, &v.scale(&el));
                let rr = beth0(&lp, &v).scale(&el);
                (l.values(), rr.values())
            }
            XiCochain::Form(m) => {
                let f = XiForm1::from_matrix(&lp, &lp.lift_matrix(m)?);
                let l = beth1(&lph, &f.scale(&el));
                let rr = beth1(&lp, &f).map(|v| v.scale(&el));
                (l.values(), rr.values())
            }
        };
        r.push_all(&l, &rr);
    }
    Ok(r)
}

/// `∂̄ ∘ ∂̄` on a ξ-field, which vanishes for integrable `J`.
pub fn dbar_squared(lp: &LeafPoint, w: &super::JField) -> super::XiForm2 {
    dbar1(lp, &Bracket::Lie, &dbar0(lp, &Bracket::Lie, w))
}
