//! The differential graded Lie algebra attached to a defining couple `(γ, X)`.
//!
//! `{α, β} = L_X α ∧ β − α ∧ L_X β`, `δ = d + {γ, ·}`, and the sub-algebra
//! `𝒵* = {α : ι_X α = 0}` whose Maurer–Cartan elements parametrise nearby
//! codimension-one foliations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::excalc::{
    contract_all, exterior_derivative, interior_product, lie_derivative_form, wedge,
    DifferentialForm, VectorField,
};
use crate::residual::Residual;
use crate::sampling;
use crate::symfield::{Chart, Expr};

/// Tolerance used when a constructor validates a couple.
pub const COUPLE_TOL: f64 = 1e-9;
const CHECK_POINTS: usize = 16;

/// A nonsingular 1-form `γ` and a vector field `X` with `γ(X) = 1`.
#[derive(Clone, Debug)]
pub struct DefiningCouple {
    gamma: DifferentialForm,
    x: VectorField,
}

/// Fixed points used to validate constructions.
pub fn check_points(chart: &Chart) -> Vec<Vec<f64>> {
    let mut rng = sampling::stream(0, "validation", "points", 0);
    (0..CHECK_POINTS).map(|_| sampling::point(&mut rng, chart.dim())).collect()
}

impl DefiningCouple {
    /// Validates `γ(X) = 1` and `dγ ∧ γ = 0` to [`COUPLE_TOL`] at fixed check points.
    pub fn new(gamma: DifferentialForm, x: VectorField) -> Result<DefiningCouple> {
        let c = DefiningCouple::new_unchecked(gamma, x)?;
        c.check_normalised()?;
        let pts = check_points(c.chart());
        let r = form_residual(&c.frobenius_iii(), &pts)?;
        if r.max_rel > COUPLE_TOL {
            return Err(Error::InvalidCouple(format!(
                "dγ∧γ does not vanish (residual {:.3e})",
                r.max_rel
            )));
        }
        Ok(c)
    }

    /// Skips every check except shapes; for negative tests on non-integrable forms.
    pub fn new_unchecked(gamma: DifferentialForm, x: VectorField) -> Result<DefiningCouple> {
        if gamma.degree() != 1 {
            return Err(Error::InvalidCouple(format!("γ has degree {}", gamma.degree())));
        }
        if gamma.chart() != x.chart() {
            return Err(Error::Dimension("γ and X live on different charts".into()));
        }
        Ok(DefiningCouple { gamma, x })
    }

    fn check_normalised(&self) -> Result<()> {
        let gx = contract_all(&self.gamma, std::slice::from_ref(&self.x))?;
        for p in check_points(self.chart()) {
            let v = gx.eval(&p)?;
            if (v - 1.0).abs() > COUPLE_TOL {
                return Err(Error::InvalidCouple(format!("γ(X) = {v} at {p:?}")));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.gamma.chart()
    }

    pub fn gamma(&self) -> &DifferentialForm {
        &self.gamma
    }

    pub fn x(&self) -> &VectorField {
        &self.x
    }

    /// `ι_X dγ`.
    pub fn theta(&self) -> DifferentialForm {
        interior_product(&self.x, &exterior_derivative(&self.gamma)).expect("same chart")
    }

    fn frobenius_iii(&self) -> DifferentialForm {
        wedge(&exterior_derivative(&self.gamma), &self.gamma).expect("same chart")
    }
}

/// `{α, β} = L_X α ∧ β − α ∧ L_X β`.
pub fn dgla_bracket(
    c: &DefiningCouple,
    a: &DifferentialForm,
    b: &DifferentialForm,
) -> Result<DifferentialForm> {
    let la = lie_derivative_form(&c.x, a)?;
    let lb = lie_derivative_form(&c.x, b)?;
    Ok(wedge(&la, b)?.sub(&wedge(a, &lb)?))
}

/// `δα = dα + {γ, α}`.
pub fn delta(c: &DefiningCouple, a: &DifferentialForm) -> Result<DifferentialForm> {
    Ok(exterior_derivative(a).add(&dgla_bracket(c, &c.gamma, a)?))
}

/// `ω − γ ∧ ι_X ω`, the projection onto `𝒵*` (valid when `γ(X) = 1`).
pub fn project_z(c: &DefiningCouple, w: &DifferentialForm) -> Result<DifferentialForm> {
    if w.degree() == 0 {
        return Ok(w.clone());
    }
    Ok(w.sub(&wedge(&c.gamma, &interior_product(&c.x, w)?)?))
}

/// Componentwise size of `ι_X α` at `points`.
pub fn z_membership_residual(
    c: &DefiningCouple,
    a: &DifferentialForm,
    points: &[Vec<f64>],
) -> Result<Residual> {
    form_residual(&interior_product(&c.x, a)?, points)
}

fn require_z(c: &DefiningCouple, a: &DifferentialForm) -> Result<()> {
    let r = z_membership_residual(c, a, &check_points(c.chart()))?;
    if r.max_rel > COUPLE_TOL {
        return Err(Error::Domain(format!("form is not in 𝒵 (ι_Xα residual {:.3e})", r.max_rel)));
    }
    Ok(())
}

/// `δα + ½{α, α}` for `α ∈ 𝒵¹`.
pub fn mc_residual(c: &DefiningCouple, a: &DifferentialForm) -> Result<DifferentialForm> {
    if a.degree() != 1 {
        return Err(Error::Domain(format!("Maurer–Cartan residual needs a 1-form, got degree {}", a.degree())));
    }
    require_z(c, a)?;
    Ok(delta(c, a)?.add(&dgla_bracket(c, a, a)?.scale_const(0.5)))
}

/// `β ∧ dβ` for `β = γ + α`; vanishes exactly when `ker β` is integrable.
pub fn integrability_form(c: &DefiningCouple, a: &DifferentialForm) -> Result<DifferentialForm> {
    let b = c.gamma.add(a);
    wedge(&b, &exterior_derivative(&b))
}

/// The three equivalent integrability conditions of a couple.
#[derive(Clone, Debug)]
pub struct FrobeniusReport {
    /// `dγ ∧ γ`
    pub iii: DifferentialForm,
    /// `dγ + ι_X dγ ∧ γ`
    pub iv: DifferentialForm,
    /// `dγ + ½{γ, γ}`
    pub v: DifferentialForm,
}

impl FrobeniusReport {
    pub fn residuals(&self, points: &[Vec<f64>]) -> Result<[Residual; 3]> {
        Ok([
            form_residual(&self.iii, points)?,
            form_residual(&self.iv, points)?,
            form_residual(&self.v, points)?,
        ])
    }
}

/// Errors if `γ(X) ≠ 1`; integrability itself is what the report measures.
pub fn frobenius_report(c: &DefiningCouple) -> Result<FrobeniusReport> {
    c.check_normalised()?;
    let dg = exterior_derivative(&c.gamma);
    let iii = wedge(&dg, &c.gamma)?;
    let iv = dg.add(&wedge(&c.theta(), &c.gamma)?);
    let v = dg.add(&dgla_bracket(c, &c.gamma, &c.gamma)?.scale_const(0.5));
    Ok(FrobeniusReport { iii, iv, v })
}

/// `d_b α = dα − γ ∧ ι_X dα`.
pub fn leafwise_d(c: &DefiningCouple, a: &DifferentialForm) -> Result<DifferentialForm> {
    let da = exterior_derivative(a);
    Ok(da.sub(&wedge(&c.gamma, &interior_product(&c.x, &da)?)?))
}

/// `ι_X(γ ∧ dα)`, the other expression for `d_b α`.
pub fn leafwise_d_alt(c: &DefiningCouple, a: &DifferentialForm) -> Result<DifferentialForm> {
    interior_product(&c.x, &wedge(&c.gamma, &exterior_derivative(a))?)
}

/// `ω_α(V) = V − α(V) X`.
pub fn omega_alpha(c: &DefiningCouple, a: &DifferentialForm, v: &VectorField) -> Result<VectorField> {
    let av = contract_all(a, std::slice::from_ref(v))?;
    Ok(v.sub(&c.x.scale(&av)))
}

/// `ω_α⁻¹(V) = V + α(V) X`, inverse to [`omega_alpha`] because `α(X) = 0`.
pub fn omega_alpha_inv(
    c: &DefiningCouple,
    a: &DifferentialForm,
    v: &VectorField,
) -> Result<VectorField> {
    let av = contract_all(a, std::slice::from_ref(v))?;
    Ok(v.add(&c.x.scale(&av)))
}

/// Componentwise residual of a form against zero at `points`.
pub fn form_residual(w: &DifferentialForm, points: &[Vec<f64>]) -> Result<Residual> {
    let mut r = Residual::default();
    for p in points {
        r.push_zero(&w.dense_values(p)?);
    }
    Ok(r)
}

/// Componentwise residual between two forms of equal degree.
pub fn form_diff_residual(
    l: &DifferentialForm,
    r: &DifferentialForm,
    points: &[Vec<f64>],
) -> Result<Residual> {
    if l.degree() != r.degree() {
        return Err(Error::Dimension(format!("degrees {} and {} differ", l.degree(), r.degree())));
    }
    let mut out = Residual::default();
    for p in points {
        out.push_all(&l.dense_values(p)?, &r.dense_values(p)?);
    }
    Ok(out)
}

/// `ι_Y γ` as a 0-form.
pub fn gamma_of(c: &DefiningCouple, y: &VectorField) -> Result<DifferentialForm> {
    interior_product(y, &c.gamma)
}

/// Bracket restricted to `𝒵*`: `ι_X dα ∧ β − α ∧ ι_X dβ`.
pub fn dgla_bracket_reduced(
    c: &DefiningCouple,
    a: &DifferentialForm,
    b: &DifferentialForm,
) -> Result<DifferentialForm> {
    let la = interior_product(&c.x, &exterior_derivative(a))?;
    let lb = interior_product(&c.x, &exterior_derivative(b))?;
    Ok(wedge(&la, b)?.sub(&wedge(a, &lb)?))
}

/// Constant-coefficient helper: `Σ c_i dx^i`.
pub fn constant_one_form(chart: &Arc<Chart>, c: &[f64]) -> DifferentialForm {
    DifferentialForm::one_form(chart, c.iter().map(|&v| Expr::constant(v)).collect())
        .expect("dimension matches")
}
