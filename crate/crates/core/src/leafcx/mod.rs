//! Leafwise complex calculus on a Levi-flat structure.
//!
//! The structure is given symbolically: a defining couple `(γ, X)`, a frame
//! `E_1..E_{2n}` of `ξ = ker γ` and the matrix of `J` in that frame. Identities
//! are checked pointwise: at a sample point every ingredient is lifted to a
//! Taylor jet (see [`crate::jet`]) and all brackets, frame expansions and
//! inverses are carried out in jet arithmetic, so derivatives of
//! pointwise-solved quantities are exact.
//!
//! Complex values are encoded in the real tangent bundle with `i` acting as
//! `J`: a ξ-valued `(0,1)`-form is a real ξ-valued 1-form `P` with
//! `P(JV) = −J P(V)`.

mod calculus;
mod change;
mod forms;
mod scalc;

use std::sync::Arc;

pub use calculus::*;
pub use change::*;
pub use forms::*;
pub use scalc::*;

use crate::error::{Error, Result};
use crate::excalc::{contract_all, DifferentialForm, VectorField};
use crate::foliation_dgla::{check_points, DefiningCouple};
use crate::jet::{lift, solve, Jet, JetSpace};
use crate::symfield::{Chart, Expr, Tape};

/// Default jet order; the deepest identities nest two derivatives.
pub const DEFAULT_ORDER: usize = 3;
const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureKind {
    /// Integrable leafwise complex structure.
    LeviFlat,
    /// `J² = −I` only; `N_J` may be nonzero.
    AlmostComplex,
    /// No validation at all (non-integrable `γ` for negative tests).
    Unchecked,
}

#[derive(Clone, Debug)]
pub struct LeviFlatStructure {
    couple: DefiningCouple,
    frame: Vec<VectorField>,
    /// Column `k` holds the frame coefficients of `J E_k`.
    j: Vec<Vec<Expr>>,
    kind: StructureKind,
    /// γ, X, frame, J and ι_X dγ compiled together for lifting.
    tape: Tape,
}

impl LeviFlatStructure {
    /// Validates the frame, `J² = −I` and `N_J = 0` at fixed check points.
    pub fn new(couple: DefiningCouple, frame: Vec<VectorField>, j: Vec<Vec<Expr>>) -> Result<Self> {
        let s = Self::build(couple, frame, j, StructureKind::LeviFlat)?;
        s.validate()?;
        Ok(s)
    }

    /// Like [`Self::new`] but accepts a nonzero Nijenhuis tensor.
    pub fn almost_complex(couple: DefiningCouple, frame: Vec<VectorField>, j: Vec<Vec<Expr>>) -> Result<Self> {
        let s = Self::build(couple, frame, j, StructureKind::AlmostComplex)?;
        s.validate()?;
        Ok(s)
    }

    pub fn unchecked(couple: DefiningCouple, frame: Vec<VectorField>, j: Vec<Vec<Expr>>) -> Result<Self> {
        Self::build(couple, frame, j, StructureKind::Unchecked)
    }

    fn build(couple: DefiningCouple, frame: Vec<VectorField>, j: Vec<Vec<Expr>>, kind: StructureKind) -> Result<Self> {
        let n = couple.chart().dim();
        if n.is_multiple_of(2) || frame.len() != n - 1 {
            return Err(Error::Dimension(format!(
                "a {n}-dimensional chart needs an odd dimension and {} frame fields, got {}",
                n.saturating_sub(1),
                frame.len()
            )));
        }
        if j.len() != n - 1 || j.iter().any(|r| r.len() != n - 1) {
            return Err(Error::Dimension(format!("J must be a {0}×{0} matrix", n - 1)));
        }
        if frame.iter().any(|e| e.chart() != couple.chart()) {
            return Err(Error::Dimension("frame lives on a different chart".into()));
        }
        let mut exprs: Vec<Expr> = Vec::new();
        exprs.extend(couple.gamma().one_form_coeffs());
        exprs.extend(couple.x().comps().iter().cloned());
        for e in &frame {
            exprs.extend(e.comps().iter().cloned());
        }
        for row in &j {
            exprs.extend(row.iter().cloned());
        }
        exprs.extend(couple.theta().one_form_coeffs());
        let tape = Tape::compile(&exprs);
        Ok(LeviFlatStructure { couple, frame, j, kind, tape })
    }

    fn validate(&self) -> Result<()> {
        let chart = self.chart().clone();
        let m = self.frame.len();
        let gamma_e: Vec<Expr> = self
            .frame
            .iter()
            .map(|e| contract_all(self.couple.gamma(), std::slice::from_ref(e)))
            .collect::<Result<_>>()?;
        let tape = Tape::compile(&gamma_e);
        for p in check_points(&chart) {
            let vals = tape.eval_f64(&p)?;
            if let Some(v) = vals.iter().find(|v| v.abs() > STRUCTURE_TOL) {
                return Err(Error::Domain(format!("frame field not in ker γ: γ(E) = {v:e}")));
            }
            let lp = LeafPoint::new(self, &p, 1)?;
            // J² = −I
            for k in 0..m {
                let jj = lp.apply_endo_coeffs(&lp.jmat, &lp.apply_endo_coeffs(&lp.jmat, &unit(&lp, m, k)));
                for (i, v) in jj.iter().enumerate() {
                    let want = if i == k { -1.0 } else { 0.0 };
                    if (v.value() - want).abs() > STRUCTURE_TOL {
                        return Err(Error::Domain("J does not square to −I".into()));
                    }
                }
            }
            if self.kind == StructureKind::LeviFlat {
                let b = Bracket::Lie;
                for a in 0..m {
                    for c in a + 1..m {
                        let nv = nijenhuis(&lp, &b, &lp.frame[a], &lp.frame[c]);
                        if nv.values().iter().any(|v| v.abs() > STRUCTURE_TOL) {
                            return Err(Error::Domain("Nijenhuis tensor of J does not vanish".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The lifted ingredients `(γ, X, E, J, ι_X dγ)` composed with a map given
    /// by its component jets, flattened in that order.
    pub(crate) fn eval_composed(&self, space: &Arc<JetSpace>, map: &[Jet]) -> Result<Vec<Jet>> {
        self.tape.eval_composed::<Jet>(space, map)
    }

    pub fn couple(&self) -> &DefiningCouple {
        &self.couple
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.couple.chart()
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn j_matrix(&self) -> &[Vec<Expr>] {
        &self.j
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn is_levi_flat(&self) -> bool {
        self.kind == StructureKind::LeviFlat
    }

    /// Leaf complex dimension `n` (leaves have real dimension `2n`).
    pub fn leaf_complex_dim(&self) -> usize {
        self.frame.len() / 2
    }

    /// Same frame and `J` with a different couple (`ker γ` must be unchanged).
    pub fn with_couple(&self, couple: DefiningCouple) -> Result<Self> {
        let s = Self::build(couple, self.frame.clone(), self.j.clone(), self.kind)?;
        if s.kind != StructureKind::Unchecked {
            s.validate()?;
        }
        Ok(s)
    }

    /// The symbolic field `Σ c_i E_i`.
    pub fn field_from_coeffs(&self, c: &[Expr]) -> VectorField {
        let mut v = VectorField::zero(self.chart());
        for (e, ci) in self.frame.iter().zip(c) {
            v = v.add(&e.scale(ci));
        }
        v
    }

    /// `J` applied to a symbolic combination of frame fields, as frame coefficients.
    pub fn j_coeffs(&self, c: &[Expr]) -> Vec<Expr> {
        (0..c.len())
            .map(|i| c.iter().enumerate().fold(Expr::zero(), |acc, (k, ck)| acc + &self.j[i][k] * ck))
            .collect()
    }
}

fn unit(lp: &LeafPoint, m: usize, k: usize) -> Vec<Jet> {
    (0..m).map(|i| Jet::constant(&lp.space, if i == k { 1.0 } else { 0.0 })).collect()
}

/// A vector field germ: coordinate components as jets.
#[derive(Clone, Debug)]
pub struct JField(pub Vec<Jet>);

impl JField {
    pub fn zero(space: &Arc<JetSpace>) -> JField {
        JField(vec![Jet::zero(space); space.dim()])
    }

    pub fn add(&self, o: &JField) -> JField {
        JField(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &JField) -> JField {
        JField(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> JField {
        JField(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, f: &Jet) -> JField {
        JField(self.0.iter().map(|a| a * f).collect())
    }

    pub fn scale_c(&self, s: f64) -> JField {
        JField(self.0.iter().map(|a| a.scale(s)).collect())
    }

    /// `V(f)`.
    pub fn apply(&self, f: &Jet) -> Jet {
        let mut acc = Jet::zero(f.space());
        for (j, vj) in self.0.iter().enumerate() {
            acc = acc + vj * &f.deriv(j);
        }
        acc
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(Jet::value).collect()
    }
}

/// `[V, W]` for coordinate germs.
pub fn lie(v: &JField, w: &JField) -> JField {
    let n = v.0.len();
    JField(
        (0..n)
            .map(|i| {
                let a = v.apply(&w.0[i]);
                let b = w.apply(&v.0[i]);
                a - b
            })
            .collect(),
    )
}

/// A 1-form germ.
#[derive(Clone, Debug)]
pub struct Covec(pub Vec<Jet>);

impl Covec {
    pub fn eval(&self, v: &JField) -> Jet {
        let mut acc = Jet::zero(self.0[0].space());
        for (a, b) in self.0.iter().zip(&v.0) {
            acc = acc + a * b;
        }
        acc
    }

    pub fn add(&self, o: &Covec) -> Covec {
        Covec(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Covec) -> Covec {
        Covec(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, f: &Jet) -> Covec {
        Covec(self.0.iter().map(|a| a * f).collect())
    }
}

/// The Lie algebra structure on ξ-fields used by an operation.
#[derive(Clone, Debug)]
pub enum Bracket {
    Lie,
    /// `[V, W]_α = ω_α⁻¹[ω_α V, ω_α W]` for a Maurer–Cartan `α ∈ 𝒵¹`.
    Deformed(Covec),
}

/// Every ingredient of a structure lifted to jets at one point.
pub struct LeafPoint {
    pub space: Arc<JetSpace>,
    pub point: Vec<f64>,
    pub gamma: Covec,
    pub x: JField,
    pub frame: Vec<JField>,
    pub jmat: Vec<Vec<Jet>>,
    /// Rows of the inverse of `[E_1 … E_{2n} X]`: `coframe[i](E_k) = δ_ik`, `coframe[i](X) = 0`.
    pub coframe: Vec<Covec>,
    /// `ι_X dγ`.
    pub theta: Covec,
}

impl LeafPoint {
    /// Lifts `s` to jets of the given order at `p` (periodic coordinates reduced).
    pub fn new(s: &LeviFlatStructure, p: &[f64], order: usize) -> Result<LeafPoint> {
        let chart = s.chart();
        chart.check_point(p)?;
        let p = chart.reduce(p);
        let n = chart.dim();
        let m = n - 1;
        let space = JetSpace::new(n, order);
        let mut vals = s.tape.eval::<Jet>(&space, &p)?.into_iter();
        let mut take = |k: usize| -> Vec<Jet> { (&mut vals).take(k).collect() };
        let gamma = Covec(take(n));
        let x = JField(take(n));
        let frame: Vec<JField> = (0..m).map(|_| JField(take(n))).collect();
        let jmat: Vec<Vec<Jet>> = (0..m).map(|_| take(m)).collect();
        let theta = Covec(take(n));
        // M has columns E_1..E_m, X; its inverse has the coframe as rows
        let mat: Vec<Vec<Jet>> = (0..n)
            .map(|r| (0..n).map(|c| if c < m { frame[c].0[r].clone() } else { x.0[r].clone() }).collect())
            .collect();
        let ident: Vec<Vec<Jet>> =
            (0..n).map(|r| (0..n).map(|c| Jet::constant(&space, if r == c { 1.0 } else { 0.0 })).collect()).collect();
        let inv = solve(&mat, &ident)
            .ok_or_else(|| Error::Singular(format!("frame and X are dependent at {p:?}")))?;
        let coframe = inv.into_iter().take(m).map(Covec).collect();
        Ok(LeafPoint { space, point: p, gamma, x, frame, jmat, coframe, theta })
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn constant(&self, v: f64) -> Jet {
        Jet::constant(&self.space, v)
    }

    /// Lifts a symbolic function.
    pub fn lift_fn(&self, f: &Expr) -> Result<Jet> {
        Ok(lift(std::slice::from_ref(f), &self.space, &self.point)?.remove(0))
    }

    pub fn lift_field(&self, v: &VectorField) -> Result<JField> {
        Ok(JField(lift(v.comps(), &self.space, &self.point)?))
    }

    pub fn lift_form(&self, w: &DifferentialForm) -> Result<Covec> {
        if w.degree() != 1 {
            return Err(Error::Dimension(format!("expected a 1-form, got degree {}", w.degree())));
        }
        Ok(Covec(lift(&w.one_form_coeffs(), &self.space, &self.point)?))
    }

    /// Frame coefficients `c_i = coframe_i(V)`.
    pub fn coeffs(&self, v: &JField) -> Vec<Jet> {
        self.coframe.iter().map(|c| c.eval(v)).collect()
    }

    pub fn from_coeffs(&self, c: &[Jet]) -> JField {
        let mut out = JField::zero(&self.space);
        for (e, ci) in self.frame.iter().zip(c) {
            out = out.add(&e.scale(ci));
        }
        out
    }

    pub(crate) fn apply_endo_coeffs(&self, m: &[Vec<Jet>], c: &[Jet]) -> Vec<Jet> {
        m.iter()
            .map(|row| row.iter().zip(c).fold(Jet::zero(&self.space), |acc, (a, b)| acc + a * b))
            .collect()
    }

    /// Applies an endomorphism of ξ given by its frame matrix.
    pub fn apply_endo(&self, m: &[Vec<Jet>], v: &JField) -> JField {
        self.from_coeffs(&self.apply_endo_coeffs(m, &self.coeffs(v)))
    }

    /// `J V` for `V ∈ ξ` (no membership check).
    pub fn j(&self, v: &JField) -> JField {
        self.apply_endo(&self.jmat, v)
    }

    /// `V − γ(V) X`.
    pub fn project(&self, v: &JField) -> JField {
        v.sub(&self.x.scale(&self.gamma.eval(v)))
    }

    pub fn omega(&self, a: &Covec, v: &JField) -> JField {
        v.sub(&self.x.scale(&a.eval(v)))
    }

    pub fn omega_inv(&self, a: &Covec, v: &JField) -> JField {
        v.add(&self.x.scale(&a.eval(v)))
    }

    pub fn bracket(&self, b: &Bracket, v: &JField, w: &JField) -> JField {
        match b {
            Bracket::Lie => lie(v, w),
            Bracket::Deformed(a) => self.omega_inv(a, &lie(&self.omega(a, v), &self.omega(a, w))),
        }
    }

    /// The anchor: `V(f)` for the Lie bracket, `ω_α(V)(f)` for the deformed one.
    pub fn anchor(&self, b: &Bracket, v: &JField, f: &Jet) -> Jet {
        match b {
            Bracket::Lie => v.apply(f),
            Bracket::Deformed(a) => self.omega(a, v).apply(f),
        }
    }

    /// `|γ(V)|` at the point, relative to `|V|`.
    pub fn xi_defect(&self, v: &JField) -> f64 {
        let g = self.gamma.eval(v).value().abs();
        let norm = v.values().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        g / (1.0 + norm)
    }

    /// A germ `Σ f_i E_i` with symbolic coefficients.
    pub fn xi_field(&self, coeffs: &[Expr]) -> Result<JField> {
        let c = lift(coeffs, &self.space, &self.point)?;
        Ok(self.from_coeffs(&c))
    }

    /// Frame matrix of jets for symbolic entries (row-major).
    pub fn lift_matrix(&self, m: &[Vec<Expr>]) -> Result<Vec<Vec<Jet>>> {
        m.iter().map(|row| lift(row, &self.space, &self.point)).collect()
    }
}

/// `J V` for a ξ-field germ; errors if `V ∉ ξ`.
pub fn apply_j(lp: &LeafPoint, v: &JField) -> Result<JField> {
    if lp.xi_defect(v) > 1e-9 {
        return Err(Error::Domain(format!("vector not tangent to ξ (|γ(V)| = {:e})", lp.xi_defect(v))));
    }
    Ok(lp.j(v))
}
