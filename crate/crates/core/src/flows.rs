//! Numerical flows of vector fields, pullbacks, and the gauge action of
//! flows on Maurer–Cartan elements, with finite-difference derivatives.
//!
//! The gauge action of a diffeomorphism `Φ` on `α ∈ 𝒵¹` is
//! `χ(Φ)(α) = (Φ*(γ+α)(X))⁻¹ Φ*(γ+α) − γ`. For the flow of `Y` we act by
//! `Φ = Φ_{−t}^Y`, the pullback along the inverse flow, which makes
//! `d/dt χ(Φ)(0)|₀ = −δ(ι_Y γ)`.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::excalc::{DifferentialForm, VectorField};
use crate::foliation_dgla::DefiningCouple;
use crate::leafcx::{s_from_structures, LeviFlatStructure};
use crate::symfield::{Expr, Tape};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Central-difference offsets; the second is used for one Richardson level.
pub const FD_OFFSETS: [f64; 2] = [1e-3, 5e-4];
/// `|Φ*(γ+α)(X)|` below this is outside the domain of the gauge action.
pub const GAUGE_DENOMINATOR_GUARD: f64 = 1e-6;
const MAX_STEPS: f64 = 1e6;

/// Image point and Jacobian of a flow map.
pub type FlowImage = (Vec<f64>, DMatrix<f64>);

/// `Φ_t^Y` with its tangent map, integrated by classical RK4 on the point
/// and on the variational equation `A' = DY·A`.
pub struct FlowMap {
    t: f64,
    h: f64,
    dim: usize,
    /// `Y` components followed by `∂_j Y^i`, row-major.
    tape: Tape,
    cache: Mutex<HashMap<Vec<u64>, FlowImage>>,
}

impl FlowMap {
    pub fn new(y: &VectorField, t: f64, h: f64) -> Result<FlowMap> {
        if !(h > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("invalid flow step h = {h} or time t = {t}")));
        }
        if t.abs() / h > MAX_STEPS {
            return Err(Error::Domain(format!("|t|/h = {:e} exceeds {MAX_STEPS:e}", t.abs() / h)));
        }
        let n = y.chart().dim();
        let mut exprs: Vec<Expr> = y.comps().to_vec();
        for i in 0..n {
            for j in 0..n {
                exprs.push(y.comp(i).diff(j));
            }
        }
        Ok(FlowMap { t, h, dim: n, tape: Tape::compile(&exprs), cache: Mutex::new(HashMap::new()) })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    fn field(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.dim;
        let v = self.tape.eval_f64(x)?;
        let y = DVector::from_column_slice(&v[..n]);
        let dy = DMatrix::from_row_slice(n, n, &v[n..]);
        Ok((y, dy))
    }

    fn integrate(&self, p: &[f64]) -> Result<FlowImage> {
        let n = self.dim;
        let mut x = DVector::from_column_slice(p);
        let mut a = DMatrix::<f64>::identity(n, n);
        if self.t == 0.0 {
            return Ok((p.to_vec(), a));
        }
        let steps = (self.t.abs() / self.h).ceil().max(1.0) as usize;
        let dt = self.t / steps as f64;
        for _ in 0..steps {
            let (k1, j1) = self.field(x.as_slice())?;
            let x2 = &x + &k1 * (dt / 2.0);
            let (k2, j2) = self.field(x2.as_slice())?;
            let x3 = &x + &k2 * (dt / 2.0);
            let (k3, j3) = self.field(x3.as_slice())?;
            let x4 = &x + &k3 * dt;
            let (k4, j4) = self.field(x4.as_slice())?;
            let a1 = &j1 * &a;
            let a2 = &j2 * (&a + &a1 * (dt / 2.0));
            let a3 = &j3 * (&a + &a2 * (dt / 2.0));
            let a4 = &j4 * (&a + &a3 * dt);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            a += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
        }
        Ok((x.as_slice().to_vec(), a))
    }

    /// `(Φ_t(p), DΦ_t(p))`, cached per point.
    pub fn apply(&self, p: &[f64]) -> Result<FlowImage> {
        if p.len() != self.dim {
            return Err(Error::Dimension(format!("point of length {} for a {}-dimensional flow", p.len(), self.dim)));
        }
        let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.cache.lock().expect("flow cache").get(&key) {
            return Ok(hit.clone());
        }
        let img = self.integrate(p)?;
        self.cache.lock().expect("flow cache").insert(key, img.clone());
        Ok(img)
    }
}

pub fn integrate_flow(y: &VectorField, t: f64, p: &[f64], h: f64) -> Result<FlowImage> {
    FlowMap::new(y, t, h)?.apply(p)
}

fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(v)).as_slice().to_vec()
}

/// `((Φ_t^Y)* ω)(p; args) = ω(Φ_t(p); DΦ_t·args)`.
pub fn pullback_form_numeric(
    y: &VectorField,
    t: f64,
    w: &DifferentialForm,
    p: &[f64],
    args: &[VectorField],
) -> Result<f64> {
    let (q, a) = integrate_flow(y, t, p, DEFAULT_STEP)?;
    let vs = args.iter().map(|v| Ok(mat_vec(&a, &v.evaluate(p)?))).collect::<Result<Vec<_>>>()?;
    w.eval_at(&q, &vs)
}

/// Evaluates `χ(Φ_{−t}^Y)(α)` on numeric vectors at one point.
pub struct GaugeAction {
    flow: FlowMap,
    /// Components of `γ + α`.
    beta: Tape,
    gamma: Tape,
    x: Tape,
}

impl GaugeAction {
    pub fn new(c: &DefiningCouple, alpha: &DifferentialForm, y: &VectorField, t: f64) -> Result<GaugeAction> {
        if alpha.degree() != 1 || alpha.chart() != c.chart() || y.chart() != c.chart() {
            return Err(Error::Dimension("gauge action needs a 1-form and a field on the couple's chart".into()));
        }
        let beta = c.gamma().add(alpha);
        Ok(GaugeAction {
            flow: FlowMap::new(y, -t, DEFAULT_STEP)?,
            beta: Tape::compile(&beta.one_form_coeffs()),
            gamma: Tape::compile(&c.gamma().one_form_coeffs()),
            x: Tape::compile(c.x().comps()),
        })
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// The pulled-back flow data at `p`: `(Ψ(p), DΨ_p, 1/Ψ*(γ+α)(X_p))`.
    fn frame_at(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>, f64)> {
        let (q, a) = self.flow.apply(p)?;
        let bq = self.beta.eval_f64(&q)?;
        let xp = self.x.eval_f64(p)?;
        let den = Self::dot(&bq, &mat_vec(&a, &xp));
        if !den.is_finite() || den.abs() < GAUGE_DENOMINATOR_GUARD {
            return Err(Error::Domain(format!(
                "gauge normalisation Φ*(γ+α)(X) = {den:e} is outside the domain of the action"
            )));
        }
        Ok((q, a, bq, den))
    }

    /// `χ(p; v)`.
    pub fn eval(&self, p: &[f64], v: &[f64]) -> Result<f64> {
        let (_, a, bq, den) = self.frame_at(p)?;
        let g = self.gamma.eval_f64(p)?;
        Ok(Self::dot(&bq, &mat_vec(&a, v)) / den - Self::dot(&g, v))
    }

    /// All components `χ(p; ∂_i)`.
    pub fn components(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (_, a, bq, den) = self.frame_at(p)?;
        let g = self.gamma.eval_f64(p)?;
        let pulled = a.transpose() * DVector::from_column_slice(&bq);
        Ok(pulled.iter().zip(&g).map(|(b, gi)| b / den - gi).collect())
    }
}

pub fn gauge_action_numeric(
    y: &VectorField,
    t: f64,
    alpha: &DifferentialForm,
    c: &DefiningCouple,
    p: &[f64],
    arg: &VectorField,
) -> Result<f64> {
    GaugeAction::new(c, alpha, y, t)?.eval(p, &arg.evaluate(p)?)
}

/// Central difference at offsets `h` and `h/2` combined by one Richardson step.
pub fn richardson(mut f: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let [h1, h2] = FD_OFFSETS;
    let mut d = |h: f64| -> Result<Vec<f64>> {
        let a = f(h)?;
        let b = f(-h)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
    };
    let d1 = d(h1)?;
    let d2 = d(h2)?;
    let r = (h1 / h2).powi(2);
    Ok(d1.iter().zip(&d2).map(|(a, b)| (r * b - a) / (r - 1.0)).collect())
}

/// `d/dt χ(Φ_{−t}^Y)(α)(p; arg)` at `t = 0`. The analytic value for `α = 0`
/// is `−δ(ι_Y γ)(p; arg)`.
pub fn gauge_derivative_fd(
    y: &VectorField,
    alpha: &DifferentialForm,
    c: &DefiningCouple,
    p: &[f64],
    arg: &VectorField,
) -> Result<f64> {
    let v = arg.evaluate(p)?;
    let d = richardson(|t| Ok(vec![GaugeAction::new(c, alpha, y, t)?.eval(p, &v)?]))?;
    Ok(d[0])
}

/// Numeric values of the structure tensors at a point.
struct StructureTapes {
    frame: Tape,
    j: Tape,
    x: Tape,
    m: usize,
    n: usize,
}

impl StructureTapes {
    fn new(s: &LeviFlatStructure) -> StructureTapes {
        let mut fr = Vec::new();
        for e in s.frame() {
            fr.extend(e.comps().iter().cloned());
        }
        let j: Vec<Expr> = s.j_matrix().iter().flatten().cloned().collect();
        StructureTapes {
            frame: Tape::compile(&fr),
            j: Tape::compile(&j),
            x: Tape::compile(s.couple().x().comps()),
            m: s.frame().len(),
            n: s.chart().dim(),
        }
    }

    /// Columns `E_1..E_m, X` as an `n × n` matrix.
    fn basis(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let f = self.frame.eval_f64(p)?;
        let x = self.x.eval_f64(p)?;
        let mut b = DMatrix::zeros(self.n, self.n);
        for k in 0..self.m {
            for i in 0..self.n {
                b[(i, k)] = f[k * self.n + i];
            }
        }
        for i in 0..self.n {
            b[(i, self.m)] = x[i];
        }
        Ok(b)
    }

    fn jmat(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(self.m, self.m, &self.j.eval_f64(p)?))
    }
}

/// The frame matrix of `S_t`, the endomorphism of `ξ_p` with
/// `J̃ = (I+S_t)J(I+S_t)⁻¹`, where `J̃ = ω⁻¹ DΨ⁻¹ J DΨ ω` is `J` carried back
/// along `Ψ = Φ_{−t}^Y` and `ω(V) = V − α_t(V)X` with `α_t = χ(Ψ)(0)`.
pub fn s_gauge_matrix(s: &LeviFlatStructure, y: &VectorField, t: f64, p: &[f64]) -> Result<DMatrix<f64>> {
    let c = s.couple();
    let zero = DifferentialForm::zero(c.chart(), 1);
    let g = GaugeAction::new(c, &zero, y, t)?;
    let tapes = StructureTapes::new(s);
    let (q, a) = g.flow.apply(p)?;
    let ainv = a.clone().try_inverse().ok_or_else(|| Error::Singular("flow Jacobian is singular".into()))?;
    let bp = tapes.basis(p)?;
    let bq = tapes.basis(&q)?;
    let bp_inv = bp.clone().try_inverse().ok_or_else(|| Error::Singular("frame degenerate at p".into()))?;
    let bq_inv = bq.clone().try_inverse().ok_or_else(|| Error::Singular("frame degenerate at q".into()))?;
    let jq = tapes.jmat(&q)?;
    let (m, n) = (tapes.m, tapes.n);
    let xp = DVector::from_column_slice(&tapes.x.eval_f64(p)?);
    let alpha = DVector::from_column_slice(&g.components(p)?);
    let mut jt = DMatrix::zeros(m, m);
    for k in 0..m {
        let e = bp.column(k).into_owned();
        let u = &e - &xp * alpha.dot(&e);
        let w = &a * u;
        let cw = &bq_inv * &w;
        let mut jw = DVector::zeros(n);
        for i in 0..m {
            let coef: f64 = (0..m).map(|l| jq[(i, l)] * cw[l]).sum();
            jw += bq.column(i) * coef;
        }
        let z = &ainv * jw;
        let back = &z + &xp * alpha.dot(&z);
        let cb = &bp_inv * back;
        for i in 0..m {
            jt[(i, k)] = cb[i];
        }
    }
    let jp = tapes.jmat(p)?;
    if (&jp + &jt).determinant().abs() < 1e-6 {
        return Err(Error::Singular("det(J + J̃) below 1e-6".into()));
    }
    s_from_structures(&jp, &jt).ok_or_else(|| Error::Singular("J + J̃ is not invertible".into()))
}

/// `d/dt S_t(E_k)` at `t = 0` as coordinate components at `p`; the analytic
/// value is `−H_Y(E_k)`.
pub fn s_gauge_fd(s: &LeviFlatStructure, y: &VectorField, p: &[f64], k: usize) -> Result<Vec<f64>> {
    let m = s.frame().len();
    if k >= m {
        return Err(Error::Dimension(format!("frame index {k} out of range")));
    }
    let tapes = StructureTapes::new(s);
    let bp = tapes.basis(p)?;
    richardson(|t| {
        let sm = s_gauge_matrix(s, y, t, p)?;
        let mut v = DVector::zeros(tapes.n);
        for i in 0..m {
            v += bp.column(i) * sm[(i, k)];
        }
        Ok(v.as_slice().to_vec())
    })
}

/// Spatial central-difference estimate of `dβ̃ ∧ β̃` for `β̃ = γ + χ(Φ_{−t}^Y)(α)`,
/// the integrability defect of the gauged element, as the list of its
/// components on increasing index triples.
pub fn gauged_integrability_numeric(
    c: &DefiningCouple,
    alpha: &DifferentialForm,
    y: &VectorField,
    t: f64,
    p: &[f64],
) -> Result<Vec<f64>> {
    let g = GaugeAction::new(c, alpha, y, t)?;
    let gam = Tape::compile(&c.gamma().one_form_coeffs());
    let n = p.len();
    let beta = |x: &[f64]| -> Result<Vec<f64>> {
        let ch = g.components(x)?;
        let gv = gam.eval_f64(x)?;
        Ok(ch.iter().zip(&gv).map(|(a, b)| a + b).collect())
    };
    let h = 1e-4;
    let mut grad = vec![vec![0.0; n]; n];
    for (i, row) in grad.iter_mut().enumerate() {
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[i] += h;
        pm[i] -= h;
        let bp = beta(&pp)?;
        let bm = beta(&pm)?;
        for j in 0..n {
            row[j] = (bp[j] - bm[j]) / (2.0 * h);
        }
    }
    let b = beta(p)?;
    let db = |i: usize, j: usize| grad[i][j] - grad[j][i];
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push(db(i, j) * b[k] + db(j, k) * b[i] + db(k, i) * b[j]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfield::Chart;

    fn t3() -> std::sync::Arc<Chart> {
        Chart::torus(&["x", "y", "t"])
    }

    #[test]
    fn translation_flow() {
        let c = t3();
        let (q, a) = integrate_flow(&VectorField::coordinate(&c, 0), 1.0, &[0.1, 0.2, 0.3], DEFAULT_STEP).unwrap();
        assert!((q[0] - 1.1).abs() < 1e-12 && (q[1] - 0.2).abs() < 1e-12);
        assert!((a - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn short_flow_matches_taylor() {
        let c = t3();
        let y = VectorField::new(c.clone(), vec![Expr::zero(), Expr::zero(), Expr::var(0).cos()]).unwrap();
        let p = [0.4, 1.0, 2.0];
        let (q, a) = integrate_flow(&y, 1e-3, &p, DEFAULT_STEP).unwrap();
        assert!((q[2] - (2.0 + 1e-3 * 0.4f64.cos())).abs() < 1e-8);
        assert!((a[(2, 0)] + 1e-3 * 0.4f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn step_validation() {
        let c = t3();
        let y = VectorField::coordinate(&c, 0);
        assert!(integrate_flow(&y, 1.0, &[0.0; 3], 0.0).is_err());
        assert!(integrate_flow(&y, 1e4, &[0.0; 3], 1e-3).is_err());
    }

    #[test]
    fn gauge_derivative_of_cos_x_dt() {
        let c = t3();
        let couple = DefiningCouple::new(DifferentialForm::coordinate(&c, 2), VectorField::coordinate(&c, 2)).unwrap();
        let y = VectorField::new(c.clone(), vec![Expr::zero(), Expr::zero(), Expr::var(0).cos()]).unwrap();
        let zero = DifferentialForm::zero(&c, 1);
        let p = [0.7, 0.2, 1.3];
        let d = gauge_derivative_fd(&y, &zero, &couple, &p, &VectorField::coordinate(&c, 0)).unwrap();
        assert!((d - 0.7f64.sin()).abs() < 1e-6, "{d}");
    }
}
