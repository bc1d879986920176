//! Vector fields and differential forms with symbolic coefficients.
//!
//! Forms are sparse maps from strictly increasing index tuples to
//! coefficients. Evaluation uses the determinant convention
//! `(dx^{i_1} ∧ … ∧ dx^{i_k})(v_1, …, v_k) = det[dx^{i_a}(v_b)]`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symfield::{Chart, Expr, ScalarField, Tape};

#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Arc<Chart>, comps: Vec<Expr>) -> Result<VectorField> {
        if comps.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "{} components on a {}-dimensional chart",
                comps.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart, comps })
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| f * c).collect() }
    }

    fn zip(&self, o: &VectorField, f: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Directional derivative `V(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.comps
            .iter()
            .enumerate()
            .fold(Expr::zero(), |acc, (i, c)| if c.is_zero() { acc } else { acc + c * f.diff(i) })
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check_point(p)?;
        Tape::compile(&self.comps).eval_f64(&self.chart.reduce(p))
    }

    pub fn substitute(&self, i: usize, v: f64) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| c.substitute(i, v)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sign of the permutation sorting `idx`, or `None` on a repeated index.
fn sort_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// All strictly increasing `k`-tuples from `0..n` in lexicographic order.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

impl DifferentialForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> DifferentialForm {
        DifferentialForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn function(chart: &Arc<Chart>, f: Expr) -> DifferentialForm {
        let mut w = DifferentialForm::zero(chart, 0);
        w.add_term(vec![], f);
        w
    }

    /// The 1-form `Σ c_i dx^i`.
    pub fn one_form(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<DifferentialForm> {
        if coeffs.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "{} coefficients on a {}-dimensional chart",
                coeffs.len(),
                chart.dim()
            )));
        }
        let mut w = DifferentialForm::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            w.add_term(vec![i], c);
        }
        Ok(w)
    }

    /// `dx^i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> DifferentialForm {
        let mut w = DifferentialForm::zero(chart, 1);
        w.add_term(vec![i], Expr::one());
        w
    }

    /// Adds `c dx^{idx}` for an arbitrary index list, reordering with sign.
    pub fn add_term(&mut self, mut idx: Vec<usize>, c: Expr) {
        assert_eq!(idx.len(), self.degree, "term degree mismatch");
        assert!(idx.iter().all(|&i| i < self.chart.dim()), "index out of range");
        if c.is_zero() {
            return;
        }
        let Some(sign) = sort_sign(&mut idx) else { return };
        let c = if sign < 0.0 { -c } else { c };
        let entry = match self.terms.remove(&idx) {
            Some(prev) => prev + c,
            None => c,
        };
        if !entry.is_zero() {
            self.terms.insert(idx, entry);
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficients of a 1-form, dense.
    pub fn one_form_coeffs(&self) -> Vec<Expr> {
        assert_eq!(self.degree, 1);
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), f(c));
        }
        out
    }

    pub fn add(&self, o: &DifferentialForm) -> DifferentialForm {
        assert_eq!(self.degree, o.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (i, c) in &o.terms {
            out.add_term(i.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &DifferentialForm) -> DifferentialForm {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        self.map(|c| -c)
    }

    pub fn scale(&self, f: &Expr) -> DifferentialForm {
        self.map(|c| f * c)
    }

    pub fn scale_const(&self, s: f64) -> DifferentialForm {
        self.map(|c| c.scale(s))
    }

    pub fn substitute(&self, i: usize, v: f64) -> DifferentialForm {
        self.map(|c| c.substitute(i, v))
    }

    /// The coefficient of a 0-form.
    pub fn as_function(&self) -> Expr {
        assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    /// Values of every component `ω_I(p)`, `I` over all increasing tuples.
    pub fn dense_values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.chart.check_point(p)?;
        let tuples = increasing_tuples(self.chart.dim(), self.degree);
        let exprs: Vec<Expr> = tuples.iter().map(|t| self.coeff(t)).collect();
        Tape::compile(&exprs).eval_f64(&self.chart.reduce(p))
    }

    /// `ω_p(v_1, …, v_k)` for numeric tangent vectors at `p`.
    pub fn eval_at(&self, p: &[f64], vs: &[Vec<f64>]) -> Result<f64> {
        if vs.len() != self.degree {
            return Err(Error::Dimension(format!(
                "{}-form evaluated on {} vectors",
                self.degree,
                vs.len()
            )));
        }
        self.chart.check_point(p)?;
        let idx: Vec<&Vec<usize>> = self.terms.keys().collect();
        let exprs: Vec<Expr> = self.terms.values().cloned().collect();
        let vals = Tape::compile(&exprs).eval_f64(&self.chart.reduce(p))?;
        let mut total = 0.0;
        for (i, c) in idx.iter().zip(vals) {
            let m: Vec<Vec<f64>> =
                i.iter().map(|&a| vs.iter().map(|v| v[a]).collect()).collect();
            total += c * det(&m);
        }
        Ok(total)
    }
}

/// Determinant by Laplace expansion; forms here have degree at most the chart dimension.
pub(crate) fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => {
            let mut s = 0.0;
            for col in 0..n {
                if m[0][col] == 0.0 {
                    continue;
                }
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * m[0][col] * det(&minor);
            }
            s
        }
    }
}

fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::Dimension("operands live on different charts".into()))
    }
}

pub fn exterior_derivative(w: &DifferentialForm) -> DifferentialForm {
    let n = w.chart.dim();
    let mut out = DifferentialForm::zero(&w.chart, w.degree + 1);
    if w.degree >= n {
        return out;
    }
    for (idx, c) in &w.terms {
        for j in 0..n {
            if idx.contains(&j) {
                continue;
            }
            let dc = c.diff(j);
            if dc.is_zero() {
                continue;
            }
            let mut t = Vec::with_capacity(idx.len() + 1);
            t.push(j);
            t.extend_from_slice(idx);
            out.add_term(t, dc);
        }
    }
    out
}

pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    same_chart(&a.chart, &b.chart)?;
    let deg = a.degree + b.degree;
    let mut out = DifferentialForm::zero(&a.chart, deg);
    if deg > a.chart.dim() {
        return Ok(out);
    }
    for (i, f) in &a.terms {
        for (j, g) in &b.terms {
            if i.iter().any(|x| j.contains(x)) {
                continue;
            }
            let mut t = i.clone();
            t.extend_from_slice(j);
            out.add_term(t, f * g);
        }
    }
    Ok(out)
}

/// `ι_V ω`; zero on 0-forms.
pub fn interior_product(v: &VectorField, w: &DifferentialForm) -> Result<DifferentialForm> {
    same_chart(&v.chart, &w.chart)?;
    if w.degree == 0 {
        return Ok(DifferentialForm::zero(&w.chart, 0));
    }
    let mut out = DifferentialForm::zero(&w.chart, w.degree - 1);
    for (idx, c) in &w.terms {
        for (a, &i) in idx.iter().enumerate() {
            if v.comps[i].is_zero() {
                continue;
            }
            let mut rest = idx.clone();
            rest.remove(a);
            let term = &v.comps[i] * c;
            out.add_term(rest, if a % 2 == 0 { term } else { -term });
        }
    }
    Ok(out)
}

pub fn lie_bracket(v: &VectorField, w: &VectorField) -> Result<VectorField> {
    same_chart(&v.chart, &w.chart)?;
    let comps = (0..v.chart.dim()).map(|i| v.apply(&w.comps[i]) - w.apply(&v.comps[i])).collect();
    Ok(VectorField { chart: v.chart.clone(), comps })
}

/// `L_V ω = d ι_V ω + ι_V dω`.
pub fn lie_derivative_form(v: &VectorField, w: &DifferentialForm) -> Result<DifferentialForm> {
    same_chart(&v.chart, &w.chart)?;
    if w.degree == 0 {
        return Ok(DifferentialForm::function(&w.chart, v.apply(&w.as_function())));
    }
    let a = exterior_derivative(&interior_product(v, w)?);
    let b = interior_product(v, &exterior_derivative(w))?;
    Ok(a.add(&b))
}

/// `ω(V_1, …, V_k)` at `p`.
pub fn evaluate_form(w: &DifferentialForm, vs: &[VectorField], p: &[f64]) -> Result<f64> {
    let vals = vs.iter().map(|v| v.evaluate(p)).collect::<Result<Vec<_>>>()?;
    w.eval_at(p, &vals)
}

/// The symbolic function `ω(V_1, …, V_k)`.
pub fn contract_all(w: &DifferentialForm, vs: &[VectorField]) -> Result<Expr> {
    if vs.len() != w.degree {
        return Err(Error::Dimension(format!("{}-form contracted with {} fields", w.degree, vs.len())));
    }
    let mut cur = w.clone();
    for v in vs {
        cur = interior_product(v, &cur)?;
    }
    Ok(cur.as_function())
}

pub fn scalar_field(w: &DifferentialForm) -> Result<ScalarField> {
    ScalarField::new(w.chart.clone(), w.as_function())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfield::parse_expr;

    fn chart() -> Arc<Chart> {
        Chart::torus(&["x", "y", "t"])
    }

    fn one(c: &Arc<Chart>, s: [&str; 3]) -> DifferentialForm {
        DifferentialForm::one_form(c, s.iter().map(|t| parse_expr(t, c).unwrap().into_expr()).collect())
            .unwrap()
    }

    fn vf(c: &Arc<Chart>, s: [&str; 3]) -> VectorField {
        VectorField::new(c.clone(), s.iter().map(|t| parse_expr(t, c).unwrap().into_expr()).collect())
            .unwrap()
    }

    #[test]
    fn sort_sign_detects_parity() {
        assert_eq!(sort_sign(&mut [2, 0, 1]), Some(1.0));
        assert_eq!(sort_sign(&mut [1, 0]), Some(-1.0));
        assert_eq!(sort_sign(&mut [1, 1]), None);
    }

    #[test]
    fn d_of_one_form_by_hand() {
        let c = chart();
        // d(cos t dx) = -sin t dt∧dx = sin t dx∧dt
        let w = one(&c, ["cos(t)", "0", "0"]);
        let dw = exterior_derivative(&w);
        let p = [0.1, 0.2, 0.9];
        assert!((dw.coeff(&[0, 2]).eval(&p).unwrap() - 0.9f64.sin()).abs() < 1e-15);
        assert_eq!(dw.terms().count(), 1);
    }

    #[test]
    fn one_form_d_matches_invariant_formula() {
        let c = chart();
        let w = one(&c, ["sin(y)*t", "x^2", "cos(x*y)"]);
        let v = vf(&c, ["1+y", "sin(t)", "x"]);
        let u = vf(&c, ["cos(x)", "t*y", "2"]);
        let p = [0.4, 1.3, 2.2];
        let lhs = evaluate_form(&exterior_derivative(&w), &[v.clone(), u.clone()], &p).unwrap();
        let wu = contract_all(&w, std::slice::from_ref(&u)).unwrap();
        let wv = contract_all(&w, std::slice::from_ref(&v)).unwrap();
        let br = lie_bracket(&v, &u).unwrap();
        let rhs = v.apply(&wu).eval(&p).unwrap() - u.apply(&wv).eval(&p).unwrap()
            - evaluate_form(&w, &[br], &p).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn wedge_evaluates_as_determinant() {
        let c = chart();
        let a = one(&c, ["1", "2", "0"]);
        let b = one(&c, ["0", "1", "3"]);
        let ab = wedge(&a, &b).unwrap();
        let v = vec![1.0, 0.5, -1.0];
        let u = vec![0.0, 2.0, 1.0];
        let p = [0.0; 3];
        let want = a.eval_at(&p, std::slice::from_ref(&v)).unwrap() * b.eval_at(&p, std::slice::from_ref(&u)).unwrap()
            - a.eval_at(&p, std::slice::from_ref(&u)).unwrap() * b.eval_at(&p, std::slice::from_ref(&v)).unwrap();
        assert!((ab.eval_at(&p, &[v, u]).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn interior_product_is_first_slot_insertion() {
        let c = chart();
        let w = wedge(&one(&c, ["y", "1", "0"]), &one(&c, ["0", "x", "cos(t)"])).unwrap();
        let v = vf(&c, ["sin(t)", "1", "y"]);
        let u = vec![0.3, -0.2, 0.7];
        let p = [0.5, 0.6, 0.7];
        let vv = v.evaluate(&p).unwrap();
        let lhs = interior_product(&v, &w).unwrap().eval_at(&p, std::slice::from_ref(&u)).unwrap();
        assert!((lhs - w.eval_at(&p, &[vv, u]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn top_degree_wedge_vanishes_beyond_dimension() {
        let c = chart();
        let a = wedge(&one(&c, ["1", "0", "0"]), &one(&c, ["0", "1", "0"])).unwrap();
        let b = wedge(&one(&c, ["0", "0", "1"]), &one(&c, ["1", "1", "1"])).unwrap();
        assert!(wedge(&a, &b).unwrap().is_structurally_zero());
    }
}
