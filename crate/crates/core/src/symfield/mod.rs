//! Symbolic scalar fields on coordinate charts of a torus.
//!
//! Expressions are immutable DAGs behind `Arc`, so sharing a subexpression is
//! free and evaluation goes through a compiled [`Tape`] that visits each
//! shared node once.

mod eval;
mod parse;

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

pub use eval::{Numeric, Tape};
pub use parse::parse_expr;

use crate::error::{Error, Result};

/// Coordinate names plus a periodicity flag per coordinate (period 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new(names: Vec<String>, periodic: Vec<bool>) -> Result<Arc<Chart>> {
        if names.is_empty() {
            return Err(Error::Dimension("chart needs at least one coordinate".into()));
        }
        if names.len() != periodic.len() {
            return Err(Error::Dimension(format!(
                "{} coordinate names but {} periodicity flags",
                names.len(),
                periodic.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            let valid = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::Config(format!("invalid coordinate name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::Config(format!("duplicate coordinate name `{n}`")));
            }
        }
        Ok(Arc::new(Chart { names, periodic }))
    }

    /// A chart where every coordinate is periodic.
    pub fn torus(names: &[&str]) -> Arc<Chart> {
        Chart::new(names.iter().map(|s| s.to_string()).collect(), vec![true; names.len()])
            .expect("valid torus chart")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_periodic(&self, i: usize) -> bool {
        self.periodic[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Reduces periodic coordinates into `[0, 2π)`.
    pub fn reduce(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.periodic)
            .map(|(&x, &per)| if per { x.rem_euclid(TAU) } else { x })
            .collect()
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {}",
                p.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

/// A chart-free expression over coordinates `x_0 .. x_{n-1}`.
#[derive(Clone)]
pub struct Expr(pub(crate) Arc<Node>);

impl Expr {
    fn node(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::node(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(i: usize) -> Expr {
        Expr::node(Node::Var(i))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn add(&self, o: &Expr) -> Expr {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => o.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::node(Node::Add(self.clone(), o.clone())),
        }
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        if Arc::ptr_eq(&self.0, &o.0) {
            return Expr::zero();
        }
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => o.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::node(Node::Sub(self.clone(), o.clone())),
        }
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => o.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => o.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Expr::node(Node::Mul(self.clone(), o.clone())),
        }
    }

    pub fn div(&self, o: &Expr) -> Expr {
        match (self.as_const(), o.as_const()) {
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            _ if o.is_one() => self.clone(),
            _ => Expr::node(Node::Div(self.clone(), o.clone())),
        }
    }

    pub fn neg(&self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::node(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        match (n, self.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => self.clone(),
            (_, Some(c)) if n > 0 || c != 0.0 => Expr::constant(c.powi(n)),
            _ => Expr::node(Node::Pow(self.clone(), n)),
        }
    }

    pub fn sin(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.sin()),
            None => Expr::node(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.cos()),
            None => Expr::node(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr::node(Node::Exp(self.clone())),
        }
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::constant(c).mul(self)
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(i, &mut memo)
    }

    fn diff_memo(&self, i: usize, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&self.key()) {
            return d.clone();
        }
        let d = match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(j) => Expr::constant(if *j == i { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff_memo(i, memo).add(&b.diff_memo(i, memo)),
            Node::Sub(a, b) => a.diff_memo(i, memo).sub(&b.diff_memo(i, memo)),
            Node::Mul(a, b) => {
                let da = a.diff_memo(i, memo);
                let db = b.diff_memo(i, memo);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(i, memo);
                let db = b.diff_memo(i, memo);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
                }
            }
            Node::Neg(a) => a.diff_memo(i, memo).neg(),
            Node::Pow(a, n) => {
                let da = a.diff_memo(i, memo);
                Expr::constant(*n as f64).mul(&a.powi(n - 1)).mul(&da)
            }
            Node::Sin(a) => a.cos().mul(&a.diff_memo(i, memo)),
            Node::Cos(a) => a.sin().neg().mul(&a.diff_memo(i, memo)),
            Node::Exp(a) => self.mul(&a.diff_memo(i, memo)),
        };
        memo.insert(self.key(), d.clone());
        d
    }

    /// Replaces coordinate `i` by the constant `value`.
    pub fn substitute(&self, i: usize, value: f64) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(i, &Expr::constant(value), &mut memo)
    }

    fn subst_memo(&self, i: usize, v: &Expr, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.key()) {
            return e.clone();
        }
        let e = match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(j) => {
                if *j == i {
                    v.clone()
                } else {
                    self.clone()
                }
            }
            Node::Add(a, b) => a.subst_memo(i, v, memo).add(&b.subst_memo(i, v, memo)),
            Node::Sub(a, b) => a.subst_memo(i, v, memo).sub(&b.subst_memo(i, v, memo)),
            Node::Mul(a, b) => a.subst_memo(i, v, memo).mul(&b.subst_memo(i, v, memo)),
            Node::Div(a, b) => a.subst_memo(i, v, memo).div(&b.subst_memo(i, v, memo)),
            Node::Neg(a) => a.subst_memo(i, v, memo).neg(),
            Node::Pow(a, n) => a.subst_memo(i, v, memo).powi(*n),
            Node::Sin(a) => a.subst_memo(i, v, memo).sin(),
            Node::Cos(a) => a.subst_memo(i, v, memo).cos(),
            Node::Exp(a) => a.subst_memo(i, v, memo).exp(),
        };
        memo.insert(self.key(), e.clone());
        e
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        let tape = Tape::compile(std::slice::from_ref(self));
        tape.max_var()
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        Tape::compile(std::slice::from_ref(self)).len()
    }

    /// Evaluates at a raw point (no periodic reduction).
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        Tape::compile(std::slice::from_ref(self)).eval_f64(p).map(|v| v[0])
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr::$m(self, o)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$m(&self, &o)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr::$m(&self, o)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$m(self, &o)
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

impl Expr {
    /// Prints with the given coordinate names; the output parses back on a
    /// chart with those names.
    pub fn with_names<'a>(&'a self, names: &'a [String]) -> Named<'a> {
        Named { expr: self, names: Some(names) }
    }
}

pub struct Named<'a> {
    expr: &'a Expr,
    names: Option<&'a [String]>,
}

impl<'a> Named<'a> {
    fn sub(&self, e: &'a Expr) -> Named<'a> {
        Named { expr: e, names: self.names }
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e| self.sub(e);
        match &*self.expr.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => match self.names.and_then(|n| n.get(*i)) {
                Some(n) => f.write_str(n),
                None => write!(f, "x{i}"),
            },
            Node::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Node::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Node::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Node::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Node::Neg(a) => write!(f, "(-{})", sub(a)),
            Node::Pow(a, n) => write!(f, "({}^{n})", sub(a)),
            Node::Sin(a) => write!(f, "sin({})", sub(a)),
            Node::Cos(a) => write!(f, "cos({})", sub(a)),
            Node::Exp(a) => write!(f, "exp({})", sub(a)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Named { expr: self, names: None }, f)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An expression bound to a chart.
#[derive(Clone, Debug)]
pub struct ScalarField {
    chart: Arc<Chart>,
    expr: Expr,
}

impl ScalarField {
    pub fn new(chart: Arc<Chart>, expr: Expr) -> Result<ScalarField> {
        if let Some(m) = expr.max_var() {
            if m >= chart.dim() {
                return Err(Error::Dimension(format!(
                    "expression uses coordinate {m} on a {}-dimensional chart",
                    chart.dim()
                )));
            }
        }
        Ok(ScalarField { chart, expr })
    }

    pub fn parse(chart: &Arc<Chart>, text: &str) -> Result<ScalarField> {
        parse_expr(text, chart)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }

    pub fn differentiate(&self, i: usize) -> Result<ScalarField> {
        differentiate(self, i)
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<f64> {
        evaluate(self, p)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.expr.with_names(self.chart.names()), f)
    }
}

/// Exact derivative with respect to chart coordinate `i`.
pub fn differentiate(f: &ScalarField, i: usize) -> Result<ScalarField> {
    if i >= f.chart.dim() {
        return Err(Error::Dimension(format!(
            "coordinate index {i} out of range for a {}-dimensional chart",
            f.chart.dim()
        )));
    }
    Ok(ScalarField { chart: f.chart.clone(), expr: f.expr.diff(i) })
}

/// Evaluates after reducing periodic coordinates.
pub fn evaluate(f: &ScalarField, p: &[f64]) -> Result<f64> {
    f.chart.check_point(p)?;
    f.expr.eval(&f.chart.reduce(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Arc<Chart> {
        Chart::torus(&["x", "y", "t"])
    }

    #[test]
    fn simplification_absorbs_units() {
        let x = Expr::var(0);
        assert!((&x * &Expr::zero()).is_zero());
        assert_eq!(format!("{}", &x * &Expr::one()), "x0");
        assert_eq!(format!("{}", -(-x.clone())), "x0");
        assert!((&x - &x).is_zero());
        assert_eq!(Expr::constant(2.0).powi(3).as_const(), Some(8.0));
    }

    #[test]
    fn derivative_of_product_and_quotient() {
        let c = chart();
        let f = ScalarField::parse(&c, "sin(x)*exp(y)/(2+cos(t))").unwrap();
        let p = [0.3, 0.7, 1.1];
        let (x, y, t) = (p[0], p[1], p[2]);
        let dx = differentiate(&f, 0).unwrap().evaluate(&p).unwrap();
        let dt = differentiate(&f, 2).unwrap().evaluate(&p).unwrap();
        assert!((dx - x.cos() * y.exp() / (2.0 + t.cos())).abs() < 1e-14);
        let want = x.sin() * y.exp() * t.sin() / (2.0 + t.cos()).powi(2);
        assert!((dt - want).abs() < 1e-14);
    }

    #[test]
    fn periodic_reduction_applies_before_evaluation() {
        let c = Chart::new(vec!["x".into(), "s".into()], vec![true, false]).unwrap();
        let f = ScalarField::parse(&c, "x + s").unwrap();
        let v = f.evaluate(&[TAU + 0.5, 10.0]).unwrap();
        assert!((v - 10.5).abs() < 1e-12);
    }

    #[test]
    fn singular_division_is_reported() {
        let c = chart();
        let f = ScalarField::parse(&c, "1/sin(x)").unwrap();
        assert!(matches!(f.evaluate(&[0.0, 0.0, 0.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn substitute_removes_variable() {
        let e = Expr::var(0) * Expr::var(3).sin();
        let s = e.substitute(3, 0.5);
        assert_eq!(s.max_var(), Some(0));
        assert!((s.eval(&[2.0]).unwrap() - 2.0 * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn derivative_memo_keeps_dag_linear() {
        // repeated squaring builds a deep DAG whose tree expansion is exponential
        let mut e = Expr::var(0).sin();
        for _ in 0..30 {
            e = &e * &e;
        }
        let d = e.diff(0).diff(0);
        assert!(d.node_count() < 2000);
    }

    #[test]
    fn chart_rejects_duplicates() {
        assert!(Chart::new(vec!["x".into(), "x".into()], vec![true, true]).is_err());
        assert!(Chart::new(vec!["1x".into()], vec![true]).is_err());
    }
}
