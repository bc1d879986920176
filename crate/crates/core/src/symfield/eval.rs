use std::collections::HashMap;

use super::{Expr, Node};
use crate::error::{Error, Result};

/// Denominators below this magnitude make an evaluation singular.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// Number types an expression tape can be evaluated in.
pub trait Numeric: Clone {
    type Ctx;
    fn constant(ctx: &Self::Ctx, c: f64) -> Self;
    /// The coordinate function `x_i` at a point whose `i`-th coordinate is `x`.
    fn coordinate(ctx: &Self::Ctx, i: usize, x: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn recip(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn value(&self) -> f64;

    fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    Some(a) => a.mul(&base),
                    None => base.clone(),
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc.unwrap_or_else(|| self.mul(&self.recip()))
    }
}

impl Numeric for f64 {
    type Ctx = ();
    fn constant(_: &(), c: f64) -> f64 {
        c
    }
    fn coordinate(_: &(), _: usize, x: f64) -> f64 {
        x
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn recip(&self) -> f64 {
        1.0 / self
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn value(&self) -> f64 {
        *self
    }
    fn powi(&self, n: i32) -> f64 {
        f64::powi(*self, n)
    }
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Var(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Pow(usize, i32),
    Sin(usize),
    Cos(usize),
    Exp(usize),
}

/// A topologically ordered instruction list for one or more expressions.
#[derive(Debug, Clone)]
pub struct Tape {
    instrs: Vec<Instr>,
    roots: Vec<usize>,
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut tape = Tape { instrs: Vec::new(), roots: Vec::new() };
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for e in exprs {
            let r = tape.push(e, &mut seen);
            tape.roots.push(r);
        }
        tape
    }

    fn push(&mut self, e: &Expr, seen: &mut HashMap<usize, usize>) -> usize {
        if let Some(&i) = seen.get(&e.key()) {
            return i;
        }
        let ins = match &*e.0 {
            Node::Const(c) => Instr::Const(*c),
            Node::Var(i) => Instr::Var(*i),
            Node::Add(a, b) => Instr::Add(self.push(a, seen), self.push(b, seen)),
            Node::Sub(a, b) => Instr::Sub(self.push(a, seen), self.push(b, seen)),
            Node::Mul(a, b) => Instr::Mul(self.push(a, seen), self.push(b, seen)),
            Node::Div(a, b) => Instr::Div(self.push(a, seen), self.push(b, seen)),
            Node::Neg(a) => Instr::Neg(self.push(a, seen)),
            Node::Pow(a, n) => Instr::Pow(self.push(a, seen), *n),
            Node::Sin(a) => Instr::Sin(self.push(a, seen)),
            Node::Cos(a) => Instr::Cos(self.push(a, seen)),
            Node::Exp(a) => Instr::Exp(self.push(a, seen)),
        };
        self.instrs.push(ins);
        let idx = self.instrs.len() - 1;
        seen.insert(e.key(), idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.instrs
            .iter()
            .filter_map(|i| match i {
                Instr::Var(v) => Some(*v),
                _ => None,
            })
            .max()
    }

    pub fn eval_f64(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.eval::<f64>(&(), p)
    }

    /// Evaluates every root. Division and negative powers by a value whose
    /// magnitude is below [`SINGULAR_GUARD`] fail.
    pub fn eval<N: Numeric>(&self, ctx: &N::Ctx, p: &[f64]) -> Result<Vec<N>> {
        self.run(ctx, |i| {
            let x = *p.get(i).ok_or_else(|| Error::Dimension(format!("coordinate {i} missing from point")))?;
            Ok(N::coordinate(ctx, i, x))
        })
    }

    /// Evaluates every root with `x_i` replaced by `inputs[i]`, which composes
    /// the tape with a map when the inputs are jets.
    pub fn eval_composed<N: Numeric>(&self, ctx: &N::Ctx, inputs: &[N]) -> Result<Vec<N>> {
        self.run(ctx, |i| {
            inputs.get(i).cloned().ok_or_else(|| Error::Dimension(format!("input {i} missing")))
        })
    }

    fn run<N: Numeric>(&self, ctx: &N::Ctx, var: impl Fn(usize) -> Result<N>) -> Result<Vec<N>> {
        let mut vals: Vec<N> = Vec::with_capacity(self.instrs.len());
        for ins in &self.instrs {
            let v = match *ins {
                Instr::Const(c) => N::constant(ctx, c),
                Instr::Var(i) => var(i)?,
                Instr::Add(a, b) => vals[a].add(&vals[b]),
                Instr::Sub(a, b) => vals[a].sub(&vals[b]),
                Instr::Mul(a, b) => vals[a].mul(&vals[b]),
                Instr::Div(a, b) => {
                    guard(&vals[b])?;
                    vals[a].mul(&vals[b].recip())
                }
                Instr::Neg(a) => vals[a].neg(),
                Instr::Pow(a, n) => {
                    if n < 0 {
                        guard(&vals[a])?;
                    }
                    vals[a].powi(n)
                }
                Instr::Sin(a) => vals[a].sin(),
                Instr::Cos(a) => vals[a].cos(),
                Instr::Exp(a) => vals[a].exp(),
            };
            vals.push(v);
        }
        Ok(self.roots.iter().map(|&r| vals[r].clone()).collect())
    }
}

fn guard<N: Numeric>(d: &N) -> Result<()> {
    let v = d.value();
    if !(v.abs() >= SINGULAR_GUARD) {
        return Err(Error::Singular(format!("denominator {v:e} below {SINGULAR_GUARD:e}")));
    }
    Ok(())
}
