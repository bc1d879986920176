//! Truncated multivariate Taylor jets at a point.
//!
//! A jet of order `K` stores the Taylor coefficients `c_m` of
//! `f(p + h) = Σ c_m h^m` for every multi-index `|m| <= K`. Arithmetic is exact
//! up to order `K`; taking a partial derivative loses one order, which each jet
//! tracks in `valid` so that a computation never reads a coefficient that was
//! truncated away.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::symfield::{Expr, Numeric, Tape};
use crate::error::Result;

pub struct JetSpace {
    dim: usize,
    order: usize,
    monos: Vec<Vec<u8>>,
    unit: Vec<usize>,
    mul: Vec<(u32, u32, u32)>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetSpace(dim={}, order={})", self.dim, self.order)
    }
}

impl JetSpace {
    pub fn new(dim: usize, order: usize) -> Arc<JetSpace> {
        let mut monos: Vec<Vec<u8>> = vec![vec![0; dim]];
        let mut frontier = monos.clone();
        for _ in 0..order {
            let mut next = Vec::new();
            for m in &frontier {
                // extend only at or after the last nonzero slot so each monomial appears once
                let last = m.iter().rposition(|&e| e > 0).unwrap_or(0);
                for i in last..dim {
                    let mut n = m.clone();
                    n[i] += 1;
                    next.push(n);
                }
            }
            monos.extend(next.iter().cloned());
            frontier = next;
        }
        let index: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let deg = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                if deg(ma) + deg(mb) <= order {
                    let s: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                    mul.push((a as u32, b as u32, index[&s] as u32));
                }
            }
        }
        let mut deriv = vec![Vec::new(); dim];
        let mut unit = vec![0; dim];
        for (i, d) in deriv.iter_mut().enumerate() {
            let mut e = vec![0u8; dim];
            e[i] = 1;
            if order > 0 {
                unit[i] = index[&e];
            }
            for (k, m) in monos.iter().enumerate() {
                if deg(m) < order {
                    let mut up = m.clone();
                    up[i] += 1;
                    d.push((index[&up] as u32, k as u32, (m[i] + 1) as f64));
                }
            }
        }
        Arc::new(JetSpace { dim, order, monos, unit, mul, deriv })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }
}

#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
    valid: u8,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(value={}, valid={})", self.c[0], self.valid)
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet { space: space.clone(), c, valid: space.order as u8 }
    }

    pub fn zero(space: &Arc<JetSpace>) -> Jet {
        Jet::constant(space, 0.0)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn valid_order(&self) -> usize {
        self.valid as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial with exponents `m`.
    pub fn coefficient(&self, m: &[u8]) -> Option<f64> {
        self.space.monos.iter().position(|x| x == m).map(|i| self.c[i])
    }

    /// Partial derivative `∂_i`. Panics if no derivative order is left, which
    /// means the calling computation nests more derivatives than the jet order.
    pub fn deriv(&self, i: usize) -> Jet {
        assert!(self.valid > 0, "jet order exhausted: increase the jet order");
        let mut c = vec![0.0; self.c.len()];
        for &(src, dst, f) in &self.space.deriv[i] {
            c[dst as usize] = f * self.c[src as usize];
        }
        Jet { space: self.space.clone(), c, valid: self.valid - 1 }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space.clone(), c: self.c.iter().map(|x| x * s).collect(), valid: self.valid }
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| f(*a, *b)).collect(),
            valid: self.valid.min(o.valid),
        }
    }

    /// `Σ_k coef[k] (self - self(p))^k`, the composition with a univariate
    /// function given by its Taylor coefficients at `self(p)`.
    fn compose(&self, coef: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(&self.space, coef[0]);
        out.valid = self.valid;
        let mut pw = h.clone();
        for (k, &a) in coef.iter().enumerate().skip(1) {
            if a != 0.0 {
                for (o, x) in out.c.iter_mut().zip(&pw.c) {
                    *o += a * x;
                }
            }
            if k < coef.len() - 1 {
                pw = pw.mul(&h);
            }
        }
        out
    }

    fn factorial_series(&self, derivs: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut f = 1.0;
        (0..=self.space.order)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                derivs(k) / f
            })
            .collect()
    }
}

impl Numeric for Jet {
    type Ctx = Arc<JetSpace>;

    fn constant(ctx: &Arc<JetSpace>, c: f64) -> Jet {
        Jet::constant(ctx, c)
    }

    fn coordinate(ctx: &Arc<JetSpace>, i: usize, x: f64) -> Jet {
        let mut j = Jet::constant(ctx, x);
        if ctx.order > 0 {
            j.c[ctx.unit[i]] = 1.0;
        }
        j
    }

    fn add(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    fn sub(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    fn mul(&self, o: &Jet) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(a, b, r) in &self.space.mul {
            c[r as usize] += self.c[a as usize] * o.c[b as usize];
        }
        Jet { space: self.space.clone(), c, valid: self.valid.min(o.valid) }
    }

    fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    fn recip(&self) -> Jet {
        let a = self.c[0];
        let coef: Vec<f64> =
            (0..=self.space.order).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1)).collect();
        self.compose(&coef)
    }

    fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let coef = self.factorial_series(|k| [s, c, -s, -c][k % 4]);
        self.compose(&coef)
    }

    fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let coef = self.factorial_series(|k| [c, -s, -c, s][k % 4]);
        self.compose(&coef)
    }

    fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        let coef = self.factorial_series(|_| e);
        self.compose(&coef)
    }

    fn value(&self) -> f64 {
        self.c[0]
    }
}

macro_rules! jet_op {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                Numeric::$m(self, o)
            }
        }
        impl std::ops::$tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                Numeric::$m(&self, &o)
            }
        }
        impl std::ops::$tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                Numeric::$m(&self, o)
            }
        }
        impl std::ops::$tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                Numeric::$m(self, &o)
            }
        }
    };
}
jet_op!(Add, add);
jet_op!(Sub, sub);
jet_op!(Mul, mul);

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Lifts expressions to jets at `p` (no periodic reduction).
pub fn lift(exprs: &[Expr], space: &Arc<JetSpace>, p: &[f64]) -> Result<Vec<Jet>> {
    Tape::compile(exprs).eval::<Jet>(space, p)
}

/// Solves `M x = b` for a square jet matrix by Gaussian elimination with
/// partial pivoting on the point values. Returns `None` if singular at the point.
pub fn solve(m: &[Vec<Jet>], b: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    let n = m.len();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut rhs: Vec<Vec<Jet>> = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        if a[piv][col].value().abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let inv = a[col][col].recip();
        for k in col..n {
            a[col][k] = &a[col][k] * &inv;
        }
        for k in 0..rhs[col].len() {
            rhs[col][k] = &rhs[col][k] * &inv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.c.iter().all(|x| *x == 0.0) {
                continue;
            }
            for k in col..n {
                let v = &a[row][k] - &(&f * &a[col][k]);
                a[row][k] = v;
            }
            for k in 0..rhs[row].len() {
                let v = &rhs[row][k] - &(&f * &rhs[col][k]);
                rhs[row][k] = v;
            }
        }
    }
    Some(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfield::{Chart, ScalarField};

    #[test]
    fn monomial_counts() {
        assert_eq!(JetSpace::new(3, 2).len(), 10);
        assert_eq!(JetSpace::new(5, 3).len(), 56);
        assert_eq!(JetSpace::new(2, 0).len(), 1);
    }

    #[test]
    fn lifted_jet_matches_symbolic_derivatives() {
        let chart = Chart::torus(&["x", "y", "t"]);
        let f = ScalarField::parse(&chart, "exp(sin(x)*y)/(2+cos(t*x)) + y^3").unwrap();
        let space = JetSpace::new(3, 3);
        let p = [0.4, -0.3, 1.2];
        let j = &lift(&[f.expr().clone()], &space, &p).unwrap()[0];
        for i in 0..3 {
            for k in 0..3 {
                let sym = f.expr().diff(i).diff(k).eval(&p).unwrap();
                let jet = j.deriv(i).deriv(k).value();
                assert!((sym - jet).abs() < 1e-12, "d{i}d{k}: {sym} vs {jet}");
            }
        }
        let third = f.expr().diff(0).diff(1).diff(2).eval(&p).unwrap();
        assert!((third - j.deriv(0).deriv(1).deriv(2).value()).abs() < 1e-11);
    }

    #[test]
    #[should_panic(expected = "jet order exhausted")]
    fn over_differentiation_panics() {
        let space = JetSpace::new(1, 1);
        let x = Jet::coordinate(&space, 0, 0.5);
        let _ = x.deriv(0).deriv(0);
    }

    #[test]
    fn solve_inverts_with_derivatives() {
        let space = JetSpace::new(2, 2);
        let x = Jet::coordinate(&space, 0, 0.3);
        let y = Jet::coordinate(&space, 1, 0.7);
        let one = Jet::constant(&space, 1.0);
        let m = vec![vec![one.clone(), x.clone()], vec![y.clone(), &one + &(&x * &x)]];
        let b = vec![vec![one.clone()], vec![Jet::zero(&space)]];
        let sol = solve(&m, &b).unwrap();
        for (row, rhs) in m.iter().zip(&b) {
            let r = &(&row[0] * &sol[0][0]) + &(&row[1] * &sol[1][0]);
            let e = &r - &rhs[0];
            assert!(e.c.iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn solve_inverts_dense_matrix() {
        let space = JetSpace::new(2, 2);
        let x = Jet::coordinate(&space, 0, 0.3);
        let y = Jet::coordinate(&space, 1, 0.7);
        let n = 4;
        let m: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        let base = Jet::constant(&space, ((i * 7 + k * 3) % 5) as f64 * 0.3 - 0.5);
                        if i == k { &base + &(&x * &y) } else { &base + &x.scale(0.1 * k as f64) }
                    })
                    .collect()
            })
            .collect();
        let id: Vec<Vec<Jet>> =
            (0..n).map(|i| (0..n).map(|k| Jet::constant(&space, if i == k { 1.0 } else { 0.0 })).collect()).collect();
        let inv = solve(&m, &id).unwrap();
        for i in 0..n {
            for k in 0..n {
                let p = (0..n).fold(Jet::zero(&space), |acc, j| acc + &m[i][j] * &inv[j][k]);
                let e = &p - &id[i][k];
                assert!(e.c.iter().all(|v| v.abs() < 1e-12), "({i},{k})");
            }
        }
    }
}
