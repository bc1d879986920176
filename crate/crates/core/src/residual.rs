//! Residual bookkeeping: componentwise `|L - R| / (1 + max(|L|, |R|))`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Relative residual of one component. Non-finite inputs give `+∞`.
pub fn rel(l: f64, r: f64) -> f64 {
    let v = (l - r).abs() / (1.0 + l.abs().max(r.abs()));
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

impl Residual {
    pub fn push(&mut self, l: f64, r: f64) {
        let a = (l - r).abs();
        let a = if a.is_finite() { a } else { f64::INFINITY };
        self.max_abs = self.max_abs.max(a);
        self.max_rel = self.max_rel.max(rel(l, r));
    }

    pub fn push_all(&mut self, l: &[f64], r: &[f64]) {
        assert_eq!(l.len(), r.len(), "residual operands differ in length");
        for (a, b) in l.iter().zip(r) {
            self.push(*a, *b);
        }
    }

    pub fn push_zero(&mut self, v: &[f64]) {
        for a in v {
            self.push(*a, 0.0);
        }
    }

    pub fn of(l: &[f64], r: &[f64]) -> Residual {
        let mut s = Residual::default();
        s.push_all(l, r);
        s
    }

    pub fn of_zero(v: &[f64]) -> Residual {
        let mut s = Residual::default();
        s.push_zero(v);
        s
    }

    pub fn merge(&mut self, o: Residual) {
        self.max_abs = self.max_abs.max(o.max_abs);
        self.max_rel = self.max_rel.max(o.max_rel);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_scale() {
        assert_eq!(rel(3.0, 1.0), 0.5);
        assert_eq!(rel(0.0, 0.0), 0.0);
        assert_eq!(rel(f64::NAN, 0.0), f64::INFINITY);
        let r = Residual::of(&[1.0, 10.0], &[1.0, 9.0]);
        assert_eq!(r.max_abs, 1.0);
        assert!((r.max_rel - 1.0 / 11.0).abs() < 1e-15);
    }
}
