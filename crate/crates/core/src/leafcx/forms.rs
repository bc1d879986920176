use super::{Covec, JField, LeafPoint};
use crate::jet::Jet;
use crate::residual::Residual;

/// A ξ-valued 1-form stored by its values on the frame, extended
/// `C^∞`-linearly to arbitrary ξ-fields.
#[derive(Clone, Debug)]
pub struct XiForm1 {
    pub vals: Vec<JField>,
}

impl XiForm1 {
    pub fn eval(&self, lp: &LeafPoint, v: &JField) -> JField {
        let c = lp.coeffs(v);
        let mut out = JField::zero(&lp.space);
        for (ci, val) in c.iter().zip(&self.vals) {
            out = out.add(&val.scale(ci));
        }
        out
    }

    pub fn add(&self, o: &XiForm1) -> XiForm1 {
        XiForm1 { vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &XiForm1) -> XiForm1 {
        XiForm1 { vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, f: &Jet) -> XiForm1 {
        XiForm1 { vals: self.vals.iter().map(|a| a.scale(f)).collect() }
    }

    pub fn scale_c(&self, s: f64) -> XiForm1 {
        XiForm1 { vals: self.vals.iter().map(|a| a.scale_c(s)).collect() }
    }

    /// Point values, frame slot by frame slot.
    pub fn values(&self) -> Vec<f64> {
        self.vals.iter().flat_map(JField::values).collect()
    }

    /// The frame matrix: column `i` holds the coefficients of `P(E_i)`.
    pub fn matrix(&self, lp: &LeafPoint) -> Vec<Vec<Jet>> {
        let cols: Vec<Vec<Jet>> = self.vals.iter().map(|v| lp.coeffs(v)).collect();
        let m = cols.len();
        (0..m).map(|i| (0..m).map(|k| cols[k][i].clone()).collect()).collect()
    }

    pub fn from_matrix(lp: &LeafPoint, m: &[Vec<Jet>]) -> XiForm1 {
        let r = m.len();
        XiForm1 {
            vals: (0..r).map(|k| lp.from_coeffs(&(0..r).map(|i| m[i][k].clone()).collect::<Vec<_>>())).collect(),
        }
    }

    /// `|P(JE_i) + J P(E_i)|`, the failure of the `(0,1)` property.
    pub fn antilinearity_residual(&self, lp: &LeafPoint) -> Residual {
        let mut r = Residual::default();
        for e in &lp.frame {
            let l = self.eval(lp, &lp.j(e));
            let rr = lp.j(&self.eval(lp, e)).neg();
            r.push_all(&l.values(), &rr.values());
        }
        r
    }
}

/// A ξ-valued 2-form stored on ordered frame pairs `(i, j)`, `i < j`.
#[derive(Clone, Debug)]
pub struct XiForm2 {
    rank: usize,
    vals: Vec<JField>,
}

fn pair_index(rank: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < rank);
    i * rank - i * (i + 1) / 2 + (j - i - 1)
}

impl XiForm2 {
    /// Tabulates `f(E_i, E_j)` for `i < j`.
    pub fn tabulate(lp: &LeafPoint, mut f: impl FnMut(&JField, &JField) -> JField) -> XiForm2 {
        let rank = lp.rank();
        let mut vals = Vec::with_capacity(rank * (rank - 1) / 2);
        for i in 0..rank {
            for j in i + 1..rank {
                vals.push(f(&lp.frame[i], &lp.frame[j]));
            }
        }
        XiForm2 { rank, vals }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<JField> {
        if i == j {
            return None;
        }
        if i < j {
            Some(self.vals[pair_index(self.rank, i, j)].clone())
        } else {
            Some(self.vals[pair_index(self.rank, j, i)].neg())
        }
    }

    pub fn eval(&self, lp: &LeafPoint, v: &JField, w: &JField) -> JField {
        let a = lp.coeffs(v);
        let b = lp.coeffs(w);
        let mut out = JField::zero(&lp.space);
        for i in 0..self.rank {
            for j in i + 1..self.rank {
                let c = &(&a[i] * &b[j]) - &(&a[j] * &b[i]);
                out = out.add(&self.vals[pair_index(self.rank, i, j)].scale(&c));
            }
        }
        out
    }

    pub fn add(&self, o: &XiForm2) -> XiForm2 {
        XiForm2 { rank: self.rank, vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &XiForm2) -> XiForm2 {
        XiForm2 { rank: self.rank, vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale_c(&self, s: f64) -> XiForm2 {
        XiForm2 { rank: self.rank, vals: self.vals.iter().map(|a| a.scale_c(s)).collect() }
    }

    pub fn map(&self, f: impl Fn(&JField) -> JField) -> XiForm2 {
        XiForm2 { rank: self.rank, vals: self.vals.iter().map(f).collect() }
    }

    pub fn values(&self) -> Vec<f64> {
        self.vals.iter().flat_map(JField::values).collect()
    }
}

/// A real scalar 1-form restricted to ξ, by its frame values. Its `(0,1)`
/// part is `α^{0,1}(V) = ½(α(V) + i α(JV))`.
#[derive(Clone, Debug)]
pub struct ScalarForm1 {
    pub vals: Vec<Jet>,
}

impl ScalarForm1 {
    /// Restriction of a 1-form germ to ξ.
    pub fn restrict(lp: &LeafPoint, a: &Covec) -> ScalarForm1 {
        ScalarForm1 { vals: lp.frame.iter().map(|e| a.eval(e)).collect() }
    }

    pub fn eval(&self, lp: &LeafPoint, v: &JField) -> Jet {
        lp.coeffs(v).iter().zip(&self.vals).fold(lp.constant(0.0), |acc, (c, a)| acc + c * a)
    }

    pub fn sub(&self, o: &ScalarForm1) -> ScalarForm1 {
        ScalarForm1 { vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, o: &ScalarForm1) -> ScalarForm1 {
        ScalarForm1 { vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, f: &Jet) -> ScalarForm1 {
        ScalarForm1 { vals: self.vals.iter().map(|a| a * f).collect() }
    }
}

/// Real and imaginary parts of `α^{0,1}(V)`.
pub fn proj01_scalar(lp: &LeafPoint, a: &ScalarForm1, v: &JField) -> (Jet, Jet) {
    (a.eval(lp, v).scale(0.5), a.eval(lp, &lp.j(v)).scale(0.5))
}

/// `β^{0,1}(V) = ½(β(V) + J β(JV))`.
pub fn proj01_vector(lp: &LeafPoint, b: &XiForm1) -> XiForm1 {
    XiForm1 {
        vals: lp
            .frame
            .iter()
            .map(|e| b.eval(lp, e).add(&lp.j(&b.eval(lp, &lp.j(e)))).scale_c(0.5))
            .collect(),
    }
}

/// `(α^{0,1} ⊗ Z)(V) = ½(α(V) Z + α(JV) J Z)`.
pub fn wedge01_field(lp: &LeafPoint, a: &ScalarForm1, z: &JField) -> XiForm1 {
    let jz = lp.j(z);
    XiForm1 {
        vals: lp
            .frame
            .iter()
            .map(|e| z.scale(&a.eval(lp, e)).add(&jz.scale(&a.eval(lp, &lp.j(e)))).scale_c(0.5))
            .collect(),
    }
}

/// `(α^{0,1} ∧ P)(V, W) = ½(α(V)P(W) + α(JV)JP(W) − α(W)P(V) − α(JW)JP(V))`.
pub fn wedge01(lp: &LeafPoint, a: &ScalarForm1, p: &XiForm1) -> XiForm2 {
    XiForm2::tabulate(lp, |v, w| wedge01_at(lp, a, p, v, w))
}

pub fn wedge01_at(lp: &LeafPoint, a: &ScalarForm1, p: &XiForm1, v: &JField, w: &JField) -> JField {
    let pv = p.eval(lp, v);
    let pw = p.eval(lp, w);
    let t1 = pw.scale(&a.eval(lp, v));
    let t2 = lp.j(&pw).scale(&a.eval(lp, &lp.j(v)));
    let t3 = pv.scale(&a.eval(lp, w));
    let t4 = lp.j(&pv).scale(&a.eval(lp, &lp.j(w)));
    t1.add(&t2).sub(&t3).sub(&t4).scale_c(0.5)
}

#[cfg(test)]
mod tests {
    #[test]
    fn pair_index_is_dense() {
        let r = 4;
        let mut seen = vec![];
        for i in 0..r {
            for j in i + 1..r {
                seen.push(super::pair_index(r, i, j));
            }
        }
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
    }
}
