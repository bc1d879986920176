//! Built-in Levi-flat structures and deformation families, plus a TOML loader
//! for user scenarios.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::excalc::{contract_all, DifferentialForm, VectorField};
use crate::foliation_dgla::DefiningCouple;
use crate::leafcx::{LeviFlatStructure, StructureKind};
use crate::symfield::{Chart, Expr, ScalarField};

/// Names of the parameter of a deformation family.
pub const FAMILY_PARAM: &str = "tau";

pub const BUILTINS: &[&str] = &[
    "t3_flat",
    "t3_twisted",
    "t3_twisted_shifted",
    "t5_product",
    "t5_perturbedJ",
    "family_t3_tilt",
    "family_t3_Jrotation",
    "broken_nonintegrable",
];

const TWIST: f64 = 0.3;

/// A declared property of a scenario; each one is a runnable check.
#[derive(Clone, Debug)]
pub enum Expectation {
    HZero,
    HNonzero,
    ThetaNonzero,
    /// `H = ℶ̄U` for `U` given by frame coefficients.
    ExactWitness(Vec<Expr>),
    /// `H ≠ ℶ̄U`.
    NotExactWitness(Vec<Expr>),
    NotLeviFlat,
    NonIntegrable,
}

impl Expectation {
    pub fn id(&self) -> &'static str {
        match self {
            Expectation::HZero => "expect.h_zero",
            Expectation::HNonzero => "expect.h_nonzero",
            Expectation::ThetaNonzero => "expect.theta_nonzero",
            Expectation::ExactWitness(_) => "expect.exact_witness",
            Expectation::NotExactWitness(_) => "expect.not_exact_witness",
            Expectation::NotLeviFlat => "expect.not_levi_flat",
            Expectation::NonIntegrable => "expect.non_integrable",
        }
    }
}

/// A curve `τ ↦ (α_τ, S_τ)` with `α_0 = 0`, `S_0 = 0`, given symbolically on
/// the chart extended by the parameter `τ`.
#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    base: Arc<Chart>,
    ext: Arc<Chart>,
    alpha: Vec<Expr>,
    s: Vec<Vec<Expr>>,
}

impl Family {
    pub fn new(name: &str, base: &Arc<Chart>, alpha: Vec<Expr>, s: Vec<Vec<Expr>>) -> Result<Family> {
        let ext = extended_chart(base)?;
        if alpha.len() != base.dim() {
            return Err(Error::Dimension(format!("family α needs {} coefficients", base.dim())));
        }
        let m = base.dim() - 1;
        if s.len() != m || s.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("family S must be {m}×{m}")));
        }
        for e in alpha.iter().chain(s.iter().flatten()) {
            if e.max_var().is_some_and(|v| v > base.dim()) {
                return Err(Error::Dimension("family expression uses an unknown variable".into()));
            }
        }
        Ok(Family { name: name.to_string(), base: base.clone(), ext, alpha, s })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.ext
    }

    fn tau_index(&self) -> usize {
        self.base.dim()
    }

    fn build(&self, f: impl Fn(&Expr) -> Expr) -> Result<(DifferentialForm, Vec<Vec<Expr>>)> {
        let a = DifferentialForm::one_form(&self.base, self.alpha.iter().map(&f).collect())?;
        let s = self.s.iter().map(|r| r.iter().map(&f).collect()).collect();
        Ok((a, s))
    }

    /// `(α_τ, S_τ)` on the base chart; `S` as a frame matrix.
    pub fn at(&self, tau: f64) -> Result<(DifferentialForm, Vec<Vec<Expr>>)> {
        let k = self.tau_index();
        self.build(|e| e.substitute(k, tau))
    }

    /// `d/dτ (α_τ, S_τ)` at `τ = 0`, symbolically.
    pub fn tangent(&self) -> Result<(DifferentialForm, Vec<Vec<Expr>>)> {
        let k = self.tau_index();
        self.build(|e| e.diff(k).substitute(k, 0.0))
    }
}

fn extended_chart(base: &Arc<Chart>) -> Result<Arc<Chart>> {
    let mut names = base.names().to_vec();
    names.push(FAMILY_PARAM.to_string());
    let periodic = (0..base.dim()).map(|i| base.is_periodic(i)).chain([false]).collect();
    Chart::new(names, periodic)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub structure: LeviFlatStructure,
    pub families: Vec<Family>,
    /// 1-forms `ρ_k` such that `ker(γ + Σ c_k ρ_k)` is integrable for all
    /// constants `c_k`; used to build Maurer–Cartan elements.
    pub tilts: Vec<DifferentialForm>,
    pub expectations: Vec<Expectation>,
}

impl Scenario {
    pub fn chart(&self) -> &Arc<Chart> {
        self.structure.chart()
    }

    pub fn couple(&self) -> &DefiningCouple {
        self.structure.couple()
    }

    /// The Maurer–Cartan element `α = β/β(X) − γ` for `β = γ + Σ c_k ρ_k`.
    /// `α ∈ 𝒵¹` and `ker(γ + α) = ker β` is integrable.
    pub fn mc_flat_alpha(&self, c: &[f64]) -> Result<DifferentialForm> {
        self.mc_flat_alpha_on(self.couple(), c)
    }

    /// As [`Scenario::mc_flat_alpha`] for another couple with the same `γ`.
    pub fn mc_flat_alpha_on(&self, couple: &DefiningCouple, c: &[f64]) -> Result<DifferentialForm> {
        let mut beta = couple.gamma().clone();
        for (rho, ck) in self.tilts.iter().zip(c) {
            beta = beta.add(&rho.scale_const(*ck));
        }
        let bx = contract_all(&beta, &[couple.x().clone()])?;
        Ok(beta.scale(&Expr::one().div(&bx)).sub(couple.gamma()))
    }
}

fn e(c: f64) -> Expr {
    Expr::constant(c)
}

fn v(i: usize) -> Expr {
    Expr::var(i)
}

fn standard_j(m: usize) -> Vec<Vec<Expr>> {
    let mut j = vec![vec![Expr::zero(); m]; m];
    for k in (0..m).step_by(2) {
        j[k + 1][k] = e(1.0);
        j[k][k + 1] = e(-1.0);
    }
    j
}

fn coords(chart: &Arc<Chart>, idx: &[usize]) -> Vec<VectorField> {
    idx.iter().map(|&i| VectorField::coordinate(chart, i)).collect()
}

fn t3_flat() -> Result<Scenario> {
    let chart = Chart::torus(&["x", "y", "t"]);
    let couple = DefiningCouple::new(DifferentialForm::coordinate(&chart, 2), VectorField::coordinate(&chart, 2))?;
    let structure = LeviFlatStructure::new(couple, coords(&chart, &[0, 1]), standard_j(2))?;
    Ok(Scenario {
        name: "t3_flat".into(),
        structure,
        families: vec![],
        tilts: vec![DifferentialForm::coordinate(&chart, 0), DifferentialForm::coordinate(&chart, 1)],
        expectations: vec![Expectation::HZero],
    })
}

fn twisted_parts(chart: &Arc<Chart>) -> Result<(DifferentialForm, Vec<VectorField>)> {
    let g = DifferentialForm::one_form(chart, vec![v(2).cos().scale(TWIST), e(0.0), e(1.0)])?;
    let e1 = VectorField::new(chart.clone(), vec![e(1.0), e(0.0), v(2).cos().scale(-TWIST)])?;
    let e2 = VectorField::coordinate(chart, 1);
    Ok((g, vec![e1, e2]))
}

fn t3_twisted() -> Result<Scenario> {
    let chart = Chart::torus(&["x", "y", "t"]);
    let (g, frame) = twisted_parts(&chart)?;
    let couple = DefiningCouple::new(g, VectorField::coordinate(&chart, 2))?;
    let structure = LeviFlatStructure::new(couple, frame, standard_j(2))?;
    Ok(Scenario {
        name: "t3_twisted".into(),
        structure,
        families: vec![],
        tilts: vec![DifferentialForm::coordinate(&chart, 0)],
        expectations: vec![Expectation::HZero, Expectation::ThetaNonzero],
    })
}

fn t3_twisted_shifted() -> Result<Scenario> {
    let chart = Chart::torus(&["x", "y", "t"]);
    let (g, frame) = twisted_parts(&chart)?;
    let x = VectorField::coordinate(&chart, 2).add(&frame[0].scale(&v(1).sin()));
    let couple = DefiningCouple::new(g, x)?;
    let structure = LeviFlatStructure::new(couple, frame, standard_j(2))?;
    Ok(Scenario {
        name: "t3_twisted_shifted".into(),
        structure,
        families: vec![],
        tilts: vec![DifferentialForm::coordinate(&chart, 0)],
        expectations: vec![
            Expectation::HNonzero,
            Expectation::ThetaNonzero,
            Expectation::ExactWitness(vec![v(1).sin(), e(0.0)]),
            Expectation::NotExactWitness(vec![e(0.0), e(1.0)]),
        ],
    })
}

fn t5_chart() -> Arc<Chart> {
    Chart::torus(&["x1", "x2", "x3", "x4", "t"])
}

fn t5_product() -> Result<Scenario> {
    let chart = t5_chart();
    let couple = DefiningCouple::new(DifferentialForm::coordinate(&chart, 4), VectorField::coordinate(&chart, 4))?;
    let structure = LeviFlatStructure::new(couple, coords(&chart, &[0, 1, 2, 3]), standard_j(4))?;
    Ok(Scenario {
        name: "t5_product".into(),
        structure,
        families: vec![],
        tilts: (0..4).map(|i| DifferentialForm::coordinate(&chart, i)).collect(),
        expectations: vec![Expectation::HZero],
    })
}

fn mat_mul(a: &[Vec<Expr>], b: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(Expr::zero(), |acc, k| acc + &a[i][k] * &b[k][j])).collect())
        .collect()
}

/// `J′ = P J₀ P⁻¹` with `P ∂₃ = ∂₃ + sin(x₁) ∂₁`, so `J′∂₃ = ∂₄ − sin(x₁) ∂₂`.
fn perturbed_j() -> Vec<Vec<Expr>> {
    let mut p = vec![vec![Expr::zero(); 4]; 4];
    let mut pinv = p.clone();
    for i in 0..4 {
        p[i][i] = e(1.0);
        pinv[i][i] = e(1.0);
    }
    p[0][2] = v(0).sin();
    pinv[0][2] = -v(0).sin();
    mat_mul(&mat_mul(&p, &standard_j(4)), &pinv)
}

fn t5_perturbed_j() -> Result<Scenario> {
    let chart = t5_chart();
    let couple = DefiningCouple::new(DifferentialForm::coordinate(&chart, 4), VectorField::coordinate(&chart, 4))?;
    let structure = LeviFlatStructure::almost_complex(couple, coords(&chart, &[0, 1, 2, 3]), perturbed_j())?;
    Ok(Scenario {
        name: "t5_perturbedJ".into(),
        structure,
        families: vec![],
        tilts: (0..4).map(|i| DifferentialForm::coordinate(&chart, i)).collect(),
        expectations: vec![Expectation::NotLeviFlat],
    })
}

fn family_t3_tilt() -> Result<Scenario> {
    let mut s = t3_flat()?;
    let tau = v(3);
    let fam = Family::new(
        "tilt",
        s.chart(),
        vec![tau.scale(0.7), tau.scale(-0.4), e(0.0)],
        vec![vec![Expr::zero(); 2]; 2],
    )?;
    s.name = "family_t3_tilt".into();
    s.families.push(fam);
    Ok(s)
}

/// `S₀ = [[a, b], [b, −a]]` anticommutes with the standard `J`.
fn family_t3_jrotation() -> Result<Scenario> {
    let mut s = t3_flat()?;
    let tau = v(3);
    let (a, b) = (0.3, 0.5);
    let fam = Family::new(
        "Jrotation",
        s.chart(),
        vec![Expr::zero(); 3],
        vec![vec![tau.scale(a), tau.scale(b)], vec![tau.scale(b), tau.scale(-a)]],
    )?;
    s.name = "family_t3_Jrotation".into();
    s.families.push(fam);
    Ok(s)
}

/// `γ = dt + x dy`, so `dγ ∧ γ = dx∧dy∧dt ≠ 0`.
fn broken_nonintegrable() -> Result<Scenario> {
    let chart = Chart::torus(&["x", "y", "t"]);
    let g = DifferentialForm::one_form(&chart, vec![e(0.0), v(0), e(1.0)])?;
    let couple = DefiningCouple::new_unchecked(g, VectorField::coordinate(&chart, 2))?;
    let e1 = VectorField::coordinate(&chart, 0);
    let e2 = VectorField::new(chart.clone(), vec![e(0.0), e(1.0), -v(0)])?;
    let structure = LeviFlatStructure::unchecked(couple, vec![e1, e2], standard_j(2))?;
    Ok(Scenario {
        name: "broken_nonintegrable".into(),
        structure,
        families: vec![],
        tilts: vec![],
        expectations: vec![Expectation::NonIntegrable],
    })
}

pub fn builtin(name: &str) -> Result<Scenario> {
    match name {
        "t3_flat" => t3_flat(),
        "t3_twisted" => t3_twisted(),
        "t3_twisted_shifted" => t3_twisted_shifted(),
        "t5_product" => t5_product(),
        "t5_perturbedJ" => t5_perturbed_j(),
        "family_t3_tilt" => family_t3_tilt(),
        "family_t3_Jrotation" => family_t3_jrotation(),
        "broken_nonintegrable" => broken_nonintegrable(),
        _ => Err(Error::Config(format!("unknown scenario '{name}'"))),
    }
}

/// A built-in name or a path to a scenario file.
pub fn resolve(spec: &str) -> Result<Scenario> {
    if BUILTINS.contains(&spec) {
        return builtin(spec);
    }
    let path = Path::new(spec);
    if path.exists() {
        return load(path);
    }
    Err(Error::Config(format!("unknown scenario '{spec}' (not a built-in name or an existing file)")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartSpec {
    dim: Option<usize>,
    names: Vec<String>,
    periodic: Option<Vec<bool>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JSpec {
    rows: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySpec {
    name: String,
    #[serde(default)]
    alpha: BTreeMap<String, String>,
    #[serde(rename = "S")]
    s: Option<Vec<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessSpec {
    exact: bool,
    coeffs: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "default_kind")]
    kind: String,
    chart: ChartSpec,
    gamma: BTreeMap<String, String>,
    #[serde(rename = "X")]
    x: BTreeMap<String, String>,
    frame: Vec<BTreeMap<String, String>>,
    #[serde(rename = "J")]
    j: JSpec,
    #[serde(default)]
    tilts: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    families: Vec<FamilySpec>,
    #[serde(default)]
    expect: Vec<String>,
    #[serde(default)]
    witness: Vec<WitnessSpec>,
}

fn default_kind() -> String {
    "levi_flat".into()
}

fn parse_in(chart: &Arc<Chart>, s: &str) -> Result<Expr> {
    Ok(ScalarField::parse(chart, s)?.into_expr())
}

/// Components keyed by coordinate name; missing names are zero.
fn by_name(chart: &Arc<Chart>, parse_chart: &Arc<Chart>, m: &BTreeMap<String, String>) -> Result<Vec<Expr>> {
    let mut out = vec![Expr::zero(); chart.dim()];
    for (k, s) in m {
        let i = chart
            .index_of(k)
            .ok_or_else(|| Error::Config(format!("unknown coordinate '{k}'")))?;
        out[i] = parse_in(parse_chart, s)?;
    }
    Ok(out)
}

fn matrix(chart: &Arc<Chart>, rows: &[Vec<String>]) -> Result<Vec<Vec<Expr>>> {
    rows.iter().map(|r| r.iter().map(|s| parse_in(chart, s)).collect()).collect()
}

/// Parses a scenario from TOML text.
pub fn from_toml(text: &str) -> Result<Scenario> {
    let f: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
    if BUILTINS.contains(&f.name.as_str()) {
        return Err(Error::Config(format!("scenario name '{}' is reserved for a built-in", f.name)));
    }
    let n = f.chart.names.len();
    if f.chart.dim.is_some_and(|d| d != n) {
        return Err(Error::Config("chart dim does not match the number of names".into()));
    }
    let periodic = f.chart.periodic.unwrap_or_else(|| vec![true; n]);
    if f.chart.names.iter().any(|s| s == FAMILY_PARAM) {
        return Err(Error::Config(format!("'{FAMILY_PARAM}' is reserved for the family parameter")));
    }
    let chart = Chart::new(f.chart.names, periodic)?;
    let gamma = DifferentialForm::one_form(&chart, by_name(&chart, &chart, &f.gamma)?)?;
    let x = VectorField::new(chart.clone(), by_name(&chart, &chart, &f.x)?)?;
    let frame = f
        .frame
        .iter()
        .map(|m| VectorField::new(chart.clone(), by_name(&chart, &chart, m)?))
        .collect::<Result<Vec<_>>>()?;
    let j = matrix(&chart, &f.j.rows)?;
    let structure = match f.kind.as_str() {
        "levi_flat" => LeviFlatStructure::new(DefiningCouple::new(gamma, x)?, frame, j)?,
        "almost_complex" => LeviFlatStructure::almost_complex(DefiningCouple::new(gamma, x)?, frame, j)?,
        "unchecked" => LeviFlatStructure::unchecked(DefiningCouple::new_unchecked(gamma, x)?, frame, j)?,
        k => return Err(Error::Config(format!("unknown kind '{k}'"))),
    };
    let tilts = f
        .tilts
        .iter()
        .map(|m| DifferentialForm::one_form(&chart, by_name(&chart, &chart, m)?))
        .collect::<Result<Vec<_>>>()?;
    let ext = extended_chart(&chart)?;
    let m = chart.dim() - 1;
    let families = f
        .families
        .iter()
        .map(|fs| {
            let alpha = by_name(&chart, &ext, &fs.alpha)?;
            let s = match &fs.s {
                Some(rows) => matrix(&ext, rows)?,
                None => vec![vec![Expr::zero(); m]; m],
            };
            Family::new(&fs.name, &chart, alpha, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut expectations = f
        .expect
        .iter()
        .map(|s| match s.as_str() {
            "h_zero" => Ok(Expectation::HZero),
            "h_nonzero" => Ok(Expectation::HNonzero),
            "theta_nonzero" => Ok(Expectation::ThetaNonzero),
            "not_levi_flat" => Ok(Expectation::NotLeviFlat),
            "non_integrable" => Ok(Expectation::NonIntegrable),
            other => Err(Error::Config(format!("unknown expectation '{other}'"))),
        })
        .collect::<Result<Vec<_>>>()?;
    for w in &f.witness {
        if w.coeffs.len() != m {
            return Err(Error::Config(format!("witness needs {m} frame coefficients")));
        }
        let c = w.coeffs.iter().map(|s| parse_in(&chart, s)).collect::<Result<Vec<_>>>()?;
        expectations.push(if w.exact { Expectation::ExactWitness(c) } else { Expectation::NotExactWitness(c) });
    }
    if structure.kind() != StructureKind::LeviFlat && !families.is_empty() {
        return Err(Error::Config("families need a Levi-flat structure".into()));
    }
    Ok(Scenario { name: f.name, structure, families, tilts, expectations })
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_construct() {
        for name in BUILTINS {
            let s = builtin(name).unwrap();
            assert_eq!(&s.name, name);
        }
        assert!(matches!(builtin("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn perturbed_j_squares_to_minus_one_but_is_not_integrable() {
        let s = builtin("t5_perturbedJ").unwrap();
        assert!(!s.structure.is_levi_flat());
        let chart = s.chart().clone();
        let r = LeviFlatStructure::new(s.couple().clone(), s.structure.frame().to_vec(), perturbed_j());
        assert!(r.is_err(), "N_J should be nonzero");
        let _ = chart;
    }

    #[test]
    fn mc_flat_alpha_is_annihilated_by_x() {
        let s = builtin("t3_twisted_shifted").unwrap();
        let a = s.mc_flat_alpha(&[0.4]).unwrap();
        let ax = contract_all(&a, &[s.couple().x().clone()]).unwrap();
        for p in crate::foliation_dgla::check_points(s.chart()) {
            assert!(ax.eval(&p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn family_tangent() {
        let s = builtin("family_t3_Jrotation").unwrap();
        let (a, m) = s.families[0].tangent().unwrap();
        assert!(a.is_structurally_zero() || a.one_form_coeffs().iter().all(Expr::is_zero));
        assert_eq!(m[0][1].as_const(), Some(0.5));
        let (_, m) = s.families[0].at(0.2).unwrap();
        assert!((m[1][1].as_const().unwrap() + 0.06).abs() < 1e-15);
    }

    #[test]
    fn toml_round_trip_of_twisted() {
        let text = r#"
name = "twisted_file"
expect = ["h_zero", "theta_nonzero"]
[chart]
dim = 3
names = ["x", "y", "t"]
[gamma]
x = "0.3*cos(t)"
t = "1"
[X]
t = "1"
[[frame]]
x = "1"
t = "-0.3*cos(t)"
[[frame]]
y = "1"
[J]
rows = [["0", "-1"], ["1", "0"]]
[[tilts]]
x = "1"
[[families]]
name = "tilt"
alpha = { x = "0.5*tau" }
"#;
        let s = from_toml(text).unwrap();
        assert_eq!(s.expectations.len(), 2);
        assert_eq!(s.families.len(), 1);
        assert!(from_toml("name = \"t3_flat\"").is_err());
    }
}
