//! Running a selection of identities on a scenario and the JSON report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::residual::Residual;
use crate::sampling::stream;
use crate::scenarios::Scenario;
use crate::suites::{catalogue, Aux, Direction, Identity};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub suite: String,
    pub seed: u64,
    pub points: usize,
    /// Tolerance overrides by identity id.
    pub tol: BTreeMap<String, f64>,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(scenario: &str) -> RunConfig {
        RunConfig {
            scenario: scenario.to_string(),
            suite: "all".into(),
            seed: 42,
            points: 20,
            tol: BTreeMap::new(),
            jobs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub suite: String,
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub pass: bool,
    pub tolerance: f64,
    pub direction: Direction,
    pub max_abs: Option<f64>,
    pub max_rel: Option<f64>,
    pub samples: Vec<Option<f64>>,
    pub auxiliary: BTreeMap<String, f64>,
    pub diagnostics: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config: RunConfig,
    pub identities: Vec<IdentityReport>,
    pub summary: Summary,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn get(&self, id: &str) -> Option<&IdentityReport> {
        self.identities.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Identities named by a comma-separated selector. Each term is `all`, a suite
/// name, or a glob over identity ids; a term matching nothing is an error.
pub fn select(selector: &str) -> Result<Vec<&'static Identity>> {
    let mut keep = vec![false; catalogue().len()];
    for term in selector.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let pat = glob::Pattern::new(term).map_err(|e| Error::Config(format!("bad selector '{term}': {e}")))?;
        let mut hit = false;
        for (k, ident) in catalogue().iter().enumerate() {
            if term == "all" || term == ident.suite || pat.matches(ident.id) {
                keep[k] = true;
                hit = true;
            }
        }
        if !hit {
            return Err(Error::Config(format!("selector '{term}' matches no identity")));
        }
    }
    let out: Vec<_> = catalogue().iter().zip(keep).filter(|(_, k)| *k).map(|(i, _)| i).collect();
    if out.is_empty() {
        return Err(Error::Config("empty identity selection".into()));
    }
    Ok(out)
}

fn check_overrides(cfg: &RunConfig) -> Result<()> {
    for (id, v) in &cfg.tol {
        if !catalogue().iter().any(|i| i.id == id) {
            return Err(Error::Config(format!("tolerance override for unknown identity '{id}'")));
        }
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Config(format!("tolerance for '{id}' must be a positive number")));
        }
    }
    Ok(())
}

type SampleOutcome = std::result::Result<(Residual, Aux), String>;

fn run_sample(ident: &Identity, sc: &Scenario, seed: u64, k: usize) -> SampleOutcome {
    let mut rng = stream(seed, &sc.name, ident.id, k);
    let mut aux = Aux::default();
    let run = std::panic::AssertUnwindSafe(|| (ident.sample)(sc, &mut rng, &mut aux));
    match std::panic::catch_unwind(run) {
        Ok(Ok(r)) => Ok((r, aux)),
        Ok(Err(e)) => Err(format!("sample {k}: {e}")),
        Err(_) => Err(format!("sample {k}: evaluation panicked")),
    }
}

fn summarise(ident: &Identity, cfg: &RunConfig, outcomes: Vec<SampleOutcome>) -> IdentityReport {
    let tolerance = cfg.tol.get(ident.id).copied().unwrap_or(ident.tol);
    let mut total = Residual::default();
    let mut auxiliary = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut samples = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok((r, aux)) => {
                total.merge(r);
                samples.push(Some(r.max_rel));
                for (k, v) in aux.0 {
                    let e = auxiliary.entry(k).or_insert(f64::NEG_INFINITY);
                    *e = v.max(*e);
                }
            }
            Err(d) => {
                samples.push(None);
                diagnostics.push(d);
            }
        }
    }
    let measured = samples.iter().any(Option::is_some);
    let within = match ident.direction {
        Direction::AtMost => total.max_rel <= tolerance,
        Direction::Above => total.max_rel > tolerance,
    };
    let status = if diagnostics.is_empty() && measured && within { Status::Pass } else { Status::Fail };
    IdentityReport {
        suite: ident.suite.into(),
        id: ident.id.into(),
        anchor: ident.anchor.into(),
        status,
        pass: status == Status::Pass,
        tolerance,
        direction: ident.direction,
        max_abs: measured.then_some(total.max_abs),
        max_rel: measured.then_some(total.max_rel),
        samples,
        auxiliary,
        diagnostics,
        seed: cfg.seed,
    }
}

fn skipped(ident: &Identity, cfg: &RunConfig, why: String) -> IdentityReport {
    IdentityReport {
        suite: ident.suite.into(),
        id: ident.id.into(),
        anchor: ident.anchor.into(),
        status: Status::Skipped,
        pass: false,
        tolerance: cfg.tol.get(ident.id).copied().unwrap_or(ident.tol),
        direction: ident.direction,
        max_abs: None,
        max_rel: None,
        samples: Vec::new(),
        auxiliary: BTreeMap::new(),
        diagnostics: vec![format!("requires {why}")],
        seed: cfg.seed,
    }
}

/// Runs the selected identities on `sc`. Samples are evaluated in parallel but
/// reduced in a fixed order, so the report does not depend on `jobs`.
pub fn run(sc: &Scenario, cfg: &RunConfig) -> Result<Report> {
    if cfg.points == 0 {
        return Err(Error::Config("--points must be positive".into()));
    }
    check_overrides(cfg)?;
    let selected = select(&cfg.suite)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let work: Vec<(usize, usize)> = selected
        .iter()
        .enumerate()
        .filter(|(_, i)| i.unmet(sc).is_none())
        .flat_map(|(k, _)| (0..cfg.points).map(move |s| (k, s)))
        .collect();
    let outcomes: Vec<SampleOutcome> =
        pool.install(|| work.par_iter().map(|&(k, s)| run_sample(selected[k], sc, cfg.seed, s)).collect());

    let mut outcomes = outcomes.into_iter();
    let mut identities = Vec::with_capacity(selected.len());
    for ident in &selected {
        match ident.unmet(sc) {
            Some(req) => identities.push(skipped(ident, cfg, req.describe())),
            None => {
                let mine: Vec<_> = outcomes.by_ref().take(cfg.points).collect();
                identities.push(summarise(ident, cfg, mine));
            }
        }
    }
    let mut summary = Summary { total: identities.len(), ..Summary::default() };
    for r in &identities {
        match r.status {
            Status::Pass => summary.passed += 1,
            Status::Fail => summary.failed += 1,
            Status::Skipped => summary.skipped += 1,
        }
    }
    Ok(Report { schema: SCHEMA_VERSION, config: cfg.clone(), identities, summary })
}
