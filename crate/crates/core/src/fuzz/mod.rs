//! Random testing of rule soundness, exhaustive small-instance checking,
//! and counterexample shrinking.

pub mod brute;
pub mod generate;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::json;

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::forward::apply;
use crate::logic::{immediate_consequences, CompiledConcept, DatasetIndex, Interpretation, PredicateTable, Rule};
use crate::model::MagnnModel;

pub use brute::{brute_force_soundness, exhaustive, BruteForceConfig, BruteVerdict, ExhaustiveResult, DEFAULT_LIMIT};
pub use generate::{random_dataset, random_dataset_with, random_model, trial_rng};

/// Parameters of a fuzzing run.
#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub trials: u64,
    pub seed: u64,
    pub max_constants: usize,
    /// Fact densities, used round-robin by trial index.
    pub densities: Vec<f64>,
    /// Violations kept per rule; further ones are only counted.
    pub keep: usize,
    pub shrink: bool,
    pub jobs: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            trials: 1000,
            seed: 0,
            max_constants: 6,
            densities: vec![0.1, 0.3, 0.6],
            keep: 8,
            shrink: true,
            jobs: 1,
        }
    }
}

impl FuzzConfig {
    fn density(&self, trial: u64) -> f64 {
        if self.densities.is_empty() {
            0.3
        } else {
            self.densities[(trial % self.densities.len() as u64) as usize]
        }
    }

    /// The dataset of trial `trial`.
    pub fn dataset(&self, m: &MagnnModel, trial: u64) -> Dataset {
        let mut rng = trial_rng(self.seed, trial);
        random_dataset_with(
            &mut rng,
            m.signature.unary(),
            m.signature.binary(),
            self.max_constants,
            self.density(trial),
        )
    }
}

/// A dataset on which a rule derives a fact the model does not.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub trial: u64,
    pub dataset: Dataset,
    pub fact: Fact,
    /// A locally minimal violating dataset, with the fact it violates.
    pub shrunk: Option<(Dataset, Fact)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzReport {
    pub rule: Rule,
    pub trials: u64,
    pub seed: u64,
    pub model_digest: String,
    /// Number of (trial, constant) pairs at which the body held.
    pub body_firings: u64,
    pub violation_count: u64,
    /// The first `keep` violations by trial index.
    pub violations: Vec<Violation>,
}

impl FuzzReport {
    pub fn is_vacuous(&self) -> bool {
        self.body_firings == 0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rule: {}", self.rule.to_text());
        let _ = writeln!(out, "model: {}", self.model_digest);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "trials: {}", self.trials);
        let _ = writeln!(out, "body_firings: {}", self.body_firings);
        if self.is_vacuous() {
            let _ = writeln!(out, "vacuous: the body never held");
        }
        let _ = writeln!(out, "violations: {}", self.violation_count);
        for v in &self.violations {
            let _ = writeln!(out, "trial {}: {} not derived on {}", v.trial, v.fact, v.dataset);
            if let Some((d, f)) = &v.shrunk {
                let _ = writeln!(out, "  shrunk: {f} not derived on {d}");
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rule": self.rule.to_text(),
            "model_digest": self.model_digest,
            "seed": self.seed,
            "trials": self.trials,
            "body_firings": self.body_firings,
            "violation_count": self.violation_count,
            "violations": self.violations.iter().map(|v| json!({
                "trial": v.trial,
                "fact": v.fact.to_string(),
                "dataset": v.dataset.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "shrunk": v.shrunk.as_ref().map(|(d, f)| json!({
                    "fact": f.to_string(),
                    "dataset": d.iter().map(ToString::to_string).collect::<Vec<_>>(),
                })),
            })).collect::<Vec<_>>(),
        })
    }
}

struct TrialOutcome {
    firings: Vec<u64>,
    violations: Vec<Vec<Fact>>,
    dataset: Dataset,
}

fn run_trial(m: &MagnnModel, rules: &[(usize, CompiledConcept)], table: &PredicateTable, cfg: &FuzzConfig, trial: u64) -> Result<TrialOutcome> {
    let d = cfg.dataset(m, trial);
    let out = apply(m, &d)?;
    let index = DatasetIndex::new(&d, table);
    let mut firings = vec![0; rules.len()];
    let mut violations = vec![Vec::new(); rules.len()];
    for (i, (head, body)) in rules.iter().enumerate() {
        for x in 0..index.len() {
            if body.holds(&index, x) {
                firings[i] += 1;
                let fact = Fact::unary(m.signature.unary()[*head].clone(), index.constants()[x].clone());
                if !out.contains(&fact) {
                    violations[i].push(fact);
                }
            }
        }
    }
    Ok(TrialOutcome {
        firings,
        violations,
        dataset: d,
    })
}

/// Fuzzes several rules against the same stream of random datasets; each
/// trial's dataset is evaluated by the model once for all rules.
pub fn fuzz_rules(m: &MagnnModel, rules: &[Rule], cfg: &FuzzConfig) -> Result<Vec<FuzzReport>> {
    m.check_evaluable()?;
    let table = PredicateTable::from_signature(&m.signature);
    let compiled = rules
        .iter()
        .map(|r| {
            r.check_signature(&m.signature)?;
            Ok((
                m.signature.unary_index(&r.head).expect("checked"),
                CompiledConcept::new(&r.body, &table),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let digest = m.digest();
    let mut reports: Vec<FuzzReport> = rules
        .iter()
        .map(|r| FuzzReport {
            rule: r.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
            model_digest: digest.clone(),
            body_firings: 0,
            violation_count: 0,
            violations: Vec::new(),
        })
        .collect();
    let mut absorb = |trial: u64, outcome: TrialOutcome| {
        for (i, report) in reports.iter_mut().enumerate() {
            report.body_firings += outcome.firings[i];
            for fact in &outcome.violations[i] {
                report.violation_count += 1;
                if report.violations.len() < cfg.keep {
                    report.violations.push(Violation {
                        trial,
                        dataset: outcome.dataset.clone(),
                        fact: fact.clone(),
                        shrunk: None,
                    });
                }
            }
        }
    };
    let pool = if cfg.jobs > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().ok()
    } else {
        None
    };
    // Trials are processed in chunks so memory stays bounded while the
    // merge still happens in trial order.
    const CHUNK: u64 = 256;
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + CHUNK).min(cfg.trials);
        let outcomes: Vec<Result<TrialOutcome>> = match &pool {
            Some(pool) => pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|t| run_trial(m, &compiled, &table, cfg, t))
                    .collect()
            }),
            None => (start..end).map(|t| run_trial(m, &compiled, &table, cfg, t)).collect(),
        };
        for (t, outcome) in (start..end).zip(outcomes) {
            absorb(t, outcome?);
        }
        start = end;
    }
    if cfg.shrink {
        for report in &mut reports {
            for v in &mut report.violations {
                v.shrunk = Some(shrink_counterexample(m, &report.rule, &v.dataset, &v.fact)?);
            }
        }
    }
    Ok(reports)
}

/// Fuzzes a single rule.
pub fn fuzz_soundness(m: &MagnnModel, r: &Rule, cfg: &FuzzConfig) -> Result<FuzzReport> {
    Ok(fuzz_rules(m, std::slice::from_ref(r), cfg)?.remove(0))
}

/// Whether the rule derives `fact` on `d` and the model does not.
pub fn is_violation(m: &MagnnModel, r: &Rule, d: &Dataset, fact: &Fact) -> Result<bool> {
    Ok(immediate_consequences(r, d).contains(fact) && !apply(m, d)?.contains(fact))
}

/// Greedily removes facts and merges constants while the violation
/// persists. No single fact can be removed from the result without losing
/// the violation.
pub fn shrink_counterexample(m: &MagnnModel, r: &Rule, d: &Dataset, fact: &Fact) -> Result<(Dataset, Fact)> {
    if !is_violation(m, r, d, fact)? {
        return Err(Error::NotAViolation);
    }
    let mut d = d.clone();
    let mut fact = fact.clone();
    loop {
        let mut changed = false;
        let facts: Vec<Fact> = d.iter().cloned().collect();
        for f in facts {
            let mut smaller = d.clone();
            smaller.remove(&f);
            if is_violation(m, r, &smaller, &fact)? {
                d = smaller;
                changed = true;
            }
        }
        let constants: Vec<String> = d.constants().into_iter().map(str::to_string).collect();
        'merge: for (i, keep) in constants.iter().enumerate() {
            for gone in &constants[i + 1..] {
                let rename = |c: &str| if c == gone { keep.clone() } else { c.to_string() };
                let merged = d.rename(rename);
                let merged_fact = fact.map_constants(rename);
                if merged.len() < d.len() || merged.constants().len() < d.constants().len() {
                    if is_violation(m, r, &merged, &merged_fact)? {
                        d = merged;
                        fact = merged_fact;
                        changed = true;
                        break 'merge;
                    }
                }
            }
        }
        if !changed {
            return Ok((d, fact));
        }
    }
}
