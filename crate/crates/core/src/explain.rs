//! Sound rule explanations for individual predictions.
//!
//! A prediction `A(a)` of a monotonic model on `d` is explained by the most
//! specific concept `C_L^a` describing `a` in `d` up to depth `L`: it lists
//! the labels of `a` and, for each predicate, exactly how many successors
//! `a` has and what they look like. The rule `C_L^a ⊑ A` derives `A(a)` on
//! `d` and is sound for the model. Smaller restricted rules are tried first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use serde_json::json;

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::forward::predicts;
use crate::graph::Direction;
use crate::logic::{immediate_consequences, satisfies, Concept, RestrictedRule, Rule};
use crate::model::MagnnModel;
use crate::soundness::{aggregation_role, check_restricted};

/// How an explanation was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// The labels of the constant imply the head.
    RestrictedUnary,
    /// The labels plus the presence of successors imply the head.
    RestrictedUnaryExist,
    /// The full depth-`L` description of the constant.
    FullOmega,
    /// The full description of a pruned neighbourhood.
    FullOmegaPruned,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::RestrictedUnary => "restricted-unary",
            Strategy::RestrictedUnaryExist => "restricted-unary-exist",
            Strategy::FullOmega => "full-omega",
            Strategy::FullOmegaPruned => "full-omega-pruned",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub fact: Fact,
    pub rule: Rule,
    /// Set for the two restricted strategies.
    pub restricted: Option<RestrictedRule>,
    pub strategy: Strategy,
    pub body_concept_count: usize,
    /// The dataset the body was read off; for pruned explanations this is
    /// the pruned neighbourhood, otherwise the input dataset.
    pub witness: Dataset,
}

impl Explanation {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "fact: {}", self.fact);
        let _ = writeln!(out, "strategy: {}", self.strategy);
        let _ = writeln!(out, "rule: {}", self.rule.to_text());
        let _ = writeln!(out, "dl: {}", self.rule);
        let _ = writeln!(out, "body_concepts: {}", self.body_concept_count);
        if self.strategy == Strategy::FullOmegaPruned {
            let _ = writeln!(out, "witness: {}", self.witness);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "fact": self.fact.to_string(),
            "strategy": self.strategy,
            "rule": self.rule.to_text(),
            "dl": self.rule.to_string(),
            "body_concepts": self.body_concept_count,
            "witness": self.witness.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })
    }
}

/// Number of body concepts: atoms count 1, each counting node counts 1
/// plus its fillers, and `⊤` counts 0.
pub fn concept_size(c: &Concept) -> usize {
    c.size()
}

struct Builder<'a> {
    d: &'a Dataset,
    direction: Direction,
    /// Upper bounds raised above the successor count, per (constant, predicate).
    slack: &'a BTreeMap<(String, String), u32>,
    memo: BTreeMap<(String, usize), Concept>,
}

impl Builder<'_> {
    fn build(&mut self, c: &str, level: usize) -> Concept {
        if let Some(done) = self.memo.get(&(c.to_string(), level)) {
            return done.clone();
        }
        let mut parts = vec![Concept::Top];
        let atoms: BTreeSet<&str> = self.d.unary_of(c).collect();
        parts.extend(atoms.into_iter().map(Concept::atom));
        if level > 0 {
            for (pred, succ) in self.d.neighbours_by_predicate(c, self.direction) {
                let fillers: Vec<Concept> = succ.iter().map(|s| self.build(s, level - 1)).collect();
                let n = fillers.len() as u32;
                let extra = self.slack.get(&(c.to_string(), pred.to_string())).copied().unwrap_or(0);
                parts.push(Concept::ExistsUnique {
                    role: aggregation_role(pred, self.direction),
                    fillers,
                    max: n + extra,
                });
            }
        }
        let concept = Concept::and(parts);
        self.memo.insert((c.to_string(), level), concept.clone());
        concept
    }
}

/// The concept `C_ℓ^c` describing constant `c` in `d` to depth `level`,
/// following successors along `direction`. Atoms, predicates and
/// successors appear in lexicographic order.
pub fn build_concept(d: &Dataset, c: &str, level: usize, direction: Direction) -> Result<Concept> {
    build_with_slack(d, c, level, direction, &BTreeMap::new())
}

fn build_with_slack(
    d: &Dataset,
    c: &str,
    level: usize,
    direction: Direction,
    slack: &BTreeMap<(String, String), u32>,
) -> Result<Concept> {
    if !d.mentions(c) {
        return Err(Error::UnknownConstant(c.to_string()));
    }
    let mut b = Builder {
        d,
        direction,
        slack,
        memo: BTreeMap::new(),
    };
    Ok(b.build(c, level))
}

fn head_of(fact: &Fact) -> Result<(&str, &str)> {
    match fact {
        Fact::Unary { pred, arg } => Ok((pred, arg)),
        Fact::Binary { .. } => Err(Error::NotPredicted(format!("{fact} is not a unary fact"))),
    }
}

fn check_predicted(m: &MagnnModel, d: &Dataset, fact: &Fact) -> Result<()> {
    head_of(fact)?;
    if predicts(m, d, fact)? {
        Ok(())
    } else {
        Err(Error::NotPredicted(format!("the model does not derive {fact}")))
    }
}

fn restricted_explanation(fact: &Fact, d: &Dataset, r: RestrictedRule, strategy: Strategy) -> Explanation {
    let rule = r.to_rule();
    Explanation {
        fact: fact.clone(),
        body_concept_count: concept_size(&rule.body),
        rule,
        restricted: Some(r),
        strategy,
        witness: d.clone(),
    }
}

fn full_explanation(m: &MagnnModel, fact: &Fact, d: &Dataset, strategy: Strategy) -> Result<Explanation> {
    let (head, a) = head_of(fact)?;
    let body = build_concept(d, a, m.depth(), m.direction)?;
    Ok(Explanation {
        fact: fact.clone(),
        body_concept_count: concept_size(&body),
        rule: Rule::new(body, head),
        restricted: None,
        strategy,
        witness: d.clone(),
    })
}

/// Explains a prediction of a monotonic model. Tries the restricted rule
/// built from the labels of the constant, then adds an existential for
/// each predicate along which the constant has successors, and finally
/// falls back to `C_L^a ⊑ A`.
pub fn explain(m: &MagnnModel, d: &Dataset, fact: &Fact) -> Result<Explanation> {
    m.check_monotone()?;
    check_predicted(m, d, fact)?;
    let (head, a) = head_of(fact)?;
    let labels: Vec<&str> = d.unary_of(a).collect();
    let unary = RestrictedRule::new(head, labels.iter().copied(), []);
    if check_restricted(m, &unary)?.sound {
        return Ok(restricted_explanation(fact, d, unary, Strategy::RestrictedUnary));
    }
    let roles: Vec<_> = d
        .neighbours_by_predicate(a, m.direction)
        .into_keys()
        .map(|p| aggregation_role(p, m.direction))
        .collect();
    if !roles.is_empty() {
        let with_exist = RestrictedRule::new(head, labels.iter().copied(), roles);
        if check_restricted(m, &with_exist)?.sound {
            return Ok(restricted_explanation(fact, d, with_exist, Strategy::RestrictedUnaryExist));
        }
    }
    full_explanation(m, fact, d, Strategy::FullOmega)
}

/// Explains a prediction, shrinking the full description first.
///
/// Starting from the `L`-hop neighbourhood of the constant, candidate
/// deletions are tried greedily in a fixed order: single unary facts, then
/// whole successor groups (all `P`-successors of one constant). A deletion
/// is kept when the model still derives the fact. At most `budget`
/// deletions are tried. The body is rebuilt from the pruned dataset and
/// checked to hold at the constant in `d`; if it does not, the unpruned
/// explanation is returned. Restricted explanations are returned as is.
pub fn prune_explanation(m: &MagnnModel, d: &Dataset, fact: &Fact, budget: usize) -> Result<Explanation> {
    let base = explain(m, d, fact)?;
    if base.strategy != Strategy::FullOmega || budget == 0 {
        return Ok(base);
    }
    let (_, a) = head_of(fact)?;
    let mut current = d.khop_neighborhood(a, m.depth(), m.direction)?;
    let mut tries = 0;
    let mut changed = true;
    while changed && tries < budget {
        changed = false;
        for group in deletion_candidates(&current, m.direction) {
            if tries == budget {
                break;
            }
            if !group.iter().any(|f| current.contains(f)) {
                continue;
            }
            tries += 1;
            let mut smaller = current.clone();
            for f in &group {
                smaller.remove(f);
            }
            // The constant must stay in the dataset for the fact to be derived.
            if smaller.mentions(a) && predicts(m, &smaller, fact)? {
                current = smaller;
                changed = true;
            }
        }
    }
    let current = current.khop_neighborhood(a, m.depth(), m.direction)?;
    let pruned = full_explanation(m, fact, &current, Strategy::FullOmegaPruned)?;
    if pruned.rule == base.rule || !satisfies(d, a, &pruned.rule.body)? {
        return Ok(base);
    }
    Ok(pruned)
}

/// Unary facts in dataset order, then successor groups ordered by
/// (constant, predicate).
fn deletion_candidates(d: &Dataset, direction: Direction) -> Vec<Vec<Fact>> {
    let mut out: Vec<Vec<Fact>> = d.iter().filter(|f| f.is_unary()).map(|f| vec![f.clone()]).collect();
    let mut groups: BTreeMap<(&str, &str), Vec<Fact>> = BTreeMap::new();
    for f in d.iter() {
        if let Fact::Binary {
            pred,
            subject,
            object,
        } = f
        {
            let from = match direction {
                Direction::Out => subject,
                Direction::In => object,
            };
            groups.entry((from.as_str(), pred.as_str())).or_default().push(f.clone());
        }
    }
    out.extend(groups.into_values());
    out
}

/// Raises the `≤_m` bounds of a full explanation. For each constant and
/// predicate with successors, in lexicographic order, fresh unlabelled
/// successors are added one at a time, up to `max_extra`, while the model
/// still derives the fact; each one kept raises the bound by one.
/// Restricted explanations are returned unchanged.
pub fn relax_bounds(m: &MagnnModel, explanation: &Explanation, max_extra: u32) -> Result<Explanation> {
    if explanation.restricted.is_some() || max_extra == 0 {
        return Ok(explanation.clone());
    }
    let fact = &explanation.fact;
    let (_, a) = head_of(fact)?;
    let base = &explanation.witness;
    let hops = m.depth();
    // Constants whose successors appear in the body: those within L - 1 hops.
    let mut reach: BTreeSet<&str> = BTreeSet::from([a]);
    let mut frontier = vec![a];
    for _ in 1..hops {
        let mut next = Vec::new();
        for c in frontier {
            for s in base.neighbours_by_predicate(c, m.direction).into_values().flatten() {
                if reach.insert(s) {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    let mut nodes: Vec<(String, String)> = Vec::new();
    for c in reach {
        for pred in base.neighbours_by_predicate(c, m.direction).into_keys() {
            nodes.push((c.to_string(), pred.to_string()));
        }
    }
    let mut padded = base.clone();
    let mut slack: BTreeMap<(String, String), u32> = BTreeMap::new();
    let mut fresh = 0usize;
    let mut fresh_name = |d: &Dataset| loop {
        fresh += 1;
        let name = format!("_pad{fresh}");
        if !d.mentions(&name) {
            return name;
        }
    };
    for (c, pred) in nodes {
        for _ in 0..max_extra {
            let name = fresh_name(&padded);
            let edge = match m.direction {
                Direction::Out => Fact::binary(pred.clone(), c.clone(), name),
                Direction::In => Fact::binary(pred.clone(), name, c.clone()),
            };
            let mut trial = padded.clone();
            trial.insert(edge);
            if !predicts(m, &trial, fact)? {
                break;
            }
            padded = trial;
            *slack.entry((c.clone(), pred.clone())).or_insert(0) += 1;
        }
    }
    let body = build_with_slack(base, a, hops, m.direction, &slack)?;
    let rule = Rule::new(body, explanation.rule.head.clone());
    debug_assert!(immediate_consequences(&rule, base).contains(fact));
    Ok(Explanation {
        body_concept_count: concept_size(&rule.body),
        rule,
        ..explanation.clone()
    })
}

/// Explanations for every fact the model derives on `d` that is not
/// already in `d`, in fact order.
pub fn explain_all(m: &MagnnModel, d: &Dataset, budget: Option<usize>) -> Result<Vec<Explanation>> {
    let derived = crate::forward::apply(m, d)?;
    derived
        .iter()
        .filter(|f| !d.contains(f))
        .map(|f| match budget {
            Some(b) => prune_explanation(m, d, f, b),
            None => explain(m, d, f),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::facts;
    use crate::logic::{Fragment, Role};
    use crate::model::{Activation, Layer, Matrix};
    use crate::signature::Signature;

    fn worked_example() -> Dataset {
        facts("A1(a) P1(a,b1) P1(a,b2) P2(b3,a) A2(b2) P2(b2,c) P3(c,d)")
    }

    #[test]
    fn worked_example_prints_exactly() {
        let c = build_concept(&worked_example(), "a", 2, Direction::Out).unwrap();
        assert_eq!(
            c.to_string(),
            "⊤ ⊓ A1 ⊓ ∃_2 P1.(⊤, ⊤⊓A2⊓∃_1 P2.(⊤)⊓≤_1 P2.⊤) ⊓ ≤_2 P1.⊤"
        );
        assert_eq!(concept_size(&c), 4);
        assert!(c.is_in(Fragment::Omega));
    }

    #[test]
    fn base_cases() {
        let d = facts("A1(a) A2(a) P(a,b)");
        assert_eq!(build_concept(&d, "a", 0, Direction::Out).unwrap().to_string(), "⊤ ⊓ A1 ⊓ A2");
        assert_eq!(build_concept(&d, "b", 3, Direction::Out).unwrap(), Concept::Top);
        assert!(matches!(build_concept(&d, "z", 1, Direction::Out), Err(Error::UnknownConstant(_))));
        assert_eq!(concept_size(&Concept::Top), 0);
    }

    #[test]
    fn incoming_direction_uses_inverse_roles() {
        let d = facts("P(b,a) U(b)");
        let c = build_concept(&d, "a", 1, Direction::In).unwrap();
        match &c {
            Concept::And(parts) => assert!(matches!(&parts[1], Concept::ExistsUnique { role, .. } if *role == Role::inverse("P"))),
            other => panic!("{other}"),
        }
        assert!(satisfies(&d, "a", &c).unwrap());
    }

    fn copy_model() -> MagnnModel {
        MagnnModel {
            signature: Signature::new(["U", "V"], ["P"]).unwrap(),
            layers: vec![Layer {
                a: Matrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 0.0]),
                b: vec![Matrix::zeros(2, 2)],
                bias: vec![0.0, 0.0],
                activation: Activation::Relu,
            }],
            threshold: 0.5,
            direction: Direction::Out,
        }
    }

    #[test]
    fn restricted_unary_first() {
        let m = copy_model();
        let d = facts("U(a) P(a,b)");
        let e = explain(&m, &d, &Fact::unary("V", "a")).unwrap();
        assert_eq!(e.strategy, Strategy::RestrictedUnary);
        assert_eq!(e.rule.to_string(), "U ⊑ V");
        assert!(matches!(explain(&m, &d, &Fact::unary("V", "b")), Err(Error::NotPredicted(_))));
    }

    #[test]
    fn majority_needs_the_full_description() {
        let m = MagnnModel::majority(0.5);
        let d = facts("P(a,b1) P(a,b2) U(b1) U(b2)");
        let e = explain(&m, &d, &Fact::unary("U", "a")).unwrap();
        assert_eq!(e.strategy, Strategy::FullOmega);
        assert_eq!(e.rule.to_string(), "⊤ ⊓ ∃_2 P.(⊤⊓U, ⊤⊓U) ⊓ ≤_2 P.⊤ ⊑ U");
        assert!(immediate_consequences(&e.rule, &d).contains(&e.fact));
    }

    #[test]
    fn pruning_removes_irrelevant_labels() {
        let sig = Signature::new(["U", "W"], ["P"]).unwrap();
        // Both successors must be labelled at this threshold.
        let mut m = MagnnModel::majority(0.75);
        m.signature = sig;
        for layer in &mut m.layers {
            let (rows, cols) = (layer.out_dim() + 1, layer.in_dim() + 1);
            let widen = |x: &Matrix| {
                let mut w = Matrix::zeros(rows, cols);
                for (r, c, v) in x.entries() {
                    w.set(r, c, v);
                }
                w
            };
            layer.a = widen(&layer.a);
            layer.b = layer.b.iter().map(widen).collect();
            layer.bias.push(0.0);
        }
        assert!(m.validate().is_empty());
        let d = facts("P(a,b1) P(a,b2) U(b1) U(b2) W(b1)");
        let fact = Fact::unary("U", "a");
        let full = explain(&m, &d, &fact).unwrap();
        let pruned = prune_explanation(&m, &d, &fact, 100).unwrap();
        assert_eq!(pruned.strategy, Strategy::FullOmegaPruned);
        assert_eq!(pruned.body_concept_count + 1, full.body_concept_count);
        assert!(satisfies(&d, "a", &pruned.rule.body).unwrap());
        assert_eq!(prune_explanation(&m, &d, &fact, 0).unwrap(), full);
    }

    #[test]
    fn minimal_dataset_is_not_pruned() {
        let m = MagnnModel::majority(0.75);
        let d = facts("P(a,b1) P(a,b2) U(b1) U(b2)");
        let fact = Fact::unary("U", "a");
        assert_eq!(prune_explanation(&m, &d, &fact, 100).unwrap(), explain(&m, &d, &fact).unwrap());
    }

    #[test]
    fn relaxed_bounds_still_derive() {
        let m = MagnnModel::majority(0.5);
        let d = facts("P(a,b1) P(a,b2) U(b1) U(b2)");
        let e = explain(&m, &d, &Fact::unary("U", "a")).unwrap();
        let relaxed = relax_bounds(&m, &e, 5).unwrap();
        // Two labelled successors keep a majority with up to two more.
        assert_eq!(relaxed.rule.to_string(), "⊤ ⊓ ∃_2 P.(⊤⊓U, ⊤⊓U) ⊓ ≤_4 P.⊤ ⊑ U");
        assert!(immediate_consequences(&relaxed.rule, &d).contains(&e.fact));
    }
}
