//! Deciding soundness of monotonic rules for monotonic models.
//!
//! For a model with non-negative matrices, a restricted rule
//! `∃P_1.⊤ ⊓ … ⊓ A_1 ⊓ … ⊑ H` is sound iff the model derives `H(a)` on the
//! smallest dataset satisfying the body at `a`: the unary atoms on `a` and
//! one shared successor `b` for all the existentials. Every ELUQ rule is
//! subsumed by, and subsumes each disjunct of, a finite set of restricted
//! rules, so its soundness reduces to a handful of forward passes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::json;

use crate::dataset::{Dataset, Fact};
use crate::error::Result;
use crate::forward::apply;
use crate::graph::Direction;
use crate::logic::{BodyKind, Concept, Fragment, RestrictedRule, Role, Rule};
use crate::model::MagnnModel;
use crate::signature::Signature;

/// The constant at which base datasets satisfy the rule body.
pub const BASE_CONSTANT: &str = "a";
const SUCCESSOR: &str = "b";
const DETACHED: &str = "c";

/// The role a model aggregates over for binary predicate `pred`.
pub fn aggregation_role(pred: &str, direction: Direction) -> Role {
    match direction {
        Direction::Out => Role::new(pred),
        Direction::In => Role::inverse(pred),
    }
}

fn role_fact(role: &Role, near: &str, far: &str) -> Fact {
    if role.inverse {
        Fact::binary(role.pred.clone(), far, near)
    } else {
        Fact::binary(role.pred.clone(), near, far)
    }
}

/// The datasets whose model outputs decide soundness of `r`.
///
/// Unary body atoms are placed on `a`. Existentials over roles the model
/// aggregates along share one successor `b`; existentials over roles in the
/// opposite direction share a second constant `c`, which the model at `a`
/// never sees. An empty body yields a single dataset in which `a` has no
/// labels and no aggregated neighbours. Without binary predicates such a
/// dataset cannot mention `a`, so one dataset `{A'(a)}` per unary predicate
/// is returned instead; by monotonicity they jointly decide the rule.
pub fn base_datasets(r: &RestrictedRule, sig: &Signature, direction: Direction) -> Vec<Dataset> {
    let mut d = Dataset::new();
    for a in &r.unary {
        d.insert(Fact::unary(a.clone(), BASE_CONSTANT));
    }
    for role in &r.exist {
        let aggregated = role.inverse == (direction == Direction::In);
        let far = if aggregated { SUCCESSOR } else { DETACHED };
        d.insert(role_fact(role, BASE_CONSTANT, far));
    }
    if !d.is_empty() {
        return vec![d];
    }
    match sig.binary().first() {
        Some(p) => {
            // `a` is reached only along the direction the model ignores.
            let away = match direction {
                Direction::Out => Role::inverse(p.clone()),
                Direction::In => Role::new(p.clone()),
            };
            vec![Dataset::from_iter([role_fact(&away, BASE_CONSTANT, SUCCESSOR)])]
        }
        None => sig
            .unary()
            .iter()
            .map(|u| Dataset::from_iter([Fact::unary(u.clone(), BASE_CONSTANT)]))
            .collect(),
    }
}

/// Outcome of checking one restricted rule.
#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessVerdict {
    pub rule: RestrictedRule,
    pub sound: bool,
    /// A base dataset on which the body holds at `a` but the model does not
    /// derive the head there. Present iff the rule is unsound.
    pub witness: Option<Dataset>,
}

/// Checks a restricted rule against a monotonic model.
pub fn check_restricted(m: &MagnnModel, r: &RestrictedRule) -> Result<SoundnessVerdict> {
    m.check_monotone()?;
    r.to_rule().check_signature(&m.signature)?;
    let head = Fact::unary(r.head.clone(), BASE_CONSTANT);
    for d in base_datasets(r, &m.signature, m.direction) {
        if !apply(m, &d)?.contains(&head) {
            return Ok(SoundnessVerdict {
                rule: r.clone(),
                sound: false,
                witness: Some(d),
            });
        }
    }
    Ok(SoundnessVerdict {
        rule: r.clone(),
        sound: true,
        witness: None,
    })
}

/// The restricted rules obtained from an ELUQ rule by distributing outer
/// disjunctions and weakening every quantified conjunct to `∃R.⊤`. Each
/// returned rule subsumes its source disjunct, and together they subsume
/// the input. Sorted and duplicate-free.
pub fn reduce_eluq(r: &Rule) -> Result<Vec<RestrictedRule>> {
    r.check_fragment(Fragment::Eluq)?;
    let reduced: BTreeSet<RestrictedRule> = disjuncts(&r.body)
        .into_iter()
        .map(|conjuncts| {
            let mut out = RestrictedRule::new(r.head.clone(), Vec::<String>::new(), []);
            for c in conjuncts {
                match c {
                    Concept::Atomic(a) => {
                        out.unary.insert(a.clone());
                    }
                    Concept::Exists(role, _) | Concept::AtLeast(_, role, _) => {
                        out.exist.insert(role.clone());
                    }
                    _ => unreachable!("disjuncts only yields atoms and quantifiers"),
                }
            }
            out
        })
        .collect();
    Ok(reduced.into_iter().collect())
}

/// Outer-level disjunctive normal form: a list of disjuncts, each a list of
/// atoms and quantified concepts. `⊤` contributes nothing.
fn disjuncts(c: &Concept) -> Vec<Vec<&Concept>> {
    match c {
        Concept::Top => vec![vec![]],
        Concept::Or(parts) => parts.iter().flat_map(disjuncts).collect(),
        Concept::And(parts) => parts.iter().fold(vec![vec![]], |acc, p| {
            let options = disjuncts(p);
            acc.iter()
                .flat_map(|prefix| {
                    options.iter().map(move |o| {
                        let mut v = prefix.clone();
                        v.extend(o.iter().copied());
                        v
                    })
                })
                .collect()
        }),
        other => vec![vec![other]],
    }
}

/// Outcome of checking an ELUQ rule.
#[derive(Clone, Debug, PartialEq)]
pub struct EluqVerdict {
    pub rule: Rule,
    pub sound: bool,
    /// Verdicts of the restricted rules the input reduces to.
    pub reduced: Vec<SoundnessVerdict>,
}

/// An ELUQ rule is sound iff every rule of its reduction is.
pub fn check_eluq(m: &MagnnModel, r: &Rule) -> Result<EluqVerdict> {
    m.check_monotone()?;
    r.check_signature(&m.signature)?;
    let reduced = reduce_eluq(r)?
        .iter()
        .map(|rr| check_restricted(m, rr))
        .collect::<Result<Vec<_>>>()?;
    Ok(EluqVerdict {
        rule: r.clone(),
        sound: reduced.iter().all(|v| v.sound),
        reduced,
    })
}

/// Options for [`enumerate_sound`].
#[derive(Clone, Debug)]
pub struct ExtractionOptions {
    /// Largest body size considered; clamped to `δ + |Col|`.
    pub max_body_size: usize,
    /// Skip model checks for candidates subsumed by a rule already found.
    pub prune: bool,
    /// Worker threads for model checks; `1` runs on the calling thread.
    pub jobs: usize,
}

impl ExtractionOptions {
    pub fn new(max_body_size: usize) -> Self {
        ExtractionOptions {
            max_body_size,
            prune: true,
            jobs: 1,
        }
    }
}

/// Result of enumerating restricted rules.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionReport {
    pub max_body_size: usize,
    /// Sound rules not subsumed by another sound rule, in enumeration order.
    pub minimal_sound: Vec<RestrictedRule>,
    /// Sound candidates subsumed by a smaller sound rule.
    pub subsumed_sound_count: u64,
    /// Candidates visited, pruned or not.
    pub candidates_checked: u64,
    /// Candidates decided by running the model.
    pub model_evaluations: u64,
    /// Number of minimal sound rules per body size.
    pub per_body_size: BTreeMap<usize, usize>,
}

/// Counts of minimal sound rules by body kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub total: usize,
    pub top: usize,
    pub unary: usize,
    pub binary: usize,
    pub mixed: usize,
}

impl ExtractionReport {
    pub fn kind_counts(&self) -> KindCounts {
        let mut k = KindCounts::default();
        for r in &self.minimal_sound {
            k.total += 1;
            match r.kind() {
                BodyKind::Top => k.top += 1,
                BodyKind::Unary => k.unary += 1,
                BodyKind::Binary => k.binary += 1,
                BodyKind::Mixed => k.mixed += 1,
            }
        }
        k
    }

    /// One rule per line in the rule grammar, then a summary block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.minimal_sound {
            let _ = writeln!(out, "{}", r.to_rule().to_text());
        }
        let k = self.kind_counts();
        let _ = writeln!(out, "# max_body_size {}", self.max_body_size);
        let _ = writeln!(out, "# candidates_checked {}", self.candidates_checked);
        let _ = writeln!(out, "# model_evaluations {}", self.model_evaluations);
        let _ = writeln!(out, "# subsumed_sound {}", self.subsumed_sound_count);
        let _ = writeln!(
            out,
            "# Tot {} Top {} Un {} Bin {} Mix {}",
            k.total, k.top, k.unary, k.binary, k.mixed
        );
        for (size, count) in &self.per_body_size {
            let _ = writeln!(out, "# body_size {size} {count}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let k = self.kind_counts();
        json!({
            "max_body_size": self.max_body_size,
            "minimal_sound": self.minimal_sound.iter().map(|r| r.to_rule().to_text()).collect::<Vec<_>>(),
            "subsumed_sound": self.subsumed_sound_count,
            "candidates_checked": self.candidates_checked,
            "model_evaluations": self.model_evaluations,
            "per_body_size": self.per_body_size.iter().map(|(s, c)| (s.to_string(), *c)).collect::<BTreeMap<_, _>>(),
            "counts": { "Tot": k.total, "Top": k.top, "Un": k.unary, "Bin": k.binary, "Mix": k.mixed },
        })
    }
}

/// All `n`-element subsets of `0..items` as bitmasks, in lexicographic
/// order of their sorted element lists.
fn subsets_of_size(items: usize, n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(n);
    fn rec(start: usize, items: usize, n: usize, stack: &mut Vec<usize>, out: &mut Vec<u64>) {
        if stack.len() == n {
            out.push(stack.iter().fold(0u64, |m, &i| m | 1 << i));
            return;
        }
        for i in start..items {
            stack.push(i);
            rec(i + 1, items, n, stack, out);
            stack.pop();
        }
    }
    rec(0, items, n, &mut stack, &mut out);
    out
}

/// Every restricted rule over `sig` whose existentials range over the
/// roles aggregated along `direction`: `δ · 2^(δ + |Col|)` rules, ordered
/// by body size, then head, then body.
pub fn restricted_candidates(sig: &Signature, direction: Direction) -> Vec<RestrictedRule> {
    let delta = sig.delta();
    let items = delta + sig.colours();
    let mut out = Vec::new();
    for n in 0..=items {
        let masks = subsets_of_size(items, n);
        for head in sig.unary() {
            for &mask in &masks {
                let unary = (0..delta).filter(|i| mask >> i & 1 == 1).map(|i| sig.unary()[i].clone());
                let exist = (0..sig.colours())
                    .filter(|c| mask >> (delta + c) & 1 == 1)
                    .map(|c| aggregation_role(&sig.binary()[c], direction));
                out.push(RestrictedRule::new(head.clone(), unary, exist));
            }
        }
    }
    out
}

/// Enumerates restricted rules over the model's signature by increasing
/// body size, keeping the sound ones that no smaller sound rule subsumes.
/// Existentials range over the roles the model aggregates along.
pub fn enumerate_sound(m: &MagnnModel, options: &ExtractionOptions) -> Result<ExtractionReport> {
    m.check_monotone()?;
    let sig = &m.signature;
    let delta = sig.delta();
    let items = delta + sig.colours();
    let max = options.max_body_size.min(items);
    let roles: Vec<Role> = sig
        .binary()
        .iter()
        .map(|p| aggregation_role(p, m.direction))
        .collect();
    let body_of = |mask: u64| {
        let unary: Vec<String> = (0..delta)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| sig.unary()[i].clone())
            .collect();
        let exist: Vec<Role> = (0..sig.colours())
            .filter(|c| mask >> (delta + c) & 1 == 1)
            .map(|c| roles[c].clone())
            .collect();
        (unary, exist)
    };
    // One forward pass per body decides every head at once.
    let outputs = |mask: u64| -> Result<Vec<bool>> {
        let (unary, exist) = body_of(mask);
        let probe = RestrictedRule::new(sig.unary()[0].clone(), unary, exist);
        let mut derived = vec![true; delta];
        for d in base_datasets(&probe, sig, m.direction) {
            let out = apply(m, &d)?;
            for (h, name) in sig.unary().iter().enumerate() {
                derived[h] &= out.contains(&Fact::unary(name.clone(), BASE_CONSTANT));
            }
        }
        Ok(derived)
    };
    // Falls back to the calling thread if a pool cannot be created.
    let pool = if options.jobs > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(options.jobs).build().ok()
    } else {
        None
    };

    let mut found: Vec<Vec<u64>> = vec![Vec::new(); delta];
    let mut sound_all: Vec<Vec<u64>> = vec![Vec::new(); delta];
    let mut report = ExtractionReport {
        max_body_size: max,
        minimal_sound: Vec::new(),
        subsumed_sound_count: 0,
        candidates_checked: 0,
        model_evaluations: 0,
        per_body_size: BTreeMap::new(),
    };
    for n in 0..=max {
        let masks = subsets_of_size(items, n);
        // Pruning only consults rules of smaller size, so every decision in
        // this level is known before any of its model checks run.
        let mut needed: Vec<u64> = Vec::new();
        for &mask in &masks {
            let all_pruned = (0..delta).all(|h| options.prune && found[h].iter().any(|&s| s & mask == s));
            if !all_pruned {
                needed.push(mask);
            }
        }
        let evaluated: Vec<Result<Vec<bool>>> = match &pool {
            Some(pool) => pool.install(|| needed.par_iter().map(|&mask| outputs(mask)).collect()),
            None => needed.iter().map(|&mask| outputs(mask)).collect(),
        };
        let mut by_mask: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
        for (mask, out) in needed.iter().zip(evaluated) {
            by_mask.insert(*mask, out?);
        }
        let mut level: Vec<(usize, u64)> = Vec::new();
        for h in 0..delta {
            for &mask in &masks {
                report.candidates_checked += 1;
                if options.prune && found[h].iter().any(|&s| s & mask == s) {
                    report.subsumed_sound_count += 1;
                    continue;
                }
                report.model_evaluations += 1;
                if !by_mask[&mask][h] {
                    continue;
                }
                if sound_all[h].iter().any(|&s| s & mask == s) {
                    report.subsumed_sound_count += 1;
                } else {
                    level.push((h, mask));
                }
                sound_all[h].push(mask);
            }
        }
        for (h, mask) in level {
            found[h].push(mask);
            let (unary, exist) = body_of(mask);
            report.minimal_sound.push(RestrictedRule::new(sig.unary()[h].clone(), unary, exist));
            *report.per_body_size.entry(n).or_insert(0) += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::facts;
    use crate::error::Error;
    use crate::model::{Activation, Layer, Matrix};

    fn copy_model() -> MagnnModel {
        MagnnModel {
            signature: Signature::new(["U"], ["P"]).unwrap(),
            layers: vec![Layer {
                a: Matrix::from_vec(1, 1, vec![1.0]),
                b: vec![Matrix::from_vec(1, 1, vec![0.0])],
                bias: vec![0.0],
                activation: Activation::Relu,
            }],
            threshold: 0.5,
            direction: Direction::Out,
        }
    }

    fn rr(head: &str, unary: &[&str], exist: &[&str]) -> RestrictedRule {
        RestrictedRule::new(head, unary.iter().copied(), exist.iter().map(|p| Role::new(*p)))
    }

    #[test]
    fn base_dataset_shapes() {
        let sig = Signature::new(["A1", "A2", "A3"], ["P1", "P2"]).unwrap();
        let r = rr("A3", &["A1", "A2"], &["P1", "P2"]);
        assert_eq!(
            base_datasets(&r, &sig, Direction::Out),
            vec![facts("A1(a) A2(a) P1(a,b) P2(a,b)")]
        );
        assert_eq!(base_datasets(&rr("A", &[], &[]), &sig, Direction::Out), vec![facts("P1(b,a)")]);
        assert_eq!(base_datasets(&rr("A2", &["A1"], &[]), &sig, Direction::Out), vec![facts("A1(a)")]);
        assert_eq!(base_datasets(&rr("A", &[], &[]), &sig, Direction::In), vec![facts("P1(a,b)")]);
    }

    #[test]
    fn base_dataset_for_inverse_roles() {
        let sig = Signature::new(["U"], ["P", "Q"]).unwrap();
        let r = RestrictedRule::new("U", ["U"], [Role::inverse("P"), Role::new("Q")]);
        assert_eq!(base_datasets(&r, &sig, Direction::In), vec![facts("U(a) P(b,a) Q(a,c)")]);
        assert_eq!(base_datasets(&r, &sig, Direction::Out), vec![facts("U(a) P(c,a) Q(a,b)")]);
    }

    #[test]
    fn empty_body_without_binary_predicates() {
        let sig = Signature::new(["A", "B"], Vec::<String>::new()).unwrap();
        assert_eq!(
            base_datasets(&rr("A", &[], &[]), &sig, Direction::Out),
            vec![facts("A(a)"), facts("B(a)")]
        );
    }

    #[test]
    fn copy_and_majority_verdicts() {
        let copy = copy_model();
        assert!(check_restricted(&copy, &rr("U", &["U"], &[])).unwrap().sound);
        let majority = MagnnModel::majority(0.5);
        let v = check_restricted(&majority, &rr("U", &["U"], &[])).unwrap();
        assert!(!v.sound);
        assert_eq!(v.witness, Some(facts("U(a)")));
        assert!(!check_restricted(&majority, &rr("U", &["U"], &["P"])).unwrap().sound);
        assert!(!check_restricted(&majority, &rr("U", &[], &[])).unwrap().sound);
    }

    #[test]
    fn rejects_non_monotone_model() {
        let mut m = copy_model();
        m.layers[0].b[0].set(0, 0, -1.0);
        assert!(matches!(check_restricted(&m, &rr("U", &["U"], &[])), Err(Error::NotMonotonic(_))));
    }

    #[test]
    fn rejects_foreign_predicates() {
        assert!(check_restricted(&copy_model(), &rr("V", &[], &[])).is_err());
    }

    #[test]
    fn paper_reduction() {
        let r: Rule = "ATLEAST 3 P1.(A1 OR A2) AND EXISTS P2.(EXISTS P1.(A3)) OR A4 => A5".parse().unwrap();
        let reduced = reduce_eluq(&r).unwrap();
        let expected: BTreeSet<RestrictedRule> = [rr("A5", &[], &["P1", "P2"]), rr("A5", &["A4"], &[])].into();
        assert_eq!(reduced.into_iter().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn reduction_fixpoint_and_nesting() {
        let r = rr("H", &["A"], &["P"]).to_rule();
        assert_eq!(reduce_eluq(&r).unwrap(), vec![rr("H", &["A"], &["P"])]);
        let r: Rule = "EXISTS P.(EXISTS P.(TOP)) => A".parse().unwrap();
        assert_eq!(reduce_eluq(&r).unwrap(), vec![rr("A", &[], &["P"])]);
        let r: Rule = "FORALL P.(A) => A".parse().unwrap();
        assert!(matches!(reduce_eluq(&r), Err(Error::Fragment { .. })));
    }

    #[test]
    fn distributes_conjunction_over_disjunction() {
        let r: Rule = "(A OR B) AND (C OR EXISTS P.(A)) => H".parse().unwrap();
        let got: BTreeSet<_> = reduce_eluq(&r).unwrap().into_iter().collect();
        let expected: BTreeSet<_> = [
            rr("H", &["A", "C"], &[]),
            rr("H", &["A"], &["P"]),
            rr("H", &["B", "C"], &[]),
            rr("H", &["B"], &["P"]),
        ]
        .into();
        assert_eq!(got, expected);
    }

    #[test]
    fn eluq_verdicts_on_copy_model() {
        let m = copy_model();
        let r: Rule = "ATLEAST 2 P.(U) OR U => U".parse().unwrap();
        let v = check_eluq(&m, &r).unwrap();
        assert!(!v.sound);
        assert_eq!(v.reduced.len(), 2);
        let r: Rule = "U AND EXISTS P.(U) => U".parse().unwrap();
        assert!(check_eluq(&m, &r).unwrap().sound);
    }

    #[test]
    fn copy_model_extraction() {
        let report = enumerate_sound(&copy_model(), &ExtractionOptions::new(1)).unwrap();
        assert_eq!(report.minimal_sound, vec![rr("U", &["U"], &[])]);
        assert_eq!(report.candidates_checked, 3);
        assert_eq!(report.per_body_size, BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn full_enumeration_visits_every_candidate() {
        let sig = Signature::new(["A", "B", "C"], ["P", "Q"]).unwrap();
        let mut m = MagnnModel::majority(0.5);
        m.signature = sig;
        m.layers = vec![Layer {
            a: Matrix::from_vec(3, 3, vec![1.0; 9]),
            b: vec![Matrix::from_vec(3, 3, vec![0.5; 9]), Matrix::zeros(3, 3)],
            bias: vec![0.0; 3],
            activation: Activation::Relu,
        }];
        let report = enumerate_sound(&m, &ExtractionOptions::new(10)).unwrap();
        assert_eq!(report.max_body_size, 5);
        assert_eq!(report.candidates_checked, 3 * (1 << 5));
        let zero = enumerate_sound(&m, &ExtractionOptions::new(0)).unwrap();
        assert_eq!(zero.candidates_checked, 3);
        let all = restricted_candidates(&m.signature, Direction::Out);
        assert_eq!(all.len(), 3 * (1 << 5));
        assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), all.len());
        assert_eq!(all[0].body_size(), 0);
    }

    #[test]
    fn sound_top_rule_subsumes_its_head() {
        let mut m = copy_model();
        m.layers[0].bias = vec![1.0];
        let report = enumerate_sound(&m, &ExtractionOptions::new(2)).unwrap();
        assert_eq!(report.minimal_sound, vec![rr("U", &[], &[])]);
        assert_eq!(report.subsumed_sound_count, 3);
        assert_eq!(report.model_evaluations, 1);
    }

    #[test]
    fn report_text_lists_rules_and_summary() {
        let report = enumerate_sound(&copy_model(), &ExtractionOptions::new(1)).unwrap();
        let text = report.to_text();
        assert!(text.starts_with("U => U\n"));
        assert!(text.contains("# Tot 1 Top 0 Un 1 Bin 0 Mix 0\n"));
    }
}
