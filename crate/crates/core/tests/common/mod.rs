//! Generators and independent reference implementations shared by the
//! integration tests. Nothing here calls into the code it is compared with.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use magnn_core::logic::{Concept, Role, Rule};
use magnn_core::{Dataset, Direction, Fact, MagnnModel, Signature};
use proptest::prelude::*;

pub const UNARY: [&str; 3] = ["A1", "A2", "A3"];
pub const BINARY: [&str; 2] = ["P1", "P2"];

pub fn small_signature() -> Signature {
    Signature::new(UNARY, BINARY).unwrap()
}

/// Datasets over `UNARY`/`BINARY` and constants `k0..k{n-1}`.
pub fn arb_dataset(constants: usize, max_facts: usize) -> impl Strategy<Value = Dataset> {
    let unary = (0..UNARY.len(), 0..constants).prop_map(|(p, c)| Fact::unary(UNARY[p], format!("k{c}")));
    let binary = (0..BINARY.len(), 0..constants, 0..constants)
        .prop_map(|(p, a, b)| Fact::binary(BINARY[p], format!("k{a}"), format!("k{b}")));
    prop::collection::vec(prop_oneof![unary, binary], 0..=max_facts).prop_map(|fs| fs.into_iter().collect())
}

pub fn arb_role() -> impl Strategy<Value = Role> {
    (0..BINARY.len(), any::<bool>()).prop_map(|(p, inv)| Role {
        pred: BINARY[p].to_string(),
        inverse: inv,
    })
}

fn arb_atom() -> impl Strategy<Value = Concept> {
    prop_oneof![
        1 => Just(Concept::Top),
        3 => (0..UNARY.len()).prop_map(|i| Concept::atom(UNARY[i])),
    ]
}

/// ELUQ concepts: `⊤`, atoms, `⊓`, `⊔`, `∃R.C` and `≥n R.C`.
pub fn arb_eluq() -> impl Strategy<Value = Concept> {
    arb_atom().prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Concept::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Concept::Or),
            (arb_role(), inner.clone()).prop_map(|(r, c)| Concept::exists(r, c)),
            (1..=3u32, arb_role(), inner).prop_map(|(n, r, c)| Concept::at_least(n, r, c)),
        ]
    })
}

pub fn arb_eluq_rule() -> impl Strategy<Value = Rule> {
    (arb_eluq(), 0..UNARY.len()).prop_map(|(c, h)| Rule::new(c, UNARY[h]))
}

/// Concepts using every operator, for syntax and semantics tests.
pub fn arb_any_concept() -> impl Strategy<Value = Concept> {
    arb_atom().prop_recursive(3, 20, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Concept::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Concept::Or),
            inner.clone().prop_map(|c| Concept::Not(Box::new(c))),
            (arb_role(), inner.clone()).prop_map(|(r, c)| Concept::exists(r, c)),
            (arb_role(), inner.clone()).prop_map(|(r, c)| Concept::ForAll(r, Box::new(c))),
            (1..=3u32, arb_role(), inner.clone()).prop_map(|(n, r, c)| Concept::at_least(n, r, c)),
            (0..=3u32, arb_role(), inner.clone()).prop_map(|(n, r, c)| Concept::AtMost(n, r, Box::new(c))),
            (arb_role(), prop::collection::vec(inner, 1..=3), 0..=2u32).prop_map(|(role, fillers, slack)| {
                let max = fillers.len() as u32 + slack;
                Concept::ExistsUnique { role, fillers, max }
            }),
        ]
    })
}

/// Successors of `x` along `role`, read straight off the fact set.
pub fn role_successors(d: &Dataset, x: &str, role: &Role) -> BTreeSet<String> {
    d.iter()
        .filter_map(|f| match f {
            Fact::Binary {
                pred,
                subject,
                object,
            } if *pred == role.pred => {
                if !role.inverse && subject == x {
                    Some(object.clone())
                } else if role.inverse && object == x {
                    Some(subject.clone())
                } else {
                    None
                }
            }
            _ => None,
        })
        .collect()
}

/// Whether some injective map sends filler `i` to a successor satisfying
/// it, by trying every assignment.
fn injective_assignment(fillers: &[Concept], succ: &[String], d: &Dataset, used: &mut Vec<bool>) -> bool {
    let Some((first, rest)) = fillers.split_first() else {
        return true;
    };
    for (j, s) in succ.iter().enumerate() {
        if !used[j] && naive_holds(d, s, first) {
            used[j] = true;
            let ok = injective_assignment(rest, succ, d, used);
            used[j] = false;
            if ok {
                return true;
            }
        }
    }
    false
}

/// Reference concept semantics over a dataset, by direct recursion.
pub fn naive_holds(d: &Dataset, x: &str, c: &Concept) -> bool {
    match c {
        Concept::Top => true,
        Concept::Atomic(a) => d.contains(&Fact::unary(a.clone(), x)),
        Concept::Not(inner) => !naive_holds(d, x, inner),
        Concept::Exists(r, inner) => role_successors(d, x, r).iter().any(|s| naive_holds(d, s, inner)),
        Concept::ForAll(r, inner) => role_successors(d, x, r).iter().all(|s| naive_holds(d, s, inner)),
        Concept::AtLeast(n, r, inner) => {
            role_successors(d, x, r).iter().filter(|s| naive_holds(d, s, inner)).count() >= *n as usize
        }
        Concept::AtMost(n, r, inner) => {
            role_successors(d, x, r).iter().filter(|s| naive_holds(d, s, inner)).count() <= *n as usize
        }
        Concept::ExistsUnique { role, fillers, max } => {
            let succ: Vec<String> = role_successors(d, x, role).into_iter().collect();
            succ.len() <= *max as usize
                && succ.len() >= fillers.len()
                && injective_assignment(fillers, &succ, d, &mut vec![false; succ.len()])
        }
        Concept::And(parts) => parts.iter().all(|p| naive_holds(d, x, p)),
        Concept::Or(parts) => parts.iter().any(|p| naive_holds(d, x, p)),
    }
}

/// Reference immediate consequences of a single rule.
pub fn naive_consequences(r: &Rule, d: &Dataset) -> Dataset {
    d.constants()
        .into_iter()
        .filter(|x| naive_holds(d, x, &r.body))
        .map(|x| Fact::unary(r.head.clone(), x))
        .collect()
}

/// Reference forward pass: per-constant feature vectors after the last
/// layer, computed with plain loops over the fact set.
pub fn naive_forward(m: &MagnnModel, d: &Dataset) -> BTreeMap<String, Vec<f64>> {
    let sig = &m.signature;
    let constants: Vec<String> = d.constants().into_iter().map(str::to_string).collect();
    let mut h: BTreeMap<String, Vec<f64>> = constants
        .iter()
        .map(|c| {
            let v = sig
                .unary()
                .iter()
                .map(|p| if d.contains(&Fact::unary(p.clone(), c.clone())) { 1.0 } else { 0.0 })
                .collect();
            (c.clone(), v)
        })
        .collect();
    for layer in &m.layers {
        let mut next = BTreeMap::new();
        for c in &constants {
            let own = &h[c];
            let mut out = layer.bias.clone();
            for (i, o) in out.iter_mut().enumerate() {
                for (j, x) in own.iter().enumerate() {
                    *o += layer.a.get(i, j) * x;
                }
            }
            for (col, p) in sig.binary().iter().enumerate() {
                let role = match m.direction {
                    Direction::Out => Role::new(p.clone()),
                    Direction::In => Role::inverse(p.clone()),
                };
                let succ = role_successors(d, c, &role);
                if succ.is_empty() {
                    continue;
                }
                let mut mean = vec![0.0; own.len()];
                for s in &succ {
                    for (j, x) in h[s].iter().enumerate() {
                        mean[j] += x / succ.len() as f64;
                    }
                }
                for (i, o) in out.iter_mut().enumerate() {
                    for (j, x) in mean.iter().enumerate() {
                        *o += layer.b[col].get(i, j) * x;
                    }
                }
            }
            let out = out.into_iter().map(|x| layer.activation.apply(x)).collect();
            next.insert(c.clone(), out);
        }
        h = next;
    }
    h
}

/// Unary facts at whose constants the reference output is further than
/// `margin` from the threshold, split into predicted and rejected.
pub fn naive_decisions(m: &MagnnModel, d: &Dataset, margin: f64) -> (Dataset, Dataset) {
    let mut yes = Dataset::new();
    let mut no = Dataset::new();
    for (c, out) in naive_forward(m, d) {
        for (p, x) in out.iter().enumerate() {
            let f = Fact::unary(m.signature.unary()[p].clone(), c.clone());
            if *x >= m.threshold + margin {
                yes.insert(f);
            } else if *x < m.threshold - margin {
                no.insert(f);
            }
        }
    }
    (yes, no)
}

/// A restricted rule as a plain (head, unary body, existential body) tuple
/// check: does the body hold at `x`?
pub fn restricted_body_holds(d: &Dataset, x: &str, unary: &BTreeSet<String>, exist: &BTreeSet<Role>) -> bool {
    unary.iter().all(|a| d.contains(&Fact::unary(a.clone(), x)))
        && exist.iter().all(|r| !role_successors(d, x, r).is_empty())
}
