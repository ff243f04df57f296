//! Link prediction through pair nodes.
//!
//! A dataset of binary facts becomes a dataset over pairs of constants:
//! `R(a,b)` turns into the label `R(a|b)`, and two pair nodes are joined by
//! the colours `SS`, `SO`, `OS` and `OO` according to which positions they
//! share a constant in. A model over this derived signature predicts
//! binary facts by labelling pair nodes.
//!
//! Edges depend only on which pairs exist, never on which facts hold, and
//! every pair node has successors of all four colours (itself and its
//! reverse pair). So a sound restricted rule over pair nodes unfolds into
//! the binary rule that keeps its unary atoms and drops its existentials.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::forward::apply;
use crate::logic::RestrictedRule;
use crate::model::MagnnModel;
use crate::signature::Signature;

/// Edge colours of the pair encoding. The first letter is the position
/// (subject or object) in the source pair, the second in the target pair,
/// at which both hold the same constant.
pub const PAIR_COLOURS: [&str; 4] = ["SS", "SO", "OS", "OO"];

/// Separator in pair-node names; forbidden in source constants.
pub const PAIR_SEPARATOR: char = '|';

pub fn pair_name(a: &str, b: &str) -> String {
    format!("{a}{PAIR_SEPARATOR}{b}")
}

/// The signature of pair datasets for the given binary predicates.
pub fn pair_signature<S: AsRef<str>>(binary: &[S]) -> Result<Signature> {
    for p in binary {
        if PAIR_COLOURS.contains(&p.as_ref()) {
            return Err(Error::PairEncoding(format!(
                "predicate `{}` clashes with an edge colour",
                p.as_ref()
            )));
        }
    }
    Signature::new(binary.iter().map(|p| p.as_ref().to_string()), PAIR_COLOURS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairEncoding {
    pub signature: Signature,
    pub dataset: Dataset,
    /// Pair-node name to the source constants.
    pub pairs: BTreeMap<String, (String, String)>,
}

impl PairEncoding {
    /// Binary facts for the unary facts over pair nodes in `derived`.
    pub fn decode(&self, derived: &Dataset) -> Dataset {
        derived
            .iter()
            .filter_map(|f| match f {
                Fact::Unary { pred, arg } => self
                    .pairs
                    .get(arg)
                    .map(|(a, b)| Fact::binary(pred.clone(), a.clone(), b.clone())),
                Fact::Binary { .. } => None,
            })
            .collect()
    }
}

/// Encodes a dataset of binary facts as a pair dataset. The derived unary
/// predicates are the binary predicates of `d` in sorted order, or those
/// of `binary` when given. Pair nodes exist for `(a,b)` and `(b,a)` for
/// every fact `R(a,b)`; with `all_pairs`, for every pair of constants.
pub fn lp_encode(d: &Dataset, binary: Option<&[String]>, all_pairs: bool) -> Result<PairEncoding> {
    let mut preds: BTreeSet<&str> = BTreeSet::new();
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for f in d.iter() {
        let Fact::Binary {
            pred,
            subject,
            object,
        } = f
        else {
            return Err(Error::PairEncoding(format!("unary fact {f} in a link prediction dataset")));
        };
        for c in [subject, object] {
            if c.contains(PAIR_SEPARATOR) {
                return Err(Error::PairEncoding(format!("constant `{c}` contains `{PAIR_SEPARATOR}`")));
            }
        }
        preds.insert(pred);
        pairs.insert((subject, object));
        pairs.insert((object, subject));
    }
    let signature = match binary {
        Some(list) => {
            let sig = pair_signature(list)?;
            if let Some(p) = preds.iter().find(|p| sig.unary_index(p).is_none()) {
                return Err(Error::UnknownPredicate(p.to_string()));
            }
            sig
        }
        None if preds.is_empty() => {
            return Ok(PairEncoding {
                signature: pair_signature(&["R"])?,
                dataset: Dataset::new(),
                pairs: BTreeMap::new(),
            })
        }
        None => pair_signature(&preds.iter().collect::<Vec<_>>())?,
    };
    if all_pairs {
        let constants = d.constants();
        for a in &constants {
            for b in &constants {
                pairs.insert((a, b));
            }
        }
    }
    let mut out = Dataset::new();
    for f in d.iter() {
        if let Fact::Binary {
            pred,
            subject,
            object,
        } = f
        {
            out.insert(Fact::unary(pred.clone(), pair_name(subject, object)));
        }
    }
    // Pair nodes grouped by the constant in each position.
    let mut by_subject: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    let mut by_object: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    for &(a, b) in &pairs {
        by_subject.entry(a).or_default().push((a, b));
        by_object.entry(b).or_default().push((a, b));
    }
    let none = Vec::new();
    for &(a, b) in &pairs {
        let from = pair_name(a, b);
        let targets = [
            ("SS", by_subject.get(a)),
            ("SO", by_object.get(a)),
            ("OS", by_subject.get(b)),
            ("OO", by_object.get(b)),
        ];
        for (colour, group) in targets {
            for &(c, d) in group.unwrap_or(&none) {
                out.insert(Fact::binary(colour, from.clone(), pair_name(c, d)));
            }
        }
    }
    let pairs = pairs
        .into_iter()
        .map(|(a, b)| (pair_name(a, b), (a.to_string(), b.to_string())))
        .collect();
    Ok(PairEncoding {
        signature,
        dataset: out,
        pairs,
    })
}

/// A binary rule `R_1(X,Y) ∧ … ∧ R_k(X,Y) → H(X,Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnfoldedRule {
    pub body: BTreeSet<String>,
    pub head: String,
}

impl UnfoldedRule {
    /// Facts the rule derives on `d`. With an empty body, `X` and `Y`
    /// range over the pairs the encoding materialises.
    pub fn apply(&self, d: &Dataset, all_pairs: bool) -> Result<Dataset> {
        let enc = lp_encode(d, None, all_pairs)?;
        Ok(enc
            .pairs
            .values()
            .filter(|(a, b)| {
                self.body
                    .iter()
                    .all(|p| d.contains(&Fact::binary(p.clone(), a.clone(), b.clone())))
            })
            .map(|(a, b)| Fact::binary(self.head.clone(), a.clone(), b.clone()))
            .collect())
    }
}

impl fmt::Display for UnfoldedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.body.is_empty() {
            f.write_str("⊤")?;
        }
        for (i, p) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{p}(X,Y)")?;
        }
        write!(f, " → {}(X,Y)", self.head)
    }
}

/// Unfolds a restricted rule over a pair signature into a binary rule;
/// existentials over edge colours are dropped.
pub fn unfold(r: &RestrictedRule) -> UnfoldedRule {
    UnfoldedRule {
        body: r.unary.clone(),
        head: r.head.clone(),
    }
}

/// The text of [`unfold`].
pub fn unfold_rule(r: &RestrictedRule) -> String {
    unfold(r).to_string()
}

/// Binary facts a model over a pair signature predicts on `d`.
pub fn predict_links(m: &MagnnModel, d: &Dataset, all_pairs: bool) -> Result<Dataset> {
    if m.signature.binary() != PAIR_COLOURS {
        return Err(Error::PairEncoding(format!(
            "model edge colours must be {}",
            PAIR_COLOURS.join(", ")
        )));
    }
    let enc = lp_encode(d, Some(m.signature.unary()), all_pairs)?;
    Ok(enc.decode(&apply(m, &enc.dataset)?))
}

/// Facts the unfolded rule derives on `d` that the model does not predict.
pub fn unfolded_violations(m: &MagnnModel, rule: &UnfoldedRule, d: &Dataset, all_pairs: bool) -> Result<Vec<Fact>> {
    let predicted = predict_links(m, d, all_pairs)?;
    Ok(rule
        .apply(d, all_pairs)?
        .difference(&predicted)
        .iter()
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::facts;
    use crate::logic::Role;

    #[test]
    fn single_fact() {
        let enc = lp_encode(&facts("R(a,b)"), None, false).unwrap();
        assert_eq!(enc.pairs.keys().collect::<Vec<_>>(), ["a|b", "b|a"]);
        let expected = facts(
            "R(a|b) \
             SS(a|b,a|b) OO(a|b,a|b) SO(a|b,b|a) OS(a|b,b|a) \
             SS(b|a,b|a) OO(b|a,b|a) SO(b|a,a|b) OS(b|a,a|b)",
        );
        assert_eq!(enc.dataset, expected);
        assert_eq!(enc.signature.delta(), 1);
        assert_eq!(enc.signature.colours(), 4);
    }

    #[test]
    fn self_loop_and_empty() {
        let enc = lp_encode(&facts("R(a,a)"), None, false).unwrap();
        assert_eq!(enc.dataset, facts("R(a|a) SS(a|a,a|a) SO(a|a,a|a) OS(a|a,a|a) OO(a|a,a|a)"));
        assert!(lp_encode(&Dataset::new(), None, false).unwrap().dataset.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(lp_encode(&facts("U(a)"), None, false), Err(Error::PairEncoding(_))));
        assert!(matches!(lp_encode(&facts("R(a|x,b)"), None, false), Err(Error::PairEncoding(_))));
        assert!(matches!(lp_encode(&facts("SS(a,b)"), None, false), Err(Error::PairEncoding(_))));
    }

    #[test]
    fn all_pairs_materialises_the_square() {
        let enc = lp_encode(&facts("R(a,b) R(b,c)"), None, true).unwrap();
        assert_eq!(enc.pairs.len(), 9);
        assert_eq!(lp_encode(&facts("R(a,b) R(b,c)"), None, false).unwrap().pairs.len(), 4);
    }

    #[test]
    fn unfolding_text() {
        let r = RestrictedRule::new(
            "organizationhiredperson",
            ["topmemberoforganization", "organizationterminatedperson"],
            [Role::new("SS")],
        );
        assert_eq!(
            unfold_rule(&r),
            "organizationterminatedperson(X,Y) ∧ topmemberoforganization(X,Y) → organizationhiredperson(X,Y)"
        );
        let top = RestrictedRule::new("/music/instrument/instrumentalists", Vec::<String>::new(), []);
        assert_eq!(unfold_rule(&top), "⊤ → /music/instrument/instrumentalists(X,Y)");
        assert_eq!(unfold_rule(&RestrictedRule::new("R2", ["R1"], [])), "R1(X,Y) → R2(X,Y)");
    }

    #[test]
    fn unfolded_rule_application() {
        let r = unfold(&RestrictedRule::new("H", ["R"], []));
        assert_eq!(r.apply(&facts("R(a,b) S(b,a)"), false).unwrap(), facts("H(a,b)"));
        let top = unfold(&RestrictedRule::new("H", Vec::<String>::new(), []));
        assert_eq!(top.apply(&facts("R(a,b)"), false).unwrap(), facts("H(a,b) H(b,a)"));
    }

    #[test]
    fn decoding_round_trip() {
        let d = facts("R(a,b) S(b,c)");
        let enc = lp_encode(&d, None, false).unwrap();
        let labels: Dataset = enc.dataset.iter().filter(|f| f.is_unary()).cloned().collect();
        assert_eq!(enc.decode(&labels), d);
    }
}
