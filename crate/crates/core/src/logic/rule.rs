use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::concept::{Concept, Fragment, Role};
use crate::signature::Signature;

/// A rule `C ⊑ A` with an arbitrary concept body and a unary head.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub body: Concept,
    pub head: String,
}

impl Rule {
    pub fn new(body: Concept, head: impl Into<String>) -> Self {
        Rule {
            body,
            head: head.into(),
        }
    }

    pub fn canonical(&self) -> Rule {
        Rule::new(self.body.canonical(), self.head.clone())
    }

    /// Checks that every predicate is declared with the right arity.
    pub fn check_signature(&self, sig: &Signature) -> Result<()> {
        let unary = |name: &str| {
            if sig.unary_index(name).is_some() {
                Ok(())
            } else if sig.binary_index(name).is_some() {
                Err(Error::ArityMismatch {
                    name: name.to_string(),
                    used: 1,
                    declared: 2,
                })
            } else {
                Err(Error::UnknownPredicate(name.to_string()))
            }
        };
        unary(&self.head)?;
        let (atoms, roles) = self.body.predicates();
        for a in atoms {
            unary(a)?;
        }
        for r in roles {
            if sig.binary_index(&r.pred).is_none() {
                return Err(if sig.unary_index(&r.pred).is_some() {
                    Error::ArityMismatch {
                        name: r.pred.clone(),
                        used: 2,
                        declared: 1,
                    }
                } else {
                    Error::UnknownPredicate(r.pred.clone())
                });
            }
        }
        Ok(())
    }

    pub fn check_fragment(&self, fragment: Fragment) -> Result<()> {
        match self.body.fragment_violation(fragment) {
            None => Ok(()),
            Some(detail) => Err(Error::Fragment {
                fragment: fragment.name(),
                detail,
            }),
        }
    }

    /// Rule text in the ASCII grammar.
    pub fn to_text(&self) -> String {
        crate::logic::syntax::print_rule(self)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊑ {}", self.body, self.head)
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rule> {
        crate::logic::syntax::parse_rule(s)
    }
}

/// `∃P_1.⊤ ⊓ … ⊓ ∃P_j.⊤ ⊓ A_1 ⊓ … ⊓ A_k ⊑ A_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestrictedRule {
    pub head: String,
    pub unary: BTreeSet<String>,
    pub exist: BTreeSet<Role>,
}

/// Table 2 style classification of a restricted rule by its body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BodyKind {
    /// Empty body.
    Top,
    /// Unary atoms only.
    Unary,
    /// Existential atoms only.
    Binary,
    /// Both.
    Mixed,
}

impl RestrictedRule {
    pub fn new<U, E>(head: impl Into<String>, unary: U, exist: E) -> Self
    where
        U: IntoIterator,
        U::Item: Into<String>,
        E: IntoIterator<Item = Role>,
    {
        RestrictedRule {
            head: head.into(),
            unary: unary.into_iter().map(Into::into).collect(),
            exist: exist.into_iter().collect(),
        }
    }

    pub fn body_size(&self) -> usize {
        self.unary.len() + self.exist.len()
    }

    pub fn kind(&self) -> BodyKind {
        match (self.unary.is_empty(), self.exist.is_empty()) {
            (true, true) => BodyKind::Top,
            (false, true) => BodyKind::Unary,
            (true, false) => BodyKind::Binary,
            (false, false) => BodyKind::Mixed,
        }
    }

    /// Same head and both body sets contained in `other`'s; then every fact
    /// `other` derives is also derived by `self`.
    pub fn subsumes(&self, other: &RestrictedRule) -> bool {
        self.head == other.head && self.unary.is_subset(&other.unary) && self.exist.is_subset(&other.exist)
    }

    /// The rule as a concept inclusion: atoms first, then existentials,
    /// each group sorted; `⊤` when the body is empty.
    pub fn to_rule(&self) -> Rule {
        let parts = self
            .unary
            .iter()
            .map(|a| Concept::atom(a.clone()))
            .chain(self.exist.iter().map(|r| Concept::exists(r.clone(), Concept::Top)))
            .collect();
        Rule::new(Concept::and(parts), self.head.clone())
    }

    /// Recognises bodies built from `⊤`, atoms and `∃R.⊤` with `⊓`.
    pub fn from_rule(r: &Rule) -> Result<RestrictedRule> {
        let mut out = RestrictedRule::new(r.head.clone(), Vec::<String>::new(), []);
        let parts = match &r.body {
            Concept::And(parts) => parts.iter().collect(),
            other => vec![other],
        };
        for p in parts {
            match p {
                Concept::Top => {}
                Concept::Atomic(a) => {
                    out.unary.insert(a.clone());
                }
                Concept::Exists(role, filler) if **filler == Concept::Top => {
                    out.exist.insert(role.clone());
                }
                other => return Err(Error::NotRestricted(format!("conjunct `{other}`"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RestrictedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_rule().fmt(f)
    }
}

impl From<&RestrictedRule> for Rule {
    fn from(r: &RestrictedRule) -> Rule {
        r.to_rule()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing() {
        let r = RestrictedRule::new("A5", ["A4"], []);
        assert_eq!(r.to_string(), "A4 ⊑ A5");
        let r = RestrictedRule::new("A", Vec::<String>::new(), []);
        assert_eq!(r.to_string(), "⊤ ⊑ A");
        let r = RestrictedRule::new("A3", ["A2", "A1"], [Role::new("P2"), Role::new("P1")]);
        assert_eq!(r.to_string(), "A1 ⊓ A2 ⊓ ∃P1.⊤ ⊓ ∃P2.⊤ ⊑ A3");
    }

    #[test]
    fn subsumption() {
        let r1 = RestrictedRule::new("A", Vec::<String>::new(), [Role::new("P1")]);
        let r2 = RestrictedRule::new("A", ["A1"], [Role::new("P1")]);
        assert!(r1.subsumes(&r2));
        assert!(!r2.subsumes(&r1));
        assert!(r2.subsumes(&r2));
        let r3 = RestrictedRule::new("B", ["A1"], [Role::new("P1")]);
        assert!(!r2.subsumes(&r3));
    }

    #[test]
    fn round_trip_through_rule() {
        let r = RestrictedRule::new("H", ["A"], [Role::inverse("P")]);
        assert_eq!(RestrictedRule::from_rule(&r.to_rule()).unwrap(), r);
        let top = RestrictedRule::new("H", Vec::<String>::new(), []);
        assert_eq!(RestrictedRule::from_rule(&top.to_rule()).unwrap(), top);
    }

    #[test]
    fn non_restricted_is_rejected() {
        let r = Rule::new(Concept::exists(Role::new("P"), Concept::atom("A")), "H");
        assert!(matches!(RestrictedRule::from_rule(&r), Err(Error::NotRestricted(_))));
    }

    #[test]
    fn kinds() {
        assert_eq!(RestrictedRule::new("H", Vec::<String>::new(), []).kind(), BodyKind::Top);
        assert_eq!(RestrictedRule::new("H", ["A"], []).kind(), BodyKind::Unary);
        assert_eq!(RestrictedRule::new("H", Vec::<String>::new(), [Role::new("P")]).kind(), BodyKind::Binary);
        assert_eq!(RestrictedRule::new("H", ["A"], [Role::new("P")]).kind(), BodyKind::Mixed);
    }

    #[test]
    fn signature_checks() {
        let sig = Signature::new(["A", "H"], ["P"]).unwrap();
        assert!(RestrictedRule::new("H", ["A"], [Role::new("P")]).to_rule().check_signature(&sig).is_ok());
        let bad = Rule::new(Concept::atom("P"), "H");
        assert!(matches!(bad.check_signature(&sig), Err(Error::ArityMismatch { .. })));
        let bad = Rule::new(Concept::Top, "Z");
        assert!(matches!(bad.check_signature(&sig), Err(Error::UnknownPredicate(_))));
    }
}
