//! Datasets of unary and binary ground facts, and the fact file format.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::signature::{check_name, Signature};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    Unary { pred: String, arg: String },
    Binary {
        pred: String,
        subject: String,
        object: String,
    },
}

impl Fact {
    pub fn unary(pred: impl Into<String>, arg: impl Into<String>) -> Self {
        Fact::Unary {
            pred: pred.into(),
            arg: arg.into(),
        }
    }

    pub fn binary(
        pred: impl Into<String>,
        subject: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Fact::Binary {
            pred: pred.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }

    pub fn predicate(&self) -> &str {
        match self {
            Fact::Unary { pred, .. } | Fact::Binary { pred, .. } => pred,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Fact::Unary { .. } => 1,
            Fact::Binary { .. } => 2,
        }
    }

    pub fn is_unary(&self) -> bool {
        matches!(self, Fact::Unary { .. })
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        let (first, second) = match self {
            Fact::Unary { arg, .. } => (arg.as_str(), None),
            Fact::Binary {
                subject, object, ..
            } => (subject.as_str(), Some(object.as_str())),
        };
        std::iter::once(first).chain(second)
    }

    /// Applies `f` to every constant of the fact.
    pub fn map_constants(&self, mut f: impl FnMut(&str) -> String) -> Fact {
        match self {
            Fact::Unary { pred, arg } => Fact::unary(pred.clone(), f(arg)),
            Fact::Binary {
                pred,
                subject,
                object,
            } => Fact::binary(pred.clone(), f(subject), f(object)),
        }
    }

    pub fn check_signature(&self, sig: &Signature) -> Result<()> {
        let pred = self.predicate();
        let declared = if sig.unary_index(pred).is_some() {
            1
        } else if sig.binary_index(pred).is_some() {
            2
        } else {
            return Err(Error::UnknownPredicate(pred.to_string()));
        };
        if declared != self.arity() {
            return Err(Error::ArityMismatch {
                name: pred.to_string(),
                used: self.arity(),
                declared,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Unary { pred, arg } => write!(f, "{pred}({arg})"),
            Fact::Binary {
                pred,
                subject,
                object,
            } => write!(f, "{pred}({subject},{object})"),
        }
    }
}

impl FromStr for Fact {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let open = s.find('(').ok_or("expected `Pred(args)`")?;
        if !s.ends_with(')') {
            return Err("missing closing parenthesis".into());
        }
        let pred = s[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        let args: Vec<&str> = inner.split(',').map(str::trim).collect();
        let valid = |n: &str| check_name(n).map_err(|e| e.to_string());
        valid(pred)?;
        for a in &args {
            valid(a)?;
        }
        match args.as_slice() {
            [a] => Ok(Fact::unary(pred, *a)),
            [a, b] => Ok(Fact::binary(pred, *a, *b)),
            _ => Err(format!("predicate `{pred}` applied to {} arguments", args.len())),
        }
    }
}

/// A finite set of facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dataset {
    facts: BTreeSet<Fact>,
}

impl FromIterator<Fact> for Dataset {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        Dataset {
            facts: iter.into_iter().collect(),
        }
    }
}

impl Extend<Fact> for Dataset {
    fn extend<I: IntoIterator<Item = Fact>>(&mut self, iter: I) {
        self.facts.extend(iter)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Fact;
    type IntoIter = std::collections::btree_set::Iter<'a, Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn remove(&mut self, fact: &Fact) -> bool {
        self.facts.remove(fact)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn is_subset(&self, other: &Dataset) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn union(&self, other: &Dataset) -> Dataset {
        self.facts.union(&other.facts).cloned().collect()
    }

    pub fn difference(&self, other: &Dataset) -> Dataset {
        self.facts.difference(&other.facts).cloned().collect()
    }

    /// The constants mentioned by some fact, in lexicographic order.
    pub fn constants(&self) -> BTreeSet<&str> {
        self.facts.iter().flat_map(Fact::constants).collect()
    }

    pub fn mentions(&self, constant: &str) -> bool {
        self.facts.iter().any(|f| f.constants().any(|c| c == constant))
    }

    pub fn check_signature(&self, sig: &Signature) -> Result<()> {
        self.facts.iter().try_for_each(|f| f.check_signature(sig))
    }

    pub fn rename(&self, mut f: impl FnMut(&str) -> String) -> Dataset {
        self.facts.iter().map(|fact| fact.map_constants(&mut f)).collect()
    }

    /// Unary predicates holding at `constant`.
    pub fn unary_of<'a>(&'a self, constant: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.facts.iter().filter_map(move |f| match f {
            Fact::Unary { pred, arg } if arg == constant => Some(pred.as_str()),
            _ => None,
        })
    }

    /// Neighbours of `constant` per binary predicate along `direction`:
    /// objects of outgoing facts for [`Direction::Out`], subjects of
    /// incoming facts for [`Direction::In`]. Both levels are sorted.
    pub fn neighbours_by_predicate(
        &self,
        constant: &str,
        direction: Direction,
    ) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for fact in &self.facts {
            if let Fact::Binary {
                pred,
                subject,
                object,
            } = fact
            {
                let (from, to) = match direction {
                    Direction::Out => (subject, object),
                    Direction::In => (object, subject),
                };
                if from == constant {
                    out.entry(pred.as_str()).or_default().insert(to.as_str());
                }
            }
        }
        out
    }

    /// The `hops`-hop neighbourhood of `constant`: unary facts of every
    /// constant reachable in at most `hops` steps along `direction`, and the
    /// binary facts traversed from constants reachable in fewer than `hops`
    /// steps.
    pub fn khop_neighborhood(&self, constant: &str, hops: usize, direction: Direction) -> Result<Dataset> {
        if !self.mentions(constant) {
            return Err(Error::UnknownConstant(constant.to_string()));
        }
        let mut adjacency: HashMap<&str, Vec<&Fact>> = HashMap::new();
        for fact in &self.facts {
            if let Fact::Binary {
                subject, object, ..
            } = fact
            {
                let from = match direction {
                    Direction::Out => subject,
                    Direction::In => object,
                };
                adjacency.entry(from.as_str()).or_default().push(fact);
            }
        }
        let mut dist: HashMap<&str, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(constant, 0);
        queue.push_back(constant);
        let mut result = Dataset::new();
        while let Some(c) = queue.pop_front() {
            let d = dist[c];
            if d >= hops {
                continue;
            }
            for fact in adjacency.get(c).into_iter().flatten() {
                result.insert((*fact).clone());
                let Fact::Binary {
                    subject, object, ..
                } = fact
                else {
                    unreachable!()
                };
                let next = match direction {
                    Direction::Out => object.as_str(),
                    Direction::In => subject.as_str(),
                };
                if !dist.contains_key(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        for fact in &self.facts {
            if let Fact::Unary { arg, .. } = fact {
                if dist.contains_key(arg.as_str()) {
                    result.insert(fact.clone());
                }
            }
        }
        Ok(result)
    }

    /// Parses the fact file format without checking predicates.
    pub fn parse(text: &str) -> Result<Dataset> {
        let mut d = Dataset::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fact = line.parse::<Fact>().map_err(|message| Error::Parse {
                line: i + 1,
                message,
            })?;
            d.insert(fact);
        }
        Ok(d)
    }

    /// Parses the fact file format and checks every fact against `sig`.
    pub fn parse_with_signature(text: &str, sig: &Signature) -> Result<Dataset> {
        let mut d = Dataset::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fact = line
                .parse::<Fact>()
                .map_err(|message| Error::Parse { line: i + 1, message })?;
            fact.check_signature(sig).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            d.insert(fact);
        }
        Ok(d)
    }

    /// Sorted, one fact per line, trailing newline after every fact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for fact in &self.facts {
            s.push_str(&fact.to_string());
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{fact}")?;
        }
        write!(f, "}}")
    }
}

/// Parses a comma/whitespace-free list of facts like `U(a) P(a,b)`; test helper.
#[doc(hidden)]
pub fn facts(text: &str) -> Dataset {
    text.split_whitespace()
        .map(|f| f.parse::<Fact>().unwrap_or_else(|e| panic!("{f}: {e}")))
        .collect()
}
