//! Satisfaction `(D, a) ⊨ C` and the immediate-consequence operator.
//!
//! Concepts are compiled against a [`PredicateTable`] so that evaluation
//! works on predicate indices. Any structure implementing
//! [`Interpretation`] can then be queried, including the bit-packed
//! datasets of the exhaustive oracle.

use std::collections::{BTreeMap, HashMap};

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::logic::concept::{Concept, Role};
use crate::logic::matching::saturates_left;
use crate::logic::rule::Rule;
use crate::signature::Signature;

/// Index assignment for predicate names.
#[derive(Clone, Debug, Default)]
pub struct PredicateTable {
    unary: HashMap<String, usize>,
    binary: HashMap<String, usize>,
}

impl PredicateTable {
    pub fn from_signature(sig: &Signature) -> Self {
        Self::from_names(sig.unary().iter().cloned(), sig.binary().iter().cloned())
    }

    pub fn from_names(
        unary: impl IntoIterator<Item = String>,
        binary: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut table = PredicateTable::default();
        for u in unary {
            table.add_unary(u);
        }
        for b in binary {
            table.add_binary(b);
        }
        table
    }

    /// Every predicate used by `d` or by any of `concepts`.
    pub fn covering<'a>(d: &Dataset, concepts: impl IntoIterator<Item = &'a Concept>) -> Self {
        let mut table = PredicateTable::default();
        for fact in d {
            match fact {
                Fact::Unary { pred, .. } => table.add_unary(pred.clone()),
                Fact::Binary { pred, .. } => table.add_binary(pred.clone()),
            }
        }
        for c in concepts {
            let (atoms, roles) = c.predicates();
            atoms.into_iter().for_each(|a| table.add_unary(a.to_string()));
            roles.into_iter().for_each(|r| table.add_binary(r.pred.clone()));
        }
        table
    }

    fn add_unary(&mut self, name: String) {
        let next = self.unary.len();
        self.unary.entry(name).or_insert(next);
    }

    fn add_binary(&mut self, name: String) {
        let next = self.binary.len();
        self.binary.entry(name).or_insert(next);
    }

    pub fn unary_count(&self) -> usize {
        self.unary.len()
    }

    pub fn binary_count(&self) -> usize {
        self.binary.len()
    }

    pub fn unary_index(&self, name: &str) -> Option<usize> {
        self.unary.get(name).copied()
    }

    pub fn binary_index(&self, name: &str) -> Option<usize> {
        self.binary.get(name).copied()
    }
}

/// A finite structure over elements `0..len()`.
pub trait Interpretation {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn has_unary(&self, x: usize, pred: usize) -> bool;

    /// Distinct `pred`-successors of `x`, or predecessors when `inverse`.
    fn successors(&self, x: usize, pred: usize, inverse: bool) -> impl Iterator<Item = usize> + '_;
}

/// Adjacency-list view of a dataset.
#[derive(Clone, Debug)]
pub struct DatasetIndex {
    constants: Vec<String>,
    ids: BTreeMap<String, usize>,
    unary: Vec<Vec<bool>>,
    out: Vec<Vec<Vec<usize>>>,
    inc: Vec<Vec<Vec<usize>>>,
}

impl DatasetIndex {
    /// Facts over predicates missing from `table` are ignored.
    pub fn new(d: &Dataset, table: &PredicateTable) -> Self {
        let constants: Vec<String> = d.constants().into_iter().map(str::to_string).collect();
        let ids: BTreeMap<String, usize> = constants
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let n = constants.len();
        let mut unary = vec![vec![false; table.unary_count()]; n];
        let mut out = vec![vec![Vec::new(); n]; table.binary_count()];
        let mut inc = vec![vec![Vec::new(); n]; table.binary_count()];
        for fact in d {
            match fact {
                Fact::Unary { pred, arg } => {
                    if let Some(p) = table.unary_index(pred) {
                        unary[ids[arg]][p] = true;
                    }
                }
                Fact::Binary {
                    pred,
                    subject,
                    object,
                } => {
                    if let Some(p) = table.binary_index(pred) {
                        let (s, o) = (ids[subject], ids[object]);
                        out[p][s].push(o);
                        inc[p][o].push(s);
                    }
                }
            }
        }
        DatasetIndex {
            constants,
            ids,
            unary,
            out,
            inc,
        }
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn id(&self, constant: &str) -> Option<usize> {
        self.ids.get(constant).copied()
    }
}

impl Interpretation for DatasetIndex {
    fn len(&self) -> usize {
        self.constants.len()
    }

    fn has_unary(&self, x: usize, pred: usize) -> bool {
        self.unary[x][pred]
    }

    fn successors(&self, x: usize, pred: usize, inverse: bool) -> impl Iterator<Item = usize> + '_ {
        let adj = if inverse { &self.inc } else { &self.out };
        adj[pred][x].iter().copied()
    }
}

#[derive(Clone, Copy, Debug)]
struct CompiledRole {
    pred: Option<usize>,
    inverse: bool,
}

#[derive(Clone, Debug)]
enum Node {
    Top,
    Never,
    Atom(usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(CompiledRole, Box<Node>),
    AtLeast(usize, CompiledRole, Box<Node>),
    AtMost(usize, CompiledRole, Box<Node>),
    ForAll(CompiledRole, Box<Node>),
    Unique {
        role: CompiledRole,
        fillers: Vec<Node>,
        max: usize,
    },
}

/// A concept resolved against a predicate table. Atoms missing from the
/// table hold nowhere and roles missing from it have no successors.
#[derive(Clone, Debug)]
pub struct CompiledConcept(Node);

impl CompiledConcept {
    pub fn new(c: &Concept, table: &PredicateTable) -> Self {
        CompiledConcept(compile(c, table))
    }

    pub fn holds<I: Interpretation>(&self, i: &I, x: usize) -> bool {
        eval(&self.0, i, x)
    }

    /// When every top-level conjunct is an atom or `⊤`, returns the atoms'
    /// indices; used by callers that can prefilter on labels.
    pub fn required_atoms(&self) -> Vec<usize> {
        match &self.0 {
            Node::Atom(p) => vec![*p],
            Node::And(parts) => parts
                .iter()
                .filter_map(|n| match n {
                    Node::Atom(p) => Some(*p),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn compile_role(r: &Role, table: &PredicateTable) -> CompiledRole {
    CompiledRole {
        pred: table.binary_index(&r.pred),
        inverse: r.inverse,
    }
}

fn compile(c: &Concept, table: &PredicateTable) -> Node {
    let sub = |c: &Concept| Box::new(compile(c, table));
    match c {
        Concept::Top => Node::Top,
        Concept::Atomic(a) => table.unary_index(a).map_or(Node::Never, Node::Atom),
        Concept::Not(c) => Node::Not(sub(c)),
        Concept::And(parts) => Node::And(parts.iter().map(|p| compile(p, table)).collect()),
        Concept::Or(parts) => Node::Or(parts.iter().map(|p| compile(p, table)).collect()),
        Concept::Exists(r, c) => Node::Exists(compile_role(r, table), sub(c)),
        Concept::AtLeast(n, r, c) => Node::AtLeast(*n as usize, compile_role(r, table), sub(c)),
        Concept::AtMost(n, r, c) => Node::AtMost(*n as usize, compile_role(r, table), sub(c)),
        Concept::ForAll(r, c) => Node::ForAll(compile_role(r, table), sub(c)),
        Concept::ExistsUnique { role, fillers, max } => Node::Unique {
            role: compile_role(role, table),
            fillers: fillers.iter().map(|f| compile(f, table)).collect(),
            max: *max as usize,
        },
    }
}

fn successors<I: Interpretation>(i: &I, x: usize, r: CompiledRole) -> impl Iterator<Item = usize> + '_ {
    r.pred
        .into_iter()
        .flat_map(move |p| i.successors(x, p, r.inverse))
}

fn eval<I: Interpretation>(n: &Node, i: &I, x: usize) -> bool {
    match n {
        Node::Top => true,
        Node::Never => false,
        Node::Atom(p) => i.has_unary(x, *p),
        Node::Not(c) => !eval(c, i, x),
        Node::And(parts) => parts.iter().all(|p| eval(p, i, x)),
        Node::Or(parts) => parts.iter().any(|p| eval(p, i, x)),
        Node::Exists(r, c) => successors(i, x, *r).any(|y| eval(c, i, y)),
        Node::AtLeast(k, r, c) => successors(i, x, *r).filter(|&y| eval(c, i, y)).take(*k).count() >= *k,
        Node::AtMost(k, r, c) => successors(i, x, *r).filter(|&y| eval(c, i, y)).take(*k + 1).count() <= *k,
        Node::ForAll(r, c) => successors(i, x, *r).all(|y| eval(c, i, y)),
        Node::Unique { role, fillers, max } => {
            let succ: Vec<usize> = successors(i, x, *role).collect();
            if succ.len() > *max || succ.len() < fillers.len() {
                return false;
            }
            let fits: Vec<Vec<bool>> = fillers
                .iter()
                .map(|f| succ.iter().map(|&y| eval(f, i, y)).collect())
                .collect();
            saturates_left(fillers.len(), succ.len(), |s, w| fits[s][w])
        }
    }
}

/// `(d, a) ⊨ c`. Predicates of `c` absent from `d` have empty extensions.
pub fn satisfies(d: &Dataset, a: &str, c: &Concept) -> Result<bool> {
    let table = PredicateTable::covering(d, [c]);
    let index = DatasetIndex::new(d, &table);
    let x = index
        .id(a)
        .ok_or_else(|| Error::UnknownConstant(a.to_string()))?;
    Ok(CompiledConcept::new(c, &table).holds(&index, x))
}

/// `T_r(d)`: the head fact for every constant of `d` satisfying the body.
pub fn immediate_consequences(r: &Rule, d: &Dataset) -> Dataset {
    program_consequences(std::slice::from_ref(r), d)
}

/// Union of `T_r(d)` over the rules of a program.
pub fn program_consequences(rules: &[Rule], d: &Dataset) -> Dataset {
    let table = PredicateTable::covering(d, rules.iter().map(|r| &r.body));
    let index = DatasetIndex::new(d, &table);
    let mut out = Dataset::new();
    for r in rules {
        let body = CompiledConcept::new(&r.body, &table);
        for (x, constant) in index.constants().iter().enumerate() {
            if body.holds(&index, x) {
                out.insert(Fact::unary(r.head.clone(), constant.clone()));
            }
        }
    }
    out
}
