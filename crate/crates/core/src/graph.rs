//! Coloured graphs and the canonical encoding of datasets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::signature::Signature;

/// Which edges a vertex aggregates over.
///
/// `Out` aggregates over `u` with `(v, u) ∈ E^c`, i.e. the objects of the
/// facts a constant is the subject of. `In` aggregates along the direction of
/// the edges, over the subjects of facts a constant is the object of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Out,
    In,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Out => "out",
            Direction::In => "in",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            other => Err(format!("unknown direction `{other}` (expected `out` or `in`)")),
        }
    }
}

/// Read access to a labelled, coloured graph, as needed by the forward pass.
pub trait GraphView {
    fn vertex_count(&self) -> usize;

    /// Component `p` of the input label of vertex `v`.
    fn label(&self, v: usize, p: usize) -> f64;

    /// The `colour` neighbours of `v` aggregated over under `direction`.
    fn neighbours(&self, colour: usize, v: usize, direction: Direction) -> impl Iterator<Item = usize> + '_;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColoredGraph {
    constants: Vec<String>,
    dim: usize,
    labels: Vec<f64>,
    edges: Vec<BTreeSet<(usize, usize)>>,
    out_adj: Vec<Vec<Vec<usize>>>,
    in_adj: Vec<Vec<Vec<usize>>>,
}

impl ColoredGraph {
    /// Builds a graph from its parts. `labels` holds one row of length `dim`
    /// per vertex; `edges[c]` is the edge set of colour `c`.
    pub fn new(
        constants: Vec<String>,
        dim: usize,
        labels: Vec<f64>,
        edges: Vec<BTreeSet<(usize, usize)>>,
    ) -> Result<Self> {
        let n = constants.len();
        let unique: HashSet<&String> = constants.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidGraph("vertex constants are not distinct".into()));
        }
        if labels.len() != n * dim {
            return Err(Error::InvalidGraph(format!(
                "expected {} label entries, found {}",
                n * dim,
                labels.len()
            )));
        }
        let mut out_adj = vec![vec![Vec::new(); n]; edges.len()];
        let mut in_adj = vec![vec![Vec::new(); n]; edges.len()];
        for (c, set) in edges.iter().enumerate() {
            for &(u, v) in set {
                if u >= n || v >= n {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({u}, {v}) of colour {c} has an endpoint outside the vertex list"
                    )));
                }
                out_adj[c][u].push(v);
                in_adj[c][v].push(u);
            }
        }
        Ok(ColoredGraph {
            constants,
            dim,
            labels,
            edges,
            out_adj,
            in_adj,
        })
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn colours(&self) -> usize {
        self.edges.len()
    }

    pub fn label_of(&self, v: usize) -> &[f64] {
        &self.labels[v * self.dim..(v + 1) * self.dim]
    }

    pub fn edges(&self, colour: usize) -> &BTreeSet<(usize, usize)> {
        &self.edges[colour]
    }

    pub fn vertex_of(&self, constant: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == constant)
    }

    pub fn is_boolean(&self) -> bool {
        self.labels.iter().all(|&x| x == 0.0 || x == 1.0)
    }
}

impl GraphView for ColoredGraph {
    fn vertex_count(&self) -> usize {
        self.constants.len()
    }

    fn label(&self, v: usize, p: usize) -> f64 {
        self.labels[v * self.dim + p]
    }

    fn neighbours(&self, colour: usize, v: usize, direction: Direction) -> impl Iterator<Item = usize> + '_ {
        let adj = match direction {
            Direction::Out => &self.out_adj,
            Direction::In => &self.in_adj,
        };
        adj[colour][v].iter().copied()
    }
}

/// The canonical encoding: one vertex per constant (lexicographic order),
/// label component `p` set iff the `p`-th unary fact holds, one `c`-coloured
/// edge per fact of the `c`-th binary predicate.
pub fn encode(d: &Dataset, sig: &Signature) -> Result<ColoredGraph> {
    d.check_signature(sig)?;
    let constants: Vec<String> = d.constants().into_iter().map(str::to_string).collect();
    let index: BTreeMap<&str, usize> = constants
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let dim = sig.delta();
    let mut labels = vec![0.0; constants.len() * dim];
    let mut edges = vec![BTreeSet::new(); sig.colours()];
    for fact in d {
        match fact {
            Fact::Unary { pred, arg } => {
                let p = sig.unary_index(pred).expect("checked against signature");
                labels[index[arg.as_str()] * dim + p] = 1.0;
            }
            Fact::Binary {
                pred,
                subject,
                object,
            } => {
                let c = sig.binary_index(pred).expect("checked against signature");
                edges[c].insert((index[subject.as_str()], index[object.as_str()]));
            }
        }
    }
    ColoredGraph::new(constants, dim, labels, edges)
}

/// Inverse of [`encode`]; the graph must be Boolean.
pub fn decode(g: &ColoredGraph, sig: &Signature) -> Result<Dataset> {
    if g.dim() != sig.delta() || g.colours() != sig.colours() {
        return Err(Error::SignatureMismatch);
    }
    let mut d = Dataset::new();
    for (v, constant) in g.constants().iter().enumerate() {
        for (p, &value) in g.label_of(v).iter().enumerate() {
            if value == 1.0 {
                d.insert(Fact::unary(sig.unary()[p].clone(), constant.clone()));
            } else if value != 0.0 {
                return Err(Error::NonBooleanLabel {
                    vertex: v,
                    component: p,
                    value,
                });
            }
        }
    }
    for c in 0..g.colours() {
        for &(u, v) in g.edges(c) {
            d.insert(Fact::binary(
                sig.binary()[c].clone(),
                g.constants()[u].clone(),
                g.constants()[v].clone(),
            ));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::facts;

    #[test]
    fn single_fact() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let g = encode(&facts("U(a)"), &sig).unwrap();
        assert_eq!(g.constants(), ["a"]);
        assert_eq!(g.label_of(0), [1.0]);
        assert!(g.edges(0).is_empty());
    }

    #[test]
    fn base_dataset_shape() {
        let sig = Signature::new(["A1", "A2", "A3"], ["P1", "P2"]).unwrap();
        let g = encode(&facts("A1(a) A2(a) P1(a,b) P2(a,b)"), &sig).unwrap();
        assert_eq!(g.constants(), ["a", "b"]);
        assert_eq!(g.label_of(0), [1.0, 1.0, 0.0]);
        assert_eq!(g.label_of(1), [0.0, 0.0, 0.0]);
        assert_eq!(g.edges(0).iter().copied().collect::<Vec<_>>(), [(0, 1)]);
        assert_eq!(g.edges(1).iter().copied().collect::<Vec<_>>(), [(0, 1)]);
        assert!(g.is_boolean());
    }

    #[test]
    fn empty_dataset() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let g = encode(&Dataset::new(), &sig).unwrap();
        assert_eq!(g.vertex_count(), 0);
    }

    #[test]
    fn unknown_predicate_is_named() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        match encode(&facts("Q(a)"), &sig) {
            Err(Error::UnknownPredicate(p)) => assert_eq!(p, "Q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_round_trip() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let d = facts("U(a) P(a,b)");
        assert_eq!(decode(&encode(&d, &sig).unwrap(), &sig).unwrap(), d);
    }

    #[test]
    fn decode_edge_only() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let g = ColoredGraph::new(
            vec!["a".into(), "b".into()],
            1,
            vec![0.0, 0.0],
            vec![BTreeSet::from([(0, 1)])],
        )
        .unwrap();
        assert_eq!(decode(&g, &sig).unwrap(), facts("P(a,b)"));
    }

    #[test]
    fn decode_rejects_fractional_label() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let g = ColoredGraph::new(vec!["a".into()], 1, vec![0.7], vec![BTreeSet::new()]).unwrap();
        match decode(&g, &sig) {
            Err(Error::NonBooleanLabel {
                vertex, component, ..
            }) => assert_eq!((vertex, component), (0, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_dangling_edge() {
        let err = ColoredGraph::new(vec!["a".into()], 1, vec![0.0], vec![BTreeSet::from([(0, 3)])]);
        assert!(err.is_err());
    }

    #[test]
    fn self_loop_is_own_neighbour() {
        let sig = Signature::new(["U"], ["P"]).unwrap();
        let g = encode(&facts("P(a,a)"), &sig).unwrap();
        assert_eq!(g.neighbours(0, 0, Direction::Out).collect::<Vec<_>>(), [0]);
        assert_eq!(g.neighbours(0, 0, Direction::In).collect::<Vec<_>>(), [0]);
    }
}
