//! Layer-wise evaluation of a model on a graph and the induced dataset
//! transformation.
//!
//! Means are computed by summing the neighbour values of each component in
//! ascending order before dividing. This makes every layer output a function
//! of the neighbour multiset alone, independent of vertex numbering, and
//! keeps the float computation monotone in each neighbour value.

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::graph::{encode, ColoredGraph, Direction, GraphView};
use crate::model::{Layer, MagnnModel};

/// Label vectors of every vertex after every layer; layer 0 is the input.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrace {
    vertices: usize,
    dims: Vec<usize>,
    values: Vec<Vec<f64>>,
}

impl LayerTrace {
    pub fn layers(&self) -> usize {
        self.values.len() - 1
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn dim(&self, layer: usize) -> usize {
        self.dims[layer]
    }

    pub fn value(&self, layer: usize, vertex: usize) -> &[f64] {
        let d = self.dims[layer];
        &self.values[layer][vertex * d..(vertex + 1) * d]
    }

    pub fn output(&self, vertex: usize) -> &[f64] {
        self.value(self.layers(), vertex)
    }
}

/// Reusable buffers for [`update_vertex`].
#[derive(Default)]
pub(crate) struct Scratch {
    values: Vec<f64>,
    mean: Vec<f64>,
}

/// Computes one vertex's label for `layer`:
/// `σ(b + A·own + Σ_c B_c · mean{prev[u] | u ∈ neighbours[c]})`, with the
/// mean over no neighbours taken to be the zero vector.
#[inline]
pub(crate) fn update_vertex(
    layer: &Layer,
    prev: &[f64],
    own: usize,
    neighbours: &[Vec<usize>],
    scratch: &mut Scratch,
    out: &mut [f64],
) {
    let in_dim = layer.in_dim();
    out.copy_from_slice(&layer.bias);
    layer.a.mul_add(&prev[own * in_dim..(own + 1) * in_dim], out);
    scratch.mean.resize(in_dim, 0.0);
    for (c, ns) in neighbours.iter().enumerate() {
        if ns.is_empty() {
            continue;
        }
        let count = ns.len() as f64;
        for j in 0..in_dim {
            let sum = if ns.len() == 1 {
                prev[ns[0] * in_dim + j]
            } else {
                scratch.values.clear();
                scratch.values.extend(ns.iter().map(|&u| prev[u * in_dim + j]));
                scratch.values.sort_unstable_by(f64::total_cmp);
                scratch.values.iter().sum()
            };
            scratch.mean[j] = sum / count;
        }
        layer.b[c].mul_add(&scratch.mean, out);
    }
    for x in out.iter_mut() {
        *x = layer.activation.apply(*x);
    }
}

/// Step classification: 1 iff `x ≥ t`, with no tolerance.
#[inline]
pub fn classify(x: f64, t: f64) -> bool {
    x >= t
}

/// Runs the model on any graph view. The model must be evaluable and the
/// view must carry `m.signature.delta()` label components per vertex and one
/// edge colour per binary predicate.
pub fn forward_view<G: GraphView>(m: &MagnnModel, g: &G) -> LayerTrace {
    let n = g.vertex_count();
    let delta = m.signature.delta();
    let colours = m.signature.colours();
    let mut input = vec![0.0; n * delta];
    for v in 0..n {
        for p in 0..delta {
            input[v * delta + p] = g.label(v, p);
        }
    }
    let neighbours: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|v| {
            (0..colours)
                .map(|c| g.neighbours(c, v, m.direction).collect())
                .collect()
        })
        .collect();
    let mut dims = vec![delta];
    let mut values = vec![input];
    let mut scratch = Scratch::default();
    for layer in &m.layers {
        let out_dim = layer.out_dim();
        let prev = values.last().expect("input layer");
        let mut next = vec![0.0; n * out_dim];
        for v in 0..n {
            update_vertex(
                layer,
                prev,
                v,
                &neighbours[v],
                &mut scratch,
                &mut next[v * out_dim..(v + 1) * out_dim],
            );
        }
        dims.push(out_dim);
        values.push(next);
    }
    LayerTrace {
        vertices: n,
        dims,
        values,
    }
}

/// Runs the model on an encoded graph.
pub fn forward(m: &MagnnModel, g: &ColoredGraph) -> Result<LayerTrace> {
    m.check_evaluable()?;
    if g.dim() != m.signature.delta() || g.colours() != m.signature.colours() {
        return Err(Error::SignatureMismatch);
    }
    Ok(forward_view(m, g))
}

/// The dataset transformation induced by the model: every unary fact
/// `U_p(a)` whose output component `p` at `a` reaches the threshold.
/// Binary facts of `d` are not re-emitted.
pub fn apply(m: &MagnnModel, d: &Dataset) -> Result<Dataset> {
    let g = encode(d, &m.signature)?;
    let trace = forward(m, &g)?;
    Ok(decode_output(m, &g, &trace))
}

pub(crate) fn decode_output(m: &MagnnModel, g: &ColoredGraph, trace: &LayerTrace) -> Dataset {
    let mut out = Dataset::new();
    for (v, constant) in g.constants().iter().enumerate() {
        for (p, &x) in trace.output(v).iter().enumerate() {
            if classify(x, m.threshold) {
                out.insert(Fact::unary(m.signature.unary()[p].clone(), constant.clone()));
            }
        }
    }
    out
}

/// Whether `fact` (a unary fact over the model's signature) is in the
/// model's output on `d`.
pub fn predicts(m: &MagnnModel, d: &Dataset, fact: &Fact) -> Result<bool> {
    let Fact::Unary { pred, arg } = fact else {
        return Ok(false);
    };
    let p = m
        .signature
        .unary_index(pred)
        .ok_or_else(|| Error::UnknownPredicate(pred.clone()))?;
    let g = encode(d, &m.signature)?;
    let Some(v) = g.vertex_of(arg) else {
        return Ok(false);
    };
    let trace = forward(m, &g)?;
    Ok(classify(trace.output(v)[p], m.threshold))
}

/// Convenience: run with an overridden aggregation direction.
pub fn with_direction(m: &MagnnModel, direction: Direction) -> MagnnModel {
    MagnnModel {
        direction,
        ..m.clone()
    }
}
