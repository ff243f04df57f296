//! Mean-aggregation GNNs, their validation and the JSON weight format.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Direction;
use crate::signature::Signature;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::WeightFormat("ragged matrix rows".into()));
        }
        let n = rows.len();
        Ok(Matrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds a matrix from row-major `data`; panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(|(i, &v)| (i / self.cols.max(1), i % self.cols.max(1), v))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// `out += self · x`
    pub(crate) fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *o += acc;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Sigmoid,
    /// `max(0, x)`; the name records that it stands in for the identity.
    ClampedIdentity,
    /// Plain identity. Loadable and evaluable, but its range is not
    /// non-negative, so validation flags it.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu | Activation::ClampedIdentity => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    pub fn has_nonnegative_range(self) -> bool {
        !matches!(self, Activation::Identity)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::ClampedIdentity => "clamped-identity",
            Activation::Identity => "identity",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Self-transformation, `out_dim × in_dim`.
    pub a: Matrix,
    /// One aggregation matrix per colour, in signature order.
    pub b: Vec<Matrix>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.a.rows()
    }
}

/// Which matrix of a layer a diagnostic points at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixId {
    A,
    B(String),
    Bias,
}

impl fmt::Display for MatrixId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixId::A => f.write_str("A"),
            MatrixId::B(p) => write!(f, "B[{p}]"),
            MatrixId::Bias => f.write_str("b"),
        }
    }
}

/// One violated model invariant. Layer, row and column numbers are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    NoLayers,
    Dimension { layer: usize, detail: String },
    NonFinite { layer: usize, matrix: MatrixId, row: usize, col: usize },
    NonFiniteThreshold,
    NegativeWeight {
        layer: usize,
        matrix: MatrixId,
        row: usize,
        col: usize,
        value: f64,
    },
    Activation { layer: usize, activation: Activation },
}

impl Diagnostic {
    /// Structural problems prevent evaluation altogether; the others only
    /// take the model outside the monotonic class.
    pub fn is_structural(&self) -> bool {
        !matches!(
            self,
            Diagnostic::NegativeWeight { .. } | Diagnostic::Activation { .. }
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoLayers => f.write_str("model has no layers"),
            Diagnostic::Dimension { layer, detail } => {
                write!(f, "layer {layer}: dimension mismatch: {detail}")
            }
            Diagnostic::NonFinite {
                layer,
                matrix,
                row,
                col,
            } => write!(f, "layer {layer}: {matrix}[{row},{col}] is not finite"),
            Diagnostic::NonFiniteThreshold => f.write_str("threshold is not finite"),
            Diagnostic::NegativeWeight {
                layer,
                matrix,
                row,
                col,
                value,
            } => write!(f, "layer {layer}: {matrix}[{row},{col}] = {value} is negative"),
            Diagnostic::Activation { layer, activation } => write!(
                f,
                "layer {layer}: activation `{activation}` does not have a non-negative range"
            ),
        }
    }
}

/// A mean-aggregation GNN over a fixed signature.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnnModel {
    pub signature: Signature,
    pub layers: Vec<Layer>,
    pub threshold: f64,
    pub direction: Direction,
}

impl MagnnModel {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Every violated invariant; empty iff the model is a valid MAGNN.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.layers.is_empty() {
            out.push(Diagnostic::NoLayers);
        }
        if !self.threshold.is_finite() {
            out.push(Diagnostic::NonFiniteThreshold);
        }
        let delta = self.signature.delta();
        let mut prev = delta;
        for (i, layer) in self.layers.iter().enumerate() {
            let l = i + 1;
            let (rows, cols) = (layer.a.rows(), layer.a.cols());
            if cols != prev {
                out.push(Diagnostic::Dimension {
                    layer: l,
                    detail: format!("A has {cols} columns, previous layer has dimension {prev}"),
                });
            }
            if layer.bias.len() != rows {
                out.push(Diagnostic::Dimension {
                    layer: l,
                    detail: format!("bias has length {}, A has {rows} rows", layer.bias.len()),
                });
            }
            if layer.b.len() != self.signature.colours() {
                out.push(Diagnostic::Dimension {
                    layer: l,
                    detail: format!(
                        "{} aggregation matrices for {} binary predicates",
                        layer.b.len(),
                        self.signature.colours()
                    ),
                });
            }
            let mut matrices = vec![(MatrixId::A, &layer.a)];
            for (c, m) in layer.b.iter().enumerate() {
                let name = self
                    .signature
                    .binary()
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| format!("#{c}"));
                if (m.rows(), m.cols()) != (rows, cols) {
                    out.push(Diagnostic::Dimension {
                        layer: l,
                        detail: format!(
                            "B[{name}] is {}x{}, A is {rows}x{cols}",
                            m.rows(),
                            m.cols()
                        ),
                    });
                }
                matrices.push((MatrixId::B(name), m));
            }
            for (id, m) in matrices {
                for (r, c, v) in m.entries() {
                    if !v.is_finite() {
                        out.push(Diagnostic::NonFinite {
                            layer: l,
                            matrix: id.clone(),
                            row: r + 1,
                            col: c + 1,
                        });
                    } else if v < 0.0 {
                        out.push(Diagnostic::NegativeWeight {
                            layer: l,
                            matrix: id.clone(),
                            row: r + 1,
                            col: c + 1,
                            value: v,
                        });
                    }
                }
            }
            for (r, v) in layer.bias.iter().enumerate() {
                if !v.is_finite() {
                    out.push(Diagnostic::NonFinite {
                        layer: l,
                        matrix: MatrixId::Bias,
                        row: r + 1,
                        col: 1,
                    });
                }
            }
            if !layer.activation.has_nonnegative_range() {
                out.push(Diagnostic::Activation {
                    layer: l,
                    activation: layer.activation,
                });
            }
            prev = rows;
        }
        if !self.layers.is_empty() && prev != delta {
            out.push(Diagnostic::Dimension {
                layer: self.layers.len(),
                detail: format!("output dimension {prev} differs from input dimension {delta}"),
            });
        }
        out
    }

    /// Errors unless the model can be evaluated.
    pub fn check_evaluable(&self) -> Result<()> {
        let structural: Vec<_> = self
            .validate()
            .into_iter()
            .filter(Diagnostic::is_structural)
            .collect();
        if structural.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(structural))
        }
    }

    /// Errors unless the model is a valid monotonic model.
    pub fn check_monotone(&self) -> Result<()> {
        self.check_evaluable()?;
        let diagnostics = self.validate();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(Error::NotMonotonic(diagnostics))
        }
    }

    /// The one-layer model that predicts `U(a)` iff `a` has at least one
    /// neighbour and at least half of its neighbours satisfy `U`.
    pub fn majority(threshold: f64) -> MagnnModel {
        MagnnModel {
            signature: Signature::new(["U"], ["P"]).expect("static signature"),
            layers: vec![Layer {
                a: Matrix::from_vec(1, 1, vec![0.0]),
                b: vec![Matrix::from_vec(1, 1, vec![1.0])],
                bias: vec![0.0],
                activation: Activation::ClampedIdentity,
            }],
            threshold,
            direction: Direction::Out,
        }
    }

    pub fn from_json(text: &str) -> Result<MagnnModel> {
        let raw: RawModel = serde_json::from_str(text)?;
        raw.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawModel::from_model(self)).expect("serialisable") + "\n"
    }

    /// Hex SHA-256 of the serialised weight file.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    signature: Signature,
    layers: Vec<RawLayer>,
    threshold: f64,
    #[serde(default)]
    direction: Direction,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B", default)]
    b: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(rename = "b")]
    bias: Vec<f64>,
    activation: Activation,
}

impl RawModel {
    fn from_model(m: &MagnnModel) -> Self {
        RawModel {
            signature: m.signature.clone(),
            layers: m
                .layers
                .iter()
                .map(|l| RawLayer {
                    a: l.a.to_rows(),
                    b: m
                        .signature
                        .binary()
                        .iter()
                        .zip(&l.b)
                        .map(|(p, mat)| (p.clone(), mat.to_rows()))
                        .collect(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
            threshold: m.threshold,
            direction: m.direction,
        }
    }

    fn into_model(self) -> Result<MagnnModel> {
        let sig = self.signature;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, raw) in self.layers.into_iter().enumerate() {
            let a = Matrix::from_rows(raw.a)?;
            let mut b = Vec::with_capacity(sig.colours());
            let mut given = raw.b;
            for p in sig.binary() {
                let rows = given.remove(p).ok_or_else(|| {
                    Error::WeightFormat(format!("layer {}: missing B matrix for `{p}`", i + 1))
                })?;
                let m = if rows.is_empty() {
                    Matrix::zeros(0, a.cols())
                } else {
                    Matrix::from_rows(rows)?
                };
                b.push(m);
            }
            if let Some(extra) = given.keys().next() {
                return Err(Error::WeightFormat(format!(
                    "layer {}: B matrix for unknown predicate `{extra}`",
                    i + 1
                )));
            }
            let a = if a.rows() == 0 { Matrix::zeros(0, 0) } else { a };
            layers.push(Layer {
                a,
                b,
                bias: raw.bias,
                activation: raw.activation,
            });
        }
        Ok(MagnnModel {
            signature: sig,
            layers,
            threshold: self.threshold,
            direction: self.direction,
        })
    }
}
