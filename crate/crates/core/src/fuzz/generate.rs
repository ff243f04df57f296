use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Fact};
use crate::graph::Direction;
use crate::model::{Activation, Layer, MagnnModel, Matrix};
use crate::signature::Signature;

/// The generator for trial `trial` of a run seeded with `seed`. Each trial
/// owns a separate ChaCha stream, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Constant names used by generated datasets.
pub fn constant_name(i: usize) -> String {
    format!("c{}", i + 1)
}

/// A dataset over a pool of `1..=max_constants` constants (size chosen
/// uniformly) containing each possible unary and binary fact over the pool
/// independently with probability `density`.
pub fn random_dataset(sig: &Signature, max_constants: usize, density: f64, seed: u64) -> Dataset {
    random_dataset_with(&mut ChaCha8Rng::seed_from_u64(seed), sig.unary(), sig.binary(), max_constants, density)
}

/// As [`random_dataset`], drawing from `rng` and the given predicate lists.
pub fn random_dataset_with<R: Rng>(
    rng: &mut R,
    unary: &[String],
    binary: &[String],
    max_constants: usize,
    density: f64,
) -> Dataset {
    let n = rng.gen_range(1..=max_constants.max(1));
    let density = density.clamp(0.0, 1.0);
    let mut d = Dataset::new();
    for x in 0..n {
        for u in unary {
            if rng.gen_bool(density) {
                d.insert(Fact::unary(u.clone(), constant_name(x)));
            }
        }
    }
    for p in binary {
        for x in 0..n {
            for y in 0..n {
                if rng.gen_bool(density) {
                    d.insert(Fact::binary(p.clone(), constant_name(x), constant_name(y)));
                }
            }
        }
    }
    d
}

/// A random model of depth `layers` whose hidden layers have dimension
/// `hidden`. Matrix entries are uniform in `[0, 1]`, or in `[-1, 1]` when
/// `monotone` is false. Hidden layers use ReLU, the output layer a sigmoid,
/// and the threshold is uniform in `(0, 1)`.
pub fn random_model(sig: &Signature, layers: usize, hidden: usize, seed: u64, monotone: bool) -> MagnnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let low = if monotone { 0.0 } else { -1.0 };
    let delta = sig.delta();
    let layers = layers.max(1);
    let mut built = Vec::with_capacity(layers);
    let mut prev = delta;
    for l in 0..layers {
        let out = if l + 1 == layers { delta } else { hidden.max(1) };
        let matrix = |rng: &mut ChaCha8Rng| {
            Matrix::from_vec(out, prev, (0..out * prev).map(|_| rng.gen_range(low..=1.0)).collect())
        };
        let a = matrix(&mut rng);
        let b = (0..sig.colours()).map(|_| matrix(&mut rng)).collect();
        // A negative bias keeps some outputs low on sparse inputs, so the
        // model derives some rules and rejects others.
        let bias = (0..out).map(|_| rng.gen_range(-2.0..=0.5)).collect();
        let activation = if l + 1 == layers {
            Activation::Sigmoid
        } else {
            Activation::Relu
        };
        built.push(Layer {
            a,
            b,
            bias,
            activation,
        });
        prev = out;
    }
    let threshold = loop {
        let t: f64 = rng.gen_range(0.0..1.0);
        if t > 0.0 {
            break t;
        }
    };
    MagnnModel {
        signature: sig.clone(),
        layers: built,
        threshold,
        direction: Direction::Out,
    }
}
