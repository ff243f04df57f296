//! Exhaustive soundness checking over every dataset with at most three
//! constants.
//!
//! Datasets are bitmasks over the possible facts on constants `c1..ck`:
//! bit `x·δ + p` of the unary mask is `U_p(c_x)`, bit `(c·k + x)·k + y` of
//! the edge mask is `R^c(c_x, c_y)`. Soundness is invariant under renaming
//! constants, so rules are only tested at `c1`, and when `k = 3` a dataset
//! is skipped if swapping `c2` and `c3` yields a smaller pair of masks.
//!
//! For a fixed unary mask, the first-layer label of a vertex depends only on
//! which constants it aggregates over per colour, so those labels are
//! tabulated once per unary mask and the edge masks only drive the later
//! layers. All arithmetic goes through the same vertex update as
//! [`crate::forward::apply`], so the outputs agree bit for bit.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::dataset::{Dataset, Fact};
use crate::error::{Error, Result};
use crate::forward::{classify, update_vertex, Scratch};
use crate::fuzz::generate::constant_name;
use crate::graph::Direction;
use crate::logic::{CompiledConcept, Interpretation, PredicateTable, RestrictedRule, Rule};
use crate::model::MagnnModel;

/// The default bound on the number of datasets enumerated.
pub const DEFAULT_LIMIT: u128 = 1 << 20;

#[derive(Clone, Debug)]
pub struct BruteForceConfig {
    /// Number of named constants, at most 3.
    pub max_constants: usize,
    /// Refuse to run when more datasets than this would be enumerated.
    pub limit: u128,
    /// Worker threads; `1` runs on the calling thread.
    pub jobs: usize,
}

impl BruteForceConfig {
    pub fn new(max_constants: usize) -> Self {
        BruteForceConfig {
            max_constants,
            limit: DEFAULT_LIMIT,
            jobs: 1,
        }
    }

    pub fn with_limit(mut self, limit: u128) -> Self {
        self.limit = limit;
        self
    }
}

/// Soundness of one rule over all datasets within the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteVerdict {
    pub sound: bool,
    /// The first violating dataset in enumeration order; the rule fires at
    /// `c1` and the model does not derive the head there.
    pub counterexample: Option<Dataset>,
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    delta: usize,
    colours: usize,
    k: usize,
    direction: Direction,
}

impl Layout {
    fn unary_bits(&self) -> usize {
        self.delta * self.k
    }

    fn edge_bits(&self) -> usize {
        self.colours * self.k * self.k
    }

    fn edge_bit(&self, c: usize, x: usize, y: usize) -> usize {
        (c * self.k + x) * self.k + y
    }

    fn patterns(&self) -> usize {
        1 << (self.colours * self.k)
    }

    /// Per colour, the constants `v` aggregates over, packed `k` bits per
    /// colour.
    fn pattern(&self, e: u64, v: usize) -> usize {
        let mut p = 0;
        for c in 0..self.colours {
            for y in 0..self.k {
                let bit = match self.direction {
                    Direction::Out => self.edge_bit(c, v, y),
                    Direction::In => self.edge_bit(c, y, v),
                };
                if e >> bit & 1 == 1 {
                    p |= 1 << (c * self.k + y);
                }
            }
        }
        p
    }

    fn swap_vertex(x: usize) -> usize {
        match x {
            1 => 2,
            2 => 1,
            other => other,
        }
    }

    fn swap_unary(&self, u: u64) -> u64 {
        let mut out = 0;
        for x in 0..self.k {
            for p in 0..self.delta {
                if u >> (x * self.delta + p) & 1 == 1 {
                    out |= 1 << (Self::swap_vertex(x) * self.delta + p);
                }
            }
        }
        out
    }

    fn swap_edges(&self, e: u64) -> u64 {
        let mut out = 0;
        let mut rest = e;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let y = bit % self.k;
            let x = bit / self.k % self.k;
            let c = bit / (self.k * self.k);
            out |= 1 << self.edge_bit(c, Self::swap_vertex(x), Self::swap_vertex(y));
        }
        out
    }

    /// Edge bits touching `c1`.
    fn first_touch_mask(&self) -> u64 {
        let mut m = 0;
        for c in 0..self.colours {
            for y in 0..self.k {
                m |= 1 << self.edge_bit(c, 0, y);
                m |= 1 << self.edge_bit(c, y, 0);
            }
        }
        m
    }

    /// Unary bits of `c1`, then one bit per colour for an outgoing fact
    /// from `c1`, then one per colour for an incoming fact.
    fn profile(&self, u: u64, e: u64) -> u64 {
        let mut f = u & ((1 << self.delta) - 1);
        for c in 0..self.colours {
            if (0..self.k).any(|y| e >> self.edge_bit(c, 0, y) & 1 == 1) {
                f |= 1 << (self.delta + c);
            }
            if (0..self.k).any(|y| e >> self.edge_bit(c, y, 0) & 1 == 1) {
                f |= 1 << (self.delta + self.colours + c);
            }
        }
        f
    }

    fn profile_bits(&self) -> usize {
        self.delta + 2 * self.colours
    }

    fn dataset(&self, sig: &crate::signature::Signature, u: u64, e: u64) -> Dataset {
        let mut d = Dataset::new();
        for x in 0..self.k {
            for p in 0..self.delta {
                if u >> (x * self.delta + p) & 1 == 1 {
                    d.insert(Fact::unary(sig.unary()[p].clone(), constant_name(x)));
                }
            }
        }
        for c in 0..self.colours {
            for x in 0..self.k {
                for y in 0..self.k {
                    if e >> self.edge_bit(c, x, y) & 1 == 1 {
                        d.insert(Fact::binary(sig.binary()[c].clone(), constant_name(x), constant_name(y)));
                    }
                }
            }
        }
        d
    }
}

/// A bit-packed dataset seen as an interpretation.
struct Tiny {
    layout: Layout,
    u: u64,
    e: u64,
}

impl Interpretation for Tiny {
    fn len(&self) -> usize {
        self.layout.k
    }

    fn has_unary(&self, x: usize, pred: usize) -> bool {
        self.u >> (x * self.layout.delta + pred) & 1 == 1
    }

    fn successors(&self, x: usize, pred: usize, inverse: bool) -> impl Iterator<Item = usize> + '_ {
        (0..self.layout.k).filter(move |&y| {
            let bit = if inverse {
                self.layout.edge_bit(pred, y, x)
            } else {
                self.layout.edge_bit(pred, x, y)
            };
            self.e >> bit & 1 == 1
        })
    }
}

type Mask = (u64, u64);

/// Which heads the model misses for datasets with a given profile at `c1`,
/// with the first dataset (in enumeration order) missing each.
#[derive(Clone, Debug)]
enum ProfileTable {
    Dense { missing: Vec<u64>, witness: Vec<Option<Mask>> },
    Sparse { missing: HashMap<u64, u64>, witness: HashMap<(u64, usize), Mask> },
}

impl ProfileTable {
    fn new(bits: usize, delta: usize) -> Self {
        if bits <= 16 {
            ProfileTable::Dense {
                missing: vec![0; 1 << bits],
                witness: vec![None; (1 << bits) * delta],
            }
        } else {
            ProfileTable::Sparse {
                missing: HashMap::new(),
                witness: HashMap::new(),
            }
        }
    }

    fn record(&mut self, f: u64, miss: u64, delta: usize, at: Mask) {
        match self {
            ProfileTable::Dense { missing, witness } => {
                let fresh = miss & !missing[f as usize];
                if fresh != 0 {
                    missing[f as usize] |= fresh;
                    for h in (0..delta).filter(|h| fresh >> h & 1 == 1) {
                        witness[f as usize * delta + h] = Some(at);
                    }
                }
            }
            ProfileTable::Sparse { missing, witness } => {
                let entry = missing.entry(f).or_insert(0);
                let fresh = miss & !*entry;
                *entry |= fresh;
                for h in (0..delta).filter(|h| fresh >> h & 1 == 1) {
                    witness.insert((f, h), at);
                }
            }
        }
    }

    /// Merges a table built from later datasets.
    fn merge(&mut self, later: ProfileTable, delta: usize) {
        let entries: Vec<(u64, usize, Mask)> = match later {
            ProfileTable::Dense { witness, .. } => witness
                .into_iter()
                .enumerate()
                .filter_map(|(i, w)| w.map(|w| ((i / delta) as u64, i % delta, w)))
                .collect(),
            ProfileTable::Sparse { witness, .. } => witness.into_iter().map(|((f, h), w)| (f, h, w)).collect(),
        };
        for (f, h, w) in entries {
            self.record(f, 1 << h, delta, w);
        }
    }

    /// The earliest dataset whose profile contains `body` and on which the
    /// model misses `head`.
    fn first_miss(&self, body: u64, head: usize, delta: usize) -> Option<Mask> {
        match self {
            ProfileTable::Dense { missing, witness } => (0..missing.len() as u64)
                .filter(|f| f & body == body && missing[*f as usize] >> head & 1 == 1)
                .filter_map(|f| witness[f as usize * delta + head])
                .min(),
            ProfileTable::Sparse { missing, witness } => missing
                .iter()
                .filter(|(f, m)| *f & body == body && *m >> head & 1 == 1)
                .filter_map(|(f, _)| witness.get(&(*f, head)).copied())
                .min(),
        }
    }
}

struct General {
    head: usize,
    body: CompiledConcept,
    required: u64,
}

struct Block {
    table: ProfileTable,
    general: Vec<Option<Mask>>,
}

struct Runner<'a> {
    m: &'a MagnnModel,
    layout: Layout,
    neighbours: Vec<Vec<Vec<usize>>>,
    general: Vec<General>,
    touch: u64,
}

impl<'a> Runner<'a> {
    fn new(m: &'a MagnnModel, layout: Layout, general: Vec<General>) -> Self {
        let neighbours = (0..layout.patterns())
            .map(|p| {
                (0..layout.colours)
                    .map(|c| (0..layout.k).filter(|y| p >> (c * layout.k + y) & 1 == 1).collect())
                    .collect()
            })
            .collect();
        Runner {
            m,
            layout,
            neighbours,
            general,
            touch: layout.first_touch_mask(),
        }
    }
}

/// Reusable buffers for the packed forward pass.
#[derive(Default)]
struct Buffers {
    cur: Vec<f64>,
    next: Vec<f64>,
    scratch: Scratch,
    patterns: Vec<usize>,
}

impl Runner<'_> {
    /// First-layer labels of every vertex for every aggregation pattern,
    /// given the unary mask.
    fn layer_one(&self, u: u64, buf: &mut Buffers) -> Vec<f64> {
        let lay = self.layout;
        let input: Vec<f64> = (0..lay.unary_bits()).map(|i| (u >> i & 1) as f64).collect();
        let first = &self.m.layers[0];
        let h1 = first.out_dim();
        let patterns = lay.patterns();
        let mut table = vec![0.0; lay.k * patterns * h1];
        for v in 0..lay.k {
            for p in 0..patterns {
                let at = (v * patterns + p) * h1;
                update_vertex(first, &input, v, &self.neighbours[p], &mut buf.scratch, &mut table[at..at + h1]);
            }
        }
        table
    }

    /// Bitmask of the heads the model derives at `c1`.
    fn predicted(&self, table: &[f64], e: u64, buf: &mut Buffers) -> u64 {
        let lay = self.layout;
        let h1 = self.m.layers[0].out_dim();
        let patterns = lay.patterns();
        buf.patterns.clear();
        buf.patterns.extend((0..lay.k).map(|v| lay.pattern(e, v)));
        let depth = self.m.layers.len();
        let output: &[f64] = if depth == 1 {
            let at = buf.patterns[0] * h1;
            &table[at..at + h1]
        } else {
            buf.cur.clear();
            for (v, &p) in buf.patterns.iter().enumerate() {
                let at = (v * patterns + p) * h1;
                buf.cur.extend_from_slice(&table[at..at + h1]);
            }
            for (l, layer) in self.m.layers.iter().enumerate().skip(1) {
                let od = layer.out_dim();
                buf.next.clear();
                buf.next.resize(lay.k * od, 0.0);
                // Only `c1` is needed from the last layer.
                let targets = if l + 1 == depth { 1 } else { lay.k };
                for v in 0..targets {
                    update_vertex(
                        layer,
                        &buf.cur,
                        v,
                        &self.neighbours[buf.patterns[v]],
                        &mut buf.scratch,
                        &mut buf.next[v * od..(v + 1) * od],
                    );
                }
                std::mem::swap(&mut buf.cur, &mut buf.next);
            }
            &buf.cur[..lay.delta]
        };
        output
            .iter()
            .enumerate()
            .fold(0u64, |acc, (h, &x)| acc | (classify(x, self.m.threshold) as u64) << h)
    }

    fn run_block(&self, u: u64) -> Block {
        let lay = self.layout;
        let delta = lay.delta;
        let mut block = Block {
            table: ProfileTable::new(lay.profile_bits(), delta),
            general: vec![None; self.general.len()],
        };
        let symmetric = lay.k >= 3;
        let swapped_u = if symmetric { lay.swap_unary(u) } else { u };
        if swapped_u < u {
            return block;
        }
        let first_unary = u & ((1 << delta) - 1);
        let mut buf = Buffers::default();
        let table = self.layer_one(u, &mut buf);
        let full = (1u64 << delta) - 1;
        for e in 0..1u64 << lay.edge_bits() {
            if symmetric && swapped_u == u && lay.swap_edges(e) < e {
                continue;
            }
            if first_unary == 0 && e & self.touch == 0 {
                continue;
            }
            let miss = !self.predicted(&table, e, &mut buf) & full;
            if miss == 0 {
                continue;
            }
            block.table.record(lay.profile(u, e), miss, delta, (u, e));
            for (i, g) in self.general.iter().enumerate() {
                if block.general[i].is_some() || miss >> g.head & 1 == 0 || first_unary & g.required != g.required {
                    continue;
                }
                if g.body.holds(&Tiny { layout: lay, u, e }, 0) {
                    block.general[i] = Some((u, e));
                }
            }
        }
        block
    }
}

/// Exhaustive soundness results for every restricted rule of a model, plus
/// any further rules supplied.
pub struct ExhaustiveResult<'a> {
    m: &'a MagnnModel,
    layout: Layout,
    table: ProfileTable,
    general: Vec<Option<Mask>>,
}

impl ExhaustiveResult<'_> {
    fn verdict(&self, found: Option<Mask>) -> BruteVerdict {
        BruteVerdict {
            sound: found.is_none(),
            counterexample: found.map(|(u, e)| self.layout.dataset(&self.m.signature, u, e)),
        }
    }

    /// Verdict for a restricted rule over the model's signature.
    pub fn restricted(&self, r: &RestrictedRule) -> Result<BruteVerdict> {
        let sig = &self.m.signature;
        r.to_rule().check_signature(sig)?;
        let head = sig.unary_index(&r.head).expect("checked");
        let mut body = 0u64;
        for a in &r.unary {
            body |= 1 << sig.unary_index(a).expect("checked");
        }
        for role in &r.exist {
            let c = sig.binary_index(&role.pred).expect("checked");
            let offset = if role.inverse { sig.colours() } else { 0 };
            body |= 1 << (sig.delta() + offset + c);
        }
        Ok(self.verdict(self.table.first_miss(body, head, sig.delta())))
    }

    /// Verdict for the `i`-th rule passed to [`exhaustive`].
    pub fn general(&self, i: usize) -> BruteVerdict {
        self.verdict(self.general[i])
    }
}

/// Enumerates every dataset over `cfg.max_constants` constants, recording
/// which heads the model misses at `c1` for each body profile, and checking
/// each rule of `rules` at `c1`.
pub fn exhaustive<'a>(m: &'a MagnnModel, rules: &[Rule], cfg: &BruteForceConfig) -> Result<ExhaustiveResult<'a>> {
    m.check_evaluable()?;
    let sig = &m.signature;
    if cfg.max_constants == 0 || cfg.max_constants > 3 {
        return Err(Error::BoundExceeded {
            size: cfg.max_constants as u128,
            limit: 3,
        });
    }
    let layout = Layout {
        delta: sig.delta(),
        colours: sig.colours(),
        k: cfg.max_constants,
        direction: m.direction,
    };
    let bits = layout.unary_bits() + layout.edge_bits();
    if bits >= 64 || layout.colours * layout.k > 16 {
        return Err(Error::BoundExceeded {
            size: u128::MAX,
            limit: cfg.limit,
        });
    }
    let size = 1u128 << bits;
    if size > cfg.limit {
        return Err(Error::BoundExceeded { size, limit: cfg.limit });
    }
    let table = PredicateTable::from_signature(sig);
    let general = rules
        .iter()
        .map(|r| {
            r.check_signature(sig)?;
            let body = CompiledConcept::new(&r.body, &table);
            let required = body.required_atoms().iter().fold(0u64, |acc, &p| acc | 1 << p);
            Ok(General {
                head: sig.unary_index(&r.head).expect("checked"),
                body,
                required,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let runner = Runner::new(m, layout, general);
    let unary_masks = 0..1u64 << layout.unary_bits();
    let blocks: Vec<Block> = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) if cfg.jobs > 1 => pool.install(|| unary_masks.into_par_iter().map(|u| runner.run_block(u)).collect()),
        _ => unary_masks.map(|u| runner.run_block(u)).collect(),
    };
    let mut table = ProfileTable::new(layout.profile_bits(), layout.delta);
    let mut found = vec![None; rules.len()];
    for block in blocks {
        table.merge(block.table, layout.delta);
        for (slot, g) in found.iter_mut().zip(block.general) {
            if slot.is_none() {
                *slot = g;
            }
        }
    }
    Ok(ExhaustiveResult {
        m,
        layout,
        table,
        general: found,
    })
}

/// Checks each rule against every dataset within the bound.
pub fn brute_force_soundness(m: &MagnnModel, rules: &[Rule], cfg: &BruteForceConfig) -> Result<Vec<BruteVerdict>> {
    let result = exhaustive(m, rules, cfg)?;
    Ok((0..rules.len()).map(|i| result.general(i)).collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::facts;
    use crate::forward::apply;
    use crate::fuzz::generate::random_model;
    use crate::logic::Role;
    use crate::signature::Signature;
    use rand::{Rng, SeedableRng};

    #[test]
    fn packed_layout_round_trips_datasets() {
        let sig = Signature::new(["A", "B"], ["P", "Q"]).unwrap();
        let lay = Layout {
            delta: 2,
            colours: 2,
            k: 3,
            direction: Direction::Out,
        };
        let d = lay.dataset(&sig, 0b000_110, 1 << lay.edge_bit(1, 2, 0));
        assert_eq!(d, facts("B(c1) A(c2) Q(c3,c1)"));
        assert_eq!(lay.profile(0b000_110, 1 << lay.edge_bit(1, 2, 0)), 0b10_00_10);
    }

    #[test]
    fn swaps_are_involutions() {
        let lay = Layout {
            delta: 2,
            colours: 2,
            k: 3,
            direction: Direction::Out,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = rng.gen_range(0..1u64 << 6);
            let e = rng.gen_range(0..1u64 << 18);
            assert_eq!(lay.swap_unary(lay.swap_unary(u)), u);
            assert_eq!(lay.swap_edges(lay.swap_edges(e)), e);
        }
    }

    #[test]
    fn packed_forward_matches_apply() {
        let sig = Signature::new(["A", "B"], ["P", "Q"]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for seed in 0..8 {
            let mut m = random_model(&sig, 1 + seed as usize % 3, 3, seed, seed % 4 != 3);
            if seed % 2 == 1 {
                m.direction = Direction::In;
            }
            let lay = Layout {
                delta: 2,
                colours: 2,
                k: 3,
                direction: m.direction,
            };
            let runner = Runner::new(&m, lay, Vec::new());
            let mut buf = Buffers::default();
            for _ in 0..60 {
                let u = rng.gen_range(0..1u64 << 6);
                let e = rng.gen_range(0..1u64 << 18);
                let table = runner.layer_one(u, &mut buf);
                let packed = runner.predicted(&table, e, &mut buf);
                let d = lay.dataset(&sig, u, e);
                let out = apply(&m, &d).unwrap();
                let expected = (0..2).fold(0u64, |acc, h| {
                    acc | (out.contains(&Fact::unary(sig.unary()[h].clone(), "c1")) as u64) << h
                });
                // An unmentioned `c1` gets no output facts, but the packed
                // pass still reports what an isolated vertex would get.
                if d.mentions("c1") {
                    assert_eq!(packed, expected, "model {seed}, dataset {d}");
                }
            }
        }
    }

    #[test]
    fn copy_and_majority_verdicts() {
        let copy = MagnnModel {
            signature: Signature::new(["U"], ["P"]).unwrap(),
            layers: vec![crate::model::Layer {
                a: crate::model::Matrix::from_vec(1, 1, vec![1.0]),
                b: vec![crate::model::Matrix::from_vec(1, 1, vec![0.0])],
                bias: vec![0.0],
                activation: crate::model::Activation::Relu,
            }],
            threshold: 0.5,
            direction: Direction::Out,
        };
        let r = RestrictedRule::new("U", ["U"], []);
        let cfg = BruteForceConfig::new(3);
        assert!(exhaustive(&copy, &[], &cfg).unwrap().restricted(&r).unwrap().sound);
        let majority = MagnnModel::majority(0.5);
        let v = exhaustive(&majority, &[], &cfg).unwrap().restricted(&r).unwrap();
        assert_eq!(v.counterexample, Some(facts("U(c1)")));
        let top = RestrictedRule::new("U", Vec::<String>::new(), [Role::new("P")]);
        assert!(!exhaustive(&majority, &[], &cfg).unwrap().restricted(&top).unwrap().sound);
    }

    #[test]
    fn general_rules_are_checked_at_first_constant() {
        let majority = MagnnModel::majority(0.5);
        let cfg = BruteForceConfig::new(3);
        let sound: Rule = "ATLEAST 1 P.(U) AND EXISTSU 1 P.(U) MAXDEG 1 => U".parse().unwrap();
        let unsound: Rule = "ATLEAST 1 P.(U) => U".parse().unwrap();
        let v = brute_force_soundness(&majority, &[sound, unsound.clone()], &cfg).unwrap();
        assert!(v[0].sound);
        assert!(!v[1].sound);
        let cex = v[1].counterexample.clone().unwrap();
        let fired = crate::logic::immediate_consequences(&unsound, &cex);
        assert!(fired.contains(&Fact::unary("U", "c1")));
        assert!(!apply(&majority, &cex).unwrap().contains(&Fact::unary("U", "c1")));
    }

    #[test]
    fn guard_reports_size() {
        let sig = Signature::new(["A", "B", "C"], ["P", "Q"]).unwrap();
        let m = random_model(&sig, 1, 3, 0, true);
        match exhaustive(&m, &[], &BruteForceConfig::new(3)) {
            Err(Error::BoundExceeded { size, limit }) => {
                assert_eq!(size, 1 << 27);
                assert_eq!(limit, DEFAULT_LIMIT);
            }
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
