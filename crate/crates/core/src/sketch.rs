//! Sketch schemes over GF(2): a distribution over `k x n` parity matrices
//! together with a decoder of the `k`-bit sketch.
//!
//! Deterministic and sign-threshold schemes are point distributions; the
//! random-parity and threshold-function schemes are seeded families sampled
//! by trial index.

use crate::boolfn::{butterfly, BoolFun};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::fourierdim::exact_dim;
use crate::gf2::{BitVec, Gf2Matrix, Subspace};
use crate::rat::{ceil_log2, parse_rat, rat_string, rat_to_f64, Rat};
use crate::rng::substream;
use itertools::Itertools;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Anything a sketch can be evaluated against: a truth table or a weighted
/// threshold function too wide for one.
pub trait BoolTarget: Sync {
    fn arity(&self) -> usize;
    fn value_of(&self, x: u64) -> i8;
}

impl BoolTarget for BoolFun {
    fn arity(&self) -> usize {
        self.n()
    }
    fn value_of(&self, x: u64) -> i8 {
        self.value(x)
    }
}

/// One sampled sketch: a concrete matrix and its decoder.
#[derive(Clone, Debug)]
pub struct ConcreteSketch {
    matrix: Gf2Matrix,
    decoder: Decoder,
}

#[derive(Clone, Debug)]
pub enum Decoder {
    /// Full table over `F_2^k`.
    Table(Vec<i8>),
    /// Predict `hit` when the sketch equals the sketch of a known input set.
    Candidates { set: HashSet<u64>, hit: i8, miss: i8 },
    /// Leading rows vote on a weight test; on a miss the remaining bits fall
    /// through to the candidate decoder.
    Staged { stage1_rows: usize, fire_at: u32, inner: Box<Decoder> },
}

impl ConcreteSketch {
    pub fn new(matrix: Gf2Matrix, decoder: Decoder) -> Self {
        ConcreteSketch { matrix, decoder }
    }

    pub fn k(&self) -> usize {
        self.matrix.row_count()
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &Gf2Matrix {
        &self.matrix
    }

    /// Sketch bits of `x`: bit `j` is the parity of row `j` against `x`.
    pub fn apply(&self, x: u64) -> u64 {
        let mut bits = 0u64;
        for (j, &row) in self.matrix.raw_rows().iter().enumerate() {
            bits |= u64::from((row & x).count_ones() & 1) << j;
        }
        bits
    }

    pub fn decode(&self, bits: u64) -> i8 {
        match &self.decoder {
            Decoder::Table(t) => t[bits as usize],
            Decoder::Candidates { set, hit, miss } => {
                if set.contains(&bits) {
                    *hit
                } else {
                    *miss
                }
            }
            Decoder::Staged { stage1_rows, fire_at, inner } => {
                let mask = (1u64 << stage1_rows) - 1;
                if (bits & mask).count_ones() >= *fire_at {
                    -1
                } else {
                    let suffix = bits >> stage1_rows;
                    match inner.as_ref() {
                        Decoder::Table(t) => t[suffix as usize],
                        Decoder::Candidates { set, hit, miss } => {
                            if set.contains(&suffix) {
                                *hit
                            } else {
                                *miss
                            }
                        }
                        Decoder::Staged { .. } => unreachable!("stages do not nest"),
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: u64) -> i8 {
        self.decode(self.apply(x))
    }

    /// Column view: `columns()[i]` has bit `j` set when row `j` reads
    /// coordinate `i+1`. This is the per-update XOR mask of a streaming run.
    pub fn columns(&self) -> Vec<u64> {
        let mut cols = vec![0u64; self.n()];
        for (j, &row) in self.matrix.raw_rows().iter().enumerate() {
            for (i, col) in cols.iter_mut().enumerate() {
                *col |= (row >> i & 1) << j;
            }
        }
        cols
    }
}

/// Decoder family for the random-parity scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderRule {
    /// Predict the minority value iff the sketch matches the sketch of a
    /// minority input. Correct with certainty on the minority side and wrong
    /// only on sketch collisions, so the per-input error stays below delta.
    Isolation,
    /// Per-coset majority vote under the uniform distribution, ties to +1.
    /// Optimal on average but offers no per-input guarantee for minority
    /// inputs that share a coset with the majority.
    MajorityVote,
}

#[derive(Clone, Debug)]
pub enum SketchScheme {
    Deterministic(ConcreteSketch),
    SignTrick {
        concrete: ConcreteSketch,
        achieved_error: Rat,
        subspace_weight: Rat,
    },
    RandomParity {
        f: BoolFun,
        k: usize,
        delta: Rat,
        seed: u64,
        rule: DecoderRule,
    },
    Ltf(LtfScheme),
}

impl SketchScheme {
    pub fn kind(&self) -> &'static str {
        match self {
            SketchScheme::Deterministic(_) => "det",
            SketchScheme::SignTrick { .. } => "sign",
            SketchScheme::RandomParity { .. } => "parity",
            SketchScheme::Ltf(_) => "ltf",
        }
    }

    pub fn k(&self) -> usize {
        match self {
            SketchScheme::Deterministic(c) | SketchScheme::SignTrick { concrete: c, .. } => c.k(),
            SketchScheme::RandomParity { k, .. } => *k,
            SketchScheme::Ltf(l) => l.width(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SketchScheme::Deterministic(c) | SketchScheme::SignTrick { concrete: c, .. } => c.n(),
            SketchScheme::RandomParity { f, .. } => f.n(),
            SketchScheme::Ltf(l) => l.spec.n(),
        }
    }

    /// Point distributions admit exact error evaluation.
    pub fn is_point(&self) -> bool {
        matches!(self, SketchScheme::Deterministic(_) | SketchScheme::SignTrick { .. })
    }

    /// Sample the concrete sketch for a trial index. Point distributions
    /// ignore the index.
    pub fn sample(&self, index: u64) -> ConcreteSketch {
        match self {
            SketchScheme::Deterministic(c) | SketchScheme::SignTrick { concrete: c, .. } => c.clone(),
            SketchScheme::RandomParity { f, k, seed, rule, .. } => {
                let n = f.n();
                let mut rng = substream(*seed, "sketch/parity", index);
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                let mut m = Gf2Matrix::new(n.max(1)).expect("valid arity");
                for _ in 0..*k {
                    let row: u64 = rng.random::<u64>() & mask;
                    m.push_row(BitVec::new(n.max(1), row).expect("in range")).expect("same arity");
                }
                let concrete_no_dec = ConcreteSketch::new(m, Decoder::Table(Vec::new()));
                let decoder = build_parity_decoder(f, &concrete_no_dec, *rule);
                ConcreteSketch { matrix: concrete_no_dec.matrix, decoder }
            }
            SketchScheme::Ltf(l) => l.sample(index),
        }
    }
}

fn build_parity_decoder(f: &BoolFun, sk: &ConcreteSketch, rule: DecoderRule) -> Decoder {
    let n = f.n();
    let minority = if 2 * f.count_negative() <= 1u64 << n { -1i8 } else { 1i8 };
    match rule {
        DecoderRule::Isolation => {
            let set = (0..1u64 << n)
                .filter(|&x| f.value(x) == minority)
                .map(|x| sk.apply(x))
                .collect();
            Decoder::Candidates { set, hit: minority, miss: -minority }
        }
        DecoderRule::MajorityVote => {
            let k = sk.k();
            let mut neg = vec![0u32; 1 << k];
            let mut pos = vec![0u32; 1 << k];
            for x in 0..1u64 << n {
                let s = sk.apply(x) as usize;
                if f.value(x) == -1 {
                    neg[s] += 1;
                } else {
                    pos[s] += 1;
                }
            }
            let table = neg
                .iter()
                .zip(pos.iter())
                .map(|(&nn, &pp)| if nn > pp { -1 } else { 1 })
                .collect();
            Decoder::Table(table)
        }
    }
}

/// Zero-error sketch on a basis of the spectral span, one decoder entry per
/// coset representative.
pub fn deterministic_sketch(f: &BoolFun, caps: &Caps) -> Result<SketchScheme> {
    let (k, sub) = exact_dim(f);
    if k > caps.decoder_width {
        return Err(Error::WidthCap(format!(
            "table decoder capped at {} bits, need {k}",
            caps.decoder_width
        )));
    }
    let pivots = sub.pivots();
    let matrix = if k == 0 { Gf2Matrix::new(f.n().max(1))? } else { sub.basis().clone() };
    let mut table = Vec::with_capacity(1 << k);
    for s in 0..1u64 << k {
        // The basis is reduced, so flipping the pivot coordinates named by s
        // produces a representative with sketch exactly s.
        let mut rep = 0u64;
        for (j, &p) in pivots.iter().enumerate() {
            if s >> j & 1 == 1 {
                rep |= 1u64 << p;
            }
        }
        table.push(f.value(rep));
    }
    Ok(SketchScheme::Deterministic(ConcreteSketch::new(matrix, Decoder::Table(table))))
}

/// Project onto the subspace, then threshold the projection at the exactly
/// optimal cut. The achieved uniform error never exceeds
/// `(1 - weight(A)) / 2`.
pub fn sign_trick_sketch(f: &BoolFun, a: &Subspace, caps: &Caps) -> Result<(SketchScheme, Rat)> {
    if a.n() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "subspace arity {} differs from function arity {}",
            a.n(),
            f.n()
        )));
    }
    let d = a.dim();
    if d > caps.decoder_width {
        return Err(Error::WidthCap(format!(
            "table decoder capped at {} bits, need {d}",
            caps.decoder_width
        )));
    }
    let n = f.n();
    let spec = f.wht();

    // g(x) depends on x only through its sketch s; g_num[s] = 2^n g(x).
    let mut g_num = vec![0i64; 1 << d];
    let rows = a.basis().raw_rows();
    let mut alpha = vec![0u64; 1 << d];
    for lambda in 1usize..1 << d {
        alpha[lambda] = alpha[lambda & (lambda - 1)] ^ rows[lambda.trailing_zeros() as usize];
    }
    for (lambda, &av) in alpha.iter().enumerate() {
        g_num[lambda] = i64::from(spec.coeffs()[av as usize]);
    }
    let subspace_weight = Rat::new(
        g_num.iter().map(|&c| i128::from(c) * i128::from(c)).sum::<i128>(),
        1i128 << (2 * n),
    );
    butterfly(&mut g_num);

    let matrix = if d == 0 { Gf2Matrix::new(n.max(1))? } else { a.basis().clone() };
    let probe = ConcreteSketch::new(matrix.clone(), Decoder::Table(Vec::new()));
    let mut neg = vec![0u64; 1 << d];
    let mut pos = vec![0u64; 1 << d];
    for x in 0..1u64 << n {
        let s = probe.apply(x) as usize;
        if f.value(x) == -1 {
            neg[s] += 1;
        } else {
            pos[s] += 1;
        }
    }

    // Sweep every threshold configuration: the decoder outputs +1 exactly on
    // cosets with g at or above the cut.
    let mut cuts: Vec<i64> = g_num.iter().copied().collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts.push(cuts.last().copied().unwrap_or(0) + 1);
    let mut best: Option<(u64, i64)> = None;
    for &cut in &cuts {
        let wrong: u64 = (0..1usize << d)
            .map(|s| if g_num[s] >= cut { neg[s] } else { pos[s] })
            .sum();
        if best.is_none() || wrong < best.unwrap().0 {
            best = Some((wrong, cut));
        }
    }
    let (wrong, cut) = best.expect("at least one cut");
    let achieved_error = Rat::new(wrong as i128, 1i128 << n);
    let bound = (Rat::one() - subspace_weight.clone()) / Rat::from_integer(2);
    debug_assert!(achieved_error <= bound, "threshold trick exceeded its bound");

    let table: Vec<i8> = (0..1usize << d).map(|s| if g_num[s] >= cut { 1 } else { -1 }).collect();
    let concrete = ConcreteSketch::new(matrix, Decoder::Table(table));
    Ok((
        SketchScheme::SignTrick { concrete, achieved_error: achieved_error.clone(), subspace_weight },
        achieved_error,
    ))
}

/// Random-parity scheme: `k = ceil(log2(minority * 2 / delta))` uniform
/// parities. The default decoder is the isolation rule, which meets the
/// per-input error guarantee; the majority-vote decoder is available for
/// average-case comparisons.
pub fn random_parity_sketch(
    f: &BoolFun,
    delta: &Rat,
    seed: u64,
    rule: DecoderRule,
) -> Result<SketchScheme> {
    if delta <= &Rat::zero() || delta >= &Rat::one() {
        return Err(Error::DeltaRange(format!("delta must be in (0,1), got {}", rat_string(delta))));
    }
    let n = f.n();
    let neg = f.count_negative();
    let minority_count = neg.min((1u64 << n) - neg);
    if minority_count == 0 {
        // Constant function: the empty sketch decodes to the constant.
        let matrix = Gf2Matrix::new(n.max(1))?;
        let table = vec![f.value(0)];
        return Ok(SketchScheme::Deterministic(ConcreteSketch::new(matrix, Decoder::Table(table))));
    }
    let k = ceil_log2(&(Rat::from_integer(2 * i128::from(minority_count)) / delta.clone()));
    if k as usize > 63 {
        return Err(Error::WidthCap(format!("random-parity width {k} exceeds 63 bits")));
    }
    Ok(SketchScheme::RandomParity { f: f.clone(), k: k as usize, delta: delta.clone(), seed, rule })
}

/// A monotone linear threshold function: sorted nonnegative weights, a
/// threshold, and a positive margin. The output bit is 1 (value -1) when the
/// weighted sum reaches the threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtfSpec {
    weights: Vec<Rat>,
    theta: Rat,
    margin: Rat,
    // Integer form over a common denominator, for O(1)-per-input evaluation.
    int_weights: Vec<i128>,
    int_theta: i128,
    int_den: i128,
}

impl LtfSpec {
    /// Validate and normalize. Weights must be nonincreasing and
    /// nonnegative; they are rescaled to sum to 1 (threshold and margin
    /// rescale along). A missing margin is computed by an exact scan of all
    /// `2^n` subset sums (`n <= 26`).
    pub fn new(weights: Vec<Rat>, theta: Rat, margin: Option<Rat>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionOutOfRange("threshold function needs at least one weight".into()));
        }
        if weights.len() > 64 {
            return Err(Error::DimensionOutOfRange(format!(
                "at most 64 weights supported, got {}",
                weights.len()
            )));
        }
        for pair in weights.windows(2) {
            if pair[0] < pair[1] {
                return Err(Error::DimensionMismatch(
                    "weights must be sorted in nonincreasing order".into(),
                ));
            }
        }
        if weights.last().unwrap() < &Rat::zero() {
            return Err(Error::DimensionMismatch("weights must be nonnegative".into()));
        }
        let total: Rat = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::DimensionMismatch("weights must not all be zero".into()));
        }
        let weights: Vec<Rat> = weights.into_iter().map(|w| w / total.clone()).collect();
        let theta = theta / total.clone();
        let margin = margin.map(|m| m / total);

        let mut spec = LtfSpec {
            weights,
            theta,
            margin: Rat::zero(),
            int_weights: Vec::new(),
            int_theta: 0,
            int_den: 1,
        };
        spec.build_int_form()?;
        let margin = match margin {
            Some(m) => m,
            None => spec.scan_margin()?,
        };
        if margin <= Rat::zero() {
            return Err(Error::NonpositiveMargin(rat_string(&margin)));
        }
        spec.margin = margin;
        Ok(spec)
    }

    fn build_int_form(&mut self) -> Result<()> {
        let mut den: i128 = *self.theta.denom();
        for w in &self.weights {
            den = den.lcm(w.denom());
            if den > 1 << 50 {
                return Err(Error::SizeCap("weight denominators too fine for exact evaluation".into()));
            }
        }
        self.int_weights = self.weights.iter().map(|w| w.numer() * (den / w.denom())).collect();
        self.int_theta = self.theta.numer() * (den / self.theta.denom());
        self.int_den = den;
        Ok(())
    }

    fn scan_margin(&self) -> Result<Rat> {
        let n = self.n();
        if n > 26 {
            return Err(Error::ArityCap(format!(
                "margin scan capped at 26 weights; supply the margin for n={n}"
            )));
        }
        let mut best: i128 = (self.int_theta).abs(); // empty subset
        let mut sum: i128 = 0;
        for g in 1u64..1u64 << n {
            let j = g.trailing_zeros() as usize;
            // Gray-code walk: bit j toggles between consecutive subsets.
            let subset = g ^ (g >> 1);
            if subset >> j & 1 == 1 {
                sum += self.int_weights[j];
            } else {
                sum -= self.int_weights[j];
            }
            best = best.min((sum - self.int_theta).abs());
        }
        Ok(Rat::new(best, self.int_den))
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn theta(&self) -> &Rat {
        &self.theta
    }

    pub fn margin(&self) -> &Rat {
        &self.margin
    }

    /// Uniform-weight threshold: output bit 1 iff the Hamming weight is at
    /// least `k`. The margin `1/(2n)` is supplied rather than scanned so the
    /// threshold can sit exactly on `k/n` (ties resolve to output 1).
    pub fn hamming_ge(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::DimensionOutOfRange(format!("hamming_ge needs 1 <= k <= n, got k={k}, n={n}")));
        }
        LtfSpec::new(
            vec![Rat::new(1, n as i128); n],
            Rat::new(k as i128, n as i128),
            Some(Rat::new(1, 2 * n as i128)),
        )
    }

    /// Weight file: `theta=<decimal>` header, then one decimal weight per
    /// line, largest first.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty weight file".into() })?;
        let theta = header
            .trim()
            .strip_prefix("theta=")
            .and_then(parse_rat)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected 'theta=<decimal>', got '{header}'") })?;
        let mut weights = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            weights.push(parse_rat(line).ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("bad weight '{line}'"),
            })?);
        }
        LtfSpec::new(weights, theta, None)
    }

    pub fn to_truth_table(&self) -> Result<BoolFun> {
        BoolFun::from_bit_fn(self.n(), |x| self.value_of(x) == -1)
    }
}

impl BoolTarget for LtfSpec {
    fn arity(&self) -> usize {
        self.n()
    }

    fn value_of(&self, x: u64) -> i8 {
        let mut sum: i128 = 0;
        let mut bits = x;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            sum += self.int_weights[j];
            bits &= bits - 1;
        }
        if sum >= self.int_theta {
            -1
        } else {
            1
        }
    }
}

/// Drop weights below twice the margin (the function value is unchanged on
/// every input), reset the margin to half the smallest kept weight, and
/// renormalize.
pub fn ltf_preprocess(spec: &LtfSpec) -> Result<LtfSpec> {
    let two_m = spec.margin.clone() * Rat::from_integer(2);
    let kept: Vec<Rat> = spec.weights.iter().filter(|w| **w >= two_m).cloned().collect();
    if kept.is_empty() {
        return Err(Error::NonpositiveMargin("all weights fall below twice the margin".into()));
    }
    let new_margin = kept.last().unwrap().clone() / Rat::from_integer(2);
    let pruned = LtfSpec::new(kept, spec.theta.clone(), Some(new_margin))?;
    // The pruning lemma guarantees value preservation; verify exhaustively
    // while it is cheap. A supplied margin larger than the true one would
    // break the guarantee, and this is where that surfaces.
    if spec.n() <= 16 {
        let t = pruned.n();
        let mask = (1u64 << t) - 1;
        for x in 0..1u64 << spec.n() {
            if spec.value_of(x) != pruned.value_of(x & mask) {
                return Err(Error::DimensionMismatch(format!(
                    "pruning changed the function at input {x:#b}; the supplied margin is inconsistent"
                )));
            }
        }
    }
    Ok(pruned)
}

/// Build plan for the staged threshold-function scheme.
#[derive(Clone, Debug)]
pub struct LtfPlan {
    /// Original coordinates kept after pruning (0-based).
    pub kept: Vec<usize>,
    /// Number of sparse test parities (0 when the weight test is skipped).
    pub stage1_rows: usize,
    /// Vote threshold for the weight test.
    pub fire_at: u32,
    /// Inclusion probability of each kept coordinate in a test parity.
    pub sparse_p: f64,
    /// Hash bucket count, when hashing is active.
    pub buckets: Option<usize>,
    /// Random parities in the final stage, sized by the enumerated
    /// candidate count.
    pub k3: usize,
    /// Width the support bound `(B+1)^{theta/2m}` alone would give; at least
    /// `k3`, and reported for reference.
    pub k3_from_support_bound: usize,
    /// All inputs on the strict side of the threshold, packed over the
    /// original coordinates.
    pub candidates: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct LtfScheme {
    pub spec: LtfSpec,
    pub pruned: LtfSpec,
    pub delta: Rat,
    pub seed: u64,
    pub plan: LtfPlan,
}

impl LtfScheme {
    pub fn width(&self) -> usize {
        self.plan.stage1_rows + self.plan.k3
    }

    fn sample(&self, index: u64) -> ConcreteSketch {
        let n = self.spec.n();
        let plan = &self.plan;
        let mut rng = substream(self.seed, "sketch/ltf", index);
        let mut matrix = Gf2Matrix::new(n.max(1)).expect("valid arity");
        for _ in 0..plan.stage1_rows {
            let mut row = 0u64;
            for &pos in &plan.kept {
                if rng.random_bool(plan.sparse_p) {
                    row |= 1u64 << pos;
                }
            }
            matrix.push_row(BitVec::new(n.max(1), row).expect("in range")).expect("same arity");
        }
        let stage3_rows: Vec<u64> = match plan.buckets {
            Some(b) => {
                let hash: Vec<usize> = plan.kept.iter().map(|_| rng.random_range(0..b)).collect();
                (0..plan.k3)
                    .map(|_| {
                        let mut picked = vec![false; b];
                        for slot in picked.iter_mut() {
                            *slot = rng.random_bool(0.5);
                        }
                        let mut row = 0u64;
                        for (ki, &pos) in plan.kept.iter().enumerate() {
                            if picked[hash[ki]] {
                                row |= 1u64 << pos;
                            }
                        }
                        row
                    })
                    .collect()
            }
            None => (0..plan.k3)
                .map(|_| {
                    let mut row = 0u64;
                    for &pos in &plan.kept {
                        if rng.random_bool(0.5) {
                            row |= 1u64 << pos;
                        }
                    }
                    row
                })
                .collect(),
        };
        for row in stage3_rows {
            matrix.push_row(BitVec::new(n.max(1), row).expect("in range")).expect("same arity");
        }

        // Candidate suffixes under this sample's final-stage rows.
        let stage3 = &matrix.raw_rows()[plan.stage1_rows..];
        let set: HashSet<u64> = plan
            .candidates
            .iter()
            .map(|&cand| {
                let mut bits = 0u64;
                for (j, &row) in stage3.iter().enumerate() {
                    bits |= u64::from((row & cand).count_ones() & 1) << j;
                }
                bits
            })
            .collect();
        let inner = Decoder::Candidates { set, hit: 1, miss: -1 };
        let decoder = if plan.stage1_rows > 0 {
            Decoder::Staged { stage1_rows: plan.stage1_rows, fire_at: plan.fire_at, inner: Box::new(inner) }
        } else {
            inner
        };
        ConcreteSketch { matrix, decoder }
    }
}

/// Number of sparse parities in the weight test, voted against a 0.3
/// firing-rate cut separating the two sides of the test.
const STAGE1_ROWS: usize = 48;
const STAGE1_FIRE_AT: u32 = 15; // smallest count above 0.3 * 48
/// Bucket-count multiplier for the hashing stage.
const HASH_BUCKET_FACTOR: f64 = 100.0;

/// Staged sketch for a monotone threshold function, of total width
/// `O((theta/m) log(theta/m))`:
/// a sparse-parity weight test (only when `theta/m > 100`), a random hash of
/// the coordinates into buckets (only when it shrinks the domain), and a
/// random-parity sketch sized by the support bound `(B+1)^{theta/2m}`. The
/// failure budget is split evenly across the active stages.
pub fn ltf_sketch(spec: &LtfSpec, delta: &Rat, seed: u64) -> Result<SketchScheme> {
    if delta <= &Rat::zero() || delta >= &Rat::new(1, 2) {
        return Err(Error::DeltaRange(format!(
            "delta must be in (0, 1/2), got {}",
            rat_string(delta)
        )));
    }
    let pruned = ltf_preprocess(spec)?;
    let t = pruned.n();
    let kept: Vec<usize> = (0..t).collect();
    let ratio = pruned.theta.clone() / pruned.margin.clone();
    let ratio_f = rat_to_f64(&ratio);

    let stage1 = ratio > Rat::from_integer(100);
    let buckets_raw = (HASH_BUCKET_FACTOR * ratio_f.powi(4)).ceil() as usize;
    let hashing = buckets_raw < t;
    let domain = if hashing { buckets_raw } else { t };
    let active = 1 + usize::from(stage1) + usize::from(hashing);
    let delta_stage = rat_to_f64(delta) / active as f64;

    // Candidate side: strictly below the threshold, weight below theta/w_t.
    let max_size = rat_to_f64(&(pruned.theta.clone() / pruned.weights.last().unwrap().clone()))
        .floor() as usize;
    let max_size = max_size.min(t);
    let mut candidate_count: u128 = 0;
    for s in 0..=max_size {
        candidate_count += n_choose_k(t, s);
        if candidate_count > 1 << 23 {
            return Err(Error::SizeCap(format!(
                "candidate enumeration exceeds 2^23 inputs (theta/margin = {ratio_f:.1})"
            )));
        }
    }
    let mut candidates = Vec::new();
    for s in 0..=max_size {
        for combo in (0..t).combinations(s) {
            let x: u64 = combo.iter().map(|&i| 1u64 << i).sum();
            if pruned.value_of(x) == 1 {
                candidates.push(x);
            }
        }
    }

    // Fact-style sizing log2(2 |T| / delta): the enumerated candidate count
    // is exact and never exceeds the (B+1)^{theta/2m} support bound, so this
    // width is at most the bound's and carries the same guarantee.
    let k3 = ((2.0 * candidates.len().max(1) as f64 / delta_stage).log2()).ceil() as usize;
    let k3_from_support_bound = ((rat_to_f64(&ratio) / 2.0) * ((domain + 1) as f64).log2()
        + (2.0 / delta_stage).log2())
    .ceil() as usize;
    let stage1_rows = if stage1 { STAGE1_ROWS } else { 0 };
    if stage1_rows + k3 > 63 {
        return Err(Error::WidthCap(format!(
            "staged scheme width {} exceeds 63 bits",
            stage1_rows + k3
        )));
    }

    let plan = LtfPlan {
        kept,
        stage1_rows,
        fire_at: STAGE1_FIRE_AT,
        sparse_p: (10.0 / (ratio_f * ratio_f)).min(1.0),
        buckets: hashing.then_some(buckets_raw),
        k3,
        k3_from_support_bound,
        candidates,
    };
    Ok(SketchScheme::Ltf(LtfScheme {
        spec: spec.clone(),
        pruned,
        delta: delta.clone(),
        seed,
        plan,
    }))
}

fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Clone, Copy, Debug)]
pub enum EvalMode {
    /// Enumerate inputs against the single concrete sketch. Only point
    /// distributions qualify.
    Exact,
    /// Sample `trials` concrete sketches from the named substream.
    Monte { trials: u64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub exact: bool,
    /// Worst per-input misprediction probability (estimate in Monte mode).
    pub per_x_max: Rat,
    /// Average misprediction probability over uniform inputs.
    pub uniform_avg: Rat,
    /// 95% binomial (Clopper-Pearson) upper confidence bound on the worst
    /// per-input estimate, Monte mode only.
    pub per_x_ci_upper: Option<f64>,
    /// 95% binomial interval on the uniform average, Monte mode only.
    pub uniform_ci: Option<(f64, f64)>,
    pub trials: u64,
}

/// Evaluate a scheme against a target function.
///
/// Monte mode enumerates all inputs per sampled sketch when the arity is at
/// most 16 (giving a real per-input maximum); for wider targets each trial
/// draws one uniform input and only the average is meaningful.
pub fn eval_sketch_error(
    scheme: &SketchScheme,
    target: &dyn BoolTarget,
    mode: EvalMode,
) -> Result<ErrorReport> {
    let n = target.arity();
    if scheme.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "scheme arity {} differs from target arity {n}",
            scheme.n()
        )));
    }
    match mode {
        EvalMode::Exact => {
            if !scheme.is_point() {
                return Err(Error::ExactModeUnavailable);
            }
            if n > 26 {
                return Err(Error::ArityCap(format!("exact evaluation enumerates 2^{n} inputs")));
            }
            let concrete = scheme.sample(0);
            let wrong = (0..1u64 << n).filter(|&x| concrete.predict(x) != target.value_of(x)).count();
            let uniform_avg = Rat::new(wrong as i128, 1i128 << n);
            let per_x_max = if wrong == 0 { Rat::zero() } else { Rat::one() };
            Ok(ErrorReport {
                exact: true,
                per_x_max,
                uniform_avg,
                per_x_ci_upper: None,
                uniform_ci: None,
                trials: 1,
            })
        }
        EvalMode::Monte { trials, seed } => {
            if trials == 0 {
                return Err(Error::DeltaRange("trials must be positive".into()));
            }
            if n <= 16 {
                let size = 1usize << n;
                let wrongs: Vec<u64> = (0..trials)
                    .into_par_iter()
                    .fold(
                        || vec![0u64; size],
                        |mut acc, t| {
                            let concrete = scheme.sample(t);
                            for (x, slot) in acc.iter_mut().enumerate() {
                                if concrete.predict(x as u64) != target.value_of(x as u64) {
                                    *slot += 1;
                                }
                            }
                            acc
                        },
                    )
                    .reduce(
                        || vec![0u64; size],
                        |mut a, b| {
                            for (x, v) in b.iter().enumerate() {
                                a[x] += v;
                            }
                            a
                        },
                    );
                let worst = *wrongs.iter().max().expect("nonempty");
                let total: u64 = wrongs.iter().sum();
                Ok(ErrorReport {
                    exact: false,
                    per_x_max: Rat::new(worst as i128, trials as i128),
                    uniform_avg: Rat::new(total as i128, (trials as i128) * (size as i128)),
                    per_x_ci_upper: Some(clopper_pearson_upper(worst, trials, 0.05)),
                    uniform_ci: Some(normal_interval(total, trials * size as u64)),
                    trials,
                })
            } else {
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                let wrong: u64 = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let concrete = scheme.sample(t);
                        let x = {
                            let mut rng = substream(seed, "sketch/eval-input", t);
                            rng.random::<u64>() & mask
                        };
                        u64::from(concrete.predict(x) != target.value_of(x))
                    })
                    .sum();
                let avg = Rat::new(wrong as i128, trials as i128);
                Ok(ErrorReport {
                    exact: false,
                    per_x_max: avg.clone(),
                    uniform_avg: avg,
                    per_x_ci_upper: Some(clopper_pearson_upper(wrong, trials, 0.05)),
                    uniform_ci: Some(normal_interval(wrong, trials)),
                    trials,
                })
            }
        }
    }
}

/// Per-input Monte Carlo estimate over scheme randomness.
pub fn monte_error_at(
    scheme: &SketchScheme,
    target: &dyn BoolTarget,
    x: u64,
    trials: u64,
) -> (u64, u64) {
    let truth = target.value_of(x);
    let wrong = (0..trials)
        .into_par_iter()
        .map(|t| u64::from(scheme.sample(t).predict(x) != truth))
        .sum();
    (wrong, trials)
}

/// One-sided Clopper-Pearson upper bound at confidence `1 - alpha/2`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, alpha: f64) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    let target = alpha / 2.0;
    let (mut lo, mut hi) = (successes as f64 / trials as f64, 1.0);
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if binom_cdf(successes, trials, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if k >= n { 1.0 } else { 0.0 };
    }
    let lp = p.ln();
    let lq = (1.0 - p).ln();
    let mut log_c = 0.0f64; // log C(n, 0)
    let mut acc = 0.0f64;
    for i in 0..=k {
        acc += (log_c + i as f64 * lp + (n - i) as f64 * lq).exp();
        log_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc.min(1.0)
}

fn normal_interval(successes: u64, trials: u64) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    let half = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Serialized scheme. Deterministic kinds embed the matrix and (when narrow
/// enough) the decoder table; seeded kinds embed their parameters and are
/// re-instantiated at load time. The `parity` kind additionally needs the
/// target function to rebuild its decoder.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SchemeFile {
    pub format: u32,
    pub kind: String,
    pub n: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<String>>,
    /// Hex-packed decoder bits (bit = 1 means value -1), emitted when k <= 20.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltf_weights: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltf_theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ltf_margin: Option<String>,
}

pub const SCHEME_FORMAT: u32 = 1;

fn pack_decoder(table: &[i8]) -> String {
    let mut bytes = vec![0u8; table.len().div_ceil(8)];
    for (i, &v) in table.iter().enumerate() {
        if v == -1 {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unpack_decoder(hex: &str, k: usize) -> Result<Vec<i8>> {
    let len = 1usize << k;
    let mut bytes = Vec::with_capacity(hex.len() / 2);
    let chars: Vec<char> = hex.chars().collect();
    for pair in chars.chunks(2) {
        let s: String = pair.iter().collect();
        bytes.push(u8::from_str_radix(&s, 16).map_err(|_| Error::Parse {
            line: 0,
            msg: format!("bad decoder hex '{s}'"),
        })?);
    }
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Parse { line: 0, msg: "decoder length mismatch".into() });
    }
    Ok((0..len).map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { -1 } else { 1 }).collect())
}

impl SketchScheme {
    pub fn to_file(&self) -> SchemeFile {
        let mut file = SchemeFile {
            format: SCHEME_FORMAT,
            kind: self.kind().to_string(),
            n: self.n(),
            k: self.k(),
            seed: None,
            delta: None,
            rule: None,
            matrix: None,
            decoder: None,
            ltf_weights: None,
            ltf_theta: None,
            ltf_margin: None,
        };
        match self {
            SketchScheme::Deterministic(c) | SketchScheme::SignTrick { concrete: c, .. } => {
                file.matrix = Some(c.matrix.rows().map(|r| r.to_string()).collect());
                if let Decoder::Table(t) = &c.decoder {
                    if c.k() <= 20 {
                        file.decoder = Some(pack_decoder(t));
                    }
                }
            }
            SketchScheme::RandomParity { delta, seed, rule, .. } => {
                file.seed = Some(*seed);
                file.delta = Some(rat_string(delta));
                file.rule = Some(
                    match rule {
                        DecoderRule::Isolation => "isolation",
                        DecoderRule::MajorityVote => "majority",
                    }
                    .to_string(),
                );
            }
            SketchScheme::Ltf(l) => {
                file.seed = Some(l.seed);
                file.delta = Some(rat_string(&l.delta));
                file.ltf_weights = Some(l.spec.weights.iter().map(rat_string).collect());
                file.ltf_theta = Some(rat_string(&l.spec.theta));
                file.ltf_margin = Some(rat_string(&l.spec.margin));
            }
        }
        file
    }

    /// Rebuild a scheme from its file form. `parity` requires the target
    /// function; `det`/`sign` fall back to rebuilding the decoder from the
    /// function when the table was too wide to embed.
    pub fn from_file(file: &SchemeFile, f: Option<&BoolFun>) -> Result<SketchScheme> {
        if file.format != SCHEME_FORMAT {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unsupported scheme format {}", file.format),
            });
        }
        let parse_delta = |d: &Option<String>| -> Result<Rat> {
            d.as_deref()
                .and_then(parse_rat)
                .ok_or(Error::Parse { line: 0, msg: "missing or bad delta".into() })
        };
        match file.kind.as_str() {
            "det" | "sign" => {
                let rows = file
                    .matrix
                    .as_ref()
                    .ok_or(Error::Parse { line: 0, msg: "missing matrix".into() })?;
                let mut m = Gf2Matrix::new(file.n.max(1))?;
                for r in rows {
                    m.push_row(r.parse()?)?;
                }
                let table = match (&file.decoder, f) {
                    (Some(hex), _) => unpack_decoder(hex, file.k)?,
                    (None, Some(f)) => {
                        let probe = ConcreteSketch::new(m.clone(), Decoder::Table(Vec::new()));
                        rebuild_table_decoder(f, &probe)?
                    }
                    (None, None) => {
                        return Err(Error::Parse {
                            line: 0,
                            msg: "scheme file has no decoder; supply the function".into(),
                        })
                    }
                };
                Ok(SketchScheme::Deterministic(ConcreteSketch::new(m, Decoder::Table(table))))
            }
            "parity" => {
                let f = f.ok_or(Error::Parse {
                    line: 0,
                    msg: "parity schemes need the target function to rebuild".into(),
                })?;
                let delta = parse_delta(&file.delta)?;
                let rule = match file.rule.as_deref() {
                    Some("majority") => DecoderRule::MajorityVote,
                    _ => DecoderRule::Isolation,
                };
                random_parity_sketch(f, &delta, file.seed.unwrap_or(0), rule)
            }
            "ltf" => {
                let weights = file
                    .ltf_weights
                    .as_ref()
                    .ok_or(Error::Parse { line: 0, msg: "missing ltf weights".into() })?
                    .iter()
                    .map(|w| parse_rat(w).ok_or(Error::Parse { line: 0, msg: format!("bad weight '{w}'") }))
                    .collect::<Result<Vec<_>>>()?;
                let theta = file
                    .ltf_theta
                    .as_deref()
                    .and_then(parse_rat)
                    .ok_or(Error::Parse { line: 0, msg: "missing ltf theta".into() })?;
                let margin = file.ltf_margin.as_deref().and_then(parse_rat);
                let spec = LtfSpec::new(weights, theta, margin)?;
                let delta = parse_delta(&file.delta)?;
                ltf_sketch(&spec, &delta, file.seed.unwrap_or(0))
            }
            other => Err(Error::Parse { line: 0, msg: format!("unknown scheme kind '{other}'") }),
        }
    }
}

fn rebuild_table_decoder(f: &BoolFun, probe: &ConcreteSketch) -> Result<Vec<i8>> {
    let k = probe.k();
    let n = f.n();
    let mut table = vec![0i8; 1 << k];
    let mut seen = vec![false; 1 << k];
    for x in 0..1u64 << n {
        let s = probe.apply(x) as usize;
        if !seen[s] {
            seen[s] = true;
            table[s] = f.value(x);
        }
    }
    for slot in table.iter_mut() {
        if *slot == 0 {
            *slot = 1;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::builtin;
    use crate::fourierdim::dim_profile;
    use crate::rat::rat;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn deterministic_sketch_examples() {
        let parity = builtin("parity:6").unwrap();
        let scheme = deterministic_sketch(&parity, &caps()).unwrap();
        assert_eq!(scheme.k(), 1);
        let rep = eval_sketch_error(&scheme, &parity, EvalMode::Exact).unwrap();
        assert_eq!(rep.uniform_avg, rat(0, 1));
        assert_eq!(rep.per_x_max, rat(0, 1));

        let maj3 = builtin("maj:3").unwrap();
        let scheme = deterministic_sketch(&maj3, &caps()).unwrap();
        assert_eq!(scheme.k(), 3);
        let concrete = scheme.sample(0);
        for x in 0..8u64 {
            assert_eq!(concrete.predict(x), maj3.value(x));
        }

        let addr = builtin("addr:4").unwrap();
        let scheme = deterministic_sketch(&addr, &caps()).unwrap();
        assert_eq!(scheme.k(), 6);
        assert_eq!(
            eval_sketch_error(&scheme, &addr, EvalMode::Exact).unwrap().uniform_avg,
            rat(0, 1)
        );
    }

    #[test]
    fn sign_trick_on_spectrum_superset_is_exact() {
        let f = builtin("maj:3").unwrap();
        let full = Subspace::span(&["100".parse().unwrap(), "010".parse().unwrap(), "001".parse().unwrap()]).unwrap();
        let (_, err) = sign_trick_sketch(&f, &full, &caps()).unwrap();
        assert_eq!(err, rat(0, 1));
    }

    #[test]
    fn sign_trick_on_half_weight_subspace() {
        let f = builtin("maj:3").unwrap();
        let a = Subspace::span(&["100".parse().unwrap(), "010".parse().unwrap()]).unwrap();
        let (scheme, err) = sign_trick_sketch(&f, &a, &caps()).unwrap();
        assert_eq!(err, rat(1, 4));
        if let SketchScheme::SignTrick { subspace_weight, .. } = &scheme {
            assert_eq!(*subspace_weight, rat(1, 2));
        } else {
            panic!("wrong kind");
        }
        // Exact evaluation agrees with the reported error.
        let rep = eval_sketch_error(&scheme, &f, EvalMode::Exact).unwrap();
        assert_eq!(rep.uniform_avg, rat(1, 4));
    }

    #[test]
    fn sign_trick_meets_part_one_bound_on_witnesses() {
        for name in ["maj3k:2", "addr:4", "random:6:0.5:11", "hamge:7:3"] {
            let f = builtin(name).unwrap();
            let profile = dim_profile(&f, &caps()).unwrap();
            for d in 0..=f.n() {
                let witness = &profile.witnesses[d];
                let (_, err) = sign_trick_sketch(&f, witness, &caps()).unwrap();
                let bound = (Rat::one() - profile.w[d].clone()) / Rat::from_integer(2);
                assert!(err <= bound, "{name} d={d}: {err} > {bound}");
            }
        }
    }

    #[test]
    fn random_parity_width_formula() {
        let f = builtin("hamge:8:7").unwrap();
        // Minority side has C(8,7) + C(8,8) = 9 inputs.
        let scheme = random_parity_sketch(&f, &rat(1, 8), 7, DecoderRule::Isolation).unwrap();
        assert_eq!(scheme.k(), 8); // ceil(log2(9 * 2 / (1/8))) = ceil(log2 144)
    }

    #[test]
    fn random_parity_constant_function() {
        let f = BoolFun::from_table(4, vec![1; 16]).unwrap();
        let scheme = random_parity_sketch(&f, &rat(1, 8), 0, DecoderRule::Isolation).unwrap();
        assert_eq!(scheme.k(), 0);
        let rep = eval_sketch_error(&scheme, &f, EvalMode::Exact).unwrap();
        assert_eq!(rep.uniform_avg, rat(0, 1));
    }

    #[test]
    fn random_parity_minority_side_never_errs_with_isolation() {
        let f = builtin("hamge:8:7").unwrap();
        let scheme = random_parity_sketch(&f, &rat(1, 8), 3, DecoderRule::Isolation).unwrap();
        for trial in 0..50 {
            let concrete = scheme.sample(trial);
            for x in 0..256u64 {
                if f.value(x) == -1 {
                    assert_eq!(concrete.predict(x), -1);
                }
            }
        }
    }

    #[test]
    fn random_parity_per_input_error_within_delta() {
        let f = builtin("hamge:8:7").unwrap();
        let delta = rat(1, 8);
        let scheme = random_parity_sketch(&f, &delta, 11, DecoderRule::Isolation).unwrap();
        let rep = eval_sketch_error(&scheme, &f, EvalMode::Monte { trials: 2000, seed: 5 }).unwrap();
        let ci = rep.per_x_ci_upper.unwrap();
        assert!(
            ci <= 1.2 * rat_to_f64(&delta),
            "per-input CP bound {ci} above 1.2 delta"
        );
        assert!(rep.uniform_avg <= delta);
    }

    #[test]
    fn majority_vote_decoder_beats_isolation_on_average() {
        let f = builtin("hamge:8:7").unwrap();
        let delta = rat(1, 8);
        let iso = random_parity_sketch(&f, &delta, 2, DecoderRule::Isolation).unwrap();
        let ml = random_parity_sketch(&f, &delta, 2, DecoderRule::MajorityVote).unwrap();
        let mode = EvalMode::Monte { trials: 500, seed: 9 };
        let e_iso = eval_sketch_error(&iso, &f, mode).unwrap().uniform_avg;
        let e_ml = eval_sketch_error(&ml, &f, mode).unwrap().uniform_avg;
        assert!(e_ml <= e_iso, "majority vote {e_ml} worse than isolation {e_iso}");
    }

    #[test]
    fn ltf_margin_scan_and_preprocess() {
        let weights = vec![rat(1, 2), rat(3, 10), rat(3, 20), rat(1, 20)];
        let spec = LtfSpec::new(weights, rat(2, 5), None).unwrap();
        assert_eq!(*spec.margin(), rat(1, 20));
        let pruned = ltf_preprocess(&spec).unwrap();
        // 2m = 1/10 drops only the trailing 1/20.
        assert_eq!(pruned.n(), 3);
        // New margin: half the smallest kept weight, in renormalized scale.
        assert_eq!(*pruned.margin(), pruned.weights().last().unwrap().clone() / rat(2, 1));
        // Value preserved on every input (checked again here explicitly).
        for x in 0..16u64 {
            assert_eq!(spec.value_of(x), pruned.value_of(x & 0b111));
        }
    }

    #[test]
    fn ltf_preprocess_keeps_uniform_weights() {
        // theta adjusted off the lattice: margin scan finds 1/(2n).
        let n = 6;
        let spec = LtfSpec::new(
            vec![rat(1, n as i128); n],
            rat(2, n as i128) - rat(1, 2 * n as i128),
            None,
        )
        .unwrap();
        assert_eq!(*spec.margin(), rat(1, 2 * n as i128));
        let pruned = ltf_preprocess(&spec).unwrap();
        assert_eq!(pruned.n(), n);
    }

    #[test]
    fn ltf_rejects_bad_inputs() {
        assert!(LtfSpec::new(vec![rat(1, 4), rat(1, 2)], rat(1, 2), None).is_err());
        assert!(LtfSpec::new(vec![rat(1, 2), rat(-1, 4)], rat(1, 2), None).is_err());
        // Threshold on an achievable sum makes the margin zero.
        assert!(LtfSpec::new(vec![rat(1, 2), rat(1, 2)], rat(1, 2), None).is_err());
        assert!(ltf_sketch(&LtfSpec::hamming_ge(8, 2).unwrap(), &rat(3, 4), 0).is_err());
    }

    #[test]
    fn hamming_ltf_matches_builtin() {
        let spec = LtfSpec::hamming_ge(8, 3).unwrap();
        let f = builtin("hamge:8:3").unwrap();
        for x in 0..256u64 {
            assert_eq!(spec.value_of(x), f.value(x));
        }
        assert_eq!(spec.to_truth_table().unwrap(), f);
    }

    #[test]
    fn ltf_sketch_small_case_error() {
        let spec = LtfSpec::hamming_ge(8, 2).unwrap();
        let f = builtin("hamge:8:2").unwrap();
        let delta = rat(1, 8);
        let scheme = ltf_sketch(&spec, &delta, 21).unwrap();
        assert!(scheme.k() < 20);
        let rep = eval_sketch_error(&scheme, &f, EvalMode::Monte { trials: 1500, seed: 4 }).unwrap();
        assert!(
            rep.per_x_max <= delta,
            "worst per-input estimate {} above delta",
            rat_string(&rep.per_x_max)
        );
    }

    #[test]
    fn ltf_sketch_hamming_64_width() {
        let spec = LtfSpec::hamming_ge(64, 4).unwrap();
        // theta/m = 8: no weight test, no hashing (buckets >> 64).
        let scheme = ltf_sketch(&spec, &rat(1, 10), 1).unwrap();
        assert!(scheme.k() <= 64, "width {}", scheme.k());
        if let SketchScheme::Ltf(l) = &scheme {
            assert_eq!(l.plan.stage1_rows, 0);
            assert!(l.plan.buckets.is_none());
            assert_eq!(l.plan.candidates.len(), 43745); // C(64,0)+..+C(64,3)
        } else {
            panic!("wrong kind");
        }
        // A zero input decodes to the function value at zero.
        let concrete = scheme.sample(0);
        assert_eq!(concrete.predict(0), spec.value_of(0));
    }

    #[test]
    fn ltf_staged_path_activates_above_ratio_100() {
        // Nine heavy weights and one light one: after preprocessing the
        // margin is 1/2000 and theta/m = 1000, so the weight test runs.
        let mut weights = vec![rat(111, 1000); 9];
        weights.push(rat(1, 1000));
        let spec = LtfSpec::new(weights, rat(1, 2), Some(rat(1, 2000))).unwrap();
        let scheme = ltf_sketch(&spec, &rat(1, 10), 13).unwrap();
        let SketchScheme::Ltf(l) = &scheme else { panic!("wrong kind") };
        assert_eq!(l.plan.stage1_rows, STAGE1_ROWS);
        assert!(l.plan.buckets.is_none());
        assert_eq!(l.plan.candidates.len(), 512); // up to 4 heavy bits, any light bit
        assert!(scheme.k() <= 63);
        assert!(l.plan.k3 <= l.plan.k3_from_support_bound);
        // Per-input spot checks across both sides of the threshold.
        for x in [0u64, 0b1, 0b11111, 0b1111111111] {
            let (wrong, trials) = monte_error_at(&scheme, &spec, x, 400);
            assert!(
                (wrong as f64) / (trials as f64) <= 0.1,
                "x={x:#b}: {wrong}/{trials}"
            );
        }
    }

    #[test]
    fn scheme_files_round_trip() {
        let f = builtin("maj:3").unwrap();
        let det = deterministic_sketch(&f, &caps()).unwrap();
        let file = det.to_file();
        let json = serde_json::to_string(&file).unwrap();
        let back: SchemeFile = serde_json::from_str(&json).unwrap();
        let rebuilt = SketchScheme::from_file(&back, None).unwrap();
        let rep = eval_sketch_error(&rebuilt, &f, EvalMode::Exact).unwrap();
        assert_eq!(rep.uniform_avg, rat(0, 1));

        let parity = random_parity_sketch(&f, &rat(1, 4), 77, DecoderRule::Isolation).unwrap();
        let rebuilt = SketchScheme::from_file(&parity.to_file(), Some(&f)).unwrap();
        assert_eq!(rebuilt.k(), parity.k());
        // Same seed, same samples.
        assert_eq!(
            rebuilt.sample(3).matrix().raw_rows(),
            parity.sample(3).matrix().raw_rows()
        );

        let spec = LtfSpec::hamming_ge(16, 2).unwrap();
        let ltf = ltf_sketch(&spec, &rat(1, 10), 5).unwrap();
        let rebuilt = SketchScheme::from_file(&ltf.to_file(), None).unwrap();
        assert_eq!(rebuilt.k(), ltf.k());
    }

    #[test]
    fn optimal_sketch_error_sandwich_small_arity() {
        // The exhaustively optimal d-dimensional sketch error sits between
        // the projection lower bound and the threshold-trick upper bound.
        use crate::gf2::enumerate_subspaces;
        for name in ["maj:3", "random:4:0.5:5", "ip:4"] {
            let f = builtin(name).unwrap();
            let n = f.n();
            let profile = dim_profile(&f, &caps()).unwrap();
            for d in 0..=n {
                let mut best = Rat::one();
                for sub in enumerate_subspaces(n, d, &caps()).unwrap() {
                    let matrix = if sub.dim() == 0 {
                        Gf2Matrix::new(n).unwrap()
                    } else {
                        sub.basis().clone()
                    };
                    let probe = ConcreteSketch::new(matrix, Decoder::Table(Vec::new()));
                    let mut neg = vec![0u64; 1 << sub.dim()];
                    let mut pos = vec![0u64; 1 << sub.dim()];
                    for x in 0..1u64 << n {
                        let s = probe.apply(x) as usize;
                        if f.value(x) == -1 {
                            neg[s] += 1;
                        } else {
                            pos[s] += 1;
                        }
                    }
                    let wrong: u64 = neg.iter().zip(pos.iter()).map(|(&a, &b)| a.min(b)).sum();
                    let err = Rat::new(wrong as i128, 1i128 << n);
                    if err < best {
                        best = err;
                    }
                }
                let upper = (Rat::one() - profile.w[d].clone()) / Rat::from_integer(2);
                let lower = (1.0 - rat_to_f64(&profile.w[d]).sqrt()) / 2.0;
                assert!(best <= upper, "{name} d={d}");
                assert!(rat_to_f64(&best) >= lower - 1e-12, "{name} d={d}");
            }
        }
    }

    #[test]
    fn clopper_pearson_monotone_and_bounded() {
        let u = clopper_pearson_upper(0, 100, 0.05);
        assert!(u > 0.0 && u < 0.06);
        assert!(clopper_pearson_upper(50, 100, 0.05) > 0.5);
        assert_eq!(clopper_pearson_upper(10, 10, 0.05), 1.0);
        assert!(clopper_pearson_upper(5, 100, 0.05) < clopper_pearson_upper(10, 100, 0.05));
    }
}
