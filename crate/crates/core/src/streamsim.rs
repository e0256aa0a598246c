//! Turnstile streams over GF(2): random stream generators, sketch-backed
//! stream algorithms, explicit stream automata with path-independence and
//! kernel analysis, and the space lower-bound report.

use crate::boolfn::BoolFun;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::fourierdim::dim_profile;
use crate::gf2::{BitVec, Subspace};
use crate::rat::{rat_string, Rat};
use crate::rng::substream;
use crate::sketch::{ConcreteSketch, SketchScheme};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// A sequence of coordinate flips; the frequency vector is the XOR of the
/// flipped unit vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    n: usize,
    updates: Vec<u32>,
}

impl Stream {
    pub fn new(n: usize, updates: Vec<u32>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::DimensionOutOfRange(format!("stream arity must be in 1..=64, got {n}")));
        }
        for &u in &updates {
            if u == 0 || u as usize > n {
                return Err(Error::IndexOutOfRange { index: u as usize, n });
            }
        }
        Ok(Stream { n, updates })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn updates(&self) -> &[u32] {
        &self.updates
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn freq(&self) -> BitVec {
        let mut bits = 0u64;
        for &u in &self.updates {
            bits ^= 1u64 << (u - 1);
        }
        BitVec::new(self.n, bits).expect("indices validated")
    }

    pub fn slice_freq(&self, range: std::ops::Range<usize>) -> BitVec {
        let mut bits = 0u64;
        for &u in &self.updates[range] {
            bits ^= 1u64 << (u - 1);
        }
        BitVec::new(self.n, bits).expect("indices validated")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for &u in &self.updates {
            s.push_str(&u.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty stream file".into() })?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected 'n=<int>', got '{header}'") })?;
        let mut updates = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let u: u32 = line
                .parse()
                .map_err(|_| Error::Parse { line: idx + 1, msg: format!("bad index '{line}'") })?;
            updates.push(u);
        }
        Stream::new(n, updates)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamModel {
    /// Two halves, each including every coordinate independently with
    /// probability 1/2, in random order; both half-frequencies are uniform.
    SplitUniform,
    /// Independent uniform coordinate flips; mixes after about `n log n`
    /// updates.
    UniformUpdates,
}

impl StreamModel {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(StreamModel::SplitUniform),
            2 => Ok(StreamModel::UniformUpdates),
            other => Err(Error::Parse { line: 0, msg: format!("unknown stream model {other}") }),
        }
    }
}

/// Generate a random stream and its split point for the two-party reduction.
/// `len` applies to the uniform-update model only and defaults to
/// `ceil(4 n ln n)`, above the coupon-collector threshold.
pub fn gen_stream(model: StreamModel, n: usize, seed: u64, len: Option<usize>) -> Result<(Stream, usize)> {
    if n == 0 || n > 64 {
        return Err(Error::DimensionOutOfRange(format!("stream arity must be in 1..=64, got {n}")));
    }
    let mut rng = substream(seed, "stream/gen", 0);
    match model {
        StreamModel::SplitUniform => {
            let mut updates = Vec::new();
            let mut split = 0;
            for half in 0..2 {
                let mut part: Vec<u32> =
                    (1..=n as u32).filter(|_| rng.random_bool(0.5)).collect();
                part.shuffle(&mut rng);
                if half == 0 {
                    split = part.len();
                }
                updates.extend(part);
            }
            Ok((Stream::new(n, updates)?, split))
        }
        StreamModel::UniformUpdates => {
            let len = len.unwrap_or_else(|| (4.0 * n as f64 * (n as f64).ln()).ceil() as usize);
            let updates = (0..len).map(|_| rng.random_range(1..=n as u32)).collect();
            Ok((Stream::new(n, updates)?, len / 2))
        }
    }
}

/// Mixing self-check for generated streams: do both halves touch every
/// coordinate at least once?
pub fn half_coverage(stream: &Stream, split: usize) -> (bool, bool) {
    let cover = |updates: &[u32]| -> bool {
        let mut seen = 0u64;
        for &u in updates {
            seen |= 1 << (u - 1);
        }
        seen.count_ones() as usize == stream.n()
    };
    (cover(&stream.updates()[..split]), cover(&stream.updates()[split..]))
}

/// An explicit finite stream automaton: a total transition table over an
/// enumerated state set and a per-state output sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    initial: usize,
    /// `delta[state][coordinate]`, coordinates 0-based.
    delta: Vec<Vec<usize>>,
    output: Vec<i8>,
}

impl Automaton {
    pub fn new(initial: usize, delta: Vec<Vec<usize>>, output: Vec<i8>) -> Result<Self> {
        let states = delta.len();
        if states == 0 || initial >= states || output.len() != states {
            return Err(Error::DimensionMismatch("automaton tables are inconsistent".into()));
        }
        let n = delta[0].len();
        if n == 0 {
            return Err(Error::DimensionMismatch("automaton needs at least one coordinate".into()));
        }
        for row in &delta {
            if row.len() != n {
                return Err(Error::DimensionMismatch("ragged transition table".into()));
            }
            if row.iter().any(|&s| s >= states) {
                return Err(Error::DimensionMismatch("transition to unknown state".into()));
            }
        }
        Ok(Automaton { initial, delta, output })
    }

    /// States are the sketch values of a matrix; updates XOR in the matching
    /// column. The decoder provides outputs.
    pub fn from_sketch(concrete: &ConcreteSketch) -> Result<Self> {
        let k = concrete.k();
        if k > 24 {
            return Err(Error::WidthCap(format!("automaton expansion capped at 24 bits, got {k}")));
        }
        let cols = concrete.columns();
        let states = 1usize << k;
        let delta = (0..states)
            .map(|s| cols.iter().map(|&c| s ^ c as usize).collect())
            .collect();
        let output = (0..states).map(|s| concrete.decode(s as u64)).collect();
        Automaton::new(0, delta, output)
    }

    pub fn n(&self) -> usize {
        self.delta[0].len()
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn output(&self, state: usize) -> i8 {
        self.output[state]
    }

    pub fn step(&self, state: usize, coord0: usize) -> usize {
        self.delta[state][coord0]
    }

    pub fn walk(&self, start: usize, updates: &[u32]) -> usize {
        updates.iter().fold(start, |s, &u| self.delta[s][(u - 1) as usize])
    }

    /// States reachable from the initial one, in BFS order, with a shortest
    /// update path to each.
    pub fn reachable(&self) -> Vec<(usize, Vec<u32>)> {
        let mut seen = vec![false; self.states()];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        seen[self.initial] = true;
        queue.push_back((self.initial, Vec::new()));
        while let Some((s, path)) = queue.pop_front() {
            order.push((s, path.clone()));
            for i in 0..self.n() {
                let t = self.delta[s][i];
                if !seen[t] {
                    seen[t] = true;
                    let mut p = path.clone();
                    p.push(i as u32 + 1);
                    queue.push_back((t, p));
                }
            }
        }
        order
    }

    pub fn to_file(&self) -> AutomatonFile {
        AutomatonFile {
            format: AUTOMATON_FORMAT,
            states: self.states(),
            n: self.n(),
            initial: self.initial,
            delta: self.delta.clone(),
            output: self.output.iter().map(|&v| i32::from(v)).collect(),
        }
    }

    pub fn from_file(file: &AutomatonFile) -> Result<Self> {
        if file.format != AUTOMATON_FORMAT {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unsupported automaton format {}", file.format),
            });
        }
        if file.states != file.delta.len() {
            return Err(Error::Parse { line: 0, msg: "state count mismatch".into() });
        }
        let output = file
            .output
            .iter()
            .map(|&v| match v {
                1 => Ok(1i8),
                -1 => Ok(-1i8),
                other => Err(Error::Parse { line: 0, msg: format!("bad output value {other}") }),
            })
            .collect::<Result<_>>()?;
        Automaton::new(file.initial, file.delta.clone(), output)
    }
}

pub const AUTOMATON_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct AutomatonFile {
    pub format: u32,
    pub states: usize,
    pub n: usize,
    pub initial: usize,
    pub delta: Vec<Vec<usize>>,
    pub output: Vec<i32>,
}

/// What to run over a stream.
pub enum StreamAlgo<'a> {
    /// A sketch scheme, instantiated at the given sample index.
    Scheme { scheme: &'a SketchScheme, sample: u64 },
    Automaton(&'a Automaton),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output: i8,
    pub final_state: String,
    pub space_bits: f64,
}

/// Run an algorithm over a stream. Sketch algorithms keep `k` bits updated
/// by the XOR of the touched matrix column; automata follow their table.
pub fn run(algo: &StreamAlgo<'_>, stream: &Stream) -> Result<RunOutcome> {
    match algo {
        StreamAlgo::Scheme { scheme, sample } => {
            if scheme.n() != stream.n() {
                return Err(Error::DimensionMismatch(format!(
                    "scheme arity {} differs from stream arity {}",
                    scheme.n(),
                    stream.n()
                )));
            }
            let concrete = scheme.sample(*sample);
            let cols = concrete.columns();
            let mut state = 0u64;
            for &u in stream.updates() {
                state ^= cols[(u - 1) as usize];
            }
            Ok(RunOutcome {
                output: concrete.decode(state),
                final_state: format!("{state:#x}"),
                space_bits: concrete.k() as f64,
            })
        }
        StreamAlgo::Automaton(a) => {
            if a.n() != stream.n() {
                return Err(Error::DimensionMismatch(format!(
                    "automaton arity {} differs from stream arity {}",
                    a.n(),
                    stream.n()
                )));
            }
            let state = a.walk(a.initial(), stream.updates());
            let reachable = a.reachable().len();
            Ok(RunOutcome {
                output: a.output(state),
                final_state: state.to_string(),
                space_bits: (reachable as f64).log2(),
            })
        }
    }
}

/// Exhaustive path-independence check over the reachable states: every
/// update must be an involution and every pair of updates must commute.
/// Those two local laws let any stream be reordered and cancelled down to
/// its frequency vector, and a violation yields two equal-frequency streams
/// reaching distinct states.
pub fn path_independence_witness(a: &Automaton) -> Option<(Vec<u32>, Vec<u32>)> {
    let n = a.n();
    for (state, path) in a.reachable() {
        for i in 0..n {
            if a.delta[a.delta[state][i]][i] != state {
                let mut lhs = path.clone();
                lhs.push(i as u32 + 1);
                lhs.push(i as u32 + 1);
                return Some((lhs, path));
            }
            for j in i + 1..n {
                let ij = a.delta[a.delta[state][i]][j];
                let ji = a.delta[a.delta[state][j]][i];
                if ij != ji {
                    let mut lhs = path.clone();
                    lhs.push(i as u32 + 1);
                    lhs.push(j as u32 + 1);
                    let mut rhs = path;
                    rhs.push(j as u32 + 1);
                    rhs.push(i as u32 + 1);
                    return Some((lhs, rhs));
                }
            }
        }
    }
    None
}

/// Spot check with random permutations: a path-independent automaton lands
/// in the same state under any reordering of a stream.
pub fn permutation_path_check(a: &Automaton, stream: &Stream, trials: u32, seed: u64) -> bool {
    let reference = a.walk(a.initial(), stream.updates());
    let mut updates = stream.updates().to_vec();
    for t in 0..trials {
        let mut rng = substream(seed, "stream/perm-check", u64::from(t));
        updates.shuffle(&mut rng);
        if a.walk(a.initial(), &updates) != reference {
            return false;
        }
    }
    true
}

/// The kernel of a path-independent automaton: all frequency vectors whose
/// streams return the initial state. Verified closed under addition and
/// returned as a subspace.
pub fn kernel(a: &Automaton) -> Result<Subspace> {
    let n = a.n();
    if n > 20 {
        return Err(Error::EnumerationCap(format!(
            "kernel extraction enumerates 2^{n} frequency vectors; capped at 20"
        )));
    }
    if let Some((lhs, rhs)) = path_independence_witness(a) {
        return Err(Error::PathDependent { lhs, rhs });
    }
    let states = state_by_frequency(a);
    let members: Vec<u64> =
        (0..1u64 << n).filter(|&x| states[x as usize] == a.initial()).collect();
    // Closure under addition follows from path independence; check it
    // explicitly anyway since the set is small.
    let member_set: std::collections::HashSet<u64> = members.iter().copied().collect();
    for &x in &members {
        for &y in &members {
            assert!(
                member_set.contains(&(x ^ y)),
                "kernel of a path-independent automaton must be closed under addition"
            );
        }
    }
    let vecs: Vec<BitVec> = members
        .iter()
        .filter(|&&m| m != 0)
        .map(|&m| BitVec::new(n, m).expect("in range"))
        .collect();
    let sub = if vecs.is_empty() { Subspace::trivial(n)? } else { Subspace::span(&vecs)? };
    debug_assert_eq!(1usize << sub.dim(), members.len());
    Ok(sub)
}

/// State reached from the initial configuration by each frequency vector,
/// assuming path independence.
fn state_by_frequency(a: &Automaton) -> Vec<usize> {
    let n = a.n();
    let mut states = vec![a.initial(); 1 << n];
    for x in 1u64..1 << n {
        let low = x.trailing_zeros() as usize;
        states[x as usize] = a.delta[states[(x & (x - 1)) as usize]][low];
    }
    states
}

#[derive(Debug, Clone)]
pub struct CosetCheckReport {
    pub ok: bool,
    pub path_independent: bool,
    pub witness: Option<(Vec<u32>, Vec<u32>)>,
    pub reachable_states: usize,
    pub kernel_dim: usize,
}

/// Verify that the state map factors exactly through the quotient by the
/// kernel: equal cosets reach equal states and the reachable state count is
/// `2^{n - dim(kernel)}`.
pub fn coset_check(a: &Automaton) -> Result<CosetCheckReport> {
    if let Some(witness) = path_independence_witness(a) {
        return Ok(CosetCheckReport {
            ok: false,
            path_independent: false,
            witness: Some(witness),
            reachable_states: a.reachable().len(),
            kernel_dim: 0,
        });
    }
    let sub = kernel(a)?;
    let n = a.n();
    let states = state_by_frequency(a);
    let mut distinct = std::collections::HashSet::new();
    let mut ok = true;
    for x in 0..1u64 << n {
        distinct.insert(states[x as usize]);
        let rep = sub.reduce(&BitVec::new(n, x)?);
        if states[x as usize] != states[rep.bits() as usize] {
            ok = false;
        }
    }
    let expected = 1usize << (n - sub.dim());
    Ok(CosetCheckReport {
        ok: ok && distinct.len() == expected,
        path_independent: true,
        witness: None,
        reachable_states: distinct.len(),
        kernel_dim: sub.dim(),
    })
}

#[derive(Debug, Clone)]
pub struct SpaceLbReport {
    pub n: usize,
    /// Sketch dimension needed for uniform error 1/3: the random-stream
    /// space bound in bits.
    pub random_stream_bits: usize,
    pub weight_at_bound: Rat,
    /// Statement of the adversarial bound with its order terms left
    /// symbolic.
    pub adversarial_form: String,
}

/// Space lower bounds for streaming evaluation of `f`, instantiated from the
/// weight profile.
pub fn space_lb_report(f: &BoolFun, caps: &Caps) -> Result<SpaceLbReport> {
    let profile = dim_profile(f, caps)?;
    let third = Rat::new(1, 3);
    let d = profile.dim_for_weight(&third);
    Ok(SpaceLbReport {
        n: f.n(),
        random_stream_bits: d,
        weight_at_bound: profile.w[d].clone(),
        adversarial_form: "space >= R^lin_{6 delta}(f) - O(log n + log(1/delta))".to_string(),
    })
}

impl SpaceLbReport {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "random_stream_bits": self.random_stream_bits,
            "weight_at_bound": rat_string(&self.weight_at_bound),
            "adversarial_form": self.adversarial_form,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::builtin;
    use crate::gf2::Gf2Matrix;
    use crate::rat::rat;
    use crate::sketch::{deterministic_sketch, random_parity_sketch, DecoderRule};

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn stream_freq_is_parity_of_counts() {
        let s = Stream::new(4, vec![1, 2, 1, 3, 3, 3]).unwrap();
        assert_eq!(s.freq(), "0110".parse().unwrap()); // 1 twice, 2 once, 3 thrice
        assert!(Stream::new(3, vec![4]).is_err());
        assert!(Stream::new(3, vec![0]).is_err());
    }

    #[test]
    fn stream_text_round_trip() {
        let s = Stream::new(5, vec![5, 1, 2]).unwrap();
        assert_eq!(Stream::from_text(&s.to_text()).unwrap(), s);
        assert!(Stream::from_text("bad").is_err());
    }

    #[test]
    fn model2_defaults_and_empty_stream() {
        let (s, split) = gen_stream(StreamModel::UniformUpdates, 8, 3, None).unwrap();
        let expected = (4.0 * 8.0 * (8.0f64).ln()).ceil() as usize;
        assert_eq!(s.len(), expected);
        assert_eq!(split, expected / 2);

        let (s, _) = gen_stream(StreamModel::UniformUpdates, 8, 3, Some(0)).unwrap();
        assert!(s.freq().is_zero());
    }

    #[test]
    fn model1_half_frequencies_pass_uniformity_test() {
        // Chi-squared oracle at the 1e-3 level: 2^8 cells, 10^4 samples,
        // threshold ~330.5 for 255 degrees of freedom.
        let n = 8;
        let cells = 1usize << n;
        let samples = 10_000usize;
        let mut counts = vec![vec![0u32; cells]; 3];
        for seed in 0..samples as u64 {
            let (s, split) = gen_stream(StreamModel::SplitUniform, n, seed, None).unwrap();
            let a = s.slice_freq(0..split).bits() as usize;
            let b = s.slice_freq(split..s.len()).bits() as usize;
            counts[0][a] += 1;
            counts[1][b] += 1;
            counts[2][a ^ b] += 1;
        }
        let expected = samples as f64 / cells as f64;
        for (i, c) in counts.iter().enumerate() {
            let stat: f64 = c.iter().map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            }).sum();
            assert!(stat < 330.5, "series {i}: chi-squared {stat}");
        }
    }

    #[test]
    fn sketch_run_is_linear_and_path_independent() {
        let f = builtin("maj:3").unwrap();
        let scheme = deterministic_sketch(&f, &caps()).unwrap();
        let algo = StreamAlgo::Scheme { scheme: &scheme, sample: 0 };
        // Output equals f at the frequency vector on any stream.
        for seed in 0..50 {
            let (s, _) = gen_stream(StreamModel::UniformUpdates, 3, seed, Some(17)).unwrap();
            let out = run(&algo, &s).unwrap();
            assert_eq!(out.output, f.eval(&s.freq()));
        }
        // Empty stream decodes the zero state.
        let empty = Stream::new(3, vec![]).unwrap();
        assert_eq!(run(&algo, &empty).unwrap().output, f.value(0));
        // Concatenation XORs states.
        let concrete = scheme.sample(0);
        let a = Stream::new(3, vec![1, 2]).unwrap();
        let b = Stream::new(3, vec![2, 3, 3]).unwrap();
        let state_of = |s: &Stream| {
            let cols = concrete.columns();
            s.updates().iter().fold(0u64, |acc, &u| acc ^ cols[(u - 1) as usize])
        };
        let mut joined = a.updates().to_vec();
        joined.extend_from_slice(b.updates());
        let j = Stream::new(3, joined).unwrap();
        assert_eq!(state_of(&j), state_of(&a) ^ state_of(&b));
    }

    #[test]
    fn automaton_from_sketch_passes_structure_checks() {
        let f = builtin("maj:3").unwrap();
        let scheme = deterministic_sketch(&f, &caps()).unwrap();
        let auto = Automaton::from_sketch(&scheme.sample(0)).unwrap();
        assert!(path_independence_witness(&auto).is_none());
        let report = coset_check(&auto).unwrap();
        assert!(report.ok);
        let (s, _) = gen_stream(StreamModel::UniformUpdates, 3, 9, Some(30)).unwrap();
        assert!(permutation_path_check(&auto, &s, 100, 4));
    }

    #[test]
    fn kernel_is_null_space_of_matrix() {
        use rand::Rng;
        let mut rng = crate::rng::substream(8, "stream/kernel-test", 0);
        for trial in 0..30u64 {
            let n = 8;
            let k = rng.random_range(1..=4usize);
            let rows: Vec<BitVec> = (0..k)
                .map(|_| BitVec::new(n, rng.random_range(0..1u64 << n)).unwrap())
                .collect();
            let m = Gf2Matrix::from_rows(&rows).unwrap();
            let probe = ConcreteSketch::new(m.clone(), crate::sketch::Decoder::Table(vec![1i8; 1 << k]));
            let auto = Automaton::from_sketch(&probe).unwrap();
            let kern = kernel(&auto).unwrap();
            // Rank-nullity against the elimination-based null space.
            assert_eq!(kern.dim(), n - m.rank(), "trial {trial}");
            let ns = Subspace::from_matrix(&m.null_space());
            assert_eq!(kern, ns);
        }
    }

    #[test]
    fn identity_matrix_kernel_is_trivial() {
        let m = Gf2Matrix::identity(4).unwrap();
        let probe = ConcreteSketch::new(m, crate::sketch::Decoder::Table(vec![1i8; 16]));
        let auto = Automaton::from_sketch(&probe).unwrap();
        assert_eq!(kernel(&auto).unwrap().dim(), 0);
    }

    #[test]
    fn single_state_automaton_kernel_is_everything() {
        let auto = Automaton::new(0, vec![vec![0, 0, 0]], vec![1]).unwrap();
        let kern = kernel(&auto).unwrap();
        assert_eq!(kern.dim(), 3);
        assert!(coset_check(&auto).unwrap().ok);
    }

    #[test]
    fn perturbed_transition_is_detected_with_witness() {
        let f = builtin("parity:3").unwrap();
        let scheme = deterministic_sketch(&f, &caps()).unwrap();
        let auto = Automaton::from_sketch(&scheme.sample(0)).unwrap();
        let mut delta = auto.delta.clone();
        delta[0][0] = 0; // flipping coordinate 1 from state 0 now loops
        let bad = Automaton::new(0, delta, auto.output.clone()).unwrap();
        let witness = path_independence_witness(&bad);
        assert!(witness.is_some());
        let (lhs, rhs) = witness.unwrap();
        // The two witness streams have equal frequency but distinct states.
        let fl = Stream::new(3, lhs.clone()).unwrap().freq();
        let fr = Stream::new(3, rhs.clone()).unwrap().freq();
        assert_eq!(fl, fr);
        assert_ne!(bad.walk(0, &lhs), bad.walk(0, &rhs));
        let report = coset_check(&bad).unwrap();
        assert!(!report.ok);
        assert!(!report.path_independent);
        assert!(kernel(&bad).is_err());
    }

    #[test]
    fn parity_kernel_closure_random_spot_checks() {
        let f = builtin("hamge:6:5").unwrap();
        let scheme = random_parity_sketch(&f, &rat(1, 4), 5, DecoderRule::Isolation).unwrap();
        for idx in 0..10 {
            let auto = Automaton::from_sketch(&scheme.sample(idx)).unwrap();
            let kern = kernel(&auto).unwrap();
            let members = kern.elements();
            for a in &members {
                for b in &members {
                    assert!(kern.contains(&a.xor(b)));
                }
            }
        }
    }

    #[test]
    fn space_report_examples() {
        let c = caps();
        let parity = builtin("parity:6").unwrap();
        assert_eq!(space_lb_report(&parity, &c).unwrap().random_stream_bits, 1);

        let f = builtin("maj3k:2").unwrap();
        let rep = space_lb_report(&f, &c).unwrap();
        assert!(rep.weight_at_bound >= rat(1, 3));
        let profile = dim_profile(&f, &c).unwrap();
        assert!(profile.w[rep.random_stream_bits - 1] < rat(1, 3));

        let addr = builtin("addr:4").unwrap();
        let rep = space_lb_report(&addr, &c).unwrap();
        // Weights grow at most d/4, so at least two bits are needed.
        assert!(rep.random_stream_bits >= 2);
    }

    #[test]
    fn automaton_file_round_trip() {
        let f = builtin("maj:3").unwrap();
        let scheme = deterministic_sketch(&f, &caps()).unwrap();
        let auto = Automaton::from_sketch(&scheme.sample(0)).unwrap();
        let file = auto.to_file();
        let json = serde_json::to_string(&file).unwrap();
        let parsed: AutomatonFile = serde_json::from_str(&json).unwrap();
        assert_eq!(Automaton::from_file(&parsed).unwrap(), auto);
    }
}
