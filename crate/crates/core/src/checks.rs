//! Named verification checks, runnable from the command line (`check <id>`)
//! and asserted by the acceptance test suite. Each check prints one clause
//! per verified statement.

use crate::boolfn::{self, builtin, BoolFun};
use crate::caps::Caps;
use crate::commsim::{
    best_one_bit_error, exact_error, planted_estimator_bound, planted_shift_for,
    trivial_majority_protocol, PairDistribution,
};
use crate::error::{Error, Result};
use crate::fourierdim::{affine_structure_check, dim_profile, exact_dim, max_subspace_weight};
use crate::gf2::{
    enumerate_subspaces, odd_set, set_dominates, standard_domination_decompose, super_slam, BitVec,
    Gf2Matrix, Subspace,
};
use crate::rat::{rat, rat_string, rat_to_f64, Rat};
use crate::rng::substream;
use crate::sketch::{
    clopper_pearson_upper, eval_sketch_error, ltf_sketch, random_parity_sketch, DecoderRule,
    EvalMode, LtfSpec,
};
use crate::streamsim::{coset_check, gen_stream, kernel, run, Automaton, StreamAlgo, StreamModel};
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Clause {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: String,
    pub clauses: Vec<Clause>,
}

impl CheckReport {
    fn new(id: &str) -> Self {
        CheckReport { id: id.to_string(), clauses: Vec::new() }
    }

    fn clause(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.clauses.push(Clause { name: name.into(), pass, detail: detail.into() });
    }

    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.clauses {
            out.push_str(&format!(
                "[{}] {}/{}: {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                self.id,
                c.name,
                c.detail
            ));
        }
        out.push_str(&format!(
            "{}: {}\n",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id
        ));
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "pass": self.pass(),
            "clauses": self.clauses.iter().map(|c| json!({
                "name": c.name,
                "pass": c.pass,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

pub const CHECK_IDS: &[&str] = &[
    "parseval",
    "recmaj-4d-over-n",
    "addr-weight-bound",
    "domination",
    "sketch-error-sandwich",
    "ltf-hamming-sketch",
    "onebit-lower-bound",
    "majority-tightness",
    "composition-rank-extractor",
    "streaming-model1",
];

/// Run a named check. `k` parameterizes `recmaj-4d-over-n` (composition
/// depth); other checks ignore it.
pub fn run_check(id: &str, k: usize, seed: u64, caps: &Caps) -> Result<CheckReport> {
    match id {
        "parseval" => check_parseval(seed),
        "recmaj-4d-over-n" => check_recursive_majority(k, caps),
        "addr-weight-bound" => check_address(caps),
        "domination" => check_domination(seed, caps),
        "sketch-error-sandwich" => check_sandwich(seed, caps),
        "ltf-hamming-sketch" => check_ltf_hamming(seed),
        "onebit-lower-bound" => check_onebit(caps),
        "majority-tightness" => check_majority_tightness(caps),
        "composition-rank-extractor" => check_composition_rank_extractor(seed, caps),
        "streaming-model1" => check_streaming(seed, caps),
        other => Err(Error::Parse { line: 0, msg: format!("unknown check id '{other}'") }),
    }
}

fn check_parseval(seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("parseval");
    let mut checked = 0usize;
    let mut all = true;
    for name in [
        "parity:4", "and:4", "or:4", "maj:5", "maj:7", "maj3k:2", "addr:4", "addr:8", "ip:8",
        "hamge:9:4", "hamge:12:6",
    ] {
        all &= builtin(name)?.wht().parseval_holds();
        checked += 1;
    }
    for n in 1..=12usize {
        let ok = (0..100u64).into_par_iter().all(|i| {
            let mut rng = substream(seed, "checks/parseval", (n as u64) << 32 | i);
            let table: Vec<i8> =
                (0..1u64 << n).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect();
            BoolFun::from_table(n, table).unwrap().wht().parseval_holds()
        });
        all &= ok;
        checked += 100;
    }
    report.clause(
        "sum-of-squares",
        all,
        format!("{checked} functions with exact coefficient norm 4^n"),
    );
    Ok(report)
}

fn check_recursive_majority(k: usize, caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("recmaj-4d-over-n");
    let f = builtin(&format!("maj3k:{k}"))?;
    let n = f.n();
    let profile = dim_profile(&f, caps)?;
    let mut worst: Option<(usize, Rat)> = None;
    let mut all = true;
    for d in 0..=n {
        let bound = rat(4 * d as i128, n as i128);
        if profile.w[d] > bound {
            all = false;
        }
        let slack = bound - profile.w[d].clone();
        if worst.as_ref().map_or(true, |(_, s)| slack < *s) {
            worst = Some((d, slack));
        }
    }
    let (wd, ws) = worst.expect("profile nonempty");
    report.clause(
        "weight-bound",
        all,
        format!("max_A weight <= 4d/{n} for all d; tightest at d={wd} with slack {}", rat_string(&ws)),
    );

    // Standard subspaces obey the sharper |S|/n bound; subset-sum transform
    // of the squared coefficients over all 2^n masks.
    let spec = f.wht();
    let mut sos: Vec<u128> = spec
        .coeffs()
        .iter()
        .map(|&c| (i128::from(c) * i128::from(c)) as u128)
        .collect();
    for bit in 0..n {
        for mask in 0..1usize << n {
            if mask >> bit & 1 == 1 {
                sos[mask] += sos[mask ^ (1 << bit)];
            }
        }
    }
    let four_n = 1u128 << (2 * n);
    let standard_ok = (0..1usize << n).all(|mask| {
        (n as u128) * sos[mask] <= (mask.count_ones() as u128) * four_n
    });
    report.clause(
        "standard-subspaces",
        standard_ok,
        format!("all {} standard spans carry weight <= |S|/{n}", 1usize << n),
    );
    Ok(report)
}

fn check_address(caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("addr-weight-bound");
    let f = builtin("addr:4")?;
    let profile = dim_profile(&f, caps)?;
    let mut all = true;
    let mut pattern = Vec::new();
    for d in 0..=f.n() {
        let bound = rat(d as i128, 4);
        if profile.w[d] > bound {
            all = false;
        }
        pattern.push(format!(
            "w_{d}={}{}",
            rat_string(&profile.w[d]),
            if profile.w[d] == bound { "(=)" } else { "" }
        ));
    }
    report.clause("weight-bound", all, format!("w_d <= d/4: {}", pattern.join(" ")));
    Ok(report)
}

fn check_domination(seed: u64, caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("domination");
    let mut rng = substream(seed, "checks/domination", 0);
    let mut failures = 0usize;
    let mut tested = 0usize;
    while tested < 500 {
        let n = rng.random_range(2..=10usize);
        let d = rng.random_range(1..=n.min(5));
        let rows: Vec<BitVec> = (0..d)
            .map(|_| BitVec::new(n, rng.random_range(1..1u64 << n)).unwrap())
            .collect();
        let l = Subspace::span(&rows)?;
        if l.dim() == 0 {
            continue;
        }
        tested += 1;
        let dec = standard_domination_decompose(&l, caps)?;
        let dims_ok = dec.s1.dim() <= l.dim().saturating_sub(1)
            && dec.s2.dim() <= l.dim()
            && dec.s3.dim() <= (2 * l.dim()).min(n);
        let odd = odd_set(&l, caps)?;
        let mut union: Vec<BitVec> = Vec::new();
        for s in [&dec.s1, &dec.s2, &dec.s3] {
            union.extend(odd_set(s, caps)?);
        }
        union.sort_unstable();
        union.dedup();
        let (dominates, _) = set_dominates(&union, &odd);
        let matching_ok = dec.matching.len() == odd.len()
            && dec.matching.iter().all(|(w, x)| w.support_subset_of(x))
            && {
                let mut used: Vec<u64> = dec.matching.iter().map(|(w, _)| w.bits()).collect();
                used.sort_unstable();
                used.dedup();
                used.len() == dec.matching.len()
            };
        if !(dims_ok && dominates && matching_ok) {
            failures += 1;
        }
    }
    report.clause(
        "verified-matchings",
        failures == 0,
        format!("{tested} random subspaces decomposed, {failures} failures"),
    );
    Ok(report)
}

/// The 50-function corpus at arity <= 4 used by the sandwich check.
fn small_corpus(seed: u64) -> Vec<(String, BoolFun)> {
    let mut corpus: Vec<(String, BoolFun)> = Vec::new();
    for name in [
        "maj:3", "parity:1", "parity:2", "parity:3", "parity:4", "and:2", "and:3", "and:4",
        "or:2", "or:3", "or:4", "ip:2", "ip:4", "hamge:4:1", "hamge:4:2", "hamge:4:3", "hamge:4:4",
        "hamge:3:2",
    ] {
        corpus.push((name.to_string(), builtin(name).unwrap()));
    }
    let mut i = 0u64;
    while corpus.len() < 50 {
        let n = 2 + (i % 3) as usize; // arities 2..4
        let name = format!("random:{n}:0.5:{}", seed.wrapping_add(i));
        corpus.push((name.clone(), builtin(&name).unwrap()));
        i += 1;
    }
    corpus
}

fn check_sandwich(seed: u64, caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("sketch-error-sandwich");
    let corpus = small_corpus(seed);
    let mut sandwich_fail = 0usize;
    let mut onebit_fail = 0usize;
    let mut onebit_checked = 0usize;
    for (name, f) in &corpus {
        let n = f.n();
        let profile = dim_profile(f, caps)?;
        for d in 0..=n {
            // Exhaustively optimal d-dimensional sketch: per-coset majority
            // under every subspace of dimension d.
            let mut best = Rat::one();
            for sub in enumerate_subspaces(n, d, caps)? {
                let probe = crate::sketch::ConcreteSketch::new(
                    if sub.dim() == 0 {
                        Gf2Matrix::new(n.max(1))?
                    } else {
                        sub.basis().clone()
                    },
                    crate::sketch::Decoder::Table(Vec::new()),
                );
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
                let err = rat(wrong as i128, 1i128 << n);
                if err < best {
                    best = err;
                }
            }
            let upper = (Rat::one() - profile.w[d].clone()) / Rat::from_integer(2);
            let lower = (1.0 - rat_to_f64(&profile.w[d]).sqrt()) / 2.0;
            if best > upper || rat_to_f64(&best) < lower - 1e-12 {
                sandwich_fail += 1;
            }
        }
        // One-bit messages cannot beat the dimension-2 gap bound.
        let gap2 = if n >= 2 { profile.gap(2) } else { Rat::zero() };
        if gap2 > Rat::zero() {
            onebit_checked += 1;
            let (err, _) = best_one_bit_error(f, &PairDistribution::Uniform, caps)?;
            if err < gap2 / Rat::from_integer(4) {
                onebit_fail += 1;
                let _ = name;
            }
        }
    }
    report.clause(
        "error-sandwich",
        sandwich_fail == 0,
        format!(
            "optimal d-bit sketch error within [(1-sqrt(w_d))/2, (1-w_d)/2] for {} functions, {sandwich_fail} violations",
            corpus.len()
        ),
    );
    report.clause(
        "one-bit-gap-bound",
        onebit_fail == 0,
        format!("{onebit_checked} functions with positive dimension-2 gap, {onebit_fail} below gap/4"),
    );
    Ok(report)
}

fn check_ltf_hamming(seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("ltf-hamming-sketch");
    let spec = LtfSpec::hamming_ge(64, 4)?;
    let delta = rat(1, 10);
    let scheme = ltf_sketch(&spec, &delta, seed)?;
    let width = scheme.k();
    report.clause(
        "width",
        width <= 64,
        format!("scheme width {width} bits across all stages (cap 64)"),
    );
    let trials = 10_000u64;
    let rep = eval_sketch_error(&scheme, &spec, EvalMode::Monte { trials, seed })?;
    let avg = rat_to_f64(&rep.uniform_avg);
    let cp = rep.per_x_ci_upper.unwrap_or(1.0);
    report.clause(
        "monte-error",
        rep.uniform_avg <= delta,
        format!("empirical error {avg:.5} over {trials} trials (delta 0.1)"),
    );
    report.clause("clopper-pearson", cp <= 0.12, format!("95% upper bound {cp:.5} (cap 0.12)"));
    Ok(report)
}

fn check_onebit(caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("onebit-lower-bound");
    // Character chi_{1000} with its value at 0 flipped: distance 1/16.
    let mut table: Vec<i8> = (0..16u64).map(|x| if x & 1 == 1 { -1 } else { 1 }).collect();
    table[0] = -table[0];
    let f = BoolFun::from_table(4, table)?;
    let (eps, _) = boolfn::linear_distance(&f);
    report.clause(
        "distance",
        eps == rat(1, 16),
        format!("distance from linear = {}", rat_string(&eps)),
    );
    let mu = planted_shift_for(&f)?;
    let PairDistribution::PlantedShift { z } = &mu else { unreachable!() };
    report.clause("shift-choice", z.bits() == 0, format!("planted shift z = {z}"));
    let (err, witness) = best_one_bit_error(&f, &mu, caps)?;
    report.clause(
        "exhaustive-minimum",
        err > rat(1, 200),
        format!(
            "minimum over 65536 one-bit messages = {} (> 1/200), witness {witness:#06x}",
            rat_string(&err)
        ),
    );
    let (worst, ok) = planted_estimator_bound(&f, z, caps)?;
    report.clause(
        "estimator-bound",
        ok,
        format!(
            "worst message estimator {} <= (sqrt2/2)(1+eps) ~ {:.5}",
            rat_string(&worst),
            std::f64::consts::FRAC_1_SQRT_2 * (1.0 + rat_to_f64(&eps))
        ),
    );
    Ok(report)
}

fn check_majority_tightness(caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("majority-tightness");
    let ns = [5usize, 7, 9, 11];
    let mut weight_ratios = Vec::new();
    let mut proto_ratios = Vec::new();
    for &n in &ns {
        let f = builtin(&format!("maj:{n}"))?;
        // Top-dimension weight through the spectral-span search only; the
        // full profile is not needed.
        let (w, _) = max_subspace_weight(&f, n - 1, caps)?;
        let gap = Rat::one() - w;
        weight_ratios.push(rat_to_f64(&gap) * (n as f64).sqrt());

        let p = trivial_majority_protocol(n, caps)?;
        let err = exact_error(&p, &f, &PairDistribution::Uniform, caps)?;
        proto_ratios.push(rat_to_f64(&err) * (n as f64).sqrt());
    }
    let fit = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let gamma = fit(&weight_ratios);
    let within = |xs: &[f64], c: f64| xs.iter().all(|&x| x >= 0.5 * c && x <= 1.5 * c);
    report.clause(
        "weight-gap-scaling",
        gamma > 0.0 && within(&weight_ratios, gamma),
        format!(
            "(1 - w_(n-1)) sqrt(n) = {:?}, fitted gamma {gamma:.4}, all within +-50%",
            weight_ratios.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    );
    let c = fit(&proto_ratios);
    report.clause(
        "protocol-error-scaling",
        c > 0.0 && within(&proto_ratios, c),
        format!(
            "protocol error * sqrt(n) = {:?}, fitted c {c:.4}, all within +-50%",
            proto_ratios.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    );
    // Frozen exact values for the two smallest cases.
    let p3 = trivial_majority_protocol(3, caps)?;
    let e3 = exact_error(&p3, &builtin("maj:3")?, &PairDistribution::Uniform, caps)?;
    let p5 = trivial_majority_protocol(5, caps)?;
    let e5 = exact_error(&p5, &builtin("maj:5")?, &PairDistribution::Uniform, caps)?;
    report.clause(
        "exact-small-cases",
        e3 == rat(1, 4) && e5 == rat(3, 16),
        format!("errors {} and {} at n=3, 5", rat_string(&e3), rat_string(&e5)),
    );
    Ok(report)
}

fn check_composition_rank_extractor(seed: u64, caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("composition-rank-extractor");

    // Block-product rank inequality on random pairs.
    let mut rng = substream(seed, "checks/superslam", 0);
    let mut rank_ok = true;
    for _ in 0..200 {
        let a_rows = rng.random_range(1..=3usize);
        let b_rows = rng.random_range(1..=3usize);
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(1..=4usize);
        let a = Gf2Matrix::from_rows(
            &(0..a_rows)
                .map(|_| BitVec::new(n, rng.random_range(0..1u64 << n)).unwrap())
                .collect::<Vec<_>>(),
        )?;
        let b = Gf2Matrix::from_rows(
            &(0..b_rows)
                .map(|_| BitVec::new(m, rng.random_range(0..1u64 << m)).unwrap())
                .collect::<Vec<_>>(),
        )?;
        let s = super_slam(&a, &b, caps)?;
        if s.rank() < a.rank() * b.rank() {
            rank_ok = false;
        }
    }
    report.clause("block-product-rank", rank_ok, "rank(A + B block product) >= rank A * rank B on 200 pairs");

    // Composition law for the spectral dimension, with balanced inner
    // functions.
    let mut rng = substream(seed, "checks/composition", 0);
    let mut comp_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(2..=3usize);
        let m = rng.random_range(2..=(12 / n).min(4));
        let f = {
            let table: Vec<i8> =
                (0..1u64 << n).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect();
            BoolFun::from_table(n, table)?
        };
        let g = {
            let half = 1usize << (m - 1);
            let mut table = vec![1i8; 1 << m];
            let mut indices: Vec<usize> = (0..1 << m).collect();
            for i in (1..indices.len()).rev() {
                let j = rng.random_range(0..=i);
                indices.swap(i, j);
            }
            for &i in indices.iter().take(half) {
                table[i] = -1;
            }
            BoolFun::from_table(m, table)?
        };
        let fg = boolfn::compose(&f, &g)?;
        if exact_dim(&fg).0 < exact_dim(&f).0 * exact_dim(&g).0 {
            comp_ok = false;
        }
    }
    report.clause(
        "composition-dimension",
        comp_ok,
        "dim(f o g) >= dim f * dim g on 100 random pairs with balanced g",
    );

    // Inner product at n = 8, dimension 6, by full affine enumeration.
    let ip = builtin("ip:8")?;
    let scan = affine_structure_check(&ip, 6, &rat(1, 4), caps)?;
    let eps_hat = Rat::new(1, 2) - scan.worst_min_side.clone();
    report.clause(
        "ip-extractor-strength",
        rat_to_f64(&eps_hat) < 0.05,
        format!(
            "ip:8 is a (1/2 - eps)-extractor of dimension 6 exactly for eps = {} (required < 0.05)",
            rat_string(&eps_hat)
        ),
    );
    report.clause(
        "ip-extractor-lower-bound",
        scan.extractor && scan.extractor_sketch_lb == Some(3),
        format!(
            "extractor at delta=1/4 implies sketch lower bound {:?} (consistent with n/2 - O(1))",
            scan.extractor_sketch_lb
        ),
    );
    Ok(report)
}

fn check_streaming(seed: u64, _caps: &Caps) -> Result<CheckReport> {
    let mut report = CheckReport::new("streaming-model1");

    // Sketch-matrix automata: path independence, coset factoring, and kernel
    // equal to the elimination null space.
    let mut rng = substream(seed, "checks/kernel", 0);
    let mut kernel_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(2..=8usize);
        let k = rng.random_range(1..=n.min(6));
        let rows: Vec<BitVec> = (0..k)
            .map(|_| BitVec::new(n, rng.random_range(0..1u64 << n)).unwrap())
            .collect();
        let m = Gf2Matrix::from_rows(&rows)?;
        let probe = crate::sketch::ConcreteSketch::new(
            m.clone(),
            crate::sketch::Decoder::Table(vec![1i8; 1 << k]),
        );
        let auto = Automaton::from_sketch(&probe)?;
        let coset = coset_check(&auto)?;
        let kern = kernel(&auto)?;
        let ns = Subspace::from_matrix(&m.null_space());
        if !(coset.ok && coset.path_independent && kern == ns) {
            kernel_ok = false;
        }
    }
    report.clause(
        "kernel-null-space",
        kernel_ok,
        "100 sketch automata: path independent, coset factoring, kernel = null space",
    );

    // End-to-end error over random split streams.
    let f = builtin("hamge:8:7")?;
    let delta = rat(1, 8);
    let scheme = random_parity_sketch(&f, &delta, seed, DecoderRule::Isolation)?;
    let trials = 10_000u64;
    let wrong: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (stream, _) = gen_stream(StreamModel::SplitUniform, 8, t, None).expect("valid model");
            let out = run(&StreamAlgo::Scheme { scheme: &scheme, sample: t }, &stream)
                .expect("compatible arity");
            u64::from(out.output != f.eval(&stream.freq()))
        })
        .sum();
    let rate = wrong as f64 / trials as f64;
    let cap = rat_to_f64(&delta) + 0.02;
    let cp = clopper_pearson_upper(wrong, trials, 0.05);
    report.clause(
        "model1-end-to-end",
        rate <= cap,
        format!("random-parity error {rate:.5} over {trials} split streams (cap {cap}, 95% upper {cp:.5})"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_id_is_rejected() {
        assert!(run_check("no-such-check", 2, 0, &Caps::default()).is_err());
    }

    #[test]
    fn corpus_has_fifty_functions() {
        let corpus = small_corpus(7);
        assert_eq!(corpus.len(), 50);
        assert!(corpus.iter().all(|(_, f)| f.n() <= 4));
    }

    #[test]
    fn report_rendering_marks_failures() {
        let mut r = CheckReport::new("demo");
        r.clause("a", true, "fine");
        r.clause("b", false, "broken");
        assert!(!r.pass());
        let text = r.render();
        assert!(text.contains("[PASS] demo/a"));
        assert!(text.contains("[FAIL] demo/b"));
        assert!(text.ends_with("FAIL: demo\n"));
        assert_eq!(r.to_json()["pass"], false);
    }
}
