use criterion::{criterion_group, criterion_main, Criterion};
use f2sketch::boolfn::builtin;
use f2sketch::caps::Caps;
use f2sketch::commsim::{best_one_bit_error, PairDistribution};
use f2sketch::fourierdim::max_subspace_weight;
use f2sketch::gf2::{enumerate_subspaces, standard_domination_decompose, BitVec, Gf2Matrix, Subspace};
use f2sketch::rng::substream;
use f2sketch::sketch::{ltf_sketch, LtfSpec};
use f2sketch::rat::rat;
use rand::Rng;
use std::hint::black_box;

fn bench_wht(c: &mut Criterion) {
    let f = builtin("random:16:0.5:1").unwrap();
    c.bench_function("wht_n16", |b| b.iter(|| black_box(&f).wht()));
}

fn bench_rref(c: &mut Criterion) {
    let mut rng = substream(1, "bench/rref", 0);
    let rows: Vec<BitVec> = (0..64).map(|_| BitVec::new(64, rng.random()).unwrap()).collect();
    let m = Gf2Matrix::from_rows(&rows).unwrap();
    c.bench_function("rref_64x64", |b| b.iter(|| black_box(&m).rref()));
}

fn bench_subspace_enumeration(c: &mut Criterion) {
    let caps = Caps::default();
    c.bench_function("enumerate_subspaces_8_4", |b| {
        b.iter(|| enumerate_subspaces(8, 4, &caps).unwrap().count())
    });
}

fn bench_weight_search(c: &mut Criterion) {
    let caps = Caps::default();
    let f = builtin("maj3k:2").unwrap();
    c.bench_function("max_subspace_weight_maj3k2_d2", |b| {
        b.iter(|| max_subspace_weight(black_box(&f), 2, &caps).unwrap())
    });
}

fn bench_domination(c: &mut Criterion) {
    let caps = Caps::default();
    let mut rng = substream(2, "bench/domination", 0);
    let rows: Vec<BitVec> = (0..5).map(|_| BitVec::new(10, rng.random_range(1..1024)).unwrap()).collect();
    let l = Subspace::span(&rows).unwrap();
    c.bench_function("domination_decompose_n10_d5", |b| {
        b.iter(|| standard_domination_decompose(black_box(&l), &caps).unwrap())
    });
}

fn bench_one_bit_search(c: &mut Criterion) {
    let caps = Caps::default();
    let f = builtin("maj:3").unwrap();
    c.bench_function("one_bit_search_n3", |b| {
        b.iter(|| best_one_bit_error(black_box(&f), &PairDistribution::Uniform, &caps).unwrap())
    });
}

fn bench_ltf_sample(c: &mut Criterion) {
    let spec = LtfSpec::hamming_ge(64, 4).unwrap();
    let scheme = ltf_sketch(&spec, &rat(1, 10), 7).unwrap();
    let mut idx = 0u64;
    c.bench_function("ltf_hamge64_sample", |b| {
        b.iter(|| {
            idx += 1;
            black_box(scheme.sample(idx))
        })
    });
}

criterion_group!(
    benches,
    bench_wht,
    bench_rref,
    bench_subspace_enumeration,
    bench_weight_search,
    bench_domination,
    bench_one_bit_search,
    bench_ltf_sample
);
criterion_main!(benches);
