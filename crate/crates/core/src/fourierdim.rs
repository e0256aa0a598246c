//! Exact and approximate Fourier dimension: subspace weight profiles,
//! dimension gaps, the derived sketch/communication bound report, and the
//! disperser/extractor scans.

use crate::boolfn::{BoolFun, Spectrum};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::gf2::{enumerate_subspaces_unchecked, gaussian_binomial, AffineSubspace, BitVec, Subspace};
use crate::rat::{rat_string, rat_to_f64, Rat};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

/// Fourier dimension: the rank of the spectral support, together with the
/// canonical basis of its span.
pub fn exact_dim(f: &BoolFun) -> (usize, Subspace) {
    let spec = f.wht();
    let m = spec.support_matrix().expect("arity within range");
    let sub = Subspace::from_matrix(&m);
    (sub.dim(), sub)
}

/// Precomputed squared-coefficient table over the spectral span, indexed by
/// coordinates in the span basis.
struct SpanTable {
    n: usize,
    dim: usize,
    /// `alpha[lambda]` = packed ambient vector of the combination `lambda`.
    alpha: Vec<u64>,
    /// `wt[lambda]` = squared spectrum coefficient of that vector.
    wt: Vec<u64>,
}

impl SpanTable {
    fn build(spec: &Spectrum, caps: &Caps) -> Result<SpanTable> {
        let m = spec.support_matrix()?;
        let (rref, dim, _) = m.rref();
        if dim > caps.enum_dim {
            return Err(Error::SearchSpaceCap(format!(
                "spectral span has dimension {dim} > {}",
                caps.enum_dim
            )));
        }
        let basis = rref.raw_rows();
        let mut alpha = vec![0u64; 1 << dim];
        for lambda in 1usize..1 << dim {
            alpha[lambda] = alpha[lambda & (lambda - 1)] ^ basis[lambda.trailing_zeros() as usize];
        }
        let wt = alpha
            .iter()
            .map(|&a| {
                let c = i64::from(spec.coeffs()[a as usize]);
                (c * c) as u64
            })
            .collect();
        Ok(SpanTable { n: spec.n(), dim, alpha, wt })
    }

    fn weight_rat(&self, num: u64) -> Rat {
        Rat::new(i128::from(num), 1i128 << (2 * self.n as u32))
    }

    /// Map rows in span coordinates back to an ambient subspace.
    fn lift(&self, rows: &[u64]) -> Subspace {
        if rows.is_empty() {
            return Subspace::trivial(self.n.max(1)).expect("valid arity");
        }
        let vecs: Vec<BitVec> = rows
            .iter()
            .map(|&r| BitVec::new(self.n.max(1), self.alpha[r as usize]).expect("in range"))
            .collect();
        Subspace::span(&vecs).expect("consistent arity")
    }
}

/// Walk every `dd`-dimensional subspace of `F_2^dim` in canonical order and
/// report the best weight. Returns `(weight numerator, basis rows)`.
///
/// Parallelized over pivot-column choices; the reduction keeps the first
/// subspace (in canonical order) attaining the maximum, so the result does
/// not depend on the worker count.
fn best_subspace(dim: usize, dd: usize, wt: &[u64]) -> (u64, Vec<u64>) {
    if dd == 0 {
        return (wt[0], Vec::new());
    }
    let combos: Vec<Vec<usize>> = pivot_combinations(dim, dd);
    let results: Vec<(u64, Vec<u64>)> = combos
        .par_iter()
        .map(|pivots| {
            let mut free_slots = Vec::new();
            for (i, &p) in pivots.iter().enumerate() {
                for col in p + 1..dim {
                    if !pivots.contains(&col) {
                        free_slots.push((i, col));
                    }
                }
            }
            let mut rows = vec![0u64; dd];
            let mut best = (0u64, Vec::new());
            for counter in 0u64..1 << free_slots.len() {
                for (i, &p) in pivots.iter().enumerate() {
                    rows[i] = 1 << p;
                }
                for (bit, &(row, col)) in free_slots.iter().enumerate() {
                    if counter >> bit & 1 == 1 {
                        rows[row] |= 1 << col;
                    }
                }
                let mut sum = wt[0];
                let mut cur = 0u64;
                for g in 1u64..1 << dd {
                    cur ^= rows[g.trailing_zeros() as usize];
                    sum += wt[cur as usize];
                }
                if sum > best.0 {
                    best = (sum, rows.clone());
                }
            }
            best
        })
        .collect();
    results
        .into_iter()
        .fold((0, Vec::new()), |acc, item| if item.0 > acc.0 { item } else { acc })
}

fn pivot_combinations(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..d).collect();
    loop {
        out.push(combo.clone());
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < n - d + i {
                combo[i] += 1;
                for j in i + 1..d {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn check_search_size(dim: usize, dd: usize, caps: &Caps) -> Result<()> {
    match gaussian_binomial(dim, dd) {
        Some(count) if count <= caps.search_subspaces => Ok(()),
        _ => Err(Error::SearchSpaceCap(format!(
            "enumerating dimension-{dd} subspaces of a {dim}-dimensional span exceeds the cap {}",
            caps.search_subspaces
        ))),
    }
}

/// Exact maximum of the squared-spectrum weight over subspaces of dimension
/// at most `d`, with a canonical witness.
///
/// The search runs inside the spectral span: weight outside it is zero and
/// any subspace of the span extends to dimension `d` ambiently, so the
/// restriction is exact (cross-validated against full enumeration in tests).
pub fn max_subspace_weight(f: &BoolFun, d: usize, caps: &Caps) -> Result<(Rat, Subspace)> {
    if d > f.n() {
        return Err(Error::DimensionOutOfRange(format!(
            "dimension {d} exceeds arity {}",
            f.n()
        )));
    }
    let spec = f.wht();
    let tbl = SpanTable::build(&spec, caps)?;
    let dd = d.min(tbl.dim);
    check_search_size(tbl.dim, dd, caps)?;
    let (num, rows) = best_subspace(tbl.dim, dd, &tbl.wt);
    Ok((tbl.weight_rat(num), tbl.lift(&rows)))
}

/// Weight profile `w_0 ..= w_n` with per-dimension witnesses and gaps.
#[derive(Debug, Clone)]
pub struct DimProfile {
    pub n: usize,
    pub w: Vec<Rat>,
    pub witnesses: Vec<Subspace>,
}

impl DimProfile {
    /// `w_d - w_{d-1}` for `d >= 1`.
    pub fn gap(&self, d: usize) -> Rat {
        assert!(d >= 1 && d <= self.n);
        self.w[d].clone() - self.w[d - 1].clone()
    }

    /// A zero gap means no `eps` has approximate dimension exactly `d`; the
    /// per-dimension threshold is then reported with this flag set.
    pub fn gap_undefined(&self, d: usize) -> bool {
        self.gap(d).is_zero()
    }

    /// Smallest dimension attaining the largest gap.
    pub fn argmax_gap(&self) -> usize {
        let mut best = 1;
        for d in 2..=self.n {
            if self.gap(d) > self.gap(best) {
                best = d;
            }
        }
        best
    }

    /// Smallest `d` with `w_d >= eps`.
    pub fn dim_for_weight(&self, eps: &Rat) -> usize {
        (0..=self.n).find(|&d| &self.w[d] >= eps).unwrap_or(self.n)
    }
}

pub fn dim_profile(f: &BoolFun, caps: &Caps) -> Result<DimProfile> {
    let n = f.n();
    let spec = f.wht();
    let tbl = SpanTable::build(&spec, caps)?;
    let mut total: u128 = 0;
    for d in 0..=tbl.dim {
        total += gaussian_binomial(tbl.dim, d).ok_or_else(|| {
            Error::SearchSpaceCap("subspace count overflow".into())
        })?;
        if total > caps.search_subspaces {
            return Err(Error::SearchSpaceCap(format!(
                "profile enumeration exceeds the cap {}",
                caps.search_subspaces
            )));
        }
    }
    let mut w = Vec::with_capacity(n + 1);
    let mut witnesses = Vec::with_capacity(n + 1);
    for d in 0..=n {
        let dd = d.min(tbl.dim);
        let (num, rows) = best_subspace(tbl.dim, dd, &tbl.wt);
        w.push(tbl.weight_rat(num));
        witnesses.push(tbl.lift(&rows));
    }
    Ok(DimProfile { n, w, witnesses })
}

/// Greedy lower bound for the dimension-`d` weight: repeatedly add the
/// support vector with the largest marginal span weight. Always at most the
/// exact maximum.
pub fn greedy_subspace(f: &BoolFun, d: usize) -> (Rat, Subspace) {
    let n = f.n();
    let spec = f.wht();
    let sq = |a: u64| -> u64 {
        let c = i64::from(spec.coeffs()[a as usize]);
        (c * c) as u64
    };
    let support: Vec<u64> = spec.support().iter().map(|v| v.bits()).collect();
    let mut chosen: Vec<BitVec> = Vec::new();
    let mut span: Vec<u64> = vec![0];
    let mut in_span = std::collections::HashSet::from([0u64]);
    let mut weight = sq(0);
    for _ in 0..d {
        let mut best: Option<(u64, u64)> = None; // (marginal, candidate)
        for &cand in &support {
            if in_span.contains(&cand) {
                continue;
            }
            let marginal: u64 = span.iter().map(|&s| sq(s ^ cand)).sum();
            match best {
                Some((m, c)) if (marginal, std::cmp::Reverse(cand)) <= (m, std::cmp::Reverse(c)) => {}
                _ => best = Some((marginal, cand)),
            }
        }
        let Some((marginal, cand)) = best else { break };
        weight += marginal;
        let added: Vec<u64> = span.iter().map(|&s| s ^ cand).collect();
        for &a in &added {
            in_span.insert(a);
        }
        span.extend(added);
        chosen.push(BitVec::new(n.max(1), cand).expect("support vector in range"));
    }
    let sub = if chosen.is_empty() {
        Subspace::trivial(n.max(1)).expect("valid arity")
    } else {
        Subspace::span(&chosen).expect("consistent arity")
    };
    (Rat::new(i128::from(weight), 1i128 << (2 * n as u32)), sub)
}

/// Per-dimension bounds derived from the weight profile.
#[derive(Debug, Clone)]
pub struct DimBounds {
    pub d: usize,
    pub w: Rat,
    pub gap: Rat,
    pub gap_undefined: bool,
    /// `d` sketch bits achieve uniform error `(1 - w_d)/2`.
    pub sketch_error_upper: Rat,
    /// No `d`-bit sketch beats uniform error `(1 - sqrt(w_d))/2`.
    pub sketch_error_lower: f64,
    /// One-way protocols with error below `gap_d / 4` need at least `d` bits.
    pub one_way_delta: Rat,
    /// Secondary one-way instantiation: error below
    /// `(1 - w_{d-1}) / (4 (n - d))` needs at least `d` bits (d < n).
    pub one_way_delta_threshold: Option<Rat>,
}

/// The chosen-dimension summary accompanying the per-dimension table.
#[derive(Debug, Clone)]
pub struct ChosenDim {
    /// `|fhat(0)|`, the constant-coefficient magnitude the cases split on.
    pub theta: Rat,
    pub applicable: bool,
    /// Largest-gap case when `max gap >= (1 - theta)/3`.
    pub large_gap_case: bool,
    pub d_star: usize,
    pub d1: Option<usize>,
    /// Exact one-way error threshold at the chosen dimension: `gap/4`.
    pub one_way_delta: Rat,
    /// Sketch error achievable at the chosen dimension: `(1 - w)/2`.
    pub sketch_error: Rat,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: usize,
    pub per_dim: Vec<DimBounds>,
    pub chosen: ChosenDim,
}

pub fn bound_report(f: &BoolFun, caps: &Caps) -> Result<BoundReport> {
    let profile = dim_profile(f, caps)?;
    let n = profile.n;
    let mut per_dim = Vec::with_capacity(n);
    for d in 1..=n {
        let w = profile.w[d].clone();
        let gap = profile.gap(d);
        per_dim.push(DimBounds {
            d,
            w: w.clone(),
            gap: gap.clone(),
            gap_undefined: gap.is_zero(),
            sketch_error_upper: (Rat::one() - w.clone()) / Rat::from_integer(2),
            sketch_error_lower: (1.0 - rat_to_f64(&w).sqrt()) / 2.0,
            one_way_delta: gap / Rat::from_integer(4),
            one_way_delta_threshold: if d < n {
                Some(
                    (Rat::one() - profile.w[d - 1].clone())
                        / Rat::from_integer(4 * (n as i128 - d as i128)),
                )
            } else {
                None
            },
        });
    }

    // theta = |fhat(0)|, the smallest admissible constant-coefficient bound.
    let theta = Rat::new(
        i128::from(f.wht().coeffs()[0].abs()),
        1i128 << n,
    );
    let applicable = theta < Rat::one();
    let d_star = profile.argmax_gap();
    let max_gap = profile.gap(d_star);
    let third = (Rat::one() - theta.clone()) / Rat::from_integer(3);
    let large_gap_case = max_gap >= third;
    let chosen = if !applicable {
        ChosenDim {
            theta,
            applicable: false,
            large_gap_case: false,
            d_star: 0,
            d1: None,
            one_way_delta: Rat::zero(),
            sketch_error: Rat::zero(),
        }
    } else if large_gap_case {
        ChosenDim {
            theta,
            applicable: true,
            large_gap_case: true,
            d_star,
            d1: None,
            one_way_delta: profile.gap(d_star) / Rat::from_integer(4),
            sketch_error: (Rat::one() - profile.w[d_star].clone()) / Rat::from_integer(2),
        }
    } else {
        // Small gaps: pass through the first dimension whose weight lands in
        // the middle third, then take the largest gap above it.
        let theta1 = theta.clone() + third.clone();
        let d1 = profile.dim_for_weight(&theta1);
        let mut d2 = d1 + 1;
        for d in d1 + 1..=n {
            if profile.gap(d) > profile.gap(d2) {
                d2 = d;
            }
        }
        ChosenDim {
            theta,
            applicable: true,
            large_gap_case: false,
            d_star: d2,
            d1: Some(d1),
            one_way_delta: profile.gap(d2) / Rat::from_integer(4),
            sketch_error: (Rat::one() - profile.w[d2].clone()) / Rat::from_integer(2),
        }
    };

    Ok(BoundReport { n, per_dim, chosen })
}

impl BoundReport {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "dims": self.per_dim.iter().map(|b| json!({
                "d": b.d,
                "w_d": rat_string(&b.w),
                "gap": rat_string(&b.gap),
                "gap_undefined": b.gap_undefined,
                "bounds": {
                    "part1": rat_string(&b.sketch_error_upper),
                    "part2": b.sketch_error_lower,
                    "part3": rat_string(&b.one_way_delta),
                    "one_way_threshold": b.one_way_delta_threshold.as_ref().map(rat_string),
                },
            })).collect::<Vec<_>>(),
            "chosen": {
                "theta": rat_string(&self.chosen.theta),
                "applicable": self.chosen.applicable,
                "large_gap_case": self.chosen.large_gap_case,
                "d_star": self.chosen.d_star,
                "d1": self.chosen.d1,
                "one_way_delta": rat_string(&self.chosen.one_way_delta),
                "sketch_error": rat_string(&self.chosen.sketch_error),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct HammingIntersection {
    pub ratio: Rat,
    pub bound: f64,
    pub ok: bool,
}

/// Exact fraction of weight-`k` vectors lying in the subspace, against the
/// `(e d / n)^{min(k, n-k, d)}` bound.
pub fn hamming_intersection_check(a: &Subspace, k: usize, caps: &Caps) -> Result<HammingIntersection> {
    let n = a.n();
    let d = a.dim();
    if 2 * d > n {
        return Err(Error::DimensionOutOfRange(format!(
            "intersection bound requires dim <= n/2, got dim={d}, n={n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::DimensionOutOfRange(format!("k must be in [1, n-1], got {k}")));
    }
    if d > caps.span_dim {
        return Err(Error::EnumerationCap(format!(
            "span enumeration capped at dim<={}, got {d}",
            caps.span_dim
        )));
    }
    let count = a.elements().iter().filter(|v| v.weight() as usize == k).count();
    let total = binomial(n, k);
    let ratio = Rat::new(count as i128, total as i128);
    let exponent = k.min(n - k).min(d) as f64;
    let bound = (std::f64::consts::E * d as f64 / n as f64).powf(exponent);
    let ok = rat_to_f64(&ratio) <= bound + 1e-12;
    Ok(HammingIntersection { ratio, bound, ok })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

#[derive(Debug, Clone)]
pub struct AffineStructureReport {
    pub dim: usize,
    pub disperser: bool,
    pub extractor: bool,
    pub delta: Rat,
    /// Smallest minority-side frequency over the scanned cosets.
    pub worst_min_side: Rat,
    pub worst_coset: AffineSubspace,
    /// Deterministic sketch bound `n - d + 1` implied by the disperser
    /// property, when it holds.
    pub disperser_sketch_lb: Option<usize>,
    /// Randomized sketch bound `n - d + 1` at error `delta`, when the
    /// extractor property holds.
    pub extractor_sketch_lb: Option<usize>,
}

/// Scan every affine subspace of dimension at least `d` for constancy and
/// for `delta`-balance.
///
/// Constancy and balance are monotone under taking affine subcosets, so the
/// scan over dimension exactly `d` decides both properties for all dimensions
/// `>= d`; cosets are swept through their dual constraints, with all
/// `2^{n-d}` restriction sums obtained by one transform per dual subspace.
pub fn affine_structure_check(
    f: &BoolFun,
    d: usize,
    delta: &Rat,
    caps: &Caps,
) -> Result<AffineStructureReport> {
    let n = f.n();
    if d == 0 || d > n {
        return Err(Error::DimensionOutOfRange(format!(
            "affine dimension must be in [1, {n}], got {d}"
        )));
    }
    let codim = n - d;
    if n > caps.affine_arity && codim > caps.affine_codim {
        return Err(Error::EnumerationCap(format!(
            "affine scan needs n <= {} or codimension <= {}",
            caps.affine_arity, caps.affine_codim
        )));
    }
    match gaussian_binomial(n, codim) {
        Some(c) if c <= caps.search_subspaces => {}
        _ => {
            return Err(Error::EnumerationCap(format!(
                "affine scan would enumerate more than {} subspaces",
                caps.search_subspaces
            )))
        }
    }

    let spec = f.wht();
    let coset_size = 1i128 << d;
    let mut disperser = true;
    let mut extractor = true;
    let mut worst: Option<(Rat, Vec<u64>, u64)> = None; // (min side, dual rows, b)

    let mut sums_buf = vec![0i64; 1 << codim];
    let mut alpha_buf = vec![0u64; 1 << codim];
    for dual in enumerate_subspaces_unchecked(n, codim) {
        let rows = dual.basis().raw_rows();
        // sums_buf[z] starts as the coefficient of the z-combination of the
        // dual rows; after the transform it holds 2^codim times the sum of f
        // over the coset with parity pattern b.
        sums_buf[0] = i64::from(spec.coeffs()[0]);
        for z in 1usize..1 << codim {
            alpha_buf[z] = alpha_buf[z & (z - 1)] ^ rows[z.trailing_zeros() as usize];
            sums_buf[z] = i64::from(spec.coeffs()[alpha_buf[z] as usize]);
        }
        crate::boolfn::butterfly(&mut sums_buf);
        for (b, &scaled) in sums_buf.iter().enumerate() {
            debug_assert_eq!(scaled.rem_euclid(1i64 << codim), 0);
            let coset_sum = i128::from(scaled >> codim);
            let min_side = Rat::new(coset_size - coset_sum.abs(), 2 * coset_size);
            if coset_sum.abs() == coset_size {
                disperser = false;
            }
            if &min_side <= delta {
                extractor = false;
            }
            let replace = match &worst {
                None => true,
                Some((w, _, _)) => min_side < *w,
            };
            if replace {
                worst = Some((min_side, rows.to_vec(), b as u64));
            }
        }
    }

    let (worst_min_side, dual_rows, b) = worst.expect("at least one coset scanned");
    let dual = if dual_rows.is_empty() {
        Subspace::trivial(n)?
    } else {
        Subspace::span(
            &dual_rows
                .iter()
                .map(|&r| BitVec::new(n, r).expect("in range"))
                .collect::<Vec<_>>(),
        )?
    };
    // Reconstruct the primal coset: kernel of the dual basis, shifted by the
    // pivot-supported solution of the parity pattern.
    let sub = dual.orthogonal();
    let mut shift = 0u64;
    for (j, row) in dual_rows.iter().enumerate() {
        if b >> j & 1 == 1 {
            shift |= 1u64 << row.trailing_zeros();
        }
    }
    let worst_coset = AffineSubspace::new(sub, BitVec::new(n, shift)?)?;

    Ok(AffineStructureReport {
        dim: d,
        disperser,
        extractor,
        delta: delta.clone(),
        worst_min_side,
        worst_coset,
        disperser_sketch_lb: disperser.then_some(n - d + 1),
        extractor_sketch_lb: extractor.then_some(n - d + 1),
    })
}


#[cfg(test)]
mod theta_tests {
    use super::*;
    use crate::boolfn::builtin;
    use crate::rat::rat;

    #[test]
    fn chosen_dim_theta_is_constant_coefficient() {
        // or:3 has fhat(0) = -3/4; theta must be 3/4.
        let f = builtin("or:3").unwrap();
        let report = bound_report(&f, &Caps::default()).unwrap();
        assert_eq!(report.chosen.theta, rat(3, 4));
        assert!(report.chosen.applicable);
    }
}
