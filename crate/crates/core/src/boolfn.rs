//! Boolean functions as truth tables with exact Fourier analysis.
//!
//! Functions map `F_2^n` to `{+1,-1}` with the bit convention `0 -> +1`,
//! `1 -> -1`. Truth tables are indexed with coordinate `x_1` as the least
//! significant bit, matching the packing of [`BitVec`]. Spectra are stored as
//! the integers `c(a) = 2^n * fhat(a)`, so Parseval reads `sum c^2 = 4^n`
//! exactly.

use crate::error::{Error, Result};
use crate::gf2::{BitVec, Gf2Matrix};
use crate::rat::{dyadic, Rat};
use crate::rng::substream;
use rand::Rng;

pub const MAX_ARITY: usize = 26;

/// Truth table of `f : F_2^n -> {+1,-1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolFun {
    n: usize,
    table: Vec<i8>,
}

impl BoolFun {
    pub fn from_table(n: usize, table: Vec<i8>) -> Result<Self> {
        if n > MAX_ARITY {
            return Err(Error::ArityCap(format!("function arity capped at {MAX_ARITY}, got {n}")));
        }
        if table.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!(
                "table length {} does not match 2^{n}",
                table.len()
            )));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::DimensionMismatch("table entries must be +1 or -1".into()));
        }
        Ok(BoolFun { n, table })
    }

    /// Build from a predicate on packed inputs; `true` means output bit 1,
    /// i.e. value -1.
    pub fn from_bit_fn(n: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        if n > MAX_ARITY {
            return Err(Error::ArityCap(format!("function arity capped at {MAX_ARITY}, got {n}")));
        }
        let table = (0..1u64 << n).map(|x| if f(x) { -1 } else { 1 }).collect();
        BoolFun::from_table(n, table)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn value(&self, x: u64) -> i8 {
        self.table[x as usize]
    }

    pub fn eval(&self, x: &BitVec) -> i8 {
        debug_assert_eq!(x.n(), self.n);
        self.table[x.bits() as usize]
    }

    /// Number of inputs with value -1 (output bit 1).
    pub fn count_negative(&self) -> u64 {
        self.table.iter().filter(|&&v| v == -1).count() as u64
    }

    pub fn is_balanced(&self) -> bool {
        2 * self.count_negative() == 1u64 << self.n
    }

    /// Exact Walsh-Hadamard transform, `O(n 2^n)` butterfly.
    pub fn wht(&self) -> Spectrum {
        let mut c: Vec<i32> = self.table.iter().map(|&v| i32::from(v)).collect();
        butterfly(&mut c);
        Spectrum { n: self.n, coeffs: c }
    }

    /// Serialize in the exchange format: `n=<int>` then one line of `2^n`
    /// characters in the 0/1 output convention.
    pub fn to_text(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        s.extend(self.table.iter().map(|&v| if v == 1 { '0' } else { '1' }));
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "empty truth-table file".into() })?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected 'n=<int>', got '{header}'") })?;
        let row = lines.next().unwrap_or("").trim();
        if n > MAX_ARITY {
            return Err(Error::ArityCap(format!("function arity capped at {MAX_ARITY}, got {n}")));
        }
        if row.len() != 1 << n {
            return Err(Error::Parse {
                line: 2,
                msg: format!("expected {} characters, got {}", 1u64 << n, row.len()),
            });
        }
        let mut table = Vec::with_capacity(1 << n);
        for ch in row.chars() {
            match ch {
                '0' => table.push(1),
                '1' => table.push(-1),
                other => {
                    return Err(Error::Parse { line: 2, msg: format!("expected '0' or '1', got '{other}'") })
                }
            }
        }
        BoolFun::from_table(n, table)
    }
}

impl std::fmt::Debug for BoolFun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoolFun(n={}, ", self.n)?;
        if self.n <= 5 {
            for &v in &self.table {
                write!(f, "{}", if v == 1 { '0' } else { '1' })?;
            }
        } else {
            write!(f, "2^{} entries", self.n)?;
        }
        write!(f, ")")
    }
}

pub(crate) fn butterfly<T>(v: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let len = v.len();
    let mut half = 1;
    while half < len {
        let step = half * 2;
        for block in (0..len).step_by(step) {
            for i in block..block + half {
                let (a, b) = (v[i], v[i + half]);
                v[i] = a + b;
                v[i + half] = a - b;
            }
        }
        half = step;
    }
}

/// Exact integer spectrum `c(a) = sum_x f(x) (-1)^{a.x}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Spectrum {
    n: usize,
    coeffs: Vec<i32>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &BitVec) -> i32 {
        debug_assert_eq!(alpha.n(), self.n);
        self.coeffs[alpha.bits() as usize]
    }

    /// `fhat(a)` as an exact rational.
    pub fn fourier_coeff(&self, alpha_index: u64) -> Rat {
        dyadic(i128::from(self.coeffs[alpha_index as usize]), self.n as u32)
    }

    /// `fhat(a)^2` as an exact rational.
    pub fn squared_weight(&self, alpha_index: u64) -> Rat {
        let c = i128::from(self.coeffs[alpha_index as usize]);
        Rat::new(c * c, 1i128 << (2 * self.n as u32))
    }

    /// Nonzero-coefficient vectors, ascending by packed value.
    pub fn support(&self) -> Vec<BitVec> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| BitVec::new(self.n.max(1), i as u64).expect("support vector in range"))
            .collect()
    }

    pub fn sparsity(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// Matrix whose rows are the support vectors (zero row included when the
    /// empty character has nonzero coefficient).
    pub fn support_matrix(&self) -> Result<Gf2Matrix> {
        let mut m = Gf2Matrix::new(self.n.max(1))?;
        for v in self.support() {
            m.push_row(v)?;
        }
        Ok(m)
    }

    /// Exact Parseval check: `sum c^2 = 4^n`.
    pub fn parseval_holds(&self) -> bool {
        let total: u128 = self.coeffs.iter().map(|&c| (i128::from(c) * i128::from(c)) as u128).sum();
        total == 1u128 << (2 * self.n)
    }

    /// Inverse transform; errors if the coefficients are not the spectrum of
    /// a `{+1,-1}`-valued function.
    pub fn inverse(&self) -> Result<BoolFun> {
        let mut v: Vec<i64> = self.coeffs.iter().map(|&c| i64::from(c)).collect();
        butterfly(&mut v);
        let scale = 1i64 << self.n;
        let table: Vec<i8> = v
            .iter()
            .map(|&x| {
                if x == scale {
                    Ok(1i8)
                } else if x == -scale {
                    Ok(-1i8)
                } else {
                    Err(Error::DimensionMismatch(format!(
                        "coefficients do not invert to a sign table (got {x}/{scale})"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        BoolFun::from_table(self.n, table)
    }
}

/// `x -> f(x + z)`.
pub fn shift(f: &BoolFun, z: &BitVec) -> Result<BoolFun> {
    if z.n() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "shift arity {} differs from function arity {}",
            z.n(),
            f.n()
        )));
    }
    let table = (0..1u64 << f.n()).map(|x| f.value(x ^ z.bits())).collect();
    BoolFun::from_table(f.n(), table)
}

/// Real-valued table with denominator `2^n`, as produced by convolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalTable {
    n: usize,
    num: Vec<i64>,
}

impl RationalTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, x: u64) -> Rat {
        dyadic(i128::from(self.num[x as usize]), self.n as u32)
    }

    pub fn numerators(&self) -> &[i64] {
        &self.num
    }

    /// Integer transform of the numerators: entry `a` equals
    /// `4^n * (hhat(a))` for the rational table `h`.
    pub fn scaled_spectrum(&self) -> Vec<i128> {
        let mut v: Vec<i128> = self.num.iter().map(|&x| i128::from(x)).collect();
        butterfly(&mut v);
        v
    }
}

/// Convolution `(f * g)(x) = E_y[f(y) g(x + y)]`, exact with denominator
/// `2^n`. Its spectrum is the pointwise product of the operand spectra.
pub fn convolve(f: &BoolFun, g: &BoolFun) -> Result<RationalTable> {
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "convolution arities differ: {} vs {}",
            f.n(),
            g.n()
        )));
    }
    let n = f.n();
    let mut prod: Vec<i128> = {
        let cf = f.wht();
        let cg = g.wht();
        cf.coeffs
            .iter()
            .zip(cg.coeffs.iter())
            .map(|(&a, &b)| i128::from(a) * i128::from(b))
            .collect()
    };
    butterfly(&mut prod);
    // prod[x] = 4^n (f*g)(x); the numerator over 2^n is prod / 2^n.
    let num = prod
        .iter()
        .map(|&x| {
            debug_assert_eq!(x % (1i128 << n), 0);
            (x >> n) as i64
        })
        .collect();
    Ok(RationalTable { n, num })
}

/// Block composition: `(f o g)(x) = f(g(block_1), ..., g(block_n))` where
/// block `i` covers coordinates `m(i-1)+1 ..= mi`.
pub fn compose(f: &BoolFun, g: &BoolFun) -> Result<BoolFun> {
    let (n, m) = (f.n(), g.n());
    let arity = n.checked_mul(m).filter(|&a| a <= MAX_ARITY).ok_or_else(|| {
        Error::ArityCap(format!("composed arity {n}*{m} exceeds {MAX_ARITY}"))
    })?;
    if n == 0 || m == 0 {
        return Err(Error::DimensionOutOfRange("composition requires positive arities".into()));
    }
    let mask = (1u64 << m) - 1;
    let table = (0..1u64 << arity)
        .map(|x| {
            let mut y = 0u64;
            for i in 0..n {
                let block = (x >> (i * m)) & mask;
                if g.value(block) == -1 {
                    y |= 1 << i;
                }
            }
            f.value(y)
        })
        .collect();
    BoolFun::from_table(arity, table)
}

/// Restrict `f` to the coset `{ x : chi_{S_i}(x) = (-1)^{b_i} }`, re-indexed
/// over the `2^{n-d}` coset points, together with the constant Fourier
/// coefficient of the restriction.
///
/// The constant coefficient is computed twice, by direct averaging over the
/// coset and by the alternating-sum formula over the constraint span; the two
/// always agree and the agreement is asserted.
pub fn restrict_coset(f: &BoolFun, s: &[BitVec], b: &[bool]) -> Result<(BoolFun, Rat)> {
    let n = f.n();
    if s.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} constraint vectors but {} parity bits",
            s.len(),
            b.len()
        )));
    }
    let d = s.len();
    if d == 0 {
        let spec = f.wht();
        return Ok((f.clone(), spec.fourier_coeff(0)));
    }
    if d > n {
        return Err(Error::DimensionOutOfRange(format!("{d} constraints on {n} coordinates")));
    }
    for v in s {
        if v.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint arity {} differs from function arity {n}",
                v.n()
            )));
        }
    }
    let smat = Gf2Matrix::from_rows(s)?;
    if smat.rank() != d {
        return Err(Error::DependentConstraints);
    }

    // Particular solution of S x = b via elimination on the augmented system.
    let mut aug: Vec<(u64, bool)> = s.iter().zip(b.iter()).map(|(v, &bit)| (v.bits(), bit)).collect();
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        let mask = 1u64 << col;
        let Some(pos) = (r..aug.len()).find(|&i| aug[i].0 & mask != 0) else { continue };
        aug.swap(r, pos);
        let (prow, pbit) = aug[r];
        for (i, row) in aug.iter_mut().enumerate() {
            if i != r && row.0 & mask != 0 {
                row.0 ^= prow;
                row.1 ^= pbit;
            }
        }
        pivots.push(col);
        r += 1;
    }
    let mut x0 = 0u64;
    for (row, &p) in aug.iter().zip(pivots.iter()) {
        if row.1 {
            x0 |= 1u64 << p;
        }
    }

    // Kernel basis parameterizes the coset; index t takes basis row j as bit j.
    let kernel = smat.null_space();
    let free = kernel.row_count();
    debug_assert_eq!(free, n - d);
    let mut table = Vec::with_capacity(1 << free);
    let mut point = x0;
    table.push(f.value(point));
    for t in 1u64..(1 << free) {
        point ^= kernel.raw_rows()[t.trailing_zeros() as usize];
        table.push(f.value(point));
    }
    // Gray-code order: reorder into plain counter order for the table.
    let mut plain = vec![0i8; 1 << free];
    let mut gray_point = x0;
    plain[0] = f.value(gray_point);
    let mut code = 0u64;
    for t in 1u64..(1 << free) {
        code ^= 1 << t.trailing_zeros();
        gray_point ^= kernel.raw_rows()[t.trailing_zeros() as usize];
        plain[code as usize] = f.value(gray_point);
    }
    let restricted = BoolFun::from_table(free, plain)?;

    let avg_sum: i64 = restricted.table().iter().map(|&v| i64::from(v)).sum();
    let by_average = dyadic(i128::from(avg_sum), free as u32);

    // Alternating sum over the constraint span.
    let spec = f.wht();
    let mut formula_sum: i64 = 0;
    let mut alpha = 0u64;
    let mut sign_bits = 0u32;
    formula_sum += i64::from(spec.coeffs[0]);
    for z in 1u64..(1 << d) {
        let j = z.trailing_zeros() as usize;
        alpha ^= s[j].bits();
        sign_bits ^= u32::from(b[j]);
        let term = i64::from(spec.coeffs[alpha as usize]);
        formula_sum += if sign_bits & 1 == 1 { -term } else { term };
    }
    let by_formula = dyadic(i128::from(formula_sum), n as u32);
    assert_eq!(by_average, by_formula, "restriction constant: averaging vs alternating sum");

    Ok((restricted, by_average))
}

/// Total squared Fourier weight per Hamming weight of the character.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricProfile {
    pub weights: Vec<Rat>,
}

pub fn symmetric_profile(f: &BoolFun) -> SymmetricProfile {
    let spec = f.wht();
    let mut num = vec![0i128; f.n() + 1];
    for (i, &c) in spec.coeffs().iter().enumerate() {
        num[(i as u64).count_ones() as usize] += i128::from(c) * i128::from(c);
    }
    let den = 1i128 << (2 * f.n());
    SymmetricProfile { weights: num.into_iter().map(|p| Rat::new(p, den)).collect() }
}

pub fn is_symmetric(f: &BoolFun) -> bool {
    let mut class_value: Vec<Option<i8>> = vec![None; f.n() + 1];
    for x in 0..1u64 << f.n() {
        let k = x.count_ones() as usize;
        match class_value[k] {
            None => class_value[k] = Some(f.value(x)),
            Some(v) if v != f.value(x) => return false,
            _ => {}
        }
    }
    true
}

/// Distance to the closest parity: `(1 - max_a fhat(a)) / 2`, with the
/// maximizing character (ties broken by smallest packed value).
pub fn linear_distance(f: &BoolFun) -> (Rat, BitVec) {
    let spec = f.wht();
    let (best_idx, best_c) = spec
        .coeffs()
        .iter()
        .enumerate()
        .max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i)))
        .expect("nonempty spectrum");
    let eps = Rat::new(
        (1i128 << f.n()) - i128::from(*best_c),
        1i128 << (f.n() + 1),
    );
    (eps, BitVec::new(f.n().max(1), best_idx as u64).expect("index in range"))
}

/// Named function constructors.
///
/// Grammar: `parity:n`, `and:n`, `or:n`, `maj:n` (odd n), `maj3k:k`,
/// `addr:n` (n a power of two, arity `n + log2 n`), `ip:n` (even n),
/// `hamge:n:k`, `random:n:bias:seed`.
pub fn builtin(name: &str) -> Result<BoolFun> {
    let parts: Vec<&str> = name.split(':').collect();
    let parse_usize = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::UnknownBuiltin(name.to_string()))
    };
    match parts.as_slice() {
        ["parity", n] => {
            let n = parse_usize(n)?;
            BoolFun::from_bit_fn(n, |x| x.count_ones() % 2 == 1)
        }
        ["and", n] => {
            let n = parse_usize(n)?;
            let all = (1u64 << n) - 1;
            BoolFun::from_bit_fn(n, move |x| x == all)
        }
        ["or", n] => {
            let n = parse_usize(n)?;
            BoolFun::from_bit_fn(n, |x| x != 0)
        }
        ["maj", n] => {
            let n = parse_usize(n)?;
            if n % 2 == 0 {
                return Err(Error::EvenArity(n));
            }
            majority(n)
        }
        ["maj3k", k] => {
            let k = parse_usize(k)?;
            if k == 0 {
                return Err(Error::UnknownBuiltin(name.to_string()));
            }
            let maj3 = majority(3)?;
            let mut acc = maj3.clone();
            for _ in 1..k {
                acc = compose(&maj3, &acc)?;
            }
            Ok(acc)
        }
        ["addr", n] => {
            let n = parse_usize(n)?;
            if !n.is_power_of_two() || n < 2 {
                return Err(Error::UnknownBuiltin(name.to_string()));
            }
            let l = n.trailing_zeros() as usize;
            let arity = l + n;
            let addr_mask = (1u64 << l) - 1;
            // Address bits come first and are read LSB-first; address value a
            // selects the addressee with 1-based index a+1.
            BoolFun::from_bit_fn(arity, move |x| {
                let a = x & addr_mask;
                x >> (l as u64 + a) & 1 == 1
            })
        }
        ["ip", n] => {
            let n = parse_usize(n)?;
            if n % 2 != 0 || n == 0 {
                return Err(Error::UnknownBuiltin(name.to_string()));
            }
            BoolFun::from_bit_fn(n, move |x| {
                let mut acc = 0u32;
                for i in 0..n / 2 {
                    acc ^= (x >> (2 * i) & 1) as u32 & (x >> (2 * i + 1) & 1) as u32;
                }
                acc == 1
            })
        }
        ["hamge", n, k] => {
            let n = parse_usize(n)?;
            let k = parse_usize(k)?;
            BoolFun::from_bit_fn(n, move |x| x.count_ones() as usize >= k)
        }
        ["random", n, bias, seed] => {
            let n = parse_usize(n)?;
            let bias: f64 = bias.parse().map_err(|_| Error::UnknownBuiltin(name.to_string()))?;
            if !(0.0..=1.0).contains(&bias) {
                return Err(Error::UnknownBuiltin(name.to_string()));
            }
            let seed: u64 = seed.parse().map_err(|_| Error::UnknownBuiltin(name.to_string()))?;
            let mut rng = substream(seed, "builtin/random", 0);
            if n > MAX_ARITY {
                return Err(Error::ArityCap(format!("function arity capped at {MAX_ARITY}, got {n}")));
            }
            let table = (0..1u64 << n).map(|_| if rng.random_bool(bias) { -1 } else { 1 }).collect();
            BoolFun::from_table(n, table)
        }
        _ => Err(Error::UnknownBuiltin(name.to_string())),
    }
}

fn majority(n: usize) -> Result<BoolFun> {
    BoolFun::from_bit_fn(n, move |x| 2 * x.count_ones() as usize > n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn bv(s: &str) -> BitVec {
        s.parse().unwrap()
    }

    #[test]
    fn maj3_spectrum_is_plus_minus_four() {
        let f = builtin("maj3k:1").unwrap();
        let spec = f.wht();
        for (i, &c) in spec.coeffs().iter().enumerate() {
            let expected = match i {
                0b001 | 0b010 | 0b100 => 4,
                0b111 => -4,
                _ => 0,
            };
            assert_eq!(c, expected, "alpha index {i}");
        }
    }

    #[test]
    fn constant_and_character_spectra() {
        let one = BoolFun::from_table(3, vec![1; 8]).unwrap();
        let spec = one.wht();
        assert_eq!(spec.coeffs()[0], 8);
        assert!(spec.coeffs()[1..].iter().all(|&c| c == 0));

        let chi = BoolFun::from_bit_fn(4, |x| (x & 0b0110).count_ones() % 2 == 1).unwrap();
        let spec = chi.wht();
        for (i, &c) in spec.coeffs().iter().enumerate() {
            assert_eq!(c, if i == 0b0110 { 16 } else { 0 });
        }
    }

    #[test]
    fn wht_round_trips() {
        for name in ["maj3k:2", "addr:4", "ip:6", "hamge:5:3", "random:7:0.3:42"] {
            let f = builtin(name).unwrap();
            assert_eq!(f.wht().inverse().unwrap(), f, "{name}");
        }
    }

    #[test]
    fn parseval_exact_for_builtins_and_random() {
        for name in ["parity:6", "and:4", "or:5", "maj:7", "maj3k:2", "addr:8", "ip:8", "hamge:9:4"] {
            assert!(builtin(name).unwrap().wht().parseval_holds(), "{name}");
        }
        for seed in 0..20 {
            let f = builtin(&format!("random:8:0.5:{seed}")).unwrap();
            assert!(f.wht().parseval_holds());
        }
    }

    #[test]
    fn coefficients_share_parity_with_table_size() {
        let f = builtin("random:6:0.4:7").unwrap();
        for &c in f.wht().coeffs() {
            assert_eq!(c.rem_euclid(2), 0);
        }
    }

    #[test]
    fn shift_by_zero_is_identity_and_character_shift_scales() {
        let f = builtin("maj3k:2").unwrap();
        assert_eq!(shift(&f, &BitVec::zero(9)).unwrap(), f);

        let chi = builtin("parity:4").unwrap();
        let shifted = shift(&chi, &bv("1000")).unwrap();
        // chi_S(z) = -1 here, so the shifted character is the negation.
        for x in 0..16u64 {
            assert_eq!(shifted.value(x), -chi.value(x));
        }
    }

    #[test]
    fn shift_law_on_spectrum() {
        // Oracle: shifting permutes the table; the spectrum picks up the sign
        // (-1)^{gamma.z}.
        let f = builtin("maj3k:1").unwrap();
        let z = bv("100");
        let direct = {
            let table = (0..8).map(|x| f.value(x ^ z.bits())).collect();
            BoolFun::from_table(3, table).unwrap()
        };
        let shifted = shift(&f, &z).unwrap();
        assert_eq!(shifted, direct);
        let base = f.wht();
        let spec = shifted.wht();
        for i in 0..8u64 {
            let gamma = BitVec::new(3, i).unwrap();
            let sign = i32::from(gamma.chi(&z));
            assert_eq!(spec.coeffs()[i as usize], sign * base.coeffs()[i as usize]);
        }
    }

    #[test]
    fn shift_law_random_functions() {
        for seed in 0..10u64 {
            let f = builtin(&format!("random:8:0.5:{seed}")).unwrap();
            let z = BitVec::new(8, (seed * 37 + 5) % 256).unwrap();
            let base = f.wht();
            let spec = shift(&f, &z).unwrap().wht();
            for i in 0..256u64 {
                let gamma = BitVec::new(8, i).unwrap();
                assert_eq!(spec.coeffs()[i as usize], i32::from(gamma.chi(&z)) * base.coeffs()[i as usize]);
            }
        }
    }

    #[test]
    fn convolution_of_characters() {
        let chi_s = builtin("parity:3").unwrap(); // S = 111
        let conv = convolve(&chi_s, &chi_s).unwrap();
        for x in 0..8u64 {
            assert_eq!(conv.value(x), Rat::from_integer(i128::from(chi_s.value(x))));
        }
        let chi_t = BoolFun::from_bit_fn(3, |x| x & 1 == 1).unwrap(); // T = 100
        let conv = convolve(&chi_s, &chi_t).unwrap();
        for x in 0..8u64 {
            assert_eq!(conv.value(x), Rat::from_integer(0));
        }
    }

    #[test]
    fn convolution_spectrum_is_pointwise_product() {
        // Direct double-sum oracle at n=3, then the spectral law at n<=8.
        let f = builtin("maj3k:1").unwrap();
        let conv = convolve(&f, &f).unwrap();
        for x in 0..8u64 {
            let direct: i64 = (0..8u64).map(|y| i64::from(f.value(y)) * i64::from(f.value(x ^ y))).sum();
            assert_eq!(conv.value(x), rat(i128::from(direct), 8));
        }
        let scaled = conv.scaled_spectrum();
        let spec = f.wht();
        for i in 0..8 {
            let c = i128::from(spec.coeffs()[i]);
            assert_eq!(scaled[i], c * c);
        }

        for seed in 0..5u64 {
            let g = builtin(&format!("random:8:0.5:{seed}")).unwrap();
            let h = builtin(&format!("random:8:0.5:{}", seed + 100)).unwrap();
            let conv = convolve(&g, &h).unwrap();
            let scaled = conv.scaled_spectrum();
            let (sg, sh) = (g.wht(), h.wht());
            for i in 0..256 {
                assert_eq!(scaled[i], i128::from(sg.coeffs()[i]) * i128::from(sh.coeffs()[i]));
            }
        }
    }

    #[test]
    fn parity_composes_to_parity() {
        let p2 = builtin("parity:2").unwrap();
        let p4 = builtin("parity:4").unwrap();
        assert_eq!(compose(&p2, &p2).unwrap(), p4);
    }

    #[test]
    fn compose_with_single_identity_is_identity() {
        let f = builtin("maj:5").unwrap();
        let id1 = builtin("parity:1").unwrap();
        assert_eq!(compose(&f, &id1).unwrap(), f);
    }

    #[test]
    fn recursive_majority_matches_recursive_evaluator() {
        // Independent oracle: evaluate the ternary majority tree per input.
        fn tree(x: u64, size: usize) -> bool {
            if size == 1 {
                return x & 1 == 1;
            }
            let third = size / 3;
            let mask = (1u64 << third) - 1;
            let votes = (0..3)
                .map(|i| u8::from(tree(x >> (i * third) & mask, third)))
                .sum::<u8>();
            votes >= 2
        }
        let f = builtin("maj3k:2").unwrap();
        for x in 0..1u64 << 9 {
            assert_eq!(f.value(x) == -1, tree(x, 9), "x={x}");
        }
    }

    #[test]
    fn restrict_coset_examples() {
        let f = builtin("maj3k:1").unwrap();
        // No constraints returns f and its mean.
        let (same, c) = restrict_coset(&f, &[], &[]).unwrap();
        assert_eq!(same, f);
        assert_eq!(c, rat(0, 1));

        // Maj3 restricted to x1 = 0 has mean 1/2.
        let (_, c) = restrict_coset(&f, &[bv("100")], &[false]).unwrap();
        assert_eq!(c, rat(1, 2));

        // A character restricted to its own level set is constant 1.
        let chi = builtin("parity:4").unwrap();
        let (restricted, c) = restrict_coset(&chi, &[bv("1111")], &[false]).unwrap();
        assert_eq!(c, rat(1, 1));
        assert!(restricted.table().iter().all(|&v| v == 1));

        // Dependent constraints are rejected.
        let err = restrict_coset(&f, &[bv("110"), bv("110")], &[false, false]);
        assert!(matches!(err, Err(Error::DependentConstraints)));
    }

    #[test]
    fn restriction_agrees_with_direct_filter() {
        let f = builtin("random:6:0.5:3").unwrap();
        let s = [bv("110000"), bv("001100")];
        let b = [true, false];
        let (restricted, constant) = restrict_coset(&f, &s, &b).unwrap();
        // Direct oracle: average f over the coset.
        let mut values = Vec::new();
        for x in 0..64u64 {
            let xv = BitVec::new(6, x).unwrap();
            if s.iter().zip(b.iter()).all(|(si, &bi)| si.dot(&xv) == bi) {
                values.push(i64::from(f.value(x)));
            }
        }
        assert_eq!(values.len(), 16);
        assert_eq!(constant, rat(values.iter().sum::<i64>() as i128, 16));
        let mut restr_sorted: Vec<i8> = restricted.table().to_vec();
        restr_sorted.sort_unstable();
        let mut direct_sorted: Vec<i8> = values.iter().map(|&v| v as i8).collect();
        direct_sorted.sort_unstable();
        assert_eq!(restr_sorted, direct_sorted);
    }

    #[test]
    fn builtin_conventions() {
        assert_eq!(builtin("maj3k:1").unwrap(), builtin("maj:3").unwrap());

        // addr:4 with address (x1,x2) = (1,0) reads y_2.
        let addr = builtin("addr:4").unwrap();
        let x = 0b1001u64; // x1 = 1, y2 = 1
        assert_eq!(addr.value(x), -1);
        assert_eq!(addr.value(0b0001), 1); // address 1 reads y_2 = 0

        let ip = builtin("ip:4").unwrap();
        assert_eq!(ip.value(0b1111), 1);
        assert_eq!(ip.value(0b0011), -1);

        assert!(builtin("maj:4").is_err());
        assert!(builtin("addr:3").is_err());
        assert!(builtin("ip:5").is_err());
        assert!(builtin("nope:3").is_err());
        assert!(builtin("maj3k:3").is_err()); // arity 27 exceeds the cap
    }

    #[test]
    fn symmetric_profile_examples() {
        let parity = builtin("parity:5").unwrap();
        let prof = symmetric_profile(&parity);
        for (k, w) in prof.weights.iter().enumerate() {
            assert_eq!(*w, if k == 5 { rat(1, 1) } else { rat(0, 1) });
        }

        let maj3 = builtin("maj:3").unwrap();
        let prof = symmetric_profile(&maj3);
        assert_eq!(prof.weights[1], rat(3, 4));
        assert_eq!(prof.weights[3], rat(1, 4));

        assert!(is_symmetric(&maj3));
        assert!(is_symmetric(&builtin("hamge:6:2").unwrap()));
        assert!(!is_symmetric(&builtin("addr:4").unwrap()));
    }

    #[test]
    fn symmetric_profile_sums_to_one() {
        for name in ["maj:7", "hamge:8:3", "parity:6", "random:7:0.5:1"] {
            let prof = symmetric_profile(&builtin(name).unwrap());
            let total: Rat = prof.weights.iter().sum();
            assert_eq!(total, rat(1, 1), "{name}");
        }
    }

    #[test]
    fn majority_profile_matches_power_law() {
        // w_k ~ xi k^{-3/2} on odd k <= n/2 (the asymptotic regime; near
        // k = n the power law does not apply). Exact small-k values frozen
        // from the transform.
        let f = builtin("maj:11").unwrap();
        let prof = symmetric_profile(&f);
        assert_eq!(prof.weights[1], rat(43659, 65536));
        assert_eq!(prof.weights[3], rat(8085, 65536));
        assert_eq!(prof.weights[5], rat(2079, 32768));
        let xi = (2.0 / std::f64::consts::PI).powf(1.5);
        for k in [1usize, 3, 5] {
            let w = crate::rat::rat_to_f64(&prof.weights[k]);
            let ratio = w * (k as f64).powf(1.5) / xi;
            assert!(
                (ratio - 1.0).abs() <= 0.5 + 1.0 / k as f64,
                "k={k}: ratio {ratio}"
            );
        }
        for k in (0..=10usize).step_by(2) {
            assert_eq!(prof.weights[k], rat(0, 1), "even weights vanish");
        }
    }

    #[test]
    fn linear_distance_examples() {
        let chi = builtin("parity:4").unwrap();
        let (eps, alpha) = linear_distance(&chi);
        assert_eq!(eps, rat(0, 1));
        assert_eq!(alpha, bv("1111"));

        let maj3 = builtin("maj:3").unwrap();
        let (eps, _) = linear_distance(&maj3);
        assert_eq!(eps, rat(1, 4));

        // Character with one flipped entry: distance 1/16 at n=4.
        let mut table: Vec<i8> = (0..16u64).map(|x| if x & 1 == 1 { -1 } else { 1 }).collect();
        table[0] = -table[0];
        let f = BoolFun::from_table(4, table).unwrap();
        let (eps, alpha) = linear_distance(&f);
        assert_eq!(eps, rat(1, 16));
        assert_eq!(alpha, bv("1000"));
    }

    #[test]
    fn truth_table_text_round_trip() {
        let f = builtin("maj:3").unwrap();
        let text = f.to_text();
        assert_eq!(text, "n=3\n00010111\n");
        assert_eq!(BoolFun::from_text(&text).unwrap(), f);
        assert!(BoolFun::from_text("n=2\n010\n").is_err());
        assert!(BoolFun::from_text("m=2\n0101\n").is_err());
    }

    #[test]
    fn recursive_majority_spectrum_monotone_on_odd_support_sets() {
        // Coefficient magnitudes decrease under inclusion among odd sets of
        // the support. The unrestricted form is false: {1,2,4} is an
        // odd-size subset of the support set {1,2,3,4,7} but carries a zero
        // coefficient (its first-block intersection has even size).
        let f = builtin("maj3k:2").unwrap();
        let spec = f.wht();
        assert_eq!(spec.coeffs()[0b0001011], 0);
        assert_ne!(spec.coeffs()[0b1001111], 0);
        for z2 in 0..512u64 {
            if z2.count_ones() % 2 == 0 || spec.coeffs()[z2 as usize] == 0 {
                continue;
            }
            let c2 = spec.coeffs()[z2 as usize].abs();
            for z1 in 0..512u64 {
                if z1 & !z2 != 0 || z1.count_ones() % 2 == 0 || spec.coeffs()[z1 as usize] == 0 {
                    continue;
                }
                let c1 = spec.coeffs()[z1 as usize].abs();
                assert!(c1 >= c2, "|c({z1:b})| < |c({z2:b})|");
            }
        }
    }
}
