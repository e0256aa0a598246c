//! One-way communication games for XOR-functions: the sender's message is a
//! function of `x`, the receiver decodes from the message and `y`, and the
//! target is `f(x + y)`. All error probabilities here are exact dyadic
//! rationals.

use crate::boolfn::{butterfly, linear_distance, BoolFun};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::rat::{parse_rat, rat_string, Rat};
use crate::sketch::{ConcreteSketch, SketchScheme};
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A deterministic one-way protocol: a `c`-bit message table over the
/// sender's input and a decoder.
#[derive(Clone, Debug)]
pub struct OneWayProtocol {
    pub c: usize,
    pub message: Vec<u32>,
    pub decoders: ProtocolDecoders,
}

#[derive(Clone, Debug)]
pub enum ProtocolDecoders {
    /// Full decoder table indexed by `y * 2^c + message`.
    Explicit(Vec<i8>),
    /// Decode by applying a concrete sketch decoder to
    /// `message XOR sketch(y)`.
    Sketch(ConcreteSketch),
    /// Majority of the bitwise XOR of the message with the first `prefix`
    /// bits of `y`; ties resolve to +1.
    MajorityXor { prefix: usize },
}

impl OneWayProtocol {
    pub fn n(&self) -> usize {
        self.message.len().trailing_zeros() as usize
    }

    pub fn decode(&self, y: u64, msg: u32) -> i8 {
        match &self.decoders {
            ProtocolDecoders::Explicit(t) => t[(y as usize) << self.c | msg as usize],
            ProtocolDecoders::Sketch(cs) => cs.decode(u64::from(msg) ^ cs.apply(y)),
            ProtocolDecoders::MajorityXor { prefix } => {
                let mask = (1u64 << prefix) - 1;
                let ones = (u64::from(msg) ^ (y & mask)).count_ones() as usize;
                if 2 * ones > *prefix {
                    -1
                } else {
                    1
                }
            }
        }
    }
}

/// Input distribution of the game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairDistribution {
    /// Independent uniform `x` and `y`.
    Uniform,
    /// Uniform `y`; `x` equals `y + z` with probability 1/2 and is uniform
    /// otherwise.
    PlantedShift { z: BitVec },
}

/// Canonical planted shift for a non-linear function: the smallest input
/// where the function differs from its closest parity.
pub fn planted_shift_for(f: &BoolFun) -> Result<PairDistribution> {
    let (_, s_star) = linear_distance(f);
    let chi = |x: u64| -> i8 { if (s_star.bits() & x).count_ones() % 2 == 1 { -1 } else { 1 } };
    let z = (0..1u64 << f.n())
        .find(|&x| f.value(x) != chi(x))
        .ok_or_else(|| Error::DimensionOutOfRange("planted shift needs a non-linear function".into()))?;
    Ok(PairDistribution::PlantedShift { z: BitVec::new(f.n(), z)? })
}

/// Wrap one sampled sketch as a protocol: the sender transmits the sketch of
/// `x`, and linearity turns `message XOR sketch(y)` into the sketch of
/// `x + y`.
pub fn protocol_from_sketch(
    scheme: &SketchScheme,
    sample_index: u64,
    caps: &Caps,
) -> Result<OneWayProtocol> {
    let k = scheme.k();
    let n = scheme.n();
    if k > 20 {
        return Err(Error::WidthCap(format!("protocol message capped at 20 bits, got {k}")));
    }
    if n > caps.comm_arity.max(16) {
        return Err(Error::ArityCap(format!("message table enumerates 2^{n} inputs")));
    }
    let concrete = scheme.sample(sample_index);
    let message = (0..1u64 << n).map(|x| concrete.apply(x) as u32).collect();
    Ok(OneWayProtocol { c: k, message, decoders: ProtocolDecoders::Sketch(concrete) })
}

/// Exact error of a protocol under the given pair distribution.
pub fn exact_error(
    p: &OneWayProtocol,
    f: &BoolFun,
    mu: &PairDistribution,
    caps: &Caps,
) -> Result<Rat> {
    let n = f.n();
    if n > caps.comm_arity {
        return Err(Error::ArityCap(format!(
            "exact protocol evaluation capped at n<={}, got {n}",
            caps.comm_arity
        )));
    }
    if p.message.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!(
            "protocol message table has {} entries, expected 2^{n}",
            p.message.len()
        )));
    }
    let size = 1u64 << n;
    match mu {
        PairDistribution::Uniform => {
            let wrong: u64 = (0..size)
                .into_par_iter()
                .map(|y| {
                    (0..size)
                        .filter(|&x| p.decode(y, p.message[x as usize]) != f.value(x ^ y))
                        .count() as u64
                })
                .sum();
            Ok(Rat::new(wrong as i128, 1i128 << (2 * n)))
        }
        PairDistribution::PlantedShift { z } => {
            if z.n() != n {
                return Err(Error::DimensionMismatch("shift arity mismatch".into()));
            }
            let zb = z.bits();
            // Weight 2^n on the planted x = y + z, weight 1 on each uniform
            // x, all over the denominator 2^{2n+1}.
            let weighted: u64 = (0..size)
                .into_par_iter()
                .map(|y| {
                    let mut acc = 0u64;
                    for x in 0..size {
                        if p.decode(y, p.message[x as usize]) != f.value(x ^ y) {
                            acc += 1 + if x == (y ^ zb) { size } else { 0 };
                        }
                    }
                    acc
                })
                .sum();
            Ok(Rat::new(weighted as i128, 1i128 << (2 * n + 1)))
        }
    }
}

/// Error of a message function under per-(message, y) optimal decoding: the
/// receiver always answers with the conditional majority, so this is the
/// minimum of `exact_error` over every decoder table.
pub fn optimal_rectangle_error(message: &[u32], c: usize, f: &BoolFun, caps: &Caps) -> Result<Rat> {
    optimal_error_under(message, c, f, &PairDistribution::Uniform, caps)
}

pub fn optimal_error_under(
    message: &[u32],
    c: usize,
    f: &BoolFun,
    mu: &PairDistribution,
    caps: &Caps,
) -> Result<Rat> {
    let n = f.n();
    if n > caps.comm_arity {
        return Err(Error::ArityCap(format!(
            "exact protocol evaluation capped at n<={}, got {n}",
            caps.comm_arity
        )));
    }
    if message.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!(
            "message table has {} entries, expected 2^{n}",
            message.len()
        )));
    }
    let size = 1u64 << n;
    let planted: Option<u64> = match mu {
        PairDistribution::Uniform => None,
        PairDistribution::PlantedShift { z } => Some(z.bits()),
    };
    let wrong: u64 = (0..size)
        .into_par_iter()
        .map(|y| {
            let mut neg = vec![0u64; 1 << c];
            let mut pos = vec![0u64; 1 << c];
            for x in 0..size {
                let w = match planted {
                    Some(zb) if x == (y ^ zb) => 1 + size,
                    Some(_) => 1,
                    None => 1,
                };
                if f.value(x ^ y) == -1 {
                    neg[message[x as usize] as usize] += w;
                } else {
                    pos[message[x as usize] as usize] += w;
                }
            }
            neg.iter().zip(pos.iter()).map(|(&a, &b)| a.min(b)).sum::<u64>()
        })
        .sum();
    let log_den = match planted {
        None => 2 * n,
        Some(_) => 2 * n + 1,
    };
    Ok(Rat::new(wrong as i128, 1i128 << log_den))
}

/// Exhaustive search over all `2^{2^n}` one-bit messages, with optimal
/// decoding, returning the minimum error and the first message attaining it
/// (messages ordered as packed truth tables).
pub fn best_one_bit_error(
    f: &BoolFun,
    mu: &PairDistribution,
    caps: &Caps,
) -> Result<(Rat, u64)> {
    let n = f.n();
    if n > caps.onebit_arity {
        return Err(Error::ArityCap(format!(
            "one-bit message search capped at n<={}, got {n}",
            caps.onebit_arity
        )));
    }
    let size = 1u64 << n;
    let total = 1u64 << size;
    let planted: Option<u64> = match mu {
        PairDistribution::Uniform => None,
        PairDistribution::PlantedShift { z } => Some(z.bits()),
    };
    let log_den = match planted {
        None => 2 * n,
        Some(_) => 2 * n + 1,
    };
    let (wrong, witness) = (0..total)
        .into_par_iter()
        .map(|m| (one_bit_weighted_wrong(f, m, planted), m))
        .min()
        .expect("nonempty search");
    Ok((Rat::new(wrong as i128, 1i128 << log_den), witness))
}

/// Optimally-decoded weighted error count for a one-bit message given as a
/// packed truth table. Agrees with [`optimal_error_under`] at c = 1 (checked
/// in tests); kept separate so the exhaustive search stays allocation-free.
fn one_bit_weighted_wrong(f: &BoolFun, m: u64, planted: Option<u64>) -> u64 {
    let size = 1u64 << f.n();
    let mut wrong = 0u64;
    for y in 0..size {
        let mut side = [[0u64; 2]; 2]; // [message bit][value sign]
        for x in 0..size {
            let w = match planted {
                Some(zb) if x == (y ^ zb) => 1 + size,
                _ => 1,
            };
            let bit = (m >> x & 1) as usize;
            let v = usize::from(f.value(x ^ y) == -1);
            side[bit][v] += w;
        }
        wrong += side[0][0].min(side[0][1]) + side[1][0].min(side[1][1]);
    }
    wrong
}

/// Exact check of the planted-distribution estimator bound: for every
/// one-bit (sign-valued) message `M`,
/// `E_y |E_{x ~ D_y}[M(x) f(x+y)]| <= (sqrt(2)/2)(1 + eps)` where `eps` is
/// the distance of `f` from linear. Comparisons square both sides and stay
/// in exact rationals.
pub fn planted_estimator_bound(f: &BoolFun, z: &BitVec, caps: &Caps) -> Result<(Rat, bool)> {
    let n = f.n();
    if n > caps.onebit_arity {
        return Err(Error::ArityCap(format!(
            "estimator bound check capped at n<={}, got {n}",
            caps.onebit_arity
        )));
    }
    let size = 1usize << n;
    let (eps, _) = linear_distance(f);
    let rhs_sq = (Rat::one() + eps.clone()) * (Rat::one() + eps) / Rat::from_integer(2);
    let fz = i64::from(f.value(z.bits()));
    let cf: Vec<i64> = {
        let spec = f.wht();
        spec.coeffs().iter().map(|&c| i64::from(c)).collect()
    };
    let zb = z.bits();

    let worst = (0..1u64 << size)
        .into_par_iter()
        .map(|m| {
            // corr[y] = sum_x M(x) f(x+y), via the product of spectra.
            let mut buf: Vec<i64> = (0..size).map(|x| if m >> x & 1 == 1 { -1 } else { 1 }).collect();
            butterfly(&mut buf);
            for (slot, &c) in buf.iter_mut().zip(cf.iter()) {
                *slot *= c;
            }
            butterfly(&mut buf);
            let mut total: i64 = 0;
            for (y, &scaled) in buf.iter().enumerate() {
                let corr = scaled >> n;
                let m_at = if m >> ((y as u64 ^ zb) as usize) & 1 == 1 { -1i64 } else { 1 };
                total += ((1i64 << n) * m_at * fz + corr).abs();
            }
            total
        })
        .max()
        .expect("nonempty");
    // E_y|E_x[..]| = worst / 2^{2n+1}.
    let lhs = Rat::new(i128::from(worst), 1i128 << (2 * n + 1));
    let ok = lhs.clone() * lhs.clone() <= rhs_sq;
    Ok((lhs, ok))
}

/// The `(n-1)`-bit protocol for odd majority: send all but the last
/// coordinate; the receiver takes the majority of the coordinate XORs and
/// errs only on ties.
pub fn trivial_majority_protocol(n: usize, caps: &Caps) -> Result<OneWayProtocol> {
    if n % 2 == 0 {
        return Err(Error::EvenArity(n));
    }
    if n > caps.comm_arity {
        return Err(Error::ArityCap(format!(
            "protocol table capped at n<={}, got {n}",
            caps.comm_arity
        )));
    }
    let mask = (1u64 << (n - 1)) - 1;
    let message = (0..1u64 << n).map(|x| (x & mask) as u32).collect();
    Ok(OneWayProtocol {
        c: n - 1,
        message,
        decoders: ProtocolDecoders::MajorityXor { prefix: n - 1 },
    })
}

pub const PROTOCOL_FORMAT: u32 = 1;

/// Serialized protocol: the message table is hex-packed with a fixed digit
/// width per entry; the decoder table (bit = 1 means -1) is optional, and
/// absent tables are evaluated with optimal decoding.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ProtocolFile {
    pub format: u32,
    pub n: usize,
    pub c: usize,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoders: Option<String>,
}

impl OneWayProtocol {
    pub fn to_file(&self) -> Result<ProtocolFile> {
        let n = self.n();
        let digits = self.c.div_ceil(4).max(1);
        let mut message = String::with_capacity(self.message.len() * digits);
        for &m in &self.message {
            message.push_str(&format!("{m:0digits$x}"));
        }
        let decoders = match &self.decoders {
            ProtocolDecoders::Explicit(t) => {
                let mut bytes = vec![0u8; t.len().div_ceil(8)];
                for (i, &v) in t.iter().enumerate() {
                    if v == -1 {
                        bytes[i / 8] |= 1 << (i % 8);
                    }
                }
                Some(bytes.iter().map(|b| format!("{b:02x}")).collect())
            }
            ProtocolDecoders::MajorityXor { .. } | ProtocolDecoders::Sketch(_) => {
                if n + self.c <= 24 {
                    let mut bytes = vec![0u8; (1usize << (n + self.c)).div_ceil(8)];
                    for y in 0..1u64 << n {
                        for m in 0..1u32 << self.c {
                            if self.decode(y, m) == -1 {
                                let idx = (y as usize) << self.c | m as usize;
                                bytes[idx / 8] |= 1 << (idx % 8);
                            }
                        }
                    }
                    Some(bytes.iter().map(|b| format!("{b:02x}")).collect())
                } else {
                    None
                }
            }
        };
        Ok(ProtocolFile { format: PROTOCOL_FORMAT, n, c: self.c, message, decoders })
    }

    pub fn from_file(file: &ProtocolFile) -> Result<(OneWayProtocol, bool)> {
        if file.format != PROTOCOL_FORMAT {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unsupported protocol format {}", file.format),
            });
        }
        let digits = file.c.div_ceil(4).max(1);
        let expected = (1usize << file.n) * digits;
        if file.message.len() != expected {
            return Err(Error::Parse {
                line: 0,
                msg: format!("message hex has {} digits, expected {expected}", file.message.len()),
            });
        }
        let chars: Vec<char> = file.message.chars().collect();
        let mut message = Vec::with_capacity(1 << file.n);
        for chunk in chars.chunks(digits) {
            let s: String = chunk.iter().collect();
            let v = u32::from_str_radix(&s, 16)
                .map_err(|_| Error::Parse { line: 0, msg: format!("bad message hex '{s}'") })?;
            if file.c < 32 && v >> file.c != 0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("message value {v:#x} exceeds {} bits", file.c),
                });
            }
            message.push(v);
        }
        let (decoders, has_decoders) = match &file.decoders {
            Some(hex) => {
                let len = 1usize << (file.n + file.c);
                let mut bytes = Vec::with_capacity(hex.len() / 2);
                let hchars: Vec<char> = hex.chars().collect();
                for pair in hchars.chunks(2) {
                    let s: String = pair.iter().collect();
                    bytes.push(u8::from_str_radix(&s, 16).map_err(|_| Error::Parse {
                        line: 0,
                        msg: format!("bad decoder hex '{s}'"),
                    })?);
                }
                if bytes.len() != len.div_ceil(8) {
                    return Err(Error::Parse { line: 0, msg: "decoder length mismatch".into() });
                }
                let table = (0..len)
                    .map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { -1 } else { 1 })
                    .collect();
                (ProtocolDecoders::Explicit(table), true)
            }
            None => (ProtocolDecoders::Explicit(Vec::new()), false),
        };
        Ok((OneWayProtocol { c: file.c, message, decoders }, has_decoders))
    }
}

/// Parse a distribution name as used by the command line: `uniform`, or the
/// planted-shift family `sec7[:z]` with `z` defaulting to the canonical
/// choice for the function.
pub fn parse_distribution(name: &str, f: &BoolFun) -> Result<PairDistribution> {
    match name {
        "uniform" => Ok(PairDistribution::Uniform),
        "sec7" => planted_shift_for(f),
        other => {
            if let Some(zs) = other.strip_prefix("sec7:") {
                let z: BitVec = zs.parse()?;
                if z.n() != f.n() {
                    return Err(Error::DimensionMismatch("shift arity mismatch".into()));
                }
                return Ok(PairDistribution::PlantedShift { z });
            }
            if let Some(r) = parse_rat(other) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("unknown distribution '{}'", rat_string(&r)),
                });
            }
            Err(Error::Parse { line: 0, msg: format!("unknown distribution '{other}'") })
        }
    }
}


#[cfg(test)]
mod kernel_tests {
    use super::*;
    use crate::boolfn::builtin;

    #[test]
    fn one_bit_kernel_agrees_with_general_decoder() {
        let caps = Caps::default();
        for (name, dist) in [("maj:3", "uniform"), ("maj:3", "sec7"), ("random:3:0.5:1", "uniform")] {
            let f = builtin(name).unwrap();
            let mu = parse_distribution(dist, &f).unwrap();
            let planted = match &mu {
                PairDistribution::Uniform => None,
                PairDistribution::PlantedShift { z } => Some(z.bits()),
            };
            let log_den = if planted.is_some() { 2 * f.n() + 1 } else { 2 * f.n() };
            for m in (0..256u64).step_by(7) {
                let message: Vec<u32> = (0..8).map(|x| (m >> x & 1) as u32).collect();
                let general = optimal_error_under(&message, 1, &f, &mu, &caps).unwrap();
                let fast = Rat::new(one_bit_weighted_wrong(&f, m, planted) as i128, 1i128 << log_den);
                assert_eq!(general, fast, "{name} {dist} m={m}");
            }
        }
    }
}
