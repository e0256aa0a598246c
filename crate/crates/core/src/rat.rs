//! Exact rational arithmetic helpers.
//!
//! Every spectral weight in this crate is a sum of terms `c^2 / 4^n` with
//! `n <= 26`, so numerators stay below `2^52` and `i128` cross products never
//! overflow.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

pub type Rat = Ratio<i128>;

pub fn rat(num: i128, den: i128) -> Rat {
    Ratio::new(num, den)
}

/// `num / 2^log2_den`.
pub fn dyadic(num: i128, log2_den: u32) -> Rat {
    Ratio::new(num, 1i128 << log2_den)
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Lossless "p/q" rendering used by every JSON report.
pub fn rat_string(r: &Rat) -> String {
    if r.denom() == &1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().ok()?;
        let q: i128 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Ratio::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: i128 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        if frac.is_empty() {
            return Some(Ratio::from_integer(int));
        }
        let digits: i128 = frac.parse().ok()?;
        if digits < 0 {
            return None;
        }
        let den = 10i128.checked_pow(frac.len() as u32)?;
        let frac_part = Ratio::new(digits, den);
        let int_part = Ratio::from_integer(int);
        return Some(if neg { int_part - frac_part } else { int_part + frac_part });
    }
    let int: i128 = s.parse().ok()?;
    Some(Ratio::from_integer(int))
}

/// Smallest k with 2^k >= r, for r > 0.
pub fn ceil_log2(r: &Rat) -> u32 {
    assert!(r > &Rat::zero());
    let mut k = 0u32;
    let mut pow = Rat::one();
    while &pow < r {
        pow *= Rat::from_integer(2);
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rat("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rat("0.125"), Some(rat(1, 8)));
        assert_eq!(parse_rat("-0.5"), Some(rat(-1, 2)));
        assert_eq!(parse_rat("2"), Some(rat(2, 1)));
        assert_eq!(parse_rat("1/0"), None);
    }

    #[test]
    fn ceil_log2_matches_definition() {
        assert_eq!(ceil_log2(&rat(1, 1)), 0);
        assert_eq!(ceil_log2(&rat(144, 1)), 8);
        assert_eq!(ceil_log2(&rat(129, 1)), 8);
        assert_eq!(ceil_log2(&rat(128, 1)), 7);
        assert_eq!(ceil_log2(&rat(1, 3)), 0);
    }

    #[test]
    fn renders_integers_without_denominator() {
        assert_eq!(rat_string(&rat(4, 2)), "2");
        assert_eq!(rat_string(&rat(3, 4)), "3/4");
    }
}
