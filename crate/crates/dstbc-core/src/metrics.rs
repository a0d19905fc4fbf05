//! Rate, delay, and training overhead for both schemes, kept as exact
//! rationals so table values can be compared without rounding.

use std::fmt;

use crate::design::Scheme;
use crate::error::{Error, Result};

/// Unreduced rational number. Equality compares values, not
/// representations, so `4/8 == 1/2` while both display verbatim.
#[derive(Clone, Copy, Debug)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Rational {
        assert!(den != 0, "zero denominator");
        Rational { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Rational) -> bool {
        self.num as u128 * other.den as u128 == other.num as u128 * self.den as u128
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{}/{}", self.num, self.den)
    }
}

fn check_exponent(a: u32) -> Result<()> {
    if (1..=32).contains(&a) {
        Ok(())
    } else {
        Err(Error::Config(format!("exponent {a} outside 1..=32")))
    }
}

/// Symbols per channel use for the single-block scheme with `2^a` relays:
/// `a+1` information symbols over the broadcast plus the relay phase.
pub fn rate_tecod(a: u32) -> Result<Rational> {
    check_exponent(a)?;
    let k = 1u64 << a;
    let info = a as u64 + 1;
    let zeros = k - info;
    let train_sent = zeros.div_ceil(2);
    Ok(Rational::new(info, info + train_sent + k))
}

/// Symbols per channel use for the block-diagonal scheme with `2^a`
/// relays: `2a` information symbols over the same two phases.
pub fn rate_teciod(a: u32) -> Result<Rational> {
    check_exponent(a)?;
    let k = 1u64 << a;
    let info = 2 * a as u64;
    let zeros = (k / 2) - a as u64;
    let train_sent = zeros.div_ceil(2);
    Ok(Rational::new(info, info + train_sent + k))
}

/// Total channel uses per codeword (both phases); the denominator of the
/// rate.
pub fn delay_total(scheme: Scheme, a: u32) -> Result<u64> {
    let rate = match scheme {
        Scheme::TeCod => rate_tecod(a)?,
        Scheme::TeCiod => rate_teciod(a)?,
    };
    Ok(rate.den)
}

/// Training channel uses per information symbol for the single-block
/// scheme: broadcast training plus embedded copies over the symbol count.
pub fn training_overhead_tecod(a: u32) -> Result<Rational> {
    check_exponent(a)?;
    let k = 1u64 << a;
    let info = a as u64 + 1;
    let copies = k - info;
    Ok(Rational::new(copies.div_ceil(2) + copies, info))
}
