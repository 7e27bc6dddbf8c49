//! Exact rational construction of the Strichartz exponent system
//! `(β, q0, r0, q1, r1)` used in the local theory.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("power {0} must exceed 1")]
    InvalidPower(Box<BigRational>),
    #[error("not H1-subcritical: 1/(p-1) = {inverse} <= (n-2)/4 = {bound}")]
    NotH1Subcritical { inverse: Box<BigRational>, bound: Box<BigRational> },
    #[error("no admissible r0 found within {0} candidates")]
    NoAdmissibleR0(u64),
    #[error("cannot parse '{0}' as a rational")]
    Parse(String),
}

/// Search limit for the `r0` candidates `max(p+1, 2) + k`.
const MAX_CANDIDATES: u64 = 1_000_000;

/// Names of the relations checked by [`verify_exponents`], in order.
pub const RELATION_NAMES: [&str; 5] = [
    "scaling",
    "shifted_scaling",
    "space_gap",
    "time_gap",
    "above_energy_power",
];

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
fn frac(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Parses `"7/3"`, `"-2"`, or a finite decimal such as `"2.75"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, ExponentError> {
    let err = || ExponentError::Parse(text.to_string());
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, fraction) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && fraction.is_empty())
        || !int.chars().chain(fraction.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{int}{fraction}");
    let num: BigInt = digits.parse().map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10), fraction.len());
    let value = BigRational::new(num, den);
    Ok(if negative { -value } else { value })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subcriticality {
    pub h1_subcritical: bool,
    pub l2_subcritical: bool,
    /// `s_c = n/2 - 2/(p-1)`.
    pub s_c: BigRational,
}

pub fn check_subcritical(n: u32, p: &BigRational) -> Result<Subcriticality, ExponentError> {
    if n == 0 {
        return Err(ExponentError::InvalidDimension);
    }
    if p <= &BigRational::one() {
        return Err(ExponentError::InvalidPower(Box::new(p.clone())));
    }
    let n = rat(n as i64);
    let inverse = (p - BigRational::one()).recip();
    let s_c = &n / rat(2) - rat(2) * &inverse;
    Ok(Subcriticality {
        h1_subcritical: inverse > (&n - rat(2)) / rat(4),
        l2_subcritical: s_c.is_negative(),
        s_c,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrichartzExponents {
    pub n: u32,
    pub p: BigRational,
    pub beta: BigRational,
    pub q0: BigRational,
    pub r0: BigRational,
    pub q1: BigRational,
    pub r1: BigRational,
}

impl StrichartzExponents {
    /// `2 < q0, r0, q1, r1` and `0 < β < 1` (all values are finite rationals).
    pub fn in_range(&self) -> bool {
        let two = rat(2);
        [&self.q0, &self.r0, &self.q1, &self.r1].iter().all(|v| **v > two)
            && self.beta.is_positive()
            && self.beta < BigRational::one()
    }

    /// `2 < r1 < p + 1`.
    pub fn r1_below_power(&self) -> bool {
        self.r1 > rat(2) && self.r1 < &self.p + BigRational::one()
    }

    /// `2/q1' + n/r1' = (n + 4)/2` with primes denoting dual exponents.
    pub fn dual_identity(&self) -> bool {
        let one = BigRational::one();
        let n = rat(self.n as i64);
        let q1_dual = &one - self.q1.recip();
        let r1_dual = &one - self.r1.recip();
        rat(2) * q1_dual + &n * r1_dual == (&n + rat(4)) / rat(2)
    }
}

impl fmt::Display for StrichartzExponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} p={} beta={} q0={} r0={} q1={} r1={}",
            self.n, self.p, self.beta, self.q0, self.r0, self.q1, self.r1
        )
    }
}

/// Builds the exponents: `β` from the midpoint target
/// `T = (n-2)/2 + β ∈ (max(0, (n-2)/2), min(n/2, 2/(p-1)))`, then the first
/// `r0 = max(p+1, 2) + k` with `0 < T - n/r0 < 1`, and `r1`, `q1` from the
/// space gap and scaling relations.
pub fn solve_exponents(n: u32, p: &BigRational) -> Result<StrichartzExponents, ExponentError> {
    let report = check_subcritical(n, p)?;
    let nr = rat(n as i64);
    let one = BigRational::one();
    let two = rat(2);
    if !report.h1_subcritical {
        return Err(ExponentError::NotH1Subcritical {
            inverse: Box::new((p - &one).recip()),
            bound: Box::new((&nr - &two) / rat(4)),
        });
    }
    let shift = (&nr - &two) / &two;
    let lower = if shift.is_positive() { shift.clone() } else { BigRational::zero() };
    let upper = {
        let a = &nr / &two;
        let b = &two / (p - &one);
        if a < b {
            a
        } else {
            b
        }
    };
    let target = (&lower + &upper) / &two;
    let beta = &target - &shift;

    let base = {
        let a = p + &one;
        if a > two {
            a
        } else {
            two.clone()
        }
    };
    for k in 1..=MAX_CANDIDATES {
        let r0 = &base + rat(k as i64);
        let gap = &target - &nr / &r0;
        if !(gap.is_positive() && gap < one) {
            continue;
        }
        let q0 = &two / &gap;
        let r1 = ((&one - (p - &one) / &r0) / &two).recip();
        let q1 = (&two / (&nr / &two - &nr / &r1)).clone();
        return Ok(StrichartzExponents {
            n,
            p: p.clone(),
            beta,
            q0,
            r0,
            q1,
            r1,
        });
    }
    Err(ExponentError::NoAdmissibleR0(MAX_CANDIDATES))
}

/// Each relation checked independently and exactly, in the order of
/// [`RELATION_NAMES`]:
/// `2/q1 + n/r1 = n/2`, `2/q0 + n/r0 = (n-2)/2 + β`,
/// `1/r1 + (p-1)/r0 = 1 - 1/r1`, `1/q1 + (p-1)/q0 < 1 - 1/q1`, `r0 > p + 1`.
pub fn verify_exponents(e: &StrichartzExponents) -> [bool; 5] {
    let one = BigRational::one();
    let two = rat(2);
    let n = rat(e.n as i64);
    let pm1 = &e.p - &one;
    let nonzero = |v: &BigRational| !v.is_zero();
    let all_nonzero = [&e.q0, &e.r0, &e.q1, &e.r1].iter().all(|v| nonzero(v));
    if !all_nonzero {
        return [false; 5];
    }
    [
        &two / &e.q1 + &n / &e.r1 == &n / &two,
        &two / &e.q0 + &n / &e.r0 == (&n - &two) / &two + &e.beta,
        e.r1.recip() + &pm1 / &e.r0 == &one - e.r1.recip(),
        e.q1.recip() + &pm1 / &e.q0 < &one - e.q1.recip(),
        e.r0 > &e.p + &one,
    ]
}
