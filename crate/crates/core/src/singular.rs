//! Local singular-series data and the exact multiplicative functions built
//! from it.
//!
//! Everything here is an exact rational. The per-prime parameter `r(p)` is
//! carried by a [`LocalProfile`]; the default profile is the twin-prime
//! local factor `r(p) = 1/(p-2)` for odd `p` and `r(2) = 0`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::Factorization;
use crate::error::{domain, ApmError, Result};

/// Constant in the admissibility check `|r(p) - 1/p| ≤ C/p²` for odd `p`.
/// The default profile attains `2p/(p-2)`, which is 6 at `p = 3`.
pub const ADMISSIBLE_C: i64 = 6;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalProfile {
    overrides: BTreeMap<u64, BigRational>,
}

impl LocalProfile {
    pub fn default_profile() -> Self {
        Self::default()
    }

    /// Builds a profile from explicit values; primes not listed fall back
    /// to the default rule.
    pub fn with_overrides(overrides: BTreeMap<u64, BigRational>) -> Result<Self> {
        let prof = Self { overrides };
        for &p in prof.overrides.keys() {
            prof.check_prime(p)?;
        }
        Ok(prof)
    }

    /// Parses lines of the form `p numerator/denominator`; blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut overrides = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || ApmError::Parse(format!("profile line {}: {raw:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            let p: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let value = parts.next().ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            let (num, den) = match value.split_once('/') {
                Some((a, b)) => (a, b),
                None => (value, "1"),
            };
            let num: BigInt = num.parse().map_err(|_| bad())?;
            let den: BigInt = den.parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            overrides.insert(p, BigRational::new(num, den));
        }
        Self::with_overrides(overrides)
    }

    fn check_prime(&self, p: u64) -> Result<()> {
        let f = Factorization::of(p)?;
        if f.factors.len() != 1 || f.factors[0].1 != 1 {
            return domain(format!("profile key {p} is not prime"));
        }
        let r = self.r(p);
        if p == 2 {
            if !r.is_zero() {
                return domain("r(2) must be 0");
            }
            return Ok(());
        }
        let dev = (&r - rat(1, p as i64)).abs();
        if dev > rat(ADMISSIBLE_C, (p * p) as i64) {
            return domain(format!("r({p}) = {r} is not 1/p + O(1/p^2)"));
        }
        Ok(())
    }

    /// Checks the admissibility bound for every prime `p ≤ max_p`.
    pub fn check_admissible(&self, max_p: u64) -> Result<()> {
        crate::arith::primes_up_to(max_p)
            .into_iter()
            .try_for_each(|p| self.check_prime(p))
    }

    pub fn r(&self, p: u64) -> BigRational {
        if let Some(v) = self.overrides.get(&p) {
            return v.clone();
        }
        if p == 2 {
            BigRational::zero()
        } else {
            rat(1, p as i64 - 2)
        }
    }

    pub fn r_f64(&self, p: u64) -> f64 {
        if let Some(v) = self.overrides.get(&p) {
            return rat_to_f64(v);
        }
        if p == 2 {
            0.0
        } else {
            1.0 / (p as f64 - 2.0)
        }
    }

    pub fn is_default(&self) -> bool {
        self.overrides.is_empty()
    }
}

/// A squarefree modulus Δ, stored as its squarefree kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaModulus {
    value: u64,
    primes: Vec<u64>,
}

impl DeltaModulus {
    /// Normalises to the squarefree kernel: the functions below only see
    /// which primes divide Δ.
    pub fn new(delta: u64) -> Result<Self> {
        let f = Factorization::of(delta)?;
        let primes: Vec<u64> = f.primes().collect();
        Ok(Self {
            value: primes.iter().product(),
            primes,
        })
    }

    pub fn one() -> Self {
        Self {
            value: 1,
            primes: Vec::new(),
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn divides_by(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// Kernel of `d·Δ`.
    pub fn times(&self, d: u64) -> Result<Self> {
        let f = Factorization::of(d)?;
        let mut primes = self.primes.clone();
        primes.extend(f.primes());
        primes.sort_unstable();
        primes.dedup();
        Ok(Self {
            value: primes.iter().product(),
            primes,
        })
    }
}

pub fn f_delta(n: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<BigRational> {
    let f = Factorization::of(n)?;
    Ok(f.primes()
        .filter(|&p| !delta.divides_by(p))
        .fold(BigRational::one(), |acc, p| acc * (BigRational::one() + prof.r(p))))
}

pub fn f_delta_f64(n: u64, delta: &DeltaModulus, prof: &LocalProfile) -> f64 {
    Factorization::of(n)
        .map(|f| {
            f.primes()
                .filter(|&p| !delta.divides_by(p))
                .map(|p| 1.0 + prof.r_f64(p))
                .product()
        })
        .unwrap_or(0.0)
}

/// The Möbius inverse of `f_Δ`: `∏_{p|q} r(p)` on squarefree `q` coprime
/// to Δ, zero elsewhere.
pub fn g_delta(q: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<BigRational> {
    let f = Factorization::of(q)?;
    if !f.is_squarefree() || f.primes().any(|p| delta.divides_by(p)) {
        return Ok(BigRational::zero());
    }
    Ok(f.primes().fold(BigRational::one(), |acc, p| acc * prof.r(p)))
}

pub fn g_delta_f64(q: u64, delta: &DeltaModulus, prof: &LocalProfile) -> f64 {
    match Factorization::of(q) {
        Ok(f) if f.is_squarefree() && !f.primes().any(|p| delta.divides_by(p)) => {
            f.primes().map(|p| prof.r_f64(p)).product()
        }
        _ => 0.0,
    }
}

/// Local value `R_Δ(p^α)`.
pub fn r_delta_local(p: u64, alpha: u32, delta: &DeltaModulus, prof: &LocalProfile) -> BigRational {
    let inv_p = rat(1, p as i64);
    match (delta.divides_by(p), alpha) {
        (_, 0) => BigRational::one(),
        (false, 1) => prof.r(p) - inv_p,
        (false, 2) => -(prof.r(p) * inv_p),
        (true, 1) => -inv_p,
        _ => BigRational::zero(),
    }
}

pub fn r_delta(n: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<BigRational> {
    let f = Factorization::of(n)?;
    Ok(f.factors
        .iter()
        .fold(BigRational::one(), |acc, &(p, a)| acc * r_delta_local(p, a, delta, prof)))
}

pub fn r_delta_local_f64(p: u64, alpha: u32, delta: &DeltaModulus, prof: &LocalProfile) -> f64 {
    let inv_p = 1.0 / p as f64;
    match (delta.divides_by(p), alpha) {
        (_, 0) => 1.0,
        (false, 1) => prof.r_f64(p) - inv_p,
        (false, 2) => -prof.r_f64(p) * inv_p,
        (true, 1) => -inv_p,
        _ => 0.0,
    }
}

/// `I(p)`: `2` at `p = 2`, `-r(1 + 3r + r²)` at odd `p`.
pub fn big_i_prime(p: u64, prof: &LocalProfile) -> BigRational {
    if p == 2 {
        return rat(2, 1);
    }
    let r = prof.r(p);
    let inner = BigRational::one() + rat(3, 1) * &r + &r * &r;
    -(r * inner)
}

pub fn big_i(delta: u64, prof: &LocalProfile) -> Result<BigRational> {
    let f = Factorization::of(delta)?;
    if !f.is_squarefree() {
        return Ok(BigRational::zero());
    }
    Ok(f.primes()
        .fold(BigRational::one(), |acc, p| acc * big_i_prime(p, prof)))
}

/// Renders an exact value as `num/den`.
pub fn format_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}
