//! Integer arithmetic: sieves, factorisations, and the classical
//! multiplicative functions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{domain, ApmError, Result};

/// Largest sieve the library will allocate unless told otherwise
/// (12 bytes per entry).
pub const DEFAULT_SIEVE_LIMIT: u64 = 100_000_000;

/// Segment length used by [`SegmentedPrimes`].
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 20;

const CACHE_MAGIC: &[u8; 5] = b"APML1";
const CACHE_VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Trial division; fine for the moderate arguments used outside the
    /// moment pipeline.
    pub fn of(n: u64) -> Result<Self> {
        if n == 0 {
            return domain("cannot factorize 0");
        }
        let mut m = n;
        let mut factors = Vec::new();
        let mut p = 2u64;
        while p * p <= m {
            if m.is_multiple_of(p) {
                let mut e = 0;
                while m.is_multiple_of(p) {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            factors.push((m, 1));
        }
        Ok(Self { n, factors })
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn radical(&self) -> u64 {
        self.primes().product()
    }

    pub fn mobius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn euler_phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    /// All positive divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

pub fn mobius(n: u64) -> Result<i8> {
    Ok(Factorization::of(n)?.mobius())
}

pub fn euler_phi(n: u64) -> Result<u64> {
    Ok(Factorization::of(n)?.euler_phi())
}

pub fn divisors(n: u64) -> Result<Vec<u64>> {
    Ok(Factorization::of(n)?.divisors())
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

pub fn is_squarefree(n: u64) -> bool {
    Factorization::of(n).map(|f| f.is_squarefree()).unwrap_or(false)
}

/// Plain Eratosthenes, for prime lists that feed Euler products.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Λ(n) and smallest prime factors for `1 ≤ n ≤ limit`.
#[derive(Debug, Clone)]
pub struct SieveTable {
    limit: u64,
    lambda: Vec<f64>,
    spf: Vec<u32>,
}

impl SieveTable {
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_ceiling(limit, DEFAULT_SIEVE_LIMIT)
    }

    pub fn build_with_ceiling(limit: u64, ceiling: u64) -> Result<Self> {
        if limit == 0 {
            return domain("sieve limit must be positive");
        }
        if limit > ceiling {
            return Err(ApmError::Resource {
                what: "sieve limit",
                requested: limit,
                limit: ceiling,
            });
        }
        if limit > u32::MAX as u64 {
            return Err(ApmError::Resource {
                what: "sieve limit (u32 factor table)",
                requested: limit,
                limit: u32::MAX as u64,
            });
        }
        let n = limit as usize;
        // index 0 is unused padding so that spf[n] addresses n directly
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        spf[1] = 1;
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i * p as usize;
                if m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        let mut lambda = vec![0.0f64; n + 1];
        for &p in &primes {
            let lp = (p as f64).ln();
            let mut pk = p as u64;
            while pk <= limit {
                lambda[pk as usize] = lp;
                pk *= p as u64;
            }
        }
        Ok(Self { limit, lambda, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda[n as usize]
    }

    /// Λ(1), …, Λ(limit).
    pub fn lambda_values(&self) -> &[f64] {
        &self.lambda[1..]
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf[n as usize] as u64 == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(move |&n| self.is_prime(n))
    }

    /// `(p, k)` when `n = p^k`.
    pub fn prime_power(&self, n: u64) -> Option<(u64, u32)> {
        if n < 2 {
            return None;
        }
        let p = self.smallest_prime_factor(n);
        let mut m = n;
        let mut k = 0;
        while m.is_multiple_of(p) {
            m /= p;
            k += 1;
        }
        (m == 1).then_some((p, k))
    }

    /// Chebyshev θ(x) = Σ_{p ≤ x} log p, summed pairwise in ascending order.
    pub fn theta(&self, x: u64) -> f64 {
        let x = x.min(self.limit);
        let logs: Vec<f64> = (2..=x)
            .filter(|&n| self.is_prime(n))
            .map(|p| self.lambda(p))
            .collect();
        pairwise_sum(&logs)
    }

    /// Chebyshev ψ(x) = Σ_{n ≤ x} Λ(n).
    pub fn psi(&self, x: u64) -> f64 {
        let x = x.min(self.limit) as usize;
        pairwise_sum(&self.lambda[1..=x])
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&[CACHE_VERSION])?;
        w.write_all(&self.limit.to_le_bytes())?;
        for v in self.lambda_values() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn factorize(n: u64, table: &SieveTable) -> Result<Factorization> {
    if n == 0 || n > table.limit {
        return domain(format!("{n} outside sieve range 1..={}", table.limit));
    }
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    while m > 1 {
        let p = table.smallest_prime_factor(m);
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
        m /= p;
    }
    Ok(Factorization { n, factors })
}

pub fn build_sieve(limit: u64) -> Result<SieveTable> {
    SieveTable::build(limit)
}

/// Reads the Λ values of a cache file written by [`SieveTable::write_cache`].
pub fn read_lambda_cache(path: &Path) -> Result<Vec<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 14];
    r.read_exact(&mut head)?;
    if &head[..5] != CACHE_MAGIC {
        return Err(ApmError::Parse("bad cache magic".into()));
    }
    if head[5] != CACHE_VERSION {
        return Err(ApmError::Parse(format!("unsupported cache version {}", head[5])));
    }
    let n = u64::from_le_bytes(head[6..14].try_into().expect("8 bytes"));
    let mut values = Vec::with_capacity(n as usize);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(values)
}

/// Streams the primes up to `limit` one segment at a time, so that only
/// `O(√limit + segment_len)` memory is live.
pub struct SegmentedPrimes {
    limit: u64,
    base: Vec<u64>,
    low: u64,
    segment_len: u64,
}

impl SegmentedPrimes {
    pub fn new(limit: u64, segment_len: usize) -> Self {
        let root = (limit as f64).sqrt() as u64 + 1;
        Self {
            limit,
            base: primes_up_to(root),
            low: 2,
            segment_len: segment_len.max(64) as u64,
        }
    }
}

impl Iterator for SegmentedPrimes {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.low > self.limit {
            return None;
        }
        let high = (self.low + self.segment_len - 1).min(self.limit);
        let len = (high - self.low + 1) as usize;
        let mut composite = vec![false; len];
        for &p in &self.base {
            if p * p > high {
                break;
            }
            let start = (p * p).max(self.low.div_ceil(p) * p);
            let mut j = start;
            while j <= high {
                composite[(j - self.low) as usize] = true;
                j += p;
            }
        }
        let primes = composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| self.low + i as u64)
            .collect();
        self.low = high + 1;
        Some(primes)
    }
}

/// Pairwise (tree) summation in the given order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Neumaier compensated summation, used to cross-check [`pairwise_sum`].
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lambda_values() {
        let t = build_sieve(10).unwrap();
        assert_eq!(t.lambda(8), 2f64.ln());
        assert_eq!(t.lambda(6), 0.0);
        assert_eq!(t.lambda(7), 7f64.ln());
        let one = build_sieve(1).unwrap();
        assert_eq!(one.lambda(1), 0.0);
        assert_eq!(one.smallest_prime_factor(1), 1);
    }

    #[test]
    fn psi_near_x() {
        let t = build_sieve(1_000_000).unwrap();
        let psi = t.psi(1_000_000);
        assert!((psi / 1e6 - 1.0).abs() < 0.005, "psi = {psi}");
    }

    #[test]
    fn ceiling_is_enforced() {
        match SieveTable::build_with_ceiling(1000, 100) {
            Err(ApmError::Resource { limit, .. }) => assert_eq!(limit, 100),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn factorizations() {
        let t = build_sieve(10_000_000).unwrap();
        assert_eq!(factorize(12, &t).unwrap().factors, vec![(2, 2), (3, 1)]);
        assert!(factorize(1, &t).unwrap().factors.is_empty());
        let f = factorize(9_699_690, &t).unwrap();
        let primes: Vec<u64> = f.primes().collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19]);
        assert!(f.factors.iter().all(|&(_, e)| e == 1));
        assert!(factorize(10_000_001, &t).is_err());
        assert_eq!(Factorization::of(9_699_690).unwrap(), f);
    }

    #[test]
    fn mobius_and_phi() {
        assert_eq!((mobius(1).unwrap(), euler_phi(1).unwrap()), (1, 1));
        assert_eq!((mobius(30).unwrap(), euler_phi(30).unwrap()), (-1, 8));
        assert_eq!((mobius(12).unwrap(), euler_phi(12).unwrap()), (0, 4));
        let units = (1..=12u64).filter(|&a| gcd(a, 12) == 1).count() as u64;
        assert_eq!(units, 4);
    }

    #[test]
    fn von_mangoldt_divisor_sum_is_log() {
        let t = build_sieve(10_000).unwrap();
        for n in 1..=10_000u64 {
            let s: f64 = divisors(n).unwrap().iter().map(|&d| t.lambda(d)).sum();
            assert!((s - (n as f64).ln()).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn mobius_divisor_sum_is_delta() {
        for n in 1..=10_000u64 {
            let s: i64 = divisors(n)
                .unwrap()
                .iter()
                .map(|&d| mobius(d).unwrap() as i64)
                .sum();
            assert_eq!(s, (n == 1) as i64, "n = {n}");
        }
    }

    #[test]
    fn phi_is_multiplicative() {
        for m in 1..=1000u64 {
            for n in 1..=1000u64 {
                if gcd(m, n) == 1 {
                    assert_eq!(
                        euler_phi(m * n).unwrap(),
                        euler_phi(m).unwrap() * euler_phi(n).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn segmented_matches_table() {
        let t = build_sieve(200_000).unwrap();
        let direct: Vec<u64> = t.primes().collect();
        let seg: Vec<u64> = SegmentedPrimes::new(200_000, 4096).flatten().collect();
        assert_eq!(direct, seg);
    }

    #[test]
    fn cache_round_trip() {
        let t = build_sieve(1000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lambda.bin");
        t.write_cache(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..5], b"APML1");
        assert_eq!(bytes[5], 1);
        assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 1000);
        assert_eq!(bytes.len(), 14 + 8 * 1000);
        assert_eq!(read_lambda_cache(&path).unwrap(), t.lambda_values());
    }

    #[test]
    fn summation_modes_agree() {
        let v: Vec<f64> = (1..10_000).map(|i| 1.0 / i as f64).collect();
        assert!((pairwise_sum(&v) - compensated_sum(&v)).abs() < 1e-12);
    }
}
