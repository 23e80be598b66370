//! Finite sums computed by brute force next to the closed forms they are
//! claimed to equal.
//!
//! Sums over pairs `l + l' ≤ X` are tabulated once per `n = l + l'` as
//! coefficients `c_n`, so `Σ_{n ≤ Y} (Y - n)² n c_n` can be read off at any
//! real threshold `Y` from three running power sums.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::analytic::{p_delta, theta_s, u_product, ProductConfig};
use crate::arith::{euler_phi, gcd, is_squarefree, primes_up_to, Factorization, SieveTable};
use crate::error::{domain, ApmError, Result};
use crate::singular::{
    big_i, f_delta, f_delta_f64, format_rational, g_delta, g_delta_f64, r_delta_local, rat, rat_to_f64,
    DeltaModulus, LocalProfile,
};
use crate::special::zeta;

pub const S_DELTA_EXACT_MAX: u64 = 5000;
pub const S_DELTA_FLOAT_MAX: u64 = 20_000;
pub const SPLITTING_MAX: u64 = 2000;
pub const A_MAX_LIMIT: u64 = 100_000;
pub const K_N_MAX_LIMIT: u64 = 50_000_000;

/// An exact rational, or a complex double when the inputs are not rational.
#[derive(Clone, Debug, PartialEq)]
pub enum SumValue {
    Exact(BigRational),
    Approx(Complex64),
}

impl SumValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            SumValue::Exact(q) => Complex64::from(rat_to_f64(q)),
            SumValue::Approx(z) => *z,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            SumValue::Exact(q) => Some(q),
            SumValue::Approx(_) => None,
        }
    }
}

impl fmt::Display for SumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SumValue::Exact(q) => f.write_str(&format_rational(q)),
            SumValue::Approx(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

impl Serialize for SumValue {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SumValue::Exact(q) => ser.serialize_str(&format_rational(q)),
            SumValue::Approx(z) => {
                let mut m = ser.serialize_map(Some(2))?;
                m.serialize_entry("re", &z.re)?;
                m.serialize_entry("im", &z.im)?;
                m.end()
            }
        }
    }
}

pub fn ser_rational<S: Serializer>(q: &BigRational, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&format_rational(q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumReport {
    pub value: SumValue,
    /// Index tuples admitted by the defining sum, zero weights included.
    pub terms: u64,
    pub cutoff: Option<f64>,
    pub tail_bound: f64,
}

impl SumReport {
    fn exact(value: BigRational, terms: u64, cutoff: f64) -> Self {
        SumReport { value: SumValue::Exact(value), terms, cutoff: Some(cutoff), tail_bound: 0.0 }
    }

    pub fn exact_value(&self) -> Option<&BigRational> {
        self.value.as_exact()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairVector {
    pub l: u64,
    pub l_prime: u64,
}

impl PairVector {
    pub fn new(l: u64, l_prime: u64) -> Result<Self> {
        if l == 0 || l_prime == 0 {
            return domain("pair entries must be positive");
        }
        Ok(PairVector { l, l_prime })
    }

    /// `l̃ = l + l'`.
    pub fn tilde(&self) -> u64 {
        self.l + self.l_prime
    }
}

fn f_table(n_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<Vec<BigRational>> {
    let mut out = vec![BigRational::zero()];
    for n in 1..=n_max {
        out.push(f_delta(n, delta, prof)?);
    }
    Ok(out)
}

fn g_table(n_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<Vec<BigRational>> {
    let mut out = vec![BigRational::zero()];
    for n in 1..=n_max {
        out.push(g_delta(n, delta, prof)?);
    }
    Ok(out)
}

fn primes_of(n: u64) -> Vec<u64> {
    Factorization::of(n).map(|f| f.primes().collect()).unwrap_or_default()
}

fn mask_product(primes: &[u64], mask: usize) -> u64 {
    primes
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &p)| p)
        .product()
}

/// `c_n = Σ_{q | n} g(q) Σ_{l < n, (l, q) = 1} f(l) f(n - l)`, with the
/// coprimality picked up by Möbius over `e | q`.
fn s_coefficient<T: Num + Clone>(n: u64, f: &[T], g: &[T]) -> T {
    if n < 2 {
        return T::zero();
    }
    let primes = primes_of(n);
    let k = primes.len();
    let es: Vec<u64> = (0..1usize << k).map(|m| mask_product(&primes, m)).collect();
    let nu = n as usize;
    let prods: Vec<T> = (1..nu).map(|l| f[l].clone() * f[nu - l].clone()).collect();
    let t: Vec<T> = es
        .iter()
        .map(|&e| {
            (e as usize..nu)
                .step_by(e as usize)
                .fold(T::zero(), |acc, l| acc + prods[l - 1].clone())
        })
        .collect();
    let mut c = T::zero();
    for qm in 0..1usize << k {
        let gq = &g[es[qm] as usize];
        if gq.is_zero() {
            continue;
        }
        let mut inner = T::zero();
        let mut em = qm;
        loop {
            if em.count_ones() % 2 == 0 {
                inner = inner + t[em].clone();
            } else {
                inner = inner - t[em].clone();
            }
            if em == 0 {
                break;
            }
            em = (em - 1) & qm;
        }
        c = c + gq.clone() * inner;
    }
    c
}

fn s_coefficients_exact(n_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<Vec<BigRational>> {
    let f = f_table(n_max, delta, prof)?;
    let g = g_table(n_max, delta, prof)?;
    Ok((0..=n_max).into_par_iter().map(|n| s_coefficient(n, &f, &g)).collect())
}

/// Running sums `P_j(k) = Σ_{n ≤ k} n^j c_n` for `j = 1, 2, 3`, so that
/// `Σ_{n ≤ Y} (Y - n)² n c_n = Y² P₁ - 2Y P₂ + P₃` at `k = ⌊Y⌋`.
#[derive(Clone, Debug)]
struct Cubic {
    p: [Vec<BigRational>; 3],
}

impl Cubic {
    fn new(c: &[BigRational]) -> Self {
        let mut p: [Vec<BigRational>; 3] = Default::default();
        let mut acc = [BigRational::zero(), BigRational::zero(), BigRational::zero()];
        for (n, cn) in c.iter().enumerate() {
            let nr = BigRational::from_integer(BigInt::from(n));
            let mut w = cn * &nr;
            for j in 0..3 {
                acc[j] += &w;
                p[j].push(acc[j].clone());
                w *= &nr;
            }
        }
        Cubic { p }
    }

    fn eval(&self, y: &BigRational) -> BigRational {
        let k = y.floor().to_integer().to_usize().unwrap_or(0);
        if k < 2 || self.p[0].is_empty() {
            return BigRational::zero();
        }
        assert!(k < self.p[0].len(), "threshold {k} beyond tabulated range");
        y * y * &self.p[0][k] - rat(2, 1) * y * &self.p[1][k] + &self.p[2][k]
    }
}

fn s_terms(x: u64) -> u64 {
    let mut terms = 0;
    for n in 2..=x {
        for q in Factorization::of(n).map(|f| f.divisors()).unwrap_or_default() {
            terms += (n / q) * euler_phi(q).unwrap_or(0) - u64::from(q == 1);
        }
    }
    terms
}

fn check_x(x: u64, limit: u64, what: &'static str) -> Result<()> {
    if x < 2 {
        return domain(format!("{what} needs X ≥ 2, got {x}"));
    }
    if x > limit {
        return Err(ApmError::Resource { what, requested: x, limit });
    }
    Ok(())
}

/// `𝒮_Δ(X) = Σ_q g_Δ(q) Σ_{l+l' ≤ X, q | l̃, (ll', q) = 1} (X - l̃)² l̃ f_Δ(l) f_Δ(l')`.
pub fn s_delta_brute(x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SumReport> {
    check_x(x, S_DELTA_EXACT_MAX, "exact 𝒮_Δ threshold")?;
    let cubic = Cubic::new(&s_coefficients_exact(x, delta, prof)?);
    let xr = rat(x as i64, 1);
    Ok(SumReport::exact(cubic.eval(&xr), s_terms(x), x as f64))
}

/// `𝒮_Δ(X)` in doubles at each real threshold.
pub fn s_delta_float(xs: &[f64], delta: &DeltaModulus, prof: &LocalProfile) -> Result<Vec<f64>> {
    let top = xs.iter().fold(0.0f64, |a, &b| a.max(b));
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return domain("thresholds must be finite and non-negative");
    }
    let n_max = top.floor() as u64;
    if n_max > S_DELTA_FLOAT_MAX {
        return Err(ApmError::Resource { what: "𝒮_Δ threshold", requested: n_max, limit: S_DELTA_FLOAT_MAX });
    }
    let f: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { f_delta_f64(n, delta, prof) }).collect();
    let g: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { g_delta_f64(n, delta, prof) }).collect();
    let c: Vec<f64> = (0..=n_max).into_par_iter().map(|n| s_coefficient(n, &f, &g)).collect();
    Ok(xs
        .iter()
        .map(|&y| {
            (2..=y.floor() as usize)
                .map(|n| {
                    let d = y - n as f64;
                    d * d * n as f64 * c[n]
                })
                .sum()
        })
        .collect())
}

fn l_sum(q: u64, x: u64, delta: &DeltaModulus, prof: &LocalProfile, tilde_weight: bool) -> Result<SumReport> {
    if q == 0 {
        return domain("modulus q must be positive");
    }
    check_x(x, S_DELTA_EXACT_MAX, "ℒ_Δ threshold")?;
    if q > x {
        return Ok(SumReport::exact(BigRational::zero(), 0, x as f64));
    }
    let f = f_table(x, delta, prof)?;
    let mut total = BigRational::zero();
    let mut terms = 0;
    for n in (q..=x).step_by(q as usize).filter(|&n| n >= 2) {
        let w = rat(((x - n) * (x - n)) as i64, 1);
        for l in (1..n).filter(|&l| gcd(l, q) == 1) {
            terms += 1;
            let lw = if tilde_weight { n } else { l };
            total += &w * rat(lw as i64, 1) * &f[l as usize] * &f[(n - l) as usize];
        }
    }
    Ok(SumReport::exact(total, terms, x as f64))
}

/// `ℒ_Δ(q) = Σ_{l+l' ≤ X, q | l̃, (ll', q) = 1} (X - l̃)² l̃ f_Δ(l) f_Δ(l')`.
pub fn l_delta(q: u64, x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SumReport> {
    l_sum(q, x, delta, prof, true)
}

/// `ℒ_Δ(q)` with the weight `l̃` replaced by `l`.
pub fn l_delta_l_weighted(q: u64, x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SumReport> {
    l_sum(q, x, delta, prof, false)
}

/// `𝒮^< = Σ_{q ≤ X} g_Δ(q) ℒ_Δ(q)`.
pub fn s_less(x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SumReport> {
    check_x(x, S_DELTA_EXACT_MAX, "𝒮^< threshold")?;
    let mut total = BigRational::zero();
    let mut terms = 0;
    for q in 1..=x {
        let g = g_delta(q, delta, prof)?;
        let l = l_delta(q, x, delta, prof)?;
        terms += l.terms;
        if !g.is_zero() {
            total += g * l.exact_value().expect("exact");
        }
    }
    Ok(SumReport::exact(total, terms, x as f64))
}

/// `𝒮^> = Σ_{X < q ≤ q_max} ℒ_Δ(q)`, without the weight `g_Δ(q)`.
pub fn s_greater(x: u64, q_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SumReport> {
    check_x(x, S_DELTA_EXACT_MAX, "𝒮^> threshold")?;
    let mut total = BigRational::zero();
    let mut terms = 0;
    for q in x + 1..=q_max {
        let l = l_delta(q, x, delta, prof)?;
        terms += l.terms;
        total += l.exact_value().expect("exact");
    }
    Ok(SumReport::exact(total, terms, x as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    #[serde(serialize_with = "ser_rational")]
    pub lhs: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub rhs_q: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub rhs_d: BigRational,
}

impl SplitReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs_q && self.lhs == self.rhs_d
    }
}

fn pair_conv(n: usize, f: &[BigRational]) -> BigRational {
    (1..n).fold(BigRational::zero(), |acc, l| acc + &f[l] * &f[n - l])
}

/// Coefficients of `𝒥*_Δ`: `Σ_{l+l'=n} f(l) f(l') f(n)`, pair by pair.
fn j_lhs_coefficients(n_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<Vec<BigRational>> {
    let f = f_table(n_max, delta, prof)?;
    Ok((0..=n_max as usize)
        .into_par_iter()
        .map(|n| (1..n).fold(BigRational::zero(), |acc, l| acc + &f[l] * &f[n - l] * &f[n]))
        .collect())
}

/// The three forms of `𝒥*_Δ`, tabulated for every threshold up to `x_max`:
/// the pair sum with `f_Δ(l̃)`, its expansion `Σ_q g_Δ(q) Σ_{q | l̃}`, and
/// the split `Σ_d d³ g_Δ(d) f_Δ(d)² 𝒮_{dΔ}(X/d)`.
#[derive(Clone, Debug)]
pub struct Splitting {
    x_max: u64,
    lhs: Cubic,
    rhs_q: Cubic,
    rhs_d: Vec<(u64, BigRational, Cubic)>,
}

impl Splitting {
    pub fn new(x_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<Self> {
        check_x(x_max, SPLITTING_MAX, "𝒥*_Δ threshold")?;
        let lhs = Cubic::new(&j_lhs_coefficients(x_max, delta, prof)?);

        let f = f_table(x_max, delta, prof)?;
        let conv: Vec<BigRational> = (0..=x_max as usize).into_par_iter().map(|n| pair_conv(n, &f)).collect();
        let mut b = vec![BigRational::zero(); x_max as usize + 1];
        for q in 1..=x_max {
            let g = g_delta(q, delta, prof)?;
            if g.is_zero() {
                continue;
            }
            for n in (q..=x_max).step_by(q as usize) {
                b[n as usize] += &g * &conv[n as usize];
            }
        }
        let rhs_q = Cubic::new(&b);

        let mut rhs_d = Vec::new();
        for d in 1..=x_max / 2 {
            let g = g_delta(d, delta, prof)?;
            if g.is_zero() {
                continue;
            }
            let fd = &f[d as usize];
            let weight = rat((d * d * d) as i64, 1) * g * fd * fd;
            let inner = delta.times(d)?;
            rhs_d.push((d, weight, Cubic::new(&s_coefficients_exact(x_max / d, &inner, prof)?)));
        }
        Ok(Splitting { x_max, lhs, rhs_q, rhs_d })
    }

    pub fn eval(&self, x: &BigRational) -> Result<SplitReport> {
        if x > &rat(self.x_max as i64, 1) || x.is_negative() {
            return domain(format!("threshold {x} outside the tabulated range [0, {}]", self.x_max));
        }
        let mut rhs_d = BigRational::zero();
        for (d, w, s) in &self.rhs_d {
            let y = x / rat(*d as i64, 1);
            if y < rat(2, 1) {
                break;
            }
            rhs_d += w * s.eval(&y);
        }
        Ok(SplitReport { lhs: self.lhs.eval(x), rhs_q: self.rhs_q.eval(x), rhs_d })
    }
}

pub fn j_star_delta(x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<SplitReport> {
    Splitting::new(x, delta, prof)?.eval(&rat(x as i64, 1))
}

/// `𝒥*(X) = Σ_Δ Δ³ I(Δ) 𝒥*_Δ(X/Δ)` over squarefree `Δ ≤ X/2`.
pub fn j_star(x: u64, prof: &LocalProfile) -> Result<BigRational> {
    check_x(x, SPLITTING_MAX, "𝒥* threshold")?;
    let xr = rat(x as i64, 1);
    let mut total = BigRational::zero();
    for d in (1..=x / 2).filter(|&d| is_squarefree(d)) {
        let i = big_i(d, prof)?;
        if i.is_zero() {
            continue;
        }
        let delta = DeltaModulus::new(d)?;
        let lhs = Cubic::new(&j_lhs_coefficients(x / d, &delta, prof)?);
        total += rat((d * d * d) as i64, 1) * i * lhs.eval(&(&xr / rat(d as i64, 1)));
    }
    Ok(total)
}

/// `𝒥*(X)` with the pair sum outermost:
/// `Σ_{a+b ≤ X} (X - ã)² ã Σ_{Δ | (a,b)} I(Δ) f_Δ(a/Δ) f_Δ(b/Δ) f_Δ(ã/Δ)`.
pub fn j_star_interchanged(x: u64, prof: &LocalProfile) -> Result<BigRational> {
    check_x(x, 200, "interchanged 𝒥* threshold")?;
    let mut total = BigRational::zero();
    for a in 1..x {
        for b in 1..=x - a {
            let n = a + b;
            let mut inner = BigRational::zero();
            for d in Factorization::of(gcd(a, b))?.divisors() {
                let i = big_i(d, prof)?;
                if i.is_zero() {
                    continue;
                }
                let delta = DeltaModulus::new(d)?;
                inner += i
                    * f_delta(a / d, &delta, prof)?
                    * f_delta(b / d, &delta, prof)?
                    * f_delta(n / d, &delta, prof)?;
            }
            total += rat(((x - n) * (x - n) * n) as i64, 1) * inner;
        }
    }
    Ok(total)
}

/// An exponent `u`: integers stay exact, anything else is a complex double.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Integer(i64),
    Complex(Complex64),
}

impl Exponent {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Exponent::Integer(k) => Complex64::from(k as f64),
            Exponent::Complex(z) => z,
        }
    }
}

impl FromStr for Exponent {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Ok(k) = t.parse::<i64>() {
            return Ok(Exponent::Integer(k));
        }
        if let Some((a, b)) = t.split_once('/') {
            let (a, b) = match (a.trim().parse::<i64>(), b.trim().parse::<i64>()) {
                (Ok(a), Ok(b)) if b != 0 => (a, b),
                _ => return Err(ApmError::Parse(format!("bad rational exponent {t:?}"))),
            };
            if a % b == 0 {
                return Ok(Exponent::Integer(a / b));
            }
            return Ok(Exponent::Complex(Complex64::from(a as f64 / b as f64)));
        }
        t.parse::<Complex64>()
            .map(Exponent::Complex)
            .map_err(|_| ApmError::Parse(format!("bad exponent {t:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalPair {
    pub brute: SumValue,
    pub closed: SumValue,
    pub terms: u64,
    pub agree: bool,
}

fn rat_pow(p: u64, e: i64) -> BigRational {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// `Σ coef · p^{iu}` over `(coef, i)`.
fn eval_powers(terms: &[(BigRational, i64)], p: u64, u: Exponent) -> (SumValue, f64) {
    match u {
        Exponent::Integer(k) => {
            let v = terms.iter().fold(BigRational::zero(), |acc, (c, i)| acc + c * rat_pow(p, i * k));
            (SumValue::Exact(v), 0.0)
        }
        Exponent::Complex(z) => {
            let lp = (p as f64).ln();
            let mut v = Complex64::from(0.0);
            let mut scale = 0.0f64;
            for (c, i) in terms {
                let t = rat_to_f64(c) * (z * (*i as f64 * lp)).exp();
                scale += t.norm();
                v += t;
            }
            (SumValue::Approx(v), scale)
        }
    }
}

/// `h_q^u(N) = Σ_{abcll' = N, l,l' | q} μ(l)μ(l') l R_Δ(c) χ₀(c) a^u c` at a
/// prime power `N = p^k`, by enumerating every 5-tuple of exponents,
/// against the local closed form. Complex values agree when they are within
/// `1e-10` of each other relative to the largest term.
pub fn h_small(q: u64, u: Exponent, n: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<LocalPair> {
    if q == 0 || n == 0 {
        return domain("h_q^u(N) needs q, N ≥ 1");
    }
    let fac = Factorization::of(n)?;
    if fac.factors.len() > 1 {
        return domain(format!("h_q^u(N) is local: N = {n} is not a prime power"));
    }
    let (p, k) = fac.factors.first().copied().unwrap_or((2, 0));
    if k > 8 {
        return domain(format!("h_q^u(p^k) is enumerated only for k ≤ 8, got {k}"));
    }
    let k = k as i64;
    let mut v = 0;
    let mut qq = q;
    while qq.is_multiple_of(p) {
        qq /= p;
        v += 1;
    }
    let mut brute = Vec::new();
    let mut terms = 0;
    for ea in 0..=k {
        for ec in 0..=k - ea {
            for el in 0..=k - ea - ec {
                for el2 in 0..=k - ea - ec - el {
                    if el > v || el2 > v {
                        continue;
                    }
                    terms += 1;
                    if el > 1 || el2 > 1 || (ec > 0 && v > 0) {
                        continue;
                    }
                    let sign = if (el + el2) % 2 == 0 { 1 } else { -1 };
                    let w = rat(sign, 1)
                        * rat_pow(p, el)
                        * r_delta_local(p, ec as u32, delta, prof)
                        * rat_pow(p, ec);
                    if !w.is_zero() {
                        brute.push((w, ea));
                    }
                }
            }
        }
    }
    let closed: Vec<(BigRational, i64)> = if k == 0 {
        vec![(BigRational::one(), 0)]
    } else if v > 0 {
        vec![(BigRational::one(), k), (-rat(p as i64, 1), k - 1)]
    } else {
        let mut out = Vec::new();
        for j in 0..=k {
            let w = r_delta_local(p, j as u32, delta, prof) * rat_pow(p, j);
            for i in 0..=k - j {
                out.push((w.clone(), i));
            }
        }
        out
    };
    let (b, sb) = eval_powers(&brute, p, u);
    let (c, sc) = eval_powers(&closed, p, u);
    let agree = match (&b, &c) {
        (SumValue::Exact(x), SumValue::Exact(y)) => x == y,
        _ => (b.to_complex() - c.to_complex()).norm() <= 1e-10 * sb.max(sc).max(1.0),
    };
    Ok(LocalPair { brute: b, closed: c, terms, agree })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FrakVariant {
    /// `𝔥_p`: `p | q`.
    P,
    /// `𝔥_1`: `p ∤ q`, `p ∤ Δ`.
    One,
    /// `𝔥_1*`: `p ∤ q`, `p | Δ`.
    OneStar,
}

impl FromStr for FrakVariant {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p" => Ok(FrakVariant::P),
            "1" => Ok(FrakVariant::One),
            "1*" => Ok(FrakVariant::OneStar),
            other => Err(ApmError::Parse(format!("unknown 𝔥 variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrakReport {
    pub series: Complex64,
    pub closed: Complex64,
    pub tail_bound: f64,
    /// Powers `p^0, …, p^K` summed.
    pub terms: u64,
    /// For `𝔥_1*`: the series over its `ζ(2-u)` local factor `p²U/(p²U-1)`.
    pub normalized: Option<Complex64>,
    pub agree: bool,
}

const FRAK_K_CAP: usize = 4000;

/// `𝔥 = Σ_{k ≥ 0} h(p^k)² / p^{k(2+u)}` against its closed form in
/// `U = p^{-u}`.
pub fn frak_h(
    p: u64,
    u: Complex64,
    delta: &DeltaModulus,
    variant: FrakVariant,
    k_min: u32,
    prof: &LocalProfile,
) -> Result<FrakReport> {
    let fac = Factorization::of(p)?;
    if fac.factors.len() != 1 || fac.factors[0].1 != 1 {
        return domain(format!("𝔥 is local: {p} is not prime"));
    }
    if k_min < 40 {
        return domain(format!("𝔥 series cutoff K = {k_min} below 40"));
    }
    if u.re >= 2.0 || u.re <= -2.0 {
        return domain(format!("𝔥 series diverges at Re u = {}", u.re));
    }
    match variant {
        FrakVariant::One if delta.divides_by(p) => return domain("variant 1 needs p ∤ Δ"),
        FrakVariant::OneStar if !delta.divides_by(p) => return domain("variant 1* needs p | Δ"),
        _ => {}
    }
    let lp = (p as f64).ln();
    let pf = p as f64;
    // every factor but a^u, as a local sequence in the exponent
    let mut b = vec![0.0f64; FRAK_K_CAP + 1];
    match variant {
        FrakVariant::P => {
            b[0] = 1.0;
            b[1] = -pf;
        }
        FrakVariant::One | FrakVariant::OneStar => {
            let mut acc = 0.0;
            for (j, slot) in b.iter_mut().enumerate() {
                if j <= 2 {
                    acc += r_delta_local(p, j as u32, delta, prof).to_f64().unwrap_or(f64::NAN) * pf.powi(j as i32);
                }
                *slot = acc;
            }
        }
    }
    let rho = pf.powf(u.re.abs() - 2.0);
    let mut series = Complex64::from(0.0);
    let mut k = 0usize;
    let mut last;
    loop {
        let scale = u * 0.5 + 1.0;
        let mut h = Complex64::from(0.0);
        for i in 0..=k {
            if b[k - i] != 0.0 {
                h += b[k - i] * ((u * i as f64 - scale * k as f64) * lp).exp();
            }
        }
        last = h * h;
        series += last;
        if (k >= k_min as usize && last.norm() <= 1e-18 * series.norm().max(1e-300)) || k == FRAK_K_CAP {
            break;
        }
        k += 1;
    }
    let tail_bound = 4.0 * last.norm() * rho / (1.0 - rho).powi(3);
    let big_u = (-u * lp).exp();
    let p2u = big_u * pf * pf;
    let closed = match variant {
        FrakVariant::P => p2u * (1.0 - 2.0 / pf + big_u) / (p2u - 1.0),
        FrakVariant::One => {
            let r = prof.r_f64(p);
            p2u * (1.0 + 2.0 * r / pf + r * r * big_u) / (p2u - 1.0)
        }
        FrakVariant::OneStar => p2u / (p2u - 1.0),
    };
    let normalized = (variant == FrakVariant::OneStar).then(|| series * (p2u - 1.0) / p2u);
    let agree = (series - closed).norm() <= 1e-10 * closed.norm().max(1.0);
    Ok(FrakReport { series, closed, tail_bound, terms: k as u64 + 1, normalized, agree })
}

/// `(g_Δ ⋆_L μ)(p) = Σ_{[D,h] = p, h | q} μ(h) g_Δ(D)`.
pub fn g_star_mu(p: u64, q: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for d in [1, p] {
        for h in [1, p] {
            if d.max(h) != p || !q.is_multiple_of(h) {
                continue;
            }
            let mu = if h == 1 { BigRational::one() } else { -BigRational::one() };
            total += mu * g_delta(d, delta, prof)?;
        }
    }
    Ok(total)
}

/// `G_q(p) = (g_Δ ⋆_L μ)(p) / g_Δ(p)`.
pub fn big_g(p: u64, q: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Result<BigRational> {
    let g = g_delta(p, delta, prof)?;
    if g.is_zero() {
        return domain(format!("G_q({p}) needs g_Δ({p}) ≠ 0"));
    }
    Ok(g_star_mu(p, q, delta, prof)? / g)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AqReport {
    pub n: u64,
    pub q: u64,
    pub a_max: u64,
    pub brute: f64,
    /// `2|S(A) - S(A/2)|`.
    pub brute_tail: f64,
    pub euler: f64,
    pub euler_tail: f64,
    pub terms: u64,
}

impl AqReport {
    pub fn discrepancy(&self) -> f64 {
        (self.brute - self.euler).abs()
    }

    pub fn consistent(&self) -> bool {
        self.discrepancy() <= self.brute_tail + self.euler_tail
    }
}

fn check_squarefree_modulus(q: u64) -> Result<Vec<u64>> {
    if q == 0 || !is_squarefree(q) {
        return domain(format!("q = {q} must be squarefree"));
    }
    Ok(primes_of(q))
}

/// `a_q(n)` two ways: the double sum over `h, h' | q` and `D, D' ≤ A_max`,
/// and the local product `∏_{p∤n} u_q(p) ∏_{p|n} (u_q(p) + U_q(p))`.
pub fn a_q(n: u64, q: u64, delta: &DeltaModulus, prof: &LocalProfile, a_max: u64) -> Result<AqReport> {
    if n == 0 {
        return domain("a_q(n) needs n ≥ 1");
    }
    let qp = check_squarefree_modulus(q)?;
    if a_max < 2 {
        return domain("A_max must be at least 2");
    }
    if a_max > A_MAX_LIMIT {
        return Err(ApmError::Resource { what: "a_q cutoff A_max", requested: a_max, limit: A_MAX_LIMIT });
    }
    let k = qp.len();
    let nm = 1usize << k;
    let prod: Vec<u64> = (0..nm).map(|m| mask_product(&qp, m)).collect();
    let divides_n: Vec<bool> = prod.iter().map(|&d| n.is_multiple_of(d)).collect();
    // Σ_{h,h' | q} μ(h)μ(h') [gcd | n] / lcm over the q-part of D and D'
    let mut inner = vec![vec![0.0f64; nm]; nm];
    for (m1, row) in inner.iter_mut().enumerate() {
        for (m2, slot) in row.iter_mut().enumerate() {
            for h1 in 0..nm {
                for h2 in 0..nm {
                    let a = m1 | h1;
                    let b = m2 | h2;
                    if !divides_n[a & b] {
                        continue;
                    }
                    let sign = if (h1.count_ones() + h2.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    *slot += sign / prod[a | b] as f64;
                }
            }
        }
    }
    // (D, g(D), q-mask, D / q-part)
    let support: Vec<(u64, f64, usize, u64)> = (1..=a_max)
        .filter_map(|d| {
            let g = g_delta_f64(d, delta, prof);
            if g == 0.0 {
                return None;
            }
            let mask = (0..k).filter(|&i| d % qp[i] == 0).fold(0usize, |m, i| m | 1 << i);
            Some((d, g, mask, d / prod[mask]))
        })
        .collect();
    let half = support.partition_point(|s| s.0 <= a_max / 2);
    let rows: Vec<(f64, f64)> = (0..support.len())
        .into_par_iter()
        .map(|i| {
            let (_, g1, m1, o1) = support[i];
            let mut full = 0.0;
            let mut part = 0.0;
            for (j, &(_, g2, m2, o2)) in support.iter().enumerate().skip(i) {
                let go = gcd(o1, o2);
                if !n.is_multiple_of(go) {
                    continue;
                }
                let mult = if j == i { 1.0 } else { 2.0 };
                let t = mult * g1 * g2 * go as f64 / (o1 as f64 * o2 as f64) * inner[m1][m2];
                full += t;
                if j < half {
                    part += t;
                }
            }
            (full, part)
        })
        .collect();
    let brute: f64 = rows.iter().map(|r| r.0).sum();
    let brute_half: f64 = rows.iter().map(|r| r.1).sum();
    let terms = (support.len() as u64).pow(2) * (nm as u64).pow(2);

    let c = u_product(delta, prof, &ProductConfig::default())?;
    let mut primes = qp.clone();
    primes.extend(primes_of(n));
    primes.sort_unstable();
    primes.dedup();
    let mut ratio = 1.0;
    for p in primes {
        let pf = p as f64;
        let g = g_delta_f64(p, delta, prof);
        let m = if q.is_multiple_of(p) { -1.0 } else { g };
        let u = 1.0 + 2.0 * m / pf;
        let local = if n.is_multiple_of(p) { u + m * m / pf } else { u };
        ratio *= local / (1.0 + 2.0 * g / pf);
    }
    Ok(AqReport {
        n,
        q,
        a_max,
        brute,
        brute_tail: 2.0 * (brute - brute_half).abs(),
        euler: c.value.re * ratio,
        euler_tail: c.tail_bound * ratio.abs(),
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KqReport {
    pub s: Complex64,
    pub q: u64,
    pub n_max: u64,
    pub series: Complex64,
    pub series_tail: f64,
    pub closed: Complex64,
    pub closed_tail: f64,
}

impl KqReport {
    pub fn discrepancy(&self) -> f64 {
        (self.series - self.closed).norm()
    }

    pub fn combined_tail(&self) -> f64 {
        self.series_tail + self.closed_tail
    }

    pub fn consistent(&self) -> bool {
        self.discrepancy() <= self.combined_tail()
    }
}

/// `Σ_{m ≥ a} m^{-s}` by Euler–Maclaurin, for large `a`.
fn power_tail(s: Complex64, a: f64) -> Complex64 {
    let a_s = (-s * a.ln()).exp();
    a * a_s / (s - 1.0) + a_s * 0.5 + s * a_s / (12.0 * a) - s * (s + 1.0) * (s + 2.0) * a_s / (720.0 * a * a * a)
}

/// `𝒦_q(s) = Σ_{q | n ≤ N} a_q(n) n^{-s}` plus an Euler–Maclaurin tail,
/// against `ζ(s) 𝒫_Δ(s) θ_s(q) / q^s`.
pub fn k_q(s: Complex64, q: u64, delta: &DeltaModulus, prof: &LocalProfile, n_max: u64) -> Result<KqReport> {
    if s.re < 1.5 {
        return domain(format!("𝒦_q(s) series needs Re s ≥ 3/2, got {}", s.re));
    }
    let qp = check_squarefree_modulus(q)?;
    if n_max > K_N_MAX_LIMIT {
        return Err(ApmError::Resource { what: "𝒦_q series length", requested: n_max, limit: K_N_MAX_LIMIT });
    }
    let m_max = n_max / q;
    if m_max < 1000 {
        return domain(format!("𝒦_q series needs N/q ≥ 1000, got {m_max}"));
    }
    let cfg = ProductConfig::default();
    let t_p = |p: u64| -> f64 {
        if q.is_multiple_of(p) || delta.divides_by(p) {
            return 0.0;
        }
        let pf = p as f64;
        let g = prof.r_f64(p);
        (g * g / pf) / (1.0 + 2.0 * g / pf)
    };
    let sieve = SieveTable::build(m_max)?;
    let mut j = vec![1.0f64; m_max as usize + 1];
    for m in 2..=m_max as usize {
        let p = sieve.smallest_prime_factor(m as u64) as usize;
        let rest = m / p;
        j[m] = if rest.is_multiple_of(p) { j[rest] } else { j[rest] * (1.0 + t_p(p as u64)) };
    }
    let lq = (q as f64).ln();
    let mut partial = Complex64::from(0.0);
    for m in (1..=m_max as usize).rev() {
        partial += j[m] * (-s * ((m as f64).ln() + lq)).exp();
    }
    let (mut mean, mut sup, mut inf) = (1.0, 1.0, 1.0);
    for p in primes_up_to(100_000) {
        let t = t_p(p);
        mean *= 1.0 + t / p as f64;
        sup *= (1.0 + t).max(1.0);
        inf *= (1.0 + t).min(1.0);
    }
    let q_s = (-s * lq).exp();
    let a = (m_max + 1) as f64;
    let tail = mean * q_s * power_tail(s, a);
    let tail_err = (sup - inf) * q_s.norm() * power_tail(Complex64::from(s.re), a).re;

    let c = u_product(delta, prof, &cfg)?;
    let c_q = qp.iter().fold(c.value.re, |acc, &p| {
        let pf = p as f64;
        acc * (1.0 - 1.0 / pf) / (1.0 + 2.0 * g_delta_f64(p, delta, prof) / pf)
    });
    let series = c_q * (partial + tail);
    let series_tail = c_q.abs() * tail_err + series.norm() * c.tail_bound / c.value.norm();

    let pd = p_delta(s, delta, prof, &cfg)?;
    let factor = zeta(s)? * theta_s(q, s, prof)? * q_s;
    Ok(KqReport {
        s,
        q,
        n_max,
        series,
        series_tail,
        closed: factor * pd.value,
        closed_tail: factor.norm() * pd.tail_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeCount {
    pub exact: u64,
    #[serde(serialize_with = "ser_rational")]
    pub main: BigRational,
}

/// `#{l + l' = n : D | l, D' | l'}` against `n / [D, D']` when `(D, D') | n`.
pub fn lattice_pair_count(n: u64, d: u64, d2: u64) -> Result<LatticeCount> {
    if n < 2 {
        return domain("lattice count needs n ≥ 2");
    }
    if d == 0 || d2 == 0 {
        return domain("lattice moduli must be positive");
    }
    let exact = (d..n).step_by(d as usize).filter(|&l| (n - l).is_multiple_of(d2)).count() as u64;
    let main = if n.is_multiple_of(d.gcd(&d2)) {
        BigRational::new(BigInt::from(n), BigInt::from(d.lcm(&d2)))
    } else {
        BigRational::zero()
    };
    Ok(LatticeCount { exact, main })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dm(d: u64) -> DeltaModulus {
        DeltaModulus::new(d).unwrap()
    }

    fn dflt() -> LocalProfile {
        LocalProfile::default_profile()
    }

    fn r(n: i64, d: i64) -> BigRational {
        rat(n, d)
    }

    /// Triple loop over `(q, l, l')` straight from the definition.
    fn s_oracle(x: u64, delta: &DeltaModulus, prof: &LocalProfile) -> BigRational {
        let mut total = BigRational::zero();
        for q in 1..=x {
            let g = g_delta(q, delta, prof).unwrap();
            for l in 1..x {
                for l2 in 1..=x - l {
                    let n = l + l2;
                    if n % q != 0 || gcd(l * l2, q) != 1 {
                        continue;
                    }
                    total += &g
                        * r(((x - n) * (x - n) * n) as i64, 1)
                        * f_delta(l, delta, prof).unwrap()
                        * f_delta(l2, delta, prof).unwrap();
                }
            }
        }
        total
    }

    #[test]
    fn s_delta_small_cases() {
        let p = dflt();
        let s2 = s_delta_brute(2, &dm(1), &p).unwrap();
        assert!(s2.exact_value().unwrap().is_zero());
        assert_eq!(s2.terms, 2);
        // (1,1) carries (3-2)²·2·(g(1) + g(2)) and g(2) = r(2) = 0
        let s3 = s_delta_brute(3, &dm(1), &p).unwrap();
        assert_eq!(s3.exact_value().unwrap(), &r(2, 1));
        for d in [1, 2, 3] {
            for x in [4, 9, 17, 30] {
                let got = s_delta_brute(x, &dm(d), &p).unwrap();
                assert_eq!(got.exact_value().unwrap(), &s_oracle(x, &dm(d), &p), "X={x} Δ={d}");
            }
        }
        assert!(matches!(s_delta_brute(5001, &dm(1), &p), Err(ApmError::Resource { .. })));
    }

    #[test]
    fn term_count_matches_enumeration() {
        for x in [2u64, 5, 12] {
            let mut count = 0;
            for q in 1..=x {
                for l in 1..x {
                    for l2 in 1..=x - l {
                        if (l + l2) % q == 0 && gcd(l * l2, q) == 1 {
                            count += 1;
                        }
                    }
                }
            }
            assert_eq!(s_terms(x), count);
        }
    }

    #[test]
    fn s_delta_two_orders_at_200() {
        let p = dflt();
        let a = s_delta_brute(200, &dm(1), &p).unwrap();
        let b = s_less(200, &dm(1), &p).unwrap();
        assert_eq!(a.exact_value(), b.exact_value());
    }

    #[test]
    fn float_matches_exact() {
        let p = dflt();
        let xs = [60.0, 150.0];
        let fl = s_delta_float(&xs, &dm(1), &p).unwrap();
        for (x, v) in xs.iter().zip(fl) {
            let e = rat_to_f64(s_delta_brute(*x as u64, &dm(1), &p).unwrap().exact_value().unwrap());
            assert!((v - e).abs() <= 1e-12 * e.abs(), "{v} vs {e}");
        }
    }

    #[test]
    fn l_delta_examples() {
        let p = dflt();
        assert!(l_delta(11, 10, &dm(1), &p).unwrap().exact_value().unwrap().is_zero());
        assert_eq!(l_delta(1, 3, &dm(1), &p).unwrap().exact_value().unwrap(), &r(2, 1));
        let f = |n| f_delta(n, &dm(1), &p).unwrap();
        let mut want = BigRational::zero();
        for (l, l2) in [(1, 1), (1, 3), (3, 1), (1, 5), (3, 3), (5, 1)] {
            let n: u64 = l + l2;
            want += r(((6 - n) * (6 - n) * n) as i64, 1) * f(l) * f(l2);
        }
        assert_eq!(l_delta(2, 6, &dm(1), &p).unwrap().exact_value().unwrap(), &want);
    }

    #[test]
    fn s_greater_vanishes() {
        let p = dflt();
        for x in [2, 7, 40] {
            let s = s_greater(x, 3 * x, &dm(1), &p).unwrap();
            assert!(s.exact_value().unwrap().is_zero());
            assert_eq!(s.terms, 0);
        }
    }

    #[test]
    fn splitting_identities() {
        let p = dflt();
        let x2 = j_star_delta(2, &dm(1), &p).unwrap();
        assert!(x2.lhs.is_zero() && x2.holds());
        assert!(j_star_delta(50, &dm(1), &p).unwrap().holds());
        for d in [1, 2, 3] {
            let sp = Splitting::new(60, &dm(d), &p).unwrap();
            for x in 2..=60 {
                assert!(sp.eval(&r(x, 1)).unwrap().holds(), "X={x} Δ={d}");
            }
            assert!(sp.eval(&r(119, 2)).unwrap().holds());
        }
    }

    #[test]
    fn j_star_orders_agree() {
        let p = dflt();
        assert!(j_star(2, &p).unwrap().is_zero());
        assert_eq!(j_star(20, &p).unwrap(), j_star_interchanged(20, &p).unwrap());
        assert!(big_i(4, &p).unwrap().is_zero());
    }

    #[test]
    fn h_small_examples() {
        let p = dflt();
        let two = Exponent::Integer(2);
        let one = h_small(7, two, 1, &dm(1), &p).unwrap();
        assert_eq!(one.brute, SumValue::Exact(r(1, 1)));
        let h = h_small(3, two, 3, &dm(1), &p).unwrap();
        assert_eq!(h.brute, SumValue::Exact(r(6, 1)));
        assert!(h.agree);
        let h = h_small(1, two, 5, &dm(1), &p).unwrap();
        assert_eq!(h.brute, SumValue::Exact(r(80, 3)));
        assert!(h.agree);
        assert!(h_small(1, two, 6, &dm(1), &p).is_err());
    }

    #[test]
    fn h_small_grid() {
        let p = dflt();
        let us = ["1/2", "2", "1+1i"].map(|s| s.parse::<Exponent>().unwrap());
        for pr in [2u64, 3, 5, 7, 11, 13] {
            for q in [1, pr, 3 * pr] {
                for k in 0..=6 {
                    for u in us {
                        for d in [1, 3] {
                            let h = h_small(q, u, pr.pow(k), &dm(d), &p).unwrap();
                            assert!(h.agree, "p={pr} q={q} k={k} u={u:?} Δ={d}: {h:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("4/2".parse::<Exponent>().unwrap(), Exponent::Integer(2));
        assert_eq!("1/2".parse::<Exponent>().unwrap(), Exponent::Complex(Complex64::from(0.5)));
        assert_eq!("1+1i".parse::<Exponent>().unwrap(), Exponent::Complex(Complex64::new(1.0, 1.0)));
        assert!("x".parse::<Exponent>().is_err());
    }

    #[test]
    fn frak_h_examples() {
        let p = dflt();
        let f = frak_h(3, Complex64::from(1.0), &dm(1), FrakVariant::P, 40, &p).unwrap();
        assert!((f.closed - 1.0).norm() < 1e-15);
        assert!((f.series - 1.0).norm() < 1e-12, "{f:?}");
        let f = frak_h(5, Complex64::from(1.5), &dm(1), FrakVariant::One, 40, &p).unwrap();
        assert!((f.series - f.closed).norm() <= 1e-10, "{f:?}");
        let f = frak_h(3, Complex64::new(0.7, 2.0), &dm(3), FrakVariant::OneStar, 40, &p).unwrap();
        assert!(f.agree);
        assert!((f.normalized.unwrap() - 1.0).norm() < 1e-12);
        assert!(frak_h(3, Complex64::from(2.0), &dm(1), FrakVariant::P, 40, &p).is_err());
        assert!(frak_h(3, Complex64::from(1.0), &dm(3), FrakVariant::One, 40, &p).is_err());
    }

    #[test]
    fn frak_h_near_convergence_edge() {
        let p = dflt();
        for pr in [2u64, 3, 5, 7] {
            // |p²U| = 1.2
            let u = Complex64::new(2.0 - 1.2f64.ln() / (pr as f64).ln(), 0.3);
            for v in [FrakVariant::P, FrakVariant::One] {
                let f = frak_h(pr, u, &dm(1), v, 40, &p).unwrap();
                assert!(f.agree, "p={pr} {v:?}: {f:?}");
            }
        }
    }

    #[test]
    fn g_big_g_is_minus_one() {
        let p = dflt();
        for pr in [3, 5, 7] {
            assert_eq!(r(-1, 1), g_delta(pr, &dm(1), &p).unwrap() * big_g(pr, pr, &dm(1), &p).unwrap());
        }
    }

    #[test]
    fn a_q_dual_evaluation() {
        let p = dflt();
        let lo = a_q(1, 1, &dm(1), &p, 1000).unwrap();
        let hi = a_q(1, 1, &dm(1), &p, 10_000).unwrap();
        assert!(lo.consistent(), "{lo:?}");
        assert!(hi.consistent(), "{hi:?}");
        assert!(hi.discrepancy() < lo.discrepancy());
        let at5 = a_q(5, 1, &dm(1), &p, 1000).unwrap();
        let g: f64 = 1.0 / 3.0;
        let want = (1.0 + 2.0 * g / 5.0 + g * g / 5.0) / (1.0 + 2.0 * g / 5.0);
        assert!((at5.euler / lo.euler - want).abs() < 1e-14);
        assert!(a_q(1, 4, &dm(1), &p, 1000).is_err());
    }

    #[test]
    fn k_q_dual_evaluation() {
        let p = dflt();
        for (q, s) in [(1, Complex64::from(2.0)), (3, Complex64::from(2.0)), (15, Complex64::new(2.0, 3.0))] {
            let k = k_q(s, q, &dm(1), &p, 1_000_000).unwrap();
            assert!(k.consistent(), "{k:?}");
            assert!(k.discrepancy() <= 1e-5 * k.closed.norm(), "{k:?}");
        }
        assert!(k_q(Complex64::from(1.2), 1, &dm(1), &p, 1_000_000).is_err());
    }

    #[test]
    fn lattice_examples() {
        let c = lattice_pair_count(12, 1, 1).unwrap();
        assert_eq!((c.exact, c.main.clone()), (11, r(12, 1)));
        let c = lattice_pair_count(12, 2, 3).unwrap();
        assert_eq!(c.main, r(2, 1));
        assert!((c.exact as i64 - 2).abs() <= 1);
        for n in 2..60 {
            for (d, d2) in [(4, 6), (6, 9), (10, 4)] {
                if n % gcd(d, d2) != 0 {
                    assert_eq!(lattice_pair_count(n, d, d2).unwrap().exact, 0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lattice_within_one(n in 2u64..=500, d in 1u64..=20, d2 in 1u64..=20) {
            let c = lattice_pair_count(n, d, d2).unwrap();
            if n % gcd(d, d2) == 0 {
                prop_assert!((r(c.exact as i64, 1) - c.main).abs() <= r(1, 1));
            }
        }

        #[test]
        fn l_weight_symmetry(q in 1u64..8, x in 2u64..30, d in prop::sample::select(vec![1u64, 2, 3])) {
            let p = dflt();
            let a = l_delta(q, x, &dm(d), &p).unwrap();
            let b = l_delta_l_weighted(q, x, &dm(d), &p).unwrap();
            prop_assert_eq!(a.exact_value().unwrap(), &(r(2, 1) * b.exact_value().unwrap()));
        }
    }
}
