//! Dirichlet characters modulo `q`.
//!
//! Characters are stored as exponent vectors on a fixed set of generators of
//! `(Z/qZ)^×`, and their values as indices into the group of `E`-th roots of
//! unity where `E` is the exponent of the unit group. Everything that can be
//! decided exactly (orthogonality, parity, conductors) is decided in index
//! arithmetic; complex values appear only at the boundary.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;

use crate::analytic::{f_chi, ProductConfig};
use crate::arith::{euler_phi, gcd, lcm, mobius, Factorization};
use crate::error::{domain, Result};
use crate::singular::{DeltaModulus, LocalProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GenKind {
    /// Primitive root of an odd prime power.
    Odd,
    /// `-1` modulo `2^e`, `e ≥ 2`.
    MinusOne,
    /// `5` modulo `2^e`, `e ≥ 3`.
    Five,
}

#[derive(Clone, Debug)]
struct Generator {
    p: u64,
    e: u32,
    kind: GenKind,
    order: u64,
}

/// Discrete-log data for `(Z/qZ)^×`, shared by every character mod `q`.
#[derive(Debug)]
struct UnitGroup {
    q: u64,
    gens: Vec<Generator>,
    exponent: u64,
    /// `logs[n * gens.len() + i]` is the log of `n` on generator `i`;
    /// `u32::MAX` in slot 0 marks non-units.
    logs: Vec<u32>,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Smallest primitive root mod `p` that is also a primitive root mod `p²`,
/// hence of every power of `p`.
fn primitive_root(p: u64) -> u64 {
    let fac = Factorization::of(p - 1).expect("p - 1 >= 1");
    let is_root_mod_p = |g: u64| fac.primes().all(|l| pow_mod(g, (p - 1) / l, p) != 1);
    let p2 = p * p;
    (2..)
        .find(|&g| is_root_mod_p(g) && pow_mod(g, p - 1, p2) != 1)
        .expect("primitive roots exist")
}

impl UnitGroup {
    fn new(q: u64) -> Self {
        let fac = Factorization::of(q).expect("q >= 1");
        let mut gens = Vec::new();
        for &(p, e) in &fac.factors {
            if p == 2 {
                if e >= 2 {
                    gens.push(Generator { p, e, kind: GenKind::MinusOne, order: 2 });
                }
                if e >= 3 {
                    gens.push(Generator { p, e, kind: GenKind::Five, order: 1 << (e - 2) });
                }
            } else {
                let order = (p - 1) * p.pow(e - 1);
                gens.push(Generator { p, e, kind: GenKind::Odd, order });
            }
        }
        let exponent = gens.iter().fold(1, |acc, g| lcm(acc, g.order));

        // per-component discrete log tables, indexed by residue mod p^e
        let tables: Vec<Vec<u32>> = gens
            .iter()
            .map(|g| {
                let m = g.p.pow(g.e);
                let mut t = vec![u32::MAX; m as usize];
                let base = match g.kind {
                    GenKind::Odd => primitive_root(g.p),
                    GenKind::MinusOne => m - 1,
                    GenKind::Five => 5,
                };
                let mut x = 1u64;
                for k in 0..g.order {
                    t[x as usize] = k as u32;
                    x = x * base % m;
                }
                t
            })
            .collect();

        let r = gens.len().max(1);
        let mut logs = vec![0u32; q as usize * r];
        for n in 0..q {
            let slot = &mut logs[n as usize * r..(n as usize + 1) * r];
            if gcd(n, q) != 1 {
                slot[0] = u32::MAX;
                continue;
            }
            for (i, g) in gens.iter().enumerate() {
                let m = g.p.pow(g.e);
                let x = n % m;
                slot[i] = match g.kind {
                    GenKind::Odd => tables[i][x as usize],
                    GenKind::MinusOne => (x % 4 == 3) as u32,
                    GenKind::Five => {
                        let y = if x % 4 == 3 { m - x } else { x };
                        tables[i][y as usize]
                    }
                };
            }
        }
        UnitGroup { q, gens, exponent, logs }
    }

    fn log(&self, n: u64) -> Option<&[u32]> {
        let r = self.gens.len().max(1);
        let i = (n % self.q) as usize;
        let slot = &self.logs[i * r..(i + 1) * r];
        if slot[0] == u32::MAX {
            None
        } else {
            Some(&slot[..self.gens.len()])
        }
    }
}

/// A Dirichlet character modulo `q`.
#[derive(Clone, Debug)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    exps: Vec<u64>,
    conductor: u64,
    parity: u8,
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.q == other.group.q && self.exps == other.exps
    }
}

impl DirichletCharacter {
    fn from_exps(group: Arc<UnitGroup>, exps: Vec<u64>) -> Self {
        let mut chi = DirichletCharacter { group, exps, conductor: 1, parity: 0 };
        chi.conductor = chi.compute_conductor();
        let minus_one = chi.group.q.saturating_sub(1).max(1);
        chi.parity = match chi.value_index(minus_one) {
            Some(0) | None => 0,
            Some(_) => 1,
        };
        chi
    }

    fn compute_conductor(&self) -> u64 {
        let mut d = 1u64;
        let mut two_exp = 0u32;
        for (g, &k) in self.group.gens.iter().zip(&self.exps) {
            match g.kind {
                GenKind::Odd => {
                    if k != 0 {
                        // trivial on 1 + p^f Z iff p^{e-f} | k
                        let mut f = g.e;
                        let mut kk = k;
                        while f > 1 && kk % g.p == 0 {
                            kk /= g.p;
                            f -= 1;
                        }
                        d *= g.p.pow(f);
                    }
                }
                GenKind::MinusOne => {
                    if k != 0 {
                        two_exp = two_exp.max(2);
                    }
                }
                GenKind::Five => {
                    if k != 0 {
                        let mut f = g.e;
                        let mut kk = k;
                        while f > 3 && kk % 2 == 0 {
                            kk /= 2;
                            f -= 1;
                        }
                        two_exp = two_exp.max(f);
                    }
                }
            }
        }
        d << two_exp
    }

    pub fn modulus(&self) -> u64 {
        self.group.q
    }

    /// Order of the root-of-unity group the value indices live in.
    pub fn exponent(&self) -> u64 {
        self.group.exponent
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    /// `χ(n) = exp(2πi · index / E)`, or `None` when `(n, q) > 1`.
    pub fn value_index(&self, n: u64) -> Option<u64> {
        let logs = self.group.log(n)?;
        let e = self.group.exponent;
        let mut acc = 0u64;
        for ((g, &k), &l) in self.group.gens.iter().zip(&self.exps).zip(logs) {
            let step = e / g.order;
            acc = (acc + (k * l as u64 % g.order) * step) % e;
        }
        Some(acc)
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.value_index(n) {
            None => Complex64::new(0.0, 0.0),
            Some(j) => root_of_unity(j, self.group.exponent),
        }
    }

    /// Value at a possibly negative integer.
    pub fn value_signed(&self, n: i64) -> Complex64 {
        let q = self.group.q as i64;
        self.value(n.rem_euclid(q) as u64)
    }

    pub fn parity(&self) -> u8 {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == 0
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.group.q
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&k| k == 0)
    }

    pub fn conj(&self) -> Self {
        let exps = self
            .group
            .gens
            .iter()
            .zip(&self.exps)
            .map(|(g, &k)| (g.order - k) % g.order)
            .collect();
        DirichletCharacter {
            group: self.group.clone(),
            exps,
            conductor: self.conductor,
            parity: self.parity,
        }
    }

    /// The primitive character inducing `self`.
    pub fn primitive_part(&self) -> DirichletCharacter {
        let d = self.conductor;
        if d == self.group.q {
            return self.clone();
        }
        let group = Arc::new(UnitGroup::new(d));
        let exps = group
            .gens
            .iter()
            .map(|h| {
                let (g, &k) = self
                    .group
                    .gens
                    .iter()
                    .zip(&self.exps)
                    .find(|(g, _)| g.p == h.p && g.kind == h.kind)
                    .expect("conductor components come from the modulus");
                // generator images agree, so k/order is preserved
                k * h.order / g.order
            })
            .collect();
        DirichletCharacter::from_exps(group, exps)
    }

    /// Gauss sum `τ(χ) = Σ_a χ(a) e(a/q)`.
    pub fn gauss_sum(&self) -> Complex64 {
        let q = self.group.q;
        (1..=q)
            .map(|a| self.value(a) * root_of_unity(a % q, q))
            .fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
    }
}

fn root_of_unity(j: u64, e: u64) -> Complex64 {
    let theta = 2.0 * PI * (j % e) as f64 / e as f64;
    Complex64::new(theta.cos(), theta.sin())
}

/// All `φ(q)` characters mod `q`, ordered lexicographically by exponent
/// vector on the generators (odd primes ascending; `2^e` uses `-1` then `5`).
#[derive(Clone, Debug)]
pub struct CharacterGroup {
    q: u64,
    characters: Vec<DirichletCharacter>,
}

impl CharacterGroup {
    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn characters(&self) -> &[DirichletCharacter] {
        &self.characters
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn principal(&self) -> &DirichletCharacter {
        &self.characters[0]
    }

    pub fn primitive(&self) -> impl Iterator<Item = &DirichletCharacter> {
        self.characters.iter().filter(|c| c.is_primitive())
    }

    /// `Σ_χ χ(n) χ̄(m)` decided in index arithmetic.
    ///
    /// The values `χ(n m̄)` run over a subgroup of the roots of unity with
    /// equal multiplicity, so the sum is `φ(q)` when every index is zero and
    /// exactly zero otherwise; the second case is certified by checking that
    /// the index histogram is invariant under a nonzero shift.
    pub fn orthogonality_exact(&self, n: u64, m: u64) -> Result<u64> {
        let q = self.q;
        if gcd(n % q.max(1), q) != 1 && q > 1 || gcd(m % q.max(1), q) != 1 && q > 1 {
            return domain(format!("orthogonality needs (nm, {q}) = 1"));
        }
        let e = self.characters[0].exponent();
        let mut hist = vec![0u64; e as usize];
        for chi in &self.characters {
            let a = chi.value_index(n).expect("unit");
            let b = chi.value_index(m).expect("unit");
            hist[((a + e - b) % e) as usize] += 1;
        }
        let total = self.characters.len() as u64;
        if hist[0] == total {
            return Ok(total);
        }
        let shift = (1..e as usize).find(|&s| hist[s] > 0).expect("nonzero index present");
        let invariant = (0..e as usize).all(|j| hist[j] == hist[(j + shift) % e as usize]);
        if invariant {
            Ok(0)
        } else {
            domain("character index histogram is not shift invariant")
        }
    }
}

pub fn characters_mod(q: u64) -> Result<CharacterGroup> {
    if q == 0 {
        return domain("modulus must be positive");
    }
    let group = Arc::new(UnitGroup::new(q));
    let orders: Vec<u64> = group.gens.iter().map(|g| g.order).collect();
    let mut characters = Vec::new();
    let mut exps = vec![0u64; orders.len()];
    loop {
        characters.push(DirichletCharacter::from_exps(group.clone(), exps.clone()));
        // odometer, last generator fastest
        let mut i = orders.len();
        loop {
            if i == 0 {
                return Ok(CharacterGroup { q, characters });
            }
            i -= 1;
            exps[i] += 1;
            if exps[i] < orders[i] {
                break;
            }
            exps[i] = 0;
        }
    }
}

pub fn conductor_decompose(chi: &DirichletCharacter) -> (DirichletCharacter, u64) {
    (chi.primitive_part(), chi.conductor())
}

fn mod_inverse(m: u64, d: u64) -> u64 {
    if d == 1 {
        return 0;
    }
    let g = (m as i64 % d as i64).extended_gcd(&(d as i64));
    g.x.rem_euclid(d as i64) as u64
}

/// Both sides of the parity-split orthogonality relation
/// `2 Σ*_{χ(d), χ(-1)=(-1)^a} χ(n m̄) = Σ_{k|d, n≡m(k)} φ(k)μ(d/k) + (-1)^a Σ_{k|d, n≡-m(k)} φ(k)μ(d/k)`.
pub fn parity_orthogonality_sides(d: u64, n: u64, m: u64, a: u8) -> Result<(i64, i64)> {
    if d == 0 || a > 1 {
        return domain("need d ≥ 1 and a ∈ {0, 1}");
    }
    if gcd((n % d) * (m % d) % d.max(1), d) != 1 && d > 1 {
        return domain(format!("(nm, d) must be 1 for d = {d}, n = {n}, m = {m}"));
    }
    let group = characters_mod(d)?;
    let target = (n % d) * mod_inverse(m, d) % d;
    let lhs_f: f64 = group
        .primitive()
        .filter(|c| c.parity() == a)
        .map(|c| c.value(target).re)
        .sum::<f64>()
        * 2.0;
    let lhs = lhs_f.round();
    if (lhs - lhs_f).abs() > 1e-8 {
        return domain(format!("character sum {lhs_f} is not integral"));
    }
    let sign: i64 = if a == 0 { 1 } else { -1 };
    let mut rhs = 0i64;
    for k in crate::arith::divisors(d)? {
        let w = euler_phi(k)? as i64 * mobius(d / k)? as i64;
        if n % k == m % k {
            rhs += w;
        }
        if (n % k + m % k).is_multiple_of(k) {
            rhs += sign * w;
        }
    }
    Ok((lhs as i64, rhs))
}

/// The common integer value of the parity-split orthogonality relation.
pub fn parity_orthogonality(d: u64, n: u64, m: u64, a: u8) -> Result<i64> {
    let (lhs, rhs) = parity_orthogonality_sides(d, n, m, a)?;
    if lhs != rhs {
        return domain(format!("parity orthogonality fails at d={d}, n={n}, m={m}, a={a}: {lhs} ≠ {rhs}"));
    }
    Ok(lhs)
}

/// `ε(χ) = τ(χ) / (i^k √d)` for primitive nonprincipal `χ`.
pub fn root_number(chi: &DirichletCharacter) -> Result<Complex64> {
    let d = chi.modulus();
    if !chi.is_primitive() || d == 1 {
        return domain("root number needs a primitive character of modulus > 1");
    }
    let i_k = if chi.parity() == 0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };
    Ok(chi.gauss_sum() / (i_k * (d as f64).sqrt()))
}

/// `Σ_{χ mod q} χ(-1) 𝓕_χ(s) 𝓕_χ̄(w)` in the absolutely convergent region.
pub fn char_pair_sum(
    q: u64,
    s: Complex64,
    w: Complex64,
    delta: &DeltaModulus,
    prof: &LocalProfile,
    cfg: &ProductConfig,
) -> Result<Complex64> {
    if s.re <= 1.0 || w.re <= 1.0 {
        return domain("char_pair_sum needs Re s, Re w > 1");
    }
    let group = characters_mod(q)?;
    let mut total = Complex64::new(0.0, 0.0);
    for chi in group.characters() {
        let sign = if chi.is_even() { 1.0 } else { -1.0 };
        let a = f_chi(s, chi, delta, prof, cfg)?.value;
        let b = f_chi(w, &chi.conj(), delta, prof, cfg)?.value;
        total += a * b * sign;
    }
    Ok(total)
}
