//! Dirichlet L-functions, the series `𝓕_χ(s)`, and every Euler product the
//! secondary terms need.
//!
//! Products are evaluated as `∏ ζ(a + b s)^k · ∏_{p ≤ P} (local residual)`,
//! where the zeta factors are chosen so the residual is `1 + O(p^{-e})` with
//! `e` comfortably above one. The tail beyond `P` is estimated by fitting
//! `|residual - 1| ≈ C p^{-e}` on the last primes and integrating.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{primes_up_to, Factorization};
use crate::characters::DirichletCharacter;
use crate::error::{domain, Result};
use crate::singular::{rat, DeltaModulus, LocalProfile};
use crate::special::{hurwitz_zeta_regular, zeta, zeta_unchecked};

/// A value together with an estimate of its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Valued {
    pub value: Complex64,
    pub tail_bound: f64,
}

impl Valued {
    pub fn exact(value: Complex64) -> Self {
        Valued { value, tail_bound: 0.0 }
    }

    fn mul(self, other: Valued) -> Valued {
        let value = self.value * other.value;
        let tail_bound = self.tail_bound * other.value.norm()
            + other.tail_bound * self.value.norm()
            + self.tail_bound * other.tail_bound;
        Valued { value, tail_bound }
    }

    fn scale(self, z: Complex64) -> Valued {
        Valued { value: self.value * z, tail_bound: self.tail_bound * z.norm() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductConfig {
    /// Largest prime multiplied in explicitly.
    pub p_max: u64,
    /// How many of a product's zeta accelerants to factor out.
    pub accelerants: usize,
    /// Multiplier applied to the fitted tail estimate.
    pub tail_safety: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig { p_max: 100_000, accelerants: usize::MAX, tail_safety: 2.0 }
    }
}

impl ProductConfig {
    pub fn with_p_max(p_max: u64) -> Self {
        ProductConfig { p_max, ..Default::default() }
    }
}

/// Per-prime local factors at a complex point, with `Y = p^{-s}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EulerLocalData {
    pub p: u64,
    pub s: Complex64,
    pub y: Complex64,
    /// `w_s(p) = 1 + 2r/p + Y r²/p`
    pub w: Complex64,
    /// `θ_s(p) = (1 - 1/p) / w_s(p)`
    pub theta: Complex64,
    /// `ψ_s(p) = 1 / (1 + rY)`
    pub psi: Complex64,
    /// `Δ_s(p) = 1 - Y`
    pub delta: Complex64,
    /// `q_s(p) = 1 + 2r/p + (rY/p)(p - 1 + r)`
    pub q: Complex64,
}

impl EulerLocalData {
    pub fn new(p: u64, s: Complex64, prof: &LocalProfile) -> Self {
        let r = prof.r_f64(p);
        let pf = p as f64;
        let y = (-s * pf.ln()).exp();
        let w = 1.0 + 2.0 * r / pf + y * (r * r / pf);
        EulerLocalData {
            p,
            s,
            y,
            w,
            theta: (1.0 - 1.0 / pf) / w,
            psi: 1.0 / (1.0 + y * r),
            delta: 1.0 - y,
            q: 1.0 + 2.0 * r / pf + y * (r / pf) * (pf - 1.0 + r),
        }
    }
}

/// Checks `w_s(p) + rY(1 - 1/p) = q_s(p)` coefficientwise in `Y`, exactly.
pub fn local_identity_holds(p: u64, prof: &LocalProfile) -> bool {
    let r = prof.r(p);
    let pr = rat(p as i64, 1);
    let one = rat(1, 1);
    let two = rat(2, 1);
    // coefficients [Y^0, Y^1]
    let w = [&one + &two * &r / &pr, &r * &r / &pr];
    let lhs = [w[0].clone(), &w[1] + &r * (&one - &one / &pr)];
    let rhs = [&one + &two * &r / &pr, &r * (&pr - &one + &r) / &pr];
    lhs == rhs
}

/// `p² [q_s(p) + (Y/p)(I(p) + g_1(p) f_1(p)²) - (1 + Y/(p-1))]`, the defect of
/// the per-prime collapse to `1 + Y/(p-1)`.
pub fn collapse_defect(p: u64, y: Complex64, prof: &LocalProfile) -> Complex64 {
    let r = prof.r_f64(p);
    let pf = p as f64;
    let big_i = if p == 2 { 2.0 } else { -r * (1.0 + 3.0 * r + r * r) };
    let q = 1.0 + 2.0 * r / pf + y * (r / pf) * (pf - 1.0 + r);
    let g = r;
    let f = 1.0 + r;
    (q + y / pf * (big_i + g * f * f) - (1.0 + y / (pf - 1.0))) * (pf * pf)
}

const PRIME_CACHE_LIMIT: u64 = 2_000_000;

fn cached_primes() -> &'static [(u64, f64)] {
    static PRIMES: OnceLock<Vec<(u64, f64)>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(PRIME_CACHE_LIMIT).into_iter().map(|p| (p, (p as f64).ln())).collect())
}

fn primes_with_logs(p_max: u64) -> std::borrow::Cow<'static, [(u64, f64)]> {
    if p_max <= PRIME_CACHE_LIMIT {
        let all = cached_primes();
        let n = all.partition_point(|&(p, _)| p <= p_max);
        std::borrow::Cow::Borrowed(&all[..n])
    } else {
        std::borrow::Cow::Owned(primes_up_to(p_max).into_iter().map(|p| (p, (p as f64).ln())).collect())
    }
}

/// `ζ(a + b s)^k`, removed from the product through the local factor
/// `(1 - p^{-a} Y^b)^k`.
#[derive(Clone, Copy, Debug)]
struct Accel {
    a: f64,
    b: i32,
    k: i32,
}

fn accel_local(acc: &Accel, lnp: f64, y: Complex64) -> Complex64 {
    let base = Complex64::from(1.0) - (-acc.a * lnp).exp() * y.powi(acc.b);
    base.powi(acc.k)
}

fn euler_product(
    s: Complex64,
    local: impl Fn(u64, Complex64) -> Complex64,
    accels: &[Accel],
    cfg: &ProductConfig,
) -> Result<Valued> {
    if cfg.p_max < 100 {
        return domain("Euler products need P_max ≥ 100");
    }
    let used = &accels[..accels.len().min(cfg.accelerants)];
    let mut pref = Complex64::from(1.0);
    for acc in used {
        let arg = s * acc.b as f64 + acc.a;
        if (arg - 1.0).norm() < 1e-14 {
            return domain(format!("accelerating factor ζ({arg}) sits on its pole"));
        }
        pref *= zeta_unchecked(arg).powi(acc.k);
    }
    let primes = primes_with_logs(cfg.p_max);
    let mut prod = Complex64::from(1.0);
    // (ln p, ln|v - 1|) over the upper quarter of the range for the tail fit
    let fit_from = cfg.p_max / 4;
    let mut fit = Vec::new();
    for &(p, lnp) in primes.iter() {
        let y = (-s * lnp).exp();
        let mut v = local(p, y);
        for acc in used {
            v *= accel_local(acc, lnp, y);
        }
        prod *= v;
        if p > fit_from {
            let dev = (v - 1.0).norm();
            if dev > 0.0 {
                fit.push((lnp, dev.ln()));
            }
        }
    }
    let value = pref * prod;
    let tail_bound = value.norm() * fitted_tail(&fit, cfg);
    Ok(Valued { value, tail_bound })
}

/// Relative tail `safety · C Σ_{p>P} p^{-e}` from a log-log fit of the last
/// local deviations. Deviations at rounding level carry no slope information;
/// if nothing else is left the residual is taken to decay at least like
/// `p^{-2}` from its largest observed size.
fn fitted_tail(fit: &[(f64, f64)], cfg: &ProductConfig) -> f64 {
    const NOISE: f64 = -29.9; // ln(1e-13)
    let lnp = (cfg.p_max as f64).ln();
    let above: Vec<(f64, f64)> = fit.iter().copied().filter(|f| f.1 > NOISE).collect();
    if above.len() < 8 {
        let worst = fit.iter().map(|f| f.1 + 2.0 * f.0).fold(f64::NEG_INFINITY, f64::max);
        if worst == f64::NEG_INFINITY {
            return 0.0;
        }
        return cfg.tail_safety * (worst - lnp).exp() / lnp;
    }
    let n = above.len() as f64;
    let mx = above.iter().map(|f| f.0).sum::<f64>() / n;
    let my = above.iter().map(|f| f.1).sum::<f64>() / n;
    let sxx: f64 = above.iter().map(|f| (f.0 - mx).powi(2)).sum();
    let sxy: f64 = above.iter().map(|f| (f.0 - mx) * (f.1 - my)).sum();
    let e = if sxx > 0.0 { -sxy / sxx } else { 2.0 };
    if e <= 1.05 {
        return f64::INFINITY;
    }
    let log_c = above.iter().map(|&(lx, ly)| ly + e * lx).fold(f64::NEG_INFINITY, f64::max);
    cfg.tail_safety * (log_c + (1.0 - e) * lnp).exp() / ((e - 1.0) * lnp)
}

fn check_pole(s: Complex64, at: f64, what: &str) -> Result<()> {
    if (s - at).norm() < 1e-14 {
        return domain(format!("{what} has a pole at s = {at}"));
    }
    Ok(())
}

/// `L(s, χ)` through Hurwitz zeta, with the Euler-factor correction for
/// imprimitive characters.
pub fn dirichlet_l(s: Complex64, chi: &DirichletCharacter) -> Result<Complex64> {
    let prim = chi.primitive_part();
    let d = prim.modulus();
    let base = if d == 1 {
        check_pole(s, 1.0, "L(s, χ) for principal χ")?;
        zeta(s)?
    } else {
        // Σ χ(a) = 0, so the Hurwitz poles cancel and the regular parts suffice
        let mut acc = Complex64::from(0.0);
        for a in 1..d {
            let v = prim.value(a);
            if v.norm() > 0.0 {
                acc += v * hurwitz_zeta_regular(s, a as f64 / d as f64)?;
            }
        }
        acc * (-s * (d as f64).ln()).exp()
    };
    let q = chi.modulus();
    if q == d {
        return Ok(base);
    }
    let mut corr = Complex64::from(1.0);
    for p in Factorization::of(q)?.primes() {
        corr *= Complex64::from(1.0) - prim.value(p) * (-s * (p as f64).ln()).exp();
    }
    Ok(base * corr)
}

/// `𝓕_χ(s) = L_χ(s) L_χ(s+1) Σ R_Δ(n) χ(n) n^{-s}`, the last series as an
/// Euler product.
pub fn f_chi(
    s: Complex64,
    chi: &DirichletCharacter,
    delta: &DeltaModulus,
    prof: &LocalProfile,
    cfg: &ProductConfig,
) -> Result<Valued> {
    if s.re <= 0.0 {
        return domain("𝓕_χ(s) is only continued to Re s > 0");
    }
    let l = dirichlet_l(s, chi)? * dirichlet_l(s + 1.0, chi)?;
    let local = |p: u64, y: Complex64| {
        let c = chi.value(p);
        if c.norm() == 0.0 {
            return Complex64::from(1.0);
        }
        let pf = p as f64;
        if delta.divides_by(p) {
            1.0 - c * y / pf
        } else {
            let r = prof.r_f64(p);
            1.0 + c * y * (r - 1.0 / pf) - c * c * y * y * (r / pf)
        }
    };
    Ok(euler_product(s, local, &[], cfg)?.scale(l))
}

/// `𝓕_χ(s) = L_χ(s) ∏_{p∤Δ} (1 + r χ(p) Y)`, the unfactored product form.
pub fn f_chi_product_form(
    s: Complex64,
    chi: &DirichletCharacter,
    delta: &DeltaModulus,
    prof: &LocalProfile,
    cfg: &ProductConfig,
) -> Result<Valued> {
    if s.re <= 0.0 {
        return domain("𝓕_χ(s) is only continued to Re s > 0");
    }
    let l = dirichlet_l(s, chi)?;
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            1.0 + chi.value(p) * y * prof.r_f64(p)
        }
    };
    Ok(euler_product(s, local, &[], cfg)?.scale(l))
}

/// `𝒫_Δ(s) = ∏_{p∤Δ} w_s(p)`, for `Re s ≥ -1`.
pub fn p_delta(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    if s.re < -1.0 - 1e-12 {
        return domain("𝒫_Δ(s) is evaluated only for Re s ≥ -1");
    }
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            let r = prof.r_f64(p);
            let pf = p as f64;
            1.0 + 2.0 * r / pf + y * (r * r / pf)
        }
    };
    let accels = [Accel { a: 2.0, b: 0, k: 2 }, Accel { a: 3.0, b: 1, k: 1 }];
    euler_product(s, local, &accels, cfg)
}

/// `θ_s(q) = φ(q)/q ∏_{p|q} 1/w_s(p)`.
pub fn theta_s(q: u64, s: Complex64, prof: &LocalProfile) -> Result<Complex64> {
    let fac = Factorization::of(q)?;
    let mut v = Complex64::from(fac.euler_phi() as f64 / q as f64);
    for p in fac.primes() {
        v /= EulerLocalData::new(p, s, prof).w;
    }
    Ok(v)
}

/// `𝒬_Δ(s) = ∏_{p∤Δ} q_s(p)`, continued to `Re s > -1/2` through `ζ(s+1)`.
pub fn q_delta(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    if s.re < -0.5 || (s.re <= -0.5 && s.im == 0.0) {
        return domain("𝒬_Δ(s) is continued only to Re s ≥ -1/2, off the real point");
    }
    if s.re <= 0.0 && cfg.accelerants == 0 {
        return domain("𝒬_Δ(s) left of Re s = 0 needs the ζ(s+1) factor");
    }
    check_pole(s, 0.0, "𝒬_Δ(s)")?;
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            let r = prof.r_f64(p);
            let pf = p as f64;
            1.0 + 2.0 * r / pf + y * (r / pf) * (pf - 1.0 + r)
        }
    };
    let accels = [
        Accel { a: 1.0, b: 1, k: 1 },
        Accel { a: 2.0, b: 2, k: -1 },
        Accel { a: 2.0, b: 0, k: 2 },
        Accel { a: 2.0, b: 1, k: 1 },
    ];
    euler_product(s, local, &accels, cfg)
}

/// `𝓕*_Δ(s) = ∏_{p∤Δ} (1 + rY)`, continued to `Re s > -1/2`.
pub fn f_star(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    if s.re < -0.5 || (s.re <= -0.5 && s.im == 0.0) {
        return domain("𝓕*_Δ(s) is continued only to Re s ≥ -1/2, off the real point");
    }
    check_pole(s, 0.0, "𝓕*_Δ(s)")?;
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            1.0 + y * prof.r_f64(p)
        }
    };
    let accels = [Accel { a: 1.0, b: 1, k: 1 }, Accel { a: 2.0, b: 2, k: -1 }, Accel { a: 2.0, b: 1, k: 2 }];
    euler_product(s, local, &accels, cfg)
}

/// `𝒬^>_Δ(s) = ζ(s) 𝒫_Δ(s) Σ_q g_Δ(q) θ_s(q) q^{-s}` with the `q`-sum as
/// its Euler product `∏_{p∤Δ} (1 + r θ_s(p) Y)`.
pub fn q_greater(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    if s.re <= -0.5 {
        return domain("𝒬^>_Δ(s) is continued only to Re s > -1/2");
    }
    check_pole(s, 1.0, "𝒬^>_Δ(s)")?;
    check_pole(s, 0.0, "𝒬^>_Δ(s)")?;
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            1.0 + r_theta_y(p, y, prof)
        }
    };
    let accels = [Accel { a: 1.0, b: 1, k: 1 }, Accel { a: 2.0, b: 2, k: -1 }, Accel { a: 2.0, b: 1, k: 1 }];
    let series = euler_product(s, local, &accels, cfg)?;
    let p = p_delta(s, delta, prof, cfg)?;
    Ok(series.mul(p).scale(zeta(s)?))
}

/// `𝒬^<_Δ(s) = Σ_q g_Δ(q)/φ(q) · 𝓕†(1) 𝓕_{χ₀}(s)` with `𝓕†(1)` the
/// regularised value (the `ζ` factor of `𝓕_{χ₀}(1)` deleted).
pub fn q_less(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    check_pole(s, 1.0, "𝒬^<_Δ(s)")?;
    let fs = f_star(s, delta, prof, cfg)?;
    let f1 = f_star(Complex64::from(1.0), delta, prof, cfg)?;
    // 1 + r ψ_1Δ_1ψ_sΔ_s / φ(p) = 1 + r(1 - Y) / (p (1 + r/p)(1 + rY))
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            let r = prof.r_f64(p);
            let pf = p as f64;
            1.0 + r * (1.0 - y) / (pf * (1.0 + r / pf) * (1.0 + r * y))
        }
    };
    let accels = [Accel { a: 2.0, b: 0, k: 1 }, Accel { a: 2.0, b: 1, k: -1 }];
    let h = euler_product(s, local, &accels, cfg)?;
    Ok(h.mul(fs).mul(f1).scale(zeta(s)?))
}

/// The nonzero terms of `R_s = Σ_{q≤X} g_Δ(q) θ_s(q) q^{-s}`: the support
/// (odd squarefree `q` prime to `Δ` with every `r(p) ≠ 0`) is fixed, and
/// each term is the product of its prime factors' terms.
#[derive(Clone, Debug)]
pub struct SquarefreeSupport {
    /// `(q, i, parent)`: `q = primes[i] · entries[parent].q` with `primes[i]`
    /// the largest prime factor; the first entry is `q = 1`.
    entries: Vec<(u64, usize, usize)>,
    primes: Vec<u64>,
}

impl SquarefreeSupport {
    pub fn new(x_max: u64, delta: &DeltaModulus, prof: &LocalProfile) -> Self {
        let primes: Vec<u64> = primes_up_to(x_max)
            .into_iter()
            .filter(|&p| !delta.divides_by(p) && prof.r_f64(p) != 0.0)
            .collect();
        // build in increasing q: index of q among supported values
        let mut index = vec![usize::MAX; x_max as usize + 1];
        let mut entries = Vec::new();
        if x_max >= 1 {
            index[1] = 0;
            entries.push((1, 0, 0));
        }
        let mut largest = vec![0u64; x_max as usize + 1];
        for &p in &primes {
            let mut m = p;
            while m <= x_max {
                largest[m as usize] = p;
                m += p;
            }
        }
        let mut allowed = vec![usize::MAX; x_max as usize + 1];
        for (i, &p) in primes.iter().enumerate() {
            allowed[p as usize] = i;
        }
        for q in 2..=x_max {
            let p = largest[q as usize];
            if p == 0 || allowed[p as usize] == usize::MAX {
                continue;
            }
            let rest = q / p;
            if rest.is_multiple_of(p) || index[rest as usize] == usize::MAX {
                continue;
            }
            index[q as usize] = entries.len();
            entries.push((q, allowed[p as usize], index[rest as usize]));
        }
        SquarefreeSupport { entries, primes }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn moduli(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Terms `g_Δ(q) θ_s(q) q^{-s}` in increasing `q`.
    pub fn terms(&self, s: Complex64, prof: &LocalProfile) -> Vec<Complex64> {
        let local: Vec<Complex64> = self
            .primes
            .iter()
            .map(|&p| r_theta_y(p, (-s * (p as f64).ln()).exp(), prof))
            .collect();
        let mut out: Vec<Complex64> = Vec::with_capacity(self.entries.len());
        for (i, &(_, k, parent)) in self.entries.iter().enumerate() {
            let v = if i == 0 { Complex64::from(1.0) } else { out[parent] * local[k] };
            out.push(v);
        }
        out
    }
}

pub fn r_partial(s: Complex64, x: f64, delta: &DeltaModulus, prof: &LocalProfile) -> Complex64 {
    if x < 1.0 {
        return Complex64::from(0.0);
    }
    let support = SquarefreeSupport::new(x.floor() as u64, delta, prof);
    support.terms(s, prof).into_iter().fold(Complex64::from(0.0), |a, b| a + b)
}

/// `r θ_s(p) Y` from `Y` alone.
fn r_theta_y(p: u64, y: Complex64, prof: &LocalProfile) -> Complex64 {
    let r = prof.r_f64(p);
    let pf = p as f64;
    let w = 1.0 + 2.0 * r / pf + y * (r * r / pf);
    y * r * (1.0 - 1.0 / pf) / w
}

/// `∏_{p∤Δ} (1 + r θ_s(p) Y)`, the `X → ∞` limit of `R_s`, for `Re s > 1/2`.
pub fn r_limit(s: Complex64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    let local = |p: u64, y: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            1.0 + r_theta_y(p, y, prof)
        }
    };
    let accels = [Accel { a: 1.0, b: 1, k: 1 }, Accel { a: 2.0, b: 2, k: -1 }, Accel { a: 2.0, b: 1, k: 1 }];
    euler_product(s, local, &accels, cfg)
}

/// `(𝒜^<(X), 𝒜^>(X))` with `𝓕_{χ₀}(1)²/φ(q)` read as `𝒫_Δ(1)θ_1(q)/q`.
pub fn a_split(x: f64, delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<(Valued, Valued)> {
    if x < 1.0 {
        return domain("𝒜 split needs X ≥ 1");
    }
    let one = Complex64::from(1.0);
    let p1 = p_delta(one, delta, prof, cfg)?;
    let partial = r_partial(one, x, delta, prof);
    let total = r_limit(one, delta, prof, cfg)?;
    let less = Valued { value: partial, tail_bound: 0.0 }.mul(p1);
    let greater = Valued { value: total.value - partial, tail_bound: total.tail_bound }.mul(p1);
    Ok((less, greater))
}

/// `∏_{p∤Δ} (1 + 2r/p)`, the constant factor of `a_q(n)`.
pub fn u_product(delta: &DeltaModulus, prof: &LocalProfile, cfg: &ProductConfig) -> Result<Valued> {
    let local = |p: u64, _: Complex64| {
        if delta.divides_by(p) {
            Complex64::from(1.0)
        } else {
            Complex64::from(1.0 + 2.0 * prof.r_f64(p) / p as f64)
        }
    };
    euler_product(Complex64::from(0.0), local, &[Accel { a: 2.0, b: 0, k: 2 }], cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZVariant {
    /// `ζ(2-u) 𝒫_Δ(u-1) π^{u-1}`
    A,
    /// `ζ(2-u) 𝒫_Δ(u) π^{u-1}`
    B,
}

pub fn z_kernel(
    u: Complex64,
    delta: &DeltaModulus,
    prof: &LocalProfile,
    cfg: &ProductConfig,
    variant: ZVariant,
) -> Result<Valued> {
    check_pole(u, 1.0, "𝒵(u)")?;
    let arg = match variant {
        ZVariant::A => u - 1.0,
        ZVariant::B => u,
    };
    let pi_pow = ((u - 1.0) * std::f64::consts::PI.ln()).exp();
    Ok(p_delta(arg, delta, prof, cfg)?.scale(zeta(2.0 - u)? * pi_pow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::characters_mod;
    use crate::singular::{f_delta_f64, g_delta_f64};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn default() -> (DeltaModulus, LocalProfile, ProductConfig) {
        (DeltaModulus::one(), LocalProfile::default_profile(), ProductConfig::default())
    }

    #[test]
    fn l_function_values() {
        let triv = characters_mod(1).unwrap();
        assert!((dirichlet_l(c(2.0, 0.0), triv.principal()).unwrap() - c(PI * PI / 6.0, 0.0)).norm() < 1e-12);
        let g4 = characters_mod(4).unwrap();
        let chi4 = &g4.characters()[1];
        let leibniz = dirichlet_l(c(1.0, 0.0), chi4).unwrap();
        assert!((leibniz - c(PI / 4.0, 0.0)).norm() < 1e-10);
        // alternating series with averaged partial sums
        let n = 100_000;
        let partial = |m: usize| (0..m).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64).sum::<f64>();
        let avg = 0.5 * (partial(n) + partial(n + 1));
        assert!((leibniz.re - avg).abs() < 1e-9);
        assert!(dirichlet_l(c(1.0, 0.0), characters_mod(6).unwrap().principal()).is_err());
    }

    #[test]
    fn imprimitive_correction() {
        let g6 = characters_mod(6).unwrap();
        let chi = &g6.characters()[1];
        let prim = chi.primitive_part();
        let s = c(2.0, 0.0);
        let lhs = dirichlet_l(s, chi).unwrap();
        let direct = dirichlet_l(s, &prim).unwrap() * (1.0 - prim.value(2) / 4.0);
        assert!((lhs - direct).norm() < 1e-12);
        // direct Dirichlet series for the induced character
        let series: f64 = (1..2_000_000u64).rev().map(|n| chi.value(n).re / (n as f64 * n as f64)).sum();
        assert!((lhs.re - series).abs() < 1e-6);
    }

    #[test]
    fn f_chi_against_direct_series() {
        let (one, prof, cfg) = default();
        let triv = characters_mod(1).unwrap();
        let v = f_chi(c(2.0, 0.0), triv.principal(), &one, &prof, &cfg).unwrap();
        let n = 100_000u64;
        let direct: f64 = (1..=n).rev().map(|l| f_delta_f64(l, &one, &prof) / (l as f64 * l as f64)).sum();
        // f has mean value 𝓕*(1)·... ; bound the tail by the average of the last stretch
        let mean: f64 = (n / 2..=n).map(|l| f_delta_f64(l, &one, &prof)).sum::<f64>() / (n / 2 + 1) as f64;
        let tail = mean / n as f64;
        assert!((v.value.re - direct - tail).abs() < 1e-6, "{} vs {}", v.value.re, direct + tail);
    }

    #[test]
    fn f_chi_two_forms_agree() {
        let (one, prof, cfg) = default();
        let g3 = characters_mod(3).unwrap();
        let chi = &g3.characters()[1];
        let s = c(1.5, 0.0);
        let a = f_chi(s, chi, &one, &prof, &cfg).unwrap();
        let b = f_chi_product_form(s, chi, &one, &prof, &cfg).unwrap();
        assert!((a.value - b.value).norm() < 1e-8, "{} {}", a.value, b.value);
        assert!(f_chi(c(0.0, 1.0), chi, &one, &prof, &cfg).is_err());
    }

    #[test]
    fn local_identities() {
        let prof = LocalProfile::default_profile();
        for p in primes_up_to(997) {
            assert!(local_identity_holds(p, &prof), "p = {p}");
        }
        let s = c(0.7, 3.0);
        for p in [2u64, 3, 101] {
            let d = EulerLocalData::new(p, s, &prof);
            let r = prof.r_f64(p);
            assert!((d.w + d.y * r * (1.0 - 1.0 / p as f64) - d.q).norm() < 1e-14);
            let d1 = EulerLocalData::new(p, c(1.0, 0.0), &prof);
            assert!((d1.w - (1.0 + r / p as f64).powi(2)).norm() < 1e-14);
        }
    }

    #[test]
    fn collapse_bounded_at_leading_order() {
        let prof = LocalProfile::default_profile();
        let grid = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.5, -0.5), c(0.0, 0.0)];
        let mut worst = 0.0f64;
        for p in primes_up_to(10_000) {
            for &y in &grid {
                worst = worst.max(collapse_defect(p, y, &prof).norm());
            }
        }
        assert!(worst < 20.0, "defect constant {worst}");
    }

    #[test]
    fn p_delta_self_consistency() {
        let (one, prof, _) = default();
        let a = p_delta(c(1.0, 0.0), &one, &prof, &ProductConfig::with_p_max(10_000)).unwrap();
        let b = p_delta(c(1.0, 0.0), &one, &prof, &ProductConfig::with_p_max(100_000)).unwrap();
        assert!((a.value - b.value).norm() <= a.tail_bound + b.tail_bound);
        assert!(a.tail_bound < 1e-8);
        // literal product ∏_{p>2} (1 + 1/(p(p-2)))²
        let raw: f64 = primes_up_to(1_000_000).into_iter().skip(1).map(|p| {
            let pf = p as f64;
            (1.0 + 1.0 / (pf * (pf - 2.0))).powi(2)
        }).product();
        assert!((b.value.re - raw).abs() < 1e-6);
        assert!(p_delta(c(-1.5, 0.0), &one, &prof, &ProductConfig::default()).is_err());
        assert!(p_delta(c(-1.0, 5.0), &one, &prof, &ProductConfig::default()).unwrap().value.norm().is_finite());
    }

    #[test]
    fn theta_and_regularised_identity() {
        let (one, prof, cfg) = default();
        assert_eq!(theta_s(1, c(0.3, 2.0), &prof).unwrap(), c(1.0, 0.0));
        let p1 = p_delta(c(1.0, 0.0), &one, &prof, &cfg).unwrap().value;
        let fstar1 = f_star(c(1.0, 0.0), &one, &prof, &cfg).unwrap().value;
        for q in (1..=1000u64).filter(|&q| crate::arith::is_squarefree(q)) {
            let lhs = p1 * theta_s(q, c(1.0, 0.0), &prof).unwrap() / q as f64;
            let fac = Factorization::of(q).unwrap();
            let mut dagger = fstar1;
            for p in fac.primes() {
                let d = EulerLocalData::new(p, c(1.0, 0.0), &prof);
                dagger *= d.psi * d.delta;
            }
            let rhs = dagger * dagger / fac.euler_phi() as f64;
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1e-3), "q = {q}");
        }
    }

    #[test]
    fn q_delta_continuation_and_dual_evaluation() {
        let (one, prof, cfg) = default();
        let v = q_delta(c(-0.25, 0.0), &one, &prof, &cfg).unwrap();
        assert!(v.value.norm().is_finite() && v.tail_bound < 1e-6);
        let s = c(0.5, 0.0);
        let full = q_delta(s, &one, &prof, &ProductConfig::with_p_max(1_000_000)).unwrap();
        let minimal = q_delta(s, &one, &prof, &ProductConfig { accelerants: 1, ..ProductConfig::with_p_max(1_000_000) }).unwrap();
        assert!((full.value - minimal.value).norm() <= full.tail_bound + minimal.tail_bound,
            "{} {} {} {}", full.value, minimal.value, full.tail_bound, minimal.tail_bound);
        assert!(full.tail_bound < 1e-8, "{} {}", full.tail_bound, minimal.tail_bound);
        assert!(q_delta(c(-0.6, 0.0), &one, &prof, &cfg).is_err());
    }

    #[test]
    fn r_partial_values() {
        let (one, prof, cfg) = default();
        assert_eq!(r_partial(c(1.0, 0.0), 0.5, &one, &prof), c(0.0, 0.0));
        let hand: Complex64 = [1u64, 3, 5, 7]
            .iter()
            .map(|&q| theta_s(q, c(1.0, 0.0), &prof).unwrap() * g_delta_f64(q, &one, &prof) / q as f64)
            .sum();
        assert!((r_partial(c(1.0, 0.0), 10.0, &one, &prof) - hand).norm() < 1e-15);
        let s = c(1.5, 0.0);
        let limit = r_limit(s, &one, &prof, &cfg).unwrap();
        let far = r_partial(s, 200_000.0, &one, &prof);
        assert!((far - limit.value).norm() < 1e-7 + limit.tail_bound);
    }

    #[test]
    fn a_split_is_independent_of_x() {
        let (one, prof, cfg) = default();
        let (l1, g1) = a_split(1.0, &one, &prof, &cfg).unwrap();
        let p1 = p_delta(c(1.0, 0.0), &one, &prof, &cfg).unwrap().value;
        assert!((l1.value - p1).norm() < 1e-15);
        let (l10, g10) = a_split(10.0, &one, &prof, &cfg).unwrap();
        let (l100, g100) = a_split(100.0, &one, &prof, &cfg).unwrap();
        assert!(((l10.value + g10.value) - (l100.value + g100.value)).norm() < 1e-9);
        assert!(((l1.value + g1.value) - (l100.value + g100.value)).norm() < 1e-9);
    }

    #[test]
    fn z_kernel_components() {
        let (one, prof, cfg) = default();
        let z = z_kernel(c(0.0, 0.0), &one, &prof, &cfg, ZVariant::A).unwrap().value;
        let expected = zeta(c(2.0, 0.0)).unwrap() * p_delta(c(-1.0, 0.0), &one, &prof, &cfg).unwrap().value / PI;
        assert!((z - expected).norm() < 1e-12);
        let zb = z_kernel(c(0.0, 0.0), &one, &prof, &cfg, ZVariant::B).unwrap().value;
        assert!((z - zb).norm() > 1e-3);
        for t in [-20.0, -7.0, 0.5, 13.0, 20.0] {
            assert!(z_kernel(c(0.0, t), &one, &prof, &cfg, ZVariant::A).unwrap().value.norm().is_finite());
        }
    }

    #[test]
    fn q_greater_ratio_is_zeta() {
        let (one, prof, cfg) = default();
        let s = c(0.5, 4.0);
        let qg = q_greater(s, &one, &prof, &cfg).unwrap().value;
        let qd = q_delta(s, &one, &prof, &cfg).unwrap().value;
        let ratio = qg / qd;
        assert!((ratio - zeta(s).unwrap()).norm() < 1e-7 * ratio.norm(), "{ratio}");
    }
}
