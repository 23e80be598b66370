//! Invariant batteries shared by the test suite and `apm verify`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{gcd, SieveTable};
use crate::characters::{characters_mod, parity_orthogonality_sides};
use crate::analytic::dirichlet_l;
use crate::contour::{
    afe_dirichlet_l, greater_cancellation, meijer_g, parity_kernels, secondary_spec, w_kernel, CancellationRow, Side,
    QuadratureSpec, EPSILON,
};
use crate::error::{ApmError, Result};
use crate::fit::{fit_main, geometric_grid, residual_exponent, ExponentReport, FitResult, SampleSeries, DEFAULT_GRID_RATIO};
use crate::moments::{exponent_scan, row_sum_identity, MomentConfig, ScanReport, Weighting};
use crate::singular::{f_delta, g_delta, r_delta_local, rat, DeltaModulus, LocalProfile};
use crate::sums::{a_q, frak_h, h_small, k_q, s_delta_float, s_greater, Exponent, FrakVariant, Splitting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exact,
    Analytic,
    Endgame,
}

impl FromStr for Suite {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Suite::Exact),
            "analytic" => Ok(Suite::Analytic),
            "endgame" => Ok(Suite::Endgame),
            other => Err(ApmError::Parse(format!("unknown suite {other:?}; expected exact, analytic or endgame"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Exact => "exact",
            Suite::Analytic => "analytic",
            Suite::Endgame => "endgame",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: &str, r: Result<String>) -> Self {
        match r {
            Ok(detail) => Check::new(name, true, detail),
            Err(e) => Check::new(name, false, e.to_string()),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,passed,detail\n");
        for c in &self.checks {
            out.push_str(&format!("{},{},{},\"{}\"\n", self.suite, c.name, c.passed, c.detail.replace('"', "'")));
        }
        out
    }
}

pub fn run_suite(suite: Suite, prof: &LocalProfile) -> SuiteReport {
    let checks = match suite {
        Suite::Exact => exact_checks(prof),
        Suite::Analytic => analytic_checks(prof),
        Suite::Endgame => endgame_checks(prof, &EndgameArtifacts::compute(prof)),
    };
    SuiteReport { suite, checks }
}

fn fail<T>(msg: String) -> Result<T> {
    Err(ApmError::Domain(msg))
}

fn dm(d: u64) -> Result<DeltaModulus> {
    DeltaModulus::new(d)
}

pub const EXACT_DELTAS: [u64; 5] = [1, 2, 3, 15, 30];

pub fn exact_checks(prof: &LocalProfile) -> Vec<Check> {
    vec![
        Check::from_result("f = g * 1", check_convolution(10_000, prof)),
        Check::from_result("f restriction", check_restriction(300, prof)),
        Check::from_result("R local polynomial", check_r_polynomial(997, prof)),
        Check::from_result("splitting", check_splitting(200, prof)),
        Check::from_result("S greater vanishes", check_s_greater(200, prof)),
        Check::from_result("parity orthogonality", check_parity(50)),
    ]
}

/// `f_Δ(n) = Σ_{e|n} g_Δ(e)` for `n ≤ n_max`.
pub fn check_convolution(n_max: u64, prof: &LocalProfile) -> Result<String> {
    let mut checked = 0u64;
    for d in EXACT_DELTAS {
        let delta = dm(d)?;
        let mut acc = vec![BigRational::zero(); n_max as usize + 1];
        for e in 1..=n_max {
            let g = g_delta(e, &delta, prof)?;
            if g.is_zero() {
                continue;
            }
            for m in (e..=n_max).step_by(e as usize) {
                acc[m as usize] += &g;
            }
        }
        for n in 1..=n_max {
            if acc[n as usize] != f_delta(n, &delta, prof)? {
                return fail(format!("f ≠ g*1 at n = {n}, Δ = {d}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} values, n ≤ {n_max}, Δ ∈ {EXACT_DELTAS:?}"))
}

/// `f_Δ(dn) = f_Δ(d) f_{dΔ}(n)` for `d, n ≤ max`.
pub fn check_restriction(max: u64, prof: &LocalProfile) -> Result<String> {
    let mut checked = 0u64;
    for dv in EXACT_DELTAS {
        let delta = dm(dv)?;
        let f: Vec<BigRational> = (0..=max * max)
            .map(|m| if m == 0 { Ok(BigRational::zero()) } else { f_delta(m, &delta, prof) })
            .collect::<Result<_>>()?;
        for d in 1..=max {
            let wide = delta.times(d)?;
            for n in 1..=max {
                if f[(d * n) as usize] != &f[d as usize] * f_delta(n, &wide, prof)? {
                    return fail(format!("restriction fails at d = {d}, n = {n}, Δ = {dv}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} pairs, d, n ≤ {max}, Δ ∈ {EXACT_DELTAS:?}"))
}

/// `Σ_{α ≤ 3} R_Δ(p^α) Y^α = (1 + r Y)(1 - Y/p)` for `p ∤ Δ`, `(1 - Y/p)` for
/// `p | Δ`, coefficientwise.
pub fn check_r_polynomial(p_max: u64, prof: &LocalProfile) -> Result<String> {
    let primes = crate::arith::primes_up_to(p_max);
    for &p in &primes {
        for delta in [dm(1)?, dm(p)?] {
            let lhs: Vec<BigRational> = (0..=3).map(|a| r_delta_local(p, a, &delta, prof)).collect();
            let inv = rat(1, p as i64);
            let r = if delta.divides_by(p) { BigRational::zero() } else { prof.r(p) };
            let rhs = vec![BigRational::one(), &r - &inv, -(&r * &inv), BigRational::zero()];
            if lhs != rhs {
                return fail(format!("local polynomial differs at p = {p}, Δ = {}", delta.value()));
            }
        }
    }
    Ok(format!("{} primes ≤ {p_max}, Δ ∈ {{1, p}}", primes.len()))
}

/// `lhs = rhs_q = rhs_d` at every half-integer `X ≤ x_max`.
pub fn check_splitting(x_max: u64, prof: &LocalProfile) -> Result<String> {
    let mut checked = 0u64;
    for d in [1, 2, 3] {
        let sp = Splitting::new(x_max, &dm(d)?, prof)?;
        for twice in 2..=2 * x_max {
            let x = BigRational::new((twice as i64).into(), 2.into());
            if !sp.eval(&x)?.holds() {
                return fail(format!("splitting fails at X = {x}, Δ = {d}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} thresholds X ∈ {{1, 3/2, …, {x_max}}}, Δ ∈ {{1, 2, 3}}"))
}

pub fn check_s_greater(x_max: u64, prof: &LocalProfile) -> Result<String> {
    for d in [1, 2, 3] {
        let delta = dm(d)?;
        for x in 2..=x_max {
            let s = s_greater(x, 3 * x, &delta, prof)?;
            if !s.exact_value().is_some_and(Zero::is_zero) {
                return fail(format!("S^> = {} at X = {x}, Δ = {d}", s.value));
            }
        }
    }
    Ok(format!("exactly 0 for 2 ≤ X ≤ {x_max}, q ≤ 3X, Δ ∈ {{1, 2, 3}}"))
}

pub fn check_parity(d_max: u64) -> Result<String> {
    let mut checked = 0u64;
    for d in 1..=d_max {
        for n in (1..=d_max).filter(|&n| gcd(n, d) == 1) {
            for m in (1..=d_max).filter(|&m| gcd(m, d) == 1) {
                for a in 0..2 {
                    let (l, r) = parity_orthogonality_sides(d, n, m, a)?;
                    if l != r {
                        return fail(format!("d = {d}, n = {n}, m = {m}, a = {a}: {l} ≠ {r}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} cases, d, n, m ≤ {d_max}"))
}

pub fn analytic_checks(prof: &LocalProfile) -> Vec<Check> {
    vec![
        Check::from_result("h_small brute = closed", check_h_small(prof)),
        Check::from_result("frak_h series = closed", check_frak_h(prof)),
        Check::from_result("AFE vs Hurwitz L", check_afe()),
        Check::from_result("Meijer G", check_meijer()),
        Check::from_result("j = g_E", check_parity_kernels()),
        check_w_large(),
        Check::from_result("k_q closed form", check_k_q(prof)),
        Check::from_result("a_q dual evaluation", check_a_q(prof)),
    ]
}

pub fn check_h_small(prof: &LocalProfile) -> Result<String> {
    let us = ["1/2", "2", "1+1i"].map(|s| s.parse::<Exponent>()).into_iter().collect::<Result<Vec<_>>>()?;
    let mut checked = 0u64;
    for p in [2u64, 3, 5, 7, 11, 13] {
        for q in [1, p, 3 * p] {
            for k in 0..=6 {
                for &u in &us {
                    for d in [1, 3] {
                        let h = h_small(q, u, p.pow(k), &dm(d)?, prof)?;
                        if !h.agree {
                            return fail(format!("p = {p}, q = {q}, k = {k}, u = {u:?}, Δ = {d}: {} vs {}", h.brute, h.closed));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} cases, p ≤ 13, q ∈ {{1, p, 3p}}, k ≤ 6, u ∈ {{1/2, 2, 1+i}}"))
}

pub fn check_frak_h(prof: &LocalProfile) -> Result<String> {
    let mut worst = 0.0f64;
    let mut checked = 0u64;
    for p in [2u64, 3, 5, 7, 11, 13] {
        let edge = 2.0 - 1.2f64.ln() / (p as f64).ln();
        let us = [Complex64::new(-1.0, 0.0), Complex64::from(0.0), Complex64::new(0.5, 1.0), Complex64::from(1.0), Complex64::new(edge, 0.3)];
        for u in us {
            let cases = [(FrakVariant::P, dm(1)?), (FrakVariant::One, dm(1)?), (FrakVariant::OneStar, dm(p)?)];
            for (v, delta) in cases {
                let f = frak_h(p, u, &delta, v, 40, prof)?;
                if !f.agree {
                    return fail(format!("p = {p}, u = {u}, {v:?}: series {} vs closed {}", f.series, f.closed));
                }
                if let Some(n) = f.normalized {
                    if (n - 1.0).norm() > 1e-12 {
                        return fail(format!("normalized 1* value {n} at p = {p}, u = {u}"));
                    }
                }
                worst = worst.max((f.series - f.closed).norm() / f.closed.norm().max(1.0));
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases, worst relative gap {worst:.1e}"))
}

pub fn check_afe() -> Result<String> {
    let spec = QuadratureSpec::gamma(1.0);
    let mut worst = 0.0f64;
    let mut checked = 0u64;
    for d in [3u64, 4, 5, 7, 8, 11] {
        let group = characters_mod(d)?;
        for chi in group.primitive() {
            for t in [-5.0, 0.0, 3.3] {
                let s = Complex64::new(0.5, t);
                let gap = (afe_dirichlet_l(s, chi, &spec)? - dirichlet_l(s, chi)?).norm();
                worst = worst.max(gap);
                checked += 1;
            }
        }
    }
    if worst > 1e-8 {
        return fail(format!("largest gap {worst:.2e} over {checked} points"));
    }
    Ok(format!("{checked} points, largest gap {worst:.1e}"))
}

pub fn check_meijer() -> Result<String> {
    let one = Complex64::from(1.0);
    let mut worst = 0.0f64;
    for a in [0.2, 0.6, 0.9] {
        for b in [0.3, 1.0, 1.8] {
            let g = meijer_g(Complex64::new(a, 0.1), one, Complex64::from(b), Complex64::new(1.2, -0.3))?;
            worst = worst.max(g.discrepancy() / (1.0 + g.closed.norm()));
        }
    }
    if worst > 1e-8 {
        return fail(format!("largest relative gap {worst:.2e}"));
    }
    Ok(format!("9 parameter sets, largest relative gap {worst:.1e}"))
}

pub fn check_parity_kernels() -> Result<String> {
    let mut worst = 0.0f64;
    for t in [0.0, 0.7, -1.3, 2.5, 4.0] {
        let k = parity_kernels(Complex64::new(2.0 * EPSILON - 1.0, t))?;
        worst = worst.max((k.j.value - k.g_e).norm());
    }
    if worst > 1e-7 {
        return fail(format!("largest gap {worst:.2e}"));
    }
    Ok(format!("5 points on Re u = {}, largest gap {worst:.1e}", 2.0 * EPSILON - 1.0))
}

/// `W_1(10³) = 1 ± 10⁻³` for the even kernel.
pub fn check_w_large() -> Check {
    let name = "W_u(1e3) = 1 ± 1e-3";
    match w_kernel(Complex64::from(1.0), 1e3, 0, &QuadratureSpec::gamma(1.0)) {
        Ok(w) => {
            let gap = (w.value - 1.0).norm();
            Check::new(name, gap <= 1e-3, format!("W_1(1e3) = {:.12}, |W - 1| = {gap:.4e}", w.value.re))
        }
        Err(e) => Check::new(name, false, e.to_string()),
    }
}

pub const K_Q_N_MAX: u64 = 1_000_000;

pub fn check_k_q(prof: &LocalProfile) -> Result<String> {
    let delta = dm(1)?;
    let mut worst = 0.0f64;
    for q in [1u64, 3, 5, 15] {
        for s in [Complex64::from(2.0), Complex64::new(2.0, 3.0)] {
            let k = k_q(s, q, &delta, prof, K_Q_N_MAX)?;
            let scale = k.closed.norm().max(1.0);
            if !k.consistent() || k.combined_tail() > 1e-5 * scale {
                return fail(format!(
                    "q = {q}, s = {s}: gap {:.2e}, combined tails {:.2e}",
                    k.discrepancy(),
                    k.combined_tail()
                ));
            }
            worst = worst.max(k.discrepancy() / scale);
        }
    }
    Ok(format!("q ∈ {{1, 3, 5, 15}}, s ∈ {{2, 2+3i}}, N = {K_Q_N_MAX}, largest relative gap {worst:.1e}"))
}

pub fn check_a_q(prof: &LocalProfile) -> Result<String> {
    let delta = dm(1)?;
    for q in [1u64, 3, 15] {
        for n in [1u64, 5] {
            let lo = a_q(n, q, &delta, prof, 1000)?;
            let hi = a_q(n, q, &delta, prof, 10_000)?;
            let across = (lo.brute - hi.brute).abs() <= lo.brute_tail + hi.brute_tail;
            if !lo.consistent() || !hi.consistent() || !across {
                return fail(format!(
                    "n = {n}, q = {q}: brute {:.8} / {:.8} (tails {:.1e}, {:.1e}) vs Euler {:.8}",
                    lo.brute, hi.brute, lo.brute_tail, hi.brute_tail, hi.euler
                ));
            }
        }
    }
    Ok("n ∈ {1, 5}, q ∈ {1, 3, 15}, A_max ∈ {1e3, 1e4}".into())
}

pub const ENDGAME_SLOPE_MAX: f64 = 3.3;
pub const DESK_X: u64 = 1_000_000;
pub const DESK_QS: [u64; 4] = [100, 300, 1000, 3000];

/// The numerical runs behind the endgame checks, kept for reporting.
#[derive(Debug)]
pub struct EndgameArtifacts {
    pub fit: Result<FitResult>,
    pub cancellation: Result<Vec<CancellationRow>>,
    pub scan: Result<ScanReport>,
    pub scan_repeat: Result<ScanReport>,
    pub row_sums: Result<f64>,
}

impl EndgameArtifacts {
    pub fn compute(prof: &LocalProfile) -> Self {
        let (scan, scan_repeat, row_sums) = match SieveTable::build(DESK_X) {
            Ok(t) => (desk_scan(&t), desk_scan(&t), desk_row_sums(&t)),
            Err(e) => {
                let msg = e.to_string();
                (Err(e), Err(ApmError::Domain(msg.clone())), Err(ApmError::Domain(msg)))
            }
        };
        EndgameArtifacts { fit: endgame_fit(prof), cancellation: cancellation_rows(prof), scan, scan_repeat, row_sums }
    }
}

/// `s_delta` over a geometric grid in `[500, 5000]`, `Δ = 1`, fitted with
/// `ℰ_Δ` subtracted.
pub fn endgame_fit(prof: &LocalProfile) -> Result<FitResult> {
    let delta = dm(1)?;
    let xs: Vec<f64> = geometric_grid(500.0, 5000.0, DEFAULT_GRID_RATIO).into_iter().map(f64::round).collect();
    let values = s_delta_float(&xs, &delta, prof)?;
    let series = SampleSeries::new("s_delta", xs.into_iter().zip(values).collect())?;
    fit_main(&series, true, &delta, prof)
}

pub fn cancellation_rows(prof: &LocalProfile) -> Result<Vec<CancellationRow>> {
    let xs = geometric_grid(100.0, 10_000.0, DEFAULT_GRID_RATIO);
    greater_cancellation(&xs, &dm(1)?, prof, &secondary_spec(Side::Greater))
}

fn cancellation_exponents(rows: &[CancellationRow]) -> Result<(ExponentReport, ExponentReport)> {
    let literal = SampleSeries::new("cancellation", rows.iter().map(|r| (r.x, r.literal)).collect())?;
    let normalized = SampleSeries::new("cancellation", rows.iter().map(|r| (r.x, r.residue_normalized)).collect())?;
    Ok((residual_exponent(&literal)?, residual_exponent(&normalized)?))
}

pub fn desk_scan(table: &SieveTable) -> Result<ScanReport> {
    let points: Vec<(u64, u64)> = DESK_QS.iter().map(|&q| (DESK_X, q)).collect();
    exponent_scan(&points, Weighting::Phi, table, &MomentConfig::default())
}

/// Largest `|lhs - rhs| / max(1, |rhs|)` of the row-sum identity over
/// `q ≤ max Q`.
pub fn desk_row_sums(table: &SieveTable) -> Result<f64> {
    let mut worst = 0.0f64;
    for q in 1..=DESK_QS[DESK_QS.len() - 1] {
        let (lhs, rhs) = row_sum_identity(DESK_X, q, table)?;
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(worst)
}

fn bits_equal(a: &ScanReport, b: &ScanReport) -> bool {
    a.fit.slope.to_bits() == b.fit.slope.to_bits()
        && a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(r, s)| r.moment.to_bits() == s.moment.to_bits())
}

pub fn endgame_checks(_prof: &LocalProfile, art: &EndgameArtifacts) -> Vec<Check> {
    let fit = match &art.fit {
        Ok(f) => {
            let s = f.residual_slope;
            let detail = format!(
                "residual slope {} ± {}, α = {:.6e}, β = {:.6e}, γ = {:.6e}",
                s.map_or("n/a".into(), |v| format!("{v:.4}")),
                f.residual_slope_se.map_or("n/a".into(), |v| format!("{v:.4}")),
                f.alpha,
                f.beta,
                f.gamma
            );
            Check::new("endgame exponent", s.is_some_and(|v| v <= ENDGAME_SLOPE_MAX), detail)
        }
        Err(e) => Check::new("endgame exponent", false, e.to_string()),
    };
    let exps = match &art.cancellation {
        Ok(rows) => cancellation_exponents(rows),
        Err(e) => Err(ApmError::Domain(e.to_string())),
    };
    let cancel = match exps {
        Ok((lit, norm)) => {
            let upper = lit.upper();
            Check::new(
                "cancellation exponent",
                upper.is_some_and(|u| u < 4.0),
                format!(
                    "literal slope {:.4} ± {:.4}; residue-normalized slope {:.4} ± {:.4}",
                    lit.slope.unwrap_or(f64::NAN),
                    lit.slope_se.unwrap_or(f64::NAN),
                    norm.slope.unwrap_or(f64::NAN),
                    norm.slope_se.unwrap_or(f64::NAN)
                ),
            )
        }
        Err(e) => Check::new("cancellation exponent", false, e.to_string()),
    };
    let scan = match (&art.scan, &art.scan_repeat, &art.row_sums) {
        (Ok(a), Ok(b), Ok(rows)) => {
            let repro = bits_equal(a, b);
            Check::new(
                "desk scan",
                repro && *rows <= 1e-6,
                format!(
                    "slope {:.6} ± {:.6} against x/Q, row sums within {rows:.1e}, reproducible {repro}",
                    a.fit.slope, a.fit.slope_se
                ),
            )
        }
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => Check::new("desk scan", false, e.to_string()),
    };
    vec![fit, cancel, scan]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof() -> LocalProfile {
        LocalProfile::default_profile()
    }

    #[test]
    fn small_exact_batteries() {
        let p = prof();
        assert!(check_convolution(500, &p).is_ok());
        assert!(check_restriction(30, &p).is_ok());
        assert!(check_r_polynomial(100, &p).is_ok());
        assert!(check_splitting(20, &p).is_ok());
        assert!(check_parity(12).is_ok());
    }

    #[test]
    fn w_check_reports_value() {
        let c = check_w_large();
        assert!(c.detail.contains("0.998871621209"), "{c}");
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Exact, Suite::Analytic, Suite::Endgame] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("all".parse::<Suite>().is_err());
    }
}
