//! `E_x(q, a)` and the weighted third moment `Σ_{q ≤ Q} φ(q) Σ_a E_x(q, a)³`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{compensated_sum, euler_phi, gcd, pairwise_sum, SieveTable};
use crate::error::{domain, ApmError, Result};
use crate::fit::{ols_line, LineFit, SampleSeries};

pub const DEFAULT_OP_BUDGET: u64 = 10_000_000_000;
pub const COMPARISON_EPSILON: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// `Σ_q φ(q) Σ_a E³`
    Phi,
    /// `Q^{-2} Σ_q Σ_a E³`
    Hooley,
}

impl FromStr for Weighting {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "phi" => Ok(Weighting::Phi),
            "hooley" => Ok(Weighting::Hooley),
            other => Err(ApmError::Parse(format!("unknown weighting {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    #[default]
    Pairwise,
    Compensated,
}

impl Summation {
    fn sum(self, v: &[f64]) -> f64 {
        match self {
            Summation::Pairwise => pairwise_sum(v),
            Summation::Compensated => compensated_sum(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentConfig {
    /// Ceiling on bucket updates `π(x) · #q`.
    pub op_budget: u64,
    pub summation: Summation,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig { op_budget: DEFAULT_OP_BUDGET, summation: Summation::Pairwise }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QPartial {
    pub q: u64,
    pub a_count: u64,
    pub sum_e3: f64,
    pub phi_q: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRecord {
    pub x: u64,
    #[serde(rename = "Q")]
    pub q_max: u64,
    pub weighting: Weighting,
    pub moment: f64,
    pub partials: Vec<QPartial>,
}

impl MomentRecord {
    /// Combines per-`q` partials in ascending `q`; shards assembled in any
    /// order give the same bits as one monolithic run.
    pub fn from_partials(
        x: u64,
        q_max: u64,
        weighting: Weighting,
        mut partials: Vec<QPartial>,
        summation: Summation,
    ) -> Self {
        partials.sort_by_key(|p| p.q);
        let moment = weigh(&partials, q_max, weighting, summation);
        MomentRecord { x, q_max, weighting, moment, partials }
    }

    /// The total under another weighting, from the retained partials.
    pub fn reweighted(&self, weighting: Weighting, summation: Summation) -> f64 {
        weigh(&self.partials, self.q_max, weighting, summation)
    }
}

fn weigh(partials: &[QPartial], q_max: u64, weighting: Weighting, summation: Summation) -> f64 {
    let terms: Vec<f64> = partials
        .iter()
        .map(|p| match weighting {
            Weighting::Phi => p.phi_q as f64 * p.sum_e3,
            Weighting::Hooley => p.sum_e3,
        })
        .collect();
    let total = summation.sum(&terms);
    match weighting {
        Weighting::Phi => total,
        Weighting::Hooley => total / (q_max as f64 * q_max as f64),
    }
}

fn check_table(x: u64, table: &SieveTable) -> Result<()> {
    if x > table.limit() {
        return Err(ApmError::Resource { what: "x beyond the sieve limit", requested: x, limit: table.limit() });
    }
    Ok(())
}

/// `E_x(q, a) = Σ_{p ≤ x, p ≡ a (q)} log p - x/φ(q)`, primes only.
pub fn e_term(x: u64, q: u64, a: u64, table: &SieveTable) -> Result<f64> {
    if q == 0 {
        return domain("modulus q must be positive");
    }
    if gcd(a, q) != 1 {
        return domain(format!("E_x(q, a) needs (a, q) = 1, got a = {a}, q = {q}"));
    }
    check_table(x, table)?;
    let mut total = 0.0;
    let start = if a.is_multiple_of(q) { q } else { a % q };
    for p in (start..=x).step_by(q as usize) {
        if table.is_prime(p) {
            total += table.lambda(p);
        }
    }
    Ok(total - x as f64 / euler_phi(q)? as f64)
}

/// `(Σ_{(a,q)=1} E_x(q, a), θ(x) - x - Σ_{p | q, p ≤ x} log p)`.
pub fn row_sum_identity(x: u64, q: u64, table: &SieveTable) -> Result<(f64, f64)> {
    check_table(x, table)?;
    let buckets = bucket(q, &primes_to(x, table));
    let phi = euler_phi(q)? as f64;
    let lhs: Vec<f64> = (0..q).filter(|&a| gcd(a, q) == 1).map(|a| buckets[a as usize] - x as f64 / phi).collect();
    let mut rhs = table.theta(x) - x as f64;
    for p in crate::arith::Factorization::of(q)?.primes().filter(|&p| p <= x) {
        rhs -= table.lambda(p);
    }
    Ok((pairwise_sum(&lhs), rhs))
}

fn primes_to(x: u64, table: &SieveTable) -> Vec<(u64, f64)> {
    (2..=x).filter(|&n| table.is_prime(n)).map(|p| (p, table.lambda(p))).collect()
}

fn bucket(q: u64, primes: &[(u64, f64)]) -> Vec<f64> {
    let mut b = vec![0.0f64; q as usize];
    for &(p, lp) in primes {
        b[(p % q) as usize] += lp;
    }
    b
}

fn partial_for(x: u64, q: u64, primes: &[(u64, f64)], summation: Summation) -> Result<QPartial> {
    let buckets = bucket(q, primes);
    let phi = euler_phi(q)?;
    let mean = x as f64 / phi as f64;
    let cubes: Vec<f64> = (0..q)
        .filter(|&a| gcd(a, q) == 1)
        .map(|a| {
            let e = buckets[a as usize] - mean;
            e * e * e
        })
        .collect();
    Ok(QPartial { q, a_count: cubes.len() as u64, sum_e3: summation.sum(&cubes), phi_q: phi })
}

/// Per-`q` partials for `q_lo ≤ q ≤ q_hi`, one pass over the primes per `q`.
pub fn moment_shard(
    x: u64,
    q_lo: u64,
    q_hi: u64,
    table: &SieveTable,
    cfg: &MomentConfig,
) -> Result<Vec<QPartial>> {
    if q_lo == 0 || q_lo > q_hi {
        return domain(format!("bad q-range [{q_lo}, {q_hi}]"));
    }
    check_table(x, table)?;
    let primes = primes_to(x, table);
    let ops = (primes.len() as u64).saturating_mul(q_hi - q_lo + 1);
    if ops > cfg.op_budget {
        return Err(ApmError::Shard { q_lo, q_hi, ops, budget: cfg.op_budget });
    }
    (q_lo..=q_hi)
        .into_par_iter()
        .map(|q| partial_for(x, q, &primes, cfg.summation))
        .collect()
}

pub fn third_moment(
    x: u64,
    q_max: u64,
    weighting: Weighting,
    table: &SieveTable,
    cfg: &MomentConfig,
) -> Result<MomentRecord> {
    if q_max == 0 || q_max > x {
        return domain(format!("need 1 ≤ Q ≤ x, got Q = {q_max}, x = {x}"));
    }
    let partials = moment_shard(x, 1, q_max, table, cfg)?;
    Ok(MomentRecord::from_partials(x, q_max, weighting, partials, cfg.summation))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QRule {
    /// `Q = ⌊x / (log x)²⌋`
    LogSquared,
    /// `Q = ⌊√x⌋`
    Sqrt,
}

impl QRule {
    pub fn q_for(self, x: u64) -> u64 {
        let xf = x as f64;
        let q = match self {
            QRule::LogSquared => xf / xf.ln().powi(2),
            QRule::Sqrt => xf.sqrt(),
        };
        (q.floor() as u64).max(1)
    }
}

impl FromStr for QRule {
    type Err = ApmError;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "x/(logx)^2" | "x/(log(x))^2" | "log2" => Ok(QRule::LogSquared),
            "sqrt" | "sqrt(x)" => Ok(QRule::Sqrt),
            _ => Err(ApmError::Parse(format!("unknown Q rule {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub x: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub moment: f64,
    /// `Q³ (x/Q)^{1 + ε'}`
    pub comparison: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub weighting: Weighting,
    pub rows: Vec<ScanRow>,
    /// Regression of `log(|moment|/Q³)` on `log(x/Q)`; the Hooley weighting
    /// is regressed without the `Q³`.
    pub fit: LineFit,
    pub epsilon_prime: f64,
}

impl ScanReport {
    pub fn series(&self) -> Result<SampleSeries> {
        let mut pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.x as f64 / r.q as f64, r.moment)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        SampleSeries::new("moment scan", pts)
    }
}

/// Third moments at each `(x, Q)` and the log-log slope against `x/Q`.
pub fn exponent_scan(
    points: &[(u64, u64)],
    weighting: Weighting,
    table: &SieveTable,
    cfg: &MomentConfig,
) -> Result<ScanReport> {
    if points.len() < 4 {
        return domain(format!("an exponent scan needs at least 4 points, got {}", points.len()));
    }
    let mut rows = Vec::with_capacity(points.len());
    for &(x, q) in points {
        let rec = third_moment(x, q, weighting, table, cfg)?;
        let qf = q as f64;
        let ratio = x as f64 / qf;
        rows.push(ScanRow { x, q, moment: rec.moment, comparison: qf.powi(3) * ratio.powf(1.0 + COMPARISON_EPSILON) });
    }
    Ok(ScanReport { weighting, fit: scan_fit(&rows, weighting)?, rows, epsilon_prime: COMPARISON_EPSILON })
}

fn scan_fit(rows: &[ScanRow], weighting: Weighting) -> Result<LineFit> {
    let xs: Vec<f64> = rows.iter().map(|r| (r.x as f64 / r.q as f64).ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| {
            let norm = match weighting {
                Weighting::Phi => (r.q as f64).powi(3),
                Weighting::Hooley => 1.0,
            };
            (r.moment.abs() / norm).ln()
        })
        .collect();
    ols_line(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: u64) -> SieveTable {
        SieveTable::build(n).unwrap()
    }

    #[test]
    fn e_term_examples() {
        let t = table(100);
        let e = e_term(10, 1, 1, &t).unwrap();
        assert!((e - (210f64.ln() - 10.0)).abs() < 1e-12);
        assert!((e + 4.652_89).abs() < 1e-5);
        assert!((e_term(10, 4, 1, &t).unwrap() - (5f64.ln() - 5.0)).abs() < 1e-12);
        assert!(e_term(10, 4, 4, &t).is_err());
        assert!(e_term(101, 4, 1, &t).is_err());
    }

    #[test]
    fn third_moment_two_paths() {
        let t = table(100);
        let cfg = MomentConfig::default();
        let one = third_moment(100, 1, Weighting::Phi, &t, &cfg).unwrap();
        assert_eq!(one.moment, e_term(100, 1, 1, &t).unwrap().powi(3));
        let rec = third_moment(100, 4, Weighting::Phi, &t, &cfg).unwrap();
        let mut want = 0.0;
        for q in 1..=4 {
            let phi = euler_phi(q).unwrap() as f64;
            let s: f64 = (1..=q).filter(|&a| gcd(a, q) == 1).map(|a| e_term(100, q, a, &t).unwrap().powi(3)).sum();
            want += phi * s;
        }
        assert!((rec.moment - want).abs() <= 1e-12 * want.abs());
        let hooley = third_moment(100, 4, Weighting::Hooley, &t, &cfg).unwrap();
        assert_eq!(hooley.moment, rec.reweighted(Weighting::Hooley, Summation::Pairwise));
        let resum: f64 = rec.partials.iter().map(|p| p.phi_q as f64 * p.sum_e3).sum();
        assert!((resum - rec.moment).abs() <= 1e-9 * rec.moment.abs());
    }

    #[test]
    fn row_sums() {
        let t = table(100_000);
        for x in [1000, 99_991, 100_000] {
            for q in 1..=50 {
                let (l, r) = row_sum_identity(x, q, &t).unwrap();
                assert!((l - r).abs() <= 1e-6, "x={x} q={q}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn shards_match_monolithic_bits() {
        let t = table(20_000);
        let cfg = MomentConfig::default();
        let mono = third_moment(20_000, 60, Weighting::Phi, &t, &cfg).unwrap();
        let mut parts = moment_shard(20_000, 31, 60, &t, &cfg).unwrap();
        parts.extend(moment_shard(20_000, 1, 30, &t, &cfg).unwrap());
        let sharded = MomentRecord::from_partials(20_000, 60, Weighting::Phi, parts, Summation::Pairwise);
        assert_eq!(mono.moment.to_bits(), sharded.moment.to_bits());
        let comp = third_moment(20_000, 60, Weighting::Phi, &t, &MomentConfig { summation: Summation::Compensated, ..cfg })
            .unwrap();
        assert!((comp.moment - mono.moment).abs() <= 1e-10 * mono.moment.abs());
    }

    #[test]
    fn budget_names_the_range() {
        let t = table(10_000);
        let cfg = MomentConfig { op_budget: 1000, ..Default::default() };
        match third_moment(10_000, 50, Weighting::Phi, &t, &cfg) {
            Err(ApmError::Shard { q_lo: 1, q_hi: 50, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scan_regression_self_test() {
        let rows: Vec<ScanRow> = [(1e6, 100.0), (1e6, 300.0), (1e6, 1000.0), (1e6, 3000.0)]
            .iter()
            .map(|&(x, q): &(f64, f64)| ScanRow { x: x as u64, q: q as u64, moment: q.powi(3) * (x / q), comparison: 0.0 })
            .collect();
        let fit = scan_fit(&rows, Weighting::Phi).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.01);
        let t = table(1000);
        assert!(exponent_scan(&[(1000, 2), (1000, 3), (1000, 4)], Weighting::Phi, &t, &MomentConfig::default()).is_err());
    }

    #[test]
    fn q_rules() {
        assert_eq!("x/(log x)^2".parse::<QRule>().unwrap(), QRule::LogSquared);
        assert_eq!(QRule::LogSquared.q_for(1_000_000), 5239);
        assert_eq!(QRule::Sqrt.q_for(1_000_000), 1000);
    }
}
