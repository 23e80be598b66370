//! Vertical-line integrals `(1/2πi) ∫_{(c)} f(s) ds`, computed as
//! `(1/2π) ∫ f(c + it) dt` with Gauss–Kronrod panels and an explicit tail.
//!
//! The secondary terms `ℰ_Δ`, `ℰ^<`, `ℰ^>`, `ℛ_Δ` depend on `X` only through
//! `X^{s+4}` and `R_s`, so their X-independent factors are tabulated once on
//! a fixed half-line grid and reused across a batch of `X` values.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{a_split, p_delta, q_delta, q_greater, q_less, ProductConfig, SquarefreeSupport};
use crate::characters::{root_number, DirichletCharacter};
use crate::error::{domain, ApmError, Result};
use crate::singular::{DeltaModulus, LocalProfile};
use crate::special::{gamma, gamma_ratio, is_gamma_pole, ln_gamma, zeta_unchecked};

/// The `ε` of every `ℜs = ε` contour.
pub const EPSILON: f64 = 0.125;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_DEPTH: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Decay {
    /// Exponential decay from Gamma factors.
    Gamma,
    /// `|f(c+it)| ≍ |t|^{-e}`.
    Power(f64),
    /// `f(c+it) = e^{iωt} g(t)` with `g` smooth and `|g| ≍ |t|^{-power}`.
    Oscillatory { omega: f64, power: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub c: f64,
    pub t_max: f64,
    pub tol: f64,
    pub decay: Decay,
    /// `f(conj s) = conj f(s)`: integrate `t ≥ 0` only and return a real value.
    pub conjugate_symmetric: bool,
}

impl QuadratureSpec {
    pub fn new(c: f64, t_max: f64, tol: f64, decay: Decay) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return domain("truncation height must be positive");
        }
        if !(tol > 0.0) {
            return domain("tolerance must be positive");
        }
        match decay {
            Decay::Power(e) if e <= 1.0 => {
                return domain(format!("power decay |t|^-{e} is not integrable"));
            }
            Decay::Oscillatory { omega, power } if omega == 0.0 || power <= 0.0 => {
                return domain("oscillatory decay needs ω ≠ 0 and a positive power");
            }
            _ => {}
        }
        Ok(QuadratureSpec { c, t_max, tol, decay, conjugate_symmetric: false })
    }

    pub fn gamma(c: f64) -> Self {
        QuadratureSpec { c, t_max: 60.0, tol: 1e-13, decay: Decay::Gamma, conjugate_symmetric: false }
    }

    pub fn symmetric(mut self) -> Self {
        self.conjugate_symmetric = true;
        self
    }

    fn power(&self) -> f64 {
        match self.decay {
            Decay::Gamma => f64::INFINITY,
            Decay::Power(e) => e,
            Decay::Oscillatory { power, .. } => power,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureReport {
    pub value: Complex64,
    pub trunc_err: f64,
    pub quad_err: f64,
    pub evaluations: usize,
    pub epsilon: f64,
}

impl QuadratureReport {
    pub fn error(&self) -> f64 {
        self.trunc_err + self.quad_err
    }
}

type Kernel<'a> = dyn Fn(f64) -> Complex64 + Sync + 'a;

/// Kronrod value, `|K - G|`, and `Σ w|f|` on `[a, b]`.
fn gk15(f: &Kernel, a: f64, b: f64) -> (Complex64, f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    (k * half, ((k - g) * half).norm(), abs * half.abs())
}

#[derive(Clone, Copy, Default)]
struct Panel {
    value: Complex64,
    err: f64,
    evals: usize,
}

fn adapt(f: &Kernel, a: f64, b: f64, tol: f64, depth: u32, acc: &mut Panel) -> Result<()> {
    let (v, e, abs) = gk15(f, a, b);
    acc.evals += 15;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(ApmError::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    if e <= tol.max(50.0 * f64::EPSILON * abs) || depth >= MAX_DEPTH {
        acc.value += v;
        acc.err += e;
        return Ok(());
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1, acc)?;
    adapt(f, m, b, 0.5 * tol, depth + 1, acc)
}

/// `∫_a^b f(t) dt` over fixed initial panels of width at most `w0`, each
/// refined adaptively; panels run in parallel and are summed in order.
fn integrate_interval(f: &Kernel, a: f64, b: f64, w0: f64, tol: f64) -> Result<Panel> {
    let n = ((b - a) / w0).ceil().max(1.0) as usize;
    let width = (b - a) / n as f64;
    let panels: Vec<Result<Panel>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n { b } else { lo + width };
            let mut acc = Panel::default();
            adapt(f, lo, hi, tol / n as f64, 0, &mut acc)?;
            Ok(acc)
        })
        .collect();
    let mut total = Panel::default();
    for p in panels {
        let p = p?;
        total.value += p.value;
        total.err += p.err;
        total.evals += p.evals;
    }
    Ok(total)
}

/// `∫_T^∞ f(t) dt` for `f ≍ A t^{-e}`, with `A` the mean of `f(t) t^e` over
/// the last decade. The error is twice the spread of those samples.
fn power_tail(samples: &[(f64, Complex64)], t_max: f64, e: f64) -> (Complex64, f64) {
    let coef: Vec<Complex64> = samples.iter().map(|&(t, v)| v * t.powf(e)).collect();
    let mean = coef.iter().fold(Complex64::from(0.0), |a, &b| a + b) / coef.len() as f64;
    let spread = coef.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
    let scale = t_max.powf(1.0 - e) / (e - 1.0);
    (mean * scale, 2.0 * spread * scale)
}

fn decade(t_max: f64) -> impl Iterator<Item = f64> {
    (0..=10).map(move |j| t_max * 10f64.powf(-(j as f64) / 10.0))
}

/// `∫_T^∞ e^{iωt} g(t) dt ≈ -e^{iωT} Σ_k (-1)^k g^{(k)}(T)/(iω)^{k+1}`,
/// three terms, derivatives by central differences.
fn oscillatory_tail(g: &dyn Fn(f64) -> Complex64, t_max: f64, omega: f64) -> (Complex64, f64) {
    let h = t_max / 20.0;
    let gm2 = g(t_max - 2.0 * h);
    let gm1 = g(t_max - h);
    let g0 = g(t_max);
    let gp1 = g(t_max + h);
    let gp2 = g(t_max + 2.0 * h);
    let d1 = (gm2 - gp2 + (gp1 - gm1) * 8.0) / (12.0 * h);
    let d1_coarse = (gp2 - gm2) / (4.0 * h);
    let d2 = (-gm2 - gp2 + (gp1 + gm1) * 16.0 - g0 * 30.0) / (12.0 * h * h);
    let iw = Complex64::new(0.0, omega);
    let phase = Complex64::from_polar(1.0, omega * t_max);
    let tail = -phase * (g0 / iw - d1 / (iw * iw) + d2 / (iw * iw * iw));
    let err = 2.0 * (d2.norm() / omega.abs().powi(3) + (d1 - d1_coarse).norm() / (omega * omega));
    (tail, err)
}

/// `∫_T^∞ f(t) dt` for one side of the line.
fn side_tail(f: &Kernel, spec: &QuadratureSpec, omega_sign: f64) -> (Complex64, f64) {
    let t = spec.t_max;
    match spec.decay {
        Decay::Gamma => (Complex64::from(0.0), 2.0 * f(t).norm()),
        Decay::Power(e) => {
            let samples: Vec<(f64, Complex64)> = decade(t).map(|x| (x, f(x))).collect();
            power_tail(&samples, t, e)
        }
        Decay::Oscillatory { omega, power } => {
            let w = omega * omega_sign;
            if (w * t).abs() < 20.0 {
                let samples: Vec<(f64, Complex64)> = decade(t).map(|x| (x, f(x))).collect();
                return power_tail(&samples, t, power.max(1.0 + 1e-3));
            }
            let g = |x: f64| f(x) * Complex64::from_polar(1.0, -w * x);
            oscillatory_tail(&g, t, w)
        }
    }
}

/// `(1/2πi) ∫_{(c)} f(s) ds`.
pub fn line_integral(f: &(dyn Fn(Complex64) -> Complex64 + Sync), spec: &QuadratureSpec) -> Result<QuadratureReport> {
    QuadratureSpec::new(spec.c, spec.t_max, spec.tol, spec.decay)?;
    let c = spec.c;
    let t = spec.t_max;
    let w0 = match spec.decay {
        Decay::Oscillatory { omega, .. } => (PI / omega.abs()).min(1.0),
        _ => 1.0,
    };
    let up = |x: f64| f(Complex64::new(c, x));
    if spec.conjugate_symmetric {
        let body = integrate_interval(&up, 0.0, t, w0, spec.tol * PI)?;
        let (tail, terr) = side_tail(&up, spec, 1.0);
        return Ok(QuadratureReport {
            value: Complex64::from((body.value + tail).re / PI),
            trunc_err: terr / PI,
            quad_err: body.err / PI,
            evaluations: body.evals + 16,
            epsilon: EPSILON,
        });
    }
    let down = |x: f64| f(Complex64::new(c, -x));
    let body = integrate_interval(&up, -t, t, w0, spec.tol * 2.0 * PI)?;
    let (tp, ep) = side_tail(&up, spec, 1.0);
    let (tm, em) = side_tail(&down, spec, -1.0);
    Ok(QuadratureReport {
        value: (body.value + tp + tm) / (2.0 * PI),
        trunc_err: (ep + em) / (2.0 * PI),
        quad_err: body.err / (2.0 * PI),
        evaluations: body.evals + 32,
        epsilon: EPSILON,
    })
}

/// `W_u(X) = (1/2πi) ∫_{(c)} Γ((w+u+k)/2)/Γ((u+k)/2) X^w dw/w`.
pub fn w_kernel(u: Complex64, x: f64, k: u8, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    if spec.c <= 0.0 {
        return domain("W_u needs a contour with c > 0");
    }
    if !(x > 0.0) {
        return domain("W_u needs X > 0");
    }
    if k > 1 {
        return domain("parity must be 0 or 1");
    }
    let kf = k as f64;
    let base = (u + kf) / 2.0;
    if is_gamma_pole(base) {
        return domain("Γ((u+k)/2) has a pole");
    }
    let ln_base = ln_gamma(base);
    let lx = x.ln();
    let f = move |w: Complex64| (ln_gamma((w + u + kf) / 2.0) - ln_base + w * lx).exp() / w;
    let spec = QuadratureSpec { decay: Decay::Gamma, conjugate_symmetric: false, ..*spec };
    line_integral(&f, &spec)
}

/// `L(s, χ)` from the approximate functional equation at `X = 1`, with both
/// kernels evaluated at `√(d/π)/n`.
pub fn afe_dirichlet_l(s: Complex64, chi: &DirichletCharacter, spec: &QuadratureSpec) -> Result<Complex64> {
    let d = chi.modulus();
    if d == 1 || !chi.is_primitive() {
        return domain("the approximate functional equation needs a primitive χ ≠ χ₀");
    }
    let k = chi.parity();
    let kf = k as f64;
    let dp = d as f64 / PI;
    let n_max = (50.0 * dp).sqrt().ceil() as u64 + 2;
    let one = Complex64::from(1.0);
    let eps = root_number(chi)?;
    let g = gamma_ratio((one - s + kf) / 2.0, (s + kf) / 2.0);
    let mut first = Complex64::from(0.0);
    let mut second = Complex64::from(0.0);
    for n in 1..=n_max {
        let v = chi.value(n);
        if v.norm() == 0.0 {
            continue;
        }
        let y = dp.sqrt() / n as f64;
        let ln_n = (n as f64).ln();
        first += v * (-s * ln_n).exp() * w_kernel(s, y, k, spec)?.value;
        second += v.conj() * ((s - 1.0) * ln_n).exp() * w_kernel(one - s, y, k, spec)?.value;
    }
    let factor = (Complex64::from(dp).ln() * (0.5 - s)).exp() * eps * g;
    Ok(first + factor * second)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeijerG {
    pub quadrature: QuadratureReport,
    pub closed: Complex64,
}

impl MeijerG {
    pub fn discrepancy(&self) -> f64 {
        (self.quadrature.value - self.closed).norm()
    }
}

/// `G^{22}_{22}(a, a'; b, b')` by quadrature and by its Gamma quotient.
pub fn meijer_g(a: Complex64, a2: Complex64, b: Complex64, b2: Complex64) -> Result<MeijerG> {
    let lo = (a.re - 1.0).max(a2.re - 1.0);
    let hi = b.re.min(b2.re);
    if lo >= hi {
        return domain(format!("empty strip: max(Re a, Re a') - 1 = {lo} ≥ min(Re b, Re b') = {hi}"));
    }
    let one = Complex64::from(1.0);
    let f = move |s: Complex64| {
        (ln_gamma(b - s) + ln_gamma(b2 - s) + ln_gamma(one - a + s) + ln_gamma(one - a2 + s)).exp()
    };
    let spec = QuadratureSpec { t_max: 30.0, ..QuadratureSpec::gamma(0.5 * (lo + hi)) };
    let quadrature = line_integral(&f, &spec)?;
    let closed = (ln_gamma(b + 1.0 - a) + ln_gamma(b2 + 1.0 - a) + ln_gamma(b + 1.0 - a2) + ln_gamma(b2 + 1.0 - a2)
        - ln_gamma(b + b2 - a - a2 + 2.0))
    .exp();
    Ok(MeijerG { quadrature, closed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityKernel {
    pub u: Complex64,
    /// `E_{s,w}` and `O_{s,w}` at `s = ε`, `w = u + 1 - ε`.
    pub e_sw: Complex64,
    pub o_sw: Complex64,
    pub g_e: Complex64,
    pub g_o: Complex64,
    pub j: QuadratureReport,
    /// `π^{-1/2} Γ(u+5) Γ(1/2 - u/2) / (Γ(u/2)(u+2)(u+3)(u+4))`, which equals
    /// `g_E(u) - g_O(u)`.
    pub combined: Complex64,
}

/// `j(u)` by quadrature of its defining integral, and `g_E`, `g_O` in closed
/// form. Duplication turns the integrand into `2^u/π` times Meijer integrands
/// in `s/2`, which fixes the prefactor `2^u/π` of both closed forms.
pub fn parity_kernels(u: Complex64) -> Result<ParityKernel> {
    let one = Complex64::from(1.0);
    let half = Complex64::from(0.5);
    for z in [half - u / 2.0, one.scale(1.5) - u / 2.0, one.scale(1.5) + u / 2.0, u / 2.0] {
        if is_gamma_pole(z) {
            return domain(format!("Gamma pole at {z} for u = {u}"));
        }
    }
    let lo = u.re.max(-1.0);
    let hi = (u.re + 2.0).min(1.0);
    if lo >= hi {
        return domain("no contour separates the poles of the j(u) integrand");
    }
    let c = if lo < EPSILON && EPSILON < hi { EPSILON } else { 0.5 * (lo + hi) };
    let f = move |s: Complex64| {
        let num = ln_gamma((one - s) / 2.0) + ln_gamma((s - u) / 2.0) + ln_gamma(s) + ln_gamma(u + 2.0 - s);
        let den = ln_gamma(s / 2.0) + ln_gamma((u + one - s) / 2.0);
        (num - den).exp()
    };
    let spec = QuadratureSpec { t_max: 40.0, ..QuadratureSpec::gamma(c) };
    let j = line_integral(&f, &spec)?;
    let pref = (u * 2f64.ln()).exp() / PI;
    let g_e = pref * (gamma(u / 2.0 + 2.5) - gamma(u / 2.0 + 1.5)) * gamma(half - u / 2.0);
    let g_o = pref * gamma(u / 2.0 + 1.5) * gamma(one.scale(1.5) - u / 2.0);
    let combined = (ln_gamma(u + 5.0) + ln_gamma(half - u / 2.0) - ln_gamma(u / 2.0)).exp()
        / (PI.sqrt() * (u + 2.0) * (u + 3.0) * (u + 4.0));
    let s = Complex64::from(EPSILON);
    let w = u + 1.0 - EPSILON;
    let e_sw = gamma_ratio((one - s) / 2.0, s / 2.0) * gamma_ratio((one - w) / 2.0, w / 2.0);
    let o_sw = gamma_ratio((one.scale(2.0) - s) / 2.0, (s + 1.0) / 2.0)
        * gamma_ratio((one.scale(2.0) - w) / 2.0, (w + 1.0) / 2.0);
    Ok(ParityKernel { u, e_sw, o_sw, g_e, g_o, j, combined })
}

/// Fixed composite GK15 rule on `[0, T]`.
struct HalfLine {
    /// `(t, Kronrod weight, Gauss weight)`.
    nodes: Vec<(f64, f64, f64)>,
    t_max: f64,
}

impl HalfLine {
    fn new(t_max: f64, width: f64) -> Self {
        let n = (t_max / width).ceil().max(1.0) as usize;
        let h = t_max / n as f64;
        let mut nodes = Vec::with_capacity(15 * n);
        for i in 0..n {
            let mid = h * (i as f64 + 0.5);
            let half = 0.5 * h;
            for j in 0..7 {
                let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
                nodes.push((mid - half * XGK[j], WGK[j] * half, g * half));
                nodes.push((mid + half * XGK[j], WGK[j] * half, g * half));
            }
            nodes.push((mid, WGK[7] * half, WG[3] * half));
        }
        HalfLine { nodes, t_max }
    }

    fn sample_points(&self) -> Vec<f64> {
        decade(self.t_max).collect()
    }
}

/// Accumulates `(1/π) Re ∫_0^T` plus a fitted power tail for one `X`.
#[derive(Clone, Default)]
struct Accum {
    kronrod: Complex64,
    gauss: Complex64,
    samples: Vec<(f64, Complex64)>,
}

impl Accum {
    fn add(&mut self, v: Complex64, wk: f64, wg: f64) {
        self.kronrod += v * wk;
        self.gauss += v * wg;
    }

    /// The tail is bounded, not added: these integrands mix many frequencies
    /// and a mean of their last-decade samples is noise.
    fn finish(&self, t_max: f64, power: f64, evaluations: usize) -> QuadratureReport {
        let peak = self.samples.iter().map(|&(t, v)| v.norm() * t.powf(power)).fold(0.0, f64::max);
        let terr = 2.0 * peak * t_max.powf(1.0 - power) / (power - 1.0);
        QuadratureReport {
            value: Complex64::from(self.kronrod.re / PI),
            trunc_err: terr / PI,
            quad_err: (self.kronrod - self.gauss).norm() / PI,
            evaluations,
            epsilon: EPSILON,
        }
    }
}

/// Panel width resolving `X^{it}` for every `X ≤ x_max`.
fn width_for(x_max: f64) -> f64 {
    (PI / x_max.max(1.0).ln()).min(0.5)
}

/// Product truncation used inside contour integrands.
pub fn contour_product_config() -> ProductConfig {
    ProductConfig::with_p_max(5_000)
}

/// `2 X^{s+4} / D(s)` at `s = c + it`, for the rational factor `D`.
fn x_weight(s: Complex64, ln_x: f64) -> Complex64 {
    ((s + 4.0) * ln_x).exp() * 2.0
}

/// Values of an X-independent integrand factor on the grid and the tail points.
fn tabulate(
    grid: &HalfLine,
    c: f64,
    h: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let body: Result<Vec<Complex64>> = grid.nodes.par_iter().map(|&(t, _, _)| h(Complex64::new(c, t))).collect();
    let tail: Result<Vec<Complex64>> =
        grid.sample_points().into_iter().map(|t| h(Complex64::new(c, t))).collect();
    Ok((body?, tail?))
}

fn integrate_family(grid: &HalfLine, c: f64, body: &[Complex64], tail: &[Complex64], x: f64, power: f64) -> QuadratureReport {
    let lx = x.ln();
    let mut acc = Accum::default();
    for (&(t, wk, wg), &v) in grid.nodes.iter().zip(body) {
        acc.add(v * x_weight(Complex64::new(c, t), lx), wk, wg);
    }
    acc.samples = grid
        .sample_points()
        .into_iter()
        .zip(tail)
        .map(|(t, &v)| (t, v * x_weight(Complex64::new(c, t), lx)))
        .collect();
    acc.finish(grid.t_max, power, body.len())
}

fn check_xs(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.iter().any(|&x| !(x >= 1.0)) {
        return domain("secondary terms need X ≥ 1");
    }
    Ok(xs.iter().copied().fold(1.0, f64::max))
}

/// `ℰ_Δ(X) = 2 (1/2πi) ∫_{(c)} 𝒬_Δ(s) X^{s+4} ds / (s(s+3)(s+4))`, `-1/2 < c < 0`,
/// for every `X` in `xs`.
pub fn e_delta_series(xs: &[f64], delta: &DeltaModulus, prof: &LocalProfile, spec: &QuadratureSpec) -> Result<Vec<QuadratureReport>> {
    let x_max = check_xs(xs)?;
    if !(spec.c > -0.5 && spec.c < 0.0) {
        return domain("ℰ_Δ is integrated on a line with -1/2 < c < 0");
    }
    let cfg = contour_product_config();
    let h = |s: Complex64| -> Result<Complex64> {
        Ok(q_delta(s, delta, prof, &cfg)?.value / (s * (s + 3.0) * (s + 4.0)))
    };
    family(xs, x_max, spec, &h)
}

fn family(
    xs: &[f64],
    x_max: f64,
    spec: &QuadratureSpec,
    h: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
) -> Result<Vec<QuadratureReport>> {
    let grid = HalfLine::new(spec.t_max, width_for(x_max));
    let (body, tail) = tabulate(&grid, spec.c, h)?;
    let power = spec.power();
    Ok(xs.iter().map(|&x| integrate_family(&grid, spec.c, &body, &tail, x, power)).collect())
}

pub fn e_delta(x: f64, delta: &DeltaModulus, prof: &LocalProfile, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    Ok(e_delta_series(&[x], delta, prof, spec)?[0])
}

/// Default contour for `ℰ_Δ`: `ℜs = -1/4`, integrand `≍ |t|^{-23/8}`.
pub fn e_delta_spec() -> QuadratureSpec {
    QuadratureSpec {
        c: -0.25,
        t_max: 400.0,
        tol: 1e-10,
        decay: Decay::Power(2.875),
        conjugate_symmetric: true,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Less,
    Greater,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondaryReport {
    pub x: f64,
    /// With `𝒬^<` or `𝒬^>` as defined.
    pub literal: QuadratureReport,
    /// The same integral with `𝒬_Δ` in their place.
    pub q_delta_variant: QuadratureReport,
}

/// Default contours: `ℜs = -1/2` for `ℰ^<`, `ℜs = 1/2` for `ℰ^>`.
pub fn secondary_spec(side: Side) -> QuadratureSpec {
    let c = match side {
        Side::Less => -0.5,
        Side::Greater => 0.5,
    };
    QuadratureSpec { c, t_max: 400.0, tol: 1e-10, decay: Decay::Power(2.75), conjugate_symmetric: true }
}

/// `ℰ^<` (`2∫ 𝒬^< X^{s+4} ds/(s(s+2)(s+3)(s+4))`) or `ℰ^>`
/// (`2∫ 𝒬^> X^{s+4} ds/((s+2)(s+3)(s+4))`), each next to its `𝒬_Δ` variant.
pub fn e_secondary_series(
    side: Side,
    xs: &[f64],
    delta: &DeltaModulus,
    prof: &LocalProfile,
    spec: &QuadratureSpec,
) -> Result<Vec<SecondaryReport>> {
    let x_max = check_xs(xs)?;
    let ok = match side {
        Side::Less => spec.c >= -0.5 && spec.c < 0.0,
        Side::Greater => spec.c > 0.0 && spec.c < 1.0,
    };
    if !ok {
        return domain("contour outside the strip where the secondary term is defined");
    }
    let cfg = contour_product_config();
    let denom = move |s: Complex64| match side {
        Side::Less => s * (s + 2.0) * (s + 3.0) * (s + 4.0),
        Side::Greater => (s + 2.0) * (s + 3.0) * (s + 4.0),
    };
    let lit = |s: Complex64| -> Result<Complex64> {
        let q = match side {
            Side::Less => q_less(s, delta, prof, &cfg)?,
            Side::Greater => q_greater(s, delta, prof, &cfg)?,
        };
        Ok(q.value / denom(s))
    };
    let var = |s: Complex64| -> Result<Complex64> { Ok(q_delta(s, delta, prof, &cfg)?.value / denom(s)) };
    let a = family(xs, x_max, spec, &lit)?;
    let b = family(xs, x_max, spec, &var)?;
    Ok(xs
        .iter()
        .zip(a.into_iter().zip(b))
        .map(|(&x, (literal, q_delta_variant))| SecondaryReport { x, literal, q_delta_variant })
        .collect())
}

/// Default for `ℛ_Δ` on `ℜs = -1`; see [`r_delta_contour`].
pub fn r_delta_spec() -> QuadratureSpec {
    QuadratureSpec { c: -1.0, t_max: 250.0, tol: 1e-8, decay: Decay::Power(1.5), conjugate_symmetric: true }
}

/// `ℛ_Δ(X) = 2 (1/2πi) ∫_{(-1)} π^{s-1/2} Γ(1/2-s/2)/Γ(s/2) ζ(1-s) 𝒫_Δ(s) R_s
/// X^{s+4} ds / ((s+2)(s+3)(s+4))` with `R_s` cut at `q ≤ X`.
///
/// The integrand decays only like `|t|^{-3/2}`; the raw integrals up to `T`,
/// `2T`, `4T` are Richardson-extrapolated in `T^{-1/2}` and `T^{-1}`.
pub fn r_delta_contour(x: f64, delta: &DeltaModulus, prof: &LocalProfile, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    if !(x >= 1.0) {
        return domain("ℛ_Δ needs X ≥ 1");
    }
    if !(spec.c >= -1.0 && spec.c < 0.0) {
        return domain("ℛ_Δ is integrated on a line with -1 ≤ c < 0");
    }
    let cfg = contour_product_config();
    let support = SquarefreeSupport::new(x.floor() as u64, delta, prof);
    let lx = x.ln();
    let half = Complex64::from(0.5);
    let h = |s: Complex64| -> Result<Complex64> {
        let gam = (ln_gamma(half - s / 2.0) - ln_gamma(s / 2.0) + (s - 0.5) * PI.ln()).exp();
        let z = zeta_unchecked(Complex64::from(1.0) - s);
        let p = p_delta(s, delta, prof, &cfg)?.value;
        let r: Complex64 = support.terms(s, prof).into_iter().sum();
        Ok(gam * z * p * r * x_weight(s, lx) / ((s + 2.0) * (s + 3.0) * (s + 4.0)))
    };
    let t = spec.t_max;
    let grid = HalfLine::new(4.0 * t, width_for(x).min(1.0));
    let body: Result<Vec<Complex64>> =
        grid.nodes.par_iter().map(|&(tt, _, _)| h(Complex64::new(spec.c, tt))).collect();
    let body = body?;
    let mut k = [Complex64::from(0.0); 3];
    let mut g = [Complex64::from(0.0); 3];
    for (&(tt, wk, wg), v) in grid.nodes.iter().zip(&body) {
        let from = if tt <= t { 0 } else if tt <= 2.0 * t { 1 } else { 2 };
        for i in from..3 {
            k[i] += v * wk;
            g[i] += v * wg;
        }
    }
    let v: Vec<f64> = k.iter().map(|z| z.re / PI).collect();
    let r2 = std::f64::consts::SQRT_2;
    let first = (r2 * v[1] - v[0]) / (r2 - 1.0);
    let second = (r2 * v[2] - v[1]) / (r2 - 1.0);
    let value = 2.0 * second - first;
    Ok(QuadratureReport {
        value: Complex64::from(value),
        trunc_err: 2.0 * (value - second).abs(),
        quad_err: (k[2] - g[2]).norm() / PI,
        evaluations: body.len(),
        epsilon: EPSILON,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CancellationRow {
    pub x: f64,
    /// `X⁵ 𝒜^>(X)` with `𝒜^> = 𝒫_Δ(1) Σ_{q>X} g_Δ(q) θ_1(q)/q`.
    pub x5_a_greater: f64,
    pub e_greater: QuadratureReport,
    pub r_delta: QuadratureReport,
    /// `X⁵𝒜^> + ℰ^> - ℛ_Δ` as written.
    pub literal: f64,
    /// `X⁵𝒜^>/30 + ℰ^> - ℛ_Δ`: `1/30 = 2/(3·4·5)` is the residue weight of
    /// `2X^{s+4}/((s+2)(s+3)(s+4))` at `s = 1`.
    pub residue_normalized: f64,
    pub error: f64,
}

/// `X⁵𝒜^>`, `ℰ^>`, `ℛ_Δ` over a batch of `X`, with `ℰ^>` and `ℛ_Δ` on the
/// common line `ℜs = c`, `0 < c < 1`. For `Re s > -2` the Gamma ratio times
/// `ζ(1-s)` in `ℛ_Δ` is `ζ(s)`, and nothing else in its integrand has a pole
/// in `-2 < Re s < 1`, so `ℛ_Δ` may be taken on the same line as `ℰ^>`.
pub fn greater_cancellation(
    xs: &[f64],
    delta: &DeltaModulus,
    prof: &LocalProfile,
    spec: &QuadratureSpec,
) -> Result<Vec<CancellationRow>> {
    let x_max = check_xs(xs)?;
    if !(spec.c > 0.0 && spec.c < 1.0) {
        return domain("the common contour needs 0 < c < 1");
    }
    let cfg = contour_product_config();
    let support = SquarefreeSupport::new(x_max.floor() as u64, delta, prof);
    let moduli: Vec<u64> = support.moduli().collect();
    let cuts: Vec<usize> = xs.iter().map(|&x| moduli.partition_point(|&q| q as f64 <= x)).collect();
    let grid = HalfLine::new(spec.t_max, width_for(x_max));
    let c = spec.c;
    // per node: 𝒬^>(s)/D(s) and ζ(s)𝒫_Δ(s)R_s(X_j)/D(s) for each j
    let point = |t: f64| -> Result<(Complex64, Vec<Complex64>)> {
        let s = Complex64::new(c, t);
        let d = (s + 2.0) * (s + 3.0) * (s + 4.0);
        let qg = q_greater(s, delta, prof, &cfg)?.value / d;
        let zp = zeta_unchecked(s) * p_delta(s, delta, prof, &cfg)?.value / d;
        let terms = support.terms(s, prof);
        let mut prefix = Complex64::from(0.0);
        let mut out = Vec::with_capacity(cuts.len());
        let mut done = 0;
        let mut order: Vec<usize> = (0..cuts.len()).collect();
        order.sort_by_key(|&j| cuts[j]);
        let mut by_j = vec![Complex64::from(0.0); cuts.len()];
        for j in order {
            while done < cuts[j] {
                prefix += terms[done];
                done += 1;
            }
            by_j[j] = zp * prefix;
        }
        out.extend(by_j);
        Ok((qg, out))
    };
    let body: Result<Vec<(Complex64, Vec<Complex64>)>> = grid.nodes.par_iter().map(|&(t, _, _)| point(t)).collect();
    let body = body?;
    let tail: Result<Vec<(Complex64, Vec<Complex64>)>> = grid.sample_points().into_iter().map(point).collect();
    let tail = tail?;
    let samples = grid.sample_points();
    let power = spec.power();
    let mut rows = Vec::with_capacity(xs.len());
    for (j, &x) in xs.iter().enumerate() {
        let lx = x.ln();
        let mut e = Accum::default();
        let mut r = Accum::default();
        for (&(t, wk, wg), (qg, rs)) in grid.nodes.iter().zip(&body) {
            let w = x_weight(Complex64::new(c, t), lx);
            e.add(qg * w, wk, wg);
            r.add(rs[j] * w, wk, wg);
        }
        for (&t, (qg, rs)) in samples.iter().zip(&tail) {
            let w = x_weight(Complex64::new(c, t), lx);
            e.samples.push((t, qg * w));
            r.samples.push((t, rs[j] * w));
        }
        let e_greater = e.finish(grid.t_max, power, body.len());
        let r_delta = r.finish(grid.t_max, power, body.len());
        let (_, a_gt) = a_split(x, delta, prof, &ProductConfig::default())?;
        let x5 = x.powi(5);
        let x5_a_greater = x5 * a_gt.value.re;
        let diff = e_greater.value.re - r_delta.value.re;
        rows.push(CancellationRow {
            x,
            x5_a_greater,
            e_greater,
            r_delta,
            literal: x5_a_greater + diff,
            residue_normalized: x5_a_greater / 30.0 + diff,
            error: e_greater.error() + r_delta.error() + x5 * a_gt.tail_bound,
        });
    }
    Ok(rows)
}
