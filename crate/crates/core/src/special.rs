//! Complex special functions: Gamma, Riemann and Hurwitz zeta.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// B_2, B_4, …, B_40.
const BERNOULLI_EVEN: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -26315271553053477373.0 / 1919190.0,
    2929993913841559.0 / 6.0,
    -261082718496449122051.0 / 13530.0,
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `log sin(πz)` on some branch, stable for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    let ln_2i = c(2f64.ln(), PI / 2.0);
    if z.im > 0.0 {
        -i * PI * z + (Complex64::from(1.0) - (i * 2.0 * PI * z).exp()).ln() - ln_2i
    } else {
        i * PI * z + (Complex64::from(1.0) - (-i * 2.0 * PI * z).exp()).ln() - ln_2i
    }
}

/// A logarithm of Γ(z). The imaginary part is not normalised to the
/// principal branch; only `exp` of sums and differences is meaningful.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return c(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(Complex64::from(1.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::from(LANCZOS_COEFFS[0]);
    for (k, &coef) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += coef / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return c(f64::INFINITY, 0.0);
    }
    ln_gamma(z).exp()
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(c(x, 0.0)).re
}

/// `Γ(a)/Γ(b)` without intermediate overflow.
pub fn gamma_ratio(a: Complex64, b: Complex64) -> Complex64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im.abs() < 1e-14 && z.re <= 1e-14 && (z.re - z.re.round()).abs() < 1e-14
}

fn em_cutoff(s: Complex64) -> usize {
    10 + (s.norm() / 2.0).ceil() as usize
}

/// Euler–Maclaurin body shared by the plain and regularised Hurwitz zeta.
/// With `regular`, returns `ζ(s, a) - 1/(s - 1)`.
fn hurwitz_em(s: Complex64, a: f64, regular: bool) -> Complex64 {
    let n = em_cutoff(s);
    let mut sum = Complex64::from(0.0);
    for k in 0..n {
        sum += (-s * (k as f64 + a).ln()).exp();
    }
    let base = n as f64 + a;
    let log_base = base.ln();
    let pow_neg_s = (-s * log_base).exp();
    let one_minus_s = Complex64::from(1.0) - s;
    let z = one_minus_s * log_base;
    if regular {
        // ((N+a)^{1-s} - 1)/(s - 1) = -L (e^z - 1)/z
        let expm1_over_z = if z.norm() < 0.5 {
            let mut term = Complex64::from(1.0);
            let mut acc = Complex64::from(1.0);
            for j in 2..30 {
                term = term * z / j as f64;
                acc += term;
            }
            acc
        } else {
            (z.exp() - 1.0) / z
        };
        sum += -log_base * expm1_over_z;
    } else {
        sum += z.exp() / (s - 1.0);
    }
    sum += pow_neg_s * 0.5;
    // Bernoulli tail: B_{2k}/(2k)! · s(s+1)…(s+2k-2) · base^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = pow_neg_s / base;
    let inv_base2 = 1.0 / (base * base);
    for (k, &b) in BERNOULLI_EVEN.iter().enumerate() {
        let kk = (k + 1) as f64;
        let term = rising * power * (b / fact);
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
        rising = rising * (s + 2.0 * kk - 1.0) * (s + 2.0 * kk);
        fact *= (2.0 * kk + 1.0) * (2.0 * kk + 2.0);
        power *= inv_base2;
    }
    sum
}

pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("Hurwitz parameter {a} outside (0, 1]"));
    }
    if (s - 1.0).norm() == 0.0 {
        return domain("pole of the Hurwitz zeta function at s = 1");
    }
    Ok(hurwitz_em(s, a, false))
}

/// `ζ(s, a) - 1/(s - 1)`, entire in `s`.
pub fn hurwitz_zeta_regular(s: Complex64, a: f64) -> Result<Complex64> {
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("Hurwitz parameter {a} outside (0, 1]"));
    }
    Ok(hurwitz_em(s, a, true))
}

pub fn zeta(s: Complex64) -> Result<Complex64> {
    hurwitz_zeta(s, 1.0)
}

/// ζ(s) for callers that have already excluded the pole.
pub(crate) fn zeta_unchecked(s: Complex64) -> Complex64 {
    hurwitz_em(s, 1.0, false)
}
