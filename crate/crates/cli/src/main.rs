use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use apm_core::analytic::{
    a_split, dirichlet_l, f_chi, f_star, p_delta, q_delta, q_greater, q_less, theta_s, z_kernel, ZVariant,
};
use apm_core::arith::SieveTable;
use apm_core::characters::characters_mod;
use apm_core::contour::{
    e_delta, e_delta_spec, e_secondary_series, meijer_g, parity_kernels, r_delta_contour, r_delta_spec, secondary_spec,
    Side,
};
use apm_core::fit::fit_main;
use apm_core::moments::{exponent_scan, third_moment, MomentConfig, QRule, Summation};
use apm_core::singular::{big_i, f_delta, format_rational, g_delta, r_delta};
use apm_core::special::zeta;
use apm_core::sums::{
    a_q, frak_h, h_small, j_star_delta, k_q, l_delta, lattice_pair_count, s_delta_brute, Exponent, FrakVariant,
};
use apm_core::verify::{endgame_checks, run_suite, EndgameArtifacts, Suite, SuiteReport};
use apm_core::{Complex64, DeltaModulus, LocalProfile, ProductConfig, QuadratureReport, SampleSeries, Weighting};

#[derive(Parser)]
#[command(name = "apm", version, about = "Third moments of primes in progressions and their singular series")]
struct Cli {
    /// File of `p numerator/denominator` lines overriding `r(p)`.
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve `Λ(n)` up to a limit and write the binary cache.
    Sieve {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Exact values of `f_Δ`, `g_Δ`, `R_Δ` at `n`, or `I(n)`.
    Singular {
        #[arg(long, value_enum)]
        op: SingularOp,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        delta: u64,
    },
    /// Character values modulo `q` as CSV.
    Chars {
        #[arg(long = "mod")]
        modulus: u64,
        /// Include every residue, zeros included.
        #[arg(long)]
        table: bool,
    },
    /// L-functions and Euler products at a complex point.
    Analytic {
        #[arg(long = "fn", value_enum)]
        func: AnalyticFn,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        s: Option<Complex64>,
        #[arg(long, default_value_t = 1)]
        delta: u64,
        /// Modulus of `χ` for `L` and `Fchi`.
        #[arg(long = "mod")]
        modulus: Option<u64>,
        /// Index of `χ` in the character group.
        #[arg(long, default_value_t = 0)]
        chi: usize,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long = "X")]
        x: Option<f64>,
        /// `delta`, `less`, `greater` or `star` for Q; `less` or `greater`
        /// for A; `A` or `B` for Z.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        p_max: u64,
    },
    /// Vertical-line integrals.
    Contour {
        #[arg(long, value_enum)]
        which: ContourWhich,
        #[arg(long = "X")]
        x: Option<f64>,
        #[arg(long, default_value_t = 1)]
        delta: u64,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Point `u` for `jkernel`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        u: Option<Complex64>,
        /// Parameters `a, a', b, b'` for `meijer`, each `RE,IM`.
        #[arg(long, value_parser = parse_complex, num_args = 4, allow_hyphen_values = true)]
        params: Vec<Complex64>,
    },
    /// Finite sums and their closed forms.
    Sums {
        #[arg(long, value_enum)]
        op: SumsOp,
        #[arg(long = "X")]
        x: Option<u64>,
        #[arg(long, default_value_t = 1)]
        delta: u64,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        p: Option<u64>,
        /// Exponent `u`: an integer, a fraction, or `RE+IMi`.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        s: Option<Complex64>,
        /// `p`, `1` or `1*` for frakh.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long = "K", default_value_t = 40)]
        k: u32,
        #[arg(long = "A", default_value_t = 10_000)]
        a_max: u64,
        #[arg(long = "N", default_value_t = 1_000_000)]
        n_max: u64,
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        d2: Option<u64>,
    },
    /// Weighted third moment of `E_x(q, a)` over `q ≤ Q`.
    Moment {
        #[arg(long)]
        x: u64,
        #[arg(long = "Q")]
        q: u64,
        #[arg(long, default_value = "phi")]
        weighting: Weighting,
        #[arg(long)]
        per_q: Option<PathBuf>,
        #[arg(long, default_value_t = apm_core::moments::DEFAULT_OP_BUDGET)]
        op_budget: u64,
        #[arg(long)]
        compensated: bool,
    },
    /// Moments over an x-grid with `Q` from a rule, and their log-log slope.
    Scan {
        /// Comma-separated x values.
        #[arg(long)]
        x_grid: String,
        #[arg(long, default_value = "x/(log x)^2")]
        q_rule: QRule,
        #[arg(long, default_value = "phi")]
        weighting: Weighting,
        #[arg(long, default_value_t = apm_core::moments::DEFAULT_OP_BUDGET)]
        op_budget: u64,
    },
    /// Main-term fit of an `X,value` series.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        with_e_delta: bool,
        #[arg(long, default_value_t = 1)]
        delta: u64,
    },
    /// Run an invariant battery; exits nonzero if any check fails.
    Verify {
        #[arg(long)]
        suite: Suite,
    },
    /// Run the batteries and write their output as JSON and CSV.
    Report {
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Restrict to these suites.
        #[arg(long)]
        suite: Vec<Suite>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SingularOp {
    F,
    G,
    #[value(name = "R")]
    R,
    #[value(name = "I")]
    I,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyticFn {
    Zeta,
    #[value(name = "L")]
    L,
    #[value(name = "Fchi")]
    Fchi,
    #[value(name = "P")]
    P,
    #[value(name = "Q")]
    Q,
    Theta,
    #[value(name = "A")]
    A,
    #[value(name = "Z")]
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContourWhich {
    #[value(name = "E")]
    E,
    #[value(name = "Eless")]
    Eless,
    #[value(name = "Egreater")]
    Egreater,
    #[value(name = "R")]
    R,
    Meijer,
    Jkernel,
}

#[derive(Clone, Copy, ValueEnum)]
enum SumsOp {
    Sdelta,
    Ldelta,
    Jstar,
    H,
    Frakh,
    Aq,
    Kq,
    Lattice,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let mut parts = s.split(',');
    let re = parts.next().unwrap_or("").trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?;
    let im = match parts.next() {
        Some(v) => v.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(format!("{s:?}: expected RE or RE,IM"));
    }
    Ok(Complex64::new(re, im))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("missing --{flag}"))
}

fn load_profile(path: Option<&Path>) -> Result<LocalProfile> {
    match path {
        None => Ok(LocalProfile::default_profile()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading profile {}", p.display()))?;
            Ok(LocalProfile::parse(&text)?)
        }
    }
}

fn emit(text: &str) -> Result<()> {
    std::io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn valued_json(value: Complex64, tail_bound: f64) -> Value {
    json!({ "value_re": value.re, "value_im": value.im, "tail_bound": tail_bound })
}

fn quad_json(r: &QuadratureReport) -> Value {
    json!({ "re": r.value.re, "im": r.value.im, "trunc_err": r.trunc_err, "quad_err": r.quad_err })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let prof = load_profile(cli.profile.as_deref())?;
    match cli.command {
        Command::Sieve { limit, cache } => {
            let table = SieveTable::build(limit)?;
            if let Some(path) = &cache {
                table.write_cache(path)?;
            }
            print_json(&json!({
                "limit": limit,
                "primes": table.primes().count(),
                "theta": table.theta(limit),
                "psi": table.psi(limit),
                "cache": cache.map(|p| p.display().to_string()),
            }))?;
        }
        Command::Singular { op, n, delta } => {
            let d = DeltaModulus::new(delta)?;
            let (name, v) = match op {
                SingularOp::F => ("f", f_delta(n, &d, &prof)?),
                SingularOp::G => ("g", g_delta(n, &d, &prof)?),
                SingularOp::R => ("R", r_delta(n, &d, &prof)?),
                SingularOp::I => ("I", big_i(n, &prof)?),
            };
            print_json(&json!({ "op": name, "n": n, "delta": d.value(), "value": format_rational(&v) }))?;
        }
        Command::Chars { modulus, table } => {
            let group = characters_mod(modulus)?;
            let mut out = String::from("chi_index,n,re,im\n");
            for (i, chi) in group.characters().iter().enumerate() {
                for n in 0..modulus.max(1) {
                    let v = chi.value(n);
                    if table || v.norm() != 0.0 {
                        out.push_str(&format!("{i},{n},{},{}\n", v.re, v.im));
                    }
                }
            }
            emit(&out)?;
        }
        Command::Analytic { func, s, delta, modulus, chi, q, x, variant, p_max } => {
            let d = DeltaModulus::new(delta)?;
            let cfg = ProductConfig::with_p_max(p_max);
            let character = || -> Result<_> {
                let group = characters_mod(need(modulus, "mod")?)?;
                group.characters().get(chi).cloned().with_context(|| format!("no character with index {chi}"))
            };
            let v = match func {
                AnalyticFn::Zeta => valued_json(zeta(need(s, "s")?)?, 0.0),
                AnalyticFn::L => valued_json(dirichlet_l(need(s, "s")?, &character()?)?, 0.0),
                AnalyticFn::Fchi => {
                    let r = f_chi(need(s, "s")?, &character()?, &d, &prof, &cfg)?;
                    valued_json(r.value, r.tail_bound)
                }
                AnalyticFn::P => {
                    let r = p_delta(need(s, "s")?, &d, &prof, &cfg)?;
                    valued_json(r.value, r.tail_bound)
                }
                AnalyticFn::Q => {
                    let s = need(s, "s")?;
                    let r = match variant.as_deref().unwrap_or("delta") {
                        "delta" => q_delta(s, &d, &prof, &cfg)?,
                        "less" => q_less(s, &d, &prof, &cfg)?,
                        "greater" => q_greater(s, &d, &prof, &cfg)?,
                        "star" => f_star(s, &d, &prof, &cfg)?,
                        other => bail!("unknown Q variant {other:?}"),
                    };
                    valued_json(r.value, r.tail_bound)
                }
                AnalyticFn::Theta => valued_json(theta_s(need(q, "q")?, need(s, "s")?, &prof)?, 0.0),
                AnalyticFn::A => {
                    let (less, greater) = a_split(need(x, "X")?, &d, &prof, &cfg)?;
                    let r = match variant.as_deref().unwrap_or("less") {
                        "less" => less,
                        "greater" => greater,
                        other => bail!("unknown A variant {other:?}"),
                    };
                    valued_json(r.value, r.tail_bound)
                }
                AnalyticFn::Z => {
                    let v = match variant.as_deref().unwrap_or("A") {
                        "A" => ZVariant::A,
                        "B" => ZVariant::B,
                        other => bail!("unknown Z variant {other:?}"),
                    };
                    let r = z_kernel(need(s, "s")?, &d, &prof, &cfg, v)?;
                    valued_json(r.value, r.tail_bound)
                }
            };
            print_json(&v)?;
        }
        Command::Contour { which, x, delta, t, tol, u, params } => {
            let d = DeltaModulus::new(delta)?;
            let tune = |mut spec: apm_core::QuadratureSpec| {
                if let Some(t) = t {
                    spec.t_max = t;
                }
                if let Some(tol) = tol {
                    spec.tol = tol;
                }
                spec
            };
            let v = match which {
                ContourWhich::E => quad_json(&e_delta(need(x, "X")?, &d, &prof, &tune(e_delta_spec()))?),
                ContourWhich::Eless | ContourWhich::Egreater => {
                    let side = if matches!(which, ContourWhich::Eless) { Side::Less } else { Side::Greater };
                    let rows = e_secondary_series(side, &[need(x, "X")?], &d, &prof, &tune(secondary_spec(side)))?;
                    quad_json(&rows[0].literal)
                }
                ContourWhich::R => quad_json(&r_delta_contour(need(x, "X")?, &d, &prof, &tune(r_delta_spec()))?),
                ContourWhich::Meijer => {
                    let [a, a2, b, b2] = params[..] else { bail!("--params needs four values a a' b b'") };
                    let g = meijer_g(a, a2, b, b2)?;
                    let mut v = quad_json(&g.quadrature);
                    v["closed_re"] = json!(g.closed.re);
                    v["closed_im"] = json!(g.closed.im);
                    v
                }
                ContourWhich::Jkernel => {
                    let k = parity_kernels(need(u, "u")?)?;
                    let mut v = quad_json(&k.j);
                    v["g_e_re"] = json!(k.g_e.re);
                    v["g_e_im"] = json!(k.g_e.im);
                    v
                }
            };
            print_json(&v)?;
        }
        Command::Sums { op, x, delta, q, n, p, u, s, variant, k, a_max, n_max, d, d2 } => {
            let dm = DeltaModulus::new(delta)?;
            let exponent = || -> Result<Exponent> { Ok(need(u.as_deref(), "u")?.parse::<Exponent>()?) };
            let v = match op {
                SumsOp::Sdelta => serde_json::to_value(s_delta_brute(need(x, "X")?, &dm, &prof)?)?,
                SumsOp::Ldelta => serde_json::to_value(l_delta(need(q, "q")?, need(x, "X")?, &dm, &prof)?)?,
                SumsOp::Jstar => serde_json::to_value(j_star_delta(need(x, "X")?, &dm, &prof)?)?,
                SumsOp::H => serde_json::to_value(h_small(need(q, "q")?, exponent()?, need(n, "n")?, &dm, &prof)?)?,
                SumsOp::Frakh => {
                    let variant: FrakVariant = need(variant.as_deref(), "variant")?.parse()?;
                    let u = match exponent()? {
                        Exponent::Integer(i) => Complex64::from(i as f64),
                        Exponent::Complex(z) => z,
                    };
                    serde_json::to_value(frak_h(need(p, "p")?, u, &dm, variant, k, &prof)?)?
                }
                SumsOp::Aq => serde_json::to_value(a_q(need(n, "n")?, need(q, "q")?, &dm, &prof, a_max)?)?,
                SumsOp::Kq => serde_json::to_value(k_q(need(s, "s")?, need(q, "q")?, &dm, &prof, n_max)?)?,
                SumsOp::Lattice => serde_json::to_value(lattice_pair_count(need(n, "n")?, need(d, "d")?, need(d2, "d2")?)?)?,
            };
            print_json(&v)?;
        }
        Command::Moment { x, q, weighting, per_q, op_budget, compensated } => {
            let table = SieveTable::build(x)?;
            let summation = if compensated { Summation::Compensated } else { Summation::Pairwise };
            let rec = third_moment(x, q, weighting, &table, &MomentConfig { op_budget, summation })?;
            if let Some(path) = per_q {
                let mut out = String::from("q,a_count,sum_E3,phi_q\n");
                for p in &rec.partials {
                    out.push_str(&format!("{},{},{},{}\n", p.q, p.a_count, p.sum_e3, p.phi_q));
                }
                fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
            }
            print_json(&json!({ "x": rec.x, "Q": rec.q_max, "weighting": rec.weighting, "moment": rec.moment }))?;
        }
        Command::Scan { x_grid, q_rule, weighting, op_budget } => {
            let xs: Vec<u64> = x_grid
                .split(',')
                .map(|v| v.trim().parse::<f64>().map(|f| f as u64).with_context(|| format!("bad x value {v:?}")))
                .collect::<Result<_>>()?;
            let x_max = *xs.iter().max().context("empty --x-grid")?;
            let table = SieveTable::build(x_max)?;
            let points: Vec<(u64, u64)> = xs.iter().map(|&x| (x, q_rule.q_for(x))).collect();
            let report = exponent_scan(&points, weighting, &table, &MomentConfig { op_budget, ..Default::default() })?;
            let mut out = String::from("x,Q,moment\n");
            for r in &report.rows {
                out.push_str(&format!("{},{},{}\n", r.x, r.q, r.moment));
            }
            out.push_str(&format!(
                "{}\n",
                json!({
                    "weighting": report.weighting,
                    "slope": report.fit.slope,
                    "slope_se": report.fit.slope_se,
                    "intercept": report.fit.intercept,
                    "points": report.fit.n,
                    "epsilon_prime": report.epsilon_prime,
                })
            ));
            emit(&out)?;
        }
        Command::Fit { input, with_e_delta, delta } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let series = SampleSeries::from_csv(input.display().to_string(), &text)?;
            print_json(&fit_main(&series, with_e_delta, &DeltaModulus::new(delta)?, &prof)?)?;
        }
        Command::Verify { suite } => {
            let report = run_suite(suite, &prof);
            emit(&report.checks.iter().map(|c| format!("{c}\n")).collect::<String>())?;
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { out, suite } => {
            let suites = if suite.is_empty() { vec![Suite::Exact, Suite::Analytic, Suite::Endgame] } else { suite };
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut all = Vec::new();
            for s in suites {
                let report = if s == Suite::Endgame {
                    let art = EndgameArtifacts::compute(&prof);
                    write_endgame(&out, &art)?;
                    SuiteReport { suite: s, checks: endgame_checks(&prof, &art) }
                } else {
                    run_suite(s, &prof)
                };
                fs::write(out.join(format!("{s}.csv")), report.to_csv())?;
                all.push(report);
            }
            fs::write(out.join("summary.json"), serde_json::to_string_pretty(&all)?)?;
            emit(&all.iter().flat_map(|r| r.checks.iter().map(move |c| format!("{} {c}\n", r.suite))).collect::<String>())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_endgame(out: &Path, art: &EndgameArtifacts) -> Result<()> {
    if let Ok(fit) = &art.fit {
        fs::write(out.join("endgame_fit.json"), serde_json::to_string_pretty(fit)?)?;
    }
    if let Ok(rows) = &art.cancellation {
        let mut csv = String::from("X,x5_a_greater,e_greater,r_delta,literal,residue_normalized,error\n");
        for r in rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.x, r.x5_a_greater, r.e_greater.value.re, r.r_delta.value.re, r.literal, r.residue_normalized, r.error
            ));
        }
        fs::write(out.join("cancellation.csv"), csv)?;
    }
    if let Ok(scan) = &art.scan {
        let mut csv = String::from("x,Q,moment,comparison\n");
        for r in &scan.rows {
            csv.push_str(&format!("{},{},{},{}\n", r.x, r.q, r.moment, r.comparison));
        }
        fs::write(out.join("desk_scan.csv"), csv)?;
        fs::write(out.join("desk_scan.json"), serde_json::to_string_pretty(scan)?)?;
    }
    Ok(())
}
