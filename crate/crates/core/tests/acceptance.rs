//! Acceptance checks. Prints one PASS/FAIL line per criterion, followed by
//! supplementary lines on the non-lattice fixtures, and exits non-zero if any
//! numbered criterion fails.

use std::cell::OnceCell;
use std::f64::consts::SQRT_2;
use std::process::Command;
use std::time::Instant;

use skewmix::asymptotics::{direct_integral_log, expand, DirectOptions, TaylorJet};
use skewmix::cohomology::{approximating_sequence, AnchorChoice};
use skewmix::config::{fixture, unit_gaussian_observable, Experiment, DECADE_GRID};
use skewmix::correlations::{expansion_coefficients, loglog_slope, SpectralSetup};
use skewmix::fiber::FiberBasisFn;
use skewmix::gibbs::GibbsData;
use skewmix::observables::{Observable, ObservableSpec, TermSpec};
use skewmix::oracle::oracle_correlation;
use skewmix::pipeline::{reduce, run_one_sided, spectral_setup, verify_reduction, OneSidedReport};
use skewmix::sft::{CylinderFunction, C64};
use skewmix::twisted::twisted_data;
use skewmix::window::Window;
use skewmix::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome { pass: false, detail: format!("error: {e}") }
    }
}

fn report(label: &str, outcome: &Outcome) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{label}: {verdict} | {}", outcome.detail);
}

fn run(label: &str, body: impl FnOnce() -> Result<Outcome, Error>) -> bool {
    let start = Instant::now();
    let outcome = body().unwrap_or_else(Outcome::error);
    let outcome = Outcome { detail: format!("{} [{:.1}s]", outcome.detail, start.elapsed().as_secs_f64()), ..outcome };
    report(label, &outcome);
    outcome.pass
}

fn load(name: &str) -> Result<Experiment, Error> {
    fixture(name)?.build()
}

fn one_sided(exp: &Experiment) -> Result<(CylinderFunction, GibbsData), Error> {
    let f = exp.f.to_cylinder(&exp.spec)?;
    let g = exp.gibbs(&f, exp.r.future().max(exp.s.future()))?;
    Ok((f, g))
}

fn setup(exp: &Experiment) -> Result<(CylinderFunction, GibbsData, SpectralSetup), Error> {
    let (f, g) = one_sided(exp)?;
    let s = spectral_setup(exp, &g, &f)?;
    Ok((f, g, s))
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn oracle_equivalence() -> Result<Outcome, Error> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let start = Instant::now();
    let mut worst = 0.0f64;
    pool.install(|| -> Result<(), Error> {
        for name in ["r1", "r2"] {
            let exp = load(name)?;
            let (_, g, setup) = setup(&exp)?;
            let budget = exp.config.budget();
            for n in 1..=10 {
                let spectral = setup.correlation(&exp.r, &exp.s, n)?.value;
                let oracle = oracle_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget)?;
                worst = worst.max((spectral - oracle).norm());
            }
        }
        Ok(())
    })?;
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::new(
        worst <= 1e-8 && secs < 120.0,
        format!("max |spectral - oracle| = {worst:.2e} over n = 1..10 on r1, r2; {secs:.1}s on one thread"),
    ))
}

fn drift_variance() -> Result<Outcome, Error> {
    let exp = load("r1")?;
    let (_, _, setup) = setup(&exp)?;
    let d = setup.drift();
    let closed = (3.0 + 2.0 * SQRT_2) / 2.0;
    let gk_err = (d.omega_green_kubo - closed).abs();
    let eig_rel = (d.omega_eigen - d.omega_green_kubo).abs() / d.omega_green_kubo;
    Ok(Outcome::new(
        gk_err <= 1e-12 && eig_rel <= 1e-6,
        format!(
            "omega_gk = {:.15}, |omega_gk - (3+2*sqrt2)/2| = {gk_err:.1e}, |omega_eigen - omega_gk|/omega = {eig_rel:.1e}",
            d.omega_green_kubo
        ),
    ))
}

fn parabola() -> Result<Outcome, Error> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["r1", "r2"] {
        let exp = load(name)?;
        let (_, _, setup) = setup(&exp)?;
        let (omega, kappa) = (setup.omega(), setup.kappa());
        let xis: Vec<f64> = (0..=5).map(|j| kappa / f64::powi(2.0, 5 - j)).collect();
        let residuals: Vec<f64> = xis
            .iter()
            .map(|&xi| twisted_data(setup.operator(), xi, None).map(|d| (d.lambda - (1.0 - omega * xi * xi)).norm()))
            .collect::<Result<_, _>>()?;
        let slope = loglog_slope(&xis, &residuals);
        pass &= slope >= 2.7;
        parts.push(format!("{name}: slope {slope:.3} on xi in [kappa/32, kappa], kappa = {kappa:.4}"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn krickeberg(report: &OneSidedReport) -> Outcome {
    let k = &report.krickeberg;
    let last = k.rows.last().expect("non-empty grid");
    let pass = last.n == 10_000 && last.residual <= 0.05 && (-1.3..=-0.7).contains(&k.slope);
    Outcome::new(
        pass,
        format!(
            "scaled corr at n = {} is {:.6} vs {:.6}, residual {:.3e}, slope {:.3}",
            last.n, last.scaled.re, k.limit.re, last.residual, k.slope
        ),
    )
}

fn expansion(report: &OneSidedReport) -> Outcome {
    let pass = report.c1_relative_error <= 1e-6 && report.two_term_slope <= -2.2;
    Outcome::new(
        pass,
        format!(
            "c1 = {:.12}, relative error vs closed form {:.2e}, two-term residual slope {:.3}",
            report.expansion.c(1).re,
            report.c1_relative_error,
            report.two_term_slope
        ),
    )
}

/// `ln(1 + z)` without cancellation for small `z`.
fn ln1p(z: C64) -> C64 {
    C64::new(0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p(), z.im.atan2(1.0 + z.re))
}

fn poly_tail(c: &[C64], t: f64) -> C64 {
    c[2..].iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * t + a) * t * t
}

/// Slope of `|expansion − direct integral|` against `n` for `k = 1, 2, 3`.
/// Points within a few ulps of the integral are exact to working precision
/// and are left out of the fit; a case with fewer than two points left is
/// exact at that order.
fn engine_case(
    label: &str,
    g_jet: &TaylorJet,
    v_jet: &TaylorJet,
    ln_g: &(dyn Fn(f64) -> C64 + Sync),
    v: &(dyn Fn(f64) -> C64 + Sync),
    halfwidth: f64,
) -> Result<(bool, String), Error> {
    let opts = DirectOptions { abs_tol: 1e-21, rel_tol: 1e-15 };
    let exact: Vec<C64> = DECADE_GRID
        .iter()
        .map(|&n| direct_integral_log(ln_g, v, halfwidth, n as u64, &opts))
        .collect::<Result<_, _>>()?;
    let mut pass = true;
    let mut slopes = Vec::new();
    for k in 1..=3 {
        let res = expand(g_jet, v_jet, k)?;
        let (xs, ys): (Vec<f64>, Vec<f64>) = DECADE_GRID
            .iter()
            .zip(&exact)
            .map(|(&n, &i)| (n as f64, (res.evaluate(n as f64) - i).norm(), i.norm()))
            .filter(|&(_, e, i)| e > 16.0 * f64::EPSILON * i)
            .map(|(n, e, _)| (n, e))
            .unzip();
        if xs.len() < 2 {
            slopes.push(format!("k={k}: exact"));
            continue;
        }
        let slope = loglog_slope(&xs, &ys);
        pass &= slope <= -(k as f64) + 0.3;
        slopes.push(format!("k={k}: {slope:.2}"));
    }
    Ok((pass, format!("{label} [{}]", slopes.join(", "))))
}

fn engine_order() -> Result<Outcome, Error> {
    const ORDER: usize = 12;
    let factorial = |j: usize| (1..=j).map(|i| i as f64).product::<f64>();
    let gauss = TaylorJet::gaussian(1.0, ORDER);
    let ln_gauss = |t: f64| C64::new(-t * t, 0.0);
    let mut parts = Vec::new();
    let mut pass = true;

    let v_exp = TaylorJet::from_real(&(0..=ORDER).map(|j| 2f64.powi(j as i32) / factorial(j)).collect::<Vec<_>>());
    let (p, d) = engine_case("gaussian", &gauss, &v_exp, &ln_gauss, &|t: f64| C64::new((2.0 * t).exp(), 0.0), 6.0)?;
    pass &= p;
    parts.push(d);

    let mut t2 = vec![0.0; ORDER + 1];
    t2[2] = 1.0;
    let (p, d) =
        engine_case("t^2", &gauss, &TaylorJet::from_real(&t2), &ln_gauss, &|t: f64| C64::new(t * t, 0.0), 6.0)?;
    pass &= p;
    parts.push(d);

    let exp = load("r2")?;
    let (_, _, setup) = setup(&exp)?;
    let rep = expansion_coefficients(&setup, &exp.r, &exp.s, 3)?;
    let mut c = rep.lambda_jet.clone();
    c.resize(ORDER + 1, C64::new(0.0, 0.0));
    c[0] = C64::new(1.0, 0.0);
    c[1] = C64::new(0.0, 0.0);
    let lam = TaylorJet::new(c.clone());
    // Integrate up to the minimum of |λ| on (0, 2]; the endpoint terms are
    // below 0.75ⁿ there.
    let modulus = |t: f64| (C64::new(1.0, 0.0) + poly_tail(&c, t)).norm();
    let halfwidth =
        (1..=2000).map(|i| i as f64 * 1e-3).fold(1e-3, |best, t| if modulus(t) < modulus(best) { t } else { best });
    let ln_lam = |t: f64| ln1p(poly_tail(&c, t));
    let mut one = vec![0.0; ORDER + 1];
    one[0] = 1.0;
    let (p, d) =
        engine_case("lambda(r2)", &lam, &TaylorJet::from_real(&one), &ln_lam, &|_| C64::new(1.0, 0.0), halfwidth)?;
    pass &= p;
    parts.push(d);
    Ok(Outcome::new(pass, format!("{}; structure check never fired", parts.join("; "))))
}

fn reduction() -> Result<Outcome, Error> {
    let exp = load("r1-two-sided")?;
    let red = reduce(&exp)?;
    let inv = verify_reduction(&exp, &red.reduction, 8)?;
    let domega = (red.omega_f - red.omega_f_tilde).abs();
    let pass = red.cohomology_residual <= 1e-12 && inv.max_difference <= 1e-8 && domega <= 1e-8;
    Ok(Outcome::new(
        pass,
        format!(
            "cohomology residual {:.1e}, max invariance difference {:.1e} for n <= 8, |omega(f) - omega(f~)| = {domega:.1e}",
            red.cohomology_residual, inv.max_difference
        ),
    ))
}

/// `(1 + Σ_{k=1}^{8} θᵏ g(x₋ₖ))·e^{−t²/2}` with `g(0) = 1`, `g(1) = −1`.
fn long_past_observable(exp: &Experiment) -> Result<Observable, Error> {
    let theta = exp.spec.theta();
    let mut terms = unit_gaussian_observable().terms;
    for k in 1..=8usize {
        let values =
            (0..1usize << k).map(|i| theta.powi(k as i32) * if i >> (k - 1) == 0 { 1.0 } else { -1.0 }).collect();
        terms.push(TermSpec {
            coeff_past: k,
            coeff_depth: 0,
            coeff_values: values,
            coeff_values_im: None,
            fiber: FiberBasisFn::gaussian(0.0, 1.0),
        });
    }
    Observable::from_spec(&exp.spec, &ObservableSpec { terms })
}

fn approximating() -> Result<Outcome, Error> {
    let exp = load("r1")?;
    let spec = &exp.spec;
    let (f, g) = one_sided(&exp)?;
    let fw = Window::from_cylinder(&f);
    let anchor = AnchorChoice::lexicographic(spec)?;
    let s = long_past_observable(&exp)?;
    let nu = s.nu_integral(&g)?;
    let mut worst_nu = 0.0f64;
    let mut one_sided_ok = true;
    let (mut ms, mut logs) = (Vec::new(), Vec::new());
    for m in 0..=6 {
        let sm = approximating_sequence(spec, &s, &f, m, &anchor)?;
        worst_nu = worst_nu.max((sm.nu_integral(&g)? - nu).norm());
        one_sided_ok &= sm.past() == 0;
        let gap = sm.sub(spec, &s.compose_skew(spec, &fw, m)?)?.sup_norm();
        ms.push(m as f64);
        logs.push(gap.ln());
    }
    let slope = linear_slope(&ms, &logs);
    let target = spec.theta().ln();
    let pass = worst_nu <= 1e-12 && one_sided_ok && (slope - target).abs() <= 0.2;
    Ok(Outcome::new(
        pass,
        format!(
            "max |nu(s_m) - nu(s)| = {worst_nu:.1e}, all past depths 0: {one_sided_ok}, log-gap slope {slope:.3} vs ln theta {target:.3}"
        ),
    ))
}

fn decay_profile(setup: &SpectralSetup, s: &Observable) -> Result<(bool, String), Error> {
    let ns = [50usize, 100, 200, 400];
    let sups: Vec<f64> = ns.iter().map(|&n| setup.large_frequency_sup(s, n)).collect::<Result<_, _>>()?;
    let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
    let slopes: Vec<f64> =
        (0..3).map(|i| (sups[i + 1] / sups[i]).ln() / (ns[i + 1] as f64 / ns[i] as f64).ln()).collect();
    let steepening = slopes.windows(2).all(|w| w[1] < w[0]);
    let scan = setup.scan();
    let radius_ok = scan.max_radius <= 1.0 - 1e-4;
    let detail = format!(
        "max radius {:.6} at xi = {:.3}; sups {:?}; slopes {:?}",
        scan.max_radius,
        scan.argmax_xi,
        sups.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
        slopes.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
    );
    Ok((radius_ok && decreasing && steepening, detail))
}

fn aperiodicity() -> Result<Outcome, Error> {
    let exp = load("r1")?;
    let (_, _, setup) = setup(&exp)?;
    let (r1_ok, detail) = decay_profile(&setup, &exp.s)?;
    let lattice = load("lattice")?;
    let (f, g) = one_sided(&lattice)?;
    let lattice_fails = matches!(
        SpectralSetup::new(&g, &f, &lattice.config.quadrature),
        Err(ref e) if matches!(e.root(), Error::ScanFailed { .. })
    );
    Ok(Outcome::new(r1_ok && lattice_fails, format!("r1: {detail}; lattice fails the scan: {lattice_fails}")))
}

fn determinism() -> Result<Outcome, Error> {
    let bin = env!("CARGO_BIN_EXE_skewmix");
    let tmp = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let status =
            Command::new(bin).args(["--fixture", "r1", "--seed", "7", "--out"]).arg(&dir).arg("thm-b").status()?;
        if !status.success() {
            return Ok(Outcome::new(false, format!("thm-b exited with {status}")));
        }
        outputs.push(std::fs::read(dir.join("correlations.csv"))?);
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    Ok(Outcome::new(same, format!("two thm-b runs on r1, {} bytes each, identical: {same}", outputs[0].len())))
}

fn supplementary(name: &str) -> Result<(), Error> {
    let exp = load(name)?;
    let rep = run_one_sided(&exp)?;
    report(&format!("supplementary {name} krickeberg"), &krickeberg(&rep));
    report(&format!("supplementary {name} expansion"), &expansion(&rep));
    let (_, _, setup) = setup(&exp)?;
    let (ok, detail) = decay_profile(&setup, &exp.s)?;
    report(&format!("supplementary {name} decay"), &Outcome::new(ok, detail));
    Ok(())
}

fn main() {
    let mut results = Vec::new();
    results.push(run("criterion 1 oracle equivalence", oracle_equivalence));
    results.push(run("criterion 2 drift variance", drift_variance));
    results.push(run("criterion 3 eigenvalue parabola", parabola));
    let r1 = OnceCell::new();
    let r1_report = || {
        r1.get_or_init(|| load("r1").and_then(|exp| run_one_sided(&exp)).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::InvalidInput(e.clone()))
    };
    results.push(run("criterion 4 krickeberg limit", || r1_report().map(krickeberg)));
    results.push(run("criterion 5 two-term expansion", || r1_report().map(expansion)));
    results.push(run("criterion 6 expansion order of accuracy", engine_order));
    results.push(run("criterion 7 cohomological reduction", reduction));
    results.push(run("criterion 8 approximating sequence", approximating));
    results.push(run("criterion 9 aperiodicity and rapid decay", aperiodicity));
    results.push(run("criterion 10 determinism", determinism));
    for name in ["r2", "r3"] {
        if let Err(e) = supplementary(name) {
            report(&format!("supplementary {name}"), &Outcome::error(e));
        }
    }
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
