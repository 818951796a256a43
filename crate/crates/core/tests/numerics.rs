use std::f64::consts::{PI, SQRT_2};

use approx::assert_relative_eq;
use proptest::prelude::*;

use skewmix::asymptotics::{expand, gamma_half_integer, TaylorJet};
use skewmix::config::{fixture, Experiment};
use skewmix::correlations::{loglog_slope, QuadratureSpec, ScanPolicy, SpectralSetup};
use skewmix::fiber::FiberSum;
use skewmix::gibbs::{integrate, GibbsData};
use skewmix::oracle::{mc_correlation, oracle_correlation, oracle_correlation_ordered};
use skewmix::quadrature::integrate_real;
use skewmix::sft::{CylinderFunction, SubshiftSpec, C64};
use skewmix::twisted::green_kubo;
use skewmix::window::Window;
use skewmix::Error;

fn load(name: &str) -> Experiment {
    fixture(name).unwrap().build().unwrap()
}

fn one_sided(exp: &Experiment) -> (CylinderFunction, GibbsData) {
    let f = exp.f.to_cylinder(&exp.spec).unwrap();
    let g = exp.gibbs(&f, 1).unwrap();
    (f, g)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `⟨r∘Fⁿ, s⟩` for unit Gaussians over `f = ±1` with fair coins:
/// `√π·E[exp(−S_n²/4)]`.
fn lattice_correlation(n: usize) -> f64 {
    let mean: f64 = (0..=n)
        .map(|k| {
            let s = 2.0 * k as f64 - n as f64;
            binomial(n, k) * 0.5f64.powi(n as i32) * (-s * s / 4.0).exp()
        })
        .sum();
    PI.sqrt() * mean
}

#[test]
fn lattice_oracle_and_spectral_match_binomial_sum() {
    let exp = load("lattice");
    let (f, g) = one_sided(&exp);
    let quad = QuadratureSpec { scan_policy: ScanPolicy::Report, ..QuadratureSpec::default() };
    let setup = SpectralSetup::new(&g, &f, &quad).unwrap();
    assert!(!setup.scan().pass);
    let budget = exp.config.budget();
    for n in 0..=12 {
        let exact = lattice_correlation(n);
        let oracle = oracle_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget).unwrap();
        assert!((oracle - exact).norm() <= 1e-14, "oracle n={n}: {oracle} vs {exact}");
        if n > 0 {
            let spectral = setup.correlation(&exp.r, &exp.s, n).unwrap().value;
            assert!((spectral - exact).norm() <= 1e-12, "spectral n={n}: {spectral} vs {exact}");
        }
    }
}

#[test]
fn scan_enforcement_rejects_lattice_drift() {
    let exp = load("lattice");
    let (f, g) = one_sided(&exp);
    let err = SpectralSetup::new(&g, &f, &exp.config.quadrature).unwrap_err();
    assert!(matches!(err.root(), Error::ScanFailed { .. }), "{err}");
}

#[test]
fn drift_variance_closed_forms() {
    for (name, omega) in [("lattice", 0.5), ("r3", 1.5), ("r1", (3.0 + 2.0 * SQRT_2) / 2.0)] {
        let exp = load(name);
        let (f, g) = one_sided(&exp);
        assert_relative_eq!(green_kubo(&g, &f).unwrap(), omega, max_relative = 1e-13);
    }
}

#[test]
fn parry_measure_of_golden_mean() {
    let spec = SubshiftSpec::golden_mean(0.5).unwrap();
    let zero = CylinderFunction::from_real(&spec, 1, &[0.0, 0.0]).unwrap();
    let g = GibbsData::new(&spec, &zero, 2).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert_relative_eq!(g.cylinder_measure(&[1]), 1.0 / (1.0 + phi * phi), max_relative = 1e-13);
    assert_relative_eq!(g.leading_eigenvalue(), phi, max_relative = 1e-13);
    assert_eq!(g.cylinder_measure(&[1, 1]), 0.0);
}

#[test]
fn oracle_is_independent_of_visit_order() {
    let exp = load("r2");
    let (_, g) = one_sided(&exp);
    let budget = exp.config.budget();
    for n in 1..=6 {
        let a = oracle_correlation_ordered(&g, &exp.f, &exp.r, &exp.s, n, &budget, false).unwrap();
        let b = oracle_correlation_ordered(&g, &exp.f, &exp.r, &exp.s, n, &budget, true).unwrap();
        assert!((a - b).norm() <= 1e-15 * a.norm().max(1.0), "n={n}");
    }
}

#[test]
fn oracle_respects_word_budget() {
    let exp = load("r2");
    let (_, g) = one_sided(&exp);
    let budget = skewmix::oracle::OracleBudget { max_words: 100, ..exp.config.budget() };
    let err = oracle_correlation(&g, &exp.f, &exp.r, &exp.s, 20, &budget).unwrap_err();
    assert!(matches!(err, Error::Budget { .. }));
}

#[test]
fn monte_carlo_agrees_with_oracle_and_is_seeded() {
    let exp = load("r2");
    let (_, g) = one_sided(&exp);
    let budget = skewmix::oracle::OracleBudget { mc_samples: 200_000, rng_seed: 11, ..exp.config.budget() };
    let n = 5;
    let exact = oracle_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget).unwrap();
    let a = mc_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget).unwrap();
    let b = mc_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget).unwrap();
    assert_eq!(a, b);
    assert!(a.stderr > 0.0);
    assert!((a.estimate - exact).norm() <= 3.0 * a.stderr, "{} vs {exact} (se {})", a.estimate, a.stderr);
}

#[test]
fn spectral_correlation_is_bitwise_repeatable() {
    let exp = load("r3");
    let (f, g) = one_sided(&exp);
    let setup = SpectralSetup::new(&g, &f, &exp.config.quadrature).unwrap();
    let a = setup.correlation(&exp.r, &exp.s, 40).unwrap().value;
    let b = setup.correlation(&exp.r, &exp.s, 40).unwrap().value;
    assert_eq!(a.re.to_bits(), b.re.to_bits());
    assert_eq!(a.im.to_bits(), b.im.to_bits());
}

#[test]
fn expansion_rejects_bad_jets() {
    let v = TaylorJet::from_real(&[1.0; 13]);
    assert!(matches!(expand(&TaylorJet::gaussian(1.0, 6), &v, 2), Err(Error::JetOrder { have: 6, need: 10 })));
    let mut shifted = TaylorJet::gaussian(1.0, 12);
    shifted.coefficients[0] = C64::new(2.0, 0.0);
    assert!(matches!(expand(&shifted, &v, 1), Err(Error::Hypothesis(_))));
    let mut drifting = TaylorJet::gaussian(1.0, 12);
    drifting.coefficients[1] = C64::new(0.1, 0.0);
    assert!(matches!(expand(&drifting, &v, 1), Err(Error::Hypothesis(_))));
    assert!(expand(&TaylorJet::gaussian(1.0, 12), &v, 0).is_err());
}

#[test]
fn gaussian_expansion_has_known_coefficients() {
    // ∫ e^{−nωt²} e^{2t} dt = √(π/(nω))·e^{1/(nω)}.
    let omega = 0.7;
    let fact = |j: usize| (1..=j).map(|i| i as f64).product::<f64>();
    let v = TaylorJet::from_real(&(0..=16).map(|j| 2f64.powi(j as i32) / fact(j)).collect::<Vec<_>>());
    let res = expand(&TaylorJet::gaussian(omega, 16), &v, 5).unwrap();
    for m in 0..5 {
        let expected = PI.sqrt() / fact(m) * omega.powf(-(m as f64) - 0.5);
        assert_relative_eq!(res.c(2 * m + 1).re, expected, max_relative = 1e-13);
        assert!(res.c(2 * m + 1).im.abs() < 1e-15);
    }
}

#[test]
fn gamma_at_half_integers() {
    assert_relative_eq!(gamma_half_integer(0), PI.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(gamma_half_integer(3), 15.0 * PI.sqrt() / 8.0, max_relative = 1e-15);
}

#[test]
fn loglog_slope_recovers_power() {
    let xs = [1.0, 10.0, 100.0, 1000.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.25)).collect();
    assert_relative_eq!(loglog_slope(&xs, &ys), -1.25, max_relative = 1e-12);
}

fn atom_strategy() -> impl Strategy<Value = FiberSum> {
    (0usize..6, -2.0f64..2.0, 0.5f64..2.0, -1.5f64..1.5, -1.5f64..1.5)
        .prop_map(|(index, center, width, re, im)| FiberSum::atom(C64::new(re, im), index, center, width))
}

fn quad_complex(f: impl Fn(f64) -> C64 + Sync, a: f64, b: f64) -> C64 {
    let re = integrate_real(|t| f(t).re, a, b, 1e-13).unwrap();
    let im = integrate_real(|t| f(t).im, a, b, 1e-13).unwrap();
    C64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fiber_integral_and_transform_match_quadrature(fib in atom_strategy(), xi in -3.0f64..3.0) {
        let (lo, hi) = (-40.0, 40.0);
        let integral = quad_complex(|t| fib.eval(t), lo, hi);
        prop_assert!((integral - fib.integral()).norm() <= 1e-10 * (1.0 + integral.norm()));
        let transform = quad_complex(|t| fib.eval(t) * C64::from_polar(1.0, -t * xi), lo, hi);
        prop_assert!((transform - fib.fourier(xi)).norm() <= 1e-10 * (1.0 + transform.norm()));
    }

    #[test]
    fn cross_correlation_matches_quadrature(x in atom_strategy(), y in atom_strategy(), a in -3.0f64..3.0) {
        let direct = quad_complex(|t| x.eval(t + a) * y.eval(t).conj(), -40.0, 40.0);
        let closed = x.cross_correlation(&y, a);
        prop_assert!((direct - closed).norm() <= 1e-10 * (1.0 + direct.norm()));
    }

    #[test]
    fn gibbs_measure_is_shift_invariant(raw in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let spec = SubshiftSpec::full_shift(3, 0.5).unwrap();
        let u = CylinderFunction::from_real(&spec, 2, &raw).unwrap();
        let g = GibbsData::new(&spec, &u, 2).unwrap();
        let total: f64 = g.measures().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-13);
        for w in spec.admissible_words(2) {
            let tail: f64 = (0..3u8).map(|a| g.cylinder_measure(&[a, w.symbols()[0], w.symbols()[1]])).sum();
            prop_assert!((tail - g.cylinder_measure(w.symbols())).abs() <= 1e-13);
        }
        // The normalized potential has transfer operator fixing constants.
        let one = CylinderFunction::constant(&spec, 2, C64::new(1.0, 0.0));
        let image = g.transfer(&one).unwrap();
        prop_assert!(image.values().iter().all(|v| (v - C64::new(1.0, 0.0)).norm() <= 1e-12));
        prop_assert!(integrate(&g, &one).re - 1.0 <= 1e-13);
    }

    #[test]
    fn skew_composition_preserves_the_infinite_measure(n in 0usize..5, shift in -1.0f64..1.0) {
        let exp = load("r2");
        let s = exp.s.conjugate(&exp.spec, &Window::constant(C64::new(shift, 0.0))).unwrap();
        let composed = s.compose_skew(&exp.spec, &exp.f, n).unwrap();
        let deep = GibbsData::new(&exp.spec, &exp.potential, composed.future().max(1)).unwrap();
        let a = s.nu_integral(&deep).unwrap();
        let b = composed.nu_integral(&deep).unwrap();
        prop_assert!((a - b).norm() <= 1e-13);
        prop_assert!((a.re - (2.0 * PI).sqrt()).abs() <= 1e-13);
    }
}
