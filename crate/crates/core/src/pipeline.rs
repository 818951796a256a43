//! End-to-end experiments and their output files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohomology::{
    approximating_sequence, cohomology_residual, conjugate_observable, reduce_cocycle, AnchorChoice, Reduction,
};
use crate::config::{Experiment, KappaPolicy};
use crate::correlations::{
    expansion_coefficients, krickeberg_check, krickeberg_limit, loglog_slope, spectral_series, CorrelationSeries,
    ExpansionReport, KrickebergReport, SpectralSetup,
};
use crate::error::{Error, Result, StageExt};
use crate::gibbs::GibbsData;
use crate::observables::Observable;
use crate::oracle::oracle_correlation;
use crate::sft::{CylinderFunction, C64};
use crate::twisted::{green_kubo, twisted_data, DriftVariance, ScanReport};
use crate::window::{TwoSidedFunction, Window};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest residual slope accepted for the two-term expansion.
pub const TWO_TERM_SLOPE: f64 = -2.2;

/// A JSON document with the schema version at the top level.
#[derive(Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_versioned_json<T: Serialize>(body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    std::fs::write(path, to_versioned_json(body)?)?;
    Ok(())
}

/// Header of every correlation CSV.
pub const CSV_HEADER: &str = "n,method,corr_re,corr_im,scaled_re,residual_thmB";

/// Render a series. `scaled_re` is `2√(πωn)·Re corr(n)` and `residual_thmB`
/// is `|corr(n) − c₁n^{−1/2} − c₃n^{−3/2}|` when coefficients are given.
pub fn render_csv(series: &CorrelationSeries, expansion: Option<&ExpansionReport>) -> String {
    let omega = series.metadata.omega;
    let mut out = String::with_capacity(64 * (series.n_values.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (&n, v) in series.n_values.iter().zip(&series.values) {
        let nf = n as f64;
        let scaled = 2.0 * (std::f64::consts::PI * omega * nf).sqrt() * v.re;
        let residual = expansion.map_or(f64::NAN, |e| (v - e.partial_sum(nf, 2)).norm());
        writeln!(out, "{n},{},{:.16e},{:.16e},{:.16e},{:.16e}", series.method.as_str(), v.re, v.im, scaled, residual)
            .expect("writing to a string");
    }
    out
}

pub fn emit_csv(series: &CorrelationSeries, expansion: Option<&ExpansionReport>, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(series, expansion))?;
    Ok(())
}

/// Everything produced by the one-sided experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OneSidedReport {
    pub name: String,
    pub drift: DriftVariance,
    pub scan: ScanReport,
    pub series: CorrelationSeries,
    pub expansion: ExpansionReport,
    pub krickeberg: KrickebergReport,
    /// `|corr(n) − c₁n^{−1/2} − c₃n^{−3/2}|` per `n`.
    pub two_term_residuals: Vec<f64>,
    pub two_term_slope: f64,
    pub two_term_pass: bool,
    /// `|c₁ − closed form| / |closed form|`.
    pub c1_relative_error: f64,
}

/// Spectral setup honouring the configured κ policy.
pub fn spectral_setup(exp: &Experiment, g: &GibbsData, f: &CylinderFunction) -> Result<SpectralSetup> {
    let setup = SpectralSetup::new(g, f, &exp.config.quadrature)?;
    match exp.config.kappa {
        KappaPolicy::Auto => Ok(setup),
        KappaPolicy::Fixed { value } => {
            for xi in [-value, value] {
                twisted_data(setup.operator(), xi, None).stage("kappa")?;
            }
            Ok(setup.with_kappa(value))
        }
    }
}

fn one_sided_core(exp: &Experiment, f: &CylinderFunction, r: &Observable, s: &Observable) -> Result<OneSidedReport> {
    let cfg = &exp.config;
    let g = exp.gibbs(f, r.future().max(s.future())).stage("gibbs")?;
    let setup = spectral_setup(exp, &g, f)?;
    let series = spectral_series(&setup, r, s, &cfg.n_list).stage("correlations")?;
    let expansion = expansion_coefficients(&setup, r, s, cfg.expansion_order.max(2)).stage("expansion")?;
    let limit = krickeberg_limit(&g, r, s)?;
    let krickeberg = krickeberg_check(&series, limit);
    let xs: Vec<f64> = series.n_values.iter().map(|&n| n as f64).collect();
    let two_term_residuals: Vec<f64> =
        xs.iter().zip(&series.values).map(|(&n, v)| (v - expansion.partial_sum(n, 2)).norm()).collect();
    let two_term_slope = loglog_slope(&xs, &two_term_residuals);
    let closed = expansion.c1_closed_form;
    let c1_relative_error = (expansion.c(1) - closed).norm() / closed.norm().max(f64::MIN_POSITIVE);
    Ok(OneSidedReport {
        name: cfg.name.clone(),
        drift: setup.drift().clone(),
        scan: setup.scan().clone(),
        series,
        expansion,
        krickeberg,
        two_term_residuals,
        two_term_slope,
        two_term_pass: two_term_slope <= TWO_TERM_SLOPE,
        c1_relative_error,
    })
}

/// Full one-sided run: spectral correlations on the configured grid, their
/// expansion coefficients and the fitted residual slopes.
pub fn run_one_sided(exp: &Experiment) -> Result<OneSidedReport> {
    if exp.f.past() != 0 {
        return Err(
            Error::invalid("this experiment needs a one-sided f; use the two-sided pipeline").at_stage("config")
        );
    }
    let f = exp.f.to_cylinder(&exp.spec)?;
    one_sided_core(exp, &f, &exp.r, &exp.s)
}

/// One row of the conjugation-invariance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub n: usize,
    pub two_sided: C64,
    pub reduced: C64,
    pub difference: f64,
}

/// Conjugation-invariance rows and their largest difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub max_difference: f64,
}

/// The reduction together with its checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionReport {
    pub reduction: Reduction,
    /// `max |f − f̃ − h + h∘σ|`.
    pub cohomology_residual: f64,
    pub omega_f: f64,
    pub omega_f_tilde: f64,
}

/// `f` composed with enough shifts to become one-sided. It has the same
/// drift variance as `f`.
pub fn forward_shifted(exp: &Experiment, f: &TwoSidedFunction) -> Result<CylinderFunction> {
    f.compose_shift(&exp.spec, f.past()).to_cylinder(&exp.spec)
}

pub fn reduce(exp: &Experiment) -> Result<ReductionReport> {
    let anchor = AnchorChoice::lexicographic(&exp.spec)?;
    let reduction = reduce_cocycle(&exp.spec, &exp.f, &anchor).stage("reduce")?;
    let residual = cohomology_residual(&exp.spec, &exp.f, &reduction);
    let shifted = forward_shifted(exp, &exp.f)?;
    let g = exp.gibbs(&shifted, 1)?;
    let g_tilde = exp.gibbs(&reduction.f_tilde, 1)?;
    Ok(ReductionReport {
        omega_f: green_kubo(&g, &shifted)?,
        omega_f_tilde: green_kubo(&g_tilde, &reduction.f_tilde)?,
        reduction,
        cohomology_residual: residual,
    })
}

/// `⟨r∘Fⁿ, s⟩` for the two-sided data against `⟨r̃∘F̃ⁿ, s̃⟩` for the reduced
/// data, both by exact word sums, for `n = 0..=max_n`.
pub fn verify_reduction(exp: &Experiment, red: &Reduction, max_n: usize) -> Result<InvarianceReport> {
    let spec = &exp.spec;
    let rt = conjugate_observable(spec, &exp.r, &red.h)?;
    let st = conjugate_observable(spec, &exp.s, &red.h)?;
    let ft = Window::from_cylinder(&red.f_tilde);
    let budget = exp.config.budget();
    let g = exp.gibbs(&red.f_tilde, 1)?;
    let rows: Vec<InvarianceRow> = (0..=max_n)
        .map(|n| {
            let two_sided = oracle_correlation(&g, &exp.f, &exp.r, &exp.s, n, &budget)?;
            let reduced = oracle_correlation(&g, &ft, &rt, &st, n, &budget)?;
            Ok(InvarianceRow { n, two_sided, reduced, difference: (two_sided - reduced).norm() })
        })
        .collect::<Result<_>>()?;
    let max_difference = rows.iter().map(|r| r.difference).fold(0.0, f64::max);
    Ok(InvarianceReport { rows, max_difference })
}

/// Output of the two-sided experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoSidedReport {
    pub reduction: ReductionReport,
    pub invariance: InvarianceReport,
    /// Number of steps `m` used to make the conjugated observables one-sided.
    pub shift: usize,
    pub one_sided: OneSidedReport,
}

/// Reduce `f`, conjugate the observables, make them one-sided and run the
/// one-sided experiment on the result.
///
/// With `m` at least the past depth of `s̃` the correction `v_m` vanishes, so
/// `s_m = s̃∘F̃^m` and `⟨r̃∘F̃ⁿ, s̃⟩ = ⟨(r̃∘F̃^m)∘F̃ⁿ, s_m⟩` exactly.
pub fn run_two_sided(exp: &Experiment) -> Result<TwoSidedReport> {
    let spec = &exp.spec;
    let reduction = reduce(exp)?;
    let red = &reduction.reduction;
    let invariance = verify_reduction(exp, red, exp.config.verify_n).stage("verify-reduction")?;
    let anchor = AnchorChoice::lexicographic(spec)?;
    let rt = conjugate_observable(spec, &exp.r, &red.h).stage("conjugate")?;
    let st = conjugate_observable(spec, &exp.s, &red.h).stage("conjugate")?;
    let m = rt.past().max(st.past());
    let ft = Window::from_cylinder(&red.f_tilde);
    let rm = rt.compose_skew(spec, &ft, m)?.compress(spec, crate::cohomology::PAST_TOL)?;
    let sm = approximating_sequence(spec, &st, &red.f_tilde, m, &anchor).stage("approximating-sequence")?;
    let one_sided = one_sided_core(exp, &red.f_tilde, &rm, &sm)?;
    Ok(TwoSidedReport { reduction, invariance, shift: m, one_sided })
}

/// Write the CSV and JSON files of a one-sided run into `dir`.
pub fn write_one_sided(dir: &Path, report: &OneSidedReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    emit_csv(&report.series, Some(&report.expansion), &dir.join("correlations.csv"))?;
    write_json(&dir.join("expansion.json"), &report.expansion)?;
    write_json(&dir.join("report.json"), report)
}

pub fn write_two_sided(dir: &Path, report: &TwoSidedReport) -> Result<()> {
    write_one_sided(dir, &report.one_sided)?;
    write_json(&dir.join("reduction.json"), &report.reduction)?;
    write_json(&dir.join("invariance.json"), &report.invariance)
}
