//! Experiment configuration and the built-in fixtures.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlations::{QuadratureSpec, ScanPolicy};
use crate::error::{Error, Result};
use crate::fiber::FiberBasisFn;
use crate::gibbs::GibbsData;
use crate::observables::{Observable, ObservableSpec, TermSpec};
use crate::oracle::OracleBudget;
use crate::sft::{CylinderFunction, SubshiftSpec, C64};
use crate::window::{TwoSidedFunction, Window};

/// A real function of the coordinates `−past..future`, tabulated on
/// admissible words in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default)]
    pub past: usize,
    pub future: usize,
    pub values: Vec<f64>,
}

impl FunctionSpec {
    pub fn one_sided(depth: usize, values: Vec<f64>) -> Self {
        FunctionSpec { past: 0, future: depth, values }
    }

    pub fn window(&self, spec: &SubshiftSpec) -> Result<TwoSidedFunction> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("function values must be finite"));
        }
        Window::new(spec, self.past, self.future, self.values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }
}

/// How the perturbative radius κ is chosen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum KappaPolicy {
    /// Halve from `0.5/√ω` until the gap and curvature checks pass.
    #[default]
    Auto,
    /// Use the given value after checking the gap at `±value`.
    Fixed { value: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for result files. The `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn default_order() -> usize {
    2
}

fn default_verify_n() -> usize {
    8
}

/// A complete, self-contained experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub subshift: SubshiftSpec,
    pub potential: FunctionSpec,
    pub f: FunctionSpec,
    pub r: ObservableSpec,
    pub s: ObservableSpec,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub kappa: KappaPolicy,
    /// Number of expansion coefficients `c₁, c₃, …` to compute.
    #[serde(default = "default_order")]
    pub expansion_order: usize,
    /// Largest `n` in the conjugation-invariance check of the reduction.
    #[serde(default = "default_verify_n")]
    pub verify_n: usize,
    #[serde(default)]
    pub oracle: OracleBudget,
    #[serde(default)]
    pub output: OutputSpec,
    /// Seed for every random choice; overrides `oracle.rng_seed`.
    #[serde(default)]
    pub seed: u64,
}

/// Configuration after validation, with every table built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: SubshiftSpec,
    pub potential: CylinderFunction,
    pub f: TwoSidedFunction,
    pub r: Observable,
    pub s: Observable,
}

/// Working depth for a potential of depth `du`, a drift of depth `df` and
/// observables of depth up to `dobs`.
pub fn working_depth(du: usize, df: usize, dobs: usize) -> usize {
    du.saturating_sub(1).max(df.saturating_sub(1)).max(dobs).max(1)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list must not be empty"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_list must be strictly increasing"));
        }
        if self.potential.past != 0 {
            return Err(Error::invalid("the potential must depend on future coordinates only"));
        }
        if self.expansion_order == 0 || self.expansion_order > 8 {
            return Err(Error::invalid("expansion_order must lie in 1..=8"));
        }
        if let KappaPolicy::Fixed { value } = self.kappa {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid("fixed kappa must be positive"));
            }
        }
        self.build().map(|_| ())
    }

    /// Build the tables, checking that every depth matches the subshift.
    pub fn build(&self) -> Result<Experiment> {
        let spec = self.subshift.clone();
        let potential = self.potential.window(&spec)?.to_cylinder(&spec)?;
        let f = self.f.window(&spec)?;
        let r = Observable::from_spec(&spec, &self.r)?;
        let s = Observable::from_spec(&spec, &self.s)?;
        Ok(Experiment { config: self.clone(), spec, potential, f, r, s })
    }

    pub fn budget(&self) -> OracleBudget {
        OracleBudget { rng_seed: self.seed, ..self.oracle.clone() }
    }
}

impl Experiment {
    /// Gibbs data deep enough for the potential, the one-sided drift `f` and
    /// observables of depth `obs_depth`.
    pub fn gibbs(&self, f: &CylinderFunction, obs_depth: usize) -> Result<GibbsData> {
        GibbsData::new(&self.spec, &self.potential, working_depth(self.potential.depth(), f.depth(), obs_depth))
    }
}

/// `(1)·e^{−t²/2}`.
pub fn unit_gaussian_observable() -> ObservableSpec {
    ObservableSpec { terms: vec![TermSpec::constant(1.0, FiberBasisFn::gaussian(0.0, 1.0))] }
}

/// `n ∈ {10², 10^{2.5}, 10³, 10^{3.5}, 10⁴}`, rounded.
pub const DECADE_GRID: [usize; 5] = [100, 316, 1000, 3162, 10000];

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Names accepted by [`fixture`].
pub const FIXTURE_NAMES: [&str; 5] = ["r1", "r2", "r1-two-sided", "r3", "lattice"];

fn base(name: &str, subshift: SubshiftSpec, potential: FunctionSpec, f: FunctionSpec) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        subshift,
        potential,
        f,
        r: unit_gaussian_observable(),
        s: unit_gaussian_observable(),
        n_list: DECADE_GRID.to_vec(),
        quadrature: QuadratureSpec::default(),
        kappa: KappaPolicy::Auto,
        expansion_order: default_order(),
        verify_n: default_verify_n(),
        oracle: OracleBudget::default(),
        output: OutputSpec::default(),
        seed: 0,
    }
}

fn bernoulli() -> (SubshiftSpec, FunctionSpec) {
    (SubshiftSpec::full_shift(2, 0.5).expect("valid"), FunctionSpec::one_sided(0, vec![-(2f64.ln())]))
}

/// Values of `g(a) + √2·g(b)` on the words `ab`, with `g(0) = 1`, `g(1) = −1`.
fn r1_values() -> Vec<f64> {
    vec![1.0 + SQRT2, 1.0 - SQRT2, -1.0 + SQRT2, -1.0 - SQRT2]
}

/// A built-in experiment.
///
/// * `r1`: full 2-shift, Bernoulli(½, ½), `f = g(x₀) + √2·g(x₁)`.
/// * `r2`: golden-mean shift with its Parry measure and
///   `f = 1_{x₀=1} + √2·1_{x₀x₁x₂=000}` minus its mean.
/// * `r1-two-sided`: `f = g(x₋₁) + √2·g(x₀)`.
/// * `r3`: full 2-shift, Bernoulli, `f = g(x₀) + √2·g(x₀)g(x₁)`.
/// * `lattice`: full 2-shift, Bernoulli, `f = g(x₀)`.
///
/// `r1` and `r1-two-sided` are cohomologous to `(1+√2)·g(x₀)`, so the scan
/// policy is set to report rather than abort.
pub fn fixture(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "r1" => {
            let (spec, u) = bernoulli();
            let mut c = base(name, spec, u, FunctionSpec::one_sided(2, r1_values()));
            c.quadrature.scan_policy = ScanPolicy::Report;
            c
        }
        "r1-two-sided" => {
            let (spec, u) = bernoulli();
            let mut c = base(name, spec, u, FunctionSpec { past: 1, future: 1, values: r1_values() });
            c.quadrature.scan_policy = ScanPolicy::Report;
            c
        }
        "r2" => {
            let spec = SubshiftSpec::golden_mean(0.5).expect("valid");
            let u = CylinderFunction::from_real(&spec, 0, &[0.0])?;
            let phi = CylinderFunction::from_fn(&spec, 3, |w| {
                let s = w.symbols();
                let one = if s[0] == 1 { 1.0 } else { 0.0 };
                let zeros = if s == [0, 0, 0] { SQRT2 } else { 0.0 };
                C64::new(one + zeros, 0.0)
            });
            let g = GibbsData::new(&spec, &u, 2)?;
            let mean = crate::gibbs::integrate(&g, &phi).re;
            let values = phi.real_values().iter().map(|v| v - mean).collect();
            base(name, spec, FunctionSpec::one_sided(0, vec![0.0]), FunctionSpec::one_sided(3, values))
        }
        "r3" => {
            let (spec, u) = bernoulli();
            let values = vec![1.0 + SQRT2, 1.0 - SQRT2, -1.0 - SQRT2, -1.0 + SQRT2];
            base(name, spec, u, FunctionSpec::one_sided(2, values))
        }
        "lattice" => {
            let (spec, u) = bernoulli();
            base(name, spec, u, FunctionSpec::one_sided(1, vec![1.0, -1.0]))
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown fixture {other:?}; expected one of {}",
                FIXTURE_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate_and_round_trip() {
        for name in FIXTURE_NAMES {
            let cfg = fixture(name).unwrap();
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }
}
