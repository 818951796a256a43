use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use skewmix::asymptotics::{expand, TaylorJet};
use skewmix::config::{fixture, Experiment, ExperimentConfig, FIXTURE_NAMES};
use skewmix::correlations::{expansion_coefficients, mc_series, oracle_series, spectral_series, CorrelationSeries};
use skewmix::pipeline::{
    emit_csv, forward_shifted, reduce, render_csv, run_one_sided, run_two_sided, spectral_setup, to_versioned_json,
    verify_reduction, write_one_sided, write_two_sided,
};
use skewmix::twisted::{aperiodicity_scan, drift_variance, spectrum};
use skewmix::{Error, Result, C64};

#[derive(Parser)]
#[command(name = "skewmix", version, about = "Mixing-rate experiments for skew products over subshifts of finite type")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, conflicts_with = "fixture")]
    config: Option<PathBuf>,
    /// Built-in fixture to use instead of a configuration file.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Output directory. Without it results go to standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random choices; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Spectral,
    Oracle,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized potential and Gibbs measure.
    Gibbs,
    /// Leading eigenvalue of the twisted operator over a frequency grid.
    Spectrum {
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        xi_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        xi_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Aperiodicity scan of the spectral radius over [κ, Ξ].
    Scan,
    /// Expansion coefficients c₁, c₃, … of the correlations.
    Expand {
        #[arg(long)]
        k: Option<usize>,
        /// Expand user-supplied Taylor jets `{"g": [...], "v": [...]}` instead
        /// of the configured experiment. Entries are `[re, im]` pairs.
        #[arg(long)]
        jets: Option<PathBuf>,
    },
    /// Correlations for a list of n.
    Correlate {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value = "spectral")]
        method: MethodArg,
    },
    /// Exact word-sum correlations for n = 1..=N.
    Oracle {
        #[arg(long)]
        n: usize,
    },
    /// Split a two-sided f into a one-sided part and a coboundary.
    Reduce,
    /// Check that the reduction preserves correlations for n ≤ N.
    VerifyReduction {
        #[arg(long)]
        n: Option<usize>,
    },
    /// One-sided experiment with expansion coefficients and residual slopes.
    ThmB,
    /// Two-sided experiment: reduction followed by the one-sided experiment.
    ThmA,
}

fn load(common: &Common) -> Result<Experiment> {
    let mut cfg = match (&common.config, &common.fixture) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => fixture(name)?,
        (None, None) => {
            return Err(Error::InvalidInput(format!(
                "pass --config PATH or --fixture NAME (one of {})",
                FIXTURE_NAMES.join(", ")
            )))
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    cfg.build()
}

fn out_dir(common: &Common, exp: &Experiment) -> Option<PathBuf> {
    common.out.clone().or_else(|| exp.config.output.dir.as_ref().map(PathBuf::from))
}

/// Write `text` to `dir/file`, or print it when there is no directory.
fn emit(dir: Option<&Path>, file: &str, text: &str) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            std::fs::write(d.join(file), text)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(dir: Option<&Path>, file: &str, body: &T) -> Result<()> {
    emit(dir, file, &to_versioned_json(body)?)
}

#[derive(Serialize)]
struct GibbsSummary {
    depth: usize,
    leading_eigenvalue: f64,
    words: Vec<String>,
    measures: Vec<f64>,
    normalized_potential: Vec<f64>,
}

#[derive(Serialize)]
struct SpectrumMeta {
    omega: f64,
    kappa: f64,
}

fn one_sided(exp: &Experiment) -> Result<skewmix::sft::CylinderFunction> {
    forward_shifted(exp, &exp.f)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JetsInput {
    g: Vec<C64>,
    v: Vec<C64>,
}

fn expand_jets(common: &Common, path: &Path, k: usize) -> Result<()> {
    let input: JetsInput = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let result = expand(&TaylorJet::new(input.g), &TaylorJet::new(input.v), k)?;
    emit_json(common.out.as_deref(), "expansion.json", &result)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Expand { jets: Some(path), k } = &cli.command {
        return expand_jets(&cli.common, path, k.unwrap_or(2));
    }
    let exp = load(&cli.common)?;
    let dir = out_dir(&cli.common, &exp);
    let dir = dir.as_deref();
    let obs_depth = exp.r.future().max(exp.s.future());
    match cli.command {
        Command::Gibbs => {
            let f = one_sided(&exp)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let summary = GibbsSummary {
                depth: g.depth(),
                leading_eigenvalue: g.leading_eigenvalue(),
                words: g.words().iter().map(|w| w.to_string()).collect(),
                measures: g.measures().to_vec(),
                normalized_potential: g.normalized_potential().real_values(),
            };
            emit_json(dir, "gibbs.json", &summary)
        }
        Command::Spectrum { xi_min, xi_max, points } => {
            let f = one_sided(&exp)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let drift = drift_variance(&g, &f)?;
            let omega = drift.omega();
            let rows = spectrum(&g, &f, xi_min, xi_max, points)?;
            let mut csv = String::from("xi,lambda_re,lambda_im,abs_lambda,subleading_radius,parabola_residual\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    r.xi,
                    r.lambda.re,
                    r.lambda.im,
                    r.lambda.norm(),
                    r.subleading_radius,
                    (r.lambda - (1.0 - omega * r.xi * r.xi)).norm()
                ));
            }
            emit(dir, "spectrum.csv", &csv)?;
            if dir.is_some() {
                emit_json(dir, "spectrum.json", &SpectrumMeta { omega, kappa: drift.kappa })?;
            }
            Ok(())
        }
        Command::Scan => {
            let f = one_sided(&exp)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let drift = drift_variance(&g, &f)?;
            let q = &exp.config.quadrature;
            let report = aperiodicity_scan(&g, &f, drift.kappa, q.xi_max, q.scan_points)?;
            emit_json(dir, "scan.json", &report)
        }
        Command::Expand { k, .. } => {
            let f = exp.f.to_cylinder(&exp.spec)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let setup = spectral_setup(&exp, &g, &f)?;
            let report = expansion_coefficients(&setup, &exp.r, &exp.s, k.unwrap_or(exp.config.expansion_order))?;
            emit_json(dir, "expansion.json", &report)
        }
        Command::Correlate { n_list, method } => {
            let f = exp.f.to_cylinder(&exp.spec)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let ns = n_list.unwrap_or_else(|| exp.config.n_list.clone());
            let budget = exp.config.budget();
            let series: CorrelationSeries = match method {
                MethodArg::Spectral => spectral_series(&spectral_setup(&exp, &g, &f)?, &exp.r, &exp.s, &ns)?,
                MethodArg::Oracle => {
                    oracle_series(&g, &f, &exp.r, &exp.s, &ns, drift_variance(&g, &f)?.omega(), &budget)?
                }
                MethodArg::Mc => mc_series(&g, &f, &exp.r, &exp.s, &ns, drift_variance(&g, &f)?.omega(), &budget)?,
            };
            emit_series(dir, &series)
        }
        Command::Oracle { n } => {
            let f = exp.f.to_cylinder(&exp.spec)?;
            let g = exp.gibbs(&f, obs_depth)?;
            let ns: Vec<usize> = (1..=n).collect();
            let omega = drift_variance(&g, &f)?.omega();
            emit_series(dir, &oracle_series(&g, &f, &exp.r, &exp.s, &ns, omega, &exp.config.budget())?)
        }
        Command::Reduce => emit_json(dir, "reduction.json", &reduce(&exp)?),
        Command::VerifyReduction { n } => {
            let red = reduce(&exp)?;
            let rows = verify_reduction(&exp, &red.reduction, n.unwrap_or(exp.config.verify_n))?;
            emit_json(dir, "invariance.json", &rows)
        }
        Command::ThmB => {
            let report = run_one_sided(&exp)?;
            match dir {
                Some(d) => write_one_sided(d, &report),
                None => emit(None, "", &render_csv(&report.series, Some(&report.expansion))),
            }
        }
        Command::ThmA => {
            let report = run_two_sided(&exp)?;
            match dir {
                Some(d) => write_two_sided(d, &report),
                None => emit(None, "", &render_csv(&report.one_sided.series, Some(&report.one_sided.expansion))),
            }
        }
    }
}

fn emit_series(dir: Option<&Path>, series: &CorrelationSeries) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            emit_csv(series, None, &d.join("correlations.csv"))
        }
        None => emit(None, "", &render_csv(series, None)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
