//! The `rkconv` command line: one subcommand per study plus a kernel
//! self-check, all writing CSV or JSON tables.
//!
//! Exit codes: 0 on success, 2 when a flag fails validation (the message
//! names the flag), 1 when a run fails.

mod emit;

pub use emit::{emit, format_g, render, to_csv, to_json, Format};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiments::{
    convergence_scan, cross_term_probe, deep_size_scan, kernel_check, linear_grid, log_grid, optimize_deep_sizes,
    size_options, sparse_rf_experiment, sparsity_scan, Engine, ExperimentResult, ExperimentSpec, KernelCheckSpec,
    RandomFeatureSpec, ScanSpec, Topology,
};
use crate::kernelcore::Activation;
use crate::Error;

const REF_N: usize = 200;
const REF_D: usize = 100;
const REF_T: usize = 10;
const REF_M: usize = 2;
const REF_SPARSITY: f64 = 0.8;
const REF_LEAK: f64 = 0.5;
const REF_LAYERS: [usize; 2] = [200, 200];
const DEFAULT_LEVELS: [f64; 13] = [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0];

#[derive(Debug, Parser)]
#[command(name = "rkconv", version, about = "Finite-size convergence of reservoir computing to recurrent kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean metric over a (sigma_r, sigma_i) grid.
    Convergence(ConvergenceArgs),
    /// Metric against sparsity for several reservoir sizes, with thresholds.
    Sparsity(SparsityArgs),
    /// Deep reservoirs under a fixed budget of squared sizes.
    DeepSizes(DeepSizesArgs),
    /// Dense against sparse single-step random features.
    SparseRf(SparseRfArgs),
    /// Closed-form kernels against quadrature on random arguments.
    KernelCheck(KernelCheckArgs),
    /// Magnitude of the cross terms dropped by the leaky kernel.
    CrossTerms(CrossTermsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyKind {
    Vanilla,
    Sparse,
    Leaky,
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value = "erf")]
    pub activation: Activation,
    /// Monte-Carlo repetitions (study-specific default).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "RKCONV_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Reservoir size 200, input dimension 100, length 10, two inputs,
    /// sparsity 0.8, leak 0.5, two layers of 200 for unset flags.
    #[arg(long)]
    pub paper_defaults: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; defaults to json for a `.json` output and csv otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct Shape {
    /// Reservoir size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sequence length.
    #[arg(long)]
    pub t: Option<usize>,
    /// Number of input sequences.
    #[arg(long)]
    pub m: Option<usize>,
    /// Input dimension.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub shape: Shape,
    /// Inferred from --layers, --leak or --sparsity when absent.
    #[arg(long, value_enum)]
    pub topology: Option<TopologyKind>,
    /// Comma-separated reservoir scales; a default grid when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma_r: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma_i: Option<Vec<f64>>,
    /// Points per axis of the default grid over [0.04, 2].
    #[arg(long, default_value_t = 25)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value = "log")]
    pub grid_scale: GridScale,
    #[arg(long, allow_hyphen_values = true)]
    pub leak: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sparsity: Option<f64>,
    /// Comma-separated layer sizes of a deep reservoir.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct CrossTermsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub shape: Shape,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_r: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_i: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub leak: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SparsityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub shape: Shape,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_r: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_i: f64,
    /// Comma-separated reservoir sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,400,1000")]
    pub sizes: Vec<usize>,
    /// Comma-separated sparsity levels; must include 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct DeepSizesArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub shape: Shape,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_r: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma_i: f64,
    /// Sum of squared layer sizes; defaults to layers × 200².
    #[arg(long)]
    pub budget: Option<u64>,
    /// Comma-separated first-layer sizes of the scan.
    #[arg(long, value_delimiter = ',')]
    pub n1: Option<Vec<usize>>,
    /// Run Nelder-Mead over the layer sizes instead of the scan.
    #[arg(long)]
    pub optimize: bool,
    /// Number of layers for --optimize.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SparseRfArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated input dimensions.
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    pub dims: Vec<usize>,
    /// Comma-separated ascending feature counts; powers of two up to 2^13
    /// when absent.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub sparsity: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KernelCheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Random arguments per activation.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Quadrature order.
    #[arg(long, default_value_t = 100)]
    pub order: usize,
    /// Squared norms are drawn from (0, max-norm].
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub max_norm: f64,
    /// Largest accepted discrepancy.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

/// A fully validated run: what to compute and where to write it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub output_path: Option<PathBuf>,
    pub output_format: Format,
    pub workers: usize,
    /// Accepted discrepancy of a kernel check.
    pub tolerance: Option<f64>,
}

/// Failure of a CLI run with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn usage(flag: &str, reason: impl std::fmt::Display) -> CliError {
    CliError {
        code: 2,
        message: format!("invalid value for {flag}: {reason}"),
    }
}

fn flag_for(name: &str) -> String {
    format!("--{}", name.replace('_', "-"))
}

/// Maps a library error to an exit code, renaming parameters to flags.
fn classify(e: Error, rename: &[(&str, &str)]) -> CliError {
    match e {
        Error::InvalidParameter { name, reason } => {
            let flag = rename
                .iter()
                .find(|(from, _)| *from == name)
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| flag_for(&name));
            usage(&flag, reason)
        }
        Error::Infeasible(reason) => CliError {
            code: 2,
            message: format!("infeasible: {reason}"),
        },
        other => CliError {
            code: 1,
            message: other.to_string(),
        },
    }
}

fn format_for(common: &Common) -> Format {
    common.format.unwrap_or_else(|| match &common.output {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => Format::Json,
        _ => Format::Csv,
    })
}

fn check_output(path: Option<&Path>) -> Result<(), CliError> {
    let Some(p) = path else { return Ok(()) };
    if p.is_dir() {
        return Err(usage("--output", format!("{} is a directory", p.display())));
    }
    let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage("--output", format!("directory {} does not exist", parent.display())));
    }
    Ok(())
}

fn shape_spec(shape: &Shape, common: &Common, topology: Topology, default_reps: usize) -> ScanSpec {
    let mut spec = ScanSpec::reference_setting(topology, common.activation);
    spec.n = shape.n.unwrap_or(REF_N);
    spec.t = shape.t.unwrap_or(REF_T);
    spec.m = shape.m.unwrap_or(REF_M);
    spec.d = shape.d.unwrap_or(REF_D);
    spec.reps = common.reps.unwrap_or(default_reps);
    spec.master_seed = common.seed;
    spec
}

fn required<T: Copy>(value: Option<T>, fallback: T, defaults: bool, flag: &str, topology: &str) -> Result<T, CliError> {
    match value {
        Some(v) => Ok(v),
        None if defaults => Ok(fallback),
        None => Err(usage(flag, format!("the {topology} topology needs {flag} (or --paper-defaults)"))),
    }
}

fn convergence_topology(a: &ConvergenceArgs) -> Result<Topology, CliError> {
    let defaults = a.common.paper_defaults;
    let kind = match a.topology {
        Some(k) => k,
        None => {
            let given: Vec<(TopologyKind, &str)> = [
                (a.layers.is_some(), TopologyKind::Deep, "--layers"),
                (a.leak.is_some(), TopologyKind::Leaky, "--leak"),
                (a.sparsity.is_some(), TopologyKind::Sparse, "--sparsity"),
            ]
            .into_iter()
            .filter(|g| g.0)
            .map(|g| (g.1, g.2))
            .collect();
            match given.as_slice() {
                [] => TopologyKind::Vanilla,
                [(k, _)] => *k,
                [_, (_, flag), ..] => {
                    return Err(usage(flag, "only one of --layers, --leak, --sparsity may be given without --topology"))
                }
            }
        }
    };
    Ok(match kind {
        TopologyKind::Vanilla => Topology::Vanilla,
        TopologyKind::Sparse => Topology::Sparse {
            sparsity: required(a.sparsity, REF_SPARSITY, defaults, "--sparsity", "sparse")?,
        },
        TopologyKind::Leaky => Topology::Leaky {
            leak: required(a.leak, REF_LEAK, defaults, "--leak", "leaky")?,
        },
        TopologyKind::Deep => Topology::Deep {
            sizes: match (&a.layers, defaults) {
                (Some(l), _) => l.clone(),
                (None, true) => REF_LAYERS.to_vec(),
                (None, false) => return Err(usage("--layers", "the deep topology needs --layers (or --paper-defaults)")),
            },
        },
    })
}

fn default_grid(a: &ConvergenceArgs) -> Vec<f64> {
    match a.grid_scale {
        GridScale::Log => log_grid(0.04, 2.0, a.grid_points),
        GridScale::Linear => linear_grid(0.04, 2.0, a.grid_points),
    }
}

fn validated(spec: ExperimentSpec, common: &Common, tolerance: Option<f64>) -> Result<RunConfig, CliError> {
    check_output(common.output.as_deref())?;
    Ok(RunConfig {
        spec,
        output_path: common.output.clone(),
        output_format: format_for(common),
        workers: common.workers,
        tolerance,
    })
}

fn check_scan(scan: &ScanSpec, rename: &[(&str, &str)]) -> Result<(), CliError> {
    scan.validate().map_err(|e| classify(e, rename))
}

/// Builds and validates the run described by the parsed command line.
pub fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.command {
        Command::Convergence(a) => {
            if a.grid_points == 0 {
                return Err(usage("--grid-points", "must be >= 1"));
            }
            let mut scan = shape_spec(&a.shape, &a.common, convergence_topology(a)?, 100);
            scan.sigma_r_grid = a.sigma_r.clone().unwrap_or_else(|| default_grid(a));
            scan.sigma_i_grid = a.sigma_i.clone().unwrap_or_else(|| default_grid(a));
            check_scan(&scan, &[])?;
            validated(ExperimentSpec::Convergence { scan }, &a.common, None)
        }
        Command::CrossTerms(a) => {
            let leak = required(a.leak, REF_LEAK, a.common.paper_defaults, "--leak", "leaky")?;
            let scan = shape_spec(&a.shape, &a.common, Topology::Leaky { leak }, 100).with_point(a.sigma_r, a.sigma_i);
            check_scan(&scan, &[])?;
            validated(ExperimentSpec::CrossTerms { scan }, &a.common, None)
        }
        Command::Sparsity(a) => {
            let scan = shape_spec(&a.shape, &a.common, Topology::Vanilla, 1000).with_point(a.sigma_r, a.sigma_i);
            check_scan(&scan, &[])?;
            let s_list = a.levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
            if a.sizes.is_empty() || a.sizes.contains(&0) {
                return Err(usage("--sizes", "need sizes >= 1"));
            }
            if let Some(bad) = s_list.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
                return Err(usage("--levels", format!("levels must lie in (0, 1], got {bad}")));
            }
            if !s_list.contains(&1.0) {
                return Err(usage("--levels", "the list must contain the dense level 1"));
            }
            validated(
                ExperimentSpec::Sparsity {
                    scan,
                    n_list: a.sizes.clone(),
                    s_list,
                },
                &a.common,
                None,
            )
        }
        Command::DeepSizes(a) => {
            if a.optimize && a.layers < 2 {
                return Err(usage("--layers", format!("need at least 2 layers, got {}", a.layers)));
            }
            let layers = if a.optimize { a.layers } else { 2 };
            let budget = a.budget.unwrap_or((layers * REF_N * REF_N) as u64);
            let equal = ((budget as f64) / layers as f64).sqrt().round().max(1.0) as usize;
            let scan = shape_spec(
                &a.shape,
                &a.common,
                Topology::Deep {
                    sizes: vec![equal; layers],
                },
                500,
            )
            .with_point(a.sigma_r, a.sigma_i);
            check_scan(&scan, &[])?;
            if budget < layers as u64 {
                return Err(usage("--budget", format!("{budget} cannot hold {layers} layers")));
            }
            if a.optimize {
                return validated(
                    ExperimentSpec::OptimizeDeepSizes {
                        scan,
                        budget,
                        layers,
                        options: size_options(),
                    },
                    &a.common,
                    None,
                );
            }
            let n1_list = match &a.n1 {
                Some(v) => v.clone(),
                None => default_n1(budget),
            };
            if n1_list.is_empty() {
                return Err(usage("--n1", "need at least one size"));
            }
            for &n1 in &n1_list {
                let sq = (n1 as u64).saturating_mul(n1 as u64);
                if n1 == 0 || sq >= budget || ((budget - sq) as f64).sqrt().round() < 1.0 {
                    return Err(usage("--n1", format!("{n1} leaves no second layer within --budget {budget}")));
                }
            }
            validated(ExperimentSpec::DeepSizes { scan, budget, n1_list }, &a.common, None)
        }
        Command::SparseRf(a) => {
            let spec = RandomFeatureSpec {
                activation: a.common.activation,
                d_list: a.dims.clone(),
                n_list: a.features.clone().unwrap_or_else(|| (0..=13).map(|k| 1usize << k).collect()),
                sparsity: a.sparsity,
                reps: a.common.reps.unwrap_or(1000),
                master_seed: a.common.seed,
            };
            spec.validate()
                .map_err(|e| classify(e, &[("d", "--dims"), ("n", "--features")]))?;
            validated(ExperimentSpec::SparseRf(spec), &a.common, None)
        }
        Command::KernelCheck(a) => {
            if a.samples == 0 {
                return Err(usage("--samples", "must be >= 1"));
            }
            if a.order < 2 {
                return Err(usage("--order", format!("quadrature order must be >= 2, got {}", a.order)));
            }
            if !(a.max_norm.is_finite() && a.max_norm > 0.0) {
                return Err(usage("--max-norm", format!("must be positive, got {}", a.max_norm)));
            }
            if a.tolerance.is_nan() || a.tolerance < 0.0 {
                return Err(usage("--tolerance", "must be nonnegative"));
            }
            let spec = KernelCheckSpec {
                samples: a.samples,
                order: a.order,
                max_norm: a.max_norm,
                master_seed: a.common.seed,
            };
            validated(ExperimentSpec::KernelCheck(spec), &a.common, Some(a.tolerance))
        }
    }
}

/// First-layer sizes from 30% to 135% of the equal split, 15 apart, plus
/// the equal split itself.
fn default_n1(budget: u64) -> Vec<usize> {
    let max = ((budget as f64).sqrt() - 1.0).floor() as usize;
    let equal = ((budget as f64) / 2.0).sqrt().round() as usize;
    let lo = (equal * 3 / 10).max(1);
    let hi = (equal * 135 / 100).min(max);
    let mut v: Vec<usize> = (lo..=hi).step_by(15).collect();
    v.push(equal);
    v.retain(|&n| n >= 1 && n <= max);
    v.sort_unstable();
    v.dedup();
    v
}

/// Result of a run and a one-line human summary.
pub fn execute(config: &RunConfig) -> Result<(ExperimentResult, String), CliError> {
    let engine = Engine::new(config.workers).map_err(|e| classify(e, &[]))?;
    let fail = |e: Error| classify(e, &[]);
    let (result, summary) = match &config.spec {
        ExperimentSpec::Convergence { scan } => {
            let r = convergence_scan(scan, &engine).map_err(fail)?;
            let finite: Vec<f64> = r.column("L").unwrap_or(&[]).iter().copied().filter(|v| v.is_finite()).collect();
            let flagged = r.rows() - finite.len();
            let s = format!(
                "{} grid points, L from {} to {}, {flagged} flagged as diverged",
                r.rows(),
                format_g(finite.iter().copied().fold(f64::INFINITY, f64::min), 6),
                format_g(finite.iter().copied().fold(f64::NEG_INFINITY, f64::max), 6)
            );
            (r, s)
        }
        ExperimentSpec::CrossTerms { scan } => {
            let r = cross_term_probe(scan, &engine).map_err(fail)?;
            let c = r.column("cross_term").unwrap_or(&[]);
            let l = r.column("L").unwrap_or(&[]);
            let s = format!(
                "final step: mean |cross term| {}, L {}",
                format_g(*c.last().unwrap_or(&f64::NAN), 6),
                format_g(*l.last().unwrap_or(&f64::NAN), 6)
            );
            (r, s)
        }
        ExperimentSpec::Sparsity { scan, n_list, s_list } => {
            let rep = sparsity_scan(n_list, s_list, scan, &engine).map_err(fail)?;
            let s = rep
                .thresholds
                .iter()
                .map(|(n, t)| format!("threshold(N={n}) = {}", t.map_or("none".into(), |v| format_g(v, 6))))
                .collect::<Vec<_>>()
                .join(", ");
            (rep.result, s)
        }
        ExperimentSpec::DeepSizes { scan, budget, n1_list } => {
            let r = deep_size_scan(*budget, n1_list, scan, &engine).map_err(fail)?;
            let l = r.column("L").unwrap_or(&[]);
            let best = l
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i);
            let s = match best {
                Some(i) => format!(
                    "grid minimum at n1 = {}, n2 = {} (L = {})",
                    r.numeric_axis("n1").map_or(f64::NAN, |v| v[i]),
                    r.numeric_axis("n2").map_or(f64::NAN, |v| v[i]),
                    format_g(l[i], 6)
                ),
                None => "every grid point diverged".into(),
            };
            (r, s)
        }
        ExperimentSpec::OptimizeDeepSizes {
            scan,
            budget,
            layers,
            options,
        } => {
            let opt = optimize_deep_sizes(*layers, *budget, scan, options, &engine).map_err(fail)?;
            let s = format!(
                "sizes {:?} (L = {}), {} after {} iterations",
                opt.sizes,
                format_g(opt.objective, 6),
                if opt.nonincreasing() { "nonincreasing" } else { "not nonincreasing" },
                opt.iterations
            );
            let seeds = scan.seeds();
            (opt.into_result(config.spec.clone(), seeds), s)
        }
        ExperimentSpec::SparseRf(spec) => {
            let r = sparse_rf_experiment(spec, &engine).map_err(fail)?;
            let s = format!("{} rows over d = {:?}", r.rows(), spec.d_list);
            (r, s)
        }
        ExperimentSpec::KernelCheck(spec) => {
            let r = kernel_check(spec).map_err(fail)?;
            let max = r.column("max_abs_diff").unwrap_or(&[]);
            let worst = max.iter().copied().fold(0.0, f64::max);
            let per: Vec<String> = Activation::ALL
                .iter()
                .zip(max)
                .map(|(f, v)| format!("{f} {}", format_g(*v, 3)))
                .collect();
            let s = format!("max |closed-form - quadrature| = {} ({})", format_g(worst, 6), per.join(", "));
            (r, s)
        }
    };
    Ok((result, summary))
}

/// Parses `argv` (program name first), runs the study, writes the output
/// and returns the process exit code.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = build_config(cli)?;
    let (result, summary) = execute(&config)?;
    emit(&result, config.output_format, config.output_path.as_deref()).map_err(|e| CliError {
        code: 1,
        message: e.to_string(),
    })?;
    if config.output_path.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if let (Some(tol), ExperimentSpec::KernelCheck(_)) = (config.tolerance, &config.spec) {
        let worst = result.column("max_abs_diff").unwrap_or(&[]).iter().copied().fold(0.0, f64::max);
        if worst > tol {
            return Err(CliError {
                code: 1,
                message: format!("kernel check failed: discrepancy {worst:e} exceeds {tol:e}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut argv = vec!["rkconv"];
        argv.extend_from_slice(args);
        build_config(&Cli::try_parse_from(argv).unwrap())
    }

    #[test]
    fn zero_scale_is_a_usage_error_naming_the_flag() {
        let e = config(&["convergence", "--sigma-r", "0"]).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("--sigma-r") && e.message.contains("positive"), "{}", e.message);
        let e = config(&["convergence", "--sigma-i", "1,-0.5"]).unwrap_err();
        assert!(e.message.contains("--sigma-i"));
    }

    #[test]
    fn topology_inference() {
        let spec = |args: &[&str]| match config(args).unwrap().spec {
            ExperimentSpec::Convergence { scan } => scan.topology,
            other => panic!("{other:?}"),
        };
        assert_eq!(spec(&["convergence"]), Topology::Vanilla);
        assert_eq!(spec(&["convergence", "--leak", "0.3"]), Topology::Leaky { leak: 0.3 });
        assert_eq!(spec(&["convergence", "--layers", "100,50"]), Topology::Deep { sizes: vec![100, 50] });
        assert_eq!(
            spec(&["convergence", "--topology", "sparse", "--paper-defaults"]),
            Topology::Sparse { sparsity: 0.8 }
        );
        assert_eq!(config(&["convergence", "--topology", "leaky"]).unwrap_err().code, 2);
        assert_eq!(config(&["convergence", "--leak", "0.3", "--sparsity", "0.5"]).unwrap_err().code, 2);
        assert!(config(&["convergence", "--leak", "1.5"]).unwrap_err().message.contains("--leak"));
    }

    #[test]
    fn default_grid_is_25_log_points() {
        match config(&["convergence"]).unwrap().spec {
            ExperimentSpec::Convergence { scan } => {
                assert_eq!(scan.sigma_r_grid.len(), 25);
                assert_eq!(scan.sigma_r_grid[0], 0.04);
                assert_eq!(scan.sigma_i_grid[24], 2.0);
                assert_eq!(scan.reps, 100);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deep_size_defaults() {
        assert_eq!(default_n1(80_000), {
            let mut v: Vec<usize> = (60..=270).step_by(15).collect();
            v.push(200);
            v.sort_unstable();
            v
        });
        let e = config(&["deep-sizes", "--n1", "300"]).unwrap_err();
        assert!(e.message.contains("--n1"));
        match config(&["deep-sizes", "--optimize", "--layers", "3"]).unwrap().spec {
            ExperimentSpec::OptimizeDeepSizes { budget, layers, .. } => assert_eq!((budget, layers), (120_000, 3)),
            other => panic!("{other:?}"),
        }
        assert_eq!(config(&["deep-sizes", "--optimize", "--layers", "1"]).unwrap_err().code, 2);
    }

    #[test]
    fn other_validations() {
        assert!(config(&["sparsity", "--levels", "0.5,0.2"]).unwrap_err().message.contains("--levels"));
        assert!(config(&["sparse-rf", "--features", "8,4"]).unwrap_err().message.contains("--features"));
        assert!(config(&["kernel-check", "--order", "1"]).unwrap_err().message.contains("--order"));
        assert!(config(&["cross-terms"]).unwrap_err().message.contains("--leak"));
        assert!(config(&["convergence", "--reps", "0"]).unwrap_err().message.contains("--reps"));
        let e = config(&["convergence", "--output", "/nonexistent-dir/x.csv"]).unwrap_err();
        assert!(e.message.contains("--output"));
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(config(&["kernel-check", "--output", "x.json"]).unwrap().output_format, Format::Json);
        assert_eq!(config(&["kernel-check", "--output", "x.txt"]).unwrap().output_format, Format::Csv);
        assert_eq!(
            config(&["kernel-check", "--output", "x.json", "--format", "csv"]).unwrap().output_format,
            Format::Csv
        );
    }
}
