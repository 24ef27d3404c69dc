//! Batch front-end: parse flags and optional key=value config files,
//! dispatch the requested computation, and emit CSV tables (plus optional
//! SVG plots) under an output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use spikeflow::ide::{solve_ide, ContourGrid};
use spikeflow::matrix::{concentration_sweep, sample_wigner, Ensemble, PairKind};
use spikeflow::rf::{build_instance, rf_risk_curve, Activation, RfConfig, WeightKind};
use spikeflow::simulate::{ensemble as run_ensemble, SimConfig};
use spikeflow::theory::{theory_curve, ScenarioParams};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "spikeflow",
    about = "Gradient-flow curves for spiked matrix estimation and random-feature regression",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form overlap, cost and p1 curves.
    Theory(CommonArgs),
    /// Contour-integral oracle curves from the limiting system.
    Ide(CommonArgs),
    /// Finite-size projected gradient descent ensemble quantiles.
    Simulate(CommonArgs),
    /// Theory curves joined with ensemble quantiles on a shared grid.
    Compare(CommonArgs),
    /// Resolvent concentration sweep over matrix sizes.
    Concentration(CommonArgs),
    /// Random-feature risk trajectory from the spectral measures.
    Rf(CommonArgs),
    /// Critical-point census of the finite-size landscape.
    Landscape(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Theory(_) => "theory",
            Command::Ide(_) => "ide",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Concentration(_) => "concentration",
            Command::Rf(_) => "rf",
            Command::Landscape(_) => "landscape",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Theory(a)
            | Command::Ide(a)
            | Command::Simulate(a)
            | Command::Compare(a)
            | Command::Concentration(a)
            | Command::Rf(a)
            | Command::Landscape(a) => a,
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Matrix size, or comma-separated sizes for `concentration`.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_name = "TAU")]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Contour radius.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub contour_points: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub psi1: Option<f64>,
    #[arg(long)]
    pub psi2: Option<f64>,
    /// Ridge penalty strength for the random-feature model.
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
    #[arg(long)]
    pub emit_svg: bool,
    /// Worker pool size; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "lambda",
    "alpha",
    "n",
    "runs",
    "dt",
    "steps",
    "tau-max",
    "points",
    "seed",
    "ensemble",
    "rho",
    "contour-points",
    "d",
    "psi1",
    "psi2",
    "ridge",
    "activation",
    "output-dir",
    "emit-svg",
    "threads",
];

/// Parsed key=value config file contents.
fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown key '{key}'",
                path.display(),
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn get<T: std::str::FromStr>(
        &self,
        cli: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, CliError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        if let Some(raw) = self.file.get(key) {
            return raw
                .parse::<T>()
                .map_err(|_| CliError::Config(format!("invalid value '{raw}' for key '{key}'")));
        }
        default.ok_or_else(|| CliError::Config(format!("missing required parameter '{key}'")))
    }
}

/// Fully resolved job: subcommand name, output settings and the flattened
/// parameter map retained for reproducibility.
pub struct JobConfig {
    pub subcommand: String,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub threads: Option<usize>,
    command: ResolvedCommand,
}

enum ResolvedCommand {
    Theory(ScenarioParams),
    Ide {
        params: ScenarioParams,
        dt: f64,
        grid: ContourGrid,
    },
    Simulate(SimConfig),
    Compare(SimConfig),
    Concentration {
        sizes: Vec<usize>,
        trials: usize,
        grid: ContourGrid,
        ensemble: Ensemble,
        seed: u64,
    },
    Rf {
        config: RfConfig,
        t_max: f64,
        points: usize,
    },
    Landscape {
        n: usize,
        lambda: f64,
        seed: u64,
        ensemble: Ensemble,
    },
}

fn parse_ensemble(raw: &str) -> Result<Ensemble, CliError> {
    raw.parse::<Ensemble>().map_err(CliError::Config)
}

fn parse_activation(raw: &str) -> Result<Activation, CliError> {
    raw.parse::<Activation>().map_err(CliError::Config)
}

fn scenario(lambda: f64, alpha: f64, tau_max: f64, points: usize) -> Result<ScenarioParams, CliError> {
    ScenarioParams::with_linspace(lambda, alpha, tau_max, points)
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Resolve a parsed command line (plus any config file) into a runnable job.
pub fn resolve(cli: Cli) -> Result<JobConfig, CliError> {
    let args = cli.command.args().clone();
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let r = Resolver { file };

    let output_dir = match r.file.get("output-dir") {
        Some(dir) if args.output_dir == Path::new("out") => PathBuf::from(dir),
        _ => args.output_dir.clone(),
    };
    let emit_svg = args.emit_svg
        || r.file
            .get("emit-svg")
            .is_some_and(|v| matches!(v.as_str(), "true" | "1" | "yes"));
    let threads = match args.threads {
        Some(t) => Some(t),
        None => r
            .file
            .get("threads")
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("invalid value '{v}' for key 'threads'")))
            })
            .transpose()?,
    };

    let lambda = || r.get(args.lambda, "lambda", None::<f64>);
    let alpha = || r.get(args.alpha, "alpha", None::<f64>);
    let seed = r.get(args.seed, "seed", Some(1u64))?;
    let tau_max = r.get(args.tau_max, "tau-max", Some(10.0))?;
    let points = r.get(args.points, "points", Some(201usize))?;
    let ensemble = parse_ensemble(&r.get(args.ensemble.clone(), "ensemble", Some("gaussian".to_string()))?)?;
    let rho = r.get(args.rho, "rho", Some(2.5))?;
    let contour_points = r.get(args.contour_points, "contour-points", Some(256usize))?;
    let single_n = |default: Option<usize>| -> Result<usize, CliError> {
        let raw = r.get(args.n.clone(), "n", default.map(|d| d.to_string()))?;
        raw.parse::<usize>()
            .map_err(|_| CliError::Config(format!("invalid matrix size '{raw}'")))
    };

    let make_contour = || {
        ContourGrid::new(rho, 0.4, contour_points).map_err(|e| CliError::Config(e.to_string()))
    };

    let command = match cli.command.name() {
        "theory" => ResolvedCommand::Theory(scenario(lambda()?, alpha()?, tau_max, points)?),
        "ide" => {
            let dt = r.get(args.dt, "dt", Some(1e-3))?;
            if !(dt > 0.0 && dt <= 1e-2) {
                return Err(CliError::Config(format!(
                    "ide time step must lie in (0, 1e-2], got {dt}"
                )));
            }
            ResolvedCommand::Ide {
                params: scenario(lambda()?, alpha()?, tau_max, points)?,
                dt,
                grid: make_contour()?,
            }
        }
        "simulate" | "compare" => {
            let dt = r.get(args.dt, "dt", Some(0.1))?;
            if !(dt > 0.0) {
                return Err(CliError::Config(format!("dt = {dt} must be positive")));
            }
            let steps = match args.steps {
                Some(s) => s,
                None => match r.file.get("steps") {
                    Some(v) => v
                        .parse()
                        .map_err(|_| CliError::Config(format!("invalid value '{v}' for 'steps'")))?,
                    None => (tau_max / dt).round() as usize,
                },
            };
            let config = SimConfig {
                n: single_n(Some(1000))?,
                lambda: lambda()?,
                alpha: alpha()?,
                dt,
                steps,
                runs: r.get(args.runs, "runs", Some(100usize))?,
                ensemble,
                base_seed: seed,
            };
            config
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            if cli.command.name() == "simulate" {
                ResolvedCommand::Simulate(config)
            } else {
                ResolvedCommand::Compare(config)
            }
        }
        "concentration" => {
            let raw = r.get(args.n.clone(), "n", Some("100,400,1600".to_string()))?;
            let sizes: Result<Vec<usize>, _> = raw
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect();
            let sizes =
                sizes.map_err(|_| CliError::Config(format!("invalid size list '{raw}'")))?;
            if sizes.iter().any(|&n| n < 2 || n > 4000) {
                return Err(CliError::Config(
                    "concentration sizes must lie in [2, 4000]".to_string(),
                ));
            }
            ResolvedCommand::Concentration {
                sizes,
                trials: r.get(args.runs, "runs", Some(20usize))?,
                grid: make_contour()?,
                ensemble,
                seed,
            }
        }
        "rf" => {
            let config = RfConfig {
                d: r.get(args.d, "d", Some(100usize))?,
                psi1: r.get(args.psi1, "psi1", Some(1.0))?,
                psi2: r.get(args.psi2, "psi2", Some(1.5))?,
                ridge: r.get(args.ridge, "ridge", Some(0.1))?,
                activation: parse_activation(&r.get(
                    args.activation.clone(),
                    "activation",
                    Some("tanh".to_string()),
                )?)?,
                seed,
            };
            config
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            ResolvedCommand::Rf {
                config,
                t_max: tau_max,
                points,
            }
        }
        "landscape" => {
            let n = single_n(Some(100))?;
            if n > 400 {
                return Err(CliError::Config(format!(
                    "landscape needs n <= 400, got {n}"
                )));
            }
            ResolvedCommand::Landscape {
                n,
                lambda: lambda()?,
                seed,
                ensemble,
            }
        }
        other => return Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    };

    Ok(JobConfig {
        subcommand: cli.command.name().to_string(),
        output_dir,
        emit_svg,
        threads,
        command,
    })
}

/// Run a resolved job to completion.
pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let threads = job.threads.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| execute(job))
}

fn execute(job: &JobConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&job.output_dir)?;
    match &job.command {
        ResolvedCommand::Theory(params) => {
            let curve = theory_curve(params);
            let rows: Vec<Vec<f64>> = (0..curve.tau.len())
                .map(|i| vec![curve.tau[i], curve.q_bar[i], curve.cost[i], curve.p1_bar[i]])
                .collect();
            write_csv(
                &job.output_dir.join("theory.csv"),
                &["tau", "q_bar", "cost", "p1_bar"],
                &rows,
            )?;
            if job.emit_svg {
                emit_curve_svg(job, "theory", &curve.tau, &curve.q_bar, &curve.cost, &curve.p1_bar)?;
            }
        }
        ResolvedCommand::Ide { params, dt, grid } => {
            let states = solve_ide(params, grid, *params.tau_grid.last().unwrap(), *dt)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let sqrt_lambda = params.lambda.sqrt();
            let rows: Vec<Vec<f64>> = states
                .iter()
                .map(|s| {
                    vec![
                        s.tau,
                        s.q,
                        1.0 - (s.q * s.q + s.p1 / sqrt_lambda),
                        s.p1,
                    ]
                })
                .collect();
            write_csv(
                &job.output_dir.join("ide.csv"),
                &["tau", "q_bar", "cost", "p1_bar"],
                &rows,
            )?;
            if job.emit_svg {
                let tau: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let q: Vec<f64> = rows.iter().map(|r| r[1]).collect();
                let c: Vec<f64> = rows.iter().map(|r| r[2]).collect();
                let p: Vec<f64> = rows.iter().map(|r| r[3]).collect();
                emit_curve_svg(job, "ide", &tau, &q, &c, &p)?;
            }
        }
        ResolvedCommand::Simulate(config) => {
            let stats = run_ensemble(config).map_err(|e| CliError::Numerical(e.to_string()))?;
            let rows: Vec<Vec<f64>> = (0..stats.tau.len())
                .map(|i| {
                    vec![
                        stats.tau[i],
                        stats.q_quantiles.p10[i],
                        stats.q_quantiles.p50[i],
                        stats.q_quantiles.p90[i],
                        stats.cost_quantiles.p10[i],
                        stats.cost_quantiles.p50[i],
                        stats.cost_quantiles.p90[i],
                        stats.p1_quantiles.p10[i],
                        stats.p1_quantiles.p50[i],
                        stats.p1_quantiles.p90[i],
                    ]
                })
                .collect();
            write_csv(
                &job.output_dir.join("ensemble.csv"),
                &[
                    "tau", "q_p10", "q_p50", "q_p90", "cost_p10", "cost_p50", "cost_p90",
                    "p1_p10", "p1_p50", "p1_p90",
                ],
                &rows,
            )?;
            if job.emit_svg {
                let mk = |name: &str, p10: &[f64], p50: &[f64], p90: &[f64]| {
                    let series = vec![
                        svg::Series {
                            name: "p10".to_string(),
                            points: stats.tau.iter().copied().zip(p10.iter().copied()).collect(),
                        },
                        svg::Series {
                            name: "p50".to_string(),
                            points: stats.tau.iter().copied().zip(p50.iter().copied()).collect(),
                        },
                        svg::Series {
                            name: "p90".to_string(),
                            points: stats.tau.iter().copied().zip(p90.iter().copied()).collect(),
                        },
                    ];
                    (name.to_string(), series)
                };
                for (name, series) in [
                    mk(
                        "overlap",
                        &stats.q_quantiles.p10,
                        &stats.q_quantiles.p50,
                        &stats.q_quantiles.p90,
                    ),
                    mk(
                        "cost",
                        &stats.cost_quantiles.p10,
                        &stats.cost_quantiles.p50,
                        &stats.cost_quantiles.p90,
                    ),
                    mk(
                        "p1",
                        &stats.p1_quantiles.p10,
                        &stats.p1_quantiles.p50,
                        &stats.p1_quantiles.p90,
                    ),
                ] {
                    let body =
                        svg::line_plot(&format!("ensemble {name}"), "tau", &name, &series);
                    std::fs::write(
                        job.output_dir.join(format!("ensemble_{name}.svg")),
                        body,
                    )?;
                }
            }
        }
        ResolvedCommand::Compare(config) => {
            let stats = run_ensemble(config).map_err(|e| CliError::Numerical(e.to_string()))?;
            let params = ScenarioParams::new(config.lambda, config.alpha, stats.tau.clone())
                .map_err(|e| CliError::Config(e.to_string()))?;
            let theory = theory_curve(&params);
            let rows: Vec<Vec<f64>> = (0..stats.tau.len())
                .map(|i| {
                    vec![
                        stats.tau[i],
                        theory.q_bar[i],
                        theory.cost[i],
                        theory.p1_bar[i],
                        stats.q_quantiles.p10[i],
                        stats.q_quantiles.p50[i],
                        stats.q_quantiles.p90[i],
                        stats.cost_quantiles.p10[i],
                        stats.cost_quantiles.p50[i],
                        stats.cost_quantiles.p90[i],
                        stats.p1_quantiles.p10[i],
                        stats.p1_quantiles.p50[i],
                        stats.p1_quantiles.p90[i],
                    ]
                })
                .collect();
            write_csv(
                &job.output_dir.join("compare.csv"),
                &[
                    "tau", "q_theory", "cost_theory", "p1_theory", "q_p10", "q_p50", "q_p90",
                    "cost_p10", "cost_p50", "cost_p90", "p1_p10", "p1_p50", "p1_p90",
                ],
                &rows,
            )?;
            if job.emit_svg {
                let series = vec![
                    svg::Series {
                        name: "theory".to_string(),
                        points: stats
                            .tau
                            .iter()
                            .copied()
                            .zip(theory.q_bar.iter().copied())
                            .collect(),
                    },
                    svg::Series {
                        name: "median".to_string(),
                        points: stats
                            .tau
                            .iter()
                            .copied()
                            .zip(stats.q_quantiles.p50.iter().copied())
                            .collect(),
                    },
                    svg::Series {
                        name: "p10".to_string(),
                        points: stats
                            .tau
                            .iter()
                            .copied()
                            .zip(stats.q_quantiles.p10.iter().copied())
                            .collect(),
                    },
                    svg::Series {
                        name: "p90".to_string(),
                        points: stats
                            .tau
                            .iter()
                            .copied()
                            .zip(stats.q_quantiles.p90.iter().copied())
                            .collect(),
                    },
                ];
                let body = svg::line_plot("overlap: theory vs ensemble", "tau", "q", &series);
                std::fs::write(job.output_dir.join("compare_overlap.svg"), body)?;
            }
        }
        ResolvedCommand::Concentration {
            sizes,
            trials,
            grid,
            ensemble,
            seed,
        } => {
            let report =
                concentration_sweep(sizes, *trials, grid, PairKind::UvEqual, *ensemble, *seed);
            let rows: Vec<Vec<f64>> = report
                .n_values
                .iter()
                .zip(&report.quantiles)
                .map(|(&n, &(p10, p50, p90))| vec![n as f64, p10, p50, p90])
                .collect();
            write_csv(
                &job.output_dir.join("concentration.csv"),
                &["n", "sup_p10", "sup_p50", "sup_p90"],
                &rows,
            )?;
            if job.emit_svg {
                let series = vec![svg::Series {
                    name: "median sup deviation".to_string(),
                    points: rows.iter().map(|r| (r[0], r[2])).collect(),
                }];
                let body = svg::line_plot("resolvent concentration", "n", "sup |dev|", &series);
                std::fs::write(job.output_dir.join("concentration.svg"), body)?;
            }
        }
        ResolvedCommand::Rf {
            config,
            t_max,
            points,
        } => {
            let (instance, measures) =
                build_instance(config).map_err(|e| CliError::Numerical(e.to_string()))?;
            let grid: Vec<f64> = (0..*points)
                .map(|i| t_max * i as f64 / (*points as f64 - 1.0).max(1.0))
                .collect();
            let curve = rf_risk_curve(
                &instance,
                &measures,
                config.lambda_star(),
                &grid,
                WeightKind::InstanceExact,
            )
            .map_err(|e| CliError::Numerical(e.to_string()))?;
            let rows: Vec<Vec<f64>> = (0..grid.len())
                .map(|i| vec![curve.t[i], curve.q0[i], curve.p0[i], curve.p1[i], curve.risk[i]])
                .collect();
            write_csv(
                &job.output_dir.join("rf_risk.csv"),
                &["t", "q0", "p0", "p1", "risk"],
                &rows,
            )?;
            if job.emit_svg {
                let series = vec![svg::Series {
                    name: "risk".to_string(),
                    points: curve.t.iter().copied().zip(curve.risk.iter().copied()).collect(),
                }];
                let body = svg::line_plot("random-feature risk", "t", "risk", &series);
                std::fs::write(job.output_dir.join("rf_risk.svg"), body)?;
            }
        }
        ResolvedCommand::Landscape {
            n,
            lambda,
            seed,
            ensemble,
        } => {
            let noise = sample_wigner(*n, *ensemble, *seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let mut theta_star = nalgebra_vec(*n);
            theta_star[0] = (*n as f64).sqrt();
            let report = spikeflow::ide::landscape_check(&noise, *lambda, &theta_star)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let predicted = if *lambda > 1.0 {
                (1.0 - 1.0 / lambda).sqrt()
            } else {
                0.0
            };
            write_csv(
                &job.output_dir.join("landscape.csv"),
                &[
                    "n",
                    "lambda",
                    "top_overlap",
                    "predicted_overlap",
                    "saddle_count",
                    "max_grad_residual",
                    "top_hessian_min",
                    "degenerate",
                ],
                &[vec![
                    *n as f64,
                    *lambda,
                    report.top_overlap,
                    predicted,
                    report.saddle_count as f64,
                    report.max_gradient_residual,
                    report.top_hessian_min,
                    f64::from(report.degenerate_spectrum as u8),
                ]],
            )?;
        }
    }
    Ok(())
}

fn nalgebra_vec(n: usize) -> nalgebra::DVector<f64> {
    nalgebra::DVector::zeros(n)
}

fn emit_curve_svg(
    job: &JobConfig,
    prefix: &str,
    tau: &[f64],
    q: &[f64],
    cost: &[f64],
    p1: &[f64],
) -> Result<(), CliError> {
    for (name, data) in [("overlap", q), ("cost", cost), ("p1", p1)] {
        let series = vec![svg::Series {
            name: name.to_string(),
            points: tau.iter().copied().zip(data.iter().copied()).collect(),
        }];
        let body = svg::line_plot(&format!("{prefix} {name}"), "tau", name, &series);
        std::fs::write(job.output_dir.join(format!("{prefix}_{name}.svg")), body)?;
    }
    Ok(())
}

/// Write a rectangular CSV with full round-trip precision. Any non-finite
/// value aborts before a file is produced.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Numerical(format!(
                "ragged row: {} values against {} columns",
                row.len(),
                header.len()
            )));
        }
        for (col, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(CliError::Numerical(format!(
                    "non-finite value in column '{}'",
                    header[col]
                )));
            }
        }
    }
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            // 17 significant digits: round-trips every f64 exactly.
            let _ = write!(text, "{v:.16e}");
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
