use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use l1r1_core::alpha::{build_step, RootInterval};
use l1r1_core::certify::{certify, witness_lp};
use l1r1_core::escape::{escape_report, EscapeReport, EstimatorConfig, Theta};
use l1r1_core::model::{box_contains_zero, objective, residual, subdiff_box, InstanceFile};
use l1r1_core::oracle::{directed_probe, grid_local_minima, qp_verdict, QpDecision, QpVerdict};
use l1r1_core::rational::{parse_list, Rational};
use l1r1_core::solve::{batch_experiment, draw_run, polyak_run, Method, SolveConfig, USource};
use l1r1_core::{Error, Instance, IntervalScalar, Point};

mod output;

use output::{digest_file, float, write_manifest, Csv, RunManifest, Sink};

const SEED_ENV: &str = "L1R1_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "l1r1",
    version,
    about = "Exact landscape tools for l1 rank-one symmetric factorization"
)]
struct Cli {
    /// Output file; stdout when omitted. A manifest is written to `<out>.manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed. Overridden by the L1R1_SEED environment variable.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InstanceArg {
    /// JSON file `{"u": [...], "x": [...]}` with rationals as strings.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value = "polyak", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    f_tol: f64,
    /// Scale of the diminishing step `c / sqrt(k)`.
    #[arg(long, default_value_t = 0.1)]
    step_c: f64,
    /// Initial points are uniform in `[-r, r]^n`.
    #[arg(long, default_value_t = 2.0)]
    init_radius: f64,
    /// Fixed `u` from a JSON instance file instead of a fresh Gaussian per run.
    #[arg(long)]
    u_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Objective, residual matrix and coordinate subdifferential box.
    Eval(InstanceArg),
    /// Decide first-order stationarity and emit a certificate.
    Certify(InstanceArg),
    /// Subdifferential of `t -> |x t - u|_1`: JSON summary, CSV samples.
    Alpha {
        #[command(flatten)]
        inst: InstanceArg,
        /// Comma-separated sample points; defaults to the jumps and points around them.
        #[arg(long, allow_hyphen_values = true)]
        t_grid: Option<String>,
        /// CSV of `t,lo,hi`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Decrease curve and second-order estimate along `θu - x` for both signs.
    Escape {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, default_value = "1/4,1/2,3/4,1", allow_hyphen_values = true)]
        t_grid: String,
        #[arg(long, default_value_t = 12)]
        tau_count: u32,
        #[arg(long, default_value_t = 0)]
        perturb_count: u32,
        /// CSV of `theta,t,f,predicted`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// One subgradient run; emits the trajectory as JSON.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated starting point; drawn from the seed when omitted.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Keep every k-th iterate in the output.
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// Independent restarts; emits per-run CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// JSON summary with quantiles and certificates of non-converged runs.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Brute-force cross-checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Convex QP residual next to the exact LP verdict.
    Qp {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, default_value_t = 200)]
        iters: usize,
    },
    /// Exhaustive grid scan for local minima (n <= 3).
    Grid {
        #[command(flatten)]
        inst: InstanceArg,
        /// Box radius; defaults to `2 |u|_inf`.
        #[arg(long, allow_hyphen_values = true)]
        radius: Option<String>,
        /// Grid step; defaults to `|u|_inf / 16`.
        #[arg(long, allow_hyphen_values = true)]
        step: Option<String>,
        /// CSV of minima with their distance to `±u`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exact decrease along `θu - x` at a spurious stationary point.
    Probe {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, default_value = "1/4,1/2,3/4,1", allow_hyphen_values = true)]
        t_grid: String,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {v:?}")),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

fn read_instance(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed instance {}", path.display()))
}

fn load_pair(path: &Path) -> Result<(Point, Instance)> {
    let file = read_instance(path)?;
    let u = file.instance()?;
    let Some(x) = file.point()? else {
        bail!("instance {} has no field x", path.display());
    };
    Ok((x, u))
}

fn rationals(s: &str, field: &str) -> Result<Vec<Rational>> {
    parse_list(s).with_context(|| format!("bad value for {field}"))
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

#[derive(Serialize)]
struct EvalOutput {
    f: Rational,
    residual: Vec<Vec<Rational>>,
    subdiff_box: Vec<IntervalScalar>,
    box_contains_zero: bool,
}

#[derive(Serialize)]
struct AlphaSummary {
    jumps: Vec<Rational>,
    cell_values: Vec<Rational>,
    zero_root_interval: Option<RootInterval>,
}

#[derive(Serialize)]
struct QpOutput {
    qp: QpVerdict,
    lp_feasible: bool,
    agree: bool,
}

#[derive(Serialize)]
struct GridOutput {
    box_radius: Rational,
    grid_step: Rational,
    points_per_axis: usize,
    minima: Vec<Vec<Rational>>,
    distances: Vec<Rational>,
    farther_than_two_steps: usize,
}

#[derive(Serialize)]
struct ProbeOutput {
    f: Rational,
    min_decrease: Rational,
}

struct RunEnv<'a> {
    out: Option<&'a Path>,
    seed: u64,
}

impl RunEnv<'_> {
    fn sink(&self) -> Sink {
        Sink::new(self.out)
    }

    fn manifest(&self, command: &str, inputs: &[&Path]) -> Result<()> {
        let digests = inputs
            .iter()
            .map(|p| digest_file(p))
            .collect::<Result<_>>()?;
        write_manifest(self.out, &RunManifest::new(command, self.seed, digests))
    }
}

fn default_alpha_grid(jumps: &[Rational]) -> Vec<Rational> {
    let one = Rational::one();
    let two = Rational::from_integer(2);
    if jumps.is_empty() {
        return vec![-&one, Rational::zero(), one];
    }
    let mut ts = vec![&jumps[0] - &one];
    for (k, j) in jumps.iter().enumerate() {
        ts.push(j.clone());
        match jumps.get(k + 1) {
            Some(next) => ts.push((j + next) / &two),
            None => ts.push(j + &one),
        }
    }
    ts
}

fn run_config(
    run: &RunArgs,
    seed: u64,
    runs: usize,
    thin: usize,
) -> Result<(SolveConfig, Vec<PathBuf>)> {
    let mut inputs = Vec::new();
    let (n, u_source) = match &run.u_file {
        Some(p) => {
            let u = read_instance(p)?.instance()?;
            inputs.push(p.clone());
            (
                u.dim(),
                USource::Fixed(u.u.iter().map(Rational::to_f64).collect()),
            )
        }
        None => (run.n, USource::Gaussian),
    };
    let cfg = SolveConfig {
        method: run.method,
        max_iters: run.max_iters,
        f_tol: run.f_tol,
        step_c: run.step_c,
        seed,
        n,
        u_source,
        init_radius: run.init_radius,
        runs,
        thin,
    };
    cfg.validate()?;
    Ok((cfg, inputs))
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = resolve_seed(cli.seed)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring thread pool")?;
    }
    let ctx = RunEnv {
        out: cli.out.as_deref(),
        seed,
    };

    match &cli.command {
        Command::Eval(a) => {
            let (x, u) = load_pair(&a.instance)?;
            let b = subdiff_box(&x, &u)?;
            ctx.sink().write_json(&EvalOutput {
                f: objective(&x, &u)?,
                residual: residual(&x, &u)?.rows(),
                box_contains_zero: box_contains_zero(&b),
                subdiff_box: b,
            })?;
            ctx.manifest("eval", &[&a.instance])
        }
        Command::Certify(a) => {
            let (x, u) = load_pair(&a.instance)?;
            ctx.sink().write_json(&certify(&x, &u)?)?;
            ctx.manifest("certify", &[&a.instance])
        }
        Command::Alpha { inst, t_grid, csv } => {
            let (x, u) = load_pair(&inst.instance)?;
            let sf = build_step(&x, &u)?;
            let ts = match t_grid {
                Some(s) => rationals(s, "--t-grid")?,
                None => default_alpha_grid(sf.jumps()),
            };
            if let Some(path) = csv {
                let mut c = Csv::new(&["t", "lo", "hi"]);
                for t in &ts {
                    let v = sf.eval(t);
                    c.row([t.to_string(), v.lo().to_string(), v.hi().to_string()]);
                }
                Sink::new(Some(path)).write(&c.finish())?;
            }
            ctx.sink().write_json(&AlphaSummary {
                jumps: sf.jumps().to_vec(),
                cell_values: sf.cell_values().to_vec(),
                zero_root_interval: sf.zero_root_interval(),
            })?;
            ctx.manifest("alpha", &[&inst.instance])
        }
        Command::Escape {
            inst,
            t_grid,
            tau_count,
            perturb_count,
            csv,
        } => {
            let (x, u) = load_pair(&inst.instance)?;
            let grid = rationals(t_grid, "--t-grid")?;
            let est = EstimatorConfig {
                tau_count: *tau_count,
                perturb_count: *perturb_count,
                seed,
            };
            let reports: Vec<EscapeReport> = Theta::BOTH
                .iter()
                .map(|&th| escape_report(&x, &u, th, &grid, &est))
                .collect::<Result<_, _>>()?;
            if let Some(path) = csv {
                let mut c = Csv::new(&["theta", "t", "f", "predicted"]);
                for r in &reports {
                    for p in &r.curve {
                        c.row([
                            i8::from(r.theta).to_string(),
                            p.t.to_string(),
                            p.f_value.to_string(),
                            p.predicted.to_string(),
                        ]);
                    }
                }
                Sink::new(Some(path)).write(&c.finish())?;
            }
            ctx.sink().write_json(&reports)?;
            ctx.manifest("escape", &[&inst.instance])
        }
        Command::Solve { run, x0, thin } => {
            let (cfg, inputs) = run_config(run, seed, 1, *thin)?;
            let (u, drawn) = draw_run(&cfg, 0);
            let x0 = match x0 {
                Some(s) => rationals(s, "--x0")?.iter().map(Rational::to_f64).collect(),
                None => drawn,
            };
            let traj = polyak_run(&u, &x0, &cfg)?;
            ctx.sink().write_json(&traj)?;
            let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            ctx.manifest("solve", &refs)
        }
        Command::Sweep { run, runs, summary } => {
            let (cfg, inputs) = run_config(run, seed, *runs, 0)?;
            let s = batch_experiment(&cfg)?;
            let mut c = Csv::new(&["run_id", "iters", "final_f", "final_distance", "flagged"]);
            for r in &s.records {
                c.row([
                    r.run_id.to_string(),
                    r.iters.to_string(),
                    float(r.final_f),
                    float(r.final_distance),
                    r.flagged.to_string(),
                ]);
            }
            ctx.sink().write(&c.finish())?;
            if let Some(path) = summary {
                Sink::new(Some(path)).write_json(&s)?;
            }
            let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            ctx.manifest("sweep", &refs)
        }
        Command::Oracle(OracleCommand::Qp { inst, iters }) => {
            let (x, u) = load_pair(&inst.instance)?;
            let qp = qp_verdict(&x, &u, *iters)?;
            let lp_feasible = witness_lp(&x, &u)?.is_some();
            let agree = match qp.decision {
                QpDecision::Feasible => lp_feasible,
                QpDecision::Infeasible => !lp_feasible,
                QpDecision::Ambiguous => true,
            };
            ctx.sink().write_json(&QpOutput {
                qp,
                lp_feasible,
                agree,
            })?;
            ctx.manifest("oracle qp", &[&inst.instance])?;
            if !agree {
                return Err(Error::Invariant("LP and QP oracles disagree".into()).into());
            }
            Ok(())
        }
        Command::Oracle(OracleCommand::Grid {
            inst,
            radius,
            step,
            csv,
        }) => {
            let u = read_instance(&inst.instance)?.instance()?;
            let m = u.linf_norm();
            let one = |s: &str, field: &str| -> Result<Rational> {
                s.trim()
                    .parse()
                    .with_context(|| format!("bad value for {field}"))
            };
            let radius = match radius {
                Some(s) => one(s, "--radius")?,
                None => Rational::from_integer(2) * &m,
            };
            let step = match step {
                Some(s) => one(s, "--step")?,
                None => &m / Rational::from_integer(16),
            };
            let scan = grid_local_minima(&u, &radius, &step)?;
            let distances = scan.distances(&u);
            if let Some(path) = csv {
                let header: Vec<String> = (1..=u.dim())
                    .map(|i| format!("x{i}"))
                    .chain(["distance".to_string()])
                    .collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let mut c = Csv::new(&header);
                for (p, d) in scan.minima.iter().zip(&distances) {
                    c.row(strings(p).into_iter().chain([d.to_string()]));
                }
                Sink::new(Some(path)).write(&c.finish())?;
            }
            let far = scan.far_minima(&u, 2).len();
            ctx.sink().write_json(&GridOutput {
                box_radius: scan.box_radius,
                grid_step: scan.grid_step,
                points_per_axis: scan.points_per_axis,
                minima: scan.minima,
                distances,
                farther_than_two_steps: far,
            })?;
            ctx.manifest("oracle grid", &[&inst.instance])
        }
        Command::Oracle(OracleCommand::Probe { inst, t_grid }) => {
            let (x, u) = load_pair(&inst.instance)?;
            let grid = rationals(t_grid, "--t-grid")?;
            let min_decrease = directed_probe(&x, &u, &grid)?;
            ctx.sink().write_json(&ProbeOutput {
                f: objective(&x, &u)?,
                min_decrease,
            })?;
            ctx.manifest("oracle probe", &[&inst.instance])
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let invariant = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::Invariant(_))));
    if invariant {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_maps_to_two() {
        let e = anyhow::Error::from(Error::Invariant("x".into())).context("certify");
        assert_eq!(exit_code(&e), 2);
        let e = anyhow::Error::from(Error::NotStationary);
        assert_eq!(exit_code(&e), 1);
    }

    #[test]
    fn default_grid_brackets_jumps() {
        let g = default_alpha_grid(&[Rational::from_integer(-1), Rational::from_integer(1)]);
        assert_eq!(strings(&g), ["-2", "-1", "0", "1", "2"]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
