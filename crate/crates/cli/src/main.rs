//! `serpentik`: learn a configuration table, coevolve it, inspect it, plan
//! trajectories with it, or serve it to a teleoperation console.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serpentik::config::CONFIG_ENV;
use serpentik::lut_controller::load_waypoints;
use serpentik::{
    coevolve, load_table, load_table_for, penalty, plan_trajectory, save_table, smoothness_report, sweep_grid,
    CoevoMethod, ConfigTable, GridSpec, Neighborhood, ProjectConfig, INCH,
};
use serpentik_teleop::Controller;

#[derive(Parser)]
#[command(name = "serpentik", version, about = "Evolutionary IK for a serpentine arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every grid point and write the configuration table.
    Learn {
        #[command(flatten)]
        common: Common,
        /// Grid size as NRxNZ, e.g. 21x28.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smooth a learned table by cooperative coevolution.
    Coevolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        coevo: CoevoArgs,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-pass history CSV; defaults to the output path with a `.history.csv` extension.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Report smoothness and residuals of a table.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        neighborhood: Option<Neighborhood>,
        /// Optional per-point CSV export.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a straight-line path through waypoints and write the joint trajectory.
    Traj {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: PathBuf,
        /// CSV of x,y,z waypoints in feet.
        #[arg(long)]
        waypoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sample spacing, feet.
        #[arg(long)]
        step: Option<f64>,
        /// Largest joint change per sample before a sample is flagged, degrees.
        #[arg(long)]
        max_joint_rate: Option<f64>,
    },
    /// Run the teleoperation service.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Print the default configuration file.
    Defaults,
}

#[derive(Args)]
struct Common {
    /// Configuration file (arm, tank, grid, solver settings).
    #[arg(long, env = CONFIG_ENV)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial mutation standard deviation, degrees.
    #[arg(long)]
    sigma_init: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    tolerance_inches: Option<f64>,
    #[arg(long)]
    max_evals: Option<u64>,
}

#[derive(Args)]
struct CoevoArgs {
    #[arg(long)]
    method: Option<CoevoMethod>,
    #[arg(long)]
    neighborhood: Option<Neighborhood>,
    #[arg(long)]
    passes: Option<usize>,
    /// Residual a penalty pass may degrade a point to, inches.
    #[arg(long)]
    relax_inches: Option<f64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NRxNZ, got {s:?}"))?;
    let nr = a.trim().parse().map_err(|_| format!("bad NR in {s:?}"))?;
    let nz = b.trim().parse().map_err(|_| format!("bad NZ in {s:?}"))?;
    Ok((nr, nz))
}

impl Common {
    fn load(&self) -> Result<ProjectConfig, Failure> {
        let mut cfg = match &self.model {
            Some(path) => ProjectConfig::load(path).map_err(config_err)?,
            None => ProjectConfig::default(),
        };
        let es = &mut cfg.es;
        if let Some(v) = self.seed {
            es.seed = v;
        }
        if let Some(v) = self.sigma_init {
            es.sigma_init = [v; serpentik::NUM_DOFS];
        }
        if let Some(v) = self.decay {
            es.decay = [v; serpentik::NUM_DOFS];
        }
        if let Some(v) = self.tolerance_inches {
            es.tolerance = v * INCH;
        }
        if let Some(v) = self.max_evals {
            es.max_evals = v;
        }
        Ok(cfg)
    }
}

fn learn(common: Common, grid: Option<(usize, usize)>, out: &Path) -> Outcome {
    let mut cfg = common.load()?;
    if let Some((nr, nz)) = grid {
        cfg.grid = GridSpec { nr, nz, ..cfg.grid };
    }
    cfg.validate().map_err(config_err)?;

    let started = Instant::now();
    let table = sweep_grid(&cfg.arm, &cfg.grid, &cfg.es, cfg.sweep.order, cfg.sweep.warm_start).map_err(runtime_err)?;
    save_table(&table, out).map_err(runtime_err)?;

    let n = table.spec.len();
    let converged = table.converged_count();
    let mean = table.residual.iter().sum::<f64>() / n as f64;
    let max = table.residual.iter().copied().fold(0.0, f64::max);
    println!("learned {}x{} grid -> {}", table.spec.nr, table.spec.nz, out.display());
    println!("converged: {converged}/{n} ({:.1}%)", 100.0 * converged as f64 / n as f64);
    println!("residual: mean {:.3} in, max {:.3} in", mean * 12.0, max * 12.0);
    println!("wall time: {:.2} s", started.elapsed().as_secs_f64());
    if converged < n {
        eprintln!("warning: {} points did not converge", n - converged);
    }
    Ok(())
}

fn coevolve_cmd(common: Common, args: CoevoArgs, table: &Path, out: &Path, history: Option<PathBuf>) -> Outcome {
    let mut cfg = common.load()?;
    if let Some(v) = args.method {
        cfg.coevo.method = v;
    }
    if let Some(v) = args.neighborhood {
        cfg.coevo.neighborhood = v;
    }
    if let Some(v) = args.passes {
        cfg.coevo.passes = v;
    }
    if let Some(v) = args.relax_inches {
        cfg.coevo.relax_bound = Some(v * INCH);
    }
    cfg.validate().map_err(config_err)?;
    let params = cfg.coevo_params();

    let input = load_table_for(table, &cfg.arm).map_err(runtime_err)?;
    let started = Instant::now();
    let (smoothed, hist) = coevolve(&input, &cfg.arm, &params).map_err(runtime_err)?;
    save_table(&smoothed, out).map_err(runtime_err)?;
    let history = history.unwrap_or_else(|| out.with_extension("history.csv"));
    std::fs::write(&history, hist.to_csv()).map_err(|e| runtime_err(format!("{}: {e}", history.display())))?;

    println!("{:>5} {:>9} {:>14} {:>12} {:>10} {:>8} {:>8}", "pass", "objective", "mean_penalty", "max_res_in", "converged", "updated", "gave_up");
    for p in &hist.passes {
        println!(
            "{:>5} {:>9} {:>14.3} {:>12.3} {:>10} {:>8} {:>8}",
            p.pass,
            p.objective,
            p.mean_penalty,
            p.max_residual * 12.0,
            p.converged,
            p.points_updated,
            p.points_given_up
        );
    }
    println!("wrote {} and {} in {:.2} s", out.display(), history.display(), started.elapsed().as_secs_f64());
    Ok(())
}

fn eval(common: Common, table: &Path, neighborhood: Option<Neighborhood>, out: Option<PathBuf>) -> Outcome {
    let cfg = common.load()?;
    let table = load_table(table).map_err(runtime_err)?;
    if table.ensure_model(&cfg.arm).is_err() {
        eprintln!("warning: table was learned for a different arm model");
    }
    let nb = neighborhood.unwrap_or(cfg.coevo.neighborhood);
    let report = smoothness_report(&table, nb);
    println!("points: {}", table.spec.len());
    println!("unconverged: {}", report.unconverged);
    println!("max neighbor distance: {:.3} deg", report.max_neighbor_distance);
    println!("mean neighbor distance: {:.3} deg", report.mean_neighbor_distance);
    println!("total penalty: {:.3} deg", report.total_penalty);
    println!("mean penalty: {:.3} deg", report.mean_penalty);
    println!("converged residual: mean {:.3} in, max {:.3} in", report.mean_converged_residual * 12.0, report.max_converged_residual * 12.0);
    println!("residual histogram (inches):");
    let bins = serpentik::coevolution::RESIDUAL_BINS_INCHES;
    for (k, count) in report.residual_histogram.iter().enumerate() {
        let hi = bins.get(k + 1).map_or("inf".to_string(), |v| v.to_string());
        println!("  [{}, {hi}): {count}", bins[k]);
    }
    if let Some(path) = out {
        write_point_report(&table, nb, &path).map_err(runtime_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_point_report(table: &ConfigTable, nb: Neighborhood, path: &Path) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let io = |e: csv::Error| format!("{}: {e}", path.display());
    w.write_record(["i", "j", "r", "z", "residual", "converged", "penalty"]).map_err(io)?;
    for k in 0..table.spec.len() {
        let (i, j) = table.spec.unflatten(k);
        let (r, z) = table.spec.position(i, j).map_err(|e| e.to_string())?;
        let pen = penalty(table, i, j, nb).map_err(|e| e.to_string())?;
        w.write_record([
            i.to_string(),
            j.to_string(),
            r.to_string(),
            z.to_string(),
            table.residual[k].to_string(),
            table.converged[k].to_string(),
            pen.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn traj(common: Common, table: &Path, waypoints: &Path, out: &Path, step: Option<f64>, rate: Option<f64>) -> Outcome {
    let mut cfg = common.load()?;
    if let Some(v) = step {
        cfg.trajectory.step = v;
    }
    if let Some(v) = rate {
        cfg.trajectory.max_joint_rate = Some(v);
    }
    cfg.validate().map_err(config_err)?;
    let rate = cfg
        .trajectory
        .max_joint_rate
        .ok_or_else(|| config_err("--max-joint-rate is required (or set trajectory.max_joint_rate)"))?;

    let table = load_table_for(table, &cfg.arm).map_err(runtime_err)?;
    let points = load_waypoints(waypoints).map_err(runtime_err)?;
    for (k, p) in points.iter().enumerate() {
        if !cfg.tank.contains(p) {
            return Err(runtime_err(format!("waypoint {k} ({}, {}, {}) is outside the tank", p.x, p.y, p.z)));
        }
    }
    let plan = plan_trajectory(&table, &cfg.arm, &points, cfg.trajectory.step, rate).map_err(runtime_err)?;
    std::fs::write(out, plan.to_csv()).map_err(|e| runtime_err(format!("{}: {e}", out.display())))?;
    println!("samples: {}", plan.samples.len());
    println!("max deviation: {:.3} in", plan.max_deviation() * 12.0);
    println!("max joint delta: {:.3} deg", plan.max_joint_delta());
    println!("rate violations: {}", plan.rate_violations());
    println!("wrote {}", out.display());
    Ok(())
}

fn serve(common: Common, table: &Path, port: Option<u16>) -> Outcome {
    let cfg = common.load()?;
    cfg.validate().map_err(config_err)?;
    let port = port.unwrap_or(cfg.serve.port);
    let table = load_table_for(table, &cfg.arm).map_err(runtime_err)?;
    let controller = Arc::new(Controller::new(cfg.arm, cfg.tank, table).map_err(runtime_err)?);

    let rt = tokio::runtime::Runtime::new().map_err(runtime_err)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| runtime_err(format!("cannot listen on port {port}: {e}")))?;
        let addr = listener.local_addr().map_err(runtime_err)?;
        println!("serving on ws://{addr}/ws (health: http://{addr}/health)");
        serpentik_teleop::serve(listener, controller, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(runtime_err)
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Learn { common, grid, out } => learn(common, grid, &out),
        Command::Coevolve { common, coevo, table, out, history } => coevolve_cmd(common, coevo, &table, &out, history),
        Command::Eval { common, table, neighborhood, out } => eval(common, &table, neighborhood, out),
        Command::Traj { common, table, waypoints, out, step, max_joint_rate } => {
            traj(common, &table, &waypoints, &out, step, max_joint_rate)
        }
        Command::Serve { common, table, port } => serve(common, &table, port),
        Command::Defaults => {
            print!("{}", ProjectConfig::default().to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
