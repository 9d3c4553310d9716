use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use evacsim::objective::evaluate;
use evacsim::optimize::{optimize_scenario, CompassConfig};
use evacsim::output::{
    congestion_csv, congestion_from_exits_csv, schedule_text, trace_csv, OutputDir,
};
use evacsim::scenario::{load_scenario, Overrides, Scenario};
use evacsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "evacsim",
    version,
    about = "Leader-guided crowd evacuation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file, bundled scenario name, or a run directory.
    #[arg(long)]
    scenario: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Agent-based run.
    RunMicro {
        #[command(flatten)]
        common: Common,
    },
    /// Mean-field Monte-Carlo run.
    RunMeso {
        #[command(flatten)]
        common: Common,
        /// Batch size.
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Compass search over the aware leaders' control points.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iters: Option<usize>,
        /// Optimize the meso dynamics.
        #[arg(long)]
        meso: bool,
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Congestion table of a finished run.
    Metrics {
        /// Run directory holding exits.csv.
        #[arg(long)]
        run: PathBuf,
    },
    /// Loads and checks a scenario.
    Validate {
        #[arg(long)]
        scenario: String,
    },
}

fn load(
    common: &Common,
    batch: Option<usize>,
    iterations: Option<usize>,
) -> Result<(Scenario, Overrides)> {
    let mut scenario = load_scenario(&common.scenario)?;
    let overrides = Overrides {
        seed: common.seed,
        steps: common.steps,
        batch,
        iterations,
    };
    scenario.apply(&overrides)?;
    Ok((scenario, overrides))
}

fn manifest(
    command: &str,
    scenario: &Scenario,
    o: &Overrides,
    meso: bool,
    started: Instant,
) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario.name,
        "scale": if meso { "meso" } else { "micro" },
        "seed": scenario.run.seed,
        "steps": scenario.run.steps,
        "batch": scenario.meso.batch,
        "iterations": scenario.optimize.iterations,
        "overrides": {
            "seed": o.seed,
            "steps": o.steps,
            "batch": o.batch,
            "iterations": o.iterations,
        },
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "scenario_source": scenario.source,
    })
}

fn run_sim(common: &Common, batch: Option<usize>, meso: bool) -> Result<()> {
    let started = Instant::now();
    let (scenario, o) = load(common, batch, None)?;
    let result = scenario.simulate(meso, scenario.run.seed, None)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_run(&result, "")?;
    let cost = evaluate(&result, &scenario.objective);
    let mut m = manifest(
        if meso { "run-meso" } else { "run-micro" },
        &scenario,
        &o,
        meso,
        started,
    );
    m["objective"] = json!({ "kind": scenario.objective.kind.as_str(), "cost": cost });
    m["evacuated_fraction"] = json!(result.evacuated_fraction());
    m["evacuation_step"] = json!(result.evacuation_step);
    out.finish(m)?;
    println!(
        "{} evacuated={} evacuation_step={} {}={}",
        scenario.name,
        result.evacuated_fraction(),
        result
            .evacuation_step
            .map_or("none".into(), |n| n.to_string()),
        scenario.objective.kind.as_str(),
        cost
    );
    Ok(())
}

fn run_optimize(
    common: &Common,
    iters: Option<usize>,
    meso: bool,
    batch: Option<usize>,
) -> Result<()> {
    let started = Instant::now();
    let (scenario, o) = load(common, batch, iters)?;
    let seed = scenario.run.seed;
    let opt = &scenario.optimize;
    let config = CompassConfig {
        j_max: opt.iterations,
        target_cost: opt.target_cost,
        perturbation_scale: opt.perturbation_scale,
        n_switch: opt.n_switch,
        seed: opt.seed.unwrap_or(seed),
        evaluations_per_candidate: opt.evaluations,
    };
    let found = optimize_scenario(&scenario, &scenario.objective, &config, meso, seed)?;
    let best = scenario.simulate(meso, seed, Some(&found.trace.best_schedule))?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_run(&best, "")?;
    out.write("trace.csv", &trace_csv(&found.trace))?;
    out.write("schedule.txt", &schedule_text(&found.trace.best_schedule))?;
    out.write(
        "initial_schedule.txt",
        &schedule_text(&found.initial_schedule),
    )?;
    let mut m = manifest("optimize", &scenario, &o, meso, started);
    m["objective"] = json!({
        "kind": scenario.objective.kind.as_str(),
        "initial_cost": found.trace.initial_cost,
        "best_cost": found.trace.best_cost,
    });
    m["cost_evaluations"] = json!(found.trace.cost_evaluations);
    out.finish(m)?;
    println!(
        "{} initial_cost={} best_cost={} iterations={}",
        scenario.name,
        found.trace.initial_cost,
        found.trace.best_cost,
        found.trace.records.len()
    );
    Ok(())
}

fn run_metrics(dir: &Path) -> Result<()> {
    let path = dir.join("exits.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let report = congestion_from_exits_csv(&text, &path)?;
    let table = congestion_csv(&report);
    let target = dir.join("metrics.csv");
    std::fs::write(&target, &table).map_err(|e| Error::Io {
        path: target.clone(),
        source: e,
    })?;
    print!("{table}");
    Ok(())
}

fn run_validate(spec: &str) -> Result<()> {
    let s = load_scenario(spec)?;
    s.initial_state(s.run.seed, false)?;
    println!(
        "ok name={} followers={} leaders={} exits={} walls={} steps={} objective={}",
        s.name,
        s.followers.count,
        s.leader_count(),
        s.env.exits.len(),
        s.env.walls.len(),
        s.run.steps,
        s.objective.kind.as_str()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::RunMicro { common } => run_sim(common, None, false),
        Command::RunMeso { common, batch } => run_sim(common, *batch, true),
        Command::Optimize {
            common,
            iters,
            meso,
            batch,
        } => run_optimize(common, *iters, *meso, *batch),
        Command::Metrics { run } => run_metrics(run),
        Command::Validate { scenario } => run_validate(scenario),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} message={}", e.kind(), message);
            ExitCode::FAILURE
        }
    }
}
