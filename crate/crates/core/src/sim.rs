//! Time integration driver shared by both scales.

use crate::control::{leader_controls, ControlSchedule};
use crate::env::Environment;
use crate::meso::{kde_density, mfmc_step, DensityGrid, GridSpec, MfmcConfig};
use crate::micro::{euler_step, CrowdState, ModelParams};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Micro,
    Meso(MfmcConfig),
}

impl Scale {
    pub fn name(&self) -> &'static str {
        match self {
            Scale::Micro => "micro",
            Scale::Meso(_) => "meso",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOutput {
    pub grid: GridSpec,
    pub bandwidth: f64,
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizon_steps: usize,
    /// Keep agent positions every `record_stride` steps; 0 keeps none.
    pub record_stride: usize,
    pub scale: Scale,
    /// Seeds the batch draws of the meso scale.
    pub seed: u64,
    pub density: Option<DensityOutput>,
}

/// Population of one visibility area at one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AreaSample {
    pub count: usize,
    pub mass: f64,
    /// `Σ (|v| − s)²` over the agents in the area.
    pub speed_dev: f64,
    /// `Σ m (|v| − s)²`.
    pub speed_dev_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub areas: Vec<AreaSample>,
    /// Cumulative evacuated mass per exit.
    pub evacuated: Vec<f64>,
    pub active_mass: f64,
    /// Active mass outside every visibility area.
    pub outside_mass: f64,
    /// Mass-weighted mean speed of the active agents.
    pub mean_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Follower,
    Sample,
    Leader,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Follower => "follower",
            AgentKind::Sample => "sample",
            AgentKind::Leader => "leader",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub id: usize,
    pub kind: AgentKind,
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub scale: &'static str,
    pub dt: f64,
    pub horizon_steps: usize,
    pub total_mass: f64,
    /// One record per simulated step, starting at step 0.
    pub records: Vec<StepRecord>,
    /// First step at which every agent is evacuated.
    pub evacuation_step: Option<usize>,
    pub final_state: CrowdState,
    pub trajectory: Vec<TrajectoryRow>,
    /// `leader_paths[k][n]` is leader `k`'s position at step `n`.
    pub leader_paths: Vec<Vec<Vec2>>,
    /// Largest `|active + evacuated − total|` over all steps.
    pub max_mass_error: f64,
    /// Active agent positions found inside a wall.
    pub wall_violations: usize,
    pub densities: Vec<(usize, DensityGrid)>,
}

impl SimResult {
    /// Record at `step`, or the last one when the run stopped earlier.
    pub fn record_at(&self, step: usize) -> &StepRecord {
        let i = step.min(self.records.len() - 1);
        &self.records[i]
    }

    pub fn last_record(&self) -> &StepRecord {
        self.records
            .last()
            .expect("a result holds at least the initial record")
    }

    /// Evacuated fraction of the total mass at the end of the run.
    pub fn evacuated_fraction(&self) -> f64 {
        1.0 - self.last_record().active_mass / self.total_mass
    }
}

fn record(params: &ModelParams, env: &Environment, state: &CrowdState) -> StepRecord {
    let s = params.speed();
    let mut areas = vec![AreaSample::default(); env.exits.len()];
    let mut evacuated = vec![0.0; env.exits.len()];
    let mut active_mass = 0.0;
    let mut outside_mass = 0.0;
    let mut speed_sum = 0.0;
    let agents = state
        .followers
        .iter()
        .map(|f| (f.pos, f.vel, f.mass, f.evacuated_at, f.exit))
        .chain(
            state
                .leaders
                .iter()
                .map(|l| (l.pos, l.vel, l.mass, l.evacuated_at, l.exit)),
        );
    for (pos, vel, mass, evacuated_at, exit) in agents {
        if evacuated_at.is_some() {
            if let Some(e) = exit {
                evacuated[e] += mass;
            }
            continue;
        }
        active_mass += mass;
        let speed = vel.norm();
        speed_sum += mass * speed;
        match env.visibility_indicator(&pos) {
            Some(e) => {
                let dev = (speed - s).powi(2);
                let a = &mut areas[e];
                a.count += 1;
                a.mass += mass;
                a.speed_dev += dev;
                a.speed_dev_mass += mass * dev;
            }
            None => outside_mass += mass,
        }
    }
    StepRecord {
        step: state.step,
        time: state.time,
        areas,
        evacuated,
        active_mass,
        outside_mass,
        mean_speed: if active_mass > 0.0 {
            speed_sum / active_mass
        } else {
            0.0
        },
    }
}

fn push_rows(rows: &mut Vec<TrajectoryRow>, state: &CrowdState, follower_kind: AgentKind) {
    for (id, f) in state
        .followers
        .iter()
        .enumerate()
        .filter(|(_, f)| f.active())
    {
        rows.push(TrajectoryRow {
            step: state.step,
            id,
            kind: follower_kind,
            pos: f.pos,
            vel: f.vel,
        });
    }
    for (id, l) in state.leaders.iter().enumerate().filter(|(_, l)| l.active()) {
        rows.push(TrajectoryRow {
            step: state.step,
            id,
            kind: AgentKind::Leader,
            pos: l.pos,
            vel: l.vel,
        });
    }
}

/// Runs the dynamics for `config.horizon_steps` steps, or until every agent
/// has left. Aware leaders listed in `schedule` follow it; the schedule's
/// origins are reset to the initial leader positions.
pub fn simulate(
    params: &ModelParams,
    env: &Environment,
    initial: &CrowdState,
    schedule: Option<&ControlSchedule>,
    config: &RunConfig,
) -> Result<SimResult> {
    if config.horizon_steps == 0 {
        return Err(Error::Validation(
            "horizon must be at least one step".into(),
        ));
    }
    params.validate()?;
    if let Scale::Meso(mfmc) = &config.scale {
        mfmc.validate(initial.followers.len(), initial.total_mass())?;
    }
    let schedule = schedule.map(|s| s.with_origins(initial));
    let follower_kind = match config.scale {
        Scale::Micro => AgentKind::Follower,
        Scale::Meso(_) => AgentKind::Sample,
    };

    let mut state = initial.clone();
    state.capture(env);
    let total_mass = state.total_mass();
    let mut records = vec![record(params, env, &state)];
    let mut trajectory = Vec::new();
    let mut leader_paths: Vec<Vec<Vec2>> = state.leaders.iter().map(|l| vec![l.pos]).collect();
    let mut densities = Vec::new();
    let mut max_mass_error = 0.0f64;
    let mut wall_violations = 0;

    let mut observe = |state: &CrowdState,
                       trajectory: &mut Vec<TrajectoryRow>,
                       densities: &mut Vec<(usize, DensityGrid)>|
     -> Result<()> {
        let err = (state.active_mass() + state.evacuated_mass() - total_mass).abs();
        max_mass_error = max_mass_error.max(err);
        wall_violations += state
            .followers
            .iter()
            .filter(|f| f.active())
            .map(|f| f.pos)
            .chain(state.leaders.iter().filter(|l| l.active()).map(|l| l.pos))
            .filter(|p| env.inside_wall(p).is_some())
            .count();
        if config.record_stride > 0 && state.step.is_multiple_of(config.record_stride) {
            push_rows(trajectory, state, follower_kind);
        }
        if let Some(d) = &config.density {
            if d.steps.contains(&state.step) {
                densities.push((
                    state.step,
                    kde_density(&state.followers, &d.grid, d.bandwidth)?,
                ));
            }
        }
        Ok(())
    };
    observe(&state, &mut trajectory, &mut densities)?;

    let mut evacuation_step = state.all_evacuated().then_some(0);
    while evacuation_step.is_none() && state.step < config.horizon_steps {
        let controls = leader_controls(&state, schedule.as_ref());
        state = match &config.scale {
            Scale::Micro => euler_step(params, env, &state, &controls),
            Scale::Meso(mfmc) => mfmc_step(params, env, mfmc, &state, &controls, config.seed),
        };
        records.push(record(params, env, &state));
        for (path, l) in leader_paths.iter_mut().zip(&state.leaders) {
            path.push(l.pos);
        }
        observe(&state, &mut trajectory, &mut densities)?;
        if state.all_evacuated() {
            evacuation_step = Some(state.step);
        }
    }

    Ok(SimResult {
        scale: config.scale.name(),
        dt: params.dt,
        horizon_steps: config.horizon_steps,
        total_mass,
        records,
        evacuation_step,
        final_state: state,
        trajectory,
        leader_paths,
        max_mass_error,
        wall_violations,
        densities,
    })
}
