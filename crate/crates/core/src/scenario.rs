//! Scenario files: a TOML description of the model, the geometry, the
//! initial crowd, the leaders, the objective and the run settings.
//!
//! Unknown keys are rejected. Positions are metres, times seconds. Every
//! block except `[environment]` and `[followers]` has defaults.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{ControlSchedule, LeaderStrategy, WaypointPlan};
use crate::env::{Environment, Exit, Wall};
use crate::meso::{GridSpec, MfmcConfig};
use crate::micro::{CrowdState, FollowerState, LeaderState, ModelParams};
use crate::objective::{ObjectiveKind, ObjectiveSpec};
use crate::rng::{derive, seeded};
use crate::sim::{simulate, DensityOutput, RunConfig, Scale, SimResult};
use crate::{vec2, Error, Result, Vec2};

pub const BUNDLED: [(&str, &str); 5] = [
    ("test1a", include_str!("../scenarios/test1a.toml")),
    ("test1b", include_str!("../scenarios/test1b.toml")),
    ("test2", include_str!("../scenarios/test2.toml")),
    ("test3a", include_str!("../scenarios/test3a.toml")),
    ("test3b", include_str!("../scenarios/test3b.toml")),
];

const INITIAL_TAG: u64 = 1;
const LEADER_TAG: u64 = 2;

mod file {
    use serde::Deserialize;

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ScenarioFile {
        pub name: String,
        #[serde(default)]
        pub description: String,
        #[serde(default)]
        pub model: Model,
        pub environment: Environment,
        pub followers: Followers,
        #[serde(default)]
        pub leaders: Vec<LeaderGroup>,
        #[serde(default)]
        pub objective: Objective,
        #[serde(default)]
        pub run: Run,
        #[serde(default)]
        pub meso: Meso,
        #[serde(default)]
        pub optimize: Optimize,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Model {
        pub c_s: Option<f64>,
        pub c_tau: Option<f64>,
        pub c_r_f: Option<f64>,
        pub c_r_l: Option<f64>,
        pub c_al_f: Option<f64>,
        pub c_al_l: Option<f64>,
        pub s2: Option<f64>,
        pub r: Option<f64>,
        pub gamma: Option<f64>,
        pub zeta: Option<f64>,
        pub n_top: Option<usize>,
        pub rho_f: Option<f64>,
        pub rho_l: Option<f64>,
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Environment {
        #[serde(default = "default_nudge")]
        pub deadlock_nudge: f64,
        pub exits: Vec<Exit>,
        #[serde(default)]
        pub walls: Vec<Wall>,
    }

    fn default_nudge() -> f64 {
        0.1
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Exit {
        pub pos: [f64; 2],
        pub vis_r: f64,
        #[serde(default = "default_capture")]
        pub cap_r: f64,
    }

    fn default_capture() -> f64 {
        0.5
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Wall {
        pub a: [f64; 2],
        pub b: [f64; 2],
        #[serde(default = "default_thickness")]
        pub thick: f64,
    }

    fn default_thickness() -> f64 {
        0.25
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Region {
        pub min: [f64; 2],
        pub max: [f64; 2],
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Followers {
        pub count: usize,
        #[serde(rename = "box")]
        pub region: Region,
        #[serde(default)]
        pub velocity: Velocity,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
    pub enum Velocity {
        #[default]
        Zero,
        Normal {
            mean: [f64; 2],
            var: [f64; 2],
        },
        UnitSphere {
            speed: f64,
        },
    }

    #[derive(Debug, Deserialize)]
    #[serde(untagged)]
    pub enum ExitRef {
        Index(usize),
        Named(String),
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Waypoint {
        pub pos: [f64; 2],
        pub until: f64,
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct LeaderGroup {
        #[serde(default = "one")]
        pub count: usize,
        #[serde(default)]
        pub aware: bool,
        pub beta: f64,
        pub exit: ExitRef,
        #[serde(default)]
        pub waypoints: Vec<Waypoint>,
        #[serde(default = "unit")]
        pub control_speed: f64,
        pub position: Option<[f64; 2]>,
        #[serde(rename = "box")]
        pub region: Option<Region>,
    }

    fn one() -> usize {
        1
    }

    fn unit() -> f64 {
        1.0
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Objective {
        pub kind: Option<String>,
        pub horizon: Option<f64>,
        #[serde(default)]
        pub desired: Vec<f64>,
        pub penalty: Option<f64>,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Run {
        pub dt: Option<f64>,
        pub steps: Option<usize>,
        pub record_stride: Option<usize>,
        pub seed: Option<u64>,
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Grid {
        pub min: [f64; 2],
        pub max: [f64; 2],
        pub spacing: f64,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Meso {
        pub samples: Option<usize>,
        pub batch: Option<usize>,
        pub rho_top: Option<f64>,
        pub bandwidth: Option<f64>,
        pub grid: Option<Grid>,
        pub density_steps: Option<Vec<usize>>,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Optimize {
        pub iterations: Option<usize>,
        pub n_switch: Option<usize>,
        pub perturbation_scale: Option<f64>,
        pub target_cost: Option<f64>,
        pub evaluations: Option<usize>,
        pub seed: Option<u64>,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityLaw {
    Zero,
    /// Independent normal components.
    Normal {
        mean: Vec2,
        var: Vec2,
    },
    /// Uniform direction with a fixed speed.
    UnitSphere {
        speed: f64,
    },
}

impl VelocityLaw {
    fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        match self {
            VelocityLaw::Zero => Vec2::zeros(),
            VelocityLaw::Normal { mean, var } => {
                let draw = |rng: &mut R, m: f64, v: f64| {
                    if v == 0.0 {
                        m
                    } else {
                        Normal::new(m, v.sqrt())
                            .expect("variance checked at load")
                            .sample(rng)
                    }
                };
                let x = draw(rng, mean.x, var.x);
                let y = draw(rng, mean.y, var.y);
                vec2(x, y)
            }
            VelocityLaw::UnitSphere { speed } => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                vec2(theta.cos(), theta.sin()) * *speed
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub min: Vec2,
    pub max: Vec2,
}

impl Region {
    fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        vec2(
            rng.random_range(self.min.x..=self.max.x),
            rng.random_range(self.min.y..=self.max.y),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerSpec {
    pub count: usize,
    pub region: Region,
    pub velocity: VelocityLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSpec {
    pub strategy: LeaderStrategy,
    pub position: Option<Vec2>,
    pub region: Option<Region>,
    /// `None` picks the exit nearest to the initial position.
    pub exit: Option<usize>,
    pub waypoints: Vec<(Vec2, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub steps: usize,
    pub record_stride: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MesoSpec {
    pub samples: usize,
    pub batch: usize,
    pub rho_top: Option<f64>,
    pub bandwidth: f64,
    pub grid: GridSpec,
    pub density_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    pub iterations: usize,
    pub n_switch: usize,
    pub perturbation_scale: f64,
    pub target_cost: f64,
    pub evaluations: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// Model coefficients; mass fractions are filled in per scale.
    pub params: ModelParams,
    explicit_masses: bool,
    pub env: Environment,
    pub followers: FollowerSpec,
    pub leaders: Vec<LeaderSpec>,
    pub objective: ObjectiveSpec,
    pub run: RunSpec,
    pub meso: MesoSpec,
    pub optimize: OptimizeSpec,
    /// Text the scenario was parsed from.
    pub source: String,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub batch: Option<usize>,
    pub iterations: Option<usize>,
}

/// Loads a scenario file, or a bundled scenario by name. A directory holding
/// a `manifest.json` loads the scenario recorded there.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == spec) {
        return parse_scenario(text, Path::new(spec));
    }
    let path = PathBuf::from(spec);
    if path.is_dir() {
        let manifest = path.join("manifest.json");
        let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: manifest.clone(),
            message: e.to_string(),
        })?;
        let source = value["scenario_source"]
            .as_str()
            .ok_or_else(|| Error::Parse {
                path: manifest.clone(),
                message: "missing scenario_source".into(),
            })?;
        let mut scenario = parse_scenario(source, &manifest)?;
        let field = |k: &str| value["overrides"][k].as_u64();
        scenario.apply(&Overrides {
            seed: field("seed"),
            steps: field("steps").map(|v| v as usize),
            batch: field("batch").map(|v| v as usize),
            iterations: field("iterations").map(|v| v as usize),
        })?;
        return Ok(scenario);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_scenario(&text, &path)
}

fn point(p: [f64; 2]) -> Vec2 {
    vec2(p[0], p[1])
}

fn region(r: &file::Region, what: &str) -> Result<Region> {
    let out = Region {
        min: point(r.min),
        max: point(r.max),
    };
    if !(out.max.x >= out.min.x) || !(out.max.y >= out.min.y) {
        return Err(Error::Validation(format!("{what} box has min above max")));
    }
    Ok(out)
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let raw: file::ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string().replace('\n', " ").trim().to_string(),
    })?;

    let mut params = ModelParams::reference();
    let m = &raw.model;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut params.c_s, m.c_s);
    set(&mut params.c_tau, m.c_tau);
    set(&mut params.c_r_f, m.c_r_f);
    set(&mut params.c_r_l, m.c_r_l);
    set(&mut params.c_al_f, m.c_al_f);
    set(&mut params.c_al_l, m.c_al_l);
    set(&mut params.s2, m.s2);
    set(&mut params.r, m.r);
    set(&mut params.gamma, m.gamma);
    set(&mut params.zeta, m.zeta);
    if let Some(n) = m.n_top {
        params.n_top = n;
    }
    if let Some(dt) = raw.run.dt {
        params.dt = dt;
    }
    let explicit_masses = match (m.rho_f, m.rho_l) {
        (Some(f), Some(l)) => {
            params.rho_f = f;
            params.rho_l = l;
            true
        }
        (None, None) => false,
        _ => {
            return Err(Error::Validation(
                "rho_f and rho_l must be given together".into(),
            ))
        }
    };

    let exits = raw
        .environment
        .exits
        .iter()
        .map(|e| Exit::new(point(e.pos), e.vis_r, e.cap_r))
        .collect::<Result<Vec<_>>>()?;
    let walls = raw
        .environment
        .walls
        .iter()
        .map(|w| Wall::new(point(w.a), point(w.b), w.thick))
        .collect::<Result<Vec<_>>>()?;
    let env = Environment::new(exits, walls, raw.environment.deadlock_nudge)?;

    if raw.followers.count == 0 {
        return Err(Error::Validation(
            "at least one follower is required".into(),
        ));
    }
    let velocity = match raw.followers.velocity {
        file::Velocity::Zero => VelocityLaw::Zero,
        file::Velocity::Normal { mean, var } => {
            if var.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Validation(
                    "velocity variance must be non-negative".into(),
                ));
            }
            VelocityLaw::Normal {
                mean: point(mean),
                var: point(var),
            }
        }
        file::Velocity::UnitSphere { speed } => {
            if !(speed >= 0.0) {
                return Err(Error::Validation(
                    "velocity speed must be non-negative".into(),
                ));
            }
            VelocityLaw::UnitSphere { speed }
        }
    };
    let followers = FollowerSpec {
        count: raw.followers.count,
        region: region(&raw.followers.region, "followers")?,
        velocity,
    };

    let mut leaders = Vec::new();
    for (g, group) in raw.leaders.iter().enumerate() {
        let exit = match &group.exit {
            file::ExitRef::Index(i) if *i < env.exits.len() => Some(*i),
            file::ExitRef::Index(i) => {
                return Err(Error::Validation(format!(
                    "leader group {g} targets exit {i}, only {} exits",
                    env.exits.len()
                )))
            }
            file::ExitRef::Named(s) if s == "nearest" => None,
            file::ExitRef::Named(s) => {
                return Err(Error::Validation(format!(
                    "leader group {g}: exit must be an index or \"nearest\", got `{s}`"
                )))
            }
        };
        let waypoints: Vec<(Vec2, f64)> = group
            .waypoints
            .iter()
            .map(|w| (point(w.pos), w.until))
            .collect();
        // validates the waypoint ordering now; the exit is resolved per leader
        let plan = WaypointPlan::new(waypoints.clone(), env.exits[exit.unwrap_or(0)].position)?;
        let strategy = LeaderStrategy::new(
            group.aware,
            group.beta,
            plan,
            exit.unwrap_or(0),
            group.control_speed,
        )?;
        let region = group
            .region
            .as_ref()
            .map(|r| region(r, &format!("leader group {g}")))
            .transpose()?;
        for _ in 0..group.count {
            leaders.push(LeaderSpec {
                strategy: strategy.clone(),
                position: group.position.map(point),
                region: region.clone(),
                exit,
                waypoints: waypoints.clone(),
            });
        }
    }

    let steps = raw.run.steps.unwrap_or(1000);
    if steps == 0 {
        return Err(Error::Validation("run.steps must be at least 1".into()));
    }
    let run = RunSpec {
        steps,
        record_stride: raw.run.record_stride.unwrap_or(10),
        seed: raw.run.seed.unwrap_or(1),
    };

    let kind = match &raw.objective.kind {
        Some(k) => ObjectiveKind::parse(k)?,
        None => ObjectiveKind::MinTime,
    };
    if !raw.objective.desired.is_empty() && raw.objective.desired.len() != env.exits.len() {
        return Err(Error::Validation(format!(
            "objective.desired has {} entries for {} exits",
            raw.objective.desired.len(),
            env.exits.len()
        )));
    }
    let objective = ObjectiveSpec::new(
        kind,
        raw.objective.horizon.unwrap_or(steps as f64 * params.dt),
        raw.objective.desired.clone(),
        raw.objective.penalty,
    )?;

    let samples = raw.meso.samples.unwrap_or(1000);
    if samples == 0 {
        return Err(Error::Validation("meso.samples must be at least 1".into()));
    }
    let grid = match &raw.meso.grid {
        Some(g) => GridSpec::covering(point(g.min), point(g.max), g.spacing)?,
        None => default_grid(&env, &followers.region)?,
    };
    let meso = MesoSpec {
        samples,
        batch: raw.meso.batch.unwrap_or((samples / 10).max(1)),
        rho_top: raw.meso.rho_top,
        bandwidth: raw.meso.bandwidth.unwrap_or(0.4),
        grid,
        density_steps: raw
            .meso
            .density_steps
            .clone()
            .unwrap_or_else(|| vec![0, steps / 2, steps]),
    };

    let o = &raw.optimize;
    let optimize = OptimizeSpec {
        iterations: o.iterations.unwrap_or(50),
        n_switch: o.n_switch.unwrap_or(10),
        perturbation_scale: o.perturbation_scale.unwrap_or(1.0),
        target_cost: o.target_cost.unwrap_or(0.0),
        evaluations: o.evaluations.unwrap_or(1),
        seed: o.seed,
    };

    let scenario = Scenario {
        name: raw.name,
        description: raw.description,
        params,
        explicit_masses,
        env,
        followers,
        leaders,
        objective,
        run,
        meso,
        optimize,
        source: text.to_string(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Bounding box of exits, walls and the initial crowd, padded by 2 m, at
/// 0.5 m spacing.
fn default_grid(env: &Environment, crowd: &Region) -> Result<GridSpec> {
    let mut lo = crowd.min;
    let mut hi = crowd.max;
    let mut grow = |p: Vec2| {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    };
    for e in &env.exits {
        grow(e.position);
    }
    for w in &env.walls {
        grow(w.a);
        grow(w.b);
    }
    let pad = Vec2::repeat(2.0);
    GridSpec::covering(lo - pad, hi + pad, 0.5)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.checked_params()?;
        if self.meso.batch == 0 || self.meso.batch > self.meso.samples {
            return Err(Error::Validation(format!(
                "meso.batch must lie in [1, {}], got {}",
                self.meso.samples, self.meso.batch
            )));
        }
        if !(self.meso.bandwidth > 0.0) {
            return Err(Error::Validation("meso.bandwidth must be positive".into()));
        }
        if let Some(r) = self.meso.rho_top {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Validation("meso.rho_top must lie in (0, 1]".into()));
            }
        }
        let o = &self.optimize;
        if o.iterations == 0
            || o.n_switch < 2
            || !(o.perturbation_scale >= 0.0)
            || o.evaluations == 0
        {
            return Err(Error::Validation(
                "optimize needs iterations >= 1, n_switch >= 2, perturbation_scale >= 0, evaluations >= 1"
                    .into(),
            ));
        }
        let r = &self.followers.region;
        let corners = [r.min, r.max, vec2(r.min.x, r.max.y), vec2(r.max.x, r.min.y)];
        if corners.iter().all(|c| self.env.inside_wall(c).is_some()) {
            return Err(Error::Validation("follower box lies inside a wall".into()));
        }
        Ok(())
    }

    pub fn leader_count(&self) -> usize {
        self.leaders.len()
    }

    /// Same scenario without the aware leaders; selfish leaders stay.
    pub fn uncontrolled(&self) -> Self {
        let mut s = self.clone();
        s.leaders.retain(|l| !l.strategy.aware);
        s.name = format!("{}-uncontrolled", self.name);
        s
    }

    /// Model parameters with the mass fractions filled in. Unless the file
    /// sets them, every agent carries the same mass.
    pub fn checked_params(&self) -> Result<ModelParams> {
        let mut p = self.params.clone();
        if !self.explicit_masses {
            p = p.with_equal_masses(self.followers.count, self.leaders.len());
        } else if self.leaders.is_empty() && p.rho_l > 0.0 {
            return Err(Error::Validation(
                "rho_l > 0 but the scenario has no leaders".into(),
            ));
        }
        p.validate()?;
        Ok(p)
    }

    pub fn params(&self) -> ModelParams {
        self.checked_params().expect("validated at load")
    }

    pub fn mfmc_config(&self) -> MfmcConfig {
        let p = self.params();
        MfmcConfig {
            batch_size: self.meso.batch,
            rho_top: self
                .meso
                .rho_top
                .unwrap_or(p.n_top as f64 / self.followers.count as f64),
            bandwidth: self.meso.bandwidth,
        }
    }

    pub fn scale(&self, meso: bool) -> Scale {
        if meso {
            Scale::Meso(self.mfmc_config())
        } else {
            Scale::Micro
        }
    }

    /// Initial crowd for `seed`. Followers (or samples at the meso scale)
    /// and leaders come from separate streams, so removing the leaders keeps
    /// the follower positions.
    pub fn initial_state(&self, seed: u64, meso: bool) -> Result<CrowdState> {
        let p = self.params();
        let n = if meso {
            self.meso.samples
        } else {
            self.followers.count
        };
        let mut rng = seeded(derive(seed, INITIAL_TAG));
        let weight = p.rho_f / n as f64;
        let mut followers = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.free_point(&mut rng, &self.followers.region)?;
            let v = self.followers.velocity.sample(&mut rng);
            followers.push(FollowerState::new(x, v, weight));
        }

        let mut rng = seeded(derive(seed, LEADER_TAG));
        let leader_mass = if self.leaders.is_empty() {
            0.0
        } else {
            p.rho_l / self.leaders.len() as f64
        };
        let mut leaders = Vec::with_capacity(self.leaders.len());
        for spec in &self.leaders {
            let y = match (spec.position, &spec.region) {
                (Some(y), _) => y,
                (None, Some(r)) => self.free_point(&mut rng, r)?,
                (None, None) => self.free_point(&mut rng, &self.followers.region)?,
            };
            let exit = spec.exit.unwrap_or_else(|| self.nearest_exit(&y));
            let plan = WaypointPlan::new(spec.waypoints.clone(), self.env.exits[exit].position)?;
            let strategy = LeaderStrategy {
                plan,
                exit,
                ..spec.strategy.clone()
            };
            leaders.push(LeaderState::new(y, leader_mass, strategy));
        }
        Ok(CrowdState::new(followers, leaders))
    }

    fn nearest_exit(&self, y: &Vec2) -> usize {
        let mut best = 0;
        for (e, exit) in self.env.exits.iter().enumerate() {
            if (exit.position - y).norm() < (self.env.exits[best].position - y).norm() {
                best = e;
            }
        }
        best
    }

    fn free_point<R: Rng>(&self, rng: &mut R, region: &Region) -> Result<Vec2> {
        for _ in 0..10_000 {
            let x = region.sample(rng);
            if self.env.inside_wall(&x).is_none() {
                return Ok(x);
            }
        }
        Err(Error::Validation(
            "could not place an agent outside the walls".into(),
        ))
    }

    pub fn run_config(&self, meso: bool, seed: u64) -> RunConfig {
        RunConfig {
            horizon_steps: self.run.steps,
            record_stride: self.run.record_stride,
            scale: self.scale(meso),
            seed: derive(seed, 3),
            density: meso.then(|| DensityOutput {
                grid: self.meso.grid.clone(),
                bandwidth: self.meso.bandwidth,
                steps: self.meso.density_steps.clone(),
            }),
        }
    }

    /// Builds the initial data for `seed` and runs it.
    pub fn simulate(
        &self,
        meso: bool,
        seed: u64,
        schedule: Option<&ControlSchedule>,
    ) -> Result<SimResult> {
        let initial = self.initial_state(seed, meso)?;
        simulate(
            &self.params(),
            &self.env,
            &initial,
            schedule,
            &self.run_config(meso, seed),
        )
    }

    /// Like [`Scenario::simulate`] without trajectories or density grids.
    pub fn evaluate_run(
        &self,
        meso: bool,
        seed: u64,
        schedule: Option<&ControlSchedule>,
    ) -> Result<SimResult> {
        let initial = self.initial_state(seed, meso)?;
        let mut cfg = self.run_config(meso, seed);
        cfg.record_stride = 0;
        cfg.density = None;
        simulate(&self.params(), &self.env, &initial, schedule, &cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(steps) = o.steps {
            if steps == 0 {
                return Err(Error::Validation("--steps must be at least 1".into()));
            }
            self.run.steps = steps;
        }
        if let Some(batch) = o.batch {
            self.meso.batch = batch;
        }
        if let Some(iters) = o.iterations {
            self.optimize.iterations = iters;
        }
        self.validate()
    }
}
