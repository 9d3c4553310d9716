//! Randomized compass search over the control points of aware leaders.
//!
//! Every iteration shifts all control points of the incumbent schedule by
//! independent `scale * Unif([-1, 1]^2)` draws, simulates the candidate and
//! keeps it when its cost does not exceed the incumbent's. The search runs
//! while fewer than `j_max` candidates were tried and the incumbent is still
//! above the target cost.

use rand::Rng;
use rayon::prelude::*;

use crate::control::{ControlSchedule, LeaderSchedule};
use crate::objective::{evaluate, ObjectiveSpec};
use crate::rng::{derive, seeded};
use crate::scenario::Scenario;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct CompassConfig {
    pub j_max: usize,
    /// Stop once the incumbent cost is at or below this value.
    pub target_cost: f64,
    pub perturbation_scale: f64,
    pub n_switch: usize,
    pub seed: u64,
    pub evaluations_per_candidate: usize,
}

impl CompassConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 {
            return Err(Error::Validation("j_max must be at least 1".into()));
        }
        if !(self.perturbation_scale >= 0.0) || !self.perturbation_scale.is_finite() {
            return Err(Error::Validation(
                "perturbation scale must be finite and >= 0".into(),
            ));
        }
        if self.n_switch < 2 {
            return Err(Error::Validation(
                "at least two switch times are required".into(),
            ));
        }
        if self.evaluations_per_candidate == 0 {
            return Err(Error::Validation(
                "evaluations per candidate must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub candidate_cost: f64,
    pub accepted: bool,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub initial_cost: f64,
    pub records: Vec<IterRecord>,
    pub best_schedule: ControlSchedule,
    pub best_cost: f64,
    /// Calls of the cost function, the initial one included.
    pub cost_evaluations: usize,
}

/// Shifts every control point by `scale * B` with `B ~ Unif([-1, 1]^2)`.
pub fn perturb_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    schedule: &ControlSchedule,
    scale: f64,
) -> ControlSchedule {
    let mut out = schedule.clone();
    for l in &mut out.leaders {
        for p in &mut l.points {
            let bx: f64 = rng.random_range(-1.0..=1.0);
            let by: f64 = rng.random_range(-1.0..=1.0);
            p.x += scale * bx;
            p.y += scale * by;
        }
    }
    out
}

/// Compass search with a caller-supplied cost. Errors from `cost` abort the
/// search.
pub fn compass_search<F>(
    initial: &ControlSchedule,
    config: &CompassConfig,
    mut cost: F,
) -> Result<SearchTrace>
where
    F: FnMut(&ControlSchedule) -> Result<f64>,
{
    config.validate()?;
    let mut rng = seeded(config.seed);
    let initial_cost = cost(initial)?;
    let mut best = initial.clone();
    let mut best_cost = initial_cost;
    let mut records = Vec::new();
    let mut j = 0;
    while j < config.j_max && best_cost > config.target_cost {
        let candidate = perturb_schedule(&mut rng, &best, config.perturbation_scale);
        let c = cost(&candidate)?;
        // NaN costs are never accepted
        let accepted = c <= best_cost;
        if accepted {
            best = candidate;
            best_cost = c;
        }
        j += 1;
        records.push(IterRecord {
            iteration: j,
            candidate_cost: c,
            accepted,
            best_cost,
        });
    }
    Ok(SearchTrace {
        initial_cost,
        cost_evaluations: records.len() + 1,
        records,
        best_schedule: best,
        best_cost,
    })
}

/// Seeds of the replicate simulations behind one cost evaluation. The first
/// replicate uses the run seed itself.
pub fn replicate_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count)
        .map(|r| if r == 0 { seed } else { derive(seed, r as u64) })
        .collect()
}

/// Point at arc length `s` along a polyline; the last vertex past its end.
fn point_at_arc_length(path: &[Vec2], s: f64) -> Vec2 {
    let mut left = s;
    for w in path.windows(2) {
        let len = (w[1] - w[0]).norm();
        if len > 0.0 && left <= len {
            return w[0] + (w[1] - w[0]) * (left / len);
        }
        left -= len;
    }
    *path.last().expect("paths hold the initial position")
}

/// Schedule for the aware leaders traced along their go-to-target paths at
/// `n_switch` uniform switch times over the objective horizon.
///
/// A schedule moves a leader at its constant control speed, so the control
/// point at `t_m` is the point at arc length `speed * t_m` along the path,
/// which ends at the leader's exit. Sampling by time instead would leave the
/// scheduled leader drifting away from the path whenever the go-to-target
/// speed differs from the control speed.
pub fn initial_schedule(
    scenario: &Scenario,
    meso: bool,
    seed: u64,
    n_switch: usize,
    horizon: f64,
) -> Result<ControlSchedule> {
    let run = scenario.evaluate_run(meso, seed, None)?;
    let times = ControlSchedule::uniform_times(n_switch, horizon);
    let dt = run.dt;
    let state = &run.final_state;
    let mut leaders = Vec::new();
    for (k, l) in state.leaders.iter().enumerate().filter(|(_, l)| l.aware()) {
        let mut path = run.leader_paths[k].clone();
        if let Some(te) = l.evacuated_at {
            path.truncate((te / dt).round() as usize + 1);
            path.push(scenario.env.exits[l.strategy.exit].position);
        }
        let speed = l.strategy.control_speed;
        let points = times
            .iter()
            .map(|t| point_at_arc_length(&path, speed * t))
            .collect();
        leaders.push(LeaderSchedule {
            leader: k,
            origin: path[0],
            points,
            speed,
        });
    }
    ControlSchedule::new(times, leaders)
}

/// Mean objective over the replicate seeds; replicates run in parallel and
/// are summed in seed order.
pub fn scenario_cost(
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    meso: bool,
    seeds: &[u64],
    schedule: &ControlSchedule,
) -> Result<f64> {
    let costs: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            scenario
                .evaluate_run(meso, s, Some(schedule))
                .map(|r| evaluate(&r, objective))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub initial_schedule: ControlSchedule,
    pub trace: SearchTrace,
}

/// Compass search on a scenario, starting from the go-to-target schedule.
pub fn optimize_scenario(
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    config: &CompassConfig,
    meso: bool,
    run_seed: u64,
) -> Result<Optimized> {
    config.validate()?;
    if !scenario.leaders.iter().any(|l| l.strategy.aware) {
        return Err(Error::Validation(
            "scenario has no aware leaders to optimize".into(),
        ));
    }
    let initial = initial_schedule(scenario, meso, run_seed, config.n_switch, objective.horizon)?;
    let seeds = replicate_seeds(run_seed, config.evaluations_per_candidate);
    let trace = compass_search(&initial, config, |s| {
        scenario_cost(scenario, objective, meso, &seeds, s)
    })?;
    Ok(Optimized {
        initial_schedule: initial,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2;

    fn schedule() -> ControlSchedule {
        ControlSchedule::new(
            vec![1.0, 2.0, 3.0],
            vec![LeaderSchedule {
                leader: 0,
                origin: Vec2::zeros(),
                points: vec![vec2(1.0, 0.0), vec2(2.0, 0.0), vec2(3.0, 0.0)],
                speed: 1.0,
            }],
        )
        .unwrap()
    }

    fn config(j_max: usize, seed: u64) -> CompassConfig {
        CompassConfig {
            j_max,
            target_cost: 0.0,
            perturbation_scale: 1.0,
            n_switch: 3,
            seed,
            evaluations_per_candidate: 1,
        }
    }

    fn surrogate(target: Vec2) -> impl Fn(&ControlSchedule) -> Result<f64> {
        move |s| Ok((s.leaders[0].points.last().unwrap() - target).norm_squared())
    }

    #[test]
    fn perturbation_cases() {
        let s = schedule();
        assert_eq!(perturb_schedule(&mut seeded(1), &s, 0.0), s);
        let a = perturb_schedule(&mut seeded(4), &s, 0.7);
        let b = perturb_schedule(&mut seeded(4), &s, 0.7);
        assert_eq!(a, b);
        assert_eq!(a.switch_times, s.switch_times);
        for (p, q) in a.leaders[0].points.iter().zip(&s.leaders[0].points) {
            assert!((p - q).abs().max() <= 0.7);
        }
    }

    #[test]
    fn arc_length_points() {
        let path = [vec2(0.0, 0.0), vec2(3.0, 0.0), vec2(3.0, 4.0)];
        assert_eq!(point_at_arc_length(&path, 0.0), vec2(0.0, 0.0));
        assert_eq!(point_at_arc_length(&path, 1.5), vec2(1.5, 0.0));
        assert_eq!(point_at_arc_length(&path, 5.0), vec2(3.0, 2.0));
        assert_eq!(point_at_arc_length(&path, 9.0), vec2(3.0, 4.0));
        let still = [vec2(1.0, 1.0), vec2(1.0, 1.0)];
        assert_eq!(point_at_arc_length(&still, 2.0), vec2(1.0, 1.0));
    }

    #[test]
    fn single_iteration_evaluates_one_candidate() {
        let mut calls = 0;
        let t = compass_search(&schedule(), &config(1, 0), |_| {
            calls += 1;
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(calls, 2);
        assert_eq!(t.cost_evaluations, 2);
    }

    #[test]
    fn target_met_at_start_stops_at_once() {
        let t = compass_search(&schedule(), &config(10, 0), |_| Ok(0.0)).unwrap();
        assert!(t.records.is_empty());
        assert_eq!(t.cost_evaluations, 1);
        assert!(config(0, 0).validate().is_err());
    }

    #[test]
    fn ties_are_accepted_and_nan_rejected() {
        let t = compass_search(&schedule(), &config(3, 0), |_| Ok(2.0)).unwrap();
        assert!(t.records.iter().all(|r| r.accepted));
        let mut first = true;
        let t = compass_search(&schedule(), &config(3, 0), |_| {
            let c = if first { 1.0 } else { f64::NAN };
            first = false;
            Ok(c)
        })
        .unwrap();
        assert!(t.records.iter().all(|r| !r.accepted && r.best_cost == 1.0));
    }

    #[test]
    fn surrogate_beats_random_search() {
        let target = vec2(6.0, -2.0);
        let cost = surrogate(target);
        let initial = schedule();
        let start = cost(&initial).unwrap();
        let mut decreased = 0;
        let mut cs_wins = 0;
        let seeds = 100;
        for seed in 0..seeds {
            let t = compass_search(&initial, &config(200, seed), &cost).unwrap();
            if t.best_cost < start {
                decreased += 1;
            }
            // baseline: 200 independent perturbations of the initial schedule
            let mut rng = seeded(derive(seed, 99));
            let baseline = (0..200)
                .map(|_| cost(&perturb_schedule(&mut rng, &initial, 1.0)).unwrap())
                .fold(start, f64::min);
            if t.best_cost <= baseline {
                cs_wins += 1;
            }
        }
        assert!(decreased >= 99, "decreased in {decreased}/{seeds}");
        assert!(
            cs_wins >= 90,
            "compass search beat random search in {cs_wins}/{seeds}"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn best_cost_never_increases(seed in 0u64..1000, tx in -5.0f64..5.0, ty in -5.0f64..5.0) {
                let t = compass_search(&schedule(), &config(40, seed), surrogate(vec2(tx, ty))).unwrap();
                let mut prev = t.initial_cost;
                for r in &t.records {
                    prop_assert!(r.best_cost <= prev);
                    prev = r.best_cost;
                }
            }

            #[test]
            fn zero_scale_keeps_the_incumbent_cost(seed in 0u64..1000) {
                let cfg = CompassConfig { perturbation_scale: 0.0, ..config(10, seed) };
                let t = compass_search(&schedule(), &cfg, surrogate(vec2(1.0, 1.0))).unwrap();
                prop_assert!(t.records.iter().all(|r| r.best_cost == t.initial_cost));
            }
        }
    }
}
