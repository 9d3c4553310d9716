//! Leader controls: the closed-loop go-to-target blend and piecewise-constant
//! schedules built from control points.

use crate::micro::CrowdState;
use crate::{unit_or_zero, Error, Result, Vec2};

/// Slack when locating a time inside the switch-time grid, so that
/// `n * dt` lands on the interval that starts at the matching switch time.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub position: Vec2,
    /// The waypoint is the active target while `t < until`.
    pub until: f64,
}

/// Time-indexed targets ending at an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    waypoints: Vec<Waypoint>,
}

impl WaypointPlan {
    /// Intermediate `(position, until_time)` points followed by the exit.
    pub fn new(intermediate: Vec<(Vec2, f64)>, exit: Vec2) -> Result<Self> {
        let mut waypoints = Vec::with_capacity(intermediate.len() + 1);
        let mut last = f64::NEG_INFINITY;
        for (position, until) in intermediate {
            if !(until > last) || !until.is_finite() {
                return Err(Error::Validation(format!(
                    "waypoint switch times must be finite and strictly increasing, got {until} after {last}"
                )));
            }
            last = until;
            waypoints.push(Waypoint { position, until });
        }
        waypoints.push(Waypoint {
            position: exit,
            until: f64::INFINITY,
        });
        Ok(Self { waypoints })
    }

    pub fn direct(exit: Vec2) -> Self {
        Self {
            waypoints: vec![Waypoint {
                position: exit,
                until: f64::INFINITY,
            }],
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn target_at(&self, t: f64) -> Vec2 {
        self.waypoints
            .iter()
            .find(|w| t < w.until)
            .unwrap_or_else(|| self.waypoints.last().expect("plan has an exit"))
            .position
    }

    pub fn final_target(&self) -> Vec2 {
        self.waypoints.last().expect("plan has an exit").position
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderStrategy {
    /// Optimized leaders take their control from a schedule when one is given.
    pub aware: bool,
    /// Weight of the pull towards the target versus the followers' centre.
    pub beta: f64,
    pub plan: WaypointPlan,
    /// Index of the exit the plan ends at.
    pub exit: usize,
    /// Speed given to the unit directions of a schedule.
    pub control_speed: f64,
}

impl LeaderStrategy {
    pub fn new(
        aware: bool,
        beta: f64,
        plan: WaypointPlan,
        exit: usize,
        control_speed: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Validation(format!(
                "beta must lie in [0, 1], got {beta}"
            )));
        }
        if !(control_speed > 0.0) {
            return Err(Error::Validation(format!(
                "control speed must be positive, got {control_speed}"
            )));
        }
        Ok(Self {
            aware,
            beta,
            plan,
            exit,
            control_speed,
        })
    }
}

/// `β (Ξ(t) − y)/|Ξ(t) − y| + (1 − β)(m_F − y)`. Without followers left the
/// control is the unit pursuit direction.
pub fn go_to_target_control(
    strategy: &LeaderStrategy,
    y: &Vec2,
    followers_center: Option<Vec2>,
    t: f64,
) -> Vec2 {
    let pursuit = unit_or_zero(strategy.plan.target_at(t) - y);
    match followers_center {
        Some(m) => pursuit * strategy.beta + (m - y) * (1.0 - strategy.beta),
        None => pursuit,
    }
}

/// Mass-weighted mean position of the active followers.
pub fn followers_center_of_mass(state: &CrowdState) -> Result<Vec2> {
    let mut mass = 0.0;
    let mut sum = Vec2::zeros();
    for f in state.followers.iter().filter(|f| f.active()) {
        mass += f.mass;
        sum += f.pos * f.mass;
    }
    if mass > 0.0 {
        Ok(sum / mass)
    } else {
        Err(Error::NoActiveFollowers)
    }
}

/// Control points of one optimized leader.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSchedule {
    pub leader: usize,
    /// Position at `t = 0`; the first segment runs from here to `points[0]`.
    pub origin: Vec2,
    /// One control point per switch time.
    pub points: Vec<Vec2>,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    pub switch_times: Vec<f64>,
    pub leaders: Vec<LeaderSchedule>,
}

impl ControlSchedule {
    pub fn new(switch_times: Vec<f64>, leaders: Vec<LeaderSchedule>) -> Result<Self> {
        if switch_times.is_empty() {
            return Err(Error::Validation(
                "schedule needs at least one switch time".into(),
            ));
        }
        if switch_times.windows(2).any(|w| !(w[1] > w[0])) || !(switch_times[0] > 0.0) {
            return Err(Error::Validation(
                "switch times must be positive and strictly increasing".into(),
            ));
        }
        for l in &leaders {
            if l.points.len() != switch_times.len() {
                return Err(Error::Validation(format!(
                    "leader {} has {} control points for {} switch times",
                    l.leader,
                    l.points.len(),
                    switch_times.len()
                )));
            }
            if !(l.speed > 0.0) {
                return Err(Error::Validation(format!(
                    "leader {} has non-positive control speed",
                    l.leader
                )));
            }
        }
        Ok(Self {
            switch_times,
            leaders,
        })
    }

    /// `n` switch times `T/n, 2T/n, ..., T`.
    pub fn uniform_times(n: usize, horizon: f64) -> Vec<f64> {
        (1..=n).map(|m| m as f64 * horizon / n as f64).collect()
    }

    pub fn leader(&self, k: usize) -> Option<&LeaderSchedule> {
        self.leaders.iter().find(|l| l.leader == k)
    }

    /// Scaled unit direction of the segment active at `t` for leader `k`,
    /// or `None` when the leader is not scheduled.
    ///
    /// Intervals are right-continuous: at `t = t_m` the segment from `P(t_m)`
    /// to `P(t_{m+1})` applies. Past the last switch time, and on degenerate
    /// segments, the control is zero.
    pub fn control(&self, k: usize, t: f64) -> Option<Vec2> {
        let l = self.leader(k)?;
        // number of switch times already reached
        let reached = self
            .switch_times
            .iter()
            .take_while(|&&tm| t + TIME_SLACK >= tm)
            .count();
        let (from, to) = match reached {
            0 => (l.origin, l.points[0]),
            m if m < l.points.len() => (l.points[m - 1], l.points[m]),
            _ => return Some(Vec2::zeros()),
        };
        Some(unit_or_zero(to - from) * l.speed)
    }

    /// Copy with origins taken from the leaders' positions in `state`.
    pub fn with_origins(&self, state: &CrowdState) -> Self {
        let mut out = self.clone();
        for l in &mut out.leaders {
            if let Some(leader) = state.leaders.get(l.leader) {
                l.origin = leader.pos;
            }
        }
        out
    }
}

/// Free-function form of [`ControlSchedule::control`]; unscheduled leaders get zero.
pub fn schedule_to_control(schedule: &ControlSchedule, k: usize, t: f64) -> Vec2 {
    schedule.control(k, t).unwrap_or_else(Vec2::zeros)
}

/// Per-leader controls for the current state: scheduled aware leaders follow
/// the schedule, every other leader uses its go-to-target strategy.
pub fn leader_controls(state: &CrowdState, schedule: Option<&ControlSchedule>) -> Vec<Vec2> {
    let center = followers_center_of_mass(state).ok();
    state
        .leaders
        .iter()
        .enumerate()
        .map(|(k, leader)| {
            if !leader.active() {
                return Vec2::zeros();
            }
            if leader.aware() {
                if let Some(u) = schedule.and_then(|s| s.control(k, state.time)) {
                    return u;
                }
            }
            go_to_target_control(&leader.strategy, &leader.pos, center, state.time)
        })
        .collect()
}
