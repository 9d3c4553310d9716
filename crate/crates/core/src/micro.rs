//! Microscopic follower–leader model.
//!
//! Followers are second order: `x' = v`, `v' = S(x, v) + Σ m_j H^F + Σ m_l H^L`
//! where `S` relaxes towards the characteristic speed and, inside a
//! visibility area, towards the exit; `H^F`/`H^L` combine metrical repulsion
//! with topological alignment. Leaders are first order: their velocity is
//! the sum of metrical repulsion terms and an external control.

use crate::control::LeaderStrategy;
use crate::env::Environment;
use crate::{unit_or_zero, Error, Result, Vec2};

/// Relative slack when comparing accumulated mass against a target, so that
/// a sum of `k` equal weights matches `k * weight`.
pub(crate) const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub c_s: f64,
    pub c_tau: f64,
    pub c_r_f: f64,
    pub c_r_l: f64,
    pub c_al_f: f64,
    pub c_al_l: f64,
    /// Squared characteristic speed.
    pub s2: f64,
    /// Repulsion radius.
    pub r: f64,
    /// Repulsion exponent felt by followers.
    pub gamma: f64,
    /// Repulsion exponent felt by leaders.
    pub zeta: f64,
    /// Topological neighbour count, the centre agent included.
    pub n_top: usize,
    pub rho_f: f64,
    pub rho_l: f64,
    pub dt: f64,
}

impl ModelParams {
    /// Reference coefficients shared by all bundled scenarios, with the whole
    /// mass on followers.
    pub fn reference() -> Self {
        Self {
            c_s: 0.5,
            c_tau: 1.0,
            c_r_f: 2.0,
            c_r_l: 1.5,
            c_al_f: 3.0,
            c_al_l: 3.0,
            s2: 0.4,
            r: 1.0,
            gamma: 1.0,
            zeta: 1.0,
            n_top: 20,
            rho_f: 1.0,
            rho_l: 0.0,
            dt: 0.1,
        }
    }

    /// Equal individual masses for `n_f` followers and `n_l` leaders.
    pub fn with_equal_masses(mut self, n_f: usize, n_l: usize) -> Self {
        let total = (n_f + n_l) as f64;
        self.rho_f = n_f as f64 / total;
        self.rho_l = 1.0 - self.rho_f;
        self
    }

    pub fn speed(&self) -> f64 {
        self.s2.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_s", self.c_s),
            ("c_tau", self.c_tau),
            ("c_r_f", self.c_r_f),
            ("c_r_l", self.c_r_l),
            ("c_al_f", self.c_al_f),
            ("c_al_l", self.c_al_l),
            ("s2", self.s2),
            ("r", self.r),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Validation(format!(
                    "model parameter {name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.n_top == 0 {
            return Err(Error::Validation("n_top must be at least 1".into()));
        }
        if !(self.rho_f > 0.0) || !(self.rho_l >= 0.0) {
            return Err(Error::Validation(format!(
                "mass fractions must be positive, got rho_f = {}, rho_l = {}",
                self.rho_f, self.rho_l
            )));
        }
        if (self.rho_f + self.rho_l - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "mass constraint violated: rho_f + rho_l must equal 1, got {} + {} = {}",
                self.rho_f,
                self.rho_l,
                self.rho_f + self.rho_l
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub mass: f64,
    pub evacuated_at: Option<f64>,
    pub exit: Option<usize>,
}

impl FollowerState {
    pub fn new(pos: Vec2, vel: Vec2, mass: f64) -> Self {
        Self {
            pos,
            vel,
            mass,
            evacuated_at: None,
            exit: None,
        }
    }

    pub fn active(&self) -> bool {
        self.evacuated_at.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    pub pos: Vec2,
    /// Velocity used for the last step (right-hand side of the leader equation).
    pub vel: Vec2,
    pub mass: f64,
    pub strategy: LeaderStrategy,
    pub evacuated_at: Option<f64>,
    pub exit: Option<usize>,
}

impl LeaderState {
    pub fn new(pos: Vec2, mass: f64, strategy: LeaderStrategy) -> Self {
        Self {
            pos,
            vel: Vec2::zeros(),
            mass,
            strategy,
            evacuated_at: None,
            exit: None,
        }
    }

    pub fn active(&self) -> bool {
        self.evacuated_at.is_none()
    }

    pub fn aware(&self) -> bool {
        self.strategy.aware
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrowdState {
    pub followers: Vec<FollowerState>,
    pub leaders: Vec<LeaderState>,
    pub step: usize,
    pub time: f64,
}

impl CrowdState {
    pub fn new(followers: Vec<FollowerState>, leaders: Vec<LeaderState>) -> Self {
        Self {
            followers,
            leaders,
            step: 0,
            time: 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.followers.iter().map(|f| f.mass).sum::<f64>()
            + self.leaders.iter().map(|l| l.mass).sum::<f64>()
    }

    pub fn active_mass(&self) -> f64 {
        self.followers
            .iter()
            .filter(|f| f.active())
            .map(|f| f.mass)
            .sum::<f64>()
            + self
                .leaders
                .iter()
                .filter(|l| l.active())
                .map(|l| l.mass)
                .sum::<f64>()
    }

    pub fn evacuated_mass(&self) -> f64 {
        self.followers
            .iter()
            .filter(|f| !f.active())
            .map(|f| f.mass)
            .sum::<f64>()
            + self
                .leaders
                .iter()
                .filter(|l| !l.active())
                .map(|l| l.mass)
                .sum::<f64>()
    }

    pub fn active_count(&self) -> usize {
        self.followers.iter().filter(|f| f.active()).count()
            + self.leaders.iter().filter(|l| l.active()).count()
    }

    pub fn all_evacuated(&self) -> bool {
        self.active_count() == 0
    }

    /// Marks every active agent standing in a capture disk as evacuated at
    /// the current time.
    pub fn capture(&mut self, env: &Environment) {
        let time = self.time;
        for f in self.followers.iter_mut().filter(|f| f.active()) {
            if let Some(e) = env.capture_exit(&f.pos) {
                f.evacuated_at = Some(time);
                f.exit = Some(e);
            }
        }
        for l in self.leaders.iter_mut().filter(|l| l.active()) {
            if let Some(e) = env.capture_exit(&l.pos) {
                l.evacuated_at = Some(time);
                l.exit = Some(e);
            }
        }
    }
}

/// Metrical repulsion kernel `e^{-d^γ} / d` on `0 < d < r`, zero elsewhere.
pub fn repulsion_kernel(x: &Vec2, y: &Vec2, gamma: f64, r: f64) -> f64 {
    let d = (y - x).norm();
    if d > 0.0 && d < r {
        (-d.powf(gamma)).exp() / d
    } else {
        0.0
    }
}

pub fn self_propulsion(params: &ModelParams, env: &Environment, x: &Vec2, v: &Vec2) -> Vec2 {
    let mut s = v * (params.c_s * (params.s2 - v.norm_squared()));
    if let Some(e) = env.visibility_indicator(x) {
        let towards = unit_or_zero(env.exits[e].position - x);
        s += (towards - v) * params.c_tau;
    }
    s
}

/// Radius of the minimal closed ball holding `k` of the given distances.
pub(crate) fn kth_smallest(scratch: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= scratch.len());
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *kth
}

/// Members of the minimal closed ball around `positions[center]` holding at
/// least `n_top` agents, the centre included. Agents tied at the boundary
/// radius are all members.
pub fn topological_ball(center: usize, positions: &[Vec2], n_top: usize) -> Result<Vec<usize>> {
    if n_top > positions.len() || n_top == 0 {
        return Err(Error::InsufficientAgents {
            needed: n_top,
            available: positions.len(),
        });
    }
    let x = positions[center];
    let dists: Vec<f64> = positions.iter().map(|p| (p - x).norm()).collect();
    let mut scratch = dists.clone();
    let radius = kth_smallest(&mut scratch, n_top);
    Ok(dists
        .iter()
        .enumerate()
        .filter(|(_, d)| **d <= radius)
        .map(|(i, _)| i)
        .collect())
}

/// Acceleration of a follower split by mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerForces {
    pub self_propulsion: Vec2,
    pub repulsion: Vec2,
    pub alignment: Vec2,
}

impl FollowerForces {
    pub fn total(&self) -> Vec2 {
        self.self_propulsion + self.repulsion + self.alignment
    }
}

pub fn follower_forces(
    params: &ModelParams,
    env: &Environment,
    state: &CrowdState,
    i: usize,
) -> FollowerForces {
    let me = &state.followers[i];
    let x = me.pos;
    let v = me.vel;

    let mut repulsion = Vec2::zeros();
    for (j, other) in state.followers.iter().enumerate() {
        if j == i || !other.active() {
            continue;
        }
        let k = repulsion_kernel(&x, &other.pos, params.gamma, params.r);
        if k != 0.0 {
            repulsion -= (other.pos - x) * (other.mass * params.c_r_f * k);
        }
    }
    for leader in state.leaders.iter().filter(|l| l.active()) {
        let k = repulsion_kernel(&x, &leader.pos, params.gamma, params.r);
        if k != 0.0 {
            repulsion -= (leader.pos - x) * (leader.mass * params.c_r_l * k);
        }
    }

    let mut alignment = Vec2::zeros();
    if env.visibility_indicator(&x).is_none() {
        let follower_d: Vec<(usize, f64)> = state
            .followers
            .iter()
            .enumerate()
            .filter(|(_, f)| f.active())
            .map(|(j, f)| (j, (f.pos - x).norm()))
            .collect();
        let leader_d: Vec<(usize, f64)> = state
            .leaders
            .iter()
            .enumerate()
            .filter(|(_, l)| l.active())
            .map(|(j, l)| (j, (l.pos - x).norm()))
            .collect();
        let mut scratch: Vec<f64> = follower_d
            .iter()
            .chain(leader_d.iter())
            .map(|(_, d)| *d)
            .collect();
        let k = params.n_top.min(scratch.len());
        let radius = kth_smallest(&mut scratch, k);
        for &(j, d) in &follower_d {
            if d <= radius {
                let other = &state.followers[j];
                alignment += (other.vel - v) * (other.mass * params.c_al_f);
            }
        }
        for &(j, d) in &leader_d {
            if d <= radius {
                let other = &state.leaders[j];
                alignment += (other.vel - v) * (other.mass * params.c_al_l);
            }
        }
    }

    FollowerForces {
        self_propulsion: self_propulsion(params, env, &x, &v),
        repulsion,
        alignment,
    }
}

pub fn follower_acceleration(
    params: &ModelParams,
    env: &Environment,
    state: &CrowdState,
    i: usize,
) -> Vec2 {
    follower_forces(params, env, state, i).total()
}

/// Leader velocity: repulsion from every other active agent plus the control `u`.
pub fn leader_velocity(params: &ModelParams, state: &CrowdState, k: usize, u: &Vec2) -> Vec2 {
    let y = state.leaders[k].pos;
    let mut w = *u;
    for f in state.followers.iter().filter(|f| f.active()) {
        let kern = repulsion_kernel(&y, &f.pos, params.zeta, params.r);
        if kern != 0.0 {
            w -= (f.pos - y) * (f.mass * params.c_r_l * kern);
        }
    }
    for (l, other) in state.leaders.iter().enumerate() {
        if l == k || !other.active() {
            continue;
        }
        let kern = repulsion_kernel(&y, &other.pos, params.zeta, params.r);
        if kern != 0.0 {
            w -= (other.pos - y) * (other.mass * params.c_r_l * kern);
        }
    }
    w
}

/// Leader velocities for the current state (obstacle cut-off applied),
/// written into a copy of the state so that followers align with them.
pub(crate) fn with_leader_velocities(
    params: &ModelParams,
    env: &Environment,
    state: &CrowdState,
    controls: &[Vec2],
) -> CrowdState {
    let mut next = state.clone();
    for k in 0..state.leaders.len() {
        if !state.leaders[k].active() {
            continue;
        }
        let u = controls.get(k).copied().unwrap_or_else(Vec2::zeros);
        let w = leader_velocity(params, state, k, &u);
        next.leaders[k].vel = env.project_velocity(&state.leaders[k].pos, &w, params.dt);
    }
    next
}

/// Moves leaders with their velocities, advances time and captures agents.
pub(crate) fn finish_step(params: &ModelParams, env: &Environment, state: &mut CrowdState) {
    for l in state.leaders.iter_mut().filter(|l| l.active()) {
        l.pos += l.vel * params.dt;
    }
    state.step += 1;
    state.time = state.step as f64 * params.dt;
    state.capture(env);
}

/// One forward Euler step. Velocities are updated first and positions move
/// with the new velocities.
pub fn euler_step(
    params: &ModelParams,
    env: &Environment,
    state: &CrowdState,
    controls: &[Vec2],
) -> CrowdState {
    let current = with_leader_velocities(params, env, state, controls);
    let mut next = current.clone();
    for (i, f) in current.followers.iter().enumerate() {
        if !f.active() {
            continue;
        }
        let acc = follower_acceleration(params, env, &current, i);
        let v = env.project_velocity(&f.pos, &(f.vel + acc * params.dt), params.dt);
        let out = &mut next.followers[i];
        out.vel = v;
        out.pos = f.pos + v * params.dt;
    }
    finish_step(params, env, &mut next);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{LeaderStrategy, WaypointPlan};
    use crate::env::Exit;
    use crate::vec2;
    use approx::assert_relative_eq;

    fn far_exit_env() -> Environment {
        Environment::new(
            vec![Exit::new(vec2(100.0, 100.0), 5.0, 0.5).unwrap()],
            vec![],
            0.1,
        )
        .unwrap()
    }

    fn strategy() -> LeaderStrategy {
        LeaderStrategy::new(false, 1.0, WaypointPlan::direct(vec2(100.0, 100.0)), 0, 1.0).unwrap()
    }

    #[test]
    fn kernel_values() {
        let o = vec2(0.0, 0.0);
        assert_relative_eq!(
            repulsion_kernel(&o, &vec2(0.5, 0.0), 1.0, 1.0),
            (-0.5f64).exp() / 0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            repulsion_kernel(&o, &vec2(0.5, 0.0), 1.0, 1.0),
            1.213061319425267,
            max_relative = 1e-9
        );
        assert_eq!(repulsion_kernel(&o, &vec2(2.0, 0.0), 1.0, 1.0), 0.0);
        assert_eq!(repulsion_kernel(&o, &o, 1.0, 1.0), 0.0);
        assert_eq!(repulsion_kernel(&o, &vec2(1.0, 0.0), 1.0, 1.0), 0.0);
    }

    #[test]
    fn self_propulsion_cases() {
        let mut p = ModelParams::reference();
        let env = far_exit_env();
        let v = vec2(p.speed(), 0.0);
        let s = self_propulsion(&p, &env, &vec2(0.0, 0.0), &v);
        assert!(s.norm() < 1e-15);

        let s = self_propulsion(&p, &env, &vec2(0.0, 0.0), &vec2(1.0, 0.0));
        assert_relative_eq!(s.x, 0.5 * (0.4 - 1.0), max_relative = 1e-12);
        assert_eq!(s.y, 0.0);

        p.c_tau = 1.0;
        let env = Environment::new(
            vec![Exit::new(vec2(1.0, 0.0), 5.0, 0.5).unwrap()],
            vec![],
            0.1,
        )
        .unwrap();
        let s = self_propulsion(&p, &env, &vec2(0.0, 0.0), &vec2(0.0, 0.0));
        assert_eq!(s, vec2(1.0, 0.0));
        // the exit position itself has no direction
        let s = self_propulsion(&p, &env, &vec2(1.0, 0.0), &vec2(0.0, 0.0));
        assert_eq!(s, vec2(0.0, 0.0));
    }

    #[test]
    fn topological_ball_examples() {
        let pts = vec![
            vec2(0.0, 0.0),
            vec2(1.0, 0.0),
            vec2(2.0, 0.0),
            vec2(3.0, 0.0),
        ];
        assert_eq!(topological_ball(0, &pts, 2).unwrap(), vec![0, 1]);
        assert_eq!(topological_ball(0, &pts, 4).unwrap(), vec![0, 1, 2, 3]);
        let tie = vec![
            vec2(0.0, 0.0),
            vec2(1.0, 0.0),
            vec2(0.0, 1.0),
            vec2(3.0, 0.0),
        ];
        assert_eq!(topological_ball(0, &tie, 2).unwrap(), vec![0, 1, 2]);
        assert!(matches!(
            topological_ball(0, &pts, 5),
            Err(Error::InsufficientAgents {
                needed: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn lone_follower_at_characteristic_speed_feels_nothing() {
        let p = ModelParams::reference();
        let env = far_exit_env();
        let state = CrowdState::new(
            vec![FollowerState::new(
                vec2(0.0, 0.0),
                vec2(0.0, p.speed()),
                1.0,
            )],
            vec![],
        );
        assert!(follower_acceleration(&p, &env, &state, 0).norm() < 1e-15);
    }

    #[test]
    fn separated_followers_with_equal_velocities() {
        let mut p = ModelParams::reference();
        p.n_top = 2;
        let env = far_exit_env();
        let v = vec2(0.3, 0.1);
        let state = CrowdState::new(
            vec![
                FollowerState::new(vec2(0.0, 0.0), v, 0.5),
                FollowerState::new(vec2(3.0, 0.0), v, 0.5),
            ],
            vec![],
        );
        let f = follower_forces(&p, &env, &state, 0);
        assert_eq!(f.repulsion, Vec2::zeros());
        assert_eq!(f.alignment, Vec2::zeros());
        assert_eq!(f.total(), self_propulsion(&p, &env, &vec2(0.0, 0.0), &v));
    }

    #[test]
    fn two_follower_repulsion_by_hand() {
        let mut p = ModelParams::reference();
        p.c_r_f = 2.0;
        let env = far_exit_env();
        let state = CrowdState::new(
            vec![
                FollowerState::new(vec2(0.0, 0.0), vec2(0.0, 0.0), 0.5),
                FollowerState::new(vec2(0.5, 0.0), vec2(0.0, 0.0), 0.5),
            ],
            vec![],
        );
        let a = follower_acceleration(&p, &env, &state, 0);
        let expected = -2.0 * 0.5 * ((-0.5f64).exp() / 0.5) * 0.5;
        assert_relative_eq!(a.x, expected, max_relative = 1e-12);
        assert_relative_eq!(a.x, -0.606530659712633, max_relative = 1e-9);
        assert_eq!(a.y, 0.0);
    }

    #[test]
    fn leader_velocity_cases() {
        let p = ModelParams::reference();
        let lone = CrowdState::new(
            vec![],
            vec![LeaderState::new(vec2(0.0, 0.0), 1.0, strategy())],
        );
        assert_eq!(
            leader_velocity(&p, &lone, 0, &vec2(1.0, 0.0)),
            vec2(1.0, 0.0)
        );

        let far = CrowdState::new(
            vec![FollowerState::new(vec2(2.0, 0.0), vec2(0.0, 0.0), 0.5)],
            vec![LeaderState::new(vec2(0.0, 0.0), 0.5, strategy())],
        );
        assert_eq!(leader_velocity(&p, &far, 0, &Vec2::zeros()), Vec2::zeros());

        let near = CrowdState::new(
            vec![FollowerState::new(vec2(0.5, 0.0), vec2(0.0, 0.0), 0.5)],
            vec![LeaderState::new(vec2(0.0, 0.0), 0.5, strategy())],
        );
        let w = leader_velocity(&p, &near, 0, &Vec2::zeros());
        assert_relative_eq!(
            w.x,
            -1.5 * 0.5 * 1.213061319425267 * 0.5,
            max_relative = 1e-9
        );
        assert_relative_eq!(w.x, -0.4548979947844751, max_relative = 1e-9);
        assert_eq!(w.y, 0.0);
    }

    #[test]
    fn euler_step_moves_free_follower() {
        let mut p = ModelParams::reference();
        p.s2 = 1.0;
        let env = far_exit_env();
        let state = CrowdState::new(
            vec![FollowerState::new(vec2(0.0, 0.0), vec2(1.0, 0.0), 1.0)],
            vec![],
        );
        let next = euler_step(&p, &env, &state, &[]);
        assert_relative_eq!(next.followers[0].pos.x, 0.1, max_relative = 1e-15);
        assert_eq!(next.followers[0].pos.y, 0.0);
        assert_eq!(next.step, 1);
        assert_relative_eq!(next.time, 0.1);
    }

    #[test]
    fn all_evacuated_only_advances_time() {
        let p = ModelParams::reference();
        let env = far_exit_env();
        let mut f = FollowerState::new(vec2(100.0, 100.0), vec2(0.0, 0.0), 0.5);
        f.evacuated_at = Some(0.0);
        f.exit = Some(0);
        let mut l = LeaderState::new(vec2(100.0, 100.0), 0.5, strategy());
        l.evacuated_at = Some(0.0);
        l.exit = Some(0);
        let state = CrowdState::new(vec![f], vec![l]);
        let next = euler_step(&p, &env, &state, &[vec2(1.0, 0.0)]);
        assert_eq!(next.followers, state.followers);
        assert_eq!(next.leaders, state.leaders);
        assert_relative_eq!(next.time, state.time + p.dt);
    }

    #[test]
    fn alignment_vanishes_in_visibility_area() {
        let p = ModelParams::reference();
        let env = Environment::new(
            vec![Exit::new(vec2(0.0, 0.0), 5.0, 0.5).unwrap()],
            vec![],
            0.1,
        )
        .unwrap();
        let state = CrowdState::new(
            vec![
                FollowerState::new(vec2(1.0, 1.0), vec2(0.0, 0.0), 0.5),
                FollowerState::new(vec2(1.5, 1.0), vec2(1.0, 0.0), 0.5),
            ],
            vec![],
        );
        let f = follower_forces(&p, &env, &state, 0);
        assert_eq!(f.alignment, Vec2::zeros());
        assert_ne!(f.repulsion, Vec2::zeros());
    }

    #[test]
    fn leaders_look_like_followers_when_coefficients_match() {
        // same mass and coefficients: relabelling a leader as a follower
        // leaves the acceleration of the others unchanged
        let mut p = ModelParams::reference();
        p.c_r_l = p.c_r_f;
        p.c_al_l = p.c_al_f;
        p.n_top = 3;
        let env = far_exit_env();
        let pts = [
            vec2(0.0, 0.0),
            vec2(0.4, 0.2),
            vec2(-0.3, 0.5),
            vec2(0.9, -0.6),
        ];
        let vels = [
            vec2(0.1, 0.2),
            vec2(-0.4, 0.1),
            vec2(0.3, -0.2),
            vec2(0.5, 0.5),
        ];
        let followers: Vec<_> = (0..4)
            .map(|i| FollowerState::new(pts[i], vels[i], 0.2))
            .collect();
        let mut leader = LeaderState::new(vec2(0.2, -0.3), 0.2, strategy());
        leader.vel = vec2(-0.2, 0.7);
        let mixed = CrowdState::new(followers.clone(), vec![leader.clone()]);
        let mut all = followers;
        all.push(FollowerState::new(leader.pos, leader.vel, 0.2));
        let relabelled = CrowdState::new(all, vec![]);
        for i in 0..4 {
            let a = follower_acceleration(&p, &env, &mixed, i);
            let b = follower_acceleration(&p, &env, &relabelled, i);
            assert_relative_eq!(a.x, b.x, epsilon = 1e-15);
            assert_relative_eq!(a.y, b.y, epsilon = 1e-15);
        }
    }

    #[test]
    fn params_validation() {
        let mut p = ModelParams::reference();
        assert!(p.validate().is_ok());
        p.rho_l = 0.1;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("rho_f + rho_l"));
        let mut p = ModelParams::reference();
        p.dt = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::reference();
        p.n_top = 0;
        assert!(p.validate().is_err());
        let p = ModelParams::reference().with_equal_masses(150, 9);
        assert!(p.validate().is_ok());
        assert_relative_eq!(p.rho_f / 150.0, p.rho_l / 9.0, max_relative = 1e-12);
    }
}
