//! Mean-field Monte-Carlo (MFMC) approximation of the follower density.
//!
//! The follower density is represented by `N_s` weighted samples. Each step,
//! every sample draws its own batch of `M` other samples without repetition
//! and evaluates the non-local repulsion and topological alignment on that
//! batch only, for an `O(M N_s)` cost. With `M = N_s` the scheme is the
//! explicit Euler step of the `N_s`-particle system. Leaders stay
//! microscopic and feel the repulsion of all samples.

use rand::Rng;
use rayon::prelude::*;

use crate::env::Environment;
use crate::micro::repulsion_kernel;
use crate::micro::{
    finish_step, self_propulsion, with_leader_velocities, CrowdState, FollowerState, LeaderState,
    ModelParams, MASS_SLACK,
};
use crate::rng::particle_stream;
use crate::{Error, Result, Vec2};

/// Weighted samples of the follower density.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub samples: Vec<FollowerState>,
    pub number_density: f64,
}

impl ParticleEnsemble {
    /// Samples from `(position, velocity)` pairs, each carrying
    /// `number_density / count`.
    pub fn new(phase: Vec<(Vec2, Vec2)>, number_density: f64) -> Result<Self> {
        if phase.is_empty() {
            return Err(Error::Validation(
                "ensemble needs at least one sample".into(),
            ));
        }
        if !(number_density > 0.0) {
            return Err(Error::Validation("number density must be positive".into()));
        }
        let weight = number_density / phase.len() as f64;
        Ok(Self {
            samples: phase
                .into_iter()
                .map(|(x, v)| FollowerState::new(x, v, weight))
                .collect(),
            number_density,
        })
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn weight(&self) -> f64 {
        self.number_density / self.samples.len() as f64
    }

    pub fn active_mass(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.active())
            .map(|s| s.mass)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfmcConfig {
    /// Batch size `M`.
    pub batch_size: usize,
    /// Target topological mass.
    pub rho_top: f64,
    /// Kernel density bandwidth.
    pub bandwidth: f64,
}

impl MfmcConfig {
    pub fn validate(&self, samples: usize, total_mass: f64) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > samples {
            return Err(Error::Validation(format!(
                "batch size must lie in [1, {samples}], got {}",
                self.batch_size
            )));
        }
        if !(self.rho_top > 0.0) || self.rho_top > total_mass * (1.0 + MASS_SLACK) {
            return Err(Error::Validation(format!(
                "target topological mass must lie in (0, {total_mass}], got {}",
                self.rho_top
            )));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Validation("bandwidth must be positive".into()));
        }
        Ok(())
    }
}

/// `m` distinct indices drawn uniformly from `0..n_total`.
pub fn subsample<R: Rng + ?Sized>(rng: &mut R, n_total: usize, m: usize) -> Result<Vec<usize>> {
    if m > n_total {
        return Err(Error::BatchTooLarge {
            batch: m,
            population: n_total,
        });
    }
    Ok(rand::seq::index::sample(rng, n_total, m).into_vec())
}

/// Batch-averaged repulsion strengths and kernel-weighted centroids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatRepulsion {
    pub r_f: f64,
    pub x_hat: Vec2,
    pub r_l: f64,
    pub y_hat: Vec2,
}

impl HatRepulsion {
    /// `R_F (X − x) + R_L (Y − x)`, each term zero when its strength is zero.
    pub fn force(&self, x: &Vec2) -> Vec2 {
        let mut f = Vec2::zeros();
        if self.r_f != 0.0 {
            f += (self.x_hat - x) * self.r_f;
        }
        if self.r_l != 0.0 {
            f += (self.y_hat - x) * self.r_l;
        }
        f
    }
}

/// Batch-averaged alignment strengths and neighbour velocity averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatAlignment {
    pub a_f: f64,
    pub v_hat: Vec2,
    pub a_l: f64,
    pub w_hat: Vec2,
}

impl HatAlignment {
    pub fn force(&self, v: &Vec2) -> Vec2 {
        let mut f = Vec2::zeros();
        if self.a_f != 0.0 {
            f += (self.v_hat - v) * self.a_f;
        }
        if self.a_l != 0.0 {
            f += (self.w_hat - v) * self.a_l;
        }
        f
    }
}

/// `rho_f` is the follower mass the batch stands for; each batch member
/// carries `rho_f / batch.len()`.
pub fn hat_repulsion(
    samples: &[FollowerState],
    leaders: &[LeaderState],
    x: &Vec2,
    batch: &[usize],
    rho_f: f64,
    params: &ModelParams,
) -> HatRepulsion {
    let scale = params.c_r_f * rho_f / batch.len() as f64;
    let mut r_f = 0.0;
    let mut weighted = Vec2::zeros();
    for &j in batch {
        let k = repulsion_kernel(x, &samples[j].pos, params.gamma, params.r);
        if k != 0.0 {
            r_f += scale * k;
            weighted += samples[j].pos * (scale * k);
        }
    }
    let x_hat = if r_f != 0.0 {
        weighted / r_f
    } else {
        Vec2::zeros()
    };

    let mut r_l = 0.0;
    let mut weighted = Vec2::zeros();
    for l in leaders.iter().filter(|l| l.active()) {
        let k = repulsion_kernel(x, &l.pos, params.gamma, params.r);
        if k != 0.0 {
            let c = params.c_r_l * l.mass * k;
            r_l += c;
            weighted += l.pos * c;
        }
    }
    let y_hat = if r_l != 0.0 {
        weighted / r_l
    } else {
        Vec2::zeros()
    };
    HatRepulsion {
        r_f,
        x_hat,
        r_l,
        y_hat,
    }
}

/// Alignment quantities over the closed ball of radius `r_star` around `x`.
pub fn hat_alignment(
    samples: &[FollowerState],
    leaders: &[LeaderState],
    x: &Vec2,
    batch: &[usize],
    rho_f: f64,
    params: &ModelParams,
    r_star: f64,
) -> HatAlignment {
    let scale = params.c_al_f * rho_f / batch.len() as f64;
    let mut a_f = 0.0;
    let mut weighted = Vec2::zeros();
    for &j in batch {
        if (samples[j].pos - x).norm() <= r_star {
            a_f += scale;
            weighted += samples[j].vel * scale;
        }
    }
    let v_hat = if a_f != 0.0 {
        weighted / a_f
    } else {
        Vec2::zeros()
    };

    let mut a_l = 0.0;
    let mut weighted = Vec2::zeros();
    for l in leaders.iter().filter(|l| l.active()) {
        if (l.pos - x).norm() <= r_star {
            let c = params.c_al_l * l.mass;
            a_l += c;
            weighted += l.vel * c;
        }
    }
    let w_hat = if a_l != 0.0 {
        weighted / a_l
    } else {
        Vec2::zeros()
    };
    HatAlignment {
        a_f,
        v_hat,
        a_l,
        w_hat,
    }
}

/// Smallest radius whose closed ball around `x` holds at least `rho_top` of
/// batch-plus-leader mass.
pub fn topological_radius(
    samples: &[FollowerState],
    leaders: &[LeaderState],
    x: &Vec2,
    batch: &[usize],
    rho_f: f64,
    rho_top: f64,
) -> Result<f64> {
    let weight = rho_f / batch.len() as f64;
    let mut items: Vec<(f64, f64)> = batch
        .iter()
        .map(|&j| ((samples[j].pos - x).norm(), weight))
        .chain(
            leaders
                .iter()
                .filter(|l| l.active())
                .map(|l| ((l.pos - x).norm(), l.mass)),
        )
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let threshold = rho_top * (1.0 - MASS_SLACK);
    let mut acc = 0.0;
    for (d, w) in &items {
        acc += w;
        if acc >= threshold {
            return Ok(*d);
        }
    }
    Err(Error::InsufficientMass {
        target: rho_top,
        available: acc,
    })
}

/// One MFMC step of the samples in `state.followers`, with leaders advanced
/// by their microscopic equation. `seed` fixes every batch draw.
pub fn mfmc_step(
    params: &ModelParams,
    env: &Environment,
    config: &MfmcConfig,
    state: &CrowdState,
    controls: &[Vec2],
    seed: u64,
) -> CrowdState {
    let current = with_leader_velocities(params, env, state, controls);
    let samples = &current.followers;
    let leaders = &current.leaders;
    let active: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].active())
        .collect();
    let mut next = current.clone();

    if !active.is_empty() {
        let n_active = active.len();
        let m = config.batch_size.min(n_active);
        let rho_f: f64 = active.iter().map(|&i| samples[i].mass).sum();
        let leader_mass: f64 = leaders.iter().filter(|l| l.active()).map(|l| l.mass).sum();
        let rho_top = config.rho_top.min(rho_f + leader_mass);
        let dt = params.dt;

        let updates: Vec<(usize, Vec2, Vec2)> = active
            .par_iter()
            .map(|&i| {
                let mut rng = particle_stream(seed, state.step, i);
                let batch: Vec<usize> = subsample(&mut rng, n_active, m)
                    .expect("batch size clamped to the active population")
                    .into_iter()
                    .map(|b| active[b])
                    .collect();
                let x = samples[i].pos;
                let v = samples[i].vel;
                let s = self_propulsion(params, env, &x, &v);
                let rep = hat_repulsion(samples, leaders, &x, &batch, rho_f, params);
                let mut v_new = v + s * dt - rep.force(&x) * dt;
                if env.visibility_indicator(&x).is_none() {
                    let r_star = topological_radius(samples, leaders, &x, &batch, rho_f, rho_top)
                        .unwrap_or(f64::INFINITY);
                    let al = hat_alignment(samples, leaders, &x, &batch, rho_f, params, r_star);
                    v_new += al.force(&v) * dt;
                }
                let v_new = env.project_velocity(&x, &v_new, dt);
                (i, v_new, x + v_new * dt)
            })
            .collect();
        for (i, v, x) in updates {
            next.followers[i].vel = v;
            next.followers[i].pos = x;
        }
    }
    finish_step(params, env, &mut next);
    next
}

/// [`mfmc_step`] on an ensemble and a separate leader list.
#[allow(clippy::too_many_arguments)]
pub fn mfmc_step_ensemble(
    params: &ModelParams,
    env: &Environment,
    config: &MfmcConfig,
    ensemble: &ParticleEnsemble,
    leaders: &[LeaderState],
    controls: &[Vec2],
    step: usize,
    seed: u64,
) -> (ParticleEnsemble, Vec<LeaderState>) {
    let mut state = CrowdState::new(ensemble.samples.clone(), leaders.to_vec());
    state.step = step;
    state.time = step as f64 * params.dt;
    let next = mfmc_step(params, env, config, &state, controls, seed);
    (
        ParticleEnsemble {
            samples: next.followers,
            number_density: ensemble.number_density,
        },
        next.leaders,
    )
}

/// Regular lattice `origin + (i, j) * spacing`, `i < nx`, `j < ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub origin: Vec2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn covering(min: Vec2, max: Vec2, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(max.x > min.x) || !(max.y > min.y) {
            return Err(Error::Validation(
                "density grid needs a positive extent and spacing".into(),
            ));
        }
        let nx = ((max.x - min.x) / spacing).floor() as usize + 1;
        let ny = ((max.y - min.y) / spacing).floor() as usize + 1;
        Ok(Self {
            origin: min,
            spacing,
            nx,
            ny,
        })
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.spacing, j as f64 * self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: GridSpec,
    /// Row-major: `values[j * nx + i]`.
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }
}

/// Gaussian kernel density of the active samples on `grid`.
pub fn kde_density(samples: &[FollowerState], grid: &GridSpec, h: f64) -> Result<DensityGrid> {
    if !(h > 0.0) {
        return Err(Error::Validation("bandwidth must be positive".into()));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h * h);
    let inv = 1.0 / (2.0 * h * h);
    let active: Vec<&FollowerState> = samples.iter().filter(|s| s.active()).collect();
    let values = (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let active = &active;
            (0..grid.nx).map(move |i| {
                let g = grid.point(i, j);
                active
                    .iter()
                    .map(|s| s.mass * norm * (-(g - s.pos).norm_squared() * inv).exp())
                    .sum::<f64>()
            })
        })
        .collect();
    Ok(DensityGrid {
        grid: grid.clone(),
        values,
    })
}
