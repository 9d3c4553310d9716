//! Evacuation cost functionals and congestion diagnostics.

use crate::sim::SimResult;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    MinTime,
    ResidualMass,
    MassSplit,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::MinTime,
        ObjectiveKind::ResidualMass,
        ObjectiveKind::MassSplit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectiveKind::MinTime => "min_time",
            ObjectiveKind::ResidualMass => "residual_mass",
            ObjectiveKind::MassSplit => "mass_split",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "min_time" => Ok(ObjectiveKind::MinTime),
            "residual_mass" => Ok(ObjectiveKind::ResidualMass),
            "mass_split" => Ok(ObjectiveKind::MassSplit),
            other => Err(Error::Validation(format!(
                "unknown objective `{other}` (expected min_time, residual_mass or mass_split)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Horizon `T` in seconds.
    pub horizon: f64,
    /// Desired evacuated mass per exit (mass split only).
    pub desired: Vec<f64>,
    /// Cost of an incomplete evacuation; `T + dt` when unset.
    pub penalty: Option<f64>,
}

impl ObjectiveSpec {
    pub fn new(
        kind: ObjectiveKind,
        horizon: f64,
        desired: Vec<f64>,
        penalty: Option<f64>,
    ) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Validation(
                "objective horizon must be positive".into(),
            ));
        }
        if desired.iter().any(|d| !(*d >= 0.0)) || desired.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Validation(
                "desired masses must be non-negative and sum to at most 1".into(),
            ));
        }
        if kind == ObjectiveKind::MassSplit && desired.is_empty() {
            return Err(Error::Validation("mass_split needs desired masses".into()));
        }
        if let Some(p) = penalty {
            if !(p > horizon) {
                return Err(Error::Validation("penalty must exceed the horizon".into()));
            }
        }
        Ok(Self {
            kind,
            horizon,
            desired,
            penalty,
        })
    }

    pub fn penalty_time(&self, dt: f64) -> f64 {
        self.penalty.unwrap_or(self.horizon + dt)
    }

    /// Step index of the horizon.
    pub fn horizon_step(&self, dt: f64) -> usize {
        (self.horizon / dt).round() as usize
    }
}

/// Cost of `result` under `spec`.
pub fn evaluate(result: &SimResult, spec: &ObjectiveSpec) -> f64 {
    match spec.kind {
        ObjectiveKind::MinTime => evacuation_time(result, spec),
        ObjectiveKind::ResidualMass => residual_mass(result, spec),
        ObjectiveKind::MassSplit => mass_split_cost(result, spec),
    }
}

/// Evacuation time from the step of total evacuation, or the penalty.
pub fn time_from_step(step: Option<usize>, dt: f64, spec: &ObjectiveSpec) -> f64 {
    match step {
        Some(n) if n <= spec.horizon_step(dt) => n as f64 * dt,
        _ => spec.penalty_time(dt),
    }
}

pub fn evacuation_time(result: &SimResult, spec: &ObjectiveSpec) -> f64 {
    time_from_step(result.evacuation_step, result.dt, spec)
}

/// Fraction of the total mass still in the domain at `T` and outside every
/// visibility area.
pub fn residual_mass(result: &SimResult, spec: &ObjectiveSpec) -> f64 {
    result.record_at(spec.horizon_step(result.dt)).outside_mass / result.total_mass
}

/// `Σ_e (M_e − M_e^des)²`.
pub fn split_cost(masses: &[f64], desired: &[f64]) -> f64 {
    masses
        .iter()
        .zip(desired)
        .map(|(m, d)| (m - d).powi(2))
        .sum()
}

/// Squared deviation of the per-exit evacuated mass at `T` from the desired one.
pub fn mass_split_cost(result: &SimResult, spec: &ObjectiveSpec) -> f64 {
    let rec = result.record_at(spec.horizon_step(result.dt));
    let masses: Vec<f64> = rec
        .evacuated
        .iter()
        .map(|m| m / result.total_mass)
        .collect();
    split_cost(&masses, &spec.desired)
}

/// Per-step quantities of one visibility area.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AreaSeries {
    /// Count at the micro scale, mass at the meso scale.
    pub occupancy: Vec<f64>,
    pub mass_fraction: Vec<f64>,
    pub cong: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaCongestion {
    pub series: AreaSeries,
    /// Time mean of `cong(t)`.
    pub cong: f64,
    /// Largest occupancy.
    pub max_occupancy: f64,
    /// Fraction of steps with a non-empty area.
    pub occupied_fraction: f64,
    /// Largest in-area mass fraction.
    pub max_mass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongestionReport {
    pub times: Vec<f64>,
    pub areas: Vec<AreaCongestion>,
}

/// `cong = ρ var` with `var = Σ (|v| − s)² / ρ`, so `cong = Σ (|v| − s)²`;
/// counts at the micro scale, mass-weighted at the meso scale.
pub fn area_series(result: &SimResult) -> Vec<AreaSeries> {
    let by_mass = result.scale == "meso";
    let n_areas = result.records.first().map_or(0, |r| r.areas.len());
    (0..n_areas)
        .map(|e| {
            let mut out = AreaSeries::default();
            for r in &result.records {
                let a = &r.areas[e];
                let (rho, cong) = if by_mass {
                    (a.mass, a.speed_dev_mass)
                } else {
                    (a.count as f64, a.speed_dev)
                };
                out.occupancy.push(rho);
                out.mass_fraction.push(a.mass / result.total_mass);
                out.cong.push(if rho > 0.0 { cong } else { 0.0 });
            }
            out
        })
        .collect()
}

/// Aggregates per-area series into the table quantities.
pub fn summarize(times: Vec<f64>, series: Vec<AreaSeries>) -> CongestionReport {
    let areas = series
        .into_iter()
        .map(|s| {
            let steps = s.cong.len().max(1) as f64;
            AreaCongestion {
                cong: s.cong.iter().sum::<f64>() / steps,
                max_occupancy: s.occupancy.iter().copied().fold(0.0, f64::max),
                occupied_fraction: s.occupancy.iter().filter(|o| **o > 0.0).count() as f64 / steps,
                max_mass_fraction: s.mass_fraction.iter().copied().fold(0.0, f64::max),
                series: s,
            }
        })
        .collect();
    CongestionReport { times, areas }
}

pub fn congestion_metrics(result: &SimResult) -> CongestionReport {
    summarize(
        result.records.iter().map(|r| r.time).collect(),
        area_series(result),
    )
}
