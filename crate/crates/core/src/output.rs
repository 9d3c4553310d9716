//! Result files.
//!
//! | file | columns |
//! |------|---------|
//! | `trajectory.csv` | `step,id,kind,x,y,vx,vy` |
//! | `exits.csv` | `step,time`, then per exit `occupancy_e,mass_e,cong_e,evacuated_e`, then `evacuated,active_mass,outside_mass,mean_speed` |
//! | `congestion.csv` | `area,cong,m,l,M` |
//! | `density_<step>.grid` | `# origin`, `# spacing`, `# dims` header, then `ny` rows of `nx` values |
//! | `trace.csv` | `j,candidate_cost,accepted,best_cost` |
//! | `schedule.txt` | per leader, `t_m P_x P_y` lines |
//!
//! Numbers are written in Rust's shortest round-trip form, so identical
//! runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::control::ControlSchedule;
use crate::meso::DensityGrid;
use crate::objective::{area_series, summarize, AreaSeries, CongestionReport};
use crate::optimize::SearchTrace;
use crate::sim::SimResult;
use crate::{Error, Result};

pub fn trajectory_csv(result: &SimResult) -> String {
    let mut s = String::from("step,id,kind,x,y,vx,vy\n");
    for r in &result.trajectory {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.step,
            r.id,
            r.kind.as_str(),
            r.pos.x,
            r.pos.y,
            r.vel.x,
            r.vel.y
        );
    }
    s
}

pub fn exits_csv(result: &SimResult) -> String {
    let series = area_series(result);
    let n = series.len();
    let mut s = String::from("step,time");
    for e in 0..n {
        let _ = write!(s, ",occupancy_{e},mass_{e},cong_{e},evacuated_{e}");
    }
    s.push_str(",evacuated,active_mass,outside_mass,mean_speed\n");
    for (i, r) in result.records.iter().enumerate() {
        let _ = write!(s, "{},{}", r.step, r.time);
        for (e, a) in series.iter().enumerate() {
            let _ = write!(
                s,
                ",{},{},{},{}",
                a.occupancy[i], a.mass_fraction[i], a.cong[i], r.evacuated[e]
            );
        }
        let evacuated = 1.0 - r.active_mass / result.total_mass;
        let _ = writeln!(
            s,
            ",{},{},{},{}",
            evacuated, r.active_mass, r.outside_mass, r.mean_speed
        );
    }
    s
}

pub fn congestion_csv(report: &CongestionReport) -> String {
    let mut s = String::from("area,cong,m,l,M\n");
    for (e, a) in report.areas.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            e, a.cong, a.max_occupancy, a.occupied_fraction, a.max_mass_fraction
        );
    }
    s
}

pub fn density_grid(grid: &DensityGrid) -> String {
    let g = &grid.grid;
    let mut s = format!(
        "# origin {} {}\n# spacing {}\n# dims {} {}\n",
        g.origin.x, g.origin.y, g.spacing, g.nx, g.ny
    );
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx).map(|i| grid.at(i, j).to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn trace_csv(trace: &SearchTrace) -> String {
    let mut s = String::from("j,candidate_cost,accepted,best_cost\n");
    let _ = writeln!(s, "0,{},true,{}", trace.initial_cost, trace.initial_cost);
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.iteration, r.candidate_cost, r.accepted, r.best_cost
        );
    }
    s
}

pub fn schedule_text(schedule: &ControlSchedule) -> String {
    let mut s = String::new();
    for l in &schedule.leaders {
        let _ = writeln!(s, "leader {} speed {}", l.leader, l.speed);
        let _ = writeln!(s, "0 {} {}", l.origin.x, l.origin.y);
        for (t, p) in schedule.switch_times.iter().zip(&l.points) {
            let _ = writeln!(s, "{} {} {}", t, p.x, p.y);
        }
    }
    s
}

/// Parses `exits.csv` back into per-area series and summarizes them.
pub fn congestion_from_exits_csv(text: &str, path: &Path) -> Result<CongestionReport> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .split(',')
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let time_col = col("time").ok_or_else(|| parse_err("missing time column".into()))?;
    let mut areas = Vec::new();
    while let (Some(o), Some(m), Some(c)) = (
        col(&format!("occupancy_{}", areas.len())),
        col(&format!("mass_{}", areas.len())),
        col(&format!("cong_{}", areas.len())),
    ) {
        areas.push((o, m, c));
    }
    let mut times = Vec::new();
    let mut series = vec![AreaSeries::default(); areas.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let num = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| parse_err(format!("bad value in line {}, column {}", n + 2, i + 1)))
        };
        times.push(num(time_col)?);
        for (s, &(o, m, c)) in series.iter_mut().zip(&areas) {
            s.occupancy.push(num(o)?);
            s.mass_fraction.push(num(m)?);
            s.cong.push(num(c)?);
        }
    }
    Ok(summarize(times, series))
}

/// Writes files into one directory and remembers their hashes.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        let digest = hex::encode(Sha256::digest(contents.as_bytes()));
        self.files.push((name.to_string(), digest));
        Ok(())
    }

    /// Writes the run files of a simulation.
    pub fn write_run(&mut self, result: &SimResult, prefix: &str) -> Result<()> {
        self.write(&format!("{prefix}trajectory.csv"), &trajectory_csv(result))?;
        self.write(&format!("{prefix}exits.csv"), &exits_csv(result))?;
        let report = crate::objective::congestion_metrics(result);
        self.write(&format!("{prefix}congestion.csv"), &congestion_csv(&report))?;
        for (step, grid) in &result.densities {
            self.write(&format!("{prefix}density_{step}.grid"), &density_grid(grid))?;
        }
        Ok(())
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    /// Writes `manifest.json` with the hashes of every file written so far.
    pub fn finish(self, mut manifest: serde_json::Value) -> Result<PathBuf> {
        let files: serde_json::Map<String, serde_json::Value> = self
            .files
            .iter()
            .map(|(n, h)| (n.clone(), serde_json::Value::String(format!("sha256:{h}"))))
            .collect();
        manifest["files"] = serde_json::Value::Object(files);
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("json values serialize");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
