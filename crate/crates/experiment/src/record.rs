//! Run records and their on-disk form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use siren_core::analysis::FrontierKind;
use siren_core::grid::{load_layer, save_layer, write_atomic, GridLayer, Point};

use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoObjectives,
    IterationCap,
    Error,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoObjectives => "no_objectives",
            Self::IterationCap => "iteration_cap",
            Self::Error => "error",
        }
    }
}

/// True pose and filter estimate at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub est_x: f64,
    pub est_y: f64,
}

/// One objective selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEvent {
    pub tick: usize,
    pub kind: FrontierKind,
    pub clusters: usize,
    pub target: Option<Point>,
    pub path_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLayers {
    pub dp: GridLayer,
    pub um: GridLayer,
    pub occupancy: GridLayer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub trajectory: Vec<TrajectorySample>,
    /// SiREn after every map update.
    pub siren_trace: Vec<f64>,
    pub frontier_history: Vec<FrontierEvent>,
    pub stop_reason: StopReason,
    pub error: Option<String>,
    pub wall_clock_s: f64,
    /// `(id, sigma)` of every mapped landmark at the end of the run.
    pub landmark_sigmas: Vec<(u32, f64)>,
    pub ticks: usize,
    pub final_siren: f64,
    pub explored_cells: usize,
    /// Cells of true free space (away from walls).
    pub free_cells: usize,
    pub unexplored_free_cells: usize,
    /// Median uncertainty over explored cells.
    pub median_um: Option<f64>,
    #[serde(skip)]
    pub layers: Option<RunLayers>,
}

/// Equality ignores `wall_clock_s`.
impl PartialEq for RunRecord {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config
            && self.seed == o.seed
            && self.trajectory == o.trajectory
            && self.siren_trace == o.siren_trace
            && self.frontier_history == o.frontier_history
            && self.stop_reason == o.stop_reason
            && self.error == o.error
            && self.landmark_sigmas == o.landmark_sigmas
            && self.ticks == o.ticks
            && self.final_siren == o.final_siren
            && self.explored_cells == o.explored_cells
            && self.free_cells == o.free_cells
            && self.unexplored_free_cells == o.unexplored_free_cells
            && self.median_um == o.median_um
            && self.layers == o.layers
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    crate::stats::quantile(values, 0.5).ok()
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        format!(
            "{}_{}_{}_s{}",
            self.config.world_fixture.name(),
            self.config.layout,
            self.config.pps,
            self.seed
        )
    }

    pub fn median_landmark_sigma(&self) -> Option<f64> {
        median(&self.landmark_sigmas.iter().map(|l| l.1).collect::<Vec<_>>())
    }

    pub fn coverage(&self) -> f64 {
        if self.free_cells == 0 {
            return 0.0;
        }
        1.0 - self.unexplored_free_cells as f64 / self.free_cells as f64
    }

    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("t,x,y,phi\n");
        for p in &self.trajectory {
            let _ = writeln!(s, "{},{},{},{}", p.t, p.x, p.y, p.phi);
        }
        s
    }

    pub fn siren_csv(&self) -> String {
        let mut s = String::from("update,siren\n");
        for (k, v) in self.siren_trace.iter().enumerate() {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    /// Writes `record.json`, `trajectory.csv`, `siren.csv` and the final
    /// layers into `dir/<run id>/`. Returns that directory.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let out = dir.join(self.run_id());
        fs::create_dir_all(&out)?;
        write_atomic(&out.join("record.json"), serde_json::to_string_pretty(self)?.as_bytes())?;
        write_atomic(&out.join("trajectory.csv"), self.trajectory_csv().as_bytes())?;
        write_atomic(&out.join("siren.csv"), self.siren_csv().as_bytes())?;
        if let Some(layers) = &self.layers {
            save_layer(&layers.dp, &out.join("dp"))?;
            save_layer(&layers.um, &out.join("um"))?;
            save_layer(&layers.occupancy, &out.join("occupancy"))?;
        }
        Ok(out)
    }

    /// Reads a directory written by [`RunRecord::write`].
    pub fn read(run_dir: &Path) -> Result<Self> {
        let mut r: Self = serde_json::from_slice(&fs::read(run_dir.join("record.json"))?)?;
        if run_dir.join("dp.json").exists() {
            r.layers = Some(RunLayers {
                dp: load_layer(&run_dir.join("dp"))?,
                um: load_layer(&run_dir.join("um"))?,
                occupancy: load_layer(&run_dir.join("occupancy"))?,
            });
        }
        Ok(r)
    }
}

pub const SUMMARY_HEADER: &str = "run_id,fixture,layout,pps,sigma_max,seed,stop_reason,ticks,final_siren,explored_cells,free_cells,unexplored_free_cells,coverage,landmarks,median_landmark_sigma,median_um";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per run; wall-clock time is left out so reruns compare byte for byte.
pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_id(),
            r.config.world_fixture.name(),
            r.config.layout,
            r.config.pps,
            r.config.sigma_max,
            r.seed,
            r.stop_reason.as_str(),
            r.ticks,
            r.final_siren,
            r.explored_cells,
            r.free_cells,
            r.unexplored_free_cells,
            r.coverage(),
            r.landmark_sigmas.len(),
            opt(r.median_landmark_sigma()),
            opt(r.median_um),
        );
    }
    s
}

pub fn write_summary(records: &[RunRecord], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_atomic(path, summary_csv(records).as_bytes())?;
    Ok(())
}
