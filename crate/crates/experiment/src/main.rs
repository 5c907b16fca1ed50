use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use siren_core::analysis::{
    build_uncertainty_map, explored_mask, extract_classical_frontiers, extract_uncertainty_frontiers, siren,
    siren_curve, write_curve_csv, FrontierParams, FrontierSet, SirenMode, SirenParams,
};
use siren_core::belief::{derive_prior, OccupancyGrid, PriorConstants, PriorSpec};
use siren_core::grid::write_atomic;
use siren_core::Execution;
use siren_experiment::record::{write_summary, RunLayers};
use siren_experiment::stats::{aggregate_boxplots, boxplot_csv, fit_landmark_um, landmark_um_pairs};
use siren_experiment::{run_batch, ExperimentError, Layout, Pps, Result, RunRecord, ScenarioConfig, WorldFixture};

#[derive(Parser)]
#[command(name = "siren", version, about = "Map uncertainty analysis and exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print prior constants for every (sigma_max, s) combination as CSV.
    Prior {
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        sigma_max: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        s: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
    },
    /// Run exploration scenarios and write one directory per run plus summary.csv.
    Run {
        /// TOML scenario file; replaces the fixture, PPS and layout flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "warehouse")]
        fixture: String,
        /// PPS numbers (1-4), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        pps: Vec<u8>,
        /// Layouts (L1-L4), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "L3")]
        layout: Vec<String>,
        #[arg(long)]
        repeats: Option<usize>,
        /// First seed; runs use consecutive seeds from here.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Recompute SiREn and uncertainty frontiers from a saved run directory.
    Eval {
        run_dir: PathBuf,
        #[arg(long)]
        t_h: Option<f64>,
    },
    /// Signed KL curve over a sigma range `start:end:step` as CSV.
    Curve {
        #[arg(long, default_value_t = 1.0)]
        sigma_max: f64,
        #[arg(long, default_value = "0.05:3:0.05")]
        range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the frontier set of a saved run directory as JSON.
    Frontiers {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Both)]
        kind: Kind,
        #[arg(long)]
        t_h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boxplot and regression CSVs from saved run directories.
    Report {
        /// Run directories, or parents containing them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uncertainty,
    Classical,
    Both,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error code={} message={:?}", e.code(), e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Prior { sigma_max, s, kappa } => prior(&sigma_max, &s, kappa),
        Command::Run { config, fixture, pps, layout, repeats, seed, out } => {
            let configs = match config {
                Some(path) => vec![ScenarioConfig::load(&path)?],
                None => {
                    let fixture: WorldFixture = fixture.parse()?;
                    let mut v = Vec::new();
                    for l in &layout {
                        let l: Layout = l.parse()?;
                        for &n in &pps {
                            let p = Pps::from_number(n)?;
                            v.push(ScenarioConfig::new(fixture, l, p));
                        }
                    }
                    v
                }
            };
            let configs: Vec<ScenarioConfig> = configs
                .into_iter()
                .map(|mut c| {
                    if let Some(r) = repeats {
                        c.repeats = r;
                    }
                    if let Some(s) = seed {
                        c.seeds = (s..s + c.repeats as u64).collect();
                    }
                    c
                })
                .collect();
            run(&configs, &out)
        }
        Command::Eval { run_dir, t_h } => eval(&run_dir, t_h),
        Command::Curve { sigma_max, range, out } => curve(sigma_max, &range, out.as_deref()),
        Command::Frontiers { run_dir, kind, t_h, out } => frontiers(&run_dir, kind, t_h, out.as_deref()),
        Command::Report { inputs, out } => report(&inputs, &out),
    }
}

fn prior(sigma_max: &[f64], sides: &[f64], kappa: f64) -> Result<()> {
    println!("sigma_max,s,kappa,beta,ell_beta,a,u_beta,sigma_tilde_max");
    for &m in sigma_max {
        for &s in sides {
            let c = derive_prior(&PriorSpec::planar(m, s, kappa)?)?;
            println!("{m},{s},{kappa},{},{},{},{},{}", c.beta, c.ell_beta, c.a, c.u_beta, c.sigma_tilde_max);
        }
    }
    Ok(())
}

fn run(configs: &[ScenarioConfig], out: &Path) -> Result<()> {
    let records = run_batch(configs)?;
    fs::create_dir_all(out)?;
    for r in &records {
        let dir = r.write(out)?;
        match &r.error {
            Some(e) => println!("{} error {e:?}", dir.display()),
            None => println!(
                "{} stop={} ticks={} siren={:.3} coverage={:.3}",
                dir.display(),
                r.stop_reason.as_str(),
                r.ticks,
                r.final_siren,
                r.coverage()
            ),
        }
    }
    write_summary(&records, &out.join("summary.csv"))
}

struct Saved {
    record: RunRecord,
    layers: RunLayers,
    prior: PriorConstants,
}

fn load_run(run_dir: &Path) -> Result<Saved> {
    let mut record = RunRecord::read(run_dir)?;
    let layers = record
        .layers
        .take()
        .ok_or_else(|| ExperimentError::InsufficientData(format!("{} has no saved layers", run_dir.display())))?;
    let prior = derive_prior(&record.config.prior_spec()?)?;
    Ok(Saved { record, layers, prior })
}

fn frontier_set(saved: &Saved, kind: Kind, t_h: Option<f64>) -> Result<FrontierSet> {
    let params = FrontierParams::new(t_h.unwrap_or(saved.record.config.t_h), &saved.prior)?;
    let occupancy = OccupancyGrid::from_layer(&saved.layers.occupancy);
    let uf = || -> Result<FrontierSet> {
        let um = build_uncertainty_map(&saved.layers.dp, &saved.prior, Execution::default());
        Ok(extract_uncertainty_frontiers(&um, &occupancy, &params)?)
    };
    let cf = || -> Result<FrontierSet> {
        let explored = explored_mask(&saved.layers.dp, &saved.prior);
        Ok(extract_classical_frontiers(&occupancy, &explored, &params)?)
    };
    Ok(match kind {
        Kind::Uncertainty => uf()?,
        Kind::Classical => cf()?,
        Kind::Both => uf()?.merge(cf()?),
    })
}

#[derive(Serialize)]
struct EvalReport {
    run_id: String,
    siren: f64,
    recorded_siren: f64,
    explored_cells: usize,
    uf_clusters: usize,
    uf_cells: usize,
}

fn eval(run_dir: &Path, t_h: Option<f64>) -> Result<()> {
    let saved = load_run(run_dir)?;
    let params = SirenParams::from_prior(&saved.prior, SirenMode::default());
    let report = siren(&saved.layers.dp, &saved.prior, &params, Execution::default())?;
    let uf = frontier_set(&saved, Kind::Uncertainty, t_h)?;
    let out = EvalReport {
        run_id: saved.record.run_id(),
        siren: report.total,
        recorded_siren: saved.record.final_siren,
        explored_cells: report.explored_cells,
        uf_clusters: uf.clusters.len(),
        uf_cells: uf.uf_cells.len(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || ExperimentError::InvalidConfig(format!("range must be start:end:step with step > 0, got {text:?}"));
    let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let [start, end, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

fn curve(sigma_max: f64, range: &str, out: Option<&Path>) -> Result<()> {
    let rows = siren_curve(&parse_range(range)?, sigma_max)?;
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &rows)?;
    emit(&buf, out)
}

fn frontiers(run_dir: &Path, kind: Kind, t_h: Option<f64>, out: Option<&Path>) -> Result<()> {
    let saved = load_run(run_dir)?;
    let set = frontier_set(&saved, kind, t_h)?;
    emit(set.to_json()?.as_bytes(), out)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(write_atomic(path, bytes)?),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn collect_runs(path: &Path, into: &mut Vec<RunRecord>) -> Result<()> {
    if path.join("record.json").is_file() {
        into.push(RunRecord::read(path)?);
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    entries.sort();
    for e in entries {
        if e.join("record.json").is_file() {
            into.push(RunRecord::read(&e)?);
        }
    }
    Ok(())
}

fn report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let mut records = Vec::new();
    for p in inputs {
        collect_runs(p, &mut records)?;
    }
    if records.is_empty() {
        return Err(ExperimentError::InsufficientData("no run directories found".into()));
    }
    fs::create_dir_all(out)?;
    let rows = aggregate_boxplots(&records)?;
    write_atomic(&out.join("boxplot.csv"), boxplot_csv(&rows).as_bytes())?;
    write_summary(&records, &out.join("summary.csv"))?;

    let mut csv = String::from("median_landmark_sigma,median_um\n");
    for (x, y) in landmark_um_pairs(&records) {
        csv.push_str(&format!("{x},{y}\n"));
    }
    write_atomic(&out.join("landmark_um.csv"), csv.as_bytes())?;
    match fit_landmark_um(&records) {
        Ok(f) => {
            let text = format!("slope,intercept,pearson_r,n\n{},{},{},{}\n", f.slope, f.intercept, f.pearson_r, f.n);
            write_atomic(&out.join("regression.csv"), text.as_bytes())?;
            println!("regression slope={:.4} intercept={:.5} r={:.4} n={}", f.slope, f.intercept, f.pearson_r, f.n);
        }
        Err(e) => println!("regression skipped: {e}"),
    }
    println!("{} runs, {} groups -> {}", records.len(), rows.len(), out.display());
    Ok(())
}
