//! `comgrasp` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage error,
//! 3 malformed input file, 4 unobservable configuration, 5 solver divergence,
//! 6 non-physical weight estimate.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::Vector2;
use serde::Serialize;

use comgrasp::config::{load_chain, load_scene};
use comgrasp::harness::{
    accuracy_bins, run_accuracy_campaign, run_stability_campaign, write_accuracy_csv, write_bins_csv,
    write_skipped_csv, CampaignConfig,
};
use comgrasp::kinematics::lever_arms;
use comgrasp::scene::CameraModel;
use comgrasp::sensing::read_snapshot_pair;
use comgrasp::solver::{solve_gd, SolverConfig};
use comgrasp::vision::render_mask;
use comgrasp::{Error, Planner};

#[derive(Parser)]
#[command(
    name = "comgrasp",
    version,
    about = "Torque-based CoM estimation campaigns and solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CampaignArgs {
    /// Scene file (TOML); the built-in preset is used when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Trials per object.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Overrides the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the torque noise standard deviation (N·m).
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// CoM accuracy versus tilt; writes accuracy.csv, accuracy_bins.csv, skipped.csv.
    Accuracy(CampaignArgs),
    /// Pick-and-place success per planner; writes stability.json.
    Stability {
        #[command(flatten)]
        args: CampaignArgs,
        /// Run one planner only (default: both).
        #[arg(long)]
        planner: Option<Planner>,
    },
    /// Estimate the payload CoM from a torque snapshot file.
    Solve {
        /// Snapshot record file (before/after pair).
        snapshots: PathBuf,
        /// Chain file (TOML).
        #[arg(long)]
        chain: PathBuf,
        /// Optional scene file whose [solver] section is used.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Top-down mask of one object at the workspace center, as PGM.
    RenderMask {
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Object id.
        #[arg(long)]
        object: String,
        /// Rod heading in degrees.
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn scene_config(scene: Option<&Path>) -> Result<CampaignConfig> {
    match scene {
        Some(p) => load_scene(p).with_context(|| format!("loading scene {}", p.display())),
        None => Ok(CampaignConfig::preset(0)),
    }
}

fn campaign_config(args: &CampaignArgs) -> Result<CampaignConfig> {
    let mut cfg = scene_config(args.scene.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sigma) = args.noise {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(anyhow!(Error::InvalidInput(format!(
                "--noise must be ≥ 0, got {sigma}"
            ))));
        }
        cfg.estimation.sigma = sigma;
    }
    if args.trials == 0 {
        return Err(anyhow!(Error::InvalidInput("--trials must be ≥ 1".into())));
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn accuracy(args: &CampaignArgs) -> Result<()> {
    let cfg = campaign_config(args)?;
    let report = run_accuracy_campaign(&cfg, args.trials)?;
    let ids: Vec<String> = cfg.objects.iter().map(|o| o.id.clone()).collect();
    let bins = accuracy_bins(&report.records, &ids, 5.0);

    let mut out = create(&args.out, "accuracy.csv")?;
    write_accuracy_csv(&report.records, &mut out)?;
    out.flush()?;
    let mut out = create(&args.out, "accuracy_bins.csv")?;
    write_bins_csv(&bins, &mut out)?;
    out.flush()?;
    let mut out = create(&args.out, "skipped.csv")?;
    write_skipped_csv(&report.skipped, &mut out)?;
    out.flush()?;

    for id in &ids {
        let rs: Vec<f64> = report
            .records
            .iter()
            .filter(|r| &r.object == id)
            .map(|r| r.accuracy)
            .collect();
        let mean = if rs.is_empty() {
            f64::NAN
        } else {
            rs.iter().sum::<f64>() / rs.len() as f64
        };
        println!("{id}: {} estimates, mean accuracy {mean:.4}", rs.len());
    }
    println!(
        "{} records, {} skipped; written to {}",
        report.records.len(),
        report.skipped.len(),
        args.out.display()
    );
    Ok(())
}

fn stability(args: &CampaignArgs, planner: Option<Planner>) -> Result<()> {
    let cfg = campaign_config(args)?;
    let planners = match planner {
        Some(p) => vec![p],
        None => vec![Planner::Naive, Planner::Regrasp],
    };
    let table = run_stability_campaign(&cfg, args.trials, &planners)?;
    let mut out = create(&args.out, "stability.json")?;
    out.write_all(table.to_json()?.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    for (id, per) in &table.results {
        let line: Vec<String> = per
            .iter()
            .map(|(p, s)| format!("{p} {:.1}%", 100.0 * s.success_rate))
            .collect();
        println!("{id}: {}", line.join(", "));
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveRecord {
    delta_r_x: f64,
    delta_r_y: f64,
    weight: f64,
    residual: f64,
    iterations: usize,
}

fn solve(snapshots: &Path, chain: &Path, scene: Option<&Path>) -> Result<()> {
    let (chain, _) = load_chain(chain).with_context(|| format!("loading chain {}", chain.display()))?;
    let file = File::open(snapshots).with_context(|| format!("opening {}", snapshots.display()))?;
    let (before, after) =
        read_snapshot_pair(BufReader::new(file)).with_context(|| format!("reading {}", snapshots.display()))?;
    let solver = match scene {
        Some(p) => load_scene(p)?.estimation.solver,
        None => SolverConfig::default(),
    };
    let arms = lever_arms(&chain, &before.state)?;
    let est = solve_gd(&before, &after, &arms, &solver)?;
    let record = SolveRecord {
        delta_r_x: est.delta_r_xy.x,
        delta_r_y: est.delta_r_xy.y,
        weight: est.weight,
        residual: est.residual,
        iterations: est.iterations,
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn render(scene: Option<&Path>, object: &str, yaw_deg: f64, out: &Path) -> Result<()> {
    let cfg = scene_config(scene)?;
    let obj = cfg
        .objects
        .iter()
        .find(|o| o.id == object)
        .ok_or_else(|| anyhow!(Error::InvalidInput(format!("no object `{object}` in the scene"))))?;
    let ws = cfg.workspace;
    let rod = obj
        .rod
        .lying_at(Vector2::new(ws.center.x, ws.center.y), yaw_deg.to_radians(), ws.table_z);
    let t = cfg.top_camera;
    let camera = CameraModel::top_down(t.center, t.height_above, t.width, t.height, t.scale)?;
    let mask = render_mask(std::slice::from_ref(&rod), &camera)?;
    std::fs::create_dir_all(out)?;
    let name = format!("mask_{object}.pgm");
    let mut w = create(out, &name)?;
    mask.write_pgm(&mut w)?;
    w.flush()?;
    println!(
        "{} occupied pixels written to {}",
        mask.count(),
        out.join(name).display()
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse { .. } => 3,
                Error::Unobservable { .. } => 4,
                Error::Divergence { .. } => 5,
                Error::NonphysicalWeight { .. } => 6,
                Error::InvalidInput(_) | Error::DimensionMismatch { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Accuracy(args) => accuracy(args),
        Command::Stability { args, planner } => stability(args, *planner),
        Command::Solve {
            snapshots,
            chain,
            scene,
        } => solve(snapshots, chain, scene.as_deref()),
        Command::RenderMask {
            scene,
            object,
            yaw,
            out,
        } => render(scene.as_deref(), object, *yaw, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
