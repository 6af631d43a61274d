//! Experiment campaigns: CoM accuracy versus tilt, and pick-and-place
//! success with and without regrasping.
//!
//! Trials are independent and seeded from `(seed, object index, trial index)`;
//! they run on the rayon pool and are collected in trial order, so outputs do
//! not depend on scheduling.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{ur5_capture_state, ur5_like, STANDARD_GRAVITY};
use crate::scene::{canonical_scene_objects, random_yaw, sample_random_grasp, CameraModel, RodObject, SceneObject};
use crate::sensing::preset_sigma;
use crate::sim::{
    estimate_held, run_pick_place, simulate_lift, EstimationContext, Planner, SideCameraSpec, SlipParams,
};
use crate::solver::{RodPlacement, SolverConfig};
use crate::vision::{detect_topdown, grasp_from_topdown, render_mask, SlipThresholds, TableContext};

/// `1 − 5·|pos_esti − pos_real| / l`, unclamped.
pub fn accuracy_metric(pos_esti: f64, pos_real: f64, length: f64) -> Result<f64> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rod length must be positive, got {length}"
        )));
    }
    Ok(1.0 - 5.0 * (pos_esti - pos_real).abs() / length)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopCameraSpec {
    /// World `xy` under the image center.
    pub center: Vector2<f64>,
    pub height_above: f64,
    pub width: usize,
    pub height: usize,
    pub scale: f64,
}

impl Default for TopCameraSpec {
    fn default() -> Self {
        Self {
            center: Vector2::new(0.5, 0.0),
            height_above: 1.0,
            width: 1000,
            height: 1000,
            scale: 0.001,
        }
    }
}

/// Region of the table where rods are dropped at the start of a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub center: Vector2<f64>,
    pub half_extent: Vector2<f64>,
    pub table_z: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            center: Vector2::new(0.5, 0.0),
            half_extent: Vector2::new(0.15, 0.15),
            table_z: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub objects: Vec<SceneObject>,
    pub estimation: EstimationContext,
    pub slip: SlipParams,
    pub top_camera: TopCameraSpec,
    pub workspace: Workspace,
    pub seed: u64,
}

impl CampaignConfig {
    /// Canonical rods, UR5-like arm at its capture pose, preset noise.
    pub fn preset(seed: u64) -> Self {
        let chain = ur5_like();
        let capture_state = ur5_capture_state();
        let sigma = preset_sigma(&chain, &capture_state, &STANDARD_GRAVITY).expect("preset chain is valid");
        Self {
            objects: canonical_scene_objects(),
            estimation: EstimationContext {
                chain,
                capture_state,
                gravity: STANDARD_GRAVITY,
                sigma,
                side_camera: SideCameraSpec::default(),
                thresholds: SlipThresholds::default(),
                solver: SolverConfig::default(),
            },
            slip: SlipParams::preset(),
            top_camera: TopCameraSpec::default(),
            workspace: Workspace::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objects.is_empty() {
            return Err(Error::InvalidInput("campaign needs at least one object".into()));
        }
        for obj in &self.objects {
            obj.rod.validate()?;
            if !(obj.grip_force > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "object {}: grip force must be positive",
                    obj.id
                )));
            }
        }
        self.slip.validate()?;
        self.estimation.solver.validate()
    }
}

/// Per-trial seed from the campaign seed and the trial coordinates.
pub fn trial_seed(seed: u64, object: usize, trial: usize) -> u64 {
    // splitmix64 finalizer over a simple combination.
    let mut z = seed
        .wrapping_add((object as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((trial as u64).wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn place_rod<R: Rng>(base: &RodObject, ws: &Workspace, rng: &mut R) -> RodObject {
    let c = Vector2::new(
        ws.center.x + rng.random_range(-ws.half_extent.x..=ws.half_extent.x),
        ws.center.y + rng.random_range(-ws.half_extent.y..=ws.half_extent.y),
    );
    base.lying_at(c, random_yaw(rng), ws.table_z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRecord {
    pub object: String,
    pub trial: usize,
    /// Tilt magnitude during the lift, degrees.
    pub theta: f64,
    pub accuracy: f64,
    pub pos_esti: f64,
    pub pos_real: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedTrial {
    pub object: String,
    pub trial: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyReport {
    /// Sorted by `theta`, then object, then trial.
    pub records: Vec<AccuracyRecord>,
    pub skipped: Vec<SkippedTrial>,
}

enum TrialResult<T> {
    Done(T),
    Skipped(String),
}

fn accuracy_trial(cfg: &CampaignConfig, obj: &SceneObject, seed: u64) -> Result<TrialResult<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rod = place_rod(&obj.rod, &cfg.workspace, &mut rng);
    let grasp = sample_random_grasp(&rod, obj.grip_force, rng.random())?;
    let params = cfg.slip.jittered(&mut rng);
    let lift = simulate_lift(&rod, &grasp, &params)?;
    if lift.dropped {
        return Ok(TrialResult::Skipped("dropped during lift".into()));
    }
    match estimate_held(
        &cfg.estimation,
        &rod,
        &grasp,
        lift.final_theta,
        lift.final_contact,
        &rod.axis(),
        rng.random(),
    ) {
        Ok(est) => Ok(TrialResult::Done((
            lift.final_theta.abs().to_degrees(),
            est.com.x_com_obj,
        ))),
        Err(e) => Ok(TrialResult::Skipped(e.to_string())),
    }
}

pub fn run_accuracy_campaign(cfg: &CampaignConfig, trials: usize) -> Result<AccuracyReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.objects.len())
        .flat_map(|o| (0..trials).map(move |t| (o, t)))
        .collect();
    let results: Vec<Result<TrialResult<(f64, f64)>>> = jobs
        .par_iter()
        .map(|&(o, t)| accuracy_trial(cfg, &cfg.objects[o], trial_seed(cfg.seed, o, t)))
        .collect();

    let mut report = AccuracyReport::default();
    for ((o, t), res) in jobs.into_iter().zip(results) {
        let obj = &cfg.objects[o];
        match res? {
            TrialResult::Done((theta, pos_esti)) => report.records.push(AccuracyRecord {
                object: obj.id.clone(),
                trial: t,
                theta,
                accuracy: accuracy_metric(pos_esti, obj.rod.com_offset, obj.rod.length)?,
                pos_esti,
                pos_real: obj.rod.com_offset,
            }),
            TrialResult::Skipped(reason) => {
                log::info!("{} trial {t} skipped: {reason}", obj.id);
                report.skipped.push(SkippedTrial {
                    object: obj.id.clone(),
                    trial: t,
                    reason,
                });
            }
        }
    }
    report.records.sort_by(|a, b| {
        a.theta
            .total_cmp(&b.theta)
            .then_with(|| a.object.cmp(&b.object))
            .then_with(|| a.trial.cmp(&b.trial))
    });
    Ok(report)
}

/// Column order of the accuracy CSV.
pub const ACCURACY_CSV_HEADER: &str = "object,trial,theta_deg,accuracy,pos_esti_m,pos_real_m";

pub fn write_accuracy_csv<W: Write>(records: &[AccuracyRecord], mut out: W) -> Result<()> {
    writeln!(out, "{ACCURACY_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:.6},{:.9},{:.9},{:.9}",
            r.object, r.trial, r.theta, r.accuracy, r.pos_esti, r.pos_real
        )?;
    }
    Ok(())
}

pub fn write_skipped_csv<W: Write>(skipped: &[SkippedTrial], mut out: W) -> Result<()> {
    writeln!(out, "object,trial,reason")?;
    for s in skipped {
        writeln!(out, "{},{},\"{}\"", s.object, s.trial, s.reason.replace('"', "'"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSummary {
    pub object: String,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub count: usize,
    pub mean_accuracy: f64,
}

/// Mean accuracy per object in tilt bins of `width` degrees; empty bins
/// are omitted. Objects appear in first-seen order of `order`.
pub fn accuracy_bins(records: &[AccuracyRecord], order: &[String], width: f64) -> Vec<BinSummary> {
    let mut out = Vec::new();
    for id in order {
        let mut bins: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
        for r in records.iter().filter(|r| &r.object == id) {
            let e = bins.entry((r.theta / width).floor() as i64).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += r.accuracy;
        }
        for (k, (n, sum)) in bins {
            out.push(BinSummary {
                object: id.clone(),
                theta_lo: k as f64 * width,
                theta_hi: (k + 1) as f64 * width,
                count: n,
                mean_accuracy: sum / n as f64,
            });
        }
    }
    out
}

pub fn write_bins_csv<W: Write>(bins: &[BinSummary], mut out: W) -> Result<()> {
    writeln!(out, "object,theta_lo_deg,theta_hi_deg,count,mean_accuracy")?;
    for b in bins {
        writeln!(
            out,
            "{},{:.1},{:.1},{},{:.9}",
            b.object, b.theta_lo, b.theta_hi, b.count, b.mean_accuracy
        )?;
    }
    Ok(())
}

/// Mean accuracy of one object's records with `lo ≤ θ < hi` (degrees).
pub fn mean_accuracy_in(records: &[AccuracyRecord], object: &str, lo: f64, hi: f64) -> Option<f64> {
    let sel: Vec<f64> = records
        .iter()
        .filter(|r| r.object == object && r.theta >= lo && r.theta < hi)
        .map(|r| r.accuracy)
        .collect();
    if sel.is_empty() {
        None
    } else {
        Some(sel.iter().sum::<f64>() / sel.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannerStats {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub grasps_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTable {
    pub seed: u64,
    pub trials_per_object: usize,
    /// object → planner → stats
    pub results: BTreeMap<String, BTreeMap<String, PlannerStats>>,
    pub skipped: Vec<SkippedTrial>,
}

impl StabilityTable {
    pub fn rate(&self, object: &str, planner: Planner) -> Option<f64> {
        self.results.get(object)?.get(planner.as_str()).map(|s| s.success_rate)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

type EpisodeResult = TrialResult<Vec<(bool, usize)>>;

fn stability_trial(cfg: &CampaignConfig, obj: &SceneObject, planners: &[Planner], seed: u64) -> Result<EpisodeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rod = place_rod(&obj.rod, &cfg.workspace, &mut rng);
    let params = cfg.slip.jittered(&mut rng);
    let noise_seed: u64 = rng.random();

    let spec = cfg.top_camera;
    let camera = CameraModel::top_down(spec.center, spec.height_above, spec.width, spec.height, spec.scale)?;
    let table = TableContext {
        table_z: cfg.workspace.table_z,
        rod_radius: obj.rod.radius,
        grip_force: obj.grip_force,
    };
    let detection = render_mask(std::slice::from_ref(&rod), &camera).and_then(|mask| {
        let det = detect_topdown(&mask, &table)?;
        Ok((det, grasp_from_topdown(&mask, &table)?))
    });
    let (det, grasp) = match detection {
        Ok(d) => d,
        Err(e) => return Ok(TrialResult::Skipped(e.to_string())),
    };
    let placement = RodPlacement {
        center: det.center,
        axis: det.axis,
    };
    let mut outcomes = Vec::with_capacity(planners.len());
    for &planner in planners {
        match run_pick_place(&cfg.estimation, &rod, &grasp, &placement, &params, planner, noise_seed) {
            Ok(o) => outcomes.push((o.success, o.trials_used)),
            Err(e) => return Ok(TrialResult::Skipped(e.to_string())),
        }
    }
    Ok(TrialResult::Done(outcomes))
}

/// Runs every planner on the same seeded episodes.
pub fn run_stability_campaign(cfg: &CampaignConfig, trials: usize, planners: &[Planner]) -> Result<StabilityTable> {
    cfg.validate()?;
    if planners.is_empty() {
        return Err(Error::InvalidInput("no planner selected".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.objects.len())
        .flat_map(|o| (0..trials).map(move |t| (o, t)))
        .collect();
    let results: Vec<Result<EpisodeResult>> = jobs
        .par_iter()
        .map(|&(o, t)| stability_trial(cfg, &cfg.objects[o], planners, trial_seed(cfg.seed, o, t)))
        .collect();

    let mut table = StabilityTable {
        seed: cfg.seed,
        trials_per_object: trials,
        results: BTreeMap::new(),
        skipped: Vec::new(),
    };
    for obj in &cfg.objects {
        let per: BTreeMap<String, PlannerStats> = planners
            .iter()
            .map(|p| {
                (
                    p.as_str().to_string(),
                    PlannerStats {
                        trials: 0,
                        successes: 0,
                        success_rate: 0.0,
                        grasps_used: 0,
                    },
                )
            })
            .collect();
        table.results.insert(obj.id.clone(), per);
    }
    for ((o, t), res) in jobs.into_iter().zip(results) {
        let id = &cfg.objects[o].id;
        match res? {
            TrialResult::Done(outcomes) => {
                let per = table.results.get_mut(id).expect("object registered");
                for (planner, (success, used)) in planners.iter().zip(outcomes) {
                    let s = per.get_mut(planner.as_str()).expect("planner registered");
                    s.trials += 1;
                    s.successes += success as usize;
                    s.grasps_used += used;
                }
            }
            TrialResult::Skipped(reason) => {
                log::info!("{id} episode {t} skipped: {reason}");
                table.skipped.push(SkippedTrial {
                    object: id.clone(),
                    trial: t,
                    reason,
                });
            }
        }
    }
    for per in table.results.values_mut() {
        for s in per.values_mut() {
            s.success_rate = if s.trials > 0 {
                s.successes as f64 / s.trials as f64
            } else {
                0.0
            };
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_reference_points() {
        assert_eq!(accuracy_metric(0.1, 0.1, 0.5).unwrap(), 1.0);
        assert_eq!(accuracy_metric(0.2, 0.1, 0.5).unwrap(), 0.0);
        assert!((accuracy_metric(0.002, 0.0, 0.5).unwrap() - 0.98).abs() < 1e-15);
        assert!(accuracy_metric(0.5, 0.0, 0.5).unwrap() < 0.0);
        assert!(accuracy_metric(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let a = trial_seed(1, 0, 0);
        assert_ne!(a, trial_seed(1, 0, 1));
        assert_ne!(a, trial_seed(1, 1, 0));
        assert_ne!(a, trial_seed(2, 0, 0));
        assert_eq!(a, trial_seed(1, 0, 0));
    }

    #[test]
    fn bins_group_by_width() {
        let rec = |theta, acc| AccuracyRecord {
            object: "a".into(),
            trial: 0,
            theta,
            accuracy: acc,
            pos_esti: 0.0,
            pos_real: 0.0,
        };
        let records = vec![rec(1.0, 0.9), rec(4.0, 1.0), rec(7.0, 0.5)];
        let bins = accuracy_bins(&records, &["a".to_string()], 5.0);
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].count, 2);
        assert!((bins[0].mean_accuracy - 0.95).abs() < 1e-15);
        assert_eq!(bins[1].theta_lo, 5.0);
    }
}
