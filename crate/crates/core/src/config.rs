//! TOML scene and chain files.
//!
//! Every section is optional and falls back to the preset campaign; unknown
//! keys are rejected. Errors carry the 1-based line of the offending item.

use nalgebra::{Vector2, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{CampaignConfig, TopCameraSpec, Workspace};
use crate::kinematics::{ur5_capture_state, ur5_like, ArmState, JointSpec, KinematicChain};
use crate::scene::{canonical_scene_objects, table_pose, RodObject, SceneObject};
use crate::sensing::preset_sigma;
use crate::sim::{SideCameraSpec, SlipParams};
use crate::solver::SolverConfig;
use crate::transform::RigidTransform;
use crate::vision::SlipThresholds;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    schema_version: u32,
    seed: Option<u64>,
    gravity: Option<[f64; 3]>,
    chain: Option<ChainSection>,
    table: Option<TableSection>,
    cameras: Option<CamerasSection>,
    noise: Option<NoiseSection>,
    slip: Option<SlipSection>,
    observer: Option<ObserverSection>,
    solver: Option<SolverSection>,
    objects: Option<ObjectsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSection {
    preset: Option<String>,
    joints: Option<Vec<JointEntry>>,
    eelink: Option<FrameEntry>,
    capture_q: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    axis: [f64; 3],
    mass: f64,
    #[serde(default)]
    com: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameEntry {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSection {
    z: Option<f64>,
    workspace_center: Option<[f64; 2]>,
    workspace_half_extent: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CamerasSection {
    top: Option<TopCameraEntry>,
    side: Option<SideCameraEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopCameraEntry {
    center: Option<[f64; 2]>,
    height_above: Option<f64>,
    width: Option<usize>,
    height: Option<usize>,
    scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SideCameraEntry {
    width: Option<usize>,
    height: Option<usize>,
    scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Sigma {
    Value(f64),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    sigma: Sigma,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlipSection {
    mu: Option<f64>,
    mu_spread: Option<f64>,
    pad_halfwidth: Option<f64>,
    theta_max_deg: Option<f64>,
    dt: Option<f64>,
    slip_rate: Option<f64>,
    slide_rate: Option<f64>,
    lift_duration: Option<f64>,
    transport_duration: Option<f64>,
    transport_load: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserverSection {
    theta_slip_deg: Option<f64>,
    slip_distance: Option<f64>,
    finger_halfwidth: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    learning_rate: Option<f64>,
    max_iterations: Option<usize>,
    convergence_tol: Option<f64>,
    gradient_tol: Option<f64>,
    backtracking: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectsSection {
    preset: Option<String>,
    items: Option<Vec<ObjectEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    id: String,
    length: f64,
    radius: f64,
    mass: f64,
    com_offset: f64,
    com_lateral: Option<f64>,
    grip_force: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    schema_version: u32,
    #[serde(flatten)]
    chain: ChainFields,
}

#[derive(Debug, Deserialize)]
struct ChainFields {
    preset: Option<String>,
    joints: Option<Vec<JointEntry>>,
    eelink: Option<FrameEntry>,
    capture_q: Option<Vec<f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map_or(1, |s| line_of(text, s.start));
    Error::Parse {
        line,
        message: e.message().to_string(),
    }
}

/// Line of the first `key =` or `[key]` occurrence, for semantic errors.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with(key) && t[key.len()..].trim_start().starts_with(['=', ']', '.'])
                || t.starts_with(&format!("[{key}"))
                || t.starts_with(&format!("[[{key}"))
        })
        .map_or(1, |i| i + 1)
}

fn semantic(text: &str, key: &str, err: Error) -> Error {
    let message = match err {
        Error::Parse { message, .. } => message,
        other => other.to_string(),
    };
    Error::Parse {
        line: line_of_key(text, key),
        message,
    }
}

fn check_version(text: &str, v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Parse {
            line: line_of_key(text, "schema_version"),
            message: format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})"),
        });
    }
    Ok(())
}

fn build_chain(fields: &ChainSection) -> Result<(KinematicChain, ArmState)> {
    let (chain, default_q) = match (&fields.preset, &fields.joints) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "chain: give either `preset` or `joints`, not both".into(),
            ));
        }
        (Some(p), None) if p == "ur5" => (ur5_like(), Some(ur5_capture_state())),
        (Some(p), None) => return Err(Error::InvalidInput(format!("chain: unknown preset `{p}`"))),
        (None, Some(joints)) => {
            let specs = joints
                .iter()
                .map(|j| {
                    JointSpec::new(
                        RigidTransform::from_xyz_rpy(j.xyz, j.rpy),
                        Vector3::from(j.axis),
                        j.mass,
                        Vector3::from(j.com),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let eelink = fields
                .eelink
                .as_ref()
                .map_or_else(RigidTransform::identity, |e| RigidTransform::from_xyz_rpy(e.xyz, e.rpy));
            (KinematicChain::new(specs, eelink)?, None)
        }
        (None, None) => (ur5_like(), Some(ur5_capture_state())),
    };
    let q = match (&fields.capture_q, default_q) {
        (Some(q), _) => ArmState::new(q.clone()),
        (None, Some(q)) => q,
        (None, None) => ArmState::zeros(chain.dof()),
    };
    q.check(&chain)?;
    Ok((chain, q))
}

/// Parses a scene file into a campaign configuration.
pub fn parse_scene(text: &str) -> Result<CampaignConfig> {
    let file: SceneFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    check_version(text, file.schema_version)?;
    let mut cfg = CampaignConfig::preset(file.seed.unwrap_or(0));

    if let Some(g) = file.gravity {
        let g = Vector3::from(g);
        if !(g.norm() > 0.0) {
            return Err(semantic(
                text,
                "gravity",
                Error::InvalidInput("gravity must be non-zero".into()),
            ));
        }
        cfg.estimation.gravity = g;
    }
    if let Some(chain) = &file.chain {
        let (c, q) = build_chain(chain).map_err(|e| semantic(text, "chain", e))?;
        cfg.estimation.chain = c;
        cfg.estimation.capture_state = q;
    }
    if let Some(t) = &file.table {
        cfg.workspace = Workspace {
            center: t.workspace_center.map_or(cfg.workspace.center, Vector2::from),
            half_extent: t.workspace_half_extent.map_or(cfg.workspace.half_extent, Vector2::from),
            table_z: t.z.unwrap_or(cfg.workspace.table_z),
        };
    }
    if let Some(cams) = &file.cameras {
        if let Some(top) = &cams.top {
            let d = cfg.top_camera;
            cfg.top_camera = TopCameraSpec {
                center: top.center.map_or(d.center, Vector2::from),
                height_above: top.height_above.unwrap_or(d.height_above),
                width: top.width.unwrap_or(d.width),
                height: top.height.unwrap_or(d.height),
                scale: top.scale.unwrap_or(d.scale),
            };
        }
        if let Some(side) = &cams.side {
            let d = cfg.estimation.side_camera;
            cfg.estimation.side_camera = SideCameraSpec {
                width: side.width.unwrap_or(d.width),
                height: side.height.unwrap_or(d.height),
                scale: side.scale.unwrap_or(d.scale),
            };
        }
        let top = cfg.top_camera;
        let side = cfg.estimation.side_camera;
        if top.width == 0
            || top.height == 0
            || !(top.scale > 0.0)
            || side.width == 0
            || side.height == 0
            || !(side.scale > 0.0)
        {
            return Err(semantic(
                text,
                "cameras",
                Error::InvalidInput("camera sizes and scales must be positive".into()),
            ));
        }
    }
    match file.noise.map(|n| n.sigma) {
        Some(Sigma::Value(v)) if v >= 0.0 && v.is_finite() => cfg.estimation.sigma = v,
        Some(Sigma::Value(v)) => {
            return Err(semantic(
                text,
                "noise",
                Error::InvalidInput(format!("noise sigma must be ≥ 0, got {v}")),
            ));
        }
        Some(Sigma::Named(n)) if n == "preset" => {}
        Some(Sigma::Named(n)) => {
            return Err(semantic(
                text,
                "noise",
                Error::InvalidInput(format!("noise sigma must be a number or \"preset\", got \"{n}\"")),
            ));
        }
        None => {}
    }
    // The preset sigma follows the chain and gravity actually in use.
    if !matches!(file_sigma_value(text), Some(true)) {
        cfg.estimation.sigma = preset_sigma(
            &cfg.estimation.chain,
            &cfg.estimation.capture_state,
            &cfg.estimation.gravity,
        )?;
    }
    if let Some(s) = &file.slip {
        let d = cfg.slip;
        cfg.slip = SlipParams {
            mu: s.mu.unwrap_or(d.mu),
            mu_spread: s.mu_spread.unwrap_or(d.mu_spread),
            pad_halfwidth: s.pad_halfwidth.unwrap_or(d.pad_halfwidth),
            theta_max: s.theta_max_deg.map_or(d.theta_max, f64::to_radians),
            dt: s.dt.unwrap_or(d.dt),
            slip_rate: s.slip_rate.unwrap_or(d.slip_rate),
            slide_rate: s.slide_rate.unwrap_or(d.slide_rate),
            lift_duration: s.lift_duration.unwrap_or(d.lift_duration),
            transport_duration: s.transport_duration.unwrap_or(d.transport_duration),
            transport_load: s.transport_load.unwrap_or(d.transport_load),
        };
        cfg.slip.validate().map_err(|e| semantic(text, "slip", e))?;
    }
    if let Some(o) = &file.observer {
        let d = SlipThresholds::default();
        cfg.estimation.thresholds = SlipThresholds {
            theta_slip: o.theta_slip_deg.map_or(d.theta_slip, f64::to_radians),
            slip_distance: o.slip_distance.unwrap_or(d.slip_distance),
            finger_halfwidth: o.finger_halfwidth.unwrap_or(d.finger_halfwidth),
        };
    }
    if let Some(s) = &file.solver {
        let d = SolverConfig::default();
        cfg.estimation.solver = SolverConfig {
            learning_rate: s.learning_rate.unwrap_or(d.learning_rate),
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            convergence_tol: s.convergence_tol.unwrap_or(d.convergence_tol),
            gradient_tol: s.gradient_tol.unwrap_or(d.gradient_tol),
            backtracking: s.backtracking.unwrap_or(d.backtracking),
        };
        cfg.estimation
            .solver
            .validate()
            .map_err(|e| semantic(text, "solver", e))?;
    }
    if let Some(objs) = &file.objects {
        cfg.objects = build_objects(objs, cfg.workspace.table_z).map_err(|e| semantic(text, "objects", e))?;
    }
    cfg.validate().map_err(|e| semantic(text, "objects", e))?;
    Ok(cfg)
}

/// Whether the file sets an explicit numeric sigma.
fn file_sigma_value(text: &str) -> Option<bool> {
    let file: SceneFile = toml::from_str(text).ok()?;
    Some(matches!(file.noise?.sigma, Sigma::Value(_)))
}

fn build_objects(section: &ObjectsSection, table_z: f64) -> Result<Vec<SceneObject>> {
    match (&section.preset, &section.items) {
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "objects: give either `preset` or `items`, not both".into(),
        )),
        (Some(p), None) if p == "canonical" => Ok(canonical_scene_objects()),
        (Some(p), None) => Err(Error::InvalidInput(format!("objects: unknown preset `{p}`"))),
        (None, None) => Err(Error::InvalidInput("objects: empty section".into())),
        (None, Some(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                if out.iter().any(|o: &SceneObject| o.id == it.id) {
                    return Err(Error::InvalidInput(format!("objects: duplicate id `{}`", it.id)));
                }
                let rod = RodObject::new(
                    it.length,
                    it.radius,
                    it.mass,
                    it.com_offset,
                    it.com_lateral.unwrap_or(it.radius),
                    table_pose(Vector2::zeros(), 0.0, table_z + it.radius),
                )
                .map_err(|e| Error::InvalidInput(format!("object `{}`: {e}", it.id)))?;
                if !(it.grip_force > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "object `{}`: grip_force must be positive",
                        it.id
                    )));
                }
                out.push(SceneObject {
                    id: it.id.clone(),
                    rod,
                    grip_force: it.grip_force,
                });
            }
            Ok(out)
        }
    }
}

pub fn load_scene(path: &std::path::Path) -> Result<CampaignConfig> {
    parse_scene(&std::fs::read_to_string(path)?)
}

/// Parses a chain file: `schema_version` plus the fields of a scene's
/// `[chain]` section at top level.
pub fn parse_chain(text: &str) -> Result<(KinematicChain, ArmState)> {
    let file: ChainFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    check_version(text, file.schema_version)?;
    let f = file.chain;
    build_chain(&ChainSection {
        preset: f.preset,
        joints: f.joints,
        eelink: f.eelink,
        capture_q: f.capture_q,
    })
    .map_err(|e| semantic(text, "joints", e))
}

pub fn load_chain(path: &std::path::Path) -> Result<(KinematicChain, ArmState)> {
    parse_chain(&std::fs::read_to_string(path)?)
}
