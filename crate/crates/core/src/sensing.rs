//! Synthetic joint-torque snapshots before and after grasping.
//!
//! Sign convention: a snapshot stores the actuator holding torque, the torque
//! that balances gravity. Before grasping that is `−T_self`; after grasping
//! the payload's axial moment is subtracted as well, so that
//! `a·((r + Δr) × G) + τ_after − τ_before = 0` holds exactly without noise.

use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kinematics::{lever_arms, self_gravity_torques, ArmState, KinematicChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    BeforeGrasp,
    AfterGrasp,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::BeforeGrasp => "before",
            Phase::AfterGrasp => "after",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "before" => Ok(Phase::BeforeGrasp),
            "after" => Ok(Phase::AfterGrasp),
            other => Err(format!("unknown phase `{other}` (expected `before` or `after`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueSnapshot {
    pub tau: Vec<f64>,
    pub phase: Phase,
    pub state: ArmState,
}

/// Ground-truth payload: CoM offset from the eelink origin in eelink
/// coordinates, and the payload weight acting along world −z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadTruth {
    pub delta_r: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }

    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("noise sigma must be ≥ 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    /// Independent zero-mean Gaussian draws, one per joint in joint order.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![0.0; n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Direction of payload weight.
pub const WEIGHT_DIRECTION: Vector3<f64> = Vector3::new(0.0, 0.0, -1.0);

fn holding_torques(chain: &KinematicChain, state: &ArmState, gravity: &Vector3<f64>) -> Result<Vec<f64>> {
    Ok(self_gravity_torques(chain, state, gravity)?
        .into_iter()
        .map(|t| -t)
        .collect())
}

pub fn capture_before(
    chain: &KinematicChain,
    state: &ArmState,
    gravity: &Vector3<f64>,
    noise: &NoiseSpec,
) -> Result<TorqueSnapshot> {
    let ideal = holding_torques(chain, state, gravity)?;
    let tau = ideal
        .iter()
        .zip(noise.sample(ideal.len()))
        .map(|(t, e)| t + e)
        .collect();
    Ok(TorqueSnapshot {
        tau,
        phase: Phase::BeforeGrasp,
        state: state.clone(),
    })
}

pub fn capture_after(
    chain: &KinematicChain,
    state: &ArmState,
    gravity: &Vector3<f64>,
    truth: &PayloadTruth,
    noise: &NoiseSpec,
) -> Result<TorqueSnapshot> {
    if !(truth.weight >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "payload weight must be ≥ 0, got {}",
            truth.weight
        )));
    }
    let ideal = holding_torques(chain, state, gravity)?;
    let arms = lever_arms(chain, state)?;
    let delta_world = arms.eelink_frame.transform_vector(&truth.delta_r);
    let force = WEIGHT_DIRECTION * truth.weight;
    let tau = ideal
        .iter()
        .zip(&arms.joints)
        .zip(noise.sample(ideal.len()))
        .map(|((t, lever), e)| t - lever.axis.dot(&(lever.r_to_eelink + delta_world).cross(&force)) + e)
        .collect();
    Ok(TorqueSnapshot {
        tau,
        phase: Phase::AfterGrasp,
        state: state.clone(),
    })
}

/// Noise level used by experiment presets: 0.5% of the largest holding
/// torque at the capture configuration.
pub fn preset_sigma(chain: &KinematicChain, state: &ArmState, gravity: &Vector3<f64>) -> Result<f64> {
    let tau = holding_torques(chain, state, gravity)?;
    Ok(0.005 * tau.iter().fold(0.0_f64, |m, t| m.max(t.abs())))
}

/// A before/after pair is usable when both phases are present, the lengths
/// agree and the arm did not move between captures.
pub fn check_pair(before: &TorqueSnapshot, after: &TorqueSnapshot) -> Result<()> {
    if before.phase != Phase::BeforeGrasp || after.phase != Phase::AfterGrasp {
        return Err(Error::InvalidInput("snapshot pair must be (before, after)".into()));
    }
    if before.tau.len() != after.tau.len() {
        return Err(Error::DimensionMismatch {
            expected: before.tau.len(),
            got: after.tau.len(),
        });
    }
    if before.state != after.state {
        return Err(Error::InvalidInput(
            "before and after snapshots were taken at different joint configurations".into(),
        ));
    }
    if before.state.q.len() != before.tau.len() {
        return Err(Error::DimensionMismatch {
            expected: before.tau.len(),
            got: before.state.q.len(),
        });
    }
    Ok(())
}

pub const SNAPSHOT_HEADER: &str = "# comgrasp torque snapshot v1";

/// Writes a snapshot pair as line records `<joint> <phase> <q> <tau>`.
///
/// Joints are numbered from 1 at the base; `q` is in radians and `tau` in
/// N·m, both written with round-trip precision. Lines starting with `#` are
/// comments.
pub fn write_snapshot_pair<W: Write>(before: &TorqueSnapshot, after: &TorqueSnapshot, mut out: W) -> Result<()> {
    check_pair(before, after)?;
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    writeln!(out, "# joint phase q tau")?;
    for snap in [before, after] {
        for (i, (q, tau)) in snap.state.q.iter().zip(&snap.tau).enumerate() {
            writeln!(out, "{} {} {:?} {:?}", i + 1, snap.phase, q, tau)?;
        }
    }
    Ok(())
}

/// Reads a snapshot pair; record order is irrelevant, every joint must
/// appear exactly once per phase, and both phases must agree on `q`.
pub fn read_snapshot_pair<R: BufRead>(input: R) -> Result<(TorqueSnapshot, TorqueSnapshot)> {
    let mut before: Vec<Option<(f64, f64)>> = Vec::new();
    let mut after: Vec<Option<(f64, f64)>> = Vec::new();
    let mut last_line = 0;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let err = |message: String| Error::Parse { line: lineno, message };
        if fields.len() != 4 {
            return Err(err(format!(
                "expected 4 fields `joint phase q tau`, found {}",
                fields.len()
            )));
        }
        let joint: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid joint index `{}`", fields[0])))?;
        if joint == 0 {
            return Err(err("joint indices start at 1".into()));
        }
        let phase: Phase = fields[1].parse().map_err(err)?;
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| err(format!("invalid {what} `{s}`")))?;
            if !v.is_finite() {
                return Err(err(format!("{what} must be finite")));
            }
            Ok(v)
        };
        let q = parse_f(fields[2], "joint angle")?;
        let tau = parse_f(fields[3], "torque")?;
        let table = match phase {
            Phase::BeforeGrasp => &mut before,
            Phase::AfterGrasp => &mut after,
        };
        if table.len() < joint {
            table.resize(joint, None);
        }
        if table[joint - 1].is_some() {
            return Err(err(format!("duplicate record for joint {joint} ({phase})")));
        }
        table[joint - 1] = Some((q, tau));
    }

    let n = before.len().max(after.len());
    if n == 0 {
        return Err(Error::Parse {
            line: last_line,
            message: "no snapshot records".into(),
        });
    }
    let collect = |table: &[Option<(f64, f64)>], phase: Phase| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut q = Vec::with_capacity(n);
        let mut tau = Vec::with_capacity(n);
        for j in 0..n {
            match table.get(j).copied().flatten() {
                Some((qj, tj)) => {
                    q.push(qj);
                    tau.push(tj);
                }
                None => {
                    return Err(Error::Parse {
                        line: last_line,
                        message: format!("missing {phase} record for joint {}", j + 1),
                    })
                }
            }
        }
        Ok((q, tau))
    };
    let (qb, tb) = collect(&before, Phase::BeforeGrasp)?;
    let (qa, ta) = collect(&after, Phase::AfterGrasp)?;
    if qb != qa {
        return Err(Error::Parse {
            line: last_line,
            message: "before and after records disagree on joint angles".into(),
        });
    }
    let state = ArmState::new(qb);
    Ok((
        TorqueSnapshot {
            tau: tb,
            phase: Phase::BeforeGrasp,
            state: state.clone(),
        },
        TorqueSnapshot {
            tau: ta,
            phase: Phase::AfterGrasp,
            state,
        },
    ))
}
