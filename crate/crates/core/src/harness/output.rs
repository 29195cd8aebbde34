use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dpp::{EngineKind, Trace};
use crate::game::{ConditionalPolicy, GameSpec};
use crate::static_eq::SilhouettePoint;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// What a command did, serialized as JSON next to its CSV artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: serde_json::Value,
    pub outputs: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        std::fs::write(path, self.to_json()).map_err(io_err(path))
    }
}

/// Header of the policy CSV.
pub const POLICY_HEADER: [&str; 5] = ["event", "action", "event_label", "action_label", "prob"];

/// One row per `(ω, α)` pair.
pub fn write_policy_csv(path: &Path, game: &GameSpec, policy: &ConditionalPolicy) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record(POLICY_HEADER)?;
    for e in 0..policy.num_events() {
        for (a, &p) in policy.row(e).iter().enumerate() {
            w.write_record([
                e.to_string(),
                a.to_string(),
                game.event_label(e),
                game.action_label(a),
                fmt_float(p),
            ])?;
        }
    }
    w.flush().map_err(io_err(path))
}

#[derive(Deserialize)]
struct PolicyRow {
    event: usize,
    action: usize,
    prob: f64,
}

/// Reads a policy CSV; pairs not listed get probability zero.
pub fn read_policy_csv(path: &Path, game: &GameSpec) -> Result<ConditionalPolicy, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let na = game.num_joint_actions();
    let mut probs = vec![0.0; game.num_joint_events() * na];
    for (k, row) in r.deserialize::<PolicyRow>().enumerate() {
        let row = row?;
        if row.event >= game.num_joint_events() || row.action >= na {
            return Err(HarnessError::Parse {
                section: format!("{} row {}", path.display(), k + 2),
                message: format!("pair ({}, {}) is out of range", row.event, row.action),
            });
        }
        probs[row.event * na + row.action] = row.prob;
    }
    Ok(ConditionalPolicy::new(game, probs)?)
}

pub fn write_silhouette_csv(path: &Path, points: &[SilhouettePoint]) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    w.write_record(["dx", "dy", "u1", "u2"])?;
    for p in points {
        w.write_record([
            fmt_float(p.direction[0]),
            fmt_float(p.direction[1]),
            fmt_float(p.utilities[0]),
            fmt_float(p.utilities[1]),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// Trace CSV columns. `theta` lists nonzero entries as `i:v=value`
/// separated by `;`; the special-case engine writes `Q_i_b` per action
/// instead of `Q_i` and `Jsum_i`.
pub fn trace_header(game: &GameSpec, kind: EngineKind) -> Vec<String> {
    let n = game.num_players();
    let mut h = vec!["t".to_string()];
    h.extend((0..=n).map(|k| format!("omega_{k}")));
    h.extend((1..=n).map(|i| format!("alpha_{i}")));
    h.extend((1..=n).map(|i| format!("gamma_{i}")));
    h.push("theta".into());
    h.extend((1..=n).map(|i| format!("u_{i}")));
    h.extend((1..=n).map(|i| format!("Z_{i}")));
    match kind {
        EngineKind::General => {
            h.extend((1..=n).map(|i| format!("Q_{i}")));
            h.extend((1..=n).map(|i| format!("Jsum_{i}")));
        }
        EngineKind::Special => {
            for i in 0..n {
                h.extend((0..game.num_actions(i)).map(|b| format!("Q_{}_{b}", i + 1)));
            }
        }
    }
    h.push("norm".into());
    h.extend((1..=n).map(|i| format!("ubar_{i}")));
    h.push("gbar".into());
    h
}

pub fn write_trace_csv(path: &Path, game: &GameSpec, trace: &Trace) -> Result<(), HarnessError> {
    let mut w = writer(path)?;
    let kind = trace.config.kind;
    w.write_record(trace_header(game, kind))?;
    let n = game.num_players();
    for r in &trace.records {
        let d = &r.decision;
        let mut row = vec![r.t.to_string()];
        row.extend(game.event_radix().decode(d.event).iter().map(usize::to_string));
        row.extend(game.action_radix().decode(d.action).iter().map(usize::to_string));
        row.extend(d.gamma.iter().map(|&x| fmt_float(x)));
        let theta: Vec<String> = (0..n)
            .filter(|&i| d.theta[i] != 0.0)
            .map(|i| format!("{}:{}={}", i + 1, d.observed[i], fmt_float(d.theta[i])))
            .collect();
        row.push(theta.join(";"));
        row.extend(d.utilities.iter().map(|&x| fmt_float(x)));
        row.extend(r.queues.z.iter().map(|&x| fmt_float(x)));
        match kind {
            EngineKind::General => {
                row.extend(r.queues.q.iter().map(|&x| fmt_float(x)));
                row.extend(r.queues.deviation_totals().iter().map(|&x| fmt_float(x)));
            }
            EngineKind::Special => {
                row.extend(r.queues.j.iter().flatten().map(|&x| fmt_float(x)));
            }
        }
        row.push(fmt_float(r.queue_norm));
        row.extend(r.avg_u.iter().map(|&x| fmt_float(x)));
        row.push(fmt_float(r.avg_g));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))
}
