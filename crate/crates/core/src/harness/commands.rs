//! One function per command; each writes its CSV artifacts and returns the
//! report, which the caller writes as `<command>.json`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::output::{fmt_float, read_policy_csv, write_policy_csv, write_silhouette_csv, write_trace_csv};
use super::{ExperimentReport, HarnessError};
use crate::dpp::{
    bounds_for, extract_empirical_policy, run, run_seeds, BoundReport, EngineConfig, EngineKind, RecordPlan, Trace,
};
use crate::fairness::FairnessFunction;
use crate::game::{ConditionalPolicy, GameSpec, JointPmf};
use crate::static_eq::{
    build_ce_constraints, build_cce_constraints, circle_directions, convex_hull, optimize_static,
    polytope_silhouette, EquilibriumKind,
};
use crate::stochastic::{
    best_deviation, build_stochastic_constraints, certify_stochastic, complexity_report, optimize_stochastic,
};

/// Loaded game plus where outputs go.
pub struct Context {
    pub command: String,
    pub game: GameSpec,
    pub file_fairness: Option<FairnessFunction>,
    pub out: PathBuf,
}

impl Context {
    /// `--fairness` wins over the file's section; unit-weight log otherwise.
    pub fn fairness(&self, flag: Option<&str>) -> Result<FairnessFunction, HarnessError> {
        let n = self.game.num_players();
        let phi = match flag {
            Some(text) => FairnessFunction::parse(text, n)?,
            None => self
                .file_fairness
                .clone()
                .unwrap_or_else(|| FairnessFunction::weighted_log(vec![1.0; n])),
        };
        phi.validate(n)?;
        Ok(phi)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn report(&self, config: serde_json::Value, seed: Option<u64>, results: serde_json::Value, outputs: Vec<PathBuf>) -> ExperimentReport {
        ExperimentReport {
            command: self.command.clone(),
            config,
            seed,
            results,
            outputs,
        }
    }
}

pub fn validate(ctx: &Context) -> Result<ExperimentReport, HarnessError> {
    let g = &ctx.game;
    let n = g.num_players();
    let mut results = json!({
        "players": g.player_names(),
        "actions": (0..n).map(|i| g.num_actions(i)).collect::<Vec<_>>(),
        "event_alphabets": (0..=n).map(|k| g.event_names(k).len()).collect::<Vec<_>>(),
        "joint_actions": g.num_joint_actions(),
        "joint_events": g.num_joint_events(),
        "caps": g.caps(),
        "static": g.is_static(),
        "complexity": complexity_report(g),
    });
    if g.is_static() {
        results["static_rows"] = json!({
            "cce": build_cce_constraints(g)?.num_ub(),
            "ce": build_ce_constraints(g)?.num_ub(),
        });
    }
    let stoch_cce = build_stochastic_constraints(g, EquilibriumKind::Cce)?;
    results["stochastic_cce_rows"] = json!(stoch_cce.system.num_ub());
    Ok(ctx.report(json!({}), None, results, Vec::new()))
}

pub fn solve_static(ctx: &Context, kind: EquilibriumKind, fairness: Option<&str>) -> Result<ExperimentReport, HarnessError> {
    let phi = ctx.fairness(fairness)?;
    let opt = optimize_static(&ctx.game, &phi, kind)?;
    let path = ctx.path("static_pmf.csv");
    let policy = ConditionalPolicy::constant(&ctx.game, &opt.pmf)?;
    write_policy_csv(&path, &ctx.game, &policy)?;
    Ok(ctx.report(
        json!({ "kind": kind, "fairness": phi }),
        None,
        json!({
            "utilities": opt.utilities,
            "value": opt.value,
            "gap": opt.gap,
            "pmf": opt.pmf.probs(),
        }),
        vec![path],
    ))
}

pub fn solve_stochastic(ctx: &Context, kind: EquilibriumKind, fairness: Option<&str>) -> Result<ExperimentReport, HarnessError> {
    let phi = ctx.fairness(fairness)?;
    let opt = optimize_stochastic(&ctx.game, &phi, kind)?;
    let path = ctx.path("policy.csv");
    write_policy_csv(&path, &ctx.game, &opt.policy)?;
    Ok(ctx.report(
        json!({ "kind": kind, "fairness": phi }),
        None,
        json!({
            "utilities": opt.utilities,
            "value": opt.value,
            "gap": opt.gap,
            "theta": opt.theta,
        }),
        vec![path],
    ))
}

fn certification(game: &GameSpec, policy: &ConditionalPolicy, kind: EquilibriumKind) -> Result<serde_json::Value, HarnessError> {
    let report = certify_stochastic(game, policy, kind)?;
    let deviations = (0..game.num_players())
        .map(|i| best_deviation(game, policy, i, kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({ "report": report, "best_deviations": deviations }))
}

pub fn certify_policy(ctx: &Context, kind: EquilibriumKind, policy_path: &Path) -> Result<ExperimentReport, HarnessError> {
    let policy = read_policy_csv(policy_path, &ctx.game)?;
    Ok(ctx.report(
        json!({ "kind": kind, "policy": policy_path }),
        None,
        certification(&ctx.game, &policy, kind)?,
        Vec::new(),
    ))
}

pub fn silhouette(ctx: &Context, kind: EquilibriumKind, directions: usize) -> Result<ExperimentReport, HarnessError> {
    if directions == 0 {
        return Err(HarnessError::Usage("--directions must be positive".into()));
    }
    let points = polytope_silhouette(&ctx.game, kind, &circle_directions(directions))?;
    let path = ctx.path("silhouette.csv");
    write_silhouette_csv(&path, &points)?;
    let hull = convex_hull(&points.iter().map(|p| p.utilities).collect::<Vec<_>>(), 1e-9);
    Ok(ctx.report(
        json!({ "kind": kind, "directions": directions }),
        None,
        json!({ "hull": hull }),
        vec![path],
    ))
}

/// Flags shared by the online-manager commands.
#[derive(Debug, Clone)]
pub struct DppOptions {
    pub v: f64,
    pub horizon: u64,
    pub seed: u64,
    pub seeds: usize,
    pub engine: EngineKind,
    pub fairness: Option<String>,
}

impl DppOptions {
    fn config(&self, phi: FairnessFunction, v: f64) -> EngineConfig {
        EngineConfig::new(phi, v, self.horizon, self.seed).with_kind(self.engine)
    }

    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds.max(1) as u64).map(|k| self.seed + k).collect()
    }
}

/// `10, 100, …` up to `T`, then `T`.
fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut ts: Vec<u64> = std::iter::successors(Some(10u64), |t| t.checked_mul(10))
        .take_while(|&t| t < horizon)
        .collect();
    if horizon > 0 {
        ts.push(horizon);
    }
    ts
}

fn summary(trace: &Trace) -> serde_json::Value {
    json!({
        "seed": trace.config.seed,
        "slots": trace.totals.slots,
        "phi_gamma_bar": trace.final_phi(),
        "g_bar": trace.totals.avg_g(),
        "u_bar": trace.totals.avg_utilities(),
        "gamma_bar": trace.totals.avg_gamma(),
        "norm_rate": trace.final_norm_rate(),
        "max_violation": match trace.config.kind {
            EngineKind::General => trace.totals.max_violation(),
            EngineKind::Special => trace.totals.max_unconditional_violation(),
        },
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Mean `‖X(t)‖/t` over traces at each checkpoint, with the envelope.
fn envelope_rows(traces: &[Trace], bounds: &BoundReport) -> Vec<(u64, f64, f64)> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    first
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let t = r.t;
            let m = mean(traces.iter().map(|tr| tr.records[k].queue_norm / t as f64));
            (t, m, bounds.envelope(t as f64))
        })
        .collect()
}

pub fn run_dpp(ctx: &Context, opts: &DppOptions) -> Result<ExperimentReport, HarnessError> {
    let phi = ctx.fairness(opts.fairness.as_deref())?;
    let config = opts.config(phi.clone(), opts.v);
    let config_json = json!({ "engine": config, "seeds": opts.seeds.max(1) });
    if opts.seeds <= 1 {
        let trace = run(&ctx.game, config)?;
        let bounds = bounds_for(&ctx.game, &phi, opts.v, std::slice::from_ref(&trace))?;
        let path = ctx.path("trace.csv");
        write_trace_csv(&path, &ctx.game, &trace)?;
        let envelope: Vec<_> = checkpoints(opts.horizon)
            .into_iter()
            .filter_map(|t| trace.records.iter().find(|r| r.t == t))
            .map(|r| json!({ "t": r.t, "norm_rate": r.queue_norm / r.t as f64, "envelope": bounds.envelope(r.t as f64) }))
            .collect();
        return Ok(ctx.report(
            config_json,
            Some(opts.seed),
            json!({ "summary": summary(&trace), "bounds": bounds, "envelope": envelope }),
            vec![path],
        ));
    }
    let config = config.with_record(RecordPlan::At(checkpoints(opts.horizon)));
    let traces = run_seeds(&ctx.game, &config, &opts.seed_list())?;
    let bounds = bounds_for(&ctx.game, &phi, opts.v, &traces)?;
    let seeds_path = ctx.path("seeds.csv");
    write_seed_csv(&seeds_path, &ctx.game, &traces)?;
    let env_path = ctx.path("envelope.csv");
    let rows = envelope_rows(&traces, &bounds);
    write_rows(
        &env_path,
        &["t", "mean_norm_rate", "envelope"],
        rows.iter().map(|&(t, m, e)| vec![t.to_string(), fmt_float(m), fmt_float(e)]),
    )?;
    Ok(ctx.report(
        config_json,
        Some(opts.seed),
        json!({
            "mean_phi_gamma_bar": mean(traces.iter().map(Trace::final_phi)),
            "mean_norm_rate": mean(traces.iter().map(Trace::final_norm_rate)),
            "bounds": bounds,
            "runs": traces.iter().map(summary).collect::<Vec<_>>(),
        }),
        vec![seeds_path, env_path],
    ))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_seed_csv(path: &Path, game: &GameSpec, traces: &[Trace]) -> Result<(), HarnessError> {
    let n = game.num_players();
    let mut header = vec!["seed".to_string(), "phi_gamma_bar".into(), "g_bar".into(), "norm_rate".into()];
    header.extend((1..=n).map(|i| format!("ubar_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        &header,
        traces.iter().map(|t| {
            let mut row = vec![
                t.config.seed.to_string(),
                fmt_float(t.final_phi()),
                fmt_float(t.totals.avg_g()),
                fmt_float(t.final_norm_rate()),
            ];
            row.extend(t.totals.avg_utilities().iter().map(|&x| fmt_float(x)));
            row
        }),
    )
}

pub fn sweep_v(ctx: &Context, vs: &[f64], opts: &DppOptions) -> Result<ExperimentReport, HarnessError> {
    if vs.is_empty() {
        return Err(HarnessError::Usage("sweep-v needs at least one --V value".into()));
    }
    let phi = ctx.fairness(opts.fairness.as_deref())?;
    let seeds = opts.seed_list();
    let rows = vs
        .par_iter()
        .map(|&v| {
            let config = opts.config(phi.clone(), v).with_record(RecordPlan::At(Vec::new()));
            let traces = run_seeds(&ctx.game, &config, &seeds)?;
            let bounds = bounds_for(&ctx.game, &phi, v, &traces)?;
            Ok((v, traces, bounds))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|(v, traces, b)| {
            vec![
                *v,
                mean(traces.iter().map(Trace::final_phi)),
                b.utility_lower_bound,
                b.phi_star,
                mean(traces.iter().map(Trace::final_norm_rate)),
                b.envelope(opts.horizon.max(1) as f64),
            ]
        })
        .collect();
    let path = ctx.path("sweep.csv");
    let header = ["V", "mean_phi_gamma_bar", "phi_lower_bound", "phi_star", "mean_norm_rate", "envelope_T"];
    write_rows(&path, &header, table.iter().map(|r| r.iter().map(|&x| fmt_float(x)).collect()))?;
    let results: Vec<_> = table
        .iter()
        .zip(&rows)
        .map(|(r, (_, _, b))| json!({ "V": r[0], "mean_phi_gamma_bar": r[1], "mean_norm_rate": r[4], "bounds": b }))
        .collect();
    Ok(ctx.report(
        json!({ "V": vs, "T": opts.horizon, "engine": opts.engine, "fairness": phi, "seeds": seeds }),
        Some(opts.seed),
        json!(results),
        vec![path],
    ))
}

pub fn extract_policy(ctx: &Context, opts: &DppOptions, kind: EquilibriumKind) -> Result<ExperimentReport, HarnessError> {
    let phi = ctx.fairness(opts.fairness.as_deref())?;
    let config = opts.config(phi, opts.v).with_record(RecordPlan::At(Vec::new()));
    let trace = run(&ctx.game, config.clone())?;
    let policy = extract_empirical_policy(&trace, &ctx.game)?;
    let path = ctx.path("policy.csv");
    write_policy_csv(&path, &ctx.game, &policy)?;
    let mut results = certification(&ctx.game, &policy, kind)?;
    results["summary"] = summary(&trace);
    if ctx.game.num_joint_events() == 1 {
        results["pmf"] = json!(JointPmf::new(policy.row(0).to_vec())?.probs());
    }
    Ok(ctx.report(json!({ "engine": config, "kind": kind }), Some(opts.seed), results, vec![path]))
}
