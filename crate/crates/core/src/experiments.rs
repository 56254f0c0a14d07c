//! Replicated simulations, parameter sweeps and policy tables.
//!
//! Each sweep point gets one access plan per compared scheme. For the
//! nested policy the plan comes from the mean-field load equilibrium, run
//! with the first replication seed; every replication then simulates that
//! plan with its own seed. Schemes share seeds, so differences between them
//! are paired.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel::ChannelModel;
use crate::congestion::CongestionProfile;
use crate::error::{Error, Result};
use crate::policy::{backward_induction, backward_induction_markov, Action, Continuation};
use crate::rng::replication_seed;
use crate::scenario::{per_user_arrival_rate, total_arrival_rate, validate_grid, Axis, Scenario};
use crate::sim::{
    baseline_policy, build_plan, equilibrium_loads, run, AccessPlan, PolicyKind, SensingOrder, SimConfig, SimStats,
};

/// One access scheme under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub policy: PolicyKind,
    pub order: SensingOrder,
}

/// The scenario evaluated at one value of the swept parameter.
#[derive(Debug, Clone)]
pub struct Point {
    pub axis: Option<Axis>,
    /// Value of the swept parameter, or the offered load when not sweeping.
    pub value: f64,
    pub load: f64,
    pub config: SimConfig,
    pub channels: Vec<ChannelModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumInfo {
    pub rounds: usize,
    pub converged: bool,
    pub loads: Vec<f64>,
    pub history: Vec<Vec<f64>>,
}

/// One simulated replication.
#[derive(Debug, Clone)]
pub struct Record {
    pub config_hash: String,
    pub axis: Option<Axis>,
    pub value: f64,
    pub load: f64,
    pub transmission_time: u32,
    pub n_channels: usize,
    pub variant: Variant,
    pub replication: usize,
    pub seed: u64,
    /// Attempt rates the policies were built for.
    pub plan_loads: Vec<f64>,
    pub stats: SimStats,
}

/// Mean and 95% confidence half-width over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// NaN with fewer than two samples.
    pub half_width: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, half_width: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, half_width: f64::NAN };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let q = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof").inverse_cdf(0.975);
        Self { mean, half_width: q * (var / n as f64).sqrt() }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub axis: Option<Axis>,
    pub value: f64,
    pub variant: Variant,
    pub replications: usize,
    pub throughput: Estimate,
    pub data_rate: Estimate,
    /// Total measured attempt rate.
    pub attempt_rate: Estimate,
    pub equilibrium: Option<EquilibriumInfo>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub records: Vec<Record>,
    pub summaries: Vec<Summary>,
}

impl Report {
    pub fn summary(&self, value: f64, variant: Variant) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.value == value && s.variant == variant)
    }

    /// Summaries of one scheme in grid order.
    pub fn series(&self, variant: Variant) -> Vec<&Summary> {
        self.summaries.iter().filter(|s| s.variant == variant).collect()
    }
}

/// Schemes compared by `simulate` and `sweep`.
pub fn variants(scenario: &Scenario) -> Vec<Variant> {
    let mut out = Vec::new();
    for &policy in &scenario.compare.policies {
        let orders: Vec<SensingOrder> = match policy {
            PolicyKind::Baseline => vec![scenario.system.sensing_order],
            PolicyKind::Nested => {
                std::iter::once(scenario.system.sensing_order).chain(scenario.compare.sensing_orders.iter().copied()).collect()
            }
        };
        for order in orders {
            let v = Variant { policy, order };
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Expands the scenario over `grid` on `axis`, or returns the single base
/// point when `axis` is `None`.
///
/// A sweep over `T` holds the offered load fixed, so packets arrive less
/// often as transmissions get longer. A sweep over `N` holds the total
/// arrival rate of the base scenario fixed and adds copies of the listed
/// channels in order.
pub fn points(scenario: &Scenario, axis: Option<Axis>, grid: &[f64]) -> Result<Vec<Point>> {
    let base = scenario.sim_config();
    let channels = scenario.build_channels()?;
    let load = scenario.system.load;
    let Some(axis) = axis else {
        return Ok(vec![Point { axis: None, value: load, load, config: base, channels }]);
    };
    validate_grid(axis, grid)?;
    grid.iter()
        .map(|&value| {
            let mut config = base.clone();
            let mut chans = channels.clone();
            let mut point_load = load;
            match axis {
                Axis::G => {
                    point_load = value;
                    config.arrival_rate =
                        per_user_arrival_rate(total_arrival_rate(value, chans.len(), config.transmission_time), config.n_users);
                }
                Axis::T => {
                    config.transmission_time = value as u32;
                    config.arrival_rate =
                        per_user_arrival_rate(total_arrival_rate(load, chans.len(), config.transmission_time), config.n_users);
                }
                Axis::N => {
                    let n = value as usize;
                    chans = (0..n).map(|j| channels[j % channels.len()].clone()).collect();
                }
            }
            config.validate()?;
            Ok(Point { axis: Some(axis), value, load: point_load, config, channels: chans })
        })
        .collect()
}

/// Hash of everything that determines a sweep point's results apart from
/// the replication seed.
pub fn config_hash(scenario: &Scenario, point: &Point, variant: Variant) -> String {
    let mut h = Sha256::new();
    h.update(scenario.to_toml().as_bytes());
    let axis = point.axis.map(|a| a.to_string()).unwrap_or_default();
    h.update(format!("\naxis={axis} value={} policy={} order={}", point.value, variant.policy, variant.order).as_bytes());
    h.update(format!(" mode={} T={} N={}", point.config.mode, point.config.transmission_time, point.channels.len()).as_bytes());
    let digest = h.finalize();
    digest.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Access plan for one scheme at one point.
pub fn plan_for(scenario: &Scenario, point: &Point, variant: Variant) -> Result<(AccessPlan, Option<EquilibriumInfo>)> {
    let config = SimConfig {
        policy_kind: variant.policy,
        sensing_order: variant.order,
        seed: replication_seed(point.config.seed, 0),
        ..point.config.clone()
    };
    match variant.policy {
        PolicyKind::Baseline => Ok((baseline_policy(&config, &point.channels)?, None)),
        PolicyKind::Nested => {
            let eq = &scenario.equilibrium;
            let initial = vec![eq.initial_load; point.channels.len()];
            if !eq.enabled {
                return Ok((build_plan(&config, &point.channels, &initial)?, None));
            }
            let result = equilibrium_loads(&config, &point.channels, &initial, eq.options())?;
            let info = EquilibriumInfo {
                rounds: result.rounds,
                converged: result.converged,
                loads: result.loads.clone(),
                history: result.history.clone(),
            };
            Ok((result.plan, Some(info)))
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Runs every scheme of the scenario at every point.
pub fn evaluate(scenario: &Scenario, points: &[Point]) -> Result<Report> {
    let variants = variants(scenario);
    let jobs: Vec<(usize, Variant)> = (0..points.len()).flat_map(|p| variants.iter().map(move |&v| (p, v))).collect();
    let plans = par_map(&jobs, |&(p, v)| plan_for(scenario, &points[p], v));
    let plans = plans.into_iter().collect::<Result<Vec<_>>>()?;

    let reps = scenario.compare.replications;
    let runs: Vec<(usize, usize)> = (0..jobs.len()).flat_map(|j| (0..reps).map(move |r| (j, r))).collect();
    let stats = par_map(&runs, |&(j, r)| {
        let (p, v) = jobs[j];
        let config = SimConfig {
            policy_kind: v.policy,
            sensing_order: v.order,
            seed: replication_seed(points[p].config.seed, r as u64),
            ..points[p].config.clone()
        };
        run(&config, &points[p].channels, &plans[j].0)
    });
    let stats = stats.into_iter().collect::<Result<Vec<_>>>()?;

    let hashes: Vec<String> = jobs.iter().map(|&(p, v)| config_hash(scenario, &points[p], v)).collect();
    let mut records = Vec::with_capacity(runs.len());
    for (&(j, r), s) in runs.iter().zip(stats) {
        let (p, v) = jobs[j];
        let point = &points[p];
        records.push(Record {
            config_hash: hashes[j].clone(),
            axis: point.axis,
            value: point.value,
            load: point.load,
            transmission_time: point.config.transmission_time,
            n_channels: point.channels.len(),
            variant: v,
            replication: r,
            seed: replication_seed(point.config.seed, r as u64),
            plan_loads: plans[j].0.loads.clone(),
            stats: s,
        });
    }
    let summaries = jobs
        .iter()
        .enumerate()
        .map(|(j, &(p, v))| {
            let mine: Vec<&Record> = records.iter().skip(j * reps).take(reps).collect();
            let pick = |f: fn(&SimStats) -> f64| Estimate::from_samples(&mine.iter().map(|r| f(&r.stats)).collect::<Vec<_>>());
            Summary {
                config_hash: hashes[j].clone(),
                axis: points[p].axis,
                value: points[p].value,
                variant: v,
                replications: reps,
                throughput: pick(|s| s.throughput),
                data_rate: pick(|s| s.data_rate),
                attempt_rate: pick(SimStats::total_attempt_rate),
                equilibrium: plans[j].1.clone(),
            }
        })
        .collect();
    Ok(Report { scenario: scenario.name.clone(), records, summaries })
}

/// The `simulate` command: replications of the base point.
pub fn simulate(scenario: &Scenario) -> Result<Report> {
    evaluate(scenario, &points(scenario, None, &[])?)
}

/// The `sweep` command. `axis` and `grid` default to the scenario's
/// `[sweep]` table.
pub fn sweep(scenario: &Scenario, axis: Option<Axis>, grid: Option<&[f64]>) -> Result<Report> {
    let table = scenario.sweep.as_ref();
    let axis = axis
        .or(table.map(|s| s.axis))
        .ok_or_else(|| Error::Scenario("sweep: no axis given and the scenario has no [sweep] table".into()))?;
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => match table {
            Some(s) if s.axis == axis => s.grid.clone(),
            _ => return Err(Error::Scenario(format!("sweep: no grid given for axis {axis}"))),
        },
    };
    evaluate(scenario, &points(scenario, Some(axis), &grid)?)
}

fn axis_label(axis: Option<Axis>) -> String {
    axis.map(|a| a.to_string()).unwrap_or_else(|| "none".into())
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub const RUN_COLUMNS: &[&str] = &[
    "config_hash",
    "scenario",
    "axis",
    "value",
    "load",
    "T",
    "N",
    "users",
    "policy_kind",
    "sensing_order",
    "replication",
    "seed",
    "throughput",
    "data_rate",
    "delivered_bytes",
    "attempt_rate",
    "success_fraction",
    "stop",
    "stay",
    "switch",
    "packets_generated",
    "packets_delivered",
    "packets_queued",
    "per_channel_attempt_rate",
];

pub const CHANNEL_COLUMNS: &[&str] = &[
    "config_hash",
    "axis",
    "value",
    "policy_kind",
    "sensing_order",
    "replication",
    "seed",
    "channel",
    "plan_load",
    "attempt_rate",
    "contention_delay",
    "contention_samples",
    "switching_delay",
    "switching_samples",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "config_hash",
    "scenario",
    "axis",
    "value",
    "policy_kind",
    "sensing_order",
    "replications",
    "throughput_mean",
    "throughput_ci95",
    "data_rate_mean",
    "data_rate_ci95",
    "attempt_rate_mean",
    "attempt_rate_ci95",
    "equilibrium_rounds",
    "equilibrium_converged",
    "equilibrium_loads",
];

/// Writes `runs.csv`, `channels.csv` and `summary.csv` into `dir` and
/// returns their paths.
pub fn write_report(report: &Report, dir: &Path, users: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| csv_error(dir, e))?;
    let runs_path = dir.join("runs.csv");
    write_rows(
        &runs_path,
        RUN_COLUMNS,
        report.records.iter().map(|r| {
            let s = &r.stats;
            let success = if s.attempts > 0 { s.successful_attempts as f64 / s.attempts as f64 } else { 0.0 };
            vec![
                r.config_hash.clone(),
                report.scenario.clone(),
                axis_label(r.axis),
                r.value.to_string(),
                r.load.to_string(),
                r.transmission_time.to_string(),
                r.n_channels.to_string(),
                users.to_string(),
                r.variant.policy.to_string(),
                r.variant.order.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                s.throughput.to_string(),
                s.data_rate.to_string(),
                s.delivered_bytes.to_string(),
                s.total_attempt_rate().to_string(),
                success.to_string(),
                s.decision_count(Action::Stop).to_string(),
                s.decision_count(Action::Stay).to_string(),
                s.decision_count(Action::Switch).to_string(),
                s.packets_generated.to_string(),
                s.packets_delivered.to_string(),
                s.packets_queued.to_string(),
                join(&s.attempt_rates),
            ]
        }),
    )?;

    let channels_path = dir.join("channels.csv");
    write_rows(
        &channels_path,
        CHANNEL_COLUMNS,
        report.records.iter().flat_map(|r| {
            let s = &r.stats;
            (0..s.attempt_rates.len()).map(move |j| {
                vec![
                    r.config_hash.clone(),
                    axis_label(r.axis),
                    r.value.to_string(),
                    r.variant.policy.to_string(),
                    r.variant.order.to_string(),
                    r.replication.to_string(),
                    r.seed.to_string(),
                    (j + 1).to_string(),
                    r.plan_loads[j].to_string(),
                    s.attempt_rates[j].to_string(),
                    s.contention_delays[j].to_string(),
                    s.contention_samples[j].to_string(),
                    s.switching_delays[j].to_string(),
                    s.switching_samples[j].to_string(),
                ]
            })
        }),
    )?;

    let summary_path = dir.join("summary.csv");
    write_rows(
        &summary_path,
        SUMMARY_COLUMNS,
        report.summaries.iter().map(|s| {
            let (rounds, converged, loads) = match &s.equilibrium {
                Some(e) => (e.rounds.to_string(), e.converged.to_string(), join(&e.loads)),
                None => (String::new(), String::new(), String::new()),
            };
            vec![
                s.config_hash.clone(),
                report.scenario.clone(),
                axis_label(s.axis),
                s.value.to_string(),
                s.variant.policy.to_string(),
                s.variant.order.to_string(),
                s.replications.to_string(),
                s.throughput.mean.to_string(),
                s.throughput.half_width.to_string(),
                s.data_rate.mean.to_string(),
                s.data_rate.half_width.to_string(),
                s.attempt_rate.mean.to_string(),
                s.attempt_rate.half_width.to_string(),
                rounds,
                converged,
                loads,
            ]
        }),
    )?;
    Ok(vec![runs_path, channels_path, summary_path])
}

/// Human-readable mean ± 95% CI lines, one per scheme and point.
pub fn summary_text(report: &Report) -> String {
    let mut out = String::new();
    for s in &report.summaries {
        let eq = match &s.equilibrium {
            Some(e) if e.converged => format!("  equilibrium in {} rounds", e.rounds),
            Some(e) => format!("  equilibrium NOT converged after {} rounds", e.rounds),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{}={:<6} {:<8} {:<22} throughput {:.4} ± {:.4}  data rate {:.4} ± {:.4}  (n={}){}",
            axis_label(s.axis),
            s.value,
            s.variant.policy,
            s.variant.order,
            s.throughput.mean,
            s.throughput.half_width,
            s.data_rate.mean,
            s.data_rate.half_width,
            s.replications,
            eq
        );
    }
    out
}

/// One row of a policy table.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyRow {
    Iid {
        load: f64,
        stage: usize,
        channel: usize,
        contention_delay: f64,
        switching_delay: f64,
        switch_value: f64,
        threshold: f64,
        stage_value: f64,
        continuation: Continuation,
    },
    Markov {
        load: f64,
        stage: usize,
        channel: usize,
        contention_delay: f64,
        state: usize,
        reward: f64,
        switch_value: f64,
        value: f64,
        action: Action,
    },
}

/// Policy tables for a user sensing the channels in file order, one per
/// uniform attempt rate in `scenario.policy.loads`.
pub fn policy_tables(scenario: &Scenario) -> Result<Vec<PolicyRow>> {
    let channels = scenario.build_channels()?;
    let config = scenario.sim_config();
    let t = config.t();
    let mut rows = Vec::new();
    for &g in &scenario.policy.loads {
        let profiles = CongestionProfile::for_loads(&vec![g; channels.len()], t, config.mean_backoff)?;
        let tc: Vec<f64> = profiles.iter().map(|p| p.contention_delay).collect();
        let ts: Vec<f64> = profiles.iter().map(|p| p.switching_delay).collect();
        if channels.iter().all(|c| matches!(c, ChannelModel::Iid(_))) {
            let dists: Vec<_> = channels
                .iter()
                .map(|c| match c {
                    ChannelModel::Iid(d) => d.clone(),
                    ChannelModel::Markov(_) => unreachable!(),
                })
                .collect();
            let table = backward_induction(&dists, &tc, &ts, t)?;
            for (i, s) in table.stages.iter().enumerate() {
                rows.push(PolicyRow::Iid {
                    load: g,
                    stage: i + 1,
                    channel: i + 1,
                    contention_delay: tc[i],
                    switching_delay: ts[i],
                    switch_value: s.switch_value,
                    threshold: s.threshold,
                    stage_value: s.stage_value,
                    continuation: s.continuation,
                });
            }
        } else {
            let chains: Vec<_> = channels
                .iter()
                .map(|c| match c {
                    ChannelModel::Markov(m) => m.clone(),
                    ChannelModel::Iid(_) => unreachable!(),
                })
                .collect();
            let table = backward_induction_markov(&chains, &tc, &ts, t, config.discount)?;
            for (i, s) in table.stages.iter().enumerate() {
                for (state, &action) in s.actions.iter().enumerate() {
                    rows.push(PolicyRow::Markov {
                        load: g,
                        stage: i + 1,
                        channel: i + 1,
                        contention_delay: s.contention_delay as f64,
                        state: state + 1,
                        reward: s.rewards[state],
                        switch_value: s.switch_value,
                        value: s.values[state],
                        action,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub const IID_POLICY_COLUMNS: &[&str] =
    &["load", "stage", "channel", "t_c", "t_s", "switch_value", "threshold", "stage_value", "continuation"];
pub const MARKOV_POLICY_COLUMNS: &[&str] =
    &["load", "stage", "channel", "t_c", "state", "reward", "switch_value", "value", "action"];

fn policy_record(row: &PolicyRow) -> Vec<String> {
    match row {
        PolicyRow::Iid { load, stage, channel, contention_delay, switching_delay, switch_value, threshold, stage_value, continuation } => vec![
            load.to_string(),
            stage.to_string(),
            channel.to_string(),
            contention_delay.to_string(),
            switching_delay.to_string(),
            switch_value.to_string(),
            threshold.to_string(),
            stage_value.to_string(),
            continuation.action().to_string(),
        ],
        PolicyRow::Markov { load, stage, channel, contention_delay, state, reward, switch_value, value, action } => vec![
            load.to_string(),
            stage.to_string(),
            channel.to_string(),
            contention_delay.to_string(),
            state.to_string(),
            reward.to_string(),
            switch_value.to_string(),
            value.to_string(),
            action.to_string(),
        ],
    }
}

/// Writes `policy.csv` into `dir`.
pub fn write_policy(rows: &[PolicyRow], dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| csv_error(dir, e))?;
    let path = dir.join("policy.csv");
    let header = match rows.first() {
        Some(PolicyRow::Markov { .. }) => MARKOV_POLICY_COLUMNS,
        _ => IID_POLICY_COLUMNS,
    };
    write_rows(&path, header, rows.iter().map(policy_record))?;
    Ok(path)
}

/// Tab-separated rendering of policy rows for the terminal.
pub fn policy_text(rows: &[PolicyRow]) -> String {
    let header = match rows.first() {
        Some(PolicyRow::Markov { .. }) => MARKOV_POLICY_COLUMNS,
        _ => IID_POLICY_COLUMNS,
    };
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = policy_record(row)
            .into_iter()
            .map(|c| match c.parse::<f64>() {
                Ok(x) if c.contains('.') => format!("{x:.4}"),
                _ => c,
            })
            .collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
