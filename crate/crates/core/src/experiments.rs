//! Seeded experiment harness: per-policy equilibrium metrics, batch sweeps
//! over (repetition, device count, slice count, policy) cells, and CSV
//! output suitable for post-processing.
//!
//! Rows carry raw per-seed values; statistics over seeds are deliberately
//! left to the consumer. Cells are independent, so the sweep runs them in
//! parallel when the `parallel` feature is enabled and assembles rows in a
//! canonical order that does not depend on execution interleaving.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::allocation::{self, InterSlicePolicy};
use crate::cost;
use crate::error::{Error, Result};
use crate::model::{Decision, DecisionVector, Scenario};
use crate::scenario::{self, GeneratorParams};
use crate::solver::{self, CosOptions, UpdateOrder};

/// Inter-slice policies the harness knows how to label and reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Optimal,
    Equal,
    CloudProportional,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Optimal => "optimal",
            PolicyKind::Equal => "equal",
            PolicyKind::CloudProportional => "cloud-proportional",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(PolicyKind::Optimal),
            "equal" => Ok(PolicyKind::Equal),
            "cloud-proportional" => Ok(PolicyKind::CloudProportional),
            other => Err(Error::InvalidConfig(format!("unknown policy: {other}"))),
        }
    }

    pub fn to_policy(self) -> InterSlicePolicy {
        match self {
            PolicyKind::Optimal => InterSlicePolicy::Optimal,
            PolicyKind::Equal => InterSlicePolicy::Equal,
            PolicyKind::CloudProportional => InterSlicePolicy::CloudProportional,
        }
    }
}

/// Device update order, in config form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    #[default]
    RoundRobin,
    Random,
}

impl OrderKind {
    fn to_update_order(self, seed: u64) -> UpdateOrder {
        match self {
            OrderKind::RoundRobin => UpdateOrder::RoundRobin,
            OrderKind::Random => UpdateOrder::SeededRandom(seed),
        }
    }
}

/// Batch sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub s_list: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub order: OrderKind,
    /// Generator settings shared by all cells; `n_devices`, `n_slices` and
    /// `seed` are overridden per cell.
    pub generator: GeneratorParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_list: (1..=10).map(|k| k * 10).collect(),
            s_list: vec![1, 2, 3, 4],
            policies: vec![
                PolicyKind::Optimal,
                PolicyKind::Equal,
                PolicyKind::CloudProportional,
            ],
            repetitions: 30,
            seed_base: 1,
            order: OrderKind::RoundRobin,
            generator: GeneratorParams::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(json)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::InvalidConfig("n_list is empty".into()));
        }
        if self.s_list.is_empty() {
            return Err(Error::InvalidConfig("s_list is empty".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("policies is empty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// One sweep row: the outcome of one (seed, N, S, policy) solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub seed: u64,
    pub n: usize,
    pub s: usize,
    pub policy: PolicyKind,
    pub system_cost: f64,
    pub pg: f64,
    pub iterations: u64,
    pub offloaders_per_slice: Vec<usize>,
    pub cost_ratio_per_slice: Vec<f64>,
    pub runtime_ms: f64,
}

/// Maximum number of per-slice columns in the CSV layout.
pub const MAX_SLICE_COLUMNS: usize = 4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

/// System performance gain of a policy: the ratio of the equal-share
/// equilibrium cost to the policy's own equilibrium cost, each equilibrium
/// computed by its own solver run.
pub fn performance_gain(
    scenario: &Scenario,
    policy: PolicyKind,
    options: &CosOptions,
) -> Result<f64> {
    let equal_cost = equilibrium_cost(scenario, PolicyKind::Equal, options)?;
    let policy_cost = equilibrium_cost(scenario, policy, options)?;
    Ok(equal_cost / policy_cost)
}

fn equilibrium_cost(
    scenario: &Scenario,
    policy: PolicyKind,
    options: &CosOptions,
) -> Result<f64> {
    let p = policy.to_policy();
    let model = solver::cost_model_for_policy(scenario, &p)?;
    let run = solver::cos_run_with_model(scenario, model.clone(), options)?;
    cost::reduced_system_cost(scenario, &run.equilibrium, &model)
}

/// Offloader counts and slice cost shares of an equilibrium under a policy:
/// `n^s` counts every offloader once via its chosen slice, and the cost
/// ratio divides each slice's aggregate completion time by the system cost.
pub fn slice_stats(
    scenario: &Scenario,
    policy: PolicyKind,
    equilibrium: &DecisionVector,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut counts = vec![0usize; scenario.num_slices()];
    for d in equilibrium.iter() {
        if let Decision::Offload { slice, .. } = d {
            counts[slice] += 1;
        }
    }
    let coeffs =
        allocation::coefficients_for_policy(scenario, equilibrium, &policy.to_policy())?;
    let breakdown = cost::system_cost(scenario, equilibrium, &coeffs)?;
    let ratios = breakdown
        .per_slice
        .iter()
        .map(|c| c / breakdown.system)
        .collect();
    Ok((counts, ratios))
}

fn run_cell(config: &SweepConfig, rep: usize, n: usize, s: usize) -> Result<Vec<ReportRow>> {
    let seed = config.seed_base + rep as u64;
    let params = GeneratorParams {
        n_devices: n,
        n_slices: s,
        seed,
        ..config.generator.clone()
    };
    let sc = scenario::generate(&params)?;
    let options = CosOptions {
        order: config.order.to_update_order(seed),
        ..CosOptions::default()
    };

    // The equal-share equilibrium anchors the performance gain of every row.
    let equal_cost = equilibrium_cost(&sc, PolicyKind::Equal, &options)?;

    let mut rows = Vec::with_capacity(config.policies.len());
    for &policy in &config.policies {
        let p = policy.to_policy();
        let model = solver::cost_model_for_policy(&sc, &p)?;
        let started = Instant::now();
        let run = solver::cos_run_with_model(&sc, model.clone(), &options)?;
        let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        let system_cost = cost::reduced_system_cost(&sc, &run.equilibrium, &model)?;
        let (offloaders_per_slice, cost_ratio_per_slice) =
            slice_stats(&sc, policy, &run.equilibrium)?;
        rows.push(ReportRow {
            seed,
            n,
            s,
            policy,
            system_cost,
            pg: equal_cost / system_cost,
            iterations: run.iterations,
            offloaders_per_slice,
            cost_ratio_per_slice,
            runtime_ms,
        });
    }
    Ok(rows)
}

fn cells(config: &SweepConfig) -> Vec<(usize, usize, usize)> {
    let mut cells = Vec::new();
    for rep in 0..config.repetitions {
        for &n in &config.n_list {
            for &s in &config.s_list {
                cells.push((rep, n, s));
            }
        }
    }
    cells
}

fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        (a.n, a.s, a.policy, a.seed).cmp(&(b.n, b.s, b.policy, b.seed))
    });
}

/// Runs every sweep cell and returns the rows in canonical order
/// (ascending device count, slice count, policy, seed).
pub fn collect_rows(config: &SweepConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let cells = cells(config);
    #[cfg(feature = "parallel")]
    let nested: Vec<Vec<ReportRow>> = cells
        .par_iter()
        .map(|&(rep, n, s)| run_cell(config, rep, n, s))
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let nested: Vec<Vec<ReportRow>> = cells
        .iter()
        .map(|&(rep, n, s)| run_cell(config, rep, n, s))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ReportRow> = nested.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Single-threaded variant of [`collect_rows`] for benchmarking.
pub fn collect_rows_serial(config: &SweepConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (rep, n, s) in cells(config) {
        rows.extend(run_cell(config, rep, n, s)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "seed,N,S,policy,system_cost,pg,iterations,n_s1,n_s2,n_s3,n_s4,cr_s1,cr_s2,cr_s3,cr_s4,runtime_ms";

/// Writes rows as CSV. Unused slice columns stay empty.
pub fn write_csv<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let mut slice_cols = String::new();
        for k in 0..MAX_SLICE_COLUMNS {
            slice_cols.push(',');
            if let Some(v) = r.offloaders_per_slice.get(k) {
                slice_cols.push_str(&v.to_string());
            }
        }
        for k in 0..MAX_SLICE_COLUMNS {
            slice_cols.push(',');
            if let Some(v) = r.cost_ratio_per_slice.get(k) {
                slice_cols.push_str(&v.to_string());
            }
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{}{},{}",
            r.seed,
            r.n,
            r.s,
            r.policy.as_str(),
            r.system_cost,
            r.pg,
            r.iterations,
            slice_cols,
            r.runtime_ms
        )?;
    }
    Ok(())
}

/// Parses CSV produced by [`write_csv`] back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected CSV header: {header}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected 16 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str| {
            Error::InvalidConfig(format!("line {}: bad {what}", lineno + 2))
        };
        let mut offloaders = Vec::new();
        for f in &fields[7..11] {
            if !f.is_empty() {
                offloaders.push(f.parse().map_err(|_| parse_err("n_s"))?);
            }
        }
        let mut ratios = Vec::new();
        for f in &fields[11..15] {
            if !f.is_empty() {
                ratios.push(f.parse().map_err(|_| parse_err("cr_s"))?);
            }
        }
        rows.push(ReportRow {
            seed: fields[0].parse().map_err(|_| parse_err("seed"))?,
            n: fields[1].parse().map_err(|_| parse_err("N"))?,
            s: fields[2].parse().map_err(|_| parse_err("S"))?,
            policy: PolicyKind::parse(fields[3])?,
            system_cost: fields[4].parse().map_err(|_| parse_err("system_cost"))?,
            pg: fields[5].parse().map_err(|_| parse_err("pg"))?,
            iterations: fields[6].parse().map_err(|_| parse_err("iterations"))?,
            offloaders_per_slice: offloaders,
            cost_ratio_per_slice: ratios,
            runtime_ms: fields[15].parse().map_err(|_| parse_err("runtime_ms"))?,
        });
    }
    Ok(rows)
}

/// Metadata written next to every sweep CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub tool_version: String,
    pub slice_mapping_version: String,
    pub config: SweepConfig,
}

/// Runs a sweep and writes the CSV plus a `<out>.meta.json` sidecar.
pub fn run_sweep(config: &SweepConfig, out: &Path) -> Result<ExperimentReport> {
    let rows = collect_rows(config)?;
    let mut file = std::fs::File::create(out)?;
    write_csv(&rows, &mut file)?;
    file.flush()?;
    let meta = SweepMetadata {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        slice_mapping_version: scenario::default_slice_mapping().version.clone(),
        config: config.clone(),
    };
    let meta_path = out.with_extension(format!(
        "{}meta.json",
        out.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(ExperimentReport { rows })
}
