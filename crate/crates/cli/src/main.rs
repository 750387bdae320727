//! Command-line front end: scenario generation, single solves, batch sweeps
//! and a small-instance verification battery.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification failure,
//! 3 i/o error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use edgeslice::allocation::{self, InterSlicePolicy};
use edgeslice::cost::{self, CostModel};
use edgeslice::experiments::{self, PolicyKind, SweepConfig};
use edgeslice::model::{Decision, DecisionVector};
use edgeslice::oracle;
use edgeslice::scenario::{self, GeneratorParams};
use edgeslice::solver::{self, CosOptions, UpdateOrder};
use edgeslice::Scenario;

#[derive(Parser)]
#[command(
    name = "edgeslice",
    version,
    about = "Task-to-slice assignment and edge resource sharing: generate scenarios, solve them, run sweeps, verify invariants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write it as JSON.
    Generate(GenerateArgs),
    /// Solve one scenario under one policy and print cost and iterations.
    Solve(SolveArgs),
    /// Run a batch sweep and write a CSV report plus metadata sidecar.
    Sweep(SweepArgs),
    /// Run the oracle and invariant suites on small random instances.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator parameters as JSON; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of devices (overrides the config).
    #[arg(long)]
    devices: Option<usize>,
    /// Number of slices (overrides the config).
    #[arg(long)]
    slices: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON to solve; mutually exclusive with generator flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    devices: Option<usize>,
    #[arg(long)]
    slices: Option<usize>,
    /// Inter-slice bandwidth policy.
    #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
    policy: PolicyArg,
    /// Device update order.
    #[arg(long, value_enum, default_value_t = OrderArg::RoundRobin)]
    order: OrderArg,
    /// Write the improvement trace as CSV to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the equilibrium provisioning coefficients as JSON.
    #[arg(long)]
    dump_coeffs: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration as JSON; the default desk-scale sweep when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Base seed for the verification instances.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Optimal,
    Equal,
    CloudProportional,
}

impl PolicyArg {
    fn kind(self) -> PolicyKind {
        match self {
            PolicyArg::Optimal => PolicyKind::Optimal,
            PolicyArg::Equal => PolicyKind::Equal,
            PolicyArg::CloudProportional => PolicyKind::CloudProportional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    RoundRobin,
    Random,
}

/// Marker for failed verification; mapped to exit code 2.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} verification check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<edgeslice::Error>() {
        return match e {
            edgeslice::Error::Io(_) => 3,
            _ => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 3;
    }
    1
}

fn load_params(
    config: Option<&Path>,
    seed: Option<u64>,
    devices: Option<usize>,
    slices: Option<usize>,
) -> Result<GeneratorParams> {
    let mut params = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(edgeslice::Error::Io)
                .with_context(|| format!("reading {}", path.display()))?;
            GeneratorParams::from_json(&text)?
        }
        None => GeneratorParams::default(),
    };
    if let Some(seed) = seed {
        params.seed = seed;
    }
    if let Some(n) = devices {
        params.n_devices = n;
    }
    if let Some(s) = slices {
        params.n_slices = s;
    }
    Ok(params)
}

fn generate(args: GenerateArgs) -> Result<()> {
    let params = load_params(args.config.as_deref(), args.seed, args.devices, args.slices)?;
    let scenario = scenario::generate(&params)?;
    let json = scenario.to_json();
    match args.out {
        Some(path) => std::fs::write(&path, json).map_err(edgeslice::Error::Io)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(edgeslice::Error::Io)
                .with_context(|| format!("reading {}", path.display()))?;
            Scenario::from_json(&text)?
        }
        None => {
            let params =
                load_params(args.config.as_deref(), args.seed, args.devices, args.slices)?;
            scenario::generate(&params)?
        }
    };
    let kind = args.policy.kind();
    let policy = kind.to_policy();
    let order = match args.order {
        OrderArg::RoundRobin => UpdateOrder::RoundRobin,
        OrderArg::Random => UpdateOrder::SeededRandom(args.seed.unwrap_or(0)),
    };
    let options = CosOptions {
        order,
        record_trace: args.trace.is_some(),
        ..CosOptions::default()
    };
    let model = solver::cost_model_for_policy(&scenario, &policy)?;
    let run = solver::cos_run_with_model(&scenario, model.clone(), &options)?;
    let system_cost = cost::reduced_system_cost(&scenario, &run.equilibrium, &model)?;
    let (offloaders, ratios) = experiments::slice_stats(&scenario, kind, &run.equilibrium)?;
    let constants = solver::iteration_constants(&scenario);

    println!("policy: {}", kind.as_str());
    println!("system_cost: {system_cost}");
    println!("iterations: {}", run.iterations);
    println!("sweeps: {}", run.sweeps);
    println!("offloaders_per_slice: {offloaders:?}");
    let ratio_strs: Vec<String> = ratios.iter().map(|r| format!("{r:.6}")).collect();
    println!("cost_ratio_per_slice: [{}]", ratio_strs.join(", "));
    println!(
        "iteration_bound_constants: c_min = {}, c_max = {}",
        constants.c_min, constants.c_max
    );

    if let Some(path) = &args.trace {
        let trace = run.trace.as_deref().unwrap_or(&[]);
        let file = std::fs::File::create(path).map_err(edgeslice::Error::Io)?;
        solver::write_trace_csv(trace, file)?;
        println!("trace: {} steps written to {}", trace.len(), path.display());
    }
    if args.dump_coeffs {
        let coeffs = allocation::coefficients_for_policy(&scenario, &run.equilibrium, &policy)?;
        println!("coefficients: {}", coefficients_json(&run.equilibrium, &coeffs));
    }
    Ok(())
}

fn coefficients_json(
    equilibrium: &DecisionVector,
    coeffs: &allocation::AllocationCoefficients,
) -> String {
    let intra = |entries: &std::collections::BTreeMap<(usize, usize, usize), f64>,
                 edge_key: &str| {
        let items: Vec<serde_json::Value> = entries
            .iter()
            .map(|(&(device, edge, slice), &share)| {
                serde_json::json!({
                    "device": device,
                    edge_key: edge,
                    "slice": slice,
                    "share": share,
                })
            })
            .collect();
        serde_json::Value::Array(items)
    };
    let decisions: Vec<String> = equilibrium.iter().map(|d| d.to_string()).collect();
    serde_json::json!({
        "decisions": decisions,
        "inter": coeffs.inter,
        "intra_radio": intra(&coeffs.intra_radio, "ap"),
        "intra_compute": intra(&coeffs.intra_compute, "ec"),
    })
    .to_string()
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(edgeslice::Error::Io)
                .with_context(|| format!("reading {}", path.display()))?;
            SweepConfig::from_json(&text)?
        }
        None => SweepConfig::default(),
    };
    let report = experiments::run_sweep(&config, &args.out)?;
    println!(
        "wrote {} rows to {} (+ metadata sidecar)",
        report.rows.len(),
        args.out.display()
    );
    Ok(())
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn verify(args: VerifyArgs) -> Result<()> {
    let seed = args.seed;
    let mut checks = Vec::new();

    checks.push(check_closed_form(seed)?);
    checks.push(check_potential_identity(seed)?);
    checks.push(check_cost_equivalence(seed)?);
    checks.push(check_approximation_ratio(seed)?);
    checks.push(check_equilibria(seed)?);

    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}

fn check_closed_form(seed: u64) -> Result<Check> {
    let instances = 20;
    let trials = 200;
    let mut checked = 0;
    let mut passed = true;
    for k in 0..instances {
        let s = scenario::synthetic(8, 3, 2, 2, seed.wrapping_add(k));
        let run = solver::cos_run(&s, &InterSlicePolicy::Equal, &CosOptions::default())?;
        if run.equilibrium.num_offloaders() == 0 {
            continue;
        }
        checked += 1;
        if !oracle::perturbation_kkt_check(&s, &run.equilibrium, trials, 0.5, seed ^ k)? {
            passed = false;
        }
    }
    Ok(Check {
        name: "closed-form optimality under random perturbations",
        passed,
        detail: format!("{checked} instances x {trials} trials"),
    })
}

fn check_potential_identity(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut moves = 0;
    for k in 0..25u64 {
        let s = scenario::synthetic(10, 3, 2, 2, seed.wrapping_add(1000 + k));
        let models = [
            CostModel::FixedInter(allocation::baseline_equal(&s)),
            CostModel::OptimalInter,
        ];
        for model in models {
            let mut dv = DecisionVector::all_local(10);
            let all: Vec<Decision> = {
                let mut v = vec![Decision::Local];
                v.extend(s.offload_options());
                v
            };
            for step in 0..40u64 {
                let device = ((seed ^ (k * 41 + step)) % 10) as usize;
                let pick = ((seed.wrapping_mul(31) ^ (step * 17 + k)) % all.len() as u64) as usize;
                let mut dv2 = dv.clone();
                dv2.set(device, all[pick]);
                let dpsi = cost::potential(&s, &dv2, &model)?
                    - cost::potential(&s, &dv, &model)?;
                let dcost = cost::reduced_device_cost(&s, &dv2, &model, device)?
                    - cost::reduced_device_cost(&s, &dv, &model, device)?;
                worst = worst.max((dpsi - dcost).abs() / dcost.abs().max(1.0));
                moves += 1;
                dv = dv2;
            }
        }
    }
    Ok(Check {
        name: "exact-potential identity",
        passed: worst <= 1e-9,
        detail: format!("{moves} unilateral moves, worst relative gap {worst:.2e}"),
    })
}

fn check_cost_equivalence(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for k in 0..30u64 {
        let s = scenario::synthetic(9, 3, 2, 2, seed.wrapping_add(2000 + k));
        let run = solver::cos_run(&s, &InterSlicePolicy::Optimal, &CosOptions::default())?;
        let dv = run.equilibrium;
        let coeffs = allocation::optimal_coefficients(&s, &dv)?;
        let general = cost::system_cost(&s, &dv, &coeffs)?.system;
        let fixed_opt_b = cost::reduced_system_cost(
            &s,
            &dv,
            &CostModel::FixedInter(allocation::optimal_inter(&s, &dv)?),
        )?;
        let collapsed = cost::reduced_system_cost(&s, &dv, &CostModel::OptimalInter)?;
        worst = worst.max((general - fixed_opt_b).abs() / general);
        worst = worst.max((general - collapsed).abs() / general);
    }
    Ok(Check {
        name: "three-way cost equivalence",
        passed: worst <= 1e-9,
        detail: format!("30 instances, worst relative gap {worst:.2e}"),
    })
}

fn check_approximation_ratio(seed: u64) -> Result<Check> {
    let mut max_ratio: f64 = 0.0;
    for k in 0..60u64 {
        let n = 2 + (k % 4) as usize;
        let s = scenario::synthetic(n, 2, 2, 2, seed.wrapping_add(3000 + k));
        let ratio =
            oracle::approximation_ratio(&s, &InterSlicePolicy::Optimal, &CosOptions::default())?;
        max_ratio = max_ratio.max(ratio);
        if ratio < 1.0 - 1e-12 || ratio > 2.62 {
            return Ok(Check {
                name: "equilibrium cost within 2.62 of the optimum",
                passed: false,
                detail: format!("instance {k}: ratio {ratio}"),
            });
        }
    }
    Ok(Check {
        name: "equilibrium cost within 2.62 of the optimum",
        passed: true,
        detail: format!("60 instances, max ratio {max_ratio:.4}"),
    })
}

fn check_equilibria(seed: u64) -> Result<Check> {
    let mut detail = String::new();
    for k in 0..15u64 {
        let s = scenario::synthetic(10, 3, 2, 2, seed.wrapping_add(4000 + k));
        for policy in [
            InterSlicePolicy::Optimal,
            InterSlicePolicy::Equal,
            InterSlicePolicy::CloudProportional,
        ] {
            let model = solver::cost_model_for_policy(&s, &policy)?;
            let run = solver::cos_run_with_model(&s, model.clone(), &CosOptions::default())?;
            let cert = solver::certify_ne(&s, &model, &run.equilibrium)?;
            if !cert.is_equilibrium {
                let _ = write!(detail, "instance {k} under {}: {:?}", policy.label(), cert);
                return Ok(Check {
                    name: "solver output certifies as equilibrium",
                    passed: false,
                    detail,
                });
            }
            let ctx = cost::EvalContext::new(&s, model, run.equilibrium.clone())?;
            for i in 0..s.num_devices() {
                if ctx.device_cost(i)? > ctx.local_time(i) * (1.0 + 1e-9) {
                    return Ok(Check {
                        name: "solver output certifies as equilibrium",
                        passed: false,
                        detail: format!("device {i} exceeds its local completion time"),
                    });
                }
            }
        }
    }
    Ok(Check {
        name: "solver output certifies as equilibrium",
        passed: true,
        detail: "15 instances x 3 policies, local-time cap respected".into(),
    })
}
