//! Best-response improvement dynamics over either cost model, started from
//! the all-local decision vector, with termination accounting, trace
//! recording and equilibrium certification.
//!
//! The induced game admits an exact potential, so every strict-improvement
//! path is finite; the iteration cap exists only to turn a hypothetical bug
//! into a diagnostic instead of a hang.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::allocation::InterSlicePolicy;
use crate::cost::{CostModel, EvalContext, IMPROVEMENT_REL_EPS};
use crate::error::{Error, Result};
use crate::model::{Decision, DecisionVector, Scenario};

/// Default cap on executed improvement updates.
pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

/// Device update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    /// Fixed index order, repeated until a full pass makes no update.
    RoundRobin,
    /// A fresh seeded permutation on every pass.
    SeededRandom(u64),
}

/// Solver knobs.
#[derive(Debug, Clone)]
pub struct CosOptions {
    pub order: UpdateOrder,
    pub record_trace: bool,
    pub iteration_cap: u64,
}

impl Default for CosOptions {
    fn default() -> Self {
        CosOptions {
            order: UpdateOrder::RoundRobin,
            record_trace: false,
            iteration_cap: DEFAULT_ITERATION_CAP,
        }
    }
}

/// One executed improvement update.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub step: u64,
    pub device: usize,
    pub old: Decision,
    pub new: Decision,
    pub delta_potential: f64,
    pub potential: f64,
    pub system_cost: f64,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct CosResult {
    pub equilibrium: DecisionVector,
    /// Executed improvement updates (decision changes).
    pub iterations: u64,
    /// Full passes over the device set, including the final quiet one.
    pub sweeps: u64,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Per-instance constants of the theoretical iteration bound: the smallest
/// and largest, over devices, of each device's best achievable solo cost
/// (local, or its cheapest offload option as the only user of the system).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationBoundConstants {
    pub c_min: f64,
    pub c_max: f64,
}

/// Resolves an inter-slice policy into the cost model the solver runs on.
///
/// The decision-independent policies fix the inter-slice matrix up front;
/// the optimal policy folds into the collapsed access-point cost model.
pub fn cost_model_for_policy(scenario: &Scenario, policy: &InterSlicePolicy) -> Result<CostModel> {
    match policy {
        InterSlicePolicy::Optimal => Ok(CostModel::OptimalInter),
        other => {
            let dv = DecisionVector::all_local(scenario.num_devices());
            Ok(CostModel::FixedInter(other.matrix(scenario, &dv)?))
        }
    }
}

/// Best reply of one device: the cost-minimizing decision over local and
/// every valid offload triple, ties broken toward local first and then the
/// lexicographically smallest `(ap, ec, slice)`. Returns the current
/// decision when no alternative improves on it by more than the relative
/// threshold.
pub fn best_response(ctx: &EvalContext<'_>, device: usize) -> Result<Decision> {
    Ok(best_response_with_cost(ctx, device)?.0)
}

/// Best reply and the cost it achieves.
///
/// The search is separable: for a given slice the transmit and execute
/// terms are independent, so the candidate per slice combines the cheapest
/// access point with the cheapest edge cloud instead of scanning the full
/// cross product. Offload options priced by a zero inter-slice coefficient
/// would have infinite cost and are skipped.
pub fn best_response_with_cost(ctx: &EvalContext<'_>, device: usize) -> Result<(Decision, f64)> {
    let scenario = ctx.scenario();
    scenario.check_device(device)?;
    let current = ctx.decision(device);
    let current_cost = ctx.device_cost(device)?;

    let mut best = Decision::Local;
    let mut best_cost = ctx.local_time(device);

    match ctx.cost_model() {
        CostModel::OptimalInter => {
            // Transmit term is slice-independent: pick the cheapest access
            // point once, then the cheapest (ec, slice).
            let mut ap_best: Option<(f64, usize)> = None;
            for a in 0..scenario.num_aps() {
                let w = ctx.own_ap_weight(device, a);
                let term = w * (ctx.ap_total_excluding(device, a, 0) + w);
                if ap_best.map_or(true, |(t, _)| term < t) {
                    ap_best = Some((term, a));
                }
            }
            let (ap_term, ap) = ap_best.expect("at least one access point");
            let mut ec_best: Option<(f64, usize, usize)> = None;
            for &(c, s) in scenario.valid_ec_slice_pairs() {
                let w = ctx.own_ec_weight(device, s);
                let term =
                    w * (ctx.ec_total_excluding(device, c, s) + w) / scenario.ec_capability(c, s);
                if ec_best.map_or(true, |(t, _, _)| term < t) {
                    ec_best = Some((term, c, s));
                }
            }
            if let Some((ec_term, ec, slice)) = ec_best {
                consider(&mut best, &mut best_cost, ap_term + ec_term, Decision::Offload {
                    ap,
                    ec,
                    slice,
                });
            }
        }
        CostModel::FixedInter(_) => {
            for s in 0..scenario.num_slices() {
                let mut ap_best: Option<(f64, usize)> = None;
                for a in 0..scenario.num_aps() {
                    if ctx.ap_unusable(a, s) {
                        continue;
                    }
                    let m = ctx.ap_multiplier(a, s)?;
                    let w = ctx.own_ap_weight(device, a);
                    let term = m * w * (ctx.ap_total_excluding(device, a, s) + w);
                    if ap_best.map_or(true, |(t, _)| term < t) {
                        ap_best = Some((term, a));
                    }
                }
                let Some((ap_term, ap)) = ap_best else {
                    continue;
                };
                let mut ec_best: Option<(f64, usize)> = None;
                for c in 0..scenario.num_ecs() {
                    if !scenario.is_valid_pair(c, s) {
                        continue;
                    }
                    let w = ctx.own_ec_weight(device, s);
                    let term = w * (ctx.ec_total_excluding(device, c, s) + w)
                        / scenario.ec_capability(c, s);
                    if ec_best.map_or(true, |(t, _)| term < t) {
                        ec_best = Some((term, c));
                    }
                }
                let Some((ec_term, ec)) = ec_best else {
                    continue;
                };
                consider(&mut best, &mut best_cost, ap_term + ec_term, Decision::Offload {
                    ap,
                    ec,
                    slice: s,
                });
            }
        }
    }

    if best == current {
        return Ok((current, current_cost));
    }
    if best_cost < current_cost * (1.0 - IMPROVEMENT_REL_EPS) {
        Ok((best, best_cost))
    } else {
        Ok((current, current_cost))
    }
}

fn consider(best: &mut Decision, best_cost: &mut f64, cost: f64, candidate: Decision) {
    // Strict improvement, or an exact tie resolved by the fixed decision
    // order (Local sorts before every offload triple).
    if cost < *best_cost || (cost == *best_cost && candidate < *best) {
        *best = candidate;
        *best_cost = cost;
    }
}

/// Runs the improvement dynamics from the all-local vector until no device
/// can improve its completion time.
pub fn cos_run(
    scenario: &Scenario,
    policy: &InterSlicePolicy,
    options: &CosOptions,
) -> Result<CosResult> {
    let model = cost_model_for_policy(scenario, policy)?;
    cos_run_with_model(scenario, model, options)
}

/// Same dynamics over an explicit cost model.
pub fn cos_run_with_model(
    scenario: &Scenario,
    model: CostModel,
    options: &CosOptions,
) -> Result<CosResult> {
    let n = scenario.num_devices();
    let mut ctx = EvalContext::new(scenario, model, DecisionVector::all_local(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = match options.order {
        UpdateOrder::RoundRobin => None,
        UpdateOrder::SeededRandom(seed) => Some(ChaCha12Rng::seed_from_u64(seed)),
    };
    let mut iterations: u64 = 0;
    let mut sweeps: u64 = 0;
    let mut trace = options.record_trace.then(Vec::new);

    loop {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut changed = false;
        for &i in &order {
            let current = ctx.decision(i);
            let (reply, _) = best_response_with_cost(&ctx, i)?;
            if reply == current {
                continue;
            }
            if iterations >= options.iteration_cap {
                return Err(Error::IterationCapExceeded {
                    cap: options.iteration_cap,
                });
            }
            if let Some(trace) = trace.as_mut() {
                let before = ctx.potential()?;
                ctx.apply(i, reply)?;
                let after = ctx.potential()?;
                trace.push(TraceEntry {
                    step: iterations + 1,
                    device: i,
                    old: current,
                    new: reply,
                    delta_potential: after - before,
                    potential: after,
                    system_cost: ctx.system_cost()?,
                });
            } else {
                ctx.apply(i, reply)?;
            }
            iterations += 1;
            changed = true;
        }
        sweeps += 1;
        if !changed {
            break;
        }
    }

    Ok(CosResult {
        equilibrium: ctx.decisions(),
        iterations,
        sweeps,
        trace,
    })
}

/// Equilibrium certificate: the first strictly improving unilateral
/// deviation found, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct NeReport {
    pub is_equilibrium: bool,
    pub violation: Option<NeViolation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeViolation {
    pub device: usize,
    pub current_cost: f64,
    pub better: Decision,
    pub better_cost: f64,
}

/// Checks whether any device has a strictly improving unilateral deviation
/// (relative margin as in the solver). Scans the full decision set of every
/// device rather than reusing the separable search.
pub fn certify_ne(
    scenario: &Scenario,
    model: &CostModel,
    dv: &DecisionVector,
) -> Result<NeReport> {
    let ctx = EvalContext::new(scenario, model.clone(), dv.clone())?;
    for i in 0..scenario.num_devices() {
        let current_cost = ctx.device_cost(i)?;
        let mut candidates = vec![Decision::Local];
        candidates.extend(scenario.offload_options());
        for cand in candidates {
            if matches!(cand, Decision::Offload { ap, slice, .. } if ctx.ap_unusable(ap, slice)) {
                continue;
            }
            let cost = ctx.candidate_cost(i, cand)?;
            if cost < current_cost * (1.0 - IMPROVEMENT_REL_EPS) {
                return Ok(NeReport {
                    is_equilibrium: false,
                    violation: Some(NeViolation {
                        device: i,
                        current_cost,
                        better: cand,
                        better_cost: cost,
                    }),
                });
            }
        }
    }
    Ok(NeReport {
        is_equilibrium: true,
        violation: None,
    })
}

/// Smallest and largest, over devices, of the best solo cost
/// `min(local time, cheapest offload as sole user)`.
pub fn iteration_constants(scenario: &Scenario) -> IterationBoundConstants {
    let mut c_min = f64::INFINITY;
    let mut c_max = f64::NEG_INFINITY;
    for i in 0..scenario.num_devices() {
        let mut best = crate::model::local_time(scenario, i);
        for a in 0..scenario.num_aps() {
            let e_ap = scenario.data_size(i) / scenario.rate(i, a);
            for &(c, s) in scenario.valid_ec_slice_pairs() {
                let e_ec = (scenario.complexity(i) / scenario.match_coeff(i, s))
                    / scenario.ec_capability(c, s);
                best = best.min(e_ap + e_ec);
            }
        }
        c_min = c_min.min(best);
        c_max = c_max.max(best);
    }
    IterationBoundConstants { c_min, c_max }
}

/// Writes a recorded trace as CSV.
pub fn write_trace_csv<W: std::io::Write>(trace: &[TraceEntry], mut out: W) -> Result<()> {
    writeln!(
        out,
        "step,device,old_decision,new_decision,potential,system_cost"
    )?;
    for e in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.step, e.device, e.old, e.new, e.potential, e.system_cost
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation;
    use crate::model::ScenarioBuilder;
    use crate::scenario::synthetic;

    fn offload(ap: usize, ec: usize, slice: usize) -> Decision {
        Decision::Offload { ap, ec, slice }
    }

    #[test]
    fn lone_device_picks_global_argmin() {
        // Huge data, tiny complexity: transmission dominates, stay local.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0]],
            data_size: vec![1e6],
            complexity: vec![2.0],
            match_coeff: vec![vec![1.0]],
            local_capability: vec![2.0],
            ec_capability: vec![vec![1e3]],
        })
        .unwrap();
        let r = cos_run(&s, &InterSlicePolicy::Optimal, &CosOptions::default()).unwrap();
        assert_eq!(r.equilibrium.get(0), Decision::Local);
        assert_eq!(r.iterations, 0);

        // Cheap offload: E_ap + E_ec = 1 + 0.5 < 10 = local time.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![4.0]],
            data_size: vec![4.0],
            complexity: vec![10.0],
            match_coeff: vec![vec![1.0]],
            local_capability: vec![1.0],
            ec_capability: vec![vec![20.0]],
        })
        .unwrap();
        let r = cos_run(&s, &InterSlicePolicy::Optimal, &CosOptions::default()).unwrap();
        assert_eq!(r.equilibrium.get(0), offload(0, 0, 0));
        assert_eq!(r.iterations, 1);
        // The lone device's equilibrium matches exhaustive minimization
        // over its whole decision set.
        let ctx = crate::cost::EvalContext::new(
            &s,
            CostModel::OptimalInter,
            r.equilibrium.clone(),
        )
        .unwrap();
        assert_eq!(best_response(&ctx, 0).unwrap(), r.equilibrium.get(0));
    }

    #[test]
    fn congestion_steers_to_emptier_ap() {
        // Two APs with identical rates. Three devices saturate AP 0; the
        // fourth must prefer AP 1. Verified against the full option scan.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0, 1.0]; 4],
            data_size: vec![1.0; 4],
            complexity: vec![100.0; 4],
            match_coeff: vec![vec![1.0]; 4],
            local_capability: vec![1.0; 4],
            ec_capability: vec![vec![1e4]],
        })
        .unwrap();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 0),
            offload(0, 0, 0),
            offload(0, 0, 0),
            Decision::Local,
        ]);
        let ctx = crate::cost::EvalContext::new(&s, CostModel::OptimalInter, dv).unwrap();
        let (reply, cost) = best_response_with_cost(&ctx, 3).unwrap();
        assert_eq!(reply, offload(1, 0, 0));
        // Exhaustive check over the decision set.
        let mut want = (Decision::Local, ctx.local_time(3));
        for cand in s.offload_options() {
            let c = ctx.candidate_cost(3, cand).unwrap();
            if c < want.1 {
                want = (cand, c);
            }
        }
        assert_eq!(reply, want.0);
        assert!((cost - want.1).abs() < 1e-12);
    }

    #[test]
    fn separable_search_matches_full_scan() {
        for seed in 0..20 {
            let s = synthetic(6, 3, 2, 3, seed);
            for policy in [
                InterSlicePolicy::Optimal,
                InterSlicePolicy::Equal,
                InterSlicePolicy::CloudProportional,
            ] {
                let model = cost_model_for_policy(&s, &policy).unwrap();
                // A mid-run state: park some devices off-local first.
                let mut ctx =
                    EvalContext::new(&s, model, DecisionVector::all_local(6)).unwrap();
                for (k, cand) in s.offload_options().enumerate() {
                    if k % 3 == 0 {
                        ctx.apply(k % 6, cand).unwrap();
                    }
                }
                for i in 0..6 {
                    let (reply, cost) = best_response_with_cost(&ctx, i).unwrap();
                    // Full scan with identical tie-breaking.
                    let mut best = (Decision::Local, ctx.local_time(i));
                    for cand in s.offload_options() {
                        if matches!(cand, Decision::Offload { ap, slice, .. } if ctx.ap_unusable(ap, slice))
                        {
                            continue;
                        }
                        let c = ctx.candidate_cost(i, cand).unwrap();
                        if c < best.1 || (c == best.1 && cand < best.0) {
                            best = (cand, c);
                        }
                    }
                    let current_cost = ctx.device_cost(i).unwrap();
                    let expected = if best.0 == ctx.decision(i)
                        || best.1 >= current_cost * (1.0 - IMPROVEMENT_REL_EPS)
                    {
                        ctx.decision(i)
                    } else {
                        best.0
                    };
                    assert_eq!(reply, expected, "seed {seed} device {i}");
                    let _ = cost;
                }
            }
        }
    }

    #[test]
    fn local_dominant_terminates_immediately() {
        // Offloading always worse: tiny rates and tiny EC capability.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![0.001]; 3],
            data_size: vec![10.0; 3],
            complexity: vec![1.0; 3],
            match_coeff: vec![vec![1.0]; 3],
            local_capability: vec![100.0; 3],
            ec_capability: vec![vec![0.01]],
        })
        .unwrap();
        let r = cos_run(&s, &InterSlicePolicy::Equal, &CosOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.sweeps, 1);
        assert_eq!(r.equilibrium, DecisionVector::all_local(3));
    }

    #[test]
    fn equilibria_certify_and_respect_local_cap() {
        for seed in 0..10 {
            let s = synthetic(8, 2, 2, 2, 1000 + seed);
            for policy in [
                InterSlicePolicy::Optimal,
                InterSlicePolicy::Equal,
                InterSlicePolicy::CloudProportional,
            ] {
                let model = cost_model_for_policy(&s, &policy).unwrap();
                let r = cos_run(&s, &policy, &CosOptions::default()).unwrap();
                let report = certify_ne(&s, &model, &r.equilibrium).unwrap();
                assert!(report.is_equilibrium, "{policy:?} seed {seed}");
                // No device exceeds its local completion time.
                let ctx = EvalContext::new(&s, model, r.equilibrium.clone()).unwrap();
                for i in 0..8 {
                    let c = ctx.device_cost(i).unwrap();
                    assert!(c <= ctx.local_time(i) * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn planted_improving_move_is_detected() {
        let s = synthetic(5, 2, 2, 2, 77);
        let r = cos_run(&s, &InterSlicePolicy::Optimal, &CosOptions::default()).unwrap();
        let report = certify_ne(&s, &CostModel::OptimalInter, &r.equilibrium).unwrap();
        assert!(report.is_equilibrium);
        // Corrupt the equilibrium: force some device onto a poor option.
        let ctx =
            EvalContext::new(&s, CostModel::OptimalInter, r.equilibrium.clone()).unwrap();
        let mut corrupted = None;
        for i in 0..5 {
            for cand in s.offload_options() {
                if cand != r.equilibrium.get(i) {
                    let worse = ctx.candidate_cost(i, cand).unwrap();
                    if worse > ctx.device_cost(i).unwrap() * 1.01 {
                        let mut dv = r.equilibrium.clone();
                        dv.set(i, cand);
                        corrupted = Some((i, dv));
                        break;
                    }
                }
            }
            if corrupted.is_some() {
                break;
            }
        }
        let (device, dv) = corrupted.expect("some strictly worse option exists");
        let report = certify_ne(&s, &CostModel::OptimalInter, &dv).unwrap();
        assert!(!report.is_equilibrium);
        assert_eq!(report.violation.unwrap().device, device);
    }

    #[test]
    fn trace_entries_strictly_decrease_potential() {
        let s = synthetic(10, 3, 2, 2, 5);
        let r = cos_run(
            &s,
            &InterSlicePolicy::Equal,
            &CosOptions {
                record_trace: true,
                ..CosOptions::default()
            },
        )
        .unwrap();
        let trace = r.trace.unwrap();
        assert_eq!(trace.len() as u64, r.iterations);
        assert!(!trace.is_empty());
        for e in &trace {
            assert!(e.delta_potential < 0.0, "step {}: {e:?}", e.step);
        }
        // The potential starts at the all-local value and never rises.
        let start: f64 = (0..10).map(|i| crate::model::local_time(&s, i)).sum();
        assert!(trace.first().unwrap().potential < start);
        for w in trace.windows(2) {
            assert!(w[1].potential < w[0].potential);
        }
    }

    #[test]
    fn random_order_also_reaches_equilibrium() {
        let s = synthetic(12, 3, 3, 2, 21);
        for policy in [InterSlicePolicy::Optimal, InterSlicePolicy::Equal] {
            let model = cost_model_for_policy(&s, &policy).unwrap();
            let a = cos_run(&s, &policy, &CosOptions::default()).unwrap();
            let b = cos_run(
                &s,
                &policy,
                &CosOptions {
                    order: UpdateOrder::SeededRandom(9),
                    ..CosOptions::default()
                },
            )
            .unwrap();
            assert!(certify_ne(&s, &model, &a.equilibrium).unwrap().is_equilibrium);
            assert!(certify_ne(&s, &model, &b.equilibrium).unwrap().is_equilibrium);
        }
    }

    #[test]
    fn iteration_constants_on_known_instance() {
        // Single device, single offload option.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![2.0]],
            data_size: vec![8.0],  // E_ap = 4
            complexity: vec![12.0], // local time = 3, E_ec = 12/6 = 2
            match_coeff: vec![vec![1.0]],
            local_capability: vec![4.0],
            ec_capability: vec![vec![6.0]],
        })
        .unwrap();
        let c = iteration_constants(&s);
        assert_eq!(c.c_min, 3.0); // min(3, 4 + 2)
        assert_eq!(c.c_max, 3.0);
        assert!(c.c_min <= c.c_max);
    }

    #[test]
    fn iteration_constants_homogeneous_and_enumerated() {
        // Homogeneous devices collapse the two constants.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![2.0, 4.0]; 3],
            data_size: vec![8.0; 3],
            complexity: vec![12.0; 3],
            match_coeff: vec![vec![2.0]; 3],
            local_capability: vec![4.0; 3],
            ec_capability: vec![vec![6.0]],
        })
        .unwrap();
        let c = iteration_constants(&s);
        assert_eq!(c.c_min, c.c_max);
        // Independent enumeration over a random instance.
        let s = synthetic(7, 3, 2, 2, 31);
        let c = iteration_constants(&s);
        let mut best_per_device = Vec::new();
        for i in 0..7 {
            let mut best = crate::model::local_time(&s, i);
            for a in 0..3 {
                for &(ec, sl) in s.valid_ec_slice_pairs() {
                    let e_ap =
                        crate::model::edge_constant(&s, i, crate::model::Edge::Ap(a), sl).unwrap();
                    let e_ec =
                        crate::model::edge_constant(&s, i, crate::model::Edge::Ec(ec), sl).unwrap();
                    best = best.min(e_ap + e_ec);
                }
            }
            best_per_device.push(best);
        }
        let want_min = best_per_device.iter().copied().fold(f64::INFINITY, f64::min);
        let want_max = best_per_device
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(c.c_min, want_min);
        assert_eq!(c.c_max, want_max);
    }

    #[test]
    fn fixed_zero_coefficient_resources_are_avoided() {
        let s = synthetic(5, 2, 2, 2, 13);
        let mut b = allocation::baseline_equal(&s);
        b[0][0] = 0.0;
        b[0][1] = 1.0;
        let policy = InterSlicePolicy::Fixed(b);
        let r = cos_run(&s, &policy, &CosOptions::default()).unwrap();
        for d in r.equilibrium.iter() {
            assert!(!matches!(d, Decision::Offload { ap: 0, slice: 0, .. }));
        }
    }

    #[test]
    fn trace_csv_shape() {
        let s = synthetic(6, 2, 2, 2, 3);
        let r = cos_run(
            &s,
            &InterSlicePolicy::Optimal,
            &CosOptions {
                record_trace: true,
                ..CosOptions::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace_csv(r.trace.as_ref().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,device,old_decision,new_decision,potential,system_cost"
        );
        assert_eq!(text.lines().count() as u64, r.iterations + 1);
    }
}
