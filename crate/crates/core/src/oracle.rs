//! Ground-truth solvers for small instances: exhaustive minimization over
//! all decision vectors, the solver-vs-optimum cost ratio, and a randomized
//! perturbation check of the closed-form coefficients.
//!
//! Exhaustive enumeration evaluates every vector from scratch in a fixed
//! summation order, so the result is bit-identical no matter how the index
//! space is partitioned across workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::Rng;

use crate::allocation::{self, InterSlicePolicy};
use crate::cost::{self, CostModel};
use crate::error::{Error, Result};
use crate::model::{Decision, DecisionVector, Scenario};
use crate::solver::{self, CosOptions};

/// Guard on the number of decision vectors an exhaustive search may visit.
pub const ENUMERATION_GUARD: f64 = 1e8;

/// Outcome of an exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimum: DecisionVector,
    pub optimal_cost: f64,
    /// Number of decision vectors evaluated.
    pub evaluated: u64,
}

/// Scratch state for evaluating one decision vector from scratch.
struct Evaluator<'a> {
    scenario: &'a Scenario,
    model: &'a CostModel,
    options: &'a [Decision],
    // Per-device weights, as in the incremental context.
    w_ap: Vec<f64>,
    w_ec: Vec<f64>,
    t_local: Vec<f64>,
    ap_totals: Vec<f64>,
    ec_totals: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(scenario: &'a Scenario, model: &'a CostModel, options: &'a [Decision]) -> Self {
        let n = scenario.num_devices();
        let num_aps = scenario.num_aps();
        let num_slices = scenario.num_slices();
        let mut w_ap = vec![0.0; n * num_aps];
        let mut w_ec = vec![0.0; n * num_slices];
        let mut t_local = vec![0.0; n];
        for i in 0..n {
            for a in 0..num_aps {
                w_ap[i * num_aps + a] = (scenario.data_size(i) / scenario.rate(i, a)).sqrt();
            }
            for s in 0..num_slices {
                w_ec[i * num_slices + s] =
                    (scenario.complexity(i) / scenario.match_coeff(i, s)).sqrt();
            }
            t_local[i] = crate::model::local_time(scenario, i);
        }
        let ap_slots = match model {
            CostModel::FixedInter(_) => num_aps * num_slices,
            CostModel::OptimalInter => num_aps,
        };
        Evaluator {
            scenario,
            model,
            options,
            w_ap,
            w_ec,
            t_local,
            ap_totals: vec![0.0; ap_slots],
            ec_totals: vec![0.0; scenario.num_ecs() * num_slices],
        }
    }

    /// Cost of the vector given by per-device option indices. `f64::MAX`
    /// marks vectors that use a zero-priced resource.
    fn cost(&mut self, digits: &[u32]) -> f64 {
        let num_aps = self.scenario.num_aps();
        let num_slices = self.scenario.num_slices();
        self.ap_totals.fill(0.0);
        self.ec_totals.fill(0.0);
        let mut total = 0.0;
        for (i, &digit) in digits.iter().enumerate() {
            match self.options[digit as usize] {
                Decision::Local => total += self.t_local[i],
                Decision::Offload { ap, ec, slice } => {
                    let slot = match self.model {
                        CostModel::FixedInter(_) => ap * num_slices + slice,
                        CostModel::OptimalInter => ap,
                    };
                    self.ap_totals[slot] += self.w_ap[i * num_aps + ap];
                    self.ec_totals[ec * num_slices + slice] += self.w_ec[i * num_slices + slice];
                }
            }
        }
        match self.model {
            CostModel::FixedInter(inter) => {
                for a in 0..num_aps {
                    for s in 0..num_slices {
                        let q = self.ap_totals[a * num_slices + s];
                        if q > 0.0 {
                            let b = inter[a][s];
                            if b <= 0.0 {
                                return f64::MAX;
                            }
                            total += q * q / b;
                        }
                    }
                }
            }
            CostModel::OptimalInter => {
                for a in 0..num_aps {
                    let q = self.ap_totals[a];
                    total += q * q;
                }
            }
        }
        for c in 0..self.scenario.num_ecs() {
            for s in 0..num_slices {
                let q = self.ec_totals[c * num_slices + s];
                if q > 0.0 {
                    total += q * q / self.scenario.ec_capability(c, s);
                }
            }
        }
        total
    }
}

fn decision_options(scenario: &Scenario) -> Vec<Decision> {
    let mut options = vec![Decision::Local];
    options.extend(scenario.offload_options());
    options
}

fn decode(mut index: u64, base: u64, digits: &mut [u32]) {
    // Device 0 is the most significant digit, so ascending enumeration
    // index is exactly lexicographic order on the vector.
    for slot in digits.iter_mut().rev() {
        *slot = (index % base) as u32;
        index /= base;
    }
}

fn increment(digits: &mut [u32], base: u32) {
    for slot in digits.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return;
        }
        *slot = 0;
    }
}

/// Streaming argmin over an index range; returns the smallest cost and the
/// lexicographically smallest among exactly tying vectors.
fn scan_range(
    scenario: &Scenario,
    model: &CostModel,
    options: &[Decision],
    start: u64,
    end: u64,
) -> (f64, Vec<u32>) {
    let base = options.len() as u64;
    let n = scenario.num_devices();
    let mut evaluator = Evaluator::new(scenario, model, options);
    let mut digits = vec![0u32; n];
    decode(start, base, &mut digits);
    let mut best_cost = f64::INFINITY;
    let mut best = digits.clone();
    for _ in start..end {
        let cost = evaluator.cost(&digits);
        // Ascending index order makes the first strict minimum the
        // lexicographically smallest among ties.
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&digits);
        }
        increment(&mut digits, base as u32);
    }
    (best_cost, best)
}

#[cfg(feature = "parallel")]
fn combine(a: (f64, Vec<u32>), b: (f64, Vec<u32>)) -> (f64, Vec<u32>) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn count_vectors(scenario: &Scenario) -> Result<u64> {
    let options = 1 + scenario.num_aps() * scenario.valid_ec_slice_pairs().len();
    let total = (options as f64).powi(scenario.num_devices() as i32);
    if total > ENUMERATION_GUARD {
        return Err(Error::InstanceTooLarge {
            vectors: total,
            limit: ENUMERATION_GUARD,
        });
    }
    Ok((options as u64).pow(scenario.num_devices() as u32))
}

/// Global minimum of the chosen cost over every decision vector.
///
/// Uses all cores when the `parallel` feature is enabled.
pub fn exhaustive_optimal(scenario: &Scenario, model: &CostModel) -> Result<OracleResult> {
    let total = count_vectors(scenario)?;
    let options = decision_options(scenario);
    #[cfg(feature = "parallel")]
    let (cost, digits) = {
        let chunks = (rayon::current_num_threads() as u64 * 8).min(total).max(1);
        let chunk_len = total.div_ceil(chunks);
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let start = k * chunk_len;
                let end = ((k + 1) * chunk_len).min(total);
                scan_range(scenario, model, &options, start, end)
            })
            .reduce(|| (f64::INFINITY, vec![0u32; scenario.num_devices()]), combine)
    };
    #[cfg(not(feature = "parallel"))]
    let (cost, digits) = scan_range(scenario, model, &options, 0, total);
    finish(scenario, model, &options, cost, digits, total)
}

/// Single-threaded variant of [`exhaustive_optimal`]; exists so benchmarks
/// can compare the two directly.
pub fn exhaustive_optimal_serial(scenario: &Scenario, model: &CostModel) -> Result<OracleResult> {
    let total = count_vectors(scenario)?;
    let options = decision_options(scenario);
    let (cost, digits) = scan_range(scenario, model, &options, 0, total);
    finish(scenario, model, &options, cost, digits, total)
}

fn finish(
    scenario: &Scenario,
    model: &CostModel,
    options: &[Decision],
    cost: f64,
    digits: Vec<u32>,
    evaluated: u64,
) -> Result<OracleResult> {
    if cost == f64::MAX || cost.is_infinite() {
        // Only possible when every vector touches a zero-priced resource,
        // which all-local never does.
        return Err(Error::ZeroCoefficient(
            "no finite-cost decision vector exists".into(),
        ));
    }
    let optimum = DecisionVector::new(digits.iter().map(|&d| options[d as usize]).collect());
    // Recompute the winner through the independent cost path.
    let check = cost::reduced_system_cost(scenario, &optimum, model)?;
    debug_assert!((check - cost).abs() <= 1e-9 * check.max(1.0));
    Ok(OracleResult {
        optimum,
        optimal_cost: check,
        evaluated,
    })
}

/// Ratio of the solver's equilibrium cost to the exhaustive optimum under
/// the cost model induced by `policy`.
pub fn approximation_ratio(
    scenario: &Scenario,
    policy: &InterSlicePolicy,
    options: &CosOptions,
) -> Result<f64> {
    let model = solver::cost_model_for_policy(scenario, policy)?;
    let run = solver::cos_run_with_model(scenario, model.clone(), options)?;
    let achieved = cost::reduced_system_cost(scenario, &run.equilibrium, &model)?;
    let oracle = exhaustive_optimal(scenario, &model)?;
    Ok(achieved / oracle.optimal_cost)
}

/// Randomized check that no feasible perturbation of the closed-form
/// coefficients lowers the system cost.
///
/// Every constraint group (per-access-point inter-slice row, per-resource
/// intra-slice share group) is mixed toward an independent random point of
/// its simplex: `new = (1 - magnitude) * optimal + magnitude * random`.
/// Mixing preserves feasibility, so every trial is a valid competitor.
pub fn perturbation_kkt_check(
    scenario: &Scenario,
    dv: &DecisionVector,
    trials: usize,
    magnitude: f64,
    seed: u64,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::InvalidConfig(format!(
            "perturbation magnitude must lie in [0, 1], got {magnitude}"
        )));
    }
    if dv.num_offloaders() == 0 {
        return Err(Error::InvalidConfig(
            "perturbation check needs at least one offloader".into(),
        ));
    }
    let optimal = allocation::optimal_coefficients(scenario, dv)?;
    let base_cost = cost::system_cost(scenario, dv, &optimal)?.system;
    let run_trial = |trial: usize| -> Result<bool> {
        let mut rng = trial_rng(seed, trial as u64);
        let perturbed = perturb_coefficients(&optimal, magnitude, &mut rng);
        debug_assert!(
            allocation::check_feasible(scenario, &perturbed, dv)?.feasible,
            "perturbation left the feasible set"
        );
        let cost = cost::system_cost(scenario, dv, &perturbed)?.system;
        Ok(cost >= base_cost * (1.0 - 1e-9))
    };
    #[cfg(feature = "parallel")]
    {
        let oks = (0..trials)
            .into_par_iter()
            .map(run_trial)
            .collect::<Result<Vec<bool>>>()?;
        Ok(oks.into_iter().all(|ok| ok))
    }
    #[cfg(not(feature = "parallel"))]
    {
        for trial in 0..trials {
            if !run_trial(trial)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn trial_rng(seed: u64, trial: u64) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    // splitmix64 over (seed, trial) keeps trials decoupled.
    let mut x = seed ^ trial.wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    rand_chacha::ChaCha12Rng::seed_from_u64(x ^ (x >> 31))
}

fn perturb_coefficients(
    optimal: &allocation::AllocationCoefficients,
    magnitude: f64,
    rng: &mut impl Rng,
) -> allocation::AllocationCoefficients {
    let mut out = optimal.clone();
    for row in out.inter.iter_mut() {
        mix_toward_random_simplex_point(row, magnitude, rng);
    }
    // Intra shares: perturb each (edge resource, slice) group jointly.
    for side in [&mut out.intra_radio, &mut out.intra_compute] {
        let mut groups: std::collections::BTreeMap<(usize, usize), Vec<(usize, usize, usize)>> =
            std::collections::BTreeMap::new();
        for &key in side.keys() {
            groups.entry((key.1, key.2)).or_default().push(key);
        }
        for keys in groups.values() {
            let mut values: Vec<f64> = keys.iter().map(|k| side[k]).collect();
            mix_toward_random_simplex_point(&mut values, magnitude, rng);
            for (k, v) in keys.iter().zip(values) {
                side.insert(*k, v);
            }
        }
    }
    out
}

/// Mixes `values` toward a uniform random point of the probability simplex
/// of the same dimension, scaled by the vector's own total so that a group
/// summing to less than one keeps its slack.
fn mix_toward_random_simplex_point(values: &mut [f64], magnitude: f64, rng: &mut impl Rng) {
    if values.is_empty() {
        return;
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return;
    }
    // Exponential draws normalized to the simplex.
    let mut draws: Vec<f64> = values
        .iter()
        .map(|_| -f64::ln(1.0 - rng.gen_range(0.0..1.0)))
        .collect();
    let draw_total: f64 = draws.iter().sum();
    if draw_total <= 0.0 {
        return;
    }
    for d in draws.iter_mut() {
        *d = *d / draw_total * total;
    }
    for (v, d) in values.iter_mut().zip(draws) {
        *v = (1.0 - magnitude) * *v + magnitude * d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScenarioBuilder;
    use crate::scenario::synthetic;

    fn offload(ap: usize, ec: usize, slice: usize) -> Decision {
        Decision::Offload { ap, ec, slice }
    }

    #[test]
    fn single_device_matches_best_response() {
        let s = synthetic(1, 2, 2, 2, 5);
        let model = CostModel::OptimalInter;
        let oracle = exhaustive_optimal(&s, &model).unwrap();
        let run = solver::cos_run_with_model(&s, model.clone(), &CosOptions::default()).unwrap();
        assert_eq!(oracle.optimum, run.equilibrium);
        let options = 1 + s.num_aps() * s.valid_ec_slice_pairs().len();
        assert_eq!(oracle.evaluated, options as u64);
    }

    #[test]
    fn identical_devices_split_across_identical_aps() {
        // Sum-of-squares convexity: the optimum never stacks both devices
        // on one access point when an identical empty one exists.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0, 1.0]; 2],
            data_size: vec![4.0; 2],
            complexity: vec![1000.0; 2],
            match_coeff: vec![vec![1.0]; 2],
            local_capability: vec![1.0; 2],
            ec_capability: vec![vec![1e6]],
        })
        .unwrap();
        let oracle = exhaustive_optimal(&s, &CostModel::OptimalInter).unwrap();
        assert_eq!(oracle.evaluated, 9); // (1 + 2*1*1)^2
        let aps: Vec<usize> = oracle
            .optimum
            .iter()
            .map(|d| match d {
                Decision::Offload { ap, .. } => ap,
                Decision::Local => usize::MAX,
            })
            .collect();
        assert_eq!(aps.len(), 2);
        assert_ne!(aps[0], aps[1]);
        // Lexicographic tie-break puts device 0 on access point 0.
        assert_eq!(oracle.optimum.get(0), offload(0, 0, 0));
    }

    #[test]
    fn oracle_never_exceeds_solver_cost() {
        for seed in 0..8 {
            let s = synthetic(4, 2, 2, 2, 300 + seed);
            for policy in [InterSlicePolicy::Optimal, InterSlicePolicy::Equal] {
                let ratio = approximation_ratio(&s, &policy, &CosOptions::default()).unwrap();
                assert!(ratio >= 1.0 - 1e-12, "seed {seed}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn serial_and_parallel_enumeration_agree() {
        let s = synthetic(5, 2, 2, 2, 17);
        for model in [
            CostModel::OptimalInter,
            CostModel::FixedInter(allocation::baseline_equal(&s)),
        ] {
            let a = exhaustive_optimal(&s, &model).unwrap();
            let b = exhaustive_optimal_serial(&s, &model).unwrap();
            assert_eq!(a.optimum, b.optimum);
            assert_eq!(a.optimal_cost, b.optimal_cost);
            assert_eq!(a.evaluated, b.evaluated);
        }
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let s = synthetic(40, 5, 3, 4, 1);
        assert!(matches!(
            exhaustive_optimal(&s, &CostModel::OptimalInter),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn balanced_partition_sanity() {
        // One slice, uniform rates, enormous edge-cloud capability and no
        // local option worth taking: the optimum partitions the square-root
        // weights across the two access points like a minimum sum of
        // squares split.
        let sizes = [3.0f64, 3.0, 2.0, 2.0, 1.0, 1.0];
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0, 1.0]; 6],
            data_size: sizes.iter().map(|x| x * x).collect(),
            complexity: vec![1.0; 6],
            match_coeff: vec![vec![1.0]; 6],
            local_capability: vec![1e-6; 6],
            ec_capability: vec![vec![1e9]],
        })
        .unwrap();
        let oracle = exhaustive_optimal(&s, &CostModel::OptimalInter).unwrap();
        // Dedicated brute force over two-way partitions of the sizes.
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << 6) {
            let (mut q0, mut q1) = (0.0, 0.0);
            for (k, &size) in sizes.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    q0 += size;
                } else {
                    q1 += size;
                }
            }
            best = best.min(q0 * q0 + q1 * q1);
        }
        let ap_cost: f64 = {
            let g = crate::model::group(&s, &oracle.optimum).unwrap();
            (0..2)
                .map(|a| {
                    let q: f64 = g
                        .ap_members(a)
                        .iter()
                        .map(|&i| (s.data_size(i) / s.rate(i, a)).sqrt())
                        .sum();
                    q * q
                })
                .sum()
        };
        assert!((ap_cost - best).abs() / best < 1e-9);
    }

    #[test]
    fn repeated_enumeration_is_exact() {
        // Re-running yields the identical optimum (exactness / determinism).
        let s = synthetic(4, 3, 2, 2, 23);
        let model = CostModel::OptimalInter;
        let a = exhaustive_optimal(&s, &model).unwrap();
        let b = exhaustive_optimal(&s, &model).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_magnitude_perturbation_always_passes() {
        let s = synthetic(6, 2, 2, 2, 41);
        let run = solver::cos_run(&s, &InterSlicePolicy::Equal, &CosOptions::default()).unwrap();
        if run.equilibrium.num_offloaders() == 0 {
            return;
        }
        assert!(perturbation_kkt_check(&s, &run.equilibrium, 50, 0.0, 7).unwrap());
    }

    #[test]
    fn swapped_shares_cost_strictly_more() {
        // Hand corruption: swap two devices' intra shares in one group.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0], vec![4.0]],
            data_size: vec![9.0, 4.0],
            complexity: vec![1.0, 1.0],
            match_coeff: vec![vec![1.0]; 2],
            local_capability: vec![1e-3; 2],
            ec_capability: vec![vec![1e6]],
        })
        .unwrap();
        let dv = DecisionVector::new(vec![offload(0, 0, 0), offload(0, 0, 0)]);
        let optimal = allocation::optimal_coefficients(&s, &dv).unwrap();
        let base = cost::system_cost(&s, &dv, &optimal).unwrap().system;
        let mut corrupted = optimal.clone();
        let w0 = corrupted.intra_radio[&(0, 0, 0)];
        let w1 = corrupted.intra_radio[&(1, 0, 0)];
        corrupted.intra_radio.insert((0, 0, 0), w1);
        corrupted.intra_radio.insert((1, 0, 0), w0);
        let worse = cost::system_cost(&s, &dv, &corrupted).unwrap().system;
        assert!(worse > base * (1.0 + 1e-6));
    }

    #[test]
    fn random_perturbations_never_beat_closed_form() {
        for seed in 0..5 {
            let s = synthetic(8, 2, 2, 2, 600 + seed);
            let run =
                solver::cos_run(&s, &InterSlicePolicy::Equal, &CosOptions::default()).unwrap();
            if run.equilibrium.num_offloaders() == 0 {
                continue;
            }
            assert!(
                perturbation_kkt_check(&s, &run.equilibrium, 200, 0.5, seed).unwrap(),
                "seed {seed}"
            );
        }
    }
}
