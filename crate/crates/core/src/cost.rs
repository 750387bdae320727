//! Completion-time costs in three forms: the general form over explicit
//! provisioning coefficients, the reduced congestion form in which the group
//! sums collapse to squared weight totals, and the exact potential of the
//! induced game.
//!
//! All variants agree (to floating tolerance) when the coefficients are the
//! closed-form optimal ones; tests exercise the equivalences.

use crate::allocation::AllocationCoefficients;
use crate::error::{Error, Result};
use crate::model::{self, Decision, DecisionVector, Scenario};

/// Relative improvement threshold used by the solver and the equilibrium
/// certifier to guard against floating-point livelock.
pub const IMPROVEMENT_REL_EPS: f64 = 1e-12;

/// Which cost formulation prices access-point congestion.
///
/// `FixedInter` keeps a per-(ap, slice) resource priced by the supplied
/// inter-slice matrix; `OptimalInter` assumes the closed-form optimal
/// inter-slice shares, under which the slice choice no longer affects the
/// transmission cost and each access point becomes a single resource.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    FixedInter(Vec<Vec<f64>>),
    OptimalInter,
}

impl CostModel {
    fn check(&self, scenario: &Scenario) -> Result<()> {
        if let CostModel::FixedInter(inter) = self {
            if inter.len() != scenario.num_aps()
                || inter.iter().any(|r| r.len() != scenario.num_slices())
            {
                return Err(Error::InvalidConfig(format!(
                    "inter-slice matrix must be {}x{}",
                    scenario.num_aps(),
                    scenario.num_slices()
                )));
            }
            for row in inter {
                for &b in row {
                    if !(b >= 0.0) || !b.is_finite() {
                        return Err(Error::InvalidConfig(format!(
                            "inter-slice coefficients must be finite and non-negative, got {b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// System cost split by device, by slice and into the local remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub per_device: Vec<f64>,
    pub per_slice: Vec<f64>,
    pub local_total: f64,
    pub system: f64,
}

/// Completion time of device `i` under explicit coefficients: transmit plus
/// execute time when offloading, local execution time otherwise.
pub fn wd_cost(
    scenario: &Scenario,
    dv: &DecisionVector,
    coeffs: &AllocationCoefficients,
    device: usize,
) -> Result<f64> {
    scenario.check_device(device)?;
    match dv.get(device) {
        Decision::Local => Ok(model::local_time(scenario, device)),
        Decision::Offload { ap, ec, slice } => {
            let b = coeffs.inter[ap][slice];
            let w_radio = *coeffs.intra_radio.get(&(device, ap, slice)).ok_or_else(|| {
                Error::ZeroCoefficient(format!(
                    "no radio share for device {device} on access point {ap}, slice {slice}"
                ))
            })?;
            let w_compute = *coeffs
                .intra_compute
                .get(&(device, ec, slice))
                .ok_or_else(|| {
                    Error::ZeroCoefficient(format!(
                        "no compute share for device {device} on edge cloud {ec}, slice {slice}"
                    ))
                })?;
            if b <= 0.0 || w_radio <= 0.0 || w_compute <= 0.0 {
                return Err(Error::ZeroCoefficient(format!(
                    "device {device} uses b={b}, w_radio={w_radio}, w_compute={w_compute}"
                )));
            }
            let e_ap = model::edge_constant(scenario, device, model::Edge::Ap(ap), slice)?;
            let e_ec = model::edge_constant(scenario, device, model::Edge::Ec(ec), slice)?;
            Ok(e_ap / (b * w_radio) + e_ec / w_compute)
        }
    }
}

/// Aggregate completion time inside slice `s` under explicit coefficients.
pub fn slice_cost(
    scenario: &Scenario,
    dv: &DecisionVector,
    coeffs: &AllocationCoefficients,
    slice: usize,
) -> Result<f64> {
    if slice >= scenario.num_slices() {
        return Err(Error::IndexOutOfRange {
            what: "slice",
            index: slice,
            len: scenario.num_slices(),
        });
    }
    let mut total = 0.0;
    for (i, d) in dv.iter().enumerate() {
        if matches!(d, Decision::Offload { slice: s, .. } if s == slice) {
            total += wd_cost(scenario, dv, coeffs, i)?;
        }
    }
    Ok(total)
}

/// Full system cost under explicit coefficients, with the per-device,
/// per-slice and local decomposition.
pub fn system_cost(
    scenario: &Scenario,
    dv: &DecisionVector,
    coeffs: &AllocationCoefficients,
) -> Result<CostBreakdown> {
    scenario.check_decisions(dv)?;
    let mut per_device = Vec::with_capacity(dv.len());
    let mut per_slice = vec![0.0; scenario.num_slices()];
    let mut local_total = 0.0;
    for (i, d) in dv.iter().enumerate() {
        let cost = wd_cost(scenario, dv, coeffs, i)?;
        per_device.push(cost);
        match d {
            Decision::Local => local_total += cost,
            Decision::Offload { slice, .. } => per_slice[slice] += cost,
        }
    }
    let system = per_slice.iter().sum::<f64>() + local_total;
    Ok(CostBreakdown {
        per_device,
        per_slice,
        local_total,
        system,
    })
}

/// Completion time of device `i` in the reduced congestion form: the sum
/// over the device's resources of `m_r * q_{i,r} * q_r(d)`.
pub fn reduced_device_cost(
    scenario: &Scenario,
    dv: &DecisionVector,
    cost_model: &CostModel,
    device: usize,
) -> Result<f64> {
    cost_model.check(scenario)?;
    scenario.check_device(device)?;
    scenario.check_decisions(dv)?;
    match dv.get(device) {
        Decision::Local => Ok(model::local_time(scenario, device)),
        Decision::Offload { ap, ec, slice } => {
            let own_ap = (scenario.data_size(device) / scenario.rate(device, ap)).sqrt();
            let ap_term = match cost_model {
                CostModel::FixedInter(inter) => {
                    let b = inter[ap][slice];
                    if b <= 0.0 {
                        return Err(Error::ZeroCoefficient(format!(
                            "inter-slice coefficient of access point {ap}, slice {slice}"
                        )));
                    }
                    let mut q = 0.0;
                    for (j, d) in dv.iter().enumerate() {
                        if matches!(d, Decision::Offload { ap: a, slice: s, .. } if a == ap && s == slice)
                        {
                            q += (scenario.data_size(j) / scenario.rate(j, ap)).sqrt();
                        }
                    }
                    own_ap * q / b
                }
                CostModel::OptimalInter => {
                    let mut q = 0.0;
                    for (j, d) in dv.iter().enumerate() {
                        if matches!(d, Decision::Offload { ap: a, .. } if a == ap) {
                            q += (scenario.data_size(j) / scenario.rate(j, ap)).sqrt();
                        }
                    }
                    own_ap * q
                }
            };
            let own_ec =
                (scenario.complexity(device) / scenario.match_coeff(device, slice)).sqrt();
            let mut q_ec = 0.0;
            for (j, d) in dv.iter().enumerate() {
                if matches!(d, Decision::Offload { ec: c, slice: s, .. } if c == ec && s == slice) {
                    q_ec += (scenario.complexity(j) / scenario.match_coeff(j, slice)).sqrt();
                }
            }
            Ok(ap_term + own_ec * q_ec / scenario.ec_capability(ec, slice))
        }
    }
}

/// System cost in the reduced congestion form: `sum_r m_r q_r(d)^2`.
///
/// Summation order is canonical (access points ascending, then slices, then
/// edge clouds, then local devices), so the result is reproducible
/// independently of how the decision vector was reached.
pub fn reduced_system_cost(
    scenario: &Scenario,
    dv: &DecisionVector,
    cost_model: &CostModel,
) -> Result<f64> {
    cost_model.check(scenario)?;
    scenario.check_decisions(dv)?;
    let grouping = model::group(scenario, dv)?;
    let mut total = 0.0;
    match cost_model {
        CostModel::FixedInter(inter) => {
            for a in 0..scenario.num_aps() {
                for s in 0..scenario.num_slices() {
                    let members = &grouping.ap_slice[a][s];
                    if members.is_empty() {
                        continue;
                    }
                    let b = inter[a][s];
                    if b <= 0.0 {
                        return Err(Error::ZeroCoefficient(format!(
                            "inter-slice coefficient of access point {a}, slice {s}"
                        )));
                    }
                    let q: f64 = members
                        .iter()
                        .map(|&j| (scenario.data_size(j) / scenario.rate(j, a)).sqrt())
                        .sum();
                    total += q * q / b;
                }
            }
        }
        CostModel::OptimalInter => {
            for a in 0..scenario.num_aps() {
                let q: f64 = grouping
                    .ap_members(a)
                    .iter()
                    .map(|&j| (scenario.data_size(j) / scenario.rate(j, a)).sqrt())
                    .sum();
                total += q * q;
            }
        }
    }
    for c in 0..scenario.num_ecs() {
        for s in 0..scenario.num_slices() {
            let members = &grouping.ec_slice[c][s];
            if members.is_empty() {
                continue;
            }
            let q: f64 = members
                .iter()
                .map(|&j| (scenario.complexity(j) / scenario.match_coeff(j, s)).sqrt())
                .sum();
            total += q * q / scenario.ec_capability(c, s);
        }
    }
    for &i in &grouping.local {
        total += model::local_time(scenario, i);
    }
    Ok(total)
}

/// Exact potential of the offloading game: every unilateral decision change
/// moves the potential by exactly the mover's cost change.
///
/// Devices are ordered by their immutable index; each device's term on a
/// resource is its weight times the resource cost evaluated at the prefix
/// congestion up to and including itself.
pub fn potential(scenario: &Scenario, dv: &DecisionVector, cost_model: &CostModel) -> Result<f64> {
    cost_model.check(scenario)?;
    scenario.check_decisions(dv)?;
    let num_slices = scenario.num_slices();
    let mut run_ap = match cost_model {
        CostModel::FixedInter(_) => vec![0.0; scenario.num_aps() * num_slices],
        CostModel::OptimalInter => vec![0.0; scenario.num_aps()],
    };
    let mut run_ec = vec![0.0; scenario.num_ecs() * num_slices];
    let mut psi = 0.0;
    for (i, d) in dv.iter().enumerate() {
        match d {
            Decision::Local => psi += model::local_time(scenario, i),
            Decision::Offload { ap, ec, slice } => {
                let w_ap = (scenario.data_size(i) / scenario.rate(i, ap)).sqrt();
                match cost_model {
                    CostModel::FixedInter(inter) => {
                        let b = inter[ap][slice];
                        if b <= 0.0 {
                            return Err(Error::ZeroCoefficient(format!(
                                "inter-slice coefficient of access point {ap}, slice {slice}"
                            )));
                        }
                        let slot = &mut run_ap[ap * num_slices + slice];
                        *slot += w_ap;
                        psi += w_ap * *slot / b;
                    }
                    CostModel::OptimalInter => {
                        let slot = &mut run_ap[ap];
                        *slot += w_ap;
                        psi += w_ap * *slot;
                    }
                }
                let w_ec = (scenario.complexity(i) / scenario.match_coeff(i, slice)).sqrt();
                let slot = &mut run_ec[ec * num_slices + slice];
                *slot += w_ec;
                psi += w_ec * *slot / scenario.ec_capability(ec, slice);
            }
        }
    }
    Ok(psi)
}

/// Incremental cost evaluator over one decision vector.
///
/// Caches per-device weights and per-resource congestion totals; a
/// unilateral decision change updates the totals in O(1). Member counts are
/// tracked so that emptied resources snap back to an exact zero total.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    scenario: &'a Scenario,
    cost_model: CostModel,
    decisions: Vec<Decision>,
    // Per-device weights: w_ap[i * A + a], w_ec[i * S + s], local time.
    w_ap: Vec<f64>,
    w_ec: Vec<f64>,
    t_local: Vec<f64>,
    // Congestion totals. ap_totals is indexed a*S+s under FixedInter and a
    // under OptimalInter; ec_totals is indexed c*S+s.
    ap_totals: Vec<f64>,
    ap_counts: Vec<u32>,
    ec_totals: Vec<f64>,
    ec_counts: Vec<u32>,
    local_total: f64,
    local_count: u32,
}

impl<'a> EvalContext<'a> {
    pub fn new(scenario: &'a Scenario, cost_model: CostModel, dv: DecisionVector) -> Result<Self> {
        cost_model.check(scenario)?;
        scenario.check_decisions(&dv)?;
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
            t_local[i] = model::local_time(scenario, i);
        }
        let ap_slots = match cost_model {
            CostModel::FixedInter(_) => num_aps * num_slices,
            CostModel::OptimalInter => num_aps,
        };
        let mut ctx = EvalContext {
            scenario,
            cost_model,
            decisions: Vec::new(),
            w_ap,
            w_ec,
            t_local,
            ap_totals: vec![0.0; ap_slots],
            ap_counts: vec![0; ap_slots],
            ec_totals: vec![0.0; scenario.num_ecs() * num_slices],
            ec_counts: vec![0; scenario.num_ecs() * num_slices],
            local_total: 0.0,
            local_count: 0,
        };
        for (i, d) in dv.iter().enumerate() {
            ctx.add_device(i, d);
        }
        ctx.decisions = dv.as_slice().to_vec();
        Ok(ctx)
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost_model
    }

    pub fn decision(&self, device: usize) -> Decision {
        self.decisions[device]
    }

    pub fn decisions(&self) -> DecisionVector {
        DecisionVector::new(self.decisions.clone())
    }

    fn ap_slot(&self, ap: usize, slice: usize) -> usize {
        match self.cost_model {
            CostModel::FixedInter(_) => ap * self.scenario.num_slices() + slice,
            CostModel::OptimalInter => ap,
        }
    }

    fn ec_slot(&self, ec: usize, slice: usize) -> usize {
        ec * self.scenario.num_slices() + slice
    }

    fn add_device(&mut self, device: usize, d: Decision) {
        match d {
            Decision::Local => {
                self.local_total += self.t_local[device];
                self.local_count += 1;
            }
            Decision::Offload { ap, ec, slice } => {
                let slot = self.ap_slot(ap, slice);
                self.ap_totals[slot] += self.own_ap_weight(device, ap);
                self.ap_counts[slot] += 1;
                let slot = self.ec_slot(ec, slice);
                self.ec_totals[slot] += self.own_ec_weight(device, slice);
                self.ec_counts[slot] += 1;
            }
        }
    }

    fn remove_device(&mut self, device: usize, d: Decision) {
        match d {
            Decision::Local => {
                self.local_count -= 1;
                if self.local_count == 0 {
                    self.local_total = 0.0;
                } else {
                    self.local_total -= self.t_local[device];
                }
            }
            Decision::Offload { ap, ec, slice } => {
                let slot = self.ap_slot(ap, slice);
                self.ap_counts[slot] -= 1;
                if self.ap_counts[slot] == 0 {
                    self.ap_totals[slot] = 0.0;
                } else {
                    self.ap_totals[slot] -= self.own_ap_weight(device, ap);
                }
                let slot = self.ec_slot(ec, slice);
                self.ec_counts[slot] -= 1;
                if self.ec_counts[slot] == 0 {
                    self.ec_totals[slot] = 0.0;
                } else {
                    self.ec_totals[slot] -= self.own_ec_weight(device, slice);
                }
            }
        }
    }

    pub fn own_ap_weight(&self, device: usize, ap: usize) -> f64 {
        self.w_ap[device * self.scenario.num_aps() + ap]
    }

    pub fn own_ec_weight(&self, device: usize, slice: usize) -> f64 {
        self.w_ec[device * self.scenario.num_slices() + slice]
    }

    pub fn local_time(&self, device: usize) -> f64 {
        self.t_local[device]
    }

    /// Congestion on the access-point resource of `(ap, slice)` excluding
    /// device `i`'s own contribution.
    pub fn ap_total_excluding(&self, device: usize, ap: usize, slice: usize) -> f64 {
        let slot = self.ap_slot(ap, slice);
        let on_resource = match (self.decisions[device], &self.cost_model) {
            (Decision::Offload { ap: a, .. }, CostModel::OptimalInter) => a == ap,
            (Decision::Offload { ap: a, slice: s, .. }, CostModel::FixedInter(_)) => {
                a == ap && s == slice
            }
            _ => false,
        };
        if !on_resource {
            return self.ap_totals[slot];
        }
        if self.ap_counts[slot] == 1 {
            0.0
        } else {
            self.ap_totals[slot] - self.own_ap_weight(device, ap)
        }
    }

    /// Congestion on edge cloud `(ec, slice)` excluding device `i`.
    pub fn ec_total_excluding(&self, device: usize, ec: usize, slice: usize) -> f64 {
        let slot = self.ec_slot(ec, slice);
        let on_resource = matches!(
            self.decisions[device],
            Decision::Offload { ec: c, slice: s, .. } if c == ec && s == slice
        );
        if !on_resource {
            return self.ec_totals[slot];
        }
        if self.ec_counts[slot] == 1 {
            0.0
        } else {
            self.ec_totals[slot] - self.own_ec_weight(device, slice)
        }
    }

    /// Multiplier of the access-point resource used by `(ap, slice)`.
    pub fn ap_multiplier(&self, ap: usize, slice: usize) -> Result<f64> {
        match &self.cost_model {
            CostModel::FixedInter(inter) => {
                let b = inter[ap][slice];
                if b <= 0.0 {
                    return Err(Error::ZeroCoefficient(format!(
                        "inter-slice coefficient of access point {ap}, slice {slice}"
                    )));
                }
                Ok(1.0 / b)
            }
            CostModel::OptimalInter => Ok(1.0),
        }
    }

    /// True when the access-point resource of `(ap, slice)` is priced by a
    /// zero coefficient and therefore unusable under this cost model.
    pub fn ap_unusable(&self, ap: usize, slice: usize) -> bool {
        matches!(&self.cost_model, CostModel::FixedInter(inter) if inter[ap][slice] <= 0.0)
    }

    /// Cost of device `i` if it unilaterally played `candidate`, all other
    /// decisions fixed.
    pub fn candidate_cost(&self, device: usize, candidate: Decision) -> Result<f64> {
        match candidate {
            Decision::Local => Ok(self.t_local[device]),
            Decision::Offload { ap, ec, slice } => {
                self.scenario.check_decision(candidate)?;
                let m_ap = self.ap_multiplier(ap, slice)?;
                let w_ap = self.own_ap_weight(device, ap);
                let w_ec = self.own_ec_weight(device, slice);
                let q_ap = self.ap_total_excluding(device, ap, slice) + w_ap;
                let q_ec = self.ec_total_excluding(device, ec, slice) + w_ec;
                Ok(m_ap * w_ap * q_ap + w_ec * q_ec / self.scenario.ec_capability(ec, slice))
            }
        }
    }

    /// Cost of device `i` under its current decision.
    pub fn device_cost(&self, device: usize) -> Result<f64> {
        self.candidate_cost(device, self.decisions[device])
    }

    /// Applies a unilateral decision change in O(1).
    pub fn apply(&mut self, device: usize, decision: Decision) -> Result<()> {
        self.scenario.check_decision(decision)?;
        let old = self.decisions[device];
        if old == decision {
            return Ok(());
        }
        self.remove_device(device, old);
        self.add_device(device, decision);
        self.decisions[device] = decision;
        Ok(())
    }

    /// System cost from the cached totals.
    pub fn system_cost(&self) -> Result<f64> {
        let mut total = self.local_total;
        match &self.cost_model {
            CostModel::FixedInter(inter) => {
                let num_slices = self.scenario.num_slices();
                for a in 0..self.scenario.num_aps() {
                    for s in 0..num_slices {
                        let slot = a * num_slices + s;
                        if self.ap_counts[slot] == 0 {
                            continue;
                        }
                        let b = inter[a][s];
                        if b <= 0.0 {
                            return Err(Error::ZeroCoefficient(format!(
                                "inter-slice coefficient of access point {a}, slice {s}"
                            )));
                        }
                        total += self.ap_totals[slot] * self.ap_totals[slot] / b;
                    }
                }
            }
            CostModel::OptimalInter => {
                for slot in 0..self.ap_totals.len() {
                    total += self.ap_totals[slot] * self.ap_totals[slot];
                }
            }
        }
        for c in 0..self.scenario.num_ecs() {
            for s in 0..self.scenario.num_slices() {
                let slot = self.ec_slot(c, s);
                if self.ec_counts[slot] > 0 {
                    total += self.ec_totals[slot] * self.ec_totals[slot]
                        / self.scenario.ec_capability(c, s);
                }
            }
        }
        Ok(total)
    }

    /// Potential of the current decision vector, recomputed from scratch in
    /// canonical device order.
    pub fn potential(&self) -> Result<f64> {
        potential(
            self.scenario,
            &DecisionVector::new(self.decisions.clone()),
            &self.cost_model,
        )
    }

    /// Verifies the cached totals against a from-scratch recomputation.
    /// Returns the largest absolute deviation found.
    pub fn verify_totals(&self) -> Result<f64> {
        let fresh = EvalContext::new(
            self.scenario,
            self.cost_model.clone(),
            DecisionVector::new(self.decisions.clone()),
        )?;
        let mut worst: f64 = 0.0;
        for (a, b) in self
            .ap_totals
            .iter()
            .zip(&fresh.ap_totals)
            .chain(self.ec_totals.iter().zip(&fresh.ec_totals))
        {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((self.local_total - fresh.local_total).abs());
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation;
    use crate::model::ScenarioBuilder;

    fn offload(ap: usize, ec: usize, slice: usize) -> Decision {
        Decision::Offload { ap, ec, slice }
    }

    fn scenario() -> Scenario {
        Scenario::new(ScenarioBuilder {
            rate: vec![
                vec![2.0, 1.0],
                vec![4.0, 2.0],
                vec![1.0, 8.0],
                vec![3.0, 3.0],
            ],
            data_size: vec![8.0, 4.0, 16.0, 6.0],
            complexity: vec![10.0, 12.0, 16.0, 9.0],
            match_coeff: vec![
                vec![1.0, 2.0],
                vec![3.0, 1.0],
                vec![1.0, 1.0],
                vec![2.0, 2.0],
            ],
            local_capability: vec![2.0, 3.0, 4.0, 1.5],
            ec_capability: vec![vec![2.0, 5.0], vec![0.0, 4.0]],
        })
        .unwrap()
    }

    #[test]
    fn wd_cost_local_and_manual_offload() {
        let s = scenario();
        let dv = DecisionVector::all_local(4);
        let coeffs = allocation::optimal_coefficients(&s, &dv).unwrap();
        assert_eq!(wd_cost(&s, &dv, &coeffs, 0).unwrap(), 5.0);

        // Hand-set coefficients: E_ap = 2, b = 0.5, w_a = 0.5, E_ec = 3, w_c = 1
        // => 2 / 0.25 + 3 = 11.
        let s1 = Scenario::new(ScenarioBuilder {
            rate: vec![vec![4.0]],
            data_size: vec![8.0],
            complexity: vec![9.0],
            match_coeff: vec![vec![1.0]],
            local_capability: vec![1.0],
            ec_capability: vec![vec![3.0]],
        })
        .unwrap();
        let dv1 = DecisionVector::new(vec![offload(0, 0, 0)]);
        let mut coeffs1 = allocation::optimal_coefficients(&s1, &dv1).unwrap();
        coeffs1.inter[0][0] = 0.5;
        coeffs1.intra_radio.insert((0, 0, 0), 0.5);
        coeffs1.intra_compute.insert((0, 0, 0), 1.0);
        assert!((wd_cost(&s1, &dv1, &coeffs1, 0).unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn wd_cost_rejects_zero_coefficient() {
        let s = scenario();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 0),
            Decision::Local,
            Decision::Local,
            Decision::Local,
        ]);
        let mut coeffs = allocation::optimal_coefficients(&s, &dv).unwrap();
        coeffs.inter[0][0] = 0.0;
        assert!(matches!(
            wd_cost(&s, &dv, &coeffs, 0),
            Err(Error::ZeroCoefficient(_))
        ));
    }

    #[test]
    fn slice_cost_is_sum_of_offloader_costs() {
        let s = scenario();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 1),
            offload(1, 1, 1),
            Decision::Local,
            offload(0, 0, 0),
        ]);
        let coeffs = allocation::optimal_coefficients(&s, &dv).unwrap();
        let c1 = slice_cost(&s, &dv, &coeffs, 1).unwrap();
        let want = wd_cost(&s, &dv, &coeffs, 0).unwrap() + wd_cost(&s, &dv, &coeffs, 1).unwrap();
        assert!((c1 - want).abs() / want < 1e-12);
        // A slice with no offloaders costs nothing.
        let dv_local = DecisionVector::all_local(4);
        let coeffs_local = allocation::optimal_coefficients(&s, &dv_local).unwrap();
        assert_eq!(slice_cost(&s, &dv_local, &coeffs_local, 0).unwrap(), 0.0);
    }

    #[test]
    fn breakdown_is_internally_consistent() {
        let s = scenario();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 1),
            offload(1, 1, 1),
            Decision::Local,
            offload(0, 0, 0),
        ]);
        let coeffs = allocation::optimal_coefficients(&s, &dv).unwrap();
        let b = system_cost(&s, &dv, &coeffs).unwrap();
        let per_device_sum: f64 = b.per_device.iter().sum();
        let split_sum = b.per_slice.iter().sum::<f64>() + b.local_total;
        assert!((b.system - per_device_sum).abs() / b.system < 1e-9);
        assert!((b.system - split_sum).abs() / b.system < 1e-9);
    }

    #[test]
    fn all_local_costs() {
        let s = scenario();
        let dv = DecisionVector::all_local(4);
        let want: f64 = (0..4).map(|i| model::local_time(&s, i)).sum();
        let coeffs = allocation::optimal_coefficients(&s, &dv).unwrap();
        assert_eq!(system_cost(&s, &dv, &coeffs).unwrap().system, want);
        for cm in [
            CostModel::FixedInter(allocation::baseline_equal(&s)),
            CostModel::OptimalInter,
        ] {
            assert_eq!(reduced_system_cost(&s, &dv, &cm).unwrap(), want);
            assert_eq!(potential(&s, &dv, &cm).unwrap(), want);
        }
    }

    #[test]
    fn reduced_matches_general_under_optimal_intra() {
        let s = scenario();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 1),
            offload(0, 1, 1),
            offload(1, 0, 0),
            Decision::Local,
        ]);
        let inter = allocation::baseline_equal(&s);
        let (intra_radio, intra_compute) = allocation::optimal_intra(&s, &dv).unwrap();
        let coeffs = AllocationCoefficients {
            inter: inter.clone(),
            intra_radio,
            intra_compute,
        };
        let cm = CostModel::FixedInter(inter);
        for i in 0..4 {
            let general = wd_cost(&s, &dv, &coeffs, i).unwrap();
            let reduced = reduced_device_cost(&s, &dv, &cm, i).unwrap();
            assert!(
                (general - reduced).abs() / general.max(1.0) < 1e-12,
                "device {i}: {general} vs {reduced}"
            );
        }
        let general = system_cost(&s, &dv, &coeffs).unwrap().system;
        let reduced = reduced_system_cost(&s, &dv, &cm).unwrap();
        assert!((general - reduced).abs() / general < 1e-12);
    }

    #[test]
    fn single_resource_squared_weights() {
        // Two devices on one resource with weights 1 and 2: m (1+2)^2 = 9m.
        let s = Scenario::new(ScenarioBuilder {
            rate: vec![vec![1.0], vec![1.0]],
            data_size: vec![1.0, 4.0],
            complexity: vec![1.0, 1.0],
            match_coeff: vec![vec![1.0]; 2],
            local_capability: vec![1.0; 2],
            ec_capability: vec![vec![1e9]],
        })
        .unwrap();
        let dv = DecisionVector::new(vec![offload(0, 0, 0); 2]);
        let cm = CostModel::FixedInter(vec![vec![1.0]]);
        let got = reduced_system_cost(&s, &dv, &cm).unwrap();
        // AP term 9, EC term (1+1)^2 / 1e9 negligible but included.
        assert!((got - (9.0 + 4.0 / 1e9)).abs() < 1e-12);
    }

    #[test]
    fn sole_offloader_costs_its_edge_constants() {
        let s = scenario();
        let mut dv = DecisionVector::all_local(4);
        dv.set(2, offload(1, 0, 1));
        let e_ap = model::edge_constant(&s, 2, model::Edge::Ap(1), 1).unwrap();
        let e_ec = model::edge_constant(&s, 2, model::Edge::Ec(0), 1).unwrap();
        let bar = reduced_device_cost(&s, &dv, &CostModel::OptimalInter, 2).unwrap();
        assert!((bar - (e_ap + e_ec)).abs() < 1e-12);
        // Under a fixed policy with b = 1 on that resource the same holds.
        let mut inter = allocation::baseline_equal(&s);
        inter[1][1] = 1.0;
        let tilde = reduced_device_cost(&s, &dv, &CostModel::FixedInter(inter), 2).unwrap();
        assert!((tilde - (e_ap + e_ec)).abs() < 1e-12);
    }

    #[test]
    fn shared_resource_cross_term() {
        // Two offloaders on one (ap, slice): each device's cost grows by
        // m * q_i * q_j over its solo cost.
        let s = scenario();
        let inter = allocation::baseline_equal(&s);
        let cm = CostModel::FixedInter(inter.clone());
        let mut solo = DecisionVector::all_local(4);
        solo.set(0, offload(0, 0, 1));
        let solo_cost = reduced_device_cost(&s, &solo, &cm, 0).unwrap();
        let mut both = solo.clone();
        both.set(1, offload(0, 0, 1));
        let both_cost = reduced_device_cost(&s, &both, &cm, 0).unwrap();
        let q0_ap = (s.data_size(0) / s.rate(0, 0)).sqrt();
        let q1_ap = (s.data_size(1) / s.rate(1, 0)).sqrt();
        let q0_ec = (s.complexity(0) / s.match_coeff(0, 1)).sqrt();
        let q1_ec = (s.complexity(1) / s.match_coeff(1, 1)).sqrt();
        let want = solo_cost
            + q0_ap * q1_ap / inter[0][1]
            + q0_ec * q1_ec / s.ec_capability(0, 1);
        assert!((both_cost - want).abs() / want < 1e-12);
    }

    #[test]
    fn ap_congestion_collapses_across_slices_under_optimal_inter() {
        // Two devices at the same AP in different slices: the AP term is
        // (q_1 + q_2)^2, not q_1^2 + q_2^2.
        let s = scenario();
        let dv = DecisionVector::new(vec![
            offload(0, 0, 0),
            offload(0, 0, 1),
            Decision::Local,
            Decision::Local,
        ]);
        let got = reduced_system_cost(&s, &dv, &CostModel::OptimalInter).unwrap();
        let q0 = (s.data_size(0) / s.rate(0, 0)).sqrt();
        let q1 = (s.data_size(1) / s.rate(1, 0)).sqrt();
        let ec0 = {
            let w = (s.complexity(0) / s.match_coeff(0, 0)).sqrt();
            w * w / s.ec_capability(0, 0)
        };
        let ec1 = {
            let w = (s.complexity(1) / s.match_coeff(1, 1)).sqrt();
            w * w / s.ec_capability(0, 1)
        };
        let locals = model::local_time(&s, 2) + model::local_time(&s, 3);
        let want = (q0 + q1) * (q0 + q1) + ec0 + ec1 + locals;
        assert!((got - want).abs() / want < 1e-12);
    }

    #[test]
    fn potential_identity_under_unilateral_moves() {
        let s = scenario();
        let models = [
            CostModel::FixedInter(allocation::baseline_equal(&s)),
            CostModel::OptimalInter,
        ];
        let vectors = [
            DecisionVector::all_local(4),
            DecisionVector::new(vec![
                offload(0, 0, 1),
                offload(0, 1, 1),
                offload(1, 0, 0),
                Decision::Local,
            ]),
        ];
        let moves = [
            (0usize, offload(1, 0, 0)),
            (1, Decision::Local),
            (2, offload(0, 0, 1)),
            (3, offload(1, 1, 1)),
        ];
        for cm in &models {
            for dv in &vectors {
                for &(i, m) in &moves {
                    let mut dv2 = dv.clone();
                    dv2.set(i, m);
                    let dpsi = potential(&s, &dv2, cm).unwrap() - potential(&s, dv, cm).unwrap();
                    let dcost = reduced_device_cost(&s, &dv2, cm, i).unwrap()
                        - reduced_device_cost(&s, dv, cm, i).unwrap();
                    assert!(
                        (dpsi - dcost).abs() <= 1e-9 * dcost.abs().max(1.0),
                        "moving {i} to {m}: dpsi {dpsi} vs dcost {dcost}"
                    );
                }
            }
        }
    }

    #[test]
    fn context_tracks_costs_incrementally() {
        let s = scenario();
        let cm = CostModel::FixedInter(allocation::baseline_equal(&s));
        let mut ctx = EvalContext::new(&s, cm.clone(), DecisionVector::all_local(4)).unwrap();
        let moves = [
            (0usize, offload(0, 0, 1)),
            (1, offload(0, 0, 1)),
            (2, offload(1, 0, 0)),
            (0, offload(1, 1, 1)),
            (1, Decision::Local),
            (3, offload(0, 0, 1)),
        ];
        for &(i, m) in &moves {
            // Candidate cost must equal the from-scratch reduced cost of
            // the hypothetical vector.
            let mut dv2 = ctx.decisions();
            dv2.set(i, m);
            let want = reduced_device_cost(&s, &dv2, &cm, i).unwrap();
            let got = ctx.candidate_cost(i, m).unwrap();
            assert!((got - want).abs() / want.max(1.0) < 1e-12);
            ctx.apply(i, m).unwrap();
            let sys_want = reduced_system_cost(&s, &ctx.decisions(), &cm).unwrap();
            let sys_got = ctx.system_cost().unwrap();
            assert!((sys_got - sys_want).abs() / sys_want < 1e-9);
            assert!(ctx.verify_totals().unwrap() < 1e-9);
        }
    }

    #[test]
    fn emptied_resources_snap_to_zero() {
        let s = scenario();
        let mut ctx =
            EvalContext::new(&s, CostModel::OptimalInter, DecisionVector::all_local(4)).unwrap();
        ctx.apply(0, offload(0, 0, 1)).unwrap();
        ctx.apply(1, offload(0, 0, 1)).unwrap();
        ctx.apply(0, Decision::Local).unwrap();
        ctx.apply(1, Decision::Local).unwrap();
        assert_eq!(ctx.ap_totals.iter().copied().fold(0.0, f64::max), 0.0);
        assert_eq!(ctx.ec_totals.iter().copied().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn resource_cost_monotone_in_membership() {
        let s = scenario();
        let cm = CostModel::OptimalInter;
        let mut dv = DecisionVector::all_local(4);
        let mut last = reduced_system_cost(&s, &dv, &cm).unwrap()
            - (0..4).map(|i| model::local_time(&s, i)).sum::<f64>();
        for i in 0..4 {
            dv.set(i, offload(0, 0, 1));
            let local_part: f64 = dv
                .iter()
                .enumerate()
                .filter(|(_, d)| matches!(d, Decision::Local))
                .map(|(j, _)| model::local_time(&s, j))
                .sum();
            let congested = reduced_system_cost(&s, &dv, &cm).unwrap() - local_part;
            assert!(congested >= last);
            last = congested;
        }
    }
}
