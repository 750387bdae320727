//! Provisioning coefficients: the closed-form optimal intra-slice and
//! inter-slice shares, the two baseline inter-slice policies, and
//! feasibility checking.
//!
//! The optimal shares follow from the KKT conditions of the convex sharing
//! problem: within a group, each member receives a share proportional to the
//! square root of its time constant; across slices, an access point splits
//! its bandwidth proportionally to the groups' square-root weight sums.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{self, DecisionVector, Edge, Scenario};

/// Absolute tolerance on coefficient sums.
pub const FEASIBILITY_ABS_TOL: f64 = 1e-12;

/// Inter-slice coefficient matrix, indexed `[ap][slice]`.
pub type InterMatrix = Vec<Vec<f64>>;

/// Full set of provisioning coefficients for one decision vector.
///
/// The intra maps hold an entry exactly for every device that is grouped on
/// the corresponding resource; keys are `(device, ap_or_ec, slice)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationCoefficients {
    pub inter: InterMatrix,
    pub intra_radio: BTreeMap<(usize, usize, usize), f64>,
    pub intra_compute: BTreeMap<(usize, usize, usize), f64>,
}

/// Inter-slice bandwidth policy.
#[derive(Debug, Clone, PartialEq)]
pub enum InterSlicePolicy {
    /// Closed-form optimal shares recomputed from the decision vector.
    Optimal,
    /// Every slice gets `1/S` of every access point.
    Equal,
    /// Shares proportional to the slices' total edge-cloud capability.
    CloudProportional,
    /// Caller-supplied fixed matrix.
    Fixed(InterMatrix),
}

impl InterSlicePolicy {
    pub fn label(&self) -> &'static str {
        match self {
            InterSlicePolicy::Optimal => "optimal",
            InterSlicePolicy::Equal => "equal",
            InterSlicePolicy::CloudProportional => "cloud-proportional",
            InterSlicePolicy::Fixed(_) => "fixed",
        }
    }

    /// Resolves the policy to a concrete matrix for a given decision vector.
    pub fn matrix(&self, scenario: &Scenario, dv: &DecisionVector) -> Result<InterMatrix> {
        match self {
            InterSlicePolicy::Optimal => optimal_inter(scenario, dv),
            InterSlicePolicy::Equal => Ok(baseline_equal(scenario)),
            InterSlicePolicy::CloudProportional => baseline_cloud_proportional(scenario),
            InterSlicePolicy::Fixed(m) => {
                check_inter_dims(scenario, m)?;
                Ok(m.clone())
            }
        }
    }
}

fn check_inter_dims(scenario: &Scenario, inter: &InterMatrix) -> Result<()> {
    if inter.len() != scenario.num_aps()
        || inter.iter().any(|row| row.len() != scenario.num_slices())
    {
        return Err(Error::InvalidConfig(format!(
            "inter-slice matrix must be {}x{}",
            scenario.num_aps(),
            scenario.num_slices()
        )));
    }
    Ok(())
}

/// Optimal intra-slice shares for every nonempty group: member `i` of the
/// group on edge resource `e` in slice `s` receives
/// `sqrt(E_i) / sum_j sqrt(E_j)`.
///
/// Returns `(radio, compute)` maps keyed by `(device, ap, slice)` and
/// `(device, ec, slice)`.
pub fn optimal_intra(
    scenario: &Scenario,
    dv: &DecisionVector,
) -> Result<(
    BTreeMap<(usize, usize, usize), f64>,
    BTreeMap<(usize, usize, usize), f64>,
)> {
    let grouping = model::group(scenario, dv)?;
    let mut radio = BTreeMap::new();
    let mut compute = BTreeMap::new();
    for a in 0..scenario.num_aps() {
        for s in 0..scenario.num_slices() {
            fill_group(
                scenario,
                &grouping.ap_slice[a][s],
                Edge::Ap(a),
                s,
                |i, w| {
                    radio.insert((i, a, s), w);
                },
            )?;
        }
    }
    for c in 0..scenario.num_ecs() {
        for s in 0..scenario.num_slices() {
            fill_group(
                scenario,
                &grouping.ec_slice[c][s],
                Edge::Ec(c),
                s,
                |i, w| {
                    compute.insert((i, c, s), w);
                },
            )?;
        }
    }
    Ok((radio, compute))
}

fn fill_group(
    scenario: &Scenario,
    members: &[usize],
    edge: Edge,
    slice: usize,
    mut insert: impl FnMut(usize, f64),
) -> Result<()> {
    if members.is_empty() {
        return Ok(());
    }
    let mut roots = Vec::with_capacity(members.len());
    let mut total = 0.0;
    for &i in members {
        let root = model::edge_constant(scenario, i, edge, slice)?.sqrt();
        roots.push(root);
        total += root;
    }
    for (&i, root) in members.iter().zip(roots) {
        insert(i, root / total);
    }
    Ok(())
}

/// Optimal inter-slice shares: access point `a` gives slice `s` the fraction
/// of its bandwidth equal to the slice's share of the total square-root
/// weight at `a`. An access point with no offloaders carries no cost, so any
/// feasible row is optimal; it gets the uniform `1/S` row to keep the matrix
/// total and deterministic.
pub fn optimal_inter(scenario: &Scenario, dv: &DecisionVector) -> Result<InterMatrix> {
    let grouping = model::group(scenario, dv)?;
    let num_slices = scenario.num_slices();
    let mut inter = vec![vec![0.0; num_slices]; scenario.num_aps()];
    for a in 0..scenario.num_aps() {
        let mut slice_sums = vec![0.0; num_slices];
        for s in 0..num_slices {
            for &i in &grouping.ap_slice[a][s] {
                slice_sums[s] += model::edge_constant(scenario, i, Edge::Ap(a), s)?.sqrt();
            }
        }
        let total: f64 = slice_sums.iter().sum();
        if total > 0.0 {
            for s in 0..num_slices {
                inter[a][s] = slice_sums[s] / total;
            }
        } else {
            for s in 0..num_slices {
                inter[a][s] = 1.0 / num_slices as f64;
            }
        }
    }
    Ok(inter)
}

/// Equal-share baseline: `b = 1/S` everywhere.
pub fn baseline_equal(scenario: &Scenario) -> InterMatrix {
    let share = 1.0 / scenario.num_slices() as f64;
    vec![vec![share; scenario.num_slices()]; scenario.num_aps()]
}

/// Cloud-proportional baseline: every access point splits its bandwidth
/// proportionally to the slices' total edge-cloud capability.
pub fn baseline_cloud_proportional(scenario: &Scenario) -> Result<InterMatrix> {
    let mut slice_totals = vec![0.0; scenario.num_slices()];
    for c in 0..scenario.num_ecs() {
        for (s, total) in slice_totals.iter_mut().enumerate() {
            *total += scenario.ec_capability(c, s);
        }
    }
    let grand: f64 = slice_totals.iter().sum();
    for (s, &t) in slice_totals.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "slice {s} has zero total edge-cloud capability"
            )));
        }
    }
    let row: Vec<f64> = slice_totals.iter().map(|t| t / grand).collect();
    Ok(vec![row; scenario.num_aps()])
}

/// One feasibility violation, with enough context to name the constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InterRowSum { ap: usize, sum: f64 },
    IntraGroupSum { edge: Edge, slice: usize, sum: f64 },
    NegativeInter { ap: usize, slice: usize, value: f64 },
    NegativeIntra { key: (usize, usize, usize), value: f64 },
    MissingEntry { key: (usize, usize, usize) },
    SpuriousEntry { key: (usize, usize, usize) },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::InterRowSum { ap, sum } => {
                write!(f, "inter-slice shares of access point {ap} sum to {sum} > 1")
            }
            Violation::IntraGroupSum { edge, slice, sum } => {
                write!(f, "intra-slice shares on {edge:?} slice {slice} sum to {sum} > 1")
            }
            Violation::NegativeInter { ap, slice, value } => {
                write!(f, "negative inter-slice share {value} at ({ap},{slice})")
            }
            Violation::NegativeIntra { key, value } => {
                write!(f, "negative intra-slice share {value} at {key:?}")
            }
            Violation::MissingEntry { key } => {
                write!(f, "grouped device has no coefficient: {key:?}")
            }
            Violation::SpuriousEntry { key } => {
                write!(f, "coefficient for a device not in the group: {key:?}")
            }
        }
    }
}

/// Result of [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Checks all coefficient constraints against a decision vector: row sums,
/// group sums, non-negativity, and exact correspondence between intra
/// entries and group membership.
pub fn check_feasible(
    scenario: &Scenario,
    coeffs: &AllocationCoefficients,
    dv: &DecisionVector,
) -> Result<FeasibilityReport> {
    check_inter_dims(scenario, &coeffs.inter)?;
    let grouping = model::group(scenario, dv)?;
    let mut violations = Vec::new();

    for (a, row) in coeffs.inter.iter().enumerate() {
        for (s, &b) in row.iter().enumerate() {
            if b < 0.0 {
                violations.push(Violation::NegativeInter {
                    ap: a,
                    slice: s,
                    value: b,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if sum > 1.0 + FEASIBILITY_ABS_TOL {
            violations.push(Violation::InterRowSum { ap: a, sum });
        }
    }

    check_intra_side(
        &coeffs.intra_radio,
        |a, s| grouping.ap_slice[a][s].clone(),
        scenario.num_aps(),
        scenario.num_slices(),
        |a| Edge::Ap(a),
        &mut violations,
    );
    check_intra_side(
        &coeffs.intra_compute,
        |c, s| grouping.ec_slice[c][s].clone(),
        scenario.num_ecs(),
        scenario.num_slices(),
        |c| Edge::Ec(c),
        &mut violations,
    );

    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

fn check_intra_side(
    entries: &BTreeMap<(usize, usize, usize), f64>,
    members: impl Fn(usize, usize) -> Vec<usize>,
    num_edges: usize,
    num_slices: usize,
    edge: impl Fn(usize) -> Edge,
    violations: &mut Vec<Violation>,
) {
    for (&key, &w) in entries {
        if w < 0.0 {
            violations.push(Violation::NegativeIntra { key, value: w });
        }
    }
    for e in 0..num_edges {
        for s in 0..num_slices {
            let group = members(e, s);
            let mut sum = 0.0;
            for &i in &group {
                match entries.get(&(i, e, s)) {
                    Some(&w) => sum += w,
                    None => violations.push(Violation::MissingEntry { key: (i, e, s) }),
                }
            }
            if sum > 1.0 + FEASIBILITY_ABS_TOL {
                violations.push(Violation::IntraGroupSum {
                    edge: edge(e),
                    slice: s,
                    sum,
                });
            }
        }
    }
    for &key in entries.keys() {
        let (i, e, s) = key;
        if e >= num_edges || s >= num_slices || !members(e, s).contains(&i) {
            violations.push(Violation::SpuriousEntry { key });
        }
    }
}

/// Convenience: the full optimal coefficient set for a decision vector.
pub fn optimal_coefficients(
    scenario: &Scenario,
    dv: &DecisionVector,
) -> Result<AllocationCoefficients> {
    let (intra_radio, intra_compute) = optimal_intra(scenario, dv)?;
    Ok(AllocationCoefficients {
        inter: optimal_inter(scenario, dv)?,
        intra_radio,
        intra_compute,
    })
}

/// Coefficients under a fixed inter-slice policy with optimal intra shares.
pub fn coefficients_for_policy(
    scenario: &Scenario,
    dv: &DecisionVector,
    policy: &InterSlicePolicy,
) -> Result<AllocationCoefficients> {
    let (intra_radio, intra_compute) = optimal_intra(scenario, dv)?;
    Ok(AllocationCoefficients {
        inter: policy.matrix(scenario, dv)?,
        intra_radio,
        intra_compute,
    })
}
