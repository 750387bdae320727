//! Problem instance, offloading decisions, congestion resources and the
//! per-device constants every other module consumes.
//!
//! Units are fixed throughout the crate: bits, bits/second, instructions,
//! instructions/second and seconds. The JSON form of a [`Scenario`] carries a
//! `units` header so files cannot silently mix conventions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for internal consistency checks on scenario data.
pub const INVARIANT_REL_TOL: f64 = 1e-9;

/// Fixed unit declaration embedded in every serialized scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub rate: String,
    pub data: String,
    pub complexity: String,
    pub capability: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            rate: "bps".to_owned(),
            data: "bits".to_owned(),
            complexity: "instructions".to_owned(),
            capability: "ips".to_owned(),
        }
    }
}

/// Immutable problem instance.
///
/// `rate[i][a]` is the achievable PHY rate of device `i` at access point `a`,
/// `match_coeff[i][s]` captures how well slice `s` suits device `i`'s task
/// (the effective instruction count in slice `s` is `complexity[i] /
/// match_coeff[i][s]`), and `ec_capability[c][s]` is the computing capability
/// of edge cloud `c` inside slice `s`. A zero entry means the edge cloud is
/// absent from that slice; offload decisions may not target such pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioData", into = "ScenarioData")]
pub struct Scenario {
    num_devices: usize,
    num_aps: usize,
    num_ecs: usize,
    num_slices: usize,
    rate: Vec<Vec<f64>>,
    data_size: Vec<f64>,
    complexity: Vec<f64>,
    match_coeff: Vec<Vec<f64>>,
    local_capability: Vec<f64>,
    ec_capability: Vec<Vec<f64>>,
    units: Units,
    /// (ec, slice) pairs with positive capability, in lexicographic order.
    #[serde(skip)]
    valid_pairs: Vec<(usize, usize)>,
}

/// Raw serialization mirror of [`Scenario`]; validated on the way in.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioData {
    num_devices: usize,
    num_aps: usize,
    num_ecs: usize,
    num_slices: usize,
    rate: Vec<Vec<f64>>,
    data_size: Vec<f64>,
    complexity: Vec<f64>,
    match_coeff: Vec<Vec<f64>>,
    local_capability: Vec<f64>,
    ec_capability: Vec<Vec<f64>>,
    #[serde(default)]
    units: Units,
}

impl From<Scenario> for ScenarioData {
    fn from(s: Scenario) -> Self {
        ScenarioData {
            num_devices: s.num_devices,
            num_aps: s.num_aps,
            num_ecs: s.num_ecs,
            num_slices: s.num_slices,
            rate: s.rate,
            data_size: s.data_size,
            complexity: s.complexity,
            match_coeff: s.match_coeff,
            local_capability: s.local_capability,
            ec_capability: s.ec_capability,
            units: s.units,
        }
    }
}

impl TryFrom<ScenarioData> for Scenario {
    type Error = Error;

    fn try_from(d: ScenarioData) -> Result<Self> {
        Scenario::with_units(
            ScenarioBuilder {
                rate: d.rate,
                data_size: d.data_size,
                complexity: d.complexity,
                match_coeff: d.match_coeff,
                local_capability: d.local_capability,
                ec_capability: d.ec_capability,
            },
            d.units,
        )
    }
}

/// Field bundle for [`Scenario::new`]; dimensions are inferred from the data.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    pub rate: Vec<Vec<f64>>,
    pub data_size: Vec<f64>,
    pub complexity: Vec<f64>,
    pub match_coeff: Vec<Vec<f64>>,
    pub local_capability: Vec<f64>,
    pub ec_capability: Vec<Vec<f64>>,
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(Error::InvalidScenario(format!(
            "{name}: expected {rows} rows, got {}",
            m.len()
        )));
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidScenario(format!(
                "{name}: row {r} has {} columns, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(())
}

fn check_positive(name: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    for (k, v) in values.into_iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "{name}: entry {k} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn new(b: ScenarioBuilder) -> Result<Self> {
        Scenario::with_units(b, Units::default())
    }

    fn with_units(b: ScenarioBuilder, units: Units) -> Result<Self> {
        if units != Units::default() {
            return Err(Error::InvalidScenario(format!(
                "unsupported units header: {units:?}"
            )));
        }
        let num_devices = b.rate.len();
        if num_devices == 0 {
            return Err(Error::InvalidScenario("no devices".into()));
        }
        let num_aps = b.rate[0].len();
        if num_aps == 0 {
            return Err(Error::InvalidScenario("no access points".into()));
        }
        let num_ecs = b.ec_capability.len();
        if num_ecs == 0 {
            return Err(Error::InvalidScenario("no edge clouds".into()));
        }
        let num_slices = b.ec_capability[0].len();
        if num_slices == 0 {
            return Err(Error::InvalidScenario("no slices".into()));
        }

        check_matrix("rate", &b.rate, num_devices, num_aps)?;
        check_matrix("match_coeff", &b.match_coeff, num_devices, num_slices)?;
        check_matrix("ec_capability", &b.ec_capability, num_ecs, num_slices)?;
        for (name, v) in [
            ("data_size", &b.data_size),
            ("complexity", &b.complexity),
            ("local_capability", &b.local_capability),
        ] {
            if v.len() != num_devices {
                return Err(Error::InvalidScenario(format!(
                    "{name}: expected {num_devices} entries, got {}",
                    v.len()
                )));
            }
        }

        check_positive("rate", b.rate.iter().flatten().copied())?;
        check_positive("data_size", b.data_size.iter().copied())?;
        check_positive("complexity", b.complexity.iter().copied())?;
        check_positive("match_coeff", b.match_coeff.iter().flatten().copied())?;
        check_positive("local_capability", b.local_capability.iter().copied())?;
        for (c, row) in b.ec_capability.iter().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidScenario(format!(
                        "ec_capability[{c}][{s}] must be non-negative and finite, got {v}"
                    )));
                }
            }
        }
        for s in 0..num_slices {
            if !(0..num_ecs).any(|c| b.ec_capability[c][s] > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "slice {s} has no edge cloud with positive capability"
                )));
            }
        }

        let mut valid_pairs = Vec::new();
        for c in 0..num_ecs {
            for s in 0..num_slices {
                if b.ec_capability[c][s] > 0.0 {
                    valid_pairs.push((c, s));
                }
            }
        }

        Ok(Scenario {
            num_devices,
            num_aps,
            num_ecs,
            num_slices,
            rate: b.rate,
            data_size: b.data_size,
            complexity: b.complexity,
            match_coeff: b.match_coeff,
            local_capability: b.local_capability,
            ec_capability: b.ec_capability,
            units,
            valid_pairs,
        })
    }

    pub fn num_devices(&self) -> usize {
        self.num_devices
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn num_ecs(&self) -> usize {
        self.num_ecs
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn rate(&self, device: usize, ap: usize) -> f64 {
        self.rate[device][ap]
    }

    pub fn data_size(&self, device: usize) -> f64 {
        self.data_size[device]
    }

    pub fn complexity(&self, device: usize) -> f64 {
        self.complexity[device]
    }

    pub fn match_coeff(&self, device: usize, slice: usize) -> f64 {
        self.match_coeff[device][slice]
    }

    pub fn local_capability(&self, device: usize) -> f64 {
        self.local_capability[device]
    }

    pub fn ec_capability(&self, ec: usize, slice: usize) -> f64 {
        self.ec_capability[ec][slice]
    }

    /// (ec, slice) pairs with positive capability, lexicographically ordered.
    pub fn valid_ec_slice_pairs(&self) -> &[(usize, usize)] {
        &self.valid_pairs
    }

    pub fn is_valid_pair(&self, ec: usize, slice: usize) -> bool {
        self.ec_capability[ec][slice] > 0.0
    }

    /// Offload options available to every device, in canonical order:
    /// ascending access point, then ascending (ec, slice).
    pub fn offload_options(&self) -> impl Iterator<Item = Decision> + '_ {
        (0..self.num_aps).flat_map(move |a| {
            self.valid_pairs.iter().map(move |&(c, s)| Decision::Offload {
                ap: a,
                ec: c,
                slice: s,
            })
        })
    }

    pub fn check_device(&self, device: usize) -> Result<()> {
        if device >= self.num_devices {
            return Err(Error::IndexOutOfRange {
                what: "device",
                index: device,
                len: self.num_devices,
            });
        }
        Ok(())
    }

    /// Checks that a decision is well-formed for this scenario.
    pub fn check_decision(&self, decision: Decision) -> Result<()> {
        match decision {
            Decision::Local => Ok(()),
            Decision::Offload { ap, ec, slice } => {
                if ap >= self.num_aps {
                    return Err(Error::IndexOutOfRange {
                        what: "access point",
                        index: ap,
                        len: self.num_aps,
                    });
                }
                if ec >= self.num_ecs {
                    return Err(Error::IndexOutOfRange {
                        what: "edge cloud",
                        index: ec,
                        len: self.num_ecs,
                    });
                }
                if slice >= self.num_slices {
                    return Err(Error::IndexOutOfRange {
                        what: "slice",
                        index: slice,
                        len: self.num_slices,
                    });
                }
                if !self.is_valid_pair(ec, slice) {
                    return Err(Error::SliceAbsentEc { ec, slice });
                }
                Ok(())
            }
        }
    }

    pub fn check_decisions(&self, dv: &DecisionVector) -> Result<()> {
        if dv.len() != self.num_devices {
            return Err(Error::InvalidScenario(format!(
                "decision vector has {} entries for {} devices",
                dv.len(),
                self.num_devices
            )));
        }
        for d in dv.iter() {
            self.check_decision(d)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        // Serialization of a validated scenario cannot fail.
        serde_json::to_string_pretty(self).expect("scenario serialization")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Per-device choice: compute locally or offload through `ap` to `ec`
/// inside `slice`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decision {
    Local,
    Offload { ap: usize, ec: usize, slice: usize },
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Local => write!(f, "local"),
            Decision::Offload { ap, ec, slice } => write!(f, "{ap}/{ec}/{slice}"),
        }
    }
}

/// One decision per device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector(Vec<Decision>);

impl DecisionVector {
    pub fn new(decisions: Vec<Decision>) -> Self {
        DecisionVector(decisions)
    }

    pub fn all_local(num_devices: usize) -> Self {
        DecisionVector(vec![Decision::Local; num_devices])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, device: usize) -> Decision {
        self.0[device]
    }

    pub fn set(&mut self, device: usize, decision: Decision) {
        self.0[device] = decision;
    }

    pub fn iter(&self) -> impl Iterator<Item = Decision> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Decision] {
        &self.0
    }

    pub fn num_offloaders(&self) -> usize {
        self.0
            .iter()
            .filter(|d| matches!(d, Decision::Offload { .. }))
            .count()
    }
}

/// Congestion resource identifier.
///
/// `ApSlice` belongs to the cost model with fixed inter-slice sharing, `Ap`
/// to the model with jointly optimal sharing where access-point congestion
/// collapses across slices. The two kinds are never mixed in one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResourceId {
    ApSlice(usize, usize),
    Ap(usize),
    EcSlice(usize, usize),
    LocalWd(usize),
}

/// Edge resource selector for [`edge_constant`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Ap(usize),
    Ec(usize),
}

/// Per-resource membership lists induced by a decision vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    /// `ap_slice[a][s]`: devices offloading through access point `a` in slice `s`.
    pub ap_slice: Vec<Vec<Vec<usize>>>,
    /// `ec_slice[c][s]`: devices executing on edge cloud `c` in slice `s`.
    pub ec_slice: Vec<Vec<Vec<usize>>>,
    /// Devices computing locally.
    pub local: Vec<usize>,
}

impl Grouping {
    /// Devices using access point `a` in any slice, ascending.
    pub fn ap_members(&self, ap: usize) -> Vec<usize> {
        let mut members: Vec<usize> = self.ap_slice[ap].iter().flatten().copied().collect();
        members.sort_unstable();
        members
    }

    /// Devices using edge cloud `c` in any slice, ascending.
    pub fn ec_members(&self, ec: usize) -> Vec<usize> {
        let mut members: Vec<usize> = self.ec_slice[ec].iter().flatten().copied().collect();
        members.sort_unstable();
        members
    }
}

/// Completion time of device `i`'s task when computed locally (seconds).
pub fn local_time(scenario: &Scenario, device: usize) -> f64 {
    scenario.complexity(device) / scenario.local_capability(device)
}

/// Time constant of device `i` on an edge resource at unit share:
/// transmit time `D_i / R_{i,a}` for an access point, execute time
/// `(L_i / h_{i,s}) / F_c^s` for an edge cloud.
pub fn edge_constant(scenario: &Scenario, device: usize, edge: Edge, slice: usize) -> Result<f64> {
    scenario.check_device(device)?;
    match edge {
        Edge::Ap(a) => {
            if a >= scenario.num_aps() {
                return Err(Error::IndexOutOfRange {
                    what: "access point",
                    index: a,
                    len: scenario.num_aps(),
                });
            }
            Ok(scenario.data_size(device) / scenario.rate(device, a))
        }
        Edge::Ec(c) => {
            if c >= scenario.num_ecs() {
                return Err(Error::IndexOutOfRange {
                    what: "edge cloud",
                    index: c,
                    len: scenario.num_ecs(),
                });
            }
            if slice >= scenario.num_slices() {
                return Err(Error::IndexOutOfRange {
                    what: "slice",
                    index: slice,
                    len: scenario.num_slices(),
                });
            }
            if !scenario.is_valid_pair(c, slice) {
                return Err(Error::SliceAbsentEc { ec: c, slice });
            }
            let effective = scenario.complexity(device) / scenario.match_coeff(device, slice);
            Ok(effective / scenario.ec_capability(c, slice))
        }
    }
}

/// Square-root congestion weight of device `i` on resource `r`.
pub fn weight(scenario: &Scenario, device: usize, resource: ResourceId) -> Result<f64> {
    scenario.check_device(device)?;
    match resource {
        ResourceId::ApSlice(a, _) | ResourceId::Ap(a) => {
            if a >= scenario.num_aps() {
                return Err(Error::IndexOutOfRange {
                    what: "access point",
                    index: a,
                    len: scenario.num_aps(),
                });
            }
            Ok((scenario.data_size(device) / scenario.rate(device, a)).sqrt())
        }
        ResourceId::EcSlice(c, s) => {
            if !scenario.is_valid_pair(c, s) {
                return Err(Error::SliceAbsentEc { ec: c, slice: s });
            }
            Ok((scenario.complexity(device) / scenario.match_coeff(device, s)).sqrt())
        }
        ResourceId::LocalWd(j) => {
            if j != device {
                return Err(Error::IncompatibleResource(format!(
                    "device {device} cannot use the local resource of device {j}"
                )));
            }
            Ok(scenario.complexity(device).sqrt())
        }
    }
}

/// Cost multiplier of a resource. `ApSlice` resources need the inter-slice
/// coefficient matrix they are priced under; all other kinds are intrinsic.
pub fn multiplier(
    scenario: &Scenario,
    resource: ResourceId,
    inter: Option<&[Vec<f64>]>,
) -> Result<f64> {
    match resource {
        ResourceId::ApSlice(a, s) => {
            let inter = inter.ok_or_else(|| {
                Error::IncompatibleResource(
                    "per-slice access point resource priced without an inter-slice matrix".into(),
                )
            })?;
            let b = inter[a][s];
            if b <= 0.0 {
                return Err(Error::ZeroCoefficient(format!(
                    "inter-slice coefficient of access point {a}, slice {s}"
                )));
            }
            Ok(1.0 / b)
        }
        ResourceId::Ap(_) => Ok(1.0),
        ResourceId::EcSlice(c, s) => {
            if !scenario.is_valid_pair(c, s) {
                return Err(Error::SliceAbsentEc { ec: c, slice: s });
            }
            Ok(1.0 / scenario.ec_capability(c, s))
        }
        ResourceId::LocalWd(i) => {
            scenario.check_device(i)?;
            Ok(1.0 / scenario.local_capability(i))
        }
    }
}

/// Builds the per-resource membership lists for a decision vector.
pub fn group(scenario: &Scenario, dv: &DecisionVector) -> Result<Grouping> {
    scenario.check_decisions(dv)?;
    let mut ap_slice = vec![vec![Vec::new(); scenario.num_slices()]; scenario.num_aps()];
    let mut ec_slice = vec![vec![Vec::new(); scenario.num_slices()]; scenario.num_ecs()];
    let mut local = Vec::new();
    for (i, d) in dv.iter().enumerate() {
        match d {
            Decision::Local => local.push(i),
            Decision::Offload { ap, ec, slice } => {
                ap_slice[ap][slice].push(i);
                ec_slice[ec][slice].push(i);
            }
        }
    }
    Ok(Grouping {
        ap_slice,
        ec_slice,
        local,
    })
}

/// Total congestion weight `q_r` of a resource under a decision vector.
pub fn total_weight(
    scenario: &Scenario,
    grouping: &Grouping,
    resource: ResourceId,
) -> Result<f64> {
    let members: Vec<usize> = match resource {
        ResourceId::ApSlice(a, s) => grouping.ap_slice[a][s].clone(),
        ResourceId::Ap(a) => grouping.ap_members(a),
        ResourceId::EcSlice(c, s) => grouping.ec_slice[c][s].clone(),
        ResourceId::LocalWd(i) => {
            if grouping.local.contains(&i) {
                vec![i]
            } else {
                vec![]
            }
        }
    };
    let mut total = 0.0;
    for j in members {
        total += weight(scenario, j, resource)?;
    }
    Ok(total)
}
