//! Seeded random scenario generation: geometry, PHY rates, device and
//! edge-cloud capabilities, task parameters and the declarative slice
//! configurations.
//!
//! Every sampled field draws from its own RNG sub-stream derived from the
//! master seed by a fixed label, so changing one dimension (say the device
//! count) never perturbs unrelated fields generated under the same seed.

use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Scenario, ScenarioBuilder};

/// Boltzmann-noise floor in dBm per hertz of bandwidth.
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Gamma-distribution parameters (shape k, scale theta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

/// Parameters of the scenario generator. Units: meters, hertz, watts,
/// bits, instructions/second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n_devices: usize,
    pub n_slices: usize,
    pub area_side: f64,
    pub n_aps: usize,
    pub n_ecs: usize,
    pub grid_points: usize,
    pub path_loss_exponent: f64,
    pub ap_bandwidths: Vec<f64>,
    pub tx_power_range: [f64; 2],
    pub local_capability_range: [f64; 2],
    pub data_size_range: [f64; 2],
    pub complexity_gamma: GammaParams,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_devices: 20,
            n_slices: 2,
            area_side: 1000.0,
            n_aps: 5,
            n_ecs: 3,
            grid_points: 25,
            path_loss_exponent: 4.0,
            ap_bandwidths: vec![18e6, 18e6, 27e6, 27e6, 27e6],
            tx_power_range: [1e-6, 0.1],
            local_capability_range: [2e9, 45.4e9],
            data_size_range: [1.7e6, 10e6],
            complexity_gamma: GammaParams {
                shape: 75.0,
                scale: 50.0,
            },
            seed: 0,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_devices == 0 {
            return err("n_devices must be positive".into());
        }
        if !(1..=4).contains(&self.n_slices) {
            return err(format!("n_slices must be in 1..=4, got {}", self.n_slices));
        }
        if self.n_aps == 0 || self.n_aps > self.grid_points {
            return err(format!(
                "n_aps must be in 1..=grid_points ({}), got {}",
                self.grid_points, self.n_aps
            ));
        }
        if !(self.area_side > 0.0) {
            return err("area_side must be positive".into());
        }
        if !(self.path_loss_exponent > 0.0) {
            return err("path_loss_exponent must be positive".into());
        }
        if self.ap_bandwidths.is_empty() || self.ap_bandwidths.iter().any(|&b| !(b > 0.0)) {
            return err("ap_bandwidths must be a nonempty list of positive values".into());
        }
        for (name, range) in [
            ("tx_power_range", self.tx_power_range),
            ("local_capability_range", self.local_capability_range),
            ("data_size_range", self.data_size_range),
        ] {
            if !(range[0] > 0.0) || range[1] < range[0] {
                return err(format!("{name} must be a nonempty positive range"));
            }
        }
        if !(self.complexity_gamma.shape > 0.0) || !(self.complexity_gamma.scale > 0.0) {
            return err("complexity_gamma parameters must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let p: GeneratorParams = serde_json::from_str(json)?;
        p.validate()?;
        Ok(p)
    }
}

/// A homogeneous pool of processing hardware inside an edge cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareGroup {
    pub id: String,
    pub cores: u32,
    pub clock_hz: f64,
    pub instructions_per_cycle: f64,
}

impl HardwareGroup {
    pub fn capability(&self) -> f64 {
        self.cores as f64 * self.clock_hz * self.instructions_per_cycle
    }
}

/// Hardware inventory of one edge cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcHardware {
    pub groups: Vec<HardwareGroup>,
}

/// Default inventory: one mixed-CPU edge cloud and two single-GPU edge
/// clouds. Capabilities work out to 1285.2, 1140.7 and 1397.8 GIPS with the
/// conventional 3 instructions/cycle for CPUs and 1 for GPU cores.
pub fn default_ec_hardware() -> Vec<EcHardware> {
    let group = |id: &str, cores: u32, clock_hz: f64, ipc: f64| HardwareGroup {
        id: id.to_owned(),
        cores,
        clock_hz,
        instructions_per_cycle: ipc,
    };
    vec![
        EcHardware {
            groups: vec![
                group("cpu-small", 36, 2.3e9, 3.0),
                group("cpu-large", 96, 3.6e9, 3.0),
            ],
        },
        EcHardware {
            groups: vec![group("gpu-m", 2048, 0.557e9, 1.0)],
        },
        EcHardware {
            groups: vec![group("gpu-k", 2496, 0.560e9, 1.0)],
        },
    ]
}

/// Total capability per edge cloud: sum over hardware groups of
/// cores x clock x instructions-per-cycle.
pub fn ec_capabilities(hardware: &[EcHardware]) -> Vec<f64> {
    hardware
        .iter()
        .map(|ec| ec.groups.iter().map(HardwareGroup::capability).sum())
        .collect()
}

/// Declarative assignment of hardware groups to slices, one table per
/// supported slice count. Slice labels sort as s1 < s2 < ... and map to
/// slice indices in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMapping {
    pub version: String,
    pub configs: std::collections::BTreeMap<String, std::collections::BTreeMap<String, Vec<String>>>,
}

static DEFAULT_MAPPING: OnceLock<SliceMapping> = OnceLock::new();

/// The slice mapping shipped with the crate.
pub fn default_slice_mapping() -> &'static SliceMapping {
    DEFAULT_MAPPING.get_or_init(|| {
        serde_json::from_str(include_str!("../data/slice_mapping.json"))
            .expect("bundled slice mapping parses")
    })
}

/// Builds the `ec_capability` matrix (edge clouds x slices) for `n_slices`
/// slices: every hardware group contributes its capability to the slices
/// whose entry lists its id. Groups stay attached to their edge cloud.
pub fn slice_config(
    n_slices: usize,
    hardware: &[EcHardware],
    mapping: &SliceMapping,
) -> Result<Vec<Vec<f64>>> {
    let config = mapping.configs.get(&n_slices.to_string()).ok_or_else(|| {
        Error::InvalidConfig(format!("slice mapping has no table for S = {n_slices}"))
    })?;
    if config.len() != n_slices {
        return Err(Error::InvalidConfig(format!(
            "slice mapping table for S = {n_slices} defines {} slices",
            config.len()
        )));
    }
    let known: std::collections::BTreeSet<&str> = hardware
        .iter()
        .flat_map(|ec| ec.groups.iter().map(|g| g.id.as_str()))
        .collect();
    let mut matrix = vec![vec![0.0; n_slices]; hardware.len()];
    for (s, (label, group_ids)) in config.iter().enumerate() {
        if group_ids.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "slice {label} lists no hardware groups"
            )));
        }
        for id in group_ids {
            if !known.contains(id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "slice {label} references unknown hardware group {id}"
                )));
            }
            for (c, ec) in hardware.iter().enumerate() {
                for g in &ec.groups {
                    if &g.id == id {
                        matrix[c][s] += g.capability();
                    }
                }
            }
        }
    }
    for (s, label) in config.keys().enumerate() {
        if !(0..hardware.len()).any(|c| matrix[c][s] > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "slice {label} covers no edge cloud"
            )));
        }
    }
    Ok(matrix)
}

/// Thermal noise power in dBm for a channel of `bandwidth_hz`.
pub fn noise_dbm(bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10()
}

/// Thermal noise power in watts for a channel of `bandwidth_hz`.
pub fn noise_watts(bandwidth_hz: f64) -> f64 {
    10f64.powf((noise_dbm(bandwidth_hz) - 30.0) / 10.0)
}

/// Shannon rate of a link: `B log2(1 + d^-alpha P / noise)`.
pub fn link_rate(bandwidth_hz: f64, distance_m: f64, tx_power_w: f64, alpha: f64) -> f64 {
    let snr = distance_m.powf(-alpha) * tx_power_w / noise_watts(bandwidth_hz);
    bandwidth_hz * (1.0 + snr).log2()
}

fn substream(seed: u64, label: &str) -> ChaCha12Rng {
    // FNV-1a over the label, mixed with the master seed by splitmix64.
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut x = seed ^ h;
    let mut next = || {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&next().to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Generates a scenario from the given parameters. Deterministic: the same
/// parameters (including the seed) always produce the same scenario.
pub fn generate(params: &GeneratorParams) -> Result<Scenario> {
    params.validate()?;
    let hardware = default_ec_hardware();
    if params.n_ecs != hardware.len() {
        return Err(Error::InvalidConfig(format!(
            "n_ecs = {} but the hardware inventory defines {} edge clouds",
            params.n_ecs,
            hardware.len()
        )));
    }
    let ec_capability = slice_config(params.n_slices, &hardware, default_slice_mapping())?;

    let seed = params.seed;
    let n = params.n_devices;
    let side = params.area_side;

    // Access points on a regular grid: a random sample of grid nodes.
    let grid_dim = (params.grid_points as f64).sqrt().floor() as usize;
    let grid_dim = grid_dim.max(1);
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(grid_dim * grid_dim);
    for gx in 0..grid_dim {
        for gy in 0..grid_dim {
            nodes.push((
                (gx as f64 + 0.5) * side / grid_dim as f64,
                (gy as f64 + 0.5) * side / grid_dim as f64,
            ));
        }
    }
    if params.n_aps > nodes.len() {
        return Err(Error::InvalidConfig(format!(
            "n_aps = {} exceeds the {} usable grid nodes",
            params.n_aps,
            nodes.len()
        )));
    }
    let mut rng = substream(seed, "ap-positions");
    // Partial Fisher-Yates: the first n_aps entries end up a uniform sample.
    for k in 0..params.n_aps {
        let j = rng.gen_range(k..nodes.len());
        nodes.swap(k, j);
    }
    let ap_pos = &nodes[..params.n_aps];

    let mut rng = substream(seed, "device-positions");
    let mut device_pos = Vec::with_capacity(n);
    while device_pos.len() < n {
        let p = (rng.gen_range(0.0..side), rng.gen_range(0.0..side));
        // A device exactly on top of an access point has no defined path
        // loss; draw again.
        if ap_pos.iter().any(|&q| q == p) {
            continue;
        }
        device_pos.push(p);
    }

    let mut rng = substream(seed, "tx-power");
    let tx_power: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(params.tx_power_range[0]..=params.tx_power_range[1]))
        .collect();

    let mut rate = vec![vec![0.0; params.n_aps]; n];
    for (i, &(dx, dy)) in device_pos.iter().enumerate() {
        for (a, &(ax, ay)) in ap_pos.iter().enumerate() {
            let bw = params.ap_bandwidths[a % params.ap_bandwidths.len()];
            let dist = ((dx - ax).powi(2) + (dy - ay).powi(2)).sqrt();
            rate[i][a] = link_rate(bw, dist, tx_power[i], params.path_loss_exponent);
        }
    }

    let mut rng = substream(seed, "local-capability");
    let local_capability: Vec<f64> = (0..n)
        .map(|_| {
            rng.gen_range(params.local_capability_range[0]..=params.local_capability_range[1])
        })
        .collect();

    let mut rng = substream(seed, "data-size");
    let data_size: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(params.data_size_range[0]..=params.data_size_range[1]))
        .collect();

    // Task complexity: instructions per data bit, gamma distributed.
    let mut rng = substream(seed, "complexity");
    let gamma = Gamma::new(params.complexity_gamma.shape, params.complexity_gamma.scale)
        .map_err(|e| Error::InvalidConfig(format!("complexity_gamma: {e}")))?;
    let complexity: Vec<f64> = data_size
        .iter()
        .map(|&d| d * gamma.sample(&mut rng))
        .collect();

    // Match coefficients: 1/h uniform on (0, 1], resampled away from zero.
    let mut rng = substream(seed, "match");
    let mut match_coeff = vec![vec![0.0; params.n_slices]; n];
    for row in match_coeff.iter_mut() {
        for slot in row.iter_mut() {
            let mut inv = 0.0;
            while inv < 1e-6 {
                inv = rng.gen_range(0.0..=1.0);
            }
            *slot = 1.0 / inv;
        }
    }

    Scenario::new(ScenarioBuilder {
        rate,
        data_size,
        complexity,
        match_coeff,
        local_capability,
        ec_capability,
    })
}

/// Small synthetic instance with arbitrary dimensions, for oracles, property
/// tests and the verification battery. Fields are drawn from modest ranges
/// so that offloading and local computing both stay competitive; roughly a
/// fifth of the (edge cloud, slice) pairs are absent.
pub fn synthetic(
    n_devices: usize,
    n_aps: usize,
    n_ecs: usize,
    n_slices: usize,
    seed: u64,
) -> Scenario {
    assert!(n_devices > 0 && n_aps > 0 && n_ecs > 0 && n_slices > 0);
    let mut rng = substream(seed, "synthetic");
    let rate = (0..n_devices)
        .map(|_| (0..n_aps).map(|_| rng.gen_range(0.5..8.0)).collect())
        .collect();
    let data_size = (0..n_devices).map(|_| rng.gen_range(1.0..10.0)).collect();
    let complexity: Vec<f64> = (0..n_devices).map(|_| rng.gen_range(2.0..40.0)).collect();
    let match_coeff = (0..n_devices)
        .map(|_| (0..n_slices).map(|_| 1.0 / rng.gen_range(0.05..1.0)).collect())
        .collect();
    let local_capability = (0..n_devices).map(|_| rng.gen_range(1.0..12.0)).collect();
    let mut ec_capability: Vec<Vec<f64>> = (0..n_ecs)
        .map(|_| {
            (0..n_slices)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(2.0..30.0)
                    }
                })
                .collect()
        })
        .collect();
    for s in 0..n_slices {
        if !(0..n_ecs).any(|c| ec_capability[c][s] > 0.0) {
            let c = rng.gen_range(0..n_ecs);
            ec_capability[c][s] = rng.gen_range(2.0..30.0);
        }
    }
    Scenario::new(ScenarioBuilder {
        rate,
        data_size,
        complexity,
        match_coeff,
        local_capability,
        ec_capability,
    })
    .expect("synthetic scenario is valid by construction")
}
