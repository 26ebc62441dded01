use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::analog::{subarray_mask, AmplitudeStepping, Resolution};
use crate::array::{ArrayGeometry, Axis, Direction, Plane};
use crate::channel::{ChannelModel, ChannelSpec, DEFAULT_ANGLE_SPREAD, DEFAULT_PROPAGATION_VELOCITY};
use crate::device::{Architecture, Capability, Device};
use crate::network::Network;
use crate::path_loss::{PathLossModel, PathLossSpec};
use crate::receiver::ReceiveStrategy;
use crate::transmitter::TransmitStrategy;
use crate::units::PowerUnit;

fn default_velocity() -> f64 {
    DEFAULT_PROPAGATION_VELOCITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub global: GlobalConfig,
    pub channel: ChannelConfig,
    pub path_loss: PathLossConfig,
    pub devices: Vec<DeviceConfig>,
    pub pairs: Vec<PairConfig>,
    pub strategies: StrategyConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    pub carrier_frequency_hz: f64,
    #[serde(default = "default_velocity")]
    pub propagation_velocity_mps: f64,
    pub symbol_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub num_streams: usize,
    pub transmit_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Rayleigh,
    Los,
    Rician,
    RayCluster,
    SphericalWave,
}

/// Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionConfig {
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelKind,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub num_clusters: Option<usize>,
    #[serde(default)]
    pub num_rays: Option<usize>,
    #[serde(default)]
    pub angle_spread: Option<f64>,
    #[serde(default)]
    pub aod: Option<DirectionConfig>,
    #[serde(default)]
    pub aoa: Option<DirectionConfig>,
    #[serde(default)]
    pub force_normalization: bool,
    #[serde(default)]
    pub normalized_energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossKind {
    Fspl,
    FsplLns,
    TwoSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossConfig {
    pub model: PathLossKind,
    /// Defaults to 2.
    #[serde(default)]
    pub path_loss_exponent: Option<f64>,
    #[serde(default)]
    pub shadowing_variance_db2: Option<f64>,
    #[serde(default)]
    pub reference_distance_m: Option<f64>,
    #[serde(default)]
    pub reference_loss_db: Option<f64>,
    /// `[near, far]` exponents of the two-slope model.
    #[serde(default)]
    pub exponents: Option<[f64; 2]>,
    /// Overrides the device-to-device distance.
    #[serde(default)]
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    #[default]
    Digital,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ula,
    Upa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub kind: ArrayKind,
    /// `[n]` for a ULA, `[rows, cols]` for a UPA.
    pub dims: Vec<usize>,
    #[serde(default)]
    pub axis: Option<Axis>,
    #[serde(default)]
    pub plane: Option<Plane>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    #[default]
    Full,
    Subarray,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub rf_chains: usize,
    /// `null` means unbounded resolution.
    #[serde(default)]
    pub phase_bits: Option<u32>,
    #[serde(default)]
    pub amplitude_bits: Option<u32>,
    #[serde(default)]
    pub amplitude_stepping: AmplitudeStepping,
    #[serde(default)]
    pub log_dynamic_range_db: Option<f64>,
    #[serde(default)]
    pub mask: MaskKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub name: String,
    pub capability: Capability,
    #[serde(default)]
    pub architecture: ArchitectureKind,
    pub coordinate: [f64; 3],
    pub array: ArrayConfig,
    /// Replaces `array` at the transmit end.
    #[serde(default)]
    pub transmit_array: Option<ArrayConfig>,
    /// Replaces `array` at the receive end.
    #[serde(default)]
    pub receive_array: Option<ArrayConfig>,
    #[serde(default)]
    pub hybrid: Option<HybridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub source: String,
    pub destination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub transmitter: String,
    pub receiver: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    SnrDb,
    TransmitPowerDbm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

/// Parses and validates a JSON scenario. Errors carry the JSON path of the
/// offending field.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(value: f64, path: &str) -> Result<(), ScenarioError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::config(format!(
            "{path}: must be a finite positive number, got {value}"
        )))
    }
}

fn finite(value: f64, path: &str) -> Result<(), ScenarioError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::config(format!("{path}: must be finite, got {value}")))
    }
}

fn require<T: Copy>(value: Option<T>, path: &str) -> Result<T, ScenarioError> {
    value.ok_or_else(|| ScenarioError::config(format!("{path}: required by the selected model")))
}

fn direction(d: DirectionConfig, path: &str) -> Result<Direction, ScenarioError> {
    Direction::new(d.azimuth, d.elevation).map_err(|e| ScenarioError::config(format!("{path}: {e}")))
}

impl ArrayConfig {
    pub fn build(&self, path: &str) -> Result<ArrayGeometry, ScenarioError> {
        if self.dims.contains(&0) {
            return Err(ScenarioError::config(format!("{path}.dims: dimensions must be >= 1")));
        }
        match (self.kind, self.dims.as_slice()) {
            (ArrayKind::Ula, [n]) => Ok(ArrayGeometry::ula(*n, self.axis.unwrap_or(Axis::X))),
            (ArrayKind::Upa, [rows, cols]) => Ok(ArrayGeometry::upa(*rows, *cols, self.plane.unwrap_or(Plane::Xz))),
            (ArrayKind::Ula, _) => Err(ScenarioError::config(format!("{path}.dims: a ula takes [n]"))),
            (ArrayKind::Upa, _) => Err(ScenarioError::config(format!("{path}.dims: a upa takes [rows, cols]"))),
        }
    }
}

impl ChannelConfig {
    pub fn build(&self) -> Result<ChannelSpec, ScenarioError> {
        let model = match self.model {
            ChannelKind::Rayleigh => ChannelModel::Rayleigh,
            ChannelKind::Los => ChannelModel::Los {
                aod: direction(require(self.aod, "channel.aod")?, "channel.aod")?,
                aoa: direction(require(self.aoa, "channel.aoa")?, "channel.aoa")?,
            },
            ChannelKind::Rician => ChannelModel::Rician {
                kappa: require(self.kappa, "channel.kappa")?,
                aod: self.aod.map(|d| direction(d, "channel.aod")).transpose()?,
                aoa: self.aoa.map(|d| direction(d, "channel.aoa")).transpose()?,
            },
            ChannelKind::RayCluster => ChannelModel::RayCluster {
                num_clusters: require(self.num_clusters, "channel.num_clusters")?,
                num_rays: require(self.num_rays, "channel.num_rays")?,
                angle_spread: self.angle_spread.unwrap_or(DEFAULT_ANGLE_SPREAD),
            },
            ChannelKind::SphericalWave => ChannelModel::SphericalWave,
        };
        let mut spec = ChannelSpec::new(model);
        if self.force_normalization {
            spec = spec.with_forced_normalization(self.normalized_energy);
        } else if self.normalized_energy.is_some() {
            return Err(ScenarioError::config(
                "channel.normalized_energy: only meaningful with force_normalization",
            ));
        }
        spec.validate()
            .map_err(|e| ScenarioError::config(format!("channel: {e}")))?;
        Ok(spec)
    }
}

impl PathLossConfig {
    pub fn build(&self, global: &GlobalConfig) -> Result<PathLossSpec, ScenarioError> {
        let exponent = self.path_loss_exponent.unwrap_or(2.0);
        finite(exponent, "path_loss.path_loss_exponent")?;
        let model = match self.model {
            PathLossKind::Fspl => PathLossModel::FreeSpace { exponent },
            PathLossKind::FsplLns => {
                let var = require(self.shadowing_variance_db2, "path_loss.shadowing_variance_db2")?;
                if !(var >= 0.0 && var.is_finite()) {
                    return Err(ScenarioError::config(format!(
                        "path_loss.shadowing_variance_db2: must be >= 0, got {var}"
                    )));
                }
                PathLossModel::FreeSpaceShadowed {
                    exponent,
                    shadowing_variance: var,
                }
            }
            PathLossKind::TwoSlope => {
                let d0 = require(self.reference_distance_m, "path_loss.reference_distance_m")?;
                positive(d0, "path_loss.reference_distance_m")?;
                let l0 = require(self.reference_loss_db, "path_loss.reference_loss_db")?;
                finite(l0, "path_loss.reference_loss_db")?;
                let [near, far] = require(self.exponents, "path_loss.exponents")?;
                finite(near, "path_loss.exponents[0]")?;
                finite(far, "path_loss.exponents[1]")?;
                PathLossModel::two_slope_db(d0, l0, near, far)
            }
        };
        let mut spec = PathLossSpec::new(model).with_carrier(global.carrier_frequency_hz);
        spec.propagation_velocity = global.propagation_velocity_mps;
        if let Some(d) = self.distance_m {
            positive(d, "path_loss.distance_m")?;
            spec = spec.with_distance(d);
        }
        Ok(spec)
    }
}

impl HybridConfig {
    fn resolution(bits: Option<u32>) -> Resolution {
        bits.map_or(Resolution::Unbounded, Resolution::Bits)
    }
}

impl ScenarioConfig {
    /// Cross-field checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let g = &self.global;
        positive(g.carrier_frequency_hz, "global.carrier_frequency_hz")?;
        positive(g.propagation_velocity_mps, "global.propagation_velocity_mps")?;
        positive(g.symbol_bandwidth_hz, "global.symbol_bandwidth_hz")?;
        finite(g.noise_psd_dbm_hz, "global.noise_psd_dbm_hz")?;
        finite(g.transmit_power_dbm, "global.transmit_power_dbm")?;
        if g.num_streams == 0 {
            return Err(ScenarioError::config("global.num_streams: must be >= 1"));
        }
        self.channel.build()?;
        self.path_loss.build(g)?;

        if self.devices.is_empty() {
            return Err(ScenarioError::config("devices: at least one device is required"));
        }
        let mut names = HashSet::new();
        for (i, d) in self.devices.iter().enumerate() {
            let path = format!("devices[{i}]");
            if d.name.is_empty() {
                return Err(ScenarioError::config(format!("{path}.name: must not be empty")));
            }
            if !names.insert(d.name.as_str()) {
                return Err(ScenarioError::config(format!(
                    "{path}.name: duplicate device name {:?}",
                    d.name
                )));
            }
            for (k, c) in d.coordinate.iter().enumerate() {
                finite(*c, &format!("{path}.coordinate[{k}]"))?;
            }
            d.array.build(&format!("{path}.array"))?;
            if let Some(a) = &d.transmit_array {
                a.build(&format!("{path}.transmit_array"))?;
            }
            if let Some(a) = &d.receive_array {
                a.build(&format!("{path}.receive_array"))?;
            }
            match (d.architecture, &d.hybrid) {
                (ArchitectureKind::Hybrid, None) => {
                    return Err(ScenarioError::config(format!(
                        "{path}.hybrid: required for hybrid devices"
                    )))
                }
                (ArchitectureKind::Digital, Some(_)) => {
                    return Err(ScenarioError::config(format!(
                        "{path}.hybrid: only valid for hybrid devices"
                    )))
                }
                (ArchitectureKind::Hybrid, Some(h)) => {
                    if h.rf_chains == 0 {
                        return Err(ScenarioError::config(format!("{path}.hybrid.rf_chains: must be >= 1")));
                    }
                    if h.rf_chains < g.num_streams {
                        return Err(ScenarioError::config(format!(
                            "{path}.hybrid.rf_chains: {} RF chains cannot carry {} streams",
                            h.rf_chains, g.num_streams
                        )));
                    }
                    if let Some(r) = h.log_dynamic_range_db {
                        positive(r, &format!("{path}.hybrid.log_dynamic_range_db"))?;
                    }
                }
                (ArchitectureKind::Digital, None) => {}
            }
        }

        if self.pairs.is_empty() {
            return Err(ScenarioError::config(
                "pairs: at least one source/destination pair is required",
            ));
        }
        let by_name = |n: &str| self.devices.iter().find(|d| d.name == n);
        let mut seen = HashSet::new();
        for (i, p) in self.pairs.iter().enumerate() {
            let src = by_name(&p.source)
                .ok_or_else(|| ScenarioError::config(format!("pairs[{i}].source: unknown device {:?}", p.source)))?;
            let dst = by_name(&p.destination).ok_or_else(|| {
                ScenarioError::config(format!("pairs[{i}].destination: unknown device {:?}", p.destination))
            })?;
            if !src.capability.can_transmit() {
                return Err(ScenarioError::config(format!(
                    "pairs[{i}].source: {:?} cannot transmit",
                    p.source
                )));
            }
            if !dst.capability.can_receive() {
                return Err(ScenarioError::config(format!(
                    "pairs[{i}].destination: {:?} cannot receive",
                    p.destination
                )));
            }
            if p.source == p.destination {
                return Err(ScenarioError::config(format!(
                    "pairs[{i}]: source and destination coincide"
                )));
            }
            if !seen.insert((p.source.as_str(), p.destination.as_str())) {
                return Err(ScenarioError::config(format!("pairs[{i}]: duplicate pair")));
            }
        }

        self.strategies
            .transmitter
            .parse::<TransmitStrategy>()
            .map_err(|e| ScenarioError::config(format!("strategies.transmitter: {e}")))?;
        self.strategies
            .receiver
            .parse::<ReceiveStrategy>()
            .map_err(|e| ScenarioError::config(format!("strategies.receiver: {e}")))?;

        if let Some(s) = &self.run.sweep {
            if s.values.is_empty() {
                return Err(ScenarioError::config("run.sweep.values: must not be empty"));
            }
            for (i, v) in s.values.iter().enumerate() {
                finite(*v, &format!("run.sweep.values[{i}]"))?;
            }
        }
        Ok(())
    }
}

fn build_device(cfg: &DeviceConfig, path: &str) -> crate::Result<Device> {
    let array = cfg.array.build(&format!("{path}.array")).expect("validated");
    let architecture = match &cfg.hybrid {
        Some(h) => Architecture::Hybrid { rf_chains: h.rf_chains },
        None => Architecture::Digital,
    };
    let mut device = Device::new(cfg.name.clone(), cfg.capability, architecture, array.clone())?;
    device.set_coordinate(cfg.coordinate)?;
    let tx_array = match &cfg.transmit_array {
        Some(a) => a.build(path).expect("validated"),
        None => array.clone(),
    };
    let rx_array = match &cfg.receive_array {
        Some(a) => a.build(path).expect("validated"),
        None => array,
    };
    device.set_arrays(tx_array, rx_array)?;
    if let Some(h) = &cfg.hybrid {
        let phase = HybridConfig::resolution(h.phase_bits);
        let amplitude = HybridConfig::resolution(h.amplitude_bits);
        if let Ok(tx) = device.transmitter_mut() {
            if h.mask == MaskKind::Subarray {
                tx.set_connections(subarray_mask(tx.num_antennas(), h.rf_chains))?;
            }
            if let Some(r) = h.log_dynamic_range_db {
                tx.set_log_dynamic_range_db(r)?;
            }
            tx.set_analog_resolution(phase, amplitude, h.amplitude_stepping)?;
        }
        if let Ok(rx) = device.receiver_mut() {
            if h.mask == MaskKind::Subarray {
                rx.set_connections(subarray_mask(rx.num_antennas(), h.rf_chains))?;
            }
            if let Some(r) = h.log_dynamic_range_db {
                rx.set_log_dynamic_range_db(r)?;
            }
            rx.set_analog_resolution(phase, amplitude, h.amplitude_stepping)?;
        }
    }
    Ok(device)
}

/// Baseline network of a validated scenario, links populated but not realized.
pub fn build_network(cfg: &ScenarioConfig) -> Result<Network, ScenarioError> {
    let wrap = |e| ScenarioError::runtime("building network", e);
    let mut net = Network::new();
    for (i, d) in cfg.devices.iter().enumerate() {
        net.add_device(build_device(d, &format!("devices[{i}]")).map_err(wrap)?)
            .map_err(wrap)?;
    }
    for p in &cfg.pairs {
        net.add_source_destination(&p.source, &p.destination).map_err(wrap)?;
    }
    net.populate_links().map_err(wrap)?;
    let g = &cfg.global;
    net.set_carrier_frequency(g.carrier_frequency_hz).map_err(wrap)?;
    net.set_propagation_velocity(g.propagation_velocity_mps).map_err(wrap)?;
    net.set_symbol_bandwidth(g.symbol_bandwidth_hz).map_err(wrap)?;
    net.set_num_streams(g.num_streams).map_err(wrap)?;
    net.set_transmit_power(g.transmit_power_dbm, PowerUnit::DBm)
        .map_err(wrap)?;
    net.set_noise_psd_dbm_hz(g.noise_psd_dbm_hz).map_err(wrap)?;
    net.set_channel(&cfg.channel.build()?).map_err(wrap)?;
    net.set_path_loss(&cfg.path_loss.build(g)?).map_err(wrap)?;
    Ok(net)
}
