//! Devices sharing radio resources: source/destination pairs, the full link
//! matrix between sources and destinations, and interference-aware metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::array::Point3;
use crate::channel::ChannelSpec;
use crate::csi::ChannelStateInformation;
use crate::device::{Capability, Device};
use crate::linalg::log2_det_identity_plus;
use crate::link::{post_combining_covariance, symbol_estimation_error, LinkDirection, LinkPath};
use crate::path_loss::PathLossSpec;
use crate::rng::substream;
use crate::units::{PowerUnit, RatioUnit};
use crate::{CMat, CVec, Error, Result, C64};

type DeviceId = usize;

/// One row of [`Network::show_network`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceRecord {
    pub name: String,
    pub coordinate: Point3,
    /// `tx`, `rx` or `trx`.
    pub marker: &'static str,
}

/// Parameters broadcast to devices and links, remembered for later additions.
#[derive(Debug, Clone, Default, PartialEq)]
struct Defaults {
    carrier_frequency: Option<f64>,
    propagation_velocity: Option<f64>,
    symbol_bandwidth: Option<f64>,
    num_streams: Option<usize>,
    transmit_power_watts: Option<f64>,
    noise_psd_dbm_hz: Option<f64>,
    channel: Option<ChannelSpec>,
    path_loss: Option<PathLossSpec>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    devices: BTreeMap<DeviceId, Device>,
    next_id: DeviceId,
    pairs: Vec<(DeviceId, DeviceId)>,
    links: BTreeMap<(DeviceId, DeviceId), LinkPath>,
    defaults: Defaults,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    fn id(&self, name: &str) -> Result<DeviceId> {
        self.devices
            .iter()
            .find(|(_, d)| d.name() == name)
            .map(|(&id, _)| id)
            .ok_or_else(|| Error::UnknownDevice(name.to_string()))
    }

    fn dev(&self, id: DeviceId) -> &Device {
        &self.devices[&id]
    }

    fn apply_device_defaults(&self, d: &mut Device) -> Result<()> {
        let df = &self.defaults;
        if let Some(ns) = df.num_streams {
            d.set_num_streams(ns)?;
        }
        if let Some(b) = df.symbol_bandwidth {
            d.set_symbol_bandwidth(b)?;
        }
        if let Some(p) = df.transmit_power_watts {
            d.set_transmit_power(p, PowerUnit::Watts)?;
        }
        if let Some(n) = df.noise_psd_dbm_hz {
            d.set_noise_psd_dbm_hz(n)?;
        }
        Ok(())
    }

    fn apply_link_defaults(&self, l: &mut LinkPath) -> Result<()> {
        let df = &self.defaults;
        if let Some(f) = df.carrier_frequency {
            l.set_carrier_frequency(f)?;
        }
        if let Some(v) = df.propagation_velocity {
            l.set_propagation_velocity(v)?;
        }
        if let Some(c) = &df.channel {
            l.set_channel(c)?;
        }
        if let Some(p) = &df.path_loss {
            l.set_path_loss(p);
        }
        Ok(())
    }

    /// Adds a device; names are unique. Network-wide settings made earlier apply to it.
    pub fn add_device(&mut self, mut device: Device) -> Result<()> {
        if self.id(device.name()).is_ok() {
            return Err(Error::DuplicateDevice(device.name().to_string()));
        }
        self.apply_device_defaults(&mut device)?;
        self.devices.insert(self.next_id, device);
        self.next_id += 1;
        Ok(())
    }

    /// Removes a device with its pairs and links.
    pub fn remove_device(&mut self, name: &str) -> Result<Device> {
        let id = self.id(name)?;
        self.pairs.retain(|&(s, d)| s != id && d != id);
        self.links.retain(|&(s, d), _| s != id && d != id);
        Ok(self.devices.remove(&id).expect("id resolved above"))
    }

    pub fn device(&self, name: &str) -> Result<&Device> {
        Ok(self.dev(self.id(name)?))
    }

    pub fn device_mut(&mut self, name: &str) -> Result<&mut Device> {
        let id = self.id(name)?;
        Ok(self.devices.get_mut(&id).expect("id resolved above"))
    }

    pub fn devices(&self) -> impl Iterator<Item = &Device> {
        self.devices.values()
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    /// Registers a pair of already-added devices.
    pub fn add_source_destination(&mut self, source: &str, destination: &str) -> Result<()> {
        let s = self.id(source)?;
        let d = self.id(destination)?;
        if s == d {
            return Err(Error::invalid(
                "pair",
                format!("{source} cannot be its own destination"),
            ));
        }
        if !self.dev(s).capability().can_transmit() {
            return Err(Error::Capability(format!("source {source} cannot transmit")));
        }
        if !self.dev(d).capability().can_receive() {
            return Err(Error::Capability(format!("destination {destination} cannot receive")));
        }
        if self.pairs.contains(&(s, d)) {
            return Err(Error::DuplicatePair(source.to_string(), destination.to_string()));
        }
        self.pairs.push((s, d));
        Ok(())
    }

    /// Adds whichever of the two devices is not yet present, then the pair.
    pub fn add_source_destination_devices(&mut self, source: Device, destination: Device) -> Result<()> {
        let (sn, dn) = (source.name().to_string(), destination.name().to_string());
        for d in [source, destination] {
            if self.id(d.name()).is_err() {
                self.add_device(d)?;
            }
        }
        self.add_source_destination(&sn, &dn)
    }

    /// Drops the pair only; devices and links stay.
    pub fn remove_source_destination(&mut self, source: &str, destination: &str) -> Result<()> {
        let key = (self.id(source)?, self.id(destination)?);
        let before = self.pairs.len();
        self.pairs.retain(|&p| p != key);
        if self.pairs.len() == before {
            return Err(Error::NoSuchLink(source.to_string(), destination.to_string()));
        }
        Ok(())
    }

    pub fn remove_all_source_destination(&mut self) {
        self.pairs.clear();
    }

    pub fn pairs(&self) -> Vec<(&str, &str)> {
        self.pairs
            .iter()
            .map(|&(s, d)| (self.dev(s).name(), self.dev(d).name()))
            .collect()
    }

    fn sources(&self) -> BTreeSet<DeviceId> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    fn destinations(&self) -> BTreeSet<DeviceId> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Creates a link from every source to every destination (self-links excluded).
    pub fn populate_links(&mut self) -> Result<()> {
        for s in self.sources() {
            for d in self.destinations() {
                if s == d || self.links.contains_key(&(s, d)) {
                    continue;
                }
                let mut path = LinkPath::new(self.dev(s), self.dev(d))?;
                self.apply_link_defaults(&mut path)?;
                self.links.insert((s, d), path);
            }
        }
        Ok(())
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, source: &str, destination: &str) -> Result<&LinkPath> {
        self.links
            .get(&(self.id(source)?, self.id(destination)?))
            .ok_or_else(|| Error::NoSuchLink(source.to_string(), destination.to_string()))
    }

    pub fn link_mut(&mut self, source: &str, destination: &str) -> Result<&mut LinkPath> {
        let key = (self.id(source)?, self.id(destination)?);
        self.links
            .get_mut(&key)
            .ok_or_else(|| Error::NoSuchLink(source.to_string(), destination.to_string()))
    }

    /// `(source, destination)` names of every link.
    pub fn link_keys(&self) -> Vec<(String, String)> {
        self.links
            .keys()
            .map(|&(s, d)| (self.dev(s).name().to_string(), self.dev(d).name().to_string()))
            .collect()
    }

    fn for_each_device(&mut self, f: impl FnMut(&mut Device) -> Result<()>) -> Result<()> {
        self.devices.values_mut().try_for_each(f)
    }

    fn for_each_link(&mut self, f: impl FnMut(&mut LinkPath) -> Result<()>) -> Result<()> {
        self.links.values_mut().try_for_each(f)
    }

    pub fn set_carrier_frequency(&mut self, hz: f64) -> Result<()> {
        self.for_each_link(|l| l.set_carrier_frequency(hz))?;
        self.defaults.carrier_frequency = Some(hz);
        Ok(())
    }

    pub fn set_propagation_velocity(&mut self, v: f64) -> Result<()> {
        self.for_each_link(|l| l.set_propagation_velocity(v))?;
        self.defaults.propagation_velocity = Some(v);
        Ok(())
    }

    pub fn set_symbol_bandwidth(&mut self, hz: f64) -> Result<()> {
        self.for_each_device(|d| d.set_symbol_bandwidth(hz))?;
        self.defaults.symbol_bandwidth = Some(hz);
        Ok(())
    }

    pub fn set_num_streams(&mut self, ns: usize) -> Result<()> {
        self.for_each_device(|d| d.set_num_streams(ns))?;
        self.defaults.num_streams = Some(ns);
        Ok(())
    }

    pub fn set_transmit_power(&mut self, value: f64, unit: PowerUnit) -> Result<()> {
        self.for_each_device(|d| d.set_transmit_power(value, unit))?;
        self.defaults.transmit_power_watts = Some(unit.to_watts(value));
        Ok(())
    }

    pub fn set_noise_psd_dbm_hz(&mut self, dbm_per_hz: f64) -> Result<()> {
        self.for_each_device(|d| d.set_noise_psd_dbm_hz(dbm_per_hz))?;
        self.defaults.noise_psd_dbm_hz = Some(dbm_per_hz);
        Ok(())
    }

    /// Copies `spec` into every link direction, now and for links populated later.
    pub fn set_channel(&mut self, spec: &ChannelSpec) -> Result<()> {
        self.for_each_link(|l| l.set_channel(spec))?;
        self.defaults.channel = Some(spec.clone());
        Ok(())
    }

    pub fn set_path_loss(&mut self, spec: &PathLossSpec) -> Result<()> {
        self.for_each_link(|l| {
            l.set_path_loss(spec);
            Ok(())
        })?;
        self.defaults.path_loss = Some(spec.clone());
        Ok(())
    }

    pub fn turn_off(&mut self, name: &str) -> Result<()> {
        self.device_mut(name)?.turn_off();
        Ok(())
    }

    pub fn turn_on(&mut self, name: &str) -> Result<()> {
        self.device_mut(name)?.turn_on();
        Ok(())
    }

    /// Realizes every link from its own substream of `seed`, keyed by the
    /// device names, and discards stored received signals.
    pub fn realize(&mut self, seed: u64) -> Result<()> {
        let devices = &self.devices;
        for (&(s, d), path) in self.links.iter_mut() {
            let (head, tail) = (&devices[&s], &devices[&d]);
            let mut rng = substream(seed, &format!("link:{}->{}", head.name(), tail.name()));
            path.realize(head, tail, &mut rng)?;
        }
        for d in self.devices.values_mut() {
            if let Ok(rx) = d.receiver_mut() {
                rx.clear_signals();
            }
        }
        Ok(())
    }

    /// Forces the large-scale SNR of the `source -> destination` link.
    pub fn set_snr(&mut self, source: &str, destination: &str, snr: f64, unit: RatioUnit) -> Result<()> {
        let key = (self.id(source)?, self.id(destination)?);
        let path = self
            .links
            .get_mut(&key)
            .ok_or_else(|| Error::NoSuchLink(source.to_string(), destination.to_string()))?;
        path.set_snr(snr, None, unit, &self.devices[&key.0], &self.devices[&key.1])
    }

    fn path(&self, s: DeviceId, d: DeviceId) -> Result<&LinkPath> {
        self.links
            .get(&(s, d))
            .ok_or_else(|| Error::NoSuchLink(self.dev(s).name().to_string(), self.dev(d).name().to_string()))
    }

    /// CSI at `d` for the pair `(s, d)`: desired path first, then every other source.
    fn pair_csi(&self, s: DeviceId, d: DeviceId) -> Result<ChannelStateInformation> {
        let (src, dst) = (self.dev(s), self.dev(d));
        let desired = self.path(s, d)?.csi_entry(LinkDirection::Forward, src, dst)?;
        let mut interferers = Vec::new();
        for k in self.sources() {
            if k == s || k == d {
                continue;
            }
            if let Some(path) = self.links.get(&(k, d)) {
                interferers.push(path.csi_entry(LinkDirection::Forward, self.dev(k), dst)?);
            }
        }
        Ok(ChannelStateInformation {
            desired,
            interferers,
            noise_variance: dst.require_receiver()?.noise_psd(),
        })
    }

    /// Hands each destination its pair's CSI and each source the CSI of its
    /// first destination.
    pub fn distribute_csi(&mut self) -> Result<()> {
        let mut updates = Vec::new();
        let mut sources_done = BTreeSet::new();
        for &(s, d) in &self.pairs {
            let csi = self.pair_csi(s, d)?;
            if sources_done.insert(s) {
                updates.push((s, true, csi.clone()));
            }
            updates.push((d, false, csi));
        }
        for (id, at_source, csi) in updates {
            let dev = self.devices.get_mut(&id).expect("pair ids are live");
            if at_source {
                dev.transmitter_mut()?.set_csi(csi)?;
            } else {
                dev.receiver_mut()?.set_csi(csi)?;
            }
        }
        Ok(())
    }

    pub fn configure_transmitters(&mut self, strategy: &str) -> Result<()> {
        for s in self.sources() {
            self.devices
                .get_mut(&s)
                .expect("pair ids are live")
                .transmitter_mut()?
                .configure(strategy)?;
        }
        Ok(())
    }

    pub fn configure_receivers(&mut self, strategy: &str) -> Result<()> {
        for d in self.destinations() {
            self.devices
                .get_mut(&d)
                .expect("pair ids are live")
                .receiver_mut()?
                .configure(strategy)?;
        }
        Ok(())
    }

    /// Supplies CSI, configures transmitters, refreshes CSI with the new
    /// precoders, then configures receivers.
    pub fn configure_all(&mut self, tx_strategy: &str, rx_strategy: &str) -> Result<()> {
        tx_strategy.parse::<crate::transmitter::TransmitStrategy>()?;
        rx_strategy.parse::<crate::receiver::ReceiveStrategy>()?;
        self.distribute_csi()?;
        self.configure_transmitters(tx_strategy)?;
        self.distribute_csi()?;
        self.configure_receivers(rx_strategy)
    }

    /// Draws `s ~ CN(0, Rs)` at every source from a per-device substream.
    pub fn draw_symbols(&mut self, seed: u64) -> Result<()> {
        for s in self.sources() {
            let dev = self.devices.get_mut(&s).expect("pair ids are live");
            let mut rng = substream(seed, &format!("symbol:{}", dev.name()));
            dev.transmitter_mut()?.draw_symbol(&mut rng);
        }
        Ok(())
    }

    /// Noiseless superposition `sum_k G_k H_k x_k` at a destination.
    fn superposition(&self, d: DeviceId, only: Option<DeviceId>) -> Result<CVec> {
        let dst = self.dev(d);
        let mut y = CVec::zeros(dst.require_receiver()?.num_antennas());
        for k in self.sources() {
            if only.is_some_and(|o| o != k) {
                continue;
            }
            if let Some(path) = self.links.get(&(k, d)) {
                y += path.received_signal(LinkDirection::Forward, self.dev(k), dst)?;
            }
        }
        Ok(y)
    }

    /// Received signal at `destination` from `source` alone, without noise.
    pub fn received_from(&self, source: &str, destination: &str) -> Result<CVec> {
        let (s, d) = (self.id(source)?, self.id(destination)?);
        self.path(s, d)?;
        self.superposition(d, Some(s))
    }

    /// Stores at every destination the superposition of all sources plus one
    /// noise draw from a per-device substream.
    pub fn compute_received_signals(&mut self, seed: u64) -> Result<()> {
        let mut ys = Vec::new();
        for d in self.destinations() {
            ys.push((d, self.superposition(d, None)?));
        }
        for (d, y) in ys {
            let dev = self.devices.get_mut(&d).expect("pair ids are live");
            let mut rng = substream(seed, &format!("noise:{}", dev.name()));
            let rx = dev.receiver_mut()?;
            rx.set_received_signal(y)?;
            rx.draw_noise(&mut rng)?;
        }
        Ok(())
    }

    /// `(R_y, R_z)` after combining at `destination`: the desired covariance
    /// and noise plus interference from every other transmitting source.
    pub fn covariances(&self, source: &str, destination: &str) -> Result<(CMat, CMat)> {
        let (s, d) = (self.id(source)?, self.id(destination)?);
        let (src, dst) = (self.dev(s), self.dev(d));
        let rx = dst.require_receiver()?;
        let w = rx.combiner();
        let desired = self.path(s, d)?.csi_entry(LinkDirection::Forward, src, dst)?;
        if w.nrows() != desired.channel.nrows() || w.ncols() != desired.precoder.ncols() {
            return Err(Error::shape(
                "combiner",
                format!("({}, {})", desired.channel.nrows(), desired.precoder.ncols()),
                format!("{:?}", w.shape()),
            ));
        }
        let r_y = post_combining_covariance(&w, &desired);
        let mut r_z = (w.adjoint() * &w) * C64::new(rx.noise_psd(), 0.0);
        for k in self.sources() {
            if k == s || k == d {
                continue;
            }
            if let Some(path) = self.links.get(&(k, d)) {
                let entry = path.csi_entry(LinkDirection::Forward, self.dev(k), dst)?;
                r_z += post_combining_covariance(&w, &entry);
            }
        }
        Ok((r_y, r_z))
    }

    /// `log2 det(I + R_z^-1 R_y)` with interference in `R_z`.
    pub fn report_mutual_information(&self, source: &str, destination: &str) -> Result<f64> {
        let (r_y, r_z) = self.covariances(source, destination)?;
        log2_det_identity_plus(&r_z, &r_y)
    }

    /// `(||s_hat - s||^2, ||s_hat - s||^2 / ||s||^2)` for the pair.
    pub fn report_symbol_estimation_error(&self, source: &str, destination: &str) -> Result<(f64, f64)> {
        let (s, d) = (self.id(source)?, self.id(destination)?);
        self.path(s, d)?;
        let sym = self
            .dev(s)
            .require_transmitter()?
            .symbol()
            .ok_or_else(|| Error::MissingState(format!("{source} has no transmit symbol")))?;
        let s_hat = self.dev(d).require_receiver()?.combine()?;
        symbol_estimation_error(sym, &s_hat)
    }

    /// Device names, coordinates and markers in insertion order.
    pub fn show_network(&self) -> Vec<DeviceRecord> {
        self.devices
            .values()
            .map(|d| DeviceRecord {
                name: d.name().to_string(),
                coordinate: d.coordinate(),
                marker: match d.capability() {
                    Capability::Transmitter => "tx",
                    Capability::Receiver => "rx",
                    Capability::Transceiver => "trx",
                },
            })
            .collect()
    }
}
