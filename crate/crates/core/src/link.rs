//! Head/tail links: forward and reverse channels with path loss, SNR
//! control, received signals, link budgets, CSI and link-level metrics.
//!
//! [`LinkPath`] holds the propagation state of one device pair and borrows
//! the devices on every call, which lets a network keep devices in one place.
//! [`Link`] bundles a path with owned head and tail devices for standalone use.

use rand::Rng;
use serde::Serialize;

use crate::channel::{self, ChannelSpec, PropagationContext, DEFAULT_PROPAGATION_VELOCITY};
use crate::csi::{ChannelStateInformation, CsiEntry};
use crate::device::Device;
use crate::linalg::log2_det_identity_plus;
use crate::path_loss::{self, PathLossSpec};
use crate::units::{linear_to_db, watts_to_dbm, RatioUnit};
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkDirection {
    /// Head to tail.
    Forward,
    /// Tail to head.
    Reverse,
}

/// Log-scale link budget of one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub transmit_power_dbm: f64,
    pub path_loss_db: f64,
    pub received_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Side {
    channel: Option<ChannelSpec>,
    path_loss: Option<PathLossSpec>,
    matrix: Option<CMat>,
    gain: Option<f64>,
}

/// `(source, destination)` of a direction.
pub fn endpoints<'a>(direction: LinkDirection, head: &'a Device, tail: &'a Device) -> (&'a Device, &'a Device) {
    match direction {
        LinkDirection::Forward => (head, tail),
        LinkDirection::Reverse => (tail, head),
    }
}

/// `W^H A Rs A^H W` for a CSI entry.
pub fn post_combining_covariance(w: &CMat, entry: &CsiEntry) -> CMat {
    let b = w.adjoint() * entry.precoded_channel();
    &b * &entry.symbol_covariance * b.adjoint()
}

/// `(||s_hat - s||^2, ||s_hat - s||^2 / ||s||^2)`.
pub fn symbol_estimation_error(s: &CVec, s_hat: &CVec) -> Result<(f64, f64)> {
    if s.len() != s_hat.len() {
        return Err(Error::shape("estimated symbol", s.len(), s_hat.len()));
    }
    let energy = s.norm_squared();
    if energy == 0.0 {
        return Err(Error::invalid(
            "transmit_symbol",
            "zero symbol leaves the normalized error undefined",
        ));
    }
    let abs = (s_hat - s).norm_squared();
    Ok((abs, abs / energy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPath {
    forward: Side,
    reverse: Option<Side>,
    channel_symmetric: bool,
    path_loss_symmetric: bool,
    carrier_frequency: f64,
    propagation_velocity: f64,
}

impl LinkPath {
    /// Forward side always; reverse side only if the tail transmits and the head receives.
    pub fn new(head: &Device, tail: &Device) -> Result<Self> {
        if !head.capability().can_transmit() {
            return Err(Error::Capability(format!("link head {} cannot transmit", head.name())));
        }
        if !tail.capability().can_receive() {
            return Err(Error::Capability(format!("link tail {} cannot receive", tail.name())));
        }
        let reverse = (tail.capability().can_transmit() && head.capability().can_receive()).then(Side::default);
        Ok(LinkPath {
            forward: Side::default(),
            reverse,
            channel_symmetric: false,
            path_loss_symmetric: false,
            carrier_frequency: f64::NAN,
            propagation_velocity: DEFAULT_PROPAGATION_VELOCITY,
        })
    }

    pub fn has_reverse(&self) -> bool {
        self.reverse.is_some()
    }

    fn side(&self, direction: LinkDirection) -> Result<&Side> {
        match direction {
            LinkDirection::Forward => Ok(&self.forward),
            LinkDirection::Reverse => self
                .reverse
                .as_ref()
                .ok_or_else(|| Error::Capability("link has no reverse direction".into())),
        }
    }

    fn side_mut(&mut self, direction: LinkDirection) -> Result<&mut Side> {
        match direction {
            LinkDirection::Forward => Ok(&mut self.forward),
            LinkDirection::Reverse => self
                .reverse
                .as_mut()
                .ok_or_else(|| Error::Capability("link has no reverse direction".into())),
        }
    }

    fn sides_mut(&mut self) -> impl Iterator<Item = &mut Side> {
        std::iter::once(&mut self.forward).chain(self.reverse.as_mut())
    }

    /// Copies `spec` into every direction.
    pub fn set_channel(&mut self, spec: &ChannelSpec) -> Result<()> {
        spec.validate()?;
        for side in self.sides_mut() {
            side.channel = Some(spec.clone());
        }
        Ok(())
    }

    pub fn set_channel_direction(&mut self, direction: LinkDirection, spec: ChannelSpec) -> Result<()> {
        spec.validate()?;
        self.side_mut(direction)?.channel = Some(spec);
        Ok(())
    }

    /// Copies `spec` into every direction.
    pub fn set_path_loss(&mut self, spec: &PathLossSpec) {
        for side in self.sides_mut() {
            side.path_loss = Some(spec.clone());
        }
    }

    pub fn set_path_loss_direction(&mut self, direction: LinkDirection, spec: PathLossSpec) -> Result<()> {
        self.side_mut(direction)?.path_loss = Some(spec);
        Ok(())
    }

    pub fn channel_spec(&self, direction: LinkDirection) -> Option<&ChannelSpec> {
        self.side(direction).ok()?.channel.as_ref()
    }

    pub fn path_loss_spec(&self, direction: LinkDirection) -> Option<&PathLossSpec> {
        self.side(direction).ok()?.path_loss.as_ref()
    }

    pub fn set_channel_symmetric(&mut self, symmetric: bool) {
        self.channel_symmetric = symmetric;
    }

    pub fn set_path_loss_symmetric(&mut self, symmetric: bool) {
        self.path_loss_symmetric = symmetric;
    }

    pub fn channel_symmetric(&self) -> bool {
        self.channel_symmetric
    }

    pub fn path_loss_symmetric(&self) -> bool {
        self.path_loss_symmetric
    }

    pub fn set_carrier_frequency(&mut self, hz: f64) -> Result<()> {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(Error::invalid("carrier_frequency", format!("must be > 0, got {hz}")));
        }
        self.carrier_frequency = hz;
        Ok(())
    }

    pub fn set_propagation_velocity(&mut self, v: f64) -> Result<()> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("propagation_velocity", format!("must be > 0, got {v}")));
        }
        self.propagation_velocity = v;
        Ok(())
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn channel_matrix(&self, direction: LinkDirection) -> Option<&CMat> {
        self.side(direction).ok()?.matrix.as_ref()
    }

    pub fn gain(&self, direction: LinkDirection) -> Option<f64> {
        self.side(direction).ok()?.gain
    }

    pub fn is_realized(&self) -> bool {
        self.forward.matrix.is_some() && self.forward.gain.is_some()
    }

    /// Overrides the large-scale amplitude gain of one direction.
    pub fn set_gain(&mut self, direction: LinkDirection, gain: f64) -> Result<()> {
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(Error::invalid(
                "large_scale_gain",
                format!("must be finite and >= 0, got {gain}"),
            ));
        }
        self.side_mut(direction)?.gain = Some(gain);
        Ok(())
    }

    /// Injects a channel matrix for one direction, e.g. a recorded realization.
    pub fn set_channel_matrix(
        &mut self,
        direction: LinkDirection,
        h: CMat,
        head: &Device,
        tail: &Device,
    ) -> Result<()> {
        let (src, dst) = endpoints(direction, head, tail);
        let expected = (
            dst.require_receiver()?.num_antennas(),
            src.require_transmitter()?.num_antennas(),
        );
        if h.shape() != expected {
            return Err(Error::shape(
                "channel matrix",
                format!("{expected:?}"),
                format!("{:?}", h.shape()),
            ));
        }
        self.side_mut(direction)?.matrix = Some(h);
        Ok(())
    }

    fn context(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<PropagationContext> {
        let (src, dst) = endpoints(direction, head, tail);
        let mut ctx = PropagationContext::new(
            self.carrier_frequency,
            src.require_transmitter()?.array().clone(),
            dst.require_receiver()?.array().clone(),
        )?;
        ctx.set_propagation_velocity(self.propagation_velocity)?;
        ctx.tx_position = src.coordinate();
        ctx.rx_position = dst.coordinate();
        Ok(ctx)
    }

    fn draw_channel<R: Rng + ?Sized>(
        &self,
        direction: LinkDirection,
        head: &Device,
        tail: &Device,
        rng: &mut R,
    ) -> Result<CMat> {
        let spec = self
            .side(direction)?
            .channel
            .as_ref()
            .ok_or_else(|| Error::MissingState(format!("{direction:?} channel model is not set")))?;
        let ctx = self.context(direction, head, tail)?;
        Ok(channel::realize(spec, &ctx, rng)?.matrix)
    }

    fn draw_gain<R: Rng + ?Sized>(
        &self,
        direction: LinkDirection,
        head: &Device,
        tail: &Device,
        rng: &mut R,
    ) -> Result<f64> {
        let mut spec = self
            .side(direction)?
            .path_loss
            .clone()
            .ok_or_else(|| Error::MissingState(format!("{direction:?} path loss model is not set")))?;
        if spec.carrier_frequency.is_nan() {
            spec.carrier_frequency = self.carrier_frequency;
            spec.propagation_velocity = self.propagation_velocity;
        }
        if spec.distance.is_none() {
            spec.distance = Some(head.distance_to(tail));
        }
        Ok(path_loss::realize(&spec, rng)?.amplitude_gain)
    }

    /// Draws forward (and reverse) channels and gains. With channel symmetry
    /// the reverse channel is the conjugate transpose of the forward one,
    /// which needs `Nt = Nr` at both devices.
    pub fn realize<R: Rng + ?Sized>(&mut self, head: &Device, tail: &Device, rng: &mut R) -> Result<()> {
        let h_fwd = self.draw_channel(LinkDirection::Forward, head, tail, rng)?;
        let g_fwd = self.draw_gain(LinkDirection::Forward, head, tail, rng)?;
        let reverse = if self.reverse.is_some() {
            let h_rev = if self.channel_symmetric {
                for d in [head, tail] {
                    let nt = d.require_transmitter()?.num_antennas();
                    let nr = d.require_receiver()?.num_antennas();
                    if nt != nr {
                        return Err(Error::invalid(
                            "channel_symmetric",
                            format!("device {} has {nt} transmit and {nr} receive antennas", d.name()),
                        ));
                    }
                }
                h_fwd.adjoint()
            } else {
                self.draw_channel(LinkDirection::Reverse, head, tail, rng)?
            };
            let g_rev = if self.path_loss_symmetric {
                g_fwd
            } else {
                self.draw_gain(LinkDirection::Reverse, head, tail, rng)?
            };
            Some((h_rev, g_rev))
        } else {
            None
        };
        self.forward.matrix = Some(h_fwd);
        self.forward.gain = Some(g_fwd);
        if let (Some(side), Some((h, g))) = (self.reverse.as_mut(), reverse) {
            side.matrix = Some(h);
            side.gain = Some(g);
        }
        Ok(())
    }

    fn realized(&self, direction: LinkDirection) -> Result<(&CMat, f64)> {
        let side = self.side(direction)?;
        match (&side.matrix, side.gain) {
            (Some(h), Some(g)) => Ok((h, g)),
            _ => Err(Error::MissingState(format!("{direction:?} direction is not realized"))),
        }
    }

    /// Large-scale SNR `Ptx G^2 / sigma^2`.
    pub fn snr(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<f64> {
        let (src, dst) = endpoints(direction, head, tail);
        let g = self
            .side(direction)?
            .gain
            .ok_or_else(|| Error::MissingState(format!("{direction:?} gain is not realized")))?;
        Ok(src.require_transmitter()?.energy_per_symbol() * g * g / dst.require_receiver()?.noise_psd())
    }

    fn gain_for_snr(&self, direction: LinkDirection, snr: f64, head: &Device, tail: &Device) -> Result<f64> {
        let (src, dst) = endpoints(direction, head, tail);
        let ptx = src.require_transmitter()?.energy_per_symbol();
        if !(ptx > 0.0) {
            return Err(Error::invalid(
                "transmit_power",
                "SNR cannot be set with zero transmit energy",
            ));
        }
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::invalid("snr", format!("must be finite and >= 0, got {snr}")));
        }
        Ok((snr * dst.require_receiver()?.noise_psd() / ptx).sqrt())
    }

    /// Sets `G = sqrt(snr sigma^2 / Ptx)` per direction; `reverse` is ignored
    /// on forward-only links.
    pub fn set_snr(
        &mut self,
        forward: f64,
        reverse: Option<f64>,
        unit: RatioUnit,
        head: &Device,
        tail: &Device,
    ) -> Result<()> {
        let g_fwd = self.gain_for_snr(LinkDirection::Forward, unit.to_linear(forward), head, tail)?;
        let g_rev = match (reverse, self.has_reverse()) {
            (Some(r), true) => Some(self.gain_for_snr(LinkDirection::Reverse, unit.to_linear(r), head, tail)?),
            _ => None,
        };
        self.forward.gain = Some(g_fwd);
        if let (Some(side), Some(g)) = (self.reverse.as_mut(), g_rev) {
            side.gain = Some(g);
        }
        Ok(())
    }

    /// Noiseless `y = G H x` from the source's stored symbol.
    pub fn received_signal(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<CVec> {
        let (src, _) = endpoints(direction, head, tail);
        let (h, g) = self.realized(direction)?;
        let x = src.require_transmitter()?.transmit_symbol()?;
        if h.ncols() != x.len() {
            return Err(Error::shape("channel columns", h.ncols(), x.len()));
        }
        Ok((h * x) * C64::new(g, 0.0))
    }

    pub fn link_budget(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<LinkBudget> {
        let (src, dst) = endpoints(direction, head, tail);
        let g = self
            .side(direction)?
            .gain
            .ok_or_else(|| Error::MissingState(format!("{direction:?} gain is not realized")))?;
        let tx = src.require_transmitter()?;
        let rx = dst.require_receiver()?;
        let transmit_power_dbm = watts_to_dbm(tx.transmit_power_watts());
        let path_loss_db = -20.0 * g.log10();
        let received_power_dbm = transmit_power_dbm - path_loss_db;
        let noise_power_dbm = watts_to_dbm(rx.effective_noise_power());
        Ok(LinkBudget {
            transmit_power_dbm,
            path_loss_db,
            received_power_dbm,
            noise_power_dbm,
            snr_db: received_power_dbm - noise_power_dbm,
        })
    }

    /// CSI entry describing the source's signal as seen by the destination.
    pub fn csi_entry(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<CsiEntry> {
        let (src, _) = endpoints(direction, head, tail);
        let (h, g) = self.realized(direction)?;
        let tx = src.require_transmitter()?;
        Ok(CsiEntry {
            channel: h * C64::new(g, 0.0),
            large_scale_gain: g,
            transmit_energy: tx.energy_per_symbol(),
            precoder: tx.precoder(),
            symbol_covariance: tx.symbol_covariance().clone(),
        })
    }

    /// Interference-free CSI of one direction.
    pub fn csi(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<ChannelStateInformation> {
        let (_, dst) = endpoints(direction, head, tail);
        Ok(ChannelStateInformation {
            desired: self.csi_entry(direction, head, tail)?,
            interferers: Vec::new(),
            noise_variance: dst.require_receiver()?.noise_psd(),
        })
    }

    /// `(R_y, R_n)` after combining at the destination.
    pub fn covariance(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<(CMat, CMat)> {
        let (_, dst) = endpoints(direction, head, tail);
        let rx = dst.require_receiver()?;
        let entry = self.csi_entry(direction, head, tail)?;
        let w = rx.combiner();
        if w.nrows() != entry.channel.nrows() {
            return Err(Error::shape("combiner rows", entry.channel.nrows(), w.nrows()));
        }
        if w.ncols() != entry.precoder.ncols() {
            return Err(Error::shape("combiner columns", entry.precoder.ncols(), w.ncols()));
        }
        let r_y = post_combining_covariance(&w, &entry);
        let r_n = (w.adjoint() * &w) * C64::new(rx.noise_psd(), 0.0);
        Ok((r_y, r_n))
    }

    /// `log2 det(I + R_n^-1 R_y)`; a singular `R_n` is an error.
    pub fn mutual_information(&self, direction: LinkDirection, head: &Device, tail: &Device) -> Result<f64> {
        let (r_y, r_n) = self.covariance(direction, head, tail)?;
        log2_det_identity_plus(&r_n, &r_y)
    }
}

/// A link that owns its head and tail devices.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    head: Device,
    tail: Device,
    path: LinkPath,
}

impl Link {
    pub fn create(head: Device, tail: Device) -> Result<Self> {
        let path = LinkPath::new(&head, &tail)?;
        Ok(Link { head, tail, path })
    }

    pub fn head(&self) -> &Device {
        &self.head
    }

    pub fn tail(&self) -> &Device {
        &self.tail
    }

    pub fn head_mut(&mut self) -> &mut Device {
        &mut self.head
    }

    pub fn tail_mut(&mut self) -> &mut Device {
        &mut self.tail
    }

    pub fn path(&self) -> &LinkPath {
        &self.path
    }

    pub fn path_mut(&mut self) -> &mut LinkPath {
        &mut self.path
    }

    fn devices_mut(&mut self, direction: LinkDirection) -> (&mut Device, &mut Device) {
        match direction {
            LinkDirection::Forward => (&mut self.head, &mut self.tail),
            LinkDirection::Reverse => (&mut self.tail, &mut self.head),
        }
    }

    fn directions(&self) -> Vec<LinkDirection> {
        let mut d = vec![LinkDirection::Forward];
        if self.path.has_reverse() {
            d.push(LinkDirection::Reverse);
        }
        d
    }

    /// Realizes both directions; stored received signals are discarded.
    pub fn realize<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.path.realize(&self.head, &self.tail, rng)?;
        for d in [&mut self.head, &mut self.tail] {
            if let Ok(rx) = d.receiver_mut() {
                rx.clear_signals();
            }
        }
        Ok(())
    }

    pub fn set_snr(&mut self, forward: f64, reverse: Option<f64>, unit: RatioUnit) -> Result<()> {
        self.path.set_snr(forward, reverse, unit, &self.head, &self.tail)
    }

    pub fn snr(&self, direction: LinkDirection) -> Result<f64> {
        self.path.snr(direction, &self.head, &self.tail)
    }

    pub fn snr_db(&self, direction: LinkDirection) -> Result<f64> {
        Ok(linear_to_db(self.snr(direction)?))
    }

    /// Supplies CSI and configures every direction: the transmitter first,
    /// then the receiver against CSI carrying the new precoder.
    pub fn configure(&mut self, tx_strategy: &str, rx_strategy: &str) -> Result<()> {
        for direction in self.directions() {
            let csi = self.path.csi(direction, &self.head, &self.tail)?;
            let (src, _) = self.devices_mut(direction);
            let tx = src.transmitter_mut()?;
            tx.set_csi(csi)?;
            tx.configure(tx_strategy)?;
            let csi = self.path.csi(direction, &self.head, &self.tail)?;
            let (_, dst) = self.devices_mut(direction);
            let rx = dst.receiver_mut()?;
            rx.set_csi(csi)?;
            rx.configure(rx_strategy)?;
        }
        Ok(())
    }

    /// Stores `y = G H x` and a fresh noise draw at the destination.
    pub fn compute_received_signal<R: Rng + ?Sized>(&mut self, direction: LinkDirection, rng: &mut R) -> Result<()> {
        let y = self.path.received_signal(direction, &self.head, &self.tail)?;
        let (_, dst) = self.devices_mut(direction);
        let rx = dst.receiver_mut()?;
        rx.set_received_signal(y)?;
        rx.draw_noise(rng)?;
        Ok(())
    }

    pub fn link_budget(&self, direction: LinkDirection) -> Result<LinkBudget> {
        self.path.link_budget(direction, &self.head, &self.tail)
    }

    pub fn csi(&self, direction: LinkDirection) -> Result<ChannelStateInformation> {
        self.path.csi(direction, &self.head, &self.tail)
    }

    pub fn covariance(&self, direction: LinkDirection) -> Result<(CMat, CMat)> {
        self.path.covariance(direction, &self.head, &self.tail)
    }

    pub fn mutual_information(&self, direction: LinkDirection) -> Result<f64> {
        self.path.mutual_information(direction, &self.head, &self.tail)
    }

    /// Error between the source's symbol and the destination's estimate.
    pub fn symbol_estimation_error(&self, direction: LinkDirection) -> Result<(f64, f64)> {
        let (src, dst) = endpoints(direction, &self.head, &self.tail);
        let s = src
            .require_transmitter()?
            .symbol()
            .ok_or_else(|| Error::MissingState("transmit symbol not set".into()))?;
        let s_hat = dst.require_receiver()?.combine()?;
        symbol_estimation_error(s, &s_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayGeometry, Axis};
    use crate::device::{Architecture, Capability};
    use crate::linalg::{hermitian_eigenvalues, is_hermitian, scaled_identity};
    use crate::path_loss::PathLossModel;
    use crate::rng::{complex_normal_vector, substream};
    use crate::units::{psd_from_dbm_hz, PowerUnit};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn device(name: &str, cap: Capability, n: usize) -> Device {
        Device::new(name, cap, Architecture::Digital, ArrayGeometry::ula(n, Axis::X)).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// Transceiver pair 100 m apart with the four-device scenario's radio settings.
    fn four_device_link(nt: usize, nr: usize, ns: usize) -> Link {
        let mut a = device("a", Capability::Transceiver, 1);
        let mut b = device("b", Capability::Transceiver, 1);
        for d in [&mut a, &mut b] {
            d.set_arrays(ArrayGeometry::ula(nt, Axis::X), ArrayGeometry::ula(nr, Axis::X))
                .unwrap();
            d.set_num_streams(ns).unwrap();
            d.set_symbol_bandwidth(50e6).unwrap();
            d.set_transmit_power(0.0, PowerUnit::DBm).unwrap();
            d.set_noise_psd_dbm_hz(-174.0).unwrap();
        }
        b.set_coordinate([0.0, 100.0, 0.0]).unwrap();
        let mut link = Link::create(a, b).unwrap();
        link.path_mut().set_carrier_frequency(5e9).unwrap();
        link.path_mut().set_channel(&ChannelSpec::rayleigh()).unwrap();
        link.path_mut()
            .set_path_loss(&PathLossSpec::new(PathLossModel::FreeSpace { exponent: 2.0 }));
        link
    }

    /// SISO link with unit noise and a fixed unit channel.
    fn unit_siso() -> Link {
        let a = device("a", Capability::Transmitter, 1);
        let b = device("b", Capability::Receiver, 1);
        let mut link = Link::create(a, b).unwrap();
        let (h, t) = (link.head.clone(), link.tail.clone());
        link.path
            .set_channel_matrix(LinkDirection::Forward, CMat::identity(1, 1), &h, &t)
            .unwrap();
        link.path.set_gain(LinkDirection::Forward, 1.0).unwrap();
        link
    }

    #[test]
    fn capability_rules() {
        let tx = device("t", Capability::Transmitter, 1);
        let rx = device("r", Capability::Receiver, 1);
        let trx = device("x", Capability::Transceiver, 1);
        assert!(!Link::create(tx.clone(), rx.clone()).unwrap().path().has_reverse());
        assert!(Link::create(trx.clone(), trx.clone()).unwrap().path().has_reverse());
        assert!(Link::create(rx.clone(), rx).is_err());
        assert!(Link::create(trx, tx).is_err());
    }

    #[test]
    fn symmetry_and_fresh_draws() {
        let mut link = four_device_link(4, 4, 2);
        link.path_mut().set_channel_symmetric(true);
        link.path_mut().set_path_loss_symmetric(true);
        let mut rng = substream(1, "sym");
        link.realize(&mut rng).unwrap();
        let p = link.path();
        let fwd = p.channel_matrix(LinkDirection::Forward).unwrap().clone();
        assert_eq!(p.channel_matrix(LinkDirection::Reverse).unwrap(), &fwd.adjoint());
        assert_eq!(p.gain(LinkDirection::Forward), p.gain(LinkDirection::Reverse));
        link.realize(&mut rng).unwrap();
        assert_ne!(link.path().channel_matrix(LinkDirection::Forward).unwrap(), &fwd);

        // deterministic FSPL is symmetric without the flag
        let mut link = four_device_link(4, 8, 2);
        link.realize(&mut rng).unwrap();
        let p = link.path();
        assert_eq!(p.gain(LinkDirection::Forward), p.gain(LinkDirection::Reverse));
        link.path_mut().set_channel_symmetric(true);
        assert!(link.realize(&mut rng).is_err());
    }

    #[test]
    fn set_snr_examples() {
        let mut link = four_device_link(4, 8, 4);
        link.realize(&mut substream(2, "snr")).unwrap();
        link.set_snr(10.0, Some(10.0), RatioUnit::DB).unwrap();
        let g = link.path().gain(LinkDirection::Forward).unwrap();
        let expected = 10.0 * psd_from_dbm_hz(-174.0) / 2e-11;
        assert_relative_eq!(g * g, expected, max_relative = 1e-12);
        assert_relative_eq!(g * g, 1.9905e-9, max_relative = 1e-4);
        assert!((link.snr_db(LinkDirection::Reverse).unwrap() - 10.0).abs() < 1e-9);
        link.set_snr(10.0, None, RatioUnit::Linear).unwrap();
        assert_relative_eq!(
            link.path().gain(LinkDirection::Forward).unwrap(),
            g,
            max_relative = 1e-14
        );

        let mut link = unit_siso();
        link.set_snr(0.0, None, RatioUnit::DB).unwrap();
        assert_relative_eq!(
            link.path().gain(LinkDirection::Forward).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn link_budget_four_device_values() {
        let mut link = four_device_link(4, 8, 4);
        link.realize(&mut substream(3, "budget")).unwrap();
        let b = link.link_budget(LinkDirection::Forward).unwrap();
        let fspl = 20.0 * (4.0 * std::f64::consts::PI * 100.0 / 0.06).log10();
        assert!((b.path_loss_db - fspl).abs() < 1e-9);
        assert!((b.path_loss_db - 86.42).abs() < 0.01);
        assert!((b.noise_power_dbm - (-174.0 + 10.0 * 5e7f64.log10())).abs() < 1e-9);
        assert!((b.noise_power_dbm + 97.01).abs() < 0.01);
        assert!((b.snr_db - 10.59).abs() < 0.01);
        assert!((b.snr_db - link.snr_db(LinkDirection::Forward).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn received_signal_examples() {
        let mut link = unit_siso();
        link.head_mut()
            .transmitter_mut()
            .unwrap()
            .set_transmit_symbol(CVec::from_element(1, C64::new(0.3, 0.4)))
            .unwrap();
        link.tail_mut().receiver_mut().unwrap().set_noise_psd(1e-30).unwrap();
        link.compute_received_signal(LinkDirection::Forward, &mut substream(4, "n"))
            .unwrap();
        let y = link.tail().receiver().unwrap().received_signal().unwrap().clone();
        assert_eq!(y[0], C64::new(0.3, 0.4));

        link.path_mut().set_gain(LinkDirection::Forward, 3.0).unwrap();
        let y3 = link
            .path()
            .received_signal(LinkDirection::Forward, link.head(), link.tail())
            .unwrap();
        assert!((y3 - &y * c(3.0)).norm() < 1e-15);

        link.head_mut().turn_off();
        let y0 = link
            .path()
            .received_signal(LinkDirection::Forward, link.head(), link.tail())
            .unwrap();
        assert_eq!(y0.norm(), 0.0);
    }

    #[test]
    fn csi_examples() {
        let mut link = four_device_link(4, 4, 2);
        link.path_mut().set_channel_symmetric(true);
        link.path_mut().set_path_loss_symmetric(true);
        link.realize(&mut substream(5, "csi")).unwrap();
        let p = link.path();
        let (h, g) = (
            p.channel_matrix(LinkDirection::Forward).unwrap().clone(),
            p.gain(LinkDirection::Forward).unwrap(),
        );
        let fwd = link.csi(LinkDirection::Forward).unwrap();
        assert_eq!(fwd.desired.channel, &h * c(g));
        let rev = link.csi(LinkDirection::Reverse).unwrap();
        assert!((rev.desired.channel.clone() - fwd.desired.channel.adjoint()).norm() < 1e-30);
        assert!(fwd.interferers.is_empty());

        link.configure("eigen", "eigen").unwrap();
        let w = link.tail().receiver().unwrap().combiner();
        let u = crate::linalg::svd(&h).u;
        for k in 0..2 {
            let overlap = (w.column(k).adjoint() * u.column(k))[(0, 0)].norm();
            assert!((overlap - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn covariance_examples() {
        let mut a = device("a", Capability::Transmitter, 2);
        let b = device("b", Capability::Receiver, 2);
        a.set_num_streams(2).unwrap();
        let mut b = b;
        b.set_num_streams(2).unwrap();
        b.receiver_mut().unwrap().set_noise_psd(0.5).unwrap();
        let mut link = Link::create(a, b).unwrap();
        let (h, t) = (link.head.clone(), link.tail.clone());
        link.path
            .set_channel_matrix(LinkDirection::Forward, CMat::identity(2, 2), &h, &t)
            .unwrap();
        link.path.set_gain(LinkDirection::Forward, 2.0).unwrap();
        let (r_y, r_n) = link.covariance(LinkDirection::Forward).unwrap();
        assert!((r_y - scaled_identity(2, 4.0 / 2.0)).norm() < 1e-15);
        assert!((r_n - scaled_identity(2, 0.5)).norm() < 1e-15);
        // log2 det(I + (4/2)/0.5 I) = 2 log2(1 + rho/2) with rho = 8
        let mi = link.mutual_information(LinkDirection::Forward).unwrap();
        assert!((mi - 2.0 * (1.0 + 4.0f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn sample_covariance_matches() {
        let mut link = four_device_link(4, 4, 2);
        let mut rng = substream(6, "mc");
        link.realize(&mut rng).unwrap();
        link.configure("eigen", "mmse").unwrap();
        let (r_y, _) = link.covariance(LinkDirection::Forward).unwrap();
        let w = link.tail().receiver().unwrap().combiner();
        let mut acc = CMat::zeros(2, 2);
        let n = 10_000;
        for _ in 0..n {
            link.head_mut().transmitter_mut().unwrap().draw_symbol(&mut rng);
            let y = link
                .path()
                .received_signal(LinkDirection::Forward, link.head(), link.tail())
                .unwrap();
            let z = w.adjoint() * y;
            acc += &z * z.adjoint();
        }
        acc /= c(n as f64);
        assert!((acc - &r_y).norm() / r_y.norm() < 0.05);
    }

    #[test]
    fn siso_mutual_information() {
        let mut link = unit_siso();
        link.tail_mut().receiver_mut().unwrap().set_noise_psd(1.0).unwrap();
        assert!((link.mutual_information(LinkDirection::Forward).unwrap() - 1.0).abs() < 1e-12);
        link.path_mut().set_gain(LinkDirection::Forward, 3f64.sqrt()).unwrap();
        assert!((link.mutual_information(LinkDirection::Forward).unwrap() - 2.0).abs() < 1e-12);
        link.tail_mut()
            .receiver_mut()
            .unwrap()
            .set_combiner(CMat::zeros(1, 1))
            .unwrap();
        assert!(matches!(
            link.mutual_information(LinkDirection::Forward),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn symbol_error_examples() {
        let s = CVec::from_vec(vec![c(1.0), C64::new(0.0, -1.0)]);
        assert_eq!(symbol_estimation_error(&s, &s).unwrap(), (0.0, 0.0));
        assert_eq!(symbol_estimation_error(&s, &CVec::zeros(2)).unwrap().1, 1.0);
        let s_hat = CVec::from_vec(vec![c(0.5), c(0.0)]);
        let (abs, norm) = symbol_estimation_error(&s, &s_hat).unwrap();
        assert!((abs - 1.25).abs() < 1e-15 && (norm - 0.625).abs() < 1e-15);
        assert!(symbol_estimation_error(&CVec::zeros(2), &s).is_err());

        let mut link = unit_siso();
        link.head_mut()
            .transmitter_mut()
            .unwrap()
            .set_transmit_symbol(CVec::from_element(1, c(1.0)))
            .unwrap();
        let y = link
            .path()
            .received_signal(LinkDirection::Forward, link.head(), link.tail())
            .unwrap();
        link.tail_mut().receiver_mut().unwrap().set_received_signal(y).unwrap();
        assert_eq!(
            link.symbol_estimation_error(LinkDirection::Forward).unwrap(),
            (0.0, 0.0)
        );
    }

    proptest! {
        #[test]
        fn set_snr_hits_target(seed in any::<u64>(), target_db in -30.0f64..40.0, pwr in -20.0f64..30.0) {
            let mut link = four_device_link(2, 2, 1);
            link.realize(&mut substream(seed, "p")).unwrap();
            link.head_mut().set_transmit_power(pwr, PowerUnit::DBm).unwrap();
            link.tail_mut().set_transmit_power(pwr, PowerUnit::DBm).unwrap();
            link.set_snr(target_db, Some(target_db - 3.0), RatioUnit::DB).unwrap();
            prop_assert!((link.snr_db(LinkDirection::Forward).unwrap() - target_db).abs() < 1e-9);
            prop_assert!((link.snr_db(LinkDirection::Reverse).unwrap() - target_db + 3.0).abs() < 1e-9);
            let b = link.link_budget(LinkDirection::Forward).unwrap();
            prop_assert!((b.snr_db - (b.transmit_power_dbm - b.path_loss_db - b.noise_power_dbm)).abs() < 1e-9);
        }

        #[test]
        fn covariances_are_hermitian_psd_and_mi_monotone(seed in any::<u64>()) {
            let mut link = four_device_link(4, 4, 2);
            let mut rng = substream(seed, "cov");
            link.realize(&mut rng).unwrap();
            link.configure("eigen", "eigen").unwrap();
            let (r_y, r_n) = link.covariance(LinkDirection::Forward).unwrap();
            for r in [&r_y, &r_n] {
                prop_assert!(is_hermitian(r, 1e-12 * r.norm().max(1e-300)));
                prop_assert!(hermitian_eigenvalues(r).iter().all(|&e| e >= -1e-9 * r.norm()));
            }
            let mut last = -1.0;
            for p in [-20.0, -10.0, 0.0, 10.0, 20.0] {
                link.head_mut().set_transmit_power(p, PowerUnit::DBm).unwrap();
                let mi = link.mutual_information(LinkDirection::Forward).unwrap();
                prop_assert!(mi >= last - 1e-12);
                last = mi;
            }
            let s = complex_normal_vector(&mut rng, 2, 1.0);
            prop_assert!(symbol_estimation_error(&s, &s).unwrap().0 == 0.0);
        }
    }
}
