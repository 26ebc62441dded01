//! Channel state information handed to transceivers by links and networks.

use crate::CMat;

/// What a device knows about one transmitter reaching a receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEntry {
    /// `G * H` of the path (`Nr x Nt`); transmit energy is carried separately.
    pub channel: CMat,
    pub large_scale_gain: f64,
    /// Transmit energy per symbol `Ptx` (J).
    pub transmit_energy: f64,
    /// Effective precoder of the transmitter at the time the CSI was built.
    pub precoder: CMat,
    pub symbol_covariance: CMat,
}

impl CsiEntry {
    /// `sqrt(Ptx) * G * H * F`.
    pub fn precoded_channel(&self) -> CMat {
        (&self.channel * &self.precoder) * crate::C64::new(self.transmit_energy.sqrt(), 0.0)
    }
}

/// Genie-aided CSI: the desired path first, then one entry per interferer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateInformation {
    pub desired: CsiEntry,
    pub interferers: Vec<CsiEntry>,
    /// Noise energy per symbol at the receiving end (J).
    pub noise_variance: f64,
}
