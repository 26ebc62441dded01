//! Devices: a named position with a transmitter, a receiver, or both.

use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, Point3};
use crate::receiver::Receiver;
use crate::transmitter::Transmitter;
use crate::units::PowerUnit;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    Transmitter,
    Receiver,
    Transceiver,
}

impl Capability {
    pub fn can_transmit(self) -> bool {
        matches!(self, Capability::Transmitter | Capability::Transceiver)
    }

    pub fn can_receive(self) -> bool {
        matches!(self, Capability::Receiver | Capability::Transceiver)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Digital,
    Hybrid { rf_chains: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    name: String,
    capability: Capability,
    architecture: Architecture,
    coordinate: Point3,
    transmitter: Option<Transmitter>,
    receiver: Option<Receiver>,
}

impl Device {
    /// Builds a device at the origin; both ends (if present) use `array`.
    pub fn new(
        name: impl Into<String>,
        capability: Capability,
        architecture: Architecture,
        array: ArrayGeometry,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("name", "device name must not be empty"));
        }
        if array.is_empty() {
            return Err(Error::EmptyArray);
        }
        let transmitter = if capability.can_transmit() {
            Some(match architecture {
                Architecture::Digital => Transmitter::digital(array.clone()),
                Architecture::Hybrid { rf_chains } => Transmitter::hybrid(array.clone(), rf_chains)?,
            })
        } else {
            None
        };
        let receiver = if capability.can_receive() {
            Some(match architecture {
                Architecture::Digital => Receiver::digital(array),
                Architecture::Hybrid { rf_chains } => Receiver::hybrid(array, rf_chains)?,
            })
        } else {
            None
        };
        Ok(Device {
            name,
            capability,
            architecture,
            coordinate: [0.0; 3],
            transmitter,
            receiver,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) -> Result<()> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::invalid("name", "device name must not be empty"));
        }
        self.name = name;
        Ok(())
    }

    pub fn capability(&self) -> Capability {
        self.capability
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    /// Position in meters.
    pub fn coordinate(&self) -> Point3 {
        self.coordinate
    }

    pub fn set_coordinate(&mut self, p: Point3) -> Result<()> {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinate", format!("must be finite, got {p:?}")));
        }
        self.coordinate = p;
        Ok(())
    }

    pub fn distance_to(&self, other: &Device) -> f64 {
        let [a, b, c] = self.coordinate;
        let [x, y, z] = other.coordinate;
        ((a - x).powi(2) + (b - y).powi(2) + (c - z).powi(2)).sqrt()
    }

    pub fn transmitter(&self) -> Option<&Transmitter> {
        self.transmitter.as_ref()
    }

    pub fn receiver(&self) -> Option<&Receiver> {
        self.receiver.as_ref()
    }

    pub fn transmitter_mut(&mut self) -> Result<&mut Transmitter> {
        let name = &self.name;
        self.transmitter
            .as_mut()
            .ok_or_else(|| Error::Capability(format!("device {name} cannot transmit")))
    }

    pub fn receiver_mut(&mut self) -> Result<&mut Receiver> {
        let name = &self.name;
        self.receiver
            .as_mut()
            .ok_or_else(|| Error::Capability(format!("device {name} cannot receive")))
    }

    pub fn require_transmitter(&self) -> Result<&Transmitter> {
        self.transmitter
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("device {} cannot transmit", self.name)))
    }

    pub fn require_receiver(&self) -> Result<&Receiver> {
        self.receiver
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("device {} cannot receive", self.name)))
    }

    /// Same array at both ends.
    pub fn set_array(&mut self, array: ArrayGeometry) -> Result<()> {
        self.set_arrays(array.clone(), array)
    }

    /// Separate transmit and receive arrays; the side a device lacks is ignored.
    pub fn set_arrays(&mut self, transmit: ArrayGeometry, receive: ArrayGeometry) -> Result<()> {
        if transmit.is_empty() || receive.is_empty() {
            return Err(Error::EmptyArray);
        }
        if let Some(tx) = &mut self.transmitter {
            tx.set_array(transmit);
        }
        if let Some(rx) = &mut self.receiver {
            rx.set_array(receive);
        }
        Ok(())
    }

    pub fn set_num_streams(&mut self, ns: usize) -> Result<()> {
        if let Some(tx) = &mut self.transmitter {
            tx.set_num_streams(ns)?;
        }
        if let Some(rx) = &mut self.receiver {
            rx.set_num_streams(ns)?;
        }
        Ok(())
    }

    pub fn set_symbol_bandwidth(&mut self, hz: f64) -> Result<()> {
        if let Some(tx) = &mut self.transmitter {
            tx.set_symbol_bandwidth(hz)?;
        }
        if let Some(rx) = &mut self.receiver {
            rx.set_symbol_bandwidth(hz)?;
        }
        Ok(())
    }

    /// No-op on receive-only devices.
    pub fn set_transmit_power(&mut self, value: f64, unit: PowerUnit) -> Result<()> {
        match &mut self.transmitter {
            Some(tx) => tx.set_transmit_power(value, unit),
            None => Ok(()),
        }
    }

    /// No-op on transmit-only devices.
    pub fn set_noise_psd_dbm_hz(&mut self, dbm_per_hz: f64) -> Result<()> {
        match &mut self.receiver {
            Some(rx) => rx.set_noise_psd_dbm_hz(dbm_per_hz),
            None => Ok(()),
        }
    }

    pub fn turn_off(&mut self) {
        if let Some(tx) = &mut self.transmitter {
            tx.turn_off();
        }
    }

    pub fn turn_on(&mut self) {
        if let Some(tx) = &mut self.transmitter {
            tx.turn_on();
        }
    }
}
