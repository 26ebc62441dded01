//! Constraints of an analog beamforming network: which antenna/RF-chain
//! connections exist, and the resolution of the phase shifters and
//! attenuators. Transmitters and receivers share this code path.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{CMat, Error, Result, C64};

/// Entries already within this distance of their grid point are left
/// untouched, which makes quantization exactly idempotent.
const GRID_TOL: f64 = 1e-12;

pub const DEFAULT_LOG_DYNAMIC_RANGE_DB: f64 = 30.0;

/// Bit resolution of a phase shifter or attenuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resolution {
    Bits(u32),
    #[default]
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeStepping {
    #[default]
    Linear,
    Logarithmic,
}

pub type ConnectionMask = DMatrix<bool>;

/// Every antenna connected to every RF chain.
pub fn full_mask(antennas: usize, rf_chains: usize) -> ConnectionMask {
    ConnectionMask::from_element(antennas, rf_chains, true)
}

/// Block-diagonal sub-array mask: antenna `i` feeds RF chain
/// `floor(i * L / N)`, so contiguous antenna groups map to one chain each.
pub fn subarray_mask(antennas: usize, rf_chains: usize) -> ConnectionMask {
    ConnectionMask::from_fn(antennas, rf_chains, |i, j| i * rf_chains / antennas.max(1) == j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogConstraints {
    pub mask: ConnectionMask,
    pub phase_bits: Resolution,
    pub amplitude_bits: Resolution,
    pub stepping: AmplitudeStepping,
    /// Span of the logarithmic attenuator grid below the per-matrix peak.
    pub log_dynamic_range_db: f64,
}

impl AnalogConstraints {
    /// Fully connected with unbounded resolution.
    pub fn unconstrained(antennas: usize, rf_chains: usize) -> Self {
        AnalogConstraints {
            mask: full_mask(antennas, rf_chains),
            phase_bits: Resolution::Unbounded,
            amplitude_bits: Resolution::Unbounded,
            stepping: AmplitudeStepping::Linear,
            log_dynamic_range_db: DEFAULT_LOG_DYNAMIC_RANGE_DB,
        }
    }

    pub fn antennas(&self) -> usize {
        self.mask.nrows()
    }

    pub fn rf_chains(&self) -> usize {
        self.mask.ncols()
    }
}

fn wrap_phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Nearest phase on the `2^bits` grid `{2 pi k / 2^bits}`, ties to the lower level.
fn snap_phase(phase: f64, bits: u32) -> f64 {
    let n = 2f64.powi(bits as i32);
    let step = 2.0 * PI / n;
    let x = phase.rem_euclid(2.0 * PI) / step;
    let k = (x - 0.5).ceil().rem_euclid(n);
    k * step
}

fn amplitude_levels(peak: f64, bits: u32, stepping: AmplitudeStepping, range_db: f64) -> Vec<f64> {
    let n = 1usize << bits;
    match stepping {
        AmplitudeStepping::Linear => (1..=n).map(|k| peak * k as f64 / n as f64).collect(),
        AmplitudeStepping::Logarithmic => (0..n)
            .map(|k| {
                let frac = k as f64 / (n - 1) as f64;
                peak * 10f64.powf(-range_db * (1.0 - frac) / 20.0)
            })
            .collect(),
    }
}

/// Nearest level (linear distance for linear stepping, dB distance for
/// logarithmic), ties to the lower level.
fn snap_amplitude(mag: f64, levels: &[f64], stepping: AmplitudeStepping) -> f64 {
    let dist = |l: f64| match stepping {
        AmplitudeStepping::Linear => (mag - l).abs(),
        AmplitudeStepping::Logarithmic => (mag.ln() - l.ln()).abs(),
    };
    let mut best = levels[0];
    let mut best_d = dist(best);
    for &l in &levels[1..] {
        let d = dist(l);
        if d < best_d {
            best = l;
            best_d = d;
        }
    }
    best
}

/// Projects an analog beamforming matrix onto the hardware constraints:
/// masks disconnected entries to zero, then quantizes amplitude and phase.
pub fn quantize_analog(m: &CMat, c: &AnalogConstraints) -> Result<CMat> {
    if m.shape() != c.mask.shape() {
        return Err(Error::shape(
            "quantize_analog",
            format!("{:?}", c.mask.shape()),
            format!("{:?}", m.shape()),
        ));
    }
    let masked = CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        if c.mask[(i, j)] {
            m[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let peak = masked.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let levels = match c.amplitude_bits {
        Resolution::Bits(b) if b > 0 && peak > 0.0 => {
            if b > 24 {
                return Err(Error::invalid("amplitude_bits", "at most 24 bits supported"));
            }
            Some(amplitude_levels(peak, b, c.stepping, c.log_dynamic_range_db))
        }
        _ => None,
    };

    Ok(masked.map(|z| {
        let mag = z.norm();
        if mag == 0.0 {
            return z;
        }
        let phase = z.arg();
        let target_mag = match (c.amplitude_bits, &levels) {
            (Resolution::Bits(0), _) => 1.0,
            (Resolution::Bits(_), Some(levels)) => snap_amplitude(mag, levels, c.stepping),
            _ => mag,
        };
        let target_phase = match c.phase_bits {
            Resolution::Bits(b) => snap_phase(phase, b),
            Resolution::Unbounded => phase,
        };
        let mag_ok = (mag - target_mag).abs() <= GRID_TOL * target_mag.max(1.0);
        let phase_ok = wrap_phase_distance(phase, target_phase) <= GRID_TOL;
        if mag_ok && phase_ok {
            z
        } else {
            C64::from_polar(target_mag, target_phase)
        }
    }))
}

/// Whether every nonzero entry's phase lies within `tol` of the `2^bits` grid.
pub fn on_phase_grid(m: &CMat, bits: u32, tol: f64) -> bool {
    m.iter()
        .filter(|z| z.norm() > 0.0)
        .all(|z| wrap_phase_distance(z.arg(), snap_phase(z.arg(), bits)) <= tol)
}

/// Whether `m` is zero wherever `mask` is false.
pub fn respects_mask(m: &CMat, mask: &ConnectionMask) -> bool {
    m.shape() == mask.shape() && m.iter().zip(mask.iter()).all(|(z, &on)| on || *z == C64::new(0.0, 0.0))
}

/// Analog stage obtained by phase extraction of `target`'s columns,
/// replicated cyclically across `rf_chains` columns and then constrained.
pub fn phase_extraction(target: &CMat, c: &AnalogConstraints) -> Result<CMat> {
    let cols = target.ncols();
    if cols == 0 {
        return Err(Error::invalid("target", "no columns to extract phases from"));
    }
    if target.nrows() != c.antennas() {
        return Err(Error::shape("phase_extraction", c.antennas(), target.nrows()));
    }
    let raw = CMat::from_fn(c.antennas(), c.rf_chains(), |i, j| {
        C64::from_polar(1.0, target[(i, j % cols)].arg())
    });
    quantize_analog(&raw, c)
}
