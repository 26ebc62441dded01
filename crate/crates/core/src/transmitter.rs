//! Fully-digital and hybrid digital/analog transmitters.
//!
//! A transmitter emits `x = sqrt(Ptx) * F * s` where `Ptx = P / B` is the
//! transmit energy per symbol and `F` is either a digital precoder or the
//! product `F_RF * F_BB` of an analog and a digital stage.

use std::str::FromStr;

use rand::Rng;

use crate::analog::{
    full_mask, phase_extraction, quantize_analog, AmplitudeStepping, AnalogConstraints, ConnectionMask, Resolution,
};
use crate::array::ArrayGeometry;
use crate::csi::ChannelStateInformation;
use crate::linalg::{frobenius_sq, is_hermitian_psd, pinv, scaled_identity, svd};
use crate::rng::complex_normal_vector;
use crate::units::PowerUnit;
use crate::{CMat, CVec, Error, Result, C64};

/// Transmit energy per symbol (J) from a power and a symbol bandwidth.
pub fn energy_per_symbol(power: f64, unit: PowerUnit, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid(
            "symbol_bandwidth",
            format!("must be > 0, got {bandwidth}"),
        ));
    }
    Ok(unit.to_watts(power) / bandwidth)
}

/// Scales `f` down so that `||f||_F^2 <= budget`; never scales up.
pub fn enforce_precoder_budget(f: &CMat, budget: f64) -> CMat {
    let energy = frobenius_sq(f);
    if energy <= budget || energy == 0.0 {
        f.clone()
    } else {
        f * C64::new((budget / energy).sqrt(), 0.0)
    }
}

/// Strategies understood by [`Transmitter::configure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitStrategy {
    /// Top right singular vectors of the desired channel, equal power.
    Eigen,
    /// Leading columns of the identity (antenna selection), no CSI needed.
    Identity,
}

impl FromStr for TransmitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen" => Ok(TransmitStrategy::Eigen),
            "identity" => Ok(TransmitStrategy::Identity),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    analog: CMat,
    digital: CMat,
    constraints: AnalogConstraints,
    digital_budget: f64,
}

impl HybridPrecoder {
    pub fn analog(&self) -> &CMat {
        &self.analog
    }

    pub fn digital(&self) -> &CMat {
        &self.digital
    }

    pub fn constraints(&self) -> &AnalogConstraints {
        &self.constraints
    }

    pub fn digital_budget(&self) -> f64 {
        self.digital_budget
    }

    pub fn num_rf_chains(&self) -> usize {
        self.constraints.rf_chains()
    }

    /// `F_RF * F_BB`.
    pub fn effective(&self) -> CMat {
        &self.analog * &self.digital
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Precoder {
    Digital(CMat),
    Hybrid(HybridPrecoder),
}

fn leading_identity(rows: usize, cols: usize) -> CMat {
    CMat::identity(rows, cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    array: ArrayGeometry,
    power_watts: f64,
    bandwidth: f64,
    num_streams: usize,
    symbol_covariance: CMat,
    symbol: Option<CVec>,
    power_budget: f64,
    precoder: Precoder,
    csi: Option<ChannelStateInformation>,
    active: bool,
}

impl Transmitter {
    /// Fully-digital transmitter: 1 W over 1 Hz, one stream.
    pub fn digital(array: ArrayGeometry) -> Self {
        let nt = array.len();
        Transmitter {
            array,
            power_watts: 1.0,
            bandwidth: 1.0,
            num_streams: 1,
            symbol_covariance: scaled_identity(1, 1.0),
            symbol: None,
            power_budget: 1.0,
            precoder: Precoder::Digital(leading_identity(nt, 1)),
            csi: None,
            active: true,
        }
    }

    /// Hybrid transmitter with `rf_chains` fully-connected RF chains and
    /// unbounded phase/amplitude resolution.
    pub fn hybrid(array: ArrayGeometry, rf_chains: usize) -> Result<Self> {
        if rf_chains == 0 {
            return Err(Error::invalid("num_rf_chains", "must be >= 1"));
        }
        let nt = array.len();
        let mut tx = Self::digital(array);
        let constraints = AnalogConstraints::unconstrained(nt, rf_chains);
        tx.precoder = Precoder::Hybrid(HybridPrecoder {
            analog: quantize_analog(&leading_identity(nt, rf_chains), &constraints)?,
            digital: leading_identity(rf_chains, 1),
            constraints,
            digital_budget: 1.0,
        });
        tx.rebalance();
        Ok(tx)
    }

    pub fn array(&self) -> &ArrayGeometry {
        &self.array
    }

    pub fn num_antennas(&self) -> usize {
        self.array.len()
    }

    pub fn num_streams(&self) -> usize {
        self.num_streams
    }

    pub fn transmit_power_watts(&self) -> f64 {
        self.power_watts
    }

    pub fn symbol_bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `Ptx = P / B` in joules.
    pub fn energy_per_symbol(&self) -> f64 {
        self.power_watts / self.bandwidth
    }

    pub fn symbol_covariance(&self) -> &CMat {
        &self.symbol_covariance
    }

    pub fn symbol(&self) -> Option<&CVec> {
        self.symbol.as_ref()
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn precoder_state(&self) -> &Precoder {
        &self.precoder
    }

    pub fn is_hybrid(&self) -> bool {
        matches!(self.precoder, Precoder::Hybrid(_))
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn csi(&self) -> Option<&ChannelStateInformation> {
        self.csi.as_ref()
    }

    /// Effective `Nt x Ns` precoder.
    pub fn precoder(&self) -> CMat {
        match &self.precoder {
            Precoder::Digital(f) => f.clone(),
            Precoder::Hybrid(h) => h.effective(),
        }
    }

    pub fn set_transmit_power(&mut self, value: f64, unit: PowerUnit) -> Result<()> {
        let watts = unit.to_watts(value);
        if !(watts >= 0.0) || !watts.is_finite() {
            return Err(Error::invalid("transmit_power", format!("must be >= 0, got {value}")));
        }
        self.power_watts = watts;
        Ok(())
    }

    pub fn set_symbol_bandwidth(&mut self, hz: f64) -> Result<()> {
        if !(hz > 0.0) || !hz.is_finite() {
            return Err(Error::invalid("symbol_bandwidth", format!("must be > 0, got {hz}")));
        }
        self.bandwidth = hz;
        Ok(())
    }

    /// Changes the stream count. Resets `Rs = I / Ns`, the budget to `Ns`, the
    /// symbol, and the precoder to its default shape.
    pub fn set_num_streams(&mut self, ns: usize) -> Result<()> {
        if ns == 0 {
            return Err(Error::invalid("num_streams", "must be >= 1"));
        }
        self.num_streams = ns;
        self.symbol_covariance = scaled_identity(ns, 1.0 / ns as f64);
        self.power_budget = ns as f64;
        self.symbol = None;
        self.reset_precoder();
        Ok(())
    }

    /// Replaces the antenna array; the precoder (and connection mask) are reset.
    pub fn set_array(&mut self, array: ArrayGeometry) {
        self.array = array;
        if let Precoder::Hybrid(h) = &mut self.precoder {
            h.constraints.mask = full_mask(self.array.len(), h.constraints.rf_chains());
        }
        self.reset_precoder();
    }

    fn reset_precoder(&mut self) {
        let nt = self.array.len();
        let ns = self.num_streams;
        match &mut self.precoder {
            Precoder::Digital(f) => *f = leading_identity(nt, ns),
            Precoder::Hybrid(h) => {
                let lt = h.constraints.rf_chains();
                h.analog =
                    quantize_analog(&leading_identity(nt, lt), &h.constraints).expect("mask shape tracks the array");
                h.digital = leading_identity(lt, ns);
                h.digital_budget = h.digital_budget.max(ns as f64);
            }
        }
        if !self.active {
            self.zero_precoder();
        }
        self.rebalance();
    }

    pub fn set_symbol_covariance(&mut self, rs: CMat) -> Result<()> {
        let ns = self.num_streams;
        if rs.shape() != (ns, ns) {
            return Err(Error::shape(
                "symbol_covariance",
                format!("{ns}x{ns}"),
                format!("{:?}", rs.shape()),
            ));
        }
        if !is_hermitian_psd(&rs, 1e-12) {
            return Err(Error::invalid(
                "symbol_covariance",
                "must be Hermitian positive semidefinite",
            ));
        }
        self.symbol_covariance = rs;
        Ok(())
    }

    pub fn set_transmit_symbol(&mut self, s: CVec) -> Result<()> {
        if s.len() != self.num_streams {
            return Err(Error::shape("transmit_symbol", self.num_streams, s.len()));
        }
        self.symbol = Some(s);
        Ok(())
    }

    /// Draws `s ~ CN(0, Rs)` and stores it as the transmit symbol.
    pub fn draw_symbol<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &CVec {
        let z = complex_normal_vector(rng, self.num_streams, 1.0);
        let l = match nalgebra::Cholesky::new(self.symbol_covariance.clone()) {
            Some(c) => c.unpack(),
            // semidefinite: fall back to a Hermitian square root
            None => {
                let eig = crate::linalg::hermitian_part(&self.symbol_covariance).symmetric_eigen();
                let d = eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0));
                &eig.eigenvectors * CMat::from_diagonal(&d)
            }
        };
        self.symbol.insert(l * z)
    }

    pub fn set_power_budget(&mut self, budget: f64) -> Result<()> {
        if !(budget > 0.0) {
            return Err(Error::invalid("power_budget", format!("must be > 0, got {budget}")));
        }
        self.power_budget = budget;
        self.rebalance();
        Ok(())
    }

    pub fn set_csi(&mut self, csi: ChannelStateInformation) -> Result<()> {
        let nt = self.num_antennas();
        if csi.desired.channel.ncols() != nt {
            return Err(Error::shape("csi channel columns", nt, csi.desired.channel.ncols()));
        }
        self.csi = Some(csi);
        Ok(())
    }

    /// Sets a fully-digital precoder, scaled down to the budget if needed.
    pub fn set_precoder(&mut self, f: CMat) -> Result<()> {
        let expected = (self.num_antennas(), self.num_streams);
        if f.shape() != expected {
            return Err(Error::shape(
                "precoder",
                format!("{expected:?}"),
                format!("{:?}", f.shape()),
            ));
        }
        match &mut self.precoder {
            Precoder::Digital(cur) => *cur = enforce_precoder_budget(&f, self.power_budget),
            Precoder::Hybrid(_) => {
                return Err(Error::Capability(
                    "hybrid transmitters take separate analog and digital precoders".into(),
                ))
            }
        }
        self.active = true;
        Ok(())
    }

    fn hybrid_mut(&mut self) -> Result<&mut HybridPrecoder> {
        match &mut self.precoder {
            Precoder::Hybrid(h) => Ok(h),
            Precoder::Digital(_) => Err(Error::Capability("transmitter is fully digital".into())),
        }
    }

    pub fn set_precoder_analog(&mut self, f_rf: CMat) -> Result<()> {
        let h = self.hybrid_mut()?;
        h.analog = quantize_analog(&f_rf, &h.constraints)?;
        self.active = true;
        self.rebalance();
        Ok(())
    }

    pub fn set_precoder_digital(&mut self, f_bb: CMat) -> Result<()> {
        let ns = self.num_streams;
        let h = self.hybrid_mut()?;
        let expected = (h.constraints.rf_chains(), ns);
        if f_bb.shape() != expected {
            return Err(Error::shape(
                "digital precoder",
                format!("{expected:?}"),
                format!("{:?}", f_bb.shape()),
            ));
        }
        h.digital = f_bb;
        self.active = true;
        self.rebalance();
        Ok(())
    }

    pub fn set_num_rf_chains(&mut self, lt: usize) -> Result<()> {
        if lt == 0 {
            return Err(Error::invalid("num_rf_chains", "must be >= 1"));
        }
        let nt = self.num_antennas();
        let h = self.hybrid_mut()?;
        h.constraints.mask = full_mask(nt, lt);
        self.reset_precoder();
        Ok(())
    }

    pub fn set_connections(&mut self, mask: ConnectionMask) -> Result<()> {
        let h = self.hybrid_mut()?;
        if mask.shape() != h.constraints.mask.shape() {
            return Err(Error::shape(
                "connection mask",
                format!("{:?}", h.constraints.mask.shape()),
                format!("{:?}", mask.shape()),
            ));
        }
        h.constraints.mask = mask;
        h.analog = quantize_analog(&h.analog, &h.constraints)?;
        self.rebalance();
        Ok(())
    }

    pub fn set_analog_resolution(
        &mut self,
        phase_bits: Resolution,
        amplitude_bits: Resolution,
        stepping: AmplitudeStepping,
    ) -> Result<()> {
        let h = self.hybrid_mut()?;
        h.constraints.phase_bits = phase_bits;
        h.constraints.amplitude_bits = amplitude_bits;
        h.constraints.stepping = stepping;
        h.analog = quantize_analog(&h.analog, &h.constraints)?;
        self.rebalance();
        Ok(())
    }

    pub fn set_log_dynamic_range_db(&mut self, range_db: f64) -> Result<()> {
        if !(range_db > 0.0) {
            return Err(Error::invalid(
                "log_dynamic_range_db",
                format!("must be > 0, got {range_db}"),
            ));
        }
        let h = self.hybrid_mut()?;
        h.constraints.log_dynamic_range_db = range_db;
        h.analog = quantize_analog(&h.analog, &h.constraints)?;
        self.rebalance();
        Ok(())
    }

    pub fn set_digital_power_budget(&mut self, budget: f64) -> Result<()> {
        if !(budget > 0.0) {
            return Err(Error::invalid(
                "digital_power_budget",
                format!("must be > 0, got {budget}"),
            ));
        }
        self.hybrid_mut()?.digital_budget = budget;
        self.rebalance();
        Ok(())
    }

    /// Keeps `||F_BB||^2 <= digital budget` and `||F_RF F_BB||^2 <= E` by
    /// scaling the digital stage down.
    fn rebalance(&mut self) {
        let budget = self.power_budget;
        match &mut self.precoder {
            Precoder::Digital(f) => *f = enforce_precoder_budget(f, budget),
            Precoder::Hybrid(h) => {
                h.digital = enforce_precoder_budget(&h.digital, h.digital_budget);
                let eff = frobenius_sq(&h.effective());
                if eff > budget {
                    h.digital *= C64::new((budget / eff).sqrt(), 0.0);
                }
            }
        }
    }

    fn zero_precoder(&mut self) {
        match &mut self.precoder {
            Precoder::Digital(f) => f.fill(C64::new(0.0, 0.0)),
            Precoder::Hybrid(h) => h.digital.fill(C64::new(0.0, 0.0)),
        }
    }

    /// Zeroes the precoder. Strategy configuration leaves an inactive
    /// transmitter silent until [`Transmitter::turn_on`].
    pub fn turn_off(&mut self) {
        self.active = false;
        self.zero_precoder();
    }

    /// Re-enables a turned-off transmitter with the default precoder.
    pub fn turn_on(&mut self) {
        if !self.active {
            self.active = true;
            self.reset_precoder();
        }
    }

    /// `x = sqrt(Ptx) F s`.
    pub fn transmit(&self, s: &CVec) -> Result<CVec> {
        if s.len() != self.num_streams {
            return Err(Error::shape("transmit symbol", self.num_streams, s.len()));
        }
        let f = self.precoder();
        Ok((f * s) * C64::new(self.energy_per_symbol().sqrt(), 0.0))
    }

    /// Transmits the stored symbol.
    pub fn transmit_symbol(&self) -> Result<CVec> {
        let s = self
            .symbol
            .as_ref()
            .ok_or_else(|| Error::MissingState("transmit symbol not set".into()))?;
        self.transmit(s)
    }

    pub fn configure(&mut self, strategy: &str) -> Result<()> {
        match strategy.parse::<TransmitStrategy>()? {
            TransmitStrategy::Eigen => self.configure_eigen(),
            TransmitStrategy::Identity => {
                if self.active {
                    self.reset_precoder();
                }
                Ok(())
            }
        }
    }

    /// Eigen-beamforming against the desired channel in the stored CSI.
    ///
    /// Digital: `F = sqrt(E / Ns) V_s`. Hybrid: the analog stage takes the
    /// phases of that target (masked and quantized) and the digital stage is
    /// its least-squares fit `F_RF^+ F`, then scaled to the budgets.
    pub fn configure_eigen(&mut self) -> Result<()> {
        let csi = self
            .csi
            .as_ref()
            .ok_or_else(|| Error::MissingState("transmitter has no channel state information".into()))?;
        let h = &csi.desired.channel;
        let nt = self.num_antennas();
        if h.ncols() != nt {
            return Err(Error::shape("csi channel columns", nt, h.ncols()));
        }
        let ns = self.num_streams;
        let support = h.nrows().min(h.ncols());
        if ns > support {
            return Err(Error::invalid(
                "num_streams",
                format!("{ns} streams exceed the {support} available eigenmodes"),
            ));
        }
        let v = svd(h).v;
        let target = v.columns(0, ns) * C64::new((self.power_budget / ns as f64).sqrt(), 0.0);
        if !self.active {
            return Ok(());
        }
        match &mut self.precoder {
            Precoder::Digital(f) => *f = target,
            Precoder::Hybrid(hp) => {
                if ns > hp.constraints.rf_chains() {
                    return Err(Error::invalid(
                        "num_streams",
                        format!("{ns} streams exceed {} RF chains", hp.constraints.rf_chains()),
                    ));
                }
                hp.analog = phase_extraction(&target, &hp.constraints)?;
                hp.digital = pinv(&hp.analog) * &target;
            }
        }
        self.rebalance();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analog::{on_phase_grid, respects_mask, subarray_mask};
    use crate::array::Axis;
    use crate::csi::CsiEntry;
    use crate::rng::{complex_normal_matrix, substream};
    use proptest::prelude::*;

    fn csi_for(h: CMat) -> ChannelStateInformation {
        let nt = h.ncols();
        ChannelStateInformation {
            desired: CsiEntry {
                channel: h,
                large_scale_gain: 1.0,
                transmit_energy: 1.0,
                precoder: CMat::identity(nt, 1),
                symbol_covariance: scaled_identity(1, 1.0),
            },
            interferers: vec![],
            noise_variance: 1.0,
        }
    }

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            values.len(),
            values.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    #[test]
    fn energy_per_symbol_examples() {
        assert_eq!(energy_per_symbol(1.0, PowerUnit::Watts, 1.0).unwrap(), 1.0);
        let e = energy_per_symbol(0.0, PowerUnit::DBm, 50e6).unwrap();
        assert!((e - 2e-11).abs() < 1e-24);
        assert!((energy_per_symbol(30.0, PowerUnit::DBm, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(energy_per_symbol(1.0, PowerUnit::Watts, 0.0).is_err());
    }

    #[test]
    fn budget_enforcement() {
        let f = diag(&[0.5f64.sqrt()]);
        assert_eq!(enforce_precoder_budget(&f, 1.0), f);
        let f = diag(&[2.0]);
        assert_eq!(enforce_precoder_budget(&f, 1.0), diag(&[1.0]));
        let z = CMat::zeros(2, 2);
        assert_eq!(enforce_precoder_budget(&z, 1.0), z);
    }

    #[test]
    fn stream_count_resets_covariance_and_budget() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(4, Axis::X));
        tx.set_num_streams(4).unwrap();
        assert_eq!(tx.symbol_covariance(), &scaled_identity(4, 0.25));
        assert_eq!(tx.power_budget(), 4.0);
        assert_eq!(tx.precoder().shape(), (4, 4));
        assert!(tx.set_num_streams(0).is_err());
    }

    #[test]
    fn covariance_validation() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(2, Axis::X));
        tx.set_num_streams(2).unwrap();
        let mut bad = scaled_identity(2, 0.5);
        bad[(0, 1)] = C64::new(0.1, 0.0);
        assert!(tx.set_symbol_covariance(bad).is_err());
        assert!(tx.set_symbol_covariance(diag(&[1.0, -1.0])).is_err());
        assert!(tx.set_symbol_covariance(scaled_identity(3, 1.0)).is_err());
        assert!(tx.set_symbol_covariance(diag(&[0.7, 0.3])).is_ok());
    }

    #[test]
    fn transmit_examples() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(1, Axis::X));
        tx.set_transmit_power(4.0, PowerUnit::Watts).unwrap();
        let s = CVec::from_element(1, C64::new(1.0, 0.0));
        assert_eq!(tx.transmit(&s).unwrap()[0], C64::new(2.0, 0.0));
        tx.turn_off();
        assert_eq!(tx.transmit(&s).unwrap()[0], C64::new(0.0, 0.0));
        assert!(tx.transmit(&CVec::zeros(2)).is_err());
        assert!(tx.transmit_symbol().is_err());
    }

    #[test]
    fn turned_off_stays_silent_through_configuration() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(2, Axis::X));
        tx.set_csi(csi_for(diag(&[3.0, 1.0]))).unwrap();
        tx.turn_off();
        tx.configure("eigen").unwrap();
        assert_eq!(frobenius_sq(&tx.precoder()), 0.0);
        tx.turn_on();
        tx.configure("eigen").unwrap();
        assert!((frobenius_sq(&tx.precoder()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_transmit_energy_matches_power() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(4, Axis::X));
        tx.set_num_streams(2).unwrap();
        tx.set_transmit_power(3.0, PowerUnit::Watts).unwrap();
        let f = complex_normal_matrix(&mut substream(1, "f"), 4, 2, 1.0);
        let f = &f * C64::new((2.0 / frobenius_sq(&f)).sqrt(), 0.0);
        tx.set_precoder(f).unwrap();
        // trace identity Ptx tr(F Rs F^H)
        let fp = tx.precoder();
        let tr = (&fp * tx.symbol_covariance() * fp.adjoint()).trace().re * tx.energy_per_symbol();
        assert!((tr - 3.0).abs() < 1e-12);
        // statistical
        let mut rng = substream(2, "s");
        let n = 50_000;
        let mut acc = 0.0;
        for _ in 0..n {
            tx.draw_symbol(&mut rng);
            acc += tx.transmit_symbol().unwrap().norm_squared();
        }
        assert!((acc / n as f64 / 3.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn eigen_examples() {
        let mut tx = Transmitter::digital(ArrayGeometry::ula(1, Axis::X));
        tx.set_csi(csi_for(CMat::from_element(1, 1, C64::new(0.3, -0.4))))
            .unwrap();
        tx.configure("eigen").unwrap();
        assert!((tx.precoder()[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let mut tx = Transmitter::digital(ArrayGeometry::ula(2, Axis::X));
        tx.set_csi(csi_for(diag(&[3.0, 1.0]))).unwrap();
        tx.configure_eigen().unwrap();
        let f = tx.precoder();
        assert!((f[(0, 0)].norm() - 1.0).abs() < 1e-12 && f[(1, 0)].norm() < 1e-12);

        tx.set_num_streams(3).unwrap();
        assert!(tx.configure_eigen().is_err());
        assert!(matches!(tx.configure("zf-magic"), Err(Error::UnknownStrategy(s)) if s == "zf-magic"));
    }

    #[test]
    fn hybrid_eigen_respects_constraints() {
        let h = complex_normal_matrix(&mut substream(3, "h"), 4, 8, 1.0);
        let mut tx = Transmitter::hybrid(ArrayGeometry::ula(8, Axis::X), 2).unwrap();
        tx.set_num_streams(2).unwrap();
        tx.set_connections(subarray_mask(8, 2)).unwrap();
        tx.set_analog_resolution(Resolution::Bits(3), Resolution::Bits(0), AmplitudeStepping::Linear)
            .unwrap();
        tx.set_csi(csi_for(h)).unwrap();
        tx.configure("eigen").unwrap();
        let Precoder::Hybrid(hp) = tx.precoder_state() else {
            unreachable!()
        };
        assert!(respects_mask(hp.analog(), &subarray_mask(8, 2)));
        assert!(on_phase_grid(hp.analog(), 3, 1e-12));
        assert!(frobenius_sq(&tx.precoder()) <= tx.power_budget() + 1e-9);
        assert!(frobenius_sq(hp.digital()) <= hp.digital_budget() + 1e-9);
    }

    #[test]
    fn hybrid_with_identity_analog_matches_digital() {
        let mut tx = Transmitter::hybrid(ArrayGeometry::ula(2, Axis::X), 2).unwrap();
        tx.set_num_streams(2).unwrap();
        tx.set_precoder_analog(CMat::identity(2, 2)).unwrap();
        let f = complex_normal_matrix(&mut substream(4, "f"), 2, 2, 0.2);
        tx.set_precoder_digital(f.clone()).unwrap();
        assert_eq!(tx.precoder(), enforce_precoder_budget(&f, 2.0));
        assert!(tx.set_precoder(f).is_err());
    }

    proptest! {
        #[test]
        fn any_precoder_respects_budget(seed in any::<u64>(), scale in 0.01f64..100.0, hybrid in any::<bool>()) {
            let mut rng = substream(seed, "p");
            let mut tx = if hybrid {
                Transmitter::hybrid(ArrayGeometry::ula(4, Axis::X), 3).unwrap()
            } else {
                Transmitter::digital(ArrayGeometry::ula(4, Axis::X))
            };
            tx.set_num_streams(2).unwrap();
            if hybrid {
                tx.set_precoder_analog(complex_normal_matrix(&mut rng, 4, 3, scale)).unwrap();
                tx.set_precoder_digital(complex_normal_matrix(&mut rng, 3, 2, scale)).unwrap();
            } else {
                tx.set_precoder(complex_normal_matrix(&mut rng, 4, 2, scale)).unwrap();
            }
            prop_assert!(frobenius_sq(&tx.precoder()) <= tx.power_budget() + 1e-9);
        }

        #[test]
        fn transmit_is_linear(seed in any::<u64>()) {
            let mut rng = substream(seed, "lin");
            let mut tx = Transmitter::digital(ArrayGeometry::ula(3, Axis::X));
            tx.set_num_streams(2).unwrap();
            tx.set_precoder(complex_normal_matrix(&mut rng, 3, 2, 0.3)).unwrap();
            let s1 = complex_normal_vector(&mut rng, 2, 1.0);
            let s2 = complex_normal_vector(&mut rng, 2, 1.0);
            let lhs = tx.transmit(&(&s1 + &s2)).unwrap();
            let rhs = tx.transmit(&s1).unwrap() + tx.transmit(&s2).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
