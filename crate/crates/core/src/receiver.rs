//! Additive noise and digital/hybrid combining, `s_hat = W^H (y + n)`.

use std::str::FromStr;

use rand::Rng;

use crate::analog::{
    full_mask, phase_extraction, quantize_analog, AmplitudeStepping, AnalogConstraints, ConnectionMask, Resolution,
};
use crate::array::ArrayGeometry;
use crate::csi::ChannelStateInformation;
use crate::linalg::{pinv, scaled_identity, svd};
use crate::rng::complex_normal_vector;
use crate::units::{psd_from_dbm_hz, psd_to_dbm_hz};
use crate::{CMat, CVec, Error, Result};

/// Draws `n ~ CN(0, psd * I)` of length `nr`.
pub fn draw_noise<R: Rng + ?Sized>(psd: f64, nr: usize, rng: &mut R) -> Result<CVec> {
    if !(psd > 0.0) || !psd.is_finite() {
        return Err(Error::invalid("noise_psd", format!("must be > 0, got {psd}")));
    }
    Ok(complex_normal_vector(rng, nr, psd))
}

/// `W^H r`.
pub fn apply_combiner(w: &CMat, r: &CVec) -> Result<CVec> {
    if w.nrows() != r.len() {
        return Err(Error::shape("combiner rows", w.nrows(), r.len()));
    }
    Ok(w.adjoint() * r)
}

/// Covariance of `y + n` implied by CSI: `A Rs A^H [+ sum A_k Rs_k A_k^H] + sigma^2 I`.
pub fn observation_covariance(csi: &ChannelStateInformation, include_interference: bool) -> CMat {
    let a = csi.desired.precoded_channel();
    let mut r = &a * &csi.desired.symbol_covariance * a.adjoint();
    if include_interference {
        for k in &csi.interferers {
            let ak = k.precoded_channel();
            r += &ak * &k.symbol_covariance * ak.adjoint();
        }
    }
    r + scaled_identity(a.nrows(), csi.noise_variance)
}

/// Closed-form `E||W^H (y+n) - s||^2` under the CSI's second-order statistics.
pub fn combiner_mse(w: &CMat, csi: &ChannelStateInformation, include_interference: bool) -> f64 {
    let a = csi.desired.precoded_channel();
    let rs = &csi.desired.symbol_covariance;
    let r = observation_covariance(csi, include_interference);
    let wh = w.adjoint();
    (&wh * r * w).trace().re - 2.0 * (&wh * &a * rs).trace().re + rs.trace().re
}

/// Linear MMSE combiner `R^-1 A Rs`.
pub fn mmse_combiner(csi: &ChannelStateInformation, include_interference: bool) -> Result<CMat> {
    let a = csi.desired.precoded_channel();
    let r = observation_covariance(csi, include_interference);
    let rhs = &a * &csi.desired.symbol_covariance;
    let chol = nalgebra::Cholesky::new(r)
        .ok_or_else(|| Error::Singular("receive covariance is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiveStrategy {
    Eigen,
    /// LMMSE ignoring interference.
    Mmse,
    /// LMMSE including interferers listed in the CSI.
    MmseInterference,
}

impl FromStr for ReceiveStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen" => Ok(ReceiveStrategy::Eigen),
            "mmse" => Ok(ReceiveStrategy::Mmse),
            "mmse-int" => Ok(ReceiveStrategy::MmseInterference),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridCombiner {
    analog: CMat,
    digital: CMat,
    constraints: AnalogConstraints,
}

impl HybridCombiner {
    pub fn analog(&self) -> &CMat {
        &self.analog
    }

    pub fn digital(&self) -> &CMat {
        &self.digital
    }

    pub fn constraints(&self) -> &AnalogConstraints {
        &self.constraints
    }

    /// `W_RF * W_BB`.
    pub fn effective(&self) -> CMat {
        &self.analog * &self.digital
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Digital(CMat),
    Hybrid(HybridCombiner),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    array: ArrayGeometry,
    noise_psd: f64,
    bandwidth: f64,
    num_streams: usize,
    combiner: Combiner,
    received: Option<CVec>,
    noise: Option<CVec>,
    csi: Option<ChannelStateInformation>,
}

impl Receiver {
    /// Fully-digital receiver with unit noise energy and one stream.
    pub fn digital(array: ArrayGeometry) -> Self {
        let nr = array.len();
        Receiver {
            array,
            noise_psd: 1.0,
            bandwidth: 1.0,
            num_streams: 1,
            combiner: Combiner::Digital(CMat::identity(nr, 1)),
            received: None,
            noise: None,
            csi: None,
        }
    }

    pub fn hybrid(array: ArrayGeometry, rf_chains: usize) -> Result<Self> {
        if rf_chains == 0 {
            return Err(Error::invalid("num_rf_chains", "must be >= 1"));
        }
        let nr = array.len();
        let mut rx = Self::digital(array);
        let constraints = AnalogConstraints::unconstrained(nr, rf_chains);
        rx.combiner = Combiner::Hybrid(HybridCombiner {
            analog: quantize_analog(&CMat::identity(nr, rf_chains), &constraints)?,
            digital: CMat::identity(rf_chains, 1),
            constraints,
        });
        Ok(rx)
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

    /// Noise energy per symbol (J).
    pub fn noise_psd(&self) -> f64 {
        self.noise_psd
    }

    pub fn noise_psd_dbm_hz(&self) -> f64 {
        psd_to_dbm_hz(self.noise_psd)
    }

    pub fn symbol_bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `psd * B` in watts.
    pub fn effective_noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    pub fn combiner_state(&self) -> &Combiner {
        &self.combiner
    }

    pub fn is_hybrid(&self) -> bool {
        matches!(self.combiner, Combiner::Hybrid(_))
    }

    pub fn csi(&self) -> Option<&ChannelStateInformation> {
        self.csi.as_ref()
    }

    pub fn received_signal(&self) -> Option<&CVec> {
        self.received.as_ref()
    }

    pub fn noise(&self) -> Option<&CVec> {
        self.noise.as_ref()
    }

    /// Effective `Nr x Ns` combiner.
    pub fn combiner(&self) -> CMat {
        match &self.combiner {
            Combiner::Digital(w) => w.clone(),
            Combiner::Hybrid(h) => h.effective(),
        }
    }

    pub fn set_noise_psd_dbm_hz(&mut self, dbm_per_hz: f64) -> Result<()> {
        self.set_noise_psd(psd_from_dbm_hz(dbm_per_hz))
    }

    pub fn set_noise_psd(&mut self, joules: f64) -> Result<()> {
        if !(joules > 0.0) || !joules.is_finite() {
            return Err(Error::invalid("noise_psd", format!("must be > 0, got {joules}")));
        }
        self.noise_psd = joules;
        Ok(())
    }

    pub fn set_symbol_bandwidth(&mut self, hz: f64) -> Result<()> {
        if !(hz > 0.0) || !hz.is_finite() {
            return Err(Error::invalid("symbol_bandwidth", format!("must be > 0, got {hz}")));
        }
        self.bandwidth = hz;
        Ok(())
    }

    pub fn set_num_streams(&mut self, ns: usize) -> Result<()> {
        if ns == 0 {
            return Err(Error::invalid("num_streams", "must be >= 1"));
        }
        self.num_streams = ns;
        self.reset_combiner();
        Ok(())
    }

    pub fn set_array(&mut self, array: ArrayGeometry) {
        self.array = array;
        if let Combiner::Hybrid(h) = &mut self.combiner {
            h.constraints.mask = full_mask(self.array.len(), h.constraints.rf_chains());
        }
        self.reset_combiner();
    }

    fn reset_combiner(&mut self) {
        let nr = self.array.len();
        let ns = self.num_streams;
        match &mut self.combiner {
            Combiner::Digital(w) => *w = CMat::identity(nr, ns),
            Combiner::Hybrid(h) => {
                let lr = h.constraints.rf_chains();
                h.analog =
                    quantize_analog(&CMat::identity(nr, lr), &h.constraints).expect("mask shape tracks the array");
                h.digital = CMat::identity(lr, ns);
            }
        }
        self.received = None;
        self.noise = None;
    }

    pub fn set_combiner(&mut self, w: CMat) -> Result<()> {
        let expected = (self.num_antennas(), self.num_streams);
        if w.shape() != expected {
            return Err(Error::shape(
                "combiner",
                format!("{expected:?}"),
                format!("{:?}", w.shape()),
            ));
        }
        match &mut self.combiner {
            Combiner::Digital(cur) => *cur = w,
            Combiner::Hybrid(_) => {
                return Err(Error::Capability(
                    "hybrid receivers take separate analog and digital combiners".into(),
                ))
            }
        }
        Ok(())
    }

    fn hybrid_mut(&mut self) -> Result<&mut HybridCombiner> {
        match &mut self.combiner {
            Combiner::Hybrid(h) => Ok(h),
            Combiner::Digital(_) => Err(Error::Capability("receiver is fully digital".into())),
        }
    }

    pub fn set_combiner_analog(&mut self, w_rf: CMat) -> Result<()> {
        let h = self.hybrid_mut()?;
        h.analog = quantize_analog(&w_rf, &h.constraints)?;
        Ok(())
    }

    pub fn set_combiner_digital(&mut self, w_bb: CMat) -> Result<()> {
        let ns = self.num_streams;
        let h = self.hybrid_mut()?;
        let expected = (h.constraints.rf_chains(), ns);
        if w_bb.shape() != expected {
            return Err(Error::shape(
                "digital combiner",
                format!("{expected:?}"),
                format!("{:?}", w_bb.shape()),
            ));
        }
        h.digital = w_bb;
        Ok(())
    }

    pub fn set_num_rf_chains(&mut self, lr: usize) -> Result<()> {
        if lr == 0 {
            return Err(Error::invalid("num_rf_chains", "must be >= 1"));
        }
        let nr = self.num_antennas();
        self.hybrid_mut()?.constraints.mask = full_mask(nr, lr);
        self.reset_combiner();
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
        Ok(())
    }

    pub fn set_csi(&mut self, csi: ChannelStateInformation) -> Result<()> {
        let nr = self.num_antennas();
        if csi.desired.channel.nrows() != nr {
            return Err(Error::shape("csi channel rows", nr, csi.desired.channel.nrows()));
        }
        self.csi = Some(csi);
        Ok(())
    }

    /// Stores the noiseless received signal `y`; clears any previous noise.
    pub fn set_received_signal(&mut self, y: CVec) -> Result<()> {
        if y.len() != self.num_antennas() {
            return Err(Error::shape("received signal", self.num_antennas(), y.len()));
        }
        self.received = Some(y);
        self.noise = None;
        Ok(())
    }

    /// Forgets `y` and `n`; used when the channel is re-realized.
    pub fn clear_signals(&mut self) {
        self.received = None;
        self.noise = None;
    }

    pub fn set_noise(&mut self, n: CVec) -> Result<()> {
        if n.len() != self.num_antennas() {
            return Err(Error::shape("noise", self.num_antennas(), n.len()));
        }
        self.noise = Some(n);
        Ok(())
    }

    /// Draws and stores a fresh noise vector.
    pub fn draw_noise<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&CVec> {
        let n = draw_noise(self.noise_psd, self.num_antennas(), rng)?;
        Ok(self.noise.insert(n))
    }

    /// `W^H (y + n)`; absent noise counts as zero.
    pub fn combine(&self) -> Result<CVec> {
        let y = self
            .received
            .as_ref()
            .ok_or_else(|| Error::MissingState("received signal not set".into()))?;
        let r = match &self.noise {
            Some(n) => y + n,
            None => y.clone(),
        };
        apply_combiner(&self.combiner(), &r)
    }

    pub fn configure(&mut self, strategy: &str) -> Result<()> {
        match strategy.parse::<ReceiveStrategy>()? {
            ReceiveStrategy::Eigen => self.configure_eigen(),
            ReceiveStrategy::Mmse => self.configure_mmse(false),
            ReceiveStrategy::MmseInterference => self.configure_mmse(true),
        }
    }

    fn require_csi(&self) -> Result<&ChannelStateInformation> {
        self.csi
            .as_ref()
            .ok_or_else(|| Error::MissingState("receiver has no channel state information".into()))
    }

    fn dominant_left(&self) -> Result<CMat> {
        let csi = self.require_csi()?;
        let h = &csi.desired.channel;
        let ns = self.num_streams;
        let support = h.nrows().min(h.ncols());
        if ns > support {
            return Err(Error::invalid(
                "num_streams",
                format!("{ns} streams exceed the {support} available eigenmodes"),
            ));
        }
        Ok(svd(h).u.columns(0, ns).into_owned())
    }

    fn check_rf_chains(&self) -> Result<()> {
        if let Combiner::Hybrid(h) = &self.combiner {
            if self.num_streams > h.constraints.rf_chains() {
                return Err(Error::invalid(
                    "num_streams",
                    format!(
                        "{} streams exceed {} RF chains",
                        self.num_streams,
                        h.constraints.rf_chains()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// `W = U_s` of the desired `G H`; hybrid fits `W_RF W_BB` to it.
    pub fn configure_eigen(&mut self) -> Result<()> {
        let target = self.dominant_left()?;
        self.check_rf_chains()?;
        match &mut self.combiner {
            Combiner::Digital(w) => *w = target,
            Combiner::Hybrid(h) => {
                h.analog = phase_extraction(&target, &h.constraints)?;
                h.digital = pinv(&h.analog) * &target;
            }
        }
        Ok(())
    }

    /// LMMSE combiner. Hybrid: analog stage from the eigen combiner's phases,
    /// digital stage the LMMSE estimator on `W_RF^H (y + n)`.
    pub fn configure_mmse(&mut self, include_interference: bool) -> Result<()> {
        let csi = self.require_csi()?;
        let ns = csi.desired.precoder.ncols();
        if ns != self.num_streams {
            return Err(Error::shape("csi precoder columns", self.num_streams, ns));
        }
        match &self.combiner {
            Combiner::Digital(_) => {
                let w = mmse_combiner(csi, include_interference)?;
                self.combiner = Combiner::Digital(w);
            }
            Combiner::Hybrid(_) => {
                let target = self.dominant_left()?;
                self.check_rf_chains()?;
                let csi = self.require_csi()?;
                let a = csi.desired.precoded_channel();
                let r = observation_covariance(csi, include_interference);
                let Combiner::Hybrid(h) = &self.combiner else {
                    unreachable!()
                };
                let w_rf = phase_extraction(&target, &h.constraints)?;
                let w_rf_h = w_rf.adjoint();
                let r_proj = &w_rf_h * r * &w_rf;
                let w_bb = pinv(&r_proj) * (&w_rf_h * a * &csi.desired.symbol_covariance);
                let Combiner::Hybrid(h) = &mut self.combiner else {
                    unreachable!()
                };
                h.analog = w_rf;
                h.digital = w_bb;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analog::{on_phase_grid, respects_mask, subarray_mask};
    use crate::array::Axis;
    use crate::csi::CsiEntry;
    use crate::linalg::frobenius_sq;
    use crate::rng::{complex_normal_matrix, substream};
    use crate::C64;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn entry(h: CMat, f: CMat, ptx: f64) -> CsiEntry {
        let ns = f.ncols();
        CsiEntry {
            channel: h,
            large_scale_gain: 1.0,
            transmit_energy: ptx,
            precoder: f,
            symbol_covariance: scaled_identity(ns, 1.0 / ns as f64),
        }
    }

    fn csi(h: CMat, f: CMat, sigma2: f64) -> ChannelStateInformation {
        ChannelStateInformation {
            desired: entry(h, f, 1.0),
            interferers: vec![],
            noise_variance: sigma2,
        }
    }

    #[test]
    fn noise_moments() {
        let mut rng = substream(5, "noise");
        let n = 100_000;
        let mut p0 = 0.0;
        let mut cross = C64::new(0.0, 0.0);
        for _ in 0..n {
            let v = draw_noise(2.5, 2, &mut rng).unwrap();
            p0 += v[0].norm_sqr();
            cross += v[0] * v[1].conj();
        }
        assert!((p0 / n as f64 / 2.5 - 1.0).abs() < 0.02);
        // estimator std is 2.5 / sqrt(n)
        assert!((cross / n as f64).norm() < 3.0 * 2.5 / (n as f64).sqrt() * 1.5);
        assert!(draw_noise(0.0, 2, &mut rng).is_err());
    }

    #[test]
    fn combine_examples() {
        let mut rx = Receiver::digital(ArrayGeometry::ula(2, Axis::X));
        rx.set_num_streams(2).unwrap();
        let y = CVec::from_vec(vec![c(1.0), C64::new(0.0, 2.0)]);
        rx.set_received_signal(y.clone()).unwrap();
        assert_eq!(rx.combine().unwrap(), y);

        let mut rx = Receiver::digital(ArrayGeometry::ula(1, Axis::X));
        rx.set_combiner(CMat::from_element(1, 1, c(0.5))).unwrap();
        rx.set_received_signal(CVec::from_element(1, c(1.5))).unwrap();
        rx.set_noise(CVec::from_element(1, c(0.5))).unwrap();
        assert_eq!(rx.combine().unwrap()[0], c(1.0));
        assert!(rx.set_received_signal(CVec::zeros(3)).is_err());
    }

    #[test]
    fn hybrid_identity_analog_reduces_to_digital() {
        let w = complex_normal_matrix(&mut substream(1, "w"), 3, 2, 1.0);
        let y = complex_normal_vector(&mut substream(2, "y"), 3, 1.0);
        let mut hy = Receiver::hybrid(ArrayGeometry::ula(3, Axis::X), 3).unwrap();
        hy.set_num_streams(2).unwrap();
        hy.set_combiner_analog(CMat::identity(3, 3)).unwrap();
        hy.set_combiner_digital(w.clone()).unwrap();
        hy.set_received_signal(y.clone()).unwrap();
        let mut dg = Receiver::digital(ArrayGeometry::ula(3, Axis::X));
        dg.set_num_streams(2).unwrap();
        dg.set_combiner(w).unwrap();
        dg.set_received_signal(y).unwrap();
        assert!((hy.combine().unwrap() - dg.combine().unwrap()).norm() < 1e-14);
    }

    #[test]
    fn eigen_examples() {
        let mut rx = Receiver::digital(ArrayGeometry::ula(1, Axis::X));
        rx.set_csi(csi(
            CMat::from_element(1, 1, C64::new(0.6, 0.8)),
            CMat::identity(1, 1),
            1.0,
        ))
        .unwrap();
        rx.configure("eigen").unwrap();
        assert!((rx.combiner()[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let mut rx = Receiver::digital(ArrayGeometry::ula(2, Axis::X));
        let h = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0), c(1.0)]));
        rx.set_csi(csi(h, CMat::identity(2, 1), 1.0)).unwrap();
        rx.configure_eigen().unwrap();
        let w = rx.combiner();
        assert!((w[(0, 0)].norm() - 1.0).abs() < 1e-12 && w[(1, 0)].norm() < 1e-12);

        let h = complex_normal_matrix(&mut substream(9, "h"), 8, 4, 1.0);
        let mut rx = Receiver::digital(ArrayGeometry::ula(8, Axis::X));
        rx.set_num_streams(4).unwrap();
        rx.set_csi(csi(h, CMat::identity(4, 4), 1.0)).unwrap();
        rx.configure_eigen().unwrap();
        let w = rx.combiner();
        assert!((w.adjoint() * &w - CMat::identity(4, 4)).norm() < 1e-10);
        rx.set_num_streams(5).unwrap();
        assert!(rx.configure_eigen().is_err());
        assert!(matches!(rx.configure("sic"), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn mmse_examples() {
        let mut rx = Receiver::digital(ArrayGeometry::ula(1, Axis::X));
        rx.set_csi(csi(CMat::identity(1, 1), CMat::identity(1, 1), 1.0))
            .unwrap();
        rx.configure("mmse").unwrap();
        assert!((rx.combiner()[(0, 0)] - c(0.5)).norm() < 1e-15);

        rx.set_csi(csi(CMat::identity(1, 1), CMat::identity(1, 1), 1e12))
            .unwrap();
        rx.configure("mmse").unwrap();
        assert!(rx.combiner()[(0, 0)].norm() < 1e-11);
    }

    #[test]
    fn interference_changes_mmse_int_only() {
        let mut rng = substream(11, "int");
        let h = complex_normal_matrix(&mut rng, 4, 2, 1.0);
        let hi = complex_normal_matrix(&mut rng, 4, 2, 1.0);
        let mut info = csi(h, CMat::identity(2, 2), 0.1);
        info.interferers.push(entry(hi, CMat::identity(2, 2), 1.0));
        let mut rx = Receiver::digital(ArrayGeometry::ula(4, Axis::X));
        rx.set_num_streams(2).unwrap();
        rx.set_csi(info.clone()).unwrap();
        rx.configure("mmse").unwrap();
        let plain = rx.combiner();
        rx.configure("mmse-int").unwrap();
        let aware = rx.combiner();
        assert!((plain - &aware).norm() > 1e-6);
        assert!(combiner_mse(&aware, &info, true) <= combiner_mse(&rx.combiner(), &info, true) + 1e-12);
    }

    #[test]
    fn mmse_beats_eigen_in_mse() {
        for seed in 0..20 {
            let mut rng = substream(seed, "cmp");
            let h = complex_normal_matrix(&mut rng, 4, 4, 1.0);
            let f = complex_normal_matrix(&mut rng, 4, 2, 0.5);
            let info = csi(h, f, 0.3);
            let mut rx = Receiver::digital(ArrayGeometry::ula(4, Axis::X));
            rx.set_num_streams(2).unwrap();
            rx.set_csi(info.clone()).unwrap();
            rx.configure("eigen").unwrap();
            let e = combiner_mse(&rx.combiner(), &info, false);
            rx.configure("mmse").unwrap();
            let m = combiner_mse(&rx.combiner(), &info, false);
            assert!(m <= e + 1e-12, "seed {seed}: {m} > {e}");
        }
    }

    #[test]
    fn hybrid_mmse_respects_constraints() {
        let mut rng = substream(12, "hyb");
        let h = complex_normal_matrix(&mut rng, 8, 4, 1.0);
        let mut rx = Receiver::hybrid(ArrayGeometry::ula(8, Axis::X), 4).unwrap();
        rx.set_num_streams(2).unwrap();
        rx.set_connections(subarray_mask(8, 4)).unwrap();
        rx.set_analog_resolution(Resolution::Bits(2), Resolution::Bits(0), AmplitudeStepping::Linear)
            .unwrap();
        let info = csi(h, CMat::identity(4, 2), 0.5);
        rx.set_csi(info.clone()).unwrap();
        rx.configure("mmse").unwrap();
        let Combiner::Hybrid(hc) = rx.combiner_state() else {
            unreachable!()
        };
        assert!(respects_mask(hc.analog(), &subarray_mask(8, 4)));
        assert!(on_phase_grid(hc.analog(), 2, 1e-12));
        // digital stage is optimal given the analog stage
        let w = rx.combiner();
        let base = combiner_mse(&w, &info, false);
        let bump = complex_normal_matrix(&mut rng, 4, 2, 1e-3);
        let w2 = hc.analog() * (hc.digital() + bump);
        assert!(base <= combiner_mse(&w2, &info, false) + 1e-12);
        assert!(frobenius_sq(&w) > 0.0);
    }

    proptest! {
        #[test]
        fn mmse_beats_random_combiners(seed in any::<u64>(), sigma2 in 0.01f64..10.0) {
            let mut rng = substream(seed, "mmse-prop");
            let h = complex_normal_matrix(&mut rng, 3, 3, 1.0);
            let hi = complex_normal_matrix(&mut rng, 3, 2, 1.0);
            let mut info = csi(h, CMat::identity(3, 2), sigma2);
            info.interferers.push(entry(hi, CMat::identity(2, 1), 0.5));
            let w = mmse_combiner(&info, true).unwrap();
            let best = combiner_mse(&w, &info, true);
            for _ in 0..100 {
                let r = complex_normal_matrix(&mut rng, 3, 2, 1.0);
                prop_assert!(best <= combiner_mse(&r, &info, true) + 1e-10);
            }
        }

        #[test]
        fn combine_is_linear(seed in any::<u64>()) {
            let mut rng = substream(seed, "lin");
            let w = complex_normal_matrix(&mut rng, 4, 2, 1.0);
            let a = complex_normal_vector(&mut rng, 4, 1.0);
            let b = complex_normal_vector(&mut rng, 4, 1.0);
            let lhs = apply_combiner(&w, &(&a + &b * c(2.0))).unwrap();
            let rhs = apply_combiner(&w, &a).unwrap() + apply_combiner(&w, &b).unwrap() * c(2.0);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
