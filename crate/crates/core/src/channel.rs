//! Frequency-flat MIMO channel models.
//!
//! Every realization is an `Nr x Nt` complex matrix. All models are scaled so
//! that `E ||H||_F^2 = Nt * Nr`; optionally each realization is additionally
//! rescaled to a fixed energy.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::array::{ArrayGeometry, Direction, Point3};
use crate::linalg::frobenius_sq;
use crate::rng::{complex_normal, complex_normal_matrix};
use crate::{CMat, Error, Result, C64};

pub const DEFAULT_PROPAGATION_VELOCITY: f64 = 3e8;
pub const DEFAULT_ANGLE_SPREAD: f64 = 0.1;

/// Carrier, arrays and device placement a channel lives between.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationContext {
    propagation_velocity: f64,
    carrier_frequency: f64,
    pub tx_array: ArrayGeometry,
    pub rx_array: ArrayGeometry,
    /// Absolute position of the transmit array origin in meters.
    pub tx_position: Point3,
    /// Absolute position of the receive array origin in meters.
    pub rx_position: Point3,
}

impl PropagationContext {
    pub fn new(carrier_frequency: f64, tx_array: ArrayGeometry, rx_array: ArrayGeometry) -> Result<Self> {
        let mut ctx = PropagationContext {
            propagation_velocity: DEFAULT_PROPAGATION_VELOCITY,
            carrier_frequency: 1.0,
            tx_array,
            rx_array,
            tx_position: [0.0; 3],
            rx_position: [0.0; 3],
        };
        ctx.set_carrier_frequency(carrier_frequency)?;
        Ok(ctx)
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

    pub fn propagation_velocity(&self) -> f64 {
        self.propagation_velocity
    }

    pub fn carrier_wavelength(&self) -> f64 {
        self.propagation_velocity / self.carrier_frequency
    }

    pub fn num_tx(&self) -> usize {
        self.tx_array.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_array.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Rayleigh,
    /// Single far-field path with fixed departure/arrival directions.
    Los {
        aod: Direction,
        aoa: Direction,
    },
    /// Mixture of LOS and Rayleigh components. Missing angles are drawn
    /// uniformly on every realization.
    Rician {
        kappa: f64,
        aod: Option<Direction>,
        aoa: Option<Direction>,
    },
    /// Clusters of discrete rays with Laplacian per-ray angle offsets.
    RayCluster {
        num_clusters: usize,
        num_rays: usize,
        angle_spread: f64,
    },
    /// Deterministic near-field model from element-to-element distances.
    SphericalWave,
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Rayleigh => "rayleigh",
            ChannelModel::Los { .. } => "los",
            ChannelModel::Rician { .. } => "rician",
            ChannelModel::RayCluster { .. } => "ray_cluster",
            ChannelModel::SphericalWave => "spherical_wave",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, ChannelModel::SphericalWave)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub model: ChannelModel,
    pub force_normalization: bool,
    /// Target energy under forced normalization; `None` means `Nt * Nr`.
    pub normalized_energy: Option<f64>,
}

impl ChannelSpec {
    pub fn new(model: ChannelModel) -> Self {
        ChannelSpec {
            model,
            force_normalization: false,
            normalized_energy: None,
        }
    }

    pub fn rayleigh() -> Self {
        Self::new(ChannelModel::Rayleigh)
    }

    pub fn with_forced_normalization(mut self, energy: Option<f64>) -> Self {
        self.force_normalization = true;
        self.normalized_energy = energy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.normalized_energy {
            if !(e > 0.0) {
                return Err(Error::invalid("normalized_energy", format!("must be > 0, got {e}")));
            }
        }
        match &self.model {
            ChannelModel::Rician { kappa, .. } if !(*kappa >= 0.0) => {
                Err(Error::invalid("kappa", format!("must be >= 0, got {kappa}")))
            }
            ChannelModel::RayCluster {
                num_clusters,
                num_rays,
                angle_spread,
            } => {
                if *num_clusters == 0 || *num_rays == 0 {
                    Err(Error::invalid("num_clusters/num_rays", "must be >= 1"))
                } else if !(*angle_spread >= 0.0) {
                    Err(Error::invalid(
                        "angle_spread",
                        format!("must be >= 0, got {angle_spread}"),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub matrix: CMat,
    pub energy: f64,
}

impl ChannelRealization {
    fn new(matrix: CMat) -> Self {
        let energy = frobenius_sq(&matrix);
        ChannelRealization { matrix, energy }
    }
}

/// Draws a fresh realization of `spec` between the arrays of `ctx`.
pub fn realize<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    ctx: &PropagationContext,
    rng: &mut R,
) -> Result<ChannelRealization> {
    spec.validate()?;
    if ctx.tx_array.is_empty() || ctx.rx_array.is_empty() {
        return Err(Error::EmptyArray);
    }
    let h = match &spec.model {
        ChannelModel::Rayleigh => realize_rayleigh(ctx, rng),
        ChannelModel::Los { aod, aoa } => realize_los(ctx, *aod, *aoa, rng)?,
        ChannelModel::Rician { kappa, aod, aoa } => realize_rician(ctx, *kappa, *aod, *aoa, rng)?,
        ChannelModel::RayCluster {
            num_clusters,
            num_rays,
            angle_spread,
        } => realize_ray_cluster(ctx, *num_clusters, *num_rays, *angle_spread, rng)?,
        ChannelModel::SphericalWave => realize_spherical(ctx)?,
    };
    let h = if spec.force_normalization {
        let target = spec.normalized_energy.unwrap_or((ctx.num_tx() * ctx.num_rx()) as f64);
        enforce_normalization(&h, target)?
    } else {
        h
    };
    Ok(ChannelRealization::new(h))
}

/// I.i.d. CN(0, 1) entries.
pub fn realize_rayleigh<R: Rng + ?Sized>(ctx: &PropagationContext, rng: &mut R) -> CMat {
    complex_normal_matrix(rng, ctx.num_rx(), ctx.num_tx(), 1.0)
}

fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    let az = rng.random_range(-PI..=PI);
    let el = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
    Direction::new(az, el).expect("sampled inside the valid range")
}

/// `a_rx(aoa) a_tx(aod)^H`.
fn path_matrix(ctx: &PropagationContext, aod: Direction, aoa: Direction) -> Result<CMat> {
    let a_tx = ctx.tx_array.response(aod)?;
    let a_rx = ctx.rx_array.response(aoa)?;
    Ok(a_rx * a_tx.adjoint())
}

/// Rank-one LOS channel `beta a_rx(aoa) a_tx(aod)^H` with `|beta| = 1` and
/// uniform phase.
pub fn realize_los<R: Rng + ?Sized>(
    ctx: &PropagationContext,
    aod: Direction,
    aoa: Direction,
    rng: &mut R,
) -> Result<CMat> {
    let beta = unit_phase(rng);
    Ok(path_matrix(ctx, aod, aoa)? * beta)
}

/// LOS/Rayleigh mixing weights for Rician factor `kappa`.
pub fn rician_weights(kappa: f64) -> (f64, f64) {
    ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
}

pub fn realize_rician<R: Rng + ?Sized>(
    ctx: &PropagationContext,
    kappa: f64,
    aod: Option<Direction>,
    aoa: Option<Direction>,
    rng: &mut R,
) -> Result<CMat> {
    let (w_los, w_ray) = rician_components(ctx, kappa, aod, aoa, rng)?;
    Ok(w_los + w_ray)
}

/// The two weighted Rician terms `(sqrt(k/(k+1)) H_los, sqrt(1/(k+1)) H_ray)`.
pub fn rician_components<R: Rng + ?Sized>(
    ctx: &PropagationContext,
    kappa: f64,
    aod: Option<Direction>,
    aoa: Option<Direction>,
    rng: &mut R,
) -> Result<(CMat, CMat)> {
    if !(kappa >= 0.0) {
        return Err(Error::invalid("kappa", format!("must be >= 0, got {kappa}")));
    }
    let aod = aod.unwrap_or_else(|| uniform_direction(rng));
    let aoa = aoa.unwrap_or_else(|| uniform_direction(rng));
    let los = realize_los(ctx, aod, aoa, rng)?;
    let ray = realize_rayleigh(ctx, rng);
    let (a, b) = rician_weights(kappa);
    Ok((los * C64::new(a, 0.0), ray * C64::new(b, 0.0)))
}

/// Laplace(0, scale) via inverse CDF.
fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn offset_direction<R: Rng + ?Sized>(rng: &mut R, center: Direction, spread: f64) -> Direction {
    let az = (center.azimuth() + laplace(rng, spread)).clamp(-PI, PI);
    let el = (center.elevation() + laplace(rng, spread)).clamp(-FRAC_PI_2, FRAC_PI_2);
    Direction::new(az, el).expect("clamped into range")
}

/// Clustered multipath:
/// `sqrt(1/(Nray Ncl)) sum_v sum_u beta_uv a_rx(aoa_uv) a_tx(aod_uv)^H`.
pub fn realize_ray_cluster<R: Rng + ?Sized>(
    ctx: &PropagationContext,
    num_clusters: usize,
    num_rays: usize,
    angle_spread: f64,
    rng: &mut R,
) -> Result<CMat> {
    if num_clusters == 0 || num_rays == 0 {
        return Err(Error::invalid("num_clusters/num_rays", "must be >= 1"));
    }
    let mut h = CMat::zeros(ctx.num_rx(), ctx.num_tx());
    for _ in 0..num_clusters {
        let aod_center = uniform_direction(rng);
        let aoa_center = uniform_direction(rng);
        for _ in 0..num_rays {
            let aod = offset_direction(rng, aod_center, angle_spread);
            let aoa = offset_direction(rng, aoa_center, angle_spread);
            let beta = complex_normal(rng, 1.0);
            h += path_matrix(ctx, aod, aoa)? * beta;
        }
    }
    let scale = (1.0 / (num_clusters * num_rays) as f64).sqrt();
    Ok(h * C64::new(scale, 0.0))
}

/// Absolute element positions in meters.
fn absolute_positions(array: &ArrayGeometry, origin: Point3, wavelength: f64) -> Vec<Point3> {
    array
        .elements()
        .iter()
        .map(|p| {
            [
                origin[0] + p[0] * wavelength,
                origin[1] + p[1] * wavelength,
                origin[2] + p[2] * wavelength,
            ]
        })
        .collect()
}

/// Near-field spherical-wave channel
/// `H[v,u] = gamma / r_uv * exp(-j 2 pi r_uv / lambda)` with `gamma` chosen so
/// that `||H||_F^2 = Nt Nr` exactly.
pub fn realize_spherical(ctx: &PropagationContext) -> Result<CMat> {
    let lambda = ctx.carrier_wavelength();
    let tx = absolute_positions(&ctx.tx_array, ctx.tx_position, lambda);
    let rx = absolute_positions(&ctx.rx_array, ctx.rx_position, lambda);
    let mut dist = vec![0.0; rx.len() * tx.len()];
    for (v, pr) in rx.iter().enumerate() {
        for (u, pt) in tx.iter().enumerate() {
            let r = ((pr[0] - pt[0]).powi(2) + (pr[1] - pt[1]).powi(2) + (pr[2] - pt[2]).powi(2)).sqrt();
            if !(r > 0.0) {
                return Err(Error::invalid(
                    "geometry",
                    format!("transmit element {u} coincides with receive element {v}"),
                ));
            }
            dist[v * tx.len() + u] = r;
        }
    }
    let inv_sq: f64 = dist.iter().map(|r| r.powi(-2)).sum();
    let gamma = ((tx.len() * rx.len()) as f64 / inv_sq).sqrt();
    Ok(CMat::from_fn(rx.len(), tx.len(), |v, u| {
        let r = dist[v * tx.len() + u];
        C64::from_polar(gamma / r, -2.0 * PI * r / lambda)
    }))
}

/// Rescales `h` so that `||h||_F^2 == target`.
pub fn enforce_normalization(h: &CMat, target: f64) -> Result<CMat> {
    if !(target > 0.0) {
        return Err(Error::invalid(
            "normalized_energy",
            format!("must be > 0, got {target}"),
        ));
    }
    let energy = frobenius_sq(h);
    if !(energy > 0.0) {
        return Err(Error::invalid("channel", "cannot normalize a zero matrix"));
    }
    Ok(h * C64::new((target / energy).sqrt(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Axis;
    use crate::rng::substream;

    fn ctx(nt: usize, nr: usize) -> PropagationContext {
        PropagationContext::new(3e8, ArrayGeometry::ula(nt, Axis::X), ArrayGeometry::ula(nr, Axis::X)).unwrap()
    }

    fn rank(m: &CMat) -> usize {
        let s = crate::linalg::svd(m).singular_values;
        let tol = s[0] * 1e-9;
        s.iter().filter(|&&x| x > tol).count()
    }

    #[test]
    fn wavelength_follows_velocity_and_frequency() {
        let mut c = ctx(1, 1);
        c.set_carrier_frequency(5e9).unwrap();
        assert!((c.carrier_wavelength() - 0.06).abs() < 1e-15);
        c.set_propagation_velocity(1.5e3).unwrap();
        assert!((c.carrier_wavelength() - 3e-7).abs() < 1e-20);
        assert!(c.set_carrier_frequency(0.0).is_err());
        assert!(c.set_propagation_velocity(-1.0).is_err());
    }

    #[test]
    fn siso_rayleigh_forced_to_unit_modulus() {
        let spec = ChannelSpec::rayleigh().with_forced_normalization(Some(1.0));
        let mut rng = substream(3, "siso");
        for _ in 0..20 {
            let h = realize(&spec, &ctx(1, 1), &mut rng).unwrap();
            assert!((h.matrix[(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_shape_and_moments() {
        let mut rng = substream(4, "rayleigh");
        let h = realize_rayleigh(&ctx(3, 2), &mut rng);
        assert_eq!(h.shape(), (2, 3));

        let n = 100_000;
        let c = ctx(1, 1);
        let (mut mean, mut power, mut re_sq) = (C64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..n {
            let z = realize_rayleigh(&c, &mut rng)[(0, 0)];
            mean += z;
            power += z.norm_sqr();
            re_sq += z.re * z.re;
        }
        let n = n as f64;
        assert!((mean / n).norm() < 0.02);
        assert!((power / n - 1.0).abs() < 0.02);
        assert!((re_sq / n - 0.5).abs() < 0.025);
    }

    #[test]
    fn los_is_rank_one_with_exact_energy() {
        let mut rng = substream(5, "los");
        let aod = Direction::new(0.3, 0.1).unwrap();
        let aoa = Direction::new(-1.0, 0.2).unwrap();
        let c = PropagationContext::new(
            3e8,
            ArrayGeometry::upa(2, 3, crate::array::Plane::Xz),
            ArrayGeometry::ula(4, Axis::Y),
        )
        .unwrap();
        for _ in 0..10 {
            let h = realize_los(&c, aod, aoa, &mut rng).unwrap();
            assert!((frobenius_sq(&h) - 24.0).abs() < 1e-9);
            assert_eq!(rank(&h), 1);
        }
        let h = realize_los(&ctx(1, 1), aod, aoa, &mut rng).unwrap();
        assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rician_weights_are_power_preserving() {
        for k in [0.0, 0.5, 1.0, 10.0, 1e9] {
            let (a, b) = rician_weights(k);
            assert!((a * a + b * b - 1.0).abs() < 1e-15);
        }
        assert_eq!(rician_weights(0.0), (0.0, 1.0));
        let mut rng = substream(6, "rician");
        assert!(realize_rician(&ctx(2, 2), -1.0, None, None, &mut rng).is_err());
    }

    #[test]
    fn huge_kappa_approaches_los() {
        let mut rng = substream(7, "rician");
        let (los, ray) = rician_components(&ctx(4, 4), 1e9, None, None, &mut rng).unwrap();
        let h = &los + &ray;
        let rel = (frobenius_sq(&(&h - &los)) / frobenius_sq(&los)).sqrt();
        assert!(rel < 1e-4);
    }

    #[test]
    fn ray_cluster_rank_bound_and_single_ray() {
        let mut rng = substream(8, "raycl");
        let c = ctx(6, 5);
        let h = realize_ray_cluster(&c, 1, 2, 0.1, &mut rng).unwrap();
        assert!(rank(&h) <= 2);
        let h = realize_ray_cluster(&c, 1, 1, 0.1, &mut rng).unwrap();
        assert_eq!(rank(&h), 1);
        assert!(realize_ray_cluster(&c, 0, 1, 0.1, &mut rng).is_err());
    }

    #[test]
    fn spherical_is_deterministic_and_normalized() {
        let mut c = ctx(1, 1);
        c.rx_position = [0.0, 7.3, 0.0];
        let h = realize_spherical(&c).unwrap();
        let expected = C64::from_polar(1.0, -2.0 * PI * 7.3);
        assert!((h[(0, 0)] - expected).norm() < 1e-9);

        let mut c = PropagationContext::new(
            28e9,
            ArrayGeometry::upa(2, 2, crate::array::Plane::Xz),
            ArrayGeometry::ula(3, Axis::Z),
        )
        .unwrap();
        c.tx_position = [1.0, 2.0, 0.5];
        c.rx_position = [-0.3, 0.2, 0.0];
        let a = realize_spherical(&c).unwrap();
        let b = realize_spherical(&c).unwrap();
        assert_eq!(a, b);
        assert!((frobenius_sq(&a) - 12.0).abs() < 1e-9);

        let same = ctx(1, 1);
        assert!(realize_spherical(&same).is_err());
    }

    #[test]
    fn normalization_examples() {
        let h = CMat::from_element(2, 2, C64::new(1.0, 0.0));
        let scaled = enforce_normalization(&h, 16.0).unwrap();
        assert_eq!(scaled, h.clone() * C64::new(2.0, 0.0));
        let same = enforce_normalization(&h, 4.0).unwrap();
        assert!(frobenius_sq(&(same - &h)) < 1e-30);
        assert!(enforce_normalization(&CMat::zeros(2, 2), 1.0).is_err());

        let mut rng = substream(9, "norm");
        let spec = ChannelSpec::rayleigh().with_forced_normalization(None);
        let r = realize(&spec, &ctx(4, 4), &mut rng).unwrap();
        assert!((r.energy - 16.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_draw() {
        let spec = ChannelSpec::new(ChannelModel::RayCluster {
            num_clusters: 3,
            num_rays: 4,
            angle_spread: DEFAULT_ANGLE_SPREAD,
        });
        let a = realize(&spec, &ctx(4, 4), &mut substream(10, "x")).unwrap();
        let b = realize(&spec, &ctx(4, 4), &mut substream(10, "x")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation() {
        let bad = ChannelSpec::new(ChannelModel::RayCluster {
            num_clusters: 0,
            num_rays: 1,
            angle_spread: 0.1,
        });
        assert!(bad.validate().is_err());
        let bad = ChannelSpec::new(ChannelModel::Rician {
            kappa: -0.5,
            aod: None,
            aoa: None,
        });
        assert!(bad.validate().is_err());
        let empty = PropagationContext::new(1e9, ArrayGeometry::new(), ArrayGeometry::ula(1, Axis::X)).unwrap();
        assert!(matches!(
            realize(&ChannelSpec::rayleigh(), &empty, &mut substream(0, "e")),
            Err(Error::EmptyArray)
        ));
    }
}
