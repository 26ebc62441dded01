//! Antenna array geometry and array response.
//!
//! Directions use the azimuth-elevation convention: azimuth `theta` is
//! measured in the x-y plane from the +y axis toward +x, elevation `phi`
//! from the x-y plane toward +z, so that
//!
//! ```text
//! x = r sin(theta) cos(phi)
//! y = r cos(theta) cos(phi)
//! z = r sin(phi)
//! ```
//!
//! Element coordinates are in carrier wavelengths, which makes responses
//! independent of the carrier frequency. Elements are assumed isotropic.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::{CVec, Error, Result, C64};

/// A unit direction in azimuth/elevation (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        let ok = azimuth.is_finite()
            && elevation.is_finite()
            && (-PI..=PI).contains(&azimuth)
            && (-FRAC_PI_2..=FRAC_PI_2).contains(&elevation);
        if ok {
            Ok(Direction { azimuth, elevation })
        } else {
            Err(Error::InvalidDirection { azimuth, elevation })
        }
    }

    /// Broadside (`theta = 0`, `phi = 0`), i.e. the +y axis.
    pub fn broadside() -> Self {
        Direction {
            azimuth: 0.0,
            elevation: 0.0,
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }
}

pub type Point3 = [f64; 3];

/// Spherical (azimuth-elevation) to Cartesian.
pub fn sph_to_cart(r: f64, d: Direction) -> Result<Point3> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", format!("must be >= 0, got {r}")));
    }
    let (st, ct) = d.azimuth.sin_cos();
    let (sp, cp) = d.elevation.sin_cos();
    Ok([r * st * cp, r * ct * cp, r * sp])
}

/// Cartesian to spherical. The origin maps to `r = 0` at broadside.
pub fn cart_to_sph(p: Point3) -> (f64, Direction) {
    let [x, y, z] = p;
    let r = (x * x + y * y + z * z).sqrt();
    if r == 0.0 {
        return (0.0, Direction::broadside());
    }
    let azimuth = x.atan2(y);
    let elevation = z.atan2((x * x + y * y).sqrt());
    (r, Direction { azimuth, elevation })
}

/// Projection `zeta = x sin(theta) cos(phi) + y cos(theta) cos(phi) + z sin(phi)`.
fn zeta(p: &Point3, d: Direction) -> f64 {
    let (st, ct) = d.azimuth.sin_cos();
    let (sp, cp) = d.elevation.sin_cos();
    p[0] * st * cp + p[1] * ct * cp + p[2] * sp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Plane of a planar array. The first letter is the column axis, the
/// second the row axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xz,
    Xy,
    Yz,
}

impl Plane {
    fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xz => (0, 2),
            Plane::Xy => (0, 1),
            Plane::Yz => (1, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    Azimuth,
    Elevation,
}

const HALF_WAVELENGTH: f64 = 0.5;

/// Element positions (in wavelengths) with one complex weight per element.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrayGeometry {
    elements: Vec<Point3>,
    weights: Vec<C64>,
}

impl ArrayGeometry {
    /// An array with no elements.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_elements(elements: Vec<Point3>) -> Result<Self> {
        if elements.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("elements", "coordinates must be finite"));
        }
        let weights = vec![C64::new(1.0, 0.0); elements.len()];
        Ok(ArrayGeometry { elements, weights })
    }

    /// Half-wavelength uniform linear array along `axis`, starting at the origin.
    pub fn ula(n: usize, axis: Axis) -> Self {
        let k = axis.index();
        let elements = (0..n)
            .map(|i| {
                let mut p = [0.0; 3];
                p[k] = i as f64 * HALF_WAVELENGTH;
                p
            })
            .collect();
        ArrayGeometry {
            elements,
            weights: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Half-wavelength `rows x cols` uniform planar array. Elements are
    /// ordered row-major: all columns of row 0, then row 1, and so on.
    pub fn upa(rows: usize, cols: usize, plane: Plane) -> Self {
        let (col_axis, row_axis) = plane.axes();
        let mut elements = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut p = [0.0; 3];
                p[col_axis] = c as f64 * HALF_WAVELENGTH;
                p[row_axis] = r as f64 * HALF_WAVELENGTH;
                elements.push(p);
            }
        }
        let n = elements.len();
        ArrayGeometry {
            elements,
            weights: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Point3] {
        &self.elements
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<C64>) -> Result<()> {
        if weights.len() != self.elements.len() {
            return Err(Error::shape("set_weights", self.elements.len(), weights.len()));
        }
        self.weights = weights;
        Ok(())
    }

    /// Appends an element with unit weight.
    pub fn add_element(&mut self, p: Point3) -> Result<()> {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("element", "coordinates must be finite"));
        }
        self.elements.push(p);
        self.weights.push(C64::new(1.0, 0.0));
        Ok(())
    }

    /// Removes the element at `index`, or the last one when `None`.
    pub fn remove_element(&mut self, index: Option<usize>) -> Result<Point3> {
        let len = self.elements.len();
        let i = match index {
            Some(i) => i,
            None => len.checked_sub(1).ok_or(Error::EmptyArray)?,
        };
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        self.weights.remove(i);
        Ok(self.elements.remove(i))
    }

    /// Shifts every element by `offset`; with `None` the centroid moves to the origin.
    pub fn translate(&mut self, offset: Option<Point3>) {
        let shift = match offset {
            Some(o) => o,
            None => {
                if self.elements.is_empty() {
                    return;
                }
                let n = self.elements.len() as f64;
                let mut c = [0.0; 3];
                for p in &self.elements {
                    for k in 0..3 {
                        c[k] += p[k];
                    }
                }
                [-c[0] / n, -c[1] / n, -c[2] / n]
            }
        };
        for p in &mut self.elements {
            for k in 0..3 {
                p[k] += shift[k];
            }
        }
    }

    /// Right-handed rotation about x, then y, then z (radians).
    pub fn rotate(&mut self, rx: f64, ry: f64, rz: f64) {
        let m = rotation_matrix(rx, ry, rz);
        for p in &mut self.elements {
            let q = *p;
            for (row, out) in m.iter().zip(p.iter_mut()) {
                *out = row[0] * q[0] + row[1] * q[1] + row[2] * q[2];
            }
        }
    }

    /// Array response with phases referenced to the first element.
    ///
    /// Entry `i` is `exp(j 2 pi (zeta_i - zeta_1))`, so entry 0 is exactly
    /// `1 + 0j`. The vector is not normalized to unit norm.
    pub fn response(&self, d: Direction) -> Result<CVec> {
        let first = self.elements.first().ok_or(Error::EmptyArray)?;
        let z0 = zeta(first, d);
        Ok(CVec::from_iterator(
            self.len(),
            self.elements
                .iter()
                .map(|p| C64::from_polar(1.0, 2.0 * PI * (zeta(p, d) - z0))),
        ))
    }

    /// Entrywise product of the (first-element referenced) response and the weights.
    pub fn weighted_response(&self, d: Direction) -> Result<CVec> {
        let a = self.response(d)?;
        Ok(CVec::from_iterator(
            a.len(),
            a.iter().zip(&self.weights).map(|(ai, wi)| ai * wi),
        ))
    }

    /// Complex gain `w^T a(d)`; the weights are not conjugated.
    pub fn gain(&self, d: Direction) -> Result<C64> {
        Ok(self.weighted_response(d)?.iter().sum())
    }

    /// Gain over a uniform grid spanning the full range of one angle while
    /// the other is held at zero.
    pub fn pattern_cut(&self, cut: Cut, samples: usize) -> Result<Vec<(f64, C64)>> {
        if samples < 2 {
            return Err(Error::invalid("samples", "need at least 2 samples"));
        }
        if self.is_empty() {
            return Err(Error::EmptyArray);
        }
        let (lo, hi) = match cut {
            Cut::Azimuth => (-PI, PI),
            Cut::Elevation => (-FRAC_PI_2, FRAC_PI_2),
        };
        let step = (hi - lo) / (samples - 1) as f64;
        (0..samples)
            .map(|i| {
                let angle = if i == samples - 1 { hi } else { lo + step * i as f64 };
                let d = match cut {
                    Cut::Azimuth => Direction::new(angle, 0.0)?,
                    Cut::Elevation => Direction::new(0.0, angle)?,
                };
                Ok((angle, self.gain(d)?))
            })
            .collect()
    }
}

fn rotation_matrix(rx: f64, ry: f64, rz: f64) -> [[f64; 3]; 3] {
    let (sx, cx) = rx.sin_cos();
    let (sy, cy) = ry.sin_cos();
    let (sz, cz) = rz.sin_cos();
    let mx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let my = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let mz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    // applied to column vectors: Rz * Ry * Rx
    matmul3(&mz, &matmul3(&my, &mx))
}

fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}
