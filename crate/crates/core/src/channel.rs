//! Lambertian line-of-sight channel between ceiling LEDs and receivers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::geometry::{Point3, SampleGrid};
use crate::{Error, Result};

/// Photometric constants of the LOS link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Photodiode area, m^2.
    pub area: f64,
    /// Lambertian mode number `m_l` (1 for a 60 degree semi-angle LED).
    pub lambertian_order: f64,
    /// Optical filter transmission `T`.
    pub filter_gain: f64,
    /// Concentrator gain `G`, taken as constant over the field of view.
    pub concentrator_gain: f64,
    /// Receiver field-of-view half-angle, radians.
    pub fov: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            area: 1e-4,
            lambertian_order: 1.0,
            filter_gain: 1.0,
            concentrator_gain: 1.0,
            fov: 70f64.to_radians(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, what: &str| if c { Ok(()) } else { Err(Error::invalid(what.to_string())) };
        ok(self.area.is_finite() && self.area > 0.0, "photodiode area must be positive")?;
        ok(
            self.lambertian_order.is_finite() && self.lambertian_order > 0.0,
            "Lambertian order must be positive",
        )?;
        ok(
            self.filter_gain > 0.0 && self.filter_gain <= 1.0,
            "filter transmission must lie in (0, 1]",
        )?;
        ok(
            self.concentrator_gain.is_finite() && self.concentrator_gain > 0.0,
            "concentrator gain must be positive",
        )?;
        ok(self.fov > 0.0 && self.fov <= PI / 2.0, "field of view must lie in (0, pi/2]")
    }

    /// Lambertian mode number for a given half-power semi-angle.
    pub fn lambertian_order_for_semi_angle(semi_angle: f64) -> f64 {
        -std::f64::consts::LN_2 / semi_angle.cos().ln()
    }
}

/// Distance and angles of one LED-to-photodiode path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    /// Emission angle from the LED normal.
    pub emission_angle: f64,
    /// Incidence angle from the photodiode normal.
    pub incidence_angle: f64,
    pub cos_emission: f64,
    pub cos_incidence: f64,
}

const DOWN: [f64; 3] = [0.0, 0.0, -1.0];
const UP: [f64; 3] = [0.0, 0.0, 1.0];

fn geometry_with_normals(led: &Point3, led_normal: [f64; 3], pd: &Point3, pd_normal: [f64; 3]) -> Result<LinkGeometry> {
    let v = [pd.x - led.x, pd.y - led.y, pd.z - led.z];
    let d = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if d.is_nan() || d <= 0.0 {
        return Err(Error::invalid(format!("LED {led:?} and photodiode {pd:?} coincide")));
    }
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cos_emission = (dot(v, led_normal) / d).clamp(-1.0, 1.0);
    let cos_incidence = (-dot(v, pd_normal) / d).clamp(-1.0, 1.0);
    Ok(LinkGeometry {
        distance: d,
        emission_angle: cos_emission.acos(),
        incidence_angle: cos_incidence.acos(),
        cos_emission,
        cos_incidence,
    })
}

/// Geometry for a downward-facing LED and an upward-facing photodiode.
pub fn link_geometry(led: &Point3, pd: &Point3) -> Result<LinkGeometry> {
    geometry_with_normals(led, DOWN, pd, UP)
}

/// LOS DC gain; exactly zero outside the receiver field of view.
pub fn los_gain(geom: &LinkGeometry, params: &ChannelParams) -> f64 {
    if !(0.0..=params.fov).contains(&geom.incidence_angle) || geom.cos_emission <= 0.0 {
        return 0.0;
    }
    let m = params.lambertian_order;
    params.area * (m + 1.0) / (2.0 * PI * geom.distance * geom.distance)
        * geom.cos_emission.powf(m)
        * geom.cos_incidence
        * params.filter_gain
        * params.concentrator_gain
}

/// `N_s x M_t` matrix of LOS gains: row `j` is sample point `j`, column `i`
/// is LED `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(DMatrix<f64>);

impl ChannelMatrix {
    /// Wrap a raw gain matrix. Entries must be finite; negative gains are
    /// accepted so that synthetic test channels can be built.
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::invalid("channel matrix must be non-empty"));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("channel matrix has non-finite entries"));
        }
        Ok(Self(h))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_points(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_leds(&self) -> usize {
        self.0.ncols()
    }

    /// Channel vector `h_j` of sample point `j`.
    pub fn row_vector(&self, j: usize) -> DVector<f64> {
        self.0.row(j).transpose()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

pub fn channel_matrix(leds: &[Point3], grid: &SampleGrid, params: &ChannelParams) -> Result<ChannelMatrix> {
    channel_matrix_for_points(leds, grid.points(), params)
}

pub fn channel_matrix_for_points(leds: &[Point3], points: &[Point3], params: &ChannelParams) -> Result<ChannelMatrix> {
    if leds.is_empty() || points.is_empty() {
        return Err(Error::invalid("channel matrix needs at least one LED and one sample point"));
    }
    params.validate()?;
    let mut h = DMatrix::zeros(points.len(), leds.len());
    for (j, pd) in points.iter().enumerate() {
        for (i, led) in leds.iter().enumerate() {
            h[(j, i)] = los_gain(&link_geometry(led, pd)?, params);
        }
    }
    Ok(ChannelMatrix(h))
}
