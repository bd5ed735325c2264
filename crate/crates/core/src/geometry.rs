//! Room, ceiling LED array and work-plane sampling.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// Rectangular room. The floor spans `[0, width] x [0, length]`, the LED
/// array hangs at `ceiling_height`, receivers sit at `work_plane_height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomScenario {
    width: f64,
    length: f64,
    ceiling_height: f64,
    work_plane_height: f64,
}

impl RoomScenario {
    pub fn new(width: f64, length: f64, ceiling_height: f64, work_plane_height: f64) -> Result<Self> {
        for (name, v) in [("width", width), ("length", length), ("ceiling_height", ceiling_height)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("room {name} must be positive, got {v}")));
            }
        }
        if !(work_plane_height.is_finite() && (0.0..ceiling_height).contains(&work_plane_height)) {
            return Err(Error::invalid(format!(
                "work plane height must lie in [0, {ceiling_height}), got {work_plane_height}"
            )));
        }
        Ok(Self {
            width,
            length,
            ceiling_height,
            work_plane_height,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn ceiling_height(&self) -> f64 {
        self.ceiling_height
    }

    pub fn work_plane_height(&self) -> f64 {
        self.work_plane_height
    }

    /// Same room with the receivers moved to another height.
    pub fn with_work_plane_height(&self, h: f64) -> Result<Self> {
        Self::new(self.width, self.length, self.ceiling_height, h)
    }
}

/// Uniform rectangular LED array of `m_x * m_y` elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedArray {
    m_x: usize,
    m_y: usize,
    d_x: f64,
    d_y: f64,
}

impl LedArray {
    pub fn new(m_x: usize, m_y: usize, d_x: f64, d_y: f64) -> Result<Self> {
        if m_x == 0 || m_y == 0 {
            return Err(Error::invalid(format!("LED array needs at least one element per axis, got {m_x}x{m_y}")));
        }
        if !(d_x.is_finite() && d_x >= 0.0 && d_y.is_finite() && d_y >= 0.0) {
            return Err(Error::invalid(format!("LED spacings must be non-negative, got d_x={d_x}, d_y={d_y}")));
        }
        Ok(Self { m_x, m_y, d_x, d_y })
    }

    /// Square `side x side` array with equal spacing on both axes.
    pub fn square(side: usize, spacing: f64) -> Result<Self> {
        Self::new(side, side, spacing, spacing)
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn d_x(&self) -> f64 {
        self.d_x
    }

    pub fn d_y(&self) -> f64 {
        self.d_y
    }

    /// Total number of LEDs.
    pub fn m_t(&self) -> usize {
        self.m_x * self.m_y
    }

    /// Array-local `(x, y)` of every LED before placement in the room.
    ///
    /// LED `k` (zero based) sits at `x = (k / m_y) d_x`, `y = (k mod m_y) d_y`,
    /// so the first LED is at the origin and the y index runs fastest.
    pub fn raw_coordinates(&self) -> Vec<(f64, f64)> {
        (0..self.m_t())
            .map(|k| ((k / self.m_y) as f64 * self.d_x, (k % self.m_y) as f64 * self.d_y))
            .collect()
    }
}

/// LED positions on the ceiling, with the array centroid at the center of
/// the ceiling. Order follows [`LedArray::raw_coordinates`].
pub fn led_positions(array: &LedArray, room: &RoomScenario) -> Vec<Point3> {
    let raw = array.raw_coordinates();
    let cx = (array.m_x - 1) as f64 * array.d_x / 2.0;
    let cy = (array.m_y - 1) as f64 * array.d_y / 2.0;
    raw.into_iter()
        .map(|(x, y)| {
            Point3::new(
                x - cx + room.width / 2.0,
                y - cy + room.length / 2.0,
                room.ceiling_height,
            )
        })
        .collect()
}

/// Candidate receiver locations on the work plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    points: Vec<Point3>,
    spacing: f64,
}

impl SampleGrid {
    /// Grid from explicit points, e.g. randomly placed users.
    pub fn from_points(points: Vec<Point3>, spacing: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("sample grid needs at least one point"));
        }
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn axis_samples(extent: f64, spacing: f64) -> Vec<f64> {
    // Tolerate representation error, e.g. 0.3 / 0.1 = 2.9999999999999996.
    let n = (extent / spacing + 1e-9).floor() as usize + 1;
    (0..n).map(|i| (i as f64 * spacing).min(extent)).collect()
}

/// Uniform grid over the closed floor rectangle at the work-plane height.
/// The x index is the outer loop.
pub fn sample_work_plane(room: &RoomScenario, spacing: f64) -> Result<SampleGrid> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    let xs = axis_samples(room.width, spacing);
    let ys = axis_samples(room.length, spacing);
    let z = room.work_plane_height;
    let points = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| Point3::new(x, y, z)))
        .collect();
    Ok(SampleGrid { points, spacing })
}
