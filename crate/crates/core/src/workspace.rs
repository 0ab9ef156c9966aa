//! Tank geometry, the cross-section grid, and the (r, z) + rotation view of 3-D targets.

use serde::{Deserialize, Serialize};

use crate::arm_model::Point;
use crate::error::{Error, Result};

/// Slack (feet) for containment checks on points that land on the grid boundary
/// after floating-point path sampling.
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TankModel {
    pub radius: f64,
    pub wall_height: f64,
    /// z of the tank floor relative to the arm base.
    pub base_z: f64,
}

impl Default for TankModel {
    fn default() -> Self {
        TankModel {
            radius: 21.0,
            wall_height: 28.0,
            base_z: -57.0,
        }
    }
}

impl TankModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.wall_height > 0.0 && self.base_z.is_finite()) {
            return Err(Error::InvalidConfig(
                "tank radius and wall_height must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Whether a point lies inside the cylindrical side-wall region.
    pub fn contains(&self, p: &Point) -> bool {
        let r = p.x.hypot(p.y);
        r <= self.radius && p.z >= self.base_z && p.z <= self.base_z + self.wall_height
    }
}

/// Regular grid of target points in the (r, z) solution plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r0: f64,
    pub z0: f64,
    pub dr: f64,
    pub dz: f64,
    pub nr: usize,
    pub nz: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r0: 1.0,
            z0: -56.0,
            dr: 1.0,
            dz: 1.0,
            nr: 21,
            nz: 28,
        }
    }
}

/// A grid cell and the fractional position inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCoord {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dr > 0.0 && self.dz > 0.0) {
            return Err(Error::InvalidConfig("grid spacing must be > 0".into()));
        }
        if !(self.r0.is_finite() && self.z0.is_finite()) {
            return Err(Error::InvalidConfig("grid origin must be finite".into()));
        }
        if self.nr < 1 || self.nz < 1 {
            return Err(Error::InvalidConfig("grid counts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index of node (i, j).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        (idx / self.nz, idx % self.nz)
    }

    pub fn check(&self, i: usize, j: usize) -> Result<()> {
        if i < self.nr && j < self.nz {
            Ok(())
        } else {
            Err(Error::IndexOutOfGrid {
                i,
                j,
                nr: self.nr,
                nz: self.nz,
            })
        }
    }

    /// `(r, z)` of node (i, j).
    pub fn position(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        self.check(i, j)?;
        Ok(self.position_unchecked(i, j))
    }

    pub(crate) fn position_unchecked(&self, i: usize, j: usize) -> (f64, f64) {
        (self.r0 + i as f64 * self.dr, self.z0 + j as f64 * self.dz)
    }

    pub fn r_max(&self) -> f64 {
        self.r0 + (self.nr - 1) as f64 * self.dr
    }

    pub fn z_max(&self) -> f64 {
        self.z0 + (self.nz - 1) as f64 * self.dz
    }

    pub fn contains(&self, r: f64, z: f64) -> bool {
        r >= self.r0 - BOUNDARY_SLACK
            && r <= self.r_max() + BOUNDARY_SLACK
            && z >= self.z0 - BOUNDARY_SLACK
            && z <= self.z_max() + BOUNDARY_SLACK
    }

    /// Cell containing `(r, z)`. A point on a shared edge belongs to the cell
    /// whose lower corner it is (fraction 0); fractions of 1 only occur on the
    /// top/right boundary.
    pub fn containing_cell(&self, r: f64, z: f64) -> Result<CellCoord> {
        if !(r.is_finite() && z.is_finite()) || !self.contains(r, z) {
            return Err(Error::OutOfWorkspace { r, z });
        }
        let (i, u) = locate(r, self.r0, self.dr, self.nr);
        let (j, v) = locate(z, self.z0, self.dz, self.nz);
        Ok(CellCoord { i, j, u, v })
    }
}

/// Cell index and fraction along one axis. Degenerate single-node axes map to (0, 0).
fn locate(x: f64, origin: f64, step: f64, n: usize) -> (usize, f64) {
    if n < 2 {
        return (0, 0.0);
    }
    let last = n - 2;
    let node = |k: usize| origin + k as f64 * step;
    let mut k = (((x - origin) / step).floor().max(0.0) as usize).min(last);
    // The division can land one cell off near a node; settle on the node expression itself.
    if k < last && x >= node(k + 1) {
        k += 1;
    }
    if k > 0 && x < node(k) {
        k -= 1;
    }
    let frac = ((x - node(k)) / step).clamp(0.0, 1.0);
    (k, frac)
}

/// A target in cylindrical form: radial distance, height, and mast rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylTarget {
    pub r: f64,
    pub z: f64,
    pub theta: f64,
}

impl CylTarget {
    pub fn to_point(&self) -> Point {
        let t = self.theta.to_radians();
        Point::new(self.r * t.cos(), self.r * t.sin(), self.z)
    }
}

pub fn decompose(p: &Point) -> CylTarget {
    let r = p.x.hypot(p.y);
    let theta = if r == 0.0 {
        0.0
    } else {
        let t = p.y.atan2(p.x).to_degrees();
        if t <= -180.0 {
            t + 360.0
        } else {
            t
        }
    };
    CylTarget { r, z: p.z, theta }
}
