//! Look-up-table controller: bilinear blending of the learned configurations,
//! 3-D target lookup through the (r, z) + mast-rotation decomposition, and
//! straight-line trajectory sampling with a per-sample joint-rate check.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::arm_model::{ArmModel, DofVector, Point, DOF_NAMES, MAST, NUM_DOFS};
use crate::error::{Error, Result};
use crate::table::ConfigTable;
use crate::workspace::{decompose, CellCoord, CylTarget};

/// Corner weights `[(i,j), (i+1,j), (i,j+1), (i+1,j+1)]` for fractions `(u, v)`.
pub fn bilinear_weights(u: f64, v: f64) -> [f64; 4] {
    [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v]
}

/// Componentwise bilinear blend of the cell corners around `(r, z)`, clamped to limits.
///
/// Corners that receive zero weight are not consulted, so lookups on a node or
/// an edge only require the touching corners to be converged.
pub fn interpolate(table: &ConfigTable, model: &ArmModel, r: f64, z: f64) -> Result<DofVector> {
    let cell = table.spec.containing_cell(r, z)?;
    interpolate_in_cell(table, model, cell)
}

pub fn interpolate_in_cell(table: &ConfigTable, model: &ArmModel, cell: CellCoord) -> Result<DofVector> {
    let spec = &table.spec;
    let CellCoord { i, j, u, v } = cell;
    let weights = bilinear_weights(u, v);
    let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];

    let mut out = [0.0; NUM_DOFS];
    for (&w, &(ci, cj)) in weights.iter().zip(&corners) {
        if w == 0.0 {
            continue;
        }
        let idx = spec.index(ci, cj);
        if !table.converged[idx] {
            return Err(Error::UnconvergedCell { i: ci, j: cj });
        }
        let q = &table.entries[idx];
        for (acc, value) in out.iter_mut().zip(q.iter()) {
            *acc += w * value;
        }
    }
    Ok(model.clamp(&DofVector(out)))
}

/// Configuration for a 3-D point: interpolate in the plane, then rotate the mast.
pub fn ik_lookup(table: &ConfigTable, model: &ArmModel, p: &Point) -> Result<DofVector> {
    let cyl = decompose(p);
    let q = interpolate(table, model, cyl.r, cyl.z)?;
    Ok(q.with_mast(cyl.theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub target: Point,
    pub cyl: CylTarget,
    pub dofs: DofVector,
    pub achieved: Point,
    /// Feet.
    pub deviation: f64,
    /// Per-component change from the previous sample, degrees (mast on the shortest arc).
    pub deltas: [f64; NUM_DOFS],
    pub max_delta: f64,
    pub rate_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub step: f64,
    pub max_joint_rate: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn max_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.deviation).fold(0.0, f64::max)
    }

    pub fn max_joint_delta(&self) -> f64 {
        self.samples.iter().map(|s| s.max_delta).fold(0.0, f64::max)
    }

    pub fn rate_violations(&self) -> usize {
        self.samples.iter().filter(|s| s.rate_exceeded).count()
    }

    /// Delimited export with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["sample", "target_x", "target_y", "target_z", "r", "z", "theta"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(DOF_NAMES.iter().map(|s| s.to_string()));
        header.extend(
            ["achieved_x", "achieved_y", "achieved_z", "deviation", "max_joint_delta", "rate_flag"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header).expect("in-memory csv");
        for (k, s) in self.samples.iter().enumerate() {
            let mut row = vec![
                k.to_string(),
                s.target.x.to_string(),
                s.target.y.to_string(),
                s.target.z.to_string(),
                s.cyl.r.to_string(),
                s.cyl.z.to_string(),
                s.cyl.theta.to_string(),
            ];
            row.extend(s.dofs.iter().map(|v| v.to_string()));
            row.extend([
                s.achieved.x.to_string(),
                s.achieved.y.to_string(),
                s.achieved.z.to_string(),
                s.deviation.to_string(),
                s.max_delta.to_string(),
                u8::from(s.rate_exceeded).to_string(),
            ]);
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }
}

/// Difference `b - a` of two angles on the shortest arc, in `(-180, 180]`.
pub fn angle_delta(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Points along the polyline with spacing at most `step`; consecutive duplicates collapse.
pub fn sample_path(waypoints: &[Point], step: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for pair in waypoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((b - a).norm() / step).ceil() as usize;
        for k in 0..=n {
            let p = if n == 0 { a } else { a + (b - a) * (k as f64 / n as f64) };
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
    }
    if waypoints.len() == 1 {
        out.push(waypoints[0]);
    }
    out
}

/// Samples the straight segments between waypoints, looks up a configuration
/// for each sample and records the FK deviation. Samples whose joint change
/// exceeds `max_joint_rate` are flagged, never altered.
pub fn plan_trajectory(
    table: &ConfigTable,
    model: &ArmModel,
    waypoints: &[Point],
    step: f64,
    max_joint_rate: f64,
) -> Result<Trajectory> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidConfig("a trajectory needs at least two waypoints".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!("step must be > 0, got {step}")));
    }
    if !(max_joint_rate > 0.0) {
        return Err(Error::InvalidConfig(format!("max_joint_rate must be > 0, got {max_joint_rate}")));
    }

    let mut samples: Vec<TrajectorySample> = Vec::new();
    for (index, target) in sample_path(waypoints, step).into_iter().enumerate() {
        let at_sample = |source: Error| Error::AtSample {
            index,
            point: [target.x, target.y, target.z],
            source: Box::new(source),
        };
        let dofs = ik_lookup(table, model, &target).map_err(at_sample)?;
        let achieved = model.end_effector(&dofs).map_err(at_sample)?;
        let deltas: [f64; NUM_DOFS] = match samples.last() {
            None => [0.0; NUM_DOFS],
            Some(prev) => std::array::from_fn(|d| {
                if d == MAST {
                    angle_delta(prev.dofs[d], dofs[d])
                } else {
                    dofs[d] - prev.dofs[d]
                }
            }),
        };
        let max_delta = deltas.iter().map(|d| d.abs()).fold(0.0, f64::max);
        samples.push(TrajectorySample {
            target,
            cyl: decompose(&target),
            dofs,
            achieved,
            deviation: (achieved - target).norm(),
            deltas,
            max_delta,
            rate_exceeded: max_delta > max_joint_rate,
        });
    }
    Ok(Trajectory {
        step,
        max_joint_rate,
        samples,
    })
}

/// Reads waypoints: one `x,y,z` per line in feet, with an optional `x,y,z` header.
/// Blank lines and `#` comments are skipped.
pub fn read_waypoints(reader: impl Read) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("waypoints: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if out.is_empty() && record.iter().map(str::to_ascii_lowercase).eq(["x", "y", "z"]) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse(format!(
                "waypoint record {}: expected x,y,z, got {} fields",
                line + 1,
                record.len()
            )));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(record.iter()) {
            *slot = field
                .parse()
                .map_err(|_| Error::Parse(format!("waypoint record {}: bad number {field:?}", line + 1)))?;
        }
        out.push(Point::new(xyz[0], xyz[1], xyz[2]));
    }
    Ok(out)
}

pub fn load_waypoints(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_waypoints(file)
}
