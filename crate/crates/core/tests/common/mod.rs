//! Reference implementations used as test oracles. None of these call into the
//! solver code paths they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serpentik::{ArmModel, ConfigTable, DofVector, GridSpec, Neighborhood};

type Mat4 = [[f64; 4]; 4];

const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            for k in 0..4 {
                out[r][c] += a[r][k] * b[k][c];
            }
        }
    }
    out
}

fn rot_z(deg: f64) -> Mat4 {
    let (s, c) = deg.to_radians().sin_cos();
    [
        [c, -s, 0.0, 0.0],
        [s, c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn rot_x(deg: f64) -> Mat4 {
    let (s, c) = deg.to_radians().sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, -s, 0.0],
        [0.0, s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Pitch: rotation about the local -y axis, so a positive angle swings -z toward +x.
fn pitch(deg: f64) -> Mat4 {
    let (s, c) = deg.to_radians().sin_cos();
    [
        [c, 0.0, -s, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn down(len: f64) -> Mat4 {
    let mut t = IDENTITY;
    t[2][3] = -len;
    t
}

fn origin_of(m: &Mat4) -> [f64; 3] {
    [m[0][3], m[1][3], m[2][3]]
}

/// Every joint position, base first, by explicit 4x4 composition.
pub fn fk_points(model: &ArmModel, q: &DofVector) -> Vec<[f64; 3]> {
    let q = q.as_array();
    let mut points = vec![[0.0; 3]];
    let mut m = mul(&rot_z(q[0]), &down(model.mast_length));
    points.push(origin_of(&m));
    for &a in &q[1..4] {
        m = mul(&mul(&m, &pitch(a)), &down(model.stage123_segment_length));
        points.push(origin_of(&m));
    }
    for (p, y, n, len) in [
        (q[4], q[5], model.stage4_coupling_count, model.stage4_segment_length),
        (q[6], q[7], model.stage5_coupling_count, model.stage5_segment_length),
    ] {
        let bend = mul(&pitch(p), &rot_x(y));
        for _ in 0..n {
            m = mul(&mul(&m, &bend), &down(len));
            points.push(origin_of(&m));
        }
    }
    m = mul(&mul(&mul(&m, &rot_z(q[8])), &pitch(q[9])), &down(model.wrist_gripper_length));
    points.push(origin_of(&m));
    points
}

pub fn fk_tip(model: &ArmModel, q: &DofVector) -> [f64; 3] {
    *fk_points(model, q).last().unwrap()
}

pub fn random_in_limits(model: &ArmModel, rng: &mut ChaCha8Rng) -> DofVector {
    let ranges = model.limits.ranges();
    DofVector::new(std::array::from_fn(|d| rng.random_range(ranges[d].0..=ranges[d].1)))
}

/// Grid nodes certified reachable: a planar configuration (mast, yaws and
/// wrist roll at zero) was found whose tip lands within `tol` of the node.
/// Samples are biased toward the joint limits, where the reach boundary lives.
pub fn reachable_nodes(model: &ArmModel, spec: &GridSpec, samples: usize, tol: f64, seed: u64) -> Vec<bool> {
    let lim = model.limits;
    let planar = [lim.stage1_pitch, lim.stage2_pitch, lim.stage3_pitch, lim.stage4_pitch, lim.stage5_pitch, lim.wrist_pitch];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = vec![f64::INFINITY; spec.len()];
    for _ in 0..samples {
        let angles: [f64; 6] = std::array::from_fn(|k| {
            let [lo, hi] = planar[k];
            if rng.random::<f64>() < 0.25 {
                if rng.random::<bool>() { lo } else { hi }
            } else {
                rng.random_range(lo..=hi)
            }
        });
        // planar chain: heading accumulates pitch, each link steps along it
        let (mut x, mut z, mut heading) = (0.0f64, -model.mast_length, 0.0f64);
        let mut step = |deg: f64, len: f64, x: &mut f64, z: &mut f64| {
            heading += deg.to_radians();
            *x += len * heading.sin();
            *z -= len * heading.cos();
        };
        for &a in &angles[0..3] {
            step(a, model.stage123_segment_length, &mut x, &mut z);
        }
        for _ in 0..model.stage4_coupling_count {
            step(angles[3], model.stage4_segment_length, &mut x, &mut z);
        }
        for _ in 0..model.stage5_coupling_count {
            step(angles[4], model.stage5_segment_length, &mut x, &mut z);
        }
        step(angles[5], model.wrist_gripper_length, &mut x, &mut z);

        let i = ((x - spec.r0) / spec.dr).round();
        let j = ((z - spec.z0) / spec.dz).round();
        if i < 0.0 || j < 0.0 || i >= spec.nr as f64 || j >= spec.nz as f64 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        let (r, zz) = (spec.r0 + i as f64 * spec.dr, spec.z0 + j as f64 * spec.dz);
        let d = (x - r).hypot(z - zz);
        let slot = &mut best[i * spec.nz + j];
        if d < *slot {
            *slot = d;
        }
    }
    best.into_iter().map(|d| d <= tol).collect()
}

fn is_neighbor(mode: Neighborhood, di: isize, dj: isize) -> bool {
    match mode {
        Neighborhood::Diagonal => di.abs() == 1 && dj.abs() == 1,
        Neighborhood::VonNeumann => di.abs() + dj.abs() == 1,
        Neighborhood::Moore => (di, dj) != (0, 0) && di.abs() <= 1 && dj.abs() <= 1,
    }
}

/// Brute force: scan every other node of the grid and sum distances to those
/// that are neighbors of (i, j).
pub fn brute_penalty(table: &ConfigTable, i: usize, j: usize, mode: Neighborhood) -> f64 {
    let spec = table.spec;
    let here = table.entries[i * spec.nz + j].as_array();
    let mut sum = 0.0;
    for k in 0..spec.nr {
        for m in 0..spec.nz {
            if !is_neighbor(mode, k as isize - i as isize, m as isize - j as isize) {
                continue;
            }
            let there = table.entries[k * spec.nz + m].as_array();
            let mut sq = 0.0;
            for d in 0..here.len() {
                sq += (here[d] - there[d]) * (here[d] - there[d]);
            }
            sum += sq.sqrt();
        }
    }
    sum
}

pub fn brute_total_penalty(table: &ConfigTable, mode: Neighborhood) -> f64 {
    let mut total = 0.0;
    for i in 0..table.spec.nr {
        for j in 0..table.spec.nz {
            total += brute_penalty(table, i, j, mode);
        }
    }
    total
}

/// A table of uniformly random in-limit entries (residuals are whatever they are).
pub fn random_table(model: &ArmModel, nr: usize, nz: usize, seed: u64) -> ConfigTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec { nr, nz, ..GridSpec::default() };
    let entries = (0..spec.len()).map(|_| random_in_limits(model, &mut rng)).collect();
    ConfigTable::from_entries(model, spec, entries, serpentik::EsParams::default()).unwrap()
}
