//! Neighbor penalty over the configuration grid and the coevolution schemes
//! that smooth the table while holding each point on its target.
//!
//! Penalties are in degrees (joint space), residuals in feet. The two are never
//! folded into one scalar: each acceptance rule compares them separately.

use serde::{Deserialize, Serialize};

use crate::arm_model::{ArmModel, DofVector};
use crate::error::{Error, Result};
use crate::es_solver::{component_search, plane_distance, EsParams, SweepOrder, Termination};
use crate::rng::pass_stream;
use crate::table::{CoevoRecord, ConfigTable};
use crate::workspace::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// The four diagonal neighbors (i±1, j±1).
    Diagonal,
    /// The four edge-adjacent neighbors.
    #[default]
    VonNeumann,
    /// All eight surrounding neighbors.
    Moore,
}

impl Neighborhood {
    /// Neighbor offsets `(di, dj)` in row-major order of the neighbor index.
    pub fn offsets(&self) -> &'static [(isize, isize)] {
        match self {
            Neighborhood::Diagonal => &[(-1, -1), (-1, 1), (1, -1), (1, 1)],
            Neighborhood::VonNeumann => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Neighborhood::Moore => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }

    /// In-grid neighbors of (i, j).
    pub fn neighbors(&self, spec: &GridSpec, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nr, nz) = (spec.nr as isize, spec.nz as isize);
        self.offsets().iter().filter_map(move |&(di, dj)| {
            let (k, m) = (i as isize + di, j as isize + dj);
            (k >= 0 && k < nr && m >= 0 && m < nz).then_some((k as usize, m as usize))
        })
    }
}

impl std::str::FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Neighborhood::Diagonal),
            "von_neumann" => Ok(Neighborhood::VonNeumann),
            "moore" => Ok(Neighborhood::Moore),
            other => Err(Error::InvalidConfig(format!(
                "unknown neighborhood {other:?} (diagonal | von_neumann | moore)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoevoMethod {
    /// Reduce penalty without letting the residual grow.
    Strict,
    /// Every accepted move must reduce both residual and penalty.
    Coupled,
    /// Alternate penalty passes (residual capped at `relax_bound`) with distance passes.
    #[default]
    Alternating,
}

impl std::str::FromStr for CoevoMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(CoevoMethod::Strict),
            "coupled" => Ok(CoevoMethod::Coupled),
            "alternating" => Ok(CoevoMethod::Alternating),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (strict | coupled | alternating)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoevoParams {
    pub method: CoevoMethod,
    pub neighborhood: Neighborhood,
    pub passes: usize,
    /// Residual (feet) a penalty pass may degrade a point to.
    pub relax_bound: f64,
    /// Mutation budget per point in penalty, strict and coupled passes.
    /// Distance passes use `es.max_evals`.
    pub evals_per_point: u64,
    pub es: EsParams,
}

impl Default for CoevoParams {
    fn default() -> Self {
        let es = EsParams::default();
        CoevoParams {
            method: CoevoMethod::Alternating,
            neighborhood: Neighborhood::VonNeumann,
            passes: 6,
            relax_bound: es.tolerance,
            evals_per_point: 2_000,
            es,
        }
    }
}

impl CoevoParams {
    pub fn validate(&self) -> Result<()> {
        self.es.validate()?;
        if self.passes < 1 {
            return Err(Error::InvalidConfig("passes must be >= 1".into()));
        }
        if !(self.relax_bound >= self.es.tolerance) {
            return Err(Error::InvalidConfig(format!(
                "relax_bound ({}) must be >= tolerance ({})",
                self.relax_bound, self.es.tolerance
            )));
        }
        Ok(())
    }

    /// Objective of each pass. Alternating runs end on a distance pass.
    pub fn schedule(&self) -> Vec<PassObjective> {
        match self.method {
            CoevoMethod::Strict => vec![PassObjective::Strict; self.passes],
            CoevoMethod::Coupled => vec![PassObjective::Coupled; self.passes],
            CoevoMethod::Alternating => (0..self.passes)
                .rev()
                .map(|left| {
                    if left % 2 == 0 {
                        PassObjective::Distance
                    } else {
                        PassObjective::Penalty {
                            relax_bound: self.relax_bound,
                        }
                    }
                })
                .collect(),
        }
    }
}

/// Acceptance rule for one pass over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PassObjective {
    /// Penalty must fall; residual must not rise.
    Strict,
    /// Residual and penalty must both fall.
    Coupled,
    /// Penalty must fall; residual must stay within `relax_bound`, or, for a
    /// point that starts the pass outside it, must not rise.
    Penalty { relax_bound: f64 },
    /// Residual must fall; penalty is ignored. Stops at tolerance.
    Distance,
}

impl PassObjective {
    pub fn accepts(&self, current: &PointScore, candidate: &PointScore) -> bool {
        match *self {
            PassObjective::Strict => {
                candidate.penalty < current.penalty && candidate.residual <= current.residual
            }
            PassObjective::Coupled => {
                candidate.residual < current.residual && candidate.penalty < current.penalty
            }
            PassObjective::Penalty { relax_bound } => {
                candidate.penalty < current.penalty && candidate.residual <= relax_bound
            }
            PassObjective::Distance => candidate.residual < current.residual,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PassObjective::Strict => "strict",
            PassObjective::Coupled => "coupled",
            PassObjective::Penalty { .. } => "penalty",
            PassObjective::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScore {
    /// Feet.
    pub residual: f64,
    /// Degrees.
    pub penalty: f64,
}

/// Sum of joint-space distances from `q` to the given neighbor entries.
fn penalty_against(q: &DofVector, table: &ConfigTable, neighbors: &[(usize, usize)]) -> f64 {
    neighbors
        .iter()
        .map(|&(k, m)| q.distance(&table.entries[table.spec.index(k, m)]))
        .sum()
}

/// Neighbor penalty of node (i, j): sum of two-norm differences, in degrees,
/// to every in-grid neighbor.
pub fn penalty(table: &ConfigTable, i: usize, j: usize, neighborhood: Neighborhood) -> Result<f64> {
    table.spec.check(i, j)?;
    let nbrs: Vec<_> = neighborhood.neighbors(&table.spec, i, j).collect();
    Ok(penalty_against(&table.entries[table.spec.index(i, j)], table, &nbrs))
}

/// Sum of [`penalty`] over every node. Each neighbor pair is counted from both sides.
pub fn total_penalty(table: &ConfigTable, neighborhood: Neighborhood) -> f64 {
    let spec = table.spec;
    (0..spec.nr)
        .flat_map(|i| (0..spec.nz).map(move |j| (i, j)))
        .map(|(i, j)| penalty(table, i, j, neighborhood).expect("in grid"))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointOutcome {
    Improved,
    Stalled,
    GaveUp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointUpdate {
    pub entry: DofVector,
    pub residual: f64,
    pub penalty: f64,
    pub accepted: u64,
    pub evals: u64,
    pub gave_up: bool,
    pub outcome: PointOutcome,
}

/// Runs the component-sequential mutation loop on one node against `objective`,
/// holding its neighbors fixed. The table is not modified.
pub fn coevolve_point(
    table: &ConfigTable,
    model: &ArmModel,
    i: usize,
    j: usize,
    objective: PassObjective,
    neighborhood: Neighborhood,
    es: &EsParams,
    budget: u64,
    rng: &mut crate::rng::SolverRng,
) -> Result<PointUpdate> {
    table.spec.check(i, j)?;
    let nbrs: Vec<_> = neighborhood.neighbors(&table.spec, i, j).collect();
    let target = table.spec.position_unchecked(i, j);
    let start = table.entries[table.spec.index(i, j)];
    model.check_limits(&start)?;

    let score = |q: &DofVector| PointScore {
        residual: plane_distance(&model.end_effector_unchecked(q), target),
        penalty: penalty_against(q, table, &nbrs),
    };
    let objective = match objective {
        // a point already outside the bound may not drift further out
        PassObjective::Penalty { relax_bound } => PassObjective::Penalty {
            relax_bound: relax_bound.max(score(&start).residual),
        },
        other => other,
    };
    let tolerance = es.tolerance;
    let stop_at_tolerance = matches!(objective, PassObjective::Distance);
    let out = component_search(
        model,
        es,
        budget,
        start,
        rng,
        score,
        |cur, cand| objective.accepts(cur, cand),
        |s| stop_at_tolerance && s.residual <= tolerance,
        |_, _, _| {},
    );
    let gave_up = out.termination == Termination::GaveUp;
    let outcome = if out.accepted > 0 {
        PointOutcome::Improved
    } else if gave_up {
        PointOutcome::GaveUp
    } else {
        PointOutcome::Stalled
    };
    Ok(PointUpdate {
        entry: out.config,
        residual: out.score.residual,
        penalty: out.score.penalty,
        accepted: out.accepted,
        evals: out.evals,
        gave_up,
        outcome,
    })
}

/// Summary of one completed pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassStats {
    pub pass: usize,
    pub objective: String,
    pub total_penalty: f64,
    pub mean_penalty: f64,
    pub mean_residual: f64,
    pub max_residual: f64,
    pub converged: usize,
    pub points_updated: usize,
    pub points_given_up: usize,
    pub evals: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoevoHistory {
    pub passes: Vec<PassStats>,
}

impl CoevoHistory {
    /// Delimited export, one row per pass.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.passes {
            w.serialize(p).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }
}

fn pass_stats(table: &ConfigTable, pass: usize, objective: &str, neighborhood: Neighborhood) -> PassStats {
    let total = total_penalty(table, neighborhood);
    let n = table.spec.len() as f64;
    PassStats {
        pass,
        objective: objective.to_string(),
        total_penalty: total,
        mean_penalty: total / n,
        mean_residual: table.residual.iter().sum::<f64>() / n,
        max_residual: table.residual.iter().copied().fold(0.0, f64::max),
        converged: table.converged_count(),
        points_updated: 0,
        points_given_up: 0,
        evals: 0,
    }
}

/// Repeated Gauss-Seidel sweeps of [`coevolve_point`] over the grid.
///
/// Each pass visits nodes in serpentine order, writing every update back
/// before the next node is visited. Anneal state and give-up flags start
/// fresh at every pass.
pub fn coevolve(table: &ConfigTable, model: &ArmModel, params: &CoevoParams) -> Result<(ConfigTable, CoevoHistory)> {
    table.ensure_model(model)?;
    params.validate()?;
    let mut table = table.clone();
    let spec = table.spec;
    let order = SweepOrder::Serpentine.sequence(&spec);
    let first_pass = table.provenance.passes_applied() + 1;
    // last within-tolerance entry per point, restored when a distance pass cannot reconverge it
    let mut last_good: Vec<Option<(DofVector, f64)>> = (0..spec.len())
        .map(|k| table.converged[k].then(|| (table.entries[k], table.residual[k])))
        .collect();
    let mut history = CoevoHistory::default();

    for (p, objective) in params.schedule().into_iter().enumerate() {
        let pass = first_pass + p;
        let budget = match objective {
            PassObjective::Distance => params.es.max_evals,
            _ => params.evals_per_point,
        };
        let (mut updated, mut given_up, mut evals) = (0, 0, 0);
        for &(i, j) in &order {
            let idx = spec.index(i, j);
            let mut rng = pass_stream(params.es.seed, pass, idx);
            let up = coevolve_point(&table, model, i, j, objective, params.neighborhood, &params.es, budget, &mut rng)?;
            evals += up.evals;
            if up.accepted > 0 {
                updated += 1;
            }
            if up.gave_up {
                given_up += 1;
            }
            let (entry, residual) = match (objective, &last_good[idx]) {
                (PassObjective::Distance, Some(good)) if up.residual > params.es.tolerance => *good,
                _ => (up.entry, up.residual),
            };
            table.entries[idx] = entry;
            table.residual[idx] = residual;
            table.converged[idx] = residual <= params.es.tolerance;
            if table.converged[idx] {
                last_good[idx] = Some((entry, residual));
            }
        }
        let mut stats = pass_stats(&table, pass, objective.label(), params.neighborhood);
        stats.points_updated = updated;
        stats.points_given_up = given_up;
        stats.evals = evals;
        history.passes.push(stats);
    }

    table.provenance.coevolution.push(CoevoRecord {
        params: params.clone(),
        history: history.passes.clone(),
    });
    Ok((table, history))
}

/// Residual histogram bin edges, in inches; the last bin is open-ended.
pub const RESIDUAL_BINS_INCHES: [f64; 8] = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 6.0, 12.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub neighborhood: Neighborhood,
    /// Largest two-norm difference over neighbor pairs, degrees.
    pub max_neighbor_distance: f64,
    /// Mean two-norm difference over unordered neighbor pairs, degrees.
    pub mean_neighbor_distance: f64,
    pub total_penalty: f64,
    /// `total_penalty` divided by the number of grid points.
    pub mean_penalty: f64,
    /// Counts per [`RESIDUAL_BINS_INCHES`] bin (`[lo, hi)`, last bin `[12, inf)`).
    pub residual_histogram: Vec<usize>,
    pub unconverged: usize,
    pub max_converged_residual: f64,
    pub mean_converged_residual: f64,
}

pub fn smoothness_report(table: &ConfigTable, neighborhood: Neighborhood) -> SmoothnessReport {
    let spec = table.spec;
    let (mut max_d, mut sum_d, mut pairs) = (0.0f64, 0.0, 0usize);
    for i in 0..spec.nr {
        for j in 0..spec.nz {
            let q = &table.entries[spec.index(i, j)];
            for (k, m) in neighborhood.neighbors(&spec, i, j) {
                // each unordered pair once
                if (k, m) > (i, j) {
                    let d = q.distance(&table.entries[spec.index(k, m)]);
                    max_d = max_d.max(d);
                    sum_d += d;
                    pairs += 1;
                }
            }
        }
    }
    let mut histogram = vec![0; RESIDUAL_BINS_INCHES.len()];
    for &r in &table.residual {
        let inches = r * 12.0;
        let bin = RESIDUAL_BINS_INCHES.iter().rposition(|&lo| inches >= lo).unwrap_or(0);
        histogram[bin] += 1;
    }
    let converged: Vec<f64> = table
        .residual
        .iter()
        .zip(&table.converged)
        .filter_map(|(&r, &c)| c.then_some(r))
        .collect();
    let total = total_penalty(table, neighborhood);
    SmoothnessReport {
        neighborhood,
        max_neighbor_distance: max_d,
        mean_neighbor_distance: if pairs > 0 { sum_d / pairs as f64 } else { 0.0 },
        total_penalty: total,
        mean_penalty: total / spec.len() as f64,
        residual_histogram: histogram,
        unconverged: table.converged.iter().filter(|&&c| !c).count(),
        max_converged_residual: converged.iter().copied().fold(0.0, f64::max),
        mean_converged_residual: if converged.is_empty() {
            0.0
        } else {
            converged.iter().sum::<f64>() / converged.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm_model::{NUM_DOFS, STAGE1_PITCH};
    use crate::rng::stream;

    fn flat_table(nr: usize, nz: usize, q: DofVector) -> (ArmModel, ConfigTable) {
        let model = ArmModel::default();
        let spec = GridSpec {
            nr,
            nz,
            ..GridSpec::default()
        };
        let table = ConfigTable::from_entries(&model, spec, vec![q; nr * nz], EsParams::default()).unwrap();
        (model, table)
    }

    fn base_q() -> DofVector {
        DofVector::new([0.0, 10.0, 20.0, 20.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn identical_entries_have_zero_penalty() {
        let (_, table) = flat_table(4, 5, base_q());
        for nh in [Neighborhood::Diagonal, Neighborhood::VonNeumann, Neighborhood::Moore] {
            for i in 0..4 {
                for j in 0..5 {
                    assert_eq!(penalty(&table, i, j, nh).unwrap(), 0.0);
                }
            }
            assert_eq!(total_penalty(&table, nh), 0.0);
            assert_eq!(smoothness_report(&table, nh).max_neighbor_distance, 0.0);
        }
    }

    #[test]
    fn interior_point_with_unit_offsets() {
        let (_, mut table) = flat_table(3, 3, base_q());
        for (k, m) in [(0, 1), (2, 1), (1, 0), (1, 2)] {
            let idx = table.spec.index(k, m);
            table.entries[idx][STAGE1_PITCH] += 1.0;
        }
        assert_eq!(penalty(&table, 1, 1, Neighborhood::VonNeumann).unwrap(), 4.0);
        assert_eq!(penalty(&table, 1, 1, Neighborhood::Diagonal).unwrap(), 0.0);
        assert_eq!(penalty(&table, 1, 1, Neighborhood::Moore).unwrap(), 4.0);
    }

    #[test]
    fn corner_point_counts_in_grid_neighbors_only() {
        let (_, mut table) = flat_table(3, 3, base_q());
        table.entries[table.spec.index(1, 0)][STAGE1_PITCH] += 3.0;
        table.entries[table.spec.index(0, 1)][2] += 4.0;
        table.entries[table.spec.index(1, 1)][3] -= 2.0;
        // enumerated by hand: von Neumann sees (1,0) and (0,1); the diagonal set sees (1,1)
        assert_eq!(penalty(&table, 0, 0, Neighborhood::VonNeumann).unwrap(), 3.0 + 4.0);
        assert_eq!(penalty(&table, 0, 0, Neighborhood::Diagonal).unwrap(), 2.0);
        assert_eq!(penalty(&table, 0, 0, Neighborhood::Moore).unwrap(), 9.0);
    }

    #[test]
    fn two_point_total_counts_both_sides() {
        let (_, mut table) = flat_table(1, 2, base_q());
        table.entries[1][STAGE1_PITCH] += 2.0;
        assert_eq!(total_penalty(&table, Neighborhood::VonNeumann), 4.0);
    }

    #[test]
    fn penalty_out_of_grid_is_an_error() {
        let (_, table) = flat_table(2, 2, base_q());
        assert!(matches!(
            penalty(&table, 2, 0, Neighborhood::VonNeumann),
            Err(Error::IndexOutOfGrid { .. })
        ));
    }

    #[test]
    fn alternating_schedule_ends_on_distance() {
        for passes in 1..8 {
            let p = CoevoParams {
                passes,
                ..CoevoParams::default()
            };
            let s = p.schedule();
            assert_eq!(s.len(), passes);
            assert_eq!(*s.last().unwrap(), PassObjective::Distance);
            for w in s.windows(2) {
                assert_ne!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn params_validation() {
        let mut p = CoevoParams::default();
        assert!(p.validate().is_ok());
        p.passes = 0;
        assert!(p.validate().is_err());
        let mut p = CoevoParams::default();
        p.relax_bound = p.es.tolerance / 2.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn settled_point_accepts_nothing() {
        // residual zero and identical neighbors: no rule can accept a move
        let model = ArmModel::default();
        let q = base_q();
        let ee = model.end_effector(&q).unwrap();
        let spec = GridSpec {
            r0: ee.x,
            z0: ee.z,
            nr: 1,
            nz: 1,
            ..GridSpec::default()
        };
        let table = ConfigTable::from_entries(&model, spec, vec![q], EsParams::default()).unwrap();
        assert_eq!(table.residual[0], 0.0);
        let es = EsParams::default();
        for obj in [
            PassObjective::Strict,
            PassObjective::Coupled,
            PassObjective::Penalty { relax_bound: es.tolerance },
            PassObjective::Distance,
        ] {
            let up = coevolve_point(&table, &model, 0, 0, obj, Neighborhood::VonNeumann, &es, 3_000, &mut stream(1, 0)).unwrap();
            assert_eq!(up.accepted, 0, "{obj:?}");
            assert_eq!(up.entry, q);
        }
    }

    /// Two nodes whose configurations each hit their own target exactly but
    /// differ in joint space. Closing the gap means leaving the target.
    fn exact_pair() -> (ArmModel, ConfigTable) {
        let model = ArmModel::default();
        let a = DofVector::new([0.0, 10.0, 20.0, 20.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let ea = model.end_effector(&a).unwrap();
        // a different shape reaching a point one foot further out
        let es = EsParams {
            tolerance: 1e-9,
            max_evals: 200_000,
            ..EsParams::default()
        };
        let mut rng = stream(2, 0);
        let init = DofVector::new([0.0, 30.0, 5.0, 5.0, 10.0, 0.0, -10.0, 0.0, 0.0, 30.0]);
        let b = crate::es_solver::solve_point(&model, (ea.x + 1.0, ea.z), &init, &es, &mut rng)
            .unwrap()
            .config;
        let spec = GridSpec {
            r0: ea.x,
            z0: ea.z,
            nr: 2,
            nz: 1,
            ..GridSpec::default()
        };
        let table = ConfigTable::from_entries(&model, spec, vec![a, b], EsParams::default()).unwrap();
        (model, table)
    }

    #[test]
    fn strict_rule_stalls_on_an_exact_solution() {
        let (model, table) = exact_pair();
        assert_eq!(table.residual[0], 0.0);
        assert!(penalty(&table, 0, 0, Neighborhood::VonNeumann).unwrap() > 1.0);
        let es = EsParams::default();
        let up = coevolve_point(&table, &model, 0, 0, PassObjective::Strict, Neighborhood::VonNeumann, &es, 100_000, &mut stream(4, 0)).unwrap();
        assert_eq!(up.outcome, PointOutcome::GaveUp);
        assert_eq!(up.accepted, 0);
        assert_eq!(up.entry, table.entries[0]);
    }

    #[test]
    fn penalty_pass_reduces_penalty_with_slack() {
        let (model, table) = exact_pair();
        let before = penalty(&table, 0, 0, Neighborhood::VonNeumann).unwrap();
        let es = EsParams::default();
        let obj = PassObjective::Penalty { relax_bound: 0.5 };
        let up = coevolve_point(&table, &model, 0, 0, obj, Neighborhood::VonNeumann, &es, 5_000, &mut stream(5, 0)).unwrap();
        assert_eq!(up.outcome, PointOutcome::Improved);
        assert!(up.residual <= 0.5);

        // recompute independently from the returned entry
        let other = table.entries[1];
        let after: f64 = (0..NUM_DOFS).map(|d| (up.entry[d] - other[d]).powi(2)).sum::<f64>().sqrt();
        assert_eq!(after, up.penalty);
        assert!(after < before);
        let ee = model.end_effector(&up.entry).unwrap();
        let r = ((ee.x - table.spec.r0).powi(2) + ee.y.powi(2) + (ee.z - table.spec.z0).powi(2)).sqrt();
        assert!((r - up.residual).abs() < 1e-12);
    }

    #[test]
    fn single_node_coevolution_only_refines_distance() {
        let model = ArmModel::default();
        let q = DofVector::new([0.0, 12.0, 22.0, 14.0, 5.0, 0.0, 5.0, 0.0, 0.0, 5.0]);
        let ee = model.end_effector(&q).unwrap();
        let spec = GridSpec {
            r0: ee.x + 0.5,
            z0: ee.z,
            nr: 1,
            nz: 1,
            ..GridSpec::default()
        };
        let table = ConfigTable::from_entries(&model, spec, vec![q], EsParams::default()).unwrap();
        let params = CoevoParams {
            passes: 3,
            ..CoevoParams::default()
        };
        let (out, hist) = coevolve(&table, &model, &params).unwrap();
        assert_eq!(hist.passes.len(), 3);
        assert!(hist.passes.iter().all(|p| p.total_penalty == 0.0));
        assert!(out.converged[0]);
        assert!(out.residual[0] < table.residual[0]);
        assert_eq!(out.provenance.coevolution.len(), 1);
    }

    #[test]
    fn coevolve_rejects_foreign_model() {
        let (model, table) = flat_table(2, 2, base_q());
        let other = ArmModel {
            mast_length: 12.0,
            ..model
        };
        assert!(matches!(
            coevolve(&table, &other, &CoevoParams::default()),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn history_exports_one_row_per_pass() {
        let hist = CoevoHistory {
            passes: vec![
                PassStats {
                    pass: 1,
                    objective: "penalty".into(),
                    total_penalty: 3.5,
                    mean_penalty: 0.5,
                    mean_residual: 0.01,
                    max_residual: 0.02,
                    converged: 7,
                    points_updated: 4,
                    points_given_up: 1,
                    evals: 100,
                },
                PassStats {
                    pass: 2,
                    objective: "distance".into(),
                    total_penalty: 3.0,
                    mean_penalty: 0.4,
                    mean_residual: 0.01,
                    max_residual: 0.02,
                    converged: 7,
                    points_updated: 0,
                    points_given_up: 0,
                    evals: 0,
                },
            ],
        };
        let csv = hist.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("pass,objective,total_penalty"));
        assert!(lines[2].starts_with("2,distance,3.0"));
    }
}
