//! (1+1) evolution strategy for single-target IK, and the grid sweep built on it.
//!
//! One candidate is kept. Components are mutated one at a time, base first,
//! with a zero-mean Gaussian whose standard deviation decays geometrically with
//! that component's count of accepted mutations. A run of failures on a
//! component resets its variance. A point that goes through `max_resets`
//! resets without a single accepted mutation in between is given up until the
//! next pass.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::arm_model::{ArmModel, ConstraintWeights, DofVector, Point, NUM_DOFS};
use crate::error::{Error, Result};
use crate::rng::{sweep_stream, SolverRng};
use crate::table::{ConfigTable, SweepInfo};
use crate::workspace::GridSpec;

/// Components mutated while solving in the fixed plane, base first. The mast
/// rotation stays at zero; it is supplied by target decomposition at lookup time.
pub const PLANE_COMPONENTS: [usize; NUM_DOFS - 1] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

pub const INCH: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsParams {
    /// Initial mutation standard deviation per DOF, degrees. A scalar applies to all.
    #[serde(deserialize_with = "per_dof")]
    pub sigma_init: [f64; NUM_DOFS],
    /// Per-DOF variance decay per accepted mutation. A scalar applies to all.
    #[serde(deserialize_with = "per_dof")]
    pub decay: [f64; NUM_DOFS],
    /// Convergence radius, feet.
    pub tolerance: f64,
    pub max_evals: u64,
    pub fail_reset_threshold: u32,
    pub max_resets: u32,
    pub seed: u64,
    pub constraints: ConstraintWeights,
}

impl Default for EsParams {
    fn default() -> Self {
        EsParams {
            sigma_init: [10.0; NUM_DOFS],
            decay: [0.95; NUM_DOFS],
            tolerance: INCH,
            max_evals: 50_000,
            fail_reset_threshold: 200,
            max_resets: 5,
            seed: 0,
            constraints: ConstraintWeights::default(),
        }
    }
}

fn per_dof<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<[f64; NUM_DOFS], D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum ScalarOrArray {
        Scalar(f64),
        Array([f64; NUM_DOFS]),
    }
    Ok(match ScalarOrArray::deserialize(d)? {
        ScalarOrArray::Scalar(v) => [v; NUM_DOFS],
        ScalarOrArray::Array(a) => a,
    })
}

impl EsParams {
    pub fn validate(&self) -> Result<()> {
        for dof in 0..NUM_DOFS {
            let (s, d) = (self.sigma_init[dof], self.decay[dof]);
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidConfig(format!("sigma_init must be > 0, got {s}")));
            }
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidConfig(format!("decay must be in (0, 1), got {d}")));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if self.fail_reset_threshold == 0 {
            return Err(Error::InvalidConfig("fail_reset_threshold must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-component annealing bookkeeping for one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealState {
    pub sigma: [f64; NUM_DOFS],
    pub successes: [u32; NUM_DOFS],
    pub failures: [u32; NUM_DOFS],
    /// Variance resets over the whole solve.
    pub resets: u32,
    /// Variance resets since the last accepted mutation on any component.
    pub stalled_resets: u32,
    sigma_init: [f64; NUM_DOFS],
    decay: [f64; NUM_DOFS],
}

impl AnnealState {
    pub fn new(params: &EsParams) -> Self {
        AnnealState {
            sigma: params.sigma_init,
            successes: [0; NUM_DOFS],
            failures: [0; NUM_DOFS],
            resets: 0,
            stalled_resets: 0,
            sigma_init: params.sigma_init,
            decay: params.decay,
        }
    }

    pub fn record_success(&mut self, c: usize) {
        self.successes[c] += 1;
        self.failures[c] = 0;
        self.stalled_resets = 0;
        self.sigma[c] = self.sigma_init[c] * self.decay[c].powi(self.successes[c] as i32);
    }

    /// Counts a rejected mutation; returns true when it triggered a variance reset.
    pub fn record_failure(&mut self, c: usize, threshold: u32) -> bool {
        self.failures[c] += 1;
        if self.failures[c] >= threshold {
            self.sigma[c] = self.sigma_init[c];
            self.successes[c] = 0;
            self.failures[c] = 0;
            self.resets += 1;
            self.stalled_resets += 1;
            true
        } else {
            false
        }
    }
}

/// Copy of `q` with component `c` perturbed by `N(0, sigma[c]^2)` and clamped.
pub fn mutate_component(
    model: &ArmModel,
    q: &DofVector,
    c: usize,
    state: &AnnealState,
    rng: &mut SolverRng,
) -> DofVector {
    let step: f64 = rng.sample(StandardNormal);
    let (lo, hi) = model.limits.range(c);
    let mut out = *q;
    out[c] = (q[c] + state.sigma[c] * step).clamp(lo, hi);
    out
}

/// Distance from the end effector (mast rotation held at zero) to `(r, 0, z)`.
pub fn distance_fitness(model: &ArmModel, q: &DofVector, target: (f64, f64)) -> Result<f64> {
    let ee = model.end_effector(&q.with_mast(0.0))?;
    Ok(plane_distance(&ee, target))
}

pub(crate) fn plane_distance(ee: &Point, (r, z): (f64, f64)) -> f64 {
    (ee - Point::new(r, 0.0, z)).norm()
}

pub fn random_config(model: &ArmModel, rng: &mut SolverRng) -> DofVector {
    let ranges = model.limits.ranges();
    DofVector(std::array::from_fn(|dof| {
        let (lo, hi) = ranges[dof];
        rng.random_range(lo..=hi)
    }))
}

/// Restarts drawn around the initial guess before falling back to uniform ones.
const NEARBY_RESTARTS: u32 = 3;

/// `q` plus independent Gaussian noise of `scale * sigma` per component, clamped to limits.
pub fn perturb(model: &ArmModel, q: &DofVector, sigma: &[f64; NUM_DOFS], scale: f64, rng: &mut SolverRng) -> DofVector {
    let ranges = model.limits.ranges();
    DofVector(std::array::from_fn(|dof| {
        let step: f64 = rng.sample(StandardNormal);
        let (lo, hi) = ranges[dof];
        (q[dof] + scale * sigma[dof] * step).clamp(lo, hi)
    }))
}

/// How a component-sequential search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Goal,
    Budget,
    GaveUp,
}

pub(crate) struct SearchOutcome<S> {
    pub config: DofVector,
    pub score: S,
    pub evals: u64,
    pub accepted: u64,
    pub termination: Termination,
}

/// The shared mutate / accept / anneal / reset loop.
///
/// `evaluate` scores a candidate, `accept(current, candidate)` decides whether
/// it replaces the current one, and `done` ends the search early.
pub(crate) fn component_search<S>(
    model: &ArmModel,
    params: &EsParams,
    budget: u64,
    init: DofVector,
    rng: &mut SolverRng,
    mut evaluate: impl FnMut(&DofVector) -> S,
    accept: impl Fn(&S, &S) -> bool,
    done: impl Fn(&S) -> bool,
    mut on_accept: impl FnMut(usize, &DofVector, &S),
) -> SearchOutcome<S> {
    let mut state = AnnealState::new(params);
    let mut current = init;
    let mut score = evaluate(&current);
    let mut evals = 0;
    let mut accepted = 0;

    if done(&score) {
        return SearchOutcome {
            config: current,
            score,
            evals,
            accepted,
            termination: Termination::Goal,
        };
    }
    let termination = 'search: loop {
        for &c in &PLANE_COMPONENTS {
            if evals >= budget {
                break 'search Termination::Budget;
            }
            let candidate = mutate_component(model, &current, c, &state, rng);
            evals += 1;
            let cand_score = evaluate(&candidate);
            if accept(&score, &cand_score) {
                current = candidate;
                score = cand_score;
                accepted += 1;
                state.record_success(c);
                on_accept(c, &current, &score);
                if done(&score) {
                    break 'search Termination::Goal;
                }
            } else if state.record_failure(c, params.fail_reset_threshold)
                && state.stalled_resets >= params.max_resets
            {
                break 'search Termination::GaveUp;
            }
        }
    };
    SearchOutcome {
        config: current,
        score,
        evals,
        accepted,
        termination,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveResult {
    pub config: DofVector,
    /// Distance to target, feet.
    pub residual: f64,
    pub evals: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct DistanceScore {
    objective: f64,
    residual: f64,
}

fn distance_score(model: &ArmModel, params: &EsParams, q: &DofVector, target: (f64, f64)) -> DistanceScore {
    if params.constraints.is_zero() {
        let residual = plane_distance(&model.end_effector_unchecked(q), target);
        DistanceScore {
            objective: residual,
            residual,
        }
    } else {
        let pose = model.pose_unchecked(q);
        let residual = plane_distance(&pose.end_effector(), target);
        let extra = model.constraint_penalties(q, &pose, &params.constraints);
        DistanceScore {
            objective: residual + extra,
            residual,
        }
    }
}

/// Solves one target `(r, z)` in the mast-zero plane starting from `init`.
pub fn solve_point(
    model: &ArmModel,
    target: (f64, f64),
    init: &DofVector,
    params: &EsParams,
    rng: &mut SolverRng,
) -> Result<SolveResult> {
    solve_point_traced(model, target, init, params, rng, |_, _, _| {})
}

/// [`solve_point`] with a callback on every accepted mutation:
/// `(component, accepted config, objective)`.
pub fn solve_point_traced(
    model: &ArmModel,
    target: (f64, f64),
    init: &DofVector,
    params: &EsParams,
    rng: &mut SolverRng,
    mut on_accept: impl FnMut(usize, &DofVector, f64),
) -> Result<SolveResult> {
    let init = init.with_mast(0.0);
    model.check_limits(&init)?;
    let out = component_search(
        model,
        params,
        params.max_evals,
        init,
        rng,
        |q| distance_score(model, params, q, target),
        |cur, cand| cand.objective < cur.objective,
        |s| s.residual <= params.tolerance,
        |c, q, s| on_accept(c, q, s.objective),
    );
    Ok(SolveResult {
        config: out.config,
        residual: out.score.residual,
        evals: out.evals,
        converged: out.score.residual <= params.tolerance,
    })
}

/// [`solve_point`] from `init`, then from fresh random configurations while the
/// point is unconverged and its `max_evals` budget lasts. Returns the converged
/// attempt, or else the attempt from `init`; `evals` counts every attempt.
pub fn solve_with_restarts(
    model: &ArmModel,
    target: (f64, f64),
    init: &DofVector,
    params: &EsParams,
    rng: &mut SolverRng,
) -> Result<SolveResult> {
    let mut best = solve_point(model, target, init, params, rng)?;
    let mut used = best.evals;
    let mut attempt_no = 0;
    while !best.converged && used < params.max_evals {
        let attempt = EsParams {
            max_evals: params.max_evals - used,
            ..params.clone()
        };
        attempt_no += 1;
        let start = if attempt_no <= NEARBY_RESTARTS {
            perturb(model, init, &params.sigma_init, (1 << attempt_no) as f64, rng)
        } else {
            random_config(model, rng)
        };
        let res = solve_point(model, target, &start, &attempt, rng)?;
        used += res.evals;
        if res.converged {
            best = res;
        }
    }
    best.evals = used;
    Ok(best)
}

/// Grid traversal used by the sweep and by coevolution passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Rows of constant z from the bottom up, alternating r direction per row.
    #[default]
    Serpentine,
    /// The exact reverse of `Serpentine`.
    ReverseSerpentine,
}

impl SweepOrder {
    pub fn sequence(&self, spec: &GridSpec) -> Vec<(usize, usize)> {
        let mut seq = Vec::with_capacity(spec.len());
        for j in 0..spec.nz {
            if j % 2 == 0 {
                seq.extend((0..spec.nr).map(|i| (i, j)));
            } else {
                seq.extend((0..spec.nr).rev().map(|i| (i, j)));
            }
        }
        if *self == SweepOrder::ReverseSerpentine {
            seq.reverse();
        }
        seq
    }
}

/// Solves every grid point and collects the results into a table.
///
/// With `warm_start` each point starts from the most recent converged solution
/// along the traversal (the previous point's result until one converges), so
/// the sweep is sequential. Either way an unconverged point spends the rest of
/// its budget on random restarts (see [`solve_with_restarts`]). Without it every point starts from a uniformly
/// random legal configuration drawn from its own stream, and points are solved
/// in parallel.
pub fn sweep_grid(
    model: &ArmModel,
    spec: &GridSpec,
    params: &EsParams,
    order: SweepOrder,
    warm_start: bool,
) -> Result<ConfigTable> {
    model.validate()?;
    spec.validate()?;
    params.validate()?;

    let mut results: Vec<Option<SolveResult>> = vec![None; spec.len()];
    if warm_start {
        let mut seed_config: Option<DofVector> = None;
        let mut last_converged = false;
        for (i, j) in order.sequence(spec) {
            let idx = spec.index(i, j);
            let mut rng = sweep_stream(params.seed, idx);
            let init = match seed_config {
                Some(q) => q,
                None => random_config(model, &mut rng),
            };
            let target = spec.position_unchecked(i, j);
            let res = solve_with_restarts(model, target, &init, params, &mut rng)?;
            if res.converged || !last_converged {
                seed_config = Some(res.config);
                last_converged = res.converged;
            }
            results[idx] = Some(res);
        }
    } else {
        let solved: Vec<Result<SolveResult>> = (0..spec.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = spec.unflatten(idx);
                let mut rng = sweep_stream(params.seed, idx);
                let init = random_config(model, &mut rng);
                solve_with_restarts(model, spec.position_unchecked(i, j), &init, params, &mut rng)
            })
            .collect();
        for (slot, res) in results.iter_mut().zip(solved) {
            *slot = Some(res?);
        }
    }

    let results: Vec<SolveResult> = results.into_iter().map(|r| r.expect("every point solved")).collect();
    Ok(ConfigTable::from_sweep(
        model,
        *spec,
        &results,
        params.clone(),
        SweepInfo { order, warm_start },
    ))
}
