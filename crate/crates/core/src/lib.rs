//! Evolutionary inverse kinematics for a hyper-redundant serpentine arm.
//!
//! The pipeline:
//!
//! 1. [`es_solver::sweep_grid`] solves every point of a cross-section grid with a
//!    (1+1) evolution strategy and stores the configurations in a [`ConfigTable`].
//! 2. [`coevolution::coevolve`] smooths the table so neighboring grid points
//!    have nearby configurations, while keeping each on its target.
//! 3. [`lut_controller`] turns the table into a controller: bilinear lookup in
//!    the plane plus mast rotation for any 3-D target, and trajectory sampling.

pub mod arm_model;
pub mod coevolution;
pub mod config;
pub mod error;
pub mod es_solver;
pub mod lut_controller;
pub mod rng;
pub mod table;
pub mod workspace;

pub use arm_model::{ArmModel, ArmPose, ConstraintWeights, DofVector, JointLimits, Point, NUM_DOFS};
pub use coevolution::{
    coevolve, coevolve_point, penalty, smoothness_report, total_penalty, CoevoHistory, CoevoMethod,
    CoevoParams, Neighborhood, PassObjective, PassStats, PointOutcome, SmoothnessReport,
};
pub use config::ProjectConfig;
pub use error::{Error, Result};
pub use es_solver::{distance_fitness, solve_point, sweep_grid, AnnealState, EsParams, SolveResult, SweepOrder, INCH};
pub use lut_controller::{ik_lookup, interpolate, plan_trajectory, Trajectory, TrajectorySample};
pub use table::{load_table, load_table_for, save_table, ConfigTable};
pub use workspace::{decompose, CellCoord, CylTarget, GridSpec, TankModel};
