#![allow(dead_code)]

use std::sync::Arc;

use serpentik::{sweep_grid, ArmModel, EsParams, GridSpec, SweepOrder, TankModel};
use serpentik_teleop::Controller;

pub fn spec() -> GridSpec {
    GridSpec { nr: 4, nz: 3, r0: 10.0, z0: -50.0, ..GridSpec::default() }
}

pub fn controller() -> Arc<Controller> {
    let model = ArmModel::default();
    let es = EsParams { seed: 3, ..EsParams::default() };
    let table = sweep_grid(&model, &spec(), &es, SweepOrder::Serpentine, true).unwrap();
    assert_eq!(table.converged_count(), spec().len(), "test table must be fully converged");
    Arc::new(Controller::new(model, TankModel::default(), table).unwrap())
}
