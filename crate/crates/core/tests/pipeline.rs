mod common;

use serpentik::config::CONFIG_ENV;
use serpentik::es_solver::solve_point_traced;
use serpentik::rng::stream;
use serpentik::{
    coevolve, ik_lookup, load_table, load_table_for, save_table, solve_point, sweep_grid, AnnealState, ArmModel,
    CoevoParams, DofVector, Error, EsParams, GridSpec, Point, ProjectConfig, SweepOrder, INCH, NUM_DOFS,
};

fn small_spec() -> GridSpec {
    GridSpec { nr: 5, nz: 4, r0: 6.0, z0: -50.0, ..GridSpec::default() }
}

#[test]
fn reachable_point_converges_and_residual_checks_out() {
    let model = ArmModel::default();
    let params = EsParams { seed: 2, ..EsParams::default() };
    let mut rng = stream(params.seed, 0);
    let res = solve_point(&model, (12.0, -48.0), &DofVector::ZERO, &params, &mut rng).unwrap();
    assert!(res.converged, "residual {}", res.residual);
    assert!(res.evals <= params.max_evals);
    assert_eq!(res.config[0], 0.0);
    let tip = common::fk_tip(&model, &res.config);
    assert!(((tip[0] - 12.0).hypot(tip[1]).hypot(tip[2] + 48.0) - res.residual).abs() < 1e-9);
}

#[test]
fn every_accepted_step_improves() {
    let model = ArmModel::default();
    let params = EsParams { seed: 3, max_evals: 5_000, ..EsParams::default() };
    let mut rng = stream(params.seed, 0);
    let mut last = f64::INFINITY;
    let mut steps = 0;
    solve_point_traced(&model, (15.0, -40.0), &DofVector::ZERO, &params, &mut rng, |c, q, obj| {
        assert!(c != 0, "mast must stay frozen");
        assert!(model.limits.contains(q));
        assert!(obj < last);
        last = obj;
        steps += 1;
    })
    .unwrap();
    assert!(steps > 0);
}

#[test]
fn unreachable_point_is_reported_not_faked() {
    let model = ArmModel::default();
    let params = EsParams { seed: 1, max_evals: 20_000, ..EsParams::default() };
    let mut rng = stream(params.seed, 0);
    // outside the total link length
    let res = solve_point(&model, (40.0, -50.0), &DofVector::ZERO, &params, &mut rng).unwrap();
    assert!(!res.converged);
    assert!(res.residual > 10.0);
}

#[test]
fn annealing_schedule() {
    let params = EsParams { sigma_init: [8.0; NUM_DOFS], decay: [0.5; NUM_DOFS], ..EsParams::default() };
    let mut state = AnnealState::new(&params);
    state.record_success(2);
    state.record_success(2);
    assert_eq!(state.sigma[2], 2.0);
    assert_eq!(state.sigma[3], 8.0);
    for _ in 0..params.fail_reset_threshold - 1 {
        assert!(!state.record_failure(2, params.fail_reset_threshold));
    }
    assert!(state.record_failure(2, params.fail_reset_threshold));
    assert_eq!(state.sigma[2], 8.0);
    assert_eq!(state.resets, 1);
}

#[test]
fn sweep_save_load_coevolve_lookup() {
    let model = ArmModel::default();
    let es = EsParams { seed: 9, ..EsParams::default() };
    let table = sweep_grid(&model, &small_spec(), &es, SweepOrder::Serpentine, true).unwrap();
    assert_eq!(table.entries.len(), 20);
    assert!(table.converged_count() >= 18, "{}", table.converged_count());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    save_table(&table, &path).unwrap();
    let loaded = load_table_for(&path, &model).unwrap();
    assert_eq!(loaded, table);

    let (smooth, _) = coevolve(&loaded, &model, &CoevoParams { passes: 2, es: es.clone(), ..CoevoParams::default() }).unwrap();
    smooth.validate(&model).unwrap();
    for k in 0..smooth.spec.len() {
        if !smooth.converged[k] {
            continue;
        }
        let (i, j) = smooth.spec.unflatten(k);
        let (r, z) = smooth.spec.position(i, j).unwrap();
        let q = ik_lookup(&smooth, &model, &Point::new(0.0, r, z)).unwrap();
        assert!((q[0] - 90.0).abs() < 1e-12);
        let tip = model.end_effector(&q).unwrap();
        let deviation = (tip - Point::new(0.0, r, z)).norm();
        assert!((deviation - smooth.residual[k]).abs() < 1e-9);
        assert!(deviation <= INCH);
    }
}

#[test]
fn tables_do_not_load_for_other_arms() {
    let model = ArmModel::default();
    let table = sweep_grid(&model, &GridSpec { nr: 1, nz: 1, r0: 10.0, z0: -50.0, ..GridSpec::default() }, &EsParams::default(), SweepOrder::Serpentine, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    save_table(&table, &path).unwrap();
    let longer = ArmModel { mast_length: 14.0, ..model };
    assert!(load_table(&path).is_ok());
    assert!(matches!(load_table_for(&path, &longer), Err(Error::ModelMismatch { .. })));
}

#[test]
fn orders_and_cold_start_all_work() {
    let model = ArmModel::default();
    let es = EsParams { seed: 4, ..EsParams::default() };
    for (order, warm) in [(SweepOrder::ReverseSerpentine, true), (SweepOrder::Serpentine, false)] {
        let t = sweep_grid(&model, &small_spec(), &es, order, warm).unwrap();
        assert!(t.converged_count() >= 18);
        assert_eq!(t.provenance.sweep.unwrap().warm_start, warm);
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("arm.toml");
    std::fs::write(&path, "[grid]\nnr = 4\nnz = 3\n[es]\nsigma_init = 5.0\nseed = 11\n").unwrap();
    let cfg = ProjectConfig::load(&path).unwrap();
    assert_eq!(cfg.es.sigma_init, [5.0; NUM_DOFS]);
    assert_eq!(cfg.es.seed, 11);
    assert_eq!(cfg.grid.nr, 4);
    assert!(matches!(ProjectConfig::load(dir.path().join("none.toml")), Err(Error::File { .. })));
    assert_eq!(CONFIG_ENV, "SERPENTIK_CONFIG");
}
