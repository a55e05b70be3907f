mod common;

use thermoporo::effective::upscale;
use thermoporo::fem::solver::SolverOptions;
use thermoporo::macro_solver::{run, ScalarBoundary, TimeGrid};
use thermoporo::material::PhaseParameters;
use thermoporo::micro_dns::{setup_micro, unit_jump_energy, InterfaceMode, MicroSimulation, DESK_CAP};
use thermoporo::source::VectorSource;
use thermoporo::unit_cell::{build_unit_cell, build_unit_cell_allow_empty, tile_micro_domain, Inclusion};

/// Without an inclusion the resolved model is the macro model itself.
#[test]
fn homogeneous_dns_reproduces_the_macro_solution() {
    let params = PhaseParameters::homogeneous(common::matrix_phase(), 1.0, 1.0);
    let cell = build_unit_cell_allow_empty(2, &Inclusion::Voxels { cells: vec![] }).unwrap();
    let mut sources = common::smooth_sources();
    sources.force = std::array::from_fn(|_| VectorSource::constant([0.2, 0.0, -0.1]));
    let (_, coeffs) = upscale(&cell, &params, &sources).unwrap();
    assert!(!coeffs.inclusion_active());

    let time = TimeGrid {
        dt: 0.05,
        t_end: 0.2,
        output_every: 1,
    };
    let opts = SolverOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let mesh = tile_micro_domain(&cell, 0.25, true).unwrap();
    let sys = setup_micro(&mesh, &params, InterfaceMode::Merged, DESK_CAP).unwrap();
    let micro = MicroSimulation::new(&sys, time.dt, &sources, &opts)
        .unwrap()
        .run(&time)
        .unwrap();
    let (_, mac) = run(&coeffs, mesh.grid.cells_per_axis(), ScalarBoundary::Mixed, &time, &opts).unwrap();

    let (a, b) = (&micro.final_state, &mac.final_state);
    let scale = a.p[0].iter().fold(0.0f64, |s, v| s.max(v.abs()));
    assert!(scale > 1e-4);
    let mut worst = 0.0f64;
    for v in 0..a.u.len() {
        for i in 0..3 {
            worst = worst.max((a.u[v][i] - b.u[v][i]).abs());
        }
        worst = worst.max((a.p[0][v] - b.p[0][v]).abs());
        worst = worst.max((a.theta[0][v] - b.theta[0][v]).abs());
    }
    println!("largest nodal gap {worst:.3e}");
    assert!(worst < 1e-9);
}

#[test]
fn unit_jump_energy_does_not_depend_on_the_period() {
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
    let params = common::contrast_params();
    let e: Vec<f64> = [0.5, 0.25, 0.125]
        .iter()
        .map(|&eps| {
            let mesh = tile_micro_domain(&cell, eps, false).unwrap();
            unit_jump_energy(&setup_micro(&mesh, &params, InterfaceMode::Duplicated, DESK_CAP).unwrap())
        })
        .collect();
    for v in &e {
        assert!((v / e[0] - 1.0).abs() < 1e-10, "{e:?}");
    }
}

#[test]
fn oversized_runs_are_refused() {
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
    let mesh = tile_micro_domain(&cell, 0.25, false).unwrap();
    let err = setup_micro(&mesh, &common::contrast_params(), InterfaceMode::Duplicated, 100);
    assert!(matches!(err, Err(thermoporo::error::Error::DeskCap { .. })));
}
