mod common;

use thermoporo::effective::{upscale, EffectiveCoefficients};
use thermoporo::fem::solver::SolverOptions;
use thermoporo::macro_solver::reduced::{ExchangeDiffusion, ReducedSolver};
use thermoporo::macro_solver::{run, MacroState, ScalarBoundary, TimeGrid};
use thermoporo::material::PhaseParameters;
use thermoporo::unit_cell::{build_unit_cell, Inclusion};

const RES: usize = 6;

fn coefficients(edit: impl Fn(&mut PhaseParameters)) -> EffectiveCoefficients {
    let mut params = common::contrast_params();
    edit(&mut params);
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
    let mut sources = common::smooth_sources();
    sources.force = std::array::from_fn(|_| thermoporo::source::VectorSource::constant([0.3, -0.2, 0.1]));
    upscale(&cell, &params, &sources).unwrap().1
}

/// Largest nodal gap between the macro field of `kind` and the reduced model.
fn gap(c: &EffectiveCoefficients, kind: usize) -> f64 {
    let time = TimeGrid {
        dt: 0.05,
        t_end: 0.3,
        output_every: 1,
    };
    let opts = SolverOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let (_, out) = run(c, RES, ScalarBoundary::Mixed, &time, &opts).unwrap();
    let s = c.sources();
    let (p0, p1) = (c.phase(0), c.phase(1));
    let model = if kind == 0 {
        ExchangeDiffusion {
            storage: [p0.phi_star, p1.phi_star],
            diffusion: [p0.permeability, p1.permeability],
            exchange: c.zeta_star,
            sources: s.fluid.clone(),
        }
    } else {
        ExchangeDiffusion {
            storage: [p0.c_star, p1.c_star],
            diffusion: [p0.conductivity, p1.conductivity],
            exchange: c.omega_star,
            sources: s.heat.clone(),
        }
    };
    let reduced = ReducedSolver::new(model, RES, time.dt);
    let mut x = vec![0.0; reduced.num_dofs()];
    let mut t = 0.0;
    let mut worst = 0.0f64;
    for state in out.outputs.iter().skip(1) {
        x = reduced.step(&x, t).unwrap();
        t += time.dt;
        assert!((state.time - t).abs() < 1e-12);
        let field = |s: &MacroState, m: usize| if kind == 0 { s.p[m].clone() } else { s.theta[m].clone() };
        for m in 0..2 {
            let want = reduced.nodal(&x, m);
            for (a, b) in field(state, m).iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

#[test]
fn temperature_decouples_without_thermal_coupling() {
    let c = coefficients(|p| {
        for ph in &mut p.phases {
            ph.gamma = 0.0;
            ph.alpha = 0.0;
        }
    });
    let g = gap(&c, 1);
    println!("temperature gap {g:.3e}");
    assert!(g < 1e-9);
}

#[test]
fn pressure_decouples_without_poroelastic_coupling() {
    let c = coefficients(|p| {
        for ph in &mut p.phases {
            ph.beta = 0.0;
            ph.alpha = 0.0;
        }
    });
    let g = gap(&c, 0);
    println!("pressure gap {g:.3e}");
    assert!(g < 1e-9);
}

#[test]
fn coupling_is_visible_when_switched_on() {
    let c = coefficients(|_| {});
    assert!(gap(&c, 1) > 1e-6);
}
