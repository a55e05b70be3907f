//! Discrete energy balance of the homogenized model.
//!
//! Without mechanical and cross coupling the backward-Euler balance closes
//! to round-off; with coupling the defect shrinks with the time step.

use thermoporo::effective::upscale;
use thermoporo::fem::solver::SolverOptions;
use thermoporo::macro_solver::{run, ScalarBoundary, TimeGrid};
use thermoporo::material::{Phase, PhaseParameters};
use thermoporo::source::{PhaseSources, Profile, ScalarSource, Shape};
use thermoporo::unit_cell::{build_unit_cell, Inclusion};
use thermoporo::verification::energy_identity_residual;

fn main() -> thermoporo::error::Result<()> {
    let matrix = Phase {
        lambda: 2.0,
        mu: 1.0,
        beta: 0.8,
        gamma: 0.3,
        alpha: 0.1,
        phi: 0.5,
        kappa: 1.0,
        conductivity: 1.5,
        capacity: 1.2,
    };
    let bump = ScalarSource::single(1.0, Shape::SineBump, Profile::Constant);
    let sources = PhaseSources {
        force: Default::default(),
        fluid: [bump.clone(), bump.clone()],
        heat: [bump.clone(), bump],
    };
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25))?;
    let opts = SolverOptions {
        tol: 1e-12,
        ..Default::default()
    };

    for coupled in [false, true] {
        let mut params = PhaseParameters::homogeneous(matrix.clone(), 1.0, 1.0);
        params.phases[1] = Phase {
            lambda: 4.0,
            mu: 2.0,
            kappa: 2.0,
            conductivity: 3.0,
            ..matrix.clone()
        };
        if !coupled {
            for ph in &mut params.phases {
                ph.beta = 0.0;
                ph.gamma = 0.0;
                ph.alpha = 0.0;
            }
        }
        let (_, c) = upscale(&cell, &params, &sources)?;
        println!("{}", if coupled { "fully coupled" } else { "pure diffusion" });
        println!("     dt      pressure     thermal");
        for dt in [0.05, 0.025, 0.0125, 0.00625] {
            let time = TimeGrid {
                dt,
                t_end: 0.4,
                output_every: 1 << 20,
            };
            let (_, out) = run(&c, 6, ScalarBoundary::Mixed, &time, &opts)?;
            let r = energy_identity_residual(&out.ledger);
            println!(
                "{dt:>9.5}  {:>10.3e}  {:>10.3e}",
                r.pressure_relative, r.thermal_relative
            );
        }
    }
    Ok(())
}
