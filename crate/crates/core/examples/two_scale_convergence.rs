//! Corrector-augmented errors of the ε-scale solution against the
//! homogenized one as ε shrinks.
//!
//! `cargo run --example two_scale_convergence` runs ε = 1/2, 1/4 on a
//! 16³ macro grid; pass `full` for ε down to 1/8 on a 32³ macro grid.

use thermoporo::fem::solver::SolverOptions;
use thermoporo::macro_solver::TimeGrid;
use thermoporo::material::{Phase, PhaseParameters};
use thermoporo::micro_dns::{InterfaceMode, DESK_CAP};
use thermoporo::source::{PhaseSources, Profile, ScalarSource, Shape};
use thermoporo::unit_cell::{build_unit_cell, Inclusion};
use thermoporo::verification::{convergence_study, StudySetup};

fn main() -> thermoporo::error::Result<()> {
    let full = std::env::args().any(|a| a == "full");
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
    let mut params = PhaseParameters::homogeneous(matrix.clone(), 1.0, 1.0);
    params.phases[1] = Phase {
        lambda: 4.0,
        mu: 2.0,
        kappa: 2.0,
        conductivity: 3.0,
        ..matrix
    };
    let bump = ScalarSource::single(1.0, Shape::SineBump, Profile::Constant);
    let setup = StudySetup {
        cell: build_unit_cell(4, &Inclusion::centered_cube(0.25))?,
        params,
        sources: PhaseSources {
            force: Default::default(),
            fluid: [bump.clone(), bump.clone()],
            heat: [bump.clone(), bump],
        },
        time: TimeGrid {
            dt: 0.05,
            t_end: 0.2,
            output_every: 4,
        },
        macro_resolution: if full { 32 } else { 16 },
        eps_list: if full { vec![0.5, 0.25, 0.125] } else { vec![0.5, 0.25] },
        mode: InterfaceMode::Duplicated,
        desk_cap: DESK_CAP,
        solver: SolverOptions::default(),
        parallel: true,
    };
    let out = convergence_study(&setup)?;
    println!("   ε     grid   ‖e(u)‖ err   ‖∇p1‖ err    ‖∇θ1‖ err    trace const");
    for r in &out.report.rows {
        let e = &r.errors;
        println!(
            "{:>6.3} {:>5}  {:>10.3e}  {:>10.3e}  {:>10.3e}  {:>10.3}",
            r.epsilon, r.dns_grid, e.u_corrected, e.p_corrected[0], e.theta_corrected[0], r.trace_constant
        );
    }
    println!("monotone (u, p1, θ1): {:?}", out.report.monotone);
    for w in &out.report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
