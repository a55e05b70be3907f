//! Homogenized response to a fluid and heat source switched on at t = 0.
//!
//! `cargo run --example macro_consolidation -- [macro_resolution] [out_dir]`

use std::path::Path;

use thermoporo::effective::upscale;
use thermoporo::fem::solver::SolverOptions;
use thermoporo::io::files::write_macro_series;
use thermoporo::macro_solver::{run, ScalarBoundary, TimeGrid};
use thermoporo::material::{Phase, PhaseParameters};
use thermoporo::source::{PhaseSources, Profile, ScalarSource, Shape};
use thermoporo::unit_cell::{build_unit_cell, Inclusion};

fn main() -> thermoporo::error::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
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
    let mut params = PhaseParameters::homogeneous(matrix.clone(), 2.0, 1.0);
    params.phases[1] = Phase {
        lambda: 4.0,
        mu: 2.0,
        kappa: 0.2,
        ..matrix
    };
    let mut sources = PhaseSources::default();
    sources.fluid[0] = ScalarSource::single(1.0, Shape::SineBump, Profile::Constant);
    sources.heat[1] = ScalarSource::single(0.5, Shape::SineBump, Profile::Constant);

    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25))?;
    let (_, coeffs) = upscale(&cell, &params, &sources)?;
    let time = TimeGrid {
        dt: 0.05,
        t_end: 1.0,
        output_every: 4,
    };
    let (sys, out) = run(&coeffs, n, ScalarBoundary::Mixed, &time, &SolverOptions::default())?;

    let centre = [0.5; 3];
    println!("  time     p1(c)      p2(c)      θ1(c)      θ2(c)      u_x(0.25,0.5,0.5)");
    for s in &out.outputs {
        let c = s.sample(&sys.dofs.grid, centre);
        let side = s.sample(&sys.dofs.grid, [0.25, 0.5, 0.5]);
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.2e}",
            s.time, c.p[0], c.p[1], c.theta[0], c.theta[1], side.u[0]
        );
    }
    let last = out.ledger.rows.last().unwrap();
    println!(
        "final energies: elastic {:.4e}, storage {:.4e}; dissipated {:.4e} by diffusion, {:.4e} by exchange",
        last.elastic_energy, last.storage_energy, last.diffusion_dissipation, last.exchange_dissipation
    );
    if let Some(dir) = args.get(2) {
        let files = write_macro_series(Path::new(dir), &sys.dofs.grid, &out.outputs)?;
        println!("wrote {} VTK files to {dir}", files.len());
    }
    Ok(())
}
