//! Effective coefficients of a stiff cube inclusion in a softer matrix.
//!
//! `cargo run --example upscale_cube_inclusion -- [resolution] [out_dir]`

use std::path::Path;

use thermoporo::effective::{mandel_min_eigenvalue, upscale, voigt_reuss_bounds};
use thermoporo::io::files::write_coefficients;
use thermoporo::material::{Mat3, Phase, PhaseParameters};
use thermoporo::source::PhaseSources;
use thermoporo::unit_cell::{build_unit_cell, Inclusion};

fn show(name: &str, m: &Mat3) {
    println!("{name}:");
    for r in m {
        println!("  {:>12.6} {:>12.6} {:>12.6}", r[0], r[1], r[2]);
    }
}

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
    let inclusion = Phase {
        lambda: 4.0,
        mu: 2.0,
        kappa: 2.0,
        conductivity: 3.0,
        ..matrix.clone()
    };
    let mut params = PhaseParameters::homogeneous(matrix, 1.0, 1.0);
    params.phases[1] = inclusion;

    let cell = build_unit_cell(n, &Inclusion::centered_cube(0.25))?;
    let (_, c) = upscale(&cell, &params, &PhaseSources::default())?;
    println!(
        "cell {n}^3, |Y1| = {:.4}, |Y2| = {:.4}, |Σ| = {:.4}",
        cell.phase_volumes[0], cell.phase_volumes[1], cell.interface_area
    );

    println!("homogenized stiffness (Voigt 11 22 33 23 13 12):");
    for r in &c.a_hom {
        println!("  {}", r.map(|v| format!("{v:>9.5}")).join(" "));
    }
    let (upper, lower) = voigt_reuss_bounds(&cell, &params);
    println!(
        "C11 between Reuss {:.5} and Voigt {:.5}: {:.5}",
        lower[0][0], upper[0][0], c.a_hom[0][0]
    );
    println!("smallest Mandel eigenvalue {:.5}", mandel_min_eigenvalue(&c.a_hom));

    show("matrix permeability", &c.k1);
    show("matrix conductivity", &c.l1);
    show("matrix Biot", &c.b1);
    show("matrix strain coupling", &c.c1);
    show("inclusion strain coupling", &c.c2);
    println!(
        "inclusion transport and gradient blocks vanish: max |K2| = {:.1e}",
        c.k2.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()))
    );
    println!(
        "storage phi* = [{:.4}, {:.4}], c* = [{:.4}, {:.4}], alpha* = [{:.4}, {:.4}], zeta* = {:.4}, omega* = {:.4}",
        c.phi1_star, c.phi2_star, c.c1_star, c.c2_star, c.alpha1_star, c.alpha2_star, c.zeta_star, c.omega_star
    );

    if let Some(dir) = args.get(2) {
        let [json, csv] = write_coefficients(Path::new(dir), &c)?;
        println!("wrote {} and {}", json.display(), csv.display());
    }
    Ok(())
}
