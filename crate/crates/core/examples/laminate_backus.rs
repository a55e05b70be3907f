//! Layered cell against the closed-form layered-medium stiffness.
//!
//! For isotropic layers stacked along x with P-wave modulus `M = λ + 2μ`:
//! `C11 = ⟨1/M⟩⁻¹`, `C12 = ⟨λ/M⟩ C11`, `C22 = ⟨M − λ²/M⟩ + ⟨λ/M⟩² C11`,
//! `C23 = ⟨λ − λ²/M⟩ + ⟨λ/M⟩² C11`, `C44 = ⟨μ⟩`, `C55 = C66 = ⟨1/μ⟩⁻¹`.

use thermoporo::effective::upscale;
use thermoporo::material::{Phase, PhaseParameters};
use thermoporo::source::PhaseSources;
use thermoporo::unit_cell::{build_unit_cell, Inclusion};

fn main() -> thermoporo::error::Result<()> {
    let soft = Phase {
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
    let stiff = Phase {
        lambda: 6.0,
        mu: 5.0,
        kappa: 3.0,
        ..soft.clone()
    };
    let mut params = PhaseParameters::homogeneous(soft, 1.0, 1.0);
    params.phases[1] = stiff;

    println!("res   C11        C12        C22        C23        C44        C66        max rel gap");
    for n in [4, 8, 16] {
        let cell = build_unit_cell(n, &Inclusion::laminate(0, 0.25, 0.75))?;
        let (_, c) = upscale(&cell, &params, &PhaseSources::default())?;
        let avg = |f: &dyn Fn(&Phase) -> f64| {
            (0..2)
                .map(|m| cell.phase_volumes[m] * f(&params.phases[m]))
                .sum::<f64>()
        };
        let pm = |p: &Phase| p.lambda + 2.0 * p.mu;
        let c11 = 1.0 / avg(&|p| 1.0 / pm(p));
        let r = avg(&|p| p.lambda / pm(p));
        let exact = [
            ((0, 0), c11),
            ((0, 1), r * c11),
            ((1, 1), avg(&|p| pm(p) - p.lambda * p.lambda / pm(p)) + r * r * c11),
            ((1, 2), avg(&|p| p.lambda - p.lambda * p.lambda / pm(p)) + r * r * c11),
            ((3, 3), avg(&|p| p.mu)),
            ((5, 5), 1.0 / avg(&|p| 1.0 / p.mu)),
        ];
        let gap = exact
            .iter()
            .map(|&((i, j), v)| ((c.a_hom[i][j] - v) / v).abs())
            .fold(0.0, f64::max);
        let got: Vec<String> = exact
            .iter()
            .map(|&((i, j), _)| format!("{:<10.6}", c.a_hom[i][j]))
            .collect();
        println!("{n:<5} {} {gap:.2e}", got.join(" "));
        if n == 16 {
            let want: Vec<String> = exact.iter().map(|&(_, v)| format!("{v:<10.6}")).collect();
            println!("exact {}", want.join(" "));
            println!(
                "permeability across layers {:.2e}, along layers {:.6} (κ|Y1| = {:.6})",
                c.k1[0][0], c.k1[1][1], cell.phase_volumes[0]
            );
        }
    }
    Ok(())
}
