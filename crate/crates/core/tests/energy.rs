mod common;

use thermoporo::effective::{upscale, EffectiveCoefficients};
use thermoporo::fem::solver::SolverOptions;
use thermoporo::macro_solver::{run, ScalarBoundary, TimeGrid};
use thermoporo::material::PhaseParameters;
use thermoporo::unit_cell::{build_unit_cell, Inclusion};
use thermoporo::verification::{energy_identity_residual, IdentityResiduals};

fn coefficients(edit: impl Fn(&mut PhaseParameters)) -> EffectiveCoefficients {
    let mut params = common::contrast_params();
    edit(&mut params);
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
    upscale(&cell, &params, &common::smooth_sources()).unwrap().1
}

fn residuals(c: &EffectiveCoefficients, dt: f64) -> IdentityResiduals {
    let time = TimeGrid {
        dt,
        t_end: 0.4,
        output_every: 1 << 20,
    };
    let opts = SolverOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let (_, out) = run(c, 6, ScalarBoundary::Mixed, &time, &opts).unwrap();
    energy_identity_residual(&out.ledger)
}

#[test]
fn pure_diffusion_balances_to_round_off() {
    let c = coefficients(|p| {
        for ph in &mut p.phases {
            ph.beta = 0.0;
            ph.gamma = 0.0;
            ph.alpha = 0.0;
        }
    });
    let r = residuals(&c, 0.05);
    println!("{r:?}");
    assert!(r.pressure_relative <= 1e-8);
    assert!(r.thermal_relative <= 1e-8);
}

#[test]
fn coupled_defect_shrinks_with_the_step() {
    let c = coefficients(|_| {});
    let r: Vec<IdentityResiduals> = [0.025, 0.0125, 0.00625, 0.003125]
        .iter()
        .map(|&dt| residuals(&c, dt))
        .collect();
    let pairs = |w: &[IdentityResiduals]| {
        [
            (w[0].pressure_relative, w[1].pressure_relative),
            (w[0].thermal_relative, w[1].thermal_relative),
        ]
    };
    for w in r.windows(2) {
        for (a, b) in pairs(w) {
            println!("{a:.3e} -> {b:.3e}, order {:.2}", (a / b).log2());
            assert!(b < a, "defect did not shrink: {a} -> {b}");
        }
    }
    // the order approaches one from below as the start-up transient is resolved
    for (a, b) in pairs(&r[2..]) {
        assert!((a / b).log2() > 0.85, "defect order too low: {a} -> {b}");
    }
}
