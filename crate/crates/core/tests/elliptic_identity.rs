//! End-to-end consistency of the transform pipeline: a localized time
//! derivative of a wave solution, pushed through the transform, satisfies the
//! elliptic equation with the commutator sources up to discretization error.
//! Flipping the sign of a source must break the identity by orders of
//! magnitude, which pins the sign conventions across modules.

use wavepair_core::fbi::{
    compute_g, compute_h, elliptic_residual, fbi_transform, FbiContext, Window,
};
use wavepair_core::grid::{Grid, ScalarField};
use wavepair_core::profile::Smoothstep;
use wavepair_core::solver::{
    build_uv_fields, solve_coupled_wave, CoefficientSet, InitialData,
};

#[test]
fn transformed_wave_solution_satisfies_the_elliptic_identity() {
    let grid = Grid::uniform(101, 1.0).unwrap();
    let h = grid.h();
    let a = ScalarField::from_fn(&grid, |x| 1.0 + 0.1 * (std::f64::consts::PI * x).cos()).unwrap();
    let c11 = ScalarField::constant(&grid, 0.4).unwrap();
    let c12 = ScalarField::constant(&grid, 0.6).unwrap();
    let c21 = ScalarField::constant(&grid, 0.6).unwrap();
    let c22 = ScalarField::constant(&grid, 0.4).unwrap();
    let coeffs = CoefficientSet {
        a: a.clone(),
        c11: c11.clone(),
        c12: c12.clone(),
        c21: c21.clone(),
        c22: c22.clone(),
    };
    let init = InitialData {
        y10: ScalarField::from_fn(&grid, |x| (std::f64::consts::PI * x).cos()).unwrap(),
        y11: ScalarField::constant(&grid, 0.0).unwrap(),
        y20: ScalarField::from_fn(&grid, |x| 0.5 * (2.0 * std::f64::consts::PI * x).cos()).unwrap(),
        y21: ScalarField::constant(&grid, 0.0).unwrap(),
    };
    let traj = solve_coupled_wave(&grid, &coeffs, &init, 1.6, 0.008).unwrap();

    // spatial cutoff with a wide, well-resolved ramp
    let ramp = Smoothstep::Quintic;
    let chi = ScalarField::from_fn(&grid, |x| ramp.eval((x - 0.28) / 0.24)).unwrap();
    let uv = build_uv_fields(&traj, &chi).unwrap();

    let window = Window::plateau(2.0, 7.5).unwrap();
    let ctx = FbiContext::new(4.0, 0.0, window).unwrap();
    let s_values: Vec<f64> = (0..41).map(|k| -0.4 + 0.02 * k as f64).collect();

    let uf1 = fbi_transform(&ctx, &uv.u1, &s_values).unwrap();
    let uf2 = fbi_transform(&ctx, &uv.u2, &s_values).unwrap();
    let g1 = compute_g(&ctx, &a, &chi, &uv.raw_u1, &s_values, h).unwrap();
    let g2 = compute_g(&ctx, &a, &chi, &uv.raw_u2, &s_values, h).unwrap();
    let h1 = compute_h(&ctx, &uv.u1, &s_values).unwrap();
    let h2 = compute_h(&ctx, &uv.u2, &s_values).unwrap();

    let resid =
        elliptic_residual(&uf1, &uf2, &g1, &g2, &h1, &h2, &a, &c11, &c12, &c21, &c22, h).unwrap();

    let lambda_sq = ctx.lambda * ctx.lambda;
    let scale = g1
        .sup_modulus()
        .max(g2.sup_modulus())
        .max(h1.sup_modulus())
        .max(h2.sup_modulus())
        .max(lambda_sq * uf1.sup_modulus())
        .max(lambda_sq * uf2.sup_modulus());
    assert!(scale > 1e-6, "degenerate setup, nothing to balance: scale {scale}");

    let r1 = resid.r1.sup_modulus();
    let r2 = resid.r2.sup_modulus();
    assert!(r1 <= 0.05 * scale, "component 1 residual {r1} vs scale {scale}");
    assert!(r2 <= 0.05 * scale, "component 2 residual {r2} vs scale {scale}");

    // the identity must be sign-discriminating: negating one source term has
    // to break it decisively
    let mut h1_bad = h1.clone();
    let mut h2_bad = h2.clone();
    for v in h1_bad.values.iter_mut() {
        *v = -*v;
    }
    for v in h2_bad.values.iter_mut() {
        *v = -*v;
    }
    let broken =
        elliptic_residual(&uf1, &uf2, &g1, &g2, &h1_bad, &h2_bad, &a, &c11, &c12, &c21, &c22, h)
            .unwrap();
    assert!(
        broken.r1.sup_modulus() > 5.0 * r1,
        "sign flip not visible: {} vs {r1}",
        broken.r1.sup_modulus()
    );

    let mut g1_bad = g1.clone();
    for v in g1_bad.values.iter_mut() {
        *v = -*v;
    }
    let broken_g =
        elliptic_residual(&uf1, &uf2, &g1_bad, &g2, &h1, &h2, &a, &c11, &c12, &c21, &c22, h)
            .unwrap();
    assert!(broken_g.r1.sup_modulus() > 5.0 * r1);
}
