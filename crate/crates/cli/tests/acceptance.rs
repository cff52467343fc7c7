//! Acceptance gate: one test per shipped criterion, each at its stated
//! tolerance. Run with `cargo test --test acceptance` for the per-criterion
//! pass/fail lines.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wavepair_cli::config::{parse_config_str, ExperimentConfig};
use wavepair_cli::experiments::fbi::run_fbi;
use wavepair_cli::experiments::svd::run_svd;
use wavepair_cli::experiments::sweep::run_noise_sweep;
use wavepair_cli::experiments::weights::run_weights_audit;
use wavepair_cli::rates::theoretical_bound;
use wavepair_core::fbi::{parseval_defect, FbiContext, Window, ACHIEVABLE_SLOPE_CONSTANT};
use wavepair_core::grid::{Grid, IndexRange, ScalarField};
use wavepair_core::inversion::{
    gradient_adjoint, misfit, DescentControls, InverseProblemSetup,
};
use wavepair_core::solver::{
    energy, solve_coupled_wave, AdmissibleSetSpec, CoefficientSet, Component, InitialData,
};

const PI: f64 = std::f64::consts::PI;

/// Fresh scratch directory under the system temp root.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavepair-acceptance-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn config(text: &str) -> ExperimentConfig {
    parse_config_str(text).expect("acceptance config must parse")
}

fn constant(grid: &Grid, v: f64) -> ScalarField {
    ScalarField::constant(grid, v).unwrap()
}

/// Decoupled unit-speed system with zero potentials.
fn free_coeffs(grid: &Grid) -> CoefficientSet {
    CoefficientSet {
        a: constant(grid, 1.0),
        c11: constant(grid, 0.0),
        c12: constant(grid, 0.0),
        c21: constant(grid, 0.0),
        c22: constant(grid, 0.0),
    }
}

fn cosine_mode(grid: &Grid) -> InitialData {
    InitialData {
        y10: ScalarField::from_fn(grid, |x| (PI * x).cos()).unwrap(),
        y11: constant(grid, 0.0),
        y20: ScalarField::from_fn(grid, |x| (PI * x).cos()).unwrap(),
        y21: constant(grid, 0.0),
    }
}

/// Sup-norm error of the first component against `cos(pi x) cos(pi t)` over
/// the whole trajectory of the free cosine mode.
fn eigenmode_error(n_nodes: usize, cfl: f64, t_final: f64) -> f64 {
    let grid = Grid::uniform(n_nodes, 1.0).unwrap();
    let dt = cfl * grid.h();
    let traj =
        solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), t_final, dt).unwrap();
    let mut worst = 0.0f64;
    for step in 0..=traj.n_steps() {
        let t = traj.time(step);
        let y1 = traj.y1_at(step);
        for (i, &v) in y1.iter().enumerate() {
            let exact = (PI * grid.coord(i)).cos() * (PI * t).cos();
            worst = worst.max((v - exact).abs());
        }
    }
    worst
}

#[test]
fn criterion_01_forward_solver_is_second_order_on_the_cosine_mode() {
    let started = Instant::now();
    let errors: Vec<f64> =
        [101usize, 201, 401].iter().map(|&n| eigenmode_error(n, 0.5, 1.0)).collect();
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "error ratio {ratio} outside [3.5, 4.5]; errors {errors:?}"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "convergence study took {elapsed:.2} s");
}

#[test]
fn criterion_02_discrete_energy_drift_stays_below_1e6_relative() {
    let grid = Grid::uniform(101, 1.0).unwrap();
    let dt = 0.5 * grid.h();
    let traj =
        solve_coupled_wave(&grid, &free_coeffs(&grid), &cosine_mode(&grid), 4.0, dt).unwrap();
    let e = energy(&traj, &constant(&grid, 1.0));
    let e0 = e[0];
    assert!(e0 > 0.0);
    let drift = e.iter().map(|&v| (v - e0).abs()).fold(0.0f64, f64::max) / e0;
    assert!(drift <= 1e-6, "relative energy drift {drift}");
}

#[test]
fn criterion_03_symmetric_data_keeps_components_identical() {
    let grid = Grid::uniform(101, 1.0).unwrap();
    let coeffs = CoefficientSet {
        a: constant(&grid, 1.0),
        c11: constant(&grid, 0.4),
        c12: constant(&grid, 0.25),
        c21: constant(&grid, 0.25),
        c22: constant(&grid, 0.4),
    };
    let dt = 0.5 * grid.h();
    let traj = solve_coupled_wave(&grid, &coeffs, &cosine_mode(&grid), 2.0, dt).unwrap();
    for step in 0..=traj.n_steps() {
        let y1 = traj.y1_at(step);
        let y2 = traj.y2_at(step);
        let gap = y1
            .iter()
            .zip(y2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 1e-12, "component gap {gap} at step {step}");
    }
}

const FBI_CONFIG: &str = "[experiment]\nkind = fbi-diagnostics\nseed = 3\n";

#[test]
fn criterion_04_identity_error_quarters_when_lambda_doubles() {
    let out = run_fbi(&config(FBI_CONFIG), &scratch("c4")).unwrap();
    assert!(
        (0.18..=0.33).contains(&out.identity_ratio),
        "identity error ratio {} outside [0.18, 0.33]",
        out.identity_ratio
    );
}

#[test]
fn criterion_05_mean_value_defect_vanishes_on_the_circle() {
    let out = run_fbi(&config(FBI_CONFIG), &scratch("c5")).unwrap();
    // 256 angular nodes at radius 0.5 are the driver defaults
    assert!(out.mean_defect <= 1e-8, "mean-value defect {}", out.mean_defect);
}

#[test]
fn criterion_06_energy_comparison_defect_is_one_sided() {
    let out = run_fbi(&config(FBI_CONFIG), &scratch("c6")).unwrap();
    assert_eq!(out.parseval_defects.len(), 20);
    let min = out.min_parseval_defect.unwrap();
    assert!(min >= -1e-10, "smallest energy-comparison defect {min}");

    // independent spot check straight through the core, one extra signal
    let window = Window::plateau(16.0, ACHIEVABLE_SLOPE_CONSTANT).unwrap();
    let ctx = FbiContext::new(10.0, 0.0, window).unwrap();
    let times: Vec<f64> = (0..161).map(|j| -8.0 + 0.1 * j as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (ac, om) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.05..0.8));
    let signal: Vec<f64> = times.iter().map(|&l| ac * (om * l).cos()).collect();
    let audit = parseval_defect(&ctx, &times, &signal, 2.0, 1.0, 41).unwrap();
    assert!(audit.defect >= -1e-10, "spot-check defect {}", audit.defect);
}

const WEIGHTS_CONFIG: &str = "\
[experiment]
kind = weights-audit
seed = 1

[weights]
beta1 = 0.2
beta2 = 0.7
norm = 1.0
b0 = 1.8
b = 2.0
m = 0.2
mu = 1.0
";

#[test]
fn criterion_07_weight_bookkeeping_matches_the_frozen_constants() {
    let out = run_weights_audit(&config(WEIGHTS_CONFIG), &scratch("c7")).unwrap();
    assert!(out.passed(), "findings: {:?}", out.findings);

    let (lo, hi) = out.m_interval.unwrap();
    assert!(lo < hi, "normalization interval empty: ({lo}, {hi})");
    assert!((lo - 0.13393).abs() <= 5e-6, "interval low end {lo}");
    assert!((hi - 0.24691).abs() <= 5e-6, "interval high end {hi}");

    let levels = out.levels.unwrap();
    let expected = [5.0, 9.0, 6.5, 5.76];
    for (got, want) in levels.psi.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-12, "level {got} vs {want}");
    }
    let [p1, p2, p3, p4] = levels.psi;
    assert!(p1 < p4 && p4 < p3 && p3 < p2, "level ordering broken: {:?}", levels.psi);

    let tau = out.tau.unwrap();
    assert!((tau - 0.52289).abs() <= 5e-6, "tau {tau}");
    let defect = out.identity_defect.unwrap();
    assert!(defect <= 1e-12 * levels.phi[2], "tau identity defect {defect}");
}

const SVD_LAYOUT: &str = "\
[grid]
n_nodes = 41
length = 1.0

[layout]
omega_tilde = 0.4,1.0
omega1 = 0.45,1.0
omega = 0.5,1.0
o3 = 0.55,1.0
o2 = 0.6,0.7
o1 = 0.65,0.65
omega0 = 0.725,0.775
x0 = 0.75

[truth]
c11 = 0
c22 = 0
";

#[test]
fn criterion_08_linearized_map_rank_follows_the_coupling() {
    // unit coupling, both components observed: strictly positive floor
    let both = format!(
        "[experiment]\nkind = svd\nseed = 1\n\n{SVD_LAYOUT}\n[svd]\nvariant = both-components\n"
    );
    let full = run_svd(&config(&both), &scratch("c8-full")).unwrap();
    assert!(
        full.report.sigma_min > 0.0,
        "smallest singular value {} not positive",
        full.report.sigma_min
    );

    // decoupled system, first component only: the second coefficient block
    // cannot reach the data at all
    let first = format!(
        "[experiment]\nkind = svd\nseed = 1\n\n[coefficients]\nc12 = 0\nc21 = 0\n\n\
         {SVD_LAYOUT}\n[svd]\nvariant = first-component\n"
    );
    let blind = run_svd(&config(&first), &scratch("c8-blind")).unwrap();
    assert!(
        blind.report.c22_max_column_norm <= 1e-10 * blind.report.sigma_max,
        "invisible block leaks: column norm {} vs sigma_max {}",
        blind.report.c22_max_column_norm,
        blind.report.sigma_max
    );
}

const SWEEP_BASE: &str = "\
[grid]
n_nodes = 101

[layout]
omega = 0.55,1.0
omega1 = 0.52,1.0
omega_tilde = 0.5,1.0
o1 = 0.61,0.63
o2 = 0.59,0.65
o3 = 0.57,1.0
omega0 = 0.72,0.83
x0 = 0.775

[truth]
c11 = bump:0.1,0.08,1.0
c22 = bump:0.1,0.08,1.0
";

#[test]
fn criterion_09_noiseless_reconstruction_recovers_the_bump() {
    let text = format!(
        "[experiment]\nkind = sweep\nseed = 7\n\n{SWEEP_BASE}\n[noise]\ndeltas = 0\nseeds = 1\n"
    );
    let out = run_noise_sweep(&config(&text), &scratch("c9")).unwrap();
    let row = &out.rows[0];
    assert!(row.failure.is_none(), "run failed: {:?}", row.failure);
    assert!(row.iterations <= 200, "iteration budget exceeded: {}", row.iterations);
    assert!(
        row.rel_error <= 0.05,
        "noiseless relative L2 error {} above 5%",
        row.rel_error
    );
}

#[test]
fn criterion_10_adjoint_gradient_matches_central_differences() {
    // small two-component problem, frozen on the right 60%, rich traces
    let grid = Grid::uniform(41, 1.0).unwrap();
    let omega_tilde = IndexRange::from_coords(&grid, 0.4, 1.0).unwrap();
    let omega = IndexRange::from_coords(&grid, 0.5, 1.0).unwrap();
    let background = 0.5;
    let admissible = AdmissibleSetSpec {
        m1: 5.0,
        theta1: 0.1,
        varpi1: constant(&grid, background),
        varpi2: constant(&grid, background),
        omega_tilde,
        frozen_tol: 1e-12,
    };
    let init = InitialData {
        y10: ScalarField::from_fn(&grid, |x| (PI * x).cos()).unwrap(),
        y11: constant(&grid, 0.0),
        y20: ScalarField::from_fn(&grid, |x| (2.0 * PI * x).cos()).unwrap(),
        y21: constant(&grid, 0.0),
    };
    let dt = 0.5 * grid.h();
    let setup = InverseProblemSetup {
        a: constant(&grid, 1.0),
        c12: constant(&grid, 1.0),
        c21: constant(&grid, 1.0),
        init,
        t_final: 1.0,
        dt,
        region: vec![omega],
        components: vec![Component::Y1, Component::Y2],
        orders: vec![1, 2],
        alpha: 1e-4,
        c_ref1: constant(&grid, background),
        c_ref2: constant(&grid, background),
        admissible,
        controls: DescentControls::default(),
        grid,
    };

    let bump = |x: f64, center: f64, radius: f64, amp: f64| {
        let u = (x - center) / radius;
        let w = 1.0 - u * u;
        if w > 0.0 {
            amp * w * w * w * w
        } else {
            0.0
        }
    };
    let truth1 =
        ScalarField::from_fn(&setup.grid, |x| background + bump(x, 0.2, 0.15, 0.3)).unwrap();
    let truth2 =
        ScalarField::from_fn(&setup.grid, |x| background - bump(x, 0.25, 0.12, 0.2)).unwrap();
    let traj = setup.forward(&truth1, &truth2).unwrap();
    let data = setup.observe_traces(&traj).unwrap();

    // probe away from the optimum so the gradient is O(1)
    let guess1 =
        ScalarField::from_fn(&setup.grid, |x| background + bump(x, 0.22, 0.12, 0.1)).unwrap();
    let guess2 = constant(&setup.grid, background);
    let eval = gradient_adjoint(&guess1, &guess2, &setup, &data).unwrap();

    let pair_inner = |a1: &ScalarField, a2: &ScalarField, b1: &ScalarField, b2: &ScalarField| {
        let h = setup.grid.h();
        (0..setup.grid.n_nodes())
            .map(|i| {
                setup.grid.trap_weight(i)
                    * h
                    * (a1.get(i) * b1.get(i) + a2.get(i) * b2.get(i))
            })
            .sum::<f64>()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let eps = 1e-4;
    for direction in 0..10 {
        let mut v1 = constant(&setup.grid, 0.0);
        let mut v2 = constant(&setup.grid, 0.0);
        for i in 0..setup.grid.n_nodes() {
            if !setup.admissible.omega_tilde.contains(i) {
                v1.values_mut()[i] = rng.gen_range(-1.0..1.0);
                v2.values_mut()[i] = rng.gen_range(-1.0..1.0);
            }
        }

        let mut plus1 = guess1.clone();
        let mut plus2 = guess2.clone();
        let mut minus1 = guess1.clone();
        let mut minus2 = guess2.clone();
        for i in 0..setup.grid.n_nodes() {
            plus1.values_mut()[i] += eps * v1.get(i);
            plus2.values_mut()[i] += eps * v2.get(i);
            minus1.values_mut()[i] -= eps * v1.get(i);
            minus2.values_mut()[i] -= eps * v2.get(i);
        }
        let jp = misfit(&plus1, &plus2, &setup, &data).unwrap();
        let jm = misfit(&minus1, &minus2, &setup, &data).unwrap();
        let fd = (jp - jm) / (2.0 * eps);
        let ip = pair_inner(&eval.grad_c11, &eval.grad_c22, &v1, &v2);
        let rel = (fd - ip).abs() / fd.abs().max(1e-300);
        assert!(
            rel <= 1e-3,
            "direction {direction}: fd {fd} vs adjoint {ip}, relative gap {rel}"
        );
    }
}

#[test]
fn criterion_11_noise_sweep_shows_the_stability_profile() {
    let text = format!(
        "[experiment]\nkind = sweep\nseed = 7\n\n{SWEEP_BASE}\n\
         [noise]\ndeltas = 1e-1,1e-2,1e-3,1e-4\nseeds = 3\n"
    );
    let out = run_noise_sweep(&config(&text), &scratch("c11")).unwrap();
    assert!(out.rows.iter().all(|r| r.failure.is_none()), "some rows failed");

    // medians nondecreasing in the noise level
    let mut by_delta: Vec<(f64, f64)> =
        out.levels.iter().copied().zip(out.medians.iter().copied()).collect();
    by_delta.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in by_delta.windows(2) {
        assert!(
            pair[0].1 <= pair[1].1,
            "median error fell as noise grew: {:?} then {:?}",
            pair[0],
            pair[1]
        );
    }

    // the fitted envelope dominates every level it was fitted to
    let fit = out.fit.as_ref().expect("envelope fit must exist");
    for &(delta, median) in &by_delta {
        let e = fit.envelope_at(delta);
        assert!(e >= median, "envelope {e} below median {median} at delta {delta}");
    }

    let frozen = theoretical_bound((-9.0f64).exp(), 1.0, 1.0, 1.0);
    assert!(
        (frozen.bound - 0.111235).abs() <= 1e-6,
        "frozen bound value drifted: {}",
        frozen.bound
    );
}

/// Byte-identical CSV outputs for a repeated run of one experiment kind.
fn assert_rerun_identical(name: &str, text: &str) {
    let cfg = config(text);
    let (a, b) = (scratch(&format!("{name}-a")), scratch(&format!("{name}-b")));
    for out in [&a, &b] {
        match cfg.kind {
            wavepair_cli::config::ExperimentKind::Sweep => {
                run_noise_sweep(&cfg, out).map(|_| ()).unwrap()
            }
            wavepair_cli::config::ExperimentKind::Svd => run_svd(&cfg, out).map(|_| ()).unwrap(),
            wavepair_cli::config::ExperimentKind::FbiDiagnostics => {
                run_fbi(&cfg, out).map(|_| ()).unwrap()
            }
            wavepair_cli::config::ExperimentKind::WeightsAudit => {
                run_weights_audit(&cfg, out).map(|_| ()).unwrap()
            }
        }
    }
    let mut compared = 0usize;
    for entry in std::fs::read_dir(&a).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let bytes_a = std::fs::read(&path).unwrap();
        let bytes_b = std::fs::read(b.join(path.file_name().unwrap())).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name}: {:?} differs between reruns", path.file_name());
        compared += 1;
    }
    assert!(compared > 0, "{name}: no CSV output found to compare");
}

#[test]
fn criterion_12_reruns_reproduce_every_csv_byte_for_byte() {
    let sweep = format!(
        "[experiment]\nkind = sweep\nseed = 5\n\n{SWEEP_BASE}\n\
         [inversion]\nmax_iters = 25\nexport_iterations = true\n\n\
         [noise]\ndeltas = 1e-2,1e-3\nseeds = 2\n"
    );
    assert_rerun_identical("c12-sweep", &sweep);

    let svd = format!(
        "[experiment]\nkind = svd\nseed = 1\n\n{SVD_LAYOUT}\n[svd]\nvariant = both-components\n"
    );
    assert_rerun_identical("c12-svd", &svd);

    assert_rerun_identical("c12-fbi", FBI_CONFIG);
    assert_rerun_identical("c12-weights", WEIGHTS_CONFIG);
}
