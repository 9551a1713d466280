//! Property suites over the solvers and the measure algebra. These run
//! standalone (`cargo test --test properties`) and back the invariants the
//! acceptance criteria reference.

use nalgebra::Vector3;
use proptest::prelude::*;

use dclab_core::basis::{build_basis, EvenTemperedParams};
use dclab_core::measure::{
    ChargeDistribution, GaussianCloud, MeasureSpec, PointCharge, UniformBall,
};
use dclab_core::optim::Configuration;
use dclab_core::quad::{build_multicenter_grid, build_radial_grid, GridParams, RadialMapping};
use dclab_core::radial_solver::{solve_pure_coulomb, solve_radial, RadialProblem};
use dclab_core::solver3d::{solve_lambda1, SolverConfig};

fn atom(p: [f64; 3], w: f64) -> PointCharge {
    PointCharge {
        position: Vector3::from(p),
        weight: w,
    }
}

// ---------------------------------------------------------------------------
// Charge measures
// ---------------------------------------------------------------------------

#[test]
fn far_field_potential_recovers_total_mass() {
    let mu = ChargeDistribution::new(
        vec![atom([0.3, -0.2, 0.1], 0.4), atom([-0.5, 0.0, 0.2], 0.2)],
        vec![GaussianCloud {
            position: Vector3::new(0.1, 0.4, -0.3),
            weight: 0.15,
            sigma: 0.8,
        }],
        vec![UniformBall {
            position: Vector3::zeros(),
            weight: 0.1,
            radius: 0.5,
        }],
    )
    .unwrap();
    let r = 1e3 * mu.support_radius();
    for dir in [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.577, 0.577, 0.577),
    ] {
        let x = dir.normalize() * r;
        let v = mu.potential(&x).unwrap();
        let rel = (r * v - mu.total_mass()).abs() / mu.total_mass();
        assert!(
            rel < 0.01,
            "far field: |x| V = {} vs mass {}",
            r * v,
            mu.total_mass()
        );
    }
}

#[test]
fn potential_decreases_along_rays_outside_support() {
    let mu = ChargeDistribution::new(
        vec![atom([0.2, 0.0, 0.0], 0.5)],
        vec![GaussianCloud {
            position: Vector3::zeros(),
            weight: 0.3,
            sigma: 0.4,
        }],
        vec![],
    )
    .unwrap();
    let r0 = mu.support_radius() + 0.5;
    for dir in [
        Vector3::new(1.0, 0.2, 0.0).normalize(),
        Vector3::new(-0.3, 0.9, 0.3).normalize(),
    ] {
        let mut prev = f64::INFINITY;
        for k in 0..30 {
            let v = mu.potential(&(dir * (r0 + 0.5 * k as f64))).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }
}

#[test]
fn gaussian_cloud_potential_matches_quadrature_oracle() {
    // Independent oracle: radial quadrature of the convolution integral
    // V(r) = (4 pi / r) int_0^r rho(s) s^2 ds + 4 pi int_r^inf rho(s) s ds
    // with the normalized Gaussian density rho.
    let sigma = 0.7;
    let weight = 0.9;
    let rho = |s: f64| {
        weight * (-(s * s) / (2.0 * sigma * sigma)).exp()
            / (sigma * sigma * sigma * (2.0 * std::f64::consts::PI).powf(1.5))
    };
    let mu = ChargeDistribution::cloud_at_origin(weight, sigma).unwrap();
    for k in 1..=20 {
        let r = 0.15 * k as f64;
        // Split the convolution at r so each piece is smooth on its grid.
        let inner_grid =
            build_radial_grid(400, r, RadialMapping::Log { r_min: 1e-10 * r }).unwrap();
        let outer_grid = build_radial_grid(400, 40.0, RadialMapping::Log { r_min: r }).unwrap();
        let inner = inner_grid.integrate(|s| rho(s) * s * s).unwrap();
        let outer = outer_grid.integrate(|s| rho(s) * s).unwrap();
        let oracle = 4.0 * std::f64::consts::PI * (inner / r + outer);
        let closed = mu.radial_potential(r).unwrap();
        assert!(
            (closed - oracle).abs() <= 1e-8,
            "r = {r}: closed {closed} vs oracle {oracle}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn newton_bound_for_radial_measures(
        w_atom in 0.0f64..0.8,
        w_cloud in 0.0f64..0.8,
        sigma in 0.05f64..3.0,
        w_ball in 0.0f64..0.8,
        radius in 0.05f64..3.0,
        r in 1e-3f64..50.0,
    ) {
        let atoms = if w_atom > 1e-3 { vec![atom([0.0; 3], w_atom)] } else { vec![] };
        let clouds = if w_cloud > 1e-3 {
            vec![GaussianCloud { position: Vector3::zeros(), weight: w_cloud, sigma }]
        } else {
            vec![]
        };
        let balls = if w_ball > 1e-3 {
            vec![UniformBall { position: Vector3::zeros(), weight: w_ball, radius }]
        } else {
            vec![]
        };
        prop_assume!(!(atoms.is_empty() && clouds.is_empty() && balls.is_empty()));
        let mu = ChargeDistribution::new(atoms, clouds, balls).unwrap();
        let v = mu.radial_potential(r).unwrap();
        prop_assert!(v <= mu.total_mass() / r + 1e-12,
            "Newton bound violated: V({r}) = {v} > {}", mu.total_mass() / r);
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn measure_spec_round_trips(
        ax in -2.0f64..2.0, ay in -2.0f64..2.0, az in -2.0f64..2.0,
        w in 0.01f64..0.95,
        cw in 0.01f64..2.0,
        sigma in 0.05f64..2.0,
    ) {
        let mu = ChargeDistribution::new(
            vec![atom([ax, ay, az], w)],
            vec![GaussianCloud { position: Vector3::new(-ay, az, ax), weight: cw, sigma }],
            vec![],
        )
        .unwrap();
        let text = MeasureSpec::from(&mu).to_json();
        let back = MeasureSpec::from_json(&text).unwrap().build().unwrap();
        prop_assert_eq!(mu, back);
    }

    #[test]
    fn simplex_parameterization_round_trip(
        t0 in 0.05f64..2.0, t1 in 0.05f64..2.0, t2 in 0.05f64..2.0,
        nu in 0.05f64..0.9,
    ) {
        let params = [0.1, 0.2, 0.3, -0.4, 0.5, -0.6, 0.0, 0.7, 0.2, t0, t1, t2];
        let config = Configuration::from_free_parameters(&params, nu, 3).unwrap();
        let total: f64 = config.weights.iter().sum();
        prop_assert!((total - nu).abs() <= 1e-14 * nu.max(1.0),
            "weights sum {total} vs nu {nu}");
        prop_assert!(config.weights.iter().all(|w| *w >= 0.0 && *w < 1.0));
    }
}

// ---------------------------------------------------------------------------
// Spinor algebra
// ---------------------------------------------------------------------------

#[test]
fn sigma_grad_norm_equals_gradient_norm_for_scalar_profiles() {
    use dclab_core::basis::{AngularKind, SpatialOrbital};
    use dclab_core::spinor::sigma_grad_basis;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
    for _ in 0..200 {
        let orb = SpatialOrbital {
            center: Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, 0.2),
            exponent: 0.2 + 2.0 * rng.gen::<f64>(),
            angular: AngularKind::S,
        };
        let x = Vector3::new(
            3.0 * (rng.gen::<f64>() - 0.5),
            3.0 * (rng.gen::<f64>() - 0.5),
            3.0 * (rng.gen::<f64>() - 0.5),
        );
        let g = orb.gradient(&x);
        for spin in 0..2 {
            let sg = sigma_grad_basis(&dclab_core::basis::BasisFunction { spatial: orb, spin }, &x);
            let lhs = sg[0].norm_sqr() + sg[1].norm_sqr();
            let rhs = g.norm_squared();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.max(1.0),
                "|sigma.grad phi|^2 = {lhs} vs |grad phi|^2 = {rhs}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// 3D solver
// ---------------------------------------------------------------------------

#[test]
fn galerkin_eigenvalue_is_variational_upper_bound() {
    for nu in [0.3, 0.5, 0.9] {
        let mu = ChargeDistribution::point_at_origin(nu).unwrap();
        let res = solve_lambda1(&mu, &SolverConfig::default()).unwrap();
        let exact = (1.0 - nu * nu as f64).sqrt();
        assert!(
            res.lambda1 >= exact - 1e-8,
            "nu = {nu}: lambda1 = {} below the exact value {exact}",
            res.lambda1
        );
    }
}

#[test]
fn nested_basis_refinement_never_raises_lambda1() {
    let mu = ChargeDistribution::point_at_origin(0.6).unwrap();
    let coarse = SolverConfig {
        basis: EvenTemperedParams {
            count: 10,
            ..Default::default()
        },
        ..Default::default()
    };
    let fine = SolverConfig {
        basis: EvenTemperedParams {
            count: 14,
            ..Default::default()
        },
        ..Default::default()
    };
    let l_coarse = solve_lambda1(&mu, &coarse).unwrap().lambda1;
    let l_fine = solve_lambda1(&mu, &fine).unwrap().lambda1;
    assert!(
        l_fine <= l_coarse + 1e-9,
        "enlarging the nested basis raised lambda_1: {l_coarse} -> {l_fine}"
    );
}

#[test]
fn p_type_enrichment_never_raises_lambda1() {
    // Adding the p shells extends the s basis (nested superset), so the
    // eigenvalue may only drop.
    let mu = ChargeDistribution::new(
        vec![atom([-0.5, 0.0, 0.0], 0.3), atom([0.5, 0.0, 0.0], 0.3)],
        vec![],
        vec![],
    )
    .unwrap();
    let s_only = SolverConfig {
        basis: EvenTemperedParams {
            a0: 0.05,
            beta: 3.0,
            count: 6,
            include_p: false,
        },
        grid: GridParams::level(1).unwrap(),
        ..Default::default()
    };
    let with_p = SolverConfig {
        basis: EvenTemperedParams {
            include_p: true,
            ..s_only.basis
        },
        ..s_only
    };
    let l_s = solve_lambda1(&mu, &s_only).unwrap().lambda1;
    let l_p = solve_lambda1(&mu, &with_p).unwrap().lambda1;
    assert!(
        l_p <= l_s + 1e-9,
        "p enrichment raised lambda_1: {l_s} -> {l_p}"
    );
}

#[test]
fn radial_cross_check_single_atom_and_cloud() {
    for mu in [
        ChargeDistribution::point_at_origin(0.5).unwrap(),
        ChargeDistribution::cloud_at_origin(0.5, 1.0).unwrap(),
    ] {
        let radial = solve_radial(&RadialProblem::new(mu.clone()))
            .unwrap()
            .lambda1;
        let three_d = solve_lambda1(&mu, &SolverConfig::default())
            .unwrap()
            .lambda1;
        assert!(
            (radial - three_d).abs() <= 5e-3,
            "radial {radial} vs 3d {three_d} disagree beyond 5e-3"
        );
    }
}

#[test]
fn lower_spinor_shrinks_in_the_weak_coupling_limit() {
    // lambda near 1: the coupling formula makes chi / phi small.
    let solver = SolverConfig {
        grid: GridParams::level(1).unwrap(),
        ..Default::default()
    };
    let mu = ChargeDistribution::point_at_origin(0.15).unwrap();
    let basis = build_basis(&mu, &solver.basis).unwrap();
    let res = solve_lambda1(&mu, &solver).unwrap();
    assert!(res.bound_state_found);
    let mut ratio_max: f64 = 0.0;
    for r in [0.5, 1.0, 2.0, 4.0] {
        let x = Vector3::new(0.0, 0.0, r);
        let phi = dclab_core::solver3d::upper_spinor(&res, &basis, &x);
        let chi = dclab_core::solver3d::reconstruct_lower_spinor(&res, &mu, &basis, &x).unwrap();
        let pn = (phi[0].norm_sqr() + phi[1].norm_sqr()).sqrt();
        let cn = (chi[0].norm_sqr() + chi[1].norm_sqr()).sqrt();
        if pn > 1e-12 {
            ratio_max = ratio_max.max(cn / pn);
        }
    }
    assert!(
        ratio_max < 0.2,
        "weak coupling should keep |chi|/|phi| small, got {ratio_max}"
    );
}

#[test]
fn optimizer_translation_gauge() {
    // A configuration and its translate (basis and grid follow the
    // measure) give the same eigenvalue.
    let solver = SolverConfig {
        grid: GridParams::level(1).unwrap(),
        ..Default::default()
    };
    let mu = ChargeDistribution::new(
        vec![atom([-0.4, 0.0, 0.0], 0.25), atom([0.4, 0.0, 0.0], 0.25)],
        vec![],
        vec![],
    )
    .unwrap();
    let shifted = mu.translate(&Vector3::new(1.3, -0.7, 2.1));
    let a = solve_lambda1(&mu, &solver).unwrap().lambda1;
    let b = solve_lambda1(&shifted, &solver).unwrap().lambda1;
    assert!(
        (a - b).abs() <= 1e-8,
        "translation gauge violated: {a} vs {b}"
    );
}

// ---------------------------------------------------------------------------
// Radial solver
// ---------------------------------------------------------------------------

#[test]
fn two_atom_search_respects_the_merged_configuration_floor() {
    // Conjecture-consistency probe: a short K = 2 search at nu = 0.9
    // must never report a value below the merged point-charge reference
    // (each evaluation is a Galerkin upper bound).
    use dclab_core::optim::{minimize_lambda1, OptimizerSettings};
    let settings = OptimizerSettings {
        restarts: 1,
        evals_per_restart: 8,
        seed: 11,
        solver: SolverConfig {
            basis: EvenTemperedParams {
                a0: 0.03,
                beta: 3.0,
                count: 9,
                include_p: false,
            },
            grid: GridParams::level(1).unwrap(),
            ..Default::default()
        },
        ..Default::default()
    };
    let out = minimize_lambda1(0.9, 2, &settings).unwrap();
    let floor = (1.0_f64 - 0.81).sqrt() - 5e-3;
    assert!(
        out.lambda1 >= floor,
        "search reported {} below the merged-configuration floor {floor}",
        out.lambda1
    );
}

#[test]
fn radial_eigenvalue_dominates_equal_mass_point_charge() {
    // Newton comparison: among radial measures of fixed mass, the point
    // charge minimizes lambda_1.
    let cases = [
        ChargeDistribution::ball_at_origin(0.9, 1.0).unwrap(),
        ChargeDistribution::cloud_at_origin(0.5, 1.0).unwrap(),
        ChargeDistribution::new(
            vec![atom([0.0; 3], 0.4)],
            vec![GaussianCloud {
                position: Vector3::zeros(),
                weight: 0.2,
                sigma: 0.5,
            }],
            vec![],
        )
        .unwrap(),
    ];
    for mu in cases {
        let lam = solve_radial(&RadialProblem::new(mu.clone()))
            .unwrap()
            .lambda1;
        let point = solve_pure_coulomb(mu.total_mass()).unwrap().lambda1;
        assert!(
            lam >= point - 1e-7,
            "mass {}: radial measure gave {lam} below the point value {point}",
            mu.total_mass()
        );
    }
}

// ---------------------------------------------------------------------------
// Critical constants
// ---------------------------------------------------------------------------

#[test]
fn solved_eigenvalues_respect_analytic_lower_bound() {
    use dclab_core::critical::lower_bound_lambda;
    // For masses below the Tix floor the resolvent bound must hold.
    for nu in [0.2, 0.4, 0.6, 0.8] {
        let mu = ChargeDistribution::point_at_origin(nu).unwrap();
        let lam = solve_pure_coulomb(nu).unwrap().lambda1;
        let bound = lower_bound_lambda(nu, dclab_core::critical::tix_constant()).unwrap();
        assert!(lam >= bound, "nu = {nu}: lambda1 = {lam} < bound {bound}");
        let _ = mu;
    }
}
