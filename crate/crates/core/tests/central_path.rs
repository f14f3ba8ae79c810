use std::time::Instant;

use penflow::applications::build_canonical;
use penflow::central_path::{
    central_path, least_norm_report, least_norm_solution, path_derivative_check, path_regularity_check,
    solve_auxiliary, solve_auxiliary_traced, FunnelDiagnostics,
};
use penflow::linalg::{dist, norm};
use penflow::oracle::active_set_solve;
use penflow::schedules::polynomial_schedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUNNEL_INSTANCES: [&str; 3] = ["scalar", "segment", "shifted-segment"];

#[test]
fn diagonal_reaches_oracle_least_norm_point() {
    for name in FUNNEL_INSTANCES {
        let prob = build_canonical(name).unwrap();
        let want = active_set_solve(&prob).unwrap().least_norm_point;
        let start = Instant::now();
        let got = least_norm_solution(&prob, 1e-4).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        assert!(dist(&got, &want) <= 1e-3, "{name}: {got:?} vs {want:?}");
        assert!(elapsed < 1.0, "{name}: {elapsed}s");
    }
}

#[test]
fn penalty_vanishes_along_diagonal() {
    for name in FUNNEL_INSTANCES {
        let prob = build_canonical(name).unwrap();
        let rep = least_norm_report(&prob, 1e-5).unwrap();
        assert!(rep.b_norm <= 1e-4, "{name}: {}", rep.b_norm);
    }
}

#[test]
fn segment_paths_stay_in_funnel() {
    let sch = polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap();
    let times: Vec<f64> = (0..40).map(|k| 10f64.powf(k as f64 / 6.0) - 1.0).collect();
    for name in ["segment", "shifted-segment"] {
        let prob = build_canonical(name).unwrap();
        let r = norm(&active_set_solve(&prob).unwrap().least_norm_point);
        let pts = central_path(&prob, &sch, &times, 1e-12).unwrap();
        let funnel = FunnelDiagnostics::new(r, &pts);
        assert!(funnel.norm_excess(&pts, 1e-9).is_empty(), "{name}");
        assert!(pts.iter().all(|p| p.residual <= 1e-12));
    }
}

#[test]
fn regularity_bound_on_random_pairs() {
    for (seed, name) in FUNNEL_INSTANCES.iter().enumerate() {
        let prob = build_canonical(name).unwrap();
        let r = norm(&active_set_solve(&prob).unwrap().least_norm_point);
        let funnel = FunnelDiagnostics::new(r, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let mut violations = Vec::new();
        for _ in 0..100 {
            let s1 = (rng.random_range(0.1..1.0), rng.random_range(1.0..10.0));
            let s2 = (rng.random_range(0.1..1.0), rng.random_range(1.0..10.0));
            let rep = path_regularity_check(&prob, s1, s2, &funnel, 1e-12).unwrap();
            if !rep.passed {
                violations.push((s1, s2, rep.left, rep.right));
            }
        }
        assert!(violations.is_empty(), "{name}: {violations:?}");
    }
}

#[test]
fn regularity_examples() {
    let prob = build_canonical("scalar").unwrap();
    let funnel = FunnelDiagnostics::new(0.0, &[]);
    let rep = path_regularity_check(&prob, (1.0, 1.0), (1.0, 2.0), &funnel, 1e-12).unwrap();
    assert!((rep.left - 1.0 / 6.0).abs() < 1e-10);
    assert!(rep.ell >= 2.0 / 3.0 - 1e-12 && rep.passed);
    let same = path_regularity_check(&prob, (0.5, 3.0), (0.5, 3.0), &funnel, 1e-12).unwrap();
    assert_eq!(same.right, 0.0);
    assert!(same.left <= 1e-12 && same.passed);
}

#[test]
fn derivative_bound_at_fifty_times() {
    let sch = polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap();
    for name in ["scalar", "shifted-segment"] {
        let prob = build_canonical(name).unwrap();
        for k in 0..50 {
            let t = 10f64.powf(-1.0 + 7.0 * k as f64 / 49.0);
            let rep = path_derivative_check(&prob, &sch, t, 0.05).unwrap();
            assert!(rep.passed, "{name} t={t}: {} > {}", rep.derivative, rep.bound);
        }
    }
}

#[test]
fn contraction_rate_of_auxiliary_solver() {
    for name in ["scalar", "segment", "shifted-segment", "sfbp-two-penalty"] {
        let prob = build_canonical(name).unwrap();
        for &(eps, beta) in &[(1.0, 1.0), (0.2, 5.0), (0.05, 30.0)] {
            let mut trace = Vec::new();
            solve_auxiliary_traced(&prob, eps, beta, 1e-13, 1_000_000, &mut trace).unwrap();
            let lip = prob.lipschitz_v(eps, beta);
            let lam = 0.9 / lip;
            let rate = (1.0 - 2.0 * lam * eps + (lam * lip).powi(2)).sqrt() + 1e-6;
            for w in trace.windows(2) {
                if w[0] > 1e-14 {
                    assert!(w[1] / w[0] <= rate, "{name} ({eps},{beta}): {} > {rate}", w[1] / w[0]);
                }
            }
        }
    }
}

#[test]
fn solver_meets_requested_tolerance() {
    let prob = build_canonical("skew-box").unwrap();
    for tol in [1e-6, 1e-10] {
        let pt = solve_auxiliary(&prob, 0.3, 2.0, tol, 1_000_000).unwrap();
        assert!(pt.residual <= tol);
    }
}
