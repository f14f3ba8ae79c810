//! One PASS/FAIL line per acceptance criterion. Built without the libtest
//! harness so the lines are printed by a plain `cargo test`.
//!
//! Criterion 3 cannot pass on the scalar instance: with the prescribed schedule
//! the central path itself sits at `x̄(10⁴) = 2/(1 + ε + β) ≈ 0.259`, so no
//! trajectory that tracks it can be within 5e-2 of the least-norm point 0 at
//! `T = 10⁴`. The criterion is evaluated as stated and its failure is expected;
//! every other failure fails the test.

use std::fs;
use std::time::Instant;

use penflow::applications::{
    build_canonical, build_tv_deblur_with_kernel, checkerboard, discrete_gradient, discrete_gradient_adjoint,
    gaussian_blur, gaussian_kernel, gradient_norm_sq_estimate, Kernel, Shape, CANONICAL_NAMES,
};
use penflow::central_path::{
    central_path, least_norm_solution, path_derivative_check, path_regularity_check, FunnelDiagnostics,
};
use penflow::dynamics::{
    integrate_fb, integrate_fbf, integrate_mode, integrate_sfbp, tracking_report, IntegratorSpec, THETA_SLACK,
};
use penflow::io::{run_experiment, ExperimentConfig, EXIT_OK};
use penflow::linalg::{dist, dot, norm, sub};
use penflow::operators::{AffineMap, MaxMonotone};
use penflow::oracle::{active_set_solve, high_precision_reference};
use penflow::schedules::{
    attouch_czarnecki_check, polynomial_schedule, validate_schedule, validate_schedule_numeric, Mode, Moduli,
};
use penflow::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNATTAINABLE: &[usize] = &[3];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn central_funnel() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["scalar", "segment", "shifted-segment"] {
        let prob = build_canonical(name).unwrap();
        let want = active_set_solve(&prob).unwrap().least_norm_point;
        let start = Instant::now();
        let got = least_norm_solution(&prob, 1e-4).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let err = dist(&got, &want);
        ok &= err <= 1e-3 && secs < 1.0;
        parts.push(format!("{name} err {err:.1e} in {secs:.3}s"));
    }
    outcome(ok, parts.join(", "))
}

fn regularity() -> Outcome {
    let mut violations = 0;
    let mut pairs = 0;
    for (seed, name) in ["scalar", "segment", "shifted-segment", "skew-box"].iter().enumerate() {
        let prob = build_canonical(name).unwrap();
        let r = norm(&active_set_solve(&prob).unwrap().least_norm_point);
        let funnel = FunnelDiagnostics::new(r, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed as u64);
        for _ in 0..100 {
            let s1 = (rng.random_range(0.1..1.0), rng.random_range(1.0..10.0));
            let s2 = (rng.random_range(0.1..1.0), rng.random_range(1.0..10.0));
            pairs += 1;
            if !path_regularity_check(&prob, s1, s2, &funnel, 1e-12).unwrap().passed {
                violations += 1;
            }
        }
    }
    let sch = polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap();
    let mut deriv_fail = 0;
    let mut worst = 0.0f64;
    for name in ["scalar", "shifted-segment", "skew-box"] {
        let prob = build_canonical(name).unwrap();
        for k in 0..50 {
            let t = 10f64.powf(-1.0 + 7.0 * k as f64 / 49.0);
            let rep = path_derivative_check(&prob, &sch, t, 0.05).unwrap();
            if rep.bound > 0.0 {
                worst = worst.max(rep.derivative / rep.bound);
            }
            deriv_fail += usize::from(!rep.passed);
        }
    }
    outcome(
        violations == 0 && deriv_fail == 0,
        format!("{violations}/{pairs} pair violations, {deriv_fail}/150 derivative failures, worst ratio {worst:.3}"),
    )
}

fn fb_strong_convergence() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["scalar", "segment"] {
        let prob = build_canonical(name).unwrap();
        let lb = 0.9 * prob.b1.mu().min(prob.d.eta());
        let sch = polynomial_schedule(0.1, 0.2, 1.0, lb, 1.0).unwrap();
        let target = active_set_solve(&prob).unwrap().least_norm_point;
        let start = Instant::now();
        let spec = IntegratorSpec::uniform(Mode::FB, 1.0, 1e4).with_record_every(100);
        let tr = integrate_fb(&prob, &sch, &vec![1.0; prob.dim()], &spec).unwrap();
        let path = central_path(&prob, &sch, &tr.times, 1e-12).unwrap();
        let rep = tracking_report(&tr, &path).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let err = dist(tr.final_state(), &target);
        let monotone = rep.samples[rep.burn_in..]
            .windows(2)
            .all(|w| w[1].theta <= w[0].theta + THETA_SLACK);
        ok &= err <= 5e-2 && monotone && secs < 10.0;
        parts.push(format!(
            "{name}: |x(T)-x*| {err:.3e}, gap to path {:.2e}, theta nonincreasing after sample {} {}, {secs:.2}s",
            rep.final_gap,
            rep.burn_in,
            if monotone { "yes" } else { "no" }
        ));
    }
    outcome(ok, parts.join("; "))
}

fn fbf_skew() -> Outcome {
    let prob = build_canonical("skew-box").unwrap();
    let sch = polynomial_schedule(0.05, 0.25, 1.0, 0.9, 1.0).unwrap();
    let spec = IntegratorSpec::uniform(Mode::FBF, 1.0, 1e5).with_record_every(100);
    let tr = integrate_fbf(&prob, &sch, &[1.0, 1.0], &spec).unwrap();
    let path = central_path(&prob, &sch, &tr.times, 1e-13).unwrap();
    let rep = tracking_report(&tr, &path).unwrap();
    let xn = norm(tr.final_state());
    let frac = rep.lyapunov_fraction.unwrap_or(0.0);
    let fb = IntegratorSpec::uniform(Mode::FB, 1.0, 1e5);
    let rejected = matches!(integrate_mode(&prob, &sch, &[1.0, 1.0], &fb), Err(Error::Precondition(_)));
    outcome(
        xn <= 1e-2 && frac >= 0.99 && rejected,
        format!("|x(T)| {xn:.3e}, Lyapunov residual nonpositive at {:.2}% of steps, FB rejected {rejected}", 100.0 * frac),
    )
}

fn sfbp() -> Outcome {
    let prob = build_canonical("sfbp-two-penalty").unwrap();
    let sch = polynomial_schedule(0.9, 0.6, 100.0, 0.9, 1.0).unwrap();
    let valid = validate_schedule(&sch, Mode::SFBP, Moduli { eta: prob.d.eta(), mu: prob.b1.mu() }).overall;
    let ac = attouch_czarnecki_check(&sch, 2.0, 1e7);
    let start = Instant::now();
    let spec = IntegratorSpec::uniform(Mode::SFBP, 1.0, 3e6).with_record_every(10_000);
    let tr = integrate_sfbp(&prob, &sch, &[1.0], &spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let last = tr.diagnostics.last().unwrap();
    let psi = last.psi_sum.unwrap_or(f64::INFINITY);
    let cert = active_set_solve(&prob).unwrap();
    let erg_gap = cert.distance_to_set(&tr.ergodic_full).unwrap();
    outcome(
        valid && ac.passed && last.b1_norm <= 1e-3 && psi <= 1e-3 && erg_gap <= 1e-2 && secs < 30.0,
        format!(
            "schedule valid {valid}, AC bound {:.3}, |B1(x(T))| {:.2e}, psi {psi:.2e}, ergodic gap {erg_gap:.2e}, {secs:.1}s",
            ac.bound, last.b1_norm
        ),
    )
}

fn validator() -> Outcome {
    let unit = Moduli { eta: 1.0, mu: 1.0 };
    let grid: Vec<f64> = (0..20).map(|i| 0.5 * (i as f64 + 0.3) / 20.0).collect();
    let mut disagreements = 0;
    for mode in [Mode::FB, Mode::FBF] {
        for &r in &grid {
            for &s in &grid {
                let sch = polynomial_schedule(r, s, 1.0, 0.45, 1.0).unwrap();
                disagreements += usize::from(
                    validate_schedule(&sch, mode, unit).overall != validate_schedule_numeric(&sch, mode, unit).overall,
                );
            }
        }
    }
    let verdict = |r, s, mode, check: &str| {
        let rep = validate_schedule(&polynomial_schedule(r, s, 1.0, 0.9, 1.0).unwrap(), mode, unit);
        (rep.overall, rep.check(check).unwrap().passed)
    };
    let examples = verdict(0.1, 0.2, Mode::FB, "r+s<1/2") == (true, true)
        && verdict(0.2, 0.2, Mode::FBF, "r+s<1/3") == (false, false)
        && verdict(0.05, 0.25, Mode::FBF, "r+s<1/3") == (true, true);
    outcome(
        disagreements == 0 && examples,
        format!("{disagreements}/800 disagreements, reference verdicts reproduced {examples}"),
    )
}

fn operator_calculus() -> Outcome {
    let inf = f64::INFINITY;
    let affine = AffineMap::from_rows(&[&[1.0, 2.0, 0.0], &[-2.0, 0.5, 1.0], &[0.0, -1.0, 0.0]], &[0.3, -1.0, 2.0]).unwrap();
    let ops = [
        MaxMonotone::Zero,
        MaxMonotone::normal_cone_of_box(vec![-1.0, 0.0, -inf], vec![1.0, 0.0, 2.0]).unwrap(),
        MaxMonotone::l1(0.7).unwrap(),
        MaxMonotone::product(vec![
            (1, MaxMonotone::normal_cone_of_box(vec![0.0], vec![1.0]).unwrap()),
            (2, MaxMonotone::PairBallNormalCone),
        ])
        .unwrap(),
        MaxMonotone::inverse(MaxMonotone::l1(1.3).unwrap()),
        MaxMonotone::affine(affine).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v3 = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..3).map(|_| rng.random_range(-20.0..20.0)).collect() };
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = (v3(&mut rng), v3(&mut rng));
        let (lam, alpha) = (rng.random_range(1e-2..10.0), rng.random_range(1e-2..10.0));
        for op in &ops {
            let (jx, jy) = (op.resolvent(lam, &x).unwrap(), op.resolvent(lam, &y).unwrap());
            let d = sub(&jx, &jy);
            worst = worst.max(dot(&d, &d) - dot(&d, &sub(&x, &y)));
            let ja = op.resolvent(alpha, &x).unwrap();
            let yos = op.yosida(lam, &x).unwrap();
            worst = worst.max(dist(&jx, &ja) - (lam - alpha).abs() * norm(&yos));
            if op.has_exact_resolvent() {
                let lhs = MaxMonotone::inverse(op.clone()).resolvent(lam, &x).unwrap();
                let scaled: Vec<f64> = x.iter().map(|v| v / lam).collect();
                let inner = op.resolvent(1.0 / lam, &scaled).unwrap();
                for i in 0..3 {
                    worst = worst.max((lhs[i] + lam * inner[i] - x[i]).abs());
                }
            }
        }
    }
    let mut adjoint = 0.0f64;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::new(rng.random_range(1..20), rng.random_range(1..20)).unwrap();
        let mut field = || -> Vec<f64> { (0..shape.len()).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (th, u, v) = (field(), field(), field());
        let (lu, lv) = discrete_gradient(&th, shape).unwrap();
        let lhs = dot(&lu, &u) + dot(&lv, &v);
        adjoint = adjoint.max((lhs - dot(&th, &discrete_gradient_adjoint(&u, &v, shape).unwrap())).abs());
        let k = gaussian_kernel(9, 4.0).unwrap();
        let kx = gaussian_blur(&th, shape, &k, false).unwrap();
        let kty = gaussian_blur(&u, shape, &k, true).unwrap();
        adjoint = adjoint.max((dot(&kx, &u) - dot(&th, &kty)).abs());
    }
    let mut norms = Vec::new();
    for side in [8, 16, 32, 64] {
        norms.push(gradient_norm_sq_estimate(Shape::new(side, side).unwrap(), 200, 11));
    }
    let norm_ok = norms.iter().all(|&n| n <= 8.0 + 1e-6);
    outcome(
        worst <= 1e-10 && adjoint <= 1e-10 && norm_ok,
        format!(
            "worst resolvent excess {worst:.1e}, adjoint gap {adjoint:.1e}, |L|^2 estimates {}",
            norms.iter().map(|n| format!("{n:.6}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn deblurring() -> Outcome {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"instance": {"deblur": {"image": "checkerboard", "rows": 64, "cols": 64, "square": 8,
                                   "kernel_size": 9, "sigma": 4, "noise_std": 1e-3}},
            "schedule": {"family": "polynomial", "r": 0.05, "s": 0.25, "b": 1,
                         "lambda_bar": 0.31819805153394637, "gamma_bar": 1},
            "integrator": {"mode": "FBF", "grid": {"kind": "uniform", "h": 1, "T": 1e12},
                           "record_every": 1000, "max_steps": 50000},
            "seed": 7}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = run_experiment(&cfg, dir.path()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let isnr: Vec<f64> = fs::read_to_string(dir.path().join("isnr.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let half = &isnr[isnr.len() / 2..];
    let increasing = half.windows(2).all(|w| w[1] > w[0]);
    let last = *isnr.last().unwrap();

    // identity kernel, no noise: the penalty pins Kθ = θ to the data
    let img = checkerboard(32, 32, 8).unwrap();
    let ctl_start = Instant::now();
    let inst = build_tv_deblur_with_kernel(&img, Kernel::identity(), 0.0, 0.0, 7).unwrap();
    let sch = polynomial_schedule(0.05, 0.25, 1e10, 0.9 / 8f64.sqrt(), 1.0).unwrap();
    let spec = IntegratorSpec::uniform(Mode::FBF, 1.0, 1e12).with_max_steps(50_000).with_record_every(50_000);
    let tr = integrate_fbf(&inst.problem, &sch, &inst.initial_state(), &spec).unwrap();
    let restored = inst.restored(tr.final_state()).unwrap();
    let ctl_err = restored.pixels.iter().zip(&img.pixels).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ctl_secs = ctl_start.elapsed().as_secs_f64();

    outcome(
        report.exit_code == EXIT_OK && last > 0.0 && increasing && ctl_err <= 1e-2 && secs + ctl_secs < 60.0,
        format!(
            "final ISNR {last:.3} dB, increasing over last {} samples {increasing}, control max error {ctl_err:.1e}, {secs:.1}s + {ctl_secs:.1}s",
            half.len()
        ),
    )
}

fn determinism_and_agreement() -> Outcome {
    let cfg = ExperimentConfig::from_json_str(
        r#"{"instance": "scalar", "mode": "FB", "T": 1e3,
            "schedule": {"family": "polynomial", "r": 0.1, "s": 0.2, "b": 1, "lambda_bar": 0.9, "gamma_bar": 1}}"#,
    )
    .unwrap();
    let read_all = |d: &std::path::Path| {
        let mut v: Vec<_> = fs::read_dir(d)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let identical = read_all(a.path()) == read_all(b.path());
    let mut worst = 0.0f64;
    for name in CANONICAL_NAMES {
        let prob = build_canonical(name).unwrap();
        let cert = active_set_solve(&prob).unwrap();
        let r = high_precision_reference(&prob, &vec![0.0; prob.dim()], 1e-12).unwrap();
        worst = worst.max(cert.distance_to_set(&r).unwrap());
    }
    outcome(identical && worst <= 1e-9, format!("artifacts identical {identical}, worst oracle/reference distance {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("central funnel convergence", central_funnel),
        ("solution-map regularity", regularity),
        ("FB strong convergence", fb_strong_convergence),
        ("FBF on non-cocoercive D", fbf_skew),
        ("SFBP conclusions", sfbp),
        ("schedule validator", validator),
        ("operator calculus", operator_calculus),
        ("deblurring pipeline", deblurring),
        ("determinism and oracle agreement", determinism_and_agreement),
    ];
    let mut unexpected = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {n} {tag} {title} [{:.2}s]: {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.passed && !UNATTAINABLE.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
