use std::sync::Arc;

use penflow::schedules::{
    attouch_czarnecki_check, polynomial_schedule, validate_schedule, validate_schedule_numeric, CustomSchedule,
    Mode, Moduli, Schedule,
};
use proptest::prelude::*;

const UNIT: Moduli = Moduli { eta: 1.0, mu: 1.0 };

/// Offsets keep the grid off the ties `r = s`, `r + s = 1/2`, `r + s = 1/3`
/// except on the diagonal, where both verdicts must say "fail".
fn grid_20() -> Vec<f64> {
    (0..20).map(|i| 0.5 * (i as f64 + 0.3) / 20.0).collect()
}

#[test]
fn exponent_and_numeric_verdicts_agree_on_grid() {
    let g = grid_20();
    for mode in [Mode::FB, Mode::FBF] {
        let mut disagreements = Vec::new();
        for &r in &g {
            for &s in &g {
                let sch = polynomial_schedule(r, s, 1.0, 0.45, 1.0).unwrap();
                let exact = validate_schedule(&sch, mode, UNIT);
                let numeric = validate_schedule_numeric(&sch, mode, UNIT);
                assert_eq!(exact.method, "exact-exponent");
                if exact.overall != numeric.overall {
                    disagreements.push((r, s, exact.overall));
                }
            }
        }
        assert!(disagreements.is_empty(), "{mode}: {disagreements:?}");
    }
}

#[test]
fn reference_verdicts() {
    let fb = validate_schedule(&polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap(), Mode::FB, UNIT);
    assert!(fb.overall);
    assert!(fb.check("r+s<1/2").unwrap().passed);

    let bad = validate_schedule(&polynomial_schedule(0.2, 0.2, 1.0, 0.9, 1.0).unwrap(), Mode::FBF, UNIT);
    assert!(!bad.overall);
    let c = bad.check("r+s<1/3").unwrap();
    assert!(!c.passed);
    assert!((c.witness_value - 0.4).abs() < 1e-15);

    let good = validate_schedule(&polynomial_schedule(0.05, 0.25, 1.0, 0.9, 1.0).unwrap(), Mode::FBF, UNIT);
    assert!(good.overall);
    assert!(good.check("r+s<1/3").unwrap().passed);
}

#[test]
fn polynomial_values() {
    let sch = polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap();
    assert_eq!(sch.eps(0.0), 1.0);
    assert_eq!(sch.beta(0.0), 1.0);
    assert!((sch.lambda(0.0) - 0.9 / 1.9).abs() < 1e-15);
    assert!((sch.deps(0.0) + 0.1).abs() < 1e-15);
    let other = polynomial_schedule(0.25, 0.2, 4.0, 1.0, 1.0).unwrap();
    assert!((other.eps(0.0) - 0.5f64.sqrt()).abs() < 1e-15);
}

fn power(lam_exp: f64, beta_exp: f64) -> Schedule {
    Schedule::custom(CustomSchedule {
        eps: Arc::new(|t| (1.0 + t).powf(-0.5)),
        beta: Arc::new(move |t| (1.0 + t).powf(beta_exp)),
        lambda: Arc::new(move |t| (1.0 + t).powf(-lam_exp)),
        gamma: Arc::new(|_| 1.0),
        deps: Arc::new(|t| -0.5 * (1.0 + t).powf(-1.5)),
        dbeta: Arc::new(move |t| beta_exp * (1.0 + t).powf(beta_exp - 1.0)),
    })
}

#[test]
fn attouch_czarnecki_examples() {
    let a = attouch_czarnecki_check(&power(0.8, 0.5), 2.0, 1e6);
    assert!(a.passed && a.bound.is_finite());
    assert!((a.tail_exponent + 1.3).abs() < 1e-3);
    let b = attouch_czarnecki_check(&power(0.3, 0.5), 2.0, 1e6);
    assert!(!b.passed);
    let c = attouch_czarnecki_check(&power(0.0, 2.0), 2.0, 1e6);
    assert!(c.passed);
    assert!((c.bound - 1.0).abs() < 1e-3, "{}", c.bound);
}

#[test]
fn lambda_bounds_when_reported() {
    let m = Moduli { eta: 0.5, mu: 2.0 };
    let mut t_grid = vec![0.0];
    let mut t = 1.0;
    while t <= 1e8 {
        t_grid.push(t);
        t *= 1.5;
    }
    for &(r, s, lb) in &[(0.1, 0.2, 0.45), (0.05, 0.25, 0.3), (0.1, 0.3, 0.49)] {
        let sch = polynomial_schedule(r, s, 1.0, lb, 1.0).unwrap();
        let rep = validate_schedule(&sch, Mode::FB, m);
        let bounds_pass = rep.check("lambda_bar<eta*b^s").unwrap().passed && rep.check("lambda_bar<mu").unwrap().passed;
        assert!(bounds_pass);
        // each half of the bound holds everywhere, the combined one on the tail
        for &t in &t_grid {
            let (e, b, l) = (sch.eps(t), sch.beta(t), sch.lambda(t));
            assert!(l < m.eta / (1.0 + m.eta * e), "r={r} s={s} t={t}");
            assert!(l < m.mu / (m.mu * e + b), "r={r} s={s} t={t}");
        }
        let tail = t_grid.iter().filter(|&&t| t >= 1e7);
        for &t in tail {
            let lip = 1.0 / m.eta + sch.eps(t) + sch.beta(t) / m.mu;
            assert!(sch.lambda(t) * lip < 1.0, "r={r} s={s} t={t}");
        }
    }
    let rejected = polynomial_schedule(0.1, 0.3, 1.0, 1.9, 1.0).unwrap();
    assert!(!validate_schedule(&rejected, Mode::FB, m).check("lambda_bar<eta*b^s").unwrap().passed);

    let lip0 = 1.0 + 1.0 + 1.0;
    let sch = polynomial_schedule(0.1, 0.2, 1.0, 0.9, 1.0).unwrap();
    assert!(validate_schedule(&sch, Mode::FB, UNIT).overall);
    assert!(sch.lambda(0.0) * lip0 > 1.0);
}

proptest! {
    #[test]
    fn eps_nonincreasing_beta_nondecreasing(
        r in 0.01..0.99f64, s in 0.01..3.0f64, b in 1.0..100.0f64, t in 0.0..1e7f64, dt in 0.0..1e3f64,
    ) {
        let sch = polynomial_schedule(r, s, b, 0.5, 1.0).unwrap();
        prop_assert!(sch.eps(t + dt) <= sch.eps(t));
        prop_assert!(sch.beta(t + dt) >= sch.beta(t));
        prop_assert!(sch.lambda(t) > 0.0 && sch.gamma(t) > 0.0);
    }

    #[test]
    fn overall_is_conjunction(r in 0.01..0.99f64, s in 0.01..1.5f64, lb in 0.1..3.0f64) {
        let sch = polynomial_schedule(r, s, 1.0, lb, 1.0).unwrap();
        for mode in [Mode::FB, Mode::FBF, Mode::SFBP] {
            for rep in [validate_schedule(&sch, mode, UNIT), validate_schedule_numeric(&sch, mode, UNIT)] {
                prop_assert_eq!(rep.overall, rep.checks.iter().all(|c| c.passed));
            }
        }
    }
}
