mod common;

use common::{rng, s1};
use rand::Rng;
use tdm_ies_core::optimizer::{bound_curve, default_grid, log_grid};
use tdm_ies_core::*;

fn random_receiver(g: &mut rand_chacha::ChaCha8Rng) -> Receiver {
    let p_b = g.gen_range(0.5..2.0);
    let p_r = p_b * g.gen_range(1.2..6.0);
    let q_c = g.gen_range(100.0..10_000.0);
    let t_d = 10f64.powf(g.gen_range(-4.0..-0.5));
    ReceiverSpec {
        p_b,
        p_r,
        q_c,
        q_ies: q_c / 100.0,
        t_d,
    }
    .validate()
    .unwrap()
}

#[test]
fn closed_form_and_golden_search_agree() {
    let mut g = rng(17);
    for _ in 0..100 {
        let r = random_receiver(&mut g);
        let n = g.gen_range(2..10);
        let opt = minimize_bound(&r, n).unwrap();
        assert!(!opt.closed_form.at_boundary);
        assert!(opt.disagreement() <= 5e-3, "{}", opt.disagreement());
    }
}

#[test]
fn bound_has_a_single_valley() {
    let mut g = rng(23);
    for _ in 0..100 {
        let r = random_receiver(&mut g);
        let n = g.gen_range(2..10);
        let grid = log_grid(r.q_c * 1e-9, r.q_c * 0.999, 1000);
        let ys: Vec<f64> = bound_curve(&r, n, &grid).into_iter().map(|p| p.1).collect();
        let diffs: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
        let changes = diffs
            .windows(2)
            .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
            .count();
        assert_eq!(changes, 1);
    }
}

#[test]
fn optimum_bound_still_dominates_exact_time() {
    let mut g = rng(29);
    for _ in 0..100 {
        let r = random_receiver(&mut g);
        let n = g.gen_range(2..10);
        let opt = minimize_bound(&r, n).unwrap();
        let at = r.with_q_ies(opt.closed_form.q_star).unwrap();
        let exact = t_oc_analytic(&at, n);
        assert!(exact.t_oc <= t_oc_upper_bound(&at, n) * (1.0 + 1e-12));
        if exact.regime.standby {
            assert!(exact.t_oc <= opt.closed_form.t_star * (1.0 + 1e-12));
        }
    }
}

#[test]
fn reference_optimum() {
    let r = ReceiverSpec::reference().validate().unwrap();
    let opt = minimize_bound(&r, 3).unwrap();
    assert!((opt.closed_form.q_star - 3.3941).abs() < 1e-3);
    assert!(opt.disagreement() <= 5e-3);
    assert!(minimize_bound(&r.with_q_ies(1.0).unwrap(), 3).is_ok());
    let no_delay = ReceiverSpec {
        t_d: 0.0,
        ..ReceiverSpec::reference()
    }
    .validate()
    .unwrap();
    assert!(matches!(
        minimize_bound(&no_delay, 3),
        Err(Error::DegenerateObjective(_))
    ));
}

#[test]
fn grid_scans_are_deterministic() {
    let v = validate_spec(ScenarioSpec::default()).unwrap();
    let grid = default_grid(v.receiver().q_c);
    let a = grid_search_qies(&v, &grid, Evaluator::Analytic).unwrap();
    let b = grid_search_qies(&v, &grid, Evaluator::Analytic).unwrap();
    assert_eq!(a, b);
}

#[test]
fn small_example_zigzag() {
    let v = s1(0.0, 6);
    let grid = log_grid(0.01, 99.0, 200);
    let scan = grid_search_qies(&v, &grid, Evaluator::Analytic).unwrap();
    let curve = scan.curve.unwrap();
    for w in curve.windows(2) {
        assert!(w[1].k_l <= w[0].k_l);
    }
    for p in &curve {
        let k = (100.0 / (p.q_ies * 4.2 / 3.2)).floor() as u64;
        // Exact multiples of a cycle count one fewer full cycle.
        assert!(p.k_l == k || p.k_l + 1 == k);
    }
    let shape = zigzag_shape(&curve);
    assert!(shape.is_zigzag(), "{shape:?}");
    assert!(shape.full_teeth >= 1);
}

#[test]
fn reference_zigzag_and_scan_argmins() {
    let v = validate_spec(ScenarioSpec {
        n: 6,
        ..ScenarioSpec::default()
    })
    .unwrap();
    let grid = default_grid(v.receiver().q_c);
    let scan = grid_search_qies(&v, &grid, Evaluator::Analytic).unwrap();
    let shape = zigzag_shape(scan.curve.as_ref().unwrap());
    assert!(shape.is_zigzag(), "{shape:?}");

    let v3 = validate_spec(ScenarioSpec::default()).unwrap();
    let coarse = log_grid(0.5, 50.0, 60);
    let an = grid_search_qies(&v3, &coarse, Evaluator::Analytic).unwrap();
    let sim = grid_search_qies(&v3, &coarse, Evaluator::EventSim).unwrap();
    let i = coarse.iter().position(|&q| q == an.q_star).unwrap() as i64;
    let j = coarse.iter().position(|&q| q == sim.q_star).unwrap() as i64;
    assert!((i - j).abs() <= 1, "{} vs {}", an.q_star, sim.q_star);
}

#[test]
fn bad_grids_are_rejected() {
    let v = s1(0.0, 3);
    for grid in [vec![], vec![0.0, 1.0], vec![2.0, 1.0], vec![1.0, 100.0]] {
        assert!(matches!(
            grid_search_qies(&v, &grid, Evaluator::Analytic),
            Err(Error::InvalidGrid(_))
        ));
    }
    let pw = validate_spec(ScenarioSpec {
        profile: ChargeProfile::Piecewise3 { scale: 1.0 },
        ..ScenarioSpec::default()
    })
    .unwrap();
    assert!(matches!(
        grid_search_qies(&pw, &[1.0, 2.0], Evaluator::Analytic),
        Err(Error::Unsupported(_))
    ));
    assert!(grid_search_qies(&pw, &[1.0, 2.0], Evaluator::EventSim).is_ok());
}
