//! Closed forms against the event engine, and the event engine against the
//! fixed-step oracle.

mod common;

use common::{random_scenario, rng, s1};
use proptest::prelude::*;
use tdm_ies_core::sim::tx_busy_fraction_until;
use tdm_ies_core::*;

fn constant(p_b: f64, p_r: f64, q_c: f64, q_ies: f64, t_d: f64, n: usize) -> ValidatedScenario {
    validate_spec(ScenarioSpec::constant(
        ReceiverSpec {
            p_b,
            p_r,
            q_c,
            q_ies,
            t_d,
        },
        n,
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn no_standby_runs_match_closed_form(
        p_b in 0.5f64..2.0,
        ratio in 1.5f64..6.0,
        cycles in 2.0f64..40.0,
        q_c in 50.0f64..400.0,
        n in 1usize..6,
        delay_frac in 0.0f64..0.05,
    ) {
        let p_r = p_b * ratio;
        let q_ies = q_c * (p_r - p_b) / (p_r * cycles);
        let t_d = delay_frac * q_ies / (p_r - p_b);
        let v = constant(p_b, p_r, q_c, q_ies, t_d, n);
        let an = t_oc_analytic(v.receiver(), n);
        prop_assume!(!an.regime.standby);
        let sim = run_event_sim(&v, false).unwrap();
        prop_assert!((sim.t_oc - an.t_oc).abs() <= 1e-9 * an.t_oc);
        prop_assert_eq!(sim.total_standby, 0.0);
    }

    #[test]
    fn standby_runs_within_one_cycle(
        p_b in 0.5f64..2.0,
        ratio in 1.05f64..3.0,
        cycles in 2.0f64..40.0,
        q_c in 50.0f64..400.0,
        n in 3usize..12,
        delay_frac in 0.0f64..0.3,
    ) {
        let p_r = p_b * ratio;
        let q_ies = q_c * (p_r - p_b) / (p_r * cycles);
        let t_d = delay_frac * q_ies / (p_r - p_b);
        let v = constant(p_b, p_r, q_c, q_ies, t_d, n);
        let an = t_oc_analytic(v.receiver(), n);
        prop_assume!(an.regime.standby);
        let ph = phase_durations(v.receiver());
        let sim = run_event_sim(&v, false).unwrap();
        prop_assert!((sim.t_oc - an.t_oc).abs() <= ph.c + n as f64 * t_d);
        prop_assert!(sim.total_standby > 0.0);
    }
}

#[test]
fn worked_examples() {
    let r = run_event_sim(&s1(0.0, 2), false).unwrap();
    assert_eq!(r.t_oc, 103.125);
    assert_eq!(r.total_standby, 0.0);

    let r = run_event_sim(&s1(0.0, 6), false).unwrap();
    assert!((r.t_oc - 155.0).abs() <= 13.125);
    assert!(r.total_standby > 0.0);

    let v = constant(1.0, 4.2, 3600.0, 3.4, 1e-3, 3);
    let r = run_event_sim(&v, false).unwrap();
    assert!((r.t_oc - 3602.13).abs() < 0.01);
}

#[test]
fn simulation_never_exceeds_bound() {
    let mut g = rng(11);
    for _ in 0..200 {
        let v = random_scenario(&mut g, 10);
        let sim = run_event_sim(&v, false).unwrap();
        let bound = t_oc_upper_bound(v.receiver(), v.n());
        assert!(
            sim.t_oc <= bound,
            "{} > {bound} for {:?}",
            sim.t_oc,
            v.spec()
        );
    }
}

#[test]
fn standby_iff_more_than_n_max() {
    for (p_r, q_ies) in [(4.2, 10.0), (2.0, 3.0), (3.5, 0.8), (7.9, 5.0)] {
        let base = constant(1.0, p_r, 100.0, q_ies, 0.0, 1);
        let n_max = n_max(base.receiver()) as usize;
        for n in 1..=2 * n_max {
            let v = constant(1.0, p_r, 100.0, q_ies, 0.0, n);
            let sim = run_event_sim(&v, false).unwrap();
            assert_eq!(sim.total_standby == 0.0, n <= n_max, "p_r={p_r} n={n}");
        }
    }
}

#[test]
fn trace_invariants() {
    let mut g = rng(5);
    let mut scenarios: Vec<_> = (0..40).map(|_| random_scenario(&mut g, 8)).collect();
    scenarios.push(s1(0.5, 6));
    for v in scenarios {
        let sim = run_event_sim(&v, true).unwrap();
        let trace = sim.trace.as_ref().unwrap();
        let t_d = v.receiver().t_d;
        let q_ies = v.receiver().q_ies;
        let mut coupled: Option<usize> = None;
        let mut last_release: Option<(usize, f64)> = None;
        let mut last_battery = vec![0.0; v.n()];
        let mut last_time = 0.0;
        for ev in trace {
            assert!(ev.time >= last_time);
            last_time = ev.time;
            assert!(ev.ies_energy >= 0.0 && ev.ies_energy <= q_ies + 1e-9);
            if let Some(i) = ev.receiver {
                assert!(ev.battery_energy >= last_battery[i] - 1e-12);
                last_battery[i] = ev.battery_energy;
            }
            match ev.kind {
                EventKind::CoupleStart => {
                    assert!(coupled.is_none(), "two receivers coupled at {}", ev.time);
                    let i = ev.receiver.unwrap();
                    if let Some((j, t)) = last_release {
                        if j != i {
                            assert!(ev.time >= t + t_d - 1e-12);
                        }
                    }
                    coupled = Some(i);
                }
                EventKind::Decouple => {
                    assert_eq!(coupled, ev.receiver);
                    coupled = None;
                    last_release = Some((ev.receiver.unwrap(), ev.time));
                }
                _ => {}
            }
        }
        let ledger = energy_ledger_check(&sim, &v).unwrap();
        assert!(ledger.max_residual <= 1e-9, "{}", ledger.max_residual);
    }
}

#[test]
fn transmitter_saturated_in_standby_regime() {
    for (n, q_ies) in [(6, 10.0), (8, 2.0), (5, 1.0)] {
        let v = constant(1.0, 4.2, 100.0, q_ies, 0.0, n);
        assert!(classify_regime(v.receiver(), n).standby);
        let sim = run_event_sim(&v, true).unwrap();
        let trace = sim.trace.unwrap();
        // The tail starts with the first receiver's last coupling.
        let tail = (0..n)
            .map(|i| {
                trace
                    .iter()
                    .filter(|e| e.kind == EventKind::CoupleStart && e.receiver == Some(i))
                    .map(|e| e.time)
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let busy = tx_busy_fraction_until(&trace, tail);
        assert!(busy >= 0.99, "n={n}: {busy}");
    }
}

#[test]
fn runs_are_deterministic() {
    let v = s1(0.25, 7);
    let a = run_event_sim(&v, true).unwrap();
    let b = run_event_sim(&v, true).unwrap();
    assert_eq!(a, b);
    let render = |r: &SimResult| format!("{:?}", r.trace);
    assert_eq!(render(&a), render(&b));
}

#[test]
fn fixed_step_oracle_agrees() {
    let cases = [(s1(0.0, 2), 1e-3), (s1(0.0, 6), 1e-3)];
    for (v, dt) in cases {
        let ev = run_event_sim(&v, false).unwrap();
        let fx = run_fixed_step(&v, dt).unwrap();
        assert!((fx.t_oc - ev.t_oc).abs() <= 2.0 * dt * ev.event_count as f64);
        if ev.total_standby > 0.0 {
            assert!((fx.total_standby - ev.total_standby).abs() <= 0.01 * ev.total_standby);
        } else {
            assert_eq!(fx.total_standby, 0.0);
        }
    }
    let one = constant(1.0, 4.2, 100.0, 10.0, 0.0, 1);
    let fx = run_fixed_step(&one, 1e-3).unwrap();
    assert!((fx.t_oc - 100.0).abs() <= 1e-3 + 1e-9);
}

#[test]
fn early_release_rule_still_matches_no_standby_closed_form() {
    let mut g = rng(21);
    for _ in 0..100 {
        let v = random_scenario(&mut g, 6);
        let an = t_oc_analytic(v.receiver(), v.n());
        if an.regime.standby {
            continue;
        }
        let sim = run_event_sim_with(&v, true, FinalCycleRule::EarlyRelease).unwrap();
        assert!((sim.t_oc - an.t_oc).abs() <= 1e-9 * an.t_oc);
        energy_ledger_check(&sim, &v).unwrap();
    }
}

#[test]
fn practical_profile_runs_conserve_energy() {
    for (n, p_r, s0) in [(3, 4.2, 0.0), (2, 8.0, 0.3), (4, 3.0, 0.1), (3, 2.5, 0.6)] {
        let v = validate_spec(ScenarioSpec {
            receiver: ReceiverSpec {
                p_r,
                ..ReceiverSpec::reference()
            },
            n,
            profile: ChargeProfile::Piecewise3 { scale: 1.0 },
            initial_soc: s0,
        })
        .unwrap();
        let sim = run_event_sim(&v, true).unwrap();
        let ledger = energy_ledger_check(&sim, &v).unwrap();
        assert!(ledger.max_residual <= 1e-6);
        let conv = conventional_t_oc(v.receiver(), n, v.profile(), s0);
        assert!(sim.t_oc < conv + n as f64 * v.receiver().t_d);
        let fx = run_fixed_step(&v, 0.01).unwrap();
        assert!(
            (fx.t_oc - sim.t_oc).abs() <= 0.01 * sim.t_oc,
            "{} vs {}",
            fx.t_oc,
            sim.t_oc
        );
    }
}

#[test]
fn ledger_requires_trace() {
    let v = s1(0.0, 2);
    let sim = run_event_sim(&v, false).unwrap();
    assert!(matches!(
        energy_ledger_check(&sim, &v),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn ledger_flags_tampered_trace() {
    let v = s1(0.0, 3);
    let mut sim = run_event_sim(&v, true).unwrap();
    let trace = sim.trace.as_mut().unwrap();
    let k = trace.len() / 2;
    trace[k].ies_energy += 1e-3;
    assert!(matches!(
        energy_ledger_check(&sim, &v),
        Err(Error::LedgerViolation { .. })
    ));
}
