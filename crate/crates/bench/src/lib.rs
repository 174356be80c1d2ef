//! Fixed scenarios shared by the benchmarks.

use tdm_ies_core::{validate_spec, ChargeProfile, ReceiverSpec, ScenarioSpec, ValidatedScenario};

/// Reference parameters with `n` receivers on the constant profile.
pub fn reference(n: usize) -> ValidatedScenario {
    validate_spec(ScenarioSpec {
        n,
        ..ScenarioSpec::default()
    })
    .expect("reference scenario is valid")
}

/// Small battery with a large buffer, deep in the standby regime.
pub fn small_standby(n: usize) -> ValidatedScenario {
    validate_spec(ScenarioSpec::constant(
        ReceiverSpec {
            p_b: 1.0,
            p_r: 4.2,
            q_c: 100.0,
            q_ies: 10.0,
            t_d: 0.1,
        },
        n,
    ))
    .expect("valid")
}

/// Practical profile with reference parameters.
pub fn practical(n: usize, p_r: f64) -> ValidatedScenario {
    let mut s = ScenarioSpec {
        n,
        profile: ChargeProfile::Piecewise3 { scale: 1.0 },
        ..ScenarioSpec::default()
    };
    s.receiver.p_r = p_r;
    validate_spec(s).expect("valid")
}
