#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdm_ies_core::{validate_spec, ReceiverSpec, ScenarioSpec, ValidatedScenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random constant-profile scenario with 2..60 full cycles per battery.
pub fn random_scenario(rng: &mut ChaCha8Rng, max_n: usize) -> ValidatedScenario {
    let p_b = rng.gen_range(0.5..2.0);
    let p_r = p_b * rng.gen_range(1.05..6.0);
    let q_c = rng.gen_range(50.0..500.0);
    let cycles = rng.gen_range(2.0..60.0);
    let q_ies = q_c * (p_r - p_b) / (p_r * cycles);
    let a = q_ies / (p_r - p_b);
    let t_d = if rng.gen_bool(0.3) {
        0.0
    } else {
        rng.gen_range(0.0..0.2 * a)
    };
    let n = rng.gen_range(1..=max_n);
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

pub fn s1(t_d: f64, n: usize) -> ValidatedScenario {
    validate_spec(ScenarioSpec::constant(
        ReceiverSpec {
            p_b: 1.0,
            p_r: 4.2,
            q_c: 100.0,
            q_ies: 10.0,
            t_d,
        },
        n,
    ))
    .unwrap()
}
