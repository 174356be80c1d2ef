//! Receiver and scenario descriptions, and their validation.
//!
//! All quantities are SI: watts, joules, seconds.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::profile::{soc_to_time_offset, ChargeProfile, DemandCurve};

/// Joules per watt-hour.
pub const JOULES_PER_WH: f64 = 3600.0;

/// Parameters shared by every receiver in a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    /// Battery demand in the constant-profile case (W).
    pub p_b: f64,
    /// Power received while coupled to the transmitter (W).
    pub p_r: f64,
    /// Battery capacity (J).
    pub q_c: f64,
    /// Intermediate energy storage capacity (J).
    pub q_ies: f64,
    /// Delay to switch the transmitter between receivers (s).
    pub t_d: f64,
}

impl ReceiverSpec {
    /// Parameter set used throughout the evaluation: 1 W demand, 4.2 W
    /// received, 1 Wh battery, 1 ms switching, with a 3.4 J IES.
    pub const fn reference() -> Self {
        Self {
            p_b: 1.0,
            p_r: 4.2,
            q_c: JOULES_PER_WH,
            q_ies: 3.4,
            t_d: 1e-3,
        }
    }

    pub fn validate(self) -> Result<Receiver> {
        let finite_positive = [
            ("p_b", self.p_b),
            ("p_r", self.p_r),
            ("q_c", self.q_c),
            ("q_ies", self.q_ies),
        ];
        for (name, v) in finite_positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ConstraintViolation(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.t_d.is_finite() && self.t_d >= 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "t_d must be non-negative, got {}",
                self.t_d
            )));
        }
        if self.p_b >= self.p_r {
            return Err(Error::ConstraintViolation(format!(
                "p_b ({}) must be below p_r ({}), otherwise the IES never fills",
                self.p_b, self.p_r
            )));
        }
        if self.q_ies >= self.q_c {
            return Err(Error::ConstraintViolation(format!(
                "q_ies ({}) must be below q_c ({})",
                self.q_ies, self.q_c
            )));
        }
        Ok(Receiver(self))
    }
}

/// A [`ReceiverSpec`] that has passed validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver(ReceiverSpec);

impl Receiver {
    pub fn spec(&self) -> &ReceiverSpec {
        &self.0
    }

    /// Same receiver with a different IES capacity.
    pub fn with_q_ies(&self, q_ies: f64) -> Result<Receiver> {
        ReceiverSpec { q_ies, ..self.0 }.validate()
    }

    /// IES charge time while coupled, `q_ies / (p_r - p_b)`.
    pub fn charge_phase(&self) -> f64 {
        self.0.q_ies / (self.0.p_r - self.0.p_b)
    }

    /// IES discharge time into the battery, `q_ies / p_b`.
    pub fn discharge_phase(&self) -> f64 {
        self.0.q_ies / self.0.p_b
    }
}

impl Deref for Receiver {
    type Target = ReceiverSpec;

    fn deref(&self) -> &ReceiverSpec {
        &self.0
    }
}

/// N identical receivers sharing one demand profile and initial state of charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub receiver: ReceiverSpec,
    pub n: usize,
    pub profile: ChargeProfile,
    pub initial_soc: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let receiver = ReceiverSpec::reference();
        Self {
            receiver,
            n: 3,
            profile: ChargeProfile::Constant {
                power: receiver.p_b,
            },
            initial_soc: 0.0,
        }
    }
}

impl ScenarioSpec {
    pub fn constant(receiver: ReceiverSpec, n: usize) -> Self {
        Self {
            receiver,
            n,
            profile: ChargeProfile::Constant {
                power: receiver.p_b,
            },
            initial_soc: 0.0,
        }
    }
}

/// A scenario that satisfies every parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    receiver: Receiver,
    n: usize,
    profile: ChargeProfile,
    initial_soc: f64,
    curve: DemandCurve,
}

/// Checks a scenario against the parameter constraints.
pub fn validate_spec(s: ScenarioSpec) -> Result<ValidatedScenario> {
    let receiver = s.receiver.validate()?;
    if s.n == 0 {
        return Err(Error::ConstraintViolation(
            "at least one receiver is required".into(),
        ));
    }
    if !(s.initial_soc >= 0.0 && s.initial_soc < 1.0) {
        return Err(Error::ConstraintViolation(format!(
            "initial_soc must lie in [0, 1), got {}",
            s.initial_soc
        )));
    }
    match s.profile {
        ChargeProfile::Constant { power } => {
            if (power - receiver.p_b).abs() > 1e-12 * receiver.p_b {
                return Err(Error::ConstraintViolation(format!(
                    "constant profile power {power} differs from p_b {}",
                    receiver.p_b
                )));
            }
        }
        ChargeProfile::Piecewise3 { scale } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::ConstraintViolation(format!(
                    "profile scale must be positive, got {scale}"
                )));
            }
        }
    }
    Ok(ValidatedScenario {
        receiver,
        n: s.n,
        profile: s.profile,
        initial_soc: s.initial_soc,
        curve: s.profile.demand_curve(receiver.q_c),
    })
}

impl ValidatedScenario {
    pub fn receiver(&self) -> &Receiver {
        &self.receiver
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile(&self) -> &ChargeProfile {
        &self.profile
    }

    pub fn initial_soc(&self) -> f64 {
        self.initial_soc
    }

    pub fn curve(&self) -> &DemandCurve {
        &self.curve
    }

    /// Energy a battery holds when full. For the piecewise profile this is
    /// the profile's own integral, not `q_c`.
    pub fn battery_capacity(&self) -> f64 {
        self.curve.total_energy()
    }

    /// Energy already stored at start-up.
    pub fn initial_energy(&self) -> f64 {
        self.initial_soc * self.battery_capacity()
    }

    /// Position on the profile's time axis at start-up.
    pub fn initial_offset(&self) -> f64 {
        soc_to_time_offset(&self.profile, self.initial_soc, self.receiver.q_c)
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            receiver: *self.receiver.spec(),
            n: self.n,
            profile: self.profile,
            initial_soc: self.initial_soc,
        }
    }
}
