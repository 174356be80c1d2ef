//! Protocol simulators.
//!
//! [`run_event_sim`] advances the round-robin protocol from event to event
//! with closed-form crossing times. [`run_fixed_step`] runs the same protocol
//! on a uniform grid and exists only to cross-check the event engine.
//! [`energy_ledger_check`] audits a recorded trace for energy conservation.

mod engine;
mod fixed_step;
mod ledger;

pub use engine::{run_event_sim, run_event_sim_with};
pub use fixed_step::{run_fixed_step, run_fixed_step_with};
pub use ledger::{energy_ledger_check, LedgerReport};

use crate::analytic::conventional_t_oc;
use crate::model::ValidatedScenario;

// Standby gaps shorter than this fraction of the clock are rounding noise.
pub(crate) const GAP_EPS: f64 = 1e-12;

/// When a coupled receiver hands the transmitter back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalCycleRule {
    /// Stay coupled until the IES or the battery is full.
    #[default]
    HoldUntilFull,
    /// Also release as soon as the energy drawn this cycle covers the
    /// battery's remaining need, leaving the IES holding exactly that need.
    EarlyRelease,
}

/// Kinds of recorded protocol events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    CoupleStart,
    /// A receiver released the transmitter.
    Decouple,
    IesFull,
    IesEmpty,
    BatteryFull,
    SwitchDone,
    TxIdleStart,
    TxIdleEnd,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::CoupleStart => "couple_start",
            EventKind::Decouple => "decouple",
            EventKind::IesFull => "ies_full",
            EventKind::IesEmpty => "ies_empty",
            EventKind::BatteryFull => "battery_full",
            EventKind::SwitchDone => "switch_done",
            EventKind::TxIdleStart => "tx_idle_start",
            EventKind::TxIdleEnd => "tx_idle_end",
        }
    }
}

/// One trace row. Energies are those of `receiver` at `time`; the battery
/// figure counts energy delivered since start-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub receiver: Option<usize>,
    pub kind: EventKind,
    pub ies_energy: f64,
    pub battery_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Time the last battery became full.
    pub t_oc: f64,
    pub per_receiver_finish: Vec<f64>,
    pub per_receiver_standby: Vec<f64>,
    pub total_standby: f64,
    /// Number of couplings.
    pub switch_count: usize,
    /// Fraction of `[0, t_oc]` during which some receiver was coupled.
    pub tx_busy_fraction: f64,
    /// Number of recorded events, whether or not the trace was kept.
    pub event_count: usize,
    pub trace: Option<Vec<EventRecord>>,
}

/// Simulated time past which a run is declared stuck.
pub(crate) fn time_limit(s: &ValidatedScenario) -> f64 {
    let r = s.receiver();
    let conventional = conventional_t_oc(r, s.n(), s.profile(), s.initial_soc());
    // When the profile asks for more than p_r the transmitter itself is the
    // bottleneck and the conventional time is no longer an upper scale.
    let remaining = s.battery_capacity() - s.initial_energy();
    let transmitter_bound = s.n() as f64 * remaining / r.p_r + s.n() as f64 * r.t_d;
    10.0 * conventional.max(transmitter_bound)
}

/// Fraction of `[0, until]` during which some receiver was coupled,
/// reconstructed from a trace.
pub fn tx_busy_fraction_until(trace: &[EventRecord], until: f64) -> f64 {
    if until <= 0.0 {
        return 0.0;
    }
    let mut busy = 0.0;
    let mut since: Option<f64> = None;
    for ev in trace {
        if ev.time > until {
            break;
        }
        match ev.kind {
            EventKind::CoupleStart => since = Some(ev.time),
            EventKind::Decouple => {
                if let Some(s) = since.take() {
                    busy += ev.time - s;
                }
            }
            _ => {}
        }
    }
    if let Some(s) = since {
        busy += until - s;
    }
    busy / until
}
