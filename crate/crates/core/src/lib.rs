//! Charge-time analysis for time-division multi-device wireless charging
//! where every receiver buffers energy in an intermediate storage (IES).
//!
//! * [`model`] and [`profile`]: receiver parameters, scenarios, demand curves.
//! * [`analytic`]: closed-form phase durations, regimes, charge times, bounds.
//! * [`sim`]: event-driven protocol simulator, fixed-step oracle, energy ledger.
//! * [`optimizer`]: IES sizing against the bound and the exact charge time.

pub mod analytic;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod profile;
pub mod sim;

pub use analytic::{
    classify_regime, conventional_t_oc, n_max, phase_durations, t_oc_analytic, t_oc_upper_bound,
    FinalCase, FormulaId, PhaseDurations, RegimeReport, TocBreakdown,
};
pub use error::{Error, Result};
pub use model::{validate_spec, Receiver, ReceiverSpec, ScenarioSpec, ValidatedScenario};
pub use optimizer::{
    grid_search_qies, minimize_bound, zigzag_shape, CurvePoint, Evaluator, OptimizationResult,
    ZigZag,
};
pub use profile::{profile_cumulative, profile_power, soc_to_time_offset, ChargeProfile};
pub use sim::{
    energy_ledger_check, run_event_sim, run_event_sim_with, run_fixed_step, run_fixed_step_with,
    EventKind, EventRecord, FinalCycleRule, LedgerReport, SimResult,
};
