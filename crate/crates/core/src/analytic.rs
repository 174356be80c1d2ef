//! Closed-form charge times for the constant-demand case.
//!
//! A receiver cycle is a charge phase (coupled, the IES fills at
//! `p_r - p_b` while the battery draws `p_b`) followed by a discharge phase
//! (decoupled, the IES feeds the battery). With few receivers the transmitter
//! returns before any IES runs dry and the cycle length stays `a + b`; past
//! that point receivers sit idle ("standby") and the cycle stretches to
//! `n (a + t_d)`.

use crate::model::Receiver;
use crate::profile::ChargeProfile;

// Relative slack used when snapping floor() results and regime ties.
const TIE_EPS: f64 = 1e-12;

/// Phase lengths and cycle counts for one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDurations {
    /// IES charge phase (s).
    pub a: f64,
    /// IES discharge phase (s).
    pub b: f64,
    /// Full cycle, `a + b` (s).
    pub c: f64,
    /// Number of full cycles.
    pub k_l: u64,
    /// Battery-charging time left for the final partial cycle (s).
    pub c_prime: f64,
}

impl PhaseDurations {
    /// Full-cycle count and final-cycle time actually used by the charge-time
    /// formulas: when the battery is an exact multiple of a cycle's energy
    /// the last full cycle is the final one.
    pub fn effective_final(&self) -> (u64, f64) {
        if self.c_prime == 0.0 && self.k_l > 0 {
            (self.k_l - 1, self.c)
        } else {
            (self.k_l, self.c_prime)
        }
    }
}

/// Which final-cycle pattern applies in the standby regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FinalCase {
    /// Small remainder: the final cycles overlap without standby.
    A,
    /// Medium remainder: receivers switch every final charge phase.
    B,
    /// Remainder longer than a charge phase.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeReport {
    pub standby: bool,
    /// Set only in the standby regime.
    pub final_case: Option<FinalCase>,
    pub n_max: u64,
}

impl RegimeReport {
    pub fn label(&self) -> &'static str {
        match self.final_case {
            None => "no_standby",
            Some(FinalCase::A) => "standby_a",
            Some(FinalCase::B) => "standby_b",
            Some(FinalCase::C) => "standby_c",
        }
    }
}

/// Closed form that produced a charge time. The `*Ideal` variants are the
/// zero-delay specialisations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    NoStandbyIdeal,
    StandbyIdealA,
    StandbyIdealB,
    StandbyIdealC,
    NoStandby,
    StandbyA,
    StandbyB,
    StandbyC,
}

impl FormulaId {
    pub fn is_standby(&self) -> bool {
        !matches!(self, FormulaId::NoStandbyIdeal | FormulaId::NoStandby)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaId::NoStandbyIdeal => "no_standby_ideal",
            FormulaId::StandbyIdealA => "standby_ideal_a",
            FormulaId::StandbyIdealB => "standby_ideal_b",
            FormulaId::StandbyIdealC => "standby_ideal_c",
            FormulaId::NoStandby => "no_standby",
            FormulaId::StandbyA => "standby_a",
            FormulaId::StandbyB => "standby_b",
            FormulaId::StandbyC => "standby_c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TocBreakdown {
    pub t_oc: f64,
    pub regime: RegimeReport,
    pub formula_id: FormulaId,
    /// Named additive terms of `t_oc`.
    pub components: Vec<(&'static str, f64)>,
}

impl TocBreakdown {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|(k, _)| *k == name)
            .map(|&(_, v)| v)
    }
}

// floor(x), but x a hair below an integer counts as that integer.
fn snapped_floor(x: f64) -> u64 {
    let up = x.ceil();
    if up - x <= TIE_EPS * x.max(1.0) {
        up as u64
    } else {
        x.floor() as u64
    }
}

pub fn phase_durations(r: &Receiver) -> PhaseDurations {
    let a = r.charge_phase();
    let b = r.discharge_phase();
    let c = a + b;
    let battery_time = r.q_c / r.p_b;
    let k_l = snapped_floor(r.q_c / (r.p_b * c));
    let mut c_prime = (r.q_c - k_l as f64 * r.p_b * c) / r.p_b;
    if c_prime.abs() <= TIE_EPS * battery_time {
        c_prime = 0.0;
    }
    PhaseDurations {
        a,
        b,
        c,
        k_l,
        c_prime,
    }
}

/// Largest receiver count without standby at zero switching delay,
/// `floor((a + b) / a)`, which equals `floor(p_r / p_b)`.
pub fn n_max(r: &Receiver) -> u64 {
    let a = r.charge_phase();
    let b = r.discharge_phase();
    snapped_floor((a + b) / a)
}

fn has_standby(r: &Receiver, n: usize) -> bool {
    if n <= 1 {
        return false;
    }
    let a = r.charge_phase();
    let b = r.discharge_phase();
    let busy = (n - 1) as f64 * a + n as f64 * r.t_d;
    busy > b * (1.0 + TIE_EPS)
}

fn final_case(r: &Receiver, n: usize, ph: &PhaseDurations) -> FinalCase {
    let (_, c_prime) = ph.effective_final();
    let threshold = (ph.b - n as f64 * r.t_d) / (n - 1) as f64;
    if c_prime <= threshold {
        FinalCase::A
    } else if c_prime <= ph.a {
        FinalCase::B
    } else {
        FinalCase::C
    }
}

pub fn classify_regime(r: &Receiver, n: usize) -> RegimeReport {
    let standby = has_standby(r, n);
    let final_case = standby.then(|| final_case(r, n, &phase_durations(r)));
    RegimeReport {
        standby,
        final_case,
        n_max: n_max(r),
    }
}

/// No-standby charge time, `q_c/p_b + (n-1)(a + t_d)`, regardless of regime.
pub fn t_oc_no_standby(r: &Receiver, n: usize) -> TocBreakdown {
    let ph = phase_durations(r);
    let stagger = (n.saturating_sub(1)) as f64 * (ph.a + r.t_d);
    let full = ph.k_l as f64 * ph.c;
    TocBreakdown {
        t_oc: r.q_c / r.p_b + stagger,
        regime: classify_regime(r, n),
        formula_id: if r.t_d == 0.0 {
            FormulaId::NoStandbyIdeal
        } else {
            FormulaId::NoStandby
        },
        components: vec![
            ("full_cycles", full),
            ("final_cycle", ph.c_prime),
            ("stagger", stagger),
        ],
    }
}

/// Standby-regime charge time with the final-cycle pattern chosen by the
/// condition column, regardless of regime. Requires `n >= 2`.
pub fn t_oc_standby(r: &Receiver, n: usize) -> TocBreakdown {
    assert!(n >= 2, "standby formulas need at least two receivers");
    let ph = phase_durations(r);
    let (k_l, c_prime) = ph.effective_final();
    let nf = n as f64;
    let slot = ph.a + r.t_d;
    let full = k_l as f64 * nf * slot;
    let case = final_case(r, n, &ph);
    let zero_delay = r.t_d == 0.0;
    let (formula_id, stagger, final_cycle) = match case {
        FinalCase::A => (
            if zero_delay {
                FormulaId::StandbyIdealA
            } else {
                FormulaId::StandbyA
            },
            ph.b - r.t_d,
            c_prime,
        ),
        FinalCase::B => (
            if zero_delay {
                FormulaId::StandbyIdealB
            } else {
                FormulaId::StandbyB
            },
            (nf - 1.0) * r.t_d,
            nf * c_prime,
        ),
        FinalCase::C => (
            if zero_delay {
                FormulaId::StandbyIdealC
            } else {
                FormulaId::StandbyC
            },
            (nf - 1.0) * slot,
            c_prime,
        ),
    };
    TocBreakdown {
        t_oc: full + stagger + final_cycle,
        regime: classify_regime(r, n),
        formula_id,
        components: vec![
            ("full_cycles", full),
            ("final_cycle", final_cycle),
            ("stagger", stagger),
        ],
    }
}

/// Overall charge time of `n` identical receivers under constant demand.
pub fn t_oc_analytic(r: &Receiver, n: usize) -> TocBreakdown {
    if has_standby(r, n) {
        t_oc_standby(r, n)
    } else {
        t_oc_no_standby(r, n)
    }
}

/// Upper bound on the overall charge time.
///
/// Without standby: `q_c/p_b + c`. With standby:
/// `n (a + t_d) (q_c / q_ies + 1)`.
pub fn t_oc_upper_bound(r: &Receiver, n: usize) -> f64 {
    if has_standby(r, n) {
        standby_bound(r, n)
    } else {
        r.q_c / r.p_b + r.charge_phase() + r.discharge_phase()
    }
}

/// The standby-regime bound as a function of the receiver alone; this is the
/// objective the IES sizing minimises.
pub fn standby_bound(r: &Receiver, n: usize) -> f64 {
    n as f64 * (r.charge_phase() + r.t_d) * (r.q_c / r.q_ies + 1.0)
}

/// Sequential charging without an IES: every receiver in turn runs its whole
/// remaining profile, starting from initial state of charge `s0`.
pub fn conventional_t_oc(r: &Receiver, n: usize, profile: &ChargeProfile, s0: f64) -> f64 {
    let curve = profile.demand_curve(r.q_c);
    let offset = curve.time_at_energy(s0 * curve.total_energy());
    n as f64 * (curve.end_time() - offset)
}
