use super::{EventKind, SimResult};
use crate::error::{Error, Result};
use crate::model::ValidatedScenario;

/// Residual above which a trace is rejected (J).
pub const LEDGER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerReport {
    pub max_residual: f64,
    pub records_checked: usize,
}

/// Checks, at every traced event, that the energy a receiver has drawn from
/// the transmitter (`p_r` times its coupled time) equals what its battery has
/// received plus what its IES holds.
pub fn energy_ledger_check(r: &SimResult, s: &ValidatedScenario) -> Result<LedgerReport> {
    let trace = r
        .trace
        .as_ref()
        .ok_or_else(|| Error::Unsupported("ledger check needs a traced run".into()))?;
    let p_r = s.receiver().p_r;
    let n = s.n();
    let mut drawn = vec![0.0; n];
    let mut since: Vec<Option<f64>> = vec![None; n];
    let mut report = LedgerReport {
        max_residual: 0.0,
        records_checked: 0,
    };
    for ev in trace {
        let Some(i) = ev.receiver else { continue };
        match ev.kind {
            EventKind::CoupleStart => since[i] = Some(ev.time),
            EventKind::Decouple => {
                if let Some(t0) = since[i].take() {
                    drawn[i] += p_r * (ev.time - t0);
                }
            }
            _ => {}
        }
        let open = since[i].map_or(0.0, |t0| p_r * (ev.time - t0));
        let residual = (drawn[i] + open - ev.battery_energy - ev.ies_energy).abs();
        report.records_checked += 1;
        if residual > report.max_residual {
            report.max_residual = residual;
        }
        if residual > LEDGER_TOLERANCE {
            return Err(Error::LedgerViolation {
                residual,
                time: ev.time,
                receiver: i,
            });
        }
    }
    Ok(report)
}
