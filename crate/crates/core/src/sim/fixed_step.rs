use super::{time_limit, FinalCycleRule, SimResult, GAP_EPS};
use crate::error::{Error, Result};
use crate::model::ValidatedScenario;

#[derive(Debug, Clone, Copy)]
enum Tx {
    Switching { target: usize, ready_at: f64 },
    Waiting { target: usize },
    Coupled { rx: usize },
    Finished,
}

#[derive(Debug, Clone, Default)]
struct Rx {
    ies: f64,
    energy: f64,
    tau: f64,
    coupled: bool,
    started: bool,
    done: bool,
    standby: f64,
    waiting: f64,
    cycle_need: f64,
    cycle_drawn: f64,
    finish: f64,
}

/// Brute-force version of the protocol on a uniform time grid.
///
/// Each receiver's demanded power is frozen at the start of every step
/// (forward Euler). Within a step the transmitter's hand-overs and the
/// IES/battery crossings they depend on are placed at their linear crossing
/// times, so switch delays do not drift onto the grid.
pub fn run_fixed_step(s: &ValidatedScenario, dt: f64) -> Result<SimResult> {
    run_fixed_step_with(s, dt, FinalCycleRule::default())
}

/// [`run_fixed_step`] with an explicit final-cycle release rule.
pub fn run_fixed_step_with(
    s: &ValidatedScenario,
    dt: f64,
    rule: FinalCycleRule,
) -> Result<SimResult> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::ConstraintViolation(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let r = s.receiver();
    let (p_r, q_ies, t_d) = (r.p_r, r.q_ies, r.t_d);
    let curve = s.curve();
    let capacity = s.battery_capacity();
    let limit = time_limit(s);
    let n = s.n();
    let e_eps = 1e-12 * capacity.max(q_ies);
    let t_eps = 1e-12 * dt;

    let mut rx: Vec<Rx> = (0..n)
        .map(|_| Rx {
            energy: s.initial_energy(),
            tau: s.initial_offset(),
            ..Rx::default()
        })
        .collect();
    let mut tx = Tx::Switching {
        target: 0,
        ready_at: 0.0,
    };
    let mut busy = 0.0;
    let mut couplings = 0usize;
    let mut events = 0usize;
    let mut demand = vec![0.0; n];

    let next_open = |rx: &[Rx], from: usize| (1..=n).map(|k| (from + k) % n).find(|&j| !rx[j].done);

    let mut step: u64 = 0;
    while rx.iter().any(|x| !x.done) {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        if t0 > limit {
            return Err(Error::NonTermination(format!(
                "fixed-step run passed {limit} s"
            )));
        }
        for (d, x) in demand.iter_mut().zip(&rx) {
            *d = curve.power(x.tau);
        }

        let mut now = t0;
        let mut guard = 0;
        while now < t1 - t_eps {
            guard += 1;
            if guard > 16 * n + 64 {
                return Err(Error::NonTermination(format!(
                    "fixed-step run stalled at {now} s"
                )));
            }

            // Transmitter transitions at `now`.
            loop {
                match tx {
                    Tx::Switching { target, ready_at } => {
                        if rx[target].done {
                            tx = next_open(&rx, target).map_or(Tx::Finished, |j| Tx::Switching {
                                target: j,
                                ready_at,
                            });
                            continue;
                        }
                        if ready_at <= now + t_eps {
                            events += 1;
                            tx = Tx::Waiting { target };
                            continue;
                        }
                    }
                    Tx::Waiting { target } => {
                        if rx[target].done {
                            tx = next_open(&rx, target).map_or(Tx::Finished, |j| Tx::Switching {
                                target: j,
                                ready_at: now,
                            });
                            continue;
                        }
                        if rx[target].ies <= e_eps {
                            let x = &mut rx[target];
                            x.ies = 0.0;
                            if x.waiting > GAP_EPS * now.max(1.0) {
                                x.standby += x.waiting;
                            }
                            x.waiting = 0.0;
                            x.coupled = true;
                            x.started = true;
                            x.cycle_need = capacity - x.energy;
                            x.cycle_drawn = 0.0;
                            couplings += 1;
                            events += 1;
                            tx = Tx::Coupled { rx: target };
                            continue;
                        }
                    }
                    Tx::Coupled { rx: i } => {
                        let x = &rx[i];
                        let covered = rule == FinalCycleRule::EarlyRelease
                            && x.cycle_drawn >= x.cycle_need - e_eps;
                        if x.done || x.ies >= q_ies - e_eps || covered {
                            let x = &mut rx[i];
                            x.ies = x.ies.min(q_ies);
                            x.coupled = false;
                            events += 1;
                            tx = next_open(&rx, i).map_or(Tx::Finished, |j| Tx::Switching {
                                target: j,
                                ready_at: if j == i { now } else { now + t_d },
                            });
                            continue;
                        }
                    }
                    Tx::Finished => {}
                }
                break;
            }

            // Longest stretch with no crossing.
            let mut h = t1 - now;
            if let Tx::Switching { ready_at, .. } = tx {
                h = h.min(ready_at - now);
            }
            for (i, x) in rx.iter().enumerate().filter(|(_, x)| !x.done) {
                let d = demand[i];
                let need = capacity - x.energy;
                if x.coupled {
                    let to_battery = if d <= p_r || x.ies > 0.0 { d } else { p_r };
                    if to_battery > 0.0 {
                        h = h.min(need / to_battery);
                    }
                    let fill = p_r - to_battery;
                    if fill > 0.0 {
                        h = h.min((q_ies - x.ies) / fill);
                    } else if fill < 0.0 && x.ies > 0.0 {
                        h = h.min(x.ies / -fill);
                    }
                    if rule == FinalCycleRule::EarlyRelease {
                        h = h.min((x.cycle_need - x.cycle_drawn) / p_r);
                    }
                } else if x.ies > 0.0 && d > 0.0 {
                    h = h.min(x.ies.min(need) / d);
                }
            }
            let h = h.max(0.0);

            for (i, x) in rx.iter_mut().enumerate().filter(|(_, x)| !x.done) {
                let d = demand[i];
                let need = capacity - x.energy;
                if x.coupled {
                    busy += h;
                    x.cycle_drawn += p_r * h;
                    let give = if d <= p_r || x.ies > 0.0 {
                        d * h
                    } else {
                        p_r * h
                    };
                    let give = give.min(need);
                    x.ies = (x.ies + p_r * h - give).clamp(0.0, q_ies);
                    x.energy += give;
                    if d > 0.0 {
                        x.tau += give / d;
                    }
                } else if x.ies > 0.0 {
                    let give = (d * h).min(x.ies).min(need);
                    x.ies -= give;
                    x.energy += give;
                    if d > 0.0 {
                        x.tau += give / d;
                    }
                    if x.ies <= e_eps {
                        x.ies = 0.0;
                        events += 1;
                    }
                } else if x.started {
                    x.waiting += h;
                }
                if capacity - x.energy <= e_eps {
                    x.energy = capacity;
                    x.done = true;
                    x.finish = now + h;
                    events += 1;
                }
            }
            now += h;
        }
        step += 1;
    }

    let per_receiver_finish: Vec<f64> = rx.iter().map(|x| x.finish).collect();
    let per_receiver_standby: Vec<f64> = rx.iter().map(|x| x.standby).collect();
    let t_oc = per_receiver_finish.iter().copied().fold(0.0, f64::max);
    Ok(SimResult {
        t_oc,
        total_standby: per_receiver_standby.iter().sum(),
        per_receiver_finish,
        per_receiver_standby,
        switch_count: couplings,
        tx_busy_fraction: if t_oc > 0.0 { busy / t_oc } else { 0.0 },
        event_count: events,
        trace: None,
    })
}
