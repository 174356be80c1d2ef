use std::cmp::Ordering;

use super::{time_limit, EventKind, EventRecord, FinalCycleRule, SimResult, GAP_EPS};
use crate::error::{Error, Result};
use crate::model::ValidatedScenario;
use crate::profile::{DemandCurve, Segment};

// Remaining battery need below this fraction of capacity counts as full.
const FULL_EPS: f64 = 1e-9;
// Relative slack when comparing demand with received power.
const POWER_EPS: f64 = 1e-12;

/// Candidate next events. The declaration order is the processing order
/// for events that fall on the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    BatteryFull,
    IesFull,
    IesEmpty,
    Decouple,
    SwitchDone,
    // Internal: profile breakpoint reached.
    Breakpoint,
    // Internal: demand fell back to the received power while starved.
    DeficitEnd,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    time: f64,
    kind: Pending,
    receiver: usize,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.receiver.cmp(&other.receiver))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Battery follows its profile; while coupled the IES absorbs the surplus
    /// (or covers a deficit).
    Tracking,
    /// Coupled with an empty IES and a demand above `p_r`.
    Starved,
    /// Decoupled, battery fed by the IES.
    Discharging,
    /// Decoupled with an empty IES.
    Standby,
    Done,
}

#[derive(Debug, Clone)]
struct Rx {
    ies: f64,
    energy: f64,
    tau: f64,
    seg: usize,
    coupled: bool,
    draining: bool,
    started: bool,
    done: bool,
    standby: f64,
    standby_since: Option<f64>,
    cycle_need: f64,
    cycle_drawn: f64,
    finish: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tx {
    Switching { target: usize, ready_at: f64 },
    Waiting { target: usize, idle: bool },
    Coupled { rx: usize, since: f64 },
    Finished,
}

struct Engine<'a> {
    curve: &'a DemandCurve,
    p_r: f64,
    q_ies: f64,
    t_d: f64,
    rule: FinalCycleRule,
    capacity: f64,
    initial_energy: f64,
    rx: Vec<Rx>,
    tx: Tx,
    now: f64,
    busy: f64,
    switch_count: usize,
    event_count: usize,
    trace: Option<Vec<EventRecord>>,
}

/// Smallest `x >= 0` solving `a2 x^2 + a1 x + a0 = 0`.
fn first_root(a2: f64, a1: f64, a0: f64) -> Option<f64> {
    let scale = a1.abs().max(a0.abs()).max(f64::MIN_POSITIVE);
    if a2.abs() <= 1e-15 * scale {
        if a1 == 0.0 {
            return None;
        }
        let x = -a0 / a1;
        return (x >= 0.0).then_some(x);
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    let mut best: Option<f64> = None;
    let mut consider = |x: f64| {
        if x.is_finite() && x >= 0.0 && best.is_none_or(|b| x < b) {
            best = Some(x);
        }
    };
    if q != 0.0 {
        consider(q / a2);
        consider(a0 / q);
    } else {
        consider((-a0 / a2).max(0.0).sqrt());
    }
    best
}

impl<'a> Engine<'a> {
    fn new(s: &'a ValidatedScenario, trace: bool, rule: FinalCycleRule) -> Self {
        let r = s.receiver();
        let curve = s.curve();
        let offset = s.initial_offset();
        let e0 = s.initial_energy();
        let rx = (0..s.n())
            .map(|_| Rx {
                ies: 0.0,
                energy: e0,
                tau: offset,
                seg: curve.segment_at(offset),
                coupled: false,
                started: false,
                done: false,
                standby: 0.0,
                standby_since: None,
                draining: false,
                cycle_need: 0.0,
                cycle_drawn: 0.0,
                finish: 0.0,
            })
            .collect();
        Self {
            curve,
            p_r: r.p_r,
            q_ies: r.q_ies,
            t_d: r.t_d,
            rule,
            capacity: s.battery_capacity(),
            initial_energy: e0,
            rx,
            // The first selection needs no switch.
            tx: Tx::Switching {
                target: 0,
                ready_at: 0.0,
            },
            now: 0.0,
            busy: 0.0,
            switch_count: 0,
            event_count: 0,
            trace: trace.then(Vec::new),
        }
    }

    fn seg(&self, i: usize) -> &Segment {
        self.curve.segment(self.rx[i].seg)
    }

    fn is_last_seg(&self, i: usize) -> bool {
        self.rx[i].seg + 1 == self.curve.segments().len()
    }

    fn mode(&self, i: usize) -> Mode {
        let r = &self.rx[i];
        if r.done {
            return Mode::Done;
        }
        if r.coupled {
            if r.ies > 0.0 {
                return Mode::Tracking;
            }
            let s = self.seg(i);
            let p = s.power(r.tau);
            let slack = POWER_EPS * self.p_r;
            if p < self.p_r - slack || (p <= self.p_r + slack && s.c1 <= 0.0) {
                Mode::Tracking
            } else {
                Mode::Starved
            }
        } else if r.draining {
            Mode::Discharging
        } else {
            Mode::Standby
        }
    }

    fn record(&mut self, kind: EventKind, receiver: Option<usize>) {
        self.event_count += 1;
        if let Some(trace) = self.trace.as_mut() {
            let (ies, battery) = receiver.map_or((0.0, 0.0), |i| {
                let r = &self.rx[i];
                (r.ies, r.energy - self.initial_energy)
            });
            trace.push(EventRecord {
                time: self.now,
                receiver,
                kind,
                ies_energy: ies,
                battery_energy: battery,
            });
        }
    }

    fn remaining_need(&self, i: usize) -> f64 {
        self.capacity - self.rx[i].energy
    }

    fn candidates(&self, i: usize, out: &mut Vec<Candidate>) {
        let r = &self.rx[i];
        let s = self.seg(i);
        let last = self.is_last_seg(i);
        let mut push = |x: f64, kind: Pending| {
            out.push(Candidate {
                time: self.now + x.max(0.0),
                kind,
                receiver: i,
            })
        };
        let seg_kind = if last {
            Pending::BatteryFull
        } else {
            Pending::Breakpoint
        };
        match self.mode(i) {
            Mode::Tracking => {
                push(s.end - r.tau, seg_kind);
                let p0 = s.power(r.tau);
                // ies(x) = ies + (p_r - p0) x - c1 x^2 / 2
                let (a2, a1) = (-0.5 * s.c1, self.p_r - p0);
                if r.ies >= self.q_ies {
                    push(0.0, Pending::IesFull);
                } else if let Some(x) = first_root(a2, a1, r.ies - self.q_ies) {
                    push(x, Pending::IesFull);
                }
                if r.ies > 0.0 {
                    if let Some(x) = first_root(a2, a1, r.ies) {
                        push(x, Pending::IesEmpty);
                    }
                }
                if self.rule == FinalCycleRule::EarlyRelease {
                    push((r.cycle_need - r.cycle_drawn) / self.p_r, Pending::Decouple);
                }
            }
            Mode::Starved => {
                let seg_energy =
                    self.curve.energy_at_segment(r.seg) + s.energy_between(s.start, s.end);
                push((seg_energy - r.energy) / self.p_r, seg_kind);
                if s.c1 < 0.0 {
                    let tau_eq = (self.p_r - s.c0) / s.c1;
                    if tau_eq > r.tau && tau_eq < s.end {
                        push(
                            s.energy_between(r.tau, tau_eq) / self.p_r,
                            Pending::DeficitEnd,
                        );
                    }
                }
                if self.rule == FinalCycleRule::EarlyRelease {
                    push((r.cycle_need - r.cycle_drawn) / self.p_r, Pending::Decouple);
                }
            }
            Mode::Discharging => {
                let to_end = s.end - r.tau;
                push(to_end, seg_kind);
                if r.ies <= 0.0 {
                    push(0.0, Pending::IesEmpty);
                } else if s.energy_between(r.tau, s.end) >= r.ies {
                    push(s.time_for_energy(r.tau, r.ies), Pending::IesEmpty);
                }
            }
            Mode::Standby | Mode::Done => {}
        }
    }

    fn advance(&mut self, x: f64) {
        if x <= 0.0 {
            return;
        }
        for i in 0..self.rx.len() {
            let mode = self.mode(i);
            let s = *self.seg(i);
            let p_r = self.p_r;
            let r = &mut self.rx[i];
            match mode {
                Mode::Tracking => {
                    let de = s.energy_between(r.tau, r.tau + x);
                    r.energy += de;
                    r.ies = (r.ies + p_r * x - de).max(0.0);
                    r.cycle_drawn += p_r * x;
                    r.tau += x;
                }
                Mode::Starved => {
                    let de = p_r * x;
                    r.tau += s.time_for_energy(r.tau, de);
                    r.energy += de;
                    r.cycle_drawn += de;
                }
                Mode::Discharging => {
                    let de = s.energy_between(r.tau, r.tau + x);
                    r.energy += de;
                    r.ies = (r.ies - de).max(0.0);
                    r.tau += x;
                }
                Mode::Standby | Mode::Done => {}
            }
        }
        self.now += x;
    }

    fn next_target(&self, from: usize) -> Option<usize> {
        let n = self.rx.len();
        (1..=n).map(|k| (from + k) % n).find(|&j| !self.rx[j].done)
    }

    fn couple(&mut self, i: usize) {
        let need = self.remaining_need(i) - self.rx[i].ies;
        let now = self.now;
        let r = &mut self.rx[i];
        if let Some(t0) = r.standby_since.take() {
            let gap = now - t0;
            if gap > GAP_EPS * now.max(1.0) {
                r.standby += gap;
            }
        }
        r.coupled = true;
        r.started = true;
        r.cycle_need = need;
        r.cycle_drawn = 0.0;
        self.tx = Tx::Coupled {
            rx: i,
            since: self.now,
        };
        self.switch_count += 1;
        self.record(EventKind::CoupleStart, Some(i));
    }

    fn decouple(&mut self, i: usize) {
        self.rx[i].coupled = false;
        self.rx[i].draining = !self.rx[i].done;
        if let Tx::Coupled { since, .. } = self.tx {
            self.busy += self.now - since;
        }
        self.record(EventKind::Decouple, Some(i));
        self.tx = match self.next_target(i) {
            None => Tx::Finished,
            Some(j) => Tx::Switching {
                target: j,
                // Staying on the same receiver needs no switch.
                ready_at: if j == i {
                    self.now
                } else {
                    self.now + self.t_d
                },
            },
        };
    }

    fn finish(&mut self, i: usize) {
        self.rx[i].done = true;
        self.rx[i].finish = self.now;
        self.record(EventKind::BatteryFull, Some(i));
        if self.rx[i].coupled {
            self.decouple(i);
        }
    }

    fn handle(&mut self, c: Candidate) {
        let i = c.receiver;
        match c.kind {
            Pending::BatteryFull => {
                let r = &mut self.rx[i];
                r.tau = self.curve.end_time();
                self.finish(i);
            }
            Pending::IesFull => {
                self.rx[i].ies = self.q_ies;
                self.record(EventKind::IesFull, Some(i));
                self.decouple(i);
            }
            Pending::IesEmpty => {
                self.rx[i].ies = 0.0;
                self.rx[i].draining = false;
                let full =
                    !self.rx[i].coupled && self.remaining_need(i) <= FULL_EPS * self.capacity;
                if full {
                    self.rx[i].done = true;
                    self.rx[i].finish = self.now;
                    self.record(EventKind::BatteryFull, Some(i));
                } else if !self.rx[i].coupled {
                    self.rx[i].standby_since = Some(self.now);
                }
                self.record(EventKind::IesEmpty, Some(i));
            }
            Pending::Decouple => self.decouple(i),
            Pending::SwitchDone => {
                if let Tx::Switching { target, .. } = self.tx {
                    self.record(EventKind::SwitchDone, Some(target));
                    if self.rx[target].ies <= 0.0 {
                        self.couple(target);
                    } else {
                        self.tx = Tx::Waiting { target, idle: true };
                        self.record(EventKind::TxIdleStart, Some(target));
                    }
                }
            }
            Pending::Breakpoint => {
                let r = &mut self.rx[i];
                r.tau = self.curve.segment(r.seg).end;
                r.seg += 1;
            }
            Pending::DeficitEnd => {}
        }
        self.poll_transmitter();
    }

    fn poll_transmitter(&mut self) {
        match self.tx {
            Tx::Switching { target, ready_at } if self.rx[target].done => {
                self.tx = match self.next_target(target) {
                    None => Tx::Finished,
                    Some(j) => Tx::Switching {
                        target: j,
                        ready_at,
                    },
                };
            }
            Tx::Waiting { target, idle } => {
                if self.rx[target].done {
                    if idle {
                        self.record(EventKind::TxIdleEnd, Some(target));
                    }
                    self.tx = match self.next_target(target) {
                        None => Tx::Finished,
                        Some(j) => Tx::Switching {
                            target: j,
                            ready_at: self.now,
                        },
                    };
                } else if self.rx[target].ies <= 0.0 {
                    if idle {
                        self.record(EventKind::TxIdleEnd, Some(target));
                    }
                    self.couple(target);
                }
            }
            _ => {}
        }
    }

    fn run(mut self, limit: f64) -> Result<SimResult> {
        let n = self.rx.len();
        let mut cands = Vec::with_capacity(4 * n + 1);
        let mut stalled = 0usize;
        while self.rx.iter().any(|r| !r.done) {
            cands.clear();
            for i in 0..n {
                self.candidates(i, &mut cands);
            }
            if let Tx::Switching { target, ready_at } = self.tx {
                cands.push(Candidate {
                    time: ready_at.max(self.now),
                    kind: Pending::SwitchDone,
                    receiver: target,
                });
            }
            let next = cands
                .iter()
                .copied()
                .min_by(|a, b| a.cmp_key(b))
                .ok_or_else(|| {
                    Error::NonTermination(format!(
                        "no pending events at t = {} with unfinished receivers",
                        self.now
                    ))
                })?;
            let dt = next.time - self.now;
            if dt > 0.0 {
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > 16 * n + 64 {
                    return Err(Error::NonTermination(format!(
                        "no progress at t = {}",
                        self.now
                    )));
                }
            }
            self.advance(dt);
            if self.now > limit {
                return Err(Error::NonTermination(format!(
                    "simulated time {} exceeds limit {limit}",
                    self.now
                )));
            }
            self.handle(next);
        }
        if let Tx::Coupled { since, .. } = self.tx {
            self.busy += self.now - since;
        }
        let per_receiver_finish: Vec<f64> = self.rx.iter().map(|r| r.finish).collect();
        let per_receiver_standby: Vec<f64> = self.rx.iter().map(|r| r.standby).collect();
        let t_oc = per_receiver_finish.iter().copied().fold(0.0, f64::max);
        Ok(SimResult {
            t_oc,
            total_standby: per_receiver_standby.iter().sum(),
            per_receiver_finish,
            per_receiver_standby,
            switch_count: self.switch_count,
            tx_busy_fraction: if t_oc > 0.0 { self.busy / t_oc } else { 0.0 },
            event_count: self.event_count,
            trace: self.trace,
        })
    }
}

/// Runs the round-robin protocol with exact event times.
///
/// The transmitter serves receivers in index order, skipping full ones. After
/// a receiver decouples it spends `t_d` switching, then couples the next
/// receiver as soon as that receiver's IES is empty. A coupled receiver
/// decouples when its IES is full or its battery is full.
pub fn run_event_sim(s: &ValidatedScenario, trace: bool) -> Result<SimResult> {
    run_event_sim_with(s, trace, FinalCycleRule::default())
}

/// [`run_event_sim`] with an explicit final-cycle release rule.
pub fn run_event_sim_with(
    s: &ValidatedScenario,
    trace: bool,
    rule: FinalCycleRule,
) -> Result<SimResult> {
    Engine::new(s, trace, rule).run(time_limit(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_spec, ReceiverSpec, ScenarioSpec};

    fn s1(t_d: f64, n: usize) -> ValidatedScenario {
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

    #[test]
    fn roots() {
        assert_eq!(first_root(0.0, 2.0, -4.0), Some(2.0));
        assert_eq!(first_root(0.0, 2.0, 4.0), None);
        let x = first_root(1.0, -3.0, 2.0).unwrap();
        assert!((x - 1.0).abs() < 1e-15);
        assert_eq!(first_root(1.0, 0.0, 1.0), None);
    }

    #[test]
    fn two_receivers_without_standby() {
        let r = run_event_sim(&s1(0.0, 2), true).unwrap();
        assert_eq!(r.t_oc, 103.125);
        assert_eq!(r.total_standby, 0.0);
        assert_eq!(r.per_receiver_finish, vec![100.0, 103.125]);
    }

    #[test]
    fn six_receivers_have_standby() {
        let r = run_event_sim(&s1(0.0, 6), false).unwrap();
        assert!((r.t_oc - 155.0).abs() <= 13.125, "{}", r.t_oc);
        assert!(r.total_standby > 0.0);
        assert!(r.trace.is_none());
    }

    #[test]
    fn single_receiver_is_battery_limited() {
        for (q_ies, t_d) in [(10.0, 0.0), (0.5, 0.0), (10.0, 25.0)] {
            let v = validate_spec(ScenarioSpec::constant(
                ReceiverSpec {
                    p_b: 1.0,
                    p_r: 4.2,
                    q_c: 100.0,
                    q_ies,
                    t_d,
                },
                1,
            ))
            .unwrap();
            let r = run_event_sim(&v, false).unwrap();
            assert!((r.t_oc - 100.0).abs() < 1e-12, "{}", r.t_oc);
            assert_eq!(r.total_standby, 0.0);
        }
    }

    #[test]
    fn reference_parameters_three_receivers() {
        let v = validate_spec(ScenarioSpec::default()).unwrap();
        let r = run_event_sim(&v, false).unwrap();
        let expected = 3600.0 + 2.0 * (1.0625 + 0.001);
        assert!((r.t_oc - expected).abs() <= 1e-9 * expected, "{}", r.t_oc);
        assert!((r.t_oc - 3602.13).abs() < 0.01);
    }

    #[test]
    fn couple_follows_switch() {
        let r = run_event_sim(&s1(0.5, 3), true).unwrap();
        let trace = r.trace.unwrap();
        let mut last_decouple: Option<(usize, f64)> = None;
        let mut last_switch = f64::NEG_INFINITY;
        for ev in &trace {
            match ev.kind {
                EventKind::SwitchDone => last_switch = ev.time,
                EventKind::Decouple => last_decouple = Some((ev.receiver.unwrap(), ev.time)),
                EventKind::CoupleStart => {
                    assert!(last_switch <= ev.time);
                    if let Some((j, t)) = last_decouple {
                        if j != ev.receiver.unwrap() {
                            assert!(ev.time >= t + 0.5 - 1e-12);
                            assert!(last_switch >= t + 0.5 - 1e-12);
                        }
                    }
                }
                _ => {}
            }
        }
    }
}
