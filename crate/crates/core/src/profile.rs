//! Battery charger demand profiles.
//!
//! A profile maps "charging time" (the time a battery would need to reach a
//! given state of charge when fed at exactly its demand) to requested power.
//! Everything downstream works on a [`DemandCurve`], which is the profile
//! restricted to its own domain and cut into linear segments so that energy
//! integrals and their inverses are available in closed form.

/// Breakpoints of the three-piece practical charger profile, in seconds.
pub const PIECEWISE3_BREAKS: [f64; 4] = [0.0, 2400.0, 3600.0, 7200.0];

// p(t) = scale * (c0 + c1 * t) on each piece.
const PIECEWISE3_COEFFS: [(f64, f64); 3] = [
    (3.0, 1.0 / 2000.0),
    (231.0 / 20.0, -49.0 / 16000.0),
    (3.0 / 4.0, -1.0 / 16000.0),
];

/// Power demand of a battery charger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargeProfile {
    /// Constant demand in watts.
    Constant { power: f64 },
    /// Three linear pieces over [0, 7200] s, multiplied by a dimensionless `scale`.
    Piecewise3 { scale: f64 },
}

impl ChargeProfile {
    pub fn is_constant(&self) -> bool {
        matches!(self, ChargeProfile::Constant { .. })
    }

    /// Demand curve for a battery of capacity `q_c` joules.
    ///
    /// The constant profile ends when `q_c` has been delivered. The
    /// piecewise profile defines its own capacity and ignores `q_c`.
    pub fn demand_curve(&self, q_c: f64) -> DemandCurve {
        match *self {
            ChargeProfile::Constant { power } => DemandCurve::new(vec![Segment {
                start: 0.0,
                end: q_c / power,
                c0: power,
                c1: 0.0,
            }]),
            ChargeProfile::Piecewise3 { scale } => DemandCurve::new(
                PIECEWISE3_COEFFS
                    .iter()
                    .enumerate()
                    .map(|(i, &(c0, c1))| Segment {
                        start: PIECEWISE3_BREAKS[i],
                        end: PIECEWISE3_BREAKS[i + 1],
                        c0: scale * c0,
                        c1: scale * c1,
                    })
                    .collect(),
            ),
        }
    }
}

/// Requested power at charging time `t` (seconds, `t >= 0`).
///
/// The constant profile is defined for all `t`; the piecewise profile is zero
/// past its last breakpoint.
pub fn profile_power(profile: &ChargeProfile, t: f64) -> f64 {
    match *profile {
        ChargeProfile::Constant { power } => power,
        ChargeProfile::Piecewise3 { scale } => {
            if t > PIECEWISE3_BREAKS[3] {
                return 0.0;
            }
            let i = piece_index(t);
            let (c0, c1) = PIECEWISE3_COEFFS[i];
            scale * (c0 + c1 * t)
        }
    }
}

/// Energy requested over `[0, t]`, in joules.
pub fn profile_cumulative(profile: &ChargeProfile, t: f64) -> f64 {
    match *profile {
        ChargeProfile::Constant { power } => power * t,
        ChargeProfile::Piecewise3 { .. } => profile.demand_curve(0.0).cumulative(t),
    }
}

/// Charging time at which a battery holding `s0` of its full energy sits on
/// the profile. `q_c` is only used by the constant profile.
pub fn soc_to_time_offset(profile: &ChargeProfile, s0: f64, q_c: f64) -> f64 {
    let curve = profile.demand_curve(q_c);
    curve.time_at_energy(s0 * curve.total_energy())
}

// Pieces are closed on the right: (0, 2400], (2400, 3600], (3600, 7200].
fn piece_index(t: f64) -> usize {
    if t <= PIECEWISE3_BREAKS[1] {
        0
    } else if t <= PIECEWISE3_BREAKS[2] {
        1
    } else {
        2
    }
}

/// One linear piece `p(t) = c0 + c1 t` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub c0: f64,
    pub c1: f64,
}

impl Segment {
    #[inline]
    pub fn power(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t
    }

    /// Integral of the piece over `[t0, t1]`.
    #[inline]
    pub fn energy_between(&self, t0: f64, t1: f64) -> f64 {
        let dt = t1 - t0;
        dt * (self.c0 + 0.5 * self.c1 * (t0 + t1))
    }

    /// Smallest `x >= 0` with `energy_between(t0, t0 + x) == e`, assuming the
    /// piece stays positive on the interval.
    pub fn time_for_energy(&self, t0: f64, e: f64) -> f64 {
        let p0 = self.power(t0);
        // 0.5 c1 x^2 + p0 x - e = 0
        if self.c1 == 0.0 {
            return e / p0;
        }
        let disc = (p0 * p0 + 2.0 * self.c1 * e).max(0.0);
        // Stable form of (-p0 + sqrt(disc)) / c1.
        2.0 * e / (p0 + disc.sqrt())
    }
}

/// A demand profile restricted to its domain `[0, end_time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandCurve {
    segments: Vec<Segment>,
    // Cumulative energy at each segment start, plus the total at the end.
    energy_at: Vec<f64>,
}

impl DemandCurve {
    fn new(segments: Vec<Segment>) -> Self {
        let mut energy_at = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        energy_at.push(acc);
        for s in &segments {
            acc += s.energy_between(s.start, s.end);
            energy_at.push(acc);
        }
        Self {
            segments,
            energy_at,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &Segment {
        &self.segments[i]
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn total_energy(&self) -> f64 {
        *self.energy_at.last().unwrap_or(&0.0)
    }

    /// Cumulative energy at the start of segment `i`.
    pub fn energy_at_segment(&self, i: usize) -> f64 {
        self.energy_at[i]
    }

    /// Index of the segment that continues from time `t`. A time sitting
    /// exactly on a breakpoint belongs to the following segment.
    pub fn segment_at(&self, t: f64) -> usize {
        let last = self.segments.len() - 1;
        self.segments[..last]
            .iter()
            .position(|s| t < s.end)
            .unwrap_or(last)
    }

    pub fn power(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.end_time() {
            return 0.0;
        }
        self.segments[self.segment_at(t)].power(t)
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.end_time());
        let i = self.segment_at(t);
        let s = &self.segments[i];
        self.energy_at[i] + s.energy_between(s.start, t)
    }

    /// Inverse of [`cumulative`](Self::cumulative), solved per piece in closed form.
    pub fn time_at_energy(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        if e >= self.total_energy() {
            return self.end_time();
        }
        let i = self.energy_at[1..]
            .iter()
            .position(|&acc| e < acc)
            .unwrap_or(self.segments.len() - 1);
        let s = &self.segments[i];
        (s.start + s.time_for_energy(s.start, e - self.energy_at[i])).min(s.end)
    }
}
