//! One-axis parameter sweeps.

use rayon::prelude::*;
use tdm_ies_core::optimizer::{default_grid, log_grid};
use tdm_ies_core::{
    classify_regime, conventional_t_oc, phase_durations, run_event_sim, t_oc_analytic,
    t_oc_upper_bound, validate_spec, ChargeProfile, Error, ScenarioSpec,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "q_ies")]
    QIes,
    #[value(name = "n")]
    N,
    #[value(name = "p_r")]
    PR,
    #[value(name = "initial_soc")]
    InitialSoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvaluatorKind {
    Analytic,
    Bound,
    Sim,
    Conventional,
}

impl EvaluatorKind {
    pub fn column(self) -> &'static str {
        match self {
            EvaluatorKind::Analytic => "t_oc_analytic_s",
            EvaluatorKind::Bound => "t_oc_bound_s",
            EvaluatorKind::Sim => "t_oc_sim_s",
            EvaluatorKind::Conventional => "t_oc_conventional_s",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        log: bool,
    },
}

impl Values {
    pub fn expand(&self) -> Result<Vec<f64>> {
        let v = match *self {
            Values::List(ref v) => v.clone(),
            Values::Range {
                min,
                max,
                count,
                log,
            } => {
                if count == 0 {
                    return Err(CliError::Usage("--count must be positive".into()));
                }
                if log {
                    if min.is_nan() || min <= 0.0 {
                        return Err(CliError::Usage("log spacing needs --min > 0".into()));
                    }
                    log_grid(min, max, count)
                } else if count == 1 {
                    vec![min]
                } else {
                    let step = (max - min) / (count - 1) as f64;
                    (0..count)
                        .map(|i| {
                            if i + 1 == count {
                                max
                            } else {
                                min + step * i as f64
                            }
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(CliError::Usage("sweep has no values".into()));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage(
                "sweep values must be finite and strictly increasing".into(),
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub axis: Axis,
    /// `None` picks the axis default.
    pub values: Option<Values>,
    /// Values of a `q_ies` sweep are fractions of `q_c`.
    pub ratio: bool,
    pub evaluators: Vec<EvaluatorKind>,
    pub base: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub ratio: Option<f64>,
    /// One entry per requested evaluator, in request order.
    pub values: Vec<f64>,
    pub regime: Option<&'static str>,
    pub k_l: Option<u64>,
    pub standby_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub axis: Axis,
    pub ratio: bool,
    pub evaluators: Vec<EvaluatorKind>,
    pub rows: Vec<SweepRow>,
}

impl SweepCurve {
    pub fn column(&self, e: EvaluatorKind) -> Option<Vec<f64>> {
        let i = self.evaluators.iter().position(|&x| x == e)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.axis_value).collect()
    }
}

pub fn default_values(axis: Axis, base: &ScenarioSpec) -> Vec<f64> {
    match axis {
        Axis::QIes => default_grid(base.receiver.q_c),
        Axis::N => (1..=8).map(f64::from).collect(),
        Axis::PR => vec![4.2, 6.0, 8.0],
        Axis::InitialSoc => (0..=6).map(|i| f64::from(i) / 10.0).collect(),
    }
}

pub fn default_evaluators(profile: &ChargeProfile) -> Vec<EvaluatorKind> {
    if profile.is_constant() {
        vec![
            EvaluatorKind::Analytic,
            EvaluatorKind::Bound,
            EvaluatorKind::Sim,
        ]
    } else {
        vec![EvaluatorKind::Sim, EvaluatorKind::Conventional]
    }
}

fn point(base: &ScenarioSpec, axis: Axis, x: f64) -> Result<ScenarioSpec> {
    let mut s = *base;
    match axis {
        Axis::QIes => s.receiver.q_ies = x,
        Axis::N => {
            if x < 1.0 || x.fract() != 0.0 {
                return Err(CliError::Usage(format!(
                    "receiver count {x} is not a positive integer"
                )));
            }
            s.n = x as usize;
        }
        Axis::PR => s.receiver.p_r = x,
        Axis::InitialSoc => s.initial_soc = x,
    }
    Ok(s)
}

pub fn run_sweep(req: &SweepRequest) -> Result<SweepCurve> {
    if req.ratio && req.axis != Axis::QIes {
        return Err(CliError::Usage(
            "--ratio only applies to the q_ies axis".into(),
        ));
    }
    if req.evaluators.is_empty() {
        return Err(CliError::Usage("no evaluators requested".into()));
    }
    let raw = match &req.values {
        Some(v) => v.expand()?,
        None if req.ratio => default_values(req.axis, &req.base)
            .into_iter()
            .map(|q| q / req.base.receiver.q_c)
            .collect(),
        None => default_values(req.axis, &req.base),
    };
    let q_c = req.base.receiver.q_c;

    let rows = raw
        .par_iter()
        .map(|&x| {
            let (axis_value, ratio) = if req.ratio {
                (x * q_c, Some(x))
            } else {
                (x, None)
            };
            let v = validate_spec(point(&req.base, req.axis, axis_value)?)?;
            let closed_form_ok = v.profile().is_constant() && v.initial_soc() == 0.0;
            let r = v.receiver();
            let mut standby_total = None;
            let values = req
                .evaluators
                .iter()
                .map(|e| {
                    Ok(match e {
                        EvaluatorKind::Analytic | EvaluatorKind::Bound if !closed_form_ok => {
                            return Err(Error::Unsupported(
                                "closed forms need a constant profile starting from empty".into(),
                            )
                            .into())
                        }
                        EvaluatorKind::Analytic => t_oc_analytic(r, v.n()).t_oc,
                        EvaluatorKind::Bound => t_oc_upper_bound(r, v.n()),
                        EvaluatorKind::Sim => {
                            let sim = run_event_sim(&v, false)?;
                            standby_total = Some(sim.total_standby);
                            sim.t_oc
                        }
                        EvaluatorKind::Conventional => {
                            conventional_t_oc(r, v.n(), v.profile(), v.initial_soc())
                        }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                axis_value,
                ratio,
                values,
                regime: closed_form_ok.then(|| classify_regime(r, v.n()).label()),
                k_l: closed_form_ok.then(|| phase_durations(r).k_l),
                standby_total,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepCurve {
        axis: req.axis,
        ratio: req.ratio,
        evaluators: req.evaluators.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Capacity-ratio sweep for 3 receivers.
    QiesN3,
    QiesN5,
    QiesN7,
    /// Capacity-ratio sweep for 2 receivers.
    QiesN2,
    QiesN4,
    QiesN6,
    /// Receiver count 1..=8.
    Receivers,
    /// Practical profile, receiver power 4.2, 6 and 8 W.
    PracticalPr,
    /// Practical profile, initial state of charge 0 to 0.6.
    PracticalSoc,
}

impl Preset {
    /// Fills the request for this preset on top of `base`.
    pub fn request(self, base: ScenarioSpec) -> SweepRequest {
        use EvaluatorKind::*;
        let qies = |n: usize| SweepRequest {
            axis: Axis::QIes,
            values: None,
            ratio: true,
            evaluators: vec![Analytic, Bound],
            base: ScenarioSpec { n, ..base },
        };
        let practical = ScenarioSpec {
            profile: ChargeProfile::Piecewise3 { scale: 1.0 },
            ..base
        };
        match self {
            Preset::QiesN2 => qies(2),
            Preset::QiesN3 => qies(3),
            Preset::QiesN4 => qies(4),
            Preset::QiesN5 => qies(5),
            Preset::QiesN6 => qies(6),
            Preset::QiesN7 => qies(7),
            Preset::Receivers => SweepRequest {
                axis: Axis::N,
                values: None,
                ratio: false,
                evaluators: vec![Analytic, Bound, Sim, Conventional],
                base,
            },
            Preset::PracticalPr => SweepRequest {
                axis: Axis::PR,
                values: None,
                ratio: false,
                evaluators: vec![Sim, Conventional],
                base: practical,
            },
            Preset::PracticalSoc => SweepRequest {
                axis: Axis::InitialSoc,
                values: None,
                ratio: false,
                evaluators: vec![Sim, Conventional],
                base: practical,
            },
        }
    }
}
