//! CSV writers. Numbers use 9 significant digits, lines end in `\n`.

use std::io::Write;

use tdm_ies_core::EventRecord;

use crate::error::Result;
use crate::sweep::SweepCurve;

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e9)`.
pub fn fmt_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_sweep_csv<W: Write>(curve: &SweepCurve, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["axis_value".to_string()];
    if curve.ratio {
        header.push("q_ies_ratio".into());
    }
    header.extend(curve.evaluators.iter().map(|e| e.column().to_string()));
    header.extend(["regime", "k_l", "standby_total_s"].map(String::from));
    w.write_record(&header)?;

    let opt = |v: Option<f64>| v.map(fmt_g9).unwrap_or_default();
    for row in &curve.rows {
        let mut rec = vec![fmt_g9(row.axis_value)];
        if curve.ratio {
            rec.push(opt(row.ratio));
        }
        rec.extend(row.values.iter().map(|&v| fmt_g9(v)));
        rec.push(row.regime.unwrap_or_default().to_string());
        rec.push(row.k_l.map(|k| k.to_string()).unwrap_or_default());
        rec.push(opt(row.standby_total));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(trace: &[EventRecord], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "time_s",
        "receiver",
        "event",
        "ies_energy_j",
        "battery_energy_j",
    ])?;
    for ev in trace {
        w.write_record([
            format!("{:.9}", ev.time),
            ev.receiver.map(|i| i.to_string()).unwrap_or_default(),
            ev.kind.as_str().to_string(),
            fmt_g9(ev.ies_energy),
            fmt_g9(ev.battery_energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}
