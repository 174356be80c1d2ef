//! Flat `key=value` scenario files.
//!
//! Entries are separated by newlines or commas, `#` starts a comment.
//! Energies (`q_c`, `q_ies`) take an optional `J` or `Wh` suffix; a bare
//! number is joules. Missing keys keep the reference values.

use std::path::Path;

use tdm_ies_core::model::JOULES_PER_WH;
use tdm_ies_core::{validate_spec, ChargeProfile, ScenarioSpec};

use crate::error::{CliError, Result};

pub const KEYS: [&str; 9] = [
    "p_b_w",
    "p_r_w",
    "q_c",
    "q_ies",
    "t_d_s",
    "n",
    "profile",
    "profile_scale",
    "initial_soc",
];

pub fn load_config(path: &Path) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec = parse_config(&text)?;
    validate_spec(spec)?;
    Ok(spec)
}

/// Parses without validating the resulting scenario.
pub fn parse_config(text: &str) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::default();
    let mut profile_name: Option<String> = None;
    let mut scale: Option<(usize, f64)> = None;
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| CliError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        for entry in content.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{entry}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| err(format!("unknown key `{key}`")))?;
            if seen.contains(&key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key);
            let number = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(format!("`{key}`: not a number: `{v}`")))
            };
            match key {
                "p_b_w" => spec.receiver.p_b = number(value)?,
                "p_r_w" => spec.receiver.p_r = number(value)?,
                "q_c" => {
                    spec.receiver.q_c = energy(value).map_err(|m| err(format!("`{key}`: {m}")))?
                }
                "q_ies" => {
                    spec.receiver.q_ies = energy(value).map_err(|m| err(format!("`{key}`: {m}")))?
                }
                "t_d_s" => spec.receiver.t_d = number(value)?,
                "n" => {
                    spec.n = value
                        .parse()
                        .map_err(|_| err(format!("`n`: not a count: `{value}`")))?
                }
                "profile" => match value {
                    "constant" | "piecewise3" => profile_name = Some(value.to_string()),
                    _ => return Err(err(format!("unknown profile `{value}`"))),
                },
                "profile_scale" => scale = Some((line, number(value)?)),
                "initial_soc" => spec.initial_soc = number(value)?,
                _ => unreachable!(),
            }
        }
    }

    spec.profile = match profile_name.as_deref() {
        Some("piecewise3") => ChargeProfile::Piecewise3 {
            scale: scale.map_or(1.0, |s| s.1),
        },
        _ => {
            if let Some((line, _)) = scale {
                return Err(CliError::Parse {
                    line,
                    message: "`profile_scale` only applies to `profile=piecewise3`".into(),
                });
            }
            ChargeProfile::Constant {
                power: spec.receiver.p_b,
            }
        }
    };
    Ok(spec)
}

fn energy(value: &str) -> std::result::Result<f64, String> {
    let (digits, factor) = if let Some(v) = value.strip_suffix("Wh") {
        (v, JOULES_PER_WH)
    } else if let Some(v) = value.strip_suffix('J') {
        (v, 1.0)
    } else {
        (value, 1.0)
    };
    digits
        .trim()
        .parse::<f64>()
        .map(|x| x * factor)
        .map_err(|_| format!("not an energy: `{value}`"))
}

/// Canonical text form; `parse_config` reads it back to the same scenario.
pub fn emit_config(spec: &ScenarioSpec) -> String {
    let r = &spec.receiver;
    let mut out = format!(
        "p_b_w={}\np_r_w={}\nq_c={}J\nq_ies={}J\nt_d_s={}\nn={}\n",
        r.p_b, r.p_r, r.q_c, r.q_ies, r.t_d, spec.n
    );
    match spec.profile {
        ChargeProfile::Constant { .. } => out.push_str("profile=constant\n"),
        ChargeProfile::Piecewise3 { scale } => {
            out.push_str(&format!("profile=piecewise3\nprofile_scale={scale}\n"))
        }
    }
    out.push_str(&format!("initial_soc={}\n", spec.initial_soc));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdm_ies_core::Error;

    #[test]
    fn one_line_with_watt_hours() {
        let s = parse_config("p_b_w=1, p_r_w=4.2, q_c=1Wh, q_ies=3.4J, t_d_s=0.001, n=3").unwrap();
        assert_eq!(s.receiver.q_c, 3600.0);
        assert_eq!(s.receiver.q_ies, 3.4);
        assert!(validate_spec(s).is_ok());
    }

    #[test]
    fn empty_is_reference() {
        assert_eq!(parse_config("").unwrap(), ScenarioSpec::default());
        assert_eq!(
            parse_config("# nothing\n\n").unwrap(),
            ScenarioSpec::default()
        );
    }

    #[test]
    fn oversized_ies_is_a_constraint_violation() {
        let s = parse_config("q_c=1Wh\nq_ies=2Wh").unwrap();
        assert!(matches!(
            validate_spec(s),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_config("n=3\n\nfoo=1") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("n=three"),
            Err(CliError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("n=3,n=4"),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(
            parse_config("q_c=5kWh"),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(
            parse_config("profile=linear"),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(
            parse_config("profile_scale=2"),
            Err(CliError::Parse { .. })
        ));
        assert!(matches!(parse_config("n"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn suffixes_and_spacing() {
        let s = parse_config("  q_ies = 0.5 Wh  # half\nq_c=7200").unwrap();
        assert_eq!(s.receiver.q_ies, 1800.0);
        assert_eq!(s.receiver.q_c, 7200.0);
    }

    #[test]
    fn canonical_form_round_trips() {
        let specs = [
            ScenarioSpec::default(),
            parse_config("p_b_w=0.7\np_r_w=3.3\nq_c=123.456\nq_ies=0.1\nt_d_s=1e-5\nn=11").unwrap(),
            parse_config("profile=piecewise3\nprofile_scale=0.3\ninitial_soc=0.25\np_r_w=6")
                .unwrap(),
        ];
        for s in specs {
            let back = parse_config(&emit_config(&s)).unwrap();
            assert_eq!(back, s);
            assert_eq!(validate_spec(back).unwrap(), validate_spec(s).unwrap());
        }
    }
}
