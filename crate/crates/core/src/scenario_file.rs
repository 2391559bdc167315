//! Flat `key = value` scenario files. The format round-trips: `parse(emit(c))
//! == c` for every valid config, and parse errors carry the line number and
//! field.

use std::str::FromStr;

use crate::model::{
    AqmConfig, AqmKind, ConfigError, LoadPhase, Preset, ScenarioConfig, SimTime, SinusoidConfig,
    SqrtMode,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn bad(line: usize, msg: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Parse { line, msg: msg.into() }
}

/// Serialize a scenario to the flat file format.
pub fn emit(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("name", cfg.name.clone());
    kv("bandwidth_mbps", cfg.bandwidth_mbps.to_string());
    kv("rtt_ms", cfg.rtt_ms.to_string());
    kv("mtu_bytes", cfg.mtu_bytes.to_string());
    kv("duration_s", cfg.duration_s.to_string());
    kv("seed", cfg.seed.to_string());
    kv("aqm", cfg.aqm.kind.key().to_string());
    kv("target_delay_ms", cfg.aqm.target_delay.as_millis_f64().to_string());
    kv("interval_ms", cfg.aqm.interval.as_millis_f64().to_string());
    kv("alpha", cfg.aqm.alpha.to_string());
    kv("beta", cfg.aqm.beta.to_string());
    kv("coupling", cfg.aqm.coupling.to_string());
    kv(
        "sqrt_mode",
        match cfg.aqm.sqrt_mode {
            SqrtMode::Exact => "exact".into(),
            SqrtMode::LpmApprox => "lpm".into(),
        },
    );
    let phases = cfg
        .load_phases
        .iter()
        .map(|p| format!("{}:{}:{}", p.start_s, p.cubic_flows, p.prague_flows))
        .collect::<Vec<_>>()
        .join(",");
    kv("phases", phases);
    if let Some(cap) = cfg.queue_capacity_bytes {
        kv("queue_capacity_bytes", cap.to_string());
    }
    match cfg.starvation_guard {
        Some(n) => kv("starvation_guard", n.to_string()),
        None => kv("starvation_guard", "none".to_string()),
    }
    if let Some(s) = &cfg.sinusoid {
        kv(
            "sinusoid",
            format!("{}:{}:{}:{}", s.base_rate, s.amplitude, s.frequency_hz, s.phase_rad),
        );
    }
    out
}

/// Parse the flat file format back into a scenario.
pub fn parse(text: &str) -> Result<ScenarioConfig, ScenarioFileError> {
    // start from a preset shell so every field has a defined default
    let mut cfg = crate::model::preset_scenario(Preset::I);
    cfg.name = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(lineno, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let num = |v: &str| -> Result<u64, ScenarioFileError> {
            v.parse().map_err(|_| bad(lineno, format!("field `{key}`: not an integer: `{v}`")))
        };
        let real = |v: &str| -> Result<f64, ScenarioFileError> {
            v.parse().map_err(|_| bad(lineno, format!("field `{key}`: not a number: `{v}`")))
        };
        match key {
            "name" => cfg.name = value.to_string(),
            "bandwidth_mbps" => cfg.bandwidth_mbps = num(value)?,
            "rtt_ms" => cfg.rtt_ms = num(value)?,
            "mtu_bytes" => cfg.mtu_bytes = num(value)? as u32,
            "duration_s" => cfg.duration_s = num(value)?,
            "seed" => cfg.seed = num(value)?,
            "aqm" => {
                let kind = AqmKind::from_key(value)?;
                let mut aqm = AqmConfig::defaults(kind);
                // keep any parameters parsed before the aqm line
                aqm.target_delay = cfg.aqm.target_delay;
                aqm.coupling = cfg.aqm.coupling;
                cfg.aqm = aqm;
            }
            "target_delay_ms" => {
                cfg.aqm.target_delay = SimTime::from_secs_f64(real(value)? / 1e3)
            }
            "interval_ms" => cfg.aqm.interval = SimTime::from_secs_f64(real(value)? / 1e3),
            "alpha" => cfg.aqm.alpha = real(value)?,
            "beta" => cfg.aqm.beta = real(value)?,
            "coupling" => cfg.aqm.coupling = num(value)? as u32,
            "sqrt_mode" => {
                cfg.aqm.sqrt_mode = match value {
                    "exact" => SqrtMode::Exact,
                    "lpm" => SqrtMode::LpmApprox,
                    other => return Err(bad(lineno, format!("unknown sqrt_mode `{other}`"))),
                }
            }
            "phases" => {
                let mut phases = Vec::new();
                for part in value.split(',') {
                    let fields: Vec<&str> = part.trim().split(':').collect();
                    if fields.len() != 3 {
                        return Err(bad(lineno, format!("phase `{part}`: want start:cubic:prague")));
                    }
                    phases.push(LoadPhase {
                        start_s: num(fields[0])?,
                        cubic_flows: num(fields[1])? as u32,
                        prague_flows: num(fields[2])? as u32,
                    });
                }
                cfg.load_phases = phases;
            }
            "queue_capacity_bytes" => cfg.queue_capacity_bytes = Some(num(value)?),
            "starvation_guard" => {
                cfg.starvation_guard =
                    if value == "none" { None } else { Some(num(value)? as u32) };
            }
            "sinusoid" => {
                let fields: Vec<&str> = value.split(':').collect();
                if fields.len() != 4 {
                    return Err(bad(lineno, "sinusoid: want base:amplitude:freq:phase"));
                }
                cfg.sinusoid = Some(SinusoidConfig {
                    base_rate: real(fields[0])?,
                    amplitude: real(fields[1])?,
                    frequency_hz: real(fields[2])?,
                    phase_rad: real(fields[3])?,
                });
            }
            other => return Err(bad(lineno, format!("unknown field `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Resolve a scenario selector: a preset numeral or a file path.
pub fn load_selector(selector: &str) -> Result<ScenarioConfig, ScenarioFileError> {
    if let Ok(preset) = Preset::from_str(selector) {
        return Ok(crate::model::preset_scenario(preset));
    }
    let text = std::fs::read_to_string(selector).map_err(|e| {
        ScenarioFileError::Config(ConfigError::Invalid(format!(
            "`{selector}` is neither a preset numeral nor a readable file: {e}"
        )))
    })?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset_scenario, Preset};

    #[test]
    fn round_trip_identity() {
        for preset in [Preset::I, Preset::VII] {
            let mut cfg = preset_scenario(preset);
            cfg.aqm = AqmConfig::defaults(AqmKind::Codel);
            cfg.seed = 99;
            cfg.sinusoid = Some(SinusoidConfig {
                base_rate: 125.0,
                amplitude: 25.0,
                frequency_hz: 0.01,
                phase_rad: 0.0,
            });
            let text = emit(&cfg);
            let back = parse(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn parse_error_carries_line_and_field() {
        let text = "bandwidth_mbps = 120\nrtt_ms = banana\n";
        let err = parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("rtt_ms"), "{msg}");
    }

    #[test]
    fn unknown_aqm_lists_keys() {
        let err = parse("aqm = red\n").unwrap_err();
        assert!(err.to_string().contains("ired-delay"));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = preset_scenario(Preset::II);
        let text = format!("# experiment\n\n{}", emit(&cfg));
        assert_eq!(parse(&text).unwrap(), cfg);
    }
}
