//! Loading `RunConfig` and synthetic specs from JSON.
//!
//! Precedence, lowest first: built-in defaults or the selected profile,
//! keys present in the config file, command-line flags.

use std::path::Path;

use pathograph_core::config::{Profile, RunConfig};
use pathograph_core::eval::{SweepParameter, SweepValue};
use pathograph_core::synth::SynthSpec;
use serde_json::Value;

use crate::error::{AppError, AppResult};

fn read_json(path: &Path, what: &str) -> AppResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn overlay(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => overlay(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Resolves defaults, profile, file and flag profile into a validated config.
pub fn resolve_run_config(file: Option<Value>, profile_flag: Option<Profile>) -> AppResult<RunConfig> {
    let file = file.unwrap_or_else(|| Value::Object(Default::default()));
    if !file.is_object() {
        return Err(AppError::Config("config file must hold a JSON object".into()));
    }
    let file_profile = match file.get("profile") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_str()
                .and_then(Profile::parse)
                .ok_or_else(|| AppError::Config(format!("unknown profile {v}")))?,
        ),
    };
    let profile = profile_flag.or(file_profile);
    let mut merged = serde_json::to_value(profile.map_or_else(RunConfig::default, Profile::config)).expect("plain data");
    overlay(&mut merged, file);
    if let Some(p) = profile {
        merged["profile"] = Value::String(p.name().into());
    }
    let config: RunConfig = serde_json::from_value(merged).map_err(|e| AppError::Config(e.to_string()))?;
    config.validate().map_err(|e| AppError::Config(e.to_string()))?;
    Ok(config)
}

pub fn load_run_config(path: Option<&Path>, profile_flag: Option<Profile>) -> AppResult<RunConfig> {
    let file = path.map(|p| read_json(p, "config")).transpose()?;
    resolve_run_config(file, profile_flag)
}

pub fn load_synth_spec(path: &Path) -> AppResult<SynthSpec> {
    let spec: SynthSpec =
        serde_json::from_value(read_json(path, "spec")?).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    spec.validate().map_err(|e| AppError::Config(e.to_string()))?;
    Ok(spec)
}

pub fn parse_parameter(name: &str) -> AppResult<SweepParameter> {
    SweepParameter::parse(name).ok_or_else(|| {
        AppError::Config(format!("unknown sweep parameter `{name}` (expected k, rho, communities or layers_neurons)"))
    })
}

fn parse_f64(s: &str) -> AppResult<f64> {
    s.trim().parse().map_err(|_| AppError::Config(format!("`{s}` is not a number")))
}

/// `a,b,c`, `start:stop:step` (inclusive) or, for layers_neurons, `LxN,...`.
pub fn parse_values(parameter: SweepParameter, text: &str) -> AppResult<Vec<SweepValue>> {
    if parameter == SweepParameter::LayersNeurons {
        return text
            .split(',')
            .map(|item| {
                let (l, n) = item
                    .trim()
                    .split_once('x')
                    .ok_or_else(|| AppError::Config(format!("`{item}` is not of the form LAYERSxNEURONS")))?;
                let count = |s: &str| s.trim().parse::<usize>().map_err(|_| AppError::Config(format!("`{item}` is not LxN")));
                Ok(SweepValue::LayersNeurons { layers: count(l)?, neurons: count(n)? })
            })
            .collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    let numbers = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, s) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if !(s > 0.0) || b < a {
                return Err(AppError::Config(format!("range `{text}` needs start <= stop and a positive step")));
            }
            let count = ((b - a) / s + 1e-9).floor() as usize + 1;
            (0..count).map(|i| ((a + i as f64 * s) * 1e12).round() / 1e12).collect()
        }
        [_] => text.split(',').filter(|p| !p.trim().is_empty()).map(parse_f64).collect::<AppResult<Vec<_>>>()?,
        _ => return Err(AppError::Config(format!("cannot parse values `{text}`"))),
    };
    if numbers.is_empty() {
        return Err(AppError::Config("no sweep values given".into()));
    }
    Ok(numbers.into_iter().map(SweepValue::Number).collect())
}
