//! Flat `key = value` run configuration. CLI flags override file values;
//! unknown keys are rejected up front.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::cli::CliError;

/// Every accepted configuration key. Maneuver weights use the
/// `maneuver.<kind>` form and are validated against the known kinds.
const KNOWN_KEYS: &[&str] = &[
    // generate
    "scenario_count",
    "step_count",
    "seed",
    "noise_sigma",
    "speed_min",
    "speed_max",
    "agent_count_min",
    "agent_count_max",
    "map_elements_per_scene",
    "maneuver_window_start",
    "maneuver_window_end",
    // homogenize
    "in",
    "out",
    "profile",
    "cap_agents",
    "cap_map",
    "rejects",
    // predict
    "model",
    "degrees",
    // eval / delta
    "scenarios",
    "predictions",
    "k",
    "model_tag",
    "train_tag",
    "test_tag",
    "id",
    "ood",
    // complexity
    "t_start",
    "horizon",
    "masses",
    "grid_resolution",
    "low_speed_threshold",
    "kde",
    // report
    "runs",
    "reference",
    // global
    "jobs",
];

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            if !Self::is_known_key(&key) {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown configuration key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "{}:{}: duplicate configuration key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
        }
        Ok(RunConfig { values })
    }

    fn is_known_key(key: &str) -> bool {
        if KNOWN_KEYS.contains(&key) {
            return true;
        }
        key.strip_prefix("maneuver.")
            .is_some_and(|kind| kind.parse::<crate::ingest::ManeuverKind>().is_ok())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Config(format!("configuration key `{key}` = `{raw}`: {e}"))),
        }
    }

    /// All `maneuver.<kind>` weights present in the file.
    pub fn maneuver_weights(&self) -> Result<BTreeMap<crate::ingest::ManeuverKind, f64>, CliError> {
        let mut mix = BTreeMap::new();
        for (key, raw) in &self.values {
            if let Some(kind) = key.strip_prefix("maneuver.") {
                let kind = kind
                    .parse::<crate::ingest::ManeuverKind>()
                    .map_err(CliError::Config)?;
                let weight: f64 = raw.parse().map_err(|e| {
                    CliError::Config(format!("configuration key `{key}` = `{raw}`: {e}"))
                })?;
                mix.insert(kind, weight);
            }
        }
        Ok(mix)
    }
}

/// Flag value if given, else config value, else default.
pub fn resolve<T>(flag: Option<T>, config: &RunConfig, key: &str, default: T) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(config.get(key)?.unwrap_or(default))
}

/// Flag value if given, else config value, else None.
pub fn resolve_opt<T>(flag: Option<T>, config: &RunConfig, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(v) = flag {
        return Ok(Some(v));
    }
    config.get(key)
}

/// Flag value if given, else config value, else an error naming the flag.
pub fn require<T>(flag: Option<T>, config: &RunConfig, key: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    resolve_opt(flag, config, key)?.ok_or_else(|| {
        CliError::Config(format!(
            "missing required option --{}",
            key.replace('_', "-")
        ))
    })
}
