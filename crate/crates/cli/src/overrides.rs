use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

use s2mamba::train::TrainConfig;

/// A malformed invocation, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Reads the JSON config (or the defaults) and applies `key=value`
/// overrides, where `key` is a dot path into the config such as
/// `model.tau`. Keys that the config does not have are rejected.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<TrainConfig> {
    let base: TrainConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    let mut value = serde_json::to_value(&base)?;
    for set in sets {
        apply(&mut value, set)?;
    }
    Ok(serde_json::from_value(value)?)
}

fn apply(root: &mut Value, set: &str) -> Result<()> {
    let (key, raw) = set
        .split_once('=')
        .ok_or_else(|| UsageError(format!("--set expects key=value, got {set:?}")))?;
    let mut slot = root;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| UsageError(format!("unknown config key {key:?}")))?;
    }
    if slot.is_object() {
        return Err(UsageError(format!("config key {key:?} is a section, not a value")).into());
    }
    // Anything that does not parse as JSON is taken as a string.
    *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_overrides_apply() {
        let c = load_config(
            None,
            &[
                "model.tau=0.2".into(),
                "epochs=3".into(),
                "data.dir=/tmp/x".into(),
                "model.readout=mean".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.model.tau, 0.2);
        assert_eq!(c.epochs, 3);
        assert_eq!(c.data.dir.as_deref(), Some(Path::new("/tmp/x")));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        for bad in ["model.tauu=1", "nope=1", "epochs", "model=1"] {
            let err = load_config(None, &[bad.into()]).unwrap_err();
            assert!(err.is::<UsageError>(), "{bad}");
        }
    }

    #[test]
    fn wrong_types_fail_to_deserialize() {
        assert!(load_config(None, &["epochs=many".into()]).is_err());
    }
}
