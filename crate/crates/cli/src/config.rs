//! Config resolution: defaults, then a config file, then flags.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numeric(String),
    Inconclusive(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Inconclusive(_) => 3,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage-error",
            CliError::Validation(_) => "validation-failure",
            CliError::Numeric(_) => "numeric-failure",
            CliError::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Numeric(m) | CliError::Inconclusive(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.status(), self.message())
    }
}

impl From<alphadecay::Error> for CliError {
    fn from(e: alphadecay::Error) -> Self {
        use alphadecay::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) | E::DomainError(_) => CliError::Validation(msg),
            E::NumericFailure { .. } | E::BudgetExceeded { .. } | E::InvalidState(_) => CliError::Numeric(msg),
            E::Inconclusive(_) => CliError::Inconclusive(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Keys whose values may be given as a path to a JSON file.
pub const INPUT_KEYS: [&str; 2] = ["spec", "domain"];

/// Recursively overlays `over` onto `base`. Objects merge key by key;
/// anything else replaces.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Replaces file paths under the input keys with the parsed file contents.
/// Relative paths are taken relative to `base_dir`.
pub fn inline_inputs(cfg: &mut Value, base_dir: &Path) -> CliResult<()> {
    let Some(obj) = cfg.as_object_mut() else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };
    for key in INPUT_KEYS {
        if let Some(Value::String(p)) = obj.get(key) {
            let path = base_dir.join(p);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("cannot read {key} file {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{key} file {} is not JSON: {e}", path.display())))?;
            obj.insert(key.to_string(), v);
        }
    }
    Ok(())
}

/// Reads a config file: a JSON object keyed like the resolved config.
pub fn load_config_file(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not JSON: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    inline_inputs(&mut v, dir)?;
    Ok(v)
}

/// Builds a JSON object from (dotted key, value) pairs, skipping absent ones.
pub fn overlay(pairs: Vec<(&str, Option<Value>)>) -> Value {
    let mut root = Value::Object(Map::new());
    for (key, v) in pairs {
        let Some(v) = v else { continue };
        let mut slot = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for p in &parts[..parts.len() - 1] {
            slot = slot
                .as_object_mut()
                .expect("overlay nodes are objects")
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
        }
        slot.as_object_mut()
            .expect("overlay nodes are objects")
            .insert(parts[parts.len() - 1].to_string(), v);
    }
    root
}

/// Parses "a,b,c".
pub fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse number {t:?} in {s:?}")))
        })
        .collect()
}

/// Parses "x1,y1;x2,y2".
pub fn parse_points(s: &str) -> CliResult<Vec<Vec<f64>>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_vector).collect()
}

pub fn vector_value(s: &Option<String>) -> CliResult<Option<Value>> {
    s.as_deref().map(|s| parse_vector(s).map(|v| serde_json::json!(v))).transpose()
}

pub fn points_value(s: &Option<String>) -> CliResult<Option<Value>> {
    s.as_deref().map(|s| parse_points(s).map(|v| serde_json::json!(v))).transpose()
}

pub fn some<T: serde::Serialize>(v: &Option<T>) -> Option<Value> {
    v.as_ref().map(|x| serde_json::to_value(x).expect("flag values serialize"))
}
