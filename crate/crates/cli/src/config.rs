use std::path::{Path, PathBuf};

use liapform::Tolerances;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::GlobalArgs;
use crate::error::{CliError, CliResult};
use crate::report::Format;

/// Top level of a `--config` document.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub tolerances: Option<Tolerances>,
    pub roots: Option<Value>,
    pub scan: Option<Value>,
    pub certify: Option<Value>,
    pub simulate: Option<Value>,
    pub pde: Option<Value>,
    pub weak: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))
    }

    pub fn section(&self, command: &str) -> Option<&Value> {
        match command {
            "roots" => self.roots.as_ref(),
            "scan" => self.scan.as_ref(),
            "certify" => self.certify.as_ref(),
            "simulate" => self.simulate.as_ref(),
            "pde" => self.pde.as_ref(),
            "weak" => self.weak.as_ref(),
            _ => None,
        }
    }
}

/// Overlays the flags that were given on the config section.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    section: Option<&Value>,
    command: &str,
) -> CliResult<T> {
    let mut merged = match section {
        None => serde_json::Map::new(),
        Some(Value::Object(map)) => map.clone(),
        Some(_) => {
            return Err(CliError::invalid(format!(
                "config section '{command}' must be an object"
            )))
        }
    };
    let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("argument structs serialize to objects")
    };
    for (key, value) in given {
        if !value.is_null() {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::invalid(format!("config section '{command}': {e}")))
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub output: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    pub tolerances: Tolerances,
}

pub fn resolve(global: &GlobalArgs, file: &ConfigFile) -> CliResult<Resolved> {
    let mut tol = file.tolerances.unwrap_or_default();
    let overrides = [
        (global.tol_symmetry, &mut tol.symmetry, "symmetry"),
        (global.tol_definiteness, &mut tol.definiteness, "definiteness"),
        (global.tol_root_residual, &mut tol.root_residual, "root-residual"),
        (global.tol_jacobi, &mut tol.jacobi, "jacobi"),
        (global.tol_rk4_stability, &mut tol.rk4_stability, "rk4-stability"),
    ];
    for (flag, slot, name) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
        if !(*slot > 0.0) || !slot.is_finite() {
            return Err(CliError::invalid(format!("tolerance {name} must be positive")));
        }
    }
    let jobs = global.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err(CliError::invalid("--jobs must be at least 1"));
    }
    Ok(Resolved {
        output: global.output.clone().or_else(|| file.output.clone()),
        format: global.format.or(file.format).unwrap_or_default(),
        jobs,
        tolerances: tol,
    })
}
