//! Machine-readable run summaries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::solver::TracePoint;

pub const SCHEMA_VERSION: &str = "circreg.run/1";

/// Summary of one command or experiment. Keys serialize in a fixed order,
/// so two runs with the same inputs differ only in `wall_time_ms`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub command: Vec<String>,
    pub params: Value,
    pub seed: Option<u64>,
    pub energy_trace: Vec<TracePoint>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Value>,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(command: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_owned(),
            command: command.into_iter().map(Into::into).collect(),
            params: Value::Object(Default::default()),
            seed: None,
            energy_trace: Vec::new(),
            metrics: BTreeMap::new(),
            tables: BTreeMap::new(),
            wall_time_ms: 0,
        }
    }

    /// Adds `key: value` to the parameter object.
    pub fn param(&mut self, key: &str, value: impl Serialize) -> Result<&mut Self> {
        let v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut self.params {
            map.insert(key.to_owned(), v);
        }
        Ok(self)
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_owned(), value);
        self
    }

    pub fn table(&mut self, key: &str, value: impl Serialize) -> Result<&mut Self> {
        self.tables.insert(key.to_owned(), serde_json::to_value(value)?);
        Ok(self)
    }

    /// Fails when a metric or trace value is not finite.
    pub fn validate(&self) -> Result<()> {
        if let Some((k, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteResult(format!("metric {k} = {v}")));
        }
        if let Some(t) = self.energy_trace.iter().find(|t| !t.energy.is_finite()) {
            return Err(Error::NonFiniteEnergy { step: t.step });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}
