//! `rigidity-report-v1` documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::models::CoisotropicModel;
use crate::TOOL_VERSION;

pub const REPORT_SCHEMA: &str = "rigidity-report-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

/// A constant the harness takes as given rather than computing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConstant {
    pub value: f64,
    pub source: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub tool_version: String,
    pub experiment: String,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, Value>,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub witness: Option<Value>,
    pub failure: Option<String>,
    pub data: BTreeMap<String, Value>,
    pub external_constants: BTreeMap<String, ExternalConstant>,
    pub notes: Vec<String>,
    /// The only field that varies between identical runs.
    pub timestamp: Option<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, model: Option<&CoisotropicModel>, seed: Option<u64>) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            tool_version: TOOL_VERSION.into(),
            experiment: experiment.into(),
            model: model.map(|m| m.id()),
            seed,
            parameters: BTreeMap::new(),
            pass: true,
            checks: Vec::new(),
            witness: None,
            failure: None,
            data: BTreeMap::new(),
            external_constants: BTreeMap::new(),
            notes: Vec::new(),
            timestamp: None,
        }
    }

    pub fn param<V: Serialize>(&mut self, key: &str, v: V) -> &mut Self {
        self.parameters.insert(key.into(), to_value(v));
        self
    }

    pub fn datum<V: Serialize>(&mut self, key: &str, v: V) -> &mut Self {
        self.data.insert(key.into(), to_value(v));
        self
    }

    pub fn check<V: Serialize>(&mut self, name: &str, pass: bool, detail: V) -> &mut Self {
        self.pass &= pass;
        self.checks.push(CheckResult {
            name: name.into(),
            pass,
            detail: to_value(detail),
        });
        self
    }

    pub fn external(&mut self, key: &str, value: f64, description: &str) -> &mut Self {
        self.external_constants.insert(
            key.into(),
            ExternalConstant {
                value,
                source: "configured".into(),
                description: description.into(),
            },
        );
        self
    }

    pub fn note(&mut self, s: &str) -> &mut Self {
        self.notes.push(s.into());
        self
    }

    pub fn fail(&mut self, reason: &str) -> &mut Self {
        self.pass = false;
        self.failure = Some(reason.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation")
    }
}

fn to_value<V: Serialize>(v: V) -> Value {
    serde_json::to_value(v).expect("serialisable value")
}
