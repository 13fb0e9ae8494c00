//! JSON model documents: parsing with diagnostics, serialization and digests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregate::{Amount, ChoiceGroup, Method};
use crate::model::{validate_model, Component, MorphModel, OrdinalScale, ValidationReport};
use crate::multiset::{Metric, MultisetEstimate};
use crate::synthesis::Algorithm;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnapsackSpec {
    /// Components fixed before the knapsack step: component → pick.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kernel: BTreeMap<String, String>,
    pub groups: Vec<ChoiceGroup>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub budgets: Vec<Amount>,
}

/// Defaults for a run; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforce_condition2: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
}

impl RunOptions {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// A published value the run is compared against. Mismatches become
/// warnings; the computed value always wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Reference {
    Quality {
        node: String,
        solution: String,
        quality: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Median {
        node: String,
        solution: String,
        median: MultisetEstimate,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        deviation: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Knapsack {
        budget: Amount,
        selection: Vec<String>,
        profit: Amount,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub morph_schema: u32,
    pub scale: OrdinalScale,
    pub root: String,
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knapsack: Option<KnapsackSpec>,
    #[serde(default, skip_serializing_if = "RunOptions::is_empty")]
    pub options: RunOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<Reference>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ModelDocument {
    pub fn from_model(model: MorphModel) -> Self {
        Self {
            morph_schema: SCHEMA_VERSION,
            scale: model.scale,
            root: model.root,
            components: model.components,
            knapsack: None,
            options: RunOptions::default(),
            references: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn model(&self) -> MorphModel {
        MorphModel {
            scale: self.scale,
            root: self.root.clone(),
            components: self.components.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    /// SHA-256 of the compact serialization, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("documents always serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },

    #[error("schema error{}: {message}", at_line(*.line, *.column))]
    Schema { line: usize, column: usize, message: String },

    #[error("model failed validation:\n{0}")]
    Invalid(ValidationReport),
}

fn at_line(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}, column {column}")
    }
}

/// Parses a document without structural validation.
pub fn parse_document(text: &str) -> Result<ModelDocument, DocumentError> {
    if text.trim().is_empty() {
        return Err(DocumentError::Schema {
            line: 0,
            column: 0,
            message: "empty document".into(),
        });
    }
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data => DocumentError::Schema { line, column, message },
            _ => DocumentError::Malformed { line, column, message },
        }
    })?;
    if doc.morph_schema != SCHEMA_VERSION {
        return Err(DocumentError::Schema {
            line: 0,
            column: 0,
            message: format!("unsupported morph_schema {} (expected {SCHEMA_VERSION})", doc.morph_schema),
        });
    }
    Ok(doc)
}

/// Parses and validates a document.
pub fn parse_model(text: &str) -> Result<ModelDocument, DocumentError> {
    let doc = parse_document(text)?;
    let report = validate_document(&doc);
    if report.is_empty() {
        Ok(doc)
    } else {
        Err(DocumentError::Invalid(report))
    }
}

/// Structural checks of the model plus the knapsack section.
pub fn validate_document(doc: &ModelDocument) -> ValidationReport {
    let mut report = validate_model(&doc.model());
    if let Some(k) = &doc.knapsack {
        let mut extra = Vec::new();
        for c in k.kernel.keys().chain(k.groups.iter().map(|g| &g.component)) {
            if !doc.components.iter().any(|x| &x.id == c) {
                extra.push(("knapsack", format!("unknown component `{c}`")));
            }
        }
        for b in &k.budgets {
            if b.is_negative() {
                extra.push(("knapsack.budgets", format!("negative budget {b}")));
            }
        }
        for (loc, msg) in extra {
            report.violations.push(crate::model::Violation {
                location: loc.into(),
                message: msg,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_and_bare_documents_are_schema_errors() {
        assert!(matches!(parse_model(""), Err(DocumentError::Schema { .. })));
        assert!(matches!(parse_model("  \n"), Err(DocumentError::Schema { .. })));
        assert!(matches!(parse_model("{}"), Err(DocumentError::Schema { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_model("{\n  \"morph_schema\": 1,,\n}") {
            Err(DocumentError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(fixtures::ARKTICHESKOE_JSON).unwrap();
        v["colour"] = serde_json::json!("blue");
        assert!(matches!(parse_model(&v.to_string()), Err(DocumentError::Schema { .. })));
    }

    #[test]
    fn priority_zero_is_a_validation_diagnostic() {
        let mut doc = fixtures::arkticheskoe();
        doc.components.iter_mut().find(|c| c.id == "E").unwrap().das[0].priority = 0;
        match parse_model(&doc.to_json()) {
            Err(DocumentError::Invalid(r)) => {
                assert!(r.violations.iter().any(|v| v.location.contains("E") && v.message.contains("priority 0")))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn digest_round_trips() {
        for doc in [fixtures::arkticheskoe(), fixtures::kruzensternskoe(), fixtures::yamal()] {
            let again = parse_model(&doc.to_json()).unwrap();
            assert_eq!(again.digest(), doc.digest());
        }
    }
}
