use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a behavior dataset: raw column values keyed by column name.
///
/// Missing values are simply absent from `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub record_id: String,
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl BehaviorRecord {
    pub fn new(record_id: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            values: BTreeMap::new(),
            label: None,
        }
    }

    pub fn with(mut self, column: &str, value: impl Into<String>) -> Self {
        self.values.insert(column.to_string(), value.into());
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Raw value, treating blank strings as missing.
    pub fn get(&self, column: &str) -> Option<&str> {
        self.values
            .get(column)
            .map(String::as_str)
            .filter(|v| !v.trim().is_empty())
    }
}

/// Rejects duplicate ids and columns outside `allowed`.
pub fn validate_records<'a>(
    records: &[BehaviorRecord],
    allowed: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    let allowed: BTreeSet<&str> = allowed.into_iter().collect();
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.record_id.as_str()) {
            return Err(Error::SchemaMismatch(format!(
                "duplicate record id {}",
                r.record_id
            )));
        }
        if let Some(col) = r.values.keys().find(|c| !allowed.contains(c.as_str())) {
            return Err(Error::SchemaMismatch(format!(
                "record {} has column {col:?} outside the schema",
                r.record_id
            )));
        }
    }
    Ok(())
}

pub fn records_to_json(records: &[BehaviorRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn records_from_json(s: &str) -> Result<Vec<BehaviorRecord>> {
    Ok(serde_json::from_str(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_is_missing() {
        let r = BehaviorRecord::new("1").with("Vict Sex", "  ");
        assert_eq!(r.get("Vict Sex"), None);
        assert_eq!(r.get("AREA"), None);
    }

    #[test]
    fn duplicate_ids_and_unknown_columns_rejected() {
        let a = BehaviorRecord::new("1").with("AREA", "3");
        let b = BehaviorRecord::new("1").with("AREA", "4");
        assert!(validate_records(&[a.clone(), b], ["AREA"]).is_err());
        let c = BehaviorRecord::new("2").with("Bogus", "x");
        assert!(validate_records(&[a.clone(), c], ["AREA"]).is_err());
        assert!(validate_records(&[a], ["AREA"]).is_ok());
    }
}
