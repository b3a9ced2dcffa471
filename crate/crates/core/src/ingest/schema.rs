use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::transform::FieldTransform;
use crate::error::{Error, Result};
use crate::record::BehaviorRecord;
use crate::space::AttributeSpace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// No node is emitted for a missing value.
    #[default]
    Skip,
    /// A `<missing>` token is emitted instead.
    Placeholder,
}

pub const MISSING_TOKEN: &str = "<missing>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(flatten)]
    pub transform: FieldTransform,
}

/// Dataset layout: which raw columns exist and how attribute fields derive
/// from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub version: u32,
    /// Column holding the record id; row numbers are used when absent.
    #[serde(default)]
    pub id_column: Option<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    /// Raw columns carried on records without becoming attributes
    /// (e.g. transaction amounts used for loss accounting).
    #[serde(default)]
    pub passthrough: Vec<String>,
    pub fields: Vec<FieldSpec>,
}

/// Attribute tokens of one record, in field order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tokenized {
    pub tokens: Vec<(usize, String)>,
    pub negative_interval: bool,
}

pub const BUILTIN_SCHEMAS: &[&str] = &["crime", "crime-vis", "fraud", "zhihu"];

impl DatasetSchema {
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "crime" => include_str!("../../configs/crime.schema.toml"),
            "crime-vis" => include_str!("../../configs/crime-vis.schema.toml"),
            "fraud" => include_str!("../../configs/fraud.schema.toml"),
            "zhihu" => include_str!("../../configs/zhihu.schema.toml"),
            other => {
                return Err(Error::NotFound(format!(
                    "schema {other:?} (built-ins: {})",
                    BUILTIN_SCHEMAS.join(", ")
                )))
            }
        };
        Self::from_toml(text)
    }

    /// A built-in name or a path to a TOML schema file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUILTIN_SCHEMAS.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        let text = std::fs::read_to_string(name_or_path).map_err(|e| Error::io(name_or_path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for f in &self.fields {
            if !names.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate field {}", f.name)));
            }
            if let Some(label) = &self.label_column {
                if f.transform.columns().contains(&label.as_str()) {
                    return Err(Error::SchemaMismatch(format!(
                        "field {} reads the label column {label}",
                        f.name
                    )));
                }
            }
        }
        if self.fields.is_empty() {
            return Err(Error::SchemaMismatch("schema has no fields".into()));
        }
        Ok(())
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn field_id(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    /// Every raw column a CSV header must contain, deduplicated, in
    /// first-use order.
    pub fn columns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut cols: Vec<&str> = Vec::new();
        if let Some(id) = &self.id_column {
            cols.push(id);
        }
        for f in &self.fields {
            cols.extend(f.transform.columns());
        }
        cols.extend(self.passthrough.iter().map(String::as_str));
        if let Some(l) = &self.label_column {
            cols.push(l);
        }
        for c in cols {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn empty_space(&self) -> AttributeSpace {
        AttributeSpace::new(self.field_names())
    }

    pub fn tokenize(&self, record: &BehaviorRecord) -> Result<Tokenized> {
        let mut tokens = Vec::with_capacity(self.fields.len());
        let mut negative_interval = false;
        for (i, f) in self.fields.iter().enumerate() {
            let applied = f
                .transform
                .apply(|c| record.get(c).map(str::to_string))
                .map_err(|e| Error::Parse(format!("field {}: {e}", f.name)))?;
            negative_interval |= applied.negative_interval;
            match (applied.token, f.missing) {
                (Some(t), _) => tokens.push((i, t)),
                (None, MissingPolicy::Placeholder) => tokens.push((i, MISSING_TOKEN.to_string())),
                (None, MissingPolicy::Skip) => {}
            }
        }
        Ok(Tokenized {
            tokens,
            negative_interval,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in BUILTIN_SCHEMAS {
            let s = DatasetSchema::builtin(name).unwrap();
            assert_eq!(&s.name, name);
        }
    }

    #[test]
    fn crime_has_the_nineteen_fields() {
        let s = DatasetSchema::builtin("crime").unwrap();
        let expected = [
            "AREA",
            "Rpt Dist No",
            "Part 1-2",
            "Vict Age",
            "Vict Sex",
            "Vict Descent",
            "Premis Cd",
            "Weapon Used Cd",
            "Status",
            "Cross Street",
            "Month_Rptd",
            "Day_Rptd",
            "Month_OCC",
            "Day_OCC",
            "Date Difference",
            "Hour",
            "Minute",
            "Year_OCC",
            "Year_Rptd",
        ];
        assert_eq!(s.field_names(), expected);
        assert!(!s.columns().is_empty());
        assert_eq!(s.label_column.as_deref(), Some("Crm Cd"));
    }

    #[test]
    fn visualization_subset_has_ten_fields() {
        let s = DatasetSchema::builtin("crime-vis").unwrap();
        assert_eq!(s.fields.len(), 10);
    }

    #[test]
    fn label_cannot_be_an_attribute() {
        let text = r#"
            name = "bad"
            version = 1
            label_column = "y"
            [[fields]]
            name = "y"
            kind = "identity"
            column = "y"
        "#;
        assert!(DatasetSchema::from_toml(text).is_err());
    }

    #[test]
    fn missing_policy() {
        let text = r#"
            name = "t"
            version = 1
            [[fields]]
            name = "a"
            kind = "identity"
            column = "a"
            [[fields]]
            name = "b"
            kind = "identity"
            column = "b"
            missing = "placeholder"
        "#;
        let s = DatasetSchema::from_toml(text).unwrap();
        let r = BehaviorRecord::new("1");
        let t = s.tokenize(&r).unwrap();
        assert_eq!(t.tokens, vec![(1, MISSING_TOKEN.to_string())]);
    }
}
