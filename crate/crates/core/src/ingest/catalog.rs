use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IngestError;

const DEFAULT_CATALOG: &str = include_str!("../../data/exercises.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseCatalogEntry {
    pub exercise_id: String,
    pub display_name: String,
    pub cognitive_functions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExerciseCatalog {
    entries: BTreeMap<String, ExerciseCatalogEntry>,
}

impl ExerciseCatalog {
    /// The eight exercises of the remediation programme.
    pub fn builtin() -> Self {
        load_exercise_catalog(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn get(&self, id: &str) -> Result<&ExerciseCatalogEntry, IngestError> {
        self.entries
            .get(id)
            .ok_or_else(|| IngestError::NotFound(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExerciseCatalogEntry> {
        self.entries.values()
    }
}

/// Parses an `exercise_id,display_name,functions` CSV where functions are
/// `;`-separated.
pub fn load_exercise_catalog(text: &str) -> Result<ExerciseCatalog, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::Schema(format!("catalog is missing column `{name}`")))
    };
    let (id_col, name_col, fn_col) = (col("exercise_id")?, col("display_name")?, col("functions")?);
    let mut entries = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(IngestError::Schema("empty exercise_id".into()));
        }
        let cognitive_functions: Vec<String> = record
            .get(fn_col)
            .unwrap_or("")
            .split(';')
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .map(String::from)
            .collect();
        if cognitive_functions.is_empty() {
            return Err(IngestError::Schema(format!("exercise `{id}` lists no cognitive function")));
        }
        let entry = ExerciseCatalogEntry {
            exercise_id: id.clone(),
            display_name: record.get(name_col).unwrap_or("").trim().to_string(),
            cognitive_functions,
        };
        if entries.insert(id.clone(), entry).is_some() {
            return Err(IngestError::Schema(format!("duplicate exercise_id `{id}`")));
        }
    }
    Ok(ExerciseCatalog { entries })
}
