//! Fan input files in TOML or JSON.
//!
//! ```toml
//! rank = 2
//! rays = [[1, 0], [0, 1], [-1, -1]]
//! max_cones = [[1, 2], [2, 3], [1, 3]]   # 1-based
//! nef_basis = [[1, 0, 0]]                # optional, divisor coefficients
//! ```

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::fan::FanData;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error in field \"{field}\": {detail}")]
    Schema { field: String, detail: String },
}

impl ParseError {
    fn schema(field: &str, detail: impl Into<String>) -> Self {
        ParseError::Schema { field: field.to_string(), detail: detail.into() }
    }

    /// The field a schema error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ParseError::Schema { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanFile {
    pub fan: FanData,
    pub nef_basis: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

pub fn parse_fan_file(path: &Path) -> Result<FanFile, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ParseError::Io { path: path.display().to_string(), source })?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Toml,
    };
    parse_fan_str(&text, format)
}

pub fn parse_fan_str(text: &str, format: Format) -> Result<FanFile, ParseError> {
    let value: Value = match format {
        Format::Json => serde_json::from_str(text)
            .map_err(|e| ParseError::Syntax(format!("line {}, column {}: {e}", e.line(), e.column())))?,
        Format::Toml => {
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ParseError::Syntax(e.to_string()))?;
            serde_json::to_value(table).map_err(|e| ParseError::Syntax(e.to_string()))?
        }
    };
    from_value(&value)
}

fn int_matrix(value: &Value, field: &str) -> Result<Vec<Vec<i64>>, ParseError> {
    let rows = value.as_array().ok_or_else(|| ParseError::schema(field, "expected an array of integer arrays"))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let row = row.as_array().ok_or_else(|| ParseError::schema(field, format!("entry {} is not an array", i + 1)))?;
            row.iter()
                .map(|x| x.as_i64().ok_or_else(|| ParseError::schema(field, format!("entry {} has a non-integer", i + 1))))
                .collect()
        })
        .collect()
}

fn from_value(value: &Value) -> Result<FanFile, ParseError> {
    let get = |field: &str| value.get(field).ok_or_else(|| ParseError::schema(field, "missing"));
    let rank = get("rank")?.as_u64().filter(|&r| r > 0).ok_or_else(|| ParseError::schema("rank", "expected a positive integer"))?
        as usize;
    let rays = int_matrix(get("rays")?, "rays")?;
    if rays.is_empty() {
        return Err(ParseError::schema("rays", "no rays given"));
    }
    if let Some(i) = rays.iter().position(|r| r.len() != rank) {
        return Err(ParseError::schema("rays", format!("ray {} does not have {rank} entries", i + 1)));
    }
    let cones = int_matrix(get("max_cones")?, "max_cones")?;
    let m = rays.len() as i64;
    let mut max_cones = Vec::with_capacity(cones.len());
    for (k, cone) in cones.iter().enumerate() {
        if cone.iter().any(|&i| i < 1 || i > m) {
            return Err(ParseError::schema("max_cones", format!("cone {} has an index outside 1..{m}", k + 1)));
        }
        max_cones.push(cone.iter().map(|&i| (i - 1) as usize).collect());
    }
    let nef_basis = match value.get("nef_basis") {
        None => None,
        Some(v) => {
            let basis = int_matrix(v, "nef_basis")?;
            if basis.iter().any(|row| row.len() != rays.len()) {
                return Err(ParseError::schema("nef_basis", format!("each class needs {m} divisor coefficients")));
            }
            Some(basis)
        }
    };
    Ok(FanFile { fan: FanData::new(rank, rays, max_cones), nef_basis })
}
