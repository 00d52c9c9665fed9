//! Published figures the reproduction report is checked against.
//!
//! The built-in set is `reference/paper_values.csv`, columns
//! `table,row,quantity,value,unit`. Values are stored as printed and scaled
//! to SI on load.

use std::io::Read;

use crate::units::{EXA, GB, MICROSECOND, PB, TB, TERA};

pub const BUILTIN_CSV: &str = include_str!("../reference/paper_values.csv");

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("reference csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("reference row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("quantity `{0}` appears twice")]
    Duplicate(String),
    #[error("no reference value for `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    pub table: String,
    pub row: String,
    pub quantity: String,
    /// As printed, in `unit`.
    pub printed: f64,
    pub unit: String,
    /// Scaled to SI base units.
    pub value: f64,
}

impl ReferenceValue {
    pub fn citation(&self) -> String {
        format!("{}: {}", self.table, self.row)
    }
}

/// Multiplier from a printed unit to SI base units.
pub fn unit_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "count" | "fraction" => 1.0,
        "PB" | "PB/s" => PB,
        "TB" | "TB/s" => TB,
        "GB/s" => GB,
        "TF/s" => TERA,
        "EF/s" => EXA,
        "kW" => 1e3,
        "us" => MICROSECOND,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    values: Vec<ReferenceValue>,
}

impl ReferenceSet {
    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_CSV.as_bytes()).expect("built-in reference data parses")
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self, ReferenceError> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["table", "row", "quantity", "value", "unit"] {
            return Err(ReferenceError::Row {
                row: 0,
                reason: format!("unexpected header {:?}", headers),
            });
        }
        let mut values: Vec<ReferenceValue> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let field = |k: usize| rec.get(k).unwrap_or("").to_string();
            let unit = field(4);
            let printed: f64 = field(3).parse().map_err(|_| ReferenceError::Row {
                row,
                reason: format!("value `{}` is not a number", field(3)),
            })?;
            let scale = unit_scale(&unit).ok_or_else(|| ReferenceError::Row {
                row,
                reason: format!("unknown unit `{unit}`"),
            })?;
            let quantity = field(2);
            if values.iter().any(|v| v.quantity == quantity) {
                return Err(ReferenceError::Duplicate(quantity));
            }
            values.push(ReferenceValue {
                table: field(0),
                row: field(1),
                quantity,
                printed,
                unit,
                value: printed * scale,
            });
        }
        Ok(ReferenceSet { values })
    }

    pub fn get(&self, quantity: &str) -> Result<&ReferenceValue, ReferenceError> {
        self.values
            .iter()
            .find(|v| v.quantity == quantity)
            .ok_or_else(|| ReferenceError::Missing(quantity.to_string()))
    }

    pub fn values(&self) -> &[ReferenceValue] {
        &self.values
    }
}

impl Default for ReferenceSet {
    fn default() -> Self {
        ReferenceSet::builtin()
    }
}
