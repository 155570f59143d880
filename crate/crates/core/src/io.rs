//! JSON and CSV documents.
//!
//! Bigfloats are written as decimal strings with enough digits to read
//! back the identical binary value at the table's precision.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientTable, EquationForm};
use crate::oracle::{symbol, LatticeDistribution};
use crate::params::{ModelParams, Truncation};
use crate::series::DensityGrid;
use crate::{Error, Result};

/// Default significant digits for bigfloat CSV columns.
pub const DEFAULT_CSV_DIGITS: usize = 30;

/// Serialized coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub params: ModelParams,
    pub trunc: Truncation,
    pub form: EquationForm,
    pub a00: String,
    /// `[n, m, a_nm]` for every `1 <= n <= N`, `0 <= m <= 2n`.
    pub entries: Vec<(usize, usize, String)>,
}

fn exact_decimal(f: &Float) -> String {
    f.to_string_radix(10, None)
}

fn parse_float(s: &str, prec: u32) -> Result<Float> {
    Float::parse(s)
        .map(|p| Float::with_val(prec, p))
        .map_err(|e| Error::Format(format!("bad decimal {s:?}: {e}")))
}

impl TableDocument {
    pub fn from_table(table: &CoefficientTable) -> Self {
        let entries = (1..=table.max_n())
            .flat_map(|n| {
                table
                    .row(n)
                    .iter()
                    .enumerate()
                    .map(move |(m, a)| (n, m, exact_decimal(a)))
            })
            .collect();
        Self {
            params: *table.params(),
            trunc: *table.truncation(),
            form: table.form(),
            a00: exact_decimal(table.a00()),
            entries,
        }
    }

    pub fn into_table(self) -> Result<CoefficientTable> {
        let prec = self.trunc.precision_bits;
        let n_max = self.trunc.max_n;
        let mut rows: Vec<Vec<Float>> = (0..=n_max)
            .map(|n| vec![Float::new(prec); 2 * n + 1])
            .collect();
        rows[0][0] = parse_float(&self.a00, prec)?;
        for (n, m, v) in &self.entries {
            let slot = rows
                .get_mut(*n)
                .and_then(|r| r.get_mut(*m))
                .filter(|_| *n >= 1)
                .ok_or_else(|| Error::Format(format!("entry ({n}, {m}) outside the table")))?;
            *slot = parse_float(v, prec)?;
        }
        CoefficientTable::from_parts(self.params, self.trunc, self.form, rows)
    }
}

pub fn table_to_json(table: &CoefficientTable) -> Result<String> {
    Ok(serde_json::to_string_pretty(&TableDocument::from_table(table))?)
}

pub fn table_from_json(json: &str) -> Result<CoefficientTable> {
    let doc: TableDocument = serde_json::from_str(json)?;
    doc.into_table()
}

fn finish(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// `x,density,max_monomial,final_over_max`, bigfloats to `digits`
/// significant digits.
pub fn grid_to_csv(grid: &DensityGrid, digits: usize) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["x", "density", "max_monomial", "final_over_max"])?;
    for p in &grid.points {
        wtr.write_record([
            p.x.to_string(),
            p.value.to_string_radix(10, Some(digits)),
            p.max_monomial.to_string_radix(10, Some(digits)),
            p.final_over_max.to_string_radix(10, Some(digits)),
        ])?;
    }
    finish(wtr)
}

/// `j,x,mass`.
pub fn lattice_to_csv(lattice: &LatticeDistribution) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["j", "x", "mass"])?;
    for ((j, x), mass) in lattice.js.iter().zip(&lattice.support).zip(&lattice.masses) {
        wtr.write_record([j.to_string(), format!("{x:e}"), format!("{mass:e}")])?;
    }
    finish(wtr)
}

/// `omega,re,im` at the given frequencies.
pub fn symbol_to_csv(params: &ModelParams, omegas: &[f64]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["omega", "re", "im"])?;
    for &w in omegas {
        let s = symbol(params, w);
        wtr.write_record([format!("{w:e}"), format!("{:e}", s.re), format!("{:e}", s.im)])?;
    }
    finish(wtr)
}
