//! External factor tables.
//!
//! Line format: `<label> <index> <factor> <factor> ... [C<digits>]...`,
//! whitespace separated, `#` starts a comment. `C<digits>` marks a composite
//! cofactor of that many decimal digits with no known factor. Labels `F`,
//! `L` and `M` (Fibonacci, Lucas, Mersenne) are checked against the
//! sequence value; other labels are accepted as given.

use std::collections::BTreeMap;
use std::io::BufRead;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::sequences;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactorEntry {
    pub factors: Vec<BigUint>,
    /// Decimal lengths of composite cofactors with no known factor.
    pub composite_digits: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactorTable {
    pub label: String,
    pub entries: BTreeMap<u64, FactorEntry>,
}

impl FactorTable {
    pub fn get(&self, index: u64) -> Option<&FactorEntry> {
        self.entries.get(&index)
    }
}

/// Tables keyed by sequence label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactorTables {
    pub tables: BTreeMap<String, FactorTable>,
}

impl FactorTables {
    pub fn lookup(&self, label: &str, index: u64) -> Option<&FactorEntry> {
        self.tables.get(label).and_then(|t| t.get(index))
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Merge another set of tables; later entries replace earlier ones.
    pub fn extend(&mut self, other: FactorTables) {
        for (label, table) in other.tables {
            self.tables
                .entry(label.clone())
                .or_insert_with(|| FactorTable {
                    label,
                    entries: BTreeMap::new(),
                })
                .entries
                .extend(table.entries);
        }
    }
}

/// Value of a reconstructible sequence at `index`.
pub fn sequence_value(label: &str, index: u64) -> Option<BigUint> {
    match label {
        "F" => Some(sequences::fibonacci(index)),
        "L" => Some(sequences::lucas(index)),
        "M" => Some(sequences::mersenne(index)),
        _ => None,
    }
}

fn decimal_digits(n: &BigUint) -> u32 {
    n.to_str_radix(10).len() as u32
}

fn check_entry(label: &str, index: u64, entry: &FactorEntry, value: &BigUint) -> Result<()> {
    let integrity = |message: String| Error::Integrity {
        label: label.to_string(),
        index,
        message,
    };
    let product = entry.factors.iter().fold(BigUint::one(), |acc, f| acc * f);
    if entry.composite_digits.is_empty() {
        if product != *value {
            return Err(integrity(format!(
                "product of factors is {product}, sequence value is {value}"
            )));
        }
        return Ok(());
    }
    let (quotient, remainder) = value.div_rem(&product);
    if !remainder.is_zero() {
        return Err(integrity(format!("factors do not divide the sequence value {value}")));
    }
    // A product of c composites with d_1..d_c digits has between
    // Σd − (c−1) and Σd digits.
    let digits = decimal_digits(&quotient);
    let total: u32 = entry.composite_digits.iter().sum();
    let slack = entry.composite_digits.len() as u32 - 1;
    if digits > total || digits + slack < total {
        return Err(integrity(format!(
            "remaining cofactor has {digits} digits, table declares {total}"
        )));
    }
    Ok(())
}

/// Parses and integrity-checks factor-table lines.
pub fn ingest_factor_table<R: BufRead>(reader: R) -> Result<FactorTables> {
    let mut out = FactorTables::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let label = fields.next().unwrap_or_default().to_string();
        let index: u64 = fields
            .next()
            .ok_or_else(|| Error::Parse {
                line: lineno,
                message: "missing index".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                message: "index is not a non-negative integer".into(),
            })?;
        let mut entry = FactorEntry::default();
        for tok in fields {
            if let Some(d) = tok.strip_prefix('C') {
                let digits: u32 = d.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad composite marker `{tok}`"),
                })?;
                if digits == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "composite marker with zero digits".into(),
                    });
                }
                entry.composite_digits.push(digits);
            } else {
                let f: BigUint = tok.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad factor `{tok}`"),
                })?;
                if f.is_zero() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "zero factor".into(),
                    });
                }
                entry.factors.push(f);
            }
        }
        if let Some(value) = sequence_value(&label, index) {
            check_entry(&label, index, &entry, &value)?;
        }
        out.tables
            .entry(label.clone())
            .or_insert_with(|| FactorTable {
                label,
                entries: BTreeMap::new(),
            })
            .entries
            .insert(index, entry);
    }
    Ok(out)
}
