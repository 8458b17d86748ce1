use std::collections::BTreeSet;
use std::path::Path;

use crate::cohort::PatientKey;
use crate::regress::{Table, Var};

use super::{VarprepError, NUM_VARS};

/// Covariates coded -1/+1.
pub const BINARY_VARS: &[usize] = &[1, 3, 4, 16, 17, 18, 19, 20, 21, 22, 23, 24, 45, 46, 57];

pub const TREATMENT: usize = 1;
pub const MORTALITY: usize = 57;
pub const LOS: usize = 58;

pub fn is_binary(i: usize) -> bool {
    BINARY_VARS.contains(&i)
}

/// Short label of covariate `i` (1-based).
pub fn variable_name(i: usize) -> String {
    let fixed = match i {
        1 => "DIU",
        2 => "AGE",
        3 => "GEN",
        4 => "RAC",
        15 => "ELI",
        45 => "VAS",
        46 => "VEN",
        57 => "MOR",
        58 => "LOS",
        _ => "",
    };
    if !fixed.is_empty() {
        return fixed.to_string();
    }
    let (prefix, base) = match i {
        5..=9 => ("SA", 5),
        10..=14 => ("SO", 10),
        16..=24 => ("EL", 16),
        25..=29 => ("CR", 25),
        30..=34 => ("FI", 30),
        35..=39 => ("FO", 35),
        40..=44 => ("FB", 40),
        47..=51 => ("BP", 47),
        52..=56 => ("BM", 52),
        _ => return format!("x{i}"),
    };
    format!("{prefix}{}", i - base + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub key: PatientKey,
    /// x1..x58 at indices 0..58; NaN marks a missing optional variable.
    pub x: [f64; NUM_VARS],
}

impl StudyRow {
    /// Covariate `i`, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.x[i - 1]
    }

    pub fn treated(&self) -> bool {
        self.x[0] > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyGroup {
    rows: Vec<StudyRow>,
}

impl StudyGroup {
    pub fn new(rows: Vec<StudyRow>) -> Result<Self, VarprepError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.key) {
                return Err(VarprepError::DuplicateKey(r.key));
            }
            for &b in BINARY_VARS {
                let v = r.get(b);
                if !(v == 1.0 || v == -1.0 || v.is_nan()) {
                    return Err(VarprepError::BadBinary { key: r.key, var: b, value: v });
                }
            }
            if r.get(TREATMENT).is_nan() {
                return Err(VarprepError::BadBinary { key: r.key, var: TREATMENT, value: f64::NAN });
            }
        }
        Ok(StudyGroup { rows })
    }

    pub fn rows(&self) -> &[StudyRow] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn n_treated(&self) -> usize {
        self.rows.iter().filter(|r| r.treated()).count()
    }

    pub fn n_untreated(&self) -> usize {
        self.n() - self.n_treated()
    }

    pub fn treatment(&self) -> Vec<bool> {
        self.rows.iter().map(StudyRow::treated).collect()
    }

    /// Raw values of covariate `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(i)).collect()
    }

    /// Covariate `i` as used in models: binaries recoded -1/+1 to 0/1.
    pub fn model_column(&self, i: usize) -> Vec<f64> {
        let col = self.column(i);
        if is_binary(i) {
            col.into_iter().map(|v| if v.is_nan() { v } else { (v + 1.0) / 2.0 }).collect()
        } else {
            col
        }
    }

    /// Model-coded table of every covariate without missing values.
    pub fn model_table(&self) -> Table {
        let mut t = Table::new(self.n());
        for i in 1..=NUM_VARS {
            let col = self.model_column(i);
            if col.iter().all(|v| v.is_finite()) {
                t.insert(Var::X(i), col).expect("column length");
            }
        }
        t
    }

    pub fn subset(&self, rows: &[usize]) -> StudyGroup {
        StudyGroup { rows: rows.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,hadm_id,icustay_id");
        for i in 1..=NUM_VARS {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}", r.key.subject_id, r.key.hadm_id, r.key.icustay_id));
            for v in r.x {
                if v.is_nan() {
                    out.push(',');
                } else {
                    out.push_str(&format!(",{v}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), VarprepError> {
        std::fs::write(path, self.to_csv()).map_err(|e| VarprepError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read_csv(path: &Path) -> Result<Self, VarprepError> {
        let text = std::fs::read_to_string(path).map_err(|e| VarprepError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self, VarprepError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| VarprepError::Parse { line: 1, message: e.to_string() })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let find = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| VarprepError::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            })
        };
        let ids = [find("subject_id")?, find("hadm_id")?, find("icustay_id")?];
        let xs: Vec<usize> = (1..=NUM_VARS).map(|i| find(&format!("x{i}"))).collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| VarprepError::Parse { line, message: e.to_string() })?;
            let bad = |what: &str| VarprepError::Parse { line, message: format!("bad {what}") };
            let id = |c: usize| rec.get(c).and_then(|s| s.trim().parse::<u64>().ok());
            let key = PatientKey::new(id(ids[0]).unwrap_or(0), id(ids[1]).unwrap_or(0), id(ids[2]).unwrap_or(0))
                .ok_or_else(|| bad("patient key"))?;
            let mut x = [f64::NAN; NUM_VARS];
            for (k, &c) in xs.iter().enumerate() {
                let cell = rec.get(c).unwrap_or("").trim();
                if !cell.is_empty() {
                    x[k] = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(&format!("x{}", k + 1)))?;
                }
            }
            rows.push(StudyRow { key, x });
        }
        StudyGroup::new(rows)
    }
}
