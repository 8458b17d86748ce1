use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{CohortError, KeyComponent, PatientKey};

/// One headered flat-file extract, kept as text cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ExtractTable {
    pub fn new(name: impl Into<String>, header: Vec<String>) -> Self {
        ExtractTable { name: name.into(), header, rows: Vec::new() }
    }

    pub fn column_index(&self, column: &str) -> Result<usize, CohortError> {
        self.header.iter().position(|h| h == column).ok_or_else(|| CohortError::MissingColumn {
            extract: self.name.clone(),
            column: column.to_string(),
        })
    }

    /// Cell parsed as a positive id; empty cells give `None`.
    pub fn id_at(&self, row: usize, col: usize) -> Result<Option<u64>, CohortError> {
        let cell = self.rows[row][col].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<u64>().ok().filter(|&v| v > 0).map(Some).ok_or_else(|| self.bad_value(row, col))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<Option<f64>, CohortError> {
        let cell = self.rows[row][col].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some).ok_or_else(|| self.bad_value(row, col))
    }

    fn bad_value(&self, row: usize, col: usize) -> CohortError {
        CohortError::BadValue {
            extract: self.name.clone(),
            line: row + 2,
            column: self.header[col].clone(),
            value: self.rows[row][col].clone(),
        }
    }

    /// Row indices grouped by icustay id.
    pub fn rows_by_icustay(&self) -> Result<BTreeMap<u64, Vec<usize>>, CohortError> {
        let col = self.column_index(KeyComponent::Icustay.column())?;
        let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for r in 0..self.rows.len() {
            if let Some(id) = self.id_at(r, col)? {
                out.entry(id).or_default().push(r);
            }
        }
        Ok(out)
    }

    pub fn icustay_ids(&self) -> Result<BTreeSet<u64>, CohortError> {
        Ok(self.rows_by_icustay()?.into_keys().collect())
    }

    /// (key value, row index) pairs in file order, for merge joins.
    pub fn keyed_rows(&self, by: KeyComponent) -> Result<Vec<(u64, usize)>, CohortError> {
        let col = self.column_index(by.column())?;
        let mut out = Vec::with_capacity(self.rows.len());
        for r in 0..self.rows.len() {
            let id = self.id_at(r, col)?.ok_or_else(|| self.bad_value(r, col))?;
            out.push((id, r));
        }
        Ok(out)
    }

    /// Complete keys of rows with all three ids present.
    pub fn patient_keys(&self) -> Result<BTreeMap<u64, PatientKey>, CohortError> {
        let s = self.column_index("subject_id")?;
        let h = self.column_index("hadm_id")?;
        let i = self.column_index("icustay_id")?;
        let mut out = BTreeMap::new();
        for r in 0..self.rows.len() {
            if let (Some(a), Some(b), Some(c)) = (self.id_at(r, s)?, self.id_at(r, h)?, self.id_at(r, i)?) {
                out.insert(c, PatientKey::new(a, b, c).unwrap());
            }
        }
        Ok(out)
    }

    pub fn read_csv(name: &str, path: &Path) -> Result<Self, CohortError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CohortError::Csv(format!("{}: {e}", path.display())))?;
        let header = rdr
            .headers()
            .map_err(|e| CohortError::Csv(format!("{}: {e}", path.display())))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut table = ExtractTable::new(name, header);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CohortError::Csv(format!("{}: {e}", path.display())))?;
            table.rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CohortError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CohortError::Csv(format!("{}: {e}", path.display())))?;
        let err = |e: csv::Error| CohortError::Csv(format!("{}: {e}", path.display()));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| CohortError::Io(e.to_string()))
    }
}

/// Named extracts, one per `<name>.csv` in a directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extracts {
    pub tables: BTreeMap<String, ExtractTable>,
}

impl Extracts {
    pub fn insert(&mut self, table: ExtractTable) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn get(&self, name: &str) -> Result<&ExtractTable, CohortError> {
        self.tables.get(name).ok_or_else(|| CohortError::UnknownSetReference(name.to_string()))
    }

    pub fn read_dir(dir: &Path) -> Result<Self, CohortError> {
        let mut out = Extracts::default();
        let entries = std::fs::read_dir(dir).map_err(|e| CohortError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p.file_stem().unwrap().to_string_lossy().to_string();
            out.insert(ExtractTable::read_csv(&name, &p)?);
        }
        Ok(out)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), CohortError> {
        std::fs::create_dir_all(dir).map_err(|e| CohortError::Io(format!("{}: {e}", dir.display())))?;
        for t in self.tables.values() {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}
