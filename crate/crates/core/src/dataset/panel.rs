use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::dataset::schema::FeatureSchema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub company_id: String,
    pub year: i32,
    pub values: Vec<f64>,
    /// `true` where the source cell was empty; the value is then 0.
    pub missing: Vec<bool>,
}

/// Company-year observations over a fixed feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    rows: Vec<PanelRow>,
    schema: FeatureSchema,
}

impl PanelDataset {
    pub fn new(schema: FeatureSchema, rows: Vec<PanelRow>) -> Result<Self> {
        let width = schema.len();
        let mut seen = HashSet::with_capacity(rows.len());
        for r in &rows {
            if r.values.len() != width || r.missing.len() != width {
                return Err(Error::Shape {
                    expected: width,
                    actual: r.values.len().max(r.missing.len()),
                });
            }
            if !seen.insert((r.company_id.as_str(), r.year)) {
                return Err(Error::Duplicate {
                    company: r.company_id.clone(),
                    year: r.year,
                });
            }
        }
        Ok(PanelDataset { rows, schema })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the panel in the ingestion CSV format; missing cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["company_id".to_string(), "year".to_string()];
        header.extend(self.schema.names().map(str::to_string));
        w.write_record(&header).map_err(Error::csv)?;
        let mut record = Vec::with_capacity(header.len());
        for r in &self.rows {
            record.clear();
            record.push(r.company_id.clone());
            record.push(r.year.to_string());
            for (v, &m) in r.values.iter().zip(&r.missing) {
                record.push(if m { String::new() } else { format!("{v}") });
            }
            w.write_record(&record).map_err(Error::csv)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Reads a panel CSV (`company_id,year,<schema names>`) against a JSON schema.
pub fn load_panel(csv_path: &Path, schema_path: &Path) -> Result<PanelDataset> {
    let schema = FeatureSchema::load(schema_path)?;
    let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    read_panel(std::io::BufReader::new(file), schema)
}

pub(crate) fn read_panel<R: std::io::Read>(input: R, schema: FeatureSchema) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();

    let expected: Vec<&str> = ["company_id", "year"]
        .into_iter()
        .chain(schema.names())
        .collect();
    for (i, want) in expected.iter().enumerate() {
        match header.get(i) {
            Some(got) if got == *want => {}
            Some(got) => {
                return Err(Error::Schema(format!(
                    "header column {} is `{got}`, expected `{want}`",
                    i + 1
                )))
            }
            None => {
                return Err(Error::Schema(format!(
                    "header is missing column `{want}`"
                )))
            }
        }
    }
    if header.len() > expected.len() {
        return Err(Error::Schema(format!(
            "header has unexpected extra column `{}`",
            &header[expected.len()]
        )));
    }

    let width = schema.len();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let company_id = record[0].to_string();
        let year: i32 = record[1].trim().parse().map_err(|_| Error::Parse {
            row: row_no,
            column: "year".into(),
            message: format!("`{}` is not an integer year", &record[1]),
        })?;
        let mut values = Vec::with_capacity(width);
        let mut missing = Vec::with_capacity(width);
        for j in 0..width {
            let cell = record[j + 2].trim();
            if cell.is_empty() {
                values.push(0.0);
                missing.push(true);
                continue;
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                row: row_no,
                column: schema.name(j).to_string(),
                message: format!("`{cell}` is not a finite number"),
            })?;
            values.push(v);
            missing.push(false);
        }
        if !seen.insert((company_id.clone(), year)) {
            return Err(Error::Duplicate {
                company: company_id,
                year,
            });
        }
        rows.push(PanelRow {
            company_id,
            year,
            values,
            missing,
        });
    }
    Ok(PanelDataset { rows, schema })
}
