use std::fmt::Write as _;

use super::{EvalError, WerReport};

#[derive(Debug, Clone, PartialEq)]
pub struct WerRow {
    pub label: String,
    /// One WER (percent) per language column; `None` when not measured.
    pub values: Vec<Option<f64>>,
}

/// Experiments by language, rendered with two decimals.
#[derive(Debug, Clone, PartialEq)]
pub struct WerTable {
    pub title: String,
    pub languages: Vec<String>,
    rows: Vec<WerRow>,
}

impl WerTable {
    pub fn new(title: impl Into<String>, languages: Vec<String>) -> Self {
        Self {
            title: title.into(),
            languages,
            rows: Vec::new(),
        }
    }

    pub fn rows(&self) -> &[WerRow] {
        &self.rows
    }

    pub fn push_values(&mut self, label: impl Into<String>, values: Vec<Option<f64>>) -> Result<(), EvalError> {
        let label = label.into();
        if values.len() != self.languages.len() {
            return Err(EvalError::ColumnMismatch {
                label,
                expected: self.languages.len(),
                got: values.len(),
            });
        }
        self.rows.push(WerRow { label, values });
        Ok(())
    }

    pub fn push_reports(&mut self, label: impl Into<String>, reports: &[Option<WerReport>]) -> Result<(), EvalError> {
        self.push_values(label, reports.iter().map(|r| r.map(|r| r.wer)).collect())
    }

    fn cell(v: Option<f64>) -> String {
        v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
    }

    /// Fixed-width text: labels left-aligned, values right-aligned.
    pub fn to_text(&self) -> String {
        let label_w = self
            .rows
            .iter()
            .map(|r| r.label.chars().count())
            .chain([self.title.chars().count()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = self
            .languages
            .iter()
            .enumerate()
            .map(|(c, lang)| {
                self.rows
                    .iter()
                    .map(|r| Self::cell(r.values[c]).len())
                    .chain([lang.chars().count(), 6])
                    .max()
                    .unwrap_or(6)
            })
            .collect();

        let mut out = String::new();
        let line = |out: &mut String, label: &str, cells: &[String]| {
            let pad = label_w - label.chars().count();
            let _ = write!(out, "{label}{}", " ".repeat(pad));
            for (cell, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " | {}{cell}", " ".repeat(w - cell.chars().count()));
            }
            out.push('\n');
        };
        line(&mut out, &self.title, &self.languages);
        let rule_len = label_w + widths.iter().map(|w| w + 3).sum::<usize>();
        out.push_str(&"-".repeat(rule_len));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.values.iter().map(|v| Self::cell(*v)).collect();
            line(&mut out, &row.label, &cells);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once(self.title.as_str())
            .chain(self.languages.iter().map(String::as_str))
            .collect();
        writer.write_record(&header).expect("writing to memory");
        for row in &self.rows {
            let cells = std::iter::once(row.label.clone())
                .chain(row.values.iter().map(|v| v.map(|v| format!("{v:.2}")).unwrap_or_default()));
            writer.write_record(cells).expect("writing to memory");
        }
        String::from_utf8(writer.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }
}
