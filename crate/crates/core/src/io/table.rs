//! Plain CSV tables with a `#`-prefixed provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{invalid, Result};
use crate::spectroscopy::SpectrumPoint;

pub const SPECTRUM_COLUMNS: [&str; 3] = ["tau_us", "p_down", "sigma"];

/// Formats with 12 significant digits, switching to exponent notation for very
/// small or large magnitudes.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&exp) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

pub fn write_table(path: &Path, header: &[String], columns: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for line in header {
        for part in line.lines() {
            writeln!(out, "# {part}")?;
        }
    }
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        w.write_record(columns)?;
        for row in rows {
            if row.len() != columns.len() {
                return Err(invalid("rows", format!("expected {} cells, got {}", columns.len(), row.len())));
            }
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

/// A CSV table read back as text cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| invalid("csv", format!("missing column `{name}`")))
    }

    /// Numeric column; empty cells become `None`.
    pub fn column_f64(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row[k].trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|_| invalid("csv", format!("row {}: `{cell}` in `{name}` is not a number", i + 1)))
                }
            })
            .collect()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let header = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { header, columns, rows })
}

pub fn write_spectrum_csv(path: &Path, header: &[String], points: &[SpectrumPoint]) -> Result<()> {
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| vec![p.tau_us.into(), p.p_down.into(), p.sigma.into()])
        .collect();
    write_table(path, header, &SPECTRUM_COLUMNS, &rows)
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<SpectrumPoint>> {
    let table = read_table(path)?;
    let tau = table.column_f64("tau_us")?;
    let p = table.column_f64("p_down")?;
    let sigma = match table.column_index("sigma") {
        Ok(_) => table.column_f64("sigma")?,
        Err(_) => vec![None; tau.len()],
    };
    tau.into_iter()
        .zip(p)
        .zip(sigma)
        .enumerate()
        .map(|(i, ((t, p), s))| match (t, p) {
            (Some(tau_us), Some(p_down)) => Ok(SpectrumPoint {
                tau_us,
                p_down,
                sigma: s,
            }),
            _ => Err(invalid("csv", format!("row {} lacks tau_us or p_down", i + 1))),
        })
        .collect()
}
