use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::summary::RunSummary;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => f.write_str(&format_real(*v)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// One CSV file. `name` is `None` for the main table, otherwise the
/// suffix of a sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { name: None, header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn sidecar(name: &str, header: &[&str]) -> Self {
        Table { name: Some(name.into()), ..Table::new(header) }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&cell.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("cells are UTF-8")
    }
}

/// A finished run: its summary and the tables behind it, main table first.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn main_table(&self) -> &Table {
        &self.tables[0]
    }

    pub fn sidecar(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name.as_deref() == Some(name))
    }
}

/// `dir/stem.csv` → `dir/stem.<suffix>`.
pub fn sibling_path(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    main.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Writes the main CSV to `path`, sidecars to `stem.<name>.csv` and the
/// summary to `stem.json`. Returns every path written.
pub fn write_outputs(output: &RunOutput, path: &Path) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for table in &output.tables {
        let target = match &table.name {
            None => path.to_path_buf(),
            Some(name) => sibling_path(path, &format!("{name}.csv")),
        };
        write_atomic(&target, table.to_csv_string().as_bytes())?;
        written.push(target);
    }
    let json = sibling_path(path, "json");
    let mut text = serde_json::to_string_pretty(&output.summary).map_err(io::Error::other)?;
    text.push('\n');
    write_atomic(&json, text.as_bytes())?;
    written.push(json);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.0, 1.0, -2.5, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["rep", "delta", "tree"]);
        t.push(vec![0usize.into(), 0.5.into(), "1 0".into()]);
        t.push(vec![1usize.into(), 2.0.into(), "0".into()]);
        assert_eq!(t.to_csv_string(), "rep,delta,tree\n0,5.0000000000000000e-1,1 0\n1,2.0000000000000000e0,0\n");
    }

    #[test]
    fn sibling_paths() {
        let p = Path::new("/tmp/out/maxdeg.csv");
        assert_eq!(sibling_path(p, "json"), Path::new("/tmp/out/maxdeg.json"));
        assert_eq!(sibling_path(p, "llt.csv"), Path::new("/tmp/out/maxdeg.llt.csv"));
    }
}
