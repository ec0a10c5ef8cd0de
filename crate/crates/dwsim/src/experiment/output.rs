use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_owned())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format_float(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schema {
    Occupations,
    Fidelity,
    Spectral,
    Custom(Vec<String>),
}

impl Schema {
    pub fn custom(cols: &[&str]) -> Self {
        Schema::Custom(cols.iter().map(|c| c.to_string()).collect())
    }

    pub fn columns(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            Schema::Occupations => &["T_evol", "T_wall", "site", "p"],
            Schema::Fidelity => &["T_evol", "T_wall", "state_fidelity", "subspace_fidelity"],
            Schema::Spectral => &["index", "eigenvalue", "r_eta", "s_n"],
            Schema::Custom(c) => return c.clone(),
        };
        fixed.iter().map(|c| c.to_string()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, schema: Schema) -> Self {
        Table { name: name.into(), schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.schema.columns().len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.schema.columns().join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(contents).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io { path: path.to_path_buf(), source: e }
    })
}

/// Tracks every file a run writes so a failure can remove them again.
#[derive(Debug)]
pub struct OutputSet {
    pub dir: PathBuf,
    written: Vec<PathBuf>,
    created_dir: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(OutputSet { dir: dir.to_path_buf(), written: Vec::new(), created_dir })
    }

    pub fn emit(&mut self, table: &Table) -> Result<FileRecord> {
        let path = self.dir.join(&table.name);
        write_atomic(&path, table.render().as_bytes())?;
        self.written.push(path);
        Ok(FileRecord { name: table.name.clone(), rows: table.rows.len(), columns: table.schema.columns() })
    }

    pub fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(&path, text.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    /// Remove what this run wrote; the directory too if the run created it.
    pub fn clean_up(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub rows: usize,
    pub columns: Vec<String>,
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub group: usize,
    pub parameters: BTreeMap<String, f64>,
    pub files: Vec<FileRecord>,
    pub wall_clock_s: f64,
    pub summary: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultManifest {
    pub config: super::ExperimentConfig,
    pub toolkit_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub runs: Vec<RunRecord>,
    /// files covering the whole grid
    pub files: Vec<FileRecord>,
    pub summary: BTreeMap<String, f64>,
}

impl ResultManifest {
    /// Every referenced file exists and has the recorded number of data rows.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for f in self.runs.iter().flat_map(|r| &r.files).chain(&self.files) {
            let path = dir.join(&f.name);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let rows = text.lines().count().saturating_sub(1);
            if rows != f.rows {
                return Err(Error::Config(format!("{}: {rows} rows, manifest says {}", f.name, f.rows)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn occupation_table() {
        let mut t = Table::new("occ.csv", Schema::Occupations);
        t.push(vec![0.5.into(), 1.0.into(), 2usize.into(), 0.25.into()]);
        let s = t.render();
        assert!(s.starts_with("T_evol,T_wall,site,p\n"));
        assert_eq!(s.lines().count(), 2);
        assert!(s.contains(",2,"));
    }

    #[test]
    fn atomic_write_and_cleanup() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("out");
        let mut set = OutputSet::create(&sub).unwrap();
        let mut t = Table::new("a.csv", Schema::custom(&["x"]));
        t.push(vec![Cell::S("a,b".into())]);
        let rec = set.emit(&t).unwrap();
        assert_eq!(rec.rows, 1);
        let text = fs::read_to_string(sub.join("a.csv")).unwrap();
        assert_eq!(text, "x\n\"a,b\"\n");
        assert!(!sub.join(".a.csv.tmp").exists());
        set.clean_up();
        assert!(!sub.exists());
    }
}
