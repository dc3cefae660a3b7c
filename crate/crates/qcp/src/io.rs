//! CSV and JSON plumbing.
//!
//! Every CSV starts with one comment line, `# qcp <version> key=value ...`,
//! recording the resolved configuration. Numbers are written in full double
//! precision scientific notation; missing values are empty fields.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Resolved configuration written into the comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta(BTreeMap<String, String>);

impl Meta {
    pub fn new(command: &str) -> Self {
        let mut m = Meta::default();
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.insert(key.to_owned(), value.to_string().replace(char::is_whitespace, "_"));
        self
    }

    pub fn set_list<T: Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        self.set(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn line(&self) -> String {
        let mut s = format!("# qcp {VERSION}");
        for (k, v) in &self.0 {
            s.push(' ');
            s.push_str(k);
            s.push('=');
            s.push_str(v);
        }
        s
    }

    fn parse(line: &str) -> Self {
        let mut m = Meta::default();
        for tok in line.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                m.0.insert(k.to_owned(), v.to_owned());
            }
        }
        m
    }
}

/// Where output goes: a file, or stdout when absent.
pub fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn out_name(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

pub fn write_csv(path: Option<&Path>, meta: &Meta, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let name = out_name(path);
    let mut out = open_out(path)?;
    writeln!(out, "{}", meta.line()).map_err(|e| CliError::io(&name, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let wrap = |e: csv::Error| CliError::Parse { path: name.clone(), message: e.to_string() };
    w.write_record(columns).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(&name, e))
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let name = out_name(path);
    let mut out = open_out(path)?;
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io(name, e))
}

/// A CSV file read back with its comment-line metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub meta: Meta,
    pub columns: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let meta = text.lines().next().filter(|l| l.starts_with('#')).map(Meta::parse).unwrap_or_default();
        let err = |message: String| CliError::Parse { path: path.to_path_buf(), message };
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| err(e.to_string()))?
            .iter()
            .map(|s| s.trim().to_owned())
            .collect();
        if columns.iter().all(String::is_empty) {
            return Err(err("missing header row".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                err(format!("line {line}: {e}"))
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table { path: path.to_path_buf(), meta, columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| CliError::Parse {
            path: self.path.clone(),
            message: format!("missing column `{name}`"),
        })
    }

    /// Column values, `None` for empty fields.
    pub fn floats(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .map(|(line, rec)| {
                let s = rec.get(i).unwrap_or("").trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>().map(Some).map_err(|_| CliError::Parse {
                    path: self.path.clone(),
                    message: format!("line {line}: `{s}` in column `{name}` is not a number"),
                })
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|(_, r)| r.get(i).unwrap_or("").trim().to_owned()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, -1.5, 1e-300, 13.801588763429118, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn meta_line_is_sorted_and_parsed_back() {
        let mut m = Meta::new("sweep");
        m.set("omega", 1.0).set("L", 4).set("note", "a b");
        let line = m.line();
        assert!(line.starts_with("# qcp "));
        assert!(line.ends_with("L=4 command=sweep note=a_b omega=1"));
        let back = Meta::parse(&line);
        assert_eq!(back.get("L"), Some("4"));
        assert_eq!(back.get("omega"), Some("1"));
    }
}
