//! Deterministic CSV rendering.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

/// One CSV cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(usize),
    Float(f64),
}

impl Cell {
    fn render(self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Float(v) if v.is_nan() => write!(out, "nan"),
            Cell::Float(v) => write!(out, "{v:.16e}"),
        }
        .expect("writing to a String cannot fail");
    }
}

/// A metadata line, a header, data rows and `#`-prefixed trailer lines.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub meta: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub trailer: Vec<String>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let mut out = format!("# {}\n{}\n", self.meta, self.header.join(","));
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        for line in &self.trailer {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(path, self.render()).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_fixed_layout() {
        let t = CsvTable {
            meta: "scheme=nurbs, p=2, q=none, dt=none".into(),
            header: vec!["n".into(), "x".into()],
            rows: vec![
                vec![Cell::Int(1), Cell::Float(0.5)],
                vec![Cell::Int(2), Cell::Float(f64::NAN)],
            ],
            trailer: vec!["slope=4".into()],
        };
        assert_eq!(
            t.render(),
            "# scheme=nurbs, p=2, q=none, dt=none\nn,x\n1,5.0000000000000000e-1\n2,nan\n# slope=4\n"
        );
    }
}
