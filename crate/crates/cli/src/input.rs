//! CSV ingestion with line-precise diagnostics.

use std::fmt;
use std::path::Path;

use cvtest_core::generators::{embed, EmbeddingMode};
use cvtest_core::Sample;

/// Malformed input; maps to exit status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Column given either as a 0-based index or a header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(s) => f.write_str(s),
        }
    }
}

fn resolve(col: &Column, header: Option<&[String]>) -> Result<usize, InputError> {
    match col {
        Column::Index(i) => Ok(*i),
        Column::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| InputError(format!("column '{name}' not found in header"))),
    }
}

/// Reads the selected numeric columns. A first row that does not parse as
/// numbers is taken as the header.
pub fn read_columns(path: &Path, cols: &[Column]) -> Result<Vec<Vec<f64>>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let mut idx: Option<Vec<usize>> = None;
    let mut out = vec![Vec::new(); cols.len()];
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| InputError(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx.is_none() {
            let looks_numeric = record.iter().all(|f| f.parse::<f64>().is_ok());
            if !looks_numeric && k == 0 {
                let header: Vec<String> = record.iter().map(str::to_string).collect();
                idx = Some(
                    cols.iter()
                        .map(|c| resolve(c, Some(&header)))
                        .collect::<Result<_, _>>()?,
                );
                continue;
            }
            idx = Some(
                cols.iter()
                    .map(|c| resolve(c, None))
                    .collect::<Result<_, _>>()?,
            );
        }
        for (slot, &ci) in idx.as_ref().expect("columns resolved").iter().enumerate() {
            let field = record
                .get(ci)
                .ok_or_else(|| InputError(format!("line {line}: missing column {ci}")))?;
            let v: f64 = field.parse().map_err(|_| {
                InputError(format!("line {line}: column {ci} value '{field}' is not a number"))
            })?;
            if !v.is_finite() {
                return Err(InputError(format!("line {line}: column {ci} value '{field}' is not finite")));
            }
            out[slot].push(v);
        }
    }
    Ok(out)
}

pub fn load_regression(path: &Path, x: &Column, y: &Column) -> Result<Sample, InputError> {
    let mut cols = read_columns(path, &[x.clone(), y.clone()])?;
    let ys = cols.pop().unwrap_or_default();
    let xs = cols.pop().unwrap_or_default();
    Sample::new(xs, ys).map_err(|e| InputError(e.to_string()))
}

pub fn load_series(path: &Path, col: &Column, mode: EmbeddingMode) -> Result<Sample, InputError> {
    let raw = read_columns(path, std::slice::from_ref(col))?.pop().unwrap_or_default();
    if raw.len() < cvtest_core::smoothing::MIN_OBSERVATIONS + 1 {
        return Err(InputError(format!(
            "need at least {} observations, got {}",
            cvtest_core::smoothing::MIN_OBSERVATIONS,
            raw.len().saturating_sub(1)
        )));
    }
    embed(raw, mode).map(|s| s.sample).map_err(|e| InputError(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_detection_and_names() {
        let f = file("a,b,c\n1,2,3\n4,5,6\n");
        let cols = read_columns(f.path(), &[Column::Name("c".into()), Column::Index(0)]).unwrap();
        assert_eq!(cols, vec![vec![3.0, 6.0], vec![1.0, 4.0]]);
        let f = file("1,2\n3,4\n");
        assert_eq!(read_columns(f.path(), &[Column::Index(1)]).unwrap(), vec![vec![2.0, 4.0]]);
        assert!(read_columns(f.path(), &[Column::Name("b".into())]).is_err());
    }

    #[test]
    fn bad_values_name_the_line() {
        let f = file("x,y\n1,2\n3,oops\n");
        let e = read_columns(f.path(), &[Column::Index(0), Column::Index(1)]).unwrap_err();
        assert!(e.0.starts_with("line 3:"), "{e}");
        let f = file("1,2\n3,NaN\n");
        let e = read_columns(f.path(), &[Column::Index(0), Column::Index(1)]).unwrap_err();
        assert!(e.0.contains("line 2") && e.0.contains("not finite"), "{e}");
        let f = file("1,inf\n");
        assert!(read_columns(f.path(), &[Column::Index(1)]).is_err());
    }

    #[test]
    fn too_few_rows() {
        let f = file("1,2\n3,4\n5,6\n");
        let e = load_regression(f.path(), &Column::Index(0), &Column::Index(1)).unwrap_err();
        assert!(e.0.contains("need at least 5 observations"));
    }
}
