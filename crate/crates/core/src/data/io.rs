use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Column mapping for CSV input. A header row is required.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Label value mapped to `+1`; the other value maps to `-1`.
    pub positive_label: String,
    /// Training feature columns. `None` takes every column that is neither
    /// the label nor an attribute column.
    pub feature_columns: Option<Vec<String>>,
    /// Columns loaded as side attributes instead of features.
    pub attribute_columns: Vec<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>, positive_label: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            positive_label: positive_label.into(),
            feature_columns: None,
            attribute_columns: Vec::new(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, options)
}

pub fn parse_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };

    let label_at = position(&options.label_column)?;
    let attribute_at = options
        .attribute_columns
        .iter()
        .map(|c| position(c))
        .collect::<Result<Vec<_>>>()?;
    let feature_at = match &options.feature_columns {
        Some(cols) => cols.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?,
        None => (0..headers.len())
            .filter(|k| *k != label_at && !attribute_at.contains(k))
            .collect(),
    };
    if feature_at.is_empty() {
        return Err(Error::InvalidParameter("no feature columns selected".into()));
    }

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut attributes = vec![Vec::new(); attribute_at.len()];
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        // Header is line 1.
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        let cell = |at: usize| -> Result<f64> {
            let text = record.get(at).unwrap_or("").trim();
            text.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: cannot parse `{text}` as a number", headers[at]),
            })
        };
        rows.push(feature_at.iter().map(|&at| cell(at)).collect::<Result<Vec<_>>>()?);
        for (values, &at) in attributes.iter_mut().zip(&attribute_at) {
            values.push(cell(at)?);
        }
        raw_labels.push(record.get(label_at).unwrap_or("").trim().to_string());
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    let binary = distinct.len() <= 2 && (distinct.len() < 2 || distinct.contains(options.positive_label.as_str()));
    if !binary {
        return Err(Error::NonBinaryLabel(distinct.into_iter().map(String::from).collect()));
    }
    let labels = raw_labels
        .iter()
        .map(|l| if *l == options.positive_label { 1.0 } else { -1.0 })
        .collect();

    let mut ds = Dataset::from_rows(rows, labels)?
        .with_feature_names(feature_at.iter().map(|&k| headers[k].clone()).collect())?;
    for (name, values) in options.attribute_columns.iter().zip(attributes) {
        ds = ds.with_attribute(name.clone(), values)?;
    }
    Ok(ds)
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_libsvm(&text)
}

/// Parses `label idx:val ...` lines with one-based feature indices into a
/// dense dataset. Labels may be `{-1, +1}` or `{0, 1}`; zero maps to `-1`.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut d = 0;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_text = tokens.next().unwrap_or_default();
        let label: f64 = label_text.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad label `{label_text}`"),
        })?;
        let mut row = Vec::new();
        for token in tokens {
            let parsed = token
                .split_once(':')
                .and_then(|(i, v)| Some((i.parse::<usize>().ok()?, v.parse::<f64>().ok()?)));
            match parsed {
                Some((index, value)) if index >= 1 => {
                    d = d.max(index);
                    row.push((index - 1, value));
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("bad feature `{token}`"),
                    })
                }
            }
        }
        sparse.push(row);
        raw_labels.push(label);
    }
    if sparse.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if d == 0 {
        return Err(Error::InvalidParameter("no features present".into()));
    }

    let signed = raw_labels.iter().all(|&y| y == 1.0 || y == -1.0);
    let zero_one = raw_labels.iter().all(|&y| y == 1.0 || y == 0.0);
    if !signed && !zero_one {
        let distinct: BTreeSet<String> = raw_labels.iter().map(|y| y.to_string()).collect();
        return Err(Error::NonBinaryLabel(distinct.into_iter().collect()));
    }
    let labels = raw_labels
        .iter()
        .map(|&y| if y == 1.0 { 1.0 } else { -1.0 })
        .collect();
    let rows = sparse
        .into_iter()
        .map(|entries| {
            let mut x = vec![0.0; d];
            for (i, v) in entries {
                x[i] = v;
            }
            x
        })
        .collect();
    Dataset::from_rows(rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_maps_labels_and_preserves_order() {
        let text = "f1,y\n1,a\n2,b\n3,a\n4,b\n";
        let ds = parse_csv(text.as_bytes(), &CsvOptions::new("y", "a")).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.labels(), &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(ds.x(2), &[3.0]);
    }

    #[test]
    fn csv_keeps_feature_names() {
        let text = "u,v,label\n0.5,1,1\n1,2,-1\n1.5,3,1\n2,4,-1\n2.5,5,1\n3,6,-1\n";
        let ds = parse_csv(text.as_bytes(), &CsvOptions::new("label", "1")).unwrap();
        assert_eq!((ds.n(), ds.d()), (6, 2));
        assert_eq!(ds.feature_names().unwrap(), &["u".to_string(), "v".to_string()]);
    }

    #[test]
    fn csv_attribute_columns_stay_out_of_features() {
        let text = "x,z,y\n1,0,1\n2,1,0\n";
        let mut opts = CsvOptions::new("y", "1");
        opts.attribute_columns = vec!["z".into()];
        let ds = parse_csv(text.as_bytes(), &opts).unwrap();
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.binary_column("z").unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn csv_errors() {
        let three = "x,y\n1,a\n2,b\n3,c\n";
        assert!(matches!(
            parse_csv(three.as_bytes(), &CsvOptions::new("y", "a")),
            Err(Error::NonBinaryLabel(_))
        ));
        assert!(matches!(
            parse_csv(three.as_bytes(), &CsvOptions::new("label", "a")),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            parse_csv("x,y\n".as_bytes(), &CsvOptions::new("y", "a")),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            parse_csv("x,y\n1,a\nfoo,b\n".as_bytes(), &CsvOptions::new("y", "a")),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn libsvm_dense_expansion() {
        let ds = parse_libsvm("+1 1:2.0 3:1.0\n").unwrap();
        assert_eq!(ds.x(0), &[2.0, 0.0, 1.0]);
        assert_eq!(ds.y(0), 1.0);
    }

    #[test]
    fn libsvm_zero_one_remap() {
        let ds = parse_libsvm("1 1:1\n0 1:2\n").unwrap();
        assert_eq!(ds.labels(), &[1.0, -1.0]);
    }

    #[test]
    fn libsvm_errors() {
        assert!(matches!(parse_libsvm(""), Err(Error::EmptyDataset)));
        assert!(matches!(parse_libsvm("2 1:1\n1 1:1\n"), Err(Error::NonBinaryLabel(_))));
        assert!(matches!(parse_libsvm("1 x:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 0:1\n"), Err(Error::Parse { .. })));
    }
}
