//! Dataset loading shared by the CLI and the service.

use std::path::Path;

use svmenum::data::{parse_csv, parse_libsvm, CsvOptions};
use svmenum::{Dataset, Error, Result};

use crate::cli::Format;

/// Parsing options beyond the raw text.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub label: Option<String>,
    pub positive: Option<String>,
    /// CSV columns kept as side attributes rather than features.
    pub attributes: Vec<String>,
}

pub fn parse(text: &str, format: Format, options: &LoadOptions) -> Result<Dataset> {
    match format {
        Format::Csv => {
            let (Some(label), Some(positive)) = (&options.label, &options.positive) else {
                return Err(Error::InvalidParameter("CSV input needs a label column and a positive label".into()));
            };
            let mut csv = CsvOptions::new(label.clone(), positive.clone());
            csv.attribute_columns = options.attributes.clone();
            parse_csv(text.as_bytes(), &csv)
        }
        Format::Libsvm => parse_libsvm(text),
        Format::Json => Dataset::from_json(text),
    }
}

pub fn read(path: &Path, format: Format, options: &LoadOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, format, options)
}

/// Moves `name` from the features to the attributes unless it is already an
/// attribute.
pub fn exclude_column(ds: Dataset, name: &str) -> Result<Dataset> {
    if ds.attributes().iter().any(|a| a.name == name) {
        Ok(ds)
    } else {
        ds.detach_feature(name)
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "libsvm" => Ok(Format::Libsvm),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_needs_label() {
        let err = parse("a,y\n1,1\n", Format::Csv, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn csv_attributes_stay_out_of_features() {
        let options = LoadOptions {
            label: Some("y".into()),
            positive: Some("1".into()),
            attributes: vec!["z".into()],
        };
        let ds = parse("a,z,y\n1,1,1\n2,0,0\n", Format::Csv, &options).unwrap();
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.binary_column("z").unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn exclude_is_idempotent() {
        let options = LoadOptions {
            label: Some("y".into()),
            positive: Some("1".into()),
            attributes: Vec::new(),
        };
        let ds = parse("a,z,y\n1,1,1\n2,0,0\n", Format::Csv, &options).unwrap();
        let once = exclude_column(ds, "z").unwrap();
        assert_eq!(once.d(), 1);
        let twice = exclude_column(once.clone(), "z").unwrap();
        assert_eq!(once, twice);
    }
}
