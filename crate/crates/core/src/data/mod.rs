//! Binary classification datasets.
//!
//! A [`Dataset`] is an immutable, row-ordered collection of feature vectors
//! with labels in `{-1, +1}`. Besides the training features it may carry
//! named side attributes (typically a sensitive attribute kept out of
//! training) and, for datasets produced by [`Dataset::restrict`] or
//! [`split`], a map back to the row indices of the dataset they came from.
//!
//! Randomised operations ([`split`], [`inject_flips`]) draw from a ChaCha8
//! stream seeded with the caller's `u64` seed, so results are identical on
//! every platform.

mod io;
pub mod synthetic;

pub use io::{load_csv, load_libsvm, parse_csv, parse_libsvm, CsvOptions};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_set::IndexSet;

/// Named per-row values that are not part of the training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    feature_names: Option<Vec<String>>,
    attributes: Vec<Attribute>,
    parent_indices: Option<Vec<usize>>,
}

/// Deterministic generator used for every randomised data operation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl Dataset {
    /// Builds a dataset from dense rows. Labels must be exactly `-1.0` or `1.0`.
    ///
    /// An empty row list is accepted only through [`Dataset::restrict`]; here
    /// it is an error, as is a zero feature dimension.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite feature value {bad}")));
            }
            features.extend_from_slice(row);
        }
        for &y in &labels {
            if y != 1.0 && y != -1.0 {
                return Err(Error::NonBinaryLabel(vec![y.to_string()]));
            }
        }
        Ok(Dataset {
            n: rows.len(),
            d,
            features,
            labels,
            feature_names: None,
            attributes: Vec::new(),
            parent_indices: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_attribute(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: values.len(),
            });
        }
        self.attributes.push(Attribute {
            name: name.into(),
            values,
        });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn y(&self, j: usize) -> f64 {
        self.labels[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Row indices of the dataset this one was derived from, if any.
    pub fn parent_indices(&self) -> Option<&[usize]> {
        self.parent_indices.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.n).map(move |j| (self.x(j), self.labels[j]))
    }

    /// Values of a named column, looked up among feature names first and
    /// side attributes second.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if let Some(k) = self
            .feature_names
            .as_ref()
            .and_then(|names| names.iter().position(|c| c == name))
        {
            return Ok((0..self.n).map(|j| self.x(j)[k]).collect());
        }
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.values.clone())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// A column mapped onto `{-1, +1}`. Accepts columns whose values are all
    /// in `{-1, 1}` or all in `{0, 1}` (0 maps to -1).
    pub fn binary_column(&self, name: &str) -> Result<Vec<f64>> {
        let values = self.column(name)?;
        let signed = values.iter().all(|&v| v == 1.0 || v == -1.0);
        let zero_one = values.iter().all(|&v| v == 1.0 || v == 0.0);
        if signed {
            Ok(values)
        } else if zero_one {
            Ok(values.iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect())
        } else {
            Err(Error::NonBinaryAttribute(name.to_string()))
        }
    }

    /// The sub-dataset `S_I`, preserving the original relative order.
    ///
    /// The result's parent map points at the root dataset, so restricting a
    /// restricted dataset still maps back to the original rows.
    pub fn restrict(&self, index_set: &IndexSet) -> Result<Dataset> {
        if index_set.universe() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: index_set.universe(),
            });
        }
        let rows: Vec<usize> = index_set.iter().collect();
        Ok(self.select(&rows))
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.d);
        for &j in rows {
            features.extend_from_slice(self.x(j));
        }
        let parent = match &self.parent_indices {
            Some(map) => rows.iter().map(|&j| map[j]).collect(),
            None => rows.to_vec(),
        };
        Dataset {
            n: rows.len(),
            d: self.d,
            features,
            labels: rows.iter().map(|&j| self.labels[j]).collect(),
            feature_names: self.feature_names.clone(),
            attributes: self
                .attributes
                .iter()
                .map(|a| Attribute {
                    name: a.name.clone(),
                    values: rows.iter().map(|&j| a.values[j]).collect(),
                })
                .collect(),
            parent_indices: Some(parent),
        }
    }

    /// Copy with the named feature column removed from the training features
    /// and kept as a side attribute.
    pub fn detach_feature(&self, name: &str) -> Result<Dataset> {
        let names = self
            .feature_names
            .as_ref()
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let k = names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        if self.d == 1 {
            return Err(Error::InvalidParameter(format!(
                "cannot detach `{name}`: it is the only feature"
            )));
        }
        let values = self.column(name)?;
        let mut features = Vec::with_capacity(self.n * (self.d - 1));
        for j in 0..self.n {
            let x = self.x(j);
            features.extend_from_slice(&x[..k]);
            features.extend_from_slice(&x[k + 1..]);
        }
        let mut names = names.clone();
        names.remove(k);
        let mut out = self.clone();
        out.d -= 1;
        out.features = features;
        out.feature_names = Some(names);
        out.attributes.push(Attribute {
            name: name.to_string(),
            values,
        });
        Ok(out)
    }

    fn with_labels(&self, labels: Vec<f64>) -> Dataset {
        Dataset {
            labels,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DatasetJson::from(self)).expect("dataset serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Dataset> {
        let raw: DatasetJson = serde_json::from_str(text)?;
        raw.into_dataset()
    }
}

/// Canonical JSON form: `{"n":..,"d":..,"feature_names":[..],"rows":[{"x":[..],"y":±1},..]}`.
#[derive(Serialize, Deserialize)]
struct DatasetJson {
    n: usize,
    d: usize,
    feature_names: Option<Vec<String>>,
    rows: Vec<RowJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attributes: Vec<Attribute>,
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    x: Vec<f64>,
    y: i8,
}

impl From<&Dataset> for DatasetJson {
    fn from(ds: &Dataset) -> Self {
        DatasetJson {
            n: ds.n,
            d: ds.d,
            feature_names: ds.feature_names.clone(),
            rows: ds
                .rows()
                .map(|(x, y)| RowJson {
                    x: x.to_vec(),
                    y: y as i8,
                })
                .collect(),
            attributes: ds.attributes.clone(),
        }
    }
}

impl DatasetJson {
    fn into_dataset(self) -> Result<Dataset> {
        if self.rows.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: self.rows.len(),
            });
        }
        let labels = self.rows.iter().map(|r| r.y as f64).collect();
        let rows = self.rows.into_iter().map(|r| r.x).collect();
        let mut ds = Dataset::from_rows(rows, labels)?;
        if ds.d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: ds.d,
            });
        }
        if let Some(names) = self.feature_names {
            ds = ds.with_feature_names(names)?;
        }
        for attr in self.attributes {
            ds = ds.with_attribute(attr.name, attr.values)?;
        }
        Ok(ds)
    }
}

/// Random train/test partition with `round(train_fraction * n)` training rows,
/// rounding halves to even.
///
/// Both sides keep the original relative row order and carry parent maps.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) || ds.n < 2 {
        return Err(Error::DegenerateSplit {
            fraction: train_fraction,
            n: ds.n,
        });
    }
    let train_size = (train_fraction * ds.n as f64).round_ties_even() as usize;
    if train_size == 0 || train_size == ds.n {
        return Err(Error::DegenerateSplit {
            fraction: train_fraction,
            n: ds.n,
        });
    }
    let mut order: Vec<usize> = (0..ds.n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let mut train = order[..train_size].to_vec();
    let mut test = order[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&train), ds.select(&test)))
}

/// Flips the labels of `flip_count` rows chosen uniformly among the rows
/// whose label differs from the sensitive attribute.
pub fn inject_flips(ds: &Dataset, sensitive: &str, flip_count: usize, seed: u64) -> Result<Dataset> {
    let z = ds.binary_column(sensitive)?;
    let eligible: Vec<usize> = (0..ds.n).filter(|&j| ds.labels[j] != z[j]).collect();
    if flip_count > eligible.len() {
        return Err(Error::InsufficientEligible {
            eligible: eligible.len(),
            requested: flip_count,
        });
    }
    let mut labels = ds.labels.clone();
    let chosen = rand::seq::index::sample(&mut seeded_rng(seed), eligible.len(), flip_count);
    for k in chosen.iter() {
        let j = eligible[k];
        labels[j] = -labels[j];
    }
    Ok(ds.with_labels(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ten_rows() -> Dataset {
        let rows = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels = (0..10).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(Dataset::from_rows(vec![], vec![]), Err(Error::EmptyDataset)));
        assert!(Dataset::from_rows(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, -1.0]).is_err());
        assert!(matches!(
            Dataset::from_rows(vec![vec![1.0]], vec![0.0]),
            Err(Error::NonBinaryLabel(_))
        ));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = ten_rows();
        let (train, test) = split(&ds, 0.7, 1).unwrap();
        assert_eq!((train.n(), test.n()), (7, 3));
        let (train2, test2) = split(&ds, 0.7, 1).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        let mut all: Vec<usize> = train.parent_indices().unwrap().to_vec();
        all.extend_from_slice(test.parent_indices().unwrap());
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_empty_side() {
        assert!(matches!(split(&ten_rows(), 0.05, 1), Err(Error::DegenerateSplit { .. })));
        assert!(split(&ten_rows(), 1.0, 1).is_err());
    }

    #[test]
    fn restrict_selects_rows_in_order() {
        let ds = ten_rows();
        let set = IndexSet::from_one_based(10, &[2, 4]).unwrap();
        let sub = ds.restrict(&set).unwrap();
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.x(0), ds.x(1));
        assert_eq!(sub.x(1), ds.x(3));
        assert_eq!(sub.parent_indices(), Some(&[1, 3][..]));

        let whole = ds.restrict(&IndexSet::full(10)).unwrap();
        assert_eq!(whole.labels(), ds.labels());
        assert!((0..10).all(|j| whole.x(j) == ds.x(j)));

        let empty = ds.restrict(&IndexSet::empty(10)).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn detach_moves_column_to_attributes() {
        let ds = ten_rows()
            .with_feature_names(vec!["a".into(), "z".into()])
            .unwrap();
        let detached = ds.detach_feature("a").unwrap();
        assert_eq!(detached.d(), 1);
        assert_eq!(detached.column("a").unwrap(), ds.column("a").unwrap());
        assert_eq!(detached.x(3), &[9.0]);
    }

    #[test]
    fn json_round_trip() {
        let ds = ten_rows()
            .with_feature_names(vec!["a".into(), "b".into()])
            .unwrap()
            .with_attribute("z", vec![1.0; 10])
            .unwrap();
        let text = ds.to_json();
        assert!(text.starts_with(r#"{"n":10,"d":2,"feature_names":["a","b"],"rows":[{"x":[0.0,0.0],"y":-1}"#));
        assert_eq!(Dataset::from_json(&text).unwrap(), ds);
    }

    fn with_group(n: usize, seed: u64) -> Dataset {
        let mut rng = seeded_rng(seed);
        use rand::Rng;
        let rows = (0..n).map(|_| vec![rng.gen::<f64>()]).collect();
        let labels = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let z = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        Dataset::from_rows(rows, labels).unwrap().with_attribute("z", z).unwrap()
    }

    #[test]
    fn inject_flips_only_disagreeing_rows() {
        // 40 rows with y != z, 60 with y == z.
        let rows = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let z: Vec<f64> = (0..100)
            .map(|i| if i < 40 { -labels[i] } else { labels[i] })
            .collect();
        let ds = Dataset::from_rows(rows, labels).unwrap().with_attribute("z", z).unwrap();
        let flipped = inject_flips(&ds, "z", 10, 3).unwrap();
        let changed: Vec<usize> = (0..100).filter(|&j| flipped.y(j) != ds.y(j)).collect();
        assert_eq!(changed.len(), 10);
        assert!(changed.iter().all(|&j| j < 40));
        assert!((0..100).all(|j| flipped.x(j) == ds.x(j)));

        assert_eq!(inject_flips(&ds, "z", 0, 3).unwrap(), ds);
        assert!(matches!(
            inject_flips(&ds, "z", 41, 3),
            Err(Error::InsufficientEligible { eligible: 40, requested: 41 })
        ));
        assert!(matches!(inject_flips(&ds, "w", 1, 3), Err(Error::UnknownColumn(_))));
    }

    proptest! {
        #[test]
        fn nested_restriction_matches_direct(
            mask_i in proptest::collection::vec(any::<bool>(), 12),
            mask_j in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let ds = with_group(12, 5);
            let i_set = IndexSet::from_indices(12, (0..12).filter(|&k| mask_i[k])).unwrap();
            let j_set = IndexSet::from_indices(12, (0..12).filter(|&k| mask_i[k] && mask_j[k])).unwrap();
            let outer = ds.restrict(&i_set).unwrap();
            let parent = outer.parent_indices().unwrap().to_vec();
            let local = IndexSet::from_indices(
                outer.n(),
                j_set.iter().map(|p| parent.iter().position(|&q| q == p).unwrap()),
            ).unwrap();
            prop_assert_eq!(outer.restrict(&local).unwrap(), ds.restrict(&j_set).unwrap());
        }

        #[test]
        fn flips_preserve_features_and_count(seed in 0u64..1000, count in 0usize..10) {
            let ds = with_group(60, seed);
            let z = ds.binary_column("z").unwrap();
            let eligible = (0..60).filter(|&j| ds.y(j) != z[j]).count();
            prop_assume!(count <= eligible);
            let out = inject_flips(&ds, "z", count, seed).unwrap();
            let changed: Vec<usize> = (0..60).filter(|&j| out.y(j) != ds.y(j)).collect();
            prop_assert_eq!(changed.len(), count);
            prop_assert!(changed.iter().all(|&j| ds.y(j) != z[j]));
        }
    }
}
