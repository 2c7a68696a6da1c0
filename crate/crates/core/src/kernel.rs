//! Positive-definite kernels and Gram matrices.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Kernel choice. JSON form: `{"kind":"linear"}`, `{"kind":"rbf","gamma":0.1}`
/// or `{"kind":"polynomial","degree":3,"coef0":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(a, b) = a·b`
    #[default]
    Linear,
    /// `K(a, b) = exp(-gamma ‖a - b‖²)`
    Rbf { gamma: f64 },
    /// `K(a, b) = (a·b + coef0)^degree`
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { gamma } => Err(Error::InvalidKernel(format!("gamma must be positive, got {gamma}"))),
            KernelSpec::Polynomial { degree, coef0 } if degree >= 1 && coef0.is_finite() => Ok(()),
            KernelSpec::Polynomial { degree, .. } => {
                Err(Error::InvalidKernel(format!("degree must be at least 1, got {degree}")))
            }
        }
    }

    /// Parses and validates the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: KernelSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidKernel(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
        Ok(self.eval_unchecked(a, b))
    }

    /// `eval` without the length check; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
            KernelSpec::Polynomial { degree, coef0 } => {
                (dot(a, b) + coef0).powi(degree as i32)
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense symmetric matrix of kernel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    /// Evaluates each unordered pair once and mirrors it, so the result is
    /// bitwise symmetric.
    pub fn compute(spec: &KernelSpec, ds: &Dataset) -> Self {
        let n = ds.n();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = spec.eval_unchecked(ds.x(i), ds.x(j));
                entries[i * n + j] = k;
                entries[j * n + i] = k;
            }
        }
        GramMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

pub fn gram(spec: &KernelSpec, ds: &Dataset) -> Result<GramMatrix> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(GramMatrix::compute(spec, ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;
    use proptest::prelude::*;

    fn pair(a: Vec<f64>, b: Vec<f64>) -> Dataset {
        Dataset::from_rows(vec![a, b], vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert_eq!(KernelSpec::Rbf { gamma: 0.7 }.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let poly = KernelSpec::Polynomial { degree: 2, coef0: 1.0 };
        assert_eq!(poly.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 4.0);
        assert!(matches!(
            KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_examples() {
        let g = gram(&KernelSpec::Linear, &pair(vec![1.0, 0.0], vec![0.0, 1.0])).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0]);
        assert_eq!(g.row(1), &[0.0, 1.0]);
        let g = gram(&KernelSpec::Linear, &pair(vec![-1.0, 0.0], vec![1.0, 0.0])).unwrap();
        assert_eq!(g.row(0), &[1.0, -1.0]);
        assert_eq!(g.row(1), &[-1.0, 1.0]);
        let ds = synthetic::uniform(9, 3, 4);
        let g = gram(&KernelSpec::Rbf { gamma: 2.0 }, &ds).unwrap();
        assert!((0..9).all(|i| g.get(i, i) == 1.0));
    }

    #[test]
    fn kernel_json() {
        assert_eq!(KernelSpec::from_json(r#"{"kind":"linear"}"#).unwrap(), KernelSpec::Linear);
        assert_eq!(
            KernelSpec::from_json(r#"{"kind":"rbf","gamma":0.1}"#).unwrap(),
            KernelSpec::Rbf { gamma: 0.1 }
        );
        assert_eq!(
            KernelSpec::from_json(r#"{"kind":"polynomial","degree":3,"coef0":1.0}"#).unwrap(),
            KernelSpec::Polynomial { degree: 3, coef0: 1.0 }
        );
        assert_eq!(serde_json::to_string(&KernelSpec::Rbf { gamma: 0.5 }).unwrap(), r#"{"kind":"rbf","gamma":0.5}"#);
        assert!(KernelSpec::from_json(r#"{"kind":"rbf","gamma":-1}"#).is_err());
        assert!(KernelSpec::from_json(r#"{"kind":"polynomial","degree":0,"coef0":1}"#).is_err());
        assert!(KernelSpec::from_json(r#"{"kind":"rbf"}"#).is_err());
        assert!(KernelSpec::from_json(r#"{"kind":"sigmoid"}"#).is_err());
    }

    fn min_max_eigen(g: &GramMatrix) -> (f64, f64) {
        let m = nalgebra::DMatrix::from_fn(g.n(), g.n(), |i, j| g.get(i, j));
        let eig = m.symmetric_eigen().eigenvalues;
        (eig.min(), eig.max())
    }

    proptest! {
        #[test]
        fn gram_is_symmetric_and_psd(n in 1usize..=32, d in 1usize..5, seed in any::<u64>(), which in 0usize..3) {
            let ds = synthetic::uniform(n, d, seed);
            let spec = [
                KernelSpec::Linear,
                KernelSpec::Rbf { gamma: 0.8 },
                KernelSpec::Polynomial { degree: 3, coef0: 1.0 },
            ][which];
            let g = gram(&spec, &ds).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
                }
            }
            let (lo, hi) = min_max_eigen(&g);
            prop_assert!(lo >= -1e-8 * hi.abs().max(f64::MIN_POSITIVE), "lo={lo} hi={hi}");
        }

        #[test]
        fn linear_equals_degree_one_polynomial(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let lin = KernelSpec::Linear.eval(&a, &b).unwrap();
            let poly = KernelSpec::Polynomial { degree: 1, coef0: 0.0 }.eval(&a, &b).unwrap();
            prop_assert_eq!(lin, poly);
        }
    }
}
