use rayon::prelude::*;

use crate::{Error, Result};

/// Kernel function of the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `x·z`
    Linear,
    /// `exp(−γ‖x − z‖²)`
    Rbf { gamma: f64 },
    /// `(x·z + c)²`
    Quadratic { coef0: f64 },
}

pub const KERNEL_NAMES: [&str; 3] = ["linear", "rbf", "quadratic"];

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Quadratic { .. } => "quadratic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(Error::InvalidParameter(format!(
                "rbf gamma must be positive, got {gamma}"
            ))),
            KernelSpec::Quadratic { coef0 } if !coef0.is_finite() => Err(Error::InvalidParameter(format!(
                "quadratic coef0 must be finite, got {coef0}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Quadratic { coef0 } => {
                let s = dot(x, z) + coef0;
                s * s
            }
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    spec.eval(x, z)
}

/// Dense symmetric kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// `G[i][j] = K(x_i, x_j)`, computed for the upper triangle and mirrored.
pub fn gram_matrix(spec: &KernelSpec, vectors: &[Vec<f64>]) -> Result<GramMatrix> {
    spec.validate()?;
    let n = vectors.len();
    if n == 0 {
        return Err(Error::InvalidParameter("gram matrix of no vectors".into()));
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval_unchecked(&vectors[i], &vectors[j])).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(GramMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let (x, z) = ([1.0, 2.0], [3.0, 4.0]);
        assert_eq!(KernelSpec::Linear.eval(&x, &z).unwrap(), 11.0);
        assert_eq!(KernelSpec::Quadratic { coef0: 1.0 }.eval(&x, &z).unwrap(), 144.0);
        assert_eq!(
            KernelSpec::Quadratic { coef0: 0.0 }
                .eval(&[1.0, 0.0], &[0.0, 5.0])
                .unwrap(),
            0.0
        );
        for gamma in [1e-3, 0.5, 40.0] {
            assert_eq!(KernelSpec::Rbf { gamma }.eval(&z, &z).unwrap(), 1.0);
        }
        assert!((KernelSpec::Rbf { gamma: 0.5 }.eval(&x, &z).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
        assert!(matches!(
            KernelSpec::Linear.eval(&x, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
        assert!(KernelSpec::Rbf { gamma: -1.0 }.validate().is_err());
        assert!(KernelSpec::Quadratic { coef0: f64::NAN }.validate().is_err());
        assert!(KernelSpec::Quadratic { coef0: -2.0 }.validate().is_ok());
    }

    #[test]
    fn gram_basics() {
        let v = vec![vec![1.0, 2.0]];
        let g = gram_matrix(&KernelSpec::Linear, &v).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.get(0, 0), 5.0);

        let pts = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        let spec = KernelSpec::Rbf { gamma: 0.7 };
        let g = gram_matrix(&spec, &pts).unwrap();
        for i in 0..3 {
            assert_eq!(g.get(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        let perm = [2, 0, 1];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| pts[p].clone()).collect();
        let gp = gram_matrix(&spec, &permuted).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gp.get(i, j), g.get(perm[i], perm[j]));
            }
        }
        assert!(gram_matrix(&spec, &[]).is_err());
        assert!(gram_matrix(&spec, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
