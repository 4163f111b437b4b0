use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SketchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HeadKind {
    Ridge { lambda: f64 },
    /// Binary pooled-covariance discriminant; labels must be 0/1.
    Lda,
}

impl Default for HeadKind {
    fn default() -> Self {
        HeadKind::Ridge { lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearHead {
    pub kind: HeadKind,
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Ridge: training mean squared error. LDA: shrinkage added to the
    /// pooled covariance diagonal.
    pub fit_stat: f64,
}

impl LinearHead {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Ridge with an unpenalized intercept: solves `(XcᵀXc + λI) w = Xcᵀyc` on
/// centered data. LDA: `w = (Σ + εI)⁻¹(μ₁ − μ₀)` with `ε = 1e-3 ×` mean
/// diagonal of the pooled covariance (`1e-3` when that is zero).
pub fn fit_head(features: &[Vec<f64>], labels: &[f64], kind: HeadKind) -> Result<LinearHead, SketchError> {
    let n = features.len();
    if n < 2 || labels.len() != n {
        return Err(SketchError::TooFewSamples(n));
    }
    let p = features[0].len();
    let x = DMatrix::from_fn(n, p, |i, j| features[i][j]);
    match kind {
        HeadKind::Ridge { lambda } => {
            if !(lambda > 0.0) {
                return Err(SketchError::InvalidConfig("ridge lambda must be positive".into()));
            }
            let mx = column_means(&x);
            let my = labels.iter().sum::<f64>() / n as f64;
            let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - mx[j]);
            let yc = DVector::from_iterator(n, labels.iter().map(|y| y - my));
            let mut a = xc.transpose() * &xc;
            for j in 0..p {
                a[(j, j)] += lambda;
            }
            let b = xc.transpose() * &yc;
            let w = a.cholesky().ok_or(SketchError::SingularFit)?.solve(&b);
            let intercept = my - w.dot(&mx);
            let head = LinearHead {
                kind,
                weights: w.iter().copied().collect(),
                intercept,
                fit_stat: 0.0,
            };
            let mse = features
                .iter()
                .zip(labels)
                .map(|(f, y)| (head.predict(f) - y).powi(2))
                .sum::<f64>()
                / n as f64;
            Ok(LinearHead { fit_stat: mse, ..head })
        }
        HeadKind::Lda => {
            let idx1: Vec<usize> = (0..n).filter(|&i| labels[i] > 0.5).collect();
            let idx0: Vec<usize> = (0..n).filter(|&i| labels[i] <= 0.5).collect();
            if idx0.is_empty() || idx1.is_empty() {
                return Err(SketchError::SingleClass);
            }
            let mean_of = |idx: &[usize]| {
                DVector::from_fn(p, |j, _| idx.iter().map(|&i| x[(i, j)]).sum::<f64>() / idx.len() as f64)
            };
            let (m0, m1) = (mean_of(&idx0), mean_of(&idx1));
            let mut cov = DMatrix::zeros(p, p);
            for (idx, m) in [(&idx0, &m0), (&idx1, &m1)] {
                for &i in idx.iter() {
                    let d = DVector::from_fn(p, |j, _| x[(i, j)] - m[j]);
                    cov += &d * d.transpose();
                }
            }
            cov /= n as f64;
            let mean_diag = if p > 0 { cov.diagonal().sum() / p as f64 } else { 0.0 };
            let eps = if mean_diag > 0.0 { 1e-3 * mean_diag } else { 1e-3 };
            for j in 0..p {
                cov[(j, j)] += eps;
            }
            let diff = &m1 - &m0;
            let w = cov.cholesky().ok_or(SketchError::SingularFit)?.solve(&diff);
            let prior = (idx1.len() as f64 / idx0.len() as f64).ln();
            let intercept = -0.5 * w.dot(&(&m0 + &m1)) + prior;
            Ok(LinearHead {
                kind,
                weights: w.iter().copied().collect(),
                intercept,
                fit_stat: eps,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_interpolates_linear_targets() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] - 0.5 * x[1] + 3.0).collect();
        let h = fit_head(&xs, &ys, HeadKind::Ridge { lambda: 1e-10 }).unwrap();
        assert!(h.fit_stat.sqrt() <= 1e-6);
    }

    #[test]
    fn huge_lambda_shrinks_to_intercept() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ys = vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        let h = fit_head(&xs, &ys, HeadKind::Ridge { lambda: 1e12 }).unwrap();
        assert!(h.weights[0].abs() < 1e-9);
        assert!((h.predict(&[100.0]) - 3.5).abs() < 1e-6);
    }

    #[test]
    fn ridge_satisfies_normal_equations() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos(), 1.0 + i as f64]).collect();
        let ys: Vec<f64> = (0..8).map(|i| (i as f64 * 1.7).sin()).collect();
        let lambda = 0.3;
        let h = fit_head(&xs, &ys, HeadKind::Ridge { lambda }).unwrap();
        let n = xs.len() as f64;
        let mx: Vec<f64> = (0..3).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let my = ys.iter().sum::<f64>() / n;
        for j in 0..3 {
            let mut lhs = lambda * h.weights[j];
            let mut rhs = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let pred: f64 = (0..3).map(|k| (x[k] - mx[k]) * h.weights[k]).sum();
                lhs += (x[j] - mx[j]) * pred;
                rhs += (x[j] - mx[j]) * (y - my);
            }
            assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn two_point_lda_separates() {
        let xs = vec![vec![0.0, 1.0], vec![2.0, -1.0]];
        let h = fit_head(&xs, &[0.0, 1.0], HeadKind::Lda).unwrap();
        assert!(h.predict(&xs[1]) > h.predict(&xs[0]));
        assert_eq!(fit_head(&xs, &[1.0, 1.0], HeadKind::Lda), Err(SketchError::SingleClass));
    }
}
