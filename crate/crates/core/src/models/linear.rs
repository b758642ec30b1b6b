//! Ordinary least squares with intercept, solved by Householder QR.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::{FeatureMatrix, Target};

/// Ridge strength used when the design is rank deficient.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Diagonal entries of R below this fraction of their column norm count as
/// numerically zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub target: Target,
    /// One slope per feature, then the intercept.
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn input_dim(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn intercept(&self) -> f64 {
        *self.coefficients.last().expect("non-empty coefficients")
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        let (slopes, intercept) = self.coefficients.split_at(self.coefficients.len() - 1);
        slopes.iter().zip(x).fold(intercept[0], |acc, (w, v)| acc + w * v)
    }
}

/// Householder QR least-squares solve of column-major `cols` against `rhs`.
/// Returns the solution and the numerical rank.
fn qr_solve(mut cols: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> (Vec<f64>, usize) {
    let p = cols.len();
    let n = rhs.len();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut diag = vec![0.0; p];
    for k in 0..p {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let reflect = |c: &mut [f64]| {
                let s = 2.0 * v.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
                c.iter_mut().zip(&v).for_each(|(ci, vi)| *ci -= s * vi);
            };
            for col in cols.iter_mut().skip(k + 1) {
                reflect(&mut col[k..]);
            }
            reflect(&mut rhs[k..n]);
        }
        diag[k] = alpha;
        cols[k][k] = alpha;
    }
    let rank = (0..p).filter(|&k| diag[k].abs() > RANK_TOLERANCE * norms[k].max(f64::MIN_POSITIVE)).count();
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = rhs[k];
        for j in k + 1..p {
            acc -= cols[j][k] * beta[j];
        }
        beta[k] = if diag[k] != 0.0 { acc / diag[k] } else { 0.0 };
    }
    (beta, rank)
}

/// Least-squares fit with intercept. Rank-deficient designs are retried with
/// a small ridge penalty on the slopes; a design whose rows are all identical
/// carries no slope information and is rejected.
pub fn fit_linear_matrix(x: &FeatureMatrix, y: &[f64], target: Target) -> Result<LinearModel, ModelError> {
    let d = x.dim;
    let p = d + 1;
    if x.rows < p {
        return Err(ModelError::InsufficientData { needed: p, got: x.rows });
    }
    if y.len() != x.rows {
        return Err(ModelError::Contract(format!("{} targets for {} rows", y.len(), x.rows)));
    }
    if x.values.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ModelError::SingularFit("non-finite training values".into()));
    }
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| (0..x.rows).map(|i| x.row(i)[j]).collect()).collect();
    cols.push(vec![1.0; x.rows]);

    let (beta, rank) = qr_solve(cols.clone(), y.to_vec());
    if rank == p {
        return finish(beta, target);
    }
    if rank <= 1 && d > 0 {
        return Err(ModelError::SingularFit(format!(
            "design has rank {rank} of {p}: every row is identical, ridge cannot identify slopes"
        )));
    }
    let sqrt_lambda = RIDGE_LAMBDA.sqrt();
    for (j, col) in cols.iter_mut().enumerate() {
        col.extend((0..d).map(|r| if r == j { sqrt_lambda } else { 0.0 }));
    }
    let mut rhs = y.to_vec();
    rhs.extend(std::iter::repeat_n(0.0, d));
    let (beta, rank) = qr_solve(cols, rhs);
    if rank < p {
        return Err(ModelError::SingularFit(format!("ridge-regularised design still has rank {rank} of {p}")));
    }
    finish(beta, target)
}

fn finish(coefficients: Vec<f64>, target: Target) -> Result<LinearModel, ModelError> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::SingularFit("non-finite coefficients".into()));
    }
    Ok(LinearModel { target, coefficients })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Normal equations with Gaussian elimination and partial pivoting.
    fn normal_equations(x: &FeatureMatrix, y: &[f64]) -> Vec<f64> {
        let p = x.dim + 1;
        let row = |i: usize| -> Vec<f64> {
            let mut r = x.row(i).to_vec();
            r.push(1.0);
            r
        };
        let mut a = vec![vec![0.0; p + 1]; p];
        for i in 0..x.rows {
            let r = row(i);
            for j in 0..p {
                for k in 0..p {
                    a[j][k] += r[j] * r[k];
                }
                a[j][p] += r[j] * y[i];
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        (0..p).map(|i| a[i][p] / a[i][i]).collect()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> FeatureMatrix {
        FeatureMatrix { rows, dim, values: (0..rows * dim).map(|_| rng.random_range(-10.0..10.0)).collect() }
    }

    fn sse(m: &LinearModel, x: &FeatureMatrix, y: &[f64]) -> f64 {
        (0..x.rows).map(|i| (m.predict(x.row(i)) - y[i]).powi(2)).sum()
    }

    #[test]
    fn recovers_an_exact_linear_target() {
        // y = 2 * lon + 3 on [speed, lon, lat, course]
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut values = Vec::new();
        let mut y = Vec::new();
        for _ in 0..40 {
            let row = [rng.random_range(0.0..20.0), rng.random_range(24.0..27.0), rng.random_range(36.0..39.0), rng.random_range(0.0..360.0)];
            y.push(2.0 * row[1] + 3.0);
            values.extend(row);
        }
        let x = FeatureMatrix { rows: 40, dim: 4, values };
        let m = fit_linear_matrix(&x, &y, Target::Lon).unwrap();
        for (got, want) in m.coefficients.iter().zip([0.0, 2.0, 0.0, 0.0, 3.0]) {
            assert!((got - want).abs() < 1e-8, "{:?}", m.coefficients);
        }
    }

    #[test]
    fn constant_target_gives_flat_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 30, 4);
        let m = fit_linear_matrix(&x, &[7.25; 30], Target::Lat).unwrap();
        assert!((m.intercept() - 7.25).abs() < 1e-8);
        assert!(m.coefficients[..4].iter().all(|c| c.abs() < 1e-8));
    }

    #[test]
    fn matches_the_normal_equations_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 50, 4);
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let m = fit_linear_matrix(&x, &y, Target::Lon).unwrap();
        let oracle = normal_equations(&x, &y);
        for (a, b) in m.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn collinear_feature_falls_back_to_ridge() {
        // second feature is constant, i.e. collinear with the intercept
        let values: Vec<f64> = (0..20).flat_map(|i| [i as f64, 4.0]).collect();
        let x = FeatureMatrix { rows: 20, dim: 2, values };
        let y: Vec<f64> = (0..20).map(|i| 1.5 * i as f64 - 2.0).collect();
        let m = fit_linear_matrix(&x, &y, Target::Lon).unwrap();
        for i in 0..20 {
            assert!((m.predict(x.row(i)) - y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_rows_are_singular() {
        let x = FeatureMatrix { rows: 10, dim: 4, values: [12.0, 25.1, 37.2, 90.0].repeat(10) };
        let err = fit_linear_matrix(&x, &[1.0; 10], Target::Lon).unwrap_err();
        assert!(matches!(err, ModelError::SingularFit(_)), "{err}");
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let x = FeatureMatrix { rows: 4, dim: 4, values: vec![1.0; 16] };
        assert!(matches!(
            fit_linear_matrix(&x, &[1.0; 4], Target::Lon),
            Err(ModelError::InsufficientData { needed: 5, got: 4 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn perturbing_any_coefficient_never_helps(seed in any::<u64>(), rows in 6usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, rows, 4);
            let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-5.0..5.0)).collect();
            let m = fit_linear_matrix(&x, &y, Target::Lat).unwrap();
            let base = sse(&m, &x, &y);
            for j in 0..m.coefficients.len() {
                for delta in [-1e-3, 1e-3] {
                    let mut p = m.clone();
                    p.coefficients[j] += delta;
                    prop_assert!(sse(&p, &x, &y) >= base * (1.0 - 1e-12));
                }
            }
        }
    }
}
