use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;

/// Per-dimension min-max scaling onto [0, 1]. Constant dimensions map to 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let mut mins = vec![f64::INFINITY; x.dim];
        let mut maxs = vec![f64::NEG_INFINITY; x.dim];
        for i in 0..x.rows {
            for (j, &v) in x.row(i).iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        FeatureScaler { mins, maxs }
    }

    pub fn fit_column(values: &[f64]) -> Self {
        Self::fit(&FeatureMatrix { rows: values.len(), dim: 1, values: values.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    #[inline]
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let span = self.maxs[j] - self.mins[j];
        if span > 0.0 {
            (v - self.mins[j]) / span
        } else {
            0.5
        }
    }

    #[inline]
    pub fn unscale(&self, j: usize, s: f64) -> f64 {
        let span = self.maxs[j] - self.mins[j];
        if span > 0.0 {
            self.mins[j] + s * span
        } else {
            self.mins[j]
        }
    }

    pub fn scale_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(x).enumerate() {
            *o = self.scale(j, v);
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mins.len() == self.maxs.len()
            && self.mins.iter().zip(&self.maxs).all(|(lo, hi)| lo.is_finite() && hi.is_finite() && hi >= lo)
    }
}
