use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::dynamics::{FieldFn, ScalarFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateForm {
    Quadratic,
    LuriePostnikov,
    PeriodicLuriePostnikov,
    /// Any other closed form.
    General,
}

/// Global-stability theorem a certificate is meant to discharge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremVariant {
    /// Smooth system, unique equilibrium, radially unbounded V.
    BarbashinKrasovsky,
    /// Cylindrical phase space with isolated equilibria.
    LeonovCylindrical,
    /// Differential inclusions (Filippov systems).
    GeligLeonov,
}

/// Lyapunov candidate with its gradient.
#[derive(Clone)]
pub struct Certificate {
    dim: usize,
    value: ScalarFn,
    gradient: FieldFn,
    pub form: CertificateForm,
    pub variant: TheoremVariant,
}

impl fmt::Debug for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Certificate")
            .field("dim", &self.dim)
            .field("form", &self.form)
            .field("variant", &self.variant)
            .finish()
    }
}

impl Certificate {
    pub fn new<V, G>(dim: usize, value: V, gradient: G, form: CertificateForm, variant: TheoremVariant) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            form,
            variant,
        }
    }

    /// `V(x) = x^T H x` with `H` row-major.
    pub fn quadratic(h: Vec<Vec<f64>>, variant: TheoremVariant) -> Self {
        let n = h.len();
        let h1 = Arc::new(h);
        let h2 = h1.clone();
        Self::new(
            n,
            move |x| {
                let mut v = 0.0;
                for (i, row) in h1.iter().enumerate() {
                    for (j, hij) in row.iter().enumerate() {
                        v += x[i] * hij * x[j];
                    }
                }
                v
            },
            move |x, out| {
                for i in 0..n {
                    out[i] = (0..n).map(|j| (h2[i][j] + h2[j][i]) * x[j]).sum();
                }
            },
            CertificateForm::Quadratic,
            variant,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        (self.gradient)(x, &mut g);
        g
    }

    /// Max relative deviation of the analytic gradient from central
    /// differences over `probes`.
    pub fn gradient_fd_error(&self, probes: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in probes {
            let g = self.gradient(x);
            let mut y = x.clone();
            for c in 0..self.dim {
                let h = 1e-6 * (1.0 + x[c].abs());
                y[c] = x[c] + h;
                let vp = self.value(&y);
                y[c] = x[c] - h;
                let vm = self.value(&y);
                y[c] = x[c];
                let fd = (vp - vm) / (2.0 * h);
                let scale = g[c].abs().max(fd.abs()).max(1.0);
                worst = worst.max((g[c] - fd).abs() / scale);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_value_and_gradient() {
        let c = Certificate::quadratic(vec![vec![2.0, 1.0], vec![0.0, 3.0]], TheoremVariant::BarbashinKrasovsky);
        let x = [1.0, -2.0];
        // 2 - 2 + 12
        assert_eq!(c.value(&x), 12.0);
        assert!(c.gradient_fd_error(&[x.to_vec(), vec![0.3, 4.0]]) < 1e-8);
    }
}
