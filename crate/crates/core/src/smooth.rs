//! Closed-form vector fields used by consistency and localization studies.
//!
//! The lift and shell-integral operators act on fields that must be evaluable
//! at arbitrary points (not just cell centers), so the test fields are kept
//! as closed forms with exact divergences.

use serde::{Deserialize, Serialize};

/// A smooth vector field with a closed-form divergence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothField {
    /// Constant field.
    Constant { value: Vec<f64> },
    /// Linear field `x -> A x` (row-major n-by-n matrix).
    Linear { matrix: Vec<f64> },
    /// Compact bump `amp_k * exp(1 - 1/(1 - |x - center|^2 / rho^2))`,
    /// supported strictly inside `|x - center| < rho`.
    Bump {
        center: Vec<f64>,
        rho: f64,
        amp: Vec<f64>,
    },
}

impl SmoothField {
    pub fn eval(&self, x: [f64; 2], n: usize) -> [f64; 2] {
        match self {
            SmoothField::Constant { value } => pad(value),
            SmoothField::Linear { matrix } => {
                let mut out = [0.0; 2];
                for i in 0..n {
                    for j in 0..n {
                        out[i] += matrix[i * n + j] * x[j];
                    }
                }
                out
            }
            SmoothField::Bump { center, rho, amp } => {
                let phi = bump_profile(x, center, *rho, n).0;
                let a = pad(amp);
                [a[0] * phi, a[1] * phi]
            }
        }
    }

    pub fn divergence(&self, x: [f64; 2], n: usize) -> f64 {
        match self {
            SmoothField::Constant { .. } => 0.0,
            SmoothField::Linear { matrix } => (0..n).map(|i| matrix[i * n + i]).sum(),
            SmoothField::Bump { center, rho, amp } => {
                let (_, grad) = bump_profile(x, center, *rho, n);
                let a = pad(amp);
                (0..n).map(|k| a[k] * grad[k]).sum()
            }
        }
    }

    /// Largest distance from `center` with nonzero values, if compact.
    pub fn support_radius(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            SmoothField::Bump { center, rho, .. } => Some((center.clone(), *rho)),
            _ => None,
        }
    }
}

fn pad(v: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}

/// Bump profile `exp(1 - 1/(1 - t^2))` with `t = |x - c|/rho`, and its
/// spatial gradient. Both vanish (with all derivatives) at `t >= 1`.
fn bump_profile(x: [f64; 2], center: &[f64], rho: f64, n: usize) -> (f64, [f64; 2]) {
    let mut d = [0.0; 2];
    let mut t2 = 0.0;
    for k in 0..n {
        d[k] = x[k] - center[k];
        t2 += d[k] * d[k];
    }
    t2 /= rho * rho;
    if t2 >= 1.0 {
        return (0.0, [0.0; 2]);
    }
    let one_m = 1.0 - t2;
    let phi = (1.0 - 1.0 / one_m).exp();
    // d phi / d(t^2) = -phi / (1 - t^2)^2; d(t^2)/dx_k = 2 d_k / rho^2.
    let factor = -2.0 * phi / (one_m * one_m * rho * rho);
    let mut grad = [0.0; 2];
    for k in 0..n {
        grad[k] = factor * d[k];
    }
    (phi, grad)
}
