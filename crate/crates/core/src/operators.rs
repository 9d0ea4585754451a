//! Nonlocal gradient, divergence, flux recovery and flux lift operators, and
//! the primal/complementary energies, as reductions over the pair table.
//!
//! The divergence is the exact negative transpose of the gradient under the
//! discrete cell and pair inner products, so integration by parts holds to
//! round-off by construction. All operators stream over stored entries and
//! handle the reversed orientation through the field parity, which a dense
//! both-orientations implementation must reproduce (see the tests).

use crate::field::{
    integrate_cells, pair_inner, IntegrationRegion, Parity, ScalarField, Support, TwoPointField,
    VectorField,
};
use crate::grid::{Grid, PairTable};
use crate::kernel::{surface_area, KernelSpec};
use crate::quad::{circle_angles, gauss_legendre_on};
use crate::smooth::SmoothField;
use crate::{spow, Error, Result};

/// Two-point gradient `[u(x) - u(x')] w(x - x')`, antisymmetric.
pub fn nl_gradient(u: &ScalarField, pairs: &PairTable) -> TwoPointField {
    debug_assert_eq!(u.support, Support::OmegaOnly);
    let values = pairs
        .entries
        .iter()
        .map(|e| (u.values[e.i as usize] - u.values[e.j as usize]) * e.w_kernel)
        .collect();
    TwoPointField {
        values,
        parity: Parity::Antisymmetric,
    }
}

/// Nonlocal divergence `h^n sum_j [f(x', x) - f(x, x')] w(x - x')`, evaluated
/// on interior cells (zero on the halo). Symmetric fields map to zero.
pub fn nl_divergence(tp: &TwoPointField, grid: &Grid, pairs: &PairTable) -> ScalarField {
    let mut out = ScalarField::zeros(grid, Support::OmegaOnly);
    let sign = tp.parity.sign();
    for (e, &v) in pairs.entries.iter().zip(&tp.values) {
        let w = e.w_kernel;
        // Contribution to cell i: [f(j,i) - f(i,j)] w; to cell j the negative.
        let to_i = (sign - 1.0) * v * w;
        if grid.is_interior(e.i) {
            out.values[e.i as usize] += to_i;
        }
        if grid.is_interior(e.j) {
            out.values[e.j as usize] -= to_i;
        }
    }
    let measure = grid.cell_measure();
    for v in &mut out.values {
        *v *= measure;
    }
    out
}

/// Integration-by-parts defect
/// `|<div f, u>_cells + <f, grad u>_pairs|`; zero to round-off because the
/// discrete operators are exact transposes.
pub fn adjoint_defect(
    tp: &TwoPointField,
    u: &ScalarField,
    grid: &Grid,
    pairs: &PairTable,
) -> f64 {
    let div = nl_divergence(tp, grid, pairs);
    let grad = nl_gradient(u, pairs);
    let cells: f64 = grid.cell_measure()
        * div
            .values
            .iter()
            .zip(&u.values)
            .map(|(d, uu)| d * uu)
            .sum::<f64>();
    let pairs_ip = pair_inner(pairs, tp, &grad);
    (cells + pairs_ip).abs()
}

/// First-moment flux recovery
/// `h^n sum_j (x - x') f(x, x') w(x - x')`, a vector per cell.
pub fn recover_flux(tp: &TwoPointField, grid: &Grid, pairs: &PairTable) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for (e, &v) in pairs.entries.iter().zip(&tp.values) {
        let w = e.w_kernel;
        let rev = tp.parity.sign() * v;
        for axis in 0..grid.n {
            // Orientation (i, j): offset x_i - x_j; orientation (j, i) flips both.
            out.values[e.i as usize][axis] += e.offset[axis] * v * w;
            out.values[e.j as usize][axis] += -e.offset[axis] * rev * w;
        }
    }
    let measure = grid.cell_measure();
    for v in &mut out.values {
        v[0] *= measure;
        v[1] *= measure;
    }
    out
}

/// Scalar lift density `g(v, z) = |v|^{2-p} |v.z|^{p-2} (v.z)`, with
/// `g(0, z) = 0` in both exponent regimes.
#[inline]
fn lift_g(v: [f64; 2], z: [f64; 2], p: f64, n: usize) -> f64 {
    let mut dot = 0.0;
    let mut norm2 = 0.0;
    for k in 0..n {
        dot += v[k] * z[k];
        norm2 += v[k] * v[k];
    }
    if norm2 == 0.0 {
        return 0.0;
    }
    norm2.sqrt().powf(2.0 - p) * spow(dot, p - 1.0)
}

/// Two-point lift of a vector flux,
/// `(1/2) [g(s(x), x-x') + g(s(x'), x-x')] w^{p-1}(x - x')`, antisymmetric.
pub fn lift_flux(
    sigma: &VectorField,
    spec: &KernelSpec,
    grid: &Grid,
    pairs: &PairTable,
) -> TwoPointField {
    let p = spec.p;
    let values = pairs
        .entries
        .iter()
        .map(|e| {
            let gi = lift_g(sigma.values[e.i as usize], e.offset, p, grid.n);
            let gj = lift_g(sigma.values[e.j as usize], e.offset, p, grid.n);
            0.5 * (gi + gj) * e.w_kernel.powf(p - 1.0)
        })
        .collect();
    TwoPointField {
        values,
        parity: Parity::Antisymmetric,
    }
}

/// Directional flux density `|s(x)|^{2-p} |s(x).s|^{p-2} [s(x).s]` for a unit
/// direction s; zero where the field vanishes.
pub fn j_density(sigma_at_x: [f64; 2], s: [f64; 2], p: f64, n: usize) -> f64 {
    lift_g(sigma_at_x, s, p, n)
}

/// Shell integral of the directional flux density against `|z|^{p-1} w^p(z)`
/// over `eps < |z| < delta`; its `eps -> 0` limit is the nonlocal divergence
/// of the lifted field at x.
///
/// The kernel power integrates in closed form per radial panel; the sphere
/// factor uses the plain product rule, and the field is evaluated at
/// off-grid points through its closed form.
pub fn j_shell_integral(
    sigma: &SmoothField,
    x: [f64; 2],
    spec: &KernelSpec,
    eps: f64,
    sphere_order: usize,
) -> Result<f64> {
    if !(0.0..spec.delta).contains(&eps) {
        return Err(Error::Domain(format!(
            "cutoff eps = {eps} must lie in [0, delta = {})",
            spec.delta
        )));
    }
    let n = spec.n;
    if n > 2 {
        return Err(Error::Domain("shell integrals are evaluated for n in {1, 2}".into()));
    }
    let p = spec.p;
    let area = surface_area(n)?;
    // Sphere average of j(x + r s, s) over the unit sphere directions.
    let sphere_avg = |r: f64| -> f64 {
        match n {
            1 => {
                let jp = j_density(sigma.eval([x[0] + r, 0.0], 1), [1.0, 0.0], p, 1);
                let jm = j_density(sigma.eval([x[0] - r, 0.0], 1), [-1.0, 0.0], p, 1);
                0.5 * (jp + jm)
            }
            _ => {
                let m = sphere_order.max(8);
                circle_angles(m)
                    .map(|t| {
                        let s = [t.cos(), t.sin()];
                        j_density(sigma.eval([x[0] + r * s[0], x[1] + r * s[1]], 2), s, p, 2)
                    })
                    .sum::<f64>()
                    / m as f64
            }
        }
    };
    // Radial factor r^{n-1} r^{p-1} c^p r^{alpha p}; the sphere average is
    // O(r) near zero, so dyadic panels toward the origin converge.
    let gexp = n as f64 + p + spec.alpha * p - 2.0;
    let cp = spec.c_norm.powf(p);
    let floor = if eps > 0.0 {
        eps
    } else {
        spec.delta * 2f64.powi(-40)
    };
    let mut total = 0.0;
    let mut hi = spec.delta;
    while hi > floor {
        let lo = (hi / 2.0).max(floor);
        for &(r, w) in gauss_legendre_on(lo, hi, 16).iter() {
            total += w * cp * r.powf(gexp) * area * sphere_avg(r);
        }
        hi = lo;
    }
    Ok(total)
}

/// Load functional `int_Omega f u`.
pub fn load(u: &ScalarField, f: &ScalarField, grid: &Grid) -> f64 {
    let fu = ScalarField {
        values: f
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| a * b)
            .collect(),
        support: Support::OmegaOnly,
    };
    integrate_cells(grid, &fu, IntegrationRegion::Interior)
}

/// Primal (Dirichlet) energy
/// `(1/p) intint k |grad u|^p - int f u` over ordered pairs.
pub fn energy_primal(
    kappa2pt: &TwoPointField,
    u: &ScalarField,
    f: &ScalarField,
    p: f64,
    grid: &Grid,
    pairs: &PairTable,
) -> f64 {
    debug_assert_eq!(kappa2pt.parity, Parity::Symmetric);
    let grad = nl_gradient(u, pairs);
    let s: f64 = kappa2pt
        .values
        .iter()
        .zip(&grad.values)
        .map(|(k, g)| k * g.abs().powf(p))
        .sum();
    (2.0 * pairs.w_quad / p) * s - load(u, f, grid)
}

/// Complementary (dual) energy with cellwise conductivity:
/// `(1/q) intint [(k^{1-q}(x) + k^{1-q}(x'))/2] |f(x,x')|^q`.
pub fn energy_dual(
    kappa: &ScalarField,
    sigma2pt: &TwoPointField,
    q: f64,
    pairs: &PairTable,
) -> Result<f64> {
    if kappa.min() <= 0.0 {
        return Err(Error::Domain(
            "conductivity must be strictly positive everywhere".into(),
        ));
    }
    let s: f64 = pairs
        .entries
        .iter()
        .zip(&sigma2pt.values)
        .map(|(e, v)| {
            let ri = kappa.values[e.i as usize].powf(1.0 - q);
            let rj = kappa.values[e.j as usize].powf(1.0 - q);
            0.5 * (ri + rj) * v.abs().powf(q)
        })
        .sum();
    Ok(2.0 * pairs.w_quad * s / q)
}

/// Complementary energy in row form,
/// `(1/q) int k^{1-q}(x) int |f(x,x')|^q dx' dx`; equals [`energy_dual`] for
/// any parity because `|f|^q` is orientation-symmetric.
pub fn energy_dual_rowform(
    kappa: &ScalarField,
    sigma2pt: &TwoPointField,
    q: f64,
    grid: &Grid,
    pairs: &PairTable,
) -> Result<f64> {
    if kappa.min() <= 0.0 {
        return Err(Error::Domain(
            "conductivity must be strictly positive everywhere".into(),
        ));
    }
    let density = crate::design::row_density(sigma2pt, q, grid, pairs);
    let s: f64 = kappa
        .values
        .iter()
        .zip(&density.values)
        .map(|(k, a)| k.powf(1.0 - q) * a)
        .sum();
    Ok(grid.cell_measure() * s / q)
}

/// Complementary energy with a two-point conductivity,
/// `(1/q) intint k(x,x')^{1-q} |f(x,x')|^q`.
pub fn energy_dual_2pt(
    kappa2pt: &TwoPointField,
    sigma2pt: &TwoPointField,
    q: f64,
    pairs: &PairTable,
) -> Result<f64> {
    if kappa2pt.values.iter().any(|k| *k <= 0.0) {
        return Err(Error::Domain(
            "two-point conductivity must be strictly positive".into(),
        ));
    }
    let s: f64 = kappa2pt
        .values
        .iter()
        .zip(&sigma2pt.values)
        .map(|(k, v)| k.powf(1.0 - q) * v.abs().powf(q))
        .sum();
    Ok(2.0 * pairs.w_quad * s / q)
}

/// Local complementary energy `(1/q) int_Omega k^{1-q} |s|^q`.
pub fn energy_dual_local(
    kappa: &ScalarField,
    sigma: &VectorField,
    q: f64,
    grid: &Grid,
) -> Result<f64> {
    let mut s = 0.0;
    for &cell in &grid.interior {
        let k = kappa.values[cell as usize];
        if k <= 0.0 {
            return Err(Error::Domain(
                "conductivity must be strictly positive everywhere".into(),
            ));
        }
        s += k.powf(1.0 - q) * sigma.magnitude(cell as usize).powf(q);
    }
    Ok(grid.cell_measure() * s / q)
}
