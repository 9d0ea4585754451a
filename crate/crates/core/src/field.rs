//! Cell and pair field containers.
//!
//! Scalar fields live on cells and carry a support tag: omega-only fields
//! vanish identically on the halo (states and sources), omega-delta fields
//! are defined on the halo too (conductivities, recovered fluxes). Two-point
//! fields store one value per stored pair `(i, j)` with `i < j`; the value of
//! the reversed orientation is the parity sign times the stored value, so
//! antisymmetric fluxes and symmetric conductivities share one layout.

use crate::grid::{Grid, PairTable, Region};

/// Support of a scalar field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Vanishes identically on halo cells.
    OmegaOnly,
    /// Defined on interior and halo cells.
    OmegaDelta,
}

/// One real value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub support: Support,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, support: Support) -> Self {
        ScalarField {
            values: vec![0.0; grid.cell_count()],
            support,
        }
    }

    /// Constant value on the support (zero on the halo for omega-only).
    pub fn constant(grid: &Grid, support: Support, v: f64) -> Self {
        let mut f = Self::zeros(grid, support);
        for (i, val) in f.values.iter_mut().enumerate() {
            if support == Support::OmegaDelta || grid.regions[i] == Region::Interior {
                *val = v;
            }
        }
        f
    }

    /// Evaluate a function at cell centers over the support.
    pub fn from_fn(grid: &Grid, support: Support, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let mut out = Self::zeros(grid, support);
        for (i, val) in out.values.iter_mut().enumerate() {
            if support == Support::OmegaDelta || grid.regions[i] == Region::Interior {
                *val = f(grid.centers[i]);
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Integration region for cell sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrationRegion {
    Interior,
    All,
}

/// Midpoint-rule integral `h^n * sum` over the requested region.
pub fn integrate_cells(grid: &Grid, field: &ScalarField, region: IntegrationRegion) -> f64 {
    let mut s = 0.0;
    for (i, v) in field.values.iter().enumerate() {
        if region == IntegrationRegion::All || grid.regions[i] == Region::Interior {
            s += v;
        }
    }
    grid.cell_measure() * s
}

/// `L^q` norm over the region, `(h^n sum |v|^q)^{1/q}`.
pub fn lq_norm_cells(grid: &Grid, field: &ScalarField, q: f64, region: IntegrationRegion) -> f64 {
    let mut s = 0.0;
    for (i, v) in field.values.iter().enumerate() {
        if region == IntegrationRegion::All || grid.regions[i] == Region::Interior {
            s += v.abs().powf(q);
        }
    }
    (grid.cell_measure() * s).powf(1.0 / q)
}

/// One n-vector per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub values: Vec<[f64; 2]>,
    pub n: usize,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            values: vec![[0.0; 2]; grid.cell_count()],
            n: grid.n,
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        VectorField {
            values: grid.centers.iter().map(|&c| f(c)).collect(),
            n: grid.n,
        }
    }

    pub fn magnitude(&self, cell: usize) -> f64 {
        let v = self.values[cell];
        (v[0] * v[0] + v[1] * v[1]).sqrt()
    }
}

/// Orientation behavior of a two-point field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `f(x', x) = f(x, x')` (conductivities).
    Symmetric,
    /// `f(x', x) = -f(x, x')` (gradients and fluxes).
    Antisymmetric,
}

impl Parity {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

/// One value per stored pair; the reversed orientation is implied by parity.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointField {
    pub values: Vec<f64>,
    pub parity: Parity,
}

impl TwoPointField {
    pub fn zeros(pairs: &PairTable, parity: Parity) -> Self {
        TwoPointField {
            values: vec![0.0; pairs.entries.len()],
            parity,
        }
    }

    pub fn from_fn(pairs: &PairTable, parity: Parity, f: impl FnMut(usize) -> f64) -> Self {
        TwoPointField {
            values: (0..pairs.entries.len()).map(f).collect(),
            parity,
        }
    }

    /// Value at orientation `(j, i)` for stored entry k.
    #[inline]
    pub fn reversed(&self, k: usize) -> f64 {
        self.parity.sign() * self.values[k]
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }
}

/// `L^q` norm over ordered pairs: `(2 sum |v|^q h^{2n})^{1/q}`, the factor 2
/// accounting for both orientations of each stored pair.
pub fn pair_norm_q(pairs: &PairTable, tp: &TwoPointField, q: f64) -> f64 {
    let s: f64 = tp.values.iter().map(|v| v.abs().powf(q)).sum();
    (2.0 * pairs.w_quad * s).powf(1.0 / q)
}

/// Inner product over ordered pairs,
/// `sum_{(x,x')} a b h^{2n} = (1 + sign_a sign_b) sum_stored a b h^{2n}`.
pub fn pair_inner(pairs: &PairTable, a: &TwoPointField, b: &TwoPointField) -> f64 {
    let factor = 1.0 + a.parity.sign() * b.parity.sign();
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .sum();
    factor * pairs.w_quad * s
}
