//! Cell-centered grids over the domain and its delta-halo, and the
//! delta-neighbor pair table.
//!
//! Cells are uniform with size h; centers sit at half-integer lattice
//! offsets. A cell is tagged interior when its center lies in the domain and
//! halo when its center lies within the collar reached by interactions of
//! range delta. The pair table lists every unordered pair of cells closer
//! than delta (strictly), in lexicographic `(i, j)` order, so two builds of
//! the same configuration are byte-identical.
//!
//! Pair entries carry two kernel weights. `w_omega` is the pointwise kernel
//! value at the pair distance. `w_kernel` is the weight actually used by the
//! operators: a moment-calibrated value in which each lattice-distance class
//! absorbs the kernel p-mass of its radial band, including the sub-cell band
//! near the diagonal and the sliver at the horizon. The calibrated table
//! satisfies `sum_j h^n (r w_kernel)^p = 1/K_{p,n}` exactly on full stencils;
//! with raw pointwise weights that sum falls short by O(h/delta), which does
//! not vanish along sweeps that refine delta at fixed delta/h and visibly
//! biases state energies (see `pointwise_weights_undershoot_the_moment`).

use crate::kernel::KernelSpec;
use crate::{Error, Result};

/// Axis-aligned computational domain: an interval or a box.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Box2 { a: [f64; 2], b: [f64; 2] },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box2 { .. } => 2,
        }
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        match self {
            Domain::Interval { a, b } => (*a, *b),
            Domain::Box2 { a, b } => (a[axis], b[axis]),
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..self.dim()).all(|k| {
            let (a, b) = self.bounds(k);
            x[k] > a && x[k] < b
        })
    }

    /// Euclidean distance from a point to the closed domain.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim() {
            let (a, b) = self.bounds(k);
            let d = (a - x[k]).max(0.0).max(x[k] - b);
            s += d * d;
        }
        s.sqrt()
    }

    pub fn measure(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => b - a,
            Domain::Box2 { a, b } => (b[0] - a[0]) * (b[1] - a[1]),
        }
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.dim() {
            let (a, b) = self.bounds(k);
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                return Err(Error::Config(format!(
                    "domain axis {k} has empty or non-finite extent [{a}, {b}]"
                )));
            }
        }
        Ok(())
    }
}

/// Region tag of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Center inside the domain.
    Interior,
    /// Center in the delta-collar around the domain.
    Halo,
}

/// Uniform cell-centered grid over the domain plus its halo.
#[derive(Clone, Debug)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub delta: f64,
    pub domain: Domain,
    pub centers: Vec<[f64; 2]>,
    pub regions: Vec<Region>,
    /// Cell ids of interior cells, ascending.
    pub interior: Vec<u32>,
    /// Dense map cell id -> interior dof index.
    pub interior_index: Vec<Option<u32>>,
    /// Note emitted when the domain was snapped to a multiple of h.
    pub snap_note: Option<String>,
    // Lattice bookkeeping for neighbor lookup.
    lattice_origin: [i64; 2],
    lattice_dims: [usize; 2],
    lattice_to_cell: Vec<Option<u32>>,
}

impl Grid {
    pub fn cell_count(&self) -> usize {
        self.centers.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Discrete measure of the domain, `h^n * #interior`.
    pub fn domain_measure(&self) -> f64 {
        self.cell_measure() * self.interior_count() as f64
    }

    pub fn is_interior(&self, cell: u32) -> bool {
        self.regions[cell as usize] == Region::Interior
    }

    fn cell_at(&self, coords: [i64; 2]) -> Option<u32> {
        let mut idx = 0usize;
        for axis in (0..self.n).rev() {
            let off = coords[axis] - self.lattice_origin[axis];
            if off < 0 || off as usize >= self.lattice_dims[axis] {
                return None;
            }
            idx = idx * self.lattice_dims[axis] + off as usize;
        }
        self.lattice_to_cell[idx]
    }
}

/// Build the grid: interior cells tile the (snapped) domain, halo cells cover
/// the delta-collar. Rejects horizons finer than two cells.
pub fn build_grid(domain: &Domain, h: f64, delta: f64) -> Result<Grid> {
    domain.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("cell size h = {h} must be positive")));
    }
    if delta < 2.0 * h {
        return Err(Error::Resolution { delta, min: 2.0 * h });
    }
    let n = domain.dim();

    // Snap side lengths to integer multiples of h.
    let mut lo = [0.0f64; 2];
    let mut cells_per_axis = [1usize; 2];
    let mut snapped = false;
    let mut snapped_domain = domain.clone();
    for axis in 0..n {
        let (a, b) = domain.bounds(axis);
        let m = ((b - a) / h).round().max(1.0);
        if ((b - a) - m * h).abs() > 1e-9 * (b - a).max(h) {
            snapped = true;
        }
        lo[axis] = a;
        cells_per_axis[axis] = m as usize;
    }
    if snapped {
        match &mut snapped_domain {
            Domain::Interval { a, b } => *b = *a + cells_per_axis[0] as f64 * h,
            Domain::Box2 { a, b } => {
                for axis in 0..2 {
                    b[axis] = a[axis] + cells_per_axis[axis] as f64 * h;
                }
            }
        }
    }
    let snap_note = snapped.then(|| {
        format!("domain side lengths snapped to multiples of h = {h}: {snapped_domain:?}")
    });

    // Halo inclusion rule: keep a non-interior cell when its center lies
    // strictly within delta + h/2 of the domain. Any halo center that can
    // pair with an interior center sits within delta - h/2 of the domain, so
    // the rule keeps every cell the operators can reach. The small guard
    // resolves the exact tie at distance delta + h/2 (hit whenever delta/h
    // is an integer) identically on all sides regardless of rounding.
    let reach = delta + 0.5 * h - 1e-9 * h;
    let scan = (delta / h).ceil() as i64 + 2;

    let mut origin = [0i64; 2];
    let mut dims = [1usize; 2];
    for axis in 0..n {
        origin[axis] = -scan;
        dims[axis] = cells_per_axis[axis] + 2 * scan as usize;
    }

    let mut centers = Vec::new();
    let mut regions = Vec::new();
    let mut lattice_to_cell = vec![None; dims[..n].iter().product::<usize>().max(1)];
    let scan_cell = |coords: [i64; 2]| -> Option<(Region, [f64; 2])> {
        let mut x = [0.0f64; 2];
        for axis in 0..n {
            x[axis] = lo[axis] + (coords[axis] as f64 + 0.5) * h;
        }
        if snapped_domain.contains(x) {
            Some((Region::Interior, x))
        } else if snapped_domain.distance(x) < reach {
            Some((Region::Halo, x))
        } else {
            None
        }
    };

    if n == 1 {
        for (flat, kx) in (origin[0]..origin[0] + dims[0] as i64).enumerate() {
            if let Some((region, x)) = scan_cell([kx, 0]) {
                lattice_to_cell[flat] = Some(centers.len() as u32);
                centers.push(x);
                regions.push(region);
            }
        }
    } else {
        for (fy, ky) in (origin[1]..origin[1] + dims[1] as i64).enumerate() {
            for (fx, kx) in (origin[0]..origin[0] + dims[0] as i64).enumerate() {
                if let Some((region, x)) = scan_cell([kx, ky]) {
                    lattice_to_cell[fy * dims[0] + fx] = Some(centers.len() as u32);
                    centers.push(x);
                    regions.push(region);
                }
            }
        }
    }

    let interior: Vec<u32> = regions
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == Region::Interior)
        .map(|(i, _)| i as u32)
        .collect();
    let mut interior_index = vec![None; centers.len()];
    for (dof, &cell) in interior.iter().enumerate() {
        interior_index[cell as usize] = Some(dof as u32);
    }

    Ok(Grid {
        n,
        h,
        delta,
        domain: snapped_domain,
        centers,
        regions,
        interior,
        interior_index,
        snap_note,
        lattice_origin: origin,
        lattice_dims: dims,
        lattice_to_cell,
    })
}

/// One unordered cell pair with `i < j`, its geometry, and kernel weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PairEntry {
    pub i: u32,
    pub j: u32,
    /// Center distance, strictly inside (0, delta).
    pub r: f64,
    /// `x_i - x_j`.
    pub offset: [f64; 2],
    /// Pointwise kernel value omega(r).
    pub w_omega: f64,
    /// Moment-calibrated kernel weight used by the operators.
    pub w_kernel: f64,
}

/// All delta-neighbor pairs of a grid, lexicographic in `(i, j)`.
#[derive(Clone, Debug)]
pub struct PairTable {
    pub entries: Vec<PairEntry>,
    pub n: usize,
    /// Pair quadrature weight, `h^{2n}`.
    pub w_quad: f64,
    pub delta: f64,
}

/// Choice of kernel weight carried into the operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelQuadrature {
    /// Per distance class, the class absorbs the kernel p-mass of its radial
    /// band, so the discrete p-th moment matches `1/K_{p,n}` exactly.
    Calibrated,
    /// Raw pointwise kernel values omega(r).
    Pointwise,
}

/// Build the pair table with calibrated kernel weights (the default).
pub fn build_pairs(grid: &Grid, spec: &KernelSpec) -> PairTable {
    build_pairs_with(grid, spec, KernelQuadrature::Calibrated)
}

pub fn build_pairs_with(grid: &Grid, spec: &KernelSpec, quadrature: KernelQuadrature) -> PairTable {
    let n = grid.n;
    let h = grid.h;
    let delta = spec.delta;

    // Lattice offsets with 0 < |dk| h < delta, positive in scan order so each
    // unordered pair appears exactly once with i < j.
    let reach = (delta / h).ceil() as i64;
    let mut offsets: Vec<([i64; 2], f64)> = Vec::new();
    let mut push_offset = |dk: [i64; 2]| {
        let r2 = (dk[0] * dk[0] + dk[1] * dk[1]) as f64;
        let r = h * r2.sqrt();
        if r > 0.0 && r < delta {
            offsets.push((dk, r));
        }
    };
    if n == 1 {
        for dx in 1..=reach {
            push_offset([dx, 0]);
        }
    } else {
        for dy in 0..=reach {
            let x_lo = if dy == 0 { 1 } else { -reach };
            for dx in x_lo..=reach {
                push_offset([dx, dy]);
            }
        }
    }
    offsets.sort_by(|a, b| (a.0[1], a.0[0]).cmp(&(b.0[1], b.0[0])));

    let weight_of = calibration_weights(&offsets, spec, h, quadrature);

    let mut entries = Vec::new();
    let coords_of = |cell: u32| -> [i64; 2] {
        let x = grid.centers[cell as usize];
        let mut c = [0i64; 2];
        for axis in 0..n {
            let (a, _) = grid.domain.bounds(axis);
            c[axis] = ((x[axis] - a) / h - 0.5).round() as i64;
        }
        c
    };
    for i in 0..grid.cell_count() as u32 {
        let ci = coords_of(i);
        for (k, &(dk, r)) in offsets.iter().enumerate() {
            let cj = [ci[0] + dk[0], ci[1] + dk[1]];
            if let Some(j) = grid.cell_at(cj) {
                debug_assert!(j > i);
                let mut offset = [0.0f64; 2];
                for axis in 0..n {
                    offset[axis] = -(dk[axis] as f64) * h;
                }
                entries.push(PairEntry {
                    i,
                    j,
                    r,
                    offset,
                    w_omega: spec.omega_positive(r),
                    w_kernel: weight_of[k],
                });
            }
        }
    }

    PairTable {
        entries,
        n,
        w_quad: h.powi(2 * n as i32),
        delta,
    }
}

/// Per-offset kernel weight. For `Calibrated`, distinct lattice distances
/// partition `(0, delta)` into radial bands at midpoints between consecutive
/// distances (first band reaching down to 0, last one up to delta), and each
/// class takes the weight that reproduces its band's p-mass:
/// `count * h^n * r^p * w^p = int_band |z|^p omega^p dz`.
fn calibration_weights(
    offsets: &[([i64; 2], f64)],
    spec: &KernelSpec,
    h: f64,
    quadrature: KernelQuadrature,
) -> Vec<f64> {
    if quadrature == KernelQuadrature::Pointwise {
        return offsets.iter().map(|&(_, r)| spec.omega_positive(r)).collect();
    }
    // Distance classes among the full offset lattice (both orientations):
    // each stored offset represents itself and its negation, so class counts
    // are twice the stored multiplicity.
    let mut radii: Vec<f64> = offsets.iter().map(|&(_, r)| r).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * h);

    let mut class_weight: Vec<(f64, f64)> = Vec::with_capacity(radii.len());
    for (c, &r) in radii.iter().enumerate() {
        let lo = if c == 0 { 0.0 } else { 0.5 * (radii[c - 1] + r) };
        let hi = if c + 1 == radii.len() {
            spec.delta
        } else {
            (0.5 * (r + radii[c + 1])).min(spec.delta)
        };
        let count = 2.0
            * offsets
                .iter()
                .filter(|&&(_, rr)| (rr - r).abs() < 1e-12 * h)
                .count() as f64;
        let mass = spec
            .radial_moment_mass(lo, hi)
            .expect("dimension validated by KernelSpec");
        let w = (mass / (count * h.powi(spec.n as i32) * r.powf(spec.p))).powf(1.0 / spec.p);
        class_weight.push((r, w));
    }

    offsets
        .iter()
        .map(|&(_, r)| {
            class_weight
                .iter()
                .find(|(cr, _)| (cr - r).abs() < 1e-12 * h)
                .expect("every offset distance belongs to a class")
                .1
        })
        .collect()
}
