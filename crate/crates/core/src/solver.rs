//! State solvers.
//!
//! The nonlocal primal problem (minimize the Dirichlet energy over states
//! vanishing on the halo) is solved by damped Newton with an exact dense
//! Cholesky inner solve; for p = 2 the first Newton step lands on the
//! minimizer. The optimal two-point flux follows from the converged state by
//! the pointwise power law, and the report carries the primal/dual energies,
//! the duality gap, and the KKT residuals as certificates.
//!
//! A finite-difference p-Laplacian on an interval with homogeneous Dirichlet
//! conditions serves as the local reference, together with the scalar dual
//! route available in one dimension (divergence-feasible fluxes form a line,
//! so the complementary energy is a one-variable convex minimization), which
//! is used as an independent oracle.

use crate::field::{
    lq_norm_cells, pair_norm_q, IntegrationRegion, Parity, ScalarField, Support, TwoPointField,
};
use crate::grid::{Grid, PairTable};
use crate::kernel::KernelSpec;
use crate::operators::{energy_dual_2pt, energy_primal, nl_divergence, nl_gradient};
use crate::{spow, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Backtracking line-search parameters.
#[derive(Clone, Debug)]
pub struct LineSearch {
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
        }
    }
}

/// Newton solver configuration.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Relative tolerance on the Euler-Lagrange residual (equivalently the
    /// L^q feasibility of the recovered flux against the source).
    pub tol: f64,
    pub max_iter: usize,
    /// Regularization floor for the Hessian weight `(g^2 + eta^2)^{(p-2)/2}`,
    /// scaled by the current gradient magnitude. Zero is admissible only for
    /// p >= 2; for p < 2 a zero value is forced positive with a warning.
    pub eta: f64,
    /// Residual level accepted when the line search stagnates at floating
    /// point resolution. For p < 2 the residual map is Hoelder (not
    /// Lipschitz) in the state wherever a pair gradient crosses zero, so
    /// one-ulp changes of the state move the residual by its (p-1)-th power;
    /// iterates frozen below that floor are reported as converged with the
    /// achieved residual, plus a warning.
    pub acceptable_tol: f64,
    pub line_search: LineSearch,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 200,
            eta: 1e-8,
            acceptable_tol: 1e-7,
            line_search: LineSearch::default(),
        }
    }
}

/// Converged state, optimal flux, and optimality certificates.
#[derive(Clone, Debug)]
pub struct StateReport {
    pub u: ScalarField,
    pub sigma2pt: TwoPointField,
    pub primal_energy: f64,
    pub dual_energy: f64,
    /// `|primal + dual|`; zero at the exact optimum.
    pub duality_gap: f64,
    pub kkt_stationarity: f64,
    /// `||div sigma - f||_q / ||f||_q`.
    pub kkt_feasibility: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Optimal two-point flux from the converged state:
/// `sigma = -k |grad u|^{p-2} grad u` entrywise.
pub fn flux_from_state(
    kappa2pt: &TwoPointField,
    u: &ScalarField,
    p: f64,
    pairs: &PairTable,
) -> TwoPointField {
    debug_assert_eq!(kappa2pt.parity, Parity::Symmetric);
    let grad = nl_gradient(u, pairs);
    TwoPointField {
        values: kappa2pt
            .values
            .iter()
            .zip(&grad.values)
            .map(|(k, g)| -k * spow(*g, p - 1.0))
            .collect(),
        parity: Parity::Antisymmetric,
    }
}

/// KKT residuals with a two-point conductivity.
///
/// Stationarity is the pair norm of `k^{1-q} |sigma|^{q-2} sigma + grad u`
/// (the power law inverted through (p-1)(q-1) = 1); feasibility is
/// `||div sigma - f||_q` over the domain, relative to `||f||_q`.
pub fn kkt_residual_2pt(
    kappa2pt: &TwoPointField,
    sigma2pt: &TwoPointField,
    u: &ScalarField,
    f: &ScalarField,
    q: f64,
    grid: &Grid,
    pairs: &PairTable,
) -> (f64, f64) {
    let grad = nl_gradient(u, pairs);
    let resid = TwoPointField {
        values: kappa2pt
            .values
            .iter()
            .zip(&sigma2pt.values)
            .zip(&grad.values)
            .map(|((k, s), g)| k.powf(1.0 - q) * spow(*s, q - 1.0) + g)
            .collect(),
        parity: Parity::Antisymmetric,
    };
    let stationarity = pair_norm_q(pairs, &resid, q);
    (stationarity, feasibility(sigma2pt, f, q, grid, pairs))
}

/// KKT residuals with a cellwise conductivity lifted through the
/// arithmetic-in-resistivity average.
pub fn kkt_residual(
    kappa: &ScalarField,
    sigma2pt: &TwoPointField,
    u: &ScalarField,
    f: &ScalarField,
    q: f64,
    grid: &Grid,
    pairs: &PairTable,
) -> (f64, f64) {
    let grad = nl_gradient(u, pairs);
    let resid = TwoPointField {
        values: pairs
            .entries
            .iter()
            .zip(&sigma2pt.values)
            .zip(&grad.values)
            .map(|((e, s), g)| {
                let rho = 0.5
                    * (kappa.values[e.i as usize].powf(1.0 - q)
                        + kappa.values[e.j as usize].powf(1.0 - q));
                rho * spow(*s, q - 1.0) + g
            })
            .collect(),
        parity: Parity::Antisymmetric,
    };
    let stationarity = pair_norm_q(pairs, &resid, q);
    (stationarity, feasibility(sigma2pt, f, q, grid, pairs))
}

fn feasibility(
    sigma2pt: &TwoPointField,
    f: &ScalarField,
    q: f64,
    grid: &Grid,
    pairs: &PairTable,
) -> f64 {
    let div = nl_divergence(sigma2pt, grid, pairs);
    let resid = ScalarField {
        values: div
            .values
            .iter()
            .zip(&f.values)
            .map(|(d, ff)| d - ff)
            .collect(),
        support: Support::OmegaOnly,
    };
    let fnorm = lq_norm_cells(grid, f, q, IntegrationRegion::Interior);
    let rnorm = lq_norm_cells(grid, &resid, q, IntegrationRegion::Interior);
    if fnorm > 0.0 {
        rnorm / fnorm
    } else {
        rnorm
    }
}

/// Solve the nonlocal primal problem for the given two-point conductivity
/// and source. `warm` optionally seeds the Newton iteration (used by the
/// design loop); otherwise states start from the quadratic solve.
pub fn solve_primal(
    kappa2pt: &TwoPointField,
    f: &ScalarField,
    spec: &KernelSpec,
    grid: &Grid,
    pairs: &PairTable,
    cfg: &SolverConfig,
    warm: Option<&ScalarField>,
) -> Result<StateReport> {
    debug_assert_eq!(kappa2pt.parity, Parity::Symmetric);
    if kappa2pt.values.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::Domain(
            "two-point conductivity must be strictly positive".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut eta = cfg.eta;
    if eta == 0.0 && spec.p < 2.0 {
        eta = 1e-8;
        warnings.push(format!(
            "eta = 0 is ill-posed for p = {} < 2; forced to {eta}",
            spec.p
        ));
    }

    let problem = NewtonProblem {
        kappa: &kappa2pt.values,
        f,
        grid,
        pairs,
        ls: &cfg.line_search,
    };

    // Continuation ladder: from the quadratic solve, move the exponent
    // geometrically toward the target, each stage warm-starting the next.
    let ladder = |problem: &NewtonProblem| -> Result<(DVector<f64>, usize, bool)> {
        let zeros = vec![0.0; grid.interior_count()];
        let (mut u, mut iters, mut stagnated) =
            problem.newton(2.0, 0.0, zeros, cfg.tol.max(1e-12), cfg.acceptable_tol, cfg.max_iter)?;
        let mut stage = 2.0f64;
        while (stage - spec.p).abs() > 1e-12 {
            stage = if spec.p < 2.0 {
                (0.85 * stage).max(spec.p)
            } else {
                (1.3 * stage).min(spec.p)
            };
            let stage_tol = if (stage - spec.p).abs() > 1e-12 {
                1e-6
            } else {
                cfg.tol
            };
            let (us, it, st) = problem.newton(
                stage,
                eta,
                u.iter().copied().collect(),
                stage_tol,
                cfg.acceptable_tol,
                cfg.max_iter,
            )?;
            u = us;
            iters += it;
            stagnated = st;
        }
        Ok((u, iters, stagnated))
    };

    let (u_dofs, total_iters, stagnated) = match warm {
        Some(w) => {
            let init: Vec<f64> = grid.interior.iter().map(|&c| w.values[c as usize]).collect();
            problem
                .newton(spec.p, eta, init, cfg.tol, cfg.acceptable_tol, cfg.max_iter)
                .or_else(|_| ladder(&problem))?
        }
        None => ladder(&problem)?,
    };
    if stagnated {
        warnings.push(
            "line search stagnated at floating-point resolution above the requested tolerance;              see kkt_feasibility for the achieved residual"
                .into(),
        );
    }

    let mut u = ScalarField::zeros(grid, Support::OmegaOnly);
    for (dof, &cell) in grid.interior.iter().enumerate() {
        u.values[cell as usize] = u_dofs[dof];
    }
    let sigma2pt = flux_from_state(kappa2pt, &u, spec.p, pairs);
    let primal_energy = energy_primal(kappa2pt, &u, f, spec.p, grid, pairs);
    let dual_energy = energy_dual_2pt(kappa2pt, &sigma2pt, spec.q, pairs)?;
    let (kkt_stationarity, kkt_feasibility) =
        kkt_residual_2pt(kappa2pt, &sigma2pt, &u, f, spec.q, grid, pairs);

    Ok(StateReport {
        u,
        sigma2pt,
        primal_energy,
        dual_energy,
        duality_gap: (primal_energy + dual_energy).abs(),
        kkt_stationarity,
        kkt_feasibility,
        iterations: total_iters,
        warnings,
    })
}

struct NewtonProblem<'a> {
    kappa: &'a [f64],
    f: &'a ScalarField,
    grid: &'a Grid,
    pairs: &'a PairTable,
    ls: &'a LineSearch,
}

impl NewtonProblem<'_> {
    fn dof(&self, cell: u32) -> Option<usize> {
        self.grid.interior_index[cell as usize].map(|d| d as usize)
    }

    fn pair_gradients(&self, u: &[f64]) -> Vec<f64> {
        self.pairs
            .entries
            .iter()
            .map(|e| {
                let ui = self.dof(e.i).map_or(0.0, |d| u[d]);
                let uj = self.dof(e.j).map_or(0.0, |d| u[d]);
                (ui - uj) * e.w_kernel
            })
            .collect()
    }

    fn energy(&self, p: f64, u: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, (k, g)) in self
            .pairs
            .entries
            .iter()
            .zip(self.kappa.iter().zip(self.pair_gradients(u)))
        {
            let _ = e;
            s += k * g.abs().powf(p);
        }
        let mut loadsum = 0.0;
        for (dof, &cell) in self.grid.interior.iter().enumerate() {
            loadsum += self.f.values[cell as usize] * u[dof];
        }
        2.0 * self.pairs.w_quad * s / p - self.grid.cell_measure() * loadsum
    }

    /// Gradient of the energy with respect to interior values.
    fn gradient(&self, p: f64, u: &[f64]) -> DVector<f64> {
        let mut grad = DVector::zeros(u.len());
        let gs = self.pair_gradients(u);
        for (e, (k, g)) in self
            .pairs
            .entries
            .iter()
            .zip(self.kappa.iter().zip(&gs))
        {
            let c = 2.0 * self.pairs.w_quad * k * spow(*g, p - 1.0) * e.w_kernel;
            if let Some(d) = self.dof(e.i) {
                grad[d] += c;
            }
            if let Some(d) = self.dof(e.j) {
                grad[d] -= c;
            }
        }
        let measure = self.grid.cell_measure();
        for (dof, &cell) in self.grid.interior.iter().enumerate() {
            grad[dof] -= measure * self.f.values[cell as usize];
        }
        grad
    }

    /// Relative L^q feasibility of the Euler-Lagrange residual,
    /// `||div sigma(u) - f||_q / ||f||_q` (the gradient rescaled by h^n).
    fn residual(&self, q: f64, grad: &DVector<f64>) -> f64 {
        let measure = self.grid.cell_measure();
        let mut rsum = 0.0;
        let mut fsum = 0.0;
        for (dof, &cell) in self.grid.interior.iter().enumerate() {
            rsum += (grad[dof] / measure).abs().powf(q);
            fsum += self.f.values[cell as usize].abs().powf(q);
        }
        let rnorm = (measure * rsum).powf(1.0 / q);
        let fnorm = (measure * fsum).powf(1.0 / q);
        if fnorm > 0.0 {
            rnorm / fnorm
        } else {
            rnorm
        }
    }

    fn hessian(&self, p: f64, eta: f64, u: &[f64]) -> DMatrix<f64> {
        let ndof = u.len();
        let mut h = DMatrix::zeros(ndof, ndof);
        let gs = self.pair_gradients(u);
        for (e, (k, g)) in self
            .pairs
            .entries
            .iter()
            .zip(self.kappa.iter().zip(&gs))
        {
            let weight = 2.0
                * self.pairs.w_quad
                * k
                * (p - 1.0)
                * (g * g + eta * eta).powf((p - 2.0) / 2.0)
                * e.w_kernel
                * e.w_kernel;
            match (self.dof(e.i), self.dof(e.j)) {
                (Some(di), Some(dj)) => {
                    h[(di, di)] += weight;
                    h[(dj, dj)] += weight;
                    h[(di, dj)] -= weight;
                    h[(dj, di)] -= weight;
                }
                (Some(d), None) | (None, Some(d)) => h[(d, d)] += weight,
                (None, None) => {}
            }
        }
        h
    }

    /// Damped Newton: returns the converged interior values, the number of
    /// accepted steps, and whether the stop was a floating-point stagnation
    /// at the acceptable level rather than the requested tolerance.
    fn newton(
        &self,
        p: f64,
        eta: f64,
        init: Vec<f64>,
        tol: f64,
        acceptable: f64,
        max_iter: usize,
    ) -> Result<(DVector<f64>, usize, bool)> {
        let q = p / (p - 1.0);
        let mut u = DVector::from_vec(init);
        let mut energy = self.energy(p, u.as_slice());
        let trace = std::env::var_os("NLPLAP_TRACE").is_some();
        let mut best: Option<(f64, DVector<f64>)> = None;
        for iter in 0..max_iter {
            let grad = self.gradient(p, u.as_slice());
            let res = self.residual(q, &grad);
            if best.as_ref().map_or(true, |(r, _)| res < *r) {
                best = Some((res, u.clone()));
            }
            if trace {
                eprintln!("newton p={p} iter={iter} res={res:.3e} energy={energy:.16e}");
            }
            if res <= tol {
                return Ok((u, iter, false));
            }
            // Scale the regularization floor by the current gradient field,
            // and let it shrink with the residual so the curvature model
            // sharpens near the minimizer.
            let gmax = self
                .pair_gradients(u.as_slice())
                .iter()
                .fold(0.0f64, |m, g| m.max(g.abs()));
            let eta_eff = if p == 2.0 {
                0.0
            } else {
                eta.min(res * res).max(1e-15) * gmax.max(1.0)
            };
            let mut hess = self.hessian(p, eta_eff, u.as_slice());
            let mut ridge = 0.0;
            let chol = loop {
                match nalgebra::Cholesky::new(hess.clone()) {
                    Some(c) => break c,
                    None => {
                        ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
                        if ridge > 1.0 {
                            return Err(Error::Convergence {
                                context: "newton hessian factorization".into(),
                                iterations: iter,
                                residual: res,
                            });
                        }
                        let scale = hess.diagonal().amax().max(1e-300);
                        for d in 0..hess.nrows() {
                            hess[(d, d)] += ridge * scale;
                        }
                    }
                }
            };
            let dir = chol.solve(&(-&grad));
            let slope: f64 = grad.dot(&dir);
            // Backtracking on the energy with sufficient decrease. Steps that
            // would not change the iterate in floating point are stagnation.
            let step_floor = 1e-16 * u.amax().max(1.0) / dir.amax().max(1e-300);
            let mut t = 1.0;
            let mut accepted = false;
            for bt in 0..=self.ls.max_backtracks {
                if t < step_floor {
                    break;
                }
                let trial = &u + t * &dir;
                let etrial = self.energy(p, trial.as_slice());
                if etrial <= energy + self.ls.sufficient_decrease * t * slope && etrial < energy {
                    u = trial;
                    energy = etrial;
                    accepted = true;
                    break;
                }
                // Near the minimizer the energy decrement falls below fp
                // resolution while the residual is still informative: accept
                // the full Newton step on residual halving, without letting
                // the energy rise beyond round-off.
                if bt == 0 && res <= 1e-4 {
                    let rtrial = self.residual(q, &self.gradient(p, trial.as_slice()));
                    if rtrial <= 0.5 * res && etrial <= energy + 1e-14 * energy.abs().max(1e-300)
                    {
                        u = trial;
                        energy = etrial;
                        accepted = true;
                        break;
                    }
                }
                t *= self.ls.shrink;
            }
            if !accepted {
                let (best_res, best_u) = best.expect("at least one iterate");
                if best_res <= acceptable {
                    return Ok((best_u, iter, true));
                }
                return Err(Error::Convergence {
                    context: "newton line search".into(),
                    iterations: iter,
                    residual: best_res,
                });
            }
        }
        let grad = self.gradient(p, u.as_slice());
        let res = self.residual(q, &grad);
        if res <= tol {
            return Ok((u, max_iter, false));
        }
        Err(Error::Convergence {
            context: "newton iteration budget".into(),
            iterations: max_iter,
            residual: res,
        })
    }
}

/// Converged local 1D state: cell values, cell-centered flux, and the local
/// complementary energy of that flux.
#[derive(Clone, Debug)]
pub struct LocalState {
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub i_hat_loc: f64,
    pub iterations: usize,
}

/// Finite-difference p-Laplacian on an interval with homogeneous Dirichlet
/// conditions, solved by damped Newton; the flux is evaluated at cell
/// interfaces and averaged to centers.
///
/// `kappa` and `f` are cell values on a uniform grid of spacing h.
pub fn solve_local_1d(kappa: &[f64], f: &[f64], h: f64, p: f64, cfg: &SolverConfig) -> Result<LocalState> {
    let n = kappa.len();
    if n < 2 || f.len() != n {
        return Err(Error::Config(format!(
            "local solve needs matching kappa/f with at least two cells, got {n}/{}",
            f.len()
        )));
    }
    if kappa.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::Domain("conductivity must be strictly positive".into()));
    }
    let q = p / (p - 1.0);
    let eta = if p == 2.0 { 0.0 } else { cfg.eta.max(1e-12) };

    // Interface data: conductivity, gradient coefficients, and length weight.
    // Interface k sits between cells k-1 and k; the two boundary interfaces
    // see the wall at half-cell distance.
    let iface_kappa = |k: usize| -> f64 {
        if k == 0 {
            kappa[0]
        } else if k == n {
            kappa[n - 1]
        } else {
            0.5 * (kappa[k - 1] + kappa[k])
        }
    };
    let iface_len = |k: usize| -> f64 {
        if k == 0 || k == n {
            0.5 * h
        } else {
            h
        }
    };
    let iface_grad = |k: usize, u: &[f64]| -> f64 {
        if k == 0 {
            2.0 * u[0] / h
        } else if k == n {
            -2.0 * u[n - 1] / h
        } else {
            (u[k] - u[k - 1]) / h
        }
    };

    let energy = |u: &[f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..=n {
            s += iface_len(k) * iface_kappa(k) * iface_grad(k, u).abs().powf(p) / p;
        }
        s - h * f.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    };
    let gradient = |u: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for k in 0..=n {
            let c = iface_len(k) * iface_kappa(k) * spow(iface_grad(k, u), p - 1.0);
            if k == 0 {
                g[0] += c * 2.0 / h;
            } else if k == n {
                g[n - 1] -= c * 2.0 / h;
            } else {
                g[k] += c / h;
                g[k - 1] -= c / h;
            }
        }
        for m in 0..n {
            g[m] -= h * f[m];
        }
        g
    };

    let mut u = vec![0.0; n];
    let mut e = energy(&u);
    let mut iterations = 0;
    let fnorm = (h * f.iter().map(|v| v.abs().powf(q)).sum::<f64>()).powf(1.0 / q);
    for iter in 0..cfg.max_iter {
        let g = gradient(&u);
        let rnorm = (h * g.iter().map(|v| (v / h).abs().powf(q)).sum::<f64>()).powf(1.0 / q);
        let res = if fnorm > 0.0 { rnorm / fnorm } else { rnorm };
        if res <= cfg.tol {
            iterations = iter;
            break;
        }
        if iter + 1 == cfg.max_iter {
            return Err(Error::Convergence {
                context: "local newton".into(),
                iterations: iter,
                residual: res,
            });
        }
        // Tridiagonal Hessian.
        let gmax = (0..=n).fold(0.0f64, |m, k| m.max(iface_grad(k, &u).abs()));
        let eta_eff = eta * gmax.max(1.0);
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for k in 0..=n {
            let gk = iface_grad(k, &u);
            let w = iface_len(k)
                * iface_kappa(k)
                * (p - 1.0)
                * (gk * gk + eta_eff * eta_eff).powf((p - 2.0) / 2.0);
            if k == 0 {
                diag[0] += w * 4.0 / (h * h);
            } else if k == n {
                diag[n - 1] += w * 4.0 / (h * h);
            } else {
                diag[k] += w / (h * h);
                diag[k - 1] += w / (h * h);
                off[k - 1] -= w / (h * h);
            }
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let dir = thomas_solve(&diag, &off, &rhs);
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.line_search.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let etrial = energy(&trial);
            if etrial <= e + cfg.line_search.sufficient_decrease * t * slope {
                u = trial;
                e = etrial;
                accepted = true;
                break;
            }
            t *= cfg.line_search.shrink;
        }
        if !accepted {
            return Err(Error::Convergence {
                context: "local newton line search".into(),
                iterations: iter,
                residual: res,
            });
        }
    }

    // Interface fluxes averaged to centers.
    let iface_sigma: Vec<f64> = (0..=n)
        .map(|k| -iface_kappa(k) * spow(iface_grad(k, &u), p - 1.0))
        .collect();
    let sigma: Vec<f64> = (0..n)
        .map(|m| 0.5 * (iface_sigma[m] + iface_sigma[m + 1]))
        .collect();
    let i_hat_loc =
        h * kappa
            .iter()
            .zip(&sigma)
            .map(|(k, s)| k.powf(1.0 - q) * s.abs().powf(q))
            .sum::<f64>()
            / q;

    Ok(LocalState {
        u,
        sigma,
        i_hat_loc,
        iterations,
    })
}

/// Local complementary value by the 1D dual route: divergence-feasible
/// fluxes on an interval form the line `F + c` with `F' = f`, so
/// `min (1/q) int k^{1-q} |F + c|^q` is a scalar convex minimization, solved
/// here by bisection on the monotone derivative. Independent of the primal
/// finite-difference path.
pub fn local_dual_scalar_1d(kappa: &[f64], f: &[f64], h: f64, q: f64) -> f64 {
    let n = kappa.len();
    // Midpoint antiderivative of f at cell centers.
    let mut antider = vec![0.0; n];
    let mut acc = 0.0;
    for m in 0..n {
        antider[m] = acc + 0.5 * h * f[m];
        acc += h * f[m];
    }
    let rho: Vec<f64> = kappa.iter().map(|k| k.powf(1.0 - q)).collect();
    let dphi = |c: f64| -> f64 {
        rho.iter()
            .zip(&antider)
            .map(|(r, ff)| r * spow(ff + c, q - 1.0))
            .sum()
    };
    let bound = antider.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let mut lo = -bound;
    let mut hi = bound;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    h * rho
        .iter()
        .zip(&antider)
        .map(|(r, ff)| r * (ff + c).abs().powf(q))
        .sum::<f64>()
        / q
}

fn thomas_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let m = diag[k] - off[k - 1] * c[k - 1];
        if k < n - 1 {
            c[k] = off[k] / m;
        }
        d[k] = (rhs[k] - off[k - 1] * d[k - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}
