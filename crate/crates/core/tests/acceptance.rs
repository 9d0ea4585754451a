//! Acceptance suite: every contract criterion at its stated tolerance, one
//! pass/fail line per criterion. Run with
//! `cargo test -p nlplap --test acceptance -- --nocapture` to see the lines.

use nlplap::config::{KappaSpec, RunConfig};
use nlplap::design::{design_alternate, design_local_1d, make_kappa2pt, AdmissibleSet, OuterConfig};
use nlplap::field::{
    lq_norm_cells, pair_inner, IntegrationRegion, Parity, ScalarField, Support, TwoPointField,
    VectorField,
};
use nlplap::grid::{build_grid, build_pairs, Domain, Grid, PairTable};
use nlplap::kernel::{closed_form_kpn, quad_kpn, verify_trace_identity, verify_trace_volume, KernelSpec};
use nlplap::operators::{
    adjoint_defect, energy_dual, energy_dual_local, lift_flux, nl_divergence, nl_gradient,
    recover_flux,
};
use nlplap::quad::gauss_legendre_on;
use nlplap::smooth::SmoothField;
use nlplap::solver::{solve_local_1d, solve_primal, SolverConfig, StateReport};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Outcome { name, pass, detail }
    }
}

/// A solved state kept around for the recovery-bound criterion.
struct SolvedCase {
    grid: Grid,
    pairs: PairTable,
    q: f64,
    kappa: ScalarField,
    state: StateReport,
}

fn grid_1d(cells: usize, ratio: usize, p: f64, alpha: f64) -> (Grid, PairTable, KernelSpec) {
    let h = 1.0 / cells as f64;
    let delta = ratio as f64 * h;
    let spec = KernelSpec::new(1, p, delta, alpha).unwrap();
    let grid = build_grid(&Domain::Interval { a: 0.0, b: 1.0 }, h, delta).unwrap();
    let pairs = build_pairs(&grid, &spec);
    (grid, pairs, spec)
}

// Criterion 1: kernel constants agree between quadrature and closed form;
// the scalar and quadratic identities hold to near round-off.
fn criterion_kernel_constants() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for n in 1..=3usize {
            let order = if n == 2 { 4096 } else { 128 };
            let cf = closed_form_kpn(p, n).unwrap();
            let quad = quad_kpn(p, n, order).unwrap();
            worst_rel = worst_rel.max((quad - cf).abs() / cf);
        }
        worst_exact = worst_exact.max((closed_form_kpn(p, 1).unwrap() - 1.0).abs());
    }
    for n in 1..=3usize {
        worst_exact =
            worst_exact.max((closed_form_kpn(2.0, n).unwrap() - 1.0 / n as f64).abs());
    }
    Outcome::new(
        "1 kernel constants",
        worst_rel < 1e-8 && worst_exact < 1e-14,
        format!("max quad/closed rel {worst_rel:.2e}, max exact defect {worst_exact:.2e}"),
    )
}

// Criterion 2: the weighted-sphere trace identity and its shell form over
// seeded random directions and matrices.
fn criterion_trace_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for &p in &[1.5, 2.0, 3.0] {
        for n in 2..=3usize {
            let spec = KernelSpec::new(n, p, 0.4, -1.0).unwrap();
            for _ in 0..20 {
                let e = random_unit(&mut rng, n);
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
                let (lhs, rhs) = verify_trace_identity(&e, &a, p, n, 64).unwrap();
                worst = worst.max((lhs - rhs).abs() / (1.0 + tr.abs()));
                let (lhs, rhs) =
                    verify_trace_volume(&e, &a, &spec, 1e-6 * spec.delta, 64).unwrap();
                worst = worst.max((lhs - rhs).abs() / (1.0 + tr.abs()));
            }
        }
    }
    Outcome::new(
        "2 trace identities",
        worst < 1e-8,
        format!("max scaled defect {worst:.2e}"),
    )
}

// Criterion 3: discrete integration by parts to round-off on random draws.
fn criterion_adjointness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (g1, p1, _) = grid_1d(64, 4, 2.0, -1.0);
    let h2 = 1.0 / 16.0;
    let spec2 = KernelSpec::new(2, 2.0, 4.0 * h2, -1.0).unwrap();
    let g2 = build_grid(
        &Domain::Box2 {
            a: [0.0, 0.0],
            b: [1.0, 1.0],
        },
        h2,
        4.0 * h2,
    )
    .unwrap();
    let p2 = build_pairs(&g2, &spec2);

    let mut worst: f64 = 0.0;
    for (g, pairs) in [(&g1, &p1), (&g2, &p2)] {
        for _ in 0..50 {
            let mut u = ScalarField::zeros(g, Support::OmegaOnly);
            for &cell in &g.interior {
                u.values[cell as usize] = rng.random_range(-1.0..1.0);
            }
            let tp = TwoPointField {
                values: (0..pairs.entries.len())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
                parity: Parity::Antisymmetric,
            };
            let defect = adjoint_defect(&tp, &u, g, pairs);
            let div = nl_divergence(&tp, g, pairs);
            let cells = g.cell_measure()
                * div
                    .values
                    .iter()
                    .zip(&u.values)
                    .map(|(d, uu)| d * uu)
                    .sum::<f64>();
            let pairs_ip = pair_inner(pairs, &tp, &nl_gradient(&u, pairs));
            let scale = cells.abs() + pairs_ip.abs();
            worst = worst.max(defect / scale.max(1e-300));
        }
    }
    Outcome::new(
        "3 discrete adjointness",
        worst < 1e-12,
        format!("max defect/scale {worst:.2e}"),
    )
}

// Criterion 4: strong duality and KKT feasibility certificates at solver
// tolerance 1e-10 with random conductivities.
fn criterion_strong_duality() -> (Outcome, Vec<SolvedCase>) {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut cases = Vec::new();
    let mut worst_gap: f64 = 0.0;
    let mut worst_feas: f64 = 0.0;
    for &p in &[1.5, 2.0, 3.0] {
        let (grid, pairs, spec) = grid_1d(128, 4, p, -1.0);
        let f = ScalarField::constant(&grid, Support::OmegaOnly, 1.0);
        let kappa = ScalarField::from_fn(&grid, Support::OmegaDelta, |_| {
            rng.random_range(1.0..2.0)
        });
        let kappa2pt = make_kappa2pt(&kappa, spec.q, &pairs).unwrap();
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let state = solve_primal(&kappa2pt, &f, &spec, &grid, &pairs, &cfg, None).unwrap();
        worst_gap = worst_gap.max(state.duality_gap / state.primal_energy.abs().max(1e-300));
        worst_feas = worst_feas.max(state.kkt_feasibility);
        cases.push(SolvedCase {
            grid,
            pairs,
            q: spec.q,
            kappa,
            state,
        });
    }
    let outcome = Outcome::new(
        "4 strong duality",
        worst_gap < 1e-6 && worst_feas < 1e-8,
        format!("max rel gap {worst_gap:.2e}, max feasibility {worst_feas:.2e}"),
    );
    (outcome, cases)
}

// Criterion 5: state values localize onto the analytic local value 1/24.
fn criterion_state_localization() -> (Outcome, Vec<SolvedCase>) {
    let mut cases = Vec::new();
    let mut errors = Vec::new();
    for &delta in &[0.2f64, 0.1, 0.05] {
        let h = delta / 8.0;
        let cells = (1.0 / h).round() as usize;
        let (grid, pairs, spec) = grid_1d(cells, 8, 2.0, -1.499);
        let f = ScalarField::constant(&grid, Support::OmegaOnly, 1.0);
        let kappa = ScalarField::constant(&grid, Support::OmegaDelta, 1.0);
        let kappa2pt = make_kappa2pt(&kappa, spec.q, &pairs).unwrap();
        let state = solve_primal(
            &kappa2pt,
            &f,
            &spec,
            &grid,
            &pairs,
            &SolverConfig::default(),
            None,
        )
        .unwrap();
        let value = -state.primal_energy;
        errors.push((value - 1.0 / 24.0).abs() * 24.0);
        cases.push(SolvedCase {
            grid,
            pairs,
            q: spec.q,
            kappa,
            state,
        });
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let last = *errors.last().unwrap();
    let outcome = Outcome::new(
        "5 state localization",
        monotone && last < 0.02,
        format!(
            "relative errors {:?}, final {last:.4}",
            errors.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>()
        ),
    );
    (outcome, cases)
}

// Criterion 6: consistency of the lifted flux divergence, with empirical
// orders from horizon halving.
fn criterion_consistency() -> Outcome {
    let sigma = SmoothField::Bump {
        center: vec![0.5],
        rho: 0.25,
        amp: vec![1.0],
    };
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let mut detail = String::new();
    let mut pass = true;
    for &p in &[1.5, 2.0, 3.0] {
        let mut errs = Vec::new();
        for &delta in &deltas {
            let h: f64 = delta / 8.0;
            let cells = (1.0 / h).round() as usize;
            let (grid, pairs, spec) = grid_1d(cells, 8, p, -1.0);
            let field = VectorField::from_fn(&grid, |x| sigma.eval(x, 1));
            let lifted = lift_flux(&field, &spec, &grid, &pairs);
            let div = nl_divergence(&lifted, &grid, &pairs);
            let defect = ScalarField {
                values: grid
                    .centers
                    .iter()
                    .zip(&div.values)
                    .enumerate()
                    .map(|(i, (c, d))| {
                        if grid.is_interior(i as u32) {
                            d - sigma.divergence(*c, 1)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                support: Support::OmegaOnly,
            };
            errs.push(lq_norm_cells(
                &grid,
                &defect,
                spec.q,
                IntegrationRegion::Interior,
            ));
        }
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        let order = (errs[2] / errs[3]).log2();
        let order_needed = if p == 2.0 {
            0.8
        } else if p > 2.0 {
            0.8 * (p - 2.0).min(1.0)
        } else {
            f64::NEG_INFINITY
        };
        let ok = decreasing && order >= order_needed;
        pass &= ok;
        detail.push_str(&format!("p={p}: final order {order:.2}, decreasing {decreasing}; "));
    }
    Outcome::new("6 consistency", pass, detail)
}

// Criterion 7: the recovered flux of every solved state obeys the
// complementary-energy bound.
fn criterion_recovery_bound(cases: &[SolvedCase]) -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    for case in cases {
        let nonlocal = energy_dual(&case.kappa, &case.state.sigma2pt, case.q, &case.pairs).unwrap();
        let rec = recover_flux(&case.state.sigma2pt, &case.grid, &case.pairs);
        let local = energy_dual_local(&case.kappa, &rec, case.q, &case.grid).unwrap();
        worst = worst.max(local / nonlocal - 1.0);
    }
    Outcome::new(
        "7 recovery bound",
        worst <= 1e-10,
        format!("max slack {worst:.2e} over {} states", cases.len()),
    )
}

// Criterion 8: complementary energy of the lifted smooth flux approaches the
// local complementary energy from below (up to a shrinking excess).
fn criterion_norm_stability() -> Outcome {
    let sigma = SmoothField::Bump {
        center: vec![0.5],
        rho: 0.25,
        amp: vec![1.0],
    };
    let mut detail = String::new();
    let mut pass = true;
    for &p in &[1.5, 2.0, 3.0] {
        let q = p / (p - 1.0);
        // Local complementary value by fine Gauss panels over the support.
        let mut local = 0.0;
        for &(x, w) in gauss_legendre_on(0.25, 0.75, 400).iter() {
            local += w * sigma.eval([x, 0.0], 1)[0].abs().powf(q);
        }
        local /= q;
        let mut gaps = Vec::new();
        for &delta in &[0.2f64, 0.1, 0.05] {
            let h = delta / 8.0;
            let cells = (1.0 / h).round() as usize;
            let (grid, pairs, spec) = grid_1d(cells, 8, p, -1.0);
            let field = VectorField::from_fn(&grid, |x| sigma.eval(x, 1));
            let lifted = lift_flux(&field, &spec, &grid, &pairs);
            let ones = ScalarField::constant(&grid, Support::OmegaDelta, 1.0);
            let nonlocal = energy_dual(&ones, &lifted, q, &pairs).unwrap();
            gaps.push(nonlocal - local);
        }
        // The difference vanishes with the horizon and never leaves a
        // persistent excess over the local value.
        let shrinking = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
        let ok = shrinking && *gaps.last().unwrap() <= 1e-3;
        pass &= ok;
        detail.push_str(&format!(
            "p={p}: gaps [{}]; ",
            gaps.iter()
                .map(|g| format!("{g:+.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    Outcome::new("8 norm stability", pass, detail)
}

// Criterion 9: design values localize onto the local design value, and the
// local design loop agrees with a brute-force search.
fn criterion_design_gamma() -> (Outcome, Vec<nlplap::design::DesignReport>) {
    // Halo extension at the upper bound: the optimal design is largest near
    // the boundary (the flux magnitude peaks there), so this extension
    // minimizes the artificial boundary-layer mismatch.
    let adm = AdmissibleSet::new(0.5, 2.0, 1.0, 2.0).unwrap();
    let solver_cfg = SolverConfig::default();
    let outer = OuterConfig::default();

    // Local reference on a fine grid.
    let n_ref = 1024;
    let h_ref = 1.0 / n_ref as f64;
    let f_ref = vec![1.0; n_ref];
    let d_loc = design_local_1d(&f_ref, &adm, 2.0, h_ref, &solver_cfg, &outer)
        .unwrap()
        .objective;

    // Horizon sweep of the nonlocal design value.
    let mut errors = Vec::new();
    let mut reports = Vec::new();
    for &delta in &[0.2f64, 0.1, 0.05] {
        let h = delta / 8.0;
        let cells = (1.0 / h).round() as usize;
        let (grid, pairs, spec) = grid_1d(cells, 8, 2.0, -1.499);
        let f = ScalarField::constant(&grid, Support::OmegaOnly, 1.0);
        let report =
            design_alternate(&f, &adm, &spec, &grid, &pairs, &solver_cfg, &outer).unwrap();
        errors.push((report.objective - d_loc).abs() / d_loc);
        reports.push(report);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let final_err = *errors.last().unwrap();

    // Brute-force oracle on an 8-cell local grid: the data are mirror
    // symmetric and the problem is convex in the resistivity, so the search
    // runs over symmetric designs on a 17-level quantization.
    let n8 = 8;
    let h8 = 1.0 / n8 as f64;
    let f8 = vec![1.0; n8];
    let levels: Vec<f64> = (0..17).map(|k| 0.5 + 1.5 * k as f64 / 16.0).collect();
    let mut best = f64::INFINITY;
    for &k0 in &levels {
        for &k1 in &levels {
            for &k2 in &levels {
                for &k3 in &levels {
                    let kappa = [k0, k1, k2, k3, k3, k2, k1, k0];
                    let vol: f64 = h8 * kappa.iter().sum::<f64>();
                    if vol > adm.volume * (1.0 + 1e-9) {
                        continue;
                    }
                    let val = solve_local_1d(&kappa, &f8, h8, 2.0, &solver_cfg)
                        .unwrap()
                        .i_hat_loc;
                    if val < best {
                        best = val;
                    }
                }
            }
        }
    }
    let alg8 = design_local_1d(&f8, &adm, 2.0, h8, &solver_cfg, &outer)
        .unwrap()
        .objective;
    let brute_rel = (alg8 - best).abs() / best;

    let outcome = Outcome::new(
        "9 design localization",
        monotone && final_err < 0.05 && brute_rel < 0.01,
        format!(
            "design errors {:?} (final {final_err:.4}), brute-force agreement {brute_rel:.4}",
            errors.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>()
        ),
    );
    (outcome, reports)
}

// Criterion 10: design-loop invariants on the sweep reports.
fn criterion_design_invariants(reports: &[nlplap::design::DesignReport]) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for (k, report) in reports.iter().enumerate() {
        let monotone = report
            .objective_history
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
        let volume_ok = report.volume_used <= 1.0 + 1e-8;
        let gaps_ok = report.inner_gaps.iter().all(|g| *g < 1e-8);
        // Mirror symmetry of the final design over the domain cells.
        let kappa = &report.interior_kappa;
        let n = kappa.len();
        let mut asym: f64 = 0.0;
        for i in 0..n / 2 {
            asym = asym.max((kappa[i] - kappa[n - 1 - i]).abs());
        }
        pass &= monotone && volume_ok && gaps_ok && asym <= 1e-10;
        detail.push_str(&format!(
            "run {k}: monotone {monotone}, volume {:.9}, inner gaps ok {gaps_ok}, asymmetry {asym:.2e}; ",
            report.volume_used
        ));
    }
    Outcome::new("10 design invariants", pass, detail)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    outcomes.push(criterion_kernel_constants());
    outcomes.push(criterion_trace_identities());
    outcomes.push(criterion_adjointness());
    let (duality, mut cases) = criterion_strong_duality();
    outcomes.push(duality);
    let (localization, more_cases) = criterion_state_localization();
    outcomes.push(localization);
    cases.extend(more_cases);
    outcomes.push(criterion_consistency());
    outcomes.push(criterion_recovery_bound(&cases));
    outcomes.push(criterion_norm_stability());
    let (gamma, reports) = criterion_design_gamma();
    outcomes.push(gamma);
    outcomes.push(criterion_design_invariants(&reports));

    let mut failed = 0;
    for o in &outcomes {
        println!(
            "criterion {:<24} {}  [{}]",
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criterion(s) failed");
}

// The default configuration re-validates invariants that the acceptance
// criteria exercise implicitly (used by the CLI verify command).
#[test]
fn default_config_verify_suite_is_green() {
    let cfg = RunConfig::default();
    assert!(matches!(cfg.data.kappa, KappaSpec::Const { .. }));
    let report = nlplap::experiments::run_verify(&cfg).unwrap();
    assert!(report.all_passed(), "{:#?}", report.results);
}
