//! Truncated power kernel `omega(r) = c r^alpha` on `r < delta`, its
//! normalization, and the spherical integral identities it must satisfy.
//!
//! The constant `K_{p,n}` is the surface average of `|e.s|^p` over the unit
//! sphere; the kernel is normalized so the p-th moment `int |z|^p omega^p dz`
//! equals `1/K_{p,n}`, which is what makes nonlocal energies collapse onto
//! their local counterparts as the horizon shrinks. Closed forms are always
//! cross-checked against quadrature before anything else relies on them
//! (see the verification suite).

use crate::quad::{circle_angles, circle_avg_weighted, gauss_legendre_on, polar_avg_weighted};
use crate::special::gamma;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Surface measure of the unit sphere in R^n for n in {1, 2, 3}.
pub fn surface_area(n: usize) -> Result<f64> {
    match n {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        _ => Err(Error::Domain(format!("unsupported dimension n = {n}"))),
    }
}

/// `K_{p,n}`, the surface average of `|e.s|^p`, in closed form.
///
/// n = 1 gives exactly 1, n = 3 reduces to `1/(p+1)` (the cosine of the polar
/// angle is uniformly distributed), and n = 2 is a Gamma ratio.
pub fn closed_form_kpn(p: f64, n: usize) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    match n {
        1 => Ok(1.0),
        2 => Ok(gamma((p + 1.0) / 2.0) / (PI.sqrt() * gamma(p / 2.0 + 1.0))),
        3 => Ok(1.0 / (p + 1.0)),
        _ => Err(Error::Domain(format!("unsupported dimension n = {n}"))),
    }
}

/// `K_{p,n}` by numerical quadrature; the independent oracle for
/// [`closed_form_kpn`].
///
/// n = 1 is the exact two-point sum, n = 2 a midpoint rule on the circle
/// (aliasing-only error for the periodic integrand), n = 3 a product of
/// Gauss-Legendre in the polar angle (split at the equator, where `|cos|^p`
/// loses smoothness) and a uniform azimuth rule.
pub fn quad_kpn(p: f64, n: usize, order: usize) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    match n {
        1 => Ok((1.0f64.powf(p) + 1.0f64.powf(p)) / 2.0),
        2 => {
            let m = order.max(4);
            Ok(circle_angles(m).map(|t| t.cos().abs().powf(p)).sum::<f64>() / m as f64)
        }
        3 => {
            let half = (order / 2).max(8);
            let n_phi = 8;
            let mut acc = 0.0;
            for _phi in circle_angles(n_phi) {
                // Alignment e = e3 is justified by rotational invariance.
                let mut polar = 0.0;
                for &(theta, w) in gauss_legendre_on(0.0, PI / 2.0, half)
                    .iter()
                    .chain(gauss_legendre_on(PI / 2.0, PI, half).iter())
                {
                    polar += w * theta.cos().abs().powf(p) * theta.sin();
                }
                acc += 0.5 * polar;
            }
            Ok(acc / n_phi as f64)
        }
        _ => Err(Error::Domain(format!("unsupported dimension n = {n}"))),
    }
}

/// Normalization constant `c` of the kernel `c r^alpha` on `B(0, delta)`,
/// from the exact radial integral
/// `|S^{n-1}| c^p delta^(n+p+alpha p) / (n+p+alpha p) = 1/K_{p,n}`.
pub fn normalize(alpha: f64, delta: f64, p: f64, n: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("horizon delta = {delta} must be positive")));
    }
    let gamma_exp = n as f64 + p + alpha * p;
    if gamma_exp <= 0.0 {
        return Err(Error::Domain(format!(
            "kernel exponent alpha = {alpha} at or below the integrability bound {}",
            -1.0 - n as f64 / p
        )));
    }
    if alpha > -1.0 {
        return Err(Error::Domain(format!(
            "kernel exponent alpha = {alpha} must satisfy alpha <= -1"
        )));
    }
    let kpn = closed_form_kpn(p, n)?;
    let area = surface_area(n)?;
    Ok((gamma_exp / (kpn * area * delta.powf(gamma_exp))).powf(1.0 / p))
}

/// Horizon, exponents, and normalization of one kernel instance.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    /// Spatial dimension, 1, 2 or 3.
    pub n: usize,
    /// Primal exponent, in (1, inf).
    pub p: f64,
    /// Dual exponent, q = p/(p-1).
    pub q: f64,
    /// Interaction horizon.
    pub delta: f64,
    /// Kernel exponent, in (-1 - n/p, -1].
    pub alpha: f64,
    /// Normalization constant.
    pub c_norm: f64,
}

impl KernelSpec {
    pub fn new(n: usize, p: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("exponent p = {p} must lie in (1, inf)")));
        }
        let c_norm = normalize(alpha, delta, p, n)?;
        Ok(KernelSpec {
            n,
            p,
            q: p / (p - 1.0),
            delta,
            alpha,
            c_norm,
        })
    }

    /// Kernel value at separation r. Zero at and beyond the horizon;
    /// the origin is a singular point and is rejected.
    pub fn omega(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::Domain(format!("separation r = {r} must be nonnegative")));
        }
        if r == 0.0 {
            return Err(Error::Domain(
                "kernel evaluated at r = 0 (singular point; pair lists exclude self-pairs)".into(),
            ));
        }
        Ok(self.omega_positive(r))
    }

    /// Kernel value assuming r > 0.
    pub(crate) fn omega_positive(&self, r: f64) -> f64 {
        if r >= self.delta {
            0.0
        } else {
            self.c_norm * r.powf(self.alpha)
        }
    }

    /// Exponent of the radial p-th moment mass, `n + p + alpha p`.
    pub fn moment_exponent(&self) -> f64 {
        self.n as f64 + self.p + self.alpha * self.p
    }

    /// `int_{lo < |z| < hi} |z|^p omega^p(z) dz` by the exact antiderivative.
    ///
    /// Over the full ball (lo = 0, hi = delta) this is `1/K_{p,n}`.
    pub fn radial_moment_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let g = self.moment_exponent();
        let area = surface_area(self.n)?;
        let hi = hi.min(self.delta);
        if hi <= lo {
            return Ok(0.0);
        }
        Ok(area * self.c_norm.powf(self.p) * (hi.powf(g) - lo.powf(g)) / g)
    }
}

/// Surface average of `|e.s|^{p-2} s.B(As)` with
/// `B = (p-1) I + (2-p) e e^T`, paired with its closed-form value
/// `K_{p,n} trace A`. Returns `(lhs, rhs)` for comparison.
///
/// `a` is the n-by-n matrix in row-major order; `e` must be a unit vector.
pub fn verify_trace_identity(
    e: &[f64],
    a: &[f64],
    p: f64,
    n: usize,
    order: usize,
) -> Result<(f64, f64)> {
    check_trace_inputs(e, a, p, n)?;
    let rhs = closed_form_kpn(p, n)? * trace(a, n);
    let lhs = match n {
        1 => a[0],
        2 => {
            let basis = orthonormal_2d(e);
            circle_avg_weighted(p - 2.0, order.max(16), &|u| {
                let s = add3(scale3(basis[0], u.cos()), scale3(basis[1], u.sin()));
                bracket_form(&s, e, a, p, n)
            })
        }
        3 => {
            let basis = orthonormal_3d(e);
            let n_phi = 16;
            let mut acc = 0.0;
            for phi in circle_angles(n_phi) {
                acc += polar_avg_weighted(p - 2.0, order.max(16), &|theta| {
                    let s = add3(
                        scale3(basis[2], theta.cos()),
                        add3(
                            scale3(basis[0], theta.sin() * phi.cos()),
                            scale3(basis[1], theta.sin() * phi.sin()),
                        ),
                    );
                    bracket_form(&s, e, a, p, n)
                });
            }
            acc / n_phi as f64
        }
        _ => unreachable!(),
    };
    Ok((lhs, rhs))
}

/// Shell integral of `|e.z|^{p-2} z.B(Az) omega^p(z)` over
/// `eps < |z| < delta`, paired with `trace A` (its `eps -> 0` limit).
///
/// The radial part of the power kernel integrates in closed form; only the
/// surface factor is evaluated by quadrature.
pub fn verify_trace_volume(
    e: &[f64],
    a: &[f64],
    spec: &KernelSpec,
    eps: f64,
    order: usize,
) -> Result<(f64, f64)> {
    check_trace_inputs(e, a, spec.p, spec.n)?;
    if !(eps > 0.0 && eps < spec.delta) {
        return Err(Error::Domain(format!(
            "cutoff eps = {eps} must lie in (0, delta = {})",
            spec.delta
        )));
    }
    let g = spec.moment_exponent();
    let radial = spec.c_norm.powf(spec.p) * (spec.delta.powf(g) - eps.powf(g)) / g;
    let (avg, _) = verify_trace_identity(e, a, spec.p, spec.n, order)?;
    let lhs = radial * surface_area(spec.n)? * avg;
    Ok((lhs, trace(a, spec.n)))
}

fn check_trace_inputs(e: &[f64], a: &[f64], p: f64, n: usize) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("unsupported dimension n = {n}")));
    }
    if e.len() != n || a.len() != n * n {
        return Err(Error::Domain(format!(
            "direction/matrix sizes {}/{} do not match n = {n}",
            e.len(),
            a.len()
        )));
    }
    if p - 2.0 <= -1.0 {
        return Err(Error::Domain(format!(
            "weight |e.s|^(p-2) with p = {p} is not integrable on the sphere"
        )));
    }
    let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("direction must be a unit vector, |e| = {norm}")));
    }
    Ok(())
}

/// `s.B(As)` with `B = (p-1) I + (2-p) e e^T`; the singular weight
/// `|e.s|^{p-2}` is supplied by the quadrature rule itself.
fn bracket_form(s: &[f64; 3], e: &[f64], a: &[f64], p: f64, n: usize) -> f64 {
    let mut es = 0.0;
    let mut as_vec = [0.0f64; 3];
    for i in 0..n {
        es += e[i] * s[i];
        for j in 0..n {
            as_vec[i] += a[i * n + j] * s[j];
        }
    }
    let mut e_dot_as = 0.0;
    let mut s_dot_as = 0.0;
    for i in 0..n {
        e_dot_as += e[i] * as_vec[i];
        s_dot_as += s[i] * as_vec[i];
    }
    (p - 1.0) * s_dot_as + (2.0 - p) * es * e_dot_as
}

fn trace(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

fn orthonormal_2d(e: &[f64]) -> [[f64; 3]; 2] {
    [[e[0], e[1], 0.0], [-e[1], e[0], 0.0]]
}

/// Right-handed orthonormal frame with the direction as its third axis.
fn orthonormal_3d(e: &[f64]) -> [[f64; 3]; 3] {
    let ez = [e[0], e[1], e[2]];
    let seed = if e[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let proj = dot3(seed, ez);
    let mut v1 = [seed[0] - proj * ez[0], seed[1] - proj * ez[1], seed[2] - proj * ez[2]];
    let norm = dot3(v1, v1).sqrt();
    v1 = scale3(v1, 1.0 / norm);
    let v2 = [
        ez[1] * v1[2] - ez[2] * v1[1],
        ez[2] * v1[0] - ez[0] * v1[2],
        ez[0] * v1[1] - ez[1] * v1[0],
    ];
    [v1, v2, ez]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(a: [f64; 3], c: f64) -> [f64; 3] {
    [a[0] * c, a[1] * c, a[2] * c]
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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
    fn closed_form_matches_quadrature() {
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            for n in 1..=3 {
                let order = if n == 2 { 4096 } else { 128 };
                let cf = closed_form_kpn(p, n).unwrap();
                let q = quad_kpn(p, n, order).unwrap();
                assert_relative_eq!(cf, q, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn exact_values() {
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            assert_eq!(closed_form_kpn(p, 1).unwrap(), 1.0);
        }
        for n in 1..=3 {
            assert_abs_diff_eq!(
                closed_form_kpn(2.0, n).unwrap(),
                1.0 / n as f64,
                epsilon = 1e-15
            );
        }
        assert_eq!(closed_form_kpn(4.0, 1).unwrap(), quad_kpn(4.0, 1, 2).unwrap());
        // The circle rule integrates the quadratic weight exactly at any
        // order, and the coarse product rule already meets 1e-8 at p = 3.
        assert_abs_diff_eq!(quad_kpn(2.0, 2, 8).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(
            quad_kpn(3.0, 3, 32).unwrap(),
            closed_form_kpn(3.0, 3).unwrap(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn dual_exponent_is_stored_exactly() {
        for &p in &[1.5, 2.0, 3.0, 2.7] {
            let spec = KernelSpec::new(1, p, 0.5, -1.0).unwrap();
            assert_eq!(spec.q, p / (p - 1.0));
        }
    }

    #[test]
    fn circle_third_moment_against_midpoint_oracle() {
        // Independent oracle: plain midpoint sum of (2pi)^{-1} int |cos|^3.
        let n = 32768;
        let oracle: f64 = (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                t.cos().abs().powi(3)
            })
            .sum::<f64>()
            / n as f64;
        let cf = closed_form_kpn(3.0, 2).unwrap();
        assert_relative_eq!(cf, oracle, max_relative = 1e-9);
        assert_relative_eq!(cf, 4.0 / (3.0 * PI), max_relative = 1e-13);
    }

    #[test]
    fn normalization_closed_forms() {
        // 1D, alpha = -1, p = 2: 2 delta c^2 = 1/K = 1 at delta = 1/2 gives c = 1.
        assert_relative_eq!(normalize(-1.0, 0.5, 2.0, 1).unwrap(), 1.0, max_relative = 1e-14);
        // 2D, alpha = -1, p = 2: c = sqrt(2/(pi delta^2)).
        for &delta in &[0.25, 0.5, 1.0] {
            assert_relative_eq!(
                normalize(-1.0, delta, 2.0, 2).unwrap(),
                (2.0 / (PI * delta * delta)).sqrt(),
                max_relative = 1e-14
            );
        }
        // Integrability boundary is excluded.
        assert!(normalize(-1.0 - 1.0 / 2.0, 0.5, 2.0, 1).is_err());
        assert!(normalize(-0.5, 0.5, 2.0, 1).is_err());
    }

    #[test]
    fn c_norm_scaling_in_delta() {
        let p = 2.7;
        let alpha = -1.1;
        let n = 2;
        let c1 = normalize(alpha, 0.3, p, n).unwrap();
        let c2 = normalize(alpha, 0.6, p, n).unwrap();
        let g = n as f64 + p + alpha * p;
        assert_relative_eq!(c2 / c1, 2.0f64.powf(-g / p), max_relative = 1e-12);
    }

    #[test]
    fn omega_support_and_singularity() {
        let spec = KernelSpec::new(1, 2.0, 0.5, -1.0).unwrap();
        assert_eq!(spec.omega(0.5).unwrap(), 0.0);
        assert_eq!(spec.omega(1.0).unwrap(), 0.0);
        assert!(spec.omega(0.0).is_err());
        assert_relative_eq!(spec.omega(0.25).unwrap(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn moment_mass_recovers_kpn_inverse() {
        for &(n, p, alpha) in &[(1usize, 2.0, -1.0), (2, 1.5, -1.2), (3, 3.0, -1.0)] {
            let spec = KernelSpec::new(n, p, 0.37, alpha).unwrap();
            let mass = spec.radial_moment_mass(0.0, spec.delta).unwrap();
            assert_relative_eq!(
                mass,
                1.0 / closed_form_kpn(p, n).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn trace_identity_quadratic_case_collapses() {
        // p = 2: the bracket reduces to the identity and the weight to 1,
        // so both sides equal trace(A)/n for any direction.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=3usize {
            for _ in 0..5 {
                let e = random_unit(&mut rng, n);
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let (lhs, rhs) = verify_trace_identity(&e, &a, 2.0, n, 32).unwrap();
                let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
                assert_relative_eq!(lhs, tr / n as f64, max_relative = 1e-11);
                assert_relative_eq!(rhs, tr / n as f64, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn trace_identity_scalar_case() {
        let (lhs, rhs) = verify_trace_identity(&[1.0], &[2.5], 1.7, 1, 8).unwrap();
        assert_eq!(lhs, 2.5);
        assert_eq!(rhs, 2.5);
    }

    #[test]
    fn trace_identity_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &p in &[1.5, 2.0, 3.0] {
            for n in 2..=3usize {
                for _ in 0..20 {
                    let e = random_unit(&mut rng, n);
                    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let (lhs, rhs) = verify_trace_identity(&e, &a, p, n, 48).unwrap();
                    assert!(
                        (lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()),
                        "p={p} n={n}: lhs={lhs} rhs={rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn trace_volume_examples() {
        // A = 0 gives zero on both sides.
        let spec = KernelSpec::new(2, 1.5, 0.4, -1.0).unwrap();
        let (lhs, rhs) =
            verify_trace_volume(&[1.0, 0.0], &[0.0; 4], &spec, 1e-6 * 0.4, 48).unwrap();
        assert_eq!(rhs, 0.0);
        assert!(lhs.abs() < 1e-14);

        // Scalar case reduces to the normalization identity up to the cutoff deficit.
        let spec1 = KernelSpec::new(1, 2.0, 0.5, -1.0).unwrap();
        let eps = 1e-8;
        let (lhs, rhs) = verify_trace_volume(&[1.0], &[3.0], &spec1, eps, 8).unwrap();
        assert_relative_eq!(lhs, 3.0 * (1.0 - eps / 0.5), max_relative = 1e-12);
        assert_eq!(rhs, 3.0);

        // Random 2D draw at p = 1.5.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = random_unit(&mut rng, 2);
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (lhs, rhs) = verify_trace_volume(&e, &a, &spec, 1e-6 * 0.4, 64).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()));
    }

    #[test]
    fn trace_identity_rejects_bad_inputs() {
        assert!(verify_trace_identity(&[0.5, 0.0], &[0.0; 4], 2.0, 2, 16).is_err());
        assert!(verify_trace_identity(&[1.0, 0.0], &[0.0; 4], 1.0, 2, 16).is_err());
        assert!(verify_trace_identity(&[1.0, 0.0], &[0.0; 3], 2.0, 2, 16).is_err());
    }
}

