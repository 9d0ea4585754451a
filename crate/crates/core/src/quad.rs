//! One-dimensional quadrature building blocks.
//!
//! Gauss-Legendre rules are generated by Newton iteration on the Legendre
//! recurrence. The weighted circle/polar rules integrate `|cos|^expo` factors
//! with `expo` possibly in (-1, 0]; the interval is split at the zeros of the
//! cosine and the singular endpoint is absorbed by the substitution
//! `angle = pi/2 * w^m`, after which plain Gauss-Legendre applies.

use std::f64::consts::PI;

/// Exponent of the endpoint substitution; m = 8 regularizes every
/// weight power used here (expo > -1) to at least w^3.
const SUBST_POWER: f64 = 8.0;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.reverse();
    rule
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The n-point Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Midpoint-shifted uniform angles on the circle, `2*pi*(k+1/2)/n`.
pub fn circle_angles(n: usize) -> impl Iterator<Item = f64> {
    let nf = n as f64;
    (0..n).map(move |k| 2.0 * PI * (k as f64 + 0.5) / nf)
}

/// `(2*pi)^{-1} integral_0^{2pi} |cos u|^expo g(u) du` for expo > -1.
///
/// Four quarter arcs meet at the zeros u = pi/2, 3pi/2 of the cosine; each
/// quarter is integrated from its singular end with the power substitution.
pub fn circle_avg_weighted(expo: f64, n_gl: usize, g: &dyn Fn(f64) -> f64) -> f64 {
    assert!(expo > -1.0, "weight |cos|^{expo} is not integrable");
    let rule = gauss_legendre_on(0.0, 1.0, n_gl);
    let quarters = [
        (PI / 2.0, -1.0),
        (PI / 2.0, 1.0),
        (3.0 * PI / 2.0, -1.0),
        (3.0 * PI / 2.0, 1.0),
    ];
    let m = SUBST_POWER;
    let mut total = 0.0;
    for &(u_sing, dir) in quarters.iter() {
        for &(w, wt) in rule.iter() {
            let v = PI / 2.0 * w.powf(m);
            let u = u_sing + dir * v;
            let jac = PI / 2.0 * m * w.powf(m - 1.0);
            // |cos u| = sin v on every quarter by construction.
            total += wt * jac * v.sin().powf(expo) * g(u);
        }
    }
    total / (2.0 * PI)
}

/// `(1/2) integral_0^pi |cos t|^expo g(t) sin t dt` for expo > -1.
///
/// Together with an average over the azimuth this realizes the surface
/// average over the unit sphere of `|e3 . s|^expo g`.
pub fn polar_avg_weighted(expo: f64, n_gl: usize, g: &dyn Fn(f64) -> f64) -> f64 {
    assert!(expo > -1.0, "weight |cos|^{expo} is not integrable");
    let rule = gauss_legendre_on(0.0, 1.0, n_gl);
    let m = SUBST_POWER;
    let mut total = 0.0;
    for dir in [-1.0, 1.0] {
        for &(w, wt) in rule.iter() {
            let v = PI / 2.0 * w.powf(m);
            let theta = PI / 2.0 + dir * v;
            let jac = PI / 2.0 * m * w.powf(m - 1.0);
            total += wt * jac * v.sin().powf(expo) * g(theta) * theta.sin();
        }
    }
    0.5 * total
}
