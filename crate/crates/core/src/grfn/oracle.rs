//! Numerical reference for belief and plausibility.
//!
//! Works directly from the definitions: for each value `m` of the random
//! mode, the necessity and possibility of the interval under the Gaussian
//! fuzzy number `exp(-h (x - m)^2 / 2)` are computed by taking suprema of the
//! membership function, then averaged over `M ~ N(mu, sigma2)` with adaptive
//! Gauss–Legendre quadrature. Shares nothing with the closed forms beyond the
//! quadrature rule itself.

use super::{Grfn, RealInterval};
use crate::quadrature::GaussLegendre;

/// Half-width, in standard deviations of the mode, beyond which the normal
/// density is below the smallest positive double.
const Z_RANGE: f64 = 40.0;
const PANEL_TOL: f64 = 1e-14;
const MAX_DEPTH: u32 = 40;

fn membership(x: f64, m: f64, h: f64) -> f64 {
    (-0.5 * h * (x - m) * (x - m)).exp()
}

/// Possibility of `a` under the fuzzy number with mode `m`.
fn possibility(a: &RealInterval, m: f64, h: f64) -> f64 {
    let nearest = m.clamp(a.lo, a.hi);
    membership(nearest, m, h)
}

/// Necessity of `a`: one minus the supremum of the membership over the complement.
fn necessity(a: &RealInterval, m: f64, h: f64) -> f64 {
    if !a.contains(m) {
        return 0.0;
    }
    let mut sup_out: f64 = 0.0;
    if a.lo.is_finite() {
        sup_out = sup_out.max(membership(a.lo, m, h));
    }
    if a.hi.is_finite() {
        sup_out = sup_out.max(membership(a.hi, m, h));
    }
    1.0 - sup_out
}

/// `(Bel(a), Pl(a))` by quadrature over the random mode.
///
/// `n_nodes` is the Gauss–Legendre order per panel (at least 64).
pub fn oracle_bel_pl(g: &Grfn, a: &RealInterval, n_nodes: usize) -> (f64, f64) {
    let n_nodes = n_nodes.max(64);
    if g.h == 0.0 {
        return if a.is_full() { (1.0, 1.0) } else { (0.0, 1.0) };
    }
    if g.sigma2 == 0.0 {
        return (necessity(a, g.mu, g.h), possibility(a, g.mu, g.h));
    }
    let sigma = g.sigma2.sqrt();
    let to_z = |x: f64| (x - g.mu) / sigma;

    // Breakpoints in z where either integrand has a kink, plus a ladder of
    // points at multiples of the membership width so panels start resolved.
    let width_z = 1.0 / (sigma * g.h.sqrt());
    let mut breaks = vec![-Z_RANGE, Z_RANGE];
    let mut anchors = Vec::new();
    if a.lo.is_finite() {
        anchors.push(to_z(a.lo));
    }
    if a.hi.is_finite() {
        anchors.push(to_z(a.hi));
    }
    if a.lo.is_finite() && a.hi.is_finite() {
        anchors.push(to_z(0.5 * (a.lo + a.hi)));
    }
    for &z in &anchors {
        breaks.push(z);
        for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            breaks.push(z - k * width_z);
            breaks.push(z + k * width_z);
        }
    }
    breaks.retain(|z| z.is_finite() && z.abs() <= Z_RANGE);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();

    let gl = GaussLegendre::cached(n_nodes);
    let dens = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let bel_f = |z: f64| necessity(a, g.mu + sigma * z, g.h) * dens(z);
    let pl_f = |z: f64| possibility(a, g.mu + sigma * z, g.h) * dens(z);

    let mut bel = 0.0;
    let mut pl = 0.0;
    for w in breaks.windows(2) {
        bel += adaptive(gl, &bel_f, w[0], w[1], 0);
        pl += adaptive(gl, &pl_f, w[0], w[1], 0);
    }
    (bel.clamp(0.0, 1.0), pl.clamp(0.0, 1.0))
}

fn adaptive<F: Fn(f64) -> f64>(gl: &GaussLegendre, f: &F, a: f64, b: f64, depth: u32) -> f64 {
    let whole = gl.integrate(a, b, f);
    let mid = 0.5 * (a + b);
    let left = gl.integrate(a, mid, f);
    let right = gl.integrate(mid, b, f);
    let split = left + right;
    if (split - whole).abs() <= PANEL_TOL || depth >= MAX_DEPTH {
        split
    } else {
        adaptive(gl, f, a, mid, depth + 1) + adaptive(gl, f, mid, b, depth + 1)
    }
}
