//! Gaussian random fuzzy numbers.
//!
//! A GRFN `Ñ(mu, sigma2, h)` is a Gaussian fuzzy number with precision `h`
//! whose mode is itself a Gaussian random variable `M ~ N(mu, sigma2)`.
//! Belief and plausibility of an interval are the expected necessity and
//! expected possibility of that interval under the random mode; both have
//! closed forms in terms of the standard normal CDF, implemented here
//! generically so they can also be differentiated with [`Dual3`].

mod oracle;

pub use oracle::oracle_bel_pl;

use serde::{Deserialize, Serialize};

use crate::dual::{Dual3, Real};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{exp_clamped, norm_cdf, norm_cdf_diff, norm_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grfn {
    pub mu: f64,
    pub sigma2: f64,
    pub h: f64,
}

impl Grfn {
    pub fn new(mu: f64, sigma2: f64, h: f64) -> Result<Self> {
        let g = Grfn { mu, sigma2, h };
        g.validate()?;
        Ok(g)
    }

    /// Total ignorance located at `mu`.
    pub fn vacuous(mu: f64) -> Self {
        Grfn { mu, sigma2: 0.0, h: 0.0 }
    }

    pub fn is_vacuous(&self) -> bool {
        self.h == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma2.is_finite() && self.h.is_finite()) {
            return Err(Error::domain(format!("non-finite GRFN parameters {self:?}")));
        }
        if self.sigma2 < 0.0 || self.h < 0.0 {
            return Err(Error::domain(format!("negative GRFN variance or precision {self:?}")));
        }
        Ok(())
    }
}

/// A closed interval of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(RealInterval { lo, hi })
    }

    /// `[y - eps, y + eps]`
    pub fn around(y: f64, eps: f64) -> Self {
        RealInterval { lo: y - eps, hi: y + eps }
    }

    /// `[y, +inf)`
    pub fn at_least(y: f64) -> Self {
        RealInterval { lo: y, hi: f64::INFINITY }
    }

    /// `(-inf, y]`
    pub fn at_most(y: f64) -> Self {
        RealInterval { lo: f64::NEG_INFINITY, hi: y }
    }

    pub fn full() -> Self {
        RealInterval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_full(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }
}

/// Plausibility of the singleton `{y}`.
pub fn contour(g: &Grfn, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain(format!("contour evaluated at non-finite y = {y}")));
    }
    Ok(contour_generic(g.mu, g.sigma2, g.h, y))
}

fn contour_generic<T: Real>(mu: T, sigma2: T, h: T, y: f64) -> T {
    let k = h * sigma2 + 1.0;
    let d = T::cst(y) - mu;
    exp_clamped(-(h * d * d) / (k * 2.0)) / k.sqrt()
}

pub fn belief(g: &Grfn, a: &RealInterval) -> f64 {
    bel_pl(g, a).0
}

pub fn plausibility(g: &Grfn, a: &RealInterval) -> f64 {
    bel_pl(g, a).1
}

/// `(Bel(a), Pl(a))`, clipped to `0 <= Bel <= Pl <= 1`.
pub fn bel_pl(g: &Grfn, a: &RealInterval) -> (f64, f64) {
    bel_pl_kernel(g.mu, g.sigma2, g.h, a, true)
}

/// The closed-form expressions without the narrow-interval quadrature route.
pub fn bel_pl_closed_form(g: &Grfn, a: &RealInterval) -> (f64, f64) {
    bel_pl_kernel(g.mu, g.sigma2, g.h, a, false)
}

/// Values and partial derivatives of Bel and Pl with respect to `(mu, sigma2, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BelPlGrad {
    pub bel: f64,
    pub pl: f64,
    pub d_bel: [f64; 3],
    pub d_pl: [f64; 3],
}

pub fn bel_pl_grad(g: &Grfn, a: &RealInterval) -> BelPlGrad {
    let (b, p) = bel_pl_kernel(
        Dual3::var(g.mu, 0),
        Dual3::var(g.sigma2, 1),
        Dual3::var(g.h, 2),
        a,
        true,
    );
    BelPlGrad {
        bel: b.v,
        pl: p.v,
        d_bel: b.d,
        d_pl: p.d,
    }
}

/// Width-to-scale ratio under which finite-interval belief is integrated
/// numerically instead of through differences of normal CDFs.
const NARROW_RATIO: f64 = 0.1;
const NARROW_NODES: usize = 16;

fn bel_pl_kernel<T: Real>(mu: T, sigma2: T, h: T, a: &RealInterval, narrow_route: bool) -> (T, T) {
    let (bel, pl) = if h.value() == 0.0 {
        let bel = if a.is_full() { 1.0 } else { 0.0 };
        (T::cst(bel), T::cst(1.0))
    } else if a.is_full() {
        (T::cst(1.0), T::cst(1.0))
    } else if sigma2.value() == 0.0 {
        degenerate(mu, h, a)
    } else {
        let sigma = sigma2.sqrt();
        let bel = if narrow_route && is_narrow(mu.value(), sigma.value(), h.value(), a) {
            narrow_belief(mu, sigma, h, a)
        } else {
            closed_belief(mu, sigma2, sigma, h, a)
        };
        (bel, closed_plausibility(mu, sigma2, sigma, h, a))
    };
    let pl = clip(pl);
    let bel = clip(bel);
    if bel.value() > pl.value() {
        (pl, pl)
    } else {
        (bel, pl)
    }
}

fn clip<T: Real>(x: T) -> T {
    let v = x.value();
    if v.is_nan() || v <= 0.0 {
        T::cst(0.0)
    } else if v >= 1.0 {
        T::cst(1.0)
    } else {
        x
    }
}

/// Mode fixed at `mu`: necessity and possibility of the fuzzy number itself.
fn degenerate<T: Real>(mu: T, h: T, a: &RealInterval) -> (T, T) {
    let m = mu.value();
    if a.contains(m) {
        let to_lo = mu - a.lo;
        let to_hi = T::cst(a.hi) - mu;
        let near = if to_lo.value() <= to_hi.value() { to_lo } else { to_hi };
        let bel = if near.value().is_infinite() {
            T::cst(1.0)
        } else {
            -(-(h * near * near) * 0.5).exp_m1()
        };
        (bel, T::cst(1.0))
    } else {
        let d = if m < a.lo { T::cst(a.lo) - mu } else { mu - a.hi };
        (T::cst(0.0), exp_clamped(-(h * d * d) * 0.5))
    }
}

/// Pieces attached to a finite endpoint `e`: the contour `pl(e)` and the
/// posterior-like location `m*(e)`; `s` is shared by all endpoints.
struct Endpoint<T> {
    pl: T,
    m_star: T,
}

fn endpoint<T: Real>(mu: T, sigma2: T, h: T, k: T, e: f64) -> Endpoint<T> {
    let d = T::cst(e) - mu;
    Endpoint {
        pl: exp_clamped(-(h * d * d) / (k * 2.0)) / k.sqrt(),
        m_star: (mu + h * sigma2 * e) / k,
    }
}

fn closed_belief<T: Real>(mu: T, sigma2: T, sigma: T, h: T, a: &RealInterval) -> T {
    let k = h * sigma2 + 1.0;
    let s = sigma / k.sqrt();
    let z = |u: f64| (T::cst(u) - mu) / sigma;
    match (a.lo.is_finite(), a.hi.is_finite()) {
        (true, true) => {
            let c = 0.5 * (a.lo + a.hi);
            let lo = endpoint(mu, sigma2, h, k, a.lo);
            let hi = endpoint(mu, sigma2, h, k, a.hi);
            let zs = |u: f64, e: &Endpoint<T>| (T::cst(u) - e.m_star) / s;
            norm_cdf_diff(z(a.lo), z(a.hi))
                - lo.pl * norm_cdf_diff(zs(a.lo, &lo), zs(c, &lo))
                - hi.pl * norm_cdf_diff(zs(c, &hi), zs(a.hi, &hi))
        }
        (true, false) => {
            let lo = endpoint(mu, sigma2, h, k, a.lo);
            norm_sf(z(a.lo)) - lo.pl * norm_sf((T::cst(a.lo) - lo.m_star) / s)
        }
        (false, true) => {
            let hi = endpoint(mu, sigma2, h, k, a.hi);
            norm_cdf(z(a.hi)) - hi.pl * norm_cdf((T::cst(a.hi) - hi.m_star) / s)
        }
        (false, false) => T::cst(1.0),
    }
}

fn closed_plausibility<T: Real>(mu: T, sigma2: T, sigma: T, h: T, a: &RealInterval) -> T {
    let k = h * sigma2 + 1.0;
    let s = sigma / k.sqrt();
    let z = |u: f64| (T::cst(u) - mu) / sigma;
    let mut total = match (a.lo.is_finite(), a.hi.is_finite()) {
        (true, true) => norm_cdf_diff(z(a.lo), z(a.hi)),
        (true, false) => norm_sf(z(a.lo)),
        (false, true) => norm_cdf(z(a.hi)),
        (false, false) => return T::cst(1.0),
    };
    if a.lo.is_finite() {
        let lo = endpoint(mu, sigma2, h, k, a.lo);
        total = total + lo.pl * norm_cdf((T::cst(a.lo) - lo.m_star) / s);
    }
    if a.hi.is_finite() {
        let hi = endpoint(mu, sigma2, h, k, a.hi);
        total = total + hi.pl * norm_sf((T::cst(a.hi) - hi.m_star) / s);
    }
    total
}

fn is_narrow(mu: f64, sigma: f64, h: f64, a: &RealInterval) -> bool {
    if !(a.lo.is_finite() && a.hi.is_finite()) {
        return false;
    }
    let width = a.hi - a.lo;
    let c = 0.5 * (a.lo + a.hi);
    let scale = h.sqrt().max(1.0 / sigma).max((c - mu).abs() / (sigma * sigma));
    width * scale <= NARROW_RATIO
}

/// Belief of a narrow finite interval as the integral of the necessity
/// profile against the density of the random mode. The integrand is analytic
/// on each half, so a fixed Gauss–Legendre rule is accurate to rounding while
/// avoiding the cancellation of the closed form.
fn narrow_belief<T: Real>(mu: T, sigma: T, h: T, a: &RealInterval) -> T {
    let gl = GaussLegendre::cached(NARROW_NODES);
    let c = 0.5 * (a.lo + a.hi);
    let half = 0.5 * (c - a.lo);
    let norm = sigma * (2.0 * std::f64::consts::PI).sqrt();
    let inv_two_var = T::cst(0.5) / (sigma * sigma);
    let mut acc = T::cst(0.0);
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        // left half measures distance to lo, right half distance to hi; by
        // symmetry of the node set both distances equal half*(1+x).
        let dist = half * (1.0 + x);
        let necessity = -(-(h * (dist * dist)) * 0.5).exp_m1();
        let m_left = T::cst(a.lo + dist) - mu;
        let m_right = T::cst(a.hi - dist) - mu;
        let dens = exp_clamped(-(m_left * m_left) * inv_two_var)
            + exp_clamped(-(m_right * m_right) * inv_two_var);
        acc = acc + necessity * dens * *w;
    }
    acc * half / norm
}

/// `⊞` combination: each weight multiplies the corresponding precision.
pub fn combine(gs: &[Grfn], weights: &[f64]) -> Result<Grfn> {
    if gs.is_empty() {
        return Err(Error::domain("combine of an empty sequence"));
    }
    if gs.len() != weights.len() {
        return Err(Error::domain(format!(
            "combine: {} GRFNs but {} weights",
            gs.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::domain(format!("combine: invalid weight {w}")));
    }
    Ok(combine_unchecked(gs, weights))
}

pub(crate) fn combine_unchecked(gs: &[Grfn], weights: &[f64]) -> Grfn {
    let mut total = 0.0;
    let mut mu_acc = 0.0;
    let mut var_acc = 0.0;
    for (g, w) in gs.iter().zip(weights) {
        let hw = w * g.h;
        total += hw;
        mu_acc += hw * g.mu;
        var_acc += hw * hw * g.sigma2;
    }
    if total == 0.0 {
        let mean = gs.iter().map(|g| g.mu).sum::<f64>() / gs.len() as f64;
        return Grfn::vacuous(mean);
    }
    Grfn {
        mu: mu_acc / total,
        sigma2: var_acc / (total * total),
        h: total,
    }
}

/// Possibility discounting with reliability `r`: `Ñ(mu, sigma2, r h)`.
pub fn discount(g: &Grfn, r: f64) -> Result<Grfn> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("discount rate {r} outside [0, 1]")));
    }
    Ok(Grfn { h: r * g.h, ..*g })
}

/// Density of the random mode `M ~ N(mu, sigma2)`; `None` when `sigma2 = 0`.
pub fn mode_density(g: &Grfn, y: f64) -> Option<f64> {
    if g.sigma2 <= 0.0 {
        return None;
    }
    let z = (y - g.mu) / g.sigma2.sqrt();
    Some(crate::special::norm_pdf(z) / g.sigma2.sqrt())
}
