//! Inverse-probability-of-censoring weighted Brier score and binomial
//! log-likelihood, integrated over a time grid.

use crate::error::{Error, Result};

use super::{kaplan_meier, SurvivalCurve};

/// Clamp applied to survival probabilities before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-7;
pub const GRID_POINTS: usize = 100;
pub const GRID_QUANTILES: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedScore {
    pub value: f64,
    /// Pointwise score at each grid time.
    pub pointwise: Vec<f64>,
    /// Terms dropped because the censoring survival was zero.
    pub dropped: usize,
}

/// Linearly interpolated sample quantile.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Equally spaced quantile levels of the observed times between the 10%
/// and 90% quantiles; duplicate times are removed.
pub fn evaluation_grid(times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::domain("evaluation grid of an empty cohort"));
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (a, b) = GRID_QUANTILES;
    let mut grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| quantile(&sorted, a + (b - a) * i as f64 / (GRID_POINTS - 1) as f64))
        .collect();
    grid.dedup();
    Ok(grid)
}

fn integrate(grid: &[f64], values: &[f64]) -> f64 {
    if grid.len() == 1 {
        return values[0];
    }
    let area: f64 = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum();
    area / (grid[grid.len() - 1] - grid[0])
}

/// Shared IPCW skeleton: `loss(s, died)` is the per-subject loss given the
/// predicted survival `s` and whether the subject is known dead by the
/// grid time.
fn ipcw<L: Fn(f64, bool) -> f64>(surv: &[Vec<f64>], times: &[f64], events: &[bool], grid: &[f64], loss: L) -> Result<IntegratedScore> {
    if grid.is_empty() {
        return Err(Error::domain("empty evaluation grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("evaluation grid must be strictly increasing"));
    }
    if surv.len() != times.len() || surv.iter().any(|row| row.len() != grid.len()) {
        return Err(Error::domain("survival matrix does not match cohort and grid"));
    }
    let flipped: Vec<bool> = events.iter().map(|e| !e).collect();
    let censoring = kaplan_meier(times, &flipped)?;
    let n = times.len() as f64;
    let mut dropped = 0;
    let mut pointwise = Vec::with_capacity(grid.len());
    for (g, &t) in grid.iter().enumerate() {
        let g_t = censoring.at(t);
        let mut acc = 0.0;
        for j in 0..times.len() {
            let (weight, died) = if times[j] <= t && events[j] {
                (censoring.before(times[j]), true)
            } else if times[j] > t {
                (g_t, false)
            } else {
                continue;
            };
            if weight <= 0.0 {
                dropped += 1;
                continue;
            }
            acc += loss(surv[j][g], died) / weight;
        }
        pointwise.push(acc / n);
    }
    if dropped > 0 {
        log::info!("{dropped} IPCW terms dropped for zero censoring survival");
    }
    Ok(IntegratedScore { value: integrate(grid, &pointwise), pointwise, dropped })
}

/// Integrated Brier score. `surv[j][g]` is the predicted survival of
/// subject `j` at `grid[g]`.
pub fn ibs(surv: &[Vec<f64>], times: &[f64], events: &[bool], grid: &[f64]) -> Result<IntegratedScore> {
    ipcw(surv, times, events, grid, |s, died| if died { s * s } else { (1.0 - s) * (1.0 - s) })
}

/// Integrated negative binomial log-likelihood.
pub fn ibll(surv: &[Vec<f64>], times: &[f64], events: &[bool], grid: &[f64]) -> Result<IntegratedScore> {
    ipcw(surv, times, events, grid, |s, died| {
        let s = s.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        if died {
            -(1.0 - s).ln()
        } else {
            -s.ln()
        }
    })
}

impl SurvivalCurve {
    /// Right-continuous step value at `t`; 1 before the first point.
    pub fn at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => 1.0,
            k => self.surv[k - 1],
        }
    }

    /// Left limit at `t`.
    pub fn before(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x < t) {
            0 => 1.0,
            k => self.surv[k - 1],
        }
    }
}
