//! Kaplan-Meier estimation and the two-sample log-rank test.

use crate::error::{Error, Result};
use crate::special::chi2_sf;

use super::SurvivalCurve;

/// Distinct times in increasing order with event and total counts at each.
fn tally(times: &[f64], events: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some(last) if last.0 == times[i] => {
                last.1 += events[i] as usize;
                last.2 += 1;
            }
            _ => out.push((times[i], events[i] as usize, 1)),
        }
    }
    out
}

/// Product-limit estimator. Subjects censored at a time are still at risk
/// for deaths at that same time. The curve has one point per distinct
/// observed time and is right-continuous.
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    if times.is_empty() {
        return Err(Error::domain("Kaplan-Meier of an empty cohort"));
    }
    if times.len() != events.len() {
        return Err(Error::domain("times and events differ in length"));
    }
    let mut at_risk = times.len();
    let mut s = 1.0;
    let mut curve = SurvivalCurve { times: Vec::new(), surv: Vec::new() };
    for (t, deaths, total) in tally(times, events) {
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
        }
        curve.times.push(t);
        curve.surv.push(s);
        at_risk -= total;
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRank {
    pub chi2: f64,
    pub p: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

/// Two-sample log-rank test with hypergeometric variance.
pub fn logrank(times_a: &[f64], events_a: &[bool], times_b: &[f64], events_b: &[bool]) -> Result<LogRank> {
    if times_a.is_empty() || times_b.is_empty() {
        return Err(Error::domain("log-rank needs two nonempty groups"));
    }
    let mut pooled: Vec<(f64, bool, bool)> = Vec::with_capacity(times_a.len() + times_b.len());
    pooled.extend(times_a.iter().zip(events_a).map(|(&t, &e)| (t, e, true)));
    pooled.extend(times_b.iter().zip(events_b).map(|(&t, &e)| (t, e, false)));
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut n_a = times_a.len() as f64;
    let mut n = pooled.len() as f64;
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (mut d, mut d_a, mut leave, mut leave_a) = (0.0, 0.0, 0.0, 0.0);
        while i < pooled.len() && pooled[i].0 == t {
            let (_, ev, in_a) = pooled[i];
            d += ev as u8 as f64;
            d_a += (ev && in_a) as u8 as f64;
            leave += 1.0;
            leave_a += in_a as u8 as f64;
            i += 1;
        }
        if d > 0.0 {
            observed += d_a;
            expected += d * n_a / n;
            if n > 1.0 {
                variance += d * (n_a / n) * (1.0 - n_a / n) * (n - d) / (n - 1.0);
            }
        }
        n -= leave;
        n_a -= leave_a;
    }
    if variance <= 0.0 {
        log::info!("log-rank variance is zero; reporting chi2 = 0, p = 1");
        return Ok(LogRank { chi2: 0.0, p: 1.0, observed_a: observed, expected_a: expected, variance: 0.0 });
    }
    let chi2 = (observed - expected).powi(2) / variance;
    Ok(LogRank { chi2, p: chi2_sf(chi2, 1.0), observed_a: observed, expected_a: expected, variance })
}
