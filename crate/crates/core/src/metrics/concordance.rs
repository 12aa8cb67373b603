//! Concordance indices.

use crate::error::{Error, Result};

/// Time-dependent concordance: over pairs with `i` an event and
/// `t_i < t_j`, the fraction where `S(t_i | x_i) < S(t_i | x_j)`, ties
/// counting one half. `surv(j, i)` is the predicted survival of subject `j`
/// at the observed time of subject `i`.
pub fn c_index_antolini<F: Fn(usize, usize) -> f64>(times: &[f64], events: &[bool], surv: F) -> Result<f64> {
    let n = times.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if !events[i] {
            continue;
        }
        let own = surv(i, i);
        for j in 0..n {
            if times[j] > times[i] {
                let other = surv(j, i);
                den += 1.0;
                if own < other {
                    num += 1.0;
                } else if own == other {
                    num += 0.5;
                }
            }
        }
    }
    ratio(num, den)
}

/// Harrell's concordance of a risk score: higher risk should fail earlier.
pub fn c_index_harrell(times: &[f64], events: &[bool], risk: &[f64]) -> Result<f64> {
    let n = times.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if times[j] > times[i] {
                den += 1.0;
                if risk[i] > risk[j] {
                    num += 1.0;
                } else if risk[i] == risk[j] {
                    num += 0.5;
                }
            }
        }
    }
    ratio(num, den)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        return Err(Error::Undefined("no comparable pairs for the concordance index".into()));
    }
    Ok(num / den)
}
