//! Survival evaluation: curves, concordance, IPCW scores, Kaplan-Meier,
//! log-rank and risk stratification.

mod concordance;
mod km;
mod scores;

pub use concordance::{c_index_antolini, c_index_harrell};
pub use km::{kaplan_meier, logrank, LogRank};
pub use scores::{evaluation_grid, ibll, ibs, quantile, IntegratedScore, GRID_POINTS, GRID_QUANTILES, LOG_CLAMP};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::MultimodalModel;
use crate::grfn::{plausibility, Grfn, RealInterval};
use crate::transform::TimeTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub surv: Vec<f64>,
}

/// `S(t) = Pl([y(t), inf))` of a GRFN, the survival convention used throughout.
pub fn grfn_survival(g: &Grfn, y: f64) -> f64 {
    plausibility(g, &RealInterval::at_least(y))
}

/// Survival curve of a GRFN over positive grid times, made non-increasing
/// by a running minimum.
pub fn curve_of(g: &Grfn, transform: &TimeTransform, grid: &[f64]) -> Result<SurvivalCurve> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("survival grid must be strictly increasing"));
    }
    let mut surv = Vec::with_capacity(grid.len());
    let mut running = 1.0f64;
    for &t in grid {
        running = running.min(grfn_survival(g, transform.forward(t)?));
        surv.push(running);
    }
    Ok(SurvivalCurve { times: grid.to_vec(), surv })
}

pub fn survival_curve(mm: &MultimodalModel, xs: &[&[f64]], grid: &[f64]) -> Result<SurvivalCurve> {
    curve_of(&mm.fuse(xs)?.fused, &mm.transform, grid)
}

/// `true` marks high risk: risk strictly above the median.
pub fn stratify_median(risks: &[f64]) -> Result<Vec<bool>> {
    if risks.is_empty() {
        return Err(Error::domain("stratification of an empty cohort"));
    }
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    Ok(risks.iter().map(|&r| r > median).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityScores {
    pub c_index: f64,
    pub c_index_harrell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub predicted_time: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub h: f64,
    pub time: f64,
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_test: usize,
    /// Time-dependent concordance of the fused survival curves.
    pub c_index: f64,
    /// Concordance of the risk score `-mu_f`.
    pub c_index_harrell: f64,
    pub ibs: f64,
    pub ibll: f64,
    pub ipcw_dropped: usize,
    pub logrank_chi2: f64,
    pub logrank_p: f64,
    pub n_high_risk: usize,
    pub n_low_risk: usize,
    pub reliabilities: IndexMap<String, f64>,
    /// Scores of each modality's discounted output taken alone.
    pub modalities: IndexMap<String, ModalityScores>,
    pub predictions: Vec<PredictionRow>,
}

/// A cohort to evaluate: aligned ids, per-modality features, times and events.
#[derive(Debug, Clone, Copy)]
pub struct Cohort<'a> {
    pub ids: &'a [String],
    pub features: &'a [Vec<Vec<f64>>],
    pub times: &'a [f64],
    pub events: &'a [bool],
}

struct Scores {
    c_index: f64,
    c_index_harrell: f64,
    ibs: f64,
    ibll: f64,
    dropped: usize,
}

fn scores_for(grfns: &[Grfn], ys: &[f64], grid: &[f64], grid_ys: &[f64], cohort: &Cohort) -> Result<Scores> {
    let c_index = c_index_antolini(cohort.times, cohort.events, |j, i| grfn_survival(&grfns[j], ys[i]))?;
    let risk: Vec<f64> = grfns.iter().map(|g| -g.mu).collect();
    let c_index_harrell = c_index_harrell(cohort.times, cohort.events, &risk)?;
    let surv: Vec<Vec<f64>> = grfns
        .iter()
        .map(|g| {
            let mut running = 1.0f64;
            grid_ys
                .iter()
                .map(|&y| {
                    running = running.min(grfn_survival(g, y));
                    running
                })
                .collect()
        })
        .collect();
    let b = ibs(&surv, cohort.times, cohort.events, grid)?;
    let l = ibll(&surv, cohort.times, cohort.events, grid)?;
    Ok(Scores { c_index, c_index_harrell, ibs: b.value, ibll: l.value, dropped: b.dropped })
}

pub fn evaluate(mm: &MultimodalModel, cohort: &Cohort) -> Result<EvalReport> {
    let n = cohort.times.len();
    if cohort.ids.len() != n || cohort.events.len() != n || cohort.features.iter().any(|m| m.len() != n) {
        return Err(Error::domain("cohort columns differ in length"));
    }
    if cohort.features.len() != mm.n_modalities() {
        return Err(Error::domain("cohort and model differ in modality count"));
    }
    let tt = &mm.transform;
    let ys = cohort.times.iter().map(|&t| tt.forward(t)).collect::<Result<Vec<_>>>()?;
    let grid = evaluation_grid(cohort.times)?;
    let grid_ys = grid.iter().map(|&t| tt.forward(t)).collect::<Result<Vec<_>>>()?;

    let mut fused = Vec::with_capacity(n);
    let mut per_mod: Vec<Vec<Grfn>> = vec![Vec::with_capacity(n); mm.n_modalities()];
    let mut xs: Vec<&[f64]> = Vec::new();
    for row in 0..n {
        xs.clear();
        xs.extend(cohort.features.iter().map(|m| m[row].as_slice()));
        let fo = mm.fuse(&xs)?;
        fused.push(fo.fused);
        for (acc, g) in per_mod.iter_mut().zip(fo.discounted) {
            acc.push(g);
        }
    }

    let total = scores_for(&fused, &ys, &grid, &grid_ys, cohort)?;
    let mut modalities = IndexMap::new();
    for (name, gs) in mm.names().into_iter().zip(&per_mod) {
        let sc = scores_for(gs, &ys, &grid, &grid_ys, cohort)?;
        modalities.insert(name.to_string(), ModalityScores { c_index: sc.c_index, c_index_harrell: sc.c_index_harrell });
    }

    let high = stratify_median(&fused.iter().map(|g| -g.mu).collect::<Vec<_>>())?;
    let split = |flag: bool| -> (Vec<f64>, Vec<bool>) {
        (0..n).filter(|&j| high[j] == flag).map(|j| (cohort.times[j], cohort.events[j])).unzip()
    };
    let (ta, ea) = split(true);
    let (tb, eb) = split(false);
    let (logrank_chi2, logrank_p) = if ta.is_empty() || tb.is_empty() {
        log::info!("median split left one risk group empty; log-rank not computed");
        (0.0, 1.0)
    } else {
        let lr = logrank(&ta, &ea, &tb, &eb)?;
        (lr.chi2, lr.p)
    };

    let predictions = (0..n)
        .map(|j| {
            Ok(PredictionRow {
                id: cohort.ids[j].clone(),
                predicted_time: tt.inverse(fused[j].mu)?,
                mu: fused[j].mu,
                sigma2: fused[j].sigma2,
                h: fused[j].h,
                time: cohort.times[j],
                event: cohort.events[j],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport {
        n_test: n,
        c_index: total.c_index,
        c_index_harrell: total.c_index_harrell,
        ibs: total.ibs,
        ibll: total.ibll,
        ipcw_dropped: total.dropped,
        logrank_chi2,
        logrank_p,
        n_high_risk: ta.len(),
        n_low_risk: tb.len(),
        reliabilities: mm.names().into_iter().map(String::from).zip(mm.reliabilities()).collect(),
        modalities,
        predictions,
    })
}
