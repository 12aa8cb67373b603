//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esurv::cli::summarize;
use esurv::config::RunConfig;
use esurv::data::{synthesize, Part, SynthSpec};
use esurv::ennreg::UnimodalModel;
use esurv::fusion::{Modality, MultimodalModel};
use esurv::grfn::{bel_pl, combine, discount, oracle_bel_pl};
use esurv::metrics::{c_index_antolini, c_index_harrell, ibll, ibs, kaplan_meier, logrank, EvalReport};
use esurv::pipeline::{evaluate_rows, fit_dataset};
use esurv::training::{gradient, loss_all, LossConfig, Mode, Observation, TrainData};
use esurv::transform::{profile_log_likelihood, TimeTransform};
use esurv::{Grfn, RealInterval};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const SYNTH_N: usize = 1000;

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 8] = [
        ("grfn oracle equivalence", Duration::from_secs(10), oracle_equivalence),
        ("combination algebra", Duration::from_secs(1), combination_algebra),
        ("gradient vs finite differences", Duration::from_secs(30), gradient_check),
        ("transform round trip", Duration::from_secs(5), transform_round_trip),
        ("metric oracles", Duration::from_secs(5), metric_oracles),
        ("synthetic end-to-end", Duration::from_secs(300), synthetic_end_to_end),
        ("ablation structure", Duration::from_secs(900), ablation),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let in_time = took <= *limit;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<32} {}  {} [{:.2} s, limit {} s{}]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", too slow" }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn grfn_diff(a: &Grfn, b: &Grfn) -> f64 {
    rel(a.mu, b.mu).max(rel(a.sigma2, b.sigma2)).max(rel(a.h, b.h))
}

fn random_grfn(rng: &mut ChaCha8Rng) -> Grfn {
    let mu = rng.random_range(-3.0..3.0);
    let sigma2 = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(-4.0f64..2.0).exp() };
    let h = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(-4.0f64..4.0).exp() };
    Grfn::new(mu, sigma2, h).unwrap()
}

fn random_interval(rng: &mut ChaCha8Rng) -> RealInterval {
    let lo = rng.random_range(-5.0..5.0);
    match rng.random_range(0..10) {
        0..=3 => RealInterval::new(lo, lo + rng.random_range(-8.0f64..2.0).exp()).unwrap(),
        4..=6 => RealInterval::at_least(lo),
        7..=8 => RealInterval::at_most(lo),
        _ => RealInterval::full(),
    }
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let (mut degenerate, mut half_infinite) = (0, 0);
    for _ in 0..1000 {
        let g = random_grfn(&mut rng);
        let a = random_interval(&mut rng);
        degenerate += (g.sigma2 == 0.0 || g.h == 0.0) as usize;
        half_infinite += (a.lo.is_finite() != a.hi.is_finite()) as usize;
        let (bel, pl) = bel_pl(&g, &a);
        let (ob, op) = oracle_bel_pl(&g, &a, 64);
        worst = worst.max((bel - ob).abs()).max((pl - op).abs());
    }
    verdict(
        worst <= 1e-6 && degenerate > 0 && half_infinite > 0,
        format!("max |closed - oracle| = {worst:.2e} over 1000 cases ({degenerate} degenerate, {half_infinite} half-infinite)"),
    )
}

fn combination_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut comm, mut assoc, mut neutral, mut weighted): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut compose_exact = true;
    let mut compose_h: f64 = 0.0;
    let informative = |rng: &mut ChaCha8Rng| {
        Grfn::new(rng.random_range(-3.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.01..10.0)).unwrap()
    };
    for _ in 0..500 {
        let (a, b, c) = (informative(&mut rng), informative(&mut rng), informative(&mut rng));
        let ones = [1.0; 3];
        let abc = combine(&[a, b, c], &ones).unwrap();
        for perm in [[a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            comm = comm.max(grfn_diff(&abc, &combine(&perm, &ones).unwrap()));
        }
        let ab = combine(&[a, b], &[1.0; 2]).unwrap();
        let bc = combine(&[b, c], &[1.0; 2]).unwrap();
        assoc = assoc.max(grfn_diff(&combine(&[ab, c], &[1.0; 2]).unwrap(), &abc));
        assoc = assoc.max(grfn_diff(&combine(&[a, bc], &[1.0; 2]).unwrap(), &abc));
        let vac = Grfn::vacuous(rng.random_range(-10.0..10.0));
        neutral = neutral.max(grfn_diff(&combine(&[a, vac], &[1.0; 2]).unwrap(), &a));
        neutral = neutral.max(grfn_diff(&combine(&[vac, a], &[1.0; 2]).unwrap(), &a));

        let w = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let disc: Vec<Grfn> = [a, b, c].iter().zip(&w).map(|(g, &r)| discount(g, r).unwrap()).collect();
        weighted = weighted.max(grfn_diff(&combine(&[a, b, c], &w).unwrap(), &combine(&disc, &ones).unwrap()));

        let (r1, r2) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let twice = discount(&discount(&a, r1).unwrap(), r2).unwrap();
        let once = discount(&a, r1 * r2).unwrap();
        compose_exact &= twice.mu == once.mu && twice.sigma2 == once.sigma2;
        compose_h = compose_h.max((twice.h - once.h).abs() / once.h.max(f64::MIN_POSITIVE));
    }
    // discounting multiplies h by a product of rates; the two orders of
    // multiplication may differ by one rounding
    let compose_ok = compose_exact && compose_h <= 2.0 * f64::EPSILON;
    verdict(
        comm <= 1e-12 && assoc <= 1e-12 && neutral <= 1e-12 && weighted <= 1e-12 && compose_ok,
        format!(
            "commutativity {comm:.1e}, associativity {assoc:.1e}, vacuous neutrality {neutral:.1e}, \
             weighted = discounted {weighted:.1e}, discount composition h {compose_h:.1e} (mu, sigma2 exact: {compose_exact})"
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> MultimodalModel {
    let (t, k, d) = (2, 3, 2);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let modalities = (0..t)
        .map(|i| Modality {
            name: format!("m{i}"),
            net: UnimodalModel {
                prototypes: (0..k).map(|_| (0..d).map(|_| u(-1.0, 1.0)).collect()).collect(),
                gammas: (0..k).map(|_| u(0.3, 1.2)).collect(),
                betas: (0..k).map(|_| (0..d).map(|_| u(-0.5, 0.5)).collect()).collect(),
                beta0s: (0..k).map(|_| u(-0.5, 0.5)).collect(),
                raw_sigma2s: (0..k).map(|_| u(-1.5, 0.5)).collect(),
                raw_hs: (0..k).map(|_| u(-0.5, 1.5)).collect(),
            },
        })
        .collect();
    let mut mm = MultimodalModel::new(modalities, TimeTransform::with_lambda(1.0, 1.0)).unwrap();
    mm.reliab_raw = vec![u(-1.0, 1.0), u(-1.0, 1.0)];
    mm
}

fn gradient_check() -> Verdict {
    let batch = 8;
    let step = 1e-5;
    let configs = [
        LossConfig { lambda: 0.5, epsilon: 0.05, eta: vec![1.0, 1.0], varphi: 0.01 },
        LossConfig { lambda: 0.3, epsilon: 0.2, eta: vec![0.7, 0.4], varphi: 1.0 },
        LossConfig { lambda: 0.5, epsilon: 1e-4, eta: vec![1.0, 1.0], varphi: 0.01 },
    ];
    let mut worst: f64 = 0.0;
    let mut n_checked = 0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mm = random_model(&mut rng);
        let features = (0..2)
            .map(|_| (0..batch).map(|_| vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]).collect())
            .collect();
        let obs = (0..batch).map(|i| Observation { y: rng.random_range(-1.0..1.0), event: i % 3 != 0 }).collect();
        let data = TrainData { features, obs };
        let rows: Vec<usize> = (0..batch).collect();
        let cfg = &configs[seed as usize % configs.len()];
        let (_, g) = gradient(&mm, &data, &rows, cfg).unwrap();
        let analytic = g.flatten();
        let base = mm.params();
        let loss_at = |p: &[f64]| {
            let mut m = mm.clone();
            m.set_params(p);
            loss_all(&m, &data, &rows, cfg).unwrap().loss
        };
        for j in 0..base.len() {
            let mut p = base.clone();
            p[j] = base[j] + step;
            let plus = loss_at(&p);
            p[j] = base[j] - step;
            let minus = loss_at(&p);
            let fd = (plus - minus) / (2.0 * step);
            let scale = fd.abs().max(analytic[j].abs()).max(1e-6);
            worst = worst.max((fd - analytic[j]).abs() / scale);
            n_checked += 1;
        }
    }
    verdict(
        worst <= 1e-4,
        format!("max relative error {worst:.2e} over {n_checked} parameters (6 models, batch {batch}, step {step:e})"),
    )
}

fn transform_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sample: Vec<f64> = (0..800).map(|_| (rng.random_range(0.0f64..1.0).powi(2) * 3.0).exp()).collect();
    let fitted = TimeTransform::fit(&sample).unwrap();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for lambda in [fitted.yj_lambda, -2.0, -0.5, 0.0, 1.0, 2.0, 3.5] {
        let tt = TimeTransform::with_lambda(lambda, 1.0);
        for _ in 0..1000 {
            let t = rng.random_range(-6.0f64..8.0).exp();
            let back = tt.inverse(tt.forward(t).unwrap()).unwrap();
            worst = worst.max((back - t).abs() / t);
            n += 1;
        }
    }
    let xs: Vec<f64> = sample.iter().map(|t| t.ln()).collect();
    let at = profile_log_likelihood(&xs, fitted.yj_lambda);
    let local_max = [1e-4, 1e-3, 1e-2, 1e-1]
        .iter()
        .all(|d| profile_log_likelihood(&xs, fitted.yj_lambda + d) <= at && profile_log_likelihood(&xs, fitted.yj_lambda - d) <= at);
    verdict(
        worst <= 1e-9 && local_max,
        format!("max relative round-trip error {worst:.2e} over {n} times; fitted lambda {:.6} local max: {local_max}", fitted.yj_lambda),
    )
}

/// Exhaustive enumeration over unordered pairs.
fn brute_concordance(times: &[f64], events: &[bool], score: impl Fn(usize, usize) -> (f64, f64)) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..times.len() {
        for b in a + 1..times.len() {
            let (first, second) = if times[a] < times[b] {
                (a, b)
            } else if times[b] < times[a] {
                (b, a)
            } else {
                continue;
            };
            if !events[first] {
                continue;
            }
            // score(first, second) = (risk-like value of first, of second)
            let (sf, ss) = score(first, second);
            den += 1.0;
            num += if sf > ss {
                1.0
            } else if sf == ss {
                0.5
            } else {
                0.0
            };
        }
    }
    (den > 0.0).then(|| num / den)
}

fn metric_oracles() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // hand cohort: times 1..5, risks chosen so exactly one comparable pair is discordant
    // comparable pairs (event first): (1,2..5), (3,4), (3,5), (4,5) -> 7 pairs
    let times = [1.0, 2.0, 3.0, 4.0, 5.0];
    let events = [true, false, true, true, false];
    let risk = [5.0, 4.0, 2.0, 3.0, 1.0];
    check(c_index_harrell(&times, &events, &risk).unwrap() == 6.0 / 7.0, "harrell hand cohort");

    // random small cohorts against enumeration, with ties in time and score
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..6) as f64).collect();
        let events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        let risk: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
        // survival matrix: surv[j][i] is subject j's survival at subject i's time
        let surv: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..4) as f64 / 4.0).collect()).collect();
        let brute_h = brute_concordance(&times, &events, |f, s| (risk[f], risk[s]));
        let brute_a = brute_concordance(&times, &events, |f, s| (-surv[f][f], -surv[s][f]));
        match (brute_h, c_index_harrell(&times, &events, &risk)) {
            (Some(b), Ok(c)) => worst = worst.max((b - c).abs()),
            (None, Err(_)) => {}
            _ => check(false, "harrell definedness"),
        }
        match (brute_a, c_index_antolini(&times, &events, |j, i| surv[j][i])) {
            (Some(b), Ok(c)) => worst = worst.max((b - c).abs()),
            (None, Err(_)) => {}
            _ => check(false, "antolini definedness"),
        }
    }
    check(worst <= 1e-15, "concordance enumeration");

    // IPCW hand table. Censoring survival G: 1 before t=2, 3/4 on [2, 5), 0 from 5.
    let grid = [1.5, 2.5, 3.5];
    let surv = vec![
        vec![0.6, 0.4, 0.3],
        vec![0.9, 0.8, 0.7],
        vec![0.8, 0.5, 0.2],
        vec![0.95, 0.85, 0.6],
        vec![0.9, 0.9, 0.8],
    ];
    let brier = [
        (0.36 + 0.01 + 0.04 + 0.0025 + 0.01) / 5.0,
        (0.16 + (0.25 + 0.0225 + 0.01) / 0.75) / 5.0,
        (0.09 + 0.04 / 0.75 + (0.16 + 0.04) / 0.75) / 5.0,
    ];
    let ln = f64::ln;
    let bll = [
        -(ln(0.4) + ln(0.9) + ln(0.8) + ln(0.95) + ln(0.9)) / 5.0,
        -(ln(0.6) + (ln(0.5) + ln(0.85) + ln(0.9)) / 0.75) / 5.0,
        -(ln(0.7) + ln(0.8) / 0.75 + (ln(0.6) + ln(0.8)) / 0.75) / 5.0,
    ];
    let trapezoid = |v: &[f64; 3]| (v[0] + 2.0 * v[1] + v[2]) / 4.0;
    let b = ibs(&surv, &times, &events, &grid).unwrap();
    let l = ibll(&surv, &times, &events, &grid).unwrap();
    let table_ok = b.pointwise.iter().zip(&brier).all(|(x, y)| (x - y).abs() < 1e-12)
        && l.pointwise.iter().zip(&bll).all(|(x, y)| (x - y).abs() < 1e-12)
        && (b.value - trapezoid(&brier)).abs() < 1e-12
        && (l.value - trapezoid(&bll)).abs() < 1e-12
        && b.dropped == 0
        && l.dropped == 0;
    check(table_ok, "ipcw hand table");

    // Kaplan-Meier hand table with tied times
    let km = kaplan_meier(
        &[5.0, 2.0, 3.0, 9.0, 5.0, 3.0, 8.0, 5.0],
        &[true, true, true, true, false, false, false, true],
    )
    .unwrap();
    let km_ok = km.times == [2.0, 3.0, 5.0, 8.0, 9.0]
        && km.surv.iter().zip([7.0 / 8.0, 6.0 / 8.0, 0.45, 0.45, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15);
    check(km_ok, "kaplan-meier hand table");

    // log-rank hand table: O_A = 4, E_A = 143/45, V = 3461/2025, chi2 = 1369/3461
    let lr = logrank(
        &[1.0, 3.0, 4.0, 6.0, 8.0],
        &[true, true, false, true, true],
        &[2.0, 3.0, 5.0, 7.0, 9.0],
        &[true, false, true, true, false],
    )
    .unwrap();
    let chi2 = 1369.0 / 3461.0;
    let p = libm::erfc((chi2 / 2.0f64).sqrt());
    let lr_ok = lr.observed_a == 4.0
        && (lr.expected_a - 143.0 / 45.0).abs() < 1e-14
        && (lr.variance - 3461.0 / 2025.0).abs() < 1e-14
        && (lr.chi2 - chi2).abs() < 1e-14
        && (lr.p - p).abs() < 1e-12;
    check(lr_ok, "log-rank hand table");

    let same = logrank(&[1.0, 2.0, 4.0, 6.0], &[true, false, true, true], &[1.0, 2.0, 4.0, 6.0], &[true, false, true, true]).unwrap();
    check((same.p - 1.0).abs() < 1e-12, "log-rank identical groups");

    let detail = if failures.is_empty() {
        format!(
            "enumeration max diff {worst:.1e}; IBS {:.6}, IBLL {:.6}, log-rank chi2 {:.6} p {:.6}, identical groups p {}",
            b.value, l.value, lr.chi2, lr.p, same.p
        )
    } else {
        format!("failed: {}", failures.join(", "))
    };
    verdict(failures.is_empty(), detail)
}

struct SynthRun {
    seed: u64,
    report: EvalReport,
    oracle_harrell: f64,
    model_json: String,
}

fn synth_run(mode: Mode, seed: u64) -> SynthRun {
    let cohort = synthesize(SYNTH_N, seed, &SynthSpec::default()).unwrap();
    let mut cfg = RunConfig::new("schema.toml");
    cfg.seed = seed;
    cfg.mode = mode;
    let fit = fit_dataset(&cohort.dataset, "id", &cfg).unwrap();
    let test = &fit.split.test;
    let report = evaluate_rows(&fit.model_file, &fit.model, &cohort.dataset, test).unwrap();
    let times: Vec<f64> = test.iter().map(|&r| cohort.dataset.time[r]).collect();
    let events: Vec<bool> = test.iter().map(|&r| cohort.dataset.event[r]).collect();
    let lp: Vec<f64> = test.iter().map(|&r| -cohort.linear_predictor[r]).collect();
    let oracle_harrell = c_index_harrell(&times, &events, &lp).unwrap();
    SynthRun { seed, report, oracle_harrell, model_json: fit.model_file.to_json() }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn best_modality(r: &EvalReport, harrell: bool) -> f64 {
    r.modalities
        .values()
        .map(|m| if harrell { m.c_index_harrell } else { m.c_index })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn synthetic_end_to_end() -> Verdict {
    let runs: Vec<SynthRun> = SEEDS.iter().map(|&s| synth_run(Mode::Fusion, s)).collect();
    let fused: Vec<f64> = runs.iter().map(|r| r.report.c_index_harrell).collect();
    let min_fused = fused.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_fused = mean(fused.iter().copied());
    let mean_best = mean(runs.iter().map(|r| best_modality(&r.report, true)));
    let ordered = runs
        .iter()
        .filter(|r| r.report.reliabilities["noise"] < r.report.reliabilities["signal"])
        .count();
    let a = min_fused >= 0.70;
    let b = mean_fused >= mean_best - 0.01;
    let c = ordered >= 4;
    let rs: Vec<String> = runs
        .iter()
        .map(|r| format!("{}:{:.4}/{:.4}", r.seed, r.report.reliabilities["signal"], r.report.reliabilities["noise"]))
        .collect();
    verdict(
        a && b && c,
        format!(
            "(a) fused Harrell C per seed {:?}, min {min_fused:.4} >= 0.70: {a} (generator oracle mean {:.4}); \
             (b) mean fused {mean_fused:.4} vs best unimodal {mean_best:.4} - 0.01: {b}; \
             (c) r_noise < r_signal in {ordered}/5 seeds [seed:signal/noise {}]: {c}",
            fused.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            mean(runs.iter().map(|r| r.oracle_harrell)),
            rs.join(" ")
        ),
    )
}

fn ablation() -> Verdict {
    // unimodal-trained modes report their best modality, the fusion mode its fused output
    let score = |mode: Mode| {
        mean(SEEDS.iter().map(|&s| {
            let r = synth_run(mode, s).report;
            if mode == Mode::Fusion {
                r.c_index
            } else {
                best_modality(&r, false)
            }
        }))
    };
    let b = score(Mode::Base);
    let br = score(Mode::Reliability);
    let brf = score(Mode::Fusion);
    let first = br >= b - 0.01;
    let second = brf >= br - 0.01;
    verdict(
        first && second,
        format!(
            "mean test C-index B {b:.4}, B+R {br:.4}, B+R+F {brf:.4}; B+R >= B - 0.01: {first}; B+R+F >= B+R - 0.01: {second}"
        ),
    )
}

fn determinism() -> Verdict {
    let once: Vec<SynthRun> = SEEDS.iter().map(|&s| synth_run(Mode::Fusion, s)).collect();
    let twice: Vec<SynthRun> = SEEDS.iter().map(|&s| synth_run(Mode::Fusion, s)).collect();
    let identical_models = once.iter().zip(&twice).filter(|(a, b)| a.model_json == b.model_json).count();
    let summary = |runs: &[SynthRun]| {
        let reports: Vec<(u64, EvalReport)> = runs.iter().map(|r| (r.seed, r.report.clone())).collect();
        serde_json::to_string_pretty(&summarize(Mode::Fusion, Part::Test, &reports)).unwrap()
    };
    let same_summary = summary(&once) == summary(&twice);
    verdict(
        identical_models == SEEDS.len() && same_summary,
        format!("byte-identical model files {identical_models}/{}; five-seed summary identical: {same_summary}", SEEDS.len()),
    )
}
