//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use betting_conformal::experiments::{
    regret, theorem_probe, uniform_grid, Adversary, ChangepointExperiment, ExperimentReport, ForecasterKind,
    ProbeConfig,
};
use betting_conformal::{
    run_scores, KtState, OnsState, QuantileLevel, SfOgdState, StepTrace, StreamConfig, UpdaterSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const ALPHA: f64 = 0.1;

struct Outcome {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(id: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { id, passed, detail }
}

fn changepoint(forecaster: ForecasterKind) -> (ExperimentReport, Duration) {
    let mut exp = ChangepointExperiment::new(
        vec![
            UpdaterSpec::Kt,
            UpdaterSpec::Ogd { eta: 1.0 },
            UpdaterSpec::Ogd { eta: 4.0 },
        ],
        200,
    );
    exp.forecaster = forecaster;
    let started = Instant::now();
    let report = exp.run().expect("changepoint experiment runs");
    (report, started.elapsed())
}

fn criterion_1(ols: &ExperimentReport, elapsed: Duration) -> Outcome {
    let kt = ols.method(UpdaterSpec::Kt).unwrap().coverage;
    let ogd1 = ols.method(UpdaterSpec::Ogd { eta: 1.0 }).unwrap().coverage;
    let ogd4 = ols.method(UpdaterSpec::Ogd { eta: 4.0 }).unwrap().coverage;
    let passed = (0.86..=0.90).contains(&kt)
        && (0.89..=0.91).contains(&ogd1)
        && (0.89..=0.91).contains(&ogd4)
        && elapsed.as_secs_f64() <= 60.0;
    outcome(
        "1 changepoint coverage",
        passed,
        format!(
            "kt={kt:.4} in [0.86,0.90], ogd(1)={ogd1:.4} ogd(4)={ogd4:.4} in [0.89,0.91], {:.2}s <= 60s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(ols: &ExperimentReport, wls: &ExperimentReport) -> Outcome {
    let ratio = |r: &ExperimentReport| {
        r.method(UpdaterSpec::Ogd { eta: 4.0 }).unwrap().mean_width / r.method(UpdaterSpec::Kt).unwrap().mean_width
    };
    let (ro, rw) = (ratio(ols), ratio(wls));
    outcome(
        "2 changepoint conservatism",
        ro >= 1.25 && rw >= 1.40,
        format!("width ogd(4)/kt: ols={ro:.3} >= 1.25, wls={rw:.3} >= 1.40"),
    )
}

fn criterion_3() -> Outcome {
    let mut cases = Vec::new();
    for d in [0.1, 1.0, 10.0] {
        for alpha in [0.05, 0.1, 0.2] {
            cases.push((d, alpha, 0usize, Adversary::Flipper));
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
            for i in 0..1000 {
                cases.push((d, alpha, i + 1, Adversary::random_bounded(i, &mut rng)));
            }
        }
    }
    let started = Instant::now();
    let (violations, worst_ratio) = cases
        .par_iter()
        .map(|&(d, alpha, seed, adversary)| {
            let config = ProbeConfig::new(d, alpha, 10_000, adversary)
                .unwrap()
                .with_seed(seed as u64);
            let report = theorem_probe(&config).unwrap();
            let ratio = report.max_abs_radius() / (3.0 * d + 1.0);
            (report.total_violations() + usize::from(report.truncated), ratio)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    outcome(
        "3 theorem probe",
        violations == 0,
        format!(
            "{} streams x 10000 steps, {violations} violations, max |s|/(3D+1)={worst_ratio:.3}, {:.2}s",
            cases.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn uniform_scores(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn coverage(trace: &[StepTrace]) -> f64 {
    trace.iter().filter(|r| r.covered).count() as f64 / trace.len() as f64
}

fn criterion_4(scores: &[f64]) -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for spec in [UpdaterSpec::Kt, UpdaterSpec::Ons] {
        let config = StreamConfig::new(ALPHA, spec).unwrap();
        let started = Instant::now();
        let trace = run_scores(&config, scores.iter().copied()).unwrap();
        let secs = started.elapsed().as_secs_f64();
        let cov = coverage(&trace);
        passed &= (cov - 0.9).abs() <= 0.01 && secs <= 5.0;
        parts.push(format!("{spec}={cov:.4} ({secs:.3}s)"));
    }
    outcome(
        "4 uniform coverage",
        passed,
        format!("{}; |cov-0.9| <= 0.01, <= 5s each", parts.join(", ")),
    )
}

fn criterion_5(kt: &[StepTrace]) -> Outcome {
    let tail = &kt[kt.len() - kt.len() / 10..];
    let mean = tail.iter().map(|r| r.radius).sum::<f64>() / tail.len() as f64;
    outcome(
        "5 quantile tracking",
        (mean - 0.9).abs() <= 0.05,
        format!("kt mean radius over final 10% = {mean:.4}, target 0.9 +- 0.05"),
    )
}

fn criterion_6(kt: &[StepTrace]) -> Outcome {
    let level = QuantileLevel::from_miscoverage(ALPHA).unwrap();
    let grid = uniform_grid(1.5, 1501);
    let t = 50_000;
    let r_t = regret(&kt[..t], &grid, level).unwrap();
    let r_2t = regret(&kt[..2 * t], &grid, level).unwrap();
    let (a_t, a_2t) = (r_t.average(), r_2t.average());
    outcome(
        "6 regret sublinearity",
        a_t <= 0.01 && a_2t <= a_t,
        format!(
            "R_T/T={a_t:.6} (s*={}) <= 0.01, R_2T/2T={a_2t:.6} (s*={}) <= R_T/T",
            r_t.best_radius, r_2t.best_radius
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_lambda = 0.0f64;
    let mut worst_wealth = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for stream in 0..200 {
        let mut kt = KtState::new();
        let (mut sum_g, mut sum_gs) = (0.0, 0.0);
        for t in 1..=2000u64 {
            let g = if stream % 2 == 0 {
                if rng.random::<f64>() < 0.9 {
                    ALPHA
                } else {
                    ALPHA - 1.0
                }
            } else {
                rng.random_range(-1.0..=1.0)
            };
            sum_gs += g * kt.radius;
            sum_g += g;
            kt = kt.step(g).unwrap();
            worst_lambda = worst_lambda.max((kt.fraction + sum_g / (t as f64 + 1.0)).abs());
            worst_wealth = worst_wealth.max((kt.wealth - (1.0 - sum_gs)).abs());
        }
    }

    // Two-step ONS traces: (g, W, λ, A, s) after each step.
    let ons_oracle: [(&[f64; 2], [[f64; 4]; 2]); 2] = [
        (
            &[-0.9, 0.1],
            [
                [1.0, 0.5, 1.81, 0.5],
                [
                    0.95,
                    0.371_747_554_973_591_85,
                    1.821_080_332_409_972_2,
                    0.353_160_177_224_912_2,
                ],
            ],
        ),
        (
            &[0.1, -0.9],
            [
                [1.0, -0.219_683_272_237_652_36, 1.01, -0.219_683_272_237_652_36],
                [
                    0.802_285_054_986_112_9,
                    0.5,
                    2.268_425_802_674_099_3,
                    0.401_142_527_493_056_46,
                ],
            ],
        ),
    ];
    let mut worst_ons = 0.0f64;
    for (gs, expected) in ons_oracle {
        let mut ons = OnsState::new();
        for (g, want) in gs.iter().zip(expected) {
            ons = ons.step(*g).unwrap();
            let got = [ons.wealth, ons.fraction, ons.accumulator, ons.radius];
            for (a, b) in got.iter().zip(want) {
                worst_ons = worst_ons.max((a - b).abs());
            }
        }
    }

    let sf = SfOgdState {
        radius: 0.5,
        eta: 0.1,
        grad_square_sum: 0.81,
    }
    .step(0.1);
    let sf_err = (sf.radius - (0.5 - 0.01 / 0.82f64.sqrt()))
        .abs()
        .max((sf.radius - 0.488_956_847_392_515_3).abs());

    outcome(
        "7 oracle equivalence",
        worst_lambda <= 1e-9 && worst_wealth <= 1e-9 && worst_ons <= 1e-12 && sf_err <= 1e-12,
        format!(
            "kt lambda err={worst_lambda:.1e}, wealth err={worst_wealth:.1e} (<= 1e-9); ons err={worst_ons:.1e}, sf-ogd err={sf_err:.1e} (<= 1e-12)"
        ),
    )
}

fn main() -> ExitCode {
    let (ols, ols_time) = changepoint(ForecasterKind::Ols);
    let (wls, _) = changepoint(ForecasterKind::wls());
    let scores = uniform_scores(100_000);
    let kt = run_scores(
        &StreamConfig::new(ALPHA, UpdaterSpec::Kt).unwrap(),
        scores.iter().copied(),
    )
    .unwrap();

    let outcomes = [
        criterion_1(&ols, ols_time),
        criterion_2(&ols, &wls),
        criterion_3(),
        criterion_4(&scores),
        criterion_5(&kt),
        criterion_6(&kt),
        criterion_7(),
    ];

    println!();
    for o in &outcomes {
        println!("{} [{}] {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.detail);
    }
    println!("SKIP [8 desk-scale limits] electricity and stock-price results need external data; run-csv --horizon 5 --forecaster ar3 accepts a user-supplied series");
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("\nacceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
