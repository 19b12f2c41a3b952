//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rrt_core::experiments::{
    outlier_detect, run_experiment, validate_appendix_b, validate_thm1, validate_thm2,
    validate_thm4, validate_thm6, Bundled, ExperimentSpec, HadamardSetup, Regime, SelectorSpec,
};
use rrt_core::linalg::{model_matrix, MatrixModel, SupportRule};
use rrt_core::omp::{omp_run, StopRule};
use rrt_core::rrt::AlphaRule;
use rrt_core::special::{reg_inc_beta_at, reg_inc_beta_inv_point, BetaParams, UnitPoint};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// Bisection on ln t, where t is x for q <= 0.5 and 1 - x otherwise.
fn bisection_inverse(p: BetaParams, q: f64) -> UnitPoint {
    let upper = q > 0.5;
    let point = |t: f64| {
        if upper {
            UnitPoint::from_complement(t).unwrap()
        } else {
            UnitPoint::new(t).unwrap()
        }
    };
    let f = |t: f64| reg_inc_beta_at(p, point(t));
    let (mut lo, mut hi) = (f64::MIN_POSITIVE.ln(), 0.0f64);
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        let below = f(mid.exp()) < q;
        // F increases in x, so it decreases in 1 - x.
        if below != upper {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    point((0.5 * (lo + hi)).exp())
}

fn criterion_1() -> Outcome {
    let qs = [1e-12, 1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0 - 1e-6];
    let mut worst_inverse = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut worst_gap = 0.0f64;
    for a in [0.5, 1.0, 5.0, 14.5, 50.0, 500.0] {
        let p = BetaParams::new(a, 0.5).unwrap();
        for q in qs {
            let x = reg_inc_beta_inv_point(p, q).unwrap();
            let oracle = bisection_inverse(p, q);
            worst_inverse = worst_inverse.max((reg_inc_beta_at(p, x) - q).abs());
            worst_oracle = worst_oracle.max((reg_inc_beta_at(p, oracle) - q).abs());
            let (s, o) = if q > 0.5 {
                (x.complement(), oracle.complement())
            } else {
                (x.value(), oracle.value())
            };
            worst_gap = worst_gap.max((s - o).abs() / o);
        }
    }
    outcome(
        worst_inverse <= 1e-10 && worst_oracle <= 1e-10 && worst_gap <= 1e-6,
        format!(
            "max |F(F^-1(q)) - q| = {worst_inverse:.2e}, bisection {worst_oracle:.2e}, \
             max relative gap to bisection {worst_gap:.2e}"
        ),
    )
}

fn hadamard_setup() -> HadamardSetup {
    HadamardSetup {
        n: 32,
        k0: 3,
        trials: 1000,
        seed: SEED,
    }
}

fn criterion_2() -> Outcome {
    let rows = validate_thm2(&hadamard_setup(), &[1.0, 5.0, 10.0, 50.0], &[0.1, 0.01]).unwrap();
    let pass = rows.iter().all(|r| r.violation_rate <= r.alpha + 0.03);
    let cells: Vec<String> = rows
        .iter()
        .map(|r| format!("snr={} a={}: {:.3}", r.snr, r.alpha, r.violation_rate))
        .collect();
    outcome(pass, cells.join(", "))
}

fn criterion_3() -> Outcome {
    let rows = validate_thm1(&hadamard_setup(), &[1.0, 5.0, 10.0, 50.0]).unwrap();
    let low = (0.31..=0.43).contains(&rows[0].p_kmin_eq_k0);
    let high = rows[1..].iter().all(|r| r.p_kmin_eq_k0 >= 0.99);
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].median_rr_kmin < w[0].median_rr_kmin);
    let cells: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "snr={}: P={:.3} medRR={:.4}",
                r.snr, r.p_kmin_eq_k0, r.median_rr_kmin
            )
        })
        .collect();
    outcome(low && high && decreasing, cells.join(", "))
}

fn criterion_4() -> Outcome {
    let experiments = [
        (
            "gaussian 200x300",
            MatrixModel::Gaussian,
            200,
            300,
            SupportRule::Random,
        ),
        (
            "gaussian 200x900",
            MatrixModel::Gaussian,
            200,
            900,
            SupportRule::Random,
        ),
        (
            "hadamard 128x256",
            MatrixModel::IdentityHadamard,
            128,
            256,
            SupportRule::Random,
        ),
        (
            "hadamard 128x256 prefix",
            MatrixModel::IdentityHadamard,
            128,
            256,
            SupportRule::FixedPrefix,
        ),
    ];
    let mut pass = true;
    let mut sigma_misses = false;
    let mut cells = Vec::new();
    for (i, (name, model, n, p, rule)) in experiments.into_iter().enumerate() {
        let spec = ExperimentSpec {
            model,
            n,
            p,
            support_rule: rule,
            k0: 6,
            snr: 3.0,
            sigma: 1.0,
            trials: 100,
            seed: SEED + i as u64,
            selectors: vec![
                SelectorSpec::Rrt {
                    alpha: AlphaRule::InvLogN,
                },
                SelectorSpec::Rrt {
                    alpha: AlphaRule::InvSqrtN,
                },
                SelectorSpec::OmpK0,
                SelectorSpec::OmpSigma,
            ],
            matrix_per_trial: true,
        };
        let report = run_experiment(&spec).unwrap();
        let k0_l2 = report.summary_for("omp_k0").unwrap().l2_error.median;
        for label in ["rrt:inv_log_n", "rrt:inv_sqrt_n"] {
            let s = report.summary_for(label).unwrap();
            let ok = s.false_positives.median == 0.0
                && s.false_negatives.median == 0.0
                && s.l2_error.median <= 1.25 * k0_l2;
            pass &= ok;
            cells.push(format!(
                "{name} {label}: fp={} fn={} l2={:.3} (k0 {:.3})",
                s.false_positives.median, s.false_negatives.median, s.l2_error.median, k0_l2
            ));
        }
        let sigma_fn = report
            .summary_for("omp_sigma")
            .unwrap()
            .false_negatives
            .median;
        sigma_misses |= sigma_fn >= 1.0;
        cells.push(format!("{name} omp_sigma fn={sigma_fn}"));
    }
    outcome(pass && sigma_misses, cells.join("; "))
}

fn criterion_5() -> Outcome {
    let grid = [100, 1_000, 10_000, 100_000];
    let fixed = validate_thm4(Regime::FixedP, AlphaRule::InvLogN, &grid).unwrap();
    let exp = validate_thm4(Regime::ExpP, AlphaRule::InvLogN, &grid).unwrap();
    let monotone = fixed.windows(2).all(|w| w[1].gamma > w[0].gamma);
    let fixed_last = fixed.last().unwrap().gamma;
    let exp_last = exp.last().unwrap().gamma;
    let limit = Regime::ExpP.limit();
    let pass = monotone && fixed_last >= 0.95 && (exp_last - limit).abs() <= 0.01;
    let fg: Vec<String> = fixed.iter().map(|g| format!("{:.4}", g.gamma)).collect();
    let eg: Vec<String> = exp.iter().map(|g| format!("{:.4}", g.gamma)).collect();
    outcome(
        pass,
        format!(
            "fixed_p [{}], exp_p [{}] vs limit {limit:.4}",
            fg.join(", "),
            eg.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    let mut cells = Vec::new();
    for (ds, expected) in [
        (Bundled::StackLoss, vec![1, 3, 4, 21]),
        (Bundled::Stars, vec![11, 20, 30, 34]),
    ] {
        let data = ds.load().unwrap();
        for rule in [AlphaRule::InvLogN, AlphaRule::InvSqrtN] {
            let found = outlier_detect(&data, rule).unwrap().outliers;
            pass &= found == expected;
            cells.push(format!("{} {rule}: {found:?}", ds.name()));
        }
    }
    outcome(pass, cells.join(", "))
}

fn criterion_7() -> Outcome {
    let r = validate_appendix_b(32, 2, 3, 10_000, SEED).unwrap();
    outcome(
        r.ks_statistic <= 0.0163,
        format!("KS = {:.4} over {} samples", r.ks_statistic, r.samples),
    )
}

// Recomputes every residual from a pseudo-inverse of the selected columns.
fn naive_omp(x: &DMatrix<f64>, y: &DVector<f64>, k_max: usize) -> (Vec<usize>, Vec<f64>) {
    let mut support = Vec::new();
    let mut r = y.clone();
    let mut norms = vec![r.norm()];
    for _ in 0..k_max {
        let corr = x.transpose() * &r;
        let mut best = 0;
        for j in 1..corr.len() {
            if corr[j].abs() > corr[best].abs() {
                best = j;
            }
        }
        support.push(best);
        let xs = x.select_columns(&support);
        let beta = xs.clone().pseudo_inverse(1e-12).unwrap() * y;
        r = y - xs * beta;
        norms.push(r.norm());
    }
    (support, norms)
}

fn criterion_8() -> Outcome {
    let mut index_mismatches = 0;
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let x = model_matrix(MatrixModel::Gaussian, 20, 40, SEED + i).unwrap();
        let y = rrt_core::linalg::gaussian_noise(20, 1.0, SEED + 1000 + i);
        let trace = omp_run(&x, &y, 10, StopRule::None).unwrap();
        let (support, norms) = naive_omp(x.matrix(), &DVector::from_vec(y), 10);
        if trace.selected() != support.as_slice() {
            index_mismatches += 1;
        }
        for (a, b) in trace.residual_norms().iter().zip(&norms) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        index_mismatches == 0 && worst <= 1e-8,
        format!("{index_mismatches} index mismatches, max norm gap {worst:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let r = validate_thm6(&hadamard_setup(), 100.0, 0.1).unwrap();
    outcome(
        r.false_negative_rate <= 0.01 && r.support_error_rate <= 0.13,
        format!(
            "fn rate {:.3}, support error rate {:.3}, fp rate {:.3}",
            r.false_negative_rate, r.support_error_rate, r.false_positive_rate
        ),
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("inverse regularized beta round trip", criterion_1),
        ("threshold coverage over k > k_min", criterion_2),
        ("k_min distribution vs SNR", criterion_3),
        ("synthetic experiments at SNR 3", criterion_4),
        ("threshold asymptotics", criterion_5),
        ("outliers in stack loss and stars", criterion_6),
        ("residual ratio beta law", criterion_7),
        ("omp matches pseudo-inverse reference", criterion_8),
        ("rrt support errors at high SNR", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {} ({name}): {} [{:.1}s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
