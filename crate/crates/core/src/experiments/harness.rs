use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{SelectorSummary, TrialMetrics};
use super::spec::{ExperimentSpec, SelectorSpec};
use crate::baselines::{cv_omp, omp_known_k0, omp_sigma_stop, CvConfig};
use crate::error::Result;
use crate::linalg::{gaussian_noise_from, model_matrix, snr_scale, DesignMatrix, SparseSignal};
use crate::omp::{omp_run, OmpTrace, StopRule};
use crate::rrt::{kmax_default, rrt_select, RecoveryResult};
use crate::seed::{self, stream};

/// One synthetic regression problem `y = Xβ + w`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: DesignMatrix,
    pub signal: SparseSignal,
    pub y: Vec<f64>,
}

/// Draws trial `trial` of `spec`. `shared` is used as the design when given.
pub fn draw_instance(
    spec: &ExperimentSpec,
    trial: usize,
    shared: Option<&DesignMatrix>,
) -> Result<Instance> {
    let t = trial as u64;
    let x = match shared {
        Some(x) => x.clone(),
        None => model_matrix(
            spec.model,
            spec.n,
            spec.p,
            seed::derive(spec.seed, &[t, stream::MATRIX]),
        )?,
    };
    let mut rng = seed::rng_for(spec.seed, &[t, stream::SUPPORT]);
    let raw = SparseSignal::random_signs(spec.p, spec.k0, spec.support_rule, &mut rng)?;
    let signal = snr_scale(&x, &raw, spec.snr, spec.sigma)?;
    let mut y = x.combine(signal.support(), signal.values());
    let noise = gaussian_noise_from(
        &mut seed::rng_for(spec.seed, &[t, stream::NOISE]),
        spec.n,
        spec.sigma,
    );
    y.iter_mut().zip(noise).for_each(|(yi, wi)| *yi += wi);
    Ok(Instance { x, signal, y })
}

fn shared_design(spec: &ExperimentSpec) -> Result<Option<DesignMatrix>> {
    if spec.matrix_per_trial && spec.model.is_random() {
        Ok(None)
    } else {
        model_matrix(
            spec.model,
            spec.n,
            spec.p,
            seed::derive(spec.seed, &[stream::MATRIX]),
        )
        .map(Some)
    }
}

fn run_selector(
    spec: &ExperimentSpec,
    sel: &SelectorSpec,
    inst: &Instance,
    trace: &mut Option<OmpTrace>,
    trial: usize,
) -> Result<RecoveryResult> {
    let (n, p) = (spec.n, spec.p);
    match *sel {
        SelectorSpec::Rrt { alpha } => {
            if trace.is_none() {
                *trace = Some(omp_run(
                    &inst.x,
                    &inst.y,
                    kmax_default(n, p),
                    StopRule::None,
                )?);
            }
            rrt_select(trace.as_ref().unwrap(), n, p, alpha.resolve(n)?)
        }
        SelectorSpec::OmpK0 => omp_known_k0(&inst.x, &inst.y, spec.k0),
        SelectorSpec::OmpSigma => omp_sigma_stop(&inst.x, &inst.y, spec.sigma),
        SelectorSpec::Cv { folds } => {
            let cfg = CvConfig {
                folds,
                seed: seed::derive(spec.seed, &[trial as u64, stream::FOLDS]),
                k_max: None,
            };
            Ok(cv_omp(&inst.x, &inst.y, cfg)?.result)
        }
    }
}

/// Per-trial metrics and per-selector aggregates of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    /// Ordered by trial, then by selector position.
    pub trials: Vec<TrialMetrics>,
    pub summary: Vec<SelectorSummary>,
}

/// Runs every trial of `spec` in parallel; the report depends only on the
/// spec, never on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let shared = shared_design(spec)?;
    let labels: Vec<String> = spec.selectors.iter().map(|s| s.to_string()).collect();

    let per_trial: Vec<Vec<TrialMetrics>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let inst = draw_instance(spec, t, shared.as_ref())?;
            let mut trace = None;
            spec.selectors
                .iter()
                .zip(&labels)
                .map(|(sel, label)| {
                    let est = run_selector(spec, sel, &inst, &mut trace, t)?;
                    Ok(TrialMetrics::score(
                        t,
                        label.clone(),
                        &est,
                        inst.signal.support(),
                        inst.signal.values(),
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let trials: Vec<TrialMetrics> = per_trial.into_iter().flatten().collect();

    let summary = labels
        .iter()
        .filter_map(|label| {
            let rows: Vec<&TrialMetrics> = trials.iter().filter(|r| &r.selector == label).collect();
            SelectorSummary::from_trials(label, &rows)
        })
        .collect();
    Ok(ExperimentReport {
        spec: spec.clone(),
        trials,
        summary,
    })
}

impl ExperimentReport {
    pub fn summary_for(&self, selector: &str) -> Option<&SelectorSummary> {
        self.summary.iter().find(|s| s.selector == selector)
    }

    /// One row per trial and selector, preceded by `header` as a `#` comment.
    pub fn write_trials_csv<W: Write>(&self, mut out: W, header: Option<&str>) -> Result<()> {
        if let Some(h) = header {
            writeln!(out, "# {h}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial_id",
            "selector",
            "l2_error",
            "fp",
            "fn",
            "exact",
            "k_selected",
        ])?;
        for r in &self.trials {
            w.write_record([
                r.trial_id.to_string(),
                r.selector.clone(),
                format!("{:e}", r.l2_error),
                r.false_positives.to_string(),
                r.false_negatives.to_string(),
                r.exact.to_string(),
                r.k_selected.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.summary)?;
        Ok(())
    }
}
