//! Runs one resolved experiment: simulate, judge the requested checks, and
//! write the three artifacts (trajectory CSV, text report, JSON summary).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::json;
use smale_core::rational::{int, max_abs_diff};
use smale_core::{
    check_smale_bound, dissenter_statistics, predict_limit, run, segment_limit, AnalysisError,
    BoundSide, Classification, EngineError, GameSpec, Line, Rat, Trajectory,
};

use crate::config::{good_players, segment_scenario, CheckKind, Experiment};
use crate::report::{
    dec, limit_tolerance, render_report, write_atomic, CheckOutcome, CheckStatus, GameSummary,
    RunSummary,
};

/// A finished run: the trajectory plus every check verdict.
#[derive(Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub outcomes: Vec<CheckOutcome>,
}

impl RunOutput {
    /// True when no check failed (inconclusive checks do not fail a run).
    pub fn passed(&self) -> bool {
        !self.outcomes.iter().any(CheckOutcome::failed)
    }
}

/// Paths of the files a run writes.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub trajectory_csv: PathBuf,
    pub report_txt: PathBuf,
    pub summary_json: PathBuf,
}

/// Simulates and judges checks without touching the filesystem.
pub fn evaluate(exp: &Experiment) -> anyhow::Result<RunOutput> {
    let trajectory = run(&exp.game, &exp.plans, exp.horizon, exp.policy)
        .map_err(|e| anyhow!("engine rejected a validated experiment: {e}"))?;
    let outcomes = exp
        .checks
        .iter()
        .map(|&check| run_check(check, exp, &trajectory))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(RunOutput {
        trajectory,
        outcomes,
    })
}

/// Evaluates the experiment and writes its artifacts under `out_dir`.
pub fn run_experiment(
    exp: &Experiment,
    out_dir: &Path,
) -> anyhow::Result<(RunOutput, RunArtifacts)> {
    let output = evaluate(exp)?;
    let artifacts = write_artifacts(exp, &output, out_dir)?;
    Ok((output, artifacts))
}

pub fn build_summary(exp: &Experiment, output: &RunOutput) -> RunSummary {
    let trajectory = &output.trajectory;
    let estimate = trajectory.limit_estimate();
    let residual = trajectory.cauchy_residual.as_ref();
    RunSummary {
        game: GameSummary::new(&exp.game),
        horizon: exp.horizon,
        seed: exp.seed,
        final_round: trajectory.final_state.round,
        limit_estimate: estimate.iter().map(|v| v.to_string()).collect(),
        limit_estimate_decimal: estimate.iter().map(dec).collect(),
        cauchy_residual: residual.map(|r| r.to_string()),
        cauchy_residual_decimal: residual.map(dec),
        limit_tolerance_decimal: dec(&limit_tolerance(&exp.game, exp.horizon, residual)),
        checks: output.outcomes.clone(),
        passed: output.passed(),
    }
}

pub fn write_artifacts(
    exp: &Experiment,
    output: &RunOutput,
    out_dir: &Path,
) -> anyhow::Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {out_dir:?}"))?;

    let trajectory_csv = out_dir.join("trajectory.csv");
    let mut csv = Vec::new();
    output
        .trajectory
        .write_csv(&mut csv, exp.csv_digits)
        .context("rendering trajectory CSV")?;
    write_atomic(&trajectory_csv, &csv)
        .with_context(|| format!("writing {trajectory_csv:?}"))?;

    let report_txt = out_dir.join("report.txt");
    let report = render_report(
        &exp.game,
        &exp.plans,
        exp.horizon,
        exp.seed,
        &output.trajectory,
        &output.outcomes,
    );
    write_atomic(&report_txt, report.as_bytes())
        .with_context(|| format!("writing {report_txt:?}"))?;

    let summary_json = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&build_summary(exp, output))
        .context("serializing run summary")?;
    text.push('\n');
    write_atomic(&summary_json, text.as_bytes())
        .with_context(|| format!("writing {summary_json:?}"))?;

    Ok(RunArtifacts {
        trajectory_csv,
        report_txt,
        summary_json,
    })
}

/// Residual level above which limit comparisons and classifications are not
/// attempted: if the half- and full-horizon averages disagree by more than
/// 1/32 of the payoff range, the run has not settled and any verdict would
/// be noise (and a residual-scaled tolerance would be so wide that passing
/// means nothing).
fn convergence_threshold(game: &GameSpec) -> Rat {
    let (lo, hi) = game.payoff_range();
    (hi - lo) / int(32)
}

fn unsettled(exp: &Experiment, trajectory: &Trajectory) -> Option<CheckStatus> {
    let residual = trajectory.cauchy_residual.as_ref()?;
    if *residual > convergence_threshold(&exp.game) {
        Some(CheckStatus::Inconclusive)
    } else {
        None
    }
}

fn inconclusive_outcome(check: CheckKind, exp: &Experiment, trajectory: &Trajectory) -> CheckOutcome {
    let residual = trajectory
        .cauchy_residual
        .as_ref()
        .expect("inconclusive implies a residual exists");
    let threshold = convergence_threshold(&exp.game);
    CheckOutcome {
        name: check.token().to_string(),
        status: CheckStatus::Inconclusive,
        detail: format!(
            "run has not settled: cauchy residual {} exceeds {} (payoff range / 32)",
            dec(residual),
            dec(&threshold)
        ),
        data: json!({
            "cauchy_residual": residual.to_string(),
            "threshold": threshold.to_string(),
        }),
    }
}

fn run_check(
    check: CheckKind,
    exp: &Experiment,
    trajectory: &Trajectory,
) -> anyhow::Result<CheckOutcome> {
    match check {
        CheckKind::EnvelopeBound => envelope_check(exp, trajectory),
        CheckKind::LimitPrediction => limit_check(exp, trajectory),
        CheckKind::DissenterStatistics => dissenter_check(exp, trajectory),
        CheckKind::SegmentLimit => segment_check(exp, trajectory),
    }
}

/// Exact decay-envelope verification for every threshold-rule player, on
/// both sides of its line.
fn envelope_check(exp: &Experiment, _trajectory: &Trajectory) -> anyhow::Result<CheckOutcome> {
    let mut rows = Vec::new();
    let mut all_passed = true;
    for (j, plan) in exp.plans.iter().enumerate() {
        let Some((line, t0)) = plan.threshold_rule() else {
            continue;
        };
        for side in [BoundSide::DefectAbove, BoundSide::CooperateBelow] {
            let check = match check_smale_bound(&exp.game, &exp.plans, exp.horizon, j, line, t0, side)
            {
                Ok(check) => check,
                // A line that fails to separate the outcome set voids the
                // envelope's hypothesis: that is a check failure, not an
                // internal error.
                Err(EngineError::NotSeparating) => {
                    return Ok(CheckOutcome {
                        name: CheckKind::EnvelopeBound.token().to_string(),
                        status: CheckStatus::Fail,
                        detail: format!(
                            "player {}'s line does not separate the outcome set, so no decay \
                             envelope applies",
                            j + 1
                        ),
                        data: json!({ "player": j + 1 }),
                    });
                }
                Err(e) => return Err(anyhow!("envelope check rejected a validated setup: {e}")),
            };
            all_passed &= check.passed;
            rows.push(json!({
                "player": j + 1,
                "side": side.to_string(),
                "t0": t0,
                "m0": check.m0.to_string(),
                "max_excess": check.max_excess.to_string(),
                "max_excess_decimal": dec(&check.max_excess),
                "passed": check.passed,
            }));
        }
    }
    Ok(CheckOutcome {
        name: CheckKind::EnvelopeBound.token().to_string(),
        status: if all_passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!(
            "{} envelope(s) verified exactly over every round{}",
            rows.len(),
            if all_passed { "" } else { "; violations found" }
        ),
        data: json!({ "envelopes": rows }),
    })
}

/// Simulated final average versus the closed-form fixed point of the
/// players' lines.
fn limit_check(exp: &Experiment, trajectory: &Trajectory) -> anyhow::Result<CheckOutcome> {
    let lines: Vec<Line> = exp
        .plans
        .iter()
        .map(|p| {
            p.threshold_rule()
                .map(|(line, _)| line.clone())
                .ok_or_else(|| anyhow!("limit check on a plan without a line"))
        })
        .collect::<anyhow::Result<_>>()?;
    let prediction = predict_limit(&exp.game, &lines)
        .map_err(|e| anyhow!("limit prediction rejected a validated setup: {e}"))?;

    if unsettled(exp, trajectory).is_some() {
        return Ok(inconclusive_outcome(CheckKind::LimitPrediction, exp, trajectory));
    }
    let estimate = trajectory.limit_estimate();
    let residual = trajectory.cauchy_residual.as_ref();
    let tolerance = limit_tolerance(&exp.game, exp.horizon, residual);
    let error = max_abs_diff(estimate, &prediction.point);
    let passed = error <= tolerance;
    Ok(CheckOutcome {
        name: CheckKind::LimitPrediction.token().to_string(),
        status: if passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!(
            "max |simulated - predicted| = {} vs tolerance {}",
            dec(&error),
            dec(&tolerance)
        ),
        data: json!({
            "predicted": rat_strings(&prediction.point),
            "predicted_decimal": dec_strings(&prediction.point),
            "simulated": rat_strings(estimate),
            "simulated_decimal": dec_strings(estimate),
            "harmonic_slope": prediction.harmonic_slope.to_string(),
            "mean_anchor": prediction.mean_anchor.to_string(),
            "max_error": error.to_string(),
            "max_error_decimal": dec(&error),
            "tolerance": tolerance.to_string(),
            "tolerance_decimal": dec(&tolerance),
        }),
    })
}

/// Classification of the final average into the three dissenter classes,
/// with the per-class inequalities and the mean identities checked against
/// the run's tolerance.
fn dissenter_check(exp: &Experiment, trajectory: &Trajectory) -> anyhow::Result<CheckOutcome> {
    if unsettled(exp, trajectory).is_some() {
        return Ok(inconclusive_outcome(
            CheckKind::DissenterStatistics,
            exp,
            trajectory,
        ));
    }
    let n = exp.game.players();
    let good = good_players(&exp.game, &exp.plans);
    let k = good.len();
    let dissenters: Vec<usize> = (0..n).filter(|j| !good.contains(j)).collect();
    // The statistics expect good players first; permute and remember the map.
    let perm: Vec<usize> = good.iter().chain(dissenters.iter()).copied().collect();
    let estimate = trajectory.limit_estimate();
    let point: Vec<Rat> = perm.iter().map(|&j| estimate[j].clone()).collect();
    let lines: Vec<Line> = good
        .iter()
        .map(|&j| exp.plans[j].threshold_rule().expect("good player").0.clone())
        .collect();
    let report = dissenter_statistics(&exp.game, &point, k, &lines)
        .map_err(|e| anyhow!("dissenter statistics rejected a validated setup: {e}"))?;

    let residual = trajectory.cauchy_residual.as_ref();
    let tolerance = limit_tolerance(&exp.game, exp.horizon, residual);
    let mut problems = Vec::new();
    match report.classification {
        Classification::FullCooperation => {
            let full = vec![report.pn.clone(); n];
            let error = max_abs_diff(&point, &full);
            if error > tolerance {
                problems.push(format!(
                    "classified full-cooperation but the average is {} away from it",
                    dec(&error)
                ));
            }
        }
        Classification::DissentersBelowPn => {
            if &report.good_mean - &report.dissenter_mean > tolerance {
                problems.push("good-player mean exceeds the dissenter mean".to_string());
            }
            if &report.dissenter_mean - &report.pn > tolerance {
                problems.push("dissenter mean exceeds the full-cooperation payoff".to_string());
            }
        }
        Classification::ExploiterPresent => {
            let (Some(rest_mean), Some(rest_ceiling)) = (&report.rest_mean, &report.rest_ceiling)
            else {
                return Err(anyhow!("exploiter classification without rest statistics"));
            };
            if rest_mean - rest_ceiling > tolerance {
                problems.push(format!(
                    "non-exploiting dissenters average {} above their ceiling {}",
                    dec(rest_mean),
                    dec(rest_ceiling)
                ));
            }
        }
    }
    let identities = report.identity_residuals();
    let worst_identity = identities.max_abs();
    if worst_identity > tolerance {
        problems.push(format!(
            "identity residual {} exceeds tolerance {}",
            dec(&worst_identity),
            dec(&tolerance)
        ));
    }

    let passed = problems.is_empty();
    let exploiter_original = report.exploiter.map(|idx| perm[idx] + 1);
    Ok(CheckOutcome {
        name: CheckKind::DissenterStatistics.token().to_string(),
        status: if passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: if passed {
            format!(
                "classification {} with identity residuals within {}",
                report.classification,
                dec(&tolerance)
            )
        } else {
            problems.join("; ")
        },
        data: json!({
            "k": k,
            "good_players": good.iter().map(|j| j + 1).collect::<Vec<_>>(),
            "classification": report.classification.to_string(),
            "good_mean": report.good_mean.to_string(),
            "dissenter_mean": report.dissenter_mean.to_string(),
            "population_mean": report.population_mean.to_string(),
            "harmonic_slope": report.harmonic_slope.to_string(),
            "exploiter": exploiter_original,
            "rest_mean": report.rest_mean.as_ref().map(|v| v.to_string()),
            "rest_ceiling": report.rest_ceiling.as_ref().map(|v| v.to_string()),
            "identity_residuals": {
                "mean_decomposition": dec(&identities.mean_decomposition),
                "slope_balance": dec(&identities.slope_balance),
                "dissenter_gap": dec(&identities.dissenter_gap),
            },
            "tolerance": tolerance.to_string(),
            "tolerance_decimal": dec(&tolerance),
        }),
    })
}

/// Simulated final average versus the predicted point on the defection
/// segment.
fn segment_check(exp: &Experiment, trajectory: &Trajectory) -> anyhow::Result<CheckOutcome> {
    let lambda = segment_scenario(&exp.game, &exp.plans)
        .map_err(|e| anyhow!("segment check on a non-segment scenario: {e}"))?;
    let name = CheckKind::SegmentLimit.token().to_string();
    let prediction = match segment_limit(&exp.game, &lambda) {
        Ok(p) => p,
        Err(e @ (AnalysisError::OutOfSegment { .. } | AnalysisError::SegmentDegenerate)) => {
            return Ok(CheckOutcome {
                name,
                status: CheckStatus::Fail,
                detail: format!("no predicted point: {e}"),
                data: json!({ "lambda": lambda.to_string(), "error": e.to_string() }),
            });
        }
        Err(e) => return Err(anyhow!("segment prediction rejected a validated setup: {e}")),
    };
    if unsettled(exp, trajectory).is_some() {
        return Ok(inconclusive_outcome(CheckKind::SegmentLimit, exp, trajectory));
    }
    let estimate = trajectory.limit_estimate();
    let residual = trajectory.cauchy_residual.as_ref();
    let tolerance = limit_tolerance(&exp.game, exp.horizon, residual);
    let error = max_abs_diff(estimate, &prediction.point);
    let passed = error <= tolerance;
    Ok(CheckOutcome {
        name,
        status: if passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!(
            "segment point at a = {}; max |simulated - predicted| = {} vs tolerance {}",
            prediction.a,
            dec(&error),
            dec(&tolerance)
        ),
        data: json!({
            "lambda": lambda.to_string(),
            "a": prediction.a.to_string(),
            "a_decimal": dec(&prediction.a),
            "predicted": rat_strings(&prediction.point),
            "predicted_decimal": dec_strings(&prediction.point),
            "defector_payoff": prediction.defector_payoff.to_string(),
            "defector_payoff_decimal": dec(&prediction.defector_payoff),
            "simulated": rat_strings(estimate),
            "simulated_decimal": dec_strings(estimate),
            "max_error": error.to_string(),
            "max_error_decimal": dec(&error),
            "tolerance": tolerance.to_string(),
            "tolerance_decimal": dec(&tolerance),
        }),
    })
}

fn rat_strings(values: &[Rat]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn dec_strings(values: &[Rat]) -> Vec<String> {
    values.iter().map(dec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn resolve(toml: &str) -> Experiment {
        ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap()
    }

    #[test]
    fn free_rider_run_passes_its_segment_and_envelope_checks() {
        let exp = resolve(
            r#"
            horizon = 20000
            checks = ["prop23_bound", "segment_limit"]
            [game]
            preset = "example42"
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "alld"
            "#,
        );
        let output = evaluate(&exp).unwrap();
        assert!(output.passed(), "outcomes: {:#?}", output.outcomes);
        assert_eq!(output.outcomes.len(), 2);
        let segment = &output.outcomes[1];
        assert_eq!(segment.data["a"], "7/11");
        assert_eq!(segment.data["defector_payoff"], "84/11");
    }

    #[test]
    fn good_line_run_passes_limit_prediction() {
        let exp = resolve(
            r#"
            horizon = 100000
            checks = ["cor33_limit"]
            [game]
            staircase = 3
            [[plans]]
            kind = "smale"
            line = { slope = "3/4", through_pn = true }
            [[plans]]
            kind = "smale"
            line = { slope = "4/5", through_pn = true }
            [[plans]]
            kind = "smale"
            line = { slope = "5/6", through_pn = true }
            "#,
        );
        let output = evaluate(&exp).unwrap();
        assert!(output.passed(), "outcomes: {:#?}", output.outcomes);
        let check = &output.outcomes[0];
        assert_eq!(
            check.data["predicted"],
            serde_json::json!(["4", "4", "4"])
        );
    }

    #[test]
    fn dissenter_check_classifies_below_pn() {
        let exp = resolve(
            r#"
            horizon = 10000
            checks = ["thm35_report"]
            [game]
            staircase = 3
            [[plans]]
            kind = "alld"
            [[plans]]
            kind = "smale"
            line = { slope = "3/4", through_pn = true }
            [[plans]]
            kind = "smale"
            line = { slope = "5/6", through_pn = true }
            "#,
        );
        let output = evaluate(&exp).unwrap();
        assert!(output.passed(), "outcomes: {:#?}", output.outcomes);
        let check = &output.outcomes[0];
        assert_eq!(check.data["classification"], "dissenters-below-pn");
        assert_eq!(check.data["k"], 2);
        // Good players are 2 and 3 in presentation numbering.
        assert_eq!(check.data["good_players"], serde_json::json!([2, 3]));
    }

    #[test]
    fn non_separating_lines_fail_the_envelope_check() {
        let exp = resolve(
            r#"
            horizon = 50
            checks = ["prop23_bound"]
            [game]
            staircase = 3
            [[plans]]
            kind = "smale"
            line = { slope = 2, intercept = 0 }
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
            "#,
        );
        let output = evaluate(&exp).unwrap();
        assert!(!output.passed());
        assert_eq!(output.outcomes[0].status, CheckStatus::Fail);
        assert!(output.outcomes[0].detail.contains("does not separate"));
    }

    #[test]
    fn short_noisy_runs_are_inconclusive_not_failed() {
        let exp = resolve(
            r#"
            horizon = 3
            checks = ["segment_limit"]
            [game]
            preset = "example42"
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "alld"
            "#,
        );
        let output = evaluate(&exp).unwrap();
        assert_eq!(output.outcomes[0].status, CheckStatus::Inconclusive);
        assert!(output.passed(), "inconclusive must not fail the run");
    }

    #[test]
    fn artifacts_land_atomically_with_stable_content() {
        let exp = resolve(
            r#"
            horizon = 64
            snapshot_stride = 16
            [game]
            staircase = 3
            [[plans]]
            kind = "smale"
            line = { slope = "3/4", through_pn = true }
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
            "#,
        );
        let dir = tempfile::tempdir().unwrap();
        let (output, artifacts) = run_experiment(&exp, dir.path()).unwrap();
        assert!(output.passed());
        let csv = std::fs::read_to_string(&artifacts.trajectory_csv).unwrap();
        assert!(csv.starts_with("round, s_1, s_2, s_3, pi_mean\n"));
        assert_eq!(csv.lines().count(), 1 + 4); // header + rounds 16, 32, 48, 64
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&artifacts.summary_json).unwrap())
                .unwrap();
        assert_eq!(summary["final_round"], 64);
        assert_eq!(summary["passed"], true);
        let report = std::fs::read_to_string(&artifacts.report_txt).unwrap();
        assert!(report.contains("overall: PASS"));

        // Byte-identical on a second run.
        let again = tempfile::tempdir().unwrap();
        let (_, second) = run_experiment(&exp, again.path()).unwrap();
        assert_eq!(
            std::fs::read(&artifacts.trajectory_csv).unwrap(),
            std::fs::read(&second.trajectory_csv).unwrap()
        );
    }
}
