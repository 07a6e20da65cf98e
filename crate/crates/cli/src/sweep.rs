//! Parameter sweeps: re-run a base experiment over a grid of values on one
//! axis and tabulate predicted/simulated limits per grid point.
//!
//! A bad grid point (unparseable value, axiom violation, infeasible check)
//! marks its own row as errored and the sweep continues. Rows run
//! sequentially so that artifacts and the summary table are deterministic;
//! each row's JSON file is written atomically as soon as the row finishes.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::json;
use smale_core::rational::parse_rat;
use smale_core::{predict_limit, segment_limit, Line, Rat};

use crate::config::{
    segment_scenario, Experiment, ExperimentConfig, LineConfig, PlanKind, RatSpec,
};
use crate::experiment::{build_summary, evaluate, RunOutput};
use crate::report::{dec, write_atomic, CheckStatus};

/// Which knob the sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    /// Slope of the unique `smale` plan's line, re-anchored through the
    /// full-cooperation point.
    Lambda,
    /// Activation round of the unique `eventual` plan.
    T0,
    /// Player count: the base must be a staircase game with plans shaped
    /// `allc x (n-2), smale, alld`; each grid point rebuilds that shape.
    N,
}

impl SweepAxis {
    pub fn token(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::T0 => "t0",
            SweepAxis::N => "n",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// How one grid point ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    /// Ran, and no requested check failed.
    Pass,
    /// Ran, but at least one check failed.
    Fail,
    /// Never ran: the value or the instantiated config was invalid.
    Error,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::Error => "error",
        })
    }
}

/// One grid point of the summary table. Rationals are kept exact; the CSV
/// renders them as decimals for plotting.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: String,
    pub status: RowStatus,
    pub error: Option<String>,
    /// Segment parameter of the predicted point, for segment-shaped rows.
    pub a: Option<Rat>,
    /// Last coordinate of the predicted limit: the n-th player's payoff.
    pub predicted_pi_n: Option<Rat>,
    /// Last coordinate of the final time average.
    pub simulated_pi_n: Option<Rat>,
    pub cauchy_residual: Option<Rat>,
    /// Checks that passed out of checks requested.
    pub checks_passed: Option<(usize, usize)>,
}

impl SweepRow {
    fn errored(axis: SweepAxis, value: &str, message: String) -> SweepRow {
        SweepRow {
            axis,
            value: value.to_string(),
            status: RowStatus::Error,
            error: Some(message),
            a: None,
            predicted_pi_n: None,
            simulated_pi_n: None,
            cauchy_residual: None,
            checks_passed: None,
        }
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "axis, value, status, error, a, predicted_pi_n, simulated_pi_n, cauchy_residual, checks_passed";

/// Files a sweep writes.
#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub row_files: Vec<PathBuf>,
}

/// Instantiates the base config at one grid value.
fn apply_axis(
    base: &ExperimentConfig,
    axis: SweepAxis,
    value: &str,
) -> Result<ExperimentConfig, String> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Lambda => {
            // Parse now so a bad literal errors the row before any run; the
            // config below carries the value textually.
            parse_rat(value).map_err(|e| format!("lambda {value:?}: {e}"))?;
            let smale: Vec<usize> = cfg
                .plans
                .iter()
                .enumerate()
                .filter(|(_, p)| p.kind == PlanKind::Smale)
                .map(|(j, _)| j)
                .collect();
            let [j] = smale[..] else {
                return Err(format!(
                    "a lambda sweep needs exactly one smale plan, found {}",
                    smale.len()
                ));
            };
            cfg.plans[j].line = Some(LineConfig {
                slope: Some(RatSpec::Text(value.to_string())),
                intercept: None,
                through_pn: Some(true),
                diagonal: None,
            });
        }
        SweepAxis::T0 => {
            let activation: u64 = value
                .parse()
                .map_err(|_| format!("t0 {value:?}: not a round number"))?;
            let eventual: Vec<usize> = cfg
                .plans
                .iter()
                .enumerate()
                .filter(|(_, p)| p.kind == PlanKind::Eventual)
                .map(|(j, _)| j)
                .collect();
            let [j] = eventual[..] else {
                return Err(format!(
                    "a t0 sweep needs exactly one eventual plan, found {}",
                    eventual.len()
                ));
            };
            cfg.plans[j].activation = Some(activation);
        }
        SweepAxis::N => {
            let n: usize = value
                .parse()
                .map_err(|_| format!("n {value:?}: not a player count"))?;
            if n < 3 {
                return Err(format!("n {value:?}: the segment shape needs n >= 3"));
            }
            if cfg.game.staircase.is_none() {
                return Err("an n sweep needs a staircase base game".to_string());
            }
            let smale = segment_shaped_template(&cfg)?;
            cfg.game.staircase = Some(n);
            let mut plans = Vec::with_capacity(n);
            for _ in 0..n - 2 {
                plans.push(plan_of_kind(PlanKind::Allc));
            }
            plans.push(smale);
            plans.push(plan_of_kind(PlanKind::Alld));
            cfg.plans = plans;
        }
    }
    Ok(cfg)
}

/// The `smale` plan of a segment-shaped base (`allc x (n-2), smale, alld`),
/// reused as the template at every grid size.
fn segment_shaped_template(
    cfg: &ExperimentConfig,
) -> Result<crate::config::PlanConfig, String> {
    let n = cfg.plans.len();
    let shaped = n >= 3
        && cfg.plans[..n - 2].iter().all(|p| p.kind == PlanKind::Allc)
        && cfg.plans[n - 2].kind == PlanKind::Smale
        && cfg.plans[n - 1].kind == PlanKind::Alld;
    if shaped {
        Ok(cfg.plans[n - 2].clone())
    } else {
        Err("an n sweep needs plans shaped allc x (n-2), smale, alld".to_string())
    }
}

fn plan_of_kind(kind: PlanKind) -> crate::config::PlanConfig {
    crate::config::PlanConfig {
        kind,
        line: None,
        initial: None,
        script: None,
        rounds: None,
        fallback: None,
        activation: None,
        pre: None,
        inner: None,
    }
}

/// Closed-form predictions for a resolved experiment: the segment parameter
/// (segment-shaped runs only) and the predicted limit point (when one
/// exists).
fn predictions(exp: &Experiment) -> (Option<Rat>, Option<Vec<Rat>>) {
    if let Ok(lambda) = segment_scenario(&exp.game, &exp.plans) {
        return match segment_limit(&exp.game, &lambda) {
            Ok(p) => (Some(p.a), Some(p.point)),
            Err(_) => (None, None),
        };
    }
    let lines: Option<Vec<Line>> = exp
        .plans
        .iter()
        .map(|p| p.threshold_rule().map(|(line, _)| line.clone()))
        .collect();
    match lines {
        Some(lines) => match predict_limit(&exp.game, &lines) {
            Ok(p) => (None, Some(p.point)),
            Err(_) => (None, None),
        },
        None => (None, None),
    }
}

/// Runs one grid point; errors become an errored row, never a panic or an
/// aborted sweep.
fn evaluate_point(
    base: &ExperimentConfig,
    axis: SweepAxis,
    value: &str,
) -> (SweepRow, Option<(Experiment, RunOutput)>) {
    let cfg = match apply_axis(base, axis, value) {
        Ok(cfg) => cfg,
        Err(message) => return (SweepRow::errored(axis, value, message), None),
    };
    let exp = match cfg.resolve() {
        Ok(exp) => exp,
        Err(e) => return (SweepRow::errored(axis, value, e.to_string()), None),
    };
    let output = match evaluate(&exp) {
        Ok(output) => output,
        Err(e) => return (SweepRow::errored(axis, value, format!("{e:#}")), None),
    };
    let (a, predicted) = predictions(&exp);
    let passed = output
        .outcomes
        .iter()
        .filter(|o| o.status == CheckStatus::Pass)
        .count();
    let row = SweepRow {
        axis,
        value: value.to_string(),
        status: if output.passed() {
            RowStatus::Pass
        } else {
            RowStatus::Fail
        },
        error: None,
        a,
        predicted_pi_n: predicted.and_then(|p| p.last().cloned()),
        simulated_pi_n: output.trajectory.limit_estimate().last().cloned(),
        cauchy_residual: output.trajectory.cauchy_residual.clone(),
        checks_passed: Some((passed, output.outcomes.len())),
    };
    (row, Some((exp, output)))
}

/// Runs the whole grid without touching the filesystem. Used by the
/// verification suite and by tests; `run_sweep` adds the artifacts.
pub fn sweep_rows(base: &ExperimentConfig, axis: SweepAxis, values: &[String]) -> Vec<SweepRow> {
    values
        .iter()
        .map(|v| evaluate_point(base, axis, v).0)
        .collect()
}

/// Runs the grid and writes `rows/row_<i>.json` per point plus `sweep.csv`
/// and `sweep.json`. Returns the rows and the paths written.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    out_dir: &Path,
) -> anyhow::Result<(Vec<SweepRow>, SweepArtifacts)> {
    let rows_dir = out_dir.join("rows");
    std::fs::create_dir_all(&rows_dir)
        .with_context(|| format!("creating sweep directory {rows_dir:?}"))?;

    let mut rows = Vec::with_capacity(values.len());
    let mut row_files = Vec::with_capacity(values.len());
    for (idx, value) in values.iter().enumerate() {
        let (row, run) = evaluate_point(base, axis, value);
        let record = row_record(&row, run.as_ref());
        let path = rows_dir.join(format!("row_{idx}.json"));
        let mut text = serde_json::to_string_pretty(&record).context("serializing sweep row")?;
        text.push('\n');
        write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {path:?}"))?;
        row_files.push(path);
        rows.push(row);
    }

    let csv_path = out_dir.join("sweep.csv");
    write_atomic(&csv_path, render_sweep_csv(&rows).as_bytes())
        .with_context(|| format!("writing {csv_path:?}"))?;

    let json_path = out_dir.join("sweep.json");
    let summary = json!({
        "axis": axis.token(),
        "values": values,
        "rows": rows.iter().zip(values).map(|(row, _)| row_record(row, None)).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&summary).context("serializing sweep summary")?;
    text.push('\n');
    write_atomic(&json_path, text.as_bytes()).with_context(|| format!("writing {json_path:?}"))?;

    Ok((
        rows,
        SweepArtifacts {
            csv: csv_path,
            json: json_path,
            row_files,
        },
    ))
}

/// True when every row ran and passed its checks.
pub fn all_rows_passed(rows: &[SweepRow]) -> bool {
    rows.iter().all(|r| r.status == RowStatus::Pass)
}

fn row_record(row: &SweepRow, run: Option<&(Experiment, RunOutput)>) -> serde_json::Value {
    let exact = |v: &Option<Rat>| v.as_ref().map(|r| r.to_string());
    let decimal = |v: &Option<Rat>| v.as_ref().map(dec);
    let mut record = json!({
        "axis": row.axis.token(),
        "value": row.value,
        "status": row.status.to_string(),
        "error": row.error,
        "a": exact(&row.a),
        "a_decimal": decimal(&row.a),
        "predicted_pi_n": exact(&row.predicted_pi_n),
        "predicted_pi_n_decimal": decimal(&row.predicted_pi_n),
        "simulated_pi_n": exact(&row.simulated_pi_n),
        "simulated_pi_n_decimal": decimal(&row.simulated_pi_n),
        "cauchy_residual": decimal(&row.cauchy_residual),
        "checks_passed": row.checks_passed.map(|(p, t)| format!("{p}/{t}")),
    });
    if let Some((exp, output)) = run {
        record["summary"] = serde_json::to_value(build_summary(exp, output))
            .expect("run summaries serialize");
    }
    record
}

/// The plot-ready summary table; one line per grid point, decimals for the
/// rational columns.
pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let decimal = |v: &Option<Rat>| v.as_ref().map(dec).unwrap_or_default();
        // Commas would break the table; the messages are ours, so a simple
        // substitution is enough.
        let error = row
            .error
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace('\n', " ");
        let checks = row
            .checks_passed
            .map(|(p, t)| format!("{p}/{t}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{}, {}, {}, {}, {}, {}, {}, {}, {}\n",
            row.axis,
            row.value,
            row.status,
            error,
            decimal(&row.a),
            decimal(&row.predicted_pi_n),
            decimal(&row.simulated_pi_n),
            decimal(&row.cauchy_residual),
            checks,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use smale_core::rational::{int, rat};

    fn base(toml: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(toml).unwrap()
    }

    const FREE_RIDER_SEGMENT: &str = r#"
        horizon = 100
        [game]
        preset = "example42"
        [[plans]]
        kind = "allc"
        [[plans]]
        kind = "smale"
        line = { diagonal = true }
        [[plans]]
        kind = "alld"
    "#;

    #[test]
    fn lambda_sweep_payoffs_fall_as_lambda_rises() {
        let values: Vec<String> = ["1", "9/10", "5/6", "4/5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows = sweep_rows(&base(FREE_RIDER_SEGMENT), SweepAxis::Lambda, &values);
        assert!(all_rows_passed(&rows), "rows: {rows:#?}");
        let pi: Vec<Rat> = rows
            .iter()
            .map(|r| r.predicted_pi_n.clone().expect("segment prediction"))
            .collect();
        // Values are listed with lambda decreasing, so payoffs must rise.
        assert_eq!(pi[0], rat(84, 11));
        for pair in pi.windows(2) {
            assert!(pair[0] < pair[1], "expected strictly rising: {pi:?}");
        }
    }

    #[test]
    fn n_sweep_matches_the_staircase_formula() {
        let toml = r#"
            horizon = 100
            [game]
            staircase = 3
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "alld"
        "#;
        let values: Vec<String> = (3..=8).map(|n| n.to_string()).collect();
        let rows = sweep_rows(&base(toml), SweepAxis::N, &values);
        assert!(all_rows_passed(&rows), "rows: {rows:#?}");
        for (row, n) in rows.iter().zip(3i64..) {
            let expected = int(2 * n - 2) + rat(n - 3, n - 1);
            assert_eq!(row.predicted_pi_n.as_ref(), Some(&expected), "n = {n}");
            assert_eq!(row.a.as_ref(), Some(&rat(n - 2, n - 1)), "n = {n}");
        }
    }

    #[test]
    fn t0_sweep_adjusts_the_eventual_plan() {
        let toml = r#"
            horizon = 200
            [game]
            staircase = 3
            [[plans]]
            kind = "eventual"
            activation = 2
            pre = { kind = "alld" }
            inner = { kind = "smale", line = { slope = "3/4", through_pn = true } }
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
        "#;
        let values: Vec<String> = ["1", "50"].iter().map(|s| s.to_string()).collect();
        let modified = apply_axis(&base(toml), SweepAxis::T0, "50").unwrap();
        assert_eq!(modified.plans[0].activation, Some(50));
        let rows = sweep_rows(&base(toml), SweepAxis::T0, &values);
        assert!(all_rows_passed(&rows), "rows: {rows:#?}");

        let no_eventual = sweep_rows(&base(FREE_RIDER_SEGMENT), SweepAxis::T0, &values);
        assert!(no_eventual
            .iter()
            .all(|r| r.status == RowStatus::Error && r.error.as_ref().unwrap().contains("eventual")));
    }

    #[test]
    fn bad_grid_points_error_without_stopping_the_sweep() {
        let toml = r#"
            horizon = 20000
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
        "#;
        let values: Vec<String> = ["1", "oops", "3/2"].iter().map(|s| s.to_string()).collect();
        let dir = tempfile::tempdir().unwrap();
        let (rows, artifacts) = run_sweep(&base(toml), SweepAxis::Lambda, &values, dir.path()).unwrap();
        assert_eq!(rows[0].status, RowStatus::Pass);
        assert_eq!(rows[1].status, RowStatus::Error);
        assert!(rows[1].error.as_ref().unwrap().contains("oops"));
        // Slope 3/2 leaves the (0, 1] segment band, which the per-row
        // validation catches before running.
        assert_eq!(rows[2].status, RowStatus::Error);
        assert!(!all_rows_passed(&rows));

        let csv = std::fs::read_to_string(&artifacts.csv).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(artifacts.row_files.len(), 3);
        for path in &artifacts.row_files {
            assert!(path.exists());
        }
        let first: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&artifacts.row_files[0]).unwrap())
                .unwrap();
        assert_eq!(first["status"], "pass");
        assert_eq!(first["a"], "7/11");
        assert!(first["summary"]["passed"].as_bool().unwrap());
    }

    #[test]
    fn empty_grids_yield_a_header_only_table() {
        let dir = tempfile::tempdir().unwrap();
        let (rows, artifacts) =
            run_sweep(&base(FREE_RIDER_SEGMENT), SweepAxis::Lambda, &[], dir.path()).unwrap();
        assert!(rows.is_empty());
        assert!(all_rows_passed(&rows));
        let csv = std::fs::read_to_string(&artifacts.csv).unwrap();
        assert_eq!(csv, format!("{SWEEP_CSV_HEADER}\n"));
    }
}
