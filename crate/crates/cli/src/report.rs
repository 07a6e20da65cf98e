//! Check outcomes, report rendering, and artifact writing.
//!
//! Reports carry every quantity twice: as an exact rational (`"84/11"`) and
//! as a rounded decimal. The exact values are authoritative; the decimals
//! exist for plotting and reading.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use smale_core::rational::{int, to_decimal};
use smale_core::{GameSpec, Line, Plan, Rat, Trajectory};

/// Default significant digits for decimals in reports and summaries.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The run has not settled enough to judge the check either way.
    Inconclusive,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// One requested check, judged.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Structured numbers behind the verdict (exact strings and decimals).
    pub data: serde_json::Value,
}

impl CheckOutcome {
    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// The machine-readable record for one run: everything a script needs to
/// consume results without re-parsing the text report.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub game: GameSummary,
    pub horizon: u64,
    pub seed: u64,
    pub final_round: u64,
    /// Exact final average, one `"a/b"` string per player.
    pub limit_estimate: Vec<String>,
    pub limit_estimate_decimal: Vec<String>,
    /// Sup-norm distance between the full- and half-horizon averages.
    pub cauchy_residual: Option<String>,
    pub cauchy_residual_decimal: Option<String>,
    /// Comparison tolerance derived from the residual; see `limit_tolerance`.
    pub limit_tolerance_decimal: String,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GameSummary {
    pub players: usize,
    pub coop_payoffs: Vec<String>,
    pub defect_payoffs: Vec<String>,
    pub mean_payoffs: Vec<String>,
}

impl GameSummary {
    pub fn new(game: &GameSpec) -> Self {
        let n = game.players();
        GameSummary {
            players: n,
            coop_payoffs: (1..=n).map(|k| game.coop_payoff(k).to_string()).collect(),
            defect_payoffs: (0..n).map(|k| game.defect_payoff(k).to_string()).collect(),
            mean_payoffs: (0..=n).map(|k| game.mean_payoff(k).to_string()).collect(),
        }
    }
}

/// Tolerance for comparing a simulated limit estimate against a predicted
/// point: twice the Cauchy residual, floored at (payoff range)/horizon.
///
/// The floor matters. A run that settles into an exact cycle can have its
/// half- and full-horizon averages coincide — residual exactly zero — while
/// the average still sits O(1/horizon) away from the limit, because the
/// residual only sees the cycle's edge effects. No time average at horizon H
/// can pin the limit more tightly than its own per-round granularity
/// (payoff range)/H, so that is the least tolerance ever applied.
pub fn limit_tolerance(game: &GameSpec, horizon: u64, residual: Option<&Rat>) -> Rat {
    let (lo, hi) = game.payoff_range();
    let floor = (hi - lo) / int(horizon.try_into().unwrap_or(i64::MAX));
    let residual = residual.cloned().unwrap_or_else(|| int(0));
    int(2) * if residual > floor { residual } else { floor }
}

/// Decimal rendering at the report precision.
pub fn dec(value: &Rat) -> String {
    to_decimal(value, REPORT_DIGITS)
}

/// Human-readable one-liner for a plan.
pub fn plan_label(plan: &Plan) -> String {
    fn line_label(line: &Line) -> String {
        if line.slope == int(1) && line.intercept == int(0) {
            "the diagonal".to_string()
        } else {
            line.to_string()
        }
    }
    match plan {
        Plan::AllC => "always cooperate".to_string(),
        Plan::AllD => "always defect".to_string(),
        Plan::SimpleSmale { line, initial } => format!(
            "threshold rule on {} (first move {})",
            line_label(line),
            initial
        ),
        Plan::Scripted { moves, fallback } => {
            let shown: String = moves.iter().take(16).map(|m| m.as_char()).collect();
            let ellipsis = if moves.len() > 16 { "..." } else { "" };
            format!(
                "scripted {} move(s) \"{shown}{ellipsis}\", then {}",
                moves.len(),
                plan_label(fallback)
            )
        }
        Plan::Eventual {
            pre,
            activation,
            inner,
        } => format!(
            "{} until round {activation}, then {}",
            plan_label(pre),
            plan_label(inner)
        ),
    }
}

/// The plain-text report for one run.
pub fn render_report(
    game: &GameSpec,
    plans: &[Plan],
    horizon: u64,
    seed: u64,
    trajectory: &Trajectory,
    outcomes: &[CheckOutcome],
) -> String {
    let mut out = String::new();
    let summary = GameSummary::new(game);
    let _ = writeln!(out, "experiment report");
    let _ = writeln!(out, "=================");
    let _ = writeln!(out);
    let _ = writeln!(out, "game: {} players", summary.players);
    let _ = writeln!(
        out,
        "  cooperator payoffs: {}",
        summary.coop_payoffs.join(", ")
    );
    let _ = writeln!(
        out,
        "  defector payoffs:   {}",
        summary.defect_payoffs.join(", ")
    );
    let _ = writeln!(
        out,
        "  mean payoffs:       {}",
        summary.mean_payoffs.join(", ")
    );
    let _ = writeln!(out, "plans:");
    for (j, plan) in plans.iter().enumerate() {
        let _ = writeln!(out, "  player {}: {}", j + 1, plan_label(plan));
    }
    let _ = writeln!(out, "horizon: {horizon}    seed: {seed}");
    let _ = writeln!(out);
    let final_state = &trajectory.final_state;
    let _ = writeln!(out, "final average (round {}):", final_state.round);
    for (j, value) in final_state.average.iter().enumerate() {
        let _ = writeln!(out, "  s_{} = {}  (exact {})", j + 1, dec(value), value);
    }
    match &trajectory.cauchy_residual {
        Some(residual) => {
            let _ = writeln!(
                out,
                "cauchy residual: {}  (exact {})",
                dec(residual),
                residual
            );
        }
        None => {
            let _ = writeln!(out, "cauchy residual: not available (horizon < 2)");
        }
    }
    let tol = limit_tolerance(game, horizon, trajectory.cauchy_residual.as_ref());
    let _ = writeln!(
        out,
        "limit tolerance: {}  (2 x max(residual, payoff range / horizon))",
        dec(&tol)
    );
    let _ = writeln!(out);
    if outcomes.is_empty() {
        let _ = writeln!(out, "checks: none requested");
    } else {
        let _ = writeln!(out, "checks:");
        for outcome in outcomes {
            let _ = writeln!(out, "  [{}] {} - {}", outcome.status, outcome.name, outcome.detail);
        }
    }
    let passed = !outcomes.iter().any(CheckOutcome::failed);
    let _ = writeln!(out);
    let _ = writeln!(out, "overall: {}", if passed { "PASS" } else { "FAIL" });
    out
}

/// Writes `contents` to `path` atomically: the file appears complete or not
/// at all, never truncated.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use smale_core::rational::rat;
    use smale_core::{run, SnapshotPolicy};

    #[test]
    fn tolerance_is_floored_at_the_per_round_granularity() {
        let game = GameSpec::staircase(3); // payoff range [0, 5]
        // Large residual dominates the floor.
        let tol = limit_tolerance(&game, 1000, Some(&rat(1, 10)));
        assert_eq!(tol, rat(1, 5));
        // Zero residual falls back to 2 * range/horizon.
        let tol = limit_tolerance(&game, 1000, Some(&int(0)));
        assert_eq!(tol, rat(10, 1000));
        assert_eq!(limit_tolerance(&game, 1000, None), rat(10, 1000));
    }

    #[test]
    fn labels_describe_plans() {
        let plan = Plan::eventual(
            Plan::AllD,
            7,
            Plan::smale(Line::diagonal()),
        );
        let text = plan_label(&plan);
        assert_eq!(
            text,
            "always defect until round 7, then threshold rule on the diagonal (first move cooperate)"
        );
    }

    #[test]
    fn report_contains_the_essentials() {
        let game = GameSpec::free_rider();
        let plans = vec![Plan::AllC, Plan::smale(Line::diagonal()), Plan::AllD];
        let trajectory = run(&game, &plans, 100, SnapshotPolicy::FinalOnly).unwrap();
        let text = render_report(&game, &plans, 100, 0, &trajectory, &[]);
        assert!(text.contains("game: 3 players"));
        assert!(text.contains("player 3: always defect"));
        assert!(text.contains("final average (round 100)"));
        assert!(text.contains("overall: PASS"));
    }

    #[test]
    fn atomic_writes_replace_existing_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
    }
}
