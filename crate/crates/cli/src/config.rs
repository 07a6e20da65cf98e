//! Experiment configuration: the TOML schema and its resolution into core
//! types.
//!
//! Resolution is strict: every structural problem (wrong field combination,
//! bad rational literal, plan/game size mismatch, infeasible check request)
//! is reported before anything runs, each with its own diagnostic. All of
//! these map to the "invalid input" exit code.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smale_core::rational::{int, parse_rat};
use smale_core::{
    is_good_line, parse_script, predict_limit, random_script, GameError, GameSpec, Line, Move,
    Plan, PlanError, Point, Rat, SnapshotPolicy,
};

/// Everything a config file can say. See the crate README for the schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub plans: Vec<PlanConfig>,
    pub horizon: u64,
    #[serde(default)]
    pub snapshot_stride: StrideConfig,
    /// Seeds the generator behind every `random` plan in declaration order.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Significant digits for decimal rendering in CSV artifacts.
    #[serde(default = "default_csv_digits")]
    pub csv_digits: usize,
}

fn default_csv_digits() -> usize {
    12
}

/// Exactly one of the three forms: `staircase = n`, `preset = "..."`, or the
/// inline triple `n` / `coop_payoffs` / `defect_payoffs`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default)]
    pub staircase: Option<usize>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub coop_payoffs: Option<Vec<RatSpec>>,
    #[serde(default)]
    pub defect_payoffs: Option<Vec<RatSpec>>,
}

/// A rational literal: a TOML integer or a string `"a/b"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RatSpec {
    Integer(i64),
    Text(String),
}

impl RatSpec {
    pub fn resolve(&self, context: &str) -> Result<Rat, ConfigError> {
        match self {
            RatSpec::Integer(v) => Ok(int(*v)),
            RatSpec::Text(s) => parse_rat(s)
                .map_err(|e| ConfigError::Structure(format!("{context}: {e}"))),
        }
    }
}

/// Snapshot schedule: a positive integer stride, `"geometric"` (rounds 1, 2,
/// 4, 8, ...), or `"final"` (the last round only).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StrideConfig {
    Count(u64),
    Named(String),
}

impl Default for StrideConfig {
    fn default() -> Self {
        StrideConfig::Named("geometric".to_string())
    }
}

/// The analysis checks a run can request. The serialized names are the
/// config-file tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum CheckKind {
    /// Per-round decay envelope for every threshold-rule player.
    #[serde(rename = "prop23_bound")]
    EnvelopeBound,
    /// Simulated limit versus the closed-form fixed point of the lines.
    #[serde(rename = "cor33_limit")]
    LimitPrediction,
    /// Dissenter statistics, classification, and identity residuals.
    #[serde(rename = "thm35_report")]
    DissenterStatistics,
    /// Simulated limit versus the defection-segment intersection.
    #[serde(rename = "segment_limit")]
    SegmentLimit,
}

impl CheckKind {
    /// The config-file token, also used in reports and summaries.
    pub fn token(self) -> &'static str {
        match self {
            CheckKind::EnvelopeBound => "prop23_bound",
            CheckKind::LimitPrediction => "cor33_limit",
            CheckKind::DissenterStatistics => "thm35_report",
            CheckKind::SegmentLimit => "segment_limit",
        }
    }
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// One player's plan, possibly nesting others (`fallback`, `pre`, `inner`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub kind: PlanKind,
    #[serde(default)]
    pub line: Option<LineConfig>,
    /// Round-1 move for a `smale` plan: `"c"` (default) or `"d"`.
    #[serde(default)]
    pub initial: Option<String>,
    /// Move text for a `scripted` plan, e.g. `"ccdcd"`.
    #[serde(default)]
    pub script: Option<String>,
    /// Length of the generated script for a `random` plan.
    #[serde(default)]
    pub rounds: Option<u64>,
    /// Plan used once a script is exhausted (default: `allc`).
    #[serde(default)]
    pub fallback: Option<Box<PlanConfig>>,
    /// First round governed by `inner` in an `eventual` plan.
    #[serde(default)]
    pub activation: Option<u64>,
    #[serde(default)]
    pub pre: Option<Box<PlanConfig>>,
    #[serde(default)]
    pub inner: Option<Box<PlanConfig>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Smale,
    Allc,
    Alld,
    Scripted,
    Eventual,
    Random,
}

/// A line in one of three forms: `{ diagonal = true }`, `{ slope, intercept }`,
/// or `{ slope, through_pn = true }` (anchored at the full-cooperation point).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    #[serde(default)]
    pub slope: Option<RatSpec>,
    #[serde(default)]
    pub intercept: Option<RatSpec>,
    #[serde(default)]
    pub through_pn: Option<bool>,
    #[serde(default)]
    pub diagonal: Option<bool>,
}

/// Anything wrong with a config; all variants are "invalid input".
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Structure(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("plan for player {player}: {source}")]
    Plan {
        player: usize,
        #[source]
        source: PlanError,
    },
    #[error("check {check} cannot run with these plans: {reason}")]
    InfeasibleCheck { check: CheckKind, reason: String },
}

/// A fully resolved, validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub game: GameSpec,
    pub plans: Vec<Plan>,
    pub horizon: u64,
    pub policy: SnapshotPolicy,
    pub seed: u64,
    pub checks: Vec<CheckKind>,
    pub csv_digits: usize,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Validates everything and builds core types. No run happens here, and
    /// nothing is written anywhere.
    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        let game = self.game.resolve()?;
        if self.horizon == 0 {
            return Err(ConfigError::Structure(
                "horizon must be at least 1".to_string(),
            ));
        }
        if self.plans.len() != game.players() {
            return Err(ConfigError::Structure(format!(
                "game has {} players but {} plans are declared",
                game.players(),
                self.plans.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut plans = Vec::with_capacity(self.plans.len());
        for (player, cfg) in self.plans.iter().enumerate() {
            let plan = cfg.resolve(&game, &mut rng)?;
            plan.validate()
                .map_err(|source| ConfigError::Plan { player, source })?;
            plans.push(plan);
        }
        let policy = self.snapshot_stride.resolve()?;
        if self.csv_digits == 0 {
            return Err(ConfigError::Structure(
                "csv_digits must be at least 1".to_string(),
            ));
        }
        let mut checks = Vec::new();
        for &check in &self.checks {
            if !checks.contains(&check) {
                checks.push(check);
            }
        }
        for &check in &checks {
            check_feasible(check, &game, &plans)?;
        }
        Ok(Experiment {
            game,
            plans,
            horizon: self.horizon,
            policy,
            seed: self.seed,
            checks,
            csv_digits: self.csv_digits,
        })
    }
}

impl GameConfig {
    pub fn resolve(&self) -> Result<GameSpec, ConfigError> {
        let inline =
            self.n.is_some() || self.coop_payoffs.is_some() || self.defect_payoffs.is_some();
        match (self.staircase, &self.preset, inline) {
            (Some(n), None, false) => {
                if n < 2 {
                    Err(ConfigError::Structure(
                        "staircase games need at least 2 players".to_string(),
                    ))
                } else {
                    Ok(GameSpec::staircase(n))
                }
            }
            (None, Some(name), false) => match name.as_str() {
                "example42" | "free-rider" => Ok(GameSpec::free_rider()),
                other => Err(ConfigError::Structure(format!(
                    "unknown game preset {other:?} (known presets: example42, free-rider)"
                ))),
            },
            (None, None, true) => {
                let (Some(n), Some(coop), Some(defect)) =
                    (self.n, &self.coop_payoffs, &self.defect_payoffs)
                else {
                    return Err(ConfigError::Structure(
                        "an inline game needs all of n, coop_payoffs, defect_payoffs".to_string(),
                    ));
                };
                let coop = coop
                    .iter()
                    .map(|r| r.resolve("coop_payoffs"))
                    .collect::<Result<Vec<_>, _>>()?;
                let defect = defect
                    .iter()
                    .map(|r| r.resolve("defect_payoffs"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GameSpec::checked(n, coop, defect)?)
            }
            (None, None, false) => Err(ConfigError::Structure(
                "game must specify one of: staircase = n, preset = \"...\", or an inline \
                 n / coop_payoffs / defect_payoffs"
                    .to_string(),
            )),
            _ => Err(ConfigError::Structure(
                "game must use exactly one form (staircase, preset, or inline payoffs)"
                    .to_string(),
            )),
        }
    }
}

impl StrideConfig {
    pub fn resolve(&self) -> Result<SnapshotPolicy, ConfigError> {
        match self {
            StrideConfig::Count(0) => Err(ConfigError::Structure(
                "snapshot_stride must be at least 1".to_string(),
            )),
            StrideConfig::Count(k) => Ok(SnapshotPolicy::Every(*k)),
            StrideConfig::Named(name) => match name.as_str() {
                "geometric" => Ok(SnapshotPolicy::Geometric),
                "final" => Ok(SnapshotPolicy::FinalOnly),
                other => Err(ConfigError::Structure(format!(
                    "unknown snapshot_stride {other:?} (use a positive integer, \
                     \"geometric\", or \"final\")"
                ))),
            },
        }
    }
}

impl PlanConfig {
    fn resolve(&self, game: &GameSpec, rng: &mut ChaCha8Rng) -> Result<Plan, ConfigError> {
        let structure = |msg: String| ConfigError::Structure(msg);
        match self.kind {
            PlanKind::Allc => {
                self.forbid_all_but(&[], "allc")?;
                Ok(Plan::AllC)
            }
            PlanKind::Alld => {
                self.forbid_all_but(&[], "alld")?;
                Ok(Plan::AllD)
            }
            PlanKind::Smale => {
                self.forbid_all_but(&["line", "initial"], "smale")?;
                let line = self
                    .line
                    .as_ref()
                    .ok_or_else(|| structure("a smale plan needs a line".to_string()))?
                    .resolve(game)?;
                let initial = parse_move(self.initial.as_deref().unwrap_or("c"))?;
                Ok(Plan::smale_with_initial(line, initial))
            }
            PlanKind::Scripted => {
                self.forbid_all_but(&["script", "fallback"], "scripted")?;
                let text = self
                    .script
                    .as_ref()
                    .ok_or_else(|| structure("a scripted plan needs a script".to_string()))?;
                let moves = parse_script(text)
                    .map_err(|e| structure(format!("script {text:?}: {e}")))?;
                let fallback = match &self.fallback {
                    Some(f) => f.resolve(game, rng)?,
                    None => Plan::AllC,
                };
                Ok(Plan::scripted(moves, fallback))
            }
            PlanKind::Random => {
                self.forbid_all_but(&["rounds", "fallback"], "random")?;
                let rounds = self
                    .rounds
                    .ok_or_else(|| structure("a random plan needs rounds".to_string()))?;
                let moves = random_script(rng, rounds as usize);
                let fallback = match &self.fallback {
                    Some(f) => f.resolve(game, rng)?,
                    None => Plan::AllC,
                };
                Ok(Plan::scripted(moves, fallback))
            }
            PlanKind::Eventual => {
                self.forbid_all_but(&["activation", "pre", "inner"], "eventual")?;
                let activation = self
                    .activation
                    .ok_or_else(|| structure("an eventual plan needs an activation round".to_string()))?;
                let pre = self
                    .pre
                    .as_ref()
                    .ok_or_else(|| structure("an eventual plan needs a pre plan".to_string()))?
                    .resolve(game, rng)?;
                let inner = self
                    .inner
                    .as_ref()
                    .ok_or_else(|| structure("an eventual plan needs an inner plan".to_string()))?
                    .resolve(game, rng)?;
                Ok(Plan::eventual(pre, activation, inner))
            }
        }
    }

    /// Rejects fields that do not belong to the plan kind, so that a typo
    /// (say, a script on an allc plan) fails loudly instead of being ignored.
    fn forbid_all_but(&self, allowed: &[&str], kind: &str) -> Result<(), ConfigError> {
        let fields: [(&str, bool); 7] = [
            ("line", self.line.is_some()),
            ("initial", self.initial.is_some()),
            ("script", self.script.is_some()),
            ("rounds", self.rounds.is_some()),
            ("fallback", self.fallback.is_some()),
            ("activation", self.activation.is_some()),
            ("pre", self.pre.is_some()),
        ];
        for (name, present) in fields {
            if present && !allowed.contains(&name) {
                return Err(ConfigError::Structure(format!(
                    "field {name:?} does not apply to a {kind} plan"
                )));
            }
        }
        if self.inner.is_some() && !allowed.contains(&"inner") {
            return Err(ConfigError::Structure(format!(
                "field \"inner\" does not apply to a {kind} plan"
            )));
        }
        Ok(())
    }
}

fn parse_move(text: &str) -> Result<Move, ConfigError> {
    match text.to_ascii_lowercase().as_str() {
        "c" => Ok(Move::Cooperate),
        "d" => Ok(Move::Defect),
        other => Err(ConfigError::Structure(format!(
            "initial move must be \"c\" or \"d\", not {other:?}"
        ))),
    }
}

impl LineConfig {
    pub fn resolve(&self, game: &GameSpec) -> Result<Line, ConfigError> {
        let diagonal = self.diagonal == Some(true);
        let through_pn = self.through_pn == Some(true);
        match (diagonal, &self.slope, &self.intercept, through_pn) {
            (true, None, None, false) => Ok(Line::diagonal()),
            (false, Some(slope), Some(intercept), false) => Ok(Line::new(
                slope.resolve("line slope")?,
                intercept.resolve("line intercept")?,
            )),
            (false, Some(slope), None, true) => {
                let pn = game.coop_payoff(game.players()).clone();
                Ok(Line::through(
                    &Point::new(pn.clone(), pn),
                    slope.resolve("line slope")?,
                ))
            }
            _ => Err(ConfigError::Structure(
                "a line must be { diagonal = true }, { slope, intercept }, or \
                 { slope, through_pn = true }"
                    .to_string(),
            )),
        }
    }
}

/// Players whose plans are good simple Smale plans (possibly after an
/// activation round): line through the full-cooperation point with slope
/// strictly between (n-1)/n and 1.
pub fn good_players(game: &GameSpec, plans: &[Plan]) -> Vec<usize> {
    plans
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.threshold_rule()
                .is_some_and(|(line, _)| is_good_line(game, line))
        })
        .map(|(j, _)| j)
        .collect()
}

/// If the plans form the defection-segment scenario — players 1..n-2 always
/// cooperate, player n-1 runs a threshold rule on a line through the
/// full-cooperation point with slope in (0, 1], player n always defects —
/// returns that slope. Otherwise explains what is missing.
pub fn segment_scenario(game: &GameSpec, plans: &[Plan]) -> Result<Rat, String> {
    let n = game.players();
    if n < 3 {
        return Err("the segment scenario needs at least 3 players".to_string());
    }
    for (j, plan) in plans.iter().take(n - 2).enumerate() {
        if !matches!(plan, Plan::AllC) {
            return Err(format!(
                "player {} must be allc (the scenario is allc x {}, smale, alld)",
                j + 1,
                n - 2
            ));
        }
    }
    let Plan::SimpleSmale { line, .. } = &plans[n - 2] else {
        return Err(format!("player {} must be a smale plan", n - 1));
    };
    let pn = game.coop_payoff(n).clone();
    if !line.contains(&Point::new(pn.clone(), pn)) {
        return Err(format!(
            "player {}'s line must pass through the full-cooperation point",
            n - 1
        ));
    }
    if !(line.slope > int(0) && line.slope <= int(1)) {
        return Err(format!(
            "player {}'s slope must be in (0, 1], got {}",
            n - 1,
            line.slope
        ));
    }
    if !matches!(plans[n - 1], Plan::AllD) {
        return Err(format!("player {n} must be alld"));
    }
    Ok(line.slope.clone())
}

fn check_feasible(check: CheckKind, game: &GameSpec, plans: &[Plan]) -> Result<(), ConfigError> {
    let infeasible = |reason: String| ConfigError::InfeasibleCheck { check, reason };
    match check {
        CheckKind::EnvelopeBound => {
            if plans.iter().any(|p| p.threshold_rule().is_some()) {
                Ok(())
            } else {
                Err(infeasible(
                    "no player follows a threshold rule (smale, or eventual with a smale inner \
                     plan)"
                        .to_string(),
                ))
            }
        }
        CheckKind::LimitPrediction => {
            let mut lines = Vec::with_capacity(plans.len());
            for (j, plan) in plans.iter().enumerate() {
                match plan.threshold_rule() {
                    Some((line, _)) => lines.push(line.clone()),
                    None => {
                        return Err(infeasible(format!(
                            "player {} does not follow a threshold rule, so no limit can be \
                             predicted",
                            j + 1
                        )))
                    }
                }
            }
            // Dry-run the closed form so slope/separation/degeneracy problems
            // surface before anything runs.
            predict_limit(game, &lines)
                .map(|_| ())
                .map_err(|e| infeasible(e.to_string()))
        }
        CheckKind::DissenterStatistics => {
            let good = good_players(game, plans);
            if good.is_empty() {
                Err(infeasible(
                    "no player uses a good line (through the full-cooperation point with slope \
                     strictly between (n-1)/n and 1)"
                        .to_string(),
                ))
            } else if good.len() == plans.len() {
                Err(infeasible(
                    "every player uses a good line; dissenter statistics need at least one \
                     dissenter"
                        .to_string(),
                ))
            } else {
                Ok(())
            }
        }
        CheckKind::SegmentLimit => {
            segment_scenario(game, plans).map(|_| ()).map_err(infeasible)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smale_core::rational::rat;

    const BASE: &str = r#"
        horizon = 100

        [game]
        staircase = 3

        [[plans]]
        kind = "smale"
        line = { slope = "3/4", through_pn = true }

        [[plans]]
        kind = "allc"

        [[plans]]
        kind = "alld"
    "#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        let exp = cfg.resolve().unwrap();
        assert_eq!(exp.game.players(), 3);
        assert_eq!(exp.plans.len(), 3);
        assert_eq!(exp.policy, SnapshotPolicy::Geometric);
        assert_eq!(exp.csv_digits, 12);
        let (line, t0) = exp.plans[0].threshold_rule().unwrap();
        assert_eq!(t0, 1);
        assert_eq!(line.slope, rat(3, 4));
        // Through (4, 4): y = (3/4)x + 1.
        assert_eq!(line.intercept, int(1));
    }

    #[test]
    fn inline_games_and_presets_resolve() {
        let toml = r#"
            horizon = 10
            [game]
            n = 2
            coop_payoffs = [0, "3"]
            defect_payoffs = [1, "5"]
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
        "#;
        let exp = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap();
        assert_eq!(exp.game.players(), 2);
        assert_eq!(*exp.game.coop_payoff(2), int(3));

        let preset = r#"
            horizon = 10
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
        let exp = ExperimentConfig::from_toml(preset).unwrap().resolve().unwrap();
        assert_eq!(exp.game, GameSpec::free_rider());
    }

    #[test]
    fn axiom_violations_are_reported_with_the_game_error() {
        let toml = r#"
            horizon = 10
            [game]
            n = 2
            coop_payoffs = [3, 0]
            defect_payoffs = [1, 5]
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
        "#;
        let err = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap_err();
        assert!(matches!(err, ConfigError::Game(_)), "got {err:?}");
    }

    #[test]
    fn plan_count_mismatch_is_structural() {
        let toml = r#"
            horizon = 10
            [game]
            staircase = 4
            [[plans]]
            kind = "allc"
        "#;
        let err = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap_err();
        assert!(matches!(err, ConfigError::Structure(_)));
        assert!(err.to_string().contains("4 players"));
    }

    #[test]
    fn misplaced_plan_fields_are_rejected() {
        let toml = r#"
            horizon = 10
            [game]
            staircase = 3
            [[plans]]
            kind = "allc"
            script = "ccd"
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
        "#;
        let err = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("script"));
    }

    #[test]
    fn random_plans_are_seeded_and_deterministic() {
        let toml = r#"
            horizon = 10
            seed = 42
            [game]
            staircase = 3
            [[plans]]
            kind = "random"
            rounds = 16
            [[plans]]
            kind = "random"
            rounds = 16
            fallback = { kind = "alld" }
            [[plans]]
            kind = "allc"
        "#;
        let a = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap();
        let b = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap();
        assert_eq!(a.plans, b.plans);
        let Plan::Scripted { moves, .. } = &a.plans[0] else {
            panic!("random plan resolves to a scripted plan");
        };
        assert_eq!(moves.len(), 16);
        // Different seeds give different scripts (with overwhelming odds).
        let other = toml.replace("seed = 42", "seed = 43");
        let c = ExperimentConfig::from_toml(&other).unwrap().resolve().unwrap();
        assert_ne!(a.plans[0], c.plans[0]);
    }

    #[test]
    fn infeasible_checks_are_diagnosed() {
        let no_threshold = r#"
            horizon = 10
            checks = ["prop23_bound"]
            [game]
            staircase = 3
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "allc"
            [[plans]]
            kind = "alld"
        "#;
        let err = ExperimentConfig::from_toml(no_threshold)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(
            err,
            ConfigError::InfeasibleCheck {
                check: CheckKind::EnvelopeBound,
                ..
            }
        ));

        let all_diagonal = r#"
            horizon = 10
            checks = ["cor33_limit"]
            [game]
            staircase = 3
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
        "#;
        let err = ExperimentConfig::from_toml(all_diagonal)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(
            err,
            ConfigError::InfeasibleCheck {
                check: CheckKind::LimitPrediction,
                ..
            }
        ));

        let segment = r#"
            horizon = 10
            checks = ["segment_limit"]
            [game]
            staircase = 3
            [[plans]]
            kind = "alld"
            [[plans]]
            kind = "smale"
            line = { diagonal = true }
            [[plans]]
            kind = "allc"
        "#;
        let err = ExperimentConfig::from_toml(segment)
            .unwrap()
            .resolve()
            .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("player 1 must be allc"), "got {text}");
    }

    #[test]
    fn nested_and_eventual_plans_resolve() {
        let toml = r#"
            horizon = 10
            [game]
            staircase = 3
            [[plans]]
            kind = "eventual"
            activation = 5
            pre = { kind = "alld" }
            inner = { kind = "smale", line = { slope = "5/6", through_pn = true } }
            [[plans]]
            kind = "scripted"
            script = "CCD"
            fallback = { kind = "smale", line = { diagonal = true }, initial = "d" }
            [[plans]]
            kind = "allc"
        "#;
        let exp = ExperimentConfig::from_toml(toml).unwrap().resolve().unwrap();
        let (line, t0) = exp.plans[0].threshold_rule().unwrap();
        assert_eq!(t0, 4);
        assert_eq!(line.slope, rat(5, 6));
        assert!(matches!(&exp.plans[1], Plan::Scripted { moves, .. } if moves.len() == 3));
        assert_eq!(good_players(&exp.game, &exp.plans), vec![0]);
    }

    #[test]
    fn segment_scenario_accepts_the_canonical_shape() {
        let game = GameSpec::free_rider();
        let plans = vec![
            Plan::AllC,
            Plan::smale(Line::diagonal()),
            Plan::AllD,
        ];
        assert_eq!(segment_scenario(&game, &plans), Ok(int(1)));
        let wrong = vec![Plan::AllC, Plan::AllC, Plan::AllD];
        assert!(segment_scenario(&game, &wrong).is_err());
    }
}
