//! The round-by-round simulator.
//!
//! A run maintains the running average `s^T` of the per-round payoff vectors
//! through the incremental recursion
//! `s^{T+1} = (T/(T+1)) s^T + (1/(T+1)) S^{T+1}`, exactly. Internally the
//! state is not a vector of rationals but a vector of integer payoff *sums*
//! scaled by the common denominator of the payoff table: with `D` that
//! denominator, the engine stores `sum_j = D * Σ_t S^t_j` and the grand total
//! `Σ_j sum_j`, so one round costs a handful of big-integer additions and the
//! average is recovered on demand as `sum_j / (D T)`. Decision tests against
//! a line are cross-multiplied into a single integer sign test per player per
//! round (see `LineTest`), which keeps million-round exact runs cheap.
//!
//! [`step`] is the plain-rational reference for the same recursion; the test
//! suite certifies that the scaled fast path and the reference agree exactly.
//!
//! [`check_smale_bound`] replays a run while verifying the decay envelope
//! `L(Π_j(s^T)) <= M0 / T` for every round `T >= T0` — the quantitative form
//! of "a player who defects whenever pushed above its line keeps the average
//! from staying above". The comparison is exact: cross-multiplying by the
//! positive denominators turns `L <= M0/T` into an integer inequality in
//! which `T` cancels, so a million-round envelope check costs one
//! multiplication and comparison per round.

use crate::game::GameSpec;
use crate::geometry::{is_separation_line, Line, Point, StrategySet};
use crate::plans::{Move, Plan, PlanError};
use crate::rational::{int, max_abs_diff, mean, to_decimal, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::io::{self, Write};

/// Structural problems with a run or bound-check request.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("game has {expected} players but {got} plans were given")]
    PlanCount { expected: usize, got: usize },
    #[error("horizon must be at least 1 round")]
    ZeroHorizon,
    #[error("snapshot stride must be at least 1")]
    ZeroStride,
    #[error("plan for player {player} is invalid: {source}")]
    InvalidPlan {
        player: usize,
        #[source]
        source: PlanError,
    },
    #[error("bound check line is not a separation line for this game")]
    NotSeparating,
    #[error("bound window start {t0} must lie in 1..={horizon}")]
    BoundWindow { t0: u64, horizon: u64 },
    #[error("player {player}'s plan does not guarantee the {side} behaviour from round {t0}")]
    BoundHypothesis {
        player: usize,
        side: BoundSide,
        t0: u64,
    },
    #[error("player index {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },
}

/// Exact simulation state after some round `T >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub round: u64,
    /// `s^T`, the average of the first `round` payoff vectors.
    pub average: Vec<Rat>,
    pub last_moves: Vec<Move>,
}

impl SimState {
    /// State after round 1: the average is the first payoff vector itself.
    pub fn initial(game: &GameSpec, moves: &[Move]) -> SimState {
        let coop: Vec<bool> = moves.iter().map(|m| m.is_cooperate()).collect();
        SimState {
            round: 1,
            average: game.payoffs(&coop),
            last_moves: moves.to_vec(),
        }
    }
}

/// One exact averaging step: plays `moves`, returning the state after round
/// `T + 1` with `s^{T+1} = (T s^T + S^{T+1}) / (T + 1)`.
///
/// This is the reference implementation; [`Runner`] computes the same values
/// through scaled integer sums.
pub fn step(game: &GameSpec, state: &SimState, moves: &[Move]) -> SimState {
    let coop: Vec<bool> = moves.iter().map(|m| m.is_cooperate()).collect();
    let payoff = game.payoffs(&coop);
    let t = int(state.round as i64);
    let t1 = int(state.round as i64 + 1);
    let average = state
        .average
        .iter()
        .zip(&payoff)
        .map(|(s, p)| (&t * s + p) / &t1)
        .collect();
    SimState {
        round: state.round + 1,
        average,
        last_moves: moves.to_vec(),
    }
}

/// Which rounds to record in a [`Trajectory`]. The final round is always
/// included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotPolicy {
    /// Rounds 1, 2, 4, 8, … — log-spaced, for convergence plots.
    #[default]
    Geometric,
    /// Every `k`-th round.
    Every(u64),
    /// Only the final round.
    FinalOnly,
}

/// A sampled `(round, average)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub round: u64,
    pub average: Vec<Rat>,
}

/// The recorded outcome of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// Sampled states at strictly increasing rounds; the last entry is the
    /// final round.
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
    /// `‖s^H − s^{H/2}‖_∞` for horizon `H >= 2`: a convergence diagnostic for
    /// treating the final average as a limit estimate. `None` for `H = 1`.
    pub cauchy_residual: Option<Rat>,
}

impl Trajectory {
    /// The final average, used as the limit estimate of the run.
    pub fn limit_estimate(&self) -> &[Rat] {
        &self.final_state.average
    }

    /// Writes the snapshots as CSV with header `round, s_1, …, s_n, pi_mean`,
    /// values rounded to `sig_digits` significant digits (exactly, via
    /// decimal rendering of the underlying rationals).
    pub fn write_csv<W: Write>(&self, mut out: W, sig_digits: usize) -> io::Result<()> {
        let n = self.final_state.average.len();
        write!(out, "round")?;
        for j in 1..=n {
            write!(out, ", s_{j}")?;
        }
        writeln!(out, ", pi_mean")?;
        for snap in &self.snapshots {
            write!(out, "{}", snap.round)?;
            for value in &snap.average {
                write!(out, ", {}", to_decimal(value, sig_digits))?;
            }
            writeln!(out, ", {}", to_decimal(&mean(&snap.average), sig_digits))?;
        }
        Ok(())
    }
}

/// Cross-multiplied decision test for one line.
///
/// With scaled sums `sum_j`, grand total `tot`, round `T`, payoff scale `D`
/// and the line `y = (ln/ld) x + (bn/bd)` (denominators positive), the
/// projected point of player `j` is `x = sum_j/(D T)`, `y = tot/(n D T)`, and
///
/// `L(x, y) > 0  ⟺  ld·bd·tot − n·bd·ln·sum_j − n·D·ld·bn·T > 0`.
///
/// The left side of the equivalence is `excess / (n D ld bd T)`, a positive
/// multiple of `L`, so the integer sign decides the move.
#[derive(Debug, Clone)]
struct LineTest {
    c_total: BigInt,
    c_own: BigInt,
    c_round: BigInt,
}

impl LineTest {
    fn new(n: usize, scale: &BigInt, line: &Line) -> LineTest {
        let slope = line.slope.reduced();
        let intercept = line.intercept.reduced();
        let n = BigInt::from(n);
        LineTest {
            c_total: slope.denom() * intercept.denom(),
            c_own: &n * intercept.denom() * slope.numer(),
            c_round: &n * scale * slope.denom() * intercept.numer(),
        }
    }

    /// `(n D ld bd T) · L(Π_j(s^T))` as an integer.
    fn scaled_eval(&self, own_sum: &BigInt, total: &BigInt, avg_round: u64) -> BigInt {
        &self.c_total * total - &self.c_own * own_sum - &self.c_round * BigInt::from(avg_round)
    }

    fn decide(&self, own_sum: &BigInt, total: &BigInt, avg_round: u64) -> Move {
        if self.scaled_eval(own_sum, total, avg_round).is_positive() {
            Move::Defect
        } else {
            Move::Cooperate
        }
    }
}

/// A [`Plan`] compiled against a game's payoff scale.
#[derive(Debug, Clone)]
enum PreparedPlan {
    Constant(Move),
    Smale(LineTest),
    Scripted {
        moves: Vec<Move>,
        fallback: Box<PreparedPlan>,
    },
    Eventual {
        pre: Box<PreparedPlan>,
        activation: u64,
        inner: Box<PreparedPlan>,
    },
}

impl PreparedPlan {
    fn compile(plan: &Plan, n: usize, scale: &BigInt) -> PreparedPlan {
        match plan {
            Plan::AllC => PreparedPlan::Constant(Move::Cooperate),
            Plan::AllD => PreparedPlan::Constant(Move::Defect),
            Plan::SimpleSmale { line, .. } => PreparedPlan::Smale(LineTest::new(n, scale, line)),
            Plan::Scripted { moves, fallback } => PreparedPlan::Scripted {
                moves: moves.clone(),
                fallback: Box::new(PreparedPlan::compile(fallback, n, scale)),
            },
            Plan::Eventual {
                pre,
                activation,
                inner,
            } => PreparedPlan::Eventual {
                pre: Box::new(PreparedPlan::compile(pre, n, scale)),
                activation: *activation,
                inner: Box::new(PreparedPlan::compile(inner, n, scale)),
            },
        }
    }

    /// Move for `round = avg_round + 1`, deciding off the scaled state.
    fn decide(&self, round: u64, own_sum: &BigInt, total: &BigInt, avg_round: u64) -> Move {
        match self {
            PreparedPlan::Constant(mv) => *mv,
            PreparedPlan::Smale(test) => test.decide(own_sum, total, avg_round),
            PreparedPlan::Scripted { moves, fallback } => match moves.get(round as usize - 1) {
                Some(&mv) => mv,
                None => fallback.decide(round, own_sum, total, avg_round),
            },
            PreparedPlan::Eventual {
                pre,
                activation,
                inner,
            } => {
                if round < *activation {
                    pre.decide(round, own_sum, total, avg_round)
                } else {
                    inner.decide(round, own_sum, total, avg_round)
                }
            }
        }
    }
}

/// Incremental simulator over scaled integer sums.
///
/// `Runner::new` plays round 1 (via each plan's initial move); every
/// [`advance`](Self::advance) plays one further round. Averages and
/// projections are reconstructed exactly on demand.
pub struct Runner<'a> {
    game: &'a GameSpec,
    plans: Vec<PreparedPlan>,
    /// Common denominator `D` of all payoffs.
    scale: BigInt,
    /// `D * p_k` indexed by `k − 1`, and `D * r_k` indexed by `k`.
    coop_scaled: Vec<BigInt>,
    defect_scaled: Vec<BigInt>,
    /// Scaled sum of all payoffs dealt in a round with `k` cooperators.
    round_totals: Vec<BigInt>,
    /// `D * Σ_t S^t_j` per player.
    sums: Vec<BigInt>,
    /// `Σ_j sums[j]`.
    total: BigInt,
    round: u64,
    last_moves: Vec<Move>,
    move_buf: Vec<Move>,
}

impl<'a> Runner<'a> {
    pub fn new(game: &'a GameSpec, plans: &[Plan]) -> Result<Self, EngineError> {
        let n = game.players();
        if plans.len() != n {
            return Err(EngineError::PlanCount {
                expected: n,
                got: plans.len(),
            });
        }
        for (player, plan) in plans.iter().enumerate() {
            plan.validate()
                .map_err(|source| EngineError::InvalidPlan { player, source })?;
        }

        let mut scale = BigInt::one();
        for k in 1..=n {
            scale = scale.lcm(game.coop_payoff(k).denom());
            scale = scale.lcm(game.defect_payoff(k - 1).denom());
        }
        let rescale = |r: &Rat| (r.numer() * &scale) / r.denom();
        let coop_scaled: Vec<BigInt> = (1..=n).map(|k| rescale(game.coop_payoff(k))).collect();
        let defect_scaled: Vec<BigInt> = (0..n).map(|k| rescale(game.defect_payoff(k))).collect();
        let round_totals = (0..=n)
            .map(|k| {
                let coop_part = if k == 0 {
                    BigInt::zero()
                } else {
                    BigInt::from(k) * &coop_scaled[k - 1]
                };
                let defect_part = if k == n {
                    BigInt::zero()
                } else {
                    BigInt::from(n - k) * &defect_scaled[k]
                };
                coop_part + defect_part
            })
            .collect();

        let prepared = plans
            .iter()
            .map(|p| PreparedPlan::compile(p, n, &scale))
            .collect();
        let mut runner = Runner {
            game,
            plans: prepared,
            scale,
            coop_scaled,
            defect_scaled,
            round_totals,
            sums: vec![BigInt::zero(); n],
            total: BigInt::zero(),
            round: 0,
            last_moves: Vec::new(),
            move_buf: Vec::with_capacity(n),
        };
        let opening: Vec<Move> = plans.iter().map(|p| p.choose_initial()).collect();
        runner.apply(opening);
        Ok(runner)
    }

    fn apply(&mut self, moves: Vec<Move>) {
        let k = moves.iter().filter(|m| m.is_cooperate()).count();
        for (sum, mv) in self.sums.iter_mut().zip(&moves) {
            if mv.is_cooperate() {
                *sum += &self.coop_scaled[k - 1];
            } else {
                *sum += &self.defect_scaled[k];
            }
        }
        self.total += &self.round_totals[k];
        self.round += 1;
        self.last_moves = moves;
    }

    /// Plays one round: every plan decides off the current average, then all
    /// moves land simultaneously.
    pub fn advance(&mut self) {
        let next_round = self.round + 1;
        let mut moves = std::mem::take(&mut self.move_buf);
        moves.clear();
        for (j, plan) in self.plans.iter().enumerate() {
            moves.push(plan.decide(next_round, &self.sums[j], &self.total, self.round));
        }
        self.move_buf = std::mem::take(&mut self.last_moves);
        self.apply(moves);
    }

    /// Rounds played so far (at least 1).
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn last_moves(&self) -> &[Move] {
        &self.last_moves
    }

    /// The exact running average `s^T`.
    pub fn average(&self) -> Vec<Rat> {
        let denom = &self.scale * BigInt::from(self.round);
        self.sums
            .iter()
            .map(|s| Rat::new(s.clone(), denom.clone()))
            .collect()
    }

    /// Player `j`'s own running average.
    pub fn own_average(&self, player: usize) -> Rat {
        Rat::new(
            self.sums[player].clone(),
            &self.scale * BigInt::from(self.round),
        )
    }

    /// Player `j`'s view of the state: `(own average, population mean)`.
    pub fn projection(&self, player: usize) -> Point {
        let y_denom = BigInt::from(self.game.players()) * &self.scale * BigInt::from(self.round);
        Point::new(self.own_average(player), Rat::new(self.total.clone(), y_denom))
    }

    pub fn state(&self) -> SimState {
        SimState {
            round: self.round,
            average: self.average(),
            last_moves: self.last_moves.clone(),
        }
    }
}

/// Runs the repeated game for `horizon` rounds and records snapshots.
///
/// Round 1 plays every plan's initial move; each later round feeds every
/// player its own projection of the running average. The run is
/// deterministic: identical inputs give identical trajectories.
pub fn run(
    game: &GameSpec,
    plans: &[Plan],
    horizon: u64,
    policy: SnapshotPolicy,
) -> Result<Trajectory, EngineError> {
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    if matches!(policy, SnapshotPolicy::Every(0)) {
        return Err(EngineError::ZeroStride);
    }
    let mut runner = Runner::new(game, plans)?;
    let halfway = horizon / 2;
    let mut halfway_average: Option<Vec<Rat>> = None;
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut next_snap = match policy {
        SnapshotPolicy::Geometric => 1,
        SnapshotPolicy::Every(k) => k,
        SnapshotPolicy::FinalOnly => horizon,
    };

    loop {
        let round = runner.round();
        if round == halfway {
            halfway_average = Some(runner.average());
        }
        if round == next_snap {
            snapshots.push(Snapshot {
                round,
                average: runner.average(),
            });
            next_snap = match policy {
                SnapshotPolicy::Geometric => round.saturating_mul(2),
                SnapshotPolicy::Every(k) => round + k,
                SnapshotPolicy::FinalOnly => 0, // already recorded
            };
        }
        if round == horizon {
            break;
        }
        runner.advance();
    }

    let final_state = runner.state();
    if snapshots.last().map(|s| s.round) != Some(horizon) {
        snapshots.push(Snapshot {
            round: horizon,
            average: final_state.average.clone(),
        });
    }
    let cauchy_residual =
        halfway_average.map(|half| max_abs_diff(&final_state.average, &half));
    Ok(Trajectory {
        snapshots,
        final_state,
        cauchy_residual,
    })
}

/// Which side of the decay envelope a bound check watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    /// Hypothesis: the player defects whenever strictly above the line (from
    /// round `T0 + 1` on). Conclusion: `L(Π_j(s^T)) <= M0/T` for `T >= T0`.
    DefectAbove,
    /// Mirror: the player cooperates whenever strictly below the line;
    /// `-L(Π_j(s^T)) <= M0/T`, i.e. the average cannot stay under the line.
    CooperateBelow,
}

impl std::fmt::Display for BoundSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundSide::DefectAbove => "defect-above",
            BoundSide::CooperateBelow => "cooperate-below",
        })
    }
}

/// Whether `plan` is statically guaranteed to defect whenever its projection
/// is strictly above `line`, for every decision from round `t0 + 1` onward.
pub fn plan_defects_above(plan: &Plan, line: &Line, t0: u64) -> bool {
    match plan {
        Plan::AllD => true,
        Plan::AllC => false,
        Plan::SimpleSmale { line: own, .. } => own == line,
        Plan::Scripted { moves, fallback } => {
            moves.len() as u64 <= t0 && plan_defects_above(fallback, line, t0)
        }
        Plan::Eventual {
            activation, inner, ..
        } => *activation <= t0 + 1 && plan_defects_above(inner, line, t0),
    }
}

/// Mirror of [`plan_defects_above`]: cooperates whenever strictly below.
pub fn plan_cooperates_below(plan: &Plan, line: &Line, t0: u64) -> bool {
    match plan {
        Plan::AllC => true,
        Plan::AllD => false,
        Plan::SimpleSmale { line: own, .. } => own == line,
        Plan::Scripted { moves, fallback } => {
            moves.len() as u64 <= t0 && plan_cooperates_below(fallback, line, t0)
        }
        Plan::Eventual {
            activation, inner, ..
        } => *activation <= t0 + 1 && plan_cooperates_below(inner, line, t0),
    }
}

/// The `M` of the decay envelope: strictly greater than the maximum of `L`
/// (or `-L` for the mirror side) over the outcome vertices, hence over the
/// whole strategy set; `max + 1` keeps it rational and simple.
pub fn envelope_constant(line: &Line, set: &StrategySet, side: BoundSide) -> Rat {
    let max = set
        .all()
        .map(|p| {
            let v = line.eval(p);
            match side {
                BoundSide::DefectAbove => v,
                BoundSide::CooperateBelow => -v,
            }
        })
        .max()
        .expect("strategy set is non-empty");
    max + int(1)
}

/// Outcome of an envelope check (see [`check_smale_bound`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub player: usize,
    pub line: Line,
    pub side: BoundSide,
    pub t0: u64,
    pub horizon: u64,
    /// `M0 = T0 * M` with `M` from [`envelope_constant`].
    pub m0: Rat,
    /// `sup over T in [T0, horizon]` of `±L(Π_j(s^T)) − M0/T`; the bound
    /// holds iff this is `<= 0`.
    pub max_excess: Rat,
    pub passed: bool,
}

/// Replays a run and verifies the decay envelope for player `player` against
/// `line` over every round `T` with `t0 <= T <= horizon`. All comparisons are
/// exact.
///
/// The hypothesis is checked statically: for [`BoundSide::DefectAbove`] the
/// player's plan must provably defect whenever strictly above `line` from
/// round `t0 + 1` on (a Smale plan on that line, always-defect, a script that
/// has ended, or an eventual wrapper already activated); mirrored for
/// [`BoundSide::CooperateBelow`]. `line` must separate the game's outcome
/// vertices — the envelope argument needs the payoff points on the relevant
/// side of the line.
pub fn check_smale_bound(
    game: &GameSpec,
    plans: &[Plan],
    horizon: u64,
    player: usize,
    line: &Line,
    t0: u64,
    side: BoundSide,
) -> Result<BoundCheck, EngineError> {
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    if plans.len() != game.players() {
        return Err(EngineError::PlanCount {
            expected: game.players(),
            got: plans.len(),
        });
    }
    if player >= game.players() {
        return Err(EngineError::PlayerOutOfRange {
            player,
            n: game.players(),
        });
    }
    if t0 < 1 || t0 > horizon {
        return Err(EngineError::BoundWindow { t0, horizon });
    }
    let set = StrategySet::new(game);
    if !is_separation_line(line, &set) {
        return Err(EngineError::NotSeparating);
    }
    let hypothesis_ok = match side {
        BoundSide::DefectAbove => plan_defects_above(&plans[player], line, t0),
        BoundSide::CooperateBelow => plan_cooperates_below(&plans[player], line, t0),
    };
    if !hypothesis_ok {
        return Err(EngineError::BoundHypothesis { player, side, t0 });
    }

    let m = envelope_constant(line, &set, side);
    let m0 = int(t0 as i64) * &m;
    let mut runner = Runner::new(game, plans)?;
    let test = LineTest::new(game.players(), &runner.scale, line);

    // L(Π_j(s^T)) = scaled_eval / (norm · T) with norm = n · D · ld · bd > 0.
    // The envelope L <= M0/T cross-multiplies to an integer comparison in
    // which T cancels:  ±scaled_eval · m0.denom <= m0.numer · norm.
    let slope = line.slope.reduced();
    let intercept = line.intercept.reduced();
    let norm: BigInt =
        BigInt::from(game.players()) * &runner.scale * slope.denom() * intercept.denom();
    let threshold = m0.numer() * &norm;
    let mut best_numer: Option<(BigInt, u64)> = None; // (excess numerator, round)

    loop {
        let t = runner.round();
        if t >= t0 {
            let eval = test.scaled_eval(&runner.sums[player], &runner.total, t);
            let signed = match side {
                BoundSide::DefectAbove => eval,
                BoundSide::CooperateBelow => -eval,
            };
            // excess(T) = (signed·m0.denom − threshold) / (m0.denom·norm·T)
            let numer = signed * m0.denom() - &threshold;
            let better = match &best_numer {
                None => true,
                Some((bn, bt)) => &numer * BigInt::from(*bt) > bn * BigInt::from(t),
            };
            if better {
                best_numer = Some((numer, t));
            }
        }
        if t == horizon {
            break;
        }
        runner.advance();
    }

    let (numer, at_round) = best_numer.expect("window is non-empty");
    let max_excess = Rat::new(numer, m0.denom() * norm * BigInt::from(at_round));
    let passed = !max_excess.is_positive();
    Ok(BoundCheck {
        player,
        line: line.clone(),
        side,
        t0,
        horizon,
        m0,
        max_excess,
        passed,
    })
}
