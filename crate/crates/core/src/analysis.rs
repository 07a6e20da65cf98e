//! Closed-form limit analysis.
//!
//! When every player runs a simple Smale plan with a positive-slope
//! separation line (and at least one slope is below 1), the running average
//! converges to a unique point `X`. This module computes that point directly:
//! writing each line in anchored form `y = λ_j (x − a_j)`, the limit's
//! population mean `x̄` satisfies the fixed-point equation `x̄ = λ̂ (x̄ − ā)`
//! with `λ̂` the harmonic mean of the slopes and `ā` the mean of the anchors,
//! and then each player sits at `x_j = a_j + x̄ / λ_j` — i.e. the point
//! `(x_j, x̄)` lies on line `j` and the average of the `x_j` is `x̄` itself.
//!
//! For mixed populations (only `k` players on *good* lines through the
//! full-cooperation point), [`dissenter_statistics`] evaluates the means and
//! identities that constrain any limit point: dissenters on average out-earn
//! the good players but stay below the full-cooperation payoff, unless the
//! group reaches full cooperation outright — and if a lone dissenter does
//! break past `p_n`, the *other* dissenters must on average fall below the
//! good players ([`Classification::ExploiterPresent`]).
//!
//! [`segment_limit`] covers the three-role scenario (always-cooperators, one
//! line player, one always-defector) where the limit lies on the segment
//! between the two reachable outcome vertices and has a closed form in the
//! line's slope.

use crate::game::GameSpec;
use crate::geometry::{is_separation_line, Line, Point, StrategySet};
use crate::rational::{int, mean, rat, Rat};
use num_traits::{One, Signed};

/// Domain errors for the closed-form analysis.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least one slope")]
    EmptySlopes,
    #[error("slope {slope} is not strictly positive")]
    NonPositiveSlope { slope: Rat },
    #[error("expected {expected} lines, got {got}")]
    LineCount { expected: usize, got: usize },
    #[error("expected a point with {expected} coordinates, got {got}")]
    PointLength { expected: usize, got: usize },
    #[error("player {player}'s line does not separate this game's outcome vertices")]
    NotSeparating { player: usize },
    #[error("every line is the diagonal: the limit is not determined by the slopes alone")]
    AllDiagonal,
    #[error("good-player count {k} must lie in 1..={max}")]
    BadDissenterSplit { k: usize, max: usize },
    #[error("player {player}'s line is not a good line (through the full-cooperation point with slope in ((n-1)/n, 1))")]
    NotGoodLine { player: usize },
    #[error("the segment scenario needs at least 3 players, got {n}")]
    TooFewPlayers { n: usize },
    #[error("segment slope must satisfy 0 < slope <= 1, got {slope}")]
    SegmentSlope { slope: Rat },
    #[error("the line misses the reachable segment (parameter {a} outside [0, 1])")]
    OutOfSegment { a: Rat },
    #[error("the line is parallel to the reachable segment")]
    SegmentDegenerate,
}

/// Harmonic mean of strictly positive slopes: `k / Σ (1/λ_j)`. Always lies
/// between the smallest and largest input.
pub fn harmonic_slope(slopes: &[Rat]) -> Result<Rat, AnalysisError> {
    if slopes.is_empty() {
        return Err(AnalysisError::EmptySlopes);
    }
    let mut sum = Rat::from_integer(0.into());
    for slope in slopes {
        if !slope.is_positive() {
            return Err(AnalysisError::NonPositiveSlope {
                slope: slope.clone(),
            });
        }
        sum += slope.recip();
    }
    Ok(int(slopes.len() as i64) / sum)
}

/// The unique limit point when all `n` players hold separation lines with
/// positive slope (not all diagonal), together with its construction data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitPrediction {
    /// Predicted per-player limit averages `x_1..x_n`.
    pub point: Vec<Rat>,
    /// Their mean `x̄` — also the y-coordinate every player's projection
    /// settles at.
    pub mean: Rat,
    /// Harmonic mean `λ̂` of the line slopes.
    pub harmonic_slope: Rat,
    /// Mean `ā` of the line anchors `a_j` (x-intercepts).
    pub mean_anchor: Rat,
    pub lines: Vec<Line>,
}

/// Predicts the limit of a run where player `j` uses a simple Smale plan on
/// `lines[j]`.
///
/// Each line must separate the game's outcome vertices and slope strictly
/// upward; at least one slope must be below 1, otherwise the limit is a
/// whole diagonal segment rather than a point and the call reports
/// [`AnalysisError::AllDiagonal`]. If every line passes through the
/// full-cooperation point, the prediction is exactly `(p_n, …, p_n)`.
pub fn predict_limit(game: &GameSpec, lines: &[Line]) -> Result<LimitPrediction, AnalysisError> {
    let n = game.players();
    if lines.len() != n {
        return Err(AnalysisError::LineCount {
            expected: n,
            got: lines.len(),
        });
    }
    let set = StrategySet::new(game);
    for (player, line) in lines.iter().enumerate() {
        if !line.slope.is_positive() {
            return Err(AnalysisError::NonPositiveSlope {
                slope: line.slope.clone(),
            });
        }
        if !is_separation_line(line, &set) {
            return Err(AnalysisError::NotSeparating { player });
        }
    }
    if lines.iter().all(|l| l.slope.is_one()) {
        return Err(AnalysisError::AllDiagonal);
    }

    let slopes: Vec<Rat> = lines.iter().map(|l| l.slope.clone()).collect();
    let hat = harmonic_slope(&slopes)?;
    let anchors: Vec<Rat> = lines
        .iter()
        .map(|l| l.x_anchor().expect("positive slope"))
        .collect();
    let anchor_mean = mean(&anchors);
    // x̄ = λ̂ (x̄ − ā)  ⟺  x̄ = λ̂ ā / (λ̂ − 1); λ̂ < 1 because some λ_j < 1.
    let x_bar = &hat * &anchor_mean / (&hat - int(1));
    let point: Vec<Rat> = anchors
        .iter()
        .zip(&slopes)
        .map(|(a, l)| a + &x_bar / l)
        .collect();
    debug_assert_eq!(mean(&point), x_bar);
    Ok(LimitPrediction {
        point,
        mean: x_bar,
        harmonic_slope: hat,
        mean_anchor: anchor_mean,
        lines: lines.to_vec(),
    })
}

/// How a limit point relates to full cooperation when only some players are
/// good.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// The dissenters' mean reaches `p_n` — only possible at the
    /// full-cooperation point itself.
    FullCooperation,
    /// Dissenters out-earn the good players on average but stay below `p_n`.
    DissentersBelowPn,
    /// Some single dissenter earns at least `p_n`; the remaining dissenters
    /// then average below the good players.
    ExploiterPresent,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::FullCooperation => "full-cooperation",
            Classification::DissentersBelowPn => "dissenters-below-pn",
            Classification::ExploiterPresent => "exploiter-present",
        })
    }
}

/// Mean statistics of a limit point split into `k` good players (first) and
/// `n − k` dissenters (rest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DissenterReport {
    pub n: usize,
    /// Number of good players (occupying indices `0..k` of the point).
    pub k: usize,
    /// Full-cooperation payoff `p_n`.
    pub pn: Rat,
    /// `x̄`: mean over the good players.
    pub good_mean: Rat,
    /// `z̄`: mean over the dissenters.
    pub dissenter_mean: Rat,
    /// `y`: mean over everyone.
    pub population_mean: Rat,
    /// `λ̂` over the good players' lines.
    pub harmonic_slope: Rat,
    /// The dissenter (absolute player index) earning at least `p_n`, when
    /// classified as [`Classification::ExploiterPresent`]. Dissenter
    /// numbering is arbitrary, so the top earner is taken as the exploiter.
    pub exploiter: Option<usize>,
    /// `z̃`: mean over the dissenters other than the exploiter.
    pub rest_mean: Option<Rat>,
    /// Upper bound the identities force on `z̃`:
    /// `x̄ − (1 − n(1 − λ̂))/(n − k − 1) · (p_n − x̄)`, which is below `x̄`.
    pub rest_ceiling: Option<Rat>,
    pub classification: Classification,
}

/// Signed residuals of the three mean identities tying a limit point to the
/// good players' lines. All are exactly zero on a predicted limit point; on
/// a simulated average they shrink with the convergence residual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityResiduals {
    /// `y − [k x̄ + (n−k) z̄]/n` — the population mean decomposes over the
    /// two groups.
    pub mean_decomposition: Rat,
    /// `(1/n)[k (p_n − x̄) + (n−k)(p_n − z̄)] − λ̂ (p_n − x̄)` — averaging the
    /// per-line relations `p_n − y = λ_j (p_n − x_j)` over the good players.
    pub slope_balance: Rat,
    /// `(n−k)(p_n − z̄) − (n λ̂ − k)(p_n − x̄)` — the same relation solved for
    /// the dissenter side; always `n ×` the slope-balance residual.
    pub dissenter_gap: Rat,
}

impl IdentityResiduals {
    /// Largest residual magnitude, for tolerance checks.
    pub fn max_abs(&self) -> Rat {
        self.mean_decomposition
            .abs()
            .max(self.slope_balance.abs())
            .max(self.dissenter_gap.abs())
    }
}

impl DissenterReport {
    pub fn identity_residuals(&self) -> IdentityResiduals {
        let n = int(self.n as i64);
        let k = int(self.k as i64);
        let rest = int((self.n - self.k) as i64);
        let good_gap = &self.pn - &self.good_mean;
        let dissent_gap = &self.pn - &self.dissenter_mean;
        let mean_decomposition =
            &self.population_mean - (&k * &self.good_mean + &rest * &self.dissenter_mean) / &n;
        let slope_balance = (&k * &good_gap + &rest * &dissent_gap) / &n
            - &self.harmonic_slope * &good_gap;
        let dissenter_gap = &rest * &dissent_gap - (&n * &self.harmonic_slope - &k) * &good_gap;
        IdentityResiduals {
            mean_decomposition,
            slope_balance,
            dissenter_gap,
        }
    }
}

/// Whether `line` is a good line for this game: through the full-cooperation
/// point with slope strictly inside `((n−1)/n, 1)`.
pub fn is_good_line(game: &GameSpec, line: &Line) -> bool {
    let n = game.players() as i64;
    let pn = game.coop_payoff(game.players()).clone();
    line.slope > rat(n - 1, n)
        && line.slope < int(1)
        && line.contains(&Point::new(pn.clone(), pn))
}

/// Splits a limit point into good players (indices `0..k`, holding
/// `good_lines`) and dissenters, computes the group means and `λ̂`, and
/// classifies the point. Callers whose good players are not the first `k`
/// must permute the point first.
///
/// The classifier itself is exact; tolerance questions (is a simulated point
/// close enough to full cooperation?) belong to the caller.
pub fn dissenter_statistics(
    game: &GameSpec,
    point: &[Rat],
    k: usize,
    good_lines: &[Line],
) -> Result<DissenterReport, AnalysisError> {
    let n = game.players();
    if point.len() != n {
        return Err(AnalysisError::PointLength {
            expected: n,
            got: point.len(),
        });
    }
    if k < 1 || k > n - 1 {
        return Err(AnalysisError::BadDissenterSplit { k, max: n - 1 });
    }
    if good_lines.len() != k {
        return Err(AnalysisError::LineCount {
            expected: k,
            got: good_lines.len(),
        });
    }
    for (player, line) in good_lines.iter().enumerate() {
        if !is_good_line(game, line) {
            return Err(AnalysisError::NotGoodLine { player });
        }
    }

    let pn = game.coop_payoff(n).clone();
    let slopes: Vec<Rat> = good_lines.iter().map(|l| l.slope.clone()).collect();
    let harmonic = harmonic_slope(&slopes)?;
    let good_mean = mean(&point[..k]);
    let dissenter_mean = mean(&point[k..]);
    let population_mean = mean(point);

    let mut exploiter = None;
    let mut rest_mean = None;
    let mut rest_ceiling = None;
    let classification = if dissenter_mean >= pn {
        Classification::FullCooperation
    } else {
        let top = (k..n).max_by_key(|&j| &point[j]).expect("k < n");
        if k <= n - 2 && point[top] >= pn {
            let others: Vec<Rat> = (k..n)
                .filter(|&j| j != top)
                .map(|j| point[j].clone())
                .collect();
            exploiter = Some(top);
            rest_mean = Some(mean(&others));
            let scale =
                (int(1) - int(n as i64) * (int(1) - &harmonic)) / int((n - k - 1) as i64);
            rest_ceiling = Some(&good_mean - scale * (&pn - &good_mean));
            Classification::ExploiterPresent
        } else {
            Classification::DissentersBelowPn
        }
    };

    Ok(DissenterReport {
        n,
        k,
        pn,
        good_mean,
        dissenter_mean,
        population_mean,
        harmonic_slope: harmonic,
        exploiter,
        rest_mean,
        rest_ceiling,
        classification,
    })
}

/// Closed-form limit of the three-role scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLimit {
    /// The line player's slope.
    pub slope: Rat,
    /// Position on the segment from `V0` (line player defects) to `V1` (line
    /// player cooperates), in `[0, 1]`.
    pub a: Rat,
    /// The limit payoff vector `V0 + a (V1 − V0)`.
    pub point: Vec<Rat>,
    /// The last coordinate: what the always-defector earns in the limit.
    pub defector_payoff: Rat,
}

/// Limit of the scenario where players `1..n−2` always cooperate, player `n`
/// always defects, and player `n−1` runs a simple Smale plan on the line of
/// slope `λ` through the full-cooperation point (`0 < λ <= 1`).
///
/// Only two outcomes are reachable each round — `V0` with the line player
/// defecting and `V1` with it cooperating — so the average lives on the
/// segment `V_a = V0 + a (V1 − V0)` and the limit is the segment's
/// intersection with the player's line:
/// `π̄(V_a) − p_n = λ (π_{n−1}(V_a) − p_n)`. Lower slopes move the
/// intersection toward `V1`, raising everyone's payoff — including, notably,
/// the defector's.
pub fn segment_limit(game: &GameSpec, slope: &Rat) -> Result<SegmentLimit, AnalysisError> {
    let n = game.players();
    if n < 3 {
        return Err(AnalysisError::TooFewPlayers { n });
    }
    if !slope.is_positive() || slope > &int(1) {
        return Err(AnalysisError::SegmentSlope {
            slope: slope.clone(),
        });
    }

    let pn = game.coop_payoff(n);
    let v0_coop = game.coop_payoff(n - 2); // players 1..n−2
    let v0_defect = game.defect_payoff(n - 2); // players n−1, n
    let v1_coop = game.coop_payoff(n - 1); // players 1..n−1
    let v1_defect = game.defect_payoff(n - 1); // player n
    let mean0 = game.mean_payoff(n - 2);
    let mean1 = game.mean_payoff(n - 1);

    // π̄(V_a) = mean0 + a Δmean, π_{n−1}(V_a) = v0_defect + a Δown.
    let delta_mean = &mean1 - &mean0;
    let delta_own = v1_coop - v0_defect;
    let denom = &delta_mean - slope * &delta_own;
    if !denom.is_positive() {
        return Err(AnalysisError::SegmentDegenerate);
    }
    let a = (slope * (v0_defect - pn) + (pn - &mean0)) / denom;
    if a.is_negative() || a > int(1) {
        return Err(AnalysisError::OutOfSegment { a });
    }

    let blend = |v0: &Rat, v1: &Rat| v0 + &a * (v1 - v0);
    let mut point = vec![blend(v0_coop, v1_coop); n - 2];
    point.push(blend(v0_defect, v1_coop));
    point.push(blend(v0_defect, v1_defect));
    let defector_payoff = point[n - 1].clone();
    Ok(SegmentLimit {
        slope: slope.clone(),
        a,
        point,
        defector_payoff,
    })
}
