//! Planar geometry of the averaged outcome set.
//!
//! For analysis, a joint outcome with `k` cooperators is summarised by a
//! point in the plane: one player's own payoff on the x-axis, the population
//! mean payoff on the y-axis. Cooperators land on
//! `(coop_payoff(k), mean_payoff(k))`, defectors on
//! `(defect_payoff(k), mean_payoff(k))`; time averages of play stay in the
//! convex hull of these `2n` points. A *separation line* splits the picture
//! with every cooperation point on or above it and every defection point on
//! or below it — the decision rules in [`crate::plans`] defect exactly when
//! the projected running average lies strictly above their line.
//!
//! All coordinates and coefficients are exact rationals, so "on the line",
//! "above" and "below" are decided by sign tests, never by an epsilon.

use crate::game::GameSpec;
use crate::rational::{int, mean, rat, Rat};
use num_traits::{One, Signed, Zero};

/// A point of the (own payoff, mean payoff) plane.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: Rat,
    pub y: Rat,
}

impl Point {
    pub fn new(x: Rat, y: Rat) -> Self {
        Point { x, y }
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A non-vertical line `y = slope * x + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Line {
    pub slope: Rat,
    pub intercept: Rat,
}

impl Line {
    pub fn new(slope: Rat, intercept: Rat) -> Self {
        Line { slope, intercept }
    }

    /// The diagonal `y = x`.
    pub fn diagonal() -> Self {
        Line {
            slope: Rat::one(),
            intercept: Rat::zero(),
        }
    }

    /// The line with the given slope passing through `point`.
    pub fn through(point: &Point, slope: Rat) -> Self {
        let intercept = &point.y - &slope * &point.x;
        Line { slope, intercept }
    }

    /// Signed vertical distance of `point` above the line:
    /// `y - slope * x - intercept`. Positive means strictly above.
    pub fn eval(&self, point: &Point) -> Rat {
        &point.y - &self.slope * &point.x - &self.intercept
    }

    /// Height of the line at abscissa `x`.
    pub fn y_at(&self, x: &Rat) -> Rat {
        &self.slope * x + &self.intercept
    }

    /// The `a` in the anchored form `y = slope * (x - a)`, i.e. the
    /// x-intercept. `None` for horizontal lines.
    pub fn x_anchor(&self) -> Option<Rat> {
        if self.slope.is_zero() {
            None
        } else {
            Some(-&self.intercept / &self.slope)
        }
    }

    /// Whether `point` lies on the line.
    pub fn contains(&self, point: &Point) -> bool {
        self.eval(point).is_zero()
    }
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "y = {} x + {}", self.slope, self.intercept)
    }
}

/// The `2n` vertex outcomes of a game, split by the observing player's role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySet {
    /// `(coop_payoff(k), mean_payoff(k))` for `k = 1..=n`; the last entry is
    /// the full-cooperation point `(coop_payoff(n), coop_payoff(n))` on the
    /// diagonal.
    pub cooperation: Vec<Point>,
    /// `(defect_payoff(k), mean_payoff(k))` for `k = 0..=n-1`; the first
    /// entry is the full-defection point `(defect_payoff(0), defect_payoff(0))`.
    pub defection: Vec<Point>,
}

impl StrategySet {
    pub fn new(game: &GameSpec) -> Self {
        let n = game.players();
        let cooperation = (1..=n)
            .map(|k| Point::new(game.coop_payoff(k).clone(), game.mean_payoff(k)))
            .collect();
        let defection = (0..n)
            .map(|k| Point::new(game.defect_payoff(k).clone(), game.mean_payoff(k)))
            .collect();
        StrategySet {
            cooperation,
            defection,
        }
    }

    /// All `2n` vertices, cooperation then defection.
    pub fn all(&self) -> impl Iterator<Item = &Point> {
        self.cooperation.iter().chain(self.defection.iter())
    }
}

/// Whether `line` puts every cooperation vertex on or above itself and every
/// defection vertex on or below itself.
pub fn is_separation_line(line: &Line, set: &StrategySet) -> bool {
    set.cooperation
        .iter()
        .all(|p| !line.eval(p).is_negative())
        && set.defection.iter().all(|p| !line.eval(p).is_positive())
}

/// Necessary slope range for separation lines of a game.
///
/// Comparing a candidate line against the chord from the lone-cooperator
/// vertex `(coop_payoff(1), mean_payoff(1))` to the lone-defector vertex
/// `(defect_payoff(n-1), mean_payoff(n-1))` forces `slope >= min_slope`;
/// comparing against the diagonal chord between the two mutual-outcome
/// vertices forces `slope <= 1`. For two players `min_slope` is zero
/// (horizontal separation lines exist); for three or more it is strictly
/// positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeBounds {
    pub min_slope: Rat,
    pub max_slope: Rat,
}

/// Computes [`SlopeBounds`] for a game.
pub fn slope_bounds(game: &GameSpec) -> SlopeBounds {
    let n = game.players();
    let rise = game.mean_payoff(n - 1) - game.mean_payoff(1);
    let run = game.defect_payoff(n - 1) - game.coop_payoff(1);
    SlopeBounds {
        min_slope: rise / run,
        max_slope: int(1),
    }
}

/// Problems building or validating a line.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LineError {
    #[error("slope {slope} is outside the open interval ({lo}, {hi})")]
    SlopeOutOfRange { slope: Rat, lo: Rat, hi: Rat },
    #[error("line {line} does not separate the outcome vertices of this game")]
    NotSeparating { line: Line },
}

/// Builds a *good* separation line: one through the full-cooperation vertex
/// `(coop_payoff(n), coop_payoff(n))` with slope strictly between
/// `(n-1)/n` and `1`.
///
/// Such a line touches the diagonal only at full cooperation, so a player
/// holding it cooperates there but is not indifferent anywhere else on the
/// diagonal; the lower slope bound keeps the line steep enough that the
/// player still punishes sustained free-riding. The constructed line is
/// verified to separate the outcome vertices (which can only fail if the
/// game itself violates the dilemma axioms).
// The error carries exact rational diagnostics and is on a cold path, so the
// large variant is acceptable; boxing it would push noise onto every caller.
#[allow(clippy::result_large_err)]
pub fn good_line(game: &GameSpec, slope: Rat) -> Result<Line, LineError> {
    let n = game.players() as i64;
    let lo = rat(n - 1, n);
    let hi = int(1);
    if slope <= lo || slope >= hi {
        return Err(LineError::SlopeOutOfRange { slope, lo, hi });
    }
    let pn = game.coop_payoff(game.players()).clone();
    let line = Line::through(&Point::new(pn.clone(), pn), slope);
    if !is_separation_line(&line, &StrategySet::new(game)) {
        return Err(LineError::NotSeparating { line });
    }
    Ok(line)
}

/// Cuts an average payoff vector down to the plane player `player`
/// (zero-based) watches: own average on x, population mean on y.
pub fn project(average: &[Rat], player: usize) -> Point {
    assert!(player < average.len(), "player index out of range");
    Point::new(average[player].clone(), mean(average))
}

/// Cross product of `(a - o)` and `(b - o)`; positive iff the turn
/// `o -> a -> b` is counter-clockwise.
fn cross(o: &Point, a: &Point, b: &Point) -> Rat {
    (&a.x - &o.x) * (&b.y - &o.y) - (&a.y - &o.y) * (&b.x - &o.x)
}

/// Convex hull by monotone chain, exact. Returns the extreme points in
/// counter-clockwise order (collinear boundary points are dropped); a single
/// point or segment comes back as-is.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut sorted: Vec<Point> = points.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < 3 {
        return sorted;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &sorted {
        while lower.len() >= 2
            && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive()
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in sorted.iter().rev() {
        while upper.len() >= 2
            && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive()
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies in the convex hull (boundary included). `hull` must be
/// output of [`convex_hull`].
pub fn in_convex_hull(hull: &[Point], p: &Point) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == *p,
        2 => {
            cross(&hull[0], &hull[1], p).is_zero()
                && p.x >= hull[0].x.clone().min(hull[1].x.clone())
                && p.x <= hull[0].x.clone().max(hull[1].x.clone())
                && p.y >= hull[0].y.clone().min(hull[1].y.clone())
                && p.y <= hull[0].y.clone().max(hull[1].y.clone())
        }
        m => (0..m).all(|i| !cross(&hull[i], &hull[(i + 1) % m], p).is_negative()),
    }
}
