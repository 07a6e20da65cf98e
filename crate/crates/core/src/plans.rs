//! Per-player decision rules ("plans").
//!
//! A plan maps the round index together with the player's own view of the
//! running average — the projected point `(own average, population mean)` —
//! to the next move. The workhorse is the *simple Smale plan*: pick a
//! separation line and defect on round `T+1` exactly when the projection of
//! `s^T` lies strictly above it; on or below the line, cooperate. Because
//! coordinates are exact rationals the tie case "exactly on the line" is a
//! real, reachable branch, and it always cooperates.
//!
//! Constant and scripted plans exist to build opponents: dissenters, noise
//! sources, and "eventually behaves" wrappers that switch plans at a fixed
//! activation round.
//!
//! A plan deliberately never sees the full average vector, only its own
//! projection; each player tracks how it is doing and how the population is
//! doing, nothing else.

use crate::geometry::{Line, Point};
use num_traits::Signed;

/// One move of the stage game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Cooperate,
    Defect,
}

impl Move {
    pub fn is_cooperate(self) -> bool {
        matches!(self, Move::Cooperate)
    }

    pub fn as_char(self) -> char {
        match self {
            Move::Cooperate => 'c',
            Move::Defect => 'd',
        }
    }
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Move::Cooperate => "cooperate",
            Move::Defect => "defect",
        })
    }
}

/// Invalid plan descriptions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("simple Smale plan needs a line with strictly positive slope, got {slope}")]
    NonPositiveSlope { slope: crate::rational::Rat },
    #[error("activation round must be at least 1")]
    ZeroActivation,
    #[error("invalid move character {0:?}: expected 'c' or 'd'")]
    BadScriptChar(char),
}

/// A decision rule for one player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    /// Always cooperate.
    AllC,
    /// Always defect.
    AllD,
    /// Defect on round `T+1` iff the projection of `s^T` is strictly above
    /// `line`; cooperate on or below. `initial` is the round-1 move, where no
    /// average exists yet.
    SimpleSmale { line: Line, initial: Move },
    /// Play out a fixed move sequence (round `t` plays `moves[t-1]`), then
    /// hand over to `fallback`.
    Scripted { moves: Vec<Move>, fallback: Box<Plan> },
    /// Follow `pre` on rounds `1..activation`, then `inner` from round
    /// `activation` on.
    Eventual {
        pre: Box<Plan>,
        activation: u64,
        inner: Box<Plan>,
    },
}

impl Plan {
    /// Simple Smale plan with the conventional round-1 move (cooperate).
    pub fn smale(line: Line) -> Self {
        Plan::SimpleSmale {
            line,
            initial: Move::Cooperate,
        }
    }

    /// Simple Smale plan with an explicit round-1 move.
    pub fn smale_with_initial(line: Line, initial: Move) -> Self {
        Plan::SimpleSmale { line, initial }
    }

    pub fn scripted(moves: Vec<Move>, fallback: Plan) -> Self {
        Plan::Scripted {
            moves,
            fallback: Box::new(fallback),
        }
    }

    pub fn eventual(pre: Plan, activation: u64, inner: Plan) -> Self {
        Plan::Eventual {
            pre: Box::new(pre),
            activation,
            inner: Box::new(inner),
        }
    }

    /// Checks structural constraints, recursively: Smale lines must slope
    /// strictly upward (a diagonal or good line always does) and activation
    /// rounds start at 1.
    pub fn validate(&self) -> Result<(), PlanError> {
        match self {
            Plan::AllC | Plan::AllD => Ok(()),
            Plan::SimpleSmale { line, .. } => {
                if line.slope.is_positive() {
                    Ok(())
                } else {
                    Err(PlanError::NonPositiveSlope {
                        slope: line.slope.clone(),
                    })
                }
            }
            Plan::Scripted { fallback, .. } => fallback.validate(),
            Plan::Eventual {
                pre,
                activation,
                inner,
            } => {
                if *activation < 1 {
                    return Err(PlanError::ZeroActivation);
                }
                pre.validate()?;
                inner.validate()
            }
        }
    }

    /// The round-1 move, where no running average exists yet. Constant and
    /// scripted plans are unambiguous; a Smale plan uses its configured
    /// `initial`; an `Eventual` asks whichever sub-plan governs round 1. The
    /// long-run results are insensitive to this choice (prefix independence),
    /// so it is configuration, not semantics.
    pub fn choose_initial(&self) -> Move {
        match self {
            Plan::AllC => Move::Cooperate,
            Plan::AllD => Move::Defect,
            Plan::SimpleSmale { initial, .. } => *initial,
            Plan::Scripted { moves, fallback } => {
                moves.first().copied().unwrap_or_else(|| fallback.choose_initial())
            }
            Plan::Eventual {
                pre,
                activation,
                inner,
            } => {
                if *activation <= 1 {
                    inner.choose_initial()
                } else {
                    pre.choose_initial()
                }
            }
        }
    }

    /// The line this plan eventually tests against, if any, together with
    /// the earliest window start `t0 >= 1` from which every round after
    /// `t0` is governed by that test: a plain Smale plan is governed from
    /// round 2 (`t0 = 1`), and an eventual wrapper around one is governed
    /// from its activation round (`t0 = activation - 1`, clamped to 1).
    pub fn threshold_rule(&self) -> Option<(&Line, u64)> {
        match self {
            Plan::SimpleSmale { line, .. } => Some((line, 1)),
            Plan::Eventual {
                activation, inner, ..
            } => match inner.as_ref() {
                Plan::SimpleSmale { line, .. } => Some((line, activation.saturating_sub(1).max(1))),
                _ => None,
            },
            _ => None,
        }
    }

    /// The move for `round >= 2`, given the player's projection of the
    /// current running average.
    pub fn decide(&self, round: u64, projected: &Point) -> Move {
        assert!(round >= 2, "rounds before 2 use choose_initial");
        match self {
            Plan::AllC => Move::Cooperate,
            Plan::AllD => Move::Defect,
            Plan::SimpleSmale { line, .. } => {
                if line.eval(projected).is_positive() {
                    Move::Defect
                } else {
                    Move::Cooperate
                }
            }
            Plan::Scripted { moves, fallback } => match moves.get(round as usize - 1) {
                Some(&mv) => mv,
                None => fallback.decide(round, projected),
            },
            Plan::Eventual {
                pre,
                activation,
                inner,
            } => {
                if round < *activation {
                    pre.decide(round, projected)
                } else {
                    inner.decide(round, projected)
                }
            }
        }
    }
}

/// Parses a move script like `"cdcdd"` (case-insensitive).
pub fn parse_script(script: &str) -> Result<Vec<Move>, PlanError> {
    script
        .chars()
        .map(|c| match c.to_ascii_lowercase() {
            'c' => Ok(Move::Cooperate),
            'd' => Ok(Move::Defect),
            other => Err(PlanError::BadScriptChar(other)),
        })
        .collect()
}

/// Renders a move script as the string form accepted by [`parse_script`].
pub fn script_to_string(moves: &[Move]) -> String {
    moves.iter().map(|m| m.as_char()).collect()
}

/// A uniformly random move script — the standard adversary for property
/// suites. Pass a seeded RNG to keep runs reproducible.
pub fn random_script<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Move> {
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Move::Cooperate
            } else {
                Move::Defect
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameSpec;
    use crate::geometry::good_line;
    use crate::rational::{int, rat};

    fn point(x: i64, y: i64) -> Point {
        Point::new(int(x), int(y))
    }

    #[test]
    fn smale_decisions_follow_the_line_strictly() {
        let plan = Plan::smale(Line::diagonal());
        // (3, 2) is below the diagonal.
        assert_eq!(plan.decide(2, &point(3, 2)), Move::Cooperate);
        // (2, 3) is above.
        assert_eq!(plan.decide(2, &point(2, 3)), Move::Defect);
        // Exactly on the line: cooperate.
        assert_eq!(plan.decide(2, &point(2, 2)), Move::Cooperate);

        let line = good_line(&GameSpec::staircase(3), rat(3, 4)).unwrap();
        let plan = Plan::smale(line);
        // (0, 2) sits one unit above y = (3/4)x + 1.
        assert_eq!(plan.decide(5, &point(0, 2)), Move::Defect);
    }

    #[test]
    fn constants_and_initial_moves() {
        assert_eq!(Plan::AllC.choose_initial(), Move::Cooperate);
        assert_eq!(Plan::AllD.choose_initial(), Move::Defect);
        assert_eq!(Plan::smale(Line::diagonal()).choose_initial(), Move::Cooperate);
        assert_eq!(
            Plan::smale_with_initial(Line::diagonal(), Move::Defect).choose_initial(),
            Move::Defect
        );
        let script = Plan::scripted(parse_script("dcd").unwrap(), Plan::AllC);
        assert_eq!(script.choose_initial(), Move::Defect);
        assert_eq!(
            Plan::scripted(vec![], Plan::AllD).choose_initial(),
            Move::Defect
        );
    }

    #[test]
    fn scripted_plays_sequence_then_fallback() {
        let plan = Plan::scripted(parse_script("dcd").unwrap(), Plan::AllC);
        assert_eq!(plan.decide(2, &point(0, 0)), Move::Cooperate);
        assert_eq!(plan.decide(3, &point(0, 0)), Move::Defect);
        assert_eq!(plan.decide(4, &point(9, 9)), Move::Cooperate); // fallback
    }

    #[test]
    fn eventual_switches_at_activation() {
        let inner = Plan::smale(Line::diagonal());
        let plan = Plan::eventual(Plan::AllD, 4, inner);
        assert_eq!(plan.choose_initial(), Move::Defect);
        let above = point(1, 3);
        let below = point(3, 1);
        assert_eq!(plan.decide(3, &below), Move::Defect); // still pre
        assert_eq!(plan.decide(4, &below), Move::Cooperate); // inner from round 4
        assert_eq!(plan.decide(4, &above), Move::Defect);
        // Activation at 1 means the inner plan governs round 1 too.
        let immediate = Plan::eventual(Plan::AllD, 1, Plan::AllC);
        assert_eq!(immediate.choose_initial(), Move::Cooperate);
    }

    #[test]
    fn threshold_rule_reports_line_and_window_start() {
        let line = Line::diagonal();
        assert_eq!(Plan::smale(line.clone()).threshold_rule(), Some((&line, 1)));
        let late = Plan::eventual(Plan::AllD, 10, Plan::smale(line.clone()));
        assert_eq!(late.threshold_rule(), Some((&line, 9)));
        let immediate = Plan::eventual(Plan::AllD, 1, Plan::smale(line.clone()));
        assert_eq!(immediate.threshold_rule(), Some((&line, 1)));
        assert_eq!(Plan::AllC.threshold_rule(), None);
        assert_eq!(
            Plan::scripted(vec![], Plan::smale(line)).threshold_rule(),
            None
        );
    }

    #[test]
    fn validation_rejects_flat_lines_and_zero_activation() {
        let flat = Plan::smale(Line::new(int(0), int(2)));
        assert!(matches!(
            flat.validate(),
            Err(PlanError::NonPositiveSlope { .. })
        ));
        let nested = Plan::eventual(Plan::AllC, 0, Plan::AllD);
        assert_eq!(nested.validate(), Err(PlanError::ZeroActivation));
        let deep = Plan::scripted(vec![Move::Defect], Plan::smale(Line::new(rat(-1, 2), int(0))));
        assert!(deep.validate().is_err());
        assert!(Plan::smale(Line::diagonal()).validate().is_ok());
    }

    #[test]
    fn scripts_round_trip() {
        let moves = parse_script("CdcD").unwrap();
        assert_eq!(script_to_string(&moves), "cdcd");
        assert!(matches!(
            parse_script("cxd"),
            Err(PlanError::BadScriptChar('x'))
        ));
    }

    #[test]
    fn random_scripts_are_seed_deterministic() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        assert_eq!(random_script(&mut a, 64), random_script(&mut b, 64));
    }
}
