//! The symmetric n-player prisoner's dilemma.
//!
//! A game is given by two payoff sequences. With `k` cooperators among the
//! `n` players, each cooperator receives `coop_payoff(k)` (defined for
//! `k = 1..=n`) and each defector receives `defect_payoff(k)` (defined for
//! `k = 0..=n-1`). The dilemma structure is captured by three axioms:
//!
//! 1. both sequences are strictly increasing in the number of cooperators
//!    (more cooperation is better for everyone, whichever side you are on);
//! 2. a lone switch to defection always pays: `coop_payoff(k) <
//!    defect_payoff(k-1)`;
//! 3. the population mean payoff `mean_payoff(k)` is strictly increasing in
//!    `k`, so universal cooperation is the social optimum and each defection
//!    strictly drags the average down.
//!
//! Axiom 3 is strictly stronger than the per-player switching inequalities it
//! implies (see [`GameSpec::switching_inequalities`] and the crate tests):
//! a game can satisfy every switching inequality while its mean payoffs dip.

use crate::rational::{int, Rat};

/// Which axiom a reported violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    /// `coop_payoff` is strictly increasing on `1..=n`.
    CooperatorPayoffsIncreasing,
    /// `defect_payoff` is strictly increasing on `0..=n-1`.
    DefectorPayoffsIncreasing,
    /// `coop_payoff(k) < defect_payoff(k-1)` for `k = 1..=n`.
    DefectionDominates,
    /// `mean_payoff` is strictly increasing on `0..=n`.
    MeanPayoffsIncreasing,
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Axiom::CooperatorPayoffsIncreasing => "cooperator payoffs strictly increasing",
            Axiom::DefectorPayoffsIncreasing => "defector payoffs strictly increasing",
            Axiom::DefectionDominates => "defection dominates cooperation pointwise",
            Axiom::MeanPayoffsIncreasing => "mean payoffs strictly increasing",
        };
        f.write_str(name)
    }
}

/// Structural problems that prevent a payoff table from being interpreted at
/// all, as opposed to axiom violations of a well-formed table.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("need at least 2 players, got {0}")]
    TooFewPlayers(usize),
    #[error("expected {expected} cooperator payoffs for n = {n}, got {got}")]
    CoopPayoffCount { n: usize, expected: usize, got: usize },
    #[error("expected {expected} defector payoffs for n = {n}, got {got}")]
    DefectPayoffCount { n: usize, expected: usize, got: usize },
    #[error("payoff table violates the dilemma axioms: {0}")]
    AxiomsViolated(ValidationReport),
}

/// Outcome of [`GameSpec::validate`]: every axiom violation found, each tagged
/// with the cooperator count `k` at which it occurs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<(Axiom, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("all axioms hold");
        }
        for (i, (axiom, k)) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{axiom} fails at k = {k}")?;
        }
        Ok(())
    }
}

/// Payoff table of a symmetric n-player prisoner's dilemma.
///
/// Construction does not check the axioms; call [`validate`](Self::validate)
/// to get a full report, or [`checked`](Self::checked) to reject invalid
/// tables outright. Payoffs are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    n: usize,
    /// `coop[k-1]` is the cooperator payoff with `k` cooperators present.
    coop: Vec<Rat>,
    /// `defect[k]` is the defector payoff with `k` cooperators present.
    defect: Vec<Rat>,
}

impl GameSpec {
    /// Builds a game from raw payoff sequences: `coop[0..n]` are the
    /// cooperator payoffs for `k = 1..=n` cooperators, `defect[0..n]` the
    /// defector payoffs for `k = 0..=n-1`. Only shape is checked here.
    pub fn new(n: usize, coop: Vec<Rat>, defect: Vec<Rat>) -> Result<Self, GameError> {
        if n < 2 {
            return Err(GameError::TooFewPlayers(n));
        }
        if coop.len() != n {
            return Err(GameError::CoopPayoffCount {
                n,
                expected: n,
                got: coop.len(),
            });
        }
        if defect.len() != n {
            return Err(GameError::DefectPayoffCount {
                n,
                expected: n,
                got: defect.len(),
            });
        }
        Ok(GameSpec { n, coop, defect })
    }

    /// Like [`new`](Self::new), but additionally rejects tables that violate
    /// any dilemma axiom.
    pub fn checked(n: usize, coop: Vec<Rat>, defect: Vec<Rat>) -> Result<Self, GameError> {
        let game = Self::new(n, coop, defect)?;
        let report = game.validate();
        if report.is_valid() {
            Ok(game)
        } else {
            Err(GameError::AxiomsViolated(report))
        }
    }

    /// The evenly spaced reference family: `coop_payoff(k) = 2k - 2` and
    /// `defect_payoff(k) = 2k + 1`, which satisfies every axiom for any
    /// `n >= 2` and has mean payoffs `(2 - 3/n) k + 1` on an exact line.
    pub fn staircase(n: usize) -> Self {
        assert!(n >= 2, "staircase game needs at least 2 players");
        let coop = (1..=n as i64).map(|k| int(2 * k - 2)).collect();
        let defect = (0..n as i64).map(|k| int(2 * k + 1)).collect();
        GameSpec { n, coop, defect }
    }

    /// A three-player game with a pronounced free-rider incentive:
    /// cooperator payoffs `(0, 4, 6)`, defector payoffs `(2, 7, 8)`. A lone
    /// defector against two cooperators collects 8 while the cooperators get
    /// 4 each; the mean payoffs `(2, 14/3, 16/3, 6)` still increase strictly.
    pub fn free_rider() -> Self {
        GameSpec {
            n: 3,
            coop: vec![int(0), int(4), int(6)],
            defect: vec![int(2), int(7), int(8)],
        }
    }

    /// Number of players.
    pub fn players(&self) -> usize {
        self.n
    }

    /// Payoff of each cooperator when `k` players cooperate (`1 <= k <= n`).
    pub fn coop_payoff(&self, k: usize) -> &Rat {
        assert!((1..=self.n).contains(&k), "cooperator payoff needs 1 <= k <= n");
        &self.coop[k - 1]
    }

    /// Payoff of each defector when `k` players cooperate (`0 <= k <= n-1`).
    pub fn defect_payoff(&self, k: usize) -> &Rat {
        assert!(k < self.n, "defector payoff needs 0 <= k < n");
        &self.defect[k]
    }

    /// Population mean payoff with `k` cooperators, `0 <= k <= n`. At the
    /// extremes this is just `defect_payoff(0)` resp. `coop_payoff(n)`.
    pub fn mean_payoff(&self, k: usize) -> Rat {
        assert!(k <= self.n, "mean payoff needs 0 <= k <= n");
        if k == 0 {
            return self.defect[0].clone();
        }
        if k == self.n {
            return self.coop[self.n - 1].clone();
        }
        let k_rat = int(k as i64);
        let rest = int((self.n - k) as i64);
        (k_rat * &self.coop[k - 1] + rest * &self.defect[k]) / int(self.n as i64)
    }

    /// Per-player payoff vector for a move profile (`true` = cooperate).
    pub fn payoffs(&self, cooperates: &[bool]) -> Vec<Rat> {
        assert_eq!(cooperates.len(), self.n);
        let k = cooperates.iter().filter(|&&c| c).count();
        cooperates
            .iter()
            .map(|&c| {
                if c {
                    self.coop[k - 1].clone()
                } else {
                    self.defect[k].clone()
                }
            })
            .collect()
    }

    /// Checks all axioms and reports every violation.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for k in 1..self.n {
            // coop[k-1] vs coop[k] is the step from k to k+1 cooperators.
            if self.coop[k - 1] >= self.coop[k] {
                violations.push((Axiom::CooperatorPayoffsIncreasing, k));
            }
            if self.defect[k - 1] >= self.defect[k] {
                violations.push((Axiom::DefectorPayoffsIncreasing, k - 1));
            }
        }
        for k in 1..=self.n {
            if self.coop[k - 1] >= self.defect[k - 1] {
                violations.push((Axiom::DefectionDominates, k));
            }
        }
        for k in 0..self.n {
            if self.mean_payoff(k) >= self.mean_payoff(k + 1) {
                violations.push((Axiom::MeanPayoffsIncreasing, k));
            }
        }
        violations.sort();
        ValidationReport { violations }
    }

    /// The per-player switching inequalities implied by increasing means: for
    /// each `k`, the payoff a defector gives up by switching to cooperation
    /// (`defect_payoff(k-1) - coop_payoff(k)`) is outweighed by the total
    /// gain the switch hands to the rest of the table. Returns, for each
    /// `k = 1..=n`, the pair `(loss, bound)` with the inequality
    /// `loss < bound`; [`holds`](SwitchingInequality::holds) evaluates it.
    ///
    /// These inequalities follow from axiom 3 but do not imply it: they
    /// constrain consecutive payoff gaps, while axiom 3 constrains the whole
    /// mean sequence.
    pub fn switching_inequalities(&self) -> Vec<SwitchingInequality> {
        let n = self.n as i64;
        (1..=self.n)
            .map(|k| {
                let loss = self.defect_payoff(k - 1) - self.coop_payoff(k);
                let bound = if k == 1 {
                    int(n - 1) * (self.defect_payoff(1) - self.defect_payoff(0))
                } else if k == self.n {
                    int(n - 1) * (self.coop_payoff(self.n) - self.coop_payoff(self.n - 1))
                } else {
                    let coop_gap = self.coop_payoff(k) - self.coop_payoff(k - 1);
                    let defect_gap = self.defect_payoff(k) - self.defect_payoff(k - 1);
                    int(k as i64 - 1) * (coop_gap + int(n - k as i64) * defect_gap)
                };
                SwitchingInequality { k, loss, bound }
            })
            .collect()
    }

    /// Smallest and largest payoff appearing anywhere in the table.
    pub fn payoff_range(&self) -> (Rat, Rat) {
        let all = self.coop.iter().chain(self.defect.iter());
        let min = all.clone().min().expect("non-empty").clone();
        let max = all.max().expect("non-empty").clone();
        (min, max)
    }
}

/// One switching inequality `loss < bound`; see
/// [`GameSpec::switching_inequalities`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingInequality {
    /// Cooperator count after the switch, `1 <= k <= n`.
    pub k: usize,
    /// What the switching player loses: `defect_payoff(k-1) - coop_payoff(k)`.
    pub loss: Rat,
    /// What the rest of the population gains in total.
    pub bound: Rat,
}

impl SwitchingInequality {
    pub fn holds(&self) -> bool {
        self.loss < self.bound
    }

    /// `bound - loss`; positive iff the inequality holds strictly.
    pub fn margin(&self) -> Rat {
        &self.bound - &self.loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn classic_two_player_table_is_valid() {
        // Sucker 0, punishment 1, reward 3, temptation 5.
        let game = GameSpec::checked(2, vec![int(0), int(3)], vec![int(1), int(5)]).unwrap();
        assert_eq!(game.mean_payoff(0), int(1));
        assert_eq!(game.mean_payoff(1), rat(5, 2));
        assert_eq!(game.mean_payoff(2), int(3));
    }

    #[test]
    fn staircase_satisfies_axioms_and_mean_formula() {
        for n in 2..=10 {
            let game = GameSpec::staircase(n);
            assert!(game.validate().is_valid(), "staircase n = {n}");
            for k in 0..=n {
                let expected =
                    (int(2) - rat(3, n as i64)) * int(k as i64) + int(1);
                assert_eq!(game.mean_payoff(k), expected, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn free_rider_table_matches_known_values() {
        let game = GameSpec::free_rider();
        assert!(game.validate().is_valid());
        assert_eq!(game.mean_payoff(0), int(2));
        assert_eq!(game.mean_payoff(1), rat(14, 3));
        assert_eq!(game.mean_payoff(2), rat(16, 3));
        assert_eq!(game.mean_payoff(3), int(6));
        // Two cooperators, one defector: the defector free-rides.
        let payoffs = game.payoffs(&[true, true, false]);
        assert_eq!(payoffs, vec![int(4), int(4), int(8)]);
    }

    #[test]
    fn mean_monotonicity_violations_are_located() {
        // Defector payoffs start so high that a first cooperator drags the
        // mean down: means are (5, 4, 11/3, 4).
        let game = GameSpec::new(
            3,
            vec![int(0), int(2), int(4)],
            vec![int(5), int(6), int(7)],
        )
        .unwrap();
        let report = game.validate();
        assert_eq!(
            report.violations,
            vec![
                (Axiom::MeanPayoffsIncreasing, 0),
                (Axiom::MeanPayoffsIncreasing, 1)
            ]
        );
    }

    #[test]
    fn shape_errors_are_structural() {
        assert!(matches!(
            GameSpec::new(1, vec![int(0)], vec![int(1)]),
            Err(GameError::TooFewPlayers(1))
        ));
        assert!(matches!(
            GameSpec::new(3, vec![int(0)], vec![int(1), int(2), int(3)]),
            Err(GameError::CoopPayoffCount { .. })
        ));
    }

    #[test]
    fn switching_inequalities_hold_for_valid_games() {
        for game in [GameSpec::staircase(4), GameSpec::free_rider()] {
            for ineq in game.switching_inequalities() {
                assert!(ineq.holds(), "k = {} in {:?}", ineq.k, game);
            }
        }
    }

    #[test]
    fn switching_inequalities_do_not_imply_mean_monotonicity() {
        // All four switching inequalities hold, yet the mean payoffs dip
        // between k = 2 and k = 3 (67.. then 73.5 then 73.25 ..).
        let game = GameSpec::new(
            4,
            vec![int(58), int(69), int(71), int(76)],
            vec![int(60), int(70), int(78), int(80)],
        )
        .unwrap();
        for ineq in game.switching_inequalities() {
            assert!(ineq.holds(), "switching inequality k = {}", ineq.k);
        }
        let report = game.validate();
        assert_eq!(report.violations, vec![(Axiom::MeanPayoffsIncreasing, 2)]);
    }

    #[test]
    fn payoff_range_scans_both_tables() {
        let game = GameSpec::free_rider();
        assert_eq!(game.payoff_range(), (int(0), int(8)));
    }
}
