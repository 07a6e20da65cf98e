//! Long-horizon behaviour of the simulation engine.
//!
//! These tests certify rates, not just limits: line values and limit errors
//! decay like 1/T, and the decay constants are checked against the envelope
//! bounds where a bound exists, or against measured-and-frozen constants
//! (with generous headroom) where the statement is purely empirical.
//! Comparisons are exact rational arithmetic throughout.

use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smale_core::rational::{int, max_abs_diff, rat};
use smale_core::{
    check_smale_bound, envelope_constant, good_line, predict_limit, project, random_script, run,
    segment_limit, BoundSide, EngineError, GameSpec, Line, Move, Plan, SnapshotPolicy,
    StrategySet,
};

fn classic_two_player() -> GameSpec {
    GameSpec::checked(2, vec![int(0), int(3)], vec![int(1), int(5)]).unwrap()
}

/// Three mixed-line scenarios whose exact fixed points are known; the
/// simulated average must approach each fixed point at rate O(1/T).
fn mixed_line_cases() -> Vec<(GameSpec, Vec<Line>)> {
    let g3 = GameSpec::staircase(3);
    let g4 = GameSpec::staircase(4);
    vec![
        (
            g3.clone(),
            vec![
                Line::new(rat(1, 2), rat(1, 2)),
                Line::diagonal(),
                good_line(&g3, rat(3, 4)).unwrap(),
            ],
        ),
        (
            classic_two_player(),
            vec![Line::diagonal(), Line::new(rat(1, 2), rat(3, 2))],
        ),
        (
            g4.clone(),
            vec![
                Line::new(rat(5, 8), rat(3, 8)),
                Line::diagonal(),
                good_line(&g4, rat(7, 8)).unwrap(),
                good_line(&g4, rat(8, 9)).unwrap(),
            ],
        ),
    ]
}

#[test]
fn mixed_line_runs_approach_the_predicted_point() {
    for (case, (game, lines)) in mixed_line_cases().iter().enumerate() {
        let predicted = predict_limit(game, lines).unwrap().point;
        let plans: Vec<Plan> = lines.iter().map(|l| Plan::smale(l.clone())).collect();

        let h = 100_000u64;
        let near = run(game, &plans, h, SnapshotPolicy::FinalOnly).unwrap();
        let far = run(game, &plans, 2 * h, SnapshotPolicy::FinalOnly).unwrap();
        let err_near = max_abs_diff(near.limit_estimate(), &predicted);
        let err_far = max_abs_diff(far.limit_estimate(), &predicted);

        // Measured decay constants are about 3 (three players), 0 (the
        // two-player run locks onto its limit after a finite prefix), and 7
        // (four players); 10 leaves headroom without hiding regressions.
        assert!(
            &err_near * int(h as i64) <= int(10),
            "case {case}: error at T={h} is {err_near}"
        );
        assert!(
            &err_far * int(2 * h as i64) <= int(10),
            "case {case}: error at T={} is {err_far}",
            2 * h
        );
        // Doubling the horizon must shed at least 40% of the error.
        assert!(
            &err_far * int(5) <= &err_near * int(3),
            "case {case}: error {err_near} at T={h} only fell to {err_far} at T={}",
            2 * h
        );
    }
}

#[test]
fn different_first_moves_wash_out() {
    // Two runs that differ only in one player's round-1 move must drift
    // together at rate (payoff range)/T.
    let g3 = GameSpec::staircase(3);
    let good = good_line(&g3, rat(3, 4)).unwrap();
    let all_good = |initial: Move| -> Vec<Plan> {
        vec![
            Plan::smale_with_initial(good.clone(), initial),
            Plan::smale(good.clone()),
            Plan::smale(good.clone()),
        ]
    };
    let fr = GameSpec::free_rider();
    let free_rider = |initial: Move| -> Vec<Plan> {
        vec![
            Plan::AllC,
            Plan::smale_with_initial(Line::diagonal(), initial),
            Plan::AllD,
        ]
    };

    for t in [1_000u64, 10_000] {
        for (game, plans_of) in [
            (&g3, &all_good as &dyn Fn(Move) -> Vec<Plan>),
            (&fr, &free_rider as &dyn Fn(Move) -> Vec<Plan>),
        ] {
            let a = run(game, &plans_of(Move::Cooperate), t, SnapshotPolicy::FinalOnly).unwrap();
            let b = run(game, &plans_of(Move::Defect), t, SnapshotPolicy::FinalOnly).unwrap();
            let gap = max_abs_diff(a.limit_estimate(), b.limit_estimate());
            let (lo, hi) = game.payoff_range();
            assert!(
                &gap * int(t as i64) <= hi - lo,
                "first-move gap {gap} at T={t} exceeds (payoff range)/T"
            );
        }
    }
}

#[test]
fn line_values_decay_at_rate_one_over_t() {
    // A threshold-rule player facing arbitrary scripted opposition: the line
    // value of its projection obeys both one-sided envelopes, so it shrinks
    // like 1/T with an explicit constant.
    let game = GameSpec::staircase(3);
    let line = good_line(&game, rat(5, 6)).unwrap();
    let set = StrategySet::new(&game);
    let budget = envelope_constant(&line, &set, BoundSide::DefectAbove)
        + envelope_constant(&line, &set, BoundSide::CooperateBelow);

    for h in [100_000u64, 200_000] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let plans = vec![
            Plan::smale(line.clone()),
            Plan::scripted(random_script(&mut rng, h as usize), Plan::AllD),
            Plan::scripted(random_script(&mut rng, h as usize), Plan::AllD),
        ];

        // The sup over the whole run, not just the endpoint, stays within
        // each one-sided envelope.
        for side in [BoundSide::DefectAbove, BoundSide::CooperateBelow] {
            let check = check_smale_bound(&game, &plans, h, 0, &line, 1, side).unwrap();
            assert!(check.passed, "{side} envelope failed: {}", check.max_excess);
        }

        let traj = run(&game, &plans, h, SnapshotPolicy::FinalOnly).unwrap();
        let value = line.eval(&project(traj.limit_estimate(), 0));
        assert!(
            value.abs() * int(h as i64) <= budget,
            "|line value| at T={h} exceeds ({budget})/T"
        );

        // A scripted opponent satisfies neither one-sided hypothesis, so the
        // checker must refuse rather than report a vacuous pass.
        let refused = check_smale_bound(&game, &plans, h, 1, &line, 1, BoundSide::CooperateBelow);
        assert!(matches!(
            refused,
            Err(EngineError::BoundHypothesis { player: 1, .. })
        ));
    }
}

#[test]
fn free_rider_run_tracks_the_segment_prediction() {
    // One cooperator, one threshold-rule player on the diagonal, one
    // defector: the average must approach the predicted segment point, and
    // the defector's edge over the others must persist along the way.
    let game = GameSpec::free_rider();
    let predicted = segment_limit(&game, &int(1)).unwrap();
    assert_eq!(predicted.point, vec![rat(28, 11), rat(56, 11), rat(84, 11)]);

    let plans = vec![
        Plan::AllC,
        Plan::smale(Line::diagonal()),
        Plan::AllD,
    ];
    let h = 100_000u64;
    let traj = run(&game, &plans, h, SnapshotPolicy::Geometric).unwrap();
    let err = max_abs_diff(traj.limit_estimate(), &predicted.point);
    assert!(
        &err * int(h as i64) <= int(2),
        "free-rider error {err} at T={h}"
    );
    // From round 100 on, the defector's average stays above everyone else's.
    for snap in traj.snapshots.iter().filter(|s| s.round >= 100) {
        assert!(snap.average[2] > snap.average[0]);
        assert!(snap.average[2] > snap.average[1]);
    }
}
