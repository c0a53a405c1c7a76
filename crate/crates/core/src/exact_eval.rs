//! Exact expected hitting times of fixed policies.
//!
//! The reachable states of a policy are collected into a [`StateGraph`].
//! Runs of Kelly bets in reciprocal-Kelly games are collapsed into climb
//! macro-edges whose expected duration is known in closed form, which keeps
//! the graph finite even though Kelly losses can descend forever. The
//! resulting absorbing chain is solved exactly over the rationals.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::game::{GameError, GameSpec};
use crate::numerics::{ExtValue, Rational};
use crate::strategies::{counterexample_policy, Policy, PolicyError, Regime};

pub const DEFAULT_STATE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("more than {cap} distinct states reachable")]
    StateExplosion { cap: usize },
    #[error("unbounded Kelly descent from {0} in a game without the reciprocal-Kelly property")]
    NonReciprocalClimb(Rational),
    #[error("closed-form climb requires the reciprocal-Kelly property and p > 1/2")]
    ClimbUnavailable,
    #[error("start bankroll must be positive, got {0}")]
    Start(Rational),
    #[error("{0} is not a state of the graph")]
    UnknownState(Rational),
    #[error("singular hitting-time system")]
    Singular,
    #[error("golden table is defined for the example game p=2/3 b=2 only")]
    NotExampleGame,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successor {
    State(usize),
    /// Bankroll reached the target.
    Absorbed,
    /// Bankroll reached exactly 0.
    Ruin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edge {
    /// One round: win with probability `p`, lose otherwise.
    Bet { win: Successor, loss: Successor },
    /// A collapsed run of Kelly bets climbing `levels` lattice levels.
    Climb {
        exit: Successor,
        levels: u32,
        rounds: Rational,
    },
}

#[derive(Debug, Clone)]
pub struct StateGraph {
    p_win: Rational,
    states: Vec<Rational>,
    edges: Vec<Edge>,
    index: HashMap<Rational, usize>,
}

impl StateGraph {
    pub fn states(&self) -> &[Rational] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn state_index(&self, x: &Rational) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn edge_of(&self, x: &Rational) -> Option<&Edge> {
        self.state_index(x).map(|i| &self.edges[i])
    }

    pub fn has_ruin(&self) -> bool {
        self.edges.iter().any(|e| {
            matches!(
                e,
                Edge::Bet {
                    loss: Successor::Ruin,
                    ..
                } | Edge::Bet {
                    win: Successor::Ruin,
                    ..
                }
            )
        })
    }

    pub fn uses_climbs(&self) -> bool {
        self.edges.iter().any(|e| matches!(e, Edge::Climb { .. }))
    }

    fn successors(&self, i: usize) -> Vec<&Successor> {
        match &self.edges[i] {
            Edge::Bet { win, loss } => vec![win, loss],
            Edge::Climb { exit, .. } => vec![exit],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub value: ExtValue<Rational>,
    pub states_visited: usize,
    pub used_climb_macros: bool,
}

/// Expected rounds for the Kelly walk to gain `levels` lattice levels:
/// `levels / (2p - 1)`.
pub fn climb_time(game: &GameSpec, levels: u32) -> Result<Rational, EvalError> {
    let drift = Rational::from_integer(2) * game.p_win() - Rational::one();
    if !game.reciprocal_kelly() || !drift.is_positive() {
        return Err(EvalError::ClimbUnavailable);
    }
    Ok(Rational::from_integer(levels as i64) / drift)
}

pub fn build_graph(
    game: &GameSpec,
    policy: &Policy,
    x0: &Rational,
    cap: usize,
) -> Result<StateGraph, EvalError> {
    if !x0.is_positive() || *x0 >= Rational::one() {
        return Err(EvalError::Start(x0.clone()));
    }
    let reciprocal = game.reciprocal_kelly();
    let multipliers = game.kelly_multipliers().ok();

    let mut graph = StateGraph {
        p_win: game.p_win().clone(),
        states: Vec::new(),
        edges: Vec::new(),
        index: HashMap::new(),
    };
    let mut pending: Vec<Option<Edge>> = Vec::new();
    let mut queue = VecDeque::new();

    let intern = |x: Rational,
                  graph: &mut StateGraph,
                  pending: &mut Vec<Option<Edge>>,
                  queue: &mut VecDeque<usize>|
     -> Result<Successor, EvalError> {
        if x >= Rational::one() {
            return Ok(Successor::Absorbed);
        }
        if x.is_zero() {
            return Ok(Successor::Ruin);
        }
        if let Some(&i) = graph.index.get(&x) {
            return Ok(Successor::State(i));
        }
        if graph.states.len() >= cap {
            return Err(EvalError::StateExplosion { cap });
        }
        let i = graph.states.len();
        graph.index.insert(x.clone(), i);
        graph.states.push(x);
        pending.push(None);
        queue.push_back(i);
        Ok(Successor::State(i))
    };

    intern(x0.clone(), &mut graph, &mut pending, &mut queue)?;
    while let Some(i) = queue.pop_front() {
        let x = graph.states[i].clone();
        let kelly_run = match &multipliers {
            Some((_, down)) => {
                policy.regime(game, &x) == Regime::Kelly && policy.kelly_below(game, &x, down)
            }
            None => false,
        };
        let edge = if kelly_run {
            if !reciprocal {
                return Err(EvalError::NonReciprocalClimb(x));
            }
            let up = &multipliers.as_ref().expect("favorable").0;
            // climb until the target or the first level where the regime changes
            let mut levels = 1u32;
            let mut y = &x * up;
            while y < Rational::one() && policy.regime(game, &y) == Regime::Kelly {
                y = &y * up;
                levels += 1;
            }
            Edge::Climb {
                exit: intern(y, &mut graph, &mut pending, &mut queue)?,
                levels,
                rounds: climb_time(game, levels)?,
            }
        } else {
            let stake = policy.stake(game, &x)?;
            let win = game.apply_bet(&x, &stake, true)?;
            let loss = game.apply_bet(&x, &stake, false)?;
            Edge::Bet {
                win: intern(win, &mut graph, &mut pending, &mut queue)?,
                loss: intern(loss, &mut graph, &mut pending, &mut queue)?,
            }
        };
        pending[i] = Some(edge);
    }
    graph.edges = pending
        .into_iter()
        .map(|e| e.expect("every queued state is expanded"))
        .collect();
    Ok(graph)
}

/// Expected hitting time from every state of `graph`.
///
/// States that can reach ruin, or that can reach a state from which the
/// target is unreachable, have infinite value.
pub fn solve_all(graph: &StateGraph) -> Result<Vec<ExtValue<Rational>>, EvalError> {
    let n = graph.states.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reaches_target = vec![false; n];
    let mut reaches_ruin = vec![false; n];
    for i in 0..n {
        for s in graph.successors(i) {
            match s {
                Successor::State(j) => preds[*j].push(i),
                Successor::Absorbed => reaches_target[i] = true,
                Successor::Ruin => reaches_ruin[i] = true,
            }
        }
    }
    let backward = |seed: &mut Vec<bool>| {
        let mut stack: Vec<usize> = (0..n).filter(|&i| seed[i]).collect();
        while let Some(j) = stack.pop() {
            for &i in &preds[j] {
                if !seed[i] {
                    seed[i] = true;
                    stack.push(i);
                }
            }
        }
    };
    backward(&mut reaches_target);
    let mut infinite: Vec<bool> = (0..n)
        .map(|i| reaches_ruin[i] || !reaches_target[i])
        .collect();
    backward(&mut infinite);

    let finite: Vec<usize> = (0..n).filter(|&i| !infinite[i]).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in finite.iter().enumerate() {
        slot[i] = k;
    }

    // (I - P) E = d over the finite states
    let m = finite.len();
    let p = &graph.p_win;
    let q = Rational::one() - p;
    let mut a = vec![vec![Rational::zero(); m + 1]; m];
    for (k, &i) in finite.iter().enumerate() {
        a[k][k] = Rational::one();
        let sub = |succ: &Successor, prob: &Rational, row: &mut Vec<Rational>| {
            if let Successor::State(j) = succ {
                row[slot[*j]] = &row[slot[*j]] - prob;
            }
        };
        match &graph.edges[i] {
            Edge::Bet { win, loss } => {
                sub(win, p, &mut a[k]);
                sub(loss, &q, &mut a[k]);
                a[k][m] = Rational::one();
            }
            Edge::Climb { exit, rounds, .. } => {
                sub(exit, &Rational::one(), &mut a[k]);
                a[k][m] = rounds.clone();
            }
        }
    }
    let solution = gaussian_solve(a)?;

    Ok((0..n)
        .map(|i| {
            if infinite[i] {
                ExtValue::Infinity
            } else {
                ExtValue::Finite(solution[slot[i]].clone())
            }
        })
        .collect())
}

/// Solves an augmented system `[A | b]` exactly.
fn gaussian_solve(mut a: Vec<Vec<Rational>>) -> Result<Vec<Rational>, EvalError> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(EvalError::Singular)?;
        a.swap(col, pivot);
        let inv = a[col][col].recip().map_err(|_| EvalError::Singular)?;
        for v in &mut a[col][col..=m] {
            *v = &*v * &inv;
        }
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            let pivot_row = a[col].clone();
            for (v, w) in a[r][col..=m].iter_mut().zip(&pivot_row[col..=m]) {
                *v = &*v - &factor * w;
            }
        }
    }
    Ok(a.into_iter().map(|row| row[m].clone()).collect())
}

pub fn solve(graph: &StateGraph, x0: &Rational) -> Result<ExactResult, EvalError> {
    let i = graph
        .state_index(x0)
        .ok_or_else(|| EvalError::UnknownState(x0.clone()))?;
    let values = solve_all(graph)?;
    Ok(ExactResult {
        value: values[i].clone(),
        states_visited: graph.states.len(),
        used_climb_macros: graph.uses_climbs(),
    })
}

/// Expected number of rounds for `policy` to reach bankroll 1 from `x0`.
pub fn evaluate(
    game: &GameSpec,
    policy: &Policy,
    x0: &Rational,
    cap: usize,
) -> Result<ExactResult, EvalError> {
    if !x0.is_positive() {
        return Err(EvalError::Start(x0.clone()));
    }
    if *x0 >= Rational::one() {
        return Ok(ExactResult {
            value: ExtValue::zero(),
            states_visited: 0,
            used_climb_macros: false,
        });
    }
    policy.validate(game)?;
    let graph = build_graph(game, policy, x0, cap)?;
    solve(&graph, x0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub label: String,
    pub expected: Rational,
    pub computed: ExtValue<Rational>,
    pub pass: bool,
}

/// Threshold samples spanning both ways a threshold strategy can play 7/18:
/// bet to the target immediately (xi0 <= 7/18) or climb to 7/9 first.
pub fn default_xi0_samples() -> Vec<(String, Rational)> {
    [
        ("0.34", (17, 50)),
        ("3/8", (3, 8)),
        ("7/18", (7, 18)),
        ("0.45", (9, 20)),
        ("1/2", (1, 2)),
    ]
    .into_iter()
    .map(|(label, (n, d))| (label.to_string(), Rational::frac(n, d)))
    .collect()
}

/// Golden hitting times of the example game, recomputed from scratch.
pub fn verify_golden(game: &GameSpec) -> Result<Vec<GoldenRow>, EvalError> {
    if !game.is_example() {
        return Err(EvalError::NotExampleGame);
    }
    let cap = DEFAULT_STATE_CAP;
    let r = Rational::frac;
    let mut rows = Vec::new();
    let mut push = |label: String, expected: Rational, computed: ExtValue<Rational>| {
        let pass = computed == ExtValue::Finite(expected.clone());
        rows.push(GoldenRow {
            label,
            expected,
            computed,
            pass,
        });
    };

    for k in 1..=10u32 {
        let x = r(1, 1 << k);
        let v = evaluate(game, &Policy::kelly(), &x, cap)?.value;
        push(
            format!("T({x}) Kelly"),
            Rational::from_integer(3 * k as i64),
            v,
        );
    }

    // bet to the target from 1/2 upward, Kelly below
    let top = Policy::threshold(r(1, 2));
    push(
        "T(2/3)".into(),
        r(2, 1),
        evaluate(game, &top, &r(2, 3), cap)?.value,
    );
    push(
        "T(7/9)".into(),
        r(5, 3),
        evaluate(game, &top, &r(7, 9), cap)?.value,
    );

    let start = r(7, 18);
    let mut best: Option<ExtValue<Rational>> = None;
    for (label, xi0) in default_xi0_samples() {
        let v = evaluate(game, &Policy::threshold(xi0), &start, cap)?.value;
        best = Some(match best {
            None => v.clone(),
            Some(b) => b.min(&v),
        });
        push(format!("threshold@7/18, xi0={label}"), r(14, 3), v);
    }
    let best = best.expect("samples nonempty");
    push("T(7/18) threshold best".into(), r(14, 3), best.clone());

    let alt = evaluate(game, &counterexample_policy(), &start, cap)?.value;
    push("T(7/18) counterexample".into(), r(13, 3), alt.clone());

    let ratio = match (&best, &alt) {
        (ExtValue::Finite(t), ExtValue::Finite(c)) => ExtValue::Finite(t / c),
        _ => ExtValue::Infinity,
    };
    push("ratio".into(), r(14, 13), ratio);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn fin(n: i64, d: i64) -> ExtValue<Rational> {
        ExtValue::Finite(r(n, d))
    }

    #[test]
    fn climb_time_examples() {
        let g = GameSpec::example();
        assert_eq!(climb_time(&g, 1).unwrap(), r(3, 1));
        assert_eq!(climb_time(&g, 5).unwrap(), r(15, 1));
        assert_eq!(climb_time(&g, 3).unwrap(), r(9, 1));
        let other = GameSpec::new(r(3, 5), r(1, 1)).unwrap();
        assert_eq!(climb_time(&other, 1), Err(EvalError::ClimbUnavailable));
    }

    #[test]
    fn case_a_graph_shape() {
        let g = GameSpec::example();
        let graph = build_graph(
            &g,
            &Policy::threshold("0.35".parse().unwrap()),
            &r(7, 18),
            100,
        )
        .unwrap();
        for x in [r(7, 18), r(2, 3), r(1, 2), r(1, 12), r(1, 4)] {
            assert!(graph.state_index(&x).is_some(), "{x}");
        }
        let idx = |x: Rational| Successor::State(graph.state_index(&x).unwrap());
        assert_eq!(
            graph.edge_of(&r(1, 12)).unwrap(),
            &Edge::Climb {
                exit: idx(r(2, 3)),
                levels: 3,
                rounds: r(9, 1)
            }
        );
        assert_eq!(
            graph.edge_of(&r(1, 4)).unwrap(),
            &Edge::Climb {
                exit: idx(r(1, 2)),
                levels: 1,
                rounds: r(3, 1)
            }
        );
        assert_eq!(solve(&graph, &r(7, 18)).unwrap().value, fin(14, 3));
    }

    #[test]
    fn case_b_graph_shape() {
        let g = GameSpec::example();
        let graph = build_graph(&g, &Policy::threshold(r(9, 20)), &r(7, 18), 100).unwrap();
        let exit = Successor::State(graph.state_index(&r(7, 9)).unwrap());
        assert_eq!(
            graph.edge_of(&r(7, 18)).unwrap(),
            &Edge::Climb {
                exit,
                levels: 1,
                rounds: r(3, 1)
            }
        );
        for x in [r(2, 3), r(1, 2)] {
            assert!(graph.state_index(&x).is_some());
        }
    }

    #[test]
    fn whole_bankroll_stake_is_ruin() {
        let g = GameSpec::example();
        let graph = build_graph(&g, &Policy::BetToTarget, &r(1, 3), 10).unwrap();
        assert!(graph.has_ruin());
        assert_eq!(solve(&graph, &r(1, 3)).unwrap().value, ExtValue::Infinity);
    }

    #[test]
    fn half_cycle_solves_to_three() {
        // 1/2 bets to the target; a loss climbs back from 1/4 in 3 rounds
        let g = GameSpec::example();
        let p = Policy::table([(r(1, 2), r(1, 4))], Policy::kelly()).unwrap();
        let res = evaluate(&g, &p, &r(1, 2), 10).unwrap();
        assert_eq!(res.value, fin(3, 1));
        assert!(res.used_climb_macros);
    }

    #[test]
    fn evaluate_golden_values() {
        let g = GameSpec::example();
        let cap = DEFAULT_STATE_CAP;
        assert_eq!(
            evaluate(&g, &Policy::kelly(), &r(1, 32), cap)
                .unwrap()
                .value,
            fin(15, 1)
        );
        assert_eq!(
            evaluate(&g, &counterexample_policy(), &r(7, 18), cap)
                .unwrap()
                .value,
            fin(13, 3)
        );
        assert_eq!(
            evaluate(&g, &Policy::threshold(r(2, 5)), &r(7, 18), cap)
                .unwrap()
                .value,
            fin(14, 3)
        );
        assert_eq!(
            evaluate(&g, &Policy::threshold(r(1, 2)), &r(7, 9), cap)
                .unwrap()
                .value,
            fin(5, 3)
        );
        assert_eq!(
            evaluate(&g, &Policy::kelly(), &r(1, 1), cap).unwrap().value,
            fin(0, 1)
        );
        assert!(evaluate(&g, &Policy::kelly(), &Rational::zero(), cap).is_err());
    }

    #[test]
    fn zero_stake_never_finishes() {
        let g = GameSpec::example();
        let p = Policy::table([(r(1, 2), Rational::zero())], Policy::kelly()).unwrap();
        assert_eq!(
            evaluate(&g, &p, &r(1, 2), 10).unwrap().value,
            ExtValue::Infinity
        );
    }

    #[test]
    fn state_cap_is_enforced() {
        // capped Kelly never collapses, so the dyadic descent is explored state by state
        let g = GameSpec::example();
        let p: Policy = "kelly:cap=1/4".parse().unwrap();
        assert_eq!(
            evaluate(&g, &p, &r(1, 2), 50).unwrap_err(),
            EvalError::StateExplosion { cap: 50 }
        );
    }

    #[test]
    fn non_reciprocal_kelly_descent_is_rejected() {
        let g = GameSpec::new(r(3, 5), r(1, 1)).unwrap();
        assert!(matches!(
            evaluate(&g, &Policy::kelly(), &r(1, 2), 100),
            Err(EvalError::NonReciprocalClimb(_))
        ));
    }

    #[test]
    fn golden_table_passes() {
        let rows = verify_golden(&GameSpec::example()).unwrap();
        for row in &rows {
            assert!(row.pass, "{row:?}");
        }
        let find = |l: &str| rows.iter().find(|r| r.label == l).unwrap();
        assert_eq!(find("T(1/16) Kelly").computed, fin(12, 1));
        assert_eq!(find("ratio").computed, fin(14, 13));
        assert_eq!(find("threshold@7/18, xi0=0.45").computed, fin(14, 3));
        assert!(verify_golden(&GameSpec::new(r(3, 5), r(1, 1)).unwrap()).is_err());
    }
}
