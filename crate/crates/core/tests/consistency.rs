use betbound::bounds::{iterate, BoundsConfig};
use betbound::exact_eval::{
    build_graph, climb_time, evaluate, solve_all, Edge, Successor, DEFAULT_STATE_CAP,
};
use betbound::game::GameSpec;
use betbound::montecarlo::{estimate, SimConfig};
use betbound::numerics::{ExtValue, Rational};
use betbound::strategies::{counterexample_policy, Policy};

fn r(n: i64, d: i64) -> Rational {
    Rational::frac(n, d)
}

fn value(g: &GameSpec, policy: &Policy, x: &Rational) -> Rational {
    match evaluate(g, policy, x, DEFAULT_STATE_CAP).unwrap().value {
        ExtValue::Finite(v) => v,
        ExtValue::Infinity => panic!("infinite value at {x}"),
    }
}

fn policies() -> Vec<Policy> {
    vec![
        Policy::kelly(),
        Policy::threshold(r(2, 5)),
        Policy::threshold(r(7, 20)),
        Policy::threshold(r(1, 2)),
        counterexample_policy(),
    ]
}

#[test]
fn one_step_recursion_holds_between_independent_evaluations() {
    // V(x) = 1 + p V(x + b s) + q V(x - s), each side evaluated from scratch
    let g = GameSpec::example();
    let (p, q) = (g.p_win().clone(), g.p_loss());
    for policy in policies() {
        // every state reachable from 7/18 has a finite closure of its own
        let graph = build_graph(&g, &policy, &r(7, 18), DEFAULT_STATE_CAP).unwrap();
        for x in graph.states() {
            let s = policy.stake(&g, x).unwrap();
            let win = g.apply_bet(x, &s, true).unwrap();
            let loss = g.apply_bet(x, &s, false).unwrap();
            let rhs =
                Rational::one() + &p * value(&g, &policy, &win) + &q * value(&g, &policy, &loss);
            assert_eq!(value(&g, &policy, x), rhs, "{policy} at {x}");
        }
    }
}

#[test]
fn solved_graph_satisfies_its_equations() {
    let g = GameSpec::example();
    let (p, q) = (g.p_win().clone(), g.p_loss());
    for policy in policies() {
        let graph = build_graph(&g, &policy, &r(7, 18), DEFAULT_STATE_CAP).unwrap();
        let vals = solve_all(&graph).unwrap();
        let get = |s: &Successor| match s {
            Successor::State(i) => vals[*i].finite().unwrap().clone(),
            Successor::Absorbed => Rational::zero(),
            Successor::Ruin => panic!("ruin"),
        };
        for (i, edge) in graph.edges().iter().enumerate() {
            let v = vals[i].finite().unwrap().clone();
            match edge {
                Edge::Bet { win, loss } => {
                    assert_eq!(v, Rational::one() + &p * get(win) + &q * get(loss))
                }
                Edge::Climb { exit, rounds, .. } => assert_eq!(v, rounds + &get(exit)),
            }
        }
    }
}

/// Expected time for a ±1 walk (up with probability `p`) to rise `levels`,
/// on a chain truncated `depth` levels below the start with a reflecting
/// floor; tridiagonal solve.
fn birth_death_climb(p: f64, levels: usize, depth: usize) -> f64 {
    // unknowns E_i for i = 0 (floor) .. n - 1, target at index n
    let n = depth + levels;
    let q = 1.0 - p;
    let mut a = vec![0.0; n]; // sub-diagonal
    let mut b = vec![1.0; n];
    let mut c = vec![0.0; n]; // super-diagonal
    let d = vec![1.0; n];
    for i in 0..n {
        if i == 0 {
            // floor: a loss stays put
            b[i] = 1.0 - q;
        } else {
            a[i] = -q;
        }
        if i + 1 < n {
            c[i] = -p;
        }
    }
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for i in 0..n {
        let m = b[i] - if i > 0 { a[i] * cp[i - 1] } else { 0.0 };
        cp[i] = c[i] / m;
        dp[i] = (d[i] - if i > 0 { a[i] * dp[i - 1] } else { 0.0 }) / m;
    }
    let mut e = vec![0.0; n];
    for i in (0..n).rev() {
        e[i] = dp[i] - if i + 1 < n { cp[i] * e[i + 1] } else { 0.0 };
    }
    e[depth]
}

#[test]
fn climb_time_matches_truncated_chain() {
    let g = GameSpec::example();
    for levels in [1usize, 2, 3, 5, 10] {
        let exact = climb_time(&g, levels as u32).unwrap().to_f64();
        let chain = birth_death_climb(2.0 / 3.0, levels, 200);
        assert!((exact - chain).abs() < 1e-9, "{levels}: {exact} vs {chain}");
    }
    let g = GameSpec::new(r(3, 4), r(3, 1)).unwrap();
    let exact = climb_time(&g, 4).unwrap().to_f64();
    assert!((exact - birth_death_climb(0.75, 4, 200)).abs() < 1e-9);
}

#[test]
fn policy_values_respect_certified_bounds() {
    let g = GameSpec::example();
    let (b, _) = iterate(&g, 6, BoundsConfig::with_budget(512)).unwrap();
    for policy in policies() {
        let graph = build_graph(&g, &policy, &r(7, 18), DEFAULT_STATE_CAP).unwrap();
        for x in graph.states() {
            let v = value(&g, &policy, x).to_f64();
            let lo = b.lower.eval(x).unwrap().to_f64();
            assert!(lo <= v, "{policy} at {x}: {v} below lower bound {lo}");
        }
    }
    // simulated means too, up to sampling error
    let est = estimate(&SimConfig::new(
        g.clone(),
        counterexample_policy(),
        r(7, 18),
        20_000,
        3,
    ))
    .unwrap();
    let lo = b.lower.eval(&r(7, 18)).unwrap().to_f64();
    assert!(est.mean_rounds >= lo - 4.0 * est.std_error);
}
