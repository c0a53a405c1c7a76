use betbound::game::GameSpec;
use betbound::numerics::{Closure, Combine, Direction, Rational, StepFunction};
use betbound::strategies::{Policy, Regime};
use proptest::prelude::*;

/// Reduced fraction over i128, the independent oracle for `Rational`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frac(i128, i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Frac {
    fn new(n: i128, d: i128) -> Frac {
        let g = gcd(n, d);
        let s = if d < 0 { -1 } else { 1 };
        Frac(s * n / g, s * d / g)
    }
    fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn sub(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }
    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.0, self.1 * o.1)
    }
    fn less(self, o: Frac) -> bool {
        self.0 * o.1 < o.0 * self.1
    }
    fn text(self) -> String {
        if self.1 == 1 {
            self.0.to_string()
        } else {
            format!("{}/{}", self.0, self.1)
        }
    }
}

fn frac() -> impl Strategy<Value = (i64, i64)> {
    (-10_000i64..10_000, 1i64..10_000)
}

fn both((n, d): (i64, i64)) -> (Rational, Frac) {
    (Rational::frac(n, d), Frac::new(n as i128, d as i128))
}

/// Step function on `[0, 1)` with breakpoints `k / 64`.
fn step_fn() -> impl Strategy<Value = StepFunction> {
    (
        prop::collection::btree_set(1i64..64, 0..12),
        prop::collection::vec(0.0f64..50.0, 13),
    )
        .prop_map(|(cuts, vals)| {
            let mut bps = vec![Rational::zero()];
            bps.extend(cuts.iter().map(|k| Rational::frac(*k, 64)));
            bps.push(Rational::one());
            let n = bps.len() - 1;
            StepFunction::new(bps, vals[..n].to_vec()).unwrap()
        })
}

fn probe_points() -> Vec<Rational> {
    (0..256)
        .map(|k| Rational::frac(2 * k + 1, 512))
        .chain((0..64).map(|k| Rational::frac(k, 64)))
        .collect()
}

fn at(f: &StepFunction, x: &Rational) -> f64 {
    f.eval(x).unwrap().to_f64()
}

proptest! {
    #[test]
    fn rational_arithmetic_matches_oracle(a in frac(), b in frac()) {
        let (ra, fa) = both(a);
        let (rb, fb) = both(b);
        prop_assert_eq!((&ra + &rb).to_string(), fa.add(fb).text());
        prop_assert_eq!((&ra - &rb).to_string(), fa.sub(fb).text());
        prop_assert_eq!((&ra * &rb).to_string(), fa.mul(fb).text());
        prop_assert_eq!(ra < rb, fa.less(fb));
        prop_assert_eq!(ra.to_string().parse::<Rational>().unwrap(), ra);
    }

    #[test]
    fn directed_conversions_bracket(a in frac()) {
        let (r, _) = both(a);
        let lo = Rational::from_f64(r.to_f64_down()).unwrap();
        let hi = Rational::from_f64(r.to_f64_up()).unwrap();
        prop_assert!(lo <= r && r <= hi);
    }

    #[test]
    fn coarsen_is_conservative(f in step_fn(), budget in 1usize..8) {
        let up = f.coarsen(budget, Direction::Up);
        let down = f.coarsen(budget, Direction::Down);
        prop_assert!(up.pieces() <= budget && down.pieces() <= budget);
        for x in probe_points() {
            prop_assert!(at(&up, &x) >= at(&f, &x));
            prop_assert!(at(&down, &x) <= at(&f, &x));
        }
    }

    #[test]
    fn monotone_repair_properties(f in step_fn()) {
        let up = f.monotone_repair(Direction::Up);
        let down = f.monotone_repair(Direction::Down);
        prop_assert!(up.is_monotone_nonincreasing() && down.is_monotone_nonincreasing());
        for x in probe_points() {
            prop_assert!(at(&up, &x) <= at(&f, &x));
            prop_assert!(at(&down, &x) >= at(&f, &x));
        }
        if f.is_monotone_nonincreasing() {
            prop_assert_eq!(&up, &f);
        }
    }

    #[test]
    fn combine_is_pointwise(f in step_fn(), g in step_fn(), right in any::<bool>()) {
        let closure = if right { Closure::Right } else { Closure::Left };
        let (f, g) = (f.with_closure(closure), g.with_closure(closure));
        let lo = f.pointwise_combine(&g, Combine::Min);
        let hi = f.pointwise_combine(&g, Combine::Max);
        for x in probe_points() {
            prop_assert_eq!(at(&lo, &x), at(&f, &x).min(at(&g, &x)));
            prop_assert_eq!(at(&hi, &x), at(&f, &x).max(at(&g, &x)));
        }
    }

    #[test]
    fn stakes_stay_within_bankroll(k in 1i64..1000, xi in 335i64..=500) {
        let g = GameSpec::example();
        let x = Rational::frac(k, 1000);
        let xi0 = Rational::frac(xi, 1000);
        for policy in [Policy::kelly(), Policy::threshold(xi0.clone())] {
            let s = policy.stake(&g, &x).unwrap();
            prop_assert!(!s.is_negative() && s <= x);
        }
        // regime switches exactly at xi0
        let t = Policy::threshold(xi0.clone());
        let expect = if x >= xi0 { Regime::Explicit } else { Regime::Kelly };
        prop_assert_eq!(t.regime(&g, &x), expect);
        let bet = (Rational::one() - &x) / Rational::from_integer(2);
        if x >= xi0 {
            prop_assert_eq!(t.stake(&g, &x).unwrap(), bet);
        } else {
            prop_assert_eq!(t.stake(&g, &x).unwrap(), x / Rational::from_integer(2));
        }
    }

    #[test]
    fn policy_text_round_trips(xi in 335i64..=1000, cap in 1i64..100) {
        for p in [
            Policy::threshold(Rational::frac(xi, 1000)),
            Policy::Kelly { max_fraction: Some(Rational::frac(cap, 100)) },
        ] {
            prop_assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
    }
}
