use std::f64::consts::{PI, SQRT_2, TAU};

use ca2d_core::geometry::{
    anchor_point, direction, dot, g_n, surface_r, surface_t, surface_t_dstar, surface_t_star, CellSet, HalfPlane,
};
use ca2d_core::grid::{builtin_rule, parse_rule, sample_window, Boundary, Coord, MeasureSpec, Rect, RuleSpec};
use ca2d_core::lyapunov::{profile, DirectionProfile, Strategy};
use proptest::prelude::*;

fn examples() -> Vec<RuleSpec> {
    vec![
        builtin_rule("F1", 0).unwrap(),
        builtin_rule("F2", 0).unwrap(),
        builtin_rule("F3", 0).unwrap(),
        builtin_rule("Fk", 2).unwrap(),
    ]
}

fn exact(rule: &RuleSpec, n: usize) -> DirectionProfile {
    profile(rule, n, n.max(4), Strategy::Exact).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_planes_grow_with_distance(theta in 0.0..TAU, d1 in 0u32..20, extra in 0u32..6) {
        let small = HalfPlane::new(theta, anchor_point(theta, d1 as f64));
        let large = HalfPlane::new(theta, anchor_point(theta, (d1 + extra) as f64));
        for z in Rect::new(-30, -30, 31, 31).cells() {
            prop_assert!(!small.contains(z) || large.contains(z), "θ={} z={}", theta, z);
        }
    }

    #[test]
    fn anchors_reach_their_distance(theta in 0.0..TAU, d in 0u32..50) {
        let a = anchor_point(theta, d as f64);
        prop_assert!(dot(a, direction(theta)) >= d as f64 - 1e-9);
        prop_assert!(HalfPlane::new(theta, a).contains(Coord::ORIGIN));
    }

    #[test]
    fn g_n_clears_the_square(k in 0usize..64, n in 1usize..64) {
        let theta = TAU * k as f64 / 64.0;
        let g = g_n(theta, n);
        if theta > PI + 1e-9 {
            prop_assert_eq!(g, Coord::ORIGIN);
        } else {
            let (c, s) = direction(theta);
            let r = SQRT_2 * n as f64;
            for (got, want) in [(g.i as f64, r * c), (g.j as f64, r * s)] {
                prop_assert!(got >= want - 1e-9 && got < want + 1.0);
            }
        }
    }
}

/// `x` and `y` agree on `T_n*`; their orbits must agree on `[0, n)^2` up to step `n`.
#[test]
fn common_behaviour_containment() {
    let n = 8usize;
    let mut pairs = 0;
    for rule in examples() {
        let p = exact(&rule, n);
        let star = surface_t_star(n, &p).unwrap().cells;
        let square = Rect::new(0, 0, n as i64, n as i64);
        let window = star.bounding_rect().union(&square).grow(rule.radius() as i64 * n as i64);
        let measure = MeasureSpec::uniform(2).unwrap();
        for s in 0..25u64 {
            let x = sample_window(&measure, window, 100 + s, 0, Boundary::Shrink).unwrap();
            let mut y = sample_window(&measure, window, 100 + s, 1, Boundary::Shrink).unwrap();
            for z in star.iter() {
                y.set(z, x.get(z).unwrap());
            }
            let (mut fx, mut fy) = (x, y);
            for k in 0..=n {
                for z in square.cells() {
                    assert_eq!(fx.get(z), fy.get(z), "{} pair {s} step {k} cell {z}", rule.name());
                }
                fx = fx.step(&rule, 1).unwrap();
                fy = fy.step(&rule, 1).unwrap();
            }
            pairs += 1;
        }
    }
    assert_eq!(pairs, 100);
}

#[test]
fn star_covers_square_inside_r() {
    let identity = parse_rule("alphabet=2\nradius=1\ntype=linear\nterm=(0,0) 1").unwrap();
    for rule in examples().into_iter().chain([identity]) {
        for n in [4usize, 8, 16] {
            let p = exact(&rule, n);
            let star = surface_t_star(n, &p).unwrap().cells;
            let square = CellSet::from_rect(Rect::new(0, 0, n as i64, n as i64));
            assert!(square.is_subset(&star), "{} n={n}", rule.name());
            assert!(star.is_subset(&CellSet::from_rect(surface_r(n, &p).unwrap())));
        }
    }
}

#[test]
fn surfaces_consistent_with_polygons() {
    for rule in examples() {
        for n in [8usize, 16, 32] {
            let p = exact(&rule, n);
            let t = surface_t(n, &p).unwrap();
            assert!(t.area_consistent(), "{} n={n} T: {} vs {}", rule.name(), t.cells.len(), t.polygon_area);
            let s = surface_t_star(n, &p).unwrap();
            assert!(s.area_consistent(), "{} n={n} T*: {} vs {}", rule.name(), s.cells.len(), s.polygon_area);
        }
    }
}

#[test]
fn dstar_is_common_part() {
    for rule in examples() {
        let p = exact(&rule, 16);
        let t = surface_t(16, &p).unwrap().cells;
        let star = surface_t_star(16, &p).unwrap().cells;
        let d = surface_t_dstar(16, &p).unwrap();
        assert!(d.cells.is_subset(&t) && d.cells.is_subset(&star));
        assert_eq!(d.cells.len(), t.iter().filter(|&z| star.contains(z)).count());
        assert!(d.ratio > 0.0 && d.ratio <= 1.0);
    }
}

#[test]
fn common_ratio_approaches_one() {
    let rule = builtin_rule("F3", 0).unwrap();
    let ns = [8usize, 16, 32, 64, 128];
    let ratios: Vec<f64> = ns.iter().map(|&n| surface_t_dstar(n, &exact(&rule, n)).unwrap().ratio).collect();
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]), "{ratios:?}");
    let c = ns.iter().zip(&ratios).map(|(&n, r)| (1.0 - r) * n as f64).fold(0.0, f64::max);
    println!("ratios {ratios:?} fitted C {c}");
    assert!(c < 8.0, "fitted constant {c}");
}
