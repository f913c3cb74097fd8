use std::f64::consts::{FRAC_PI_2, LN_2, PI, SQRT_2};

use ca2d_core::bounds::{assemble_report, bound_integral, bound_integral_quadrant, bound_rectangle};
use ca2d_core::entropy::{afe_rank, shift_entropy};
use ca2d_core::geometry::{anchor_point, surface_t, CellSet};
use ca2d_core::grid::{builtin_rule, MeasureSpec, Rect};
use ca2d_core::lyapunov::{angle_grid, profile, DirectionProfile, Method, ProfileEntry, Strategy};

fn smooth(m: usize) -> DirectionProfile {
    let n = 1usize << 30;
    let entries = angle_grid(m)
        .unwrap()
        .into_iter()
        .map(|t| {
            let l = ((1.0 + 0.1 * t * t) * n as f64).round();
            ProfileEntry { theta: t, lambda_n: l, lambda_hat: l / n as f64, method: Method::Exact, anchor: anchor_point(t, 0.0) }
        })
        .collect();
    DirectionProfile::from_entries("smooth", 1, n, m, entries).unwrap()
}

fn fk_quadrant(k: f64) -> f64 {
    k * k * (PI / 8.0 + 0.25) + SQRT_2 * k + FRAC_PI_2
}

#[test]
fn quadrature_converges_on_doubling() {
    // λ = 1 + θ²/10.
    let tau = 2.0 * PI;
    let sq = (tau + 0.2 * tau.powi(3) / 3.0 + 0.01 * tau.powi(5) / 5.0) / 2.0;
    let exact = sq + SQRT_2 * (PI + 0.1 * PI.powi(3) / 3.0) + PI;
    let mut last = f64::INFINITY;
    for m in [16usize, 32, 64, 128, 256] {
        let q = bound_integral(&smooth(m)).unwrap();
        let err = (q.value - exact).abs();
        assert!(err <= 2.0 * q.error + 1e-8, "M={m}: err {err} estimate {}", q.error);
        assert!(err < last / 3.0, "M={m}: {err} after {last}");
        last = err;
    }
}

#[test]
fn f3_golden_values() {
    let p = profile(&builtin_rule("F3", 0).unwrap(), 256, 256, Strategy::Exact).unwrap();
    assert!((bound_rectangle(&p).unwrap() - 4.0).abs() < 1e-9);
    let q = bound_integral_quadrant(&p).unwrap();
    assert!((q.value - fk_quadrant(1.0)).abs() < 0.01, "{}", q.value);
    assert!((q.value - 3.628).abs() < 0.01);
}

#[test]
fn fk_quadrant_gap_grows() {
    let n = 128;
    let mut last_gap = 0.0;
    for k in 1..=3u32 {
        let p = profile(&builtin_rule("Fk", k).unwrap(), n, 128, Strategy::Exact).unwrap();
        let kf = k as f64;
        let rect = bound_rectangle(&p).unwrap();
        assert!((rect - (kf + 1.0).powi(2)).abs() <= 2.0 * kf / n as f64);
        let quad = bound_integral_quadrant(&p).unwrap().value;
        assert!((quad - fk_quadrant(kf)).abs() <= 0.02 * kf * kf, "k={k}: {quad}");
        assert!(quad < rect);
        assert!(rect - quad > last_gap);
        last_gap = rect - quad;
    }
}

#[test]
fn surface_area_tracks_integral() {
    let f3 = builtin_rule("F3", 0).unwrap();
    let closed = 3.0 * PI / 8.0 + 0.25 + 2.0 + SQRT_2 + PI;
    for n in [32usize, 64] {
        let p = profile(&f3, n, n, Strategy::Exact).unwrap();
        let ratio = surface_t(n, &p).unwrap().cells.len() as f64 / (n * n) as f64;
        let integral = bound_integral(&p).unwrap().value;
        assert!((ratio - integral).abs() <= 0.15f64.max(8.0 / n as f64), "n={n}: {ratio} vs {integral}");
        assert!((integral - closed).abs() < 0.1, "n={n}: {integral} vs {closed}");
    }
}

#[test]
fn f3_report_passes() {
    let f3 = builtin_rule("F3", 0).unwrap();
    let p = profile(&f3, 64, 64, Strategy::Exact).unwrap();
    let afe = afe_rank(&f3, 6, 8).unwrap();
    let shift = shift_entropy(&MeasureSpec::uniform(2).unwrap(), &CellSet::from_rect(Rect::new(0, 0, 4, 4))).unwrap();
    let report = assemble_report(&afe, &shift, &p).unwrap();
    assert!(report.verdicts.all_pass() && report.verdicts.quadrant_le_rectangle);
    assert!((report.products.rectangle - 4.0 * LN_2).abs() < 1e-12);
    assert!(report.failures().is_empty());
}

#[test]
fn f1_quadrant_exceeds_rectangle() {
    let f1 = builtin_rule("F1", 0).unwrap();
    let p = profile(&f1, 128, 128, Strategy::Exact).unwrap();
    let quad = bound_integral_quadrant(&p).unwrap().value;
    assert!((quad - (PI / 8.0 + 1.0 + FRAC_PI_2)).abs() < 0.02, "{quad}");
    assert_eq!(bound_rectangle(&p).unwrap(), 2.0);
}
