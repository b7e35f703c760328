use zalcman::conical::{lm1_test, mm0_test, Verdict, LM1_TOL};
use zalcman::dynamics::UnicriticalMap;
use zalcman::orbits::{find_periodic, CycleKind};
use zalcman::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn repelling_cycles_are_conical() {
    let cases = [
        (c(0.0, 0.0), 1, c(1.0, 0.0)),
        (c(-2.0, 0.0), 1, c(2.0, 0.0)),
        (c(0.0, 1.0), 2, c(-1.0, 1.0)),
        (c(-1.0, 0.0), 3, c(1.009, 0.325)),
        (c(0.25, 0.5), 3, c(-1.04, 0.72)),
        (c(-0.12, 0.75), 2, c(-0.08, -0.9)),
        (c(-0.5, 0.5), 2, c(-0.89, 0.64)),
    ];
    for (param, period, seed) in cases {
        let map = UnicriticalMap::quadratic(param);
        let orbit = find_periodic(&map, period, seed).unwrap();
        assert_eq!(orbit.kind, CycleKind::Repelling, "{param}");
        // a radius well inside the distance from the cycle to the critical value
        let gap = orbit
            .cycle(&map)
            .iter()
            .map(|z| (z - param).norm())
            .fold(f64::INFINITY, f64::min);
        let verdict = mm0_test(&map, orbit.point, gap / 4.0, 1, 60).unwrap();
        assert_eq!(
            verdict.verdict,
            Verdict::ConicalCertified,
            "{param} period {period}"
        );
        assert!(verdict.consistency < 1e-8);
        assert!(verdict.center_drift < 1e-8);
    }
}

#[test]
fn lm1_stabilization_monotone() {
    for (param, z0) in [
        (c(0.0, 0.0), c(1.0, 0.0)),
        (c(0.0, 1.0), c(0.0, 1.0)),
        (c(-2.0, 0.0), c(2.0, 0.0)),
    ] {
        let map = UnicriticalMap::quadratic(param);
        let report = lm1_test(&map, z0, &[0.5, 1.0, 2.0]).unwrap();
        assert!(report.evidence, "{param}");
        for stability in &report.radii {
            assert!(stability.disagreement < LM1_TOL);
            assert!(stability.next_disagreement <= 2.0 * LM1_TOL);
        }
    }
}
