use floqopt::floquet::{default_cutoff, fold_quasi_energy, point_probability};
use floqopt::oracle::{
    oracle_average_probability, oracle_quasi_energies, propagate_period, propagate_period_with, Matrix2, Scheme,
    DEFAULT_STEPS,
};
use floqopt::{triangle_drive, FourierDrive, SystemPoint};
use num_complex::Complex64;
use std::f64::consts::PI;

const PERIOD: f64 = 2.0 * PI;

fn point(eps0: f64, delta: f64, amplitude: f64) -> SystemPoint {
    SystemPoint::new(eps0, delta, amplitude).unwrap()
}

fn distance(a: &Matrix2, b: &Matrix2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn folded_distance(a: f64, b: f64) -> f64 {
    let d = fold_quasi_energy(a - b).abs();
    d.min(1.0 - d)
}

#[test]
fn static_diagonal_propagator() {
    let eps0 = 1.37;
    let m = propagate_period(&point(eps0, 0.0, 0.0), &FourierDrive::monochromatic(), 0.0, 256).unwrap();
    let phase = 0.5 * eps0 * PERIOD;
    let expected = [
        [Complex64::from_polar(1.0, phase), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -phase)],
    ];
    assert!(distance(&m.u, &expected) < 1e-12);
    assert!((m.determinant().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn static_eigenphases() {
    for (eps0, delta) in [(0.4, 0.3), (3.0, 4.0), (7.1, 0.2)] {
        let p = point(eps0, delta, 0.0);
        let m = propagate_period(&p, &FourierDrive::monochromatic(), 0.3, 512).unwrap();
        let q = oracle_quasi_energies(&m);
        let half = 0.5 * p.gap();
        for (v, target) in q.values.iter().zip([-half, half]) {
            let hit = folded_distance(*v, target).min(folded_distance(*v, -target));
            assert!(hit < 1e-12, "{v} vs {target}");
        }
    }
}

#[test]
fn folded_static_quasi_energies() {
    let p = point(0.3, 0.0, 0.0);
    let q = oracle_quasi_energies(&propagate_period(&p, &FourierDrive::monochromatic(), 0.0, 256).unwrap());
    assert!((q.values[0] + 0.15).abs() < 1e-12 && (q.values[1] - 0.15).abs() < 1e-12);
    assert!(!q.near_degenerate);
}

#[test]
fn step_halving_at_strong_drive() {
    let p = point(3.3, 2.1, 9.0);
    let drive = triangle_drive(15).unwrap();
    let coarse = propagate_period(&p, &drive, 0.0, DEFAULT_STEPS).unwrap();
    let fine = propagate_period(&p, &drive, 0.0, 2 * DEFAULT_STEPS).unwrap();
    let d = distance(&coarse.u, &fine.u);
    assert!(d <= 1e-8, "{d:e}");
}

#[test]
fn midpoint_scheme_is_second_order() {
    let p = point(3.3, 2.1, 9.0);
    let drive = triangle_drive(15).unwrap();
    let run = |steps| propagate_period_with(&p, &drive, 0.0, steps, Scheme::Midpoint).unwrap().u;
    let ratio = distance(&run(1024), &run(2048)) / distance(&run(2048), &run(4096));
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
}

#[test]
fn quasi_energies_are_phase_independent() {
    let drive = triangle_drive(15).unwrap();
    for p in [point(2.5, 1.0, 6.0), point(7.0, 3.0, 9.0), point(0.5, 0.4, 1.0)] {
        let reference = oracle_quasi_energies(&propagate_period(&p, &drive, 0.0, DEFAULT_STEPS).unwrap());
        let shifted = oracle_quasi_energies(&propagate_period(&p, &drive, PERIOD / 3.0, DEFAULT_STEPS).unwrap());
        for (a, b) in reference.values.iter().zip(&shifted.values) {
            assert!(folded_distance(*a, *b) <= 1e-8);
        }
        let mut spread = 0.0f64;
        for j in 1..8 {
            let t0 = PERIOD * j as f64 / 8.0;
            let q = oracle_quasi_energies(&propagate_period(&p, &drive, t0, DEFAULT_STEPS).unwrap());
            for (a, b) in reference.values.iter().zip(&q.values) {
                spread = spread.max(folded_distance(*a, *b));
            }
        }
        assert!(spread <= 1e-8, "{spread:e}");
    }
}

#[test]
fn unitarity_over_200_periods() {
    let m = propagate_period(&point(4.0, 3.0, 9.0), &triangle_drive(15).unwrap(), 0.0, DEFAULT_STEPS).unwrap();
    assert!(m.unitarity_error() <= 1e-10);
    assert!((m.determinant().norm() - 1.0).abs() <= 1e-10);
    let mut u = m.u;
    for _ in 1..200 {
        u = mul(&m.u, &u);
    }
    let many = floqopt::oracle::Monodromy { u, ..m };
    assert!(many.unitarity_error() <= 1e-10, "{:e}", many.unitarity_error());
}

#[test]
fn averages_vanish_without_drive_or_tunneling() {
    let mono = FourierDrive::monochromatic();
    for p in [point(1.3, 0.7, 0.0), point(1.3, 0.0, 4.0)] {
        let v = oracle_average_probability(&p, &mono, 50, 8, 32).unwrap();
        assert!(v.abs() <= 1e-12, "{v:e}");
    }
}

#[test]
fn average_matches_floquet_value() {
    let p = point(1.0, 0.2, 2.0);
    let mono = FourierDrive::monochromatic();
    let oracle = oracle_average_probability(&p, &mono, 200, 16, 64).unwrap();
    let floquet = point_probability(&p, &mono, default_cutoff(2.0, &mono, 1.0)).unwrap().probability;
    assert!((oracle - floquet).abs() <= 1e-3, "{oracle} vs {floquet}");
}

#[test]
fn preconditions() {
    let p = point(1.0, 1.0, 1.0);
    let mono = FourierDrive::monochromatic();
    assert!(propagate_period(&p, &mono, 0.0, 255).is_err());
    assert!(oracle_average_probability(&p, &mono, 49, 8, 32).is_err());
    assert!(oracle_average_probability(&p, &mono, 50, 7, 32).is_err());
    assert!(oracle_average_probability(&p, &mono, 50, 8, 31).is_err());
}
