use floqopt::scan::{
    band_diagram, integrated_spectrum, linspace, objective, probability_map, rectangle_rule, sidecar_path,
    write_band_csv, write_map_csv, write_spectrum_csv, Grid2D, ObjectiveDomain, ProbabilityMap,
};
use floqopt::floquet::fold_quasi_energy;
use floqopt::{triangle_drive, FourierDrive};
use std::fs;

/// Objective of the `b1`-only drive at `A = 9` over the suppression window,
/// frozen from this implementation.
const GOLDEN_BASELINE_066: f64 = 0.766_285_178_827_734;
const GOLDEN_BASELINE_100: f64 = 1.008_425_773_013_685;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn constant_map(grid: Grid2D, value: f64) -> ProbabilityMap {
    let values = vec![value; grid.len()];
    ProbabilityMap { grid, values, drive: FourierDrive::monochromatic(), amplitude: 0.0, n_ph: 32, dense_cells: 0 }
}

#[test]
fn undriven_map_is_zero() {
    let grid = Grid2D::new(vec![2.5], vec![1.0, 3.0]).unwrap();
    let map = probability_map(&grid, &FourierDrive::monochromatic(), 0.0).unwrap();
    assert_eq!(map.values.len(), 2);
    assert!(map.values.iter().all(|&v| v.abs() <= 1e-12));
}

#[test]
fn grid_validation() {
    assert!(Grid2D::new(vec![], vec![1.0]).is_err());
    assert!(Grid2D::new(vec![0.0, 1.0, 3.0], vec![1.0]).is_err());
    assert!(Grid2D::new(vec![1.0, 0.0], vec![1.0]).is_err());
    assert!(Grid2D::uniform((0.0, 10.0), 201, (0.0, 10.0), 201).is_ok());
    let axis = linspace(0.0, 10.0, 201);
    assert_eq!(axis[0], 0.0);
    assert_eq!(axis[200], 10.0);
    assert!((axis[37] - 1.85).abs() < 1e-12);
}

#[test]
fn negative_amplitude_is_rejected() {
    let grid = Grid2D::uniform((0.0, 1.0), 2, (0.0, 1.0), 2).unwrap();
    assert!(probability_map(&grid, &FourierDrive::monochromatic(), -1.0).is_err());
}

#[test]
fn undriven_bands() {
    let axis = linspace(-3.0, 3.0, 13);
    let diagram = band_diagram(4.0, &axis, &triangle_drive(3).unwrap(), 0.0).unwrap();
    for row in &diagram.rows {
        let q = fold_quasi_energy(0.5 * (row.eps0 * row.eps0 + 16.0).sqrt());
        let mut expected = vec![q, fold_quasi_energy(-q)];
        expected.sort_by(f64::total_cmp);
        // At half-integer q both branches fold onto -1/2.
        expected.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
        assert_eq!(row.quasi_energies.len(), expected.len(), "eps0 {}", row.eps0);
        for (a, b) in row.quasi_energies.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn bands_mirror_in_bias() {
    let axis = linspace(-4.5, 4.5, 7);
    for drive in [FourierDrive::monochromatic(), triangle_drive(15).unwrap()] {
        let diagram = band_diagram(4.0, &axis, &drive, 9.0).unwrap();
        let n = diagram.rows.len();
        for k in 0..n / 2 {
            let (a, b) = (&diagram.rows[k], &diagram.rows[n - 1 - k]);
            assert_eq!(a.quasi_energies.len(), b.quasi_energies.len());
            for (x, y) in a.quasi_energies.iter().zip(&b.quasi_energies) {
                assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn spectrum_examples() {
    let grid = Grid2D::uniform((0.0, 10.0), 5, (0.0, 10.0), 11).unwrap();
    for s in integrated_spectrum(&constant_map(grid.clone(), 0.0)).unwrap() {
        assert_eq!(s.integrated_probability, 0.0);
    }
    for s in integrated_spectrum(&constant_map(grid, 0.37)).unwrap() {
        assert!((s.integrated_probability - 3.7).abs() <= 1e-12);
    }
    let short = Grid2D::uniform((0.0, 10.0), 5, (0.0, 10.0), 2).unwrap();
    assert!(integrated_spectrum(&constant_map(short, 0.1)).is_err());
}

#[test]
fn maps_are_deterministic_and_thread_independent() {
    let grid = Grid2D::uniform((0.0, 10.0), 21, (0.0, 10.0), 11).unwrap();
    let drive = triangle_drive(15).unwrap();
    let serial = pool(1).install(|| probability_map(&grid, &drive, 6.0).unwrap());
    let parallel = pool(4).install(|| probability_map(&grid, &drive, 6.0).unwrap());
    let again = pool(4).install(|| probability_map(&grid, &drive, 6.0).unwrap());
    let bits = |m: &ProbabilityMap| m.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&serial), bits(&parallel));
    assert_eq!(bits(&parallel), bits(&again));
    assert!(serial.values.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn objective_is_the_rectangle_rule_of_its_grid() {
    let domain = ObjectiveDomain::new([4.8, 5.2], [0.0, 10.0], 5, 21).unwrap();
    let drive = triangle_drive(5).unwrap();
    let value = objective(&drive, 9.0, &domain).unwrap();
    let map = probability_map(&domain.grid().unwrap(), &drive, 9.0).unwrap();
    let reference = map.values.iter().sum::<f64>() / map.values.len() as f64 * 0.4 * 10.0;
    assert!((value - reference).abs() <= 1e-12);
    assert_eq!(rectangle_rule(&[1.0, 3.0], 2.0), 4.0);
}

#[test]
fn objective_examples() {
    let domain = ObjectiveDomain::suppression_window();
    assert!(objective(&FourierDrive::monochromatic(), 0.0, &domain).unwrap().abs() <= 1e-12);
    assert!(ObjectiveDomain::new([5.0, 5.0], [0.0, 10.0], 9, 101).is_err());
    assert!(ObjectiveDomain::new([4.8, 5.2], [0.0, 10.0], 2, 101).is_err());

    for (b1, golden) in [(0.66, GOLDEN_BASELINE_066), (1.0, GOLDEN_BASELINE_100)] {
        let drive = FourierDrive::new(vec![b1]).unwrap();
        let value = objective(&drive, 9.0, &domain).unwrap();
        assert!(value > 0.0);
        assert!((value - golden).abs() <= 1e-9 * golden, "b1 {b1}: {value:.15}");
    }
}

#[test]
fn objective_quadrature_converges() {
    let domain = ObjectiveDomain::suppression_window();
    for drive in [FourierDrive::new(vec![0.66]).unwrap(), triangle_drive(15).unwrap()] {
        let coarse = objective(&drive, 9.0, &domain).unwrap();
        let fine = objective(&drive, 9.0, &domain.refined()).unwrap();
        assert!((coarse - fine).abs() <= 0.02 * fine, "{coarse} vs {fine}");
    }
}

#[test]
fn csv_outputs_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid2D::uniform((1.0, 2.0), 2, (0.0, 2.0), 3).unwrap();
    let map = probability_map(&grid, &FourierDrive::monochromatic(), 1.0).unwrap();

    let map_path = dir.path().join("map.csv");
    write_map_csv(&map, &map_path).unwrap();
    let text = fs::read_to_string(&map_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps0,delta,probability");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("1,0,"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(&map_path)).unwrap()).unwrap();
    assert_eq!(meta["amplitude"], 1.0);
    assert_eq!(meta["drive"], serde_json::json!([1.0]));
    assert_eq!(meta["n_ph"], map.n_ph);
    assert_eq!(meta["grid"]["delta"]["points"], 3);
    assert!(meta["artifact_version"].is_string());

    let spectrum_path = dir.path().join("spectrum.csv");
    write_spectrum_csv(&integrated_spectrum(&map).unwrap(), &map, &spectrum_path).unwrap();
    let text = fs::read_to_string(&spectrum_path).unwrap();
    assert_eq!(text.lines().next(), Some("eps0,integrated_probability"));
    assert_eq!(text.lines().count(), 3);
    assert!(sidecar_path(&spectrum_path).exists());

    let band_path = dir.path().join("bands.csv");
    write_band_csv(&band_diagram(4.0, &[4.0, 5.0], &FourierDrive::monochromatic(), 0.0).unwrap(), &band_path).unwrap();
    let text = fs::read_to_string(&band_path).unwrap();
    assert_eq!(text.lines().next(), Some("eps0,q1,q2"));
    assert!(sidecar_path(&band_path).exists());
}
