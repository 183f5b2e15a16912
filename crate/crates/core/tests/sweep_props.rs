mod common;

use std::path::PathBuf;

use photocorr::dynamics::trapezoid;
use photocorr::models::{dressed_structure, rf_model, RFParams};
use photocorr::sensors::{filtered_g2, EpsilonPolicy, SensorSpec};
use photocorr::sweep::{
    g2_map, g2_map_sequential, g2_map_with, read_table, render_map, spectrum_sweep, write_map,
    FrequencyGrid, Units,
};
use rand::Rng;

fn default_params() -> RFParams {
    RFParams::resonant(20.0)
}

fn grid(count: usize) -> FrequencyGrid {
    FrequencyGrid::new(-1.5, 1.5, count, Units::OmegaPlus).unwrap()
}

fn omega_plus() -> f64 {
    dressed_structure(&default_params()).unwrap().splitting
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

#[test]
fn small_map_equals_independent_cells() {
    let p = default_params();
    let g = grid(5);
    let map = g2_map(&p, &g, 0.5, 2).unwrap();
    assert_eq!(map.evaluations, 15);
    let model = rf_model(&p).unwrap();
    let freqs: Vec<f64> = g.points().iter().map(|x| x * map.omega_plus).collect();
    for i in 0..5 {
        for j in 0..5 {
            let cell = filtered_g2(
                &model,
                SensorSpec::new(freqs[i], 0.5),
                SensorSpec::new(freqs[j], 0.5),
                &EpsilonPolicy::default(),
            )
            .unwrap();
            assert_eq!(map.values[[i, j]], cell.value, "({i}, {j})");
        }
    }
    assert!(map.epsilon_drift_max < 0.01);
    assert!(map.values.iter().all(|&v| v >= -1e-9));
}

#[test]
fn output_is_independent_of_worker_count() {
    let p = default_params();
    let g = grid(7);
    let policy = EpsilonPolicy::default();
    let reference = render_map(&g2_map_sequential(&p, &g, 0.5, &policy).unwrap());
    for workers in [1, 2, 8] {
        let map = g2_map_with(&p, &g, 0.5, Some(workers), &policy).unwrap();
        assert_eq!(render_map(&map), reference, "workers = {workers}");
    }
    assert_eq!(
        render_map(&g2_map_with(&p, &g, 0.5, None, &policy).unwrap()),
        reference
    );
}

#[test]
fn map_is_symmetric_and_mirrors_agree_with_recomputation() {
    let p = default_params();
    let g = grid(9);
    let map = g2_map(&p, &g, 0.5, 1).unwrap();
    assert_eq!(map.evaluations, 9 * 10 / 2);
    assert_eq!(map.values, map.values.t());
    let model = rf_model(&p).unwrap();
    let freqs: Vec<f64> = g.points().iter().map(|x| x * map.omega_plus).collect();
    let mut rng = common::rng(11);
    for _ in 0..10 {
        let i = rng.random_range(1..9);
        let j = rng.random_range(0..i);
        // the mirrored cell (i, j) with i > j was copied, not computed
        let direct = filtered_g2(
            &model,
            SensorSpec::new(freqs[i], 0.5),
            SensorSpec::new(freqs[j], 0.5),
            &EpsilonPolicy::default(),
        )
        .unwrap();
        assert!((direct.value - map.values[[i, j]]).abs() < 1e-10);
    }
}

/// Regenerate with `PHOTOCORR_BLESS=1 cargo test --test sweep_props`.
#[test]
fn three_by_three_map_matches_golden_file() {
    let map =
        g2_map_sequential(&default_params(), &grid(3), 0.5, &EpsilonPolicy::default()).unwrap();
    let rendered = render_map(&map);
    let path = data_dir().join("g2map_3x3.csv");
    if std::env::var_os("PHOTOCORR_BLESS").is_some() {
        std::fs::write(&path, &rendered).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(rendered, golden);
}

#[test]
fn csv_round_trip_and_header() {
    let p = default_params();
    let map = g2_map(&p, &grid(4), 0.5, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    write_map(&map, &path).unwrap();
    let table = read_table(&path).unwrap();
    assert_eq!(table.header, ["omega1", "omega2", "g2"]);
    assert_eq!(table.rows.len(), 16);
    let g2 = table.column("g2").unwrap();
    for (k, v) in g2.iter().enumerate() {
        assert_eq!(*v, map.values[[k / 4, k % 4]]);
    }
    let md = &table.metadata;
    assert_eq!(md.get("rabi"), Some("20"));
    assert_eq!(md.get("gamma_filter"), Some("0.5"));
    assert_eq!(md.get("units"), Some("omega_plus"));
    assert_eq!(
        md.get("omega_plus").unwrap().parse::<f64>().unwrap(),
        map.omega_plus
    );
    assert!(md.get("epsilon_default_factor").is_some());
    assert!(md.get("epsilon_drift_max").is_some());
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1, "temporary file left behind");
}

#[test]
fn reader_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("noheader.csv", "# kind=g2map\n1,2,3\n"),
        ("ragged.csv", "a,b\n1,2\n3\n"),
        ("late.csv", "a\n1\n# k=v\n"),
        ("text.csv", "a\nxyz\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let err = read_table(&path).unwrap_err().to_string();
        assert!(err.contains(name) && err.contains("line"), "{err}");
    }
    assert!(read_table(&dir.path().join("absent.csv")).is_err());
}

#[test]
fn spectrum_sweep_shape() {
    let p = default_params();
    let g = grid(801);
    let s = spectrum_sweep(&p, &g, None, None).unwrap();
    assert_eq!(s.values.len(), 801);
    assert_eq!(s.frequencies, g.points());
    assert_eq!(s.local_maxima().len(), 3);
    assert!((s.area() - 1.0).abs() < 1e-12);
    let filtered = spectrum_sweep(&p, &grid(61), Some(0.5), Some(1)).unwrap();
    assert_eq!(filtered.values.len(), 61);
    assert!((filtered.area() - 1.0).abs() < 1e-12);
}

#[test]
fn elastic_fraction_does_not_depend_on_units() {
    let p = default_params();
    let a = spectrum_sweep(&p, &grid(201), None, None).unwrap();
    let w = a.frequencies.len();
    let b = spectrum_sweep(
        &p,
        &FrequencyGrid::new(-1.5 * omega_plus(), 1.5 * omega_plus(), w, Units::Gamma).unwrap(),
        None,
        None,
    )
    .unwrap();
    assert!((a.coherent_weight - b.coherent_weight).abs() < 1e-6 * b.coherent_weight);
}

/// Deviation of the filtered spectrum from the unfiltered one plus the elastic
/// line broadened by the filter, where the latter exceeds 1% of its maximum.
fn narrow_filter_deviation(gamma: f64) -> f64 {
    let p = default_params();
    let g = grid(801);
    let bare = spectrum_sweep(&p, &g, None, None).unwrap();
    let filtered = spectrum_sweep(&p, &g, Some(gamma), None).unwrap();
    let hw = gamma / 2.0 / omega_plus();
    let raw: Vec<f64> = bare
        .frequencies
        .iter()
        .zip(&bare.values)
        .map(|(&x, v)| v + bare.coherent_weight * common::lorentzian(x, hw))
        .collect();
    let area = trapezoid(&bare.frequencies, &raw);
    let max = bare.max_value();
    (0..801)
        .filter(|&k| bare.values[k] > 0.01 * max)
        .map(|k| (filtered.values[k] - raw[k] / area).abs() / (raw[k] / area))
        .fold(0.0, f64::max)
}

/// Every incoherent line gains Γ/2 of half-width under the filter, a relative
/// change of about Γ/γ near and between the lines: the filtered spectrum
/// converges linearly and is within 3% once Γ ≤ 0.03γ.
#[test]
fn narrow_filters_converge_to_the_unfiltered_spectrum() {
    let d = [0.1, 0.05, 0.03].map(narrow_filter_deviation);
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!((d[0] / d[1] - 2.0).abs() < 0.2, "{d:?}");
    assert!(d[2] < 0.03, "{d:?}");
}
