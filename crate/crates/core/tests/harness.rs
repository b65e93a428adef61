use std::fs;

use compriv::harness::{
    self, DistSource, ExperimentRow, ExperimentSpec, Method, Profile, SparsityChoice,
};
use compriv::{BaselineKind, Decoder};

fn spec() -> ExperimentSpec {
    ExperimentSpec {
        k: 128,
        m: 48,
        epsilon: 0.5,
        dist: DistSource::SparseUniform { s: 3 },
        sparsity: SparsityChoice::Auto,
        methods: vec![
            Method::Cp,
            Method::Baseline(BaselineKind::Hr),
            Method::Baseline(BaselineKind::Rappor),
        ],
        decoders: vec![Decoder::Project, Decoder::Normalize],
        n_grid: vec![2_000, 8_000],
        trials: 3,
        seed: 77,
        strict_epsilon: false,
        record_timing: false,
    }
}

fn csv_bytes(rows: &[ExperimentRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    harness::write_csv(rows, &mut buf).unwrap();
    buf
}

#[test]
fn reruns_are_byte_identical() {
    let a = csv_bytes(&harness::run(&spec()).unwrap().rows);
    let b = csv_bytes(&harness::run(&spec()).unwrap().rows);
    assert_eq!(a, b);
    let mut other = spec();
    other.seed = 78;
    assert_ne!(a, csv_bytes(&harness::run(&other).unwrap().rows));
}

#[test]
fn adding_trials_keeps_earlier_trials() {
    let short = harness::run(&spec()).unwrap().rows;
    let mut longer = spec();
    longer.trials = 5;
    let long = harness::run(&longer).unwrap().rows;
    assert_eq!(long.len(), short.len() * 5 / 3);
    for row in &short {
        let twin = long
            .iter()
            .find(|r| {
                r.method == row.method
                    && r.decoder == row.decoder
                    && r.n == row.n
                    && r.trial == row.trial
            })
            .unwrap();
        assert_eq!(twin, row);
    }
}

#[test]
fn one_row_per_cell() {
    let rows = harness::run(&spec()).unwrap().rows;
    assert_eq!(rows.len(), 3 * 2 * 2 * 3);
    let hr = rows.iter().find(|r| r.method == "HR").unwrap();
    assert_eq!(hr.m, 256);
    assert!(rows
        .iter()
        .all(|r| r.wall_ms.is_none() && r.s == 3 && r.dist == "unif:3"));
}

#[test]
fn timing_is_opt_in() {
    let mut timed = spec();
    timed.record_timing = true;
    timed.methods = vec![Method::Baseline(BaselineKind::Rr)];
    let rows = harness::run(&timed).unwrap().rows;
    assert!(rows.iter().all(|r| r.wall_ms.is_some_and(|w| w >= 0.0)));
}

#[test]
fn file_distribution_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let dist_path = dir.path().join("p.txt");
    let mut text = String::from("# eight symbols\n");
    for p in [
        0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.0078125,
    ] {
        text.push_str(&format!("{p}\n"));
    }
    fs::write(&dist_path, text).unwrap();

    let mut s = spec();
    s.k = 8;
    s.m = 6;
    s.dist = DistSource::File {
        path: dist_path.clone(),
    };
    s.methods = vec![Method::Cp, Method::Baseline(BaselineKind::Ss)];
    let result = harness::run(&s).unwrap();
    // Slack after the top 3 entries is 0.125 > 0.1; after 4 it is 0.0625.
    assert_eq!(result.resolved.s, 4);

    let csv_path = dir.path().join("out.csv");
    harness::write_csv(&result.rows, fs::File::create(&csv_path).unwrap()).unwrap();
    harness::write_sidecar(
        &result.resolved,
        fs::File::create(csv_path.with_extension("json")).unwrap(),
    )
    .unwrap();
    let back = harness::read_csv(fs::File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(back, result.rows);
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(csv_path.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["s"], 4);
    assert_eq!(json["spec"]["dist"]["kind"], "file");

    fs::write(&dist_path, "0.5\n0.4\n").unwrap();
    s.k = 2;
    assert!(harness::run(&s).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let mut s = spec();
    s.n_grid = vec![8_000, 2_000];
    assert!(harness::run(&s).is_err());
    let mut s = spec();
    s.n_grid.clear();
    assert!(harness::run(&s).is_err());
    let mut s = spec();
    s.epsilon = -1.0;
    assert!(harness::run(&s).is_err());
    assert!("LAPLACE".parse::<Method>().is_err());
}

#[test]
fn full_scale_profile_is_accepted() {
    let mut s = ExperimentSpec::profile(Profile::Paper);
    assert_eq!((s.k, s.m, s.epsilon), (10_000, 500, 0.5));
    assert_eq!(s.n_grid.last(), Some(&1_000_000));
    s.n_grid = vec![50_000];
    s.trials = 1;
    s.decoders = vec![Decoder::Project];
    let result = harness::run(&s).unwrap();
    assert_eq!(result.resolved.s, 10);
    assert_eq!(result.rows.len(), s.methods.len());
}

fn fixture_row(n: usize, l1: f64) -> ExperimentRow {
    ExperimentRow {
        method: "RR".into(),
        decoder: Decoder::Normalize,
        k: 10,
        m: 10,
        epsilon: 1.0,
        s: 2,
        dist: "unif:2".into(),
        n,
        trial: 0,
        l1_error: l1,
        l2_error: 2.0 * l1,
        wall_ms: None,
        seed: 0,
    }
}

#[test]
fn summary_of_twenty_row_fixture() {
    // n = 100: l1 = 0.1, 0.2, ..., 1.0; n = 200: l1 = 0.01, ..., 0.10.
    let mut rows = Vec::new();
    for i in 1..=10 {
        rows.push(fixture_row(200, i as f64 / 100.0));
        rows.push(fixture_row(100, i as f64 / 10.0));
    }
    let summary = harness::summarize(&rows);
    assert_eq!(summary.len(), 2);
    assert_eq!((summary[0].n, summary[1].n), (100, 200));
    // Hand computation: mean 0.55, sum of squared deviations 0.825 over 9.
    assert!((summary[0].l1_mean - 0.55).abs() < 1e-12);
    assert!((summary[0].l1_std - 0.302_765_035_409_749_6).abs() < 1e-12);
    assert!((summary[0].l2_mean - 1.1).abs() < 1e-12);
    assert!((summary[1].l1_mean - 0.055).abs() < 1e-12);
    assert!((summary[1].l1_std - 0.030_276_503_540_974_96).abs() < 1e-12);
    assert!(summary.iter().all(|s| s.trials == 10));
}
