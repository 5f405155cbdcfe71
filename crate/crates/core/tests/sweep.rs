use ehrelay::experiment::output::{read_csv, write_csv};
use ehrelay::experiment::{parse_config, sweep, ScenarioConfig, Scheme};
use ehrelay::Error;

fn small() -> ScenarioConfig {
    ScenarioConfig {
        epochs_m: 2000,
        seed: 5,
        ..ScenarioConfig::default()
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = small();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn rows_follow_grid_then_scheme_order() {
    let outcome = sweep(&small()).unwrap();
    assert!(outcome.failures.is_empty());
    let keys: Vec<(f64, Scheme)> = outcome.rows.iter().map(|r| (r.p_bar, r.scheme)).collect();
    let expected: Vec<(f64, Scheme)> = small()
        .p_bar_grid
        .iter()
        .flat_map(|&p| Scheme::ALL.iter().map(move |&s| (p, s)))
        .collect();
    assert_eq!(keys, expected);
}

#[test]
fn rates_grow_with_budget_and_fpta_shares_opa_time_fraction() {
    let outcome = sweep(&small()).unwrap();
    for scheme in Scheme::ALL {
        let rates: Vec<f64> = outcome
            .rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.avg_rate_nats)
            .collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{scheme}: {rates:?}");
    }
    for pair in outcome.rows.chunks(3) {
        assert_eq!(pair[1].tau0, pair[2].tau0);
        assert!(pair[0].tau0.is_none() && pair[2].lambda.is_none());
    }
}

#[test]
fn explicit_benchmark_time_fraction_allows_fpta_alone() {
    let mut cfg = parse_config("schemes = [FPTA]\nfpta_tau0 = 0.3\nepochs_m = 500\n").unwrap();
    cfg.p_bar_grid = vec![1.0];
    let outcome = sweep(&cfg).unwrap();
    assert_eq!(outcome.rows.len(), 1);
    assert_eq!(outcome.rows[0].tau0, Some(0.3));
}

#[test]
fn csv_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep(&small()).unwrap().rows;
    let path = dir.path().join("nested/out.csv");
    write_csv(&rows, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in back.iter().zip(&rows) {
        assert_eq!((a.scheme, a.p_bar, a.epochs_m, a.seed), (b.scheme, b.p_bar, b.epochs_m, b.seed));
        assert!((a.avg_rate_nats - b.avg_rate_nats).abs() <= 1e-11 * b.avg_rate_nats);
        assert_eq!(a.tau0.is_some(), b.tau0.is_some());
    }
    let path2 = dir.path().join("again.csv");
    write_csv(&back, &path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}

#[test]
fn zero_rows_give_header_only_and_io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_csv(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);

    let missing = dir.path().join("missing.csv");
    match read_csv(&missing) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("missing.csv")),
        other => panic!("expected I/O error, got {other:?}"),
    }
}
