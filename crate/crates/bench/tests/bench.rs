use pdte_bench::*;
use pdte_core::pdte::Protocol;
use pdte_he::Simulator;
use pdte_protocol::BackendKind;

#[test]
fn empty_csv_is_header_only() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", COLUMNS.join(",")));
}

#[test]
fn comparison_records_round_trip_and_summarize() {
    let cfg = CmpConfig { precisions: vec![8, 16], trials: 3, hamming_weights: Some(vec![2, 3]), ..Default::default() };
    let recs = bench_comparison::<Simulator>(&cfg).unwrap();
    // rcc: 2 precisions x 2 weights, folklore and xxcmp: 2 precisions each
    assert_eq!(recs.len(), 3 * (4 + 2 + 2));
    for r in &recs {
        assert_eq!(r.backend, BackendKind::Sim);
        assert!(r.query_bytes > 0 && r.response_bytes > 0);
        assert!(r.comparisons >= 1);
        match r.protocol {
            Protocol::Rcc | Protocol::Folklore => assert!(r.published_capacity.is_some() && r.capacity > 1),
            Protocol::Xxcmp => assert_eq!(r.capacity, 1),
        }
    }
    let mut buf = Vec::new();
    write_csv(&recs, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);

    let sums = summarize(&recs);
    assert_eq!(sums.len(), 8);
    assert!(sums.iter().all(|s| s.trials == 3 && s.stddev_ns.is_finite()));
    for n in [8, 16] {
        let best = sums.iter().filter(|s| s.protocol == Protocol::Rcc && s.n == n && s.best_weight).count();
        assert_eq!(best, 1);
    }
    assert!(summary_text(&sums).contains("(best h)"));
}

#[test]
fn stddev_is_populated_across_trials() {
    assert_eq!(stddev(&[5.0]), 0.0);
    assert!((stddev(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-12);
    assert!((mean(&[1.0, 2.0, 3.0, 4.0]) - 2.5).abs() < 1e-12);
}

#[test]
fn linear_fit_recovers_a_line() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
    let f = linear_fit(&x, &y);
    assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept - 7.0).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
}

#[test]
fn ablation_is_deterministic_in_everything_but_time() {
    let mut cfg = AblationConfig::new(Axis::Attributes);
    cfg.precisions = vec![8];
    cfg.attributes = vec![5, 20];
    cfg.trials = 2;
    let strip = |mut v: Vec<BenchRecord>| {
        for r in &mut v {
            r.wall_ns = 0;
            r.amortized_ns = 0.0;
        }
        v
    };
    let a = strip(bench_pdte_ablation::<Simulator>(&cfg).unwrap());
    let b = strip(bench_pdte_ablation::<Simulator>(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.len(), 3 * 2 * 2);
    assert!(a.iter().all(|r| r.nodes == 31 && r.experiment == "attrs"));
}

#[test]
fn nodes_axis_grows_the_tree() {
    let mut cfg = AblationConfig::new(Axis::Nodes);
    cfg.protocols = vec![Protocol::Rcc];
    cfg.precisions = vec![8];
    cfg.depths = vec![2, 4, 6];
    cfg.trials = 1;
    let recs = bench_pdte_ablation::<Simulator>(&cfg).unwrap();
    assert_eq!(recs.iter().map(|r| r.nodes).collect::<Vec<_>>(), vec![1, 7, 31]);
    assert!(recs.iter().all(|r| r.attributes == ablation::NODES_AXIS_ATTRIBUTES));
}

#[test]
fn report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CmpConfig { protocols: vec![Protocol::Folklore], precisions: vec![8], trials: 2, ..Default::default() };
    let recs = bench_comparison::<Simulator>(&cfg).unwrap();
    let text = emit_report(&recs, dir.path(), "cmp").unwrap();
    assert!(dir.path().join("cmp.csv").exists());
    assert_eq!(std::fs::read_to_string(dir.path().join("cmp.summary.txt")).unwrap(), text);
}

#[test]
fn experiment_names_parse() {
    assert_eq!("cmp".parse::<Experiment>().unwrap(), Experiment::Cmp);
    assert_eq!("attrs".parse::<Experiment>().unwrap(), Experiment::Attrs);
    assert_eq!("nodes".parse::<Experiment>().unwrap(), Experiment::Nodes);
    assert!("bogus".parse::<Experiment>().is_err());
}
