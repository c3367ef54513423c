//! Simulator to tick log to estimator, through the on-disk formats.

use flate2::write::GzEncoder;
use flate2::Compression;
use lobq::estimation::{estimate, parse_event_log, write_event_log, EstimateOptions, ParseOptions};
use lobq::model::{simulate_logged, Horizon, ModelParams, QueueDist, Replenishment, SimConfig};
use lobq::xval::{run_suite, SuiteConfig, SuiteScale};

#[test]
fn simulated_log_round_trips_through_gzip_and_estimation() {
    let p = ModelParams::with_removal_rate(50.0, 60.0, 0.01).unwrap();
    let f = QueueDist::from_weights([(1, 1, 0.5), (2, 3, 0.5)]).unwrap();
    let cfg = SimConfig::new(4, Horizon::Time(200.0));
    let (path, log) = simulate_logged(&p, &Replenishment::mirrored(&f), &cfg).unwrap();

    let mut gz = GzEncoder::new(Vec::new(), Compression::fast());
    write_event_log(&log, &mut gz).unwrap();
    let bytes = gz.finish().unwrap();
    let parsed = parse_event_log(&bytes[..], ParseOptions::default()).unwrap();
    assert!(parsed.malformed.is_empty());
    assert_eq!(parsed.records.len(), log.len());

    let opts = EstimateOptions {
        window_start: Some(0.0),
        window_end: Some(200.0),
        pool_down_moves: true,
        ..EstimateOptions::default()
    };
    let est = estimate(&parsed.records, &opts).unwrap();
    assert!((est.lambda_hat() - 50.0).abs() <= 3.0 * est.intensities.lambda_se);
    assert!((est.mu_theta_hat() - 60.0).abs() <= 3.0 * est.intensities.mu_theta_se);
    let repl = est.replenishment.as_ref().unwrap();
    assert_eq!((repl.up_moves + repl.down_moves) as usize, path.len());
    assert!(est.f_hat().unwrap().total_variation(&f) < 0.05);
}

#[test]
fn batch_rescaling_divides_queue_sizes() {
    let text = "timestamp,side,kind,bid_queue_after,ask_queue_after,bid_price_after\n\
                0.1,bid,limit,300,149,10.00\n";
    let log = parse_event_log(text.as_bytes(), ParseOptions { batch_size: 100 }).unwrap();
    assert_eq!((log.records[0].bid_queue_after, log.records[0].ask_queue_after), (3, 1));
}

#[test]
fn quick_suite_is_reproducible() {
    let cfg = SuiteConfig {
        scale: SuiteScale::Quick,
        criteria: vec![1, 3, 8],
        ..SuiteConfig::default()
    };
    let a = serde_json::to_string(&run_suite(&cfg)).unwrap();
    let b = serde_json::to_string(&run_suite(&cfg)).unwrap();
    assert_eq!(a, b);
}
