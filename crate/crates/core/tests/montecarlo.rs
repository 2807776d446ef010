//! Simulator behavior that does not depend on the analytic model.

use cen_meta::model::{db_to_linear, InScheme, NetworkConfig};
use cen_meta::montecarlo::{empirical_summaries, run_campaign, run_campaign_multi, MonteCarloConfig};
use cen_meta::parallel::{with_threads, Execution};

#[test]
fn window_size_does_not_move_the_estimate() {
    for scheme in [InScheme::Flexible { mu: 0.8 }, InScheme::Fixed { r_c: 52.7 }] {
        let cfg = NetworkConfig { scheme, ..NetworkConfig::default() };
        let base = MonteCarloConfig::for_network(&cfg, 1000, 100, 11);
        let wide = MonteCarloConfig {
            region_radius: 1.5 * base.region_radius,
            guard_radius: 1.5 * base.guard_radius,
            ..base.clone()
        };
        let tau = db_to_linear(0.0);
        let a = empirical_summaries(&run_campaign(&cfg, &base, tau, Execution::Parallel).unwrap().samples, &[]).unwrap();
        let b = empirical_summaries(&run_campaign(&cfg, &wide, tau, Execution::Parallel).unwrap().samples, &[]).unwrap();
        let spread = (a.ci95 * a.ci95 + b.ci95 * b.ci95).sqrt();
        assert!((a.stp - b.stp).abs() <= 0.03, "{scheme:?}: {} vs {} (±{spread})", a.stp, b.stp);
    }
}

#[test]
fn seed_and_thread_count_fix_the_samples() {
    let cfg = NetworkConfig::default();
    let mc = MonteCarloConfig::for_network(&cfg, 60, 40, 5);
    let taus = [db_to_linear(-3.0), db_to_linear(8.0)];
    let one = with_threads(Some(1), || run_campaign_multi(&cfg, &mc, &taus, Execution::Parallel).unwrap());
    let three = with_threads(Some(3), || run_campaign_multi(&cfg, &mc, &taus, Execution::Parallel).unwrap());
    let seq = run_campaign_multi(&cfg, &mc, &taus, Execution::Sequential).unwrap();
    assert_eq!(one, three);
    assert_eq!(one, seq);
    let other = run_campaign_multi(&cfg, &MonteCarloConfig { seed: 6, ..mc }, &taus, Execution::Sequential).unwrap();
    assert_ne!(one.sets[0].samples, other.sets[0].samples);
}

#[test]
fn samples_are_probabilities_and_monotone_in_threshold() {
    let cfg = NetworkConfig::default();
    let mc = MonteCarloConfig::for_network(&cfg, 80, 50, 9);
    let taus: Vec<f64> = [-10.0, 0.0, 10.0, 20.0].iter().map(|d| db_to_linear(*d)).collect();
    let report = run_campaign_multi(&cfg, &mc, &taus, Execution::Parallel).unwrap();
    for i in 0..mc.n_topologies {
        let column: Vec<f64> = report.sets.iter().map(|s| s.samples[i]).collect();
        assert!(column.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(column.windows(2).all(|w| w[1] <= w[0]), "topology {i}: {column:?}");
    }
    assert_eq!(report.resamples, 0);
    assert_eq!(report.serving_theta_hist.iter().sum::<u64>(), mc.n_topologies as u64);
}
