use rand::Rng;
use ris_atomic::detect::{received_field, ExhaustiveDetector, MagnitudeObservation, ProposedDetector};
use ris_atomic::modem::{make_pam, noise_sigma};
use ris_atomic::ris_opt::{adam_optimize, build_rank_one_cache, AdamConfig};
use ris_atomic::seed::rng_from_seed;
use ris_atomic::sim::{
    draw_realization, merge_records, optimize_realization, run_ber, run_convergence, BerRecord,
    DetectorBank, DetectorKind, SimConfig, StopReason,
};
use ris_atomic::{Complex64, Execution};
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

fn small_config() -> SimConfig {
    let mut cfg = SimConfig::new(8, 24, 2, 4);
    cfg.campaign.seed = 42;
    cfg.campaign.eb_n0_db = vec![-24.0, -20.0, -16.0, -12.0];
    cfg.campaign.trials_per_point = 20;
    cfg.campaign.symbols_per_channel = 50;
    cfg.campaign.batch_trials = 4;
    cfg.campaign.target_errors = 0;
    cfg
}

/// Exact bit error rate of Gray-labelled unit-energy PAM with hard decisions
/// under real Gaussian noise of standard deviation `sd`.
fn pam_ber_exact(order: usize, sd: f64) -> f64 {
    let q = order as f64;
    let norm = ((q * q - 1.0) / 3.0).sqrt();
    let levels: Vec<f64> = (0..order).map(|i| (2.0 * i as f64 - q + 1.0) / norm).collect();
    let gray = |i: usize| i ^ (i >> 1);
    let bits = order.trailing_zeros() as f64;
    let normal = Normal::new(0.0, sd).unwrap();
    let mut total = 0.0;
    for (i, &tx) in levels.iter().enumerate() {
        for j in 0..order {
            let lo = if j == 0 { f64::NEG_INFINITY } else { (levels[j - 1] + levels[j]) / 2.0 };
            let hi = if j + 1 == order { f64::INFINITY } else { (levels[j] + levels[j + 1]) / 2.0 };
            let p = normal.cdf(hi - tx) - normal.cdf(lo - tx);
            total += p * (gray(i) ^ gray(j)).count_ones() as f64;
        }
    }
    total / (q * bits)
}

#[test]
fn genie_on_scalar_channel_matches_closed_form() {
    let h = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let lo = vec![Complex64::new(1e3, 0.0)];
    for (order, eb_n0) in [(2, 4.0), (4, 8.0), (8, 12.0)] {
        let c = make_pam(order).unwrap();
        let noise = noise_sigma(eb_n0, order).unwrap();
        let bank = DetectorBank::new(&h, &lo, &c, &[DetectorKind::ZfGenie], 1 << 20).unwrap();
        let (bits, errors) = bank.simulate(noise, 200_000, &mut rng_from_seed(order as u64)).unwrap();
        let measured = errors[DetectorKind::ZfGenie as usize] as f64 / bits as f64;
        // Only the in-phase half of the complex noise survives the real slice.
        let expect = pam_ber_exact(order, (noise.sigma2 / 2.0).sqrt());
        let band = 3.0 * (expect * (1.0 - expect) / bits as f64).sqrt();
        assert!((measured - expect).abs() <= band, "Q={order}: {measured} vs {expect} ± {band}");
    }
}

#[test]
fn partitioned_campaign_merges_to_the_full_run() {
    let cfg = small_config();
    let full = run_ber(&cfg, Execution::Sequential).unwrap();
    let mut first = cfg.clone();
    first.campaign.trials_per_point = 7;
    let mut second = cfg.clone();
    second.campaign.first_trial = 7;
    second.campaign.trials_per_point = 13;
    let a = run_ber(&first, Execution::Auto).unwrap().records;
    let b = run_ber(&second, Execution::Auto).unwrap().records;
    assert_eq!(merge_records(&a, &b).unwrap(), full.records);
    assert_eq!(merge_records(&b, &a).unwrap(), full.records);
}

#[test]
fn results_do_not_depend_on_scheduling() {
    let mut cfg = small_config();
    cfg.campaign.target_errors = 150;
    let reference = run_ber(&cfg, Execution::Sequential).unwrap();
    for exec in [Execution::Auto, Execution::Parallel { threads: 3 }, Execution::Parallel { threads: 8 }] {
        assert_eq!(run_ber(&cfg, exec).unwrap(), reference);
    }
    // The lowest point reaches the error target before the trial cap.
    let low = &reference.points[0];
    assert_eq!(low.stop, StopReason::ErrorTarget);
    assert!(low.trials < 20 && low.trials.is_multiple_of(4));
    assert_eq!(reference.points.last().unwrap().stop, StopReason::TrialCap);
}

/// Pool-adjacent-violators fit of a non-increasing sequence with weights.
fn isotonic_decreasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (v2, w2, n2) = blocks[blocks.len() - 1];
            let (v1, w1, n1) = blocks[blocks.len() - 2];
            if v1 >= v2 {
                break;
            }
            blocks.pop();
            blocks.pop();
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, n1 + n2));
        }
    }
    blocks.iter().flat_map(|&(v, _, n)| std::iter::repeat_n(v, n)).collect()
}

#[test]
fn ber_curves_are_monotone_up_to_noise() {
    let mut cfg = small_config();
    cfg.campaign.eb_n0_db = vec![-28.0, -26.0, -24.0, -22.0, -20.0, -18.0, -16.0];
    let report = run_ber(&cfg, Execution::Auto).unwrap();
    for d in DetectorKind::ALL {
        let curve: Vec<&BerRecord> = report.records.iter().filter(|r| r.detector == d).collect();
        let y: Vec<f64> = curve.iter().map(|r| r.ber).collect();
        let w: Vec<f64> = curve.iter().map(|r| r.bits_sent as f64).collect();
        let fit = isotonic_decreasing(&y, &w);
        for (r, f) in curve.iter().zip(&fit) {
            assert!((r.ber - f).abs() <= r.ci_halfwidth.max(1e-12), "{d} at {}: {} vs fit {f}", r.eb_n0_db, r.ber);
        }
    }
}

#[test]
fn noiseless_limit_has_no_errors() {
    let mut cfg = small_config();
    cfg.campaign.eb_n0_db = vec![300.0];
    let report = run_ber(&cfg, Execution::Auto).unwrap();
    assert_eq!(report.records.len(), 3);
    for r in &report.records {
        assert_eq!(r.bit_errors, 0, "{}", r.detector);
        assert_eq!(r.bits_sent, 20 * 50 * 2 * 2);
    }
}

#[test]
fn exhaustive_symbol_errors_never_exceed_proposed() {
    let cfg = SimConfig::new(8, 24, 3, 4);
    let c = make_pam(4).unwrap();
    for eb_n0 in [-22.0, -18.0, -14.0] {
        let noise = noise_sigma(eb_n0, 4).unwrap();
        let (mut exh, mut prop, mut total) = (0u64, 0u64, 0u64);
        for trial in 0..20 {
            let link = optimize_realization(&cfg, draw_realization(&cfg, trial).unwrap(), trial).unwrap();
            let lo = &link.realization.lo;
            let p = ProposedDetector::new(&link.h_eq, lo, &c).unwrap();
            let e = ExhaustiveDetector::new(&link.h_eq, lo, &c, 1 << 20).unwrap();
            let mut rng = rng_from_seed(1000 * trial + 7);
            for _ in 0..200 {
                let idx: Vec<usize> = (0..3).map(|_| rng.random_range(0..4)).collect();
                let s: Vec<f64> = idx.iter().map(|&i| c.point(i)).collect();
                let y = received_field(&link.h_eq, &s, lo, noise, &mut rng).unwrap();
                let z = MagnitudeObservation::from_field(&y);
                let count = |got: &[usize]| idx.iter().zip(got).filter(|(a, b)| a != b).count() as u64;
                prop += count(&p.detect(&z).unwrap().indices);
                exh += count(&e.detect(&z).unwrap().indices);
                total += 3;
            }
        }
        let (pe, pp) = (exh as f64 / total as f64, prop as f64 / total as f64);
        let band = 3.0 * ((pe * (1.0 - pe) + pp * (1.0 - pp)) / total as f64).sqrt();
        assert!(pe <= pp + band, "{eb_n0} dB: exhaustive SER {pe} vs proposed {pp}");
    }
}

#[test]
fn adam_descends_on_random_instances() {
    let cfg = AdamConfig::default();
    let mut descended = 0;
    for seed in 0..40u64 {
        let mut rng = rng_from_seed(seed);
        let m = rng.random_range(2..12);
        let mut sc = SimConfig::new(m, rng.random_range(1..40), rng.random_range(1..=m.min(4)), 4);
        sc.campaign.seed = seed;
        let real = draw_realization(&sc, 0).unwrap();
        let cache = build_rank_one_cache(&real.referenced).unwrap();
        let (_, trace) = adam_optimize(&cache, &real.referenced.h_uv, &cfg, &mut rng).unwrap();
        if trace.final_objective < trace.objective[0] {
            descended += 1;
        }
    }
    assert!(descended >= 38, "{descended}/40");
}

#[test]
fn convergence_replays_bit_for_bit() {
    let mut cfg = SimConfig::paper_default();
    cfg.campaign.seed = 77;
    let a = run_convergence(&cfg).unwrap();
    let b = run_convergence(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.objective.len(), 100);
    cfg.campaign.seed = 78;
    assert_ne!(run_convergence(&cfg).unwrap().objective, a.objective);
}
