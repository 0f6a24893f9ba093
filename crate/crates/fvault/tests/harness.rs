use fvault::attack::{brute_force, correlate, false_accept};
use fvault::codec::Record;
use fvault::harness::{
    enroll_impression, enrollment_secret, run_fvc_protocol, run_fvc_sweep, run_unlocking_stats, unlocking_cost_table,
    Scheme, SchemeConfig,
};
use fvault::synth::{synthesize_dataset, SynthConfig};
use fvault_core::correlation::CorrelationAttackConfig;

fn grid_cfg() -> SchemeConfig {
    SchemeConfig {
        scheme: Scheme::Grid,
        ..SchemeConfig::default()
    }
}

#[test]
fn zero_noise_grid_accepts_genuine_and_rejects_impostors() {
    let data = synthesize_dataset(&SynthConfig::zero_noise(6, 3, 21)).unwrap();
    let r = run_fvc_protocol(&data, &grid_cfg(), 1).unwrap();
    assert_eq!((r.gar.count, r.gar.trials), (18, 18));
    assert_eq!(r.sub_gar.trials, 6);
    assert_eq!(r.far.count, 0);
    assert_eq!(r.far.trials, 15);
    assert_eq!(r.ftcr.count, 0);
    assert_eq!(r.far_interval.0, 0.0);
    assert!((r.far_interval.1 - 3.0 / 15.0).abs() < 1e-12);
}

#[test]
fn reports_do_not_depend_on_cores() {
    let cfg = SynthConfig {
        fingers: 5,
        impressions: 3,
        seed: 22,
        ..SynthConfig::default()
    };
    let data = synthesize_dataset(&cfg).unwrap();
    let scheme = SchemeConfig::default();
    let one = run_fvc_protocol(&data, &scheme, 1).unwrap().deterministic();
    let three = run_fvc_protocol(&data, &scheme, 3).unwrap().deterministic();
    assert_eq!(one, three);
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&three).unwrap()
    );
    assert!(one.timing.is_none());
    // impostor count is fixed by the finger count, whatever failed to enroll
    assert_eq!(one.far.trials, 10);
}

#[test]
fn sweeps_report_one_row_per_degree() {
    let data = synthesize_dataset(&SynthConfig::zero_noise(4, 2, 23)).unwrap();
    let r = run_fvc_sweep(&data, &SchemeConfig::default(), &[7, 9, 11], 1).unwrap();
    let ks: Vec<usize> = r.per_config_rows.iter().map(|row| row.k).collect();
    assert_eq!(ks, vec![7, 9, 11]);
    assert!(r.per_config_rows.iter().all(|row| row.gar.rate == 1.0));
}

#[test]
fn unrelated_fingers_share_few_grid_features() {
    let data = synthesize_dataset(&SynthConfig::zero_noise(6, 1, 24)).unwrap();
    let s = run_unlocking_stats(&data, &grid_cfg()).unwrap();
    assert_eq!(s.stats.len(), 15);
    assert_eq!(s.vault_size, 1452);
    for &(t, omega) in &s.stats {
        assert!(omega <= t && t <= 44);
    }
    let rows = unlocking_cost_table(&s.stats, &[7, 9], &[1, 1 << 16]).unwrap();
    assert_eq!(rows.len(), 4);
    // a randomized decoder with more iterations never lowers the attack cost
    for pair in rows.chunks(2) {
        assert!(pair[1].cost_iterations >= pair[0].cost_iterations);
    }
}

#[test]
fn identical_fingers_unlock_each_other_completely() {
    let mut data = synthesize_dataset(&SynthConfig::zero_noise(1, 1, 25)).unwrap();
    data.fingers.push(data.fingers[0].clone());
    let s = run_unlocking_stats(&data, &grid_cfg()).unwrap();
    assert_eq!(s.stats.len(), 1);
    assert_eq!(s.stats[0].0, s.stats[0].1);
}

#[test]
fn attacks_on_enrolled_records() {
    let data = synthesize_dataset(&SynthConfig::zero_noise(3, 1, 26)).unwrap();
    let cfg = SchemeConfig {
        n: 40,
        t_min: 12,
        t_max: 12,
        k: 3,
        ..SchemeConfig::default()
    };
    let secret = enrollment_secret(&cfg, 0, 0).unwrap();
    let rec = enroll_impression(&cfg, &data.fingers[0][0], &secret, 1).unwrap();

    let bf = brute_force(&rec, 9, 1 << 20, 2);
    assert!(bf.success);
    assert_eq!(bf.secret, Some(hex::encode(secret.to_bytes())));

    // the enrolled finger is among the queries: the attack gets in
    let queries: Vec<_> = data.fingers.iter().rev().map(|f| f[0].clone()).collect();
    let fa = false_accept(&cfg, &rec, &queries, 2).unwrap();
    assert!(fa.success);
    assert_eq!(fa.iterations, 3);

    // linking needs full-size records
    let big = SchemeConfig::default();
    let enroll_big = |imp: usize, seed: u64| {
        let s = enrollment_secret(&big, 0, imp).unwrap();
        enroll_impression(&big, &data.fingers[0][0], &s, seed).unwrap()
    };
    let (Record::Classic(a), Record::Classic(b)) = (enroll_big(0, 3), enroll_big(1, 4)) else {
        unreachable!()
    };
    let c = correlate(&a, &b, &CorrelationAttackConfig::default());
    assert!(c.success);
    assert_eq!(c.cross_match, Some(true));
}
