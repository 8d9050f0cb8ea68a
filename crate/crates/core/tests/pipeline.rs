//! End-to-end checks through the public API.

use otfs_cim::harness::{make_link, run_link_point};
use otfs_cim::{
    demap_frame, map_bits, otfs_sm_transceive, otfs_transceive, run_point, run_sweep,
    ChannelRealization, CimLink, FrameConfig, RunOptions, SweepSpec, System, ValidationPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(system: System, cfg: FrameConfig, snr: Vec<f64>, frames: u64) -> SweepSpec {
    SweepSpec {
        system,
        cfg,
        snr_db_list: snr,
        max_frames: frames,
        min_bit_errors: 0,
        seed: 77,
        policy: ValidationPolicy::default(),
    }
}

fn random_bits(len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

#[test]
fn map_then_demap_is_identity() {
    let cfg = FrameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let bits = random_bits(otfs_cim::bits_per_frame(&cfg), &mut rng);
        let frame = map_bits(&bits, &cfg).unwrap();
        assert_eq!(demap_frame(&frame.cells, &cfg).unwrap(), bits);
    }
}

#[test]
fn noiseless_transceive_for_each_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cim_cfg = FrameConfig::default();
    let link = CimLink::new(&cim_cfg).unwrap();
    let bits = random_bits(24, &mut rng);
    let real = ChannelRealization::sample(&cim_cfg, &mut rng);
    assert_eq!(
        link.transceive(&bits, &real, f64::INFINITY, &mut rng)
            .unwrap(),
        bits
    );

    let otfs_cfg = FrameConfig {
        qam_order: 64,
        ..FrameConfig::default()
    };
    let bits = random_bits(6 * 4, &mut rng);
    let real = ChannelRealization::sample(&otfs_cfg, &mut rng);
    assert_eq!(
        otfs_transceive(&bits, &otfs_cfg, &real, f64::INFINITY, &mut rng).unwrap(),
        bits
    );

    let sm_cfg = FrameConfig {
        qam_order: 16,
        tx_antennas: 4,
        ..FrameConfig::default()
    };
    let bits = random_bits(6 * 4, &mut rng);
    let reals: Vec<_> = (0..4)
        .map(|_| ChannelRealization::sample(&sm_cfg, &mut rng))
        .collect();
    let got = otfs_sm_transceive(&bits, &sm_cfg, &reals, f64::INFINITY, &mut rng).unwrap();
    assert_eq!(got, bits);
}

#[test]
fn default_config_improves_from_0_to_15_db() {
    let s = spec(
        System::OtfsCim,
        FrameConfig::default(),
        vec![0.0, 15.0],
        10_000,
    );
    let low = run_point(&s, 0.0).unwrap();
    let high = run_point(&s, 15.0).unwrap();
    assert!(low.ber > high.ber);
    assert!(high.clearly_below(&low), "{low:?} vs {high:?}");
}

#[test]
fn sweep_matches_single_points() {
    let s = spec(
        System::Otfs,
        FrameConfig {
            qam_order: 64,
            ..FrameConfig::default()
        },
        vec![4.0, 8.0],
        200,
    );
    let sweep = run_sweep(&s, RunOptions::default()).unwrap();
    assert_eq!(sweep.eta_bpcu, 24);
    for r in &sweep.records {
        assert_eq!(*r, run_point(&s, r.snr_db).unwrap());
    }
    let link = make_link(System::Otfs, &s.cfg).unwrap();
    let direct = run_link_point(link.as_ref(), 4.0, 200, 0, 77).unwrap();
    assert_eq!(direct, sweep.records[0]);
}

#[test]
fn written_outputs_echo_the_spec() {
    let s = spec(
        System::OtfsSm,
        FrameConfig {
            qam_order: 16,
            tx_antennas: 4,
            ..FrameConfig::default()
        },
        vec![10.0],
        64,
    );
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("nested/run");
    run_sweep(&s, RunOptions::default())
        .unwrap()
        .write(&prefix)
        .unwrap();

    let csv = std::fs::read_to_string(dir.path().join("nested/run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "system,snr_db,frames,bits,errors,ber,ci95,throughput_bps"
    );
    assert!(lines.next().unwrap().starts_with("otfs-sm,10.0,64,1536,"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nested/run.json")).unwrap())
            .unwrap();
    assert_eq!(json["spec"]["system"], "otfs-sm");
    assert_eq!(json["spec"]["cfg"]["n_t"], 4);
    assert_eq!(json["records"][0]["frames_run"], 64);

    let metrics = std::fs::read_to_string(dir.path().join("nested/run-metrics.csv")).unwrap();
    assert!(metrics.starts_with("system,snr_db,ber,throughput_bps,eta_bpcu\n"));
}
