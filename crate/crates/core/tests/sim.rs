use mpdoa::sim::{
    default_intervals, draw_scenario, generate_raw, generate_snapshots, read_snapshots, write_snapshots,
    Interval, Scenario,
};

#[test]
fn default_protocol_draws_one_angle_per_interval() {
    let intervals = default_intervals();
    for seed in 0..20 {
        let sc = draw_scenario(&intervals, 10, seed).unwrap();
        assert_eq!(sc.source_count(), 3);
        for (th, iv) in sc.thetas.iter().zip(&intervals) {
            assert!(iv.contains_deg(th.to_degrees()));
        }
    }
}

#[test]
fn overlapping_intervals_are_rejected() {
    let bad = [Interval::new(0.0, 10.0), Interval::new(5.0, 20.0)];
    assert!(draw_scenario(&bad, 1, 0).is_err());
}

#[test]
fn columns_keep_their_norm() {
    let sc = draw_scenario(&default_intervals(), 4, 9).unwrap();
    let raw = generate_raw(&sc, 64, 5.0, 9).unwrap();
    let set = generate_snapshots(&sc, 64, 5.0, 9).unwrap();
    for t in 0..4 {
        let a: f64 = raw[t * 64..(t + 1) * 64].iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = set.column(t).iter().map(|z| z.norm_sqr()).sum();
        assert!((a - b).abs() <= 1e-10 * a);
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let sc = Scenario::new(vec![0.3, -0.7], 5).unwrap();
    let a = generate_snapshots(&sc, 32, 3.0, 42).unwrap();
    let b = generate_snapshots(&sc, 32, 3.0, 42).unwrap();
    assert_eq!(a.y, b.y);
    let c = generate_snapshots(&sc, 32, 3.0, 43).unwrap();
    assert_ne!(a.y, c.y);
}

#[test]
fn container_round_trip() {
    let sc = draw_scenario(&default_intervals(), 3, 1).unwrap();
    let set = generate_snapshots(&sc, 16, 0.0, 1).unwrap();
    let mut buf = Vec::new();
    write_snapshots(&set, &mut buf).unwrap();
    let back = read_snapshots(buf.as_slice()).unwrap();
    assert_eq!(back.y, set.y);
    assert_eq!((back.m, back.t), (16, 3));
}
