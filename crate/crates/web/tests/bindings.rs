use ncris_web::{doppler_profile, efficiency_grid, sinr_curve, sinr_point};

#[test]
fn curve_rises_toward_limit() {
    let c = sinr_curve(4, 64, -20.0, 40.0, 13).unwrap();
    assert_eq!(c.len(), 14);
    let (limit, curve) = c.split_last().unwrap();
    assert!((limit - 10.0 * 3.7101f64.log10()).abs() < 1e-3);
    assert!(curve.windows(2).all(|w| w[1] > w[0]));
    assert!(curve.iter().all(|v| v < limit));
}

#[test]
fn curve_rejects_bad_range() {
    assert!(sinr_curve(4, 64, 10.0, 10.0, 5).is_err());
    assert!(sinr_curve(4, 64, 0.0, 10.0, 1).is_err());
    assert!(sinr_curve(0, 64, 0.0, 10.0, 5).is_err());
}

#[test]
fn monte_carlo_point_near_closed_form() {
    let want = sinr_curve(4, 32, 0.0, 10.0, 2).unwrap()[0];
    let got = sinr_point(4, 32, 0.0, 3).unwrap();
    assert!((got - want).abs() < 0.5, "{got} vs {want}");
    assert_eq!(got, sinr_point(4, 32, 0.0, 3).unwrap());
    assert!(sinr_point(64, 32, 0.0, 3).is_err());
}

#[test]
fn doppler_tracks_theory() {
    let p = doppler_profile(300.0, 4, 4000, 1).unwrap();
    assert_eq!(p.len(), 10);
    assert_eq!(p[0], 1.0);
    for pair in p.chunks(2) {
        assert!((pair[0] - pair[1]).abs() < 0.05, "{pair:?}");
    }
}

#[test]
fn efficiency_matches_table_corner() {
    let g = efficiency_grid(&[32, 512], &[3.0, 40.0], 0.5).unwrap();
    assert_eq!(g.len(), 4);
    assert!((g[0] - 0.9475).abs() < 0.002);
    assert_eq!(g[3], 0.0);
    assert!(efficiency_grid(&[32], &[3.0], 0.0).is_err());
}
