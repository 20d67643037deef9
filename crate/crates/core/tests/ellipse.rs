use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use restool_core::ellipse::{bearing_deg, ellipse_trajectory, sd_ellipse, weighted_center};
use restool_core::index::ScoreSeries;
use restool_core::ingest::{Geometry, Point};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Axis-angle difference folded into [0, 90].
fn axis_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn random_config(rng: &mut ChaCha8Rng) -> (Vec<Point>, Vec<f64>) {
    let n = rng.random_range(3..25);
    let stretch = rng.random_range(1.2..5.0);
    let points = (0..n)
        .map(|_| Point::new(rng.random_range(-500.0..500.0) * stretch, rng.random_range(-500.0..500.0)))
        .collect();
    let weights = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
    (points, weights)
}

/// Weighted covariance eigen-decomposition: (λ_max, λ_min, bearing of the
/// major axis in [0, 180)).
fn eigen_oracle(points: &[Point], weights: &[f64]) -> (f64, f64, f64) {
    let total: f64 = weights.iter().sum();
    let cx = points.iter().zip(weights).map(|(p, w)| p.x * w).sum::<f64>() / total;
    let cy = points.iter().zip(weights).map(|(p, w)| p.y * w).sum::<f64>() / total;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (p, w) in points.iter().zip(weights) {
        a += w * (p.x - cx).powi(2);
        b += w * (p.x - cx) * (p.y - cy);
        c += w * (p.y - cy).powi(2);
    }
    let (a, b, c) = (a / total, b / total, c / total);
    let mid = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let (l1, l2) = (mid + rad, mid - rad);
    // Eigenvector of l1: (b, l1 − a) or (l1 − c, b).
    let (vx, vy) = if b.abs() > 0.0 { (b, l1 - a) } else if a >= c { (1.0, 0.0) } else { (0.0, 1.0) };
    let bearing = vx.atan2(vy).to_degrees().rem_euclid(180.0);
    (l1, l2.max(0.0), bearing)
}

#[test]
fn unit_cross_fixture() {
    let pts = [Point::new(1.0, 0.0), Point::new(-1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, -1.0)];
    let e = sd_ellipse(&pts, &[1.0; 4]).unwrap();
    assert!((e.semi_major_km - 0.5f64.sqrt()).abs() <= 1e-12);
    assert!((e.semi_minor_km - 0.5f64.sqrt()).abs() <= 1e-12);
    assert!((e.area_km2 - PI / 2.0).abs() <= 1e-12);
    assert!(e.isotropic);
}

#[test]
fn center_examples() {
    let c = weighted_center(&[Point::new(0.0, 0.0), Point::new(2.0, 0.0)], &[1.0, 1.0]).unwrap();
    assert_eq!((c.x, c.y), (1.0, 0.0));
    let c = weighted_center(&[Point::new(0.0, 0.0), Point::new(4.0, 0.0)], &[3.0, 1.0]).unwrap();
    assert_eq!((c.x, c.y), (1.0, 0.0));
    let c = weighted_center(&[Point::new(3.5, -2.0)], &[0.7]).unwrap();
    assert_eq!((c.x, c.y), (3.5, -2.0));
    assert!(weighted_center(&[Point::new(0.0, 0.0)], &[0.0]).is_err());
}

#[test]
fn collinear_is_flagged() {
    let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 0.0)).collect();
    let e = sd_ellipse(&pts, &[1.0; 5]).unwrap();
    assert!(e.degenerate);
    assert_eq!(e.semi_minor_km, 0.0);
    assert!((e.azimuth_deg - 90.0).abs() < 1e-9);
}

#[test]
fn random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let (pts, w) = random_config(&mut rng);
        let e = sd_ellipse(&pts, &w).unwrap();
        assert!(!e.isotropic && !e.degenerate);

        // Independent oracle: long axis is the top eigenvector.
        let (l1, l2, bearing) = eigen_oracle(&pts, &w);
        assert!(rel_close(e.semi_major_km, l1.sqrt(), 1e-9));
        assert!(rel_close(e.semi_minor_km, l2.sqrt(), 1e-9));
        assert!(axis_gap(e.azimuth_deg, bearing) < 1e-7);
        assert!(e.semi_major_km >= e.semi_minor_km);
        assert!((0.0..180.0).contains(&e.azimuth_deg));
        assert_eq!(e.area_km2, PI * e.semi_major_km * e.semi_minor_km);

        // Translation.
        let (dx, dy) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let moved: Vec<Point> = pts.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect();
        let t = sd_ellipse(&moved, &w).unwrap();
        assert!(rel_close(t.semi_major_km, e.semi_major_km, 1e-9));
        assert!(rel_close(t.semi_minor_km, e.semi_minor_km, 1e-9));
        assert!(rel_close(t.area_km2, e.area_km2, 1e-9));
        assert!(axis_gap(t.azimuth_deg, e.azimuth_deg) < 1e-7);
        assert!((t.center.x - e.center.x - dx).abs() <= 1e-9 * (1.0 + dx.abs() + e.center.x.abs()));
        assert!((t.center.y - e.center.y - dy).abs() <= 1e-9 * (1.0 + dy.abs() + e.center.y.abs()));

        // Clockwise rotation by φ turns bearings by +φ.
        let phi: f64 = rng.random_range(0.0..360.0);
        let (s, c) = phi.to_radians().sin_cos();
        let rotated: Vec<Point> = pts.iter().map(|p| Point::new(p.x * c + p.y * s, -p.x * s + p.y * c)).collect();
        let r = sd_ellipse(&rotated, &w).unwrap();
        assert!(rel_close(r.semi_major_km, e.semi_major_km, 1e-9));
        assert!(rel_close(r.semi_minor_km, e.semi_minor_km, 1e-9));
        assert!(rel_close(r.area_km2, e.area_km2, 1e-9));
        assert!(axis_gap(r.azimuth_deg, e.azimuth_deg + phi) < 1e-7);

        // Weight scaling.
        let k = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
        let sc = sd_ellipse(&pts, &scaled).unwrap();
        assert!(rel_close(sc.semi_major_km, e.semi_major_km, 1e-9));
        assert!(rel_close(sc.semi_minor_km, e.semi_minor_km, 1e-9));
        assert!(axis_gap(sc.azimuth_deg, e.azimuth_deg) < 1e-7);
    }
}

#[test]
fn equal_weight_trace_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (pts, _) = random_config(&mut rng);
        let w = vec![1.0; pts.len()];
        let e = sd_ellipse(&pts, &w).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.x).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.y).sum::<f64>() / n;
        let var = pts.iter().map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2)).sum::<f64>() / n;
        assert!(rel_close(e.semi_major_km.powi(2) + e.semi_minor_km.powi(2), var, 1e-9));
    }
}

fn grid_geometry() -> (Geometry, Vec<String>) {
    let mut pts = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            pts.push((format!("g{i}{j}"), Point::new(i as f64 * 100.0, j as f64 * 100.0)));
        }
    }
    let names = pts.iter().map(|p| p.0.clone()).collect();
    (Geometry::from_projected(pts).unwrap(), names)
}

#[test]
fn southwest_drift() {
    let (geo, regions) = grid_geometry();
    // Year one: uniform. Year two: extra mass in the south-west quadrant.
    let mut scores = Vec::new();
    let mut hand = (0.0, 0.0, 0.0);
    for r in &regions {
        let p = geo.point(r).unwrap();
        let second = if p.x < 150.0 && p.y < 150.0 { 3.0 } else { 1.0 };
        scores.extend([1.0, second]);
        hand = (hand.0 + second * p.x, hand.1 + second * p.y, hand.2 + second);
    }
    let series = ScoreSeries::new(regions, vec![2004, 2005], scores).unwrap();
    let tr = ellipse_trajectory(&series, &geo, &[2004, 2005]).unwrap();
    let c = tr.ellipses[1].center;
    assert!((c.x - hand.0 / hand.2).abs() < 1e-9 && (c.y - hand.1 / hand.2).abs() < 1e-9);
    let b = tr.shifts[0].bearing_deg.unwrap();
    assert!(b > 180.0 && b < 270.0, "bearing {b}");
    assert_eq!(tr.shifts[0].direction, Some("SW"));
}

#[test]
fn static_and_doubled_weights() {
    let (geo, regions) = grid_geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut scores = Vec::new();
    for _ in &regions {
        let v: f64 = rng.random_range(0.1..2.0);
        scores.extend([v, v, 2.0 * v]);
    }
    let series = ScoreSeries::new(regions, vec![2004, 2005, 2006], scores).unwrap();
    let tr = ellipse_trajectory(&series, &geo, &[2004, 2005, 2006]).unwrap();
    assert_eq!(tr.shifts[0].distance_km, 0.0);
    assert_eq!(tr.shifts[0].bearing_deg, None);
    let (a, b) = (&tr.ellipses[1], &tr.ellipses[2]);
    assert!(rel_close(a.semi_major_km, b.semi_major_km, 1e-12));
    assert!(rel_close(a.semi_minor_km, b.semi_minor_km, 1e-12));
    assert!(axis_gap(a.azimuth_deg, b.azimuth_deg) < 1e-9);
    assert!(tr.shifts[1].distance_km < 1e-9);
}

#[test]
fn bearings() {
    let o = Point::new(0.0, 0.0);
    assert_eq!(bearing_deg(o, Point::new(0.0, 1.0)), Some(0.0));
    assert_eq!(bearing_deg(o, Point::new(1.0, 0.0)), Some(90.0));
    assert_eq!(bearing_deg(o, Point::new(-1.0, -1.0)), Some(225.0));
}
