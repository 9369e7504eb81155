//! Geometry kernels checked against closed forms computed here.

use std::f64::consts::PI;

use lowregret::geometry::{
    centroid_dilated, john_ellipsoid, volume_dilated, Direction, Polytope, RadialCentroid,
};
use lowregret::RngStream;
use nalgebra::{DVector, Vector2};

/// Exact centroid of `T + rB` for the triangle `T = conv{(0,0), (1,0), (0,1)}`:
/// the triangle, one rectangle per edge and one circular sector per vertex.
fn triangle_dilation_centroid(r: f64) -> Vector2<f64> {
    let v: [Vector2<f64>; 3] = [Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
    let mut mass: f64 = 0.5;
    let mut moment = Vector2::new(1.0 / 3.0, 1.0 / 3.0) * 0.5;
    for i in 0..3 {
        let (a, b) = (v[i], v[(i + 1) % 3]);
        let e = b - a;
        let len = e.norm();
        // counter-clockwise order, so the outward normal is e rotated clockwise
        let n = Vector2::new(e.y, -e.x) / len;
        let area = len * r;
        mass += area;
        moment += ((a + b) / 2.0 + n * (r / 2.0)) * area;
    }
    for i in 0..3 {
        let p = v[i];
        let prev = v[(i + 2) % 3];
        let next = v[(i + 1) % 3];
        let n_in = {
            let e = p - prev;
            Vector2::new(e.y, -e.x).normalize()
        };
        let n_out = {
            let e = next - p;
            Vector2::new(e.y, -e.x).normalize()
        };
        let theta: f64 = n_in.dot(&n_out).clamp(-1.0, 1.0).acos();
        let bis = (n_in + n_out).normalize();
        let area = theta * r * r / 2.0;
        let dist = if theta > 0.0 { 4.0 * r * (theta / 2.0).sin() / (3.0 * theta) } else { 0.0 };
        mass += area;
        moment += (p + bis * dist) * area;
    }
    moment / mass
}

#[test]
fn exact_centroid_tends_to_steiner_point() {
    // Exterior angles pi/2, 3pi/4, 3pi/4 weight the vertices.
    let c_big = triangle_dilation_centroid(1e6);
    assert!((c_big - Vector2::new(0.375, 0.375)).norm() < 1e-5);
}

#[test]
fn radial_centroid_matches_exact_dilation_centroids() {
    let k = Polytope::corner_simplex(2, 1.0).unwrap();
    let john = john_ellipsoid(&k, 0.01).unwrap();
    let est = RadialCentroid::new(&k, &john, 4096, RngStream::new(3, 0)).unwrap();
    for r in [0.0, 0.05, 0.3, 1.0, 10.0] {
        let c = est.centroid(r).unwrap();
        let exact = triangle_dilation_centroid(r);
        for j in 0..2 {
            let err = (c.point[j] - exact[j]).abs();
            assert!(err <= 4.0 * c.std_error[j] + 1e-3, "r={r} j={j}: {} vs {} (se {})", c.point[j], exact[j], c.std_error[j]);
        }
    }
}

#[test]
fn centroid_moves_toward_steiner_point() {
    let k = Polytope::corner_simplex(2, 1.0).unwrap();
    let john = john_ellipsoid(&k, 0.01).unwrap();
    let est = RadialCentroid::new(&k, &john, 4096, RngStream::new(4, 0)).unwrap();
    let a = est.centroid(0.0).unwrap();
    let b = est.centroid(10.0).unwrap();
    let gap = b.point[0] - a.point[0];
    let se = (a.std_error[0].powi(2) + b.std_error[0].powi(2)).sqrt();
    assert!(gap > 5.0 * se, "gap {gap}, se {se}");
}

#[test]
fn hit_and_run_centroid_of_triangle() {
    let k = Polytope::corner_simplex(2, 1.0).unwrap();
    let c = centroid_dilated(&k, 0.0, 20_000, RngStream::new(5, 0)).unwrap();
    for j in 0..2 {
        assert!((c.point[j] - 1.0 / 3.0).abs() <= 4.0 * c.std_error[j] + 2e-3, "{:?}", c.point);
    }
}

#[test]
fn dilated_square_area() {
    let k = Polytope::cube(2, 0.5).unwrap();
    for r in [0.0, 0.2, 1.0] {
        let exact = 1.0 + 4.0 * r + PI * r * r;
        let v = volume_dilated(&k, r, 200_000, RngStream::new(6, 0)).unwrap();
        assert!((v.value - exact).abs() <= 4.0 * v.std_error, "r={r}: {} vs {exact}", v.value);
    }
}

#[test]
fn john_ellipsoid_of_square_is_inscribed_disk() {
    let k = Polytope::cube(2, 1.0).unwrap();
    let e = john_ellipsoid(&k, 0.01).unwrap();
    assert!(e.center().vector().norm() < 1e-3);
    for s in e.semi_axes() {
        assert!((s - 1.0).abs() < 0.02, "{s}");
    }
}

#[test]
fn john_ellipsoid_of_triangle_is_centered_and_sandwiched() {
    let k = Polytope::corner_simplex(2, 1.0).unwrap();
    let e = john_ellipsoid(&k, 0.01).unwrap();
    let c = e.center().vector();
    assert!((c - DVector::from_vec(vec![1.0 / 3.0; 2])).norm() < 1e-2, "{c}");
    // E inside K: support of E below each facet offset.
    for h in k.halfspaces() {
        assert!(e.support_min(h.normal.vector()) >= h.offset - 1e-9);
    }
    // K inside c + d (E - c): every vertex.
    let big = e.scaled(2.0 * 1.01);
    for v in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
        assert!(big.contains(&DVector::from_vec(v.to_vec()), 1e-9), "{v:?}");
    }
}

#[test]
fn width_and_projection_of_square() {
    let k = Polytope::cube(2, 1.0).unwrap();
    let diag = Direction::from_slice(&[1.0, 1.0]).unwrap();
    assert!((k.width(&diag).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    let p = k.project(&lowregret::geometry::Point::new(vec![3.0, 0.5]).unwrap(), 1e-10).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-7 && (p[1] - 0.5).abs() < 1e-7, "{p:?}");
}
