//! Small polyhedral fixtures with exactly planar faces.

use nalgebra::{Matrix3, Vector2};

use crate::error::Result;
use crate::mesh::{Mesh, Point};

/// Single cell obtained by truncating the cone over a convex polygon.
///
/// `base` lists the polygon counter-clockwise in the plane `z = 0`; the top
/// face is its image under the homothety of ratio `scale` about `apex`, so
/// every side face is planar.
pub fn frustum(base: &[Vector2<f64>], apex: Point, scale: f64) -> Result<Mesh> {
    let n = base.len();
    let mut vertices: Vec<Point> = base.iter().map(|p| Point::new(p.x, p.y, 0.0)).collect();
    let top: Vec<Point> = vertices.iter().map(|b| apex + scale * (b - apex)).collect();
    vertices.extend(top);
    let mut faces = vec![(0..n).rev().collect::<Vec<_>>(), (n..2 * n).collect()];
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push(vec![i, j, n + j, n + i]);
    }
    Mesh::from_polyhedra(vertices, faces, vec![(0..n + 2).collect()])
}

/// Applies `x ↦ a x + t` to every vertex.
pub fn affine(mesh: &Mesh, a: &Matrix3<f64>, t: &Point) -> Result<Mesh> {
    mesh.map_vertices(|p| a * p + t)
}

/// Two-cell mesh: the single cell of `mesh` plus its mirror image across the
/// plane of its face `face`. The shared face keeps its vertex loop.
pub fn reflected_pair(mesh: &Mesh, face: usize) -> Result<Mesh> {
    assert_eq!(mesh.num_cells(), 1, "reflected_pair expects a single cell");
    let f = mesh.face(face);
    let n = f.normal;
    let b = f.barycenter;
    let on_face = |v: usize| f.vertices.contains(&v);
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    let image: Vec<usize> = (0..nv)
        .map(|v| {
            if on_face(v) {
                v
            } else {
                let p = mesh.vertex(v);
                vertices.push(p - 2.0 * (p - b).dot(&n) * n);
                vertices.len() - 1
            }
        })
        .collect();
    let (faces, cells) = mesh.topology();
    let mut all_faces = faces.clone();
    let mut second = Vec::new();
    for (i, lp) in faces.iter().enumerate() {
        if i == face {
            second.push(i);
        } else {
            all_faces.push(lp.iter().map(|&v| image[v]).collect());
            second.push(all_faces.len() - 1);
        }
    }
    let mut all_cells = cells;
    all_cells.push(second);
    Mesh::from_polyhedra(vertices, all_faces, all_cells)
}

/// Randomized single cell from a stream of uniform `[0, 1)` samples.
///
/// `kind % 3` selects an affinely mapped cube, a quadrilateral frustum, or a
/// triangular or pentagonal frustum; all are finally mapped by a random
/// well-conditioned affine map.
pub fn random_cell(kind: usize, u: &mut impl FnMut() -> f64) -> Result<Mesh> {
    let mut r = |lo: f64, hi: f64| lo + (hi - lo) * u();
    let base = match kind % 3 {
        0 => Mesh::cube(1),
        1 => {
            let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                .map(|(x, y)| Vector2::new(x + r(-0.15, 0.15), y + r(-0.15, 0.15)));
            frustum(&pts, Point::new(r(0.3, 0.7), r(0.3, 0.7), r(1.5, 3.0)), r(0.4, 0.8))?
        }
        _ => {
            let n = if r(0.0, 1.0) < 0.5 { 3 } else { 5 };
            let pts: Vec<Vector2<f64>> = (0..n)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * (i as f64 + r(-0.2, 0.2)) / n as f64;
                    let rad = r(0.8, 1.2);
                    Vector2::new(rad * t.cos(), rad * t.sin())
                })
                .collect();
            frustum(&pts, Point::new(r(-0.2, 0.2), r(-0.2, 0.2), r(2.0, 4.0)), r(0.5, 0.85))?
        }
    };
    let scale = r(0.1, 2.0);
    let a = Matrix3::from_fn(|i, j| (if i == j { 1.0 } else { 0.0 }) + r(-0.25, 0.25)) * scale;
    let t = Point::new(r(-1.0, 1.0), r(-1.0, 1.0), r(-1.0, 1.0));
    affine(&base, &a, &t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_frustum() -> Mesh {
        let base = [
            Vector2::new(0.0, 0.0),
            Vector2::new(1.2, 0.1),
            Vector2::new(1.0, 0.9),
            Vector2::new(-0.1, 1.1),
        ];
        frustum(&base, Point::new(0.4, 0.6, 2.5), 0.6).unwrap()
    }

    #[test]
    fn frustum_volume_matches_cone_difference() {
        let m = quad_frustum();
        let base_area = m.face(0).area;
        let h = 2.5;
        let expect = base_area * h / 3.0 * (1.0 - 0.6f64.powi(3));
        assert!((m.cell(0).volume - expect).abs() < 1e-13);
        assert_eq!(m.num_faces(), 6);
        assert!((0..6).all(|f| m.face_on_boundary(f)));
    }

    #[test]
    fn reflected_pair_shares_face_with_opposite_signs() {
        let m = quad_frustum();
        let pair = reflected_pair(&m, 3).unwrap();
        assert_eq!(pair.num_cells(), 2);
        let inc = pair.face_cells(3);
        assert_eq!(inc.len(), 2);
        assert_eq!(inc[0].1, -inc[1].1);
        // sign oracle: σ n_f points away from each cell's barycenter
        for &(k, s) in inc {
            let c = pair.cell(k);
            let f = pair.face(3);
            assert!(s * f.normal.dot(&(f.barycenter - c.barycenter)) > 0.0);
        }
        assert!((pair.cell(0).volume - pair.cell(1).volume).abs() < 1e-13);
        assert!(!pair.face_on_boundary(3));
    }
}
