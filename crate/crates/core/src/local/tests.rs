use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::dofs::{eval_dofs_u, eval_dofs_v, eval_dofs_w};
use super::*;
use crate::shapes::random_cell;

fn cells(seed: u64, count: usize) -> Vec<Mesh> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| random_cell(i, &mut || rng.random::<f64>()).unwrap())
        .collect()
}

/// Linear vector field from 12 coefficients in Cartesian monomials `(1, x, y, z)`.
fn p1_field(c: &[f64]) -> impl Fn(&Point) -> Vector3<f64> + '_ {
    move |x: &Point| Vector3::from_fn(|i, _| c[4 * i] + c[4 * i + 1] * x.x + c[4 * i + 2] * x.y + c[4 * i + 3] * x.z)
}

fn grad_matrix(c: &[f64]) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::from_fn(|i, j| c[4 * i + 1 + j])
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

#[test]
fn structure_is_exact() {
    for m in cells(1, 12) {
        let el = LocalElement::new(&m, 0).unwrap();
        let eg = &el.e * &el.g;
        let de = &el.d * &el.e;
        assert!(max_abs(&eg) <= 1e-13 * max_abs(&el.e) * max_abs(&el.g));
        assert!(max_abs(&de) <= 1e-13 * max_abs(&el.e));
        // constant w: Σ σ |f| c·n_f = 0
        let c = Vector3::new(0.3, -0.7, 1.1);
        let dw = eval_dofs_w(&m, 0, |_| c, 4);
        assert!((&el.d * dw)[0].abs() < 1e-13 * m.cell(0).diameter.powi(2));
    }
}

#[test]
fn w_projectors_reproduce_linears() {
    let mut rng = StdRng::seed_from_u64(7);
    for m in cells(2, 20) {
        let el = LocalElement::new(&m, 0).unwrap();
        let c: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = p1_field(&c);
        let dofs = eval_dofs_w(&m, 0, &w, 4);
        let q = cell_rule(&m, 0, 2);
        let scale = q.iter().map(|(x, _)| w(x).norm()).fold(0.0, f64::max);
        for proj in [&el.proj.grad_w, &el.proj.l2_w] {
            let p = proj * &dofs;
            for (x, _) in q.iter() {
                assert!((el.eval_p1(p.as_slice(), x) - w(x)).norm() <= 1e-12 * scale);
            }
        }
        // idempotence through the dof map
        let p = &el.proj.l2_w * &dofs;
        let again = &el.proj.l2_w * (&el.dof_of_poly_w * &p);
        assert!((again - &p).norm() <= 1e-12 * p.norm());
    }
}

#[test]
fn w_l2_projector_satisfies_defining_identities() {
    let mut rng = StdRng::seed_from_u64(8);
    for m in cells(3, 9) {
        let el = LocalElement::new(&m, 0).unwrap();
        let dofs = DVector::from_fn(el.dim_w(), |_, _| rng.random_range(-1.0..1.0));
        let p0 = &el.proj.l2_w * &dofs;
        let pg = &el.proj.grad_w * &dofs;
        let q = cell_rule(&m, 0, 4);
        let h = m.cell(0).diameter;
        let b = m.cell(0).barycenter;
        // (Π⁰w − Π∇w, x_K × e_j) = 0
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = 1.0;
            let s = q.integrate(|x| {
                let xi = (x - b) / h;
                (el.eval_p1(p0.as_slice(), x) - el.eval_p1(pg.as_slice(), x)).dot(&xi.cross(&e))
            });
            let scale = q.integrate(|x| el.eval_p1(p0.as_slice(), x).norm());
            assert!(s.abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn v_projector_reproduces_constants_and_gradients() {
    let mut rng = StdRng::seed_from_u64(9);
    for m in cells(4, 20) {
        let el = LocalElement::new(&m, 0).unwrap();
        let c = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let dofs = eval_dofs_v(&m, 0, |_| c, |_| Vector3::zeros(), 4);
        let p = &el.proj.l2_v * &dofs;
        assert!((Vector3::new(p[0], p[1], p[2]) - c).norm() <= 1e-12 * c.norm());
        // gradient of a linear through G
        let q = eval_dofs_u(&m, 0, |x| c.dot(x) + 0.4);
        let p = &el.proj.l2_v * (&el.g * q);
        assert!((Vector3::new(p[0], p[1], p[2]) - c).norm() <= 1e-12 * c.norm());
    }
}

#[test]
fn v_projector_of_cross_field_is_cell_mean() {
    // x_K × c has zero mean on a cell whose barycenter is b_K
    let m = Mesh::cube(1);
    let el = LocalElement::new(&m, 0).unwrap();
    let b = m.cell(0).barycenter;
    let c = Vector3::new(0.2, -0.5, 0.9);
    let dofs = eval_dofs_v(&m, 0, |x| (x - b).cross(&c), |_| -2.0 * c, 6);
    let p = &el.proj.l2_v * dofs;
    assert!(p.norm() < 1e-13);

    for m in cells(5, 6) {
        let el = LocalElement::new(&m, 0).unwrap();
        let b = m.cell(0).barycenter;
        let dofs = eval_dofs_v(&m, 0, |x| (x - b).cross(&c), |_| -2.0 * c, 6);
        let p = &el.proj.l2_v * dofs;
        let mean = cell_rule(&m, 0, 2).integrate(|x| (x - b).cross(&c).norm());
        assert!(p.norm() <= 1e-12 * mean / m.cell(0).volume);
    }
}

#[test]
fn a_w_patch_test_and_kernel() {
    let mut rng = StdRng::seed_from_u64(10);
    for m in cells(6, 20) {
        let el = LocalElement::new(&m, 0).unwrap();
        let vol = m.cell(0).volume;
        let cp: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cq: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dp = eval_dofs_w(&m, 0, p1_field(&cp), 4);
        let dq = eval_dofs_w(&m, 0, p1_field(&cq), 4);
        let got = (dp.transpose() * &el.a_w * &dq)[0];
        let exact = vol * grad_matrix(&cp).component_mul(&grad_matrix(&cq)).sum();
        let scale = vol * grad_matrix(&cp).norm() * grad_matrix(&cq).norm();
        assert!(rel(got, exact, scale) <= 1e-12, "{got} vs {exact}");

        let asym = max_abs(&(&el.a_w - el.a_w.transpose()));
        assert!(asym <= 1e-13 * max_abs(&el.a_w));
        let eig = SymmetricEigen::new(el.a_w.clone()).eigenvalues;
        let top = eig.max();
        assert!(eig.min() >= -1e-12 * top);
        let kernel = eig.iter().filter(|&&l| l.abs() <= 1e-10 * top).count();
        assert_eq!(kernel, 3);
        let dc = eval_dofs_w(&m, 0, |_| Vector3::new(1.0, -2.0, 0.5), 4);
        assert!((&el.a_w * dc).norm() <= 1e-12 * top);
    }
}

#[test]
fn b_v_patch_test() {
    let mut rng = StdRng::seed_from_u64(11);
    for m in cells(12, 20) {
        let el = LocalElement::new(&m, 0).unwrap();
        let vol = m.cell(0).volume;
        let c1 = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let c2 = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let d1 = eval_dofs_v(&m, 0, |_| c1, |_| Vector3::zeros(), 4);
        let d2 = eval_dofs_v(&m, 0, |_| c2, |_| Vector3::zeros(), 4);
        let got = (d1.transpose() * &el.b_v * d2)[0];
        assert!(rel(got, vol * c1.dot(&c2), vol * c1.norm() * c2.norm()) <= 1e-12);
        let asym = max_abs(&(&el.b_v - el.b_v.transpose()));
        assert!(asym <= 1e-13 * max_abs(&el.b_v));
    }
}

#[test]
fn stabilizations_are_psd_and_vanish_on_polynomials() {
    let mut rng = StdRng::seed_from_u64(13);
    for m in cells(14, 9) {
        let el = LocalElement::new(&m, 0).unwrap();
        for s in [&el.s1, &el.s2] {
            let eig = SymmetricEigen::new(s.clone()).eigenvalues;
            assert!(eig.min() >= -1e-12 * eig.max());
        }
        let c: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dp = eval_dofs_w(&m, 0, p1_field(&c), 4);
        let kernel_w = DMatrix::identity(el.dim_w(), el.dim_w()) - &el.dof_of_poly_w * &el.proj.grad_w;
        let r = &el.s1 * (kernel_w * dp);
        assert!(r.norm() <= 1e-12 * max_abs(&el.s1));
    }
}

#[test]
fn s1_face_term_scales_linearly() {
    let face_term = |m: &Mesh| {
        let el = LocalElement::new(m, 0).unwrap();
        let f = &el.faces[2];
        let q = &el.proj.face_w[2];
        let mut m9 = DMatrix::zeros(9, 9);
        for c in 0..3 {
            m9.view_mut((3 * c, 3 * c), (3, 3)).copy_from(&f.mass);
        }
        q.transpose() * m9 * q / f.diameter
    };
    let m = cells(15, 2).pop().unwrap();
    let m2 = m.map_vertices(|p| 2.0 * p).unwrap();
    let (a, b) = (face_term(&m), face_term(&m2));
    // vertex-value blocks scale by 2; face-moment slots carry their own h² scaling
    let nv = m.cell(0).vertices.len();
    for i in 0..3 * nv {
        for j in 0..3 * nv {
            assert!((b[(i, j)] - 2.0 * a[(i, j)]).abs() <= 1e-12 * max_abs(&a));
        }
    }
}

#[test]
fn s2_on_gradients_keeps_only_tangential_terms() {
    let m = cells(16, 1).pop().unwrap();
    for (weight, power) in [(EdgeTraceWeight::Diameter, 1), (EdgeTraceWeight::DiameterSquared, 2)] {
        let el = LocalElement::with_options(&m, 0, &ElementOptions { edge_trace: weight }).unwrap();
        let dq = eval_dofs_u(&m, 0, |x| 0.3 * x.x - x.y + 2.0 * x.z);
        let v = &el.g * dq;
        let nv = el.nv;
        assert!(v.rows(0, 3 * nv).iter().all(|&x| x == 0.0));
        let mut tangential = 0.0;
        for f in &el.faces {
            for (&le, &l) in f.loop_edges.iter().zip(&f.edge_lengths) {
                tangential += f.diameter.powi(power) * l * v[3 * nv + le].powi(2);
            }
        }
        let got = (v.transpose() * &el.s2 * &v)[0];
        assert!(tangential > 0.0);
        assert!(rel(got, tangential, tangential) <= 1e-12);
    }
}

#[test]
fn s2_is_definite_on_projector_kernel() {
    for m in cells(17, 6) {
        let el = LocalElement::new(&m, 0).unwrap();
        let svd = el.proj.l2_v.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        // complement of the row space of Π⁰₀
        let full = DMatrix::identity(el.dim_v(), el.dim_v()) - vt.transpose() * &vt;
        let z = full.svd(true, false).u.unwrap().columns(0, el.dim_v() - 3).into_owned();
        let restricted = z.transpose() * &el.s2 * &z;
        let eig = SymmetricEigen::new(restricted).eigenvalues;
        assert!(eig.min() > 0.0);
    }
}

#[test]
fn local_unisolvence_witnesses() {
    for m in cells(18, 20) {
        let el = LocalElement::new(&m, 0).unwrap();
        let b = m.cell(0).barycenter;
        let mut cols = Vec::new();
        for j in 0..3 {
            let mut c = Vector3::zeros();
            c[j] = 1.0;
            cols.push(eval_dofs_v(&m, 0, |_| c, |_| Vector3::zeros(), 4));
            cols.push(eval_dofs_v(&m, 0, |x| (x - b).cross(&c), |_| -2.0 * c, 4));
        }
        let mat = DMatrix::from_columns(&cols);
        let sv = mat.singular_values();
        assert!(sv.min() > 1e-10 * sv.max());
        // discrete gradient is injective modulo constants
        let sv = el.g.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv.max()).count();
        assert_eq!(rank, el.nv - 1);
    }
}

#[test]
fn a_h_conditioning_is_scale_invariant() {
    let m = cells(19, 3).pop().unwrap();
    let ratio = |m: &Mesh| {
        let el = LocalElement::new(m, 0).unwrap();
        // face moments carry |f|; compare in mean-value units
        let d = DMatrix::from_diagonal(&DVector::from_fn(el.dim_w(), |i, _| {
            if i < 3 * el.nv { 1.0 } else { el.faces[i - 3 * el.nv].area }
        }));
        let eig = SymmetricEigen::new(&d * &el.a_w * &d).eigenvalues;
        let top = eig.max();
        let low = eig.iter().copied().filter(|&l| l > 1e-10 * top).fold(f64::INFINITY, f64::min);
        top / low
    };
    let r1 = ratio(&m);
    let r2 = ratio(&m.map_vertices(|p| 0.5 * p).unwrap());
    assert!((r1 / r2 - 1.0).abs() <= 0.05);
}

#[test]
fn load_of_linear_source_is_exact() {
    let mut rng = StdRng::seed_from_u64(20);
    let m = cells(21, 2).pop().unwrap();
    let el = LocalElement::new(&m, 0).unwrap();
    let cf: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cw: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = p1_field(&cf);
    let w = p1_field(&cw);
    let lw = el.load_w(&m, &f, 4);
    let dw = eval_dofs_w(&m, 0, &w, 4);
    let got = lw.dot(&dw);
    let exact = cell_rule(&m, 0, 2).integrate(|x| f(x).dot(&w(x)));
    assert!(rel(got, exact, exact.abs().max(1e-3)) <= 1e-12);
}
