//! Structural checks: exactness of the discrete complex, commutativity of
//! the interpolants with the curl, and divergence of the computed velocity.

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;
use sprs::CsMat;

use crate::assembly::{max_abs, number_dofs, restrict, structure_matrices};
use crate::linsolve::spmv;
use crate::local::dofs::{interpolate_v, interpolate_w};
use crate::mesh::{Mesh, Point};

/// Relative tolerance of the exactness products.
pub const EXACTNESS_TOL: f64 = 1e-13;
/// Absolute tolerance of the commutativity check.
pub const COMMUTATIVITY_TOL: f64 = 1e-10;
/// Largest column count for which the dense rank is computed.
pub const MAX_DENSE_RANK: usize = 4000;

/// A smooth field and its curl.
pub type FieldPair<'a> = (&'a dyn Fn(&Point) -> Vector3<f64>, &'a dyn Fn(&Point) -> Vector3<f64>);

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.checks.push(Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        });
    }

    fn push_eq(&mut self, name: impl Into<String>, got: usize, want: usize) {
        self.checks.push(Check {
            name: name.into(),
            value: got as f64,
            threshold: want as f64,
            passed: got == want,
        });
    }

    pub fn to_text(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<40} {:>12.4e} (limit {:.4e})\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                )
            })
            .collect()
    }
}

fn to_dense(m: &CsMat<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.rows(), m.cols());
    for (&v, (i, j)) in m.iter() {
        d[(i, j)] += v;
    }
    d
}

/// Numerical rank from singular values above `1e-10 · σ_max`.
pub fn numerical_rank(m: &CsMat<f64>) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let sv = to_dense(m).singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Kernel dimension of `m`, or `None` when too large for a dense rank.
pub fn kernel_dim(m: &CsMat<f64>) -> Option<usize> {
    (m.cols() <= MAX_DENSE_RANK).then(|| m.cols() - numerical_rank(m))
}

/// `max |E I_V v − I_W (∇×v)|` over all dofs.
pub fn commutativity_defect(
    mesh: &Mesh,
    v: impl Fn(&Point) -> Vector3<f64>,
    curl: impl Fn(&Point) -> Vector3<f64> + Copy,
    deg: usize,
) -> f64 {
    let s = structure_matrices(mesh);
    let iv = interpolate_v(mesh, v, curl, deg);
    let lhs = spmv(&s.e, &iv);
    let rhs = interpolate_w(mesh, curl, deg);
    lhs.iter().zip(&rhs).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// `max |D E ψ|` relative to `max|D| · max|E| · max|ψ|`, on free dofs.
pub fn divergence_defect(d: &CsMat<f64>, e: &CsMat<f64>, psi: &[f64]) -> f64 {
    let div = spmv(d, &spmv(e, psi));
    let scale = max_abs(d) * max_abs(e) * psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// Checks of the complex on `mesh`; `psi_h` (free `V` dofs) adds the
/// divergence check; `smooth` adds the commutativity check for that field.
pub fn verify_structure(
    mesh: &Mesh,
    smooth: Option<FieldPair<'_>>,
    psi_h: Option<&[f64]>,
    deg: usize,
) -> VerifyReport {
    let mut rep = VerifyReport::default();
    let full = structure_matrices(mesh);
    let num = number_dofs(mesh);
    let e = restrict(&full.e, Some(&num.w), Some(&num.v));
    let d = restrict(&full.d, None, Some(&num.w));

    let rel = |prod: &CsMat<f64>, a: &CsMat<f64>, b: &CsMat<f64>| {
        let s = max_abs(a) * max_abs(b);
        if s == 0.0 {
            0.0
        } else {
            max_abs(prod) / s
        }
    };
    rep.push("max|E·G| / scale", rel(&(&full.e * &full.g), &full.e, &full.g), EXACTNESS_TOL);
    rep.push("max|D·E| / scale", rel(&(&full.d * &full.e), &full.d, &full.e), EXACTNESS_TOL);
    if let Some(k) = kernel_dim(&e) {
        rep.push_eq("dim ker E (free) = free U dofs", k, num.u.num_free());
    }
    if let Some(k) = kernel_dim(&full.e) {
        // connected domain: only constants are lost by G
        rep.push_eq("dim ker E (full) = N_V - 1", k, mesh.num_vertices() - 1);
    }
    if let Some((v, curl)) = smooth {
        let defect = commutativity_defect(mesh, v, |x| curl(x), deg);
        rep.push("commutativity max dof defect", defect, COMMUTATIVITY_TOL);
    }
    if let Some(psi) = psi_h {
        rep.push("max|D·E·psi_h| / scale", divergence_defect(&d, &e, psi), EXACTNESS_TOL);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::manufactured;

    #[test]
    fn cube_complex_is_exact() {
        for n in [2, 3] {
            let rep = verify_structure(&Mesh::cube(n), None, None, 10);
            assert!(rep.passed(), "{}", rep.to_text());
            assert_eq!(rep.checks.len(), 4);
        }
    }

    #[test]
    fn commutativity_trivial_fields() {
        let m = Mesh::cube(2);
        let c = Vector3::new(1.0, -2.0, 0.5);
        assert!(commutativity_defect(&m, |_| c, |_| Vector3::zeros(), 10) < 1e-14);
        // v = ∇(xyz)
        let grad = |x: &Point| Vector3::new(x.y * x.z, x.x * x.z, x.x * x.y);
        let z = |_: &Point| Vector3::zeros();
        let s = structure_matrices(&m);
        let iv = interpolate_v(&m, grad, z, 10);
        assert!(spmv(&s.e, &iv).iter().all(|v| v.abs() < 1e-14));
        assert!(commutativity_defect(&m, grad, z, 10) < 1e-14);
    }

    #[test]
    fn commutativity_manufactured() {
        let m = Mesh::cube(2);
        let d = commutativity_defect(&m, manufactured::psi, manufactured::curl_psi, 10);
        assert!(d <= COMMUTATIVITY_TOL, "{d:e}");
    }
}
