//! Per-cell DOF layouts, projectors, stabilizations and local matrices.
//!
//! Cell-local numbering: vertices and edges in ascending global order, faces
//! in the order listed by the cell. `V` dofs are `3·v + c` (curl component)
//! then `3 N_v + e`; `W` dofs are `3·v + c` then `3 N_v + f`. Cell vector
//! polynomials in `P₁³` use coordinates `4·c + α` with `α` indexing
//! `(1, ξ, η, ζ)`, `ξ = (x − b_K)/h_K`.

pub mod dofs;
pub mod face;

use nalgebra::{DMatrix, DVector, Matrix4, Vector3};

use crate::error::{Result, VemError};
use crate::mesh::{Mesh, Point};
use crate::poly::{cell_rule, decomposition, CellBasis};

pub use dofs::{DofLayout, Space};
pub use face::FaceContext;

/// Exactness used for projector and Gram integrals.
pub const PROJECTOR_DEGREE: usize = 4;

/// Default exactness for DOF evaluation, loads and smooth-field integrals.
pub const DEFAULT_LOAD_DEGREE: usize = 10;

/// Weight of the tangential edge-trace term of the `b_h` stabilization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdgeTraceWeight {
    /// `h_f`: scales one power of `h` above the rest of the form.
    Diameter,
    /// `h_f²`: same scaling as the `L²` part.
    #[default]
    DiameterSquared,
}

impl EdgeTraceWeight {
    fn factor(self, hf: f64) -> f64 {
        match self {
            Self::Diameter => hf,
            Self::DiameterSquared => hf * hf,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ElementOptions {
    pub edge_trace: EdgeTraceWeight,
}

/// Projector matrices of one cell.
#[derive(Clone, Debug)]
pub struct ProjectorPack {
    /// Face `Π∇₁` (scalar, loop vertex values → `(1, m₁, m₂)`), per cell face.
    pub face_grad: Vec<DMatrix<f64>>,
    /// Face `Π⁰₁` of `W` functions (9 × dim W), per cell face.
    pub face_w: Vec<DMatrix<f64>>,
    /// Face tangential `Π⁰₁` of `V` functions (6 × dim V), per cell face.
    pub face_v: Vec<DMatrix<f64>>,
    /// Cell `Π∇₁` on `W` (12 × dim W).
    pub grad_w: DMatrix<f64>,
    /// Cell `Π⁰₁` on `W` (12 × dim W).
    pub l2_w: DMatrix<f64>,
    /// Cell `Π⁰₀` on `V` (3 × dim V).
    pub l2_v: DMatrix<f64>,
}

/// All local matrices of one cell.
#[derive(Clone, Debug)]
pub struct LocalElement {
    pub cell: usize,
    pub nv: usize,
    pub ne: usize,
    pub nf: usize,
    pub basis: CellBasis,
    pub volume: f64,
    /// `∫_K m_α m_β`, linear monomials.
    pub mass: Matrix4<f64>,
    pub faces: Vec<FaceContext>,
    pub proj: ProjectorPack,
    /// Discrete curl, `W × V`.
    pub e: DMatrix<f64>,
    /// Discrete gradient, `V × U`.
    pub g: DMatrix<f64>,
    /// Discrete divergence, `1 × W`.
    pub d: DMatrix<f64>,
    /// Polynomial `P₁³` → `W` dofs.
    pub dof_of_poly_w: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub a_w: DMatrix<f64>,
    pub b_v: DMatrix<f64>,
}

impl LocalElement {
    pub fn dim_u(&self) -> usize {
        self.nv
    }
    pub fn dim_v(&self) -> usize {
        3 * self.nv + self.ne
    }
    pub fn dim_w(&self) -> usize {
        3 * self.nv + self.nf
    }

    /// `a_h` on `V` dofs: `Eᵀ A_W E`.
    pub fn a_v(&self) -> DMatrix<f64> {
        self.e.transpose() * &self.a_w * &self.e
    }

    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        Self::with_options(mesh, k, &ElementOptions::default())
    }

    pub fn with_options(mesh: &Mesh, k: usize, opts: &ElementOptions) -> Result<Self> {
        let cell = mesh.cell(k);
        let nv = cell.vertices.len();
        let ne = cell.edges.len();
        let nf = cell.faces.len();
        let dim_w = 3 * nv + nf;
        let dim_v = 3 * nv + ne;
        let hk = cell.diameter;
        let volume = cell.volume;
        let basis = CellBasis::new(cell.barycenter, hk, 1);
        let quad = cell_rule(mesh, k, PROJECTOR_DEGREE);
        let mut mass = Matrix4::zeros();
        for (x, w) in quad.iter() {
            let m = nalgebra::Vector4::from_vec(basis.eval(x));
            mass += w * m * m.transpose();
        }
        let mut g12 = DMatrix::zeros(12, 12);
        for c in 0..3 {
            g12.view_mut((4 * c, 4 * c), (4, 4)).copy_from(&mass);
        }

        let faces: Vec<FaceContext> = (0..nf)
            .map(|lf| FaceContext::new(mesh, k, lf))
            .collect::<Result<_>>()?;

        // structure
        let mut e = DMatrix::zeros(dim_w, dim_v);
        for i in 0..3 * nv {
            e[(i, i)] = 1.0;
        }
        for f in &faces {
            for ((&le, &s), &l) in f.loop_edges.iter().zip(&f.edge_signs).zip(&f.edge_lengths) {
                e[(3 * nv + f.local, 3 * nv + le)] += s * l;
            }
        }
        let mut g = DMatrix::zeros(dim_v, nv);
        for (le, &ge) in cell.edges.iter().enumerate() {
            let edge = mesh.edge(ge);
            let [a, b] = edge.vertices;
            g[(3 * nv + le, mesh.local_vertex(k, a))] = -1.0 / edge.length;
            g[(3 * nv + le, mesh.local_vertex(k, b))] = 1.0 / edge.length;
        }
        let mut d = DMatrix::zeros(1, dim_w);
        for f in &faces {
            d[(0, 3 * nv + f.local)] = f.sign;
        }

        // face projectors
        let face_w: Vec<DMatrix<f64>> = faces.iter().map(|f| f.w_l2_projector(nv, dim_w)).collect();
        let face_v: Vec<DMatrix<f64>> = faces
            .iter()
            .map(|f| f.v_tangential_projector(nv, dim_v))
            .collect::<Result<_>>()?;

        // ∫_f w, 3 × dim W
        let face_integrals: Vec<DMatrix<f64>> = faces
            .iter()
            .zip(&face_w)
            .map(|(f, q)| {
                let mut r = DMatrix::zeros(3, dim_w);
                for c in 0..3 {
                    r.row_mut(c).copy_from(&(f.area * q.row(3 * c)));
                }
                r
            })
            .collect();

        // cell Π∇₁ on W
        let mut grad_w = DMatrix::zeros(12, dim_w);
        let mut boundary_area = 0.0;
        let mut lin_moment = Vector3::zeros();
        for f in &faces {
            boundary_area += f.area;
            lin_moment += f.area * (f.barycenter - cell.barycenter) / hk;
        }
        for c in 0..3 {
            for b in 0..3 {
                let mut row = DMatrix::zeros(1, dim_w);
                for (f, fi) in faces.iter().zip(&face_integrals) {
                    row += (hk / volume * f.sign * f.normal[b]) * fi.row(c);
                }
                grad_w.row_mut(4 * c + 1 + b).copy_from(&row);
            }
            let mut row = DMatrix::zeros(1, dim_w);
            for fi in &face_integrals {
                row += fi.row(c);
            }
            for b in 0..3 {
                row -= lin_moment[b] * grad_w.row(4 * c + 1 + b);
            }
            grad_w.row_mut(4 * c).copy_from(&(row / boundary_area));
        }

        // P₁³ → W dofs
        let mut dof_of_poly_w = DMatrix::zeros(dim_w, 12);
        for (lv, &gv) in cell.vertices.iter().enumerate() {
            let m = basis.eval(mesh.vertex(gv));
            for c in 0..3 {
                for a in 0..4 {
                    dof_of_poly_w[(3 * lv + c, 4 * c + a)] = m[a];
                }
            }
        }
        for f in &faces {
            let m = basis.eval(&f.barycenter);
            for c in 0..3 {
                for a in 0..4 {
                    dof_of_poly_w[(3 * nv + f.local, 4 * c + a)] = f.area * f.normal[c] * m[a];
                }
            }
        }

        // cell Π⁰₁ on W from P₁³ = ∇P₂ ⊕ x_K × P₀
        let grads = decomposition::cell_gradients(&basis);
        let crosses = decomposition::cell_cross_x(&basis);
        let mut t = DMatrix::zeros(12, 12);
        t.columns_mut(0, 9).copy_from(&grads);
        t.columns_mut(9, 3).copy_from(&crosses);
        let lhs = t.transpose() * &g12;
        let quad_basis = CellBasis::new(cell.barycenter, hk, 2);
        let mono_means: Vec<f64> = {
            let mut s = vec![0.0; quad_basis.len()];
            for (x, w) in quad.iter() {
                for (acc, v) in s.iter_mut().zip(quad_basis.eval(x)) {
                    *acc += w * v;
                }
            }
            s
        };
        let div_row = &d / volume;
        let mut rhs = DMatrix::zeros(12, dim_w);
        for (gamma, &mean) in mono_means.iter().enumerate().take(quad_basis.len()).skip(1) {
            let mut row = -mean * &div_row;
            for f in &faces {
                let q = |x: &Point| quad_basis.eval(x)[gamma];
                row += f.sign * f.normal_moment_row(q, nv, dim_w);
            }
            rhs.row_mut(gamma - 1).copy_from(&row);
        }
        let super_rows = crosses.transpose() * &g12 * &grad_w;
        rhs.rows_mut(9, 3).copy_from(&super_rows);
        let l2_w = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| VemError::degenerate(format!("cell {k}"), "singular cell L2 projector system"))?;

        // cell Π⁰₀ on V: φ_i = −(x − b_K) × e_i / 2 = −(h_K/2) ξ × e_i
        let ew = &grad_w * &e; // Π∇₁(∇×v), 12 × dim V
        let mut l2_v = DMatrix::zeros(3, dim_v);
        for i in 0..3 {
            let phi = -(hk / 2.0) * crosses.column(i);
            let mut row = phi.transpose() * &g12 * &ew;
            for (f, fv) in faces.iter().zip(&face_v) {
                // ∫_f (n_f × φ)·a_b m_α
                let mut gvec = DMatrix::zeros(1, 6);
                for (x, (s, &w)) in f.quad_points.iter().zip(f.quad_local.iter().zip(&f.quad_weights)) {
                    let mc = basis.eval(x);
                    let phix = Vector3::from_fn(|c, _| (0..4).map(|a| phi[4 * c + a] * mc[a]).sum());
                    let nphi = f.normal.cross(&phix);
                    let mf = f.basis.eval(s);
                    for b in 0..2 {
                        let tb = nphi.dot(&f.frame[b]);
                        for a in 0..3 {
                            gvec[(0, 3 * b + a)] += w * tb * mf[a];
                        }
                    }
                }
                row += f.sign * gvec * fv;
            }
            l2_v.row_mut(i).copy_from(&(row / volume));
        }

        let proj = ProjectorPack {
            face_grad: faces.iter().map(|f| f.grad_projector.clone()).collect(),
            face_w,
            face_v,
            grad_w,
            l2_w,
            l2_v,
        };

        // S₁ on W dofs
        let mut s1 = d.transpose() * &d / volume;
        for (f, q) in faces.iter().zip(&proj.face_w) {
            let mut m9 = DMatrix::zeros(9, 9);
            for c in 0..3 {
                m9.view_mut((3 * c, 3 * c), (3, 3)).copy_from(&f.mass);
            }
            s1 += q.transpose() * m9 * q / f.diameter;
            f.add_edge_trace_mass(&mut s1, 1.0);
        }
        let mut hmat = DMatrix::zeros(12, 12);
        for c in 0..3 {
            for a in 1..4 {
                hmat[(4 * c + a, 4 * c + a)] = volume / (hk * hk);
            }
        }
        let kernel_w = DMatrix::identity(dim_w, dim_w) - &dof_of_poly_w * &proj.grad_w;
        let a_w = proj.grad_w.transpose() * hmat * &proj.grad_w + kernel_w.transpose() * &s1 * &kernel_w;

        // S₂ on V dofs
        let l2e = &proj.l2_w * &e;
        let mut s2 = hk * hk * l2e.transpose() * &g12 * &l2e;
        for (f, q) in faces.iter().zip(&proj.face_w) {
            let mut m9 = DMatrix::zeros(9, 9);
            for c in 0..3 {
                m9.view_mut((3 * c, 3 * c), (3, 3)).copy_from(&f.mass);
            }
            let qe = q * &e;
            s2 += f.diameter.powi(3) * qe.transpose() * m9 * qe;
            f.add_edge_trace_mass(&mut s2, f.diameter.powi(4));
            for (&le, &l) in f.loop_edges.iter().zip(&f.edge_lengths) {
                s2[(3 * nv + le, 3 * nv + le)] += opts.edge_trace.factor(f.diameter) * l;
            }
        }
        let mut const_v = DMatrix::zeros(dim_v, 3);
        for (le, &ge) in cell.edges.iter().enumerate() {
            let t = mesh.edge(ge).tangent;
            for c in 0..3 {
                const_v[(3 * nv + le, c)] = t[c];
            }
        }
        let kernel_v = DMatrix::identity(dim_v, dim_v) - &const_v * &proj.l2_v;
        let b_v = volume * proj.l2_v.transpose() * &proj.l2_v + kernel_v.transpose() * &s2 * &kernel_v;

        Ok(LocalElement {
            cell: k,
            nv,
            ne,
            nf,
            basis,
            volume,
            mass,
            faces,
            proj,
            e,
            g,
            d,
            dof_of_poly_w,
            s1,
            s2,
            a_w: symmetrize(a_w),
            b_v: symmetrize(b_v),
        })
    }

    /// `b[4c + α] = ∫_K f_c m_α`.
    pub fn load_moments(&self, mesh: &Mesh, f: &impl Fn(&Point) -> Vector3<f64>, deg: usize) -> DVector<f64> {
        let mut b = DVector::zeros(12);
        for (x, w) in cell_rule(mesh, self.cell, deg).iter() {
            let fx = f(x);
            let m = self.basis.eval(x);
            for c in 0..3 {
                for a in 0..4 {
                    b[4 * c + a] += w * fx[c] * m[a];
                }
            }
        }
        b
    }

    /// Load functional on `W` dofs: `(Π⁰₁ f, Π⁰₁ φ_j)_K`.
    pub fn load_w(&self, mesh: &Mesh, f: &impl Fn(&Point) -> Vector3<f64>, deg: usize) -> DVector<f64> {
        self.proj.l2_w.transpose() * self.load_moments(mesh, f, deg)
    }

    /// Evaluates a `P₁³` coefficient vector at `x`.
    pub fn eval_p1(&self, coeffs: &[f64], x: &Point) -> Vector3<f64> {
        let m = self.basis.eval(x);
        Vector3::from_fn(|c, _| (0..4).map(|a| coeffs[4 * c + a] * m[a]).sum())
    }

    /// Global indices of the local `V` dofs.
    pub fn global_v(&self, mesh: &Mesh) -> Vec<usize> {
        let cell = mesh.cell(self.cell);
        let nvg = mesh.num_vertices();
        let mut out = Vec::with_capacity(self.dim_v());
        for &v in &cell.vertices {
            out.extend((0..3).map(|c| 3 * v + c));
        }
        out.extend(cell.edges.iter().map(|&e| 3 * nvg + e));
        out
    }

    /// Global indices of the local `W` dofs.
    pub fn global_w(&self, mesh: &Mesh) -> Vec<usize> {
        let cell = mesh.cell(self.cell);
        let nvg = mesh.num_vertices();
        let mut out = Vec::with_capacity(self.dim_w());
        for &v in &cell.vertices {
            out.extend((0..3).map(|c| 3 * v + c));
        }
        out.extend(cell.faces.iter().map(|&f| 3 * nvg + f));
        out
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests;
