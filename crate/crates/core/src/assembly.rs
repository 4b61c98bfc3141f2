//! Global numbering with boundary elimination, and assembly of the saddle and
//! Schur-reduced systems.
//!
//! Global `V` index: `3·vertex + c` for curl slots, `3 N_V + edge` for edge
//! means. Global `W` index: `3·vertex + c`, `3 N_V + face`. `U` is indexed by
//! vertex and `Q` by cell.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use sprs::{CsMat, TriMat};

use crate::error::{Result, VemError};
use crate::local::{ElementOptions, LocalElement};
use crate::mesh::{Mesh, Point};

/// Map from a full global index space to the free (non-eliminated) subset.
#[derive(Clone, Debug)]
pub struct FreeMap {
    pub to_free: Vec<Option<usize>>,
    pub to_full: Vec<usize>,
}

impl FreeMap {
    fn from_mask(free: impl Iterator<Item = bool>) -> Self {
        let mut to_free = Vec::new();
        let mut to_full = Vec::new();
        for (i, f) in free.enumerate() {
            if f {
                to_free.push(Some(to_full.len()));
                to_full.push(i);
            } else {
                to_free.push(None);
            }
        }
        Self { to_free, to_full }
    }

    pub fn num_free(&self) -> usize {
        self.to_full.len()
    }

    pub fn num_full(&self) -> usize {
        self.to_free.len()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.to_full.iter().map(|&i| full[i]).collect()
    }

    /// Scatters free values into a zero full vector.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_full()];
        for (&i, &v) in self.to_full.iter().zip(free) {
            out[i] = v;
        }
        out
    }
}

/// Free-dof maps of the four spaces under homogeneous boundary conditions.
#[derive(Clone, Debug)]
pub struct DofNumbering {
    pub u: FreeMap,
    pub v: FreeMap,
    pub w: FreeMap,
    pub num_cells: usize,
}

pub fn number_dofs(mesh: &Mesh) -> DofNumbering {
    let nv = mesh.num_vertices();
    let interior_v = |v: usize| !mesh.vertex_on_boundary(v);
    DofNumbering {
        u: FreeMap::from_mask((0..nv).map(interior_v)),
        v: FreeMap::from_mask(
            (0..3 * nv)
                .map(|i| interior_v(i / 3))
                .chain((0..mesh.num_edges()).map(|e| !mesh.edge_on_boundary(e))),
        ),
        w: FreeMap::from_mask(
            (0..3 * nv)
                .map(|i| interior_v(i / 3))
                .chain((0..mesh.num_faces()).map(|f| !mesh.face_on_boundary(f))),
        ),
        num_cells: mesh.num_cells(),
    }
}

/// Full-space discrete gradient, curl and divergence built from topology.
#[derive(Clone, Debug)]
pub struct Structure {
    /// `V × U`.
    pub g: CsMat<f64>,
    /// `W × V`.
    pub e: CsMat<f64>,
    /// `Q × W`.
    pub d: CsMat<f64>,
}

pub fn structure_matrices(mesh: &Mesh) -> Structure {
    let nv = mesh.num_vertices();
    let (ne, nf, nc) = (mesh.num_edges(), mesh.num_faces(), mesh.num_cells());
    let mut g = TriMat::new((3 * nv + ne, nv));
    for (e, edge) in mesh.edges().iter().enumerate() {
        g.add_triplet(3 * nv + e, edge.vertices[0], -1.0 / edge.length);
        g.add_triplet(3 * nv + e, edge.vertices[1], 1.0 / edge.length);
    }
    let mut em = TriMat::new((3 * nv + nf, 3 * nv + ne));
    for i in 0..3 * nv {
        em.add_triplet(i, i, 1.0);
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        for (&e, &s) in face.edges.iter().zip(&face.edge_signs) {
            em.add_triplet(3 * nv + f, 3 * nv + e, s * mesh.edge(e).length);
        }
    }
    let mut d = TriMat::new((nc, 3 * nv + nf));
    for (k, cell) in mesh.cells().iter().enumerate() {
        for (&f, &s) in cell.faces.iter().zip(&cell.signs) {
            d.add_triplet(k, 3 * nv + f, s);
        }
    }
    Structure {
        g: g.to_csr(),
        e: em.to_csr(),
        d: d.to_csr(),
    }
}

/// Submatrix on the given free row and column maps (`None` keeps all).
pub fn restrict(m: &CsMat<f64>, rows: Option<&FreeMap>, cols: Option<&FreeMap>) -> CsMat<f64> {
    let nr = rows.map_or(m.rows(), FreeMap::num_free);
    let nc = cols.map_or(m.cols(), FreeMap::num_free);
    let mut t = TriMat::new((nr, nc));
    for (&v, (i, j)) in m.iter() {
        let ri = rows.map_or(Some(i), |r| r.to_free[i]);
        let cj = cols.map_or(Some(j), |c| c.to_free[j]);
        if let (Some(ri), Some(cj)) = (ri, cj) {
            t.add_triplet(ri, cj, v);
        }
    }
    t.to_csr()
}

#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    /// Exactness of the load quadrature.
    pub load_degree: usize,
    pub nu: f64,
    pub element: ElementOptions,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            load_degree: crate::local::DEFAULT_LOAD_DEGREE,
            nu: 1.0,
            element: ElementOptions::default(),
        }
    }
}

/// Assembled discrete problem on free dofs.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub numbering: DofNumbering,
    /// `Σ_K E_Kᵀ A_W E_K` on free `V` dofs.
    pub a: CsMat<f64>,
    /// Assembled `b_h` on free `V` dofs.
    pub b_vv: CsMat<f64>,
    /// `Gᵀ B_VV`, free `U` × free `V`.
    pub b_lambda: CsMat<f64>,
    /// `diag(Gᵀ B_VV G)`.
    pub m_tilde: Vec<f64>,
    /// Load on free `V` dofs.
    pub load: Vec<f64>,
    /// Free-dof structural matrices.
    pub g: CsMat<f64>,
    pub e: CsMat<f64>,
    pub d: CsMat<f64>,
    /// Full-space structural matrices.
    pub full: Structure,
}

impl GlobalSystem {
    pub fn num_free_v(&self) -> usize {
        self.numbering.v.num_free()
    }

    pub fn num_free_u(&self) -> usize {
        self.numbering.u.num_free()
    }

    /// `S = A + B_λᵀ M̃⁻¹ B_λ`.
    pub fn schur(&self) -> Result<CsMat<f64>> {
        if let Some((i, m)) = self.m_tilde.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
            return Err(VemError::Assembly(format!(
                "non-positive diagonal {m:.3e} at free U dof {i} of GᵀBG"
            )));
        }
        let inv: Vec<f64> = self.m_tilde.iter().map(|m| 1.0 / m).collect();
        let n = self.num_free_u();
        let mut dm = TriMat::new((n, n));
        for (i, &v) in inv.iter().enumerate() {
            dm.add_triplet(i, i, v);
        }
        let dm: CsMat<f64> = dm.to_csr();
        let bt: CsMat<f64> = self.b_lambda.transpose_view().to_csr();
        let corr = &bt * &(&dm * &self.b_lambda);
        Ok((&self.a + &corr).to_csr())
    }

    /// `[[A, B_λᵀ], [B_λ, 0]]` with right-hand side `[F, 0]`.
    pub fn saddle(&self) -> (CsMat<f64>, Vec<f64>) {
        let (nv, nu) = (self.num_free_v(), self.num_free_u());
        let mut t = TriMat::new((nv + nu, nv + nu));
        for (&v, (i, j)) in self.a.iter() {
            t.add_triplet(i, j, v);
        }
        for (&v, (i, j)) in self.b_lambda.iter() {
            t.add_triplet(nv + i, j, v);
            t.add_triplet(j, nv + i, v);
        }
        let mut rhs = self.load.clone();
        rhs.resize(nv + nu, 0.0);
        (t.to_csr(), rhs)
    }
}

type Source<'a> = &'a (dyn Fn(&Point) -> Vector3<f64> + Sync);

/// Computes all local elements (in parallel) and scatters them in cell order.
pub fn assemble(mesh: &Mesh, source: Option<Source<'_>>, opts: &AssemblyOptions) -> Result<GlobalSystem> {
    let numbering = number_dofs(mesh);
    let locals: Vec<(LocalElement, Option<Vec<f64>>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            let el = LocalElement::with_options(mesh, k, &opts.element)?;
            let load = source.map(|f| {
                let fw = el.load_w(mesh, &f, opts.load_degree);
                (el.e.transpose() * fw / opts.nu).as_slice().to_vec()
            });
            Ok((el, load))
        })
        .collect::<Result<_>>()?;

    let nfv = numbering.v.num_free();
    let mut a = TriMat::new((nfv, nfv));
    let mut b = TriMat::new((nfv, nfv));
    let mut load = vec![0.0; nfv];
    for (el, lv) in &locals {
        let gidx = el.global_v(mesh);
        let free: Vec<Option<usize>> = gidx.iter().map(|&g| numbering.v.to_free[g]).collect();
        let av = el.a_v();
        for (i, fi) in free.iter().enumerate() {
            let Some(fi) = *fi else { continue };
            if let Some(lv) = lv {
                load[fi] += lv[i];
            }
            for (j, fj) in free.iter().enumerate() {
                let Some(fj) = *fj else { continue };
                if av[(i, j)] != 0.0 {
                    a.add_triplet(fi, fj, av[(i, j)]);
                }
                if el.b_v[(i, j)] != 0.0 {
                    b.add_triplet(fi, fj, el.b_v[(i, j)]);
                }
            }
        }
    }
    let a: CsMat<f64> = a.to_csr();
    let b_vv: CsMat<f64> = b.to_csr();

    let full = structure_matrices(mesh);
    let g = restrict(&full.g, Some(&numbering.v), Some(&numbering.u));
    let e = restrict(&full.e, Some(&numbering.w), Some(&numbering.v));
    let d = restrict(&full.d, None, Some(&numbering.w));
    if g.rows() != a.rows() || e.cols() != a.rows() {
        return Err(VemError::Assembly("structural and form dimensions disagree".into()));
    }
    let gt: CsMat<f64> = g.transpose_view().to_csr();
    let b_lambda: CsMat<f64> = (&gt * &b_vv).to_csr();
    let gbg: CsMat<f64> = (&b_lambda * &g).to_csr();
    let m_tilde = (0..gbg.rows()).map(|i| gbg.get(i, i).copied().unwrap_or(0.0)).collect();

    Ok(GlobalSystem {
        numbering,
        a,
        b_vv,
        b_lambda,
        m_tilde,
        load,
        g,
        e,
        d,
        full,
    })
}

/// Writes `row col value` lines (zero-based) for every stored entry.
pub fn write_coo(m: &CsMat<f64>, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "% {} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (&v, (i, j)) in m.iter() {
        writeln!(out, "{i} {j} {v:.17e}")?;
    }
    out.flush()?;
    Ok(())
}

/// Largest absolute entry.
pub fn max_abs(m: &CsMat<f64>) -> f64 {
    m.data().iter().fold(0.0, |a, &b| a.max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_dof_counts() {
        let n1 = number_dofs(&Mesh::cube(1));
        assert_eq!((n1.u.num_free(), n1.v.num_free()), (0, 0));
        for n in [2usize, 4] {
            let num = number_dofs(&Mesh::cube(n));
            let i = n - 1;
            assert_eq!(num.u.num_free(), i.pow(3));
            assert_eq!(num.v.num_free(), 3 * i.pow(3) + 3 * n * i * i);
        }
        let n4 = number_dofs(&Mesh::cube(4));
        assert_eq!((n4.v.num_free(), n4.u.num_free()), (189, 27));
    }

    #[test]
    fn global_structure_is_exact() {
        let m = Mesh::cube(3);
        let s = structure_matrices(&m);
        let eg: CsMat<f64> = &s.e * &s.g;
        let de: CsMat<f64> = &s.d * &s.e;
        assert!(max_abs(&eg) <= 1e-13 * max_abs(&s.e) * max_abs(&s.g));
        assert!(max_abs(&de) <= 1e-13 * max_abs(&s.e));
    }

    #[test]
    fn assembled_forms_are_symmetric() {
        let m = Mesh::cube(3);
        let sys = assemble(&m, None, &AssemblyOptions::default()).unwrap();
        for mat in [&sys.a, &sys.b_vv] {
            let t: CsMat<f64> = mat.transpose_view().to_csr();
            let diff: CsMat<f64> = mat - &t;
            assert!(max_abs(&diff) <= 1e-13 * max_abs(mat));
        }
        assert!(sys.m_tilde.iter().all(|&x| x > 0.0));
        let s = sys.schur().unwrap();
        let st: CsMat<f64> = s.transpose_view().to_csr();
        assert!(max_abs(&(&s - &st)) <= 1e-13 * max_abs(&s));
    }

    #[test]
    fn single_interior_vertex_system_is_local_sum() {
        // n = 2: one interior vertex, 9 free V dofs, 1 free U dof
        let m = Mesh::cube(2);
        let sys = assemble(&m, None, &AssemblyOptions::default()).unwrap();
        assert_eq!((sys.num_free_v(), sys.num_free_u()), (9, 1));
        let (saddle, _) = sys.saddle();
        assert_eq!(saddle.rows(), 10);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(9, 9);
        for k in 0..m.num_cells() {
            let el = LocalElement::new(&m, k).unwrap();
            let gidx = el.global_v(&m);
            let av = el.a_v();
            for (i, &gi) in gidx.iter().enumerate() {
                for (j, &gj) in gidx.iter().enumerate() {
                    if let (Some(fi), Some(fj)) = (sys.numbering.v.to_free[gi], sys.numbering.v.to_free[gj]) {
                        dense[(fi, fj)] += av[(i, j)];
                    }
                }
            }
        }
        for i in 0..9 {
            for j in 0..9 {
                let got = saddle.get(i, j).copied().unwrap_or(0.0);
                assert!((got - dense[(i, j)]).abs() <= 1e-13 * dense.amax());
            }
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let m = Mesh::cube(3);
        let f = |x: &Point| Vector3::new(x.y, x.z * x.x, 1.0);
        let s1 = assemble(&m, Some(&f), &AssemblyOptions::default()).unwrap();
        let s2 = assemble(&m, Some(&f), &AssemblyOptions::default()).unwrap();
        assert_eq!(s1.a.data(), s2.a.data());
        assert_eq!(s1.b_vv.data(), s2.b_vv.data());
        assert_eq!(s1.load, s2.load);
    }
}
