//! Degree-of-freedom layouts and interpolation of smooth fields.

use nalgebra::{DVector, Vector3};

use crate::error::{Result, VemError};
use crate::mesh::{Mesh, Point};
use crate::poly::edge_rule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    /// Scalar `H¹`: vertex values.
    U,
    /// Grad-curl space: curl at vertices, tangential edge means.
    V,
    /// Vector `H¹`: vertex values, normal face moments.
    W,
    /// Piecewise constants: raw cell moment.
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    Vertex,
    Edge,
    Face,
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    Value,
    /// Cartesian component of the field.
    Component(usize),
    /// Cartesian component of the curl.
    CurlComponent(usize),
    /// `(1/|e|) ∫_e v·t_e`.
    TangentialMean,
    /// `∫_f w·n_f`.
    NormalMoment,
    /// `∫_K q`.
    Moment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofSlot {
    pub entity: EntityKind,
    /// Index of the entity in the cell's local ordering.
    pub local_index: usize,
    pub functional: Functional,
}

/// Ordered DOF slots of one local space.
#[derive(Clone, Debug)]
pub struct DofLayout {
    pub space: Space,
    pub order: usize,
    pub slots: Vec<DofSlot>,
}

impl DofLayout {
    /// Layout for a cell with `nv` vertices, `ne` edges and `nf` faces.
    pub fn new(space: Space, order: usize, nv: usize, ne: usize, nf: usize) -> Result<Self> {
        if order != 1 {
            return Err(VemError::Unsupported(format!(
                "only order 1 is implemented (requested {order})"
            )));
        }
        let slot = |entity, local_index, functional| DofSlot {
            entity,
            local_index,
            functional,
        };
        let per_vertex = |f: fn(usize) -> Functional| {
            (0..nv).flat_map(move |v| (0..3).map(move |c| slot(EntityKind::Vertex, v, f(c))))
        };
        let slots: Vec<DofSlot> = match space {
            Space::U => (0..nv)
                .map(|v| slot(EntityKind::Vertex, v, Functional::Value))
                .collect(),
            Space::V => per_vertex(Functional::CurlComponent)
                .chain((0..ne).map(|e| slot(EntityKind::Edge, e, Functional::TangentialMean)))
                .collect(),
            Space::W => per_vertex(Functional::Component)
                .chain((0..nf).map(|f| slot(EntityKind::Face, f, Functional::NormalMoment)))
                .collect(),
            Space::Q => vec![slot(EntityKind::Cell, 0, Functional::Moment)],
        };
        Ok(Self { space, order, slots })
    }

    pub fn for_cell(space: Space, mesh: &Mesh, k: usize) -> Result<Self> {
        let c = mesh.cell(k);
        Self::new(space, 1, c.vertices.len(), c.edges.len(), c.faces.len())
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// `(1/|e|) ∫_e v·t_e` by the `n`-point Gauss–Legendre rule.
pub fn edge_tangential_mean(mesh: &Mesh, e: usize, v: &impl Fn(&Point) -> Vector3<f64>, n: usize) -> f64 {
    let edge = mesh.edge(e);
    edge_rule(mesh, e, 2 * n.max(1) - 1).integrate(|x| v(x).dot(&edge.tangent)) / edge.length
}

/// `∫_f w·n_f` by a collapsed Gauss rule with at least `n` points per
/// direction on each fan triangle.
pub fn face_normal_moment(mesh: &Mesh, f: usize, w: &impl Fn(&Point) -> Vector3<f64>, n: usize) -> f64 {
    let normal = mesh.face(f).normal;
    crate::poly::face_rule(mesh, f, 2 * n.max(1) - 1).integrate(|x| w(x).dot(&normal))
}

pub fn eval_dofs_u(mesh: &Mesh, k: usize, q: impl Fn(&Point) -> f64) -> DVector<f64> {
    let c = mesh.cell(k);
    DVector::from_iterator(c.vertices.len(), c.vertices.iter().map(|&v| q(mesh.vertex(v))))
}

pub fn eval_dofs_v(
    mesh: &Mesh,
    k: usize,
    v: impl Fn(&Point) -> Vector3<f64>,
    curl: impl Fn(&Point) -> Vector3<f64>,
    deg: usize,
) -> DVector<f64> {
    let c = mesh.cell(k);
    let nv = c.vertices.len();
    let mut out = DVector::zeros(3 * nv + c.edges.len());
    for (lv, &gv) in c.vertices.iter().enumerate() {
        let r = curl(mesh.vertex(gv));
        out.fixed_rows_mut::<3>(3 * lv).copy_from(&r);
    }
    for (le, &ge) in c.edges.iter().enumerate() {
        out[3 * nv + le] = edge_tangential_mean(mesh, ge, &v, deg);
    }
    out
}

pub fn eval_dofs_w(mesh: &Mesh, k: usize, w: impl Fn(&Point) -> Vector3<f64>, deg: usize) -> DVector<f64> {
    let c = mesh.cell(k);
    let nv = c.vertices.len();
    let mut out = DVector::zeros(3 * nv + c.faces.len());
    for (lv, &gv) in c.vertices.iter().enumerate() {
        out.fixed_rows_mut::<3>(3 * lv).copy_from(&w(mesh.vertex(gv)));
    }
    for (lf, &gf) in c.faces.iter().enumerate() {
        out[3 * nv + lf] = face_normal_moment(mesh, gf, &w, deg);
    }
    out
}

/// Global V interpolant: `3·vertex + c` curl slots, then `3 N_V + edge`.
pub fn interpolate_v(
    mesh: &Mesh,
    v: impl Fn(&Point) -> Vector3<f64>,
    curl: impl Fn(&Point) -> Vector3<f64>,
    deg: usize,
) -> Vec<f64> {
    let nv = mesh.num_vertices();
    let mut out = vec![0.0; 3 * nv + mesh.num_edges()];
    for (i, x) in mesh.vertices().iter().enumerate() {
        let r = curl(x);
        out[3 * i..3 * i + 3].copy_from_slice(r.as_slice());
    }
    for e in 0..mesh.num_edges() {
        out[3 * nv + e] = edge_tangential_mean(mesh, e, &v, deg);
    }
    out
}

/// Global W interpolant: `3·vertex + c`, then `3 N_V + face`.
pub fn interpolate_w(mesh: &Mesh, w: impl Fn(&Point) -> Vector3<f64>, deg: usize) -> Vec<f64> {
    let nv = mesh.num_vertices();
    let mut out = vec![0.0; 3 * nv + mesh.num_faces()];
    for (i, x) in mesh.vertices().iter().enumerate() {
        out[3 * i..3 * i + 3].copy_from_slice(w(x).as_slice());
    }
    for f in 0..mesh.num_faces() {
        out[3 * nv + f] = face_normal_moment(mesh, f, &w, deg);
    }
    out
}

pub fn interpolate_u(mesh: &Mesh, q: impl Fn(&Point) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_dimensions() {
        for (s, dim) in [(Space::U, 8), (Space::V, 36), (Space::W, 30), (Space::Q, 1)] {
            assert_eq!(DofLayout::new(s, 1, 8, 12, 6).unwrap().len(), dim);
        }
        assert!(matches!(
            DofLayout::new(Space::V, 2, 8, 12, 6),
            Err(VemError::Unsupported(_))
        ));
        let l = DofLayout::new(Space::V, 1, 8, 12, 6).unwrap();
        assert_eq!(l.slots[4].functional, Functional::CurlComponent(1));
        assert_eq!(l.slots[24].entity, EntityKind::Edge);
    }

    #[test]
    fn constant_field_dofs() {
        let m = Mesh::cube(1);
        let c = Vector3::new(0.3, -1.2, 2.0);
        let d = eval_dofs_v(&m, 0, |_| c, |_| Vector3::zeros(), 10);
        assert!(d.rows(0, 24).iter().all(|&x| x == 0.0));
        for (le, &e) in m.cell(0).edges.iter().enumerate() {
            assert!((d[24 + le] - c.dot(&m.edge(e).tangent)).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_of_x1_dofs() {
        let m = Mesh::cube(2);
        let d = eval_dofs_v(&m, 3, |_| Vector3::x(), |_| Vector3::zeros(), 10);
        let c = m.cell(3);
        for (le, &e) in c.edges.iter().enumerate() {
            assert!((d[3 * c.vertices.len() + le] - m.edge(e).tangent.x).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_mean_of_smooth_field_is_converged() {
        let m = Mesh::cube(2);
        let v = crate::harness::manufactured::psi;
        for &e in &m.cell(0).edges {
            let a = edge_tangential_mean(&m, e, &v, 10);
            let edge = m.edge(e);
            let q = crate::poly::segment_rule(
                m.vertex(edge.vertices[0]),
                m.vertex(edge.vertices[1]),
                2 * 50 - 1,
            );
            let b = q.integrate(|x| v(x).dot(&edge.tangent)) / edge.length;
            assert!((a - b).abs() < 1e-12);
        }
    }
}
