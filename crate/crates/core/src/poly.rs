//! Scaled monomial bases, polynomial space decompositions and quadrature
//! rules on edges, polygons and polyhedra.

use nalgebra::{DMatrix, SVector};

use crate::mesh::{Mesh, Point};

/// Exponents of all monomials of total degree `<= degree` in `D` variables,
/// ordered by total degree, then by descending exponent of the leading variable.
pub fn exponents<const D: usize>(degree: usize) -> Vec<[usize; D]> {
    fn fill<const D: usize>(pos: usize, left: usize, cur: &mut [usize; D], out: &mut Vec<[usize; D]>) {
        if pos == D - 1 {
            cur[pos] = left;
            out.push(*cur);
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            fill(pos + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        fill(0, d, &mut [0; D], &mut out);
    }
    out
}

/// `dim P_d` in `n` variables.
pub fn poly_dim(n: usize, d: usize) -> usize {
    (1..=n).fold(1, |acc, i| acc * (d + i) / i)
}

/// Monomials `((x - center) / h)^α` up to a fixed total degree.
#[derive(Clone, Debug)]
pub struct MonomialBasis<const D: usize> {
    pub center: SVector<f64, D>,
    pub h: f64,
    pub degree: usize,
    exps: Vec<[usize; D]>,
}

pub type CellBasis = MonomialBasis<3>;
pub type FaceBasis = MonomialBasis<2>;

impl<const D: usize> MonomialBasis<D> {
    pub fn new(center: SVector<f64, D>, h: f64, degree: usize) -> Self {
        Self {
            center,
            h,
            degree,
            exps: exponents::<D>(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[[usize; D]] {
        &self.exps
    }

    pub fn index_of(&self, e: &[usize; D]) -> Option<usize> {
        self.exps.iter().position(|x| x == e)
    }

    pub fn scaled(&self, x: &SVector<f64, D>) -> SVector<f64, D> {
        (x - self.center) / self.h
    }

    pub fn eval(&self, x: &SVector<f64, D>) -> Vec<f64> {
        let xi = self.scaled(x);
        self.exps.iter().map(|e| monomial(&xi, e)).collect()
    }

    /// Gradients with respect to the physical coordinates.
    pub fn grad(&self, x: &SVector<f64, D>) -> Vec<SVector<f64, D>> {
        let xi = self.scaled(x);
        self.exps
            .iter()
            .map(|e| {
                let mut g = SVector::<f64, D>::zeros();
                for i in 0..D {
                    if e[i] > 0 {
                        let mut d = *e;
                        d[i] -= 1;
                        g[i] = e[i] as f64 * monomial(&xi, &d) / self.h;
                    }
                }
                g
            })
            .collect()
    }

    /// Coefficients of `∂_i m_α` (physical derivative) in this basis.
    pub fn derivative(&self, alpha: usize, i: usize) -> Vec<(usize, f64)> {
        let e = self.exps[alpha];
        if e[i] == 0 {
            return Vec::new();
        }
        let mut d = e;
        d[i] -= 1;
        vec![(self.index_of(&d).expect("degree decreases"), e[i] as f64 / self.h)]
    }

    /// Index of `ξ_i m_α` when it stays within the basis degree.
    pub fn times_coordinate(&self, alpha: usize, i: usize) -> Option<usize> {
        let mut e = self.exps[alpha];
        e[i] += 1;
        self.index_of(&e)
    }
}

fn monomial<const D: usize>(xi: &SVector<f64, D>, e: &[usize; D]) -> f64 {
    (0..D).map(|i| xi[i].powi(e[i] as i32)).product()
}

/// Spanning sets of the polynomial splits used by the projectors. Each column
/// is a vector polynomial in coordinates `component * dim P_k + monomial`.
pub mod decomposition {
    use super::*;

    /// `∇ m_γ` for the non-constant `m_γ ∈ P_{k+1}(K)`, written in `(P_k)³`.
    pub fn cell_gradients(basis_k: &CellBasis) -> DMatrix<f64> {
        let k = basis_k.degree;
        let big = CellBasis::new(basis_k.center, basis_k.h, k + 1);
        let n = basis_k.len();
        let mut out = DMatrix::zeros(3 * n, big.len() - 1);
        for g in 1..big.len() {
            let e = big.exponents()[g];
            for i in 0..3 {
                if e[i] > 0 {
                    let mut d = e;
                    d[i] -= 1;
                    let a = basis_k.index_of(&d).expect("degree k monomial");
                    out[(i * n + a, g - 1)] = e[i] as f64 / big.h;
                }
            }
        }
        out
    }

    /// `x_K × e_j m_β` for `m_β ∈ P_{k-1}(K)` and `j = 0..3`, with `x_K` scaled.
    pub fn cell_cross_x(basis_k: &CellBasis) -> DMatrix<f64> {
        let k = basis_k.degree;
        if k == 0 {
            return DMatrix::zeros(3, 0);
        }
        let n = basis_k.len();
        let nb = poly_dim(3, k - 1);
        let mut out = DMatrix::zeros(3 * n, 3 * nb);
        for b in 0..nb {
            for j in 0..3 {
                let col = 3 * b + j;
                // (ξ × e_j)_i = ε_{i l j} ξ_l
                for i in 0..3 {
                    for l in 0..3 {
                        let s = levi_civita(i, l, j);
                        if s != 0.0 {
                            let a = basis_k.times_coordinate(b, l).expect("degree k monomial");
                            out[(i * n + a, col)] += s;
                        }
                    }
                }
            }
        }
        out
    }

    /// `rot m_γ = (∂_2 m_γ, -∂_1 m_γ)` for non-constant `m_γ ∈ P_{k+1}(f)`, in `(P_k(f))²`.
    pub fn face_rot(basis_k: &FaceBasis) -> DMatrix<f64> {
        let k = basis_k.degree;
        let big = FaceBasis::new(basis_k.center, basis_k.h, k + 1);
        let n = basis_k.len();
        let mut out = DMatrix::zeros(2 * n, big.len() - 1);
        for g in 1..big.len() {
            let e = big.exponents()[g];
            if e[1] > 0 {
                let a = basis_k.index_of(&[e[0], e[1] - 1]).expect("degree k monomial");
                out[(a, g - 1)] += e[1] as f64 / big.h;
            }
            if e[0] > 0 {
                let a = basis_k.index_of(&[e[0] - 1, e[1]]).expect("degree k monomial");
                out[(n + a, g - 1)] -= e[0] as f64 / big.h;
            }
        }
        out
    }

    /// `x_f m_β` for `m_β ∈ P_{k-1}(f)`, with `x_f` scaled.
    pub fn face_x(basis_k: &FaceBasis) -> DMatrix<f64> {
        let k = basis_k.degree;
        if k == 0 {
            return DMatrix::zeros(2, 0);
        }
        let n = basis_k.len();
        let nb = poly_dim(2, k - 1);
        let mut out = DMatrix::zeros(2 * n, nb);
        for b in 0..nb {
            for i in 0..2 {
                let a = basis_k.times_coordinate(b, i).expect("degree k monomial");
                out[(i * n + a, b)] = 1.0;
            }
        }
        out
    }

    pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }
}

/// Points and weights of a quadrature rule in global coordinates.
#[derive(Clone, Debug, Default)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Legendre P_n and its derivative at z
    let legendre = |z: f64| {
        let (mut p1, mut p2) = (1.0, 0.0);
        for j in 1..=n {
            let p3 = p2;
            p2 = p1;
            p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
        }
        (p1, n as f64 * (z * p1 - p2) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre on `[0, 1]` exact for degree `d`.
pub fn unit_interval_rule(d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = d / 2 + 1;
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    )
}

/// Collapsed rule on the reference triangle `{(0,0),(1,0),(0,1)}` (weights sum to 1/2).
pub fn reference_triangle_rule(d: usize) -> Vec<([f64; 2], f64)> {
    let n = (d + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            out.push(([u, v * (1.0 - u)], 0.25 * w[i] * w[j] * (1.0 - u)));
        }
    }
    out
}

/// Collapsed rule on the reference tetrahedron (weights sum to 1/6).
pub fn reference_tet_rule(d: usize) -> Vec<([f64; 3], f64)> {
    let n = (d + 3).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            for k in 0..n {
                let t = 0.5 * (x[k] + 1.0);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                out.push((
                    [u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)],
                    0.125 * w[i] * w[j] * w[k] * jac,
                ));
            }
        }
    }
    out
}

/// Gauss–Legendre rule along the segment `a → b`, weights in arclength.
pub fn segment_rule(a: &Point, b: &Point, d: usize) -> Quadrature {
    let (t, w) = unit_interval_rule(d);
    let len = (b - a).norm();
    Quadrature {
        points: t.iter().map(|&s| a + s * (b - a)).collect(),
        weights: w.iter().map(|&x| x * len).collect(),
    }
}

pub fn edge_rule(mesh: &Mesh, e: usize, d: usize) -> Quadrature {
    let [a, b] = mesh.edge(e).vertices;
    segment_rule(mesh.vertex(a), mesh.vertex(b), d)
}

/// Rule on a planar triangle given in 3D; `sign` multiplies the weights.
fn push_triangle(q: &mut Quadrature, tri: &[Point; 3], rule: &[([f64; 2], f64)], normal: &Point) {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let jac = e1.cross(&e2).dot(normal);
    for (p, w) in rule {
        q.points.push(tri[0] + p[0] * e1 + p[1] * e2);
        q.weights.push(w * jac);
    }
}

/// Fan rule about the vertex average of face `f`.
pub fn face_rule(mesh: &Mesh, f: usize, d: usize) -> Quadrature {
    let rule = reference_triangle_rule(d);
    let face = mesh.face(f);
    let mut q = Quadrature::default();
    for tri in face.fan_triangles(mesh) {
        push_triangle(&mut q, &tri, &rule, &face.normal);
    }
    q
}

/// Rule on cell `k` from signed tetrahedra `(anchor, fan center, v_i, v_{i+1})`.
pub fn cell_rule(mesh: &Mesh, k: usize, d: usize) -> Quadrature {
    let rule = reference_tet_rule(d);
    let cell = mesh.cell(k);
    let a = cell.anchor;
    let mut q = Quadrature::default();
    for (&f, &s) in cell.faces.iter().zip(&cell.signs) {
        for [c, p, r] in mesh.face(f).fan_triangles(mesh) {
            let (e1, e2, e3) = (c - a, p - a, r - a);
            let jac = s * e1.dot(&e2.cross(&e3));
            for (x, w) in &rule {
                q.points.push(a + x[0] * e1 + x[1] * e2 + x[2] * e3);
                q.weights.push(w * jac);
            }
        }
    }
    q
}
