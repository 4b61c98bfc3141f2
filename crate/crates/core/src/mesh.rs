//! Conforming polyhedral meshes: topology, orientation and geometric caches.
//!
//! Faces carry one global unit normal; the stored vertex loop runs
//! counter-clockwise about it. Cells reference faces together with a sign
//! `σ ∈ {+1, -1}` such that `σ·n_f` points out of the cell. Edge tangents run
//! from the lower to the higher vertex index.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};

pub type Point = Vector3<f64>;

/// Relative planarity tolerance (vertex distance to the face plane over `h_f`).
pub const PLANARITY_TOL: f64 = 1e-9;

/// Relative tolerance on `Σ_f σ |f| n_f` over `h_K²`.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Edge {
    /// `[lo, hi]` with `lo < hi`.
    pub vertices: [usize; 2],
    pub length: f64,
    pub tangent: Vector3<f64>,
}

impl Edge {
    pub fn midpoint(&self, mesh: &Mesh) -> Point {
        0.5 * (mesh.vertex(self.vertices[0]) + mesh.vertex(self.vertices[1]))
    }
}

#[derive(Clone, Debug)]
pub struct Face {
    /// Vertex loop, counter-clockwise about `normal`.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    /// `+1` where the loop runs along the edge tangent, `-1` otherwise.
    pub edge_signs: Vec<f64>,
    pub normal: Vector3<f64>,
    pub barycenter: Point,
    pub area: f64,
    pub diameter: f64,
    /// Orthonormal in-plane frame with `frame[0] × frame[1] = normal`.
    pub frame: [Vector3<f64>; 2],
    /// Vertex average; apex of the fan triangulation.
    pub fan_center: Point,
}

impl Face {
    /// In-plane coordinates of `x` relative to the barycenter.
    pub fn local_coords(&self, x: &Point) -> Vector2<f64> {
        let d = x - self.barycenter;
        Vector2::new(d.dot(&self.frame[0]), d.dot(&self.frame[1]))
    }

    pub fn to_global(&self, s: &Vector2<f64>) -> Point {
        self.barycenter + s.x * self.frame[0] + s.y * self.frame[1]
    }

    /// Fan triangles `(fan_center, v_i, v_{i+1})`, counter-clockwise about the normal.
    pub fn fan_triangles<'a>(&'a self, mesh: &'a Mesh) -> impl Iterator<Item = [Point; 3]> + 'a {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            [
                self.fan_center,
                *mesh.vertex(self.vertices[i]),
                *mesh.vertex(self.vertices[(i + 1) % n]),
            ]
        })
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub faces: Vec<usize>,
    /// Orientation signs: `signs[i] * normal(faces[i])` is outward.
    pub signs: Vec<f64>,
    /// Sorted global vertex indices.
    pub vertices: Vec<usize>,
    /// Sorted global edge indices.
    pub edges: Vec<usize>,
    pub barycenter: Point,
    pub volume: f64,
    pub diameter: f64,
    /// Interior apex used for the tetrahedral decomposition.
    pub anchor: Point,
}

/// Immutable conforming polyhedral mesh.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    cells: Vec<Cell>,
    vertex_on_boundary: Vec<bool>,
    edge_on_boundary: Vec<bool>,
    face_on_boundary: Vec<bool>,
    face_cells: Vec<Vec<(usize, f64)>>,
}

impl Mesh {
    /// Builds and validates a mesh from vertex coordinates, face vertex loops
    /// and per-cell (unsigned) face lists.
    pub fn from_polyhedra(
        vertices: Vec<Point>,
        face_loops: Vec<Vec<usize>>,
        cell_faces: Vec<Vec<usize>>,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        for (f, lp) in face_loops.iter().enumerate() {
            if lp.len() < 3 {
                return Err(VemError::Parse(format!("face {f} has fewer than 3 vertices")));
            }
            if let Some(&v) = lp.iter().find(|&&v| v >= nv) {
                return Err(VemError::Parse(format!(
                    "face {f} references missing vertex {v} (mesh has {nv} vertices)"
                )));
            }
            let mut sorted = lp.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != lp.len() {
                return Err(VemError::Parse(format!("face {f} repeats a vertex")));
            }
        }
        let nf = face_loops.len();
        for (k, fl) in cell_faces.iter().enumerate() {
            if fl.len() < 4 {
                return Err(VemError::Parse(format!("cell {k} has fewer than 4 faces")));
            }
            if let Some(&f) = fl.iter().find(|&&f| f >= nf) {
                return Err(VemError::Parse(format!(
                    "cell {k} references missing face {f} (mesh has {nf} faces)"
                )));
            }
        }

        // edges, sorted lexicographically by (lo, hi)
        let mut edge_keys: Vec<(usize, usize)> = face_loops
            .iter()
            .flat_map(|lp| {
                (0..lp.len()).map(move |i| {
                    let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        edge_keys.sort_unstable();
        edge_keys.dedup();
        let edge_index: HashMap<(usize, usize), usize> =
            edge_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut edges = Vec::with_capacity(edge_keys.len());
        for (e, &(a, b)) in edge_keys.iter().enumerate() {
            let d = vertices[b] - vertices[a];
            let length = d.norm();
            if !(length > 0.0) {
                return Err(VemError::Validation(format!("edge {e} has zero length")));
            }
            edges.push(Edge {
                vertices: [a, b],
                length,
                tangent: d / length,
            });
        }

        let mut faces = Vec::with_capacity(nf);
        for (f, lp) in face_loops.into_iter().enumerate() {
            faces.push(build_face(f, lp, &vertices, &edge_index)?);
        }

        let mut cells = Vec::with_capacity(cell_faces.len());
        let mut face_cells: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nf];
        for (k, fl) in cell_faces.into_iter().enumerate() {
            let cell = build_cell(k, fl, &vertices, &faces)?;
            for (&f, &s) in cell.faces.iter().zip(&cell.signs) {
                face_cells[f].push((k, s));
            }
            cells.push(cell);
        }

        for (f, inc) in face_cells.iter().enumerate() {
            match inc.as_slice() {
                [] => {
                    return Err(VemError::Validation(format!("face {f} belongs to no cell")))
                }
                [_] => {}
                [(_, s0), (_, s1)] => {
                    if s0 * s1 > 0.0 {
                        return Err(VemError::Validation(format!(
                            "face {f} has inconsistent orientation: both incident cells see the same side"
                        )));
                    }
                }
                _ => {
                    return Err(VemError::Validation(format!(
                        "face {f} is non-manifold ({} incident cells)",
                        inc.len()
                    )))
                }
            }
        }

        let mut vertex_on_boundary = vec![false; nv];
        let mut edge_on_boundary = vec![false; edges.len()];
        let face_on_boundary: Vec<bool> = face_cells.iter().map(|c| c.len() == 1).collect();
        for (f, face) in faces.iter().enumerate() {
            if face_on_boundary[f] {
                face.vertices.iter().for_each(|&v| vertex_on_boundary[v] = true);
                face.edges.iter().for_each(|&e| edge_on_boundary[e] = true);
            }
        }

        Ok(Mesh {
            vertices,
            edges,
            faces,
            cells,
            vertex_on_boundary,
            edge_on_boundary,
            face_on_boundary,
            face_cells,
        })
    }

    /// Unit cube `[0,1]³` split into `n³` axis-aligned cubes.
    pub fn cube(n: usize) -> Mesh {
        assert!(n >= 1, "cube mesh needs at least one subdivision");
        let m = n + 1;
        let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
                }
            }
        }
        // unit-cube coordinates are exact at the boundary
        for p in vertices.iter_mut() {
            for c in p.iter_mut() {
                if (*c - 1.0).abs() < 1e-14 {
                    *c = 1.0;
                }
            }
        }

        let nx = m * n * n;
        let fx = |i: usize, j: usize, k: usize| i + m * (j + n * k);
        let fy = |i: usize, j: usize, k: usize| nx + i + n * (j + m * k);
        let fz = |i: usize, j: usize, k: usize| 2 * nx + i + n * (j + n * k);
        let mut faces = vec![Vec::new(); 3 * nx];
        for k in 0..n {
            for j in 0..n {
                for i in 0..m {
                    faces[fx(i, j, k)] =
                        vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)];
                }
            }
        }
        for k in 0..n {
            for j in 0..m {
                for i in 0..n {
                    faces[fy(i, j, k)] =
                        vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)];
                }
            }
        }
        for k in 0..m {
            for j in 0..n {
                for i in 0..n {
                    faces[fz(i, j, k)] =
                        vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)];
                }
            }
        }
        let mut cells = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    cells.push(vec![
                        fx(i, j, k),
                        fx(i + 1, j, k),
                        fy(i, j, k),
                        fy(i, j + 1, k),
                        fz(i, j, k),
                        fz(i, j, k + 1),
                    ]);
                }
            }
        }
        Mesh::from_polyhedra(vertices, faces, cells).expect("structured cube mesh is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }
    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }
    pub fn cell(&self, k: usize) -> &Cell {
        &self.cells[k]
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn vertex_on_boundary(&self, v: usize) -> bool {
        self.vertex_on_boundary[v]
    }
    pub fn edge_on_boundary(&self, e: usize) -> bool {
        self.edge_on_boundary[e]
    }
    pub fn face_on_boundary(&self, f: usize) -> bool {
        self.face_on_boundary[f]
    }
    /// `(cell, sign)` pairs incident to face `f`.
    pub fn face_cells(&self, f: usize) -> &[(usize, f64)] {
        &self.face_cells[f]
    }

    /// Mesh size `h = max_K h_K`.
    pub fn h(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Original face loops and cell face lists, i.e. the on-disk representation.
    pub fn topology(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        (
            self.faces.iter().map(|f| f.vertices.clone()).collect(),
            self.cells.iter().map(|c| c.faces.clone()).collect(),
        )
    }

    /// Rebuilds the mesh with cells listed in the order `perm` (new cell `i` is old cell `perm[i]`).
    pub fn permute_cells(&self, perm: &[usize]) -> Result<Mesh> {
        let (faces, cells) = self.topology();
        if perm.len() != cells.len() {
            return Err(VemError::Validation("cell permutation has wrong length".into()));
        }
        let cells = perm.iter().map(|&k| cells[k].clone()).collect();
        Mesh::from_polyhedra(self.vertices.clone(), faces, cells)
    }

    /// Rebuilds the mesh with every vertex moved by `map`.
    pub fn map_vertices(&self, map: impl Fn(&Point) -> Point) -> Result<Mesh> {
        let (faces, cells) = self.topology();
        Mesh::from_polyhedra(self.vertices.iter().map(map).collect(), faces, cells)
    }

    /// Position of vertex `v` inside `cell.vertices`.
    pub fn local_vertex(&self, k: usize, v: usize) -> usize {
        self.cells[k]
            .vertices
            .binary_search(&v)
            .expect("vertex belongs to cell")
    }

    /// Position of edge `e` inside `cell.edges`.
    pub fn local_edge(&self, k: usize, e: usize) -> usize {
        self.cells[k].edges.binary_search(&e).expect("edge belongs to cell")
    }
}

fn newell_normal(pts: &[Point]) -> Vector3<f64> {
    let mut n = Vector3::zeros();
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

fn diameter(pts: impl Iterator<Item = Point> + Clone) -> f64 {
    let v: Vec<Point> = pts.collect();
    let mut d: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            d = d.max((v[i] - v[j]).norm());
        }
    }
    d
}

fn build_face(
    f: usize,
    lp: Vec<usize>,
    vertices: &[Point],
    edge_index: &HashMap<(usize, usize), usize>,
) -> Result<Face> {
    let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
    let nn = newell_normal(&pts);
    let nnorm = nn.norm();
    if !(nnorm > 0.0) {
        return Err(VemError::Validation(format!("face {f} has zero area")));
    }
    let normal = nn / nnorm;
    let fan_center = pts.iter().sum::<Point>() / pts.len() as f64;
    let h_f = diameter(pts.iter().copied());

    let mut area = 0.0;
    let mut moment = Vector3::zeros();
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        let t = 0.5 * (a - fan_center).cross(&(b - fan_center)).dot(&normal);
        area += t;
        moment += t * (fan_center + a + b) / 3.0;
    }
    if !(area > 0.0) {
        return Err(VemError::Validation(format!("face {f} has zero area")));
    }
    let barycenter = moment / area;

    let off_plane = pts
        .iter()
        .map(|p| (p - barycenter).dot(&normal).abs())
        .fold(0.0, f64::max);
    if off_plane > PLANARITY_TOL * h_f {
        return Err(VemError::Validation(format!(
            "face {f} is not planar (max distance {off_plane:.3e} to its plane, h_f = {h_f:.3e})"
        )));
    }

    let a1 = {
        let d = pts[1] - pts[0];
        let d = d - d.dot(&normal) * normal;
        d / d.norm()
    };
    let a2 = normal.cross(&a1);

    let mut edges = Vec::with_capacity(lp.len());
    let mut edge_signs = Vec::with_capacity(lp.len());
    for i in 0..lp.len() {
        let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
        edges.push(edge_index[&(a.min(b), a.max(b))]);
        edge_signs.push(if a < b { 1.0 } else { -1.0 });
    }

    Ok(Face {
        vertices: lp,
        edges,
        edge_signs,
        normal,
        barycenter,
        area,
        diameter: h_f,
        frame: [a1, a2],
        fan_center,
    })
}

fn build_cell(k: usize, face_ids: Vec<usize>, vertices: &[Point], faces: &[Face]) -> Result<Cell> {
    let mut cell_vertices: Vec<usize> = face_ids
        .iter()
        .flat_map(|&f| faces[f].vertices.iter().copied())
        .collect();
    cell_vertices.sort_unstable();
    cell_vertices.dedup();
    if cell_vertices.len() < 4 {
        return Err(VemError::Validation(format!("cell {k} has fewer than 4 vertices")));
    }

    // every edge of a closed cell surface is shared by exactly two of its faces
    let mut edge_count: HashMap<usize, usize> = HashMap::new();
    for &f in &face_ids {
        for &e in &faces[f].edges {
            *edge_count.entry(e).or_default() += 1;
        }
    }
    if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c != 2) {
        return Err(VemError::Validation(format!(
            "cell {k} is not closed: edge {e} appears in {c} of its faces"
        )));
    }
    let mut cell_edges: Vec<usize> = edge_count.into_keys().collect();
    cell_edges.sort_unstable();

    let anchor =
        cell_vertices.iter().map(|&v| vertices[v]).sum::<Point>() / cell_vertices.len() as f64;
    let h_k = diameter(cell_vertices.iter().map(|&v| vertices[v]));

    let mut signs = Vec::with_capacity(face_ids.len());
    for &f in &face_ids {
        let face = &faces[f];
        let s = face.normal.dot(&(face.barycenter - anchor));
        if s.abs() <= 1e-12 * h_k {
            return Err(VemError::Validation(format!(
                "cell {k}: cannot orient face {f} (face plane passes through the cell center)"
            )));
        }
        signs.push(s.signum());
    }

    let mut closure = Vector3::zeros();
    for (&f, &s) in face_ids.iter().zip(&signs) {
        closure += s * faces[f].area * faces[f].normal;
    }
    if closure.norm() > CLOSURE_TOL * h_k * h_k * face_ids.len() as f64 {
        return Err(VemError::Validation(format!(
            "cell {k} has inconsistent orientation (|Σ σ|f| n_f| = {:.3e})",
            closure.norm()
        )));
    }

    let mut volume = 0.0;
    let mut moment = Vector3::zeros();
    for (&f, &s) in face_ids.iter().zip(&signs) {
        let face = &faces[f];
        let n = face.vertices.len();
        for i in 0..n {
            let a = vertices[face.vertices[i]];
            let b = vertices[face.vertices[(i + 1) % n]];
            let c = face.fan_center;
            let v = s * (c - anchor).dot(&(a - anchor).cross(&(b - anchor))) / 6.0;
            volume += v;
            moment += v * (anchor + a + b + c) / 4.0;
        }
    }
    if !(volume > 0.0) {
        return Err(VemError::Validation(format!("cell {k} has non-positive volume")));
    }

    Ok(Cell {
        faces: face_ids,
        signs,
        vertices: cell_vertices,
        edges: cell_edges,
        barycenter: moment / volume,
        volume,
        diameter: h_k,
        anchor,
    })
}

/// Supported on-disk mesh formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Json,
}

pub const MESH_FORMAT_TAG: &str = "gradcurl-polymesh";
pub const MESH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MeshFile {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    version: Option<u32>,
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<usize>>,
}

/// Loads a mesh from `source`, which is either a file path or `builtin:cube:<n>`.
pub fn load_mesh(source: &str) -> Result<Mesh> {
    if let Some(rest) = source.strip_prefix("builtin:") {
        let parts: Vec<&str> = rest.split(':').collect();
        return match parts.as_slice() {
            ["cube", n] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| VemError::Parse(format!("bad cube size in '{source}'")))?;
                if n == 0 {
                    return Err(VemError::Parse("cube mesh needs n >= 1".into()));
                }
                Ok(Mesh::cube(n))
            }
            _ => Err(VemError::Parse(format!("unknown builtin mesh '{source}'"))),
        };
    }
    load_mesh_file(Path::new(source), MeshFormat::Json)
}

pub fn load_mesh_file(path: &Path, format: MeshFormat) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::Json => parse_mesh_json(&text),
    }
}

pub fn parse_mesh_json(text: &str) -> Result<Mesh> {
    let file: MeshFile =
        serde_json::from_str(text).map_err(|e| VemError::Parse(e.to_string()))?;
    if let Some(fmt) = &file.format {
        if fmt != MESH_FORMAT_TAG {
            return Err(VemError::Parse(format!("unknown mesh format tag '{fmt}'")));
        }
    }
    if let Some(v) = file.version {
        if v != MESH_FORMAT_VERSION {
            return Err(VemError::Parse(format!("unsupported mesh format version {v}")));
        }
    }
    let vertices = file
        .vertices
        .iter()
        .map(|p| Point::new(p[0], p[1], p[2]))
        .collect();
    Mesh::from_polyhedra(vertices, file.faces, file.cells)
}

pub fn mesh_to_json(mesh: &Mesh) -> Result<String> {
    let (faces, cells) = mesh.topology();
    let file = MeshFile {
        format: Some(MESH_FORMAT_TAG.into()),
        version: Some(MESH_FORMAT_VERSION),
        vertices: mesh.vertices.iter().map(|p| [p.x, p.y, p.z]).collect(),
        faces,
        cells,
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh)?)?;
    Ok(())
}

/// Approximate shape metrics of one cell, all relative to `h_K`.
#[derive(Clone, Debug, Serialize)]
pub struct CellRegularity {
    pub cell: usize,
    pub min_edge_ratio: f64,
    pub min_face_inradius_ratio: f64,
    pub ball_ratio: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub mu: f64,
    pub cells: Vec<CellRegularity>,
    pub failing_cells: Vec<usize>,
    /// Edges shorter than `mu·h_K` for some incident cell.
    pub short_edges: Vec<usize>,
    pub passed: bool,
}

/// Reports approximate star-shapedness and edge-length ratios against `mu`.
///
/// Face inradius is the smallest in-plane distance from the face barycenter
/// to an edge line; the cell ball radius is the smallest distance from the
/// cell barycenter to a face plane. Neither decides star-shapedness exactly.
pub fn check_regularity(mesh: &Mesh, mu: f64) -> RegularityReport {
    let mut cells = Vec::with_capacity(mesh.num_cells());
    let mut short_edges = Vec::new();
    for (k, cell) in mesh.cells().iter().enumerate() {
        let hk = cell.diameter;
        let mut min_edge = f64::INFINITY;
        for &e in &cell.edges {
            let r = mesh.edge(e).length / hk;
            min_edge = min_edge.min(r);
            if r < mu {
                short_edges.push(e);
            }
        }
        let mut min_inr = f64::INFINITY;
        let mut ball = f64::INFINITY;
        for &f in &cell.faces {
            let face = mesh.face(f);
            ball = ball.min((cell.barycenter - face.barycenter).dot(&face.normal).abs() / hk);
            for &e in &face.edges {
                let edge = mesh.edge(e);
                let a = mesh.vertex(edge.vertices[0]);
                let d = face.barycenter - a;
                let dist = (d - d.dot(&edge.tangent) * edge.tangent).norm();
                min_inr = min_inr.min(dist / hk);
            }
        }
        let passes = min_edge >= mu && min_inr >= mu && ball >= mu;
        cells.push(CellRegularity {
            cell: k,
            min_edge_ratio: min_edge,
            min_face_inradius_ratio: min_inr,
            ball_ratio: ball,
            passes,
        });
    }
    short_edges.sort_unstable();
    short_edges.dedup();
    let failing_cells: Vec<usize> = cells.iter().filter(|c| !c.passes).map(|c| c.cell).collect();
    RegularityReport {
        mu,
        passed: failing_cells.is_empty(),
        cells,
        failing_cells,
        short_edges,
    }
}
