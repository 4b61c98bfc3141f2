//! ASCII VTU export of polyhedral meshes with per-cell vector data.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;

use crate::error::Result;
use crate::local::LocalElement;
use crate::mesh::Mesh;

const VTK_POLYHEDRON: u8 = 42;

/// Cell means of `Π⁰₁(∇×ψ_h)`, from full-space `V` dofs.
pub fn cell_curl_means(mesh: &Mesh, psi_full: &[f64]) -> Result<Vec<Vector3<f64>>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| {
            let el = LocalElement::new(mesh, k)?;
            let local = DVector::from_iterator(el.dim_v(), el.global_v(mesh).iter().map(|&g| psi_full[g]));
            let coeffs = &el.proj.l2_w * (&el.e * local);
            // ∫_K m_α is the first row of the monomial mass matrix
            let mean = Vector3::from_fn(|c, _| (0..4).map(|a| el.mass[(0, a)] * coeffs[4 * c + a]).sum::<f64>());
            Ok(mean / el.volume)
        })
        .collect()
}

/// Serializes `mesh` as an unstructured grid of polyhedra with one named
/// three-component cell array.
pub fn to_vtu(mesh: &Mesh, name: &str, data: &[Vector3<f64>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0"?>"#);
    let _ = writeln!(s, r#"<VTKFile type="UnstructuredGrid" version="1.0" byte_order="LittleEndian">"#);
    let _ = writeln!(s, "<UnstructuredGrid>");
    let _ = writeln!(
        s,
        r#"<Piece NumberOfPoints="{}" NumberOfCells="{}">"#,
        mesh.num_vertices(),
        mesh.num_cells()
    );
    let _ = writeln!(s, r#"<Points><DataArray type="Float64" NumberOfComponents="3" format="ascii">"#);
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "</DataArray></Points>");

    let mut conn = Vec::new();
    let mut offsets = Vec::new();
    let mut faces = Vec::new();
    let mut face_offsets = Vec::new();
    for cell in mesh.cells() {
        conn.extend(cell.vertices.iter().copied());
        offsets.push(conn.len());
        faces.push(cell.faces.len());
        for &f in &cell.faces {
            let lp = &mesh.face(f).vertices;
            faces.push(lp.len());
            faces.extend(lp.iter().copied());
        }
        face_offsets.push(faces.len());
    }
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "<Cells>");
    for (nm, v) in [("connectivity", &conn), ("offsets", &offsets), ("faces", &faces), ("faceoffsets", &face_offsets)] {
        let _ = writeln!(s, r#"<DataArray type="Int64" Name="{nm}" format="ascii">{}</DataArray>"#, join(v));
    }
    let types = vec![VTK_POLYHEDRON.to_string(); mesh.num_cells()].join(" ");
    let _ = writeln!(s, r#"<DataArray type="UInt8" Name="types" format="ascii">{types}</DataArray>"#);
    let _ = writeln!(s, "</Cells>");
    let _ = writeln!(s, r#"<CellData Vectors="{name}">"#);
    let _ = writeln!(s, r#"<DataArray type="Float64" Name="{name}" NumberOfComponents="3" format="ascii">"#);
    for v in data {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "</DataArray></CellData>");
    let _ = writeln!(s, "</Piece></UnstructuredGrid></VTKFile>");
    s
}

pub fn write_vtu(mesh: &Mesh, name: &str, data: &[Vector3<f64>], path: &Path) -> Result<()> {
    std::fs::write(path, to_vtu(mesh, name, data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::dofs::interpolate_v;

    #[test]
    fn linear_curl_means_are_exact() {
        // curl of (0, 0, xy/2) is linear, so the projection is exact
        let m = Mesh::cube(2);
        let psi = |x: &crate::mesh::Point| Vector3::new(0.0, 0.0, 0.5 * x.x * x.y);
        let curl = |x: &crate::mesh::Point| Vector3::new(0.5 * x.x, -0.5 * x.y, 0.0);
        let full = interpolate_v(&m, psi, curl, 10);
        let means = cell_curl_means(&m, &full).unwrap();
        for (k, mean) in means.iter().enumerate() {
            let want = curl(&m.cell(k).barycenter);
            assert!((mean - want).norm() < 1e-13);
        }
    }

    #[test]
    fn vtu_layout() {
        let m = Mesh::cube(1);
        let s = to_vtu(&m, "curl", &[Vector3::zeros()]);
        assert!(s.contains(r#"Name="faces" format="ascii">6 4 "#));
        assert!(s.contains(r#"Name="types" format="ascii">42<"#));
        assert!(s.contains(r#"Name="faceoffsets" format="ascii">31<"#));
    }
}
