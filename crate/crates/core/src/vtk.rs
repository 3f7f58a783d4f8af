//! Legacy ASCII VTK export of discrete solutions.
//!
//! CR fields are discontinuous, so every triangle gets its own three points;
//! `|σ_h|` is written as point data at those corners and `u_h` as cell data.

use std::io::Write;
use std::path::Path;

use crate::mesh::Mesh;
use crate::space::{FieldCR, FieldP0};
use crate::{Error, Result};

const CORNERS: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, title: &str, sigma_h: &FieldCR, u_h: &FieldP0) -> std::io::Result<()> {
    let nt = mesh.num_triangles();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * nt)?;
    for t in 0..nt {
        for p in mesh.triangle_points(t) {
            writeln!(w, "{:.17e} {:.17e} 0", p.x, p.y)?;
        }
    }
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in 0..nt {
        writeln!(w, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }

    writeln!(w, "POINT_DATA {}", 3 * nt)?;
    writeln!(w, "SCALARS sigma_h_abs double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    let ncomp = sigma_h.dofs.ncomp;
    let edges_of = |t: usize| mesh.triangles()[t].edges;
    for t in 0..nt {
        let edges = edges_of(t);
        for bary in CORNERS {
            let mut sq = 0.0;
            for c in 0..ncomp {
                let v: f64 = (0..3).map(|i| (1.0 - 2.0 * bary[i]) * sigma_h.coeff(edges[i], c)).sum();
                sq += v * v;
            }
            writeln!(w, "{:.10e}", sq.sqrt())?;
        }
    }

    writeln!(w, "CELL_DATA {nt}")?;
    if u_h.dofs.ncomp == 1 {
        writeln!(w, "SCALARS u_h double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for t in 0..nt {
            writeln!(w, "{:.10e}", u_h.value(t, 0))?;
        }
    } else {
        writeln!(w, "VECTORS u_h double")?;
        for t in 0..nt {
            writeln!(w, "{:.10e} {:.10e} 0", u_h.value(t, 0), u_h.value(t, 1))?;
        }
    }
    Ok(())
}

pub fn save_vtk(path: &Path, mesh: &Mesh, title: &str, sigma_h: &FieldCR, u_h: &FieldP0) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_vtk(&mut w, mesh, title, sigma_h, u_h).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
