//! Structured triangulations of a rectangle, their adjacency and validity.

use adapt2d::mesh::{build_adjacency, generate_equilateral, generate_uniform, validate, Rect};
use adapt2d::quality::iso_qualities;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Rect::new(-1.0, 1.0, -0.5, 0.5)?;
    for (name, mesh) in [("uniform", generate_uniform(&domain, 0.1)?), ("equilateral", generate_equilateral(&domain, 0.1)?)] {
        let adj = build_adjacency(&mesh)?;
        let report = validate(&mesh, None);
        let q = iso_qualities(&mesh)?;
        let q_avg = q.iter().sum::<f64>() / q.len() as f64;
        println!(
            "{name:<12} {:>5} vertices {:>5} triangles {:>5} edges ({} on the boundary), valid {}, area {:.3e}..{:.3e}, mean Q_iso {q_avg:.3}, hash {:016x}",
            mesh.num_vertices(),
            mesh.num_triangles(),
            adj.edges.len(),
            adj.num_boundary_edges(),
            report.is_valid(),
            report.min_area,
            report.max_area,
            adj.fingerprint()
        );
    }
    Ok(())
}
