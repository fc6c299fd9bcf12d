//! Medit mesh and solution files: write, read back, compare.

use adapt2d::io::{mesh_to_string, parse_mesh, read_metric_sol, read_sol, write_metric_sol, write_sol, SolData};
use adapt2d::levelset::{sample, AnalyticLevelSet};
use adapt2d::mesh::{generate_uniform, Rect};
use adapt2d::metric::{levelset_metric, MetricBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("adapt2d-medit");
    std::fs::create_dir_all(&dir)?;
    let mesh = generate_uniform(&Rect::square(1.0), 0.25)?;
    let text = mesh_to_string(&mesh);
    std::fs::write(dir.join("square.mesh"), &text)?;
    let back = parse_mesh(&std::fs::read_to_string(dir.join("square.mesh"))?, "square.mesh")?;
    println!("mesh: {} bytes, identical after reading back: {}", text.len(), back == mesh && mesh_to_string(&back) == text);

    let phi = sample(&mesh, |p| AnalyticLevelSet::default_flower().eval(p))?;
    let metric = levelset_metric(&mesh, &phi, 0.01, 0.2, &MetricBounds::new(1e-3, 0.5)?)?.metric;
    write_metric_sol(&metric, dir.join("metric.sol"))?;
    println!("metric: identical after reading back: {}", read_metric_sol(dir.join("metric.sol"), Some(mesh.num_vertices()))? == metric);

    write_sol(&[SolData::from(&phi), SolData::from(&metric)], dir.join("fields.sol"))?;
    let fields = read_sol(dir.join("fields.sol"), Some(mesh.num_vertices()))?;
    println!("two-field file: type codes {:?}", fields.iter().map(SolData::type_code).collect::<Vec<_>>());

    match parse_mesh("MeshVersionFormatted 2\nDimension 3\nEnd\n", "cube.mesh") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
