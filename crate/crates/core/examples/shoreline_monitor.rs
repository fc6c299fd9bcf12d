//! Shoreline monitor: resolution follows the wet/dry boundary and the
//! free-surface slope of a wave running up a sloping beach.

use adapt2d::levelset::FieldSource;
use adapt2d::mesh::{generate_uniform, Rect, Vec2};
use adapt2d::mmpde::{apply_displacement, solve, MonitorSources, SolverConfig};
use adapt2d::monitor::MonitorSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_uniform(&Rect::new(0.0, 2.0, 0.0, 1.0)?, 0.04)?;
    let bed = |p: Vec2| 0.5 * p.x - 0.6;
    let eta = move |p: Vec2| 0.05 * (-(p.x - 0.6 - 0.1 * (6.0 * p.y).sin()).powi(2) * 50.0).exp();
    let depth = move |p: Vec2| (eta(p) - bed(p)).max(0.0);
    let sources = MonitorSources {
        depth: Some(FieldSource::function(depth)),
        eta: Some(FieldSource::function(eta)),
        ..Default::default()
    };
    let spec: MonitorSpec = "shoreline:0.02,50,1,0.5".parse()?;
    let config = SolverConfig { jacobi_sweeps_per_outer: 5, max_outer_iters: 10_000, ..Default::default() };
    let s = solve(&mesh, &spec, &sources, &config)?;
    let adapted = apply_displacement(&mesh, &s.displacement);

    let shoreline_x = 1.2;
    let near = |m: &adapt2d::mesh::Mesh| {
        (0..m.num_vertices()).filter(|&v| (m.position(v).x - shoreline_x).abs() < 0.1).count()
    };
    println!(
        "{spec}: {} iterations, vertices within 0.1 of the shoreline {} -> {}",
        s.diagnostics.iterations(),
        near(&mesh),
        near(&adapted)
    );
    Ok(())
}
