//! Laplacian versus elastic node movement towards an embedded curve, with
//! narrow-band statistics and the compression ratio of each result.
//!
//! ```text
//! cargo run --release --example embedded_geometry -- [circle:0,0,0.5 | flower] [h] [half-width]
//! ```

use std::time::Instant;

use adapt2d::levelset::{sample, AnalyticLevelSet};
use adapt2d::mesh::{generate_equilateral, Mesh, Rect};
use adapt2d::mmpde::{apply_displacement, solve, Closure, MonitorSources, SolverConfig};
use adapt2d::monitor::MonitorSpec;
use adapt2d::quality::{compression_ratio, narrow_band_stats, StatsTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let ls: AnalyticLevelSet = args.next().as_deref().unwrap_or("circle:0,0,0.5").parse()?;
    let h: f64 = args.next().map_or(Ok(0.0158), |s| s.parse())?;
    let half: f64 = args.next().map_or(Ok(1.25), |s| s.parse())?;

    let mesh = generate_equilateral(&Rect::square(half), h)?;
    println!("{ls}: {} vertices, {} triangles", mesh.num_vertices(), mesh.num_triangles());
    let band = |m: &Mesh| narrow_band_stats(m, &sample(m, |p| ls.eval(p))?, 1e-2);
    let mut table = StatsTable::default();
    table.push("initial", band(&mesh)?);

    let runs = [("laplacian", Closure::Laplacian, "gb:1,40,300"), ("elasticity", Closure::elasticity(0.75, 0.25), "gbk:2.5,30,200,0.1,4")];
    for (name, closure, monitor) in runs {
        let spec: MonitorSpec = monitor.parse()?;
        let config = SolverConfig { closure, jacobi_sweeps_per_outer: 5, max_outer_iters: 20_000, ..Default::default() };
        let start = Instant::now();
        let solution = solve(&mesh, &spec, &MonitorSources::level_set(ls), &config)?;
        let d = &solution.diagnostics;
        let adapted = apply_displacement(&mesh, &solution.displacement);
        let qr = compression_ratio(&mesh, &adapted)?;
        println!(
            "{name} ({closure}, {spec}): converged {} in {} iterations, {:.1} s, max compression {:.2}",
            d.converged,
            d.iterations(),
            start.elapsed().as_secs_f64(),
            qr.iter().copied().fold(0.0, f64::max)
        );
        table.push(name, band(&adapted)?);
    }
    print!("\n{}", table.to_table());
    Ok(())
}
