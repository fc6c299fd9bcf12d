//! Node movement driven by the gradient of a solution field, alone and
//! combined with a level-set monitor.

use adapt2d::levelset::{AnalyticLevelSet, FieldSource};
use adapt2d::mesh::{generate_uniform, Rect, Vec2};
use adapt2d::mmpde::{apply_displacement, solve, MonitorSources, SolverConfig};
use adapt2d::monitor::MonitorSpec;
use adapt2d::quality::compression_ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_uniform(&Rect::square(1.0), 0.04)?;
    let front = |p: Vec2| (25.0 * (p.x - 0.4 * (3.0 * p.y).sin())).tanh();
    let config = SolverConfig { jacobi_sweeps_per_outer: 5, max_outer_iters: 10_000, ..Default::default() };
    let cases = [
        ("solution", "solution:20,0.5", MonitorSources::solution(FieldSource::function(front))),
        (
            "combined",
            "combined:0.02,20,0.5+gb:1,40,300",
            MonitorSources {
                phi: Some(AnalyticLevelSet::circle(Vec2::new(0.0, 0.0), 0.5).into()),
                u: Some(FieldSource::function(front)),
                ..Default::default()
            },
        ),
    ];
    for (name, monitor, sources) in cases {
        let spec: MonitorSpec = monitor.parse()?;
        let s = solve(&mesh, &spec, &sources, &config)?;
        let adapted = apply_displacement(&mesh, &s.displacement);
        let qr = compression_ratio(&mesh, &adapted)?;
        let threshold = qr.quantile_from_top(0.1);
        let on_front = (0..qr.len())
            .filter(|&t| qr[t] >= threshold)
            .filter(|&t| front(adapted.centroid(t)).abs() < 0.9)
            .count();
        println!(
            "{name}: converged {} after {} iterations, max |δ| {:.3}, {on_front} of {} most compressed elements on the front",
            s.diagnostics.converged,
            s.diagnostics.iterations(),
            s.displacement.max_norm(),
            (0..qr.len()).filter(|&t| qr[t] >= threshold).count()
        );
    }
    Ok(())
}
