//! Hessian recovery of a sharp front and the resulting anisotropic metric,
//! checked with the metric edge-length histogram.

use adapt2d::levelset::sample;
use adapt2d::mesh::{generate_uniform, Rect};
use adapt2d::metric::{physical_metric, recover_hessian, MetricBounds};
use adapt2d::quality::{edge_histogram, DEFAULT_BINS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_uniform(&Rect::square(1.0), 0.05)?;
    let u = sample(&mesh, |p| (40.0 * (p.x + 0.3 * p.y)).tanh())?;
    let hessian = recover_hessian(&mesh, &u)?;
    let metric = physical_metric(&hessian, &MetricBounds::new(1e-3, 0.2)?)?;

    let (mut finest, mut most_stretched) = (f64::INFINITY, 1.0_f64);
    for m in metric.iter() {
        let [l1, l2] = m.decompose().eigenvalues;
        finest = finest.min(1.0 / l1.sqrt());
        most_stretched = most_stretched.max((l1 / l2).sqrt());
    }
    println!("smallest prescribed size {finest:.3e}, largest aspect ratio {most_stretched:.1}");
    println!("edge lengths of the current mesh in that metric:");
    print!("{}", edge_histogram(&mesh, &metric, &DEFAULT_BINS)?.to_table());
    Ok(())
}
