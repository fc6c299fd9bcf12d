//! The double Archimedean spiral sizemap sampled on a mesh and written as a
//! Medit solution file.

use adapt2d::io::write_scalar_sol;
use adapt2d::levelset::{sample, spiral_sizemap, SpiralSizemapParams};
use adapt2d::mesh::{generate_equilateral, Rect, Vec2};
use adapt2d::metric::{MetricField, SpdTensor2};
use adapt2d::quality::{edge_histogram, DEFAULT_BINS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SpiralSizemapParams::default();
    for x in [0.0, 2.5, 5.0, 10.0] {
        println!("h({x:>4}, 0) = {:.6}", spiral_sizemap(Vec2::new(x, 0.0), &params));
    }
    let mesh = generate_equilateral(&Rect::square(10.0), 1.0)?;
    let h = sample(&mesh, |p| spiral_sizemap(p, &params))?;
    println!("on the mesh: min {:.4}, max {:.4}", h.min(), h.max());

    let metric: MetricField = h.iter().map(|&s| SpdTensor2::isotropic(s)).collect::<Result<_, _>>()?;
    println!("unit-edge mesh measured in the sizemap:");
    print!("{}", edge_histogram(&mesh, &metric, &DEFAULT_BINS)?.to_table());

    let path = std::env::temp_dir().join("spiral.sol");
    write_scalar_sol(&h, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
