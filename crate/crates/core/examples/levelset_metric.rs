//! Anisotropic metric resolving a level set, intersected with a Hessian
//! metric of a solution field.

use adapt2d::levelset::{sample, AnalyticLevelSet};
use adapt2d::mesh::{generate_equilateral, Rect, Vec2};
use adapt2d::metric::{intersect_fields, levelset_metric, physical_metric, recover_hessian, MetricBounds, SpdTensor2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_equilateral(&Rect::square(1.0), 0.02)?;
    let flower = AnalyticLevelSet::default_flower();
    let phi = sample(&mesh, |p| flower.eval(p))?;
    let bounds = MetricBounds::new(1e-3, 0.25)?;

    let ls = levelset_metric(&mesh, &phi, 2e-3, 0.05, &bounds)?;
    println!("level-set metric: {} degenerate vertices in the band", ls.degenerate_vertices);

    let u = sample(&mesh, |p| (-(p - Vec2::new(0.3, 0.3)).norm_squared() * 40.0).exp())?;
    let physical = physical_metric(&recover_hessian(&mesh, &u)?, &bounds)?;
    let both = intersect_fields(&ls.metric, &physical)?;

    let sizes = |m: &SpdTensor2| {
        let [l1, l2] = m.decompose().eigenvalues;
        format!("{:.2e} x {:.2e}", 1.0 / l1.sqrt(), 1.0 / l2.sqrt())
    };
    for probe in [Vec2::new(0.0, 0.0), Vec2::new(0.3, 0.3), Vec2::new(0.7, 0.0)] {
        let v = (0..mesh.num_vertices())
            .min_by(|&a, &b| (mesh.position(a) - probe).norm().total_cmp(&(mesh.position(b) - probe).norm()))
            .unwrap();
        let p = mesh.position(v);
        println!(
            "({:+.3}, {:+.3}): level set {}, solution {}, intersection {}",
            p.x,
            p.y,
            sizes(&ls.metric[v]),
            sizes(&physical[v]),
            sizes(&both[v])
        );
    }
    Ok(())
}
