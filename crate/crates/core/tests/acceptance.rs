//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use adapt2d::io::{mesh_to_string, parse_mesh, parse_sol, sol_to_string, SolData};
use adapt2d::levelset::{sample, spiral_sizemap, AnalyticLevelSet, SpiralSizemapParams};
use adapt2d::mesh::{build_adjacency, generate_equilateral, generate_uniform, validate, Mesh, Rect, Vec2};
use adapt2d::metric::{intersect, physical_metric, recover_hessian, MetricBounds, MetricField, SpdTensor2, SymTensor2};
use adapt2d::mmpde::{apply_displacement, assemble_elasticity, solve, Closure, MonitorSources, Solution, SolverConfig};
use adapt2d::monitor::{build_monitor_field, omega_pc, GradientBased, MonitorInputs, MonitorSpec, PiecewiseConstant};
use adapt2d::quality::{compression_ratio, edge_histogram, narrow_band_stats, NarrowBandStats, DEFAULT_BINS};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const BAND: f64 = 1e-2;
const HALF_WIDTH: f64 = 1.25;
const H: f64 = 0.0158;
const ELASTIC_MU: f64 = 0.75;
const ELASTIC_LAMBDA: f64 = 0.25;
const KAPPA_MAX: f64 = 4.0;

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        let line = format!("criterion {id:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        let mut out = std::io::stdout().lock();
        writeln!(out, "{line}").unwrap();
        out.flush().unwrap();
        self.lines.push((id, pass, line));
    }
}

struct Run {
    reference: Mesh,
    adapted: Mesh,
    solution: Solution,
    seconds: f64,
    topology_kept: bool,
}

fn run(mesh: &Mesh, ls: AnalyticLevelSet, spec: MonitorSpec, config: SolverConfig) -> Run {
    let before = build_adjacency(mesh).unwrap().fingerprint();
    let start = Instant::now();
    let solution = solve(mesh, &spec, &MonitorSources::level_set(ls), &config).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let adapted = apply_displacement(mesh, &solution.displacement);
    let topology_kept = build_adjacency(&adapted).unwrap().fingerprint() == before && validate(mesh, Some(&solution.displacement)).is_valid();
    Run { reference: mesh.clone(), adapted, solution, seconds, topology_kept }
}

fn band(mesh: &Mesh, ls: &AnalyticLevelSet) -> NarrowBandStats {
    narrow_band_stats(mesh, &sample(mesh, |p| ls.eval(p)).unwrap(), BAND).unwrap()
}

fn laplace_config() -> SolverConfig {
    SolverConfig { jacobi_sweeps_per_outer: 5, max_outer_iters: 20_000, ..Default::default() }
}

fn elastic_config() -> SolverConfig {
    SolverConfig { closure: Closure::elasticity(ELASTIC_MU, ELASTIC_LAMBDA), ..laplace_config() }
}

fn laplace_monitor() -> MonitorSpec {
    MonitorSpec::GradientBased(GradientBased::constant(1.0, 40.0, 300.0))
}

fn elastic_monitor() -> MonitorSpec {
    let mut gb = GradientBased::curvature_scaled(2.5, 30.0, 200.0);
    if let adapt2d::monitor::Offset::Curvature { kappa_max, .. } = &mut gb.offset {
        *kappa_max = KAPPA_MAX;
    }
    MonitorSpec::GradientBased(gb)
}

fn random_spd(rng: &mut StdRng, lo: f64, hi: f64) -> SpdTensor2 {
    let t = rng.random_range(0.0..PI);
    let l1 = lo * (hi / lo).powf(rng.random::<f64>());
    let l2 = lo * (hi / lo).powf(rng.random::<f64>());
    SpdTensor2::from_sym(SymTensor2::from_frame(Vec2::new(t.cos(), t.sin()), [l1, l2])).unwrap()
}

fn metric_laws(r: &mut Report, rng: &mut StdRng) {
    let bounds = MetricBounds::new(1e-3, 0.5).unwrap();
    let hessians: Vec<SymTensor2> = (0..10_000)
        .map(|_| {
            let scale = 10f64.powf(rng.random_range(-6.0..8.0));
            SymTensor2::new(
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
                scale * rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let start = Instant::now();
    let m = physical_metric(&hessians, &bounds).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (lo, hi) = (bounds.lambda_min() * (1.0 - 1e-12), bounds.lambda_max() * (1.0 + 1e-12));
    let inside = m.iter().filter(|t| t.decompose().eigenvalues.iter().all(|&l| l >= lo && l <= hi)).count();
    r.record(
        1,
        "metric eigenvalue bounds",
        inside == hessians.len() && secs < 1.0,
        format!("{inside}/{} within [1/h_max², 1/h_min²], {secs:.3} s (< 1 s)", hessians.len()),
    );
}

fn intersection_containment(r: &mut Report, rng: &mut StdRng) {
    let mut worst = f64::INFINITY;
    let mut self_err: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_spd(rng, 1e-2, 1e4);
        let b = random_spd(rng, 1e-2, 1e4);
        let m = intersect(&a, &b);
        for k in 0..100 {
            let t = PI * k as f64 / 100.0;
            let v = Vec2::new(t.cos(), t.sin());
            let lhs = m.sym().quad(v);
            let rhs = a.sym().quad(v).max(b.sym().quad(v));
            worst = worst.min((lhs - rhs) / rhs.max(1.0));
        }
        let s = intersect(&a, &a);
        self_err = self_err.max((s.sym().to_matrix() - a.sym().to_matrix()).amax() / a.sym().max_abs());
    }
    r.record(
        2,
        "intersection containment",
        worst >= -1e-9 && self_err <= 1e-12,
        format!("min scaled v·(M∩ − max)v = {worst:.2e} (≥ −1e−9), |M∩M − M| = {self_err:.2e} (≤ 1e−12)"),
    );
}

fn hessian_recovery(r: &mut Report) {
    let mesh = generate_uniform(&Rect::square(1.0), 0.05).unwrap();
    let u = sample(&mesh, |p| p.x * p.x + p.x * p.y + p.y * p.y).unwrap();
    let h = recover_hessian(&mesh, &u).unwrap();
    let exact = SymTensor2::new(2.0, 1.0, 2.0).to_matrix();
    let adj = build_adjacency(&mesh).unwrap();
    // Interior: not on the boundary and not next to it.
    let near_boundary: Vec<bool> =
        (0..mesh.num_vertices()).map(|v| adj.boundary_vertex[v] || adj.neighbors[v].iter().any(|&w| adj.boundary_vertex[w])).collect();
    let worst = (0..mesh.num_vertices())
        .filter(|&v| !near_boundary[v])
        .map(|v| (h[v].to_matrix() - exact).norm() / exact.norm())
        .fold(0.0, f64::max);
    r.record(3, "Hessian recovery of a quadratic", worst <= 0.1, format!("max interior relative error {worst:.2e} (≤ 10%)"));
}

fn fixed_points_and_null_space(r: &mut Report) -> bool {
    let mesh = generate_uniform(&Rect::square(1.0), 0.1).unwrap();
    let flat = MonitorSpec::GradientBased(GradientBased::constant(2.0, 0.0, 1.0));
    let ls = AnalyticLevelSet::circle(Vec2::zeros(), 0.5);
    let mut max_delta: f64 = 0.0;
    let mut kept = true;
    for config in [laplace_config(), elastic_config()] {
        let run = run(&mesh, ls, flat.clone(), config);
        kept &= run.topology_kept && run.solution.diagnostics.converged;
        max_delta = max_delta.max(run.solution.displacement.max_norm());
    }
    let k = assemble_elasticity(&mesh, 1.0, 1.0, &vec![1.0; mesh.num_vertices()]).unwrap();
    let scale = k.max_abs();
    let translation = vec![Vec2::new(0.3, -0.7); mesh.num_vertices()];
    let rotation: Vec<Vec2> = mesh.positions().iter().map(|p| Vec2::new(-p.y, p.x)).collect();
    let kt = k.apply(&translation).iter().map(|v| v.amax()).fold(0.0, f64::max) / scale;
    let kr = k.apply(&rotation).iter().map(|v| v.amax()).fold(0.0, f64::max) / scale;
    r.record(
        4,
        "fixed point and elastic null space",
        max_delta < 1e-12 && kt <= 1e-10 && kr <= 1e-10 && kept,
        format!("constant ω max|δ| = {max_delta:.1e} (< 1e−12), |K·t| = {kt:.1e}, |K·r| = {kr:.1e} (≤ 1e−10)"),
    );
    kept
}

fn circle_trend(r: &mut Report, run: &Run, ls: &AnalyticLevelSet) {
    let d = &run.solution.diagnostics;
    let before = band(&run.reference, ls).h.unwrap().avg;
    let after = band(&run.adapted, ls).h.unwrap().avg;
    let factor = before / after;
    let inversions = validate(&run.reference, Some(&run.solution.displacement)).inverted.len();
    r.record(
        5,
        "Laplacian circle run",
        d.converged && d.final_ratio() <= 1e-3 && inversions == 0 && factor >= 1.8 && run.seconds < 60.0,
        format!(
            "converged {} (ratio {:.2e}), {inversions} inverted, band av. h {before:.3e} -> {after:.3e} (factor {factor:.2}, ≥ 1.8), {:.1} s (< 60 s)",
            d.converged,
            d.final_ratio(),
            run.seconds
        ),
    );
}

fn anisotropy_trend(r: &mut Report, cases: &[(&str, AnalyticLevelSet, &Run, &Run)]) {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, ls, lap, ela) in cases {
        let (sl, se) = (band(&lap.adapted, ls), band(&ela.adapted, ls));
        let (ql, qe) = (sl.q_iso.unwrap().avg, se.q_iso.unwrap().avg);
        pass &= qe >= 1.5 * ql && se.count > sl.count && ela.solution.diagnostics.converged;
        detail.push(format!(
            "{name}: av. Q_iso {qe:.3} vs {ql:.3} (+{:.0}%, ≥ +50%), count {} vs {}",
            100.0 * (qe / ql - 1.0),
            se.count,
            sl.count
        ));
    }
    r.record(6, "elasticity more anisotropic than Laplacian", pass, detail.join("; "));
}

fn piecewise_exactness(r: &mut Report) {
    let mesh = generate_uniform(&Rect::square(3.0), 0.1).unwrap();
    let ls = AnalyticLevelSet::circle(Vec2::zeros(), 0.5);
    let phi = sample(&mesh, |p| ls.eval(p)).unwrap();
    let pc = PiecewiseConstant::four_band();
    let inputs = MonitorInputs { phi: Some(&phi), ..Default::default() };
    let w = build_monitor_field(&mesh, &mesh.positions(), &MonitorSpec::PiecewiseConstant(pc.clone()), &inputs).unwrap();
    let levels = [225.0, 90.0, 70.0, 20.0];
    let present = levels.iter().filter(|&&l| w.iter().any(|&x| x == l)).count();
    let only_levels = w.iter().all(|x| levels.contains(x));
    let brute = |d: f64| {
        if d <= 0.05 {
            225.0
        } else if d <= 1.0 {
            90.0
        } else if d <= 1.75 {
            70.0
        } else {
            20.0
        }
    };
    let mismatches = (0..mesh.num_vertices()).filter(|&v| w[v] != brute(phi[v].abs()) || omega_pc(phi[v], &pc) != w[v]).count();
    r.record(
        7,
        "piecewise-constant monitor levels",
        present == 4 && only_levels && mismatches == 0,
        format!("{present}/4 levels present, only listed levels: {only_levels}, {mismatches} band mismatches"),
    );
}

fn compression_localization(r: &mut Report, run: &Run, ls: &AnalyticLevelSet) {
    let qr = compression_ratio(&run.reference, &run.adapted).unwrap();
    let threshold = qr.quantile_from_top(0.1);
    let top: Vec<usize> = (0..qr.len()).filter(|&t| qr[t] >= threshold).collect();
    let off = top.iter().filter(|&&t| ls.eval(run.adapted.centroid(t)).abs() >= 0.1).count();
    r.record(
        8,
        "compression localized at the interface",
        off == 0 && !top.is_empty(),
        format!("{} top-decile elements (Q_r ≥ {threshold:.3}), {off} with centroid |Φ| ≥ 0.1", top.len()),
    );
}

/// Direct transcription of the sizemap formula.
fn spiral_reference(x: f64, y: f64) -> f64 {
    let (a, s) = (0.6, 0.5);
    let phi = f64::atan2(y, x);
    let rho = s * (x * x + y * y).sqrt();
    let theta1 = phi + PI * (1.0 + (rho / (2.0 * PI * a)).floor());
    let theta2 = phi - PI * (1.0 + (rho / (2.0 * PI * a)).floor());
    f64::min(1.6 + (rho - a * theta1).abs() + 0.005, 1.6 + (rho + a * theta2).abs() + 0.0125)
}

fn spiral_oracle(r: &mut Report, rng: &mut StdRng) {
    let params = SpiralSizemapParams::default();
    let worst = (0..10_000)
        .map(|_| {
            let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            (spiral_sizemap(Vec2::new(x, y), &params) - spiral_reference(x, y)).abs()
        })
        .fold(0.0, f64::max);
    let a0 = spiral_sizemap(Vec2::new(0.0, 0.0), &params);
    let a10 = spiral_sizemap(Vec2::new(10.0, 0.0), &params);
    r.record(
        9,
        "spiral sizemap",
        worst <= 1e-12 && (a0 - 3.4899).abs() < 1e-4 && (a10 - 2.8351).abs() < 1e-4,
        format!("max deviation {worst:.1e} (≤ 1e−12), h(0,0) = {a0:.6}, h(10,0) = {a10:.6}"),
    );
}

fn histogram_partition(r: &mut Report, rng: &mut StdRng, adapted: &Mesh) {
    let mut sum_err: f64 = 0.0;
    let mut counts_ok = true;
    let random_metric = |m: &Mesh, rng: &mut StdRng| -> MetricField { (0..m.num_vertices()).map(|_| random_spd(rng, 1.0, 1e4)).collect() };
    let meshes = [generate_uniform(&Rect::square(1.0), 0.1).unwrap(), adapted.clone()];
    for m in &meshes {
        let metric = random_metric(m, rng);
        let hist = edge_histogram(m, &metric, &DEFAULT_BINS).unwrap();
        sum_err = sum_err.max((hist.percentages().iter().sum::<f64>() - 100.0).abs());
        let edges = build_adjacency(m).unwrap().edges.len();
        counts_ok &= hist.counts.iter().sum::<usize>() == edges && hist.total == edges;
    }
    let h = 0.01;
    let unit = generate_equilateral(&Rect::square(1.0), h).unwrap();
    let metric = MetricField::uniform(unit.num_vertices(), SpdTensor2::isotropic(h).unwrap());
    let hist = edge_histogram(&unit, &metric, &DEFAULT_BINS).unwrap();
    let k = DEFAULT_BINS.iter().position(|&b| b == 0.9).unwrap();
    let unit_share = hist.percentages()[k];
    r.record(
        10,
        "edge-length histogram partition",
        sum_err <= 0.01 && counts_ok && unit_share >= 99.0,
        format!("|Σ% − 100| = {sum_err:.1e}, counts match edges: {counts_ok}, unit mesh in (0.9, 1.3]: {unit_share:.2}%"),
    );
}

fn io_round_trip(r: &mut Report, run: &Run, ls: &AnalyticLevelSet) {
    let dir = tempfile::tempdir().unwrap();
    let phi = sample(&run.adapted, |p| ls.eval(p)).unwrap();
    let bounds = MetricBounds::new(1e-3, 0.2).unwrap();
    let metric = physical_metric(&recover_hessian(&run.adapted, &phi).unwrap(), &bounds).unwrap();
    let mut identical = 0;
    let mut total = 0;
    for m in [&run.reference, &run.adapted] {
        let first = mesh_to_string(m);
        let path = dir.path().join("m.mesh");
        std::fs::write(&path, &first).unwrap();
        let back = parse_mesh(&std::fs::read_to_string(&path).unwrap(), "m.mesh").unwrap();
        total += 1;
        identical += usize::from(mesh_to_string(&back) == first && back == *m);
    }
    let sols = [
        vec![SolData::from(&phi)],
        vec![SolData::from(&metric)],
        vec![SolData::Vector(run.solution.displacement.to_vec())],
    ];
    for fields in &sols {
        let first = sol_to_string(fields).unwrap();
        let path = dir.path().join("f.sol");
        std::fs::write(&path, &first).unwrap();
        let back = parse_sol(&std::fs::read_to_string(&path).unwrap(), "f.sol", None).unwrap();
        total += 1;
        identical += usize::from(sol_to_string(&back).unwrap() == first && back == *fields);
    }
    r.record(11, "mesh and sol round trips", identical == total, format!("{identical}/{total} files byte-identical after write-read-write"));
}

#[test]
fn acceptance_criteria() {
    let mut r = Report { lines: Vec::new() };
    let mut rng = StdRng::seed_from_u64(20_251_016);

    metric_laws(&mut r, &mut rng);
    intersection_containment(&mut r, &mut rng);
    hessian_recovery(&mut r);
    let mut topology = vec![fixed_points_and_null_space(&mut r)];

    let mesh = generate_equilateral(&Rect::square(HALF_WIDTH), H).unwrap();
    let circle = AnalyticLevelSet::circle(Vec2::zeros(), 0.5);
    let flower = AnalyticLevelSet::default_flower();
    let circle_lap = run(&mesh, circle, laplace_monitor(), laplace_config());
    circle_trend(&mut r, &circle_lap, &circle);
    let circle_ela = run(&mesh, circle, elastic_monitor(), elastic_config());
    let flower_lap = run(&mesh, flower, laplace_monitor(), laplace_config());
    let flower_ela = run(&mesh, flower, elastic_monitor(), elastic_config());
    anisotropy_trend(
        &mut r,
        &[("circle", circle, &circle_lap, &circle_ela), ("flower", flower, &flower_lap, &flower_ela)],
    );
    piecewise_exactness(&mut r);
    compression_localization(&mut r, &circle_lap, &circle);
    spiral_oracle(&mut r, &mut rng);
    histogram_partition(&mut r, &mut rng, &circle_lap.adapted);
    io_round_trip(&mut r, &circle_lap, &circle);

    topology.extend([&circle_lap, &circle_ela, &flower_lap, &flower_ela].iter().map(|run| run.topology_kept));
    let kept = topology.iter().filter(|&&k| k).count();
    r.record(
        12,
        "topology preserved by every solve",
        kept == topology.len(),
        format!("{kept}/{} solves with identical adjacency hash and no inverted element", topology.len()),
    );

    let failed: Vec<&str> = r.lines.iter().filter(|l| !l.1).map(|l| l.2.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
    assert_eq!(r.lines.len(), 12);
}
