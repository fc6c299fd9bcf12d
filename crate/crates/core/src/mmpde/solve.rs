use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::levelset::FieldSource;
use crate::mesh::{build_adjacency, signed_area, Mesh, Vec2};
use crate::monitor::{build_monitor_field, MonitorField, MonitorInputs, MonitorSpec};

use super::jacobi::{jacobi_sweep_scaled, BoundaryCondition, Constraints};
use super::system::{assemble_elasticity_with, assemble_laplacian_with, AssembledSystem, Pattern};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Closure {
    /// `σ(δ) = ω(x) ∇_ξ δ`; the stiffness is reassembled every iteration.
    Laplacian,
    /// `σ(δ) = 2μ ε(δ) + λ tr ε(δ) I`; the stiffness is assembled once.
    Elasticity { mu: f64, lambda: f64 },
}

impl Closure {
    pub fn elasticity(mu: f64, lambda: f64) -> Self {
        Self::Elasticity { mu, lambda }
    }
}

impl FromStr for Closure {
    type Err = String;

    /// `laplace`, `elasticity` (μ = λ = 1) or `elasticity:μ,λ`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "laplace" || s == "laplacian" => Ok(Self::Laplacian),
            None if s == "elasticity" => Ok(Self::elasticity(1.0, 1.0)),
            Some(("elasticity", args)) => {
                let v: Vec<f64> = args
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
                    .collect::<std::result::Result<_, _>>()?;
                match v[..] {
                    [mu, lambda] => Ok(Self::elasticity(mu, lambda)),
                    _ => Err(format!("elasticity expects mu,lambda, got {} values", v.len())),
                }
            }
            _ => Err(format!("unknown closure `{s}` (laplace | elasticity[:mu,lambda])")),
        }
    }
}

impl fmt::Display for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Laplacian => f.write_str("laplace"),
            Self::Elasticity { mu, lambda } => write!(f, "elasticity:{mu},{lambda}"),
        }
    }
}

/// What to do when an iterate inverts elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Safeguard {
    /// Retry with the increment halved, at most 10 times.
    #[default]
    RejectAndHalve,
    /// Clamp each vertex increment to a fraction of its shortest incident
    /// edge, then fall back to halving.
    Clamp,
}

impl FromStr for Safeguard {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "halve" | "reject-and-halve" => Ok(Self::RejectAndHalve),
            "clamp" => Ok(Self::Clamp),
            _ => Err(format!("unknown safeguard `{s}` (halve | clamp)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub closure: Closure,
    pub max_outer_iters: usize,
    pub jacobi_sweeps_per_outer: usize,
    /// Stop once the increment norm falls below this fraction of the first.
    pub residual_drop: f64,
    /// Scaling of every Jacobi update, in `(0, 1]`.
    pub step_limiter: f64,
    pub safeguard: Safeguard,
    /// Fraction of the shortest incident edge allowed per increment under
    /// [`Safeguard::Clamp`].
    pub clamp_fraction: f64,
    /// Relaxation time; adds lumped-mass damping when positive.
    pub tau: f64,
    pub boundary: BoundaryCondition,
    /// Evaluate ω once on the reference configuration and keep it.
    pub freeze_monitor: bool,
    /// Fix the reference gradient of capped monitors after the first evaluation.
    pub freeze_reference_gradient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            closure: Closure::Laplacian,
            max_outer_iters: 5000,
            jacobi_sweeps_per_outer: 1,
            residual_drop: 1e-3,
            step_limiter: 1.0,
            safeguard: Safeguard::RejectAndHalve,
            clamp_fraction: 0.25,
            tau: 0.0,
            boundary: BoundaryCondition::Dirichlet,
            freeze_monitor: false,
            freeze_reference_gradient: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Closure::Elasticity { mu, lambda } = self.closure {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::param("mu", format!("must be > 0, got {mu}")));
            }
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::param("lambda", format!("must be >= 0, got {lambda}")));
            }
        }
        if self.max_outer_iters == 0 {
            return Err(Error::param("max_outer_iters", "must be >= 1"));
        }
        if self.jacobi_sweeps_per_outer == 0 {
            return Err(Error::param("jacobi_sweeps_per_outer", "must be >= 1"));
        }
        if !(self.residual_drop > 0.0 && self.residual_drop < 1.0) {
            return Err(Error::param("residual_drop", format!("must lie in (0, 1), got {}", self.residual_drop)));
        }
        if !(self.step_limiter > 0.0 && self.step_limiter <= 1.0) {
            return Err(Error::param("step_limiter", format!("must lie in (0, 1], got {}", self.step_limiter)));
        }
        if !(self.clamp_fraction > 0.0 && self.clamp_fraction <= 1.0) {
            return Err(Error::param("clamp_fraction", format!("must lie in (0, 1], got {}", self.clamp_fraction)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Fields feeding the monitor, evaluated at the moving positions.
#[derive(Clone, Debug, Default)]
pub struct MonitorSources {
    pub phi: Option<FieldSource>,
    pub u: Option<FieldSource>,
    pub depth: Option<FieldSource>,
    pub eta: Option<FieldSource>,
}

impl MonitorSources {
    pub fn level_set(phi: impl Into<FieldSource>) -> Self {
        Self { phi: Some(phi.into()), ..Default::default() }
    }

    pub fn solution(u: impl Into<FieldSource>) -> Self {
        Self { u: Some(u.into()), ..Default::default() }
    }

    fn evaluate(&self, mesh: &Mesh, positions: &[Vec2], spec: &MonitorSpec) -> Result<MonitorField> {
        let sample = |s: &Option<FieldSource>| s.as_ref().map(|s| s.sample_at(positions)).transpose();
        let (phi, u, depth, eta) = (sample(&self.phi)?, sample(&self.u)?, sample(&self.depth)?, sample(&self.eta)?);
        let inputs =
            MonitorInputs { phi: phi.as_ref(), u: u.as_ref(), depth: depth.as_ref(), eta: eta.as_ref() };
        build_monitor_field(mesh, positions, spec, &inputs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub iteration: usize,
    /// RMS of the Jacobi increment before any safeguard.
    pub residual: f64,
    pub residual_ratio: f64,
    pub min_signed_area: f64,
    /// Inverted elements seen in rejected trial steps of this iteration.
    pub inversions: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub converged: bool,
}

impl Diagnostics {
    pub const CSV_HEADER: &'static str = "iteration,residual,residual_ratio,min_signed_area,inversions,wall_ms";

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.residual).collect()
    }

    pub fn final_ratio(&self) -> f64 {
        self.rows.last().map_or(1.0, |r| r.residual_ratio)
    }

    pub fn total_inversions(&self) -> usize {
        self.rows.iter().map(|r| r.inversions).sum()
    }

    pub fn wall_ms(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.wall_ms)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{:.3}",
                r.iteration, r.residual, r.residual_ratio, r.min_signed_area, r.inversions, r.wall_ms
            )?;
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct Solution {
    pub displacement: VectorField,
    pub diagnostics: Diagnostics,
    /// Monitor of the last iteration.
    pub monitor: MonitorField,
}

impl fmt::Debug for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solution")
            .field("vertices", &self.displacement.len())
            .field("max_displacement", &self.displacement.max_norm())
            .field("iterations", &self.diagnostics.iterations())
            .field("converged", &self.diagnostics.converged)
            .finish_non_exhaustive()
    }
}

/// Reference mesh moved by `delta`. Validity is not checked.
pub fn apply_displacement(mesh: &Mesh, delta: &[Vec2]) -> Mesh {
    let positions: Vec<Vec2> = mesh.positions().iter().zip(delta).map(|(p, d)| p + d).collect();
    mesh.with_positions(&positions)
}

fn rms(v: &[Vec2]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x.norm_squared()).sum::<f64>() / v.len() as f64).sqrt()
}

fn area_check(mesh: &Mesh, positions: &[Vec2]) -> (usize, f64) {
    let mut inverted = 0;
    let mut min_area = f64::INFINITY;
    for tri in mesh.triangles() {
        let [a, b, c] = tri.vertices.map(|i| positions[i]);
        let s = signed_area(a, b, c);
        if !(s > 0.0) {
            inverted += 1;
        }
        min_area = min_area.min(s);
    }
    (inverted, min_area)
}

fn moved(reference: &[Vec2], delta: &[Vec2]) -> Vec<Vec2> {
    reference.iter().zip(delta).map(|(p, d)| p + d).collect()
}

/// Solves with homogeneous boundary data of kind `config.boundary`.
pub fn solve(mesh: &Mesh, spec: &MonitorSpec, sources: &MonitorSources, config: &SolverConfig) -> Result<Solution> {
    let constraints = Constraints::for_mesh(mesh, config.boundary)?;
    solve_constrained(mesh, spec, sources, config, &constraints)
}

/// Outer Picard loop: evaluate ω on the current configuration, reassemble,
/// relax, and accept the step once the moved mesh is valid.
pub fn solve_constrained(
    mesh: &Mesh,
    spec: &MonitorSpec,
    sources: &MonitorSources,
    config: &SolverConfig,
    constraints: &Constraints,
) -> Result<Solution> {
    config.validate()?;
    spec.validate()?;
    let n = mesh.num_vertices();
    if constraints.len() != n {
        return Err(Error::FieldLength { expected: n, got: constraints.len() });
    }
    let start = Instant::now();
    let pattern = Pattern::new(mesh)?;
    let reference = mesh.positions();
    // Increments at this level are rounding noise of a zero force.
    let roundoff = 1e-14 * mesh.bounding_box_diagonal();
    let neighbors = match config.safeguard {
        Safeguard::Clamp => Some(build_adjacency(mesh)?.neighbors),
        Safeguard::RejectAndHalve => None,
    };

    let mut delta = vec![Vec2::zeros(); n];
    constraints.impose(&mut delta);
    let (inverted, _) = area_check(mesh, &moved(&reference, &delta));
    if inverted > 0 {
        return Err(Error::param("boundary data", format!("initial displacement inverts {inverted} elements")));
    }

    let mut spec = spec.clone();
    let mut frozen: Option<MonitorField> = None;
    let mut elastic_k: Option<AssembledSystem> = None;
    let mut first_residual: Option<f64> = None;
    let mut diagnostics = Diagnostics::default();
    let mut omega;

    for iteration in 1..=config.max_outer_iters {
        let positions = moved(&reference, &delta);
        omega = match &frozen {
            Some(w) => w.clone(),
            None => {
                let w = sources.evaluate(mesh, &positions, &spec)?;
                if iteration == 1 && config.freeze_reference_gradient {
                    if let Some(r) = w.reference_gradient.filter(|r| *r > 0.0) {
                        spec = spec.with_reference_gradient(r);
                    }
                }
                if config.freeze_monitor {
                    frozen = Some(w.clone());
                }
                w
            }
        };

        let mut system = match config.closure {
            Closure::Laplacian => assemble_laplacian_with(&pattern, mesh, &omega)?,
            Closure::Elasticity { mu, lambda } => {
                let k = match elastic_k.take() {
                    Some(mut k) => {
                        k.set_force(&pattern, mesh, &omega)?;
                        k
                    }
                    None => assemble_elasticity_with(&pattern, mesh, mu, lambda, &omega)?,
                };
                if config.tau == 0.0 {
                    elastic_k = Some(k.clone());
                }
                k
            }
        };
        system.add_relaxation(&pattern, config.tau, &delta);

        let mut trial = delta.clone();
        for _ in 0..config.jacobi_sweeps_per_outer {
            trial = jacobi_sweep_scaled(&system, &trial, constraints, config.step_limiter)?;
        }
        let mut increment: Vec<Vec2> = trial.iter().zip(&delta).map(|(t, d)| t - d).collect();
        constraints.project_increment(&mut increment);
        let residual = rms(&increment);
        let r0 = *first_residual.get_or_insert(residual);
        let residual_ratio = if r0 > 0.0 { residual / r0 } else { 0.0 };

        if let Some(nb) = &neighbors {
            for (i, inc) in increment.iter_mut().enumerate() {
                let shortest = nb[i].iter().map(|&j| (positions[j] - positions[i]).norm()).fold(f64::INFINITY, f64::min);
                let limit = config.clamp_fraction * shortest;
                let len = inc.norm();
                if len > limit {
                    *inc *= limit / len;
                }
            }
        }

        let mut inversions = 0;
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..=10 {
            let candidate: Vec<Vec2> = delta.iter().zip(&increment).map(|(d, inc)| d + inc * scale).collect();
            let (inverted, min_area) = area_check(mesh, &moved(&reference, &candidate));
            if inverted == 0 {
                accepted = Some((candidate, min_area));
                break;
            }
            inversions += inverted;
            scale *= 0.5;
        }
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let Some((candidate, min_signed_area)) = accepted else {
            let (_, min_signed_area) = area_check(mesh, &positions);
            diagnostics.rows.push(DiagnosticRow {
                iteration,
                residual,
                residual_ratio,
                min_signed_area,
                inversions,
                wall_ms,
            });
            log::warn!("iteration {iteration}: safeguard exhausted with {inversions} inverted elements");
            return Err(Error::InversionUnrecoverable {
                iteration,
                last_valid: Box::new(Solution { displacement: delta.into(), diagnostics, monitor: omega }),
            });
        };
        if scale < 1.0 {
            log::debug!("iteration {iteration}: step scaled by {scale} to avoid inversion");
        }
        delta = candidate;
        diagnostics.rows.push(DiagnosticRow { iteration, residual, residual_ratio, min_signed_area, inversions, wall_ms });
        if iteration % 500 == 0 {
            log::info!("iteration {iteration}: residual {residual:e}, ratio {residual_ratio:e}");
        }
        if residual_ratio < config.residual_drop || residual <= roundoff {
            diagnostics.converged = true;
            return Ok(Solution { displacement: delta.into(), diagnostics, monitor: omega });
        }
        if iteration == config.max_outer_iters {
            log::warn!("no convergence after {iteration} iterations (ratio {residual_ratio:e})");
            return Ok(Solution { displacement: delta.into(), diagnostics, monitor: omega });
        }
    }
    unreachable!("max_outer_iters >= 1")
}
