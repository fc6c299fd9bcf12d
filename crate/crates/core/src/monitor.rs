//! Monitor functions: scalar stiffness weights that attract mesh nodes.
//!
//! Every formula is available as a pointwise function; [`build_monitor_field`]
//! assembles one over a mesh, taking gradients with respect to the current
//! (moved) vertex positions.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::levelset::{curvature_at, gradient_at, DEFAULT_KAPPA_MAX};
use crate::mesh::{Mesh, Vec2};
use crate::metric::recover_hessian_at;

/// Lower bound applied to every assembled monitor value.
pub const OMEGA_FLOOR: f64 = 1e-6;

/// `√(α₀ + α_Φ exp(−β_Φ Φ²))`.
pub fn omega_gb(phi: f64, alpha0: f64, alpha_phi: f64, beta_phi: f64) -> f64 {
    (alpha0 + alpha_phi * (-beta_phi * phi * phi).exp()).sqrt()
}

/// Band lookup on `|Φ|`: level `j` on `(Φ_{j−1}, Φ_j]`, the last level beyond
/// the last threshold.
pub fn omega_pc(phi: f64, spec: &PiecewiseConstant) -> f64 {
    let d = phi.abs();
    let band = spec.thresholds.iter().position(|&t| d <= t).unwrap_or(spec.thresholds.len());
    spec.levels[band]
}

/// `min(1, ‖∇u‖ / (β_u ‖∇u‖_ref))`; zero when the reference gradient vanishes.
pub fn capped_gradient(grad_norm: f64, beta_u: f64, grad_ref: f64) -> f64 {
    let scale = beta_u * grad_ref;
    if scale > 0.0 { (grad_norm / scale).min(1.0) } else { 0.0 }
}

/// `√(1 + α_u ĝ²)` for a capped gradient `ĝ`.
pub fn omega_solution(capped: f64, alpha_u: f64) -> f64 {
    (1.0 + alpha_u * capped * capped).sqrt()
}

/// Level-set monitor inside `|Φ| ≤ ε`, the larger of both outside.
pub fn omega_combined(phi: f64, omega_phi: f64, omega_u: f64, eps: f64) -> f64 {
    if phi.abs() <= eps { omega_phi } else { omega_phi.max(omega_u) }
}

/// Wet/dry indicator: 0 on dry land, 1 above `ε_H`, linear in between.
pub fn regularized_heaviside(depth: f64, eps_h: f64) -> Result<f64> {
    if depth < 0.0 {
        return Err(Error::param("depth", format!("negative water depth {depth}")));
    }
    Ok(if depth > eps_h { 1.0 } else { depth / eps_h })
}

/// `√(1 + α_η η̂² + α_dry ‖∇φ_H‖²)`.
pub fn omega_shoreline(capped_eta: f64, grad_phi_h_norm: f64, alpha_eta: f64, alpha_dry: f64) -> f64 {
    (1.0 + alpha_eta * capped_eta * capped_eta + alpha_dry * grad_phi_h_norm * grad_phi_h_norm).sqrt()
}

/// `(1 + α u + β ‖∇u‖ + γ ‖H(u)‖)^p`.
pub fn omega_general(u: f64, grad_norm: f64, hessian_norm: f64, g: &General) -> f64 {
    (1.0 + g.alpha * u + g.beta * grad_norm + g.gamma * hessian_norm).max(0.0).powf(g.p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Offset {
    Constant(f64),
    /// `α₀ = max(scale · |κ|, floor)` with κ the iso-line curvature capped
    /// at `kappa_max`.
    Curvature { scale: f64, floor: f64, kappa_max: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientBased {
    pub offset: Offset,
    pub alpha: f64,
    pub beta: f64,
}

impl GradientBased {
    pub fn constant(alpha0: f64, alpha: f64, beta: f64) -> Self {
        Self { offset: Offset::Constant(alpha0), alpha, beta }
    }

    /// Curvature-scaled offset with the default floor `0.1`.
    pub fn curvature_scaled(scale: f64, alpha: f64, beta: f64) -> Self {
        Self { offset: Offset::Curvature { scale, floor: 0.1, kappa_max: DEFAULT_KAPPA_MAX }, alpha, beta }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

impl PiecewiseConstant {
    /// `levels.len()` must be `thresholds.len() + 1`.
    pub fn new(thresholds: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != thresholds.len() + 1 || thresholds.is_empty() {
            return Err(Error::param(
                "pc",
                format!("{} thresholds need {} levels, got {}", thresholds.len(), thresholds.len() + 1, levels.len()),
            ));
        }
        if thresholds.windows(2).any(|w| !(w[1] > w[0])) || !(thresholds[0] >= 0.0) {
            return Err(Error::param("pc", "thresholds must be non-negative and strictly increasing"));
        }
        if levels.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::param("pc", "levels must be positive"));
        }
        Ok(Self { thresholds, levels })
    }

    /// Four bands: thresholds `(0.05, 1, 1.75)`, levels `(225, 90, 70, 20)`.
    pub fn four_band() -> Self {
        Self::new(vec![0.05, 1.0, 1.75], vec![225.0, 90.0, 70.0, 20.0]).unwrap()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceGradient {
    /// Maximum gradient norm over the domain, recomputed at every evaluation.
    DomainMax,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionMonitor {
    pub alpha: f64,
    pub beta: f64,
    pub reference: ReferenceGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LevelSetMonitor {
    GradientBased(GradientBased),
    PiecewiseConstant(PiecewiseConstant),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Combined {
    pub eps: f64,
    pub inner: LevelSetMonitor,
    pub outer: SolutionMonitor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shoreline {
    pub eps_h: f64,
    pub alpha_eta: f64,
    pub alpha_dry: f64,
    /// Cap factor of the free-surface gradient.
    pub beta_eta: f64,
    pub reference: ReferenceGradient,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct General {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MonitorSpec {
    General(General),
    GradientBased(GradientBased),
    PiecewiseConstant(PiecewiseConstant),
    Solution(SolutionMonitor),
    Combined(Combined),
    Shoreline(Shoreline),
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() { Ok(()) } else { Err(Error::param(name, format!("must be >= 0, got {v}"))) }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::param(name, format!("must be > 0, got {v}"))) }
}

impl GradientBased {
    fn validate(&self) -> Result<()> {
        match self.offset {
            Offset::Constant(a0) => non_negative("alpha0", a0)?,
            Offset::Curvature { scale, floor, kappa_max } => {
                non_negative("alpha0 scale", scale)?;
                non_negative("alpha0 floor", floor)?;
                positive("kappa_max", kappa_max)?;
            }
        }
        non_negative("alpha_phi", self.alpha)?;
        non_negative("beta_phi", self.beta)?;
        let min_offset = match self.offset {
            Offset::Constant(a0) => a0,
            Offset::Curvature { floor, .. } => floor,
        };
        if !(min_offset + self.alpha > 0.0) {
            return Err(Error::param("alpha0", "alpha0 + alpha_phi must be positive"));
        }
        Ok(())
    }
}

impl SolutionMonitor {
    fn validate(&self) -> Result<()> {
        non_negative("alpha_u", self.alpha)?;
        positive("beta_u", self.beta)?;
        if let ReferenceGradient::Fixed(v) = self.reference {
            positive("grad_ref", v)?;
        }
        Ok(())
    }
}

impl MonitorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::General(g) => {
                non_negative("alpha", g.alpha)?;
                non_negative("beta", g.beta)?;
                non_negative("gamma", g.gamma)?;
                if !(g.p >= 1.0) {
                    return Err(Error::param("p", format!("must be >= 1, got {}", g.p)));
                }
                Ok(())
            }
            Self::GradientBased(gb) => gb.validate(),
            Self::PiecewiseConstant(_) => Ok(()),
            Self::Solution(s) => s.validate(),
            Self::Combined(c) => {
                positive("eps", c.eps)?;
                if let LevelSetMonitor::GradientBased(gb) = &c.inner {
                    gb.validate()?;
                }
                c.outer.validate()
            }
            Self::Shoreline(s) => {
                positive("eps_h", s.eps_h)?;
                non_negative("alpha_eta", s.alpha_eta)?;
                non_negative("alpha_dry", s.alpha_dry)?;
                positive("beta_eta", s.beta_eta)?;
                Ok(())
            }
        }
    }

    /// Which input fields the spec reads.
    pub fn requirements(&self) -> Requirements {
        match self {
            Self::General(_) | Self::Solution(_) => Requirements { u: true, ..Default::default() },
            Self::GradientBased(_) | Self::PiecewiseConstant(_) => Requirements { phi: true, ..Default::default() },
            Self::Combined(_) => Requirements { phi: true, u: true, ..Default::default() },
            Self::Shoreline(_) => Requirements { depth: true, eta: true, ..Default::default() },
        }
    }

    /// Replaces a domain-max reference gradient by a fixed value.
    pub fn with_reference_gradient(&self, value: f64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            Self::Solution(s) => s.reference = ReferenceGradient::Fixed(value),
            Self::Combined(c) => c.outer.reference = ReferenceGradient::Fixed(value),
            Self::Shoreline(s) => s.reference = ReferenceGradient::Fixed(value),
            _ => {}
        }
        spec
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Requirements {
    pub phi: bool,
    pub u: bool,
    pub depth: bool,
    pub eta: bool,
}

/// Per-vertex inputs sampled at the current positions.
#[derive(Clone, Copy, Debug, Default)]
pub struct MonitorInputs<'a> {
    pub phi: Option<&'a ScalarField>,
    pub u: Option<&'a ScalarField>,
    pub depth: Option<&'a ScalarField>,
    pub eta: Option<&'a ScalarField>,
}

/// One positive weight per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorField {
    values: Vec<f64>,
    /// Reference gradient used for capping, when the spec caps a gradient.
    pub reference_gradient: Option<f64>,
}

impl MonitorField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((vertex, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveMonitor { vertex, value });
        }
        Ok(Self { values, reference_gradient: None })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }
}

impl Deref for MonitorField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

fn require<'a>(field: Option<&'a ScalarField>, name: &'static str, n: usize) -> Result<&'a ScalarField> {
    let f = field.ok_or(Error::MissingField(name))?;
    f.check(n)?;
    Ok(f)
}

fn level_set_values(
    mesh: &Mesh,
    positions: &[Vec2],
    spec: &LevelSetMonitor,
    phi: &ScalarField,
) -> Result<Vec<f64>> {
    Ok(match spec {
        LevelSetMonitor::GradientBased(gb) => {
            let offsets: Vec<f64> = match gb.offset {
                Offset::Constant(a0) => vec![a0; phi.len()],
                Offset::Curvature { scale, floor, kappa_max } => {
                    let k = curvature_at(mesh, positions, phi, kappa_max)?;
                    k.values.iter().map(|kv| (scale * kv.abs()).max(floor)).collect()
                }
            };
            phi.iter().zip(offsets).map(|(&p, a0)| omega_gb(p, a0, gb.alpha, gb.beta)).collect()
        }
        LevelSetMonitor::PiecewiseConstant(pc) => phi.iter().map(|&p| omega_pc(p, pc)).collect(),
    })
}

/// Capped gradient norms of `u` and the reference value used.
fn capped_gradients(
    mesh: &Mesh,
    positions: &[Vec2],
    u: &ScalarField,
    beta: f64,
    reference: ReferenceGradient,
) -> Result<(Vec<f64>, f64)> {
    let norms: Vec<f64> = gradient_at(mesh, positions, u)?.iter().map(|g| g.norm()).collect();
    let grad_ref = match reference {
        ReferenceGradient::DomainMax => norms.iter().copied().fold(0.0, f64::max),
        ReferenceGradient::Fixed(v) => v,
    };
    Ok((norms.iter().map(|&g| capped_gradient(g, beta, grad_ref)).collect(), grad_ref))
}

/// Evaluates `spec` at every vertex of the configuration `positions`
/// (connectivity from `mesh`). Values are floored at [`OMEGA_FLOOR`].
pub fn build_monitor_field(
    mesh: &Mesh,
    positions: &[Vec2],
    spec: &MonitorSpec,
    inputs: &MonitorInputs<'_>,
) -> Result<MonitorField> {
    spec.validate()?;
    let n = mesh.num_vertices();
    if positions.len() != n {
        return Err(Error::FieldLength { expected: n, got: positions.len() });
    }
    let mut reference_gradient = None;
    let values: Vec<f64> = match spec {
        MonitorSpec::GradientBased(gb) => {
            let phi = require(inputs.phi, "phi", n)?;
            level_set_values(mesh, positions, &LevelSetMonitor::GradientBased(*gb), phi)?
        }
        MonitorSpec::PiecewiseConstant(pc) => {
            let phi = require(inputs.phi, "phi", n)?;
            level_set_values(mesh, positions, &LevelSetMonitor::PiecewiseConstant(pc.clone()), phi)?
        }
        MonitorSpec::Solution(s) => {
            let u = require(inputs.u, "u", n)?;
            let (capped, r) = capped_gradients(mesh, positions, u, s.beta, s.reference)?;
            reference_gradient = Some(r);
            capped.iter().map(|&c| omega_solution(c, s.alpha)).collect()
        }
        MonitorSpec::Combined(c) => {
            let phi = require(inputs.phi, "phi", n)?;
            let u = require(inputs.u, "u", n)?;
            let inner = level_set_values(mesh, positions, &c.inner, phi)?;
            let (capped, r) = capped_gradients(mesh, positions, u, c.outer.beta, c.outer.reference)?;
            reference_gradient = Some(r);
            (0..n)
                .map(|i| omega_combined(phi[i], inner[i], omega_solution(capped[i], c.outer.alpha), c.eps))
                .collect()
        }
        MonitorSpec::Shoreline(s) => {
            let depth = require(inputs.depth, "depth", n)?;
            let eta = require(inputs.eta, "eta", n)?;
            let phi_h = depth
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    regularized_heaviside(h, s.eps_h).map_err(|_| Error::NegativeDepth { vertex: i, depth: h })
                })
                .collect::<Result<ScalarField>>()?;
            let grad_phi_h = gradient_at(mesh, positions, &phi_h)?;
            let (capped, r) = capped_gradients(mesh, positions, eta, s.beta_eta, s.reference)?;
            reference_gradient = Some(r);
            (0..n)
                .map(|i| omega_shoreline(capped[i], grad_phi_h[i].norm(), s.alpha_eta, s.alpha_dry))
                .collect()
        }
        MonitorSpec::General(g) => {
            let u = require(inputs.u, "u", n)?;
            let grad = gradient_at(mesh, positions, u)?;
            let hess = if g.gamma != 0.0 { Some(recover_hessian_at(mesh, positions, u)?) } else { None };
            (0..n)
                .map(|i| {
                    let hn = hess.as_ref().map_or(0.0, |h| h[i].frobenius());
                    omega_general(u[i], grad[i].norm(), hn, g)
                })
                .collect()
        }
    };
    let values = values.into_iter().map(|w| w.max(OMEGA_FLOOR)).collect();
    let mut field = MonitorField::new(values)?;
    field.reference_gradient = reference_gradient;
    Ok(field)
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect()
}

fn expect_len(v: &[f64], n: usize, what: &str) -> std::result::Result<(), String> {
    if v.len() == n { Ok(()) } else { Err(format!("{what} expects {n} values, got {}", v.len())) }
}

fn parse_level_set_monitor(s: &str) -> std::result::Result<LevelSetMonitor, String> {
    match s.parse::<MonitorSpec>()? {
        MonitorSpec::GradientBased(gb) => Ok(LevelSetMonitor::GradientBased(gb)),
        MonitorSpec::PiecewiseConstant(pc) => Ok(LevelSetMonitor::PiecewiseConstant(pc)),
        _ => Err(format!("`{s}` is not a level-set monitor")),
    }
}

/// Compact syntax used by the command line and config files:
///
/// | spec | meaning |
/// |---|---|
/// | `gb:a0,aphi,bphi` | gradient based, constant offset |
/// | `gbk:scale,aphi,bphi[,floor[,kmax]]` | gradient based, offset `scale·|κ|` |
/// | `pc:t1,..,tn/w1,..,wn+1` | piecewise constant |
/// | `solution:au,bu` | capped solution gradient |
/// | `combined:eps,au,bu+<gb/gbk/pc spec>` | level-set inside the band, max outside |
/// | `shoreline:epsH,aeta,adry,beta` | wet/dry front |
/// | `general:a,b,g,p` | `(1 + a u + b|∇u| + g|H|)^p` |
impl FromStr for MonitorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, args) = s.split_once(':').ok_or_else(|| format!("monitor `{s}` lacks `kind:`"))?;
        let spec = match kind.trim() {
            "gb" => {
                let v = parse_list(args)?;
                expect_len(&v, 3, "gb")?;
                Self::GradientBased(GradientBased::constant(v[0], v[1], v[2]))
            }
            "gbk" => {
                let v = parse_list(args)?;
                if !(3..=5).contains(&v.len()) {
                    return Err(format!("gbk expects 3 to 5 values, got {}", v.len()));
                }
                let offset = Offset::Curvature {
                    scale: v[0],
                    floor: v.get(3).copied().unwrap_or(0.1),
                    kappa_max: v.get(4).copied().unwrap_or(DEFAULT_KAPPA_MAX),
                };
                Self::GradientBased(GradientBased { offset, alpha: v[1], beta: v[2] })
            }
            "pc" => {
                let (t, w) = args.split_once('/').ok_or("pc expects thresholds/levels")?;
                Self::PiecewiseConstant(PiecewiseConstant::new(parse_list(t)?, parse_list(w)?).map_err(|e| e.to_string())?)
            }
            "solution" => {
                let v = parse_list(args)?;
                expect_len(&v, 2, "solution")?;
                Self::Solution(SolutionMonitor { alpha: v[0], beta: v[1], reference: ReferenceGradient::DomainMax })
            }
            "combined" => {
                let (head, inner) = args.split_once('+').ok_or("combined expects eps,au,bu+<level-set monitor>")?;
                let v = parse_list(head)?;
                expect_len(&v, 3, "combined")?;
                Self::Combined(Combined {
                    eps: v[0],
                    inner: parse_level_set_monitor(inner)?,
                    outer: SolutionMonitor { alpha: v[1], beta: v[2], reference: ReferenceGradient::DomainMax },
                })
            }
            "shoreline" => {
                let v = parse_list(args)?;
                expect_len(&v, 4, "shoreline")?;
                Self::Shoreline(Shoreline {
                    eps_h: v[0],
                    alpha_eta: v[1],
                    alpha_dry: v[2],
                    beta_eta: v[3],
                    reference: ReferenceGradient::DomainMax,
                })
            }
            "general" => {
                let v = parse_list(args)?;
                expect_len(&v, 4, "general")?;
                Self::General(General { alpha: v[0], beta: v[1], gamma: v[2], p: v[3] })
            }
            other => return Err(format!("unknown monitor kind `{other}`")),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for LevelSetMonitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GradientBased(gb) => MonitorSpec::GradientBased(*gb).fmt(f),
            Self::PiecewiseConstant(pc) => MonitorSpec::PiecewiseConstant(pc.clone()).fmt(f),
        }
    }
}

impl fmt::Display for MonitorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GradientBased(GradientBased { offset: Offset::Constant(a0), alpha, beta }) => {
                write!(f, "gb:{a0},{alpha},{beta}")
            }
            Self::GradientBased(GradientBased { offset: Offset::Curvature { scale, floor, kappa_max }, alpha, beta }) => {
                write!(f, "gbk:{scale},{alpha},{beta},{floor},{kappa_max}")
            }
            Self::PiecewiseConstant(pc) => write!(f, "pc:{}/{}", join(&pc.thresholds), join(&pc.levels)),
            Self::Solution(s) => write!(f, "solution:{},{}", s.alpha, s.beta),
            Self::Combined(c) => write!(f, "combined:{},{},{}+{}", c.eps, c.outer.alpha, c.outer.beta, c.inner),
            Self::Shoreline(s) => write!(f, "shoreline:{},{},{},{}", s.eps_h, s.alpha_eta, s.alpha_dry, s.beta_eta),
            Self::General(g) => write!(f, "general:{},{},{},{}", g.alpha, g.beta, g.gamma, g.p),
        }
    }
}
