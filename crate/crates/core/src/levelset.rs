//! Analytic level-sets, the double-spiral sizemap and P1 differential
//! operators on vertex fields.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::mesh::{signed_area, Mesh, Vec2};

/// Default cap on the level-set curvature.
pub const DEFAULT_KAPPA_MAX: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticLevelSet {
    /// Signed distance `|p − c| − r`.
    Circle { center: Vec2, radius: f64 },
    /// `|p − c| − (R₀ + A cos(k θ))`, zero on a `k`-lobed closed curve.
    Flower { center: Vec2, base_radius: f64, amplitude: f64, lobes: u32 },
}

impl AnalyticLevelSet {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Self::Circle { center, radius }
    }

    pub fn flower(center: Vec2, base_radius: f64, amplitude: f64, lobes: u32) -> Self {
        Self::Flower { center, base_radius, amplitude, lobes }
    }

    /// Four lobes, `R₀ = 0.5`, `A = 0.2`, centred at the origin.
    pub fn default_flower() -> Self {
        Self::flower(Vec2::zeros(), 0.5, 0.2, 4)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Circle { radius, .. } if !(radius > 0.0) => {
                Err(Error::param("radius", format!("must be positive, got {radius}")))
            }
            Self::Flower { base_radius, amplitude, .. } if !(base_radius > amplitude && amplitude >= 0.0) => {
                Err(Error::param("flower", format!("need R0 > A >= 0, got R0={base_radius}, A={amplitude}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        match *self {
            Self::Circle { center, radius } => (p - center).norm() - radius,
            Self::Flower { center, base_radius, amplitude, lobes } => {
                let d = p - center;
                let theta = d.y.atan2(d.x);
                d.norm() - (base_radius + amplitude * (lobes as f64 * theta).cos())
            }
        }
    }
}

impl FromStr for AnalyticLevelSet {
    type Err = String;

    /// `circle:cx,cy,r`, `flower` (default shape) or `flower:cx,cy,R0,A,k`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let v: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
                .collect::<std::result::Result<_, _>>()?
        };
        let ls = match (kind, &v[..]) {
            ("circle", &[x, y, r]) => Self::circle(Vec2::new(x, y), r),
            ("flower", &[]) => Self::default_flower(),
            ("flower", &[x, y, r0, a, k]) if k >= 1.0 && k.fract() == 0.0 => {
                Self::flower(Vec2::new(x, y), r0, a, k as u32)
            }
            ("circle", _) => return Err("circle expects cx,cy,r".into()),
            ("flower", _) => return Err("flower expects cx,cy,R0,A,k with integer k >= 1".into()),
            _ => return Err(format!("unknown level set `{kind}` (circle | flower)")),
        };
        ls.validate().map_err(|e| e.to_string())?;
        Ok(ls)
    }
}

impl fmt::Display for AnalyticLevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle { center, radius } => write!(f, "circle:{},{},{radius}", center.x, center.y),
            Self::Flower { center, base_radius, amplitude, lobes } => {
                write!(f, "flower:{},{},{base_radius},{amplitude},{lobes}", center.x, center.y)
            }
        }
    }
}

/// Parameters of the double Archimedean spiral sizemap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpiralSizemapParams {
    pub a: f64,
    pub s: f64,
}

impl SpiralSizemapParams {
    pub const BASE: f64 = 1.6;
    pub const OFFSETS: (f64, f64) = (0.005, 0.0125);

    pub fn new(a: f64, s: f64) -> Result<Self> {
        if !(a > 0.0 && s > 0.0) {
            return Err(Error::param("spiral", format!("need a > 0 and s > 0, got a={a}, s={s}")));
        }
        Ok(Self { a, s })
    }
}

impl Default for SpiralSizemapParams {
    fn default() -> Self {
        Self { a: 0.6, s: 0.5 }
    }
}

/// Isotropic size of the double Archimedean spiral. The smallest value is
/// `1.605`, reached on the first spiral arm.
pub fn spiral_sizemap(p: Vec2, params: &SpiralSizemapParams) -> f64 {
    let SpiralSizemapParams { a, s } = *params;
    let phi = p.y.atan2(p.x);
    let rho = s * p.norm();
    let turns = PI * (1.0 + (rho / (2.0 * PI * a)).floor());
    let theta1 = phi + turns;
    let theta2 = phi - turns;
    let (o1, o2) = SpiralSizemapParams::OFFSETS;
    let h1 = SpiralSizemapParams::BASE + (rho - a * theta1).abs() + o1;
    let h2 = SpiralSizemapParams::BASE + (rho + a * theta2).abs() + o2;
    h1.min(h2)
}

/// Evaluates `f` at every vertex.
pub fn sample(mesh: &Mesh, f: impl Fn(Vec2) -> f64) -> Result<ScalarField> {
    sample_at(&mesh.positions(), f)
}

pub fn sample_at(positions: &[Vec2], f: impl Fn(Vec2) -> f64) -> Result<ScalarField> {
    positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let v = f(p);
            if v.is_finite() { Ok(v) } else { Err(Error::NonFinite { vertex: i }) }
        })
        .collect::<Result<Vec<_>>>()
        .map(ScalarField::new)
}

/// Gradients of the barycentric basis functions of triangle `(a, b, c)`,
/// together with its signed area.
#[inline]
pub(crate) fn basis_gradients(a: Vec2, b: Vec2, c: Vec2) -> ([Vec2; 3], f64) {
    let area = signed_area(a, b, c);
    let inv = 0.5 / area;
    (
        [
            Vec2::new(b.y - c.y, c.x - b.x) * inv,
            Vec2::new(c.y - a.y, a.x - c.x) * inv,
            Vec2::new(a.y - b.y, b.x - a.x) * inv,
        ],
        area,
    )
}

/// Area-weighted average of the element gradients of the P1 interpolant.
pub fn p1_gradient(mesh: &Mesh, f: &ScalarField) -> Result<VectorField> {
    gradient_at(mesh, &mesh.positions(), f)
}

/// [`p1_gradient`] on the configuration given by `positions` (same
/// connectivity as `mesh`).
pub fn gradient_at(mesh: &Mesh, positions: &[Vec2], f: &ScalarField) -> Result<VectorField> {
    let n = mesh.num_vertices();
    if f.len() != n {
        return Err(Error::FieldLength { expected: n, got: f.len() });
    }
    let mut acc = vec![Vec2::zeros(); n];
    let mut weight = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [i, j, k] = tri.vertices;
        let (g, area) = basis_gradients(positions[i], positions[j], positions[k]);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { triangle: t, area });
        }
        let grad = g[0] * f[i] + g[1] * f[j] + g[2] * f[k];
        for v in [i, j, k] {
            acc[v] += grad * area;
            weight[v] += area;
        }
    }
    acc.iter()
        .zip(&weight)
        .enumerate()
        .map(|(v, (a, &w))| if w > 0.0 { Ok(a / w) } else { Err(Error::IsolatedVertex(v)) })
        .collect::<Result<Vec<_>>>()
        .map(VectorField::new)
}

#[derive(Clone, Debug)]
pub struct Curvature {
    pub values: ScalarField,
    /// Vertices where `∇Φ` vanished (κ set to 0 there).
    pub degenerate: usize,
}

/// Curvature of the iso-lines, `κ = div(∇Φ / |∇Φ|)`, capped to `|κ| ≤ kappa_max`.
pub fn curvature(mesh: &Mesh, phi: &ScalarField, kappa_max: f64) -> Result<Curvature> {
    curvature_at(mesh, &mesh.positions(), phi, kappa_max)
}

pub fn curvature_at(mesh: &Mesh, positions: &[Vec2], phi: &ScalarField, kappa_max: f64) -> Result<Curvature> {
    let grad = gradient_at(mesh, positions, phi)?;
    let scale = grad.max_norm();
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut degenerate_at = vec![false; grad.len()];
    let (mut nx, mut ny) = (Vec::with_capacity(grad.len()), Vec::with_capacity(grad.len()));
    for (i, g) in grad.iter().enumerate() {
        let norm = g.norm();
        if norm > tiny {
            nx.push(g.x / norm);
            ny.push(g.y / norm);
        } else {
            degenerate_at[i] = true;
            nx.push(0.0);
            ny.push(0.0);
        }
    }
    let dnx = gradient_at(mesh, positions, &ScalarField::new(nx))?;
    let dny = gradient_at(mesh, positions, &ScalarField::new(ny))?;
    let values = (0..grad.len())
        .map(|i| {
            if degenerate_at[i] {
                0.0
            } else {
                (dnx[i].x + dny[i].y).clamp(-kappa_max, kappa_max)
            }
        })
        .collect();
    let degenerate = degenerate_at.iter().filter(|&&d| d).count();
    if degenerate > 0 {
        log::debug!("curvature: {degenerate} vertices with vanishing gradient");
    }
    Ok(Curvature { values, degenerate })
}

/// A vertex field defined on a fixed background mesh, evaluated anywhere by
/// linear interpolation.
#[derive(Clone, Debug)]
pub struct TabulatedField {
    positions: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    values: Vec<f64>,
    origin: Vec2,
    cell: f64,
    dims: (usize, usize),
    buckets: Vec<Vec<usize>>,
}

impl TabulatedField {
    pub fn new(mesh: &Mesh, values: &ScalarField) -> Result<Self> {
        values.check(mesh.num_vertices())?;
        let positions = mesh.positions();
        let triangles: Vec<[usize; 3]> = mesh.triangles().iter().map(|t| t.vertices).collect();
        let (lo, hi) = mesh.bounding_box();
        let extent = (hi - lo).max().max(f64::MIN_POSITIVE);
        let per_side = ((triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = extent / per_side as f64 * (1.0 + 1e-9);
        let dims = (
            (((hi.x - lo.x) / cell) as usize + 1).max(1),
            (((hi.y - lo.y) / cell) as usize + 1).max(1),
        );
        let mut buckets = vec![Vec::new(); dims.0 * dims.1];
        for (t, tri) in triangles.iter().enumerate() {
            let p = tri.map(|i| positions[i]);
            let tlo = p[0].inf(&p[1]).inf(&p[2]);
            let thi = p[0].sup(&p[1]).sup(&p[2]);
            let (i0, j0) = Self::cell_of(lo, cell, dims, tlo);
            let (i1, j1) = Self::cell_of(lo, cell, dims, thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * dims.0 + i].push(t);
                }
            }
        }
        Ok(Self { positions, triangles, values: values.to_vec(), origin: lo, cell, dims, buckets })
    }

    fn cell_of(origin: Vec2, cell: f64, dims: (usize, usize), p: Vec2) -> (usize, usize) {
        let i = ((p.x - origin.x) / cell).floor().max(0.0) as usize;
        let j = ((p.y - origin.y) / cell).floor().max(0.0) as usize;
        (i.min(dims.0 - 1), j.min(dims.1 - 1))
    }

    fn barycentric(&self, t: usize, p: Vec2) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.positions[i]);
        let area = signed_area(a, b, c);
        [signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area]
    }

    fn interpolate(&self, t: usize, w: [f64; 3]) -> f64 {
        let [i, j, k] = self.triangles[t];
        w[0] * self.values[i] + w[1] * self.values[j] + w[2] * self.values[k]
    }

    /// Value at `p`. Points outside the background mesh take the value of the
    /// closest triangle with clamped barycentric weights.
    pub fn eval(&self, p: Vec2) -> f64 {
        let (i, j) = Self::cell_of(self.origin, self.cell, self.dims, p);
        let candidates = &self.buckets[j * self.dims.0 + i];
        let pick = |ts: &mut dyn Iterator<Item = usize>| {
            ts.map(|t| {
                let w = self.barycentric(t, p);
                (w[0].min(w[1]).min(w[2]), t, w)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
        };
        if let Some((worst, t, w)) = pick(&mut candidates.iter().copied()) {
            if worst >= -1e-12 {
                return self.interpolate(t, w);
            }
        }
        // Outside the background mesh: evaluate at the closest point.
        let mut nearest = (f64::INFINITY, 0, p);
        for (t, tri) in self.triangles.iter().enumerate() {
            let v = tri.map(|i| self.positions[i]);
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let e = b - a;
                let s = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
                let q = a + e * s;
                let d = (p - q).norm();
                if d < nearest.0 {
                    nearest = (d, t, q);
                }
            }
        }
        let (_, t, q) = nearest;
        let w = self.barycentric(t, q).map(|x| x.max(0.0));
        let sum: f64 = w.iter().sum();
        self.interpolate(t, w.map(|x| x / sum))
    }
}

/// A scalar field that can be evaluated at moving vertex positions.
#[derive(Clone)]
pub enum FieldSource {
    LevelSet(AnalyticLevelSet),
    Function(Arc<dyn Fn(Vec2) -> f64 + Send + Sync>),
    Tabulated(Arc<TabulatedField>),
}

impl FieldSource {
    pub fn function(f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn tabulated(mesh: &Mesh, values: &ScalarField) -> Result<Self> {
        Ok(Self::Tabulated(Arc::new(TabulatedField::new(mesh, values)?)))
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            Self::LevelSet(ls) => ls.eval(p),
            Self::Function(f) => f(p),
            Self::Tabulated(t) => t.eval(p),
        }
    }

    pub fn sample_at(&self, positions: &[Vec2]) -> Result<ScalarField> {
        sample_at(positions, |p| self.eval(p))
    }
}

impl fmt::Debug for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LevelSet(ls) => f.debug_tuple("LevelSet").field(ls).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
            Self::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

impl From<AnalyticLevelSet> for FieldSource {
    fn from(ls: AnalyticLevelSet) -> Self {
        Self::LevelSet(ls)
    }
}
