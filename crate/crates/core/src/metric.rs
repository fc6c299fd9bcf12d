//! Symmetric 2×2 tensor calculus for anisotropic metrics.
//!
//! A metric `M` prescribes unit length `√(eᵀ M e) = 1` for edges of the
//! target mesh, so an eigenvalue `λ` encodes the size `h = 1/√λ` along its
//! eigenvector.

use std::ops::{Add, Deref, Mul};

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::levelset::{gradient_at, p1_gradient};
use crate::mesh::{Mesh, Vec2};

/// Symmetric 2×2 tensor `[[m11, m12], [m12, m22]]`, not necessarily definite.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl SymTensor2 {
    pub const ZERO: Self = Self { m11: 0.0, m12: 0.0, m22: 0.0 };
    pub const IDENTITY: Self = Self { m11: 1.0, m12: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self { m11: a, m12: 0.0, m22: b }
    }

    /// `λ₁ a⊗a + λ₂ b⊗b` for the orthonormal frame `(a, b = a⊥)`.
    pub fn from_frame(axis: Vec2, eigenvalues: [f64; 2]) -> Self {
        let (c, s) = (axis.x, axis.y);
        let [l1, l2] = eigenvalues;
        Self {
            m11: l1 * c * c + l2 * s * s,
            m12: (l1 - l2) * c * s,
            m22: l1 * s * s + l2 * c * c,
        }
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self { m11: m[(0, 0)], m12: 0.5 * (m[(0, 1)] + m[(1, 0)]), m22: m[(1, 1)] }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.m11, self.m12, self.m12, self.m22)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: Vec2) -> f64 {
        self.m11 * v.x * v.x + 2.0 * self.m12 * v.x * v.y + self.m22 * v.y * v.y
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.m11 * v.x + self.m12 * v.y, self.m12 * v.x + self.m22 * v.y)
    }

    pub fn frobenius(&self) -> f64 {
        (self.m11 * self.m11 + 2.0 * self.m12 * self.m12 + self.m22 * self.m22).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }

    pub fn is_spd(&self) -> bool {
        self.is_finite() && self.m11 > 0.0 && self.det() > 0.0
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.m11, self * t.m12, self * t.m22)
    }
}

/// Eigen-decomposition `M = Rᵀ diag(λ) R` where the rows of `R` are the
/// eigenvectors; `λ₁ ≥ λ₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDecomp2 {
    pub eigenvalues: [f64; 2],
    pub rotation: Matrix2<f64>,
}

impl SpectralDecomp2 {
    /// Unit eigenvector of eigenvalue `k`.
    pub fn axis(&self, k: usize) -> Vec2 {
        Vec2::new(self.rotation[(k, 0)], self.rotation[(k, 1)])
    }

    pub fn recompose(&self) -> SymTensor2 {
        SymTensor2::from_frame(self.axis(0), self.eigenvalues)
    }

    /// Same eigenvectors, eigenvalues mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymTensor2 {
        SymTensor2::from_frame(self.axis(0), self.eigenvalues.map(f))
    }
}

/// Closed-form eigensolver for symmetric 2×2 tensors.
pub fn spectral_decompose(t: &SymTensor2) -> Result<SpectralDecomp2> {
    if !t.is_finite() {
        return Err(Error::NonFiniteTensor);
    }
    let mean = 0.5 * (t.m11 + t.m22);
    let half_diff = 0.5 * (t.m11 - t.m22);
    let d = half_diff.hypot(t.m12);
    let det = t.det();
    // Avoid cancellation in the smaller-magnitude root.
    let (l1, l2) = if mean >= 0.0 {
        let l1 = mean + d;
        (l1, if l1 != 0.0 { det / l1 } else { mean - d })
    } else {
        let l2 = mean - d;
        (det / l2, l2)
    };
    let axis = if d == 0.0 {
        Vec2::new(1.0, 0.0)
    } else {
        let u = Vec2::new(t.m12, l1 - t.m11);
        let w = Vec2::new(l1 - t.m22, t.m12);
        if u.norm_squared() >= w.norm_squared() { u.normalize() } else { w.normalize() }
    };
    let rotation = Matrix2::new(axis.x, axis.y, -axis.y, axis.x);
    Ok(SpectralDecomp2 { eigenvalues: [l1.max(l2), l2.min(l1)], rotation })
}

/// Symmetric positive-definite 2×2 tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpdTensor2(SymTensor2);

impl SpdTensor2 {
    pub fn new(m11: f64, m12: f64, m22: f64) -> Result<Self> {
        Self::from_sym(SymTensor2::new(m11, m12, m22))
    }

    pub fn from_sym(t: SymTensor2) -> Result<Self> {
        if t.is_spd() {
            Ok(Self(t))
        } else {
            Err(Error::NotSpd { m11: t.m11, m12: t.m12, m22: t.m22 })
        }
    }

    pub(crate) fn from_sym_unchecked(t: SymTensor2) -> Self {
        debug_assert!(t.is_spd(), "{t:?}");
        Self(t)
    }

    pub fn identity() -> Self {
        Self(SymTensor2::IDENTITY)
    }

    /// Isotropic metric of size `h`: `I / h²`.
    pub fn isotropic(h: f64) -> Result<Self> {
        Self::from_sym(SymTensor2::diag(1.0 / (h * h), 1.0 / (h * h)))
    }

    pub fn sym(&self) -> &SymTensor2 {
        &self.0
    }

    /// Length of `e` measured in this metric.
    pub fn length(&self, e: Vec2) -> f64 {
        self.0.quad(e).max(0.0).sqrt()
    }

    pub fn decompose(&self) -> SpectralDecomp2 {
        spectral_decompose(&self.0).expect("SPD tensors are finite")
    }

    /// Matrix logarithm (symmetric).
    pub fn log(&self) -> SymTensor2 {
        self.decompose().map(f64::ln)
    }

    /// Matrix exponential of a symmetric tensor.
    pub fn exp(t: &SymTensor2) -> Result<Self> {
        Self::from_sym(spectral_decompose(t)?.map(f64::exp))
    }

    pub fn sqrt(&self) -> SymTensor2 {
        self.decompose().map(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> SymTensor2 {
        self.decompose().map(|l| 1.0 / l.sqrt())
    }
}

impl Deref for SpdTensor2 {
    type Target = SymTensor2;
    fn deref(&self) -> &SymTensor2 {
        &self.0
    }
}

/// One SPD tensor per mesh vertex.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricField(Vec<SpdTensor2>);

impl MetricField {
    pub fn new(values: Vec<SpdTensor2>) -> Self {
        Self(values)
    }

    pub fn uniform(n: usize, m: SpdTensor2) -> Self {
        Self(vec![m; n])
    }

    pub fn into_inner(self) -> Vec<SpdTensor2> {
        self.0
    }
}

impl Deref for MetricField {
    type Target = [SpdTensor2];
    fn deref(&self) -> &[SpdTensor2] {
        &self.0
    }
}

impl FromIterator<SpdTensor2> for MetricField {
    fn from_iter<I: IntoIterator<Item = SpdTensor2>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Admissible edge sizes `0 < h_min < h_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricBounds {
    h_min: f64,
    h_max: f64,
}

impl MetricBounds {
    pub fn new(h_min: f64, h_max: f64) -> Result<Self> {
        if !(h_min > 0.0 && h_max > h_min && h_max.is_finite()) {
            return Err(Error::param("bounds", format!("need 0 < h_min < h_max, got ({h_min}, {h_max})")));
        }
        Ok(Self { h_min, h_max })
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Smallest admissible eigenvalue, `1/h_max²`.
    pub fn lambda_min(&self) -> f64 {
        1.0 / (self.h_max * self.h_max)
    }

    /// Largest admissible eigenvalue, `1/h_min²`.
    pub fn lambda_max(&self) -> f64 {
        1.0 / (self.h_min * self.h_min)
    }

    pub fn clamp_eigenvalue(&self, l: f64) -> f64 {
        l.max(self.lambda_min()).min(self.lambda_max())
    }

    pub fn clamp_size(&self, h: f64) -> f64 {
        h.max(self.h_min).min(self.h_max)
    }
}

/// Per-vertex Hessian by two passes of area-weighted gradient recovery,
/// symmetrized.
pub fn recover_hessian(mesh: &Mesh, u: &ScalarField) -> Result<Vec<SymTensor2>> {
    recover_hessian_at(mesh, &mesh.positions(), u)
}

/// [`recover_hessian`] on the configuration given by `positions`.
pub fn recover_hessian_at(mesh: &Mesh, positions: &[Vec2], u: &ScalarField) -> Result<Vec<SymTensor2>> {
    let grad = gradient_at(mesh, positions, u)?;
    let gx: ScalarField = grad.iter().map(|g| g.x).collect();
    let gy: ScalarField = grad.iter().map(|g| g.y).collect();
    let dgx = gradient_at(mesh, positions, &gx)?;
    let dgy = gradient_at(mesh, positions, &gy)?;
    Ok(dgx
        .iter()
        .zip(dgy.iter())
        .map(|(a, b)| SymTensor2::new(a.x, 0.5 * (a.y + b.x), b.y))
        .collect())
}

/// Metric controlling the P1 interpolation error of a field from its
/// Hessian: same eigenvectors, eigenvalues `|hᵢ|` clamped into the bounds.
pub fn physical_metric(hessian: &[SymTensor2], bounds: &MetricBounds) -> Result<MetricField> {
    hessian
        .iter()
        .map(|h| {
            let dec = spectral_decompose(h)?;
            Ok(SpdTensor2::from_sym_unchecked(dec.map(|l| bounds.clamp_eigenvalue(l.abs()))))
        })
        .collect::<Result<Vec<_>>>()
        .map(MetricField)
}

#[derive(Clone, Debug)]
pub struct LevelSetMetric {
    pub metric: MetricField,
    /// Banded vertices where `∇Φ` vanished and the isotropic `1/ε²` fallback
    /// was used.
    pub degenerate_vertices: usize,
}

/// Anisotropic metric resolving the zero iso-line of `phi`.
///
/// Within `|Φ| ≤ band_width` the size normal to the iso-lines is `eps` and
/// the tangential eigenvalue is `|tᵀ H(Φ) t| / eps` floored at `1/h_max²`.
/// Outside the band the metric is isotropic and its size grows linearly from
/// the band-edge size to `h_max`, reached at distance `2 band_width`.
pub fn levelset_metric(
    mesh: &Mesh,
    phi: &ScalarField,
    eps: f64,
    band_width: f64,
    bounds: &MetricBounds,
) -> Result<LevelSetMetric> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    if !(band_width > 0.0) {
        return Err(Error::param("band", format!("must be positive, got {band_width}")));
    }
    let grad = p1_gradient(mesh, phi)?;
    let hess = recover_hessian(mesh, phi)?;
    let h_band = bounds.clamp_size(eps);
    let normal_eig = 1.0 / (eps * eps);
    let tiny = 1e-12;

    let mut degenerate = 0;
    let mut out = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let d = phi[i].abs();
        let t = if d <= band_width {
            let g = grad[i];
            let gn = g.norm();
            if gn <= tiny {
                degenerate += 1;
                let l = bounds.clamp_eigenvalue(normal_eig);
                SymTensor2::diag(l, l)
            } else {
                let n = g / gn;
                let tangent = Vec2::new(-n.y, n.x);
                let lt = (hess[i].quad(tangent).abs() / eps).max(bounds.lambda_min());
                SymTensor2::from_frame(n, [bounds.clamp_eigenvalue(normal_eig), bounds.clamp_eigenvalue(lt)])
            }
        } else {
            let h = h_band + (bounds.h_max() - h_band) * (d - band_width) / band_width;
            let l = bounds.clamp_eigenvalue(1.0 / (h * h));
            SymTensor2::diag(l, l)
        };
        out.push(SpdTensor2::from_sym_unchecked(t));
    }
    if degenerate > 0 {
        log::warn!("level-set metric: {degenerate} banded vertices with vanishing gradient");
    }
    Ok(LevelSetMetric { metric: MetricField(out), degenerate_vertices: degenerate })
}

/// Metric intersection by simultaneous reduction: the largest ellipse
/// contained in both unit balls.
///
/// With `N = m1^{-1/2} m2 m1^{-1/2} = Q diag(μ) Qᵀ`, the generalized
/// eigenvectors of the pencil are the columns of `m1^{-1/2} Q`; in that basis
/// both metrics are diagonal with entries `1` and `μₖ`, and the result keeps
/// the larger one.
pub fn intersect(m1: &SpdTensor2, m2: &SpdTensor2) -> SpdTensor2 {
    let s = m1.sqrt().to_matrix();
    let si = m1.inv_sqrt().to_matrix();
    // N − I computed from m2 − m1 directly, so that intersect(m, m) returns m.
    let diff = m2.to_matrix() - m1.to_matrix();
    let shifted = SymTensor2::from_matrix(&(si * diff * si));
    let excess = spectral_decompose(&shifted).expect("finite").map(|d| d.max(0.0)).to_matrix();
    SpdTensor2::from_sym_unchecked(SymTensor2::from_matrix(&(m1.to_matrix() + s * excess * s)))
}

/// Intersection over any number of metrics (left fold).
pub fn intersect_all(metrics: &[SpdTensor2]) -> Option<SpdTensor2> {
    let (first, rest) = metrics.split_first()?;
    Some(rest.iter().fold(*first, |acc, m| intersect(&acc, m)))
}

/// Vertex-wise intersection of two metric fields.
pub fn intersect_fields(a: &MetricField, b: &MetricField) -> Result<MetricField> {
    if a.len() != b.len() {
        return Err(Error::FieldLength { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| intersect(x, y)).collect())
}

/// Length of the edge `pa → pb` when the size varies linearly between the
/// endpoint sizes: with `la`, `lb` the lengths in the endpoint metrics,
/// `l = la lb ln(la/lb) / (la − lb)`, which reduces to `la` when the
/// endpoint lengths agree.
pub fn metric_edge_length(pa: Vec2, pb: Vec2, ma: &SpdTensor2, mb: &SpdTensor2) -> f64 {
    let e = pb - pa;
    let la = ma.length(e);
    let lb = mb.length(e);
    if la == 0.0 || lb == 0.0 {
        return 0.0;
    }
    let r = la / lb;
    if (la - lb).abs() < 1e-12 * la.max(lb) {
        return la;
    }
    la * lb * r.ln() / (la - lb)
}

/// Log-Euclidean weighted mean `exp(Σ wᵢ log Mᵢ)`.
pub fn interpolate_metric(metrics: &[SpdTensor2], weights: &[f64]) -> SpdTensor2 {
    debug_assert_eq!(metrics.len(), weights.len());
    debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let log = metrics
        .iter()
        .zip(weights)
        .fold(SymTensor2::ZERO, |acc, (m, &w)| acc + w * m.log());
    SpdTensor2::exp(&log).expect("exp of a finite symmetric tensor is SPD")
}

/// Log-Euclidean interpolation from precomputed logarithms.
pub fn interpolate_logs(logs: &[SymTensor2], weights: &[f64]) -> SpdTensor2 {
    let log = logs.iter().zip(weights).fold(SymTensor2::ZERO, |acc, (m, &w)| acc + w * *m);
    SpdTensor2::exp(&log).expect("exp of a finite symmetric tensor is SPD")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{sample, AnalyticLevelSet};
    use crate::mesh::{build_adjacency, generate_uniform, Rect};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: &SymTensor2, b: &SymTensor2, tol: f64) -> bool {
        (a.m11 - b.m11).abs() <= tol && (a.m12 - b.m12).abs() <= tol && (a.m22 - b.m22).abs() <= tol
    }

    #[test]
    fn decompose_examples() {
        let d = spectral_decompose(&SymTensor2::IDENTITY).unwrap();
        assert_eq!(d.eigenvalues, [1.0, 1.0]);
        assert_eq!(d.rotation, Matrix2::identity());

        let d = spectral_decompose(&SymTensor2::diag(4.0, 1.0)).unwrap();
        assert_eq!(d.eigenvalues, [4.0, 1.0]);
        assert_relative_eq!(d.axis(0).x.abs(), 1.0);

        let d = spectral_decompose(&SymTensor2::new(2.0, 1.0, 2.0)).unwrap();
        assert_relative_eq!(d.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
        let s = 0.5f64.sqrt();
        let a0 = d.axis(0);
        assert_relative_eq!(a0.x.abs(), s, epsilon = 1e-14);
        assert_relative_eq!(a0.x * a0.y, 0.5, epsilon = 1e-14);
        let a1 = d.axis(1);
        assert_relative_eq!(a1.x * a1.y, -0.5, epsilon = 1e-14);

        assert!(spectral_decompose(&SymTensor2::new(f64::NAN, 0.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn decompose_reconstructs(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64) {
            let t = SymTensor2::new(a, b, c);
            let d = spectral_decompose(&t).unwrap();
            let r = d.rotation;
            let orth = r.transpose() * r - Matrix2::identity();
            prop_assert!(orth.amax() < 1e-12);
            prop_assert!(d.eigenvalues[0] >= d.eigenvalues[1]);
            let back = d.recompose();
            let scale = t.max_abs().max(1e-300);
            prop_assert!(close(&back, &t, 1e-10 * scale));
        }
    }

    #[test]
    fn physical_metric_clamps() {
        let b = MetricBounds::new(0.01, 0.5).unwrap();
        let m = physical_metric(&[SymTensor2::ZERO], &b).unwrap();
        assert!(close(m[0].sym(), &SymTensor2::diag(4.0, 4.0), 1e-12));

        let m = physical_metric(&[SymTensor2::diag(1e6, 1e6)], &b).unwrap();
        assert_relative_eq!(m[0].m11, 1e4, max_relative = 1e-12);

        let m = physical_metric(&[SymTensor2::diag(100.0, 0.0)], &b).unwrap();
        assert!(close(m[0].sym(), &SymTensor2::diag(100.0, 4.0), 1e-12));

        // Negative curvature uses |h_i|.
        let m = physical_metric(&[SymTensor2::diag(-100.0, 9.0)], &b).unwrap();
        assert!(close(m[0].sym(), &SymTensor2::diag(100.0, 9.0), 1e-12));
    }

    #[test]
    fn bounds_validation() {
        assert!(MetricBounds::new(0.5, 0.1).is_err());
        assert!(MetricBounds::new(0.0, 0.1).is_err());
    }

    #[test]
    fn hessian_of_quadratic() {
        let m = generate_uniform(&Rect::square(1.0), 0.05).unwrap();
        let u = sample(&m, |p| p.x * p.x + p.x * p.y + p.y * p.y).unwrap();
        let h = recover_hessian(&m, &u).unwrap();
        let adj = build_adjacency(&m).unwrap();
        let exact = SymTensor2::new(2.0, 1.0, 2.0);
        for i in 0..m.num_vertices() {
            let p = m.position(i);
            if adj.boundary_vertex[i] || p.x.abs() > 0.85 || p.y.abs() > 0.85 {
                continue;
            }
            let err = SymTensor2::new(h[i].m11 - 2.0, h[i].m12 - 1.0, h[i].m22 - 2.0).frobenius();
            assert!(err <= 0.1 * exact.frobenius(), "vertex {i} {:?}", h[i]);
        }
    }

    #[test]
    fn hessian_of_constant_and_linear() {
        let m = generate_uniform(&Rect::square(1.0), 0.1).unwrap();
        let h = recover_hessian(&m, &ScalarField::constant(m.num_vertices(), 3.0)).unwrap();
        assert!(h.iter().all(|t| t.max_abs() == 0.0));
        let u = sample(&m, |p| p.x).unwrap();
        let h = recover_hessian(&m, &u).unwrap();
        let adj = build_adjacency(&m).unwrap();
        for i in 0..m.num_vertices() {
            if !adj.boundary_vertex[i] {
                assert!(h[i].max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn levelset_metric_examples() {
        let m = generate_uniform(&Rect::square(1.0), 0.02).unwrap();
        let circle = AnalyticLevelSet::circle(Vec2::zeros(), 0.5);
        let phi = sample(&m, |p| circle.eval(p)).unwrap();
        let b = MetricBounds::new(0.001, 0.2).unwrap();
        let lm = levelset_metric(&m, &phi, 0.01, 0.05, &b).unwrap();
        assert_eq!(lm.degenerate_vertices, 0);
        // (0.5, 0) is a grid vertex on the circle.
        let on = (0..m.num_vertices())
            .find(|&i| (m.position(i) - Vec2::new(0.5, 0.0)).norm() < 1e-12)
            .unwrap();
        let d = lm.metric[on].decompose();
        assert_relative_eq!(d.eigenvalues[0], 1e4, max_relative = 1e-12);
        assert_relative_eq!(d.axis(0).x.abs(), 1.0, epsilon = 1e-6);

        let far = (0..m.num_vertices()).find(|&i| m.position(i).norm() < 1e-12).unwrap();
        assert!(close(lm.metric[far].sym(), &SymTensor2::diag(25.0, 25.0), 1e-9));

        for t in lm.metric.iter() {
            let d = t.decompose();
            for l in d.eigenvalues {
                assert!(l >= b.lambda_min() * (1.0 - 1e-12) && l <= b.lambda_max() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn levelset_metric_planar() {
        let m = generate_uniform(&Rect::square(1.0), 0.05).unwrap();
        let phi = sample(&m, |p| p.x).unwrap();
        let b = MetricBounds::new(0.001, 0.2).unwrap();
        let lm = levelset_metric(&m, &phi, 0.01, 0.1, &b).unwrap();
        let adj = build_adjacency(&m).unwrap();
        for i in 0..m.num_vertices() {
            if phi[i].abs() <= 0.1 && !adj.boundary_vertex[i] {
                let d = lm.metric[i].decompose();
                assert_relative_eq!(d.eigenvalues[0], 1e4, max_relative = 1e-9);
                assert_relative_eq!(d.eigenvalues[1], 25.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn levelset_metric_degenerate_gradient() {
        let m = generate_uniform(&Rect::square(1.0), 0.25).unwrap();
        let phi = ScalarField::constant(m.num_vertices(), 0.0);
        let b = MetricBounds::new(0.001, 0.2).unwrap();
        let lm = levelset_metric(&m, &phi, 0.01, 0.1, &b).unwrap();
        assert_eq!(lm.degenerate_vertices, m.num_vertices());
        assert!(close(lm.metric[0].sym(), &SymTensor2::diag(1e4, 1e4), 1e-9));
    }

    #[test]
    fn intersect_examples() {
        let a = SpdTensor2::new(1.0, 0.0, 4.0).unwrap();
        let b = SpdTensor2::new(4.0, 0.0, 1.0).unwrap();
        assert!(close(intersect(&a, &b).sym(), &SymTensor2::diag(4.0, 4.0), 1e-12));
        let i = SpdTensor2::identity();
        let c = SpdTensor2::new(9.0, 0.0, 1.0).unwrap();
        assert!(close(intersect(&i, &c).sym(), &SymTensor2::diag(9.0, 1.0), 1e-12));
        let m = SpdTensor2::new(3.0, -1.2, 0.7).unwrap();
        assert!(close(intersect(&m, &m).sym(), m.sym(), 1e-12));
        assert!(SpdTensor2::new(1.0, 0.0, -1.0).is_err());
    }

    fn spd_strategy() -> impl Strategy<Value = SpdTensor2> {
        (0.05..20.0f64, 0.05..20.0f64, 0.0..std::f64::consts::PI).prop_map(|(a, b, th)| {
            let axis = Vec2::new(th.cos(), th.sin());
            SpdTensor2::from_sym_unchecked(SymTensor2::from_frame(axis, [a, b]))
        })
    }

    proptest! {
        #[test]
        fn intersect_contains_both(m1 in spd_strategy(), m2 in spd_strategy(), th in 0.0..std::f64::consts::TAU) {
            let m = intersect(&m1, &m2);
            let v = Vec2::new(th.cos(), th.sin());
            prop_assert!(m.quad(v) >= m1.quad(v).max(m2.quad(v)) - 1e-9);
            let m_rev = intersect(&m2, &m1);
            prop_assert!(close(m.sym(), m_rev.sym(), 1e-9 * m.max_abs().max(1.0)));
        }

        #[test]
        fn edge_length_symmetric(m1 in spd_strategy(), m2 in spd_strategy(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let (a, b) = (Vec2::new(0.1, -0.3), Vec2::new(x, y));
            let l1 = metric_edge_length(a, b, &m1, &m2);
            let l2 = metric_edge_length(b, a, &m2, &m1);
            prop_assert!((l1 - l2).abs() <= 1e-12 * l1.max(1.0));
        }
    }

    #[test]
    fn edge_length_examples() {
        let h = 0.1;
        let m = SpdTensor2::isotropic(h).unwrap();
        let l = metric_edge_length(Vec2::zeros(), Vec2::new(0.3, 0.4), &m, &m);
        assert_relative_eq!(l, 0.5 / h, max_relative = 1e-12);

        let ma = SpdTensor2::isotropic(1.0).unwrap();
        let mb = SpdTensor2::isotropic(2.0).unwrap();
        let l = metric_edge_length(Vec2::zeros(), Vec2::new(1.0, 0.0), &ma, &mb);
        assert_relative_eq!(l, std::f64::consts::LN_2, max_relative = 1e-12);

        let d = SpdTensor2::new(4.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(metric_edge_length(Vec2::zeros(), Vec2::new(1.0, 0.0), &d, &d), 2.0);
        assert_eq!(metric_edge_length(Vec2::zeros(), Vec2::zeros(), &d, &d), 0.0);
    }

    #[test]
    fn edge_length_matches_quadrature() {
        // Sizes varying linearly along the edge: integrate 1/h numerically.
        let (ha, hb, len) = (0.3, 1.7, 2.0);
        let n = 100_000;
        let integral: f64 = (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) / n as f64;
                len / (ha + t * (hb - ha)) / n as f64
            })
            .sum();
        let l = metric_edge_length(
            Vec2::zeros(),
            Vec2::new(0.0, len),
            &SpdTensor2::isotropic(ha).unwrap(),
            &SpdTensor2::isotropic(hb).unwrap(),
        );
        assert_relative_eq!(l, integral, max_relative = 1e-8);
    }

    #[test]
    fn interpolation_examples() {
        let m = SpdTensor2::new(2.0, 0.3, 1.0).unwrap();
        let r = interpolate_metric(&[m, m, m], &[0.2, 0.3, 0.5]);
        assert!(close(r.sym(), m.sym(), 1e-12));

        let a = SpdTensor2::new(5.0, -1.0, 2.0).unwrap();
        let b = SpdTensor2::new(1.0, 0.0, 7.0).unwrap();
        let r = interpolate_metric(&[a, b, m], &[1.0, 0.0, 0.0]);
        assert!(close(r.sym(), a.sym(), 1e-12));

        let e2 = std::f64::consts::E.powi(2);
        let r = interpolate_metric(
            &[SpdTensor2::identity(), SpdTensor2::new(e2, 0.0, e2).unwrap()],
            &[0.5, 0.5],
        );
        let e = std::f64::consts::E;
        assert!(close(r.sym(), &SymTensor2::diag(e, e), 1e-12));
    }
}
