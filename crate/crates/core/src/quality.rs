//! Element quality, compression and edge-length statistics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mesh::{build_adjacency, inscribed_radius, signed_area, Mesh, Vec2};
use crate::metric::{metric_edge_length, MetricField};

/// Normalization making the equilateral triangle score 1.
pub const ISO_QUALITY_BETA: f64 = 0.144_337_567_297_406_43; // √3 / 12

/// Default histogram bin edges for metric edge lengths; bins are `(a, b]`.
pub const DEFAULT_BINS: [f64; 10] = [0.0, 0.3, 0.6, 0.7, 0.9, 1.3, 1.41, 2.0, 5.0, f64::INFINITY];

/// `β Σ L_j² / S`; 1 for the equilateral triangle, larger otherwise.
pub fn iso_quality_2d(a: Vec2, b: Vec2, c: Vec2) -> Result<f64> {
    let area = signed_area(a, b, c).abs();
    let sum_sq = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    if !(area > 1e-14 * sum_sq) {
        return Err(Error::Degenerate(area));
    }
    Ok(ISO_QUALITY_BETA * sum_sq / area)
}

/// Per-element `𝓠_iso`.
pub fn iso_qualities(mesh: &Mesh) -> Result<Vec<f64>> {
    (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            iso_quality_2d(a, b, c).map_err(|_| Error::DegenerateTriangle { triangle: t, area: signed_area(a, b, c) })
        })
        .collect()
}

/// Per-element ratio of inscribed radii `r_ref / r_adapted`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionField(Vec<f64>);

impl CompressionField {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Smallest value of the top `fraction` of elements.
    pub fn quantile_from_top(&self, fraction: f64) -> f64 {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        let k = ((fraction * v.len() as f64).ceil() as usize).clamp(1, v.len().max(1));
        v.get(k - 1).copied().unwrap_or(f64::NAN)
    }
}

impl std::ops::Deref for CompressionField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn compression_ratio(reference: &Mesh, adapted: &Mesh) -> Result<CompressionField> {
    if !reference.same_connectivity(adapted) {
        return Err(Error::ConnectivityMismatch);
    }
    (0..reference.num_triangles())
        .map(|t| {
            let [a, b, c] = reference.triangle_points(t);
            let [p, q, r] = adapted.triangle_points(t);
            Ok(inscribed_radius(a, b, c)? / inscribed_radius(p, q, r)?)
        })
        .collect::<Result<Vec<_>>>()
        .map(CompressionField)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLengthHistogram {
    /// Bin edges; bin `k` is `(edges[k], edges[k + 1]]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

impl EdgeLengthHistogram {
    pub fn percentages(&self) -> Vec<f64> {
        let total = self.total.max(1) as f64;
        self.counts.iter().map(|&c| 100.0 * c as f64 / total).collect()
    }

    pub fn label(&self, k: usize) -> String {
        if self.edges[k + 1].is_infinite() {
            format!(">{}", self.edges[k])
        } else {
            format!("({},{}]", self.edges[k], self.edges[k + 1])
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,lower,upper,count,percent\n");
        for (k, (c, p)) in self.counts.iter().zip(self.percentages()).enumerate() {
            let _ = writeln!(s, "\"{}\",{},{},{},{:.2}", self.label(k), self.edges[k], self.edges[k + 1], c, p);
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:>12} {:>8} {:>8}\n", "l_M", "edges", "%");
        for (k, (c, p)) in self.counts.iter().zip(self.percentages()).enumerate() {
            let _ = writeln!(s, "{:>12} {:>8} {:>8.2}", self.label(k), c, p);
        }
        let _ = writeln!(s, "{:>12} {:>8}", "total", self.total);
        s
    }
}

/// Classifies every unique edge by its length in `metric`.
pub fn edge_histogram(mesh: &Mesh, metric: &MetricField, bins: &[f64]) -> Result<EdgeLengthHistogram> {
    if metric.len() != mesh.num_vertices() {
        return Err(Error::FieldLength { expected: mesh.num_vertices(), got: metric.len() });
    }
    if bins.len() < 2 || bins.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("bins", "need at least two strictly increasing edges"));
    }
    let adj = build_adjacency(mesh)?;
    let mut counts = vec![0; bins.len() - 1];
    let mut total = 0;
    for &[a, b] in &adj.edges {
        let l = metric_edge_length(mesh.position(a), mesh.position(b), &metric[a], &metric[b]);
        total += 1;
        // First bin whose upper edge is >= l; lengths outside all bins are dropped
        // from the counts but not from the total.
        if l > bins[0] {
            if let Some(k) = bins[1..].iter().position(|&hi| l <= hi) {
                counts[k] += 1;
            }
        }
    }
    Ok(EdgeLengthHistogram { edges: bins.to_vec(), counts, total })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl Summary {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        (n > 0).then(|| Self { min, max, avg: sum / n as f64 })
    }
}

/// Statistics of the elements touching `|Φ| < band`. The summaries are
/// `None` when no element qualifies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NarrowBandStats {
    pub count: usize,
    /// Euclidean lengths of the unique edges of the selected elements.
    pub h: Option<Summary>,
    pub q_iso: Option<Summary>,
}

pub fn narrow_band_stats(mesh: &Mesh, phi: &ScalarField, band: f64) -> Result<NarrowBandStats> {
    if !(band > 0.0) {
        return Err(Error::param("band", format!("must be > 0, got {band}")));
    }
    phi.check(mesh.num_vertices())?;
    let selected: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| mesh.triangles()[t].vertices.iter().map(|&i| phi[i].abs()).fold(f64::INFINITY, f64::min) < band)
        .collect();
    let mut edges: Vec<[usize; 2]> = selected
        .iter()
        .flat_map(|&t| {
            let [a, b, c] = mesh.triangles()[t].vertices;
            [[a, b], [b, c], [c, a]].map(|[i, j]| [i.min(j), i.max(j)])
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let h = Summary::of(edges.iter().map(|&[a, b]| (mesh.position(b) - mesh.position(a)).norm()));
    let q = selected
        .iter()
        .map(|&t| {
            let [a, b, c] = mesh.triangle_points(t);
            iso_quality_2d(a, b, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NarrowBandStats { count: selected.len(), h, q_iso: Summary::of(q) })
}

/// Rows of narrow-band statistics, one per mesh, rendered as CSV or text.
#[derive(Clone, Debug, Default)]
pub struct StatsTable {
    pub rows: Vec<(String, NarrowBandStats)>,
}

impl StatsTable {
    pub const CSV_HEADER: &'static str = "mesh,elements,h_min,h_max,h_avg,q_iso_min,q_iso_max,q_iso_avg";

    pub fn push(&mut self, label: impl Into<String>, stats: NarrowBandStats) {
        self.rows.push((label.into(), stats));
    }

    fn cells(s: &NarrowBandStats) -> [String; 6] {
        let f = |x: Option<f64>, fmt: fn(f64) -> String| x.map_or_else(|| "nan".into(), fmt);
        let e = |x: f64| format!("{x:.3e}");
        let d = |x: f64| format!("{x:.4}");
        [
            f(s.h.map(|h| h.min), e),
            f(s.h.map(|h| h.max), e),
            f(s.h.map(|h| h.avg), e),
            f(s.q_iso.map(|q| q.min), d),
            f(s.q_iso.map(|q| q.max), d),
            f(s.q_iso.map(|q| q.avg), d),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for (label, stats) in &self.rows {
            let _ = writeln!(s, "{label},{},{}", stats.count, Self::cells(stats).join(","));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}\n",
            "mesh", "elements", "min h", "max h", "av. h", "min Q", "max Q", "av. Q"
        );
        for (label, stats) in &self.rows {
            let c = Self::cells(stats);
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}",
                label, stats.count, c[0], c[1], c[2], c[3], c[4], c[5]
            );
        }
        s
    }
}
