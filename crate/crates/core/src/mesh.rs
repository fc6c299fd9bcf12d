//! Conforming 2D triangle meshes, adjacency and structured generators.
//!
//! A [`Mesh`] always stores the reference configuration. Deformed
//! configurations are described by a displacement field on top of it, see
//! [`validate`] and [`crate::mmpde::apply_displacement`].

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::field::VectorField;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Relative tolerance (w.r.t. the bounding-box diagonal) below which two
/// vertices are considered duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub position: Vec2,
    /// 0 for interior vertices.
    pub tag: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub tag: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    triangles: Vec<Triangle>,
    boundary_edges: Vec<BoundaryEdge>,
}

/// Twice-signed-area free helper: `½ det(b − a, c − a)`.
pub fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let u = b - a;
    let v = c - a;
    0.5 * (u.x * v.y - u.y * v.x)
}

/// Radius of the inscribed circle, `area / semiperimeter`.
pub fn inscribed_radius(a: Vec2, b: Vec2, c: Vec2) -> Result<f64> {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let s = 0.5 * (la + lb + lc);
    let area = signed_area(a, b, c).abs();
    if !(area > 1e-14 * s * s) {
        return Err(Error::Degenerate(signed_area(a, b, c)));
    }
    Ok(area / s)
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant: index ranges,
    /// counter-clockwise positive areas, conformity, boundary edge
    /// consistency and duplicate vertices.
    pub fn new(
        vertices: Vec<Vertex>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mesh = Self::from_raw_parts(vertices, triangles, boundary_edges);
        mesh.check()?;
        Ok(mesh)
    }

    /// Builds a mesh without any validation.
    pub fn from_raw_parts(
        vertices: Vec<Vertex>,
        triangles: Vec<Triangle>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Self {
        Self { vertices, triangles, boundary_edges }
    }

    fn check(&self) -> Result<()> {
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if !(v.position.x.is_finite() && v.position.y.is_finite()) {
                return Err(Error::NonFinite { vertex: i });
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a >= n || b >= n || c >= n || a == b || b == c || a == c {
                return Err(Error::BadConnectivity { triangle: t, vertices: tri.vertices });
            }
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
        }
        let adj = build_adjacency(self)?;
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            let key = [a.min(b), a.max(b)];
            match adj.edge_index(key[0], key[1]) {
                Some(k) if adj.edge_triangles[k][1].is_none() => {}
                _ => return Err(Error::BadBoundaryEdge(a, b)),
            }
        }
        if let Some((i, j)) = self.find_duplicate() {
            return Err(Error::DuplicateVertex(i, j));
        }
        Ok(())
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let tol = DUPLICATE_TOL * self.bounding_box_diagonal();
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&i, &j| self.position(i).x.total_cmp(&self.position(j).x));
        for (k, &i) in order.iter().enumerate() {
            let pi = self.position(i);
            for &j in &order[k + 1..] {
                let pj = self.position(j);
                if pj.x - pi.x > tol {
                    break;
                }
                if (pj - pi).norm() <= tol {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn position(&self, i: usize) -> Vec2 {
        self.vertices[i].position
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].vertices.map(|i| self.position(i))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) / 3.0
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(&v.position);
            hi = hi.sup(&v.position);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Same connectivity and tags, new vertex positions.
    pub fn with_positions(&self, positions: &[Vec2]) -> Mesh {
        assert_eq!(positions.len(), self.vertices.len());
        let vertices = self
            .vertices
            .iter()
            .zip(positions)
            .map(|(v, &p)| Vertex { position: p, tag: v.tag })
            .collect();
        Mesh {
            vertices,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
        }
    }

    /// Rigid transform of all vertex positions.
    pub fn transformed(&self, f: impl Fn(Vec2) -> Vec2) -> Mesh {
        let p: Vec<Vec2> = self.vertices.iter().map(|v| f(v.position)).collect();
        self.with_positions(&p)
    }

    pub fn same_connectivity(&self, other: &Mesh) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.triangles.iter().map(|t| t.vertices).eq(other.triangles.iter().map(|t| t.vertices))
    }
}

/// Vertex and edge incidence of a conforming mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    /// Sorted neighbor list per vertex.
    pub neighbors: Vec<Vec<usize>>,
    pub vertex_triangles: Vec<Vec<usize>>,
    /// Unique edges `[a, b]` with `a < b`, sorted.
    pub edges: Vec<[usize; 2]>,
    /// One or two incident triangles per edge.
    pub edge_triangles: Vec<[Option<usize>; 2]>,
    pub boundary_vertex: Vec<bool>,
}

impl Adjacency {
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    pub fn is_boundary_edge(&self, k: usize) -> bool {
        self.edge_triangles[k][1].is_none()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edge_triangles.iter().filter(|t| t[1].is_none()).count()
    }

    /// Order-sensitive hash of the edge and triangle-incidence structure.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.neighbors.hash(&mut h);
        self.vertex_triangles.hash(&mut h);
        self.edges.hash(&mut h);
        self.edge_triangles.hash(&mut h);
        h.finish()
    }
}

pub fn build_adjacency(mesh: &Mesh) -> Result<Adjacency> {
    let n = mesh.num_vertices();
    let mut half: Vec<([usize; 2], usize)> = Vec::with_capacity(3 * mesh.num_triangles());
    let mut vertex_triangles = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = tri.vertices;
        for v in [a, b, c] {
            if v >= n {
                return Err(Error::BadConnectivity { triangle: t, vertices: tri.vertices });
            }
            vertex_triangles[v].push(t);
        }
        for (i, j) in [(a, b), (b, c), (c, a)] {
            half.push(([i.min(j), i.max(j)], t));
        }
    }
    half.sort_unstable();

    let mut edges = Vec::with_capacity(half.len() / 2 + 1);
    let mut edge_triangles = Vec::with_capacity(half.len() / 2 + 1);
    let mut k = 0;
    while k < half.len() {
        let key = half[k].0;
        let mut m = k;
        while m < half.len() && half[m].0 == key {
            m += 1;
        }
        if m - k > 2 {
            return Err(Error::NonConforming(key[0], key[1], m - k));
        }
        edges.push(key);
        edge_triangles.push([Some(half[k].1), if m - k == 2 { Some(half[k + 1].1) } else { None }]);
        k = m;
    }

    let mut neighbors = vec![Vec::new(); n];
    let mut boundary_vertex = vec![false; n];
    for (e, tris) in edges.iter().zip(&edge_triangles) {
        neighbors[e[0]].push(e[1]);
        neighbors[e[1]].push(e[0]);
        if tris[1].is_none() {
            boundary_vertex[e[0]] = true;
            boundary_vertex[e[1]] = true;
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
    }

    Ok(Adjacency { neighbors, vertex_triangles, edges, edge_triangles, boundary_vertex })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    /// Triangles with signed area ≤ 0 in the (deformed) configuration.
    pub inverted: Vec<usize>,
    pub min_area: f64,
    pub max_area: f64,
    pub conforming: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.inverted.is_empty() && self.conforming
    }
}

/// Checks the configuration `ξ + δ` (or the reference one when no
/// displacement is given). Failures are reported, never raised.
pub fn validate(mesh: &Mesh, displacement: Option<&VectorField>) -> ValidityReport {
    let disp = displacement.filter(|d| !d.is_empty());
    let mut inverted = Vec::new();
    let mut min_area = f64::INFINITY;
    let mut max_area = f64::NEG_INFINITY;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.vertices.map(|i| match disp {
            Some(d) => mesh.position(i) + d[i],
            None => mesh.position(i),
        });
        let area = signed_area(p[0], p[1], p[2]);
        if !(area > 0.0) {
            inverted.push(t);
        }
        min_area = min_area.min(area);
        max_area = max_area.max(area);
    }
    let conforming = disp.is_none_or(|d| d.len() == mesh.num_vertices())
        && build_adjacency(mesh).is_ok();
    ValidityReport { inverted, min_area, max_area, conforming }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::param("domain", format!("empty rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn square(half_width: f64) -> Self {
        Self { x0: -half_width, x1: half_width, y0: -half_width, y1: half_width }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Side tag of a boundary point: 1 bottom, 2 right, 3 top, 4 left, 0 interior.
    fn side_tag(&self, p: Vec2) -> i32 {
        let tol = 1e-12 * (self.width() + self.height());
        if (p.y - self.y0).abs() <= tol {
            1
        } else if (p.x - self.x1).abs() <= tol {
            2
        } else if (p.y - self.y1).abs() <= tol {
            3
        } else if (p.x - self.x0).abs() <= tol {
            4
        } else {
            0
        }
    }
}

impl Default for Rect {
    fn default() -> Self {
        Self::square(1.0)
    }
}

fn check_target_h(domain: &Rect, h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h", format!("target size must be positive, got {h}")));
    }
    if h > domain.width().max(domain.height()) {
        return Err(Error::param("h", format!("target size {h} exceeds the domain extent")));
    }
    Ok(())
}

/// Finishes a generated mesh: tags boundary vertices and edges by side.
fn finish_generated(domain: &Rect, positions: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
    let triangles: Vec<Triangle> = triangles.into_iter().map(|v| Triangle { vertices: v, tag: 0 }).collect();
    let mut vertices: Vec<Vertex> = positions.into_iter().map(|p| Vertex { position: p, tag: 0 }).collect();
    let raw = Mesh::from_raw_parts(vertices.clone(), triangles.clone(), Vec::new());
    let adj = build_adjacency(&raw)?;
    let mut boundary_edges = Vec::new();
    for (k, e) in adj.edges.iter().enumerate() {
        if !adj.is_boundary_edge(k) {
            continue;
        }
        let mid = 0.5 * (vertices[e[0]].position + vertices[e[1]].position);
        let tag = domain.side_tag(mid);
        // Keep the orientation of the owning triangle.
        let t = adj.edge_triangles[k][0].expect("edge without triangle");
        let tv = triangles[t].vertices;
        let pos = tv.iter().position(|&v| v == e[0]).unwrap();
        let oriented = if tv[(pos + 1) % 3] == e[1] { [e[0], e[1]] } else { [e[1], e[0]] };
        boundary_edges.push(BoundaryEdge { vertices: oriented, tag });
    }
    for e in &boundary_edges {
        for &v in &e.vertices {
            if vertices[v].tag == 0 {
                vertices[v].tag = e.tag;
            }
        }
    }
    Mesh::new(vertices, triangles, boundary_edges)
}

/// Structured grid of `nx × ny` cells of size close to `h`, each split in two
/// triangles with alternating diagonals.
pub fn generate_uniform(domain: &Rect, h: f64) -> Result<Mesh> {
    check_target_h(domain, h)?;
    let nx = ((domain.width() / h).round() as usize).max(1);
    let ny = ((domain.height() / h).round() as usize).max(1);
    let dx = domain.width() / nx as f64;
    let dy = domain.height() / ny as f64;

    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * dy };
        for i in 0..=nx {
            let x = if i == nx { domain.x1 } else { domain.x0 + i as f64 * dx };
            positions.push(Vec2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    finish_generated(domain, positions, triangles)
}

/// Near-equilateral lattice: rows spaced by `h √3 / 2`, odd rows shifted by
/// half a cell and closed with half cells on the left and right sides.
pub fn generate_equilateral(domain: &Rect, h: f64) -> Result<Mesh> {
    check_target_h(domain, h)?;
    let nx = ((domain.width() / h).round() as usize).max(1);
    let ny = ((domain.height() / (h * 3f64.sqrt() / 2.0)).round() as usize).max(1);
    let dx = domain.width() / nx as f64;
    let dy = domain.height() / ny as f64;

    let mut positions = Vec::new();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(ny + 1);
    for j in 0..=ny {
        let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * dy };
        let mut xs = Vec::with_capacity(nx + 2);
        if j % 2 == 0 {
            for i in 0..=nx {
                xs.push(if i == nx { domain.x1 } else { domain.x0 + i as f64 * dx });
            }
        } else {
            xs.push(domain.x0);
            for i in 0..nx {
                xs.push(domain.x0 + (i as f64 + 0.5) * dx);
            }
            xs.push(domain.x1);
        }
        let row = xs
            .into_iter()
            .map(|x| {
                positions.push(Vec2::new(x, y));
                positions.len() - 1
            })
            .collect();
        rows.push(row);
    }

    let mut triangles = Vec::new();
    for j in 0..ny {
        let (lo, hi) = (&rows[j], &rows[j + 1]);
        let (mut a, mut b) = (0, 0);
        while a + 1 < lo.len() || b + 1 < hi.len() {
            let advance_lo = if a + 1 >= lo.len() {
                false
            } else if b + 1 >= hi.len() {
                true
            } else {
                positions[lo[a + 1]].x <= positions[hi[b + 1]].x
            };
            if advance_lo {
                triangles.push([lo[a], lo[a + 1], hi[b]]);
                a += 1;
            } else {
                triangles.push([lo[a], hi[b + 1], hi[b]]);
                b += 1;
            }
        }
    }
    finish_generated(domain, positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn raw(points: &[(f64, f64)], tris: &[[usize; 3]]) -> Mesh {
        Mesh::from_raw_parts(
            points.iter().map(|&(x, y)| Vertex { position: v(x, y), tag: 0 }).collect(),
            tris.iter().map(|&t| Triangle { vertices: t, tag: 0 }).collect(),
            Vec::new(),
        )
    }

    #[test]
    fn signed_area_examples() {
        assert_eq!(signed_area(v(0., 0.), v(1., 0.), v(0., 1.)), 0.5);
        assert_eq!(signed_area(v(0., 0.), v(0., 1.), v(1., 0.)), -0.5);
        assert_eq!(signed_area(v(0., 0.), v(1., 0.), v(2., 0.)), 0.0);
    }

    #[test]
    fn inscribed_radius_examples() {
        let r = inscribed_radius(v(0., 0.), v(1., 0.), v(0.5, 3f64.sqrt() / 2.)).unwrap();
        assert_relative_eq!(r, 3f64.sqrt() / 6., epsilon = 1e-14);
        let r = inscribed_radius(v(0., 0.), v(3., 0.), v(0., 4.)).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
        assert!(inscribed_radius(v(0., 0.), v(1., 0.), v(2., 0.)).is_err());
    }

    #[test]
    fn inscribed_radius_rigid_invariance() {
        let (a, b, c) = (v(0.1, 0.2), v(1.3, -0.4), v(0.7, 0.9));
        let r0 = inscribed_radius(a, b, c).unwrap();
        let rot = nalgebra::Rotation2::new(0.77);
        let t = v(-3.0, 12.5);
        let r1 = inscribed_radius(rot * a + t, rot * b + t, rot * c + t).unwrap();
        assert_relative_eq!(r0, r1, max_relative = 1e-12);
    }

    #[test]
    fn adjacency_single_and_pair() {
        let m = raw(&[(0., 0.), (1., 0.), (0., 1.)], &[[0, 1, 2]]);
        let adj = build_adjacency(&m).unwrap();
        assert_eq!(adj.neighbors, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);

        let m = raw(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)], &[[0, 1, 2], [0, 2, 3]]);
        let adj = build_adjacency(&m).unwrap();
        assert_eq!(adj.neighbors[0].len(), 3);
        assert_eq!(adj.neighbors[2].len(), 3);
        assert_eq!(adj.neighbors[1].len(), 2);
        let k = adj.edge_index(0, 2).unwrap();
        assert!(adj.edge_triangles[k][1].is_some());
    }

    #[test]
    fn adjacency_rejects_triple_edge() {
        let m = raw(
            &[(0., 0.), (1., 0.), (0.5, 1.), (0.5, -1.), (0.5, 2.)],
            &[[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        );
        match build_adjacency(&m) {
            Err(Error::NonConforming(0, 1, 3)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mesh_new_rejects_clockwise() {
        let r = Mesh::new(
            vec![
                Vertex { position: v(0., 0.), tag: 0 },
                Vertex { position: v(0., 1.), tag: 0 },
                Vertex { position: v(1., 0.), tag: 0 },
            ],
            vec![Triangle { vertices: [0, 1, 2], tag: 0 }],
            vec![],
        );
        assert!(matches!(r, Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn mesh_new_rejects_duplicates() {
        let r = Mesh::new(
            vec![
                Vertex { position: v(0., 0.), tag: 0 },
                Vertex { position: v(1., 0.), tag: 0 },
                Vertex { position: v(0., 1.), tag: 0 },
                Vertex { position: v(1., 0.), tag: 0 },
                Vertex { position: v(1., 1.), tag: 0 },
            ],
            vec![Triangle { vertices: [0, 1, 2], tag: 0 }, Triangle { vertices: [3, 4, 2], tag: 0 }],
            vec![],
        );
        assert!(matches!(r, Err(Error::DuplicateVertex(1, 3))));
    }

    #[test]
    fn uniform_counts() {
        let unit = Rect::new(0., 1., 0., 1.).unwrap();
        let m = generate_uniform(&unit, 0.5).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (9, 8));
        let m = generate_uniform(&unit, 1.0).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (4, 2));
        assert!(generate_uniform(&unit, 0.0).is_err());
        assert!(generate_uniform(&unit, -1.0).is_err());
    }

    fn average_edge(m: &Mesh) -> f64 {
        let adj = build_adjacency(m).unwrap();
        adj.edges.iter().map(|e| (m.position(e[0]) - m.position(e[1])).norm()).sum::<f64>()
            / adj.edges.len() as f64
    }

    #[test]
    fn uniform_average_edge_near_target() {
        let m = generate_uniform(&Rect::square(1.0), 0.0158).unwrap();
        let avg = average_edge(&m);
        assert!((0.0134..=0.0182).contains(&avg), "avg {avg}");
        let area: f64 = (0..m.num_triangles()).map(|t| m.triangle_area(t)).sum();
        assert_relative_eq!(area, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn equilateral_lattice_is_valid() {
        let m = generate_equilateral(&Rect::square(1.0), 0.1).unwrap();
        let area: f64 = (0..m.num_triangles()).map(|t| m.triangle_area(t)).sum();
        assert_relative_eq!(area, 4.0, max_relative = 1e-10);
        let avg = average_edge(&m);
        assert!((avg - 0.1).abs() < 0.015, "avg {avg}");
        let adj = build_adjacency(&m).unwrap();
        // Euler characteristic of a disk.
        let chi = m.num_vertices() as i64 - adj.edges.len() as i64 + m.num_triangles() as i64;
        assert_eq!(chi, 1);
    }

    #[test]
    fn euler_and_symmetry_on_uniform() {
        let m = generate_uniform(&Rect::new(0., 2., 0., 1.).unwrap(), 0.1).unwrap();
        let adj = build_adjacency(&m).unwrap();
        let chi = m.num_vertices() as i64 - adj.edges.len() as i64 + m.num_triangles() as i64;
        assert_eq!(chi, 1);
        for (i, nb) in adj.neighbors.iter().enumerate() {
            for &j in nb {
                assert!(adj.neighbors[j].contains(&i));
            }
        }
        assert_eq!(adj.num_boundary_edges(), m.boundary_edges().len());
        for e in m.boundary_edges() {
            assert!(e.tag > 0);
        }
    }

    #[test]
    fn validate_reports_inversion() {
        let m = generate_uniform(&Rect::new(0., 1., 0., 1.).unwrap(), 0.5).unwrap();
        let r = validate(&m, None);
        assert!(r.is_valid());
        assert!(validate(&m, Some(&VectorField::default())).is_valid());
        assert!(validate(&m, Some(&VectorField::zeros(9))).is_valid());
        // Push the centre vertex (0.5, 0.5) far to the right, across its patch.
        let mut d = VectorField::zeros(9);
        d[4] = v(0.8, 0.0);
        let r = validate(&m, Some(&d));
        assert!(!r.inverted.is_empty());
        assert!(r.min_area <= 0.0);
    }

    #[test]
    fn adjacency_permutation_isomorphic() {
        let m = generate_uniform(&Rect::new(0., 1., 0., 1.).unwrap(), 0.25).unwrap();
        let n = m.num_vertices();
        // Reverse the vertex numbering.
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut verts = vec![m.vertices()[0]; n];
        for (old, &new) in perm.iter().enumerate() {
            verts[new] = m.vertices()[old];
        }
        let tris = m
            .triangles()
            .iter()
            .map(|t| Triangle { vertices: t.vertices.map(|i| perm[i]), tag: t.tag })
            .collect();
        let pm = Mesh::from_raw_parts(verts, tris, vec![]);
        let a = build_adjacency(&m).unwrap();
        let b = build_adjacency(&pm).unwrap();
        for i in 0..n {
            let mut mapped: Vec<usize> = a.neighbors[i].iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            assert_eq!(mapped, b.neighbors[perm[i]]);
        }
        assert_eq!(a.edges.len(), b.edges.len());
    }
}
