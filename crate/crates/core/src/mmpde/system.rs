use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::levelset::basis_gradients;
use crate::mesh::{build_adjacency, Mesh, Vec2};

/// Block sparsity of the P1 stiffness on a fixed reference mesh, with the
/// per-element geometric data reused by every reassembly.
#[derive(Clone, Debug)]
pub struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    diag: Vec<usize>,
    /// Block slots `(a, b)` of each triangle, row-major over its local vertices.
    slots: Vec<[usize; 9]>,
    grads: Vec<[Vec2; 3]>,
    areas: Vec<f64>,
    lumped_mass: Vec<f64>,
}

impl Pattern {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let adj = build_adjacency(mesh)?;
        let n = mesh.num_vertices();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, nb) in adj.neighbors.iter().enumerate() {
            let at = nb.partition_point(|&j| j < i);
            cols.extend_from_slice(&nb[..at]);
            diag.push(cols.len());
            cols.push(i);
            cols.extend_from_slice(&nb[at..]);
            row_ptr.push(cols.len());
        }
        let find = |i: usize, j: usize| -> usize {
            let row = &cols[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i] + row.binary_search(&j).expect("edge in pattern")
        };
        let mut slots = Vec::with_capacity(mesh.num_triangles());
        let mut grads = Vec::with_capacity(mesh.num_triangles());
        let mut areas = Vec::with_capacity(mesh.num_triangles());
        let mut lumped_mass = vec![0.0; n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let [a, b, c] = mesh.triangle_points(t);
            let (g, area) = basis_gradients(a, b, c);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
            let v = tri.vertices;
            let mut s = [0; 9];
            for (k, slot) in s.iter_mut().enumerate() {
                *slot = find(v[k / 3], v[k % 3]);
            }
            for &i in &v {
                lumped_mass[i] += area / 3.0;
            }
            slots.push(s);
            grads.push(g);
            areas.push(area);
        }
        Ok(Self { row_ptr, cols, diag, slots, grads, areas, lumped_mass })
    }

    pub fn num_vertices(&self) -> usize {
        self.diag.len()
    }

    /// Lumped P1 mass (one third of the incident areas) per vertex.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }
}

/// Symmetric block system `K δ = F` with one 2×2 block per vertex pair
/// sharing an edge (and the diagonal).
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    diag: Vec<usize>,
    blocks: Vec<Matrix2<f64>>,
    force: Vec<Vec2>,
}

fn element_omega(omega: &[f64], v: [usize; 3]) -> f64 {
    (omega[v[0]] + omega[v[1]] + omega[v[2]]) / 3.0
}

fn check_omega(omega: &[f64], n: usize) -> Result<()> {
    if omega.len() != n {
        return Err(Error::FieldLength { expected: n, got: omega.len() });
    }
    match omega.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
        Some(vertex) => Err(Error::NonPositiveMonitor { vertex, value: omega[vertex] }),
        None => Ok(()),
    }
}

impl AssembledSystem {
    fn zeros(pattern: &Pattern) -> Self {
        Self {
            row_ptr: pattern.row_ptr.clone(),
            cols: pattern.cols.clone(),
            diag: pattern.diag.clone(),
            blocks: vec![Matrix2::zeros(); pattern.cols.len()],
            force: vec![Vec2::zeros(); pattern.num_vertices()],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.diag.len()
    }

    pub fn force(&self) -> &[Vec2] {
        &self.force
    }

    pub fn diagonal(&self, i: usize) -> &Matrix2<f64> {
        &self.blocks[self.diag[i]]
    }

    /// Block `K_ij`, or `None` outside the sparsity pattern.
    pub fn block(&self, i: usize, j: usize) -> Option<&Matrix2<f64>> {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| &self.blocks[self.row_ptr[i] + k])
    }

    /// Column indices and blocks of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &Matrix2<f64>)> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(&self.blocks[r])
    }

    /// `K x`.
    pub fn apply(&self, x: &[Vec2]) -> Vec<Vec2> {
        (0..self.num_vertices())
            .map(|i| self.row(i).fold(Vec2::zeros(), |acc, (j, b)| acc + b * x[j]))
            .collect()
    }

    /// `K δ − F` per vertex.
    pub fn residual(&self, delta: &[Vec2]) -> Vec<Vec2> {
        self.apply(delta).into_iter().zip(&self.force).map(|(k, f)| k - f).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
    }

    /// `max |K_ij − K_jiᵀ|` over all stored blocks.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_vertices() {
            for (j, b) in self.row(i) {
                let t = self.block(j, i).expect("symmetric pattern");
                worst = worst.max((b - t.transpose()).amax());
            }
        }
        worst
    }

    /// Dense `2n × 2n` matrix, unknowns ordered `(x₀, y₀, x₁, y₁, …)`.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.num_vertices();
        let mut m = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for (j, b) in self.row(i) {
                m.view_mut((2 * i, 2 * j), (2, 2)).copy_from(b);
            }
        }
        m
    }

    /// Replaces the force by `−Σ_K ω_K ∫_K ∇φ_i` with `ω_K` the element
    /// mean of the vertex values.
    pub fn set_force(&mut self, pattern: &Pattern, mesh: &Mesh, omega: &[f64]) -> Result<()> {
        check_omega(omega, self.num_vertices())?;
        self.force.iter_mut().for_each(|f| *f = Vec2::zeros());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let v = tri.vertices;
            let w = element_omega(omega, v) * pattern.areas[t];
            for (a, &i) in v.iter().enumerate() {
                self.force[i] -= pattern.grads[t][a] * w;
            }
        }
        Ok(())
    }

    /// Pseudo-time damping: adds `τ m_i` to every diagonal block and
    /// `τ m_i δ_prev,i` to the force.
    pub fn add_relaxation(&mut self, pattern: &Pattern, tau: f64, previous: &[Vec2]) {
        if tau == 0.0 {
            return;
        }
        for i in 0..self.num_vertices() {
            let m = tau * pattern.lumped_mass[i];
            self.blocks[self.diag[i]] += Matrix2::identity() * m;
            self.force[i] += previous[i] * m;
        }
    }

    /// Multiplies `K` and `F` by `s`.
    pub fn scale(&mut self, s: f64) {
        self.blocks.iter_mut().for_each(|b| *b *= s);
        self.force.iter_mut().for_each(|f| *f *= s);
    }
}

/// Variable-coefficient Laplacian `∫ ω ∇φ_i·∇φ_j I₂` on the reference mesh.
pub fn assemble_laplacian(mesh: &Mesh, omega: &[f64]) -> Result<AssembledSystem> {
    assemble_laplacian_with(&Pattern::new(mesh)?, mesh, omega)
}

/// [`assemble_laplacian`] reusing a precomputed pattern.
pub fn assemble_laplacian_with(pattern: &Pattern, mesh: &Mesh, omega: &[f64]) -> Result<AssembledSystem> {
    let mut sys = AssembledSystem::zeros(pattern);
    sys.set_force(pattern, mesh, omega)?;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = &pattern.grads[t];
        let w = element_omega(omega, tri.vertices) * pattern.areas[t];
        for (k, &slot) in pattern.slots[t].iter().enumerate() {
            let k_ab = w * g[k / 3].dot(&g[k % 3]);
            sys.blocks[slot][(0, 0)] += k_ab;
            sys.blocks[slot][(1, 1)] += k_ab;
        }
    }
    Ok(sys)
}

/// Linear elasticity `∫ 2μ ε(u):ε(v) + λ div u div v` on the reference
/// mesh; the force has the same form as the Laplacian one.
pub fn assemble_elasticity(mesh: &Mesh, mu: f64, lambda: f64, omega: &[f64]) -> Result<AssembledSystem> {
    assemble_elasticity_with(&Pattern::new(mesh)?, mesh, mu, lambda, omega)
}

pub fn assemble_elasticity_with(
    pattern: &Pattern,
    mesh: &Mesh,
    mu: f64,
    lambda: f64,
    omega: &[f64],
) -> Result<AssembledSystem> {
    if !(mu > 0.0) {
        return Err(Error::param("mu", format!("must be > 0, got {mu}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda", format!("must be >= 0, got {lambda}")));
    }
    let mut sys = AssembledSystem::zeros(pattern);
    sys.set_force(pattern, mesh, omega)?;
    for t in 0..mesh.num_triangles() {
        let g = &pattern.grads[t];
        let area = pattern.areas[t];
        for (k, &slot) in pattern.slots[t].iter().enumerate() {
            let (ga, gb) = (g[k / 3], g[k % 3]);
            let dot = ga.dot(&gb);
            let block = Matrix2::from_fn(|c, d| {
                let delta = if c == d { dot } else { 0.0 };
                area * (mu * (delta + ga[d] * gb[c]) + lambda * ga[c] * gb[d])
            });
            sys.blocks[slot] += block;
        }
    }
    Ok(sys)
}
