use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::mesh::{build_adjacency, Mesh, Vec2};

use super::system::AssembledSystem;

/// What a vertex is allowed to do.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Free,
    /// Displacement prescribed.
    Fixed(Vec2),
    /// Normal component fixed, free along the given axis (0 = x, 1 = y).
    Slide { axis: usize, normal_value: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet on every boundary vertex.
    #[default]
    Dirichlet,
    /// Tangential slip along straight axis-aligned boundary segments;
    /// corners and other boundary vertices stay fixed.
    Slip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraints(Vec<Constraint>);

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self(vec![Constraint::Free; n])
    }

    pub fn new(kinds: Vec<Constraint>) -> Self {
        Self(kinds)
    }

    pub fn for_mesh(mesh: &Mesh, bc: BoundaryCondition) -> Result<Self> {
        let adj = build_adjacency(mesh)?;
        let n = mesh.num_vertices();
        let mut kinds = vec![Constraint::Free; n];
        // Per boundary vertex: which axes its boundary edges run along.
        let mut along = vec![[false; 2]; n];
        let mut other = vec![false; n];
        let tol = 1e-12 * mesh.bounding_box_diagonal();
        for (k, e) in adj.edges.iter().enumerate() {
            if !adj.is_boundary_edge(k) {
                continue;
            }
            let d = mesh.position(e[1]) - mesh.position(e[0]);
            for &v in e {
                if d.y.abs() <= tol {
                    along[v][0] = true;
                } else if d.x.abs() <= tol {
                    along[v][1] = true;
                } else {
                    other[v] = true;
                }
            }
        }
        for v in 0..n {
            if !adj.boundary_vertex[v] {
                continue;
            }
            kinds[v] = match (bc, along[v], other[v]) {
                (BoundaryCondition::Slip, [true, false], false) => Constraint::Slide { axis: 0, normal_value: 0.0 },
                (BoundaryCondition::Slip, [false, true], false) => Constraint::Slide { axis: 1, normal_value: 0.0 },
                _ => Constraint::Fixed(Vec2::zeros()),
            };
        }
        Ok(Self(kinds))
    }

    pub fn kinds(&self) -> &[Constraint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_free(&self) -> usize {
        self.0.iter().filter(|c| matches!(c, Constraint::Free)).count()
    }

    /// Overwrites the constrained components of `delta` with their data.
    pub fn impose(&self, delta: &mut [Vec2]) {
        for (d, c) in delta.iter_mut().zip(&self.0) {
            match *c {
                Constraint::Free => {}
                Constraint::Fixed(v) => *d = v,
                Constraint::Slide { axis, normal_value } => d[1 - axis] = normal_value,
            }
        }
    }

    /// Zeroes the constrained components of an increment.
    pub fn project_increment(&self, inc: &mut [Vec2]) {
        for (d, c) in inc.iter_mut().zip(&self.0) {
            match *c {
                Constraint::Free => {}
                Constraint::Fixed(_) => *d = Vec2::zeros(),
                Constraint::Slide { axis, .. } => d[1 - axis] = 0.0,
            }
        }
    }

    pub fn rotated(&self, r: &Matrix2<f64>) -> Self {
        Self(
            self.0
                .iter()
                .map(|c| match *c {
                    Constraint::Fixed(v) => Constraint::Fixed(r * v),
                    other => other,
                })
                .collect(),
        )
    }
}

/// One simultaneous Jacobi update `δ_i ← δ_i − K_ii⁻¹ (Σ_j K_ij δ_j − F_i)`
/// of every free vertex.
pub fn jacobi_sweep(system: &AssembledSystem, delta: &[Vec2], constraints: &Constraints) -> Result<Vec<Vec2>> {
    jacobi_sweep_scaled(system, delta, constraints, 1.0)
}

/// [`jacobi_sweep`] with the update scaled by `step`.
pub fn jacobi_sweep_scaled(
    system: &AssembledSystem,
    delta: &[Vec2],
    constraints: &Constraints,
    step: f64,
) -> Result<Vec<Vec2>> {
    let n = system.num_vertices();
    if delta.len() != n || constraints.len() != n {
        return Err(Error::FieldLength { expected: n, got: delta.len().min(constraints.len()) });
    }
    let mut out = delta.to_vec();
    for (i, c) in constraints.kinds().iter().enumerate() {
        if matches!(c, Constraint::Fixed(_)) {
            continue;
        }
        let r = system.row(i).fold(-system.force()[i], |acc, (j, b)| acc + b * delta[j]);
        let kii = system.diagonal(i);
        let scale = kii.amax();
        match *c {
            Constraint::Free => {
                let inv = kii
                    .try_inverse()
                    .filter(|_| kii.determinant().abs() > 1e-14 * scale * scale)
                    .ok_or(Error::SingularBlock(i))?;
                out[i] -= inv * r * step;
            }
            Constraint::Slide { axis, .. } => {
                let k = kii[(axis, axis)];
                if !(k.abs() > 1e-14 * scale) {
                    return Err(Error::SingularBlock(i));
                }
                out[i][axis] -= step * r[axis] / k;
            }
            Constraint::Fixed(_) => unreachable!(),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_uniform, BoundaryEdge, Rect, Triangle, Vertex};
    use crate::mmpde::assemble_laplacian;

    fn grid() -> Mesh {
        generate_uniform(&Rect::square(1.0), 0.25).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let m = grid();
        let sys = assemble_laplacian(&m, &vec![2.0; m.num_vertices()]).unwrap();
        let c = Constraints::for_mesh(&m, BoundaryCondition::Dirichlet).unwrap();
        let d = vec![Vec2::zeros(); m.num_vertices()];
        let next = jacobi_sweep(&sys, &d, &c).unwrap();
        assert!(next.iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn single_free_vertex_solved_in_one_sweep() {
        // Fan of four triangles around a centre vertex.
        let pos = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        let vertices = pos.iter().map(|&(x, y)| Vertex { position: Vec2::new(x, y), tag: 0 }).collect();
        let triangles = [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]]
            .into_iter()
            .map(|v| Triangle { vertices: v, tag: 0 })
            .collect();
        let boundary = [[1, 2], [2, 3], [3, 4], [4, 1]].into_iter().map(|v| BoundaryEdge { vertices: v, tag: 1 }).collect();
        let m = Mesh::new(vertices, triangles, boundary).unwrap();
        let omega = [1.0, 5.0, 1.0, 1.0, 2.0];
        let sys = assemble_laplacian(&m, &omega).unwrap();
        let c = Constraints::for_mesh(&m, BoundaryCondition::Dirichlet).unwrap();
        let d = jacobi_sweep(&sys, &[Vec2::zeros(); 5], &c).unwrap();
        let oracle = sys.diagonal(0).try_inverse().unwrap() * sys.force()[0];
        assert!((d[0] - oracle).norm() < 1e-15);
        assert!(sys.residual(&d)[0].norm() < 1e-14);
        let again = jacobi_sweep(&sys, &d, &c).unwrap();
        assert!((again[0] - d[0]).norm() < 1e-14);
        assert!(again[1..].iter().all(|x| *x == Vec2::zeros()));
    }

    #[test]
    fn slip_constraints_on_square() {
        let m = grid();
        let c = Constraints::for_mesh(&m, BoundaryCondition::Slip).unwrap();
        let corner = (0..m.num_vertices()).find(|&i| m.position(i) == Vec2::new(-1.0, -1.0)).unwrap();
        let bottom = (0..m.num_vertices()).find(|&i| m.position(i) == Vec2::new(0.0, -1.0)).unwrap();
        let left = (0..m.num_vertices()).find(|&i| m.position(i) == Vec2::new(-1.0, 0.5)).unwrap();
        assert_eq!(c.kinds()[corner], Constraint::Fixed(Vec2::zeros()));
        assert_eq!(c.kinds()[bottom], Constraint::Slide { axis: 0, normal_value: 0.0 });
        assert_eq!(c.kinds()[left], Constraint::Slide { axis: 1, normal_value: 0.0 });
        assert_eq!(c.num_free(), 49);
    }

    #[test]
    fn sweep_keeps_constraints_exact() {
        let m = grid();
        let omega: Vec<f64> = m.positions().iter().map(|p| 1.0 + 10.0 * (-(p.norm() - 0.5).powi(2) * 50.0).exp()).collect();
        let sys = assemble_laplacian(&m, &omega).unwrap();
        let c = Constraints::for_mesh(&m, BoundaryCondition::Slip).unwrap();
        let mut d = vec![Vec2::zeros(); m.num_vertices()];
        for _ in 0..20 {
            d = jacobi_sweep(&sys, &d, &c).unwrap();
        }
        for (x, k) in d.iter().zip(c.kinds()) {
            match *k {
                Constraint::Fixed(v) => assert_eq!(*x, v),
                Constraint::Slide { axis, normal_value } => assert_eq!(x[1 - axis], normal_value),
                Constraint::Free => {}
            }
        }
        assert!(d.iter().any(|x| x.x != 0.0));
    }
}
