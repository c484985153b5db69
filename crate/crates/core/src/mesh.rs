//! Structured triangulation of multi-rectangle domains.
//!
//! A single global tensor grid is generated from the union of all rectangle
//! breakpoints, so interfaces between rectangles conform by construction and
//! T-junction corners land on grid lines. Each kept cell is split into two
//! triangles along the same diagonal.

use crate::error::{Error, Result};
use crate::geometry::{GeometrySpec, COORD_TOL};

#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    /// Counterclockwise vertex indices.
    pub vertices: [usize; 3],
    pub subdomain: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geometry: GeometrySpec,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    /// Per-vertex Dirichlet flag.
    pub dirichlet: Vec<bool>,
    /// Per vertex: global DOF indices of the two displacement components,
    /// `None` for constrained vertices.
    pub dof_map: Vec<Option<[usize; 2]>>,
    pub n_dofs: usize,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_dirichlet_vertices(&self) -> usize {
        self.dirichlet.iter().filter(|&&d| d).count()
    }

    pub fn triangle_area(&self, t: &Triangle) -> f64 {
        let [a, b, c] = t.vertices.map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }
}

/// Breakpoint-conforming 1D subdivision: each interval between consecutive
/// breakpoints is split uniformly into `ceil(len/h)` steps.
fn subdivide(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut coords = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let steps = (len / h).ceil().max(1.0) as usize;
        for s in 1..=steps {
            coords.push(w[0] + len * s as f64 / steps as f64);
        }
    }
    coords
}

fn breakpoints(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() < COORD_TOL);
    v
}

pub fn build_mesh(spec: &GeometrySpec) -> Result<Mesh> {
    spec.validate()?;
    let h = spec.mesh_h;

    let xs = subdivide(
        &breakpoints(spec.rectangles.iter().flat_map(|r| [r.x.0, r.x.1])),
        h,
    );
    let ys = subdivide(
        &breakpoints(spec.rectangles.iter().flat_map(|r| [r.y.0, r.y.1])),
        h,
    );
    let (nx, ny) = (xs.len(), ys.len());

    // Subdomain of each cell, decided by its midpoint.
    let mut cell_subdomain = vec![None; (nx - 1) * (ny - 1)];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let mid = [(xs[i] + xs[i + 1]) / 2.0, (ys[j] + ys[j + 1]) / 2.0];
            cell_subdomain[j * (nx - 1) + i] = spec
                .rectangles
                .iter()
                .find(|r| r.contains(mid))
                .map(|r| r.subdomain);
        }
    }

    // Keep grid points incident to at least one occupied cell.
    let mut grid_to_vertex = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let mut used = false;
            for (dj, di) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                if j >= dj && i >= di && j - dj < ny - 1 && i - di < nx - 1 {
                    used |= cell_subdomain[(j - dj) * (nx - 1) + (i - di)].is_some();
                }
            }
            if used {
                grid_to_vertex[j * nx + i] = vertices.len();
                vertices.push([xs[i], ys[j]]);
            }
        }
    }

    let mut triangles = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let Some(subdomain) = cell_subdomain[j * (nx - 1) + i] else {
                continue;
            };
            let v00 = grid_to_vertex[j * nx + i];
            let v10 = grid_to_vertex[j * nx + i + 1];
            let v01 = grid_to_vertex[(j + 1) * nx + i];
            let v11 = grid_to_vertex[(j + 1) * nx + i + 1];
            triangles.push(Triangle {
                vertices: [v00, v10, v11],
                subdomain,
            });
            triangles.push(Triangle {
                vertices: [v00, v11, v01],
                subdomain,
            });
        }
    }

    let dirichlet: Vec<bool> = vertices
        .iter()
        .map(|&p| spec.is_dirichlet_point(p))
        .collect();
    if !dirichlet.iter().any(|&d| d) {
        return Err(Error::Mesh(
            "no vertex lies on the Dirichlet boundary at this resolution".into(),
        ));
    }

    let mut dof_map = Vec::with_capacity(vertices.len());
    let mut next = 0usize;
    for &d in &dirichlet {
        if d {
            dof_map.push(None);
        } else {
            dof_map.push(Some([next, next + 1]));
            next += 2;
        }
    }

    let mesh = Mesh {
        geometry: spec.clone(),
        vertices,
        triangles,
        dirichlet,
        dof_map,
        n_dofs: next,
    };
    for t in &mesh.triangles {
        if mesh.triangle_area(t) <= 0.0 {
            return Err(Error::Mesh("triangle with non-positive area".into()));
        }
    }
    Ok(mesh)
}
