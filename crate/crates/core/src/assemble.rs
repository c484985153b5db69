//! P1 assembly of the affine stiffness blocks and the mass matrix.
//!
//! Per subdomain `s` two parameter-independent blocks are produced:
//! a shear block `∫_{Ω_s} 2 ε(u):ε(v) dx` and a dilatation block
//! `∫_{Ω_s} div(u) div(v) dx`. The full plane-strain form is recovered as
//! `a(·,·;μ) = Σ_s  μ_L(s)·shear_s + λ_L(s)·dil_s` with the Lamé parameters
//! supplied by the parameter module. The mass matrix is the exact L² product
//! with unit density. Dirichlet DOFs are eliminated (rows/columns dropped),
//! keeping every pencil symmetric definite.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, CsrPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Shear,
    Dilatation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTag {
    pub subdomain: usize,
    pub kind: BlockKind,
}

/// Parameter-independent stiffness blocks plus the mass matrix, all on one
/// shared sparsity pattern so parameter combinations are cheap.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    blocks: Vec<(BlockTag, CsrMatrix)>,
    mass: Arc<CsrMatrix>,
    geometry: GeometrySpec,
    n_dofs: usize,
    subdomains: Vec<usize>,
}

impl AffineOperator {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn blocks(&self) -> &[(BlockTag, CsrMatrix)] {
        &self.blocks
    }

    pub fn block(&self, q: usize) -> &CsrMatrix {
        &self.blocks[q].1
    }

    pub fn block_tags(&self) -> Vec<BlockTag> {
        self.blocks.iter().map(|(t, _)| *t).collect()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn mass_arc(&self) -> Arc<CsrMatrix> {
        self.mass.clone()
    }

    pub fn geometry(&self) -> &GeometrySpec {
        &self.geometry
    }

    /// Sorted distinct subdomain ids; blocks appear as (shear, dilatation)
    /// pairs in this order, matching the coefficient layout.
    pub fn subdomains(&self) -> &[usize] {
        &self.subdomains
    }

    /// `Σ_q coeffs[q] · A_q`.
    pub fn combine(&self, coeffs: &[f64]) -> CsrMatrix {
        assert_eq!(coeffs.len(), self.blocks.len());
        let mats: Vec<&CsrMatrix> = self.blocks.iter().map(|(_, m)| m).collect();
        CsrMatrix::linear_combination(coeffs, &mats)
    }
}

struct ElementGeometry {
    area: f64,
    /// Gradient of each P1 shape function, `∇φ_i = (b_i, c_i) / (2·area)`.
    b: [f64; 3],
    c: [f64; 3],
}

fn element_geometry(p: [[f64; 2]; 3]) -> ElementGeometry {
    let b = [
        p[1][1] - p[2][1],
        p[2][1] - p[0][1],
        p[0][1] - p[1][1],
    ];
    let c = [
        p[2][0] - p[1][0],
        p[0][0] - p[2][0],
        p[1][0] - p[0][0],
    ];
    let area = 0.5 * (b[0] * (p[0][0] - p[2][0]) + b[1] * (p[1][0] - p[2][0]));
    ElementGeometry { area, b, c }
}

/// 6x6 element matrices in local DOF order (node0_x, node0_y, ..., node2_y).
fn element_matrices(g: &ElementGeometry) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let inv2a = 1.0 / (2.0 * g.area);
    // Rows of B map local DOFs to the strain components (ε_xx, ε_yy, γ_xy).
    let mut bmat = [[0.0; 6]; 3];
    for i in 0..3 {
        bmat[0][2 * i] = g.b[i] * inv2a;
        bmat[1][2 * i + 1] = g.c[i] * inv2a;
        bmat[2][2 * i] = g.c[i] * inv2a;
        bmat[2][2 * i + 1] = g.b[i] * inv2a;
    }
    let mut shear = [[0.0; 6]; 6];
    let mut dil = [[0.0; 6]; 6];
    // 2·ε(u):ε(v) = [ε_xx ε_yy γ_xy] diag(2,2,1) [ε'_xx ε'_yy γ'_xy]ᵀ
    let d_shear = [2.0, 2.0, 1.0];
    for r in 0..6 {
        for s in 0..6 {
            let mut acc_shear = 0.0;
            for k in 0..3 {
                acc_shear += bmat[k][r] * d_shear[k] * bmat[k][s];
            }
            let div_r = bmat[0][r] + bmat[1][r];
            let div_s = bmat[0][s] + bmat[1][s];
            shear[r][s] = g.area * acc_shear;
            dil[r][s] = g.area * div_r * div_s;
        }
    }
    (shear, dil)
}

/// Exact P1 mass on a triangle, per scalar component: area/6 on the diagonal,
/// area/12 off-diagonal.
fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

pub fn assemble(mesh: &Mesh) -> Result<AffineOperator> {
    let n = mesh.n_dofs;
    let subdomains = mesh.geometry.subdomain_ids();
    let block_index = |sub: usize, kind: BlockKind| -> usize {
        let s = subdomains.binary_search(&sub).unwrap();
        2 * s + if kind == BlockKind::Shear { 0 } else { 1 }
    };

    let mut block_triplets: Vec<Vec<(usize, usize, f64)>> =
        vec![Vec::new(); 2 * subdomains.len()];
    let mut mass_triplets: Vec<(usize, usize, f64)> = Vec::new();

    for t in &mesh.triangles {
        let coords = t.vertices.map(|v| mesh.vertices[v]);
        let g = element_geometry(coords);
        if g.area <= 0.0 {
            return Err(Error::Assembly(format!(
                "triangle {:?} has non-positive area {}",
                t.vertices, g.area
            )));
        }
        let dofs: [Option<[usize; 2]>; 3] = t.vertices.map(|v| mesh.dof_map[v]);
        let (shear, dil) = element_matrices(&g);
        let shear_idx = block_index(t.subdomain, BlockKind::Shear);
        let dil_idx = block_index(t.subdomain, BlockKind::Dilatation);
        for i in 0..3 {
            let Some(di) = dofs[i] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs[j] else { continue };
                for ci in 0..2 {
                    for cj in 0..2 {
                        let (r, s) = (di[ci], dj[cj]);
                        let (lr, ls) = (2 * i + ci, 2 * j + cj);
                        block_triplets[shear_idx].push((r, s, shear[lr][ls]));
                        block_triplets[dil_idx].push((r, s, dil[lr][ls]));
                    }
                }
            }
        }
        let m = element_mass(g.area);
        for i in 0..3 {
            let Some(di) = dofs[i] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs[j] else { continue };
                for c in 0..2 {
                    mass_triplets.push((di[c], dj[c], m[i][j]));
                }
            }
        }
    }

    let mut all_lists: Vec<&[(usize, usize, f64)]> =
        block_triplets.iter().map(|v| v.as_slice()).collect();
    all_lists.push(&mass_triplets);
    let pattern = CsrPattern::union_of(n, &all_lists);

    let blocks = subdomains
        .iter()
        .flat_map(|&sub| {
            [
                BlockTag {
                    subdomain: sub,
                    kind: BlockKind::Shear,
                },
                BlockTag {
                    subdomain: sub,
                    kind: BlockKind::Dilatation,
                },
            ]
        })
        .zip(block_triplets.iter())
        .map(|(tag, triplets)| (tag, CsrMatrix::on_pattern(pattern.clone(), triplets)))
        .collect();
    let mass = Arc::new(CsrMatrix::on_pattern(pattern, &mass_triplets));

    Ok(AffineOperator {
        blocks,
        mass,
        geometry: mesh.geometry.clone(),
        n_dofs: n,
        subdomains,
    })
}
