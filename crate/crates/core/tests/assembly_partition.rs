//! Affine decomposition against a direct single-pass assembly of the full
//! plane-strain form (the oracle below shares no code with the block
//! assembly).

mod common;

use common::{beam_domain, beam_spec};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rbeig::assemble::assemble;
use rbeig::mesh::{build_mesh, Mesh};
use rbeig::parameter::ParameterPoint;

/// Direct assembly of `a(u,v;μ) = ∫ C(μ) ε(u):ε(v)` with the plane-strain
/// Voigt matrix per subdomain, no affine splitting.
fn direct_assembly(mesh: &Mesh, material: &[(f64, f64)]) -> DMatrix<f64> {
    let n = mesh.n_dofs;
    let mut a = DMatrix::zeros(n, n);
    for t in &mesh.triangles {
        let coords = t.vertices.map(|v| mesh.vertices[v]);
        let (p0, p1, p2) = (coords[0], coords[1], coords[2]);
        let area = 0.5
            * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
        let b = [p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]];
        let c = [p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]];
        let inv2a = 1.0 / (2.0 * area);

        let (young, poisson) = material[t.subdomain - 1];
        let mu_l = young / (2.0 * (1.0 + poisson));
        let lam_l = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        // Plane-strain Voigt matrix on (ε_xx, ε_yy, γ_xy).
        let d = [
            [lam_l + 2.0 * mu_l, lam_l, 0.0],
            [lam_l, lam_l + 2.0 * mu_l, 0.0],
            [0.0, 0.0, mu_l],
        ];
        let mut bmat = [[0.0; 6]; 3];
        for i in 0..3 {
            bmat[0][2 * i] = b[i] * inv2a;
            bmat[1][2 * i + 1] = c[i] * inv2a;
            bmat[2][2 * i] = c[i] * inv2a;
            bmat[2][2 * i + 1] = b[i] * inv2a;
        }
        let dofs = t.vertices.map(|v| mesh.dof_map[v]);
        for i in 0..3 {
            let Some(di) = dofs[i] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs[j] else { continue };
                for ci in 0..2 {
                    for cj in 0..2 {
                        let (lr, ls) = (2 * i + ci, 2 * j + cj);
                        let mut acc = 0.0;
                        for r in 0..3 {
                            for s in 0..3 {
                                acc += bmat[r][lr] * d[r][s] * bmat[s][ls];
                            }
                        }
                        a[(di[ci], dj[cj])] += area * acc;
                    }
                }
            }
        }
    }
    a
}

#[test]
fn affine_combination_matches_direct_assembly() {
    let mesh = build_mesh(&beam_spec(0.25)).unwrap();
    let op = assemble(&mesh).unwrap();
    let domain = beam_domain();
    let mut rng = ChaCha12Rng::seed_from_u64(2024);

    for trial in 0..5 {
        let mu = ParameterPoint(
            (0..3)
                .flat_map(|_| {
                    [
                        10.0 + 90.0 * rng.random::<f64>(),
                        0.1 + 0.3 * rng.random::<f64>(),
                    ]
                })
                .collect(),
        );
        let theta = domain.affine_coefficients(&mu).unwrap();
        let combined = op.combine(&theta).to_dense();
        let material: Vec<(f64, f64)> = (0..3).map(|s| (mu.young(s), mu.poisson(s))).collect();
        let direct = direct_assembly(&mesh, &material);

        let scale = direct.norm();
        let diff = (&combined - &direct).norm();
        assert!(
            diff <= 1e-12 * scale,
            "trial {trial}: relative deviation {:.3e}",
            diff / scale
        );
    }
}

#[test]
fn partition_per_subdomain_with_unit_coefficients() {
    // E = 1, ν = 0 turns the full form into 0.5·shear; restricting the direct
    // assembly to one subdomain must match the block combination that zeroes
    // the other subdomains.
    let mesh = build_mesh(&beam_spec(1.0 / 3.0)).unwrap();
    let op = assemble(&mesh).unwrap();
    let material = vec![(1.0, 0.0); 3];
    for active in 1..=3usize {
        let mut only_active = mesh.clone();
        only_active.triangles.retain(|t| t.subdomain == active);
        let direct = direct_assembly(&only_active, &material);

        let theta: Vec<f64> = (1..=3)
            .flat_map(|s| if s == active { [0.5, 0.0] } else { [0.0, 0.0] })
            .collect();
        let combined = op.combine(&theta).to_dense();
        let diff = (&combined - &direct).norm();
        assert!(diff <= 1e-12 * direct.norm().max(1.0));
    }
}
