//! Shared fixtures: the three-subdomain beam at test resolutions and an
//! independent Jacobi-rotation eigensolver used as the brute-force oracle.
//! The oracle shares no code with the production solve paths.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rbeig::assemble::{assemble, AffineOperator};
use rbeig::geometry::{GeometrySpec, Rect, Segment};
use rbeig::mesh::build_mesh;
use rbeig::parameter::{ParameterDomain, SubdomainRanges};

pub fn beam_spec(h: f64) -> GeometrySpec {
    GeometrySpec {
        rectangles: vec![
            Rect::new((0.0, 1.0), (0.0, 1.0), 1),
            Rect::new((1.0, 2.0), (0.0, 1.0), 2),
            Rect::new((2.0, 3.0), (0.0, 1.0), 3),
        ],
        dirichlet_edges: vec![
            Segment::new([0.0, 0.0], [0.0, 1.0]),
            Segment::new([3.0, 0.0], [3.0, 1.0]),
        ],
        mesh_h: h,
    }
}

pub fn beam_operator(h: f64) -> AffineOperator {
    assemble(&build_mesh(&beam_spec(h)).unwrap()).unwrap()
}

pub fn beam_domain() -> ParameterDomain {
    ParameterDomain::new(vec![
        SubdomainRanges {
            young: (10.0, 100.0),
            poisson: (0.1, 0.4),
        };
        3
    ])
    .unwrap()
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Ascending eigenvalues, orthonormal eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..200 {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Generalized dense oracle via explicit `M^{-1/2}`: eigenpairs of
/// `A x = λ M x`, m-orthonormal, ascending.
pub fn jacobi_generalized(a: &DMatrix<f64>, m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let (mvals, mvecs) = jacobi_eigen(m);
    assert!(
        mvals.iter().all(|&x| x > 0.0),
        "oracle requires SPD mass matrix"
    );
    let mut s = DMatrix::zeros(n, n);
    for k in 0..n {
        let w = 1.0 / mvals[k].sqrt();
        let col = mvecs.column(k);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += w * col[i] * col[j];
            }
        }
    }
    let b = &s * a * &s;
    let b = 0.5 * (&b + b.transpose());
    let (values, y) = jacobi_eigen(&b);
    let x = &s * y;
    (values, x)
}
