//! Temporary performance probe (removed before final).
mod common;
use common::{beam_domain, beam_operator};
use nalgebra::DMatrix;
use rbeig::eigensolve::{smallest_sorted, solve_detailed, SolverOptions};
use std::time::Instant;

#[test]
#[ignore]
fn probe() {
    // dense partial solver vs nalgebra full
    for n in [100usize, 150, 200, 250] {
        let a = DMatrix::<f64>::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let t = Instant::now();
        let reps = 30;
        let mut s = 0.0;
        for _ in 0..reps {
            let (v, _) = smallest_sorted(&a, 13);
            s += v[0];
        }
        let partial_ms = t.elapsed().as_secs_f64() * 1000.0 / reps as f64;
        let t = Instant::now();
        for _ in 0..reps {
            let se = a.clone().symmetric_eigen();
            s += se.eigenvalues[0];
        }
        let full_ms = t.elapsed().as_secs_f64() * 1000.0 / reps as f64;
        println!("n={n}: partial {partial_ms:.2} ms vs nalgebra-full {full_ms:.2} ms ({s:.1})");
    }

    // detailed solve at desk scale
    let op = beam_operator(0.045);
    println!("desk beam n_dofs = {}", op.n_dofs());
    let domain = beam_domain();
    let theta = domain.affine_coefficients(domain.reference()).unwrap();
    let t = Instant::now();
    let sol = solve_detailed(&op, &theta, 10, &SolverOptions::default()).unwrap();
    println!("detailed solve (10 pairs): {:.1} ms, lambda1 = {:.4}", t.elapsed().as_secs_f64() * 1000.0, sol.values[0]);
    let t = Instant::now();
    let _ = solve_detailed(&op, &theta, 10, &SolverOptions::default()).unwrap();
    println!("second run: {:.1} ms", t.elapsed().as_secs_f64() * 1000.0);
}
