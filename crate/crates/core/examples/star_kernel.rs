//! The deformation kernels and the algebra they induce: kernel identities on random
//! triples, and exact products and brackets of polynomial observables for several b.
//!
//! `cargo run --release --example star_kernel`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moyal::star::{jacobi_residual, mixed_identity_residual, poly_bracket, poly_sym_star};
use moyal::{DeformationParams, Polynomial};

fn main() -> moyal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for b in [0.0, 0.25, 0.5, 1.0] {
        let params = DeformationParams::new(1.0, b)?;
        let (mut jac, mut mixed) = (0.0f64, 0.0f64);
        for _ in 0..10_000 {
            let [l, m, n]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
            jac = jac.max(jacobi_residual(l, m, n, &params).abs());
            mixed = mixed.max(mixed_identity_residual(l, m, n, &params).abs());
        }
        println!("b = {b:<4}  max Jacobi residual {jac:.1e}  max mixed residual {mixed:.1e}");
    }

    let q2 = Polynomial::zero().with_term(2, 0, 1.0);
    let p2 = Polynomial::zero().with_term(0, 2, 1.0);
    let qp = Polynomial::zero().with_term(1, 1, 1.0);
    for b in [0.0, 0.5] {
        let params = DeformationParams::new(1.0, b)?;
        println!("b = {b}:");
        println!("  q^2 o p^2 = {}", poly_sym_star(&q2, &p2, &params));
        println!(
            "  [q, p]    = {}",
            poly_bracket(&Polynomial::q(), &Polynomial::p(), &params)
        );
        println!(
            "  [q^3, p^3]= {}",
            poly_bracket(&q2.mul(&Polynomial::q()), &p2.mul(&Polynomial::p()), &params)
        );
        println!("  [qp, q^2] = {}", poly_bracket(&qp, &q2, &params));
    }
    Ok(())
}
