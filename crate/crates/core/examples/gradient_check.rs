//! Adjoint gradients and Hessian-vector products of the benchmark objectives
//! against central differences at a few random parameters.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pareto_trrb::driver::ExperimentConfig;
use pareto_trrb::MultiObjective;

fn main() -> pareto_trrb::Result<()> {
    let p = ExperimentConfig::benchmark().build_problem()?;
    let b = p.bounds().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps = 1e-5;
    let all = [0, 1, 2];
    for _ in 0..3 {
        let u = DVector::from_iterator(
            b.dim(),
            (0..b.dim()).map(|j| if b.is_fixed(j) { b.lower()[j] } else { rng.random_range(b.lower()[j]..b.upper()[j]) }),
        );
        println!("u = {:.3?}", u.as_slice());
        let grads = p.gradients(&u, &all)?;
        let dir = DVector::from_iterator(u.len(), (0..u.len()).map(|j| if b.is_fixed(j) { 0.0 } else { 1.0 })).normalize();
        let hv = p.hess_vecs(&u, &all, &dir)?;
        let gp = p.gradients(&(&u + &dir * eps), &all)?;
        let gm = p.gradients(&(&u - &dir * eps), &all)?;
        for i in 0..3 {
            let fd = DVector::from_iterator(
                u.len(),
                (0..u.len()).map(|j| {
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[j] += eps;
                    dn[j] -= eps;
                    (p.eval_cost(&up, i).unwrap() - p.eval_cost(&dn, i).unwrap()) / (2.0 * eps)
                }),
            );
            let hfd = (&gp[i] - &gm[i]) / (2.0 * eps);
            println!(
                "  J{}: |g| {:.3e}  gradient rel. err {:.2e}  Hessian-vector rel. err {:.2e}",
                i + 1,
                grads[i].norm(),
                (&grads[i] - fd).norm() / grads[i].norm(),
                (&hv[i] - hfd).norm() / hv[i].norm().max(f64::MIN_POSITIVE)
            );
        }
    }
    Ok(())
}
