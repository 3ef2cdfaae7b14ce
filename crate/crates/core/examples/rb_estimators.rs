//! Grows a reduced space one snapshot at a time and compares the true
//! reduced-basis errors with their a posteriori bounds at random parameters.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pareto_trrb::driver::ExperimentConfig;
use pareto_trrb::rb::RbSpace;
use pareto_trrb::{BoxBounds, MultiObjective};

fn sample(rng: &mut ChaCha8Rng, b: &BoxBounds) -> DVector<f64> {
    DVector::from_iterator(
        b.dim(),
        (0..b.dim()).map(|j| if b.is_fixed(j) { b.lower()[j] } else { rng.random_range(b.lower()[j]..b.upper()[j]) }),
    )
}

fn main() -> pareto_trrb::Result<()> {
    let p = ExperimentConfig::benchmark().build_problem()?;
    let b = p.bounds().clone();
    let fom = p.fom();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let probes: Vec<DVector<f64>> = (0..20).map(|_| sample(&mut rng, &b)).collect();
    let sols = probes.iter().map(|u| p.solution(u)).collect::<pareto_trrb::Result<Vec<_>>>()?;
    let mut space = RbSpace::new(p.clone());
    println!("{:>4} {:>11} {:>11} {:>11} {:>11}", "dim", "state err", "bound", "J1 err", "bound");
    for _ in 0..5 {
        space.enrich(&sample(&mut rng, &b), &[0, 1, 2])?;
        let (mut se, mut sb, mut je, mut jb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (u, sol) in probes.iter().zip(&sols) {
            let rp = space.reduce(u)?;
            let est = space.estimates(&rp);
            se = se.max(fom.v_norm(&(&sol.state - space.lift(&rp.state))));
            sb = sb.max(est.state);
            je = je.max((p.eval_cost(u, 0)? - space.value(&rp, 0)).abs());
            jb = jb.max(est.cost[0]);
        }
        println!("{:>4} {se:>11.3e} {sb:>11.3e} {je:>11.3e} {jb:>11.3e}", space.dim());
    }
    Ok(())
}
