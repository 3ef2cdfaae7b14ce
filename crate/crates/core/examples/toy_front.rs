//! Hierarchical front of two weighted quadratics in the plane. The exact
//! front is the image of the segment between the two centers.

use std::sync::Arc;

use nalgebra::DVector;
use pareto_trrb::driver::{run_hierarchy_on, Backend, Model, PsmConfig, RunSettings};
use pareto_trrb::moo::coverage;
use pareto_trrb::removal::RemovalConfig;
use pareto_trrb::{BoxBounds, QuadraticObjectives};

fn main() -> pareto_trrb::Result<()> {
    let h = 0.05;
    let c0 = DVector::from_column_slice(&[0.0, 0.0]);
    let c1 = DVector::from_column_slice(&[1.0, 0.5]);
    let w = [1.0, 2.0];
    let d2 = (&c1 - &c0).norm_squared();
    let q = QuadraticObjectives::new(BoxBounds::from_slices(&[-2.0, -2.0], &[2.0, 2.0])?, vec![c0, c1], w.to_vec())?;
    let set = RunSettings {
        backend: Backend::Fe,
        psm: PsmConfig { h, d_tilde: vec![0.001; 2], r: vec![1.0; 2], t_bar: vec![0.0; 2], compute_pareto_front: true, corner_starts: false },
        removal: RemovalConfig::default(),
        tr: Default::default(),
        al: Default::default(),
        newton: Default::default(),
        jobs: 1,
    };
    let rep = run_hierarchy_on(&Model::Analytic(Arc::new(q)), &set)?;
    for e in &rep.archive {
        println!("u = ({:+.4}, {:+.4})  J = ({:.5}, {:.5})", e.u[0], e.u[1], e.objectives[0], e.objectives[1]);
    }
    let exact: Vec<Vec<f64>> = (0..=2000)
        .map(|n| {
            let s = n as f64 / 2000.0;
            vec![0.5 * w[0] * s * s * d2, 0.5 * w[1] * (1.0 - s) * (1.0 - s) * d2]
        })
        .collect();
    println!("{} points, coverage of the exact front {:.4} (h = {h})", rep.archive.len(), coverage(&rep.front(), &exact)?);
    Ok(())
}
