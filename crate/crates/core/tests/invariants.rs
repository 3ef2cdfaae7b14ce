use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use pareto_trrb::driver::ExperimentConfig;
use pareto_trrb::fem::PdeProblem;
use pareto_trrb::moo::{
    build_grid, coverage, dominates_strictly, dominates_weakly, interval_removal, is_redundant, non_dominated, project_to_d,
    scalarize, t_d, UtzRecord,
};
use pareto_trrb::rb::RbSpace;
use pareto_trrb::MultiObjective;

fn points(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, k), 1..40)
}

fn small_problem() -> Arc<PdeProblem> {
    ExperimentConfig::reduced_benchmark(6, 0.1).build_problem().unwrap()
}

proptest! {
    #[test]
    fn non_dominated_filter_is_sound_and_idempotent(pts in points(3)) {
        let keep = non_dominated(&pts);
        let kept: Vec<Vec<f64>> = keep.iter().map(|&i| pts[i].clone()).collect();
        for a in &kept {
            for b in &kept {
                prop_assert!(!dominates_strictly(a, b));
            }
        }
        for (i, p) in pts.iter().enumerate() {
            if !keep.contains(&i) {
                prop_assert!(kept.iter().any(|q| dominates_strictly(q, p)));
            }
        }
        prop_assert_eq!(non_dominated(&kept).len(), kept.len());
    }

    #[test]
    fn coverage_is_a_one_sided_distance(a in points(2), b in points(2)) {
        prop_assert_eq!(coverage(&a, &a).unwrap(), 0.0);
        let ab: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        let c = coverage(&a, &b).unwrap();
        prop_assert!(c >= 0.0);
        // more approximating points never hurt
        prop_assert!(coverage(&ab, &b).unwrap() <= c);
        prop_assert_eq!(coverage(&ab, &b).unwrap(), 0.0);
    }

    #[test]
    fn projection_lands_on_the_faces(y in prop::collection::vec(0.0..2.0f64, 3), r in prop::collection::vec(0.2..2.0f64, 3)) {
        let shifted = [-0.1, -0.2, -0.05];
        let t = t_d(&y, &shifted, &r).unwrap();
        let z = project_to_d(&y, &shifted, &r).unwrap();
        prop_assert!(t_d(&z, &shifted, &r).unwrap().abs() < 1e-12);
        // y is reached from z along r at level t
        prop_assert!((scalarize(&z, &r, &y).unwrap() - t).abs() < 1e-12);
        prop_assert!(dominates_weakly(&z, &y));
    }

    #[test]
    fn grid_points_sit_on_their_face(h in 0.05..0.5f64, nadir in prop::collection::vec(0.5..2.0f64, 3)) {
        let shifted = [0.0, 0.1, -0.1];
        let r = [1.0; 3];
        let g = build_grid(h, &shifted, &nadir, &[0.0; 3], &r).unwrap();
        for p in &g {
            prop_assert_eq!(p.z[p.face], shifted[p.face]);
            for j in 0..3 {
                prop_assert!(p.z[j] >= shifted[j] && p.z[j] <= nadir[j] + 1e-9);
                if j != p.face {
                    let steps = (p.z[j] - shifted[j] - 0.5 * h) / h;
                    prop_assert!((steps - steps.round()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn removed_reference_points_share_the_solution(z0 in 0.0..0.5f64, z1 in 0.0..0.5f64, t in 0.0..0.3f64, y0 in 0.0..0.3f64) {
        let h = 0.05;
        let mut grid = build_grid(h, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let before = grid.len();
        // a solution at t with J_0 - z_0 = y0 <= t
        let y0 = y0.min(t);
        let solved = UtzRecord {
            index_set: vec![0, 1],
            u: DVector::zeros(1),
            t,
            z: vec![z0, z1],
            objectives: vec![z0 + y0, z1 + t],
        };
        let removed = interval_removal(&mut grid, &solved, &[1.0, 1.0]);
        prop_assert_eq!(removed.len() + grid.len(), before);
        for rec in &removed {
            // every shifted reference point has the same optimal value
            prop_assert!((scalarize(&rec.z, &[1.0, 1.0], &solved.objectives).unwrap() - t).abs() <= 1e-9 + (t - y0));
            prop_assert!(rec.z[0] <= z0 + 1e-9 && rec.z[1] <= z1 + 1e-9);
        }
    }

    #[test]
    fn lower_level_records_make_sublevel_points_redundant(z in 0.0..1.0f64, jv in 0.0..1.0f64, t in 0.0..0.2f64) {
        let rec = UtzRecord { index_set: vec![0], u: DVector::zeros(1), t, z: vec![z], objectives: vec![z + t, jv] };
        let r = [1.0, 1.0];
        prop_assert!(is_redundant(&[0, 1], &[z, jv - t + 0.01], &r, std::slice::from_ref(&rec)));
        prop_assert!(!is_redundant(&[0, 1], &[z, jv - t - 0.01], &r, std::slice::from_ref(&rec)));
        prop_assert!(!is_redundant(&[0, 1], &[z + 0.01, jv], &r, std::slice::from_ref(&rec)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduced_model_reproduces_its_snapshots(k2 in 0.1..4.0f64, k3 in 0.1..4.0f64, k4 in 0.1..4.0f64) {
        let p = small_problem();
        let u = DVector::from_column_slice(&[2.0, k2, k3, k4, 0.3]);
        let mut space = RbSpace::new(p.clone());
        space.enrich(&u, &[0, 1, 2]).unwrap();
        prop_assert_eq!(space.dim(), 3);
        let rp = space.reduce(&u).unwrap();
        let est = space.estimates(&rp);
        prop_assert!(est.state <= 1e-7);
        let full = p.values(&u, &[0, 1, 2]).unwrap();
        for (i, j) in full.iter().enumerate() {
            prop_assert!((space.value(&rp, i) - j).abs() <= 1e-10);
        }
        // enriching again at the same parameter adds nothing
        let again = space.enrich(&u, &[0, 1, 2]).unwrap();
        prop_assert_eq!(again.added, 0);
    }

    #[test]
    fn energy_error_shrinks_as_the_space_grows(k in prop::collection::vec(0.1..4.0f64, 9)) {
        let p = small_problem();
        let probe = DVector::from_column_slice(&[2.0, k[0], k[1], k[2], 0.3]);
        let y = p.solve_state(&probe).unwrap();
        let mut space = RbSpace::new(p.clone());
        let mut last = f64::INFINITY;
        for c in k[3..].chunks(3) {
            space.enrich(&DVector::from_column_slice(&[2.0, c[0], c[1], c[2], 0.3]), &[0, 1]).unwrap();
            let rp = space.reduce(&probe).unwrap();
            let e = &y - space.lift(&rp.state);
            // Galerkin projection is the best approximation in the energy norm
            let energy = p.fom().bilinear(&probe, &e, &e).sqrt();
            prop_assert!(energy <= last * (1.0 + 1e-8) + 1e-12);
            prop_assert!(p.fom().v_norm(&e) <= space.estimates(&rp).state + 1e-12);
            last = energy;
        }
    }
}
