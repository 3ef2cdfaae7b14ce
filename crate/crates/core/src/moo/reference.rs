//! Reference points: the Pascoletti-Serafini scalarization, ideal points,
//! face-aligned reference grids and the filters that discard reference
//! points whose solutions are already known.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Relative tolerance for comparing grid coordinates built from the same lattice.
const COORD_TOL: f64 = 1e-10;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= COORD_TOL * a.abs().max(b.abs()).max(1.0)
}

fn check_direction(r: &[f64]) -> Result<()> {
    if r.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(format!("direction {r:?} must be positive")));
    }
    Ok(())
}

/// `max_i (x_i - z_i) / r_i`.
pub fn scalarize(z: &[f64], r: &[f64], x: &[f64]) -> Result<f64> {
    check_len(z.len(), r.len())?;
    check_len(z.len(), x.len())?;
    check_direction(r)?;
    Ok(x.iter().zip(z).zip(r).map(|((x, z), r)| (x - z) / r).fold(f64::NEG_INFINITY, f64::max))
}

/// Componentwise minimum of attained objective vectors.
pub fn ideal_point(values: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = values.first().ok_or_else(|| Error::InvalidInput("no objective vectors".into()))?;
    let mut out = first.clone();
    for v in values {
        check_len(out.len(), v.len())?;
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.min(*x);
        }
    }
    Ok(out)
}

pub fn shifted_ideal(ideal: &[f64], shift: &[f64]) -> Result<Vec<f64>> {
    check_len(ideal.len(), shift.len())?;
    if shift.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput(format!("ideal point shift {shift:?} must be positive")));
    }
    Ok(ideal.iter().zip(shift).map(|(y, d)| y - d).collect())
}

/// `min_i (y_i - y~_i) / r_i`, the offset of `y` from the faces of the shifted ideal point.
pub fn t_d(y: &[f64], shifted: &[f64], r: &[f64]) -> Result<f64> {
    check_len(shifted.len(), y.len())?;
    check_len(shifted.len(), r.len())?;
    check_direction(r)?;
    let t = y.iter().zip(shifted).zip(r).map(|((y, s), r)| (y - s) / r).fold(f64::INFINITY, f64::min);
    if t < 0.0 {
        return Err(Error::StaleIdealPoint(format!("{y:?} lies below the shifted ideal point {shifted:?}")));
    }
    Ok(t)
}

/// The point `y - t_d(y) r` on the faces of the shifted ideal point.
pub fn project_to_d(y: &[f64], shifted: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let t = t_d(y, shifted, r)?;
    let mut z: Vec<f64> = y.iter().zip(r).map(|(y, r)| y - t * r).collect();
    // land exactly on the attaining face
    let i = (0..y.len())
        .min_by(|&a, &b| ((y[a] - shifted[a]) / r[a]).total_cmp(&((y[b] - shifted[b]) / r[b])))
        .expect("nonempty");
    z[i] = shifted[i];
    Ok(z)
}

/// One reference point on face `face` (a position within the index set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub face: usize,
    pub z: Vec<f64>,
}

/// Number of lattice points `y~_j + h/2 + k h <= upper` for `k = 0, 1, ...`.
pub fn lattice_count(shifted: f64, upper: f64, h: f64) -> usize {
    let n = ((upper - shifted - 0.5 * h) / h + 1.0 + COORD_TOL).floor();
    if n > 0.0 {
        n as usize
    } else {
        0
    }
}

/// Face-aligned reference grid for one index set. All slices are restricted
/// to the index set; `t_bar[i]` truncates face `i`.
pub fn build_grid(h: f64, shifted: &[f64], nadir: &[f64], t_bar: &[f64], r: &[f64]) -> Result<Vec<GridPoint>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("grid size {h} must be positive")));
    }
    let k = shifted.len();
    check_len(k, nadir.len())?;
    check_len(k, t_bar.len())?;
    check_len(k, r.len())?;
    check_direction(r)?;
    let mut out = Vec::new();
    for face in 0..k {
        let counts: Vec<usize> = (0..k)
            .map(|j| if j == face { 1 } else { lattice_count(shifted[j], nadir[j] - t_bar[face] * r[j], h) })
            .collect();
        if counts.contains(&0) {
            continue;
        }
        let free: Vec<usize> = (0..k).filter(|&j| j != face).collect();
        let total: usize = free.iter().map(|&j| counts[j]).product();
        for n in 0..total {
            // mixed radix decoding, last free coordinate fastest
            let mut rest = n;
            let mut z = shifted.to_vec();
            for &j in free.iter().rev() {
                let kj = rest % counts[j];
                rest /= counts[j];
                z[j] = shifted[j] + 0.5 * h + kj as f64 * h;
            }
            out.push(GridPoint { face, z });
        }
    }
    Ok(out)
}

/// A solved (or implied) scalarized problem: solution `u`, optimal `t`,
/// reference point `z` on the index set, and the full objective vector at `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtzRecord {
    pub index_set: Vec<usize>,
    pub u: DVector<f64>,
    pub t: f64,
    pub z: Vec<f64>,
    pub objectives: Vec<f64>,
}

fn position(set: &[usize], i: usize) -> Option<usize> {
    set.iter().position(|&x| x == i)
}

/// True when some record of a proper subset `K` of `index_set` already
/// solves the problem for `z`: `z^K = z_bar^K` and
/// `z^{I\K} >= J^{I\K}(u_bar) - t_bar r^{I\K}`.
pub fn is_redundant(index_set: &[usize], z: &[f64], r: &[f64], records: &[UtzRecord]) -> bool {
    records.iter().any(|rec| {
        let sub = &rec.index_set;
        if sub.len() >= index_set.len() || !sub.iter().all(|i| index_set.contains(i)) {
            return false;
        }
        index_set.iter().enumerate().all(|(a, &i)| match position(sub, i) {
            Some(b) => close(z[a], rec.z[b]),
            None => z[a] >= rec.objectives[i] - rec.t * r[a] - COORD_TOL * z[a].abs().max(1.0),
        })
    })
}

/// Removes from `remaining` every grid point inside the box
/// `[z - (t r - (J(u) - z)), z]` and returns the removed points as records
/// sharing the solution of `solved`.
pub fn interval_removal(remaining: &mut Vec<GridPoint>, solved: &UtzRecord, r: &[f64]) -> Vec<UtzRecord> {
    let set = &solved.index_set;
    let lower: Vec<f64> = (0..set.len())
        .map(|a| {
            let slack = solved.t * r[a] - (solved.objectives[set[a]] - solved.z[a]);
            solved.z[a] - slack.max(0.0)
        })
        .collect();
    let inside = |p: &GridPoint| {
        p.z.iter().enumerate().all(|(a, &v)| {
            let tol = COORD_TOL * v.abs().max(1.0);
            v >= lower[a] - tol && v <= solved.z[a] + tol
        })
    };
    let mut removed = Vec::new();
    remaining.retain(|p| {
        if inside(p) {
            removed.push(UtzRecord { z: p.z.clone(), ..solved.clone() });
            false
        } else {
            true
        }
    });
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalarization_examples() {
        assert_eq!(scalarize(&[1.0, 2.0], &[1.0, 1.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(scalarize(&[0.0, 0.0], &[1.0, 2.0], &[1.0, 4.0]).unwrap(), 2.0);
        assert!(scalarize(&[0.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn ideal_and_shift() {
        let id = ideal_point(&[vec![1.0, 5.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(id, vec![1.0, 2.0]);
        assert_eq!(ideal_point(&[vec![0.7]]).unwrap(), vec![0.7]);
        let s = shifted_ideal(&id, &[0.001, 0.001]).unwrap();
        assert!((s[0] - 0.999).abs() < 1e-15);
        assert!(shifted_ideal(&id, &[0.0, 0.1]).is_err());
    }

    #[test]
    fn t_d_examples() {
        let y = [2.0, 5.0, 3.0];
        let s = [0.0; 3];
        let r = [1.0; 3];
        assert_eq!(t_d(&y, &s, &r).unwrap(), 2.0);
        assert_eq!(project_to_d(&y, &s, &r).unwrap(), vec![0.0, 3.0, 1.0]);
        assert_eq!(t_d(&[0.0, 1.0, 2.0], &s, &r).unwrap(), 0.0);
        assert!(matches!(t_d(&[-1.0, 1.0, 1.0], &s, &r), Err(Error::StaleIdealPoint(_))));
    }

    #[test]
    fn grid_example_with_closed_boundary() {
        let g = build_grid(0.4, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let zs: Vec<Vec<f64>> = g.iter().map(|p| p.z.clone()).collect();
        let expect = [[0.0, 0.2], [0.0, 0.6], [0.0, 1.0], [0.2, 0.0], [0.6, 0.0], [1.0, 0.0]];
        assert_eq!(zs.len(), expect.len());
        for (z, e) in zs.iter().zip(&expect) {
            assert!((z[0] - e[0]).abs() < 1e-12 && (z[1] - e[1]).abs() < 1e-12, "{z:?} vs {e:?}");
        }
        let big = build_grid(5.0, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(big.len() <= 2);
        let empty = build_grid(0.4, &[0.0, 0.0], &[0.1, 0.1], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn grid_cardinality_formula_three_objectives() {
        let s = [0.1, -0.3, 0.05];
        let nad = [0.9, 0.4, 0.6];
        let tb = [0.05, 0.0, 0.1];
        let h = 0.07;
        let g = build_grid(h, &s, &nad, &tb, &[1.0; 3]).unwrap();
        let mut expect = 0;
        for i in 0..3 {
            let mut prod = 1;
            for j in 0..3 {
                if j != i {
                    prod *= lattice_count(s[j], nad[j] - tb[i], h);
                }
            }
            expect += prod;
        }
        assert_eq!(g.len(), expect);
        for p in &g {
            assert_eq!(p.z[p.face], s[p.face]);
            for j in 0..3 {
                assert!(p.z[j] >= s[j]);
                if j != p.face {
                    assert!(p.z[j] <= nad[j] - tb[p.face] + 1e-12);
                    let k = (p.z[j] - s[j] - 0.5 * h) / h;
                    assert!((k - k.round()).abs() < 1e-9);
                }
            }
        }
        let mut sorted = g.clone();
        sorted.sort_by(|a, b| a.face.cmp(&b.face).then(a.z.partial_cmp(&b.z).unwrap()));
        assert_eq!(sorted, g);
    }

    fn record(set: Vec<usize>, t: f64, z: Vec<f64>, objectives: Vec<f64>) -> UtzRecord {
        UtzRecord { index_set: set, u: DVector::zeros(1), t, z, objectives }
    }

    #[test]
    fn redundancy_examples() {
        let r = [1.0; 3];
        assert!(!is_redundant(&[0, 1, 2], &[0.0, 0.0, 0.0], &r, &[]));
        let rec = record(vec![0, 1], 0.1, vec![0.2, 0.3], vec![0.3, 0.4, 0.5]);
        assert!(is_redundant(&[0, 1, 2], &[0.2, 0.3, 100.0], &r, std::slice::from_ref(&rec)));
        assert!(!is_redundant(&[0, 1, 2], &[0.2, 0.3, 0.1], &r, std::slice::from_ref(&rec)));
        assert!(!is_redundant(&[0, 1, 2], &[0.2, 0.31, 100.0], &r, std::slice::from_ref(&rec)));
        // records of the same index set are not proper subsets
        let same = record(vec![0, 1, 2], 0.1, vec![0.2, 0.3, 0.0], vec![0.3, 0.4, 0.5]);
        assert!(!is_redundant(&[0, 1, 2], &[0.2, 0.3, 0.0], &r, &[same]));
    }

    #[test]
    fn interval_removal_examples() {
        let r = [1.0, 1.0];
        let pts = |v: &[[f64; 2]]| v.iter().map(|z| GridPoint { face: 0, z: z.to_vec() }).collect::<Vec<_>>();
        // active in all components: only z itself goes
        let solved = record(vec![0, 1], 0.5, vec![0.0, 1.0], vec![0.5, 1.5]);
        let mut rem = pts(&[[0.0, 1.0], [0.0, 0.8], [0.0, 1.2]]);
        let out = interval_removal(&mut rem, &solved, &r);
        assert_eq!(out.len(), 1);
        assert_eq!(rem.len(), 2);
        // slack 0.3 in the second component
        let solved = record(vec![0, 1], 0.5, vec![0.0, 1.0], vec![0.5, 1.2]);
        let mut rem = pts(&[[0.0, 1.0], [0.0, 0.8], [0.0, 0.6], [0.0, 1.2], [0.1, 0.8]]);
        let out = interval_removal(&mut rem, &solved, &r);
        let removed: Vec<Vec<f64>> = out.iter().map(|o| o.z.clone()).collect();
        assert_eq!(removed, vec![vec![0.0, 1.0], vec![0.0, 0.8]]);
        assert!(out.iter().all(|o| o.t == 0.5 && o.objectives == vec![0.5, 1.2]));
    }

    proptest! {
        #[test]
        fn translation_identity(z in prop::collection::vec(-5.0..5.0f64, 3), x in prop::collection::vec(-5.0..5.0f64, 3),
                                r in prop::collection::vec(0.1..3.0f64, 3), c in -2.0..2.0f64) {
            let zc: Vec<f64> = z.iter().zip(&r).map(|(z, r)| z + c * r).collect();
            let a = scalarize(&zc, &r, &x).unwrap();
            let b = scalarize(&z, &r, &x).unwrap() - c;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn projection_lands_on_faces(s in prop::collection::vec(-1.0..1.0f64, 3), d in prop::collection::vec(0.0..3.0f64, 3),
                                     r in prop::collection::vec(0.1..3.0f64, 3)) {
            let y: Vec<f64> = s.iter().zip(&d).map(|(s, d)| s + d).collect();
            let z = project_to_d(&y, &s, &r).unwrap();
            let t = t_d(&y, &s, &r).unwrap();
            let m = z.iter().zip(&s).map(|(z, s)| z - s).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(m, 0.0);
            for j in 0..3 {
                prop_assert!((z[j] + t * r[j] - y[j]).abs() < 1e-12);
            }
        }

        #[test]
        fn redundancy_matches_direct_condition(zv in prop::collection::vec(0..4i32, 3), t in 0.0..1.0f64,
                                               ob in prop::collection::vec(0.0..2.0f64, 3), k in 0usize..3) {
            let z: Vec<f64> = zv.iter().map(|&v| 0.25 * v as f64).collect();
            let rec = record(vec![k], t, vec![z[k]], ob.clone());
            let direct = (0..3).all(|j| j == k || z[j] >= ob[j] - t);
            prop_assert_eq!(is_redundant(&[0, 1, 2], &z, &[1.0; 3], &[rec]), direct);
        }

        #[test]
        fn pruned_points_lie_in_box(t in 0.0..1.0f64, o0 in 0.0..1.0f64, o1 in 0.0..1.0f64) {
            let solved = record(vec![0, 1], t, vec![0.5, 0.5], vec![0.5 + o0 * t, 0.5 + o1 * t]);
            let mut rem: Vec<GridPoint> = (0..11).flat_map(|a| (0..11).map(move |b| GridPoint { face: 0, z: vec![a as f64 * 0.1, b as f64 * 0.1] })).collect();
            let out = interval_removal(&mut rem, &solved, &[1.0, 1.0]);
            for o in &out {
                for a in 0..2 {
                    let slack = t - (solved.objectives[a] - 0.5);
                    prop_assert!(o.z[a] <= 0.5 + 1e-9 && o.z[a] >= 0.5 - slack - 1e-9);
                }
            }
            prop_assert_eq!(out.len() + rem.len(), 121);
        }
    }
}
