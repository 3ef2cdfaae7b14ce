//! Reference fronts by exhaustive evaluation on a parameter lattice.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::non_dominated;
use crate::objective::MultiObjective;

/// Lattice sizes above this many points are evaluated but logged.
const COST_WARNING: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFront {
    pub density: usize,
    pub evaluated: usize,
    /// Non-dominated parameters and their objective vectors.
    pub params: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

/// The `density + 1` equispaced lattice points per free coordinate of the
/// box; fixed coordinates keep their value.
pub fn lattice(obj: &dyn MultiObjective, density: usize) -> Result<Vec<DVector<f64>>> {
    if density == 0 {
        return Err(Error::InvalidInput("lattice density must be at least 1".into()));
    }
    let b = obj.bounds();
    let free = b.free_coordinates();
    let per = density + 1;
    let total = per
        .checked_pow(free.len() as u32)
        .ok_or_else(|| Error::InvalidInput(format!("lattice with {per}^{} points is too large", free.len())))?;
    if total > COST_WARNING {
        log::warn!("oracle lattice has {total} points");
    }
    let mut out = Vec::with_capacity(total);
    for n in 0..total {
        let mut u = b.lower().clone();
        let mut rest = n;
        for &j in free.iter().rev() {
            let kj = rest % per;
            rest /= per;
            u[j] = b.lower()[j] + (b.upper()[j] - b.lower()[j]) * kj as f64 / density as f64;
        }
        out.push(u);
    }
    Ok(out)
}

/// Evaluates every objective on the lattice with `jobs` threads and keeps the
/// non-dominated points.
pub fn brute_force_front(obj: &dyn MultiObjective, density: usize, jobs: usize) -> Result<OracleFront> {
    let pts = lattice(obj, density)?;
    let all: Vec<usize> = (0..obj.n_objectives()).collect();
    let chunk = pts.len().div_ceil(jobs.max(1));
    let values: Vec<Result<Vec<f64>>> = if jobs <= 1 {
        pts.iter().map(|u| obj.values(u, &all)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = pts
                .chunks(chunk)
                .map(|c| s.spawn(|| c.iter().map(|u| obj.values(u, &all)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("oracle worker")).collect()
        })
    };
    let values: Vec<Vec<f64>> = values.into_iter().collect::<Result<_>>()?;
    let keep = non_dominated(&values);
    Ok(OracleFront {
        density,
        evaluated: pts.len(),
        params: keep.iter().map(|&i| pts[i].iter().copied().collect()).collect(),
        points: keep.iter().map(|&i| values[i].clone()).collect(),
    })
}
