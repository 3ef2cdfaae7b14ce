//! P1 finite elements on a manufactured solution of `-div grad y + y = f`
//! with `y = cos(pi x) cos(pi y)`. Prints the H1 error and observed rate per
//! mesh, which should approach 1.

use std::f64::consts::PI;

use nalgebra::DVector;
use pareto_trrb::fem::{Field, FullOrderModel, Mesh, ModelData};

fn main() -> pareto_trrb::Result<()> {
    let exact = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
    let mut last: Option<f64> = None;
    println!("{:>4} {:>8} {:>12} {:>6}", "n", "dofs", "H1 error", "rate");
    for n in [8, 16, 32, 64] {
        let mesh = Mesh::unit_square(n, &[0.5])?;
        let f = mesh.interpolate(|p| (2.0 * PI * PI + 1.0) * exact(p[0], p[1]));
        let data = ModelData {
            reaction: Field::Constant(1.0),
            source: Field::Nodal(f.iter().copied().collect()),
            ambient: Field::Constant(0.0),
            alpha: 0.0,
        };
        let fom = FullOrderModel::new(mesh, &data)?;
        let u = DVector::from_element(fom.n_params(), 1.0);
        let yh = fom.factorize(&u)?.solve(fom.load());
        let err = h1_error(fom.mesh(), &yh, exact);
        let rate = last.map_or(String::new(), |e| format!("{:.3}", (e / err).log2()));
        println!("{n:>4} {:>8} {err:>12.4e} {rate:>6}", fom.n_dofs());
        last = Some(err);
    }
    Ok(())
}

/// H1 error with a degree-5 rule on each triangle.
fn h1_error(mesh: &Mesh, yh: &DVector<f64>, y: impl Fn(f64, f64) -> f64) -> f64 {
    const A: f64 = 0.059_715_871_789_770;
    const B: f64 = 0.470_142_064_105_115;
    const C: f64 = 0.797_426_985_353_087;
    const D: f64 = 0.101_286_507_323_456;
    const WB: f64 = 0.132_394_152_788_506;
    const WD: f64 = 0.125_939_180_544_827;
    let rule = [
        ([1.0 / 3.0; 3], 0.225),
        ([A, B, B], WB),
        ([B, A, B], WB),
        ([B, B, A], WB),
        ([C, D, D], WD),
        ([D, C, D], WD),
        ([D, D, C], WD),
    ];
    let dy = |x: f64, z: f64| [-PI * (PI * x).sin() * (PI * z).cos(), -PI * (PI * x).cos() * (PI * z).sin()];
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|v| mesh.nodes[v]);
        let area = mesh.signed_area(t).abs();
        let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        let v = tri.map(|i| yh[i]);
        let gx = (0..3).map(|a| v[a] * b[a]).sum::<f64>() / (2.0 * area);
        let gy = (0..3).map(|a| v[a] * c[a]).sum::<f64>() / (2.0 * area);
        for (l, w) in rule {
            let x = (0..3).map(|a| l[a] * p[a][0]).sum::<f64>();
            let z = (0..3).map(|a| l[a] * p[a][1]).sum::<f64>();
            let vh = (0..3).map(|a| l[a] * v[a]).sum::<f64>();
            let d = dy(x, z);
            acc += w * area * ((y(x, z) - vh).powi(2) + (d[0] - gx).powi(2) + (d[1] - gy).powi(2));
        }
    }
    acc.sqrt()
}
