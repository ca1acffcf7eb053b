//! Builds a smooth eigenframe of the shape operator of a product hypersurface
//! and measures how its adjacent deviation shrinks under refinement.

use isocurv::catalog::clifford_product;
use isocurv::chart::Grid;
use isocurv::eigenframe::{refinement_sequence, shape_operator_field, smooth_frame, OperatorSample};
use isocurv::immersion::shape_data;

fn main() -> isocurv::Result<()> {
    let entry = clifford_product(2, 1, 0.8, 0.6)?;
    let chart = entry.chart.as_ref();
    let d = chart.domain();
    let center = d.center();
    let lo: Vec<f64> = center.iter().zip(&d.lo).map(|(c, l)| c - 0.5 * (c - l)).collect();
    let hi: Vec<f64> = center.iter().zip(&d.hi).map(|(c, h)| c + 0.5 * (h - c)).collect();
    let grid = Grid::new(lo, hi, vec![5; chart.n()])?;

    let field = shape_operator_field(chart, &grid)?;
    let structure = field[0].structure(1e-8)?;
    let frame = smooth_frame(&grid, &field, &structure)?;
    println!("clusters {:?}", structure.multiplicities);
    println!("seeds {:?}", frame.seeds);
    println!("{:#?}", frame.metrics);

    let levels = refinement_sequence(&grid, 2, &structure, |u| {
        let sd = shape_data(chart, u)?;
        Ok(OperatorSample { operator: sd.a, metric: sd.g })
    })?;
    for r in levels {
        println!("coarse {:.3e} fine {:.3e} ratio {:?}", r.coarse, r.fine, r.ratio);
    }
    Ok(())
}
