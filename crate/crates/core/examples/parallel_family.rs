//! Transports the principal curvatures of a spherical cylinder along its
//! parallel family, clipped before the first focal value, and writes the
//! curves as CSV.

use std::io::Write;

use isocurv::ambient::ModelConstant;
use isocurv::catalog::{cylinder, CylinderBase};
use isocurv::parallel::{clip_t_range, transport_curvature, transport_curvature_t, PointSpectrum};

fn main() -> isocurv::Result<()> {
    let entry = cylinder(ModelConstant::new(1)?, 2, CylinderBase::GeodesicSphere { radius: 0.7 })?;
    let chart = entry.chart.as_ref();
    let grid = chart.domain().grid(&vec![5; chart.n()])?;
    let (ts, clip) = clip_t_range(chart, &grid, -2.0, 2.0, 21)?;
    eprintln!(
        "requested {:?}, used {:?}, first focal value at |t| = {:.6}",
        clip.requested, clip.used, clip.focal_bound
    );

    let base = chart.base_point();
    let spec = PointSpectrum::at(chart, &base)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "t,index,curvature").unwrap();
    for &t in &ts {
        for (i, &l) in spec.transverse.iter().enumerate() {
            let v = transport_curvature(l, spec.tnorm, entry.c, t)?;
            writeln!(out, "{t:.6},{i},{v:.12e}").unwrap();
        }
        let v = transport_curvature_t(spec.lambda_n, t)?;
        writeln!(out, "{t:.6},{},{v:.12e}", spec.transverse.len()).unwrap();
    }
    Ok(())
}
