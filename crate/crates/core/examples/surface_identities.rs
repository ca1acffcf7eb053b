//! Checks the surface constraint identity on catalog surfaces and scans for
//! minimal constant-curvature surfaces.

use isocurv::catalog::default_catalog;
use isocurv::immersion::shape_data;
use isocurv::surface2d::{minimal_scan, surface_identity_at};

fn main() -> isocurv::Result<()> {
    for entry in default_catalog().into_iter().filter(|e| e.n == 2) {
        let chart = entry.chart.as_ref();
        let sd = shape_data(chart, &chart.base_point())?;
        match surface_identity_at(&sd) {
            Ok(r) => println!("{:<50} residual {r:.3e}", entry.name),
            Err(e) => println!("{:<50} {e}", entry.name),
        }
    }
    let scan = minimal_scan(0.05, 5.0, 400, 1e-9)?;
    println!("{scan:#?}");
    Ok(())
}
