//! Validates every catalog entry on its default grid and prints one line per
//! entry.

use isocurv::catalog::{default_catalog, validate};
use isocurv::check::{overall, Status};

fn main() -> isocurv::Result<()> {
    let mut failures = 0;
    for entry in default_catalog() {
        let grid = entry.default_grid()?;
        let checks = validate(&entry, &grid);
        let status = overall(&checks);
        if status != Status::Pass {
            failures += 1;
        }
        println!("{status:?}\t{}\tg={} m={:?}", entry.name, entry.expected_g, entry.multiplicities);
        for c in checks.iter().filter(|c| !c.passed()) {
            println!("    {} {:?} {:?}", c.name, c.measured, c.detail);
        }
    }
    println!("{failures} entries failed");
    Ok(())
}
