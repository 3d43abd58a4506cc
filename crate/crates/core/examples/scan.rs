//! Scans a small seed grid on the betaplane and prints the drift map.

use ocean_rays::numeric::linspace;
use ocean_rays::trapping::{scan_lambda, ScanGrid, TrappingOptions};
use ocean_rays::Profiles;

fn main() -> ocean_rays::Result<()> {
    let profiles = Profiles::betaplane(1.0)?;
    let grid = ScanGrid {
        xi1: vec![1.0],
        x2_0: linspace(-1.5, 1.5, 7),
        xi2_0: vec![0.25],
    };
    for row in scan_lambda(&grid, &profiles, &TrappingOptions::default()) {
        let r2 = row.x2_0 * row.x2_0 + row.xi2_0 * row.xi2_0;
        let exact = (r2 - 1.0) / (1.0 + r2).powi(2);
        println!(
            "x2_0 = {:+.2}: {:<10} drift {:+.9} (closed form {:+.9}) trapped {:?}",
            row.x2_0,
            row.class.map(|c| c.label()).unwrap_or("-"),
            row.drift.unwrap_or(f64::NAN),
            exact,
            row.trapped
        );
    }
    Ok(())
}
