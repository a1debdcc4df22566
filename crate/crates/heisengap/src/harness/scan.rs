use heisengap_core::averaging::{check_scan, deficit_sample, DeficitMap};
use heisengap_core::geometry::GridDomain2D;
use heisengap_core::special::{LandauParams, QuadRule};

use crate::error::Result;
use crate::pool::map_range;

/// Deficit scan with the samples spread over the job pool. The result is
/// identical to the sequential scan.
pub fn par_deficit_scan(p: &LandauParams, d: &GridDomain2D, rule: &QuadRule) -> Result<DeficitMap> {
    check_scan(p, d, rule)?;
    let samples = map_range(rule.len(), |i| {
        deficit_sample(p, d, rule.point(i), rule.weight(i))
    });
    Ok(DeficitMap::from_samples(
        *p,
        d.clone(),
        rule.clone(),
        samples,
    )?)
}
