use serde::{Deserialize, Serialize};

use super::run::{markov_rates, CsvRow};
use crate::constructions::{splice_cascade, CascadeSpec};
use crate::error::{Error, Result};
use crate::estimators::{mdim_estimate, DEFAULT_BURN_IN, DEFAULT_WINDOW};
use crate::systems::PiecewiseAffineMap;

/// One splice width of a perturbation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    /// Smallest fixed point of the base, where the splice starts.
    pub x0: Option<f64>,
    pub c0_distance: f64,
    pub mdim_lower: f64,
    pub mdim_upper: f64,
}

/// Splices the cascade into `base` at each width and estimates the metric
/// mean dimension of the result from Markov itinerary counts.
pub fn perturbation_sweep(
    base: &PiecewiseAffineMap,
    splice: Option<&CascadeSpec>,
    deltas: &[f64],
    epsilons: &[f64],
    horizons: &[usize],
) -> Result<Vec<SweepRow>> {
    Ok(sweep_with_rows("sweep", base, splice, deltas, epsilons, horizons, DEFAULT_WINDOW, DEFAULT_BURN_IN)?.0)
}

#[allow(clippy::too_many_arguments)]
pub(super) fn sweep_with_rows(
    system_id: &str,
    base: &PiecewiseAffineMap,
    splice: Option<&CascadeSpec>,
    deltas: &[f64],
    epsilons: &[f64],
    horizons: &[usize],
    window: usize,
    burn_in: usize,
) -> Result<(Vec<SweepRow>, Vec<CsvRow>)> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter("sweep deltas must be positive".into()));
    }
    let mut table = Vec::with_capacity(deltas.len());
    let mut csv = Vec::new();
    for &delta in deltas {
        let (map, x0) = match splice {
            Some(spec) => {
                let (map, x0) = splice_cascade(base, spec, delta)?;
                (map, Some(x0))
            }
            None => (base.clone(), None),
        };
        let c0_distance = map.c0_distance(base)?;
        let id = format!("{system_id}@delta={delta}");
        let rates = markov_rates(&id, &map, epsilons, horizons, burn_in)?;
        let report = mdim_estimate(&rates.entries, window)?;
        csv.extend(rates.rows);
        table.push(SweepRow {
            delta,
            x0,
            c0_distance,
            mdim_lower: report.lower_estimate,
            mdim_upper: report.upper_estimate,
        });
    }
    Ok((table, csv))
}
