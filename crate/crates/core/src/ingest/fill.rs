//! Missing-value repair for indicator series.
//!
//! Interior gaps are filled by straight-line interpolation between the nearest
//! observed years. Leading and trailing gaps are extrapolated with the compound
//! average annual growth rate between the first and last observed values. When
//! that rate is undefined (a non-positive endpoint), the average annual absolute
//! change is used instead.

use crate::error::{Error, Result};
use crate::ingest::IndicatorPanel;

/// Returns a copy of `panel` with every missing cell filled. Observed cells are
/// copied unchanged, so a fully observed panel comes back identical.
pub fn fill_missing(panel: &IndicatorPanel) -> Result<IndicatorPanel> {
    let mut out = panel.clone();
    for i in 0..panel.n_regions() {
        for j in 0..panel.n_indicators() {
            let series = panel.series(i, j);
            if series.iter().all(Option::is_some) {
                continue;
            }
            let filled = fill_series(&series).map_err(|observed| Error::InsufficientObservations {
                region: panel.regions()[i].clone(),
                indicator: panel.indicators()[j].id.clone(),
                observed,
            })?;
            out.set_series(i, j, &filled);
        }
    }
    Ok(out)
}

/// Fills one annual series. On failure returns the number of observed values.
pub fn fill_series(series: &[Option<f64>]) -> std::result::Result<Vec<f64>, usize> {
    let observed: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
    if observed.len() < 2 {
        return Err(observed.len());
    }
    let (k0, v0) = observed[0];
    let (k1, v1) = observed[observed.len() - 1];
    let span = (k1 - k0) as f64;

    let extrapolate = |k: usize| -> f64 {
        let (base_k, base_v) = if k < k0 { (k0, v0) } else { (k1, v1) };
        let steps = k as f64 - base_k as f64;
        if v0 > 0.0 && v1 > 0.0 {
            let growth = (v1 / v0).powf(1.0 / span);
            base_v * growth.powf(steps)
        } else {
            base_v + (v1 - v0) / span * steps
        }
    };

    let mut out = Vec::with_capacity(series.len());
    let mut next = 0;
    for (k, v) in series.iter().enumerate() {
        if let Some(v) = v {
            out.push(*v);
            next += 1;
            continue;
        }
        if k < k0 || k > k1 {
            out.push(extrapolate(k));
        } else {
            let (ka, va) = observed[next - 1];
            let (kb, vb) = observed[next];
            let t = (k - ka) as f64 / (kb - ka) as f64;
            out.push(va + (vb - va) * t);
        }
    }
    Ok(out)
}
