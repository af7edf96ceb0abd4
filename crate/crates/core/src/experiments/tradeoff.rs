//! Meeting-point search across competing metric surfaces.
//!
//! Each metric m gets a relative increase r_m(c) = (value − min_m) / scale_m
//! over its grid optimum, with scale_m = min_m when it exceeds
//! [`METRIC_RESOLUTION`], else the value range when that does, else the
//! resolution itself. A common allowance ε grows through the observed r values
//! until some cell is within ε for every paired metric; among those cells
//! the one with the smallest Σ r_m wins, ties going to the lexicographically
//! first parameter tuple. Expanding all metrics by the same relative step is
//! what makes allowances inversely proportional to each metric's rate of
//! relative increase.

use serde::Serialize;

use crate::designs::DesignName;
use crate::error::{Error, Result};
use crate::metrics::MetricKind;

use super::sweep::SweepResult;

/// Metric differences below this (degrees or crosstalk fraction) are
/// rounding noise; it keeps a surface that is zero up to noise from
/// steering the search.
pub const METRIC_RESOLUTION: f64 = 1e-9;

/// The metric groupings optimised together for `design`.
pub fn default_pairs(design: DesignName) -> Vec<Vec<MetricKind>> {
    use MetricKind::*;
    if design.has_separate_channels() {
        vec![vec![AccH, CrossHV], vec![AccV, CrossVH]]
    } else {
        vec![vec![AccH, AccV, CrossHV, CrossVH]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffOutcome {
    pub metrics: Vec<MetricKind>,
    pub cell: usize,
    pub params: Vec<f64>,
    /// Achieved metric values, aligned with `metrics`.
    pub values: Vec<f64>,
    /// Per-metric grid optima, aligned with `metrics`.
    pub optima: Vec<f64>,
    /// Final common relative allowance.
    pub allowance: f64,
}

/// Trade-off search over arbitrary surfaces: `surfaces[m][cell]`.
///
/// `params[cell]` is only used for the lexicographic tie-break.
pub fn tradeoff_surfaces(surfaces: &[Vec<f64>], params: &[Vec<f64>]) -> Result<(usize, f64)> {
    let n = params.len();
    if n == 0 || surfaces.is_empty() {
        return Err(Error::Contract(
            "trade-off needs a non-empty grid and at least one metric".into(),
        ));
    }
    if surfaces.iter().any(|s| s.len() != n) {
        return Err(Error::Contract(
            "metric surfaces and grid differ in size".into(),
        ));
    }
    let usable: Vec<usize> = (0..n)
        .filter(|&c| surfaces.iter().all(|s| s[c].is_finite()))
        .collect();
    if usable.is_empty() {
        return Err(Error::Contract(
            "no grid cell has finite values for every metric".into(),
        ));
    }
    let rel: Vec<Vec<f64>> = surfaces
        .iter()
        .map(|s| {
            let lo = usable.iter().map(|&c| s[c]).fold(f64::INFINITY, f64::min);
            let hi = usable
                .iter()
                .map(|&c| s[c])
                .fold(f64::NEG_INFINITY, f64::max);
            let scale = if lo > METRIC_RESOLUTION {
                lo
            } else if hi - lo > METRIC_RESOLUTION {
                hi - lo
            } else {
                METRIC_RESOLUTION
            };
            s.iter().map(|v| (v - lo) / scale).collect()
        })
        .collect();
    // Stopping allowance: the first ε at which some cell is feasible for all.
    let worst = |c: usize| rel.iter().map(|r| r[c]).fold(0.0, f64::max);
    let allowance = usable
        .iter()
        .map(|&c| worst(c))
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for &c in usable.iter().filter(|&&c| worst(c) <= allowance) {
        let total: f64 = rel.iter().map(|r| r[c]).sum();
        let better = match best {
            None => true,
            Some((b, bt)) => {
                total < bt || (total == bt && lexicographic_lt(&params[c], &params[b]))
            }
        };
        if better {
            best = Some((c, total));
        }
    }
    let (cell, _) = best.expect("at least one usable cell");
    Ok((cell, allowance))
}

fn lexicographic_lt(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Runs the trade-off search for each metric group over a sweep.
pub fn tradeoff_optimize(
    sweep: &SweepResult,
    groups: &[Vec<MetricKind>],
) -> Result<Vec<TradeoffOutcome>> {
    let params: Vec<Vec<f64>> = sweep.cells.iter().map(|c| c.params.clone()).collect();
    groups
        .iter()
        .map(|metrics| {
            let surfaces: Vec<Vec<f64>> = metrics
                .iter()
                .map(|&m| sweep.cells.iter().map(|c| c.mean(m)).collect())
                .collect();
            let (cell, allowance) = tradeoff_surfaces(&surfaces, &params)?;
            let optima = surfaces
                .iter()
                .map(|s| {
                    s.iter()
                        .copied()
                        .filter(|v| v.is_finite())
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            Ok(TradeoffOutcome {
                metrics: metrics.clone(),
                cell,
                params: params[cell].clone(),
                values: surfaces.iter().map(|s| s[cell]).collect(),
                optima,
                allowance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d() -> (Vec<f64>, Vec<Vec<f64>>) {
        let xs: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let params = xs.iter().map(|&x| vec![x]).collect();
        (xs, params)
    }

    #[test]
    fn identical_surfaces_give_shared_argmin() {
        let (xs, params) = grid_1d();
        let f: Vec<f64> = xs.iter().map(|x| (x - 0.5).powi(2) + 1.0).collect();
        let (cell, eps) = tradeoff_surfaces(&[f.clone(), f], &params).unwrap();
        assert_eq!(xs[cell], 0.5);
        assert_eq!(eps, 0.0);
    }

    #[test]
    fn constant_metric_never_constrains() {
        let (xs, params) = grid_1d();
        let f: Vec<f64> = xs.iter().map(|x| (x + 1.5).powi(2)).collect();
        let (cell, _) = tradeoff_surfaces(&[vec![3.0; 9], f], &params).unwrap();
        assert_eq!(xs[cell], -1.5);
    }

    #[test]
    fn noise_level_metric_does_not_steer() {
        let (xs, params) = grid_1d();
        let acc: Vec<f64> = xs.iter().map(|x| 0.1 + (x - 1.0).powi(2)).collect();
        let noise = vec![3e-17, 2e-16, 5e-17, 1e-16, 4e-16, 6e-17, 0.0, 2e-16, 1e-16];
        let (cell, _) = tradeoff_surfaces(&[acc, noise], &params).unwrap();
        assert_eq!(xs[cell], 1.0);
    }

    #[test]
    fn non_finite_cells_are_skipped() {
        let (xs, params) = grid_1d();
        let mut f: Vec<f64> = xs.iter().map(|x| x * x).collect();
        f[4] = f64::NAN;
        let (cell, _) = tradeoff_surfaces(&[f], &params).unwrap();
        assert_eq!(xs[cell], -0.5);
        assert!(tradeoff_surfaces(&[vec![f64::NAN; 9]], &params).is_err());
        assert!(tradeoff_surfaces(&[vec![]], &[]).is_err());
    }

    #[test]
    fn ties_go_to_lexicographically_first() {
        let params = vec![vec![2.0], vec![1.0], vec![3.0]];
        let (cell, _) = tradeoff_surfaces(&[vec![1.0, 1.0, 2.0]], &params).unwrap();
        assert_eq!(cell, 1);
    }

    #[test]
    fn pairs_per_design() {
        assert_eq!(default_pairs(DesignName::D1).len(), 2);
        assert_eq!(
            default_pairs(DesignName::D2),
            vec![MetricKind::ALL.to_vec()]
        );
    }
}
