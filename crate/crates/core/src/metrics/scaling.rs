//! Log-log fits and the budget-sweep report.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{MetricsError, TrialSummary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    /// Slope of ln(statistic) against ln(x).
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

impl ScalingFit {
    /// Whether the x values cover at least `decades` orders of magnitude.
    pub fn spans_decades(&self, decades: f64) -> bool {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
        hi / lo >= 10f64.powf(decades)
    }
}

/// Least-squares power-law fit `stat ~ x^k`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit, MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::TooFewPoints(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(MetricsError::NonPositive(x, y));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n {
        return Err(MetricsError::Degenerate);
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    Ok(ScalingFit {
        points: points.to_vec(),
        exponent,
        intercept,
        residual: (sse / n).sqrt(),
    })
}

/// Linearly interpolated quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Spread {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        Spread {
            median: quantile(&v, 0.5),
            p25: quantile(&v, 0.25),
            p75: quantile(&v, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub budget: u64,
    pub trials: usize,
    pub capped: usize,
    /// Realized adversary spend T(pi).
    pub spend: Spread,
    pub max_node_cost: Spread,
    pub termination: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitivenessReport {
    pub rows: Vec<BudgetRow>,
    /// Median max node cost against median T(pi); `None` with fewer than
    /// three budgets or a zero spend.
    pub cost_fit: Option<ScalingFit>,
    pub time_fit: Option<ScalingFit>,
}

/// Groups trials by budget and fits cost and time against realized spend.
pub fn competitiveness_report(summaries: &[TrialSummary]) -> Result<CompetitivenessReport, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: BTreeMap<u64, Vec<&TrialSummary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(s.budget).or_default().push(s);
    }
    let rows: Vec<BudgetRow> = groups
        .into_iter()
        .map(|(budget, g)| BudgetRow {
            budget,
            trials: g.len(),
            capped: g.iter().filter(|s| s.termination.capped()).count(),
            spend: Spread::of(g.iter().map(|s| s.adversary_spend as f64)),
            max_node_cost: Spread::of(g.iter().map(|s| s.max_node_cost as f64)),
            termination: Spread::of(g.iter().map(|s| s.termination.slot() as f64)),
        })
        .collect();
    let fit = |stat: fn(&BudgetRow) -> f64| {
        let pts: Vec<_> = rows.iter().map(|r| (r.spend.median, stat(r))).collect();
        fit_scaling(&pts).ok()
    };
    Ok(CompetitivenessReport {
        cost_fit: fit(|r| r.max_node_cost.median),
        time_fit: fit(|r| r.termination.median),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let f = fit_scaling(&[(1024.0, 32.0), (4096.0, 64.0), (16384.0, 128.0)]).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-9);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn constant_has_zero_exponent() {
        let f = fit_scaling(&[(10.0, 5.0), (100.0, 5.0), (1000.0, 5.0)]).unwrap();
        assert!(f.exponent.abs() < 1e-12);
        assert!(f.spans_decades(2.0));
        assert!(!f.spans_decades(2.5));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            fit_scaling(&[(1024.0, 1024.0), (4096.0, 4096.0)]),
            Err(MetricsError::TooFewPoints(2))
        ));
        assert!(matches!(
            fit_scaling(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(MetricsError::NonPositive(..))
        ));
        assert!(matches!(
            fit_scaling(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]),
            Err(MetricsError::Degenerate)
        ));
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
    }
}
