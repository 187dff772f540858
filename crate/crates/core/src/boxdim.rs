//! Box-counting over the column grid of width L_m, log-log regression of the
//! counts, and the explicit N_m x Ntilde_m cover of the corollary.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{oscillation_fn, GraphFn, WeierstrassGraph, OSC_BASE_SAMPLES};
use crate::params::FractalParams;

/// Per-scale counts plus the fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct BoxCountResult {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// The corollary's cover at level m: N_m columns of Ntilde_m boxes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverSpec {
    pub m: u32,
    pub n_columns: u64,
    pub rows_per_column: u64,
    pub c_const: f64,
    pub product: u128,
}

fn columns_at(p: &FractalParams, m: u32) -> Result<u64> {
    (p.n_b() as u64)
        .checked_pow(m)
        .and_then(|c| c.checked_mul(p.n_b() as u64 - 1))
        .ok_or(Error::InvalidLevel { m, reason: "column count overflows" })
}

/// Number of side-L_m boxes meeting the graph of `f`, counted column by
/// column as floor(osc/L_m) + 1 with the sampled column oscillation. Sampling
/// never overestimates an oscillation, so the count is a lower-biased
/// estimate of the minimal cover.
pub fn count_boxes_fn(p: &FractalParams, f: &dyn GraphFn, m: u32, budget: u64) -> Result<u64> {
    let n_cols = columns_at(p, m)?;
    if n_cols > budget {
        return Err(Error::BudgetExceeded { needed: n_cols as u128, budget });
    }
    let width = 1.0 / n_cols as f64;
    (0..n_cols)
        .into_par_iter()
        .map(|k| -> Result<u64> {
            let x1 = k as f64 * width;
            let est = oscillation_fn(f, x1, x1 + width, OSC_BASE_SAMPLES)?;
            Ok((est.osc / width).floor() as u64 + 1)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `count_boxes_fn` against W itself.
pub fn count_boxes(p: &FractalParams, m: u32, tol: f64, budget: u64) -> Result<u64> {
    count_boxes_fn(p, &WeierstrassGraph::new(p, tol)?, m, budget)
}

/// Least-squares estimate of the box dimension of the graph of `f`: counts at
/// the scales eps_m = L_m for m in [m_min, m_max], then the slope of
/// log N(eps) against log(1/eps).
pub fn estimate_dimension_fn(
    p: &FractalParams,
    f: &dyn GraphFn,
    m_min: u32,
    m_max: u32,
    budget: u64,
) -> Result<BoxCountResult> {
    if m_min < 1 || m_min >= m_max {
        return Err(Error::InvalidLevel {
            m: m_min,
            reason: "need 1 <= m_min < m_max for a regression",
        });
    }
    let mut scales = Vec::with_capacity((m_max - m_min + 1) as usize);
    let mut counts = Vec::with_capacity(scales.capacity());
    for m in m_min..=m_max {
        scales.push(p.cell_width(m));
        counts.push(count_boxes_fn(p, f, m, budget)?);
    }
    let xs: Vec<f64> = scales.iter().map(|eps| (1.0 / eps).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(BoxCountResult { scales, counts, slope, intercept, r_squared })
}

/// `estimate_dimension_fn` against W itself.
pub fn estimate_dimension(
    p: &FractalParams,
    m_min: u32,
    m_max: u32,
    tol: f64,
    budget: u64,
) -> Result<BoxCountResult> {
    estimate_dimension_fn(p, &WeierstrassGraph::new(p, tol)?, m_min, m_max, budget)
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r_squared)
}

/// The printed cover: N_m = (N_b-1) N_b^m columns, each of
/// Ntilde_m = floor(C L_m^(1-D_W)) + 1 boxes, with C = max(bracket, eta_W).
pub fn corollary_cover(p: &FractalParams, m: u32) -> Result<CoverSpec> {
    if m == 0 {
        return Err(Error::InvalidLevel { m, reason: "the cover needs m >= 1" });
    }
    let n_columns = columns_at(p, m)?;
    let c_const = p.bound_constants().cover_c;
    let l_m = p.cell_width(m);
    let rows = (c_const * l_m.powf(1.0 - p.dimension().value())).floor();
    if !rows.is_finite() || rows < 0.0 || rows >= u64::MAX as f64 {
        return Err(Error::InvalidLevel { m, reason: "row count overflows" });
    }
    let rows_per_column = rows as u64 + 1;
    Ok(CoverSpec {
        m,
        n_columns,
        rows_per_column,
        c_const,
        product: n_columns as u128 * rows_per_column as u128,
    })
}

/// r_m = N_m Ntilde_m L_m^(D_W) for m in [m_min, m_max]; converges to C.
pub fn cover_power_law(p: &FractalParams, m_min: u32, m_max: u32) -> Result<Vec<f64>> {
    if m_min < 1 || m_min > m_max {
        return Err(Error::InvalidLevel { m: m_min, reason: "need 1 <= m_min <= m_max" });
    }
    let d_w = p.dimension().value();
    (m_min..=m_max)
        .map(|m| {
            let cover = corollary_cover(p, m)?;
            Ok(cover.product as f64 * p.cell_width(m).powf(d_w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DEFAULT_TOL;
    use crate::ifs::DEFAULT_POINT_BUDGET;

    fn params(lam: f64, nb: u32) -> FractalParams {
        FractalParams::new(lam, nb).unwrap()
    }

    struct Flat(f64);
    impl GraphFn for Flat {
        fn eval(&self, _x: f64) -> f64 {
            self.0
        }
        fn variation_bound(&self, _width: f64) -> f64 {
            0.0
        }
    }

    struct Ramp;
    impl GraphFn for Ramp {
        fn eval(&self, x: f64) -> f64 {
            x
        }
        fn variation_bound(&self, width: f64) -> f64 {
            width
        }
    }

    #[test]
    fn constant_graph_needs_one_box_per_column() {
        let p = params(0.5, 3);
        for m in 1..=3u32 {
            let n_cols = 2 * 3u64.pow(m);
            assert_eq!(
                count_boxes_fn(&p, &Flat(0.25), m, DEFAULT_POINT_BUDGET).unwrap(),
                n_cols
            );
        }
    }

    #[test]
    fn linear_graph_needs_two_boxes_per_column() {
        // per-column oscillation equals the column width exactly
        let p = params(0.5, 3);
        for m in 1..=3u32 {
            let n_cols = 2 * 3u64.pow(m);
            let count = count_boxes_fn(&p, &Ramp, m, DEFAULT_POINT_BUDGET).unwrap();
            assert!(count >= n_cols && count <= 2 * n_cols, "count = {count}");
        }
    }

    #[test]
    fn stub_dimensions_are_one() {
        let p = params(0.5, 3);
        for f in [&Flat(1.0) as &dyn GraphFn, &Ramp] {
            let r = estimate_dimension_fn(&p, f, 3, 8, DEFAULT_POINT_BUDGET).unwrap();
            assert!((r.slope - 1.0).abs() <= 0.05, "stub slope = {}", r.slope);
        }
        // the constant graph counts exactly N_m boxes, so its fit is exact
        let r = estimate_dimension_fn(&p, &Flat(1.0), 3, 8, DEFAULT_POINT_BUDGET).unwrap();
        assert!(r.r_squared >= 0.999);
    }

    #[test]
    fn counts_are_monotone_and_sandwiched() {
        let p = params(0.5, 3);
        let mut prev = 0u64;
        for m in 1..=4u32 {
            let count = count_boxes(&p, m, DEFAULT_TOL, DEFAULT_POINT_BUDGET).unwrap();
            assert!(count >= prev, "counts must not decrease as the grid refines");
            let cover = corollary_cover(&p, m).unwrap();
            assert!(count >= cover.n_columns);
            assert!(
                (count as u128) <= cover.product + cover.n_columns as u128,
                "count {count} above the cover plus alignment slack at m={m}"
            );
            prev = count;
        }
    }

    #[test]
    fn regression_input_validation() {
        let p = params(0.5, 3);
        assert!(matches!(
            estimate_dimension(&p, 3, 3, DEFAULT_TOL, DEFAULT_POINT_BUDGET),
            Err(Error::InvalidLevel { .. })
        ));
        assert!(matches!(
            estimate_dimension(&p, 0, 2, DEFAULT_TOL, DEFAULT_POINT_BUDGET),
            Err(Error::InvalidLevel { .. })
        ));
        assert!(matches!(
            count_boxes(&p, 20, DEFAULT_TOL, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn cover_reference_values() {
        let p = params(0.5, 3);
        let cover = corollary_cover(&p, 2).unwrap();
        assert_eq!(cover.n_columns, 18);
        assert!((cover.c_const - p.eta_w()).abs() <= 1e-12, "C = eta_W here");
        assert_eq!(cover.rows_per_column, 172);
        assert!(cover.rows_per_column >= 1);
        assert!(matches!(corollary_cover(&p, 0), Err(Error::InvalidLevel { .. })));
    }

    #[test]
    fn power_law_ratios_converge_to_c() {
        let p = params(0.5, 3);
        let c = p.bound_constants().cover_c;
        let ratios = cover_power_law(&p, 1, 10).unwrap();
        assert_eq!(ratios.len(), 10);
        for (i, r) in ratios.iter().enumerate() {
            assert!(*r > 0.0);
            let m = i as u32 + 1;
            if m >= 5 {
                assert!((r - c).abs() / c <= 0.1, "r_{m} = {r} strays from C = {c}");
            }
        }
        // direct substitution spot check at m=1
        let cover = corollary_cover(&p, 1).unwrap();
        let expected = cover.product as f64 * p.cell_width(1).powf(p.dimension().value());
        assert_eq!(ratios[0], expected);
    }
}
