//! Evaluation of W(x) = sum lambda^n cos(2 pi N_b^n x) with a certified
//! truncation, plus sampled oscillation (sup minus inf) over intervals.
//!
//! Phases are reduced modulo 1 *before* the multiplication by 2 pi. The
//! recurrence f_{n+1} = frac(N_b f_n) is carried out exactly on the dyadic
//! numerator of the stored f64 (x = m/2^s, r_{n+1} = r_n N_b mod 2^s in
//! integer arithmetic): a floating-point frac recurrence re-rounds each
//! step and those roundings compound as N_b^n, destroying the phases past
//! n ~ 53/log2(N_b). Here only the final conversion of each r_n rounds, so
//! every retained term sees the true phase of the argument to within one
//! ulp, well inside the documented n N_b 2^-52 budget.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::FractalParams;

const TWO_PI: f64 = 2.0 * PI;

/// Hard cap on retained series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;
/// Default evaluation tolerance used by the CLI and convenience wrappers.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Base grid size of an oscillation estimate.
pub const OSC_BASE_SAMPLES: usize = 32;
/// Refinement stops once this many samples were spent on one interval.
pub const OSC_MAX_SAMPLES: usize = 1 << 15;
/// Refinement stops once the inter-sample variation bound drops below this
/// fraction of the current estimate.
pub const OSC_REFINE_FRACTION: f64 = 0.01;

/// Number of retained terms (indices 0..=k_last) and the rigorous bound
/// lambda^(k_last+1)/(1-lambda) on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTruncation {
    pub k_last: usize,
    pub tail_bound: f64,
}

/// Smallest truncation whose geometric tail bound is at most `tol`.
pub fn truncation_for(p: &FractalParams, tol: f64) -> Result<SeriesTruncation> {
    if !(tol > 0.0) {
        return Err(Error::ToleranceTooSmall { tol, cap: MAX_SERIES_TERMS });
    }
    let lambda = p.lambda();
    let mut k = 0usize;
    let mut tail = lambda / (1.0 - lambda);
    while tail > tol {
        k += 1;
        tail *= lambda;
        if k > MAX_SERIES_TERMS {
            return Err(Error::ToleranceTooSmall { tol, cap: MAX_SERIES_TERMS });
        }
    }
    Ok(SeriesTruncation { k_last: k, tail_bound: tail })
}

/// The sequence frac(N_b^n x), n = 0, 1, 2, ..., computed exactly for the
/// binary rational actually stored in `x`: with x = m/2^s (s <= 127 after
/// clamping), r_{n+1} = r_n N_b mod 2^s. The wrapping 128-bit product is
/// exact modulo 2^s; only the conversion of each r_n to f64 rounds.
#[derive(Debug, Clone)]
struct PhaseSequence {
    r: u128,
    mask: u128,
    scale: f64,
    n_b: u128,
}

impl PhaseSequence {
    fn new(x: f64, n_b: u32) -> Self {
        let x = x.rem_euclid(1.0);
        let zero = PhaseSequence { r: 0, mask: 1, scale: 0.5, n_b: n_b as u128 };
        if x == 0.0 {
            return zero;
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut m, mut s): (u128, u32) = if biased == 0 {
            (frac as u128, 1074)
        } else {
            ((frac | (1u64 << 52)) as u128, 1075 - biased)
        };
        let drop = m.trailing_zeros().min(s - 1);
        m >>= drop;
        s -= drop;
        if s > 127 {
            // x below 2^-74: truncate the numerator; the discarded phase mass
            // is under 2^-74 even after full amplification to the last term
            m >>= s - 127;
            s = 127;
            if m == 0 {
                return zero;
            }
        }
        PhaseSequence {
            r: m,
            mask: (1u128 << s) - 1,
            scale: 2f64.powi(-(s as i32)),
            n_b: n_b as u128,
        }
    }

    fn next(&mut self) -> f64 {
        let f = self.r as f64 * self.scale;
        self.r = self.r.wrapping_mul(self.n_b) & self.mask;
        f
    }
}

/// Truncated series evaluator for one (params, tolerance) pair.
#[derive(Debug, Clone)]
pub struct WeierstrassEvaluator {
    lambda: f64,
    n_b: u32,
    truncation: SeriesTruncation,
}

impl WeierstrassEvaluator {
    pub fn new(p: &FractalParams, tol: f64) -> Result<Self> {
        Ok(WeierstrassEvaluator {
            lambda: p.lambda(),
            n_b: p.n_b(),
            truncation: truncation_for(p, tol)?,
        })
    }

    pub fn truncation(&self) -> SeriesTruncation {
        self.truncation
    }

    /// Documented worst-case phase budget across the retained terms,
    /// K * N_b * 2^-52. The exact dyadic recurrence stays well inside it.
    pub fn phase_error_budget(&self) -> f64 {
        self.truncation.k_last as f64 * self.n_b as f64 * 2f64.powi(-52)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut phase = PhaseSequence::new(x, self.n_b);
        let mut weight = 1.0;
        let mut sum = 0.0;
        for _ in 0..=self.truncation.k_last {
            sum += weight * (TWO_PI * phase.next()).cos();
            weight *= self.lambda;
        }
        sum
    }

    /// Min/max of the partial sum over the uniform grid start + i*step,
    /// i = 0..count. Per term the cosine advances by a fixed angle, so the
    /// whole scan needs one (cos, sin) pair per term and no per-sample cosine
    /// calls; rotation drift over a scan stays below ~1e-11.
    pub fn grid_min_max(&self, start: f64, step: f64, count: usize) -> (f64, f64) {
        let k = self.truncation.k_last + 1;
        let mut cos_v = vec![0.0f64; k];
        let mut sin_v = vec![0.0f64; k];
        let mut cos_d = vec![0.0f64; k];
        let mut sin_d = vec![0.0f64; k];
        let mut weight = vec![0.0f64; k];

        let mut f_seq = PhaseSequence::new(start, self.n_b);
        let mut g_seq = PhaseSequence::new(step, self.n_b);
        let mut w = 1.0;
        for n in 0..k {
            let phase = TWO_PI * f_seq.next();
            cos_v[n] = phase.cos();
            sin_v[n] = phase.sin();
            let delta = TWO_PI * g_seq.next();
            cos_d[n] = delta.cos();
            sin_d[n] = delta.sin();
            weight[n] = w;
            w *= self.lambda;
        }

        let (cos_v, sin_v) = (&mut cos_v[..k], &mut sin_v[..k]);
        let (cos_d, sin_d, weight) = (&cos_d[..k], &sin_d[..k], &weight[..k]);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..count {
            // two passes keep both loops free of cross-iteration dependencies
            // so they vectorize; the arrays stay in L1
            let mut acc0 = 0.0;
            let mut acc1 = 0.0;
            let mut chunks = weight.chunks_exact(2).zip(cos_v.chunks_exact(2));
            for (w, c) in &mut chunks {
                acc0 += w[0] * c[0];
                acc1 += w[1] * c[1];
            }
            if k % 2 == 1 {
                acc0 += weight[k - 1] * cos_v[k - 1];
            }
            let sum = acc0 + acc1;
            lo = lo.min(sum);
            hi = hi.max(sum);

            for n in 0..k {
                let c = cos_v[n] * cos_d[n] - sin_v[n] * sin_d[n];
                let s = sin_v[n] * cos_d[n] + cos_v[n] * sin_d[n];
                cos_v[n] = c;
                sin_v[n] = s;
            }
        }
        (lo, hi)
    }
}

/// One-shot evaluation of the truncated series at `x`.
pub fn eval_w(p: &FractalParams, x: f64, tol: f64) -> Result<f64> {
    Ok(WeierstrassEvaluator::new(p, tol)?.eval(x))
}

/// A pointwise-evaluatable graph y = f(x) together with an upper bound on its
/// variation over short spans. `count_boxes` and the oscillation engine work
/// against this trait so smooth calibration stubs can stand in for W.
pub trait GraphFn: Sync {
    fn eval(&self, x: f64) -> f64;

    /// Upper bound on |f(x) - f(y)| whenever |x - y| <= width.
    fn variation_bound(&self, width: f64) -> f64;

    /// Min/max over the uniform grid start + i*step, i = 0..count.
    fn grid_min_max(&self, start: f64, step: f64, count: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..count {
            let v = self.eval(start + i as f64 * step);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// W as a `GraphFn`: the variation bound is the two-sided theorem's upper
/// estimate eta_W (N_b-1)^(2-D_W) width^(2-D_W).
pub struct WeierstrassGraph {
    evaluator: WeierstrassEvaluator,
    coeff: f64,
    exponent: f64,
}

impl WeierstrassGraph {
    pub fn new(p: &FractalParams, tol: f64) -> Result<Self> {
        let d_w = p.dimension().value();
        Ok(WeierstrassGraph {
            evaluator: WeierstrassEvaluator::new(p, tol)?,
            coeff: p.eta_w() * (p.n_b_f() - 1.0).powf(2.0 - d_w),
            exponent: 2.0 - d_w,
        })
    }

    pub fn evaluator(&self) -> &WeierstrassEvaluator {
        &self.evaluator
    }
}

impl GraphFn for WeierstrassGraph {
    fn eval(&self, x: f64) -> f64 {
        self.evaluator.eval(x)
    }

    fn variation_bound(&self, width: f64) -> f64 {
        self.coeff * width.powf(self.exponent)
    }

    fn grid_min_max(&self, start: f64, step: f64, count: usize) -> (f64, f64) {
        self.evaluator.grid_min_max(start, step, count)
    }
}

/// Sampled oscillation over [x1, x2]. `lo`/`hi` never over-estimate the true
/// extrema, so `osc` is a lower estimate of sup - inf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationEstimate {
    pub lo: f64,
    pub hi: f64,
    pub osc: f64,
    pub samples_used: usize,
}

/// Oscillation of any `GraphFn` over [x1, x2]: an equispaced base grid of
/// `n_samples` points including both endpoints, then midpoint insertion until
/// the inter-sample variation bound drops below `OSC_REFINE_FRACTION` of the
/// current estimate or the sample cap is reached.
pub fn oscillation_fn(
    f: &dyn GraphFn,
    x1: f64,
    x2: f64,
    n_samples: usize,
) -> Result<OscillationEstimate> {
    if !(x1 < x2) {
        return Err(Error::InvalidInterval { x1, x2 });
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n_samples });
    }

    let cap = OSC_MAX_SAMPLES.max(n_samples);
    let mut intervals = n_samples - 1;
    let mut spacing = (x2 - x1) / intervals as f64;
    let (mut lo, mut hi) = f.grid_min_max(x1, spacing, n_samples);
    let mut used = n_samples;

    loop {
        let osc = hi - lo;
        if f.variation_bound(spacing) <= OSC_REFINE_FRACTION * osc {
            break;
        }
        if used + intervals > cap {
            break;
        }
        // midpoints of the current grid form a uniform grid of their own
        let (mlo, mhi) = f.grid_min_max(x1 + spacing / 2.0, spacing, intervals);
        lo = lo.min(mlo);
        hi = hi.max(mhi);
        used += intervals;
        intervals *= 2;
        spacing /= 2.0;
    }

    Ok(OscillationEstimate { lo, hi, osc: hi - lo, samples_used: used })
}

/// Oscillation of W itself.
pub fn oscillation(
    p: &FractalParams,
    x1: f64,
    x2: f64,
    n_samples: usize,
    tol: f64,
) -> Result<OscillationEstimate> {
    oscillation_fn(&WeierstrassGraph::new(p, tol)?, x1, x2, n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lam: f64, nb: u32) -> FractalParams {
        FractalParams::new(lam, nb).unwrap()
    }

    #[test]
    fn truncation_reference_values() {
        let p = params(0.5, 3);
        assert_eq!(truncation_for(&p, 1e-12).unwrap().k_last, 40);
        assert_eq!(truncation_for(&p, 1.0).unwrap().k_last, 0);
        let p = params(0.9, 3);
        assert_eq!(truncation_for(&p, 1e-6).unwrap().k_last, 152);
    }

    #[test]
    fn truncation_bound_is_tight_from_below() {
        for (lam, tol) in [(0.5, 1e-12), (0.9, 1e-6), (0.34, 1e-3)] {
            let p = params(lam, 3);
            let t = truncation_for(&p, tol).unwrap();
            assert!(t.tail_bound <= tol);
            if t.k_last > 0 {
                let looser = lam.powi(t.k_last as i32) / (1.0 - lam);
                assert!(looser > tol, "K not minimal for lam={lam} tol={tol}");
            }
        }
    }

    #[test]
    fn truncation_rejects_absurd_tolerance() {
        let p = params(0.9999, 100_000);
        assert!(matches!(
            truncation_for(&p, 1e-300),
            Err(Error::ToleranceTooSmall { .. })
        ));
        assert!(matches!(
            truncation_for(&p, 0.0),
            Err(Error::ToleranceTooSmall { .. })
        ));
    }

    #[test]
    fn eval_at_zero_is_geometric_sum() {
        for (lam, nb) in [(0.5, 3u32), (0.5, 4), (0.7, 3), (0.9, 5)] {
            let p = params(lam, nb);
            let w0 = eval_w(&p, 0.0, 1e-12).unwrap();
            assert!(
                (w0 - 1.0 / (1.0 - lam)).abs() <= 1e-12 + 1e-12,
                "W(0) != 1/(1-lambda) for lam={lam} nb={nb}: {w0}"
            );
        }
    }

    #[test]
    fn eval_at_fixed_point_abscissae() {
        // N_b = 1 mod (N_b-1), so N_b^n i/(N_b-1) = i/(N_b-1) mod 1 and the
        // series collapses to cos(2 pi i/(N_b-1))/(1-lambda). When i/(N_b-1)
        // is not a binary rational the evaluator sees the nearest f64 and the
        // genuine gap |W(fl(x)) - W(x)| is of Hoelder size, so the tolerance
        // carries the modulus-of-continuity term for that half-ulp.
        for nb in [3u32, 4, 5, 7] {
            let p = params(0.5, nb);
            let holder = |dx: f64| {
                let e = 2.0 - p.dimension().value();
                p.eta_w() * (p.n_b_f() - 1.0).powf(e) * dx.powf(e)
            };
            for i in 0..nb {
                let x = i as f64 / (nb as f64 - 1.0);
                let representation_gap = {
                    // |fl(i/(N_b-1)) - i/(N_b-1)| via one long-division step
                    let back = x * (nb as f64 - 1.0);
                    ((back - i as f64) / (nb as f64 - 1.0)).abs() + f64::EPSILON * x
                };
                let expected = (TWO_PI * i as f64 / (nb as f64 - 1.0)).cos() / 0.5;
                let got = eval_w(&p, x, 1e-12).unwrap();
                let tol = 1e-9 + holder(representation_gap);
                assert!(
                    (got - expected).abs() <= tol,
                    "fixed-point value off at nb={nb} i={i}: {got} vs {expected} (tol {tol:e})"
                );
            }
        }
        // dyadic abscissae admit the strict tolerance
        assert!((eval_w(&params(0.5, 3), 0.5, 1e-12).unwrap() + 2.0).abs() <= 1e-9);
        assert!((eval_w(&params(0.5, 5), 0.25, 1e-12).unwrap() - 0.0).abs() <= 1e-9);
    }

    #[test]
    fn grid_kernel_matches_pointwise_eval() {
        let p = params(0.5, 3);
        let ev = WeierstrassEvaluator::new(&p, 1e-12).unwrap();
        let (start, step, count) = (0.1234, 7.7e-5, 4001);
        let (lo, hi) = ev.grid_min_max(start, step, count);
        let mut plo = f64::INFINITY;
        let mut phi = f64::NEG_INFINITY;
        for i in 0..count {
            let v = ev.eval(start + i as f64 * step);
            plo = plo.min(v);
            phi = phi.max(v);
        }
        assert!((lo - plo).abs() <= 1e-9, "grid lo {lo} vs pointwise {plo}");
        assert!((hi - phi).abs() <= 1e-9, "grid hi {hi} vs pointwise {phi}");
    }

    #[test]
    fn oscillation_full_period() {
        let p = params(0.5, 3);
        let est = oscillation(&p, 0.0, 1.0, OSC_BASE_SAMPLES, 1e-12).unwrap();
        // sup W = W(0) = 2 and W(1/2) = -2, both on the sample grid
        assert!((est.hi - 2.0).abs() <= 1e-9, "hi = {}", est.hi);
        assert!(est.osc >= 4.0 - 1e-9, "osc = {}", est.osc);
        assert!(est.lo <= -2.0 + 1e-9);
        assert!(est.samples_used <= OSC_MAX_SAMPLES);
        assert!(est.samples_used > OSC_BASE_SAMPLES, "refinement should have kicked in");
    }

    #[test]
    fn oscillation_tiny_interval_is_tiny() {
        // continuity: over a 1e-15-wide interval the oscillation is of
        // modulus-of-continuity size, ~1e-8 at these parameters
        let p = params(0.5, 3);
        let x = 0.3;
        let est = oscillation(&p, x, x + 1e-15, 2, 1e-12).unwrap();
        assert!(est.osc.abs() <= 1e-6, "osc = {}", est.osc);
        assert!(est.lo <= est.hi);
    }

    #[test]
    fn oscillation_rejects_bad_input() {
        let p = params(0.5, 3);
        assert!(matches!(
            oscillation(&p, 0.5, 0.5, 32, 1e-12),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            oscillation(&p, 0.6, 0.5, 32, 1e-12),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            oscillation(&p, 0.1, 0.5, 1, 1e-12),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn constant_stub_stops_at_base_grid() {
        struct Flat;
        impl GraphFn for Flat {
            fn eval(&self, _x: f64) -> f64 {
                3.25
            }
            fn variation_bound(&self, _width: f64) -> f64 {
                0.0
            }
        }
        let est = oscillation_fn(&Flat, 0.0, 1.0, 32).unwrap();
        assert_eq!(est.osc, 0.0);
        assert_eq!(est.samples_used, 32);
    }

    #[test]
    fn linear_stub_refines_until_certificate() {
        struct Ramp;
        impl GraphFn for Ramp {
            fn eval(&self, x: f64) -> f64 {
                x
            }
            fn variation_bound(&self, width: f64) -> f64 {
                width
            }
        }
        let est = oscillation_fn(&Ramp, 0.0, 0.25, 32).unwrap();
        assert!((est.osc - 0.25).abs() <= 1e-15);
        // stops once spacing <= 1% of the oscillation: 125 points suffice
        assert_eq!(est.samples_used, 125);
    }
}
