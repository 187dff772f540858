//! Vertical increments h_{j,m} between consecutive level-m vertices, the
//! leading-term/series decomposition from the two-sided bound's proof, and a
//! bulk verifier that checks every (word, j) pair against the printed
//! constants and reports violations as data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{fixed_points, Point2, Word};
use crate::params::FractalParams;

const TWO_PI: f64 = 2.0 * PI;

/// Inequality slack: absolute plus relative, applied on both sides.
pub const SLACK_ABS: f64 = 1e-12;
pub const SLACK_REL: f64 = 1e-10;

/// One verified pair: its cell word, vertex letter j, widths and bounds.
/// `lower` is clamped at zero; `lower_raw` keeps the sign.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementRecord {
    pub word: Word,
    pub j: u32,
    pub l_m: f64,
    pub h: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_raw: f64,
}

/// Outcome of a bound sweep over level-m pairs.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub m: u32,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub violations_lower: u64,
    pub violations_upper: u64,
    pub skipped_nonpositive_lower: u64,
    pub min_ratio_lower: Option<f64>,
    pub max_ratio_upper: Option<f64>,
    pub worst: Vec<IncrementRecord>,
}

/// Applies the cell map addressed by `cell` (base-N_b digits, most significant
/// outermost) to a point, innermost digit first.
fn apply_cell(p: &FractalParams, cell: u64, m: u32, pt: Point2) -> Point2 {
    let n_b = p.n_b() as u64;
    let n_f = p.n_b_f();
    let lambda = p.lambda();
    let mut c = cell;
    let mut pt = pt;
    for _ in 0..m {
        let d = (c % n_b) as f64;
        c /= n_b;
        let x = (pt.x + d) / n_f;
        pt = Point2 { x, y: lambda * pt.y + (TWO_PI * x).cos() };
    }
    pt
}

/// Signed increment h_{j,m} = y(T_M(P_{j+1})) - y(T_M(P_j)).
pub fn increment_h(p: &FractalParams, w: &Word, j: u32) -> Result<f64> {
    if j + 1 >= p.n_b() {
        return Err(Error::IndexOutOfRange { index: j, n_b: p.n_b() });
    }
    let fps = fixed_points(p);
    let cell = w.cell_index(p);
    let m = w.len() as u32;
    let a = apply_cell(p, cell, m, fps[j as usize]);
    let b = apply_cell(p, cell, m, fps[j as usize + 1]);
    Ok(b.y - a.y)
}

/// Splits h_{j,m} into the leading term lambda^m (y_{j+1} - y_j), written as
/// the product of sines, plus the explicit m-term product-of-sines series.
/// The two parts always recompose to `increment_h` (to ~1e-12); that identity
/// is the proof's first display and is enforced by the tests.
pub fn increment_decomposition(p: &FractalParams, w: &Word, j: u32) -> Result<(f64, f64)> {
    if j + 1 >= p.n_b() {
        return Err(Error::IndexOutOfRange { index: j, n_b: p.n_b() });
    }
    let n = p.n_b_f();
    let lambda = p.lambda();
    let m = w.len();
    let jf = j as f64;

    let leading = -2.0 * lambda.powi(m as i32) / (1.0 - lambda)
        * (PI / (n - 1.0)).sin()
        * (PI * (2.0 * jf + 1.0) / (n - 1.0)).sin();

    let x_j = jf / (n - 1.0);
    let x_j1 = (jf + 1.0) / (n - 1.0);
    let half_sum = (x_j + x_j1) / 2.0;
    let delta = 1.0 / (n - 1.0);

    // suffix phase phi_k = sum_{s=1..k} M_{m-k+s} / N_b^s, built by prepending
    // one digit per step
    let mut phi = 0.0;
    let mut n_pow = 1.0;
    let mut series = 0.0;
    for k in 1..=m {
        let digit = w.digits()[m - k] as f64;
        phi = (digit + phi) / n;
        n_pow *= n;
        series += -2.0
            * lambda.powi((m - k) as i32)
            * (PI * delta / n_pow).sin()
            * (TWO_PI * (half_sum / n_pow + phi)).sin();
    }
    Ok((leading, series))
}

/// The two-sided bound at level m: (max(0, effective constant), eta_W), both
/// scaled by L_m^(2-D_W) (N_b-1)^(2-D_W).
pub fn theorem_bounds(p: &FractalParams, m: u32) -> (f64, f64) {
    let factor = level_factor(p, m);
    let lower = p.effective_lower_constant().max(0.0) * factor;
    (lower, p.eta_w() * factor)
}

/// L_m^(2-D_W) (N_b-1)^(2-D_W); equals lambda^m to relative 1e-12.
pub fn level_factor(p: &FractalParams, m: u32) -> f64 {
    let e = 2.0 - p.dimension().value();
    p.cell_width(m).powf(e) * (p.n_b_f() - 1.0).powf(e)
}

#[derive(Clone, Copy)]
struct Extreme {
    ratio: f64,
    cell: u64,
    j: u32,
    h: f64,
}

#[derive(Clone, Copy, Default)]
struct Tally {
    checked: u64,
    viol_lower: u64,
    viol_upper: u64,
    skipped_lower: u64,
    min_lower: Option<Extreme>,
    max_upper: Option<Extreme>,
}

fn better_min(a: Option<Extreme>, b: Option<Extreme>) -> Option<Extreme> {
    pick(a, b, |x, y| {
        x.ratio < y.ratio || (x.ratio == y.ratio && (x.cell, x.j) < (y.cell, y.j))
    })
}

fn better_max(a: Option<Extreme>, b: Option<Extreme>) -> Option<Extreme> {
    pick(a, b, |x, y| {
        x.ratio > y.ratio || (x.ratio == y.ratio && (x.cell, x.j) < (y.cell, y.j))
    })
}

fn pick(
    a: Option<Extreme>,
    b: Option<Extreme>,
    a_wins: impl Fn(&Extreme, &Extreme) -> bool,
) -> Option<Extreme> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if a_wins(&x, &y) { x } else { y }),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            checked: self.checked + other.checked,
            viol_lower: self.viol_lower + other.viol_lower,
            viol_upper: self.viol_upper + other.viol_upper,
            skipped_lower: self.skipped_lower + other.skipped_lower,
            min_lower: better_min(self.min_lower, other.min_lower),
            max_upper: better_max(self.max_upper, other.max_upper),
        }
    }
}

/// Checks lower <= |h_{j,m}| <= upper over level-m pairs: exhaustively when
/// (N_b-1) N_b^m <= budget, otherwise over a seeded uniform sample of
/// `budget` pairs. Deterministic for a fixed seed. Violations are data, not
/// errors; pairs whose lower bound is non-positive are skipped and counted.
pub fn verify_theorem(p: &FractalParams, m: u32, budget: u64, seed: u64) -> Result<BoundsReport> {
    if m == 0 {
        return Err(Error::InvalidLevel { m, reason: "the bound quantifies over m >= 1" });
    }
    let n_b = p.n_b() as u128;
    let total: Option<u128> = n_b
        .checked_pow(m)
        .and_then(|c| c.checked_mul(n_b - 1));
    let factor = level_factor(p, m);
    let lower_const = p.effective_lower_constant();
    let lower_raw = lower_const * factor;
    let lower = lower_raw.max(0.0);
    let upper = p.eta_w() * factor;
    let fps = fixed_points(p);

    let eval_pair = |cell: u64, j: u32| -> Tally {
        let a = apply_cell(p, cell, m, fps[j as usize]);
        let b = apply_cell(p, cell, m, fps[j as usize + 1]);
        let abs_h = (b.y - a.y).abs();
        let mut t = Tally { checked: 1, ..Tally::default() };
        if abs_h > upper * (1.0 + SLACK_REL) + SLACK_ABS {
            t.viol_upper = 1;
        }
        t.max_upper = Some(Extreme { ratio: abs_h / upper, cell, j, h: b.y - a.y });
        if lower > 0.0 {
            if abs_h < lower * (1.0 - SLACK_REL) - SLACK_ABS {
                t.viol_lower = 1;
            }
            t.min_lower = Some(Extreme { ratio: abs_h / lower, cell, j, h: b.y - a.y });
        } else {
            t.skipped_lower = 1;
        }
        t
    };

    let exhaustive = matches!(total, Some(t) if t <= budget as u128);
    let tally = if exhaustive {
        let cells = (p.n_b() as u64).pow(m);
        (0..cells)
            .into_par_iter()
            .map(|cell| {
                let mut t = Tally::default();
                for j in 0..p.n_b() - 1 {
                    t = t.merge(eval_pair(cell, j));
                }
                t
            })
            .reduce(Tally::default, Tally::merge)
    } else {
        // u64 arithmetic saturates long before this path triggers, so cells
        // are drawn from the full index range via two 64-bit draws
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells_u128 = n_b.checked_pow(m);
        let sample: Vec<(u64, u32)> = (0..budget)
            .map(|_| {
                let cell = match cells_u128 {
                    Some(c) if c <= u64::MAX as u128 => rng.random_range(0..c as u64),
                    _ => rng.random::<u64>(),
                };
                let j = rng.random_range(0..p.n_b() - 1);
                (cell, j)
            })
            .collect();
        sample
            .par_iter()
            .map(|&(cell, j)| eval_pair(cell, j))
            .reduce(Tally::default, Tally::merge)
    };

    let record = |e: Extreme| -> Result<IncrementRecord> {
        Ok(IncrementRecord {
            word: Word::from_cell_index(e.cell, m, p)?,
            j: e.j,
            l_m: p.cell_width(m),
            h: e.h,
            lower,
            upper,
            lower_raw,
        })
    };
    let mut worst = Vec::new();
    if let Some(e) = tally.max_upper {
        worst.push(record(e)?);
    }
    if let Some(e) = tally.min_lower {
        worst.push(record(e)?);
    }

    Ok(BoundsReport {
        m,
        pairs_checked: tally.checked,
        exhaustive,
        violations_lower: tally.viol_lower,
        violations_upper: tally.viol_upper,
        skipped_nonpositive_lower: tally.skipped_lower,
        min_ratio_lower: tally.min_lower.map(|e| e.ratio),
        max_ratio_upper: tally.max_upper.map(|e| e.ratio),
        worst,
    })
}
