//! The contraction family T_i(x,y) = ((x+i)/N_b, lambda y + cos(2 pi (x+i)/N_b)),
//! word addressing, the vertex sets V_m of the prefractal graphs, adjacency
//! and the polygon decomposition.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::FractalParams;

const TWO_PI: f64 = 2.0 * PI;

/// Default ceiling on constructed vertex counts.
pub const DEFAULT_POINT_BUDGET: u64 = 10_000_000;

/// Merge tolerances for junction deduplication. The x tolerance is scaled by
/// N_b^-m; the minimum true gap at level m is L_m, orders of magnitude wider.
const DEDUP_X_FACTOR: f64 = 1e-12;
const DEDUP_Y_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Address of a level-m cell: digits (M_1, ..., M_m), each in 0..N_b, with
/// M_1 outermost in the composition T_M = T_{M_1} o ... o T_{M_m}.
///
/// Enumeration order is lexicographic with M_1 most significant, so the cell
/// with index c (left to right on the x axis) carries the base-N_b digits
/// of c.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    digits: Vec<u32>,
}

impl Word {
    pub fn new(digits: Vec<u32>, p: &FractalParams) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyWord);
        }
        for &d in &digits {
            if d >= p.n_b() {
                return Err(Error::DigitOutOfRange { digit: d, n_b: p.n_b() });
            }
        }
        Ok(Word { digits })
    }

    /// Digits of `cell` in base N_b, left-padded to length m.
    pub fn from_cell_index(mut cell: u64, m: u32, p: &FractalParams) -> Result<Self> {
        let n_b = p.n_b() as u64;
        let mut digits = vec![0u32; m as usize];
        for slot in digits.iter_mut().rev() {
            *slot = (cell % n_b) as u32;
            cell /= n_b;
        }
        if cell != 0 {
            return Err(Error::InvalidLevel { m, reason: "cell index does not fit in N_b^m" });
        }
        Word::new(digits, p)
    }

    pub fn cell_index(&self, p: &FractalParams) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, &d| acc * p.n_b() as u64 + d as u64)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty words
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }
}

impl fmt::Display for Word {
    /// Base-N_b digit string; digits above 9 are dot-separated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.iter().all(|&d| d < 10) {
            for d in &self.digits {
                write!(f, "{d}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One application of T_i.
pub fn apply_t(p: &FractalParams, i: u32, pt: Point2) -> Result<Point2> {
    if i >= p.n_b() {
        return Err(Error::DigitOutOfRange { digit: i, n_b: p.n_b() });
    }
    let x = (pt.x + i as f64) / p.n_b_f();
    Ok(Point2 { x, y: p.lambda() * pt.y + (TWO_PI * x).cos() })
}

/// The fixed points P_i = (i/(N_b-1), cos(2 pi i/(N_b-1))/(1-lambda)),
/// in increasing abscissa.
pub fn fixed_points(p: &FractalParams) -> Vec<Point2> {
    let denom = p.n_b_f() - 1.0;
    (0..p.n_b())
        .map(|i| Point2 {
            x: i as f64 / denom,
            y: (TWO_PI * i as f64 / denom).cos() / (1.0 - p.lambda()),
        })
        .collect()
}

/// T_M = T_{M_1} o ... o T_{M_m} applied to `pt`: the composition iterates the
/// digits innermost (M_m) first. This direct iteration is the authoritative
/// semantics; the closed forms below are accepted only because they agree
/// with it.
pub fn apply_word(p: &FractalParams, w: &Word, pt: Point2) -> Point2 {
    let mut pt = pt;
    for &d in w.digits().iter().rev() {
        let x = (pt.x + d as f64) / p.n_b_f();
        pt = Point2 { x, y: p.lambda() * pt.y + (TWO_PI * x).cos() };
    }
    pt
}

fn check_j(p: &FractalParams, j: u32) -> Result<()> {
    if j >= p.n_b() {
        return Err(Error::IndexOutOfRange { index: j, n_b: p.n_b() });
    }
    Ok(())
}

/// x(T_M(P_j)) = x_j/N_b^m + sum_k M_k/N_b^k, with the outermost digit M_1 at
/// denominator N_b.
pub fn closed_form_x(p: &FractalParams, w: &Word, j: u32) -> Result<f64> {
    check_j(p, j)?;
    let n = p.n_b_f();
    let x_j = j as f64 / (n - 1.0);
    let mut sum = 0.0;
    let mut scale = 1.0;
    for &d in w.digits() {
        scale /= n;
        sum += d as f64 * scale;
    }
    Ok(x_j * scale + sum)
}

/// y(T_M(P_j)) = lambda^m y_j
///   + sum_{k=1}^m lambda^{m-k} cos(2 pi (x_j/N_b^k + sum_{s=1}^k M_{m-k+s}/N_b^s)),
/// i.e. the k-th cosine sees the length-k suffix of the word.
pub fn closed_form_y(p: &FractalParams, w: &Word, j: u32) -> Result<f64> {
    check_j(p, j)?;
    let n = p.n_b_f();
    let lambda = p.lambda();
    let m = w.len();
    let x_j = j as f64 / (n - 1.0);
    let y_j = (TWO_PI * j as f64 / (n - 1.0)).cos() / (1.0 - lambda);

    let mut sum = lambda.powi(m as i32) * y_j;
    for k in 1..=m {
        let suffix = &w.digits()[m - k..];
        let mut phase = 0.0;
        let mut scale = 1.0;
        for &d in suffix {
            scale /= n;
            phase += d as f64 * scale;
        }
        phase += x_j * scale;
        sum += lambda.powi((m - k) as i32) * (TWO_PI * phase).cos();
    }
    Ok(sum)
}

/// The ordered vertex set V_m of the level-m prefractal graph. Points are
/// strictly increasing in x after junction deduplication; consecutive points
/// are the graph edges.
#[derive(Debug, Clone, Serialize)]
pub struct VertexSet {
    level: u32,
    n_b: u32,
    points: Vec<Point2>,
}

impl VertexSet {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Consecutive-point edges (i, i+1).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.points.len()).map(|i| (i - 1, i))
    }

    /// Address of vertex `index` as a (word, j) pair. Junction points carry
    /// two addresses; the lexicographically smaller word (the left cell) is
    /// returned. Level-0 sets have no words: the address is (None, i).
    pub fn address_of(&self, index: usize, p: &FractalParams) -> Result<(Option<Word>, u32)> {
        if self.level == 0 {
            return Ok((None, index as u32));
        }
        let per_cell = (self.n_b - 1) as usize;
        let cell = if index == 0 { 0 } else { (index - 1) / per_cell } as u64;
        let j = (index as u64 - cell * per_cell as u64) as u32;
        Ok((Some(Word::from_cell_index(cell, self.level, p)?), j))
    }
}

fn expected_len(p: &FractalParams, m: u32) -> Option<u128> {
    let n_b = p.n_b() as u128;
    let cells = n_b.checked_pow(m)?;
    cells.checked_mul(n_b as u128 - 1)?.checked_add(1)
}

/// Builds V_m by iterating V_m = union of T_i(V_{m-1}) from the fixed points,
/// merging coincident junctions at every level.
pub fn build_v_m(p: &FractalParams, m: u32, budget: u64) -> Result<VertexSet> {
    let needed = expected_len(p, m).ok_or(Error::BudgetExceeded {
        needed: u128::MAX,
        budget,
    })?;
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let mut points = fixed_points(p);
    for level in 1..=m {
        let mut next: Vec<Point2> = Vec::with_capacity(points.len() * p.n_b() as usize);
        let x_tol = DEDUP_X_FACTOR * p.n_b_f().powi(-(level as i32));
        for i in 0..p.n_b() {
            for pt in &points {
                // apply_t with a validated digit cannot fail
                let image = apply_t(p, i, *pt).expect("digit in range");
                match next.last() {
                    Some(prev)
                        if (image.x - prev.x).abs() <= x_tol
                            && (image.y - prev.y).abs() <= DEDUP_Y_TOL =>
                    {
                        // junction of consecutive images: keep the first copy
                    }
                    _ => next.push(image),
                }
            }
        }
        points = next;
    }

    Ok(VertexSet { level: m, n_b: p.n_b(), points })
}

/// All adjacent pairs of the level-m graph, enumerated exactly once: the
/// within-cell pairs (T_M(P_j), T_M(P_{j+1})) as (word, j), and the cross-cell
/// junction pairs, whose two addresses name the same merged point.
#[derive(Debug, Clone)]
pub struct AdjacencyPairs {
    pub within: Vec<(Word, u32)>,
    pub junctions: Vec<(Word, Word)>,
}

pub fn adjacency_pairs(p: &FractalParams, m: u32, budget: u64) -> Result<AdjacencyPairs> {
    if m == 0 {
        return Err(Error::InvalidLevel { m, reason: "adjacency pairs need m >= 1" });
    }
    let needed = expected_len(p, m).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let cells = (p.n_b() as u64).pow(m);
    let mut within = Vec::with_capacity((cells * (p.n_b() as u64 - 1)) as usize);
    let mut junctions = Vec::with_capacity((cells - 1) as usize);
    for cell in 0..cells {
        let word = Word::from_cell_index(cell, m, p)?;
        for j in 0..p.n_b() - 1 {
            within.push((word.clone(), j));
        }
        if cell + 1 < cells {
            junctions.push((word, Word::from_cell_index(cell + 1, m, p)?));
        }
    }
    Ok(AdjacencyPairs { within, junctions })
}

/// A level-m cell's simple polygon: the N_b images T_M(P_0..P_{N_b-1}), closed
/// by the edge from the last vertex back to the first.
#[derive(Debug, Clone, Serialize)]
pub struct Polygon {
    pub cell_word: Word,
    pub vertices: Vec<Point2>,
}

pub fn polygons(p: &FractalParams, m: u32, budget: u64) -> Result<Vec<Polygon>> {
    if m == 0 {
        return Err(Error::InvalidLevel { m, reason: "polygons need m >= 1" });
    }
    let needed = expected_len(p, m).ok_or(Error::BudgetExceeded { needed: u128::MAX, budget })?;
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let fps = fixed_points(p);
    let cells = (p.n_b() as u64).pow(m);
    let mut out = Vec::with_capacity(cells as usize);
    for cell in 0..cells {
        let word = Word::from_cell_index(cell, m, p)?;
        let vertices = fps.iter().map(|&fp| apply_word(p, &word, fp)).collect();
        out.push(Polygon { cell_word: word, vertices });
    }
    Ok(out)
}
