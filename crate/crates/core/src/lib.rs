//! Prefractal approximation of the Weierstrass graph via its iterated
//! function system, numerical verification of the two-sided oscillation
//! bounds, and recovery of the box-counting dimension
//! D_W = 2 + ln(lambda)/ln(N_b) from log-log box counts.
//!
//! Everything is driven by a validated [`FractalParams`] pair (lambda, N_b).
//! All types are immutable after construction and safe to share across
//! threads; the bulk operations parallelize internally but stay
//! deterministic.

pub mod bounds;
pub mod boxdim;
pub mod error;
pub mod eval;
pub mod ifs;
pub mod params;

pub use bounds::{
    increment_decomposition, increment_h, level_factor, theorem_bounds, verify_theorem,
    BoundsReport, IncrementRecord, SLACK_ABS, SLACK_REL,
};
pub use boxdim::{
    corollary_cover, count_boxes, count_boxes_fn, cover_power_law, estimate_dimension,
    estimate_dimension_fn, BoxCountResult, CoverSpec,
};
pub use error::{Error, Result};
pub use eval::{
    eval_w, oscillation, oscillation_fn, truncation_for, GraphFn, OscillationEstimate,
    SeriesTruncation, WeierstrassEvaluator, WeierstrassGraph, DEFAULT_TOL, MAX_SERIES_TERMS,
    OSC_BASE_SAMPLES, OSC_MAX_SAMPLES,
};
pub use ifs::{
    adjacency_pairs, apply_t, apply_word, build_v_m, closed_form_x, closed_form_y, fixed_points,
    polygons, AdjacencyPairs, Point2, Polygon, VertexSet, Word, DEFAULT_POINT_BUDGET,
};
pub use params::{box_dimension, new_params, BoundConstants, DimensionValue, FractalParams};
