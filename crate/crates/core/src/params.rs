//! Validated parameter pair (lambda, N_b) and the closed-form constants built
//! from it: the dimension D_W = 2 + ln(lambda)/ln(N_b), the upper-bound
//! constant eta_W, the lower-bound brackets for both base parities and the
//! cover constant C.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Contraction ratio and branch count, validated at construction:
/// 0 < lambda < 1, N_b >= 3 and lambda * N_b > 1.
///
/// Immutable; every other quantity in the crate is derived from this pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractalParams {
    lambda: f64,
    n_b: u32,
}

impl FractalParams {
    pub fn new(lambda: f64, n_b: u32) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 || lambda >= 1.0 {
            return Err(Error::OutOfRange(lambda));
        }
        // N_b = 2 degenerates every constant (x_i = i/(N_b-1) collapses and
        // sin(pi/(N_b-1)) = 0), so it is rejected outright.
        if n_b < 3 {
            return Err(Error::BaseTooSmall(n_b));
        }
        let product = lambda * n_b as f64;
        if product <= 1.0 {
            return Err(Error::ContractivityViolation(product));
        }
        Ok(FractalParams { lambda, n_b })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_b(&self) -> u32 {
        self.n_b
    }

    pub fn n_b_f(&self) -> f64 {
        self.n_b as f64
    }

    /// Half-height of the graph: |W| <= 1/(1-lambda) everywhere.
    pub fn y_bound(&self) -> f64 {
        1.0 / (1.0 - self.lambda)
    }

    /// Box dimension D_W = 2 + ln(lambda)/ln(N_b).
    pub fn dimension(&self) -> DimensionValue {
        DimensionValue {
            value: 2.0 + self.lambda.ln() / self.n_b_f().ln(),
        }
    }

    /// Width of a level-m cell pair gap, L_m = 1/((N_b-1) N_b^m).
    pub fn cell_width(&self, m: u32) -> f64 {
        1.0 / ((self.n_b_f() - 1.0) * self.n_b_f().powi(m as i32))
    }

    /// Upper-bound constant
    /// eta_W = 2 pi^2 { (2N_b-1) lambda (N_b^2-1) / ((N_b-1)^2 (1-lambda)(lambda N_b^2 - 1))
    ///                  + 2 N_b / ((lambda N_b^2 - 1)(lambda N_b^3 - 1)) }.
    ///
    /// lambda N_b^2 > 1 and lambda N_b^3 > 1 follow from lambda N_b > 1, N_b >= 3.
    pub fn eta_w(&self) -> f64 {
        let l = self.lambda;
        let n = self.n_b_f();
        let first = (2.0 * n - 1.0) * l * (n * n - 1.0)
            / ((n - 1.0).powi(2) * (1.0 - l) * (l * n * n - 1.0));
        let second = 2.0 * n / ((l * n * n - 1.0) * (l * n * n * n - 1.0));
        2.0 * PI * PI * (first + second)
    }

    /// The letter where sin(pi(2j+1)/(N_b-1)) vanishes: j = N_b/2 - 1,
    /// present exactly when N_b is even.
    pub fn degenerate_j(&self) -> Option<u32> {
        if self.n_b % 2 == 0 {
            Some(self.n_b / 2 - 1)
        } else {
            None
        }
    }

    fn min_abs_sin(&self, exclude_degenerate: bool) -> f64 {
        let deg = self.degenerate_j();
        (0..self.n_b)
            .filter(|j| !(exclude_degenerate && Some(*j) == deg))
            .map(|j| (PI * (2.0 * j as f64 + 1.0) / (self.n_b_f() - 1.0)).sin().abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn bracket(&self, exclude_degenerate: bool) -> f64 {
        let l = self.lambda;
        let n = self.n_b_f();
        2.0 / (1.0 - l) * (PI / (n - 1.0)).sin() * self.min_abs_sin(exclude_degenerate)
            - 2.0 * PI / (n * (n - 1.0)) / (l * n - 1.0)
    }

    /// All lower/upper bound constants in one place. Signs are reported, never
    /// assumed: the brackets can be negative (always are, for even N_b with the
    /// minimum over all letters), in which case the bound is vacuous.
    pub fn bound_constants(&self) -> BoundConstants {
        let lower_odd = self.bracket(false);
        let lower_even_first = self.bracket(true);
        let n = self.n_b_f();
        let lower_even_second = 4.0 / (n * n) * (1.0 - n.powi(-2)) / (n * n - 1.0);
        let eta_w = self.eta_w();
        BoundConstants {
            lower_odd,
            lower_even_first,
            lower_even_second,
            eta_w,
            cover_c: lower_odd.max(eta_w),
        }
    }

    /// The single constant the two-sided check uses on the lower side: the
    /// bracket with the minimum over all letters for odd N_b, and
    /// max(bracket, second term) for even N_b. May be non-positive.
    pub fn effective_lower_constant(&self) -> f64 {
        let c = self.bound_constants();
        if self.n_b % 2 == 0 {
            c.lower_odd.max(c.lower_even_second)
        } else {
            c.lower_odd
        }
    }
}

/// The dimension of the graph, always strictly between 1 and 2 for valid
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionValue {
    value: f64,
}

impl DimensionValue {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Inverts the dimension formula: lambda = N_b^(D_W - 2).
    pub fn implied_lambda(&self, n_b: u32) -> f64 {
        (n_b as f64).powf(self.value - 2.0)
    }
}

/// Every closed-form constant of the two-sided bound and the cover argument.
///
/// `lower_odd` is the bracket with the minimum taken over all letters
/// 0..N_b-1 as printed; `lower_even_first` takes it over non-degenerate
/// letters only (the two readings coincide for odd N_b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub lower_odd: f64,
    pub lower_even_first: f64,
    pub lower_even_second: f64,
    pub eta_w: f64,
    pub cover_c: f64,
}

/// Convenience free function mirroring `FractalParams::new`.
pub fn new_params(lambda: f64, n_b: u32) -> Result<FractalParams> {
    FractalParams::new(lambda, n_b)
}

/// Convenience free function mirroring `FractalParams::dimension`.
pub fn box_dimension(p: &FractalParams) -> DimensionValue {
    p.dimension()
}
