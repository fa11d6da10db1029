//! Wasserstein-2 distances between uniform empirical measures of equal size.
//!
//! Between two `n`-atom uniform measures the optimal plan is a permutation, so
//! `W₂² = min_π (1/n) Σ ‖a_i − b_π(i)‖²`. [`w2_exact`] solves the assignment
//! problem, [`w2_approx`] gives a certified upper bound through entropic
//! transport and plan rounding, and [`w2_bruteforce`] enumerates permutations
//! for tiny inputs.

mod assignment;
mod measure;
mod sinkhorn;

pub use assignment::{optimal_assignment, w2_bruteforce, w2_exact, BRUTE_FORCE_LIMIT, EXACT_LIMIT};
pub use measure::{cost_matrix, EmpiricalMeasure};
pub use sinkhorn::{w2_approx, w2_approx_with, ApproxW2, SinkhornOptions};
