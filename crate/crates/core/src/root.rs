//! Monotone bisection on predicates.
//!
//! Root finding here never looks at function values, only at a monotone
//! predicate `p` with `p(lo) == false` and `p(hi) == true`. Shrinking the
//! bracket keeps that invariant, so the result converges to the leftmost
//! point where the predicate switches on, which is what the generalized
//! inverses in this crate need on flat stretches.

/// Bracket returned by [`bisect_predicate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    /// Largest point known to fail the predicate.
    pub lo: f64,
    /// Smallest point known to satisfy the predicate.
    pub hi: f64,
    pub iterations: usize,
}

/// Shrinks `[lo, hi]` until `hi - lo <= tol` or `max_iter` is reached.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(
    mut pred: P,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Bracket {
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Bracket { lo, hi, iterations }
}
