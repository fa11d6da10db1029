use super::measure::{check_pair, cost_matrix, EmpiricalMeasure};
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

/// Largest size accepted by [`w2_exact`].
pub const EXACT_LIMIT: usize = 512;
/// Largest size accepted by [`w2_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Minimum-cost perfect matching on a row-major `n × n` cost matrix.
///
/// Shortest augmenting paths with dual potentials, `O(n³)`. Returns the
/// column assigned to each row and the total cost.
pub fn optimal_assignment(cost: &[f64], n: usize) -> Result<(Vec<usize>, f64)> {
    if n == 0 || cost.len() != n * n {
        return Err(Error::DimensionMismatch {
            what: "cost matrix",
            expected: n * n,
            found: cost.len(),
        });
    }
    if let Some(i) = crate::numeric::first_non_finite(cost) {
        return Err(Error::invalid(format!("cost entry {i} is not finite")));
    }
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_to = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        min_to.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        way[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    let total: CompensatedSum = col_of.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    Ok((col_of, total.value()))
}

/// Exact `W₂` for `n ≤ 512`; larger inputs must use `w2_approx`.
pub fn w2_exact(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    if n > EXACT_LIMIT {
        return Err(Error::invalid(format!(
            "exact W2 is limited to {EXACT_LIMIT} atoms (got {n}); use w2_approx"
        )));
    }
    let (_, total) = optimal_assignment(&cost_matrix(a, b)?, n)?;
    Ok((total.max(0.0) / n as f64).sqrt())
}

/// `W₂` by enumerating all `n!` permutations, `n ≤ 8`.
pub fn w2_bruteforce(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::invalid(format!(
            "brute force is limited to {BRUTE_FORCE_LIMIT} atoms (got {n})"
        )));
    }
    let cost = cost_matrix(a, b)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j])
            .collect::<CompensatedSum>()
            .value()
    };
    let mut best = total(&perm);
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(rows: &[&[f64]]) -> EmpiricalMeasure {
        EmpiricalMeasure::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_atom_is_euclidean_distance() {
        let a = measure(&[&[1.0, 2.0]]);
        let b = measure(&[&[4.0, -2.0]]);
        assert_eq!(w2_exact(&a, &b).unwrap(), 5.0);
        assert_eq!(w2_bruteforce(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn crossing_pairs_cost_nothing() {
        let a = measure(&[&[0.0, 1.0], &[3.0, -1.0]]);
        let b = measure(&[&[3.0, -1.0], &[0.0, 1.0]]);
        assert_eq!(w2_bruteforce(&a, &b).unwrap(), 0.0);
        assert_eq!(w2_exact(&a, &b).unwrap(), 0.0);
        assert_eq!(w2_exact(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn three_atoms_by_hand() {
        // 1-D: sorted matching is optimal.
        let a = measure(&[&[0.0], &[1.0], &[5.0]]);
        let b = measure(&[&[4.0], &[-1.0], &[2.0]]);
        let expected = ((1.0 + 1.0 + 1.0) / 3.0f64).sqrt();
        assert!((w2_exact(&a, &b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn assignment_matches_known_optimum() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (cols, total) = optimal_assignment(&cost, 3).unwrap();
        assert_eq!(total, 5.0);
        assert_eq!(cols, vec![1, 0, 2]);
    }

    #[test]
    fn limits_and_mismatches() {
        let a = EmpiricalMeasure::new(1, vec![0.0; 9]).unwrap();
        assert!(w2_bruteforce(&a, &a).is_err());
        let big = EmpiricalMeasure::new(1, (0..513).map(f64::from).collect()).unwrap();
        assert!(w2_exact(&big, &big).is_err());
        let b = EmpiricalMeasure::new(1, vec![0.0; 8]).unwrap();
        assert!(w2_exact(&a, &b).is_err());
        assert!(EmpiricalMeasure::new(2, vec![]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![f64::NAN]).is_err());
    }
}
