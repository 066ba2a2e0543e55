use num_bigint::BigUint;
use num_traits::{One, Zero};
use statrs::function::gamma::ln_gamma;

/// Per-inner-vertex weight of the critical Boltzmann measure.
pub const CRITICAL_WEIGHT: f64 = 2.0 / 27.0;

/// Exact counts of rooted type-II triangulations by boundary length and
/// number of inner vertices, from the root-triangle recurrence
///
/// T(ℓ,n) = T(ℓ+1,n−1) + Σ_{k=2}^{ℓ−1} Σ_{n₁+n₂=n} T(k,n₁)·T(ℓ−k+1,n₂),
///
/// with the degenerate 2-gon T(2,0) = 1 and T(2,n) = T(3,n−1).
#[derive(Clone, Debug)]
pub struct CountTable {
    n_max: usize,
    rows: Vec<Vec<BigUint>>,
}

impl CountTable {
    pub fn new(ell_max: usize, n_max: usize) -> Self {
        let ell_max = ell_max.max(3);
        let width = |n: usize| ell_max + (n_max - n) + 1;
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let w = width(n);
            let mut row = vec![BigUint::zero(); w + 1];
            for ell in 2..=w {
                let mut total = BigUint::zero();
                if ell == 2 {
                    total = if n == 0 { BigUint::one() } else { rows[n - 1][3].clone() };
                } else {
                    if n >= 1 {
                        total += &rows[n - 1][ell + 1];
                    }
                    for k in 2..ell {
                        let other = ell - k + 1;
                        for n1 in 0..=n {
                            let left = if n1 == n { &row[k] } else { &rows[n1][k] };
                            if left.is_zero() {
                                continue;
                            }
                            let right = if n1 == 0 { &row[other] } else { &rows[n - n1][other] };
                            total += left * right;
                        }
                    }
                }
                row[ell] = total;
            }
            rows.push(row);
        }
        CountTable { n_max, rows }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn try_get(&self, ell: usize, n: usize) -> Option<&BigUint> {
        self.rows.get(n).and_then(|r| r.get(ell))
    }

    pub fn get(&self, ell: usize, n: usize) -> &BigUint {
        self.try_get(ell, n).expect("count table too small")
    }
}

pub fn count_triangulations(ell: usize, n: usize) -> BigUint {
    CountTable::new(ell, n).get(ell, n).clone()
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Closed-form count 2^{n+1}(2m+1)!(2m+3n)! / (m!² n! (2m+2n+2)!) with m = ℓ−2.
pub fn closed_form_count(ell: usize, n: usize) -> BigUint {
    assert!(ell >= 2);
    let m = ell - 2;
    let num = (BigUint::one() << (n + 1)) * factorial(2 * m + 1) * factorial(2 * m + 3 * n);
    let den = factorial(m) * factorial(m) * factorial(n) * factorial(2 * m + 2 * n + 2);
    num / den
}

/// log of the closed-form count, valid for large arguments.
pub(crate) fn ln_closed_form_count(ell: usize, n: usize) -> f64 {
    let m = (ell - 2) as f64;
    let n = n as f64;
    (n + 1.0) * std::f64::consts::LN_2 + ln_gamma(2.0 * m + 2.0) + ln_gamma(2.0 * m + 3.0 * n + 1.0)
        - 2.0 * ln_gamma(m + 1.0)
        - ln_gamma(n + 1.0)
        - ln_gamma(2.0 * m + 2.0 * n + 3.0)
}

/// log Z_ℓ with Z_{m+2} = (2m)!/((m+2)! m!)·(9/4)^{m+1}, the critical partition
/// function including the degenerate 2-gon in Z₂.
pub fn log_partition(ell: usize) -> f64 {
    assert!(ell >= 2);
    let m = (ell - 2) as f64;
    ln_gamma(2.0 * m + 1.0) - ln_gamma(m + 3.0) - ln_gamma(m + 1.0) + (m + 1.0) * (9.0f64 / 4.0).ln()
}

pub fn partition_function(ell: usize) -> f64 {
    log_partition(ell).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let t = CountTable::new(6, 6);
        assert_eq!(*t.get(3, 0), BigUint::from(1u32));
        assert_eq!(*t.get(3, 1), BigUint::from(4u32));
        assert_eq!(*t.get(4, 0), BigUint::from(2u32));
        assert_eq!(*t.get(4, 1), BigUint::from(15u32));
        assert_eq!(*t.get(4, 2), BigUint::from(120u32));
        assert_eq!(*t.get(4, 3), BigUint::from(1040u32));
        assert_eq!(*t.get(2, 0), BigUint::from(1u32));
        assert_eq!(t.get(2, 3), t.get(3, 2));
    }

    #[test]
    fn recurrence_matches_closed_form() {
        let t = CountTable::new(9, 9);
        for ell in 2..=9 {
            for n in 0..=9 {
                assert_eq!(*t.get(ell, n), closed_form_count(ell, n), "ell={ell} n={n}");
            }
        }
    }

    #[test]
    fn partition_closed_form_matches_series() {
        for ell in 2..=7 {
            let lz = log_partition(ell);
            let x = CRITICAL_WEIGHT.ln();
            let mut sum = 0.0;
            let big = 200_000;
            for n in 0..=big {
                sum += (ln_closed_form_count(ell, n) + n as f64 * x - lz).exp();
            }
            // tail decays like n^{-3/2}; bound it with the last term
            let last = (ln_closed_form_count(ell, big) + big as f64 * x - lz).exp();
            let tail = last * big as f64 * 2.0 / 3.0;
            assert!((sum + tail - 1.0).abs() < 1e-4, "ell={ell}: {}", sum + tail);
        }
    }

    #[test]
    fn peeling_probabilities_sum_to_one() {
        for ell in 3..40 {
            let lz = log_partition(ell);
            let mut p = CRITICAL_WEIGHT * (log_partition(ell + 1) - lz).exp();
            for k in 2..ell {
                p += (log_partition(k) + log_partition(ell - k + 1) - lz).exp();
            }
            assert!((p - 1.0).abs() < 1e-10, "ell={ell}: {p}");
        }
        assert!((partition_function(2) - 9.0 / 8.0).abs() < 1e-12);
        assert!((partition_function(3) - 27.0 / 16.0).abs() < 1e-12);
    }
}
