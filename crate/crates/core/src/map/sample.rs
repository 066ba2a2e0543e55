use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use super::count::{ln_closed_form_count, log_partition, CountTable, CRITICAL_WEIGHT};
use super::{Builder, MarkedTriangulation, Step, Triangulation};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BoltzmannOptions {
    /// Maximum number of inner vertices before the sample is abandoned.
    pub vertex_budget: usize,
}

impl Default for BoltzmannOptions {
    fn default() -> Self {
        BoltzmannOptions { vertex_budget: 1_000_000 }
    }
}

/// Probability under Bol₂(ℓ) that a map has more than `n_max` inner vertices.
pub fn boltzmann_tail(ell: usize, n_max: usize) -> f64 {
    let lz = log_partition(ell);
    let lx = CRITICAL_WEIGHT.ln();
    let term = |k: usize| (ln_closed_form_count(ell, k) + k as f64 * lx - lz).exp();
    let end = 4 * n_max + 64;
    let mut s = 0.0;
    for k in n_max + 1..=end {
        s += term(k);
    }
    s + term(end) * end as f64 * 2.0 / 3.0
}

/// Exact sample from Bol₂(ℓ) by peeling the root triangle of each open hole
/// with probabilities given by the closed-form partition function.
pub fn sample_boltzmann<R: Rng + ?Sized>(ell: usize, opts: BoltzmannOptions, rng: &mut R) -> Result<Triangulation> {
    if ell < 3 {
        return Err(Error::Invalid("boundary length must be at least 3".into()));
    }
    let mut b = Builder::new(ell);
    let mut lz_cache: Vec<f64> = (0..ell + 8).map(|l| if l >= 2 { log_partition(l) } else { 0.0 }).collect();
    while let Some(len) = b.top_len() {
        if b.inner_vertices() >= opts.vertex_budget {
            return Err(Error::TailCutoffExceeded {
                budget: opts.vertex_budget,
                residual: boltzmann_tail(ell, opts.vertex_budget),
            });
        }
        while lz_cache.len() <= len + 1 {
            let l = lz_cache.len();
            lz_cache.push(log_partition(l));
        }
        let u: f64 = rng.random();
        if len == 2 {
            b.apply(if u < 8.0 / 9.0 { Step::Degenerate } else { Step::Inner });
            continue;
        }
        let m = (len - 2) as f64;
        let p_inner = (2.0 * m + 1.0) / (3.0 * (m + 3.0));
        if u < p_inner {
            b.apply(Step::Inner);
            continue;
        }
        let lz = lz_cache[len];
        let mut acc = p_inner;
        let mut chosen = len - 1;
        for k in 2..len {
            acc += (lz_cache[k] + lz_cache[len - k + 1] - lz).exp();
            if u < acc {
                chosen = k;
                break;
            }
        }
        b.apply(Step::Split { k: chosen as u32 });
    }
    Ok(b.finish())
}

fn random_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits % 32 == 0 { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= top_mask;
        }
        let x = BigUint::new(digits);
        if &x < bound {
            return x;
        }
    }
}

/// Uniform sample among rooted triangulations with the given (ℓ, n), guided by exact counts.
pub fn sample_uniform<R: Rng + ?Sized>(ell: usize, n: usize, table: &CountTable, rng: &mut R) -> Result<Triangulation> {
    if table.try_get(ell, n).map_or(true, |c| c.is_zero()) {
        return Err(Error::Invalid(format!("no triangulation or table too small for ({ell}, {n})")));
    }
    let mut b = Builder::new(ell);
    let mut budget = vec![n];
    while let Some(len) = b.top_len() {
        let n = budget.pop().unwrap();
        if len == 2 && n == 0 {
            b.apply(Step::Degenerate);
            continue;
        }
        let mut r = random_below(table.get(len, n), rng);
        if n >= 1 {
            let c = table.get(len + 1, n - 1);
            if &r < c {
                b.apply(Step::Inner);
                budget.push(n - 1);
                continue;
            }
            r -= c;
        }
        let mut done = false;
        'outer: for k in 2..len {
            for n1 in 0..=n {
                let c = table.get(k, n1) * table.get(len - k + 1, n - n1);
                if r < c {
                    b.apply(Step::Split { k: k as u32 });
                    budget.push(n - n1);
                    budget.push(n1);
                    done = true;
                    break 'outer;
                }
                r -= c;
            }
        }
        assert!(done, "count table inconsistent");
    }
    Ok(b.finish())
}

/// Boltzmann sample via the count table: draw n from the truncated weights
/// T(ℓ,k)(2/27)^k, k ≤ n_max, then sample uniformly. Returns the map and the
/// discarded tail mass.
pub fn sample_boltzmann_table<R: Rng + ?Sized>(
    ell: usize,
    table: &CountTable,
    rng: &mut R,
) -> Result<(Triangulation, f64)> {
    let n_max = table.n_max();
    let weights: Vec<f64> = (0..=n_max)
        .map(|k| table.get(ell, k).to_f64().unwrap() * CRITICAL_WEIGHT.powi(k as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut n = n_max;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            n = k;
            break;
        }
        u -= w;
    }
    let m = sample_uniform(ell, n, table, rng)?;
    Ok((m, boltzmann_tail(ell, n_max)))
}

/// Marks a = root edge and draws (b, c) uniformly among counterclockwise pairs.
pub fn sample_marked_edges<R: Rng + ?Sized>(map: Triangulation, rng: &mut R) -> Result<MarkedTriangulation> {
    let ell = map.boundary_len();
    if ell < 3 {
        return Err(Error::Invalid("boundary length must be at least 3".into()));
    }
    let pairs = (ell - 1) * (ell - 2) / 2;
    let mut idx = rng.random_range(0..pairs);
    for b in 1..ell - 1 {
        let row = ell - 1 - b;
        if idx < row {
            let c = b + 1 + idx;
            return MarkedTriangulation::new(map, 0, b, c);
        }
        idx -= row;
    }
    unreachable!()
}
