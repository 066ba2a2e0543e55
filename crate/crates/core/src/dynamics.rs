//! Clock-driven dynamical percolation, its ε-cutoff variant, and the exact
//! rate matrix on tiny maps.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::Triangulation;
use crate::measure::{AtomicMeasure, Location};
use crate::percolation::{BoundaryCondition, Coloring};
use crate::pivotal::Flipper;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynEvent {
    pub t: f64,
    pub v: u32,
    pub applied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DynMode {
    Full,
    Cutoff { eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynTrajectory {
    pub initial: Coloring,
    pub events: Vec<DynEvent>,
    pub horizon: f64,
    pub mode: DynMode,
    pub rate_source: String,
    pub total_rate: f64,
}

impl DynTrajectory {
    /// Coloring after all applied events with t ≤ `t`.
    pub fn state_at(&self, t: f64) -> Coloring {
        let mut c = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.t <= t) {
            if e.applied {
                c.flip_in_place(e.v);
            }
        }
        c
    }

    pub fn final_coloring(&self) -> Coloring {
        self.state_at(f64::INFINITY)
    }

    pub fn applied_count(&self) -> usize {
        self.events.iter().filter(|e| e.applied).count()
    }
}

/// Per-vertex rates from a measure on inner vertices.
pub fn rate_vector(rates: &AtomicMeasure, n: usize, ell: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    for a in &rates.atoms {
        let Location::Vertex(v) = a.at else {
            return Err(Error::Invalid("clock rates must sit on vertices".into()));
        };
        if v as usize >= n {
            return Err(Error::UnknownVertex);
        }
        if (v as usize) < ell {
            return Err(Error::BoundaryVertex);
        }
        if !(a.mass >= 0.0 && a.mass.is_finite()) {
            return Err(Error::Invalid("clock rates must be finite and nonnegative".into()));
        }
        out[v as usize] += a.mass;
    }
    Ok(out)
}

/// Constant rate on every inner vertex.
pub fn uniform_rates(n: usize, ell: usize, rate: f64) -> AtomicMeasure {
    let mut m = vec![rate; n];
    m[..ell].fill(0.0);
    let mut a = AtomicMeasure::on_vertices(&m);
    a.atoms.drain(..ell);
    a
}

fn simulate<R, F>(initial: &Coloring, rates: &AtomicMeasure, horizon: f64, mode: DynMode, rng: &mut R, mut accept: F) -> Result<DynTrajectory>
where
    R: Rng + ?Sized,
    F: FnMut(&Coloring, u32) -> Result<bool>,
{
    if !(horizon >= 0.0) {
        return Err(Error::Invalid("horizon must be nonnegative".into()));
    }
    let r = rate_vector(rates, initial.len(), initial.boundary_len())?;
    let total: f64 = r.iter().sum();
    let mut traj = DynTrajectory {
        initial: initial.clone(),
        events: Vec::new(),
        horizon,
        mode,
        rate_source: format!("atomic:{}", rates.len()),
        total_rate: total,
    };
    if total <= 0.0 {
        return Err(Error::ZeroTotalRate(Box::new(traj)));
    }
    let pick = WeightedIndex::new(&r).map_err(|e| Error::Invalid(e.to_string()))?;
    let wait = Exp::new(total).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut state = initial.clone();
    let mut t = 0.0;
    loop {
        t += wait.sample(rng);
        if t > horizon {
            break;
        }
        let v = pick.sample(rng) as u32;
        let applied = accept(&state, v)?;
        if applied {
            state.flip_in_place(v);
        }
        traj.events.push(DynEvent { t, v, applied });
    }
    Ok(traj)
}

/// Independent exponential clocks; every ring flips its vertex.
pub fn run_dynamics<R: Rng + ?Sized>(initial: &Coloring, rates: &AtomicMeasure, horizon: f64, rng: &mut R) -> Result<DynTrajectory> {
    simulate(initial, rates, horizon, DynMode::Full, rng, |_, _| Ok(true))
}

/// Same clocks; a ring at v flips it only if v is ε-pivotal just before the ring.
pub fn run_eps_cutoff<R: Rng + ?Sized>(
    map: &Triangulation,
    initial: &Coloring,
    rates: &AtomicMeasure,
    eps: f64,
    area_measure: &[f64],
    horizon: f64,
    rng: &mut R,
) -> Result<DynTrajectory> {
    if initial.len() != map.num_vertices() || area_measure.len() != map.num_vertices() {
        return Err(Error::Invalid("coloring or area measure does not match the map".into()));
    }
    let mut flipper = Flipper::new(map);
    simulate(initial, rates, horizon, DynMode::Cutoff { eps }, rng, |c, v| flipper.is_eps_pivotal(c, v, eps, area_measure))
}

pub const MAX_CTMC_INNER: usize = 12;

/// Generator over all inner colorings, state index = coloring key.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    pub q: DMatrix<f64>,
    pub exit: Vec<f64>,
    pub boundary: BoundaryCondition,
}

impl RateMatrix {
    pub fn num_states(&self) -> usize {
        self.exit.len()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.num_states();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.q[(i, j)] - self.q[(j, i)]).abs());
            }
        }
        m
    }

    /// max_j |(u·Q)_j| for the uniform vector u.
    pub fn uniform_residual(&self) -> f64 {
        let n = self.num_states();
        let u = 1.0 / n as f64;
        (0..n).map(|j| (self.q.column(j).sum() * u).abs()).fold(0.0, f64::max)
    }
}

pub fn build_exact_ctmc(map: &Triangulation, boundary: BoundaryCondition, eps: f64, area_measure: &[f64], rates: &[f64]) -> Result<RateMatrix> {
    let ell = map.boundary_len();
    let k = map.num_inner();
    if k > MAX_CTMC_INNER {
        return Err(Error::TooManyStates { k, max: MAX_CTMC_INNER });
    }
    if rates.len() != map.num_vertices() || area_measure.len() != map.num_vertices() {
        return Err(Error::Invalid("rates or area measure do not match the map".into()));
    }
    let n = 1usize << k;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || Flipper::new(map),
            |fl, i| {
                let c = Coloring::from_key(map, i as u64, boundary);
                let mut row = Vec::new();
                for b in 0..k {
                    let v = (ell + b) as u32;
                    if rates[v as usize] > 0.0 && fl.is_eps_pivotal(&c, v, eps, area_measure)? {
                        row.push((i ^ (1 << b), rates[v as usize]));
                    }
                }
                Ok(row)
            },
        )
        .collect::<Result<_>>()?;
    let mut q = DMatrix::zeros(n, n);
    let mut exit = vec![0.0; n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, r) in row {
            q[(i, j)] = r;
            exit[i] += r;
        }
        q[(i, i)] = -exit[i];
    }
    Ok(RateMatrix { q, exit, boundary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpSkeleton {
    /// Zero rows at absorbing states.
    pub p: DMatrix<f64>,
    pub holding: Vec<f64>,
    pub absorbing: Vec<usize>,
}

impl JumpSkeleton {
    /// max_j |(w·P)_j − w_j| for w = u·diag(N).
    pub fn reweighted_residual(&self) -> f64 {
        let n = self.holding.len();
        let w: Vec<f64> = self.holding.iter().map(|x| x / n as f64).collect();
        (0..n)
            .map(|j| {
                let s: f64 = (0..n).map(|i| w[i] * self.p[(i, j)]).sum();
                (s - w[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn jump_skeleton(q: &RateMatrix) -> JumpSkeleton {
    let n = q.num_states();
    let mut p = DMatrix::zeros(n, n);
    let mut absorbing = Vec::new();
    for i in 0..n {
        let ni = q.exit[i];
        if ni <= 0.0 {
            absorbing.push(i);
            continue;
        }
        for j in 0..n {
            if j != i && q.q[(i, j)] > 0.0 {
                p[(i, j)] = q.q[(i, j)] / ni;
            }
        }
    }
    JumpSkeleton { p, holding: q.exit.clone(), absorbing }
}
