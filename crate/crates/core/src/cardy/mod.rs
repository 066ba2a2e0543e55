//! Cardy embedding of marked triangulations: Monte Carlo crossing
//! frequencies projected to the equilateral triangle, the pushforward of the
//! metric and measures, and the continuum map used as reference.

mod sc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{MarkedTriangulation, MetricMeasureData};
use crate::percolation::{sample_percolation, BoundaryCondition, CrossingFlags, EventSolver};
use crate::rng::stream;

pub use sc::{delta_bary, delta_point, gauss_jacobi, riemann_to_delta, CardyMap, ScMap, ScOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaryCoords {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BaryCoords {
    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
    pub fn distance(&self, other: &BaryCoords) -> f64 {
        let (p, q) = (delta_point(*self), delta_point(*other));
        (p[0] - q[0]).hypot(p[1] - q[1])
    }
}

/// (x,y,z) / (x+y+z), with the origin sent to the barycenter.
pub fn project_to_delta(x: f64, y: f64, z: f64) -> Result<BaryCoords> {
    if !(x >= 0.0 && y >= 0.0 && z >= 0.0) || !(x + y + z).is_finite() {
        return Err(Error::NegativeInput);
    }
    let s = x + y + z;
    if s == 0.0 {
        return Ok(BaryCoords { x: 1.0 / 3.0, y: 1.0 / 3.0, z: 1.0 / 3.0 });
    }
    Ok(BaryCoords { x: x / s, y: y / s, z: z / s })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedMap {
    pub coords: Vec<BaryCoords>,
    /// Event counts (E_a, E_b, E_c) per vertex.
    pub counts: Vec<[u64; 3]>,
    /// Binomial standard errors of the unprojected frequencies.
    pub std_err: Vec<[f64; 3]>,
    pub samples: u64,
    pub seed: u64,
}

impl EmbeddedMap {
    pub fn frequencies(&self, v: usize) -> [f64; 3] {
        let n = self.samples as f64;
        self.counts[v].map(|c| c as f64 / n)
    }
    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }
}

const BATCH: u64 = 1024;

/// Event counts over `samples` independent colorings. One coloring feeds all
/// three events at every vertex. Batches run in parallel on split streams and
/// are summed in batch order, so the result depends only on `seed`.
pub fn crossing_counts(marked: &MarkedTriangulation, samples: u64, seed: u64) -> Vec<[u64; 3]> {
    let map = &marked.map;
    let n = map.num_vertices();
    let batches = samples.div_ceil(BATCH);
    let partial: Vec<Vec<[u64; 3]>> = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, &format!("embed/batch/{k}"));
            let mut solver = EventSolver::new(map);
            let mut flags = CrossingFlags { ea: vec![false; n], eb: vec![false; n], ec: vec![false; n] };
            let mut acc = vec![[0u64; 3]; n];
            let todo = BATCH.min(samples - k * BATCH);
            for _ in 0..todo {
                let c = sample_percolation(map, BoundaryCondition::MonochromaticBlue, &mut rng);
                solver.flags_into(c.colors(), marked.a, marked.b, marked.c, &mut flags);
                for v in 0..n {
                    acc[v][0] += flags.ea[v] as u64;
                    acc[v][1] += flags.eb[v] as u64;
                    acc[v][2] += flags.ec[v] as u64;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![[0u64; 3]; n];
    for p in partial {
        for (t, c) in total.iter_mut().zip(p) {
            for k in 0..3 {
                t[k] += c[k];
            }
        }
    }
    total
}

/// Monte Carlo Cardy embedding with `samples` colorings; the stream seed is
/// drawn from `rng`.
pub fn cardy_embedding<R: Rng + ?Sized>(marked: &MarkedTriangulation, samples: u64, rng: &mut R) -> Result<EmbeddedMap> {
    let seed = rng.random::<u64>();
    embed_with_seed(marked, samples, seed)
}

pub fn embed_with_seed(marked: &MarkedTriangulation, samples: u64, seed: u64) -> Result<EmbeddedMap> {
    if samples == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let counts = crossing_counts(marked, samples, seed);
    Ok(from_counts(counts, samples, seed))
}

pub fn from_counts(counts: Vec<[u64; 3]>, samples: u64, seed: u64) -> EmbeddedMap {
    let n = samples as f64;
    let mut coords = Vec::with_capacity(counts.len());
    let mut std_err = Vec::with_capacity(counts.len());
    for c in &counts {
        let p = c.map(|k| k as f64 / n);
        coords.push(project_to_delta(p[0], p[1], p[2]).expect("frequencies are nonnegative"));
        std_err.push(p.map(|p| (p * (1.0 - p) / n).sqrt()));
    }
    EmbeddedMap { coords, counts, std_err, samples, seed }
}

/// Atom of a measure on the closed triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaAtom {
    pub at: BaryCoords,
    pub mass: f64,
}

/// Metric and measures of a map transported to the triangle along its
/// embedding.
#[derive(Clone, Debug)]
pub struct PushforwardData {
    coords: Vec<BaryCoords>,
    metric: MetricMeasureData,
    pub mu: Vec<DeltaAtom>,
    pub xi: Vec<DeltaAtom>,
}

pub fn pushforward(embedded: &EmbeddedMap, mmd: &MetricMeasureData) -> Result<PushforwardData> {
    if embedded.num_vertices() != mmd.num_vertices() {
        return Err(Error::Invalid("embedding and metric data come from different maps".into()));
    }
    let mu = embedded.coords.iter().map(|&at| DeltaAtom { at, mass: mmd.vertex_mass }).collect();
    let xi = embedded.coords[..mmd.ell].iter().map(|&at| DeltaAtom { at, mass: mmd.boundary_mass }).collect();
    Ok(PushforwardData { coords: embedded.coords.clone(), metric: mmd.clone(), mu, xi })
}

impl PushforwardData {
    /// Vertex whose embedded point is nearest to `x`; ties go to the smaller id.
    pub fn nearest_vertex(&self, x: BaryCoords) -> u32 {
        let mut best = (f64::INFINITY, 0u32);
        for (v, c) in self.coords.iter().enumerate() {
            let d = c.distance(&x);
            if d < best.0 {
                best = (d, v as u32);
            }
        }
        best.1
    }

    pub fn distance(&self, x: BaryCoords, y: BaryCoords) -> f64 {
        self.metric.distance(self.nearest_vertex(x), self.nearest_vertex(y))
    }

    pub fn mu_total(&self) -> f64 {
        self.mu.iter().map(|a| a.mass).sum()
    }
    pub fn xi_total(&self) -> f64 {
        self.xi.iter().map(|a| a.mass).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{metric_measure_data, Triangulation};
    use crate::percolation::{brute_force_probability, event_region, Coloring};

    #[test]
    fn projection_examples() {
        let b = project_to_delta(0.0, 0.0, 0.0).unwrap();
        assert_eq!(b.as_array(), [1.0 / 3.0; 3]);
        assert_eq!(project_to_delta(2.0, 0.0, 0.0).unwrap().as_array(), [1.0, 0.0, 0.0]);
        assert!(matches!(project_to_delta(-1.0, 0.0, 1.0), Err(Error::NegativeInput)));
        assert!(project_to_delta(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn cone_inner_vertex() {
        let m = MarkedTriangulation::new(Triangulation::cone(), 0, 1, 2).unwrap();
        let e = embed_with_seed(&m, 20_000, 5).unwrap();
        // each event holds at the inner vertex iff it is blue
        let exact = brute_force_probability(&m.map, BoundaryCondition::MonochromaticBlue, |c: &Coloring| event_region(&m.map, c, 0, 1, 2)[3]).unwrap();
        assert_eq!(exact, num_rational::Ratio::new(1, 2));
        let f = e.frequencies(3);
        assert_eq!(e.counts[3][0], e.counts[3][1]);
        assert_eq!(e.counts[3][1], e.counts[3][2]);
        assert!((f[0] - 0.5).abs() < 4.0 * e.std_err[3][0]);
        let c = e.coords[3];
        assert!((c.x - 1.0 / 3.0).abs() < 1e-12 && (c.y - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let mut rng = stream(1, "emb");
        let map = crate::map::sample_boltzmann(6, Default::default(), &mut rng).unwrap();
        let m = MarkedTriangulation::spread(map);
        let a = embed_with_seed(&m, 3000, 42).unwrap();
        let b = embed_with_seed(&m, 3000, 42).unwrap();
        assert_eq!(a, b);
        let rot = embed_with_seed(&m.rotated(), 3000, 42).unwrap();
        for v in 0..a.num_vertices() {
            assert_eq!(rot.counts[v], [a.counts[v][1], a.counts[v][2], a.counts[v][0]]);
            let se = a.std_err[v];
            let p = a.frequencies(v);
            for k in 0..3 {
                assert!((se[k] - (p[k] * (1.0 - p[k]) / 3000.0).sqrt()).abs() < 1e-15);
                assert!(se[k] <= 0.5 / 3000f64.sqrt() + 1e-15);
            }
        }
    }

    #[test]
    fn pushforward_conserves_mass() {
        let mut rng = stream(2, "push");
        let map = crate::map::sample_boltzmann(5, Default::default(), &mut rng).unwrap();
        if map.num_inner() == 0 {
            return;
        }
        let m = MarkedTriangulation::spread(map);
        let e = embed_with_seed(&m, 500, 1).unwrap();
        let mmd = metric_measure_data(&m.map).unwrap();
        let p = pushforward(&e, &mmd).unwrap();
        assert!((p.mu_total() - mmd.total_vertex_mass()).abs() < 1e-12);
        assert!((p.xi_total() - 1.0).abs() < 1e-12);
        for v in 0..e.num_vertices() {
            let x = e.coords[v];
            let w = p.nearest_vertex(x);
            assert!(w as usize <= v);
            assert_eq!(p.distance(x, x), 0.0);
        }
    }
}
