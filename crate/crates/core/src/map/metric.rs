use std::collections::VecDeque;

use serde::Serialize;

use super::Triangulation;
use crate::error::{Error, Result};

/// Graph distances with the scalings d = (3n/4)^{-1/4}·d_gr, μ = (2n)^{-1}·counting
/// and ξ = ℓ^{-1}·counting on the boundary.
#[derive(Clone, Debug, Serialize)]
pub struct MetricMeasureData {
    pub n: usize,
    pub ell: usize,
    pub distance_scale: f64,
    pub vertex_mass: f64,
    pub boundary_mass: f64,
    raw: Vec<Vec<u32>>,
}

impl MetricMeasureData {
    pub fn raw(&self, u: u32, v: u32) -> u32 {
        self.raw[u as usize][v as usize]
    }
    pub fn distance(&self, u: u32, v: u32) -> f64 {
        self.distance_scale * self.raw(u, v) as f64
    }
    pub fn num_vertices(&self) -> usize {
        self.raw.len()
    }
    pub fn total_vertex_mass(&self) -> f64 {
        self.vertex_mass * self.raw.len() as f64
    }
    pub fn total_boundary_mass(&self) -> f64 {
        self.boundary_mass * self.ell as f64
    }
}

pub fn bfs_distances(map: &Triangulation, source: u32) -> Vec<u32> {
    let n = map.num_vertices();
    let mut dist = vec![u32::MAX; n];
    let mut q = VecDeque::new();
    dist[source as usize] = 0;
    q.push_back(source);
    while let Some(v) = q.pop_front() {
        for w in map.neighbors(v) {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[v as usize] + 1;
                q.push_back(w);
            }
        }
    }
    dist
}

pub fn raw_distances(map: &Triangulation) -> Vec<Vec<u32>> {
    (0..map.num_vertices() as u32).map(|s| bfs_distances(map, s)).collect()
}

pub fn metric_measure_data(map: &Triangulation) -> Result<MetricMeasureData> {
    let n = map.num_inner();
    if n == 0 {
        return Err(Error::ZeroInnerVertices);
    }
    Ok(MetricMeasureData {
        n,
        ell: map.boundary_len(),
        distance_scale: (3.0 * n as f64 / 4.0).powf(-0.25),
        vertex_mass: 1.0 / (2.0 * n as f64),
        boundary_mass: 1.0 / map.boundary_len() as f64,
        raw: raw_distances(map),
    })
}
