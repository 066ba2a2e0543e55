//! Loop flips, ε-pivotal points, arm events and pivotal measures.
//!
//! Every loop whose dual path passes through the cell of v uses an edge at v,
//! and flipping v toggles whether each such edge is bichromatic. So no loop
//! through v survives the flip, loops elsewhere are untouched, and the
//! symmetric difference is the set of loops through v before the flip
//! together with the set of loops through v after it.

mod arms;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::map::Triangulation;
use crate::measure::{Atom, AtomicMeasure, Location};
use crate::percolation::{Color, Coloring, Loop};

pub use arms::{
    arms_by_search, four_arm_probability, four_arm_with_seed, is_a_important, one_step_four_arm, rho_important_set, Alpha4Estimate,
    AnnulusSpec, ArmBox,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifference {
    pub v: u32,
    pub loops_removed: Vec<Loop>,
    pub loops_added: Vec<Loop>,
    pub removed_areas: Vec<f64>,
    pub added_areas: Vec<f64>,
}

impl SymmetricDifference {
    pub fn len(&self) -> usize {
        self.loops_removed.len() + self.loops_added.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn count_at_least(&self, eps: f64) -> usize {
        self.removed_areas.iter().chain(&self.added_areas).filter(|&&a| a >= eps).count()
    }
}

/// Cyclic color sequence of v's neighbors has this many monochromatic runs
/// (0 when all neighbors share one color).
pub fn color_runs(colors: &[Color]) -> usize {
    let k = colors.len();
    (0..k).filter(|&i| colors[i] != colors[(i + 1) % k]).count()
}

/// Reusable buffers for local loop computations on one map.
pub struct Flipper<'a> {
    map: &'a Triangulation,
    blocked: Vec<u32>,
    traced: Vec<u32>,
    seen: Vec<u32>,
    epoch: u32,
}

impl<'a> Flipper<'a> {
    pub fn new(map: &'a Triangulation) -> Self {
        Flipper {
            map,
            blocked: vec![0; map.num_half_edges()],
            traced: vec![0; map.num_half_edges()],
            seen: vec![0; map.num_vertices()],
            epoch: 0,
        }
    }

    fn bump(&mut self) -> u32 {
        if self.epoch == u32::MAX {
            self.blocked.fill(0);
            self.traced.fill(0);
            self.seen.fill(0);
            self.epoch = 0;
        }
        self.epoch += 1;
        self.epoch
    }

    fn neighbor_colors(&self, coloring: &Coloring, v: u32) -> Vec<Color> {
        self.map.out_edges(v).into_iter().map(|g| coloring.color(self.map.dest(g))).collect()
    }

    /// Loops through the cell of v, with v's color taken as `cv`.
    fn loops_through(&mut self, coloring: &Coloring, v: u32, cv: Color) -> Vec<Vec<u32>> {
        let map = self.map;
        let blue = |u: u32| if u == v { cv == Color::Blue } else { coloring.is_blue(u) };
        let ep = self.bump();
        let mut out = Vec::new();
        for g in map.out_edges(v) {
            let u = map.dest(g);
            if blue(u) == blue(v) {
                continue;
            }
            let h = if blue(v) { g } else { map.twin(g) };
            if self.traced[h as usize] == ep {
                continue;
            }
            let mut cyc = vec![h];
            self.traced[h as usize] = ep;
            let mut e = crate::percolation::next_crossing(map, h, blue);
            while e != h {
                self.traced[e as usize] = ep;
                cyc.push(e);
                e = crate::percolation::next_crossing(map, e, blue);
            }
            let k = (0..cyc.len()).min_by_key(|&i| cyc[i]).unwrap();
            cyc.rotate_left(k);
            out.push(cyc);
        }
        out
    }

    /// Explores both sides of a closed dual path. Returns whether the left
    /// side is the enclosed one, and the enclosed vertices (complete unless
    /// `stop_at` mass was reached on both sides first, signalled by `None`).
    fn enclosed(&mut self, cyc: &[u32], measure: &[f64], stop_at: f64) -> (bool, Option<Vec<u32>>) {
        let map = self.map;
        let ell = map.boundary_len() as u32;
        let ep = self.bump();
        for &h in cyc {
            self.blocked[h as usize] = ep;
            self.blocked[map.twin(h) as usize] = ep;
        }
        let mut queues: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        let mut members: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        let mut mass = [0.0f64; 2];
        let mut outside = [false; 2];
        for &h in cyc {
            for (s, u) in [(0usize, map.dest(h)), (1usize, map.origin(h))] {
                if self.seen[u as usize] != ep {
                    self.seen[u as usize] = ep;
                    queues[s].push(u);
                    members[s].push(u);
                    mass[s] += measure[u as usize];
                    outside[s] |= u < ell;
                }
            }
        }
        let mut idx = [0usize; 2];
        loop {
            let known = outside[0] || outside[1];
            for s in 0..2 {
                if known && outside[s] {
                    continue;
                }
                if idx[s] == queues[s].len() {
                    if !outside[s] {
                        return (s == 0, Some(std::mem::take(&mut members[s])));
                    }
                    continue;
                }
                let u = queues[s][idx[s]];
                idx[s] += 1;
                for g in map.out_edges(u) {
                    if self.blocked[g as usize] == ep {
                        continue;
                    }
                    let w = map.dest(g);
                    if self.seen[w as usize] != ep {
                        self.seen[w as usize] = ep;
                        queues[s].push(w);
                        members[s].push(w);
                        mass[s] += measure[w as usize];
                        outside[s] |= w < ell;
                    }
                }
            }
            debug_assert!(!(outside[0] && outside[1]), "both sides of a loop reach the boundary");
            if outside[0] || outside[1] {
                let inside = if outside[0] { 1 } else { 0 };
                if mass[inside] >= stop_at {
                    return (inside == 0, None);
                }
            } else if mass[0] >= stop_at && mass[1] >= stop_at {
                return (false, None);
            }
        }
    }

    fn to_loop(&mut self, coloring: &Coloring, v: u32, cv: Color, cyc: Vec<u32>, measure: &[f64]) -> (Loop, f64) {
        let (left, region) = self.enclosed(&cyc, measure, f64::INFINITY);
        let mut region = region.expect("full exploration");
        region.sort_unstable();
        let probe = if left { self.map.dest(cyc[0]) } else { self.map.origin(cyc[0]) };
        let color = if probe == v { cv } else { coloring.color(probe) };
        let area = region.iter().map(|&u| measure[u as usize]).sum();
        (Loop { half_edges: cyc, color, region }, area)
    }

    pub fn symmetric_difference(&mut self, coloring: &Coloring, v: u32, measure: &[f64]) -> Result<SymmetricDifference> {
        check(self.map, coloring, v)?;
        let before = coloring.color(v);
        let after = before.flip();
        let old = self.loops_through(coloring, v, before);
        let new = self.loops_through(coloring, v, after);
        let (mut loops_removed, mut removed_areas) = (Vec::new(), Vec::new());
        for c in old {
            let (l, a) = self.to_loop(coloring, v, before, c, measure);
            loops_removed.push(l);
            removed_areas.push(a);
        }
        let (mut loops_added, mut added_areas) = (Vec::new(), Vec::new());
        for c in new {
            let (l, a) = self.to_loop(coloring, v, after, c, measure);
            loops_added.push(l);
            added_areas.push(a);
        }
        Ok(SymmetricDifference { v, loops_removed, loops_added, removed_areas, added_areas })
    }

    /// Number of loops of area at least `eps` changed by flipping v, capped
    /// once it reaches `cap`.
    pub fn count_large(&mut self, coloring: &Coloring, v: u32, eps: f64, measure: &[f64], cap: usize) -> Result<usize> {
        check(self.map, coloring, v)?;
        let before = coloring.color(v);
        let runs = color_runs(&self.neighbor_colors(coloring, v));
        if runs == 0 {
            // only the new loop around v itself
            return Ok((measure[v as usize] >= eps) as usize);
        }
        let mut count = 0;
        for cv in [before, before.flip()] {
            for c in self.loops_through(coloring, v, cv) {
                let (_, region) = self.enclosed(&c, measure, eps);
                let large = match region {
                    None => true,
                    Some(r) => r.iter().map(|&u| measure[u as usize]).sum::<f64>() >= eps,
                };
                count += large as usize;
                if count >= cap {
                    return Ok(count);
                }
            }
        }
        Ok(count)
    }

    pub fn is_eps_pivotal(&mut self, coloring: &Coloring, v: u32, eps: f64, measure: &[f64]) -> Result<bool> {
        check(self.map, coloring, v)?;
        // two runs or fewer change at most two loops
        if color_runs(&self.neighbor_colors(coloring, v)) < 4 {
            return Ok(false);
        }
        Ok(self.count_large(coloring, v, eps, measure, 3)? >= 3)
    }
}

fn check(map: &Triangulation, coloring: &Coloring, v: u32) -> Result<()> {
    if (v as usize) < map.boundary_len() {
        return Err(Error::BoundaryVertex);
    }
    if (v as usize) >= map.num_vertices() {
        return Err(Error::UnknownVertex);
    }
    let ell = map.boundary_len() as u32;
    if (0..ell).any(|u| coloring.color(u) != coloring.color(0)) {
        return Err(Error::BoundaryConditionMismatch);
    }
    Ok(())
}

pub fn loop_symmetric_difference(map: &Triangulation, coloring: &Coloring, v: u32, measure: &[f64]) -> Result<SymmetricDifference> {
    Flipper::new(map).symmetric_difference(coloring, v, measure)
}

/// At least three loops of area ≥ ε change when v is flipped.
pub fn is_eps_pivotal(map: &Triangulation, coloring: &Coloring, v: u32, eps: f64, measure: &[f64]) -> Result<bool> {
    Flipper::new(map).is_eps_pivotal(coloring, v, eps, measure)
}

/// All ε-pivotal inner vertices, ascending.
pub fn eps_pivotal_set(map: &Triangulation, coloring: &Coloring, eps: f64, measure: &[f64]) -> Result<Vec<u32>> {
    let mut f = Flipper::new(map);
    let mut out = Vec::new();
    for v in map.boundary_len() as u32..map.num_vertices() as u32 {
        if f.is_eps_pivotal(coloring, v, eps, measure)? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Hexagon area on every vertex of a lattice domain.
pub fn lebesgue_weights(domain: &LatticeDomain) -> Vec<f64> {
    vec![domain.hexagon_area(); domain.num_vertices()]
}

/// Discrete pivotal measure with the normalization it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotalMeasure {
    pub measure: AtomicMeasure,
    pub eps: f64,
    pub count: usize,
    pub alpha4: Option<Alpha4Estimate>,
}

/// Mass n^{−1/4} on every ε-pivotal vertex, n the number of inner vertices.
pub fn pivotal_measure_map(map: &Triangulation, coloring: &Coloring, eps: f64, measure: &[f64]) -> Result<PivotalMeasure> {
    let piv = eps_pivotal_set(map, coloring, eps, measure)?;
    let mass = (map.num_inner() as f64).powf(-0.25);
    let atoms = piv.iter().map(|&v| Atom { at: Location::Vertex(v), mass }).collect();
    Ok(PivotalMeasure { measure: AtomicMeasure { atoms }, eps, count: piv.len(), alpha4: None })
}

/// Mass α̂₄⁻¹ · (hexagon area) on every ε-pivotal vertex, loop areas in
/// Lebesgue measure.
pub fn pivotal_measure_lattice(domain: &LatticeDomain, coloring: &Coloring, eps: f64, alpha4: &Alpha4Estimate) -> Result<PivotalMeasure> {
    if !(alpha4.value > 0.0) {
        return Err(Error::Invalid("four-arm estimate must be positive".into()));
    }
    let map = domain.to_triangulation();
    let piv = eps_pivotal_set(&map, coloring, eps, &lebesgue_weights(domain))?;
    let mass = domain.hexagon_area() / alpha4.value;
    let atoms = piv.iter().map(|&v| Atom { at: Location::Vertex(v), mass }).collect();
    Ok(PivotalMeasure { measure: AtomicMeasure { atoms }, eps, count: piv.len(), alpha4: Some(alpha4.clone()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{enumerate_triangulations, sample_boltzmann, BoltzmannOptions};
    use crate::percolation::{loop_ensemble, sample_percolation, BoundaryCondition};
    use crate::rng::stream;
    use rand::Rng;

    const BLUE: BoundaryCondition = BoundaryCondition::MonochromaticBlue;

    fn full_difference(map: &Triangulation, c: &Coloring, v: u32) -> (Vec<Loop>, Vec<Loop>) {
        let a = loop_ensemble(map, c).unwrap().loops;
        let b = loop_ensemble(map, &c.flipped(v).unwrap()).unwrap().loops;
        let removed = a.iter().filter(|l| !b.contains(l)).cloned().collect();
        let added = b.iter().filter(|l| !a.contains(l)).cloned().collect();
        (removed, added)
    }

    fn sorted(mut v: Vec<Loop>) -> Vec<Loop> {
        v.sort_by_key(|l| l.half_edges[0]);
        v
    }

    #[test]
    fn local_difference_matches_recomputation() {
        let mut rng = stream(21, "symdiff");
        for _ in 0..150 {
            let Ok(m) = sample_boltzmann(6, BoltzmannOptions { vertex_budget: 400 }, &mut rng) else { continue };
            if m.num_inner() == 0 {
                continue;
            }
            let c = sample_percolation(&m, if rng.random() { BLUE } else { BoundaryCondition::MonochromaticRed }, &mut rng);
            let w = vec![1.0; m.num_vertices()];
            let mut f = Flipper::new(&m);
            for v in m.boundary_len() as u32..m.num_vertices() as u32 {
                let d = f.symmetric_difference(&c, v, &w).unwrap();
                let (r, a) = full_difference(&m, &c, v);
                assert_eq!(sorted(d.loops_removed.clone()), sorted(r));
                assert_eq!(sorted(d.loops_added.clone()), sorted(a));
                for (l, &ar) in d.loops_added.iter().zip(&d.added_areas) {
                    assert_eq!(ar, l.region.len() as f64);
                    assert!(l.half_edges.iter().any(|&h| m.origin(h) == v || m.dest(h) == v));
                }
                let again = f.symmetric_difference(&c.flipped(v).unwrap(), v, &w).unwrap();
                assert_eq!(again.loops_removed, d.loops_added);
                assert_eq!(again.loops_added, d.loops_removed);
                let runs = color_runs(&f.neighbor_colors(&c, v));
                if runs <= 2 {
                    assert_eq!(d.len(), if runs == 0 { 1 } else { 2 });
                }
                for eps in [0.0, 1.0, 2.0, 5.0] {
                    let cnt = f.count_large(&c, v, eps, &w, usize::MAX).unwrap();
                    assert_eq!(cnt, d.count_at_least(eps));
                    assert_eq!(f.is_eps_pivotal(&c, v, eps, &w).unwrap(), cnt >= 3);
                }
            }
        }
    }

    #[test]
    fn monochromatic_neighborhood_flip() {
        let d = LatticeDomain::build(&crate::lattice::Shape::unit_disk(), 0.2, Default::default()).unwrap();
        let m = d.to_triangulation();
        let c = Coloring::uniform(&d, Color::Blue, BLUE);
        let center = d.id(crate::lattice::LatticePoint::new(0, 0)).unwrap();
        let diff = loop_symmetric_difference(&m, &c, center, &lebesgue_weights(&d)).unwrap();
        // a new singleton loop; the enclosing cluster's loop is unchanged
        assert_eq!(diff.loops_removed.len(), 0);
        assert_eq!(diff.loops_added.len(), 1);
        assert_eq!(diff.loops_added[0].region, vec![center]);
        assert_eq!(diff.loops_added[0].color, Color::Red);
        let back = loop_symmetric_difference(&m, &c.flipped(center).unwrap(), center, &lebesgue_weights(&d)).unwrap();
        assert_eq!(back.loops_removed, diff.loops_added);
        assert!(back.loops_added.is_empty());
    }

    #[test]
    fn cone_pivotality() {
        let m = Triangulation::cone();
        let w = vec![1.0; 4];
        for key in 0..2 {
            let c = Coloring::from_key(&m, key, BLUE);
            let d = loop_symmetric_difference(&m, &c, 3, &w).unwrap();
            assert_eq!(d.len(), 1);
            for eps in [0.0, 0.5, 1.0, 2.0] {
                assert!(!is_eps_pivotal(&m, &c, 3, eps, &w).unwrap());
            }
        }
        assert!(matches!(is_eps_pivotal(&m, &Coloring::uniform(&m, Color::Red, BLUE), 0, 0.0, &w), Err(Error::BoundaryVertex)));
    }

    #[test]
    fn thresholds() {
        for m in enumerate_triangulations(4, 3, 8).unwrap() {
            let w = vec![0.25; m.num_vertices()];
            for key in 0..8 {
                let c = Coloring::from_key(&m, key, BLUE);
                for v in 4..7 {
                    let d = loop_symmetric_difference(&m, &c, v, &w).unwrap();
                    assert_eq!(is_eps_pivotal(&m, &c, v, 0.0, &w).unwrap(), d.len() >= 3);
                    assert!(!is_eps_pivotal(&m, &c, v, 100.0, &w).unwrap());
                }
            }
        }
    }

    #[test]
    fn map_measure_mass() {
        let mut rng = stream(5, "pm");
        let m = sample_boltzmann(8, BoltzmannOptions { vertex_budget: 2000 }, &mut rng).unwrap();
        let c = sample_percolation(&m, BLUE, &mut rng);
        let w = vec![1.0; m.num_vertices()];
        let p = pivotal_measure_map(&m, &c, 0.0, &w).unwrap();
        let n = m.num_inner() as f64;
        assert!((p.measure.total() - n.powf(-0.25) * p.count as f64).abs() < 1e-12);
        let big = pivotal_measure_map(&m, &c, 1e9, &w).unwrap();
        assert_eq!(big.measure.total(), 0.0);
    }
}
