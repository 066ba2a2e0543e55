use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, Color, Coloring};
use crate::error::{Error, Result};
use crate::map::Triangulation;

const NONE: u32 = u32::MAX;

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = parent[x as usize];
    }
    x
}

/// Monochromatic clusters and their adjacency tree rooted at the cluster of vertex 0.
#[derive(Clone, Debug)]
pub struct Clusters {
    /// Cluster id per vertex; ids are ordered by smallest member.
    pub label: Vec<u32>,
    pub color: Vec<Color>,
    pub parent: Vec<u32>,
    pub depth: Vec<u32>,
}

impl Clusters {
    pub fn len(&self) -> usize {
        self.color.len()
    }
    pub fn is_empty(&self) -> bool {
        self.color.is_empty()
    }
}

pub fn clusters(map: &Triangulation, coloring: &Coloring) -> Clusters {
    let n = map.num_vertices();
    let mut uf: Vec<u32> = (0..n as u32).collect();
    for h in 0..map.num_half_edges() as u32 {
        let t = map.twin(h);
        if h < t {
            let (u, w) = (map.origin(h), map.dest(h));
            if coloring.color(u) == coloring.color(w) {
                let (ru, rw) = (find(&mut uf, u), find(&mut uf, w));
                if ru != rw {
                    uf[ru.max(rw) as usize] = ru.min(rw);
                }
            }
        }
    }
    let mut label = vec![NONE; n];
    let mut color = Vec::new();
    for v in 0..n as u32 {
        let r = find(&mut uf, v);
        if label[r as usize] == NONE {
            label[r as usize] = color.len() as u32;
            color.push(coloring.color(v));
        }
        label[v as usize] = label[r as usize];
    }
    let k = color.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); k];
    for h in 0..map.num_half_edges() as u32 {
        let (a, b) = (label[map.origin(h) as usize], label[map.dest(h) as usize]);
        if a != b {
            adj[a as usize].push(b);
        }
    }
    let mut parent = vec![NONE; k];
    let mut depth = vec![NONE; k];
    depth[0] = 0;
    let mut q = VecDeque::from([0u32]);
    while let Some(c) = q.pop_front() {
        for &d in &adj[c as usize] {
            if depth[d as usize] == NONE {
                depth[d as usize] = depth[c as usize] + 1;
                parent[d as usize] = c;
                q.push_back(d);
            }
        }
    }
    Clusters { label, color, parent, depth }
}

/// An oriented dual loop, stored as the primal half-edges it crosses (each
/// running from its blue endpoint to its red endpoint, so red lies on the
/// left of the loop), starting from the smallest id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    pub half_edges: Vec<u32>,
    /// Color of the enclosed cluster.
    pub color: Color,
    /// Enclosed vertices (cluster plus everything it surrounds), sorted.
    pub region: Vec<u32>,
}

impl Loop {
    pub fn area(&self, measure: &[f64]) -> f64 {
        self.region.iter().map(|&v| measure[v as usize]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopEnsemble {
    pub loops: Vec<Loop>,
    pub boundary_color: Color,
}

impl LoopEnsemble {
    pub fn len(&self) -> usize {
        self.loops.len()
    }
    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }
    pub fn areas(&self, measure: &[f64]) -> Vec<f64> {
        self.loops.iter().map(|l| l.area(measure)).collect()
    }
}

/// Next crossing after `h` when the exploration enters `face(twin(h))`.
#[inline]
pub(crate) fn next_crossing(map: &Triangulation, h: u32, is_blue: impl Fn(u32) -> bool) -> u32 {
    let g1 = map.next(map.twin(h));
    if is_blue(map.dest(g1)) {
        map.next(g1)
    } else {
        g1
    }
}

pub(crate) fn trace_loop(map: &Triangulation, coloring: &Coloring, start: u32) -> Vec<u32> {
    let mut out = vec![start];
    let mut h = next_crossing(map, start, |v| coloring.is_blue(v));
    while h != start {
        out.push(h);
        h = next_crossing(map, h, |v| coloring.is_blue(v));
    }
    let k = (0..out.len()).min_by_key(|&i| out[i]).unwrap();
    out.rotate_left(k);
    out
}

/// The loop ensemble of a coloring whose boundary is monochromatic: one loop
/// around each non-boundary cluster, separating it from the complementary
/// component that contains the boundary.
pub fn loop_ensemble(map: &Triangulation, coloring: &Coloring) -> Result<LoopEnsemble> {
    let ell = map.boundary_len();
    let bc = coloring.color(0);
    if (0..ell as u32).any(|v| coloring.color(v) != bc) {
        return Err(Error::BoundaryConditionMismatch);
    }
    let cl = clusters(map, coloring);
    let k = cl.len();
    let mut first = vec![NONE; k];
    for h in 0..map.num_half_edges() as u32 {
        let (u, w) = (map.origin(h), map.dest(h));
        if coloring.is_blue(u) && !coloring.is_blue(w) {
            let (cu, cw) = (cl.label[u as usize], cl.label[w as usize]);
            let child = if cl.depth[cu as usize] > cl.depth[cw as usize] { cu } else { cw };
            if first[child as usize] == NONE {
                first[child as usize] = h;
            }
        }
    }
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); k];
    for c in 1..k {
        children[cl.parent[c] as usize].push(c as u32);
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for v in 0..map.num_vertices() as u32 {
        members[cl.label[v as usize] as usize].push(v);
    }
    let mut loops = Vec::with_capacity(k.saturating_sub(1));
    for c in 1..k {
        let mut region = Vec::new();
        let mut stack = vec![c as u32];
        while let Some(d) = stack.pop() {
            region.extend_from_slice(&members[d as usize]);
            stack.extend_from_slice(&children[d as usize]);
        }
        region.sort_unstable();
        loops.push(Loop { half_edges: trace_loop(map, coloring, first[c]), color: cl.color[c], region });
    }
    loops.sort_by_key(|l| l.half_edges[0]);
    Ok(LoopEnsemble { loops, boundary_color: bc })
}

/// Reconstructs the coloring from its loops: colors propagate from the
/// boundary and change exactly across crossed edges.
pub fn coloring_from_loops(map: &Triangulation, loops: &LoopEnsemble, boundary_color: Color) -> Result<Coloring> {
    let m = map.num_half_edges();
    let mut crossed = vec![false; m];
    for l in &loops.loops {
        if l.half_edges.is_empty() {
            return Err(Error::InconsistentLoops("empty loop".into()));
        }
        for &h in &l.half_edges {
            if h as usize >= m {
                return Err(Error::InconsistentLoops(format!("half-edge {h} out of range")));
            }
            if crossed[h as usize] || crossed[map.twin(h) as usize] {
                return Err(Error::InconsistentLoops(format!("edge of half-edge {h} crossed twice")));
            }
            crossed[h as usize] = true;
        }
    }
    let n = map.num_vertices();
    let mut color: Vec<Option<Color>> = vec![None; n];
    let mut q = VecDeque::new();
    for v in 0..map.boundary_len() {
        color[v] = Some(boundary_color);
        q.push_back(v as u32);
    }
    while let Some(u) = q.pop_front() {
        let cu = color[u as usize].unwrap();
        for g in map.out_edges(u) {
            let w = map.dest(g);
            let want = if crossed[g as usize] {
                if cu != Color::Blue {
                    return Err(Error::InconsistentLoops(format!("half-edge {g} starts at a red vertex")));
                }
                Color::Red
            } else if crossed[map.twin(g) as usize] {
                if cu != Color::Red {
                    return Err(Error::InconsistentLoops(format!("half-edge {} ends at a blue vertex", map.twin(g))));
                }
                Color::Blue
            } else {
                cu
            };
            match color[w as usize] {
                None => {
                    color[w as usize] = Some(want);
                    q.push_back(w);
                }
                Some(c) if c != want => {
                    return Err(Error::InconsistentLoops(format!("conflicting colors at vertex {w}")));
                }
                _ => {}
            }
        }
    }
    let colors: Vec<Color> = color.into_iter().map(|c| c.expect("map is connected")).collect();
    let bc = match boundary_color {
        Color::Blue => BoundaryCondition::MonochromaticBlue,
        Color::Red => BoundaryCondition::MonochromaticRed,
    };
    let out = Coloring::new(colors, map.boundary_len(), bc)?;
    if loop_ensemble(map, &out)?.loops != loops.loops {
        return Err(Error::InconsistentLoops("loops are not the ensemble of any coloring".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{enumerate_triangulations, sample_boltzmann, BoltzmannOptions};
    use crate::percolation::sample_percolation;
    use crate::rng::stream;

    const BLUE: BoundaryCondition = BoundaryCondition::MonochromaticBlue;

    #[test]
    fn all_blue_has_no_loops() {
        let m = Triangulation::cone();
        let c = Coloring::uniform(&m, Color::Blue, BLUE);
        let l = loop_ensemble(&m, &c).unwrap();
        assert!(l.is_empty());
        assert_eq!(coloring_from_loops(&m, &l, Color::Blue).unwrap(), c);
    }

    #[test]
    fn single_red_vertex() {
        let m = Triangulation::cone();
        let c = Coloring::uniform(&m, Color::Red, BLUE);
        let l = loop_ensemble(&m, &c).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.loops[0].region, vec![3]);
        assert_eq!(l.loops[0].half_edges.len(), 3);
        for &h in &l.loops[0].half_edges {
            assert_eq!(m.dest(h), 3);
        }
    }

    #[test]
    fn cluster_count_matches_union_find() {
        for m in enumerate_triangulations(3, 4, 8).unwrap() {
            for key in 0..16u64 {
                let c = Coloring::from_key(&m, key, BLUE);
                let cl = clusters(&m, &c);
                // independent union-find by flood fill
                let n = m.num_vertices();
                let mut seen = vec![false; n];
                let mut count = 0;
                for s in 0..n {
                    if seen[s] {
                        continue;
                    }
                    count += 1;
                    let mut st = vec![s as u32];
                    seen[s] = true;
                    while let Some(u) = st.pop() {
                        for w in m.neighbors(u) {
                            if !seen[w as usize] && c.color(w) == c.color(u) {
                                seen[w as usize] = true;
                                st.push(w);
                            }
                        }
                    }
                }
                assert_eq!(cl.len(), count);
                assert_eq!(loop_ensemble(&m, &c).unwrap().len() + 1, count);
            }
        }
    }

    #[test]
    fn nested_loops_alternate() {
        let mut rng = stream(4, "nest");
        let mut checked = 0;
        for _ in 0..300 {
            let Ok(m) = sample_boltzmann(6, BoltzmannOptions { vertex_budget: 400 }, &mut rng) else { continue };
            let c = sample_percolation(&m, BLUE, &mut rng);
            let l = loop_ensemble(&m, &c).unwrap();
            let cl = clusters(&m, &c);
            for lp in &l.loops {
                let h = lp.half_edges[0];
                let inside = if lp.color == Color::Red { m.dest(h) } else { m.origin(h) };
                let d = cl.depth[cl.label[inside as usize] as usize];
                // red clusters sit at odd depth under a blue boundary
                assert_eq!(d % 2 == 1, lp.color == Color::Red);
                checked += 1;
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn nested_pair_inverts() {
        // a blue vertex inside a lens of two red vertices
        let mut found = false;
        for m in enumerate_triangulations(3, 3, 8).unwrap() {
            for key in 0..8u64 {
                let c = Coloring::from_key(&m, key, BLUE);
                let l = loop_ensemble(&m, &c).unwrap();
                if l.len() == 2 && l.loops[0].color != l.loops[1].color {
                    found = true;
                    let (outer, inner) = if l.loops[0].region.len() > l.loops[1].region.len() { (0, 1) } else { (1, 0) };
                    assert!(l.loops[inner].region.iter().all(|v| l.loops[outer].region.contains(v)));
                    assert_eq!(coloring_from_loops(&m, &l, Color::Blue).unwrap(), c);
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn inconsistent_loops_rejected() {
        let m = Triangulation::cone();
        let c = Coloring::uniform(&m, Color::Red, BLUE);
        let mut l = loop_ensemble(&m, &c).unwrap();
        l.loops[0].half_edges.pop();
        assert!(matches!(coloring_from_loops(&m, &l, Color::Blue), Err(Error::InconsistentLoops(_))));
        let mut l2 = loop_ensemble(&m, &c).unwrap();
        l2.loops[0].half_edges = l2.loops[0].half_edges.iter().map(|&h| m.twin(h)).collect();
        assert!(coloring_from_loops(&m, &l2, Color::Blue).is_err());
    }
}
