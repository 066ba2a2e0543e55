use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, LatticePoint, SQRT3, SQRT3_2};
use crate::percolation::{Color, Coloring};
use crate::rng::stream;

/// Open axis-aligned square. A vertex has left the box once its hexagon is
/// not contained in it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmBox {
    pub center: [f64; 2],
    pub half: f64,
}

impl ArmBox {
    pub fn exits(&self, p: [f64; 2], delta: f64) -> bool {
        (p[0] - self.center[0]).abs() + delta / 2.0 >= self.half || (p[1] - self.center[1]).abs() + delta / SQRT3 >= self.half
    }
}

/// Square B of side `side` and the concentric square of side 3·side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub center: [f64; 2],
    pub side: f64,
}

impl AnnulusSpec {
    /// Grid square [iρ,(i+1)ρ] × [jρ,(j+1)ρ].
    pub fn grid(i: i64, j: i64, rho: f64) -> Self {
        AnnulusSpec { center: [(i as f64 + 0.5) * rho, (j as f64 + 0.5) * rho], side: rho }
    }

    pub fn outer(&self) -> ArmBox {
        ArmBox { center: self.center, half: 1.5 * self.side }
    }

    /// Closed inner square.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let h = self.side / 2.0;
        (p[0] - self.center[0]).abs() <= h && (p[1] - self.center[1]).abs() <= h
    }
}

/// Lattice window covering every vertex that can be visited inside a box,
/// with a one-step margin.
struct Window {
    i0: i64,
    j0: i64,
    ni: usize,
    nj: usize,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Window {
    fn new(bx: &ArmBox, delta: f64) -> Self {
        let j_lo = ((bx.center[1] - bx.half) / (delta * SQRT3_2)).floor() as i64 - 2;
        let j_hi = ((bx.center[1] + bx.half) / (delta * SQRT3_2)).ceil() as i64 + 2;
        let i_lo = ((bx.center[0] - bx.half) / delta - j_hi as f64 / 2.0).floor() as i64 - 2;
        let i_hi = ((bx.center[0] + bx.half) / delta - j_lo as f64 / 2.0).ceil() as i64 + 2;
        let ni = (i_hi - i_lo + 1) as usize;
        let nj = (j_hi - j_lo + 1) as usize;
        Window { i0: i_lo, j0: j_lo, ni, nj, stamp: vec![0; ni * nj], epoch: 0 }
    }

    fn index(&self, p: LatticePoint) -> usize {
        let (di, dj) = (p.i - self.i0, p.j - self.j0);
        assert!(di >= 0 && dj >= 0 && (di as usize) < self.ni && (dj as usize) < self.nj, "lattice window too small");
        di as usize * self.nj + dj as usize
    }

    fn bump(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }
}

/// Four alternating arms from the neighbors of `v` to the outside of `bx`.
/// `color` returns None for sites not in the graph.
fn alternating_arms<F>(v: LatticePoint, delta: f64, bx: &ArmBox, color: &mut F, win: &mut Window, stack: &mut Vec<LatticePoint>) -> bool
where
    F: FnMut(LatticePoint) -> Option<Color>,
{
    let nb = v.neighbors();
    let cols: [Option<Color>; 6] = std::array::from_fn(|k| color(nb[k]));
    // runs of equal present colors in cyclic order
    let changes = (0..6).filter(|&k| cols[k] != cols[(k + 1) % 6]).count();
    let present: Vec<Color> = cols.iter().flatten().copied().collect();
    if changes < 4 || !present.contains(&Color::Red) || !present.contains(&Color::Blue) {
        return false;
    }
    let start = (0..6).find(|&k| cols[k] != cols[(k + 5) % 6]).expect("colors change");
    let mut reaching: Vec<Color> = Vec::with_capacity(6);
    let mut k = 0;
    while k < 6 {
        let first = (start + k) % 6;
        let mut run = vec![nb[first]];
        while k + 1 < 6 && cols[(start + k + 1) % 6] == cols[first] {
            k += 1;
            run.push(nb[(start + k) % 6]);
        }
        k += 1;
        let Some(c) = cols[first] else { continue };
        if reaches(v, &run, c, delta, bx, color, win, stack) {
            reaching.push(c);
        }
    }
    let m = reaching.len();
    m >= 4 && (0..m).filter(|&i| reaching[i] != reaching[(i + 1) % m]).count() >= 4
}

#[allow(clippy::too_many_arguments)]
fn reaches<F>(v: LatticePoint, run: &[LatticePoint], c: Color, delta: f64, bx: &ArmBox, color: &mut F, win: &mut Window, stack: &mut Vec<LatticePoint>) -> bool
where
    F: FnMut(LatticePoint) -> Option<Color>,
{
    win.bump();
    stack.clear();
    for &u in run {
        if bx.exits(u.position(delta), delta) {
            return true;
        }
        let iu = win.index(u);
        win.stamp[iu] = win.epoch;
        stack.push(u);
    }
    let iv = win.index(v);
    win.stamp[iv] = win.epoch;
    while let Some(u) = stack.pop() {
        for w in u.neighbors() {
            let iw = win.index(w);
            if win.stamp[iw] == win.epoch || color(w) != Some(c) {
                continue;
            }
            if bx.exits(w.position(delta), delta) {
                return true;
            }
            win.stamp[iw] = win.epoch;
            stack.push(w);
        }
    }
    false
}

fn domain_color<'a>(domain: &'a LatticeDomain, coloring: &'a Coloring) -> impl Fn(LatticePoint) -> Option<Color> + 'a {
    move |p| domain.id(p).map(|id| coloring.color(id))
}

fn check_in_box(domain: &LatticeDomain, coloring: &Coloring, v: u32, annulus: &AnnulusSpec) -> Result<()> {
    if v as usize >= domain.num_vertices() || coloring.len() != domain.num_vertices() {
        return Err(Error::UnknownVertex);
    }
    if !annulus.contains(domain.position(v)) {
        return Err(Error::VertexOutsideBox);
    }
    Ok(())
}

/// Whether v has four alternating-color arms from its neighbors to the
/// boundary of the enlarged square. Arms use domain vertices only.
pub fn is_a_important(domain: &LatticeDomain, coloring: &Coloring, v: u32, annulus: &AnnulusSpec) -> Result<bool> {
    check_in_box(domain, coloring, v, annulus)?;
    let bx = annulus.outer();
    let mut win = Window::new(&bx, domain.delta());
    let col = domain_color(domain, coloring);
    Ok(alternating_arms(domain.point(v), domain.delta(), &bx, &mut |p| col(p), &mut win, &mut Vec::new()))
}

/// Inner vertices that are A-important for some ρ-grid square containing them.
pub fn rho_important_set(domain: &LatticeDomain, coloring: &Coloring, rho: f64) -> Vec<u32> {
    assert!(rho > 0.0, "grid spacing must be positive");
    let delta = domain.delta();
    let col = domain_color(domain, coloring);
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let ell = domain.num_boundary() as u32;
    for v in ell..domain.num_vertices() as u32 {
        let p = domain.position(v);
        let cells = |x: f64| {
            let i = (x / rho).floor() as i64;
            if i as f64 * rho == x { vec![i, i - 1] } else { vec![i] }
        };
        let mut hit = false;
        'squares: for i in cells(p[0]) {
            for j in cells(p[1]) {
                let bx = AnnulusSpec::grid(i, j, rho).outer();
                let mut win = Window::new(&bx, delta);
                if alternating_arms(domain.point(v), delta, &bx, &mut |q| col(q), &mut win, &mut stack) {
                    hit = true;
                    break 'squares;
                }
            }
        }
        if hit {
            out.push(v);
        }
    }
    out
}

/// Exhaustive oracle for A-importance: enumerates every simple monochromatic
/// path from each neighbor that stays inside the box until its last vertex,
/// and looks for pairwise disjoint arms at four alternating neighbors.
/// Limited to boxes holding at most 128 vertices.
pub fn arms_by_search(domain: &LatticeDomain, coloring: &Coloring, v: u32, annulus: &AnnulusSpec) -> Result<bool> {
    check_in_box(domain, coloring, v, annulus)?;
    let delta = domain.delta();
    let bx = annulus.outer();
    let center = domain.point(v);
    let col = domain_color(domain, coloring);
    let mut local: std::collections::HashMap<LatticePoint, usize> = Default::default();
    let mut arms: Vec<(Color, Vec<u128>)> = Vec::new();
    for u in center.neighbors() {
        let Some(c) = col(u) else {
            arms.push((Color::Red, Vec::new()));
            continue;
        };
        let mut found = Vec::new();
        let mut path = vec![u];
        let mut next_id = |p: LatticePoint, local: &mut std::collections::HashMap<LatticePoint, usize>| -> Result<u128> {
            let n = local.len();
            let id = *local.entry(p).or_insert(n);
            if id >= 128 {
                return Err(Error::TooManyVertices { k: id + 1, max: 128 });
            }
            Ok(1u128 << id)
        };
        let ub = next_id(u, &mut local)?;
        search(center, c, delta, &bx, &col, &mut path, ub, &mut found, &mut local, &mut next_id)?;
        found.sort_unstable();
        found.dedup();
        arms.push((c, found));
    }
    for a in 0..6 {
        for b in a + 1..6 {
            for cc in b + 1..6 {
                for d in cc + 1..6 {
                    let q = [a, b, cc, d];
                    let colors: Vec<Color> = q.iter().map(|&k| arms[k].0).collect();
                    if colors[0] != colors[2] || colors[1] != colors[3] || colors[0] == colors[1] {
                        continue;
                    }
                    if q.iter().any(|&k| arms[k].1.is_empty()) {
                        continue;
                    }
                    // same-colored arms must be disjoint; opposite colors are disjoint by color
                    let disjoint = |x: &[u128], y: &[u128]| x.iter().any(|p| y.iter().any(|r| p & r == 0));
                    if disjoint(&arms[a].1, &arms[cc].1) && disjoint(&arms[b].1, &arms[d].1) {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

#[allow(clippy::too_many_arguments)]
fn search<F, G>(
    center: LatticePoint,
    c: Color,
    delta: f64,
    bx: &ArmBox,
    col: &F,
    path: &mut Vec<LatticePoint>,
    mask: u128,
    found: &mut Vec<u128>,
    local: &mut std::collections::HashMap<LatticePoint, usize>,
    next_id: &mut G,
) -> Result<()>
where
    F: Fn(LatticePoint) -> Option<Color>,
    G: FnMut(LatticePoint, &mut std::collections::HashMap<LatticePoint, usize>) -> Result<u128>,
{
    let u = *path.last().expect("nonempty path");
    if bx.exits(u.position(delta), delta) {
        found.push(mask);
        return Ok(());
    }
    for w in u.neighbors() {
        if w == center || col(w) != Some(c) {
            continue;
        }
        let wb = next_id(w, local)?;
        if mask & wb != 0 {
            continue;
        }
        path.push(w);
        search(center, c, delta, bx, col, path, mask | wb, found, local, next_id)?;
        path.pop();
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha4Estimate {
    pub value: f64,
    pub std_err: f64,
    pub hits: u64,
    pub samples: u64,
    pub delta: f64,
    pub r: f64,
    pub seed: u64,
}

const BATCH: u64 = 4096;

/// Monte Carlo probability of four alternating arms from the origin to the
/// boundary of [−r,r]² on the δ-lattice. Colors are drawn lazily, so a sample
/// costs only the clusters it explores.
pub fn four_arm_probability<R: Rng + ?Sized>(delta: f64, r: f64, samples: u64, rng: &mut R) -> Result<Alpha4Estimate> {
    four_arm_with_seed(delta, r, samples, rng.random())
}

pub fn four_arm_with_seed(delta: f64, r: f64, samples: u64, seed: u64) -> Result<Alpha4Estimate> {
    if !(delta > 0.0 && delta < r) || samples == 0 {
        return Err(Error::Invalid("four-arm estimate needs 0 < δ < r and samples > 0".into()));
    }
    let bx = ArmBox { center: [0.0, 0.0], half: r };
    let batches = samples.div_ceil(BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, &format!("four-arm/batch/{k}"));
            let mut win = Window::new(&bx, delta);
            let mut drawn = Window::new(&bx, delta);
            let mut blue = vec![false; drawn.stamp.len()];
            let mut stack = Vec::new();
            let mut hits = 0;
            for _ in 0..BATCH.min(samples - k * BATCH) {
                drawn.bump();
                let mut color = |p: LatticePoint| {
                    let i = drawn.index(p);
                    if drawn.stamp[i] != drawn.epoch {
                        drawn.stamp[i] = drawn.epoch;
                        blue[i] = rng.random::<bool>();
                    }
                    Some(if blue[i] { Color::Blue } else { Color::Red })
                };
                hits += alternating_arms(LatticePoint::new(0, 0), delta, &bx, &mut color, &mut win, &mut stack) as u64;
            }
            hits
        })
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(Alpha4Estimate { value: p, std_err: (p * (1.0 - p) / n).sqrt(), hits, samples, delta, r, seed })
}

/// Probability that six independent fair neighbor colors show at least four
/// color changes around the cycle.
pub fn one_step_four_arm() -> f64 {
    let good = (0u32..64).filter(|m| (0..6).filter(|&k| (m >> k & 1) != (m >> ((k + 1) % 6) & 1)).count() >= 4).count();
    good as f64 / 64.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DomainOptions, Shape};
    use crate::percolation::{sample_percolation, BoundaryCondition};

    fn square_domain(delta: f64) -> LatticeDomain {
        LatticeDomain::build(&Shape::rectangle(1.0, 1.0), delta, DomainOptions::default()).unwrap()
    }

    fn nearest(domain: &LatticeDomain, x: [f64; 2]) -> u32 {
        (domain.num_boundary() as u32..domain.num_vertices() as u32)
            .min_by(|&a, &b| {
                let d = |v: u32| {
                    let p = domain.position(v);
                    (p[0] - x[0]).hypot(p[1] - x[1])
                };
                d(a).total_cmp(&d(b))
            })
            .unwrap()
    }

    #[test]
    fn all_blue_has_no_arms() {
        let d = square_domain(1.0 / 16.0);
        let c = Coloring::uniform(&d, Color::Blue, BoundaryCondition::MonochromaticBlue);
        assert!(rho_important_set(&d, &c, 0.1).is_empty());
        let v = nearest(&d, [0.5, 0.5]);
        let a = AnnulusSpec { center: d.position(v), side: 0.2 };
        assert!(!is_a_important(&d, &c, v, &a).unwrap());
        let far = AnnulusSpec { center: [5.0, 5.0], side: 0.1 };
        assert!(matches!(is_a_important(&d, &c, v, &far), Err(Error::VertexOutsideBox)));
    }

    #[test]
    fn painted_rays() {
        let delta = 1.0 / 32.0;
        let d = square_domain(delta);
        let v = nearest(&d, [0.5, 0.5]);
        let o = d.point(v);
        let mut colors = vec![Color::Blue; d.num_vertices()];
        // red rays east and west, blue everywhere else
        for s in 1..40 {
            for dir in [(1, 0), (-1, 0)] {
                if let Some(id) = d.id(LatticePoint::new(o.i + dir.0 * s, o.j)) {
                    colors[id as usize] = Color::Red;
                }
            }
        }
        let c = Coloring::new(colors, d.num_boundary(), BoundaryCondition::Explicit).unwrap();
        let a = AnnulusSpec { center: d.position(v), side: 0.2 };
        assert!(is_a_important(&d, &c, v, &a).unwrap());
        assert!(arms_by_search(&d, &c, v, &AnnulusSpec { center: d.position(v), side: 2.0 * delta }).unwrap());
        assert!(is_a_important(&d, &c.swapped(), v, &a).unwrap());
    }

    #[test]
    fn matches_exhaustive_search() {
        let delta = 1.0 / 32.0;
        let d = square_domain(delta);
        let mut rng = stream(3, "arms-oracle");
        let mut positives = 0;
        for t in 0..1000 {
            let c = sample_percolation(&d, BoundaryCondition::Explicit, &mut rng);
            let v = nearest(&d, [0.2 + 0.6 * rng.random::<f64>(), 0.2 + 0.6 * rng.random::<f64>()]);
            let p = d.position(v);
            let shift = [(rng.random::<f64>() - 0.5) * delta, (rng.random::<f64>() - 0.5) * delta];
            let a = AnnulusSpec { center: [p[0] + shift[0] * 0.9, p[1] + shift[1] * 0.9], side: 5.0 * delta / 3.0 };
            let fast = is_a_important(&d, &c, v, &a).unwrap();
            assert_eq!(fast, arms_by_search(&d, &c, v, &a).unwrap(), "trial {t}");
            positives += fast as u32;
        }
        assert!(positives > 20 && positives < 900, "{positives}");
    }

    #[test]
    fn one_step_annulus() {
        let exact = one_step_four_arm();
        assert_eq!(exact, 0.5);
        let e = four_arm_with_seed(0.1, 0.12, 40_000, 9).unwrap();
        assert!((e.value - exact).abs() < 3.0 * e.std_err, "{e:?}");
    }

    #[test]
    fn decreasing_in_r() {
        let delta = 1.0 / 16.0;
        let mut prev: Option<Alpha4Estimate> = None;
        for r in [0.15, 0.3, 0.6] {
            let e = four_arm_with_seed(delta, r, 20_000, 4).unwrap();
            if let Some(p) = prev {
                assert!(p.value >= e.value - 3.0 * (p.std_err.powi(2) + e.std_err.powi(2)).sqrt());
            }
            prev = Some(e);
        }
        assert!(four_arm_with_seed(0.2, 0.1, 10, 0).is_err());
    }

    #[test]
    fn nesting_and_swap() {
        let delta = 1.0 / 32.0;
        let d = square_domain(delta);
        let mut rng = stream(8, "arms-nest");
        for _ in 0..5 {
            let c = sample_percolation(&d, BoundaryCondition::Explicit, &mut rng);
            let coarse = rho_important_set(&d, &c, 0.5);
            let fine = rho_important_set(&d, &c, 0.05);
            assert!(coarse.iter().all(|v| fine.binary_search(v).is_ok()));
            assert!(coarse.len() < fine.len());
            assert_eq!(fine, rho_important_set(&d, &c.swapped(), 0.05));
        }
    }
}
