//! Bernoulli-½ site percolation on triangulations and lattice domains.
//!
//! Vertex ids follow the map convention: boundary vertices first (`0..ℓ`,
//! counterclockwise), inner vertices after. Boundary colors come from a
//! [`BoundaryCondition`]; inner colors are the random part.

mod crossing;
mod loops;
mod quad;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::map::Triangulation;

pub use crossing::{crossing_flags, crossing_flags_by_paths, event_region, interface, CrossingFlags, EventSolver, InterfacePath};
pub use loops::{clusters, coloring_from_loops, loop_ensemble, Clusters, Loop, LoopEnsemble};
pub use quad::quad_crossing;
pub(crate) use loops::next_crossing;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    MonochromaticBlue,
    MonochromaticRed,
    /// Blue on the arc `(e, e')`, red on `(e', e)`.
    ArcPair { e: usize, e_prime: usize },
    /// Boundary colors stored as given. Sampling draws them fair as well.
    Explicit,
}

impl BoundaryCondition {
    /// Prescribed color of boundary vertex `v` on an ℓ-gon, if any.
    pub fn color(&self, v: usize, ell: usize) -> Option<Color> {
        match *self {
            BoundaryCondition::MonochromaticBlue => Some(Color::Blue),
            BoundaryCondition::MonochromaticRed => Some(Color::Red),
            BoundaryCondition::ArcPair { e, e_prime } => {
                Some(if in_arc(v, e, e_prime, ell) { Color::Blue } else { Color::Red })
            }
            BoundaryCondition::Explicit => None,
        }
    }

    pub fn monochromatic(&self) -> Option<Color> {
        match self {
            BoundaryCondition::MonochromaticBlue => Some(Color::Blue),
            BoundaryCondition::MonochromaticRed => Some(Color::Red),
            _ => None,
        }
    }
}

/// Whether boundary vertex `v` lies on the arc `(e, f)`: the vertices from
/// `e + 1` to `f` counterclockwise.
#[inline]
pub fn in_arc(v: usize, e: usize, f: usize, ell: usize) -> bool {
    let dv = (v + ell - e) % ell;
    let df = (f + ell - e) % ell;
    dv >= 1 && dv <= df
}

/// Anything with the boundary-first vertex layout.
pub trait Sites {
    fn num_sites(&self) -> usize;
    fn num_boundary_sites(&self) -> usize;
}

impl Sites for Triangulation {
    fn num_sites(&self) -> usize {
        self.num_vertices()
    }
    fn num_boundary_sites(&self) -> usize {
        self.boundary_len()
    }
}

impl Sites for LatticeDomain {
    fn num_sites(&self) -> usize {
        self.num_vertices()
    }
    fn num_boundary_sites(&self) -> usize {
        self.num_boundary()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    colors: Vec<Color>,
    ell: usize,
    boundary: BoundaryCondition,
}

impl Coloring {
    pub fn new(colors: Vec<Color>, ell: usize, boundary: BoundaryCondition) -> Result<Self> {
        if ell > colors.len() {
            return Err(Error::Invalid("more boundary vertices than vertices".into()));
        }
        for v in 0..ell {
            if let Some(c) = boundary.color(v, ell) {
                if colors[v] != c {
                    return Err(Error::BoundaryConditionMismatch);
                }
            }
        }
        Ok(Coloring { colors, ell, boundary })
    }

    /// Inner vertices all `inner`, boundary per `boundary`.
    pub fn uniform<T: Sites + ?Sized>(target: &T, inner: Color, boundary: BoundaryCondition) -> Self {
        let ell = target.num_boundary_sites();
        let colors = (0..target.num_sites())
            .map(|v| if v < ell { boundary.color(v, ell).unwrap_or(inner) } else { inner })
            .collect();
        Coloring { colors, ell, boundary }
    }

    /// Inner colors from the bits of `key` (bit `i` set means inner vertex `ℓ+i` is blue).
    pub fn from_key<T: Sites + ?Sized>(target: &T, key: u64, boundary: BoundaryCondition) -> Self {
        let mut c = Self::uniform(target, Color::Red, boundary);
        for i in 0..target.num_sites() - c.ell {
            if key >> i & 1 == 1 {
                c.colors[c.ell + i] = Color::Blue;
            }
        }
        c
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }
    #[inline]
    pub fn color(&self, v: u32) -> Color {
        self.colors[v as usize]
    }
    #[inline]
    pub fn is_blue(&self, v: u32) -> bool {
        self.colors[v as usize] == Color::Blue
    }
    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.boundary
    }
    pub fn boundary_len(&self) -> usize {
        self.ell
    }
    pub fn len(&self) -> usize {
        self.colors.len()
    }
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Same inner colors under another boundary condition. Explicit keeps the current boundary colors.
    pub fn with_boundary(&self, boundary: BoundaryCondition) -> Self {
        let mut c = self.clone();
        for v in 0..self.ell {
            if let Some(col) = boundary.color(v, self.ell) {
                c.colors[v] = col;
            }
        }
        c.boundary = boundary;
        c
    }

    /// Flips inner vertex `v`.
    pub fn flipped(&self, v: u32) -> Result<Self> {
        if (v as usize) < self.ell {
            return Err(Error::BoundaryVertex);
        }
        let mut c = self.clone();
        c.colors[v as usize] = c.colors[v as usize].flip();
        Ok(c)
    }

    pub fn flip_in_place(&mut self, v: u32) {
        self.colors[v as usize] = self.colors[v as usize].flip();
    }

    /// Global color swap of every vertex; the boundary tag follows.
    pub fn swapped(&self) -> Self {
        let boundary = match self.boundary {
            BoundaryCondition::MonochromaticBlue => BoundaryCondition::MonochromaticRed,
            BoundaryCondition::MonochromaticRed => BoundaryCondition::MonochromaticBlue,
            BoundaryCondition::ArcPair { e, e_prime } => BoundaryCondition::ArcPair { e: e_prime, e_prime: e },
            BoundaryCondition::Explicit => BoundaryCondition::Explicit,
        };
        Coloring { colors: self.colors.iter().map(|c| c.flip()).collect(), ell: self.ell, boundary }
    }

    /// Inner colors as a bit key, inner vertex `ℓ+i` at bit `i`.
    pub fn key(&self) -> u64 {
        let mut k = 0u64;
        for (i, c) in self.colors[self.ell..].iter().enumerate() {
            if *c == Color::Blue {
                k |= 1 << i;
            }
        }
        k
    }
}

/// Fair i.i.d. colors on inner vertices; boundary per `boundary`.
pub fn sample_percolation<T: Sites + ?Sized, R: Rng + ?Sized>(target: &T, boundary: BoundaryCondition, rng: &mut R) -> Coloring {
    let n = target.num_sites();
    let ell = target.num_boundary_sites();
    let mut colors = Vec::with_capacity(n);
    let mut bits = 0u64;
    let mut left = 0;
    let mut draw = |rng: &mut R| {
        if left == 0 {
            bits = rng.random();
            left = 64;
        }
        let b = bits & 1 == 1;
        bits >>= 1;
        left -= 1;
        if b {
            Color::Blue
        } else {
            Color::Red
        }
    };
    for v in 0..ell {
        match boundary.color(v, ell) {
            Some(c) => colors.push(c),
            None => colors.push(draw(rng)),
        }
    }
    for _ in ell..n {
        colors.push(draw(rng));
    }
    Coloring { colors, ell, boundary }
}

pub const BRUTE_FORCE_MAX: usize = 24;

/// Exact probability of `event` under fair inner colors, summing over all
/// 2^k inner colorings with the given boundary condition.
pub fn brute_force_probability<T, F>(target: &T, boundary: BoundaryCondition, mut event: F) -> Result<Ratio<u64>>
where
    T: Sites + ?Sized,
    F: FnMut(&Coloring) -> bool,
{
    let k = target.num_sites() - target.num_boundary_sites();
    if k > BRUTE_FORCE_MAX {
        return Err(Error::TooManyVertices { k, max: BRUTE_FORCE_MAX });
    }
    let mut hits = 0u64;
    for key in 0..1u64 << k {
        if event(&Coloring::from_key(target, key, boundary)) {
            hits += 1;
        }
    }
    Ok(Ratio::new(hits, 1 << k))
}
