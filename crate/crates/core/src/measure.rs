use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Location {
    Vertex(u32),
    Point([f64; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: Location,
    pub mass: f64,
}

/// Finite sum of point masses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.mass >= 0.0 && a.mass.is_finite())) {
            return Err(Error::Invalid("atom masses must be finite and nonnegative".into()));
        }
        Ok(AtomicMeasure { atoms })
    }

    /// One atom per vertex with the given masses.
    pub fn on_vertices(masses: &[f64]) -> Self {
        AtomicMeasure { atoms: masses.iter().enumerate().map(|(v, &mass)| Atom { at: Location::Vertex(v as u32), mass }).collect() }
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
    pub fn len(&self) -> usize {
        self.atoms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Dense per-vertex masses; atoms at plane points are ignored.
    pub fn vertex_masses(&self, n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n];
        for a in &self.atoms {
            if let Location::Vertex(v) = a.at {
                m[v as usize] += a.mass;
            }
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Self {
        AtomicMeasure { atoms: self.atoms.iter().map(|a| Atom { at: a.at, mass: a.mass * c }).collect() }
    }
}

/// r^{d−2} times Lebesgue measure on the r-neighborhood of `points`,
/// discretized on a square grid with `cells_per_radius` cells per r; each
/// cell whose center is within r of a point carries one atom.
pub fn occupation_estimate(points: &[[f64; 2]], d: f64, r: f64, cells_per_radius: usize) -> Result<AtomicMeasure> {
    if !(d > 0.0 && d <= 2.0) || !(r > 0.0) || cells_per_radius == 0 {
        return Err(Error::Invalid("occupation needs 0 < d ≤ 2, r > 0".into()));
    }
    if points.is_empty() {
        return Ok(AtomicMeasure::default());
    }
    let h = r / cells_per_radius as f64;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k] - r);
            hi[k] = hi[k].max(p[k] + r);
        }
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 1;
    let mut hit = vec![false; nx * ny];
    let cpr = cells_per_radius as i64 + 1;
    for p in points {
        let ci = ((p[0] - lo[0]) / h) as i64;
        let cj = ((p[1] - lo[1]) / h) as i64;
        for i in (ci - cpr).max(0)..=(ci + cpr).min(nx as i64 - 1) {
            for j in (cj - cpr).max(0)..=(cj + cpr).min(ny as i64 - 1) {
                let c = [lo[0] + (i as f64 + 0.5) * h, lo[1] + (j as f64 + 0.5) * h];
                if (c[0] - p[0]).hypot(c[1] - p[1]) <= r {
                    hit[i as usize * ny + j as usize] = true;
                }
            }
        }
    }
    let mass = r.powf(d - 2.0) * h * h;
    let atoms = hit
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(k, _)| Atom { at: Location::Point([lo[0] + ((k / ny) as f64 + 0.5) * h, lo[1] + ((k % ny) as f64 + 0.5) * h]), mass })
        .collect();
    Ok(AtomicMeasure { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_disk() {
        let r = 0.3;
        let m = occupation_estimate(&[[0.1, -0.2]], 2.0, r, 64).unwrap();
        let area = std::f64::consts::PI * r * r;
        assert!((m.total() - area).abs() < 0.01 * area);
    }

    #[test]
    fn segment_strip_limit() {
        let pts: Vec<[f64; 2]> = (0..=4000).map(|k| [k as f64 / 4000.0, 0.0]).collect();
        let mut prev = f64::INFINITY;
        for r in [0.04, 0.02, 0.01] {
            let t = occupation_estimate(&pts, 1.0, r, 32).unwrap().total();
            assert!((t - (2.0 + std::f64::consts::PI * r)).abs() < 0.02, "{r} {t}");
            assert!((t - 2.0).abs() < prev);
            prev = (t - 2.0).abs();
        }
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(AtomicMeasure::new(vec![Atom { at: Location::Vertex(0), mass: -1.0 }]).is_err());
        let m = AtomicMeasure::on_vertices(&[1.0, 2.0]);
        assert_eq!(m.scaled(2.0).total(), 6.0);
        assert_eq!(m.vertex_masses(3), vec![1.0, 2.0, 0.0]);
    }
}
