//! Static SVG renderings.

use std::fmt::Write;

use cardylab::cardy::{delta_point, BaryCoords};
use cardylab::lattice::{hexagon, LatticeDomain};
use cardylab::map::Triangulation;
use cardylab::percolation::{Color, Coloring, LoopEnsemble};

const SIZE: f64 = 800.0;
const PAD: f64 = 20.0;
const RED: &str = "#d1495b";
const BLUE: &str = "#2e86ab";

/// Affine map from a bounding box to the canvas, y pointing up.
struct Frame {
    lo: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (SIZE - 2.0 * PAD) / span;
        Frame { lo, scale, height: (hi[1] - lo[1]) * scale + 2.0 * PAD }
    }
    fn width(&self, hi_x: f64) -> f64 {
        (hi_x - self.lo[0]) * self.scale + 2.0 * PAD
    }
    fn at(&self, p: [f64; 2]) -> (f64, f64) {
        (PAD + (p[0] - self.lo[0]) * self.scale, self.height - PAD - (p[1] - self.lo[1]) * self.scale)
    }
}

fn header(w: f64, h: f64) -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.1} {h:.1}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n")
}

fn polygon(out: &mut String, f: &Frame, pts: &[[f64; 2]], style: &str) {
    out.push_str("<polygon points=\"");
    for &p in pts {
        let (x, y) = f.at(p);
        let _ = write!(out, "{x:.2},{y:.2} ");
    }
    let _ = writeln!(out, "\" {style}/>");
}

/// Map edges drawn between the embedded positions of their endpoints.
pub fn embedding(map: &Triangulation, coords: &[BaryCoords], marks: [usize; 3]) -> String {
    let pts: Vec<[f64; 2]> = coords.iter().map(|&b| delta_point(b)).collect();
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|c| delta_point(BaryCoords { x: c[0], y: c[1], z: c[2] }));
    let f = Frame::fit(corners.iter().copied());
    let hi_x = corners.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut s = header(f.width(hi_x), f.height);
    polygon(&mut s, &f, &corners, "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"");
    for h in 0..map.num_half_edges() as u32 {
        let t = map.twin(h);
        if h < t {
            let (x1, y1) = f.at(pts[map.origin(h) as usize]);
            let (x2, y2) = f.at(pts[map.dest(h) as usize]);
            let _ = writeln!(s, "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#888\" stroke-width=\"0.5\"/>");
        }
    }
    let ell = map.boundary_len();
    for (v, &p) in pts.iter().enumerate() {
        let (x, y) = f.at(p);
        let fill = if v < ell { "black" } else { "#444" };
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"{fill}\"/>");
    }
    for (k, &e) in marks.iter().enumerate() {
        let (x, y) = f.at(pts[e]);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\">{}</text>", x + 4.0, y - 4.0, ["a", "b", "c"][k]);
    }
    s.push_str("</svg>\n");
    s
}

/// Hexagon tiling colored by `coloring`, with dual loops and marked vertices on top.
pub fn hexagons(domain: &LatticeDomain, coloring: &Coloring, loops: Option<&LoopEnsemble>, marked: &[u32]) -> String {
    let d = domain.delta();
    let cells: Vec<[[f64; 2]; 6]> = domain.points().iter().map(|&p| hexagon(p, d)).collect();
    let f = Frame::fit(cells.iter().flatten().copied());
    let hi_x = cells.iter().flatten().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut s = header(f.width(hi_x), f.height);
    let ell = domain.num_boundary();
    for (v, cell) in cells.iter().enumerate() {
        let fill = if coloring.color(v as u32) == Color::Red { RED } else { BLUE };
        let op = if v < ell { 0.45 } else { 1.0 };
        polygon(&mut s, &f, cell, &format!("fill=\"{fill}\" fill-opacity=\"{op}\" stroke=\"white\" stroke-width=\"0.3\""));
    }
    if let Some(ens) = loops {
        let map = domain.to_triangulation();
        for l in &ens.loops {
            s.push_str("<polygon points=\"");
            for &h in &l.half_edges {
                let (a, b) = (domain.position(map.origin(h)), domain.position(map.dest(h)));
                let (x, y) = f.at([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
                let _ = write!(s, "{x:.2},{y:.2} ");
            }
            s.push_str("\" fill=\"none\" stroke=\"#222\" stroke-width=\"1\"/>\n");
        }
    }
    let r = (d * f.scale * 0.35).max(1.5);
    for &v in marked {
        let (x, y) = f.at(domain.position(v));
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"#f6c85f\" stroke=\"black\" stroke-width=\"0.5\"/>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use cardylab::lattice::{DomainOptions, Shape};
    use cardylab::percolation::{loop_ensemble, BoundaryCondition};

    #[test]
    fn renders_wellformed_documents() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.25, DomainOptions::default()).unwrap();
        let c = Coloring::from_key(&d, 0b1011, BoundaryCondition::MonochromaticBlue);
        let loops = loop_ensemble(&d.to_triangulation(), &c).unwrap();
        let s = hexagons(&d, &c, Some(&loops), &[d.num_boundary() as u32]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polygon").count(), d.num_vertices() + loops.len());
        let m = Triangulation::cone();
        let coords = vec![BaryCoords { x: 1.0 / 3.0, y: 1.0 / 3.0, z: 1.0 / 3.0 }; 4];
        let e = embedding(&m, &coords, [0, 1, 2]);
        assert_eq!(e.matches("<circle").count(), 4);
    }
}
