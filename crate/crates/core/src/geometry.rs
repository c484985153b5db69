//! Computational domains built from axis-aligned rectangles with subdomain
//! tags and Dirichlet boundary segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates are compared exactly; conforming decompositions must repeat
/// shared breakpoints bit-identically in the spec.
pub const COORD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub subdomain: usize,
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64), subdomain: usize) -> Self {
        Rect { x, y, subdomain }
    }

    pub fn width(&self) -> f64 {
        self.x.1 - self.x.0
    }

    pub fn height(&self) -> f64 {
        self.y.1 - self.y.0
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x.0 - COORD_TOL
            && p[0] <= self.x.1 + COORD_TOL
            && p[1] >= self.y.0 - COORD_TOL
            && p[1] <= self.y.1 + COORD_TOL
    }

    fn contains_strict(&self, p: [f64; 2]) -> bool {
        p[0] > self.x.0 + COORD_TOL
            && p[0] < self.x.1 - COORD_TOL
            && p[1] > self.y.0 + COORD_TOL
            && p[1] < self.y.1 - COORD_TOL
    }
}

/// Axis-aligned boundary segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Segment {
    pub fn new(from: [f64; 2], to: [f64; 2]) -> Self {
        Segment { from, to }
    }

    pub fn length(&self) -> f64 {
        (self.to[0] - self.from[0]).hypot(self.to[1] - self.from[1])
    }

    pub fn is_axis_aligned(&self) -> bool {
        (self.from[0] - self.to[0]).abs() < COORD_TOL
            || (self.from[1] - self.to[1]).abs() < COORD_TOL
    }

    /// Whether `p` lies on the segment (endpoints included).
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        let (a, b) = (self.from, self.to);
        if (a[0] - b[0]).abs() < COORD_TOL {
            (p[0] - a[0]).abs() < COORD_TOL
                && p[1] >= a[1].min(b[1]) - COORD_TOL
                && p[1] <= a[1].max(b[1]) + COORD_TOL
        } else {
            (p[1] - a[1]).abs() < COORD_TOL
                && p[0] >= a[0].min(b[0]) - COORD_TOL
                && p[0] <= a[0].max(b[0]) + COORD_TOL
        }
    }
}

/// Domain description: non-overlapping rectangles whose union is connected,
/// Dirichlet segments on the boundary of the union, and a target element size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub rectangles: Vec<Rect>,
    pub dirichlet_edges: Vec<Segment>,
    pub mesh_h: f64,
}

impl GeometrySpec {
    pub fn validate(&self) -> Result<()> {
        if self.rectangles.is_empty() {
            return Err(Error::Geometry("no rectangles given".into()));
        }
        if !(self.mesh_h > 0.0) {
            return Err(Error::Geometry("mesh_h must be positive".into()));
        }
        for r in &self.rectangles {
            if r.width() <= COORD_TOL || r.height() <= COORD_TOL {
                return Err(Error::Geometry(format!(
                    "rectangle for subdomain {} is degenerate",
                    r.subdomain
                )));
            }
            if self.mesh_h > r.width() + COORD_TOL || self.mesh_h > r.height() + COORD_TOL {
                return Err(Error::Geometry(format!(
                    "mesh_h = {} exceeds a side of the subdomain-{} rectangle",
                    self.mesh_h, r.subdomain
                )));
            }
        }
        self.check_no_overlap()?;
        self.check_connected()?;
        self.check_conforming_breakpoints()?;
        self.check_dirichlet()?;
        Ok(())
    }

    fn check_no_overlap(&self) -> Result<()> {
        for (i, a) in self.rectangles.iter().enumerate() {
            for b in &self.rectangles[i + 1..] {
                let dx = a.x.1.min(b.x.1) - a.x.0.max(b.x.0);
                let dy = a.y.1.min(b.y.1) - a.y.0.max(b.y.0);
                if dx > COORD_TOL && dy > COORD_TOL {
                    return Err(Error::Geometry(format!(
                        "rectangles for subdomains {} and {} overlap",
                        a.subdomain, b.subdomain
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.rectangles.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && rect_share_edge(&self.rectangles[i], &self.rectangles[j]) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::Geometry("union of rectangles is not connected".into()))
        }
    }

    /// Near-coincident but unequal breakpoints would silently produce slivers;
    /// shared coordinates have to match exactly.
    fn check_conforming_breakpoints(&self) -> Result<()> {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for r in &self.rectangles {
            xs.extend([r.x.0, r.x.1]);
            ys.extend([r.y.0, r.y.1]);
        }
        for coords in [&mut xs, &mut ys] {
            coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in coords.windows(2) {
                let gap = w[1] - w[0];
                if gap > 0.0 && gap < COORD_TOL {
                    return Err(Error::Geometry(format!(
                        "breakpoints {} and {} nearly coincide; conforming input must repeat them exactly",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_dirichlet(&self) -> Result<()> {
        let total: f64 = self.dirichlet_edges.iter().map(Segment::length).sum();
        if total <= COORD_TOL {
            return Err(Error::Geometry(
                "Dirichlet boundary is empty (total length zero)".into(),
            ));
        }
        for s in &self.dirichlet_edges {
            if !s.is_axis_aligned() {
                return Err(Error::Geometry(format!(
                    "Dirichlet segment {:?} -> {:?} is not axis-aligned",
                    s.from, s.to
                )));
            }
            let mid = [(s.from[0] + s.to[0]) / 2.0, (s.from[1] + s.to[1]) / 2.0];
            let on_some_rect = self.rectangles.iter().any(|r| on_rect_edge(r, mid));
            let in_interior = self.rectangles.iter().any(|r| r.contains_strict(mid));
            if !on_some_rect || in_interior {
                return Err(Error::Geometry(format!(
                    "Dirichlet segment {:?} -> {:?} does not lie on the domain boundary",
                    s.from, s.to
                )));
            }
            // Both sides covered means the segment is an interior interface.
            let off = 10.0 * COORD_TOL;
            let (p_plus, p_minus) = if (s.from[0] - s.to[0]).abs() < COORD_TOL {
                ([mid[0] + off, mid[1]], [mid[0] - off, mid[1]])
            } else {
                ([mid[0], mid[1] + off], [mid[0], mid[1] - off])
            };
            let covered = |p: [f64; 2]| self.rectangles.iter().any(|r| r.contains(p));
            if covered(p_plus) && covered(p_minus) {
                return Err(Error::Geometry(format!(
                    "Dirichlet segment {:?} -> {:?} lies on an interior interface",
                    s.from, s.to
                )));
            }
        }
        Ok(())
    }

    pub fn subdomain_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rectangles.iter().map(|r| r.subdomain).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn is_dirichlet_point(&self, p: [f64; 2]) -> bool {
        self.dirichlet_edges.iter().any(|s| s.contains_point(p))
    }
}

fn on_rect_edge(r: &Rect, p: [f64; 2]) -> bool {
    let on_x = (p[0] - r.x.0).abs() < COORD_TOL || (p[0] - r.x.1).abs() < COORD_TOL;
    let on_y = (p[1] - r.y.0).abs() < COORD_TOL || (p[1] - r.y.1).abs() < COORD_TOL;
    r.contains(p) && (on_x || on_y)
}

fn rect_share_edge(a: &Rect, b: &Rect) -> bool {
    let dx = a.x.1.min(b.x.1) - a.x.0.max(b.x.0);
    let dy = a.y.1.min(b.y.1) - a.y.0.max(b.y.0);
    (dx.abs() < COORD_TOL && dy > COORD_TOL) || (dy.abs() < COORD_TOL && dx > COORD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> GeometrySpec {
        GeometrySpec {
            rectangles: vec![Rect::new((0.0, 1.0), (0.0, 1.0), 1)],
            dirichlet_edges: vec![Segment::new([0.0, 0.0], [0.0, 1.0])],
            mesh_h: 0.5,
        }
    }

    #[test]
    fn valid_unit_square() {
        unit_square().validate().unwrap();
    }

    #[test]
    fn overlap_rejected() {
        let spec = GeometrySpec {
            rectangles: vec![
                Rect::new((0.0, 1.0), (0.0, 1.0), 1),
                Rect::new((0.5, 1.5), (0.0, 1.0), 2),
            ],
            dirichlet_edges: vec![Segment::new([0.0, 0.0], [0.0, 1.0])],
            mesh_h: 0.25,
        };
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn disconnected_rejected() {
        let spec = GeometrySpec {
            rectangles: vec![
                Rect::new((0.0, 1.0), (0.0, 1.0), 1),
                Rect::new((2.0, 3.0), (0.0, 1.0), 2),
            ],
            dirichlet_edges: vec![Segment::new([0.0, 0.0], [0.0, 1.0])],
            mesh_h: 0.25,
        };
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn empty_dirichlet_rejected() {
        let mut spec = unit_square();
        spec.dirichlet_edges.clear();
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn interior_dirichlet_rejected() {
        let spec = GeometrySpec {
            rectangles: vec![
                Rect::new((0.0, 1.0), (0.0, 1.0), 1),
                Rect::new((1.0, 2.0), (0.0, 1.0), 2),
            ],
            dirichlet_edges: vec![Segment::new([1.0, 0.0], [1.0, 1.0])],
            mesh_h: 0.25,
        };
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn coarse_mesh_rejected() {
        let mut spec = unit_square();
        spec.mesh_h = 1.5;
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }
}
