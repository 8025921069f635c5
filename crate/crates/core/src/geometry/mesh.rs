use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::HashSet;
use std::fmt::Write as _;

use super::{detect_self_intersection, BoundaryCurve, RegionTag};
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: RegionTag,
}

/// Triangulation of a region bounded by one closed curve. Vertices
/// `0..boundary_count` are the curve nodes in curve order, and boundary edge
/// `i` joins vertex `i` to vertex `i + 1` (mod `boundary_count`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub target_size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOptions {
    pub target_size: f64,
    /// Angle the refinement aims for, in degrees.
    pub angle_limit: f64,
    /// Smallest acceptable triangle angle, in degrees.
    pub quality_floor: f64,
    pub max_additional_vertices: usize,
}

impl MeshOptions {
    pub fn new(target_size: f64) -> Self {
        Self { target_size, angle_limit: 25.0, quality_floor: 15.0, max_additional_vertices: 400_000 }
    }
}

/// Edge tag: the common tag of both end nodes, else `Other`.
pub(crate) fn edge_tag(a: RegionTag, b: RegionTag) -> RegionTag {
    if a == b {
        a
    } else {
        RegionTag::Other
    }
}

pub fn triangulate(curve: &BoundaryCurve, target_size: f64) -> Result<TriMesh> {
    triangulate_with(curve, &MeshOptions::new(target_size))
}

/// Constrained Delaunay triangulation of the curve polygon, refined until
/// every interior triangle meets the angle limit and the area bound
/// `sqrt(3)/4 * target_size^2`. The curve edges are never split.
pub fn triangulate_with(curve: &BoundaryCurve, opts: &MeshOptions) -> Result<TriMesh> {
    if !(opts.target_size.is_finite() && opts.target_size > 0.0) {
        return Err(Error::Mesh(format!("target size must be positive, got {}", opts.target_size)));
    }
    let nodes = curve.nodes();
    let report = detect_self_intersection(nodes, 0.0);
    if let Some(c) = report.contacts.first() {
        return Err(Error::SelfIntersecting { count: report.contacts.len(), x: c.point.x, y: c.point.y });
    }
    let n = nodes.len();
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(n);
    for p in nodes {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("vertex insertion failed: {e:?}")))?;
        handles.push(h);
    }
    for (k, h) in handles.iter().enumerate() {
        if h.index() != k {
            return Err(Error::Mesh(format!("duplicate curve node {k}")));
        }
    }
    for i in 0..n {
        if !cdt.can_add_constraint(handles[i], handles[(i + 1) % n]) {
            return Err(Error::Mesh(format!("curve segment {i} cannot be constrained")));
        }
        cdt.add_constraint(handles[i], handles[(i + 1) % n]);
    }
    let max_area = 3f64.sqrt() / 4.0 * opts.target_size * opts.target_size;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(opts.angle_limit))
        .with_max_allowed_area(max_area)
        .with_max_additional_vertices(opts.max_additional_vertices)
        .keep_constraint_edges()
        .exclude_outer_faces(true);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Mesh("refinement ran out of vertices".into()));
    }
    let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();

    let vertices: Vec<Vec2> = cdt.vertices().map(|v| Vec2::new(v.position().x, v.position().y)).collect();
    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        if excluded.contains(&f.fix().index()) {
            continue;
        }
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        triangles.push([a, b, c]);
    }
    let tags = curve.tags();
    let boundary_edges = (0..n)
        .map(|i| BoundaryEdge { a: i, b: (i + 1) % n, tag: edge_tag(tags[i], tags[(i + 1) % n]) })
        .collect();
    let mesh = TriMesh { vertices, triangles, boundary_edges, target_size: opts.target_size };
    mesh.check()?;
    let (angle, tri) = mesh.min_angle();
    if angle < opts.quality_floor {
        let c = mesh.centroid(tri);
        return Err(Error::Mesh(format!(
            "quality floor {} deg unreachable: triangle {tri} near ({:.4}, {:.4}) has angle {angle:.2} deg",
            opts.quality_floor, c.x, c.y
        )));
    }
    Ok(mesh)
}

impl TriMesh {
    pub fn boundary_count(&self) -> usize {
        self.boundary_edges.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        (a + b + c) / 3.0
    }

    /// Smallest interior angle of triangle `t`, in degrees.
    pub fn triangle_min_angle(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|i| self.vertices[i]);
        let mut m = f64::INFINITY;
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            let ang = u.angle(&v).to_degrees();
            m = m.min(ang);
        }
        m
    }

    /// Smallest angle over the mesh and the triangle attaining it.
    pub fn min_angle(&self) -> (f64, usize) {
        (0..self.triangles.len())
            .map(|t| (self.triangle_min_angle(t), t))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    /// Largest edge length over all triangles.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn boundary_positions(&self) -> Vec<Vec2> {
        self.vertices[..self.boundary_count()].to_vec()
    }

    /// Orientation, index range and boundary-consistency checks.
    pub fn check(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} is not positively oriented")));
            }
        }
        // every boundary edge belongs to exactly one triangle, traversed in the same direction
        let mut directed: HashSet<(usize, usize)> = HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]));
            }
        }
        for e in &self.boundary_edges {
            if !directed.contains(&(e.a, e.b)) || directed.contains(&(e.b, e.a)) {
                return Err(Error::Mesh(format!("boundary edge {}-{} not on the mesh boundary", e.a, e.b)));
            }
        }
        let mut boundary_like = 0;
        for &(a, b) in &directed {
            if !directed.contains(&(b, a)) {
                boundary_like += 1;
            }
        }
        if boundary_like != self.boundary_edges.len() {
            return Err(Error::Mesh(format!(
                "mesh has {boundary_like} boundary edges but the curve has {}",
                self.boundary_edges.len()
            )));
        }
        Ok(())
    }

    /// Plain-text export: a count line, then vertex, triangle and boundary edge lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.triangles.len(), self.boundary_edges.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v.x, v.y);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, e.tag);
        }
        s
    }

    pub fn from_text(text: &str, target_size: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |what: &str| Error::Mesh(format!("malformed mesh text: {what}"));
        let head: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("empty"))?
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| bad("count line")))
            .collect::<Result<_>>()?;
        if head.len() != 3 {
            return Err(bad("count line"));
        }
        let mut vertices = Vec::with_capacity(head[0]);
        for _ in 0..head[0] {
            let f: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("missing vertex"))?
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad("vertex")))
                .collect::<Result<_>>()?;
            if f.len() != 2 {
                return Err(bad("vertex"));
            }
            vertices.push(Vec2::new(f[0], f[1]));
        }
        let mut triangles = Vec::with_capacity(head[1]);
        for _ in 0..head[1] {
            let f: Vec<usize> = lines
                .next()
                .ok_or_else(|| bad("missing triangle"))?
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad("triangle")))
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(bad("triangle"));
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        let mut boundary_edges = Vec::with_capacity(head[2]);
        for _ in 0..head[2] {
            let line = lines.next().ok_or_else(|| bad("missing boundary edge"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad("boundary edge"));
            }
            boundary_edges.push(BoundaryEdge {
                a: f[0].parse().map_err(|_| bad("boundary edge"))?,
                b: f[1].parse().map_err(|_| bad("boundary edge"))?,
                tag: RegionTag::parse(f[2]).ok_or_else(|| bad("boundary tag"))?,
            });
        }
        let mesh = TriMesh { vertices, triangles, boundary_edges, target_size };
        mesh.check()?;
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_dinosaur_domain, polygon_area, DomainSpec};
    use std::f64::consts::PI;

    fn disk(h: f64) -> BoundaryCurve {
        let n = (2.0 * PI / h).ceil() as usize;
        let nodes: Vec<Vec2> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Vec2::new(a.cos(), a.sin())
            })
            .collect();
        BoundaryCurve::new(nodes, vec![RegionTag::Other; n], None).unwrap()
    }

    #[test]
    fn disk_area_close_to_pi() {
        let m = triangulate(&disk(0.1), 0.1).unwrap();
        assert!((m.area() - PI).abs() / PI < 0.01);
        assert!(m.min_angle().0 >= 15.0);
    }

    #[test]
    fn mesh_area_matches_polygon_area() {
        for h in [0.2, 0.1, 0.05] {
            let c = disk(h);
            let m = triangulate(&c, h).unwrap();
            assert!((m.area() - polygon_area(c.nodes())).abs() < 1e-12);
        }
    }

    #[test]
    fn dinosaur_mesh_is_valid() {
        let c = build_dinosaur_domain(&DomainSpec::new(0.05)).unwrap();
        let m = triangulate(&c, 0.12).unwrap();
        assert!((0..m.triangles.len()).all(|t| m.signed_area(t) > 0.0));
        for (i, p) in c.nodes().iter().enumerate() {
            assert_eq!(m.vertices[i], *p);
        }
        assert_eq!(m.boundary_edges[c.landmarks().unwrap().x_plus].tag, RegionTag::CapPlus);
    }

    #[test]
    fn self_intersecting_curve_refused() {
        let nodes = vec![Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(4.0, 4.0), Vec2::new(2.0, -1.0), Vec2::new(0.0, 4.0)];
        let c = BoundaryCurve::new(nodes, vec![RegionTag::Other; 5], None).unwrap();
        assert!(matches!(triangulate(&c, 0.2), Err(Error::SelfIntersecting { .. })));
    }

    #[test]
    fn text_round_trip() {
        let m = triangulate(&disk(0.3), 0.3).unwrap();
        let back = TriMesh::from_text(&m.to_text(), m.target_size).unwrap();
        assert_eq!(m, back);
    }
}
