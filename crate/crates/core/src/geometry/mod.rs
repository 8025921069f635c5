//! Domain construction, boundary curves, charts, triangulation and the
//! gap / self-intersection queries.

mod charts;
mod curve;
mod dinosaur;
mod gap;
mod intersect;
mod mesh;
mod sobolev;
mod spline;
mod splash_domain;

pub use charts::{build_charts, BaseChart, Chart, ChartKind, ChartRole, Profile};
pub use curve::{BoundaryCurve, CurveFile, Landmarks};
pub use dinosaur::{build_dinosaur_domain, DomainSpec, CAP_RADIUS};
pub use gap::{min_boundary_gap, GapResult};
pub use intersect::{
    detect_self_intersection, segment_intersection, Contact, ContactKind, IntersectionReport,
};
pub use mesh::{triangulate, triangulate_with, BoundaryEdge, MeshOptions, TriMesh};
pub use sobolev::{discrete_sobolev_norm, DeviationSamples};
pub use spline::PeriodicSpline;
pub use splash_domain::{
    approximate_splash_domain, approximate_splash_domain_with_targets, BezierArc, ArcRole, SplashDomainSpec, SplashApproxOptions,
};

use serde::{Deserialize, Serialize};

/// Region tag carried by every boundary node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    /// Lower boundary of the falling cap.
    CapPlus,
    /// Vertical walls of the neck channel.
    Neck,
    /// Flat trough below the cap.
    Trough,
    Other,
}

impl RegionTag {
    pub const ALL: [RegionTag; 4] = [
        RegionTag::CapPlus,
        RegionTag::Neck,
        RegionTag::Trough,
        RegionTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::CapPlus => "cap_plus",
            RegionTag::Neck => "neck",
            RegionTag::Trough => "trough",
            RegionTag::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<RegionTag> {
        RegionTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn polygon_area(points: &[crate::Vec2]) -> f64 {
    let n = points.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(points: &[crate::Vec2], p: crate::Vec2) -> bool {
    let n = points.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (points[i], points[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}
