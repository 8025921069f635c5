use serde::{Deserialize, Serialize};

use super::{polygon_area, PeriodicSpline, RegionTag};
use crate::{Error, Result, Vec2};

/// Node indices of the two material landmarks: the south pole of the cap
/// and the trough point directly below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Landmarks {
    pub x_plus: usize,
    pub x_minus: usize,
}

/// Closed, counterclockwise boundary curve with per-node region tags and a
/// periodic spline through the nodes.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    nodes: Vec<Vec2>,
    tags: Vec<RegionTag>,
    landmarks: Option<Landmarks>,
    spline: PeriodicSpline,
}

impl BoundaryCurve {
    pub fn new(nodes: Vec<Vec2>, tags: Vec<RegionTag>, landmarks: Option<Landmarks>) -> Result<Self> {
        if nodes.len() != tags.len() {
            return Err(Error::Geometry(format!(
                "{} nodes but {} tags",
                nodes.len(),
                tags.len()
            )));
        }
        if let Some(l) = landmarks {
            if l.x_plus >= nodes.len() || l.x_minus >= nodes.len() {
                return Err(Error::Geometry("landmark index out of range".into()));
            }
        }
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry("non-finite node coordinate".into()));
        }
        let spline = PeriodicSpline::new(&nodes)?;
        let area = polygon_area(&nodes);
        if area <= 0.0 {
            return Err(Error::Geometry(format!(
                "curve must be counterclockwise (signed area {area:.3e})"
            )));
        }
        Ok(Self {
            nodes,
            tags,
            landmarks,
            spline,
        })
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn tags(&self) -> &[RegionTag] {
        &self.tags
    }

    pub fn landmarks(&self) -> Option<Landmarks> {
        self.landmarks
    }

    pub fn spline(&self) -> &PeriodicSpline {
        &self.spline
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_plus(&self) -> Option<Vec2> {
        self.landmarks.map(|l| self.nodes[l.x_plus])
    }

    pub fn x_minus(&self) -> Option<Vec2> {
        self.landmarks.map(|l| self.nodes[l.x_minus])
    }

    /// Outward unit normal at node `i`, taken from the spline.
    pub fn node_normal(&self, i: usize) -> Vec2 {
        self.spline.normal(self.spline.knot(i))
    }

    pub fn node_tangent(&self, i: usize) -> Vec2 {
        self.spline.tangent(self.spline.knot(i))
    }

    pub fn perimeter(&self) -> f64 {
        self.spline.period()
    }

    /// Signed area enclosed by the node polygon.
    pub fn polygon_area(&self) -> f64 {
        polygon_area(&self.nodes)
    }

    pub fn has_tag(&self, tag: RegionTag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn indices_with_tag(&self, tag: RegionTag) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.tags[i] == tag).collect()
    }

    /// Arc length between two nodes measured along the polygon, the short way round.
    pub fn arc_distance(&self, i: usize, j: usize) -> f64 {
        let l = self.spline.period();
        let d = (self.spline.knot(i) - self.spline.knot(j)).abs();
        d.min(l - d)
    }

    pub fn to_file(&self) -> CurveFile {
        CurveFile {
            nodes: self.nodes.iter().map(|p| [p.x, p.y]).collect(),
            tags: self.tags.clone(),
            landmarks: self.landmarks.map(|l| FileLandmarks {
                x_plus: [self.nodes[l.x_plus].x, self.nodes[l.x_plus].y],
                x_minus: [self.nodes[l.x_minus].x, self.nodes[l.x_minus].y],
            }),
            closed: true,
        }
    }

    pub fn from_file(file: &CurveFile) -> Result<Self> {
        if !file.closed {
            return Err(Error::Geometry("curve file must describe a closed curve".into()));
        }
        let nodes: Vec<Vec2> = file.nodes.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        let landmarks = match &file.landmarks {
            None => None,
            Some(l) => Some(Landmarks {
                x_plus: nearest_node(&nodes, Vec2::new(l.x_plus[0], l.x_plus[1]))?,
                x_minus: nearest_node(&nodes, Vec2::new(l.x_minus[0], l.x_minus[1]))?,
            }),
        };
        Self::new(nodes, file.tags.clone(), landmarks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CurveFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }
}

fn nearest_node(nodes: &[Vec2], p: Vec2) -> Result<usize> {
    nodes
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - p).norm().total_cmp(&(b.1 - p).norm()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Geometry("empty curve".into()))
}

/// JSON interchange form of a [`BoundaryCurve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub nodes: Vec<[f64; 2]>,
    pub tags: Vec<RegionTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<FileLandmarks>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileLandmarks {
    pub x_plus: [f64; 2],
    pub x_minus: [f64; 2],
}
