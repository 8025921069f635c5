use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::{BoundaryCurve, Landmarks, RegionTag};
use crate::{Error, Result, Vec2};

/// Radius of the half-disk cap. The cap's south pole sits at altitude ε and
/// its equator at ε + 1/2.
pub const CAP_RADIUS: f64 = 0.5;

/// Parameters of one member of the dinosaur-wave domain family.
///
/// Coordinates: the trough is the segment `y = 0`, `|x| <= trough_halfwidth`;
/// the cap is the lower half-disk of radius [`CAP_RADIUS`] with south pole
/// `(0, ε)`; the neck is the channel `|x| < r` between the cap equator and
/// altitude `3/2 + h`, where it arches over to the left and descends into
/// the body box `[x_left, body_extent[0]] x [-body_extent[1], 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub epsilon: f64,
    pub neck_height: f64,
    pub neck_radius: f64,
    pub trough_halfwidth: f64,
    /// Right extent and depth of the lower body box.
    pub body_extent: [f64; 2],
    /// Inner radius of the arch joining the neck to the descending channel.
    pub arch_radius: f64,
    pub smoothing_radius: f64,
    /// Largest boundary node spacing.
    pub node_spacing: f64,
    /// Node spacing at the cap pole and the trough point below it.
    pub contact_spacing: f64,
    /// Growth rate of the spacing away from the contact region.
    pub grading: f64,
}

impl DomainSpec {
    pub fn new(epsilon: f64) -> Self {
        let node_spacing = 0.1;
        Self {
            epsilon,
            neck_height: 1.0,
            neck_radius: 0.5,
            trough_halfwidth: Self::default_trough_halfwidth(epsilon),
            body_extent: [1.5, 1.0],
            arch_radius: 0.5,
            smoothing_radius: 0.125,
            node_spacing,
            contact_spacing: Self::default_contact_spacing(epsilon, node_spacing),
            grading: 0.3,
        }
    }

    pub fn default_trough_halfwidth(epsilon: f64) -> f64 {
        epsilon.max(0.0).sqrt().max(0.5)
    }

    pub fn default_contact_spacing(epsilon: f64, node_spacing: f64) -> f64 {
        (0.5 * epsilon).min(node_spacing)
    }

    /// Returns a copy with ε replaced and the ε-dependent defaults recomputed.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut s = self.clone();
        s.epsilon = epsilon;
        s.trough_halfwidth = self.trough_halfwidth.max(Self::default_trough_halfwidth(epsilon));
        s.contact_spacing = Self::default_contact_spacing(epsilon, self.node_spacing);
        s
    }

    fn x_inner(&self) -> f64 {
        -self.neck_radius - 2.0 * self.arch_radius
    }

    fn x_left(&self) -> f64 {
        -3.0 * self.neck_radius - 2.0 * self.arch_radius
    }

    /// Altitude of the top of the neck channel.
    pub fn neck_top(&self) -> f64 {
        1.5 + self.neck_height
    }

    /// Altitude of the cap equator.
    pub fn cap_equator(&self) -> f64 {
        self.epsilon + CAP_RADIUS
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = [
            ("neck_height", self.neck_height),
            ("neck_radius", self.neck_radius),
            ("trough_halfwidth", self.trough_halfwidth),
            ("body_extent[0]", self.body_extent[0]),
            ("body_extent[1]", self.body_extent[1]),
            ("arch_radius", self.arch_radius),
            ("smoothing_radius", self.smoothing_radius),
            ("node_spacing", self.node_spacing),
            ("contact_spacing", self.contact_spacing),
            ("grading", self.grading),
        ];
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be > 0 (got {}); the cap would touch or overlap the trough",
                self.epsilon
            )));
        }
        for (name, v) in finite_pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidSpec(format!("{name} must be finite and positive (got {v})")));
            }
        }
        if self.epsilon >= 1.0 + self.neck_height {
            return Err(Error::InvalidSpec(format!(
                "epsilon {} leaves no neck (needs epsilon < 1 + h = {})",
                self.epsilon,
                1.0 + self.neck_height
            )));
        }
        if self.trough_halfwidth < self.epsilon.sqrt() {
            return Err(Error::InvalidSpec(format!(
                "trough_halfwidth {} < sqrt(epsilon) = {}",
                self.trough_halfwidth,
                self.epsilon.sqrt()
            )));
        }
        if self.neck_radius > CAP_RADIUS {
            return Err(Error::InvalidSpec(format!(
                "neck_radius {} exceeds the cap radius {CAP_RADIUS}",
                self.neck_radius
            )));
        }
        let s = self.smoothing_radius;
        if self.trough_halfwidth + s >= self.body_extent[0] || self.trough_halfwidth + s >= -self.x_inner() {
            return Err(Error::InvalidSpec(format!(
                "trough_halfwidth {} does not fit on the body top",
                self.trough_halfwidth
            )));
        }
        if 2.0 * s >= self.body_extent[1] || s >= self.arch_radius {
            return Err(Error::InvalidSpec(format!("smoothing_radius {s} too large for the body")));
        }
        if CAP_RADIUS + s >= -self.x_inner() {
            return Err(Error::InvalidSpec("cap collides with the descending channel".into()));
        }
        if self.neck_radius < CAP_RADIUS && CAP_RADIUS - self.neck_radius < 2.0 * s.min(0.25 * (CAP_RADIUS - self.neck_radius)) {
            return Err(Error::InvalidSpec("cap shoulder too narrow".into()));
        }
        Ok(())
    }

    fn spacing_at(&self, p: Vec2) -> f64 {
        // distance to the contact segment between (0, 0) and (0, epsilon)
        let y = p.y.clamp(0.0, self.epsilon);
        let d = (p - Vec2::new(0.0, y)).norm();
        self.node_spacing.min(self.contact_spacing + self.grading * d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Piece {
    Line { a: Vec2, b: Vec2 },
    Arc { center: Vec2, radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    pub(crate) fn point(&self, u: f64) -> Vec2 {
        match *self {
            Piece::Line { a, b } => a + (b - a) * u,
            Piece::Arc { center, radius, start, sweep } => {
                let th = start + sweep * u;
                center + Vec2::new(th.cos(), th.sin()) * radius
            }
        }
    }

    fn max_step(&self) -> f64 {
        match *self {
            Piece::Line { .. } => f64::INFINITY,
            Piece::Arc { radius, .. } => 0.2 * radius,
        }
    }

    /// Image under `x -> -x`, traversed backwards.
    fn mirrored_reversed(&self) -> Piece {
        match *self {
            Piece::Line { a, b } => Piece::Line { a: mirror(b), b: mirror(a) },
            Piece::Arc { center, radius, start, sweep } => {
                Piece::Arc { center: mirror(center), radius, start: PI - (start + sweep), sweep }
            }
        }
    }

    /// Cubic Bezier control polygons; arcs are split into pieces of at most a quarter turn.
    pub(crate) fn to_bezier(&self) -> Vec<[Vec2; 4]> {
        match *self {
            Piece::Line { a, b } => vec![[a, a + (b - a) / 3.0, a + (b - a) * (2.0 / 3.0), b]],
            Piece::Arc { center, radius, start, sweep } => {
                let parts = (sweep.abs() / FRAC_PI_2 - 1e-9).ceil().max(1.0) as usize;
                let d = sweep / parts as f64;
                let k = 4.0 / 3.0 * (d / 4.0).tan() * radius;
                (0..parts)
                    .map(|i| {
                        let t0 = start + d * i as f64;
                        let t1 = t0 + d;
                        let e = |t: f64| Vec2::new(t.cos(), t.sin());
                        let de = |t: f64| Vec2::new(-t.sin(), t.cos());
                        let p0 = center + e(t0) * radius;
                        let p3 = center + e(t1) * radius;
                        [p0, p0 + de(t0) * k, p3 - de(t1) * k, p3]
                    })
                    .collect()
            }
        }
    }

    /// Nodes along the piece, both end points included.
    fn sample(&self, spacing: &dyn Fn(Vec2) -> f64) -> Vec<Vec2> {
        sample_params(&|u| self.point(u), self.max_step(), spacing)
            .into_iter()
            .map(|u| self.point(u))
            .collect()
    }
}

/// Parameters `u` in `[0, 1]` of nodes along the curve `point(u)` with local
/// spacing `min(spacing(p), cap)`. Both end points are included.
pub(crate) fn sample_params(point: &dyn Fn(f64) -> Vec2, cap: f64, spacing: &dyn Fn(Vec2) -> f64) -> Vec<f64> {
    const SUB: usize = 512;
    let pts: Vec<Vec2> = (0..=SUB).map(|k| point(k as f64 / SUB as f64)).collect();
    let density: Vec<f64> = pts.iter().map(|&p| 1.0 / spacing(p).min(cap)).collect();
    let mut cum = vec![0.0; SUB + 1];
    for k in 0..SUB {
        let len = (pts[k + 1] - pts[k]).norm();
        cum[k + 1] = cum[k] + 0.5 * (density[k] + density[k + 1]) * len;
    }
    let total = cum[SUB];
    let n = (total - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut k = 0;
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let f = (target - cum[k]) / (cum[k + 1] - cum[k]);
        out.push((k as f64 + f) / SUB as f64);
    }
    out.push(1.0);
    out
}

fn mirror(p: Vec2) -> Vec2 {
    Vec2::new(-p.x, p.y)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PieceSpec {
    pub piece: Piece,
    pub tag: RegionTag,
    /// Sampled as the mirror image of this earlier piece.
    pub mirror_of: Option<usize>,
}

/// Ordered boundary pieces of the domain with gap `eps` (which may be 0 for
/// the touching limit), with the indices of the pieces starting at the
/// trough point and at the cap pole.
pub(crate) fn dinosaur_pieces(spec: &DomainSpec, eps: f64) -> (Vec<PieceSpec>, usize, usize) {
    let r = spec.neck_radius;
    let a = spec.arch_radius;
    let s = spec.smoothing_radius;
    let [x_r, depth] = spec.body_extent;
    let x_i = spec.x_inner();
    let x_l = spec.x_left();
    let y_b = -depth;
    let y_top = spec.neck_top();
    let y_eq = eps + CAP_RADIUS;
    let w = spec.trough_halfwidth;
    let v = Vec2::new;
    let line = |a: Vec2, b: Vec2| Piece::Line { a, b };
    let arc = |center: Vec2, radius: f64, start: f64, sweep: f64| Piece::Arc { center, radius, start, sweep };
    use RegionTag::*;

    let mut out: Vec<PieceSpec> = Vec::new();
    let mut push = |piece: Piece, tag: RegionTag| {
        out.push(PieceSpec { piece, tag, mirror_of: None });
        out.len() - 1
    };

    // body: bottom, lower-right fillet, right wall, upper-right fillet, top
    push(line(v(x_l + s, y_b), v(x_r - s, y_b)), Other);
    push(arc(v(x_r - s, y_b + s), s, -FRAC_PI_2, FRAC_PI_2), Other);
    push(line(v(x_r, y_b + s), v(x_r, -s)), Other);
    push(arc(v(x_r - s, -s), s, 0.0, FRAC_PI_2), Other);
    push(line(v(x_r - s, 0.0), v(w, 0.0)), Other);
    let trough_right = push(line(v(w, 0.0), v(0.0, 0.0)), Trough);
    let x_minus = push(line(v(0.0, 0.0), v(-w, 0.0)), Trough);
    push(line(v(-w, 0.0), v(x_i + s, 0.0)), Other);

    // concave fillet into the descending channel, inner wall, inner arch
    push(arc(v(x_i + s, s), s, -FRAC_PI_2, -FRAC_PI_2), Other);
    push(line(v(x_i, s), v(x_i, y_top)), Other);
    let xc = -r - a;
    push(arc(v(xc, y_top), a, PI, -FRAC_PI_2), Other);
    push(arc(v(xc, y_top), a, FRAC_PI_2, -FRAC_PI_2), Other);

    // left half of neck and cap, down to the pole
    let cap_center = v(0.0, y_eq);
    let mut left = Vec::new();
    if r < CAP_RADIUS {
        let sc = s.min(0.25 * (CAP_RADIUS - r));
        left.push(push(line(v(-r, y_top), v(-r, y_eq + sc)), Neck));
        left.push(push(arc(v(-r - sc, y_eq + sc), sc, 0.0, -FRAC_PI_2), Neck));
        // convex fillet internally tangent to the cap circle
        let xf = -((CAP_RADIUS - sc).powi(2) - sc * sc).sqrt();
        let fc = v(xf, y_eq - sc);
        left.push(push(line(v(-r - sc, y_eq), v(xf, y_eq)), CapPlus));
        let phi = (fc.y - cap_center.y).atan2(fc.x - cap_center.x).rem_euclid(2.0 * PI);
        left.push(push(arc(fc, sc, FRAC_PI_2, phi - FRAC_PI_2), CapPlus));
        left.push(push(arc(cap_center, CAP_RADIUS, phi, 1.5 * PI - phi), CapPlus));
    } else {
        left.push(push(line(v(-r, y_top), v(-r, y_eq)), Neck));
        left.push(push(arc(cap_center, CAP_RADIUS, PI, FRAC_PI_2), CapPlus));
    }
    let x_plus = out.len();
    for &k in left.iter().rev() {
        let PieceSpec { piece, tag, .. } = out[k];
        out.push(PieceSpec { piece: piece.mirrored_reversed(), tag, mirror_of: Some(k) });
    }
    out[trough_right].mirror_of = Some(x_minus);

    // outer arch, left outer wall, lower-left fillet
    let mut push = |piece: Piece, tag: RegionTag| out.push(PieceSpec { piece, tag, mirror_of: None });
    push(arc(v(xc, y_top), a + 2.0 * r, 0.0, FRAC_PI_2), Other);
    push(arc(v(xc, y_top), a + 2.0 * r, FRAC_PI_2, FRAC_PI_2), Other);
    push(line(v(x_l, y_top), v(x_l, y_b + s)), Other);
    push(arc(v(x_l + s, y_b + s), s, PI, FRAC_PI_2), Other);
    (out, x_minus, x_plus)
}

/// Builds the boundary of the domain Ω^ε described by `spec`. The trough and
/// the neck-and-cap are sampled mirror symmetrically about `x = 0`.
pub fn build_dinosaur_domain(spec: &DomainSpec) -> Result<BoundaryCurve> {
    spec.validate()?;
    let (pieces, x_minus_piece, x_plus_piece) = dinosaur_pieces(spec, spec.epsilon);
    // spacing also grows linearly away from every arc, so edge lengths change gradually
    let arc_samples: Vec<(Vec2, f64)> = pieces
        .iter()
        .filter(|ps| matches!(ps.piece, Piece::Arc { .. }))
        .flat_map(|ps| (0..=16).map(move |k| (ps.piece.point(k as f64 / 16.0), ps.piece.max_step())))
        .collect();
    let sp = |p: Vec2| {
        arc_samples
            .iter()
            .map(|&(q, step)| step + spec.grading * (p - q).norm())
            .fold(spec.spacing_at(p), f64::min)
    };
    let mut nodes = Vec::new();
    let mut tags = Vec::new();
    let mut x_minus = 0;
    let mut x_plus = 0;
    for (k, ps) in pieces.iter().enumerate() {
        if k == x_minus_piece {
            x_minus = nodes.len();
        }
        if k == x_plus_piece {
            x_plus = nodes.len();
        }
        let pts: Vec<Vec2> = match ps.mirror_of {
            Some(m) => pieces[m].piece.sample(&sp).into_iter().rev().map(mirror).collect(),
            None => ps.piece.sample(&sp),
        };
        for p in &pts[..pts.len() - 1] {
            nodes.push(*p);
            tags.push(ps.tag);
        }
    }
    // exact landmark coordinates
    nodes[x_minus] = Vec2::zeros();
    nodes[x_plus] = Vec2::new(0.0, spec.epsilon);
    BoundaryCurve::new(nodes, tags, Some(Landmarks { x_plus, x_minus }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::detect_self_intersection;

    #[test]
    fn landmarks_at_expected_coordinates() {
        let spec = DomainSpec::new(0.05);
        let c = build_dinosaur_domain(&spec).unwrap();
        assert_eq!(c.x_plus().unwrap(), Vec2::new(0.0, 0.05));
        assert_eq!(c.x_minus().unwrap(), Vec2::new(0.0, 0.0));
        let l = c.landmarks().unwrap();
        assert_eq!(c.tags()[l.x_plus], RegionTag::CapPlus);
        assert_eq!(c.tags()[l.x_minus], RegionTag::Trough);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        for eps in [0.0, -0.1, f64::NAN] {
            let mut spec = DomainSpec::new(0.05);
            spec.epsilon = eps;
            assert!(matches!(build_dinosaur_domain(&spec), Err(Error::InvalidSpec(_))));
        }
    }

    #[test]
    fn rejects_narrow_trough() {
        let mut spec = DomainSpec::new(0.09);
        spec.trough_halfwidth = 0.2;
        assert!(build_dinosaur_domain(&spec).is_err());
    }

    #[test]
    fn curve_is_simple_and_ccw() {
        for eps in [0.5, 0.1, 0.05, 0.02] {
            let c = build_dinosaur_domain(&DomainSpec::new(eps)).unwrap();
            assert!(c.polygon_area() > 0.0);
            let rep = detect_self_intersection(c.nodes(), 0.0);
            assert!(rep.contacts.is_empty(), "eps {eps}: {:?}", rep.contacts.first());
        }
    }

    #[test]
    fn near_contact_region_is_mirror_symmetric() {
        let c = build_dinosaur_domain(&DomainSpec::new(0.05)).unwrap();
        for (i, p) in c.nodes().iter().enumerate() {
            if matches!(c.tags()[i], RegionTag::CapPlus | RegionTag::Trough) {
                let m = mirror(*p);
                let found = c.nodes().iter().any(|q| (q - m).norm() < 1e-14);
                assert!(found, "node {i} at {p:?} has no mirror image");
            }
        }
    }

    #[test]
    fn narrow_neck_with_shoulders() {
        let mut spec = DomainSpec::new(0.1);
        spec.neck_radius = 0.35;
        let c = build_dinosaur_domain(&spec).unwrap();
        assert!(detect_self_intersection(c.nodes(), 0.0).contacts.is_empty());
        assert_eq!(c.x_plus().unwrap(), Vec2::new(0.0, 0.1));
    }
}
