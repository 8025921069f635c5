use serde::{Deserialize, Serialize};

use super::dinosaur::{dinosaur_pieces, sample_params, Piece};
use super::{detect_self_intersection, point_in_polygon, polygon_area, BoundaryCurve, DeviationSamples, DomainSpec, Landmarks, RegionTag};
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcRole {
    /// Upper side of the contact: the boundary of the region above the tangent line.
    ThetaPlus,
    /// Lower side of the contact.
    ThetaMinus,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BezierArc {
    pub role: ArcRole,
    pub control: [[f64; 2]; 4],
}

impl BezierArc {
    fn p(&self, k: usize) -> Vec2 {
        Vec2::new(self.control[k][0], self.control[k][1])
    }

    pub fn point(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        self.p(0) * (v * v * v) + self.p(1) * (3.0 * v * v * u) + self.p(2) * (3.0 * v * u * u) + self.p(3) * (u * u * u)
    }

    pub fn derivative(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        (self.p(1) - self.p(0)) * (3.0 * v * v) + (self.p(2) - self.p(1)) * (6.0 * v * u) + (self.p(3) - self.p(2)) * (3.0 * u * u)
    }

    pub fn start(&self) -> Vec2 {
        self.p(0)
    }

    pub fn end(&self) -> Vec2 {
        self.p(3)
    }
}

/// Arclength table of a Bezier arc.
struct ArcLength {
    u: Vec<f64>,
    s: Vec<f64>,
}

impl ArcLength {
    fn new(arc: &BezierArc) -> Self {
        const N: usize = 2048;
        let u: Vec<f64> = (0..=N).map(|k| k as f64 / N as f64).collect();
        let mut s = vec![0.0; N + 1];
        for k in 0..N {
            s[k + 1] = s[k] + (arc.point(u[k + 1]) - arc.point(u[k])).norm();
        }
        Self { u, s }
    }

    fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    fn at(&self, u: f64) -> f64 {
        let n = self.u.len() - 1;
        let k = ((u * n as f64).floor() as usize).min(n - 1);
        let f = u * n as f64 - k as f64;
        self.s[k] + f * (self.s[k + 1] - self.s[k])
    }
}

/// Self-touching limit domain: a closed counterclockwise chain of cubic
/// Bezier arcs. The contact point is the junction of the two `theta_plus`
/// arcs and also of the two `theta_minus` arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplashDomainSpec {
    pub arcs: Vec<BezierArc>,
    pub contact_point: [f64; 2],
    /// Unit normal of the common tangent line at the contact, pointing from
    /// the `theta_minus` side toward the `theta_plus` side.
    pub tangent_normal: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplashApproxOptions {
    /// Arclength half-width of the region lifted by the full ε.
    pub plateau: f64,
    /// Arclength over which the lift decays to zero.
    pub transition: f64,
    pub node_spacing: f64,
    /// Node spacing at the contact; `None` means ε/2.
    pub contact_spacing: Option<f64>,
    pub grading: f64,
}

impl Default for SplashApproxOptions {
    fn default() -> Self {
        Self { plateau: 0.2, transition: 0.3, node_spacing: 0.1, contact_spacing: None, grading: 0.3 }
    }
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    f(t) / (f(t) + f(1.0 - t))
}

impl SplashApproxOptions {
    /// Lift profile in arclength from the contact: 1 on the plateau, C-infinity
    /// decay to 0 across the transition.
    pub fn lift(&self, s: f64) -> f64 {
        1.0 - smooth_step((s.abs() - self.plateau) / self.transition)
    }
}

fn sd_err(condition: u8, message: impl Into<String>) -> Error {
    Error::SplashDomain { condition, message: message.into() }
}

impl SplashDomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn x0(&self) -> Vec2 {
        Vec2::new(self.contact_point[0], self.contact_point[1])
    }

    pub fn normal(&self) -> Vec2 {
        Vec2::new(self.tangent_normal[0], self.tangent_normal[1]).normalize()
    }

    /// The touching (ε = 0) member of the dinosaur family as a splash domain.
    pub fn dinosaur_limit(spec: &DomainSpec) -> Self {
        let (pieces, x_minus, x_plus) = dinosaur_pieces(spec, 0.0);
        let mut arcs = Vec::new();
        for (k, ps) in pieces.iter().enumerate() {
            let role = if k == x_plus || k + 1 == x_plus {
                ArcRole::ThetaPlus
            } else if k == x_minus || k + 1 == x_minus {
                ArcRole::ThetaMinus
            } else {
                ArcRole::Other
            };
            for c in ps.piece.to_bezier() {
                arcs.push(BezierArc { role, control: c.map(|p| [p.x, p.y]) });
            }
        }
        Self { arcs, contact_point: [0.0, 0.0], tangent_normal: [0.0, 1.0] }
    }

    /// Asymmetric overhang: a wave rising on the right, curling over to the
    /// left and ending in a tip with unequal side radii that touches the
    /// flat trough at the origin.
    pub fn overhang_fixture() -> Self {
        let (a1, a2, b, y_top, s) = (0.3, 0.45, 0.4, 2.0, 0.1);
        let (x_l, y_b, w) = (-1.5, -1.0, 0.6);
        let x_in = a2 + 2.0 * b;
        let x_r = x_in + a1 + a2;
        let v = Vec2::new;
        let line = |a: Vec2, b: Vec2| Piece::Line { a, b };
        let arc = |center: Vec2, radius: f64, start: f64, sweep: f64| Piece::Arc { center, radius, start, sweep };
        use std::f64::consts::{FRAC_PI_2 as H, PI};
        use ArcRole::*;
        let pieces = [
            (line(v(x_l + s, y_b), v(x_r - s, y_b)), Other),
            (arc(v(x_r - s, y_b + s), s, -H, H), Other),
            (line(v(x_r, y_b + s), v(x_r, y_top)), Other),
            (arc(v(a2 + b, y_top), b + a1 + a2, 0.0, PI), Other),
            (line(v(-a1, y_top), v(-a1, a1)), ThetaPlus),
            (arc(v(0.0, a1), a1, PI, H), ThetaPlus),
            (arc(v(0.0, a2), a2, 1.5 * PI, H), ThetaPlus),
            (line(v(a2, a2), v(a2, y_top)), ThetaPlus),
            (arc(v(a2 + b, y_top), b, PI, -PI), Other),
            (line(v(x_in, y_top), v(x_in, s)), Other),
            (arc(v(x_in - s, s), s, 0.0, -H), Other),
            (line(v(x_in - s, 0.0), v(w, 0.0)), Other),
            (line(v(w, 0.0), v(0.0, 0.0)), ThetaMinus),
            (line(v(0.0, 0.0), v(-w, 0.0)), ThetaMinus),
            (line(v(-w, 0.0), v(x_l + s, 0.0)), Other),
            (arc(v(x_l + s, -s), s, H, H), Other),
            (line(v(x_l, -s), v(x_l, y_b + s)), Other),
            (arc(v(x_l + s, y_b + s), s, PI, H), Other),
        ];
        let arcs = pieces
            .iter()
            .flat_map(|(p, role)| p.to_bezier().into_iter().map(move |c| BezierArc { role: *role, control: c.map(|q| [q.x, q.y]) }))
            .collect();
        Self { arcs, contact_point: [0.0, 0.0], tangent_normal: [0.0, 1.0] }
    }

    /// Index range of the contiguous run of arcs with `role`, and the arc starting at the contact.
    fn run(&self, role: ArcRole) -> Result<(Vec<usize>, usize)> {
        let n = self.arcs.len();
        let idx: Vec<usize> = (0..n).filter(|&i| self.arcs[i].role == role).collect();
        let name = match role {
            ArcRole::ThetaPlus => "theta_plus",
            _ => "theta_minus",
        };
        if idx.len() < 2 {
            return Err(sd_err(5, format!("{name} needs at least two arcs meeting at the contact point")));
        }
        // contiguity modulo n: exactly one run start
        let starts = idx.iter().filter(|&&i| self.arcs[(i + n - 1) % n].role != role).count();
        if starts != 1 {
            return Err(sd_err(5, format!("{name} arcs are not contiguous")));
        }
        let x0 = self.x0();
        let tol = 1e-9 * (1.0 + x0.norm());
        let at_x0: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| (self.arcs[i].start() - x0).norm() <= tol && self.arcs[(i + n - 1) % n].role == role)
            .collect();
        if at_x0.len() != 1 {
            return Err(sd_err(5, format!("contact point is not an interior junction of the {name} arcs")));
        }
        Ok((idx, at_x0[0]))
    }

    /// Checks the defining conditions of a splash domain at sampling resolution.
    pub fn validate(&self, opts: &SplashApproxOptions) -> Result<()> {
        let n = self.arcs.len();
        if n < 4 {
            return Err(sd_err(3, "need at least four arcs"));
        }
        let scale = self
            .arcs
            .iter()
            .flat_map(|a| a.control.iter())
            .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
            .max(1.0);
        for i in 0..n {
            let a = &self.arcs[i];
            let b = &self.arcs[(i + 1) % n];
            if a.control.iter().flatten().any(|x| !x.is_finite()) {
                return Err(sd_err(3, format!("arc {i} has non-finite control points")));
            }
            if (a.end() - b.start()).norm() > 1e-9 * scale {
                return Err(sd_err(3, format!("arc {i} does not end where arc {} starts", (i + 1) % n)));
            }
            for k in 0..=32 {
                if a.derivative(k as f64 / 32.0).norm() < 1e-12 * scale {
                    return Err(sd_err(3, format!("arc {i} is not regular")));
                }
            }
            let t0 = a.derivative(1.0).normalize();
            let t1 = b.derivative(0.0).normalize();
            if t0.dot(&t1) < 1.0 - 1e-8 {
                return Err(sd_err(3, format!("tangent jumps between arc {i} and arc {}", (i + 1) % n)));
            }
        }
        let (_, plus0) = self.run(ArcRole::ThetaPlus)?;
        let (_, minus0) = self.run(ArcRole::ThetaMinus)?;
        let nrm = self.normal();
        if !nrm.norm().is_finite() {
            return Err(sd_err(1, "tangent normal is degenerate"));
        }
        for i in [plus0, minus0] {
            let t = self.arcs[i].derivative(0.0).normalize();
            if t.dot(&nrm).abs() > 1e-6 {
                return Err(sd_err(1, format!("arc {i} is not tangent to the contact line")));
            }
        }

        let (pts, owner) = self.polygon(opts.node_spacing.min(0.05 * scale));
        if polygon_area(&pts) <= 0.0 {
            return Err(sd_err(4, "arcs do not enclose a counterclockwise region"));
        }
        // (1) and (5): the only contact is at x0
        let x0 = self.x0();
        let delta = 1e-4 * scale;
        let excl = opts.plateau.max(0.05 * scale);
        for c in detect_self_intersection(&pts, delta).contacts {
            if (c.point - x0).norm() > excl {
                let (ra, rb) = (self.arcs[owner[c.seg_a]].role, self.arcs[owner[c.seg_b]].role);
                let condition = if ra != ArcRole::Other && rb != ArcRole::Other { 5 } else { 1 };
                return Err(sd_err(
                    condition,
                    format!(
                        "boundary touches itself away from the contact point, near ({:.4}, {:.4}) between arcs {} and {}",
                        c.point.x, c.point.y, owner[c.seg_a], owner[c.seg_b]
                    ),
                ));
            }
        }
        // (2): domain on both sides of the tangent line at x0, outside along it
        let t = Vec2::new(-nrm.y, nrm.x);
        let d = 1e-3 * scale;
        if !point_in_polygon(&pts, x0 + nrm * d) || !point_in_polygon(&pts, x0 - nrm * d) {
            return Err(sd_err(2, "domain does not lie on both sides of the contact tangent line"));
        }
        if point_in_polygon(&pts, x0 + t * d) || point_in_polygon(&pts, x0 - t * d) {
            return Err(sd_err(2, "tangent line at the contact enters the domain"));
        }
        for (i, side) in [(plus0, 1.0), (minus0, -1.0)] {
            let p = self.arcs[i].point(0.25);
            if side * (p - x0).dot(&nrm) < 0.0 {
                return Err(sd_err(2, format!("arc {i} lies on the wrong side of the contact tangent line")));
            }
        }
        Ok(())
    }

    /// Closed polyline through all arcs and the owning arc of each segment.
    fn polygon(&self, spacing: f64) -> (Vec<Vec2>, Vec<usize>) {
        let mut pts = Vec::new();
        let mut owner = Vec::new();
        for (i, a) in self.arcs.iter().enumerate() {
            let us = sample_params(&|u| a.point(u), f64::INFINITY, &|_| spacing);
            for &u in &us[..us.len() - 1] {
                pts.push(a.point(u));
                owner.push(i);
            }
        }
        (pts, owner)
    }

    /// Signed arclength from the contact point along the `theta_plus` run,
    /// for arc `i` at parameter `u`. Only meaningful for `theta_plus` arcs.
    fn plus_arclength(&self, lens: &[ArcLength], i: usize, u: f64) -> f64 {
        let n = self.arcs.len();
        let (_, start) = self.run(ArcRole::ThetaPlus).expect("validated");
        // walk forward from x0 for arcs at or after `start`, backward otherwise
        let mut s = 0.0;
        let mut k = start;
        loop {
            if k == i {
                return s + lens[k].at(u);
            }
            s += lens[k].total();
            k = (k + 1) % n;
            if self.arcs[k].role != ArcRole::ThetaPlus {
                break;
            }
        }
        let mut s = 0.0;
        let mut k = (start + n - 1) % n;
        loop {
            if k == i {
                return -(s + lens[k].total() - lens[k].at(u));
            }
            s += lens[k].total();
            k = (k + n - 1) % n;
        }
    }

    /// Lift deviation `ε ψ(s) n` sampled on a uniform arclength grid over the
    /// `theta_plus` run.
    pub fn plus_deviation(&self, epsilon: f64, opts: &SplashApproxOptions, samples: usize) -> Result<DeviationSamples> {
        let (idx, _) = self.run(ArcRole::ThetaPlus)?;
        let lens: Vec<ArcLength> = self.arcs.iter().map(ArcLength::new).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &idx {
            lo = lo.min(self.plus_arclength(&lens, i, 0.0)).min(self.plus_arclength(&lens, i, 1.0));
            hi = hi.max(self.plus_arclength(&lens, i, 0.0)).max(self.plus_arclength(&lens, i, 1.0));
        }
        let h = (hi - lo) / (samples - 1) as f64;
        let nrm = self.normal();
        let vals: Vec<Vec2> = (0..samples).map(|k| nrm * (epsilon * opts.lift(lo + h * k as f64))).collect();
        Ok(DeviationSamples::vector(&vals, h, false))
    }
}

/// Separates the touching arcs of a splash domain: every `theta_plus` point
/// moves by `ε ψ(s) n` with `ψ` the lift profile in arclength from the
/// contact and `n` the contact normal; all other arcs are unchanged.
/// Nodes on `theta_plus` are tagged `cap_plus`, on `theta_minus` `trough`.
pub fn approximate_splash_domain(sds: &SplashDomainSpec, epsilon: f64, opts: &SplashApproxOptions) -> Result<BoundaryCurve> {
    Ok(approximate_splash_domain_with_targets(sds, epsilon, opts)?.0)
}

/// [`approximate_splash_domain`] together with the unlifted position of each
/// node on the limit boundary (equal to the node off `theta_plus`).
pub fn approximate_splash_domain_with_targets(
    sds: &SplashDomainSpec,
    epsilon: f64,
    opts: &SplashApproxOptions,
) -> Result<(BoundaryCurve, Vec<Vec2>)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidSpec(format!("epsilon must be > 0 (got {epsilon})")));
    }
    sds.validate(opts)?;
    let x0 = sds.x0();
    let nrm = sds.normal();
    let hc = opts.contact_spacing.unwrap_or(0.5 * epsilon).min(opts.node_spacing);
    let spacing = |p: Vec2| opts.node_spacing.min(hc + opts.grading * (p - x0).norm());
    let lens: Vec<ArcLength> = sds.arcs.iter().map(ArcLength::new).collect();
    let (_, plus0) = sds.run(ArcRole::ThetaPlus)?;
    let (_, minus0) = sds.run(ArcRole::ThetaMinus)?;

    let mut nodes = Vec::new();
    let mut tags = Vec::new();
    let mut owner = Vec::new();
    let mut targets = Vec::new();
    let mut x_plus = 0;
    let mut x_minus = 0;
    for (i, a) in sds.arcs.iter().enumerate() {
        if i == plus0 {
            x_plus = nodes.len();
        }
        if i == minus0 {
            x_minus = nodes.len();
        }
        let us = sample_params(&|u| a.point(u), f64::INFINITY, &spacing);
        let tag = match a.role {
            ArcRole::ThetaPlus => RegionTag::CapPlus,
            ArcRole::ThetaMinus => RegionTag::Trough,
            ArcRole::Other => RegionTag::Other,
        };
        for &u in &us[..us.len() - 1] {
            let mut p = a.point(u);
            targets.push(p);
            if a.role == ArcRole::ThetaPlus {
                p += nrm * (epsilon * opts.lift(sds.plus_arclength(&lens, i, u)));
            }
            nodes.push(p);
            tags.push(tag);
            owner.push(i);
        }
    }
    let rep = detect_self_intersection(&nodes, 0.0);
    if let Some(c) = rep.contacts.first() {
        let blocking = if sds.arcs[owner[c.seg_a]].role == ArcRole::ThetaPlus { owner[c.seg_b] } else { owner[c.seg_a] };
        return Err(Error::Geometry(format!(
            "separating the contact by {epsilon} breaks simplicity: lifted arc crosses arc {blocking} near ({:.4}, {:.4})",
            c.point.x, c.point.y
        )));
    }
    Ok((BoundaryCurve::new(nodes, tags, Some(Landmarks { x_plus, x_minus }))?, targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_dinosaur_domain, discrete_sobolev_norm, min_boundary_gap};

    fn limit() -> SplashDomainSpec {
        SplashDomainSpec::dinosaur_limit(&DomainSpec::new(0.05))
    }

    #[test]
    fn dinosaur_limit_is_valid() {
        limit().validate(&SplashApproxOptions::default()).unwrap();
    }

    #[test]
    fn json_round_trip() {
        let s = limit();
        assert_eq!(SplashDomainSpec::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn matches_dinosaur_near_contact() {
        let eps = 0.05;
        let opts = SplashApproxOptions::default();
        let c = approximate_splash_domain(&limit(), eps, &opts).unwrap();
        let d = build_dinosaur_domain(&DomainSpec::new(eps)).unwrap();
        assert!((c.x_plus().unwrap() - Vec2::new(0.0, eps)).norm() < 1e-12);
        // every lifted node inside the plateau lies on the ε-cap circle
        for (p, t) in c.nodes().iter().zip(c.tags()) {
            if *t == RegionTag::CapPlus && p.x.abs() < 0.15 {
                let r = (p - Vec2::new(0.0, eps + 0.5)).norm();
                assert!((r - 0.5).abs() < 1e-3, "{p:?} at radius {r}");
            }
        }
        let g1 = min_boundary_gap(&c, RegionTag::CapPlus, RegionTag::Trough).unwrap().distance;
        let g2 = min_boundary_gap(&d, RegionTag::CapPlus, RegionTag::Trough).unwrap().distance;
        assert!((g1 - g2).abs() < 1e-3 * eps);
    }

    #[test]
    fn gap_halves_with_epsilon() {
        let opts = SplashApproxOptions::default();
        let g = |e: f64| {
            let c = approximate_splash_domain(&limit(), e, &opts).unwrap();
            min_boundary_gap(&c, RegionTag::CapPlus, RegionTag::Trough).unwrap().distance
        };
        for e in [0.1, 0.05] {
            let (a, b) = (g(e), g(e / 2.0));
            assert!(a > 0.0 && a <= e * (1.0 + 1e-9));
            assert!((a / b - 2.0).abs() < 0.2, "ratio {}", a / b);
        }
    }

    #[test]
    fn h3_deviation_linear_in_epsilon() {
        let opts = SplashApproxOptions::default();
        let s = limit();
        let v: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| discrete_sobolev_norm(&s.plus_deviation(e, &opts, 801).unwrap(), 3).unwrap())
            .collect();
        assert!((v[0] / v[1] - 2.0).abs() < 0.3 && (v[1] / v[2] - 2.0).abs() < 0.3);
    }

    #[test]
    fn overhang_fixture_is_valid_and_separates() {
        let s = SplashDomainSpec::overhang_fixture();
        let opts = SplashApproxOptions::default();
        s.validate(&opts).unwrap();
        let c = approximate_splash_domain(&s, 0.05, &opts).unwrap();
        let g = min_boundary_gap(&c, RegionTag::CapPlus, RegionTag::Trough).unwrap();
        assert!(g.distance > 0.0 && g.distance <= 0.05 + 1e-12);
    }

    #[test]
    fn crossing_boundary_rejected_as_non_unique_contact() {
        let mut spec = DomainSpec::new(0.05);
        spec.neck_radius = 0.2;
        spec.arch_radius = 0.1;
        spec.smoothing_radius = 0.05;
        spec.trough_halfwidth = 0.2;
        let s = SplashDomainSpec::dinosaur_limit(&spec);
        match s.validate(&SplashApproxOptions::default()) {
            Err(Error::SplashDomain { condition, .. }) => assert_eq!(condition, 1),
            other => panic!("expected a uniqueness violation, got {other:?}"),
        }
    }
}
