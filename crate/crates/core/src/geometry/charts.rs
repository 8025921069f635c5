use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use super::{DomainSpec, CAP_RADIUS};
use crate::{Mat2, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Boundary,
    Interior,
}

/// Which part of the undilated domain the chart covers, and hence how it is
/// carried over to Ω^ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartRole {
    /// Neck channel: vertically dilated about altitude 3/2.
    Neck,
    /// Everything below and beside the neck: unchanged.
    Mid,
    /// Cap: translated down by 1 - ε.
    Cap,
}

/// Local boundary profile of a boundary chart, as a graph `f` over the
/// tangent line with `f(0) = f'(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Flat,
    /// Circle of the given radius, bending toward the interior.
    Circle { radius: f64 },
}

impl Profile {
    fn value(&self, u: f64) -> f64 {
        match *self {
            Profile::Flat => 0.0,
            Profile::Circle { radius } => radius - (radius * radius - u * u).sqrt(),
        }
    }
}

/// Chart of the undilated domain on the unit ball.
///
/// Interior charts are `c + s z`. Boundary charts are graph charts
/// `c + Q (s z1, f(s z1) + s z2)` with `Q` a rotation whose second column is
/// the inward normal, so the half ball `z2 > 0` lands inside the domain.
/// Both have constant Jacobian determinant `s^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseChart {
    pub center: Vec2,
    pub scale: f64,
    pub frame: Mat2,
    pub profile: Option<Profile>,
}

impl BaseChart {
    pub fn interior(center: Vec2, scale: f64) -> Self {
        Self { center, scale, frame: Mat2::identity(), profile: None }
    }

    pub fn boundary(center: Vec2, scale: f64, tangent: Vec2, profile: Profile) -> Self {
        let t = tangent.normalize();
        let n_in = Vec2::new(-t.y, t.x);
        Self { center, scale, frame: Mat2::from_columns(&[t, n_in]), profile: Some(profile) }
    }

    pub fn map(&self, z: Vec2) -> Vec2 {
        let s = self.scale;
        match self.profile {
            None => self.center + z * s,
            Some(p) => {
                let u = s * z.x;
                self.center + self.frame * Vec2::new(u, p.value(u) + s * z.y)
            }
        }
    }

    pub fn jacobian_det(&self) -> f64 {
        self.scale * self.scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub label: usize,
    pub kind: ChartKind,
    pub role: ChartRole,
    pub base: BaseChart,
    pub epsilon: f64,
    pub neck_height: f64,
}

impl Chart {
    /// Vertical stretch applied on top of the base chart.
    pub fn dilation_factor(&self) -> f64 {
        match self.role {
            ChartRole::Neck => (self.neck_height + 1.0 - self.epsilon) / self.neck_height,
            _ => 1.0,
        }
    }

    /// The map taking the undilated domain to Ω^ε near this chart.
    pub fn transform(&self, x: Vec2) -> Vec2 {
        match self.role {
            ChartRole::Neck => Vec2::new(x.x, self.dilation_factor() * (x.y - 1.5) + 0.5 + self.epsilon),
            ChartRole::Mid => x,
            ChartRole::Cap => Vec2::new(x.x, x.y - (1.0 - self.epsilon)),
        }
    }

    pub fn map(&self, z: Vec2) -> Vec2 {
        self.transform(self.base.map(z))
    }

    pub fn jacobian_det(&self) -> f64 {
        self.dilation_factor() * self.base.jacobian_det()
    }

    /// Central-difference Jacobian determinant at `z`.
    pub fn fd_jacobian_det(&self, z: Vec2, h: f64) -> f64 {
        let dx = (self.map(z + Vec2::new(h, 0.0)) - self.map(z - Vec2::new(h, 0.0))) / (2.0 * h);
        let dy = (self.map(z + Vec2::new(0.0, h)) - self.map(z - Vec2::new(0.0, h))) / (2.0 * h);
        Mat2::from_columns(&[dx, dy]).determinant()
    }
}

/// Chart system of Ω^ε: a cover of the undilated domain by graph and interior
/// charts, each composed with the neck dilation, the identity or the cap
/// translation.
pub fn build_charts(spec: &DomainSpec) -> Result<Vec<Chart>> {
    spec.validate()?;
    let r = spec.neck_radius;
    let h = spec.neck_height;
    let a = spec.arch_radius;
    let mut out = Vec::new();
    let mut push = |kind, role, base| {
        let label = out.len();
        out.push(Chart { label, kind, role, base, epsilon: spec.epsilon, neck_height: h });
    };
    use ChartKind::*;
    use ChartRole::*;

    let ns = 0.45 * r;
    for k in 0..3 {
        let y = 1.5 + h * (k as f64 + 0.5) / 3.0;
        push(Boundary, Neck, BaseChart::boundary(Vec2::new(-r, y), ns, Vec2::new(0.0, -1.0), Profile::Flat));
        push(Boundary, Neck, BaseChart::boundary(Vec2::new(r, y), ns, Vec2::new(0.0, 1.0), Profile::Flat));
        push(Interior, Neck, BaseChart::interior(Vec2::new(0.0, y), 0.9 * r));
    }

    // undilated cap: pole at (0, 1), centre at (0, 3/2)
    let cc = Vec2::new(0.0, 1.0 + CAP_RADIUS);
    let cs = 0.3 * CAP_RADIUS;
    let circle = Profile::Circle { radius: CAP_RADIUS };
    for ang in [-FRAC_PI_4, 0.0, FRAC_PI_4] {
        let dir = Vec2::new(ang.sin(), -ang.cos());
        let tangent = Vec2::new(-dir.y, dir.x);
        push(Boundary, Cap, BaseChart::boundary(cc + dir * CAP_RADIUS, cs, tangent, circle));
    }
    push(Interior, Cap, BaseChart::interior(cc - Vec2::new(0.0, 0.2), 0.25));

    let w = spec.trough_halfwidth;
    push(Boundary, Mid, BaseChart::boundary(Vec2::zeros(), 0.5 * w, Vec2::new(-1.0, 0.0), Profile::Flat));
    push(Interior, Mid, BaseChart::interior(Vec2::new(0.0, -0.5 * spec.body_extent[1]), 0.4 * spec.body_extent[1]));
    push(Interior, Mid, BaseChart::interior(Vec2::new(-r - a, 1.5 + h + a + r), 0.9 * r));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_dinosaur_domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neck_dilation_factor() {
        let mut spec = DomainSpec::new(0.5);
        spec.neck_height = 2.0;
        let charts = build_charts(&spec).unwrap();
        let neck = charts.iter().find(|c| c.role == ChartRole::Neck).unwrap();
        assert_eq!(neck.dilation_factor(), 1.25);
        assert!((neck.jacobian_det() - 1.25 * neck.base.jacobian_det()).abs() < 1e-15);
        let cap = charts.iter().find(|c| c.role == ChartRole::Cap).unwrap();
        assert_eq!(cap.jacobian_det(), cap.base.jacobian_det());
    }

    #[test]
    fn dilation_fixes_neck_ends() {
        let mut spec = DomainSpec::new(0.07);
        spec.neck_height = 2.0;
        let charts = build_charts(&spec).unwrap();
        let neck = charts.iter().find(|c| c.role == ChartRole::Neck).unwrap();
        assert!((neck.transform(Vec2::new(0.1, 1.5)).y - 0.57).abs() < 1e-12);
        assert!((neck.transform(Vec2::new(0.1, 3.5)).y - 3.5).abs() < 1e-12);
    }

    #[test]
    fn sampled_jacobian_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for eps in [0.5, 0.05] {
            let charts = build_charts(&DomainSpec::new(eps)).unwrap();
            for c in &charts {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for _ in 0..100 {
                    let z = loop {
                        let z = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        if z.norm() < 0.95 {
                            break z;
                        }
                    };
                    let d = c.fd_jacobian_det(z, 1e-3);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                assert!(hi / lo - 1.0 <= 1e-10, "chart {} ratio {}", c.label, hi / lo - 1.0);
                assert!((hi / c.jacobian_det() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_charts_land_on_the_curve() {
        let spec = DomainSpec::new(0.05);
        let curve = build_dinosaur_domain(&spec).unwrap();
        let charts = build_charts(&spec).unwrap();
        for c in charts.iter().filter(|c| c.kind == ChartKind::Boundary) {
            let p = c.map(Vec2::zeros());
            let d = curve
                .nodes()
                .windows(2)
                .map(|w| {
                    let t = ((p - w[0]).dot(&(w[1] - w[0])) / (w[1] - w[0]).norm_squared()).clamp(0.0, 1.0);
                    (p - (w[0] + (w[1] - w[0]) * t)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-3, "chart {} centre {p:?} off the curve by {d}", c.label);
            let inside = c.map(Vec2::new(0.0, 0.5));
            assert!(crate::geometry::point_in_polygon(curve.nodes(), inside));
        }
    }
}
