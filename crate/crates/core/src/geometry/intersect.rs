use serde::Serialize;

use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    /// Two segments cross or touch.
    Crossing,
    /// Two segments far apart along the curve come closer than the tolerance.
    NearContact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contact {
    pub kind: ContactKind,
    /// Segment `i` joins node `i` to node `i + 1` (mod n); `seg_a < seg_b`.
    pub seg_a: usize,
    pub seg_b: usize,
    pub point: Vec2,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub contacts: Vec<Contact>,
    /// Zero-length segments ignored by the scan.
    pub skipped_degenerate: usize,
}

impl IntersectionReport {
    pub fn is_simple(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn crossings(&self) -> impl Iterator<Item = &Contact> {
        self.contacts.iter().filter(|c| c.kind == ContactKind::Crossing)
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Intersection point of closed segments `[p1, p2]` and `[q1, q2]`, if any.
/// Collinear overlaps report the first overlapping end point.
pub fn segment_intersection(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Option<Vec2> {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        let t = d1 / (d1 - d2);
        return Some(p1 + (p2 - p1) * t);
    }
    if d1 == 0.0 && on_segment(q1, q2, p1) {
        return Some(p1);
    }
    if d2 == 0.0 && on_segment(q1, q2, p2) {
        return Some(p2);
    }
    if d3 == 0.0 && on_segment(p1, p2, q1) {
        return Some(q1);
    }
    if d4 == 0.0 && on_segment(p1, p2, q2) {
        return Some(q2);
    }
    None
}

fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    let q = a + d * t;
    ((p - q).norm(), q)
}

/// Distance between two non-intersecting segments and the midpoint of the closest pair.
fn segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> (f64, Vec2) {
    let mut best = (f64::INFINITY, Vec2::zeros());
    for (p, a, b) in [(p1, q1, q2), (p2, q1, q2), (q1, p1, p2), (q2, p1, p2)] {
        let (d, q) = point_segment(p, a, b);
        if d < best.0 {
            best = (d, (p + q) * 0.5);
        }
    }
    best
}

/// Scans a closed polyline for crossings between non-adjacent segments and
/// for near contacts closer than `delta` between segments separated by more
/// than `4 delta` of arc length. Segments are swept in order of their left
/// end, so only pairs with overlapping x-extents are tested.
pub fn detect_self_intersection(points: &[Vec2], delta: f64) -> IntersectionReport {
    let n = points.len();
    let mut report = IntersectionReport::default();
    if n < 3 {
        return report;
    }
    let seg = |i: usize| (points[i], points[(i + 1) % n]);
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        let (a, b) = seg(i);
        cum[i + 1] = cum[i] + (b - a).norm();
    }
    let perimeter = cum[n];
    let arc_sep = |i: usize, j: usize| {
        // length of the shorter polyline path between the two segments
        let (i, j) = (i.min(j), i.max(j));
        let inner = cum[j] - cum[i + 1];
        let outer = perimeter - cum[j + 1] + cum[i];
        inner.min(outer).max(0.0)
    };

    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = seg(i);
        if a == b {
            report.skipped_degenerate += 1;
        } else {
            order.push(i);
        }
    }
    // next non-degenerate segment after each segment
    let degenerate = |i: usize| seg(i).0 == seg(i).1;
    let next: Vec<usize> = (0..n)
        .map(|i| (1..=n).map(|k| (i + k) % n).find(|&j| !degenerate(j)).unwrap_or(i))
        .collect();
    let lo = |i: usize| {
        let (a, b) = seg(i);
        a.x.min(b.x)
    };
    order.sort_by(|&i, &j| lo(i).total_cmp(&lo(j)).then(i.cmp(&j)));

    let pad = delta.max(0.0);
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let (a, b) = seg(i);
        let x0 = a.x.min(b.x);
        active.retain(|&j| {
            let (c, d) = seg(j);
            c.x.max(d.x) + pad >= x0
        });
        for &j in &active {
            let adjacent = next[i] == j || next[j] == i;
            if adjacent {
                continue;
            }
            let (c, d) = seg(j);
            if a.y.min(b.y) > c.y.max(d.y) + pad || c.y.min(d.y) > a.y.max(b.y) + pad {
                continue;
            }
            let (sa, sb) = (i.min(j), i.max(j));
            if let Some(p) = segment_intersection(a, b, c, d) {
                report.contacts.push(Contact { kind: ContactKind::Crossing, seg_a: sa, seg_b: sb, point: p, gap: 0.0 });
            } else if pad > 0.0 {
                let (g, p) = segment_distance(a, b, c, d);
                if g < pad && arc_sep(i, j) > 4.0 * pad {
                    report.contacts.push(Contact { kind: ContactKind::NearContact, seg_a: sa, seg_b: sb, point: p, gap: g });
                }
            }
        }
        active.push(i);
    }
    report.contacts.sort_by(|x, y| (x.seg_a, x.seg_b).cmp(&(y.seg_a, y.seg_b)));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// All-pairs oracle with its own parametric crossing test.
    fn brute_force(points: &[Vec2]) -> Vec<(usize, usize)> {
        let n = points.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (p, p2) = (points[i], points[(i + 1) % n]);
                let (q, q2) = (points[j], points[(j + 1) % n]);
                let r = p2 - p;
                let s = q2 - q;
                let den = r.x * s.y - r.y * s.x;
                if den == 0.0 {
                    continue;
                }
                let qp = q - p;
                let t = (qp.x * s.y - qp.y * s.x) / den;
                let u = (qp.x * r.y - qp.y * r.x) / den;
                if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn figure_eight_has_one_crossing() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        let rep = detect_self_intersection(&pts, 0.0);
        assert_eq!(rep.contacts.len(), 1);
        assert_eq!((rep.contacts[0].seg_a, rep.contacts[0].seg_b), (0, 2));
        assert!((rep.contacts[0].point - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn near_contact_reported_below_tolerance() {
        // thin U shape whose arms are 0.01 apart
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 0.01),
            Vec2::new(0.0, 0.01),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(-1.0, -1.0),
            Vec2::new(0.0, -1.0),
        ];
        let rep = detect_self_intersection(&pts, 0.02);
        assert!(rep.contacts.iter().any(|c| c.kind == ContactKind::NearContact));
        assert!(detect_self_intersection(&pts, 0.005).is_simple());
    }

    #[test]
    fn zero_length_segments_skipped() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let rep = detect_self_intersection(&pts, 0.0);
        assert_eq!(rep.skipped_degenerate, 1);
        assert!(rep.is_simple());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn sweep_matches_all_pairs(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..=64)) {
            let pts: Vec<Vec2> = raw.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let got: Vec<(usize, usize)> = detect_self_intersection(&pts, 0.0)
                .contacts
                .iter()
                .map(|c| (c.seg_a, c.seg_b))
                .collect();
            prop_assert_eq!(got, brute_force(&pts));
        }
    }
}
