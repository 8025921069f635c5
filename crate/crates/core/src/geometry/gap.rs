use serde::Serialize;

use super::{BoundaryCurve, PeriodicSpline, RegionTag};
use crate::{Error, Result, Vec2};

const SAMPLES_PER_SEGMENT: usize = 8;

/// Closest pair between two sub-curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapResult {
    pub distance: f64,
    pub point_a: Vec2,
    pub point_b: Vec2,
    /// Spline parameters of the two points.
    pub param_a: f64,
    pub param_b: f64,
}

/// Minimum distance between the spline pieces whose segments carry `tag_a`
/// and `tag_b`. A segment carries a tag when both of its end nodes do.
pub fn min_boundary_gap(curve: &BoundaryCurve, tag_a: RegionTag, tag_b: RegionTag) -> Result<GapResult> {
    if tag_a == tag_b {
        return Err(Error::InvalidInput(format!("gap query needs two distinct tags, got {tag_a} twice")));
    }
    let segs = |tag: RegionTag| -> Result<Vec<usize>> {
        let n = curve.len();
        let s: Vec<usize> = (0..n)
            .filter(|&i| curve.tags()[i] == tag && curve.tags()[(i + 1) % n] == tag)
            .collect();
        if s.is_empty() {
            return Err(Error::InvalidInput(format!("no boundary segment tagged {tag}")));
        }
        Ok(s)
    };
    let sa = segs(tag_a)?;
    let sb = segs(tag_b)?;
    Ok(min_gap_between(curve.spline(), &sa, curve.spline(), &sb))
}

/// Minimum distance between segments `seg_a` of spline `a` and `seg_b` of
/// spline `b`: dense sampling followed by Newton refinement of the squared
/// distance, each parameter kept inside its tagged run.
pub fn min_gap_between(a: &PeriodicSpline, seg_a: &[usize], b: &PeriodicSpline, seg_b: &[usize]) -> GapResult {
    let samples = |sp: &PeriodicSpline, segs: &[usize]| -> Vec<(usize, f64, Vec2)> {
        let mut out = Vec::with_capacity(segs.len() * (SAMPLES_PER_SEGMENT + 1));
        for &i in segs {
            out.extend(sp.segment_samples(i, SAMPLES_PER_SEGMENT).map(|(s, p)| (i, s, p)));
            let s_end = sp.knot(i + 1);
            out.push((i, s_end, sp.eval(s_end)));
        }
        out
    };
    let pa = samples(a, seg_a);
    let pb = samples(b, seg_b);

    // best sample pair per segment pair, then refine the few best
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (ia, (_, _, p)) in pa.iter().enumerate() {
        for (ib, (_, _, q)) in pb.iter().enumerate() {
            cands.push(((p - q).norm_squared(), ia, ib));
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut seen: Vec<(usize, usize)> = Vec::new();
    let mut best: Option<GapResult> = None;
    for &(_, ia, ib) in &cands {
        let key = (pa[ia].0, pb[ib].0);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let (lo_a, hi_a) = run_bounds(a, seg_a, pa[ia].0);
        let (lo_b, hi_b) = run_bounds(b, seg_b, pb[ib].0);
        let r = refine(a, b, pa[ia].1, pb[ib].1, (lo_a, hi_a), (lo_b, hi_b));
        if best.map_or(true, |g| r.distance < g.distance) {
            best = Some(r);
        }
        if seen.len() >= 6 {
            break;
        }
    }
    best.expect("non-empty sample sets")
}

/// Parameter interval covering segment `i` and its tagged neighbours.
fn run_bounds(sp: &PeriodicSpline, segs: &[usize], i: usize) -> (f64, f64) {
    let n = sp.len();
    let l = sp.period();
    let prev = (i + n - 1) % n;
    let next = (i + 1) % n;
    let lo = if segs.contains(&prev) {
        let k = sp.knot(prev);
        if prev > i { k - l } else { k }
    } else {
        sp.knot(i)
    };
    let hi = if segs.contains(&next) {
        let k = sp.knot(next + 1);
        if next < i { k + l } else { k }
    } else {
        sp.knot(i + 1)
    };
    (lo, hi)
}

fn refine(a: &PeriodicSpline, b: &PeriodicSpline, s0: f64, t0: f64, ra: (f64, f64), rb: (f64, f64)) -> GapResult {
    let mut s = s0;
    let mut t = t0;
    let mut d2 = (a.eval(s) - b.eval(t)).norm_squared();
    for _ in 0..30 {
        let pa = a.eval(s);
        let pb = b.eval(t);
        let da = a.derivative(s);
        let db = b.derivative(t);
        let dda = a.second_derivative(s);
        let ddb = b.second_derivative(t);
        let r = pa - pb;
        let g = [r.dot(&da), -r.dot(&db)];
        let h11 = da.dot(&da) + r.dot(&dda);
        let h22 = db.dot(&db) - r.dot(&ddb);
        let h12 = -da.dot(&db);
        let det = h11 * h22 - h12 * h12;
        if !(det > 0.0 && h11 > 0.0) {
            break;
        }
        let ds = -(h22 * g[0] - h12 * g[1]) / det;
        let dt = -(h11 * g[1] - h12 * g[0]) / det;
        let mut lam = 1.0;
        let mut accepted = false;
        while lam > 1e-4 {
            let sn = (s + lam * ds).clamp(ra.0, ra.1);
            let tn = (t + lam * dt).clamp(rb.0, rb.1);
            let dn = (a.eval(sn) - b.eval(tn)).norm_squared();
            if dn <= d2 {
                let moved = (sn - s).abs() + (tn - t).abs();
                s = sn;
                t = tn;
                d2 = dn;
                accepted = moved > 1e-15;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    GapResult {
        distance: d2.sqrt(),
        point_a: a.eval(s),
        point_b: b.eval(t),
        param_a: s,
        param_b: t,
    }
}
