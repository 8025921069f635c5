use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::elliptic::BoundaryProfile;
use crate::experiments::{RunReport, TrajectoryRow};
use crate::lagrangian::SeriesRow;
use crate::{Result, Vec2};

pub const B0_HEADER: &str = "node,arclength,tag,b0";
pub const FIELD_HEADER: &str = "id,x,y,component,value";

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut s = String::from(SeriesRow::HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from(TrajectoryRow::HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}

pub fn b0_csv(profile: &BoundaryProfile) -> String {
    let mut s = String::from(B0_HEADER);
    s.push('\n');
    for (i, v) in profile.values.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{v}", profile.arclength[i], profile.tags[i].as_str());
    }
    s
}

/// A closed curve drawn as one SVG path.
pub struct SvgCurve<'a> {
    pub points: &'a [Vec2],
    pub class: &'a str,
}

/// A labelled point drawn as a circle.
pub struct SvgMarker<'a> {
    pub at: Vec2,
    pub label: &'a str,
}

/// Standalone SVG document with one `<path>` per curve and one `<circle>`
/// per marker, in a y-up frame.
pub fn svg_document(title: &str, curves: &[SvgCurve], markers: &[SvgMarker]) -> String {
    let pts = curves.iter().flat_map(|c| c.points.iter()).chain(markers.iter().map(|m| &m.at));
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if !lo.x.is_finite() {
        lo = Vec2::zeros();
        hi = Vec2::repeat(1.0);
    }
    let pad = 0.05 * (hi - lo).max().max(1e-9);
    let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let r = 0.01 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="800" height="{:.0}">"#,
        lo.x - pad,
        -hi.y - pad,
        w,
        h,
        800.0 * h / w
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    for c in curves {
        let mut d = String::new();
        for (i, p) in c.points.iter().enumerate() {
            let _ = write!(d, "{}{:.6} {:.6} ", if i == 0 { "M" } else { "L" }, p.x, -p.y);
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path class="{}" d="{d}" fill="none" stroke="black" stroke-width="{:.6}"/>"#,
            escape(c.class),
            0.2 * r
        );
    }
    for m in markers {
        let _ = writeln!(
            s,
            r#"<circle class="landmark" data-label="{}" cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="red"/>"#,
            escape(m.label),
            m.at.x,
            -m.at.y
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Series, trajectory, outcome and (on a splash) the event of one run.
pub fn write_run_tables(dir: &Path, run: &RunReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("series.csv"), series_csv(&run.series))?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(&run.trajectory))?;
    fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(&run.outcome)?)?;
    if let Some(ev) = run.outcome.event() {
        fs::write(dir.join("splash_event.json"), serde_json::to_string_pretty(ev)?)?;
    }
    Ok(())
}

/// SVG frames and restart snapshots of one run.
pub fn write_run_frames(dir: &Path, run: &RunReport) -> Result<()> {
    let lm = run.source.build()?.0.landmarks();
    let frames = dir.join("frames");
    fs::create_dir_all(&frames)?;
    for f in &run.frames {
        let mut markers = Vec::new();
        if let Some(lm) = lm {
            markers.push(SvgMarker { at: f.boundary[lm.x_plus], label: "x_plus" });
            markers.push(SvgMarker { at: f.boundary[lm.x_minus], label: "x_minus" });
        }
        let svg = svg_document(
            &format!("step {} t = {}", f.step, f.t),
            &[SvgCurve { points: &f.boundary, class: "boundary" }],
            &markers,
        );
        fs::write(frames.join(format!("frame_{:06}.svg", f.step)), svg)?;
    }
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for s in &run.snapshots {
        fs::write(snaps.join(format!("snapshot_{:06}.json", s.flow.step)), s.to_json()?)?;
    }
    Ok(())
}
