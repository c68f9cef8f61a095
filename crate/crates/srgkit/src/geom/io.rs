//! JSON and SVG export of regions.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::region::{Region, Structure};
use crate::C64;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlagsDoc {
    pub chord: String,
    pub left_arc: String,
    pub right_arc: String,
}

/// Serializable snapshot of a region.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegionDoc {
    pub curves: Vec<Vec<[f64; 2]>>,
    pub interior: Vec<[f64; 2]>,
    pub contains_infinity: bool,
    pub structure: serde_json::Value,
    pub flags: FlagsDoc,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Snapshot of `r` with an interior fill of at most `interior_grid^2` points.
pub fn region_json(r: &Region, interior_grid: usize) -> RegionDoc {
    let structure = match r.structure() {
        Structure::ExactDisk { alpha, beta } => serde_json::json!({"kind": "EXACT_DISK", "alpha": alpha, "beta": beta}),
        Structure::HconvexHull => serde_json::json!({"kind": "HCONVEX_HULL"}),
        Structure::Generic => serde_json::json!({"kind": "GENERIC"}),
    };
    RegionDoc {
        curves: r.curves().iter().map(|c| c.points.iter().copied().map(pair).collect()).collect(),
        interior: if interior_grid == 0 { Vec::new() } else { r.interior_samples(interior_grid).into_iter().map(pair).collect() },
        contains_infinity: r.contains_infinity(),
        structure,
        flags: FlagsDoc {
            chord: r.chord_flag().as_str().into(),
            left_arc: r.left_arc_flag().as_str().into(),
            right_arc: r.right_arc_flag().as_str().into(),
        },
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// SVG plot of labelled regions (filled interior dots plus boundary) and
/// optional overlay polylines, framed to `view` or the union of bounding boxes.
pub fn region_svg(regions: &[(&str, &Region)], overlays: &[(&str, &[C64])], view: Option<(C64, C64)>) -> String {
    let (lo, hi) = view.unwrap_or_else(|| {
        let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        let boxes = regions.iter().filter_map(|(_, r)| r.bbox());
        let pts = overlays.iter().flat_map(|(_, p)| p.iter().map(|&z| (z, z)));
        for (a, b) in boxes.chain(pts) {
            lo = C64::new(lo.re.min(a.re), lo.im.min(a.im));
            hi = C64::new(hi.re.max(b.re), hi.im.max(b.im));
        }
        if !lo.re.is_finite() {
            return (C64::new(-1.0, -1.0), C64::new(1.0, 1.0));
        }
        let cap = 50.0;
        let lo = C64::new(lo.re.max(-cap), lo.im.max(-cap));
        let hi = C64::new(hi.re.min(cap), hi.im.min(cap));
        let pad = 0.05 * (hi - lo).norm().max(1e-3);
        (lo - C64::new(pad, pad), hi + C64::new(pad, pad))
    });
    let (w, h) = (hi.re - lo.re, hi.im - lo.im);
    let size = 600.0;
    let scale = size / w.max(h);
    let px = |z: C64| ((z.re - lo.re) * scale, (hi.im - z.im) * scale);
    let inside = |z: C64| z.re >= lo.re && z.re <= hi.re && z.im >= lo.im && z.im <= hi.im;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.1} {:.1}">"#,
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    let (ox, oy) = px(C64::new(0.0, 0.0));
    let _ = writeln!(s, r##"<line x1="0" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}" stroke="#999" stroke-width="0.5"/>"##, w * scale);
    let _ = writeln!(s, r##"<line x1="{ox:.2}" y1="0" x2="{ox:.2}" y2="{:.2}" stroke="#999" stroke-width="0.5"/>"##, h * scale);
    for (k, (label, r)) in regions.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g id="{label}" fill="{color}" stroke="{color}">"#);
        // Interior fill as a dot grid evaluated on the view.
        let n = 120;
        for j in 0..n {
            for i in 0..n {
                let z = C64::new(lo.re + w * (i as f64 + 0.5) / n as f64, lo.im + h * (j as f64 + 0.5) / n as f64);
                if r.contains_strict(z) {
                    let (x, y) = px(z);
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6" fill-opacity="0.25" stroke="none"/>"#);
                }
            }
        }
        for c in r.curves() {
            let pts: Vec<String> = c
                .points
                .iter()
                .filter(|z| inside(**z))
                .map(|&z| {
                    let (x, y) = px(z);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            if pts.is_empty() {
                continue;
            }
            let tag = if c.closed { "polygon" } else { "polyline" };
            let _ = writeln!(s, r#"<{tag} points="{}" fill="none" stroke-width="1"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "</g>");
    }
    for (k, (label, p)) in overlays.iter().enumerate() {
        let color = PALETTE[(k + regions.len()) % PALETTE.len()];
        let pts: Vec<String> = p
            .iter()
            .filter(|z| inside(**z))
            .map(|&z| {
                let (x, y) = px(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline id="{label}" points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::disk_region;

    #[test]
    fn json_round_trip() {
        let d = disk_region(0.0, 1.0).unwrap();
        let doc = region_json(&d, 8);
        assert_eq!(doc.structure["kind"], "EXACT_DISK");
        assert_eq!(doc.flags.chord, "GUARANTEED");
        assert!(!doc.interior.is_empty());
        let text = serde_json::to_string(&doc).unwrap();
        let back: RegionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn svg_has_groups() {
        let d = disk_region(-1.0, 1.0).unwrap();
        let s = region_svg(&[("d", &d)], &[], None);
        assert!(s.starts_with("<svg") && s.contains(r#"<g id="d""#));
    }
}
