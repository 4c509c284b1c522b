use std::fmt::Write;

use super::Trajectory;

/// CSV with header `t,xi1,xi2,theta0,...,thetaN,v1,v2,u1,u2`. Missing
/// `u` samples are written as empty cells.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, |s| s.len().saturating_sub(3));
    let mut out = String::from("t,xi1,xi2");
    for i in 0..=n {
        let _ = write!(out, ",theta{i}");
    }
    out.push_str(",v1,v2,u1,u2\n");
    for (k, t) in traj.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in &traj.states[k] {
            let _ = write!(out, ",{v}");
        }
        let (v1, v2) = traj.v.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
        let _ = write!(out, ",{v1},{v2}");
        match traj.u.get(k) {
            Some((u1, u2)) => {
                let _ = writeln!(out, ",{u1},{u2}");
            }
            None => out.push_str(",,\n"),
        }
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let mut s = String::from("<polyline fill=\"none\" stroke=\"");
    s.push_str(color);
    s.push_str("\" stroke-width=\"1.5\" points=\"");
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s.push_str("\"/>\n");
    s
}

// keep files small: at most ~2000 vertices per polyline
fn stride(len: usize) -> usize {
    len.div_ceil(2000).max(1)
}

/// Path of the last trailer's axle in the `(xi1, xi2)` plane, equal scale
/// on both axes.
pub fn path_svg(traj: &Trajectory, title: &str) -> String {
    let (x0, x1) = bounds(traj.states.iter().map(|s| s[0]));
    let (y0, y1) = bounds(traj.states.iter().map(|s| s[1]));
    let span = (x1 - x0).max(y1 - y0);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let side = (W - 2.0 * MARGIN).min(H - 2.0 * MARGIN);
    let sx = |x: f64| W / 2.0 + (x - cx) / span * side;
    let sy = |y: f64| H / 2.0 - (y - cy) / span * side;
    let step = stride(traj.states.len());
    let mut pts: Vec<(f64, f64)> = traj
        .states
        .iter()
        .step_by(step)
        .map(|s| (sx(s[0]), sy(s[1])))
        .collect();
    if let Some(last) = traj.states.last() {
        pts.push((sx(last[0]), sy(last[1])));
    }
    let mut svg = header(title);
    svg.push_str(&polyline(&pts, "#1f77b4"));
    if let (Some(a), Some(b)) = (pts.first(), pts.last()) {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#2ca02c\"/>",
            a.0, a.1
        );
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#d62728\"/>",
            b.0, b.1
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"12\">xi1 in [{x0:.3}, {x1:.3}], xi2 in [{y0:.3}, {y1:.3}]</text>",
        H - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Stacked panels of `theta0 .. thetaN` against time.
pub fn angle_svg(traj: &Trajectory, title: &str) -> String {
    let n_angles = traj.states.first().map_or(0, |s| s.len() - 2);
    let mut svg = header(title);
    if n_angles == 0 {
        svg.push_str("</svg>\n");
        return svg;
    }
    let panel_h = (H - 2.0 * MARGIN) / n_angles as f64;
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
    let step = stride(traj.states.len());
    for a in 0..n_angles {
        let top = MARGIN + a as f64 * panel_h;
        let (lo, hi) = bounds(traj.states.iter().map(|s| s[2 + a]));
        let sx = |t: f64| MARGIN + (t - t0) / tspan * (W - 2.0 * MARGIN);
        let sy = |v: f64| top + panel_h - 4.0 - (v - lo) / (hi - lo) * (panel_h - 8.0);
        let mut pts: Vec<(f64, f64)> = traj
            .times
            .iter()
            .zip(&traj.states)
            .step_by(step)
            .map(|(t, s)| (sx(*t), sy(s[2 + a])))
            .collect();
        if let (Some(t), Some(s)) = (traj.times.last(), traj.states.last()) {
            pts.push((sx(*t), sy(s[2 + a])));
        }
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{panel_h:.2}\" fill=\"none\" stroke=\"#999\"/>",
            W - 2.0 * MARGIN
        );
        let _ = writeln!(
            svg,
            "<text x=\"4\" y=\"{:.2}\" font-size=\"12\">theta{a}</text>",
            top + panel_h / 2.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">[{lo:.3}, {hi:.3}]</text>",
            W - MARGIN + 2.0,
            top + 12.0
        );
        svg.push_str(&polyline(&pts, "#1f77b4"));
    }
    svg.push_str("</svg>\n");
    svg
}

fn header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"24\" font-size=\"14\">{}</text>",
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![0.0, 0.0, 0.1, 0.2], vec![1.0, 0.0, 0.1, 0.2]],
            v: vec![(0.0, 1.0), (0.0, 1.0)],
            u: vec![],
        };
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,xi1,xi2,theta0,theta1,v1,v2,u1,u2"));
        assert_eq!(lines.next(), Some("0,0,0,0.1,0.2,0,1,,"));
        assert!(path_svg(&traj, "a<b").contains("a&lt;b"));
        assert_eq!(angle_svg(&traj, "t").matches("<polyline").count(), 2);
    }
}
