use std::fmt::Write as _;
use std::path::Path;

use super::GroupSummary;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;

/// Smallest of 1, 2, 5 x 10^k that is at least `raw`.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Standalone SVG with one box-and-whiskers glyph per non-empty group.
/// Whiskers span min to max; the box spans q1 to q3 with a median line.
/// The vertical axis is linear from zero.
pub fn render_boxplot(summaries: &[GroupSummary]) -> Result<String> {
    let groups: Vec<&GroupSummary> = summaries.iter().filter(|s| s.count > 0).collect();
    if groups.is_empty() {
        return Err(Error::Empty("no non-empty group to plot"));
    }
    let top = groups.iter().filter_map(|g| g.max).fold(0.0, f64::max);
    let step = if top > 0.0 { nice_step(top / 5.0) } else { 1.0 };
    let y_max = ((top / step).ceil() * step).max(step);

    let plot_h = HEIGHT - TOP - BOTTOM;
    let plot_w = WIDTH - LEFT - RIGHT;
    let y = |v: f64| TOP + plot_h * (1.0 - v / y_max);
    let slot = plot_w / groups.len() as f64;
    let box_w = slot * 0.5;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.6}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{LEFT}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let ticks = (y_max / step).round() as usize;
    for k in 0..=ticks {
        let v = k as f64 * step;
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{:.6}" y1="{:.6}" x2="{LEFT}" y2="{:.6}" stroke="black"/><text x="{:.6}" y="{:.6}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            y(v),
            y(v),
            LEFT - 8.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.6}" transform="rotate(-90 15 {:.6})" text-anchor="middle">iterations</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.6}" y="{:.6}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        groups[0].parameter
    );

    for (k, g) in groups.iter().enumerate() {
        let (min, q1, med, q3, max) = (
            g.min.unwrap_or(0.0),
            g.q1.unwrap_or(0.0),
            g.median.unwrap_or(0.0),
            g.q3.unwrap_or(0.0),
            g.max.unwrap_or(0.0),
        );
        let cx = LEFT + slot * (k as f64 + 0.5);
        let (x0, x1) = (cx - box_w / 2.0, cx + box_w / 2.0);
        let _ = writeln!(s, r#"<g class="group" data-key="{}">"#, g.group_key());
        let _ = writeln!(
            s,
            r#"<line class="whisker" x1="{cx:.6}" y1="{:.6}" x2="{cx:.6}" y2="{:.6}" stroke="black"/>"#,
            y(max),
            y(min)
        );
        for v in [min, max] {
            let _ = writeln!(
                s,
                r#"<line class="cap" x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="black"/>"#,
                cx - box_w / 4.0,
                y(v),
                cx + box_w / 4.0,
                y(v)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect class="box" x="{x0:.6}" y="{:.6}" width="{box_w:.6}" height="{:.6}" fill="#9ecae1" stroke="black"/>"##,
            y(q3),
            y(q1) - y(q3)
        );
        let _ = writeln!(
            s,
            r#"<line class="median" x1="{x0:.6}" y1="{:.6}" x2="{x1:.6}" y2="{:.6}" stroke="black" stroke-width="2"/>"#,
            y(med),
            y(med)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.6}" y="{:.6}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            g.value
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_boxplot(summaries: &[GroupSummary], output_path: impl AsRef<Path>) -> Result<String> {
    let svg = render_boxplot(summaries)?;
    std::fs::write(output_path, &svg)?;
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SweptParameter;

    fn summary(value: f64, v: [f64; 5]) -> GroupSummary {
        GroupSummary {
            parameter: SweptParameter::Alpha,
            value,
            count: 5,
            non_converged: 0,
            min: Some(v[0]),
            q1: Some(v[1]),
            median: Some(v[2]),
            q3: Some(v[3]),
            max: Some(v[4]),
        }
    }

    fn attr(elem: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let start = elem.find(&key).unwrap() + key.len();
        let end = start + elem[start..].find('"').unwrap();
        elem[start..end].parse().unwrap()
    }

    fn elements<'a>(svg: &'a str, class: &str) -> Vec<&'a str> {
        svg.lines()
            .filter(|l| l.contains(&format!("class=\"{class}\"")))
            .collect()
    }

    #[test]
    fn box_extent_scales_linearly() {
        let svg = render_boxplot(&[
            summary(0.0, [1.0, 2.0, 3.0, 4.0, 5.0]),
            summary(1.0, [2.0, 4.0, 6.0, 8.0, 10.0]),
        ])
        .unwrap();
        let boxes = elements(&svg, "box");
        let whiskers = elements(&svg, "whisker");
        assert_eq!(boxes.len(), 2);
        let (h0, h1) = (attr(boxes[0], "height"), attr(boxes[1], "height"));
        assert!(h0 > 0.0 && (h1 - 2.0 * h0).abs() < 1e-5);
        let span = |w: &str| attr(w, "y2") - attr(w, "y1");
        assert!((span(whiskers[1]) - 2.0 * span(whiskers[0])).abs() < 1e-5);
    }

    #[test]
    fn degenerate_box_is_a_line() {
        let svg = render_boxplot(&[summary(0.3, [7.0; 5])]).unwrap();
        let b = elements(&svg, "box")[0];
        assert_eq!(attr(b, "height"), 0.0);
        let m = elements(&svg, "median")[0];
        assert_eq!(attr(m, "y1"), attr(b, "y"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(render_boxplot(&[]).is_err());
        let mut empty = summary(0.0, [1.0; 5]);
        empty.count = 0;
        assert!(render_boxplot(&[empty]).is_err());
    }

    #[test]
    fn output_is_byte_stable() {
        let s = [summary(0.0, [1.0, 2.0, 3.0, 4.0, 5.0])];
        assert_eq!(render_boxplot(&s).unwrap(), render_boxplot(&s).unwrap());
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(2.0), 2.0);
        assert_eq!(nice_step(3.0), 5.0);
        assert_eq!(nice_step(7.0), 10.0);
        assert_eq!(nice_step(0.3), 0.5);
    }
}
