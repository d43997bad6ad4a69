//! Self-contained SVG regret plots.

use std::fmt::Write;

use crate::harness::AggregateRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Regret curves with shaded `mean +- stderr` bands and a legend, one series
/// per policy in input order.
pub fn render_svg(title: &str, groups: &[(String, Vec<AggregateRow>)]) -> String {
    let max_round = groups
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|r| r.round))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let top = groups
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|r| r.mean_regret + r.stderr))
        .fold(0.0f64, f64::max);
    let y_max = if top > 0.0 { top * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |round: f64| LEFT + round / max_round * plot_w;
    let py = |v: f64| TOP + plot_h - v / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (f * max_round, f * y_max);
        let (x, y) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0,
            tick_label(xv.round())
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label((yv * 100.0).round() / 100.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (policy, rows)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let id = escape(policy);
        let upper = rows.iter().map(|r| (px(r.round as f64), py(r.mean_regret + r.stderr)));
        let lower = rows
            .iter()
            .rev()
            .map(|r| (px(r.round as f64), py(r.mean_regret - r.stderr)));
        let band: Vec<String> = upper.chain(lower).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" data-policy="{id}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.round as f64), py(r.mean_regret)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-policy="{id}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
    }

    for (i, (policy, _)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 12.0 + 18.0 * i as f64;
        let x = LEFT + 12.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(policy)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(policy: &str, pts: &[(usize, f64, f64)]) -> (String, Vec<AggregateRow>) {
        let rows = pts
            .iter()
            .map(|&(round, mean_regret, stderr)| AggregateRow {
                policy: policy.into(),
                round,
                mean_regret,
                stderr,
            })
            .collect();
        (policy.into(), rows)
    }

    #[test]
    fn zero_width_band_for_single_instance() {
        let g = vec![rows("linucb", &[(10, 1.0, 0.0), (20, 2.0, 0.0)])];
        let svg = render_svg("t", &g);
        assert_eq!(svg.matches("class=\"curve\"").count(), 1);
        let band = svg.lines().find(|l| l.contains("class=\"band\"")).unwrap();
        let curve = svg.lines().find(|l| l.contains("class=\"curve\"")).unwrap();
        let pts = |l: &str| {
            l.split("points=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .to_string()
        };
        // Upper edge of the band is the curve itself.
        assert!(pts(band).starts_with(&pts(curve)));
    }

    #[test]
    fn flat_zero_curve_sits_on_axis() {
        let g = vec![rows("oracle", &[(5, 0.0, 0.0), (10, 0.0, 0.0)])];
        let svg = render_svg("t", &g);
        let base = format!("{:.2}", TOP + HEIGHT - TOP - BOTTOM);
        let curve = svg.lines().find(|l| l.contains("class=\"curve\"")).unwrap();
        assert_eq!(curve.matches(&format!(",{base}")).count(), 2);
    }

    #[test]
    fn legend_per_policy() {
        let g = vec![rows("linphe(a=0.5)", &[(10, 1.0, 0.1)]), rows("a<b", &[(10, 2.0, 0.2)])];
        let svg = render_svg("t", &g);
        assert_eq!(svg.matches("class=\"legend\"").count(), 2);
        assert!(svg.contains(">linphe(a=0.5)</text>"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(PALETTE[0]) && svg.contains(PALETTE[1]));
    }
}
