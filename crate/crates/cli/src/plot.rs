//! Self-contained SVG 1.1 heatmaps and line plots.

use std::fmt::Write;

use crate::output::PlotInfo;

pub const COLORMAP: &str = "viridis";

/// Viridis anchors at 0, 1/8, …, 1.
const VIRIDIS: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (71, 44, 122),
    (59, 81, 139),
    (44, 113, 142),
    (33, 144, 141),
    (39, 173, 129),
    (92, 200, 99),
    (170, 220, 50),
    (253, 231, 37),
];

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn viridis(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

fn finite_range(values: impl IntoIterator<Item = f64>) -> [f64; 2] {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return [0.0, 1.0];
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return [lo - 0.5, hi + 0.5];
    }
    [lo, hi]
}

fn label(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{x:.2e}")
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: u32, h: u32, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect width="{w}" height="{h}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2,
        escape(title)
    );
}

/// Heatmap of `values` (row-major, `ys.len()` rows of `xs.len()`), with the
/// first axis running up the page.
pub fn heatmap(
    file: &str,
    title: &str,
    metric: &str,
    xs: &[f64],
    ys: &[f64],
    x_label: &str,
    y_label: &str,
    values: &[f64],
) -> (String, PlotInfo) {
    let (left, top, size) = (70.0, 40.0, 400.0);
    let range = finite_range(values.iter().copied());
    let (nx, ny) = (xs.len(), ys.len());
    let (cw, ch) = (size / nx as f64, size / ny as f64);
    let mut s = String::new();
    header(&mut s, 600, 510, title);
    for (iy, row) in values.chunks(nx).enumerate() {
        for (ix, v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                viridis((v - range[0]) / (range[1] - range[0]))
            } else {
                "#bbbbbb".into()
            };
            let x = left + ix as f64 * cw;
            let y = top + size - (iy + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    for k in 0..5 {
        let f = k as f64 / 4.0;
        let ix = ((nx - 1) as f64 * f).round() as usize;
        let iy = ((ny - 1) as f64 * f).round() as usize;
        let px = left + (ix as f64 + 0.5) * cw;
        let py = top + size - (iy as f64 + 0.5) * ch;
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            top + size + 16.0,
            label(xs[ix])
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            py + 4.0,
            label(ys[iy])
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + size / 2.0,
        top + size + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        top + size / 2.0,
        top + size / 2.0,
        escape(y_label)
    );
    // colour bar
    let bx = left + size + 25.0;
    for k in 0..100 {
        let t = k as f64 / 99.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{:.2}" width="18" height="4.1" fill="{}"/>"#,
            top + size - (k as f64 + 1.0) * 4.0,
            viridis(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{top}" width="18" height="{size}" fill="none" stroke="black"/>"#
    );
    for k in 0..5 {
        let f = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 24.0,
            top + size - f * size + 4.0,
            label(range[0] + f * (range[1] - range[0]))
        );
    }
    s.push_str("</svg>\n");
    let info = PlotInfo {
        file: file.into(),
        metric: metric.into(),
        kind: "heatmap".into(),
        colormap: Some(COLORMAP.into()),
        x_scale: "linear".into(),
        value_range: range,
    };
    (s, info)
}

/// Line plot of several series over a shared x axis. Non-finite points
/// break the line.
pub fn line_plot(
    file: &str,
    title: &str,
    metric: &str,
    xs: &[f64],
    x_label: &str,
    log_x: bool,
    series: &[(String, Vec<f64>)],
) -> (String, PlotInfo) {
    let (left, top, w, h) = (80.0, 40.0, 460.0, 340.0);
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let xr = finite_range(xs.iter().map(|x| tx(*x)));
    let yr = finite_range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let px = |x: f64| left + (tx(x) - xr[0]) / (xr[1] - xr[0]) * w;
    let py = |y: f64| top + h - (y - yr[0]) / (yr[1] - yr[0]) * h;
    let mut s = String::new();
    header(&mut s, 600, 450, title);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    for k in 0..5 {
        let f = k as f64 / 4.0;
        let xv = xr[0] + f * (xr[1] - xr[0]);
        let xv = if log_x { 10f64.powf(xv) } else { xv };
        let yv = yr[0] + f * (yr[1] - yr[0]);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + f * w,
            top + h + 16.0,
            label(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + h - f * h + 4.0,
            label(yv)
        );
    }
    for (n, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (x, y) in xs.iter().zip(ys) {
            if !(x.is_finite() && y.is_finite()) || (log_x && *x <= 0.0) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(*x), py(*y));
            pen_down = true;
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            d.trim_end()
        );
        let ly = top + 16.0 + 16.0 * n as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            left + w - 150.0,
            left + w - 130.0,
            left + w - 125.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        top + h + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        top + h / 2.0,
        top + h / 2.0,
        escape(metric)
    );
    s.push_str("</svg>\n");
    let info = PlotInfo {
        file: file.into(),
        metric: metric.into(),
        kind: "line".into(),
        colormap: None,
        x_scale: if log_x { "log10" } else { "linear" }.into(),
        value_range: yr,
    };
    (s, info)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(viridis(0.0), "#440154");
        assert_eq!(viridis(1.0), "#fde725");
        assert_eq!(viridis(-3.0), viridis(0.0));
    }

    #[test]
    fn heatmap_is_well_formed() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0];
        let v = [1.0, 2.0, f64::NAN, 4.0, 5.0, 6.0];
        let (svg, info) = heatmap("a.svg", "E_N <test>", "e_n", &xs, &ys, "θ₂", "θ₁", &v);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;test&gt;"));
        assert!(svg.contains("#bbbbbb"));
        assert_eq!(info.value_range, [1.0, 6.0]);
        assert!(!svg.contains("href"));
    }

    #[test]
    fn line_plot_breaks_on_nan() {
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let series = vec![("a".to_string(), vec![1.0, f64::NAN, 3.0, 4.0])];
        let (svg, info) = line_plot("b.svg", "t", "m", &xs, "Ω", true, &series);
        assert_eq!(svg.matches('M').count() - svg.matches("M ").count() >= 2, true);
        assert_eq!(info.x_scale, "log10");
        assert_eq!(info.value_range, [1.0, 4.0]);
    }

    #[test]
    fn flat_data_gets_a_range() {
        assert_eq!(finite_range([2.0, 2.0]), [1.5, 2.5]);
        assert_eq!(finite_range([f64::NAN]), [0.0, 1.0]);
    }
}
