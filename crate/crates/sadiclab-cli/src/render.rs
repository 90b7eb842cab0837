//! Figure emission: SVG for point clouds and stepped-surface patches, with a
//! binary PPM fallback for very large clouds.
//!
//! Output is a pure function of its inputs. Coordinates are printed with a
//! fixed precision, so the same configuration gives byte-identical files.
//! Every figure embeds the run configuration as a comment block.

use std::fmt::Write as _;

use sadiclab::discrete_geometry::Patch;
use sadiclab::rauzy::PointCloud;

/// Clouds with more points than this are rendered as PPM in `auto` mode.
pub const SVG_POINT_LIMIT: usize = 200_000;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const LEGEND: f64 = 90.0;
const PPM_SIZE: usize = 1000;

/// Fill colours indexed by label (cycled for large alphabets).
const PALETTE: [(u8, u8, u8); 8] = [
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
];

fn color(index: usize) -> (u8, u8, u8) {
    PALETTE[index % PALETTE.len()]
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// An XML comment holding the configuration text. `--` cannot occur inside
/// XML comments, so it is broken up.
fn comment_block(config_text: &str) -> String {
    let body = config_text.replace("--", "- -");
    format!("<!--\nsadiclab run configuration\n{body}-->\n")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Affine map from data coordinates into a box of the figure.
struct Viewport {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
    height: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = [f64; 2]>, width: f64, height: f64) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        if !min[0].is_finite() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        let span = [(max[0] - min[0]).max(1e-12), (max[1] - min[1]).max(1e-12)];
        let scale = ((width - 2.0 * MARGIN) / span[0]).min((height - 2.0 * MARGIN) / span[1]);
        let offset = [
            MARGIN + 0.5 * (width - 2.0 * MARGIN - scale * span[0]),
            MARGIN + 0.5 * (height - 2.0 * MARGIN - scale * span[1]),
        ];
        Viewport {
            min,
            scale,
            offset,
            height,
        }
    }

    /// Data to pixel coordinates (y axis pointing up).
    fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.offset[0] + (p[0] - self.min[0]) * self.scale,
            self.height - (self.offset[1] + (p[1] - self.min[1]) * self.scale),
        ]
    }
}

/// Planar coordinates of a cloud point. One-dimensional clouds are drawn on
/// a horizontal line; higher-dimensional ones use their first two
/// coordinates.
fn planar(coords: &[f64]) -> [f64; 2] {
    [
        coords.first().copied().unwrap_or(0.0),
        coords.get(1).copied().unwrap_or(0.0),
    ]
}

fn labels_of(cloud: &PointCloud) -> Vec<usize> {
    let mut labels: Vec<usize> = cloud.points.iter().map(|p| p.label.index()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels
}

fn legend(out: &mut String, y0: f64, lines: &[String], labels: &[usize]) {
    for (k, line) in lines.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{:.1}" font-family="monospace" font-size="12">{}</text>"#,
            y0 + 16.0 * k as f64,
            escape(line)
        );
    }
    let y = y0 + 16.0 * lines.len() as f64;
    for (k, &l) in labels.iter().enumerate() {
        let x = MARGIN + 90.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12">tile {}</text>"#,
            y - 9.0,
            hex(color(l)),
            x + 14.0,
            y,
            l + 1
        );
    }
}

/// SVG rendering of a labelled point cloud, coloured by label, with a legend
/// naming the directive, the frame and the number of points.
pub fn cloud_svg(cloud: &PointCloud, config_text: &str) -> String {
    let one_dim = cloud.frame.dim() == 2;
    let plot_h = if one_dim { 200.0 } else { SIZE };
    let view = Viewport::fit(cloud.points.iter().map(|p| planar(&p.coords)), SIZE, plot_h);
    let total_h = plot_h + LEGEND;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    out.push_str(&comment_block(config_text));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{total_h}" viewBox="0 0 {SIZE} {total_h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let labels = labels_of(cloud);
    for &l in &labels {
        let _ = writeln!(
            out,
            r#"<g fill="{}" stroke="{}">"#,
            hex(color(l)),
            hex(color(l))
        );
        for p in cloud.points.iter().filter(|p| p.label.index() == l) {
            let [x, y] = view.map(planar(&p.coords));
            if one_dim {
                // Short vertical ticks show the segments; a line of dots
                // would hide where one interval ends and the next begins.
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke-width="0.5"/>"#,
                    y - 12.0,
                    y + 12.0
                );
            } else {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="0.9" stroke="none"/>"#
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }
    let lines = vec![
        format!(
            "directive {}  ·  {} points ({} per limit sequence)",
            cloud.directive,
            cloud.len(),
            cloud.depth
        ),
        format!(
            "frame u = ({})  w = ({})",
            fmt_vec(cloud.frame.u()),
            fmt_vec(cloud.frame.w())
        ),
    ];
    legend(&mut out, plot_h + 20.0, &lines, &labels);
    out.push_str("</svg>\n");
    out
}

/// Binary PPM (`P6`) rendering of a cloud; the configuration is written as
/// header comment lines.
pub fn cloud_ppm(cloud: &PointCloud, config_text: &str) -> Vec<u8> {
    let n = PPM_SIZE;
    let view = Viewport::fit(
        cloud.points.iter().map(|p| planar(&p.coords)),
        n as f64,
        n as f64,
    );
    let mut pixels = vec![255u8; n * n * 3];
    for p in &cloud.points {
        let [x, y] = view.map(planar(&p.coords));
        let (xi, yi) = (x.round() as i64, y.round() as i64);
        if (0..n as i64).contains(&xi) && (0..n as i64).contains(&yi) {
            let k = (yi as usize * n + xi as usize) * 3;
            let (r, g, b) = color(p.label.index());
            pixels[k..k + 3].copy_from_slice(&[r, g, b]);
        }
    }
    let mut header = String::from("P6\n# sadiclab run configuration\n");
    for line in config_text.lines() {
        let _ = writeln!(header, "# {line}");
    }
    let _ = write!(header, "{n} {n}\n255\n");
    let mut out = header.into_bytes();
    out.extend_from_slice(&pixels);
    out
}

/// SVG rendering of a three-dimensional patch of unit faces, projected
/// orthogonally onto the plane `x₁ + x₂ + x₃ = 0`. Returns `None` for other
/// dimensions.
pub fn patch_svg(patch: &Patch, title: &str, config_text: &str) -> Option<String> {
    if patch.iter().next().is_some_and(|f| f.dim() != 3) {
        return None;
    }
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6f64.sqrt();
    let proj = |x: [f64; 3]| [(x[0] - x[1]) / s2, (x[0] + x[1] - 2.0 * x[2]) / s6];
    let polygons: Vec<(usize, Vec<[f64; 2]>)> = patch
        .iter()
        .map(|f| {
            let x = [f.x[0] as f64, f.x[1] as f64, f.x[2] as f64];
            let i = f.i.index();
            let (j, k) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let corner = |a: f64, b: f64| {
                let mut p = x;
                p[j] += a;
                p[k] += b;
                proj(p)
            };
            (
                i,
                vec![
                    corner(0.0, 0.0),
                    corner(1.0, 0.0),
                    corner(1.0, 1.0),
                    corner(0.0, 1.0),
                ],
            )
        })
        .collect();
    let view = Viewport::fit(
        polygons.iter().flat_map(|(_, c)| c.iter().copied()),
        SIZE,
        SIZE,
    );
    let total_h = SIZE + LEGEND;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    out.push_str(&comment_block(config_text));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{total_h}" viewBox="0 0 {SIZE} {total_h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, corners) in &polygons {
        let pts: Vec<String> = corners
            .iter()
            .map(|&c| {
                let [x, y] = view.map(c);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" stroke="black" stroke-width="0.3"/>"#,
            pts.join(" "),
            hex(color(*i))
        );
    }
    legend(
        &mut out,
        SIZE + 20.0,
        &[format!("{title}  ·  {} faces", patch.len())],
        &[0, 1, 2],
    );
    out.push_str("</svg>\n");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sadiclab::rauzy::{rauzy_cloud, ProjectionFrame};
    use sadiclab::sadic::DirectiveSequence;

    fn cloud() -> PointCloud {
        let sigma = DirectiveSequence::parse("tribonacci").unwrap();
        let frame = ProjectionFrame::for_directive(&sigma, None).unwrap();
        rauzy_cloud(&sigma, &frame, 300).unwrap()
    }

    #[test]
    fn svg_is_deterministic_and_embeds_config() {
        let c = cloud();
        let a = cloud_svg(&c, "command = fractal\nn = 300\n");
        assert_eq!(a, cloud_svg(&c, "command = fractal\nn = 300\n"));
        assert!(a.contains("<!--\nsadiclab run configuration\ncommand = fractal\nn = 300\n-->"));
        assert_eq!(a.matches("<circle").count(), 300);
        assert!(a.contains("tile 3"));
    }

    #[test]
    fn comments_cannot_be_closed_early() {
        let s = comment_block("output = a-->b\n");
        assert_eq!(s.matches("-->").count(), 1);
    }

    #[test]
    fn ppm_header_and_size() {
        let bytes = cloud_ppm(&cloud(), "command = fractal\n");
        let text = String::from_utf8_lossy(&bytes[..80]);
        assert!(text.starts_with(
            "P6\n# sadiclab run configuration\n# command = fractal\n1000 1000\n255\n"
        ));
        let header_len = text.find("255\n").unwrap() + 4;
        assert_eq!(bytes.len(), header_len + PPM_SIZE * PPM_SIZE * 3);
    }

    #[test]
    fn patch_polygons() {
        let svg = patch_svg(&Patch::unit_seed(3), "seed", "").unwrap();
        assert_eq!(svg.matches("<polygon").count(), 3);
        assert!(patch_svg(&Patch::unit_seed(2), "seed", "").is_none());
    }
}
