//! SVG rendering of data maps and density bar charts, plus the plot table
//! export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{label_regions, parse_unit, DynamicsSummary, Region, SUMMARIES_HEADER};
use crate::error::{Error, Result};

/// Marker shape drawn for one correctness bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlyphShape {
    Diamond,
    TriangleDown,
    Circle,
    CircleFilled,
    Square,
    Plus,
}

impl GlyphShape {
    pub fn as_str(self) -> &'static str {
        match self {
            GlyphShape::Diamond => "diamond",
            GlyphShape::TriangleDown => "triangle-down",
            GlyphShape::Circle => "circle",
            GlyphShape::CircleFilled => "circle-filled",
            GlyphShape::Square => "square",
            GlyphShape::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessBucket {
    pub value: f64,
    pub shape: GlyphShape,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotConfig {
    pub width_px: u32,
    pub height_px: u32,
    pub margin_px: u32,
    pub glyph_size_px: f64,
    pub correctness_buckets: Vec<CorrectnessBucket>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        let bucket = |value, shape, color: &str| CorrectnessBucket {
            value,
            shape,
            color: color.to_string(),
        };
        Self {
            width_px: 1000,
            height_px: 800,
            margin_px: 70,
            glyph_size_px: 5.0,
            correctness_buckets: vec![
                bucket(0.0, GlyphShape::Diamond, "#d62728"),
                bucket(0.2, GlyphShape::TriangleDown, "#9467bd"),
                bucket(0.4, GlyphShape::Circle, "#1f77b4"),
                bucket(0.6, GlyphShape::CircleFilled, "#17becf"),
                bucket(0.8, GlyphShape::Square, "#bcbd22"),
                bucket(1.0, GlyphShape::Plus, "#8c564b"),
            ],
        }
    }
}

const LEGEND_WIDTH: f64 = 150.0;
const MIN_VARIABILITY_SPAN: f64 = 0.05;

impl PlotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.correctness_buckets.is_empty() {
            return Err(Error::config("plot needs at least one correctness bucket"));
        }
        for w in self.correctness_buckets.windows(2) {
            if w[1].value <= w[0].value {
                return Err(Error::config(
                    "correctness buckets must be strictly increasing in value",
                ));
            }
        }
        let m = 2.0 * self.margin_px as f64;
        if self.width_px as f64 <= m + LEGEND_WIDTH + 10.0 || self.height_px as f64 <= m + 10.0 {
            return Err(Error::config("plot size too small for its margins"));
        }
        if self.glyph_size_px.is_nan() || self.glyph_size_px <= 0.0 {
            return Err(Error::config("glyph_size_px must be positive"));
        }
        Ok(())
    }

    /// The bucket nearest to `correctness`; ties go to the lower bucket.
    pub fn bucket_for(&self, correctness: f64) -> &CorrectnessBucket {
        let mut best = &self.correctness_buckets[0];
        for b in &self.correctness_buckets[1..] {
            if (b.value - correctness).abs() < (best.value - correctness).abs() - 1e-12 {
                best = b;
            }
        }
        best
    }

    fn plot_area(&self) -> PlotArea {
        let m = self.margin_px as f64;
        PlotArea {
            left: m,
            right: self.width_px as f64 - m - LEGEND_WIDTH,
            top: m,
            bottom: self.height_px as f64 - m,
        }
    }
}

struct PlotArea {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl PlotArea {
    fn x(&self, v: f64, max: f64) -> f64 {
        self.left + (self.right - self.left) * (v / max)
    }

    fn y(&self, v: f64) -> f64 {
        self.bottom - (self.bottom - self.top) * v
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, config: &PlotConfig, title: &str) {
    let (w, h) = (config.width_px, config.height_px);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        w as f64 / 2.0,
        config.margin_px as f64 / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, area: &PlotArea, x_max: f64, y_max: f64, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333"/>"##,
        area.left,
        area.top,
        area.right - area.left,
        area.bottom - area.top
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let x = area.left + (area.right - area.left) * t;
        let y = area.bottom - (area.bottom - area.top) * t;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##,
            area.bottom,
            area.bottom + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            area.bottom + 20.0,
            tick_label(x_max * t)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#333333"/>"##,
            area.left - 5.0,
            area.left
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            area.left - 8.0,
            y + 4.0,
            tick_label(y_max * t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        (area.left + area.right) / 2.0,
        area.bottom + 45.0,
        escape(x_label)
    );
    let cy = (area.top + area.bottom) / 2.0;
    let cx = area.left - 50.0;
    let _ = writeln!(
        out,
        r#"<text x="{cx:.2}" y="{cy:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() >= 1.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn glyph(out: &mut String, class: &str, bucket: &CorrectnessBucket, x: f64, y: f64, s: f64) {
    let c = &bucket.color;
    let shape = bucket.shape.as_str();
    let _ = match bucket.shape {
        GlyphShape::Diamond => writeln!(
            out,
            r#"<path class="{class} {shape}" d="M {x:.2} {:.2} L {:.2} {y:.2} L {x:.2} {:.2} L {:.2} {y:.2} Z" fill="{c}" fill-opacity="0.7"/>"#,
            y - s,
            x + s,
            y + s,
            x - s
        ),
        GlyphShape::TriangleDown => writeln!(
            out,
            r#"<path class="{class} {shape}" d="M {:.2} {:.2} L {:.2} {:.2} L {x:.2} {:.2} Z" fill="{c}" fill-opacity="0.7"/>"#,
            x - s,
            y - s,
            x + s,
            y - s,
            y + s
        ),
        GlyphShape::Circle => writeln!(
            out,
            r#"<circle class="{class} {shape}" cx="{x:.2}" cy="{y:.2}" r="{s:.2}" fill="none" stroke="{c}"/>"#
        ),
        GlyphShape::CircleFilled => writeln!(
            out,
            r#"<circle class="{class} {shape}" cx="{x:.2}" cy="{y:.2}" r="{s:.2}" fill="{c}" fill-opacity="0.7"/>"#
        ),
        GlyphShape::Square => writeln!(
            out,
            r#"<rect class="{class} {shape}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.7"/>"#,
            x - s,
            y - s,
            2.0 * s,
            2.0 * s
        ),
        GlyphShape::Plus => writeln!(
            out,
            r#"<path class="{class} {shape}" d="M {:.2} {y:.2} H {:.2} M {x:.2} {:.2} V {:.2}" stroke="{c}" stroke-width="1.5" fill="none"/>"#,
            x - s,
            x + s,
            y - s,
            y + s
        ),
    };
}

/// Data map: variability on x, confidence on y, one glyph per summary
/// (class `glyph <shape>`), shaped by correctness bucket.
pub fn render_map(summaries: &[DynamicsSummary], config: &PlotConfig) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::data("cannot plot an empty data map"));
    }
    config.validate()?;
    let area = config.plot_area();
    let x_max = summaries
        .iter()
        .map(|s| s.variability)
        .fold(MIN_VARIABILITY_SPAN, f64::max);

    let mut out = String::new();
    header(&mut out, config, "Data map");
    axes(&mut out, &area, x_max, 1.0, "variability", "confidence");

    out.push_str("<g class=\"glyphs\">\n");
    for s in summaries {
        let bucket = config.bucket_for(s.correctness);
        let x = area.x(s.variability.clamp(0.0, x_max), x_max);
        let y = area.y(s.confidence.clamp(0.0, 1.0));
        glyph(&mut out, "glyph", bucket, x, y, config.glyph_size_px);
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"legend\">\n");
    let lx = area.right + 25.0;
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{:.2}" font-family="sans-serif" font-size="13">correctness</text>"#,
        area.top
    );
    for (i, b) in config.correctness_buckets.iter().enumerate() {
        let ly = area.top + 22.0 * (i as f64 + 1.0);
        glyph(
            &mut out,
            "legend-glyph",
            b,
            lx + 6.0,
            ly - 4.0,
            config.glyph_size_px,
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="12">{:.1}</text>"#,
            lx + 20.0,
            b.value
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Bar chart of a density histogram (`(bin_start, count)` pairs over
/// [0, 1]); bar heights are proportional to counts.
pub fn render_density(
    histogram: &[(f64, usize)],
    dimension_name: &str,
    config: &PlotConfig,
) -> Result<String> {
    if histogram.is_empty() {
        return Err(Error::data("cannot plot an empty histogram"));
    }
    config.validate()?;
    let area = config.plot_area();
    let max_count = histogram.iter().map(|b| b.1).max().unwrap_or(0);
    let y_max = max_count.max(1) as f64;
    let bins = histogram.len() as f64;
    let bar_w = (area.right - area.left) / bins;

    let mut out = String::new();
    header(&mut out, config, &format!("Density of {dimension_name}"));
    axes(&mut out, &area, 1.0, y_max, dimension_name, "count");
    out.push_str("<g class=\"bars\">\n");
    for (i, (_, count)) in histogram.iter().enumerate() {
        let h = (area.bottom - area.top) * (*count as f64 / y_max);
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#1f77b4" stroke="#ffffff"/>"##,
            area.left + bar_w * i as f64,
            area.bottom - h,
            bar_w
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// One row of the exported plot table.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub summary: DynamicsSummary,
    pub region: Region,
}

/// `summaries.csv` plus a `region` column.
pub fn export_plot_table(summaries: &[DynamicsSummary]) -> Result<String> {
    let regions = label_regions(summaries)?;
    let mut out = format!("{SUMMARIES_HEADER},region\n");
    for s in summaries {
        let region = regions.get(&s.id).expect("every id is labeled");
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{region}",
            s.id, s.confidence, s.variability, s.correctness
        );
    }
    Ok(out)
}

pub fn parse_plot_table(body: &str) -> Result<Vec<PlotRow>> {
    let mut lines = body.lines();
    let expected = format!("{SUMMARIES_HEADER},region");
    if lines.next() != Some(expected.as_str()) {
        return Err(Error::data(format!(
            "plot table header must be {expected:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::data(format!("line {n}: expected 5 columns")));
        }
        out.push(PlotRow {
            summary: DynamicsSummary {
                id: f[0].to_string(),
                confidence: parse_unit(f[1], "confidence", n)?,
                variability: parse_unit(f[2], "variability", n)?,
                correctness: parse_unit(f[3], "correctness", n)?,
            },
            region: f[4].parse()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(id: &str, confidence: f64, variability: f64, correctness: f64) -> DynamicsSummary {
        DynamicsSummary {
            id: id.into(),
            confidence,
            variability,
            correctness,
        }
    }

    fn count(doc: &str, needle: &str) -> usize {
        doc.matches(needle).count()
    }

    #[test]
    fn all_correct_is_one_plus() {
        let doc = render_map(&[summary("a", 0.9, 0.1, 1.0)], &PlotConfig::default()).unwrap();
        assert_eq!(count(&doc, "class=\"glyph "), 1);
        assert_eq!(count(&doc, "class=\"glyph plus\""), 1);
    }

    #[test]
    fn never_correct_is_one_diamond() {
        let doc = render_map(&[summary("a", 0.1, 0.1, 0.0)], &PlotConfig::default()).unwrap();
        assert_eq!(count(&doc, "class=\"glyph "), 1);
        assert_eq!(count(&doc, "class=\"glyph diamond\""), 1);
    }

    #[test]
    fn top_left_corner() {
        let config = PlotConfig::default();
        let doc = render_map(&[summary("a", 1.0, 0.0, 0.4)], &config).unwrap();
        let m = config.margin_px as f64;
        let expected = format!(r#"class="glyph circle" cx="{m:.2}" cy="{m:.2}""#);
        assert!(doc.contains(&expected), "{doc}");
    }

    #[test]
    fn empty_map_rejected() {
        assert!(render_map(&[], &PlotConfig::default()).is_err());
        assert!(render_density(&[], "confidence", &PlotConfig::default()).is_err());
    }

    #[test]
    fn bucket_lookup_for_other_epoch_counts() {
        let c = PlotConfig::default();
        assert_eq!(c.bucket_for(0.5).shape, GlyphShape::Circle);
        assert_eq!(c.bucket_for(0.66).shape, GlyphShape::CircleFilled);
        assert_eq!(c.bucket_for(0.95).shape, GlyphShape::Plus);
    }

    fn bar_heights(doc: &str) -> Vec<f64> {
        doc.lines()
            .filter(|l| l.contains("class=\"bar\""))
            .map(|l| {
                let rest = &l[l.find("height=\"").unwrap() + 8..];
                rest[..rest.find('"').unwrap()].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn density_bars_proportional() {
        let c = PlotConfig::default();
        let doc = render_density(&[(0.0, 9)], "confidence", &c).unwrap();
        let full = (c.height_px - 2 * c.margin_px) as f64;
        assert_eq!(bar_heights(&doc), [full]);

        let doc = render_density(&[(0.0, 1), (0.5, 2)], "confidence", &c).unwrap();
        let h = bar_heights(&doc);
        assert!((h[1] / h[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn plot_table_round_trip() {
        let s = vec![
            summary("a", 0.9, 0.05, 1.0),
            summary("b", 0.5, 0.4, 0.6),
            summary("c", 0.1, 0.02, 0.0),
        ];
        let csv = export_plot_table(&s).unwrap();
        assert_eq!(csv.lines().count(), 4);
        let rows = parse_plot_table(&csv).unwrap();
        let back: Vec<_> = rows.iter().map(|r| r.summary.clone()).collect();
        assert_eq!(back, s);
        assert_eq!(rows[1].region, Region::Ambiguous);
    }
}
