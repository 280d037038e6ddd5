//! Deterministic SVG and monospace renderings of chart payloads.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::intervene::{ChartKind, VisualizationSpec};

const WIDTH: u32 = 640;
const LABEL_X: u32 = 150;
const BAR_X: u32 = 160;
const BAR_MAX: f64 = 400.0;
const BAR_HEIGHT: u32 = 24;
const ROW: u32 = 36;
const TOP: u32 = 70;
const TEXT_BAR_MAX: f64 = 40.0;

const FILL: &str = "#9e9e9e";
const FILL_HIGHLIGHT: &str = "#e6550d";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartFormat {
    Svg,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("unsupported chart format `{0}` (expected svg or text)")]
    UnsupportedFormat(String),
    #[error("chart has no bars")]
    Empty,
    #[error("a self-vs-average chart needs exactly 2 bars, found {0}")]
    BarCount(usize),
    #[error("bar `{0}` has a negative or non-finite value")]
    InvalidValue(String),
}

impl FromStr for ChartFormat {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svg" => Ok(ChartFormat::Svg),
            "text" => Ok(ChartFormat::Text),
            other => Err(RenderError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn validate_spec(spec: &VisualizationSpec) -> Result<(), RenderError> {
    if spec.bars.is_empty() {
        return Err(RenderError::Empty);
    }
    if spec.kind == ChartKind::SelfVsAverage && spec.bars.len() != 2 {
        return Err(RenderError::BarCount(spec.bars.len()));
    }
    if let Some(bad) = spec
        .bars
        .iter()
        .find(|b| !b.seconds.is_finite() || b.seconds < 0.0)
    {
        return Err(RenderError::InvalidValue(bad.label.clone()));
    }
    Ok(())
}

pub fn render_chart(spec: &VisualizationSpec, format: ChartFormat) -> Result<String, RenderError> {
    validate_spec(spec)?;
    Ok(match format {
        ChartFormat::Svg => render_svg(spec),
        ChartFormat::Text => render_text(spec),
    })
}

fn title(spec: &VisualizationSpec) -> &'static str {
    match spec.kind {
        ChartKind::PerMember => "Speaking time by member",
        ChartKind::SelfVsAverage => "Your speaking time vs. the average of others",
    }
}

fn seconds_label(s: f64) -> String {
    if s.fract() == 0.0 {
        format!("{s:.0} s")
    } else {
        format!("{s:.1} s")
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn scale(spec: &VisualizationSpec, max_len: f64) -> impl Fn(f64) -> f64 {
    let max = spec.bars.iter().map(|b| b.seconds).fold(0.0, f64::max);
    move |s| if max > 0.0 { s / max * max_len } else { 0.0 }
}

fn render_svg(spec: &VisualizationSpec) -> String {
    let height = TOP + ROW * spec.bars.len() as u32 + 10;
    let len = scale(spec, BAR_MAX);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r##"<rect width="{WIDTH}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(
        svg,
        r#"<text x="20" y="28" font-size="16" font-weight="bold">{}</text>"#,
        title(spec)
    );
    let _ = writeln!(
        svg,
        r##"<text x="20" y="48" font-size="12" fill="#555555">as of {} s</text>"##,
        spec.as_of_t
    );
    for (i, bar) in spec.bars.iter().enumerate() {
        let y = TOP + ROW * i as u32;
        let w = len(bar.seconds);
        let fill = if bar.highlight { FILL_HIGHLIGHT } else { FILL };
        let _ = writeln!(
            svg,
            r#"<text x="{LABEL_X}" y="{}" font-size="13" text-anchor="end">{}</text>"#,
            y + 17,
            escape(&bar.label)
        );
        let _ = writeln!(
            svg,
            r#"<rect class="bar{}" x="{BAR_X}" y="{y}" width="{w:.3}" height="{BAR_HEIGHT}" fill="{fill}"/>"#,
            if bar.highlight { " highlight" } else { "" }
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{}" font-size="12">{}</text>"#,
            f64::from(BAR_X) + w + 6.0,
            y + 17,
            seconds_label(bar.seconds)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_text(spec: &VisualizationSpec) -> String {
    let len = scale(spec, TEXT_BAR_MAX);
    let label_width = spec
        .bars
        .iter()
        .map(|b| b.label.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = format!("{} (as of {} s)\n", title(spec), spec.as_of_t);
    for bar in &spec.bars {
        let n = len(bar.seconds).round() as usize;
        let mark = if bar.highlight { " *" } else { "" };
        let _ = writeln!(
            out,
            "{:<label_width$} |{:<width$}| {}{mark}",
            bar.label,
            "#".repeat(n),
            seconds_label(bar.seconds),
            width = TEXT_BAR_MAX as usize,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervene::Bar;

    fn bar(label: &str, seconds: f64, highlight: bool) -> Bar {
        Bar {
            label: label.into(),
            seconds,
            highlight,
        }
    }

    fn per_member() -> VisualizationSpec {
        VisualizationSpec {
            kind: ChartKind::PerMember,
            bars: vec![bar("C", 50.0, true), bar("B", 100.0, true), bar("A", 300.0, false)],
            as_of_t: 600,
        }
    }

    fn rect_widths(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.starts_with("<rect class=\"bar"))
            .map(|l| {
                let start = l.find("width=\"").unwrap() + 7;
                let rest = &l[start..];
                rest[..rest.find('"').unwrap()].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn svg_bars_are_proportional() {
        let svg = render_chart(&per_member(), ChartFormat::Svg).unwrap();
        let widths = rect_widths(&svg);
        assert_eq!(widths.len(), 3);
        // 400 px for the longest bar.
        let expected = [50.0 / 300.0 * 400.0, 100.0 / 300.0 * 400.0, 400.0];
        for (w, e) in widths.iter().zip(expected) {
            assert!((w - e).abs() < 1e-3, "{w} vs {e}");
        }
        assert!(widths.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(svg.matches("bar highlight").count(), 2);
        assert_eq!(svg, render_chart(&per_member(), ChartFormat::Svg).unwrap());
    }

    #[test]
    fn self_vs_average_has_two_bars() {
        let spec = VisualizationSpec {
            kind: ChartKind::SelfVsAverage,
            bars: vec![bar("A", 400.0, true), bar("Average of others", 100.0, false)],
            as_of_t: 900,
        };
        let svg = render_chart(&spec, ChartFormat::Svg).unwrap();
        assert_eq!(rect_widths(&svg).len(), 2);
        let text = render_chart(&spec, ChartFormat::Text).unwrap();
        assert_eq!(text.lines().count(), 3);

        let mut bad = spec;
        bad.bars.pop();
        assert_eq!(render_chart(&bad, ChartFormat::Text), Err(RenderError::BarCount(1)));
    }

    #[test]
    fn text_rendering() {
        let text = render_chart(&per_member(), ChartFormat::Text).unwrap();
        let expected = format!(
            "Speaking time by member (as of 600 s)\nC |{:<40}| 50 s *\nB |{:<40}| 100 s *\nA |{}| 300 s\n",
            "#".repeat(7),
            "#".repeat(13),
            "#".repeat(40)
        );
        assert_eq!(text, expected);
    }

    #[test]
    fn rejects_bad_input() {
        let empty = VisualizationSpec {
            kind: ChartKind::PerMember,
            bars: vec![],
            as_of_t: 0,
        };
        assert_eq!(render_chart(&empty, ChartFormat::Svg), Err(RenderError::Empty));
        assert!(matches!("png".parse::<ChartFormat>(), Err(RenderError::UnsupportedFormat(_))));
        let mut neg = per_member();
        neg.bars[0].seconds = -1.0;
        assert!(matches!(render_chart(&neg, ChartFormat::Svg), Err(RenderError::InvalidValue(_))));
    }

    #[test]
    fn labels_are_escaped_and_zero_charts_render() {
        let spec = VisualizationSpec {
            kind: ChartKind::PerMember,
            bars: vec![bar("<A&B>", 0.0, false)],
            as_of_t: 1,
        };
        let svg = render_chart(&spec, ChartFormat::Svg).unwrap();
        assert!(svg.contains("&lt;A&amp;B&gt;"));
        assert_eq!(rect_widths(&svg), vec![0.0]);
    }
}
