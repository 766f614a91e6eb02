use std::fmt::Write as _;
use std::str::FromStr;

use super::{ColorToken, InfoPackage, PackageError, RouteFeedback, RouteRole};
use crate::geometry::{BoundingBox, Coord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    /// Lossless JSON.
    Structured,
    /// Self-contained HTML document with an inline SVG map.
    Hypertext,
}

impl FromStr for RenderFormat {
    type Err = PackageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured" | "json" => Ok(RenderFormat::Structured),
            "hypertext" | "html" => Ok(RenderFormat::Hypertext),
            other => Err(PackageError::UnknownFormat(other.to_owned())),
        }
    }
}

impl RenderFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            RenderFormat::Structured => "application/json",
            RenderFormat::Hypertext => "text/html; charset=utf-8",
        }
    }
}

pub fn render_package(pkg: &InfoPackage, format: RenderFormat) -> Result<Vec<u8>, PackageError> {
    match format {
        RenderFormat::Structured => {
            serde_json::to_vec_pretty(pkg).map_err(|e| PackageError::Parse(e.to_string()))
        }
        RenderFormat::Hypertext => Ok(render_html(pkg).into_bytes()),
    }
}

impl InfoPackage {
    /// Inverse of the structured rendering.
    pub fn from_structured(bytes: &[u8]) -> Result<Self, PackageError> {
        serde_json::from_slice(bytes).map_err(|e| PackageError::Parse(e.to_string()))
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn css_color(c: ColorToken) -> &'static str {
    match c {
        ColorToken::Green => "#2e7d32",
        ColorToken::Yellow => "#f9a825",
        ColorToken::Red => "#c62828",
    }
}

const STYLE: &str =
    "body{font-family:sans-serif;max-width:52em;margin:2em auto;padding:0 1em;color:#222}\
section{margin-bottom:2em}table{border-collapse:collapse}\
td,th{border:1px solid #ccc;padding:.3em .6em;text-align:right}\
td:first-child,th:first-child{text-align:left}\
.cat-green{color:#2e7d32}.cat-yellow{color:#b28704}.cat-red{color:#c62828}\
.map svg{border:1px solid #ccc;background:#fafafa}";

const MAP_W: f64 = 600.0;
const MAP_H: f64 = 400.0;
const MAP_PAD: f64 = 20.0;

fn render_html(pkg: &InfoPackage) -> String {
    let h = &pkg.headings;
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"{}\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{}</style>\n</head>\n<body>\n",
        escape(&pkg.locale),
        escape(&h.title),
        STYLE
    );
    let _ = writeln!(
        out,
        "<header><h1>{}</h1><p class=\"participant\">{}</p></header>",
        escape(&h.title),
        escape(&pkg.participant_id)
    );

    // Context
    let _ = writeln!(
        out,
        "<section id=\"context\">\n<h2>{}</h2>",
        escape(&h.context)
    );
    for item in &pkg.section_context {
        let _ = write!(
            out,
            "<article id=\"{}\"><h3>{}</h3><p>{}</p>",
            escape(&item.id),
            escape(&item.title),
            escape(&item.text)
        );
        if let Some(fig) = &item.figure {
            let _ = write!(
                out,
                "<figure data-figure=\"{}\"><figcaption>{}</figcaption></figure>",
                escape(&fig.id),
                escape(&fig.caption)
            );
        }
        out.push_str("</article>\n");
    }
    out.push_str("</section>\n");

    // Feedback
    let fb = &pkg.section_feedback;
    let _ = writeln!(
        out,
        "<section id=\"feedback\">\n<h2>{}</h2>",
        escape(&h.feedback)
    );
    out.push_str(
        "<table>\n<thead><tr><th>Route</th><th>Mode</th><th>Length (m)</th><th>Mean NO2 (ug/m3)</th><th>Category</th><th>Reduction (ug/m3)</th></tr></thead>\n<tbody>\n",
    );
    feedback_row(&mut out, &fb.current);
    for alt in &fb.alternatives {
        feedback_row(&mut out, alt);
    }
    out.push_str("</tbody>\n</table>\n");
    let _ = writeln!(
        out,
        "<div class=\"map\" id=\"map\">{}</div>",
        render_svg(pkg)
    );
    out.push_str("</section>\n");

    // Benefits
    let b = &pkg.section_benefits;
    let _ = writeln!(
        out,
        "<section id=\"benefits\">\n<h2>{}</h2>",
        escape(&h.benefits)
    );
    let _ = writeln!(out, "<p>{}</p>", escape(&b.summary));
    if !b.statements.is_empty() {
        out.push_str("<ul>\n");
        for s in &b.statements {
            let _ = writeln!(
                out,
                "<li data-model=\"{}\">{}</li>",
                escape(&s.model_id),
                escape(&s.text)
            );
        }
        out.push_str("</ul>\n");
    }
    out.push_str("</section>\n");

    // Tips
    let _ = writeln!(
        out,
        "<section id=\"tips\">\n<h2>{}</h2>\n<ul>",
        escape(&h.tips)
    );
    for tip in &pkg.section_tips {
        let _ = writeln!(
            out,
            "<li id=\"{}\"><strong>{}</strong> {}</li>",
            escape(&tip.id),
            escape(&tip.title),
            escape(&tip.text)
        );
    }
    out.push_str("</ul>\n</section>\n");

    let payload = serde_json::to_string(&pkg.map_payload)
        .expect("map payload serializes")
        .replace("</", "<\\/");
    let _ = writeln!(
        out,
        "<script type=\"application/json\" id=\"map-payload\">{payload}</script>"
    );
    out.push_str("</body>\n</html>\n");
    out
}

fn feedback_row(out: &mut String, row: &RouteFeedback) {
    let color = ColorToken::for_category(row.category);
    let _ = writeln!(
        out,
        "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td class=\"cat-{}\">{}</td><td>{}</td></tr>",
        escape(&row.label),
        escape(&row.mode),
        row.length_display,
        row.mean_display,
        color.as_str(),
        row.category.label(),
        row.delta_display.as_deref().unwrap_or("")
    );
}

fn render_svg(pkg: &InfoPackage) -> String {
    let routes = &pkg.map_payload.routes;
    let Some(bbox) = BoundingBox::enclosing(routes.iter().flat_map(|r| r.geometry.iter())) else {
        return String::new();
    };
    let span_x = (bbox.max.x - bbox.min.x).max(1.0);
    let span_y = (bbox.max.y - bbox.min.y).max(1.0);
    let scale = ((MAP_W - 2.0 * MAP_PAD) / span_x).min((MAP_H - 2.0 * MAP_PAD) / span_y);
    let to_screen = |p: &Coord| {
        (
            MAP_PAD + (p.x - bbox.min.x) * scale,
            MAP_H - MAP_PAD - (p.y - bbox.min.y) * scale,
        )
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{MAP_W}\" height=\"{MAP_H}\" viewBox=\"0 0 {MAP_W} {MAP_H}\">"
    );
    // Alternatives first, from worst to best, so the current route and the
    // best alternative end up on top.
    let mut order: Vec<usize> = (0..routes.len()).collect();
    order.sort_by_key(|&i| match routes[i].role {
        RouteRole::Current => (1, 0),
        RouteRole::Alternative => (0, usize::MAX - routes[i].rank.unwrap_or(0)),
    });
    for i in order {
        let r = &routes[i];
        let points: Vec<String> = r
            .geometry
            .iter()
            .map(|p| {
                let (x, y) = to_screen(p);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let dash = if r.role == RouteRole::Current {
            " stroke-dasharray=\"8 4\""
        } else {
            ""
        };
        let _ = write!(
            svg,
            "<polyline data-label=\"{}\" data-color=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"4\"{} points=\"{}\"/>",
            escape(&r.label),
            r.color.as_str(),
            css_color(r.color),
            dash,
            points.join(" ")
        );
    }
    svg.push_str("</svg>");
    svg
}
