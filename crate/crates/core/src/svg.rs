//! SVG drawing of a laid-out document.
//!
//! Element ids are stable for hit-testing: `stn-<id>` for box rects,
//! `lwc-<id>` for wire paths, `region-<domain>` for clock regions and
//! `frame` for the drawing border.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::diag::{Code, Diagnostic};
use crate::ir::{CcrsDocument, Geometry, Point, Stn, StnKind};
use crate::templater::SymbolTable;

pub const FONT_FAMILY: &str = "'Noto Sans CJK SC', 'Source Han Sans SC', 'Microsoft YaHei', sans-serif";
const LABEL_SIZE: f64 = 12.0;
const PIN_SIZE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theme {
    #[default]
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RenderOptions {
    pub show_clock_regions: bool,
    pub show_net_names: bool,
    pub scale: f64,
    pub theme: Theme,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { show_clock_regions: false, show_net_names: false, scale: 1.0, theme: Theme::Default }
    }
}

struct Canvas {
    scale: f64,
    out: String,
}

impl Canvas {
    /// Scaled coordinate, rounded half away from zero.
    fn c(&self, v: i64) -> i64 {
        (v as f64 * self.scale).round() as i64
    }

    fn size(&self, v: f64) -> i64 {
        ((v * self.scale).round() as i64).max(1)
    }

    fn text(&mut self, class: &str, x: i64, y: i64, size: f64, anchor: &str, content: &str) {
        let (x, y, size) = (self.c(x), self.c(y), self.size(size));
        let _ = writeln!(
            self.out,
            r#"<text class="{class}" x="{x}" y="{y}" font-size="{size}" text-anchor="{anchor}" dominant-baseline="central">{}</text>"#,
            escape(content)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Text shown in a box: the operator glyph, the keyword for its kind, or
/// the port name.
pub fn box_label<'a>(s: &'a Stn, symtab: &'a SymbolTable) -> &'a str {
    let kw = |k: &str| symtab.keywords.get(k).map_or(s.label.as_str(), String::as_str);
    match s.kind {
        StnKind::Port => &s.label,
        StnKind::DataOp => s.opcode.map_or(s.label.as_str(), |op| symtab.glyph(op)),
        StnKind::Branch => kw("condition"),
        StnKind::CaseSelect => kw("select"),
        StnKind::Timing => kw("register"),
        StnKind::Instance => kw("instance"),
        StnKind::Constant => kw("constant"),
    }
}

/// Keyword next to a Branch or CaseSelect input pin.
fn pin_label<'a>(s: &Stn, pin: &str, symtab: &'a SymbolTable) -> Option<&'a str> {
    let key = match (s.kind, pin) {
        (StnKind::CaseSelect, "sel") => "select",
        (StnKind::Branch | StnKind::CaseSelect, "vd") => "default",
        (StnKind::Branch, p) if p.starts_with('c') => "condition",
        (StnKind::Branch | StnKind::CaseSelect, p) if p.starts_with('v') => "value",
        _ => return None,
    };
    symtab.keywords.get(key).map(String::as_str)
}

/// Name shown on a wire: the driving port or the register or signal it carries.
pub fn net_name<'a>(doc: &'a CcrsDocument, lwc: &crate::ir::Lwc) -> Option<&'a str> {
    let s = doc.stn(&lwc.source.stn)?;
    match s.kind {
        StnKind::Port => Some(&s.label),
        _ => s.attr_str("target"),
    }
}

fn check(doc: &CcrsDocument, geo: &Geometry) -> Result<(), Diagnostic> {
    for (s, _) in doc.all_stns() {
        if !geo.boxes.contains_key(&s.id) || !geo.anchors.contains_key(&s.id) {
            return Err(Diagnostic::error(Code::NoGeometry, format!("no box for {}", s.id)));
        }
    }
    for l in &doc.lwcs {
        if !geo.routes.contains_key(&l.id) {
            return Err(Diagnostic::error(Code::NoGeometry, format!("no route for {}", l.id)));
        }
    }
    Ok(())
}

fn path_data(cv: &Canvas, polys: &[Vec<Point>]) -> String {
    let mut d = String::new();
    for p in polys.iter().filter(|p| !p.is_empty()) {
        for (i, (x, y)) in p.iter().enumerate() {
            if !d.is_empty() {
                d.push(' ');
            }
            let _ = write!(d, "{}{} {}", if i == 0 { 'M' } else { 'L' }, cv.c(*x), cv.c(*y));
        }
    }
    d
}

fn draw_stn(cv: &mut Canvas, s: &Stn, geo: &Geometry, symtab: &SymbolTable) {
    let b = geo.boxes[&s.id];
    let (x, y, w, h) = (cv.c(b.x), cv.c(b.y), cv.c(b.right()) - cv.c(b.x), cv.c(b.bottom()) - cv.c(b.y));
    let mut extra = String::new();
    match s.kind {
        StnKind::Constant => {
            let _ = write!(extra, r#" data-value="{}""#, s.attr_u64("value").unwrap_or(0));
        }
        StnKind::Instance => {
            let _ = write!(extra, r#" data-module="{}""#, escape(s.attr_str("module").unwrap_or_default()));
        }
        _ => {}
    }
    let _ = writeln!(
        cv.out,
        r#"<rect class="node {}" id="stn-{}" x="{x}" y="{y}" width="{w}" height="{h}" fill="{}" stroke="black"{extra}/>"#,
        s.kind.as_str().to_lowercase(),
        escape(&s.id),
        if s.children.is_empty() { "white" } else { "#f4f4f4" },
    );
    // Nested boxes keep their label in the header band.
    let header = if s.children.is_empty() { b.h } else { crate::layout::MIN_BOX_H };
    cv.text("label", b.x + b.w / 2, b.y + header / 2, LABEL_SIZE, "middle", box_label(s, symtab));
    let anchors = &geo.anchors[&s.id];
    for (pin, p) in s.inputs.iter().zip(&anchors.inputs) {
        if let Some(t) = pin_label(s, &pin.name, symtab) {
            cv.text("pin", p.0 + 2, p.1, PIN_SIZE, "start", t);
        }
    }
    for c in &s.children {
        draw_stn(cv, c, geo, symtab);
    }
}

/// Draw `doc` with `geometry`. Fails with E-NO-GEOM when a Stn or Lwc has
/// no geometry entry.
pub fn render(doc: &CcrsDocument, geometry: &Geometry, symtab: &SymbolTable, options: &RenderOptions) -> Result<String, Diagnostic> {
    check(doc, geometry)?;
    let scale = if options.scale.is_finite() && options.scale > 0.0 { options.scale } else { 1.0 };
    let mut cv = Canvas { scale, out: String::new() };
    let (w, h) = (cv.c(geometry.width), cv.c(geometry.height));
    cv.out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        cv.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{FONT_FAMILY}">"#
    );
    let _ = writeln!(cv.out, r#"<rect class="frame" id="frame" x="0" y="0" width="{w}" height="{h}" fill="white" stroke="gray"/>"#);

    if options.show_clock_regions && !geometry.regions.is_empty() {
        cv.out.push_str("<g class=\"regions\">\n");
        for (id, r) in &geometry.regions {
            let (x, y) = (cv.c(r.x), cv.c(r.y));
            let (rw, rh) = (cv.c(r.right()) - x, cv.c(r.bottom()) - y);
            let _ = writeln!(
                cv.out,
                r##"<rect class="region" id="region-{}" x="{x}" y="{y}" width="{rw}" height="{rh}" fill="#eef4ff" stroke="#4a6fa5" stroke-dasharray="6 4"/>"##,
                escape(id)
            );
        }
        cv.out.push_str("</g>\n");
    }

    cv.out.push_str("<g class=\"nodes\">\n");
    for s in &doc.stns {
        draw_stn(&mut cv, s, geometry, symtab);
    }
    cv.out.push_str("</g>\n");

    cv.out.push_str("<g class=\"wires\" fill=\"none\" stroke=\"black\">\n");
    for l in &doc.lwcs {
        let d = path_data(&cv, &geometry.routes[&l.id]);
        let sw = if l.width > 1 { 2 } else { 1 };
        let _ = writeln!(cv.out, r#"<path class="wire" id="lwc-{}" d="{d}" stroke-width="{sw}"/>"#, escape(&l.id));
    }
    cv.out.push_str("</g>\n");

    if options.show_net_names {
        cv.out.push_str("<g class=\"net-names\">\n");
        for l in &doc.lwcs {
            let (Some(name), Some(p)) = (net_name(doc, l), geometry.routes[&l.id].first().and_then(|p| p.first())) else { continue };
            cv.text("net-name", p.0 + 4, p.1 - 6, PIN_SIZE, "start", name);
        }
        cv.out.push_str("</g>\n");
    }
    cv.out.push_str("</svg>\n");
    Ok(cv.out)
}
