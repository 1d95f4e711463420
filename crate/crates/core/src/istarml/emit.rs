use std::fmt::Write as _;

use thiserror::Error;

use super::validate::{validate, ValidationReport};
use super::{Dependency, Endpoint, Opaque, SdModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("model has {} validation error(s) and cannot be emitted", .0.error_count())]
    InvalidModel(ValidationReport),
}

impl EmitError {
    pub fn code(&self) -> &'static str {
        "InvalidModel"
    }
}

/// Writes the canonical istarml form of a valid model.
///
/// The output is UTF-8 with one element per line, two-space indentation, a
/// fixed attribute order for SD elements and id-sorted actors and ielements.
pub fn emit_istarml(model: &SdModel) -> Result<Vec<u8>, EmitError> {
    let report = validate(model);
    if !report.ok {
        return Err(EmitError::InvalidModel(report));
    }
    Ok(emit_unchecked(&model.canonicalized()).into_bytes())
}

fn emit_unchecked(model: &SdModel) -> String {
    let mut out = Writer::default();
    out.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let children = !model.diagrams.is_empty() || !model.annotations.is_empty();
    out.open("istarml", &[("version", &model.version)], children);
    if children {
        for diagram in &model.diagrams {
            let has_children = !diagram.dependums.is_empty()
                || !diagram.actors.is_empty()
                || !diagram.annotations.is_empty();
            out.open("diagram", &[("name", &diagram.name)], has_children);
            if !has_children {
                continue;
            }
            for dependum in &diagram.dependums {
                let attrs = [
                    ("type", dependum.kind.as_str()),
                    ("id", dependum.id.as_str()),
                    ("name", dependum.name.as_str()),
                ];
                out.leaf("ielement", &attrs, &dependum.annotations);
            }
            for actor in &diagram.actors {
                let attrs = [
                    ("type", actor.actor_type.as_str()),
                    ("id", actor.id.as_str()),
                    ("name", actor.name.as_str()),
                ];
                let empty = actor.dependencies.is_empty() && actor.annotations.is_empty();
                out.open("actor", &attrs, !empty);
                if empty {
                    continue;
                }
                for dependency in &actor.dependencies {
                    out.dependency(dependency);
                }
                for note in &actor.annotations {
                    out.opaque(note);
                }
                out.close("actor");
            }
            for note in &diagram.annotations {
                out.opaque(note);
            }
            out.close("diagram");
        }
        for note in &model.annotations {
            out.opaque(note);
        }
        out.close("istarml");
    }
    out.buf
}

#[derive(Default)]
struct Writer {
    buf: String,
    depth: usize,
}

impl Writer {
    fn raw(&mut self, line: &str) {
        self.buf.push_str(line);
        self.buf.push('\n');
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
    }

    fn start_tag(&mut self, name: &str, attrs: &[(&str, &str)]) {
        self.indent();
        self.buf.push('<');
        self.buf.push_str(name);
        for (key, value) in attrs {
            let _ = write!(self.buf, " {key}=\"{}\"", escape_attr(value));
        }
    }

    /// Opens `name`; when `has_children` is false the element is self-closed.
    fn open(&mut self, name: &str, attrs: &[(&str, &str)], has_children: bool) {
        self.start_tag(name, attrs);
        if has_children {
            self.buf.push_str(">\n");
            self.depth += 1;
        } else {
            self.buf.push_str("/>\n");
        }
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.buf, "</{name}>");
    }

    /// An SD element whose only possible children are annotations.
    fn leaf(&mut self, name: &str, attrs: &[(&str, &str)], annotations: &[Opaque]) {
        let has_children = !annotations.is_empty();
        self.open(name, attrs, has_children);
        if has_children {
            for note in annotations {
                self.opaque(note);
            }
            self.close(name);
        }
    }

    fn dependency(&mut self, dependency: &Dependency) {
        let has_children = dependency.endpoints().next().is_some()
            || !dependency.annotations.is_empty();
        self.open("dependency", &[], has_children);
        if !has_children {
            return;
        }
        for endpoint in &dependency.dependers {
            self.endpoint("depender", endpoint);
        }
        for endpoint in &dependency.dependees {
            self.endpoint("dependee", endpoint);
        }
        for note in &dependency.annotations {
            self.opaque(note);
        }
        self.close("dependency");
    }

    fn endpoint(&mut self, tag: &str, endpoint: &Endpoint) {
        let attrs = [("iref", endpoint.iref.as_str()), ("aref", endpoint.aref.as_str())];
        self.leaf(tag, &attrs, &endpoint.annotations);
    }

    fn opaque(&mut self, node: &Opaque) {
        let attrs: Vec<(&str, &str)> = node
            .attributes
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        self.start_tag(&node.name, &attrs);
        match (node.text.is_empty(), node.children.is_empty()) {
            (true, true) => self.buf.push_str("/>\n"),
            (false, true) => {
                let _ = writeln!(self.buf, ">{}</{}>", escape_text(&node.text), node.name);
            }
            (_, false) => {
                self.buf.push('>');
                self.buf.push_str(&escape_text(&node.text));
                self.buf.push('\n');
                self.depth += 1;
                for child in &node.children {
                    self.opaque(child);
                }
                self.close(&node.name);
            }
        }
    }
}

fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            other => out.push(other),
        }
    }
    out
}

fn escape_text(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            other => out.push(other),
        }
    }
    out
}
