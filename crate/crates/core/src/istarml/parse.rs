use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::validate::{codes, validate, Severity, ValidationReport};
use super::{
    Actor, ActorType, Dependency, Dependum, DependumKind, Diagram, Endpoint, Opaque, SdModel,
    ISTARML_VERSION,
};

/// Elements nested deeper than this are rejected instead of recursed into.
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Any validation error fails the parse.
    Strict,
    /// Structure is read as-is; problems are left for [`validate`].
    #[default]
    Tolerant,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("malformed XML at byte {position}: {message}")]
    MalformedXml { position: u64, message: String },
    #[error("unsupported encoding {0:?}; only UTF-8 is accepted")]
    UnsupportedEncoding(String),
    #[error("root element is <{0}>, expected <istarml>")]
    UnexpectedRoot(String),
    #[error("unsupported istarml version {found:?}, expected \"1.0\"")]
    UnsupportedVersion { found: Option<String> },
    #[error("dangling reference at {location}: {message}")]
    DanglingReference { location: String, message: String },
    #[error("model rejected with {} error(s)", .0.error_count())]
    Rejected(ValidationReport),
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::MalformedXml { .. } => "MalformedXml",
            ParseError::UnsupportedEncoding(_) => "UnsupportedEncoding",
            ParseError::UnexpectedRoot(_) => "UnexpectedRoot",
            ParseError::UnsupportedVersion { .. } => "UnsupportedVersion",
            ParseError::DanglingReference { .. } => "DanglingReference",
            ParseError::Rejected(_) => "InvalidModel",
        }
    }
}

/// Parses in [`ParseMode::Tolerant`] with an empty source id.
pub fn parse_istarml(document: &[u8]) -> Result<SdModel, ParseError> {
    parse_istarml_with(document, ParseMode::Tolerant, "")
}

pub fn parse_istarml_with(
    document: &[u8],
    mode: ParseMode,
    source_id: &str,
) -> Result<SdModel, ParseError> {
    let root = read_tree(document)?;
    let model = build_model(root, source_id)?;
    if mode == ParseMode::Strict {
        let report = validate(&model);
        if !report.ok {
            let first = report
                .findings
                .iter()
                .find(|f| f.severity == Severity::Error)
                .expect("report not ok implies an error finding");
            if first.code == codes::DANGLING_REFERENCE {
                return Err(ParseError::DanglingReference {
                    location: first.location.clone(),
                    message: first.message.clone(),
                });
            }
            return Err(ParseError::Rejected(report));
        }
    }
    Ok(model)
}

struct Node {
    name: String,
    attributes: Vec<(String, String)>,
    text: String,
    children: Vec<Node>,
}

impl Node {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn attr_or_empty(&self, key: &str) -> String {
        self.attr(key).unwrap_or_default().to_string()
    }

    fn into_opaque(self) -> Opaque {
        Opaque {
            name: self.name,
            attributes: self.attributes,
            text: self.text.trim().to_string(),
            children: self.children.into_iter().map(Node::into_opaque).collect(),
        }
    }
}

fn malformed(position: u64, message: impl Into<String>) -> ParseError {
    ParseError::MalformedXml {
        position,
        message: message.into(),
    }
}

fn decode_text(document: &[u8]) -> Result<&str, ParseError> {
    if document.starts_with(&[0xFF, 0xFE]) || document.starts_with(&[0xFE, 0xFF]) {
        return Err(ParseError::UnsupportedEncoding("UTF-16".into()));
    }
    let document = document.strip_prefix(&[0xEF, 0xBB, 0xBF]).unwrap_or(document);
    std::str::from_utf8(document).map_err(|e| {
        malformed(e.valid_up_to() as u64, "document is not valid UTF-8")
    })
}

fn start_node(start: &BytesStart<'_>, position: u64) -> Result<Node, ParseError> {
    let name = std::str::from_utf8(start.name().as_ref())
        .map_err(|_| malformed(position, "element name is not UTF-8"))?
        .to_string();
    let mut attributes = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(|e| malformed(position, e.to_string()))?;
        let key = std::str::from_utf8(attr.key.as_ref())
            .map_err(|_| malformed(position, "attribute name is not UTF-8"))?
            .to_string();
        let value = attr
            .unescape_value()
            .map_err(|e| malformed(position, e.to_string()))?
            .into_owned();
        attributes.push((key, value));
    }
    Ok(Node {
        name,
        attributes,
        text: String::new(),
        children: Vec::new(),
    })
}

fn read_tree(document: &[u8]) -> Result<Node, ParseError> {
    let text = decode_text(document)?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<Node> = Vec::new();
    let mut root: Option<Node> = None;

    loop {
        let position = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| malformed(reader.error_position(), e.to_string()))?;
        match event {
            Event::Decl(decl) => {
                if let Some(encoding) = decl.encoding() {
                    let encoding = encoding.map_err(|e| malformed(position, e.to_string()))?;
                    let encoding = String::from_utf8_lossy(&encoding).into_owned();
                    if !encoding.eq_ignore_ascii_case("utf-8") {
                        return Err(ParseError::UnsupportedEncoding(encoding));
                    }
                }
            }
            Event::Start(start) => {
                if root.is_some() {
                    return Err(malformed(position, "content after the root element"));
                }
                if stack.len() >= MAX_DEPTH {
                    return Err(malformed(position, "elements nested too deeply"));
                }
                stack.push(start_node(&start, position)?);
            }
            Event::Empty(start) => {
                if root.is_some() {
                    return Err(malformed(position, "content after the root element"));
                }
                let node = start_node(&start, position)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::End(_) => {
                let node = stack
                    .pop()
                    .ok_or_else(|| malformed(position, "unexpected closing tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(raw) => {
                let value = raw
                    .unescape()
                    .map_err(|e| malformed(position, e.to_string()))?;
                match stack.last_mut() {
                    Some(node) => node.text.push_str(&value),
                    None if value.trim().is_empty() => {}
                    None => return Err(malformed(position, "text outside the root element")),
                }
            }
            Event::CData(raw) => {
                let value = std::str::from_utf8(&raw)
                    .map_err(|_| malformed(position, "CDATA is not UTF-8"))?;
                match stack.last_mut() {
                    Some(node) => node.text.push_str(value),
                    None => return Err(malformed(position, "CDATA outside the root element")),
                }
            }
            Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Eof => break,
        }
    }

    if !stack.is_empty() {
        return Err(malformed(
            reader.buffer_position(),
            format!("unclosed element <{}>", stack.last().map(|n| n.name.as_str()).unwrap_or("")),
        ));
    }
    root.ok_or_else(|| malformed(0, "no root element"))
}

fn build_model(root: Node, source_id: &str) -> Result<SdModel, ParseError> {
    if root.name != "istarml" {
        return Err(ParseError::UnexpectedRoot(root.name));
    }
    match root.attr("version") {
        Some(ISTARML_VERSION) => {}
        other => {
            return Err(ParseError::UnsupportedVersion {
                found: other.map(str::to_string),
            })
        }
    }

    let mut model = SdModel::new(source_id);
    for child in root.children {
        if child.name == "diagram" {
            model.diagrams.push(build_diagram(child));
        } else {
            model.annotations.push(child.into_opaque());
        }
    }
    Ok(model)
}

fn build_diagram(node: Node) -> Diagram {
    let mut diagram = Diagram::new(node.attr_or_empty("name"));
    for child in node.children {
        match child.name.as_str() {
            "ielement" => diagram.dependums.push(Dependum {
                id: child.attr_or_empty("id"),
                name: child.attr_or_empty("name"),
                kind: DependumKind::parse(child.attr("type").unwrap_or_default()),
                annotations: child.children.into_iter().map(Node::into_opaque).collect(),
            }),
            "actor" => diagram.actors.push(build_actor(child)),
            _ => diagram.annotations.push(child.into_opaque()),
        }
    }
    diagram
}

fn build_actor(node: Node) -> Actor {
    let actor_type = node
        .attr("type")
        .map(ActorType::parse)
        .unwrap_or(ActorType::Plain);
    let mut actor = Actor::new(node.attr_or_empty("id"), node.attr_or_empty("name"), actor_type);
    for child in node.children {
        if child.name == "dependency" {
            actor.dependencies.push(build_dependency(child));
        } else {
            actor.annotations.push(child.into_opaque());
        }
    }
    actor
}

fn build_dependency(node: Node) -> Dependency {
    let mut dependency = Dependency {
        dependers: Vec::new(),
        dependees: Vec::new(),
        annotations: Vec::new(),
    };
    for child in node.children {
        match child.name.as_str() {
            "depender" => dependency.dependers.push(build_endpoint(child)),
            "dependee" => dependency.dependees.push(build_endpoint(child)),
            _ => dependency.annotations.push(child.into_opaque()),
        }
    }
    dependency
}

fn build_endpoint(node: Node) -> Endpoint {
    Endpoint {
        iref: node.attr_or_empty("iref"),
        aref: node.attr_or_empty("aref"),
        annotations: node.children.into_iter().map(Node::into_opaque).collect(),
    }
}
