//! Graph serialization: GraphML, GEXF 1.3 and a versioned binary cache.
//!
//! Writers are deterministic: the same graph always produces the same bytes.
//! Both XML readers accept what the writers produce and rebuild an equal
//! graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::community::CommunityNetwork;
use crate::error::{Error, Result};
use crate::extract::ExtractionMethod;
use crate::graph::{ConfrontGraph, EdgeOrigin, GraphBuilder, Vertex};
use crate::model::Point;

pub const CACHE_MAGIC: &[u8; 4] = b"CFNG";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    GraphMl,
    Gexf,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::GraphMl => "graphml",
            Format::Gexf => "gexf",
            Format::Binary => "cfng",
        }
    }

    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "graphml" | "xml" => Some(Format::GraphMl),
            "gexf" => Some(Format::Gexf),
            "cfng" | "bin" => Some(Format::Binary),
            _ => None,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(Format::GraphMl),
            "gexf" => Ok(Format::Gexf),
            "binary" | "cfng" => Ok(Format::Binary),
            _ => Err(Error::GraphFormat(format!("unknown format `{s}`"))),
        }
    }
}

pub fn serialize_graph(g: &ConfrontGraph, format: Format, manifest: Option<&str>) -> Result<Vec<u8>> {
    Ok(match format {
        Format::GraphMl => to_graphml(g, manifest).into_bytes(),
        Format::Gexf => to_gexf(g, manifest).into_bytes(),
        Format::Binary => to_binary(g)?,
    })
}

/// Reads a graph file, choosing the format from the extension.
pub fn read_graph(path: &Path) -> Result<ConfrontGraph> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = if bytes.starts_with(CACHE_MAGIC) {
        Format::Binary
    } else {
        Format::from_path(path)
            .ok_or_else(|| Error::GraphFormat(format!("{}: unknown graph file extension", path.display())))?
    };
    match format {
        Format::Binary => from_binary(&bytes),
        xml => {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::GraphFormat(e.to_string()))?;
            if xml == Format::GraphMl {
                from_graphml(text)
            } else {
                from_gexf(text)
            }
        }
    }
}

pub fn to_binary(g: &ConfrontGraph) -> Result<Vec<u8>> {
    let mut out = CACHE_MAGIC.to_vec();
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    let body = bincode::serialize(g).map_err(|e| Error::GraphFormat(e.to_string()))?;
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn from_binary(bytes: &[u8]) -> Result<ConfrontGraph> {
    if bytes.len() < 8 || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::GraphFormat("not a graph cache file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::GraphFormat(format!(
            "cache version {version} unsupported (expected {CACHE_VERSION})"
        )));
    }
    bincode::deserialize(&bytes[8..]).map_err(|e| Error::GraphFormat(e.to_string()))
}

/// Graph-level metadata, flattened to string pairs.
fn graph_meta(g: &ConfrontGraph, manifest: Option<&str>) -> Vec<(&'static str, String)> {
    let mut meta = Vec::new();
    if let Some(m) = &g.method {
        meta.push(("method", m.code()));
        meta.push(("k", m.k.to_string()));
        meta.push(("component_threshold", m.component_threshold.to_string()));
    }
    meta.push(("property_baseline", g.property_baseline.to_string()));
    if let Some(h) = manifest {
        meta.push(("manifest", h.to_string()));
    }
    meta
}

/// `(name, type)` of vertex attributes, in output order.
const NODE_ATTRS: [(&str, &str); 10] = [
    ("object_id", "string"),
    ("segment_id", "string"),
    ("name", "string"),
    ("kind", "string"),
    ("dim", "string"),
    ("x", "double"),
    ("y", "double"),
    ("parish", "string"),
    ("inside_old_walls", "boolean"),
    ("is_property", "boolean"),
];
const EDGE_ATTRS: [(&str, &str); 3] = [("type", "string"), ("origin", "string"), ("relations", "string")];

fn vertex_values(v: &Vertex) -> Vec<(&'static str, String)> {
    let mut out = vec![("object_id", v.object_id.clone())];
    if let Some(s) = &v.segment_id {
        out.push(("segment_id", s.clone()));
    }
    out.push(("name", v.name.clone()));
    out.push(("kind", v.kind.to_string()));
    out.push(("dim", v.dim.to_string()));
    if let Some(p) = v.coord {
        out.push(("x", p.x.to_string()));
        out.push(("y", p.y.to_string()));
    }
    if let Some(p) = &v.parish {
        out.push(("parish", p.clone()));
    }
    if let Some(w) = v.inside_old_walls {
        out.push(("inside_old_walls", w.to_string()));
    }
    out.push(("is_property", v.is_property.to_string()));
    out
}

fn edge_values(g: &ConfrontGraph, i: usize) -> Vec<(&'static str, String)> {
    let e = &g.edges()[i];
    vec![
        ("type", e.ty.to_string()),
        ("origin", e.origin.to_string()),
        ("relations", serde_json::to_string(&e.relations).expect("string list")),
    ]
}

pub fn to_graphml(g: &ConfrontGraph, manifest: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    let meta = graph_meta(g, manifest);
    for (name, _) in &meta {
        let _ = writeln!(s, "  <key id=\"g_{name}\" for=\"graph\" attr.name=\"{name}\" attr.type=\"string\"/>");
    }
    for (name, ty) in NODE_ATTRS {
        let _ = writeln!(s, "  <key id=\"v_{name}\" for=\"node\" attr.name=\"{name}\" attr.type=\"{ty}\"/>");
    }
    for (name, ty) in EDGE_ATTRS {
        let _ = writeln!(s, "  <key id=\"e_{name}\" for=\"edge\" attr.name=\"{name}\" attr.type=\"{ty}\"/>");
    }
    s.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for (name, value) in &meta {
        let _ = writeln!(s, "    <data key=\"g_{name}\">{}</data>", escape(value.as_str()));
    }
    for v in g.vertices() {
        let _ = writeln!(s, "    <node id=\"{}\">", escape(v.id.as_str()));
        for (name, value) in vertex_values(v) {
            let _ = writeln!(s, "      <data key=\"v_{name}\">{}</data>", escape(value.as_str()));
        }
        s.push_str("    </node>\n");
    }
    let vs = g.vertices();
    for (i, e) in g.edges().iter().enumerate() {
        let _ = writeln!(
            s,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
            escape(vs[e.source].id.as_str()),
            escape(vs[e.target].id.as_str())
        );
        for (name, value) in edge_values(g, i) {
            let _ = writeln!(s, "      <data key=\"e_{name}\">{}</data>", escape(value.as_str()));
        }
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

pub fn to_gexf(g: &ConfrontGraph, manifest: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n");
    let meta: BTreeMap<&str, String> = graph_meta(g, manifest).into_iter().collect();
    let _ = writeln!(
        s,
        "  <meta>\n    <creator>confront-net</creator>\n    <description>{}</description>\n  </meta>",
        escape(serde_json::to_string(&meta).expect("string map").as_str())
    );
    s.push_str("  <graph mode=\"static\" defaultedgetype=\"directed\">\n");
    write_gexf_attributes(&mut s, "node", &NODE_ATTRS);
    write_gexf_attributes(&mut s, "edge", &EDGE_ATTRS);
    s.push_str("    <nodes>\n");
    for v in g.vertices() {
        let _ = writeln!(
            s,
            "      <node id=\"{}\" label=\"{}\">",
            escape(v.id.as_str()),
            escape(v.name.as_str())
        );
        write_attvalues(&mut s, vertex_values(v));
        s.push_str("      </node>\n");
    }
    s.push_str("    </nodes>\n    <edges>\n");
    let vs = g.vertices();
    for (i, e) in g.edges().iter().enumerate() {
        let _ = writeln!(
            s,
            "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" label=\"{}\">",
            escape(vs[e.source].id.as_str()),
            escape(vs[e.target].id.as_str()),
            e.ty
        );
        write_attvalues(&mut s, edge_values(g, i));
        s.push_str("      </edge>\n");
    }
    s.push_str("    </edges>\n  </graph>\n</gexf>\n");
    s
}

fn write_gexf_attributes(s: &mut String, class: &str, attrs: &[(&str, &str)]) {
    let _ = writeln!(s, "    <attributes class=\"{class}\">");
    for (name, ty) in attrs {
        let _ = writeln!(s, "      <attribute id=\"{name}\" title=\"{name}\" type=\"{ty}\"/>");
    }
    s.push_str("    </attributes>\n");
}

fn write_attvalues(s: &mut String, values: Vec<(&str, String)>) {
    s.push_str("        <attvalues>\n");
    for (name, value) in values {
        let _ = writeln!(
            s,
            "          <attvalue for=\"{name}\" value=\"{}\"/>",
            escape(value.as_str())
        );
    }
    s.push_str("        </attvalues>\n");
}

/// The community quotient network as an undirected weighted GEXF graph.
pub fn community_network_gexf(net: &CommunityNetwork, manifest: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n");
    let _ = writeln!(s, "  <meta>\n    <creator>confront-net</creator>");
    if let Some(h) = manifest {
        let _ = writeln!(s, "    <description>{{\"manifest\":\"{}\"}}</description>", escape(h));
    }
    s.push_str("  </meta>\n  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    write_gexf_attributes(
        &mut s,
        "node",
        &[
            ("size", "integer"),
            ("internal_edges", "integer"),
            ("inside_old_walls", "integer"),
            ("outside_old_walls", "integer"),
            ("walls_unknown", "integer"),
            ("kinds", "string"),
            ("parishes", "string"),
        ],
    );
    s.push_str("    <nodes>\n");
    for n in &net.nodes {
        let _ = writeln!(s, "      <node id=\"{0}\" label=\"{0}\">", n.community);
        write_attvalues(
            &mut s,
            vec![
                ("size", n.size.to_string()),
                ("internal_edges", n.internal_edges.to_string()),
                ("inside_old_walls", n.inside_old_walls.to_string()),
                ("outside_old_walls", n.outside_old_walls.to_string()),
                ("walls_unknown", n.walls_unknown.to_string()),
                ("kinds", serde_json::to_string(&n.kinds).expect("histogram")),
                ("parishes", serde_json::to_string(&n.parishes).expect("histogram")),
            ],
        );
        s.push_str("      </node>\n");
    }
    s.push_str("    </nodes>\n    <edges>\n");
    for (i, l) in net.links.iter().enumerate() {
        let _ = writeln!(
            s,
            "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" weight=\"{}\"/>",
            l.a, l.b, l.weight
        );
    }
    s.push_str("    </edges>\n  </graph>\n</gexf>\n");
    s
}

/// Format-neutral view of a parsed XML graph.
#[derive(Default)]
struct RawGraph {
    meta: BTreeMap<String, String>,
    nodes: Vec<(String, BTreeMap<String, String>)>,
    edges: Vec<(String, String, BTreeMap<String, String>)>,
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::GraphFormat(e.to_string())
}

fn attrs(e: &BytesStart<'_>) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for a in e.attributes() {
        let a = a.map_err(xml_err)?;
        let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
        out.insert(key, a.unescape_value().map_err(xml_err)?.into_owned());
    }
    Ok(out)
}

fn required(map: &BTreeMap<String, String>, key: &str, what: &str) -> Result<String> {
    map.get(key)
        .cloned()
        .ok_or_else(|| Error::GraphFormat(format!("{what} without `{key}`")))
}

enum Owner {
    Graph,
    Node,
    Edge,
}

pub fn from_graphml(text: &str) -> Result<ConfrontGraph> {
    let mut reader = Reader::from_str(text);
    let mut raw = RawGraph::default();
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut owner = Owner::Graph;
    let mut data_key: Option<String> = None;
    let mut text_buf = String::new();
    loop {
        let ev = reader.read_event().map_err(xml_err)?;
        match ev {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"key" => {
                        let a = attrs(e)?;
                        keys.insert(required(&a, "id", "key")?, required(&a, "attr.name", "key")?);
                    }
                    b"node" => {
                        let a = attrs(e)?;
                        raw.nodes.push((required(&a, "id", "node")?, BTreeMap::new()));
                        owner = Owner::Node;
                    }
                    b"edge" => {
                        let a = attrs(e)?;
                        raw.edges.push((
                            required(&a, "source", "edge")?,
                            required(&a, "target", "edge")?,
                            BTreeMap::new(),
                        ));
                        owner = Owner::Edge;
                    }
                    b"data" if !empty => {
                        let a = attrs(e)?;
                        let key = required(&a, "key", "data")?;
                        data_key = Some(keys.get(&key).cloned().unwrap_or(key));
                        text_buf.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    text_buf.push_str(&t.unescape().map_err(xml_err)?);
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let value = std::mem::take(&mut text_buf);
                        let target = match owner {
                            Owner::Graph => &mut raw.meta,
                            Owner::Node => &mut raw.nodes.last_mut().unwrap().1,
                            Owner::Edge => &mut raw.edges.last_mut().unwrap().2,
                        };
                        target.insert(key, value);
                    }
                }
                b"node" | b"edge" => owner = Owner::Graph,
                _ => {}
            },
            _ => {}
        }
    }
    assemble(raw)
}

pub fn from_gexf(text: &str) -> Result<ConfrontGraph> {
    let mut reader = Reader::from_str(text);
    let mut raw = RawGraph::default();
    let mut in_description = false;
    let mut description = String::new();
    let mut owner = Owner::Graph;
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) => match e.local_name().as_ref() {
                b"description" => in_description = true,
                b"node" => {
                    let a = attrs(&e)?;
                    raw.nodes.push((required(&a, "id", "node")?, BTreeMap::new()));
                    owner = Owner::Node;
                }
                b"edge" => {
                    let a = attrs(&e)?;
                    raw.edges.push((
                        required(&a, "source", "edge")?,
                        required(&a, "target", "edge")?,
                        BTreeMap::new(),
                    ));
                    owner = Owner::Edge;
                }
                b"attvalue" => {
                    let a = attrs(&e)?;
                    let key = required(&a, "for", "attvalue")?;
                    let value = required(&a, "value", "attvalue")?;
                    match owner {
                        Owner::Node => raw.nodes.last_mut().unwrap().1.insert(key, value),
                        Owner::Edge => raw.edges.last_mut().unwrap().2.insert(key, value),
                        Owner::Graph => None,
                    };
                }
                _ => {}
            },
            Event::Text(t) if in_description => description.push_str(&t.unescape().map_err(xml_err)?),
            Event::End(e) => match e.local_name().as_ref() {
                b"description" => in_description = false,
                b"node" | b"edge" => owner = Owner::Graph,
                _ => {}
            },
            _ => {}
        }
    }
    if !description.trim().is_empty() {
        raw.meta = serde_json::from_str(&description).map_err(xml_err)?;
    }
    assemble(raw)
}

fn assemble(raw: RawGraph) -> Result<ConfrontGraph> {
    let mut b = GraphBuilder::new();
    if let Some(code) = raw.meta.get("method") {
        let mut m: ExtractionMethod = code.parse()?;
        if let Some(k) = raw.meta.get("k") {
            m.k = parse_num(k, "k")?;
        }
        if let Some(t) = raw.meta.get("component_threshold") {
            m.component_threshold = parse_num(t, "component_threshold")?;
        }
        b.method = Some(m);
    }
    if let Some(base) = raw.meta.get("property_baseline") {
        b.property_baseline = parse_num(base, "property_baseline")?;
    }
    for (id, data) in raw.nodes {
        let get = |k: &str| data.get(k).cloned();
        let coord = match (get("x"), get("y")) {
            (Some(x), Some(y)) => Some(Point::new(parse_num(&x, "x")?, parse_num(&y, "y")?)),
            _ => None,
        };
        let vertex = Vertex {
            object_id: get("object_id").unwrap_or_else(|| id.clone()),
            segment_id: get("segment_id"),
            name: get("name").unwrap_or_default(),
            kind: required(&data, "kind", "node")?.parse().map_err(Error::GraphFormat)?,
            dim: required(&data, "dim", "node")?.parse().map_err(Error::GraphFormat)?,
            coord,
            parish: get("parish"),
            inside_old_walls: get("inside_old_walls").map(|v| parse_bool(&v)).transpose()?,
            is_property: get("is_property").map(|v| parse_bool(&v)).transpose()?.unwrap_or(false),
            id,
        };
        b.add_vertex(vertex);
    }
    for (source, target, data) in raw.edges {
        for end in [&source, &target] {
            if !b.contains_vertex(end) {
                return Err(Error::GraphFormat(format!("edge references unknown node `{end}`")));
            }
        }
        let ty = required(&data, "type", "edge")?.parse()?;
        let origin: EdgeOrigin = data.get("origin").map(|s| s.parse()).transpose()?.unwrap_or(EdgeOrigin::Primary);
        let relations: Vec<String> = match data.get("relations") {
            Some(r) => serde_json::from_str(r).map_err(xml_err)?,
            None => Vec::new(),
        };
        if relations.is_empty() {
            b.add_edge(&source, &target, ty, origin, None);
        }
        for r in relations {
            b.add_edge(&source, &target, ty, origin, Some(r));
        }
    }
    Ok(b.build())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::GraphFormat(format!("`{what}`: cannot parse `{s}`")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(Error::GraphFormat(format!("not a boolean: `{other}`"))),
    }
}
