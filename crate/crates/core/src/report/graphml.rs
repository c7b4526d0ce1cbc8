use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::graph::{CommunityPartition, EdgeClass};
use crate::network::AtomGraph;

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
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

pub(crate) fn check(g: &AtomGraph, c: &CommunityPartition, classes: Option<&EdgeClass>) -> Result<()> {
    if c.community_of.len() != g.n_nodes() {
        return Err(invalid("community labels do not cover the graph"));
    }
    if classes.is_some_and(|k| k.kinds.len() != g.edges.len()) {
        return Err(invalid("edge classes do not cover the graph"));
    }
    Ok(())
}

/// Plain GraphML: nodes carry label, residue number and community; edges carry
/// weight (shortest round-trip decimal) and, when given, class and mean distance.
pub fn export_graphml(
    g: &AtomGraph,
    communities: &CommunityPartition,
    classes: Option<&EdgeClass>,
    graph_id: &str,
) -> Result<Vec<u8>> {
    check(g, communities, classes)?;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    for (id, target, kind) in [
        ("label", "node", "string"),
        ("residue", "node", "int"),
        ("community", "node", "int"),
        ("weight", "edge", "double"),
        ("class", "edge", "string"),
        ("distance", "edge", "double"),
    ] {
        let _ = writeln!(
            s,
            "  <key id=\"{id}\" for=\"{target}\" attr.name=\"{id}\" attr.type=\"{kind}\"/>"
        );
    }
    let _ = writeln!(s, "  <graph id=\"{}\" edgedefault=\"undirected\">", escape(graph_id));
    for (i, label) in g.labels.iter().enumerate() {
        let _ = write!(
            s,
            "    <node id=\"n{i}\"><data key=\"label\">{}</data>",
            escape(&label.to_string())
        );
        if let Some(seq) = label.res_seq {
            let _ = write!(s, "<data key=\"residue\">{seq}</data>");
        }
        let _ = writeln!(
            s,
            "<data key=\"community\">{}</data></node>",
            communities.community_of[i]
        );
    }
    for (k, e) in g.edges.iter().enumerate() {
        let _ = write!(
            s,
            "    <edge id=\"e{k}\" source=\"n{}\" target=\"n{}\"><data key=\"weight\">{}</data>",
            e.a, e.b, e.weight
        );
        if let Some(c) = classes {
            let _ = write!(
                s,
                "<data key=\"class\">{}</data><data key=\"distance\">{}</data>",
                c.kinds[k].as_str(),
                c.mean_distance[k]
            );
        }
        s.push_str("</edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    Ok(s.into_bytes())
}
