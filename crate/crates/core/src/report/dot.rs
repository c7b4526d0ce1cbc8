use std::fmt::Write as _;

use super::graphml::check;
use super::palette_color;
use crate::error::Result;
use crate::graph::{CommunityPartition, EdgeClass, EdgeKind};
use crate::network::AtomGraph;

fn quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Undirected Graphviz graph. Nodes are filled by community colour; edge pen
/// width is `1 + 4·weight`; long-range edges are dashed.
pub fn export_dot(
    g: &AtomGraph,
    communities: &CommunityPartition,
    classes: Option<&EdgeClass>,
    graph_id: &str,
) -> Result<Vec<u8>> {
    check(g, communities, classes)?;
    let mut s = String::new();
    let _ = writeln!(s, "graph \"{}\" {{", quote(graph_id));
    s.push_str("  node [shape=circle, style=filled, fontsize=10];\n");
    for (i, label) in g.labels.iter().enumerate() {
        let c = communities.community_of[i];
        let _ = writeln!(
            s,
            "  n{i} [label=\"{}\", community={c}, fillcolor=\"{}\"];",
            quote(&label.to_string()),
            palette_color(c)
        );
    }
    for (k, e) in g.edges.iter().enumerate() {
        let _ = write!(
            s,
            "  n{} -- n{} [weight={:?}, penwidth={:?}",
            e.a,
            e.b,
            e.weight,
            1.0 + 4.0 * e.weight
        );
        if let Some(c) = classes {
            let _ = write!(s, ", class=\"{}\"", c.kinds[k].as_str());
            if c.kinds[k] == EdgeKind::LongRange {
                s.push_str(", style=dashed");
            }
        }
        s.push_str("];\n");
    }
    s.push_str("}\n");
    Ok(s.into_bytes())
}
