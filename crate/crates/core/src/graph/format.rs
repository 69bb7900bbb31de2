//! Line-oriented graph text format.
//!
//! ```text
//! # diagnosis example
//! obs T A C
//! lat K
//! K -> T
//! K -> A
//! T -> C
//! A -> C
//! S sel -> A
//! target T
//! ```
//!
//! A file with any `lat` line is read as a causal DAG and latent-projected.
//! Otherwise it is read directly as an ADMG and may use `A <-> B`.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Admg, AdmgBuilder, CausalDag, GraphError, Vertex, VertexKind};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A parsed graph file.
#[derive(Clone, Debug)]
pub struct GraphFile {
    pub graph: Admg,
    pub target: Option<String>,
}

enum Decl {
    Vertex(String, VertexKind),
    Directed(String, String),
    Bidirected(String, String),
    Selection(String, String),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

pub fn read_graph_file(path: &Path) -> Result<GraphFile, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<GraphFile, ParseError> {
    let mut decls: Vec<(usize, Decl)> = Vec::new();
    let mut target: Option<String> = None;
    let mut has_latent = false;
    let mut has_bidirected = None;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "obs" | "lat" => {
                if words.len() < 2 {
                    return Err(syntax(ln, format!("`{}` needs a vertex name", words[0])));
                }
                let kind = if words[0] == "obs" {
                    VertexKind::Observed
                } else {
                    has_latent = true;
                    VertexKind::Unobserved
                };
                for w in &words[1..] {
                    decls.push((ln, Decl::Vertex(w.to_string(), kind)));
                }
                continue;
            }
            "target" => {
                if words.len() != 2 {
                    return Err(syntax(ln, "`target` takes exactly one name"));
                }
                if target.is_some() {
                    return Err(syntax(ln, "target declared twice"));
                }
                target = Some(words[1].to_string());
                continue;
            }
            _ => {}
        }
        if let Some((a, b)) = line.split_once("<->") {
            let (a, b) = (endpoint(ln, a)?, endpoint(ln, b)?);
            has_bidirected.get_or_insert(ln);
            decls.push((ln, Decl::Bidirected(a, b)));
        } else if let Some((a, b)) = line.split_once("->") {
            let b = endpoint(ln, b)?;
            let lhs: Vec<&str> = a.split_whitespace().collect();
            match lhs.as_slice() {
                [s, "sel"] => decls.push((ln, Decl::Selection(s.to_string(), b))),
                [a] => decls.push((ln, Decl::Directed(a.to_string(), b))),
                _ => return Err(syntax(ln, format!("cannot parse `{line}`"))),
            }
        } else {
            return Err(syntax(ln, format!("unknown declaration `{line}`")));
        }
    }

    if has_latent {
        if let Some(ln) = has_bidirected {
            return Err(syntax(ln, "`<->` is not allowed in a file with `lat` vertices"));
        }
    }

    // endpoints must be declared; selection vertices are declared by their `sel` line
    let mut declared: std::collections::HashSet<String> = std::collections::HashSet::new();
    for (ln, d) in &decls {
        match d {
            Decl::Vertex(n, _) => {
                if !declared.insert(n.clone()) {
                    return Err(syntax(*ln, format!("vertex `{n}` declared twice")));
                }
            }
            Decl::Selection(s, _) => {
                declared.insert(s.clone());
            }
            _ => {}
        }
    }
    for (ln, d) in &decls {
        let ends: Vec<&String> = match d {
            Decl::Directed(a, b) | Decl::Bidirected(a, b) => vec![a, b],
            Decl::Selection(_, c) => vec![c],
            Decl::Vertex(..) => vec![],
        };
        for e in ends {
            if !declared.contains(e) {
                return Err(syntax(*ln, format!("undeclared vertex `{e}`")));
            }
        }
    }

    let graph = if has_latent {
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut edges = Vec::new();
        for (_, d) in &decls {
            match d {
                Decl::Vertex(n, k) => vertices.push(Vertex {
                    name: n.clone(),
                    kind: *k,
                }),
                Decl::Directed(a, b) => edges.push((a.clone(), b.clone())),
                Decl::Selection(s, c) => {
                    if !vertices.iter().any(|v| &v.name == s) {
                        vertices.push(Vertex {
                            name: s.clone(),
                            kind: VertexKind::Selection,
                        });
                    }
                    edges.push((s.clone(), c.clone()));
                }
                Decl::Bidirected(..) => unreachable!("rejected above"),
            }
        }
        CausalDag::new(vertices, &edges)?.latent_project()?
    } else {
        let mut b = AdmgBuilder::new();
        for (_, d) in decls {
            b = match d {
                Decl::Vertex(n, _) => b.observed(&n),
                Decl::Directed(x, y) => b.edge(&x, &y),
                Decl::Bidirected(x, y) => b.bidirected(&x, &y),
                Decl::Selection(s, c) => b.selection(&s, &c),
            };
        }
        b.build()?
    };

    if let Some(t) = &target {
        let id = graph.id(t)?;
        if graph.kind(id) != VertexKind::Observed {
            return Err(GraphError::NotObserved(t.clone()).into());
        }
    }
    Ok(GraphFile { graph, target })
}

fn endpoint(line: usize, s: &str) -> Result<String, ParseError> {
    let w: Vec<&str> = s.split_whitespace().collect();
    match w.as_slice() {
        [name] => Ok(name.to_string()),
        _ => Err(syntax(line, format!("expected one vertex name, found `{}`", s.trim()))),
    }
}

/// Serializes an ADMG in the text format. `parse_graph(to_text(g))` rebuilds `g`.
pub fn to_text(g: &Admg, target: Option<&str>) -> String {
    let mut out = String::new();
    let obs = g.names(g.observed());
    if !obs.is_empty() {
        let _ = writeln!(out, "obs {}", obs.join(" "));
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(out, "{} -> {}", g.name(a), g.name(b));
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(out, "{} <-> {}", g.name(a), g.name(b));
    }
    for (s, c) in g.selection_edges() {
        let _ = writeln!(out, "{} sel -> {}", g.name(s), g.name(c));
    }
    if let Some(t) = target {
        let _ = writeln!(out, "target {t}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIAGNOSIS_LATENT: &str = "\
# diagnosis
obs T A C
lat K
K -> T
K -> A
T -> C
A -> C
S sel -> A
target T
";

    #[test]
    fn dag_file_is_projected() {
        let f = parse_graph(DIAGNOSIS_LATENT).unwrap();
        assert_eq!(f.target.as_deref(), Some("T"));
        let g = f.graph;
        assert_eq!(g.bidirected_edges().len(), 1);
        assert_eq!(g.names(g.mutable_set()), vec!["A"]);
    }

    #[test]
    fn roundtrip_through_text() {
        let f = parse_graph("obs T A C\nT <-> A\nT -> C\nA -> C\nS sel -> A\n").unwrap();
        let text = to_text(&f.graph, Some("T"));
        let g = parse_graph(&text).unwrap();
        assert_eq!(g.graph, f.graph);
        assert_eq!(g.target.as_deref(), Some("T"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_graph("obs A\nA -> B\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        let err = parse_graph("obs A B\nlat U\nA <-> B\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
        let err = parse_graph("obs A\nfoo bar\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        assert!(parse_graph("obs A\ntarget Z\n").is_err());
    }
}
