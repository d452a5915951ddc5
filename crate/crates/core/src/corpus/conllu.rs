//! Minimal CoNLL-U reader for per-tweet dependency parses.
//!
//! Sentences are keyed by a `# tweet_id = <id>` comment. Only the ID, FORM, UPOS and HEAD
//! columns are used; multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNode {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub upos: String,
    /// Index of the parent node, 0 for the root.
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyParse {
    nodes: Vec<ParseNode>,
}

impl DependencyParse {
    /// Builds a parse, checking that indices are 1..=n in order, heads are in range,
    /// there is exactly one root and the head relation has no cycle.
    pub fn new(nodes: Vec<ParseNode>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "dependency parse has no nodes".into(),
            ));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.index != i + 1 {
                return Err(Error::InvalidArgument(format!(
                    "node {} has index {}, expected {}",
                    node.surface,
                    node.index,
                    i + 1
                )));
            }
            if node.head > n {
                return Err(Error::InvalidArgument(format!(
                    "node {} has head {} outside [0, {n}]",
                    node.index, node.head
                )));
            }
        }
        let roots = nodes.iter().filter(|n| n.head == 0).count();
        if roots != 1 {
            return Err(Error::InvalidArgument(format!(
                "dependency parse has {roots} roots, expected exactly one"
            )));
        }
        // Walk up from every node; a path longer than n means a cycle.
        for start in &nodes {
            let mut cur = start.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidArgument(format!(
                        "head relation has a cycle through node {}",
                        start.index
                    )));
                }
                cur = nodes[cur - 1].head;
            }
        }
        Ok(DependencyParse { nodes })
    }

    pub fn nodes(&self) -> &[ParseNode] {
        &self.nodes
    }

    /// Iterates over `(dependent, head)` pairs, skipping the root attachment.
    pub fn edges(&self) -> impl Iterator<Item = (&ParseNode, &ParseNode)> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.head != 0)
            .map(move |n| (n, &self.nodes[n.head - 1]))
    }
}

/// Parses CoNLL-U text into parses keyed by tweet id.
pub fn parse_conllu(text: &str, source: &str) -> Result<BTreeMap<String, DependencyParse>> {
    let mut out = BTreeMap::new();
    let mut id: Option<String> = None;
    let mut nodes: Vec<ParseNode> = Vec::new();
    let mut start_line = 1;

    let mut flush =
        |id: &mut Option<String>, nodes: &mut Vec<ParseNode>, line: usize| -> Result<()> {
            if nodes.is_empty() {
                *id = None;
                return Ok(());
            }
            let Some(tweet_id) = id.take() else {
                return Err(Error::format(
                    format!("{source}:{line}"),
                    "sentence without `# tweet_id = ...` comment",
                ));
            };
            let parse = DependencyParse::new(std::mem::take(nodes))
                .map_err(|e| Error::format(format!("{source}:{line}"), e.to_string()))?;
            if out.insert(tweet_id.clone(), parse).is_some() {
                log::warn!("{source}: duplicate parse for tweet {tweet_id}, keeping the last one");
            }
            Ok(())
        };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut id, &mut nodes, start_line)?;
            start_line = lineno + 1;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "tweet_id" {
                    id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 7 {
            return Err(Error::format(
                format!("{source}:{lineno}"),
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let parse_num = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| {
                Error::format(format!("{source}:{lineno}"), format!("bad {what} `{s}`"))
            })
        };
        nodes.push(ParseNode {
            index: parse_num(cols[0], "ID")?,
            surface: cols[1].to_string(),
            upos: cols[3].to_string(),
            head: parse_num(cols[6], "HEAD")?,
        });
    }
    flush(&mut id, &mut nodes, start_line)?;
    Ok(out)
}

pub fn load_conllu(path: &Path) -> Result<BTreeMap<String, DependencyParse>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(&text, &path.display().to_string())
}

/// Serializes one parse as a CoNLL-U sentence block (unused columns are `_`).
pub fn write_conllu_sentence(out: &mut String, tweet_id: &str, parse: &DependencyParse) {
    let _ = writeln!(out, "# tweet_id = {tweet_id}");
    for n in parse.nodes() {
        let deprel = if n.head == 0 { "root" } else { "dep" };
        let _ = writeln!(
            out,
            "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_",
            n.index, n.surface, n.upos, n.head, deprel
        );
    }
    out.push('\n');
}
