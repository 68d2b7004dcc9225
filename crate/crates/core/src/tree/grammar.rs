//! Category growth grammars and tree growth.
//!
//! File format (one file per category, `#` starts a comment):
//!
//! ```text
//! category: cabinet
//! root: body
//! max_depth: 4
//! ground_fix: base_insert
//!
//! body:
//!   requested: [leg x4]
//!   plausible: [drawer p=0.5 x[1..4], door p=0.5 x[1..2]]
//! drawer:
//!   requested: [handle x[1..2]]
//! handle:
//! leg:
//! ```
//!
//! Top-level keys are `category`, `root`, `max_depth`, `max_nodes` and
//! `ground_fix` (`base_insert` or `limit_clamp`). Every other unindented
//! `name:` line opens the rule block of a label; blocks accept `requested`
//! and `plausible`. Every label used anywhere needs a block, possibly empty.

use std::collections::{BTreeMap, VecDeque};

use super::{ArticulationTree, JointSlot, SemanticLabel, TreeError, DEFAULT_MAX_DEPTH, DEFAULT_MAX_NODES};
use crate::plausibility::GroundFixPolicy;
use crate::rng::SeededStream;
use crate::syntax::{self, SyntaxError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountSpec {
    Exact(u32),
    Range(u32, u32),
}

impl CountSpec {
    pub fn bounds(self) -> (u32, u32) {
        match self {
            CountSpec::Exact(n) => (n, n),
            CountSpec::Range(lo, hi) => (lo, hi),
        }
    }

    /// Exact counts consume no draw; ranges consume one even when `lo == hi`.
    fn sample(self, rng: &mut SeededStream) -> u32 {
        match self {
            CountSpec::Exact(n) => n,
            CountSpec::Range(lo, hi) => rng.int_inclusive(lo, hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Requested {
    pub label: String,
    pub count: CountSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plausible {
    pub label: String,
    pub probability: f64,
    pub count: (u32, u32),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rule {
    pub requested: Vec<Requested>,
    pub plausible: Vec<Plausible>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthGrammar {
    pub category: String,
    pub root: String,
    /// Rule per part name; the keys are the label alphabet.
    pub rules: BTreeMap<String, Rule>,
    pub max_depth: u32,
    pub max_nodes: usize,
    pub ground_fix: GroundFixPolicy,
}

fn parse_count(tok: &str, line: usize) -> Result<CountSpec, SyntaxError> {
    let body = tok
        .strip_prefix('x')
        .ok_or_else(|| SyntaxError::new(line, format!("expected a count `xN` or `x[lo..hi]`, got `{tok}`")))?;
    if body.starts_with('[') {
        let (lo, hi) = syntax::parse_int_range(body, line)?;
        Ok(CountSpec::Range(lo, hi))
    } else {
        Ok(CountSpec::Exact(syntax::parse_u32(body, line)?))
    }
}

fn parse_requested(item: &str, line: usize) -> Result<Requested, SyntaxError> {
    let toks = syntax::tokens(item);
    let label = toks
        .first()
        .ok_or_else(|| SyntaxError::new(line, "empty requested entry"))?;
    let count = match toks.len() {
        1 => CountSpec::Exact(1),
        2 => parse_count(&toks[1], line)?,
        _ => return Err(SyntaxError::new(line, format!("unexpected tokens in `{item}`"))),
    };
    Ok(Requested {
        label: label.clone(),
        count,
    })
}

fn parse_plausible(item: &str, line: usize) -> Result<Plausible, SyntaxError> {
    let toks = syntax::tokens(item);
    let label = toks
        .first()
        .ok_or_else(|| SyntaxError::new(line, "empty plausible entry"))?
        .clone();
    let mut probability = None;
    let mut count = (1, 1);
    for t in &toks[1..] {
        if let Some(("p", v)) = syntax::key_value(t) {
            probability = Some(syntax::parse_f64(v, line)?);
        } else if t.starts_with('x') {
            count = parse_count(t, line)?.bounds();
        } else {
            return Err(SyntaxError::new(line, format!("unexpected token `{t}` in `{item}`")));
        }
    }
    let probability =
        probability.ok_or_else(|| SyntaxError::new(line, format!("plausible entry `{item}` lacks p=<prob>")))?;
    Ok(Plausible {
        label,
        probability,
        count,
    })
}

impl GrowthGrammar {
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let mut category = None;
        let mut root = None;
        let mut max_depth = DEFAULT_MAX_DEPTH;
        let mut max_nodes = DEFAULT_MAX_NODES;
        let mut ground_fix = GroundFixPolicy::BaseInsert;
        let mut rules: BTreeMap<String, Rule> = BTreeMap::new();
        let mut current: Option<String> = None;

        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let body = syntax::strip_comment(raw);
            if body.trim().is_empty() {
                continue;
            }
            let indented = body.starts_with(char::is_whitespace);
            let (key, value) = body
                .split_once(':')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| SyntaxError::new(line, format!("expected `key: value`, got `{}`", body.trim())))?;

            if indented {
                let Some(label) = &current else {
                    return Err(SyntaxError::new(line, format!("`{key}` outside a label block")).into());
                };
                let rule = rules.get_mut(label).expect("block registered");
                let items = syntax::list_items(value, line)?;
                match key {
                    "requested" => {
                        for it in items {
                            rule.requested.push(parse_requested(&it, line)?);
                        }
                    }
                    "plausible" => {
                        for it in items {
                            rule.plausible.push(parse_plausible(&it, line)?);
                        }
                    }
                    other => {
                        return Err(SyntaxError::new(line, format!("unknown rule key `{other}`")).into());
                    }
                }
                continue;
            }

            current = None;
            match key {
                "category" => category = Some(value.to_string()),
                "root" => root = Some(value.to_string()),
                "max_depth" => max_depth = syntax::parse_u32(value, line)?,
                "max_nodes" => max_nodes = syntax::parse_u32(value, line)? as usize,
                "ground_fix" => {
                    ground_fix = match value {
                        "base_insert" => GroundFixPolicy::BaseInsert,
                        "limit_clamp" => GroundFixPolicy::LimitClamp,
                        other => {
                            return Err(SyntaxError::new(line, format!("unknown ground_fix `{other}`")).into());
                        }
                    }
                }
                label if value.is_empty() && syntax::is_identifier(label) => {
                    if rules.contains_key(label) {
                        return Err(SyntaxError::new(line, format!("duplicate block `{label}`")).into());
                    }
                    rules.insert(label.to_string(), Rule::default());
                    current = Some(label.to_string());
                }
                other => {
                    return Err(SyntaxError::new(line, format!("unknown key `{other}`")).into());
                }
            }
        }

        let grammar = GrowthGrammar {
            category: category.ok_or_else(|| TreeError::InvalidGrammar("missing `category`".into()))?,
            root: root.ok_or_else(|| TreeError::InvalidGrammar("missing `root`".into()))?,
            rules,
            max_depth,
            max_nodes,
            ground_fix,
        };
        grammar.check()?;
        Ok(grammar)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TreeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TreeError::InvalidGrammar(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks the declared-label, probability and count-range invariants.
    pub fn check(&self) -> Result<(), TreeError> {
        if !syntax::is_identifier(&self.category) {
            return Err(TreeError::InvalidGrammar(format!("bad category `{}`", self.category)));
        }
        if !self.rules.contains_key(&self.root) {
            return Err(TreeError::LabelUnknown(self.root.clone()));
        }
        for (label, rule) in &self.rules {
            if label == super::DUMMY_PART || label == super::PLINTH_PART {
                return Err(TreeError::InvalidGrammar(format!("`{label}` is a reserved label")));
            }
            for r in &rule.requested {
                if !self.rules.contains_key(&r.label) {
                    return Err(TreeError::LabelUnknown(r.label.clone()));
                }
                let (lo, hi) = r.count.bounds();
                if lo > hi {
                    return Err(TreeError::InvalidGrammar(format!("{label}: empty count for {}", r.label)));
                }
            }
            for p in &rule.plausible {
                if !self.rules.contains_key(&p.label) {
                    return Err(TreeError::LabelUnknown(p.label.clone()));
                }
                if !(0.0..=1.0).contains(&p.probability) {
                    return Err(TreeError::InvalidGrammar(format!(
                        "{label}: probability {} of {} outside [0, 1]",
                        p.probability, p.label
                    )));
                }
                if p.count.0 > p.count.1 {
                    return Err(TreeError::InvalidGrammar(format!("{label}: empty count for {}", p.label)));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self, part: &str) -> SemanticLabel {
        SemanticLabel::new(self.category.clone(), part)
    }

    /// Copy with every plausible-branch probability replaced by `p`.
    pub fn with_branch_probability(&self, p: f64) -> Self {
        let mut g = self.clone();
        for rule in g.rules.values_mut() {
            for b in &mut rule.plausible {
                b.probability = p;
            }
        }
        g
    }
}

/// Grows a tree breadth-first from the root label. For each expanded node the
/// draws are: one per ranged requested count in rule order, then for each
/// plausible branch in rule order one Bernoulli draw and, if taken, one count
/// draw.
pub fn grow_tree(grammar: &GrowthGrammar, rng: &mut SeededStream) -> Result<ArticulationTree, TreeError> {
    let mut tree = ArticulationTree::with_root(grammar.category.clone(), grammar.label(&grammar.root));
    let mut queue = VecDeque::from([(0usize, 0u32)]);
    while let Some((node, depth)) = queue.pop_front() {
        let part = tree.nodes[node].label.part.clone();
        let rule = grammar
            .rules
            .get(&part)
            .ok_or_else(|| TreeError::LabelUnknown(part.clone()))?;

        let mut spawn: Vec<(&str, u32)> = Vec::new();
        for r in &rule.requested {
            spawn.push((&r.label, r.count.sample(rng)));
        }
        for b in &rule.plausible {
            if rng.bernoulli(b.probability) {
                spawn.push((&b.label, rng.int_inclusive(b.count.0, b.count.1)));
            }
        }

        for (label, count) in spawn {
            if count == 0 {
                continue;
            }
            if !grammar.rules.contains_key(label) {
                return Err(TreeError::LabelUnknown(label.to_string()));
            }
            if depth + 1 > grammar.max_depth {
                return Err(TreeError::GrammarDiverges(format!(
                    "`{label}` under `{part}` would exceed max depth {}",
                    grammar.max_depth
                )));
            }
            for _ in 0..count {
                if tree.len() >= grammar.max_nodes {
                    return Err(TreeError::GrammarDiverges(format!(
                        "more than {} nodes",
                        grammar.max_nodes
                    )));
                }
                let child = tree.add_child(node, grammar.label(label), JointSlot::Unassigned);
                queue.push_back((child, depth + 1));
            }
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMP: &str = "category: lamp\nroot: base\nbase:\n  requested: [pole x1]\npole:\n  requested: [head]\nhead:\n";

    #[test]
    fn forced_chain() {
        let g = GrowthGrammar::parse(LAMP).unwrap();
        let t = grow_tree(&g, &mut SeededStream::new(1)).unwrap();
        assert_eq!(t.structure_string(), "lamp/base(lamp/pole[none](lamp/head[none]))");
    }

    #[test]
    fn certain_branch() {
        let text = "category: cabinet\nroot: body\nbody:\n  requested: [leg x4]\n  plausible: [drawer p=1.0 x[2..2]]\ndrawer:\n  requested: [handle x[1..1]]\nhandle:\nleg:\n";
        let g = GrowthGrammar::parse(text).unwrap();
        for seed in 0..20 {
            let t = grow_tree(&g, &mut SeededStream::new(seed)).unwrap();
            assert_eq!(t.len(), 1 + 4 + 2 + 2);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            GrowthGrammar::parse("category: a\nroot: b\nb:\n  requested: [c]\n"),
            Err(TreeError::LabelUnknown(l)) if l == "c"
        ));
        assert!(GrowthGrammar::parse("category: a\nroot: b\ncolour: red\nb:\n").is_err());
        assert!(GrowthGrammar::parse("category: a\nroot: b\nb:\n  optional: [b]\n").is_err());
        assert!(GrowthGrammar::parse("category: a\nroot: b\nb:\n  plausible: [b p=1.5]\n").is_err());
        assert!(GrowthGrammar::parse("category: a\nroot: b\nb:\n  plausible: [b x[3..1] p=0.5]\n").is_err());
        assert!(GrowthGrammar::parse("category: a\nroot: dummy\ndummy:\n").is_err());
    }

    #[test]
    fn divergent_grammar_is_an_error() {
        let g = GrowthGrammar::parse("category: a\nroot: b\nb:\n  requested: [b x2]\n").unwrap();
        assert!(matches!(grow_tree(&g, &mut SeededStream::new(0)), Err(TreeError::GrammarDiverges(_))));
        let g = GrowthGrammar::parse("category: a\nroot: b\nmax_depth: 40\nb:\n  requested: [b x2]\n").unwrap();
        assert!(matches!(grow_tree(&g, &mut SeededStream::new(0)), Err(TreeError::GrammarDiverges(_))));
    }
}
