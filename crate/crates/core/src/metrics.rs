//! Corpus statistics: joint counts, pairwise tree edit distance and
//! distinct structures, plus generation timing.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::joints::expand_compounds;
use crate::pipeline::{generate_batch, CategoryData, GenConfig, PipelineError};
use crate::rng::SeededStream;
use crate::tree::{canonicalize, ArticulationTree};

/// Largest tree accepted by [`tree_edit_distance`].
pub const MAX_TED_NODES: usize = 10_000;
/// Corpora above this size use a seeded subsample for pairwise distances.
pub const TED_SUBSAMPLE: usize = 500;
const TED_SUBSAMPLE_SEED: u64 = 0x7ed5_0b5a_3c1e_0001;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("tree has {0} nodes; tree edit distance is capped at {MAX_TED_NODES}")]
    TreeTooLarge(usize),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Node label used for edit distances: the semantic label plus the tag of
/// the joint above it, so distance zero means equal structure strings.
fn ted_label(tree: &ArticulationTree, n: usize) -> String {
    match &tree.edge_joint[n] {
        Some(slot) => format!("{}[{}]", tree.nodes[n].label, slot.tag()),
        None => tree.nodes[n].label.to_string(),
    }
}

/// Post-order labels and leftmost-leaf indices.
struct Postorder {
    labels: Vec<String>,
    leftmost: Vec<usize>,
}

fn postorder(tree: &ArticulationTree) -> Postorder {
    let kids = tree.children_lists();
    let mut labels = Vec::with_capacity(tree.len());
    let mut leftmost = Vec::with_capacity(tree.len());
    let Some(root) = tree.root() else {
        return Postorder { labels, leftmost };
    };
    // (node, next child cursor, leftmost leaf position once known)
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(root, 0, None)];
    while let Some(top) = stack.last_mut() {
        let (n, cursor, lm) = *top;
        if cursor < kids[n].len() {
            top.1 += 1;
            stack.push((kids[n][cursor], 0, None));
            continue;
        }
        stack.pop();
        let pos = labels.len();
        let lm = lm.unwrap_or(pos);
        labels.push(ted_label(tree, n));
        leftmost.push(lm);
        if let Some(parent) = stack.last_mut() {
            if parent.2.is_none() {
                parent.2 = Some(lm);
            }
        }
    }
    Postorder { labels, leftmost }
}

fn keyroots(p: &Postorder) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for i in (0..p.labels.len()).rev() {
        if seen.insert(p.leftmost[i]) {
            out.push(i);
        }
    }
    out.reverse();
    out
}

/// Ordered labelled tree edit distance with unit insert, delete and relabel
/// costs (Zhang-Shasha). Trees are compared in their current sibling order;
/// canonicalize both first for an order-independent comparison.
pub fn tree_edit_distance(a: &ArticulationTree, b: &ArticulationTree) -> Result<usize, MetricsError> {
    for t in [a, b] {
        if t.len() > MAX_TED_NODES {
            return Err(MetricsError::TreeTooLarge(t.len()));
        }
    }
    let (pa, pb) = (postorder(a), postorder(b));
    let (n, m) = (pa.labels.len(), pb.labels.len());
    if n == 0 || m == 0 {
        return Ok(n + m);
    }
    let mut td = vec![vec![0usize; m]; n];
    let mut fd = vec![vec![0usize; m + 1]; n + 1];
    for &i in &keyroots(&pa) {
        for &j in &keyroots(&pb) {
            let (li, lj) = (pa.leftmost[i], pb.leftmost[j]);
            // fd[x][y]: forest li..li+x-1 of a versus lj..lj+y-1 of b.
            let (w, h) = (i - li + 1, j - lj + 1);
            fd[0][0] = 0;
            for x in 1..=w {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=h {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=w {
                let ia = li + x - 1;
                for y in 1..=h {
                    let jb = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if pa.leftmost[ia] == li && pb.leftmost[jb] == lj {
                        let sub = fd[x - 1][y - 1] + usize::from(pa.labels[ia] != pb.labels[jb]);
                        fd[x][y] = del.min(ins).min(sub);
                        td[ia][jb] = fd[x][y];
                    } else {
                        let xa = pa.leftmost[ia] - li;
                        let yb = pb.leftmost[jb] - lj;
                        fd[x][y] = del.min(ins).min(fd[xa][yb] + td[ia][jb]);
                    }
                }
            }
        }
    }
    Ok(td[n - 1][m - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusMetrics {
    pub object_count: usize,
    pub avg_joint_number: f64,
    pub joint_number_variance: f64,
    pub mean_pairwise_ted: f64,
    pub distinct_structure_count: usize,
    /// Number of trees the pairwise distance was computed over when the
    /// corpus was subsampled.
    pub ted_subsample: Option<usize>,
    pub seconds_per_object: Option<f64>,
}

impl CorpusMetrics {
    /// One `key: value` line per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "object_count: {}", self.object_count);
        let _ = writeln!(s, "avg_joint_number: {}", self.avg_joint_number);
        let _ = writeln!(s, "joint_number_variance: {}", self.joint_number_variance);
        let _ = writeln!(s, "mean_pairwise_ted: {}", self.mean_pairwise_ted);
        let _ = writeln!(s, "distinct_structure_count: {}", self.distinct_structure_count);
        if let Some(k) = self.ted_subsample {
            let _ = writeln!(s, "ted_subsample: {k}");
        }
        if let Some(t) = self.seconds_per_object {
            let _ = writeln!(s, "seconds_per_object: {t}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

fn subsample(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SeededStream::new(TED_SUBSAMPLE_SEED);
    for i in 0..TED_SUBSAMPLE {
        let j = i + rng.index(n - i);
        idx.swap(i, j);
    }
    idx.truncate(TED_SUBSAMPLE);
    idx.sort_unstable();
    idx
}

/// Joint counts are link counts minus one after compound expansion. The
/// variance is the population variance. Timings, when given, are per-object
/// seconds and are averaged.
pub fn corpus_stats(trees: &[ArticulationTree], timings: Option<&[f64]>) -> Result<CorpusMetrics, MetricsError> {
    if trees.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let canon: Vec<ArticulationTree> = trees.iter().map(|t| canonicalize(&expand_compounds(t))).collect();
    let n = canon.len() as f64;
    let joints: Vec<f64> = canon.iter().map(|t| t.joint_count() as f64).collect();
    let avg = joints.iter().sum::<f64>() / n;
    let variance = joints.iter().map(|j| (j - avg).powi(2)).sum::<f64>() / n;
    let distinct = canon.iter().map(ArticulationTree::structure_string).collect::<BTreeSet<_>>().len();

    let (pool, ted_subsample) = if canon.len() > TED_SUBSAMPLE {
        (subsample(canon.len()), Some(TED_SUBSAMPLE))
    } else {
        ((0..canon.len()).collect(), None)
    };
    let pairs: Vec<(usize, usize)> = (0..pool.len())
        .flat_map(|i| (i + 1..pool.len()).map(move |j| (i, j)))
        .collect();
    let total: usize = pairs
        .par_iter()
        .map(|&(i, j)| tree_edit_distance(&canon[pool[i]], &canon[pool[j]]))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let mean_ted = if pairs.is_empty() {
        0.0
    } else {
        total as f64 / pairs.len() as f64
    };
    let seconds_per_object = timings.filter(|t| !t.is_empty()).map(|t| t.iter().sum::<f64>() / t.len() as f64);
    Ok(CorpusMetrics {
        object_count: canon.len(),
        avg_joint_number: avg,
        joint_number_variance: variance,
        mean_pairwise_ted: mean_ted,
        distinct_structure_count: distinct,
        ted_subsample,
        seconds_per_object,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub object_count: usize,
    pub total_seconds: f64,
    pub seconds_per_object: f64,
    pub single_threaded: bool,
}

/// Wall-clock generation time of `config.count` objects, including URDF and
/// OBJ serialization but not disk writes. With `single_threaded` the whole
/// run, sweeps included, stays on one thread.
pub fn timing_harness(config: &GenConfig, single_threaded: bool) -> Result<TimingReport, PipelineError> {
    let data = CategoryData::load(&config.data_dir, &config.category)?;
    let threads = if single_threaded { Some(1) } else { config.threads };
    let start = Instant::now();
    let objects = generate_batch(&data, config.seed, config.count, config.samples_per_joint, threads)?;
    for obj in objects {
        let obj = obj?;
        crate::export::urdf_string(&obj.tree)?;
        for mesh in obj.tree.meshes.values() {
            crate::geometry::obj_to_string(mesh, None, None);
        }
    }
    let total = start.elapsed().as_secs_f64();
    Ok(TimingReport {
        object_count: config.count as usize,
        total_seconds: total,
        seconds_per_object: total / config.count.max(1) as f64,
        single_threaded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{JointSlot, SemanticLabel};

    fn chain(labels: &[&str]) -> ArticulationTree {
        let mut t = ArticulationTree::with_root("t", SemanticLabel::new("t", labels[0]));
        for (i, l) in labels.iter().enumerate().skip(1) {
            t.add_child(i - 1, SemanticLabel::new("t", *l), JointSlot::Unassigned);
        }
        t
    }

    #[test]
    fn small_cases() {
        let a = chain(&["a"]);
        let ab = chain(&["a", "b"]);
        assert_eq!(tree_edit_distance(&a, &a).unwrap(), 0);
        assert_eq!(tree_edit_distance(&a, &ab).unwrap(), 1);
        assert_eq!(tree_edit_distance(&ab, &a).unwrap(), 1);
        assert_eq!(tree_edit_distance(&chain(&["a", "b"]), &chain(&["b", "a"])).unwrap(), 2);
    }

    #[test]
    fn classic_example() {
        // f(d(a c(b)) e) vs f(c(d(a b)) e): distance 2.
        let mut t1 = ArticulationTree::with_root("t", SemanticLabel::new("t", "f"));
        let d = t1.add_child(0, SemanticLabel::new("t", "d"), JointSlot::Unassigned);
        t1.add_child(d, SemanticLabel::new("t", "a"), JointSlot::Unassigned);
        let c = t1.add_child(d, SemanticLabel::new("t", "c"), JointSlot::Unassigned);
        t1.add_child(c, SemanticLabel::new("t", "b"), JointSlot::Unassigned);
        t1.add_child(0, SemanticLabel::new("t", "e"), JointSlot::Unassigned);
        let mut t2 = ArticulationTree::with_root("t", SemanticLabel::new("t", "f"));
        let c = t2.add_child(0, SemanticLabel::new("t", "c"), JointSlot::Unassigned);
        let d = t2.add_child(c, SemanticLabel::new("t", "d"), JointSlot::Unassigned);
        t2.add_child(d, SemanticLabel::new("t", "a"), JointSlot::Unassigned);
        t2.add_child(d, SemanticLabel::new("t", "b"), JointSlot::Unassigned);
        t2.add_child(0, SemanticLabel::new("t", "e"), JointSlot::Unassigned);
        assert_eq!(tree_edit_distance(&t1, &t2).unwrap(), 2);
    }

    #[test]
    fn corpus_arithmetic() {
        let three = chain(&["a", "b", "c"]);
        let m = corpus_stats(&[three.clone(), three], None).unwrap();
        assert_eq!((m.avg_joint_number, m.joint_number_variance, m.mean_pairwise_ted), (2.0, 0.0, 0.0));
        assert_eq!(m.distinct_structure_count, 1);
        let m = corpus_stats(&[chain(&["a", "b", "c"]), chain(&["a", "b", "c", "d", "e"])], Some(&[0.5, 1.5])).unwrap();
        assert_eq!((m.avg_joint_number, m.joint_number_variance), (3.0, 1.0));
        assert_eq!(m.seconds_per_object, Some(1.0));
        assert_eq!(corpus_stats(&[], None), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn subsample_is_stable() {
        let s = subsample(800);
        assert_eq!(s.len(), TED_SUBSAMPLE);
        assert_eq!(s, subsample(800));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
