//! Heading normalization: map raw section headings to a small label set.
//!
//! Headings are matched to synsets through an offline lexicon, matched
//! synsets form an undirected multigraph (one edge per lemma co-match), dense
//! communities become topic clusters, and low-count clusters are pruned to
//! `other` by the head/tail rule.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::corpus::OTHER_LABEL;
use crate::{Error, Result};

/// A distinct heading string with its number of occurrences in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadingRecord {
    pub heading: String,
    pub count: usize,
}

/// Offline lemma -> synsets lexicon with a primary lemma per synset.
///
/// TSV rows: `lemma \t synset_id \t primary_lemma`.
#[derive(Debug, Clone, Default)]
pub struct SynsetLexicon {
    by_lemma: BTreeMap<String, Vec<String>>,
    primary: BTreeMap<String, String>,
}

impl SynsetLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lemma: &str, synset: &str, primary: &str) {
        let lemma = lemma.to_lowercase();
        let entry = self.by_lemma.entry(lemma).or_default();
        if !entry.iter().any(|s| s == synset) {
            entry.push(synset.to_string());
        }
        self.primary
            .entry(synset.to_string())
            .or_insert_with(|| primary.to_string());
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut lexicon = Self::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Config(format!(
                    "lexicon line {}: expected 3 tab-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            if fields[1].is_empty() {
                return Err(Error::Config(format!("lexicon line {}: empty synset id", lineno + 1)));
            }
            lexicon.insert(fields[0], fields[1], fields[2]);
        }
        Ok(lexicon)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn synsets(&self, lemma: &str) -> Option<&[String]> {
        self.by_lemma.get(lemma).map(|v| v.as_slice())
    }

    pub fn primary_lemma(&self, synset: &str) -> Option<&str> {
        self.primary.get(synset).map(|s| s.as_str())
    }
}

/// Undirected synset graph with edge multiplicity.
#[derive(Debug, Clone, Default)]
pub struct SynsetGraph {
    adjacency: BTreeMap<String, BTreeMap<String, f64>>,
}

impl SynsetGraph {
    pub fn add_node(&mut self, node: &str) {
        self.adjacency.entry(node.to_string()).or_default();
    }

    /// Add weight to the undirected edge `(a, b)`; self-loops are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) {
        if a == b {
            return;
        }
        self.add_node(a);
        self.add_node(b);
        *self
            .adjacency
            .get_mut(a)
            .unwrap()
            .entry(b.to_string())
            .or_insert(0.0) += weight;
        *self
            .adjacency
            .get_mut(b)
            .unwrap()
            .entry(a.to_string())
            .or_insert(0.0) += weight;
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(|s| s.as_str())
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_weight(&self, a: &str, b: &str) -> f64 {
        self.adjacency
            .get(a)
            .and_then(|n| n.get(b))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn neighbors(&self, node: &str) -> impl Iterator<Item = (&str, f64)> {
        self.adjacency
            .get(node)
            .into_iter()
            .flat_map(|n| n.iter().map(|(k, &w)| (k.as_str(), w)))
    }

    pub fn weighted_degree(&self, node: &str) -> f64 {
        self.neighbors(node).map(|(_, w)| w).sum()
    }

    /// Total edge weight (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.adjacency
            .values()
            .flat_map(|n| n.values())
            .sum::<f64>()
            / 2.0
    }
}

/// Build the synset graph: every lemma (lowercased heading) maps to a synset
/// set, and all pairs within one set are connected with multiplicity one per
/// lemma. Headings without a lexicon entry are returned as unmatched.
pub fn build_synset_graph(
    headings: &[HeadingRecord],
    lexicon: &SynsetLexicon,
) -> (SynsetGraph, Vec<String>) {
    let mut graph = SynsetGraph::default();
    let mut unmatched = Vec::new();
    let mut seen_lemmas = BTreeSet::new();
    for record in headings {
        let lemma = record.heading.to_lowercase();
        match lexicon.synsets(&lemma) {
            None => unmatched.push(record.heading.clone()),
            Some(synsets) => {
                for s in synsets {
                    graph.add_node(s);
                }
                // One co-match per distinct lemma.
                if seen_lemmas.insert(lemma) {
                    for i in 0..synsets.len() {
                        for j in (i + 1)..synsets.len() {
                            graph.add_edge(&synsets[i], &synsets[j], 1.0);
                        }
                    }
                }
            }
        }
    }
    (graph, unmatched)
}

/// Greedy modularity maximization (CNM-style agglomeration).
///
/// Starts from singleton communities and repeatedly merges the connected pair
/// with the largest modularity gain, stopping when no merge improves
/// modularity. Ties break on the lexicographically smallest community pair
/// (communities named by their smallest member). Returns member lists sorted
/// within and across communities.
pub fn detect_communities(graph: &SynsetGraph) -> Vec<Vec<String>> {
    let nodes: Vec<String> = graph.nodes().map(|s| s.to_string()).collect();
    if nodes.is_empty() {
        return Vec::new();
    }
    let m = graph.total_weight();
    if m == 0.0 {
        return nodes.into_iter().map(|n| vec![n]).collect();
    }

    // Community state: members, total weighted degree, and inter-community
    // edge weights. Communities are identified by their index; `rep` caches
    // the smallest member for deterministic tie-breaking.
    struct Community {
        members: Vec<String>,
        rep: String,
        degree: f64,
        alive: bool,
    }
    let mut communities: Vec<Community> = nodes
        .iter()
        .map(|n| Community {
            members: vec![n.clone()],
            rep: n.clone(),
            degree: graph.weighted_degree(n),
            alive: true,
        })
        .collect();
    let index_of: BTreeMap<&String, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut between: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        for (nb, w) in graph.neighbors(n) {
            let j = index_of[&nb.to_string()];
            if i < j {
                *between.entry((i, j)).or_insert(0.0) += w;
            }
        }
    }

    let two_m = 2.0 * m;
    loop {
        let mut best: Option<((usize, usize), f64)> = None;
        for (&(i, j), &w_ij) in &between {
            if !communities[i].alive || !communities[j].alive {
                continue;
            }
            let gain = 2.0 * (w_ij / two_m
                - (communities[i].degree / two_m) * (communities[j].degree / two_m));
            let better = match &best {
                None => true,
                Some((bp, bg)) => {
                    gain > *bg + 1e-12
                        || ((gain - *bg).abs() <= 1e-12 && {
                            let cand = ordered_reps(&communities[i].rep, &communities[j].rep);
                            let cur = ordered_reps(&communities[bp.0].rep, &communities[bp.1].rep);
                            cand < cur
                        })
                }
            };
            if better {
                best = Some(((i, j), gain));
            }
        }
        let Some(((a, b), gain)) = best else { break };
        if gain <= 1e-12 {
            break;
        }
        // Merge b into a.
        let b_members = std::mem::take(&mut communities[b].members);
        communities[a].members.extend(b_members);
        if communities[b].rep < communities[a].rep {
            communities[a].rep = communities[b].rep.clone();
        }
        communities[a].degree += communities[b].degree;
        communities[b].alive = false;
        // Rewire inter-community weights of b onto a.
        let edges: Vec<((usize, usize), f64)> = between
            .iter()
            .filter(|&(&(i, j), _)| i == b || j == b)
            .map(|(&k, &w)| (k, w))
            .collect();
        for ((i, j), w) in edges {
            between.remove(&(i, j));
            let other = if i == b { j } else { i };
            if other == a {
                continue;
            }
            let key = if other < a { (other, a) } else { (a, other) };
            *between.entry(key).or_insert(0.0) += w;
        }
    }

    let mut out: Vec<Vec<String>> = communities
        .into_iter()
        .filter(|c| c.alive)
        .map(|mut c| {
            c.members.sort();
            c.members
        })
        .collect();
    out.sort();
    out
}

fn ordered_reps<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Representative synset of a cluster: maximal weighted degree within the
/// cluster, ties to the lexicographically smallest id. The label is the
/// synset's primary lemma.
pub fn representative_label(
    members: &[String],
    graph: &SynsetGraph,
    lexicon: &SynsetLexicon,
) -> String {
    let member_set: BTreeSet<&str> = members.iter().map(|s| s.as_str()).collect();
    let mut best: Option<(&str, f64)> = None;
    for member in members {
        let degree: f64 = graph
            .neighbors(member)
            .filter(|(n, _)| member_set.contains(n))
            .map(|(_, w)| w)
            .sum();
        let better = match best {
            None => true,
            Some((bm, bd)) => degree > bd || (degree == bd && member.as_str() < bm),
        };
        if better {
            best = Some((member, degree));
        }
    }
    let id = best.map(|(m, _)| m).unwrap_or_default();
    lexicon
        .primary_lemma(id)
        .unwrap_or(id)
        .to_string()
}

/// A normalized topic cluster.
#[derive(Debug, Clone, Serialize)]
pub struct TopicCluster {
    pub members: Vec<String>,
    pub representative_label: String,
    /// Sum of occurrence counts of the headings assigned to this cluster.
    pub total_count: usize,
}

/// Assign each matched heading to the community containing the most of its
/// synsets (ties to the community with the smallest member id) and accumulate
/// heading counts per cluster. Returns clusters plus the per-heading
/// assignment (`None` for unmatched headings).
pub fn assign_headings(
    headings: &[HeadingRecord],
    lexicon: &SynsetLexicon,
    communities: &[Vec<String>],
    graph: &SynsetGraph,
) -> (Vec<TopicCluster>, BTreeMap<String, Option<usize>>) {
    let mut community_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (ci, members) in communities.iter().enumerate() {
        for m in members {
            community_of.insert(m, ci);
        }
    }
    let mut clusters: Vec<TopicCluster> = communities
        .iter()
        .map(|members| TopicCluster {
            members: members.clone(),
            representative_label: representative_label(members, graph, lexicon),
            total_count: 0,
        })
        .collect();
    let mut assignment = BTreeMap::new();
    for record in headings {
        let lemma = record.heading.to_lowercase();
        let chosen = lexicon.synsets(&lemma).and_then(|synsets| {
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for s in synsets {
                if let Some(&ci) = community_of.get(s.as_str()) {
                    *votes.entry(ci).or_insert(0) += 1;
                }
            }
            votes
                .into_iter()
                .max_by(|a, b| {
                    a.1.cmp(&b.1)
                        .then_with(|| communities[b.0][0].cmp(&communities[a.0][0]))
                })
                .map(|(ci, _)| ci)
        });
        if let Some(ci) = chosen {
            clusters[ci].total_count += record.count;
        }
        assignment.insert(record.heading.clone(), chosen);
    }
    (clusters, assignment)
}

/// Head/tail pruning: keep clusters whose count is at least the mean count;
/// clusters strictly below the mean are pruned (their headings relabel to
/// `other`). Returns `(kept, pruned)`.
pub fn prune_clusters(clusters: Vec<TopicCluster>) -> (Vec<TopicCluster>, Vec<TopicCluster>) {
    if clusters.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let mean = clusters.iter().map(|c| c.total_count).sum::<usize>() as f64
        / clusters.len() as f64;
    clusters
        .into_iter()
        .partition(|c| c.total_count as f64 >= mean)
}

/// Fraction of heading occurrences mapped into kept clusters.
pub fn coverage(
    headings: &[HeadingRecord],
    assignment: &BTreeMap<String, Option<usize>>,
    kept: &BTreeSet<usize>,
) -> f64 {
    let total: usize = headings.iter().map(|h| h.count).sum();
    if total == 0 {
        return 0.0;
    }
    let covered: usize = headings
        .iter()
        .filter(|h| matches!(assignment.get(&h.heading), Some(Some(ci)) if kept.contains(ci)))
        .map(|h| h.count)
        .sum();
    covered as f64 / total as f64
}

/// One cluster in the JSON report.
#[derive(Debug, Serialize)]
pub struct ClusterReportEntry {
    pub members: Vec<String>,
    pub representative: String,
    pub count: usize,
    pub kept: bool,
}

/// Full outcome of the normalization pipeline.
#[derive(Debug, Serialize)]
pub struct NormalizeOutcome {
    pub clusters: Vec<ClusterReportEntry>,
    /// heading -> normalized label (`other` for unmatched or pruned headings).
    pub label_map: BTreeMap<String, String>,
    pub coverage: f64,
    pub unmatched: Vec<String>,
}

/// Run the whole pipeline: graph, communities, representatives, pruning.
pub fn normalize_headings(
    headings: &[HeadingRecord],
    lexicon: &SynsetLexicon,
) -> NormalizeOutcome {
    let (graph, unmatched) = build_synset_graph(headings, lexicon);
    let communities = detect_communities(&graph);
    let (clusters, assignment) = assign_headings(headings, lexicon, &communities, &graph);

    let mean = if clusters.is_empty() {
        0.0
    } else {
        clusters.iter().map(|c| c.total_count).sum::<usize>() as f64 / clusters.len() as f64
    };
    let kept: BTreeSet<usize> = clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.total_count as f64 >= mean)
        .map(|(i, _)| i)
        .collect();

    let mut label_map = BTreeMap::new();
    for record in headings {
        let label = match assignment.get(&record.heading) {
            Some(Some(ci)) if kept.contains(ci) => clusters[*ci].representative_label.clone(),
            _ => OTHER_LABEL.to_string(),
        };
        label_map.insert(record.heading.clone(), label);
    }
    let cov = coverage(headings, &assignment, &kept);
    NormalizeOutcome {
        clusters: clusters
            .iter()
            .enumerate()
            .map(|(i, c)| ClusterReportEntry {
                members: c.members.clone(),
                representative: c.representative_label.clone(),
                count: c.total_count,
                kept: kept.contains(&i),
            })
            .collect(),
        label_map,
        coverage: cov,
        unmatched,
    }
}

/// Collect distinct section headings with occurrence counts from a corpus.
pub fn heading_records_from_documents(docs: &[crate::corpus::Document]) -> Vec<HeadingRecord> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        for sec in &doc.sections {
            let heading = sec.heading.trim();
            if !heading.is_empty() {
                *counts.entry(heading.to_string()).or_insert(0) += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(heading, count)| HeadingRecord { heading, count })
        .collect()
}

/// Parse a headings TSV (`heading \t count`).
pub fn read_headings(reader: impl BufRead) -> Result<Vec<HeadingRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let heading = fields
            .next()
            .ok_or_else(|| Error::Config(format!("headings line {}: empty", lineno + 1)))?;
        let count = match fields.next() {
            None => 1,
            Some(c) => c.trim().parse::<usize>().map_err(|_| {
                Error::Config(format!("headings line {}: bad count '{c}'", lineno + 1))
            })?,
        };
        out.push(HeadingRecord {
            heading: heading.to_string(),
            count,
        });
    }
    Ok(out)
}

/// Write the heading -> label map as TSV.
pub fn write_label_map(outcome: &NormalizeOutcome, mut writer: impl Write) -> Result<()> {
    for (heading, label) in &outcome.label_map {
        writeln!(writer, "{heading}\t{label}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon(rows: &[(&str, &str, &str)]) -> SynsetLexicon {
        let mut lex = SynsetLexicon::new();
        for (lemma, synset, primary) in rows {
            lex.insert(lemma, synset, primary);
        }
        lex
    }

    fn records(rows: &[(&str, usize)]) -> Vec<HeadingRecord> {
        rows.iter()
            .map(|(h, c)| HeadingRecord {
                heading: h.to_string(),
                count: *c,
            })
            .collect()
    }

    #[test]
    fn lemma_with_two_synsets_creates_edge() {
        let lex = lexicon(&[("therapy", "s1", "therapy"), ("therapy", "s2", "therapy")]);
        let (graph, unmatched) = build_synset_graph(&records(&[("Therapy", 3)]), &lex);
        assert!(unmatched.is_empty());
        assert_eq!(graph.edge_weight("s1", "s2"), 1.0);
    }

    #[test]
    fn disjoint_lemmas_give_two_components() {
        let lex = lexicon(&[
            ("alpha", "a1", "alpha"),
            ("alpha", "a2", "alpha"),
            ("beta", "b1", "beta"),
            ("beta", "b2", "beta"),
        ]);
        let (graph, _) = build_synset_graph(&records(&[("Alpha", 1), ("Beta", 1)]), &lex);
        let communities = detect_communities(&graph);
        assert_eq!(communities.len(), 2);
    }

    #[test]
    fn three_synset_lemma_forms_triangle() {
        let lex = lexicon(&[
            ("cure", "s1", "cure"),
            ("cure", "s2", "cure"),
            ("cure", "s3", "cure"),
        ]);
        let (graph, _) = build_synset_graph(&records(&[("Cure", 1)]), &lex);
        // C(3,2) = 3 edges.
        let total: f64 = graph.total_weight();
        assert_eq!(total, 3.0);
    }

    #[test]
    fn unmatched_headings_are_recorded() {
        let lex = lexicon(&[("known", "s1", "known")]);
        let (_, unmatched) = build_synset_graph(&records(&[("Known", 1), ("Mystery", 2)]), &lex);
        assert_eq!(unmatched, vec!["Mystery"]);
    }

    #[test]
    fn single_node_graph_gives_singleton_cluster() {
        let mut graph = SynsetGraph::default();
        graph.add_node("s1");
        let communities = detect_communities(&graph);
        assert_eq!(communities, vec![vec!["s1".to_string()]]);
    }

    /// Two 3-cliques joined by a single edge must split into the two cliques.
    /// Verified against brute-force modularity over all 2-partitions.
    #[test]
    fn two_cliques_split_and_match_brute_force() {
        let mut graph = SynsetGraph::default();
        let left = ["a1", "a2", "a3"];
        let right = ["b1", "b2", "b3"];
        for group in [&left, &right] {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    graph.add_edge(group[i], group[j], 1.0);
                }
            }
        }
        graph.add_edge("a3", "b1", 1.0);

        let communities = detect_communities(&graph);
        assert_eq!(communities.len(), 2);
        let mut got: Vec<Vec<String>> = communities.clone();
        got.sort();
        assert_eq!(got[0], vec!["a1", "a2", "a3"]);
        assert_eq!(got[1], vec!["b1", "b2", "b3"]);

        // Brute force: all 2-partitions of the 6 nodes.
        let nodes: Vec<String> = graph.nodes().map(|s| s.to_string()).collect();
        let m = graph.total_weight();
        let modularity = |side: &dyn Fn(usize) -> usize| -> f64 {
            let mut q = 0.0;
            for (i, a) in nodes.iter().enumerate() {
                for (j, b) in nodes.iter().enumerate() {
                    if side(i) != side(j) {
                        continue;
                    }
                    let w = graph.edge_weight(a, b);
                    let ka = graph.weighted_degree(a);
                    let kb = graph.weighted_degree(b);
                    q += w - ka * kb / (2.0 * m);
                }
            }
            q / (2.0 * m)
        };
        let mut best_mask = 0usize;
        let mut best_q = f64::NEG_INFINITY;
        for mask in 1..(1usize << nodes.len()) - 1 {
            let q = modularity(&|i| (mask >> i) & 1);
            if q > best_q {
                best_q = q;
                best_mask = mask;
            }
        }
        let mut best_parts: Vec<Vec<String>> = vec![Vec::new(), Vec::new()];
        for (i, n) in nodes.iter().enumerate() {
            best_parts[(best_mask >> i) & 1].push(n.clone());
        }
        for p in &mut best_parts {
            p.sort();
        }
        best_parts.sort();
        assert_eq!(best_parts, got);
    }

    #[test]
    fn representative_is_the_hub_of_a_star() {
        let mut graph = SynsetGraph::default();
        for leaf in ["l1", "l2", "l3"] {
            graph.add_edge("hub", leaf, 1.0);
        }
        let lex = lexicon(&[("x", "hub", "therapy")]);
        let members: Vec<String> = ["hub", "l1", "l2", "l3"].iter().map(|s| s.to_string()).collect();
        assert_eq!(representative_label(&members, &graph, &lex), "therapy");
    }

    #[test]
    fn representative_tie_breaks_lexicographically() {
        let mut graph = SynsetGraph::default();
        graph.add_edge("s2", "s1", 1.0);
        let lex = SynsetLexicon::new();
        let members = vec!["s1".to_string(), "s2".to_string()];
        // Equal degree; the smaller id wins and without a primary lemma the
        // id itself is the label.
        assert_eq!(representative_label(&members, &graph, &lex), "s1");
    }

    fn cluster(count: usize, name: &str) -> TopicCluster {
        TopicCluster {
            members: vec![name.to_string()],
            representative_label: name.to_string(),
            total_count: count,
        }
    }

    #[test]
    fn prune_keeps_only_above_mean() {
        let clusters = vec![cluster(5, "a"), cluster(1, "b"), cluster(1, "c"), cluster(1, "d")];
        let (kept, pruned) = prune_clusters(clusters);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].representative_label, "a");
        assert_eq!(pruned.len(), 3);
    }

    #[test]
    fn prune_keeps_all_when_counts_equal() {
        let clusters = vec![cluster(3, "a"), cluster(3, "b"), cluster(3, "c")];
        let (kept, pruned) = prune_clusters(clusters);
        assert_eq!(kept.len(), 3);
        assert!(pruned.is_empty());
    }

    #[test]
    fn prune_ten_ten_one() {
        let clusters = vec![cluster(10, "a"), cluster(10, "b"), cluster(1, "c")];
        let (kept, pruned) = prune_clusters(clusters);
        assert_eq!(kept.len(), 2);
        assert_eq!(pruned[0].representative_label, "c");
    }

    #[test]
    fn prune_is_monotone_in_count() {
        // Raising one cluster's count never removes it from the kept set.
        let base = vec![cluster(4, "a"), cluster(2, "b"), cluster(2, "c")];
        let (kept_before, _) = prune_clusters(base.clone());
        assert!(kept_before.iter().any(|c| c.representative_label == "a"));
        let mut raised = base;
        raised[0].total_count = 40;
        let (kept_after, _) = prune_clusters(raised);
        assert!(kept_after.iter().any(|c| c.representative_label == "a"));
    }

    #[test]
    fn coverage_fractions() {
        let lex = lexicon(&[("kept", "k1", "kept"), ("gone", "g1", "gone")]);
        let headings = records(&[("Kept", 189), ("Gone", 11)]);
        let (graph, _) = build_synset_graph(&headings, &lex);
        let communities = detect_communities(&graph);
        let (clusters, assignment) = assign_headings(&headings, &lex, &communities, &graph);
        let all: BTreeSet<usize> = (0..clusters.len()).collect();
        assert_eq!(coverage(&headings, &assignment, &all), 1.0);
        assert_eq!(coverage(&headings, &assignment, &BTreeSet::new()), 0.0);
        // Keeping only the cluster holding 189 of 200 weighted headings.
        let kept: BTreeSet<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.representative_label == "kept")
            .map(|(i, _)| i)
            .collect();
        let cov = coverage(&headings, &assignment, &kept);
        assert!((cov - 0.945).abs() < 1e-12);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let lex = lexicon(&[
            ("therapy", "s1", "therapy"),
            ("therapy", "s2", "therapy"),
            ("treatment", "s2", "treatment"),
            ("treatment", "s3", "treatment"),
            ("cause", "c1", "cause"),
        ]);
        let headings = records(&[("Therapy", 5), ("Treatment", 7), ("Cause", 1), ("Unknown", 2)]);
        let a = normalize_headings(&headings, &lex);
        let b = normalize_headings(&headings, &lex);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.label_map["Unknown"], OTHER_LABEL);
        // Cluster counts sum to the matched heading counts.
        let cluster_sum: usize = a.clusters.iter().map(|c| c.count).sum();
        assert_eq!(cluster_sum, 13);
    }

    #[test]
    fn read_headings_parses_counts() {
        let input = "Diagnosis\t10\nTreatment\t7\n# comment\nBare\n";
        let records = read_headings(std::io::Cursor::new(input)).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].count, 10);
        assert_eq!(records[2].count, 1);
    }
}
