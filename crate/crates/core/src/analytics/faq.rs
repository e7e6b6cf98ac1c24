use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{to_csv, AnalyticsError};
use crate::context::{Embedder, EmbeddingVector};
use crate::llm::{CompletionRequest, Gateway, PromptMessage, PurposeTag};
use crate::log::{EventFilter, EventKind, LogSnapshot};
use crate::session::Phase;
use crate::text;

pub const DEFAULT_FAQ_THRESHOLD: f64 = 0.85;
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 2;
const EXAMPLE_LIMIT: usize = 3;

const REWRITE_ROLE: &str = "You help a course instructor read student questions. The questions \
below were asked by different students and mean roughly the same thing. Rewrite them as one \
clear, representative question. Reply with that question only.";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaqSettings {
    /// Single-link cosine threshold.
    pub threshold: f64,
    pub min_cluster_size: usize,
}

impl Default for FaqSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_FAQ_THRESHOLD,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaqCluster {
    pub canonical_question: String,
    pub member_count: usize,
    pub phase: Phase,
    /// Up to three distinct member texts, oldest first.
    pub example_members: Vec<String>,
    pub member_event_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaqReport {
    pub phase: Phase,
    pub clusters: Vec<FaqCluster>,
    pub snapshot_last_event_id: Option<String>,
}

impl FaqReport {
    pub fn to_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            phase: Phase,
            canonical_question: &'a str,
            member_count: usize,
            examples: String,
        }
        let rows: Vec<Row> = self
            .clusters
            .iter()
            .map(|c| Row {
                phase: c.phase,
                canonical_question: &c.canonical_question,
                member_count: c.member_count,
                examples: c.example_members.join(" | "),
            })
            .collect();
        to_csv(&rows)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

struct Member {
    event_id: String,
    text: String,
}

fn longest_member(members: &[Member]) -> String {
    members
        .iter()
        .map(|m| m.text.trim())
        .max_by(|a, b| {
            a.chars()
                .count()
                .cmp(&b.chars().count())
                .then_with(|| b.cmp(a))
        })
        .unwrap_or_default()
        .to_string()
}

fn sort_clusters(clusters: &mut [FaqCluster]) {
    clusters.sort_by(|a, b| {
        b.member_count
            .cmp(&a.member_count)
            .then_with(|| a.canonical_question.cmp(&b.canonical_question))
    });
}

/// Groups the phase's questions into near-duplicate clusters.
///
/// Questions are normalized (lowercase, punctuation stripped, whitespace
/// collapsed), embedded, and joined by single-link at cosine ≥ threshold.
/// Questions that normalize to nothing are ignored. Clusters smaller than
/// `min_cluster_size` are dropped. The canonical question is the longest
/// member; with a gateway, one summary call per cluster rewrites it.
pub fn extract_faqs(
    snapshot: &LogSnapshot,
    phase: Phase,
    embedder: &dyn Embedder,
    settings: FaqSettings,
    gateway: Option<&Gateway>,
) -> Result<FaqReport, AnalyticsError> {
    let questions = snapshot.query(&EventFilter::all().kind(EventKind::QuestionAsked).phase(phase));

    // Identical normalized texts embed identically, so cluster unique texts.
    let mut unique: Vec<(String, EmbeddingVector)> = Vec::new();
    let mut slot_of: HashMap<String, usize> = HashMap::new();
    let mut members_of: Vec<Vec<Member>> = Vec::new();
    for event in &questions {
        let normalized = text::normalize(&event.payload);
        let slot = match slot_of.get(&normalized) {
            Some(&slot) => slot,
            None => {
                let Some(vector) = embedder.embed(&normalized)?.into_vector() else {
                    continue;
                };
                unique.push((normalized.clone(), vector));
                members_of.push(Vec::new());
                slot_of.insert(normalized, unique.len() - 1);
                unique.len() - 1
            }
        };
        members_of[slot].push(Member {
            event_id: event.event_id.clone(),
            text: event.payload.clone(),
        });
    }

    let mut sets = DisjointSet::new(unique.len());
    for i in 0..unique.len() {
        for j in i + 1..unique.len() {
            if unique[i].1.cosine(&unique[j].1) >= settings.threshold {
                sets.union(i, j);
            }
        }
    }

    let mut grouped: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    for i in 0..unique.len() {
        let root = sets.find(i);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            grouped.push(Vec::new());
            grouped.len() - 1
        });
        grouped[g].push(i);
    }

    let mut clusters: Vec<FaqCluster> = grouped
        .into_iter()
        .filter_map(|slots| {
            let mut members: Vec<Member> = slots
                .into_iter()
                .flat_map(|s| std::mem::take(&mut members_of[s]))
                .collect();
            if members.len() < settings.min_cluster_size.max(1) {
                return None;
            }
            // restore chronological order across merged slots
            let order: HashMap<&str, usize> = questions
                .iter()
                .enumerate()
                .map(|(i, e)| (e.event_id.as_str(), i))
                .collect();
            members.sort_by_key(|m| order[m.event_id.as_str()]);
            let mut examples: Vec<String> = Vec::new();
            for m in &members {
                if examples.len() < EXAMPLE_LIMIT && !examples.contains(&m.text) {
                    examples.push(m.text.clone());
                }
            }
            Some(FaqCluster {
                canonical_question: longest_member(&members),
                member_count: members.len(),
                phase,
                example_members: examples,
                member_event_ids: members.into_iter().map(|m| m.event_id).collect(),
            })
        })
        .collect();
    sort_clusters(&mut clusters);

    if let Some(gateway) = gateway {
        for cluster in &mut clusters {
            let listing: Vec<String> = cluster.example_members.iter().map(|q| format!("- {q}")).collect();
            let request = CompletionRequest::new(
                PurposeTag::Summary,
                vec![
                    PromptMessage::system(REWRITE_ROLE),
                    PromptMessage::user(listing.join("\n")),
                ],
            )
            .expect("rewrite prompt is well-formed");
            let rewritten = gateway.complete(&request)?.text;
            if !rewritten.trim().is_empty() {
                cluster.canonical_question = rewritten.trim().to_string();
            }
        }
        sort_clusters(&mut clusters);
    }

    Ok(FaqReport {
        phase,
        clusters,
        snapshot_last_event_id: snapshot.last_event_id().map(str::to_string),
    })
}
