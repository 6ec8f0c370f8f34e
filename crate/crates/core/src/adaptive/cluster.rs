//! Intent clusters over a query's documents: ingested labels when present,
//! otherwise seeded k-means++ on the embeddings.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::Document;

const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    ids: Vec<String>,
    labels: Vec<usize>,
    q_m: usize,
    index: HashMap<String, usize>,
}

impl ClusterAssignment {
    /// Every label must be below `q_m` and every cluster must be used.
    pub fn new(ids: Vec<String>, labels: Vec<usize>, q_m: usize) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::input("cluster labels and document ids differ in length"));
        }
        if q_m == 0 {
            return Err(Error::input("at least one cluster is required"));
        }
        let mut used = vec![false; q_m];
        for (id, &l) in ids.iter().zip(&labels) {
            if l >= q_m {
                return Err(Error::input(format!("document {id} has cluster {l}, but only {q_m} clusters exist")));
            }
            used[l] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::input(format!("cluster {empty} has no documents")));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::input(format!("document {id} assigned twice")));
            }
        }
        Ok(Self {
            ids,
            labels,
            q_m,
            index,
        })
    }

    pub fn cluster_count(&self) -> usize {
        self.q_m
    }

    pub fn cluster_of(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).map(|&i| self.labels[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.ids.iter().map(String::as_str).zip(self.labels.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Label-independent identity of a cluster, derived from its
    /// lexicographically smallest member id.
    pub fn cluster_key(&self, cluster: usize) -> u64 {
        let first = self
            .iter()
            .filter(|(_, c)| *c == cluster)
            .map(|(id, _)| id)
            .min()
            .unwrap_or_default();
        let digest = Sha256::digest(first.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Cluster indices ordered by their smallest member id, so that any
    /// relabelling of the clusters yields the same sequence of clusters.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut first: Vec<Option<&str>> = vec![None; self.q_m];
        for (id, c) in self.iter() {
            if first[c].is_none_or(|f| id < f) {
                first[c] = Some(id);
            }
        }
        let mut order: Vec<usize> = (0..self.q_m).collect();
        order.sort_by_key(|&c| first[c]);
        order
    }

    /// Membership flags of `doc_ids` in cluster `cluster`.
    pub fn membership(&self, doc_ids: &[String], cluster: usize) -> Result<Vec<bool>> {
        doc_ids
            .iter()
            .map(|id| {
                self.cluster_of(id)
                    .map(|c| c == cluster)
                    .ok_or_else(|| Error::input(format!("document {id} has no cluster assignment")))
            })
            .collect()
    }
}

/// Passes ingested labels through when every document carries one; otherwise
/// runs k-means with `q_m` clusters.
pub fn cluster_documents(docs: &[Document], q_m: usize, seed: u64) -> Result<ClusterAssignment> {
    if q_m == 0 {
        return Err(Error::input("at least one cluster is required"));
    }
    if q_m > docs.len() {
        return Err(Error::input(format!("{q_m} clusters requested for {} documents", docs.len())));
    }
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    if docs.iter().all(|d| d.cluster.is_some()) {
        let labels: Vec<usize> = docs.iter().map(|d| d.cluster.unwrap()).collect();
        let q = labels.iter().max().map_or(1, |m| m + 1);
        return ClusterAssignment::new(ids, labels, q);
    }
    let points: Vec<&[f64]> = docs.iter().map(|d| d.embedding.as_slice()).collect();
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::input("documents have embeddings of different lengths"));
    }
    let labels = kmeans(&points, q_m, seed);
    ClusterAssignment::new(ids, labels, q_m)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Lloyd iterations from a k-means++ start. Empty clusters are refilled with
/// the point farthest from its centroid, so every label is used.
fn kmeans(points: &[&[f64]], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].to_vec()];
    while centroids.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            centroids.len()
        };
        centroids.push(points[next].to_vec());
    }

    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(p, &centroids).0;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        fill_empty(points, &centroids, &mut labels, k);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for ((c, s), &cnt) in centroids.iter_mut().zip(sums).zip(&counts) {
            *c = s.into_iter().map(|v| v / cnt as f64).collect();
        }
        if !changed {
            break;
        }
    }
    labels
}

fn fill_empty(points: &[&[f64]], centroids: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                sq_dist(points[a], &centroids[labels[a]]).total_cmp(&sq_dist(points[b], &centroids[labels[b]]))
            })
            .expect("more points than clusters");
        labels[donor] = empty;
    }
}
