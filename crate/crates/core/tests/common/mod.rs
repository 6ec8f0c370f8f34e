//! Reference implementations written from the metric definitions, kept
//! deliberately naive so they share no code path with the library.
#![allow(dead_code)]

use brainrf::types::Document;

pub fn dcg(gains: &[u32], k: usize) -> f64 {
    let mut total = 0.0;
    for (rank, g) in gains.iter().enumerate() {
        if rank >= k {
            break;
        }
        let gain = (1u64 << *g) as f64 - 1.0;
        total += gain / ((rank + 2) as f64).ln() * std::f64::consts::LN_2;
    }
    total
}

/// Every ordering of `items`.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// NDCG with the ideal DCG found by trying every ordering.
pub fn ndcg_exhaustive(gains: &[u32], k: usize) -> f64 {
    let ideal = permutations(gains).iter().map(|p| dcg(p, k)).fold(0.0, f64::max);
    if ideal == 0.0 {
        1.0
    } else {
        dcg(gains, k) / ideal
    }
}

/// NDCG with the ideal ordering built by counting grades.
pub fn ndcg_counting(gains: &[u32], k: usize) -> f64 {
    let top = gains.iter().copied().max().unwrap_or(0);
    let mut ideal = Vec::with_capacity(gains.len());
    for g in (0..=top).rev() {
        ideal.extend(gains.iter().filter(|&&x| x == g));
    }
    let idcg = dcg(&ideal, k);
    if idcg == 0.0 {
        1.0
    } else {
        dcg(gains, k) / idcg
    }
}

pub fn average_precision(flags: &[bool], total_relevant: usize) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..flags.len() {
        if flags[i] {
            let hits = flags[..=i].iter().filter(|f| **f).count();
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

/// Fraction of positive/negative pairs ordered correctly, ties counting half.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

pub fn cosine01(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (1.0 + (dot / (na * nb)).clamp(-1.0, 1.0)) / 2.0
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::MIN, f64::max);
    let z: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    xs.iter().map(|x| (x - m).exp() / z).collect()
}

/// Positions sorted by descending value, earlier position first on ties.
pub fn order_desc(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    // insertion sort keeps equal elements in place
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && xs[idx[j - 1]] < xs[idx[j]] {
            idx.swap(j - 1, j);
            j -= 1;
        }
    }
    idx
}

/// Unseen-document scores after fusing, picking the top `k` examined documents
/// and blending softmax-weighted document similarity with query similarity.
pub fn expand_reference(
    query: &[f64],
    examined: &[Document],
    channels: (&[f64], &[f64], &[f64]),
    theta: [f64; 3],
    unseen: &[Document],
    k: usize,
    c: f64,
) -> Vec<f64> {
    let (b, cl, p) = channels;
    let fused: Vec<f64> = (0..examined.len())
        .map(|i| theta[0] * b[i] + theta[1] * cl[i] + theta[2] * p[i])
        .collect();
    let top: Vec<usize> = order_desc(&fused).into_iter().take(k).collect();
    let w = softmax(&top.iter().map(|&i| fused[i]).collect::<Vec<_>>());
    unseen
        .iter()
        .map(|u| {
            let rf: f64 = top
                .iter()
                .zip(&w)
                .map(|(&i, wi)| wi * cosine01(&examined[i].embedding, &u.embedding))
                .sum();
            c * rf + (1.0 - c) * cosine01(query, &u.embedding)
        })
        .collect()
}

/// Deterministic unit vector in `dim` dimensions from a small integer seed.
pub fn pseudo_unit(seed: u64, dim: usize) -> Vec<f64> {
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let v: Vec<f64> = (0..dim)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn doc(id: &str, embedding: Vec<f64>) -> Document {
    Document::normalized(id, "q", embedding).expect("non-zero embedding")
}

pub mod toy {
    use brainrf::adaptive::{draw_seeds, synth_brain, synth_clicks, AdaptiveConfig, ClusterAssignment, Objective, Scenario};
    use brainrf::types::Document;

    use super::{expand_reference, ndcg_counting, order_desc, pseudo_unit};

    pub struct Toy {
        pub query: Vec<f64>,
        pub examined: Vec<Document>,
        pub unseen: Vec<Document>,
        pub assignment: ClusterAssignment,
        pub scenario: Scenario,
    }

    impl Toy {
        pub fn examined_refs(&self) -> Vec<&Document> {
            self.examined.iter().collect()
        }

        pub fn unseen_refs(&self) -> Vec<&Document> {
            self.unseen.iter().collect()
        }
    }

    /// Three orthogonal intents equidistant from the query; examined documents
    /// interleave the intents in a seed-dependent order.
    pub fn build(seed: u64, n_clicks: usize) -> Toy {
        let dim = 8;
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..dim).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut query = vec![0.0; dim];
        for c in &centers {
            for (q, v) in query.iter_mut().zip(c) {
                *q += v / 3.0;
            }
        }
        let make = |name: String, cluster: usize, salt: u64| {
            let noise = pseudo_unit(seed * 1009 + salt, dim);
            let e: Vec<f64> = centers[cluster].iter().zip(&noise).map(|(c, n)| c + 0.45 * n).collect();
            Document::normalized(name, "q", e).unwrap().with_cluster(cluster)
        };
        let mut examined: Vec<Document> = (0..6).map(|i| make(format!("e{i}"), i % 3, i as u64)).collect();
        let r = (seed % 6) as usize;
        examined.rotate_left(r);
        if seed % 2 == 1 {
            examined.swap(0, 4);
        }
        let unseen: Vec<Document> = (0..12).map(|i| make(format!("u{i:02}"), i % 3, 100 + i as u64)).collect();
        let all: Vec<&Document> = examined.iter().chain(&unseen).collect();
        let assignment = ClusterAssignment::new(
            all.iter().map(|d| d.id.clone()).collect(),
            all.iter().map(|d| d.cluster.unwrap()).collect(),
            3,
        )
        .unwrap();
        let scenario = Scenario::new(
            "q",
            examined.iter().map(|d| d.id.clone()).collect(),
            unseen.iter().map(|d| d.id.clone()).collect(),
            n_clicks,
        )
        .unwrap();
        Toy {
            query,
            examined,
            unseen,
            assignment,
            scenario,
        }
    }

    /// Every candidate triple with its average objective, recomputed from
    /// scratch. Draws use the same seeds as the library search.
    pub fn sweep(toy: &Toy, config: &AdaptiveConfig, seed: u64) -> Vec<([f64; 3], f64)> {
        let mut grid = config.grid.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let q_m = toy.assignment.cluster_count();
        let n = config.params.n_synth;
        let mut draws = Vec::new();
        for cluster in 0..q_m {
            let key = toy.assignment.cluster_key(cluster);
            let truth: Vec<bool> = toy.unseen.iter().map(|d| toy.assignment.cluster_of(&d.id) == Some(cluster)).collect();
            let mut per = Vec::new();
            for t in 0..n {
                let (cs, bs) = draw_seeds(seed, key, t);
                let clicks = synth_clicks(&toy.scenario, &toy.assignment, cluster, &config.params, cs).unwrap();
                let brain = synth_brain(&toy.scenario, &toy.assignment, cluster, &config.params, bs).unwrap();
                let c: Vec<f64> = clicks.values().map(Option::unwrap).collect();
                let b: Vec<f64> = brain.values().map(Option::unwrap).collect();
                per.push((b, c));
            }
            draws.push((truth, per));
        }
        let pseudo: Vec<f64> = toy.examined.iter().map(|d| super::cosine01(&toy.query, &d.embedding)).collect();
        let mut out = Vec::new();
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    if a == 0.0 && b == 0.0 && c == 0.0 {
                        continue;
                    }
                    let theta = [a, b, c];
                    let mut per_cluster = Vec::new();
                    for (truth, per) in &draws {
                        let mut values = Vec::new();
                        for (brain, clicks) in per {
                            let scores = expand_reference(
                                &toy.query,
                                &toy.examined,
                                (brain, clicks, &pseudo),
                                theta,
                                &toy.unseen,
                                config.expansion.k,
                                config.expansion.c,
                            );
                            let flags: Vec<bool> = order_desc(&scores).into_iter().map(|i| truth[i]).collect();
                            values.push(match config.objective {
                                Objective::Ndcg(k) => ndcg_counting(&flags.iter().map(|&f| f as u32).collect::<Vec<_>>(), k),
                                Objective::Map => {
                                    let total = flags.iter().filter(|f| **f).count();
                                    super::average_precision(&flags, total)
                                }
                            });
                        }
                        per_cluster.push(values.iter().sum::<f64>() / values.len() as f64);
                    }
                    out.push((theta, per_cluster.iter().sum::<f64>() / q_m as f64));
                }
            }
        }
        out
    }

    /// The lexicographically first triple within `tol` of the best average.
    pub fn argmax(sweep: &[([f64; 3], f64)], tol: f64) -> ([f64; 3], f64) {
        let best = sweep.iter().map(|s| s.1).fold(f64::MIN, f64::max);
        *sweep.iter().find(|s| s.1 >= best - tol).unwrap()
    }
}
