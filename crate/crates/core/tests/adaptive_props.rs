mod common;

use brainrf::adaptive::{
    adaptive_search, sample_constrained_bernoulli, synth_brain_from_membership, synth_clicks_from_membership, AdaptiveConfig,
    ClusterAssignment, ScenarioTables, SynthesisParams,
};
use brainrf::signals::CosineScorer;
use common::toy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tables(t: &toy::Toy) -> ScenarioTables {
    ScenarioTables::build(&t.query, &t.examined_refs(), &t.unseen_refs(), &CosineScorer)
}

fn small(params: SynthesisParams) -> AdaptiveConfig {
    AdaptiveConfig {
        params: SynthesisParams { n_synth: 6, ..params },
        ..AdaptiveConfig::default()
    }
}

proptest! {
    #[test]
    fn constrained_clicks_hit_the_target(probs in prop::collection::vec(0.01f64..0.99, 1..15), frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let n = (frac * probs.len() as f64).round() as usize;
        let draw = sample_constrained_bernoulli(&probs, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(draw.len(), probs.len());
        prop_assert_eq!(draw.iter().filter(|c| **c).count(), n);
    }

    #[test]
    fn rare_click_targets_still_sum_exactly(h in 3usize..20, seed in any::<u64>()) {
        // every click improbable: rejection cannot finish, the exact sampler takes over
        let probs = vec![1e-4; h];
        let draw = sample_constrained_bernoulli(&probs, h - 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(draw.iter().filter(|c| **c).count(), h - 1);
    }

    #[test]
    fn synthetic_channels_are_well_formed(
        members in prop::collection::vec(any::<bool>(), 1..12),
        mu in (-1.0f64..2.0, -1.0f64..2.0),
        sigma in 0.01f64..1.0,
        seed in any::<u64>(),
    ) {
        let params = SynthesisParams { mu_rel: mu.0, mu_irrel: mu.1, sigma_rel: sigma, sigma_irrel: sigma, ..SynthesisParams::default() };
        let brain = synth_brain_from_membership(&members, &params, seed).unwrap();
        prop_assert!(brain.iter().all(|b| (0.0..=1.0).contains(b)));
        let n = members.len() / 2;
        let clicks = synth_clicks_from_membership(&members, n, &params, seed).unwrap();
        prop_assert_eq!(clicks.iter().filter(|c| **c).count(), n);
    }
}

#[test]
fn search_is_bit_reproducible() {
    for seed in 0..4 {
        let t = toy::build(seed, 1);
        let tab = tables(&t);
        let cfg = small(SynthesisParams::default());
        let a = adaptive_search(&t.scenario, &tab, &t.assignment, &cfg, seed).unwrap();
        let b = adaptive_search(&t.scenario, &tables(&t), &t.assignment, &cfg, seed).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.score.to_bits(), b.score.to_bits());
    }
}

#[test]
fn relabelling_clusters_leaves_the_choice_unchanged() {
    let perms = [[1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0]];
    for seed in 0..6 {
        let t = toy::build(seed, (seed % 3) as usize);
        let tab = tables(&t);
        let cfg = small(SynthesisParams::default());
        let base = adaptive_search(&t.scenario, &tab, &t.assignment, &cfg, 3).unwrap();
        for perm in perms {
            let (ids, labels): (Vec<String>, Vec<usize>) = t.assignment.iter().map(|(id, c)| (id.to_string(), perm[c])).unzip();
            let relabelled = ClusterAssignment::new(ids, labels, 3).unwrap();
            let out = adaptive_search(&t.scenario, &tab, &relabelled, &cfg, 3).unwrap();
            assert_eq!(out.weights, base.weights, "seed {seed} perm {perm:?}");
            assert_eq!(out.score.to_bits(), base.score.to_bits());
        }
    }
}

#[test]
fn informative_brain_synthesis_selects_the_brain_channel() {
    let params = SynthesisParams {
        p_click_rel: 0.3,
        p_click_irrel: 0.3,
        mu_rel: 0.75,
        sigma_rel: 0.1,
        mu_irrel: 0.3,
        sigma_irrel: 0.1,
        n_synth: 8,
    };
    let cfg = AdaptiveConfig {
        params,
        ..AdaptiveConfig::default()
    };
    let runs = 50;
    let mut with_brain = 0;
    for seed in 0..runs {
        let t = toy::build(seed, (seed % 3) as usize);
        let out = adaptive_search(&t.scenario, &tables(&t), &t.assignment, &cfg, seed).unwrap();
        if out.weights.theta_bs > 0.0 {
            with_brain += 1;
        }
    }
    assert!(with_brain * 100 >= runs * 95, "brain weight chosen in {with_brain} of {runs} runs");
}

#[test]
fn search_agrees_with_reference_sweep() {
    for seed in 0..3 {
        let t = toy::build(seed, 2);
        let cfg = small(SynthesisParams::default());
        let out = adaptive_search(&t.scenario, &tables(&t), &t.assignment, &cfg, seed).unwrap();
        let sweep = toy::sweep(&t, &cfg, seed);
        assert_eq!(sweep.len(), out.candidates_evaluated);
        let (best, value) = toy::argmax(&sweep, 1e-12);
        assert_eq!(out.weights.as_array(), best);
        assert!((out.score - value).abs() <= 1e-12);
    }
}
