use gwtree::experiments::{self, Experiment, ExperimentConfig};
use gwtree::sampler::{TreeSampler, contract};
use gwtree::{OffspringLaw, OmegaSet, OmegaSplit, SamplingMode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn law_constants() {
    let a = OffspringLaw::power_law(1.5, 0.5).unwrap();
    assert!((a.c() - 0.191_396_692).abs() < 1e-9);
    assert!((a.p0() - 0.743_243_777).abs() < 1e-9);
    let b = OffspringLaw::power_law(3.0, 0.5).unwrap();
    assert!((b.p0() - 0.549_803_661).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditioned_trees_have_n_vertices_in_omega(seed in any::<u64>(), n in 1usize..400, set in prop::sample::select(vec!["all", "0", "0,2", "all-1"]), exact in any::<bool>()) {
        let omega: OmegaSet = set.parse().unwrap();
        let split = OmegaSplit::new(OffspringLaw::power_law(1.5, 0.5).unwrap(), omega.clone()).unwrap();
        let mode = if exact { SamplingMode::Exact } else { SamplingMode::Bigjump };
        let sampler = TreeSampler::new(&split, n, mode).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(tree) = sampler.sample(&mut rng).unwrap() {
            prop_assert_eq!(tree.count_outdegrees(|d| omega.contains(d)), n);
            let (contracted, _) = contract(&tree, &omega);
            prop_assert_eq!(contracted.size(), n);
        }
    }
}

#[test]
fn summaries_round_trip_through_json() {
    let cfg = ExperimentConfig { experiment: Experiment::Size, omega: "0".parse().unwrap(), n: 200, reps: 300, seed: 4, ..ExperimentConfig::default() };
    let out = experiments::run(&cfg).unwrap();
    let text = serde_json::to_string(&out.summary).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(back["experiment"], "size");
    assert_eq!(back["replicates"], 300);
    assert_eq!(out.main_table().header, ["rep", "treesize"]);
}
