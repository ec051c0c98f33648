use std::collections::BTreeMap;

use mipt_core::clifford::random_clifford_2q;
use mipt_core::rng::stream;

#[test]
fn image_of_x0_is_uniform() {
    let n = 1_000_000u64;
    let mut rng = stream(&[2024]);
    let mut counts: BTreeMap<(u8, bool), u64> = BTreeMap::new();
    for _ in 0..n {
        let g = random_clifford_2q(&mut rng);
        assert!(g.is_symplectic());
        let img = g.images()[0];
        *counts.entry((img.bits, img.minus)).or_insert(0) += 1;
    }
    // 15 non-identity patterns, each with either sign
    assert_eq!(counts.len(), 30);
    let expected = n as f64 / 30.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = 29.0;
    let sigma = (2.0 * dof as f64).sqrt();
    assert!(chi2 < dof + 5.0 * sigma, "chi2 = {chi2}");
}
