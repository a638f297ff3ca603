use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use signet::eigen::dense_generalized;
use signet::embedding::{cluster_graph, embed, sponge_pencil, EigCount, Method, MethodSpec};
use signet::graph::LaplacianKind;
use signet::kmeans::{kmeanspp, KmeansConfig};
use signet::metrics::{adjusted_rand_index, orthonormalize, sin_theta_distance};
use signet::ssbm::{generate, SsbmParams};

fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let m = DMatrix::from_fn(d, d, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    m.qr().q()
}

#[test]
fn clustering_ignores_rotations_of_the_embedding() {
    let inst = generate(&SsbmParams::new(300, 4, 0.1, 0.1, 12)).unwrap();
    let emb = embed(&inst.graph, &MethodSpec::new(Method::SpongeSym), 3).unwrap();
    for seed in 0..20 {
        let cfg = KmeansConfig::new(4, seed);
        let o = random_orthogonal(3, seed);
        let plain = kmeanspp(&emb.coords, &cfg).unwrap();
        let rotated = kmeanspp(&(&emb.coords * o), &cfg).unwrap();
        assert_eq!(
            adjusted_rand_index(&plain.labels, &inst.labels).unwrap(),
            adjusted_rand_index(&rotated.labels, &inst.labels).unwrap(),
            "seed {seed}"
        );
    }
}

fn mass_matrix(g: &signet::SignedGraph, spec: &MethodSpec) -> DMatrix<f64> {
    let n = g.n();
    match spec.method {
        Method::Sponge => sponge_pencil(g, spec.tau_plus, spec.tau_minus).1.to_dense(),
        Method::SpongeSym => {
            g.laplacian(LaplacianKind::LminusSym).unwrap().to_dense() + DMatrix::identity(n, n) * spec.tau_plus
        }
        _ => DMatrix::identity(n, n),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pencil_matches_similarity_transform(
        n in 8usize..60,
        seed in any::<u64>(),
        tp in 0.2f64..4.0,
        tm in 0.2f64..4.0,
    ) {
        let inst = generate(&SsbmParams::new(n, 2, 0.4, 0.2, seed)).unwrap();
        prop_assume!(inst.graph.isolated_vertices().is_empty());
        let (b, a) = sponge_pencil(&inst.graph, tp, tm);
        let (b, a) = (b.to_dense(), a.to_dense());
        let ea = SymmetricEigen::new(a.clone());
        prop_assume!(ea.eigenvalues.min() > 1e-8);
        let s = &ea.eigenvectors
            * DMatrix::from_diagonal(&ea.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * ea.eigenvectors.transpose();
        let mut t: Vec<f64> = SymmetricEigen::new(&s * &b * &s).eigenvalues.iter().copied().collect();
        t.sort_by(f64::total_cmp);
        let (g, _) = dense_generalized(&b, Some(&a)).unwrap();
        for (x, y) in g.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + y.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn coordinates_are_orthonormal_in_the_mass_metric(
        n in 12usize..60,
        seed in any::<u64>(),
        which in 0usize..4,
        d in 1usize..4,
    ) {
        let method = [Method::Sponge, Method::SpongeSym, Method::SignedLbar, Method::SignedLbarSym][which];
        let inst = generate(&SsbmParams::new(n, 3, 0.5, 0.1, seed)).unwrap();
        prop_assume!(inst.graph.isolated_vertices().is_empty());
        let spec = MethodSpec::new(method).taus(0.7, 1.3);
        let emb = embed(&inst.graph, &spec, d).unwrap();
        let m = mass_matrix(&inst.graph, &spec);
        let gram = emb.coords.transpose() * m * &emb.coords;
        prop_assert!((gram - DMatrix::identity(d, d)).abs().max() <= 1e-8);
        prop_assert!(emb.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rescaling_weights_keeps_sponge_assignments(seed in 0u64..1000, c in 0.1f64..20.0) {
        let inst = generate(&SsbmParams::new(90, 3, 0.3, 0.05, seed)).unwrap();
        prop_assume!(inst.graph.isolated_vertices().is_empty());
        for method in [Method::Sponge, Method::SpongeSym] {
            let spec = MethodSpec::new(method);
            let cfg = KmeansConfig::new(3, seed);
            let (a, ea) = cluster_graph(&inst.graph, &spec, &cfg).unwrap();
            let (b, eb) = cluster_graph(&inst.graph.scaled(c), &spec, &cfg).unwrap();
            prop_assert_eq!(adjusted_rand_index(&a, &b).unwrap(), 1.0);
            for (x, y) in ea.eigenvalues.iter().zip(&eb.eigenvalues) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
            let st = sin_theta_distance(&orthonormalize(&ea.coords), &orthonormalize(&eb.coords)).unwrap();
            prop_assert!(st <= 1e-7);
        }
    }
}

#[test]
fn every_method_recovers_clean_two_block_graphs() {
    let inst = generate(&SsbmParams::new(200, 2, 0.3, 0.0, 4)).unwrap();
    for method in Method::ALL {
        let spec = MethodSpec::new(method).dims(EigCount::K);
        let (labels, _) = cluster_graph(&inst.graph, &spec, &KmeansConfig::new(2, 0)).unwrap();
        let ari = adjusted_rand_index(&labels, &inst.labels).unwrap();
        assert!(ari > 0.95, "{method}: ARI {ari}");
    }
}

#[test]
fn iterative_and_dense_embeddings_span_the_same_space() {
    let inst = generate(&SsbmParams::new(600, 3, 0.05, 0.1, 8)).unwrap();
    let mut dense = MethodSpec::new(Method::SpongeSym);
    dense.eig.dense_threshold = usize::MAX;
    let a = embed(&inst.graph, &MethodSpec::new(Method::SpongeSym), 2).unwrap();
    let b = embed(&inst.graph, &dense, 2).unwrap();
    let st = sin_theta_distance(&orthonormalize(&a.coords), &orthonormalize(&b.coords)).unwrap();
    assert!(st < 1e-5, "sin-theta {st}");
}
