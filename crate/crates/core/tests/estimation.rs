use topic_ident::experiments::empirical_kl_replicates;
use topic_ident::identifiability::{generate_theta, ThetaStructure};
use topic_ident::mle::{ascend_from, fit_mle, FitOptions};
use topic_ident::model::{enumerate_distribution, kl_divergence, sample_corpus, wasserstein};
use topic_ident::rng::stream;
use topic_ident::MixingDistribution;

#[test]
fn large_corpus_fit_recovers_topics() {
    let nu = MixingDistribution::uniform_vertex(2).unwrap();
    let theta = generate_theta(ThetaStructure::Independent, 5, 2, 0.02, &mut stream(21, &[])).unwrap();
    let corpus = sample_corpus(&theta, &nu, 3, 50_000, &mut stream(21, &[1])).unwrap();
    let fit = fit_mle(&corpus, 2, 0.02, &nu, &FitOptions { seed: 5, ..FitOptions::default() }).unwrap();
    let w = wasserstein(&fit.theta_hat, &theta).unwrap();
    assert!(w <= 0.1, "W = {w}");
    assert!(fit.trace.windows(2).all(|t| t[1] >= t[0]));
}

#[test]
fn ascent_commutes_with_relabelling() {
    let nu = MixingDistribution::symmetric_dirichlet(3, 0.8).unwrap();
    let theta = generate_theta(ThetaStructure::Independent, 4, 3, 0.01, &mut stream(22, &[])).unwrap();
    let corpus = sample_corpus(&theta, &nu, 3, 400, &mut stream(22, &[1])).unwrap();
    let init = generate_theta(ThetaStructure::Independent, 4, 3, 0.01, &mut stream(22, &[2])).unwrap();
    let options = FitOptions { max_iterations: 300, ..FitOptions::default() };
    let perm = [2, 0, 1];
    let direct = ascend_from(&corpus, &nu, &init, &options).unwrap();
    let relabelled = ascend_from(&corpus, &nu, &init.permute_rows(&perm).unwrap(), &options).unwrap();
    let expected = direct.theta_hat.permute_rows(&perm).unwrap();
    for (a, b) in expected.as_slice().iter().zip(relabelled.theta_hat.as_slice()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!((direct.log_likelihood - relabelled.log_likelihood).abs() <= 1e-9 * direct.log_likelihood.abs());
}

#[test]
fn fits_do_not_depend_on_worker_count() {
    let nu = MixingDistribution::uniform_vertex(2).unwrap();
    let theta = generate_theta(ThetaStructure::Duplicate, 4, 2, 0.02, &mut stream(23, &[])).unwrap();
    let corpus = sample_corpus(&theta, &nu, 2, 1000, &mut stream(23, &[1])).unwrap();
    let options = FitOptions { starts: 4, seed: 9, ..FitOptions::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| fit_mle(&corpus, 2, 0.02, &nu, &options).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn empirical_kl_is_unbiased() {
    let nu = MixingDistribution::uniform_vertex(2).unwrap();
    let mut rng = stream(24, &[]);
    let theta = generate_theta(ThetaStructure::Independent, 4, 2, 0.05, &mut rng).unwrap();
    let theta2 = generate_theta(ThetaStructure::Independent, 4, 2, 0.05, &mut rng).unwrap();
    let kl = kl_divergence(&theta, &theta2, &nu, 2).unwrap();
    let draws = empirical_kl_replicates(&theta, &theta2, &nu, 2, 20, 10_000, 4).unwrap();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - kl).abs() <= 5.0 * sd / n.sqrt(), "mean {mean} vs KL {kl}, sd {sd}");
}

#[test]
fn sampled_documents_follow_the_enumerated_law() {
    let nu = MixingDistribution::symmetric_dirichlet(2, 1.5).unwrap();
    let theta = generate_theta(ThetaStructure::Independent, 3, 2, 0.05, &mut stream(25, &[])).unwrap();
    let n = 100_000;
    let corpus = sample_corpus(&theta, &nu, 2, n, &mut stream(25, &[1])).unwrap();
    let p = enumerate_distribution(&theta, &nu, 2).unwrap();
    let mut counts = vec![0usize; p.len()];
    for doc in corpus.documents() {
        counts[doc.index(3)] += 1;
    }
    for (c, q) in counts.iter().zip(&p) {
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - q).abs() <= 6.0 * se, "{c} vs {q}");
    }
}
