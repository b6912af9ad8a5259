use hgdr_core::numeric::{matmul_nt, Matrix};
use hgdr_core::synth::{generate_synthetic, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn spec(shared_signal: f64) -> SyntheticSpec {
    SyntheticSpec {
        users: 1000,
        domains: 2,
        items_per_domain: 50,
        interactions_per_user: 3,
        shared_signal,
        seed: 21,
        ..SyntheticSpec::default()
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

#[test]
fn no_shared_signal_means_uncorrelated_preferences() {
    let data = generate_synthetic(&spec(0.0)).unwrap();
    let p = &data.truth.user_preference;
    let r = pearson(p[0].as_slice(), p[1].as_slice());
    assert!(r.abs() < 0.1, "r = {r}");
    let partial = generate_synthetic(&spec(0.5)).unwrap();
    let p = &partial.truth.user_preference;
    let r = pearson(p[0].as_slice(), p[1].as_slice());
    assert!((r - 0.5).abs() < 0.1, "r = {r}");
}

#[test]
fn full_shared_signal_ranks_matched_items_alike() {
    let data = generate_synthetic(&spec(1.0)).unwrap();
    let p = &data.truth.user_preference;
    let dim = p[0].cols();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let items = Matrix::from_fn(40, dim, |_, _| StandardNormal.sample(&mut rng));
    let (s0, s1) = (matmul_nt(&p[0], &items).unwrap(), matmul_nt(&p[1], &items).unwrap());
    let mut total = 0.0;
    for u in 0..p[0].rows() {
        total += pearson(&ranks(s0.row(u)), &ranks(s1.row(u)));
    }
    let mean = total / p[0].rows() as f64;
    assert!(mean > 0.8, "mean Spearman {mean}");
}

#[test]
fn degenerate_specs_are_rejected() {
    for bad in [
        SyntheticSpec { interactions_per_user: 0, ..spec(0.5) },
        SyntheticSpec { shared_signal: 1.5, ..spec(0.5) },
        SyntheticSpec { users: 0, ..spec(0.5) },
        SyntheticSpec { interactions_per_user: 51, ..spec(0.5) },
    ] {
        assert!(generate_synthetic(&bad).is_err());
    }
}
