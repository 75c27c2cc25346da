//! Finite-difference audit of backpropagation across random layouts,
//! inputs, and targets — the gradient is the foundation both trainers
//! stand on, so it gets its own exhaustive pass.

use gammasep::mlp::{backprop_gradient, MlpLayout, MlpNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-6;

fn fd_partial(net: &MlpNetwork, x: &[f64], target: f64, i: usize) -> f64 {
    let mut params = net.params();
    let base = params[i];
    params[i] = base + FD_STEP;
    let plus = {
        let o = net.with_params(&params).output(x);
        0.5 * (o - target) * (o - target)
    };
    params[i] = base - FD_STEP;
    let minus = {
        let o = net.with_params(&params).output(x);
        0.5 * (o - target) * (o - target)
    };
    (plus - minus) / (2.0 * FD_STEP)
}

#[test]
fn backprop_matches_finite_differences_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9d2c_5681);
    for trial in 0..100 {
        let input_size = rng.random_range(1..=10);
        let depth = rng.random_range(1..=2);
        let hidden_sizes: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=10)).collect();
        let output_size = rng.random_range(1..=3);
        let layout = MlpLayout::new(input_size, hidden_sizes, output_size).unwrap();
        let net = MlpNetwork::init(layout, rng.random()).unwrap();

        let x: Vec<f64> = (0..input_size).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target = rng.random_range(-1.0..2.0);

        let grad = backprop_gradient(&net, &x, target);
        assert_eq!(grad.len(), net.param_count());
        for (i, &g) in grad.iter().enumerate() {
            let fd = fd_partial(&net, &x, target, i);
            let rel = (g - fd).abs() / f64::max(1.0, g.abs());
            assert!(
                rel < REL_TOL,
                "trial {trial}: partial {i} disagrees: backprop {g:.12e} vs fd {fd:.12e} (rel {rel:.3e})"
            );
        }
    }
}
