//! Reverse-mode gradient of the per-event error.

use super::MlpNetwork;

/// Exact gradient of `event_error(output(x), target)` with respect to every
/// parameter, flattened in [`MlpNetwork::params`] order (per layer: weights
/// row-major, then biases).
///
/// Reverse pass: the output node is linear, so its delta is simply
/// `output − target`; each hidden delta back-propagates through the next
/// layer's weights times the sigmoid derivative `a(1−a)`.
pub fn backprop_gradient(net: &MlpNetwork, x: &[f64], target: f64) -> Vec<f64> {
    let pass = net.forward(x);
    let activations = &pass.activations;
    let n_layers = net.layers.len();

    // deltas[l] = dE/dz for weighted layer l
    let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
    let out_activations = &activations[n_layers];
    let mut output_delta = vec![0.0; out_activations.len()];
    output_delta[0] = out_activations[0] - target;
    deltas[n_layers - 1] = output_delta;

    for l in (0..n_layers - 1).rev() {
        let next = &net.layers[l + 1];
        let next_delta = deltas[l + 1].clone();
        let a = &activations[l + 1];
        let delta: Vec<f64> = (0..next.in_dim)
            .map(|i| {
                let mut back = 0.0;
                for (o, &nd) in next_delta.iter().enumerate() {
                    back += next.weights[o * next.in_dim + i] * nd;
                }
                back * a[i] * (1.0 - a[i])
            })
            .collect();
        deltas[l] = delta;
    }

    let mut grad = Vec::with_capacity(net.param_count());
    for (prev, delta) in activations.iter().zip(&deltas) {
        for &d in delta {
            for &p in prev {
                grad.push(d * p);
            }
        }
        grad.extend_from_slice(delta);
    }
    grad
}
