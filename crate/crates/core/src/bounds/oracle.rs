//! Brute-force lower bound on the cheating optimum, used to check the LP.
//!
//! Every `(sign pattern, answer subset)` is scored by a grid search over the
//! Bloch sphere rather than by the analytic optimum, and mixtures are found
//! by scanning the mixing weight of every pair of strategies.

use super::Answer;
use crate::steering::MeasurementSet;

/// Step of the mixing-weight scan.
const WEIGHT_STEP: f64 = 1e-5;

/// Quasi-uniform points with nearest-neighbour spacing about `resolution` rad.
fn fibonacci_sphere(resolution: f64) -> Vec<[f64; 3]> {
    let count = ((4.0 * std::f64::consts::PI) / (resolution * resolution)).ceil() as usize;
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Best grid payoff for every answer pattern, in enumeration order.
fn grid_payoffs(set: &MeasurementSet, patterns: &[Vec<Answer>], resolution: f64) -> Vec<f64> {
    let dirs: Vec<[f64; 3]> = set.directions().iter().map(|u| u.to_array()).collect();
    let signs: Vec<Vec<f64>> = patterns.iter().map(|p| p.iter().map(|a| a.weight()).collect()).collect();
    let mut best = vec![f64::NEG_INFINITY; patterns.len()];
    let mut dots = vec![0.0; dirs.len()];
    for b in fibonacci_sphere(resolution) {
        for (d, u) in dots.iter_mut().zip(&dirs) {
            *d = u[0] * b[0] + u[1] * b[1] + u[2] * b[2];
        }
        for (s, w) in best.iter_mut().zip(&signs) {
            let payoff: f64 = w.iter().zip(&dots).map(|(a, d)| a * d).sum();
            if payoff > *s {
                *s = payoff;
            }
        }
    }
    best
}

/// Lower bound on the loss-tolerant cheating value at announce floor `xi`.
pub fn bound_oracle(set: &MeasurementSet, xi: f64, sphere_resolution: f64) -> f64 {
    let n = set.n();
    let patterns = super::enumerate_patterns(n);
    let payoffs = grid_payoffs(set, &patterns, sphere_resolution);

    // The objective depends on a strategy only through (payoff, answered), so
    // keep the best payoff for each answered count.
    let mut best_by_count = vec![f64::NEG_INFINITY; n + 1];
    for (p, pay) in patterns.iter().zip(&payoffs) {
        let m = p.iter().filter(|a| **a != Answer::Null).count();
        best_by_count[m] = best_by_count[m].max(*pay);
    }
    let points: Vec<(f64, f64)> =
        (1..=n).filter(|&m| best_by_count[m].is_finite()).map(|m| (best_by_count[m], m as f64)).collect();

    let floor = n as f64 * xi;
    let steps = (1.0 / WEIGHT_STEP).round() as usize;
    let mut best = f64::NEG_INFINITY;
    for (i, &(pi, mi)) in points.iter().enumerate() {
        for &(pj, mj) in &points[i..] {
            for s in 0..=steps {
                let w = s as f64 / steps as f64;
                let answered = w * mi + (1.0 - w) * mj;
                if answered + 1e-12 < floor {
                    continue;
                }
                let value = (w * pi + (1.0 - w) * pj) / answered;
                best = best.max(value);
            }
        }
    }
    best
}
