// Shared helpers for the integration tests: sample generators and an
// independent dense-matrix likelihood oracle.
#![allow(dead_code)]

pub mod checks;

use dtbias::TruncatedSample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random sample with continuous X and windows of random width.
pub fn random_sample<R: Rng>(rng: &mut R, n: usize) -> TruncatedSample {
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let u = x - 0.6 * rng.random::<f64>();
            let v = x + 0.6 * rng.random::<f64>();
            (x, u, v)
        })
        .collect();
    TruncatedSample::from_triplets(&rows).unwrap()
}

/// Every window covers every X.
pub fn untruncated(n: usize, seed: u64) -> TruncatedSample {
    let mut r = rng(seed);
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| (r.random::<f64>(), -1.0 - r.random::<f64>(), 2.0 + r.random::<f64>()))
        .collect();
    TruncatedSample::from_triplets(&rows).unwrap()
}

/// `j[i][k]` is true when window `k` covers `X_i`.
pub fn coverage_matrix(s: &TruncatedSample) -> Vec<Vec<bool>> {
    let obs = s.observations();
    obs.iter()
        .map(|o| obs.iter().map(|w| w.u <= o.x && o.x <= w.v).collect())
        .collect()
}

/// Connectivity of the bipartite graph rows <-> windows, by flood fill.
pub fn is_connected(s: &TruncatedSample) -> bool {
    let j = coverage_matrix(s);
    let n = j.len();
    let mut row_seen = vec![false; n];
    let mut win_seen = vec![false; n];
    let mut stack = vec![0usize];
    row_seen[0] = true;
    while let Some(i) = stack.pop() {
        for k in 0..n {
            if j[i][k] && !win_seen[k] {
                win_seen[k] = true;
                for (m, seen) in row_seen.iter_mut().enumerate() {
                    if j[m][k] && !*seen {
                        *seen = true;
                        stack.push(m);
                    }
                }
            }
        }
    }
    row_seen.iter().all(|&b| b)
}

/// Log conditional likelihood `sum_i log f_i - sum_j log F(U_j, V_j)`.
pub fn profile_loglik(j: &[Vec<bool>], f: &[f64]) -> f64 {
    let n = f.len();
    let mut ll: f64 = f.iter().map(|v| v.ln()).sum();
    for k in 0..n {
        let h: f64 = (0..n).filter(|&i| j[i][k]).map(|i| f[i]).sum();
        ll -= h.ln();
    }
    ll
}

fn simplex_grid(n: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
    let used: usize = prefix.iter().sum();
    if prefix.len() == n - 1 {
        let last = steps - used;
        let mut p: Vec<f64> = prefix.iter().map(|&c| c as f64 / steps as f64).collect();
        p.push(last as f64 / steps as f64);
        out.push(p);
        return;
    }
    for c in 0..=(steps - used) {
        prefix.push(c);
        simplex_grid(n, steps, prefix, out);
        prefix.pop();
    }
}

/// Brute-force maximizer of the conditional likelihood over the simplex: a
/// coarse grid search followed by pairwise mass transfers with halving steps.
pub fn brute_force_weights(s: &TruncatedSample) -> Vec<f64> {
    let j = coverage_matrix(s);
    let n = s.len();
    let mut grid = Vec::new();
    simplex_grid(n, 20, &mut Vec::new(), &mut grid);
    let mut best = grid
        .into_iter()
        .filter(|p| p.iter().all(|&v| v > 0.0))
        .map(|p| (profile_loglik(&j, &p), p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();

    let mut step = 1e-3;
    while step > 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            for a in 0..n {
                for b in 0..n {
                    // keep moving along a successful direction, doubling
                    let mut d = step;
                    while a != b && best.1[b] > d {
                        let mut cand = best.1.clone();
                        cand[a] += d;
                        cand[b] -= d;
                        let ll = profile_loglik(&j, &cand);
                        if ll <= best.0 {
                            break;
                        }
                        best = (ll, cand);
                        improved = true;
                        d *= 2.0;
                    }
                }
            }
        }
        step /= 2.0;
    }
    best.1
}
