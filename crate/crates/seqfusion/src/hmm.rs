//! Gaussian hidden Markov model: Baum-Welch training, exact log-likelihood
//! scoring, paired-model classification, and ratio feature extraction.
//!
//! Emissions are diagonal Gaussians over the `n_d` dynamic channels; all
//! recursions run in log space with log-sum-exp, so no scaling coefficients
//! are needed.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::error::{Error, Result};
use crate::rng;

/// Emission variances never drop below this floor.
pub const VAR_FLOOR: f64 = 1e-6;

/// EM stops once the mean per-sequence log-likelihood improves by less.
pub const EM_TOL: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian HMM with `k` hidden states over `n_d`-channel observations.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHmm {
    /// Initial state distribution, length k, sums to 1.
    pub initial: Vec<f64>,
    /// Row-stochastic transition matrix, k x k.
    pub transition: Array2<f64>,
    /// Per-state emission means, k x n_d.
    pub means: Array2<f64>,
    /// Per-state diagonal emission variances, k x n_d, all >= [`VAR_FLOOR`].
    pub variances: Array2<f64>,
}

impl GaussianHmm {
    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn n_channels(&self) -> usize {
        self.means.ncols()
    }

    /// Versioned JSON document for pipeline caching.
    pub fn to_json(&self) -> String {
        let doc = HmmDocument {
            version: 1,
            k: self.n_states(),
            n_d: self.n_channels(),
            pi: self.initial.clone(),
            a: to_nested(&self.transition),
            means: to_nested(&self.means),
            variances: to_nested(&self.variances),
        };
        serde_json::to_string_pretty(&doc).expect("HMM document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: HmmDocument = serde_json::from_str(text)?;
        if doc.version != 1 {
            return Err(Error::Serialization(format!(
                "unsupported HMM document version {}",
                doc.version
            )));
        }
        let transition = from_nested(&doc.a, doc.k, doc.k, "A")?;
        let means = from_nested(&doc.means, doc.k, doc.n_d, "means")?;
        let variances = from_nested(&doc.variances, doc.k, doc.n_d, "variances")?;
        if doc.pi.len() != doc.k {
            return Err(Error::Serialization(format!(
                "pi has length {}, expected {}",
                doc.pi.len(),
                doc.k
            )));
        }
        Ok(GaussianHmm {
            initial: doc.pi,
            transition,
            means,
            variances,
        })
    }

    /// Per-state log emission density of the observation at column `t`.
    fn log_emission(&self, seq: &Array2<f64>, t: usize, out: &mut [f64]) {
        let n_d = self.n_channels();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for c in 0..n_d {
                let v = self.variances[(k, c)];
                let d = seq[(c, t)] - self.means[(k, c)];
                acc += -0.5 * (LN_2PI + v.ln() + d * d / v);
            }
            *slot = acc;
        }
    }

    fn check_dims(&self, seq: &Array2<f64>) -> Result<()> {
        if seq.nrows() != self.n_channels() {
            return Err(Error::Dimension(format!(
                "sequence has {} channels, model expects {}",
                seq.nrows(),
                self.n_channels()
            )));
        }
        if seq.ncols() == 0 {
            return Err(Error::Dimension("sequence has no time steps".to_string()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct HmmDocument {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    n_d: usize,
    pi: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

fn to_nested(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_nested(rows: &[Vec<f64>], nr: usize, nc: usize, what: &str) -> Result<Array2<f64>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Serialization(format!("{what} must be {nr}x{nc}")));
    }
    Ok(Array2::from_shape_fn((nr, nc), |(i, j)| rows[i][j]))
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Exact forward-algorithm log-likelihood of `seq` under `model`.
pub fn log_likelihood(model: &GaussianHmm, seq: &Array2<f64>) -> Result<f64> {
    model.check_dims(seq)?;
    let k = model.n_states();
    let l = seq.ncols();
    let ln_a: Vec<f64> = model.transition.iter().map(|p| p.ln()).collect();
    let mut log_b = vec![0.0; k];
    let mut alpha = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut terms = vec![0.0; k];

    model.log_emission(seq, 0, &mut log_b);
    for s in 0..k {
        alpha[s] = model.initial[s].ln() + log_b[s];
    }
    for t in 1..l {
        model.log_emission(seq, t, &mut log_b);
        for j in 0..k {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = alpha[i] + ln_a[i * k + j];
            }
            next[j] = log_sum_exp(&terms) + log_b[j];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(log_sum_exp(&alpha))
}

// k-means++ style seeding over the pooled per-step observation vectors.
fn seed_means(pooled: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(pooled[rng.random_range(0..pooled.len())].clone());
    let sq_dist =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    while centers.len() < k {
        let dists: Vec<f64> = pooled
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..pooled.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = pooled.len() - 1;
            for (i, d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(pooled[next].clone());
    }
    centers
}

// Uniform distribution plus symmetric Dirichlet(1) jitter, renormalized.
fn jittered_uniform(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| rng.sample::<f64, _>(rand_distr::Exp1))
        .collect();
    let total: f64 = draws.iter().sum();
    let mut out: Vec<f64> = draws
        .iter()
        .map(|d| 1.0 / k as f64 + d / total.max(f64::MIN_POSITIVE))
        .collect();
    let norm: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= norm);
    out
}

struct EStep {
    loglik: f64,
    // Accumulated over sequences.
    gamma0: Vec<f64>,
    trans_num: Array2<f64>,
    gamma_sum: Vec<f64>,
    obs_sum: Array2<f64>,
    obs_sq_sum: Array2<f64>,
}

fn e_step(model: &GaussianHmm, seqs: &[Array2<f64>]) -> EStep {
    let k = model.n_states();
    let n_d = model.n_channels();
    let ln_a: Vec<f64> = model.transition.iter().map(|p| p.ln()).collect();
    let ln_pi: Vec<f64> = model.initial.iter().map(|p| p.ln()).collect();

    let mut acc = EStep {
        loglik: 0.0,
        gamma0: vec![0.0; k],
        trans_num: Array2::zeros((k, k)),
        gamma_sum: vec![0.0; k],
        obs_sum: Array2::zeros((k, n_d)),
        obs_sq_sum: Array2::zeros((k, n_d)),
    };

    let mut terms = vec![0.0; k];
    for seq in seqs {
        let l = seq.ncols();
        let mut log_b = Array2::zeros((l, k));
        for t in 0..l {
            let mut row = vec![0.0; k];
            model.log_emission(seq, t, &mut row);
            for s in 0..k {
                log_b[(t, s)] = row[s];
            }
        }

        let mut alpha = Array2::zeros((l, k));
        for s in 0..k {
            alpha[(0, s)] = ln_pi[s] + log_b[(0, s)];
        }
        for t in 1..l {
            for j in 0..k {
                for (i, term) in terms.iter_mut().enumerate() {
                    *term = alpha[(t - 1, i)] + ln_a[i * k + j];
                }
                alpha[(t, j)] = log_sum_exp(&terms) + log_b[(t, j)];
            }
        }
        let mut beta = Array2::zeros((l, k));
        for t in (0..l - 1).rev() {
            for i in 0..k {
                for (j, term) in terms.iter_mut().enumerate() {
                    *term = ln_a[i * k + j] + log_b[(t + 1, j)] + beta[(t + 1, j)];
                }
                beta[(t, i)] = log_sum_exp(&terms);
            }
        }
        let final_row: Vec<f64> = (0..k).map(|s| alpha[(l - 1, s)]).collect();
        let loglik = log_sum_exp(&final_row);
        acc.loglik += loglik;

        for t in 0..l {
            for s in 0..k {
                let g = (alpha[(t, s)] + beta[(t, s)] - loglik).exp();
                if t == 0 {
                    acc.gamma0[s] += g;
                }
                acc.gamma_sum[s] += g;
                for c in 0..n_d {
                    let x = seq[(c, t)];
                    acc.obs_sum[(s, c)] += g * x;
                    acc.obs_sq_sum[(s, c)] += g * x * x;
                }
            }
        }
        for t in 0..l - 1 {
            for i in 0..k {
                for j in 0..k {
                    let x =
                        (alpha[(t, i)] + ln_a[i * k + j] + log_b[(t + 1, j)] + beta[(t + 1, j)]
                            - loglik)
                            .exp();
                    acc.trans_num[(i, j)] += x;
                }
            }
        }
    }
    acc
}

fn m_step(model: &mut GaussianHmm, acc: &EStep) {
    let k = model.n_states();
    let n_d = model.n_channels();

    let pi_total: f64 = acc.gamma0.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    for s in 0..k {
        model.initial[s] = acc.gamma0[s] / pi_total;
    }

    for i in 0..k {
        let row_sum: f64 = (0..k).map(|j| acc.trans_num[(i, j)]).sum();
        if row_sum > 1e-300 {
            for j in 0..k {
                model.transition[(i, j)] = acc.trans_num[(i, j)] / row_sum;
            }
        } else {
            for j in 0..k {
                model.transition[(i, j)] = 1.0 / k as f64;
            }
        }
    }

    for s in 0..k {
        let w = acc.gamma_sum[s];
        if w <= 1e-300 {
            // Starved state: keep previous parameters.
            continue;
        }
        for c in 0..n_d {
            let mean = acc.obs_sum[(s, c)] / w;
            let var = (acc.obs_sq_sum[(s, c)] / w - mean * mean).max(VAR_FLOOR);
            model.means[(s, c)] = mean;
            model.variances[(s, c)] = var;
        }
    }
}

fn validate_sequences(seqs: &[Array2<f64>]) -> Result<(usize, usize)> {
    let Some(first) = seqs.first() else {
        return Err(Error::Training(
            "HMM fit needs at least one sequence".to_string(),
        ));
    };
    let (n_d, l_d) = (first.nrows(), first.ncols());
    if n_d == 0 || l_d == 0 {
        return Err(Error::Dimension(
            "sequences must have at least one channel and one step".to_string(),
        ));
    }
    for (i, s) in seqs.iter().enumerate() {
        if s.nrows() != n_d || s.ncols() != l_d {
            return Err(Error::Dimension(format!(
                "sequence {i} is {}x{}, expected {n_d}x{l_d}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("sequence {i}")));
        }
    }
    Ok((n_d, l_d))
}

/// Baum-Welch fit returning the model plus the total training log-likelihood
/// recorded at each EM iteration (before the corresponding update).
pub fn fit_gaussian_hmm_traced(
    seqs: &[Array2<f64>],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<(GaussianHmm, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Config("HMM needs at least one state".to_string()));
    }
    let (n_d, l_d) = validate_sequences(seqs)?;
    let total_obs = seqs.len() * l_d;
    if k > total_obs {
        return Err(Error::Training(format!(
            "degenerate fit: {k} states but only {total_obs} observations"
        )));
    }

    let mut rng = rng::stream_rng(seed, "hmm-init", 0);

    // Pool per-step observation vectors for mean seeding and the shared
    // initial variance.
    let mut pooled: Vec<Vec<f64>> = Vec::with_capacity(total_obs);
    for seq in seqs {
        for t in 0..l_d {
            pooled.push((0..n_d).map(|c| seq[(c, t)]).collect());
        }
    }
    let mut pooled_mean = vec![0.0; n_d];
    let mut pooled_sq = vec![0.0; n_d];
    for p in &pooled {
        for c in 0..n_d {
            pooled_mean[c] += p[c];
            pooled_sq[c] += p[c] * p[c];
        }
    }
    let n = pooled.len() as f64;
    for c in 0..n_d {
        pooled_mean[c] /= n;
        pooled_sq[c] = (pooled_sq[c] / n - pooled_mean[c] * pooled_mean[c]).max(VAR_FLOOR);
    }

    let centers = seed_means(&pooled, k, &mut rng);
    let means = Array2::from_shape_fn((k, n_d), |(s, c)| centers[s][c]);
    let variances = Array2::from_shape_fn((k, n_d), |(_, c)| pooled_sq[c]);
    let initial = jittered_uniform(k, &mut rng);
    let mut transition = Array2::zeros((k, k));
    for i in 0..k {
        let row = jittered_uniform(k, &mut rng);
        for j in 0..k {
            transition[(i, j)] = row[j];
        }
    }

    let mut model = GaussianHmm {
        initial,
        transition,
        means,
        variances,
    };

    let mut history = Vec::with_capacity(max_iters);
    let mut prev_mean_ll = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        let acc = e_step(&model, seqs);
        history.push(acc.loglik);
        let mean_ll = acc.loglik / seqs.len() as f64;
        if mean_ll - prev_mean_ll < EM_TOL && prev_mean_ll.is_finite() {
            break;
        }
        prev_mean_ll = mean_ll;
        m_step(&mut model, &acc);
    }
    Ok((model, history))
}

/// Baum-Welch fit of a diagonal-covariance Gaussian HMM.
pub fn fit_gaussian_hmm(
    seqs: &[Array2<f64>],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<GaussianHmm> {
    fit_gaussian_hmm_traced(seqs, k, max_iters, seed).map(|(m, _)| m)
}

/// One generative model per class; the unit of feature extraction.
#[derive(Debug, Clone)]
pub struct PairedHmm {
    pub pos: GaussianHmm,
    pub neg: GaussianHmm,
}

impl PairedHmm {
    /// Fit the positive model on POS-labeled sequences and the negative model
    /// on NEG-labeled sequences. Both fits use the same seed so symmetric
    /// training data yields identical models.
    pub fn fit(
        seqs: &[Array2<f64>],
        labels: &[ClassLabel],
        k: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<Self> {
        if seqs.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} sequences but {} labels",
                seqs.len(),
                labels.len()
            )));
        }
        let pos_seqs: Vec<Array2<f64>> = seqs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == ClassLabel::Pos)
            .map(|(s, _)| s.clone())
            .collect();
        let neg_seqs: Vec<Array2<f64>> = seqs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == ClassLabel::Neg)
            .map(|(s, _)| s.clone())
            .collect();
        if pos_seqs.is_empty() || neg_seqs.is_empty() {
            return Err(Error::Training(
                "paired fit needs sequences from both classes".to_string(),
            ));
        }
        let (pos, neg) = rayon::join(
            || fit_gaussian_hmm(&pos_seqs, k, max_iters, seed),
            || fit_gaussian_hmm(&neg_seqs, k, max_iters, seed),
        );
        Ok(PairedHmm {
            pos: pos?,
            neg: neg?,
        })
    }

    /// `(L(s | G_pos), L(s | G_neg))`.
    pub fn log_likelihoods(&self, seq: &Array2<f64>) -> Result<(f64, f64)> {
        Ok((
            log_likelihood(&self.pos, seq)?,
            log_likelihood(&self.neg, seq)?,
        ))
    }

    /// `L(s | G_pos) - L(s | G_neg)`.
    pub fn ratio(&self, seq: &Array2<f64>) -> Result<f64> {
        let (lp, ln_) = self.log_likelihoods(seq)?;
        Ok(lp - ln_)
    }

    /// `Pos` iff `L(s | G_pos) >= L(s | G_neg)`; ties go to `Pos`.
    pub fn classify(&self, seq: &Array2<f64>) -> Result<ClassLabel> {
        Ok(if self.ratio(seq)? >= 0.0 {
            ClassLabel::Pos
        } else {
            ClassLabel::Neg
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    fn gaussian_seq(
        means: &[f64],
        std: f64,
        n_d: usize,
        l_d: usize,
        rng: &mut ChaCha8Rng,
    ) -> Array2<f64> {
        // `means` holds one level per time step (cycled); all channels share it.
        Array2::from_shape_fn((n_d, l_d), |(_, t)| {
            let m = means[t % means.len()];
            Normal::new(m, std).unwrap().sample(rng)
        })
    }

    /// Brute-force oracle: sum over all k^l hidden paths.
    fn enumerate_loglik(model: &GaussianHmm, seq: &Array2<f64>) -> f64 {
        let k = model.n_states();
        let l = seq.ncols();
        let n_d = model.n_channels();
        let log_density = |state: usize, t: usize| -> f64 {
            (0..n_d)
                .map(|c| {
                    let v = model.variances[(state, c)];
                    let d = seq[(c, t)] - model.means[(state, c)];
                    -0.5 * (LN_2PI + v.ln() + d * d / v)
                })
                .sum()
        };
        let mut total_terms = Vec::new();
        let n_paths = k.pow(l as u32);
        for code in 0..n_paths {
            let mut states = Vec::with_capacity(l);
            let mut c = code;
            for _ in 0..l {
                states.push(c % k);
                c /= k;
            }
            let mut lp = model.initial[states[0]].ln() + log_density(states[0], 0);
            for t in 1..l {
                lp += model.transition[(states[t - 1], states[t])].ln() + log_density(states[t], t);
            }
            total_terms.push(lp);
        }
        log_sum_exp(&total_terms)
    }

    fn random_model(k: usize, n_d: usize, rng: &mut ChaCha8Rng) -> GaussianHmm {
        let initial = jittered_uniform(k, rng);
        let mut transition = Array2::zeros((k, k));
        for i in 0..k {
            let row = jittered_uniform(k, rng);
            for j in 0..k {
                transition[(i, j)] = row[j];
            }
        }
        GaussianHmm {
            initial,
            transition,
            means: Array2::from_shape_fn((k, n_d), |_| rng.random::<f64>() * 6.0 - 3.0),
            variances: Array2::from_shape_fn((k, n_d), |_| 0.3 + rng.random::<f64>() * 2.0),
        }
    }

    #[test]
    fn constant_data_single_state_degenerates() {
        let seqs = vec![Array2::from_elem((1, 8), 4.2); 3];
        let model = fit_gaussian_hmm(&seqs, 1, 20, 0).unwrap();
        assert!((model.means[(0, 0)] - 4.2).abs() < 1e-9);
        assert_eq!(model.variances[(0, 0)], VAR_FLOOR);
    }

    #[test]
    fn single_state_matches_closed_form_mle() {
        // For k = 1 the fitted model is the pooled Gaussian MLE and the
        // forward algorithm collapses to a sum of log densities.
        let mut rng = rng::stream_rng(5, "hmm-k1", 0);
        let seqs: Vec<Array2<f64>> = (0..4)
            .map(|_| gaussian_seq(&[1.0], 0.7, 2, 10, &mut rng))
            .collect();
        let model = fit_gaussian_hmm(&seqs, 1, 10, 3).unwrap();

        // Closed-form MLE of mean and (floored) variance per channel.
        let mut sums = [0.0; 2];
        let mut sqs = [0.0; 2];
        let mut count = 0.0;
        for s in &seqs {
            for c in 0..2 {
                for t in 0..10 {
                    sums[c] += s[(c, t)];
                    sqs[c] += s[(c, t)] * s[(c, t)];
                }
            }
            count += 10.0;
        }
        for c in 0..2 {
            let mean = sums[c] / count;
            let var = (sqs[c] / count - mean * mean).max(VAR_FLOOR);
            assert!((model.means[(0, c)] - mean).abs() < 1e-9);
            assert!((model.variances[(0, c)] - var).abs() < 1e-9);
        }

        let probe = &seqs[0];
        let direct: f64 = (0..10)
            .map(|t| {
                (0..2)
                    .map(|c| {
                        let v = model.variances[(0, c)];
                        let d = probe[(c, t)] - model.means[(0, c)];
                        -0.5 * (LN_2PI + v.ln() + d * d / v)
                    })
                    .sum::<f64>()
            })
            .sum();
        let ll = log_likelihood(&model, probe).unwrap();
        assert!((ll - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn two_state_levels_are_recovered() {
        // Alternating-level data generated from a known 2-state process.
        let mut rng = rng::stream_rng(11, "hmm-2state", 0);
        let seqs: Vec<Array2<f64>> = (0..20)
            .map(|_| gaussian_seq(&[0.0, 0.0, 0.0, 10.0, 10.0, 10.0], 0.5, 1, 30, &mut rng))
            .collect();
        let model = fit_gaussian_hmm(&seqs, 2, 50, 7).unwrap();
        let mut means: Vec<f64> = (0..2).map(|s| model.means[(s, 0)]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] - 0.0).abs() < 0.5, "low mean {}", means[0]);
        assert!((means[1] - 10.0).abs() < 0.5, "high mean {}", means[1]);
    }

    #[test]
    fn forward_matches_path_enumeration() {
        let mut rng = rng::stream_rng(21, "hmm-oracle", 0);
        for trial in 0..20 {
            let k = 1 + trial % 3;
            let n_d = 1 + trial % 2;
            let l = 2 + trial % 5;
            let model = random_model(k, n_d, &mut rng);
            let seq = Array2::from_shape_fn((n_d, l), |_| rng.random::<f64>() * 4.0 - 2.0);
            let fast = log_likelihood(&model, &seq).unwrap();
            let slow = enumerate_loglik(&model, &seq);
            assert!(
                (fast - slow).abs() <= 1e-9 * slow.abs().max(1.0),
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn loglik_decreases_away_from_means() {
        let model = GaussianHmm {
            initial: vec![1.0],
            transition: array![[1.0]],
            means: array![[0.0]],
            variances: array![[1.0]],
        };
        let mut prev = f64::INFINITY;
        for m in [1.0, 10.0, 100.0] {
            let seq = Array2::from_elem((1, 5), m);
            let ll = log_likelihood(&model, &seq).unwrap();
            assert!(ll < prev);
            prev = ll;
        }
    }

    #[test]
    fn em_loglik_is_monotone() {
        let mut rng = rng::stream_rng(33, "hmm-mono", 0);
        for trial in 0..5u64 {
            let seqs: Vec<Array2<f64>> = (0..6)
                .map(|_| gaussian_seq(&[-1.0, 2.0], 1.0, 2, 12, &mut rng))
                .collect();
            let (_, history) =
                fit_gaussian_hmm_traced(&seqs, 2 + trial as usize % 2, 40, trial).unwrap();
            for w in history.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-8,
                    "trial {trial}: loglik dropped {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn stochasticity_holds_after_fit() {
        let mut rng = rng::stream_rng(44, "hmm-stoch", 0);
        let seqs: Vec<Array2<f64>> = (0..5)
            .map(|_| gaussian_seq(&[0.0, 3.0], 0.8, 1, 15, &mut rng))
            .collect();
        let model = fit_gaussian_hmm(&seqs, 3, 30, 1).unwrap();
        assert!((model.initial.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(model.initial.iter().all(|&p| p >= 0.0));
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| model.transition[(i, j)]).sum();
            assert!((row - 1.0).abs() < 1e-9);
        }
        assert!(model.variances.iter().all(|&v| v >= VAR_FLOOR));
    }

    #[test]
    fn loglik_is_invariant_under_state_relabeling() {
        let mut rng = rng::stream_rng(55, "hmm-perm", 0);
        let seqs: Vec<Array2<f64>> = (0..6)
            .map(|_| gaussian_seq(&[0.0, 5.0], 1.0, 1, 10, &mut rng))
            .collect();
        let model = fit_gaussian_hmm(&seqs, 3, 25, 9).unwrap();
        // Permute states (0,1,2) -> (2,0,1).
        let perm = [2usize, 0, 1];
        let permuted = GaussianHmm {
            initial: perm.iter().map(|&p| model.initial[p]).collect(),
            transition: Array2::from_shape_fn((3, 3), |(i, j)| {
                model.transition[(perm[i], perm[j])]
            }),
            means: Array2::from_shape_fn((3, 1), |(i, c)| model.means[(perm[i], c)]),
            variances: Array2::from_shape_fn((3, 1), |(i, c)| model.variances[(perm[i], c)]),
        };
        let probe = &seqs[0];
        let a = log_likelihood(&model, probe).unwrap();
        let b = log_likelihood(&permuted, probe).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn paired_fit_separates_two_levels() {
        let mut rng = rng::stream_rng(66, "hmm-paired", 0);
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..10 {
            seqs.push(gaussian_seq(&[5.0], 1.0, 1, 20, &mut rng));
            labels.push(ClassLabel::Pos);
            seqs.push(gaussian_seq(&[-5.0], 1.0, 1, 20, &mut rng));
            labels.push(ClassLabel::Neg);
        }
        let paired = PairedHmm::fit(&seqs, &labels, 1, 20, 2).unwrap();
        assert!(paired.pos.means[(0, 0)] > 0.0);
        assert!(paired.neg.means[(0, 0)] < 0.0);

        let pos_probe = gaussian_seq(&[5.0], 1.0, 1, 20, &mut rng);
        let neg_probe = gaussian_seq(&[-5.0], 1.0, 1, 20, &mut rng);
        assert_eq!(paired.classify(&pos_probe).unwrap(), ClassLabel::Pos);
        assert_eq!(paired.classify(&neg_probe).unwrap(), ClassLabel::Neg);
        assert!(paired.ratio(&pos_probe).unwrap() > 10.0);
    }

    #[test]
    fn paired_fit_identical_classes_gives_zero_ratio() {
        let mut rng = rng::stream_rng(77, "hmm-sym", 0);
        let shared: Vec<Array2<f64>> = (0..6)
            .map(|_| gaussian_seq(&[1.0], 1.0, 1, 12, &mut rng))
            .collect();
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for s in &shared {
            seqs.push(s.clone());
            labels.push(ClassLabel::Pos);
            seqs.push(s.clone());
            labels.push(ClassLabel::Neg);
        }
        let paired = PairedHmm::fit(&seqs, &labels, 2, 20, 5).unwrap();
        let probe = gaussian_seq(&[1.0], 1.0, 1, 12, &mut rng);
        let ratio = paired.ratio(&probe).unwrap();
        assert!(ratio.abs() < 1e-3, "ratio {ratio}");
        // Exact tie resolves to Pos.
        assert_eq!(paired.classify(&probe).unwrap(), ClassLabel::Pos);
    }

    #[test]
    fn paired_fit_rejects_single_class() {
        let seqs = vec![Array2::from_elem((1, 4), 0.0); 3];
        let labels = vec![ClassLabel::Pos; 3];
        assert!(matches!(
            PairedHmm::fit(&seqs, &labels, 1, 5, 0),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn ratio_sign_agrees_with_classify() {
        let mut rng = rng::stream_rng(88, "hmm-sign", 0);
        let mut seqs = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..8 {
            seqs.push(gaussian_seq(&[2.0], 1.0, 1, 10, &mut rng));
            labels.push(ClassLabel::Pos);
            seqs.push(gaussian_seq(&[-2.0], 1.0, 1, 10, &mut rng));
            labels.push(ClassLabel::Neg);
        }
        let paired = PairedHmm::fit(&seqs, &labels, 2, 15, 4).unwrap();
        for i in 0..1000 {
            let level = (i % 9) as f64 - 4.0;
            let probe = gaussian_seq(&[level], 1.0, 1, 10, &mut rng);
            let ratio = paired.ratio(&probe).unwrap();
            let label = paired.classify(&probe).unwrap();
            assert_eq!(ratio >= 0.0, label == ClassLabel::Pos);
        }
    }

    #[test]
    fn degenerate_state_count_errors() {
        let seqs = vec![Array2::from_elem((1, 3), 1.0)];
        assert!(matches!(
            fit_gaussian_hmm(&seqs, 4, 5, 0),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn non_finite_input_errors() {
        let seqs = vec![Array2::from_elem((1, 3), f64::INFINITY)];
        assert!(matches!(
            fit_gaussian_hmm(&seqs, 1, 5, 0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn dimension_mismatch_errors() {
        let model = GaussianHmm {
            initial: vec![1.0],
            transition: array![[1.0]],
            means: array![[0.0]],
            variances: array![[1.0]],
        };
        let seq = Array2::from_elem((2, 4), 0.0);
        assert!(matches!(
            log_likelihood(&model, &seq),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn json_roundtrip_preserves_model() {
        let mut rng = rng::stream_rng(99, "hmm-json", 0);
        let model = random_model(3, 2, &mut rng);
        let text = model.to_json();
        assert!(text.contains("\"version\": 1"));
        let back = GaussianHmm::from_json(&text).unwrap();
        assert_eq!(model, back);
    }
}
