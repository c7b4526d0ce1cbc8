use rayon::prelude::*;

use super::grid::gaussian_sq;
use super::{SomMap, TrainMode, TrainingConfig};
use crate::ensemble::Ensemble;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

const MIN_DENOMINATOR: f64 = 1e-12;

/// Trains with the algorithm selected by `cfg.mode`.
pub fn train<T: Scalar>(map: &SomMap<T>, e: &Ensemble<T>, cfg: &TrainingConfig) -> Result<SomMap<T>> {
    match cfg.mode {
        TrainMode::Batch => train_batch(map, e, cfg),
        TrainMode::Sequential => train_sequential(map, e, cfg),
    }
}

/// Batch SOM: each epoch replaces every prototype by the neighbourhood-weighted
/// mean of all frames, weighted through the frames' current winners.
///
/// Winners are found in parallel; all sums run in neuron and frame index
/// order, so the result does not depend on the number of worker threads.
pub fn train_batch<T: Scalar>(
    map: &SomMap<T>,
    e: &Ensemble<T>,
    cfg: &TrainingConfig,
) -> Result<SomMap<T>> {
    cfg.validate_schedule()?;
    map.check_dim(e.dim())?;
    let (m, dim) = (map.len(), map.dim());
    let dsq = map.grid().sq_distance_table();
    let mut out = map.clone();
    let mut sums = vec![T::zero(); m * dim];
    let mut counts = vec![0usize; m];
    let mut bmus = vec![0usize; e.n_frames()];

    for epoch in 0..cfg.train_len {
        let sigma = cfg.radius_at(epoch, cfg.train_len);
        out.update_bmus(e, &mut bmus);
        sums.fill(T::zero());
        counts.fill(0);
        for (x, &b) in e.frames().zip(&bmus) {
            counts[b] += 1;
            for (s, &v) in sums[b * dim..(b + 1) * dim].iter_mut().zip(x) {
                *s = *s + v;
            }
        }
        let winners: Vec<usize> = (0..m).filter(|&j| counts[j] > 0).collect();

        out.prototypes
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(i, proto)| {
                let mut num = vec![T::zero(); dim];
                let mut den = 0.0f64;
                for &j in &winners {
                    let h = gaussian_sq(dsq[i * m + j], sigma);
                    den += h * counts[j] as f64;
                    let hw = T::of(h);
                    for (acc, &s) in num.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                        *acc = *acc + hw * s;
                    }
                }
                if den >= MIN_DENOMINATOR {
                    let den = T::of(den);
                    for (p, n) in proto.iter_mut().zip(num) {
                        *p = n / den;
                    }
                }
            });
    }
    out.trained = true;
    out.config = cfg.clone();
    Ok(out)
}

/// Classic online Kohonen training over `train_len · F` presentations in frame order.
///
/// The learning rate decays linearly from `alpha0` towards zero and the radius
/// linearly from `radius0` to `radius_final`.
pub fn train_sequential<T: Scalar>(
    map: &SomMap<T>,
    e: &Ensemble<T>,
    cfg: &TrainingConfig,
) -> Result<SomMap<T>> {
    cfg.validate_schedule()?;
    if !(0.0..=1.0).contains(&cfg.alpha0) {
        return Err(invalid(format!("alpha0 must be in [0, 1], got {}", cfg.alpha0)));
    }
    map.check_dim(e.dim())?;
    let (m, dim, frames) = (map.len(), map.dim(), e.n_frames());
    let dsq = map.grid().sq_distance_table();
    let steps = cfg.train_len * frames;
    let mut out = map.clone();

    for s in 0..steps {
        let x = e.frame(s % frames);
        let alpha = cfg.alpha0 * (1.0 - s as f64 / steps as f64);
        if alpha == 0.0 {
            continue;
        }
        let sigma = cfg.radius_at(s, steps);
        let (c, _) = out.nearest(x);
        for (i, proto) in out.prototypes.chunks_exact_mut(dim).enumerate() {
            let rate = T::of(alpha * gaussian_sq(dsq[c * m + i], sigma));
            for (p, &v) in proto.iter_mut().zip(x) {
                *p = *p + rate * (v - *p);
            }
        }
    }
    out.trained = true;
    out.config = cfg.clone();
    Ok(out)
}
