use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HexGrid, InitMethod, SomMap, TrainingConfig};
use crate::ensemble::Ensemble;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Creates an untrained map sized by `cfg.map_size`.
///
/// Linear initialization lays the lattice on the plane of the two leading
/// principal directions, scaled by their standard deviations. It falls back
/// to random initialization (logged, and visible through
/// [`SomMap::init_used`]) when the data has fewer than two non-trivial
/// principal directions.
pub fn init_map<T: Scalar>(e: &Ensemble<T>, cfg: &TrainingConfig) -> Result<SomMap<T>> {
    cfg.validate()?;
    let grid = HexGrid::for_size(cfg.map_size)?;
    let dim = e.dim();
    let (prototypes, used) = match cfg.init {
        InitMethod::Random => (random_prototypes(e, grid.len(), cfg.seed), InitMethod::Random),
        InitMethod::Linear => {
            if e.n_frames() < 2 {
                return Err(invalid("linear initialization needs at least 2 frames"));
            }
            match linear_prototypes(e, &grid) {
                Some(p) => (p, InitMethod::Linear),
                None => {
                    log::warn!("data has fewer than two principal directions; using random init");
                    (random_prototypes(e, grid.len(), cfg.seed), InitMethod::Random)
                }
            }
        }
    };
    let mut map = SomMap::from_prototypes(grid, dim, prototypes, cfg.clone())?;
    map.init_used = used;
    Ok(map)
}

fn random_prototypes<T: Scalar>(e: &Ensemble<T>, neurons: usize, seed: u64) -> Vec<T> {
    let dim = e.dim();
    let mut lo = e.frame(0).to_vec();
    let mut hi = lo.clone();
    for row in e.frames() {
        for (k, &v) in row.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(neurons * dim);
    for _ in 0..neurons {
        for k in 0..dim {
            let u: f64 = rng.gen();
            out.push(lo[k] + T::of(u) * (hi[k] - lo[k]));
        }
    }
    out
}

/// Mean and the two leading (variance, unit direction) pairs of the rows of `e`.
pub(crate) fn principal_plane<T: Scalar>(
    e: &Ensemble<T>,
) -> (DVector<f64>, [(f64, DVector<f64>); 2]) {
    let (frames, dim) = (e.n_frames(), e.dim());
    let mut x = DMatrix::<f64>::from_fn(frames, dim, |f, k| e.frame(f)[k].as_f64());
    let mean = DVector::from_fn(dim, |k, _| x.column(k).sum() / frames as f64);
    for k in 0..dim {
        let mu = mean[k];
        x.column_mut(k).iter_mut().for_each(|v| *v -= mu);
    }
    let denom = (frames.max(2) - 1) as f64;

    let mut pairs: Vec<(f64, DVector<f64>)> = if dim <= frames {
        let cov = x.tr_mul(&x) / denom;
        let eig = SymmetricEigen::new(cov);
        (0..dim)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
            .collect()
    } else {
        // Gram route: eigenvectors of X Xᵀ map to those of Xᵀ X.
        let gram = &x * x.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        (0..frames)
            .map(|i| {
                let v = x.tr_mul(&eig.eigenvectors.column(i).into_owned());
                let n = v.norm();
                let v = if n > 0.0 { v / n } else { v };
                (eig.eigenvalues[i], v)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut it = pairs.into_iter().map(|(lambda, mut v)| {
        // Sign convention: largest-magnitude component positive.
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        (lambda.max(0.0), v)
    });
    let zero = || (0.0, DVector::zeros(dim));
    let first = it.next().unwrap_or_else(zero);
    let second = it.next().unwrap_or_else(zero);
    (mean, [first, second])
}

fn linear_prototypes<T: Scalar>(e: &Ensemble<T>, grid: &HexGrid) -> Option<Vec<T>> {
    let (mean, [(l1, v1), (l2, v2)]) = principal_plane(e);
    if !(l1 > 0.0) || l2 <= 1e-12 * l1 {
        return None;
    }
    let positions: Vec<(f64, f64)> = (0..grid.len()).map(|i| grid.position(i)).collect();
    let span = |sel: fn(&(f64, f64)) -> f64| {
        let lo = positions.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = positions.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (x_lo, x_hi) = span(|p| p.0);
    let (y_lo, y_hi) = span(|p| p.1);
    let unit = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            2.0 * (v - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    };
    // Longer lattice side follows the leading direction.
    let x_major = (x_hi - x_lo) >= (y_hi - y_lo);
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let mut out = Vec::with_capacity(grid.len() * e.dim());
    for &(px, py) in &positions {
        let (u, w) = (unit(px, x_lo, x_hi), unit(py, y_lo, y_hi));
        let (a, b) = if x_major { (u, w) } else { (w, u) };
        for k in 0..e.dim() {
            out.push(T::of(mean[k] + a * s1 * v1[k] + b * s2 * v2[k]));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ensemble(frames: &[Vec<f64>]) -> Ensemble<f64> {
        let atoms = frames[0].len() / 3;
        Ensemble::from_frames(frames, Ensemble::<f64>::synthetic_labels(atoms), "t").unwrap()
    }

    #[test]
    fn random_init_on_identical_frames_collapses_to_the_point() {
        let point = vec![1.0, -2.0, 3.5, 0.25, 7.0, -1.0];
        let e = ensemble(&[point.clone(), point.clone(), point.clone()]);
        let cfg = TrainingConfig {
            map_size: 9,
            init: InitMethod::Random,
            ..Default::default()
        };
        let map = init_map(&e, &cfg).unwrap();
        for i in 0..map.len() {
            assert_eq!(map.prototype(i), &point[..]);
        }
    }

    #[test]
    fn same_seed_same_map() {
        let frames: Vec<Vec<f64>> = (0..20)
            .map(|f| (0..9).map(|k| ((f * 9 + k) as f64 * 0.77).sin()).collect())
            .collect();
        let e = ensemble(&frames);
        for init in [InitMethod::Random, InitMethod::Linear] {
            let cfg = TrainingConfig { map_size: 16, init, seed: 42, ..Default::default() };
            assert_eq!(init_map(&e, &cfg).unwrap(), init_map(&e, &cfg).unwrap());
        }
        let a = TrainingConfig { map_size: 16, init: InitMethod::Random, seed: 1, ..Default::default() };
        let b = TrainingConfig { seed: 2, ..a.clone() };
        assert_ne!(init_map(&e, &a).unwrap(), init_map(&e, &b).unwrap());
    }

    #[test]
    fn collinear_data_falls_back_to_random() {
        let frames: Vec<Vec<f64>> = (0..10)
            .map(|f| vec![f as f64, 2.0 * f as f64, 0.0, 1.0, 1.0, 1.0])
            .collect();
        let e = ensemble(&frames);
        let map = init_map(&e, &TrainingConfig { map_size: 9, ..Default::default() }).unwrap();
        assert_eq!(map.init_used(), InitMethod::Random);
    }

    #[test]
    fn linear_init_needs_two_frames() {
        let e = ensemble(&[vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]]);
        assert!(init_map(&e, &TrainingConfig { map_size: 4, ..Default::default() }).is_err());
    }
}
