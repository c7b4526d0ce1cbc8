use nalgebra::{Matrix3, Vector3};

use super::Ensemble;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Output of [`superpose_kabsch`].
#[derive(Clone, Debug)]
pub struct Superposition<T> {
    pub ensemble: Ensemble<T>,
    /// Frames left untransformed because the optimal rotation is not unique
    /// (collinear or coincident atoms in the frame or the reference).
    pub degenerate_frames: Vec<usize>,
}

/// Root mean square deviation between two frame vectors of equal length.
pub fn rmsd<T: Scalar>(a: &[T], b: &[T]) -> T {
    let atoms = T::of((a.len() / 3) as f64);
    (crate::scalar::sq_dist(a, b) / atoms).sqrt()
}

fn centroid(frame: &[f64]) -> Vector3<f64> {
    let mut c = Vector3::zeros();
    for p in frame.chunks_exact(3) {
        c += Vector3::new(p[0], p[1], p[2]);
    }
    c / (frame.len() / 3) as f64
}

const RANK_TOL: f64 = 1e-10;

/// Rigidly superposes every frame onto `reference` by least-squares rotation
/// and translation. The reference frame itself is copied unchanged.
pub fn superpose_kabsch<T: Scalar>(e: &Ensemble<T>, reference: usize) -> Result<Superposition<T>> {
    if reference >= e.n_frames() {
        return Err(invalid(format!(
            "reference frame {reference} out of range for {} frames",
            e.n_frames()
        )));
    }
    let to_f64 = |row: &[T]| row.iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
    let target = to_f64(e.frame(reference));
    let target_c = centroid(&target);

    let mut coords = Vec::with_capacity(e.coords().len());
    let mut degenerate = Vec::new();
    for (f, row) in e.frames().enumerate() {
        if f == reference {
            coords.extend_from_slice(row);
            continue;
        }
        let mobile = to_f64(row);
        let mobile_c = centroid(&mobile);
        let mut h = Matrix3::<f64>::zeros();
        for (p, q) in mobile.chunks_exact(3).zip(target.chunks_exact(3)) {
            let p = Vector3::new(p[0], p[1], p[2]) - mobile_c;
            let q = Vector3::new(q[0], q[1], q[2]) - target_c;
            h += p * q.transpose();
        }
        let svd = h.svd(true, true);
        let mut s = svd.singular_values;
        s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
        if !(s[0] > 0.0) || s[1] <= RANK_TOL * s[0] {
            log::warn!("frame {f}: degenerate geometry, left untransformed");
            degenerate.push(f);
            coords.extend_from_slice(row);
            continue;
        }
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let v = v_t.transpose();
        let d = (v * u.transpose()).determinant().signum();
        let rot = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
        for p in mobile.chunks_exact(3) {
            let x = rot * (Vector3::new(p[0], p[1], p[2]) - mobile_c) + target_c;
            coords.extend([T::of(x.x), T::of(x.y), T::of(x.z)]);
        }
    }
    Ok(Superposition {
        ensemble: e.with_coords(coords),
        degenerate_frames: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        // Unit quaternion from a normalized 4D gaussian-ish sample.
        let mut q = [0.0f64; 4];
        loop {
            for v in q.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let n = q.iter().map(|v| v * v).sum::<f64>();
            if n > 1e-3 && n <= 1.0 {
                let n = n.sqrt();
                q.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        let [w, x, y, z] = q;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    fn random_frame(rng: &mut ChaCha8Rng, atoms: usize) -> Vec<f64> {
        (0..3 * atoms).map(|_| rng.gen_range(-10.0..10.0)).collect()
    }

    fn ensemble(frames: Vec<Vec<f64>>) -> Ensemble<f64> {
        let atoms = frames[0].len() / 3;
        Ensemble::from_frames(&frames, Ensemble::<f64>::synthetic_labels(atoms), "t").unwrap()
    }

    #[test]
    fn identical_frame_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_frame(&mut rng, 8);
        let e = ensemble(vec![f.clone(), f.clone()]);
        let s = superpose_kabsch(&e, 0).unwrap();
        assert!(s.degenerate_frames.is_empty());
        for (a, b) in s.ensemble.frame(1).iter().zip(&f) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn recovers_rotated_and_translated_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let reference = random_frame(&mut rng, 12);
            let rot = random_rotation(&mut rng);
            let shift = Vector3::new(3.0, -7.5, 12.25);
            let moved: Vec<f64> = reference
                .chunks_exact(3)
                .flat_map(|p| {
                    let x = rot * Vector3::new(p[0], p[1], p[2]) + shift;
                    [x.x, x.y, x.z]
                })
                .collect();
            let e = ensemble(vec![reference.clone(), moved]);
            let s = superpose_kabsch(&e, 0).unwrap();
            assert_eq!(s.ensemble.frame(0), &reference[..]);
            for (a, b) in s.ensemble.frame(1).iter().zip(&reference) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rmsd_never_increases_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let frames: Vec<Vec<f64>> = (0..4).map(|_| random_frame(&mut rng, 6)).collect();
            let e = ensemble(frames);
            let once = superpose_kabsch(&e, 1).unwrap().ensemble;
            let twice = superpose_kabsch(&once, 1).unwrap().ensemble;
            for f in 0..4 {
                let before = rmsd(e.frame(f), e.frame(1));
                let after = rmsd(once.frame(f), once.frame(1));
                assert!(after <= before + 1e-9, "frame {f}: {after} > {before}");
            }
            for (a, b) in once.coords().iter().zip(twice.coords()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn collinear_frame_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reference = random_frame(&mut rng, 5);
        let line: Vec<f64> = (0..5).flat_map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        let e = ensemble(vec![reference, line.clone()]);
        let s = superpose_kabsch(&e, 0).unwrap();
        assert_eq!(s.degenerate_frames, vec![1]);
        assert_eq!(s.ensemble.frame(1), &line[..]);
    }

    #[test]
    fn reference_out_of_range() {
        let e = ensemble(vec![vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]]);
        assert!(superpose_kabsch(&e, 1).is_err());
    }
}
