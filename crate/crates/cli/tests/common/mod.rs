#![allow(dead_code)]

use confsom::{AtomLabel, Ensemble64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

fn unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    UnitSphere.sample(rng)
}

/// Cα-like chain hopping between three metastable conformations.
///
/// The trajectory dwells in states 0, 1, 2, 0, 1, 2, ... with linear
/// transitions of `frames / 45` frames between them, a slow breathing motion
/// of 0.3 Å inside each state and isotropic Gaussian noise of `noise` Å.
pub fn three_state(atoms: usize, frames: usize, noise: f64, seed: u64) -> Ensemble64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = vec![[0.0; 3]; atoms];
    for a in 1..atoms {
        let d = unit(&mut rng);
        base[a] = [0, 1, 2].map(|k| base[a - 1][k] + 3.8 * d[k]);
    }
    let states: Vec<Vec<f64>> = (0..3)
        .map(|s| {
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            base.iter()
                .enumerate()
                .flat_map(|(a, p)| {
                    let d = unit(&mut rng);
                    let amp = if s == 0 { 0.0 } else { 4.0 * (phase + a as f64 * 0.3).sin().abs() + 1.0 };
                    [0, 1, 2].map(|k| p[k] + amp * d[k])
                })
                .collect()
        })
        .collect();
    let breathing: Vec<f64> = (0..3 * atoms).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let segments = 6;
    let seg_len = frames.div_ceil(segments);
    let ramp = (frames / 45).max(1);
    let gauss = Normal::new(0.0, noise.max(0.0)).unwrap();
    let mut coords = Vec::with_capacity(frames * 3 * atoms);
    for f in 0..frames {
        let seg = f / seg_len;
        let within = f % seg_len;
        let (from, to) = (seg % 3, (seg + 1) % 3);
        let t = if within + ramp >= seg_len && seg + 1 < segments {
            (within + ramp + 1 - seg_len) as f64 / (ramp + 1) as f64
        } else {
            0.0
        };
        let b = 0.3 * (f as f64 * std::f64::consts::TAU / 50.0).sin();
        for i in 0..3 * atoms {
            let x = (1.0 - t) * states[from][i] + t * states[to][i] + b * breathing[i];
            coords.push(if noise > 0.0 { x + gauss.sample(&mut rng) } else { x });
        }
    }
    let labels = (0..atoms)
        .map(|a| AtomLabel::residue("ALA", a as i32 + 1, 'A'))
        .collect();
    Ensemble64::new(coords, labels, None, "three-state").unwrap()
}

/// Same ensemble with independent Gaussian noise of `sigma` Å added.
pub fn jitter(e: &Ensemble64, sigma: f64, seed: u64) -> Ensemble64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, sigma).unwrap();
    let coords = e.coords().iter().map(|x| x + gauss.sample(&mut rng)).collect();
    Ensemble64::new(coords, e.labels().to_vec(), None, e.source()).unwrap()
}
