use std::fmt::Write as _;

use super::palette_color;
use crate::clustering::MapPartition;
use crate::error::{invalid, Result};
use crate::som::{Assignment, SomMap};

/// Pixels per lattice unit (distance between neighbouring neuron centres).
pub const HEX_SCALE: f64 = 40.0;

/// Circumradius of the hit hexagon: its area scales with `hits / max_hits`
/// and the busiest neuron reaches 0.9 of the outer radius.
pub fn inner_radius(hits: usize, max_hits: usize, outer: f64) -> f64 {
    if hits == 0 || max_hits == 0 {
        return 0.0;
    }
    0.9 * outer * (hits as f64 / max_hits as f64).sqrt()
}

fn hexagon(cx: f64, cy: f64, r: f64) -> String {
    let mut s = String::new();
    for k in 0..6 {
        // Pointy-top: first vertex straight up.
        let angle = std::f64::consts::FRAC_PI_3 * k as f64 - std::f64::consts::FRAC_PI_2;
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.6},{:.6}", cx + r * angle.cos(), cy + r * angle.sin());
    }
    s
}

/// Hexagonal map: outer hexagons coloured by cluster, inner hexagons sized by hits.
pub fn render_som_svg<T>(map: &SomMap<T>, a: &Assignment, p: &MapPartition) -> Result<Vec<u8>>
where
    T: crate::Scalar,
{
    let grid = *map.grid();
    if a.hits.len() != grid.len() || p.cluster_of.len() != grid.len() {
        return Err(invalid("hits and partition must cover every neuron"));
    }
    let outer = HEX_SCALE / 3f64.sqrt();
    let margin = HEX_SCALE;
    let width = 2.0 * margin + (grid.cols as f64 - 0.5) * HEX_SCALE;
    let height = 2.0 * margin + (grid.rows.saturating_sub(1)) as f64 * HEX_SCALE * 3f64.sqrt() / 2.0;
    let max_hits = a.hits.iter().copied().max().unwrap_or(0);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.6} {height:.6}\">"
    );
    let _ = writeln!(
        s,
        "<title>SOM {}x{}: {} clusters, {} frames</title>",
        grid.rows,
        grid.cols,
        p.k,
        a.bmu.len()
    );
    s.push_str("<g id=\"neurons\" stroke=\"#404040\" stroke-width=\"1\">\n");
    for i in 0..grid.len() {
        let (x, y) = grid.position(i);
        let (cx, cy) = (margin + x * HEX_SCALE, margin + y * HEX_SCALE);
        let _ = writeln!(
            s,
            "<polygon class=\"neuron\" data-neuron=\"{i}\" data-cluster=\"{}\" data-hits=\"{}\" fill=\"{}\" points=\"{}\"><title>neuron {i}: cluster {}, {} hits</title></polygon>",
            p.cluster_of[i],
            a.hits[i],
            palette_color(p.cluster_of[i]),
            hexagon(cx, cy, outer),
            p.cluster_of[i],
            a.hits[i],
        );
    }
    s.push_str("</g>\n<g id=\"hits\" fill=\"#202020\" fill-opacity=\"0.75\" stroke=\"none\">\n");
    for i in 0..grid.len() {
        let r = inner_radius(a.hits[i], max_hits, outer);
        if r == 0.0 {
            continue;
        }
        let (x, y) = grid.position(i);
        let (cx, cy) = (margin + x * HEX_SCALE, margin + y * HEX_SCALE);
        let _ = writeln!(
            s,
            "<polygon class=\"hits\" data-neuron=\"{i}\" data-hits=\"{}\" points=\"{}\"/>",
            a.hits[i],
            hexagon(cx, cy, r)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::{HexGrid, TrainingConfig};

    fn map(rows: usize, cols: usize) -> SomMap<f64> {
        let grid = HexGrid::new(rows, cols).unwrap();
        SomMap::from_prototypes(grid, 6, vec![0.0; grid.len() * 6], TrainingConfig::default()).unwrap()
    }

    fn polygons(svg: &str, class: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.contains(&format!("class=\"{class}\"")))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                let end = start + l[start..].find('"').unwrap();
                l[start..end]
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    fn area(poly: &[(f64, f64)]) -> f64 {
        let n = poly.len();
        (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            .abs()
            / 2.0
    }

    #[test]
    fn zero_hits_draw_no_inner_hexagons() {
        let m = map(2, 3);
        let a = Assignment { bmu: vec![], hits: vec![0; 6], qe: 0.0 };
        let p = MapPartition { cluster_of: vec![0, 0, 1, 1, 2, 2], k: 3, k_const: 1.25 };
        let svg = String::from_utf8(render_som_svg(&m, &a, &p).unwrap()).unwrap();
        assert_eq!(polygons(&svg, "neuron").len(), 6);
        assert!(polygons(&svg, "hits").is_empty());
        assert!(svg.contains(palette_color(2)));
    }

    #[test]
    fn busiest_neuron_reaches_nine_tenths() {
        assert_eq!(inner_radius(7, 7, 10.0), 9.0);
        assert_eq!(inner_radius(0, 7, 10.0), 0.0);
    }

    #[test]
    fn inner_areas_proportional_to_hits() {
        let m = map(3, 3);
        let hits = vec![1, 2, 3, 4, 0, 9, 16, 5, 7];
        let a = Assignment { bmu: vec![0; 47], hits: hits.clone(), qe: 0.0 };
        let p = MapPartition { cluster_of: vec![0; 9], k: 1, k_const: 1.25 };
        let svg = String::from_utf8(render_som_svg(&m, &a, &p).unwrap()).unwrap();
        let inner = polygons(&svg, "hits");
        let nonzero: Vec<usize> = hits.iter().copied().filter(|&h| h > 0).collect();
        assert_eq!(inner.len(), nonzero.len());
        let ratios: Vec<f64> = inner.iter().zip(&nonzero).map(|(p, &h)| area(p) / h as f64).collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-6, "{ratios:?}");
        }
    }

    #[test]
    fn deterministic_bytes() {
        let m = map(4, 4);
        let a = Assignment { bmu: vec![], hits: (0..16).collect(), qe: 0.0 };
        let p = MapPartition { cluster_of: (0..16).map(|i| i % 3).collect(), k: 3, k_const: 1.25 };
        assert_eq!(render_som_svg(&m, &a, &p).unwrap(), render_som_svg(&m, &a, &p).unwrap());
    }
}
