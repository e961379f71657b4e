use std::f64::consts::PI;

use lrqaoa::problems::gen_wmaxcut;
use lrqaoa::scan::{grid_from_axes, scan_performance_diagram};
use lrqaoa::schedule::Axis;

/// Sizes of the 8-connected components of `mask` on a `rows x cols` grid.
fn components(mask: &[bool], rows: usize, cols: usize) -> Vec<usize> {
    let mut seen = vec![false; mask.len()];
    let mut sizes = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(c) = stack.pop() {
            size += 1;
            let (r, k) = ((c / cols) as isize, (c % cols) as isize);
            for dr in -1..=1 {
                for dk in -1..=1 {
                    let (r2, k2) = (r + dr, k + dk);
                    if r2 < 0 || k2 < 0 || r2 >= rows as isize || k2 >= cols as isize {
                        continue;
                    }
                    let idx = r2 as usize * cols + k2 as usize;
                    if mask[idx] && !seen[idx] {
                        seen[idx] = true;
                        stack.push(idx);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

#[test]
fn high_probability_region_is_connected() {
    let steps = 16;
    let axis = Axis::new(0.0, 0.75 * PI, steps).unwrap();
    let grid = grid_from_axes(axis, axis).unwrap();
    let inst = gen_wmaxcut(10, 0.7, 2).unwrap();
    let d = scan_performance_diagram(&inst, 50, &grid, None).unwrap();
    let mask: Vec<bool> = d.cells.iter().map(|c| c.success_prob >= 10.0 * d.p_random).collect();
    let sizes = components(&mask, steps, steps);
    assert!(!sizes.is_empty(), "no cell reaches 10x the uniform baseline");
    assert_eq!(sizes.len(), 1, "high cells split into components of sizes {sizes:?}");
}

#[test]
fn small_slopes_are_near_the_best() {
    let axis = Axis::new(0.0, 1.5, 16).unwrap();
    let grid = grid_from_axes(axis, axis).unwrap();
    let near = (0..10u64)
        .filter(|&seed| {
            let inst = gen_wmaxcut(10, 0.7, 300 + seed).unwrap();
            let d = scan_performance_diagram(&inst, 50, &grid, None).unwrap();
            let best = d.best().unwrap().success_prob;
            let boxed = d
                .cells
                .iter()
                .filter(|c| c.delta_beta <= 0.6 + 1e-9 && c.delta_gamma <= 0.6 + 1e-9)
                .map(|c| c.success_prob)
                .fold(0.0, f64::max);
            boxed >= 0.9 * best
        })
        .count();
    assert!(
        near > 5,
        "only {near}/10 instances reach 90% of their best inside the small-slope box"
    );
}
