use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

pub const MAX_ITERATIONS: usize = 100;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding: the first center uniformly, the rest with probability
/// proportional to the squared distance to the closest chosen center. Stops
/// early when every point already coincides with a center.
pub fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    if points.is_empty() || k == 0 {
        return centers;
    }
    centers.push(points[rng.gen_range(0..points.len())].clone());
    while centers.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let Ok(sampler) = WeightedIndex::new(&weights) else {
            break;
        };
        centers.push(points[sampler.sample(rng)].clone());
    }
    centers
}

/// Lloyd iterations from a k-means++ start, until assignments stop changing
/// or [`MAX_ITERATIONS`] is reached. Empty clusters keep their old center.
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = init_plus_plus(points, k, rng);
    if centers.is_empty() {
        return centers;
    }
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (p, slot) in points.iter().zip(assignment.iter_mut()) {
            let (c, _) = nearest(p, &centers);
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for ((center, sum), count) in centers.iter_mut().zip(sums).zip(counts) {
            if count > 0 {
                *center = sum.into_iter().map(|s| s / count as f64).collect();
            }
        }
    }
    centers
}
