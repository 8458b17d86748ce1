use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvomlError;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per point, 0-based.
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

impl KMeansResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignment {
            s[a] += 1;
        }
        s
    }
}

/// Column-wise z-scores (population SD; constant columns are only centered).
pub fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else { return vec![] };
    let n = points.len() as f64;
    let d = first.len();
    let mut out = points.to_vec();
    for j in 0..d {
        let m = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for p in &mut out {
            p[j] = (p[j] - m) / sd;
        }
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let a = points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, cent) in centroids.iter().enumerate() {
                let d = dist2(p, cent);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            total += best_d;
            best
        })
        .collect();
    (a, total)
}

fn update(points: &[Vec<f64>], assignment: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = old[0].len();
    let mut sums = vec![vec![0.0; d]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, c), o)| if c == 0 { o.clone() } else { s.into_iter().map(|v| v / c as f64).collect() })
        .collect()
}

/// Lloyd's algorithm from k seeded distinct starting points (Forgy).
/// Points are used as given; standardize beforehand if needed.
pub fn kmeans_cluster(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, EvomlError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(EvomlError::DegenerateK { k, n });
    }
    let dim = points[0].len();
    if let Some((row, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
        return Err(EvomlError::RaggedRows { row, expected: dim, got: p.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = sample(&mut rng, n, k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
    let (mut assignment, inertia0) = assign(points, &centroids);
    let mut history = vec![inertia0];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        centroids = update(points, &assignment, &centroids);
        let (next, inertia) = assign(points, &centroids);
        history.push(inertia);
        let done = next == assignment;
        assignment = next;
        if done {
            break;
        }
    }
    let inertia = *history.last().unwrap();
    Ok(KMeansResult { k, centroids, assignment, inertia, iterations, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let r = kmeans_cluster(&pts, 1, 0).unwrap();
        assert!((r.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 1.0).abs() < 1e-12);
        // total squared deviation about the mean
        assert!((r.inertia - (1.0 + 1.0 + 1.0 + 0.0 + 1.0 + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n() {
        let pts = vec![vec![0.0], vec![5.0], vec![9.0], vec![5.0]];
        let r = kmeans_cluster(&pts, 4, 7).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn bad_k() {
        assert!(matches!(kmeans_cluster(&[vec![1.0]], 2, 0), Err(EvomlError::DegenerateK { k: 2, n: 1 })));
        assert!(kmeans_cluster(&[vec![1.0]], 0, 0).is_err());
    }
}
