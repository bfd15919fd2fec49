use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::kernel::AdjacencyKernel;
use crate::unionfind::UnionFind;

/// Largest admissible expected point count per box.
const MAX_EXPECTED_POINTS: f64 = 1e8;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive an independent stream seed from (master, sample index, stream tag).
pub fn derive_seed(master: u64, index: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(index)) ^ splitmix64(stream.wrapping_add(0x51ED_2701)))
}

/// Uniform coin in [0, 1) for an unordered point pair, independent of the
/// order in which the pair is enumerated.
fn pair_coin(edge_seed: u64, i: usize, j: usize) -> f64 {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let h = splitmix64(
        splitmix64(edge_seed ^ (a as u64).wrapping_mul(0xA24B_AED4_963E_E407))
            ^ (b as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25),
    );
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One realization of the model in a periodic box.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub points: Vec<Vec<f64>>,
    /// Indices of deterministically inserted (Palm) points.
    pub pinned: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub partition: UnionFind,
    pub point_seed: u64,
    pub edge_seed: u64,
}

/// Poisson point cloud of intensity lambda: count ~ Poisson(lambda L^d),
/// positions i.i.d. uniform. Deterministic given the seed.
pub fn sample_poisson(domain: &BoxDomain, lambda: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    assert!(lambda >= 0.0);
    let mean = lambda * domain.volume();
    if mean > MAX_EXPECTED_POINTS {
        return Err(Error::BoxTooLarge(mean));
    }
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean).unwrap().sample(&mut rng) as usize;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        points.push((0..domain.d).map(|_| rng.gen_range(0.0..domain.side)).collect());
    }
    Ok(points)
}

/// Periodic cell list for range queries at radius r_cut.
struct CellList {
    cells_per_axis: usize,
    d: usize,
    cells: Vec<Vec<usize>>,
}

impl CellList {
    fn build(points: &[Vec<f64>], domain: &BoxDomain, r_cut: f64) -> Option<Self> {
        let cpa = (domain.side / r_cut).floor() as usize;
        if cpa < 4 {
            return None;
        }
        let d = domain.d;
        let mut cells = vec![Vec::new(); cpa.pow(d as u32)];
        for (idx, p) in points.iter().enumerate() {
            let mut lin = 0;
            for &x in p {
                let c = ((x / domain.side * cpa as f64) as usize).min(cpa - 1);
                lin = lin * cpa + c;
            }
            cells[lin].push(idx);
        }
        Some(CellList {
            cells_per_axis: cpa,
            d,
            cells,
        })
    }

    fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for ax in (0..self.d).rev() {
            idx[ax] = lin % self.cells_per_axis;
            lin /= self.cells_per_axis;
        }
        idx
    }

    fn neighbor(&self, base: &[usize], offset: &[i64]) -> usize {
        let cpa = self.cells_per_axis as i64;
        let mut lin = 0;
        for (b, o) in base.iter().zip(offset) {
            let c = (*b as i64 + o).rem_euclid(cpa) as usize;
            lin = lin * self.cells_per_axis + c;
        }
        lin
    }
}

/// Half-space neighbor offsets in {-1,0,1}^d whose first nonzero entry is
/// positive; together with the within-cell pairs this enumerates every
/// unordered pair exactly once.
fn half_offsets(d: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(d as u32);
    'outer: for code in 0..total {
        let mut offset = Vec::with_capacity(d);
        let mut c = code;
        for _ in 0..d {
            offset.push((c % 3) as i64 - 1);
            c /= 3;
        }
        for &o in &offset {
            if o > 0 {
                out.push(offset);
                continue 'outer;
            }
            if o < 0 {
                continue 'outer;
            }
        }
    }
    out
}

/// Build the geometric random graph: every unordered pair within r_cut gets
/// an independent Bernoulli(phi(minimal image)) edge, with pair-keyed
/// randomness so the result does not depend on enumeration order.
pub fn build_graph(
    points: Vec<Vec<f64>>,
    pinned: Vec<usize>,
    kernel: &AdjacencyKernel,
    domain: &BoxDomain,
    edge_seed: u64,
) -> Result<GraphSample> {
    let n = points.len();
    let mut partition = UnionFind::new(n);
    let mut edges = Vec::new();
    let try_pair = |i: usize,
                        j: usize,
                        edges: &mut Vec<(usize, usize)>,
                        partition: &mut UnionFind|
     -> Result<()> {
        let r = domain.min_image_dist(&points[i], &points[j]);
        if r > kernel.r_cut {
            return Ok(());
        }
        let p = kernel.eval_radial(r)?;
        if p > 0.0 && pair_coin(edge_seed, i, j) < p {
            edges.push((i.min(j), i.max(j)));
            partition.unite(i, j);
        }
        Ok(())
    };

    match CellList::build(&points, domain, kernel.r_cut) {
        Some(cl) => {
            let offsets = half_offsets(domain.d);
            for cell in 0..cl.cells.len() {
                let members = &cl.cells[cell];
                for a in 0..members.len() {
                    for b in a + 1..members.len() {
                        try_pair(members[a], members[b], &mut edges, &mut partition)?;
                    }
                }
                let base = cl.multi(cell);
                for off in &offsets {
                    let other = cl.neighbor(&base, off);
                    for &i in members {
                        for &j in &cl.cells[other] {
                            try_pair(i, j, &mut edges, &mut partition)?;
                        }
                    }
                }
            }
        }
        None => {
            for i in 0..n {
                for j in i + 1..n {
                    try_pair(i, j, &mut edges, &mut partition)?;
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(GraphSample {
        points,
        pinned,
        edges,
        partition,
        point_seed: 0,
        edge_seed,
    })
}

/// Persisted estimator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub lambda: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub config_digest: String,
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run independent Monte Carlo samples in parallel with per-sample RNG
/// streams and an order-fixed reduction, so the output is identical for any
/// thread count.
pub fn run_samples(
    n_samples: usize,
    master_seed: u64,
    sample: impl Fn(u64, u64) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| sample(derive_seed(master_seed, i, 0), derive_seed(master_seed, i, 1)))
        .collect();
    results.into_iter().collect()
}

/// Monte Carlo estimate of the Palm two-point function tau_lambda(x):
/// the probability that pinned points 0 and x are connected in the graph
/// over {0, x} plus an independent Poisson cloud.
pub fn palm_two_point(
    kernel: &AdjacencyKernel,
    lambda: f64,
    x: &[f64],
    n_samples: usize,
    domain: &BoxDomain,
    seed: u64,
) -> Result<EstimateRecord> {
    assert!(lambda >= 0.0 && n_samples >= 1);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r >= domain.side / 2.0 {
        return Err(Error::DisplacementTooLarge(r, domain.side / 2.0));
    }
    let record = |value: f64, stderr: f64| EstimateRecord {
        quantity: "tau".into(),
        lambda,
        x: x.to_vec(),
        value,
        stderr,
        n_samples,
        config_digest: String::new(),
    };
    if r == 0.0 {
        // Coinciding points are connected by definition.
        return Ok(record(1.0, 0.0));
    }
    let origin = vec![0.0; domain.d];
    let target: Vec<f64> = x
        .iter()
        .map(|&v| (v % domain.side + domain.side) % domain.side)
        .collect();
    let samples = run_samples(n_samples, seed, |point_seed, edge_seed| {
        let mut points = vec![origin.clone(), target.clone()];
        points.extend(sample_poisson(domain, lambda, point_seed)?);
        let mut g = build_graph(points, vec![0, 1], kernel, domain, edge_seed)?;
        Ok(if g.partition.connected(0, 1) { 1.0 } else { 0.0 })
    })?;
    let (value, stderr) = mean_and_stderr(&samples);
    Ok(record(value, stderr))
}

/// chi(lambda): expected cluster size of a pinned origin.
pub fn susceptibility(
    kernel: &AdjacencyKernel,
    lambda: f64,
    domain: &BoxDomain,
    n_samples: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    assert!(lambda >= 0.0 && n_samples >= 1);
    let origin = vec![0.0; domain.d];
    let samples = run_samples(n_samples, seed, |point_seed, edge_seed| {
        let mut points = vec![origin.clone()];
        points.extend(sample_poisson(domain, lambda, point_seed)?);
        let mut g = build_graph(points, vec![0], kernel, domain, edge_seed)?;
        Ok(g.partition.component_size(0) as f64)
    })?;
    let (value, stderr) = mean_and_stderr(&samples);
    Ok(EstimateRecord {
        quantity: "chi".into(),
        lambda,
        x: vec![0.0; domain.d],
        value,
        stderr,
        n_samples,
        config_digest: String::new(),
    })
}

/// Mean largest-cluster fraction at one (box, lambda).
fn largest_fraction(
    kernel: &AdjacencyKernel,
    lambda: f64,
    domain: &BoxDomain,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let samples = run_samples(n_samples, seed, |point_seed, edge_seed| {
        let points = sample_poisson(domain, lambda, point_seed)?;
        if points.is_empty() {
            return Ok(0.0);
        }
        let n = points.len() as f64;
        let mut g = build_graph(points, Vec::new(), kernel, domain, edge_seed)?;
        Ok(g.partition.largest_component() as f64 / n)
    })?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Bracket the critical intensity by bisecting on the point where the
/// largest-cluster-fraction curves of the two largest boxes in the ladder
/// merge to within a fixed margin. Deep subcritical the larger box carries a
/// much smaller fraction; past the transition both curves saturate together,
/// so the margin crossing is a stable finite-size surrogate for the exact
/// (noise-dominated) crossing. An engineering estimate, not the model's true
/// lambda_c.
pub fn estimate_lambda_c(
    kernel: &AdjacencyKernel,
    ladder: &[BoxDomain],
    lambda_range: (f64, f64),
    tolerance: f64,
    samples_per_eval: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    assert!(ladder.len() >= 2, "need a ladder of at least 2 box sizes");
    assert!(tolerance > 0.0);
    let mut sizes: Vec<&BoxDomain> = ladder.iter().collect();
    sizes.sort_by(|a, b| a.side.total_cmp(&b.side));
    let (small, large) = (sizes[sizes.len() - 2], sizes[sizes.len() - 1]);
    let gap = |lambda: f64, eval_seed: u64| -> Result<f64> {
        let lo = largest_fraction(kernel, lambda, small, samples_per_eval, eval_seed)?;
        let hi = largest_fraction(kernel, lambda, large, samples_per_eval, eval_seed ^ 0x5ca1ab1e)?;
        const MERGE_MARGIN: f64 = 0.05;
        Ok(hi - lo + MERGE_MARGIN)
    };
    let (mut a, mut b) = lambda_range;
    assert!(a < b);
    let fa = gap(a, derive_seed(seed, 0, 2))?;
    let fb = gap(b, derive_seed(seed, 1, 2))?;
    if fa.signum() == fb.signum() {
        return Err(Error::NoTransitionInRange(a, b));
    }
    let mut iter = 2u64;
    while b - a > tolerance {
        let mid = 0.5 * (a + b);
        let fm = gap(mid, derive_seed(seed, iter, 2))?;
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
        iter += 1;
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_at_zero_intensity() {
        let dom = BoxDomain::new(2, 10.0);
        assert!(sample_poisson(&dom, 0.0, 42).unwrap().is_empty());
    }

    #[test]
    fn poisson_determinism() {
        let dom = BoxDomain::new(3, 5.0);
        let a = sample_poisson(&dom, 0.7, 99).unwrap();
        let b = sample_poisson(&dom, 0.7, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_poisson(&dom, 0.7, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_mean_count() {
        // lambda = 1, L = 10, d = 2: mean over 10_000 seeds = 100 +- 3 sd.
        let dom = BoxDomain::new(2, 10.0);
        let reps = 10_000;
        let total: usize = (0..reps)
            .map(|i| sample_poisson(&dom, 1.0, derive_seed(7, i, 0)).unwrap().len())
            .sum();
        let mean = total as f64 / reps as f64;
        let sd_of_mean = (100.0f64 / reps as f64).sqrt();
        assert!((mean - 100.0).abs() < 3.0 * sd_of_mean, "mean = {mean}");
    }

    #[test]
    fn box_too_large() {
        let dom = BoxDomain::new(3, 1000.0);
        assert!(matches!(
            sample_poisson(&dom, 1000.0, 0),
            Err(Error::BoxTooLarge(_))
        ));
    }

    #[test]
    fn far_pinned_points_stay_singletons() {
        let k = AdjacencyKernel::disk(2);
        let dom = BoxDomain::new(2, 10.0);
        let pts = vec![vec![1.0, 1.0], vec![5.0, 5.0]];
        let mut g = build_graph(pts, vec![0, 1], &k, &dom, 5).unwrap();
        assert!(g.edges.is_empty());
        assert!(!g.partition.connected(0, 1));
    }

    #[test]
    fn disk_pair_within_radius_always_connected() {
        let k = AdjacencyKernel::disk(2);
        let dom = BoxDomain::new(2, 10.0);
        for seed in 0..50 {
            let pts = vec![vec![1.0, 1.0], vec![1.0 + 0.3, 1.0]];
            let g = build_graph(pts, vec![0, 1], &k, &dom, seed).unwrap();
            assert_eq!(g.edges, vec![(0, 1)]);
        }
    }

    #[test]
    fn gaussian_edge_frequency_at_zero_distance() {
        // Coinciding points connect at rate phi(0) = (2 pi)^{-1}.
        let k = AdjacencyKernel::gaussian(2);
        let dom = BoxDomain::new(2, 20.0);
        let reps = 10_000;
        let hits: usize = (0..reps)
            .filter(|&seed| {
                let pts = vec![vec![3.0, 3.0], vec![3.0, 3.0]];
                let g = build_graph(pts, vec![0, 1], &k, &dom, derive_seed(11, seed, 1)).unwrap();
                !g.edges.is_empty()
            })
            .count();
        let p = 1.0 / (2.0 * std::f64::consts::PI);
        let sd = (p * (1.0 - p) / reps as f64).sqrt();
        let freq = hits as f64 / reps as f64;
        assert!((freq - p).abs() < 3.0 * sd, "freq = {freq}");
    }

    #[test]
    fn graph_determinism_and_order_independence() {
        let k = AdjacencyKernel::gaussian(2);
        let dom = BoxDomain::new(2, 16.0);
        let pts = sample_poisson(&dom, 0.5, 4).unwrap();
        let g1 = build_graph(pts.clone(), Vec::new(), &k, &dom, 9).unwrap();
        let g2 = build_graph(pts.clone(), Vec::new(), &k, &dom, 9).unwrap();
        assert_eq!(g1.edges, g2.edges);
        // All-pairs fallback must agree with the cell-list enumeration.
        let tight = BoxDomain::new(2, 16.0);
        let mut fallback_edges = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let r = tight.min_image_dist(&pts[i], &pts[j]);
                if r <= k.r_cut && pair_coin(9, i, j) < k.eval_radial(r).unwrap() {
                    fallback_edges.push((i, j));
                }
            }
        }
        fallback_edges.sort_unstable();
        assert_eq!(g1.edges, fallback_edges);
    }

    #[test]
    fn palm_trivial_cases() {
        let k = AdjacencyKernel::disk(2);
        let dom = BoxDomain::new(2, 8.0);
        let at_zero = palm_two_point(&k, 0.3, &[0.0, 0.0], 10, &dom, 1).unwrap();
        assert_eq!((at_zero.value, at_zero.stderr), (1.0, 0.0));

        // lambda = 0 with a disk kernel: only the direct edge, deterministic.
        let near = palm_two_point(&k, 0.0, &[0.3, 0.0], 200, &dom, 1).unwrap();
        assert_eq!(near.value, 1.0);
        let far = palm_two_point(&k, 0.0, &[1.5, 0.0], 200, &dom, 1).unwrap();
        assert_eq!(far.value, 0.0);
    }

    #[test]
    fn palm_rejects_large_displacement() {
        let k = AdjacencyKernel::disk(2);
        let dom = BoxDomain::new(2, 8.0);
        assert!(matches!(
            palm_two_point(&k, 0.1, &[4.5, 0.0], 10, &dom, 1),
            Err(Error::DisplacementTooLarge(_, _))
        ));
    }

    #[test]
    fn susceptibility_trivial_and_expansion() {
        let k = AdjacencyKernel::disk(2);
        let dom = BoxDomain::new(2, 8.0);
        let at_zero = susceptibility(&k, 0.0, &dom, 50, 3).unwrap();
        assert_eq!((at_zero.value, at_zero.stderr), (1.0, 0.0));

        // chi ~ 1 + lambda + O(lambda^2) since int phi = 1.
        let lambda = 0.02;
        let rec = susceptibility(&k, lambda, &dom, 40_000, 3).unwrap();
        let expect = 1.0 + lambda;
        assert!(
            (rec.value - expect).abs() < 3.0 * rec.stderr + 2.0 * lambda * lambda,
            "chi = {} +- {}",
            rec.value,
            rec.stderr
        );
    }

    #[test]
    fn susceptibility_monotone_in_lambda() {
        let k = AdjacencyKernel::disk(3);
        let dom = BoxDomain::new(3, 6.0);
        let mut prev = f64::NEG_INFINITY;
        let mut prev_err = 0.0;
        for &lambda in &[0.1, 0.2, 0.4] {
            let rec = susceptibility(&k, lambda, &dom, 4000, 12).unwrap();
            assert!(
                rec.value > prev - 3.0 * (rec.stderr + prev_err),
                "chi({lambda}) = {} not above {prev}",
                rec.value
            );
            prev = rec.value;
            prev_err = rec.stderr;
        }
    }

    #[test]
    fn run_samples_is_thread_count_invariant() {
        let work = |p: u64, e: u64| Ok((splitmix64(p ^ e) % 1000) as f64);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let r1 = pool1.install(|| run_samples(5000, 77, work)).unwrap();
        let r8 = pool8.install(|| run_samples(5000, 77, work)).unwrap();
        assert_eq!(r1, r8);
    }
}
