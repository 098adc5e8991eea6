//! Intervention costs, the cost-weighted expected improvement, acquisition
//! search, and the observe/intervene probability ε.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::gp::{GpError, GpModel, Posterior};
use crate::graph::{CausalGraph, NodeId, NodeSet};
use crate::rng::rng_from;
use crate::scenario::Direction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("no cost defined for node {0}")]
    UnknownNode(NodeId),
    #[error("cost of {0} must be positive")]
    NonPositiveCost(NodeId),
    #[error("unknown cost preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCost {
    pub fixed: f64,
    /// Adds `|x|` to the fixed cost.
    pub variable: bool,
}

/// Per-node intervention costs. An intervention on a set costs the sum over
/// its nodes; the empty set costs 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostModel {
    costs: BTreeMap<NodeId, NodeCost>,
}

impl CostModel {
    /// Unit fixed cost for every treatment of `graph`.
    pub fn unit(graph: &CausalGraph) -> CostModel {
        let mut m = CostModel::default();
        for t in graph.treatments() {
            m.set(t, 1.0, false);
        }
        m
    }

    /// Named presets: `unit`, and for graphs with nodes B, D, E, F the
    /// `fixed` (10, 5, 20, 3) and `variable` (same plus `|x|`) layouts.
    pub fn preset(name: &str, graph: &CausalGraph) -> Result<CostModel, PolicyError> {
        let variable = match name {
            "unit" => return Ok(CostModel::unit(graph)),
            "fixed" => false,
            "variable" => true,
            _ => return Err(PolicyError::UnknownPreset(name.to_string())),
        };
        let mut m = CostModel::unit(graph);
        for (node, fixed) in [("B", 10.0), ("D", 5.0), ("E", 20.0), ("F", 3.0)] {
            if graph.contains(node) {
                m.set(NodeId::new(node).expect("valid name"), fixed, variable);
            }
        }
        Ok(m)
    }

    pub fn set(&mut self, node: NodeId, fixed: f64, variable: bool) {
        self.costs.insert(node, NodeCost { fixed, variable });
    }

    pub fn get(&self, node: &str) -> Option<NodeCost> {
        self.costs.get(node).copied()
    }

    /// Checks that every node of `sets` has a positive fixed cost.
    pub fn validate<'a>(&self, sets: impl IntoIterator<Item = &'a NodeSet>) -> Result<(), PolicyError> {
        for set in sets {
            for node in set {
                match self.costs.get(node) {
                    None => return Err(PolicyError::UnknownNode(node.clone())),
                    Some(c) if !(c.fixed > 0.0) => {
                        return Err(PolicyError::NonPositiveCost(node.clone()))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Cost of `do(set = values)`, values in set order.
    pub fn intervention_cost(&self, set: &NodeSet, values: &[f64]) -> Result<f64, PolicyError> {
        assert_eq!(set.len(), values.len(), "one value per intervened node");
        if set.is_empty() {
            return Ok(1.0);
        }
        let mut total = 0.0;
        for (node, x) in set.iter().zip(values) {
            let c = self
                .costs
                .get(node)
                .ok_or_else(|| PolicyError::UnknownNode(node.clone()))?;
            total += c.fixed + if c.variable { x.abs() } else { 0.0 };
        }
        Ok(total)
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Closed-form expected improvement over `y_star` in the given direction.
pub fn expected_improvement(post: Posterior, y_star: f64, direction: Direction) -> f64 {
    let gain = match direction {
        Direction::Min => y_star - post.mean,
        Direction::Max => post.mean - y_star,
    };
    if y_star.is_infinite() {
        // Nothing observed yet: every finite outcome is an unbounded
        // improvement. A finite stand-in keeps the cost division meaningful.
        return if gain > 0.0 { f64::MAX } else { 0.0 };
    }
    let s = post.std_dev();
    if !(s > 0.0) {
        return gain.max(0.0);
    }
    let u = gain / s;
    let n = std_normal();
    (gain * n.cdf(u) + s * n.pdf(u)).max(0.0)
}

/// Expected improvement at `x` divided by the cost of intervening there.
pub fn causal_ei(
    gp: &GpModel,
    x: &[f64],
    y_star: f64,
    cost: &CostModel,
    set: &NodeSet,
    direction: Direction,
) -> Result<f64, PolicyError> {
    let post = gp.posterior(x)?;
    let c = cost.intervention_cost(set, x)?;
    Ok(expected_improvement(post, y_star, direction) / c)
}

/// `n` points of a Latin hypercube over `bounds`, one stratum per point and
/// dimension, jittered within strata.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::with_capacity(bounds.len()); n];
    for &(lo, hi) in bounds {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in pts.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            p.push(lo + (hi - lo) * (s as f64 + u) / n as f64);
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Latin-hypercube seeding size.
    pub seeds: usize,
    /// Best seeds refined locally.
    pub starts: usize,
    /// Golden-section evaluations per start.
    pub iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seeds: 64,
            starts: 10,
            iterations: 50,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of `f` on `[a, b]` with `iters` evaluations.
fn golden_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 2..iters.max(2) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over the box. Returns the best point and value; the point
/// always lies inside the box. NaN values count as −∞.
pub fn maximize(
    mut f: impl FnMut(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    seed: u64,
    opts: &SearchOptions,
) -> (Vec<f64>, f64) {
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    if bounds.is_empty() {
        let v = eval(&[]);
        return (Vec::new(), v);
    }
    let mut rng = rng_from(seed);
    let mut cands: Vec<(Vec<f64>, f64)> = latin_hypercube(opts.seeds.max(1), bounds, &mut rng)
        .into_iter()
        .map(|x| {
            let v = eval(&x);
            (x, v)
        })
        .collect();
    // Stable sort keeps generation order among ties.
    cands.sort_by(|a, b| b.1.total_cmp(&a.1));
    cands.truncate(opts.starts.max(1));

    let d = bounds.len();
    let sweeps = 2;
    let per_line = (opts.iterations / (sweeps * d)).max(6);
    let mut best = cands[0].clone();
    for (mut x, mut fx) in cands {
        for sweep in 0..sweeps {
            let frac = if sweep == 0 { 0.25 } else { 1.0 / 16.0 };
            for k in 0..d {
                let (lo, hi) = bounds[k];
                let r = (hi - lo) * frac;
                let a = (x[k] - r).max(lo);
                let b = (x[k] + r).min(hi);
                if !(b > a) {
                    continue;
                }
                let mut probe = x.clone();
                let (t, ft) = golden_max(
                    &mut |t| {
                        probe[k] = t;
                        eval(&probe)
                    },
                    a,
                    b,
                    per_line,
                );
                if ft > fx {
                    x[k] = t;
                    fx = ft;
                }
            }
        }
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Best `(x, causal EI)` for one exploration set.
#[allow(clippy::too_many_arguments)]
pub fn optimize_acquisition(
    gp: &GpModel,
    set: &NodeSet,
    bounds: &[(f64, f64)],
    cost: &CostModel,
    y_star: f64,
    direction: Direction,
    seed: u64,
    opts: &SearchOptions,
) -> Result<(Vec<f64>, f64), PolicyError> {
    // Surface cost problems before searching; posterior failures inside the
    // search score −∞ and are re-raised if nothing finite was found.
    cost.validate([set])?;
    let mut failure = None;
    let (x, v) = maximize(
        |x| match causal_ei(gp, x, y_star, cost, set, direction) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        bounds,
        seed,
        opts,
    );
    match failure {
        Some(e) if !v.is_finite() => Err(e),
        _ => Ok((x, v)),
    }
}

/// Volume of a convex hull, with the standard error when it was estimated by
/// Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullVolume {
    pub volume: f64,
    pub std_error: Option<f64>,
}

/// Convex-hull volume: exact for d ≤ 3, Monte Carlo (10⁵ draws over the
/// bounding box, seeded by `seed`) above that.
pub fn hull_volume(points: &[Vec<f64>], seed: u64) -> HullVolume {
    let d = points.first().map_or(0, Vec::len);
    let exact = |v| HullVolume {
        volume: v,
        std_error: None,
    };
    if d == 0 || points.len() < d + 1 {
        return exact(0.0);
    }
    match d {
        1 => {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p[0]), b.max(p[0]))
            });
            exact(hi - lo)
        }
        2 => exact(hull_area(points)),
        3 => exact(hull_volume_3d(points)),
        _ => hull_volume_mc(points, seed, 100_000),
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain, then the shoelace formula.
fn hull_area(points: &[Vec<f64>]) -> f64 {
    let mut pts: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let mut hull: Vec<&[f64]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &&[f64]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    (twice / 2.0).abs()
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Incremental 3-D hull; faces are triangles oriented with outward normals,
/// and the volume is the sum of tetrahedra from an interior point.
fn hull_volume_3d(points: &[Vec<f64>]) -> f64 {
    let p: Vec<V3> = points.iter().map(|q| [q[0], q[1], q[2]]).collect();
    let extent = (0..3)
        .map(|k| {
            let (lo, hi) = p
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q[k]), b.max(q[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    if !(extent > 0.0) {
        return 0.0;
    }
    let eps = 1e-10 * extent;

    // Initial tetrahedron from extreme points.
    let i0 = 0;
    let i1 = (0..p.len()).max_by(|&a, &b| norm(sub(p[a], p[i0])).total_cmp(&norm(sub(p[b], p[i0])))).unwrap();
    let line = sub(p[i1], p[i0]);
    if norm(line) <= eps {
        return 0.0;
    }
    let i2 = (0..p.len())
        .max_by(|&a, &b| {
            norm(cross(line, sub(p[a], p[i0]))).total_cmp(&norm(cross(line, sub(p[b], p[i0]))))
        })
        .unwrap();
    let normal = cross(line, sub(p[i2], p[i0]));
    if norm(normal) <= eps * norm(line) {
        return 0.0;
    }
    let i3 = (0..p.len())
        .max_by(|&a, &b| dot(normal, sub(p[a], p[i0])).abs().total_cmp(&dot(normal, sub(p[b], p[i0])).abs()))
        .unwrap();
    if dot(normal, sub(p[i3], p[i0])).abs() <= eps * norm(normal) {
        return 0.0;
    }
    let inner = {
        let s = [p[i0], p[i1], p[i2], p[i3]];
        [
            s.iter().map(|v| v[0]).sum::<f64>() / 4.0,
            s.iter().map(|v| v[1]).sum::<f64>() / 4.0,
            s.iter().map(|v| v[2]).sum::<f64>() / 4.0,
        ]
    };
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let n = cross(sub(p[f[1]], p[f[0]]), sub(p[f[2]], p[f[0]]));
        if dot(n, sub(inner, p[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> = vec![
        orient([i0, i1, i2]),
        orient([i0, i1, i3]),
        orient([i0, i2, i3]),
        orient([i1, i2, i3]),
    ];
    let above = |f: &[usize; 3], q: V3| -> bool {
        let n = cross(sub(p[f[1]], p[f[0]]), sub(p[f[2]], p[f[0]]));
        let len = norm(n);
        len > 0.0 && dot(n, sub(q, p[f[0]])) / len > eps
    };
    for (i, &q) in p.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&i) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| above(f, q)).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let edges: HashSet<(usize, usize)> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| v)
            .flat_map(|(f, _)| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .collect();
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        let mut horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(a, b)| !edges.contains(&(b, a)))
            .copied()
            .collect();
        horizon.sort_unstable();
        next.extend(horizon.into_iter().map(|(a, b)| [a, b, i]));
        faces = next;
    }
    faces
        .iter()
        .map(|f| {
            let (a, b, c) = (sub(p[f[0]], inner), sub(p[f[1]], inner), sub(p[f[2]], inner));
            dot(a, cross(b, c)).abs() / 6.0
        })
        .sum()
}

/// True when `q` is a convex combination of `points` (phase-one simplex on
/// `Σλ = 1, Σλ·p = q, λ ≥ 0` with Bland's rule).
fn in_hull(points: &[Vec<f64>], q: &[f64]) -> bool {
    let n = points.len();
    let m = q.len() + 1;
    // Rows: constraints; columns: n lambdas, m artificials, rhs.
    let cols = n + m + 1;
    let mut t = vec![0.0; (m + 1) * cols];
    for r in 0..m {
        let rhs = if r == 0 { 1.0 } else { q[r - 1] };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (j, p) in points.iter().enumerate() {
            let a = if r == 0 { 1.0 } else { p[r - 1] };
            t[r * cols + j] = sign * a;
        }
        t[r * cols + n + r] = 1.0;
        t[r * cols + cols - 1] = sign * rhs;
    }
    // Objective row: minimize the sum of artificials, expressed in
    // non-basic terms.
    let obj = m * cols;
    for r in 0..m {
        for j in 0..cols {
            if !(n..n + m).contains(&j) {
                t[obj + j] -= t[r * cols + j];
            }
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let tol = 1e-10;
    for _ in 0..50 * (n + m) {
        let Some(enter) = (0..n + m).find(|&j| t[obj + j] < -tol) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t[r * cols + enter];
            if a > tol {
                let ratio = t[r * cols + cols - 1] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - tol || (ratio <= lratio + tol && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((lr, _)) = leave else {
            break;
        };
        let piv = t[lr * cols + enter];
        for j in 0..cols {
            t[lr * cols + j] /= piv;
        }
        for r in 0..=m {
            if r != lr {
                let f = t[r * cols + enter];
                if f != 0.0 {
                    for j in 0..cols {
                        t[r * cols + j] -= f * t[lr * cols + j];
                    }
                }
            }
        }
        basis[lr] = enter;
    }
    -t[obj + cols - 1] <= 1e-9
}

fn hull_volume_mc(points: &[Vec<f64>], seed: u64, draws: usize) -> HullVolume {
    let d = points[0].len();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|k| {
            points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[k]), b.max(p[k])))
        })
        .unzip();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    if !(box_vol > 0.0) {
        return HullVolume {
            volume: 0.0,
            std_error: Some(0.0),
        };
    }
    let mut rng = rng_from(seed);
    let mut q = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..draws {
        for k in 0..d {
            q[k] = rng.random_range(lo[k]..hi[k]);
        }
        if in_hull(points, &q) {
            hits += 1;
        }
    }
    let frac = hits as f64 / draws as f64;
    HullVolume {
        volume: frac * box_vol,
        std_error: Some(box_vol * (frac * (1.0 - frac) / draws as f64).sqrt()),
    }
}

/// Probability of observing rather than intervening: hull volume of the
/// observational treatment values over the volume of the domain box, times
/// `N / N_max`, clamped to [0, 1].
pub fn epsilon(points: &[Vec<f64>], bounds: &[(f64, f64)], n: usize, n_max: usize, seed: u64) -> f64 {
    epsilon_estimate(points, bounds, n, n_max, seed).0
}

/// [`epsilon`] with the standard error carried over from a Monte Carlo
/// hull volume (`None` when the volume is exact).
pub fn epsilon_estimate(
    points: &[Vec<f64>],
    bounds: &[(f64, f64)],
    n: usize,
    n_max: usize,
    seed: u64,
) -> (f64, Option<f64>) {
    let box_vol: f64 = bounds.iter().map(|(lo, hi)| hi - lo).product();
    if points.is_empty() || !(box_vol > 0.0) || n_max == 0 {
        return (0.0, None);
    }
    let hull = hull_volume(points, seed);
    let scale = n as f64 / n_max as f64 / box_vol;
    let ratio = (hull.volume / box_vol).clamp(0.0, 1.0);
    let eps = (ratio * n as f64 / n_max as f64).clamp(0.0, 1.0);
    (eps, hull.std_error.map(|se| se * scale))
}
