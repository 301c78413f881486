//! HDBSCAN over dense Euclidean point sets.
//!
//! Core distance is the distance to the `min_samples`-th nearest point
//! counting the point itself, so `min_samples = 1` reduces to single linkage.

use super::TopicError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Caps `1/d` for coincident points so stabilities stay finite.
const LAMBDA_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ClusterSelection {
    #[default]
    ExcessOfMass,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub selection: ClusterSelection,
    pub allow_single_cluster: bool,
}

impl HdbscanParams {
    pub fn new(min_cluster_size: usize, min_samples: usize) -> Self {
        HdbscanParams { min_cluster_size, min_samples, selection: ClusterSelection::ExcessOfMass, allow_single_cluster: false }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn distance_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let row = |i: usize| points.iter().map(|q| euclidean(&points[i], q)).collect::<Vec<f64>>();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..points.len()).into_par_iter().map(row).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..points.len()).map(row).collect()
    }
}

pub fn core_distances(dist: &[Vec<f64>], min_samples: usize) -> Vec<f64> {
    dist.iter()
        .map(|row| {
            let mut r = row.clone();
            r.sort_by(f64::total_cmp);
            r[(min_samples.max(1) - 1).min(r.len() - 1)]
        })
        .collect()
}

pub fn mutual_reachability(d: f64, core_a: f64, core_b: f64) -> f64 {
    d.max(core_a).max(core_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Prim's algorithm on the dense mutual-reachability graph. Ties go to the
/// lowest vertex index.
pub fn mutual_reachability_mst(dist: &[Vec<f64>], core: &[f64]) -> Vec<MstEdge> {
    let n = dist.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = mutual_reachability(dist[cur][j], core[cur], core[j]);
                if w < best[j] {
                    best[j] = w;
                    from[j] = cur;
                }
            }
        }
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge { a: from[next], b: next, weight: best[next] });
        cur = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage merge `(left, right, distance, size)`; node `n + i` is row `i`.
type Linkage = Vec<(usize, usize, f64, usize)>;

fn single_linkage(n: usize, mut mst: Vec<MstEdge>) -> Linkage {
    mst.sort_by(|x, y| x.weight.total_cmp(&y.weight).then((x.a.min(x.b), x.a.max(x.b)).cmp(&(y.a.min(y.b), y.a.max(y.b)))));
    let mut uf = UnionFind::new(2 * n - 1);
    let mut out = Vec::with_capacity(n - 1);
    for (i, e) in mst.iter().enumerate() {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        let node = n + i;
        let size = uf.size[ra] + uf.size[rb];
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        uf.size[node] = size;
        out.push((ra, rb, e.weight, size));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn lambda_of(d: f64) -> f64 {
    if d > 0.0 {
        (1.0 / d).min(LAMBDA_CAP)
    } else {
        LAMBDA_CAP
    }
}

fn leaves(link: &Linkage, n: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let (l, r, _, _) = link[x - n];
            stack.push(r);
            stack.push(l);
        }
    }
    out
}

/// Condensed cluster tree. Cluster labels start at `n` (the root).
fn condense(link: &Linkage, n: usize, min_cluster_size: usize) -> Vec<CondensedEdge> {
    let root = 2 * n - 2;
    let size_of = |x: usize| if x < n { 1 } else { link[x - n].3 };
    let mut label = BTreeMap::new();
    label.insert(root, n);
    let mut next_label = n + 1;
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let (l, r, d, _) = link[node - n];
        let lam = lambda_of(d);
        let parent = label[&node];
        let (ls, rs) = (size_of(l), size_of(r));
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (child, s) in [(l, ls), (r, rs)] {
                    label.insert(child, next_label);
                    out.push(CondensedEdge { parent, child: next_label, lambda: lam, size: s });
                    next_label += 1;
                    queue.push_back(child);
                }
            }
            (false, false) => {
                for child in [l, r] {
                    for p in leaves(link, n, child) {
                        out.push(CondensedEdge { parent, child: p, lambda: lam, size: 1 });
                    }
                }
            }
            (big_left, _) => {
                let (big, small) = if big_left { (l, r) } else { (r, l) };
                for p in leaves(link, n, small) {
                    out.push(CondensedEdge { parent, child: p, lambda: lam, size: 1 });
                }
                label.insert(big, parent);
                queue.push_back(big);
            }
        }
    }
    out
}

fn select_clusters(tree: &[CondensedEdge], n: usize, params: &HdbscanParams) -> Vec<usize> {
    let root = n;
    let mut birth: BTreeMap<usize, f64> = BTreeMap::from([(root, 0.0)]);
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in tree.iter().filter(|e| e.child >= n) {
        birth.insert(e.child, e.lambda);
        children.entry(e.parent).or_default().push(e.child);
    }
    let mut stability: BTreeMap<usize, f64> = birth.keys().map(|&c| (c, 0.0)).collect();
    for e in tree {
        *stability.get_mut(&e.parent).unwrap() += (e.lambda - birth[&e.parent]) * e.size as f64;
    }

    let candidates: Vec<usize> = birth
        .keys()
        .copied()
        .filter(|&c| c != root || params.allow_single_cluster)
        .collect();
    let mut selected: BTreeMap<usize, bool> = candidates.iter().map(|&c| (c, false)).collect();

    let descendants = |c: usize| {
        let mut out = Vec::new();
        let mut stack = children.get(&c).cloned().unwrap_or_default();
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(children.get(&x).cloned().unwrap_or_default());
        }
        out
    };

    match params.selection {
        ClusterSelection::Leaf => {
            for &c in &candidates {
                if !children.contains_key(&c) {
                    selected.insert(c, true);
                }
            }
        }
        ClusterSelection::ExcessOfMass => {
            // children carry larger labels than their parents
            for &c in candidates.iter().rev() {
                let subtree: f64 = children.get(&c).map_or(0.0, |ch| ch.iter().map(|k| stability[k]).sum());
                if children.contains_key(&c) && subtree > stability[&c] {
                    stability.insert(c, subtree);
                } else {
                    selected.insert(c, true);
                    for d in descendants(c) {
                        selected.insert(d, false);
                    }
                }
            }
        }
    }
    selected.into_iter().filter(|(_, s)| *s).map(|(c, _)| c).collect()
}

/// Labels each point with a cluster id in `0..k`, or −1 for noise. Cluster
/// ids are assigned in order of each cluster's smallest point index.
pub fn cluster_density(points: &[Vec<f64>], params: &HdbscanParams) -> Result<Vec<i32>, TopicError> {
    let n = points.len();
    if params.min_cluster_size < 2 {
        return Err(TopicError::InvalidParam("min_cluster_size must be at least 2".into()));
    }
    if params.min_samples < 1 {
        return Err(TopicError::InvalidParam("min_samples must be at least 1".into()));
    }
    if n < params.min_cluster_size {
        return Err(TopicError::TooFewPoints { got: n, need: params.min_cluster_size });
    }
    let dist = distance_matrix(points);
    if dist.iter().flatten().all(|d| *d == 0.0) {
        return Ok(vec![0; n]);
    }
    let core = core_distances(&dist, params.min_samples);
    let link = single_linkage(n, mutual_reachability_mst(&dist, &core));
    let tree = condense(&link, n, params.min_cluster_size);
    let selected = select_clusters(&tree, n, params);

    let mut parent_of: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &tree {
        parent_of.insert(e.child, e.parent);
    }
    let mut raw = vec![usize::MAX; n];
    for (p, slot) in raw.iter_mut().enumerate() {
        let mut cur = parent_of.get(&p).copied();
        while let Some(c) = cur {
            if selected.contains(&c) {
                *slot = c;
                break;
            }
            cur = parent_of.get(&c).copied();
        }
    }
    let mut rename: BTreeMap<usize, i32> = BTreeMap::new();
    let mut labels = vec![-1; n];
    for (p, &c) in raw.iter().enumerate() {
        if c == usize::MAX {
            continue;
        }
        let next = rename.len() as i32;
        labels[p] = *rename.entry(c).or_insert(next);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(seed: u64, centers: &[(f64, f64)], per: usize, spread: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for &(cx, cy) in centers {
            for _ in 0..per {
                pts.push(vec![cx + rng.random_range(-spread..spread), cy + rng.random_range(-spread..spread)]);
            }
        }
        pts
    }

    #[test]
    fn two_blobs_two_clusters() {
        let pts = blobs(1, &[(0.0, 0.0), (50.0, 50.0)], 10, 1.0);
        let labels = cluster_density(&pts, &HdbscanParams::new(5, 5)).unwrap();
        assert!(labels.iter().all(|&l| l >= 0), "{labels:?}");
        assert!(labels[..10].iter().all(|&l| l == labels[0]));
        assert!(labels[10..].iter().all(|&l| l == labels[10]));
        assert_ne!(labels[0], labels[10]);
    }

    #[test]
    fn far_outlier_is_noise() {
        let mut pts = blobs(2, &[(0.0, 0.0), (50.0, 50.0)], 10, 1.0);
        pts.push(vec![500.0, -400.0]);
        let labels = cluster_density(&pts, &HdbscanParams::new(5, 5)).unwrap();
        assert_eq!(labels[20], -1);
        let distinct: std::collections::BTreeSet<i32> = labels[..20].iter().copied().collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn identical_points_single_cluster() {
        let pts = vec![vec![1.0, 1.0]; 4];
        assert_eq!(cluster_density(&pts, &HdbscanParams::new(2, 1)).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn invalid_params() {
        let pts = vec![vec![0.0]; 3];
        assert!(cluster_density(&pts, &HdbscanParams::new(1, 1)).is_err());
        assert!(cluster_density(&pts, &HdbscanParams::new(4, 1)).is_err());
    }

    #[test]
    fn leaf_selection_splits_finer() {
        let pts = blobs(3, &[(0.0, 0.0), (6.0, 0.0), (100.0, 0.0)], 12, 1.0);
        let mut p = HdbscanParams::new(5, 3);
        let eom = cluster_density(&pts, &p).unwrap();
        p.selection = ClusterSelection::Leaf;
        let leaf = cluster_density(&pts, &p).unwrap();
        let k = |l: &[i32]| l.iter().filter(|&&x| x >= 0).collect::<std::collections::BTreeSet<_>>().len();
        assert!(k(&leaf) >= k(&eom));
    }

    #[test]
    fn mutual_reachability_dominates_distance() {
        assert_eq!(mutual_reachability(1.0, 2.0, 0.5), 2.0);
        assert_eq!(mutual_reachability(3.0, 2.0, 0.5), 3.0);
    }
}
