//! Turning spanning structures into capacity-feasible tours.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::instance::ClrInstance;
use crate::matching::MatchingError;
use crate::scalar::Scalar;
use crate::spanning::{cycle_cost, euler_shortcut, tree_matching_order, ConstrainedForest, PathPacking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CloseMode {
    /// Double every edge and shortcut a depth-first walk.
    Double,
    /// Add a minimum matching on odd-degree vertices and shortcut the Euler walk.
    #[default]
    Match,
}

impl std::fmt::Display for CloseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CloseMode::Double => "double",
            CloseMode::Match => "match",
        })
    }
}

impl std::str::FromStr for CloseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "double" => Ok(CloseMode::Double),
            "match" => Ok(CloseMode::Match),
            other => Err(format!("unknown tour mode `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("tour subgraph is disconnected from its anchor {anchor}")]
    Disconnected { anchor: usize },
    #[error("customer {vertex} has demand above capacity in unsplittable mode")]
    InfeasibleUnsplittable { vertex: usize },
    #[error("path splitting requires splittable demand")]
    UnsplittableUnsupported,
    #[error("{what} bound violated: {lhs} > {rhs}")]
    BoundViolated { what: &'static str, lhs: f64, rhs: f64 },
    #[error("structure depot {0} is not opened")]
    DepotNotOpened(usize),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// Closed walk from one depot. Vertices use global instance indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour<T> {
    pub depot: usize,
    pub visits: Vec<usize>,
    /// Amount delivered to each entry of `visits`.
    pub loads: Vec<T>,
    pub cost: T,
    /// Structure edges consumed by this tour.
    pub support: Vec<(usize, usize)>,
}

impl<T: Scalar> Tour<T> {
    pub fn load(&self) -> T {
        self.loads.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    pub fn route_cost(inst: &ClrInstance<T>, depot: usize, visits: &[usize]) -> T {
        let mut order = Vec::with_capacity(visits.len() + 1);
        order.push(depot);
        order.extend_from_slice(visits);
        cycle_cost(&order, |a, b| inst.cost(a, b))
    }

    /// Direct out-and-back tour.
    pub fn direct(inst: &ClrInstance<T>, depot: usize, v: usize, load: T) -> Self {
        Tour { depot, visits: vec![v], loads: vec![load], cost: inst.cost(depot, v) * T::two(), support: Vec::new() }
    }
}

/// `lhs <= rhs` with a tolerance relative to the magnitude of `rhs`.
pub(crate) fn within<T: Scalar>(lhs: T, rhs: T) -> bool {
    let scale = if rhs.abs() > T::one() { rhs.abs() } else { T::one() };
    lhs <= rhs + T::tolerance() * scale
}

fn check<T: Scalar>(what: &'static str, lhs: T, rhs: T) -> Result<(), SplitError> {
    if within(lhs, rhs) {
        Ok(())
    } else {
        Err(SplitError::BoundViolated { what, lhs: lhs.as_f64(), rhs: rhs.as_f64() })
    }
}

/// Closes the connected edge set `edges` into a tour from `anchor` that
/// visits the customers in `keep` once each; everything else is shortcut.
/// Returns the visit order without the anchor. The cost never exceeds twice
/// the edge weight; match mode returns the cheaper of both closings.
pub fn close_tour<T: Scalar>(
    inst: &ClrInstance<T>,
    edges: &[(usize, usize)],
    anchor: usize,
    keep: &BTreeSet<usize>,
    mode: CloseMode,
) -> Result<(Vec<usize>, T), SplitError> {
    let mut verts: Vec<usize> = vec![anchor];
    for &(a, b) in edges {
        verts.push(a);
        verts.push(b);
    }
    verts.sort_unstable();
    verts.dedup();
    let local: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = verts.len();
    let le: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (local[&a], local[&b])).collect();
    let root = local[&anchor];

    // Connectivity and tree check via union-find.
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut is_tree = le.len() + 1 == n;
    for &(a, b) in &le {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra == rb {
            is_tree = false;
        }
        uf[ra] = rb;
    }
    let rr = find(&mut uf, root);
    if (0..n).any(|v| find(&mut uf, v) != rr) {
        return Err(SplitError::Disconnected { anchor });
    }
    if let Some(&v) = keep.iter().find(|v| !local.contains_key(v)) {
        return Err(SplitError::Disconnected { anchor: v });
    }

    let weight = edges.iter().fold(T::zero(), |acc, &(a, b)| acc + inst.cost(a, b));
    let filter = |order: Vec<usize>| -> Vec<usize> {
        order.into_iter().map(|i| verts[i]).filter(|v| keep.contains(v)).collect()
    };
    let doubled: Vec<(usize, usize)> = le.iter().flat_map(|&e| [e, e]).collect();
    let double_visits = filter(euler_shortcut(n, &doubled, root));
    let double_cost = Tour::route_cost(inst, anchor, &double_visits);

    let (visits, cost) = match mode {
        CloseMode::Double => (double_visits, double_cost),
        CloseMode::Match if is_tree && n > 2 => {
            let order = tree_matching_order(n, &le, |a, b| inst.cost(verts[a], verts[b]), root)?;
            let visits = filter(order);
            let cost = Tour::route_cost(inst, anchor, &visits);
            if cost < double_cost {
                (visits, cost)
            } else {
                (double_visits, double_cost)
            }
        }
        CloseMode::Match => (double_visits, double_cost),
    };
    check("tour closing", cost, weight + weight)?;
    Ok((visits, cost))
}

fn nearest_opened<T: Scalar>(inst: &ClrInstance<T>, opened: &[usize], v: usize) -> (usize, T) {
    inst.nearest_depot(v, opened).expect("at least one opened depot")
}

/// Cheapest edge from an opened depot to any of `targets`; ties go to the
/// lowest depot, then the lowest target.
fn cheapest_link<T: Scalar>(inst: &ClrInstance<T>, opened: &[usize], targets: &[usize]) -> (usize, usize) {
    let mut best: Option<(T, usize, usize)> = None;
    for &u in opened {
        for &x in targets {
            let c = inst.cost(u, x);
            let better = match best {
                None => true,
                Some((bc, bu, bx)) => c < bc || (c == bc && (u, x) < (bu, bx)),
            };
            if better {
                best = Some((c, u, x));
            }
        }
    }
    let (_, u, x) = best.expect("opened depots and targets are nonempty");
    (u, x)
}

/// Right-hand side shared by both splitting bounds.
fn depot_charge<T: Scalar>(inst: &ClrInstance<T>, opened: &[usize], factor: T) -> T {
    let k = inst.capacity();
    inst.customer_vertices()
        .fold(T::zero(), |acc, v| acc + factor / k * inst.demand(v) * nearest_opened(inst, opened, v).1)
}

fn tours_weight<T: Scalar>(tours: &[Tour<T>]) -> T {
    tours.iter().fold(T::zero(), |acc, t| acc + t.cost)
}

fn check_opened(opened: &[usize], depots: &[usize]) -> Result<(), SplitError> {
    match depots.iter().find(|u| !opened.contains(u)) {
        Some(&u) => Err(SplitError::DepotNotOpened(u)),
        None => Ok(()),
    }
}

/// Serves customers above capacity with direct tours of load `k`; `keep_last`
/// leaves the final partial load as residual demand.
fn serve_big<T: Scalar>(
    inst: &ClrInstance<T>,
    opened: &[usize],
    residual: &mut [T],
    keep_last: bool,
    tours: &mut Vec<Tour<T>>,
) {
    let k = inst.capacity();
    for v in inst.customer_vertices() {
        let d = residual[v];
        if d <= k {
            continue;
        }
        let count = (d / k).ceil().to_usize().expect("tour count fits in usize");
        let full = if keep_last { count - 1 } else { count };
        let (u, _) = nearest_opened(inst, opened, v);
        for i in 0..full {
            let load = if !keep_last && i + 1 == count { d - k * T::of_usize(count - 1) } else { k };
            tours.push(Tour::direct(inst, u, v, load));
        }
        residual[v] = if keep_last { d - k * T::of_usize(full) } else { T::zero() };
    }
}

struct TreeState<'a, T> {
    inst: &'a ClrInstance<T>,
    children: Vec<BTreeSet<usize>>,
    residual: Vec<T>,
    depth: Vec<usize>,
}

impl<T: Scalar> TreeState<'_, T> {
    /// Vertices of the subtree at `v` in preorder.
    fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x].iter().rev());
        }
        out
    }

    fn subtree_edges(&self, v: usize) -> Vec<(usize, usize)> {
        self.subtree(v).into_iter().flat_map(|x| self.children[x].iter().map(move |&c| (x, c))).collect()
    }

    fn demand_below(&self, root: usize) -> Vec<T> {
        let order = self.subtree(root);
        let mut dem = vec![T::zero(); self.residual.len()];
        for &x in order.iter().rev() {
            let mut s = if self.inst.is_depot(x) { T::zero() } else { self.residual[x] };
            for &c in &self.children[x] {
                s += dem[c];
            }
            dem[x] = s;
        }
        dem
    }
}

/// Tree splitting. Big customers get direct tours first; then every tree
/// whose demand exceeds `k` repeatedly sheds sub-trees of demand in
/// `(k/2, k]` taken below a minimal overloaded vertex, and finally its
/// remainder becomes one tour from the root.
pub fn tree_split<T: Scalar>(
    inst: &ClrInstance<T>,
    opened: &[usize],
    forest: &ConstrainedForest,
    splittable: bool,
    mode: CloseMode,
) -> Result<Vec<Tour<T>>, SplitError> {
    let k = inst.capacity();
    if !splittable {
        if let Some(v) = inst.customer_vertices().find(|&v| inst.demand(v) > k) {
            return Err(SplitError::InfeasibleUnsplittable { vertex: v });
        }
    }
    check_opened(opened, &forest.roots)?;
    let nv = inst.num_vertices();
    let mut residual: Vec<T> = (0..nv).map(|v| if inst.is_depot(v) { T::zero() } else { inst.demand(v) }).collect();
    let mut tours = Vec::new();
    serve_big(inst, opened, &mut residual, false, &mut tours);

    let mut depth = vec![0usize; nv];
    for &(_, c) in &forest.edges {
        let mut x = c;
        while let Some(q) = forest.parent[x] {
            depth[c] += 1;
            x = q;
        }
    }
    let children = forest.children().into_iter().map(|c| c.into_iter().collect()).collect();
    let mut st = TreeState { inst, children, residual, depth };
    let half = k.half();

    for &u in &forest.roots {
        loop {
            let dem = st.demand_below(u);
            if dem[u] <= k {
                break;
            }
            // Deepest overloaded vertex whose children are all within capacity.
            let mut pick: Option<usize> = None;
            for x in st.subtree(u) {
                if dem[x] > k && st.children[x].iter().all(|&c| dem[c] <= k) {
                    let better = match pick {
                        None => true,
                        Some(p) => {
                            st.depth[x] > st.depth[p]
                                || (st.depth[x] == st.depth[p] && inst.vertex_id(x) < inst.vertex_id(p))
                        }
                    };
                    if better {
                        pick = Some(x);
                    }
                }
            }
            let v = pick.expect("an overloaded tree has a minimal overloaded vertex");

            // Items: the vertex itself (None) and each child subtree.
            let mut items: Vec<(T, Option<usize>)> = Vec::new();
            if !inst.is_depot(v) && st.residual[v] > T::zero() {
                items.push((st.residual[v], None));
            }
            items.extend(st.children[v].iter().map(|&c| (dem[c], Some(c))));
            items.sort_by(|a, b| crate::scalar::cmp(&b.0, &a.0));
            let mut bins: Vec<(T, Vec<Option<usize>>)> = Vec::new();
            for (d, item) in items {
                match bins.last_mut() {
                    Some((load, list)) if *load + d <= k => {
                        *load += d;
                        list.push(item);
                    }
                    _ => bins.push((d, vec![item])),
                }
            }
            if bins.last().is_some_and(|(load, _)| *load <= half) {
                bins.pop();
            }
            debug_assert!(!bins.is_empty());

            for (load, bin) in bins {
                debug_assert!(load > half && load <= k);
                let mut verts = vec![v];
                let mut edges = Vec::new();
                let mut keep = BTreeSet::new();
                for item in &bin {
                    match *item {
                        None => {
                            keep.insert(v);
                        }
                        Some(c) => {
                            edges.push((v, c));
                            edges.extend(st.subtree_edges(c));
                            for x in st.subtree(c) {
                                verts.push(x);
                                if st.residual[x] > T::zero() {
                                    keep.insert(x);
                                }
                            }
                        }
                    }
                }
                let (anchor, x) = cheapest_link(inst, opened, &verts);
                let mut tour_edges = edges.clone();
                if anchor != x {
                    tour_edges.push((anchor, x));
                }
                let (visits, cost) = close_tour(inst, &tour_edges, anchor, &keep, mode)?;
                let loads = visits.iter().map(|&x| st.residual[x]).collect();
                tours.push(Tour { depot: anchor, visits, loads, cost, support: edges });
                for item in bin {
                    match item {
                        None => st.residual[v] = T::zero(),
                        Some(c) => {
                            for x in st.subtree(c) {
                                st.residual[x] = T::zero();
                            }
                            st.children[v].remove(&c);
                        }
                    }
                }
            }
        }
        let edges = st.subtree_edges(u);
        let keep: BTreeSet<usize> = st.subtree(u).into_iter().filter(|&x| st.residual[x] > T::zero()).collect();
        if keep.is_empty() {
            continue;
        }
        let (visits, cost) = close_tour(inst, &edges, u, &keep, mode)?;
        let loads = visits.iter().map(|&x| st.residual[x]).collect();
        for &x in &keep {
            st.residual[x] = T::zero();
        }
        tours.push(Tour { depot: u, visits, loads, cost, support: edges });
    }

    let rhs = forest.weight(inst) * T::two() + depot_charge(inst, opened, T::of_usize(4));
    check("tree splitting", tours_weight(&tours), rhs)?;
    Ok(tours)
}

/// Path splitting for splittable demand. Each path sheds tours of load
/// exactly `k` from its far end; the rest is served from the path depot.
pub fn path_split<T: Scalar>(
    inst: &ClrInstance<T>,
    opened: &[usize],
    packing: &PathPacking,
    splittable: bool,
    mode: CloseMode,
) -> Result<Vec<Tour<T>>, SplitError> {
    if !splittable {
        return Err(SplitError::UnsplittableUnsupported);
    }
    check_opened(opened, &packing.depots())?;
    let k = inst.capacity();
    let nv = inst.num_vertices();
    let mut residual: Vec<T> = (0..nv).map(|v| if inst.is_depot(v) { T::zero() } else { inst.demand(v) }).collect();
    let mut tours = Vec::new();
    serve_big(inst, opened, &mut residual, true, &mut tours);

    for path in &packing.paths {
        let mut path = path.clone();
        loop {
            let total = path[1..].iter().fold(T::zero(), |acc, &v| acc + residual[v]);
            if total <= k {
                break;
            }
            // Largest i with suffix(i) > k.
            let mut suffix = T::zero();
            let mut i = path.len() - 1;
            loop {
                let with = suffix + residual[path[i]];
                if with > k {
                    break;
                }
                suffix = with;
                i -= 1;
            }
            let v = path[i];
            let x = k - suffix;
            let segment = &path[i..];
            let (anchor, hit) = cheapest_link(inst, opened, segment);
            let support: Vec<(usize, usize)> = segment.windows(2).map(|w| (w[0], w[1])).collect();
            let mut edges = support.clone();
            if anchor != hit {
                edges.push((anchor, hit));
            }
            let mut keep: BTreeSet<usize> = segment[1..].iter().copied().filter(|&y| residual[y] > T::zero()).collect();
            if x > T::zero() {
                keep.insert(v);
            }
            let (visits, cost) = close_tour(inst, &edges, anchor, &keep, mode)?;
            let loads: Vec<T> = visits.iter().map(|&y| if y == v { x } else { residual[y] }).collect();
            let tour = Tour { depot: anchor, visits, loads, cost, support };
            check("full inner load", tour.load(), k)?;
            check("full inner load", k, tour.load())?;
            tours.push(tour);
            for &y in &segment[1..] {
                residual[y] = T::zero();
            }
            residual[v] -= x;
            path.truncate(i + 1);
        }
        let keep: BTreeSet<usize> = path[1..].iter().copied().filter(|&y| residual[y] > T::zero()).collect();
        if keep.is_empty() {
            continue;
        }
        let support: Vec<(usize, usize)> = path.windows(2).map(|w| (w[0], w[1])).collect();
        let (visits, cost) = close_tour(inst, &support, path[0], &keep, mode)?;
        let loads = visits.iter().map(|&y| residual[y]).collect();
        for &y in &keep {
            residual[y] = T::zero();
        }
        tours.push(Tour { depot: path[0], visits, loads, cost, support });
    }

    let rhs = packing.weight(inst) * T::two() + depot_charge(inst, opened, T::two());
    check("path splitting", tours_weight(&tours), rhs)?;
    Ok(tours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostSource, Customer, Depot, Point};

    fn inst(depots: &[(f64, f64)], customers: &[((f64, f64), f64)], k: f64) -> ClrInstance<f64> {
        let ds = depots
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Depot {
                id: i as u64,
                opening_cost: 0.0,
                vehicle_cost: 0.0,
                position: Some(Point::new(x, y)),
            })
            .collect();
        let cs = customers
            .iter()
            .enumerate()
            .map(|(i, &((x, y), d))| Customer { id: 10 + i as u64, demand: d, position: Some(Point::new(x, y)) })
            .collect();
        ClrInstance::new("t", ds, cs, k, CostSource::Euclidean).unwrap()
    }

    #[test]
    fn double_back_and_forth() {
        let g = inst(&[(0.0, 0.0)], &[((3.0, 0.0), 1.0)], 1.0);
        let keep = BTreeSet::from([1]);
        let (visits, cost) = close_tour(&g, &[(0, 1)], 0, &keep, CloseMode::Double).unwrap();
        assert_eq!(visits, vec![1]);
        assert_eq!(cost, 6.0);
    }

    #[test]
    fn match_closes_path() {
        let g = inst(&[(0.0, 0.0)], &[((1.0, 0.0), 1.0), ((1.0, 1.0), 1.0)], 5.0);
        let keep = BTreeSet::from([1, 2]);
        let (_, cost) = close_tour(&g, &[(0, 1), (1, 2)], 0, &keep, CloseMode::Match).unwrap();
        assert!((cost - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        let (_, double) = close_tour(&g, &[(0, 1), (1, 2)], 0, &keep, CloseMode::Double).unwrap();
        assert!(cost <= double);
    }

    #[test]
    fn disconnected_edges() {
        let g = inst(&[(0.0, 0.0)], &[((1.0, 0.0), 1.0), ((2.0, 0.0), 1.0)], 5.0);
        let err = close_tour(&g, &[(1, 2)], 0, &BTreeSet::from([1]), CloseMode::Double).unwrap_err();
        assert_eq!(err, SplitError::Disconnected { anchor: 0 });
    }

    #[test]
    fn path_split_figure_example() {
        // Customers on a line with demands 1, 5, 2, 3, 1 and k = 5.
        let cs: Vec<((f64, f64), f64)> =
            [1.0, 5.0, 2.0, 3.0, 1.0].iter().enumerate().map(|(i, &d)| ((i as f64 + 1.0, 0.0), d)).collect();
        let g = inst(&[(0.0, 0.0)], &cs, 5.0);
        let packing = PathPacking { paths: vec![vec![0, 1, 2, 3, 4, 5]] };
        let tours = path_split(&g, &[0], &packing, true, CloseMode::Double).unwrap();
        // v1 = vertex 1 ... v5 = vertex 5. Big customer v2 (d = 5 = k) is not above k.
        assert_eq!(tours.len(), 3);
        let served = |t: &Tour<f64>| -> Vec<(usize, f64)> {
            let mut s: Vec<_> = t.visits.iter().copied().zip(t.loads.iter().copied()).collect();
            s.sort_by_key(|p| p.0);
            s
        };
        assert_eq!(served(&tours[0]), vec![(3, 1.0), (4, 3.0), (5, 1.0)]);
        assert_eq!(served(&tours[1]), vec![(2, 4.0), (3, 1.0)]);
        assert_eq!(served(&tours[2]), vec![(1, 1.0), (2, 1.0)]);
    }
}
