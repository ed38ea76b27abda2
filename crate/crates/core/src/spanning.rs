//! Depot-rooted spanning structures: the constrained spanning forest, the
//! contracted graph with its Christofides cycle, and the cycle and path
//! packings derived from it.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::instance::ClrInstance;
use crate::matching::{min_weight_perfect_matching, MatchingError};
use crate::scalar::{Key, Scalar};

/// Opening costs with the depots in `zeroed` treated as free.
pub fn effective_opening<T: Scalar>(inst: &ClrInstance<T>, zeroed: &[usize]) -> Vec<T> {
    (0..inst.num_depots()).map(|u| if zeroed.contains(&u) { T::zero() } else { inst.opening_cost(u) }).collect()
}

/// Prim's algorithm from `start` on vertices `0..n`; `cost` returns `None`
/// for absent edges. Returns `(parent, child)` pairs in insertion order.
/// Equal costs are resolved by the smaller, then larger, endpoint.
pub fn prim<T: Scalar>(n: usize, start: usize, cost: impl Fn(usize, usize) -> Option<T>) -> Vec<(usize, usize)> {
    let mut in_tree = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let push_from = |v: usize, in_tree: &[bool], heap: &mut BinaryHeap<_>| {
        for x in 0..n {
            if !in_tree[x] && x != v {
                if let Some(c) = cost(v, x) {
                    heap.push(Reverse((Key(c), v.min(x), v.max(x), v, x)));
                }
            }
        }
    };
    in_tree[start] = true;
    push_from(start, &in_tree, &mut heap);
    while let Some(Reverse((_, _, _, from, to))) = heap.pop() {
        if in_tree[to] {
            continue;
        }
        in_tree[to] = true;
        out.push((from, to));
        push_from(to, &in_tree, &mut heap);
    }
    out
}

/// Vertices of odd degree in the multigraph `edges` on `0..n`, ascending.
pub fn odd_degree_vertices(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0usize; n];
    for &(a, b) in edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    (0..n).filter(|&v| deg[v] % 2 == 1).collect()
}

/// Euler walk of a connected even multigraph from `start` (neighbours taken
/// in ascending order), shortcut to the first occurrence of each vertex.
pub fn euler_shortcut(n: usize, edges: &[(usize, usize)], start: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, id));
        adj[b].push((a, id));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut used = vec![false; edges.len()];
    let mut next = vec![0usize; n];
    let mut stack = vec![start];
    let mut circuit = Vec::with_capacity(edges.len() + 1);
    while let Some(&v) = stack.last() {
        while next[v] < adj[v].len() && used[adj[v][next[v]].1] {
            next[v] += 1;
        }
        if next[v] == adj[v].len() {
            circuit.push(v);
            stack.pop();
        } else {
            let (x, id) = adj[v][next[v]];
            used[id] = true;
            stack.push(x);
        }
    }
    circuit.reverse();
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    for v in circuit {
        if !seen[v] {
            seen[v] = true;
            order.push(v);
        }
    }
    if order.is_empty() {
        order.push(start);
    }
    order
}

/// Tree plus a minimum-weight perfect matching on its odd vertices, walked
/// and shortcut from `start`. The tree must span `0..n`.
pub fn tree_matching_order<T: Scalar>(
    n: usize,
    tree: &[(usize, usize)],
    cost: impl Fn(usize, usize) -> T,
    start: usize,
) -> Result<Vec<usize>, MatchingError> {
    let odd = odd_degree_vertices(n, tree);
    let mut multi = tree.to_vec();
    if !odd.is_empty() {
        let m = min_weight_perfect_matching(odd.len(), |a, b| cost(odd[a], odd[b]))?;
        multi.extend(m.pairs.iter().map(|&(a, b)| (odd[a], odd[b])));
    }
    Ok(euler_shortcut(n, &multi, start))
}

/// Closed-walk cost of a vertex order.
pub fn cycle_cost<T: Scalar>(order: &[usize], cost: impl Fn(usize, usize) -> T) -> T {
    if order.len() < 2 {
        return T::zero();
    }
    let mut total = cost(order[order.len() - 1], order[0]);
    for w in order.windows(2) {
        total += cost(w[0], w[1]);
    }
    total
}

/// Forest of depot-rooted trees covering every customer. Vertices use the
/// instance's global indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedForest {
    /// Parent of each vertex; `None` for depots and vertices outside the forest.
    pub parent: Vec<Option<usize>>,
    /// `(parent, child)` edges in insertion order.
    pub edges: Vec<(usize, usize)>,
    /// Depots rooting at least one customer, ascending.
    pub roots: Vec<usize>,
}

impl ConstrainedForest {
    pub fn weight<T: Scalar>(&self, inst: &ClrInstance<T>) -> T {
        self.edges.iter().fold(T::zero(), |acc, &(a, b)| acc + inst.cost(a, b))
    }

    /// Weight under `w'`, where every depot edge carries half the depot's
    /// effective opening cost.
    pub fn reduced_weight<T: Scalar>(&self, inst: &ClrInstance<T>, zeroed: &[usize]) -> T {
        let phi = effective_opening(inst, zeroed);
        self.edges.iter().fold(T::zero(), |acc, &(a, b)| {
            let extra = if inst.is_depot(a) { phi[a].half() } else { T::zero() };
            acc + inst.cost(a, b) + extra
        })
    }

    /// Original opening cost of the roots.
    pub fn opening<T: Scalar>(&self, inst: &ClrInstance<T>) -> T {
        self.roots.iter().fold(T::zero(), |acc, &u| acc + inst.opening_cost(u))
    }

    pub fn root_of(&self, mut v: usize) -> usize {
        while let Some(p) = self.parent[v] {
            v = p;
        }
        v
    }

    /// Children lists, ascending.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.parent.len()];
        for &(p, c) in &self.edges {
            ch[p].push(c);
        }
        for list in &mut ch {
            list.sort_unstable();
        }
        ch
    }

    pub fn validate<T: Scalar>(&self, inst: &ClrInstance<T>) -> Result<(), String> {
        let nv = inst.num_vertices();
        if self.parent.len() != nv {
            return Err(format!("parent table has {} entries, expected {nv}", self.parent.len()));
        }
        for u in 0..inst.num_depots() {
            if self.parent[u].is_some() {
                return Err(format!("depot {u} has a parent"));
            }
        }
        let mut roots = Vec::new();
        for v in inst.customer_vertices() {
            let mut x = v;
            let mut steps = 0;
            while let Some(p) = self.parent[x] {
                x = p;
                steps += 1;
                if steps > nv {
                    return Err(format!("cycle through customer {v}"));
                }
            }
            if !inst.is_depot(x) {
                return Err(format!("customer {v} is not connected to a depot"));
            }
            roots.push(x);
        }
        roots.sort_unstable();
        roots.dedup();
        if roots != self.roots {
            return Err(format!("root list {:?} does not match trees {:?}", self.roots, roots));
        }
        if self.edges.len() != inst.num_customers() {
            return Err("edge count differs from customer count".into());
        }
        Ok(())
    }
}

/// Minimum constrained spanning forest: Prim on `G'` plus a free root joined
/// to every depot, with `w'(u, v) = w(u, v) + phi(u) / 2` on depot edges and
/// no depot-depot edges. Depots in `zeroed` count as free.
pub fn min_constrained_spanning_forest<T: Scalar>(inst: &ClrInstance<T>, zeroed: &[usize]) -> ConstrainedForest {
    let nv = inst.num_vertices();
    let r = nv;
    let phi = effective_opening(inst, zeroed);
    let cost = |a: usize, b: usize| -> Option<T> {
        if a == r || b == r {
            let other = if a == r { b } else { a };
            return inst.is_depot(other).then(T::zero);
        }
        match (inst.is_depot(a), inst.is_depot(b)) {
            (true, true) => None,
            (true, false) => Some(inst.cost(a, b) + phi[a].half()),
            (false, true) => Some(inst.cost(a, b) + phi[b].half()),
            (false, false) => Some(inst.cost(a, b)),
        }
    };
    let mut parent = vec![None; nv];
    let mut edges = Vec::with_capacity(inst.num_customers());
    for (p, c) in prim(nv + 1, r, cost) {
        if p != r {
            parent[c] = Some(p);
            edges.push((p, c));
        }
    }
    let mut forest = ConstrainedForest { parent, edges, roots: Vec::new() };
    let mut roots: Vec<usize> = inst.customer_vertices().map(|v| forest.root_of(v)).collect();
    roots.sort_unstable();
    roots.dedup();
    forest.roots = roots;
    debug_assert_eq!(forest.validate(inst), Ok(()));
    forest
}

/// Customers plus a super-depot `r` obtained by contracting every depot.
/// Local vertex `i < n` is customer `i`; `r = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedGraph<T> {
    /// Global vertex index of each local customer.
    pub customers: Vec<usize>,
    pub theta: T,
    /// Depot realizing `c(r, v)`, lowest index on ties.
    pub depot_of: Vec<usize>,
    root_cost: Vec<T>,
    cost: Vec<T>,
    via_root: Vec<bool>,
}

impl<T: Scalar> ContractedGraph<T> {
    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn size(&self) -> usize {
        self.customers.len() + 1
    }

    pub fn root(&self) -> usize {
        self.customers.len()
    }

    pub fn cost(&self, a: usize, b: usize) -> T {
        let n = self.customers.len();
        if a == b {
            T::zero()
        } else if a == n {
            self.root_cost[b]
        } else if b == n {
            self.root_cost[a]
        } else {
            self.cost[a * n + b]
        }
    }

    /// Whether `c(a, b)` is realized through the super-depot.
    pub fn is_shortcut(&self, a: usize, b: usize) -> bool {
        let n = self.customers.len();
        a < n && b < n && a != b && self.via_root[a * n + b]
    }

    /// The depot edges realizing a root or shortcut edge, as `(depot, customer)` pairs in global indices.
    pub fn realizing_edges(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        let n = self.customers.len();
        let de = |x: usize| (self.depot_of[x], self.customers[x]);
        if a == n {
            vec![de(b)]
        } else if b == n {
            vec![de(a)]
        } else if self.is_shortcut(a, b) {
            vec![de(a), de(b)]
        } else {
            Vec::new()
        }
    }

    pub fn minimum_spanning_tree(&self) -> Vec<(usize, usize)> {
        prim(self.size(), self.root(), |a, b| Some(self.cost(a, b)))
    }

    pub fn mst_weight(&self) -> T {
        self.minimum_spanning_tree().iter().fold(T::zero(), |acc, &(a, b)| acc + self.cost(a, b))
    }

    pub fn cycle_cost(&self, order: &[usize]) -> T {
        cycle_cost(order, |a, b| self.cost(a, b))
    }
}

/// Contracts all depots into `r` with `c(r, v) = min_u w(u, v) + theta * phi(u)`
/// and `c(v, v') = min(w(v, v'), c(r, v) + c(r, v'))`.
pub fn build_contracted_graph<T: Scalar>(inst: &ClrInstance<T>, theta: T, zeroed: &[usize]) -> ContractedGraph<T> {
    let phi = effective_opening(inst, zeroed);
    let customers: Vec<usize> = inst.customer_vertices().collect();
    let n = customers.len();
    let mut depot_of = Vec::with_capacity(n);
    let mut root_cost = Vec::with_capacity(n);
    for &v in &customers {
        let mut best = 0;
        let mut best_cost = inst.cost(0, v) + theta * phi[0];
        for u in 1..inst.num_depots() {
            let c = inst.cost(u, v) + theta * phi[u];
            if c < best_cost {
                best = u;
                best_cost = c;
            }
        }
        depot_of.push(best);
        root_cost.push(best_cost);
    }
    let mut cost = vec![T::zero(); n * n];
    let mut via_root = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let direct = inst.cost(customers[a], customers[b]);
            let through = root_cost[a] + root_cost[b];
            if through < direct {
                cost[a * n + b] = through;
                via_root[a * n + b] = true;
            } else {
                cost[a * n + b] = direct;
            }
        }
    }
    ContractedGraph { customers, theta, depot_of, root_cost, cost, via_root }
}

/// Christofides on the contracted graph. The cycle starts at `r` and lists
/// every vertex once.
pub fn christofides_cycle<T: Scalar>(g: &ContractedGraph<T>) -> Vec<usize> {
    let tree = g.minimum_spanning_tree();
    tree_matching_order(g.size(), &tree, |a, b| g.cost(a, b), g.root())
        .expect("odd-degree vertex count of a tree is even")
}

/// One component of a cycle packing: `start, customers.., end` with depots
/// at both ends. A cycle has `start == end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingComponent {
    pub start: usize,
    pub customers: Vec<usize>,
    pub end: usize,
}

impl PackingComponent {
    pub fn is_cycle(&self) -> bool {
        self.start == self.end
    }

    fn sequence(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.customers.len() + 2);
        s.push(self.start);
        s.extend_from_slice(&self.customers);
        s.push(self.end);
        s
    }

    fn from_sequence(s: &[usize]) -> Self {
        PackingComponent { start: s[0], customers: s[1..s.len() - 1].to_vec(), end: s[s.len() - 1] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePacking {
    pub components: Vec<PackingComponent>,
}

impl CyclePacking {
    pub fn weight<T: Scalar>(&self, inst: &ClrInstance<T>) -> T {
        self.components.iter().fold(T::zero(), |acc, c| {
            let s = c.sequence();
            acc + s.windows(2).fold(T::zero(), |a, w| a + inst.cost(w[0], w[1]))
        })
    }

    /// Weight under `w'(u, v) = w(u, v) + theta * phi(u)` on depot edges.
    pub fn reduced_weight<T: Scalar>(&self, inst: &ClrInstance<T>, theta: T, zeroed: &[usize]) -> T {
        let phi = effective_opening(inst, zeroed);
        self.weight(inst) + self.components.iter().fold(T::zero(), |acc, c| acc + theta * (phi[c.start] + phi[c.end]))
    }

    pub fn validate<T: Scalar>(&self, inst: &ClrInstance<T>) -> Result<(), String> {
        let mut seen = vec![false; inst.num_vertices()];
        for (i, c) in self.components.iter().enumerate() {
            if !inst.is_depot(c.start) || !inst.is_depot(c.end) {
                return Err(format!("component {i} does not end at depots"));
            }
            if c.customers.is_empty() {
                return Err(format!("component {i} has no customers"));
            }
            let mut depots = vec![c.start];
            if c.end != c.start {
                depots.push(c.end);
            }
            for &v in c.customers.iter().chain(&depots) {
                if inst.is_depot(v) && !depots.contains(&v) {
                    return Err(format!("depot {v} inside component {i}"));
                }
                if seen[v] {
                    return Err(format!("vertex {v} appears twice"));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = inst.customer_vertices().find(|&v| !seen[v]) {
            return Err(format!("customer {v} is not covered"));
        }
        Ok(())
    }
}

/// Expands root and shortcut edges of `cycle` into depot edges and merges
/// pieces that share a depot, skipping the repeated depot.
pub fn derive_cycle_packing<T: Scalar>(cycle: &[usize], g: &ContractedGraph<T>, inst: &ClrInstance<T>) -> CyclePacking {
    let r = g.root();
    let pos = cycle.iter().position(|&v| v == r).expect("cycle contains the super-depot");
    let order: Vec<usize> = cycle[pos + 1..].iter().chain(&cycle[..pos]).copied().collect();

    let mut pieces: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        if current.is_empty() {
            current.push(g.depot_of[v]);
        }
        current.push(g.customers[v]);
        let breaks = i + 1 == order.len() || g.is_shortcut(v, order[i + 1]);
        if breaks {
            current.push(g.depot_of[v]);
            pieces.push(std::mem::take(&mut current));
        }
    }

    let mut depot_order = Vec::new();
    for p in &pieces {
        for u in [p[0], p[p.len() - 1]] {
            if !depot_order.contains(&u) {
                depot_order.push(u);
            }
        }
    }
    let touches = |p: &Vec<usize>, u: usize| p[0] == u || p[p.len() - 1] == u;
    for u in depot_order {
        loop {
            let hits: Vec<usize> = (0..pieces.len()).filter(|&i| touches(&pieces[i], u)).take(2).collect();
            if hits.len() < 2 {
                break;
            }
            let mut a = pieces.remove(hits[1]);
            let mut p = std::mem::take(&mut pieces[hits[0]]);
            if p[p.len() - 1] != u {
                p.reverse();
            }
            if a[0] != u {
                a.reverse();
            }
            p.pop();
            p.extend_from_slice(&a[1..]);
            pieces[hits[0]] = p;
        }
    }

    let packing = CyclePacking { components: pieces.iter().map(|p| PackingComponent::from_sequence(p)).collect() };
    debug_assert_eq!(packing.validate(inst), Ok(()));
    packing
}

/// Paths each starting at their only depot, followed by customers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPacking {
    pub paths: Vec<Vec<usize>>,
}

impl PathPacking {
    pub fn weight<T: Scalar>(&self, inst: &ClrInstance<T>) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + p.windows(2).fold(T::zero(), |a, w| a + inst.cost(w[0], w[1])))
    }

    /// Original opening cost of the path depots.
    pub fn opening<T: Scalar>(&self, inst: &ClrInstance<T>) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + inst.opening_cost(p[0]))
    }

    pub fn depots(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.paths.iter().map(|p| p[0]).collect();
        d.sort_unstable();
        d
    }

    pub fn validate<T: Scalar>(&self, inst: &ClrInstance<T>) -> Result<(), String> {
        let mut seen = vec![false; inst.num_vertices()];
        for (i, p) in self.paths.iter().enumerate() {
            if p.len() < 2 || !inst.is_depot(p[0]) {
                return Err(format!("path {i} must start at a depot and reach a customer"));
            }
            if let Some(&u) = p[1..].iter().find(|&&v| inst.is_depot(v)) {
                return Err(format!("depot {u} inside path {i}"));
            }
            for &v in p {
                if seen[v] {
                    return Err(format!("vertex {v} appears twice"));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = inst.customer_vertices().find(|&v| !seen[v]) {
            return Err(format!("customer {v} is not covered"));
        }
        Ok(())
    }
}

/// Opens every cycle at its cheaper depot edge and cuts every two-depot path
/// at the depot with the smaller effective opening cost.
pub fn cycle_packing_to_paths<T: Scalar>(cp: &CyclePacking, inst: &ClrInstance<T>, zeroed: &[usize]) -> PathPacking {
    let phi = effective_opening(inst, zeroed);
    let mut paths = Vec::with_capacity(cp.components.len());
    for c in &cp.components {
        let first = c.customers[0];
        let last = c.customers[c.customers.len() - 1];
        let mut path = Vec::with_capacity(c.customers.len() + 1);
        let keep_forward = if c.is_cycle() {
            // Keep the edge at `first` unless it is the one to delete.
            let (a, b) = (inst.cost(c.start, first), inst.cost(c.start, last));
            !(a < b || (a == b && inst.vertex_id(first) < inst.vertex_id(last)))
        } else {
            let (ps, pe) = (phi[c.start], phi[c.end]);
            pe < ps || (pe == ps && c.start < c.end)
        };
        if c.is_cycle() {
            path.push(c.start);
            if keep_forward {
                path.extend_from_slice(&c.customers);
            } else {
                path.extend(c.customers.iter().rev());
            }
        } else if keep_forward {
            path.push(c.start);
            path.extend_from_slice(&c.customers);
        } else {
            path.push(c.end);
            path.extend(c.customers.iter().rev());
        }
        paths.push(path);
    }
    let packing = PathPacking { paths };
    debug_assert_eq!(packing.validate(inst), Ok(()));
    packing
}
