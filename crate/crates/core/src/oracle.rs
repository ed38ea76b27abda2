//! Exhaustive solvers for tiny instances.

use thiserror::Error;

use crate::instance::ClrInstance;
use crate::scalar::Scalar;
use crate::solvers::ClrSolution;
use crate::spanning::effective_opening;
use crate::splitting::Tour;

/// Size limits for [`brute_force_clr_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_total_demand: usize,
    pub max_depots: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_total_demand: 8, max_depots: 3 }
    }
}

pub const MAX_TSP_VERTICES: usize = 10;
pub const MAX_FOREST_CUSTOMERS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("customer {0} has a non-integer demand")]
    NonIntegerDemand(u64),
    #[error("splittable search needs an integer capacity")]
    NonIntegerCapacity,
    #[error("customer {0} cannot be served by a single tour")]
    Infeasible(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub opt_total: T,
    /// Routing part of the optimum.
    pub opt_routing: T,
    /// Opening part of the optimum.
    pub opt_opening: T,
    pub witness: ClrSolution<T>,
}

pub fn brute_force_clr<T: Scalar>(inst: &ClrInstance<T>, splittable: bool) -> Result<OracleResult<T>, OracleError> {
    brute_force_clr_with(inst, splittable, OracleCaps::default())
}

/// Exact optimum over every nonempty depot set and every partition of the
/// demand items into capacity-feasible tours. Splittable demand is expanded
/// into unit items.
pub fn brute_force_clr_with<T: Scalar>(
    inst: &ClrInstance<T>,
    splittable: bool,
    caps: OracleCaps,
) -> Result<OracleResult<T>, OracleError> {
    let m = inst.num_depots();
    let n = inst.num_customers();
    if m > caps.max_depots {
        return Err(OracleError::TooLarge(format!("{m} depots, limit {}", caps.max_depots)));
    }
    let mut demands = Vec::with_capacity(n);
    for c in inst.customers() {
        if !c.demand.is_integral() {
            return Err(OracleError::NonIntegerDemand(c.id));
        }
        demands.push(c.demand.to_usize().expect("integral demand"));
    }
    let total: usize = demands.iter().sum();
    if total > caps.max_total_demand {
        return Err(OracleError::TooLarge(format!("total demand {total}, limit {}", caps.max_total_demand)));
    }
    let k = inst.capacity();
    // Items: (customer index, load).
    let items: Vec<(usize, T)> = if splittable {
        if !k.is_integral() {
            return Err(OracleError::NonIntegerCapacity);
        }
        demands.iter().enumerate().flat_map(|(j, &d)| std::iter::repeat_n((j, T::one()), d)).collect()
    } else {
        for c in inst.customers() {
            if c.demand > k {
                return Err(OracleError::Infeasible(c.id));
            }
        }
        inst.customers().iter().enumerate().map(|(j, c)| (j, c.demand)).collect()
    };
    let ni = items.len();
    let full = (1usize << ni) - 1;

    // Per item set: its customer set, and whether it fits one vehicle.
    let mut cust_mask = vec![0usize; 1 << ni];
    let mut fits = vec![false; 1 << ni];
    for s in 1..=full {
        let mut load = T::zero();
        for (i, &(j, l)) in items.iter().enumerate() {
            if s & (1 << i) != 0 {
                cust_mask[s] |= 1 << j;
                load += l;
            }
        }
        fits[s] = load <= k;
    }

    let tsp: Vec<HeldKarp<T>> = (0..m).map(|u| HeldKarp::from_depot(inst, u)).collect();

    let mut best: Option<(T, usize, Vec<usize>, Vec<usize>)> = None;
    for open_mask in 1usize..(1 << m) {
        let open: Vec<usize> = (0..m).filter(|&u| open_mask & (1 << u) != 0).collect();
        // Cheapest single tour per item set and its depot.
        let mut tour = vec![None; 1 << ni];
        for s in 1..=full {
            if !fits[s] {
                continue;
            }
            let cm = cust_mask[s];
            for &u in &open {
                let c = tsp[u].cost[cm];
                if tour[s].is_none_or(|(bc, _)| c < bc) {
                    tour[s] = Some((c, u));
                }
            }
        }
        // Partition DP; each block contains the lowest remaining item.
        let mut f: Vec<Option<T>> = vec![None; 1 << ni];
        let mut choice = vec![0usize; 1 << ni];
        f[0] = Some(T::zero());
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            let mut sub = rest;
            loop {
                let s = sub | low;
                if let (Some((c, _)), Some(fr)) = (tour[s], f[mask ^ s]) {
                    let v = c + fr;
                    if f[mask].is_none_or(|b| v < b) {
                        f[mask] = Some(v);
                        choice[mask] = s;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        let routing = f[full].expect("every item fits a vehicle");
        let opening = open.iter().fold(T::zero(), |acc, &u| acc + inst.opening_cost(u));
        let total_cost = routing + opening;
        if best.as_ref().is_none_or(|b| total_cost < b.0) {
            let mut blocks = Vec::new();
            let mut mask = full;
            while mask != 0 {
                blocks.push(choice[mask]);
                mask ^= choice[mask];
            }
            let depots = blocks.iter().map(|&s| tour[s].unwrap().1).collect();
            best = Some((total_cost, open_mask, blocks, depots));
        }
    }

    let (_, open_mask, blocks, depots) = best.expect("at least one depot set");
    let open: Vec<usize> = (0..m).filter(|&u| open_mask & (1 << u) != 0).collect();
    let mut tours = Vec::with_capacity(blocks.len());
    for (s, u) in blocks.into_iter().zip(depots) {
        let order = tsp[u].order(cust_mask[s]);
        let visits: Vec<usize> = order.iter().map(|&j| inst.customer_vertex(j)).collect();
        let loads = order
            .iter()
            .map(|&j| {
                items
                    .iter()
                    .enumerate()
                    .filter(|&(i, &(jj, _))| s & (1 << i) != 0 && jj == j)
                    .fold(T::zero(), |acc, (_, &(_, l))| acc + l)
            })
            .collect();
        let cost = tsp[u].cost[cust_mask[s]];
        tours.push(Tour { depot: u, visits, loads, cost, support: Vec::new() });
    }
    let witness = ClrSolution::assemble(inst, Vec::new(), open, tours, None);
    Ok(OracleResult {
        opt_total: witness.total(),
        opt_routing: witness.routing_cost,
        opt_opening: witness.opening_cost,
        witness,
    })
}

/// Shortest closed tours from one depot through every customer subset.
struct HeldKarp<T> {
    cost: Vec<T>,
    dp: Vec<Vec<T>>,
    n: usize,
    depot: usize,
    w: Vec<Vec<T>>,
}

impl<T: Scalar> HeldKarp<T> {
    fn from_depot(inst: &ClrInstance<T>, depot: usize) -> Self {
        let n = inst.num_customers();
        let vert: Vec<usize> = inst.customer_vertices().chain([depot]).collect();
        let w: Vec<Vec<T>> = vert.iter().map(|&a| vert.iter().map(|&b| inst.cost(a, b)).collect()).collect();
        let (dp, cost) = held_karp(n, &w);
        HeldKarp { cost, dp, n, depot: n, w }
    }

    /// Visit order realizing `cost[mask]`.
    fn order(&self, mask: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut rest = mask;
        let mut next = self.depot;
        while rest != 0 {
            let mut pick = None;
            for j in (0..self.n).filter(|&j| rest & (1 << j) != 0) {
                let c = self.dp[rest][j] + self.w[j][next];
                if pick.is_none_or(|(_, bc)| c < bc) {
                    pick = Some((j, c));
                }
            }
            let (j, _) = pick.unwrap();
            out.push(j);
            rest ^= 1 << j;
            next = j;
        }
        out.reverse();
        out
    }
}

/// Held-Karp over `n` targets with the start at index `n` of `w`. Returns the
/// path table `dp[mask][last]` and the closed cost per mask.
fn held_karp<T: Scalar>(n: usize, w: &[Vec<T>]) -> (Vec<Vec<T>>, Vec<T>) {
    let big = w.iter().flatten().fold(T::one(), |acc, &c| acc + c);
    let mut dp = vec![vec![big; n]; 1 << n];
    for j in 0..n {
        dp[1 << j][j] = w[n][j];
    }
    for mask in 1usize..(1 << n) {
        for last in (0..n).filter(|&l| mask & (1 << l) != 0) {
            let cur = dp[mask][last];
            for nx in (0..n).filter(|&x| mask & (1 << x) == 0) {
                let v = cur + w[last][nx];
                let slot = &mut dp[mask | (1 << nx)][nx];
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    let mut cost = vec![T::zero(); 1 << n];
    for mask in 1usize..(1 << n) {
        let mut best = big;
        for last in (0..n).filter(|&l| mask & (1 << l) != 0) {
            let v = dp[mask][last] + w[last][n];
            if v < best {
                best = v;
            }
        }
        cost[mask] = best;
    }
    (dp, cost)
}

/// Optimal Hamiltonian cycle cost on `0..n`.
pub fn brute_force_tsp<T: Scalar>(n: usize, cost: impl Fn(usize, usize) -> T) -> Result<T, OracleError> {
    if n > MAX_TSP_VERTICES {
        return Err(OracleError::TooLarge(format!("{n} vertices, limit {MAX_TSP_VERTICES}")));
    }
    if n < 2 {
        return Ok(T::zero());
    }
    // Fix vertex n - 1 as the start.
    let w: Vec<Vec<T>> = (0..n).map(|a| (0..n).map(|b| cost(a, b)).collect()).collect();
    let (_, closed) = held_karp(n - 1, &w);
    Ok(closed[(1 << (n - 1)) - 1])
}

/// Minimum of `sum w'` over every constrained spanning forest, where depot
/// edges carry half the depot's effective opening cost.
pub fn brute_force_forest<T: Scalar>(inst: &ClrInstance<T>, zeroed: &[usize]) -> Result<T, OracleError> {
    let m = inst.num_depots();
    let n = inst.num_customers();
    if n > MAX_FOREST_CUSTOMERS {
        return Err(OracleError::TooLarge(format!("{n} customers, limit {MAX_FOREST_CUSTOMERS}")));
    }
    let phi = effective_opening(inst, zeroed);
    let nv = m + n;
    let edge = |p: usize, c: usize| {
        if p < m {
            inst.cost(p, c) + phi[p].half()
        } else {
            inst.cost(p, c)
        }
    };
    let mut parent = vec![0usize; n];
    let mut best: Option<T> = None;
    loop {
        let acyclic = (0..n).all(|j| {
            let mut x = m + j;
            for _ in 0..=n {
                if x < m {
                    return true;
                }
                x = parent[x - m];
            }
            false
        });
        if acyclic {
            let total = (0..n).fold(T::zero(), |acc, j| acc + edge(parent[j], m + j));
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
        // Next parent assignment; a customer never parents itself.
        let mut j = 0;
        loop {
            if j == n {
                return Ok(best.expect("depot-star forest is always valid"));
            }
            parent[j] += 1;
            if parent[j] == m + j {
                parent[j] += 1;
            }
            if parent[j] < nv {
                break;
            }
            parent[j] = 0;
            j += 1;
        }
    }
}
