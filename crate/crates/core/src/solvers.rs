//! Tree-Alg and Path-Alg pipelines, solution pricing and validation.

use thiserror::Error;

use crate::instance::{derive_ufl, ClrInstance, InstanceError};
use crate::scalar::Scalar;
use crate::spanning::{
    build_contracted_graph, christofides_cycle, cycle_packing_to_paths, derive_cycle_packing,
    min_constrained_spanning_forest,
};
use crate::splitting::{path_split, tree_split, within, CloseMode, SplitError, Tour};
use crate::ufl::{solve_jms_greedy, UflError};

pub const DEFAULT_TREE_ALPHA: f64 = 0.4;
pub const DEFAULT_PATH_ALPHA: f64 = 0.7;
pub const DEFAULT_THETA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Tree,
    Path,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Tree => "tree",
            Algorithm::Path => "path",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tree" => Ok(Algorithm::Tree),
            "path" => Ok(Algorithm::Path),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams<T> {
    pub alg: Algorithm,
    pub alpha: T,
    pub theta: T,
    pub mode: CloseMode,
    pub splittable: bool,
}

impl<T: Scalar> SolveParams<T> {
    pub fn tree(alpha: T, splittable: bool, mode: CloseMode) -> Self {
        SolveParams { alg: Algorithm::Tree, alpha, theta: T::of(DEFAULT_THETA), mode, splittable }
    }

    pub fn path(alpha: T, theta: T, mode: CloseMode) -> Self {
        SolveParams { alg: Algorithm::Path, alpha, theta, mode, splittable: true }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("theta must be nonnegative, got {0}")]
    BadTheta(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Ufl(#[from] UflError),
    #[error(transparent)]
    Split(#[from] SplitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClrSolution<T> {
    /// Opened depots, ascending.
    pub opened: Vec<usize>,
    /// Depots opened by the facility-location step.
    pub from_ufl: Vec<usize>,
    /// Depots rooting the spanning structure.
    pub from_structure: Vec<usize>,
    pub tours: Vec<Tour<T>>,
    pub routing_cost: T,
    pub opening_cost: T,
    /// `None` for solutions not produced by a solver.
    pub params: Option<SolveParams<T>>,
}

impl<T: Scalar> ClrSolution<T> {
    /// Prices `tours` and charges original opening costs once per depot.
    pub fn assemble(
        inst: &ClrInstance<T>,
        from_ufl: Vec<usize>,
        from_structure: Vec<usize>,
        tours: Vec<Tour<T>>,
        params: Option<SolveParams<T>>,
    ) -> Self {
        let mut opened: Vec<usize> = from_ufl.iter().chain(&from_structure).copied().collect();
        opened.sort_unstable();
        opened.dedup();
        let routing_cost = tours.iter().fold(T::zero(), |acc, t| acc + t.cost);
        let opening_cost = opened.iter().fold(T::zero(), |acc, &u| acc + inst.opening_cost(u));
        ClrSolution { opened, from_ufl, from_structure, tours, routing_cost, opening_cost, params }
    }

    pub fn total(&self) -> T {
        self.routing_cost + self.opening_cost
    }
}

fn greedy_open<T: Scalar>(inst: &ClrInstance<T>, alpha: T) -> Result<Vec<usize>, SolveError> {
    if !(alpha > T::zero()) {
        return Err(SolveError::BadAlpha(alpha.as_f64()));
    }
    let ufl = derive_ufl(inst, alpha)?;
    Ok(solve_jms_greedy(&ufl)?.open)
}

/// Tree-Alg: greedy facility location, constrained spanning forest with the
/// greedy depots free, then tree splitting.
pub fn tree_alg<T: Scalar>(
    inst: &ClrInstance<T>,
    alpha: T,
    splittable: bool,
    mode: CloseMode,
) -> Result<ClrSolution<T>, SolveError> {
    let o1 = greedy_open(inst, alpha)?;
    let forest = min_constrained_spanning_forest(inst, &o1);
    let o2 = forest.roots.clone();
    let mut opened: Vec<usize> = o1.iter().chain(&o2).copied().collect();
    opened.sort_unstable();
    opened.dedup();
    let tours = tree_split(inst, &opened, &forest, splittable, mode)?;
    let params = SolveParams::tree(alpha, splittable, mode);
    Ok(ClrSolution::assemble(inst, o1, o2, tours, Some(params)))
}

/// Path-Alg: greedy facility location, Christofides on the depot-contracted
/// graph, cycle and path packing, then path splitting.
pub fn path_alg<T: Scalar>(
    inst: &ClrInstance<T>,
    alpha: T,
    theta: T,
    splittable: bool,
    mode: CloseMode,
) -> Result<ClrSolution<T>, SolveError> {
    if !splittable {
        return Err(SplitError::UnsplittableUnsupported.into());
    }
    if theta < T::zero() {
        return Err(SolveError::BadTheta(theta.as_f64()));
    }
    let o1 = greedy_open(inst, alpha)?;
    let g = build_contracted_graph(inst, theta, &o1);
    let cycle = christofides_cycle(&g);
    let cp = derive_cycle_packing(&cycle, &g, inst);
    let packing = cycle_packing_to_paths(&cp, inst, &o1);
    let o2 = packing.depots();
    let mut opened: Vec<usize> = o1.iter().chain(&o2).copied().collect();
    opened.sort_unstable();
    opened.dedup();
    let tours = path_split(inst, &opened, &packing, true, mode)?;
    let params = SolveParams::path(alpha, theta, mode);
    Ok(ClrSolution::assemble(inst, o1, o2, tours, Some(params)))
}

/// Runs the algorithm named in `params`.
pub fn solve<T: Scalar>(inst: &ClrInstance<T>, params: &SolveParams<T>) -> Result<ClrSolution<T>, SolveError> {
    match params.alg {
        Algorithm::Tree => tree_alg(inst, params.alpha, params.splittable, params.mode),
        Algorithm::Path => path_alg(inst, params.alpha, params.theta, params.splittable, params.mode),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

const COST_TOLERANCE: f64 = 1e-6;

/// Checks every feasibility condition of `sol` and its stored costs.
pub fn validate_solution<T: Scalar>(inst: &ClrInstance<T>, sol: &ClrSolution<T>, splittable: bool) -> ValidationReport {
    let mut v = Vec::new();
    let k = inst.capacity();
    let nv = inst.num_vertices();
    let mut delivered = vec![T::zero(); nv];
    let mut tours_at = vec![0usize; nv];
    for (i, t) in sol.tours.iter().enumerate() {
        if !inst.is_depot(t.depot) {
            v.push(format!("tour {i}: anchor {} is not a depot", t.depot));
            continue;
        }
        if !sol.opened.contains(&t.depot) {
            v.push(format!("tour {i}: anchor not opened (depot {})", inst.vertex_id(t.depot)));
        }
        if t.visits.len() != t.loads.len() {
            v.push(format!("tour {i}: {} visits but {} loads", t.visits.len(), t.loads.len()));
            continue;
        }
        let mut seen = std::collections::BTreeSet::new();
        for (&x, &load) in t.visits.iter().zip(&t.loads) {
            if x >= nv || inst.is_depot(x) {
                v.push(format!("tour {i}: visit {x} is not a customer"));
                continue;
            }
            if !seen.insert(x) {
                v.push(format!("tour {i}: customer {} visited twice", inst.vertex_id(x)));
            }
            if load < T::zero() {
                v.push(format!("tour {i}: negative load at customer {}", inst.vertex_id(x)));
            }
            delivered[x] += load;
            tours_at[x] += 1;
        }
        if !within(t.load(), k) {
            v.push(format!("tour {i}: load {} exceeds capacity {k}", t.load()));
        }
        let recomputed = Tour::route_cost(inst, t.depot, &t.visits);
        if (recomputed - t.cost).abs().as_f64() > COST_TOLERANCE {
            v.push(format!("tour {i}: stored cost {} differs from recomputed {recomputed}", t.cost));
        }
    }
    for x in inst.customer_vertices() {
        let d = inst.demand(x);
        let id = inst.vertex_id(x);
        if !within(d, delivered[x]) {
            v.push(format!("demand shortfall {id}: {}", d - delivered[x]));
        } else if !within(delivered[x], d) {
            v.push(format!("demand excess {id}: {}", delivered[x] - d));
        }
        if !splittable && tours_at[x] != 1 {
            v.push(format!("customer {id} is served by {} tours in unsplittable mode", tours_at[x]));
        }
    }
    let routing = sol.tours.iter().fold(T::zero(), |acc, t| acc + t.cost);
    let opening = sol.opened.iter().fold(T::zero(), |acc, &u| acc + inst.opening_cost(u));
    if (routing + opening - sol.total()).abs().as_f64() > COST_TOLERANCE
        || (routing - sol.routing_cost).abs().as_f64() > COST_TOLERANCE
        || (opening - sol.opening_cost).abs().as_f64() > COST_TOLERANCE
    {
        v.push(format!("stored total {} differs from recomputed {}", sol.total(), routing + opening));
    }
    let mut sorted = sol.opened.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted != sol.opened {
        v.push("opened depot list is not sorted and unique".into());
    }
    ValidationReport { violations: v }
}
