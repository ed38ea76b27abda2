//! Seeded random instances for property tests and the `gen` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{ClrInstance, CostMatrix, CostSource, Customer, Depot, Point};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenMetric {
    #[default]
    Euclidean,
    /// Integer L1 distances stored as an explicit matrix; exact in every scalar type.
    Manhattan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub m: usize,
    pub n: usize,
    pub demand_max: u32,
    pub capacity: u32,
    pub phi_max: u32,
    pub coord_box: u32,
    pub metric: GenMetric,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            m: 3,
            n: 10,
            demand_max: 5,
            capacity: 10,
            phi_max: 50,
            coord_box: 100,
            metric: GenMetric::Euclidean,
        }
    }
}

fn sample<T: Scalar>(rng: &mut ChaCha8Rng, seed: u64, p: &GenParams) -> ClrInstance<T> {
    let point =
        |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(0..=p.coord_box) as f64, rng.gen_range(0..=p.coord_box) as f64);
    let depots: Vec<Depot<T>> = (0..p.m)
        .map(|i| {
            let pos = point(rng);
            Depot {
                id: i as u64 + 1,
                opening_cost: T::of_usize(rng.gen_range(0..=p.phi_max) as usize),
                vehicle_cost: T::zero(),
                position: Some(pos),
            }
        })
        .collect();
    let customers: Vec<Customer<T>> = (0..p.n)
        .map(|j| {
            let pos = point(rng);
            Customer {
                id: (p.m + j) as u64 + 1,
                demand: T::of_usize(rng.gen_range(1..=p.demand_max.max(1)) as usize),
                position: Some(pos),
            }
        })
        .collect();
    let source = match p.metric {
        GenMetric::Euclidean => CostSource::Euclidean,
        GenMetric::Manhattan => {
            let pts: Vec<Point> = depots
                .iter()
                .map(|d| d.position.unwrap())
                .chain(customers.iter().map(|c| c.position.unwrap()))
                .collect();
            let l1 = |a: &Point, b: &Point| ((a.x - b.x).abs() + (a.y - b.y).abs()) as usize;
            CostSource::Explicit(CostMatrix::from_fn(pts.len(), |i, j| T::of_usize(l1(&pts[i], &pts[j]))))
        }
    };
    let name = format!("rand-s{seed}-m{}-n{}", p.m, p.n);
    ClrInstance::new(name, depots, customers, T::of_usize(p.capacity.max(1) as usize), source)
        .expect("generated instances are valid")
}

/// Deterministic instance for `seed`.
pub fn gen_random_instance<T: Scalar>(seed: u64, p: &GenParams) -> ClrInstance<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, seed, p)
}

/// Like [`gen_random_instance`], redrawing from the same stream until the
/// total demand is at most `max_total_demand`.
pub fn gen_bounded_instance<T: Scalar>(seed: u64, p: &GenParams, max_total_demand: usize) -> ClrInstance<T> {
    assert!(p.n <= max_total_demand, "n customers need total demand at least n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst: ClrInstance<T> = sample(&mut rng, seed, p);
        if inst.total_demand() <= T::of_usize(max_total_demand) {
            return inst;
        }
    }
}

/// Tiny instance shape drawn from `seed`: 1 to 3 depots, 1 to 5 customers,
/// integer demands with total at most 8.
pub fn gen_oracle_instance<T: Scalar>(seed: u64, metric: GenMetric) -> ClrInstance<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let p = GenParams {
        m: rng.gen_range(1..=3),
        n: rng.gen_range(1..=5),
        demand_max: rng.gen_range(1..=3),
        capacity: rng.gen_range(1..=5),
        phi_max: rng.gen_range(0..=40),
        coord_box: 20,
        metric,
    };
    gen_bounded_instance(seed, &p, 8)
}
