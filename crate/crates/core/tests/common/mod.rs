#![allow(dead_code)]

use clr_core::instance::{ClrInstance, CostMatrix, CostSource, Customer, Depot, Point};
use clr_core::Scalar;

/// Depot at `(x, y)` with opening cost `phi`. Ids start at 1.
pub fn depot<T: Scalar>(id: u64, x: f64, y: f64, phi: f64) -> Depot<T> {
    Depot { id, opening_cost: T::of(phi), vehicle_cost: T::zero(), position: Some(Point::new(x, y)) }
}

pub fn customer<T: Scalar>(id: u64, x: f64, y: f64, demand: f64) -> Customer<T> {
    Customer { id, demand: T::of(demand), position: Some(Point::new(x, y)) }
}

/// Euclidean instance from `(x, y, phi)` depots and `(x, y, demand)` customers.
pub fn euclid<T: Scalar>(depots: &[(f64, f64, f64)], customers: &[(f64, f64, f64)], k: f64) -> ClrInstance<T> {
    let m = depots.len() as u64;
    let ds = depots.iter().enumerate().map(|(i, &(x, y, p))| depot(i as u64 + 1, x, y, p)).collect();
    let cs = customers.iter().enumerate().map(|(j, &(x, y, d))| customer(m + j as u64 + 1, x, y, d)).collect();
    ClrInstance::new("test", ds, cs, T::of(k), CostSource::Euclidean).unwrap()
}

/// Instance over an explicit matrix in vertex order (depots first).
pub fn explicit<T: Scalar>(phi: &[f64], demands: &[f64], k: f64, rows: Vec<Vec<f64>>) -> ClrInstance<T> {
    let m = phi.len() as u64;
    let ds = phi
        .iter()
        .enumerate()
        .map(|(i, &p)| Depot { id: i as u64 + 1, opening_cost: T::of(p), vehicle_cost: T::zero(), position: None })
        .collect();
    let cs = demands
        .iter()
        .enumerate()
        .map(|(j, &d)| Customer { id: m + j as u64 + 1, demand: T::of(d), position: None })
        .collect();
    let rows = rows.into_iter().map(|r| r.into_iter().map(T::of).collect()).collect();
    ClrInstance::new("test", ds, cs, T::of(k), CostSource::Explicit(CostMatrix::from_rows(rows).unwrap())).unwrap()
}

pub fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps
}
