//! Uncapacitated facility location: the dual-fitting greedy with switching
//! and an exhaustive reference solver.

use thiserror::Error;

use crate::instance::UflInstance;
use crate::scalar::{self, Scalar};

/// Largest facility count accepted by [`brute_force_ufl`].
pub const BRUTE_FORCE_MAX_FACILITIES: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UflError {
    #[error("instance has {0} facilities; exhaustive search supports at most {BRUTE_FORCE_MAX_FACILITIES}")]
    TooLarge(usize),
    #[error("instance has no facilities")]
    NoFacilities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UflSolution<T> {
    /// Open facilities, ascending.
    pub open: Vec<usize>,
    /// Serving facility per client (nearest open, ties to lowest index).
    pub assignment: Vec<usize>,
    pub connection_cost: T,
    pub opening_cost: T,
}

impl<T: Scalar> UflSolution<T> {
    pub fn total(&self) -> T {
        self.connection_cost + self.opening_cost
    }

    /// Prices `open` with every client served by its nearest open facility.
    pub fn evaluate(ufl: &UflInstance<T>, mut open: Vec<usize>) -> Self {
        open.sort_unstable();
        open.dedup();
        let mut assignment = Vec::with_capacity(ufl.num_clients());
        let mut connection_cost = T::zero();
        for j in 0..ufl.num_clients() {
            let mut best = open[0];
            for &i in &open[1..] {
                if ufl.connection[i][j] < ufl.connection[best][j] {
                    best = i;
                }
            }
            assignment.push(best);
            connection_cost += ufl.demands[j] * ufl.connection[best][j];
        }
        let opening_cost = open.iter().fold(T::zero(), |acc, &i| acc + ufl.opening[i]);
        UflSolution { open, assignment, connection_cost, opening_cost }
    }
}

/// Greedy with switching: every unconnected client raises its per-unit
/// budget at unit rate; a closed facility opens once the positive parts of
/// `demand * (t - cost)` from unconnected clients plus the savings
/// `demand * (current - cost)` offered by connected clients cover its
/// opening cost. Connected clients switch whenever a cheaper facility opens.
///
/// Events are the sorted client-facility costs plus facility openings; each
/// facility's payment is kept as `base + slope * t`.
pub fn solve_jms_greedy<T: Scalar>(ufl: &UflInstance<T>) -> Result<UflSolution<T>, UflError> {
    let m = ufl.num_facilities();
    let n = ufl.num_clients();
    if m == 0 {
        return Err(UflError::NoFacilities);
    }
    let c = &ufl.connection;
    let d = &ufl.demands;

    let mut edges: Vec<(T, usize, usize)> = Vec::with_capacity(n * m);
    for i in 0..m {
        for j in 0..n {
            edges.push((c[i][j], i, j));
        }
    }
    edges.sort_by(|a, b| scalar::cmp(&a.0, &b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut is_open = vec![false; m];
    let mut tight = vec![false; n * m];
    let mut base = vec![T::zero(); m];
    let mut slope = vec![T::zero(); m];
    // Current per-unit connection cost of each connected client.
    let mut served: Vec<Option<T>> = vec![None; n];
    let mut unconnected = n;
    let mut now = T::zero();
    let mut next_edge = 0;

    // Client `j` stops raising its budget at `now` and offers savings against `cur`.
    let connect = |j: usize,
                   cur: T,
                   served: &mut Vec<Option<T>>,
                   base: &mut Vec<T>,
                   slope: &mut Vec<T>,
                   tight: &Vec<bool>,
                   is_open: &Vec<bool>| {
        for i in 0..m {
            if served[j].is_none() && tight[i * n + j] {
                slope[i] -= d[j];
                base[i] += d[j] * c[i][j];
            }
            if !is_open[i] {
                let offer = match served[j] {
                    Some(old) => scalar::max(T::zero(), old - c[i][j]),
                    None => T::zero(),
                };
                base[i] += d[j] * (scalar::max(T::zero(), cur - c[i][j]) - offer);
            }
        }
        served[j] = Some(cur);
    };

    while unconnected > 0 {
        // Earliest opening among closed facilities.
        let mut best_open: Option<(T, usize)> = None;
        for i in (0..m).filter(|&i| !is_open[i]) {
            let paid = base[i] + slope[i] * now;
            let t = if paid >= ufl.opening[i] {
                now
            } else if slope[i] > T::zero() {
                scalar::max(now, (ufl.opening[i] - base[i]) / slope[i])
            } else {
                continue;
            };
            if best_open.is_none_or(|(bt, _)| t < bt) {
                best_open = Some((t, i));
            }
        }
        let edge_time = edges.get(next_edge).map(|e| e.0);
        let take_edge = match (edge_time, best_open) {
            (Some(te), Some((to, _))) => te <= to,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!("some facility always becomes payable"),
        };

        if take_edge {
            let (t, i, j) = edges[next_edge];
            next_edge += 1;
            now = scalar::max(now, t);
            if served[j].is_some() {
                continue;
            }
            if is_open[i] {
                connect(j, c[i][j], &mut served, &mut base, &mut slope, &tight, &is_open);
                unconnected -= 1;
            } else {
                tight[i * n + j] = true;
                slope[i] += d[j];
                base[i] -= d[j] * c[i][j];
            }
        } else {
            let (t, i) = best_open.unwrap();
            now = t;
            is_open[i] = true;
            for j in 0..n {
                match served[j] {
                    None if tight[i * n + j] => {
                        connect(j, c[i][j], &mut served, &mut base, &mut slope, &tight, &is_open);
                        unconnected -= 1;
                    }
                    Some(cur) if c[i][j] < cur => {
                        connect(j, c[i][j], &mut served, &mut base, &mut slope, &tight, &is_open);
                    }
                    _ => {}
                }
            }
        }
    }

    let open: Vec<usize> = (0..m).filter(|&i| is_open[i]).collect();
    Ok(UflSolution::evaluate(ufl, open))
}

/// Exact optimum by enumerating every nonempty open set. Sets are scanned
/// from the full set downwards, so among equal costs larger sets win.
pub fn brute_force_ufl<T: Scalar>(ufl: &UflInstance<T>) -> Result<UflSolution<T>, UflError> {
    let m = ufl.num_facilities();
    if m == 0 {
        return Err(UflError::NoFacilities);
    }
    if m > BRUTE_FORCE_MAX_FACILITIES {
        return Err(UflError::TooLarge(m));
    }
    let mut best: Option<UflSolution<T>> = None;
    for mask in (1u32..(1 << m)).rev() {
        let open: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let sol = UflSolution::evaluate(ufl, open);
        if best.as_ref().is_none_or(|b| sol.total() < b.total()) {
            best = Some(sol);
        }
    }
    Ok(best.unwrap())
}
