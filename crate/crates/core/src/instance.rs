//! Problem instances: CLR instances, metric cost matrices, and the derived
//! facility-location instance.
//!
//! Vertices are indexed densely: depots occupy `0..m` in declaration order and
//! customers occupy `m..m+n`. External ids are kept only for I/O.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("triangle inequality violated on ({i}, {j}) via {l}: slack {slack}")]
    MetricViolation { i: usize, j: usize, l: usize, slack: f64 },
    #[error("io error: {0}")]
    Io(String),
}

fn parse_err(line: usize, reason: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Depot<T> {
    pub id: u64,
    pub opening_cost: T,
    /// Fixed cost per vehicle dispatched from this depot.
    pub vehicle_cost: T,
    pub position: Option<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Customer<T> {
    pub id: u64,
    pub demand: T,
    pub position: Option<Point>,
}

/// Dense symmetric cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    size: usize,
    entries: Vec<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                entries.push(f(i, j));
            }
        }
        CostMatrix { size, entries }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, InstanceError> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(InstanceError::Validation("cost matrix is not square".into()));
        }
        Ok(CostMatrix { size, entries: rows.into_iter().flatten().collect() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.size + j]
    }

    /// Checks non-negativity, zero diagonal, symmetry and the triangle
    /// inequality, all up to the scalar tolerance.
    pub fn check_metric(&self) -> Result<(), InstanceError> {
        let n = self.size;
        let tol = T::tolerance();
        for i in 0..n {
            if self.get(i, i).abs() > tol {
                return Err(InstanceError::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let c = self.get(i, j);
                if c < T::zero() {
                    return Err(InstanceError::Validation(format!("negative cost at ({i}, {j})")));
                }
                if (c - self.get(j, i)).abs() > tol {
                    return Err(InstanceError::Validation(format!("asymmetric cost at ({i}, {j})")));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let direct = self.get(i, j);
                for l in 0..n {
                    if l == i || l == j {
                        continue;
                    }
                    let via = self.get(i, l) + self.get(l, j);
                    if direct > via + tol {
                        return Err(InstanceError::MetricViolation { i, j, l, slack: (via - direct).as_f64() });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostSource<T> {
    Euclidean,
    /// Explicit matrix in internal vertex order (depots first).
    Explicit(CostMatrix<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Canonical,
    Barreto,
    Tuzun,
}

impl std::str::FromStr for InstanceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(InstanceFormat::Canonical),
            "barreto" => Ok(InstanceFormat::Barreto),
            "tuzun" => Ok(InstanceFormat::Tuzun),
            other => Err(format!("unknown instance format `{other}`")),
        }
    }
}

/// A validated capacitated location routing instance together with its
/// routing cost matrix `w` (vehicle fixed costs already folded in).
#[derive(Debug, Clone, PartialEq)]
pub struct ClrInstance<T> {
    pub name: String,
    depots: Vec<Depot<T>>,
    customers: Vec<Customer<T>>,
    capacity: T,
    source: CostSource<T>,
    w: CostMatrix<T>,
}

impl<T: Scalar> ClrInstance<T> {
    pub fn new(
        name: impl Into<String>,
        depots: Vec<Depot<T>>,
        customers: Vec<Customer<T>>,
        capacity: T,
        source: CostSource<T>,
    ) -> Result<Self, InstanceError> {
        let invalid = |msg: String| Err(InstanceError::Validation(msg));
        if depots.is_empty() {
            return invalid("instance needs at least one depot".into());
        }
        if customers.is_empty() {
            return invalid("instance needs at least one customer".into());
        }
        if !(capacity > T::zero()) {
            return invalid(format!("capacity must be positive, got {capacity}"));
        }
        let mut ids = HashSet::new();
        for d in &depots {
            if !ids.insert(d.id) {
                return invalid(format!("duplicate id {}", d.id));
            }
            if d.opening_cost < T::zero() || d.vehicle_cost < T::zero() {
                return invalid(format!("depot {} has a negative cost", d.id));
            }
        }
        for c in &customers {
            if !ids.insert(c.id) {
                return invalid(format!("duplicate id {}", c.id));
            }
            if !(c.demand > T::zero()) {
                return invalid(format!("customer {} has nonpositive demand {}", c.id, c.demand));
            }
        }
        let raw = raw_costs(&depots, &customers, &source)?;
        raw.check_metric()?;
        let w = shifted_costs(&raw, &depots);
        w.check_metric()?;
        Ok(ClrInstance { name: name.into(), depots, customers, capacity, source, w })
    }

    pub fn num_depots(&self) -> usize {
        self.depots.len()
    }

    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.depots.len() + self.customers.len()
    }

    pub fn depots(&self) -> &[Depot<T>] {
        &self.depots
    }

    pub fn customers(&self) -> &[Customer<T>] {
        &self.customers
    }

    pub fn capacity(&self) -> T {
        self.capacity
    }

    pub fn source(&self) -> &CostSource<T> {
        &self.source
    }

    /// Routing costs with vehicle fixed costs folded into depot edges.
    pub fn costs(&self) -> &CostMatrix<T> {
        &self.w
    }

    #[inline]
    pub fn cost(&self, a: usize, b: usize) -> T {
        self.w.get(a, b)
    }

    pub fn is_depot(&self, v: usize) -> bool {
        v < self.depots.len()
    }

    pub fn customer_vertex(&self, j: usize) -> usize {
        self.depots.len() + j
    }

    pub fn customer_vertices(&self) -> std::ops::Range<usize> {
        self.depots.len()..self.num_vertices()
    }

    /// Demand of a customer vertex (global index).
    pub fn demand(&self, v: usize) -> T {
        self.customers[v - self.depots.len()].demand
    }

    pub fn opening_cost(&self, u: usize) -> T {
        self.depots[u].opening_cost
    }

    pub fn total_demand(&self) -> T {
        self.customers.iter().fold(T::zero(), |acc, c| acc + c.demand)
    }

    pub fn vertex_id(&self, v: usize) -> u64 {
        if self.is_depot(v) {
            self.depots[v].id
        } else {
            self.customers[v - self.depots.len()].id
        }
    }

    /// Nearest depot among `candidates` to `v`; ties go to the lowest index.
    pub fn nearest_depot(&self, v: usize, candidates: &[usize]) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for &u in candidates {
            let c = self.cost(u, v);
            match best {
                Some((bu, bc)) if bc < c || (bc == c && bu < u) => {}
                _ => best = Some((u, c)),
            }
        }
        best
    }

    /// Converts scalars through `f64`.
    pub fn convert<S: Scalar>(&self) -> Result<ClrInstance<S>, InstanceError> {
        let cv = |x: T| S::of(x.as_f64());
        let depots = self
            .depots
            .iter()
            .map(|d| Depot {
                id: d.id,
                opening_cost: cv(d.opening_cost),
                vehicle_cost: cv(d.vehicle_cost),
                position: d.position,
            })
            .collect();
        let customers =
            self.customers.iter().map(|c| Customer { id: c.id, demand: cv(c.demand), position: c.position }).collect();
        let source = match &self.source {
            CostSource::Euclidean => CostSource::Euclidean,
            CostSource::Explicit(m) => CostSource::Explicit(CostMatrix::from_fn(m.size(), |i, j| cv(m.get(i, j)))),
        };
        ClrInstance::new(self.name.clone(), depots, customers, cv(self.capacity), source)
    }
}

fn raw_costs<T: Scalar>(
    depots: &[Depot<T>],
    customers: &[Customer<T>],
    source: &CostSource<T>,
) -> Result<CostMatrix<T>, InstanceError> {
    let n = depots.len() + customers.len();
    match source {
        CostSource::Explicit(m) => {
            if m.size() != n {
                return Err(InstanceError::Validation(format!(
                    "explicit matrix has size {} but instance has {n} vertices",
                    m.size()
                )));
            }
            Ok(m.clone())
        }
        CostSource::Euclidean => {
            let mut points = Vec::with_capacity(n);
            for (id, p) in depots.iter().map(|d| (d.id, d.position)).chain(customers.iter().map(|c| (c.id, c.position)))
            {
                match p {
                    Some(p) => points.push(p),
                    None => {
                        return Err(InstanceError::Validation(format!(
                            "vertex {id} has no coordinates and no explicit matrix was given"
                        )))
                    }
                }
            }
            Ok(CostMatrix::from_fn(n, |i, j| if i == j { T::zero() } else { T::of(points[i].distance(&points[j])) }))
        }
    }
}

fn shifted_costs<T: Scalar>(raw: &CostMatrix<T>, depots: &[Depot<T>]) -> CostMatrix<T> {
    let m = depots.len();
    let shift = |v: usize| if v < m { depots[v].vehicle_cost.half() } else { T::zero() };
    CostMatrix::from_fn(raw.size(), |i, j| if i == j { T::zero() } else { raw.get(i, j) + shift(i) + shift(j) })
}

/// Base costs (Euclidean or explicit) with half of each depot's vehicle
/// fixed cost added to every edge incident to that depot.
pub fn build_cost_matrix<T: Scalar>(inst: &ClrInstance<T>) -> Result<CostMatrix<T>, InstanceError> {
    let raw = raw_costs(&inst.depots, &inst.customers, &inst.source)?;
    let w = shifted_costs(&raw, &inst.depots);
    w.check_metric()?;
    Ok(w)
}

/// Base costs before the vehicle fixed-cost shift.
pub fn raw_cost_matrix<T: Scalar>(inst: &ClrInstance<T>) -> Result<CostMatrix<T>, InstanceError> {
    raw_costs(&inst.depots, &inst.customers, &inst.source)
}

/// Facility-location instance with connection costs `(2/k)·w(u, v)` and
/// opening costs `alpha·phi(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UflInstance<T> {
    /// `connection[u][j]`: cost of serving one unit of customer `j` from depot `u`.
    pub connection: Vec<Vec<T>>,
    pub opening: Vec<T>,
    pub demands: Vec<T>,
    pub alpha: T,
}

impl<T: Scalar> UflInstance<T> {
    pub fn new(connection: Vec<Vec<T>>, opening: Vec<T>, demands: Vec<T>) -> Self {
        UflInstance { connection, opening, demands, alpha: T::one() }
    }

    pub fn num_facilities(&self) -> usize {
        self.opening.len()
    }

    pub fn num_clients(&self) -> usize {
        self.demands.len()
    }
}

pub fn derive_ufl<T: Scalar>(inst: &ClrInstance<T>, alpha: T) -> Result<UflInstance<T>, InstanceError> {
    if !(alpha > T::zero()) {
        return Err(InstanceError::Validation(format!("alpha must be positive, got {alpha}")));
    }
    let scale = T::two() / inst.capacity();
    let m = inst.num_depots();
    let connection = (0..m).map(|u| inst.customer_vertices().map(|v| scale * inst.cost(u, v)).collect()).collect();
    let opening = inst.depots().iter().map(|d| alpha * d.opening_cost).collect();
    let demands = inst.customers().iter().map(|c| c.demand).collect();
    Ok(UflInstance { connection, opening, demands, alpha })
}

// ---------------------------------------------------------------------------
// Parsing and writing.

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Tokens { items, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.items.len() - self.pos
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(0, |t| t.0)
    }

    fn next_f64(&mut self, what: &str) -> Result<f64, InstanceError> {
        let line = self.line();
        let (_, tok) = self
            .items
            .get(self.pos)
            .ok_or_else(|| parse_err(line, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        let value: f64 = tok.parse().map_err(|_| parse_err(line, format!("expected {what}, found `{tok}`")))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("{what} is not finite")));
        }
        Ok(value)
    }

    fn next_count(&mut self, what: &str) -> Result<usize, InstanceError> {
        let line = self.line();
        let v = self.next_f64(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(parse_err(line, format!("{what} must be a non-negative integer")));
        }
        Ok(v as usize)
    }
}

pub fn parse_instance<T: Scalar>(path: &Path, format: InstanceFormat) -> Result<ClrInstance<T>, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_instance_str(&text, &name, format)
}

pub fn parse_instance_str<T: Scalar>(
    text: &str,
    name: &str,
    format: InstanceFormat,
) -> Result<ClrInstance<T>, InstanceError> {
    match format {
        InstanceFormat::Canonical => parse_canonical(text, name),
        InstanceFormat::Barreto => parse_coordinate_layout(text, name, format),
        InstanceFormat::Tuzun => parse_coordinate_layout(text, name, format),
    }
}

fn parse_canonical<T: Scalar>(text: &str, name: &str) -> Result<ClrInstance<T>, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "CLR" {
        return Err(parse_err(hline, "expected header `CLR <m> <n> <k>`"));
    }
    let count = |s: &str, what: &str| -> Result<usize, InstanceError> {
        s.parse::<usize>().map_err(|_| parse_err(hline, format!("{what} must be a non-negative integer")))
    };
    let m = count(h[1], "m")?;
    let n = count(h[2], "n")?;
    let k: f64 = h[3].parse().map_err(|_| parse_err(hline, "capacity must be a number"))?;

    let num = |line: usize, s: &str, what: &str| -> Result<f64, InstanceError> {
        s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| parse_err(line, format!("invalid {what} `{s}`")))
    };
    let coords = |line: usize, x: &str, y: &str| -> Result<Option<Point>, InstanceError> {
        match (x, y) {
            ("-", "-") => Ok(None),
            _ => Ok(Some(Point::new(num(line, x, "x")?, num(line, y, "y")?))),
        }
    };
    let id = |line: usize, s: &str| -> Result<u64, InstanceError> {
        s.parse::<u64>().map_err(|_| parse_err(line, format!("invalid id `{s}`")))
    };

    let mut depots = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(hline, format!("expected {m} depot lines")))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 6 || f[0] != "D" {
            return Err(parse_err(ln, "expected `D <id> <x> <y> <phi> <F>`"));
        }
        depots.push(Depot {
            id: id(ln, f[1])?,
            position: coords(ln, f[2], f[3])?,
            opening_cost: T::of(num(ln, f[4], "opening cost")?),
            vehicle_cost: T::of(num(ln, f[5], "vehicle cost")?),
        });
    }
    let mut customers = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(hline, format!("expected {n} customer lines")))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 || f[0] != "C" {
            return Err(parse_err(ln, "expected `C <id> <x> <y> <demand>`"));
        }
        customers.push(Customer {
            id: id(ln, f[1])?,
            position: coords(ln, f[2], f[3])?,
            demand: T::of(num(ln, f[4], "demand")?),
        });
    }

    let mut source = CostSource::Euclidean;
    if let Some((ln, l)) = lines.next() {
        if l != "MATRIX" {
            return Err(parse_err(ln, format!("unexpected content `{l}`")));
        }
        let size = m + n;
        let mut values = Vec::with_capacity(size * size);
        let mut last = ln;
        for (ln, l) in lines.by_ref() {
            last = ln;
            for tok in l.split_whitespace() {
                values.push(num(ln, tok, "matrix entry")?);
            }
        }
        if values.len() != size * size {
            return Err(parse_err(last, format!("MATRIX needs {} entries, found {}", size * size, values.len())));
        }
        // Rows and columns of the file are ordered by ascending vertex id.
        let mut order: Vec<(u64, usize)> = depots
            .iter()
            .map(|d| d.id)
            .chain(customers.iter().map(|c| c.id))
            .enumerate()
            .map(|(v, id)| (id, v))
            .collect();
        order.sort();
        let mut rank = vec![0; size];
        for (r, &(_, v)) in order.iter().enumerate() {
            rank[v] = r;
        }
        source = CostSource::Explicit(CostMatrix::from_fn(size, |i, j| T::of(values[rank[i] * size + rank[j]])));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after MATRIX"));
    }

    ClrInstance::new(name, depots, customers, T::of(k), source)
}

/// Whitespace-separated numeric layout used by the published benchmark
/// archives:
///
/// ```text
/// n
/// m
/// m lines: depot x y
/// n lines: customer x y
/// vehicle capacity k
/// m lines: depot capacity        (ignored; depots are uncapacitated)
/// n lines: customer demand
/// m lines: depot opening cost
/// vehicle fixed cost             (barreto: required, tuzun: optional)
/// cost-rounding flag             (barreto: required, ignored; tuzun: absent)
/// ```
///
/// Files whose token count does not match the chosen layout exactly are
/// rejected rather than guessed at.
fn parse_coordinate_layout<T: Scalar>(
    text: &str,
    name: &str,
    format: InstanceFormat,
) -> Result<ClrInstance<T>, InstanceError> {
    let mut t = Tokens::new(text);
    let n = t.next_count("customer count")?;
    let m = t.next_count("depot count")?;
    let core = 2 * m + 2 * n + 1 + m + n + m;
    let trailing = t
        .remaining()
        .checked_sub(core)
        .ok_or_else(|| parse_err(t.line(), format!("expected at least {core} more values for m={m}, n={n}")))?;
    let allowed: &[usize] = match format {
        InstanceFormat::Barreto => &[2],
        _ => &[0, 1],
    };
    if !allowed.contains(&trailing) {
        return Err(parse_err(
            t.line(),
            format!("ambiguous layout: {trailing} trailing values after the core data (allowed: {allowed:?})"),
        ));
    }

    let mut depot_pos = Vec::with_capacity(m);
    for _ in 0..m {
        depot_pos.push(Point::new(t.next_f64("depot x")?, t.next_f64("depot y")?));
    }
    let mut cust_pos = Vec::with_capacity(n);
    for _ in 0..n {
        cust_pos.push(Point::new(t.next_f64("customer x")?, t.next_f64("customer y")?));
    }
    let k = t.next_f64("vehicle capacity")?;
    for _ in 0..m {
        t.next_f64("depot capacity")?;
    }
    let mut demands = Vec::with_capacity(n);
    for _ in 0..n {
        demands.push(t.next_f64("demand")?);
    }
    let mut opening = Vec::with_capacity(m);
    for _ in 0..m {
        opening.push(t.next_f64("opening cost")?);
    }
    let route_cost = if trailing >= 1 { t.next_f64("vehicle fixed cost")? } else { 0.0 };
    if trailing == 2 {
        t.next_f64("rounding flag")?;
    }

    let depots = (0..m)
        .map(|u| Depot {
            id: (u + 1) as u64,
            opening_cost: T::of(opening[u]),
            vehicle_cost: T::of(route_cost),
            position: Some(depot_pos[u]),
        })
        .collect();
    let customers = (0..n)
        .map(|j| Customer { id: (m + j + 1) as u64, demand: T::of(demands[j]), position: Some(cust_pos[j]) })
        .collect();
    ClrInstance::new(name, depots, customers, T::of(k), CostSource::Euclidean)
}

fn fmt_point(p: Option<Point>) -> String {
    match p {
        Some(p) => format!("{} {}", p.x, p.y),
        None => "- -".to_string(),
    }
}

/// Serializes to the canonical text format. Output is byte-stable.
pub fn write_canonical<T: Scalar>(inst: &ClrInstance<T>) -> String {
    let mut out = String::new();
    if !inst.name.is_empty() {
        let _ = writeln!(out, "# {}", inst.name);
    }
    let _ = writeln!(out, "CLR {} {} {}", inst.num_depots(), inst.num_customers(), inst.capacity);
    for d in &inst.depots {
        let _ = writeln!(out, "D {} {} {} {}", d.id, fmt_point(d.position), d.opening_cost, d.vehicle_cost);
    }
    for c in &inst.customers {
        let _ = writeln!(out, "C {} {} {}", c.id, fmt_point(c.position), c.demand);
    }
    if let CostSource::Explicit(mat) = &inst.source {
        let mut order: Vec<(u64, usize)> = (0..inst.num_vertices()).map(|v| (inst.vertex_id(v), v)).collect();
        order.sort();
        let _ = writeln!(out, "MATRIX");
        for &(_, i) in &order {
            let row: Vec<String> = order.iter().map(|&(_, j)| mat.get(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depot(id: u64, x: f64, phi: f64, f: f64) -> Depot<f64> {
        Depot { id, opening_cost: phi, vehicle_cost: f, position: Some(Point::new(x, 0.0)) }
    }

    fn customer(id: u64, x: f64, y: f64, d: f64) -> Customer<f64> {
        Customer { id, demand: d, position: Some(Point::new(x, y)) }
    }

    #[test]
    fn three_four_five() {
        let text = "CLR 1 1 1\nD 1 0 0 0 0\nC 2 3 4 1\n";
        let inst: ClrInstance<f64> = parse_instance_str(text, "t", InstanceFormat::Canonical).unwrap();
        assert_eq!(inst.cost(0, 1), 5.0);
    }

    #[test]
    fn header_counts() {
        let mut text = String::from("# Gas67-22x5 shape\nCLR 5 22 4500\n");
        for u in 0..5 {
            text.push_str(&format!("D {} {} 0 10 0\n", u + 1, u));
        }
        for j in 0..22 {
            text.push_str(&format!("C {} {} 1 7\n", 100 + j, j));
        }
        let inst: ClrInstance<f64> = parse_instance_str(&text, "g", InstanceFormat::Canonical).unwrap();
        assert_eq!((inst.num_depots(), inst.num_customers(), inst.capacity()), (5, 22, 4500.0));
    }

    #[test]
    fn fixed_cost_shift() {
        let inst = ClrInstance::new(
            "f",
            vec![depot(1, 0.0, 0.0, 3.0)],
            vec![customer(2, 2.0, 0.0, 1.0)],
            5.0,
            CostSource::Euclidean,
        )
        .unwrap();
        assert_eq!(inst.cost(0, 1), 3.5);
        assert_eq!(raw_cost_matrix(&inst).unwrap().get(0, 1), 2.0);
    }

    #[test]
    fn unit_triangle() {
        let inst = ClrInstance::new(
            "e",
            vec![depot(1, 0.0, 0.0, 0.0)],
            vec![customer(2, 1.0, 0.0, 1.0), customer(3, 0.0, 1.0, 1.0)],
            5.0,
            CostSource::Euclidean,
        )
        .unwrap();
        assert_eq!(inst.cost(0, 1), 1.0);
        assert_eq!(inst.cost(0, 2), 1.0);
        assert_eq!(inst.cost(1, 2), 2f64.sqrt());
        assert_eq!(build_cost_matrix(&inst).unwrap(), raw_cost_matrix(&inst).unwrap());
    }

    #[test]
    fn explicit_triangle_violation() {
        let rows = vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 1.0], vec![10.0, 1.0, 0.0]];
        let err = ClrInstance::new(
            "bad",
            vec![Depot { id: 0, opening_cost: 0.0, vehicle_cost: 0.0, position: None }],
            vec![Customer { id: 1, demand: 1.0, position: None }, Customer { id: 2, demand: 1.0, position: None }],
            1.0,
            CostSource::Explicit(CostMatrix::from_rows(rows).unwrap()),
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::MetricViolation { i: 0, j: 2, l: 1, .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_demand_and_capacity() {
        let text = "CLR 1 1 1\nD 1 0 0 0 0\nC 2 3 4 0\n";
        assert!(matches!(
            parse_instance_str::<f64>(text, "t", InstanceFormat::Canonical),
            Err(InstanceError::Validation(_))
        ));
        let text = "CLR 1 1 0\nD 1 0 0 0 0\nC 2 3 4 1\n";
        assert!(matches!(
            parse_instance_str::<f64>(text, "t", InstanceFormat::Canonical),
            Err(InstanceError::Validation(_))
        ));
        let text = "CLR 1 1 1\nD 1 0 0 0 0\nC 1 3 4 1\n";
        assert!(parse_instance_str::<f64>(text, "t", InstanceFormat::Canonical).is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "CLR 1 1 1\n# note\nD 1 0 zero 0 0\nC 2 3 4 1\n";
        match parse_instance_str::<f64>(text, "t", InstanceFormat::Canonical) {
            Err(InstanceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_section_is_ordered_by_id() {
        // Customer id 1 sorts before the depot id 5.
        let text = "CLR 1 2 3\nD 5 - - 0 0\nC 1 - - 1\nC 7 - - 1\nMATRIX\n0 2 3\n2 0 4\n3 4 0\n";
        let inst: ClrInstance<f64> = parse_instance_str(text, "m", InstanceFormat::Canonical).unwrap();
        // internal: depot 0 (id 5), customer 1 (id 1), customer 2 (id 7)
        assert_eq!(inst.cost(0, 1), 2.0);
        assert_eq!(inst.cost(0, 2), 4.0);
        assert_eq!(inst.cost(1, 2), 3.0);
        let again: ClrInstance<f64> =
            parse_instance_str(&write_canonical(&inst), "m", InstanceFormat::Canonical).unwrap();
        assert_eq!(again.costs(), inst.costs());
    }

    fn barreto_text(n: usize, m: usize, k: f64, trailing: &str) -> String {
        let mut s = format!("{n}\n{m}\n\n");
        for u in 0..m {
            s += &format!("{} {}\n", 10 * u, 5);
        }
        s += "\n";
        for j in 0..n {
            s += &format!("{} {}\n", j, 2 * j % 7);
        }
        s += &format!("\n{k}\n\n");
        for _ in 0..m {
            s += "1000\n";
        }
        s += "\n";
        for j in 0..n {
            s += &format!("{}\n", 1 + j % 3);
        }
        s += "\n";
        for u in 0..m {
            s += &format!("{}\n", 100 + u);
        }
        s + trailing
    }

    #[test]
    fn barreto_layout() {
        let text = barreto_text(36, 5, 250.0, "\n0\n0\n");
        let inst: ClrInstance<f64> = parse_instance_str(&text, "Gas67-36x5", InstanceFormat::Barreto).unwrap();
        assert_eq!((inst.num_depots(), inst.num_customers(), inst.capacity()), (5, 36, 250.0));
        assert_eq!(inst.opening_cost(4), 104.0);
        assert_eq!(inst.demand(inst.customer_vertex(1)), 2.0);
        // Barreto files must carry both trailing values.
        assert!(parse_instance_str::<f64>(&barreto_text(36, 5, 250.0, ""), "x", InstanceFormat::Barreto).is_err());
    }

    #[test]
    fn tuzun_layout_route_cost() {
        let inst: ClrInstance<f64> =
            parse_instance_str(&barreto_text(4, 2, 10.0, "6\n"), "t", InstanceFormat::Tuzun).unwrap();
        assert_eq!(inst.depots()[0].vehicle_cost, 6.0);
        let plain: ClrInstance<f64> =
            parse_instance_str(&barreto_text(4, 2, 10.0, ""), "t", InstanceFormat::Tuzun).unwrap();
        assert_eq!(inst.cost(0, 2), plain.cost(0, 2) + 3.0);
        assert!(parse_instance_str::<f64>(&barreto_text(4, 2, 10.0, "1 2 3"), "t", InstanceFormat::Tuzun).is_err());
    }

    #[test]
    fn ufl_scaling() {
        let rows = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let inst = ClrInstance::new(
            "u",
            vec![Depot { id: 0, opening_cost: 3.0, vehicle_cost: 0.0, position: None }],
            vec![Customer { id: 1, demand: 1.0, position: None }],
            4.0,
            CostSource::Explicit(CostMatrix::from_rows(rows).unwrap()),
        )
        .unwrap();
        let ufl = derive_ufl(&inst, 1.461).unwrap();
        assert_eq!(ufl.connection[0][0], 1.0);
        assert!((ufl.opening[0] - 4.383).abs() < 1e-12);
        assert!(derive_ufl(&inst, 0.0).is_err());
    }

    #[test]
    fn ufl_scaling_large_capacity() {
        let rows = vec![vec![0.0, 80.0], vec![80.0, 0.0]];
        let inst = ClrInstance::new(
            "u",
            vec![Depot { id: 0, opening_cost: 100.0, vehicle_cost: 0.0, position: None }],
            vec![Customer { id: 1, demand: 1.0, position: None }],
            160.0,
            CostSource::Explicit(CostMatrix::from_rows(rows).unwrap()),
        )
        .unwrap();
        let ufl = derive_ufl(&inst, 0.4).unwrap();
        assert_eq!(ufl.connection[0][0], 1.0);
        assert_eq!(ufl.opening[0], 40.0);

        let ident = derive_ufl(&inst.convert::<f64>().unwrap(), 1.0).unwrap();
        assert_eq!(ident.opening[0], 100.0);
    }
}
