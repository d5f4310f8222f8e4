//! Bounded-variable revised simplex with a product-form basis inverse.
//!
//! Minimizes `c·x` subject to sparse rows `a_i·x (<=|>=|=) b_i` and
//! `lower <= x <= upper`. A solved [`Simplex`] can take tightened bounds
//! and re-optimize from its last basis with the dual simplex.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::LpDimension("bound vectors differ from objective length"));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || !self.objective[j].is_finite() {
                return Err(Error::LpDimension("NaN or infinite coefficient"));
            }
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                return Err(Error::LpDimension("free variables are not supported"));
            }
            if l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::LpDimension("bound at the wrong infinity"));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(Error::LpDimension("non-finite right-hand side"));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(Error::LpDimension("row references a missing variable"));
                }
                if !a.is_finite() {
                    return Err(Error::LpDimension("non-finite matrix entry"));
                }
            }
        }
        Ok(())
    }

    /// Objective value of an arbitrary point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => libm::fabs(act - row.rhs),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub primal: f64,
    pub dual: f64,
    pub pivot: f64,
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { primal: 1e-9, dual: 1e-9, pivot: 1e-9, zero: 1e-13 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub tol: Tolerances,
    /// 0 means "derive from the problem size".
    pub max_iterations: usize,
    pub refactor_period: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), max_iterations: 0, refactor_period: 80, bland_after: 60 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row duals `y` with reduced costs `c - Aᵀy`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, Error> {
    solve_with(lp, LpOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: LpOptions) -> Result<LpSolution, Error> {
    let mut s = Simplex::new(lp, opts)?;
    Ok(s.solve())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
}

#[derive(Clone, Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
struct Factor {
    diag: Vec<f64>,
    etas: Vec<Eta>,
}

impl Factor {
    fn ftran(&self, v: &mut [f64]) {
        for (vi, d) in v.iter_mut().zip(&self.diag) {
            *vi /= d;
        }
        for eta in &self.etas {
            let t = v[eta.pos];
            if t != 0.0 {
                for &(i, e) in &eta.entries {
                    v[i] += e * t;
                }
                v[eta.pos] = eta.pivot * t;
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = eta.pivot * v[eta.pos];
            for &(i, e) in &eta.entries {
                s += e * v[i];
            }
            v[eta.pos] = s;
        }
        for (vi, d) in v.iter_mut().zip(&self.diag) {
            *vi /= d;
        }
    }

    fn push(&mut self, pos: usize, alpha: &[f64], zero: f64) {
        let ar = alpha[pos];
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && libm::fabs(*a) > zero)
            .map(|(i, a)| (i, -a / ar))
            .collect();
        self.etas.push(Eta { pos, pivot: 1.0 / ar, entries });
    }
}

/// Solver state that survives between solves, so bounds can be tightened and
/// the problem re-optimized from the previous basis.
#[derive(Clone, Debug)]
pub struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    b: Vec<f64>,
    slack_sign: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    factor: Factor,
    opts: LpOptions,
    first_artificial: usize,
    warm: bool,
    iterations: usize,
    price_start: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Infeasible,
    Limit,
}

impl Simplex {
    pub fn new(lp: &LinearProgram, opts: LpOptions) -> Result<Self, Error> {
        lp.validate()?;
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        // Merge duplicate entries inside a column.
        for col in cols.iter_mut() {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|next, prev| {
                if next.0 == prev.0 {
                    prev.1 += next.1;
                    true
                } else {
                    false
                }
            });
            col.retain(|e| e.1 != 0.0);
        }
        let mut cost = lp.objective.clone();
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut slack_sign = Vec::with_capacity(m);
        for (i, row) in lp.rows.iter().enumerate() {
            let (sign, up) = match row.sense {
                Sense::Le => (1.0, f64::INFINITY),
                Sense::Ge => (-1.0, f64::INFINITY),
                Sense::Eq => (1.0, 0.0),
            };
            slack_sign.push(sign);
            cols.push(vec![(i, sign)]);
            cost.push(0.0);
            lo.push(0.0);
            hi.push(up);
        }
        let total = cols.len();
        let mut s = Simplex {
            m,
            n,
            cols,
            cost,
            lo,
            hi,
            b: lp.rows.iter().map(|r| r.rhs).collect(),
            slack_sign,
            x: vec![0.0; total],
            state: vec![VarState::Lower; total],
            basis: vec![0; m],
            factor: Factor { diag: vec![1.0; m], etas: Vec::new() },
            opts,
            first_artificial: total,
            warm: false,
            iterations: 0,
            price_start: 0,
        };
        if s.opts.max_iterations == 0 {
            s.opts.max_iterations = 20 * (m + n) + 10_000;
        }
        Ok(s)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Cold solve from a crash basis.
    pub fn solve(&mut self) -> LpSolution {
        if (0..self.n).any(|j| self.lo[j] > self.hi[j] + self.opts.tol.primal) {
            self.warm = false;
            return self.finish(Status::Infeasible);
        }
        self.cold_start();
        let status = self.run_two_phase();
        self.finish(status)
    }

    /// Changes the bounds of structural variable `j` and re-optimizes from the
    /// current basis when it is still dual feasible.
    pub fn resolve_with_bounds(&mut self, j: usize, lower: f64, upper: f64) -> LpSolution {
        assert!(j < self.n, "variable index out of range");
        self.lo[j] = lower;
        self.hi[j] = upper;
        if lower > upper + self.opts.tol.primal {
            return self.finish(Status::Infeasible);
        }
        if !self.warm {
            return self.solve();
        }
        match self.state[j] {
            VarState::Basic(_) => {}
            VarState::Lower | VarState::Upper => {
                let target = match self.state[j] {
                    VarState::Lower if lower.is_finite() => lower,
                    VarState::Upper if upper.is_finite() => upper,
                    _ => return self.solve(),
                };
                let delta = target - self.x[j];
                if delta != 0.0 {
                    let mut alpha = self.column_ftran(j);
                    for a in alpha.iter_mut() {
                        *a *= delta;
                    }
                    for (p, a) in alpha.iter().enumerate() {
                        let v = self.basis[p];
                        self.x[v] -= a;
                    }
                    self.x[j] = target;
                }
            }
        }
        let status = match self.dual_simplex() {
            Outcome::Optimal => match self.primal(false) {
                Outcome::Optimal => Status::Optimal,
                Outcome::Unbounded => Status::Unbounded,
                Outcome::Infeasible => Status::Infeasible,
                Outcome::Limit => Status::IterationLimit,
            },
            Outcome::Infeasible => Status::Infeasible,
            Outcome::Unbounded => Status::Unbounded,
            Outcome::Limit => {
                return self.solve();
            }
        };
        self.finish(status)
    }

    fn cold_start(&mut self) {
        let total_struct = self.n + self.m;
        self.cols.truncate(total_struct);
        self.cost.truncate(total_struct);
        self.lo.truncate(total_struct);
        self.hi.truncate(total_struct);
        self.x.truncate(total_struct);
        self.state.truncate(total_struct);
        self.first_artificial = total_struct;
        self.factor = Factor { diag: vec![1.0; self.m], etas: Vec::new() };
        self.warm = false;
        self.price_start = 0;
        for j in 0..total_struct {
            let (state, val) = if self.lo[j].is_finite() {
                (VarState::Lower, self.lo[j])
            } else {
                (VarState::Upper, self.hi[j])
            };
            self.state[j] = state;
            self.x[j] = val;
        }
        // Residual of every row with all variables at a bound and slacks at zero.
        let mut resid = self.b.clone();
        for j in 0..self.n {
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        let mut singles: Vec<Vec<usize>> = vec![Vec::new(); self.m];
        for j in 0..self.n {
            if self.cols[j].len() == 1 {
                singles[self.cols[j][0].0].push(j);
            }
        }
        let tol = self.opts.tol.primal;
        for i in 0..self.m {
            let s = self.n + i;
            let sv = resid[i] * self.slack_sign[i];
            if sv >= self.lo[s] - tol && sv <= self.hi[s] + tol {
                self.make_basic_unit(i, s, self.slack_sign[i], sv);
                continue;
            }
            let mut placed = false;
            for &j in &singles[i] {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let a = self.cols[j][0].1;
                let v = (resid[i] + a * self.x[j]) / a;
                if v >= self.lo[j] - tol && v <= self.hi[j] + tol {
                    self.make_basic_unit(i, j, a, v);
                    placed = true;
                    break;
                }
            }
            if placed {
                continue;
            }
            let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
            let art = self.cols.len();
            self.cols.push(vec![(i, sign)]);
            self.cost.push(0.0);
            self.lo.push(0.0);
            self.hi.push(f64::INFINITY);
            self.x.push(0.0);
            self.state.push(VarState::Lower);
            self.make_basic_unit(i, art, sign, libm::fabs(resid[i]));
        }
    }

    fn make_basic_unit(&mut self, row: usize, var: usize, coef: f64, value: f64) {
        self.basis[row] = var;
        self.state[var] = VarState::Basic(row);
        self.factor.diag[row] = coef;
        self.x[var] = value;
    }

    fn run_two_phase(&mut self) -> Status {
        let has_art = self.cols.len() > self.first_artificial;
        if has_art {
            let saved = self.cost.clone();
            for (j, c) in self.cost.iter_mut().enumerate() {
                *c = if j >= self.first_artificial { 1.0 } else { 0.0 };
            }
            let out = self.primal(true);
            self.cost = saved;
            match out {
                Outcome::Limit => return Status::IterationLimit,
                Outcome::Unbounded | Outcome::Infeasible => return Status::Infeasible,
                Outcome::Optimal => {}
            }
            let infeas: f64 = (self.first_artificial..self.cols.len()).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
            if infeas > 1e-7 * scale {
                return Status::Infeasible;
            }
            for j in self.first_artificial..self.cols.len() {
                self.hi[j] = 0.0;
                if !matches!(self.state[j], VarState::Basic(_)) {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::Lower;
                }
            }
        }
        match self.primal(false) {
            Outcome::Optimal => {
                self.warm = true;
                Status::Optimal
            }
            Outcome::Unbounded => Status::Unbounded,
            Outcome::Infeasible => Status::Infeasible,
            Outcome::Limit => Status::IterationLimit,
        }
    }

    fn finish(&mut self, status: Status) -> LpSolution {
        if status != Status::Optimal {
            self.warm = false;
        }
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = (0..self.n).map(|j| self.cost[j] * x[j]).sum();
        let (duals, reduced_costs) = if status == Status::Optimal {
            let y = self.duals();
            let d = (0..self.n).map(|j| self.reduced_cost(j, &y)).collect();
            (y, d)
        } else {
            (Vec::new(), Vec::new())
        };
        LpSolution { status, x, objective, iterations: self.iterations, duals, reduced_costs }
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&v| self.cost[v]).collect();
        self.factor.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for &(i, a) in &self.cols[j] {
            d -= y[i] * a;
        }
        d
    }

    fn column_ftran(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for &(i, a) in &self.cols[j] {
            v[i] = a;
        }
        self.factor.ftran(&mut v);
        v
    }

    fn range(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    /// Rebuilds the product-form inverse for the current basis and recomputes
    /// basic values. Structurally dependent columns are swapped for slacks.
    fn reinvert(&mut self) {
        let zero = self.opts.tol.zero;
        let mut vars: Vec<usize> = self.basis.clone();
        vars.sort_by_key(|&v| (v < self.n, v));
        let mut taken = vec![false; self.m];
        let mut diag: Vec<f64> = self.slack_sign.clone();
        let mut new_basis: Vec<usize> = (0..self.m).map(|i| self.n + i).collect();
        let mut deferred = Vec::new();
        for &v in &vars {
            if self.cols[v].len() == 1 && !taken[self.cols[v][0].0] {
                let (i, a) = self.cols[v][0];
                taken[i] = true;
                diag[i] = a;
                new_basis[i] = v;
            } else {
                deferred.push(v);
            }
        }
        deferred.sort_by_key(|&v| (self.cols[v].len(), v));
        self.factor = Factor { diag, etas: Vec::new() };
        let mut dropped = Vec::new();
        for v in deferred {
            let alpha = self.column_ftran(v);
            let mut best: Option<(usize, f64)> = None;
            for (p, a) in alpha.iter().enumerate() {
                if !taken[p] && libm::fabs(*a) > self.opts.tol.pivot {
                    let better = match best {
                        None => true,
                        Some((_, b)) => libm::fabs(*a) > libm::fabs(b),
                    };
                    if better {
                        best = Some((p, *a));
                    }
                }
            }
            match best {
                Some((p, _)) => {
                    self.factor.push(p, &alpha, zero);
                    taken[p] = true;
                    new_basis[p] = v;
                }
                None => dropped.push(v),
            }
        }
        for v in dropped {
            let (st, val) = if self.lo[v].is_finite()
                && (!self.hi[v].is_finite()
                    || libm::fabs(self.x[v] - self.lo[v]) <= libm::fabs(self.x[v] - self.hi[v]))
            {
                (VarState::Lower, self.lo[v])
            } else {
                (VarState::Upper, self.hi[v])
            };
            self.state[v] = st;
            self.x[v] = val;
        }
        // Slacks that were basic but lost their position in favour of a
        // singleton structural must become nonbasic.
        let mut placed = vec![false; self.cols.len()];
        for &v in &new_basis {
            placed[v] = true;
        }
        for &v in &vars {
            if !placed[v] {
                if let VarState::Basic(_) = self.state[v] {
                    let (st, val) = if self.lo[v].is_finite() {
                        (VarState::Lower, self.lo[v])
                    } else {
                        (VarState::Upper, self.hi[v])
                    };
                    self.state[v] = st;
                    self.x[v] = val;
                }
            }
        }
        for (p, &v) in new_basis.iter().enumerate() {
            self.state[v] = VarState::Basic(p);
        }
        self.basis = new_basis;
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let mut r = self.b.clone();
        for j in 0..self.cols.len() {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    r[i] -= a * v;
                }
            }
        }
        self.factor.ftran(&mut r);
        for (p, &v) in self.basis.iter().enumerate() {
            self.x[v] = r[p];
        }
    }

    fn maybe_reinvert(&mut self) {
        if self.factor.etas.len() >= self.opts.refactor_period {
            self.reinvert();
        }
    }

    fn pivot(&mut self, q: usize, r: usize, alpha: &[f64], leave_state: VarState) {
        let leaving = self.basis[r];
        self.state[leaving] = leave_state;
        self.x[leaving] = match leave_state {
            VarState::Lower => self.lo[leaving],
            VarState::Upper => self.hi[leaving],
            VarState::Basic(_) => unreachable!(),
        };
        self.factor.push(r, alpha, self.opts.tol.zero);
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
    }

    fn eligible(&self, j: usize, d: f64, tol: f64) -> bool {
        match self.state[j] {
            VarState::Basic(_) => false,
            VarState::Lower => d < -tol && self.range(j) > 0.0,
            VarState::Upper => d > tol && self.range(j) > 0.0,
        }
    }

    fn price(&mut self, y: &[f64], bland: bool) -> Option<usize> {
        let total = self.cols.len();
        let tol = self.opts.tol.dual;
        if bland {
            return (0..total).find(|&j| self.eligible(j, self.reduced_cost(j, y), tol));
        }
        let chunk = (total / 8).max(256).min(total.max(1));
        let mut scanned = 0;
        let mut start = self.price_start % total.max(1);
        let mut best: Option<(usize, f64)> = None;
        while scanned < total {
            let end = (start + chunk).min(total);
            for j in start..end {
                let d = self.reduced_cost(j, y);
                if self.eligible(j, d, tol) {
                    let score = libm::fabs(d);
                    if best.map_or(true, |(_, s)| score > s) {
                        best = Some((j, score));
                    }
                }
            }
            scanned += end - start;
            start = if end == total { 0 } else { end };
            if best.is_some() {
                break;
            }
        }
        self.price_start = start;
        best.map(|b| b.0)
    }

    fn primal(&mut self, phase1: bool) -> Outcome {
        let tol = self.opts.tol;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::Limit;
            }
            self.maybe_reinvert();
            let y = self.duals();
            let q = match self.price(&y, bland) {
                Some(q) => q,
                None => {
                    if phase1 || self.factor.etas.is_empty() {
                        return Outcome::Optimal;
                    }
                    // Confirm optimality on a fresh factorization.
                    self.reinvert();
                    let y = self.duals();
                    match self.price(&y, bland) {
                        None => return Outcome::Optimal,
                        Some(_) => continue,
                    }
                }
            };
            self.iterations += 1;
            let alpha = self.column_ftran(q);
            let dir = if self.state[q] == VarState::Lower { 1.0 } else { -1.0 };
            // Harris two-pass ratio test; exact ties under Bland's rule.
            let htol = if bland { 0.0 } else { tol.primal };
            let mut theta_max = self.range(q);
            for (p, a) in alpha.iter().enumerate() {
                if libm::fabs(*a) <= tol.pivot {
                    continue;
                }
                let v = self.basis[p];
                let rate = dir * a;
                let lim = if rate > 0.0 {
                    (self.x[v] - self.lo[v] + htol) / rate
                } else {
                    (self.hi[v] - self.x[v] + htol) / -rate
                };
                if lim < theta_max {
                    theta_max = lim;
                }
            }
            if theta_max == f64::INFINITY {
                return Outcome::Unbounded;
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut best_key = 0.0f64;
            for (p, a) in alpha.iter().enumerate() {
                if libm::fabs(*a) <= tol.pivot {
                    continue;
                }
                let v = self.basis[p];
                let rate = dir * a;
                let lim = if rate > 0.0 {
                    (self.x[v] - self.lo[v]) / rate
                } else {
                    (self.hi[v] - self.x[v]) / -rate
                };
                if !lim.is_finite() || lim > theta_max {
                    continue;
                }
                let take = match leave {
                    None => true,
                    Some((bp, _)) => {
                        if bland {
                            v < self.basis[bp]
                        } else {
                            libm::fabs(*a) > best_key
                        }
                    }
                };
                if take {
                    leave = Some((p, lim.max(0.0)));
                    best_key = libm::fabs(*a);
                }
            }
            let flip = match leave {
                None => true,
                Some((_, t)) => self.range(q) <= t,
            };
            let theta = if flip { self.range(q) } else { leave.unwrap().1 };
            if theta <= tol.primal {
                degenerate += 1;
                if degenerate > self.opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            self.x[q] += dir * theta;
            for (p, a) in alpha.iter().enumerate() {
                if *a != 0.0 {
                    let v = self.basis[p];
                    self.x[v] -= dir * theta * a;
                }
            }
            if flip {
                self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            } else {
                let (r, _) = leave.unwrap();
                let rate = dir * alpha[r];
                let st = if rate > 0.0 { VarState::Lower } else { VarState::Upper };
                self.pivot(q, r, &alpha, st);
            }
        }
    }

    fn dual_simplex(&mut self) -> Outcome {
        let tol = self.opts.tol;
        let mut stall = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations || stall > 50 * (self.m + 10) {
                return Outcome::Limit;
            }
            self.maybe_reinvert();
            let mut leave: Option<(usize, f64, bool)> = None;
            for (p, &v) in self.basis.iter().enumerate() {
                let below = self.lo[v] - self.x[v];
                let above = self.x[v] - self.hi[v];
                if below > tol.primal && leave.map_or(true, |l| below > l.1) {
                    leave = Some((p, below, true));
                } else if above > tol.primal && leave.map_or(true, |l| above > l.1) {
                    leave = Some((p, above, false));
                }
            }
            let (r, _, to_lower) = match leave {
                None => return Outcome::Optimal,
                Some(l) => l,
            };
            self.iterations += 1;
            stall += 1;
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.factor.btran(&mut rho);
            let y = self.duals();
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut bound = f64::INFINITY;
            for j in 0..self.cols.len() {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) || self.range(j) <= 0.0 {
                    continue;
                }
                let mut arj = 0.0;
                for &(i, a) in &self.cols[j] {
                    arj += rho[i] * a;
                }
                if libm::fabs(arj) <= tol.pivot {
                    continue;
                }
                let ok = match (st, to_lower) {
                    (VarState::Lower, true) => arj < 0.0,
                    (VarState::Upper, true) => arj > 0.0,
                    (VarState::Lower, false) => arj > 0.0,
                    (VarState::Upper, false) => arj < 0.0,
                    _ => false,
                };
                if !ok {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let dabs = match st {
                    VarState::Lower => d.max(0.0),
                    _ => (-d).max(0.0),
                };
                let ratio_bound = (dabs + tol.dual) / libm::fabs(arj);
                if ratio_bound < bound {
                    bound = ratio_bound;
                }
                cands.push((j, dabs / libm::fabs(arj), arj));
            }
            if cands.is_empty() {
                return Outcome::Infeasible;
            }
            let mut q = cands[0];
            let mut found = false;
            for &c in &cands {
                if c.1 <= bound && (!found || libm::fabs(c.2) > libm::fabs(q.2)) {
                    q = c;
                    found = true;
                }
            }
            let (q, _, arq) = q;
            let alpha = self.column_ftran(q);
            let lv = self.basis[r];
            let target = if to_lower { self.lo[lv] } else { self.hi[lv] };
            let t = (self.x[lv] - target) / arq;
            self.x[q] += t;
            for (p, a) in alpha.iter().enumerate() {
                if *a != 0.0 {
                    let v = self.basis[p];
                    self.x[v] -= t * a;
                }
            }
            let st = if to_lower { VarState::Lower } else { VarState::Upper };
            self.pivot(q, r, &alpha, st);
        }
    }
}
