//! Exact two-phase simplex on a dense tableau. Bland's rule picks both the
//! entering and the leaving variable, so the method cannot cycle.

use num_traits::{One, Signed, Zero};

use super::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize ⟨objective, x⟩` subject to the constraints; variable `j` is
/// sign-free when `free[j]`, nonnegative otherwise.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub free: Vec<bool>,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            free: vec![false; num_vars],
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width mismatch");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn maximize(&mut self, objective: Vec<Rational>) {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
    }

    pub fn minimize(&mut self, objective: Vec<Rational>) {
        self.maximize(objective.into_iter().map(|c| -c).collect());
    }

    pub fn solve(&self) -> LpOutcome {
        // Column layout: one column per nonnegative variable, two per free
        // variable (x = x⁺ − x⁻), then slack/surplus, then artificials.
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.num_vars);
        let mut ncols = 0;
        for j in 0..self.num_vars {
            if self.free[j] {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                col_of.push((ncols, None));
                ncols += 1;
            }
        }
        let structural = ncols;

        let rows: Vec<(Vec<Rational>, Relation, Rational)> = self
            .constraints
            .iter()
            .map(|c| {
                let mut row = vec![Rational::zero(); structural];
                for (j, a) in c.coeffs.iter().enumerate() {
                    let (p, n) = col_of[j];
                    row[p] = a.clone();
                    if let Some(n) = n {
                        row[n] = -a;
                    }
                }
                let (mut row, mut rel, mut rhs) = (row, c.relation, c.rhs.clone());
                if rhs.is_negative() {
                    row.iter_mut().for_each(|a| *a = -a.clone());
                    rhs = -rhs;
                    rel = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                (row, rel, rhs)
            })
            .collect();

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let total = structural + n_slack + n_art;
        let width = total + 1;
        let mut t = Tableau {
            data: vec![Rational::zero(); m * width],
            width,
            basis: vec![0; m],
        };
        let mut next_slack = structural;
        let mut next_art = structural + n_slack;
        let first_art = next_art;
        for (i, (row, rel, rhs)) in rows.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                *t.at_mut(i, j) = a.clone();
            }
            *t.at_mut(i, total) = rhs.clone();
            match rel {
                Relation::Le => {
                    *t.at_mut(i, next_slack) = Rational::one();
                    t.basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    *t.at_mut(i, next_slack) = -Rational::one();
                    next_slack += 1;
                    *t.at_mut(i, next_art) = Rational::one();
                    t.basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    *t.at_mut(i, next_art) = Rational::one();
                    t.basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        // Phase 1: maximize −Σ artificials.
        if n_art > 0 {
            let mut cost = vec![Rational::zero(); total];
            for c in cost.iter_mut().skip(first_art) {
                *c = -Rational::one();
            }
            match t.optimize(&cost, total) {
                Phase::Optimal => {}
                Phase::Unbounded => unreachable!("phase one is bounded"),
            }
            if t.objective_value(&cost).is_negative() {
                return LpOutcome::Infeasible;
            }
            t.drive_out_artificials(first_art);
        }

        // Phase 2 on the structural + slack columns only.
        let mut cost = vec![Rational::zero(); total];
        for (j, c) in self.objective.iter().enumerate() {
            let (p, n) = col_of[j];
            cost[p] = c.clone();
            if let Some(n) = n {
                cost[n] = -c;
            }
        }
        match t.optimize(&cost, first_art) {
            Phase::Unbounded => LpOutcome::Unbounded,
            Phase::Optimal => {
                let mut values = vec![Rational::zero(); total];
                for (i, &b) in t.basis.iter().enumerate() {
                    values[b] = t.at(i, total).clone();
                }
                let x: Vec<Rational> = col_of
                    .iter()
                    .map(|&(p, n)| match n {
                        Some(n) => &values[p] - &values[n],
                        None => values[p].clone(),
                    })
                    .collect();
                let value = x
                    .iter()
                    .zip(&self.objective)
                    .fold(Rational::zero(), |acc, (a, c)| acc + a * c);
                LpOutcome::Optimal { x, value }
            }
        }
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau {
    data: Vec<Rational>,
    width: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.width + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        &mut self.data[i * self.width + j]
    }

    fn objective_value(&self, cost: &[Rational]) -> Rational {
        let rhs = self.rhs_col();
        (0..self.rows()).fold(Rational::zero(), |acc, i| {
            acc + &cost[self.basis[i]] * self.at(i, rhs)
        })
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        (0..self.rows()).fold(cost[j].clone(), |acc, i| {
            let a = self.at(i, j);
            if a.is_zero() {
                acc
            } else {
                acc - &cost[self.basis[i]] * a
            }
        })
    }

    /// Maximizes `cost` using only columns `< allowed` as entering candidates.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> Phase {
        loop {
            let entering = (0..allowed)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(cost, j).is_positive());
            let Some(e) = entering else {
                return Phase::Optimal;
            };
            let rhs = self.rhs_col();
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows() {
                let a = self.at(i, e);
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.at(i, rhs) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Phase::Unbounded;
            };
            self.pivot(r, e);
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = self.at(r, c).recip();
        for j in 0..w {
            let v = self.at(r, j) * &inv;
            *self.at_mut(r, j) = v;
        }
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.at(i, c).clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..w {
                let rv = self.at(r, j);
                if rv.is_zero() {
                    continue;
                }
                let v = self.at(i, j) - &f * rv;
                *self.at_mut(i, j) = v;
            }
        }
        self.basis[r] = c;
    }

    /// After a feasible phase one, pivot zero-valued artificials out of the
    /// basis; rows where that is impossible are redundant and dropped.
    fn drive_out_artificials(&mut self, first_art: usize) {
        let mut i = 0;
        while i < self.rows() {
            if self.basis[i] < first_art {
                i += 1;
                continue;
            }
            match (0..first_art).find(|&j| !self.at(i, j).is_zero()) {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    let w = self.width;
                    self.data.drain(i * w..(i + 1) * w);
                    self.basis.remove(i);
                }
            }
        }
    }
}
