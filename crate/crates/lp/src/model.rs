
use crate::LpError;

/// Lower bound of a variable. Upper bounds are expressed as constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Role of a row in the node-improvement program. Other callers use `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    Improvement { state: usize },
    ActionNormalization,
    EtaSum { action: usize, observation: usize },
    Other,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub objective: f64,
    pub bound: VarBound,
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sorted by variable index, no explicit zeros, no duplicates.
    pub coefficients: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A linear program in the form `maximize c'x` subject to row constraints and
/// per-variable lower bounds.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, objective: f64, bound: VarBound) -> usize {
        self.variables.push(Variable {
            objective,
            bound,
            name: None,
        });
        self.variables.len() - 1
    }

    pub fn add_named_variable(
        &mut self,
        name: impl Into<String>,
        objective: f64,
        bound: VarBound,
    ) -> usize {
        let j = self.add_variable(objective, bound);
        self.variables[j].name = Some(name.into());
        j
    }

    /// Adds a row. Repeated variables are summed and zero coefficients dropped.
    pub fn add_constraint<I>(
        &mut self,
        coefficients: I,
        relation: Relation,
        rhs: f64,
        tag: ConstraintTag,
    ) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut raw: Vec<(usize, f64)> = coefficients.into_iter().collect();
        if !raw.windows(2).all(|w| w[0].0 < w[1].0) {
            raw.sort_by_key(|&(j, _)| j);
        }
        let mut coefficients: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
        for (j, a) in raw {
            match coefficients.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => coefficients.push((j, a)),
            }
        }
        coefficients.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
            tag,
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xj)| v.objective * xj)
            .sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (j, v) in self.variables.iter().enumerate() {
            if !v.objective.is_finite() {
                return Err(LpError::NonFiniteObjective { var: j });
            }
        }
        let n = self.variables.len();
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFiniteRow { row: i });
            }
            for &(j, a) in &row.coefficients {
                if j >= n {
                    return Err(LpError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFiniteRow { row: i });
                }
                if a == 0.0 {
                    return Err(LpError::ExplicitZero { row: i, var: j });
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or lower bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.variables.iter().zip(x) {
            if v.bound == VarBound::NonNegative {
                worst = worst.max(-xj);
            }
        }
        for row in &self.constraints {
            let act = row.activity(x);
            let viol = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Largest violation of dual feasibility for multipliers `y` (maximization
    /// convention: `y >= 0` on `<=` rows, `y <= 0` on `>=` rows).
    pub fn dual_residual(&self, y: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &yi) in self.constraints.iter().zip(y) {
            match row.relation {
                Relation::Le => worst = worst.max(-yi),
                Relation::Ge => worst = worst.max(yi),
                Relation::Eq => {}
            }
        }
        let mut column_price = vec![0.0; self.variables.len()];
        for (row, &yi) in self.constraints.iter().zip(y) {
            for &(j, a) in &row.coefficients {
                column_price[j] += a * yi;
            }
        }
        for (v, price) in self.variables.iter().zip(column_price) {
            let reduced = v.objective - price;
            match v.bound {
                VarBound::NonNegative => worst = worst.max(reduced),
                VarBound::Free => worst = worst.max(reduced.abs()),
            }
        }
        worst
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.constraints.iter().zip(y).map(|(r, &yi)| r.rhs * yi).sum()
    }
}
