use std::fmt::Write;

use crate::model::{ConstraintTag, LpModel, Relation, VarBound};

/// Renders the model in the CPLEX LP text format, for cross-checking with
/// external solvers.
pub fn write_lp_format(model: &LpModel) -> String {
    let name = |j: usize| -> String {
        model.variables()[j]
            .name
            .clone()
            .unwrap_or_else(|| format!("x{j}"))
    };
    let mut out = String::new();
    out.push_str("\\ generated by sbpi-lp\nMaximize\n obj:");
    let mut any = false;
    for (j, v) in model.variables().iter().enumerate() {
        if v.objective != 0.0 {
            write_term(&mut out, v.objective, &name(j));
            any = true;
        }
    }
    if !any {
        out.push_str(" 0 x0");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in model.constraints().iter().enumerate() {
        let label = match row.tag {
            ConstraintTag::Improvement { state } => format!("improve_s{state}"),
            ConstraintTag::ActionNormalization => "action_sum".to_string(),
            ConstraintTag::EtaSum {
                action,
                observation,
            } => format!("eta_a{action}_z{observation}"),
            ConstraintTag::Other => format!("c{i}"),
        };
        let _ = write!(out, " {label}:");
        if row.coefficients.is_empty() {
            out.push_str(" 0 x0");
        }
        for &(j, a) in &row.coefficients {
            write_term(&mut out, a, &name(j));
        }
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {:e}", row.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.variables().iter().enumerate() {
        if v.bound == VarBound::Free {
            let _ = writeln!(out, " {} free", name(j));
        }
    }
    out.push_str("End\n");
    out
}

fn write_term(out: &mut String, coef: f64, name: &str) {
    let sign = if coef < 0.0 { '-' } else { '+' };
    let _ = write!(out, " {sign} {:e} {name}", coef.abs());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections() {
        let mut m = LpModel::new();
        let e = m.add_named_variable("eps", 1.0, VarBound::Free);
        let p = m.add_variable(0.0, VarBound::NonNegative);
        m.add_constraint(
            [(e, 1.0), (p, -2.5)],
            Relation::Le,
            -1.0,
            ConstraintTag::Improvement { state: 0 },
        );
        m.add_constraint([(p, 1.0)], Relation::Eq, 1.0, ConstraintTag::ActionNormalization);
        let text = write_lp_format(&m);
        assert!(text.contains("Maximize\n obj: + 1e0 eps"));
        assert!(text.contains(" improve_s0: + 1e0 eps - 2.5e0 x1 <= -1e0"));
        assert!(text.contains(" action_sum: + 1e0 x1 = 1e0"));
        assert!(text.contains(" eps free"));
        assert!(text.ends_with("End\n"));
    }
}
