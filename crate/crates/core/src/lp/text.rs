//! CPLEX LP text format, for inspecting a program with external tools.

use std::fmt::Write;

use super::{Comparator, LinearProgram, Sense};

/// Renders `lp` in CPLEX LP format. Variable and constraint names are
/// sanitised to the characters the format accepts.
pub fn to_lp_text(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp.variables().iter().map(|v| sanitize(&v.name)).collect();
    let mut out = String::new();

    out.push_str(match lp.sense() {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    let objective: Vec<(usize, f64)> =
        lp.variables().iter().enumerate().filter(|(_, v)| v.cost != 0.0).map(|(j, v)| (j, v.cost)).collect();
    let _ = writeln!(out, " obj: {}", linear_expr(&objective, &names));

    out.push_str("Subject To\n");
    for con in lp.constraints() {
        let op = match con.comparator {
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
        };
        let _ =
            writeln!(out, " {}: {} {} {}", sanitize(&con.label), linear_expr(con.terms(), &names), op, num(con.rhs));
    }

    out.push_str("Bounds\n");
    for (v, name) in lp.variables().iter().zip(&names) {
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => format!(" {name} free"),
            (true, true) if v.lower == v.upper => format!(" {name} = {}", num(v.lower)),
            (true, true) => format!(" {} <= {name} <= {}", num(v.lower), num(v.upper)),
            (true, false) if v.lower == 0.0 => continue,
            (true, false) => format!(" {name} >= {}", num(v.lower)),
            (false, true) => format!(" -inf <= {name} <= {}", num(v.upper)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

fn linear_expr(terms: &[(usize, f64)], names: &[String]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, &(j, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        if k == 0 {
            if a < 0.0 {
                s.push_str("- ");
            }
        } else {
            let _ = write!(s, " {sign} ");
        }
        let mag = a.abs();
        if mag == 1.0 {
            s.push_str(&names[j]);
        } else {
            let _ = write!(s, "{} {}", num(mag), names[j]);
        }
    }
    s
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn sanitize(name: &str) -> String {
    let mut s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "_.()".contains(c) { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, '_');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections_and_bounds() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_variable("d[L1,t1]", 0.0, 3.0, 12.0);
        let y = lp.add_variable("p", 0.0, f64::INFINITY, -5.0);
        let z = lp.free_variable("z", 0.0);
        lp.add_constraint("balance t1", [(x, 1.0), (y, -1.0), (z, 2.5)], Comparator::Eq, 0.0).unwrap();
        let text = to_lp_text(&lp);
        assert!(text.starts_with("Maximize\n obj: 12 d_L1_t1_ - 5 p\n"));
        assert!(text.contains(" balance_t1: d_L1_t1_ - p + 2.5 z = 0\n"));
        assert!(text.contains(" 0 <= d_L1_t1_ <= 3\n"));
        assert!(text.contains(" z free\n"));
        assert!(!text.contains(" p >="));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn names_never_start_with_a_digit() {
        assert_eq!(sanitize("1a"), "_1a");
        assert_eq!(sanitize(""), "_");
    }
}
