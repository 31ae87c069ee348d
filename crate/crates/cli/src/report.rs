//! Formatting shared by the text and JSON reports.

use nalgebra::DMatrix;
use serde_json::{json, Value};

use diffstab_core::linalg::{CMatrix, CVector};
use diffstab_core::ssreal::{StateSpace, Subspace};
use diffstab_core::C64;

/// A finished command: human-readable text and the machine report.
#[derive(Clone, Debug)]
pub struct Report {
    pub text: String,
    pub json: Value,
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

/// Short complex number for text output.
pub fn fmt_c(z: C64) -> String {
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{}", sig(re))
    } else if re == 0.0 {
        format!("{}i", sig(im))
    } else if im > 0.0 {
        format!("{}+{}i", sig(re), sig(im))
    } else {
        format!("{}-{}i", sig(re), sig(-im))
    }
}

/// Up to 6 significant digits without trailing zeros.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !(1e-4..1e6).contains(&x.abs()) {
        return format!("{x:.5e}");
    }
    let digits = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn fmt_list(zs: &[C64]) -> String {
    let parts: Vec<String> = zs.iter().map(|&z| fmt_c(z)).collect();
    format!("[{}]", parts.join(", "))
}

pub fn fmt_vec(v: &CVector) -> String {
    fmt_list(v.as_slice())
}

/// 1-based agent list.
pub fn fmt_agents(agents: &[usize]) -> String {
    let parts: Vec<String> = agents.iter().map(|i| (i + 1).to_string()).collect();
    parts.join(", ")
}

pub fn c(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn clist(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|&z| c(z)).collect())
}

pub fn cvec(v: &CVector) -> Value {
    clist(v.as_slice())
}

pub fn cmat(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| c(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn mat(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| json!((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()))
            .collect(),
    )
}

/// Basis vectors of a subspace, one per entry.
pub fn subspace(s: &Subspace) -> Value {
    let b = s.basis();
    Value::Array(
        (0..b.ncols())
            .map(|j| cvec(&b.column(j).into_owned()))
            .collect(),
    )
}

pub fn ss(s: &StateSpace) -> Value {
    json!({ "A": mat(s.a()), "B": mat(s.b()), "C": mat(s.c()), "D": mat(s.d()) })
}

pub fn fmt_matrix(m: &DMatrix<f64>, indent: &str) -> String {
    if m.nrows() == 0 || m.ncols() == 0 {
        return format!("{indent}[] ({}x{})\n", m.nrows(), m.ncols());
    }
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:>12}", sig(clean(m[(i, j)]))))
            .collect();
        out.push_str(&format!("{indent}{}\n", row.join(" ")));
    }
    out
}

pub fn fmt_cmatrix(m: &CMatrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:>14}", fmt_c(m[(i, j)])))
            .collect();
        out.push_str(&format!("{indent}{}\n", row.join(" ")));
    }
    out
}

pub fn fmt_ss(name: &str, s: &StateSpace) -> String {
    let mut out = format!(
        "{name}: order {}, {} inputs, {} outputs\n",
        s.order(),
        s.inputs(),
        s.outputs()
    );
    for (label, m) in [("A", s.a()), ("B", s.b()), ("C", s.c()), ("D", s.d())] {
        out.push_str(&format!("  {label} =\n"));
        out.push_str(&fmt_matrix(m, "    "));
    }
    out
}

/// `"1+2i"`, `"-0.5"`, `"3i"`, `"2-i"`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read {s:?} as a complex number (examples: 0, -1.5, 2+3i, -i)");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t
            .parse::<f64>()
            .map(|re| C64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}
