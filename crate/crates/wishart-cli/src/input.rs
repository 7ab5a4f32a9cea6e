use num_traits::{One, Zero};
use wishart::{Error, Integer, Rational, Result, SymMatrix};

/// `I` (needs `dim`), an inline JSON object, or a path to a JSON file `{"dim":r,"rows":[[...]]}`.
pub fn sym_matrix(arg: &str, dim: Option<usize>) -> Result<SymMatrix<f64>> {
    if arg == "I" {
        let r = dim.ok_or_else(|| Error::Invalid("the identity needs --dim".into()))?;
        return Ok(SymMatrix::identity(r));
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Invalid(format!("{arg}: {e}")))?
    };
    let m: SymMatrix<f64> = serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{arg}: {e}")))?;
    if let Some(r) = dim {
        if r != m.dim() {
            return Err(Error::Dimension { expected: r, got: m.dim() });
        }
    }
    Ok(m)
}

pub fn optional_matrix(arg: Option<&str>, dim: Option<usize>) -> Result<Option<SymMatrix<f64>>> {
    arg.map(|a| sym_matrix(a, dim)).transpose()
}

/// Inline JSON array or a path to one.
pub fn vector(arg: &str) -> Result<Vec<f64>> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Invalid(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{arg}: {e}")))
}

/// Integer, `a/b`, or a finite decimal such as `0.25`, read exactly.
pub fn rational(s: &str) -> Result<Rational> {
    let bad = || Error::Invalid(format!("not a rational number: {s}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: Integer = a.trim().parse().map_err(|_| bad())?;
        let b: Integer = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let digits = format!("{}{frac}", whole.trim_start_matches(['-', '+']));
        let num: Integer = digits.parse().map_err(|_| bad())?;
        let den = (0..frac.len()).fold(Integer::one(), |a, _| a * 10);
        let x = Rational::new(num, den);
        return Ok(if neg { -x } else { x });
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

/// Where to evaluate a trace polynomial.
#[derive(Clone, Debug)]
pub enum Eval {
    Symbolic,
    /// At `P = I`, with a symbolic or fixed dimension.
    Identity(Option<Rational>),
    Numeric(SymMatrix<f64>),
}

/// `--eval I --dim r` keeps `r` symbolic; `--dim 3` fixes it; `--eval <matrix>` evaluates numerically.
pub fn eval_target(eval: Option<&str>, dim: Option<&str>) -> Result<Eval> {
    let fixed = match dim {
        None | Some("r") => None,
        Some(d) => Some(d.parse::<usize>().map_err(|_| Error::Invalid(format!("--dim expects r or an integer, got {d}")))?),
    };
    match eval {
        None if dim.is_some() => Err(Error::Invalid("--dim needs --eval".into())),
        None => Ok(Eval::Symbolic),
        Some("I") => Ok(Eval::Identity(fixed.map(|r| Rational::from_integer(r.into())))),
        Some(path) => Ok(Eval::Numeric(sym_matrix(path, fixed)?)),
    }
}
