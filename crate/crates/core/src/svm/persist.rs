//! Line-oriented text format for trained models.
//!
//! ```text
//! svm-model v1
//! kernel quadratic coef0=1.0000000000000000e0
//! bias <b>
//! dim <d> nsv <m>
//! <alpha_y> <f1> ... <fd>        (m lines)
//! mean <d values>
//! scale <d values>
//! ```

use std::path::Path;

use super::{KernelSpec, SvmModel};
use crate::dataset::Standardizer;
use crate::io::{fmt_real, write_atomic};
use crate::{Error, Result};

const MAGIC: &str = "svm-model";
const VERSION: &str = "v1";

fn join_reals(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &SvmModel) -> String {
    let mut out = format!("{MAGIC} {VERSION}\n");
    out.push_str(&match model.kernel {
        KernelSpec::Linear => "kernel linear\n".to_string(),
        KernelSpec::Rbf { gamma } => format!("kernel rbf gamma={}\n", fmt_real(gamma)),
        KernelSpec::Quadratic { coef0 } => format!("kernel quadratic coef0={}\n", fmt_real(coef0)),
    });
    out.push_str(&format!("bias {}\n", fmt_real(model.bias)));
    out.push_str(&format!("dim {} nsv {}\n", model.dim(), model.support_vectors.len()));
    for (sv, c) in model.support_vectors.iter().zip(&model.coefficients) {
        out.push_str(&fmt_real(*c));
        if !sv.is_empty() {
            out.push(' ');
            out.push_str(&join_reals(sv));
        }
        out.push('\n');
    }
    out.push_str(&format!("mean {}\n", join_reals(&model.standardizer.mean)).replace(" \n", "\n"));
    out.push_str(&format!("scale {}\n", join_reals(&model.standardizer.scale)).replace(" \n", "\n"));
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Parse(format!("unexpected end of model file, expected {what}")))
    }
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn real(token: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| malformed(line, format!("invalid number {token:?}")))
}

fn reals(tokens: &[&str], expected: usize, line: usize) -> Result<Vec<f64>> {
    if tokens.len() != expected {
        return Err(malformed(
            line,
            format!("expected {expected} values, found {}", tokens.len()),
        ));
    }
    tokens.iter().map(|t| real(t, line)).collect()
}

fn keyed<'a>(line: usize, text: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some(key) {
        return Err(malformed(line, format!("expected `{key}`")));
    }
    Ok(tokens.collect())
}

pub fn model_from_str(text: &str) -> Result<SvmModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let (n, header) = lines.next("header")?;
    match header.split_whitespace().collect::<Vec<_>>()[..] {
        [MAGIC, VERSION] => {}
        [MAGIC, other] => return Err(Error::ModelVersion(other.to_string())),
        _ => return Err(malformed(n, "not an svm-model file")),
    }

    let (n, line) = lines.next("kernel")?;
    let kernel = match keyed(n, line, "kernel")?[..] {
        ["linear"] => KernelSpec::Linear,
        ["rbf", param] => match param.strip_prefix("gamma=") {
            Some(v) => KernelSpec::Rbf { gamma: real(v, n)? },
            None => return Err(malformed(n, "rbf kernel needs gamma=<g>")),
        },
        ["quadratic", param] => match param.strip_prefix("coef0=") {
            Some(v) => KernelSpec::Quadratic { coef0: real(v, n)? },
            None => return Err(malformed(n, "quadratic kernel needs coef0=<c>")),
        },
        _ => return Err(malformed(n, "unknown kernel")),
    };
    kernel.validate().map_err(|e| malformed(n, e))?;

    let (n, line) = lines.next("bias")?;
    let bias = reals(&keyed(n, line, "bias")?, 1, n)?[0];

    let (n, line) = lines.next("dim")?;
    let (dim, nsv) = match line.split_whitespace().collect::<Vec<_>>()[..] {
        ["dim", d, "nsv", m] => (
            d.parse::<usize>().map_err(|_| malformed(n, "invalid dim"))?,
            m.parse::<usize>().map_err(|_| malformed(n, "invalid nsv"))?,
        ),
        _ => return Err(malformed(n, "expected `dim <d> nsv <m>`")),
    };

    let mut support_vectors = Vec::with_capacity(nsv);
    let mut coefficients = Vec::with_capacity(nsv);
    for _ in 0..nsv {
        let (n, line) = lines.next("support vector")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.first().is_some_and(|t| *t == "mean") {
            return Err(malformed(n, format!("nsv says {nsv} support vectors, found fewer")));
        }
        let mut values = reals(&tokens, dim + 1, n)?;
        coefficients.push(values.remove(0));
        support_vectors.push(values);
    }

    let (n, line) = lines.next("mean")?;
    let tokens =
        keyed(n, line, "mean").map_err(|_| malformed(n, format!("expected `mean`; nsv says {nsv} support vectors")))?;
    let mean = reals(&tokens, dim, n)?;
    let (n, line) = lines.next("scale")?;
    let scale = reals(&keyed(n, line, "scale")?, dim, n)?;
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(malformed(n, "scale values must be positive"));
    }
    if let Some((n, extra)) = lines.inner.next() {
        if !extra.trim().is_empty() {
            return Err(malformed(n + 1, "trailing content"));
        }
    }

    Ok(SvmModel {
        support_vectors,
        coefficients,
        bias,
        kernel,
        standardizer: Standardizer { mean, scale },
    })
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model).as_bytes())
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SvmModel {
        SvmModel {
            support_vectors: vec![vec![0.1, -2.0 / 3.0], vec![1e-300, 7.25]],
            coefficients: vec![0.3, -0.3],
            bias: -1.0 / 7.0,
            kernel: KernelSpec::Quadratic { coef0: 1.0 },
            standardizer: Standardizer {
                mean: vec![0.5, -0.25],
                scale: vec![2.0, 1.0 / 3.0],
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for kernel in [
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma: 0.1 },
            KernelSpec::Quadratic { coef0: -0.5 },
        ] {
            let m = SvmModel { kernel, ..sample() };
            let text = model_to_string(&m);
            assert!(text.starts_with("svm-model v1\nkernel "));
            assert_eq!(model_from_str(&text).unwrap(), m);
        }
    }

    #[test]
    fn layout() {
        let text = model_to_string(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[1], "kernel quadratic coef0=1.0000000000000000e0");
        assert_eq!(lines[3], "dim 2 nsv 2");
        assert!(lines[6].starts_with("mean "));
        assert!(lines[7].starts_with("scale "));
    }

    #[test]
    fn version_and_shape_errors() {
        let text = model_to_string(&sample());
        let v2 = text.replacen("svm-model v1", "svm-model v2", 1);
        assert!(matches!(model_from_str(&v2), Err(Error::ModelVersion(v)) if v == "v2"));

        let more = text.replacen("nsv 2", "nsv 3", 1);
        assert!(model_from_str(&more).unwrap_err().to_string().contains("line 7"));
        let fewer = text.replacen("nsv 2", "nsv 1", 1);
        assert!(model_from_str(&fewer).unwrap_err().to_string().contains("line 6"));

        let garbage = text.replacen("bias ", "bias x", 1);
        assert!(model_from_str(&garbage).unwrap_err().to_string().starts_with("line 3"));
        assert!(model_from_str("id,label,breaths\n").is_err());
        assert!(model_from_str("").is_err());
    }
}
