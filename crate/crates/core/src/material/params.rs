//! Plain-text parameter files: one `key = value` per line, `#` starts a comment.

use std::collections::BTreeSet;
use std::path::Path;

use super::coefficients::{IsotropicParams, LawKind};
use crate::error::{LabError, Result};

pub const KEYS: &[&str] = &[
    "dim",
    "rho",
    "a",
    "lambda",
    "mu",
    "beta",
    "delta",
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "m1",
    "m2",
    "friction",
    "kelvin_voigt",
    "kappa",
    "damping_law",
    "damping_p",
];

pub fn parse_params(text: &str) -> Result<IsotropicParams> {
    let mut p = IsotropicParams::default();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| LabError::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(LabError::Parse {
                line,
                msg: format!("unknown key `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(LabError::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        let num = || -> Result<f64> {
            let v: f64 = value.parse().map_err(|_| LabError::Parse {
                line,
                msg: format!("`{value}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(LabError::Parse {
                    line,
                    msg: format!("`{value}` is not finite"),
                });
            }
            Ok(v)
        };
        match key {
            "dim" => {
                p.dim = match value {
                    "1" => 1,
                    "2" => 2,
                    _ => {
                        return Err(LabError::Parse {
                            line,
                            msg: format!("dim must be 1 or 2, got `{value}`"),
                        })
                    }
                }
            }
            "rho" => p.rho = num()?,
            "a" => p.a = num()?,
            "lambda" => p.lambda = num()?,
            "mu" => p.mu = num()?,
            "beta" => p.beta = num()?,
            "delta" => p.delta = num()?,
            "a1" => p.a1 = num()?,
            "a2" => p.a2 = num()?,
            "a3" => p.a3 = num()?,
            "a4" => p.a4 = num()?,
            "a5" => p.a5 = num()?,
            "m1" => p.m1 = num()?,
            "m2" => p.m2 = num()?,
            "friction" => p.friction = num()?,
            "kelvin_voigt" => p.kelvin_voigt = num()?,
            "kappa" => p.kappa = num()?,
            "damping_p" => p.damping_p = num()?,
            "damping_law" => {
                p.damping_law = match value {
                    "linear" => LawKind::Linear,
                    "power" => LawKind::PowerSaturated,
                    _ => {
                        return Err(LabError::Parse {
                            line,
                            msg: format!("damping_law must be `linear` or `power`, got `{value}`"),
                        })
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(p.derive())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<IsotropicParams> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| LabError::io(&path, e))?;
    parse_params(&text)
}

pub fn format_params(p: &IsotropicParams) -> String {
    let law = match p.damping_law {
        LawKind::Linear => "linear",
        LawKind::PowerSaturated => "power",
    };
    let nums = [
        ("rho", p.rho),
        ("a", p.a),
        ("lambda", p.lambda),
        ("mu", p.mu),
        ("beta", p.beta),
        ("delta", p.delta),
        ("a1", p.a1),
        ("a2", p.a2),
        ("a3", p.a3),
        ("a4", p.a4),
        ("a5", p.a5),
        ("m1", p.m1),
        ("m2", p.m2),
        ("friction", p.friction),
        ("kelvin_voigt", p.kelvin_voigt),
        ("kappa", p.kappa),
        ("damping_p", p.damping_p),
    ];
    let mut out = format!("dim = {}\n", p.dim);
    for (k, v) in nums {
        out.push_str(&format!("{k} = {v:?}\n"));
    }
    out.push_str(&format!("damping_law = {law}\n"));
    out
}
