//! Text formats for pose graphs and trained kernels.
//!
//! Pose graph:
//!
//! ```text
//! posegraph v1 N C
//! x y z nx ny nz w f1 … fC      (N lines)
//! ```
//!
//! Kernel:
//!
//! ```text
//! mlp-kernel v1 layers 4 64 64 1 activation swish channels 1 1
//! ```
//!
//! followed by one number per line: the input shifts, the input scales, then
//! for each layer its weights row-major and its biases.
//!
//! Numbers are written in shortest round-trip form, so write-then-read is
//! bit exact. Blank lines and lines starting with `#` are skipped on read.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{PosePoint, UnitVec3, Vec3};
use crate::kernel::graph::PoseGraph;
use crate::kernel::mlp::{Activation, MlpKernel, Normalization};

/// Orientations whose norm is off by at most this are taken as they are.
pub const NORM_EXACT_TOL: f64 = 1e-10;
/// Orientations off by more than this are rejected.
pub const NORM_REJECT_TOL: f64 = 1e-6;

/// Non-fatal issue found while reading.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadWarning {
    pub line: usize,
    pub message: String,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, what: &str, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what} `{tok}` is not a count")))
}

pub fn write_pose_graph(graph: &PoseGraph) -> String {
    let mut out = String::new();
    writeln!(out, "posegraph v1 {} {}", graph.len(), graph.channels()).unwrap();
    for (i, p) in graph.nodes().iter().enumerate() {
        let mut fields: Vec<f64> = Vec::with_capacity(7 + graph.channels());
        fields.extend(p.position.iter());
        fields.extend(p.orientation.iter());
        fields.push(graph.weights()[i]);
        fields.extend(graph.feature(i));
        let line: Vec<String> = fields.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn read_pose_graph(text: &str) -> Result<(PoseGraph, Vec<ReadWarning>)> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("posegraph") || tokens.next() != Some("v1") {
        return Err(parse_err(hline, "expected header `posegraph v1 N C`"));
    }
    let n = parse_usize(tokens.next(), "node count", hline)?;
    let c = parse_usize(tokens.next(), "channel count", hline)?;
    if c == 0 {
        return Err(parse_err(hline, "channel count must be positive"));
    }
    if tokens.next().is_some() {
        return Err(parse_err(hline, "trailing tokens in header"));
    }

    let mut warnings = Vec::new();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * c);
    for k in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {n} node lines, found {k}")))?;
        let vals = line
            .split_whitespace()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != 7 + c {
            return Err(parse_err(
                ln,
                format!("expected {} fields, found {}", 7 + c, vals.len()),
            ));
        }
        let n_raw = Vec3::new(vals[3], vals[4], vals[5]);
        let defect = (n_raw.norm() - 1.0).abs();
        let orientation = if defect <= NORM_EXACT_TOL {
            UnitVec3::new_unchecked(n_raw)
        } else if defect <= NORM_REJECT_TOL {
            warnings.push(ReadWarning {
                line: ln,
                message: format!("orientation norm off by {defect:e}, renormalized"),
            });
            UnitVec3::new(n_raw).map_err(|e| parse_err(ln, e.to_string()))?
        } else {
            return Err(parse_err(
                ln,
                format!("orientation norm off by {defect:e}, not a unit vector"),
            ));
        };
        let position = Vec3::new(vals[0], vals[1], vals[2]);
        nodes.push(PosePoint::new(position, orientation).map_err(|e| parse_err(ln, e.to_string()))?);
        if vals[6] <= 0.0 {
            return Err(parse_err(ln, format!("weight {} must be positive", vals[6])));
        }
        weights.push(vals[6]);
        features.extend_from_slice(&vals[7..]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, format!("unexpected content after {n} node lines")));
    }
    let graph = PoseGraph::new(nodes, features, c, weights).map_err(|e| parse_err(hline, e.to_string()))?;
    Ok((graph, warnings))
}

pub fn write_kernel(kernel: &MlpKernel) -> String {
    let sizes: Vec<String> = kernel.layer_sizes().iter().map(|s| s.to_string()).collect();
    let mut out = String::new();
    writeln!(
        out,
        "mlp-kernel v1 layers {} activation {} channels {} {}",
        sizes.join(" "),
        kernel.activation.tag(),
        kernel.c_out,
        kernel.c_in
    )
    .unwrap();
    let norm = &kernel.normalization;
    for v in norm.shift.iter().chain(&norm.scale).chain(&kernel.parameters()) {
        writeln!(out, "{v}").unwrap();
    }
    out
}

pub fn read_kernel(text: &str) -> Result<MlpKernel> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || parse_err(hline, "expected `mlp-kernel v1 layers … activation TAG channels C_OUT C_IN`");
    if tokens.len() < 3 || tokens[0] != "mlp-kernel" || tokens[1] != "v1" || tokens[2] != "layers" {
        return Err(bad_header());
    }
    let act_pos = tokens.iter().position(|t| *t == "activation").ok_or_else(bad_header)?;
    let sizes = tokens[3..act_pos]
        .iter()
        .map(|t| parse_usize(Some(t), "layer size", hline))
        .collect::<Result<Vec<_>>>()?;
    let activation = tokens
        .get(act_pos + 1)
        .and_then(|t| Activation::from_tag(t))
        .ok_or_else(|| parse_err(hline, "unknown activation tag"))?;
    if tokens.get(act_pos + 2) != Some(&"channels") || tokens.len() != act_pos + 5 {
        return Err(bad_header());
    }
    let c_out = parse_usize(tokens.get(act_pos + 3).copied(), "output channels", hline)?;
    let c_in = parse_usize(tokens.get(act_pos + 4).copied(), "input channels", hline)?;
    let mut kernel = MlpKernel::zeros(&sizes, c_out, c_in).map_err(|e| parse_err(hline, e.to_string()))?;
    kernel.activation = activation;

    let n_in = sizes[0];
    let expected = 2 * n_in + kernel.num_parameters();
    let mut values = Vec::with_capacity(expected);
    let mut last_line = hline;
    for (ln, line) in lines {
        if values.len() == expected {
            return Err(parse_err(ln, format!("more than {expected} parameter lines")));
        }
        values.push(parse_f64(line, ln)?);
        last_line = ln;
    }
    if values.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} parameter lines, found {}", values.len()),
        ));
    }
    let normalization = Normalization {
        shift: values[..n_in].to_vec(),
        scale: values[n_in..2 * n_in].to_vec(),
    };
    if normalization.scale.iter().any(|s| *s == 0.0) {
        return Err(parse_err(hline, "zero normalization scale"));
    }
    kernel
        .set_parameters(&values[2 * n_in..])
        .map_err(|e| parse_err(hline, e.to_string()))?;
    MlpKernel::from_layers(kernel.layers, activation, normalization, c_out, c_in)
        .map_err(|e| parse_err(hline, e.to_string()))
}
