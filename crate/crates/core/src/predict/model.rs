use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::features::{Dataset, FeatureSpec};
use super::forest::{fit_forest, ForestModel, ForestParams, Node, Tree};
use super::linear::{fit_mlr, LinearModel};
use crate::error::{Error, Result};
use crate::patterns::Scaler;
use crate::textio::fmt_opt;

pub trait Regressor: Sync {
    fn predict_row(&self, x: &[f64]) -> f64;

    /// Row-parallel prediction; output order follows the rows of `x`.
    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.par_iter().map(|r| self.predict_row(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mlr,
    Forest(ForestParams),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Mlr => "mlr",
            ModelKind::Forest(_) => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Forest(ForestModel),
}

impl Regressor for Model {
    fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.predict_row(x),
            Model::Forest(m) => m.predict_row(x),
        }
    }
}

/// A fitted model with the feature spec and training-time scaler it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub spec: FeatureSpec,
    pub scaler: Scaler,
    pub model: Model,
}

impl Predictor {
    /// Fits the scaler on `ds` and trains on the scaled features.
    pub fn train(ds: &Dataset, kind: &ModelKind) -> Result<Self> {
        let scaler = Scaler::fit(&ds.x, &ds.spec.features)?;
        let z = scaler.transform(&ds.x);
        let model = match kind {
            ModelKind::Mlr => Model::Linear(fit_mlr(&z, &ds.y, &ds.spec.features)?),
            ModelKind::Forest(p) => Model::Forest(fit_forest(&z, &ds.y, p)?),
        };
        Ok(Predictor {
            spec: ds.spec.clone(),
            scaler,
            model,
        })
    }

    /// Predicts from raw (unscaled) features in spec order.
    pub fn predict_raw(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.model.predict(&self.scaler.transform(x))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.model {
            Model::Linear(_) => "mlr",
            Model::Forest(_) => "rf",
        }
    }

    /// Line-oriented text form; floats use shortest round-trip formatting, so
    /// a reloaded model predicts bit-identically.
    pub fn to_text(&self) -> String {
        let mut out = String::from("stormpanel-model,1\n");
        let join = |v: &[f64]| v.iter().map(|x| fmt_opt(Some(*x))).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "kind,{}", self.kind_name());
        let _ = writeln!(out, "target,{}", self.spec.target);
        let _ = writeln!(out, "features,{}", self.spec.features.join(","));
        let _ = writeln!(out, "mean,{}", join(&self.scaler.means));
        let _ = writeln!(out, "sd,{}", join(&self.scaler.sds));
        match &self.model {
            Model::Linear(m) => {
                let _ = writeln!(out, "intercept,{}", fmt_opt(Some(m.intercept)));
                let _ = writeln!(out, "coef,{}", join(&m.coefficients));
            }
            Model::Forest(f) => {
                let p = &f.params;
                let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "params,{},{},{},{},{}",
                    p.n_trees,
                    opt(p.max_depth),
                    p.min_samples_leaf,
                    opt(p.features_per_split),
                    p.seed
                );
                let _ = writeln!(out, "offset,{}", fmt_opt(Some(f.offset)));
                let _ = writeln!(out, "importance,{}", join(&f.importances));
                for (t, tree) in f.trees.iter().enumerate() {
                    let _ = writeln!(out, "tree,{t},{}", tree.nodes.len());
                    for node in &tree.nodes {
                        match node {
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => {
                                let _ = writeln!(out, "s,{feature},{},{left},{right}", fmt_opt(Some(*threshold)));
                            }
                            Node::Leaf { value } => {
                                let _ = writeln!(out, "l,{}", fmt_opt(Some(*value)));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cur = Cursor {
            lines: text.lines().filter(|l| !l.trim().is_empty()).collect(),
            pos: 0,
        };
        if cur.tagged("stormpanel-model")? != ["1"] {
            return Err(bad("unsupported version"));
        }
        let kind = cur.tagged("kind")?.join(",");
        let target = cur.tagged("target")?.join(",");
        let features: Vec<String> = cur.tagged("features")?.iter().map(|s| s.to_string()).collect();
        let spec = FeatureSpec::new(features.clone(), target)?;
        let scaler = Scaler {
            names: features,
            means: floats(&cur.tagged("mean")?)?,
            sds: floats(&cur.tagged("sd")?)?,
        };
        let p = spec.features.len();
        if scaler.means.len() != p || scaler.sds.len() != p {
            return Err(bad("scaler length"));
        }
        let model = match kind.as_str() {
            "mlr" => {
                let intercept = floats(&cur.tagged("intercept")?)?;
                let coefficients = floats(&cur.tagged("coef")?)?;
                if intercept.len() != 1 || coefficients.len() != p {
                    return Err(bad("coefficient count"));
                }
                Model::Linear(LinearModel {
                    names: spec.features.clone(),
                    intercept: intercept[0],
                    coefficients,
                })
            }
            "rf" => {
                let pr = cur.tagged("params")?;
                if pr.len() != 5 {
                    return Err(bad("params"));
                }
                let opt = |s: &str| if s.is_empty() { Ok(None) } else { uint(s).map(Some) };
                let params = ForestParams {
                    n_trees: uint(pr[0])?,
                    max_depth: opt(pr[1])?,
                    min_samples_leaf: uint(pr[2])?,
                    features_per_split: opt(pr[3])?,
                    seed: pr[4].parse().map_err(|_| bad("seed"))?,
                };
                params.validate(p)?;
                let offset = floats(&cur.tagged("offset")?)?
                    .first()
                    .copied()
                    .ok_or_else(|| bad("offset"))?;
                let importances = floats(&cur.tagged("importance")?)?;
                if importances.len() != p {
                    return Err(bad("importance length"));
                }
                let mut trees = Vec::with_capacity(params.n_trees);
                for t in 0..params.n_trees {
                    let head = cur.tagged("tree")?;
                    if head.len() != 2 || uint(head[0])? != t {
                        return Err(bad("tree header"));
                    }
                    let n_nodes = uint(head[1])?;
                    let mut nodes = Vec::with_capacity(n_nodes);
                    for _ in 0..n_nodes {
                        nodes.push(cur.node()?);
                    }
                    let tree = Tree { nodes };
                    check_tree(&tree, p).map_err(|e| bad(&format!("tree {t}: {e}")))?;
                    trees.push(tree);
                }
                Model::Forest(ForestModel {
                    params,
                    n_features: p,
                    offset,
                    trees,
                    importances,
                })
            }
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        if cur.pos != cur.lines.len() {
            return Err(bad("trailing lines"));
        }
        Ok(Predictor { spec, scaler, model })
    }
}

fn bad(what: &str) -> Error {
    Error::format(format!("model file: {what}"))
}

fn uint(s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad(&format!("bad integer `{s}`")))
}

fn floats(v: &[&str]) -> Result<Vec<f64>> {
    v.iter()
        .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`"))))
        .collect()
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self) -> Result<Vec<&'a str>> {
        let line = self.lines.get(self.pos).ok_or_else(|| bad("unexpected end"))?;
        self.pos += 1;
        Ok(line.split(',').collect())
    }

    fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let parts = self.take()?;
        if parts[0] != tag {
            return Err(bad(&format!("expected `{tag}`, found `{}`", parts[0])));
        }
        Ok(parts[1..].to_vec())
    }

    fn node(&mut self) -> Result<Node> {
        let parts = self.take()?;
        match (parts[0], parts.len()) {
            ("s", 5) => Ok(Node::Split {
                feature: uint(parts[1])?,
                threshold: floats(&parts[2..3])?[0],
                left: uint(parts[3])?,
                right: uint(parts[4])?,
            }),
            ("l", 2) => Ok(Node::Leaf {
                value: floats(&parts[1..2])?[0],
            }),
            _ => Err(bad(&format!("malformed node `{}`", parts.join(",")))),
        }
    }
}

fn check_tree(tree: &Tree, p: usize) -> std::result::Result<(), String> {
    let n = tree.nodes.len();
    if n == 0 {
        return Err("empty".into());
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        if seen[i] {
            return Err("node visited twice".into());
        }
        seen[i] = true;
        if let Node::Split {
            feature, left, right, ..
        } = tree.nodes[i]
        {
            if feature >= p || left >= n || right >= n {
                return Err(format!("node {i} out of range"));
            }
            stack.extend([left, right]);
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err("unreachable nodes".into())
    }
}
