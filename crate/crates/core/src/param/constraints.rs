use super::{ChartLayout, ParamError};
use crate::mesh::SeamKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RowTag {
    Cyl { part: usize },
    Str { part: usize },
    Int { p: usize, q: usize },
}

/// Homogeneous row `sum coef * X[var] = 0`; X is (x0, y0, x1, y1, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub terms: Vec<(usize, f64)>,
    pub tag: RowTag,
}

impl ConstraintRow {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }
}

/// Null-space form of an eliminated system: `X = N z`. Every variable is either
/// free (its own z entry) or a combination of free variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub n_vars: usize,
    /// free variable of every z entry
    pub free: Vec<usize>,
    /// for every X entry, its expression in z
    pub expr: Vec<Vec<(usize, f64)>>,
    pub kept_rows: Vec<usize>,
    pub dropped_rows: Vec<usize>,
}

impl Reduction {
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.expr.iter().map(|e| e.iter().map(|&(k, c)| c * z[k]).sum()).collect()
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&v| x[v]).collect()
    }

    /// Nᵀ g
    pub fn pull_back(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free.len()];
        for (v, e) in self.expr.iter().enumerate() {
            for &(k, c) in e {
                out[k] += c * g[v];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub n_vars: usize,
    pub rows: Vec<ConstraintRow>,
    pub reduction: Option<Reduction>,
}

impl ConstraintSystem {
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.eval(x).abs()).fold(0.0, f64::max)
    }

    pub fn count(&self, pred: impl Fn(&RowTag) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.tag)).count()
    }

    /// Rows of the eliminated (full rank) system.
    pub fn kept(&self) -> Vec<&ConstraintRow> {
        match &self.reduction {
            Some(r) => r.kept_rows.iter().map(|&i| &self.rows[i]).collect(),
            None => self.rows.iter().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintOptions {
    pub interface: bool,
}

impl Default for ConstraintOptions {
    fn default() -> Self {
        ConstraintOptions { interface: true }
    }
}

pub fn build_constraints(layout: &ChartLayout, opts: ConstraintOptions) -> Result<ConstraintSystem, ParamError> {
    let n_vars = 2 * layout.n_vertices();
    let mut rows = Vec::new();
    let yv = |v: usize| 2 * v + 1;
    for seam in &layout.cut.seams {
        match seam.kind {
            SeamKind::Cylinder { part } => {
                // x^L_j - x^L_{j-1} = x^R_j - x^R_{j-1}
                for e in &seam.edges {
                    for c in 0..2 {
                        let t = |v: usize| 2 * v + c;
                        rows.push(ConstraintRow {
                            terms: vec![(t(e.left[1]), 1.0), (t(e.left[0]), -1.0), (t(e.right[1]), -1.0), (t(e.right[0]), 1.0)],
                            tag: RowTag::Cyl { part },
                        });
                    }
                }
            }
            SeamKind::Interface { p, q } => {
                if !opts.interface {
                    continue;
                }
                // rotation by π: x^P_r - x^P_{r-1} = -(x^Q_r - x^Q_{r-1})
                for e in &seam.edges {
                    if layout.vertex_part[e.left[0]] != p || layout.vertex_part[e.right[0]] != q {
                        return Err(ParamError::Inconsistent(format!("interface seam {p}-{q} has copies in wrong parts")));
                    }
                    for c in 0..2 {
                        let t = |v: usize| 2 * v + c;
                        rows.push(ConstraintRow {
                            terms: vec![(t(e.left[1]), 1.0), (t(e.left[0]), -1.0), (t(e.right[1]), 1.0), (t(e.right[0]), -1.0)],
                            tag: RowTag::Int { p, q },
                        });
                    }
                }
            }
            SeamKind::Path => return Err(ParamError::Inconsistent("unexpected plain seam".into())),
        }
    }
    for ch in &layout.charts {
        for line in [&ch.bottom, &ch.top] {
            for w in line.windows(2) {
                rows.push(ConstraintRow { terms: vec![(yv(w[1]), 1.0), (yv(w[0]), -1.0)], tag: RowTag::Str { part: ch.part } });
            }
        }
    }
    Ok(ConstraintSystem { n_vars, rows, reduction: None })
}

/// Gauss-Jordan elimination with substitution. Rows that reduce to zero are
/// dropped; the rest are independent. Pivots prefer variables that no other
/// expression references yet, which keeps the expressions short.
pub fn eliminate_redundant(sys: &ConstraintSystem) -> ConstraintSystem {
    let n = sys.n_vars;
    let mut dep: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
    let mut refs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut acc: Vec<(usize, f64)> = Vec::new();

    for (ri, row) in sys.rows.iter().enumerate() {
        acc.clear();
        for &(v, c) in &row.terms {
            match &dep[v] {
                Some(e) => acc.extend(e.iter().map(|&(u, cu)| (u, c * cu))),
                None => acc.push((v, c)),
            }
        }
        let mut terms = merge_terms(&mut acc);
        let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        terms.retain(|t| t.1.abs() > 1e-12 * scale.max(1.0));
        if terms.is_empty() {
            dropped.push(ri);
            continue;
        }
        let &(p, cp) = terms
            .iter()
            .min_by(|a, b| {
                refs[a.0]
                    .len()
                    .cmp(&refs[b.0].len())
                    .then(b.1.abs().total_cmp(&a.1.abs()))
                    .then(b.0.cmp(&a.0))
            })
            .unwrap();
        let expr_p: Vec<(usize, f64)> = terms.iter().filter(|t| t.0 != p).map(|&(u, c)| (u, -c / cp)).collect();

        let mut users = std::mem::take(&mut refs[p]);
        users.sort_unstable();
        users.dedup();
        for d in users {
            let Some(e) = dep[d].as_mut() else { continue };
            let Some(pos) = e.iter().position(|t| t.0 == p) else { continue };
            let k = e[pos].1;
            e.remove(pos);
            let mut a: Vec<(usize, f64)> = e.clone();
            a.extend(expr_p.iter().map(|&(u, c)| (u, k * c)));
            let mut merged = merge_terms(&mut a);
            merged.retain(|t| t.1.abs() > 1e-14);
            for &(u, _) in &merged {
                refs[u].push(d);
            }
            *e = merged;
        }
        for &(u, _) in &expr_p {
            refs[u].push(p);
        }
        dep[p] = Some(expr_p);
        kept.push(ri);
    }

    let free: Vec<usize> = (0..n).filter(|&v| dep[v].is_none()).collect();
    let mut zi = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        zi[v] = k;
    }
    let expr = (0..n)
        .map(|v| match &dep[v] {
            None => vec![(zi[v], 1.0)],
            Some(e) => e.iter().map(|&(u, c)| (zi[u], c)).collect(),
        })
        .collect();
    let mut out = sys.clone();
    out.reduction = Some(Reduction { n_vars: n, free, expr, kept_rows: kept, dropped_rows: dropped });
    out
}

fn merge_terms(acc: &mut [(usize, f64)]) -> Vec<(usize, f64)> {
    acc.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
    for &(v, c) in acc.iter() {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += c,
            _ => out.push((v, c)),
        }
    }
    out
}
