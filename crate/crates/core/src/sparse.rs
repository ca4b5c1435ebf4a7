//! Sparse symmetric LDLᵀ factorization.
//!
//! Up-looking factorization driven by the elimination tree, with a
//! nested-dissection fill-reducing ordering built from BFS level sets.
//! The pattern is analysed once; numeric factorizations can be repeated
//! with new values on the same pattern.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

/// Symmetric sparsity pattern stored as full CSC (both triangles), rows sorted.
#[derive(Clone, Debug)]
pub struct CscPattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl CscPattern {
    /// Builds the symmetric closure of the given entries; diagonal always present.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (i, j) in entries {
            cols[j].push(i);
            if i != j {
                cols[i].push(j);
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        CscPattern { n, col_ptr, row_idx }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Index of entry (i, j) in the value array.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let col = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        col.binary_search(&i).ok().map(|k| self.col_ptr[j] + k)
    }

    pub fn mul(&self, values: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += values[p] * x[j];
            }
        }
        y
    }
}

/// Fill-reducing ordering: `perm[k]` is the original index eliminated k-th.
pub fn nested_dissection(pat: &CscPattern) -> Vec<usize> {
    let n = pat.n;
    let deg: Vec<usize> = (0..n).map(|j| pat.col_ptr[j + 1] - pat.col_ptr[j] - 1).collect();
    let avg = if n > 0 { deg.iter().sum::<usize>() as f64 / n as f64 } else { 0.0 };
    // very dense rows go last so they do not spoil the separators
    let dense_cut = (10.0 * avg).max(64.0) as usize;
    let dense: Vec<usize> = (0..n).filter(|&j| deg[j] > dense_cut).collect();

    let mut group = vec![0usize; n];
    for &d in &dense {
        group[d] = usize::MAX;
    }
    let mut order = Vec::with_capacity(n);
    let mut next_group = 1usize;
    let mut level = vec![usize::MAX; n];
    let all: Vec<usize> = (0..n).filter(|&j| group[j] == 0).collect();
    let mut stack: Vec<(Vec<usize>, bool)> = vec![(all, false)];
    // explicit stack of (subset, is_separator); separators are emitted after both halves
    while let Some((set, is_sep)) = stack.pop() {
        if is_sep || set.len() <= 64 {
            order.extend_from_slice(&set);
            continue;
        }
        let g = next_group;
        next_group += 1;
        for &v in &set {
            group[v] = g;
        }
        let comps = components(pat, &set, &group, g, &mut level);
        if comps.len() > 1 {
            for c in comps.into_iter().rev() {
                stack.push((c, false));
            }
            continue;
        }
        let start = pseudo_peripheral(pat, &set, &group, g, &mut level);
        let levels = bfs_levels(pat, start, &group, g, &mut level);
        for &v in &set {
            level[v] = usize::MAX;
        }
        if levels.len() < 3 {
            order.extend_from_slice(&set);
            continue;
        }
        let half = set.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (i, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = i.clamp(1, levels.len() - 2);
                break;
            }
        }
        let a: Vec<usize> = levels[..mid].concat();
        let b: Vec<usize> = levels[mid + 1..].concat();
        let sep = levels[mid].clone();
        // pop order: a, b, then separator
        stack.push((sep, true));
        stack.push((b, false));
        stack.push((a, false));
    }
    order.extend_from_slice(&dense);
    debug_assert_eq!(order.len(), n);
    order
}

fn components(pat: &CscPattern, set: &[usize], group: &[usize], g: usize, mark: &mut [usize]) -> Vec<Vec<usize>> {
    let mut comps = Vec::new();
    for &s in set {
        if mark[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = vec![s];
        mark[s] = id;
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            k += 1;
            for p in pat.col_ptr[v]..pat.col_ptr[v + 1] {
                let u = pat.row_idx[p];
                if group[u] == g && mark[u] == usize::MAX {
                    mark[u] = id;
                    comp.push(u);
                }
            }
        }
        comps.push(comp);
    }
    for &s in set {
        mark[s] = usize::MAX;
    }
    comps
}

fn bfs_levels(pat: &CscPattern, start: usize, group: &[usize], g: usize, mark: &mut [usize]) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![start]];
    mark[start] = 0;
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for p in pat.col_ptr[v]..pat.col_ptr[v + 1] {
                let u = pat.row_idx[p];
                if group[u] == g && mark[u] == usize::MAX {
                    mark[u] = levels.len();
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    levels
}

fn pseudo_peripheral(pat: &CscPattern, set: &[usize], group: &[usize], g: usize, mark: &mut [usize]) -> usize {
    let mut start = set[0];
    let mut depth = 0;
    for _ in 0..4 {
        let levels = bfs_levels(pat, start, group, g, mark);
        for &v in &set[..] {
            mark[v] = usize::MAX;
        }
        if levels.len() <= depth {
            break;
        }
        depth = levels.len();
        // smallest-degree node of the last level
        let last = levels.last().unwrap();
        start = *last
            .iter()
            .min_by_key(|&&v| (pat.col_ptr[v + 1] - pat.col_ptr[v], v))
            .unwrap();
    }
    start
}

/// Symbolic + numeric LDLᵀ of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Ldlt {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    pattern: CscPattern,
}

const NONE: usize = usize::MAX;

impl Ldlt {
    pub fn analyze(pattern: &CscPattern) -> Self {
        Self::analyze_with(pattern, nested_dissection(pattern))
    }

    pub fn analyze_with(pattern: &CscPattern, perm: Vec<usize>) -> Self {
        let n = pattern.n;
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in pattern.col_ptr[kk]..pattern.col_ptr[kk + 1] {
                let mut i = pinv[pattern.row_idx[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        Ldlt {
            n,
            perm,
            pinv,
            parent,
            lp,
            li: vec![0; nnz],
            lx: vec![0.0; nnz],
            d: vec![0.0; n],
            pattern: pattern.clone(),
        }
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// `values` are aligned with the analysed pattern.
    pub fn factor(&mut self, values: &[f64]) -> Result<(), SparseError> {
        let n = self.n;
        let pat = &self.pattern;
        let mut y = vec![0.0; n];
        let mut pattern_buf = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut max_d: f64 = 0.0;
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let kk = self.perm[k];
            for p in pat.col_ptr[kk]..pat.col_ptr[kk + 1] {
                let mut i = self.pinv[pat.row_idx[p]];
                if i <= k {
                    y[i] += values[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern_buf[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = self.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern_buf[top] = pattern_buf[len];
                    }
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern_buf[top];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = self.lp[i] + lnz[i];
                for p in self.lp[i]..p2 {
                    y[self.li[p]] -= self.lx[p] * yi;
                }
                let l_ki = yi / self.d[i];
                dk -= l_ki * yi;
                self.li[p2] = k;
                self.lx[p2] = l_ki;
                lnz[i] += 1;
                top += 1;
            }
            max_d = max_d.max(dk.abs());
            if !(dk > 1e-14 * max_d) || !dk.is_finite() {
                return Err(SparseError::NotPositiveDefinite { pivot: kk, value: dk });
            }
            self.d[k] = dk;
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }
}
