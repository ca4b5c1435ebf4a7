use super::{
    assemble_energy, max_flip_free_step, total_energy, ChartLayout, ConstraintSystem, ParamError, ParamState, PsdMode,
    Reduction,
};
use crate::sparse::{CscPattern, Ldlt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverConfig {
    /// stop when the Newton decrement drops below `tolerance * energy`
    pub tolerance: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub shrink: f64,
    /// fraction of the flip-free step bound actually used
    pub safety: f64,
    pub max_step: f64,
    pub psd: PsdMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: 50, armijo: 1e-4, shrink: 0.5, safety: 0.9, max_step: 1.0, psd: PsdMode::Clamp }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistortionStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl DistortionStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        DistortionStats {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / n,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// energy before the first and after every accepted step
    pub energies: Vec<f64>,
    pub max_residual: f64,
    pub distortion: DistortionStats,
    pub wall_time: f64,
    pub converged: bool,
    pub termination: Termination,
}

impl SolverReport {
    pub fn energy_csv(&self) -> String {
        let mut s = String::from("iteration,energy\n");
        for (i, e) in self.energies.iter().enumerate() {
            s.push_str(&format!("{i},{e}\n"));
        }
        s
    }
}

/// Chooses the translation gauge: one free x and one free y variable per part.
pub fn gauge_pins(layout: &ChartLayout, red: &Reduction) -> Vec<usize> {
    let n_parts = layout.charts.len();
    let mut pin_x = vec![None; n_parts];
    let mut pin_y = vec![None; n_parts];
    for (k, &v) in red.free.iter().enumerate() {
        let p = layout.vertex_part[v / 2];
        let slot = if v % 2 == 0 { &mut pin_x[p] } else { &mut pin_y[p] };
        if slot.is_none() {
            *slot = Some(k);
        }
    }
    let mut pins: Vec<usize> = pin_x.into_iter().chain(pin_y).flatten().collect();
    pins.sort_unstable();
    pins
}

/// Per-triangle map from local (6) variables to reduced unknowns, plus the
/// CSC slots of every local pair.
struct ReducedPattern {
    n: usize,
    pattern: CscPattern,
    /// reduced index of each z entry, None when pinned
    zmap: Vec<Option<usize>>,
    local: Vec<LocalMap>,
}

struct LocalMap {
    ids: Vec<usize>,
    /// (local id index, corner variable 0..6, coefficient)
    terms: Vec<(usize, usize, f64)>,
    slots: Vec<usize>,
}

impl ReducedPattern {
    fn build(faces: &[[usize; 3]], red: &Reduction, pins: &[usize]) -> Self {
        let mut zmap = vec![None; red.n_free()];
        let mut n = 0;
        for (k, z) in zmap.iter_mut().enumerate() {
            if pins.binary_search(&k).is_err() {
                *z = Some(n);
                n += 1;
            }
        }
        let mut local: Vec<LocalMap> = faces
            .par_iter()
            .map(|f| {
                let mut ids = Vec::new();
                let mut terms = Vec::new();
                for c in 0..6 {
                    let var = 2 * f[c / 2] + c % 2;
                    for &(z, coef) in &red.expr[var] {
                        let Some(r) = zmap[z] else { continue };
                        let li = match ids.iter().position(|&x| x == r) {
                            Some(i) => i,
                            None => {
                                ids.push(r);
                                ids.len() - 1
                            }
                        };
                        terms.push((li, c, coef));
                    }
                }
                LocalMap { ids, terms, slots: Vec::new() }
            })
            .collect();
        let entries = local.iter().flat_map(|l| {
            l.ids.iter().flat_map(move |&a| l.ids.iter().filter(move |&&b| b <= a).map(move |&b| (a, b)))
        });
        let pattern = CscPattern::from_entries(n, entries);
        local.par_iter_mut().for_each(|l| {
            let k = l.ids.len();
            l.slots = (0..k * k).map(|ij| pattern.slot(l.ids[ij / k], l.ids[ij % k]).unwrap()).collect();
        });
        ReducedPattern { n, pattern, zmap, local }
    }

    fn assemble(&self, blocks: &[super::Mat6]) -> Vec<f64> {
        let dense: Vec<Vec<f64>> = self
            .local
            .par_iter()
            .zip(blocks.par_iter())
            .map(|(l, h)| {
                let k = l.ids.len();
                // B: k x 6
                let mut b = vec![0.0; k * 6];
                for &(li, c, coef) in &l.terms {
                    b[li * 6 + c] += coef;
                }
                let mut bh = vec![0.0; k * 6];
                for i in 0..k {
                    for j in 0..6 {
                        bh[i * 6 + j] = (0..6).map(|m| b[i * 6 + m] * h[(m, j)]).sum();
                    }
                }
                let mut out = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        out[i * k + j] = (0..6).map(|m| bh[i * 6 + m] * b[j * 6 + m]).sum();
                    }
                }
                out
            })
            .collect();
        let mut vals = vec![0.0; self.pattern.nnz()];
        for (l, d) in self.local.iter().zip(&dense) {
            for (s, v) in l.slots.iter().zip(d) {
                vals[*s] += v;
            }
        }
        vals
    }
}

/// Minimizes the summed symmetric Dirichlet energy over the constraint null space.
/// `state` must be flip-free and satisfy the constraints.
pub fn solve(
    layout: &ChartLayout,
    state: &ParamState,
    sys: &ConstraintSystem,
    cfg: &SolverConfig,
) -> Result<(ParamState, SolverReport), ParamError> {
    let started = Instant::now();
    let red = sys.reduction.as_ref().ok_or_else(|| ParamError::Inconsistent("constraints were not eliminated".into()))?;
    let mut x = state.x();
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let r0 = sys.residual(&x);
    if r0 > 1e-8 * scale {
        return Err(ParamError::Infeasible(r0));
    }
    let flipped = state.flipped_count();
    if flipped > 0 {
        return Err(ParamError::Flipped(flipped));
    }
    let faces = &state.faces;
    let rest = &state.rest;
    let pins = gauge_pins(layout, red);
    let rp = ReducedPattern::build(faces, red, &pins);
    let mut fac = Ldlt::analyze(&rp.pattern);

    let mut z = red.restrict(&x);
    x = red.expand(&z);
    let mut energy = total_energy(faces, rest, &x);
    let mut energies = vec![energy];
    let mut max_residual = sys.residual(&x);
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let asm = assemble_energy(faces, rest, &x, cfg.psd).ok_or(ParamError::Flipped(1))?;
        let gz = red.pull_back(&asm.gradient);
        let mut g = vec![0.0; rp.n];
        for (k, r) in rp.zmap.iter().enumerate() {
            if let Some(r) = r {
                g[*r] = gz[k];
            }
        }
        let mut vals = rp.assemble(&asm.blocks);
        let mut shift = 0.0;
        let max_diag = (0..rp.n).map(|i| vals[rp.pattern.slot(i, i).unwrap()]).fold(0.0f64, f64::max);
        loop {
            if fac.factor(&vals).is_ok() {
                break;
            }
            let add = if shift == 0.0 { 1e-10 * max_diag.max(1e-300) } else { shift * 9.0 };
            for i in 0..rp.n {
                vals[rp.pattern.slot(i, i).unwrap()] += add;
            }
            shift += add;
            if shift > 1e6 * max_diag.max(1.0) {
                return Err(ParamError::Inconsistent("reduced Hessian could not be regularized".into()));
            }
        }
        let d: Vec<f64> = fac.solve(&g).iter().map(|v| -v).collect();
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if -slope <= cfg.tolerance * energy.abs() {
            termination = Termination::Converged;
            break;
        }
        let mut dz = vec![0.0; z.len()];
        for (k, r) in rp.zmap.iter().enumerate() {
            if let Some(r) = r {
                dz[k] = d[*r];
            }
        }
        let dx = red.expand(&dz);
        let mut alpha = max_flip_free_step(faces, &x, &dx, cfg.safety, cfg.max_step);
        let mut accepted = None;
        while alpha > 1e-16 {
            let zt: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + alpha * b).collect();
            let xt = red.expand(&zt);
            let et = total_energy(faces, rest, &xt);
            if et.is_finite() && et <= energy + cfg.armijo * alpha * slope {
                accepted = Some((zt, xt, et));
                break;
            }
            alpha *= cfg.shrink;
        }
        let Some((zt, xt, et)) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        z = zt;
        x = xt;
        energy = et;
        energies.push(energy);
        max_residual = max_residual.max(sys.residual(&x));
        iterations += 1;
    }

    let mut out = state.clone();
    out.set_x(&x);
    let distortion = DistortionStats::of(&out.distortions());
    let report = SolverReport {
        iterations,
        energies,
        max_residual,
        distortion,
        wall_time: started.elapsed().as_secs_f64(),
        converged: termination == Termination::Converged,
        termination,
    };
    Ok((out, report))
}
