use nalgebra::{Matrix4, Point3, SMatrix, SymmetricEigen, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type Vec6 = SMatrix<f64, 6, 1>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Rest triangle embedded isometrically in 2D, stored as `Dm^-1` and its 3D area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestTriangle {
    pub inv: [[f64; 2]; 2],
    pub area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PsdMode {
    /// clamp the eigenvalues of each triangle Hessian
    #[default]
    Clamp,
    /// use the exact (possibly indefinite) Hessian
    None,
}

impl RestTriangle {
    pub fn from_points(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Self {
        let e1 = b - a;
        let e2 = c - a;
        let l1 = e1.norm();
        let x2 = e2.dot(&e1) / l1;
        let y2 = e1.cross(&e2).norm() / l1;
        Self::from_2d([l1, 0.0], [x2, y2])
    }

    /// Rest shape given by two edge vectors from the first corner (positively oriented).
    pub fn from_2d(e1: [f64; 2], e2: [f64; 2]) -> Self {
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let inv = [[e2[1] / det, -e2[0] / det], [-e1[1] / det, e1[0] / det]];
        RestTriangle { inv, area: 0.5 * det.abs() }
    }

    /// Per-vertex gradient rows: J[r][c] = sum_v u_v[r] * g[v][c].
    fn g(&self) -> [[f64; 2]; 3] {
        let m = &self.inv;
        [[-(m[0][0] + m[1][0]), -(m[0][1] + m[1][1])], [m[0][0], m[0][1]], [m[1][0], m[1][1]]]
    }

    pub fn jacobian(&self, u0: &[f64; 2], u1: &[f64; 2], u2: &[f64; 2]) -> [[f64; 2]; 2] {
        let g = self.g();
        let u = [u0, u1, u2];
        let mut j = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] = (0..3).map(|v| u[v][r] * g[v][c]).sum();
            }
        }
        j
    }

    /// σ1² + σ2² + σ1⁻² + σ2⁻²; infinite when flipped or degenerate.
    pub fn distortion(&self, u0: &[f64; 2], u1: &[f64; 2], u2: &[f64; 2]) -> f64 {
        let j = self.jacobian(u0, u1, u2);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det > 0.0) {
            return f64::INFINITY;
        }
        let fro = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
        fro * (1.0 + 1.0 / (det * det))
    }

    /// Area-weighted energy, gradient and Hessian with respect to (u0x, u0y, u1x, u1y, u2x, u2y).
    pub fn energy_derivatives(
        &self,
        u0: &[f64; 2],
        u1: &[f64; 2],
        u2: &[f64; 2],
        psd: PsdMode,
    ) -> Option<(f64, Vec6, Mat6)> {
        let j = self.jacobian(u0, u1, u2);
        let jv = Vector4::new(j[0][0], j[0][1], j[1][0], j[1][1]);
        let d = jv[0] * jv[3] - jv[1] * jv[2];
        if !(d > 0.0) {
            return None;
        }
        let a = jv.norm_squared();
        let dd = Vector4::new(jv[3], -jv[2], -jv[1], jv[0]);
        let id2 = 1.0 / (d * d);
        let id3 = id2 / d;
        let id4 = id2 * id2;
        let e = a * (1.0 + id2);
        let grad = jv * (2.0 * (1.0 + id2)) - dd * (2.0 * a * id3);
        let mut hd = Matrix4::zeros();
        hd[(0, 3)] = 1.0;
        hd[(3, 0)] = 1.0;
        hd[(1, 2)] = -1.0;
        hd[(2, 1)] = -1.0;
        let mut h = Matrix4::identity() * (2.0 * (1.0 + id2)) - (jv * dd.transpose() + dd * jv.transpose()) * (4.0 * id3)
            + dd * dd.transpose() * (6.0 * a * id4)
            - hd * (2.0 * a * id3);
        if psd == PsdMode::Clamp {
            h = project_psd(h, 1e-9);
        }
        // map j-space to vertex space
        let g = self.g();
        let mut amat = SMatrix::<f64, 4, 6>::zeros();
        for r in 0..2 {
            for c in 0..2 {
                for v in 0..3 {
                    amat[(2 * r + c, 2 * v + r)] = g[v][c];
                }
            }
        }
        let w = self.area;
        Some((w * e, amat.transpose() * grad * w, amat.transpose() * h * amat * w))
    }
}

pub fn project_psd(h: Matrix4<f64>, eps: f64) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(h);
    if eig.eigenvalues.iter().all(|&l| l >= eps) {
        return h;
    }
    let l = eig.eigenvalues.map(|x| x.max(eps));
    eig.eigenvectors * Matrix4::from_diagonal(&l) * eig.eigenvectors.transpose()
}

/// Triangle distortion from a 3D rest triangle and a 2D image.
pub fn triangle_distortion(rest: [Point3<f64>; 3], uv: [[f64; 2]; 3]) -> f64 {
    RestTriangle::from_points(&rest[0], &rest[1], &rest[2]).distortion(&uv[0], &uv[1], &uv[2])
}

/// Total energy sum_t A_t D_t; infinite if any triangle is flipped.
/// Per-triangle terms are computed in parallel and summed in face order.
pub fn total_energy(faces: &[[usize; 3]], rest: &[RestTriangle], x: &[f64]) -> f64 {
    let terms: Vec<f64> = faces
        .par_iter()
        .zip(rest.par_iter())
        .map(|(f, r)| {
            let p = |v: usize| [x[2 * v], x[2 * v + 1]];
            r.area * r.distortion(&p(f[0]), &p(f[1]), &p(f[2]))
        })
        .collect();
    terms.iter().sum()
}

/// Energy, dense gradient, and Hessian as per-triangle 6x6 blocks.
pub struct Assembled {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub blocks: Vec<Mat6>,
}

pub fn assemble_energy(faces: &[[usize; 3]], rest: &[RestTriangle], x: &[f64], psd: PsdMode) -> Option<Assembled> {
    let local: Vec<Option<(f64, Vec6, Mat6)>> = faces
        .par_iter()
        .zip(rest.par_iter())
        .map(|(f, r)| {
            let p = |v: usize| [x[2 * v], x[2 * v + 1]];
            r.energy_derivatives(&p(f[0]), &p(f[1]), &p(f[2]), psd)
        })
        .collect();
    let mut energy = 0.0;
    let mut gradient = vec![0.0; x.len()];
    let mut blocks = Vec::with_capacity(faces.len());
    for (f, l) in faces.iter().zip(local) {
        let (e, g, h) = l?;
        energy += e;
        for k in 0..3 {
            gradient[2 * f[k]] += g[2 * k];
            gradient[2 * f[k] + 1] += g[2 * k + 1];
        }
        blocks.push(h);
    }
    Some(Assembled { energy, gradient, blocks })
}

/// Largest step α ≤ max_step keeping every triangle positively oriented:
/// `safety` times the smallest positive root of det(Ds + α dDs) = 0.
pub fn max_flip_free_step(faces: &[[usize; 3]], x: &[f64], dir: &[f64], safety: f64, max_step: f64) -> f64 {
    let roots: Vec<f64> = faces
        .par_iter()
        .map(|f| {
            let p = |v: usize, arr: &[f64]| [arr[2 * v], arr[2 * v + 1]];
            let (a, b, c) = (p(f[0], x), p(f[1], x), p(f[2], x));
            let (da, db, dc) = (p(f[0], dir), p(f[1], dir), p(f[2], dir));
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - a[0], c[1] - a[1]];
            let d1 = [db[0] - da[0], db[1] - da[1]];
            let d2 = [dc[0] - da[0], dc[1] - da[1]];
            let cross = |u: [f64; 2], v: [f64; 2]| u[0] * v[1] - u[1] * v[0];
            // det(e + α d) = qa α² + qb α + qc
            let qa = cross(d1, d2);
            let qb = cross(e1, d2) + cross(d1, e2);
            let qc = cross(e1, e2);
            smallest_positive_root(qa, qb, qc)
        })
        .collect();
    let t = roots.iter().copied().fold(f64::INFINITY, f64::min);
    if t.is_finite() {
        (safety * t).min(max_step)
    } else {
        max_step
    }
}

pub fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return f64::INFINITY;
    }
    let (a, b, c) = (a / scale, b / scale, c / scale);
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if a.abs() < 1e-14 {
        if b.abs() > 0.0 {
            consider(-c / b);
        }
        return best;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return best;
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    if q != 0.0 {
        consider(q / a);
        consider(c / q);
    } else {
        consider(-b / (2.0 * a));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rest() -> RestTriangle {
        RestTriangle::from_2d([1.0, 0.0], [0.3, 0.8])
    }

    #[test]
    fn isometry_gives_four() {
        let r = rest();
        let d = r.distortion(&[0.0, 0.0], &[1.0, 0.0], &[0.3, 0.8]);
        assert!((d - 4.0).abs() < 1e-12);
        // rotated and translated
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = |p: [f64; 2]| [c * p[0] - s * p[1] + 5.0, s * p[0] + c * p[1] - 2.0];
        let d = r.distortion(&rot([0.0, 0.0]), &rot([1.0, 0.0]), &rot([0.3, 0.8]));
        assert!((d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn scale_and_stretch() {
        let r = rest();
        assert!((r.distortion(&[0.0, 0.0], &[2.0, 0.0], &[0.6, 1.6]) - 8.5).abs() < 1e-12);
        assert!((r.distortion(&[0.0, 0.0], &[2.0, 0.0], &[0.6, 0.8]) - 6.25).abs() < 1e-12);
    }

    #[test]
    fn flipped_is_infinite() {
        let r = rest();
        assert!(r.distortion(&[0.0, 0.0], &[1.0, 0.0], &[0.3, -0.8]).is_infinite());
        assert!(r.energy_derivatives(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], PsdMode::Clamp).is_none());
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let r = rest();
        let u = [0.1, -0.2, 1.3, 0.1, 0.2, 0.9];
        let at = |u: &[f64]| {
            r.energy_derivatives(&[u[0], u[1]], &[u[2], u[3]], &[u[4], u[5]], PsdMode::None).unwrap()
        };
        let (_, _, h) = at(&u);
        let eps = 1e-6;
        for k in 0..6 {
            let mut up = u;
            let mut dn = u;
            up[k] += eps;
            dn[k] -= eps;
            let col = (at(&up).1 - at(&dn).1) / (2.0 * eps);
            for i in 0..6 {
                assert!((col[i] - h[(i, k)]).abs() < 1e-5 * (1.0 + h[(i, k)].abs()), "{i} {k}");
            }
        }
    }

    #[test]
    fn psd_projection_is_psd() {
        let r = rest();
        let (_, _, h) = r.energy_derivatives(&[0.0, 0.0], &[0.2, 0.0], &[3.0, 0.1], PsdMode::Clamp).unwrap();
        let eig = SymmetricEigen::new(h);
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9));
    }

    #[test]
    fn roots() {
        assert_eq!(smallest_positive_root(0.0, 0.0, 1.0), f64::INFINITY);
        assert!((smallest_positive_root(1.0, -3.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((smallest_positive_root(0.0, -2.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(smallest_positive_root(1.0, 3.0, 2.0), f64::INFINITY);
    }
}
