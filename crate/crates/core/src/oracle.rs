//! Direct 4D curvature in the coordinate basis, projected onto the threading
//! frame. Shares only the frame jets with the split modules.

use nalgebra::Matrix4;

use crate::efe::{EinsteinSet, StressEnergy};
use crate::error::GeometryError;
use crate::jets::{invert_jet_matrix, Jet, JetError};
use crate::metric::FrameData;
use crate::residual::ResidualBlock;
use crate::structure::{FullCurvature, Provenance, RicciSet};
use crate::tensor::{Down, Tensor};

type M4 = [[Jet; 4]; 4];

/// Smallest eigenvalue magnitude accepted before the metric counts as singular.
const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Metric4 {
    pub g: M4,
    pub ginv: M4,
}

/// `g_00 = -Φ²`, `g_0i = ξ_i`, `g_ij` with their inverse.
pub fn assemble_metric4(frame: &FrameData) -> Result<Metric4, GeometryError> {
    let mut g = [[Jet::zero(); 4]; 4];
    g[0][0] = -(frame.phi * frame.phi);
    for i in 0..3 {
        g[0][i + 1] = frame.xi[i];
        g[i + 1][0] = frame.xi[i];
        for j in 0..3 {
            g[i + 1][j + 1] = frame.g[i][j];
        }
    }
    let m = Matrix4::from_fn(|a, b| g[a][b].value());
    let eig = m.symmetric_eigenvalues();
    if eig.iter().any(|l| !(l.abs() > EIGEN_TOL)) {
        return Err(GeometryError::SingularMetric);
    }
    let negative = eig.iter().filter(|l| **l < 0.0).count();
    if negative != 1 {
        return Err(GeometryError::NotLorentzian(format!(
            "4D metric has {negative} negative eigenvalues at the point"
        )));
    }
    let ginv = invert_jet_matrix(&g).ok_or(GeometryError::SingularMetric)?;
    Ok(Metric4 { g, ginv })
}

fn i3(a: usize, b: usize, c: usize) -> usize {
    (a * 4 + b) * 4 + c
}

fn i4(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

#[derive(Debug, Clone)]
pub struct Riemann4 {
    pub metric: Metric4,
    /// `Γ^a_bc` flattened as `[a][b][c]`.
    pub christoffel: Vec<Jet>,
    /// `R^a_bcd` flattened as `[a][b][c][d]`.
    pub riemann_up: Vec<Jet>,
    /// `R_abcd = g_ae R^e_bcd`.
    pub riemann: Vec<Jet>,
    pub ricci: M4,
    pub scalar: Jet,
    pub einstein: M4,
}

impl Riemann4 {
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> Jet {
        self.christoffel[i3(a, b, c)]
    }

    pub fn r_up(&self, a: usize, b: usize, c: usize, d: usize) -> Jet {
        self.riemann_up[i4(a, b, c, d)]
    }

    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> Jet {
        self.riemann[i4(a, b, c, d)]
    }
}

fn sum4(f: impl Fn(usize) -> Jet) -> Jet {
    f(0) + f(1) + f(2) + f(3)
}

/// Levi-Civita connection and curvature with
/// `R^a_bcd = ∂_cΓ^a_db - ∂_dΓ^a_cb + Γ^a_ceΓ^e_db - Γ^a_deΓ^e_cb`.
pub fn riemann4(m: Metric4) -> Result<Riemann4, JetError> {
    let mut dg = vec![Jet::zero(); 64]; // ∂_c g_ab as [a][b][c]
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                dg[i3(a, b, c)] = m.g[a][b].try_d(c)?;
            }
        }
    }
    let mut gamma = vec![Jet::zero(); 64];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                gamma[i3(a, b, c)] =
                    sum4(|d| m.ginv[a][d] * (dg[i3(d, c, b)] + dg[i3(d, b, c)] - dg[i3(b, c, d)]))
                        .scale(0.5);
            }
        }
    }
    let mut dgamma = vec![Jet::zero(); 256]; // ∂_d Γ^a_bc as [a][b][c][d]
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    dgamma[i4(a, b, c, d)] = gamma[i3(a, b, c)].try_d(d)?;
                }
            }
        }
    }
    let mut rup = vec![Jet::zero(); 256];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    rup[i4(a, b, c, d)] = dgamma[i4(a, d, b, c)] - dgamma[i4(a, c, b, d)]
                        + sum4(|e| {
                            gamma[i3(a, c, e)] * gamma[i3(e, d, b)]
                                - gamma[i3(a, d, e)] * gamma[i3(e, c, b)]
                        });
                }
            }
        }
    }
    let mut rlow = vec![Jet::zero(); 256];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    rlow[i4(a, b, c, d)] = sum4(|e| m.g[a][e] * rup[i4(e, b, c, d)]);
                }
            }
        }
    }
    let ricci: M4 = std::array::from_fn(|b| std::array::from_fn(|d| sum4(|a| rup[i4(a, b, a, d)])));
    let scalar = (0..16)
        .map(|n| m.ginv[n / 4][n % 4] * ricci[n / 4][n % 4])
        .sum::<Jet>();
    let einstein: M4 = std::array::from_fn(|a| {
        std::array::from_fn(|b| ricci[a][b] - (scalar * m.g[a][b]).scale(0.5))
    });
    Ok(Riemann4 {
        metric: m,
        christoffel: gamma,
        riemann_up: rup,
        riemann: rlow,
        ricci,
        scalar,
        einstein,
    })
}

/// Coordinate components of the frame vectors `∂_0` and `δ/δx^i = ∂_i - A_i∂_0`,
/// with `A_i = g_0i/g_00` from the 4D metric.
pub fn frame_vectors(m: &Metric4) -> Result<M4, JetError> {
    let g00_inv = m.g[0][0].recip()?;
    let mut e = [[Jet::zero(); 4]; 4];
    e[0][0] = Jet::constant(1.0);
    for i in 1..4 {
        e[i][0] = -(m.g[0][i] * g00_inv);
        e[i][i] = Jet::constant(1.0);
    }
    Ok(e)
}

/// All frame components `T(e_f1, .., e_fN)` of a covariant N-tensor given by
/// `comp`, flattened with the first slot most significant. The basis change
/// is applied one slot at a time.
fn project_all<const N: usize>(e: &M4, comp: impl Fn([usize; N]) -> Jet) -> Vec<Jet> {
    let size = 4usize.pow(N as u32);
    let mut t: Vec<Jet> = (0..size)
        .map(|n| {
            comp(std::array::from_fn(|s| {
                (n / 4usize.pow((N - 1 - s) as u32)) % 4
            }))
        })
        .collect();
    for s in 0..N {
        let stride = 4usize.pow((N - 1 - s) as u32);
        let mut next = vec![Jet::zero(); size];
        for (n, out) in next.iter_mut().enumerate() {
            let f = (n / stride) % 4;
            let base = n - f * stride;
            *out = (0..4)
                .filter(|&a| !(e[f][a].is_constant() && e[f][a].value() == 0.0))
                .map(|a| e[f][a] * t[base + a * stride])
                .sum();
        }
        t = next;
    }
    t
}

/// Threading-frame components of curvature, Ricci and Einstein tensors.
pub fn project_frame(
    r4: &Riemann4,
    frame: &FrameData,
) -> Result<(FullCurvature, RicciSet, EinsteinSet), JetError> {
    let e = frame_vectors(&r4.metric)?;
    let all = project_all(&e, |ix: [usize; 4]| r4.r(ix[0], ix[1], ix[2], ix[3]));
    let rr = |s: [usize; 4]| all[((s[0] * 4 + s[1]) * 4 + s[2]) * 4 + s[3]];
    // R_iljk = R(e_i, e_l, e_j, e_k) = g(R(e_i,e_l)e_k, e_j) = R_{a b c d} with a = l, b = i, c = k, d = j
    let r_iljk = Tensor::from_fn(&[Down, Down, Down, Down], |ix| {
        rr([ix[1] + 1, ix[0] + 1, ix[3] + 1, ix[2] + 1])
    });
    let r_i0jk = Tensor::from_fn(&[Down, Down, Down], |ix| {
        rr([0, ix[0] + 1, ix[2] + 1, ix[1] + 1])
    });
    let r_il0k = Tensor::from_fn(&[Down, Down, Down], |ix| {
        rr([ix[1] + 1, ix[0] + 1, ix[2] + 1, 0])
    });
    let r_i00k = Tensor::from_fn(&[Down, Down], |ix| rr([0, ix[0] + 1, ix[1] + 1, 0]));
    let fc = FullCurvature::new(
        r_iljk,
        r_i0jk,
        r_il0k,
        r_i00k,
        frame,
        Provenance::FromOracle,
    );

    let ric_all = project_all(&e, |ix: [usize; 2]| r4.ricci[ix[0]][ix[1]]);
    let ein_all = project_all(&e, |ix: [usize; 2]| r4.einstein[ix[0]][ix[1]]);
    let ric = |s: [usize; 2]| ric_all[s[0] * 4 + s[1]];
    let ein = |s: [usize; 2]| ein_all[s[0] * 4 + s[1]];
    let ricci = RicciSet {
        r_ij: Tensor::from_fn(&[Down, Down], |ix| ric([ix[1] + 1, ix[0] + 1])),
        r_i0: Tensor::from_fn(&[Down], |ix| ric([0, ix[0] + 1])),
        r_00: ric([0, 0]),
        scalar: r4.scalar,
        provenance: Provenance::FromOracle,
    };
    let einstein = EinsteinSet {
        g_ij: Tensor::from_fn(&[Down, Down], |ix| ein([ix[1] + 1, ix[0] + 1])),
        g_i0: Tensor::from_fn(&[Down], |ix| ein([0, ix[0] + 1])),
        g_00: ein([0, 0]),
        provenance: Provenance::FromOracle,
    };
    Ok((fc, ricci, einstein))
}

/// Coordinate-basis components of a symmetric tensor given by its threading
/// frame components.
pub fn coordinate_stress(t: &StressEnergy, m: &Metric4) -> Result<M4, JetError> {
    let g00_inv = m.g[0][0].recip()?;
    let a: [Jet; 3] = std::array::from_fn(|i| m.g[0][i + 1] * g00_inv);
    let mut out = [[Jet::zero(); 4]; 4];
    out[0][0] = t.t00;
    for i in 0..3 {
        let v = t.t_i0[[i]] + a[i] * t.t00;
        out[0][i + 1] = v;
        out[i + 1][0] = v;
        for j in 0..3 {
            out[i + 1][j + 1] =
                t.t_ij[[i, j]] + a[i] * t.t_i0[[j]] + a[j] * t.t_i0[[i]] + a[i] * a[j] * t.t00;
        }
    }
    Ok(out)
}

/// `∇^a T_ab` in the coordinate basis.
pub fn divergence4(t: &M4, r4: &Riemann4) -> Result<[Jet; 4], JetError> {
    let g = &r4.metric.ginv;
    let mut out = [Jet::zero(); 4];
    for (b, o) in out.iter_mut().enumerate() {
        let mut acc = Jet::zero();
        for a in 0..4 {
            for c in 0..4 {
                let nabla = t[a][b].try_d(c)?
                    - sum4(|e| r4.gamma(e, c, a) * t[e][b] + r4.gamma(e, c, b) * t[a][e]);
                acc += g[a][c] * nabla;
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// Divergence covector projected onto `∂_0` and `δ/δx^i`.
pub fn project_covector(v: &[Jet; 4], m: &Metric4) -> Result<[Jet; 4], JetError> {
    let e = frame_vectors(m)?;
    Ok(std::array::from_fn(|f| sum4(|a| e[f][a] * v[a])))
}

/// First Bianchi identity, pair symmetries and contracted Bianchi identity.
/// The contracted identity needs a third metric derivative and is skipped
/// below frame order 3.
pub fn self_check_residuals(r4: &Riemann4) -> Result<ResidualBlock, JetError> {
    let mut out = ResidualBlock::new();
    let mut bianchi = 0.0f64;
    let mut pairs = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    bianchi = bianchi.max(
                        (r4.r_up(a, b, c, d) + r4.r_up(a, c, d, b) + r4.r_up(a, d, b, c))
                            .value()
                            .abs(),
                    );
                    let r = r4.r(a, b, c, d).value();
                    pairs = pairs
                        .max((r + r4.r(b, a, c, d).value()).abs())
                        .max((r + r4.r(a, b, d, c).value()).abs())
                        .max((r - r4.r(c, d, a, b).value()).abs());
                }
            }
        }
    }
    out.insert("oracle.first-bianchi", bianchi);
    out.insert("oracle.pair-symmetry", pairs);
    if r4.einstein[0][0].order() > 0 {
        let div = divergence4(&r4.einstein, r4)?;
        out.insert(
            "oracle.contracted-bianchi",
            div.iter().fold(0.0, |m, x| m.max(x.value().abs())),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{eval_frame, load_spec};

    fn oracle(text: &str, x: [f64; 4]) -> (FrameData, Riemann4) {
        let f = eval_frame(&load_spec(text).unwrap(), x, 3).unwrap();
        let m = assemble_metric4(&f).unwrap();
        (f, riemann4(m).unwrap())
    }

    #[test]
    fn flrw_metric_and_scalar() {
        let (f, r4) = oracle(
            "[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n",
            [2.0, 0.0, 0.0, 0.0],
        );
        let m = assemble_metric4(&f).unwrap();
        assert_eq!(m.g[0][0].value(), -16.0);
        assert_eq!(m.g[2][2].value(), 16.0);
        assert!((r4.scalar.value() - 0.1875).abs() < 1e-14);
    }

    #[test]
    fn rotating_metric_components() {
        let (f, _) = oracle(
            "[params]\nalpha = 0.4\n[metric]\nPhi = 1\nxi1 = alpha*x2\ng11 = 1\ng22 = 1\ng33 = 1\n",
            [0.0, 0.0, 1.0, 0.0],
        );
        let m = assemble_metric4(&f).unwrap();
        assert!((m.g[0][1].value() - 0.4).abs() < 1e-15);
        let det = Matrix4::from_fn(|a, b| m.g[a][b].value()).determinant();
        assert!(det < 0.0);
    }

    #[test]
    fn schwarzschild_vacuum() {
        // static Schwarzschild with m = 1 at r = 4 on the x1 axis
        let text = "[metric]\nPhi = sqrt(1 - 2/x1)\ng11 = 1/(1 - 2/x1)\ng22 = x1^2\ng33 = x1^2*sin(x2)^2\n";
        let (_, r4) = oracle(text, [0.0, 4.0, 1.1, 0.3]);
        for a in 0..4 {
            for b in 0..4 {
                assert!(r4.ricci[a][b].value().abs() < 1e-13);
            }
        }
        // Kretschmann 48m²/r⁶; the metric is diagonal
        let g = &r4.metric.ginv;
        let mut k = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let r = r4.r(a, b, c, d).value();
                        if r == 0.0 {
                            continue;
                        }
                        let up = g[a][a].value()
                            * g[b][b].value()
                            * g[c][c].value()
                            * g[d][d].value()
                            * r;
                        k += r * up;
                    }
                }
            }
        }
        assert!((k - 48.0 / 4096.0).abs() < 1e-13);
    }

    #[test]
    fn metric_has_zero_divergence() {
        let (_, r4) = oracle(
            "[params]\nalpha = 0.4\n[metric]\nPhi = 1 + 0.1*x1\nxi1 = alpha*x2\ng11 = 1\ng22 = 1 + 0.2*x0\ng33 = 1\n",
            [0.3, 0.2, 1.0, 0.1],
        );
        let div = divergence4(&r4.metric.g, &r4).unwrap();
        assert!(div.iter().all(|x| x.value().abs() < 1e-14));
        let s = self_check_residuals(&r4).unwrap();
        for (k, v) in s.entries() {
            assert!(*v < 1e-12, "{k} = {v}");
        }
    }
}
