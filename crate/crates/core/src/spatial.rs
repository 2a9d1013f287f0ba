//! Riemannian spatial connection, its covariant derivatives and curvature,
//! and the spatial identity residuals.

use crate::error::GeometryError;
use crate::jets::{Jet, JetError};
use crate::metric::{FrameData, KinematicSet};
use crate::residual::ResidualBlock;
use crate::tensor::{sum3, Down, Slot, Tensor, Up};

/// Vorticity counts as vanishing when every stored jet coefficient is below this.
pub const VORTICITY_FREE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ConnectionSet {
    /// `Γ̄^k_{ij}` stored as `[k][i][j]`.
    pub gamma: Tensor,
    /// `∂Γ̄^k_{ij}/∂x⁰`.
    pub dgamma0: Tensor,
}

pub fn spatial_connection(frame: &FrameData) -> Result<ConnectionSet, GeometryError> {
    if frame.order < 2 {
        return Err(GeometryError::InsufficientOrder {
            needed: 2,
            got: frame.order,
        });
    }
    // dg[h][i][j] = δḡ_ij/δx^h
    let dg: Vec<Tensor> = (0..3)
        .map(|h| {
            Tensor::from_fn(&[Down, Down], |ix| {
                frame.delta(&frame.gbar[[ix[0], ix[1]]], h)
            })
        })
        .collect();
    let gamma = Tensor::from_fn(&[Up, Down, Down], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        sum3(|h| frame.gbar_inv[[k, h]] * (dg[i][[h, j]] + dg[j][[h, i]] - dg[h][[i, j]]))
            .scale(0.5)
    });
    let dgamma0 = gamma.map(|g| g.d(0));
    Ok(ConnectionSet { gamma, dgamma0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariantKind {
    /// `T_{...|k}`: appends one lower slot.
    Spatial,
    /// `T_{...|0}`: keeps the valence.
    Temporal,
}

fn min_order(t: &Tensor) -> usize {
    t.components().map(|(_, j)| j.order()).min().unwrap_or(0)
}

/// Spatial or temporal covariant derivative of a spatial tensor of any valence.
pub fn covariant_derivative(
    t: &Tensor,
    frame: &FrameData,
    conn: &ConnectionSet,
    kin: &KinematicSet,
    kind: CovariantKind,
) -> Result<Tensor, JetError> {
    let order = min_order(t);
    if order == 0 {
        return Err(JetError::OrderExhausted {
            requested: 1,
            order: 0,
        });
    }
    let slots = t.slots().to_vec();
    let rank = slots.len();
    let swap = |ix: &[usize], s: usize, h: usize| {
        let mut v = ix[..rank].to_vec();
        v[s] = h;
        v
    };
    let out = match kind {
        CovariantKind::Spatial => {
            let mut out_slots = slots.clone();
            out_slots.push(Down);
            Tensor::from_fn(&out_slots, |ix| {
                let k = ix[rank];
                let mut acc = frame.delta(t.get(&ix[..rank]), k);
                for (s, slot) in slots.iter().enumerate() {
                    let a = ix[s];
                    for h in 0..3 {
                        let th = *t.get(&swap(ix, s, h));
                        match slot {
                            Up => acc += th * conn.gamma[[a, h, k]],
                            Down => acc -= th * conn.gamma[[h, a, k]],
                        }
                    }
                }
                acc
            })
        }
        CovariantKind::Temporal => Tensor::from_fn(&slots, |ix| {
            let mut acc = frame.d0(t.get(ix));
            for (s, slot) in slots.iter().enumerate() {
                let a = ix[s];
                for h in 0..3 {
                    let th = *t.get(&swap(ix, s, h));
                    match slot {
                        Up => acc += th * kin.k_mixed[[a, h]],
                        Down => acc -= th * kin.k_mixed[[h, a]],
                    }
                }
            }
            acc
        }),
    };
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SpatialCurvature {
    /// `R̄^h_{ijk}` stored as `[h][i][j][k]`.
    pub rbar: Tensor,
    /// `R̄^h_{i0k}` stored as `[h][i][k]`.
    pub rbar0: Tensor,
    /// `R̄_{iljk} = ḡ_{lh}R̄^h_{ijk}`.
    pub rbar_low: Tensor,
    /// `R̄_{il0k} = ḡ_{lh}R̄^h_{i0k}`.
    pub rbar0_low: Tensor,
    /// `R̄^k_{ijk}` (not symmetrized).
    pub rbar_trace: Tensor,
    /// `R̄^k_{i0k}`.
    pub rbar0_trace: Tensor,
    /// Symmetrized spatial Ricci tensor.
    pub ricci: Tensor,
    pub scalar: Jet,
    /// `Ḡ_ij = R̄_ij - ½R̄ḡ_ij`.
    pub einstein: Tensor,
}

pub fn spatial_curvature(
    conn: &ConnectionSet,
    kin: &KinematicSet,
    frame: &FrameData,
) -> Result<SpatialCurvature, GeometryError> {
    let g = &conn.gamma;
    let rbar = Tensor::from_fn(&[Up, Down, Down, Down], |ix| {
        let (h, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        frame.delta(&g[[h, i, j]], k) - frame.delta(&g[[h, i, k]], j)
            + sum3(|l| g[[l, i, j]] * g[[h, l, k]] - g[[l, i, k]] * g[[h, l, j]])
            - (kin.k_mixed[[h, i]] * kin.omega[[j, k]]).scale(2.0)
    });
    let dk = covariant_derivative(&kin.k_mixed, frame, conn, kin, CovariantKind::Spatial)?;
    let rbar0 = Tensor::from_fn(&[Up, Down, Down], |ix| {
        let (h, i, k) = (ix[0], ix[1], ix[2]);
        dk[[h, i, k]] - conn.dgamma0[[h, i, k]] + kin.k_mixed[[h, i]] * kin.a[[k]]
    });
    let gb = &frame.gbar;
    let rbar_low = Tensor::from_fn(&[Down, Down, Down, Down], |ix| {
        sum3(|h| gb[[ix[1], h]] * rbar[[h, ix[0], ix[2], ix[3]]])
    });
    let rbar0_low = Tensor::from_fn(&[Down, Down, Down], |ix| {
        sum3(|h| gb[[ix[1], h]] * rbar0[[h, ix[0], ix[2]]])
    });
    let rbar_trace = Tensor::from_fn(&[Down, Down], |ix| sum3(|k| rbar[[k, ix[0], ix[1], k]]));
    let rbar0_trace = Tensor::from_fn(&[Down], |ix| sum3(|k| rbar0[[k, ix[0], k]]));
    let ricci = Tensor::from_fn(&[Down, Down], |ix| {
        (rbar_trace[[ix[0], ix[1]]] + rbar_trace[[ix[1], ix[0]]]).scale(0.5)
    });
    let gi = &frame.gbar_inv;
    let scalar = (0..9)
        .map(|p| gi[[p / 3, p % 3]] * ricci[[p / 3, p % 3]])
        .sum::<Jet>();
    let einstein = Tensor::from_fn(&[Down, Down], |ix| {
        ricci[[ix[0], ix[1]]] - (scalar * gb[[ix[0], ix[1]]]).scale(0.5)
    });
    Ok(SpatialCurvature {
        rbar,
        rbar0,
        rbar_low,
        rbar0_low,
        rbar_trace,
        rbar0_trace,
        ricci,
        scalar,
        einstein,
    })
}

/// True when `ω` vanishes together with all its stored derivatives.
pub fn is_vorticity_free(kin: &KinematicSet) -> bool {
    kin.omega
        .components()
        .all(|(_, j)| j.coefficients().all(|(_, c)| c.abs() < VORTICITY_FREE_TOL))
}

/// The three cyclic rotations of `(i, j, k)`.
pub fn cyclic(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 3] {
    [(i, j, k), (j, k, i), (k, i, j)]
}

fn max_over(slots: &[Slot], f: impl FnMut(&[usize]) -> Jet) -> f64 {
    Tensor::from_fn(slots, f).max_abs()
}

/// Metricity, vorticity, constraint and Bianchi-type residuals of the spatial
/// connection. Checks that differentiate `R̄` are skipped when the curvature
/// carries no jet depth (frame order below 3).
pub fn bianchi_residuals(
    curv: &SpatialCurvature,
    conn: &ConnectionSet,
    kin: &KinematicSet,
    frame: &FrameData,
) -> Result<ResidualBlock, GeometryError> {
    let mut out = ResidualBlock::new();
    let g = &conn.gamma;

    out.insert(
        "connection.symmetry",
        max_over(&[Up, Down, Down], |ix| {
            g[[ix[0], ix[1], ix[2]]] - g[[ix[0], ix[2], ix[1]]]
        }),
    );
    let dg = covariant_derivative(&frame.gbar, frame, conn, kin, CovariantKind::Spatial)?;
    out.insert_tensor("metricity.spatial", &dg);
    let dg0 = covariant_derivative(&frame.gbar, frame, conn, kin, CovariantKind::Temporal)?;
    let chain = max_over(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        kin.theta_ij[[i, j]].scale(2.0) - kin.k[[i, j]] - kin.k[[j, i]]
    });
    out.insert("metricity.temporal", dg0.max_abs().max(chain));

    // vorticity identities
    out.insert(
        "vorticity.2.8a",
        max_over(&[Down, Down], |ix| {
            let (i, j) = (ix[0], ix[1]);
            frame.d0(&kin.omega[[i, j]])
                - (frame.delta(&kin.a[[i]], j) - frame.delta(&kin.a[[j]], i)).scale(0.5)
        }),
    );
    out.insert(
        "vorticity.2.8b",
        max_over(&[Down, Down, Down], |ix| {
            cyclic(ix[0], ix[1], ix[2])
                .iter()
                .map(|&(i, j, k)| {
                    frame.delta(&kin.omega[[i, j]], k) - kin.omega[[i, j]] * kin.a[[k]]
                })
                .sum()
        }),
    );

    out.insert(
        "bianchi.3.4",
        max_over(&[Down, Down, Down], |ix| {
            curv.rbar0_low[[ix[0], ix[1], ix[2]]] + curv.rbar0_low[[ix[1], ix[0], ix[2]]]
        }),
    );
    out.insert(
        "bianchi.3.4-trace",
        max_over(&[Down], |ix| sum3(|i| curv.rbar0[[i, i, ix[0]]])),
    );
    out.insert(
        "constraint.3.6",
        max_over(&[Down], |ix| {
            let k = ix[0];
            frame.delta(&kin.theta, k)
                - (sum3(|i| conn.dgamma0[[i, i, k]]) - kin.theta * kin.a[[k]])
        }),
    );
    out.insert(
        "bianchi.3.13",
        max_over(&[Up, Down, Down, Down], |ix| {
            let h = ix[0];
            cyclic(ix[1], ix[2], ix[3])
                .iter()
                .map(|&(i, j, k)| {
                    curv.rbar[[h, i, j, k]] + (kin.k_mixed[[h, i]] * kin.omega[[j, k]]).scale(2.0)
                })
                .sum()
        }),
    );

    let free = is_vorticity_free(kin);
    if free {
        // K = Θ, and the ω-terms of the curvature drop out
        let mut r = max_over(&[Up, Down], |ix| {
            kin.k_mixed[[ix[0], ix[1]]] - kin.theta_mixed[[ix[0], ix[1]]]
        });
        let dtheta =
            covariant_derivative(&kin.theta_mixed, frame, conn, kin, CovariantKind::Spatial)?;
        r = r.max(max_over(&[Up, Down, Down], |ix| {
            let (j, i, h) = (ix[0], ix[1], ix[2]);
            curv.rbar0[[j, i, h]]
                - (dtheta[[j, i, h]] - conn.dgamma0[[j, i, h]]
                    + kin.theta_mixed[[j, i]] * kin.a[[h]])
        }));
        r = r.max(max_over(&[Up, Down, Down, Down], |ix| {
            let (j, i, k, h) = (ix[0], ix[1], ix[2], ix[3]);
            curv.rbar[[j, i, k, h]]
                - (frame.delta(&g[[j, i, k]], h) - frame.delta(&g[[j, i, h]], k)
                    + sum3(|l| g[[l, i, k]] * g[[j, l, h]] - g[[l, i, h]] * g[[j, l, k]]))
        }));
        r = r.max(max_over(&[Up, Down, Down, Down], |ix| {
            cyclic(ix[1], ix[2], ix[3])
                .iter()
                .map(|&(i, j, k)| curv.rbar[[ix[0], i, j, k]])
                .sum()
        }));
        out.insert("bianchi.3.16", r);
    }

    if min_order(&curv.rbar) == 0 {
        return Ok(out);
    }
    let d_rbar = covariant_derivative(&curv.rbar, frame, conn, kin, CovariantKind::Spatial)?;
    let d_rbar0 = covariant_derivative(&curv.rbar0, frame, conn, kin, CovariantKind::Spatial)?;
    let dt_rbar = covariant_derivative(&curv.rbar, frame, conn, kin, CovariantKind::Temporal)?;
    let idx4 = [Up, Down, Down, Down, Down];

    out.insert(
        "bianchi.3.14",
        max_over(&idx4, |ix| {
            let (l, h) = (ix[0], ix[1]);
            cyclic(ix[2], ix[3], ix[4])
                .iter()
                .map(|&(i, j, k)| {
                    d_rbar[[l, h, i, j, k]] + (curv.rbar0[[l, h, i]] * kin.omega[[j, k]]).scale(2.0)
                })
                .sum()
        }),
    );
    out.insert_printed(
        "bianchi.3.14",
        max_over(&idx4, |ix| {
            let (l, h) = (ix[0], ix[1]);
            cyclic(ix[2], ix[3], ix[4])
                .iter()
                .map(|&(i, j, k)| {
                    d_rbar[[l, h, i, j, k]] + d_rbar0[[l, h, i, k]] * kin.omega[[j, k]]
                })
                .sum()
        }),
    );

    let identity_315 = |m: &Tensor| {
        max_over(&[Up, Down, Down, Down], |ix| {
            let (l, h, i, j) = (ix[0], ix[1], ix[2], ix[3]);
            dt_rbar[[l, h, i, j]] + d_rbar0[[l, h, i, j]] - d_rbar0[[l, h, j, i]]
                + sum3(|k| {
                    curv.rbar[[l, h, i, k]] * m[[k, j]] - curv.rbar[[l, h, j, k]] * m[[k, i]]
                })
                + kin.a[[j]] * curv.rbar0[[l, h, i]]
                - kin.a[[i]] * curv.rbar0[[l, h, j]]
        })
    };
    out.insert("bianchi.3.15", identity_315(&kin.k_mixed));
    if free {
        out.insert("bianchi.3.17", identity_315(&kin.theta_mixed));
        out.insert(
            "bianchi.3.16",
            max_over(&idx4, |ix| {
                cyclic(ix[2], ix[3], ix[4])
                    .iter()
                    .map(|&(i, j, k)| d_rbar[[ix[0], ix[1], i, j, k]])
                    .sum()
            }),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{compute_kinematics, eval_frame, load_spec};

    const MINKOWSKI: &str = "[metric]\nPhi = 1\ng11 = 1\ng22 = 1\ng33 = 1\n";
    const FLRW: &str = "[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n";
    const ROTATING: &str =
        "[params]\nalpha = 0.4\n[metric]\nPhi = 1\nxi1 = alpha * x2\ng11 = 1\ng22 = 1\ng33 = 1\n";
    const ALMOST_FLRW: &str = "[metric]\nPhi = sqrt(x0^4*(1+2*(0.05*cos(x1)*exp(-x0/4))))\n\
        g11 = x0^4*(1-2*(0.05*cos(x1)*exp(-x0/4)))\n\
        g22 = x0^4*(1-2*(0.05*cos(x1)*exp(-x0/4)))\n\
        g33 = x0^4*(1-2*(0.05*cos(x1)*exp(-x0/4)))\n";

    fn setup(
        text: &str,
        x: [f64; 4],
    ) -> (FrameData, KinematicSet, ConnectionSet, SpatialCurvature) {
        let spec = load_spec(text).unwrap();
        let f = eval_frame(&spec, x, 3).unwrap();
        let kin = compute_kinematics(&f).unwrap();
        let conn = spatial_connection(&f).unwrap();
        let curv = spatial_curvature(&conn, &kin, &f).unwrap();
        (f, kin, conn, curv)
    }

    #[test]
    fn minkowski_is_flat() {
        let (f, kin, conn, curv) = setup(MINKOWSKI, [0.2, 0.1, -0.4, 0.7]);
        assert_eq!(conn.gamma.max_abs(), 0.0);
        assert_eq!(curv.rbar.max_abs(), 0.0);
        assert_eq!(curv.rbar0.max_abs(), 0.0);
        assert_eq!(curv.scalar.value(), 0.0);
        let block = bianchi_residuals(&curv, &conn, &kin, &f).unwrap();
        assert!(block.entries().values().all(|&v| v == 0.0));
        assert!(block.get("bianchi.3.17").is_some());
    }

    #[test]
    fn flrw_connection_vanishes() {
        let (f, kin, conn, curv) = setup(FLRW, [2.0, 0.3, 0.1, -0.2]);
        assert_eq!(conn.gamma.max_abs(), 0.0);
        assert!(curv.rbar.max_abs() < 1e-14);
        assert!(curv.scalar.value().abs() < 1e-14);
        // Θ_ij|0 = ⅓Θ_|0 ḡ_ij for a homogeneous isotropic expansion
        let dt =
            covariant_derivative(&kin.theta_ij, &f, &conn, &kin, CovariantKind::Temporal).unwrap();
        let theta0 = f.d0(&kin.theta);
        for i in 0..3 {
            for j in 0..3 {
                let rhs = theta0.value() / 3.0 * f.gbar[[i, j]].value();
                assert!((dt[[i, j]].value() - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_field_derivative_has_no_connection_terms() {
        let (f, kin, conn, _) = setup(ROTATING, [0.1, 0.5, 1.0, -0.3]);
        let s = Tensor::scalar(kin.theta + f.env.coords[0] * f.env.coords[2]);
        let d = covariant_derivative(&s, &f, &conn, &kin, CovariantKind::Spatial).unwrap();
        for k in 0..3 {
            assert_eq!(d[[k]], f.delta(&s[[]], k));
        }
    }

    #[test]
    fn rotating_identities_hold() {
        let (f, kin, conn, curv) = setup(ROTATING, [0.1, 0.5, 1.0, -0.3]);
        assert!(!is_vorticity_free(&kin));
        assert!(curv.rbar.max_abs() > 1e-3);
        let block = bianchi_residuals(&curv, &conn, &kin, &f).unwrap();
        for (name, v) in block.entries() {
            assert!(*v < 1e-12, "{name} = {v}");
        }
        assert!(block.get("bianchi.3.16").is_none());
    }

    #[test]
    fn almost_flrw_connection_matches_closed_form() {
        // Γ̄^k_ij = (1-2B)⁻¹(δ_ij B_k - δ^k_i B_j - δ^k_j B_i), conformally flat ḡ
        let x = [2.0, std::f64::consts::FRAC_PI_3, 0.2, -0.1];
        let (_, _, conn, _) = setup(ALMOST_FLRW, x);
        let b = 0.05 * x[1].cos() * (-x[0] / 4.0).exp();
        let db = [-0.05 * x[1].sin() * (-x[0] / 4.0).exp(), 0.0, 0.0];
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expect =
                        (d(i, j) * db[k] - d(k, i) * db[j] - d(k, j) * db[i]) / (1.0 - 2.0 * b);
                    assert!((conn.gamma[[k, i, j]].value() - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn order_two_skips_derivative_checks() {
        let spec = load_spec(ROTATING).unwrap();
        let f = eval_frame(&spec, [0.0, 0.0, 1.0, 0.0], 2).unwrap();
        let kin = compute_kinematics(&f).unwrap();
        let conn = spatial_connection(&f).unwrap();
        let curv = spatial_curvature(&conn, &kin, &f).unwrap();
        let block = bianchi_residuals(&curv, &conn, &kin, &f).unwrap();
        assert!(block.get("bianchi.3.13").is_some());
        assert!(block.get("bianchi.3.14").is_none());
    }
}
