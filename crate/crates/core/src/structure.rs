//! Full 4D curvature from split data (K- and Θ-forms of the structure
//! equations), their symmetry identities, and the Ricci/scalar splitting.

use crate::error::GeometryError;
use crate::jets::Jet;
use crate::metric::{FrameData, KinematicSet};
use crate::residual::ResidualBlock;
use crate::spatial::{
    covariant_derivative, is_vorticity_free, ConnectionSet, CovariantKind, SpatialCurvature,
};
use crate::tensor::{sum3, Down, Slot, Tensor, Up};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    FromSplitK,
    FromSplitTheta,
    FromOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureForm {
    KForm,
    ThetaForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RicciForm {
    Via56,
    Via57,
}

/// Threading-frame components of the 4D curvature.
#[derive(Debug, Clone)]
pub struct FullCurvature {
    /// `R_iljk` as `[i][l][j][k]`.
    pub r_iljk: Tensor,
    /// `R_i0jk` as `[i][j][k]`.
    pub r_i0jk: Tensor,
    /// `R_il0k` as `[i][l][k]`.
    pub r_il0k: Tensor,
    /// `R_i00k` as `[i][k]`.
    pub r_i00k: Tensor,
    /// `R^h_ijk = ḡ^{hl}R_iljk` as `[h][i][j][k]`.
    pub m_h_ijk: Tensor,
    /// `R^0_ijk = -Φ⁻²R_i0jk`.
    pub m_0_ijk: Tensor,
    /// `R^h_i0k = ḡ^{hl}R_il0k` as `[h][i][k]`.
    pub m_h_i0k: Tensor,
    /// `R^0_i0k = -Φ⁻²R_i00k`.
    pub m_0_i0k: Tensor,
    pub provenance: Provenance,
}

impl FullCurvature {
    pub fn new(
        r_iljk: Tensor,
        r_i0jk: Tensor,
        r_il0k: Tensor,
        r_i00k: Tensor,
        frame: &FrameData,
        provenance: Provenance,
    ) -> FullCurvature {
        let gi = &frame.gbar_inv;
        let m = -frame.phi_inv2();
        FullCurvature {
            m_h_ijk: Tensor::from_fn(&[Up, Down, Down, Down], |ix| {
                sum3(|l| gi[[ix[0], l]] * r_iljk[[ix[1], l, ix[2], ix[3]]])
            }),
            m_0_ijk: r_i0jk.map(|x| m * *x),
            m_h_i0k: Tensor::from_fn(&[Up, Down, Down], |ix| {
                sum3(|l| gi[[ix[0], l]] * r_il0k[[ix[1], l, ix[2]]])
            }),
            m_0_i0k: r_i00k.map(|x| m * *x),
            r_iljk,
            r_i0jk,
            r_il0k,
            r_i00k,
            provenance,
        }
    }

    /// Per-family relative differences `[iljk, i0jk, il0k, i00k]` against `reference`.
    pub fn rel_diff(&self, reference: &FullCurvature) -> [f64; 4] {
        [
            self.r_iljk.max_rel_diff(&reference.r_iljk),
            self.r_i0jk.max_rel_diff(&reference.r_i0jk),
            self.r_il0k.max_rel_diff(&reference.r_il0k),
            self.r_i00k.max_rel_diff(&reference.r_i00k),
        ]
    }
}

/// Covariant derivatives of the kinematic tensors used by the structure
/// equations, the Ricci splitting and the field equations.
#[derive(Debug, Clone)]
pub struct KinematicDerivatives {
    /// `K_ij|k` as `[i][j][k]`.
    pub dk: Tensor,
    /// `K_ij|0`.
    pub dk0: Tensor,
    pub dtheta: Tensor,
    pub dtheta0: Tensor,
    pub domega: Tensor,
    pub domega0: Tensor,
    /// `b_i|k` as `[i][k]`.
    pub db: Tensor,
    /// `b^k_|k`.
    pub div_b: Jet,
    /// `Θ_|k = δΘ/δx^k`.
    pub dtheta_scalar: Tensor,
    /// `Θ_|0 = ∂Θ/∂x⁰`.
    pub theta0: Jet,
    /// `K^k_{i|k}`, `Θ^k_{i|k}`, `ω^k_{i|k}` with the derivative slot contracted against the raised one.
    pub div_k: Tensor,
    pub div_theta: Tensor,
    pub div_omega: Tensor,
}

fn contract_divergence(d: &Tensor) -> Tensor {
    Tensor::from_fn(&[Down], |ix| sum3(|k| d[[k, ix[0], k]]))
}

pub fn kinematic_derivatives(
    frame: &FrameData,
    kin: &KinematicSet,
    conn: &ConnectionSet,
) -> Result<KinematicDerivatives, GeometryError> {
    use CovariantKind::{Spatial, Temporal};
    let cd = |t: &Tensor, kind| covariant_derivative(t, frame, conn, kin, kind);
    let db = cd(&kin.b, Spatial)?;
    let div_b = (0..9)
        .map(|p| frame.gbar_inv[[p / 3, p % 3]] * db[[p / 3, p % 3]])
        .sum();
    Ok(KinematicDerivatives {
        dk: cd(&kin.k, Spatial)?,
        dk0: cd(&kin.k, Temporal)?,
        dtheta: cd(&kin.theta_ij, Spatial)?,
        dtheta0: cd(&kin.theta_ij, Temporal)?,
        domega: cd(&kin.omega, Spatial)?,
        domega0: cd(&kin.omega, Temporal)?,
        db,
        div_b,
        dtheta_scalar: Tensor::from_fn(&[Down], |ix| frame.delta(&kin.theta, ix[0])),
        theta0: frame.d0(&kin.theta),
        div_k: contract_divergence(&cd(&kin.k_mixed, Spatial)?),
        div_theta: contract_divergence(&cd(&kin.theta_mixed, Spatial)?),
        div_omega: contract_divergence(&cd(&kin.omega_mixed, Spatial)?),
    })
}

/// `R_i00k` in the K-form with a selectable factor on the `b` terms; the
/// consistent factor is `Φ²`.
fn r_i00k_kform(kin: &KinematicSet, dv: &KinematicDerivatives, b_factor: Jet) -> Tensor {
    Tensor::from_fn(&[Down, Down], |ix| {
        let (i, k) = (ix[0], ix[1]);
        dv.dk0[[i, k]] + sum3(|j| kin.k[[i, j]] * kin.k_mixed[[j, k]])
            - kin.psi * kin.k[[i, k]]
            - b_factor * (dv.db[[i, k]] + kin.b[[i]] * kin.b[[k]])
    })
}

/// Structure equations in the K-form or the Θ-form.
pub fn curvature_from_split(
    frame: &FrameData,
    kin: &KinematicSet,
    curv: &SpatialCurvature,
    dv: &KinematicDerivatives,
    form: StructureForm,
) -> FullCurvature {
    let phi2 = frame.phi2();
    let phi_inv2 = frame.phi_inv2();
    let (k, th, om, b, c) = (&kin.k, &kin.theta_ij, &kin.omega, &kin.b, &kin.c);
    match form {
        StructureForm::KForm => {
            let r_iljk = Tensor::from_fn(&[Down, Down, Down, Down], |ix| {
                let (i, l, j, kk) = (ix[0], ix[1], ix[2], ix[3]);
                curv.rbar_low[[i, l, j, kk]]
                    + phi_inv2 * (k[[i, j]] * k[[l, kk]] - k[[i, kk]] * k[[l, j]])
            });
            let r_i0jk = Tensor::from_fn(&[Down, Down, Down], |ix| {
                let (i, j, kk) = (ix[0], ix[1], ix[2]);
                dv.dk[[i, kk, j]] - dv.dk[[i, j, kk]] + k[[i, j]] * c[[kk]] - k[[i, kk]] * c[[j]]
                    + (phi2 * b[[i]] * om[[j, kk]]).scale(2.0)
            });
            let r_il0k = Tensor::from_fn(&[Down, Down, Down], |ix| {
                let (i, l, kk) = (ix[0], ix[1], ix[2]);
                curv.rbar0_low[[i, l, kk]] + b[[i]] * k[[l, kk]] - b[[l]] * k[[i, kk]]
            });
            let r_i00k = r_i00k_kform(kin, dv, phi2);
            FullCurvature::new(
                r_iljk,
                r_i0jk,
                r_il0k,
                r_i00k,
                frame,
                Provenance::FromSplitK,
            )
        }
        StructureForm::ThetaForm => {
            // ω_ij + Φ⁻²Θ_ij
            let w = Tensor::from_fn(&[Down, Down], |ix| {
                om[[ix[0], ix[1]]] + phi_inv2 * th[[ix[0], ix[1]]]
            });
            let r_iljk = Tensor::from_fn(&[Down, Down, Down, Down], |ix| {
                let (i, l, j, kk) = (ix[0], ix[1], ix[2], ix[3]);
                curv.rbar_low[[i, l, j, kk]]
                    + phi2 * (w[[i, j]] * w[[l, kk]] - w[[i, kk]] * w[[l, j]])
            });
            let r_i0jk = Tensor::from_fn(&[Down, Down, Down], |ix| {
                let (i, j, kk) = (ix[0], ix[1], ix[2]);
                dv.dtheta[[i, kk, j]] - dv.dtheta[[i, j, kk]] + th[[i, j]] * c[[kk]]
                    - th[[i, kk]] * c[[j]]
                    + phi2
                        * (dv.domega[[i, kk, j]] - dv.domega[[i, j, kk]] + om[[i, kk]] * c[[j]]
                            - om[[i, j]] * c[[kk]]
                            + (b[[i]] * om[[j, kk]]).scale(2.0))
            });
            let r_il0k = Tensor::from_fn(&[Down, Down, Down], |ix| {
                let (i, l, kk) = (ix[0], ix[1], ix[2]);
                curv.rbar0_low[[i, l, kk]] + b[[i]] * th[[l, kk]] - b[[l]] * th[[i, kk]]
                    + phi2 * (b[[i]] * om[[l, kk]] - b[[l]] * om[[i, kk]])
            });
            let r_i00k = Tensor::from_fn(&[Down, Down], |ix| {
                let (i, kk) = (ix[0], ix[1]);
                dv.dtheta0[[i, kk]] - kin.psi * th[[i, kk]]
                    + phi2
                        * (dv.domega0[[i, kk]]
                            + kin.psi * om[[i, kk]]
                            + sum3(|j| {
                                w[[i, j]]
                                    * (kin.theta_mixed[[j, kk]] + phi2 * kin.omega_mixed[[j, kk]])
                            })
                            - dv.db[[i, kk]]
                            - b[[i]] * b[[kk]])
            });
            FullCurvature::new(
                r_iljk,
                r_i0jk,
                r_il0k,
                r_i00k,
                frame,
                Provenance::FromSplitTheta,
            )
        }
    }
}

fn max_over(slots: &[Slot], f: impl FnMut(&[usize]) -> Jet) -> f64 {
    Tensor::from_fn(slots, f).max_abs()
}

fn max_diff(a: &FullCurvature, b: &FullCurvature) -> f64 {
    [
        a.r_iljk.max_abs_diff(&b.r_iljk),
        a.r_i0jk.max_abs_diff(&b.r_i0jk),
        a.r_il0k.max_abs_diff(&b.r_il0k),
        a.r_i00k.max_abs_diff(&b.r_i00k),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Agreement of the two structure-equation forms and the symmetry identities
/// they imply for `R̄` and the kinematic tensors.
pub fn curvature_identity_residuals(
    fk: &FullCurvature,
    ftheta: &FullCurvature,
    curv: &SpatialCurvature,
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
) -> ResidualBlock {
    let mut out = ResidualBlock::new();
    let phi2 = frame.phi2();
    let phi_inv2 = frame.phi_inv2();
    let (k, th, om, b, c, a) = (&kin.k, &kin.theta_ij, &kin.omega, &kin.b, &kin.c, &kin.a);
    let rb = &curv.rbar_low;
    let d4 = [Down, Down, Down, Down];
    let d3 = [Down, Down, Down];

    out.insert("structure.4.5-vs-4.6", max_diff(fk, ftheta));
    let printed_d = r_i00k_kform(kin, dv, phi_inv2);
    out.insert_printed(
        "structure.4.5-vs-4.6",
        max_diff(fk, ftheta).max(printed_d.max_abs_diff(&ftheta.r_i00k)),
    );

    out.insert(
        "structure.pair-antisymmetry",
        max_over(&d4, |ix| {
            fk.r_iljk[[ix[0], ix[1], ix[2], ix[3]]] + fk.r_iljk[[ix[1], ix[0], ix[2], ix[3]]]
        })
        .max(max_over(&d4, |ix| {
            fk.r_iljk[[ix[0], ix[1], ix[2], ix[3]]] + fk.r_iljk[[ix[0], ix[1], ix[3], ix[2]]]
        }))
        .max(max_over(&d3, |ix| {
            fk.r_i0jk[[ix[0], ix[1], ix[2]]] + fk.r_i0jk[[ix[0], ix[2], ix[1]]]
        })),
    );
    // R_i0jk = -R_jk0i
    out.insert(
        "structure.cross",
        max_over(&d3, |ix| {
            fk.r_i0jk[[ix[0], ix[1], ix[2]]] + fk.r_il0k[[ix[1], ix[2], ix[0]]]
        }),
    );

    out.insert(
        "identity.4.7a",
        max_over(&d4, |ix| {
            rb[[ix[0], ix[1], ix[2], ix[3]]] + rb[[ix[0], ix[1], ix[3], ix[2]]]
        }),
    );
    out.insert(
        "identity.4.7b",
        max_over(&d4, |ix| {
            rb[[ix[0], ix[1], ix[2], ix[3]]] + rb[[ix[1], ix[0], ix[2], ix[3]]]
        }),
    );
    let c1 = max_over(&d4, |ix| {
        let (i, l, j, kk) = (ix[0], ix[1], ix[2], ix[3]);
        rb[[i, l, j, kk]]
            - rb[[j, kk, i, l]]
            - phi_inv2
                * (k[[i, kk]] * k[[l, j]] + k[[j, i]] * k[[kk, l]]
                    - k[[i, j]] * k[[l, kk]]
                    - k[[j, l]] * k[[kk, i]])
    });
    let c2 = max_over(&d4, |ix| {
        let (i, l, j, kk) = (ix[0], ix[1], ix[2], ix[3]);
        rb[[i, l, j, kk]]
            - rb[[j, kk, i, l]]
            - (th[[i, kk]] * om[[l, j]]
                + th[[l, j]] * om[[i, kk]]
                + th[[i, j]] * om[[kk, l]]
                + th[[kk, l]] * om[[j, i]])
            .scale(2.0)
    });
    out.insert("identity.4.7c", c1.max(c2));

    let r0 = &curv.rbar0_low;
    let e1 = max_over(&d3, |ix| {
        let (j, kk, i) = (ix[0], ix[1], ix[2]);
        r0[[j, kk, i]]
            - (dv.dk[[i, j, kk]] - dv.dk[[i, kk, j]] + k[[i, kk]] * c[[j]]
                - k[[i, j]] * c[[kk]]
                - (phi2 * b[[i]] * om[[j, kk]]).scale(2.0)
                - b[[j]] * k[[kk, i]]
                + b[[kk]] * k[[j, i]])
    });
    let e2 = max_over(&d3, |ix| {
        let (j, kk, i) = (ix[0], ix[1], ix[2]);
        r0[[j, kk, i]]
            - (dv.dtheta[[i, j, kk]] - dv.dtheta[[i, kk, j]] + th[[i, j]] * a[[kk]]
                - th[[i, kk]] * a[[j]]
                + phi2
                    * (dv.domega[[i, j, kk]] - dv.domega[[i, kk, j]] + om[[i, kk]] * a[[j]]
                        - om[[i, j]] * a[[kk]]
                        - (b[[i]] * om[[j, kk]]).scale(2.0)))
    });
    out.insert("identity.4.8", e1.max(e2));

    // symmetric part of R_i00k, both forms
    let sym_k = |bf: Jet| {
        Tensor::from_fn(&[Down, Down], |ix| {
            let (i, kk) = (ix[0], ix[1]);
            (dv.dk0[[i, kk]]
                + dv.dk0[[kk, i]]
                + sum3(|j| k[[i, j]] * kin.k_mixed[[j, kk]] + k[[kk, j]] * kin.k_mixed[[j, i]])
                - kin.psi * (k[[i, kk]] + k[[kk, i]])
                - bf * (dv.db[[i, kk]] + dv.db[[kk, i]]))
            .scale(0.5)
                - phi2 * b[[i]] * b[[kk]]
        })
    };
    let sym_theta = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, kk) = (ix[0], ix[1]);
        dv.dtheta0[[i, kk]] - kin.psi * th[[i, kk]]
            + sum3(|j| {
                th[[i, j]] * kin.theta_mixed[[j, kk]]
                    + phi2 * phi2 * om[[i, j]] * kin.omega_mixed[[j, kk]]
            })
            - phi2 * b[[i]] * b[[kk]]
            - (phi2 * (dv.db[[i, kk]] + dv.db[[kk, i]])).scale(0.5)
    });
    let used = sym_k(phi2);
    let r9 = fk
        .r_i00k
        .max_abs_diff(&used)
        .max(fk.r_i00k.max_abs_diff(&sym_theta))
        .max(used.max_abs_diff(&sym_theta));
    out.insert("identity.4.9", r9);
    out.insert_printed("identity.4.9", fk.r_i00k.max_abs_diff(&sym_k(phi_inv2)));

    out.insert(
        "identity.4.10a",
        max_over(&[Down, Down], |ix| {
            let (i, kk) = (ix[0], ix[1]);
            dv.dk0[[i, kk]] - dv.dk0[[kk, i]]
                + sum3(|j| k[[i, j]] * kin.k_mixed[[j, kk]] - k[[kk, j]] * kin.k_mixed[[j, i]])
                - kin.psi * (k[[i, kk]] - k[[kk, i]])
                - phi2 * (dv.db[[i, kk]] - dv.db[[kk, i]])
        }),
    );
    let r10b = |factor: Jet| {
        max_over(&[Down, Down], |ix| {
            let (i, kk) = (ix[0], ix[1]);
            dv.domega0[[i, kk]] + kin.psi * om[[i, kk]]
                - factor
                    * (sum3(|j| {
                        om[[kk, j]] * kin.theta_mixed[[j, i]]
                            - om[[i, j]] * kin.theta_mixed[[j, kk]]
                    }) + (dv.db[[i, kk]] - dv.db[[kk, i]]).scale(0.5))
        })
    };
    out.insert("identity.4.10b", r10b(Jet::constant(1.0)));
    out.insert_printed("identity.4.10b", r10b(phi2));

    if is_vorticity_free(kin) {
        let r11a = max_over(&d4, |ix| {
            rb[[ix[0], ix[1], ix[2], ix[3]]] - rb[[ix[2], ix[3], ix[0], ix[1]]]
        });
        let r11b = max_over(&d3, |ix| {
            let (j, kk, i) = (ix[0], ix[1], ix[2]);
            r0[[j, kk, i]]
                - (dv.dtheta[[i, j, kk]] - dv.dtheta[[i, kk, j]] + th[[i, j]] * a[[kk]]
                    - th[[i, kk]] * a[[j]])
        });
        out.insert("identity.4.11", r11a.max(r11b));
        out.insert(
            "identity.b-symmetry",
            max_over(&[Down, Down], |ix| {
                dv.db[[ix[0], ix[1]]] - dv.db[[ix[1], ix[0]]]
            }),
        );
        let a12 = max_over(&d4, |ix| {
            let (i, l, j, kk) = (ix[0], ix[1], ix[2], ix[3]);
            fk.r_iljk[[i, l, j, kk]]
                - (rb[[i, l, j, kk]]
                    + phi_inv2 * (th[[i, j]] * th[[l, kk]] - th[[i, kk]] * th[[l, j]]))
        });
        let b12 = max_over(&d3, |ix| {
            let (i, j, kk) = (ix[0], ix[1], ix[2]);
            fk.r_i0jk[[i, j, kk]]
                - (dv.dtheta[[i, kk, j]] - dv.dtheta[[i, j, kk]] + th[[i, j]] * c[[kk]]
                    - th[[i, kk]] * c[[j]])
        });
        let c12 = max_over(&d3, |ix| {
            let (i, l, kk) = (ix[0], ix[1], ix[2]);
            fk.r_il0k[[i, l, kk]] - (r0[[i, l, kk]] + th[[l, kk]] * b[[i]] - th[[i, kk]] * b[[l]])
        });
        let d12 = max_over(&[Down, Down], |ix| {
            let (i, kk) = (ix[0], ix[1]);
            fk.r_i00k[[i, kk]]
                - (dv.dtheta0[[i, kk]] - kin.psi * th[[i, kk]]
                    + sum3(|j| th[[i, j]] * kin.theta_mixed[[j, kk]])
                    - phi2 * (dv.db[[i, kk]] + b[[i]] * b[[kk]]))
        });
        out.insert("identity.4.12", a12.max(b12).max(c12).max(d12));
    }
    out
}

/// Threading-frame Ricci components and the scalar curvature.
#[derive(Debug, Clone)]
pub struct RicciSet {
    pub r_ij: Tensor,
    pub r_i0: Tensor,
    pub r_00: Jet,
    pub scalar: Jet,
    pub provenance: Provenance,
}

/// `R_i0` by the connection-free second form with selectable sign conventions.
fn r_i0_second(
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
    omega_b: f64,
) -> Tensor {
    let phi2 = frame.phi2();
    Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        dv.div_k[[i]] - dv.dtheta_scalar[[i]] + kin.theta * kin.c[[i]]
            - sum3(|k| kin.c[[k]] * kin.k_mixed[[k, i]])
            + (phi2 * sum3(|k| kin.omega[[i, k]] * kin.b_up[[k]])).scale(omega_b)
    })
}

/// `R = R̄ + Φ⁻²{4/3Θ² + s·σ² - 2ΨΘ + 2Θ_|0} - Φ²ω² - 2b² - 2b^k_|k`; the consistent `s` is 1.
fn scalar_split(
    curv: &SpatialCurvature,
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
    s: f64,
) -> Jet {
    let t = kin.theta;
    curv.scalar
        + frame.phi_inv2()
            * ((t * t).scale(4.0 / 3.0) + kin.sigma2.scale(s) - (kin.psi * t).scale(2.0)
                + dv.theta0.scale(2.0))
        - frame.phi2() * kin.omega2
        - kin.b2.scale(2.0)
        - dv.div_b.scale(2.0)
}

pub fn ricci_split(
    frame: &FrameData,
    kin: &KinematicSet,
    curv: &SpatialCurvature,
    dv: &KinematicDerivatives,
    form: RicciForm,
) -> RicciSet {
    let phi2 = frame.phi2();
    let phi_inv2 = frame.phi_inv2();
    let (t, psi) = (kin.theta, kin.psi);
    let bb = |i: usize, j: usize| dv.db[[i, j]] + kin.b[[i]] * kin.b[[j]];
    let (r_ij, r_i0, r_00) = match form {
        RicciForm::Via56 => {
            let r_ij = Tensor::from_fn(&[Down, Down], |ix| {
                let (i, j) = (ix[0], ix[1]);
                curv.rbar_trace[[i, j]] + phi_inv2 * ((t - psi) * kin.k[[i, j]] + dv.dk0[[i, j]])
                    - bb(i, j)
            });
            let r_i0 = Tensor::from_fn(&[Down], |ix| {
                let i = ix[0];
                curv.rbar0_trace[[i]] + t * kin.b[[i]] - sum3(|k| kin.k[[i, k]] * kin.b_up[[k]])
            });
            let kk = (0..9)
                .map(|p| kin.k_mixed[[p / 3, p % 3]] * kin.k_mixed[[p % 3, p / 3]])
                .sum::<Jet>();
            let r_00 = psi * t - dv.theta0 - kk + phi2 * (kin.b2 + dv.div_b);
            (r_ij, r_i0, r_00)
        }
        RicciForm::Via57 => {
            let r_ij = Tensor::from_fn(&[Down, Down], |ix| {
                let (i, j) = (ix[0], ix[1]);
                curv.rbar_trace[[i, j]]
                    + phi_inv2 * ((t - psi) * kin.theta_ij[[i, j]] + dv.dtheta0[[i, j]])
                    + dv.domega0[[i, j]]
                    + (t + psi) * kin.omega[[i, j]]
                    - bb(i, j)
            });
            let r_i0 = Tensor::from_fn(&[Down], |ix| {
                let i = ix[0];
                curv.rbar0_trace[[i]] + t * kin.b[[i]]
                    - sum3(|k| kin.theta_ij[[i, k]] * kin.b_up[[k]])
                    - phi2 * sum3(|k| kin.omega[[i, k]] * kin.b_up[[k]])
            });
            let r_00 = psi * t - dv.theta0 - kin.sigma2 - (t * t).scale(1.0 / 3.0)
                + phi2 * phi2 * kin.omega2
                + phi2 * (kin.b2 + dv.div_b);
            (r_ij, r_i0, r_00)
        }
    };
    RicciSet {
        r_ij,
        r_i0,
        r_00,
        scalar: scalar_split(curv, kin, dv, frame, 1.0),
        provenance: match form {
            RicciForm::Via56 => Provenance::FromSplitK,
            RicciForm::Via57 => Provenance::FromSplitTheta,
        },
    }
}

/// `R = ḡ^{ij}R_ij - Φ⁻²R_00`.
pub fn scalar_from_components(r: &RicciSet, frame: &FrameData) -> Jet {
    (0..9)
        .map(|p| frame.gbar_inv[[p / 3, p % 3]] * r.r_ij[[p / 3, p % 3]])
        .sum::<Jet>()
        - frame.phi_inv2() * r.r_00
}

/// Agreement of the two Ricci forms, the alternative `R_i0` expressions,
/// symmetric/skew assembly and the scalar formula.
pub fn ricci_residuals(
    r56: &RicciSet,
    r57: &RicciSet,
    curv: &SpatialCurvature,
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
) -> ResidualBlock {
    let mut out = ResidualBlock::new();
    let phi2 = frame.phi2();
    let phi_inv2 = frame.phi_inv2();
    let agree = r56
        .r_ij
        .max_abs_diff(&r57.r_ij)
        .max(r56.r_i0.max_abs_diff(&r57.r_i0))
        .max((r56.r_00 - r57.r_00).value().abs());
    out.insert("ricci.5.6-vs-5.7", agree);

    // connection-free second form of R_i0, shared by both Ricci forms
    let second = r_i0_second(kin, dv, frame, -2.0);
    out.insert("ricci.5.6b-forms", r56.r_i0.max_abs_diff(&second));
    out.insert_printed(
        "ricci.5.6b-forms",
        r56.r_i0.max_abs_diff(&r_i0_second(kin, dv, frame, 2.0)),
    );
    let second57 = |sign: f64, wb: f64| {
        Tensor::from_fn(&[Down], |ix| {
            let i = ix[0];
            dv.div_theta[[i]] - dv.dtheta_scalar[[i]] + kin.theta * kin.c[[i]]
                - sum3(|k| kin.theta_ij[[i, k]] * sum3(|m| frame.gbar_inv[[k, m]] * kin.c[[m]]))
                + (phi2
                    * (dv.div_omega[[i]] + sum3(|k| kin.c[[k]] * kin.omega_mixed[[k, i]])
                        - sum3(|k| kin.omega[[i, k]] * kin.b_up[[k]]).scale(wb)))
                .scale(sign)
        })
    };
    out.insert(
        "ricci.5.7b-forms",
        r57.r_i0.max_abs_diff(&second57(1.0, 2.0)),
    );
    out.insert_printed(
        "ricci.5.7b-forms",
        r57.r_i0.max_abs_diff(&second57(-1.0, 1.0)),
    );

    let sym = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        curv.ricci[[i, j]]
            + phi_inv2 * ((kin.theta - kin.psi) * kin.theta_ij[[i, j]] + dv.dtheta0[[i, j]])
            - (dv.db[[i, j]] + dv.db[[j, i]]).scale(0.5)
            - kin.b[[i]] * kin.b[[j]]
    });
    out.insert("ricci.5.8a", r57.r_ij.max_abs_diff(&sym));
    out.insert(
        "ricci.symmetry",
        max_over(&[Down, Down], |ix| {
            r57.r_ij[[ix[0], ix[1]]] - r57.r_ij[[ix[1], ix[0]]]
        }),
    );
    out.insert(
        "ricci.5.8b",
        max_over(&[Down, Down], |ix| {
            let (i, j) = (ix[0], ix[1]);
            (curv.rbar_trace[[i, j]] - curv.rbar_trace[[j, i]]).scale(0.5)
                - ((dv.db[[i, j]] - dv.db[[j, i]]).scale(0.5)
                    - dv.domega0[[i, j]]
                    - (kin.theta + kin.psi) * kin.omega[[i, j]])
        }),
    );
    let from_components = scalar_from_components(r57, frame);
    out.insert(
        "scalar.5.10-vs-5.11",
        (from_components - r57.scalar).value().abs(),
    );
    out.insert_printed(
        "scalar.5.10-vs-5.11",
        (from_components - scalar_split(curv, kin, dv, frame, 0.0))
            .value()
            .abs(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{compute_kinematics, eval_frame, load_spec};
    use crate::spatial::{spatial_connection, spatial_curvature};

    fn pipeline(
        text: &str,
        x: [f64; 4],
    ) -> (
        FrameData,
        KinematicSet,
        SpatialCurvature,
        KinematicDerivatives,
    ) {
        let spec = load_spec(text).unwrap();
        let f = eval_frame(&spec, x, 3).unwrap();
        let kin = compute_kinematics(&f).unwrap();
        let conn = spatial_connection(&f).unwrap();
        let curv = spatial_curvature(&conn, &kin, &f).unwrap();
        let dv = kinematic_derivatives(&f, &kin, &conn).unwrap();
        (f, kin, curv, dv)
    }

    #[test]
    fn minkowski_is_flat() {
        let (f, kin, curv, dv) = pipeline(
            "[metric]\nPhi = 1\ng11 = 1\ng22 = 1\ng33 = 1\n",
            [0.1, 0.2, 0.3, 0.4],
        );
        let fc = curvature_from_split(&f, &kin, &curv, &dv, StructureForm::KForm);
        assert_eq!(
            fc.r_iljk.max_abs() + fc.r_i0jk.max_abs() + fc.r_il0k.max_abs() + fc.r_i00k.max_abs(),
            0.0
        );
        let r = ricci_split(&f, &kin, &curv, &dv, RicciForm::Via57);
        assert_eq!(r.scalar.value(), 0.0);
        assert_eq!(r.r_ij.max_abs(), 0.0);
    }

    #[test]
    fn flrw_scalar_and_momentum_constraint() {
        // a = τ²: R = 6a''/a³ = 12/64 at τ = 2
        let (f, kin, curv, dv) = pipeline(
            "[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n",
            [2.0, 0.0, 0.0, 0.0],
        );
        let r = ricci_split(&f, &kin, &curv, &dv, RicciForm::Via57);
        assert!((r.scalar.value() - 0.1875).abs() < 1e-13);
        assert!(r.r_i0.max_abs() < 1e-14);
        assert!((scalar_from_components(&r, &f).value() - 0.1875).abs() < 1e-13);
    }
}
