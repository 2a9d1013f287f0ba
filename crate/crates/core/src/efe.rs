//! Einstein and stress-energy splitting, split field equations,
//! Raychaudhuri-Ehlers and the conservation laws.

use std::f64::consts::PI;

use crate::error::GeometryError;
use crate::exprlang::eval_expr;
use crate::jets::Jet;
use crate::metric::{
    contract2, raise_first, raise_vector, ExplicitMatter, FrameData, KinematicSet, MetricSpec,
};
use crate::residual::ResidualBlock;
use crate::spatial::{covariant_derivative, ConnectionSet, CovariantKind, SpatialCurvature};
use crate::structure::{KinematicDerivatives, Provenance, RicciSet};
use crate::tensor::{sum3, Down, Tensor};

/// Largest `|ḡ^{ij}π_ij|` accepted for explicit matter.
pub const PI_TRACE_TOL: f64 = 1e-9;

/// Threading-frame Einstein components `G_ij`, `G_i0`, `G_00`.
#[derive(Debug, Clone)]
pub struct EinsteinSet {
    pub g_ij: Tensor,
    pub g_i0: Tensor,
    pub g_00: Jet,
    pub provenance: Provenance,
}

/// Threading-frame stress-energy components.
#[derive(Debug, Clone)]
pub struct StressEnergy {
    pub t00: Jet,
    pub t_i0: Tensor,
    pub t_ij: Tensor,
}

/// Energy density, pressure, energy flux and anisotropic stress seen by the
/// threading observer.
#[derive(Debug, Clone)]
pub struct FluidSplit {
    pub rho: Jet,
    pub p: Jet,
    pub q: Tensor,
    pub pi: Tensor,
}

fn trace(t: &Tensor, frame: &FrameData) -> Jet {
    (0..9)
        .map(|n| frame.gbar_inv[[n / 3, n % 3]] * t[[n / 3, n % 3]])
        .sum()
}

/// `G_ij`, `G_i0`, `G_00` from the split quantities; `G_i0` is taken from the
/// Ricci set since the two coincide.
pub fn einstein_split(
    ricci: &RicciSet,
    curv: &SpatialCurvature,
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
) -> EinsteinSet {
    let phi2 = frame.phi2();
    let phi_inv2 = frame.phi_inv2();
    let t = kin.theta;
    let iso = kin.b2 + dv.div_b + (phi2 * kin.omega2).scale(0.5);
    let time = dv.theta0 - kin.psi * t + (t * t).scale(2.0 / 3.0) + kin.sigma2.scale(0.5);
    let g_ij = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let gb = frame.gbar[[i, j]];
        curv.einstein[[i, j]] + iso * gb
            - (dv.db[[i, j]] + dv.db[[j, i]]).scale(0.5)
            - kin.b[[i]] * kin.b[[j]]
            + phi_inv2 * ((t - kin.psi) * kin.theta_ij[[i, j]] + dv.dtheta0[[i, j]] - time * gb)
    });
    let g_00 = (phi2 * curv.scalar + (t * t).scale(2.0 / 3.0) - kin.sigma2
        + phi2 * phi2 * kin.omega2)
        .scale(0.5);
    EinsteinSet {
        g_ij,
        g_i0: ricci.r_i0.clone(),
        g_00,
        provenance: ricci.provenance,
    }
}

/// `G_ab = R_ab - (R/2)g_ab` assembled from Ricci components.
pub fn einstein_from_ricci(ricci: &RicciSet, frame: &FrameData) -> EinsteinSet {
    let half = ricci.scalar.scale(0.5);
    EinsteinSet {
        g_ij: Tensor::from_fn(&[Down, Down], |ix| {
            ricci.r_ij[[ix[0], ix[1]]] - half * frame.gbar[[ix[0], ix[1]]]
        }),
        g_i0: ricci.r_i0.clone(),
        g_00: ricci.r_00 + frame.phi2() * half,
        provenance: ricci.provenance,
    }
}

/// Frame components of `T = (G + Λg)/(8πG)`, so that the field equations hold
/// identically.
pub fn stress_from_efe(
    e: &EinsteinSet,
    frame: &FrameData,
    lambda: f64,
    newton_g: f64,
) -> StressEnergy {
    let k = 1.0 / (8.0 * PI * newton_g);
    StressEnergy {
        t00: (e.g_00 - frame.phi2().scale(lambda)).scale(k),
        t_i0: e.g_i0.map(|x| x.scale(k)),
        t_ij: Tensor::from_fn(&[Down, Down], |ix| {
            (e.g_ij[[ix[0], ix[1]]] + frame.gbar[[ix[0], ix[1]]].scale(lambda)).scale(k)
        }),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatterError {
    #[error(
        "anisotropic stress is not trace-free with respect to the spatial metric (trace {0:e})"
    )]
    PiNotTraceFree(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Evaluates explicit `ρ, p, q_i, π_ij` at the frame point.
pub fn fluid_explicit(
    m: &ExplicitMatter,
    spec: &MetricSpec,
    frame: &FrameData,
) -> Result<FluidSplit, MatterError> {
    let ev = |e| eval_expr(e, &frame.env, &spec.params).map_err(GeometryError::from);
    let rho = ev(&m.rho)?;
    let p = ev(&m.p)?;
    let q = [ev(&m.q[0])?, ev(&m.q[1])?, ev(&m.q[2])?];
    let mut pi = [[Jet::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            pi[i][j] = ev(m.pi(i, j))?;
        }
    }
    let pi = Tensor::matrix([Down, Down], &pi);
    let tr = trace(&pi, frame).value();
    if !(tr.abs() <= PI_TRACE_TOL) {
        return Err(MatterError::PiNotTraceFree(tr));
    }
    Ok(FluidSplit {
        rho,
        p,
        q: Tensor::vector(Down, q),
        pi,
    })
}

/// `T_00 = Φ²ρ`, `T_i0 = -Φq_i`, `T_ij = pḡ_ij + π_ij`.
pub fn stress_from_fluid(f: &FluidSplit, frame: &FrameData) -> StressEnergy {
    StressEnergy {
        t00: frame.phi2() * f.rho,
        t_i0: f.q.map(|q| -(frame.phi * *q)),
        t_ij: Tensor::from_fn(&[Down, Down], |ix| {
            f.p * frame.gbar[[ix[0], ix[1]]] + f.pi[[ix[0], ix[1]]]
        }),
    }
}

pub fn stress_energy_split(t: &StressEnergy, frame: &FrameData) -> FluidSplit {
    let p = trace(&t.t_ij, frame).scale(1.0 / 3.0);
    FluidSplit {
        rho: frame.phi_inv2() * t.t00,
        p,
        q: t.t_i0.map(|x| -(frame.phi_inv * *x)),
        pi: Tensor::from_fn(&[Down, Down], |ix| {
            t.t_ij[[ix[0], ix[1]]] - p * frame.gbar[[ix[0], ix[1]]]
        }),
    }
}

/// Individual field-equation residual values, kept so that their linear
/// relations can be checked.
#[derive(Debug, Clone)]
pub struct EfeValues {
    pub r72: Tensor,
    pub r73a: Tensor,
    pub r73b: Tensor,
    pub r74: Jet,
    pub r75: Jet,
    pub r76: Jet,
    pub direct_ij: Tensor,
    pub direct_i0: Tensor,
    pub direct_00: Jet,
}

/// `R_i0` in the derivative-of-expansion form.
pub fn momentum_second_form(
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
) -> Tensor {
    momentum_variant(kin, dv, frame, 1.0, 2.0)
}

/// `Θ^k_i|k - Θ_|i + Θc_i - Θ_ik c^k + s·Φ²(ω^k_i|k + c_kω^k_i - w·ω_ik b^k)`.
fn momentum_variant(
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
    s: f64,
    w: f64,
) -> Tensor {
    let c_up = raise_vector(&kin.c, &frame.gbar_inv);
    Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        dv.div_theta[[i]] - dv.dtheta_scalar[[i]] + kin.theta * kin.c[[i]]
            - sum3(|k| kin.theta_ij[[i, k]] * c_up[[k]])
            + (frame.phi2()
                * (dv.div_omega[[i]] + sum3(|k| kin.c[[k]] * kin.omega_mixed[[k, i]])
                    - sum3(|k| kin.omega[[i, k]] * kin.b_up[[k]]).scale(w)))
            .scale(s)
    })
}

fn trace_bracket(kin: &KinematicSet, dv: &KinematicDerivatives, theta0_factor: f64) -> Jet {
    let t = kin.theta;
    t * t + dv.theta0.scale(theta0_factor) + kin.sigma2.scale(1.5) - (kin.psi * t).scale(2.0)
}

#[allow(clippy::too_many_arguments)]
pub fn efe_values(
    e: &EinsteinSet,
    t: &StressEnergy,
    fluid: &FluidSplit,
    frame: &FrameData,
    kin: &KinematicSet,
    curv: &SpatialCurvature,
    dv: &KinematicDerivatives,
    lambda: f64,
    newton_g: f64,
) -> EfeValues {
    let k8 = 8.0 * PI * newton_g;
    let phi2 = frame.phi2();
    let r72 = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        e.g_ij[[i, j]] + frame.gbar[[i, j]].scale(lambda)
            - (fluid.p * frame.gbar[[i, j]] + fluid.pi[[i, j]]).scale(k8)
    });
    let flux = |i: usize| (frame.phi * fluid.q[[i]]).scale(k8);
    let r73a = Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        curv.rbar0_trace[[i]] + kin.theta * kin.b[[i]]
            - sum3(|k| kin.theta_ij[[i, k]] * kin.b_up[[k]])
            - phi2 * sum3(|k| kin.omega[[i, k]] * kin.b_up[[k]])
            + flux(i)
    });
    let second = momentum_second_form(kin, dv, frame);
    let r73b = Tensor::from_fn(&[Down], |ix| second[[ix[0]]] + flux(ix[0]));
    let t2 = kin.theta * kin.theta;
    let r74 = phi2 * curv.scalar + t2.scale(2.0 / 3.0) - kin.sigma2 + phi2 * phi2 * kin.omega2
        - (phi2 * (Jet::constant(lambda) + fluid.rho.scale(k8))).scale(2.0);
    let r75 = curv.scalar.scale(0.5)
        - ((kin.b2 + dv.div_b).scale(2.0)
            + (phi2 * kin.omega2).scale(1.5)
            + Jet::constant(3.0 * lambda)
            - frame.phi_inv2() * trace_bracket(kin, dv, 2.0)
            - fluid.p.scale(3.0 * k8));
    let r76 = raychaudhuri_residual(kin, dv, frame, fluid, lambda, newton_g);
    let direct_ij = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        e.g_ij[[i, j]] + frame.gbar[[i, j]].scale(lambda) - t.t_ij[[i, j]].scale(k8)
    });
    let direct_i0 = Tensor::from_fn(&[Down], |ix| e.g_i0[[ix[0]]] - t.t_i0[[ix[0]]].scale(k8));
    let direct_00 = e.g_00 - phi2.scale(lambda) - t.t00.scale(k8);
    EfeValues {
        r72,
        r73a,
        r73b,
        r74,
        r75,
        r76,
        direct_ij,
        direct_i0,
        direct_00,
    }
}

/// `Θ_|0 + ⅓Θ² + σ² - ΨΘ - Φ²{b² + b^k_|k + Φ²ω² + Λ - 4πG(ρ+3p)}`.
pub fn raychaudhuri_residual(
    kin: &KinematicSet,
    dv: &KinematicDerivatives,
    frame: &FrameData,
    fluid: &FluidSplit,
    lambda: f64,
    newton_g: f64,
) -> Jet {
    let t = kin.theta;
    let phi2 = frame.phi2();
    dv.theta0 + (t * t).scale(1.0 / 3.0) + kin.sigma2
        - kin.psi * t
        - phi2
            * (kin.b2 + dv.div_b + phi2 * kin.omega2 + Jet::constant(lambda)
                - (fluid.rho + fluid.p.scale(3.0)).scale(4.0 * PI * newton_g))
}

#[allow(clippy::too_many_arguments)]
pub fn efe_residuals(
    e: &EinsteinSet,
    t: &StressEnergy,
    fluid: &FluidSplit,
    frame: &FrameData,
    kin: &KinematicSet,
    curv: &SpatialCurvature,
    dv: &KinematicDerivatives,
    lambda: f64,
    newton_g: f64,
) -> ResidualBlock {
    let v = efe_values(e, t, fluid, frame, kin, curv, dv, lambda, newton_g);
    let mut out = ResidualBlock::new();
    let phi2 = frame.phi2();
    out.insert_tensor("sefe.7.2", &v.r72);
    out.insert_tensor("mefe.7.3a", &v.r73a);
    out.insert_tensor("mefe.7.3b", &v.r73b);
    let printed = momentum_variant(kin, dv, frame, -1.0, 2.0);
    let k8 = 8.0 * PI * newton_g;
    out.insert_printed(
        "mefe.7.3b",
        Tensor::from_fn(&[Down], |ix| {
            printed[[ix[0]]] + (frame.phi * fluid.q[[ix[0]]]).scale(k8)
        })
        .max_abs(),
    );
    out.insert("tefe.7.4", v.r74.value());
    out.insert("trace.7.5", v.r75.value());
    let printed75 = v.r75 - frame.phi_inv2() * dv.theta0;
    out.insert_printed("trace.7.5", printed75.value());
    out.insert("raychaudhuri.7.6", v.r76.value());
    out.insert(
        "efe.direct",
        v.direct_ij
            .max_abs()
            .max(v.direct_i0.max_abs())
            .max(v.direct_00.value().abs()),
    );

    // linear relations between the individual equations
    out.insert("trace.7.5-vs-7.2", (trace(&v.r72, frame) + v.r75).value());
    out.insert(
        "raychaudhuri.7.6-combination",
        (v.r76 - (phi2 * v.r75).scale(0.5) + v.r74.scale(0.25)).value(),
    );
    out.insert(
        "efe.split-completeness",
        v.direct_ij
            .max_abs_diff(&v.r72)
            .max(v.direct_i0.max_abs_diff(&v.r73a))
            .max((v.direct_00 - v.r74.scale(0.5)).value().abs()),
    );
    out
}

/// Conservation-law expressions evaluated on a stress-energy tensor and on
/// its fluid split.
#[derive(Debug, Clone)]
pub struct ConservationValues {
    pub energy_raw: Jet,
    pub momentum_raw: Tensor,
    pub energy_fluid: Jet,
    pub momentum_fluid: Tensor,
}

pub fn conservation_values(
    t: &StressEnergy,
    fluid: &FluidSplit,
    frame: &FrameData,
    kin: &KinematicSet,
    conn: &ConnectionSet,
) -> Result<ConservationValues, GeometryError> {
    use CovariantKind::{Spatial, Temporal};
    let cd = |x: &Tensor, kind| covariant_derivative(x, frame, conn, kin, kind);
    let gi = &frame.gbar_inv;
    let phi = frame.phi;
    let phi2 = frame.phi2();
    let (th, psi) = (kin.theta, kin.psi);

    // T^j_0 and T^j_i
    let t_up0 = raise_vector(&t.t_i0, gi);
    let t_mixed = raise_first(&t.t_ij, gi);
    let d_up0 = cd(&t_up0, Spatial)?;
    let d_mixed = cd(&t_mixed, Spatial)?;
    let d_i0 = cd(&t.t_i0, Temporal)?;
    let c_up = raise_vector(&kin.c, gi);

    let energy_raw = phi2
        * (sum3(|j| d_up0[[j, j]])
            + sum3(|j| (kin.b_up[[j]].scale(2.0) - c_up[[j]]) * t.t_i0[[j]])
            - contract2(&kin.theta_ij, &t.t_ij, gi))
        - frame.d0(&t.t00)
        + (psi.scale(2.0) - th) * t.t00;
    let momentum_raw = Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        phi2 * (sum3(|j| d_mixed[[j, i, j]]) - sum3(|j| kin.omega[[i, j]] * t_up0[[j]])
            + sum3(|j| t.t_ij[[i, j]] * kin.b_up[[j]]))
            + (psi - th) * t.t_i0[[i]]
            - d_i0[[i]]
            + t.t00 * kin.b[[i]]
            - sum3(|j| kin.theta_ij[[i, j]] * t_up0[[j]])
    });

    let q_up = raise_vector(&fluid.q, gi);
    let dq = cd(&fluid.q, Spatial)?;
    let dq0 = cd(&fluid.q, Temporal)?;
    let dpi = cd(&raise_first(&fluid.pi, gi), Spatial)?;
    let div_q: Jet = (0..9)
        .map(|n| gi[[n / 3, n % 3]] * dq[[n / 3, n % 3]])
        .sum();
    let energy_fluid = frame.d0(&fluid.rho)
        + (fluid.rho + fluid.p) * th
        + contract2(&kin.sigma, &fluid.pi, gi)
        + phi * (div_q + sum3(|j| kin.b[[j]] * q_up[[j]]).scale(2.0));
    let momentum_fluid = Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        dq0[[i]]
            + (th * fluid.q[[i]]).scale(4.0 / 3.0)
            + sum3(|j| (kin.sigma[[i, j]] + phi2 * kin.omega[[i, j]]) * q_up[[j]])
            + phi
                * (frame.delta(&fluid.p, i)
                    + sum3(|j| dpi[[j, i, j]])
                    + (fluid.p + fluid.rho) * kin.b[[i]]
                    + sum3(|j| fluid.pi[[i, j]] * kin.b_up[[j]]))
    });
    Ok(ConservationValues {
        energy_raw,
        momentum_raw,
        energy_fluid,
        momentum_fluid,
    })
}

pub fn conservation_residuals(v: &ConservationValues, frame: &FrameData) -> ResidualBlock {
    let mut out = ResidualBlock::new();
    out.insert("cons.8.2", v.energy_raw.value());
    out.insert_tensor("cons.8.3", &v.momentum_raw);
    out.insert("cons.energy.8.5", v.energy_fluid.value());
    out.insert_tensor("cons.momentum.8.6", &v.momentum_fluid);
    // the fluid forms are rescaled raw forms
    out.insert(
        "cons.8.5-vs-8.2",
        (v.energy_fluid + frame.phi_inv2() * v.energy_raw).value(),
    );
    out.insert(
        "cons.8.6-vs-8.3",
        v.momentum_fluid
            .max_abs_diff(&v.momentum_raw.map(|x| frame.phi_inv * *x)),
    );
    out
}
