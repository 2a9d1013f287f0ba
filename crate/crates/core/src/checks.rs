//! Every residual check at one point: split identities, dual-path agreement
//! with the oracle, field equations, conservation and the almost-FLRW suite.

use crate::cosmology::{self, AlmostFlrwSpec};
use crate::efe::{
    conservation_residuals, conservation_values, efe_residuals, einstein_split, fluid_explicit,
    stress_energy_split, stress_from_efe, stress_from_fluid, FluidSplit, MatterError, StressEnergy,
};
use crate::error::GeometryError;
use crate::jets::Jet;
use crate::metric::{kinematic_residuals, Matter, MetricSpec};
use crate::oracle::{
    assemble_metric4, coordinate_stress, divergence4, project_covector, project_frame, riemann4,
    self_check_residuals,
};
use crate::pipeline::SplitPoint;
use crate::residual::ResidualBlock;
use crate::spatial::bianchi_residuals;
use crate::structure::{
    curvature_from_split, curvature_identity_residuals, ricci_residuals, ricci_split, RicciForm,
    RicciSet, StructureForm,
};
use crate::tensor::rel_diff;

/// Jet order used unless the caller asks otherwise.
pub const DEFAULT_ORDER: usize = 3;

/// Tolerance for recognizing a spatially flat FLRW frame.
const FLRW_DETECT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PointError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Matter(#[from] MatterError),
}

impl From<crate::jets::JetError> for PointError {
    fn from(e: crate::jets::JetError) -> Self {
        PointError::Geometry(e.into())
    }
}

fn ricci_rel(a: &RicciSet, b: &RicciSet) -> f64 {
    a.r_ij
        .max_rel_diff(&b.r_ij)
        .max(a.r_i0.max_rel_diff(&b.r_i0))
        .max(rel_diff(a.r_00.value(), b.r_00.value()))
}

/// Runs all checks at `point`. `cosmo` adds the closed-form suite for the
/// almost-FLRW family the metric was built from.
pub fn check_point(
    spec: &MetricSpec,
    point: [f64; 4],
    order: usize,
    cosmo: Option<&AlmostFlrwSpec>,
) -> Result<ResidualBlock, PointError> {
    let sp = SplitPoint::new(spec, point, order)?;
    let SplitPoint {
        frame: f,
        kin,
        conn,
        curv,
        dv,
    } = &sp;
    let mut out = ResidualBlock::new();
    for (name, v) in kinematic_residuals(f, kin) {
        out.insert(name, v);
    }
    out.merge(bianchi_residuals(curv, conn, kin, f)?);

    let fk = curvature_from_split(f, kin, curv, dv, StructureForm::KForm);
    let ft = curvature_from_split(f, kin, curv, dv, StructureForm::ThetaForm);
    out.merge(curvature_identity_residuals(&fk, &ft, curv, kin, dv, f));
    let r56 = ricci_split(f, kin, curv, dv, RicciForm::Via56);
    let r57 = ricci_split(f, kin, curv, dv, RicciForm::Via57);
    out.merge(ricci_residuals(&r56, &r57, curv, kin, dv, f));

    let e = einstein_split(&r57, curv, kin, dv, f);
    let (t, fluid): (StressEnergy, FluidSplit) = match &spec.matter {
        Matter::FromEfe => {
            let t = stress_from_efe(&e, f, spec.lambda, spec.newton_g);
            let fl = stress_energy_split(&t, f);
            (t, fl)
        }
        Matter::Explicit(m) => {
            let fl = fluid_explicit(m, spec, f)?;
            (stress_from_fluid(&fl, f), fl)
        }
    };
    out.merge(efe_residuals(
        &e,
        &t,
        &fluid,
        f,
        kin,
        curv,
        dv,
        spec.lambda,
        spec.newton_g,
    ));

    // independent 4D path
    let r4 = riemann4(assemble_metric4(f)?)?;
    let (fo, ro, eo) = project_frame(&r4, f)?;
    for (form, fc) in [("4.5", &fk), ("4.6", &ft)] {
        let d = fc.rel_diff(&fo);
        for (part, v) in ["iljk", "i0jk", "il0k", "i00k"].iter().zip(d) {
            out.insert(&format!("oracle.curvature.{form}.{part}"), v);
        }
    }
    out.insert("oracle.ricci.5.6", ricci_rel(&r56, &ro));
    out.insert("oracle.ricci.5.7", ricci_rel(&r57, &ro));
    out.insert(
        "oracle.scalar.5.11",
        rel_diff(r57.scalar.value(), ro.scalar.value()),
    );
    out.insert(
        "oracle.einstein.6.3",
        e.g_ij
            .max_rel_diff(&eo.g_ij)
            .max(e.g_i0.max_rel_diff(&eo.g_i0))
            .max(rel_diff(e.g_00.value(), eo.g_00.value())),
    );
    // conservation differentiates T, which needs third metric derivatives
    if order >= DEFAULT_ORDER {
        let cv = conservation_values(&t, &fluid, f, kin, conn)?;
        out.merge(conservation_residuals(&cv, f));
        let div = project_covector(
            &divergence4(&coordinate_stress(&t, &r4.metric)?, &r4)?,
            &r4.metric,
        )?;
        let phi2 = f.phi2().value();
        out.insert(
            "oracle.divergence.8.2",
            rel_diff(cv.energy_raw.value(), phi2 * div[0].value()),
        );
        out.insert(
            "oracle.divergence.8.3",
            (0..3)
                .map(|i| rel_diff(cv.momentum_raw[[i]].value(), phi2 * div[i + 1].value()))
                .fold(0.0, f64::max),
        );
    }
    out.merge(self_check_residuals(&r4)?);

    if let Some(c) = flrw_background(&sp) {
        let (f1, f2) = c.friedmann(
            fluid.rho.value(),
            fluid.p.value(),
            spec.lambda,
            spec.newton_g,
        );
        out.insert("cosmo.friedmann.9.23", f1);
        out.insert("cosmo.friedmann.9.24", f2);
    }
    if let Some(cs) = cosmo {
        out.merge(cosmology_checks(cs, &sp, &fluid, spec, point)?);
    }
    Ok(out)
}

/// Background quantities read off a frame that is spatially flat FLRW in
/// conformal time: `ξ = 0`, `ḡ_ij = Φ²δ_ij` as jets, `Φ` independent of `x^i`.
pub struct FlrwBackground {
    pub a: f64,
    pub hubble: f64,
    pub hubble_prime: f64,
}

impl FlrwBackground {
    /// `𝓗² - (8πG/3)a²ρ - Λa²/3` and `𝓗' + (4πG/3)a²(ρ+3p) - Λa²/3`.
    pub fn friedmann(&self, rho: f64, p: f64, lambda: f64, newton_g: f64) -> (f64, f64) {
        let aa = self.a * self.a;
        let k = std::f64::consts::PI * newton_g * aa;
        let l = lambda * aa / 3.0;
        (
            self.hubble * self.hubble - 8.0 * k / 3.0 * rho - l,
            self.hubble_prime + 4.0 * k / 3.0 * (rho + 3.0 * p) - l,
        )
    }
}

fn jet_dist(a: &Jet, b: &Jet) -> f64 {
    let d = a - b;
    d.coefficients().fold(0.0, |m, (_, v)| m.max(v.abs()))
}

pub fn flrw_background(sp: &SplitPoint) -> Option<FlrwBackground> {
    let f = &sp.frame;
    let phi2 = f.phi2();
    let flat =
        f.xi.iter()
            .all(|x| jet_dist(x, &Jet::zero()) <= FLRW_DETECT_TOL)
            && (0..3).all(|i| {
                (0..3).all(|j| {
                    let target = if i == j { phi2 } else { Jet::zero() };
                    jet_dist(&f.gbar[[i, j]], &target) <= FLRW_DETECT_TOL
                })
            })
            && (1..4).all(|k| {
                f.phi
                    .d(k)
                    .coefficients()
                    .all(|(_, v)| v.abs() <= FLRW_DETECT_TOL)
            });
    if !flat {
        return None;
    }
    // a = Φ, 𝓗 = Ψ
    let psi = sp.kin.psi;
    Some(FlrwBackground {
        a: f.phi.value(),
        hubble: psi.value(),
        hubble_prime: psi.d(0).value(),
    })
}

fn cosmology_checks(
    cs: &AlmostFlrwSpec,
    sp: &SplitPoint,
    fluid: &FluidSplit,
    spec: &MetricSpec,
    point: [f64; 4],
) -> Result<ResidualBlock, PointError> {
    let mut out = cosmology::theorem_checks(sp);
    let cf = cosmology::closed_forms(cs, point)?;
    for (name, d, _, _) in cosmology::closed_form_agreement(&cf, sp) {
        out.insert(&format!("cosmo.closed.{name}"), d);
    }
    if cs.perfect_fluid {
        let pe = cosmology::perturbed_efe(
            &cf,
            sp,
            fluid.rho.value(),
            fluid.p.value(),
            spec.lambda,
            spec.newton_g,
        )?;
        let names = ["9.18", "9.20", "9.21", "9.22"];
        for (k, n) in names.iter().enumerate() {
            out.insert(&format!("cosmo.efe.{n}-vs-general"), pe.delta[k]);
        }
        out.insert_printed("cosmo.efe.9.22-vs-general", pe.printed_delta_922);
        // with explicit perfect-fluid matter the closed forms are genuine field equations
        if matches!(spec.matter, Matter::Explicit(_)) {
            for (k, n) in names.iter().enumerate() {
                out.insert(&format!("cosmo.efe.{n}"), pe.closed[k]);
            }
            out.insert_printed("cosmo.efe.9.22", pe.printed_922);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::load_spec;

    #[test]
    fn minkowski_is_clean() {
        let spec = load_spec("[metric]\nPhi = 1\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap();
        let block = check_point(&spec, [0.3, -0.2, 0.5, 1.0], DEFAULT_ORDER, None).unwrap();
        for (k, v) in block.entries() {
            assert!(*v <= 1e-13, "{k} = {v}");
        }
        assert!(block.get("cosmo.friedmann.9.23").is_some());
    }

    #[test]
    fn order_two_runs_the_cheap_subset() {
        let spec = load_spec(
            "[metric]\nPhi = 1 + 0.1*x1*x0\nxi2 = 0.2*x1\ng11 = 1 + x0^2\ng22 = 1\ng33 = 1\n",
        )
        .unwrap();
        let x = [1.2, 0.4, -0.3, 0.5];
        let full = check_point(&spec, x, DEFAULT_ORDER, None).unwrap();
        let cheap = check_point(&spec, x, 2, None).unwrap();
        assert!(cheap.get("oracle.curvature.4.6.i00k").is_some());
        assert!(cheap.get("cons.8.2").is_none() && full.get("cons.8.2").is_some());
        assert!(cheap.get("oracle.contracted-bianchi").is_none());
        for (k, v) in cheap.entries() {
            assert!(*v <= 1e-9, "{k} = {v}");
        }
    }

    #[test]
    fn flrw_detection_reads_hubble_rate() {
        let spec = load_spec("[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n").unwrap();
        let sp = SplitPoint::new(&spec, [2.0, 0.0, 0.0, 0.0], 3).unwrap();
        let bg = flrw_background(&sp).unwrap();
        assert_eq!(bg.a, 4.0);
        assert!((bg.hubble - 1.0).abs() < 1e-15);
        assert!((bg.hubble_prime + 0.5).abs() < 1e-15);
        let rot =
            load_spec("[metric]\nPhi = 1\nxi1 = 0.4*x2\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap();
        assert!(
            flrw_background(&SplitPoint::new(&rot, [0.0, 0.0, 1.0, 0.0], 3).unwrap()).is_none()
        );
    }
}
