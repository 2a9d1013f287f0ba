//! Threading-form metric specifications, frame data and kinematics.
//!
//! The line element is
//! `ds² = -Φ²(dx⁰)² + 2ξ_i dx⁰dx^i + g_ij dx^i dx^j`,
//! and everything downstream is expressed in the adapted frame
//! `{∂/∂x⁰, δ/δx^i = ∂/∂x^i - A_i ∂/∂x⁰}` with `A_i = -Φ⁻²ξ_i`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::GeometryError;
use crate::exprlang::{self, eval_expr, parse_expr, validate_bindings, Expr, SyntaxError};
use crate::jets::{invert_jet_matrix, seed_point, Jet, JetEnv, JetError};
use crate::tensor::{sum3, Down, Tensor, Up};

/// Position of `(i, j)` with `i <= j` in the packed symmetric storage.
pub fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

const SYM_KEYS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMatter {
    pub rho: Expr,
    pub p: Expr,
    pub q: [Expr; 3],
    /// Packed `i <= j` components of the anisotropic stress.
    pub pi: [Expr; 6],
}

impl ExplicitMatter {
    pub fn pi(&self, i: usize, j: usize) -> &Expr {
        &self.pi[sym_index(i, j)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Matter {
    /// Stress-energy defined from the geometry so that the field equations hold.
    FromEfe,
    Explicit(ExplicitMatter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub params: BTreeMap<String, f64>,
    pub phi: Expr,
    pub xi: [Expr; 3],
    /// Packed `i <= j` components of `g_ij`.
    pub g: [Expr; 6],
    pub matter: Matter,
    pub lambda: f64,
    pub newton_g: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("SyntaxError in `{key}` (line {line}): {source}")]
    Syntax {
        key: String,
        line: usize,
        #[source]
        source: SyntaxError,
    },
    #[error("UnboundIdentifier {} in `{key}`", .names.join(", "))]
    UnboundIdentifier { key: String, names: Vec<String> },
    #[error("MissingKey {0}")]
    MissingKey(String),
    #[error("DuplicateKey {key} (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("UnknownKey {key} in section [{section}] (line {line})")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("UnknownSection [{name}] (line {line})")]
    UnknownSection { name: String, line: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("InvalidValue for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

fn zero() -> Expr {
    Expr::num(0.0)
}

impl MetricSpec {
    pub fn g(&self, i: usize, j: usize) -> &Expr {
        &self.g[sym_index(i, j)]
    }

    /// Canonical spec-file rendering; `load_spec` of the result yields an
    /// equal spec.
    pub fn to_spec_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[params]\n");
        for (k, v) in &self.params {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push_str("[metric]\n");
        let _ = writeln!(s, "Phi = {}", self.phi);
        for (i, xi) in self.xi.iter().enumerate() {
            let _ = writeln!(s, "xi{} = {xi}", i + 1);
        }
        for (n, (i, j)) in SYM_KEYS.iter().enumerate() {
            let _ = writeln!(s, "g{}{} = {}", i + 1, j + 1, self.g[n]);
        }
        s.push_str("[matter]\n");
        match &self.matter {
            Matter::FromEfe => s.push_str("mode = from_efe\n"),
            Matter::Explicit(m) => {
                s.push_str("mode = explicit\n");
                let _ = writeln!(s, "rho = {}", m.rho);
                let _ = writeln!(s, "p = {}", m.p);
                for (i, q) in m.q.iter().enumerate() {
                    let _ = writeln!(s, "q{} = {q}", i + 1);
                }
                for (n, (i, j)) in SYM_KEYS.iter().enumerate() {
                    let _ = writeln!(s, "pi{}{} = {}", i + 1, j + 1, m.pi[n]);
                }
            }
        }
        s.push_str("[constants]\n");
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "newton_g = {}", self.newton_g);
        s
    }

    /// Checks every expression against the parameter table.
    pub fn validate(&self) -> Result<(), SpecError> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let check = |key: String, e: &Expr| {
            validate_bindings(e, names.iter().copied())
                .map_err(|names| SpecError::UnboundIdentifier { key, names })
        };
        check("Phi".into(), &self.phi)?;
        for (i, e) in self.xi.iter().enumerate() {
            check(format!("xi{}", i + 1), e)?;
        }
        for (n, (i, j)) in SYM_KEYS.iter().enumerate() {
            check(format!("g{}{}", i + 1, j + 1), &self.g[n])?;
        }
        if let Matter::Explicit(m) = &self.matter {
            check("rho".into(), &m.rho)?;
            check("p".into(), &m.p)?;
            for (i, e) in m.q.iter().enumerate() {
                check(format!("q{}", i + 1), e)?;
            }
            for (n, (i, j)) in SYM_KEYS.iter().enumerate() {
                check(format!("pi{}{}", i + 1, j + 1), &m.pi[n])?;
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Section {
    entries: BTreeMap<String, (usize, String)>,
}

fn sym_key(prefix: &str, key: &str) -> Option<usize> {
    let rest = key.strip_prefix(prefix)?;
    let b = rest.as_bytes();
    if b.len() != 2 {
        return None;
    }
    let i = (b[0] as char).to_digit(10)? as usize;
    let j = (b[1] as char).to_digit(10)? as usize;
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) || i > j {
        return None;
    }
    Some(sym_index(i - 1, j - 1))
}

fn vec_key(prefix: &str, key: &str) -> Option<usize> {
    let rest = key.strip_prefix(prefix)?;
    match rest {
        "1" => Some(0),
        "2" => Some(1),
        "3" => Some(2),
        _ => None,
    }
}

/// Parses and validates a metric specification file.
pub fn load_spec(text: &str) -> Result<MetricSpec, SpecError> {
    const SECTIONS: [&str; 4] = ["params", "metric", "matter", "constants"];
    let mut sections: BTreeMap<&str, Section> = BTreeMap::new();
    let mut param_order: Vec<(String, usize, String)> = Vec::new();
    let mut current: Option<&str> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| SpecError::Malformed {
                line,
                reason: "unterminated section header".into(),
            })?;
            let name = name.trim();
            let Some(&known) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(SpecError::UnknownSection {
                    name: name.to_string(),
                    line,
                });
            };
            current = Some(known);
            sections.entry(known).or_default();
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(SpecError::Malformed {
                line,
                reason: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(SpecError::Malformed {
                line,
                reason: "empty key".into(),
            });
        }
        let Some(section) = current else {
            return Err(SpecError::Malformed {
                line,
                reason: "entry outside of any section".into(),
            });
        };
        let sec = sections.entry(section).or_default();
        if sec.entries.contains_key(key) {
            return Err(SpecError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
        sec.entries
            .insert(key.to_string(), (line, value.to_string()));
        if section == "params" {
            param_order.push((key.to_string(), line, value.to_string()));
        }
    }

    let parse = |key: &str, line: usize, value: &str| {
        parse_expr(value).map_err(|source| SpecError::Syntax {
            key: key.to_string(),
            line,
            source,
        })
    };

    // parameters may refer to earlier parameters but never to coordinates
    let mut params = BTreeMap::new();
    for (key, line, value) in &param_order {
        let valid_name = key
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_name
            || exprlang::COORDINATES.contains(&key.as_str())
            || exprlang::Func::from_name(key).is_some()
        {
            return Err(SpecError::InvalidValue {
                key: key.clone(),
                reason: "not a usable parameter name".into(),
            });
        }
        let e = parse(key, *line, value)?;
        let v = exprlang::eval_f64(&e, [f64::NAN; 4], &params);
        let unbound: Vec<String> = e
            .identifiers()
            .into_iter()
            .filter(|n| !params.contains_key(*n))
            .map(str::to_string)
            .collect();
        if !unbound.is_empty() {
            return Err(SpecError::UnboundIdentifier {
                key: key.clone(),
                names: unbound,
            });
        }
        match v {
            Some(v) if v.is_finite() => {
                params.insert(key.clone(), v);
            }
            _ => {
                return Err(SpecError::InvalidValue {
                    key: key.clone(),
                    reason: "parameter does not evaluate to a finite real".into(),
                })
            }
        }
    }

    let empty = Section::default();
    let metric = sections.get("metric").unwrap_or(&empty);
    let mut phi = None;
    let mut xi = [zero(), zero(), zero()];
    let mut g: [Option<Expr>; 6] = Default::default();
    for (key, (line, value)) in &metric.entries {
        let e = parse(key, *line, value)?;
        if key == "Phi" {
            phi = Some(e);
        } else if let Some(i) = vec_key("xi", key) {
            xi[i] = e;
        } else if let Some(n) = sym_key("g", key) {
            g[n] = Some(e);
        } else {
            return Err(SpecError::UnknownKey {
                section: "metric".into(),
                key: key.clone(),
                line: *line,
            });
        }
    }
    for (name, n) in [("g11", 0), ("g22", 3), ("g33", 5)] {
        if g[n].is_none() {
            return Err(SpecError::MissingKey(name.into()));
        }
    }
    let phi = phi.ok_or_else(|| SpecError::MissingKey("Phi".into()))?;
    let g = g.map(|e| e.unwrap_or_else(zero));

    let matter_sec = sections.get("matter").unwrap_or(&empty);
    let mode = matter_sec
        .entries
        .get("mode")
        .map(|(_, v)| v.as_str())
        .unwrap_or("from_efe");
    let matter = match mode {
        "from_efe" => {
            if let Some((key, (line, _))) = matter_sec.entries.iter().find(|(k, _)| *k != "mode") {
                return Err(SpecError::UnknownKey {
                    section: "matter".into(),
                    key: key.clone(),
                    line: *line,
                });
            }
            Matter::FromEfe
        }
        "explicit" => {
            let mut m = ExplicitMatter {
                rho: zero(),
                p: zero(),
                q: [zero(), zero(), zero()],
                pi: [zero(), zero(), zero(), zero(), zero(), zero()],
            };
            for (key, (line, value)) in &matter_sec.entries {
                if key == "mode" {
                    continue;
                }
                let e = parse(key, *line, value)?;
                if key == "rho" {
                    m.rho = e;
                } else if key == "p" {
                    m.p = e;
                } else if let Some(i) = vec_key("q", key) {
                    m.q[i] = e;
                } else if let Some(n) = sym_key("pi", key) {
                    m.pi[n] = e;
                } else {
                    return Err(SpecError::UnknownKey {
                        section: "matter".into(),
                        key: key.clone(),
                        line: *line,
                    });
                }
            }
            Matter::Explicit(m)
        }
        other => {
            return Err(SpecError::InvalidValue {
                key: "mode".into(),
                reason: format!("`{other}` is neither from_efe nor explicit"),
            })
        }
    };

    let consts = sections.get("constants").unwrap_or(&empty);
    let mut lambda = 0.0;
    let mut newton_g = 1.0;
    for (key, (line, value)) in &consts.entries {
        let e = parse(key, *line, value)?;
        if let Err(names) = validate_bindings(&e, params.keys().map(String::as_str)) {
            return Err(SpecError::UnboundIdentifier {
                key: key.clone(),
                names,
            });
        }
        let v = exprlang::eval_f64(&e, [f64::NAN; 4], &params)
            .filter(|v| v.is_finite())
            .ok_or_else(|| SpecError::InvalidValue {
                key: key.clone(),
                reason: "constant does not evaluate to a finite real".into(),
            })?;
        match key.as_str() {
            "lambda" => lambda = v,
            "newton_g" => newton_g = v,
            _ => {
                return Err(SpecError::UnknownKey {
                    section: "constants".into(),
                    key: key.clone(),
                    line: *line,
                })
            }
        }
    }
    if newton_g == 0.0 {
        return Err(SpecError::InvalidValue {
            key: "newton_g".into(),
            reason: "must be nonzero".into(),
        });
    }

    let spec = MetricSpec {
        params,
        phi,
        xi,
        g,
        matter,
        lambda,
        newton_g,
    };
    spec.validate()?;
    Ok(spec)
}

/// Jets of the metric functions and the adapted-frame quantities at a point.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub point: [f64; 4],
    pub order: usize,
    pub env: JetEnv,
    pub phi: Jet,
    pub phi_inv: Jet,
    pub xi: [Jet; 3],
    pub g: [[Jet; 3]; 3],
    /// `A_i = -Φ⁻²ξ_i`.
    pub a: [Jet; 3],
    /// `ḡ_ij = g_ij + Φ²A_iA_j`, lower slots.
    pub gbar: Tensor,
    /// `ḡ^{ij}`, upper slots.
    pub gbar_inv: Tensor,
}

impl FrameData {
    /// `δf/δx^i` for spatial index `i`, one jet order lower than `f`.
    pub fn delta(&self, f: &Jet, i: usize) -> Jet {
        f.d(i + 1) - self.a[i] * f.d(0)
    }

    /// `∂f/∂x⁰`.
    pub fn d0(&self, f: &Jet) -> Jet {
        f.d(0)
    }

    pub fn phi2(&self) -> Jet {
        self.phi * self.phi
    }

    pub fn phi_inv2(&self) -> Jet {
        self.phi_inv * self.phi_inv
    }
}

/// `[∂f/∂x⁰, δf/δx¹, δf/δx², δf/δx³]`.
pub fn delta_derivative(f: &Jet, frame: &FrameData) -> Result<[Jet; 4], JetError> {
    let d0 = f.try_d(0)?;
    let mut out = [d0; 4];
    for i in 0..3 {
        out[i + 1] = f.try_d(i + 1)? - frame.a[i] * d0;
    }
    Ok(out)
}

/// Evaluates the frame jets of `spec` at `point`.
pub fn eval_frame(
    spec: &MetricSpec,
    point: [f64; 4],
    order: usize,
) -> Result<FrameData, GeometryError> {
    let env = seed_point(point, order)?;
    let ev = |e: &Expr| eval_expr(e, &env, &spec.params);
    let phi = ev(&spec.phi)?;
    if !(phi.value() > 0.0) {
        return Err(GeometryError::NotLorentzian(format!(
            "Phi = {} at the point; the positive root with Phi^2 > 0 is required",
            phi.value()
        )));
    }
    let phi_inv = phi.recip()?;
    let xi = [ev(&spec.xi[0])?, ev(&spec.xi[1])?, ev(&spec.xi[2])?];
    let mut g = [[Jet::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = ev(spec.g(i, j))?;
        }
    }
    let phi_inv2 = phi_inv * phi_inv;
    let a = xi.map(|x| -(phi_inv2 * x));
    let phi2 = phi * phi;
    let gbar_m: [[Jet; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| g[i][j] + phi2 * a[i] * a[j]));

    // leading principal minors
    let v = |i: usize, j: usize| gbar_m[i][j].value();
    let m1 = v(0, 0);
    let m2 = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
    let m3 = v(0, 0) * (v(1, 1) * v(2, 2) - v(1, 2) * v(2, 1))
        - v(0, 1) * (v(1, 0) * v(2, 2) - v(1, 2) * v(2, 0))
        + v(0, 2) * (v(1, 0) * v(2, 1) - v(1, 1) * v(2, 0));
    for (k, m) in [m1, m2, m3].into_iter().enumerate() {
        if !(m > 1e-12) {
            return Err(GeometryError::NotLorentzian(format!(
                "spatial metric is not positive definite (leading minor {} = {m})",
                k + 1
            )));
        }
    }
    let inv = invert_jet_matrix(&gbar_m).ok_or(GeometryError::SingularSpatialMetric)?;
    Ok(FrameData {
        point,
        order,
        env,
        phi,
        phi_inv,
        xi,
        g,
        a,
        gbar: Tensor::matrix([Down, Down], &gbar_m),
        gbar_inv: Tensor::matrix([Up, Up], &inv),
    })
}

/// Kinematic quantities of the threading, each one jet order below the frame.
#[derive(Debug, Clone)]
pub struct KinematicSet {
    pub omega: Tensor,
    /// `ω^k_j = ḡ^{ki}ω_ij`.
    pub omega_mixed: Tensor,
    pub c: Tensor,
    pub a: Tensor,
    pub psi: Jet,
    pub theta_ij: Tensor,
    /// `Θ^k_j = ḡ^{ki}Θ_ij`.
    pub theta_mixed: Tensor,
    pub theta: Jet,
    pub sigma: Tensor,
    pub k: Tensor,
    /// `K^h_i = ḡ^{hm}K_mi`.
    pub k_mixed: Tensor,
    pub b: Tensor,
    pub b_up: Tensor,
    pub sigma2: Jet,
    pub omega2: Jet,
    pub b2: Jet,
}

/// Raises the first slot of a `(0,2)` tensor with `ḡ^{ij}`.
pub fn raise_first(t: &Tensor, gbar_inv: &Tensor) -> Tensor {
    Tensor::from_fn(&[Up, Down], |ix| {
        sum3(|m| gbar_inv[[ix[0], m]] * t[[m, ix[1]]])
    })
}

/// Raises the only slot of a covector.
pub fn raise_vector(v: &Tensor, gbar_inv: &Tensor) -> Tensor {
    Tensor::from_fn(&[Up], |ix| sum3(|m| gbar_inv[[ix[0], m]] * v[[m]]))
}

/// Full contraction `S_{hk} T^{hk}` of two `(0,2)` tensors.
pub fn contract2(s: &Tensor, t: &Tensor, gbar_inv: &Tensor) -> Jet {
    let mut acc = Jet::zero();
    for h in 0..3 {
        for k in 0..3 {
            for m in 0..3 {
                for n in 0..3 {
                    acc += s[[h, k]] * gbar_inv[[h, m]] * gbar_inv[[k, n]] * t[[m, n]];
                }
            }
        }
    }
    acc
}

pub fn compute_kinematics(frame: &FrameData) -> Result<KinematicSet, GeometryError> {
    if frame.order < 2 {
        return Err(GeometryError::InsufficientOrder {
            needed: 2,
            got: frame.order,
        });
    }
    let gi = &frame.gbar_inv;
    let omega = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        (frame.delta(&frame.a[j], i) - frame.delta(&frame.a[i], j)).scale(0.5)
    });
    let c = Tensor::from_fn(&[Down], |ix| frame.phi_inv * frame.delta(&frame.phi, ix[0]));
    let a = Tensor::from_fn(&[Down], |ix| -frame.d0(&frame.a[ix[0]]));
    let psi = frame.phi_inv * frame.d0(&frame.phi);
    let theta_ij = Tensor::from_fn(&[Down, Down], |ix| {
        frame.d0(&frame.gbar[[ix[0], ix[1]]]).scale(0.5)
    });
    let theta = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| gi[[i, j]] * theta_ij[[i, j]])
        .sum::<Jet>();
    let sigma = Tensor::from_fn(&[Down, Down], |ix| {
        theta_ij[[ix[0], ix[1]]] - theta.scale(1.0 / 3.0) * frame.gbar[[ix[0], ix[1]]]
    });
    let phi2 = frame.phi2();
    let k = Tensor::from_fn(&[Down, Down], |ix| {
        theta_ij[[ix[0], ix[1]]] + phi2 * omega[[ix[0], ix[1]]]
    });
    let b = Tensor::from_fn(&[Down], |ix| a[[ix[0]]] + c[[ix[0]]]);
    let b_up = raise_vector(&b, gi);
    let b2 = sum3(|m| b[[m]] * b_up[[m]]);
    Ok(KinematicSet {
        omega_mixed: raise_first(&omega, gi),
        theta_mixed: raise_first(&theta_ij, gi),
        k_mixed: raise_first(&k, gi),
        sigma2: contract2(&sigma, &sigma, gi),
        omega2: contract2(&omega, &omega, gi),
        b2,
        omega,
        c,
        a,
        psi,
        theta_ij,
        theta,
        sigma,
        k,
        b,
        b_up,
    })
}

/// Residuals of the alternative closed expressions for `ω`, `a` and the
/// algebraic kinematic relations; names map to max-abs violations.
pub fn kinematic_residuals(frame: &FrameData, kin: &KinematicSet) -> Vec<(&'static str, f64)> {
    let phi_inv2 = frame.phi_inv2();
    let omega_alt = Tensor::from_fn(&[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        phi_inv2
            * (kin.c[[i]] * frame.xi[j] - kin.c[[j]] * frame.xi[i]
                + (frame.delta(&frame.xi[i], j) - frame.delta(&frame.xi[j], i)).scale(0.5))
    });
    let a_alt = Tensor::from_fn(&[Down], |ix| {
        let i = ix[0];
        phi_inv2 * (frame.d0(&frame.xi[i]) - (kin.psi * frame.xi[i]).scale(2.0))
    });
    let trace_free = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| frame.gbar_inv[[i, j]].value() * kin.sigma[[i, j]].value())
        .sum::<f64>()
        .abs();
    let mut inverse: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let p: f64 = (0..3)
                .map(|m| frame.gbar_inv[[i, m]].value() * frame.gbar[[m, j]].value())
                .sum();
            inverse = inverse.max((p - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let phi2 = frame.phi2().value();
    let mut k_skew: f64 = 0.0;
    let mut k_rel: f64 = 0.0;
    let mut antisym: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            k_skew = k_skew.max((kin.k[[i, j]].value() - kin.k[[j, i]].value()).abs());
            k_rel = k_rel.max(
                (kin.k[[i, j]].value()
                    - kin.theta_ij[[i, j]].value()
                    - phi2 * kin.omega[[i, j]].value())
                .abs(),
            );
            antisym = antisym.max((kin.omega[[i, j]].value() + kin.omega[[j, i]].value()).abs());
        }
    }
    let skew_law = (k_skew - 2.0 * phi2 * kin.omega.max_abs()).abs();
    vec![
        ("frame.inverse", inverse),
        ("kinematics.2.6a-alt", kin.omega.max_abs_diff(&omega_alt)),
        ("kinematics.2.6c-alt", kin.a.max_abs_diff(&a_alt)),
        ("kinematics.trace-free", trace_free),
        ("kinematics.2.13", k_rel),
        ("kinematics.omega-antisymmetry", antisym),
        ("kinematics.K-skew", skew_law),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINKOWSKI: &str = "[metric]\nPhi = 1\ng11 = 1\ng22 = 1\ng33 = 1\n";
    const FLRW: &str = "[metric]\nPhi = x0^2\ng11 = x0^4\ng22 = x0^4\ng33 = x0^4\n";
    const ROTATING: &str =
        "[params]\nalpha = 0.4\n[metric]\nPhi = 1\nxi1 = alpha * x2\ng11 = 1\ng22 = 1\ng33 = 1\n";

    #[test]
    fn load_minkowski() {
        let spec = load_spec(MINKOWSKI).unwrap();
        assert!(spec.params.is_empty());
        assert_eq!(spec.matter, Matter::FromEfe);
        assert_eq!(spec.newton_g, 1.0);
        assert!(spec.g(0, 1).is_zero_literal());
    }

    #[test]
    fn load_rotating_matches_hand_built() {
        let spec = load_spec(ROTATING).unwrap();
        assert_eq!(spec.params.len(), 1);
        let one = || Expr::num(1.0);
        let hand = MetricSpec {
            params: BTreeMap::from([("alpha".to_string(), 0.4)]),
            phi: one(),
            xi: [
                parse_expr("alpha*x2").unwrap(),
                Expr::num(0.0),
                Expr::num(0.0),
            ],
            g: [one(), zero(), zero(), one(), zero(), one()],
            matter: Matter::FromEfe,
            lambda: 0.0,
            newton_g: 1.0,
        };
        assert_eq!(spec, hand);
        assert_eq!(load_spec(&spec.to_spec_text()).unwrap(), spec);
    }

    #[test]
    fn load_errors() {
        let err = load_spec("[metric]\nPhi = t2(x0)\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap_err();
        assert!(matches!(err, SpecError::Syntax { .. }));
        let err = load_spec("[metric]\nPhi = 1\ng11 = 1\ng33 = 1\n").unwrap_err();
        assert_eq!(err.to_string(), "MissingKey g22");
        let err = load_spec("[metric]\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap_err();
        assert_eq!(err, SpecError::MissingKey("Phi".into()));
        let err = load_spec("[metric]\nPhi = 1\nPhi = 2\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap_err();
        assert!(matches!(err, SpecError::DuplicateKey { line: 3, .. }));
        let err = load_spec("[metric]\nPhi = beta\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap_err();
        assert!(matches!(err, SpecError::UnboundIdentifier { .. }));
        let err = load_spec("[metric]\nPhi = 1\ng21 = 1\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap_err();
        assert!(matches!(err, SpecError::UnknownKey { .. }));
    }

    #[test]
    fn minkowski_frame() {
        let spec = load_spec(MINKOWSKI).unwrap();
        let f = eval_frame(&spec, [0.3, -0.2, 0.5, 0.9], 3).unwrap();
        for i in 0..3 {
            assert_eq!(f.a[i].value(), 0.0);
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert_eq!(f.gbar[[i, j]].value(), d);
                assert_eq!(f.gbar_inv[[i, j]].value(), d);
            }
        }
        let kin = compute_kinematics(&f).unwrap();
        for t in [
            &kin.omega,
            &kin.c,
            &kin.a,
            &kin.theta_ij,
            &kin.sigma,
            &kin.k,
            &kin.b,
        ] {
            assert_eq!(t.max_abs(), 0.0);
        }
        assert_eq!(kin.psi.value(), 0.0);
    }

    #[test]
    fn flrw_frame_and_kinematics() {
        let spec = load_spec(FLRW).unwrap();
        let f = eval_frame(&spec, [2.0, 0.1, 0.2, 0.3], 3).unwrap();
        assert_eq!(f.phi.value(), 4.0);
        assert_eq!(f.gbar[[1, 1]].value(), 16.0);
        assert_eq!(f.gbar_inv[[2, 2]].value(), 1.0 / 16.0);
        let kin = compute_kinematics(&f).unwrap();
        assert!((kin.psi.value() - 1.0).abs() < 1e-15);
        assert!((kin.theta.value() - 3.0).abs() < 1e-14);
        assert!((kin.theta_ij[[0, 0]].value() - 16.0).abs() < 1e-13);
        assert_eq!(kin.sigma.max_abs(), 0.0);
        assert_eq!(kin.omega.max_abs(), 0.0);
        assert_eq!(kin.b.max_abs(), 0.0);
    }

    #[test]
    fn rotating_frame_and_kinematics() {
        let spec = load_spec(ROTATING).unwrap();
        let f = eval_frame(&spec, [0.0, 0.0, 1.0, 0.0], 3).unwrap();
        assert!((f.a[0].value() + 0.4).abs() < 1e-15);
        assert!((f.gbar[[0, 0]].value() - 1.16).abs() < 1e-15);
        assert_eq!(f.gbar[[1, 1]].value(), 1.0);
        assert_eq!(f.gbar[[2, 2]].value(), 1.0);
        let kin = compute_kinematics(&f).unwrap();
        assert!((kin.omega[[0, 1]].value() - 0.2).abs() < 1e-15);
        assert!((kin.omega[[1, 0]].value() + 0.2).abs() < 1e-15);
        assert_eq!(kin.theta_ij.max_abs(), 0.0);
        assert!((kin.k[[0, 1]].value() - 0.2).abs() < 1e-15);

        let x0 = f.env.coords[0];
        let d = delta_derivative(&x0, &f).unwrap();
        assert_eq!(d[0].value(), 1.0);
        assert!((d[1].value() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn delta_reduces_to_partial() {
        let spec = load_spec(MINKOWSKI).unwrap();
        let f = eval_frame(&spec, [0.1, 0.2, 0.3, 0.4], 3).unwrap();
        let [t, x, y, _] = f.env.coords;
        let field = t * x + y.sin();
        let d = delta_derivative(&field, &f).unwrap();
        for k in 0..4 {
            assert_eq!(d[k], field.d(k));
        }
    }

    #[test]
    fn rejects_non_lorentzian() {
        let spec = load_spec("[metric]\nPhi = x1\ng11 = 1\ng22 = 1\ng33 = 1\n").unwrap();
        assert!(matches!(
            eval_frame(&spec, [0.0, 0.0, 0.0, 0.0], 2),
            Err(GeometryError::NotLorentzian(_))
        ));
        let spec = load_spec("[metric]\nPhi = 1\ng11 = 1\ng22 = -1\ng33 = 1\n").unwrap();
        assert!(matches!(
            eval_frame(&spec, [0.0; 4], 2),
            Err(GeometryError::NotLorentzian(_))
        ));
    }
}
