//! Truncated multivariate Taylor arithmetic ("jets") in four coordinates.
//!
//! A [`Jet`] stores the raw partial derivatives `∂^α f / ∂x^α` of a scalar
//! field at a fixed base point for every multi-index `α` with `|α| <= order`.
//! Coefficients are *not* divided by `α!`, so a stored entry can be read off
//! directly as the partial derivative it denotes.
//!
//! Binary operations truncate to the smaller operand order; differentiating a
//! jet lowers its order by one. All operations are pure and jets are `Copy`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Number of coordinates (`x0` is time-like, `x1..x3` spatial).
pub const DIM: usize = 4;
/// Highest supported jet order.
pub const MAX_ORDER: usize = 3;
/// Number of multi-indices with total order `<= MAX_ORDER` in four variables.
pub const NCOEF: usize = 35;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by zero at the base point")]
    DivisionByZeroAtPoint,
    #[error("{func} is undefined at base value {value}")]
    DomainErrorAtPoint { func: &'static str, value: f64 },
    #[error("derivative of order {requested} requested from a jet of order {order}")]
    OrderExhausted { requested: usize, order: usize },
    #[error("jet order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
}

/// Exponents of a partial derivative, one per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub [u8; DIM]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; DIM]);

    pub fn total(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// First-order index `∂/∂x^a`.
    pub fn unit(a: usize) -> Self {
        let mut e = [0; DIM];
        e[a] = 1;
        MultiIndex(e)
    }

    /// Index of `∂²/∂x^a∂x^b`.
    pub fn pair(a: usize, b: usize) -> Self {
        let mut e = [0; DIM];
        e[a] += 1;
        e[b] += 1;
        MultiIndex(e)
    }

    /// Index of `∂³/∂x^a∂x^b∂x^c`.
    pub fn triple(a: usize, b: usize, c: usize) -> Self {
        let mut e = [0; DIM];
        e[a] += 1;
        e[b] += 1;
        e[c] += 1;
        MultiIndex(e)
    }
}

struct Tables {
    monomials: Vec<[u8; DIM]>,
    position: [u8; 256],
    count: [usize; MAX_ORDER + 1],
    // (beta, gamma, multinomial weight) for every alpha, indexed by alpha position
    products: Vec<Vec<(u8, u8, f64)>>,
    // position of alpha + e_a, or u8::MAX when beyond MAX_ORDER
    shift: [[u8; NCOEF]; DIM],
}

fn key(e: &[u8; DIM]) -> usize {
    e.iter().fold(0, |acc, &x| acc * 4 + x as usize)
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut monomials = Vec::with_capacity(NCOEF);
        let mut count = [0; MAX_ORDER + 1];
        for total in 0..=MAX_ORDER {
            for a in (0..=total).rev() {
                for b in (0..=total - a).rev() {
                    for c in (0..=total - a - b).rev() {
                        let d = total - a - b - c;
                        monomials.push([a as u8, b as u8, c as u8, d as u8]);
                    }
                }
            }
            count[total] = monomials.len();
        }
        debug_assert_eq!(monomials.len(), NCOEF);

        let mut position = [u8::MAX; 256];
        for (p, m) in monomials.iter().enumerate() {
            position[key(m)] = p as u8;
        }

        let mut products = Vec::with_capacity(NCOEF);
        for alpha in &monomials {
            let mut terms = Vec::new();
            for beta in &monomials {
                if (0..DIM).all(|i| beta[i] <= alpha[i]) {
                    let gamma = [
                        alpha[0] - beta[0],
                        alpha[1] - beta[1],
                        alpha[2] - beta[2],
                        alpha[3] - beta[3],
                    ];
                    let w: f64 = (0..DIM).map(|i| binomial(alpha[i], beta[i])).product();
                    terms.push((position[key(beta)], position[key(&gamma)], w));
                }
            }
            products.push(terms);
        }

        let mut shift = [[u8::MAX; NCOEF]; DIM];
        for (p, m) in monomials.iter().enumerate() {
            for (a, row) in shift.iter_mut().enumerate() {
                let mut up = *m;
                up[a] += 1;
                if up.iter().map(|&x| x as usize).sum::<usize>() <= MAX_ORDER {
                    row[p] = position[key(&up)];
                }
            }
        }

        Tables {
            monomials,
            position,
            count,
            products,
            shift,
        }
    })
}

/// Number of stored coefficients for a jet of the given order.
pub fn coefficient_count(order: usize) -> usize {
    tables().count[order]
}

/// All multi-indices of total order `<= order`, in storage order.
pub fn multi_indices(order: usize) -> impl Iterator<Item = MultiIndex> {
    let t = tables();
    t.monomials[..t.count[order]].iter().map(|m| MultiIndex(*m))
}

/// Truncated Taylor expansion of a scalar field at a point.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; NCOEF],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = coefficient_count(self.order());
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &&self.c[..n])
            .finish()
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::zero()
    }
}

impl Jet {
    /// Constant zero at the maximum order; combining it with any jet keeps
    /// that jet's order.
    pub const fn zero() -> Self {
        Jet {
            order: MAX_ORDER as u8,
            c: [0.0; NCOEF],
        }
    }

    /// Constant jet of maximum order.
    pub fn constant(value: f64) -> Self {
        let mut j = Jet::zero();
        j.c[0] = value;
        j
    }

    pub fn constant_with_order(value: f64, order: usize) -> Self {
        let mut j = Jet::constant(value);
        j.order = order.min(MAX_ORDER) as u8;
        j
    }

    /// The coordinate function `x^k` at `value`.
    pub fn variable(value: f64, k: usize, order: usize) -> Self {
        let mut j = Jet::constant_with_order(value, order);
        if order >= 1 {
            j.c[tables().position[key(&MultiIndex::unit(k).0)] as usize] = 1.0;
        }
        j
    }

    /// Builds a jet from raw partials; missing entries are zero.
    pub fn from_partials(order: usize, partials: &[(MultiIndex, f64)]) -> Result<Self, JetError> {
        if order > MAX_ORDER {
            return Err(JetError::OrderTooLarge(order));
        }
        let mut j = Jet::constant_with_order(0.0, order);
        for (alpha, v) in partials {
            if alpha.total() > order {
                return Err(JetError::OrderExhausted {
                    requested: alpha.total(),
                    order,
                });
            }
            j.c[tables().position[key(&alpha.0)] as usize] = *v;
        }
        Ok(j)
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    fn len(&self) -> usize {
        coefficient_count(self.order())
    }

    /// Raw partial derivative for a multi-index.
    pub fn partial(&self, alpha: MultiIndex) -> Result<f64, JetError> {
        let total = alpha.total();
        if total > self.order() {
            return Err(JetError::OrderExhausted {
                requested: total,
                order: self.order(),
            });
        }
        Ok(self.c[tables().position[key(&alpha.0)] as usize])
    }

    /// Iterates `(multi-index, raw partial)` pairs up to the jet order.
    pub fn coefficients(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        multi_indices(self.order()).zip(self.c.iter().copied())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let mut j = *self;
        if order < self.order() {
            let n = coefficient_count(order);
            j.c[n..].iter_mut().for_each(|x| *x = 0.0);
            j.order = order as u8;
        }
        j
    }

    /// True when every derivative coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.c[1..self.len()].iter().all(|&x| x == 0.0)
    }

    /// Jet of `∂f/∂x^a`, one order lower.
    pub fn try_d(&self, a: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::OrderExhausted {
                requested: 1,
                order: 0,
            });
        }
        let t = tables();
        let order = self.order() - 1;
        let mut out = Jet::constant_with_order(0.0, order);
        for p in 0..coefficient_count(order) {
            out.c[p] = self.c[t.shift[a][p] as usize];
        }
        Ok(out)
    }

    /// Jet of `∂f/∂x^a`.
    ///
    /// Callers check the available depth up front; differentiating an
    /// order-0 jet is a logic error.
    pub fn d(&self, a: usize) -> Jet {
        match self.try_d(a) {
            Ok(j) => j,
            Err(_) => panic!("differentiated an order-0 jet; depth checks were skipped"),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        let n = self.len();
        out.c[..n].iter_mut().for_each(|x| *x *= s);
        out
    }

    fn binary(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(other.order);
        let mut out = Jet::constant_with_order(0.0, order as usize);
        for p in 0..coefficient_count(order as usize) {
            out.c[p] = f(self.c[p], other.c[p]);
        }
        out
    }

    fn product(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order) as usize;
        let t = tables();
        let mut out = Jet::constant_with_order(0.0, order);
        for (p, slot) in out.c[..coefficient_count(order)].iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(b, g, w) in &t.products[p] {
                acc += w * self.c[b as usize] * other.c[g as usize];
            }
            *slot = acc;
        }
        out
    }

    /// `f(a(x))` from the derivatives `f^(k)` at the base value.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Jet::constant_with_order(derivs[0], order);
        let mut power = Jet::constant_with_order(1.0, order);
        let mut factorial = 1.0;
        for (k, dk) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.product(&h);
            factorial *= k as f64;
            out += power.scale(dk / factorial);
        }
        out
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x == 0.0 {
            return Err(JetError::DivisionByZeroAtPoint);
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef / x.powi(k as i32 + 1);
            coef *= -((k + 1) as f64);
        }
        Ok(self.compose(&derivs))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(*self * other.recip()?)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn tan(&self) -> Result<Jet, JetError> {
        self.sin()
            .checked_div(&self.cos())
            .map_err(|_| JetError::DomainErrorAtPoint {
                func: "tan",
                value: self.value(),
            })
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::DomainErrorAtPoint {
                func: "ln",
                value: x,
            });
        }
        let mut derivs = [x.ln(), 0.0, 0.0, 0.0];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate().skip(1) {
            *d = coef / x.powi(k as i32);
            coef *= -(k as f64);
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(JetError::DomainErrorAtPoint {
                func: "sqrt",
                value: x,
            });
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = falling * x.powf(0.5 - k as f64);
            falling *= 0.5 - k as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[c, s, c, s])
    }

    pub fn tanh(&self) -> Jet {
        // cosh never vanishes
        self.sinh() * self.cosh().recip().expect("cosh is positive")
    }

    /// Integer power by repeated multiplication; valid for any base except a
    /// zero base with a negative exponent.
    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        let mut out = Jet::constant_with_order(1.0, self.order());
        for _ in 0..n.unsigned_abs() {
            out = out * *self;
        }
        if n < 0 {
            out = out.recip()?;
        }
        Ok(out)
    }

    /// `self^e` for a constant exponent: integers use repeated
    /// multiplication, everything else `exp(e·ln self)` and needs a positive
    /// base.
    pub fn powf(&self, e: f64) -> Result<Jet, JetError> {
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            return self.powi(e as i32);
        }
        if !(self.value() > 0.0) {
            return Err(JetError::DomainErrorAtPoint {
                func: "pow",
                value: self.value(),
            });
        }
        Ok((self.ln()?.scale(e)).exp())
    }

    /// `self^e` where the exponent is itself a field.
    pub fn pow(&self, e: &Jet) -> Result<Jet, JetError> {
        if e.is_constant() {
            let p = self.powf(e.value())?;
            return Ok(p.truncate(e.order()));
        }
        if !(self.value() > 0.0) {
            return Err(JetError::DomainErrorAtPoint {
                func: "pow",
                value: self.value(),
            });
        }
        Ok((self.ln()? * *e).exp())
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(&self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(&self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, &rhs)
            }
        }
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(&self, &Jet::constant(rhs))
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(&Jet::constant(self), &rhs)
            }
        }
    };
}

impl_binop!(Add, add, |a, b| a.binary(b, |x, y| x + y));
impl_binop!(Sub, sub, |a, b| a.binary(b, |x, y| x - y));
impl_binop!(Mul, mul, |a, b| a.product(b));

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::zero(), |acc, x| acc + x)
    }
}

/// Coordinate jets seeded at a base point.
#[derive(Debug, Clone)]
pub struct JetEnv {
    pub point: [f64; DIM],
    pub order: usize,
    pub coords: [Jet; DIM],
}

/// Seeds the four coordinate functions at `point`.
pub fn seed_point(point: [f64; DIM], order: usize) -> Result<JetEnv, JetError> {
    if order > MAX_ORDER {
        return Err(JetError::OrderTooLarge(order));
    }
    let coords = std::array::from_fn(|k| Jet::variable(point[k], k, order));
    Ok(JetEnv {
        point,
        order,
        coords,
    })
}

impl JetEnv {
    pub fn constant(&self, value: f64) -> Jet {
        Jet::constant_with_order(value, self.order)
    }
}

/// Inverts a square matrix of plain values with partial pivoting.
pub fn invert_values<const N: usize>(m: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut a = *m;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..N {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..N {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..N {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Inverts a matrix of jets: the base value is inverted numerically and the
/// derivative data follows from the Neumann series of `∂(M⁻¹) = −M⁻¹(∂M)M⁻¹`,
/// which terminates because the non-constant part of `M` is nilpotent.
pub fn invert_jet_matrix<const N: usize>(m: &[[Jet; N]; N]) -> Option<[[Jet; N]; N]> {
    let values: [[f64; N]; N] = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()));
    let x0 = invert_values(&values)?;
    let order = m
        .iter()
        .flat_map(|r| r.iter())
        .map(Jet::order)
        .min()
        .unwrap_or(0);
    let x0j: [[Jet; N]; N] =
        std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant_with_order(x0[i][j], order)));
    let e: [[Jet; N]; N] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut d = m[i][j].truncate(order);
            d.c[0] = 0.0;
            d
        })
    });
    // x0 * e
    let x0e: [[Jet; N]; N] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..N)
                .map(|k| x0j[i][k] * e[k][j])
                .sum::<Jet>()
                .truncate(order)
        })
    });
    let mut term = x0j;
    let mut out = x0j;
    for _ in 0..order {
        term = std::array::from_fn(|i| {
            std::array::from_fn(|j| -(0..N).map(|k| x0e[i][k] * term[k][j]).sum::<Jet>())
        });
        for i in 0..N {
            for j in 0..N {
                out[i][j] += term[i][j];
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn storage_layout() {
        assert_eq!(coefficient_count(0), 1);
        assert_eq!(coefficient_count(1), 5);
        assert_eq!(coefficient_count(2), 15);
        assert_eq!(coefficient_count(3), 35);
        let all: Vec<_> = multi_indices(3).collect();
        assert_eq!(all.len(), NCOEF);
        assert_eq!(all[0], MultiIndex::ZERO);
        assert!(all.windows(2).all(|w| w[0].total() <= w[1].total()));
    }

    #[test]
    fn seeded_coordinates() {
        let env = seed_point([2.0, 0.0, 1.0, 0.0], 2).unwrap();
        let x0 = env.coords[0];
        assert_eq!(x0.value(), 2.0);
        assert_eq!(x0.partial(MultiIndex::unit(0)).unwrap(), 1.0);
        for alpha in multi_indices(2).skip(1) {
            if alpha != MultiIndex::unit(0) {
                assert_eq!(x0.partial(alpha).unwrap(), 0.0);
            }
        }
        let env0 = seed_point([0.0; 4], 0).unwrap();
        assert!(env0
            .coords
            .iter()
            .all(|j| j.order() == 0 && j.value() == 0.0));

        let env3 = seed_point([1.0, 2.0, 3.0, 4.0], 3).unwrap();
        assert_eq!(env3.coords[1].partial(MultiIndex::unit(1)).unwrap(), 1.0);
        assert_eq!(env3.coords[1].partial(MultiIndex::pair(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn product_rules() {
        let env = seed_point([2.0, 3.0, 0.0, 0.0], 2).unwrap();
        let x1 = env.coords[1];
        let sq = x1 * x1;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.partial(MultiIndex::unit(1)).unwrap(), 6.0);
        assert_eq!(sq.partial(MultiIndex::pair(1, 1)).unwrap(), 2.0);

        assert_eq!(x1 * Jet::constant(1.0), x1);

        let env = seed_point([2.0, 5.0, 0.0, 0.0], 2).unwrap();
        let f = env.coords[0] * env.coords[1];
        assert_eq!(f.partial(MultiIndex::pair(0, 1)).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero() {
        let env = seed_point([0.0; 4], 2).unwrap();
        assert_eq!(
            Jet::constant(1.0).checked_div(&env.coords[2]),
            Err(JetError::DivisionByZeroAtPoint)
        );
    }

    #[test]
    fn sine_maclaurin() {
        let env = seed_point([0.0; 4], 3).unwrap();
        let s = env.coords[0].sin();
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.partial(MultiIndex::unit(0)).unwrap(), 1.0);
        assert_eq!(s.partial(MultiIndex::pair(0, 0)).unwrap(), 0.0);
        assert_eq!(s.partial(MultiIndex::triple(0, 0, 0)).unwrap(), -1.0);
        assert_eq!(env.constant(0.0).exp(), Jet::constant_with_order(1.0, 3));
    }

    #[test]
    fn sqrt_of_square_is_identity() {
        let env = seed_point([0.0, 2.0, 0.0, 0.0], 3).unwrap();
        let x1 = env.coords[1];
        let r = (x1 * x1).sqrt().unwrap();
        for (alpha, v) in r.coefficients() {
            assert!(close(v, x1.partial(alpha).unwrap(), 1e-14), "{alpha:?}");
        }
    }

    #[test]
    fn domain_errors() {
        let env = seed_point([-1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert!(matches!(
            env.coords[0].ln(),
            Err(JetError::DomainErrorAtPoint { func: "ln", .. })
        ));
        assert!(matches!(
            env.coords[0].sqrt(),
            Err(JetError::DomainErrorAtPoint { .. })
        ));
        assert!(matches!(
            env.coords[0].powf(0.5),
            Err(JetError::DomainErrorAtPoint { .. })
        ));
        // integer powers accept negative bases
        let c = env.coords[0].powf(3.0).unwrap();
        assert_eq!(c.value(), -1.0);
        assert_eq!(c.partial(MultiIndex::unit(0)).unwrap(), 3.0);
    }

    #[test]
    fn mixed_partial_of_product_with_sine() {
        let env = seed_point([2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0], 2).unwrap();
        let f = env.coords[0] * env.coords[1].sin();
        assert!(close(
            f.partial(MultiIndex::pair(0, 1)).unwrap(),
            0.0,
            1e-15
        ));
        assert!(f.partial(MultiIndex::triple(0, 1, 1)).is_err());
    }

    #[test]
    fn derivative_lowers_order() {
        let env = seed_point([1.0, 2.0, 3.0, 4.0], 3).unwrap();
        let f = env.coords[0] * env.coords[1] * env.coords[1];
        let df = f.d(1);
        assert_eq!(df.order(), 2);
        assert_eq!(df.value(), 4.0);
        assert_eq!(df.partial(MultiIndex::unit(0)).unwrap(), 4.0);
        assert_eq!(df.partial(MultiIndex::pair(0, 1)).unwrap(), 2.0);
        assert!(env.constant(1.0).truncate(0).try_d(0).is_err());
    }

    #[test]
    fn transcendental_identities() {
        let env = seed_point([0.3, -0.7, 1.1, 0.2], 3).unwrap();
        let u = env.coords[0] * env.coords[1] + env.coords[2];
        let one = u.sin() * u.sin() + u.cos() * u.cos();
        let hyper = u.cosh() * u.cosh() - u.sinh() * u.sinh();
        let lnexp = u.exp().ln().unwrap();
        let tan_ratio = u.tan().unwrap() * u.cos() - u.sin();
        let tanh_ratio = u.tanh() * u.cosh() - u.sinh();
        for (alpha, _) in u.coefficients() {
            let expect_one = if alpha == MultiIndex::ZERO { 1.0 } else { 0.0 };
            assert!(close(one.partial(alpha).unwrap(), expect_one, 1e-13));
            assert!(close(hyper.partial(alpha).unwrap(), expect_one, 1e-12));
            assert!(close(
                lnexp.partial(alpha).unwrap(),
                u.partial(alpha).unwrap(),
                1e-13
            ));
            assert!(close(tan_ratio.partial(alpha).unwrap(), 0.0, 1e-13));
            assert!(close(tanh_ratio.partial(alpha).unwrap(), 0.0, 1e-13));
        }
    }

    #[test]
    fn jet_matrix_inverse() {
        let env = seed_point([0.4, 0.1, -0.3, 0.8], 3).unwrap();
        let [t, x, y, z] = env.coords;
        let m = [
            [2.0 + t * x, y.sin(), 0.1 * z],
            [y.sin(), 1.5 + z * z, t],
            [0.1 * z, t, 3.0 + x.exp()],
        ];
        let inv = invert_jet_matrix(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: Jet = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                for (alpha, v) in p.coefficients() {
                    let expect = if i == j && alpha == MultiIndex::ZERO {
                        1.0
                    } else {
                        0.0
                    };
                    assert!(close(v, expect, 1e-13), "({i},{j}) {alpha:?} {v}");
                }
            }
        }
        assert!(invert_values(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
    }
}
