//! Analytic scalar fields and quadrature on polygons.

mod expr;
mod quadrature;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use expr::{parse_expression, Expr, ExprField, Jet};
pub use quadrature::{
    default_depth, for_each_quadrature_point, gauss_jacobi, gauss_legendre, integrate_on_polygon,
    integrate_on_segment, quadrature_on_triangle, QuadratureRule,
};

use crate::error::Result;
use crate::geometry::{Mat2, Point2};

/// A function with closed-form first and second derivatives.
pub trait ScalarField: Send + Sync {
    fn value(&self, p: &Point2) -> f64;
    fn gradient(&self, p: &Point2) -> Point2;
    fn hessian(&self, p: &Point2) -> Mat2;
    fn label(&self) -> &str;
}

/// `tanh(60 x2) - tanh(60 (x1 - x2) - 30)`: two sharp layers along `x2 = 0`
/// and `x2 = x1 - 1/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TanhLayer;

pub fn tanh_layer() -> TanhLayer {
    TanhLayer
}

impl TanhLayer {
    const SLOPE: f64 = 60.0;

    fn parts(p: &Point2) -> ((f64, f64), (f64, f64)) {
        let a = Self::SLOPE * p.y;
        let b = Self::SLOPE * (p.x - p.y) - 30.0;
        ((a.tanh(), sech2(a)), (b.tanh(), sech2(b)))
    }
}

/// `1 - tanh²`, accurate also where tanh saturates.
pub(crate) fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

impl ScalarField for TanhLayer {
    fn value(&self, p: &Point2) -> f64 {
        (Self::SLOPE * p.y).tanh() - (Self::SLOPE * (p.x - p.y) - 30.0).tanh()
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        let ((_, sa), (_, sb)) = Self::parts(p);
        let c = Self::SLOPE;
        Point2::new(-c * sb, c * sa + c * sb)
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        let ((ta, sa), (tb, sb)) = Self::parts(p);
        let c2 = 2.0 * Self::SLOPE * Self::SLOPE;
        let xx = c2 * tb * sb;
        let xy = -c2 * tb * sb;
        let yy = -c2 * ta * sa + c2 * tb * sb;
        Mat2::new(xx, xy, xy, yy)
    }

    fn label(&self) -> &str {
        "tanh_layer"
    }
}

/// `coeff * x1^px * x2^py`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
    label: String,
}

impl Monomial {
    pub fn new(coeff: f64, px: u32, py: u32) -> Self {
        Monomial { coeff, px, py, label: format!("{coeff}*x1^{px}*x2^{py}") }
    }

    pub fn degree(&self) -> u32 {
        self.px + self.py
    }
}

fn pow_d(x: f64, n: u32, k: u32) -> f64 {
    // k-th derivative of x^n
    if k > n {
        return 0.0;
    }
    let falling: f64 = (0..k).map(|j| (n - j) as f64).product();
    falling * x.powi((n - k) as i32)
}

impl ScalarField for Monomial {
    fn value(&self, p: &Point2) -> f64 {
        self.coeff * pow_d(p.x, self.px, 0) * pow_d(p.y, self.py, 0)
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        let c = self.coeff;
        Point2::new(
            c * pow_d(p.x, self.px, 1) * pow_d(p.y, self.py, 0),
            c * pow_d(p.x, self.px, 0) * pow_d(p.y, self.py, 1),
        )
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        let c = self.coeff;
        let xx = c * pow_d(p.x, self.px, 2) * pow_d(p.y, self.py, 0);
        let xy = c * pow_d(p.x, self.px, 1) * pow_d(p.y, self.py, 1);
        let yy = c * pow_d(p.x, self.px, 0) * pow_d(p.y, self.py, 2);
        Mat2::new(xx, xy, xy, yy)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// `c0 + c1 x1 + c2 x2`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub c: [f64; 3],
    label: String,
}

impl Linear {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Self {
        Linear { c: [c0, c1, c2], label: format!("{c0}+{c1}*x1+{c2}*x2") }
    }

    pub fn constant(c0: f64) -> Self {
        Linear { c: [c0, 0.0, 0.0], label: format!("{c0}") }
    }
}

impl ScalarField for Linear {
    fn value(&self, p: &Point2) -> f64 {
        self.c[0] + self.c[1] * p.x + self.c[2] * p.y
    }

    fn gradient(&self, _p: &Point2) -> Point2 {
        Point2::new(self.c[1], self.c[2])
    }

    fn hessian(&self, _p: &Point2) -> Mat2 {
        Mat2::zeros()
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// Fields selectable by name; anything else is parsed as an expression.
#[derive(Clone)]
pub struct FieldRegistry {
    fields: BTreeMap<String, Arc<dyn ScalarField>>,
}

impl Default for FieldRegistry {
    fn default() -> Self {
        let mut registry = FieldRegistry { fields: BTreeMap::new() };
        registry.register(Arc::new(TanhLayer));
        registry
    }
}

impl FieldRegistry {
    pub fn register(&mut self, field: Arc<dyn ScalarField>) {
        self.fields.insert(field.label().to_string(), field);
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    pub fn resolve(&self, spec: &str) -> Result<Arc<dyn ScalarField>> {
        if let Some(f) = self.fields.get(spec.trim()) {
            return Ok(f.clone());
        }
        Ok(Arc::new(ExprField::parse(spec)?))
    }
}
