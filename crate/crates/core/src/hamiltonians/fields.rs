//! Static electromagnetic fields: closed-form presets and sampled 1-D tables.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{FwError, Result};

pub type V3 = Vector3<f64>;

/// Potentials and strengths at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub phi: f64,
    pub a: V3,
    pub e: V3,
    pub h: V3,
}

/// Jacobians of the strengths: `de[(i, j)] = ∂E_i/∂x_j`, likewise `dh`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldGradients {
    pub de: Matrix3<f64>,
    pub dh: Matrix3<f64>,
}

impl FieldGradients {
    pub fn zero() -> Self {
        Self {
            de: Matrix3::zeros(),
            dh: Matrix3::zeros(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum FieldConfiguration {
    Zero,
    /// Φ = −E·r, A = ½ H×r.
    Uniform { e: V3, h: V3 },
    /// Φ = −V₀ exp(−(x − x₀)²/(2l²)), no magnetic field.
    GaussianWell { depth: f64, width: f64, center: f64 },
    /// H = (−Gx/2, −Gy/2, B₀ + Gz), divergence- and curl-free;
    /// A = ½(B₀ + Gz)(−y, x, 0).
    LinearGradientB { b0: f64, gradient: f64 },
    Table(Arc<SampledField>),
}

impl FieldConfiguration {
    pub fn uniform(e: [f64; 3], h: [f64; 3]) -> Self {
        FieldConfiguration::Uniform {
            e: V3::from(e),
            h: V3::from(h),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, FieldConfiguration::Zero | FieldConfiguration::Uniform { .. })
    }

    pub fn sample(&self, r: &V3) -> Result<FieldSample> {
        match self {
            FieldConfiguration::Zero => Ok(FieldSample {
                phi: 0.0,
                a: V3::zeros(),
                e: V3::zeros(),
                h: V3::zeros(),
            }),
            FieldConfiguration::Uniform { e, h } => Ok(FieldSample {
                phi: -e.dot(r),
                a: 0.5 * h.cross(r),
                e: *e,
                h: *h,
            }),
            FieldConfiguration::GaussianWell { depth, width, center } => {
                let u = r.x - center;
                let g = (-u * u / (2.0 * width * width)).exp();
                Ok(FieldSample {
                    phi: -depth * g,
                    a: V3::zeros(),
                    e: V3::new(-depth * u / (width * width) * g, 0.0, 0.0),
                    h: V3::zeros(),
                })
            }
            FieldConfiguration::LinearGradientB { b0, gradient } => {
                let bz = b0 + gradient * r.z;
                Ok(FieldSample {
                    phi: 0.0,
                    a: V3::new(-0.5 * r.y * bz, 0.5 * r.x * bz, 0.0),
                    e: V3::zeros(),
                    h: V3::new(-0.5 * gradient * r.x, -0.5 * gradient * r.y, bz),
                })
            }
            FieldConfiguration::Table(t) => t.sample(r),
        }
    }

    pub fn gradients(&self, r: &V3) -> Result<FieldGradients> {
        match self {
            FieldConfiguration::Zero | FieldConfiguration::Uniform { .. } => Ok(FieldGradients::zero()),
            FieldConfiguration::GaussianWell { depth, width, center } => {
                let u = r.x - center;
                let l2 = width * width;
                let g = (-u * u / (2.0 * l2)).exp();
                let mut de = Matrix3::zeros();
                de[(0, 0)] = -depth * g * (1.0 / l2 - u * u / (l2 * l2));
                Ok(FieldGradients {
                    de,
                    dh: Matrix3::zeros(),
                })
            }
            FieldConfiguration::LinearGradientB { gradient, .. } => Ok(FieldGradients {
                de: Matrix3::zeros(),
                dh: Matrix3::from_diagonal(&V3::new(-0.5 * gradient, -0.5 * gradient, *gradient)),
            }),
            FieldConfiguration::Table(t) => t.gradients(r),
        }
    }

    /// Characteristic nonuniformity size l (infinite for uniform fields).
    pub fn length_scale(&self) -> f64 {
        match self {
            FieldConfiguration::Zero | FieldConfiguration::Uniform { .. } => f64::INFINITY,
            FieldConfiguration::GaussianWell { width, .. } => *width,
            FieldConfiguration::LinearGradientB { b0, gradient } => {
                if *gradient == 0.0 {
                    f64::INFINITY
                } else {
                    (b0 / gradient).abs()
                }
            }
            FieldConfiguration::Table(t) => t.length_scale,
        }
    }

    /// Points at which the strengths are compared with the derivatives of the potentials.
    pub fn default_check_points(&self) -> Vec<V3> {
        match self {
            FieldConfiguration::Table(t) => {
                let n = t.x.len();
                t.x[1..n - 1].iter().map(|&x| V3::new(x, 0.0, 0.0)).collect()
            }
            _ => {
                let l = self.length_scale();
                let s = if l.is_finite() { l } else { 1.0 };
                let c = match self {
                    FieldConfiguration::GaussianWell { center, .. } => *center,
                    _ => 0.0,
                };
                let mut pts = Vec::new();
                for i in -2..=2 {
                    for j in -1..=1 {
                        for k in -1..=1 {
                            pts.push(V3::new(c + 0.7 * s * i as f64, 0.45 * s * j as f64, 0.3 * s * k as f64));
                        }
                    }
                }
                pts
            }
        }
    }

    /// Compares E with −∇Φ and H with ∇×A by central differences. The deviation is
    /// relative to the largest strength seen at the check points.
    pub fn check_consistency(&self, points: &[V3], rel_tol: f64) -> Result<ConsistencyReport> {
        let l = self.length_scale();
        let step = match self {
            FieldConfiguration::Table(t) => 1e-3 * t.min_spacing(),
            _ => 1e-5 * if l.is_finite() { l } else { 1.0 },
        };
        let mut worst = (0.0f64, [0.0; 3], "");
        let mut scale = 0.0f64;
        for r in points {
            let s = self.sample(r)?;
            scale = scale.max(s.e.norm()).max(s.h.norm());
            let mut grad_phi = V3::zeros();
            let mut da = Matrix3::zeros(); // da[(i, j)] = ∂A_i/∂x_j
            for j in 0..3 {
                let mut dr = V3::zeros();
                dr[j] = step;
                let p = self.sample(&(r + dr))?;
                let m = self.sample(&(r - dr))?;
                grad_phi[j] = (p.phi - m.phi) / (2.0 * step);
                da.set_column(j, &((p.a - m.a) / (2.0 * step)));
            }
            let curl = V3::new(
                da[(2, 1)] - da[(1, 2)],
                da[(0, 2)] - da[(2, 0)],
                da[(1, 0)] - da[(0, 1)],
            );
            let de = (s.e + grad_phi).norm();
            let dh = (s.h - curl).norm();
            if de > worst.0 {
                worst = (de, [r.x, r.y, r.z], "E != -grad Phi");
            }
            if dh > worst.0 {
                worst = (dh, [r.x, r.y, r.z], "H != curl A");
            }
        }
        let relative = if scale > 0.0 { worst.0 / scale } else { worst.0 };
        let report = ConsistencyReport {
            max_deviation: relative,
            location: worst.1,
            points: points.len(),
        };
        if relative > rel_tol {
            return Err(FwError::FieldConsistency {
                message: worst.2.to_string(),
                max_deviation: relative,
                location: worst.1,
            });
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub max_deviation: f64,
    pub location: [f64; 3],
    pub points: usize,
}

/// Natural cubic spline through (x_i, y_i).
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(FwError::InvalidParameter("a spline needs at least three nodes".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FwError::InvalidParameter("spline nodes must be strictly increasing".into()));
        }
        // Tridiagonal system for the second derivatives, natural end conditions.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value and first two derivatives.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        let v = a * self.y[k] + b * self.y[k + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (self.y[k + 1] - self.y[k]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        (v, d1, d2)
    }
}

/// Field tabulated along x: Φ(x) and A(x), with strengths E = (−Φ′, 0, 0) and
/// H = ∇×A = (0, −A_z′, A_y′). Optional strength columns replace the derived ones,
/// which is what the consistency check is for.
#[derive(Clone, Debug)]
pub struct SampledField {
    x: Vec<f64>,
    phi: CubicSpline,
    a: [CubicSpline; 3],
    e: Option<[CubicSpline; 3]>,
    h: Option<[CubicSpline; 3]>,
    pub length_scale: f64,
}

impl SampledField {
    pub fn from_columns(
        x: Vec<f64>,
        phi: Vec<f64>,
        a: [Vec<f64>; 3],
        e: Option<[Vec<f64>; 3]>,
        h: Option<[Vec<f64>; 3]>,
        length_scale: Option<f64>,
    ) -> Result<Self> {
        let spline = |y: Vec<f64>| CubicSpline::new(x.clone(), y);
        let phi_s = spline(phi)?;
        let [ax, ay, az] = a;
        let a_s = [spline(ax)?, spline(ay)?, spline(az)?];
        let triple = |v: Option<[Vec<f64>; 3]>| -> Result<Option<[CubicSpline; 3]>> {
            match v {
                None => Ok(None),
                Some([p, q, r]) => Ok(Some([spline(p)?, spline(q)?, spline(r)?])),
            }
        };
        let e_s = triple(e)?;
        let h_s = triple(h)?;
        let mut field = Self {
            x: x.clone(),
            phi: phi_s,
            a: a_s,
            e: e_s,
            h: h_s,
            length_scale: 1.0,
        };
        field.length_scale = match length_scale {
            Some(l) if l > 0.0 => l,
            Some(l) => return Err(FwError::InvalidParameter(format!("length scale must be positive, got {l}"))),
            None => field.estimate_length_scale(),
        };
        Ok(field)
    }

    /// Reads a CSV with header columns x, Phi, Ax, Ay, Az and optionally Ex, Ey, Ez,
    /// Hx, Hy, Hz.
    pub fn from_csv(path: &Path, length_scale: Option<f64>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| FwError::Io(format!("{}: {e}", path.display())))?;
        let headers = rdr
            .headers()
            .map_err(|e| FwError::Io(format!("{}: {e}", path.display())))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let required = ["x", "Phi", "Ax", "Ay", "Az"];
        let mut idx = Vec::new();
        for name in required {
            idx.push(col(name).ok_or_else(|| {
                FwError::InvalidParameter(format!("{}: missing column '{name}'", path.display()))
            })?);
        }
        let e_idx: Option<Vec<usize>> = ["Ex", "Ey", "Ez"].iter().map(|n| col(n)).collect();
        let h_idx: Option<Vec<usize>> = ["Hx", "Hy", "Hz"].iter().map(|n| col(n)).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| FwError::Io(format!("{}: {e}", path.display())))?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    FwError::InvalidParameter(format!(
                        "{}: row {}, column {}: '{field}' is not a number",
                        path.display(),
                        line + 2,
                        j + 1
                    ))
                })?;
                cols[j].push(v);
            }
        }
        let take = |i: usize| cols[i].clone();
        let three = |ix: &Option<Vec<usize>>| ix.as_ref().map(|v| [take(v[0]), take(v[1]), take(v[2])]);
        Self::from_columns(
            take(idx[0]),
            take(idx[1]),
            [take(idx[2]), take(idx[3]), take(idx[4])],
            three(&e_idx),
            three(&h_idx),
            length_scale,
        )
    }

    fn min_spacing(&self) -> f64 {
        self.x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// min over Φ, A_y, A_z of max|f′| / max|f″|, i.e. the distance over which the
    /// strengths change by their own size.
    fn estimate_length_scale(&self) -> f64 {
        let mut best = f64::INFINITY;
        for s in [&self.phi, &self.a[1], &self.a[2]] {
            let (mut d1, mut d2) = (0.0f64, 0.0f64);
            for &x in &self.x {
                let (_, a, b) = s.eval(x);
                d1 = d1.max(a.abs());
                d2 = d2.max(b.abs());
            }
            if d1 > 0.0 && d2 > 0.0 {
                best = best.min(d1 / d2);
            }
        }
        if best.is_finite() {
            best
        } else {
            self.x[self.x.len() - 1] - self.x[0]
        }
    }

    fn locate(&self, r: &V3) -> Result<f64> {
        let (lo, hi) = self.phi.domain();
        if !(r.x >= lo && r.x <= hi) {
            return Err(FwError::FieldDomain([r.x, r.y, r.z]));
        }
        Ok(r.x)
    }

    pub fn sample(&self, r: &V3) -> Result<FieldSample> {
        let x = self.locate(r)?;
        let (phi, dphi, _) = self.phi.eval(x);
        let a = V3::new(self.a[0].eval(x).0, self.a[1].eval(x).0, self.a[2].eval(x).0);
        let e = match &self.e {
            Some(s) => V3::new(s[0].eval(x).0, s[1].eval(x).0, s[2].eval(x).0),
            None => V3::new(-dphi, 0.0, 0.0),
        };
        let h = match &self.h {
            Some(s) => V3::new(s[0].eval(x).0, s[1].eval(x).0, s[2].eval(x).0),
            None => V3::new(0.0, -self.a[2].eval(x).1, self.a[1].eval(x).1),
        };
        Ok(FieldSample { phi, a, e, h })
    }

    pub fn gradients(&self, r: &V3) -> Result<FieldGradients> {
        let x = self.locate(r)?;
        let mut de = Matrix3::zeros();
        let mut dh = Matrix3::zeros();
        match &self.e {
            Some(s) => {
                for i in 0..3 {
                    de[(i, 0)] = s[i].eval(x).1;
                }
            }
            None => de[(0, 0)] = -self.phi.eval(x).2,
        }
        match &self.h {
            Some(s) => {
                for i in 0..3 {
                    dh[(i, 0)] = s[i].eval(x).1;
                }
            }
            None => {
                dh[(1, 0)] = -self.a[2].eval(x).2;
                dh[(2, 0)] = self.a[1].eval(x).2;
            }
        }
        Ok(FieldGradients { de, dh })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior_and_nodes() {
        let x: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi).0 - yi).abs() < 1e-14);
        }
        let (v, d1, d2) = s.eval(1.0123);
        assert!((v - 1.0123f64.sin()).abs() < 1e-6);
        assert!((d1 - 1.0123f64.cos()).abs() < 1e-4);
        assert!((d2 + 1.0123f64.sin()).abs() < 1e-2);
    }

    #[test]
    fn presets_are_self_consistent() {
        let fields = [
            FieldConfiguration::Zero,
            FieldConfiguration::uniform([0.3, -0.1, 0.2], [0.0, 0.5, 1.0]),
            FieldConfiguration::GaussianWell {
                depth: 0.3,
                width: 2.0,
                center: 0.5,
            },
            FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.2 },
        ];
        for f in &fields {
            let r = f.check_consistency(&f.default_check_points(), 1e-7).unwrap();
            assert!(r.max_deviation < 1e-7, "{f:?}: {}", r.max_deviation);
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let fields = [
            FieldConfiguration::GaussianWell {
                depth: 0.3,
                width: 2.0,
                center: 0.5,
            },
            FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.2 },
        ];
        let r = V3::new(0.9, -0.4, 0.3);
        let h = 1e-5;
        for f in &fields {
            let g = f.gradients(&r).unwrap();
            for j in 0..3 {
                let mut dr = V3::zeros();
                dr[j] = h;
                let p = f.sample(&(r + dr)).unwrap();
                let m = f.sample(&(r - dr)).unwrap();
                for i in 0..3 {
                    assert!(((p.e[i] - m.e[i]) / (2.0 * h) - g.de[(i, j)]).abs() < 1e-8);
                    assert!(((p.h[i] - m.h[i]) / (2.0 * h) - g.dh[(i, j)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn gradient_field_is_divergence_and_curl_free() {
        let f = FieldConfiguration::LinearGradientB { b0: 2.0, gradient: -0.7 };
        let g = f.gradients(&V3::new(0.1, 0.2, 0.3)).unwrap().dh;
        assert!(g.trace().abs() < 1e-15);
        assert!((g - g.transpose()).norm() < 1e-15);
    }

    #[test]
    fn table_outside_domain_is_an_error() {
        let x: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let z = vec![0.0; 5];
        let t = SampledField::from_columns(x, z.clone(), [z.clone(), z.clone(), z], None, None, Some(1.0)).unwrap();
        let f = FieldConfiguration::Table(Arc::new(t));
        assert!(matches!(f.sample(&V3::new(7.0, 0.0, 0.0)), Err(FwError::FieldDomain(_))));
    }
}
