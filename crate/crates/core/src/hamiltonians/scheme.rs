//! Discretizations that turn π, Φ(r), E(r), H(r) into finite spatial matrices.

use std::f64::consts::PI;

use crate::algebra::{BasisTag, BlockOperator, Space};
use crate::error::{FwError, Result};
use crate::hamiltonians::fields::{FieldConfiguration, V3};
use crate::hamiltonians::matrices;
use crate::hamiltonians::params::ParticleParams;
use crate::linalg::{self, re, CMatrix, CVector, C64};

/// 1-D periodic grid along x with plane-wave (spectral) momentum. The momentum
/// window is [p₀ − w, p₀ + w) with w = πħN/L; a nonzero Bloch momentum p₀ centres it
/// on a moving packet. y and z momenta are fixed numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub points: usize,
    pub box_length: f64,
    pub center: f64,
    pub bloch_momentum: f64,
    pub transverse: [f64; 2],
}

impl PeriodicGrid {
    /// Grid whose momentum window stays fixed while ħ varies; L = πħN/w.
    pub fn with_momentum_window(points: usize, bloch_momentum: f64, half_width: f64, hbar: f64) -> Self {
        Self {
            points,
            box_length: PI * hbar * points as f64 / half_width,
            center: 0.0,
            bloch_momentum,
            transverse: [0.0, 0.0],
        }
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let n = self.points as isize;
        (0..n).map(|j| self.center + (j - n / 2) as f64 * self.spacing()).collect()
    }

    pub fn momenta(&self, hbar: f64) -> Vec<f64> {
        let n = self.points as isize;
        (0..n)
            .map(|k| self.bloch_momentum + 2.0 * PI * hbar * (k - n / 2) as f64 / self.box_length)
            .collect()
    }

    /// Columns are the plane waves e^{ipx/ħ}/√N sampled on the grid.
    pub fn plane_waves(&self, hbar: f64) -> CMatrix {
        let x = self.positions();
        let p = self.momenta(hbar);
        let norm = 1.0 / (self.points as f64).sqrt();
        CMatrix::from_fn(self.points, self.points, |j, k| C64::from_polar(norm, p[k] * x[j] / hbar))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiscretizationScheme {
    /// Single momentum eigenstate in uniform fields, sampled at the origin.
    MomentumBlock { momentum: V3 },
    PeriodicGrid(PeriodicGrid),
    /// Landau levels 0..levels of a uniform H along z (gauge A = (0, Hx, 0)), with p_z and
    /// p_y = k_y fixed. Allows a crossed uniform E along x.
    LandauLevels { levels: usize, pz: f64, ky: f64 },
}

#[derive(Clone, Debug)]
enum Band {
    Single,
    Momentum { waves: CMatrix, momenta: Vec<f64> },
    Landau { pi_perp: Vec<f64> },
}

/// Spatial matrices of one Hamiltonian realization.
#[derive(Clone, Debug)]
pub struct Realization {
    pub basis: BasisTag,
    pub n: usize,
    pub pi: [CMatrix; 3],
    pub phi: CMatrix,
    pub e: [CMatrix; 3],
    pub h: [CMatrix; 3],
    /// Position operators where the basis defines them.
    pub position: [Option<CMatrix>; 3],
    /// Points at which the fields were sampled.
    pub sample_points: Vec<V3>,
    band: Band,
}

fn diag(values: impl Iterator<Item = f64>) -> CMatrix {
    diagonal(&values.collect::<Vec<_>>())
}

fn diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| re(v))))
}

impl Realization {
    pub fn space(&self, spinor_rank: usize) -> Result<Space> {
        Space::new(spinor_rank, self.n, self.basis.clone())
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.n, self.n)
    }

    /// π_x² + π_y² + π_z² as an operator product.
    pub fn pi_squared(&self) -> CMatrix {
        self.pi.iter().fold(CMatrix::zeros(self.n, self.n), |acc, p| acc + linalg::matmul(p, p))
    }

    /// Spatial projector onto basis states with momentum (grid: p_x; Landau: |π⊥|)
    /// in [center − half_width, center + half_width].
    pub fn band_projector(&self, center: f64, half_width: f64) -> CMatrix {
        let inside = |v: f64| (v - center).abs() <= half_width;
        match &self.band {
            Band::Single => self.identity(),
            Band::Momentum { waves, momenta } => {
                let mask: Vec<f64> = momenta.iter().map(|&p| if inside(p) { 1.0 } else { 0.0 }).collect();
                let mut w = waves.clone();
                for (k, mut col) in w.column_iter_mut().enumerate() {
                    col *= re(mask[k]);
                }
                linalg::matmul(&w, &waves.adjoint())
            }
            Band::Landau { pi_perp } => diagonal(
                &pi_perp
                    .iter()
                    .map(|&p| if inside(p) { 1.0 } else { 0.0 })
                    .collect::<Vec<_>>(),
            ),
        }
    }

    /// Observables lifted to a spinor space: position (where defined), π and, for
    /// spinor rank 4, the polarization operator Π.
    pub fn observables(&self, spinor_rank: usize) -> Result<Observables> {
        let space = self.space(spinor_rank)?;
        let lift = |m: &CMatrix| space.lift(m);
        let position = [
            self.position[0].as_ref().map(lift).transpose()?,
            self.position[1].as_ref().map(lift).transpose()?,
            self.position[2].as_ref().map(lift).transpose()?,
        ];
        let pi = [lift(&self.pi[0])?, lift(&self.pi[1])?, lift(&self.pi[2])?];
        let polarization = if spinor_rank == 4 {
            let p = matrices::polarization();
            let id = self.identity();
            Some([space.kron(&p[0], &id)?, space.kron(&p[1], &id)?, space.kron(&p[2], &id)?])
        } else {
            None
        };
        Ok(Observables {
            position,
            pi,
            polarization,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Observables {
    pub position: [Option<BlockOperator>; 3],
    pub pi: [BlockOperator; 3],
    pub polarization: Option<[BlockOperator; 3]>,
}

impl DiscretizationScheme {
    pub fn realize(&self, field: &FieldConfiguration, params: &ParticleParams) -> Result<Realization> {
        params.validate()?;
        let q = params.charge / params.c;
        match self {
            DiscretizationScheme::MomentumBlock { momentum } => {
                let s = field.sample(&V3::zeros())?;
                let one = |v: f64| CMatrix::from_element(1, 1, re(v));
                Ok(Realization {
                    basis: BasisTag::new("momentum-block"),
                    n: 1,
                    pi: [one(momentum.x), one(momentum.y), one(momentum.z)],
                    phi: one(s.phi),
                    e: [one(s.e.x), one(s.e.y), one(s.e.z)],
                    h: [one(s.h.x), one(s.h.y), one(s.h.z)],
                    position: [None, None, None],
                    sample_points: vec![V3::zeros()],
                    band: Band::Single,
                })
            }
            DiscretizationScheme::PeriodicGrid(grid) => {
                if grid.points < 4 || !(grid.box_length > 0.0) {
                    return Err(FwError::InvalidParameter("grid needs at least 4 points and a positive box".into()));
                }
                let x = grid.positions();
                let pts: Vec<V3> = x.iter().map(|&x| V3::new(x, 0.0, 0.0)).collect();
                let samples = pts.iter().map(|r| field.sample(r)).collect::<Result<Vec<_>>>()?;
                let col = |f: &dyn Fn(usize) -> f64| diag((0..samples.len()).map(f));
                let waves = grid.plane_waves(params.hbar);
                let momenta = grid.momenta(params.hbar);
                let mut scaled = waves.clone();
                for (k, mut c) in scaled.column_iter_mut().enumerate() {
                    c *= re(momenta[k]);
                }
                let p_x = linalg::hermitian_part(&linalg::matmul(&scaled, &waves.adjoint()));
                let pi = [
                    p_x - col(&|j| q * samples[j].a.x),
                    col(&|j| grid.transverse[0] - q * samples[j].a.y),
                    col(&|j| grid.transverse[1] - q * samples[j].a.z),
                ];
                Ok(Realization {
                    basis: BasisTag::new(format!("periodic-grid-{}", grid.points)),
                    n: grid.points,
                    pi,
                    phi: col(&|j| samples[j].phi),
                    e: [
                        col(&|j| samples[j].e.x),
                        col(&|j| samples[j].e.y),
                        col(&|j| samples[j].e.z),
                    ],
                    h: [
                        col(&|j| samples[j].h.x),
                        col(&|j| samples[j].h.y),
                        col(&|j| samples[j].h.z),
                    ],
                    position: [Some(diagonal(&x)), None, None],
                    sample_points: pts,
                    band: Band::Momentum { waves, momenta },
                })
            }
            DiscretizationScheme::LandauLevels { levels, pz, ky } => {
                let (e, h) = match field {
                    FieldConfiguration::Uniform { e, h } => (*e, *h),
                    _ => {
                        return Err(FwError::Unsupported(
                            "Landau levels need a uniform field configuration".into(),
                        ))
                    }
                };
                if h.x != 0.0 || h.y != 0.0 || h.z == 0.0 || e.y != 0.0 || e.z != 0.0 {
                    return Err(FwError::Unsupported(
                        "Landau levels need H along z and at most E along x".into(),
                    ));
                }
                if params.charge == 0.0 {
                    return Err(FwError::Unsupported("Landau levels need a charged particle".into()));
                }
                let k = *levels;
                if k < 2 {
                    return Err(FwError::InvalidParameter("need at least two Landau levels".into()));
                }
                // [π_x, π_y] = iħeH/c =: iω
                let omega = params.hbar * params.charge * h.z / params.c;
                let s = (omega.abs() / 2.0).sqrt();
                let mut a = CMatrix::zeros(k, k);
                for n in 1..k {
                    a[(n - 1, n)] = re((n as f64).sqrt());
                }
                let ad = a.adjoint();
                let px = (&a + &ad) * re(s);
                let sign = if omega < 0.0 { -1.0 } else { 1.0 };
                let py = (&ad - &a) * C64::new(0.0, s * sign);
                let id = CMatrix::identity(k, k);
                // x = (c/(eH))(k_y − π_y)
                let x = (&id * re(*ky) - &py) * re(params.c / (params.charge * h.z));
                let phi = &x * re(-e.x);
                let scalar = |v: f64| &id * re(v);
                let pi_perp = (0..k).map(|n| (omega.abs() * (2 * n + 1) as f64).sqrt()).collect();
                Ok(Realization {
                    basis: BasisTag::new(format!("landau-{k}")),
                    n: k,
                    pi: [px, py, scalar(*pz)],
                    phi,
                    e: [scalar(e.x), scalar(e.y), scalar(e.z)],
                    h: [scalar(h.x), scalar(h.y), scalar(h.z)],
                    position: [Some(x), None, None],
                    sample_points: vec![V3::zeros()],
                    band: Band::Landau { pi_perp },
                })
            }
        }
    }
}
