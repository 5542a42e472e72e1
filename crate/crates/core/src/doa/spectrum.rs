use super::{steering_vector, DoaError, SteeringModel};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::fmt;

/// Lower bound on the MUSIC projection `‖E_nᴴ a‖²` relative to `‖a‖²`.
pub const MUSIC_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoaMethod {
    Bartlett,
    Music,
}

impl DoaMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::Bartlett => "bartlett",
            Self::Music => "music",
        }
    }
}

impl fmt::Display for DoaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DoaMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bartlett" => Ok(Self::Bartlett),
            "music" => Ok(Self::Music),
            _ => Err(format!("unknown DoA method `{s}` (bartlett | music)")),
        }
    }
}

/// Uniform azimuth grid in degrees, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 0.25,
        }
    }
}

impl AngleGrid {
    pub fn new(start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<Self, DoaError> {
        let g = Self {
            start_deg,
            stop_deg,
            step_deg,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), DoaError> {
        let ok = self.step_deg > 0.0
            && self.start_deg.is_finite()
            && self.stop_deg >= self.start_deg
            && self.start_deg >= -90.0
            && self.stop_deg <= 90.0;
        if ok {
            Ok(())
        } else {
            Err(DoaError::Config(format!(
                "bad angle grid {}..{} step {}",
                self.start_deg, self.stop_deg, self.step_deg
            )))
        }
    }

    pub fn len(&self) -> usize {
        ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step_rad(&self) -> f64 {
        self.step_deg.to_radians()
    }

    /// Grid points in radians.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.start_deg + i as f64 * self.step_deg).to_radians())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub method: DoaMethod,
    /// Radians.
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpatialSpectrum {
    pub fn argmax(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }

    /// `angle_deg,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("angle_deg,value\n");
        for (a, v) in self.angles.iter().zip(&self.values) {
            s.push_str(&format!("{},{}\n", a.to_degrees(), v));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Radians.
    pub azimuth: f64,
    pub value: f64,
}

fn check_shape(r: &DMatrix<Complex64>, model: &SteeringModel) -> Result<(), DoaError> {
    if r.nrows() != model.n_channels() || r.ncols() != model.n_channels() {
        return Err(DoaError::Shape {
            matrix: r.nrows(),
            model: model.n_channels(),
        });
    }
    Ok(())
}

fn steering_table(
    model: &SteeringModel,
    grid: &AngleGrid,
) -> Result<(Vec<f64>, Vec<DVector<Complex64>>), DoaError> {
    grid.validate()?;
    let angles = grid.angles();
    let vectors = angles
        .iter()
        .map(|a| steering_vector(model, *a))
        .collect::<Result<_, _>>()?;
    Ok((angles, vectors))
}

/// `P(θ) = aᴴ R a / n²`.
pub fn bartlett_spectrum(
    r: &DMatrix<Complex64>,
    model: &SteeringModel,
    grid: &AngleGrid,
) -> Result<SpatialSpectrum, DoaError> {
    check_shape(r, model)?;
    let (angles, vectors) = steering_table(model, grid)?;
    let n2 = (model.n_channels() * model.n_channels()) as f64;
    let values = vectors
        .iter()
        .map(|a| (a.adjoint() * r * a)[(0, 0)].re.max(0.0) / n2)
        .collect();
    Ok(SpatialSpectrum {
        method: DoaMethod::Bartlett,
        angles,
        values,
    })
}

/// `P(θ) = 1 / (aᴴ E_n E_nᴴ a)` with `E_n` spanning the `n - n_sources`
/// smallest eigenvalues of `R`.
pub fn music_spectrum(
    r: &DMatrix<Complex64>,
    model: &SteeringModel,
    n_sources: usize,
    grid: &AngleGrid,
) -> Result<SpatialSpectrum, DoaError> {
    check_shape(r, model)?;
    let n = model.n_channels();
    if n_sources == 0 || n_sources >= n {
        return Err(DoaError::Config(format!(
            "MUSIC needs 1 <= n_sources < {n}, got {n_sources}"
        )));
    }
    let (angles, vectors) = steering_table(model, grid)?;
    let eig = SymmetricEigen::new(r.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let noise = DMatrix::from_fn(n, n - n_sources, |i, j| eig.eigenvectors[(i, order[j])]);
    let floor = MUSIC_FLOOR * n as f64;
    let values = vectors
        .iter()
        .map(|a| {
            let proj = noise.adjoint() * a;
            1.0 / proj.norm_squared().max(floor)
        })
        .collect();
    Ok(SpatialSpectrum {
        method: DoaMethod::Music,
        angles,
        values,
    })
}

/// Local maxima, largest `max_peaks` by value, each refined by a 3-point
/// parabola through the log spectrum. Grid edges count as maxima when they
/// exceed their single neighbour and are not refined.
pub fn pick_peaks(spectrum: &SpatialSpectrum, max_peaks: usize) -> Vec<Peak> {
    let v = &spectrum.values;
    let a = &spectrum.angles;
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Peak {
            azimuth: a[0],
            value: v[0],
        }];
    }
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || v[i] > v[i - 1];
            let right = i == n - 1 || v[i] >= v[i + 1];
            left && right && !(i == 0 && v[0] == v[1]) && !(i == n - 1 && v[n - 1] == v[n - 2])
        })
        .collect();
    idx.sort_by(|x, y| v[*y].total_cmp(&v[*x]).then(x.cmp(y)));
    idx.truncate(max_peaks);
    idx.into_iter()
        .map(|i| {
            if i == 0 || i == n - 1 {
                return Peak {
                    azimuth: a[i],
                    value: v[i],
                };
            }
            let tiny = f64::MIN_POSITIVE;
            let (ym, y0, yp) = (
                v[i - 1].max(tiny).ln(),
                v[i].max(tiny).ln(),
                v[i + 1].max(tiny).ln(),
            );
            let denom = ym - 2.0 * y0 + yp;
            let p = if denom < 0.0 {
                (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let step = a[i + 1] - a[i];
            Peak {
                azimuth: a[i] + p * step,
                value: (y0 - 0.25 * (ym - yp) * p).exp(),
            }
        })
        .collect()
}
