//! Test potentials and the smooth radial cutoff.

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Space};
use crate::Vec2;

/// Default radius where the cutoff stops being identically one.
pub const DEFAULT_CUTOFF_INNER: f64 = 1.45;
/// Default radius beyond which the cutoff vanishes.
pub const DEFAULT_CUTOFF_OUTER: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// Piecewise constant: 1.2 on the diamond `|x1| + |x2| < 0.3`, 1 on the
    /// annulus `0.7 < |x| < 1`, 0 elsewhere.
    Example1,
    /// Sum of three Gaussians, the first one depending on `x1` only.
    Example2,
    Scaled(Box<PotentialSpec>, f64),
    Raster(Field),
}

impl PotentialSpec {
    pub fn scaled(self, amplitude: f64) -> Self {
        PotentialSpec::Scaled(Box::new(self), amplitude)
    }

    /// Numbered paper example, 1 or 2.
    pub fn example(number: u32) -> Result<Self> {
        match number {
            1 => Ok(PotentialSpec::Example1),
            2 => Ok(PotentialSpec::Example2),
            _ => Err(Error::Domain(format!("unknown example {number}, expected 1 or 2"))),
        }
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            PotentialSpec::Example1 => example1(x),
            PotentialSpec::Example2 => example2(x),
            PotentialSpec::Scaled(base, eps) => eps * base.eval(x),
            PotentialSpec::Raster(field) => {
                let spec = field.spec();
                let h = spec.spacing();
                let l = spec.half_width();
                let idx = |c: f64| -> Option<usize> {
                    let t = ((c + l) / h).round();
                    (t >= 0.0 && t < spec.n() as f64).then_some(t as usize)
                };
                match (idx(x[0]), idx(x[1])) {
                    (Some(i), Some(j)) => field.get(i, j).re,
                    _ => 0.0,
                }
            }
        }
    }

    /// Stable identifier recorded in dataset manifests.
    pub fn id(&self) -> String {
        match self {
            PotentialSpec::Example1 => "example1".into(),
            PotentialSpec::Example2 => "example2".into(),
            PotentialSpec::Scaled(base, eps) => format!("scaled({},{eps:?})", base.id()),
            PotentialSpec::Raster(field) => {
                use sha2::{Digest, Sha256};
                let mut hasher = Sha256::new();
                for z in field.data() {
                    hasher.update(z.re.to_le_bytes());
                    hasher.update(z.im.to_le_bytes());
                }
                let digest = hasher.finalize();
                let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
                format!("raster(n={},{hex})", field.spec().n())
            }
        }
    }
}

fn example1(x: Vec2) -> f64 {
    let r = x[0].hypot(x[1]);
    if x[0].abs() + x[1].abs() < 0.3 {
        1.2
    } else if 0.7 < r && r < 1.0 {
        1.0
    } else {
        0.0
    }
}

fn example2(x: Vec2) -> f64 {
    let sq = |a: f64, b: f64| a * a + b * b;
    let t1 = (-5.0 * (x[0] - 0.5).powi(2)).exp().max(0.0);
    let t2 = 1.5 * (-4.0 * sq(x[0] + 0.5, x[1] - 0.4)).exp();
    let t3 = 2.0 * (-7.0 * sq(x[0] + 0.4, x[1] + 0.4) - 0.4).exp();
    t1 + t2 + t3
}

pub fn eval_potential(p: &PotentialSpec, x: Vec2) -> f64 {
    p.eval(x)
}

/// Samples the potential at the grid nodes. A raster on the same grid is
/// returned unchanged; other rasters are resampled at the nearest node.
pub fn rasterize(p: &PotentialSpec, spec: &GridSpec) -> Field {
    match p {
        PotentialSpec::Raster(field) if field.spec() == spec => field.clone(),
        _ => Field::from_real(*spec, |x| p.eval(x)),
    }
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`, `C^inf` in between.
pub fn smooth_step(t: f64) -> f64 {
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (g(1.0 - t), g(t));
    a / (a + b)
}

/// Radial cutoff `phi`, identically one inside `r_inner` and zero outside `r_outer`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    r_inner: f64,
    r_outer: f64,
    raster: Field,
}

impl Cutoff {
    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn raster(&self) -> &Field {
        &self.raster
    }

    pub fn value(&self, r: f64) -> f64 {
        smooth_step((r - self.r_inner) / (self.r_outer - self.r_inner))
    }

    /// `phi * f` for a physical field on the cutoff's grid.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.expect_space(Space::Physical)?;
        self.raster.mul(f)
    }
}

pub fn make_cutoff(spec: &GridSpec, r_inner: f64, r_outer: f64) -> Result<Cutoff> {
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer <= spec.half_width()) {
        return Err(Error::Domain(format!(
            "cutoff radii must satisfy 0 < r_inner < r_outer <= {}, got {r_inner}, {r_outer}",
            spec.half_width()
        )));
    }
    let raster = Field::from_real(*spec, |x| {
        smooth_step((x[0].hypot(x[1]) - r_inner) / (r_outer - r_inner))
    });
    Ok(Cutoff {
        r_inner,
        r_outer,
        raster,
    })
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Example1
    }
}
