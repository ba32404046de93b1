use std::fmt;
use std::path::Path;
use std::sync::Arc;

use super::{MeasureError, ParseErrorKind};
use crate::geometry::Point2;

type DensityFn = dyn Fn(Point2) -> f64 + Send + Sync;

/// A non-negative density `ρ` on the plane.
#[derive(Clone)]
pub enum Density {
    Constant(f64),
    Analytic(AnalyticDensity),
    Raster(Arc<RasterDensity>),
}

/// A named closed-form density. The closure must be non-negative on the domain.
#[derive(Clone)]
pub struct AnalyticDensity {
    name: String,
    eval: Arc<DensityFn>,
}

impl AnalyticDensity {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl Density {
    pub fn constant(rho: f64) -> Result<Self, MeasureError> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(MeasureError::InvalidDensity(format!(
                "constant density must be finite and non-negative, got {rho}"
            )));
        }
        Ok(Density::Constant(rho))
    }

    pub fn uniform() -> Self {
        Density::Constant(1.0)
    }

    pub fn analytic(
        name: impl Into<String>,
        eval: impl Fn(Point2) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Density::Analytic(AnalyticDensity {
            name: name.into(),
            eval: Arc::new(eval),
        })
    }

    pub fn raster(r: RasterDensity) -> Self {
        Density::Raster(Arc::new(r))
    }

    /// Pointwise value; rasters use the containing pixel and return 0 off-grid.
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Density::Constant(rho) => *rho,
            Density::Analytic(a) => (a.eval)(p),
            Density::Raster(r) => r.value_at(p),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Density::Constant(_))
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Constant(r) => write!(f, "Constant({r})"),
            Density::Analytic(a) => write!(f, "Analytic({})", a.name),
            Density::Raster(r) => write!(f, "Raster({}x{})", r.nx, r.ny),
        }
    }
}

/// Piecewise-constant density on an axis-aligned pixel grid.
///
/// Pixel `(ix, iy)` covers `[x0 + ix·dx, x0 + (ix+1)·dx] × [y0 + iy·dy, y0 + (iy+1)·dy]`;
/// `iy = 0` is the southernmost row.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterDensity {
    nx: usize,
    ny: usize,
    origin: Point2,
    dx: f64,
    dy: f64,
    values: Vec<f64>,
}

impl RasterDensity {
    /// `values` are row-major with the southernmost row first.
    pub fn new(
        nx: usize,
        ny: usize,
        origin: Point2,
        dx: f64,
        dy: f64,
        values: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if nx == 0 || ny == 0 || !(dx > 0.0) || !(dy > 0.0) || !origin.is_finite() {
            return Err(MeasureError::InvalidDensity(
                "raster needs positive dimensions and pixel sizes".into(),
            ));
        }
        if values.len() != nx * ny {
            return Err(MeasureError::InvalidDensity(format!(
                "raster expects {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MeasureError::InvalidDensity(format!(
                "raster values must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            origin,
            dx,
            dy,
            values,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn pixel_size(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    /// Value of pixel `(ix, iy)`, 0 outside the grid.
    pub fn pixel(&self, ix: i64, iy: i64) -> f64 {
        if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
            return 0.0;
        }
        self.values[iy as usize * self.nx + ix as usize]
    }

    /// Column of the grid line `x0 + k·dx` at or left of `x` (may be off-grid).
    pub(crate) fn column_of(&self, x: f64) -> i64 {
        ((x - self.origin.x) / self.dx).floor() as i64
    }

    pub(crate) fn row_of(&self, y: f64) -> i64 {
        ((y - self.origin.y) / self.dy).floor() as i64
    }

    pub(crate) fn grid_x(&self, k: i64) -> f64 {
        self.origin.x + k as f64 * self.dx
    }

    pub(crate) fn grid_y(&self, k: i64) -> f64 {
        self.origin.y + k as f64 * self.dy
    }

    pub fn value_at(&self, p: Point2) -> f64 {
        self.pixel(self.column_of(p.x), self.row_of(p.y))
    }
}

/// Reads a raster in the plain-text format understood by [`parse_raster`].
pub fn load_raster(path: impl AsRef<Path>) -> Result<Density, MeasureError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| MeasureError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_raster(&text)
}

/// Parses `nx ny xmin ymin dx dy` followed by `ny` rows of `nx` values,
/// northernmost row first. Blank lines and `#` comments are ignored.
pub fn parse_raster(text: &str) -> Result<Density, MeasureError> {
    let err = |line: usize, kind: ParseErrorKind| MeasureError::Parse { line, kind };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, ParseErrorKind::MalformedHeader("empty file".into())))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(err(
            hline,
            ParseErrorKind::MalformedHeader(format!("expected 6 fields, found {}", fields.len())),
        ));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(|| {
            err(
                hline,
                ParseErrorKind::MalformedHeader(format!("bad grid size {s:?}")),
            )
        })
    };
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                err(
                    hline,
                    ParseErrorKind::MalformedHeader(format!("bad number {s:?}")),
                )
            })
    };
    let nx = parse_usize(fields[0])?;
    let ny = parse_usize(fields[1])?;
    let origin = Point2::new(parse_f64(fields[2])?, parse_f64(fields[3])?);
    let dx = parse_f64(fields[4])?;
    let dy = parse_f64(fields[5])?;
    if dx <= 0.0 || dy <= 0.0 {
        return Err(err(
            hline,
            ParseErrorKind::MalformedHeader("pixel sizes must be positive".into()),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(ny);
    let mut last_line = hline;
    for (line, content) in lines {
        last_line = line;
        if rows.len() == ny {
            return Err(err(line, ParseErrorKind::ExtraData));
        }
        let mut row = Vec::with_capacity(nx);
        for tok in content.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(line, ParseErrorKind::BadValue(tok.to_string())))?;
            if !v.is_finite() {
                return Err(err(line, ParseErrorKind::BadValue(tok.to_string())));
            }
            if v < 0.0 {
                return Err(err(line, ParseErrorKind::NegativeDensity(v)));
            }
            row.push(v);
        }
        if row.len() != nx {
            return Err(err(
                line,
                ParseErrorKind::WrongRowLength {
                    expected: nx,
                    found: row.len(),
                },
            ));
        }
        rows.push(row);
    }
    if rows.len() != ny {
        return Err(err(
            last_line,
            ParseErrorKind::MissingRows {
                expected: ny,
                found: rows.len(),
            },
        ));
    }
    // file rows run north to south; storage runs south to north
    let values = rows.into_iter().rev().flatten().collect();
    Ok(Density::raster(RasterDensity::new(
        nx, ny, origin, dx, dy, values,
    )?))
}
