//! Weighted mean centre and one-standard-deviation ellipse of regional scores.
//!
//! Coordinates are projected kilometres. The azimuth is the bearing of the
//! long axis, clockwise from north, in `[0, 180)`. It comes from the classical
//! closed form
//!
//! ```text
//! tan θ = (A + √(A² + 4B²)) / 2B,   A = Σ W x̃² − Σ W ỹ²,   B = Σ W x̃ ỹ
//! ```
//!
//! and the semi-axes are the weighted RMS deviations along and across `θ`,
//! without any √2 inflation.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::ScoreSeries;
use crate::ingest::{Geometry, Point};

/// Relative threshold below which second-moment differences count as zero.
const ISOTROPY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseSummary {
    pub year: Option<i32>,
    pub center: Point,
    /// Centre back-projected to degrees, when the geometry came from lon/lat.
    pub center_lonlat: Option<(f64, f64)>,
    pub azimuth_deg: f64,
    pub semi_major_km: f64,
    pub semi_minor_km: f64,
    pub area_km2: f64,
    /// Equal second moments and no covariance: every direction is a principal
    /// axis, so the azimuth is reported as 0.
    pub isotropic: bool,
    /// The weighted points are collinear (or coincide): the short axis is 0.
    pub degenerate: bool,
}

fn check_weights(points: &[Point], weights: &[f64]) -> Result<f64> {
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points, {} weights",
            points.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidData(format!("ellipse weights must be nonnegative, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all weights are zero".into()));
    }
    Ok(total)
}

/// `x̄ = Σ W X / Σ W`, `ȳ = Σ W Y / Σ W`.
pub fn weighted_center(points: &[Point], weights: &[f64]) -> Result<Point> {
    let total = check_weights(points, weights)?;
    let (sx, sy) = points
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(sx, sy), (p, w)| (sx + w * p.x, sy + w * p.y));
    Ok(Point::new(sx / total, sy / total))
}

/// Standard-deviational ellipse of weighted points. Collinear input is not an
/// error; it comes back with `degenerate` set.
pub fn sd_ellipse(points: &[Point], weights: &[f64]) -> Result<EllipseSummary> {
    let total = check_weights(points, weights)?;
    let support = weights.iter().filter(|w| **w > 0.0).count();
    if support < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 points with positive weight, got {support}"
        )));
    }
    let c = weighted_center(points, weights)?;

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, w) in points.iter().zip(weights) {
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        sxx += w * dx * dx;
        syy += w * dy * dy;
        sxy += w * dx * dy;
    }
    let a = sxx - syy;
    let b = sxy;
    let scale = sxx + syy;

    let mut isotropic = false;
    let theta_deg = if b.abs() <= ISOTROPY_TOLERANCE * scale {
        if a.abs() <= ISOTROPY_TOLERANCE * scale {
            isotropic = true;
            0.0
        } else if a > 0.0 {
            90.0
        } else {
            0.0
        }
    } else {
        ((a + (a * a + 4.0 * b * b).sqrt()) / (2.0 * b)).atan().to_degrees()
    };
    let azimuth_deg = theta_deg.rem_euclid(180.0);

    let (sin, cos) = azimuth_deg.to_radians().sin_cos();
    let (mut along, mut across) = (0.0, 0.0);
    for (p, w) in points.iter().zip(weights) {
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        let u = dx * sin + dy * cos;
        let v = dx * cos - dy * sin;
        along += w * u * u;
        across += w * v * v;
    }
    let semi_major_km = (along / total).sqrt();
    let mut semi_minor_km = (across / total).sqrt();
    let degenerate = semi_minor_km <= ISOTROPY_TOLERANCE.sqrt() * semi_major_km;
    if degenerate {
        // What is left is rounding from the rotation.
        semi_minor_km = 0.0;
    }

    Ok(EllipseSummary {
        year: None,
        center: c,
        center_lonlat: None,
        azimuth_deg,
        semi_major_km,
        semi_minor_km,
        area_km2: std::f64::consts::PI * semi_major_km * semi_minor_km,
        isotropic,
        degenerate,
    })
}

/// Year-over-year movement of the weighted centre.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterShift {
    pub from_year: i32,
    pub to_year: i32,
    pub distance_km: f64,
    /// Clockwise from north in `[0, 360)`; `None` when the centre did not move.
    pub bearing_deg: Option<f64>,
    pub direction: Option<&'static str>,
    /// Change in azimuth, wrapped to `(-90, 90]`.
    pub azimuth_change_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub ellipses: Vec<EllipseSummary>,
    pub shifts: Vec<CenterShift>,
    /// Sum of the per-step azimuth changes over the whole span. Negative values
    /// mean the long axis turned counterclockwise.
    pub net_azimuth_change_deg: f64,
}

const COMPASS: [&str; 8] = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];

/// Bearing of the vector `from → to`, clockwise from north, in `[0, 360)`.
pub fn bearing_deg(from: Point, to: Point) -> Option<f64> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(dx.atan2(dy).to_degrees().rem_euclid(360.0))
}

pub fn compass_point(bearing: f64) -> &'static str {
    COMPASS[((bearing / 45.0).round() as usize) % 8]
}

fn wrap_axis_change(d: f64) -> f64 {
    let d = d.rem_euclid(180.0);
    if d > 90.0 {
        d - 180.0
    } else {
        d
    }
}

/// One ellipse per requested year, weighted by that year's scores, plus the
/// centre displacement between consecutive requested years. Degenerate
/// ellipses are errors here.
pub fn ellipse_trajectory(
    series: &ScoreSeries,
    geometry: &Geometry,
    years: &[i32],
) -> Result<Trajectory> {
    let points = geometry.points_for(&series.regions)?;
    let mut ellipses = Vec::with_capacity(years.len());
    for &year in years {
        let t = series
            .year_index(year)
            .ok_or_else(|| Error::config("ellipse.years", format!("no scores for {year}")))?;
        let mut e = sd_ellipse(&points, &series.cross_section(t))?;
        if e.degenerate {
            return Err(Error::Degenerate(format!("weighted centroids are collinear in {year}")));
        }
        e.year = Some(year);
        e.center_lonlat = geometry.to_lonlat(e.center);
        ellipses.push(e);
    }
    let shifts: Vec<CenterShift> = ellipses
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let bearing = bearing_deg(a.center, b.center);
            CenterShift {
                from_year: a.year.unwrap_or_default(),
                to_year: b.year.unwrap_or_default(),
                distance_km: (b.center.x - a.center.x).hypot(b.center.y - a.center.y),
                bearing_deg: bearing,
                direction: bearing.map(compass_point),
                azimuth_change_deg: wrap_axis_change(b.azimuth_deg - a.azimuth_deg),
            }
        })
        .collect();
    let net_azimuth_change_deg = shifts.iter().map(|s| s.azimuth_change_deg).sum();
    Ok(Trajectory {
        ellipses,
        shifts,
        net_azimuth_change_deg,
    })
}

/// Writes `year,center_lon,center_lat,semi_major_km,semi_minor_km,azimuth_deg,area_km2`.
/// The lon/lat columns are empty when centroids were supplied pre-projected.
pub fn write_ellipse_csv<W: Write>(ellipses: &[EllipseSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map_err = |e: csv::Error| Error::InvalidData(format!("csv write failed: {e}"));
    w.write_record([
        "year",
        "center_lon",
        "center_lat",
        "semi_major_km",
        "semi_minor_km",
        "azimuth_deg",
        "area_km2",
    ])
    .map_err(map_err)?;
    for e in ellipses {
        let (lon, lat) = e
            .center_lonlat
            .map(|(lon, lat)| (lon.to_string(), lat.to_string()))
            .unwrap_or_default();
        w.write_record([
            e.year.map(|y| y.to_string()).unwrap_or_default(),
            lon,
            lat,
            e.semi_major_km.to_string(),
            e.semi_minor_km.to_string(),
            e.azimuth_deg.to_string(),
            e.area_km2.to_string(),
        ])
        .map_err(map_err)?;
    }
    w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
}
