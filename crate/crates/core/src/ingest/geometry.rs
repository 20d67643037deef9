use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Serialized as `[x, y]`.
impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Equirectangular (plate carrée) projection with one standard parallel.
///
/// `x = R·cos(φ₀)·(λ − λ₀)`, `y = R·(φ − φ₀)`, angles in radians, output in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equirectangular {
    pub lon0: f64,
    pub lat0: f64,
}

impl Equirectangular {
    pub fn new(lon0: f64, lat0: f64) -> Self {
        Self { lon0, lat0 }
    }

    pub fn forward(&self, lon: f64, lat: f64) -> Point {
        let k = EARTH_RADIUS_KM * self.lat0.to_radians().cos();
        Point::new(
            k * (lon - self.lon0).to_radians(),
            EARTH_RADIUS_KM * (lat - self.lat0).to_radians(),
        )
    }

    pub fn inverse(&self, p: Point) -> (f64, f64) {
        let k = EARTH_RADIUS_KM * self.lat0.to_radians().cos();
        (
            self.lon0 + (p.x / k).to_degrees(),
            self.lat0 + (p.y / EARTH_RADIUS_KM).to_degrees(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGeometry {
    pub region: String,
    pub lon: Option<f64>,
    pub lat: Option<f64>,
    pub projected: Point,
}

/// Region centroids in projected kilometres, plus the projection used (if the
/// input was geographic) so results can be reported back in degrees.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub regions: Vec<RegionGeometry>,
    pub projection: Option<Equirectangular>,
    by_id: HashMap<String, usize>,
}

impl Geometry {
    pub fn from_projected(points: Vec<(String, Point)>) -> Result<Self> {
        let regions = points
            .into_iter()
            .map(|(region, projected)| RegionGeometry {
                region,
                lon: None,
                lat: None,
                projected,
            })
            .collect();
        Self::build(regions, None)
    }

    /// Projects lon/lat centroids. The projection is centred on the mean
    /// longitude and uses the mean latitude as its standard parallel.
    pub fn from_lonlat(points: Vec<(String, f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidData("no centroids".into()));
        }
        for (r, lon, lat) in &points {
            if !(-180.0..=180.0).contains(lon) || !(-90.0..=90.0).contains(lat) {
                return Err(Error::InvalidData(format!(
                    "centroid of `{r}` out of range: lon {lon}, lat {lat}"
                )));
            }
        }
        let n = points.len() as f64;
        let proj = Equirectangular::new(
            points.iter().map(|p| p.1).sum::<f64>() / n,
            points.iter().map(|p| p.2).sum::<f64>() / n,
        );
        Self::from_lonlat_with(points, proj)
    }

    pub fn from_lonlat_with(points: Vec<(String, f64, f64)>, proj: Equirectangular) -> Result<Self> {
        let regions = points
            .into_iter()
            .map(|(region, lon, lat)| RegionGeometry {
                region,
                lon: Some(lon),
                lat: Some(lat),
                projected: proj.forward(lon, lat),
            })
            .collect();
        Self::build(regions, Some(proj))
    }

    fn build(regions: Vec<RegionGeometry>, projection: Option<Equirectangular>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(regions.len());
        for (i, r) in regions.iter().enumerate() {
            if !r.projected.x.is_finite() || !r.projected.y.is_finite() {
                return Err(Error::InvalidData(format!("non-finite centroid for `{}`", r.region)));
            }
            if by_id.insert(r.region.clone(), i).is_some() {
                return Err(Error::InvalidData(format!("centroid for `{}` listed twice", r.region)));
            }
        }
        Ok(Self {
            regions,
            projection,
            by_id,
        })
    }

    pub fn point(&self, region: &str) -> Option<Point> {
        self.by_id.get(region).map(|&i| self.regions[i].projected)
    }

    /// Projected points in the order of `regions`; errors on any region
    /// without a centroid.
    pub fn points_for(&self, regions: &[String]) -> Result<Vec<Point>> {
        regions
            .iter()
            .map(|r| self.point(r).ok_or_else(|| Error::UnknownRegion(r.clone())))
            .collect()
    }

    pub fn to_lonlat(&self, p: Point) -> Option<(f64, f64)> {
        self.projection.map(|proj| proj.inverse(p))
    }
}

/// Reads `region,lon,lat` or `region,x_km,y_km`.
pub fn load_centroids(path: &Path) -> Result<Geometry> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let geographic = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["region", "lon", "lat"] => true,
        ["region", "x_km", "y_km"] => false,
        _ => {
            return Err(Error::parse(
                path,
                "expected header `region,lon,lat` or `region,x_km,y_km`",
            ))
        }
    };
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<(String, f64, f64)>() {
        rows.push(rec.map_err(|e| Error::parse(path, e))?);
    }
    if geographic {
        Geometry::from_lonlat(rows)
    } else {
        Geometry::from_projected(rows.into_iter().map(|(r, x, y)| (r, Point::new(x, y))).collect())
    }
}
