//! Finite resolutions of benchmark compact metric spaces.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{exp, inv_pow, ln, powf, sqrt};
use crate::rng;
use crate::spatial::PointIndex;

pub const DEFAULT_POINT_CAP: u64 = 2_000_000;

/// Tagged description of how a space was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Interval,
    Cantor { ratio: f64 },
    CantorCrossInterval,
    SierpinskiCarpet,
    SierpinskiGasket,
    Snowflake { base: Box<Generator>, eps: f64 },
    Explicit { points: usize },
}

impl Generator {
    pub fn cantor() -> Self {
        Generator::Cantor { ratio: 1.0 / 3.0 }
    }

    /// Wrap in a snowflake unless `eps == 1`.
    pub fn snowflaked(self, eps: f64) -> Self {
        if eps == 1.0 {
            self
        } else {
            Generator::Snowflake { base: Box::new(self), eps }
        }
    }

    /// Point count at the given depth, if it fits in a `u128`.
    pub fn point_count(&self, depth: usize) -> Option<u128> {
        let d = u32::try_from(depth).ok()?;
        match self {
            Generator::Interval | Generator::Cantor { .. } => 2u128.checked_pow(d),
            Generator::CantorCrossInterval => 6u128.checked_pow(d),
            Generator::SierpinskiCarpet => 8u128.checked_pow(d),
            Generator::SierpinskiGasket => 3u128.checked_pow(d),
            Generator::Snowflake { base, .. } => base.point_count(depth),
            Generator::Explicit { points } => Some(*points as u128),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Interval => f.write_str("interval"),
            Generator::Cantor { ratio } => write!(f, "cantor({})", ratio),
            Generator::CantorCrossInterval => f.write_str("cantor_cross_interval"),
            Generator::SierpinskiCarpet => f.write_str("sierpinski_carpet"),
            Generator::SierpinskiGasket => f.write_str("sierpinski_gasket"),
            Generator::Snowflake { base, eps } => write!(f, "snowflake({},{})", base, eps),
            Generator::Explicit { points } => write!(f, "explicit({})", points),
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = |msg: String| Error::Parameter { op: "space_models::parse_generator", msg };
        if let Some(inner) = s.strip_prefix("snowflake(").and_then(|r| r.strip_suffix(')')) {
            let cut = inner.rfind(',').ok_or_else(|| err(format!("expected snowflake(base,eps), got {s:?}")))?;
            let base: Generator = inner[..cut].parse()?;
            let eps: f64 = parse_fraction(&inner[cut + 1..]).ok_or_else(|| err(format!("bad exponent in {s:?}")))?;
            return Ok(Generator::Snowflake { base: Box::new(base), eps });
        }
        if let Some(inner) = s.strip_prefix("cantor(").and_then(|r| r.strip_suffix(')')) {
            let ratio = parse_fraction(inner).ok_or_else(|| err(format!("bad ratio in {s:?}")))?;
            return Ok(Generator::Cantor { ratio });
        }
        match s {
            "interval" => Ok(Generator::Interval),
            "cantor" => Ok(Generator::cantor()),
            "cantor_cross_interval" => Ok(Generator::CantorCrossInterval),
            "sierpinski_carpet" | "carpet" => Ok(Generator::SierpinskiCarpet),
            "sierpinski_gasket" | "gasket" => Ok(Generator::SierpinskiGasket),
            _ => Err(err(format!("unknown generator {s:?}"))),
        }
    }
}

// Accepts "0.25" or "1/3".
fn parse_fraction(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        Some(a / b)
    } else {
        s.parse().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Euclidean,
    Max,
}

/// A finite point cloud with an exact distance oracle.
///
/// Distances are `base(i, j)^exponent` where `base` is either a norm on the
/// stored coordinates or an explicit matrix.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    n: usize,
    dim: usize,
    coords: Vec<f64>,
    norm: Norm,
    matrix: Option<Vec<f64>>,
    exponent: f64,
    diameter: f64,
    resolution: f64,
    depth: usize,
    generator: Generator,
}

struct Ifs {
    dim: usize,
    ratio: f64,
    offsets: Vec<[f64; 2]>,
    base: [f64; 2],
}

impl Ifs {
    fn points(&self, depth: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = self.base[..self.dim].to_vec();
        for _ in 0..depth {
            let m = pts.len() / self.dim;
            let mut next = Vec::with_capacity(pts.len() * self.offsets.len());
            for off in &self.offsets {
                for q in 0..m {
                    for c in 0..self.dim {
                        next.push(self.ratio * pts[q * self.dim + c] + off[c]);
                    }
                }
            }
            pts = next;
        }
        pts
    }
}

fn interval_ifs() -> Ifs {
    Ifs { dim: 1, ratio: 0.5, offsets: vec![[0.0, 0.0], [0.5, 0.0]], base: [0.5, 0.0] }
}

fn cantor_ifs(r: f64) -> Ifs {
    Ifs { dim: 1, ratio: r, offsets: vec![[0.0, 0.0], [1.0 - r, 0.0]], base: [0.5, 0.0] }
}

fn carpet_ifs() -> Ifs {
    let mut offsets = Vec::new();
    for b in 0..3 {
        for a in 0..3 {
            if a != 1 || b != 1 {
                offsets.push([a as f64 / 3.0, b as f64 / 3.0]);
            }
        }
    }
    Ifs { dim: 2, ratio: 1.0 / 3.0, offsets, base: [0.5, 0.5] }
}

fn gasket_ifs() -> Ifs {
    let h = sqrt(3.0) / 2.0;
    Ifs {
        dim: 2,
        ratio: 0.5,
        offsets: vec![[0.0, 0.0], [0.5, 0.0], [0.25, h / 2.0]],
        base: [0.5, h / 3.0],
    }
}

/// Build the depth-`depth` discretization of a generator.
pub fn make_space(generator: &Generator, depth: usize) -> Result<MetricSpace> {
    make_space_capped(generator, depth, DEFAULT_POINT_CAP)
}

pub fn make_space_capped(generator: &Generator, depth: usize, cap: u64) -> Result<MetricSpace> {
    const OP: &str = "space_models::make_space";
    let count = generator.point_count(depth).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::SizeCap { op: OP, count, cap });
    }
    let coords = |ifs: &Ifs| ifs.points(depth);
    let space = |dim, coords: Vec<f64>, norm, resolution| MetricSpace {
        n: coords.len() / dim,
        dim,
        coords,
        norm,
        matrix: None,
        exponent: 1.0,
        diameter: 1.0,
        resolution,
        depth,
        generator: generator.clone(),
    };
    match generator {
        Generator::Interval => Ok(space(1, coords(&interval_ifs()), Norm::Euclidean, inv_pow(2.0, depth))),
        Generator::Cantor { ratio } => {
            if !(*ratio > 0.0 && *ratio < 0.5) {
                return Err(Error::Parameter { op: OP, msg: format!("cantor ratio {ratio} outside (0, 1/2)") });
            }
            let res = if depth == 0 { 1.0 } else { (1.0 - ratio) * powf(*ratio, (depth - 1) as f64) };
            Ok(space(1, coords(&cantor_ifs(*ratio)), Norm::Euclidean, res))
        }
        Generator::CantorCrossInterval => {
            let c = cantor_ifs(1.0 / 3.0).points(depth);
            let m = 3usize.pow(depth as u32);
            let mut pts = Vec::with_capacity(2 * c.len() * m);
            for &x in &c {
                for j in 0..m {
                    pts.push(x);
                    pts.push((2 * j + 1) as f64 / (2 * m) as f64);
                }
            }
            let res = if depth == 0 { 1.0 } else { inv_pow(3.0, depth) };
            Ok(space(2, pts, Norm::Max, res))
        }
        Generator::SierpinskiCarpet => {
            let s = 1.0 / sqrt(2.0);
            let pts = coords(&carpet_ifs()).into_iter().map(|x| x * s).collect();
            let res = if depth == 0 { 1.0 } else { s * inv_pow(3.0, depth) };
            Ok(space(2, pts, Norm::Euclidean, res))
        }
        Generator::SierpinskiGasket => {
            let res = if depth == 0 { 1.0 } else { inv_pow(2.0, depth) };
            Ok(space(2, coords(&gasket_ifs()), Norm::Euclidean, res))
        }
        Generator::Snowflake { base, eps } => {
            if !(*eps > 0.0 && *eps <= 1.0) {
                return Err(Error::Parameter { op: OP, msg: format!("snowflake exponent {eps} outside (0, 1]") });
            }
            let mut s = make_space_capped(base, depth, cap)?;
            s.exponent *= eps;
            s.resolution = powf(s.resolution, *eps);
            s.generator = generator.clone();
            Ok(s)
        }
        Generator::Explicit { .. } => Err(Error::Argument {
            op: OP,
            msg: "explicit spaces are built with MetricSpace::from_points or from_distance_matrix".to_string(),
        }),
    }
}

impl MetricSpace {
    /// Explicit point list; distances are rescaled so the diameter is 1.
    pub fn from_points(dim: usize, coords: Vec<f64>, norm: Norm) -> Result<Self> {
        const OP: &str = "space_models::from_points";
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::Argument { op: OP, msg: format!("{} coordinates do not form {dim}-tuples", coords.len()) });
        }
        let n = coords.len() / dim;
        let mut s = MetricSpace {
            n,
            dim,
            coords,
            norm,
            matrix: None,
            exponent: 1.0,
            diameter: 1.0,
            resolution: 1.0,
            depth: 0,
            generator: Generator::Explicit { points: n },
        };
        let (diam, min) = s.extreme_distances();
        if n > 1 && min <= 0.0 {
            return Err(Error::Argument { op: OP, msg: "duplicate points".to_string() });
        }
        if n > 1 {
            for c in s.coords.iter_mut() {
                *c /= diam;
            }
            s.resolution = min / diam;
        }
        Ok(s)
    }

    /// Explicit symmetric distance matrix in row-major order.
    pub fn from_distance_matrix(n: usize, matrix: Vec<f64>) -> Result<Self> {
        const OP: &str = "space_models::from_distance_matrix";
        if n == 0 || matrix.len() != n * n {
            return Err(Error::Argument { op: OP, msg: format!("matrix of length {} is not {n}x{n}", matrix.len()) });
        }
        let mut diam: f64 = 0.0;
        let mut min = f64::INFINITY;
        for i in 0..n {
            if matrix[i * n + i] != 0.0 {
                return Err(Error::Argument { op: OP, msg: format!("nonzero diagonal at {i}") });
            }
            for j in 0..i {
                let d = matrix[i * n + j];
                if d != matrix[j * n + i] || !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Argument { op: OP, msg: format!("entry ({i},{j}) is not a positive symmetric distance") });
                }
                diam = diam.max(d);
                min = min.min(d);
            }
        }
        let scale = if n > 1 { diam } else { 1.0 };
        Ok(MetricSpace {
            n,
            dim: 0,
            coords: Vec::new(),
            norm: Norm::Euclidean,
            matrix: Some(matrix.into_iter().map(|d| d / scale).collect()),
            exponent: 1.0,
            diameter: 1.0,
            resolution: if n > 1 { min / scale } else { 1.0 },
            depth: 0,
            generator: Generator::Explicit { points: n },
        })
    }

    fn extreme_distances(&self) -> (f64, f64) {
        let mut max: f64 = 0.0;
        let mut min = f64::INFINITY;
        for i in 0..self.n {
            for j in 0..i {
                let d = self.base_dist(i, j);
                max = max.max(d);
                min = min.min(d);
            }
        }
        (max, min)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate dimension, 0 for matrix-backed spaces.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub(crate) fn has_coordinates(&self) -> bool {
        self.matrix.is_none()
    }

    /// Distance before the snowflake exponent is applied.
    #[inline]
    pub fn base_dist(&self, i: usize, j: usize) -> f64 {
        if let Some(m) = &self.matrix {
            return m[i * self.n + j];
        }
        let (a, b) = (self.point(i), self.point(j));
        match (self.dim, self.norm) {
            (1, _) => (a[0] - b[0]).abs(),
            (_, Norm::Max) => a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs())),
            (_, Norm::Euclidean) => sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()),
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let d = self.base_dist(i, j);
        if self.exponent == 1.0 {
            d
        } else {
            powf(d, self.exponent)
        }
    }

    /// Convert a radius in this metric to the underlying base metric.
    pub(crate) fn base_radius(&self, r: f64) -> f64 {
        if self.exponent == 1.0 {
            r
        } else {
            powf(r, 1.0 / self.exponent)
        }
    }

    /// Indices of points with `dist(center, .) < r`, ascending.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        (0..self.n).filter(|&j| self.dist(center, j) < r).collect()
    }
}

fn sample_radius<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return hi;
    }
    let t: f64 = rng.random();
    exp(ln(lo) + t * (ln(hi) - ln(lo)))
}

/// Empirical doubling constant: the largest greedy half-radius cover count
/// over sampled balls.
pub fn estimate_doubling(space: &MetricSpace, sample_count: usize, seed: u64) -> f64 {
    if space.len() <= 1 {
        return 1.0;
    }
    let mut rng = rng::stream(seed, "space_models::estimate_doubling");
    let mut worst = 1usize;
    for _ in 0..sample_count {
        let x = rng.random_range(0..space.len());
        let r = sample_radius(&mut rng, space.resolution(), space.diameter());
        let ball = space.ball(x, r);
        let index = PointIndex::new(space, &ball, r / 2.0);
        let mut covered = vec![false; ball.len()];
        let mut count = 0;
        for (slot, &p) in ball.iter().enumerate() {
            if covered[slot] {
                continue;
            }
            count += 1;
            index.for_each_within(p, r / 2.0, |s, _| covered[s] = true);
        }
        worst = worst.max(count);
    }
    worst as f64
}

/// Empirical uniform-perfectness constant. Returns `f64::INFINITY` when a
/// sampled ball above the resolution contains only its center.
pub fn estimate_uniform_perfectness(space: &MetricSpace, sample_count: usize, seed: u64) -> f64 {
    if space.len() <= 1 {
        return 1.0;
    }
    let mut rng = rng::stream(seed, "space_models::estimate_uniform_perfectness");
    let mut worst: f64 = 1.0;
    for _ in 0..sample_count {
        let x = rng.random_range(0..space.len());
        let r = sample_radius(&mut rng, space.resolution(), space.diameter());
        let slack = r * (1.0 + 1e-9);
        let mut far: f64 = 0.0;
        for y in 0..space.len() {
            let d = space.dist(x, y);
            if d <= slack && d > far {
                far = d;
            }
        }
        if far == 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(r / far.min(r));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn interval_depth_three_is_dyadic_midpoints() {
        let s = make_space(&Generator::Interval, 3).unwrap();
        assert_eq!(s.len(), 8);
        for j in 0..8 {
            assert!(close(s.point(j)[0], (2 * j + 1) as f64 / 16.0));
        }
        assert!(close(s.dist(0, 7), 14.0 / 16.0));
    }

    #[test]
    fn cantor_depth_two_addresses() {
        let s = make_space(&Generator::cantor(), 2).unwrap();
        // midpoints of [0,1/9], [2/9,1/3], [2/3,7/9], [8/9,1]
        let want = [1.0 / 18.0, 5.0 / 18.0, 13.0 / 18.0, 17.0 / 18.0];
        for (j, w) in want.iter().enumerate() {
            assert!(close(s.point(j)[0], *w));
        }
        assert!(close(s.dist(1, 2), 8.0 / 18.0));
        assert!(close(s.resolution(), 2.0 / 9.0));
    }

    #[test]
    fn snowflake_of_interval() {
        let g = Generator::Interval.snowflaked(0.5);
        let s = make_space(&g, 2).unwrap();
        // points 1/8, 3/8, 5/8, 7/8
        assert!(close(s.dist(0, 2), sqrt(0.5)));
    }

    #[test]
    fn snowflake_exponent_checked() {
        let g = Generator::Snowflake { base: Box::new(Generator::Interval), eps: 1.5 };
        assert!(matches!(make_space(&g, 2), Err(Error::Parameter { .. })));
    }

    #[test]
    fn cap_is_enforced() {
        let e = make_space_capped(&Generator::SierpinskiCarpet, 8, 1000).unwrap_err();
        assert!(matches!(e, Error::SizeCap { count: 16_777_216, .. }));
    }

    #[test]
    fn point_counts() {
        for d in 0..5 {
            assert_eq!(make_space(&Generator::Interval, d).unwrap().len(), 1 << d);
            assert_eq!(make_space(&Generator::cantor(), d).unwrap().len(), 1 << d);
            assert_eq!(make_space(&Generator::CantorCrossInterval, d).unwrap().len(), 6usize.pow(d as u32));
            assert_eq!(make_space(&Generator::SierpinskiCarpet, d).unwrap().len(), 8usize.pow(d as u32));
            assert_eq!(make_space(&Generator::SierpinskiGasket, d).unwrap().len(), 3usize.pow(d as u32));
        }
    }

    #[test]
    fn generator_parsing_round_trips() {
        for s in ["interval", "cantor(0.25)", "cantor_cross_interval", "sierpinski_carpet", "snowflake(interval,0.5)"] {
            let g: Generator = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert_eq!("cantor(1/3)".parse::<Generator>().unwrap(), Generator::cantor());
        assert!("torus".parse::<Generator>().is_err());
    }

    #[test]
    fn doubling_estimates() {
        let one = make_space(&Generator::Interval, 0).unwrap();
        assert_eq!(estimate_doubling(&one, 10, 1), 1.0);
        let i6 = make_space(&Generator::Interval, 6).unwrap();
        let k = estimate_doubling(&i6, 400, 7);
        assert!((2.0..=4.0).contains(&k), "{k}");
        let c6 = make_space(&Generator::cantor(), 6).unwrap();
        let k = estimate_doubling(&c6, 400, 7);
        assert!((2.0..=4.0).contains(&k), "{k}");
    }

    #[test]
    fn perfectness_estimates() {
        let i6 = make_space(&Generator::Interval, 6).unwrap();
        assert!(estimate_uniform_perfectness(&i6, 400, 3) <= 2.5);
        let c6 = make_space(&Generator::cantor(), 6).unwrap();
        assert!(estimate_uniform_perfectness(&c6, 400, 3) <= 4.0);
        let two = MetricSpace::from_points(1, vec![0.0, 1.0], Norm::Euclidean).unwrap();
        assert_eq!(estimate_uniform_perfectness(&two, 20, 3), 1.0);
    }

    #[test]
    fn explicit_matrix_is_normalized() {
        let s = MetricSpace::from_distance_matrix(3, vec![0.0, 2.0, 4.0, 2.0, 0.0, 3.0, 4.0, 3.0, 0.0]).unwrap();
        assert!(close(s.dist(0, 2), 1.0));
        assert!(close(s.dist(0, 1), 0.5));
        assert!(close(s.resolution(), 0.5));
        assert!(MetricSpace::from_distance_matrix(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }
}
