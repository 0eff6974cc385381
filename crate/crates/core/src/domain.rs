//! Bounded boxes, uniform grids, grid functions and truncated dyadic lattices.
//!
//! Everything is discretised on a uniform midpoint grid over an axis-parallel
//! box in dimension 1 or 2. Points carry two coordinates; in dimension 1 the
//! second coordinate is ignored and kept at zero.
//!
//! Dyadic cubes are absolute: a cube of level `j` is `2^{-j} (k + [0,1)^n)`
//! for an integer index `k`, independent of the box. Lattices enumerate the
//! dyadic cubes of a level range that sit inside (or meet) a box.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_i64, from_usize, lit, pow2, Scalar};

pub type Point<T> = [T; 2];

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::domain(format!("dimension must be 1 or 2, got {dim}")))
    }
}

/// Euclidean distance using the first `dim` coordinates.
#[inline]
pub fn distance<T: Scalar>(dim: usize, x: &Point<T>, y: &Point<T>) -> T {
    let dx = x[0] - y[0];
    if dim == 1 {
        dx.abs()
    } else {
        let dy = x[1] - y[1];
        (dx * dx + dy * dy).sqrt()
    }
}

#[inline]
pub fn norm<T: Scalar>(dim: usize, x: &Point<T>) -> T {
    distance(dim, x, &[T::zero(); 2])
}

/// Axis-parallel rectangle `[lo, hi]` (a cube when all sides agree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub lo: Point<T>,
    pub hi: Point<T>,
    pub dim: usize,
}

impl<T: Scalar> Rect<T> {
    pub fn new(dim: usize, lo: Point<T>, hi: Point<T>) -> Self {
        let mut lo = lo;
        let mut hi = hi;
        if dim == 1 {
            lo[1] = T::zero();
            hi[1] = T::zero();
        }
        Rect { lo, hi, dim }
    }

    /// Cube with the given lower corner and side length.
    pub fn cube(dim: usize, lo: Point<T>, side: T) -> Self {
        Rect::new(dim, lo, [lo[0] + side, lo[1] + side])
    }

    pub fn centered_cube(dim: usize, center: Point<T>, side: T) -> Self {
        let h = side / lit(2.0);
        Rect::new(dim, [center[0] - h, center[1] - h], [center[0] + h, center[1] + h])
    }

    pub fn side(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    /// Side length of a cube (the first axis for rectangles).
    pub fn sidelength(&self) -> T {
        self.side(0)
    }

    pub fn center(&self) -> Point<T> {
        let two = lit::<T>(2.0);
        [(self.lo[0] + self.hi[0]) / two, (self.lo[1] + self.hi[1]) / two]
    }

    pub fn measure(&self) -> T {
        (0..self.dim).fold(T::one(), |acc, a| acc * self.side(a).max(T::zero()))
    }

    /// Concentric dilation by `gamma`.
    pub fn dilate(&self, gamma: T) -> Self {
        let c = self.center();
        let two = lit::<T>(2.0);
        let mut lo = [T::zero(); 2];
        let mut hi = [T::zero(); 2];
        for a in 0..self.dim {
            let h = self.side(a) * gamma / two;
            lo[a] = c[a] - h;
            hi[a] = c[a] + h;
        }
        Rect::new(self.dim, lo, hi)
    }

    /// Intersection with positive measure, if any.
    pub fn intersect(&self, other: &Rect<T>) -> Option<Rect<T>> {
        let mut lo = [T::zero(); 2];
        let mut hi = [T::zero(); 2];
        for a in 0..self.dim {
            lo[a] = self.lo[a].max(other.lo[a]);
            hi[a] = self.hi[a].min(other.hi[a]);
            if hi[a] <= lo[a] {
                return None;
            }
        }
        Some(Rect::new(self.dim, lo, hi))
    }

    /// Closed containment of a point.
    pub fn contains_point(&self, x: &Point<T>) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    pub fn contains_rect(&self, other: &Rect<T>) -> bool {
        (0..self.dim).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a])
    }
}

/// Axis-parallel cube `center + half_width [-1, 1]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<T> {
    center: Point<T>,
    half_width: T,
    dim: usize,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(dim: usize, center: &[T], half_width: T) -> Result<Self> {
        check_dim(dim)?;
        if center.len() < dim {
            return Err(Error::domain("box center has fewer coordinates than the dimension"));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::domain(format!("box half-width must be positive, got {half_width}")));
        }
        let mut c = [T::zero(); 2];
        c[..dim].copy_from_slice(&center[..dim]);
        Ok(BoundingBox { center: c, half_width, dim })
    }

    /// The cube `[lo, hi]^n`.
    pub fn from_bounds(dim: usize, lo: T, hi: T) -> Result<Self> {
        let two = lit::<T>(2.0);
        let c = (lo + hi) / two;
        BoundingBox::new(dim, &[c, c], (hi - lo) / two)
    }

    pub fn unit(dim: usize) -> Result<Self> {
        BoundingBox::from_bounds(dim, T::zero(), T::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> Point<T> {
        self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn side(&self) -> T {
        self.half_width * lit(2.0)
    }

    pub fn rect(&self) -> Rect<T> {
        let h = self.half_width;
        let c = self.center;
        Rect::new(self.dim, [c[0] - h, c[1] - h], [c[0] + h, c[1] + h])
    }

    pub fn measure(&self) -> T {
        self.side().powi(self.dim as i32)
    }

    pub fn diameter(&self) -> T {
        self.side() * from_usize::<T>(self.dim).sqrt()
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        self.rect().contains_point(x)
    }
}

/// Uniform grid of `cells_per_side^n` cells over a box.
///
/// Cell `(i0, i1)` has linear index `i0 * cells_per_side + i1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    bbox: BoundingBox<T>,
    cells_per_side: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(bbox: BoundingBox<T>, cells_per_side: usize) -> Result<Self> {
        if cells_per_side == 0 || !cells_per_side.is_power_of_two() {
            return Err(Error::domain(format!(
                "cells_per_side must be a power of two, got {cells_per_side}"
            )));
        }
        Ok(Grid { bbox, cells_per_side })
    }

    pub fn bbox(&self) -> &BoundingBox<T> {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn len(&self) -> usize {
        self.cells_per_side.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_side(&self) -> T {
        self.bbox.side() / from_usize(self.cells_per_side)
    }

    pub fn cell_measure(&self) -> T {
        self.cell_side().powi(self.dim() as i32)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [idx, 0]
        } else {
            [idx / self.cells_per_side, idx % self.cells_per_side]
        }
    }

    pub fn linear_index(&self, mi: [usize; 2]) -> usize {
        if self.dim() == 1 {
            mi[0]
        } else {
            mi[0] * self.cells_per_side + mi[1]
        }
    }

    pub fn midpoint(&self, idx: usize) -> Point<T> {
        let mi = self.multi_index(idx);
        let lo = self.bbox.rect().lo;
        let h = self.cell_side();
        let half = lit::<T>(0.5);
        let mut p = [T::zero(); 2];
        for a in 0..self.dim() {
            p[a] = lo[a] + (from_usize::<T>(mi[a]) + half) * h;
        }
        p
    }

    pub fn midpoints(&self) -> Vec<Point<T>> {
        (0..self.len()).map(|i| self.midpoint(i)).collect()
    }

    pub fn cell_rect(&self, idx: usize) -> Rect<T> {
        let mi = self.multi_index(idx);
        let lo = self.bbox.rect().lo;
        let h = self.cell_side();
        let mut c = [T::zero(); 2];
        for a in 0..self.dim() {
            c[a] = lo[a] + from_usize::<T>(mi[a]) * h;
        }
        Rect::cube(self.dim(), c, h)
    }

    /// Cell containing `x` (the upper boundary belongs to the last cell).
    pub fn cell_of(&self, x: &Point<T>) -> Option<usize> {
        if !self.bbox.contains(x) {
            return None;
        }
        let lo = self.bbox.rect().lo;
        let h = self.cell_side();
        let mut mi = [0usize; 2];
        for a in 0..self.dim() {
            let k = ((x[a] - lo[a]) / h).floor().to_usize().unwrap_or(0);
            mi[a] = k.min(self.cells_per_side - 1);
        }
        Some(self.linear_index(mi))
    }

    fn axis_overlaps(&self, axis: usize, a: T, b: T) -> Vec<(usize, T)> {
        let lo = self.bbox.rect().lo[axis];
        let h = self.cell_side();
        let n = self.cells_per_side;
        let start = ((a - lo) / h).floor().max(T::zero()).to_usize().unwrap_or(0).min(n);
        let end = ((b - lo) / h).ceil().max(T::zero()).to_usize().unwrap_or(0).min(n);
        let mut out = Vec::with_capacity(end.saturating_sub(start));
        for i in start..end {
            let c_lo = lo + from_usize::<T>(i) * h;
            let c_hi = c_lo + h;
            let w = b.min(c_hi) - a.max(c_lo);
            if w > T::zero() {
                out.push((i, w));
            }
        }
        out
    }

    /// Cells meeting `region` with positive measure, paired with the overlap measure.
    pub fn overlaps(&self, region: &Rect<T>) -> Vec<(usize, T)> {
        let xs = self.axis_overlaps(0, region.lo[0], region.hi[0]);
        if self.dim() == 1 {
            return xs;
        }
        let ys = self.axis_overlaps(1, region.lo[1], region.hi[1]);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &(i, wx) in &xs {
            for &(j, wy) in &ys {
                out.push((self.linear_index([i, j]), wx * wy));
            }
        }
        out
    }

    /// Cells whose midpoint lies in the closed region.
    pub fn cells_with_midpoint_in(&self, region: &Rect<T>) -> Vec<usize> {
        let h = self.cell_side();
        let lo = self.bbox.rect().lo;
        let n = self.cells_per_side;
        let half = lit::<T>(0.5);
        let range = |axis: usize| {
            let s = ((region.lo[axis] - lo[axis]) / h - half).ceil().max(T::zero());
            let e = ((region.hi[axis] - lo[axis]) / h - half).floor();
            let s = s.to_usize().unwrap_or(0);
            if e < T::zero() {
                return s..s;
            }
            let e = e.to_usize().unwrap_or(0).min(n - 1);
            s..(e + 1).max(s)
        };
        let r0 = range(0);
        if self.dim() == 1 {
            return r0.collect();
        }
        let r1 = range(1);
        let mut out = Vec::new();
        for i in r0 {
            for j in r1.clone() {
                out.push(self.linear_index([i, j]));
            }
        }
        out
    }
}

/// Real function sampled at the cell midpoints of a grid; treated as constant on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "grid function needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(&Point<T>) -> T>(grid: Grid<T>, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.midpoint(i))).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Cell-averaged indicator of `region`: each cell carries the fraction of it covered.
    pub fn indicator(grid: Grid<T>, region: &Rect<T>) -> Self {
        let mut values = vec![T::zero(); grid.len()];
        let m = grid.cell_measure();
        for (i, w) in grid.overlaps(region) {
            values[i] = w / m;
        }
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn value(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &GridFunction<T>, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::domain("grid functions live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn add_constant(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    pub fn add(&self, other: &GridFunction<T>) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &GridFunction<T>) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn restrict(&self, region: &Rect<T>) -> Self {
        let mut values = vec![T::zero(); self.len()];
        let m = self.grid.cell_measure();
        for (i, w) in self.grid.overlaps(region) {
            values[i] = self.values[i] * (w / m);
        }
        GridFunction { grid: self.grid, values }
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Midpoint quadrature over the box, or over `region ∩ box`.
    pub fn integrate(&self, region: Option<&Rect<T>>) -> T {
        match region {
            None => {
                let m = self.grid.cell_measure();
                self.values.iter().fold(T::zero(), |acc, &v| acc + v * m)
            }
            Some(r) => self
                .grid
                .overlaps(r)
                .into_iter()
                .fold(T::zero(), |acc, (i, w)| acc + self.values[i] * w),
        }
    }

    /// Average over `region ∩ box`.
    pub fn average(&self, region: &Rect<T>) -> Result<T> {
        let clipped = region
            .intersect(&self.grid.bbox().rect())
            .ok_or_else(|| Error::domain("averaging region does not meet the box"))?;
        Ok(self.integrate(Some(&clipped)) / clipped.measure())
    }

    /// Writes the CSV exchange format: a header record
    /// `n,cells_per_side,half_width,center_0,center_1`, its values, then
    /// one value per line in linear-index order.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
        let b = self.grid.bbox();
        w.write_record(["n", "cells_per_side", "half_width", "center_0", "center_1"])?;
        w.write_record([
            b.dim().to_string(),
            self.grid.cells_per_side().to_string(),
            format!("{:.17e}", b.half_width().to_f64_lossy()),
            format!("{:.17e}", b.center()[0].to_f64_lossy()),
            format!("{:.17e}", b.center()[1].to_f64_lossy()),
        ])?;
        for v in &self.values {
            w.write_record([format!("{:.17e}", v.to_f64_lossy())])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_path(path)?;
        let mut records = r.records();
        let head = records
            .next()
            .ok_or_else(|| Error::Parse("grid function CSV has no metadata record".into()))??;
        let field = |k: usize| -> Result<f64> {
            head.get(k)
                .ok_or_else(|| Error::Parse(format!("metadata record missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let dim = field(0)? as usize;
        let cps = field(1)? as usize;
        let bbox = BoundingBox::new(dim, &[lit(field(3)?), lit(field(4)?)], lit(field(2)?))?;
        let grid = Grid::new(bbox, cps)?;
        let mut values = Vec::with_capacity(grid.len());
        for rec in records {
            let rec = rec?;
            let v: f64 = rec
                .get(0)
                .ok_or_else(|| Error::Parse("empty value record".into()))?
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            values.push(lit(v));
        }
        GridFunction::new(grid, values)
    }

    /// Binary exchange format, little endian: magic `VLXG`, `u32` n,
    /// `u32` cells_per_side, `f64` half_width, `f64` center_0, `f64` center_1,
    /// then the values as `f64` in linear-index order.
    pub fn write_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let b = self.grid.bbox();
        w.write_all(b"VLXG")?;
        w.write_u32::<LittleEndian>(b.dim() as u32)?;
        w.write_u32::<LittleEndian>(self.grid.cells_per_side() as u32)?;
        w.write_f64::<LittleEndian>(b.half_width().to_f64_lossy())?;
        w.write_f64::<LittleEndian>(b.center()[0].to_f64_lossy())?;
        w.write_f64::<LittleEndian>(b.center()[1].to_f64_lossy())?;
        for v in &self.values {
            w.write_f64::<LittleEndian>(v.to_f64_lossy())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"VLXG" {
            return Err(Error::Parse("not a grid function file (bad magic)".into()));
        }
        let dim = r.read_u32::<LittleEndian>()? as usize;
        let cps = r.read_u32::<LittleEndian>()? as usize;
        let hw = r.read_f64::<LittleEndian>()?;
        let c0 = r.read_f64::<LittleEndian>()?;
        let c1 = r.read_f64::<LittleEndian>()?;
        let grid = Grid::new(BoundingBox::new(dim, &[lit(c0), lit(c1)], lit(hw))?, cps)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(lit(r.read_f64::<LittleEndian>()?));
        }
        GridFunction::new(grid, values)
    }
}

/// Dyadic cube `2^{-level} (index + [0,1)^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: [i64; 2],
    pub dim: usize,
}

impl DyadicCube {
    pub fn new(dim: usize, level: i32, index: [i64; 2]) -> Self {
        let mut index = index;
        if dim == 1 {
            index[1] = 0;
        }
        DyadicCube { level, index, dim }
    }

    /// The level-`level` cube containing `x` (half-open convention).
    pub fn containing<T: Scalar>(dim: usize, level: i32, x: &Point<T>) -> Self {
        let s = pow2::<T>(level);
        let k0 = (x[0] * s).floor().to_i64().unwrap_or(0);
        let k1 = if dim == 2 { (x[1] * s).floor().to_i64().unwrap_or(0) } else { 0 };
        DyadicCube::new(dim, level, [k0, k1])
    }

    pub fn side<T: Scalar>(&self) -> T {
        pow2(-self.level)
    }

    pub fn measure<T: Scalar>(&self) -> T {
        self.side::<T>().powi(self.dim as i32)
    }

    pub fn lower<T: Scalar>(&self) -> Point<T> {
        let s = self.side::<T>();
        [from_i64::<T>(self.index[0]) * s, from_i64::<T>(self.index[1]) * s]
    }

    pub fn rect<T: Scalar>(&self) -> Rect<T> {
        Rect::cube(self.dim, self.lower(), self.side())
    }

    pub fn center<T: Scalar>(&self) -> Point<T> {
        self.rect::<T>().center()
    }

    /// Concentric dilation `γQ`.
    pub fn dilate<T: Scalar>(&self, gamma: T) -> Rect<T> {
        self.rect::<T>().dilate(gamma)
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube::new(
            self.dim,
            self.level - 1,
            [self.index[0].div_euclid(2), self.index[1].div_euclid(2)],
        )
    }

    pub fn ancestor(&self, level: i32) -> DyadicCube {
        let mut q = *self;
        while q.level > level {
            q = q.parent();
        }
        q
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let (a, b) = (2 * self.index[0], 2 * self.index[1]);
        if self.dim == 1 {
            vec![
                DyadicCube::new(1, self.level + 1, [a, 0]),
                DyadicCube::new(1, self.level + 1, [a + 1, 0]),
            ]
        } else {
            vec![
                DyadicCube::new(2, self.level + 1, [a, b]),
                DyadicCube::new(2, self.level + 1, [a, b + 1]),
                DyadicCube::new(2, self.level + 1, [a + 1, b]),
                DyadicCube::new(2, self.level + 1, [a + 1, b + 1]),
            ]
        }
    }

    /// `self ⊆ other` as dyadic cubes.
    pub fn is_within(&self, other: &DyadicCube) -> bool {
        self.level >= other.level && self.ancestor(other.level) == *other
    }

    pub fn id(&self) -> String {
        if self.dim == 1 {
            format!("d{}:{}", self.level, self.index[0])
        } else {
            format!("d{}:{},{}", self.level, self.index[0], self.index[1])
        }
    }
}

/// Which dyadic cubes of a level a lattice keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Coverage {
    /// Cubes contained in the box.
    #[default]
    Contained,
    /// Cubes meeting the box with positive measure (clipped when integrated).
    Intersecting,
}

/// A cube visited by lattice sweeps: dyadic, or a randomly shifted cube of dyadic side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatticeCube<T> {
    Dyadic(DyadicCube),
    Shifted { level: i32, rect: Rect<T> },
}

impl<T: Scalar> LatticeCube<T> {
    pub fn rect(&self) -> Rect<T> {
        match self {
            LatticeCube::Dyadic(q) => q.rect(),
            LatticeCube::Shifted { rect, .. } => *rect,
        }
    }

    pub fn level(&self) -> i32 {
        match self {
            LatticeCube::Dyadic(q) => q.level,
            LatticeCube::Shifted { level, .. } => *level,
        }
    }

    pub fn side(&self) -> T {
        pow2(-self.level())
    }

    pub fn dyadic(&self) -> Option<&DyadicCube> {
        match self {
            LatticeCube::Dyadic(q) => Some(q),
            LatticeCube::Shifted { .. } => None,
        }
    }

    pub fn id(&self) -> String {
        match self {
            LatticeCube::Dyadic(q) => q.id(),
            LatticeCube::Shifted { level, rect } => format!(
                "s{}:{:.6},{:.6}",
                level,
                rect.lo[0].to_f64_lossy(),
                rect.lo[1].to_f64_lossy()
            ),
        }
    }
}

/// Truncated dyadic lattice over a box, levels `j_min..=j_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeLattice<T> {
    pub bbox: BoundingBox<T>,
    pub j_min: i32,
    pub j_max: i32,
    pub coverage: Coverage,
    /// Randomly shifted cubes added per level by [`CubeLattice::all_cubes`].
    pub shifted_per_level: usize,
    pub shift_seed: u64,
}

impl<T: Scalar> CubeLattice<T> {
    pub fn new(bbox: BoundingBox<T>, j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::domain(format!("lattice needs j_min <= j_max, got {j_min} > {j_max}")));
        }
        Ok(CubeLattice {
            bbox,
            j_min,
            j_max,
            coverage: Coverage::Contained,
            shifted_per_level: 0,
            shift_seed: 0,
        })
    }

    pub fn with_coverage(mut self, coverage: Coverage) -> Self {
        self.coverage = coverage;
        self
    }

    pub fn with_shifted(mut self, per_level: usize, seed: u64) -> Self {
        self.shifted_per_level = per_level;
        self.shift_seed = seed;
        self
    }

    pub fn with_levels(mut self, j_min: i32, j_max: i32) -> Self {
        self.j_min = j_min;
        self.j_max = j_max;
        self
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    fn index_range(&self, level: i32, axis: usize) -> std::ops::Range<i64> {
        let r = self.bbox.rect();
        let s = pow2::<T>(level);
        let slack = lit::<T>(1e-9);
        let (a, b) = (r.lo[axis] * s, r.hi[axis] * s);
        match self.coverage {
            Coverage::Contained => {
                let start = (a - slack).ceil().to_i64().unwrap_or(0);
                let end = (b + slack).floor().to_i64().unwrap_or(0);
                start..end.max(start)
            }
            Coverage::Intersecting => {
                let start = (a + slack).floor().to_i64().unwrap_or(0);
                let end = (b - slack).ceil().to_i64().unwrap_or(0);
                start..end.max(start)
            }
        }
    }

    pub fn level_cubes(&self, level: i32) -> Vec<DyadicCube> {
        let dim = self.dim();
        let r0 = self.index_range(level, 0);
        if dim == 1 {
            return r0.map(|k| DyadicCube::new(1, level, [k, 0])).collect();
        }
        let r1 = self.index_range(level, 1);
        let mut out = Vec::with_capacity((r0.end - r0.start).max(0) as usize * (r1.end - r1.start).max(0) as usize);
        for i in r0 {
            for j in r1.clone() {
                out.push(DyadicCube::new(2, level, [i, j]));
            }
        }
        out
    }

    /// Dyadic cubes, level-major then lexicographic in the index.
    pub fn enumerate(&self, filter: Option<&dyn Fn(&DyadicCube) -> bool>) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        for level in self.j_min..=self.j_max {
            for q in self.level_cubes(level) {
                if filter.is_none_or(|f| f(&q)) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Is `q` a cube of this lattice?
    pub fn contains(&self, q: &DyadicCube) -> bool {
        if q.level < self.j_min || q.level > self.j_max || q.dim != self.dim() {
            return false;
        }
        (0..self.dim()).all(|a| self.index_range(q.level, a).contains(&q.index[a]))
    }

    /// The lattice cubes containing `x`, coarse to fine.
    pub fn cubes_containing(&self, x: &Point<T>) -> Vec<DyadicCube> {
        (self.j_min..=self.j_max)
            .map(|j| DyadicCube::containing(self.dim(), j, x))
            .filter(|q| self.contains(q))
            .collect()
    }

    /// Randomly shifted cubes with the lattice's side lengths, inside the box.
    pub fn shifted_cubes(&self) -> Vec<LatticeCube<T>> {
        if self.shifted_per_level == 0 {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.shift_seed);
        let r = self.bbox.rect();
        let dim = self.dim();
        let mut out = Vec::new();
        for level in self.j_min..=self.j_max {
            let side = pow2::<T>(-level);
            if side > self.bbox.side() {
                continue;
            }
            for _ in 0..self.shifted_per_level {
                let mut lo = [T::zero(); 2];
                for a in 0..dim {
                    let u: f64 = rng.gen();
                    lo[a] = r.lo[a] + (r.hi[a] - r.lo[a] - side) * lit(u);
                }
                out.push(LatticeCube::Shifted { level, rect: Rect::cube(dim, lo, side) });
            }
        }
        out
    }

    /// Dyadic cubes followed by the shifted ones.
    pub fn all_cubes(&self) -> Vec<LatticeCube<T>> {
        let mut out: Vec<LatticeCube<T>> =
            self.enumerate(None).into_iter().map(LatticeCube::Dyadic).collect();
        out.extend(self.shifted_cubes());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_grid(dim: usize, cps: usize) -> Grid<f64> {
        Grid::new(BoundingBox::unit(dim).unwrap(), cps).unwrap()
    }

    #[test]
    fn integrate_constant_and_indicator() {
        let g = unit_grid(1, 8);
        assert_relative_eq!(GridFunction::constant(g, 1.0).integrate(None), 1.0);
        let half = Rect::new(1, [0.0, 0.0], [0.5, 0.0]);
        let chi = GridFunction::indicator(g, &half);
        assert_relative_eq!(chi.integrate(None), 0.5);
        let g2 = unit_grid(1, 2);
        assert_relative_eq!(GridFunction::indicator(g2, &half).integrate(None), 0.5);
    }

    #[test]
    fn integrate_identity_midpoint() {
        let g = unit_grid(1, 1 << 10);
        let f = GridFunction::from_fn(g, |x| x[0]);
        assert!((f.integrate(None) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn averages() {
        let g = unit_grid(1, 1 << 10);
        let q = Rect::new(1, [0.0, 0.0], [1.0, 0.0]);
        assert_relative_eq!(GridFunction::constant(g, 3.5).average(&q).unwrap(), 3.5);
        let f = GridFunction::from_fn(g, |x| x[0]);
        assert!((f.average(&q).unwrap() - 0.5).abs() < 1e-6);
        let left = GridFunction::indicator(g, &Rect::new(1, [0.0, 0.0], [0.5, 0.0]));
        assert_relative_eq!(left.average(&q).unwrap(), 0.5);
        let outside = Rect::new(1, [2.0, 0.0], [3.0, 0.0]);
        assert!(f.average(&outside).is_err());
        assert_eq!(f.integrate(Some(&outside)), 0.0);
    }

    #[test]
    fn lattice_counts() {
        let lat = CubeLattice::new(BoundingBox::<f64>::unit(1).unwrap(), 1, 1).unwrap();
        let cubes = lat.enumerate(None);
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].rect::<f64>(), Rect::new(1, [0.0, 0.0], [0.5, 0.0]));
        assert_eq!(cubes[1].rect::<f64>(), Rect::new(1, [0.5, 0.0], [1.0, 0.0]));

        let lat2 = CubeLattice::new(BoundingBox::<f64>::unit(2).unwrap(), 0, 2).unwrap();
        assert_eq!(lat2.enumerate(None).len(), 21);

        for d in 0..5 {
            let only = |q: &DyadicCube| q.level == d;
            assert_eq!(lat2.with_levels(0, 5).enumerate(Some(&only)).len(), 1 << (2 * d));
        }
    }

    #[test]
    fn enumeration_is_level_major_lexicographic() {
        let lat = CubeLattice::new(BoundingBox::<f64>::unit(2).unwrap(), 0, 2).unwrap();
        let cubes = lat.enumerate(None);
        let mut sorted = cubes.clone();
        sorted.sort_by_key(|q| (q.level, q.index));
        assert_eq!(cubes, sorted);
    }

    #[test]
    fn children_partition_parent() {
        let q = DyadicCube::new(2, 3, [2, 5]);
        let total: f64 = q.children().iter().map(|c| c.measure::<f64>()).sum();
        assert_eq!(total, q.measure::<f64>());
        for c in q.children() {
            assert_eq!(c.parent(), q);
            assert!(c.is_within(&q));
        }
    }

    #[test]
    fn integral_splits_over_children() {
        let g = unit_grid(2, 64);
        let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let lat = CubeLattice::<f64>::new(BoundingBox::unit(2).unwrap(), 0, 4).unwrap();
        for q in lat.enumerate(Some(&|q: &DyadicCube| q.level < 4)) {
            let whole = f.integrate(Some(&q.rect()));
            let parts: f64 = q.children().iter().map(|c| f.integrate(Some(&c.rect()))).sum();
            assert!((whole - parts).abs() <= 1e-14 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn dilation_is_concentric() {
        let q = DyadicCube::new(1, 1, [0, 0]);
        let r3 = q.dilate::<f64>(3.0);
        assert_relative_eq!(r3.lo[0], -0.5);
        assert_relative_eq!(r3.hi[0], 1.0);
        assert_relative_eq!(r3.center()[0], q.center::<f64>()[0]);
    }

    #[test]
    fn nonaligned_box_lattice() {
        let bbox = BoundingBox::<f64>::from_bounds(1, -1.0, 2.0).unwrap();
        let lat = CubeLattice::new(bbox, 0, 0).unwrap();
        assert_eq!(lat.enumerate(None).len(), 3);
        let wide = lat.with_coverage(Coverage::Intersecting).with_levels(-1, -1);
        assert_eq!(wide.enumerate(None).len(), 2);
    }

    #[test]
    fn shifted_cubes_are_deterministic_and_inside() {
        let lat = CubeLattice::new(BoundingBox::<f64>::unit(2).unwrap(), 1, 3)
            .unwrap()
            .with_shifted(4, 11);
        let a = lat.shifted_cubes();
        let b = lat.shifted_cubes();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        let r = lat.bbox.rect();
        for c in &a {
            assert!(r.contains_rect(&c.rect()));
        }
    }

    #[test]
    fn midpoint_cells_in_region() {
        let g = unit_grid(1, 8);
        let cells = g.cells_with_midpoint_in(&Rect::new(1, [0.25, 0.0], [0.5, 0.0]));
        assert_eq!(cells, vec![2, 3]);
        let g2 = unit_grid(2, 4);
        let cells = g2.cells_with_midpoint_in(&Rect::new(2, [0.0, 0.0], [0.5, 0.5]));
        assert_eq!(cells.len(), 4);
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = unit_grid(2, 8);
        let f = GridFunction::from_fn(g, |x| x[0] * 3.0 - x[1]);
        let p = dir.path().join("f.csv");
        f.write_csv(&p).unwrap();
        assert_eq!(GridFunction::<f64>::read_csv(&p).unwrap(), f);
        let p = dir.path().join("f.bin");
        f.write_binary(&p).unwrap();
        assert_eq!(GridFunction::<f64>::read_binary(&p).unwrap(), f);
    }
}
