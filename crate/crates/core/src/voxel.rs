//! Regular-lattice voxel grids, world/voxel indexing, and the per-voxel
//! observation clock.
//!
//! One dense code path serves both dimensionalities: 2D grids are grids
//! with `nz = 1`. Cells are addressed either by [`Voxel`] coordinates or
//! by flat index with x varying fastest, then y, then z.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a regular voxel lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell counts per axis. `nz = 1` selects the 2D code path.
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    /// Cell edge length in world units.
    pub resolution: f64,
    /// World coordinate of the minimum grid corner.
    pub origin: [f64; 3],
}

impl GridSpec {
    pub fn new(nx: u32, ny: u32, nz: u32, resolution: f64, origin: [f64; 3]) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be >= 1".into()));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidConfig("grid resolution must be > 0".into()));
        }
        (nx as usize)
            .checked_mul(ny as usize)
            .and_then(|c| c.checked_mul(nz as usize))
            .ok_or_else(|| Error::InvalidConfig("voxel count overflows index space".into()))?;
        Ok(Self { nx, ny, nz, resolution, origin })
    }

    /// A 2D grid (`nz = 1`) with its origin at the world origin.
    pub fn new_2d(nx: u32, ny: u32, resolution: f64) -> Result<Self> {
        Self::new(nx, ny, 1, resolution, [0.0; 3])
    }

    pub fn is_2d(&self) -> bool {
        self.nz == 1
    }

    pub fn cell_count(&self) -> usize {
        self.nx as usize * self.ny as usize * self.nz as usize
    }

    /// Flat index of a voxel; x varies fastest, then y, then z.
    #[inline]
    pub fn flat(&self, v: Voxel) -> usize {
        debug_assert!(self.contains(v));
        (v.z as usize * self.ny as usize + v.y as usize) * self.nx as usize + v.x as usize
    }

    /// Inverse of [`GridSpec::flat`].
    #[inline]
    pub fn voxel_at(&self, flat: usize) -> Voxel {
        debug_assert!(flat < self.cell_count());
        let nx = self.nx as usize;
        let ny = self.ny as usize;
        Voxel {
            x: (flat % nx) as u32,
            y: ((flat / nx) % ny) as u32,
            z: (flat / (nx * ny)) as u32,
        }
    }

    #[inline]
    pub fn contains(&self, v: Voxel) -> bool {
        v.x < self.nx && v.y < self.ny && v.z < self.nz
    }

    /// Integer cell containing a world point: floor of `(p - origin) / resolution`.
    ///
    /// The grid volume is the half-open box `[origin, origin + dims * resolution)`.
    pub fn world_to_voxel(&self, p: [f64; 3]) -> Result<Voxel> {
        let dims = [self.nx, self.ny, self.nz];
        let mut idx = [0u32; 3];
        for axis in 0..3 {
            let rel = (p[axis] - self.origin[axis]) / self.resolution;
            let i = rel.floor();
            if i < 0.0 || i >= dims[axis] as f64 {
                return Err(Error::OutOfBounds(p[0], p[1], p[2]));
            }
            idx[axis] = i as u32;
        }
        Ok(Voxel { x: idx[0], y: idx[1], z: idx[2] })
    }

    /// World coordinate of a voxel's center.
    #[inline]
    pub fn voxel_center(&self, v: Voxel) -> [f64; 3] {
        [
            self.origin[0] + (v.x as f64 + 0.5) * self.resolution,
            self.origin[1] + (v.y as f64 + 0.5) * self.resolution,
            self.origin[2] + (v.z as f64 + 0.5) * self.resolution,
        ]
    }

    /// World coordinate of the maximum grid corner.
    pub fn world_max(&self) -> [f64; 3] {
        [
            self.origin[0] + self.nx as f64 * self.resolution,
            self.origin[1] + self.ny as f64 * self.resolution,
            self.origin[2] + self.nz as f64 * self.resolution,
        ]
    }
}

/// Integer cell coordinates within a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Voxel {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Voxel {
    pub fn new(x: u32, y: u32, z: u32) -> Self {
        Self { x, y, z }
    }
}

/// Ternary occupancy state of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// Dense occupancy field over a [`GridSpec`].
///
/// Both belief maps (which may contain `Unknown`) and ground-truth maps
/// (which must not) instantiate this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn filled(spec: GridSpec, state: CellState) -> Self {
        Self { spec, cells: vec![state; spec.cell_count()] }
    }

    #[inline]
    pub fn state(&self, v: Voxel) -> CellState {
        self.cells[self.spec.flat(v)]
    }

    #[inline]
    pub fn state_at(&self, flat: usize) -> CellState {
        self.cells[flat]
    }

    #[inline]
    pub fn set_state(&mut self, v: Voxel, state: CellState) {
        let i = self.spec.flat(v);
        self.cells[i] = state;
    }

    #[inline]
    pub fn set_state_at(&mut self, flat: usize, state: CellState) {
        self.cells[flat] = state;
    }

    /// Reset every cell to `state` without reallocating.
    pub fn fill(&mut self, state: CellState) {
        self.cells.fill(state);
    }

    pub fn as_slice(&self) -> &[CellState] {
        &self.cells
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// Snapshot byte encoding: 0 = occupied, 128 = unknown, 255 = free.
    fn state_byte(state: CellState) -> u8 {
        match state {
            CellState::Occupied => 0,
            CellState::Unknown => 128,
            CellState::Free => 255,
        }
    }

    /// Dump a 2D grid as a binary PGM (P5) image, one byte per cell.
    ///
    /// Rows are written with y ascending, x fastest within a row.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> Result<()> {
        if !self.spec.is_2d() {
            return Err(Error::InvalidConfig("PGM dump requires a 2D grid (nz = 1)".into()));
        }
        write!(w, "P5\n{} {}\n255\n", self.spec.nx, self.spec.ny)?;
        let bytes: Vec<u8> = self.cells.iter().map(|&c| Self::state_byte(c)).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Dump any grid in the flat binary format: a text header line
    /// `nx ny nz resolution` followed by one byte per cell in flat order
    /// (x fastest, then y, then z).
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.spec.nx, self.spec.ny, self.spec.nz, self.spec.resolution)?;
        let bytes: Vec<u8> = self.cells.iter().map(|&c| Self::state_byte(c)).collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Per-voxel "time last observed" in decision steps, clipped at `t_clip`.
///
/// A fresh map is maximally stale everywhere (`t = t_clip`) so that
/// unobserved space attracts exploration reward immediately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationTimeMap {
    pub spec: GridSpec,
    t_clip: u32,
    t: Vec<u32>,
}

impl ObservationTimeMap {
    pub fn new(spec: GridSpec, t_clip: u32) -> Self {
        Self { spec, t_clip, t: vec![t_clip; spec.cell_count()] }
    }

    pub fn t_clip(&self) -> u32 {
        self.t_clip
    }

    #[inline]
    pub fn t(&self, v: Voxel) -> u32 {
        self.t[self.spec.flat(v)]
    }

    #[inline]
    pub fn t_at(&self, flat: usize) -> u32 {
        self.t[flat]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.t
    }

    /// One decision step elapses: every `t` becomes `min(t + 1, t_clip)`.
    pub fn advance(&mut self) {
        let clip = self.t_clip;
        for t in &mut self.t {
            *t = (*t + 1).min(clip);
        }
    }

    /// Reset `t = 0` for each given cell; all other cells are untouched.
    /// Marking a cell more than once within a step is idempotent.
    pub fn mark_observed(&mut self, cells: &[Voxel]) -> Result<()> {
        for &v in cells {
            if !self.spec.contains(v) {
                return Err(Error::OutOfBoundsIndex(v.x, v.y, v.z));
            }
        }
        for &v in cells {
            let i = self.spec.flat(v);
            self.t[i] = 0;
        }
        Ok(())
    }
}

/// Per-voxel "ever observed" mask backing the map-coverage metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedMask {
    pub spec: GridSpec,
    seen: Vec<bool>,
    seen_count: usize,
}

impl ObservedMask {
    pub fn new(spec: GridSpec) -> Self {
        Self { spec, seen: vec![false; spec.cell_count()], seen_count: 0 }
    }

    #[inline]
    pub fn mark(&mut self, v: Voxel) {
        let i = self.spec.flat(v);
        if !self.seen[i] {
            self.seen[i] = true;
            self.seen_count += 1;
        }
    }

    #[inline]
    pub fn is_seen(&self, v: Voxel) -> bool {
        self.seen[self.spec.flat(v)]
    }

    pub fn seen_count(&self) -> usize {
        self.seen_count
    }

    /// Fraction of cells ever observed, in `[0, 1]`.
    pub fn coverage(&self) -> f64 {
        self.seen_count as f64 / self.spec.cell_count() as f64
    }
}
