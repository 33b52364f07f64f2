//! SBS plate formats, column-major well indexing and the tip-adjacency
//! well distance matrix.
//!
//! Wells are numbered 1-based in column-major order: `A1` is well 1, `B1` is
//! well 2, and the first well of the second column is `rows + 1`. Two wells
//! can be served by neighbouring tips of the 8-channel head when they sit in
//! the same plate column and their indices differ by exactly the plate's
//! adjacency stride (1 for 12/24/96-well, 2 for 384-well, 4 for 1536-well).

use std::fmt;
use std::str::FromStr;

use crate::error::PlateError;

/// 1-based, column-major well index.
pub type Well = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlateFormat {
    rows: u32,
    cols: u32,
    adjacency_stride: u32,
}

impl PlateFormat {
    pub fn new(rows: u32, cols: u32, adjacency_stride: u32) -> Result<Self, PlateError> {
        if rows == 0 {
            return Err(PlateError::ZeroDimension("rows"));
        }
        if cols == 0 {
            return Err(PlateError::ZeroDimension("cols"));
        }
        if adjacency_stride == 0 {
            return Err(PlateError::BadStride(adjacency_stride.to_string()));
        }
        Ok(Self {
            rows,
            cols,
            adjacency_stride,
        })
    }

    /// Resolves one of the five named SBS formats by well count.
    pub fn named(wells: u32) -> Option<Self> {
        let (rows, cols, stride) = match wells {
            12 => (3, 4, 1),
            24 => (4, 6, 1),
            96 => (8, 12, 1),
            384 => (16, 24, 2),
            1536 => (32, 48, 4),
            _ => return None,
        };
        Some(Self {
            rows,
            cols,
            adjacency_stride: stride,
        })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn adjacency_stride(&self) -> u32 {
        self.adjacency_stride
    }

    /// Number of wells `n = rows * cols`.
    pub fn wells(&self) -> u32 {
        self.rows * self.cols
    }

    pub fn contains(&self, well: Well) -> bool {
        (1..=self.wells()).contains(&well)
    }

    /// 1-based (row, col) of a well.
    pub fn coords(&self, well: Well) -> Result<(u32, u32), PlateError> {
        if !self.contains(well) {
            return Err(PlateError::WellOutOfRange {
                well,
                wells: self.wells(),
            });
        }
        let zero = well - 1;
        Ok((zero % self.rows + 1, zero / self.rows + 1))
    }

    pub fn well_index(&self, row: u32, col: u32) -> Result<Well, PlateError> {
        if !(1..=self.rows).contains(&row) || !(1..=self.cols).contains(&col) {
            return Err(PlateError::CoordOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((col - 1) * self.rows + row)
    }

    /// Human readable label such as `A1`, `H12` or `AG1`.
    pub fn well_label(&self, well: Well) -> Result<String, PlateError> {
        let (row, col) = self.coords(well)?;
        Ok(format!("{}{}", row_letters(row), col))
    }

    /// Whether a tip bank can serve `a` and then `b` in one positioning:
    /// same column, `b` below `a` by exactly one stride.
    pub fn adjacent(&self, a: Well, b: Well) -> bool {
        a < b
            && b - a == self.adjacency_stride
            && (a - 1) / self.rows == (b - 1) / self.rows
    }

    /// Tip-adjacency distance between two wells: 0 when `adjacent(a, b)`,
    /// otherwise 1 (including `a == b`).
    pub fn well_distance(&self, a: Well, b: Well) -> u8 {
        u8::from(!self.adjacent(a, b))
    }
}

impl fmt::Display for PlateFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match Self::named(self.wells()) {
            Some(named) if named == *self => write!(f, "{}", self.wells()),
            _ => write!(f, "{}x{}:{}", self.rows, self.cols, self.adjacency_stride),
        }
    }
}

impl FromStr for PlateFormat {
    type Err = PlateError;

    /// Accepts a named format (`"96"`), `"RxC"` (stride 1) or `"RxC:stride"`.
    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let spec = spec.trim();
        if !spec.contains(['x', 'X']) {
            let wells: u32 = spec
                .parse()
                .map_err(|_| PlateError::BadToken(spec.to_string()))?;
            return Self::named(wells).ok_or_else(|| PlateError::UnknownFormat(spec.to_string()));
        }
        let (dims, stride) = match spec.split_once(':') {
            Some((dims, stride)) => {
                let parsed: u32 = stride
                    .trim()
                    .parse()
                    .map_err(|_| PlateError::BadStride(stride.to_string()))?;
                (dims, parsed)
            }
            None => (spec, 1),
        };
        let (rows, cols) = dims
            .split_once(['x', 'X'])
            .ok_or_else(|| PlateError::BadToken(dims.to_string()))?;
        let rows: u32 = rows
            .trim()
            .parse()
            .map_err(|_| PlateError::BadToken(rows.to_string()))?;
        let cols: u32 = cols
            .trim()
            .parse()
            .map_err(|_| PlateError::BadToken(cols.to_string()))?;
        Self::new(rows, cols, stride)
    }
}

/// Parses a plate spec string; see [`PlateFormat::from_str`].
pub fn plate_from_spec(spec: &str) -> Result<PlateFormat, PlateError> {
    spec.parse()
}

/// Bijective base-26 row letters: 1 -> A, 26 -> Z, 27 -> AA.
fn row_letters(mut row: u32) -> String {
    let mut out = Vec::new();
    while row > 0 {
        let rem = (row - 1) % 26;
        out.push(b'A' + rem as u8);
        row = (row - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Dense `n x n` tip-adjacency matrix of a plate.
#[derive(Debug, Clone)]
pub struct WellDistanceMatrix {
    plate: PlateFormat,
    entries: Vec<u8>,
}

impl WellDistanceMatrix {
    pub fn new(plate: PlateFormat) -> Self {
        let n = plate.wells() as usize;
        let mut entries = vec![1u8; n * n];
        for a in 1..=plate.wells() {
            let b = a + plate.adjacency_stride();
            if plate.adjacent(a, b) {
                entries[(a as usize - 1) * n + (b as usize - 1)] = 0;
            }
        }
        Self { plate, entries }
    }

    pub fn plate(&self) -> PlateFormat {
        self.plate
    }

    /// Distance `d(a, b)` for 1-based wells.
    #[inline]
    pub fn get(&self, a: Well, b: Well) -> u8 {
        let n = self.plate.wells() as usize;
        self.entries[(a as usize - 1) * n + (b as usize - 1)]
    }

    pub fn zero_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 0).count()
    }
}

/// Builds the well distance matrix for `plate`.
pub fn well_distance_matrix(plate: PlateFormat) -> WellDistanceMatrix {
    WellDistanceMatrix::new(plate)
}
