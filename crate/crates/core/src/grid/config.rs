use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::packed;
use super::rule::{digit_char, parse_digit, RuleKind, RuleSpec, MAX_ALPHABET};
use super::{Coord, Rect};
use crate::error::{Error, Result};

/// Largest window accepted, in cells.
const MAX_CELLS: usize = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Toroidal wrap-around; the whole window is always valid.
    Periodic,
    /// Cells beyond the window read as 0 and the valid region contracts by
    /// the rule radius on every side per step.
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Cells {
    Packed { words_per_row: usize, words: Vec<u64> },
    Bytes(Vec<u8>),
}

/// A rectangular window of lattice symbols.
///
/// Binary windows are stored 64 cells per word; other alphabets use one byte
/// per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    width: usize,
    height: usize,
    alphabet: u8,
    origin: Coord,
    boundary: Boundary,
    valid: Rect,
    cells: Cells,
}

impl Configuration {
    /// All-zero window whose cell `(0, 0)` sits at lattice coordinate `origin`.
    pub fn zeros(width: usize, height: usize, alphabet: u8, origin: Coord, boundary: Boundary) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("window dimensions must be positive".into()));
        }
        if !(2..=MAX_ALPHABET).contains(&alphabet) {
            return Err(Error::InvalidArgument(format!("alphabet size {alphabet} outside 2..={MAX_ALPHABET}")));
        }
        match width.checked_mul(height) {
            Some(n) if n <= MAX_CELLS => {}
            _ => return Err(Error::WindowTooLarge { width, height }),
        }
        let cells = if alphabet == 2 {
            let words_per_row = packed::words_for(width);
            Cells::Packed { words_per_row, words: vec![0; words_per_row * height] }
        } else {
            Cells::Bytes(vec![0; width * height])
        };
        Ok(Configuration {
            width,
            height,
            alphabet,
            origin,
            boundary,
            valid: Rect::from_origin(origin, width, height),
            cells,
        })
    }

    /// Window from row-major symbols (row `j - origin.j`, column `i - origin.i`).
    pub fn from_symbols(
        width: usize,
        height: usize,
        alphabet: u8,
        origin: Coord,
        boundary: Boundary,
        symbols: &[u8],
    ) -> Result<Self> {
        let mut c = Self::zeros(width, height, alphabet, origin, boundary)?;
        if symbols.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} symbols, got {}",
                width * height,
                symbols.len()
            )));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::InvalidArgument(format!("symbol {bad} outside alphabet of size {alphabet}")));
        }
        for (idx, &s) in symbols.iter().enumerate() {
            c.set_local(idx % width, idx / width, s);
        }
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn origin(&self) -> Coord {
        self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_packed(&self) -> bool {
        matches!(self.cells, Cells::Packed { .. })
    }

    /// The lattice rectangle covered by the window.
    pub fn window(&self) -> Rect {
        Rect::from_origin(self.origin, self.width, self.height)
    }

    /// Cells whose contents equal the infinite-lattice evolution. Always the
    /// whole window under periodic boundary.
    pub fn valid_region(&self) -> Rect {
        self.valid
    }

    /// Changes the boundary policy. Switching to shrink keeps the current
    /// valid region; switching to periodic resets it to the whole window.
    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        if boundary == Boundary::Periodic {
            self.valid = self.window();
        }
        self.boundary = boundary;
        self
    }

    #[inline]
    pub fn get_local(&self, col: usize, row: usize) -> u8 {
        match &self.cells {
            Cells::Packed { words_per_row, words } => {
                packed::get_bit(&words[row * words_per_row..(row + 1) * words_per_row], col)
            }
            Cells::Bytes(b) => b[row * self.width + col],
        }
    }

    #[inline]
    pub fn set_local(&mut self, col: usize, row: usize, v: u8) {
        debug_assert!(v < self.alphabet);
        match &mut self.cells {
            Cells::Packed { words_per_row, words } => {
                let wpr = *words_per_row;
                packed::set_bit(&mut words[row * wpr..(row + 1) * wpr], col, v)
            }
            Cells::Bytes(b) => b[row * self.width + col] = v,
        }
    }

    /// Symbol at a lattice coordinate, `None` outside the window.
    pub fn get(&self, c: Coord) -> Option<u8> {
        let (col, row) = self.local(c)?;
        Some(self.get_local(col, row))
    }

    /// Sets the symbol at a lattice coordinate.
    ///
    /// # Panics
    ///
    /// Panics if `c` lies outside the window or `v` outside the alphabet.
    pub fn set(&mut self, c: Coord, v: u8) {
        assert!(v < self.alphabet, "symbol {v} outside alphabet");
        let (col, row) = self.local(c).expect("coordinate outside window");
        self.set_local(col, row, v);
    }

    fn local(&self, c: Coord) -> Option<(usize, usize)> {
        let col = c.i - self.origin.i;
        let row = c.j - self.origin.j;
        (col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height)
            .then_some((col as usize, row as usize))
    }

    /// Row-major copy of the window.
    pub fn symbols(&self) -> Vec<u8> {
        match &self.cells {
            Cells::Bytes(b) => b.clone(),
            Cells::Packed { .. } => (0..self.height)
                .flat_map(|row| (0..self.width).map(move |col| (col, row)))
                .map(|(col, row)| self.get_local(col, row))
                .collect(),
        }
    }

    /// Number of cells in the window holding each symbol.
    pub fn symbol_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.alphabet as usize];
        match &self.cells {
            Cells::Packed { words, .. } => {
                let ones: u64 = words.iter().map(|w| w.count_ones() as u64).sum();
                counts[1] = ones;
                counts[0] = (self.width * self.height) as u64 - ones;
            }
            Cells::Bytes(b) => b.iter().for_each(|&s| counts[s as usize] += 1),
        }
        counts
    }

    /// Copies the sub-window `rect`, which must lie inside the window. The
    /// valid region of the copy is the intersection with the current one.
    pub fn crop(&self, rect: Rect) -> Result<Configuration> {
        if rect.is_empty() || !self.window().contains_rect(&rect) {
            return Err(Error::InvalidArgument("crop rectangle outside window".into()));
        }
        let mut out = Self::zeros(
            rect.width() as usize,
            rect.height() as usize,
            self.alphabet,
            Coord::new(rect.i0, rect.j0),
            self.boundary,
        )?;
        for c in rect.cells() {
            out.set(c, self.get(c).unwrap());
        }
        if self.boundary == Boundary::Shrink {
            let v = self.valid;
            out.valid = Rect::new(v.i0.max(rect.i0), v.j0.max(rect.j0), v.i1.min(rect.i1), v.j1.min(rect.j1));
        }
        Ok(out)
    }

    /// Applies `rule` synchronously `steps` times.
    ///
    /// Under [`Boundary::Shrink`] the valid region contracts by `steps * r`
    /// per side; it is an error for it to become empty. Cells outside the
    /// valid region hold deterministic but meaningless values.
    pub fn step(&self, rule: &RuleSpec, steps: usize) -> Result<Configuration> {
        if rule.alphabet() != self.alphabet {
            return Err(Error::InvalidArgument(format!(
                "rule alphabet {} does not match configuration alphabet {}",
                rule.alphabet(),
                self.alphabet
            )));
        }
        let mut out = self.clone();
        if steps == 0 {
            return Ok(out);
        }
        if self.boundary == Boundary::Shrink {
            let total = (rule.radius() as i64).checked_mul(steps as i64).ok_or(Error::ValidRegionExhausted {
                steps,
                radius: rule.radius(),
            })?;
            let valid = self.valid.shrink(total);
            if valid.is_empty() {
                return Err(Error::ValidRegionExhausted { steps, radius: rule.radius() });
            }
            out.valid = valid;
        }
        let periodic = self.boundary == Boundary::Periodic;
        for _ in 0..steps {
            out.cells = match (&out.cells, rule.kind()) {
                (Cells::Packed { words_per_row, words }, RuleKind::Linear(terms)) => {
                    Cells::Packed {
                        words_per_row: *words_per_row,
                        words: step_packed_linear(words, *words_per_row, out.width, out.height, terms, periodic),
                    }
                }
                (Cells::Packed { .. }, RuleKind::Table(_)) => {
                    let bytes = step_bytes(&out.symbols(), out.width, out.height, rule, periodic);
                    let mut tmp = Self::from_symbols(out.width, out.height, 2, out.origin, out.boundary, &bytes)?;
                    std::mem::replace(&mut tmp.cells, Cells::Bytes(Vec::new()))
                }
                (Cells::Bytes(b), _) => Cells::Bytes(step_bytes(b, out.width, out.height, rule, periodic)),
            };
        }
        Ok(out)
    }

    /// Translates the configuration: the result holds at `(i, j)` what this
    /// one holds at `(i + amount, j)` (horizontal) or `(i, j + amount)`
    /// (vertical). Commutes with [`Configuration::step`].
    pub fn shift(&self, axis: Axis, amount: i64) -> Configuration {
        let (di, dj) = match axis {
            Axis::Horizontal => (-amount, 0),
            Axis::Vertical => (0, -amount),
        };
        let mut out = self.clone();
        out.origin = Coord::new(self.origin.i + di, self.origin.j + dj);
        out.valid = self.valid.translate(di, dj);
        out
    }

    /// Plain-text dump: a header line then one row per line, row `j =
    /// origin.j` first, symbols as base-36 digits.
    pub fn to_dump(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height + 64);
        let _ = writeln!(
            s,
            "#ca2d w={} h={} q={} origin=({},{})",
            self.width, self.height, self.alphabet, self.origin.i, self.origin.j
        );
        for row in 0..self.height {
            for col in 0..self.width {
                s.push(digit_char(self.get_local(col, row)));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_dump(text: &str, boundary: Boundary) -> Result<Configuration> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Dump { line: 1, message: "empty dump".into() })?;
        let (w, h, q, origin) = parse_header(header).map_err(|message| Error::Dump { line: 1, message })?;
        let mut symbols = Vec::with_capacity(w * h);
        let mut rows = 0;
        for (idx, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            if rows == h {
                return Err(Error::Dump { line: lineno, message: "more rows than declared".into() });
            }
            if line.chars().count() != w {
                return Err(Error::Dump { line: lineno, message: format!("expected {w} symbols") });
            }
            for c in line.chars() {
                let d = parse_digit(c, q).ok_or_else(|| Error::Dump {
                    line: lineno,
                    message: format!("invalid symbol `{c}` for alphabet {q}"),
                })?;
                symbols.push(d);
            }
            rows += 1;
        }
        if rows != h {
            return Err(Error::Dump { line: text.lines().count(), message: format!("expected {h} rows, found {rows}") });
        }
        Configuration::from_symbols(w, h, q, origin, boundary, &symbols)
    }
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize, u8, Coord), String> {
    let rest = line.trim().strip_prefix("#ca2d").ok_or("missing `#ca2d` header")?;
    let (mut w, mut h, mut q, mut origin) = (None, None, None, None);
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(|| format!("malformed header field `{field}`"))?;
        match k {
            "w" => w = Some(v.parse::<usize>().map_err(|_| format!("invalid width `{v}`"))?),
            "h" => h = Some(v.parse::<usize>().map_err(|_| format!("invalid height `{v}`"))?),
            "q" => q = Some(v.parse::<u8>().map_err(|_| format!("invalid alphabet `{v}`"))?),
            "origin" => {
                let inner = v
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| format!("invalid origin `{v}`"))?;
                let (a, b) = inner.split_once(',').ok_or_else(|| format!("invalid origin `{v}`"))?;
                let i = a.parse().map_err(|_| format!("invalid origin `{v}`"))?;
                let j = b.parse().map_err(|_| format!("invalid origin `{v}`"))?;
                origin = Some(Coord::new(i, j));
            }
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    let q = q.ok_or("header missing q")?;
    if !(2..=MAX_ALPHABET).contains(&q) {
        return Err(format!("alphabet size {q} outside 2..={MAX_ALPHABET}"));
    }
    Ok((w.ok_or("header missing w")?, h.ok_or("header missing h")?, q, origin.unwrap_or(Coord::ORIGIN)))
}

fn step_packed_linear(
    words: &[u64],
    wpr: usize,
    width: usize,
    height: usize,
    terms: &[super::LinearTerm],
    periodic: bool,
) -> Vec<u64> {
    let mut out = vec![0u64; words.len()];
    for t in terms {
        if t.coeff % 2 == 0 {
            continue;
        }
        for row in 0..height {
            let src_row = row as i64 + t.offset.dj as i64;
            let src_row = if periodic {
                src_row.rem_euclid(height as i64)
            } else if src_row < 0 || src_row >= height as i64 {
                continue;
            } else {
                src_row
            } as usize;
            let src = &words[src_row * wpr..(src_row + 1) * wpr];
            packed::xor_shifted(src, t.offset.di as i64, width, periodic, &mut out[row * wpr..(row + 1) * wpr]);
        }
    }
    out
}

fn step_bytes(cells: &[u8], width: usize, height: usize, rule: &RuleSpec, periodic: bool) -> Vec<u8> {
    let (w, h) = (width as i64, height as i64);
    let read = |col: i64, row: i64| -> u8 {
        if periodic {
            cells[(row.rem_euclid(h) * w + col.rem_euclid(w)) as usize]
        } else if col < 0 || row < 0 || col >= w || row >= h {
            0
        } else {
            cells[(row * w + col) as usize]
        }
    };
    match rule.kind() {
        RuleKind::Linear(terms) => {
            let q = rule.alphabet() as u32;
            let mut acc = vec![0u32; cells.len()];
            for t in terms {
                let (di, dj, c) = (t.offset.di as i64, t.offset.dj as i64, t.coeff as u32);
                for row in 0..h {
                    let base = (row * w) as usize;
                    for col in 0..w {
                        acc[base + col as usize] += c * read(col + di, row + dj) as u32;
                    }
                }
                if q > 1 {
                    acc.iter_mut().for_each(|a| *a %= q);
                }
            }
            acc.into_iter().map(|a| a as u8).collect()
        }
        RuleKind::Table(_) => {
            let mut out = vec![0u8; cells.len()];
            for row in 0..h {
                for col in 0..w {
                    out[(row * w + col) as usize] =
                        rule.apply(|o| read(col + o.di as i64, row + o.dj as i64));
                }
            }
            out
        }
    }
}
