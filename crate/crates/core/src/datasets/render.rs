//! 28×28 rendering of (digit, colour, bar) labels and its exact inverse.

use std::sync::OnceLock;

use super::DatasetError;

pub const WIDTH: usize = 28;
pub const HEIGHT: usize = 28;
const SCALE: usize = 3;
const BASE_X: i64 = 6;
const BASE_Y: i64 = 5;
const BAR_ROWS: usize = 3;

pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];
pub const BLUE: [u8; 3] = [0, 0, 255];
const BLACK: [u8; 3] = [0, 0, 0];

/// 5×7 bitmap glyphs, one row per byte, most significant of five bits left.
const FONT: [[u8; 7]; 10] = [
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
    [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
];

/// Rendering-only factors: placement jitter and stroke thickness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nuisance {
    pub x_offset: i64,
    pub y_offset: i64,
    pub thickness: u8,
}

impl Nuisance {
    pub const ZERO: Nuisance = Nuisance { x_offset: 0, y_offset: 0, thickness: 1 };

    pub fn new(x_offset: i64, y_offset: i64, thickness: u8) -> Result<Self, DatasetError> {
        if !(-2..=2).contains(&x_offset) || !(-2..=2).contains(&y_offset) || !(1..=2).contains(&thickness) {
            return Err(DatasetError::Nuisance(format!(
                "offsets must lie in -2..=2 and thickness in 1..=2, got ({x_offset}, {y_offset}, {thickness})"
            )));
        }
        Ok(Nuisance { x_offset, y_offset, thickness })
    }

    /// Every admissible setting (5·5·2).
    pub fn all() -> Vec<Nuisance> {
        let mut out = Vec::with_capacity(50);
        for x in -2..=2 {
            for y in -2..=2 {
                for t in 1..=2 {
                    out.push(Nuisance { x_offset: x, y_offset: y, thickness: t });
                }
            }
        }
        out
    }
}

/// Labels recovered from an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DigitLabels {
    pub digit: i64,
    pub color: i64,
    pub bar: i64,
}

/// 28×28 RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    pixels: Vec<[u8; 3]>,
}

impl ImageGrid {
    pub fn black() -> Self {
        ImageGrid { pixels: vec![BLACK; WIDTH * HEIGHT] }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * WIDTH + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * WIDTH + x] = rgb;
    }

    /// Binary PPM: `P6\n28 28\n255\n` followed by the RGB bytes.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{WIDTH} {HEIGHT}\n255\n").into_bytes();
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, DatasetError> {
        let header = format!("P6\n{WIDTH} {HEIGHT}\n255\n").into_bytes();
        if !bytes.starts_with(&header) || bytes.len() != header.len() + WIDTH * HEIGHT * 3 {
            return Err(DatasetError::Unlabelable("not a 28x28 P6 image".into()));
        }
        let pixels = bytes[header.len()..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(ImageGrid { pixels })
    }
}

/// Lit-pixel mask of a glyph placement: one `u32` per image row (bit x set
/// when column x is lit).
fn glyph_mask(digit: usize, n: Nuisance) -> [u32; HEIGHT] {
    let mut rows = [0u32; HEIGHT];
    let x0 = BASE_X + n.x_offset;
    let y0 = BASE_Y + n.y_offset;
    for (gy, bits) in FONT[digit].iter().enumerate() {
        for gx in 0..5 {
            if bits >> (4 - gx) & 1 == 0 {
                continue;
            }
            for sy in 0..SCALE {
                for sx in 0..SCALE {
                    let x = (x0 + (gx * SCALE + sx) as i64) as usize;
                    let y = (y0 + (gy * SCALE + sy) as i64) as usize;
                    rows[y] |= 1 << x;
                    if n.thickness == 2 {
                        rows[y] |= 1 << (x + 1);
                    }
                }
            }
        }
    }
    rows
}

/// Draws the digit in red (`C = 1`) or green, and fills the top three rows
/// blue when `B = 1`. Pure in its arguments.
pub fn render(digit: i64, color: i64, bar: i64, nuisance: Nuisance) -> Result<ImageGrid, DatasetError> {
    if !(0..=9).contains(&digit) || !(0..=1).contains(&color) || !(0..=1).contains(&bar) {
        return Err(DatasetError::Labels(format!("cannot render D={digit}, C={color}, B={bar}")));
    }
    let mut img = ImageGrid::black();
    let ink = if color == 1 { RED } else { GREEN };
    let mask = glyph_mask(digit as usize, nuisance);
    for (y, row) in mask.iter().enumerate() {
        for x in 0..WIDTH {
            if row >> x & 1 == 1 {
                img.set(x, y, ink);
            }
        }
    }
    if bar == 1 {
        for y in 0..BAR_ROWS {
            for x in 0..WIDTH {
                img.set(x, y, BLUE);
            }
        }
    }
    Ok(img)
}

/// Every glyph placement, keyed by its mask.
fn templates() -> &'static Vec<([u32; HEIGHT], usize)> {
    static TEMPLATES: OnceLock<Vec<([u32; HEIGHT], usize)>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        let mut t = Vec::new();
        for d in 0..10 {
            for n in Nuisance::all() {
                t.push((glyph_mask(d, n), d));
            }
        }
        t
    })
}

/// Inverse of [`render`]: bar from complete blue rows, colour from the ink,
/// digit by exact template match. Anything else is reported, never guessed.
pub fn label(img: &ImageGrid) -> Result<DigitLabels, DatasetError> {
    let bar_row = |y: usize| (0..WIDTH).all(|x| img.get(x, y) == BLUE);
    let bar = if (0..BAR_ROWS).all(bar_row) {
        1
    } else if (0..BAR_ROWS).any(|y| (0..WIDTH).any(|x| img.get(x, y) == BLUE)) {
        return Err(DatasetError::Unlabelable("partial bar".into()));
    } else {
        0
    };
    let first = if bar == 1 { BAR_ROWS } else { 0 };
    let mut ink: Option<[u8; 3]> = None;
    let mut mask = [0u32; HEIGHT];
    for y in first..HEIGHT {
        for x in 0..WIDTH {
            let p = img.get(x, y);
            if p == BLACK {
                continue;
            }
            if !(p == RED || p == GREEN) {
                return Err(DatasetError::Unlabelable(format!("unexpected pixel {p:?} at ({x}, {y})")));
            }
            match ink {
                Some(c) if c != p => return Err(DatasetError::Unlabelable("mixed ink colours".into())),
                _ => ink = Some(p),
            }
            mask[y] |= 1 << x;
        }
    }
    let Some(ink) = ink else {
        return Err(DatasetError::Unlabelable("no digit strokes".into()));
    };
    let mut digits: Vec<usize> = templates().iter().filter(|(m, _)| *m == mask).map(|&(_, d)| d).collect();
    digits.sort_unstable();
    digits.dedup();
    match digits.as_slice() {
        [d] => Ok(DigitLabels { digit: *d as i64, color: i64::from(ink == RED), bar }),
        [] => Err(DatasetError::Unlabelable("no glyph template matches".into())),
        _ => Err(DatasetError::Unlabelable(format!("ambiguous glyph: digits {digits:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placements_stay_inside() {
        for d in 0..10 {
            for n in Nuisance::all() {
                let m = glyph_mask(d, n);
                assert!(m[..BAR_ROWS].iter().all(|r| *r == 0));
            }
        }
    }

    #[test]
    fn ppm_round_trip() {
        let img = render(3, 0, 1, Nuisance::ZERO).unwrap();
        let bytes = img.to_ppm();
        assert_eq!(bytes.len(), "P6\n28 28\n255\n".len() + 28 * 28 * 3);
        assert_eq!(ImageGrid::from_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn black_and_bar_only_are_unlabelable() {
        assert!(label(&ImageGrid::black()).is_err());
        let mut img = ImageGrid::black();
        for y in 0..3 {
            for x in 0..WIDTH {
                img.set(x, y, BLUE);
            }
        }
        assert!(label(&img).is_err());
    }
}
