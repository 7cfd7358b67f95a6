use super::{MultiResMap, OccupancyGrid};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Grayscale image decoded from a P2 or P5 file. Row 0 is the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    pub pixels: Vec<u16>,
}

impl PgmImage {
    /// Pixels at or above `threshold * max_value` become occupied. The image is
    /// flipped so that grid row 0 is the bottom of the picture.
    pub fn to_grid(&self, threshold: f64) -> OccupancyGrid {
        let cut = threshold * self.max_value as f64;
        let mut g = OccupancyGrid::new(self.width, self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                let v = self.pixels[row * self.width + col] as f64;
                g.set(col, self.height - 1 - row, v >= cut);
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub cell_size: f64,
    pub origin: [f64; 2],
}

fn header_tokens(data: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Pgm("truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&data[start..i]).into_owned());
    }
    Ok((tokens, i))
}

fn parse_num(tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Pgm(format!("bad {what} `{tok}`")))
}

pub fn parse_pgm(data: &[u8]) -> Result<PgmImage> {
    let (head, mut pos) = header_tokens(data, 4)?;
    let magic = head[0].as_str();
    let width = parse_num(&head[1], "width")?;
    let height = parse_num(&head[2], "height")?;
    let max_value = parse_num(&head[3], "max value")?;
    if max_value == 0 || max_value > 65535 {
        return Err(Error::Pgm(format!("max value {max_value} out of range")));
    }
    let n = width * height;
    let pixels = match magic {
        "P2" => {
            let text = std::str::from_utf8(&data[pos..]).map_err(|_| Error::Pgm("non-ascii P2 body".into()))?;
            let px: Vec<u16> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(|t| t.parse::<u16>().map_err(|_| Error::Pgm(format!("bad pixel `{t}`"))))
                .collect::<Result<_>>()?;
            if px.len() < n {
                return Err(Error::Pgm(format!("expected {n} pixels, found {}", px.len())));
            }
            px[..n].to_vec()
        }
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            let bpp = if max_value > 255 { 2 } else { 1 };
            let body = data.get(pos..pos + n * bpp).ok_or_else(|| Error::Pgm("truncated raster".into()))?;
            if bpp == 1 {
                body.iter().map(|&b| b as u16).collect()
            } else {
                body.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            }
        }
        other => return Err(Error::Pgm(format!("unsupported magic `{other}`"))),
    };
    Ok(PgmImage { width, height, max_value: max_value as u16, pixels })
}

/// Loads a PGM occupancy image plus its JSON sidecar into a quadtree.
pub fn load_pgm_map(pgm: &Path, sidecar: &Path, threshold: f64) -> Result<MultiResMap> {
    let img = parse_pgm(&std::fs::read(pgm)?)?;
    let meta: MapSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
    MultiResMap::from_grid(&img.to_grid(threshold), meta.cell_size, Point2::new(meta.origin[0], meta.origin[1]))
}
