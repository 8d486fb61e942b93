//! Image-domain helpers: boolean masks and pixel bounding boxes.

use serde::{Deserialize, Serialize};

use crate::geom::Pixel;

/// Axis-aligned pixel box; covers columns `x..x+w` and rows `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn x2(&self) -> u32 {
        self.x + self.w
    }

    pub fn y2(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Continuous center, treating pixel `i` as spanning `[i, i+1)`.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u >= self.x && p.u < self.x2() && p.v >= self.y && p.v < self.y2()
    }

    /// All covered pixels in row-major order.
    pub fn pixels(&self) -> Vec<Pixel> {
        let mut out = Vec::with_capacity(self.area() as usize);
        for v in self.y..self.y2() {
            for u in self.x..self.x2() {
                out.push(Pixel::new(u, v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: &[Pixel]) -> Self {
        let mut m = Self::empty(width, height);
        for p in pixels {
            m.set(*p, true);
        }
        m
    }

    fn index(&self, p: Pixel) -> usize {
        p.v as usize * self.width as usize + p.u as usize
    }

    pub fn get(&self, p: Pixel) -> bool {
        self.data[self.index(p)]
    }

    pub fn set(&mut self, p: Pixel, value: bool) {
        let i = self.index(p);
        self.data[i] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> Vec<Pixel> {
        let w = self.width as usize;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| Pixel::new((i % w) as u32, (i / w) as u32))
            .collect()
    }

    /// Tight bounding box of the set pixels.
    pub fn bbox(&self) -> Option<BBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        let mut any = false;
        for p in self.pixels() {
            any = true;
            x0 = x0.min(p.u);
            y0 = y0.min(p.v);
            x1 = x1.max(p.u);
            y1 = y1.max(p.v);
        }
        any.then(|| BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    pub fn is_superset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| *a || !*b)
    }

    /// Run-length encoding of set pixels as `[start, length]` pairs over the
    /// row-major index.
    pub fn to_runs(&self) -> Vec<[u32; 2]> {
        let mut runs: Vec<[u32; 2]> = Vec::new();
        for (i, b) in self.data.iter().enumerate() {
            if !*b {
                continue;
            }
            match runs.last_mut() {
                Some(r) if r[0] + r[1] == i as u32 => r[1] += 1,
                _ => runs.push([i as u32, 1]),
            }
        }
        runs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_bbox_and_runs() {
        let m = Mask::from_pixels(10, 8, &[Pixel::new(2, 3), Pixel::new(5, 6), Pixel::new(3, 3)]);
        assert_eq!(m.bbox(), Some(BBox::new(2, 3, 4, 4)));
        assert_eq!(m.to_runs(), vec![[32, 2], [65, 1]]);
        assert_eq!(Mask::empty(4, 4).bbox(), None);
    }
}
