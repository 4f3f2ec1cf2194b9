use serde::{Deserialize, Serialize};

/// Axis-aligned half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub const fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn from_size(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        );
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn overlap_area(&self, other: &Rect) -> u64 {
        self.intersection(other).map_or(0, |r| r.area())
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn top_left(&self) -> (u32, u32) {
        (self.x0, self.y0)
    }
}

/// A portion of an image. Regions built by tree construction are always
/// rectangles; non-rectangular areas are expressed as a slice of disjoint
/// regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Region {
    pub rect: Rect,
}

impl Region {
    pub const fn new(rect: Rect) -> Self {
        Region { rect }
    }

    pub fn area(&self) -> u64 {
        self.rect.area()
    }
}

impl From<Rect> for Region {
    fn from(rect: Rect) -> Self {
        Region { rect }
    }
}

/// Total area of a union of disjoint regions.
pub fn union_area(regions: &[Region]) -> u64 {
    regions.iter().map(Region::area).sum()
}

/// Overlap of `rect` with a union of disjoint regions.
pub fn overlap_with(regions: &[Region], rect: &Rect) -> u64 {
    regions.iter().map(|r| r.rect.overlap_area(rect)).sum()
}

/// Lexicographically smallest top-left corner over the member rectangles.
pub fn top_left(regions: &[Region]) -> Option<(u32, u32)> {
    regions.iter().map(|r| r.rect.top_left()).min()
}

/// True when the member rectangles are pairwise disjoint.
pub fn pairwise_disjoint(regions: &[Region]) -> bool {
    regions.iter().enumerate().all(|(i, a)| {
        regions[i + 1..]
            .iter()
            .all(|b| a.rect.overlap_area(&b.rect) == 0)
    })
}

/// True when `inner` (disjoint rects) lies entirely inside `outer` (disjoint rects).
pub fn covered_by(outer: &[Region], inner: &[Region]) -> bool {
    inner
        .iter()
        .all(|r| overlap_with(outer, &r.rect) == r.area())
}
