//! Synthetic images: a rectangle populated with ground-truth object extents,
//! plus the majority-area counting rule used as ground truth everywhere.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{overlap_with, top_left, Rect, Region};
use crate::rng::RngSeed;

pub type ObjectId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectExtent {
    pub id: ObjectId,
    pub rect: Rect,
}

impl ObjectExtent {
    pub fn area(&self) -> u64 {
        self.rect.area()
    }
}

/// An image of `width x height` pixels with known object extents.
///
/// Construction validates that every extent has positive area, lies inside
/// the image, and that ids are exactly `0..n` in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawImage")]
pub struct SyntheticImage {
    width: u32,
    height: u32,
    objects: Vec<ObjectExtent>,
}

#[derive(Deserialize)]
struct RawImage {
    width: u32,
    height: u32,
    objects: Vec<ObjectExtent>,
}

impl TryFrom<RawImage> for SyntheticImage {
    type Error = Error;

    fn try_from(raw: RawImage) -> Result<Self> {
        SyntheticImage::new(raw.width, raw.height, raw.objects)
    }
}

impl SyntheticImage {
    pub fn new(width: u32, height: u32, objects: Vec<ObjectExtent>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "image must have positive area, got {width}x{height}"
            )));
        }
        let bounds = Rect::new(0, 0, width, height);
        for (i, obj) in objects.iter().enumerate() {
            if obj.id as usize != i {
                return Err(Error::InvalidImage(format!(
                    "object ids must be dense 0..n in order; position {i} has id {}",
                    obj.id
                )));
            }
            if obj.rect.is_empty() {
                return Err(Error::InvalidImage(format!("object {} has zero area", obj.id)));
            }
            if !bounds.contains(&obj.rect) {
                return Err(Error::InvalidImage(format!(
                    "object {} at {:?} lies outside the image",
                    obj.id, obj.rect
                )));
            }
        }
        Ok(SyntheticImage {
            width,
            height,
            objects,
        })
    }

    /// Builds an image from bare rectangles, numbering them in order.
    pub fn from_rects(width: u32, height: u32, rects: impl IntoIterator<Item = Rect>) -> Result<Self> {
        let objects = rects
            .into_iter()
            .enumerate()
            .map(|(i, rect)| ObjectExtent { id: i as ObjectId, rect })
            .collect();
        SyntheticImage::new(width, height, objects)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn objects(&self) -> &[ObjectExtent] {
        &self.objects
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn full_region(&self) -> Region {
        Region::new(self.bounds())
    }

    pub fn object_count(&self) -> u64 {
        self.objects.len() as u64
    }

    pub(crate) fn check_bounds(&self, regions: &[Region]) -> Result<()> {
        let bounds = self.bounds();
        for r in regions {
            if r.rect.is_empty() || !bounds.contains(&r.rect) {
                return Err(Error::OutOfBounds {
                    region: r.rect,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }
}

/// Spatial placement of generated objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Uniform,
    /// Object centres drawn from isotropic Gaussians around `clusters`
    /// uniformly placed centres.
    Clustered { clusters: u32, spread: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageGenSpec {
    pub width: u32,
    pub height: u32,
    pub count: u32,
    /// Object side lengths are drawn uniformly from `min_size..=max_size`.
    pub min_size: u32,
    pub max_size: u32,
    pub layout: Layout,
    #[serde(default)]
    pub allow_overlap: bool,
}

impl Default for ImageGenSpec {
    fn default() -> Self {
        ImageGenSpec {
            width: 640,
            height: 480,
            count: 200,
            min_size: 6,
            max_size: 14,
            layout: Layout::Uniform,
            allow_overlap: false,
        }
    }
}

impl ImageGenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image width and height must be positive".into()));
        }
        if self.min_size == 0 || self.min_size > self.max_size {
            return Err(Error::Config(format!(
                "object sizes need 1 <= min_size <= max_size, got {}..={}",
                self.min_size, self.max_size
            )));
        }
        if self.max_size > self.width.min(self.height) {
            return Err(Error::Config(format!(
                "max_size {} does not fit in a {}x{} image",
                self.max_size, self.width, self.height
            )));
        }
        if let Layout::Clustered { clusters, spread } = self.layout {
            if clusters == 0 || !(spread.is_finite() && spread > 0.0) {
                return Err(Error::Config(
                    "clustered layout needs clusters >= 1 and a positive spread".into(),
                ));
            }
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: u32 = 10_000;

/// Generates `spec.count` objects. Deterministic for a fixed `(spec, seed)`.
pub fn generate_image(spec: &ImageGenSpec, seed: RngSeed) -> Result<SyntheticImage> {
    spec.validate()?;
    let mut rng = seed.rng();
    let centres: Vec<(f64, f64)> = match spec.layout {
        Layout::Uniform => Vec::new(),
        Layout::Clustered { clusters, .. } => (0..clusters)
            .map(|_| {
                (
                    rng.random_range(0.0..spec.width as f64),
                    rng.random_range(0.0..spec.height as f64),
                )
            })
            .collect(),
    };
    let jitter = match spec.layout {
        Layout::Clustered { spread, .. } => Some(Normal::new(0.0, spread).expect("validated spread")),
        Layout::Uniform => None,
    };

    let mut placed: Vec<Rect> = Vec::with_capacity(spec.count as usize);
    for n in 0..spec.count {
        let mut attempt = 0;
        let rect = loop {
            if attempt == PLACEMENT_ATTEMPTS {
                return Err(Error::Generation(format!(
                    "could not place object {n} of {} without overlap after {PLACEMENT_ATTEMPTS} attempts",
                    spec.count
                )));
            }
            attempt += 1;
            let w = rng.random_range(spec.min_size..=spec.max_size);
            let h = rng.random_range(spec.min_size..=spec.max_size);
            let (x, y) = match (&jitter, centres.is_empty()) {
                (Some(normal), false) => {
                    let (cx, cy) = centres[rng.random_range(0..centres.len())];
                    let x = cx + normal.sample(&mut rng) - w as f64 / 2.0;
                    let y = cy + normal.sample(&mut rng) - h as f64 / 2.0;
                    (
                        x.round().clamp(0.0, (spec.width - w) as f64) as u32,
                        y.round().clamp(0.0, (spec.height - h) as f64) as u32,
                    )
                }
                _ => (
                    rng.random_range(0..=spec.width - w),
                    rng.random_range(0..=spec.height - h),
                ),
            };
            let candidate = Rect::from_size(x, y, w, h);
            if spec.allow_overlap || placed.iter().all(|p| p.overlap_area(&candidate) == 0) {
                break candidate;
            }
        };
        placed.push(rect);
    }
    SyntheticImage::from_rects(spec.width, spec.height, placed)
}

fn majority_owned(obj: &ObjectExtent, regions: &[Region]) -> bool {
    2 * overlap_with(regions, &obj.rect) >= obj.area()
}

/// Objects that count toward `regions` when the region is judged on its own:
/// more than half of the object's area lies inside. An object with exactly
/// half inside has no competing candidate and is counted as well.
pub fn owned_objects(image: &SyntheticImage, regions: &[Region]) -> Result<Vec<ObjectId>> {
    image.check_bounds(regions)?;
    Ok(image
        .objects
        .iter()
        .filter(|o| majority_owned(o, regions))
        .map(|o| o.id)
        .collect())
}

/// Number of objects counted in `region` under the majority-area rule.
pub fn true_count(image: &SyntheticImage, region: &Region) -> Result<u64> {
    Ok(owned_objects(image, std::slice::from_ref(region))?.len() as u64)
}

/// Hands each of `owned` to the child holding the largest share of its area.
/// A child holding more than half always wins; exact ties go to the child
/// whose top-left corner is lexicographically smallest, then to the lower
/// index. Every owned object that touches a child is assigned exactly once.
pub fn assign_to_children(
    image: &SyntheticImage,
    owned: &[ObjectId],
    children: &[&[Region]],
) -> Vec<Vec<ObjectId>> {
    let corners: Vec<(u32, u32)> = children
        .iter()
        .map(|c| top_left(c).unwrap_or((u32::MAX, u32::MAX)))
        .collect();
    let mut out = vec![Vec::new(); children.len()];
    for &id in owned {
        let rect = image.objects[id as usize].rect;
        let best = children
            .iter()
            .enumerate()
            .map(|(i, c)| (overlap_with(c, &rect), i))
            .filter(|&(ov, _)| ov > 0)
            .min_by(|a, b| b.0.cmp(&a.0).then(corners[a.1].cmp(&corners[b.1])).then(a.1.cmp(&b.1)));
        if let Some((_, i)) = best {
            out[i].push(id);
        }
    }
    out
}

/// Ground-truth counts for a split of `parent` into `children`. The objects
/// counted in the parent are distributed so the child counts sum to the
/// parent count whenever the children tile the parent.
pub fn split_counts(image: &SyntheticImage, parent: &Region, children: &[Region]) -> Result<Vec<u64>> {
    image.check_bounds(children)?;
    let owned = owned_objects(image, std::slice::from_ref(parent))?;
    let child_slices: Vec<&[Region]> = children.iter().map(std::slice::from_ref).collect();
    Ok(assign_to_children(image, &owned, &child_slices)
        .into_iter()
        .map(|v| v.len() as u64)
        .collect())
}

/// Area fraction helper used by tests and reports.
pub fn overlap_fraction(obj: &ObjectExtent, regions: &[Region]) -> f64 {
    overlap_with(regions, &obj.rect) as f64 / obj.area() as f64
}
