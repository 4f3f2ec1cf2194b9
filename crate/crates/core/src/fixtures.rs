//! Small hand-built scenarios for tests, examples and demos.

use crate::geom::Rect;
use crate::hierarchy::{frontier_clustering, Clustering, HFrontier, Hierarchy, HierarchySpec, Item, ItemId};
use crate::image::SyntheticImage;
use crate::segtree::{SegNode, SegTree};

fn grid_of(rect: Rect, n: u32) -> impl Iterator<Item = Rect> {
    let cols = ((rect.width() - 2) / 6).max(1);
    (0..n).map(move |i| {
        let x = rect.x0 + 2 + 6 * (i % cols);
        let y = rect.y0 + 2 + 6 * (i / cols);
        Rect::new(x, y, x + 4, y + 4)
    })
}

/// A 300x100 image with 45 small objects and a two-level tree:
///
/// ```text
/// V0 (45)
/// ├── V1 (18): V3 (10), V4 (8)
/// └── V2 (27): V5 (9), V6 (8), V7 (10)
/// ```
///
/// With threshold 20 and exact workers, drill-down asks V0, V1, V2, V5, V6,
/// V7 and stops on the frontier {V1, V5, V6, V7}.
pub fn two_level_scenario() -> (SyntheticImage, SegTree) {
    let v3 = Rect::new(0, 0, 100, 50);
    let v4 = Rect::new(0, 50, 100, 100);
    let v5 = Rect::new(100, 0, 167, 100);
    let v6 = Rect::new(167, 0, 234, 100);
    let v7 = Rect::new(234, 0, 300, 100);
    let objects: Vec<Rect> = [(v3, 10), (v4, 8), (v5, 9), (v6, 8), (v7, 10)]
        .into_iter()
        .flat_map(|(r, n)| grid_of(r, n))
        .collect();
    let image = SyntheticImage::from_rects(300, 100, objects).expect("fixture image is valid");
    let root = SegNode::split(
        0,
        Rect::new(0, 0, 300, 100),
        vec![
            SegNode::split(1, Rect::new(0, 0, 100, 100), vec![SegNode::leaf(3, v3), SegNode::leaf(4, v4)]),
            SegNode::split(
                2,
                Rect::new(100, 0, 300, 100),
                vec![SegNode::leaf(5, v5), SegNode::leaf(6, v6), SegNode::leaf(7, v7)],
            ),
        ],
    );
    let tree = SegTree::from_nodes(&root).expect("fixture tree is valid");
    (image, tree)
}

/// Twelve coloured shapes with two ways to organize them.
#[derive(Clone, Debug)]
pub struct ShapesColors {
    pub items: Vec<Item>,
    /// All > {Warm > {Red, Yellow}, Cool > {Blue, Green}}.
    pub color: Hierarchy,
    /// All > {Quadrilaterals > {Squares, Rectangles},
    /// Triangles > {Scalene, Equilateral}, Circular > {Circles, Ellipses}}.
    pub shape: Hierarchy,
    /// Workers 1-5: color leaves, warm/cool, shape leaves, a mixed shape
    /// frontier, and the three shape families.
    pub workers: Vec<Clustering>,
}

pub const SHAPE_NAMES: [&str; 12] = ["sq1", "sq2", "re1", "re2", "sc1", "sc2", "eq1", "eq2", "ci1", "ci2", "el1", "el2"];
const COLORS: [&str; 4] = ["red", "blue", "yellow", "green"];

pub fn shapes_colors() -> ShapesColors {
    let shape_of = ["square", "rectangle", "scalene", "equilateral", "circle", "ellipse"];
    let items: Vec<Item> = (0..12u32)
        .map(|i| {
            Item::new(
                i,
                [
                    SHAPE_NAMES[i as usize].to_string(),
                    shape_of[i as usize / 2].to_string(),
                    COLORS[i as usize % 4].to_string(),
                ],
            )
        })
        .collect();
    let with_color = |c: usize| -> Vec<ItemId> { (0..12).filter(|i| i % 4 == c as u32).collect() };
    let color = Hierarchy::from_spec(&HierarchySpec::node(
        "All",
        vec![
            HierarchySpec::node(
                "Warm",
                vec![HierarchySpec::leaf("Red", with_color(0)), HierarchySpec::leaf("Yellow", with_color(2))],
            ),
            HierarchySpec::node(
                "Cool",
                vec![HierarchySpec::leaf("Blue", with_color(1)), HierarchySpec::leaf("Green", with_color(3))],
            ),
        ],
    ))
    .expect("color hierarchy is valid");
    let shape = Hierarchy::from_spec(&HierarchySpec::node(
        "All",
        vec![
            HierarchySpec::node(
                "Quadrilaterals",
                vec![HierarchySpec::leaf("Squares", [0, 1]), HierarchySpec::leaf("Rectangles", [2, 3])],
            ),
            HierarchySpec::node(
                "Triangles",
                vec![HierarchySpec::leaf("Scalene", [4, 5]), HierarchySpec::leaf("Equilateral", [6, 7])],
            ),
            HierarchySpec::node(
                "Circular",
                vec![HierarchySpec::leaf("Circles", [8, 9]), HierarchySpec::leaf("Ellipses", [10, 11])],
            ),
        ],
    ))
    .expect("shape hierarchy is valid");
    let at = |h: &Hierarchy, labels: &[&str]| -> HFrontier {
        HFrontier::new(labels.iter().map(|l| h.find_label(l).expect("label exists")))
    };
    let frontiers = [
        (&color, at(&color, &["Red", "Yellow", "Blue", "Green"])),
        (&color, at(&color, &["Warm", "Cool"])),
        (&shape, shape.leaf_frontier()),
        (&shape, at(&shape, &["Quadrilaterals", "Scalene", "Equilateral", "Circles", "Ellipses"])),
        (&shape, at(&shape, &["Quadrilaterals", "Triangles", "Circular"])),
    ];
    let workers = frontiers
        .iter()
        .enumerate()
        .map(|(i, (h, f))| {
            frontier_clustering(h, f)
                .expect("fixture frontier is valid")
                .with_worker(i as u32 + 1)
        })
        .collect();
    ShapesColors {
        items,
        color,
        shape,
        workers,
    }
}
