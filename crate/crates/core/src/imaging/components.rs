//! Connected-component labelling (two-pass, union-find).

use serde::{Deserialize, Serialize};

use super::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_int(n: u32) -> Option<Self> {
        match n {
            4 => Some(Self::Four),
            8 => Some(Self::Eight),
            _ => None,
        }
    }
}

/// Dense labels: 0 is background, components are numbered `1..=count` in
/// raster order of their first pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

/// Per-component summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStats {
    pub label: u32,
    pub area: usize,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
    pub sum_x: f64,
    pub sum_y: f64,
}

impl ComponentStats {
    pub fn centroid(&self) -> (f64, f64) {
        (self.sum_x / self.area as f64, self.sum_y / self.area as f64)
    }

    pub fn bbox_width(&self) -> usize {
        self.max_x - self.min_x + 1
    }

    pub fn bbox_height(&self) -> usize {
        self.max_y - self.min_y + 1
    }
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn component_count(&self) -> usize {
        self.count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn stats(&self) -> Vec<ComponentStats> {
        let mut stats: Vec<ComponentStats> = (1..=self.count as u32)
            .map(|label| ComponentStats {
                label,
                area: 0,
                min_x: usize::MAX,
                min_y: usize::MAX,
                max_x: 0,
                max_y: 0,
                sum_x: 0.0,
                sum_y: 0.0,
            })
            .collect();
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 0 {
                continue;
            }
            let (x, y) = (i % self.width, i / self.width);
            let s = &mut stats[l as usize - 1];
            s.area += 1;
            s.min_x = s.min_x.min(x);
            s.min_y = s.min_y.min(y);
            s.max_x = s.max_x.max(x);
            s.max_y = s.max_y.max(y);
            s.sum_x += x as f64;
            s.sum_y += y as f64;
        }
        stats
    }

    /// Mask of the pixels whose label satisfies `keep`.
    pub fn select(&self, keep: impl Fn(u32) -> bool) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l != 0 && keep(l)).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("label map dimensions")
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let p = self.parent[a as usize];
            self.parent[a as usize] = self.parent[p as usize];
            a = p;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller provisional label as root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

pub fn connected_components(src: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (w, h) = src.dims();
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind { parent: vec![0] };
    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
    };

    for y in 0..h {
        for x in 0..w {
            if !src.get(x, y) {
                continue;
            }
            let mut label = 0u32;
            for &(dx, dy) in offsets {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize {
                    continue;
                }
                let n = provisional[ny as usize * w + nx as usize];
                if n == 0 {
                    continue;
                }
                if label == 0 {
                    label = n;
                } else {
                    uf.union(label, n);
                }
            }
            if label == 0 {
                label = uf.parent.len() as u32;
                uf.parent.push(label);
            }
            provisional[y * w + x] = label;
        }
    }

    // Second pass: resolve roots and renumber in raster order of first pixel.
    let mut dense = vec![0u32; uf.parent.len()];
    let mut count = 0u32;
    for l in provisional.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if dense[root] == 0 {
            count += 1;
            dense[root] = count;
        }
        *l = dense[root];
    }

    LabelMap {
        width: w,
        height: h,
        labels: provisional,
        count: count as usize,
    }
}

/// Remove components smaller than `min_area` pixels.
pub fn remove_small_components(src: &BinaryMask, connectivity: Connectivity, min_area: usize) -> BinaryMask {
    let labels = connected_components(src, connectivity);
    let stats = labels.stats();
    labels.select(|l| stats[l as usize - 1].area >= min_area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn two_squares_two_components() {
        let m = BinaryMask::from_fn(12, 5, |x, y| y < 3 && (x < 3 || (6..9).contains(&x)));
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.component_count(), 2);
        assert_eq!(l.get(0, 0), 1);
        assert_eq!(l.get(6, 0), 2);
    }

    #[test]
    fn diagonal_pixels_depend_on_connectivity() {
        let m = BinaryMask::from_fn(2, 2, |x, y| x == y);
        assert_eq!(connected_components(&m, Connectivity::Four).component_count(), 2);
        assert_eq!(connected_components(&m, Connectivity::Eight).component_count(), 1);
    }

    #[test]
    fn empty_mask_has_no_components() {
        let l = connected_components(&BinaryMask::new(8, 8), Connectivity::Eight);
        assert_eq!(l.component_count(), 0);
        assert!(l.labels().iter().all(|&v| v == 0));
    }

    #[test]
    fn u_shape_merges_late() {
        // the two arms are only joined on the bottom row
        let m = BinaryMask::from_fn(5, 4, |x, y| x == 0 || x == 4 || y == 3);
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.component_count(), 1);
        assert_eq!(l.stats()[0].area, 4 + 4 + 3);
    }

    fn pixel_sets(l: &LabelMap, transpose: bool) -> BTreeSet<Vec<(usize, usize)>> {
        let mut sets = vec![Vec::new(); l.component_count()];
        for y in 0..l.height() {
            for x in 0..l.width() {
                let v = l.get(x, y);
                if v > 0 {
                    sets[v as usize - 1].push(if transpose { (y, x) } else { (x, y) });
                }
            }
        }
        sets.into_iter()
            .map(|mut s| {
                s.sort();
                s
            })
            .collect()
    }

    proptest! {
        #[test]
        fn labels_are_dense_and_transposition_invariant(
            (w, h, bits) in (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), proptest::collection::vec(proptest::bool::weighted(0.4), w * h))
            }),
            eight in any::<bool>(),
        ) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let m = BinaryMask::from_bits(w, h, bits).unwrap();
            let l = connected_components(&m, conn);
            let used: BTreeSet<u32> = l.labels().iter().copied().filter(|&v| v > 0).collect();
            prop_assert_eq!(used, (1..=l.component_count() as u32).collect::<BTreeSet<_>>());

            // raster order: first occurrences appear in increasing label order
            let mut next = 1;
            for &v in l.labels() {
                if v == next { next += 1; }
                prop_assert!(v < next);
            }

            let lt = connected_components(&m.transpose(), conn);
            prop_assert_eq!(l.component_count(), lt.component_count());
            prop_assert_eq!(pixel_sets(&l, false), pixel_sets(&lt, true));
        }
    }
}
