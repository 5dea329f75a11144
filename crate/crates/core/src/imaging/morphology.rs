use super::BinaryMask;

/// Dilation with a `(2r+1)²` square structuring element.
pub fn dilate(src: &BinaryMask, radius: usize) -> BinaryMask {
    square_filter(src, radius, true)
}

/// Erosion with a `(2r+1)²` square structuring element. Pixels outside the
/// mask count as unset, so set regions touching the border shrink away from it.
pub fn erode(src: &BinaryMask, radius: usize) -> BinaryMask {
    square_filter(src, radius, false)
}

// Separable: a square window is the product of a row window and a column window.
fn square_filter(src: &BinaryMask, radius: usize, dilation: bool) -> BinaryMask {
    if radius == 0 {
        return src.clone();
    }
    let (w, h) = src.dims();
    let r = radius as isize;
    let window = |get: &dyn Fn(isize) -> bool, len: isize, i: isize| {
        let range = (i - r)..=(i + r);
        if dilation {
            range.filter(|&j| j >= 0 && j < len).any(get)
        } else {
            range.into_iter().all(|j| j >= 0 && j < len && get(j))
        }
    };
    let rows = BinaryMask::from_fn(w, h, |x, y| {
        window(&|j| src.get(j as usize, y), w as isize, x as isize)
    });
    BinaryMask::from_fn(w, h, |x, y| {
        window(&|j| rows.get(x, j as usize), h as isize, y as isize)
    })
}

/// Majority vote over the `(2r+1)²` window with clamp-to-border sampling.
pub fn median_filter(src: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return src.clone();
    }
    let (w, h) = src.dims();
    let r = radius as isize;
    let n = (2 * radius + 1) * (2 * radius + 1);

    // clamped column sums per row, then a sliding window along x
    let mut col_sums = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0;
            for dy in -r..=r {
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                s += src.get(x, yy) as u32;
            }
            col_sums[y * w + x] = s;
        }
    }
    BinaryMask::from_fn(w, h, |x, y| {
        let mut s = 0u32;
        for dx in -r..=r {
            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            s += col_sums[y * w + xx];
        }
        2 * s as usize > n
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(w: usize, h: usize, x: usize, y: usize) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        m.set(x, y, true);
        m
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = single(5, 5, 2, 3);
        assert_eq!(dilate(&m, 0), m);
    }

    #[test]
    fn single_pixel_grows_to_block() {
        let d = dilate(&single(7, 7, 3, 3), 1);
        assert_eq!(d.count(), 9);
        for y in 2..=4 {
            for x in 2..=4 {
                assert!(d.get(x, y));
            }
        }
    }

    #[test]
    fn median_removes_isolated_pixel_and_keeps_full_mask() {
        assert!(median_filter(&single(9, 9, 4, 4), 1).is_empty());
        let full = BinaryMask::from_fn(6, 4, |_, _| true);
        assert_eq!(median_filter(&full, 1), full);
    }

    #[test]
    fn median_on_square_erodes_only_corners() {
        // 5x5 square at (2..7, 2..7) in 11x11. Window counts: corner 4/9,
        // edge 6/9, interior 9/9, outside neighbours <= 3/9.
        let sq = BinaryMask::from_fn(11, 11, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        let out = median_filter(&sq, 1);
        let count = |m: &BinaryMask, x: usize, y: usize| {
            let mut c = 0;
            for yy in y - 1..=y + 1 {
                for xx in x - 1..=x + 1 {
                    c += m.get(xx, yy) as usize;
                }
            }
            c
        };
        for y in 1..10 {
            for x in 1..10 {
                assert_eq!(out.get(x, y), count(&sq, x, y) >= 5, "({x},{y})");
            }
        }
        assert_eq!(out.count(), 21);
        assert!(!out.get(2, 2) && out.get(3, 2) && out.get(4, 4));
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.15), w * h)
                .prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn dilation_composes(m in mask_strategy(), r1 in 0usize..3, r2 in 0usize..3) {
            prop_assert_eq!(dilate(&m, r1 + r2), dilate(&dilate(&m, r1), r2));
        }

        #[test]
        fn dilation_is_monotone(m in mask_strategy(), extra in any::<u64>(), r in 0usize..3) {
            let mut bigger = m.clone();
            for (i, b) in bigger.bits_mut().iter_mut().enumerate() {
                if extra >> (i % 64) & 1 == 1 { *b = true; }
            }
            prop_assert!(dilate(&m, r).is_subset_of(&dilate(&bigger, r)));
        }

        #[test]
        fn erosion_is_inside_source(m in mask_strategy(), r in 0usize..3) {
            prop_assert!(erode(&m, r).is_subset_of(&m));
        }
    }
}
