//! 8-connected component labeling.

use crate::types::BinaryMask;

/// Labels set pixels with component numbers `1..=n`, numbered in row-major
/// order of each component's first pixel. Unset pixels get 0.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if bits[n] && labels[n] == 0 {
                        labels[n] = next;
                        stack.push(n);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Components as separate masks, largest first; equal areas keep row-major
/// order of their first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<BinaryMask> {
    let (labels, count) = label_components(mask);
    let (w, h) = (mask.width(), mask.height());
    let mut components: Vec<BinaryMask> = (0..count).map(|_| BinaryMask::empty(w, h)).collect();
    for (idx, &label) in labels.iter().enumerate() {
        if label != 0 {
            components[label as usize - 1].set(idx % w, idx / w, true);
        }
    }
    // Stable sort keeps discovery order, which is first-pixel order.
    components.sort_by_key(|c| std::cmp::Reverse(c.area()));
    components
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, rows: &[&str]) -> BinaryMask {
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryMask::from_bits(w, h, bits).unwrap()
    }

    #[test]
    fn empty_mask_has_no_components() {
        assert!(connected_components(&BinaryMask::empty(5, 5)).is_empty());
    }

    #[test]
    fn disjoint_squares() {
        let m = mask(7, 4, &["##.....", "##..###", "....###", "....###"]);
        let comps = connected_components(&m);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].area(), 9);
        assert_eq!(comps[1].area(), 4);
        assert!(comps[0].get(4, 1));
    }

    #[test]
    fn diagonal_touch_is_one_component() {
        let m = mask(4, 4, &["##..", "##..", "..##", "..##"]);
        let comps = connected_components(&m);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area(), 8);
    }

    #[test]
    fn equal_areas_keep_first_pixel_order() {
        let m = mask(5, 3, &["...#.", ".....", "#...."]);
        let comps = connected_components(&m);
        assert_eq!(comps.len(), 2);
        assert!(comps[0].get(3, 0));
        assert!(comps[1].get(0, 2));
    }
}
