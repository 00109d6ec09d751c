use crate::edgemap::{BinaryMap, EdgeMap};

pub const DEFAULT_MIN_COMPONENT: usize = 5;

/// Neighbours in the order N, NE, E, SE, S, SW, W, NW; outside pixels are 0.
fn neighbours(m: &BinaryMap, y: usize, x: usize) -> [bool; 8] {
    const OFF: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];
    OFF.map(|(dy, dx)| {
        let (yy, xx) = (y as isize + dy, x as isize + dx);
        yy >= 0 && xx >= 0 && (yy as usize) < m.height && (xx as usize) < m.width && m.get(yy as usize, xx as usize)
    })
}

/// Yokoi 8-connectivity number of pixel `(y, x)`. A set pixel whose value
/// is 1 can be deleted without changing the topology of the foreground.
pub fn connectivity_number(m: &BinaryMap, y: usize, x: usize) -> u8 {
    let n = neighbours(m, y, x);
    // Counter-clockwise from east: E, NE, N, NW, W, SW, S, SE.
    let c = [n[2], n[1], n[0], n[7], n[6], n[5], n[4], n[3]].map(|v| u8::from(!v));
    (0..4)
        .map(|i| {
            let k = 2 * i;
            c[k] - c[k] * c[(k + 1) % 8] * c[(k + 2) % 8]
        })
        .sum()
}

/// Clear every 8-connected component with fewer than `min_size` pixels.
pub fn remove_small_components(m: &BinaryMap, min_size: usize) -> BinaryMap {
    let mut out = m.clone();
    let mut seen = vec![false; m.bits.len()];
    let mut stack = Vec::new();
    let mut comp = Vec::new();
    for start in 0..m.bits.len() {
        if !m.bits[start] || seen[start] {
            continue;
        }
        comp.clear();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (y, x) = (i / m.width, i % m.width);
            for yy in y.saturating_sub(1)..=(y + 1).min(m.height - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(m.width - 1) {
                    let j = yy * m.width + xx;
                    if m.bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if comp.len() < min_size {
            comp.iter().for_each(|&i| out.bits[i] = false);
        }
    }
    out
}

fn removable(m: &BinaryMap, y: usize, x: usize) -> bool {
    let b = neighbours(m, y, x).iter().filter(|&&v| v).count();
    b >= 2 && connectivity_number(m, y, x) == 1
}

/// Two-subiteration thinning followed by a sweep that deletes any remaining
/// simple non-endpoint pixel. Candidates of each subiteration are found in
/// parallel and then deleted one by one, each only while it is still simple,
/// so components never split or vanish.
pub fn thin(m: &BinaryMap) -> BinaryMap {
    let mut cur = m.clone();
    let mut candidates = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            candidates.clear();
            for y in 0..cur.height {
                for x in 0..cur.width {
                    if !cur.get(y, x) {
                        continue;
                    }
                    let p = neighbours(&cur, y, x);
                    let b = p.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
                    let ok = if pass == 0 {
                        !(n && e && s) && !(e && s && w)
                    } else {
                        !(n && e && w) && !(n && s && w)
                    };
                    if (2..=6).contains(&b) && a == 1 && ok {
                        candidates.push((y, x));
                    }
                }
            }
            for &(y, x) in &candidates {
                if removable(&cur, y, x) {
                    cur.set(y, x, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    loop {
        let mut changed = false;
        for y in 0..cur.height {
            for x in 0..cur.width {
                if cur.get(y, x) && removable(&cur, y, x) {
                    cur.set(y, x, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    cur
}

/// Binarize at 0.5, drop small components, thin, and keep the original
/// confidences on the surviving pixels.
pub fn postprocess_morphological(e: &EdgeMap, min_component: usize) -> EdgeMap {
    let mask = thin(&remove_small_components(&e.binarize(0.5), min_component));
    let conf = e
        .confidence()
        .iter()
        .zip(&mask.bits)
        .map(|(&c, &keep)| if keep { c } else { 0.0 })
        .collect();
    EdgeMap::new(e.height(), e.width(), conf).expect("mask preserves shape and range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(rows: &[&str]) -> BinaryMap {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMap::new(h, w, rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect()).unwrap()
    }

    fn component_count(m: &BinaryMap) -> usize {
        let mut n = 0;
        let mut cur = m.clone();
        while let Some(i) = cur.bits.iter().position(|&b| b) {
            n += 1;
            let mut probe = BinaryMap::empty(m.height, m.width);
            probe.bits[i] = true;
            // Grow the component containing `i` by repeated dilation.
            loop {
                let mut grown = probe.clone();
                for j in 0..probe.bits.len() {
                    if probe.bits[j] {
                        let (y, x) = (j / m.width, j % m.width);
                        for yy in y.saturating_sub(1)..=(y + 1).min(m.height - 1) {
                            for xx in x.saturating_sub(1)..=(x + 1).min(m.width - 1) {
                                if cur.get(yy, xx) {
                                    grown.set(yy, xx, true);
                                }
                            }
                        }
                    }
                }
                if grown == probe {
                    break;
                }
                probe = grown;
            }
            for (c, p) in cur.bits.iter_mut().zip(&probe.bits) {
                *c &= !p;
            }
        }
        n
    }

    #[test]
    fn connectivity_numbers() {
        let line = map(&["...", "###", "..."]);
        assert_eq!(connectivity_number(&line, 1, 1), 2);
        assert_eq!(connectivity_number(&line, 1, 0), 1);
        let full = map(&["###", "###", "###"]);
        assert_eq!(connectivity_number(&full, 1, 1), 0);
        let corner = map(&["##.", ".#.", "..."]);
        assert_eq!(connectivity_number(&corner, 0, 1), 1);
    }

    #[test]
    fn zero_map_unchanged() {
        let e = EdgeMap::zeros(8, 8);
        assert_eq!(postprocess_morphological(&e, 5), e);
    }

    #[test]
    fn solid_block() {
        let mut conf = vec![0.0; 49];
        for y in 2..5 {
            for x in 2..5 {
                conf[y * 7 + x] = 0.8;
            }
        }
        let e = EdgeMap::new(7, 7, conf).unwrap();
        let kept = postprocess_morphological(&e, 4);
        let n = kept.binarize(0.5).count();
        assert!((1..9).contains(&n));
        assert!(kept.confidence().iter().all(|&c| c == 0.0 || c == 0.8));
        assert_eq!(postprocess_morphological(&e, 10).binarize(0.5).count(), 0);
    }

    #[test]
    fn thin_lines_survive() {
        let m = map(&["..........", ".########.", "..........", ".########.", ".........."]);
        assert_eq!(thin(&m), m);
        let e = m.to_edge_map();
        assert_eq!(postprocess_morphological(&e, 5), e);
    }

    #[test]
    fn small_components_removed() {
        let m = map(&["#....", ".....", "..###", "..#..", "....."]);
        let out = remove_small_components(&m, 2);
        assert!(!out.get(0, 0));
        assert_eq!(out.count(), 4);
    }

    #[test]
    fn square_is_not_erased() {
        let m = map(&["....", ".##.", ".##.", "...."]);
        assert!(thin(&m).count() >= 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn skeleton_properties(bits in proptest::collection::vec(proptest::bool::weighted(0.45), 144), min in 1usize..8) {
            let m = BinaryMap::new(12, 12, bits).unwrap();
            let cleaned = remove_small_components(&m, min);
            let out = thin(&cleaned);
            for (o, c) in out.bits.iter().zip(&cleaned.bits) {
                prop_assert!(!o || *c);
            }
            prop_assert_eq!(component_count(&out), component_count(&cleaned));
            for y in 0..12 {
                for x in 0..12 {
                    if out.get(y, x) {
                        prop_assert!(!removable(&out, y, x));
                    }
                }
            }
            prop_assert_eq!(thin(&out), out.clone());
        }
    }
}
