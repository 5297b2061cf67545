use super::{Patch, SensorThresholds, Sensors};

/// Cells where some indicator exceeds its threshold.
pub fn tag_cells(s: &Sensors, t: &SensorThresholds) -> Vec<bool> {
    (0..s.emb.len())
        .map(|k| {
            let m = (s.emb[k] / t.tau_emb).max(s.pml[k] / t.tau_pml).max(s.sol[k] / t.tau_sol);
            m > 1.0
        })
        .collect()
}

/// Chebyshev dilation by `r` cells.
pub fn dilate(mask: &[bool], nx: usize, ny: usize, r: usize) -> Vec<bool> {
    let mut rows = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if mask[j * nx + i] {
                for ii in i.saturating_sub(r)..(i + r + 1).min(nx) {
                    rows[j * nx + ii] = true;
                }
            }
        }
    }
    let mut out = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if rows[j * nx + i] {
                for jj in j.saturating_sub(r)..(j + r + 1).min(ny) {
                    out[jj * nx + i] = true;
                }
            }
        }
    }
    out
}

/// Chebyshev erosion by `r` cells; cells outside the array count as unset.
pub fn erode(mask: &[bool], nx: usize, ny: usize, r: usize) -> Vec<bool> {
    let inv: Vec<bool> = mask.iter().map(|b| !b).collect();
    let grown = dilate(&inv, nx, ny, r);
    (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let inside = i >= r && j >= r && i + r < nx && j + r < ny;
            inside && !grown[k]
        })
        .collect()
}

/// Exact rectangle cover of a mask by merging identical row runs.
pub fn decompose(mask: &[bool], nx: usize, ny: usize) -> Vec<Patch> {
    let mut done = Vec::new();
    let mut open: Vec<Patch> = Vec::new();
    for j in 0..ny {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < nx {
            if mask[j * nx + i] {
                let s = i;
                while i < nx && mask[j * nx + i] {
                    i += 1;
                }
                runs.push((s, i));
            } else {
                i += 1;
            }
        }
        let mut next = Vec::with_capacity(runs.len());
        for (s, e) in runs {
            if let Some(pos) = open.iter().position(|p| p.i0 == s && p.i1 == e) {
                let mut p = open.swap_remove(pos);
                p.j1 = j + 1;
                next.push(p);
            } else {
                next.push(Patch::new(s, j, e, j + 1));
            }
        }
        done.append(&mut open);
        open = next;
    }
    done.append(&mut open);
    done.sort_by_key(|p| (p.j0, p.i0));
    done
}

/// Tag, buffer, align to tiles, clip to `allowed` and cover with rectangles.
pub fn tag_and_cluster(s: &Sensors, t: &SensorThresholds, nx: usize, ny: usize, tile: usize, allowed: Option<&[bool]>) -> Vec<Patch> {
    tag_and_cluster_aligned(s, t, (nx, ny), tile, allowed, (0, 0))
}

/// As [`tag_and_cluster`] on a window whose first cell has level index `origin`; tiles follow level indices.
pub(crate) fn tag_and_cluster_aligned(
    s: &Sensors,
    t: &SensorThresholds,
    (nx, ny): (usize, usize),
    tile: usize,
    allowed: Option<&[bool]>,
    origin: (usize, usize),
) -> Vec<Patch> {
    let tags = dilate(&tag_cells(s, t), nx, ny, t.buffer_cells);
    let (ti0, tj0) = (origin.0 / tile, origin.1 / tile);
    let tnx = (origin.0 + nx).div_ceil(tile) - ti0;
    let tny = (origin.1 + ny).div_ceil(tile) - tj0;
    let tile_of = |k: usize| ((origin.1 + k / nx) / tile - tj0) * tnx + (origin.0 + k % nx) / tile - ti0;
    let mut tiles = vec![false; tnx * tny];
    for (k, &b) in tags.iter().enumerate() {
        if b {
            tiles[tile_of(k)] = true;
        }
    }
    let mask: Vec<bool> = (0..nx * ny).map(|k| tiles[tile_of(k)] && allowed.is_none_or(|a| a[k])).collect();
    decompose(&mask, nx, ny)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thresholds() -> SensorThresholds {
        SensorThresholds { tau_emb: 1.0, tau_pml: 1.0, tau_sol: 1.0, buffer_cells: 2, regrid_interval: 1 }
    }

    fn sensors_with(n: usize, hot: &[usize]) -> Sensors {
        let mut sol = vec![0.0; n];
        for &k in hot {
            sol[k] = 5.0;
        }
        Sensors { emb: vec![0.0; n], pml: vec![0.0; n], sol }
    }

    #[test]
    fn nothing_tagged_gives_no_patches() {
        let s = sensors_with(100, &[]);
        assert!(tag_and_cluster(&s, &thresholds(), 10, 10, 1, None).is_empty());
    }

    #[test]
    fn single_tag_with_buffer_two_is_five_by_five() {
        let s = sensors_with(400, &[10 * 20 + 7]);
        let p = tag_and_cluster(&s, &thresholds(), 20, 20, 1, None);
        assert_eq!(p, vec![Patch::new(5, 8, 10, 13)]);
        assert_eq!(p[0].cells(), 25);
    }

    #[test]
    fn distant_tags_give_disjoint_rectangles() {
        let s = sensors_with(900, &[5 * 30 + 5, 24 * 30 + 24]);
        let p = tag_and_cluster(&s, &thresholds(), 30, 30, 1, None);
        assert_eq!(p.len(), 2);
        let (a, b) = (p[0], p[1]);
        assert!(a.i1 <= b.i0 || b.i1 <= a.i0 || a.j1 <= b.j0 || b.j1 <= a.j0);
    }

    #[test]
    fn tiles_align_rectangles() {
        let s = sensors_with(400, &[10 * 20 + 7]);
        let p = tag_and_cluster(&s, &thresholds(), 20, 20, 4, None);
        for r in &p {
            assert!(r.i0 % 4 == 0 && r.j0 % 4 == 0);
        }
    }

    #[test]
    fn clipping_respects_allowed_region() {
        let s = sensors_with(400, &[10 * 20 + 10]);
        let allowed: Vec<bool> = (0..400).map(|k| k % 20 < 11).collect();
        let p = tag_and_cluster(&s, &thresholds(), 20, 20, 1, Some(&allowed));
        assert!(p.iter().all(|r| r.i1 <= 11));
    }

    #[test]
    fn decompose_covers_exactly() {
        let (nx, ny) = (9, 7);
        let mask: Vec<bool> = (0..nx * ny).map(|k| ((k * 7919) % 5) < 2).collect();
        let rects = decompose(&mask, nx, ny);
        let mut cover = vec![0u8; nx * ny];
        for r in &rects {
            for j in r.j0..r.j1 {
                for i in r.i0..r.i1 {
                    cover[j * nx + i] += 1;
                }
            }
        }
        for k in 0..nx * ny {
            assert_eq!(cover[k], mask[k] as u8);
        }
    }

    #[test]
    fn erosion_shrinks_rectangle() {
        let (nx, ny) = (10, 10);
        let mask: Vec<bool> = (0..100).map(|k| (2..8).contains(&(k % nx)) && (2..8).contains(&(k / nx))).collect();
        let e = erode(&mask, nx, ny, 2);
        assert_eq!(decompose(&e, nx, ny), vec![Patch::new(4, 4, 6, 6)]);
    }
}
